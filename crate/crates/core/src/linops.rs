//! Dense linear algebra used by the solvers: dictionaries, sparse codes,
//! spectral norms, proximal operators and a small Cholesky solver.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis};

use crate::error::{check_len, Error, Result};

/// A clean or estimated signal.
pub type Signal = Array1<f64>;

/// An `N x M` matrix whose columns are the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Array2<f64>,
}

impl Dictionary {
    pub fn new(atoms: Array2<f64>) -> Result<Self> {
        if atoms.nrows() == 0 || atoms.ncols() == 0 {
            return Err(Error::InvalidArgument("dictionary must be non-empty".into()));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("dictionary entries must be finite".into()));
        }
        Ok(Self { atoms })
    }

    /// Signal dimension `N`.
    pub fn signal_dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms `M`.
    pub fn atom_count(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn atoms(&self) -> ArrayView2<'_, f64> {
        self.atoms.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.atoms
    }

    pub fn atom(&self, i: usize) -> ArrayView1<'_, f64> {
        self.atoms.column(i)
    }

    /// `D α`
    pub fn synthesize(&self, code: &SparseCode) -> Signal {
        self.atoms.dot(&code.coeffs)
    }

    /// `Dᵀ x`
    pub fn analyze(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.atoms.t().dot(&x)
    }

    pub fn column_norms(&self) -> Array1<f64> {
        self.atoms.map_axis(Axis(0), |c| c.dot(&c).sqrt())
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self.atoms.view())
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut Array2<f64> {
        &mut self.atoms
    }
}

/// Coefficient vector `α` over the atoms of a dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    coeffs: Array1<f64>,
}

impl SparseCode {
    pub fn new(coeffs: Array1<f64>) -> Result<Self> {
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("code coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(atom_count: usize) -> Self {
        Self { coeffs: Array1::zeros(atom_count) }
    }

    pub fn coeffs(&self) -> ArrayView1<'_, f64> {
        self.coeffs.view()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v.abs()).sum()
    }

    pub fn nonzeros(&self) -> usize {
        self.coeffs.iter().filter(|v| **v != 0.0).count()
    }

    pub(crate) fn from_raw(coeffs: Array1<f64>) -> Self {
        Self { coeffs }
    }
}

/// Overcomplete DCT-II dictionary with unit-norm columns.
///
/// Atom `k` samples `cos(π (n + ½) k / M)` for `n = 0..N`. For `M = N` this is
/// the orthonormal DCT-II basis.
pub fn dct_dictionary(signal_dim: usize, atom_count: usize) -> Result<Dictionary> {
    if signal_dim == 0 || atom_count == 0 {
        return Err(Error::InvalidArgument("dictionary dimensions must be positive".into()));
    }
    if atom_count < signal_dim {
        return Err(Error::InvalidArgument(format!(
            "atom count {atom_count} is smaller than signal dimension {signal_dim}"
        )));
    }
    let m = atom_count as f64;
    let mut atoms = Array2::from_shape_fn((signal_dim, atom_count), |(n, k)| {
        (PI * (n as f64 + 0.5) * k as f64 / m).cos()
    });
    for mut col in atoms.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col /= norm;
    }
    Dictionary::new(atoms)
}

const POWER_MAX_ITERS: usize = 1000;
const POWER_TOL: f64 = 1e-8;

/// Largest singular value, by power iteration on `XᵀX`.
///
/// Starts from the normalized all-ones vector and stops once the Rayleigh
/// quotient changes by less than `1e-8` relative (at most 1000 iterations).
/// If the start vector lies in the null space, the iteration restarts from
/// the canonical vector of the largest column.
pub fn spectral_norm(matrix: ArrayView2<'_, f64>) -> f64 {
    let cols = matrix.ncols();
    if cols == 0 || matrix.nrows() == 0 {
        return 0.0;
    }
    let start = Array1::from_elem(cols, 1.0 / (cols as f64).sqrt());
    match power_iteration(matrix, start) {
        Some(v) => v,
        None => {
            let norms = matrix.map_axis(Axis(0), |c| c.dot(&c));
            let (best, &energy) = norms
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            if energy == 0.0 {
                return 0.0;
            }
            let mut e = Array1::zeros(cols);
            e[best] = 1.0;
            power_iteration(matrix, e).unwrap_or(0.0)
        }
    }
}

fn power_iteration(matrix: ArrayView2<'_, f64>, mut v: Array1<f64>) -> Option<f64> {
    let mut rayleigh = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = matrix.dot(&v);
        let next = w.dot(&w);
        let mut z = matrix.t().dot(&w);
        let norm = z.dot(&z).sqrt();
        if norm == 0.0 {
            return None;
        }
        z /= norm;
        v = z;
        let converged = (next - rayleigh).abs() <= POWER_TOL * next;
        rayleigh = next;
        if converged {
            break;
        }
    }
    // Rayleigh quotient of the final vector.
    let w = matrix.dot(&v);
    Some(w.dot(&w).max(rayleigh).sqrt())
}

/// Element-wise soft threshold `sign(v)·max(|v| − t, 0)`.
pub fn prox_l1(v: ArrayView1<'_, f64>, threshold: f64) -> Result<Array1<f64>> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be non-negative, got {threshold}")));
    }
    let mut out = v.to_owned();
    soft_threshold_in_place(out.view_mut(), threshold);
    Ok(out)
}

/// Keeps the `sparsity` largest-magnitude entries; ties go to the lower index.
pub fn prox_l0_topk(v: ArrayView1<'_, f64>, sparsity: usize) -> Result<Array1<f64>> {
    if sparsity == 0 || sparsity > v.len() {
        return Err(Error::InvalidArgument(format!(
            "sparsity {sparsity} out of range 1..={}",
            v.len()
        )));
    }
    let mut out = v.to_owned();
    let mut scratch = Vec::with_capacity(v.len());
    hard_threshold_in_place(out.view_mut(), sparsity, &mut scratch);
    Ok(out)
}

pub(crate) fn soft_threshold_in_place(mut v: ArrayViewMut1<'_, f64>, t: f64) {
    if t == 0.0 {
        return;
    }
    v.mapv_inplace(|x| {
        if x > t {
            x - t
        } else if x < -t {
            x + t
        } else {
            0.0
        }
    });
}

pub(crate) fn hard_threshold_in_place(
    mut v: ArrayViewMut1<'_, f64>,
    sparsity: usize,
    scratch: &mut Vec<usize>,
) {
    if sparsity >= v.len() {
        return;
    }
    scratch.clear();
    scratch.extend(0..v.len());
    // Magnitude descending, index ascending on ties.
    let cmp = |a: &usize, b: &usize| v[*b].abs().total_cmp(&v[*a].abs()).then(a.cmp(b));
    scratch.select_nth_unstable_by(sparsity - 1, cmp);
    for &i in &scratch[sparsity..] {
        v[i] = 0.0;
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Array2<f64>,
}

/// Largest condition estimate accepted by [`Cholesky::factor`].
pub const MAX_CONDITION: f64 = 1e12;

impl Cholesky {
    /// Factors `a = L Lᵀ`. The condition estimate is `(max Lᵢᵢ / min Lᵢᵢ)²`;
    /// anything above [`MAX_CONDITION`] is rejected as singular.
    pub fn factor(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        check_len(n, a.ncols())?;
        let mut lower = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= lower[[j, k]] * lower[[j, k]];
            }
            if !(diag > 0.0) {
                return Err(Error::SingularModel { condition: f64::INFINITY });
            }
            let ljj = diag.sqrt();
            lower[[j, j]] = ljj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= lower[[i, k]] * lower[[j, k]];
                }
                lower[[i, j]] = s / ljj;
            }
        }
        let diag = lower.diag();
        let max = diag.fold(0.0_f64, |m, v| m.max(*v));
        let min = diag.fold(f64::INFINITY, |m, v| m.min(*v));
        let condition = (max / min).powi(2);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularModel { condition });
        }
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let n = self.dim();
        check_len(n, b.len())?;
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        Ok(y)
    }
}
