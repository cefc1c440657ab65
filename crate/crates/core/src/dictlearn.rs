//! Consistent dictionary learning.
//!
//! Alternates consistent sparse coding of every training signal with
//! projected gradient steps on the dictionary, where the projection keeps
//! every atom inside the unit ball.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{check_len, Error, Result};
use crate::linops::{spectral_norm, Dictionary, Signal, SparseCode};
use crate::measurements::Observation;
use crate::parallel::{map_indexed, Execution};
use crate::solvers::{objective, sparse_code_batch, SolverConfig, StepSize};

#[derive(Debug, Clone, PartialEq)]
pub struct DictLearnConfig {
    pub outer_iters: usize,
    /// Projected gradient steps per dictionary update.
    pub dict_iters: usize,
    /// Sparse coding step; `max_iters` is the per-outer-iteration budget.
    pub coding: SolverConfig,
    /// `Auto` re-estimates `1/‖A‖₂²` from the current codes.
    pub dict_step: StepSize,
    pub exec: Execution,
}

impl Default for DictLearnConfig {
    fn default() -> Self {
        Self {
            outer_iters: 50,
            dict_iters: 20,
            coding: SolverConfig::l0(32).with_max_iters(20),
            dict_step: StepSize::Auto,
            exec: Execution::default(),
        }
    }
}

/// Observations of `T` signals through one model family.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    observations: Vec<Observation>,
    references: Option<Vec<Signal>>,
}

impl TrainingSet {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let Some(first) = observations.first() else {
            return Err(Error::InvalidArgument("training set is empty".into()));
        };
        let n = first.signal_len();
        let family = std::mem::discriminant(first.model());
        for o in &observations {
            check_len(n, o.signal_len())?;
            if std::mem::discriminant(o.model()) != family {
                return Err(Error::InvalidArgument("observations mix measurement families".into()));
            }
        }
        Ok(Self { observations, references: None })
    }

    /// Attaches clean signals used only for evaluation.
    pub fn with_references(mut self, references: Vec<Signal>) -> Result<Self> {
        check_len(self.observations.len(), references.len())?;
        for r in &references {
            check_len(self.signal_len(), r.len())?;
        }
        self.references = Some(references);
        Ok(self)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn references(&self) -> Option<&[Signal]> {
        self.references.as_deref()
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.observations[0].signal_len()
    }
}

/// Scales every column by `1 / max(‖d_i‖₂, 1)`.
pub fn project_dictionary(dict: &Dictionary) -> Dictionary {
    let mut out = dict.clone();
    project_columns(out.atoms_mut());
    out
}

fn project_columns(atoms: &mut Array2<f64>) {
    for mut col in atoms.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 1.0 {
            col /= norm;
        }
    }
}

/// Stacks codes as the columns of `A` (`M x T`).
pub fn code_matrix(codes: &[SparseCode]) -> Array2<f64> {
    let m = codes.first().map_or(0, SparseCode::len);
    let mut a = Array2::zeros((m, codes.len()));
    for (mut col, c) in a.columns_mut().into_iter().zip(codes) {
        col.assign(&c.coeffs());
    }
    a
}

/// Codes in the form the dictionary step needs: dense `A` when codes are
/// dense, per-signal supports otherwise.
enum Codes {
    Dense(Array2<f64>),
    Sparse(Vec<Vec<(usize, f64)>>),
}

impl Codes {
    fn new(codes: &[SparseCode]) -> Self {
        let m = codes.first().map_or(0, SparseCode::len);
        let nnz: usize = codes.iter().map(SparseCode::nonzeros).sum();
        if 4 * nnz >= m * codes.len() {
            return Codes::Dense(code_matrix(codes));
        }
        Codes::Sparse(
            codes
                .iter()
                .map(|c| c.coeffs().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
                .collect(),
        )
    }
}

/// Residuals `Π(Dα_t) − Dα_t`, one row per signal, and `Σ_t L(Dα_t, y_t)`.
/// Takes `Dᵀ` (`M x N`).
fn residuals(atoms_t: &Array2<f64>, codes: &Codes, train: &TrainingSet, exec: Execution) -> (Array2<f64>, f64) {
    let n = atoms_t.ncols();
    let dense_x = match codes {
        Codes::Dense(a) => Some(a.t().dot(atoms_t)),
        Codes::Sparse(_) => None,
    };
    let rows = map_indexed(train.len(), exec, |t| {
        let xt = match (codes, &dense_x) {
            (_, Some(x)) => x.row(t).to_owned(),
            (Codes::Sparse(s), None) => {
                let mut x = Array1::zeros(n);
                for &(j, v) in &s[t] {
                    x.scaled_add(v, &atoms_t.row(j));
                }
                x
            }
            (Codes::Dense(_), None) => unreachable!(),
        };
        let mut r = Array1::zeros(n);
        train.observations[t].project_into(xt.view(), r.view_mut());
        r -= &xt;
        r
    });
    let mut r = Array2::zeros((train.len(), n));
    let mut total = 0.0;
    // fixed summation order over t
    for (t, row) in rows.iter().enumerate() {
        total += 0.5 * row.dot(row);
        r.row_mut(t).assign(row);
    }
    (r, total)
}

/// `(Σ_t r_t α_tᵀ)ᵀ` from residual rows, accumulated in signal order.
fn gradient_t(r: &Array2<f64>, codes: &Codes, m: usize) -> Array2<f64> {
    match codes {
        Codes::Dense(a) => a.dot(r),
        Codes::Sparse(s) => {
            let mut g = Array2::zeros((m, r.ncols()));
            for (t, support) in s.iter().enumerate() {
                for &(j, v) in support {
                    g.row_mut(j).scaled_add(v, &r.row(t));
                }
            }
            g
        }
    }
}

fn transposed(atoms: ArrayView2<'_, f64>) -> Array2<f64> {
    atoms.t().as_standard_layout().into_owned()
}

/// Descent direction of `Σ_t L(Dα_t, y_t)` with respect to `D`:
/// `Σ_t (Π(Dα_t) − Dα_t) α_tᵀ`.
pub fn dictionary_gradient(dict: &Dictionary, codes: &[SparseCode], train: &TrainingSet) -> Result<Array2<f64>> {
    check_update_dims(dict, codes, train)?;
    let c = Codes::new(codes);
    let (r, _) = residuals(&transposed(dict.atoms()), &c, train, Execution::Sequential);
    Ok(transposed(gradient_t(&r, &c, dict.atom_count()).view()))
}

fn check_update_dims(dict: &Dictionary, codes: &[SparseCode], train: &TrainingSet) -> Result<()> {
    check_len(train.len(), codes.len())?;
    check_len(dict.signal_dim(), train.signal_len())?;
    for c in codes {
        check_len(dict.atom_count(), c.len())?;
    }
    Ok(())
}

/// Result of a dictionary update.
#[derive(Debug, Clone, PartialEq)]
pub struct DictUpdate {
    pub dictionary: Dictionary,
    /// `Σ_t L(Dα_t, y_t)` before the first step and after every step.
    pub costs: Vec<f64>,
    pub step: f64,
}

/// Projected gradient descent on `Σ_t L(Dα_t, y_t)` with the codes fixed.
pub fn dict_update(
    dict: &Dictionary,
    codes: &[SparseCode],
    train: &TrainingSet,
    cfg: &DictLearnConfig,
) -> Result<DictUpdate> {
    check_update_dims(dict, codes, train)?;
    let c = Codes::new(codes);
    let step = match cfg.dict_step {
        StepSize::Fixed(mu) if mu > 0.0 && mu.is_finite() => mu,
        StepSize::Fixed(mu) => return Err(Error::InvalidArgument(format!("step must be positive, got {mu}"))),
        StepSize::Auto => {
            let s = spectral_norm(code_matrix(codes).view());
            if s == 0.0 {
                // all codes are zero: the gradient vanishes
                let (_, cost) = residuals(&transposed(dict.atoms()), &c, train, cfg.exec);
                return Ok(DictUpdate { dictionary: dict.clone(), costs: vec![cost], step: 0.0 });
            }
            1.0 / (s * s)
        }
    };

    // work on Dᵀ so atoms are contiguous rows
    let mut atoms_t = transposed(dict.atoms());
    let m = dict.atom_count();
    let mut costs = Vec::with_capacity(cfg.dict_iters + 1);
    for iteration in 1..=cfg.dict_iters {
        let (r, cost) = residuals(&atoms_t, &c, train, cfg.exec);
        costs.push(cost);
        atoms_t.scaled_add(step, &gradient_t(&r, &c, m));
        for mut atom in atoms_t.rows_mut() {
            let norm = atom.dot(&atom).sqrt();
            if norm > 1.0 {
                atom /= norm;
            }
        }
        if atoms_t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration });
        }
    }
    let (_, cost) = residuals(&atoms_t, &c, train, cfg.exec);
    costs.push(cost);
    Ok(DictUpdate { dictionary: Dictionary::new(transposed(atoms_t.view()))?, costs, step })
}

/// Sum over the training set of `L(Dα_t, y_t) + λΨ(α_t)`.
pub fn total_objective(
    dict: &Dictionary,
    codes: &[SparseCode],
    train: &TrainingSet,
    coding: &SolverConfig,
) -> Result<f64> {
    check_update_dims(dict, codes, train)?;
    let mut total = 0.0;
    for (c, o) in codes.iter().zip(train.observations()) {
        total += objective(dict, c, o, coding)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnTrace {
    pub initial_objective: f64,
    /// Objective after each sparse coding step.
    pub after_coding: Vec<f64>,
    /// Objective after each dictionary step.
    pub after_dictionary: Vec<f64>,
    pub coding_steps: Vec<f64>,
    pub dict_steps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LearnOutput {
    pub dictionary: Dictionary,
    pub codes: Vec<SparseCode>,
    pub trace: LearnTrace,
}

/// Learns a dictionary from zero initial codes.
pub fn learn(train: &TrainingSet, init: &Dictionary, cfg: &DictLearnConfig) -> Result<LearnOutput> {
    let codes = vec![SparseCode::zeros(init.atom_count()); train.len()];
    learn_from(train, init, codes, cfg)
}

/// Alternates sparse coding (warm-started from the previous codes) and
/// dictionary updates for `outer_iters` rounds. Step sizes `1/‖D‖₂²` and
/// `1/‖A‖₂²` are re-estimated every round unless fixed in `cfg`.
pub fn learn_from(
    train: &TrainingSet,
    init: &Dictionary,
    mut codes: Vec<SparseCode>,
    cfg: &DictLearnConfig,
) -> Result<LearnOutput> {
    check_update_dims(init, &codes, train)?;
    cfg.coding.validate(init.atom_count())?;
    let max_norm = init.column_norms().fold(0.0_f64, |m, v| m.max(*v));
    if max_norm > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!("initial dictionary has an atom of norm {max_norm}")));
    }

    let mut dict = init.clone();
    let mut trace = LearnTrace {
        initial_objective: total_objective(&dict, &codes, train, &cfg.coding)?,
        ..Default::default()
    };
    for round in 0..cfg.outer_iters {
        let coding = cfg.coding.resolved(&dict)?;
        if let StepSize::Fixed(mu) = coding.step {
            trace.coding_steps.push(mu);
        }
        let solved = sparse_code_batch(&dict, train.observations(), &codes, &coding, cfg.exec)?;
        codes = solved.into_iter().map(|(c, _)| c).collect();
        trace.after_coding.push(total_objective(&dict, &codes, train, &cfg.coding)?);

        let update = dict_update(&dict, &codes, train, cfg)?;
        dict = update.dictionary;
        trace.dict_steps.push(update.step);
        trace.after_dictionary.push(total_objective(&dict, &codes, train, &cfg.coding)?);
        log::debug!(
            "round {}: objective {:.6e} after coding, {:.6e} after dictionary step",
            round + 1,
            trace.after_coding[round],
            trace.after_dictionary[round]
        );
    }
    if cfg.outer_iters > 0 {
        warn_unused_atoms(&codes);
    }
    Ok(LearnOutput { dictionary: dict, codes, trace })
}

fn warn_unused_atoms(codes: &[SparseCode]) {
    let a = code_matrix(codes);
    let unused: Vec<usize> = a
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, row)| row.iter().all(|v| *v == 0.0))
        .map(|(i, _)| i)
        .collect();
    if !unused.is_empty() {
        log::warn!("{} atoms unused by the final codes: {:?}", unused.len(), unused);
    }
}

pub const DICT_MAGIC: &[u8; 8] = b"NLCSDICT";
pub const DICT_VERSION: u32 = 1;

/// Binary container: magic, version, `N`, `M` (u32 LE), then the entries in
/// column-major order as f64 LE.
pub fn write_dictionary<W: Write>(dict: &Dictionary, mut w: W) -> Result<()> {
    let n = u32::try_from(dict.signal_dim()).map_err(|_| Error::Format("N exceeds u32".into()))?;
    let m = u32::try_from(dict.atom_count()).map_err(|_| Error::Format("M exceeds u32".into()))?;
    w.write_all(DICT_MAGIC)?;
    w.write_all(&DICT_VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&m.to_le_bytes())?;
    for col in dict.atoms().columns() {
        for v in col {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dictionary<R: Read>(mut r: R) -> Result<Dictionary> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DICT_MAGIC {
        return Err(Error::Format("not a dictionary file".into()));
    }
    let mut word = [0u8; 4];
    let mut next_u32 = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = next_u32(&mut r)?;
    if version != DICT_VERSION {
        return Err(Error::Format(format!("unsupported dictionary version {version}")));
    }
    let n = next_u32(&mut r)? as usize;
    let m = next_u32(&mut r)? as usize;
    let mut data = vec![0.0; n * m];
    let mut buf = [0u8; 8];
    for v in &mut data {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after dictionary".into()));
    }
    // column-major on disk
    let atoms = Array2::from_shape_vec((m, n), data)
        .map_err(|e| Error::Format(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    Dictionary::new(atoms)
}

pub fn save_dictionary(dict: &Dictionary, path: &Path) -> Result<()> {
    write_dictionary(dict, BufWriter::new(File::create(path)?))
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary> {
    read_dictionary(BufReader::new(File::open(path)?))
}

/// Text export: one atom per line, entries separated by spaces.
pub fn write_dictionary_text<W: Write>(dict: &Dictionary, mut w: W) -> Result<()> {
    for col in dict.atoms().columns() {
        let line: Vec<String> = col.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dictionary_text<R: BufRead>(r: R) -> Result<Dictionary> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let col = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Format(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = cols.first() {
            check_len(first.len(), col.len())?;
        }
        cols.push(col);
    }
    let m = cols.len();
    let n = cols.first().map_or(0, Vec::len);
    let flat: Vec<f64> = cols.into_iter().flatten().collect();
    let atoms = Array2::from_shape_vec((m, n), flat)
        .map_err(|e| Error::Format(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    Dictionary::new(atoms)
}
