//! Random instance generators and reference implementations shared by the
//! integration tests. The oracles here are written from the definitions and
//! do not call into the library's projection or cost code.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use nlcs::measurements::{apply_measurement, MeasurementModel, Observation, SensingMatrix, UniformQuantizer};
use nlcs::Dictionary;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rand::SeedableRng;

pub type TestRng = ChaCha20Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Clip,
    Quant,
    OneBit,
    Mask,
    Identity,
    Linear,
}

pub const FAMILIES: [Family; 6] =
    [Family::Clip, Family::Quant, Family::OneBit, Family::Mask, Family::Identity, Family::Linear];

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Clip => "clip",
            Family::Quant => "quantizer",
            Family::OneBit => "1-bit",
            Family::Mask => "mask",
            Family::Identity => "identity",
            Family::Linear => "general-linear",
        }
    }
}

pub fn gaussian(n: usize, rng: &mut TestRng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| StandardNormal.sample(rng))
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut TestRng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

/// Gaussian dictionary with unit-norm columns.
pub fn random_dictionary(n: usize, m: usize, rng: &mut TestRng) -> Dictionary {
    let mut a = gaussian_matrix(n, m, rng);
    for mut c in a.columns_mut() {
        let norm = c.dot(&c).sqrt();
        c /= norm;
    }
    Dictionary::new(a).unwrap()
}

pub fn sparse_vector(m: usize, k: usize, rng: &mut TestRng) -> Array1<f64> {
    let mut a = Array1::zeros(m);
    for i in rand::seq::index::sample(rng, m, k) {
        a[i] = StandardNormal.sample(rng);
    }
    a
}

/// Random measurement model of the given family for signals of length `n`,
/// scaled to a signal whose peak magnitude is about `peak`.
pub fn random_model(family: Family, n: usize, peak: f64, rng: &mut TestRng) -> MeasurementModel {
    match family {
        Family::Clip => {
            let upper = peak * rng.random_range(0.2..0.9);
            let lower = -peak * rng.random_range(0.2..0.9);
            MeasurementModel::clip(upper, lower).unwrap()
        }
        Family::Quant => {
            let step = peak * rng.random_range(0.05..0.6);
            MeasurementModel::UniformQuantizer(UniformQuantizer::new(step).unwrap())
        }
        Family::OneBit => MeasurementModel::OneBit,
        Family::Mask => MeasurementModel::Mask((0..n).map(|_| rng.random_bool(0.6)).collect()),
        Family::Identity => MeasurementModel::Identity,
        Family::Linear => {
            let rows = (n / 2).max(1);
            MeasurementModel::GeneralLinear(SensingMatrix::new(gaussian_matrix(rows, n, rng)).unwrap())
        }
    }
}

/// Observation of a random Gaussian signal; returns the observation and the
/// signal it was taken from.
pub fn random_observation(family: Family, n: usize, rng: &mut TestRng) -> (Observation, Array1<f64>) {
    let x = gaussian(n, rng);
    let peak = x.fold(0.0_f64, |m, v| m.max(v.abs()));
    let model = random_model(family, n, peak, rng);
    (apply_measurement(&model, x.view()).unwrap(), x)
}

/// Per-sample feasibility interval of a separable observation, derived from
/// the model definition.
pub fn oracle_bounds(obs: &Observation) -> Vec<(f64, f64)> {
    let y = obs.values();
    match obs.model() {
        MeasurementModel::Identity => y.iter().map(|&v| (v, v)).collect(),
        MeasurementModel::Mask(m) => y
            .iter()
            .zip(m)
            .map(|(&v, &r)| if r { (v, v) } else { (f64::NEG_INFINITY, f64::INFINITY) })
            .collect(),
        MeasurementModel::Clip { upper, lower } => y
            .iter()
            .map(|&v| {
                if v >= *upper {
                    (*upper, f64::INFINITY)
                } else if v <= *lower {
                    (f64::NEG_INFINITY, *lower)
                } else {
                    (v, v)
                }
            })
            .collect(),
        MeasurementModel::UniformQuantizer(q) => {
            y.iter().map(|&v| (v - 0.5 * q.step, v + 0.5 * q.step)).collect()
        }
        MeasurementModel::OneBit => {
            y.iter().map(|&v| if v > 0.0 { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) }).collect()
        }
        other => panic!("no box oracle for {}", other.name()),
    }
}

pub fn oracle_project(obs: &Observation, x: ArrayView1<'_, f64>) -> Array1<f64> {
    if let MeasurementModel::GeneralLinear(s) = obs.model() {
        return oracle_affine_projection(s.matrix().view(), obs.values(), x);
    }
    let b = oracle_bounds(obs);
    Array1::from_iter(x.iter().zip(&b).map(|(&v, &(l, u))| v.max(l).min(u)))
}

pub fn oracle_cost(obs: &Observation, x: ArrayView1<'_, f64>) -> f64 {
    let p = oracle_project(obs, x);
    0.5 * x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// `x − Mᵀ w` with `(M Mᵀ) w = M x − y` solved by Gaussian elimination with
/// partial pivoting.
pub fn oracle_affine_projection(m: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, x: ArrayView1<'_, f64>) -> Array1<f64> {
    let g = m.dot(&m.t());
    let r = &m.dot(&x) - &y;
    let w = gauss_solve(g, r);
    &x - &m.t().dot(&w)
}

pub fn gauss_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Array1<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[[i, k]].abs().total_cmp(&a[[j, k]].abs())).unwrap();
        if p != k {
            for j in 0..n {
                a.swap([k, j], [p, j]);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[[i, k]] / a[[k, k]];
            for j in k..n {
                a[[i, j]] -= f * a[[k, j]];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[[i, j]] * x[j]).sum();
        x[i] = (b[i] - s) / a[[i, i]];
    }
    x
}

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(m: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut a = if m.nrows() >= m.ncols() { m.to_owned() } else { m.t().to_owned() };
    let cols = a.ncols();
    for _sweep in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let ap = a.column(p);
                let aq = a.column(q);
                let alpha = ap.dot(&ap);
                let beta = aq.dot(&aq);
                let gamma = ap.dot(&aq);
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let (x, z) = (a[[i, p]], a[[i, q]]);
                    a[[i, p]] = c * x - s * z;
                    a[[i, q]] = s * x + c * z;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = a.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

pub fn norm(v: ArrayView1<'_, f64>) -> f64 {
    v.dot(&v).sqrt()
}

pub fn dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max(v, 0)` and `min(v, 0)`.
pub fn pos(v: f64) -> f64 {
    v.max(0.0)
}

pub fn neg(v: f64) -> f64 {
    v.min(0.0)
}
