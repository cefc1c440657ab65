use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linops::{Dictionary, Signal, SparseCode};
use crate::measurements::{MeasurementModel, UniformQuantizer};

/// Parameters of the synthetic sparse-signal experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub signal_dim: usize,
    pub atom_count: usize,
    pub sparsity: usize,
    pub count: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { seed: 0, signal_dim: 32, atom_count: 64, sparsity: 4, count: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub dictionary: Dictionary,
    pub codes: Vec<SparseCode>,
    pub signals: Vec<Signal>,
}

fn gaussian_dictionary(rng: &mut ChaCha20Rng, n: usize, m: usize) -> Result<Dictionary> {
    let mut atoms = Array2::<f64>::zeros((n, m));
    // column by column so the stream does not depend on memory layout
    for j in 0..m {
        loop {
            let col: Array1<f64> = Array1::from_shape_fn(n, |_| StandardNormal.sample(rng));
            let norm = col.dot(&col).sqrt();
            if norm > 0.0 {
                atoms.column_mut(j).assign(&(col / norm));
                break;
            }
        }
    }
    Dictionary::new(atoms)
}

/// Seeded Gaussian dictionary with unit columns and `count` K-sparse
/// Gaussian codes with uniform supports. Each signal `x = Dα` is scaled to
/// unit peak amplitude, with the code scaled alongside it.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticSet> {
    let (n, m, k) = (spec.signal_dim, spec.atom_count, spec.sparsity);
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive".into()));
    }
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("sparsity {k} must be in 1..={m}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let dictionary = gaussian_dictionary(&mut rng, n, m)?;

    let mut codes = Vec::with_capacity(spec.count);
    let mut signals = Vec::with_capacity(spec.count);
    while codes.len() < spec.count {
        let mut alpha = Array1::<f64>::zeros(m);
        let mut support = index::sample(&mut rng, m, k).into_vec();
        support.sort_unstable();
        for i in support {
            alpha[i] = StandardNormal.sample(&mut rng);
        }
        let x = dictionary.atoms().dot(&alpha);
        let peak = x.fold(0.0_f64, |p, v| p.max(v.abs()));
        if peak == 0.0 || !peak.is_finite() {
            continue;
        }
        alpha /= peak;
        let mut x = dictionary.atoms().dot(&alpha);
        // pin the peak at exactly one; the change is at rounding level
        let peak = x.fold(0.0_f64, |p, v| p.max(v.abs()));
        x /= peak;
        codes.push(SparseCode::new(alpha)?);
        signals.push(x);
    }
    Ok(SyntheticSet { dictionary, codes, signals })
}

/// Mid-riser quantizer of `[−1, 1]` on `2^bits` levels, `Δ = 2/2^bits`.
/// Inputs beyond the range saturate to the outermost codewords.
pub fn uniform_quantizer_for_bits(bits: u32) -> Result<MeasurementModel> {
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidArgument(format!("bit depth {bits} must be in 1..=16")));
    }
    let step = 2.0 / f64::from(1u32 << bits);
    Ok(MeasurementModel::UniformQuantizer(UniformQuantizer::saturating(step, 1.0 - 0.5 * step)?))
}
