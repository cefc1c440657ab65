//! Measurement models, their feasibility sets and the distance-to-set cost.
//!
//! Every model maps a clean signal `x` to an observation `y = f(x)`. The set
//! of signals consistent with `y` is convex for all models here. For the
//! separable models it is a box (one interval per sample, see
//! [`IntervalSet`]); for a general linear sensing matrix it is an affine
//! subspace. The cost of an estimate is half its squared Euclidean distance
//! to that set, and its gradient is `x - Π(x)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Zip};

use crate::error::{check_len, Error, Result};
use crate::linops::{Cholesky, Signal};

/// Relative tolerance used when matching observed values against clipping
/// thresholds or quantizer codewords.
pub const MATCH_TOL: f64 = 1e-9;

fn near(value: f64, target: f64) -> bool {
    (value - target).abs() <= MATCH_TOL * target.abs().max(1.0)
}

/// Per-sample closed intervals `[l_i, u_i]`. `None` marks an unbounded side.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

impl IntervalSet {
    pub fn new(lower: Vec<Option<f64>>, upper: Vec<Option<f64>>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_some_and(|v| !v.is_finite()) || u.is_some_and(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("bound {i} is not finite")));
            }
            if let (Some(l), Some(u)) = (l, u) {
                if l > u {
                    return Err(Error::InvalidArgument(format!("empty interval [{l}, {u}] at {i}")));
                }
            }
        }
        Ok(Self { lower, upper })
    }

    /// Degenerate intervals `[y_i, y_i]`.
    pub fn points(values: ArrayView1<'_, f64>) -> Self {
        let b: Vec<_> = values.iter().map(|v| Some(*v)).collect();
        Self { lower: b.clone(), upper: b }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self, i: usize) -> Option<f64> {
        self.lower[i]
    }

    pub fn upper(&self, i: usize) -> Option<f64> {
        self.upper[i]
    }

    pub fn bounds(&self) -> impl Iterator<Item = (Option<f64>, Option<f64>)> + '_ {
        self.lower.iter().copied().zip(self.upper.iter().copied())
    }

    pub fn contains(&self, x: ArrayView1<'_, f64>) -> bool {
        x.len() == self.len()
            && x.iter().zip(self.bounds()).all(|(&v, (l, u))| {
                l.is_none_or(|l| v >= l) && u.is_none_or(|u| v <= u)
            })
    }

    pub(crate) fn project_into(&self, x: ArrayView1<'_, f64>, mut out: ArrayViewMut1<'_, f64>) {
        for (((o, &v), l), u) in out.iter_mut().zip(x.iter()).zip(&self.lower).zip(&self.upper) {
            *o = clamp(v, *l, *u);
        }
    }

    fn half_sq_distance(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut acc = 0.0;
        for ((&v, l), u) in x.iter().zip(&self.lower).zip(&self.upper) {
            let d = v - clamp(v, *l, *u);
            acc += d * d;
        }
        0.5 * acc
    }
}

#[inline]
fn clamp(v: f64, lower: Option<f64>, upper: Option<f64>) -> f64 {
    let mut out = v;
    if let Some(l) = lower {
        if out < l {
            out = l;
        }
    }
    if let Some(u) = upper {
        if out > u {
            out = u;
        }
    }
    out
}

/// Uniform mid-riser quantizer `Δ⌊x/Δ⌋ + Δ/2`, optionally saturating its
/// codewords to `±max_codeword`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    pub step: f64,
    pub max_codeword: Option<f64>,
}

impl UniformQuantizer {
    pub fn new(step: f64) -> Result<Self> {
        let q = Self { step, max_codeword: None };
        q.validate()?;
        Ok(q)
    }

    pub fn saturating(step: f64, max_codeword: f64) -> Result<Self> {
        let q = Self { step, max_codeword: Some(max_codeword) };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("quantizer step must be positive, got {}", self.step)));
        }
        if let Some(m) = self.max_codeword {
            if !(m > 0.0 && m.is_finite()) || !self.is_codeword_unchecked(m) {
                return Err(Error::InvalidArgument(format!("{m} is not a valid saturation codeword")));
            }
        }
        Ok(())
    }

    pub fn quantize(&self, x: f64) -> f64 {
        let c = self.step * (x / self.step).floor() + 0.5 * self.step;
        match self.max_codeword {
            Some(m) => c.clamp(-m, m),
            None => c,
        }
    }

    fn is_codeword_unchecked(&self, y: f64) -> bool {
        let q = y / self.step - 0.5;
        near(q, q.round())
    }

    pub fn is_codeword(&self, y: f64) -> bool {
        y.is_finite()
            && self.is_codeword_unchecked(y)
            && self.max_codeword.is_none_or(|m| y.abs() <= m * (1.0 + MATCH_TOL))
    }
}

/// One quantizer bin `[lower, upper)` and the codeword it emits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantBin {
    pub codeword: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Quantizer described by an ordered list of contiguous half-open bins.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralQuantizer {
    bins: Vec<QuantBin>,
}

impl GeneralQuantizer {
    pub fn new(bins: Vec<QuantBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidArgument("quantizer needs at least one bin".into()));
        }
        let last = bins.len() - 1;
        for (i, b) in bins.iter().enumerate() {
            if !b.codeword.is_finite() {
                return Err(Error::InvalidArgument(format!("bin {i} codeword is not finite")));
            }
            if (b.lower.is_none() && i != 0) || (b.upper.is_none() && i != last) {
                return Err(Error::InvalidArgument(format!("only outermost bins may be unbounded (bin {i})")));
            }
            if let (Some(l), Some(u)) = (b.lower, b.upper) {
                if !(l < u) {
                    return Err(Error::InvalidArgument(format!("bin {i} is empty")));
                }
            }
            if i > 0 && bins[i - 1].upper != b.lower {
                return Err(Error::InvalidArgument(format!("bins {} and {i} are not contiguous", i - 1)));
            }
            if bins[..i].iter().any(|o| o.codeword == b.codeword) {
                return Err(Error::InvalidArgument(format!("duplicate codeword {}", b.codeword)));
            }
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[QuantBin] {
        &self.bins
    }

    pub fn quantize(&self, x: f64) -> Result<f64> {
        self.bins
            .iter()
            .find(|b| b.lower.is_none_or(|l| x >= l) && b.upper.is_none_or(|u| x < u))
            .map(|b| b.codeword)
            .ok_or_else(|| Error::InvalidArgument(format!("{x} lies outside the quantizer range")))
    }

    pub fn bin_for(&self, codeword: f64) -> Option<&QuantBin> {
        self.bins.iter().find(|b| near(codeword, b.codeword))
    }
}

/// Full-row-rank `L x N` sensing matrix with a cached factor of `M Mᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    matrix: Array2<f64>,
    gram: Cholesky,
}

impl SensingMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() > matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "sensing matrix {}x{} cannot have full row rank",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sensing matrix entries must be finite".into()));
        }
        let gram = Cholesky::factor(matrix.dot(&matrix.t()).view())?;
        Ok(Self { matrix, gram })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn measurements(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn signal_len(&self) -> usize {
        self.matrix.ncols()
    }

    fn project(&self, y: ArrayView1<'_, f64>, x: ArrayView1<'_, f64>) -> Result<Signal> {
        let rhs = self.matrix.dot(&x) - y;
        let w = self.gram.solve(rhs.view())?;
        Ok(&x - &self.matrix.t().dot(&w))
    }
}

/// The measurement map `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementModel {
    Identity,
    /// Diagonal binary sampling: `true` marks an observed sample.
    Mask(Vec<bool>),
    /// Hard clipping at `upper > lower`.
    Clip { upper: f64, lower: f64 },
    UniformQuantizer(UniformQuantizer),
    GeneralQuantizer(GeneralQuantizer),
    /// `sign(x)` with `sign(0) = +1`.
    OneBit,
    GeneralLinear(SensingMatrix),
}

impl MeasurementModel {
    pub fn clip(upper: f64, lower: f64) -> Result<Self> {
        let m = Self::Clip { upper, lower };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Mask(_) => "mask",
            Self::Clip { .. } => "clip",
            Self::UniformQuantizer(_) => "uniform quantizer",
            Self::GeneralQuantizer(_) => "general quantizer",
            Self::OneBit => "one-bit",
            Self::GeneralLinear(_) => "general linear",
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self, Self::GeneralLinear(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Clip { upper, lower } => {
                if !(upper.is_finite() && lower.is_finite() && upper > lower) {
                    return Err(Error::InvalidArgument(format!(
                        "clip thresholds need upper > lower, got {upper} and {lower}"
                    )));
                }
            }
            Self::UniformQuantizer(q) => q.validate()?,
            _ => {}
        }
        Ok(())
    }

    /// Length of the observation produced for a signal of length `n`.
    fn output_len(&self, n: usize) -> usize {
        match self {
            Self::GeneralLinear(s) => s.measurements(),
            _ => n,
        }
    }

    fn check_signal_len(&self, n: usize) -> Result<()> {
        match self {
            Self::Mask(m) => check_len(m.len(), n),
            Self::GeneralLinear(s) => check_len(s.signal_len(), n),
            _ => Ok(()),
        }
    }
}

/// Which branch of the clipping map produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipState {
    Reliable,
    High,
    Low,
}

/// Diagonal masks `(M_r, M_c⁺, M_c⁻)` of a clipped observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipMasks {
    pub reliable: Vec<bool>,
    pub high: Vec<bool>,
    pub low: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
enum Feasible {
    Box(IntervalSet),
    Affine,
}

/// An observed vector together with the model that produced it.
///
/// The feasibility set is built once at construction; observations are
/// immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Array1<f64>,
    model: MeasurementModel,
    clip_states: Option<Vec<ClipState>>,
    feasible: Feasible,
}

impl Observation {
    /// Wraps externally supplied measurements, checking they are in the
    /// range of the model. Clipped samples are detected by matching the
    /// thresholds within [`MATCH_TOL`].
    pub fn new(model: MeasurementModel, values: Array1<f64>) -> Result<Self> {
        model.validate()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observation values must be finite".into()));
        }
        let mut states = None;
        match &model {
            MeasurementModel::Identity => {}
            MeasurementModel::Mask(m) => check_len(m.len(), values.len())?,
            MeasurementModel::Clip { upper, lower } => {
                let mut s = Vec::with_capacity(values.len());
                for (i, &v) in values.iter().enumerate() {
                    if near(v, *upper) {
                        s.push(ClipState::High);
                    } else if near(v, *lower) {
                        s.push(ClipState::Low);
                    } else if v > *lower && v < *upper {
                        s.push(ClipState::Reliable);
                    } else {
                        return Err(Error::InvalidArgument(format!(
                            "sample {i} = {v} lies outside the clipping range"
                        )));
                    }
                }
                states = Some(s);
            }
            MeasurementModel::UniformQuantizer(q) => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !q.is_codeword(**v)) {
                    return Err(Error::InvalidArgument(format!("sample {i} = {v} is not a codeword")));
                }
            }
            MeasurementModel::GeneralQuantizer(q) => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| q.bin_for(**v).is_none()) {
                    return Err(Error::InvalidArgument(format!("sample {i} = {v} is not a codeword")));
                }
            }
            MeasurementModel::OneBit => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| **v != 1.0 && **v != -1.0) {
                    return Err(Error::InvalidArgument(format!("sample {i} = {v} is not a sign")));
                }
            }
            MeasurementModel::GeneralLinear(s) => check_len(s.measurements(), values.len())?,
        }
        Self::assemble(model, values, states)
    }

    /// Clipped observation with explicit per-sample branch labels.
    pub fn with_clip_states(
        values: Array1<f64>,
        upper: f64,
        lower: f64,
        states: Vec<ClipState>,
    ) -> Result<Self> {
        let model = MeasurementModel::clip(upper, lower)?;
        check_len(values.len(), states.len())?;
        Self::assemble(model, values, Some(states))
    }

    fn assemble(model: MeasurementModel, values: Array1<f64>, clip_states: Option<Vec<ClipState>>) -> Result<Self> {
        let feasible = match &model {
            MeasurementModel::GeneralLinear(_) => Feasible::Affine,
            _ => Feasible::Box(build_intervals(&model, values.view(), clip_states.as_deref())?),
        };
        Ok(Self { values, model, clip_states, feasible })
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn clip_states(&self) -> Option<&[ClipState]> {
        self.clip_states.as_deref()
    }

    pub fn clip_masks(&self) -> Option<ClipMasks> {
        let s = self.clip_states.as_ref()?;
        Some(ClipMasks {
            reliable: s.iter().map(|c| *c == ClipState::Reliable).collect(),
            high: s.iter().map(|c| *c == ClipState::High).collect(),
            low: s.iter().map(|c| *c == ClipState::Low).collect(),
        })
    }

    /// Box feasibility set; `None` for general linear observations.
    pub fn intervals(&self) -> Option<&IntervalSet> {
        match &self.feasible {
            Feasible::Box(b) => Some(b),
            Feasible::Affine => None,
        }
    }

    /// Length of the signals this observation constrains.
    pub fn signal_len(&self) -> usize {
        match &self.model {
            MeasurementModel::GeneralLinear(s) => s.signal_len(),
            _ => self.values.len(),
        }
    }

    pub fn project(&self, x: ArrayView1<'_, f64>) -> Result<Signal> {
        check_len(self.signal_len(), x.len())?;
        let mut out = Array1::zeros(x.len());
        self.project_into(x, out.view_mut());
        Ok(out)
    }

    pub fn cost(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        check_len(self.signal_len(), x.len())?;
        Ok(self.cost_unchecked(x))
    }

    pub fn gradient(&self, x: ArrayView1<'_, f64>) -> Result<Signal> {
        let p = self.project(x)?;
        Ok(&x - &p)
    }

    /// `out = Π(x)`; lengths must already agree.
    pub(crate) fn project_into(&self, x: ArrayView1<'_, f64>, mut out: ArrayViewMut1<'_, f64>) {
        match (&self.feasible, &self.model) {
            (Feasible::Box(b), _) => b.project_into(x, out),
            (Feasible::Affine, MeasurementModel::GeneralLinear(s)) => {
                // The factor was validated at construction, so the solve
                // cannot fail on a length we already checked.
                let p = s.project(self.values.view(), x).expect("validated sensing matrix");
                out.assign(&p);
            }
            (Feasible::Affine, _) => unreachable!("affine feasibility only for general linear models"),
        }
    }

    pub(crate) fn cost_unchecked(&self, x: ArrayView1<'_, f64>) -> f64 {
        match &self.feasible {
            Feasible::Box(b) => b.half_sq_distance(x),
            Feasible::Affine => {
                let mut p = Array1::zeros(x.len());
                self.project_into(x, p.view_mut());
                let mut acc = 0.0;
                Zip::from(&x).and(&p).for_each(|a, b| acc += (a - b) * (a - b));
                0.5 * acc
            }
        }
    }
}

fn build_intervals(
    model: &MeasurementModel,
    y: ArrayView1<'_, f64>,
    states: Option<&[ClipState]>,
) -> Result<IntervalSet> {
    let n = y.len();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    match model {
        MeasurementModel::Identity => return Ok(IntervalSet::points(y)),
        MeasurementModel::Mask(m) => {
            for (&v, &r) in y.iter().zip(m) {
                let b = r.then_some(v);
                lower.push(b);
                upper.push(b);
            }
        }
        MeasurementModel::Clip { upper: hi, lower: lo } => {
            let states = states.ok_or(Error::Unsupported("clip observations without masks"))?;
            for (&v, s) in y.iter().zip(states) {
                let (l, u) = match s {
                    ClipState::Reliable => (Some(v), Some(v)),
                    ClipState::High => (Some(*hi), None),
                    ClipState::Low => (None, Some(*lo)),
                };
                lower.push(l);
                upper.push(u);
            }
        }
        MeasurementModel::UniformQuantizer(q) => {
            let h = 0.5 * q.step;
            for &v in y {
                lower.push(Some(v - h));
                upper.push(Some(v + h));
            }
        }
        MeasurementModel::GeneralQuantizer(q) => {
            for &v in y {
                let b = q
                    .bin_for(v)
                    .ok_or_else(|| Error::InvalidArgument(format!("{v} is not a codeword")))?;
                lower.push(b.lower);
                upper.push(b.upper);
            }
        }
        MeasurementModel::OneBit => {
            for &v in y {
                if v >= 0.0 {
                    lower.push(Some(0.0));
                    upper.push(None);
                } else {
                    lower.push(None);
                    upper.push(Some(0.0));
                }
            }
        }
        MeasurementModel::GeneralLinear(_) => return Err(Error::Unsupported("general linear")),
    }
    IntervalSet::new(lower, upper)
}

/// Measures `x` through `model`.
///
/// For clipping, a sample is flagged clipped only when it lies strictly
/// beyond a threshold; a sample sitting exactly on a threshold is observed
/// without loss and stays reliable.
pub fn apply_measurement(model: &MeasurementModel, x: ArrayView1<'_, f64>) -> Result<Observation> {
    model.validate()?;
    model.check_signal_len(x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("signal must be finite".into()));
    }
    let mut states = None;
    let values = match model {
        MeasurementModel::Identity => x.to_owned(),
        MeasurementModel::Mask(m) => Array1::from_iter(x.iter().zip(m).map(|(&v, &r)| if r { v } else { 0.0 })),
        MeasurementModel::Clip { upper, lower } => {
            let mut s = Vec::with_capacity(x.len());
            let y = x.mapv(|v| {
                if v > *upper {
                    s.push(ClipState::High);
                    *upper
                } else if v < *lower {
                    s.push(ClipState::Low);
                    *lower
                } else {
                    s.push(ClipState::Reliable);
                    v
                }
            });
            states = Some(s);
            y
        }
        MeasurementModel::UniformQuantizer(q) => x.mapv(|v| q.quantize(v)),
        MeasurementModel::GeneralQuantizer(q) => {
            Array1::from(x.iter().map(|&v| q.quantize(v)).collect::<Result<Vec<_>>>()?)
        }
        MeasurementModel::OneBit => x.mapv(|v| if v >= 0.0 { 1.0 } else { -1.0 }),
        MeasurementModel::GeneralLinear(s) => s.matrix().dot(&x),
    };
    debug_assert_eq!(values.len(), model.output_len(x.len()));
    Observation::assemble(model.clone(), values, states)
}

/// Per-sample feasibility intervals of a separable observation.
pub fn feasibility_intervals(obs: &Observation) -> Result<IntervalSet> {
    obs.intervals().cloned().ok_or(Error::Unsupported("general linear"))
}

/// Orthogonal projection onto a box: `min(max(x_i, l_i), u_i)`.
pub fn project(intervals: &IntervalSet, x: ArrayView1<'_, f64>) -> Result<Signal> {
    check_len(intervals.len(), x.len())?;
    let mut out = Array1::zeros(x.len());
    intervals.project_into(x, out.view_mut());
    Ok(out)
}

/// Projection onto `{z : M z = y}`: `x − Mᵀ(MMᵀ)⁻¹(Mx − y)`.
pub fn project_linear(sensing: &SensingMatrix, y: ArrayView1<'_, f64>, x: ArrayView1<'_, f64>) -> Result<Signal> {
    check_len(sensing.measurements(), y.len())?;
    check_len(sensing.signal_len(), x.len())?;
    sensing.project(y, x)
}

/// `½‖x − Π(x)‖²`
pub fn cost(obs: &Observation, x: ArrayView1<'_, f64>) -> Result<f64> {
    obs.cost(x)
}

/// `x − Π(x)`
pub fn gradient(obs: &Observation, x: ArrayView1<'_, f64>) -> Result<Signal> {
    obs.gradient(x)
}

/// Builds a clipping observation from a possibly clipped signal by taking
/// its extremes as thresholds; samples within `1e-9` (relative) of a
/// threshold are flagged clipped.
pub fn estimate_clip_model(y: ArrayView1<'_, f64>) -> Result<Observation> {
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateObservation("signal must be non-empty and finite".into()));
    }
    let upper = y.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let lower = y.fold(f64::INFINITY, |m, v| m.min(*v));
    if upper == lower {
        return Err(Error::DegenerateObservation("constant signal has no reliable samples".into()));
    }
    let states = y
        .iter()
        .map(|&v| {
            if near(v, upper) {
                ClipState::High
            } else if near(v, lower) {
                ClipState::Low
            } else {
                ClipState::Reliable
            }
        })
        .collect();
    Observation::with_clip_states(y.to_owned(), upper, lower, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn clip_obs() -> Observation {
        apply_measurement(&MeasurementModel::clip(0.5, -0.5).unwrap(), array![0.2, 0.9, -0.7].view()).unwrap()
    }

    #[test]
    fn clip_forward_and_masks() {
        let obs = clip_obs();
        assert_eq!(obs.values(), array![0.2, 0.5, -0.5]);
        assert_eq!(obs.clip_states().unwrap(), &[ClipState::Reliable, ClipState::High, ClipState::Low]);
        let m = obs.clip_masks().unwrap();
        for i in 0..3 {
            assert_eq!(m.reliable[i] as u8 + m.high[i] as u8 + m.low[i] as u8, 1);
        }
    }

    #[test]
    fn clip_at_threshold_stays_reliable() {
        let obs = apply_measurement(&MeasurementModel::clip(1.0, -1.0).unwrap(), array![1.0, -1.0, 0.3].view()).unwrap();
        assert!(obs.clip_states().unwrap().iter().all(|s| *s == ClipState::Reliable));
    }

    #[test]
    fn quantizer_forward() {
        let q = MeasurementModel::UniformQuantizer(UniformQuantizer::new(0.5).unwrap());
        let obs = apply_measurement(&q, array![0.3, -0.1].view()).unwrap();
        assert_eq!(obs.values(), array![0.25, -0.25]);
        // boundary goes to the upper bin
        let obs = apply_measurement(&q, array![0.5, 0.0].view()).unwrap();
        assert_eq!(obs.values(), array![0.75, 0.25]);
    }

    #[test]
    fn one_bit_forward() {
        let obs = apply_measurement(&MeasurementModel::OneBit, array![0.3, -0.2, 0.0].view()).unwrap();
        assert_eq!(obs.values(), array![1.0, -1.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let m = MeasurementModel::Mask(vec![true, false]);
        assert!(matches!(
            apply_measurement(&m, array![1.0].view()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let obs = clip_obs();
        assert!(obs.cost(array![1.0].view()).is_err());
    }

    #[test]
    fn intervals_read_off() {
        let iv = feasibility_intervals(&clip_obs()).unwrap();
        assert_eq!(iv.bounds().collect::<Vec<_>>(), vec![
            (Some(0.2), Some(0.2)),
            (Some(0.5), None),
            (None, Some(-0.5)),
        ]);

        let q = MeasurementModel::UniformQuantizer(UniformQuantizer::new(0.5).unwrap());
        let iv = feasibility_intervals(&Observation::new(q, array![0.25]).unwrap()).unwrap();
        assert_eq!(iv.lower(0), Some(0.0));
        assert_eq!(iv.upper(0), Some(0.5));

        let iv = feasibility_intervals(&Observation::new(MeasurementModel::Identity, array![1.0]).unwrap()).unwrap();
        assert_eq!((iv.lower(0), iv.upper(0)), (Some(1.0), Some(1.0)));

        let mask = Observation::new(MeasurementModel::Mask(vec![true, false]), array![0.3, 0.0]).unwrap();
        let iv = feasibility_intervals(&mask).unwrap();
        assert_eq!(iv.bounds().collect::<Vec<_>>(), vec![(Some(0.3), Some(0.3)), (None, None)]);
    }

    #[test]
    fn intervals_rejected_for_general_linear() {
        let s = SensingMatrix::new(Array2::eye(2)).unwrap();
        let obs = Observation::new(MeasurementModel::GeneralLinear(s), array![1.0, 2.0]).unwrap();
        assert!(matches!(feasibility_intervals(&obs), Err(Error::Unsupported(_))));
    }

    #[test]
    fn projection_examples() {
        let iv = feasibility_intervals(&clip_obs()).unwrap();
        assert_eq!(project(&iv, array![0.9, 0.7, 0.1].view()).unwrap(), array![0.2, 0.7, -0.5]);
        let inside = array![0.2, 3.0, -2.0];
        assert_eq!(project(&iv, inside.view()).unwrap(), inside);

        let obs = Observation::new(MeasurementModel::OneBit, array![-1.0]).unwrap();
        assert_eq!(obs.project(array![0.4].view()).unwrap(), array![0.0]);
    }

    #[test]
    fn projection_linear_special_cases() {
        let eye = SensingMatrix::new(Array2::eye(3)).unwrap();
        let y = array![1.0, -2.0, 0.5];
        let p = project_linear(&eye, y.view(), array![9.0, 9.0, 9.0].view()).unwrap();
        assert!(p.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));

        // Binary diagonal mask with all rows kept: identity on observed rows
        let m = array![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let s = SensingMatrix::new(m).unwrap();
        let p = project_linear(&s, array![1.0, 2.0].view(), array![5.0, 6.0, 7.0].view()).unwrap();
        assert!((p - array![1.0, 6.0, 2.0]).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn singular_sensing_matrix() {
        let m = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(SensingMatrix::new(m), Err(Error::SingularModel { .. })));
        assert!(SensingMatrix::new(Array2::zeros((3, 2))).is_err());
    }

    #[test]
    fn cost_examples() {
        let obs = Observation::new(MeasurementModel::Identity, array![1.0, 2.0]).unwrap();
        assert_eq!(obs.cost(array![1.0, 2.0].view()).unwrap(), 0.0);
        assert_eq!(obs.cost(array![0.0, 0.0].view()).unwrap(), 2.5);
        assert_eq!(obs.gradient(array![0.0, 1.0].view()).unwrap(), array![-1.0, -1.0]);

        let q = MeasurementModel::UniformQuantizer(UniformQuantizer::new(0.5).unwrap());
        let obs = Observation::new(q, array![0.25, 0.25]).unwrap();
        assert!((obs.cost(array![0.7, 0.1].view()).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(obs.gradient(array![0.3, 0.1].view()).unwrap(), array![0.0, 0.0]);
    }

    #[test]
    fn estimate_clip_examples() {
        let obs = estimate_clip_model(array![0.1, 0.5, 0.5, -0.5].view()).unwrap();
        assert_eq!(obs.model(), &MeasurementModel::Clip { upper: 0.5, lower: -0.5 });
        let m = obs.clip_masks().unwrap();
        assert_eq!(m.high, vec![false, true, true, false]);
        assert_eq!(m.low, vec![false, false, false, true]);

        let obs = estimate_clip_model(array![0.1, 0.9, -0.3, 0.2].view()).unwrap();
        assert_eq!(obs.clip_masks().unwrap().high.iter().filter(|b| **b).count(), 1);

        assert!(matches!(
            estimate_clip_model(array![0.3, 0.3].view()),
            Err(Error::DegenerateObservation(_))
        ));
    }

    #[test]
    fn estimate_clip_survives_pcm_round_trip() {
        // integer PCM values scaled the same way a WAV reader does
        let pcm = [12000i16, 16384, 16384, -3, -16384, 7, 16384, -16384];
        let y = Array1::from_iter(pcm.iter().map(|s| *s as f64 / 32768.0));
        let tol = estimate_clip_model(y.view()).unwrap().clip_masks().unwrap();
        let exact_hi: Vec<bool> = pcm.iter().map(|s| *s == 16384).collect();
        let exact_lo: Vec<bool> = pcm.iter().map(|s| *s == -16384).collect();
        assert_eq!(tol.high, exact_hi);
        assert_eq!(tol.low, exact_lo);
    }

    #[test]
    fn observation_validation() {
        assert!(Observation::new(MeasurementModel::OneBit, array![0.5]).is_err());
        let q = MeasurementModel::UniformQuantizer(UniformQuantizer::saturating(0.5, 0.75).unwrap());
        assert!(Observation::new(q.clone(), array![0.75, -0.25]).is_ok());
        assert!(Observation::new(q.clone(), array![1.25]).is_err());
        assert!(Observation::new(q, array![0.3]).is_err());
        assert!(Observation::new(MeasurementModel::Clip { upper: 0.5, lower: -0.5 }, array![0.7]).is_err());
        assert!(MeasurementModel::clip(-1.0, 1.0).is_err());
        assert!(UniformQuantizer::new(0.0).is_err());
    }

    #[test]
    fn general_quantizer_bins() {
        let bins = vec![
            QuantBin { codeword: -1.0, lower: None, upper: Some(0.0) },
            QuantBin { codeword: 1.0, lower: Some(0.0), upper: None },
        ];
        let q = GeneralQuantizer::new(bins).unwrap();
        assert_eq!(q.quantize(0.0).unwrap(), 1.0);
        assert_eq!(q.quantize(-1e-300).unwrap(), -1.0);
        let gap = vec![
            QuantBin { codeword: -1.0, lower: Some(-1.0), upper: Some(0.0) },
            QuantBin { codeword: 1.0, lower: Some(0.1), upper: Some(1.0) },
        ];
        assert!(GeneralQuantizer::new(gap).is_err());
        let bounded = GeneralQuantizer::new(vec![QuantBin { codeword: 0.0, lower: Some(-1.0), upper: Some(1.0) }]).unwrap();
        assert!(bounded.quantize(1.0).is_err());
    }
}
