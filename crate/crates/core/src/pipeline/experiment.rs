use ndarray::{Array1, ArrayView1};

use crate::dictlearn::{learn_from, DictLearnConfig, LearnOutput, TrainingSet};
use crate::error::{Error, Result};
use crate::linops::{Dictionary, Signal, SparseCode};
use crate::measurements::{apply_measurement, ClipState, MeasurementModel, Observation};
use crate::parallel::Execution;
use crate::solvers::{sparse_code_adaptive_batch, sparse_code_batch, HomotopyConfig, InitialLambda, SolverConfig};

use super::frames::{frame_observation, overlap_add, FrameSpec};
use super::metrics::{angular_snr_db, snr_db};
use super::synth::{uniform_quantizer_for_bits, SyntheticSet};

/// Distortion applied to clean signals in the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distortion {
    Clip { theta: f64 },
    Quant { bits: u32 },
    OneBit,
}

impl Distortion {
    pub fn model(&self) -> Result<MeasurementModel> {
        match *self {
            Distortion::Clip { theta } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::InvalidArgument(format!("clip level {theta} must be positive")));
                }
                MeasurementModel::clip(theta, -theta)
            }
            Distortion::Quant { bits } => uniform_quantizer_for_bits(bits),
            Distortion::OneBit => Ok(MeasurementModel::OneBit),
        }
    }

    /// Value of the `distortion` column.
    pub fn label(&self) -> String {
        match self {
            Distortion::Clip { theta } => format!("clip:{}", super::format_sig(*theta)),
            Distortion::Quant { bits } => format!("quant:{bits}"),
            Distortion::OneBit => "onebit".into(),
        }
    }

    /// Sign data carries no amplitude, so results are scored with angular SNR.
    pub fn angular(&self) -> bool {
        matches!(self, Distortion::OneBit)
    }

    pub fn score(&self, estimate: ArrayView1<'_, f64>, reference: ArrayView1<'_, f64>) -> Result<f64> {
        if self.angular() {
            angular_snr_db(estimate, reference)
        } else {
            snr_db(estimate, reference)
        }
    }
}

/// Sparse coding strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Proximal gradient at a fixed `λ`.
    Fixed { lambda: f64 },
    /// Continuation over decreasing `λ` until `L ≤ ε`.
    Adaptive { epsilon: f64, decay: f64 },
    /// Iterative hard thresholding with `K` nonzeros.
    Iht { sparsity: usize },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Fixed { .. } => "fixed",
            Method::Adaptive { .. } => "adaptive",
            Method::Iht { .. } => "iht",
        }
    }

    /// Solver settings for one call. `iters` caps the proximal iterations
    /// (per stage for the adaptive method); `stop_below` replaces the
    /// consistency target with a noise level when given.
    fn solve(
        &self,
        dict: &Dictionary,
        observations: &[Observation],
        init: &[SparseCode],
        iters: usize,
        stop_below: Option<f64>,
        exec: Execution,
    ) -> Result<Vec<SparseCode>> {
        let with_stop = |cfg: SolverConfig| match stop_below {
            Some(level) => cfg.with_stop_below(level),
            None => cfg,
        };
        let solved = match *self {
            Method::Fixed { lambda } => {
                let cfg = with_stop(SolverConfig::l1(lambda).with_max_iters(iters));
                sparse_code_batch(dict, observations, init, &cfg, exec)?
            }
            Method::Iht { sparsity } => {
                let cfg = with_stop(SolverConfig::l0(sparsity).with_max_iters(iters));
                sparse_code_batch(dict, observations, init, &cfg, exec)?
            }
            Method::Adaptive { epsilon, decay } => {
                let cfg = HomotopyConfig {
                    initial_lambda: InitialLambda::Auto,
                    decay,
                    epsilon: stop_below.unwrap_or(epsilon),
                    inner: SolverConfig::l1(0.0).with_max_iters(iters),
                    ..HomotopyConfig::default()
                };
                sparse_code_adaptive_batch(dict, observations, init, &cfg, exec)?
            }
        };
        Ok(solved.into_iter().map(|(code, _)| code).collect())
    }

    /// Coding step of dictionary learning matching this method.
    pub fn learning_config(&self, iters: usize) -> SolverConfig {
        match *self {
            Method::Fixed { lambda } => SolverConfig::l1(lambda).with_max_iters(iters),
            // the continuation has no single penalty; learn at the final stage
            Method::Adaptive { epsilon, .. } => SolverConfig::l1(epsilon).with_max_iters(iters),
            Method::Iht { sparsity } => SolverConfig::l0(sparsity).with_max_iters(iters),
        }
    }
}

/// How an estimate is formed from a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconstruction {
    /// `Dα`
    Synthesis,
    /// `Π_{C_y}(Dα)`: the closest signal consistent with the measurements.
    #[default]
    Consistent,
}

pub fn reconstruct(dict: &Dictionary, code: &SparseCode, obs: &Observation, mode: Reconstruction) -> Result<Signal> {
    let x = dict.synthesize(code);
    match mode {
        Reconstruction::Synthesis => Ok(x),
        Reconstruction::Consistent => obs.project(x.view()),
    }
}

/// `½·N·Δ²/12`: the objective level matching quantization noise of
/// variance `Δ²/12` on `N` samples.
pub fn quant_noise_level(step: f64, len: usize) -> f64 {
    0.5 * len as f64 * step * step / 12.0
}

/// Observations prepared for a solver, either as measured (consistent
/// treatment) or mapped to their classical linear counterparts.
#[derive(Debug, Clone)]
pub struct Problem {
    pub observations: Vec<Observation>,
    /// Objective level at which solvers stop, for data treated as noisy.
    pub noise_level: Option<f64>,
    /// Whether the observations constrain the signal exactly rather than
    /// as noisy versions of it. Only exact problems are projected on output.
    pub exact: bool,
}

impl Problem {
    pub fn consistent(observations: Vec<Observation>) -> Self {
        Self { observations, noise_level: None, exact: true }
    }

    /// Classical treatment: clipped samples are discarded (inpainting),
    /// quantized samples are noisy samples, and signs are used directly as
    /// the signal.
    pub fn classical(observations: &[Observation]) -> Result<Self> {
        let mut out = Vec::with_capacity(observations.len());
        let mut noise_level = None;
        let mut exact = true;
        for obs in observations {
            let values = obs.values().to_owned();
            let n = values.len();
            let mapped = match obs.model() {
                MeasurementModel::Clip { .. } => {
                    let states = obs.clip_states().expect("clip observations carry states");
                    let mask = states.iter().map(|s| *s == ClipState::Reliable).collect();
                    Observation::new(MeasurementModel::Mask(mask), values)?
                }
                MeasurementModel::UniformQuantizer(q) => {
                    noise_level = Some(quant_noise_level(q.step, n));
                    exact = false;
                    Observation::new(MeasurementModel::Identity, values)?
                }
                MeasurementModel::OneBit => {
                    exact = false;
                    Observation::new(MeasurementModel::Identity, values)?
                }
                MeasurementModel::Identity | MeasurementModel::Mask(_) => obs.clone(),
                MeasurementModel::GeneralQuantizer(_) | MeasurementModel::GeneralLinear(_) => {
                    return Err(Error::Unsupported("no classical baseline for this model"));
                }
            };
            out.push(mapped);
        }
        Ok(Self { observations: out, noise_level, exact })
    }

    pub fn with_treatment(observations: Vec<Observation>, classical: bool) -> Result<Self> {
        if classical {
            Self::classical(&observations)
        } else {
            Ok(Self::consistent(observations))
        }
    }

    /// Zero codes, except where the origin is already consistent with the
    /// data (sign measurements): there the gradient vanishes at zero, so
    /// coding starts from the code of the raw observation taken as a signal.
    pub fn starting_codes(
        &self,
        dict: &Dictionary,
        method: &Method,
        iters: usize,
        exec: Execution,
    ) -> Result<Vec<SparseCode>> {
        let zeros = vec![SparseCode::zeros(dict.atom_count()); self.observations.len()];
        let origin = Array1::zeros(dict.signal_dim());
        let stuck: Vec<usize> = (0..self.observations.len())
            .filter(|&t| self.observations[t].cost_unchecked(origin.view()) == 0.0)
            .filter(|&t| self.observations[t].values().iter().any(|v| *v != 0.0))
            .collect();
        if stuck.is_empty() {
            return Ok(zeros);
        }
        let raw = stuck
            .iter()
            .map(|&t| Observation::new(MeasurementModel::Identity, self.observations[t].values().to_owned()))
            .collect::<Result<Vec<_>>>()?;
        let init = vec![SparseCode::zeros(dict.atom_count()); raw.len()];
        let warm = method.solve(dict, &raw, &init, iters, None, exec)?;
        let mut codes = zeros;
        for (t, c) in stuck.into_iter().zip(warm) {
            codes[t] = c;
        }
        Ok(codes)
    }

    pub fn code(&self, dict: &Dictionary, method: &Method, iters: usize, exec: Execution) -> Result<Vec<SparseCode>> {
        let init = self.starting_codes(dict, method, iters, exec)?;
        method.solve(dict, &self.observations, &init, iters, self.noise_level, exec)
    }

    pub fn estimates(&self, dict: &Dictionary, codes: &[SparseCode], mode: Reconstruction) -> Result<Vec<Signal>> {
        let mode = if self.exact { mode } else { Reconstruction::Synthesis };
        codes.iter().zip(&self.observations).map(|(c, o)| reconstruct(dict, c, o, mode)).collect()
    }

    /// Dictionary learning on these observations, starting from `init`.
    pub fn learn(
        &self,
        init: &Dictionary,
        method: &Method,
        cfg: &DictLearnConfig,
    ) -> Result<LearnOutput> {
        let train = TrainingSet::new(self.observations.clone())?;
        let mut cfg = cfg.clone();
        if let Some(level) = self.noise_level {
            cfg.coding = cfg.coding.with_stop_below(level);
        }
        let codes = self.starting_codes(init, method, cfg.coding.max_iters, cfg.exec)?;
        learn_from(&train, init, codes, &cfg)
    }
}

/// Measures, codes and scores every signal of a synthetic set; returns one
/// SNR (angular for sign data) per signal.
pub fn run_synthetic(
    set: &SyntheticSet,
    distortion: &Distortion,
    method: &Method,
    iters: usize,
    classical: bool,
    mode: Reconstruction,
    exec: Execution,
) -> Result<Vec<f64>> {
    let model = distortion.model()?;
    let obs = set
        .signals
        .iter()
        .map(|x| apply_measurement(&model, x.view()))
        .collect::<Result<Vec<_>>>()?;
    let problem = Problem::with_treatment(obs, classical)?;
    let codes = problem.code(&set.dictionary, method, iters, exec)?;
    let est = problem.estimates(&set.dictionary, &codes, mode)?;
    est.iter().zip(&set.signals).map(|(e, x)| distortion.score(e.view(), x.view())).collect()
}

/// Frame-based restoration of a long signal.
#[derive(Debug, Clone)]
pub struct AudioJob {
    pub frame: FrameSpec,
    pub method: Method,
    pub iters: usize,
    /// Learn the dictionary from the observed frames first.
    pub learn: Option<DictLearnConfig>,
    pub classical: bool,
    pub reconstruction: Reconstruction,
    pub exec: Execution,
}

#[derive(Debug, Clone)]
pub struct Restored {
    pub signal: Array1<f64>,
    pub dictionary: Dictionary,
}

impl AudioJob {
    /// Frames `obs`, codes every frame (or learns a dictionary from `dict`
    /// together with the codes) and overlap-adds the estimates.
    pub fn restore(&self, obs: &Observation, dict: &Dictionary) -> Result<Restored> {
        let frames = frame_observation(obs, &self.frame)?;
        let problem = Problem::with_treatment(frames, self.classical)?;
        let (dictionary, codes) = match &self.learn {
            Some(cfg) => {
                let out = problem.learn(dict, &self.method, cfg)?;
                (out.dictionary, out.codes)
            }
            None => (dict.clone(), problem.code(dict, &self.method, self.iters, self.exec)?),
        };
        let est = problem.estimates(&dictionary, &codes, self.reconstruction)?;
        let signal = overlap_add(&est, &self.frame, obs.values().len())?;
        Ok(Restored { signal, dictionary })
    }
}
