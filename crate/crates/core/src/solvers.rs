//! Consistent sparse coding.
//!
//! [`sparse_code_fixed`] is a proximal gradient method on
//! `L(Dα, y) + λΨ(α)`: a gradient step on the distance-to-feasibility cost
//! followed by soft thresholding (ℓ1) or top-K selection (ℓ0).
//! [`sparse_code_adaptive`] wraps it in a warm-started continuation over a
//! geometrically decreasing `λ` until the estimate is `ε`-consistent.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::error::{check_len, Error, Result};
use crate::linops::{hard_threshold_in_place, soft_threshold_in_place, Dictionary, SparseCode};
use crate::measurements::Observation;
use crate::parallel::{try_map_indexed, Execution};

/// Sparsity penalty `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// `λ‖α‖₁`
    L1 { lambda: f64 },
    /// `‖α‖₀ ≤ K`, enforced by hard thresholding.
    L0 { sparsity: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1/‖D‖₂²`
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub regularizer: Regularizer,
    pub step: StepSize,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// FISTA momentum. Objective monotonicity is no longer guaranteed.
    pub accelerate: bool,
    /// Early stop once `L(Dα, y)` falls to this level (noise-aware stopping).
    pub stop_below: Option<f64>,
}

impl SolverConfig {
    pub const DEFAULT_MAX_ITERS: usize = 400;
    pub const DEFAULT_REL_TOL: f64 = 1e-8;

    pub fn l1(lambda: f64) -> Self {
        Self {
            regularizer: Regularizer::L1 { lambda },
            step: StepSize::Auto,
            max_iters: Self::DEFAULT_MAX_ITERS,
            rel_tol: Self::DEFAULT_REL_TOL,
            accelerate: false,
            stop_below: None,
        }
    }

    pub fn l0(sparsity: usize) -> Self {
        Self { regularizer: Regularizer::L0 { sparsity }, ..Self::l1(0.0) }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_step(mut self, step: StepSize) -> Self {
        self.step = step;
        self
    }

    pub fn with_stop_below(mut self, level: f64) -> Self {
        self.stop_below = Some(level);
        self
    }

    pub fn accelerated(mut self, on: bool) -> Self {
        self.accelerate = on;
        self
    }

    pub fn validate(&self, atom_count: usize) -> Result<()> {
        match self.regularizer {
            Regularizer::L1 { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
            }
            Regularizer::L0 { sparsity } if sparsity == 0 || sparsity > atom_count => {
                return Err(Error::InvalidArgument(format!(
                    "sparsity {sparsity} out of range 1..={atom_count}"
                )));
            }
            _ => {}
        }
        if let StepSize::Fixed(mu) = self.step {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {mu}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        if self.stop_below.is_some_and(|v| !(v >= 0.0)) {
            return Err(Error::InvalidArgument("stop level must be non-negative".into()));
        }
        Ok(())
    }

    /// Step size to use with `dict`.
    pub fn resolve_step(&self, dict: &Dictionary) -> Result<f64> {
        match self.step {
            StepSize::Fixed(mu) => Ok(mu),
            StepSize::Auto => auto_step(dict),
        }
    }

    /// Copy with `Auto` replaced by the concrete step for `dict`.
    pub fn resolved(&self, dict: &Dictionary) -> Result<Self> {
        Ok(Self { step: StepSize::Fixed(self.resolve_step(dict)?), ..self.clone() })
    }

    fn penalty_weight(&self) -> f64 {
        match self.regularizer {
            Regularizer::L1 { lambda } => lambda,
            Regularizer::L0 { .. } => 0.0,
        }
    }
}

/// `1/‖D‖₂²`
pub fn auto_step(dict: &Dictionary) -> Result<f64> {
    let s = dict.spectral_norm();
    if s == 0.0 {
        return Err(Error::InvalidArgument("dictionary is zero".into()));
    }
    Ok(1.0 / (s * s))
}

/// Starting value of the continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLambda {
    /// `‖Dᵀ Π(0)‖∞`, or `‖Dᵀ y‖∞` when that vanishes.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyConfig {
    pub initial_lambda: InitialLambda,
    pub decay: f64,
    pub epsilon: f64,
    /// Per-stage solver; its `λ` is overwritten at every stage.
    pub inner: SolverConfig,
    pub max_stages: usize,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            initial_lambda: InitialLambda::Auto,
            decay: 0.5,
            epsilon: 1e-3,
            inner: SolverConfig::l1(0.0),
            max_stages: 50,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self, atom_count: usize) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let InitialLambda::Value(l) = self.initial_lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidArgument(format!("initial lambda must be positive, got {l}")));
            }
        }
        if !matches!(self.inner.regularizer, Regularizer::L1 { .. }) {
            return Err(Error::InvalidArgument("continuation needs an l1 regularizer".into()));
        }
        self.inner.validate(atom_count)
    }
}

/// One continuation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRecord {
    pub lambda: f64,
    /// `L(Dα, y)` at the end of the stage.
    pub consistency: f64,
    /// `‖α‖₁` at the end of the stage.
    pub penalty: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    /// Objective at the starting point followed by one value per iteration.
    pub objective: Vec<f64>,
    pub stages: Vec<StageRecord>,
    pub final_consistency: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `L(Dα, y) + λ‖α‖₁` (ℓ1) or `L(Dα, y)` (ℓ0).
pub fn objective(dict: &Dictionary, code: &SparseCode, obs: &Observation, cfg: &SolverConfig) -> Result<f64> {
    check_dims(dict, code, obs)?;
    let data = obs.cost_unchecked(dict.synthesize(code).view());
    Ok(match cfg.regularizer {
        Regularizer::L1 { lambda } => data + lambda * code.l1_norm(),
        Regularizer::L0 { .. } => data,
    })
}

/// `L(Dα, y)`
pub fn consistency_level(dict: &Dictionary, code: &SparseCode, obs: &Observation) -> Result<f64> {
    check_dims(dict, code, obs)?;
    Ok(obs.cost_unchecked(dict.synthesize(code).view()))
}

fn check_dims(dict: &Dictionary, code: &SparseCode, obs: &Observation) -> Result<()> {
    check_len(dict.atom_count(), code.len())?;
    check_len(dict.signal_dim(), obs.signal_len())
}

fn l1(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Dictionary plus a contiguous copy of its transpose, so that analysis and
/// (sparse) synthesis both walk contiguous rows.
struct Operator<'a> {
    atoms: ArrayView2<'a, f64>,
    atoms_t: Array2<f64>,
}

impl<'a> Operator<'a> {
    fn new(dict: &'a Dictionary) -> Self {
        let atoms = dict.atoms();
        Self { atoms, atoms_t: atoms.t().as_standard_layout().into_owned() }
    }

    fn synthesize(&self, alpha: &Array1<f64>) -> Array1<f64> {
        let nnz = alpha.iter().filter(|v| **v != 0.0).count();
        if 4 * nnz >= alpha.len() {
            return self.atoms.dot(alpha);
        }
        let mut x = Array1::zeros(self.atoms.nrows());
        for (j, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                x.scaled_add(a, &self.atoms_t.row(j));
            }
        }
        x
    }

    fn analyze(&self, r: ArrayView1<'_, f64>) -> Array1<f64> {
        self.atoms_t.dot(&r)
    }
}

/// Proximal gradient sparse coding at a fixed regularization.
///
/// Each iteration takes `α ← α + μ Dᵀ(Π(Dα) − Dα)` followed by the proximal
/// map of `μλ‖·‖₁` (ℓ1) or top-K selection (ℓ0). Stops when the relative
/// objective change drops below `rel_tol` or after `max_iters` iterations.
pub fn sparse_code_fixed(
    dict: &Dictionary,
    obs: &Observation,
    init: &SparseCode,
    cfg: &SolverConfig,
) -> Result<(SparseCode, SolveTrace)> {
    check_dims(dict, init, obs)?;
    cfg.validate(dict.atom_count())?;
    let step = cfg.resolve_step(dict)?;
    fixed_with(&Operator::new(dict), obs, init, cfg, step)
}

fn fixed_with(
    op: &Operator<'_>,
    obs: &Observation,
    init: &SparseCode,
    cfg: &SolverConfig,
    step: f64,
) -> Result<(SparseCode, SolveTrace)> {
    if init.coeffs().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("initial code must be finite".into()));
    }
    let lambda = cfg.penalty_weight();
    let threshold = step * lambda;

    let mut alpha = init.coeffs().to_owned();
    let mut x = op.synthesize(&alpha);
    let mut proj = Array1::zeros(x.len());
    let mut scratch = Vec::new();
    let eval = |x: &Array1<f64>, a: &Array1<f64>| obs.cost_unchecked(x.view()) + lambda * l1(a);

    let mut current = eval(&x, &alpha);
    let mut trace = SolveTrace { objective: vec![current], ..Default::default() };
    let reached = |x: &Array1<f64>| cfg.stop_below.is_some_and(|level| obs.cost_unchecked(x.view()) <= level);
    if reached(&x) {
        trace.converged = true;
        trace.final_consistency = obs.cost_unchecked(x.view());
        return Ok((SparseCode::from_raw(alpha), trace));
    }

    // FISTA state: extrapolated point and its synthesis.
    let mut momentum = 1.0_f64;
    let mut prev_alpha = alpha.clone();
    let mut point = alpha.clone();
    let mut point_x = x.clone();

    for iteration in 1..=cfg.max_iters {
        let (base, base_x) = if cfg.accelerate { (&point, &point_x) } else { (&alpha, &x) };
        obs.project_into(base_x.view(), proj.view_mut());
        // proj <- Π(x) - x
        Zip::from(&mut proj).and(base_x).for_each(|p, &v| *p -= v);
        let grad = op.analyze(proj.view());
        let mut next = base.clone();
        next.scaled_add(step, &grad);
        match cfg.regularizer {
            Regularizer::L1 { .. } => soft_threshold_in_place(next.view_mut(), threshold),
            Regularizer::L0 { sparsity } => hard_threshold_in_place(next.view_mut(), sparsity, &mut scratch),
        }
        let next_x = op.synthesize(&next);
        let value = eval(&next_x, &next);
        if !value.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration });
        }

        if cfg.accelerate {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / t_next;
            momentum = t_next;
            prev_alpha.assign(&alpha);
            alpha = next;
            x = next_x;
            point = &alpha + &((&alpha - &prev_alpha) * beta);
            point_x = op.synthesize(&point);
        } else {
            alpha = next;
            x = next_x;
        }

        trace.objective.push(value);
        trace.iterations = iteration;
        let change = (current - value).abs();
        current = value;
        if change <= cfg.rel_tol * trace.objective[iteration - 1].abs() || reached(&x) {
            trace.converged = true;
            break;
        }
    }
    trace.final_consistency = obs.cost_unchecked(x.view());
    Ok((SparseCode::from_raw(alpha), trace))
}

/// `λ⁰` for the continuation: `‖Dᵀ Π(0)‖∞`, falling back to `‖Dᵀ y‖∞` when
/// the origin is already feasible (e.g. sign measurements).
pub fn initial_lambda(dict: &Dictionary, obs: &Observation) -> Result<f64> {
    check_len(dict.signal_dim(), obs.signal_len())?;
    let zero = Array1::zeros(obs.signal_len());
    let p0 = obs.project(zero.view())?;
    let inf_norm = |v: Array1<f64>| v.fold(0.0_f64, |m, x| m.max(x.abs()));
    let lambda = inf_norm(dict.analyze(p0.view()));
    if lambda > 0.0 {
        return Ok(lambda);
    }
    if obs.values().len() == dict.signal_dim() {
        let fallback = inf_norm(dict.analyze(obs.values()));
        if fallback > 0.0 {
            return Ok(fallback);
        }
    }
    Err(Error::DegenerateObservation("cannot derive a positive initial lambda".into()))
}

/// Continuation over `λᵏ = λ⁰·decayᵏ`, each stage solved by
/// [`sparse_code_fixed`] warm-started from the previous stage, until
/// `L(Dα, y) ≤ ε` or `max_stages` stages have run. Running out of stages is
/// reported through `trace.converged`, not as an error.
pub fn sparse_code_adaptive(
    dict: &Dictionary,
    obs: &Observation,
    init: &SparseCode,
    cfg: &HomotopyConfig,
) -> Result<(SparseCode, SolveTrace)> {
    check_dims(dict, init, obs)?;
    cfg.validate(dict.atom_count())?;
    let inner = cfg.inner.resolved(dict)?;
    adaptive_with(&Operator::new(dict), dict, obs, init, cfg, &inner)
}

fn adaptive_with(
    op: &Operator<'_>,
    dict: &Dictionary,
    obs: &Observation,
    init: &SparseCode,
    cfg: &HomotopyConfig,
    inner: &SolverConfig,
) -> Result<(SparseCode, SolveTrace)> {
    let step = inner.resolve_step(dict)?;
    let mut code = init.clone();
    let mut level = obs.cost_unchecked(op.synthesize(&code.coeffs().to_owned()).view());
    let mut trace = SolveTrace { final_consistency: level, ..Default::default() };
    if level <= cfg.epsilon {
        trace.converged = true;
        return Ok((code, trace));
    }
    let mut lambda = match cfg.initial_lambda {
        InitialLambda::Auto => initial_lambda(dict, obs)?,
        InitialLambda::Value(v) => v,
    };

    while level > cfg.epsilon && trace.stages.len() < cfg.max_stages {
        let stage_cfg = SolverConfig { regularizer: Regularizer::L1 { lambda }, ..inner.clone() };
        let (next, stage) = fixed_with(op, obs, &code, &stage_cfg, step)?;
        code = next;
        level = stage.final_consistency;
        trace.iterations += stage.iterations;
        trace.objective.extend_from_slice(&stage.objective);
        trace.stages.push(StageRecord {
            lambda,
            consistency: level,
            penalty: code.l1_norm(),
            iterations: stage.iterations,
        });
        lambda *= cfg.decay;
    }
    trace.final_consistency = level;
    trace.converged = level <= cfg.epsilon;
    Ok((code, trace))
}

/// Sparse-codes many observations with one dictionary. The step is resolved
/// once; signals are processed independently and returned in input order.
pub fn sparse_code_batch(
    dict: &Dictionary,
    observations: &[Observation],
    init: &[SparseCode],
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<Vec<(SparseCode, SolveTrace)>> {
    check_len(observations.len(), init.len())?;
    cfg.validate(dict.atom_count())?;
    let step = cfg.resolve_step(dict)?;
    let op = Operator::new(dict);
    try_map_indexed(observations.len(), exec, |t| {
        check_dims(dict, &init[t], &observations[t])?;
        fixed_with(&op, &observations[t], &init[t], cfg, step)
    })
}

/// Batch form of [`sparse_code_adaptive`].
pub fn sparse_code_adaptive_batch(
    dict: &Dictionary,
    observations: &[Observation],
    init: &[SparseCode],
    cfg: &HomotopyConfig,
    exec: Execution,
) -> Result<Vec<(SparseCode, SolveTrace)>> {
    check_len(observations.len(), init.len())?;
    cfg.validate(dict.atom_count())?;
    let inner = cfg.inner.resolved(dict)?;
    let op = Operator::new(dict);
    try_map_indexed(observations.len(), exec, |t| {
        check_dims(dict, &init[t], &observations[t])?;
        adaptive_with(&op, dict, &observations[t], &init[t], cfg, &inner)
    })
}
