//! The doubly proximal generalized ADMM iteration and its specializations.
//!
//! Every scheme is run through [`dpgadmm_step`]:
//!
//! ```text
//! x⁺ = argmin_X f(x) − xᵀAᵀλ + β/2‖Ax + By − b‖² + ½‖x − x‖²_{G₁}
//! y⁺ = argmin_Y g(y) − yᵀBᵀλ + β/2‖αAx⁺ + (1−α)(b − By) + By' − b‖² + ½‖y' − y‖²_{G₂}
//! λ⁺ = λ − β(αAx⁺ + (1−α)(b − By) + By⁺ − b)
//! ```
//!
//! ADMM is `α = 1, G₁ = G₂ = 0`; GADMM drops the weights; the proximal
//! versions keep only `G₁`; the `-ADMM` forms pin `α = 1`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::warn;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::metrics::{kkt_residual, weighted_sq_norm, MetricKind, MetricTag};
use crate::problem::{IterateState, ProblemInstance, ProximalWeights};
use crate::report::TraceRecord;
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Admm,
    Gadmm,
    PAdmm,
    PGadmm,
    DpAdmm,
    DpGadmm,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Admm, Variant::Gadmm, Variant::PAdmm, Variant::PGadmm, Variant::DpAdmm, Variant::DpGadmm];

    /// Lower-case identifier used on the command line and in files.
    pub fn key(self) -> &'static str {
        match self {
            Variant::Admm => "admm",
            Variant::Gadmm => "gadmm",
            Variant::PAdmm => "padmm",
            Variant::PGadmm => "pgadmm",
            Variant::DpAdmm => "dpadmm",
            Variant::DpGadmm => "dpgadmm",
        }
    }

    /// `α` is pinned to 1.
    pub fn unit_alpha(self) -> bool {
        matches!(self, Variant::Admm | Variant::PAdmm | Variant::DpAdmm)
    }

    pub fn allows_g1(self) -> bool {
        !matches!(self, Variant::Admm | Variant::Gadmm)
    }

    pub fn allows_g2(self) -> bool {
        matches!(self, Variant::DpAdmm | Variant::DpGadmm)
    }

    pub fn doubly_proximal(self) -> bool {
        self.allows_g2()
    }

    /// Resolves the effective `(α, G₁, G₂)` of this scheme.
    ///
    /// A missing `α` defaults to 1. Supplied values that the scheme cannot
    /// carry (e.g. `G₂ ≠ 0` for P-GADMM, `α ≠ 1` for ADMM) are rejected
    /// rather than silently overridden.
    pub fn specialize<T: Real>(
        self,
        alpha: Option<T>,
        weights: ProximalWeights<T>,
    ) -> Result<(T, ProximalWeights<T>)> {
        let conflict = |detail: String| Error::VariantConfigConflict { variant: self.to_string(), detail };
        let alpha = alpha.unwrap_or_else(T::one);
        if self.unit_alpha() && alpha != T::one() {
            return Err(conflict(format!("alpha must be 1, got {alpha}")));
        }
        if !self.allows_g1() && !weights.g1.is_zero() {
            return Err(conflict("G1 must be zero".into()));
        }
        if !self.allows_g2() && !weights.g2.is_zero() {
            return Err(conflict("G2 must be zero".into()));
        }
        Ok((alpha, weights))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Variant::Admm => "ADMM",
            Variant::Gadmm => "GADMM",
            Variant::PAdmm => "P-ADMM",
            Variant::PGadmm => "P-GADMM",
            Variant::DpAdmm => "DP-ADMM",
            Variant::DpGadmm => "DP-GADMM",
        };
        f.write_str(name)
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.key() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// `max{‖Δy‖, ‖Δλ‖} / max{‖x¹−x⁰‖, ‖y¹−y⁰‖, ‖λ¹−λ⁰‖} < tol`, with the
    /// denominator frozen after the first iteration.
    RelativeStep,
    /// `kkt_residual(u^{k+1}) < tol`.
    KktResidual,
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(StopRule::RelativeStep),
            "kkt" => Ok(StopRule::KktResidual),
            other => Err(Error::InvalidConfig(format!("unknown stop rule '{other}'"))),
        }
    }
}

pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T: Real> {
    pub variant: Variant,
    pub alpha: T,
    pub beta: T,
    pub weights: ProximalWeights<T>,
    pub tol: T,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    /// Recorded with results; instance generators take it as their seed.
    pub seed: u64,
}

impl<T: Real> SolverConfig<T> {
    /// Specializes `(alpha, weights)` for `variant` and validates the result.
    /// Defaults: `tol = 1e-6`, `max_iter = 100000`, relative-step stopping, seed 0.
    pub fn new(variant: Variant, alpha: Option<T>, beta: T, weights: ProximalWeights<T>) -> Result<Self> {
        let (alpha, weights) = variant.specialize(alpha, weights)?;
        let cfg = Self {
            variant,
            alpha,
            beta,
            weights,
            tol: lit(1e-6),
            max_iter: DEFAULT_MAX_ITER,
            stop_rule: StopRule::RelativeStep,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_rule(mut self, stop_rule: StopRule) -> Self {
        self.stop_rule = stop_rule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < lit(2.0)) {
            return Err(Error::InvalidConfig(format!("alpha = {} must lie in (0, 2)", self.alpha)));
        }
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return Err(Error::InvalidConfig(format!("beta = {} must be > 0", self.beta)));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidConfig(format!("tol = {} must be > 0", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        self.variant.specialize(Some(self.alpha), self.weights.clone())?;
        Ok(())
    }

    fn validate_for(&self, instance: &ProblemInstance<T>) -> Result<()> {
        self.validate()?;
        let (n, m, _) = instance.dims();
        self.weights.g1.validate(n)?;
        self.weights.g2.validate(m)?;
        Ok(())
    }
}

/// Squared step lengths of one iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepNorms<T> {
    pub dx: T,
    pub dy: T,
    pub dlambda: T,
    /// `‖B(y^{k+1} − y^k)‖²`.
    pub b_dy: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<T: Real> {
    pub next: IterateState<T>,
    /// `(x^{k+1}, y^{k+1}, λ^k − β(Ax^{k+1} + By^k − b))`.
    pub aux: IterateState<T>,
    /// `‖Ax^{k+1} + By^{k+1} − b‖`.
    pub primal_residual: T,
    pub step_sq_norms: StepNorms<T>,
}

/// One iteration of the unified scheme from `u_k`.
pub fn dpgadmm_step<T: Real>(
    instance: &ProblemInstance<T>,
    u_k: &IterateState<T>,
    cfg: &SolverConfig<T>,
) -> Result<StepOutcome<T>> {
    u_k.check_dims(&instance.coupling)?;
    let coupling = &instance.coupling;
    let oracle = instance.oracle.as_ref();
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let (n, m, _) = coupling.dims();

    let x = oracle.solve_x(&u_k.lambda, &u_k.y, beta, &cfg.weights.g1, &u_k.x)?;
    if x.len() != n {
        return Err(Error::OracleFailure(format!("x-subproblem returned length {}, expected {n}", x.len())));
    }
    let y = oracle.solve_y(&u_k.lambda, &x, &u_k.y, alpha, beta, &cfg.weights.g2)?;
    if y.len() != m {
        return Err(Error::OracleFailure(format!("y-subproblem returned length {}, expected {m}", y.len())));
    }

    let ax = coupling.a().apply(&x);
    let by_prev = coupling.b().apply(&u_k.y);
    let by = coupling.b().apply(&y);
    let rhs = coupling.rhs();

    let relaxed: DVector<T> = &ax * alpha + (rhs - &by_prev) * (T::one() - alpha) + &by - rhs;
    let lambda = &u_k.lambda - relaxed * beta;
    let aux_lambda = &u_k.lambda - (&ax + &by_prev - rhs) * beta;
    let primal_residual = (&ax + &by - rhs).norm();

    let step_sq_norms = StepNorms {
        dx: (&x - &u_k.x).norm_squared(),
        dy: (&y - &u_k.y).norm_squared(),
        dlambda: (&lambda - &u_k.lambda).norm_squared(),
        b_dy: (&by - &by_prev).norm_squared(),
    };
    let aux = IterateState::new(x.clone(), y.clone(), aux_lambda);
    Ok(StepOutcome { next: IterateState::new(x, y, lambda), aux, primal_residual, step_sq_norms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The configured stop rule fired.
    StopRule,
    /// The first step did not move (`u¹ = u⁰`): the start is already a fixed point.
    DenominatorZero,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct RunResult<T: Real> {
    pub final_state: IterateState<T>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// One record per iterate, starting with `k = 0`.
    pub trace: Vec<TraceRecord>,
    /// Relative-step value after every iteration (`NaN` when undefined).
    pub relative_steps: Vec<f64>,
    pub wall_time: Duration,
}

impl<T: Real> RunResult<T> {
    /// Relative-step value at the last iteration.
    pub fn epsilon_final(&self) -> f64 {
        self.relative_steps.last().copied().unwrap_or(f64::NAN)
    }
}

/// Runs the scheme from `u0` until the stop rule fires or `max_iter`.
pub fn run<T: Real>(instance: &ProblemInstance<T>, u0: &IterateState<T>, cfg: &SolverConfig<T>) -> Result<RunResult<T>> {
    run_observed(instance, u0, cfg, |_, _, _| {})
}

/// [`run`], calling `observer(k, u_k, step)` after every iteration.
pub fn run_observed<T, F>(
    instance: &ProblemInstance<T>,
    u0: &IterateState<T>,
    cfg: &SolverConfig<T>,
    mut observer: F,
) -> Result<RunResult<T>>
where
    T: Real,
    F: FnMut(usize, &IterateState<T>, &StepOutcome<T>),
{
    cfg.validate_for(instance)?;
    u0.check_dims(&instance.coupling)?;
    if !u0.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let start = Instant::now();
    let tracer = Tracer::new(instance, cfg);
    let mut trace = vec![tracer.initial(u0)?];
    let mut relative_steps = Vec::new();
    let mut stop_rule = cfg.stop_rule;
    let mut denominator: Option<T> = None;
    let mut u = u0.clone();

    for k in 0..cfg.max_iter {
        let step = dpgadmm_step(instance, &u, cfg)?;
        if !step.next.is_finite() {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        observer(k, &u, &step);

        let s = &step.step_sq_norms;
        let den = *denominator.get_or_insert_with(|| s.dx.max(s.dy).max(s.dlambda).sqrt());
        let ratio = if den > T::zero() { s.dy.max(s.dlambda).sqrt() / den } else { T::zero() / T::zero() };
        relative_steps.push(to_f64(ratio));

        let record = tracer.record(k + 1, &u, &step, start)?;
        let kkt = record.kkt_residual;
        trace.push(record);
        u = step.next;

        if k == 0 && stop_rule == StopRule::RelativeStep {
            if den == T::zero() {
                return Ok(finish(u, 1, true, Termination::DenominatorZero, trace, relative_steps, start));
            }
            if den < lit(1e-300) {
                warn!("relative-step denominator {den:e} underflows; stopping on the KKT residual instead");
                stop_rule = StopRule::KktResidual;
            }
        }

        let stop = match stop_rule {
            StopRule::RelativeStep => ratio < cfg.tol,
            StopRule::KktResidual => kkt < to_f64(cfg.tol),
        };
        if stop {
            return Ok(finish(u, k + 1, true, Termination::StopRule, trace, relative_steps, start));
        }
    }
    Ok(finish(u, cfg.max_iter, false, Termination::MaxIterations, trace, relative_steps, start))
}

fn finish<T: Real>(
    final_state: IterateState<T>,
    iterations: usize,
    converged: bool,
    termination: Termination,
    trace: Vec<TraceRecord>,
    relative_steps: Vec<f64>,
    start: Instant,
) -> RunResult<T> {
    RunResult { final_state, iterations, converged, termination, trace, relative_steps, wall_time: start.elapsed() }
}

/// Builds trace records; distance and descent columns need a reference
/// solution and a full-column-rank `B`.
struct Tracer<'a, T: Real> {
    instance: &'a ProblemInstance<T>,
    cfg: &'a SolverConfig<T>,
    reference: Option<&'a IterateState<T>>,
}

impl<'a, T: Real> Tracer<'a, T> {
    fn new(instance: &'a ProblemInstance<T>, cfg: &'a SolverConfig<T>) -> Self {
        let reference = instance.reference_solution().filter(|_| instance.coupling.b_full_column_rank());
        Self { instance, cfg, reference }
    }

    fn metric(&self, tag: MetricTag) -> MetricKind<'a, T> {
        MetricKind::new(tag, self.cfg.alpha, self.cfg.beta, &self.cfg.weights, self.instance.coupling.b())
    }

    fn dist_sq(&self, u: &IterateState<T>) -> Option<T> {
        self.reference.map(|r| weighted_sq_norm(&(u - r), &self.metric(MetricTag::HAlpha)))
    }

    fn initial(&self, u0: &IterateState<T>) -> Result<TraceRecord> {
        let residual = self.instance.coupling.residual(&u0.x, &u0.y).norm();
        Ok(TraceRecord {
            iter: 0,
            objective: to_f64(self.instance.oracle.objective(&u0.x, &u0.y)),
            primal_residual: to_f64(residual),
            kkt_residual: to_f64(kkt_residual(self.instance, u0)?),
            step_sq_h0: 0.0,
            dist_sq_metric: self.dist_sq(u0).map_or(-1.0, to_f64),
            cert_lhs: -1.0,
            cert_rhs: -1.0,
            time_ns: 0,
        })
    }

    fn record(&self, iter: usize, u_k: &IterateState<T>, step: &StepOutcome<T>, start: Instant) -> Result<TraceRecord> {
        let next = &step.next;
        let delta = u_k - next;
        let step_sq_h0 = weighted_sq_norm(&delta, &self.metric(MetricTag::H0));
        let dist_next = self.dist_sq(next);
        let (cert_lhs, cert_rhs) = match (self.dist_sq(u_k), dist_next) {
            (Some(before), Some(after)) => {
                let rhs = if self.cfg.variant.doubly_proximal() {
                    weighted_sq_norm(&(u_k - &step.aux), &self.metric(MetricTag::H0))
                } else {
                    weighted_sq_norm(&delta, &self.metric(MetricTag::Gamma0))
                };
                (to_f64(before - after), to_f64(rhs))
            }
            _ => (-1.0, -1.0),
        };
        Ok(TraceRecord {
            iter,
            objective: to_f64(self.instance.oracle.objective(&next.x, &next.y)),
            primal_residual: to_f64(step.primal_residual),
            kkt_residual: to_f64(kkt_residual(self.instance, next)?),
            step_sq_h0: to_f64(step_sq_h0),
            dist_sq_metric: dist_next.map_or(-1.0, to_f64),
            cert_lhs,
            cert_rhs,
            time_ns: start.elapsed().as_nanos() as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{toy_qp_instance, ProximalWeight};

    fn toy_step(variant: Variant, alpha: f64, g1: f64, g2: f64) -> IterateState<f64> {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(variant, Some(alpha), 1.0, ProximalWeights::scaled(g1, g2)).unwrap();
        dpgadmm_step(&inst, &inst.zero_iterate(), &cfg).unwrap().next
    }

    fn assert_state(u: &IterateState<f64>, expected: [f64; 3]) {
        let got = [u.x[0], u.y[0], u.lambda[0]];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() <= 1e-12, "got {got:?}, expected {expected:?}");
        }
    }

    // Expected first iterates are the scalar stationarity equations solved by hand.
    #[test]
    fn admm_first_step() {
        assert_state(&toy_step(Variant::Admm, 1.0, 0.0, 0.0), [0.5, 1.25, 0.75]);
    }

    #[test]
    fn gadmm_first_step() {
        assert_state(&toy_step(Variant::Gadmm, 1.5, 0.0, 0.0), [0.5, 1.375, 0.625]);
    }

    #[test]
    fn dpgadmm_first_step() {
        assert_state(&toy_step(Variant::DpGadmm, 1.0, 1.0, 1.0), [1.0 / 3.0, 7.0 / 9.0, 4.0 / 9.0]);
    }

    #[test]
    fn pgadmm_first_step() {
        assert_state(&toy_step(Variant::PGadmm, 1.5, 1.0, 0.0), [1.0 / 3.0, 1.25, 0.75]);
    }

    #[test]
    fn aux_point_and_residuals() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::DpGadmm, Some(1.5), 0.7, ProximalWeights::scaled(1.0, 2.0)).unwrap();
        let u = IterateState::from_slices(&[0.3], &[-0.2], &[0.9]);
        let s = dpgadmm_step(&inst, &u, &cfg).unwrap();
        assert_eq!(s.aux.x, s.next.x);
        assert_eq!(s.aux.y, s.next.y);
        assert_eq!(s.aux.lambda[0], 0.9 - 0.7 * (s.next.x[0] - (-0.2)));
        let r = (s.next.x[0] - s.next.y[0]).abs();
        assert!((s.primal_residual - r).abs() <= 1e-14 * (1.0 + r));
        let d = &s.step_sq_norms;
        assert_eq!(d.dx, (s.next.x[0] - 0.3).powi(2));
        assert_eq!(d.b_dy, d.dy);
    }

    #[test]
    fn specialization_rules() {
        let w = ProximalWeights::<f64>::zero();
        assert_eq!(Variant::Admm.specialize(None, w.clone()).unwrap().0, 1.0);
        assert!(Variant::Admm.specialize(Some(1.5), w.clone()).is_err());
        assert!(Variant::DpAdmm.specialize(Some(0.5), w.clone()).is_err());
        let g2 = ProximalWeights::new(ProximalWeight::Zero, ProximalWeight::ScaledIdentity(2.0));
        let err = Variant::PGadmm.specialize(Some(1.5), g2.clone()).unwrap_err();
        assert!(matches!(err, Error::VariantConfigConflict { .. }));
        assert!(Variant::Gadmm.specialize(Some(1.5), ProximalWeights::scaled(1.0, 0.0)).is_err());
        assert!(Variant::DpGadmm.specialize(Some(1.5), g2).is_ok());
    }

    #[test]
    fn gadmm_at_unit_alpha_equals_admm() {
        let a = toy_step(Variant::Gadmm, 1.0, 0.0, 0.0);
        let b = toy_step(Variant::Admm, 1.0, 0.0, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn dpgadmm_at_unit_alpha_equals_dpadmm() {
        assert_eq!(toy_step(Variant::DpGadmm, 1.0, 1.0, 2.0), toy_step(Variant::DpAdmm, 1.0, 1.0, 2.0));
    }

    #[test]
    fn config_validation() {
        let w = ProximalWeights::<f64>::zero();
        assert!(SolverConfig::new(Variant::Gadmm, Some(2.0), 1.0, w.clone()).is_err());
        assert!(SolverConfig::new(Variant::Gadmm, Some(0.0), 1.0, w.clone()).is_err());
        assert!(SolverConfig::new(Variant::Gadmm, Some(1.0), 0.0, w.clone()).is_err());
        let cfg = SolverConfig::new(Variant::Gadmm, Some(1.0), 1.0, w).unwrap();
        assert!(cfg.clone().with_tol(0.0).validate().is_err());
        assert!(cfg.with_max_iter(0).validate().is_err());
    }

    #[test]
    fn variant_parsing() {
        for v in Variant::ALL {
            assert_eq!(v.key().parse::<Variant>().unwrap(), v);
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("adm-g".parse::<Variant>().is_err());
    }

    #[test]
    fn toy_admm_converges_to_reference() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::Admm, None, 1.0, ProximalWeights::zero()).unwrap().with_tol(1e-10);
        let res = run(&inst, &inst.zero_iterate(), &cfg).unwrap();
        assert!(res.converged);
        let err = (&res.final_state - inst.reference_solution().unwrap()).norm();
        assert!(err < 1e-8, "error {err:e}");
        assert_eq!(res.trace.len(), res.iterations + 1);
        assert!(res.trace.last().unwrap().kkt_residual < res.trace[0].kkt_residual);
    }

    #[test]
    fn start_at_fixed_point_hits_zero_denominator() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::Admm, None, 1.0, ProximalWeights::zero()).unwrap();
        let u_star = inst.reference_solution().unwrap().clone();
        let res = run(&inst, &u_star, &cfg).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.termination, Termination::DenominatorZero);
    }

    #[test]
    fn relative_step_comparison() {
        // max(3e-7, 5e-7) / 1.0 against tol 1e-6
        let ratio = 3e-7f64.max(5e-7) / 1.0;
        assert!(ratio < 1e-6);
    }

    #[test]
    fn kkt_stop_rule() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::DpGadmm, Some(1.5), 1.0, ProximalWeights::scaled(1.0, 1.0))
            .unwrap()
            .with_stop_rule(StopRule::KktResidual)
            .with_tol(1e-9);
        let res = run(&inst, &inst.zero_iterate(), &cfg).unwrap();
        assert!(res.converged);
        assert!(res.trace.last().unwrap().kkt_residual < 1e-9);
        assert!(res.trace[res.trace.len() - 2].kkt_residual >= 1e-9);
    }

    #[test]
    fn max_iter_reported() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::Admm, None, 1.0, ProximalWeights::zero())
            .unwrap()
            .with_tol(1e-15)
            .with_max_iter(3);
        let res = run(&inst, &inst.zero_iterate(), &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert_eq!(res.termination, Termination::MaxIterations);
    }

    #[test]
    fn nonfinite_start_rejected() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::Admm, None, 1.0, ProximalWeights::zero()).unwrap();
        let u = IterateState::from_slices(&[f64::NAN], &[0.0], &[0.0]);
        assert!(matches!(run(&inst, &u, &cfg), Err(Error::NonFinite { iteration: 0 })));
    }

    #[test]
    fn runs_in_single_precision() {
        let inst = toy_qp_instance::<f32>();
        let cfg = SolverConfig::new(Variant::PGadmm, Some(1.5f32), 1.0, ProximalWeights::scaled(1.0, 0.0))
            .unwrap()
            .with_tol(1e-5);
        let res = run(&inst, &inst.zero_iterate(), &cfg).unwrap();
        let err = (&res.final_state - inst.reference_solution().unwrap()).norm();
        assert!(err < 1e-4, "error {err:e}");
    }
}
