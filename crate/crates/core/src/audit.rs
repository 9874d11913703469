//! Runs a solver and evaluates the contraction certificates at every
//! iteration.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{
    certify_descent_dpgadmm, certify_descent_pgadmm, certify_residual_bound, check_aux_identity,
    check_lambda_identity, compute_sigma, error_map, estimate_rate_from_sq_distances, kkt_residual,
    residual_ratio_h0, CertContext, CertificateReport, MetricTag, RateEstimate,
};
use crate::problem::{IterateState, ProblemInstance};
use crate::scalar::{lit, to_f64, Real};
use crate::solvers::{run_observed, RunResult, SolverConfig, StepOutcome};

/// Tail fraction used for the rate estimate.
pub const RATE_TAIL: f64 = 0.5;

/// Certificate families selectable on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertKind {
    /// `Γ_α` descent for the singly proximal schemes.
    L31,
    /// Residual bound with the computed `σ`.
    L32,
    /// `H_α` descent against the auxiliary point.
    L41,
    /// `H_α` descent with the computed `δ`, and the auxiliary step bound.
    L42,
    /// The two multiplier identities.
    Identities,
}

impl CertKind {
    pub const ALL: [CertKind; 5] = [CertKind::L31, CertKind::L32, CertKind::L41, CertKind::L42, CertKind::Identities];

    pub fn key(self) -> &'static str {
        match self {
            CertKind::L31 => "l31",
            CertKind::L32 => "l32",
            CertKind::L41 => "l41",
            CertKind::L42 => "l42",
            CertKind::Identities => "identities",
        }
    }

    fn applicable<T: Real>(self, cfg: &SolverConfig<T>) -> std::result::Result<(), String> {
        let w = &cfg.weights;
        let singly = w.g2.is_zero();
        match self {
            CertKind::L31 if !singly => Err("l31 needs G2 = 0 (ADMM, GADMM or their proximal forms)".into()),
            CertKind::L32 if !singly => Err("l32 needs G2 = 0".into()),
            CertKind::L32 if !w.g1.strictly_positive_definite() => Err("l32 needs a positive definite G1".into()),
            CertKind::L41 | CertKind::L42 if !cfg.variant.doubly_proximal() || singly => {
                Err(format!("{} needs a doubly proximal scheme with G2 != 0", self.key()))
            }
            CertKind::L42 if !(w.g1.strictly_positive_definite() && w.g2.strictly_positive_definite()) => {
                Err("l42 needs positive definite G1 and G2".into())
            }
            _ => Ok(()),
        }
    }
}

/// `all` or one family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertSelection {
    All,
    One(CertKind),
}

impl FromStr for CertSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(CertSelection::All);
        }
        CertKind::ALL
            .into_iter()
            .find(|k| k.key() == s)
            .map(CertSelection::One)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown certificate '{s}'")))
    }
}

impl CertSelection {
    /// Families to evaluate for `cfg`. `all` keeps the applicable ones; a
    /// single family that does not apply is a precondition error.
    pub fn resolve<T: Real>(self, cfg: &SolverConfig<T>) -> Result<Vec<CertKind>> {
        match self {
            CertSelection::All => Ok(CertKind::ALL.into_iter().filter(|k| k.applicable(cfg).is_ok()).collect()),
            CertSelection::One(kind) => match kind.applicable(cfg) {
                Ok(()) => Ok(vec![kind]),
                Err(msg) if matches!(kind, CertKind::L32 | CertKind::L42) && msg.contains("positive definite") => {
                    Err(Error::RequiresPositiveDefinite(msg))
                }
                Err(msg) => Err(Error::InvalidConfig(msg)),
            },
        }
    }
}

/// Pass statistics for one inequality or identity over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub label: &'static str,
    pub checked: usize,
    pub passed: usize,
    pub skipped: usize,
    /// Smallest `slack / (1 + |lhs| + |rhs|)` seen (identities: `−defect / (1 + ‖λ^k‖)`).
    pub worst_relative_slack: f64,
    pub worst_iteration: usize,
}

impl Tally {
    fn new(label: &'static str) -> Self {
        Self { label, checked: 0, passed: 0, skipped: 0, worst_relative_slack: f64::INFINITY, worst_iteration: 0 }
    }

    fn add(&mut self, passed: bool, relative_slack: f64, iteration: usize) {
        self.checked += 1;
        if passed {
            self.passed += 1;
        }
        if relative_slack < self.worst_relative_slack || relative_slack.is_nan() {
            self.worst_relative_slack = relative_slack;
            self.worst_iteration = iteration;
        }
    }

    fn add_report<T: Real>(&mut self, r: &CertificateReport<T>) {
        self.add(r.passed, to_f64(r.relative_slack()), r.iteration);
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.checked
    }
}

impl fmt::Display for Tally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} passed", self.label, self.passed, self.checked)?;
        if self.skipped > 0 {
            write!(f, ", {} skipped", self.skipped)?;
        }
        if self.checked > 0 {
            write!(f, ", worst relative slack {:e} at k={}", self.worst_relative_slack, self.worst_iteration)?;
        }
        Ok(())
    }
}

/// Outcome of [`certify_run`].
#[derive(Clone, Debug)]
pub struct AuditReport<T: Real> {
    pub run: RunResult<T>,
    pub kinds: Vec<CertKind>,
    pub tallies: Vec<Tally>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
    /// Smallest `‖Δu‖²_{H₀} / ‖e(u^{k+1}, 1)‖²` along a doubly proximal run.
    pub min_residual_ratio_h0: Option<f64>,
    /// `Γ_α` descent at `k = 0` is only claimed when `y⁰` is stationary for
    /// the y-block; otherwise it is skipped and this records whether it
    /// would have passed anyway.
    pub initial_descent_skipped: Option<bool>,
    pub rate: Option<RateEstimate<f64>>,
}

impl<T: Real> AuditReport<T> {
    pub fn all_passed(&self) -> bool {
        self.tallies.iter().all(Tally::all_passed)
    }

    pub fn tally(&self, label: &str) -> Option<&Tally> {
        self.tallies.iter().find(|t| t.label == label)
    }
}

struct Auditor<'a, T: Real> {
    instance: &'a ProblemInstance<T>,
    cfg: &'a SolverConfig<T>,
    kinds: Vec<CertKind>,
    sigma: Option<T>,
    tallies: Vec<Tally>,
    min_ratio: Option<T>,
    initial_skip: Option<bool>,
    y0_stationary: bool,
    error: Option<Error>,
}

impl<'a, T: Real> Auditor<'a, T> {
    fn tally(&mut self, label: &'static str) -> &mut Tally {
        if let Some(i) = self.tallies.iter().position(|t| t.label == label) {
            &mut self.tallies[i]
        } else {
            self.tallies.push(Tally::new(label));
            self.tallies.last_mut().expect("just pushed")
        }
    }

    fn observe(&mut self, k: usize, u_k: &IterateState<T>, step: &StepOutcome<T>) -> Result<()> {
        let ctx = CertContext::new(self.cfg, &self.instance.coupling, k);
        let u_star = self.instance.reference_solution();
        let need_kkt = self.kinds.contains(&CertKind::L32) || self.cfg.variant.doubly_proximal();
        let kkt_next = if need_kkt { kkt_residual(self.instance, &step.next)? } else { T::zero() };

        for kind in self.kinds.clone() {
            match kind {
                CertKind::L31 => {
                    let r = certify_descent_pgadmm(&ctx, u_k, &step.next, u_star)?;
                    if k == 0 && !self.y0_stationary {
                        self.initial_skip = Some(r.passed);
                        self.tally(r.label).skipped += 1;
                    } else {
                        self.tally(r.label).add_report(&r);
                    }
                }
                CertKind::L32 => {
                    let sigma = self.sigma.expect("sigma computed for l32");
                    let r = certify_residual_bound(&ctx, u_k, &step.next, kkt_next, sigma);
                    self.tally(r.label).add_report(&r);
                }
                CertKind::L41 | CertKind::L42 => {
                    let pd = self.cfg.weights.g1.strictly_positive_definite() && self.cfg.weights.g2.strictly_positive_definite();
                    if !pd {
                        // Only the auxiliary descent is defined without positive definiteness.
                        let r = aux_descent_only(&ctx, u_k, step, u_star)?;
                        self.tally(r.label).add_report(&r);
                        continue;
                    }
                    let d = certify_descent_dpgadmm(&ctx, u_k, step, u_star)?;
                    if kind == CertKind::L41 {
                        self.tally(d.aux_descent.label).add_report(&d.aux_descent);
                    } else {
                        self.tally(d.delta_descent.label).add_report(&d.delta_descent);
                        self.tally(d.aux_step_bound.label).add_report(&d.aux_step_bound);
                    }
                }
                CertKind::Identities => {
                    for check in [check_lambda_identity(&ctx, u_k, &step.next), check_aux_identity(&ctx, u_k, step)] {
                        let scale = T::one() + u_k.lambda.norm();
                        self.tally(check.label).add(check.passed, -to_f64(check.defect / scale), k);
                    }
                }
            }
        }
        if self.cfg.variant.doubly_proximal() && !self.cfg.weights.g2.is_zero() {
            let ratio = residual_ratio_h0(&ctx, u_k, &step.next, kkt_next);
            self.min_ratio = Some(self.min_ratio.map_or(ratio, |m| m.min(ratio)));
        }
        Ok(())
    }
}

fn aux_descent_only<T: Real>(
    ctx: &CertContext<'_, T>,
    u_k: &IterateState<T>,
    step: &StepOutcome<T>,
    u_star: Option<&IterateState<T>>,
) -> Result<CertificateReport<T>> {
    use crate::metrics::{weighted_sq_norm, MetricKind};
    let u_star = u_star.ok_or(Error::MissingReference)?;
    if !ctx.coupling.b_full_column_rank() {
        return Err(Error::RankDeficientB);
    }
    let metric = |tag| MetricKind::new(tag, ctx.alpha, ctx.beta, ctx.weights, ctx.coupling.b());
    let h = metric(MetricTag::HAlpha);
    let drop = weighted_sq_norm(&(u_k - u_star), &h) - weighted_sq_norm(&(&step.next - u_star), &h);
    let gap = weighted_sq_norm(&(u_k - &step.aux), &metric(MetricTag::H0));
    Ok(CertificateReport::new("descent_h_alpha_aux", drop, gap, ctx))
}

/// Runs `cfg` from `u0` on an instance with a reference solution and checks
/// the selected certificates after every iteration.
pub fn certify_run<T: Real>(
    instance: &ProblemInstance<T>,
    u0: &IterateState<T>,
    cfg: &SolverConfig<T>,
    selection: CertSelection,
) -> Result<AuditReport<T>> {
    let kinds = selection.resolve(cfg)?;
    let needs_reference = kinds.iter().any(|k| matches!(k, CertKind::L31 | CertKind::L41 | CertKind::L42));
    if needs_reference {
        if instance.reference_solution().is_none() {
            return Err(Error::MissingReference);
        }
        if !instance.coupling.b_full_column_rank() {
            return Err(Error::RankDeficientB);
        }
    }
    let sigma = if kinds.contains(&CertKind::L32) {
        Some(compute_sigma(cfg.alpha, cfg.beta, instance.coupling.a().spectral_norm(), &cfg.weights.g1)?.sigma)
    } else {
        None
    };
    let delta = if kinds.contains(&CertKind::L42) {
        Some(crate::metrics::compute_delta(
            cfg.alpha,
            cfg.beta,
            instance.coupling.b().spectral_norm(),
            cfg.weights.g2.lambda_min(),
        )?)
    } else {
        None
    };
    let e0 = error_map(instance, u0, T::one())?;
    let y0_stationary = e0.e_y.norm() <= lit::<T>(1e-12) * (T::one() + u0.y.norm());

    let mut auditor = Auditor {
        instance,
        cfg,
        kinds: kinds.clone(),
        sigma,
        tallies: Vec::new(),
        min_ratio: None,
        initial_skip: None,
        y0_stationary,
        error: None,
    };
    let run = run_observed(instance, u0, cfg, |k, u_k, step| {
        if auditor.error.is_none() {
            if let Err(e) = auditor.observe(k, u_k, step) {
                auditor.error = Some(e);
            }
        }
    })?;
    if let Some(e) = auditor.error {
        return Err(e);
    }

    let dists: Vec<f64> = run.trace.iter().map(|r| r.dist_sq_metric).collect();
    let rate = if dists.iter().all(|&d| d >= 0.0) {
        let tag = if cfg.weights.g2.is_zero() { MetricTag::GammaAlpha } else { MetricTag::HAlpha };
        estimate_rate_from_sq_distances(&dists, tag, RATE_TAIL).ok()
    } else {
        None
    };
    Ok(AuditReport {
        run,
        kinds,
        tallies: auditor.tallies,
        sigma: sigma.map(to_f64),
        delta: delta.map(to_f64),
        min_residual_ratio_h0: auditor.min_ratio.map(to_f64),
        initial_descent_skipped: auditor.initial_skip,
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{toy_qp_instance, ProximalWeights};
    use crate::solvers::Variant;

    fn cfg(variant: Variant, alpha: f64, g1: f64, g2: f64) -> SolverConfig<f64> {
        SolverConfig::new(variant, Some(alpha), 1.0, ProximalWeights::scaled(g1, g2)).unwrap().with_tol(1e-10)
    }

    #[test]
    fn selection_parsing() {
        assert_eq!("all".parse::<CertSelection>().unwrap(), CertSelection::All);
        assert_eq!("l42".parse::<CertSelection>().unwrap(), CertSelection::One(CertKind::L42));
        assert!("l99".parse::<CertSelection>().is_err());
    }

    #[test]
    fn preconditions() {
        let p = cfg(Variant::PGadmm, 1.5, 0.0, 0.0);
        assert!(matches!(CertSelection::One(CertKind::L32).resolve(&p), Err(Error::RequiresPositiveDefinite(_))));
        assert!(CertSelection::One(CertKind::L41).resolve(&p).is_err());
        let all = CertSelection::All.resolve(&cfg(Variant::DpGadmm, 1.5, 1.0, 1.0)).unwrap();
        assert_eq!(all, vec![CertKind::L41, CertKind::L42, CertKind::Identities]);
        let all = CertSelection::All.resolve(&cfg(Variant::PGadmm, 1.5, 1.0, 0.0)).unwrap();
        assert_eq!(all, vec![CertKind::L31, CertKind::L32, CertKind::Identities]);
    }

    #[test]
    fn toy_pgadmm_all() {
        let inst = toy_qp_instance::<f64>();
        let report = certify_run(&inst, &inst.zero_iterate(), &cfg(Variant::PGadmm, 1.5, 1.0, 0.0), CertSelection::All).unwrap();
        assert!(report.all_passed(), "{:?}", report.tallies);
        assert_eq!(report.tally("descent_gamma_alpha").unwrap().skipped, 1);
        assert!((report.sigma.unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!(report.rate.as_ref().unwrap().tau_hat < 1.0);
    }

    #[test]
    fn toy_dpgadmm_all() {
        let inst = toy_qp_instance::<f64>();
        let report = certify_run(&inst, &inst.zero_iterate(), &cfg(Variant::DpGadmm, 1.5, 1.0, 2.0), CertSelection::All).unwrap();
        assert!(report.all_passed(), "{:?}", report.tallies);
        assert!((report.delta.unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!(report.min_residual_ratio_h0.unwrap() > 0.0);
        assert_eq!(report.initial_descent_skipped, None);
    }

    #[test]
    fn stationary_start_is_not_gated() {
        let inst = toy_qp_instance::<f64>();
        let u0 = crate::problem::IterateState::from_slices(&[0.0], &[2.0], &[0.0]);
        let report = certify_run(&inst, &u0, &cfg(Variant::PGadmm, 0.5, 1.0, 0.0), CertSelection::One(CertKind::L31)).unwrap();
        let t = report.tally("descent_gamma_alpha").unwrap();
        assert_eq!(t.skipped, 0);
        assert!(t.all_passed(), "{t}");
    }
}
