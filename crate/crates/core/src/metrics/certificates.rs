//! Per-iteration checks of the contraction inequalities.
//!
//! Every certificate compares two computed quantities `lhs ≥ rhs` and
//! passes when `lhs − rhs ≥ −1e-9·(1 + |lhs| + |rhs|)`.

use nalgebra::DVector;

use super::{compute_delta, weighted_sq_norm, MetricKind, MetricTag};
use crate::error::{Error, Result};
use crate::problem::{IterateState, LinearCoupling, ProximalWeights};
use crate::scalar::{epsilon, lit, Real};
use crate::solvers::{SolverConfig, StepOutcome};

const CERT_RTOL: f64 = 1e-9;
const IDENTITY_RTOL: f64 = 1e-10;

/// Parameters a certificate needs besides the iterates.
#[derive(Clone, Copy, Debug)]
pub struct CertContext<'a, T: Real> {
    pub alpha: T,
    pub beta: T,
    pub weights: &'a ProximalWeights<T>,
    pub coupling: &'a LinearCoupling<T>,
    pub iteration: usize,
}

impl<'a, T: Real> CertContext<'a, T> {
    pub fn new(cfg: &'a SolverConfig<T>, coupling: &'a LinearCoupling<T>, iteration: usize) -> Self {
        Self { alpha: cfg.alpha, beta: cfg.beta, weights: &cfg.weights, coupling, iteration }
    }

    pub fn at(self, iteration: usize) -> Self {
        Self { iteration, ..self }
    }

    fn metric(&self, tag: MetricTag) -> MetricKind<'a, T> {
        MetricKind::new(tag, self.alpha, self.beta, self.weights, self.coupling.b())
    }

    fn sq(&self, u: &IterateState<T>, tag: MetricTag) -> T {
        weighted_sq_norm(u, &self.metric(tag))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport<T> {
    pub label: &'static str,
    pub lhs: T,
    pub rhs: T,
    /// `lhs − rhs`.
    pub slack: T,
    pub passed: bool,
    pub iteration: usize,
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> CertificateReport<T> {
    pub fn new(label: &'static str, lhs: T, rhs: T, ctx: &CertContext<'_, T>) -> Self {
        let slack = lhs - rhs;
        let passed = slack >= -Self::tolerance_for(lhs, rhs);
        Self { label, lhs, rhs, slack, passed, iteration: ctx.iteration, alpha: ctx.alpha, beta: ctx.beta }
    }

    fn tolerance_for(lhs: T, rhs: T) -> T {
        lit::<T>(CERT_RTOL) * (T::one() + lhs.abs() + rhs.abs())
    }

    pub fn tolerance(&self) -> T {
        Self::tolerance_for(self.lhs, self.rhs)
    }

    /// Slack divided by `1 + |lhs| + |rhs|`.
    pub fn relative_slack(&self) -> T {
        self.slack / (T::one() + self.lhs.abs() + self.rhs.abs())
    }
}

fn reference<'u, T: Real>(u_star: Option<&'u IterateState<T>>, coupling: &LinearCoupling<T>) -> Result<&'u IterateState<T>> {
    let u_star = u_star.ok_or(Error::MissingReference)?;
    if !coupling.b_full_column_rank() {
        return Err(Error::RankDeficientB);
    }
    Ok(u_star)
}

/// `‖u^k − u*‖²_{Γ_α} − ‖u^{k+1} − u*‖²_{Γ_α} ≥ ‖u^k − u^{k+1}‖²_{Γ₀}`.
///
/// Valid for the singly proximal schemes when `y^k` itself came out of a
/// y-subproblem (always true for `k ≥ 1`).
pub fn certify_descent_pgadmm<T: Real>(
    ctx: &CertContext<'_, T>,
    u_k: &IterateState<T>,
    u_next: &IterateState<T>,
    u_star: Option<&IterateState<T>>,
) -> Result<CertificateReport<T>> {
    let u_star = reference(u_star, ctx.coupling)?;
    let lhs = ctx.sq(&(u_k - u_star), MetricTag::GammaAlpha) - ctx.sq(&(u_next - u_star), MetricTag::GammaAlpha);
    let rhs = ctx.sq(&(u_k - u_next), MetricTag::Gamma0);
    Ok(CertificateReport::new("descent_gamma_alpha", lhs, rhs, ctx))
}

/// The three doubly proximal inequalities at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublyProximalReports<T> {
    /// `H_α` drop ≥ `‖u^k − ū^k‖²_{H₀}`.
    pub aux_descent: CertificateReport<T>,
    /// `H_α` drop ≥ `δ‖u^k − u^{k+1}‖²_{H₀}`.
    pub delta_descent: CertificateReport<T>,
    /// `‖u^k − ū^k‖²_{H₀} ≥ δ‖u^k − u^{k+1}‖²_{H₀}`.
    pub aux_step_bound: CertificateReport<T>,
    pub delta: T,
}

impl<T: Real> DoublyProximalReports<T> {
    pub fn all_passed(&self) -> bool {
        self.aux_descent.passed && self.delta_descent.passed && self.aux_step_bound.passed
    }
}

pub fn certify_descent_dpgadmm<T: Real>(
    ctx: &CertContext<'_, T>,
    u_k: &IterateState<T>,
    step: &StepOutcome<T>,
    u_star: Option<&IterateState<T>>,
) -> Result<DoublyProximalReports<T>> {
    let u_star = reference(u_star, ctx.coupling)?;
    let g2 = &ctx.weights.g2;
    if !g2.strictly_positive_definite() || !ctx.weights.g1.strictly_positive_definite() {
        return Err(Error::RequiresPositiveDefinite("the doubly proximal certificates need G1, G2 > 0".into()));
    }
    let delta = compute_delta(ctx.alpha, ctx.beta, ctx.coupling.b().spectral_norm(), g2.lambda_min())?;
    let drop = ctx.sq(&(u_k - u_star), MetricTag::HAlpha) - ctx.sq(&(&step.next - u_star), MetricTag::HAlpha);
    let aux_gap = ctx.sq(&(u_k - &step.aux), MetricTag::H0);
    let step_h0 = delta * ctx.sq(&(u_k - &step.next), MetricTag::H0);
    Ok(DoublyProximalReports {
        aux_descent: CertificateReport::new("descent_h_alpha_aux", drop, aux_gap, ctx),
        delta_descent: CertificateReport::new("descent_h_alpha_delta", drop, step_h0, ctx),
        aux_step_bound: CertificateReport::new("aux_step_bound", aux_gap, step_h0, ctx),
        delta,
    })
}

/// `‖u^k − u^{k+1}‖²_{Γ₀} ≥ σ‖e(u^{k+1}, 1)‖²` with `kkt_next = ‖e(u^{k+1}, 1)‖`.
///
/// The selection-based residual bounds the true distance from above, so a
/// pass here implies a pass with the exact distance.
pub fn certify_residual_bound<T: Real>(
    ctx: &CertContext<'_, T>,
    u_k: &IterateState<T>,
    u_next: &IterateState<T>,
    kkt_next: T,
    sigma: T,
) -> CertificateReport<T> {
    let lhs = ctx.sq(&(u_k - u_next), MetricTag::Gamma0);
    CertificateReport::new("residual_bound_sigma", lhs, sigma * kkt_next * kkt_next, ctx)
}

/// `‖u^k − u^{k+1}‖²_{H₀} / max(‖e(u^{k+1}, 1)‖², ε²)`: the doubly proximal
/// analogue of `σ` has no closed form, so runs report the smallest value
/// of this ratio instead.
pub fn residual_ratio_h0<T: Real>(ctx: &CertContext<'_, T>, u_k: &IterateState<T>, u_next: &IterateState<T>, kkt_next: T) -> T {
    let eps = epsilon::<T>();
    ctx.sq(&(u_k - u_next), MetricTag::H0) / (kkt_next * kkt_next).max(eps * eps)
}

/// An exact algebraic identity evaluated in floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck<T> {
    pub label: &'static str,
    /// Norm of the difference between the two sides.
    pub defect: T,
    /// `1e-10·(1 + ‖λ^k‖)`.
    pub tol: T,
    pub passed: bool,
    pub iteration: usize,
}

impl<T: Real> IdentityCheck<T> {
    fn new(label: &'static str, lhs: DVector<T>, rhs: DVector<T>, lambda_k: &DVector<T>, iteration: usize) -> Self {
        let defect = (lhs - rhs).norm();
        let tol = lit::<T>(IDENTITY_RTOL) * (T::one() + lambda_k.norm());
        Self { label, defect, tol, passed: defect <= tol, iteration }
    }
}

/// `β(Ax^{k+1} + By^k − b) = (1/α)(λ^k − λ^{k+1}) + (β/α)(By^k − By^{k+1})`.
pub fn check_lambda_identity<T: Real>(ctx: &CertContext<'_, T>, u_k: &IterateState<T>, u_next: &IterateState<T>) -> IdentityCheck<T> {
    let c = ctx.coupling;
    let (alpha, beta) = (ctx.alpha, ctx.beta);
    let by_k = c.b().apply(&u_k.y);
    let lhs = (c.a().apply(&u_next.x) + &by_k - c.rhs()) * beta;
    let rhs = (&u_k.lambda - &u_next.lambda) / alpha + (by_k - c.b().apply(&u_next.y)) * (beta / alpha);
    IdentityCheck::new("lambda_identity", lhs, rhs, &u_k.lambda, ctx.iteration)
}

/// `λ^k − λ^{k+1} = α(λ^k − λ̄^k) − βB(y^k − ȳ^k)`.
pub fn check_aux_identity<T: Real>(ctx: &CertContext<'_, T>, u_k: &IterateState<T>, step: &StepOutcome<T>) -> IdentityCheck<T> {
    let lhs = &u_k.lambda - &step.next.lambda;
    let rhs = (&u_k.lambda - &step.aux.lambda) * ctx.alpha - ctx.coupling.b().apply(&(&u_k.y - &step.aux.y)) * ctx.beta;
    IdentityCheck::new("lambda_aux_identity", lhs, rhs, &u_k.lambda, ctx.iteration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_sigma;
    use crate::problem::toy_qp_instance;
    use crate::solvers::{dpgadmm_step, Variant};

    fn toy_cfg(variant: Variant, alpha: f64, g1: f64, g2: f64) -> SolverConfig<f64> {
        SolverConfig::new(variant, Some(alpha), 1.0, ProximalWeights::scaled(g1, g2)).unwrap()
    }

    #[test]
    fn pgadmm_first_step_descends() {
        let inst = toy_qp_instance::<f64>();
        let cfg = toy_cfg(Variant::PGadmm, 1.5, 1.0, 0.0);
        let u0 = inst.zero_iterate();
        let step = dpgadmm_step(&inst, &u0, &cfg).unwrap();
        let ctx = CertContext::new(&cfg, &inst.coupling, 0);
        let r = certify_descent_pgadmm(&ctx, &u0, &step.next, inst.reference_solution()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.lhs > 0.0);
    }

    #[test]
    fn stationary_point_gives_zero_slack() {
        let inst = toy_qp_instance::<f64>();
        let cfg = toy_cfg(Variant::DpGadmm, 1.0, 1.0, 1.0);
        let u = inst.reference_solution().unwrap().clone();
        let ctx = CertContext::new(&cfg, &inst.coupling, 3);
        let r = certify_descent_pgadmm(&ctx, &u, &u, Some(&u)).unwrap();
        assert_eq!((r.lhs, r.rhs, r.slack, r.passed), (0.0, 0.0, 0.0, true));
        let step = dpgadmm_step(&inst, &u, &cfg).unwrap();
        let d = certify_descent_dpgadmm(&ctx, &u, &step, Some(&u)).unwrap();
        assert!(d.all_passed());
        assert_eq!(d.aux_descent.lhs, 0.0);
        let s = certify_residual_bound(&ctx, &u, &u, 0.0, 1.0 / 3.0);
        assert!(s.passed && s.rhs == 0.0);
    }

    #[test]
    fn dpgadmm_first_step_certificates() {
        let inst = toy_qp_instance::<f64>();
        let cfg = toy_cfg(Variant::DpGadmm, 1.0, 1.0, 1.0);
        let u0 = inst.zero_iterate();
        let step = dpgadmm_step(&inst, &u0, &cfg).unwrap();
        // ū = (1/3, 7/9, 0 − (1/3 − 0)) by the auxiliary-point formula.
        assert!((step.aux.lambda[0] + 1.0 / 3.0).abs() < 1e-15);
        let ctx = CertContext::new(&cfg, &inst.coupling, 0);
        let d = certify_descent_dpgadmm(&ctx, &u0, &step, inst.reference_solution()).unwrap();
        assert!(d.aux_descent.passed && d.delta_descent.passed && d.aux_step_bound.passed, "{d:?}");
        assert!((d.delta - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn missing_reference_and_weights() {
        let inst = toy_qp_instance::<f64>();
        let cfg = toy_cfg(Variant::PGadmm, 1.0, 1.0, 0.0);
        let u = inst.zero_iterate();
        let ctx = CertContext::new(&cfg, &inst.coupling, 0);
        assert!(matches!(certify_descent_pgadmm(&ctx, &u, &u, None), Err(Error::MissingReference)));
        let step = dpgadmm_step(&inst, &u, &cfg).unwrap();
        assert!(matches!(
            certify_descent_dpgadmm(&ctx, &u, &step, inst.reference_solution()),
            Err(Error::RequiresPositiveDefinite(_))
        ));
    }

    #[test]
    fn rank_deficient_b_refused() {
        use crate::problem::LinearMap;
        use nalgebra::DMatrix;
        let coupling = LinearCoupling::new(
            LinearMap::dense(DMatrix::identity(2, 2)),
            LinearMap::dense(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])),
            DVector::zeros(2),
        )
        .unwrap();
        let weights = ProximalWeights::scaled(1.0, 0.0);
        let ctx = CertContext { alpha: 1.0, beta: 1.0, weights: &weights, coupling: &coupling, iteration: 0 };
        let u = IterateState::zeros(2, 2, 2);
        assert!(matches!(certify_descent_pgadmm(&ctx, &u, &u, Some(&u)), Err(Error::RankDeficientB)));
    }

    #[test]
    fn toy_run_satisfies_everything() {
        let inst = toy_qp_instance::<f64>();
        for (variant, alpha, g2) in [(Variant::PGadmm, 1.0, 0.0), (Variant::PGadmm, 1.5, 0.0), (Variant::DpGadmm, 0.5, 1.0)] {
            let cfg = toy_cfg(variant, alpha, 1.0, g2);
            let sigma = compute_sigma(alpha, 1.0, 1.0, &cfg.weights.g1).unwrap().sigma;
            let mut u = inst.zero_iterate();
            // Step once so that y^k is a y-subproblem output.
            u = dpgadmm_step(&inst, &u, &cfg).unwrap().next;
            for k in 1..60 {
                let step = dpgadmm_step(&inst, &u, &cfg).unwrap();
                let ctx = CertContext::new(&cfg, &inst.coupling, k);
                let kkt = crate::metrics::kkt_residual(&inst, &step.next).unwrap();
                if variant == Variant::PGadmm {
                    assert!(certify_descent_pgadmm(&ctx, &u, &step.next, inst.reference_solution()).unwrap().passed);
                    assert!(certify_residual_bound(&ctx, &u, &step.next, kkt, sigma).passed);
                } else {
                    assert!(certify_descent_dpgadmm(&ctx, &u, &step, inst.reference_solution()).unwrap().all_passed());
                }
                assert!(check_lambda_identity(&ctx, &u, &step.next).passed);
                assert!(check_aux_identity(&ctx, &u, &step).passed);
                u = step.next;
            }
        }
    }

    #[test]
    fn report_tolerance_rule() {
        let weights = ProximalWeights::<f64>::zero();
        let inst = toy_qp_instance::<f64>();
        let ctx = CertContext { alpha: 1.0, beta: 1.0, weights: &weights, coupling: &inst.coupling, iteration: 0 };
        assert!(CertificateReport::new("t", 1.0, 1.0 + 2.9e-9, &ctx).passed);
        assert!(!CertificateReport::new("t", 1.0, 1.0 + 3.1e-9, &ctx).passed);
    }
}
