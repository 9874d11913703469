//! Weighted norms, the KKT error map, contraction certificates and the
//! empirical linear-rate estimator.

mod certificates;
pub mod constants;
mod rate;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{IterateState, LinearMap, ProblemInstance, ProximalWeights};
use crate::scalar::{lit, to_f64, Real};

pub use certificates::{
    certify_descent_dpgadmm, certify_descent_pgadmm, certify_residual_bound, check_aux_identity,
    check_lambda_identity, residual_ratio_h0, CertContext, CertificateReport, DoublyProximalReports,
    IdentityCheck,
};
pub use constants::{compute_delta, compute_sigma, SigmaConstants};
pub use rate::{estimate_rate, estimate_rate_from_sq_distances, RateEstimate};

/// Which block matrix defines a weighted norm.
///
/// With `G` the x-weight `G₁`:
///
/// ```text
/// Γ_α = [G 0 0; 0 (β/α)BᵀB ((1−α)/α)Bᵀ; 0 ((1−α)/α)B (1/(αβ))I]      Γ = Γ_1
/// Γ₀  = diag(G, β(2−α)/α² BᵀB, (2−α)/(βα²) I)
/// H_α = Γ_α + diag(0, G₂, 0)                                          H = H_1
/// H₀  = diag(G₁, G₂, (2−α)/β I)
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricTag {
    GammaAlpha,
    Gamma,
    Gamma0,
    HAlpha,
    H,
    H0,
}

impl MetricTag {
    pub fn name(self) -> &'static str {
        match self {
            MetricTag::GammaAlpha => "Gamma_alpha",
            MetricTag::Gamma => "Gamma",
            MetricTag::Gamma0 => "Gamma_0",
            MetricTag::HAlpha => "H_alpha",
            MetricTag::H => "H",
            MetricTag::H0 => "H_0",
        }
    }
}

/// A metric tag together with the parameters its blocks depend on.
#[derive(Clone, Copy, Debug)]
pub struct MetricKind<'a, T: Real> {
    pub tag: MetricTag,
    pub alpha: T,
    pub beta: T,
    pub weights: &'a ProximalWeights<T>,
    pub b: &'a LinearMap<T>,
}

impl<'a, T: Real> MetricKind<'a, T> {
    pub fn new(tag: MetricTag, alpha: T, beta: T, weights: &'a ProximalWeights<T>, b: &'a LinearMap<T>) -> Self {
        Self { tag, alpha, beta, weights, b }
    }

    /// `α` as used by the blocks (`Γ` and `H` are the `α = 1` members).
    pub fn effective_alpha(&self) -> T {
        match self.tag {
            MetricTag::Gamma | MetricTag::H => T::one(),
            _ => self.alpha,
        }
    }

    fn uses_g2(&self) -> bool {
        matches!(self.tag, MetricTag::HAlpha | MetricTag::H | MetricTag::H0)
    }

    /// Positive definiteness decided from the block structure.
    pub fn positive_definite(&self) -> bool {
        let alpha = self.effective_alpha();
        let alpha_ok = alpha > T::zero() && alpha < lit(2.0);
        let g1 = self.weights.g1.strictly_positive_definite();
        let g2 = self.weights.g2.strictly_positive_definite();
        let b_rank = self.b.full_column_rank();
        let beta_ok = self.beta > T::zero();
        alpha_ok
            && beta_ok
            && g1
            && match self.tag {
                MetricTag::GammaAlpha | MetricTag::Gamma | MetricTag::Gamma0 => b_rank,
                MetricTag::HAlpha | MetricTag::H => b_rank || g2,
                MetricTag::H0 => g2,
            }
    }

    /// The full `(n+m+ℓ)²` matrix. Only sensible at small dimensions.
    pub fn to_dense(&self, n: usize, m: usize, l: usize) -> DMatrix<T> {
        let alpha = self.effective_alpha();
        let beta = self.beta;
        let two = lit::<T>(2.0);
        let b = self.b.to_dense();
        let btb = b.tr_mul(&b);
        let mut out = DMatrix::zeros(n + m + l, n + m + l);
        out.view_mut((0, 0), (n, n)).copy_from(&self.weights.g1.to_dense(n));
        let g2 = if self.uses_g2() { self.weights.g2.to_dense(m) } else { DMatrix::zeros(m, m) };
        match self.tag {
            MetricTag::GammaAlpha | MetricTag::Gamma | MetricTag::HAlpha | MetricTag::H => {
                let c = (T::one() - alpha) / alpha;
                out.view_mut((n, n), (m, m)).copy_from(&(&btb * (beta / alpha) + g2));
                out.view_mut((n, n + m), (m, l)).copy_from(&(b.transpose() * c));
                out.view_mut((n + m, n), (l, m)).copy_from(&(&b * c));
                out.view_mut((n + m, n + m), (l, l))
                    .copy_from(&(DMatrix::identity(l, l) * (T::one() / (alpha * beta))));
            }
            MetricTag::Gamma0 => {
                out.view_mut((n, n), (m, m)).copy_from(&(&btb * (beta * (two - alpha) / (alpha * alpha))));
                out.view_mut((n + m, n + m), (l, l))
                    .copy_from(&(DMatrix::identity(l, l) * ((two - alpha) / (beta * alpha * alpha))));
            }
            MetricTag::H0 => {
                out.view_mut((n, n), (m, m)).copy_from(&g2);
                out.view_mut((n + m, n + m), (l, l)).copy_from(&(DMatrix::identity(l, l) * ((two - alpha) / beta)));
            }
        }
        out
    }
}

/// `uᵀMu` from the block formula, without assembling `M`.
pub fn weighted_sq_norm<T: Real>(u: &IterateState<T>, metric: &MetricKind<'_, T>) -> T {
    let alpha = metric.effective_alpha();
    let beta = metric.beta;
    let two = lit::<T>(2.0);
    let x_part = metric.weights.g1.sq_norm(&u.x);
    let lam_sq = u.lambda.norm_squared();
    match metric.tag {
        MetricTag::GammaAlpha | MetricTag::Gamma | MetricTag::HAlpha | MetricTag::H => {
            let by: DVector<T> = metric.b.apply(&u.y);
            let g2_part = if metric.uses_g2() { metric.weights.g2.sq_norm(&u.y) } else { T::zero() };
            x_part
                + g2_part
                + beta / alpha * by.norm_squared()
                + two * (T::one() - alpha) / alpha * by.dot(&u.lambda)
                + lam_sq / (alpha * beta)
        }
        MetricTag::Gamma0 => {
            let by = metric.b.apply(&u.y);
            x_part
                + beta * (two - alpha) / (alpha * alpha) * by.norm_squared()
                + (two - alpha) / (beta * alpha * alpha) * lam_sq
        }
        MetricTag::H0 => x_part + metric.weights.g2.sq_norm(&u.y) + (two - alpha) / beta * lam_sq,
    }
}

/// [`weighted_sq_norm`], failing with `NotPositiveDefinite` when the metric
/// is not positive definite and the value came out negative.
pub fn checked_weighted_sq_norm<T: Real>(u: &IterateState<T>, metric: &MetricKind<'_, T>) -> Result<T> {
    let value = weighted_sq_norm(u, metric);
    if value < T::zero() && !metric.positive_definite() {
        return Err(Error::NotPositiveDefinite(to_f64(value)));
    }
    Ok(value)
}

/// `e(u, γ) = (x − P_X[x − γ(ξ − Aᵀλ)], y − P_Y[y − γ(ζ − Bᵀλ)], γ(Ax + By − b))`
/// with `ξ`, `ζ` the oracle's subgradient selections.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMapValue<T: Real> {
    pub e_x: DVector<T>,
    pub e_y: DVector<T>,
    pub e_lambda: DVector<T>,
    pub gamma: T,
}

impl<T: Real> ErrorMapValue<T> {
    pub fn norm(&self) -> T {
        (self.e_x.norm_squared() + self.e_y.norm_squared() + self.e_lambda.norm_squared()).sqrt()
    }
}

pub fn error_map<T: Real>(instance: &ProblemInstance<T>, u: &IterateState<T>, gamma: T) -> Result<ErrorMapValue<T>> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} must be > 0")));
    }
    u.check_dims(&instance.coupling)?;
    let coupling = &instance.coupling;
    let oracle = instance.oracle.as_ref();
    let gx = oracle.subgradient_f(&u.x) - coupling.a().apply_transpose(&u.lambda);
    let e_x = &u.x - oracle.project_x(&(&u.x - gx * gamma))?;
    let gy = oracle.subgradient_g(&u.y) - coupling.b().apply_transpose(&u.lambda);
    let e_y = &u.y - oracle.project_y(&(&u.y - gy * gamma))?;
    let e_lambda = coupling.residual(&u.x, &u.y) * gamma;
    Ok(ErrorMapValue { e_x, e_y, e_lambda, gamma })
}

/// `‖e(u, 1)‖`: an upper bound on `dist(0, e(u, 1))`, tight when `f` and
/// `g` are differentiable.
pub fn kkt_residual<T: Real>(instance: &ProblemInstance<T>, u: &IterateState<T>) -> Result<T> {
    Ok(error_map(instance, u, T::one())?.norm())
}
