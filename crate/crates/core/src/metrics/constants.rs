//! Closed-form proof constants.
//!
//! The formulas only use field operations and comparisons, so they are
//! written over `num_traits::Num + PartialOrd`; the tests evaluate them
//! in exact rational arithmetic.

use num_traits::Num;

use crate::error::{Error, Result};
use crate::problem::ProximalWeight;
use crate::scalar::{to_f64, Real};

/// Spectral data of a proximal weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSpectrum<T> {
    /// `‖G‖` (largest eigenvalue).
    pub norm: T,
    pub lambda_min: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaConstants<T> {
    pub varsigma1: T,
    pub varsigma2: T,
    pub sigma: T,
}

fn max2<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

fn small<T: Num>(k: u32) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

fn check_alpha_beta<T: Num + PartialOrd + Clone>(alpha: &T, beta: &T) -> Result<()> {
    let two: T = small(2);
    if !(*alpha > T::zero() && *alpha < two) {
        return Err(Error::InvalidConfig("alpha must lie in (0, 2)".into()));
    }
    if !(*beta > T::zero()) {
        return Err(Error::InvalidConfig("beta must be positive".into()));
    }
    Ok(())
}

/// `ς₁`, `ς₂ = max(ς₁, ς₁/λ_min(G))` and `σ = 1/ς₂` of the residual bound
/// `‖u^k − u^{k+1}‖²_{Γ₀} ≥ σ‖e(u^{k+1}, 1)‖²`, where
///
/// ```text
/// ς₁ = max{ 3‖G‖²,
///           α/(β(2−α)) · (3β²‖A‖²/α + 2(1−α)²/α),
///           βα/(2−α)   · (3(1−α)²‖A‖²/α + 2/(αβ²)) }
/// ```
pub fn sigma_constants<T: Num + PartialOrd + Clone>(
    alpha: T,
    beta: T,
    norm_a: T,
    g: WeightSpectrum<T>,
) -> Result<SigmaConstants<T>> {
    check_alpha_beta(&alpha, &beta)?;
    if !(g.lambda_min > T::zero()) {
        return Err(Error::RequiresPositiveDefinite("sigma needs lambda_min(G1) > 0".into()));
    }
    let two: T = small(2);
    let three: T = small(3);
    let a = alpha.clone();
    let b = beta.clone();
    let na2 = norm_a.clone() * norm_a;
    let one_m = T::one() - a.clone();
    let one_m2 = one_m.clone() * one_m;
    let two_m = two.clone() - a.clone();

    let t1 = three.clone() * g.norm.clone() * g.norm;
    let t2 = a.clone() / (b.clone() * two_m.clone())
        * (three.clone() * b.clone() * b.clone() * na2.clone() / a.clone() + two.clone() * one_m2.clone() / a.clone());
    let t3 = b.clone() * a.clone() / two_m
        * (three * one_m2 * na2 / a.clone() + two / (a * b.clone() * b));
    let varsigma1 = max2(max2(t1, t2), t3);
    let varsigma2 = max2(varsigma1.clone(), varsigma1.clone() / g.lambda_min);
    let sigma = T::one() / varsigma2.clone();
    Ok(SigmaConstants { varsigma1, varsigma2, sigma })
}

/// `δ = 1 / max{1 + 2β(2−α)‖B‖²/λ_min(G₂), 2α²}`.
pub fn delta_constant<T: Num + PartialOrd + Clone>(alpha: T, beta: T, norm_b: T, lambda_min_g2: T) -> Result<T> {
    check_alpha_beta(&alpha, &beta)?;
    if !(lambda_min_g2 > T::zero()) {
        return Err(Error::RequiresPositiveDefinite("delta needs lambda_min(G2) > 0".into()));
    }
    let two: T = small(2);
    let first = T::one() + two.clone() * beta * (two.clone() - alpha.clone()) * norm_b.clone() * norm_b / lambda_min_g2;
    let second = two * alpha.clone() * alpha;
    Ok(T::one() / max2(first, second))
}

/// [`sigma_constants`] with the spectrum taken from a weight; refuses
/// weights that are not strictly positive definite.
pub fn compute_sigma<T: Real>(alpha: T, beta: T, norm_a: T, g1: &ProximalWeight<T>) -> Result<SigmaConstants<T>> {
    if !g1.strictly_positive_definite() {
        return Err(Error::RequiresPositiveDefinite(format!(
            "sigma needs a positive definite G1 (lambda_min = {:e})",
            to_f64(g1.lambda_min())
        )));
    }
    sigma_constants(alpha, beta, norm_a, WeightSpectrum { norm: g1.spectral_norm(), lambda_min: g1.lambda_min() })
}

/// [`delta_constant`] for a real-valued `λ_min(G₂)`.
pub fn compute_delta<T: Real>(alpha: T, beta: T, norm_b: T, lambda_min_g2: T) -> Result<T> {
    delta_constant(alpha, beta, norm_b, lambda_min_g2)
}
