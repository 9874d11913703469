//! Empirical Q-linear rate from squared metric distances to a reference
//! solution.

use super::{weighted_sq_norm, MetricKind, MetricTag};
use crate::error::{Error, Result};
use crate::problem::IterateState;
use crate::scalar::{lit, Real};

const MIN_ITERATES: usize = 10;
const NOISE_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate<T> {
    /// Largest ratio over the tail window.
    pub tau_hat: T,
    /// `d_{k+1}/d_k` for `k = tail_start, tail_start+1, …`.
    pub ratios: Vec<T>,
    pub metric: MetricTag,
    pub tail_start: usize,
}

/// Rate over the last `tail_fraction` of the iterations whose squared
/// distance stays above `1e-11·(1 + d_0)`.
///
/// Distances to one reference point overestimate the distance to the
/// solution set, so `tau_hat` is an estimate, not a bound.
pub fn estimate_rate_from_sq_distances<T: Real>(
    sq_distances: &[T],
    metric: MetricTag,
    tail_fraction: f64,
) -> Result<RateEstimate<T>> {
    if sq_distances.len() < MIN_ITERATES {
        return Err(Error::InsufficientTrace(sq_distances.len()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("tail fraction {tail_fraction} must lie in (0, 1]")));
    }
    let floor = lit::<T>(NOISE_FLOOR) * (T::one() + sq_distances[0]);
    let above = sq_distances.iter().take_while(|&&d| d > floor).count();
    if above < 2 {
        return Err(Error::NoiseFloor);
    }
    let pairs = above - 1;
    let window = ((pairs as f64 * tail_fraction).ceil() as usize).clamp(1, pairs);
    let tail_start = pairs - window;
    let ratios: Vec<T> = (tail_start..pairs).map(|k| sq_distances[k + 1] / sq_distances[k]).collect();
    let tau_hat = ratios.iter().copied().fold(T::zero(), |a, r| a.max(r));
    Ok(RateEstimate { tau_hat, ratios, metric, tail_start })
}

/// [`estimate_rate_from_sq_distances`] on stored iterates.
pub fn estimate_rate<T: Real>(
    iterates: &[IterateState<T>],
    u_star: &IterateState<T>,
    metric: &MetricKind<'_, T>,
    tail_fraction: f64,
) -> Result<RateEstimate<T>> {
    let d: Vec<T> = iterates.iter().map(|u| weighted_sq_norm(&(u - u_star), metric)).collect();
    estimate_rate_from_sq_distances(&d, metric.tag, tail_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{toy_qp_instance, ProximalWeights};
    use crate::solvers::{dpgadmm_step, SolverConfig, Variant};

    #[test]
    fn geometric_sequence() {
        let d: Vec<f64> = (0..30).map(|k| 0.5f64.powi(k)).collect();
        let r = estimate_rate_from_sq_distances(&d, MetricTag::H, 0.5).unwrap();
        assert!((r.tau_hat - 0.5).abs() < 1e-15);
        assert_eq!(r.tail_start + r.ratios.len(), 29);
    }

    #[test]
    fn noise_floor_cuts_the_tail() {
        let mut d: Vec<f64> = (0..20).map(|k| 0.1f64.powi(k)).collect();
        d[15] = 1.0; // a rounding blip below the floor must not count
        let r = estimate_rate_from_sq_distances(&d, MetricTag::H, 1.0).unwrap();
        assert_eq!(r.ratios.len(), 10);
        assert!(r.tau_hat < 0.11);
    }

    #[test]
    fn constant_at_reference() {
        let inst = toy_qp_instance::<f64>();
        let u = inst.reference_solution().unwrap().clone();
        let weights = ProximalWeights::scaled(1.0, 0.0);
        let metric = MetricKind::new(MetricTag::GammaAlpha, 1.0, 1.0, &weights, inst.coupling.b());
        let trace = vec![u.clone(); 12];
        assert!(matches!(estimate_rate(&trace, &u, &metric, 0.5), Err(Error::NoiseFloor)));
        assert!(matches!(estimate_rate(&trace[..5], &u, &metric, 0.5), Err(Error::InsufficientTrace(5))));
    }

    #[test]
    fn toy_pgadmm_contracts() {
        let inst = toy_qp_instance::<f64>();
        let cfg = SolverConfig::new(Variant::PGadmm, Some(1.0), 1.0, ProximalWeights::scaled(1.0, 0.0)).unwrap();
        let mut iterates = vec![inst.zero_iterate()];
        for _ in 0..40 {
            let next = dpgadmm_step(&inst, iterates.last().unwrap(), &cfg).unwrap().next;
            iterates.push(next);
        }
        let metric = MetricKind::new(MetricTag::GammaAlpha, 1.0, 1.0, &cfg.weights, inst.coupling.b());
        let r = estimate_rate(&iterates, inst.reference_solution().unwrap(), &metric, 0.5).unwrap();
        assert!(r.tau_hat < 1.0 && r.tau_hat > 0.0, "{r:?}");
        assert!(r.ratios.iter().all(|&x| x >= 0.0));
    }
}
