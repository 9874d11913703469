//! Independent reference: with `X = Y` the calibration problem is the
//! Frobenius projection of `C` onto `S₊ⁿ ∩ S_B`, computed here by Dykstra's
//! alternating projections.

use log::debug;
use nalgebra::DMatrix;

use super::{box_project, calib_problem, psd_project, vectorize, CalibInstance};
use crate::error::{Error, Result};
use crate::metrics::kkt_residual;
use crate::problem::{IterateState, ProximalWeights};
use crate::scalar::{lit, to_f64, Real};
use crate::solvers::{run, SolverConfig, StopRule, Variant};

const KKT_ACCEPT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ReferenceSolution<T: Real> {
    pub z_star: DMatrix<T>,
    pub iterations: usize,
    /// Last Dykstra increment.
    pub residual: T,
    /// `(vec Z*, vec Z*, λ*)`.
    pub u_star: IterateState<T>,
    pub kkt: T,
}

/// Runs Dykstra until both iterates move less than `tol`, then recovers a
/// multiplier so that `u*` is a KKT point of the split problem.
///
/// Multiplier candidates, in order: `vec(Z* − C)`; the difference of the
/// two Dykstra correction terms; a DP-ADMM run warm-started from the
/// better of the two and stopped at KKT residual `1e-12`.
pub fn reference_solution<T: Real>(inst: &CalibInstance<T>, max_iter: usize, tol: T) -> Result<ReferenceSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidConfig("Dykstra tolerance must be positive".into()));
    }
    let n = inst.n;
    let mut x = inst.c.clone();
    let mut y = inst.c.clone();
    let mut p = DMatrix::<T>::zeros(n, n);
    let mut q = DMatrix::<T>::zeros(n, n);
    let mut residual = T::zero();
    let mut converged_at = None;
    for k in 1..=max_iter {
        let y_new = box_project(&(&x + &p), &inst.lower, &inst.upper);
        p = &x + &p - &y_new;
        let x_new = psd_project(&(&y_new + &q))?;
        q = &y_new + &q - &x_new;
        residual = (&x_new - &x).norm().max((&y_new - &y).norm());
        x = x_new;
        y = y_new;
        if residual < tol {
            converged_at = Some(k);
            break;
        }
    }
    let iterations = converged_at.ok_or(Error::NotConverged(max_iter))?;
    debug!("Dykstra converged in {iterations} iterations (increment {:e})", to_f64(residual));
    let z = x;

    let problem = calib_problem(inst);
    let vz = vectorize(&z);
    let mut best: Option<(T, IterateState<T>)> = None;
    for lambda in [&z - &inst.c, &q - &p] {
        let u = IterateState::new(vz.clone(), vz.clone(), vectorize(&lambda));
        let kkt = kkt_residual(&problem, &u)?;
        if best.as_ref().is_none_or(|(b, _)| kkt < *b) {
            best = Some((kkt, u));
        }
    }
    let (mut kkt, mut u_star) = best.expect("two candidates");
    if !(kkt <= lit::<T>(KKT_ACCEPT)) {
        debug!("multiplier candidates reach KKT {:e}; refining with DP-ADMM", to_f64(kkt));
        let cfg = SolverConfig::new(Variant::DpAdmm, Some(T::one()), T::one(), ProximalWeights::scaled(T::one(), T::one()))?
            .with_stop_rule(StopRule::KktResidual)
            .with_tol(lit(1e-12))
            .with_max_iter(200_000);
        let refined = run(&problem, &u_star, &cfg)?;
        u_star = refined.final_state;
        kkt = kkt_residual(&problem, &u_star)?;
        if !(kkt <= lit::<T>(KKT_ACCEPT)) {
            return Err(Error::NotConverged(refined.iterations));
        }
    }
    Ok(ReferenceSolution { z_star: z, iterations, residual, u_star, kkt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn feasible_data_is_its_own_projection() {
        let c = DMatrix::from_row_slice(2, 2, &[0.1, 0.05, 0.05, 0.1]);
        let inst = CalibInstance::from_matrix(c.clone()).unwrap();
        let r = reference_solution(&inst, 1000, 1e-13).unwrap();
        assert_relative_eq!(r.z_star, c, epsilon = 1e-13);
        assert!(r.kkt <= 1e-8);
    }

    #[test]
    fn diagonal_example() {
        let inst = CalibInstance::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])).unwrap();
        let r = reference_solution(&inst, 1000, 1e-13).unwrap();
        assert_relative_eq!(r.z_star, DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.0]), epsilon = 1e-12);
    }
}
