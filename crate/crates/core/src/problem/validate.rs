use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{ProblemInstance, ProximalWeight};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const PROBES: usize = 5;
const DIRECTIONS: usize = 8;
const PROBE_SEED: u64 = 0x5eed_0bad_cafe;
const FIRST_ORDER_TOL: f64 = 1e-6;

/// Outcome of [`validate_problem`].
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub dims: (usize, usize, usize),
    pub b_full_column_rank: bool,
    pub probes: usize,
    /// Worst idempotence defect `‖P(P(v)) − P(v)‖ / (1 + ‖v‖)` over both sets.
    pub projection_defect: f64,
    /// Smallest estimated directional derivative of the x-subproblem at the
    /// oracle's answer; nonnegative for an exact minimizer.
    pub min_directional_x: f64,
    pub min_directional_y: f64,
}

fn random_vector<T: Real>(rng: &mut Xoshiro256PlusPlus, len: usize, scale: f64) -> DVector<T> {
    DVector::from_fn(len, |_, _| lit(scale * rng.random_range(-1.0..1.0)))
}

fn random_unit<T: Real>(rng: &mut Xoshiro256PlusPlus, len: usize) -> DVector<T> {
    loop {
        let v: DVector<T> = random_vector(rng, len, 1.0);
        let n = v.norm();
        if n > lit(1e-3) {
            return v / n;
        }
    }
}

/// Minimum over random feasible directions of a finite-difference estimate
/// of the directional derivative of `phi` at `z`.
///
/// Directions are pulled back into the feasible set through `project`
/// (`d ↦ P(z + t·d) − z`). Central differences are used when the backward
/// point is feasible too; otherwise a one-sided Richardson estimate.
fn min_directional_derivative<T, P, F>(
    rng: &mut Xoshiro256PlusPlus,
    z: &DVector<T>,
    project: P,
    phi: F,
) -> Result<T>
where
    T: Real,
    P: Fn(&DVector<T>) -> Result<DVector<T>>,
    F: Fn(&DVector<T>) -> T,
{
    let znorm = z.norm();
    let h = lit::<T>(1e-6) * (T::one() + znorm);
    let reach = lit::<T>(1e-3) * (T::one() + znorm);
    let feasible_tol = lit::<T>(1e-13) * (T::one() + znorm);
    let mut worst = T::max_value().unwrap_or(lit(f64::MAX));
    for _ in 0..DIRECTIONS {
        let d: DVector<T> = random_unit(rng, z.len());
        let target = z + &d * reach;
        let step = project(&target)? - z;
        let len = step.norm();
        if len <= lit::<T>(1e-9) * reach {
            continue;
        }
        let unit = step / len;
        let hh = h.min(len);
        let back = z - &unit * hh;
        let back_feasible = (project(&back)? - &back).norm() <= feasible_tol;
        let phi0 = phi(z);
        let estimate = if back_feasible {
            (phi(&(z + &unit * hh)) - phi(&back)) / (hh + hh)
        } else {
            let half = hh * lit(0.5);
            let d_full = (phi(&(z + &unit * hh)) - phi0) / hh;
            let d_half = (phi(&(z + &unit * half)) - phi0) / half;
            d_half + d_half - d_full
        };
        worst = worst.min(estimate);
    }
    Ok(worst)
}

/// Checks dimensions, the rank flag of `B`, projection idempotence and
/// nonexpansiveness, and the first-order optimality of the block oracles on
/// five seeded random probes.
pub fn validate_problem<T: Real>(instance: &ProblemInstance<T>) -> Result<Diagnostics> {
    let coupling = &instance.coupling;
    let (n, m, l) = coupling.dims();
    if coupling.a().rows() != l || coupling.b().rows() != l {
        return Err(Error::DimensionMismatch("coupling rows disagree with b".into()));
    }
    if let Some(u) = instance.reference_solution() {
        u.check_dims(coupling)?;
    }
    let oracle = instance.oracle.as_ref();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(PROBE_SEED);
    let mut projection_defect = 0.0f64;
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;

    for probe in 0..PROBES {
        // Projection properties on random pairs.
        for (dim, which) in [(n, 'x'), (m, 'y')] {
            let project = |v: &DVector<T>| match which {
                'x' => oracle.project_x(v),
                _ => oracle.project_y(v),
            };
            let v1: DVector<T> = random_vector(&mut rng, dim, 2.0);
            let v2: DVector<T> = random_vector(&mut rng, dim, 2.0);
            let p1 = project(&v1)?;
            if p1.len() != dim {
                return Err(Error::DimensionMismatch(format!("projection onto {which}-set changed length")));
            }
            let pp1 = project(&p1)?;
            let defect = to_f64((&pp1 - &p1).norm()) / (1.0 + to_f64(v1.norm()));
            projection_defect = projection_defect.max(defect);
            if defect > 1e-12 {
                return Err(Error::OracleInconsistent(format!(
                    "projection onto the {which}-set is not idempotent (defect {defect:e})"
                )));
            }
            let p2 = project(&v2)?;
            if to_f64((&p1 - &p2).norm()) > to_f64((&v1 - &v2).norm()) + 1e-12 {
                return Err(Error::OracleInconsistent(format!(
                    "projection onto the {which}-set is expansive"
                )));
            }
        }

        let beta: T = lit(rng.random_range(0.5..2.0));
        let alpha: T = lit(rng.random_range(0.3..1.7));
        let weight = if probe % 2 == 0 { ProximalWeight::Zero } else { ProximalWeight::ScaledIdentity(lit(0.5)) };
        let lambda: DVector<T> = random_vector(&mut rng, l, 1.0);
        let y_anchor = oracle.project_y(&random_vector(&mut rng, m, 1.0))?;
        let x_prev = oracle.project_x(&random_vector(&mut rng, n, 1.0))?;

        let x_new = oracle.solve_x(&lambda, &y_anchor, beta, &weight, &x_prev)?;
        if x_new.len() != n {
            return Err(Error::DimensionMismatch(format!("solve_x returned length {}, expected {n}", x_new.len())));
        }
        let by = coupling.b().apply(&y_anchor);
        let phi_x = |x: &DVector<T>| {
            let r = coupling.a().apply(x) + &by - coupling.rhs();
            oracle.f_value(x) - x.dot(&coupling.a().apply_transpose(&lambda))
                + beta * lit(0.5) * r.norm_squared()
                + lit::<T>(0.5) * weight.sq_norm(&(x - &x_prev))
        };
        let dx = min_directional_derivative(&mut rng, &x_new, |v| oracle.project_x(v), phi_x)?;
        min_x = min_x.min(to_f64(dx));

        let y_new = oracle.solve_y(&lambda, &x_new, &y_anchor, alpha, beta, &weight)?;
        if y_new.len() != m {
            return Err(Error::DimensionMismatch(format!("solve_y returned length {}, expected {m}", y_new.len())));
        }
        let anchor = coupling.a().apply(&x_new) * alpha
            + (coupling.rhs() - &by) * (T::one() - alpha)
            - coupling.rhs();
        let phi_y = |y: &DVector<T>| {
            let r = &anchor + coupling.b().apply(y);
            oracle.g_value(y) - y.dot(&coupling.b().apply_transpose(&lambda))
                + beta * lit(0.5) * r.norm_squared()
                + lit::<T>(0.5) * weight.sq_norm(&(y - &y_anchor))
        };
        let dy = min_directional_derivative(&mut rng, &y_new, |v| oracle.project_y(v), phi_y)?;
        min_y = min_y.min(to_f64(dy));
    }

    if min_x < -FIRST_ORDER_TOL || min_y < -FIRST_ORDER_TOL {
        return Err(Error::OracleInconsistent(format!(
            "subproblem answer is not a minimizer: directional derivatives x {min_x:e}, y {min_y:e}"
        )));
    }

    Ok(Diagnostics {
        dims: (n, m, l),
        b_full_column_rank: coupling.b_full_column_rank(),
        probes: PROBES,
        projection_defect,
        min_directional_x: min_x,
        min_directional_y: min_y,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::problem::{toy_qp_instance, BlockOracle, ToyQpOracle};

    #[test]
    fn toy_instance_passes() {
        let d = validate_problem(&toy_qp_instance::<f64>()).unwrap();
        assert!(d.b_full_column_rank);
        assert_eq!(d.dims, (1, 1, 1));
        assert!(d.min_directional_x >= -1e-6 && d.min_directional_y >= -1e-6);
    }

    /// Returns `x_prev` from the x-step; wrong whenever the gradient there is nonzero.
    struct LazyOracle;

    impl BlockOracle<f64> for LazyOracle {
        fn solve_x(
            &self,
            _lambda: &DVector<f64>,
            _y: &DVector<f64>,
            _beta: f64,
            _g1: &ProximalWeight<f64>,
            x_prev: &DVector<f64>,
        ) -> Result<DVector<f64>> {
            Ok(x_prev.clone())
        }
        fn solve_y(
            &self,
            lambda: &DVector<f64>,
            x: &DVector<f64>,
            y_prev: &DVector<f64>,
            alpha: f64,
            beta: f64,
            g2: &ProximalWeight<f64>,
        ) -> Result<DVector<f64>> {
            ToyQpOracle.solve_y(lambda, x, y_prev, alpha, beta, g2)
        }
        fn f_value(&self, x: &DVector<f64>) -> f64 {
            BlockOracle::<f64>::f_value(&ToyQpOracle, x)
        }
        fn g_value(&self, y: &DVector<f64>) -> f64 {
            BlockOracle::<f64>::g_value(&ToyQpOracle, y)
        }
        fn subgradient_f(&self, x: &DVector<f64>) -> DVector<f64> {
            BlockOracle::<f64>::subgradient_f(&ToyQpOracle, x)
        }
        fn subgradient_g(&self, y: &DVector<f64>) -> DVector<f64> {
            BlockOracle::<f64>::subgradient_g(&ToyQpOracle, y)
        }
        fn project_x(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(v.clone())
        }
        fn project_y(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(v.clone())
        }
    }

    #[test]
    fn lazy_oracle_is_inconsistent() {
        let toy = toy_qp_instance::<f64>();
        let inst = ProblemInstance::new(toy.coupling.clone(), Arc::new(LazyOracle));
        let err = validate_problem(&inst).unwrap_err();
        assert!(matches!(err, Error::OracleInconsistent(_)), "{err}");
    }
}
