use std::sync::Arc;

use nalgebra::DVector;

use super::{BlockOracle, IterateState, LinearCoupling, LinearMap, ProblemInstance, ProximalWeight};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Closed-form oracle for `f(x) = ½(x−1)²`, `g(y) = ½(y−2)²`, `x − y = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyQpOracle;

fn scalar_weight<T: Real>(g: &ProximalWeight<T>) -> Result<T> {
    g.isotropic_scale()
        .ok_or_else(|| Error::OracleFailure("toy oracle needs a scalar proximal weight".into()))
}

fn scalar<T: Real>(v: &DVector<T>, what: &str) -> Result<T> {
    if v.len() != 1 {
        return Err(Error::DimensionMismatch(format!("{what} has length {}, expected 1", v.len())));
    }
    Ok(v[0])
}

impl<T: Real> BlockOracle<T> for ToyQpOracle {
    fn solve_x(
        &self,
        lambda: &DVector<T>,
        y_anchor: &DVector<T>,
        beta: T,
        g1: &ProximalWeight<T>,
        x_prev: &DVector<T>,
    ) -> Result<DVector<T>> {
        let g = scalar_weight(g1)?;
        let (l, y, xp) = (scalar(lambda, "λ")?, scalar(y_anchor, "y")?, scalar(x_prev, "x")?);
        // (x − 1) − λ + β(x − y) + g(x − x_prev) = 0
        let x = (T::one() + l + beta * y + g * xp) / (T::one() + beta + g);
        Ok(DVector::from_element(1, x))
    }

    fn solve_y(
        &self,
        lambda: &DVector<T>,
        x_new: &DVector<T>,
        y_prev: &DVector<T>,
        alpha: T,
        beta: T,
        g2: &ProximalWeight<T>,
    ) -> Result<DVector<T>> {
        let g = scalar_weight(g2)?;
        let (l, x, yp) = (scalar(lambda, "λ")?, scalar(x_new, "x")?, scalar(y_prev, "y")?);
        // (y − 2) + λ − β(αx + (1−α)y_prev − y) + g(y − y_prev) = 0
        let relaxed = alpha * x + (T::one() - alpha) * yp;
        let y = (lit::<T>(2.0) - l + beta * relaxed + g * yp) / (T::one() + beta + g);
        Ok(DVector::from_element(1, y))
    }

    fn f_value(&self, x: &DVector<T>) -> T {
        x.iter().map(|&v| lit::<T>(0.5) * (v - T::one()).powi(2)).fold(T::zero(), |a, b| a + b)
    }

    fn g_value(&self, y: &DVector<T>) -> T {
        y.iter().map(|&v| lit::<T>(0.5) * (v - lit::<T>(2.0)).powi(2)).fold(T::zero(), |a, b| a + b)
    }

    fn subgradient_f(&self, x: &DVector<T>) -> DVector<T> {
        x.map(|v| v - T::one())
    }

    fn subgradient_g(&self, y: &DVector<T>) -> DVector<T> {
        y.map(|v| v - lit::<T>(2.0))
    }

    fn project_x(&self, v: &DVector<T>) -> Result<DVector<T>> {
        Ok(v.clone())
    }

    fn project_y(&self, v: &DVector<T>) -> Result<DVector<T>> {
        Ok(v.clone())
    }
}

/// The scalar instance `n = m = ℓ = 1`, `A = [1]`, `B = [−1]`, `b = [0]`,
/// `f(x) = ½(x−1)²`, `g(y) = ½(y−2)²`, `X = Y = ℝ`, with its KKT point
/// `u* = (1.5, 1.5, 0.5)` attached.
pub fn toy_qp_instance<T: Real>() -> ProblemInstance<T> {
    let coupling = LinearCoupling::new(
        LinearMap::dense(nalgebra::DMatrix::from_element(1, 1, T::one())),
        LinearMap::dense(nalgebra::DMatrix::from_element(1, 1, -T::one())),
        DVector::zeros(1),
    )
    .expect("toy coupling is consistent");
    let reference = IterateState::from_slices(&[lit(1.5)], &[lit(1.5)], &[lit(0.5)]);
    ProblemInstance::new(coupling, Arc::new(ToyQpOracle))
        .with_reference(reference)
        .expect("toy reference solution is a KKT point")
}
