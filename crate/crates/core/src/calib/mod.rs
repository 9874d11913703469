//! Correlation-matrix calibration:
//!
//! ```text
//! min ½‖X − C‖²_F + ½‖Y − C‖²_F   s.t.  X − Y = 0,  X ⪰ 0,  H_L ≤ Y ≤ H_U
//! ```
//!
//! Matrices are vectorized column-major into `ℝ^{n²}`, so `A = I`,
//! `B = −I` and `b = 0`. The box is elementwise with `H_U = −H_L = 0.1`.

mod dykstra;
pub mod grid;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::problem::{BlockOracle, LinearCoupling, LinearMap, ProblemInstance, ProximalWeight};
use crate::scalar::{lit, Real};

pub use dykstra::{reference_solution, ReferenceSolution};

/// Half-width of the elementwise box.
pub const BOX_BOUND: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct CalibInstance<T: Real> {
    pub n: usize,
    pub c: DMatrix<T>,
    pub lower: DMatrix<T>,
    pub upper: DMatrix<T>,
    pub seed: u64,
}

impl<T: Real> CalibInstance<T> {
    /// Builds an instance around a given data matrix (symmetrized).
    pub fn from_matrix(c: DMatrix<T>) -> Result<Self> {
        let n = c.nrows();
        if n == 0 || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!("C must be square and nonempty, got {}x{}", n, c.ncols())));
        }
        let c = symmetrize(&c);
        let upper = DMatrix::from_element(n, n, lit(BOX_BOUND));
        Ok(Self { n, c, lower: -&upper, upper, seed: 0 })
    }

    pub fn vec(&self, m: &DMatrix<T>) -> DVector<T> {
        vectorize(m)
    }

    pub fn unvec(&self, v: &DVector<T>) -> DMatrix<T> {
        unvectorize(v, self.n)
    }

    /// `½‖X − C‖²_F + ½‖Y − C‖²_F`.
    pub fn objective(&self, x: &DMatrix<T>, y: &DMatrix<T>) -> T {
        let half = lit::<T>(0.5);
        half * ((x - &self.c).norm_squared() + (y - &self.c).norm_squared())
    }
}

pub fn vectorize<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize<T: Real>(v: &DVector<T>, n: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(n, n, v.as_slice())
}

fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

/// Draws `R` with i.i.d. uniform `[0, 1)` entries (row by row) from
/// xoshiro256++ seeded with `seed`, and sets `C = Rᵀ + R − 1 + I`.
pub fn generate_instance<T: Real>(n: usize, seed: u64) -> Result<CalibInstance<T>> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("calibration needs n >= 2, got {n}")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut r = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = rng.random::<f64>();
        }
    }
    let c = DMatrix::from_fn(n, n, |i, j| {
        let v = r[(i, j)] + r[(j, i)] - 1.0 + if i == j { 1.0 } else { 0.0 };
        lit::<T>(v)
    });
    let mut inst = CalibInstance::from_matrix(c)?;
    inst.seed = seed;
    Ok(inst)
}

/// Frobenius-nearest positive semidefinite matrix to `(M + Mᵀ)/2`.
pub fn psd_project<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = m.nrows();
    let sym = symmetrize(m);
    let eig = SymmetricEigen::try_new(sym, T::default_epsilon(), 1000 * n.max(1)).ok_or(Error::EigenFailure)?;
    let clipped = eig.eigenvalues.map(|l| l.max(T::zero()));
    let q = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(n, n, |i, j| q[(i, j)] * clipped[j]);
    Ok(symmetrize(&(scaled * q.transpose())))
}

/// Elementwise clamp into `[lower, upper]`.
pub fn box_project<T: Real>(m: &DMatrix<T>, lower: &DMatrix<T>, upper: &DMatrix<T>) -> DMatrix<T> {
    m.zip_zip_map(lower, upper, |v, lo, hi| v.max(lo).min(hi))
}

/// Closed-form subproblem solutions for scaled-identity weights.
#[derive(Clone, Debug)]
pub struct CalibOracle<T: Real> {
    inst: CalibInstance<T>,
}

impl<T: Real> CalibOracle<T> {
    pub fn new(inst: CalibInstance<T>) -> Self {
        Self { inst }
    }

    pub fn instance(&self) -> &CalibInstance<T> {
        &self.inst
    }

    fn scale_of(weight: &ProximalWeight<T>, which: &str) -> Result<T> {
        weight
            .isotropic_scale()
            .ok_or_else(|| Error::OracleFailure(format!("calibration oracle needs a scaled-identity {which}")))
    }

    fn project_box_sym(&self, m: &DMatrix<T>) -> DMatrix<T> {
        box_project(&symmetrize(m), &self.inst.lower, &self.inst.upper)
    }
}

impl<T: Real> BlockOracle<T> for CalibOracle<T> {
    /// `P_{S₊}[(C + Λ + βY + g₁X_prev)/(1 + β + g₁)]`.
    fn solve_x(
        &self,
        lambda: &DVector<T>,
        y_anchor: &DVector<T>,
        beta: T,
        g1: &ProximalWeight<T>,
        x_prev: &DVector<T>,
    ) -> Result<DVector<T>> {
        let g = Self::scale_of(g1, "G1")?;
        let inst = &self.inst;
        let num = &inst.c + inst.unvec(lambda) + inst.unvec(y_anchor) * beta + inst.unvec(x_prev) * g;
        Ok(inst.vec(&psd_project(&(num / (T::one() + beta + g)))?))
    }

    /// `P_{S_B}[(C − Λ + β(αX + (1−α)Y_prev) + g₂Y_prev)/(1 + β + g₂)]`.
    fn solve_y(
        &self,
        lambda: &DVector<T>,
        x_new: &DVector<T>,
        y_prev: &DVector<T>,
        alpha: T,
        beta: T,
        g2: &ProximalWeight<T>,
    ) -> Result<DVector<T>> {
        let g = Self::scale_of(g2, "G2")?;
        let inst = &self.inst;
        let yp = inst.unvec(y_prev);
        let relaxed = inst.unvec(x_new) * alpha + &yp * (T::one() - alpha);
        let num = &inst.c - inst.unvec(lambda) + relaxed * beta + yp * g;
        Ok(inst.vec(&self.project_box_sym(&(num / (T::one() + beta + g)))))
    }

    fn f_value(&self, x: &DVector<T>) -> T {
        lit::<T>(0.5) * (self.inst.unvec(x) - &self.inst.c).norm_squared()
    }

    fn g_value(&self, y: &DVector<T>) -> T {
        lit::<T>(0.5) * (self.inst.unvec(y) - &self.inst.c).norm_squared()
    }

    fn subgradient_f(&self, x: &DVector<T>) -> DVector<T> {
        x - self.inst.vec(&self.inst.c)
    }

    fn subgradient_g(&self, y: &DVector<T>) -> DVector<T> {
        y - self.inst.vec(&self.inst.c)
    }

    fn project_x(&self, v: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.inst.vec(&psd_project(&self.inst.unvec(v))?))
    }

    fn project_y(&self, v: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.inst.vec(&self.project_box_sym(&self.inst.unvec(v))))
    }
}

/// The calibration problem as a solver instance (no reference attached).
pub fn calib_problem<T: Real>(inst: &CalibInstance<T>) -> ProblemInstance<T> {
    let dim = inst.n * inst.n;
    let coupling = LinearCoupling::new(LinearMap::identity(dim), LinearMap::neg_identity(dim), DVector::zeros(dim))
        .expect("identity coupling is consistent");
    ProblemInstance::new(coupling, Arc::new(CalibOracle::new(inst.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn generated_data_ranges() {
        let inst = generate_instance::<f64>(12, 3).unwrap();
        assert_eq!(inst.c, inst.c.transpose());
        for i in 0..12 {
            for j in 0..12 {
                let v = inst.c[(i, j)];
                if i == j {
                    assert!((0.0..2.0).contains(&v));
                } else {
                    assert!((-1.0..1.0).contains(&v));
                }
            }
        }
        assert_eq!(inst.lower, -&inst.upper);
        assert!(inst.upper.iter().all(|&v| v == 0.1));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance::<f64>(7, 42).unwrap();
        let b = generate_instance::<f64>(7, 42).unwrap();
        let c = generate_instance::<f64>(7, 43).unwrap();
        assert_eq!(a.c.as_slice(), b.c.as_slice());
        assert_ne!(a.c, c.c);
        assert!(generate_instance::<f64>(1, 0).is_err());
    }

    #[test]
    fn psd_projection_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_relative_eq!(psd_project(&d).unwrap(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_relative_eq!(psd_project(&s).unwrap(), DMatrix::from_element(2, 2, 0.5), epsilon = 1e-14);
        let p = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        assert_relative_eq!(psd_project(&p).unwrap(), p, epsilon = 1e-10);
    }

    #[test]
    fn box_projection_examples() {
        let inst = CalibInstance::from_matrix(DMatrix::<f64>::zeros(2, 2)).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[0.25, 0.05, -0.3, 0.0]);
        let p = box_project(&m, &inst.lower, &inst.upper);
        assert_eq!(p, DMatrix::from_row_slice(2, 2, &[0.1, 0.05, -0.1, 0.0]));
        let inside = DMatrix::from_row_slice(2, 2, &[0.01, -0.02, 0.03, 0.1]);
        assert_eq!(box_project(&inside, &inst.lower, &inst.upper), inside);
    }

    #[test]
    fn oracle_examples() {
        let two = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 2.0]);
        let oracle = CalibOracle::new(CalibInstance::from_matrix(two.clone()).unwrap());
        let z = DVector::zeros(4);
        let c = vectorize(&two);
        let x = oracle.solve_x(&z, &c, 1.0, &ProximalWeight::Zero, &c).unwrap();
        assert_relative_eq!(x, c, epsilon = 1e-14);

        let oracle = CalibOracle::new(CalibInstance::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])).unwrap());
        let x = oracle.solve_x(&z, &z, 1.0, &ProximalWeight::Zero, &z).unwrap();
        assert_relative_eq!(unvectorize(&x, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), epsilon = 1e-14);

        let oracle = CalibOracle::new(CalibInstance::from_matrix(DMatrix::from_element(3, 3, 0.3f64)).unwrap());
        let z = DVector::zeros(9);
        let y = oracle.solve_y(&z, &z, &z, 1.0, 1.0, &ProximalWeight::Zero).unwrap();
        assert!(y.iter().all(|&v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn dense_weights_rejected() {
        let oracle = CalibOracle::new(generate_instance::<f64>(2, 1).unwrap());
        let z = DVector::zeros(4);
        let w = ProximalWeight::Dense(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])));
        assert!(matches!(oracle.solve_x(&z, &z, 1.0, &w, &z), Err(Error::OracleFailure(_))));
    }
}
