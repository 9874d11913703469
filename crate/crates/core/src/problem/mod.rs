//! Problem data for `min f(x) + g(y) s.t. Ax + By = b, x ∈ X, y ∈ Y`.

mod toy;
mod validate;

use std::fmt;
use std::ops::Sub;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

pub use toy::{toy_qp_instance, ToyQpOracle};
pub use validate::{validate_problem, Diagnostics};

/// A linear operator between Euclidean spaces.
///
/// Scaled identities are kept symbolic so that the calibration benchmark,
/// where `A = I` and `B = -I` act on `n²`-dimensional vectors, never
/// materializes an `n² × n²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearMap<T: Real> {
    ScaledIdentity { scale: T, dim: usize },
    Dense(DMatrix<T>),
}

impl<T: Real> LinearMap<T> {
    pub fn identity(dim: usize) -> Self {
        LinearMap::ScaledIdentity { scale: T::one(), dim }
    }

    pub fn neg_identity(dim: usize) -> Self {
        LinearMap::ScaledIdentity { scale: -T::one(), dim }
    }

    pub fn dense(matrix: DMatrix<T>) -> Self {
        LinearMap::Dense(matrix)
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearMap::ScaledIdentity { dim, .. } => *dim,
            LinearMap::Dense(m) => m.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearMap::ScaledIdentity { dim, .. } => *dim,
            LinearMap::Dense(m) => m.ncols(),
        }
    }

    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        match self {
            LinearMap::ScaledIdentity { scale, .. } => v * *scale,
            LinearMap::Dense(m) => m * v,
        }
    }

    pub fn apply_transpose(&self, v: &DVector<T>) -> DVector<T> {
        match self {
            LinearMap::ScaledIdentity { scale, .. } => v * *scale,
            LinearMap::Dense(m) => m.tr_mul(v),
        }
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> T {
        match self {
            LinearMap::ScaledIdentity { scale, .. } => scale.abs(),
            LinearMap::Dense(m) => singular_values(m).iter().copied().fold(T::zero(), T::max),
        }
    }

    /// Numerical rank test with cutoff `1e-10·‖M‖`.
    pub fn full_column_rank(&self) -> bool {
        match self {
            LinearMap::ScaledIdentity { scale, .. } => *scale != T::zero(),
            LinearMap::Dense(m) => {
                if m.ncols() == 0 {
                    return true;
                }
                if m.nrows() < m.ncols() {
                    return false;
                }
                let sv = singular_values(m);
                let top = sv.iter().copied().fold(T::zero(), T::max);
                if top == T::zero() {
                    return false;
                }
                let cutoff = lit::<T>(1e-10) * top;
                sv.iter().filter(|&&s| s > cutoff).count() == m.ncols()
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match self {
            LinearMap::ScaledIdentity { scale, dim } => DMatrix::identity(*dim, *dim) * *scale,
            LinearMap::Dense(m) => m.clone(),
        }
    }
}

fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().singular_values().iter().copied().collect()
}

/// The linear constraint `Ax + By = b`.
#[derive(Clone, Debug)]
pub struct LinearCoupling<T: Real> {
    a: LinearMap<T>,
    b: LinearMap<T>,
    rhs: DVector<T>,
    b_full_column_rank: bool,
}

impl<T: Real> LinearCoupling<T> {
    pub fn new(a: LinearMap<T>, b: LinearMap<T>, rhs: DVector<T>) -> Result<Self> {
        if a.rows() != rhs.len() || b.rows() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}, b has length {}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                rhs.len()
            )));
        }
        let b_full_column_rank = b.full_column_rank();
        Ok(Self { a, b, rhs, b_full_column_rank })
    }

    pub fn a(&self) -> &LinearMap<T> {
        &self.a
    }

    pub fn b(&self) -> &LinearMap<T> {
        &self.b
    }

    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    pub fn b_full_column_rank(&self) -> bool {
        self.b_full_column_rank
    }

    /// `(n, m, ℓ)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.cols(), self.b.cols(), self.rhs.len())
    }

    /// `Ax + By − b`.
    pub fn residual(&self, x: &DVector<T>, y: &DVector<T>) -> DVector<T> {
        self.a.apply(x) + self.b.apply(y) - &self.rhs
    }
}

/// One primal-dual triple `u = (x, y, λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState<T: Real> {
    pub x: DVector<T>,
    pub y: DVector<T>,
    pub lambda: DVector<T>,
}

impl<T: Real> IterateState<T> {
    pub fn new(x: DVector<T>, y: DVector<T>, lambda: DVector<T>) -> Self {
        Self { x, y, lambda }
    }

    pub fn zeros(n: usize, m: usize, l: usize) -> Self {
        Self { x: DVector::zeros(n), y: DVector::zeros(m), lambda: DVector::zeros(l) }
    }

    pub fn from_slices(x: &[T], y: &[T], lambda: &[T]) -> Self {
        Self {
            x: DVector::from_column_slice(x),
            y: DVector::from_column_slice(y),
            lambda: DVector::from_column_slice(lambda),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x.len(), self.y.len(), self.lambda.len())
    }

    /// Euclidean norm of the stacked vector.
    pub fn norm(&self) -> T {
        (self.x.norm_squared() + self.y.norm_squared() + self.lambda.norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).chain(self.lambda.iter()).all(|v| v.is_finite())
    }

    pub fn check_dims(&self, coupling: &LinearCoupling<T>) -> Result<()> {
        if self.dims() != coupling.dims() {
            return Err(Error::DimensionMismatch(format!(
                "iterate has dimensions {:?}, coupling expects {:?}",
                self.dims(),
                coupling.dims()
            )));
        }
        Ok(())
    }
}

impl<T: Real> Sub for &IterateState<T> {
    type Output = IterateState<T>;

    fn sub(self, rhs: &IterateState<T>) -> IterateState<T> {
        IterateState {
            x: &self.x - &rhs.x,
            y: &self.y - &rhs.y,
            lambda: &self.lambda - &rhs.lambda,
        }
    }
}

/// A symmetric positive semidefinite proximal weight `G`.
///
/// `Zero` is admitted so that ADMM and GADMM are the zero-weight cases of
/// the doubly proximal scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum ProximalWeight<T: Real> {
    Zero,
    ScaledIdentity(T),
    Dense(DMatrix<T>),
}

impl<T: Real> ProximalWeight<T> {
    pub fn scaled(scale: T) -> Self {
        if scale == T::zero() {
            ProximalWeight::Zero
        } else {
            ProximalWeight::ScaledIdentity(scale)
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ProximalWeight::Zero => true,
            ProximalWeight::ScaledIdentity(s) => *s == T::zero(),
            ProximalWeight::Dense(m) => m.iter().all(|v| *v == T::zero()),
        }
    }

    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        match self {
            ProximalWeight::Zero => DVector::zeros(v.len()),
            ProximalWeight::ScaledIdentity(s) => v * *s,
            ProximalWeight::Dense(m) => m * v,
        }
    }

    /// `vᵀ G v`.
    pub fn sq_norm(&self, v: &DVector<T>) -> T {
        match self {
            ProximalWeight::Zero => T::zero(),
            ProximalWeight::ScaledIdentity(s) => *s * v.norm_squared(),
            ProximalWeight::Dense(m) => v.dot(&(m * v)),
        }
    }

    /// `c` when `G = c·I` (including `G = 0`).
    pub fn isotropic_scale(&self) -> Option<T> {
        match self {
            ProximalWeight::Zero => Some(T::zero()),
            ProximalWeight::ScaledIdentity(s) => Some(*s),
            ProximalWeight::Dense(m) => {
                let c = if m.is_empty() { T::zero() } else { m[(0, 0)] };
                let iso = m.is_square()
                    && m.iter().enumerate().all(|(k, v)| {
                        let (i, j) = (k % m.nrows(), k / m.nrows());
                        if i == j {
                            *v == c
                        } else {
                            *v == T::zero()
                        }
                    });
                iso.then_some(c)
            }
        }
    }

    fn eigenvalues(m: &DMatrix<T>) -> Vec<T> {
        if m.is_empty() {
            return Vec::new();
        }
        let sym = (m + m.transpose()) * lit::<T>(0.5);
        sym.symmetric_eigenvalues().iter().copied().collect()
    }

    /// Spectral norm `‖G‖`.
    pub fn spectral_norm(&self) -> T {
        match self {
            ProximalWeight::Zero => T::zero(),
            ProximalWeight::ScaledIdentity(s) => s.abs(),
            ProximalWeight::Dense(m) => {
                Self::eigenvalues(m).into_iter().map(|v| v.abs()).fold(T::zero(), T::max)
            }
        }
    }

    pub fn lambda_min(&self) -> T {
        match self {
            ProximalWeight::Zero => T::zero(),
            ProximalWeight::ScaledIdentity(s) => *s,
            ProximalWeight::Dense(m) => {
                Self::eigenvalues(m).into_iter().reduce(T::min).unwrap_or(T::zero())
            }
        }
    }

    /// `λ_min(G) > 1e-10·‖G‖` (and `G ≠ 0`).
    pub fn strictly_positive_definite(&self) -> bool {
        let norm = self.spectral_norm();
        norm > T::zero() && self.lambda_min() > lit::<T>(1e-10) * norm
    }

    /// Symmetry to `1e-12` relative, eigenvalues `≥ −1e-12·‖G‖`, and the
    /// dimension of a dense weight.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProximalWeight::Zero => Ok(()),
            ProximalWeight::ScaledIdentity(s) => {
                if *s < T::zero() || !s.is_finite() {
                    return Err(Error::InvalidConfig(format!("proximal weight scale {s} must be ≥ 0")));
                }
                Ok(())
            }
            ProximalWeight::Dense(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "proximal weight is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                let scale = m.norm();
                if (m - m.transpose()).norm() > lit::<T>(1e-12) * scale {
                    return Err(Error::InvalidConfig("proximal weight is not symmetric".into()));
                }
                if self.lambda_min() < -lit::<T>(1e-12) * self.spectral_norm() {
                    return Err(Error::InvalidConfig("proximal weight is not positive semidefinite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<T> {
        match self {
            ProximalWeight::Zero => DMatrix::zeros(dim, dim),
            ProximalWeight::ScaledIdentity(s) => DMatrix::identity(dim, dim) * *s,
            ProximalWeight::Dense(m) => m.clone(),
        }
    }
}

/// `G₁` on the x-block and `G₂` on the y-block.
#[derive(Clone, Debug, PartialEq)]
pub struct ProximalWeights<T: Real> {
    pub g1: ProximalWeight<T>,
    pub g2: ProximalWeight<T>,
}

impl<T: Real> ProximalWeights<T> {
    pub fn new(g1: ProximalWeight<T>, g2: ProximalWeight<T>) -> Self {
        Self { g1, g2 }
    }

    pub fn zero() -> Self {
        Self { g1: ProximalWeight::Zero, g2: ProximalWeight::Zero }
    }

    pub fn scaled(g1: T, g2: T) -> Self {
        Self { g1: ProximalWeight::scaled(g1), g2: ProximalWeight::scaled(g2) }
    }
}

/// Exact block solvers and first-order information for `f`, `g`, `X`, `Y`.
///
/// `solve_x` returns the minimizer over `X` of
/// `f(x) − xᵀAᵀλ + β/2‖Ax + By − b‖² + ½‖x − x_prev‖²_{G₁}` with `y = y_anchor`;
/// `solve_y` returns the minimizer over `Y` of
/// `g(y) − yᵀBᵀλ + β/2‖αAx + (1−α)(b − By_prev) + By − b‖² + ½‖y − y_prev‖²_{G₂}`.
pub trait BlockOracle<T: Real>: Send + Sync {
    fn solve_x(
        &self,
        lambda: &DVector<T>,
        y_anchor: &DVector<T>,
        beta: T,
        g1: &ProximalWeight<T>,
        x_prev: &DVector<T>,
    ) -> Result<DVector<T>>;

    fn solve_y(
        &self,
        lambda: &DVector<T>,
        x_new: &DVector<T>,
        y_prev: &DVector<T>,
        alpha: T,
        beta: T,
        g2: &ProximalWeight<T>,
    ) -> Result<DVector<T>>;

    fn f_value(&self, x: &DVector<T>) -> T;

    fn g_value(&self, y: &DVector<T>) -> T;

    fn objective(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        self.f_value(x) + self.g_value(y)
    }

    /// One element of `∂f(x)`.
    fn subgradient_f(&self, x: &DVector<T>) -> DVector<T>;

    /// One element of `∂g(y)`.
    fn subgradient_g(&self, y: &DVector<T>) -> DVector<T>;

    fn project_x(&self, v: &DVector<T>) -> Result<DVector<T>>;

    fn project_y(&self, v: &DVector<T>) -> Result<DVector<T>>;
}

/// Coupling, oracle and (optionally) a known KKT point.
#[derive(Clone)]
pub struct ProblemInstance<T: Real> {
    pub coupling: LinearCoupling<T>,
    pub oracle: Arc<dyn BlockOracle<T>>,
    reference_solution: Option<IterateState<T>>,
}

impl<T: Real> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("dims", &self.coupling.dims())
            .field("b_full_column_rank", &self.coupling.b_full_column_rank())
            .field("has_reference", &self.reference_solution.is_some())
            .finish()
    }
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(coupling: LinearCoupling<T>, oracle: Arc<dyn BlockOracle<T>>) -> Self {
        Self { coupling, oracle, reference_solution: None }
    }

    /// Attaches a reference KKT point; refused unless its KKT residual is at
    /// most `1e-8`.
    pub fn with_reference(mut self, reference: IterateState<T>) -> Result<Self> {
        reference.check_dims(&self.coupling)?;
        let kkt = crate::metrics::kkt_residual(&self, &reference)?;
        if !(kkt <= lit::<T>(1e-8)) {
            return Err(Error::InvalidConfig(format!(
                "reference solution has KKT residual {kkt:e} > 1e-8"
            )));
        }
        self.reference_solution = Some(reference);
        Ok(self)
    }

    pub fn reference_solution(&self) -> Option<&IterateState<T>> {
        self.reference_solution.as_ref()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.coupling.dims()
    }

    pub fn zero_iterate(&self) -> IterateState<T> {
        let (n, m, l) = self.dims();
        IterateState::zeros(n, m, l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_rejects_inconsistent_rows() {
        let a = LinearMap::dense(DMatrix::<f64>::zeros(2, 3));
        let b = LinearMap::dense(DMatrix::<f64>::zeros(2, 1));
        let err = LinearCoupling::new(a, b, DVector::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rank_flag() {
        let full = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(LinearMap::dense(full).full_column_rank());
        let deficient = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(!LinearMap::dense(deficient).full_column_rank());
        assert!(LinearMap::<f64>::neg_identity(4).full_column_rank());
        assert!(!LinearMap::dense(DMatrix::<f64>::zeros(2, 3)).full_column_rank());
    }

    #[test]
    fn spectral_norm_of_dense_map() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((LinearMap::dense(m).spectral_norm() - 4.0f64).abs() < 1e-12);
    }

    #[test]
    fn weight_spectrum_and_flags() {
        let g = ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        assert!((g.lambda_min() - 1.0f64).abs() < 1e-12);
        assert!((g.spectral_norm() - 3.0f64).abs() < 1e-12);
        assert!(g.strictly_positive_definite());
        assert!(g.validate(2).is_ok());
        assert!(g.validate(3).is_err());

        let semi = ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert!(semi.validate(2).is_ok());
        assert!(!semi.strictly_positive_definite());

        let indefinite = ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(indefinite.validate(2).is_err());
        let skew = ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert!(skew.validate(2).is_err());

        assert!(!ProximalWeight::<f64>::Zero.strictly_positive_definite());
        assert_eq!(ProximalWeight::scaled(0.0f64), ProximalWeight::Zero);
        assert_eq!(ProximalWeight::<f64>::ScaledIdentity(2.0).isotropic_scale(), Some(2.0));
        assert_eq!(
            ProximalWeight::Dense(DMatrix::<f64>::identity(3, 3) * 2.0).isotropic_scale(),
            Some(2.0)
        );
        assert_eq!(
            ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).isotropic_scale(),
            None
        );
    }

    #[test]
    fn weighted_sq_norm_matches_dense() {
        let g = ProximalWeight::Dense(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        let v = DVector::from_column_slice(&[1.0, -2.0]);
        // [1,-2] [[2,1],[1,3]] [1,-2]ᵀ = 2 - 4 + 12 = 10
        assert!((g.sq_norm(&v) - 10.0f64).abs() < 1e-12);
    }
}
