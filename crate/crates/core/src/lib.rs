//! Generalized and proximal ADMM for two-block separable convex programs.
//!
//! ```text
//! min f(x) + g(y)   s.t.  Ax + By = b,  x ∈ X,  y ∈ Y
//! ```
//!
//! One engine ([`solvers::dpgadmm_step`]) covers ADMM, GADMM and their
//! proximal and doubly proximal versions; the variant only fixes the
//! relaxation factor and which proximal weights may be nonzero. The
//! [`metrics`] module evaluates the weighted norms in which the iterates
//! contract and checks the contraction inequalities numerically at every
//! iteration, and [`calib`] holds the correlation-matrix calibration
//! benchmark.
//!
//! The numerical core is generic over [`Real`] (`f32`, `f64`); the proof
//! constants in [`metrics::constants`] are generic over any
//! `num_traits::Num` field, so they can be evaluated in exact rational
//! arithmetic. The aliases at the crate root fix the scalar to `f64`.

// `!(a < b)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod calib;
pub mod error;
pub mod metrics;
pub mod problem;
pub mod report;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Real;
pub use solvers::{StopRule, Termination, Variant};

pub type IterateState = problem::IterateState<f64>;
pub type LinearMap = problem::LinearMap<f64>;
pub type LinearCoupling = problem::LinearCoupling<f64>;
pub type ProximalWeight = problem::ProximalWeight<f64>;
pub type ProximalWeights = problem::ProximalWeights<f64>;
pub type ProblemInstance = problem::ProblemInstance<f64>;
pub type SolverConfig = solvers::SolverConfig<f64>;
pub type StepOutcome = solvers::StepOutcome<f64>;
pub type RunResult = solvers::RunResult<f64>;
pub type CertificateReport = metrics::CertificateReport<f64>;
pub type RateEstimate = metrics::RateEstimate<f64>;
pub type CalibInstance = calib::CalibInstance<f64>;
pub type ReferenceSolution = calib::ReferenceSolution<f64>;

/// Single-precision aliases for the pieces that make sense in `f32`.
pub mod single {
    pub type IterateState = crate::problem::IterateState<f32>;
    pub type ProblemInstance = crate::problem::ProblemInstance<f32>;
    pub type SolverConfig = crate::solvers::SolverConfig<f32>;
    pub type RunResult = crate::solvers::RunResult<f32>;
}
