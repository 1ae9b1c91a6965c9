//! Zeroth-order extragradient (ZO-EG) solver for min-max problems whose
//! objective is submodular in a set variable and concave in a continuous one.
//!
//! The set player is relaxed through the Lovász extension and updated with
//! chain subgradients; the continuous player only has value access and is
//! updated with Gaussian-smoothing two-point estimates. Brute-force oracles
//! in [`verify`] compute every gap quantity exactly on small instances.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix `f64`.

pub mod error;
pub mod geometry;
pub mod lovasz;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod setfn;
pub mod smoothing;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::ConstraintSet;
pub use lovasz::ChainDecomposition;
pub use scalar::Scalar;
pub use setfn::{ProblemConstants, QueryCounter, SetFunction, SetFunctionInstance, Subset};
pub use smoothing::{DifferenceScheme, OnlineOracle, OracleConfig};
pub use solver::{JointState, SolverConfig, Trace};
pub use verify::GapReport;

pub type Instance = SetFunctionInstance<f64>;
pub type Constants = ProblemConstants<f64>;
pub type Constraint = ConstraintSet<f64>;
pub type Chain = ChainDecomposition<f64>;
pub type State = JointState<f64>;
pub type Config = SolverConfig<f64>;
pub type Oracle = OracleConfig<f64>;
pub type OfflineTrace = Trace<f64>;
pub type Gaps = GapReport<f64>;

/// Version stamped into every emitted summary.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
