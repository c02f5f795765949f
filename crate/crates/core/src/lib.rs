//! Competition of several species for one growth-limiting substrate in a
//! chemostat, with substrate-dependent yields.
//!
//! The crate covers the whole analysis loop for such models:
//!
//! - [`expr`]: user-supplied functions of `S`, parsed and differentiated
//!   with dual numbers;
//! - [`model`]: species, models, nondimensionalization and break-even
//!   concentrations;
//! - [`equilibria`]: equilibria and local stability of the single-survivor
//!   equilibrium;
//! - [`certificates`]: numeric and analytic checks of the sufficient
//!   conditions for global stability (competitive exclusion);
//! - [`dynamics`]: adaptive Dormand–Prince integration and Lyapunov
//!   monitoring along trajectories;
//! - [`cycles`]: single-species phase-plane analysis with a Poincaré return
//!   map;
//! - [`model_file`]: the JSON model-file format.

pub mod certificates;
pub mod cycles;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod expr;
pub mod model;
mod numeric;
pub mod serde_inf;
pub mod model_file;

pub use error::{Error, EvalError, ParseError, Result};
pub use expr::{Dual, Expr};
pub use model::{break_even, monod_species, p1_curve, BreakEven, ChemostatModel, ScalarFn, Species};
pub use certificates::{c_crit, certify, CertificateReport, CertifyConfig, Verdict};
pub use equilibria::{e1_star, enumerate_equilibria, local_stability_e1, Equilibrium, Stability};
pub use dynamics::{integrate, LyapunovKind, Trajectory};
pub use cycles::{find_cycles, landmarks, return_map, CycleResult, Landmarks};
pub use model_file::ModelFile;
