//! Exact and approximate hypervolume computation.
//!
//! * [`exact`]: exact hypervolume plus independent oracles.
//! * [`mc`] and [`line`]: the point-based and line-based estimators.
//! * [`nn`], [`hvnet`]: a small dense-network engine and the DeepSets
//!   regressor built on it.
//! * [`transform`]: maps any (set, reference point) pair into the unit frame
//!   the regressor expects.
//! * [`dataset`]: random non-dominated set generation and dataset files.
//! * [`bench`]: error-versus-runtime harness shared by the CLI.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod hvnet;
pub mod line;
pub mod mc;
pub mod nn;
pub mod pareto;
pub mod rng;
pub mod transform;

pub use error::{Error, Result};
pub use exact::{hv_exact, hv_exact_2d, hv_oracle_incl_excl};
pub use line::{generate_unv_directions, hv_line, DirectionSet};
pub use mc::{hv_mc, McConfig};
pub use pareto::{dominates, non_dominated_sort, validate_solution_set, Point, ReferencePoint, SolutionSet};
pub use hvnet::{HvNetModel, LabeledSet, Loss, SetRegressor, TrainConfig};
pub use transform::{approx_hv_any, normalize, NormalizedProblem, Orientation};
