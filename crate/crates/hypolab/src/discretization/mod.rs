//! Hermite-in-velocity, staggered-in-space discretization of the kinetic
//! operators and the hypocoercive scalar product.

mod hermite;
mod operators;
mod snapshot;
mod state;

pub use hermite::{fourth_moment_form, GaussHermite, HermiteBasis};
pub use operators::{build_operators, random_state, OperatorSet};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotSidecar};
pub use state::{mode_len, PhaseState};

pub(crate) use operators::weighted_dot;
