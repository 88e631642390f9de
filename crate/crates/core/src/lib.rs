//! Counting polynomial corner configurations in boxes of `Z^n`, with the
//! arithmetic-progression partitions, Gowers norms, exponential-sum
//! certificates and energy increment that accompany the density argument.
//!
//! Axes are 0-based in the API; coordinates are 1-based, so a box
//! `[N_1] × … × [N_n]` holds the points `1 ≤ x_i ≤ N_i`.

pub mod bitset;
pub mod config;
pub mod counting;
pub mod energy;
pub mod error;
pub mod expsum;
pub mod gowers;
pub mod grid;
pub mod numeric;
pub mod oracle;
pub mod partition;
pub mod report;
pub mod rng;
pub mod set;
pub mod torus;
pub mod verify;

pub use config::{validate_config, ConfigSpec, ValidationReport};
pub use error::{HofaError, Result};
pub use grid::{BoxSpec, GridFunction, LineFn, PhaseLine, PhaseTable};
pub use partition::{ApPartition, Partition, RefinedPartition};
pub use set::SetIndicator;
pub use torus::TorusPhase;
