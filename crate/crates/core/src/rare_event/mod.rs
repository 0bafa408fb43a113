//! Rare-event estimation: stopped runs, AMS, and direct sampling.

mod ams;
mod crossing;
mod direct_mc;
mod reaction;
mod run;

pub use ams::{ams_estimate, AmsConfig, AmsOutput, KillEvent, TiePolicy, SELECTION_STREAM};
pub use crossing::crossing_positions;
pub use direct_mc::direct_mc_estimate;
pub use reaction::{xi, ReactionCoordinate};
pub use run::{run_until_absorbed, LineageSegment, Simulator, StopReason, StoppedRun};
