//! GRAPE-S and Pair-GRAPE-S.
//!
//! Every robot holds a belief about the whole partition, stamped with an update
//! counter `r`, the simulated time of the update and the robot that made it. A
//! robot moves to its best slot under its belief and broadcasts the result.
//! Receivers keep whichever belief ranks higher (see [`MutexKey`]), so exactly
//! one concurrent update survives and the collective behaves as if a mutex
//! serialized the moves.
//!
//! Pair-GRAPE-S caps coalitions at their requirement and, once a robot has been
//! quiescent for a few activations, lets an idle robot ask an assigned one to
//! hand over its slot and move to an unmet requirement it can serve.

mod agent;
mod state;
pub mod wire;

pub use agent::{GrapeAgent, GrapeConfig};
pub use state::{needs_pairwise, GrapeState, MutexKey, Phase, Transition};
pub use wire::{GrapeMessage, GrapeWire, SwapKind, SwapMessage, NO_ORIGIN};
