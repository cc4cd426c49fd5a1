//! Elevator dispatch modeling toolkit.
//!
//! Two complementary models of a single "dumbwaiter" elevator, an
//! unintelligent car that services calls strictly in arrival order:
//!
//! - [`spatial`]: the car lives on a continuous `[0, 1]` shaft and visits
//!   i.i.d. uniform call positions. Leg lengths between consecutive stops
//!   have closed-form moments that the module exposes next to empirical
//!   estimators, plus a three-call batching rule that provably never loses
//!   to in-order service.
//! - [`chain`]: a discrete building with `N` floors, modeled as a Markov
//!   chain over composite states `(elevator floor, waiting bitmask)`, with
//!   exact expected first-hitting times to every empty-building state and a
//!   seeded simulator for cross-checking the solver.
//!
//! On top of those sit [`optimize`] (genetic search over movement policies
//! minimizing the summed hitting-time objective), [`fleet`] (balanced
//! passenger distribution over independent cars), [`config`] (canonical
//! JSON parsing/emission for the shared spec files), and [`report`] (the
//! JSON/CSV reports the `dumbwaiter` binary emits).
//!
//! Every randomized operation takes an explicit 64-bit seed and is
//! bit-reproducible across platforms; see [`rng`].

pub mod chain;
pub mod config;
pub mod fleet;
pub mod optimize;
pub mod report;
pub mod rng;
pub mod spatial;

pub use chain::{ChainSpec, CompositeState, MovementPolicy, TransitionMatrix};
pub use fleet::{FleetAssignment, FleetSpec};
pub use optimize::{GaConfig, OptimizationResult};
pub use spatial::{BuildingSpec, CallSequence, LegMoments, LegSeries};
