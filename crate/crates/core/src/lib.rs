//! Simulation and analysis toolkit for discrete dithered desynchronization:
//! decentralized TDMA scheduling where nodes share a slotted frame by
//! re-quantizing their firing counters with a dithered quantizer.
//!
//! The crate has three layers:
//!
//! - **Protocol dynamics** — [`quantizer`] holds the dithered quantizer and
//!   the exact integer interaction law it induces; [`counter`] simulates the
//!   absolute-counter protocol event by event; [`ring`] runs the equivalent
//!   gap process on a ring with a rotating active edge. Driving both
//!   simulations from one random stream keeps them in lockstep, which is how
//!   the equivalence is tested.
//! - **Analysis** — [`markov`] builds the absorbing chain of the slowest
//!   two-outlier configurations, solves it by dense linear algebra, and
//!   cross-validates the closed-form expected absorption time and its
//!   recurrence solution against the solver.
//! - **Experiments** — [`harness`] runs seeded Monte Carlo trials to
//!   absorption, in parallel, with reproducible per-trial streams.

pub mod counter;
pub mod error;
pub mod harness;
pub mod markov;
pub mod quantizer;
pub mod ring;
pub mod rng;

pub use counter::{CounterFrame, FiringEvent};
pub use error::{Error, Result};
pub use harness::{
    default_interaction_cap, post_absorption_probe, run_experiment, run_trial, ExperimentConfig,
    ExperimentOutput, ExperimentSummary, InitialStateMode, TrajectoryPoint, TrialRecord,
};
pub use markov::{
    absorption_growth_constant, absorption_upper_bound, closed_form_absorption_time,
    realize_outlier_state, recursion_check, worst_case_gap_vector, AbsorptionSolution,
    OutlierChain, OutlierState, RecursionReport,
};
pub use quantizer::{
    dither_quantize, dither_sample, literal_dither_outcome, uniform_quantize, DitherSample,
    InteractionDistribution, SlotGrid,
};
pub use ring::{classify, count_tdm_states, GapVector, InteractionOutcome, OutcomeKind, RingState};
pub use rng::SimRng;
