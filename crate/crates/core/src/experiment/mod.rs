//! Seeded trials of the repeated game under each experimental condition,
//! condition suites and robustness sweeps.

mod config;
mod convergence;
mod suite;
mod sweep;
mod trial;

pub use config::{AiMode, Channels, Condition, ConsumerClass, TrialConfig};
pub use convergence::{checkpoint_complementarity, time_to_threshold, ThresholdCrossing};
pub use suite::{run_condition_suite, run_conditions, Suite};
pub use sweep::{run_sweep, sweep_points, SweepAxis, SweepPoint, SweepRow};
pub use trial::{run_round, run_trial, run_trial_seeded, Checkpoint, Market, RoundOutcome, Series, TrialResult};
