//! Monte Carlo symbol-error-rate sweeps.
//!
//! # Seeding
//!
//! Trial `i` of a sweep uses `t_i = derive_seed(base_seed, i)`. Inside a
//! trial:
//!
//! * channel draw `a` (after `a` rejected draws) uses seed `derive_seed(t_i, a)`,
//! * the symbol block uses ChaCha8 stream 1 of `t_i`,
//! * the noise uses `derive_seed(t_i ^ NOISE_TAG, 0)`; one unit-variance noise
//!   draw is scaled by every `noise_std` of the grid.
//!
//! A trial is therefore a pure function of `(config, t_i)`, and the sweep
//! result does not depend on how trials are scheduled across threads.
//!
//! # SNR
//!
//! The SNR reported for a grid point is measured, not nominal:
//! `10 log10(P / noise_std²)`, with `P` the per-subcarrier transmit power
//! `‖V_i X_i‖² / (2n+1)` averaged over the three users and all completed
//! trials. [`calibrate_noise_grid`] maps target SNRs to noise levels from a
//! pilot pass over the same trial seeds.

mod config;
mod csv_io;
mod stats;
mod sweep;
mod trial;

pub use config::SweepConfig;
pub use csv_io::{read_csv, write_csv, write_metadata, CsvRow, CSV_HEADER};
pub use stats::wilson_interval;
pub use sweep::{calibrate_noise_grid, run_sweep, run_sweep_with_threads, CellResult, PointResult, SweepResult, UserSel};
pub use trial::{prepare_trial, run_trial, TrialOutcome, TrialSetup, NOISE_TAG};
