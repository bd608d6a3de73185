//! Simulation of three-user interference alignment over parallel fading
//! channels.
//!
//! Each block spans `N = 2n + 1` subcarriers. User 1 sends `n + 1` symbols,
//! users 2 and 3 send `n` symbols each, all precoded with Vandermonde-type
//! matrices built from the diagonal channel ratio `T`. At every receiver the
//! two interferers collapse onto a shared `n` (or `n + 1`) dimensional
//! subspace, and because the symbols live on the Gaussian integers the
//! aligned interference is itself a point of an integer lattice.
//!
//! Two families of receivers are compared:
//!
//! * linear zero forcing, which projects the interference subspace away
//!   ([`receivers::decode_lzf_linear`], [`receivers::decode_lzf_glrt`]);
//! * lattice decoding, which jointly searches the desired symbols and the
//!   interference sum with a Schnorr–Euchner sphere decoder
//!   ([`receivers::decode_ld`]).
//!
//! The [`harness`] module drives Monte Carlo symbol-error-rate sweeps with a
//! measured-power SNR convention, and the `ia-sim` binary exposes them on the
//! command line.

pub mod channel;
pub mod cli;
pub mod constellation;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod mimo;
pub mod precoding;
pub mod receivers;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
