//! Desk-scale massive-MIMO baseband simulator and hardware partitioning planner.
//!
//! The crate is split along the processing chain of a TDD massive-MIMO base
//! station:
//!
//! * [`matrixkit`]: complex linear algebra (Gram products, MGS QR, Neumann
//!   series inverse, regularized pseudo-inverse).
//! * [`channel`]: Rayleigh block fading, AWGN, Jakes time correlation and the
//!   non-reciprocal transceiver model.
//! * [`ofdm`]: OFDM modulation, frame schedules, comb pilots and the
//!   pilot-spacing mobility limit.
//! * [`mimoproc`]: detection/precoding matrices, LS channel estimation and
//!   reciprocity calibration.
//! * [`sync`]: Zadoff-Chu PSS generation and two-step acquisition.
//! * [`linksim`]: TDD frame simulation, BER sweeps and CSI snapshots.
//! * [`planner`]: processing/shuffling requirements and partitioning checks.

pub mod channel;
pub mod error;
pub mod linksim;
pub mod matrixkit;
pub mod mimoproc;
pub mod ofdm;
pub mod planner;
pub mod special;
pub mod stats;
pub mod sync;

pub use error::{Error, Result};
pub use matrixkit::CMat;

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
