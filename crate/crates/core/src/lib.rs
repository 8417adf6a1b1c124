//! Channel-decomposition physical-layer security for OFDM.
//!
//! The crate factors multipath channels into minimum-phase and all-pass
//! components, applies the data, pilot and joint precoding schemes for an
//! Alice-Bob link observed by an eavesdropper Eve, and reproduces BER, NMSE,
//! PAPR and correlation results both by Monte-Carlo simulation and from
//! closed-form expressions.
//!
//! Conventions used throughout:
//! - The forward DFT is unscaled and the inverse carries `1/N`.
//! - `snr_db` is the per-subcarrier symbol SNR `Es/N0`; noise power is set from
//!   the transmitted symbol power and the channel profile has unit total power.
//! - QPSK is Gray mapped with bits `00` at `(1+j)/√2`.

pub mod analysis;
pub mod channel;
pub mod decomposition;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod ofdm;
pub mod security;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex frequency response sampled on the OFDM grid.
pub type Cfr = Vec<Complex64>;
