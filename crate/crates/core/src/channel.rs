//! Multipath Rayleigh channels: power-delay profiles, independent and
//! correlated realizations, and CIR to CFR conversion.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_range, Error, Result};
use crate::numerics::fft_in_place;
use crate::Cfr;

/// Normalized tap powers of a tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    tap_powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// Builds a profile from nonnegative powers, normalizing them to unit sum.
    pub fn from_powers(powers: &[f64]) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::Config("power-delay profile needs at least one tap".into()));
        }
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config("tap powers must be finite and nonnegative".into()));
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroPower("power-delay profile"));
        }
        Ok(Self {
            tap_powers: powers.iter().map(|p| p / total).collect(),
        })
    }

    /// Tap powers, summing to one.
    pub fn tap_powers(&self) -> &[f64] {
        &self.tap_powers
    }

    /// Number of taps `L`.
    pub fn len(&self) -> usize {
        self.tap_powers.len()
    }

    /// Always false; a profile has at least one tap.
    pub fn is_empty(&self) -> bool {
        self.tap_powers.is_empty()
    }
}

/// Exponential profile with `tap_powers[l] ∝ exp(−l/decay)`.
pub fn exp_pdp(taps: usize, decay: f64) -> Result<PowerDelayProfile> {
    if taps == 0 {
        return Err(Error::Config("L must be at least 1".into()));
    }
    if !(decay.is_finite() && decay > 0.0) {
        return Err(Error::OutOfRange {
            name: "decay",
            value: decay,
            expected: "> 0",
        });
    }
    let p: Vec<f64> = (0..taps).map(|l| (-(l as f64) / decay).exp()).collect();
    PowerDelayProfile::from_powers(&p)
}

/// Decay constant placing the last of `taps` taps `span_db` below the first.
pub fn decay_for_span(taps: usize, span_db: f64) -> Result<f64> {
    if taps < 2 {
        return Err(Error::Config("a span needs at least two taps".into()));
    }
    check_range("span_db", span_db, f64::MIN_POSITIVE, f64::MAX, "> 0")?;
    Ok((taps - 1) as f64 / (span_db / 10.0 * std::f64::consts::LN_10))
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// One Rayleigh realization with `taps[l] ~ CN(0, tap_powers[l])`.
pub fn draw_channel<R: Rng + ?Sized>(pdp: &PowerDelayProfile, rng: &mut R) -> Vec<Complex64> {
    pdp.tap_powers
        .iter()
        .map(|&p| complex_gaussian(rng, p))
        .collect()
}

/// Eavesdropper channel `ρ·h_ab + √(1−ρ²)·h_e` with `h_e` a fresh draw from
/// the same profile, applied tap by tap.
pub fn draw_correlated<R: Rng + ?Sized>(
    h_ab: &[Complex64],
    pdp: &PowerDelayProfile,
    rho: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check_range("rho", rho, 0.0, 1.0, "[0, 1]")?;
    if h_ab.len() != pdp.len() {
        return Err(Error::SizeMismatch {
            expected: pdp.len(),
            got: h_ab.len(),
        });
    }
    let h_e = draw_channel(pdp, rng);
    if rho == 1.0 {
        return Ok(h_ab.to_vec());
    }
    let s = (1.0 - rho * rho).sqrt();
    Ok(h_ab
        .iter()
        .zip(&h_e)
        .map(|(a, e)| a * rho + e * s)
        .collect())
}

/// `N`-point DFT of the zero-padded taps.
pub fn cfr_of(taps: &[Complex64], n: usize) -> Result<Cfr> {
    if taps.len() > n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: taps.len(),
        });
    }
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    h[..taps.len()].copy_from_slice(taps);
    fft_in_place(&mut h, false)?;
    Ok(h)
}
