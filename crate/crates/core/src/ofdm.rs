//! OFDM transceiver primitives: grid layout, QPSK, CP modulation, AWGN,
//! LS/MMSE channel estimation and one-tap equalization.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{cfr_of, complex_gaussian};
use crate::error::{Error, Result};
use crate::numerics::fft_in_place;
use crate::Cfr;

/// Subcarrier layout: comb pilots, optional unprecoded anchor pilots, data.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmGrid {
    n: usize,
    cp_len: usize,
    pilot_indices: Vec<usize>,
    anchor_indices: Vec<usize>,
    data_indices: Vec<usize>,
    known_values: Vec<Complex64>,
}

impl OfdmGrid {
    /// Comb pilots every `spacing` bins starting at bin 0, plus the given
    /// anchor bins. Pilot and anchor symbols are unit-modulus QPSK drawn from
    /// `pilot_seed`.
    pub fn comb(
        n: usize,
        cp_len: usize,
        spacing: usize,
        anchors: &[usize],
        pilot_seed: u64,
    ) -> Result<Self> {
        if spacing == 0 || n % spacing != 0 {
            return Err(Error::Config(format!(
                "pilot spacing {spacing} must divide N = {n}"
            )));
        }
        let pilots: Vec<usize> = (0..n).step_by(spacing).collect();
        Self::new(n, cp_len, pilots, anchors.to_vec(), pilot_seed)
    }

    /// Grid with explicit pilot and anchor index sets.
    pub fn new(
        n: usize,
        cp_len: usize,
        mut pilot_indices: Vec<usize>,
        mut anchor_indices: Vec<usize>,
        pilot_seed: u64,
    ) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Sizing(format!("N = {n} is not a power of two")));
        }
        if cp_len > n {
            return Err(Error::Config(format!("cp_len {cp_len} exceeds N = {n}")));
        }
        pilot_indices.sort_unstable();
        pilot_indices.dedup();
        anchor_indices.sort_unstable();
        anchor_indices.dedup();
        if pilot_indices.is_empty() {
            return Err(Error::Config("at least one pilot is required".into()));
        }
        let mut role = vec![0u8; n];
        for &k in &pilot_indices {
            if k >= n {
                return Err(Error::Config(format!("pilot index {k} out of range")));
            }
            role[k] = 1;
        }
        for &k in &anchor_indices {
            if k >= n || role[k] != 0 {
                return Err(Error::Config(format!(
                    "anchor index {k} is out of range or collides with a pilot"
                )));
            }
            role[k] = 2;
        }
        let data_indices = (0..n).filter(|&k| role[k] == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(pilot_seed);
        let mut known_values = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            if role[k] != 0 {
                let bits = [rng.random::<bool>() as u8, rng.random::<bool>() as u8];
                known_values[k] = qpsk_symbol(bits[0], bits[1]);
            }
        }
        Ok(Self {
            n,
            cp_len,
            pilot_indices,
            anchor_indices,
            data_indices,
            known_values,
        })
    }

    /// FFT size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cyclic-prefix length in samples.
    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Sorted comb-pilot bins `k_p`.
    pub fn pilot_indices(&self) -> &[usize] {
        &self.pilot_indices
    }

    /// Sorted anchor bins (unprecoded known symbols among the data bins).
    pub fn anchor_indices(&self) -> &[usize] {
        &self.anchor_indices
    }

    /// Sorted data bins `k_d`.
    pub fn data_indices(&self) -> &[usize] {
        &self.data_indices
    }

    /// Known symbol at a pilot or anchor bin (zero elsewhere).
    pub fn known_value(&self, k: usize) -> Complex64 {
        self.known_values[k]
    }

    /// Known symbols at the comb pilots.
    pub fn pilot_values(&self) -> Vec<Complex64> {
        self.pilot_indices.iter().map(|&k| self.known_values[k]).collect()
    }

    /// Fraction of bins carrying comb pilots.
    pub fn pilot_rate(&self) -> f64 {
        self.pilot_indices.len() as f64 / self.n as f64
    }

    /// Data bits carried by one symbol.
    pub fn bits_per_symbol(&self) -> usize {
        2 * self.data_indices.len()
    }

    /// `(offset, spacing)` when the pilots form a uniform comb whose size is a
    /// power of two.
    pub fn comb_layout(&self) -> Option<(usize, usize)> {
        let p = &self.pilot_indices;
        let np = p.len();
        if !np.is_power_of_two() || self.n % np != 0 {
            return None;
        }
        let spacing = self.n / np;
        p.iter()
            .enumerate()
            .all(|(i, &k)| k == p[0] + i * spacing)
            .then_some((p[0], spacing))
    }
}

/// Frequency-domain symbol and its CP-prefixed time signal.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    pub freq: Vec<Complex64>,
    pub time: Vec<Complex64>,
}

/// Channel estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Ls,
    Mmse,
}

/// Interpolation of pilot estimates across the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Keep the first `L` taps of the pilot-comb IDFT.
    #[default]
    Dft,
    /// Complex linear interpolation with nearest-pilot extrapolation at edges.
    Linear,
}

/// Channel estimate on the full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub values: Cfr,
    /// Delay-domain estimate when the estimator produces one.
    pub taps: Option<Vec<Complex64>>,
    pub method: Estimator,
    pub noise_var: f64,
}

fn qpsk_symbol(b0: u8, b1: u8) -> Complex64 {
    let re = if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

/// Gray QPSK mapping of bit pairs; `00 → (1+j)/√2`.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::Sizing(format!("odd bit count {}", bits.len())));
    }
    Ok(bits.chunks_exact(2).map(|b| qpsk_symbol(b[0], b[1])).collect())
}

/// Nearest-neighbour QPSK demapping.
pub fn qpsk_demap(symbols: &[Complex64]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|s| [(s.re < 0.0) as u8, (s.im < 0.0) as u8])
        .collect()
}

/// Places pilots, anchors and data on the grid.
pub fn assemble(grid: &OfdmGrid, data: &[Complex64]) -> Result<Vec<Complex64>> {
    if data.len() != grid.data_indices.len() {
        return Err(Error::SizeMismatch {
            expected: grid.data_indices.len(),
            got: data.len(),
        });
    }
    let mut x = grid.known_values.clone();
    for (&k, &d) in grid.data_indices.iter().zip(data) {
        x[k] = d;
    }
    Ok(x)
}

/// IFFT of a frequency vector followed by CP insertion.
pub fn modulate_freq(freq: Vec<Complex64>, cp_len: usize) -> Result<OfdmSymbol> {
    let n = freq.len();
    if cp_len > n {
        return Err(Error::Config(format!("cp_len {cp_len} exceeds N = {n}")));
    }
    let mut body = freq.clone();
    fft_in_place(&mut body, true)?;
    let mut time = Vec::with_capacity(n + cp_len);
    time.extend_from_slice(&body[n - cp_len..]);
    time.extend_from_slice(&body);
    Ok(OfdmSymbol { freq, time })
}

/// Assembles and modulates one symbol.
pub fn modulate(grid: &OfdmGrid, data: &[Complex64]) -> Result<OfdmSymbol> {
    modulate_freq(assemble(grid, data)?, grid.cp_len)
}

/// Strips the CP and applies the forward FFT.
pub fn demodulate(time: &[Complex64], grid: &OfdmGrid) -> Result<Vec<Complex64>> {
    let expected = grid.n + grid.cp_len;
    if time.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            got: time.len(),
        });
    }
    let mut body = time[grid.cp_len..].to_vec();
    fft_in_place(&mut body, false)?;
    Ok(body)
}

/// Linear convolution with the channel taps, truncated to the input length.
pub fn apply_channel(time: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    (0..time.len())
        .map(|i| {
            taps.iter()
                .enumerate()
                .take(i + 1)
                .map(|(l, h)| h * time[i - l])
                .sum()
        })
        .collect()
}

/// Mean power of a signal.
pub fn mean_power(signal: &[Complex64]) -> f64 {
    signal.iter().map(|v| v.norm_sqr()).sum::<f64>() / signal.len().max(1) as f64
}

/// Adds complex AWGN with variance `mean_power(signal)/10^(snr_db/10)`.
/// `snr_db = +∞` leaves the signal unchanged.
pub fn awgn<R: Rng + ?Sized>(signal: &[Complex64], snr_db: f64, rng: &mut R) -> Vec<Complex64> {
    awgn_with_reference(signal, mean_power(signal), snr_db, rng)
}

/// Adds complex AWGN with variance `reference_power/10^(snr_db/10)`.
pub fn awgn_with_reference<R: Rng + ?Sized>(
    signal: &[Complex64],
    reference_power: f64,
    snr_db: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    if snr_db == f64::INFINITY {
        return signal.to_vec();
    }
    let var = reference_power / 10f64.powf(snr_db / 10.0);
    signal.iter().map(|s| s + complex_gaussian(rng, var)).collect()
}

/// Per-pilot LS estimates `Y(k_p)/P(k_p)`.
pub fn ls_pilots(rx_freq: &[Complex64], grid: &OfdmGrid) -> Result<Vec<Complex64>> {
    if rx_freq.len() != grid.n {
        return Err(Error::SizeMismatch {
            expected: grid.n,
            got: rx_freq.len(),
        });
    }
    grid.pilot_indices
        .iter()
        .map(|&k| {
            let p = grid.known_values[k];
            if p.norm() == 0.0 {
                Err(Error::OutOfRange {
                    name: "pilot symbol",
                    value: 0.0,
                    expected: "nonzero",
                })
            } else {
                Ok(rx_freq[k] / p)
            }
        })
        .collect()
}

/// Interpolates pilot-bin values over the grid. The DFT route returns the
/// `taps`-long delay-domain estimate as well.
pub fn interpolate(
    grid: &OfdmGrid,
    pilot_est: &[Complex64],
    method: Interpolation,
    taps: usize,
) -> Result<(Cfr, Option<Vec<Complex64>>)> {
    if pilot_est.len() != grid.pilot_indices.len() {
        return Err(Error::SizeMismatch {
            expected: grid.pilot_indices.len(),
            got: pilot_est.len(),
        });
    }
    match method {
        Interpolation::Linear => Ok((linear_interp(grid, pilot_est), None)),
        Interpolation::Dft => {
            let h = dft_taps(grid, pilot_est, taps)?;
            Ok((cfr_of(&h, grid.n)?, Some(h)))
        }
    }
}

/// Delay-domain taps from comb-pilot values: the first `taps` samples of the
/// pilot IDFT, corrected for the comb offset.
pub fn dft_taps(grid: &OfdmGrid, pilot_est: &[Complex64], taps: usize) -> Result<Vec<Complex64>> {
    let (offset, _) = grid.comb_layout().ok_or_else(|| {
        Error::Config("DFT interpolation needs a uniform power-of-two pilot comb".into())
    })?;
    let np = pilot_est.len();
    if taps == 0 || taps > np {
        return Err(Error::Config(format!(
            "tap count {taps} must be in 1..={np} for DFT interpolation"
        )));
    }
    let mut g = pilot_est.to_vec();
    fft_in_place(&mut g, true)?;
    Ok((0..taps)
        .map(|l| g[l] * Complex64::from_polar(1.0, 2.0 * PI * (offset * l) as f64 / grid.n as f64))
        .collect())
}

fn linear_interp(grid: &OfdmGrid, pilot_est: &[Complex64]) -> Cfr {
    let kp = &grid.pilot_indices;
    (0..grid.n)
        .map(|k| {
            let j = kp.partition_point(|&p| p <= k);
            if j == 0 {
                pilot_est[0]
            } else if j == kp.len() {
                pilot_est[kp.len() - 1]
            } else {
                let (k0, k1) = (kp[j - 1], kp[j]);
                let t = (k - k0) as f64 / (k1 - k0) as f64;
                pilot_est[j - 1] * (1.0 - t) + pilot_est[j] * t
            }
        })
        .collect()
}

/// LS estimate with interpolation.
pub fn ls_estimate(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    method: Interpolation,
    taps: usize,
) -> Result<ChannelEstimate> {
    let gp = ls_pilots(rx_freq, grid)?;
    let (values, taps) = interpolate(grid, &gp, method, taps)?;
    Ok(ChannelEstimate {
        values,
        taps,
        method: Estimator::Ls,
        noise_var: 0.0,
    })
}

/// Diagonal tap autocorrelation from a power-delay profile.
pub fn diagonal_rhh(powers: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(powers.len(), powers.len(), |i, j| {
        if i == j {
            Complex64::new(powers[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Linear MMSE estimate `R A^H (A R A^H + σ² I)^{-1} Y_p` with `A = X_p F_p`,
/// solved in the equivalent `L×L` form `(R A^H A + σ² I) ĥ = R A^H Y_p`.
/// `noise_var` is the per-subcarrier noise variance.
pub fn mmse_estimate(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    r_hh: &DMatrix<Complex64>,
    noise_var: f64,
) -> Result<ChannelEstimate> {
    let l = r_hh.nrows();
    if l == 0 || r_hh.ncols() != l {
        return Err(Error::Config("R_hh must be square and nonempty".into()));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::OutOfRange {
            name: "noise_var",
            value: noise_var,
            expected: ">= 0",
        });
    }
    if rx_freq.len() != grid.n {
        return Err(Error::SizeMismatch {
            expected: grid.n,
            got: rx_freq.len(),
        });
    }
    let kp = &grid.pilot_indices;
    let a = DMatrix::from_fn(kp.len(), l, |i, j| {
        grid.known_values[kp[i]]
            * Complex64::from_polar(1.0, -2.0 * PI * (kp[i] * j) as f64 / grid.n as f64)
    });
    let y = DVector::from_iterator(kp.len(), kp.iter().map(|&k| rx_freq[k]));
    let ah = a.adjoint();
    let mut lhs = r_hh * &ah * &a;
    for i in 0..l {
        lhs[(i, i)] += noise_var;
    }
    let rhs = r_hh * &ah * y;
    let h = lhs
        .lu()
        .solve(&rhs)
        .filter(|h| h.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("MMSE normal matrix is singular".into()))?;
    let taps: Vec<Complex64> = h.iter().copied().collect();
    Ok(ChannelEstimate {
        values: cfr_of(&taps, grid.n)?,
        taps: Some(taps),
        method: Estimator::Mmse,
        noise_var,
    })
}

/// Smallest divisor magnitude used by [`equalize`].
pub const EQUALIZER_FLOOR: f64 = 1e-12;

/// One-tap equalization `rx(k)/est(k)` at the given bins.
pub fn equalize(rx_freq: &[Complex64], est: &[Complex64], indices: &[usize]) -> Vec<Complex64> {
    indices
        .iter()
        .map(|&k| {
            let e = est[k];
            let e = if e.norm() < EQUALIZER_FLOOR {
                if e.norm() == 0.0 {
                    Complex64::new(EQUALIZER_FLOOR, 0.0)
                } else {
                    e / e.norm() * EQUALIZER_FLOOR
                }
            } else {
                e
            };
            rx_freq[k] / e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> OfdmGrid {
        OfdmGrid::comb(256, 64, 4, &[], 1).unwrap()
    }

    #[test]
    fn grid_partition() {
        let g = OfdmGrid::comb(256, 64, 4, &[2, 66], 1).unwrap();
        assert_eq!(g.pilot_indices().len(), 64);
        assert_eq!(g.data_indices().len(), 190);
        assert!((g.pilot_rate() - 0.25).abs() < 1e-15);
        assert_eq!(g.comb_layout(), Some((0, 4)));
        assert!(OfdmGrid::comb(256, 64, 4, &[4], 1).is_err());
        assert!(OfdmGrid::comb(100, 16, 4, &[], 1).is_err());
    }

    #[test]
    fn qpsk_convention() {
        let s = qpsk_map(&[0, 0, 1, 0, 1, 1, 0, 1]).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(s[0], Complex64::new(r, r));
        assert_eq!(s[1], Complex64::new(-r, r));
        assert_eq!(s[2], Complex64::new(-r, -r));
        assert_eq!(s[3], Complex64::new(r, -r));
        assert!(qpsk_map(&[0, 1, 1]).is_err());
        assert_eq!(qpsk_demap(&s), vec![0, 0, 1, 0, 1, 1, 0, 1]);
    }

    #[test]
    fn loopback_and_cp() {
        let g = grid();
        let data: Vec<Complex64> = (0..g.data_indices().len())
            .map(|i| Complex64::from_polar(1.0, i as f64))
            .collect();
        let sym = modulate(&g, &data).unwrap();
        assert_eq!(sym.time.len(), 320);
        for i in 0..64 {
            assert_eq!(sym.time[i], sym.time[256 + i]);
        }
        let back = demodulate(&sym.time, &g).unwrap();
        assert!(back.iter().zip(&sym.freq).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn awgn_infinite_snr_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = vec![Complex64::new(0.3, -0.1); 10];
        assert_eq!(awgn(&x, f64::INFINITY, &mut rng), x);
    }

    #[test]
    fn flat_channel_ls_is_one() {
        let g = grid();
        let data = vec![Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2); g.data_indices().len()];
        let sym = modulate(&g, &data).unwrap();
        for interp in [Interpolation::Linear, Interpolation::Dft] {
            let est = ls_estimate(&sym.freq, &g, interp, 11).unwrap();
            assert!(est.values.iter().all(|v| (v - 1.0).norm() < 1e-12));
        }
    }

    #[test]
    fn equalizer_floor_is_finite() {
        let rx = vec![Complex64::new(1.0, 0.0); 3];
        let est = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), rx[2]];
        let out = equalize(&rx, &est, &[0, 1, 2]);
        assert_eq!(out[0], Complex64::new(1.0, 0.0));
        assert!(out[1].is_finite() && out[1].norm() > 1e11);
        let same = equalize(&est, &est, &[0, 2]);
        assert!(same.iter().all(|v| (v - 1.0).norm() < 1e-15));
    }
}
