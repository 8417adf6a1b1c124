//! Data, pilot and joint security schemes: Alice-side precoders and the
//! Bob/Eve receivers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::nmse;
use crate::channel::cfr_of;
use crate::decomposition::{decompose_fir_with, Convention, DecomposedChannel, UNIT_CIRCLE_TOL};
use crate::error::{Error, Result};
use crate::numerics::{fft, fft_in_place, min_phase_from_power, principal_sqrt, SPECTRAL_FLOOR};
use crate::ofdm::{
    diagonal_rhh, dft_taps, equalize, interpolate, ls_pilots, mmse_estimate, qpsk_demap,
    ChannelEstimate, Estimator, Interpolation, OfdmGrid, OfdmSymbol,
};
use crate::Cfr;

/// Precoding scheme applied by Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeMode {
    /// Plain CP-OFDM.
    Baseline,
    /// Data bins multiplied by the conjugate all-pass.
    Data,
    /// Pilot bins multiplied by the all-pass.
    Pilot,
    /// Both precoders.
    Joint,
}

impl SchemeMode {
    /// All modes in canonical order.
    pub const ALL: [SchemeMode; 4] = [Self::Baseline, Self::Data, Self::Pilot, Self::Joint];

    /// Lowercase name used in CSV and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Data => "data",
            Self::Pilot => "pilot",
            Self::Joint => "joint",
        }
    }

    /// Whether the data bins are precoded.
    pub fn precodes_data(self) -> bool {
        matches!(self, Self::Data | Self::Joint)
    }

    /// Whether the comb pilots are precoded.
    pub fn precodes_pilots(self) -> bool {
        matches!(self, Self::Pilot | Self::Joint)
    }
}

impl std::fmt::Display for SchemeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}'")))
    }
}

/// How Eve equalizes her observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EveEqualizer {
    /// Divide by her full channel.
    Full,
    /// Divide by the minimum-phase part of her channel, mimicking Bob.
    MinPhase,
    /// `MinPhase` for data-precoded modes with correlated channels, else `Full`.
    #[default]
    Auto,
}

/// Receiver-side processing options shared by Bob and Eve.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub estimator: Estimator,
    pub interpolation: Interpolation,
    /// Channel length `L` assumed by DFT interpolation, MMSE and the pilot chain.
    pub taps: usize,
    /// Tap powers used as the MMSE prior.
    pub tap_powers: Vec<f64>,
    /// Per-subcarrier noise variance known to the receiver.
    pub noise_var: f64,
    pub convention: Convention,
    pub unit_circle_tol: f64,
}

impl ReceiverConfig {
    /// LS with DFT interpolation, literal convention.
    pub fn new(tap_powers: Vec<f64>, noise_var: f64) -> Self {
        Self {
            estimator: Estimator::Ls,
            interpolation: Interpolation::Dft,
            taps: tap_powers.len(),
            tap_powers,
            noise_var,
            convention: Convention::Literal,
            unit_circle_tol: UNIT_CIRCLE_TOL,
        }
    }
}

/// Result of one receiver pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkOutcome {
    pub decoded_bits: Vec<u8>,
    pub bit_errors: usize,
    pub channel_estimate: ChannelEstimate,
    /// Linear NMSE of `channel_estimate` against the receiver's true channel.
    pub channel_nmse: f64,
}

impl LinkOutcome {
    fn score(
        decoded_bits: Vec<u8>,
        tx_bits: &[u8],
        channel_estimate: ChannelEstimate,
        truth: &[Complex64],
    ) -> Result<Self> {
        if decoded_bits.len() != tx_bits.len() {
            return Err(Error::SizeMismatch {
                expected: tx_bits.len(),
                got: decoded_bits.len(),
            });
        }
        let bit_errors = decoded_bits.iter().zip(tx_bits).filter(|(a, b)| a != b).count();
        let channel_nmse = nmse(&channel_estimate.values, truth)?;
        Ok(Self {
            decoded_bits,
            bit_errors,
            channel_estimate,
            channel_nmse,
        })
    }
}

/// Builds Alice's transmitted symbol for the given scheme.
pub fn alice_precode(
    grid: &OfdmGrid,
    data_symbols: &[Complex64],
    mode: SchemeMode,
    decomp: Option<&DecomposedChannel>,
) -> Result<OfdmSymbol> {
    let mut x = crate::ofdm::assemble(grid, data_symbols)?;
    if mode != SchemeMode::Baseline {
        let d = decomp.ok_or(Error::MissingDecomposition(mode.name()))?;
        if d.all_pass.len() != grid.n() {
            return Err(Error::SizeMismatch {
                expected: grid.n(),
                got: d.all_pass.len(),
            });
        }
        if mode.precodes_data() {
            for &k in grid.data_indices() {
                x[k] *= d.all_pass[k].conj();
            }
        }
        if mode.precodes_pilots() {
            for &k in grid.pilot_indices() {
                x[k] *= d.all_pass[k];
            }
        }
    }
    crate::ofdm::modulate_freq(x, grid.cp_len())
}

/// Plain pilot-based estimate (LS or MMSE) of the channel seen at the pilots.
pub fn estimate_channel(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    cfg: &ReceiverConfig,
) -> Result<ChannelEstimate> {
    match cfg.estimator {
        Estimator::Ls => {
            let gp = ls_pilots(rx_freq, grid)?;
            let (values, taps) = interpolate(grid, &gp, cfg.interpolation, cfg.taps)?;
            Ok(ChannelEstimate {
                values,
                taps,
                method: Estimator::Ls,
                noise_var: cfg.noise_var,
            })
        }
        Estimator::Mmse => {
            mmse_estimate(rx_freq, grid, &diagonal_rhh(&cfg.tap_powers), cfg.noise_var)
        }
    }
}

/// Delay-domain taps of an estimate, truncating the IDFT when the estimator
/// did not produce taps directly.
fn estimate_taps(est: &ChannelEstimate, taps: usize) -> Result<Vec<Complex64>> {
    match &est.taps {
        Some(t) => Ok(t.clone()),
        None => {
            let g = fft(&est.values, true)?;
            Ok(g[..taps.min(g.len())].to_vec())
        }
    }
}

/// Minimum-phase response of an FIR channel under the receiver's convention.
fn min_phase_of(taps: &[Complex64], n: usize, cfg: &ReceiverConfig) -> Result<Cfr> {
    Ok(decompose_fir_with(taps, n, cfg.convention, cfg.unit_circle_tol)?.min_phase)
}

/// Bob's receiver. `perfect_taps` supplies genie channel knowledge; otherwise
/// the channel is estimated from the received pilots. `truth` is the true
/// Alice-Bob CFR used for scoring.
pub fn bob_receive(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    mode: SchemeMode,
    cfg: &ReceiverConfig,
    perfect_taps: Option<&[Complex64]>,
    tx_bits: &[u8],
    truth: &[Complex64],
) -> Result<LinkOutcome> {
    let n = grid.n();
    let (est, taps) = match perfect_taps {
        Some(h) => (
            ChannelEstimate {
                values: cfr_of(h, n)?,
                taps: Some(h.to_vec()),
                method: cfg.estimator,
                noise_var: cfg.noise_var,
            },
            h.to_vec(),
        ),
        None if mode.precodes_pilots() => {
            let (values, taps) = reconstruct_from_precoded_pilots(rx_freq, grid, cfg.taps)?;
            (
                ChannelEstimate {
                    values,
                    taps: Some(taps.clone()),
                    method: Estimator::Ls,
                    noise_var: cfg.noise_var,
                },
                taps,
            )
        }
        None => {
            let est = estimate_channel(rx_freq, grid, cfg)?;
            let taps = estimate_taps(&est, cfg.taps)?;
            (est, taps)
        }
    };
    let eq = if mode.precodes_data() {
        min_phase_of(&taps, n, cfg)?
    } else {
        est.values.clone()
    };
    let bits = qpsk_demap(&equalize(rx_freq, &eq, grid.data_indices()));
    LinkOutcome::score(bits, tx_bits, est, truth)
}

/// Eve's channel knowledge and equalization policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EveModel {
    /// Eve decodes with her true channel instead of her pilot estimate.
    pub knows_channel: bool,
    pub equalizer: EveEqualizer,
    /// Alice-Eve correlation, consulted by [`EveEqualizer::Auto`].
    pub rho: f64,
}

/// Eve's receiver. Her reported estimate is always the pilot-based one; its
/// NMSE is measured against her true channel `h_ae`.
pub fn eve_receive(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    mode: SchemeMode,
    cfg: &ReceiverConfig,
    eve: &EveModel,
    h_ae: &[Complex64],
    tx_bits: &[u8],
) -> Result<LinkOutcome> {
    let n = grid.n();
    let truth = cfr_of(h_ae, n)?;
    let est = estimate_channel(rx_freq, grid, cfg)?;
    let (full, taps) = if eve.knows_channel {
        (truth.clone(), h_ae.to_vec())
    } else {
        (est.values.clone(), estimate_taps(&est, cfg.taps)?)
    };
    let min_phase = match eve.equalizer {
        EveEqualizer::Full => false,
        EveEqualizer::MinPhase => true,
        EveEqualizer::Auto => mode.precodes_data() && eve.rho > 0.0,
    };
    let eq = if min_phase {
        min_phase_of(&taps, n, cfg)?
    } else {
        full
    };
    let bits = qpsk_demap(&equalize(rx_freq, &eq, grid.data_indices()));
    LinkOutcome::score(bits, tx_bits, est, &truth)
}

/// Dense-grid factor for the autocorrelation-based minimum phase.
const DENSE_FACTOR: usize = 16;

/// Recovers `H_ab` from pilots precoded by its all-pass component.
///
/// The LS pilot values `G = H·A` have `|G| = |H|`; the minimum phase `M` of
/// that magnitude gives `G·M = H²` up to a constant. The square root is taken
/// per pilot and the per-pilot signs are chosen to maximize the energy of the
/// signed sequence inside the `L`-tap delay span. The result is interpolated
/// by DFT and its global phase aligned to the unprecoded anchors. Returns the
/// CFR and the `L` delay-domain taps.
pub fn reconstruct_from_precoded_pilots(
    rx_freq: &[Complex64],
    grid: &OfdmGrid,
    taps: usize,
) -> Result<(Cfr, Vec<Complex64>)> {
    let n = grid.n();
    grid.comb_layout().ok_or_else(|| {
        Error::Config("pilot reconstruction needs a uniform power-of-two pilot comb".into())
    })?;
    let gp = ls_pilots(rx_freq, grid)?;
    let np = gp.len();
    if taps == 0 || 2 * taps - 1 > np {
        return Err(Error::Config(format!(
            "pilot reconstruction needs 2L−1 ≤ {np} (L = {taps})"
        )));
    }

    let power: Vec<f64> = gp.iter().map(|g| g.norm_sqr()).collect();
    let nd = DENSE_FACTOR * n;
    let m_dense = min_phase_from_power(&power, taps, nd, SPECTRAL_FLOOR)?;
    let step = nd / n;
    let mut q: Vec<Complex64> = grid
        .pilot_indices()
        .iter()
        .zip(&gp)
        .map(|(&k, g)| g * m_dense[k * step])
        .collect();
    fft_in_place(&mut q, true)?;
    for v in q.iter_mut().skip(2 * taps - 1) {
        *v = Complex64::new(0.0, 0.0);
    }
    fft_in_place(&mut q, false)?;
    let ht: Vec<Complex64> = q.into_iter().map(principal_sqrt).collect();

    let signed = resolve_signs(&ht, taps)?;
    let mut h = dft_taps(grid, &signed, taps)?;
    let mut cfr = cfr_of(&h, n)?;

    if !grid.anchor_indices().is_empty() {
        let u: Complex64 = grid
            .anchor_indices()
            .iter()
            .map(|&k| cfr[k].conj() * rx_freq[k] / grid.known_value(k))
            .sum();
        if u.norm() > 0.0 {
            let u = u / u.norm();
            for v in cfr.iter_mut().chain(h.iter_mut()) {
                *v *= u;
            }
        }
    }
    Ok((cfr, h))
}

/// In-band projector `Π = F F^H / Np` for `F[i,l] = e^{-j2πil/Np}`, `l < L`.
fn inband_projector(np: usize, taps: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(np, np, |i, j| {
        let d = i as f64 - j as f64;
        (0..taps)
            .map(|l| Complex64::from_polar(1.0, -2.0 * PI * d * l as f64 / np as f64))
            .sum::<Complex64>()
            / np as f64
    })
}

/// Chooses per-sample signs `s ∈ {±1}` maximizing `‖Π(s⊙x)‖²`.
///
/// Two candidates are refined by single-flip ascent: the sign pattern of the
/// top eigenvector of `Re(D^H Π D)`, and a second-difference Viterbi path
/// followed by alternating projection. The better one is returned.
pub fn resolve_signs(x: &[Complex64], taps: usize) -> Result<Vec<Complex64>> {
    let np = x.len();
    let pi = inband_projector(np, taps);
    let k = DMatrix::from_fn(np, np, |i, j| (x[i].conj() * pi[(i, j)] * x[j]).re);

    let eig = SymmetricEigen::new(k.clone());
    let top = eig.eigenvalues.imax();
    let mut s_eig: Vec<f64> = eig
        .eigenvectors
        .column(top)
        .iter()
        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let obj_eig = local_ascent(&k, &mut s_eig);

    let mut s_vit = viterbi_signs(x);
    alternating_projection(x, &mut s_vit, taps)?;
    let obj_vit = local_ascent(&k, &mut s_vit);

    let s = if obj_eig >= obj_vit { s_eig } else { s_vit };
    Ok(x.iter().zip(&s).map(|(v, s)| v * *s).collect())
}

/// Greedy single-flip ascent of `sᵀKs`; returns the final objective.
fn local_ascent(k: &DMatrix<f64>, s: &mut [f64]) -> f64 {
    let n = s.len();
    let sv = nalgebra::DVector::from_column_slice(s);
    let mut ks: Vec<f64> = (k * &sv).iter().copied().collect();
    loop {
        let mut improved = false;
        for i in 0..n {
            let delta = -4.0 * s[i] * ks[i] + 4.0 * k[(i, i)];
            if delta > 1e-12 {
                let old = s[i];
                s[i] = -old;
                for (j, v) in ks.iter_mut().enumerate() {
                    *v += k[(j, i)] * (s[i] - old);
                }
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    s.iter().zip(&ks).map(|(a, b)| a * b).sum()
}

/// Signs minimizing `Σ|s_i x_i − 2 s_{i−1} x_{i−1} + s_{i−2} x_{i−2}|²` with
/// `s_0 = +1`.
fn viterbi_signs(x: &[Complex64]) -> Vec<f64> {
    let n = x.len();
    if n < 3 {
        let mut s = vec![1.0; n];
        if n == 2 && (x[1] * x[0].conj()).re < 0.0 {
            s[1] = -1.0;
        }
        return s;
    }
    const SIGNS: [f64; 2] = [1.0, -1.0];
    // State index 2*a + b for (s_{i-1}, s_i) with 0 = +1, 1 = −1; s_0 = +1.
    let mut cost = [f64::INFINITY; 4];
    for b in 0..2 {
        cost[b] = (x[1] * SIGNS[b] - x[0]).norm_sqr();
    }
    let mut back: Vec<[usize; 4]> = Vec::with_capacity(n);
    for i in 2..n {
        let mut next = [f64::INFINITY; 4];
        let mut bk = [0usize; 4];
        for a in 0..2 {
            for b in 0..2 {
                let c = cost[2 * a + b];
                if !c.is_finite() {
                    continue;
                }
                for s in 0..2 {
                    let v = c
                        + (x[i] * SIGNS[s] - x[i - 1] * (2.0 * SIGNS[b]) + x[i - 2] * SIGNS[a])
                            .norm_sqr();
                    if v < next[2 * b + s] {
                        next[2 * b + s] = v;
                        bk[2 * b + s] = 2 * a + b;
                    }
                }
            }
        }
        back.push(bk);
        cost = next;
    }
    let mut st = (0..4)
        .min_by(|&p, &q| cost[p].total_cmp(&cost[q]))
        .unwrap_or(0);
    let mut idx = vec![0usize; n];
    idx[n - 1] = st % 2;
    idx[n - 2] = st / 2;
    for (i, bk) in back.iter().enumerate().rev() {
        st = bk[st];
        idx[i] = st / 2;
    }
    idx.into_iter().map(|i| SIGNS[i]).collect()
}

/// Re-signs each sample against the `L`-tap projection of the current signed
/// sequence until the pattern is stable.
fn alternating_projection(x: &[Complex64], s: &mut [f64], taps: usize) -> Result<()> {
    let np = x.len();
    for _ in 0..50 {
        let mut t: Vec<Complex64> = x.iter().zip(s.iter()).map(|(v, s)| v * *s).collect();
        fft_in_place(&mut t, true)?;
        for v in t.iter_mut().skip(taps) {
            *v = Complex64::new(0.0, 0.0);
        }
        fft_in_place(&mut t, false)?;
        let mut changed = false;
        for i in 0..np {
            let ns = if (x[i] * t[i].conj()).re < 0.0 { -1.0 } else { 1.0 };
            if ns != s[i] {
                s[i] = ns;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(())
}
