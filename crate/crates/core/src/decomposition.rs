//! Minimum-phase / all-pass factorization of channels and the all-pass square
//! root used by the pilot scheme.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::cfr_of;
use crate::error::{Error, Result};
use crate::numerics::{min_phase_from_power, poly_roots, SPECTRAL_FLOOR, principal_arg, principal_sqrt, unwrap_phase};
use crate::Cfr;

/// Default distance from the unit circle below which a zero counts as inside.
pub const UNIT_CIRCLE_TOL: f64 = 1e-6;

/// Paired minimum-phase and all-pass responses with `H = min_phase·all_pass`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedChannel {
    pub min_phase: Cfr,
    pub all_pass: Cfr,
}

/// Where the constant phase of the channel is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Leading complex gain stays in the minimum-phase part (Blaschke factors
    /// carry only the excess phase).
    #[default]
    Literal,
    /// Minimum-phase impulse response starts real positive; the constant phase
    /// moves into the all-pass part. Matches the cepstral route.
    Canonical,
}

/// Zero classification and minimum-phase taps of an FIR channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFactorization {
    /// Leading zero taps, realized as Blaschke factors with a pole at the origin.
    pub delay: usize,
    /// Zeros with `|z| ≤ 1` (within tolerance), kept in the minimum-phase part.
    pub zeros_inside: Vec<Complex64>,
    /// Zeros with `|z| > 1`, reflected into Blaschke factors with `p = 1/z`.
    pub zeros_outside: Vec<Complex64>,
    /// Taps of the minimum-phase part under the literal convention.
    pub min_phase_taps: Vec<Complex64>,
}

impl FirFactorization {
    /// Number of all-pass sections including pure delays.
    pub fn allpass_order(&self) -> usize {
        self.delay + self.zeros_outside.len()
    }
}

/// Classifies the zeros of `taps` and builds the literal minimum-phase taps
/// `h0·Π_in(1 − z_i z^{-1})·Π_out(−z_k)(1 − p_k* z^{-1})`.
pub fn factor_fir(taps: &[Complex64], unit_circle_tol: f64) -> Result<FirFactorization> {
    let delay = taps
        .iter()
        .position(|t| t.norm() > 0.0)
        .ok_or(Error::DegeneratePolynomial)?;
    let pr = poly_roots(&taps[delay..])?;
    let mut zeros_inside = Vec::new();
    let mut zeros_outside = Vec::new();
    for &z in &pr.roots {
        if z.norm() > 1.0 + unit_circle_tol {
            zeros_outside.push(z);
        } else {
            zeros_inside.push(z);
        }
    }
    let mut gain = pr.leading_coeff;
    let mut factors: Vec<Complex64> = zeros_inside.clone();
    for &z in &zeros_outside {
        gain *= -z;
        factors.push((Complex64::new(1.0, 0.0) / z).conj());
    }
    let min_taps = crate::numerics::PolyRoots {
        roots: factors,
        leading_coeff: gain,
    }
    .expand();
    Ok(FirFactorization {
        delay,
        zeros_inside,
        zeros_outside,
        min_phase_taps: min_taps,
    })
}

/// Blaschke product `e^{-jωd}·Π (e^{-jω} − p_k)/(1 − p_k* e^{-jω})` on the grid.
pub fn blaschke_response(poles: &[Complex64], delay: usize, n: usize) -> Cfr {
    (0..n)
        .map(|k| {
            let w = Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64);
            let mut a = w.powu(delay as u32);
            for &p in poles {
                a *= (w - p) / (Complex64::new(1.0, 0.0) - p.conj() * w);
            }
            a
        })
        .collect()
}

/// Root-route decomposition under the literal convention.
pub fn decompose_fir(taps: &[Complex64], n: usize) -> Result<DecomposedChannel> {
    decompose_fir_with(taps, n, Convention::Literal, UNIT_CIRCLE_TOL)
}

/// Root-route decomposition with an explicit convention and unit-circle
/// tolerance.
pub fn decompose_fir_with(
    taps: &[Complex64],
    n: usize,
    convention: Convention,
    unit_circle_tol: f64,
) -> Result<DecomposedChannel> {
    let f = factor_fir(taps, unit_circle_tol)?;
    decomposition_from_factors(&f, n, convention)
}

/// Builds sampled responses from a factorization.
pub fn decomposition_from_factors(
    f: &FirFactorization,
    n: usize,
    convention: Convention,
) -> Result<DecomposedChannel> {
    if f.min_phase_taps.len() + f.delay > n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: f.min_phase_taps.len() + f.delay,
        });
    }
    let mut min_phase = cfr_of(&f.min_phase_taps, n)?;
    let poles: Vec<Complex64> = f
        .zeros_outside
        .iter()
        .map(|z| Complex64::new(1.0, 0.0) / z)
        .collect();
    let mut all_pass = blaschke_response(&poles, f.delay, n);
    if convention == Convention::Canonical {
        let h0 = f.min_phase_taps[0];
        let c = h0 / h0.norm();
        for v in min_phase.iter_mut() {
            *v /= c;
        }
        for v in all_pass.iter_mut() {
            *v *= c;
        }
    }
    Ok(DecomposedChannel {
        min_phase,
        all_pass,
    })
}

/// Oversampling of the cepstral grid used by [`decompose_cfr`].
pub const CEPSTRAL_DENSE_FACTOR: usize = 64;

/// Cepstral-route decomposition of a sampled response. The cepstrum is taken
/// on a grid `CEPSTRAL_DENSE_FACTOR` times denser than the input.
pub fn decompose_cfr(cfr: &[Complex64]) -> Result<DecomposedChannel> {
    let n = cfr.len();
    let power: Vec<f64> = cfr.iter().map(|v| v.norm_sqr()).collect();
    let dense = min_phase_from_power(
        &power,
        n / 2 + 1,
        CEPSTRAL_DENSE_FACTOR * n,
        SPECTRAL_FLOOR * SPECTRAL_FLOOR,
    )?;
    let min_phase: Cfr = (0..n).map(|k| dense[k * CEPSTRAL_DENSE_FACTOR]).collect();
    let all_pass = cfr.iter().zip(&min_phase).map(|(h, m)| h / m).collect();
    Ok(DecomposedChannel {
        min_phase,
        all_pass,
    })
}

/// Largest all-pass order tried by the exact rational fit in [`allpass_sqrt`].
pub const ALLPASS_FIT_MAX_ORDER: usize = 16;

const MODULUS_TOL: f64 = 0.05;
const FIT_TOL: f64 = 1e-10;

/// Square root of a squared all-pass spectrum, unique up to one global sign.
///
/// An exact rational all-pass of order `q ≤ ALLPASS_FIT_MAX_ORDER` is fitted
/// first; when none matches (noisy input) the unwrapped phase is halved. The
/// global sign makes bin 0 the principal root.
pub fn allpass_sqrt(ap_squared: &[Complex64]) -> Result<Cfr> {
    allpass_sqrt_with(ap_squared, ALLPASS_FIT_MAX_ORDER)
}

/// [`allpass_sqrt`] with an explicit cap on the fitted all-pass order.
pub fn allpass_sqrt_with(ap_squared: &[Complex64], max_order: usize) -> Result<Cfr> {
    let n = ap_squared.len();
    if n == 0 {
        return Err(Error::Sizing("empty spectrum".into()));
    }
    let dev = ap_squared
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .fold(0.0_f64, f64::max);
    if !(dev <= MODULUS_TOL) {
        return Err(Error::NotAllPass(dev));
    }
    let a2: Vec<Complex64> = ap_squared.iter().map(|v| v / v.norm()).collect();
    let mut out = rational_sqrt(&a2, max_order).unwrap_or_else(|| unwrap_sqrt(&a2));
    let r0 = principal_sqrt(a2[0]);
    if (out[0] * r0.conj()).re < 0.0 {
        for v in out.iter_mut() {
            *v = -*v;
        }
    }
    Ok(out)
}

fn unwrap_sqrt(a2: &[Complex64]) -> Cfr {
    let phases: Vec<f64> = a2.iter().map(|v| principal_arg(*v)).collect();
    unwrap_phase(&phases)
        .into_iter()
        .map(|p| Complex64::from_polar(1.0, p / 2.0))
        .collect()
}

/// Fits `a2·(1 + Σ d_n e^{-jnω}) = Σ e_n e^{-jnω}` with degree `2q`, takes the
/// polynomial square root `S` of `D` and returns `σ·e^{-jqω}·conj(S)/S`.
fn rational_sqrt(a2: &[Complex64], max_order: usize) -> Option<Cfr> {
    let n = a2.len();
    let cap = max_order.min(n.saturating_sub(2) / 4);
    let w: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect();
    for q in 0..=cap {
        let m = 2 * q;
        let cols = 2 * m + 1;
        let mut a = DMatrix::<Complex64>::zeros(n, cols);
        let b = DVector::<Complex64>::from_iterator(n, a2.iter().map(|v| -*v));
        for k in 0..n {
            let mut p = Complex64::new(1.0, 0.0);
            for j in 0..=m {
                if j >= 1 {
                    a[(k, j - 1)] = a2[k] * p;
                }
                a[(k, m + j)] = -p;
                p *= w[k];
            }
        }
        let qr = a.clone().qr();
        let x = qr.r().solve_upper_triangular(&(qr.q().adjoint() * &b))?;
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let resid = (&a * &x - &b).norm() / (n as f64).sqrt();
        if resid > FIT_TOL {
            continue;
        }
        let mut d = vec![Complex64::new(1.0, 0.0)];
        d.extend(x.iter().take(m).copied());
        let s = poly_sqrt(&d)?;
        let cand: Vec<Complex64> = (0..n)
            .map(|k| {
                let sv = eval_poly(&s, w[k]);
                w[k].powu(q as u32) * sv.conj() / sv
            })
            .collect();
        let sigma2 = a2
            .iter()
            .zip(&cand)
            .map(|(t, c)| t / (c * c))
            .sum::<Complex64>()
            / n as f64;
        let sigma = principal_sqrt(sigma2 / sigma2.norm());
        let out: Vec<Complex64> = cand.iter().map(|c| c * sigma).collect();
        let err = out
            .iter()
            .zip(a2)
            .map(|(o, t)| (o * o - t).norm())
            .fold(0.0_f64, f64::max);
        if err < 1e-8 {
            return Some(out);
        }
    }
    None
}

fn eval_poly(c: &[Complex64], w: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * w + v)
}

/// Monic square root of a monic polynomial of even degree, if it exists.
fn poly_sqrt(d: &[Complex64]) -> Option<Vec<Complex64>> {
    let m = d.len() - 1;
    let q = m / 2;
    let mut s = vec![Complex64::new(0.0, 0.0); q + 1];
    s[0] = Complex64::new(1.0, 0.0);
    for i in 1..=q {
        let mut acc = d[i];
        for j in 1..i {
            acc -= s[j] * s[i - j];
        }
        s[i] = acc / 2.0;
    }
    let scale = d.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
    for i in q + 1..=m {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in i - q..=q {
            acc += s[j] * s[i - j];
        }
        if (acc - d[i]).norm() > 1e-7 * scale {
            return None;
        }
    }
    Some(s)
}
