//! Complex-vector numerics: FFT, polynomial roots, cepstral minimum phase and
//! phase unwrapping.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Relative floor applied to magnitude spectra before taking logarithms.
pub const SPECTRAL_FLOOR: f64 = 1e-8;

/// In-place DFT. The forward transform is unscaled; the inverse carries `1/N`.
pub fn fft_in_place(x: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = x.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Sizing(format!(
            "FFT length {n} is not a power of two"
        )));
    }
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let plan = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        plan.process(x);
    });
    if inverse {
        let scale = 1.0 / n as f64;
        for v in x.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

/// DFT of `x` (`inverse = false`) or inverse DFT with `1/N` scaling.
pub fn fft(x: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    let mut out = x.to_vec();
    fft_in_place(&mut out, inverse)?;
    Ok(out)
}

/// Roots of a polynomial in `z^{-1}` form together with its leading gain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyRoots {
    /// z-plane roots of `Σ coeffs[l]·z^{-l}`.
    pub roots: Vec<Complex64>,
    /// Coefficient of `z^0`, so that the polynomial is
    /// `leading_coeff·Π(1 − r_k z^{-1})`.
    pub leading_coeff: Complex64,
}

impl PolyRoots {
    /// Expands `leading_coeff·Π(1 − r_k z^{-1})` back into coefficients.
    pub fn expand(&self) -> Vec<Complex64> {
        let mut c = vec![self.leading_coeff];
        for &r in &self.roots {
            c.push(Complex64::new(0.0, 0.0));
            for i in (1..c.len()).rev() {
                let prev = c[i - 1];
                c[i] -= r * prev;
            }
        }
        c
    }
}

/// Roots of `Σ coeffs[l]·z^{-l}` via eigenvalues of the companion matrix,
/// refined by Newton steps on the original polynomial.
///
/// Trailing zero coefficients are trimmed. Clustered roots are ill-conditioned
/// and lose accuracy roughly as `ε^{1/m}` for multiplicity `m`.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<PolyRoots> {
    let last = coeffs
        .iter()
        .rposition(|c| c.norm() > 0.0)
        .ok_or(Error::DegeneratePolynomial)?;
    let c = &coeffs[..=last];
    let lead = c[0];
    if lead.norm() == 0.0 {
        return Err(Error::OutOfRange {
            name: "leading coefficient",
            value: 0.0,
            expected: "nonzero z^0 coefficient",
        });
    }
    let m = c.len() - 1;
    if m == 0 {
        return Ok(PolyRoots {
            roots: Vec::new(),
            leading_coeff: lead,
        });
    }
    let a: Vec<Complex64> = c.iter().map(|v| v / lead).collect();
    let mut roots = if m == 1 {
        vec![-a[1]]
    } else {
        let mut comp = DMatrix::<Complex64>::zeros(m, m);
        for j in 0..m {
            comp[(0, j)] = -a[j + 1];
        }
        for i in 1..m {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 10_000)
            .ok_or_else(|| Error::Singular("companion QR iteration did not converge".into()))?;
        schur
            .eigenvalues()
            .ok_or_else(|| Error::Singular("companion eigenvalues unavailable".into()))?
            .iter()
            .copied()
            .collect()
    };
    for r in roots.iter_mut() {
        *r = newton_polish(&a, *r);
    }
    Ok(PolyRoots {
        roots,
        leading_coeff: lead,
    })
}

/// Evaluates the monic polynomial `z^m + a1 z^{m-1} + …` and its derivative.
fn horner(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = a[0];
    let mut dp = Complex64::new(0.0, 0.0);
    for &coef in &a[1..] {
        dp = dp * z + p;
        p = p * z + coef;
    }
    (p, dp)
}

fn newton_polish(a: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = horner(a, z);
    for _ in 0..8 {
        let (_, dp) = horner(a, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = horner(a, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
    }
    z
}

/// Real cepstrum `ifft(log|X|)` of a magnitude spectrum, after flooring.
pub fn real_cepstrum(mag: &[f64]) -> Result<Vec<Complex64>> {
    let floored = floor_magnitude(mag)?;
    let logm: Vec<Complex64> = floored.iter().map(|&m| Complex64::new(m.ln(), 0.0)).collect();
    fft(&logm, true)
}

fn floor_magnitude(mag: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = mag.iter().position(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::NonPositiveMagnitude(i));
    }
    let max = mag.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max <= 0.0 {
        return Err(Error::NonPositiveMagnitude(0));
    }
    let floor = SPECTRAL_FLOOR * max;
    Ok(mag.iter().map(|&m| m.max(floor)).collect())
}

/// Minimum-phase response with the given magnitude, by folding the real
/// cepstrum onto nonnegative quefrencies.
///
/// Samples below `SPECTRAL_FLOOR·max` are clamped to that floor. The length
/// must be a power of two.
pub fn min_phase_from_magnitude(mag: &[f64]) -> Result<Vec<Complex64>> {
    let n = mag.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Sizing(format!(
            "magnitude length {n} is not a power of two ≥ 2"
        )));
    }
    let c = real_cepstrum(mag)?;
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    f[0] = c[0];
    for i in 1..n / 2 {
        f[i] = c[i] * 2.0;
    }
    f[n / 2] = c[n / 2];
    fft_in_place(&mut f, false)?;
    Ok(f.into_iter().map(|v| v.exp()).collect())
}

/// Minimum-phase response on a `dense_len`-point grid from `n` uniform samples
/// of a power spectrum `|H|²`.
///
/// The samples are interpolated by zero-padding their autocorrelation, keeping
/// lags `|l| < lags`; `lags > n/2` keeps every lag and splits the Nyquist lag
/// evenly. The dense grid suppresses cepstral aliasing from zeros near the
/// unit circle. Dense power values below `power_floor·max` are clamped. Sample
/// `k` of the input grid sits at `k·dense_len/n`.
pub fn min_phase_from_power(
    power: &[f64],
    lags: usize,
    dense_len: usize,
    power_floor: f64,
) -> Result<Vec<Complex64>> {
    let n = power.len();
    if n < 2 || !n.is_power_of_two() || dense_len < n || !dense_len.is_power_of_two() {
        return Err(Error::Sizing(format!(
            "power length {n} and dense length {dense_len} must be powers of two with dense ≥ power"
        )));
    }
    if lags == 0 {
        return Err(Error::Config("at least one autocorrelation lag is required".into()));
    }
    if let Some(i) = power.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonPositiveMagnitude(i));
    }
    let mut r: Vec<Complex64> = power.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    fft_in_place(&mut r, true)?;
    let half = n / 2;
    let mut dense = vec![Complex64::new(0.0, 0.0); dense_len];
    dense[0] = r[0];
    for lag in 1..lags.min(half) {
        dense[lag] = r[lag];
        dense[dense_len - lag] = r[n - lag];
    }
    if lags > half {
        dense[half] += r[half] * 0.5;
        dense[dense_len - half] += r[half] * 0.5;
    }
    fft_in_place(&mut dense, false)?;
    let smax = dense.iter().map(|v| v.re).fold(0.0_f64, f64::max);
    if smax <= 0.0 {
        return Err(Error::ZeroPower("power spectrum"));
    }
    let floor = power_floor * smax;
    let mag: Vec<f64> = dense.iter().map(|v| v.re.max(floor).sqrt()).collect();
    min_phase_from_magnitude(&mag)
}

/// Removes `2π` jumps so that adjacent differences lie in `(−π, π]`.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = out[i - 1];
            let mut d = p + offset - prev;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d <= -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Principal argument in `(−π, π]`, mapping a signed-zero `−π` to `π`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Principal square root with the branch cut taken just below the negative
/// real axis, so `sqrt(−1) = j` regardless of the sign of zero.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    Complex64::from_polar(z.norm().sqrt(), principal_arg(z) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fft_delta_and_constant() {
        let x = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(fft(&x, false).unwrap().iter().all(|v| (*v - c(1.0, 0.0)).norm() < 1e-15));
        let y = fft(&[c(1.0, 0.0); 4], false).unwrap();
        assert!((y[0] - c(4.0, 0.0)).norm() < 1e-15);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn fft_rejects_non_power_of_two() {
        assert!(matches!(fft(&[c(1.0, 0.0); 6], false), Err(Error::Sizing(_))));
        assert!(matches!(fft(&[], true), Err(Error::Sizing(_))));
    }

    #[test]
    fn roots_of_small_polynomials() {
        let r = poly_roots(&[c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0] - c(-0.5, 0.0)).norm() < 1e-14);

        let r = poly_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(-0.25, 0.0)]).unwrap();
        let mut re: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 0.5).abs() < 1e-12 && (re[1] - 0.5).abs() < 1e-12);
        assert!(r.roots.iter().all(|z| z.im.abs() < 1e-12));

        let r = poly_roots(&[c(2.0, 0.0)]).unwrap();
        assert!(r.roots.is_empty());
        assert_eq!(r.leading_coeff, c(2.0, 0.0));
    }

    #[test]
    fn roots_reject_degenerate() {
        assert!(matches!(
            poly_roots(&[c(0.0, 0.0); 3]),
            Err(Error::DegeneratePolynomial)
        ));
        assert!(poly_roots(&[c(0.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let r = poly_roots(&[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(r.roots.len(), 1);
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_phase(&[0.0, 0.1, 0.2]), vec![0.0, 0.1, 0.2]);
        let u = unwrap_phase(&[3.0, -3.0]);
        assert!((u[1] - (-3.0 + 2.0 * PI)).abs() < 1e-15);
        assert!((u[1] - 3.2832).abs() < 1e-4);
        assert_eq!(unwrap_phase(&[1.5; 5]), vec![1.5; 5]);
    }

    #[test]
    fn flat_magnitude_is_own_min_phase() {
        let m = min_phase_from_magnitude(&[1.0; 64]).unwrap();
        assert!(m.iter().all(|v| (*v - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn min_phase_rejects_bad_input() {
        assert!(min_phase_from_magnitude(&[0.0; 8]).is_err());
        assert!(min_phase_from_magnitude(&[1.0, -1.0, 1.0, 1.0]).is_err());
        assert!(min_phase_from_magnitude(&[1.0; 6]).is_err());
    }

    #[test]
    fn principal_sqrt_of_minus_one() {
        assert!((principal_sqrt(c(-1.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((principal_sqrt(c(-1.0, -0.0)) - c(0.0, 1.0)).norm() < 1e-15);
    }
}
