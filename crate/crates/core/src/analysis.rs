//! Closed-form error probabilities, correlation attenuation, and metric
//! computation (NMSE, PAPR/CCDF, empirical min-phase correlation).

use num_complex::Complex64;

use crate::error::{check_range, Error, Result};

/// Inputs to the imperfect-CSI error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BepParams {
    /// Mean per-bit SNR (linear).
    pub gamma_bar: f64,
    /// Real part of the actual-vs-estimated channel correlation.
    pub rho1: f64,
    /// Imaginary part of the actual-vs-estimated channel correlation.
    pub rho2: f64,
}

impl BepParams {
    /// Checks `γ̄ > 0`, `ρ1, ρ2 ∈ [0, 1]` and `ρ1² + ρ2² ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma_bar)?;
        check_range("rho1", self.rho1, 0.0, 1.0, "[0, 1]")?;
        check_range("rho2", self.rho2, 0.0, 1.0, "[0, 1]")?;
        let r2 = self.rho1 * self.rho1 + self.rho2 * self.rho2;
        if r2 > 1.0 + 1e-12 {
            return Err(Error::OutOfRange {
                name: "rho1² + rho2²",
                value: r2,
                expected: "<= 1",
            });
        }
        Ok(())
    }
}

fn check_gamma(gamma_bar: f64) -> Result<()> {
    if gamma_bar > 0.0 && !gamma_bar.is_nan() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "gamma_bar",
            value: gamma_bar,
            expected: "> 0",
        })
    }
}

/// QPSK error probability with imperfect channel knowledge. `γ̄ = ∞` is
/// accepted and yields the error floor.
pub fn bep_imperfect(p: BepParams) -> Result<f64> {
    p.validate()?;
    let inv = 1.0 / (2.0 * p.gamma_bar);
    let s = p.rho1 + p.rho2;
    let d = p.rho1 - p.rho2;
    let t1 = 0.5 * (s / 2f64.sqrt()) / (1.0 + inv - d * d / 2.0).sqrt();
    let t2 = 0.5 * (d / 2f64.sqrt()) / (1.0 + inv - s * s / 2.0).sqrt();
    Ok((0.5 * (1.0 - t1 - t2)).clamp(0.0, 0.5))
}

/// Rayleigh-fading QPSK error probability `½[1 − 1/√(1 + 1/γ̄)]`.
pub fn bep_perfect(gamma_bar: f64) -> Result<f64> {
    check_gamma(gamma_bar)?;
    Ok(0.5 * (1.0 - 1.0 / (1.0 + 1.0 / gamma_bar).sqrt()))
}

/// Error probability with channel correlation `ρ`: `½[1 − ρ/√(1 + 1/γ̄)]`.
pub fn bep_correlated(gamma_bar: f64, rho: f64) -> Result<f64> {
    check_gamma(gamma_bar)?;
    check_range("rho", rho, 0.0, 1.0, "[0, 1]")?;
    Ok(0.5 * (1.0 - rho / (1.0 + 1.0 / gamma_bar).sqrt()))
}

/// Per-bit mean SNR for QPSK at a per-subcarrier symbol SNR in dB.
pub fn gamma_bar_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0) / 2.0
}

/// Correlation attenuation `Γ = 1 + √(1 − ρ²)`.
pub fn gamma_factor(rho: f64) -> Result<f64> {
    check_range("rho", rho, 0.0, 1.0, "[0, 1]")?;
    Ok(1.0 + (1.0 - rho * rho).sqrt())
}

/// Correlation between minimum-phase components, `ρ/(1 + √(1 − ρ²))`.
pub fn rho_min(rho: f64) -> Result<f64> {
    Ok(rho / gamma_factor(rho)?)
}

/// `Σ|est − truth|² / Σ|truth|²`.
pub fn nmse(est: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::SizeMismatch {
            expected: truth.len(),
            got: est.len(),
        });
    }
    let p: f64 = truth.iter().map(|v| v.norm_sqr()).sum();
    if p <= 0.0 {
        return Err(Error::ZeroPower("reference channel"));
    }
    let e: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(e / p)
}

/// `10·log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(signal: &[Complex64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::Sizing("empty signal".into()));
    }
    let powers = signal.iter().map(|v| v.norm_sqr());
    let peak = powers.clone().fold(0.0_f64, f64::max);
    let mean = powers.sum::<f64>() / signal.len() as f64;
    if mean <= 0.0 {
        return Err(Error::ZeroPower("signal"));
    }
    Ok(to_db(peak / mean))
}

/// Empirical complementary CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub thresholds: Vec<f64>,
    /// `P(X > threshold)`, nonincreasing when thresholds are sorted.
    pub probabilities: Vec<f64>,
}

/// Fraction of samples strictly above each threshold.
pub fn ccdf(samples: &[f64], thresholds: &[f64]) -> Result<CcdfCurve> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let probabilities = thresholds
        .iter()
        .map(|&t| (sorted.len() - sorted.partition_point(|&s| s <= t)) as f64 / n)
        .collect();
    Ok(CcdfCurve {
        thresholds: thresholds.to_vec(),
        probabilities,
    })
}

/// Smallest sample `t` with `P(X > t) ≤ p`.
pub fn ccdf_level(samples: &[f64], p: f64) -> Result<f64> {
    check_range("exceedance", p, 0.0, 1.0, "[0, 1]")?;
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let allowed = (p * n as f64).floor() as usize;
    Ok(sorted[n - 1 - allowed.min(n - 1)])
}

/// Minimum number of channel pairs for [`empirical_min_phase_correlation`].
pub const MIN_CORRELATION_PAIRS: usize = 1000;

/// Magnitude of the sample correlation between paired min-phase responses.
///
/// Each response is normalized to unit power before pooling the per-subcarrier
/// products over subcarriers and pairs, so every realization carries equal
/// weight.
pub fn empirical_min_phase_correlation(pairs: &[(Vec<Complex64>, Vec<Complex64>)]) -> Result<f64> {
    if pairs.len() < MIN_CORRELATION_PAIRS {
        return Err(Error::TooFewSamples {
            needed: MIN_CORRELATION_PAIRS,
            got: pairs.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, e) in pairs {
        if a.len() != e.len() {
            return Err(Error::SizeMismatch {
                expected: a.len(),
                got: e.len(),
            });
        }
        let pa: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let pe: f64 = e.iter().map(|v| v.norm_sqr()).sum();
        if pa <= 0.0 || pe <= 0.0 {
            return Err(Error::ZeroPower("min-phase response"));
        }
        let c: Complex64 = a.iter().zip(e).map(|(x, y)| x.conj() * y).sum();
        acc += c / (pa * pe).sqrt();
    }
    Ok(acc.norm() / pairs.len() as f64)
}

/// Unnormalized pooled correlation `|Σ a*e| / √(Σ|a|² Σ|e|²)` per subcarrier,
/// for diagnostics.
pub fn per_subcarrier_correlation(pairs: &[(Vec<Complex64>, Vec<Complex64>)]) -> Result<Vec<f64>> {
    let n = pairs.first().map(|p| p.0.len()).ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let mut num = vec![Complex64::new(0.0, 0.0); n];
    let mut pa = vec![0.0; n];
    let mut pe = vec![0.0; n];
    for (a, e) in pairs {
        if a.len() != n || e.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: a.len().min(e.len()),
            });
        }
        for k in 0..n {
            num[k] += a[k].conj() * e[k];
            pa[k] += a[k].norm_sqr();
            pe[k] += e[k].norm_sqr();
        }
    }
    Ok((0..n).map(|k| num[k].norm() / (pa[k] * pe[k]).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bep_perfect_values() {
        assert!((bep_perfect(1.0).unwrap() - 0.5 * (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-15);
        assert!((bep_perfect(1.0).unwrap() - 0.146447).abs() < 1e-6);
        assert!((bep_perfect(10.0).unwrap() - 0.023269).abs() < 1e-6);
        assert!(bep_perfect(1e12).unwrap() < 1e-12);
        assert!(bep_perfect(0.0).is_err());
        assert!(bep_perfect(-1.0).is_err());
    }

    #[test]
    fn bep_imperfect_limits() {
        for g in [0.1, 1.0, 10.0, 1e3] {
            let p = BepParams { gamma_bar: g, rho1: 1.0, rho2: 0.0 };
            assert!((bep_imperfect(p).unwrap() - bep_perfect(g).unwrap()).abs() < 1e-12);
            let z = BepParams { gamma_bar: g, rho1: 0.0, rho2: 0.0 };
            assert_eq!(bep_imperfect(z).unwrap(), 0.5);
        }
        assert!(bep_imperfect(BepParams { gamma_bar: 1.0, rho1: 0.9, rho2: 0.9 }).is_err());
    }

    #[test]
    fn correlated_values() {
        assert!((bep_correlated(7.0, 1.0).unwrap() - bep_perfect(7.0).unwrap()).abs() < 1e-15);
        assert_eq!(bep_correlated(7.0, 0.0).unwrap(), 0.5);
        let floor = bep_correlated(f64::INFINITY, rho_min(0.999).unwrap()).unwrap();
        assert!((floor - 0.02183).abs() < 1e-4);
        assert!(bep_correlated(1.0, 1.1).is_err());
    }

    #[test]
    fn gamma_and_rho_min() {
        assert_eq!(gamma_factor(1.0).unwrap(), 1.0);
        assert_eq!(gamma_factor(0.0).unwrap(), 2.0);
        assert!((gamma_factor(0.8).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(rho_min(1.0).unwrap(), 1.0);
        assert_eq!(rho_min(0.0).unwrap(), 0.0);
        assert!((rho_min(0.999).unwrap() - 0.956_246_068).abs() < 1e-8);
        assert!((rho_min(0.9).unwrap() - 0.626_789_006).abs() < 1e-8);
        assert!(gamma_factor(-0.1).is_err());
    }

    #[test]
    fn nmse_examples() {
        let t = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1)];
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        assert_eq!(nmse(&[Complex64::new(0.0, 0.0); 2], &t).unwrap(), 1.0);
        let twice: Vec<Complex64> = t.iter().map(|v| v * 2.0).collect();
        assert!((nmse(&twice, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&t, &[Complex64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn papr_examples() {
        let c: Vec<Complex64> = (0..64).map(|i| Complex64::from_polar(1.0, i as f64)).collect();
        assert!(papr_db(&c).unwrap().abs() < 1e-12);
        let mut d = vec![Complex64::new(0.0, 0.0); 256];
        d[17] = Complex64::new(0.0, 3.0);
        assert!((papr_db(&d).unwrap() - 10.0 * 256f64.log10()).abs() < 1e-12);
        assert!(papr_db(&[Complex64::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn ccdf_is_monotone() {
        let s: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let c = ccdf(&s, &[-1.0, 10.0, 50.0, 99.0]).unwrap();
        assert_eq!(c.probabilities, vec![1.0, 0.89, 0.49, 0.0]);
        assert_eq!(ccdf_level(&s, 0.1).unwrap(), 89.0);
    }

    #[test]
    fn correlation_needs_samples() {
        let pairs = vec![(vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]); 10];
        assert!(matches!(
            empirical_min_phase_correlation(&pairs),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
