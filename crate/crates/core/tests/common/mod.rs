use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use pls_core::ofdm::OfdmGrid;

/// Dense `N`-dimensional evaluation of `F R F^H P^H (P F R F^H P^H + σ² I)^{-1} Y_p`
/// with the full DFT matrix `F`, zero-padded tap covariance `R` and the pilot
/// selection matrix `P` carrying the pilot symbols.
pub fn mmse_dense_oracle(
    y: &[Complex64],
    grid: &OfdmGrid,
    powers: &[f64],
    noise_var: f64,
) -> Vec<Complex64> {
    let n = grid.n();
    let kp = grid.pilot_indices();
    let f = DMatrix::from_fn(n, n, |k, l| {
        Complex64::from_polar(1.0, -2.0 * PI * (k * l) as f64 / n as f64)
    });
    let mut rr = DMatrix::<Complex64>::zeros(n, n);
    for (l, &p) in powers.iter().enumerate() {
        rr[(l, l)] = Complex64::new(p, 0.0);
    }
    let mut p = DMatrix::<Complex64>::zeros(kp.len(), n);
    for (i, &k) in kp.iter().enumerate() {
        p[(i, k)] = grid.known_value(k);
    }
    let yp = DVector::from_iterator(kp.len(), kp.iter().map(|&k| y[k]));
    let frf = &f * &rr * f.adjoint();
    let mut inner = &p * &frf * p.adjoint();
    for i in 0..kp.len() {
        inner[(i, i)] += noise_var;
    }
    let sol = inner.lu().solve(&yp).expect("dense solve");
    (frf * p.adjoint() * sol).iter().copied().collect()
}
