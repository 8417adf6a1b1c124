use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pls_core::channel::{cfr_of, draw_channel, exp_pdp};
use pls_core::decomposition::{
    allpass_sqrt, blaschke_response, decompose_cfr, decompose_fir, decompose_fir_with,
    factor_fir, Convention, UNIT_CIRCLE_TOL,
};

const N: usize = 256;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn hand_factored_outside_zero() {
    let d = decompose_fir(&[c(0.5), c(1.0)], N).unwrap();
    let want_min = cfr_of(&[c(1.0), c(0.5)], N).unwrap();
    assert!(max_err(&d.min_phase, &want_min) < 1e-12);
    for k in 0..N {
        let e = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / N as f64);
        let want = (e + 0.5) / (e * 0.5 + 1.0);
        assert!((d.all_pass[k] - want).norm() < 1e-12);
    }
    let f = factor_fir(&[c(0.5), c(1.0)], UNIT_CIRCLE_TOL).unwrap();
    assert_eq!(f.zeros_outside.len(), 1);
    assert!((f.zeros_outside[0] - c(-2.0)).norm() < 1e-12);
}

#[test]
fn minimum_phase_fir_has_trivial_all_pass() {
    let d = decompose_fir(&[c(1.0), c(0.5)], N).unwrap();
    assert!(d.all_pass.iter().all(|a| (a - c(1.0)).norm() < 1e-12));
    let cep = decompose_cfr(&cfr_of(&[c(1.0), c(0.5)], N).unwrap()).unwrap();
    assert!(cep.all_pass.iter().all(|a| (a - c(1.0)).norm() < 1e-4));
}

#[test]
fn leading_zero_taps_become_delay() {
    let d = decompose_fir(&[c(0.0), c(0.0), c(1.0), c(0.5)], N).unwrap();
    assert!(max_err(&d.min_phase, &cfr_of(&[c(1.0), c(0.5)], N).unwrap()) < 1e-12);
    let delay = blaschke_response(&[], 2, N);
    assert!(max_err(&d.all_pass, &delay) < 1e-12);
}

#[test]
fn route_suite_on_random_channels() {
    let pdp = exp_pdp(11, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let h = draw_channel(&pdp, &mut rng);
        let hf = cfr_of(&h, N).unwrap();
        let root = decompose_fir(&h, N).unwrap();
        let cep = decompose_cfr(&hf).unwrap();
        for k in 0..N {
            let scale = hf[k].norm();
            assert!((root.min_phase[k] * root.all_pass[k] - hf[k]).norm() / scale < 1e-6);
            assert!((cep.min_phase[k] * cep.all_pass[k] - hf[k]).norm() / scale < 1e-4);
            assert!((root.all_pass[k].norm() - 1.0).abs() < 1e-6);
            assert!((root.min_phase[k].norm() - cep.min_phase[k].norm()).abs() < 1e-4);
        }
        let dot: Complex64 = root.all_pass.iter().zip(&cep.all_pass).map(|(r, c)| c.conj() * r).sum();
        let u = dot / dot.norm();
        let worst = (0..N).map(|k| (root.all_pass[k] - cep.all_pass[k] * u).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-3, "cross-route all-pass error {worst}");
    }
}

#[test]
fn cepstral_route_recovers_composed_all_pass() {
    let pdp = exp_pdp(11, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..50 {
        let h = cfr_of(&draw_channel(&pdp, &mut rng), N).unwrap();
        let own = decompose_cfr(&h).unwrap();
        let extra = decompose_fir(&draw_channel(&pdp, &mut rng), N).unwrap().all_pass;
        let composed: Vec<Complex64> = h.iter().zip(&extra).map(|(a, b)| a * b).collect();
        let got = decompose_cfr(&composed).unwrap();
        let want: Vec<Complex64> = extra.iter().zip(&own.all_pass).map(|(a, b)| a * b).collect();
        assert!(max_err(&got.all_pass, &want) < 1e-3);
    }
}

#[test]
fn ensemble_means_vanish() {
    let pdp = exp_pdp(11, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let trials = 10_000;
    let mut min_means = Vec::with_capacity(trials);
    let mut ap_means = Vec::with_capacity(trials);
    for _ in 0..trials {
        let h = draw_channel(&pdp, &mut rng);
        let lit = decompose_fir(&h, N).unwrap();
        let can = decompose_fir_with(&h, N, Convention::Canonical, UNIT_CIRCLE_TOL).unwrap();
        min_means.push(lit.min_phase.iter().sum::<Complex64>() / N as f64);
        ap_means.push(can.all_pass.iter().sum::<Complex64>() / N as f64);
    }
    for (name, v) in [("min_phase", &min_means), ("all_pass", &ap_means)] {
        let mean = v.iter().sum::<Complex64>() / trials as f64;
        let sd = (v.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (trials - 1) as f64).sqrt();
        assert!(mean.norm() < 3.0 * sd / (trials as f64).sqrt(), "{name}: |mean| {} sd {sd}", mean.norm());
    }
}

#[test]
fn allpass_square_root_recovers_up_to_sign() {
    let pdp = exp_pdp(11, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..300 {
        let ap = decompose_fir(&draw_channel(&pdp, &mut rng), N).unwrap().all_pass;
        let sq: Vec<Complex64> = ap.iter().map(|a| a * a).collect();
        let r = allpass_sqrt(&sq).unwrap();
        let neg: Vec<Complex64> = ap.iter().map(|a| -a).collect();
        assert!(max_err(&r, &ap).min(max_err(&r, &neg)) < 1e-9);
    }
}

#[test]
fn allpass_sqrt_of_constant() {
    let r = allpass_sqrt(&vec![c(-1.0); 64]).unwrap();
    assert!(r.iter().all(|v| (v - Complex64::new(0.0, 1.0)).norm() < 1e-12));
    assert!(allpass_sqrt(&vec![c(2.0); 64]).is_err());
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(decompose_fir(&[], N).is_err());
    assert!(decompose_fir(&[c(0.0), c(0.0)], N).is_err());
    assert!(decompose_fir(&vec![c(1.0); 300], N).is_err());
    assert!(decompose_cfr(&vec![c(1.0); 100]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conventions_share_the_product(seed in any::<u64>(), taps in 1usize..12) {
        let pdp = exp_pdp(taps, 1.0).unwrap();
        let h = draw_channel(&pdp, &mut ChaCha8Rng::seed_from_u64(seed));
        let lit = decompose_fir_with(&h, N, Convention::Literal, UNIT_CIRCLE_TOL).unwrap();
        let can = decompose_fir_with(&h, N, Convention::Canonical, UNIT_CIRCLE_TOL).unwrap();
        for k in 0..N {
            let a = lit.min_phase[k] * lit.all_pass[k];
            let b = can.min_phase[k] * can.all_pass[k];
            prop_assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
            prop_assert!((lit.min_phase[k].norm() - can.min_phase[k].norm()).abs() < 1e-12);
        }
        prop_assert!(can.min_phase[0].im.abs() < 1e-9 || can.min_phase.iter().any(|m| m.im != 0.0));
    }

    #[test]
    fn zero_classification(seed in any::<u64>(), taps in 2usize..12) {
        let pdp = exp_pdp(taps, 1.0).unwrap();
        let h = draw_channel(&pdp, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = factor_fir(&h, UNIT_CIRCLE_TOL).unwrap();
        prop_assert_eq!(f.zeros_inside.len() + f.zeros_outside.len() + f.delay, taps - 1);
        prop_assert!(f.zeros_inside.iter().all(|z| z.norm() < 1.0 + UNIT_CIRCLE_TOL));
        prop_assert!(f.zeros_outside.iter().all(|z| z.norm() >= 1.0 + UNIT_CIRCLE_TOL));
        prop_assert_eq!(f.allpass_order(), f.zeros_outside.len() + f.delay);
    }

    #[test]
    fn blaschke_is_unit_modulus(re in -0.95f64..0.95, im in -0.95f64..0.95, delay in 0usize..4) {
        let p = Complex64::new(re, im);
        prop_assume!(p.norm() < 0.99);
        let r = blaschke_response(&[p], delay, 128);
        prop_assert!(r.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }
}
