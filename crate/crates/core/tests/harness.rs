use proptest::prelude::*;

use pls_core::harness::{
    parse_csv, read_csv, run, run_correlation, run_papr, simulate_link, to_csv, trial_seed,
    write_csv, CsiMode, ExperimentConfig, Metric, MetricRecord, CSV_HEADER,
};
use pls_core::security::SchemeMode;

fn small(scheme: SchemeMode, workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        scheme,
        snr_grid_db: vec![0.0, 15.0, f64::INFINITY],
        rho_grid: vec![0.0, 0.95],
        trials: 24,
        master_seed: 5,
        workers,
        ..Default::default()
    }
}

#[test]
fn single_trial_runs_are_reproducible() {
    let cfg = ExperimentConfig {
        trials: 1,
        master_seed: 7,
        ..Default::default()
    };
    assert_eq!(to_csv(&run(&cfg).unwrap()), to_csv(&run(&cfg).unwrap()));
}

#[test]
fn worker_count_does_not_change_results() {
    for scheme in [SchemeMode::Baseline, SchemeMode::Data, SchemeMode::Pilot, SchemeMode::Joint] {
        let a = to_csv(&run(&small(scheme, 1)).unwrap());
        let b = to_csv(&run(&small(scheme, 3)).unwrap());
        assert_eq!(a, b, "{scheme}");
    }
    let papr = |w| to_csv(&run_papr(&ExperimentConfig { trials: 50, workers: w, ..Default::default() }).unwrap());
    assert_eq!(papr(1), papr(4));
    let corr = |w| {
        to_csv(
            &run_correlation(&ExperimentConfig {
                trials: 1000,
                rho_grid: vec![0.0, 0.5],
                workers: w,
                ..Default::default()
            })
            .unwrap(),
        )
    };
    assert_eq!(corr(1), corr(4));
}

#[test]
fn seeds_differ_across_points_and_trials() {
    let mut seen = std::collections::HashSet::new();
    for g in 0..20 {
        for t in 0..200 {
            assert!(seen.insert(trial_seed(1, g, t)));
        }
    }
    assert_ne!(trial_seed(1, 0, 0), trial_seed(2, 0, 0));
}

#[test]
fn record_layout() {
    let cfg = small(SchemeMode::Pilot, 0);
    let recs = run(&cfg).unwrap();
    assert_eq!(recs.len(), 6 * 4);
    for r in &recs {
        assert!(r.value.is_finite());
        assert_eq!(r.trials, 24);
        assert_eq!(r.seed, 5);
        if matches!(r.metric, Metric::BerBob | Metric::BerEve) {
            assert!((0.0..=0.5 + 0.1).contains(&r.value));
        }
    }
    let perfect = run(&ExperimentConfig { csi_mode: CsiMode::Perfect, ..cfg }).unwrap();
    assert!(perfect.iter().all(|r| r.metric != Metric::NmseBobDb));
    assert_eq!(perfect.len(), 6 * 3);
}

#[test]
fn trials_are_conserved() {
    let cfg = small(SchemeMode::Joint, 0);
    let stats = simulate_link(&cfg).unwrap();
    assert_eq!(stats.len(), 6);
    for p in &stats {
        assert_eq!(p.trials.len(), cfg.trials);
        assert_eq!(p.bits(), cfg.trials * 376);
        for t in &p.trials {
            assert!(t.bob_errors <= t.bits && t.eve_errors <= t.bits);
        }
    }
}

#[test]
fn papr_and_correlation_outputs() {
    let cfg = ExperimentConfig {
        trials: 30,
        rho_grid: vec![0.0, 0.9],
        ..Default::default()
    };
    let papr = run_papr(&cfg).unwrap();
    assert_eq!(papr.len(), 60);
    assert!(papr.iter().all(|r| r.metric == Metric::PaprDbSample && r.value > 0.0));
    assert_eq!(papr.iter().filter(|r| r.scheme == SchemeMode::Baseline).count(), 30);

    assert!(run_correlation(&cfg).is_err());
    let corr = run_correlation(&ExperimentConfig { trials: 1000, ..cfg }).unwrap();
    assert_eq!(corr.len(), 4);
    let model: Vec<f64> = corr
        .iter()
        .filter(|r| r.metric == Metric::CorrMinModel)
        .map(|r| r.value)
        .collect();
    assert_eq!(model[0], 0.0);
    assert!((model[1] - 0.626_789).abs() < 1e-6);
}

#[test]
fn invalid_configs_fail_before_work() {
    let bad = [
        ExperimentConfig { trials: 0, ..Default::default() },
        ExperimentConfig { snr_grid_db: vec![], ..Default::default() },
        ExperimentConfig { n: 200, ..Default::default() },
        ExperimentConfig { cp_len: 5, ..Default::default() },
        ExperimentConfig { rho_grid: vec![1.5], ..Default::default() },
        ExperimentConfig { pilot_rate: 0.3, ..Default::default() },
        ExperimentConfig { snr_grid_db: vec![f64::NAN], ..Default::default() },
        ExperimentConfig { anchors: vec![8], scheme: SchemeMode::Pilot, ..Default::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
        assert!(run(&cfg).is_err());
    }
}

#[test]
fn config_json() {
    let cfg = ExperimentConfig::from_json(
        r#"{"scheme": "pilot", "snr_grid_db": [0, 10, "inf"], "trials": 3, "estimator": "mmse"}"#,
    )
    .unwrap();
    assert_eq!(cfg.scheme, SchemeMode::Pilot);
    assert_eq!(cfg.snr_grid_db, vec![0.0, 10.0, f64::INFINITY]);
    assert_eq!(cfg.n, 256);
    assert!(ExperimentConfig::from_json(r#"{"trails": 3}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"scheme": "bogus"}"#).is_err());
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

fn record(i: usize) -> MetricRecord {
    MetricRecord {
        scheme: SchemeMode::Joint,
        snr_db: if i % 7 == 0 { f64::INFINITY } else { i as f64 * 0.5 },
        rho: (i % 10) as f64 / 10.0,
        metric: Metric::ALL[i % Metric::ALL.len()],
        value: (i as f64 + 0.1).ln() * 1e-3 - 0.123_456_789_012_345,
        trials: 1000,
        seed: 42,
    }
}

#[test]
fn csv_shapes() {
    assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    assert_eq!(CSV_HEADER, "scheme,snr_db,rho,metric,value,trials,seed");
    let recs: Vec<MetricRecord> = (0..1000).map(record).collect();
    assert_eq!(to_csv(&recs).lines().count(), 1001);
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let recs: Vec<MetricRecord> = (0..200).map(record).collect();
    write_csv(&recs, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), recs);
    assert!(write_csv(&recs, &dir.path().join("missing").join("x.csv")).is_err());
    assert!(parse_csv("a,b\n1,2\n").is_err());
    assert!(parse_csv(&format!("{CSV_HEADER}\ndata,0,0,ber_bob,x,1,1\n")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_values_round_trip_exactly(value in proptest::num::f64::NORMAL | proptest::num::f64::ZERO, snr in -50.0f64..80.0, rho in 0.0f64..=1.0) {
        let r = MetricRecord {
            scheme: SchemeMode::Data,
            snr_db: snr,
            rho,
            metric: Metric::NmseEveDb,
            value,
            trials: 9,
            seed: u64::MAX,
        };
        let back = parse_csv(&to_csv(std::slice::from_ref(&r))).unwrap();
        prop_assert_eq!(back, vec![r]);
    }
}
