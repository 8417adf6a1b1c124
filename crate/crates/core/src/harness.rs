//! Deterministic Monte-Carlo experiment runner and CSV output.
//!
//! Every trial owns a ChaCha8 stream seeded from
//! `(master_seed, grid_index, trial_index)`, and per-trial results are reduced
//! in trial order, so output is bit-identical for any worker count.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analysis::{empirical_min_phase_correlation, papr_db, rho_min, to_db};
use crate::channel::{cfr_of, decay_for_span, draw_channel, draw_correlated, exp_pdp, PowerDelayProfile};
use crate::decomposition::{decompose_fir_with, Convention};
use crate::error::{Error, Result};
use crate::ofdm::{apply_channel, awgn_with_reference, demodulate, mean_power, qpsk_map, Estimator, Interpolation, OfdmGrid};
use crate::security::{alice_precode, bob_receive, eve_receive, EveEqualizer, EveModel, ReceiverConfig, SchemeMode};

/// Channel knowledge available to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    /// Genie knowledge of the true Alice-Bob taps.
    Perfect,
    /// Pilot-based estimation.
    #[default]
    Estimated,
}

/// Data constellation. Only QPSK is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
}

/// Experiment parameters. Missing keys in a config file take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// FFT size `N`.
    pub n: usize,
    pub cp_len: usize,
    /// Fraction of subcarriers carrying comb pilots.
    pub pilot_rate: f64,
    pub constellation: Constellation,
    /// Channel taps `L`.
    pub taps: usize,
    /// Exponential profile e-folding length in taps.
    pub pdp_decay: f64,
    /// When set, overrides `pdp_decay` so the last tap sits this many dB below
    /// the first.
    pub pdp_span_db: Option<f64>,
    /// SNR points in dB; `"inf"` denotes a noise-free point.
    #[serde(serialize_with = "ser_snr", deserialize_with = "de_snr")]
    pub snr_grid_db: Vec<f64>,
    /// Alice-Eve correlation values.
    pub rho_grid: Vec<f64>,
    /// OFDM symbols (channel realizations) per grid point.
    pub trials: usize,
    pub master_seed: u64,
    pub scheme: SchemeMode,
    pub eve_knows_channel: bool,
    pub eve_equalizer: EveEqualizer,
    pub estimator: Estimator,
    pub interpolation: Interpolation,
    pub csi_mode: CsiMode,
    pub convention: Convention,
    /// Unprecoded anchor bins used by the pilot and joint schemes.
    pub anchors: Vec<usize>,
    /// Seed of the known pilot symbols.
    pub pilot_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub unit_circle_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            cp_len: 64,
            pilot_rate: 0.25,
            constellation: Constellation::Qpsk,
            taps: 11,
            pdp_decay: 1.0,
            pdp_span_db: None,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            rho_grid: vec![0.0],
            trials: 1000,
            master_seed: 1,
            scheme: SchemeMode::Data,
            eve_knows_channel: true,
            eve_equalizer: EveEqualizer::Auto,
            estimator: Estimator::Ls,
            interpolation: Interpolation::Dft,
            csi_mode: CsiMode::Estimated,
            convention: Convention::Literal,
            anchors: vec![2, 66, 130, 194],
            pilot_seed: 0,
            workers: 0,
            unit_circle_tol: crate::decomposition::UNIT_CIRCLE_TOL,
        }
    }
}

fn ser_snr<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Out {
        Num(f64),
        Text(&'static str),
    }
    let out: Vec<Out> = v
        .iter()
        .map(|&x| if x == f64::INFINITY { Out::Text("inf") } else { Out::Num(x) })
        .collect();
    out.serialize(s)
}

fn de_snr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum In {
        Num(f64),
        Text(String),
    }
    Vec::<In>::deserialize(d)?
        .into_iter()
        .map(|v| match v {
            In::Num(x) => Ok(x),
            In::Text(t) => parse_snr(&t).map_err(serde::de::Error::custom),
        })
        .collect()
}

/// Parses an SNR value in dB, accepting `inf`/`+inf`.
pub fn parse_snr(text: &str) -> Result<f64> {
    let t = text.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => t
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| Error::Parse(format!("invalid SNR '{text}'"))),
    }
}

impl ExperimentConfig {
    /// Reads a JSON config; absent keys keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Reads a JSON config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Comb spacing implied by `pilot_rate`.
    pub fn pilot_spacing(&self) -> Result<usize> {
        if !(self.pilot_rate > 0.0 && self.pilot_rate <= 1.0) {
            return Err(Error::Config(format!("pilot_rate {} not in (0, 1]", self.pilot_rate)));
        }
        let s = (1.0 / self.pilot_rate).round() as usize;
        if (s as f64 * self.pilot_rate - 1.0).abs() > 1e-9 || self.n % s != 0 {
            return Err(Error::Config(format!(
                "pilot_rate {} must be 1/s with s dividing N = {}",
                self.pilot_rate, self.n
            )));
        }
        Ok(s)
    }

    /// Checks every invariant before any work is done.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_grid_db.is_empty() || self.rho_grid.is_empty() {
            return bad("SNR and rho grids must be nonempty".into());
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return bad(format!("N = {} must be a power of two ≥ 4", self.n));
        }
        if self.taps == 0 || self.cp_len + 1 < self.taps {
            return bad(format!("need L ≥ 1 and cp_len ≥ L−1 (L = {}, cp_len = {})", self.taps, self.cp_len));
        }
        if self.cp_len > self.n {
            return bad("cp_len exceeds N".into());
        }
        let spacing = self.pilot_spacing()?;
        if self.taps > self.n / spacing {
            return bad(format!("L = {} exceeds the pilot count {}", self.taps, self.n / spacing));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("SNR values must be numbers or +inf".into());
        }
        if let Some(r) = self.rho_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("rho {r} outside [0, 1]"));
        }
        if !(self.pdp_decay.is_finite() && self.pdp_decay > 0.0) {
            return bad("pdp_decay must be positive".into());
        }
        if let Some(s) = self.pdp_span_db {
            if !(s.is_finite() && s > 0.0) || self.taps < 2 {
                return bad("pdp_span_db must be positive and needs L ≥ 2".into());
            }
        }
        if !(self.unit_circle_tol.is_finite() && self.unit_circle_tol >= 0.0) {
            return bad("unit_circle_tol must be nonnegative".into());
        }
        if self.scheme.precodes_pilots() && 2 * self.taps - 1 > self.n / spacing {
            return bad("pilot-secured schemes need 2L−1 ≤ pilot count".into());
        }
        self.grid_for(self.scheme)?;
        Ok(())
    }

    /// Power-delay profile implied by the config.
    pub fn pdp(&self) -> Result<PowerDelayProfile> {
        let decay = match self.pdp_span_db {
            Some(s) => decay_for_span(self.taps, s)?,
            None => self.pdp_decay,
        };
        exp_pdp(self.taps, decay)
    }

    /// Grid used for a scheme: anchors only when pilots are precoded.
    pub fn grid_for(&self, scheme: SchemeMode) -> Result<OfdmGrid> {
        let anchors: &[usize] = if scheme.precodes_pilots() { &self.anchors } else { &[] };
        OfdmGrid::comb(self.n, self.cp_len, self.pilot_spacing()?, anchors, self.pilot_seed)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

/// Metric carried by a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    BerBob,
    BerEve,
    NmseBobDb,
    NmseEveDb,
    PaprDbSample,
    CorrMinEmpirical,
    /// Model value `ρ/(1+√(1−ρ²))` emitted next to the empirical correlation.
    CorrMinModel,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Self::BerBob,
        Self::BerEve,
        Self::NmseBobDb,
        Self::NmseEveDb,
        Self::PaprDbSample,
        Self::CorrMinEmpirical,
        Self::CorrMinModel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BerBob => "ber_bob",
            Self::BerEve => "ber_eve",
            Self::NmseBobDb => "nmse_bob_db",
            Self::NmseEveDb => "nmse_eve_db",
            Self::PaprDbSample => "papr_db_sample",
            Self::CorrMinEmpirical => "corr_min_empirical",
            Self::CorrMinModel => "corr_min_model",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown metric '{s}'")))
    }
}

/// One result row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scheme: SchemeMode,
    /// `+∞` for noise-free quantities.
    pub snr_db: f64,
    pub rho: f64,
    pub metric: Metric,
    pub value: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial stream seed from a SplitMix64 mix of the three counters.
pub fn trial_seed(master_seed: u64, grid_index: u64, trial_index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master_seed) ^ grid_index) ^ trial_index.rotate_left(32))
}

/// Random number stream for one trial.
pub fn trial_rng(master_seed: u64, grid_index: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, grid_index, trial_index))
}

/// Outcome of one simulated OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub bits: usize,
    pub bob_errors: usize,
    pub eve_errors: usize,
    pub bob_nmse: f64,
    pub eve_nmse: f64,
}

/// Per-trial outcomes at one grid point, in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub snr_db: f64,
    pub rho: f64,
    pub trials: Vec<TrialOutcome>,
}

impl PointStats {
    /// Total data bits.
    pub fn bits(&self) -> usize {
        self.trials.iter().map(|t| t.bits).sum()
    }

    /// Pooled Bob BER.
    pub fn ber_bob(&self) -> f64 {
        self.trials.iter().map(|t| t.bob_errors).sum::<usize>() as f64 / self.bits() as f64
    }

    /// Pooled Eve BER.
    pub fn ber_eve(&self) -> f64 {
        self.trials.iter().map(|t| t.eve_errors).sum::<usize>() as f64 / self.bits() as f64
    }

    /// Standard error of a pooled BER treating each trial as one cluster.
    pub fn cluster_std_error(&self, eve: bool) -> f64 {
        let n = self.trials.len() as f64;
        let rates: Vec<f64> = self
            .trials
            .iter()
            .map(|t| (if eve { t.eve_errors } else { t.bob_errors }) as f64 / t.bits as f64)
            .collect();
        let mean = rates.iter().sum::<f64>() / n;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    /// Mean linear NMSE of Bob's estimate.
    pub fn nmse_bob(&self) -> f64 {
        self.trials.iter().map(|t| t.bob_nmse).sum::<f64>() / self.trials.len() as f64
    }

    /// Mean linear NMSE of Eve's estimate.
    pub fn nmse_eve(&self) -> f64 {
        self.trials.iter().map(|t| t.eve_nmse).sum::<f64>() / self.trials.len() as f64
    }
}

/// Shared per-run state.
struct LinkContext {
    cfg: ExperimentConfig,
    pdp: PowerDelayProfile,
    grid: OfdmGrid,
}

impl LinkContext {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            pdp: cfg.pdp()?,
            grid: cfg.grid_for(cfg.scheme)?,
            cfg: cfg.clone(),
        })
    }

    fn receiver(&self, snr_db: f64) -> ReceiverConfig {
        let noise_var = if snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-snr_db / 10.0)
        };
        ReceiverConfig {
            estimator: self.cfg.estimator,
            interpolation: self.cfg.interpolation,
            taps: self.cfg.taps,
            tap_powers: self.pdp.tap_powers().to_vec(),
            noise_var,
            convention: self.cfg.convention,
            unit_circle_tol: self.cfg.unit_circle_tol,
        }
    }

    fn trial(&self, snr_db: f64, rho: f64, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
        let cfg = &self.cfg;
        let n = cfg.n;
        let scheme = cfg.scheme;
        let h_ab = draw_channel(&self.pdp, rng);
        let h_ae = draw_correlated(&h_ab, &self.pdp, rho, rng)?;
        let decomp = if scheme == SchemeMode::Baseline {
            None
        } else {
            Some(decompose_fir_with(&h_ab, n, cfg.convention, cfg.unit_circle_tol)?)
        };
        let bits: Vec<u8> = (0..self.grid.bits_per_symbol())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        let sym = alice_precode(&self.grid, &qpsk_map(&bits)?, scheme, decomp.as_ref())?;
        let ref_power = mean_power(&sym.time[cfg.cp_len..]);
        let rx_b = awgn_with_reference(&apply_channel(&sym.time, &h_ab), ref_power, snr_db, rng);
        let rx_e = awgn_with_reference(&apply_channel(&sym.time, &h_ae), ref_power, snr_db, rng);
        let yb = demodulate(&rx_b, &self.grid)?;
        let ye = demodulate(&rx_e, &self.grid)?;
        let rcfg = self.receiver(snr_db);
        let truth = cfr_of(&h_ab, n)?;
        let perfect = (cfg.csi_mode == CsiMode::Perfect).then_some(h_ab.as_slice());
        let bob = bob_receive(&yb, &self.grid, scheme, &rcfg, perfect, &bits, &truth)?;
        let eve_model = EveModel {
            knows_channel: cfg.eve_knows_channel,
            equalizer: cfg.eve_equalizer,
            rho,
        };
        let eve = eve_receive(&ye, &self.grid, scheme, &rcfg, &eve_model, &h_ae, &bits)?;
        Ok(TrialOutcome {
            bits: bits.len(),
            bob_errors: bob.bit_errors,
            eve_errors: eve.bit_errors,
            bob_nmse: bob.channel_nmse,
            eve_nmse: eve.channel_nmse,
        })
    }
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<(u64, f64, f64)> {
    let mut pts = Vec::new();
    for (ri, &rho) in cfg.rho_grid.iter().enumerate() {
        for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
            pts.push(((ri * cfg.snr_grid_db.len() + si) as u64, snr, rho));
        }
    }
    pts
}

/// Simulates every (ρ, SNR) grid point of a link experiment.
pub fn simulate_link(cfg: &ExperimentConfig) -> Result<Vec<PointStats>> {
    let ctx = LinkContext::new(cfg)?;
    let pool = cfg.pool()?;
    pool.install(|| {
        grid_points(cfg)
            .into_iter()
            .map(|(gi, snr, rho)| {
                let trials = (0..cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| ctx.trial(snr, rho, &mut trial_rng(cfg.master_seed, gi, t)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(PointStats {
                    snr_db: snr,
                    rho,
                    trials,
                })
            })
            .collect()
    })
}

/// Runs the link experiment and returns BER and NMSE records per grid point.
/// `nmse_bob_db` is omitted under perfect CSI.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let stats = simulate_link(cfg)?;
    let mut out = Vec::new();
    for p in &stats {
        let rec = |metric, value| MetricRecord {
            scheme: cfg.scheme,
            snr_db: p.snr_db,
            rho: p.rho,
            metric,
            value,
            trials: cfg.trials,
            seed: cfg.master_seed,
        };
        out.push(rec(Metric::BerBob, p.ber_bob()));
        out.push(rec(Metric::BerEve, p.ber_eve()));
        let nb = p.nmse_bob();
        if cfg.csi_mode == CsiMode::Estimated && nb > 0.0 {
            out.push(rec(Metric::NmseBobDb, to_db(nb)));
        }
        let ne = p.nmse_eve();
        if ne > 0.0 {
            out.push(rec(Metric::NmseEveDb, to_db(ne)));
        }
    }
    Ok(out)
}

/// Per-symbol PAPR samples in dB for one scheme, `trials` symbols.
pub fn papr_samples(cfg: &ExperimentConfig, scheme: SchemeMode, grid_index: u64) -> Result<Vec<f64>> {
    let mut c = cfg.clone();
    c.scheme = scheme;
    c.validate()?;
    let pdp = c.pdp()?;
    let grid = c.grid_for(scheme)?;
    let pool = c.pool()?;
    pool.install(|| {
        (0..c.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(c.master_seed, grid_index, t);
                let h = draw_channel(&pdp, &mut rng);
                let decomp = if scheme == SchemeMode::Baseline {
                    None
                } else {
                    Some(decompose_fir_with(&h, c.n, c.convention, c.unit_circle_tol)?)
                };
                let bits: Vec<u8> = (0..grid.bits_per_symbol()).map(|_| rng.random::<bool>() as u8).collect();
                let sym = alice_precode(&grid, &qpsk_map(&bits)?, scheme, decomp.as_ref())?;
                papr_db(&sym.time)
            })
            .collect()
    })
}

/// PAPR samples for Baseline and the configured scheme.
pub fn run_papr(cfg: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let mut schemes = vec![SchemeMode::Baseline];
    if cfg.scheme != SchemeMode::Baseline {
        schemes.push(cfg.scheme);
    }
    let mut out = Vec::new();
    for s in schemes {
        for v in papr_samples(cfg, s, s as u64)? {
            out.push(MetricRecord {
                scheme: s,
                snr_db: f64::INFINITY,
                rho: 0.0,
                metric: Metric::PaprDbSample,
                value: v,
                trials: cfg.trials,
                seed: cfg.master_seed,
            });
        }
    }
    Ok(out)
}

/// Min-phase response pairs `(H_ab^min, H_ae^min)` at correlation `rho`.
pub fn min_phase_pairs(
    cfg: &ExperimentConfig,
    rho: f64,
    grid_index: u64,
) -> Result<Vec<(Vec<Complex64>, Vec<Complex64>)>> {
    cfg.validate()?;
    let pdp = cfg.pdp()?;
    let pool = cfg.pool()?;
    pool.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.master_seed, grid_index, t);
                let h_ab = draw_channel(&pdp, &mut rng);
                let h_ae = draw_correlated(&h_ab, &pdp, rho, &mut rng)?;
                let a = decompose_fir_with(&h_ab, cfg.n, cfg.convention, cfg.unit_circle_tol)?;
                let e = decompose_fir_with(&h_ae, cfg.n, cfg.convention, cfg.unit_circle_tol)?;
                Ok((a.min_phase, e.min_phase))
            })
            .collect()
    })
}

/// Empirical and model min-phase correlation for each `rho` in the grid.
pub fn run_correlation(cfg: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let mut out = Vec::new();
    for (ri, &rho) in cfg.rho_grid.iter().enumerate() {
        let pairs = min_phase_pairs(cfg, rho, ri as u64)?;
        let rec = |metric, value| MetricRecord {
            scheme: cfg.scheme,
            snr_db: f64::INFINITY,
            rho,
            metric,
            value,
            trials: cfg.trials,
            seed: cfg.master_seed,
        };
        out.push(rec(Metric::CorrMinEmpirical, empirical_min_phase_correlation(&pairs)?));
        out.push(rec(Metric::CorrMinModel, rho_min(rho)?));
    }
    Ok(out)
}

/// CSV header shared by every experiment.
pub const CSV_HEADER: &str = "scheme,snr_db,rho,metric,value,trials,seed";

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v > 0.0 {
        "inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn fmt_axis(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// Renders records as CSV text (header plus one row per record).
pub fn to_csv(records: &[MetricRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scheme,
            fmt_axis(r.snr_db),
            fmt_axis(r.rho),
            r.metric.name(),
            fmt_value(r.value),
            r.trials,
            r.seed
        );
    }
    s
}

/// Writes records atomically: a temporary file in the target directory is
/// renamed over `path` only after a complete write.
pub fn write_csv(records: &[MetricRecord], path: &Path) -> Result<()> {
    write_atomic(path, to_csv(records).as_bytes())
}

/// Writes bytes via a sibling temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Parses CSV text produced by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<MetricRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or wrong CSV header".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("row {}: expected 7 fields", i + 1)));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number '{s}'", i + 1)))
            };
            Ok(MetricRecord {
                scheme: f[0].parse()?,
                snr_db: num(f[1])?,
                rho: num(f[2])?,
                metric: f[3].parse()?,
                value: num(f[4])?,
                trials: f[5].parse().map_err(|_| Error::Parse(format!("row {}: bad trials", i + 1)))?,
                seed: f[6].parse().map_err(|_| Error::Parse(format!("row {}: bad seed", i + 1)))?,
            })
        })
        .collect()
}

/// Reads a CSV file produced by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    parse_csv(&std::fs::read_to_string(path)?)
}
