use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::de::DeserializeOwned;

use pls_core::channel::{cfr_of, draw_channel, exp_pdp};
use pls_core::decomposition::{decomposition_from_factors, factor_fir, Convention};
use pls_core::harness::{
    parse_snr, run, run_correlation, run_papr, to_csv, trial_rng, write_atomic, CsiMode,
    ExperimentConfig, Metric, MetricRecord,
};
use pls_core::ofdm::{Estimator, Interpolation};
use pls_core::security::{EveEqualizer, SchemeMode};

#[derive(Parser, Debug)]
#[command(name = "plsim", version, about = "Channel-decomposition physical-layer security simulator for OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bob and Eve bit error rates over the SNR and correlation grid.
    Ber(RunArgs),
    /// Bob and Eve channel-estimation NMSE (dB) over the SNR and correlation grid.
    Nmse(RunArgs),
    /// Per-symbol PAPR samples for Baseline and the configured scheme.
    Papr(RunArgs),
    /// Empirical and model minimum-phase correlation over the correlation grid.
    Correlation(RunArgs),
    /// Factors one channel and dumps taps, zeros and sampled responses.
    Decompose(DecomposeArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// baseline, data, pilot or joint.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeMode>,
    /// Comma-separated SNR points in dB; `inf` for noise-free.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Comma-separated Alice-Eve correlation values in [0, 1].
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// perfect or estimated.
    #[arg(long, value_parser = parse_named::<CsiMode>)]
    csi: Option<CsiMode>,
    /// ls or mmse.
    #[arg(long, value_parser = parse_named::<Estimator>)]
    estimator: Option<Estimator>,
    /// dft or linear.
    #[arg(long, value_parser = parse_named::<Interpolation>)]
    interpolation: Option<Interpolation>,
    /// literal or canonical.
    #[arg(long, value_parser = parse_named::<Convention>)]
    convention: Option<Convention>,
    /// full, minphase or auto.
    #[arg(long, value_parser = parse_named::<EveEqualizer>)]
    eve_equalizer: Option<EveEqualizer>,
    /// Eve decodes with her pilot estimate instead of her true channel.
    #[arg(long)]
    eve_estimated: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Comma-separated taps, each `a`, `a+bj`, `a-bj` or `bj`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "seed", required_unless_present = "seed")]
    taps: Option<String>,
    /// Draw a random channel from the exponential profile instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel length for `--seed`.
    #[arg(long, default_value_t = 11)]
    length: usize,
    /// Profile e-folding length in taps for `--seed`.
    #[arg(long, default_value_t = 1.0)]
    pdp_decay: f64,
    /// FFT size.
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, value_parser = parse_named::<Convention>, default_value = "literal")]
    convention: Convention,
    #[arg(long, default_value_t = pls_core::decomposition::UNIT_CIRCLE_TOL)]
    unit_circle_tol: f64,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<pls_core::Error> for Failure {
    fn from(e: pls_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn parse_scheme(s: &str) -> Result<SchemeMode, String> {
    s.to_ascii_lowercase().parse().map_err(|e: pls_core::Error| e.to_string())
}

fn parse_named<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown value '{s}'"))
}

fn parse_list(text: &str, what: &str, item: impl Fn(&str) -> Option<f64>) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| item(t.trim()).ok_or_else(|| Failure::Usage(format!("invalid {what} '{t}'"))))
        .collect()
}

/// Parses `a`, `a+bj`, `a-bj`, `bj` or `j`-suffixed forms with `i` accepted for `j`.
fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let im = |s: &str| match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    };
    match split {
        Some(i) => Some(Complex64::new(body[..i].parse().ok()?, im(&body[i..])?)),
        None => Some(Complex64::new(0.0, im(body)?)),
    }
}

fn config_from(args: &RunArgs, sweep_rho: bool) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => {
            let mut c = ExperimentConfig::default();
            if sweep_rho {
                c.rho_grid = (0..=10).map(|i| i as f64 / 10.0).collect();
            }
            c
        }
    };
    if let Some(s) = args.scheme {
        cfg.scheme = s;
    }
    if let Some(t) = &args.snr {
        cfg.snr_grid_db = parse_list(t, "SNR", |s| parse_snr(s).ok())?;
    }
    if let Some(t) = &args.rho {
        cfg.rho_grid = parse_list(t, "rho", |s| s.parse().ok())?;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(c) = args.csi {
        cfg.csi_mode = c;
    }
    if let Some(e) = args.estimator {
        cfg.estimator = e;
    }
    if let Some(i) = args.interpolation {
        cfg.interpolation = i;
    }
    if let Some(c) = args.convention {
        cfg.convention = c;
    }
    if let Some(e) = args.eve_equalizer {
        cfg.eve_equalizer = e;
    }
    if args.eve_estimated {
        cfg.eve_knows_channel = false;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(Failure::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn link(args: &RunArgs, keep: [Metric; 2]) -> Result<(), Failure> {
    let cfg = config_from(args, false)?;
    let recs: Vec<MetricRecord> = run(&cfg)?.into_iter().filter(|r| keep.contains(&r.metric)).collect();
    emit(&to_csv(&recs), args.out.as_deref())
}

fn decompose(args: &DecomposeArgs) -> Result<(), Failure> {
    let taps: Vec<Complex64> = match (&args.taps, args.seed) {
        (Some(t), _) => t
            .split(',')
            .map(|s| parse_complex(s).ok_or_else(|| Failure::Usage(format!("malformed tap '{s}'"))))
            .collect::<Result<_, _>>()?,
        (None, Some(seed)) => {
            let pdp = exp_pdp(args.length, args.pdp_decay).map_err(|e| Failure::Usage(e.to_string()))?;
            draw_channel(&pdp, &mut trial_rng(seed, 0, 0))
        }
        (None, None) => return Err(Failure::Usage("either --taps or --seed is required".into())),
    };
    let f = factor_fir(&taps, args.unit_circle_tol).map_err(|e| Failure::Usage(e.to_string()))?;
    let d = decomposition_from_factors(&f, args.n, args.convention).map_err(|e| Failure::Usage(e.to_string()))?;
    let h = cfr_of(&taps, args.n).map_err(|e| Failure::Usage(e.to_string()))?;
    let recon = (0..args.n)
        .filter(|&k| h[k].norm() > 0.0)
        .map(|k| (d.min_phase[k] * d.all_pass[k] - h[k]).norm() / h[k].norm())
        .fold(0.0, f64::max);

    let mut s = String::from("kind,index,re,im,abs,class\n");
    let mut row = |kind: &str, i: usize, v: Complex64, class: &str| {
        let _ = writeln!(s, "{kind},{i},{:.16e},{:.16e},{:.16e},{class}", v.re, v.im, v.norm());
    };
    for (i, &v) in taps.iter().enumerate() {
        row("tap", i, v, "");
    }
    let zeros = f.zeros_inside.iter().map(|z| (z, "inside")).chain(f.zeros_outside.iter().map(|z| (z, "outside")));
    for (i, (&z, class)) in zeros.enumerate() {
        row("zero", i, z, class);
    }
    row("delay", 0, Complex64::new(f.delay as f64, 0.0), "");
    for (kind, values) in [("cfr", &h), ("min_phase", &d.min_phase), ("all_pass", &d.all_pass)] {
        for (k, &v) in values.iter().enumerate() {
            row(kind, k, v, "");
        }
    }
    row("recon_error", 0, Complex64::new(recon, 0.0), "");
    emit(&s, args.out.as_deref())?;
    eprintln!(
        "zeros inside: {}, outside: {}, delay: {}, max reconstruction error: {recon:.3e}",
        f.zeros_inside.len(),
        f.zeros_outside.len(),
        f.delay
    );
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Ber(a) => link(a, [Metric::BerBob, Metric::BerEve]),
        Command::Nmse(a) => link(a, [Metric::NmseBobDb, Metric::NmseEveDb]),
        Command::Papr(a) => {
            let cfg = config_from(a, false)?;
            emit(&to_csv(&run_papr(&cfg)?), a.out.as_deref())
        }
        Command::Correlation(a) => {
            let cfg = config_from(a, true)?;
            emit(&to_csv(&run_correlation(&cfg)?), a.out.as_deref())
        }
        Command::Decompose(a) => decompose(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
