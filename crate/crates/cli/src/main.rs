//! `sgcv`: Savitzky–Golay smoothing with cross-validated polynomial order.
//!
//! Exit codes:
//!
//! | code | meaning                                                        |
//! |------|----------------------------------------------------------------|
//! | 0    | success                                                        |
//! | 1    | usage error, unknown experiment or method, invalid parameters, I/O failure |
//! | 2    | input violates a precondition (spacing, window, series length) |
//! | 3    | malformed input CSV                                            |
//! | 4    | benchmark pre-check found the implementations disagreeing      |
//!
//! Set `SG_CV_THREADS` to cap the worker threads used by experiments.

mod series;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgcv_core::bench::{run_bench, BenchConfig};
use sgcv_core::experiments::{
    bias_variance_trace_with, run_detection_vs_n, run_detection_vs_variance, run_kinematic_demo, run_robustness_sweep,
    DemoConfig, ExperimentConfig, ExperimentReport, SweepAxis,
};
use sgcv_core::smoothing::smooth_series;
use sgcv_core::{build_nested_basis, select_order_cv, DesignSpec, NoiseModel, SelectorRegistry, SgError};

use series::Series;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Precondition(String),
    Malformed(String),
    Mismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Malformed(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Precondition(m) | CliError::Malformed(m) | CliError::Mismatch(m) => m,
        }
    }
}

impl From<SgError> for CliError {
    fn from(e: SgError) -> Self {
        match e {
            SgError::ImplementationMismatch { .. } => CliError::Mismatch(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(
    name = "sgcv",
    version,
    about = "Savitzky-Golay smoothing with cross-validated polynomial order"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smooth a series with a sliding window, choosing the order per sample.
    Smooth(SmoothArgs),
    /// Treat the whole series as one window and report per-order scores.
    Select(SelectArgs),
    /// Run a Monte Carlo study or demonstration: vs-n, vs-var, biasvar, robustness, demo.
    Experiment(ExperimentArgs),
    /// Time conventional against order-recursive cross-validation.
    Bench(BenchArgs),
    /// List registered order-selection methods.
    Methods,
}

#[derive(Args, Debug)]
struct SmoothArgs {
    #[arg(long)]
    input: PathBuf,
    /// Window length (odd unless --target-index is given).
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    pmax: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "cv")]
    method: String,
    /// 0-based position of the estimated sample inside the window.
    #[arg(long)]
    target_index: Option<usize>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Largest candidate order; defaults to N - 2.
    #[arg(long)]
    pmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    name: String,
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; the JSON report is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window length(s).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Nominal noise variance(s).
    #[arg(long, value_delimiter = ',')]
    variances: Vec<f64>,
    #[arg(long)]
    sigw2: Option<f64>,
    /// Impulsive noise variance(s).
    #[arg(long, value_delimiter = ',')]
    sigi2: Vec<f64>,
    /// Impulse probabilities.
    #[arg(long, value_delimiter = ',')]
    pi: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// demo: largest candidate order.
    #[arg(long)]
    pmax: Option<usize>,
    /// demo: sample period in seconds.
    #[arg(long)]
    period: Option<f64>,
    /// demo: additive noise variance.
    #[arg(long)]
    noise_var: Option<f64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 15, 20])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {}", e.message());
        return ExitCode::from(e.code());
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SG_CV_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SG_CV_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(command: Command) -> Result<(), CliError> {
    let registry = SelectorRegistry::with_builtins();
    match command {
        Command::Smooth(args) => cmd_smooth(&args, &registry),
        Command::Select(args) => cmd_select(&args),
        Command::Experiment(args) => cmd_experiment(&args, &registry),
        Command::Bench(args) => cmd_bench(&args),
        Command::Methods => {
            for name in registry.names() {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| io_err(path, e))
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_smooth(args: &SmoothArgs, registry: &SelectorRegistry) -> Result<(), CliError> {
    let target = match args.target_index {
        Some(k) => {
            if k >= args.window {
                return Err(CliError::Precondition(format!(
                    "target index {k} outside window of length {}",
                    args.window
                )));
            }
            k
        }
        None => {
            if args.window.is_multiple_of(2) {
                return Err(CliError::Precondition("window length must be odd".into()));
            }
            args.window / 2
        }
    };
    if args.window < 3 || args.pmax + 2 > args.window {
        return Err(CliError::Precondition(format!(
            "need window >= 3 and pmax <= window - 2, got window {} and pmax {}",
            args.window, args.pmax
        )));
    }
    let selector = registry.get(&args.method)?;
    let series = Series::read(&args.input)?;
    series.check_uniform()?;
    if series.len() < args.window {
        return Err(CliError::Precondition(format!(
            "series has {} rows, window needs {}",
            series.len(),
            args.window
        )));
    }

    let smoothed = smooth_series(&series.y, args.window, args.pmax, target, selector.as_ref())?;
    let mut csv = String::from("t,y,order,y_smooth\n");
    let mut histogram = vec![0usize; args.pmax + 1];
    for ((t, y), s) in series.t.iter().zip(&series.y).zip(&smoothed) {
        if let Some(s) = s {
            histogram[s.order] += 1;
        }
        let _ = writeln!(
            csv,
            "{t},{y},{},{}",
            opt_to_string(s.map(|s| s.order)),
            opt_to_string(s.map(|s| s.value))
        );
    }
    write_file(&args.out, &csv)?;

    let smoothed_rows = histogram.iter().sum::<usize>();
    println!(
        "smoothed {smoothed_rows} of {} samples (window {}, pmax {}, method {})",
        series.len(),
        args.window,
        args.pmax,
        args.method
    );
    for (p, count) in histogram.iter().enumerate() {
        println!("  order {p}: {count}");
    }
    if let Some(truth) = &series.x_true {
        let (sum, count) = smoothed
            .iter()
            .zip(truth)
            .filter_map(|(s, x)| s.map(|s| (s.value - x).powi(2)))
            .fold((0.0, 0usize), |(a, c), e| (a + e, c + 1));
        if count > 0 {
            println!("  rmse vs x_true: {:.6}", (sum / count as f64).sqrt());
        }
    }
    Ok(())
}

fn cmd_select(args: &SelectArgs) -> Result<(), CliError> {
    let series = Series::read(&args.input)?;
    if series.t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Precondition("time stamps must be strictly increasing".into()));
    }
    let n = series.len();
    if n < 3 {
        return Err(CliError::Precondition(format!("need at least 3 samples, got {n}")));
    }
    let pmax = args.pmax.unwrap_or(n - 2);
    let spec = DesignSpec::with_nodes(series.t.clone(), pmax).map_err(|e| CliError::Precondition(e.to_string()))?;
    let basis = build_nested_basis(&spec);
    let cv = select_order_cv(&series.y, &basis)?;
    let bic = sgcv_core::score_bic(&series.y, &basis)?;

    let mut csv = String::from("order,tpe,residual_norm,bic_n,bic_snr\n");
    for p in 0..=pmax {
        let _ = writeln!(
            csv,
            "{p},{},{},{},{}",
            cv.tpe_by_order[p], cv.residual_norm_by_order[p], bic.bic_n_by_order[p], bic.bic_snr_by_order[p]
        );
    }
    if let Some(out) = &args.out {
        write_file(out, &csv)?;
    }
    print!("{csv}");
    println!(
        "best order: cv {}, bic-n {}, bic-snr {}",
        cv.best_order, bic.best_order_bic_n, bic.best_order_bic_snr
    );
    Ok(())
}

fn load_config(args: &ExperimentArgs, default: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => default,
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if !args.methods.is_empty() {
        cfg.methods = args.methods.clone();
    }
    if let Some(w) = args.sigw2 {
        cfg.noise = match cfg.noise {
            NoiseModel::Gaussian { .. } => NoiseModel::gaussian(w),
            NoiseModel::Mixture { sigma_i_sq, p_i, .. } => NoiseModel::mixture(w, sigma_i_sq, p_i),
        };
    }
    Ok(cfg)
}

fn single<T: Clone>(values: &[T], flag: &str) -> Result<Option<T>, CliError> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(v.clone())),
        _ => Err(CliError::Usage(format!("--{flag} takes a single value here"))),
    }
}

fn cmd_experiment(args: &ExperimentArgs, registry: &SelectorRegistry) -> Result<(), CliError> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", args.name)));
    let json_out = out.with_extension("json");
    match args.name.as_str() {
        "vs-n" => {
            let mut cfg = load_config(args, ExperimentConfig::detection_vs_n())?;
            if !args.n.is_empty() {
                cfg.axis = SweepAxis::WindowLens(args.n.clone());
            }
            let report = run_detection_vs_n(&cfg, registry)?;
            write_report(&report, &out, &json_out)
        }
        "vs-var" => {
            let mut cfg = load_config(args, ExperimentConfig::detection_vs_variance())?;
            if !args.variances.is_empty() {
                cfg.axis = SweepAxis::NoiseVariances(args.variances.clone());
            }
            if let Some(n) = single(&args.n, "n")? {
                cfg.window_len = n;
            }
            let report = run_detection_vs_variance(&cfg, registry)?;
            write_report(&report, &out, &json_out)
        }
        "robustness" => {
            let mut cfg = load_config(args, ExperimentConfig::robustness())?;
            let (sigma_w_sq, base_i, base_p) = match cfg.noise {
                NoiseModel::Mixture {
                    sigma_w_sq,
                    sigma_i_sq,
                    p_i,
                } => (sigma_w_sq, sigma_i_sq, p_i),
                NoiseModel::Gaussian { sigma_w_sq } => (sigma_w_sq, 10.0, 0.0),
            };
            if args.n.len() > 1 {
                let sigma_i_sq = single(&args.sigi2, "sigi2")?.unwrap_or(base_i);
                let p_i = single(&args.pi, "pi")?.unwrap_or(base_p);
                cfg.noise = NoiseModel::mixture(sigma_w_sq, sigma_i_sq, p_i);
                cfg.axis = SweepAxis::WindowLens(args.n.clone());
            } else {
                if let Some(n) = single(&args.n, "n")? {
                    cfg.window_len = n;
                }
                cfg.noise = NoiseModel::mixture(sigma_w_sq, base_i, base_p);
                if !args.sigi2.is_empty() || !args.pi.is_empty() {
                    let sig = if args.sigi2.is_empty() {
                        vec![base_i]
                    } else {
                        args.sigi2.clone()
                    };
                    let pis = if args.pi.is_empty() {
                        vec![base_p]
                    } else {
                        args.pi.clone()
                    };
                    let pairs = sig.iter().flat_map(|&s| pis.iter().map(move |&p| (s, p))).collect();
                    cfg.axis = SweepAxis::MixturePairs(pairs);
                }
            }
            let report = run_robustness_sweep(&cfg, registry)?;
            write_report(&report, &out, &json_out)
        }
        "biasvar" => {
            let n = single(&args.n, "n")?.unwrap_or(16);
            let noise = NoiseModel::gaussian(args.sigw2.unwrap_or(1.0));
            let seed = args.seed.unwrap_or(0);
            let rows = bias_variance_trace_with(n, &noise, seed)?;
            let mut csv = String::from("order,residual_norm,mean_gamma,tpe\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{},{}", r.order, r.residual_norm, r.mean_gamma, r.tpe);
            }
            write_file(&out, &csv)?;
            write_file(&json_out, &serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
            print!("{csv}");
            Ok(())
        }
        "demo" => {
            let defaults = DemoConfig::default();
            let cfg = DemoConfig {
                window_len: single(&args.n, "n")?.unwrap_or(defaults.window_len),
                max_order: args.pmax.unwrap_or(defaults.max_order),
                sample_period: args.period.unwrap_or(defaults.sample_period),
                noise_variance: args.noise_var.unwrap_or(defaults.noise_variance),
                seed: args.seed.unwrap_or(defaults.seed),
                method: single(&args.methods, "methods")?.unwrap_or(defaults.method),
            };
            let samples = run_kinematic_demo(&cfg, registry)?;
            let mut csv = String::from("t,y,x_true,order,y_smooth\n");
            for s in &samples {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    s.t,
                    s.y,
                    s.x_true,
                    opt_to_string(s.order),
                    opt_to_string(s.smoothed)
                );
            }
            write_file(&out, &csv)?;
            write_file(
                &json_out,
                &serde_json::to_string_pretty(&samples).expect("samples serialize"),
            )?;
            let mut counts = vec![0usize; cfg.max_order + 1];
            samples.iter().filter_map(|s| s.order).for_each(|o| counts[o] += 1);
            println!(
                "kinematic demo: {} samples, selected order counts {:?}",
                samples.len(),
                counts
            );
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown experiment `{other}` (expected vs-n, vs-var, biasvar, robustness, demo)"
        ))),
    }
}

fn write_report(report: &ExperimentReport, csv_path: &Path, json_path: &Path) -> Result<(), CliError> {
    write_file(csv_path, &report.to_csv())?;
    write_file(json_path, &report.to_json())?;
    println!(
        "{} sweep, {} trials per point, seed {}, true order {}",
        report.axis, report.trials, report.base_seed, report.true_order
    );
    for p in &report.points {
        let cells: Vec<String> = p
            .outcomes
            .iter()
            .map(|o| format!("{} {:.3}±{:.3}", o.method, o.probability, o.std_error))
            .collect();
        println!("  {:>14}  {}", p.axis_value, cells.join("  "));
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let report = run_bench(&BenchConfig {
        sizes: args.sizes.clone(),
        reps: args.reps,
        seed: args.seed,
    })?;
    write_file(&args.out, &report.to_csv())?;
    let verify = args.out.with_file_name(format!(
        "{}.verify.csv",
        args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("bench")
    ));
    write_file(&verify, &report.verification_csv())?;
    println!("{} ({} reps, median per call)", report.environment, report.reps);
    print!("{}", report.to_csv());
    Ok(())
}
