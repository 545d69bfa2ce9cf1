//! Thin command-line front end: argument parsing, file IO, and exit-code
//! mapping. All computation lives in the library.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration/schema, 4 round failure
//! (every cluster rejected in at least one round), 5 internal invariant
//! violation.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use cqsa::clustering::{apply_dropouts, fisher_yates_partition};
use cqsa::fidelity::{
    self, render_csv, scan_cluster_sizes, scan_custom, scan_noise_grid, DEFAULT_DIRECT_CAP,
};
use cqsa::fl::{run_experiment, ExperimentConfig};
use cqsa::protocol::{estimate_sum, ProtocolConfig, ProtocolError};
use cqsa::seeding::{self, label};
use cqsa::statevec::{NoiseModel, SimError};

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_ROUND_FAILURE: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
    fn rounds(message: impl Into<String>) -> Self {
        Self { code: EXIT_ROUND_FAILURE, message: message.into() }
    }
    fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::internal(format!("io: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "cqsa",
    version,
    about = "Clustered quantum secure aggregation: protocol demo, fidelity scans, federated experiments",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for scans; 0 auto-detects. Results never depend on it.
    #[arg(long, global = true, default_value_t = 0, env = "CQSA_THREADS")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the GHZ blind-summation protocol once and report the estimate
    QsaDemo(QsaDemoArgs),
    /// Tabulate fidelity curves to CSV
    FidelityScan(FidelityScanArgs),
    /// Run a federated experiment from a JSON config file
    FlSim(FlSimArgs),
    /// Show one randomized cluster assignment as JSON
    PartitionDemo(PartitionDemoArgs),
}

#[derive(Args)]
struct QsaDemoArgs {
    /// Number of participants; ignored when --thetas fixes it
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Comma-separated participant phases in radians
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "random")]
    thetas: Option<Vec<f64>>,
    /// Draw the phases uniformly from [-pi/k, pi/k]
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    /// Two-qubit depolarizing probability per CNOT
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 42, env = "CQSA_SEED")]
    seed: u64,
    /// Write the JSON result to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScanMode {
    /// Cluster-size scan at 60 clients (two noise levels)
    Fig1,
    /// Noise-versus-size grid at cluster size 4
    Fig2,
    /// Grids taken from --n / --k-list / --p-list / --epsilon-list
    Custom,
}

#[derive(Args)]
struct FidelityScanArgs {
    #[arg(long, value_enum, default_value_t = ScanMode::Fig1)]
    mode: ScanMode,
    /// Total clients (custom mode)
    #[arg(long, alias = "N", default_value_t = 60)]
    n: u32,
    /// Comma-separated cluster sizes (custom mode)
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<u32>>,
    /// Comma-separated depolarizing probabilities (custom mode)
    #[arg(long, value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    /// Comma-separated per-qubit error rates for analytic rows (custom mode)
    #[arg(long, value_delimiter = ',')]
    epsilon_list: Option<Vec<f64>>,
    /// Use the pure recurrence from n=1 as the baseline instead of simulation
    #[arg(long)]
    pure_recurrence: bool,
    #[arg(long, default_value_t = 50_000)]
    trajectories: u64,
    /// Largest register simulated directly; larger ones extrapolate
    #[arg(long, default_value_t = DEFAULT_DIRECT_CAP)]
    direct_cap: u32,
    #[arg(long, default_value_t = 42, env = "CQSA_SEED")]
    seed: u64,
    #[arg(long, default_value = "fidelity.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct FlSimArgs {
    /// Experiment description (JSON; see SCHEMAS.md)
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "fl_rounds.csv")]
    out_csv: PathBuf,
    #[arg(long, default_value = "fl_summary.json")]
    out_summary: PathBuf,
    /// Override the seed from the config file
    #[arg(long, env = "CQSA_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct PartitionDemoArgs {
    #[arg(long, default_value_t = 20)]
    n_clients: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 42, env = "CQSA_SEED")]
    seed: u64,
    /// Comma-separated client ids to drop, invalidating their clusters
    #[arg(long, value_delimiter = ',')]
    dropped: Option<Vec<usize>>,
    /// Write the JSON assignment to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly when a pipe consumer closes early (e.g. `cqsa ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Later calls after the pool exists are fine to ignore: results do
        // not depend on the worker count.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::QsaDemo(args) => qsa_demo(args),
        Command::FidelityScan(args) => fidelity_scan(args),
        Command::FlSim(args) => fl_sim(args),
        Command::PartitionDemo(args) => partition_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Writes a data file plus a `<path>.meta.json` side file carrying the
/// invocation record and timestamp; data files themselves stay byte-stable.
fn write_with_meta(
    path: &Path,
    data: &str,
    command: &str,
    parameters: serde_json::Value,
) -> Result<(), CliError> {
    std::fs::write(path, data)?;
    let millis = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "parameters": parameters,
        "package_version": env!("CARGO_PKG_VERSION"),
        "generated_unix_ms": millis,
    });
    let mut meta_path = path.as_os_str().to_owned();
    meta_path.push(".meta.json");
    std::fs::write(PathBuf::from(meta_path), serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(())
}

fn qsa_demo(args: QsaDemoArgs) -> Result<(), CliError> {
    if args.shots == 0 {
        return Err(CliError::usage("--shots must be at least 1"));
    }
    let noise = NoiseModel::new(args.p)
        .map_err(|e| CliError::usage(format!("--p: {e}")))?;

    let thetas: Vec<f64> = match (&args.thetas, args.random) {
        (Some(list), _) => list.clone(),
        (None, true) => {
            let mut rng = seeding::derived_rng(args.seed, &[label::DEMO, 0]);
            let bound = PI / args.k as f64;
            (0..args.k).map(|_| rng.gen_range(-bound..=bound)).collect()
        }
        (None, false) => {
            return Err(CliError::usage("provide --thetas or use --random"));
        }
    };
    let k = thetas.len();
    let sigma_true: f64 = thetas.iter().sum();

    let config = ProtocolConfig {
        cluster_size: k,
        shots: args.shots,
        noise,
        seed: args.seed,
    };
    let estimate = estimate_sum(&thetas, &config).map_err(|e| match e {
        ProtocolError::PhaseSumOutOfRange(sum) => CliError::config(format!(
            "phase sum {sum:.6} lies outside [-pi, pi]; scale inputs so that S = pi/(k*w_max) bounds each phase by pi/k"
        )),
        ProtocolError::ZeroShots => CliError::usage("--shots must be at least 1"),
        ProtocolError::Sim(SimError::QubitCountOutOfRange(n)) => {
            CliError::usage(format!("cluster size {n} outside supported range"))
        }
        other => CliError::internal(other.to_string()),
    })?;

    let abs_error = (estimate.sigma_hat - sigma_true).abs();
    println!("participants:     {k}");
    println!("true sum:         {sigma_true:+.6} rad");
    println!("estimated sum:    {:+.6} rad", estimate.sigma_hat);
    println!("absolute error:   {abs_error:.6} rad");
    println!("P(0) cos config:  {:.6}", estimate.p0_cos);
    println!("P(0) sin config:  {:.6}", estimate.p0_sin);
    if estimate.low_confidence {
        println!("note: both inverted components were zero; estimate is low-confidence");
    }

    let json = serde_json::json!({
        "k": k,
        "p": args.p,
        "shots": args.shots,
        "seed": args.seed,
        "sigma_true": sigma_true,
        "sigma_hat": estimate.sigma_hat,
        "abs_error": abs_error,
        "p0_cos": estimate.p0_cos,
        "p0_sin": estimate.p0_sin,
        "low_confidence": estimate.low_confidence,
        "shots_used": estimate.shots_used,
    });
    let rendered = serde_json::to_string_pretty(&json).unwrap();
    match &args.out {
        Some(path) => write_with_meta(
            path,
            &rendered,
            "qsa-demo",
            serde_json::json!({"k": k, "p": args.p, "shots": args.shots, "seed": args.seed}),
        )?,
        None => println!("{rendered}"),
    }
    Ok(())
}

fn fidelity_scan(args: FidelityScanArgs) -> Result<(), CliError> {
    if args.trajectories == 0 {
        return Err(CliError::usage("--trajectories must be at least 1"));
    }
    let rows = match args.mode {
        ScanMode::Fig1 => scan_cluster_sizes(args.trajectories, args.direct_cap, args.seed),
        ScanMode::Fig2 => scan_noise_grid(args.trajectories, args.direct_cap, args.seed),
        ScanMode::Custom => {
            let k_list = args.k_list.clone().unwrap_or_else(|| vec![2, 4, 5, 6, 10]);
            let p_list = args.p_list.clone().unwrap_or_else(|| vec![0.005]);
            let epsilon_list = args.epsilon_list.clone().unwrap_or_default();
            if let Some(eps) = epsilon_list.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(CliError::usage(format!("--epsilon-list entry {eps} outside [0, 1]")));
            }
            scan_custom(
                args.n,
                &k_list,
                &p_list,
                &epsilon_list,
                args.pure_recurrence,
                args.trajectories,
                args.direct_cap,
                args.seed,
            )
        }
    }
    .map_err(|e| match e {
        fidelity::FidelityError::Sim(SimError::InvalidProbability(p)) => {
            CliError::usage(format!("--p-list entry {p} outside [0, 1]"))
        }
        fidelity::FidelityError::QubitCountOutOfRange(n)
        | fidelity::FidelityError::InvalidDirectCap(n) => {
            CliError::usage(format!("register size {n} outside the supported range"))
        }
        fidelity::FidelityError::InvalidClusterSize { k, n } => {
            CliError::usage(format!("cluster size {k} invalid for {n} clients"))
        }
        other => CliError::internal(other.to_string()),
    })?;

    let csv = render_csv(&rows);
    let mode = match args.mode {
        ScanMode::Fig1 => "fig1",
        ScanMode::Fig2 => "fig2",
        ScanMode::Custom => "custom",
    };
    write_with_meta(
        &args.out,
        &csv,
        "fidelity-scan",
        serde_json::json!({
            "mode": mode,
            "n": args.n,
            "trajectories": args.trajectories,
            "direct_cap": args.direct_cap,
            "seed": args.seed,
        }),
    )?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn fl_sim(args: FlSimArgs) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::config(format!("config schema: {e}")))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;

    let output = run_experiment(&config).map_err(|e| CliError::internal(e.to_string()))?;

    let csv = cqsa::fl::render_round_csv(&output.reports);
    let round_log: Vec<serde_json::Value> = output
        .reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "round": r.round,
                "loss": r.global_loss,
                "accepted": r.verdict.accepted.iter().collect::<Vec<_>>(),
                "rejected": r.verdict.rejected.iter().collect::<Vec<_>>(),
                "round_failed": r.round_failed,
                "dropped": r.dropped,
                "estimation_error_mean": r.estimation_error_mean,
                "w_max": r.w_max,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "rounds": output.summary.rounds,
        "initial_loss": output.summary.initial_loss,
        "final_loss": output.summary.final_loss,
        "failed_rounds": output.summary.failed_rounds,
        "seed": output.summary.seed,
        "warnings": output.summary.warnings,
        "final_weights": output.final_weights,
        "round_log": round_log,
    });

    let params = serde_json::to_value(&config).unwrap();
    write_with_meta(&args.out_csv, &csv, "fl-sim", params.clone())?;
    write_with_meta(
        &args.out_summary,
        &serde_json::to_string_pretty(&summary).unwrap(),
        "fl-sim",
        params,
    )?;

    for warning in &output.summary.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "{} rounds: loss {} -> {} ({} failed)",
        output.summary.rounds,
        output.summary.initial_loss,
        output.summary.final_loss,
        output.summary.failed_rounds.len()
    );
    if !output.summary.failed_rounds.is_empty() {
        return Err(CliError::rounds(format!(
            "{} round(s) rejected every cluster: {:?}",
            output.summary.failed_rounds.len(),
            output.summary.failed_rounds
        )));
    }
    Ok(())
}

fn partition_demo(args: PartitionDemoArgs) -> Result<(), CliError> {
    let ids: Vec<usize> = (0..args.n_clients).collect();
    let mut rng = seeding::derived_rng(args.seed, &[label::PARTITION, 0]);
    let mut assignment = fisher_yates_partition(&ids, args.k, 0, &mut rng)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(dropped) = &args.dropped {
        let set: BTreeSet<usize> = dropped.iter().copied().collect();
        assignment = apply_dropouts(&assignment, &set);
    }
    let rendered = serde_json::to_string_pretty(&assignment).unwrap();
    match &args.out {
        Some(path) => write_with_meta(
            path,
            &rendered,
            "partition-demo",
            serde_json::json!({"n_clients": args.n_clients, "k": args.k, "seed": args.seed}),
        )?,
        None => println!("{rendered}"),
    }
    Ok(())
}
