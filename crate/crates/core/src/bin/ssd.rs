use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use shadow_descent::circuit::{AnsatzFamily, CircuitDescription, Shots};
use shadow_descent::harness::{
    render_loss_svg, run_verify, train_classifier, write_metrics_csv, DatasetSpec, ExperimentConfig, Fault,
    OptimizerKind, XAxis,
};
use shadow_descent::sim::{qubit_cap, QUBIT_CAP_ENV};

#[derive(Parser)]
#[command(name = "ssd", version, about = "Shadow-descent training of simulated quantum classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier and write per-iteration metrics as CSV.
    Run(Box<RunArgs>),
    /// Run the self-check suites and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, hide = true, default_value = "none")]
        inject_fault: String,
    },
    /// Plot one or more metrics CSV files as an SVG line chart.
    Plot {
        #[arg(long, default_value = "iterations")]
        x: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ssd, ssd-fused, sgd, rsgf or spsa.
    #[arg(long)]
    optimizer: Option<String>,
    /// iris, synthetic or csv:<path>.
    #[arg(long)]
    dataset: Option<String>,
    /// basic or strongly.
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// `exact` or a positive shot count.
    #[arg(long)]
    shots: Option<String>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Synthetic dataset size.
    #[arg(long)]
    samples: Option<usize>,
    /// Synthetic class-centre separation.
    #[arg(long)]
    separation: Option<f64>,
    /// Record elapsed milliseconds in `wall_ms` (makes output run-dependent).
    #[arg(long)]
    wall_clock: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunSidecar<'a> {
    config: &'a ExperimentConfig,
    num_params: usize,
    circuit: &'a CircuitDescription,
    final_theta: &'a [f64],
}

fn parse_ansatz(s: &str) -> Result<AnsatzFamily, String> {
    match s {
        "basic" => Ok(AnsatzFamily::BasicEntangler),
        "strongly" => Ok(AnsatzFamily::StronglyEntangling),
        _ => Err(format!("ansatz must be basic or strongly, got {s:?}")),
    }
}

fn build_config(args: RunArgs) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let mut c = match &args.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = args.optimizer {
        c.optimizer = o.parse::<OptimizerKind>()?;
    }
    if let Some(d) = args.dataset {
        c.dataset = d.parse::<DatasetSpec>()?;
    }
    if let Some(a) = args.ansatz {
        c.ansatz = parse_ansatz(&a)?;
    }
    if let Some(s) = args.shots {
        c.shots = s.parse::<Shots>()?;
    }
    c.layers = args.layers.unwrap_or(c.layers);
    c.qubits = args.qubits.or(c.qubits);
    c.lr = args.lr.unwrap_or(c.lr);
    c.mu = args.mu.or(c.mu);
    c.iters = args.iters.unwrap_or(c.iters);
    c.seed = args.seed.unwrap_or(c.seed);
    c.batch = args.batch.unwrap_or(c.batch);
    c.samples = args.samples.unwrap_or(c.samples);
    c.separation = args.separation.unwrap_or(c.separation);
    c.wall_clock |= args.wall_clock;
    c.out = args.out.or(c.out);
    c.validate()?;
    Ok(c)
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let config = build_config(args)?;
    let out = config.out.clone().ok_or("--out is required")?;
    let outcome = train_classifier(&config)?;
    write_metrics_csv(&outcome.rows, &out)?;
    let sidecar = RunSidecar {
        config: &config,
        num_params: outcome.num_params,
        circuit: &outcome.circuit,
        final_theta: &outcome.theta,
    };
    std::fs::write(sidecar_path(&out), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    let last = outcome.rows.last().expect("at least the starting row");
    eprintln!(
        "{} on {}: d = {}, final loss {:.6}, executions {}",
        config.optimizer, config.dataset, outcome.num_params, last.loss, last.executions
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Verify { seed, inject_fault } => {
            let fault = match inject_fault.parse::<Fault>() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let reports = run_verify(seed, fault);
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                eprintln!("{failed} suite(s) failed");
                return ExitCode::FAILURE;
            }
            println!("all suites passed (qubit cap {}, override with {QUBIT_CAP_ENV})", qubit_cap());
            Ok(())
        }
        Command::Plot { x, out, csv } => x
            .parse::<XAxis>()
            .map_err(Into::into)
            .and_then(|axis| {
                let paths: Vec<&Path> = csv.iter().map(PathBuf::as_path).collect();
                render_loss_svg(&paths, axis, &out).map_err(Into::into)
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
