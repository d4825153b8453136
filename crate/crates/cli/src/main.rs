use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eigmit::error_models::DeltaRecord;
use eigmit::experiments::{
    run_noise_floor_sweep, run_qubitisation_histogram, run_trotter_sweep, run_vary_m, ExperimentRecord,
    NoiseFloorConfig, QubitHistogramConfig, Strategy, TrotterSweepConfig, VaryMConfig,
};
use eigmit::extrapolate::{
    design_matrix, pe_call_budget, solve_lambda_exact, solve_lambda_min_l2, solve_lambda_nonnegative, DeltaStructure,
};
use eigmit::hamiltonian::Model;
use eigmit::linalg::DEFAULT_RANK_TOL;
use eigmit::pe_sim::NoiseTable;
use serde_json::json;

/// Error mitigation by extrapolating over perturbed eigenvalue estimates.
#[derive(Parser)]
#[command(name = "eigmit", version)]
struct Cli {
    /// Directory for {experiment}-{seed}.csv/.json records.
    #[arg(long, global = true, env = "EIGMIT_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mitigated Trotter error against the number of Trotter steps.
    TrotterSweep(SweepArgs),
    /// The Trotter sweep with Gaussian noise from a noise table.
    NoiseFloor(NoiseArgs),
    /// Raw and mitigated estimates from qubitised Hamiltonians.
    QubitHistogram(HistogramArgs),
    /// Mean error against the number of qubitised observables.
    VaryM(VaryMArgs),
    /// Solve for the weights of a delta set read from JSON.
    SolveLambda(SolveArgs),
    /// Phase-estimation calls needed for a given order.
    PeBudget(BudgetArgs),
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[arg(long, default_value = "xyz")]
    model: Model,
    /// Chain length in sites.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0,2,4")]
    orders: Vec<usize>,
    /// Values of N_Trotter,max.
    #[arg(long, value_delimiter = ',', default_value = "8,10,14,20,28,40,56,80")]
    steps: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    t_total: f64,
}

impl SweepArgs {
    fn config(&self) -> TrotterSweepConfig {
        TrotterSweepConfig {
            model: self.model,
            n: self.n,
            seed: self.seed,
            orders: self.orders.clone(),
            trotter_steps: self.steps.clone(),
            t_total: self.t_total,
        }
    }
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// CSV with header noise_strength,E_bar,Delta_E.
    #[arg(long)]
    noise_table: PathBuf,
    /// Strengths to run; defaults to every row of the table.
    #[arg(long, value_delimiter = ',')]
    strengths: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
}

#[derive(Args)]
struct HistogramArgs {
    #[arg(long, default_value = "ising")]
    model: Model,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    mu: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "raw,first_order_min_l2,first_order_nonneg")]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    /// Ancilla qubits of phase estimation.
    #[arg(long, default_value_t = 16)]
    q: u32,
    /// Independent offset draws shared over the runs; one per run if absent.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, default_value_t = 200)]
    attempts_per_m: usize,
    #[arg(long, default_value_t = 60)]
    max_extra_m: usize,
}

#[derive(Args)]
struct VaryMArgs {
    #[arg(long, default_value = "ising")]
    model: Model,
    /// Chain lengths in sites.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    mu: u32,
    #[arg(long, default_value_t = 60)]
    m_max: usize,
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    #[arg(long, default_value_t = 16)]
    q: u32,
    #[arg(long, default_value_t = 3)]
    max_order: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveRegime {
    MinL2,
    Nonnegative,
    Exact,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON file: {"deltas": [[...], ...]} or a bare array, one array per observable.
    #[arg(long)]
    deltas: PathBuf,
    #[arg(long)]
    p: usize,
    #[arg(long, value_enum, default_value = "min-l2")]
    regime: SolveRegime,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Structure {
    Generic,
    SumZero,
}

#[derive(Args)]
struct BudgetArgs {
    /// Number of perturbation parameters.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Ground-state overlap of the initial state.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value = "generic")]
    structure: Structure,
}

fn write_record<C, R, S>(rec: &ExperimentRecord<C, R, S>, dir: &Path) -> Result<()>
where
    C: serde::Serialize,
    R: serde::Serialize,
    S: serde::Serialize,
{
    let (csv, json) = rec.write_to_dir(dir).with_context(|| format!("writing records to {}", dir.display()))?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    emit(&serde_json::to_string_pretty(&rec.summary)?)
}

/// Print a line, reporting a closed stdout as an error instead of panicking.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    writeln!(std::io::stdout().lock(), "{text}").context("writing to stdout")
}

fn read_deltas(path: &Path) -> Result<DeltaRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let record = if value.is_array() {
        DeltaRecord { mu: None, seed: None, provenance: vec![], deltas: serde_json::from_value(value)? }
    } else {
        serde_json::from_value(value)?
    };
    Ok(record)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrotterSweep(args) => write_record(&run_trotter_sweep(&args.config())?, &cli.out_dir),
        Command::NoiseFloor(args) => {
            let table = NoiseTable::from_path(&args.noise_table)
                .with_context(|| format!("loading noise table {}", args.noise_table.display()))?;
            let strengths = if args.strengths.is_empty() {
                table.entries.iter().map(|e| e.noise_strength).collect()
            } else {
                args.strengths
            };
            let config = NoiseFloorConfig { sweep: args.sweep.config(), noise_table: table, noise_strengths: strengths, runs: args.runs };
            write_record(&run_noise_floor_sweep(&config)?, &cli.out_dir)
        }
        Command::QubitHistogram(args) => {
            let config = QubitHistogramConfig {
                model: args.model,
                n: args.n,
                seed: args.seed,
                mus: args.mu,
                strategies: args.strategies,
                runs: args.runs,
                q: args.q,
                draws: args.draws,
                attempts_per_m: args.attempts_per_m,
                max_extra_m: args.max_extra_m,
            };
            write_record(&run_qubitisation_histogram(&config)?, &cli.out_dir)
        }
        Command::VaryM(args) => {
            let config = VaryMConfig {
                model: args.model,
                n_values: args.n,
                seed: args.seed,
                mu: args.mu,
                m_max: args.m_max,
                runs: args.runs,
                q: args.q,
                max_order: args.max_order,
            };
            write_record(&run_vary_m(&config)?, &cli.out_dir)
        }
        Command::SolveLambda(args) => {
            let deltas = read_deltas(&args.deltas)?.delta_matrix()?;
            let (x, b) = design_matrix(&deltas, args.p)?;
            let weights = match args.regime {
                SolveRegime::MinL2 => solve_lambda_min_l2(&x, &b, args.rank_tol)?,
                SolveRegime::Nonnegative => solve_lambda_nonnegative(&x, &b)?,
                SolveRegime::Exact => solve_lambda_exact(&x, &b)?,
            }
            .with_delta_hash(&deltas);
            emit(&serde_json::to_string_pretty(&json!({ "p": args.p, "weights": weights }))?)
        }
        Command::PeBudget(args) => {
            let structure = match args.structure {
                Structure::Generic => DeltaStructure::Generic,
                Structure::SumZero => DeltaStructure::SumZero,
            };
            let calls = pe_call_budget(args.n, args.p, args.beta, structure)?;
            emit(&json!({ "n": args.n, "p": args.p, "beta": args.beta, "pe_calls": calls }).to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        if let Some(t) = cli.threads {
            if t == 0 {
                bail!("--threads must be positive");
            }
            rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
        }
        run(cli)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
