//! `qsplit`: runs the split-circuit experiments from TOML configs or flags
//! and writes versioned CSV/JSON artifacts into an output directory.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "qsplit", version, about = "Classically split parametrized circuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "QSPLIT_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Variance of ΔC or ∂C/∂θ₀ over a grid of (N, m, L, T) cells.
    BpScan,
    /// Monte-Carlo checks of Haar moments and trace identities.
    HaarVerify(commands::HaarArgs),
    /// Generate the hypercube or CE-labelled quantum dataset.
    GenDataset(commands::DatasetArgs),
    /// Train split-circuit classifiers over several seeds.
    TrainClassify(commands::ClassifyArgs),
    /// SPSA ground-state search for the transverse-field Ising chain.
    Vqe(commands::VqeArgs),
    /// Route circuits onto square grids and count two-qubit gates.
    TranspileCount(commands::TranspileArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BpScan => "bp-scan",
            Command::HaarVerify(_) => "haar-verify",
            Command::GenDataset(_) => "gen-dataset",
            Command::TrainClassify(_) => "train-classify",
            Command::Vqe(_) => "vqe",
            Command::TranspileCount(_) => "transpile-count",
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(w) = cli.common.workers {
        if w == 0 {
            return Err(Failure::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let name = cli.command.name();
    let c = &cli.common;
    match cli.command {
        Command::BpScan => commands::bp_scan(name, c),
        Command::HaarVerify(a) => commands::haar_verify(name, c, &a),
        Command::GenDataset(a) => commands::gen_dataset(name, c, &a),
        Command::TrainClassify(a) => commands::train_classify(name, c, &a),
        Command::Vqe(a) => commands::vqe(name, c, &a),
        Command::TranspileCount(a) => commands::transpile_count(name, c, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = json!({ "error": { "kind": "config", "message": e.to_string().trim_end() } });
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": { "kind": f.kind(), "message": f.to_string() } }));
            ExitCode::from(f.exit_code())
        }
    }
}
