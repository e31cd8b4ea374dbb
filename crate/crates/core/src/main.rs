use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use svp::harness::config::{Experiment, RunConfig};
use svp::harness::execute;
use svp::SvpError;

#[derive(Parser)]
#[command(version, about = "Screened Vlasov-Poisson near vacuum: simulations, decay oracles and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `run.out`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `run.threads`)
    #[arg(long, env = "SVP_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve initial data and record diagnostics
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Continue from a saved checkpoint
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Check decay rates of the frozen-profile field against closed forms
    LinearOracle {
        #[command(flatten)]
        common: Common,
    },
    /// Cauchy differences of saved snapshots at dyadic times
    ScatterAnalyze {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the screened Green kernel
    GreenTable {
        #[command(flatten)]
        common: Common,
    },
}

fn fail(e: &SvpError) -> ExitCode {
    let body = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    eprintln!("{body}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common, resume) = match cli.command {
        Command::Simulate { common, resume } => (Experiment::Simulate, common, resume),
        Command::LinearOracle { common } => (Experiment::LinearOracle, common, None),
        Command::ScatterAnalyze { common } => (Experiment::ScatterAnalyze, common, None),
        Command::GreenTable { common } => (Experiment::GreenTable, common, None),
    };
    let cfg = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(SvpError::Io(e)) => return fail(&SvpError::Config(format!("cannot read {}: {e}", common.config.display()))),
        Err(e) => return fail(&e),
    };
    if cfg.run.experiment != experiment {
        return fail(&SvpError::Config(format!(
            "subcommand `{}` does not match run.experiment = \"{}\"",
            experiment.name(),
            cfg.run.experiment.name()
        )));
    }
    let threads = common.threads.unwrap_or(cfg.run.threads);
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            return fail(&SvpError::Config(format!("thread pool: {e}")));
        }
    }
    let out = common.out.unwrap_or_else(|| PathBuf::from(&cfg.run.out));
    let base = common.config.parent().unwrap_or(Path::new("."));
    match execute(&cfg, &out, base, resume.as_deref()) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
