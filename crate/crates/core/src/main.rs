use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_fup::harness::{
    emit_report, load_summary, run_experiment, write_outputs, Experiment, ExperimentConfig, Format, Scale,
};

#[derive(Parser)]
#[command(name = "cantor-fup", version, about = "Random Cantor sets, Fourier decay and FUP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build ensemble members and dump their intervals.
    Construct(RunArgs),
    /// Sample Fourier decay and fit window maxima.
    Decay(RunArgs),
    /// Discrete DFT-submatrix norms across scales.
    FupDiscrete(RunArgs),
    /// Measure-operator norms across scales.
    FupMeasure(RunArgs),
    /// Neighborhood-operator norms across scales.
    FupNeighborhood(RunArgs),
    /// Monte Carlo concentration and Bernstein checks.
    Concentration(RunArgs),
    /// Run the full acceptance panel.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Reduced sample counts.
        #[arg(long)]
        quick: bool,
    },
    /// Re-emit a stored summary.json.
    Report {
        summary: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn config(&self, experiment: Experiment) -> cantor_fup::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::from_file(path)?;
                if cfg.experiment != experiment {
                    return Err(cantor_fup::Error::InvalidParameter(format!(
                        "config declares experiment `{}`, command is `{}`",
                        cfg.experiment.name(),
                        experiment.name()
                    )));
                }
                cfg
            }
            None => {
                let seed = self.master_seed.ok_or_else(|| {
                    cantor_fup::Error::InvalidParameter("--master-seed is required without --config".into())
                })?;
                ExperimentConfig::new(experiment, seed)
            }
        };
        if let Some(s) = self.master_seed {
            cfg.master_seed = s;
        }
        if let Some(n) = self.seeds {
            cfg.seeds = n;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: &RunArgs, experiment: Experiment, quick: bool) -> cantor_fup::Result<bool> {
    let mut cfg = args.config(experiment)?;
    if quick {
        cfg.scale = Scale::Quick;
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let summary = run_experiment(&cfg)?;
    match &args.out {
        Some(dir) => {
            for path in write_outputs(&summary, dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => print!("{}", emit_report(&summary, Format::Json)?),
    }
    for c in &summary.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(summary.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(a) => run(a, Experiment::Construct, false),
        Command::Decay(a) => run(a, Experiment::Decay, false),
        Command::FupDiscrete(a) => run(a, Experiment::FupDiscrete, false),
        Command::FupMeasure(a) => run(a, Experiment::FupMeasure, false),
        Command::FupNeighborhood(a) => run(a, Experiment::FupNeighborhood, false),
        Command::Concentration(a) => run(a, Experiment::Concentration, false),
        Command::Verify { run: a, quick } => run(a, Experiment::Verify, *quick),
        Command::Report { summary, format } => format
            .parse::<Format>()
            .and_then(|f| emit_report(&load_summary(summary)?, f))
            .map(|doc| {
                print!("{doc}");
                true
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
