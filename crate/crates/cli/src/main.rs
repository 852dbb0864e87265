use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracsim_cli::ensemble::report;
use fracsim_cli::{run_single, run_uq, CliError, RunConfig, SimulationModel, UqOptions};
use fracsim_pcuq::RuleKind;

#[derive(Parser)]
#[command(name = "fracsim", version, about = "Reactive flow in fractured porous media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its snapshots.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir or `<config stem>-out`.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a sparse-grid ensemble and write its statistics.
    Uq {
        config: PathBuf,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, value_parser = ["cc", "gp"])]
        rule: Option<String>,
        /// Parallel model runs.
        #[arg(long, env = "FRACSIM_JOBS")]
        jobs: Option<usize>,
        /// Skip nodes already completed in an existing manifest.
        #[arg(long)]
        resume: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Recompute the statistics of a finished ensemble.
    Report { manifest: PathBuf },
}

fn output_dir(config: &RunConfig, path: &Path, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| config.output_dir.clone()).unwrap_or_else(|| {
        let stem = path
            .file_stem()
            .map_or("fracsim".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{stem}-out"))
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let c = RunConfig::load(&config)?;
            let dir = output_dir(&c, &config, output);
            let summary = run_single(&c, &dir)?;
            println!("{} snapshots written to {}", summary.snapshots.len(), dir.display());
            if let Some(r) = summary.min_fracture_permeability_ratio {
                println!("smallest final/initial fracture permeability: {r:.4}");
            }
        }
        Command::Uq {
            config,
            level,
            rule,
            jobs,
            resume,
            output,
        } => {
            let c = RunConfig::load(&config)?;
            let dir = output_dir(&c, &config, output);
            let opts = UqOptions {
                level,
                rule: rule.as_deref().map(RuleKind::parse).transpose()?,
                jobs,
                resume,
            };
            let model = SimulationModel::new(&c)?;
            let outcome = run_uq(&c, &opts, &model, &model.mesh, &dir)?;
            println!(
                "{} nodes ({} run now), {} modes; results in {}",
                outcome.manifest.nodes.len(),
                outcome.executed,
                outcome.aggregate.projector.basis.len(),
                dir.join("uq").display()
            );
        }
        Command::Report { manifest } => {
            let agg = report(&manifest)?;
            println!("aggregated {} nodes", agg.projector.num_nodes());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
