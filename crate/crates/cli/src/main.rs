use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use matdyn_cli::config::CONFIG_SCHEMA;
use matdyn_cli::{
    load_config, repro, run_experiment, Experiment, ExperimentConfig, RunError, RunOutput,
};

const AFTER_HELP: &str = "\
Exit status: 0 on success, 1 on a configuration error, 2 on a numerical
failure. Partial output of a failed run is flagged by a `<name>.failed` file
in the output directory.

CSV files (header row, floats with 17 significant digits):
  trajectory.csv   t, I, Y, F, M, regime
  equilibria.csv   label, I, Y, F, M, region, stability, admissible, residual,
                   spectral_abscissa
  thresholds.csv   alpha, yp_star, yp_dstar, yp_dstar_tilde, tangency_I
  bifurcation.csv  yp, label, yf_value, stability
  basins.csv       coord1, coord2, label
  bounds.csv       ic, I0, Y0, F0, M0, holds, max_excess, worst_time,
                   worst_component, times_checked
repro trajectory sets prepend an `ic` column to the trajectory schema.";

#[derive(Parser)]
#[command(name = "matdyn", version, about = "Pest population dynamics under mating disruption and trapping", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; defaults apply to every omitted field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and basin grids (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one system variant from `simulate.initial_state`.
    Simulate,
    /// List the equilibria of the switched model with their stability.
    Equilibria,
    /// Sweep the lure thresholds over `thresholds.alphas`.
    Thresholds,
    /// Equilibrium branches against the lure strength.
    Bifurcation,
    /// Attractor labels on a grid of initial states.
    Basins,
    /// Check the switched solution stays below the auxiliary monotone one.
    VerifyBounds,
    /// Run the experiment named by the config's `experiment` field.
    Run,
    /// Reproduce a reference experiment; run without an id to list them.
    Repro { id: Option<String> },
    /// Print the configuration JSON schema.
    Schema,
    /// Print the effective configuration.
    Config,
}

fn report(result: Result<RunOutput, RunError>) -> ExitCode {
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, RunError> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return report(Err(e)),
    };
    let experiment = match cli.command {
        Command::Schema => {
            print!("{CONFIG_SCHEMA}");
            return ExitCode::SUCCESS;
        }
        Command::Config => {
            println!("{}", cfg.to_json());
            return ExitCode::SUCCESS;
        }
        Command::Repro { id: None } => {
            println!("available ids: {}", repro::IDS.join(", "));
            return ExitCode::SUCCESS;
        }
        Command::Repro { id: Some(id) } => return report(repro::run(&id, &cli.out, cfg.plots)),
        Command::Run => match cfg.experiment {
            Some(e) => e,
            None => {
                eprintln!("error: the config has no `experiment` field");
                return ExitCode::from(1);
            }
        },
        Command::Simulate => Experiment::Simulate,
        Command::Equilibria => Experiment::Equilibria,
        Command::Thresholds => Experiment::Thresholds,
        Command::Bifurcation => Experiment::Bifurcation,
        Command::Basins => Experiment::Basins,
        Command::VerifyBounds => Experiment::VerifyBounds,
    };
    report(run_experiment(&cfg, experiment, &cli.out))
}
