use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use burgers_rom::pipeline::{self, PipelineConfig, Workspace};
use burgers_rom::rom::Method;
use burgers_rom::Error;

#[derive(Parser)]
#[command(name = "burgers-rom", version, about = "Reduced-order models for 1D viscous Burgers")]
struct Cli {
    /// JSON configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default configuration as JSON.
    Defaults,
    /// Sample the analytical solution and its nonlinear term.
    Snapshots,
    /// Build the POD basis from the state snapshots.
    Pod,
    /// Select DEIM points and build the reduced projector.
    Deim,
    /// Train the LSTM surrogate on the DEIM coefficient series.
    Train,
    /// Integrate one model.
    Run {
        #[arg(long, value_enum)]
        method: MethodArg,
    },
    /// Run GP, DEIM and ML and tabulate accuracy and cost.
    Compare,
    /// Write the per-step cost model.
    Cost,
    /// Every stage from snapshots to compare.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fom,
    Gp,
    Deim,
    Ml,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fom => Method::Fom,
            MethodArg::Gp => Method::Gp,
            MethodArg::Deim => Method::Deim,
            MethodArg::Ml => Method::Ml,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::Diverged { .. } | Error::TrainingDiverged { .. } | Error::NumericOverflow { .. } => 3,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> burgers_rom::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> burgers_rom::Result<()> {
    let cfg = load_config(&cli)?;
    if let Command::Defaults = cli.command {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    let ws = Workspace::new(cfg)?;
    match cli.command {
        Command::Defaults => unreachable!(),
        Command::Snapshots => {
            let s = pipeline::cmd_snapshots(&ws)?;
            println!("wrote {} snapshots of {} nodes to {}", s.n_snapshots(), s.states.nrows(), ws.dir.display());
        }
        Command::Pod => {
            let b = pipeline::cmd_pod(&ws)?;
            println!("retained {} modes; leading singular value {:.6e}", b.n_retained, b.singular_values[0]);
        }
        Command::Deim => {
            let d = pipeline::cmd_deim(&ws)?;
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "selected {} DEIM points; condition number {:.3e}",
                d.operator.n_points, d.operator.condition_number
            );
        }
        Command::Train => {
            let f = pipeline::cmd_train(&ws)?;
            println!(
                "trained {} epochs; best validation MSE {:.6e} at epoch {}",
                f.history.epochs.len(),
                f.history.best_val_mse(),
                f.history.best_epoch
            );
        }
        Command::Run { method } => {
            let t = pipeline::cmd_run(&ws, method.into())?;
            println!("{}: integrated {} steps", t.method, t.coeffs.ncols() - 1);
        }
        Command::Compare => print!("{}", pipeline::cmd_compare(&ws)?.table),
        Command::Cost => {
            for c in pipeline::cmd_cost(&ws)? {
                println!(
                    "{:<5} flops/step {:>10}  nonlinear evals/step {:>5}",
                    c.method.tag(),
                    c.flops_per_step,
                    c.nonlinear_evals_per_step
                );
            }
        }
        Command::All => print!("{}", pipeline::cmd_all(&ws)?.table),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
