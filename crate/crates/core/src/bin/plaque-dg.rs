use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plaque_dg::app::{cmd_compare_fluxes, cmd_eoc, cmd_run, cmd_scale, AppError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "plaque-dg", version, about = "Discontinuous Galerkin solver for plaque formation models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration to the final time.
    Run(Flags),
    /// Convergence table over orders and refinement levels.
    Eoc(Flags),
    /// Error and cost of every diffusion flux on the same problem.
    CompareFluxes(Flags),
    /// Strong scaling over thread counts for a fixed number of steps.
    Scale(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $PLAQUE_DG_OUT or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mesh refinement level (run, scale) or finest level (eoc, compare-fluxes).
    #[arg(long)]
    level: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    /// cdg2, cdg, br2, ip or bo.
    #[arg(long)]
    flux: Option<String>,
}

fn load(flags: &Flags) -> Result<RunConfig, AppError> {
    let mut cfg = match &flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml("", None)?,
    };
    let ov = Overrides {
        threads: flags.threads,
        out: flags.out.clone(),
        level: flags.level,
        order: flags.order,
        flux: flags.flux.clone(),
    };
    ov.apply(&mut cfg)?;
    Ok(cfg)
}

fn execute(cmd: &Command) -> Result<(), AppError> {
    match cmd {
        Command::Run(f) => {
            let r = cmd_run(&load(f)?)?;
            println!("{} steps to t = {:.6e}; outputs in {}", r.steps, r.t, r.out_dir.display());
            if let Some(e) = r.l2_error {
                println!("L2 error {e:.6e}");
            }
        }
        Command::Eoc(f) => {
            let r = cmd_eoc(&load(f)?)?;
            for (k, rows) in &r.tables {
                for row in rows {
                    let err = row.error.map_or("failed".to_string(), |e| format!("{e:.4e}"));
                    let eoc = row.eoc.map_or("---".to_string(), |e| format!("{e:.4}"));
                    println!("k={k} level={} elements={} error={err} eoc={eoc}", row.level, row.elements);
                }
            }
            println!("tables in {}", r.out_dir.display());
        }
        Command::CompareFluxes(f) => {
            let r = cmd_compare_fluxes(&load(f)?)?;
            for fr in &r.rows {
                let err = fr.row.error.map_or("failed".to_string(), |e| format!("{e:.4e}"));
                println!("{} level={} error={err} cpu={:.3}s", fr.flux, fr.row.level, fr.row.cpu);
            }
            println!("comparison in {}", r.out_dir.display());
        }
        Command::Scale(f) => {
            let r = cmd_scale(&load(f)?)?;
            for row in &r.rows {
                println!("threads={} time={:.3}s speedup={:.2}", row.threads, row.wall, row.speedup);
            }
            println!("bitwise identical: {}; table in {}", r.bitwise_identical, r.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors; bad arguments are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
