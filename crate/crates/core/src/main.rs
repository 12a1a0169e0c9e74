use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weylflow::config::{Command, ExperimentConfig};
use weylflow::harness::{emit_report, emit_run, read_report, run_experiment};
use weylflow::{Error, Result};

#[derive(Parser)]
#[command(name = "weylflow", version, about = "Weyl-harmonic map flows and identity checks on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `N` for every axis or `N1,N2,...` per axis.
    #[arg(long)]
    grid_override: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the heat flow, then the configured checks on the final map.
    Flow(RunArgs),
    /// Run the configured checks on the initial map.
    Verify(RunArgs),
    /// Solve for the Gauduchon gauge of the configured structure.
    Gauduchon(RunArgs),
    /// Higgs class, rank profile and curvature-condition spectrum.
    Classify(RunArgs),
    /// Abelian subspace table for the configured (or default) algebras.
    Abelian {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-emit the files of an existing report.json.
    Report {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the configuration JSON schema.
    Schema,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("WEYLFLOW_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("WEYLFLOW_THREADS='{v}' is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(g) = &args.grid_override {
        cfg.override_grid(g)?;
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig, command: Command, out: Option<PathBuf>) -> Result<i32> {
    let run = run_experiment(cfg, command)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    emit_run(&run, &dir)?;
    for w in &run.report.warnings {
        eprintln!("warning: {w}");
    }
    for e in &run.report.errors {
        eprintln!("error: {e}");
    }
    if let Some(f) = &run.report.flow {
        println!(
            "{}: {:?} after {} steps, t = {:.6}, E = {:.10}, sup|tau| = {:e}",
            command.name(),
            f.outcome,
            f.steps,
            f.final_time,
            f.final_energy,
            f.final_sup_tension
        );
    }
    for r in &run.report.residuals {
        println!("{}: sup {:e}, l2 {:e}", r.identity, r.sup_residual, r.l2_residual);
    }
    for r in &run.report.abelian {
        println!("{}: nu = {}, rank bound {}, certified {}", r.algebra, r.nu, r.rank_bound, r.certified);
    }
    println!("wrote {}", dir.display());
    Ok(run.report.exit_code())
}

fn real_main() -> Result<i32> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Cmd::Flow(a) => execute(&load(&a)?, Command::Flow, a.out),
        Cmd::Verify(a) => execute(&load(&a)?, Command::Verify, a.out),
        Cmd::Gauduchon(a) => execute(&load(&a)?, Command::Gauduchon, a.out),
        Cmd::Classify(a) => execute(&load(&a)?, Command::Classify, a.out),
        Cmd::Abelian { config, out, seed } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_path(&p)?,
                None => ExperimentConfig::from_json("{}")?,
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            execute(&cfg, Command::Abelian, out)
        }
        Cmd::Report { from, out } => {
            let report = read_report(&from)?;
            emit_report(&report, &out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Cmd::Schema => {
            println!("{}", ExperimentConfig::schema());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
