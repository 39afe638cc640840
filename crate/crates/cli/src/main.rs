use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locev_cli::config::Kind;
use locev_cli::demo::{run_demo, Demo};
use locev_cli::{parse_config, run, CliError};

#[derive(Parser)]
#[command(name = "locev", version, about = "Localizing events on lattice bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for data-parallel sections (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Continuum collapse of a Gaussian wavefunction
    Collapse(RunArgs),
    /// Continuum random momentum kick
    Kick(RunArgs),
    /// Exact master-equation run on a lattice
    Master(RunArgs),
    /// Quantum-trajectory ensemble on a lattice
    Trajectories(RunArgs),
    /// Single-particle density matrix in a trap or ring
    Spdm(RunArgs),
    /// Damping estimate against lattice depth
    Rates(RunArgs),
    /// Parameter sweep (damping-sweep or rates-sweep), points run in parallel
    Sweep(RunArgs),
    /// Built-in reproductions of closed-form values
    Demo {
        #[arg(value_enum)]
        name: Demo,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,

    /// CSV output path; overrides the config
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed; overrides the config
    #[arg(long)]
    seed: Option<u64>,
}

fn accepts(command: &Command, kind: Kind) -> bool {
    matches!(
        (command, kind),
        (Command::Collapse(_), Kind::Collapse)
            | (Command::Kick(_), Kind::Kick)
            | (Command::Master(_), Kind::Master)
            | (Command::Trajectories(_), Kind::Trajectories)
            | (Command::Spdm(_), Kind::Spdm)
            | (Command::Rates(_), Kind::RatesSweep)
            | (Command::Sweep(_), Kind::DampingSweep | Kind::RatesSweep)
    )
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let args = match &cli.command {
        Command::Demo { name } => {
            let mut ok = true;
            for report in run_demo(*name)? {
                println!("== {}", report.name);
                for line in &report.lines {
                    println!("{line}");
                }
                for c in &report.checks {
                    println!(
                        "  [{}] {} = {:.6e} ({} {:.1e})",
                        if c.pass { "ok" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.relation,
                        c.tolerance
                    );
                }
                ok &= report.passed();
            }
            return Ok(ok);
        }
        Command::Collapse(a)
        | Command::Kick(a)
        | Command::Master(a)
        | Command::Trajectories(a)
        | Command::Spdm(a)
        | Command::Rates(a)
        | Command::Sweep(a) => a,
    };
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = parse_config(&text).map_err(CliError::Config)?;
    if !accepts(&cli.command, config.kind) {
        return Err(CliError::Config(vec![format!(
            "config kind \"{}\" does not match this subcommand",
            config.kind.name()
        )]));
    }
    if let Some(out) = &args.out {
        config.output = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let record = run::run(&config)?;
    println!(
        "{}: {} rows -> {} ({:.3} s, config {})",
        record.kind,
        record.rows,
        record.csv,
        record.duration_seconds,
        &record.config_hash[..12]
    );
    for c in record.failures() {
        eprintln!("invariant {} = {:.3e} violates {} {:.1e}", c.name, c.value, c.relation, c.tolerance);
    }
    Ok(record.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot build thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
