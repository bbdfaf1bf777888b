use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use elk_cli::report::report;
use elk_cli::run::{run, version, RunOptions};
use elk_cli::scenario::load_scenario;

#[derive(Parser)]
#[command(name = "elk", version = version(), about = "Electrolyte transport with an entropy audit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write snapshots, the audit log and metadata.
    Run {
        scenario: PathBuf,
        /// Exit with status 3 on the first entropy audit violation.
        #[arg(long)]
        strict_audit: bool,
        /// Run even when the scaling regime is not electrostatic.
        #[arg(long)]
        force: bool,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a finished run directory.
    Report { dir: PathBuf },
    /// Check a scenario and print its warnings.
    Validate { scenario: PathBuf },
    /// Print the scaling regime of a scenario.
    Classify { scenario: PathBuf },
}

fn threads() {
    let Ok(v) = std::env::var("ELK_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                error!("cannot size the thread pool: {}", e);
            }
        }
        _ => error!("ignoring ELK_THREADS={:?}, expected a positive integer", v),
    }
}

fn load(path: &PathBuf) -> Result<(elk_cli::Scenario, elk_cli::Prepared), ExitCode> {
    load_scenario(path).map_err(|e| {
        eprintln!("{}: {}", path.display(), e);
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    threads();
    match cli.command {
        Command::Run {
            scenario,
            strict_audit,
            force,
            out,
        } => {
            let (s, prepared) = match load(&scenario) {
                Ok(v) => v,
                Err(c) => return c,
            };
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&s.name));
            let opts = RunOptions {
                strict_audit,
                force,
                out,
            };
            match run(&s, &prepared, &opts) {
                Ok(meta) => {
                    println!(
                        "completed {} steps to t = {:e}; {} snapshots in {}",
                        meta.steps,
                        meta.final_time,
                        meta.snapshots.len(),
                        opts.out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", e);
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Report { dir } => match report(&dir) {
            Ok(r) => {
                print!("{}", r);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}", e);
                ExitCode::from(1)
            }
        },
        Command::Validate { scenario } => match load(&scenario) {
            Ok((s, p)) => {
                println!("{}: valid ({} species, {} cells)", s.name, s.species.len(), s.domain.cells);
                for w in &p.warnings {
                    println!("warning {}", w);
                }
                ExitCode::SUCCESS
            }
            Err(c) => c,
        },
        Command::Classify { scenario } => {
            let text = match std::fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {}", scenario.display(), e);
                    return ExitCode::from(1);
                }
            };
            let s = match elk_cli::parse_scenario(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {}", scenario.display(), e);
                    return ExitCode::from(1);
                }
            };
            let Some(spec) = &s.scaling else {
                eprintln!("{}: no scaling section", scenario.display());
                return ExitCode::from(1);
            };
            match spec.regime() {
                Ok(r) => {
                    println!("{:?}", r.regime);
                    println!("delta_rho = {:e}", r.delta_rho);
                    println!("delta_i = {:e}", r.delta_i);
                    println!("delta_v = {:e}", r.delta_v);
                    println!("delta_w = {:e}", r.delta_w);
                    println!("alpha = {}", r.alpha);
                    println!("delta_v/delta_w = {:e}", r.velocity_ratio());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}", e);
                    ExitCode::from(1)
                }
            }
        }
    }
}
