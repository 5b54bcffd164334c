use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lie_currents::mapping::{named_loop, NAMED_LOOPS};
use lie_currents::verify::{self, RunConfig, Status, SUITES};
use lie_currents::Error;

/// Runs the lie-currents verification suites and emits JSON reports.
#[derive(Parser)]
#[command(name = "currents-verify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute suites from a JSON config; flags override the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Print suite ids with the results they exercise.
    ListSuites,
    /// Serialize a named grid loop.
    DumpGridmap {
        id: String,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, seed, out, suites } => run(config, seed, out, suites),
        Command::ListSuites => {
            for s in SUITES {
                println!("{:<30} {}", s.id, s.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::DumpGridmap { id, n, out, format } => match dump(&id, n, &out, format) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                if matches!(e, Error::UnknownId(_)) {
                    eprintln!("known ids: {}", NAMED_LOOPS.join(", "));
                }
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}

fn load_config(path: &PathBuf, seed: Option<u64>, suites: Vec<String>) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = RunConfig::from_json_str(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !suites.is_empty() {
        cfg.suites = suites;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>, suites: Vec<String>) -> ExitCode {
    let cfg = match load_config(&config, seed, suites) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error in {}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let report = match verify::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    for r in &report.records {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::ObstructedAsExpected => "obstructed-as-expected",
        };
        eprintln!(
            "{status:<23} {}/{} residual={:e} tol={:e} ({:.0} ms)",
            r.suite, r.check_name, r.max_residual, r.tolerance, r.wall_time_ms
        );
        if let Some(e) = &r.error {
            eprintln!("    error: {e}");
        }
    }
    let text = serde_json::to_string_pretty(&report.to_json()).expect("reports serialize");
    let written = match out.or_else(|| cfg.output.report.clone()) {
        Some(path) => std::fs::write(&path, text + "\n"),
        None => {
            println!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("cannot write report: {e}");
        return ExitCode::from(EXIT_FAIL);
    }
    if let Some(dir) = &cfg.output.csv_dir {
        if let Err(e) = verify::write_csv_dumps(dir, 64, &report) {
            eprintln!("cannot write CSV dumps: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    }
    if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn dump(id: &str, n: usize, out: &PathBuf, format: Format) -> Result<(), Error> {
    let g = named_loop(id, n)?;
    let text = match format {
        Format::Csv => g.to_csv()?,
        Format::Json => serde_json::to_string_pretty(&g.to_json())? + "\n",
    };
    std::fs::write(out, text)?;
    Ok(())
}
