mod config;
mod record;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Config, Kind};
use record::RunRecord;
use run::RunError;

/// Filling-volume experiments on products of trees and their horospheres.
#[derive(Parser)]
#[command(name = "horofill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write results.json plus CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; HOROFILL_OUT and the config's [output] dir are fallbacks.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for instance-level parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        cap_cells: Option<usize>,
        /// Largest LP accepted, in columns.
        #[arg(long)]
        cap_lp_iters: Option<usize>,
    },
    /// List experiment kinds.
    List {
        /// Include each kind's parameters.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Re-run a recorded experiment and check that it reproduces exactly.
    Audit {
        record: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn exit_code(e: &RunError) -> u8 {
    match e {
        RunError::Config(_) => 2,
        RunError::Capacity { .. } => 3,
        RunError::Core(_) | RunError::Io(_) => 4,
    }
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(j) = jobs {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
}

fn execute(cfg: &Config) -> Result<(RunRecord, Vec<run::Table>), RunError> {
    let start = Instant::now();
    let out = run::execute(cfg)?;
    let passed = out.assertions.iter().all(|a| a.passed);
    let record = RunRecord {
        config_hash: record::config_hash(cfg),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.name().to_string(),
        seed: cfg.seed,
        config: toml::to_string(cfg).expect("config serializes"),
        instances: out.instances,
        summary: out.summary,
        assertions: out.assertions,
        passed,
        wall_clock_ms: start.elapsed().as_millis(),
    };
    Ok((record, out.tables))
}

fn report(record: &RunRecord) {
    for a in &record.assertions {
        let verdict = if a.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {} {}", a.name, a.detail);
    }
}

fn read(path: &PathBuf) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<bool, RunError> {
    match cli.command {
        Command::List { verbose } => {
            for k in Kind::ALL {
                println!("{:<14} {}", k.name(), k.summary());
                if verbose {
                    println!("{}\n", k.params());
                }
            }
            Ok(true)
        }
        Command::Run { config, out, seed, jobs, cap_cells, cap_lp_iters } => {
            set_jobs(jobs);
            let text = read(&config)?;
            // overrides go in before validation so a --seed satisfies the seed rule
            let mut value: toml::Table =
                toml::from_str(&text).map_err(|e| RunError::Config(config::ConfigError::Schema(e.message().into())))?;
            if let Some(s) = seed {
                value.insert("seed".into(), toml::Value::Integer(s as i64));
            }
            let caps = value.entry("caps").or_insert_with(|| toml::Value::Table(Default::default()));
            if let Some(caps) = caps.as_table_mut() {
                if let Some(c) = cap_cells {
                    caps.insert("max_cells".into(), toml::Value::Integer(c as i64));
                }
                if let Some(c) = cap_lp_iters {
                    caps.insert("max_lp_iters".into(), toml::Value::Integer(c as i64));
                }
            }
            let cfg = Config::parse(&toml::to_string(&value).expect("table serializes"))?;
            let dir = out
                .or_else(|| std::env::var_os("HOROFILL_OUT").map(PathBuf::from))
                .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results"));
            let (record, tables) = execute(&cfg)?;
            record::write(&dir, &record, &tables)?;
            report(&record);
            println!("wrote {}", dir.join("results.json").display());
            Ok(record.passed)
        }
        Command::Audit { record, jobs } => {
            set_jobs(jobs);
            let old: RunRecord = serde_json::from_str(&read(&record)?)
                .map_err(|e| RunError::Io(format!("{}: {e}", record.display())))?;
            let cfg = Config::parse(&old.config)?;
            let (new, _) = execute(&cfg)?;
            let same = old.reproducible_part() == new.reproducible_part();
            println!(
                "{} {} (config {})",
                if same { "REPRODUCED" } else { "DIFFERS" },
                record.display(),
                &old.config_hash[..12]
            );
            Ok(same)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
