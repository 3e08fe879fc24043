use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sunbloch::alloc::{self, TrackingAllocator};
use sunbloch::cli::{self, Overrides};
use sunbloch::config::RunConfig;
use sunbloch::error::{ConfigError, Error, Result};
use sunbloch::structure::TensorKind;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser)]
#[command(name = "sunbloch", version, about = "Sparse SU(N) Bloch-equation solver")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for structure-constant cache files.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Skip the cache and assemble from per-row slices.
    #[arg(long, global = true)]
    on_the_fly: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one model and write trajectory and final state.
    Propagate,
    /// Sweep one model parameter.
    Scan,
    /// Compare every stage against dense references (N <= 16).
    Validate,
    /// Time the four pipeline steps over a range of sizes.
    Bench,
    /// Generate or verify cache files.
    Cache {
        #[arg(long)]
        n: usize,
        /// Comma-separated subset of f, d, z.
        #[arg(long, default_value = "f,d,z")]
        kinds: String,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::from(ConfigError::Validation("--config is required for this command".into())))?;
    let mut cfg = RunConfig::load(path)?;
    Overrides {
        cache_dir: cli.cache_dir.clone(),
        on_the_fly: cli.on_the_fly,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Propagate => {
            let cfg = load_config(cli)?;
            let s = cli::cmd_propagate(&cfg)?;
            println!(
                "{} steps, {} rows -> {}, final state -> {}",
                s.report.steps,
                s.trajectory_rows,
                cfg.output.trajectory.display(),
                cfg.output.final_state.display()
            );
            if s.report.purity_violations > 0 {
                println!(
                    "warning: purity exceeded 1 at {} observations (max excess {:.3e})",
                    s.report.purity_violations, s.report.max_purity_excess
                );
            }
            Ok(true)
        }
        Command::Scan => {
            let cfg = load_config(cli)?;
            let s = cli::cmd_scan(&cfg)?;
            println!("{} points -> {}", s.values.len(), cfg.output.scan.display());
            Ok(true)
        }
        Command::Validate => {
            let cfg = load_config(cli)?;
            let report = cli::cmd_validate(&cfg)?;
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", c.name, c.detail);
            }
            Ok(report.passed())
        }
        Command::Bench => {
            let cfg = load_config(cli)?;
            let report = cli::cmd_bench(&cfg)?;
            for r in &report.rows {
                println!(
                    "N={:<5} {:<15} {:>12.6} s {:>14} B",
                    r.n, r.step, r.seconds, r.peak_bytes
                );
            }
            for (step, memory) in [("preparation", false), ("integration", false), ("preparation", true)] {
                for (a, b, e) in report.exponents(step, memory) {
                    let what = if memory { "memory" } else { "time" };
                    println!("{step} {what} exponent {a}->{b}: {e:.2}");
                }
            }
            if let Some(rss) = alloc::os_peak_rss() {
                println!("process peak RSS: {rss} B");
            }
            println!("-> {}", cfg.output.bench.display());
            Ok(true)
        }
        Command::Cache { n, kinds } => {
            let kinds = kinds
                .split(',')
                .map(|k| {
                    let k = k.trim();
                    let mut chars = k.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => TensorKind::from_tag(c),
                        _ => None,
                    }
                    .ok_or_else(|| {
                        Error::from(ConfigError::InvalidValue {
                            key: "--kinds".into(),
                            message: format!("unknown tensor kind '{k}'"),
                        })
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let dir = match &cli.cache_dir {
                Some(d) => d.clone(),
                None => match &cli.config {
                    Some(_) => load_config(cli)?.cache.dir.unwrap_or_else(|| PathBuf::from("cache")),
                    None => PathBuf::from("cache"),
                },
            };
            let report = cli::cmd_cache(*n, &kinds, &dir)?;
            for p in &report.written {
                println!("wrote {}", p.display());
            }
            for p in &report.reused {
                println!("valid {}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
