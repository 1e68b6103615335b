use std::path::PathBuf;
use std::process::ExitCode;

use aclab_cli::config::scenario_to_config;
use aclab_cli::{run, RunConfig};
use aclab_core::scenarios::corpus;
use clap::{Parser, Subcommand};
use serde_json::json;

const EXIT_ANALYSIS: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "aclab", version, about = "Phase-field diagnostics runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Treat tolerance warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured analyses and write CSV tables and summary.json.
    Run,
    /// Print the standard scenarios.
    ListScenarios {
        /// Print each scenario as config text.
        #[arg(long)]
        verbose: bool,
    },
    /// Check a configuration without running it.
    Validate,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let path = cli.config.as_ref().ok_or("--config PATH is required")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn run_command(cli: &Cli) -> ExitCode {
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let Some(dir) = cli.out.clone().or_else(|| cfg.out_dir.clone()) else {
        return config_error("no output directory: pass --out DIR or set output.dir");
    };
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return config_error(format!("output directory {}: {e}", dir.display()));
    }
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ANALYSIS);
        }
    };
    let metadata = json!({
        "generated_at": chrono::Utc::now().to_rfc3339(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
    });
    let summary = outcome.summary(&cfg, cli.strict, metadata);
    let written = outcome.write_tables(&dir).and_then(|()| {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        std::fs::write(dir.join("summary.json"), text + "\n")
    });
    if let Err(e) = written {
        return config_error(format!("writing to {}: {e}", dir.display()));
    }
    for w in outcome.warnings() {
        eprintln!("warning: {w}");
    }
    let failures = outcome.failures(cli.strict);
    for f in &failures {
        eprintln!("failed: {f}");
    }
    println!(
        "{}: {} table(s) in {}, {} failure(s)",
        cfg.scenario.name,
        outcome.tables.len() + 1,
        dir.display(),
        failures.len()
    );
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ANALYSIS)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            return config_error("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return config_error(format!("thread pool: {e}"));
        }
    }
    match cli.command {
        Command::Run => run_command(&cli),
        Command::Validate => match load(&cli) {
            Ok(cfg) => {
                println!("ok: scenario `{}`, {} analyses", cfg.scenario.name, cfg.analyses.len());
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
        Command::ListScenarios { verbose } => {
            for s in corpus() {
                if verbose {
                    println!("# {}\n{}", s.name, scenario_to_config(&s));
                } else {
                    let eps: Vec<String> = s.epsilons.iter().map(|e| e.to_string()).collect();
                    println!("{:<14} {}d  {:<13} eps = {}", s.name, s.dim(), s.profile.kind(), eps.join(", "));
                }
            }
            ExitCode::SUCCESS
        }
    }
}
