use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mch_lab::{run_scenario, LabError, Mode, ScenarioConfig, SCENARIOS};

/// Run a named peakon experiment or a JSON config and write its outputs.
#[derive(Parser, Debug)]
#[command(name = "mch-lab", version)]
struct Cli {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "config", required_unless_present_any = ["config", "list"])]
    scenario: Option<String>,
    /// JSON scenario config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<scenario>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the built-in scenario names and exit.
    #[arg(long)]
    list: bool,
}

fn run(cli: Cli) -> Result<(), LabError> {
    if cli.list {
        for s in SCENARIOS {
            println!("{s}");
        }
        return Ok(());
    }
    if let Some(k) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| LabError::Config(format!("--jobs: {e}")))?;
    }
    let mut cfg = match (&cli.config, &cli.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        (None, Some(name)) => ScenarioConfig::named(name),
        (None, None) => unreachable!("clap requires one of them"),
    };
    cfg.epsilon = cli.epsilon.or(cfg.epsilon);
    cfg.t_end = cli.t_end.or(cfg.t_end);
    cfg.dt = cli.dt.or(cfg.dt);
    cfg.mode = cli.mode.or(cfg.mode);
    let out = cli
        .out
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.scenario));
    let summary = run_scenario(&cfg, &out)?;
    for f in &summary.files {
        println!("{}", out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mch-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
