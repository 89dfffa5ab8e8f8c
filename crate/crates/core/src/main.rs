use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use horizonlab::scenario::{
    builtin, builtin_scenarios, parse_config, run_command, Command, Format, RunOptions, RunStatus, ScenarioConfig,
};
use horizonlab::Error;

#[derive(Parser)]
#[command(
    name = "horizonlab",
    version,
    about = "Ergospheres, horizons and wave trapping in analogue metrics"
)]
struct Cli {
    /// Output directory; defaults to `outputs.dir` or `out/<scenario>/<command>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every integrator and cycle tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Worker threads for the wave solver.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Encoding of the report file.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Locate the ergosphere.
    Ergosphere { config: String },
    /// Trace characteristic orbits and bicharacteristics.
    Rays { config: String },
    /// Ergosphere, horizons and their classes.
    Horizon { config: String },
    /// Black/white classification and the inner cone condition.
    Classify { config: String },
    /// Wave run, or the scenario's experiment when it has one.
    Wave { config: String },
    /// Nonuniqueness experiment: exterior data of two metrics.
    DnCompare { config: String },
    /// Gradient-flow pair experiment.
    GaugeTest { config: String },
    /// Print the built-in scenarios.
    ListScenarios,
    /// Parse and validate a scenario without running it.
    Validate { config: String },
    /// Run a scenario with its own default command.
    Run { config: String },
}

/// A path to a TOML file, or the name of a built-in scenario.
fn load(spec: &str) -> Result<ScenarioConfig, Error> {
    let path = Path::new(spec);
    if path.exists() {
        parse_config(path)
    } else {
        builtin(spec)
    }
}

fn fail_config(e: &Error) -> ExitCode {
    eprintln!("configuration error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot set thread count: {e}");
            return ExitCode::from(1);
        }
    }
    let (cmd, spec) = match &cli.command {
        Cmd::ListScenarios => {
            return match builtin_scenarios() {
                Ok(list) => {
                    for cfg in list {
                        println!("{:<26} {}", cfg.name, cfg.description);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail_config(&e),
            };
        }
        Cmd::Validate { config } => {
            return match load(config) {
                Ok(cfg) => {
                    println!("{}: ok", cfg.name);
                    ExitCode::SUCCESS
                }
                Err(e) => fail_config(&e),
            };
        }
        Cmd::Ergosphere { config } => (Some(Command::Ergosphere), config),
        Cmd::Rays { config } => (Some(Command::Rays), config),
        Cmd::Horizon { config } => (Some(Command::Horizon), config),
        Cmd::Classify { config } => (Some(Command::Classify), config),
        Cmd::Wave { config } => (Some(Command::Wave), config),
        Cmd::DnCompare { config } => (Some(Command::DnCompare), config),
        Cmd::GaugeTest { config } => (Some(Command::GaugeTest), config),
        Cmd::Run { config } => (None, config),
    };
    let cfg = match load(spec) {
        Ok(cfg) => cfg,
        Err(e) => return fail_config(&e),
    };
    let cmd = cmd.unwrap_or_else(|| horizonlab::scenario::default_command(&cfg));
    let out_dir = cli.out.clone().unwrap_or_else(|| match &cfg.outputs.dir {
        Some(d) => PathBuf::from(d),
        None => PathBuf::from("out").join(&cfg.name).join(cmd.name()),
    });
    let opts = RunOptions {
        out_dir,
        tol_scale: cli.tol_scale,
        format: cli.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
    };
    match run_command(&cfg, cmd, &opts) {
        Ok(art) => {
            let listing = art.dir.join("manifest.json");
            match art.manifest.status {
                RunStatus::Ok => println!("{} {}: ok ({})", cfg.name, cmd, listing.display()),
                RunStatus::Failed => eprintln!("{} {}: pass criterion not met ({})", cfg.name, cmd, listing.display()),
                RunStatus::NumericalError => {
                    let msg = art.manifest.error.as_ref().map(|e| e.message.as_str()).unwrap_or("");
                    eprintln!("{} {}: numerical failure: {msg} ({})", cfg.name, cmd, listing.display());
                }
            }
            ExitCode::from(art.exit_code() as u8)
        }
        Err(e) if e.is_config_error() => fail_config(&e),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
