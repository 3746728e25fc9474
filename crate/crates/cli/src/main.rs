use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use movsurf::landau::FlowConfig;
use movsurf::suites::{Suite, Tolerances};
use movsurf::thinfilm::Extension;
use movsurf_cli::{run, CliError, Command, ConvergeKind, Format, RunConfig};

#[derive(Parser)]
#[command(name = "movsurf", version, about = "Time derivatives and Landau-de Gennes flows on moving surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory (overrides the config file and MOVSURF_OUTPUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Geometry,
    Derivatives,
    Qtensor,
    Laplace,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Fd,
    Thinfilm,
    Laplace,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtensionArg {
    Constant,
    Linear,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run identity and dual-path suites at seeded random events.
    Verify {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Single tolerance for every identity family.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 20)]
        events: usize,
    },
    /// Integrate a Landau-de Gennes gradient flow from a JSON config.
    Flow {
        config: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Refinement studies with fitted convergence orders.
    Converge {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "constant")]
        extension: ExtensionArg,
    },
    /// Run a full run configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn build(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match cli.command {
        Cmd::Verify { scenario, suite, seed, tol, events } => {
            let suite = match suite {
                SuiteArg::Geometry => Suite::Geometry,
                SuiteArg::Derivatives => Suite::Derivatives,
                SuiteArg::Qtensor => Suite::Qtensor,
                SuiteArg::Laplace => Suite::Laplace,
                SuiteArg::All => Suite::All,
            };
            let mut cfg = RunConfig::new(Command::Verify { suite, events });
            cfg.scenario = Some(scenario);
            cfg.seed = Some(seed);
            if let Some(t) = tol {
                cfg.tolerances = Tolerances::uniform(t);
            }
            cfg
        }
        Cmd::Flow { config, dt, t_end } => {
            let mut flow: FlowConfig =
                serde_json::from_str(&read(&config)?).map_err(|e| CliError::Usage(format!("flow config: {e}")))?;
            if let Some(dt) = dt {
                flow.dt = dt;
            }
            if let Some(t) = t_end {
                flow.t_end = t;
            }
            RunConfig::new(Command::Flow(flow))
        }
        Cmd::Converge { kind, scenario, steps, seed, extension } => {
            let kind = match kind {
                KindArg::Fd => ConvergeKind::Fd,
                KindArg::Thinfilm => ConvergeKind::Thinfilm,
                KindArg::Laplace => ConvergeKind::Laplace,
            };
            let extension = match extension {
                ExtensionArg::Constant => Extension::Constant,
                ExtensionArg::Linear => Extension::Linear,
            };
            let mut cfg = RunConfig::new(Command::Converge { kind, steps, extension });
            cfg.scenario = scenario;
            cfg.seed = Some(seed);
            cfg
        }
        Cmd::Run { config, seed } => {
            let mut cfg = RunConfig::from_json(&read(&config)?)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            cfg
        }
    }
    .with_env_output();
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    cfg.resolve()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build(cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary.trim_end());
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
