use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gravdeco::hole_experiment::SweepParameter;
use gravdeco_cli::config::{load_config, ExperimentKind, HarmonicSection, SweepSection};
use gravdeco_cli::error::exit;
use gravdeco_cli::run::{execute, write_bundle, VERSION};
use gravdeco_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "gravdeco", version, about = "Gravitationally induced decoherence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Result directory; overrides `output.directory`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a configuration file.
    Run {
        #[arg(long, short)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Check a configuration file without running it.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Repeat the hole experiment over a list of parameter values.
    Sweep {
        #[arg(long, short)]
        config: PathBuf,
        /// Overrides `sweep.parameter`.
        #[arg(long, value_enum)]
        parameter: Option<Parameter>,
        /// Comma-separated values; overrides `sweep.values`.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
    /// Recover the background unitary from two sampled bases.
    RecoverBackground {
        /// Defaults to the built-in translated cell bases.
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Harmonic-gauge residual of a metric.
    CheckHarmonic {
        #[arg(long, short, conflicts_with = "metric", required_unless_present = "metric")]
        config: Option<PathBuf>,
        /// Grid-field metric file.
        #[arg(long, short)]
        metric: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Parameter {
    Coupling,
    Displacement,
    Mass,
}

impl From<Parameter> for SweepParameter {
    fn from(p: Parameter) -> Self {
        match p {
            Parameter::Coupling => Self::Coupling,
            Parameter::Displacement => Self::Displacement,
            Parameter::Mass => Self::Mass,
        }
    }
}

fn bare(kind: ExperimentKind) -> RunConfig {
    RunConfig::from_toml(&format!("experiment = \"{}\"\n", kind.name())).expect("minimal config parses")
}

fn load_as(path: &Path, kind: ExperimentKind) -> CliResult<RunConfig> {
    let cfg = load_config(path)?;
    if cfg.experiment != kind {
        return Err(CliError::Usage(format!(
            "{} describes a '{}' experiment, not '{}'",
            path.display(),
            cfg.experiment.name(),
            kind.name()
        )));
    }
    Ok(cfg)
}

fn checked(cfg: RunConfig) -> CliResult<RunConfig> {
    let issues = cfg.issues();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(issues))
    }
}

fn run_and_write(cfg: &RunConfig, output: Output) -> CliResult<()> {
    let dir = output.output.unwrap_or_else(|| cfg.output.directory.clone());
    log::info!("running {} into {}", cfg.experiment.name(), dir.display());
    let bundle = execute(cfg)?;
    write_bundle(&bundle, &dir)?;
    for line in &bundle.summary {
        println!("{line}");
    }
    println!("wrote {} files to {}", bundle.files.len() + 1, dir.display());
    Ok(())
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, output } => run_and_write(&load_config(&config)?, output),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}: valid {} configuration", config.display(), cfg.experiment.name());
            Ok(())
        }
        Command::Sweep { config, parameter, values, output } => {
            let mut cfg = RunConfig::from_toml(
                &std::fs::read_to_string(&config).map_err(|source| CliError::Io { path: config.clone(), source })?,
            )
            .map_err(|message| CliError::Parse { path: config.clone(), message })?;
            cfg.base_dir = config.parent().map(Path::to_path_buf).unwrap_or_default();
            if cfg.experiment != ExperimentKind::Sweep {
                return Err(CliError::Usage(format!("{} is not a sweep configuration", config.display())));
            }
            if parameter.is_some() || values.is_some() {
                let current = cfg.sweep.take();
                let parameter = parameter.map(Into::into).or(current.as_ref().map(|s| s.parameter));
                let values = values.or(current.map(|s| s.values));
                let (Some(parameter), Some(values)) = (parameter, values) else {
                    return Err(CliError::Usage(
                        "--parameter and --values are both needed without a [sweep] section".into(),
                    ));
                };
                cfg.sweep = Some(SweepSection { parameter, values });
            }
            run_and_write(&checked(cfg)?, output)
        }
        Command::RecoverBackground { config, output } => {
            let cfg = match config {
                Some(path) => load_as(&path, ExperimentKind::RecoverBackground)?,
                None => bare(ExperimentKind::RecoverBackground),
            };
            run_and_write(&cfg, output)
        }
        Command::CheckHarmonic { config, metric, output } => {
            let cfg = match (config, metric) {
                (Some(path), _) => load_as(&path, ExperimentKind::CheckHarmonic)?,
                (None, Some(metric)) => {
                    let mut cfg = bare(ExperimentKind::CheckHarmonic);
                    cfg.harmonic = Some(HarmonicSection { metric_file: Some(metric), manufactured: None });
                    checked(cfg)?
                }
                (None, None) => return Err(CliError::Usage("pass --config or --metric".into())),
            };
            run_and_write(&cfg, output)
        }
        Command::Version => {
            println!("gravdeco {VERSION}");
            Ok(())
        }
    }
}

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("GRAVDECO_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GRAVDECO_THREADS = '{value}' must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| dispatch(cli.command)) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
