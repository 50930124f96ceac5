use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ntfd::config::ConfigBuilder;
use ntfd::scenarios::{run_scenario, ScenarioId, ScenarioOutput};
use ntfd::Error;

#[derive(Parser, Debug)]
#[command(
    name = "ntfd",
    version,
    about = "Thermo-field-dynamics scenarios and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed for stochastic ensembles.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override a config key, e.g. `--set kappa=0.2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every scenario on its defaults.
    Validate,
    Oscillator {
        #[arg(long, value_enum, default_value = "nonunitary")]
        system: System,
    },
    Kramers {
        #[arg(long, value_enum, default_value = "nonunitary")]
        system: System,
    },
    Propagator,
    ComparePictures,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum System {
    Nonunitary,
    Unitary,
}

enum Failure {
    Checks,
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_config_error(&e) {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter { .. }
            | Error::InvalidCutoff { .. }
            | Error::NegativeOccupation(_)
            | Error::NuOutOfRange(_)
            | Error::OffGrid(_)
            | Error::StepTooLarge(_)
    )
}

fn builder(cli: &Cli) -> Result<ConfigBuilder, Failure> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(Error::InvalidParameter {
                    name: "config",
                    reason: format!("{}: {e}", path.display()),
                })
            })?;
            ConfigBuilder::parse(&text)?
        }
        None => ConfigBuilder::default(),
    };
    let mut flags = ConfigBuilder::default();
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            Failure::Config(Error::InvalidParameter {
                name: "set",
                reason: format!("`{kv}` is not KEY=VALUE"),
            })
        })?;
        flags.set(k.trim(), v.trim(), "--set")?;
    }
    if let Some(seed) = cli.seed {
        flags.set("seed", &seed.to_string(), "--seed")?;
    }
    if let Some(out) = &cli.out {
        flags.set("out", &out.to_string_lossy(), "--out")?;
    }
    Ok(file.overlay(&flags))
}

fn report(out: &ScenarioOutput, dir: &Path) {
    let r = &out.report;
    let flags: Vec<String> = r.flags.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!(
        "{} {} ({} checks, {:.2}s){} -> {}",
        if r.passed() { "PASS" } else { "FAIL" },
        r.scenario_name(),
        r.checks.len(),
        r.runtime_s,
        if flags.is_empty() {
            String::new()
        } else {
            format!(" [{}]", flags.join(", "))
        },
        dir.display(),
    );
    for c in r.failures() {
        eprintln!(
            "  failed {}: observed {:.6e}, expected {:.6e}, tolerance {:.3e}",
            c.name, c.observed, c.expected, c.tolerance
        );
    }
}

fn run_one(b: &ConfigBuilder, id: ScenarioId, nested: bool) -> Result<bool, Failure> {
    let cfg = b.build(id.default_params())?;
    let dir = if nested {
        cfg.out.join(id.name())
    } else {
        cfg.out.clone()
    };
    let out = run_scenario(id, &cfg.params)?;
    out.write_to(&dir)?;
    report(&out, &dir);
    Ok(out.report.passed())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| {
                Failure::Config(Error::InvalidParameter {
                    name: "threads",
                    reason: e.to_string(),
                })
            })?;
    }
    let b = builder(cli)?;
    let ids: Vec<ScenarioId> = match &cli.command {
        Command::Validate => ScenarioId::ALL.to_vec(),
        Command::Oscillator {
            system: System::Nonunitary,
        } => vec![ScenarioId::OscillatorNonunitary],
        Command::Oscillator {
            system: System::Unitary,
        } => vec![ScenarioId::OscillatorUnitary],
        Command::Kramers {
            system: System::Nonunitary,
        } => vec![ScenarioId::KramersNonunitary],
        Command::Kramers {
            system: System::Unitary,
        } => vec![ScenarioId::KramersUnitary],
        Command::Propagator => vec![ScenarioId::Propagator],
        Command::ComparePictures => vec![ScenarioId::ComparePictures],
    };
    // Validate every config before spending time on any scenario.
    for &id in &ids {
        b.build(id.default_params())?;
    }
    let nested = ids.len() > 1;
    let mut ok = true;
    for id in ids {
        ok &= run_one(&b, id, nested)?;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
