#![forbid(unsafe_code)]

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thermoform::cli::{list_fixtures, run, ExperimentConfig, Task, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "thermoform",
    version,
    about = "Thermodynamic-formalism estimators on a fixed zoo of dynamical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topological entropy by spanning and separated sets.
    Entropy(Common),
    /// Topological pressure of each potential plus ln of the cocycle.
    Pressure(Common),
    /// Spectral potential of each potential.
    Lambda(Common),
    /// t-entropy of the fixture's measures by every applicable method.
    Tau(Common),
    /// Inverse rami-rate.
    Omega(Common),
    /// Forward entropy.
    Gamma(Common),
    /// Essential spectral potential of each potential.
    Ell(Common),
    /// Essential set.
    Essential(Common),
    /// Compatibility of the operator with the fixture's subset.
    Compat(Common),
    /// Variational principle over the fixture's measure family.
    Vp(Common),
    /// Identity cross-checks.
    Identities(Common),
    /// Run a task named on the command line or in the config.
    Run {
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the fixture catalog as JSON.
    ListFixtures {
        /// Substring the fixture name must contain.
        #[arg(default_value = "")]
        filter: String,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    Entropy,
    Pressure,
    Lambda,
    Tau,
    Omega,
    Gamma,
    Ell,
    Essential,
    Compat,
    Vp,
    Identities,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Entropy => Task::Entropy,
            TaskArg::Pressure => Task::Pressure,
            TaskArg::Lambda => Task::Lambda,
            TaskArg::Tau => Task::Tau,
            TaskArg::Omega => Task::Omega,
            TaskArg::Gamma => Task::Gamma,
            TaskArg::Ell => Task::Ell,
            TaskArg::Essential => Task::Essential,
            TaskArg::Compat => Task::Compat,
            TaskArg::Vp => Task::Vp,
            TaskArg::Identities => Task::Identities,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    fixture: Option<String>,
    /// JSON experiment config; flags given here override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Comma-separated, strictly decreasing radii.
    #[arg(long, value_delimiter = ',')]
    eps_ladder: Option<Vec<f64>>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Exit with status 2 when any report row is FAIL.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(task: Option<Task>, c: Common) -> thermoform::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let fixture = c.fixture.clone().ok_or_else(|| thermoform::Error::Config {
                path: "fixture".into(),
                message: "give --fixture or --config".into(),
            })?;
            let task = task.ok_or_else(|| thermoform::Error::Config {
                path: "task".into(),
                message: "give --task or a config with a task".into(),
            })?;
            ExperimentConfig::for_fixture(&fixture, task)
        }
    };
    if let Some(t) = task {
        cfg.task = t;
    }
    if let Some(f) = c.fixture {
        cfg.fixture = Some(f);
        cfg.system = None;
    }
    if let Some(n) = c.nmax {
        cfg.n_max = n;
    }
    if let Some(l) = c.eps_ladder {
        cfg.eps_ladder = Some(l);
    }
    if let Some(d) = c.depth {
        cfg.depth = d;
    }
    if let Some(o) = c.out {
        cfg.out_dir = o;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    cfg.strict |= c.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match cli.command {
        Command::ListFixtures { filter } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&list_fixtures(&filter)).expect("catalog serializes")
            );
            return ExitCode::SUCCESS;
        }
        Command::Run { task, common } => (task.map(Task::from), common),
        Command::Entropy(c) => (Some(Task::Entropy), c),
        Command::Pressure(c) => (Some(Task::Pressure), c),
        Command::Lambda(c) => (Some(Task::Lambda), c),
        Command::Tau(c) => (Some(Task::Tau), c),
        Command::Omega(c) => (Some(Task::Omega), c),
        Command::Gamma(c) => (Some(Task::Gamma), c),
        Command::Ell(c) => (Some(Task::Ell), c),
        Command::Essential(c) => (Some(Task::Essential), c),
        Command::Compat(c) => (Some(Task::Compat), c),
        Command::Vp(c) => (Some(Task::Vp), c),
        Command::Identities(c) => (Some(Task::Identities), c),
    };
    let outcome = build_config(task, common).and_then(|cfg| run(&cfg).map(|o| (cfg, o)));
    match outcome {
        Ok((cfg, o)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&o.summary["results"]).expect("summary serializes")
            );
            eprintln!("summary: {}", o.summary_path.display());
            if cfg.strict && o.failures > 0 {
                eprintln!("{} FAIL row(s)", o.failures);
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
