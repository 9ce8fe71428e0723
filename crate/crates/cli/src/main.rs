mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{load, Experiment, Loaded};
use output::Sink;
use run::{error_kind, Failure};

#[derive(Parser)]
#[command(name = "cocycle-lab", version, about = "Experiments on random matrix cocycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct MeasureFlag {
    /// Measure spec file.
    #[arg(long)]
    mu: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exponential moment functionals.
    Moments(MeasureFlag),
    /// Exact W_p between two discrete measures.
    Wasserstein {
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long)]
        nu: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Lyapunov spectrum.
    Lyapunov(MeasureFlag),
    /// Stationary measure on projective space.
    Stationary(MeasureFlag),
    /// Decay of the projective Markov operator.
    Mixing {
        #[arg(long)]
        mu: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        ngrid: Option<usize>,
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Top exponent against W_p along an atom-shift family.
    HolderScan(MeasureFlag),
    /// Large-deviation tails and rate fits.
    Ldp(MeasureFlag),
    /// Schrödinger exponent across energies.
    Example1,
    /// Mixed-coupling asymptotics.
    Example2,
    /// Block Jacobi asymptotics.
    Example3,
    /// Negative moments of a potential law.
    Frostman,
    /// Check a config without running it.
    Validate {
        /// Experiment name; read from the config's "experiment" key if absent.
        experiment: Option<String>,
    },
}

fn path_value(p: &Option<PathBuf>) -> Option<Value> {
    p.as_ref().map(|p| Value::String(p.to_string_lossy().into_owned()))
}

fn split(cmd: &Command) -> (Option<Experiment>, Map<String, Value>) {
    let mut o = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            o.insert(k.into(), v);
        }
    };
    let e = match cmd {
        Command::Moments(m) => {
            put("mu", path_value(&m.mu));
            Experiment::Moments
        }
        Command::Wasserstein { mu, nu, p } => {
            put("mu", path_value(mu));
            put("nu", path_value(nu));
            put("p", p.map(Value::from));
            Experiment::Wasserstein
        }
        Command::Lyapunov(m) => {
            put("mu", path_value(&m.mu));
            Experiment::Lyapunov
        }
        Command::Stationary(m) => {
            put("mu", path_value(&m.mu));
            Experiment::Stationary
        }
        Command::Mixing { mu, alpha, ngrid, nmax } => {
            put("mu", path_value(mu));
            put("alpha", alpha.map(Value::from));
            put("ngrid", ngrid.map(Value::from));
            put("nmax", nmax.map(Value::from));
            Experiment::Mixing
        }
        Command::HolderScan(m) => {
            put("mu", path_value(&m.mu));
            Experiment::HolderScan
        }
        Command::Ldp(m) => {
            put("mu", path_value(&m.mu));
            Experiment::Ldp
        }
        Command::Example1 => Experiment::Example1,
        Command::Example2 => Experiment::Example2,
        Command::Example3 => Experiment::Example3,
        Command::Frostman => Experiment::Frostman,
        Command::Validate { .. } => return (None, o),
    };
    (Some(e), o)
}

fn config_error(msg: &str) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = cli.common;
    if let Some(n) = c.threads {
        if n == 0 {
            return config_error("--threads must be positive");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return config_error(&e.to_string());
        }
    }
    let (experiment, overrides) = split(&cli.command);
    let experiment = match (&cli.command, experiment) {
        (Command::Validate { experiment: Some(name) }, _) => match Experiment::parse(name) {
            Some(e) => Some(e),
            None => return config_error(&format!("unknown experiment \"{name}\"")),
        },
        (_, e) => e,
    };
    let loaded = match load(experiment, c.config.as_deref(), overrides, c.seed, c.out) {
        Ok(l) => l,
        Err(e) => return config_error(&e.0),
    };
    let checks = match run::validate(&loaded) {
        Ok(v) => v,
        Err(e) => return config_error(&e.0),
    };
    if let Command::Validate { .. } = cli.command {
        let report = json!({ "experiment": loaded.experiment.name(), "violations": checks.0, "warnings": checks.1, "config_sha256": loaded.hash });
        println!("{}", serde_json::to_string_pretty(&report).expect("json"));
        return if checks.0.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) };
    }
    if !checks.0.is_empty() {
        return config_error(&checks.0.join("; "));
    }
    for w in &checks.1 {
        eprintln!("warning: {w}");
    }
    execute(&loaded)
}

fn execute(l: &Loaded) -> ExitCode {
    let sink = match Sink::new(&l.out, &l.hash, l.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot create {}: {e}", l.out.display());
            return ExitCode::from(3);
        }
    };
    match run::run(l, &sink) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => config_error(&msg),
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Numeric(e)) => {
            let diag = json!({
                "error": error_kind(&e),
                "message": e.to_string(),
                "detail": format!("{e:?}"),
                "experiment": l.experiment.name(),
            });
            if let Err(io) = sink.json("diagnostic.json", &diag) {
                eprintln!("cannot write diagnostic: {io}");
            }
            let mut d = diag;
            d["meta"] = sink.meta();
            eprintln!("{}", serde_json::to_string(&d).expect("json"));
            ExitCode::from(3)
        }
    }
}
