use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cocycle_lab::models::ScalarDist;
use cocycle_lab::spec::MeasureSpec;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Moments,
    Wasserstein,
    Lyapunov,
    Stationary,
    Mixing,
    HolderScan,
    Ldp,
    Example1,
    Example2,
    Example3,
    Frostman,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Moments,
        Experiment::Wasserstein,
        Experiment::Lyapunov,
        Experiment::Stationary,
        Experiment::Mixing,
        Experiment::HolderScan,
        Experiment::Ldp,
        Experiment::Example1,
        Experiment::Example2,
        Experiment::Example3,
        Experiment::Frostman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Moments => "moments",
            Experiment::Wasserstein => "wasserstein",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Stationary => "stationary",
            Experiment::Mixing => "mixing",
            Experiment::HolderScan => "holder-scan",
            Experiment::Ldp => "ldp",
            Experiment::Example1 => "example1",
            Experiment::Example2 => "example2",
            Experiment::Example3 => "example3",
            Experiment::Frostman => "frostman",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    fn measure_keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Wasserstein => &["mu", "nu"],
            Experiment::Example1 | Experiment::Example2 | Experiment::Example3 | Experiment::Frostman => &[],
            _ => &["mu"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rejected configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Config after merging flags and inlining measure files.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    /// Experiment settings without the common keys.
    pub settings: Value,
    pub hash: String,
}

impl Loaded {
    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        serde_json::from_value(self.settings.clone()).map_err(|e| err(format!("{} config: {e}", self.experiment)))
    }
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))
}

/// Merge `config` (if any) with flag overrides, inline measure files given
/// as paths (relative to the config file), and hash the result. The output
/// directory and thread count do not enter the hash.
pub fn load(
    experiment: Option<Experiment>,
    config: Option<&Path>,
    overrides: Map<String, Value>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<Loaded, ConfigError> {
    let mut obj = match config {
        Some(p) => match read_json(p)? {
            Value::Object(m) => m,
            _ => return Err(err("config must be a JSON object")),
        },
        None => Map::new(),
    };
    let base = config.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
    let named = match obj.remove("experiment") {
        Some(Value::String(s)) => Some(Experiment::parse(&s).ok_or_else(|| err(format!("unknown experiment \"{s}\"")))?),
        Some(_) => return Err(err("\"experiment\" must be a string")),
        None => None,
    };
    let experiment = match (experiment, named) {
        (Some(a), Some(b)) if a != b => return Err(err(format!("config is for \"{b}\" but the subcommand is \"{a}\""))),
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(err("config has no \"experiment\" key")),
    };
    let cfg_seed = match obj.remove("seed") {
        Some(v) => Some(v.as_u64().ok_or_else(|| err("\"seed\" must be a non-negative integer"))?),
        None => None,
    };
    let cfg_out = match obj.remove("out") {
        Some(Value::String(s)) => Some(base.join(s)),
        Some(_) => return Err(err("\"out\" must be a string")),
        None => None,
    };
    let from_flags: Vec<String> = overrides.keys().cloned().collect();
    obj.extend(overrides);
    for key in experiment.measure_keys() {
        if let Some(Value::String(path)) = obj.get(*key) {
            // flag paths are relative to the working directory
            let p = if from_flags.iter().any(|k| k == key) { PathBuf::from(path) } else { base.join(path) };
            let v = read_json(&p)?;
            obj.insert((*key).to_string(), v);
        }
    }
    let seed = seed.or(cfg_seed).unwrap_or(DEFAULT_SEED);
    let out = out.or(cfg_out).unwrap_or_else(|| PathBuf::from("."));
    let mut hashed = obj.clone();
    hashed.insert("experiment".into(), Value::String(experiment.name().into()));
    hashed.insert("seed".into(), Value::from(seed));
    let canonical = serde_json::to_string(&Value::Object(hashed))?;
    let hash = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { experiment, seed, out, settings: Value::Object(obj), hash })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostChoice {
    #[default]
    Spectral,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartChoice {
    #[default]
    Identity,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingChoice {
    #[default]
    Uniform,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationaryMethod {
    #[default]
    Grid,
    Chain,
}

fn half() -> f64 {
    0.5
}
fn nodes() -> usize {
    256
}
fn n_angle() -> usize {
    4096
}
fn starts() -> usize {
    64
}
fn steps() -> usize {
    10_000
}
fn trials() -> usize {
    100
}
fn lambdas() -> Vec<f64> {
    vec![10.0, 31.6, 100.0, 316.0, 1000.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub mu: MeasureSpec,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "n_angle")]
    pub n_angle: usize,
    #[serde(default = "starts")]
    pub starts: usize,
    #[serde(default = "nodes")]
    pub discretize: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WassersteinConfig {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default)]
    pub cost: CostChoice,
    #[serde(default = "nodes")]
    pub discretize: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub mu: MeasureSpec,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default = "trials")]
    pub trials: usize,
    pub rank: Option<usize>,
    #[serde(default)]
    pub start: StartChoice,
    #[serde(default)]
    pub averaging: AveragingChoice,
    pub discretize: Option<usize>,
}

fn tol() -> f64 {
    1e-10
}
fn max_iter() -> usize {
    200_000
}
fn burn_in() -> usize {
    1000
}
fn chain_samples() -> usize {
    100_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub mu: MeasureSpec,
    #[serde(default)]
    pub method: StationaryMethod,
    #[serde(default = "n_angle")]
    pub n_grid: usize,
    #[serde(default = "tol")]
    pub tol: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default = "burn_in")]
    pub burn_in: usize,
    #[serde(default = "chain_samples")]
    pub samples: usize,
    #[serde(default = "nodes")]
    pub discretize: usize,
}

fn alpha() -> f64 {
    0.1
}
fn nmax() -> usize {
    60
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub mu: MeasureSpec,
    #[serde(default = "alpha")]
    pub alpha: f64,
    #[serde(default = "n_angle")]
    pub ngrid: usize,
    #[serde(default = "nmax")]
    pub nmax: usize,
    #[serde(default = "nodes")]
    pub discretize: usize,
}

fn shift_eps() -> Vec<f64> {
    (0..13).map(|i| 4e-8 * 10f64.powf(i as f64 * 0.5)).collect()
}
fn scan_steps() -> usize {
    20_000
}
fn scan_trials() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderScanConfig {
    pub mu: MeasureSpec,
    #[serde(default)]
    pub atom_index: usize,
    /// Shift direction; the unit in the top-left corner by default.
    pub delta: Option<Vec<Vec<f64>>>,
    #[serde(default = "shift_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "scan_steps")]
    pub steps: usize,
    #[serde(default = "scan_trials")]
    pub trials: usize,
    #[serde(default = "nodes")]
    pub discretize: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpCell {
    pub epsilon: f64,
    pub n: Vec<usize>,
}

fn ld_trials() -> u64 {
    100_000
}
fn ld_n() -> Vec<usize> {
    vec![50, 100, 200]
}
fn ld_eps() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpConfig {
    pub mu: MeasureSpec,
    pub v0: Option<Vec<f64>>,
    /// Centre of the tail events; estimated when absent.
    pub l1_ref: Option<f64>,
    #[serde(default = "ld_n")]
    pub n_list: Vec<usize>,
    #[serde(default = "ld_eps")]
    pub eps_list: Vec<f64>,
    /// Per-`ε` lists of `n`; replaces `n_list × eps_list` when given.
    pub plan: Option<Vec<LdpCell>>,
    #[serde(default = "ld_trials")]
    pub trials: u64,
    #[serde(default = "steps")]
    pub ref_steps: usize,
    #[serde(default = "trials")]
    pub ref_trials: usize,
    pub discretize: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Config {
    pub dist: ScalarDist,
    pub energies: Vec<f64>,
    pub discretize: Option<usize>,
    #[serde(default = "steps")]
    pub steps: usize,
    #[serde(default = "trials")]
    pub trials: usize,
}

fn ex_steps() -> usize {
    20_000
}
fn mc_per_term() -> usize {
    64
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example2Config {
    pub a: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub q: f64,
    pub dist: ScalarDist,
    #[serde(default = "lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "ex_steps")]
    pub steps: usize,
    #[serde(default = "scan_trials")]
    pub trials: usize,
    pub n_max: Option<usize>,
    pub m_max: Option<usize>,
    #[serde(default = "mc_per_term")]
    pub mc_per_term: usize,
    pub discretize: Option<usize>,
    /// Exponent used for the precondition warning.
    #[serde(default = "half")]
    pub p: f64,
}

fn two() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example3Config {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(default = "two")]
    pub m: usize,
    pub dist: ScalarDist,
    #[serde(default = "lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "ex_steps")]
    pub steps: usize,
    #[serde(default = "trials")]
    pub trials: usize,
    #[serde(default = "nodes")]
    pub samples: usize,
    #[serde(default = "half")]
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrostmanConfig {
    pub dist: ScalarDist,
    #[serde(default = "half")]
    pub p: f64,
    /// Evaluation points; 201 points over the support hull by default.
    pub a_grid: Option<GridSpec>,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.n <= 1 {
            return vec![self.lo];
        }
        (0..self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64).collect()
    }
}
