use std::io;

use cocycle_lab::deviations::{fit_rate, ld_tail_cells};
use cocycle_lab::lyapunov::{
    atom_shift_family, fit_holder, furstenberg_le, holder_rows, lyapunov_spectrum, stationary_measure_chain, stationary_measure_grid, Averaging,
    GridSettings, HolderScanSettings, SpectrumSettings, StartFrame,
};
use cocycle_lab::measures::{theta_bar, theta_under, MatrixSource, SphereSearch};
use cocycle_lab::models::{
    default_truncation, example1_scan, example2_asymptotics, example3_asymptotics, frostman_moment, jacobi_moment_sup, symmetric_measure,
    Example2Settings, MixedModelParams,
};
use cocycle_lab::projmarkov::{fit_mixing, mixing_table, standard_observables};
use cocycle_lab::rng::derive_seed;
use cocycle_lab::spec::{BuildOptions, MeasureSpec};
use cocycle_lab::transport::{wasserstein_with, CostNorm};
use cocycle_lab::{Error, ProjPoint, SquareMatrix};
use serde_json::{json, Value};

use crate::config::*;
use crate::output::{num, Sink, Table};

pub enum Failure {
    Config(String),
    Numeric(Error),
    Io(io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::DegenerateEnergy { .. } | Error::NotSymmetric { .. } => {
                Failure::Config(e.to_string())
            }
            e => Failure::Numeric(e),
        }
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "InvalidArgument",
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::KernelHit { .. } => "KernelHit",
        Error::DegenerateFrame { .. } => "DegenerateFrame",
        Error::AtomBudgetExceeded { .. } => "AtomBudgetExceeded",
        Error::InfiniteMoment { .. } => "InfiniteMoment",
        Error::EmptyComplement => "EmptyComplement",
        Error::HypothesisViolated(_) => "HypothesisViolated",
        Error::InsufficientSignal { .. } => "InsufficientSignal",
        Error::NoConvergence { .. } => "NoConvergence",
        Error::NoDecay { .. } => "NoDecay",
        Error::InsufficientData(_) => "InsufficientData",
        Error::DegenerateEnergy { .. } => "DegenerateEnergy",
        Error::NotSymmetric { .. } => "NotSymmetric",
    }
}

type Outcome = Result<String, Failure>;

/// Schema plus precondition checks: `(violations, warnings)`.
pub fn validate(l: &Loaded) -> Result<(Vec<String>, Vec<String>), ConfigError> {
    let mut bad = Vec::new();
    let mut warn = Vec::new();
    let p_in = |p: f64, lo_open: f64, hi: f64, hi_closed: bool, what: &str, bad: &mut Vec<String>| {
        let ok = p > lo_open && if hi_closed { p <= hi } else { p < hi };
        if !ok {
            bad.push(format!("{what} = {p} is out of range"));
        }
    };
    let measure = |s: &MeasureSpec, key: &str, bad: &mut Vec<String>| {
        bad.extend(s.check().into_iter().map(|m| format!("{key}: {m}")));
    };
    let positive = |n: usize, what: &str, bad: &mut Vec<String>| {
        if n == 0 {
            bad.push(format!("{what} must be positive"));
        }
    };
    match l.experiment {
        Experiment::Moments => {
            let c: MomentsConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            p_in(c.p, 0.0, f64::INFINITY, false, "p", &mut bad);
            positive(c.n_angle, "n_angle", &mut bad);
        }
        Experiment::Wasserstein => {
            let c: WassersteinConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            measure(&c.nu, "nu", &mut bad);
            p_in(c.p, 0.0, 1.0, true, "p", &mut bad);
        }
        Experiment::Lyapunov => {
            let c: LyapunovConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            positive(c.steps, "steps", &mut bad);
            positive(c.trials, "trials", &mut bad);
            if c.rank == Some(0) {
                bad.push("rank must be positive".into());
            }
        }
        Experiment::Stationary => {
            let c: StationaryConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            positive(c.samples, "samples", &mut bad);
            positive(c.n_grid, "n_grid", &mut bad);
        }
        Experiment::Mixing => {
            let c: MixingConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            p_in(c.alpha, 0.0, 1.0, true, "alpha", &mut bad);
            positive(c.ngrid, "ngrid", &mut bad);
            if c.nmax < 6 {
                warn.push(format!("nmax = {} leaves fewer than four rows for the rate fit", c.nmax));
            }
        }
        Experiment::HolderScan => {
            let c: HolderScanConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            p_in(c.p, 0.0, 1.0, true, "p", &mut bad);
            if c.eps.iter().any(|&e| !(e > 0.0)) {
                bad.push("eps values must be positive".into());
            }
            if c.eps.len() < 4 {
                warn.push("fewer than four shifts: the exponent cannot be fitted".into());
            }
        }
        Experiment::Ldp => {
            let c: LdpConfig = l.parse()?;
            measure(&c.mu, "mu", &mut bad);
            if c.trials == 0 {
                bad.push("trials must be positive".into());
            }
            let cells = ld_cells(&c);
            if cells.iter().any(|&(n, e)| n == 0 || !(e > 0.0)) {
                bad.push("cells need n >= 1 and epsilon > 0".into());
            }
            if cells.is_empty() {
                bad.push("no (n, epsilon) cells".into());
            }
        }
        Experiment::Example1 => {
            let c: Example1Config = l.parse()?;
            if let Err(e) = c.dist.validate() {
                bad.push(format!("dist: {e}"));
            }
            if c.energies.is_empty() {
                bad.push("energies is empty".into());
            }
        }
        Experiment::Example2 => {
            let c: Example2Config = l.parse()?;
            for &lambda in &c.lambdas {
                if let Err(e) = (MixedModelParams { a: c.a, e: c.e, q: c.q, lambda, dist: c.dist.clone() }).validate() {
                    bad.push(e.to_string());
                    break;
                }
            }
            if c.lambdas.is_empty() {
                bad.push("lambdas is empty".into());
            } else if c.lambdas.len() < 2 {
                warn.push("a single lambda cannot fit a slope".into());
            }
            if c.q > 0.0 && c.q < 1.0 {
                warn.extend(MixedModelParams { a: c.a, e: c.e, q: c.q, lambda: 1.0, dist: c.dist.clone() }.warnings(c.p));
            }
        }
        Experiment::Example3 => {
            let c: Example3Config = l.parse()?;
            if let Err(e) = c.dist.validate() {
                bad.push(format!("dist: {e}"));
            }
            positive(c.m, "m", &mut bad);
            if c.lambdas.iter().any(|&x| !(x > 0.0)) {
                bad.push("lambdas must be positive".into());
            }
            if c.lambdas.len() < 2 {
                warn.push("a single lambda cannot fit a slope".into());
            }
        }
        Experiment::Frostman => {
            let c: FrostmanConfig = l.parse()?;
            if let Err(e) = c.dist.validate() {
                bad.push(format!("dist: {e}"));
            }
            p_in(c.p, 0.0, 1.0, false, "p", &mut bad);
            if c.a_grid.as_ref().is_some_and(|g| g.n == 0 || !(g.lo <= g.hi)) {
                bad.push("a_grid needs n >= 1 and lo <= hi".into());
            }
        }
    }
    Ok((bad, warn))
}

fn measure_seed(seed: u64) -> u64 {
    derive_seed(seed, 1)
}

pub fn run(l: &Loaded, sink: &Sink) -> Outcome {
    match l.experiment {
        Experiment::Moments => moments(l.parse()?, l.seed, sink),
        Experiment::Wasserstein => wasserstein(l.parse()?, l.seed, sink),
        Experiment::Lyapunov => lyapunov(l.parse()?, l.seed, sink),
        Experiment::Stationary => stationary(l.parse()?, l.seed, sink),
        Experiment::Mixing => mixing(l.parse()?, l.seed, sink),
        Experiment::HolderScan => holder(l.parse()?, l.seed, sink),
        Experiment::Ldp => ldp(l.parse()?, l.seed, sink),
        Experiment::Example1 => example1(l.parse()?, l.seed, sink),
        Experiment::Example2 => example2(l.parse()?, l.seed, sink),
        Experiment::Example3 => example3(l.parse()?, l.seed, sink),
        Experiment::Frostman => frostman(l.parse()?, sink),
    }
}

fn moments(c: MomentsConfig, seed: u64, sink: &Sink) -> Outcome {
    let (mu, how) = c.mu.build_discrete(c.discretize, measure_seed(seed))?;
    let tb = theta_bar(&mu, c.p);
    let search = SphereSearch { n_angle: c.n_angle, starts: c.starts, seed };
    let (tu, arg) = match theta_under(&mu, c.p, &search) {
        Ok((v, a)) => (v, a.rep().to_vec()),
        Err(Error::InfiniteMoment { direction }) => (f64::INFINITY, direction),
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(&["functional", "value"]);
    t.push(vec!["theta_bar".into(), num(tb)]);
    t.push(vec!["theta_under".into(), num(tu)]);
    t.push(vec!["mpc_constant".into(), num(tb.max(tu))]);
    sink.csv("moments.csv", &t)?;
    sink.json(
        "moments.json",
        &json!({
            "p": c.p, "theta_bar": tb, "theta_under": finite_or_str(tu), "theta_under_argmax": arg,
            "mpc_constant": finite_or_str(tb.max(tu)), "atoms": mu.len(), "realization": how,
            "search": { "n_angle": c.n_angle, "starts": c.starts, "lower_bound": true },
        }),
    )?;
    Ok(format!("theta_bar={} theta_under={}", num(tb), num(tu)))
}

fn finite_or_str(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}

fn wasserstein(c: WassersteinConfig, seed: u64, sink: &Sink) -> Outcome {
    let (mu, _) = c.mu.build_discrete(c.discretize, derive_seed(seed, 1))?;
    let (nu, _) = c.nu.build_discrete(c.discretize, derive_seed(seed, 2))?;
    let norm = match c.cost {
        CostChoice::Spectral => CostNorm::Spectral,
        CostChoice::Frobenius => CostNorm::Frobenius,
    };
    let (w, coupling) = wasserstein_with(&mu, &nu, c.p, norm)?;
    let mut t = Table::new(&["i", "j", "mass"]);
    for &(i, j, m) in &coupling.entries {
        t.push(vec![i.to_string(), j.to_string(), num(m)]);
    }
    sink.csv("coupling.csv", &t)?;
    sink.json("wasserstein.json", &json!({ "p": c.p, "value": w, "cost": format!("{norm:?}").to_lowercase(), "rows": mu.len(), "cols": nu.len() }))?;
    println!("{}", num(w));
    Ok(format!("wasserstein p={} value={}", c.p, num(w)))
}

fn lyapunov(c: LyapunovConfig, seed: u64, sink: &Sink) -> Outcome {
    let (src, how) = c.mu.build(&BuildOptions { discretize: c.discretize, seed: measure_seed(seed), ..BuildOptions::default() })?;
    let mut set = SpectrumSettings::new(c.steps, c.trials, seed, c.rank.unwrap_or(src.dim()));
    set.start = match c.start {
        StartChoice::Identity => StartFrame::Identity,
        StartChoice::Random => StartFrame::Random,
    };
    set.averaging = match c.averaging {
        AveragingChoice::Uniform => Averaging::Uniform,
        AveragingChoice::Weighted => Averaging::Weighted,
    };
    let rep = lyapunov_spectrum(&src, &set)?;
    let mut t = Table::new(&["exponent_index", "value", "stderr", "minus_inf_fraction"]);
    for k in 0..rep.exponents.len() {
        t.push(vec![(k + 1).to_string(), num(rep.exponents[k]), num(rep.stderr[k]), num(rep.minus_inf_fraction[k])]);
    }
    sink.csv("lyapunov.csv", &t)?;
    sink.json(
        "lyapunov.json",
        &json!({ "steps": rep.steps, "trials": rep.trials, "rank": set.rank, "realization": how,
                 "exponents": rep.exponents.iter().map(|&x| finite_or_str(x)).collect::<Vec<_>>() }),
    )?;
    Ok(format!("L1={} stderr={}", num(rep.exponents[0]), num(rep.stderr[0])))
}

fn stationary(c: StationaryConfig, seed: u64, sink: &Sink) -> Outcome {
    let (mu, _) = c.mu.build_discrete(c.discretize, measure_seed(seed))?;
    let m = mu.dim();
    let mut diag = json!({ "method": format!("{:?}", c.method).to_lowercase() });
    let eta = match c.method {
        StationaryMethod::Grid => {
            if m != 2 {
                return Err(Failure::Config(format!("the grid method needs 2 x 2 matrices, got {m} x {m}")));
            }
            let gs = stationary_measure_grid(&mu, &GridSettings { n_grid: c.n_grid, tol: c.tol, max_iter: c.max_iter })?;
            diag["converged"] = json!(gs.converged);
            diag["residual"] = json!(gs.residual);
            diag["iterations"] = json!(gs.iterations);
            diag["averaged"] = json!(gs.averaged);
            gs.into_result()?
        }
        StationaryMethod::Chain => stationary_measure_chain(&mu, c.burn_in, c.samples, seed, &ProjPoint::basis(m, 0))?,
    };
    let mut header = vec!["index".to_string(), "weight".to_string()];
    if m == 2 {
        header.push("angle".into());
    }
    header.extend((0..m).map(|i| format!("x{i}")));
    let mut t = Table::with_header(header);
    for (k, (v, &w)) in eta.points.iter().zip(&eta.weights).enumerate() {
        let mut row = vec![k.to_string(), num(w)];
        if m == 2 {
            row.push(num(v.angle()));
        }
        row.extend(v.rep().iter().map(|&x| num(x)));
        t.push(row);
    }
    sink.csv("stationary.csv", &t)?;
    let f = furstenberg_le(&mu, &eta)?;
    diag["points"] = json!(eta.len());
    diag["kernel_hits"] = json!(eta.kernel_hits);
    diag["furstenberg_le"] = json!({ "value": finite_or_str(f.value), "stderr": f.stderr, "kernel_pairs": f.kernel_pairs });
    sink.json("stationary.json", &diag)?;
    Ok(format!("stationary points={} furstenberg_le={}", eta.len(), num(f.value)))
}

fn mixing(c: MixingConfig, seed: u64, sink: &Sink) -> Outcome {
    let (mu, _) = c.mu.build_discrete(c.discretize, measure_seed(seed))?;
    if mu.dim() != 2 {
        return Err(Failure::Config(format!("mixing needs 2 x 2 matrices, got {0} x {0}", mu.dim())));
    }
    let gs = stationary_measure_grid(&mu, &GridSettings { n_grid: c.ngrid, ..GridSettings::default() })?;
    let eta = gs.into_result()?;
    let phis = standard_observables(c.ngrid)?;
    let rows = mixing_table(&mu, &phis, c.nmax, &eta)?;
    let mut t = Table::new(&["n", "phi_id", "sup_residual"]);
    for r in &rows {
        t.push(vec![r.n.to_string(), r.phi_id.to_string(), num(r.sup_residual)]);
    }
    sink.csv("mixing.csv", &t)?;
    let norms: Vec<f64> = phis.iter().map(|p| p.sup_norm()).collect();
    let fit = fit_mixing(&rows, &norms)?;
    let holder: Vec<f64> = phis.iter().map(|p| p.holder_norm(c.alpha)).collect();
    sink.json(
        "mixing_fit.json",
        &json!({ "sigma": fit.sigma, "k": fit.k, "r2": fit.r2, "rows_used": fit.rows_used, "alpha": c.alpha, "holder_norms": holder }),
    )?;
    Ok(format!("mixing sigma={} r2={}", num(fit.sigma), num(fit.r2)))
}

fn holder(c: HolderScanConfig, seed: u64, sink: &Sink) -> Outcome {
    let (mu, _) = c.mu.build_discrete(c.discretize, measure_seed(seed))?;
    let m = mu.dim();
    let delta = match &c.delta {
        Some(d) => SquareMatrix::from_rows(d)?,
        None => SquareMatrix::from_fn(m, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 })?,
    };
    let family = atom_shift_family(&mu, c.atom_index, &delta, &c.eps)?;
    let rows = holder_rows(&mu, &family, &HolderScanSettings { steps: c.steps, trials: c.trials, seed, p: c.p })?;
    let mut t = Table::new(&["w_p", "delta_l1", "stderr"]);
    for r in &rows {
        t.push(vec![num(r.w_p), num(r.delta_l1), num(r.stderr)]);
    }
    sink.csv("holder.csv", &t)?;
    let fit = fit_holder(&rows)?;
    sink.json("holder_fit.json", &json!({ "slope": fit.slope, "intercept": fit.intercept, "rows_used": fit.rows_used, "r2": fit.r2 }))?;
    Ok(format!("holder slope={} r2={} rows_used={}", num(fit.slope), num(fit.r2), fit.rows_used))
}

fn ld_cells(c: &LdpConfig) -> Vec<(usize, f64)> {
    match &c.plan {
        Some(plan) => plan.iter().flat_map(|p| p.n.iter().map(move |&n| (n, p.epsilon))).collect(),
        None => c.eps_list.iter().flat_map(|&e| c.n_list.iter().map(move |&n| (n, e))).collect(),
    }
}

fn ldp(c: LdpConfig, seed: u64, sink: &Sink) -> Outcome {
    let (src, _) = c.mu.build(&BuildOptions { discretize: c.discretize, seed: measure_seed(seed), ..BuildOptions::default() })?;
    let m = src.dim();
    let v0 = match &c.v0 {
        Some(v) if v.len() != m => return Err(Failure::Config(format!("v0 has length {}, expected {m}", v.len()))),
        Some(v) => ProjPoint::new(v)?,
        None => ProjPoint::basis(m, 0),
    };
    let (l1, l1_source) = match c.l1_ref {
        Some(x) => (x, "config"),
        None => {
            let rep = lyapunov_spectrum(&src, &SpectrumSettings::new(c.ref_steps, c.ref_trials, derive_seed(seed, 3), 1))?;
            (rep.exponents[0], "estimated")
        }
    };
    let cells = ld_cells(&c);
    let table = ld_tail_cells(&src, &v0, l1, &cells, c.trials, seed)?;
    let mut t = Table::new(&["n", "epsilon", "p_hat", "ci_lo", "ci_hi"]);
    for r in &table.rows {
        t.push(vec![r.n.to_string(), num(r.epsilon), num(r.p_hat), num(r.ci_lo), num(r.ci_hi)]);
    }
    sink.csv("ldp.csv", &t)?;
    let rates = fit_rate(&table)?;
    let mut t = Table::new(&["epsilon", "c_hat", "C_hat", "r2"]);
    for r in &rates.rows {
        t.push(vec![num(r.epsilon), num(r.c_hat), num(r.c_const), num(r.r2)]);
    }
    sink.csv("rates.csv", &t)?;
    sink.json("ldp.json", &json!({ "l1_ref": l1, "l1_ref_source": l1_source, "trials": c.trials, "monotone": rates.monotone, "rates": rates.rows }))?;
    Ok(format!("ldp cells={} monotone={}", cells.len(), rates.monotone))
}

fn example1(c: Example1Config, seed: u64, sink: &Sink) -> Outcome {
    let rows = example1_scan(&c.dist, &c.energies, c.discretize, &SpectrumSettings::new(c.steps, c.trials, seed, 1))?;
    let mut t = Table::new(&["energy", "L1", "stderr", "irreducible"]);
    for r in &rows {
        t.push(vec![num(r.energy), num(r.l1), num(r.stderr), r.irreducible.map_or(String::new(), |b| b.to_string())]);
    }
    sink.csv("example1.csv", &t)?;
    let min = rows.iter().map(|r| r.l1).fold(f64::INFINITY, f64::min);
    Ok(format!("example1 energies={} min_L1={}", rows.len(), num(min)))
}

fn example2(c: Example2Config, seed: u64, sink: &Sink) -> Outcome {
    let params = MixedModelParams { a: c.a, e: c.e, q: c.q, lambda: c.lambdas.first().copied().unwrap_or(1.0), dist: c.dist.clone() };
    params.validate()?;
    let n = default_truncation(c.q);
    let set = Example2Settings {
        steps: c.steps,
        trials: c.trials,
        seed,
        n_max: c.n_max.unwrap_or(n),
        m_max: c.m_max.unwrap_or(n),
        mc_per_term: c.mc_per_term,
        discretize: c.discretize,
    };
    let rep = example2_asymptotics(&params, &c.lambdas, &set)?;
    let mut t = Table::new(&["lambda", "L1_mc", "stderr", "q_log_lambda", "L1_formula", "residual"]);
    for r in &rep.rows {
        t.push(vec![num(r.lambda), num(r.l1_mc), num(r.stderr), num(r.q_log_lambda), num(r.l1_formula), num(r.residual)]);
    }
    sink.csv("example2.csv", &t)?;
    sink.json(
        "example2_fit.json",
        &json!({
            "slope": rep.slope, "intercept": rep.intercept, "r2": rep.r2, "strictly_decreasing": rep.strictly_decreasing,
            "residual_stderr": rep.rows.iter().map(|r| r.residual_stderr).collect::<Vec<_>>(),
            "series": rep.series, "base": rep.base, "ratio": rep.ratio, "formula_gap": rep.formula_gap,
            "realization": rep.realization, "warnings": params.warnings(c.p),
        }),
    )?;
    Ok(format!("example2 slope={} decreasing={}", rep.slope.map_or("none".into(), num), rep.strictly_decreasing))
}

fn example3(c: Example3Config, seed: u64, sink: &Sink) -> Outcome {
    let (sym, how) = symmetric_measure(&c.dist, c.m, c.samples, measure_seed(seed))?;
    let rep = example3_asymptotics(&sym, c.e, &c.lambdas, &SpectrumSettings::new(c.steps, c.trials, seed, 1))?;
    let mut t = Table::new(&["lambda", "L1_mc", "stderr", "m_log_lambda", "L1_formula", "residual"]);
    for r in &rep.rows {
        t.push(vec![num(r.lambda), num(r.l1_mc), num(r.stderr), num(r.m_log_lambda), num(r.l1_formula), num(r.residual)]);
    }
    sink.csv("example3.csv", &t)?;
    let (lo, hi) = sym.atoms().iter().flat_map(|s| s.eigenvalues()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), z| (l.min(z.0), h.max(z.0)));
    let energies: Vec<f64> = (0..11).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect();
    let moment = jacobi_moment_sup(&sym, c.p, &energies);
    sink.json(
        "example3_fit.json",
        &json!({
            "slope": rep.slope, "intercept": rep.intercept, "r2": rep.r2,
            "residual_stderr": rep.rows.iter().map(|r| r.residual_stderr).collect::<Vec<_>>(),
            "log_det_integral": rep.rows.first().map(|r| r.log_det_integral),
            "max_symplectic_residual": rep.max_symplectic_residual,
            "moment_check": { "p": c.p, "energies": energies, "sup": finite_or_str(moment) },
            "realization": how,
        }),
    )?;
    Ok(format!("example3 slope={} symplectic_residual={}", rep.slope.map_or("none".into(), num), num(rep.max_symplectic_residual)))
}

fn frostman(c: FrostmanConfig, sink: &Sink) -> Outcome {
    let grid = match &c.a_grid {
        Some(g) => g.points(),
        None => {
            let (lo, hi) = c.dist.hull();
            GridSpec { lo, hi, n: 201 }.points()
        }
    };
    let rep = frostman_moment(&c.dist, c.p, &grid)?;
    let mut t = Table::new(&["a", "integral"]);
    for &(a, v) in &rep.table {
        t.push(vec![num(a), num(v)]);
    }
    sink.csv("frostman.csv", &t)?;
    sink.json("frostman.json", &json!({ "p": c.p, "sup": finite_or_str(rep.sup), "argmax": rep.argmax }))?;
    Ok(format!("frostman sup={} argmax={}", num(rep.sup), num(rep.argmax)))
}
