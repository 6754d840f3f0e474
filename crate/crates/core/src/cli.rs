//! Command-line front end.
//!
//! Every subcommand reads its parameters from flags and, optionally, from a
//! TOML file given with `--config` (flags win). Results are written as CSV
//! preceded by a `#` comment block holding the tool version, the subcommand,
//! the seed, the fully resolved configuration as TOML, and summary values.

use std::env;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::converse::{fill_theta, gap_experiment, measure_experiment, MeanEstimator};
use crate::error::{check_range, Error, Result};
use crate::estimation::{measure_proxy_experiment, regret_series, ErrorMode, EstimatorSpec, MAX_ENUM_STEPS};
use crate::info::{kl_product, lemma6_bound_check, pinsker_check, tv_exact};
use crate::optimal::{HMap, RegionSpec};
use crate::schedulers::{run_policy, PolicySpec};
use crate::system::{decision_set_point, generate_trace, shannon_fdm_point, UtilityFunction};

/// Environment variable naming the directory relative `--out` paths resolve against.
pub const OUT_DIR_ENV: &str = "OPPSCHED_OUT_DIR";

const VERSION: &str = env!("CARGO_PKG_VERSION");

macro_rules! config {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr,)* }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Fields set here take precedence over `base`.
            pub fn overlay(self, base: Self) -> Self {
                Self { $($field: self.$field.or(base.$field),)* }
            }

            pub fn with_defaults(self) -> Self {
                Self { $($field: self.$field.or_else(|| Some($default)),)* }
            }
        }
    };
}

config! {
    SimulateArgs {
        /// Policy: greedy, plugin, fw-vanishing, fw-constant:ETA, genie:Q
        #[arg(long)]
        policy: String = "fw-vanishing".into(),
        /// Probability that user 2 is online
        #[arg(long)]
        q: f64 = 0.5,
        /// Number of slots
        #[arg(long)]
        horizon: usize = 1000,
        #[arg(long)]
        seed: u64 = 0,
        /// Utility: log1p, min, scaled-log:C, linear:A1,A2
        #[arg(long)]
        utility: String = "log1p".into(),
    }
}

config! {
    GapArgs {
        #[arg(long)]
        policy: String = "fw-vanishing".into(),
        /// Probability in [1/4, 3/4]
        #[arg(long)]
        q: f64 = 0.5,
        /// Comma-separated horizons, each at least 2
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize> = vec![100, 1000, 10000],
        /// Replications per horizon
        #[arg(long)]
        reps: usize = 200,
        #[arg(long)]
        seed: u64 = 42,
        /// conditional or realized
        #[arg(long)]
        estimator: String = "conditional".into(),
    }
}

config! {
    MeasureArgs {
        #[arg(long)]
        policy: String = "fw-vanishing".into(),
        /// Number of sampled probabilities
        #[arg(long)]
        k: usize = 50,
        /// Comma-separated horizons
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize> = vec![1000],
        #[arg(long)]
        reps: usize = 50,
        #[arg(long)]
        seed: u64 = 42,
        #[arg(long)]
        estimator: String = "conditional".into(),
    }
}

config! {
    RegionArgs {
        #[arg(long)]
        q: f64 = 0.5,
        /// Number of intervals per boundary piece
        #[arg(long)]
        grid: usize = 200,
    }
}

config! {
    Fig1Args {
        /// Total bandwidth
        #[arg(long = "B")]
        #[serde(rename = "B")]
        b: f64 = 0.7,
        /// Signal-to-noise ratio P/N
        #[arg(long)]
        snr: f64 = 3.0,
        #[arg(long)]
        grid: usize = 200,
    }
}

config! {
    RegretArgs {
        /// empirical-mean or constant:C
        #[arg(long)]
        estimator: String = "empirical-mean".into(),
        #[arg(long)]
        p: f64 = 0.5,
        /// Largest step
        #[arg(long)]
        m: usize = 1000,
        #[arg(long)]
        alpha: f64 = 2.0,
        /// exact or monte-carlo
        #[arg(long)]
        mode: String = "exact".into(),
        /// Monte-Carlo histories
        #[arg(long)]
        samples: usize = 10000,
        #[arg(long)]
        seed: u64 = 0,
    }
}

config! {
    MeasureEstArgs {
        #[arg(long)]
        estimator: String = "empirical-mean".into(),
        #[arg(long)]
        k: usize = 200,
        /// Comma-separated horizons
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize> = vec![22],
        #[arg(long)]
        alpha: f64 = 2.0,
        #[arg(long)]
        seed: u64 = 0,
    }
}

config! {
    InfoArgs {
        /// Comma-separated values of p
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64> = grid_quarter(),
        /// Comma-separated values of q
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64> = grid_quarter(),
        /// Comma-separated dimensions, at most 22
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize> = (1..=12).collect(),
    }
}

fn grid_quarter() -> Vec<f64> {
    (0..=10).map(|i| (25 + 5 * i) as f64 / 100.0).collect()
}

const SIMULATE_SCHEMA: &str = "CSV columns: t,s,x1,x2,z,theta
  t      slot index from 0
  s      channel state of user 2
  x1,x2  rates served in slot t
  z      conditional E[x1 | s = 1] before slot t
  theta  implied estimate of q from slots 0..t-1 (empty at t = 0)";

const GAP_SCHEMA: &str = "CSV columns: T,phi_hat,se,gap,scaled_gap,bound_rhs,theta_sq_sum,combined_se,holds
  phi_hat      utility of the mean time-average rate vector
  se           standard error of phi_hat
  gap          phi* - phi_hat
  scaled_gap   T gap / ln T
  bound_rhs    (beta^2 / 8T) theta_sq_sum
  theta_sq_sum mean of sum_{t=1}^{T-1} (theta[t] - q)^2
  combined_se  standard error of phi_hat + bound_rhs
  holds        phi_hat <= phi* - bound_rhs + 3 combined_se";

const MEASURE_SCHEMA: &str = "CSV columns: q,T,scaled_gap
  one row per sampled probability and horizon; the header reports the
  threshold 3 beta^2 / 2^13 and the fraction of samples at or above it";

const REGION_SCHEMA: &str = "CSV columns: boundary,param,x1,x2
  upper  (1 - q + q r, q (1 - r^2)) with param = r
  lower  segment from (1 - q, q) to (1, 0) with param = position in [0, 1]";

const FIG1_SCHEMA: &str = "CSV columns: curve,param,x1,x2
  decision-set  (r, 1 - r^2) with param = r
  shannon-fdm   bandwidth split theta with param = theta";

const REGRET_SCHEMA: &str = "CSV columns: n,per_step,cumulative,V_n,normalized[,se]
  per_step    E|A_n - p|^alpha
  cumulative  sum of per_step up to n
  V_n         sum_{j<=n} j^(-alpha/2)
  normalized  cumulative / V_n
  se          Monte-Carlo standard error of per_step (monte-carlo mode only)";

const MEASURE_EST_SCHEMA: &str = "CSV columns: p,m,normalized
  normalized  (1/V_m) sum_{n<=m} E_p|A_n - p|^alpha at horizon m, a
              finite-horizon proxy for the limsup; the header reports the
              threshold and the fraction of samples at or above it per m";

const INFO_SCHEMA: &str = "CSV columns: p,q,n,tv,kl_pq,kl_qp,tv_bound,pinsker_rhs,tv_bound_holds,pinsker_holds
  kl in nats; tv_bound columns (c |p - q| sqrt(n), c = sqrt(8/3)) are empty unless p and q lie in [1/4, 3/4]";

#[derive(Debug, Parser)]
#[command(name = "oppsched", version, about = "Two-user opportunistic scheduling lab")]
struct Cli {
    /// TOML file with parameters for the subcommand; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores); results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output CSV path; relative paths resolve against $OPPSCHED_OUT_DIR when set.
    /// Without it the CSV goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one policy on one channel trace
    #[command(after_help = SIMULATE_SCHEMA)]
    Simulate(SimulateArgs),
    /// Utility gap against the estimation bound over a horizon ladder
    #[command(after_help = GAP_SCHEMA)]
    Gap(GapArgs),
    /// Scaled gaps at uniformly sampled channel probabilities
    #[command(after_help = MEASURE_SCHEMA)]
    Measure(MeasureArgs),
    /// Boundary of the capacity region
    #[command(after_help = REGION_SCHEMA)]
    Region(RegionArgs),
    /// Decision-set curve next to the frequency-division Shannon curve
    #[command(after_help = FIG1_SCHEMA)]
    Fig1(Fig1Args),
    /// Regret series of a Bernoulli estimator
    #[command(after_help = REGRET_SCHEMA)]
    Regret(RegretArgs),
    /// Normalized estimation regret at sampled probabilities
    #[command(name = "measure-est", after_help = MEASURE_EST_SCHEMA)]
    MeasureEst(MeasureEstArgs),
    /// Total variation, KL divergence and their bounds for product Bernoulli laws
    #[command(after_help = INFO_SCHEMA)]
    Info(InfoArgs),
}

/// A CSV result with its comment header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: String,
    pub notes: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Diagnostics for stderr.
    pub warnings: Vec<String>,
}

impl Table {
    fn new<C: Serialize>(command: &'static str, seed: Option<u64>, config: &C, columns: &[&'static str]) -> Result<Self> {
        Ok(Self {
            command,
            seed,
            config: toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?,
            notes: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# oppsched {VERSION}");
        let _ = writeln!(s, "# command: {}", self.command);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(s, "# seed: {seed}");
            }
            None => s.push_str("# seed: none\n"),
        }
        s.push_str("# config:\n");
        for line in self.config.lines() {
            let _ = writeln!(s, "#   {line}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// The lines of a rendered table that are not comments.
pub fn data_section(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Parses the configuration echoed in a rendered header.
pub fn config_from_header<C: DeserializeOwned>(csv: &str) -> Result<C> {
    let body: String = csv
        .lines()
        .skip_while(|l| *l != "# config:")
        .skip(1)
        .map_while(|l| l.strip_prefix("#   "))
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        });
    toml::from_str(&body).map_err(|e| Error::Config(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn req<T: Clone>(v: &Option<T>) -> T {
    v.clone().expect("filled by with_defaults")
}

fn parse_policy(s: &str) -> Result<PolicySpec> {
    s.parse()
}

fn check_positive(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::OutOfRange {
            name,
            value: 0.0,
            range: "[1, inf)",
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 2]",
        });
    }
    Ok(())
}

fn simulate(cfg: &SimulateArgs) -> Result<Table> {
    let policy = parse_policy(&req(&cfg.policy))?;
    let u: UtilityFunction<f64> = req(&cfg.utility).parse()?;
    let q = req(&cfg.q);
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let horizon = req(&cfg.horizon);
    check_positive("horizon", horizon)?;
    let seed = req(&cfg.seed);
    let state = policy.build(&u)?;

    let trace = generate_trace(q, horizon, seed)?;
    let mut rec = run_policy(state, &trace);
    let mut table = Table::new("simulate", Some(seed), cfg, &["t", "s", "x1", "x2", "z", "theta"])?;
    match HMap::for_utility(&u) {
        Ok(h) => fill_theta(&mut rec, &h)?,
        Err(e) => table.warnings.push(format!("theta not available: {e}")),
    }
    rec.check()?;
    table.note("ones", trace.ones());
    table.note("x1_bar", rec.running_average.x1);
    table.note("x2_bar", rec.running_average.x2);
    table.note("utility", u.value(&rec.running_average));
    for (t, (x, &s)) in rec.decisions.iter().zip(&trace.states).enumerate() {
        let theta = if t == 0 { None } else { rec.theta_series.get(t - 1) };
        table.rows.push(vec![
            t.to_string(),
            s.to_string(),
            num(x.x1),
            num(x.x2),
            num(rec.z_series[t]),
            theta.map(|&v| num(v)).unwrap_or_default(),
        ]);
    }
    Ok(table)
}

fn gap(cfg: &GapArgs) -> Result<Table> {
    let policy = parse_policy(&req(&cfg.policy))?;
    let q = req(&cfg.q);
    check_range("q", q, 0.25, 0.75, "[1/4, 3/4]")?;
    let horizons = req(&cfg.horizons);
    if horizons.is_empty() {
        return Err(Error::Config("no horizons given".into()));
    }
    for &t in &horizons {
        if t < 2 {
            return Err(Error::OutOfRange {
                name: "horizon",
                value: t as f64,
                range: "[2, inf)",
            });
        }
    }
    let reps = req(&cfg.reps);
    check_positive("reps", reps)?;
    let estimator: MeanEstimator = req(&cfg.estimator).parse()?;
    let seed = req(&cfg.seed);

    let series = gap_experiment(policy, q, &horizons, reps, seed, estimator)?;
    let mut table = Table::new(
        "gap",
        Some(seed),
        cfg,
        &["T", "phi_hat", "se", "gap", "scaled_gap", "bound_rhs", "theta_sq_sum", "combined_se", "holds"],
    )?;
    table.note("phi_star", series.phi_star);
    for row in &series.rows {
        table.rows.push(vec![
            row.horizon.to_string(),
            num(row.phi_hat),
            num(row.se),
            num(row.gap),
            num(row.scaled_gap),
            num(row.bound_rhs),
            num(row.theta_sq_sum),
            num(row.combined_se),
            row.bound_holds(series.phi_star).to_string(),
        ]);
    }
    table.warnings = series.warnings();
    Ok(table)
}

fn measure(cfg: &MeasureArgs) -> Result<Table> {
    let policy = parse_policy(&req(&cfg.policy))?;
    let k = req(&cfg.k);
    check_positive("k", k)?;
    let horizons = req(&cfg.horizons);
    if horizons.is_empty() {
        return Err(Error::Config("no horizons given".into()));
    }
    for &t in &horizons {
        if t < 2 {
            return Err(Error::OutOfRange {
                name: "horizon",
                value: t as f64,
                range: "[2, inf)",
            });
        }
    }
    let reps = req(&cfg.reps);
    check_positive("reps", reps)?;
    let estimator: MeanEstimator = req(&cfg.estimator).parse()?;
    let seed = req(&cfg.seed);

    let mut table = Table::new("measure", Some(seed), cfg, &["q", "T", "scaled_gap"])?;
    table.note("note", "single finite-horizon evaluation per T in place of the limsup");
    for &t in &horizons {
        let report = measure_experiment(policy, k, t, reps, seed, estimator)?;
        if table.notes.len() == 1 {
            table.note("threshold", report.threshold);
        }
        table.note(format!("fraction_T{t}"), report.fraction);
        for (q, g) in report.samples {
            table.rows.push(vec![num(q), t.to_string(), num(g)]);
        }
    }
    Ok(table)
}

fn region(cfg: &RegionArgs) -> Result<Table> {
    let q = req(&cfg.q);
    let spec = RegionSpec::new(q)?;
    let grid = req(&cfg.grid);
    check_positive("grid", grid)?;

    let mut table = Table::new("region", None, cfg, &["boundary", "param", "x1", "x2"])?;
    for i in 0..=grid {
        let r = i as f64 / grid as f64;
        let x = spec.boundary(r);
        table.rows.push(vec!["upper".into(), num(r), num(x.x1), num(x.x2)]);
    }
    for i in 0..=grid {
        let w = i as f64 / grid as f64;
        let x1 = 1.0 - q + q * w;
        table.rows.push(vec!["lower".into(), num(w), num(x1), num(1.0 - x1)]);
    }
    Ok(table)
}

fn fig1(cfg: &Fig1Args) -> Result<Table> {
    let b = req(&cfg.b);
    let snr = req(&cfg.snr);
    let grid = req(&cfg.grid);
    check_positive("grid", grid)?;
    shannon_fdm_point(0.5, b, snr)?;

    let mut table = Table::new("fig1", None, cfg, &["curve", "param", "x1", "x2"])?;
    for i in 0..=grid {
        let r = i as f64 / grid as f64;
        let x = decision_set_point(1, r)?;
        table.rows.push(vec!["decision-set".into(), num(r), num(x.x1), num(x.x2)]);
    }
    for i in 0..=grid {
        let theta = i as f64 / grid as f64;
        let x = shannon_fdm_point(theta, b, snr)?;
        table.rows.push(vec!["shannon-fdm".into(), num(theta), num(x.x1), num(x.x2)]);
    }
    Ok(table)
}

fn regret(cfg: &RegretArgs) -> Result<Table> {
    let est: EstimatorSpec<f64> = req(&cfg.estimator).parse()?;
    let p = req(&cfg.p);
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let m = req(&cfg.m);
    check_positive("m", m)?;
    let alpha = req(&cfg.alpha);
    check_alpha(alpha)?;
    let seed = req(&cfg.seed);
    let mode = match req(&cfg.mode).as_str() {
        "exact" => ErrorMode::Exact,
        "monte-carlo" => {
            let samples = req(&cfg.samples);
            if samples < 2 {
                return Err(Error::OutOfRange {
                    name: "samples",
                    value: samples as f64,
                    range: "[2, inf)",
                });
            }
            ErrorMode::MonteCarlo { samples, seed }
        }
        other => {
            return Err(Error::Parse {
                what: "mode",
                input: other.to_string(),
            })
        }
    };

    let s = regret_series(&est, p, m, alpha, mode)?;
    let mut columns = vec!["n", "per_step", "cumulative", "V_n", "normalized"];
    if s.standard_errors.is_some() {
        columns.push("se");
    }
    let mut table = Table::new("regret", Some(seed), cfg, &columns)?;
    for (i, v) in s.normalized().into_iter().enumerate() {
        let mut row = vec![(i + 1).to_string(), num(s.per_step[i]), num(s.cumulative[i]), num(s.normalizers[i]), num(v)];
        if let Some(se) = &s.standard_errors {
            row.push(num(se[i]));
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn measure_est(cfg: &MeasureEstArgs) -> Result<Table> {
    let est: EstimatorSpec<f64> = req(&cfg.estimator).parse()?;
    let k = req(&cfg.k);
    let horizons = req(&cfg.horizons);
    if horizons.is_empty() {
        return Err(Error::Config("no horizons given".into()));
    }
    for &m in &horizons {
        check_positive("m", m)?;
    }
    let alpha = req(&cfg.alpha);
    check_alpha(alpha)?;
    let seed = req(&cfg.seed);

    let mut table = Table::new("measure-est", Some(seed), cfg, &["p", "m", "normalized"])?;
    table.note("note", "finite-horizon proxy for the limsup at each m");
    for &m in &horizons {
        let report = measure_proxy_experiment(&est, k, m, alpha, seed, ErrorMode::Exact)?;
        if table.notes.len() == 1 {
            table.note("threshold", report.threshold);
        }
        let fraction = report.fraction.map(num).unwrap_or_else(|| "none".into());
        table.note(format!("fraction_m{m}"), fraction);
        for (p, v) in report.samples {
            table.rows.push(vec![num(p), m.to_string(), num(v)]);
        }
    }
    Ok(table)
}

fn info(cfg: &InfoArgs) -> Result<Table> {
    let ps = req(&cfg.p);
    let qs = req(&cfg.q);
    let ns = req(&cfg.n);
    for &v in ps.iter().chain(&qs) {
        check_range("probability", v, 0.0, 1.0, "[0, 1]")?;
    }
    for &n in &ns {
        if n > MAX_ENUM_STEPS {
            return Err(Error::TooLarge(n));
        }
    }

    let mut table = Table::new(
        "info",
        None,
        cfg,
        &["p", "q", "n", "tv", "kl_pq", "kl_qp", "tv_bound", "pinsker_rhs", "tv_bound_holds", "pinsker_holds"],
    )?;
    let in_band = |x: f64| (0.25..=0.75).contains(&x);
    for &p in &ps {
        for &q in &qs {
            for &n in &ns {
                let tv = tv_exact(p, q, n)?;
                let pin = pinsker_check(p, q, n)?;
                let (bound, holds) = if in_band(p) && in_band(q) {
                    let c = lemma6_bound_check(p, q, n)?;
                    (num(c.bound), c.holds.to_string())
                } else {
                    (String::new(), String::new())
                };
                table.rows.push(vec![
                    num(p),
                    num(q),
                    n.to_string(),
                    num(tv),
                    num(kl_product(p, q, n)?),
                    num(kl_product(q, p, n)?),
                    bound,
                    num(pin.bound),
                    holds,
                    pin.holds.to_string(),
                ]);
            }
        }
    }
    Ok(table)
}

fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn execute(cli: &Cli) -> Result<Table> {
    let file = cli.config.as_deref();
    match &cli.command {
        Command::Simulate(a) => simulate(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Gap(a) => gap(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Measure(a) => measure(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Region(a) => region(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Fig1(a) => fig1(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Regret(a) => regret(&a.clone().overlay(load(file)?).with_defaults()),
        Command::MeasureEst(a) => measure_est(&a.clone().overlay(load(file)?).with_defaults()),
        Command::Info(a) => info(&a.clone().overlay(load(file)?).with_defaults()),
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Runs the tool on `argv` (including the program name), writing CSV to
/// `stdout` unless `--out` is given and diagnostics to `stderr`. Returns the
/// process exit status: 0 on success, 2 for invalid input, 1 for failures
/// during computation or output.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let pool = match cli.threads {
        Some(0) => {
            let _ = writeln!(stderr, "error: --threads must be at least 1");
            return 2;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let table = match pool.install(|| execute(&cli)) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return match e {
                Error::Io(_) => 1,
                _ => 2,
            };
        }
    };
    for w in &table.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let text = table.render();
    let written = match &cli.out {
        Some(path) => {
            let path = resolve_out(path);
            path.parent()
                .filter(|d| !d.as_os_str().is_empty())
                .map_or(Ok(()), fs::create_dir_all)
                .and_then(|_| fs::write(&path, &text))
        }
        None => stdout.write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// [`run`] against the process's standard streams.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
