//! Experiment runners behind the `zerocorr` binary.
//!
//! Every command resolves a [`Settings`] record (command line over JSON
//! config over defaults) into a validated command config, runs it on a
//! dedicated rayon pool and returns a [`ResultRecord`]. Records serialize
//! to CSV (`#` metadata lines, header, rows) or JSON; floats are written
//! with 17 significant digits. Worker counts never reach the output, so a
//! record depends on the config alone.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ensemble::{szego_scaling_error, EnsembleParams, EnsembleSampler};
use crate::error::{Error, Result};
use crate::formulas::{
    bilaplacian_g_closed, diagonal_atom, gamma_m, hannay_h, limit_pair_density, CorrelationCurve, Dimension,
};
use crate::gaussian::{g2_quadrature, g_full_mc, gn_monte_carlo, gram_to_xi, GramMatrix, XiMatrix};
use crate::roots::find_roots;
use crate::stats::{
    density_estimate, empirical_pair_correlation, pair_correlation_estimate, poisson_pattern, rescale_roots,
    EmpiricalConfig, ScaledWindow,
};

/// Output layout version, bumped on any change to columns or metadata keys.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "ZEROCORR_WORKERS";

/// Lattice spacing of the Szegő check grid.
pub const SZEGO_STEP: f64 = 0.25;

pub fn version() -> String {
    format!("zerocorr-v{}-{}", env!("CARGO_PKG_VERSION"), option_env!("ZEROCORR_BUILD_REV").unwrap_or("dev"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    TheoryCurve,
    EmpiricalPc,
    SzegoCheck,
    Gn,
    SelfTest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TheoryCurve => "theory-curve",
            Command::EmpiricalPc => "empirical-pc",
            Command::SzegoCheck => "szego-check",
            Command::Gn => "gn",
            Command::SelfTest => "self-test",
        }
    }
}

/// One or several values; accepted as a scalar or an array in JSON and as a
/// comma-separated list on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T: FromStr> FromStr for OneOrMany<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|_| format!("cannot parse '{p}'")))
            .collect::<std::result::Result<Vec<T>, String>>()
            .map(OneOrMany::Many)
    }
}

/// Points on the real line: `start:stop:step` (both ends included), a
/// comma-separated list, or, in JSON, an array.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PointSpec {
    Text(String),
    List(Vec<f64>),
}

impl FromStr for PointSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let spec = PointSpec::Text(s.to_string());
        spec.points()?;
        Ok(spec)
    }
}

impl PointSpec {
    pub fn points(&self) -> std::result::Result<Vec<f64>, String> {
        let text = match self {
            PointSpec::List(v) => return Ok(v.clone()),
            PointSpec::Text(t) => t.trim(),
        };
        if text.is_empty() {
            return Ok(Vec::new());
        }
        if text.contains(':') {
            let parts: Vec<f64> = text
                .split(':')
                .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse '{p}' in range '{text}'")))
                .collect::<std::result::Result<_, _>>()?;
            let [start, stop, step] = parts[..] else {
                return Err(format!("range '{text}' must be start:stop:step"));
            };
            if !(step > 0.0) || !(stop >= start) {
                return Err(format!("range '{text}' needs step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step).round();
            if ((start + n * step) - stop).abs() > 1e-9 * step.max(stop.abs()) || n > 1e7 {
                return Err(format!("range '{text}': (stop - start) is not a multiple of step"));
            }
            return Ok((0..=n as usize).map(|k| start + step * k as f64).collect());
        }
        text.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("cannot parse '{p}'")))
            .collect()
    }
}

/// Complex matrix entry: a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub type MatrixSpec = Vec<Vec<Entry>>;

// The untagged enums are read through `Value`: with exact number
// preservation enabled, serde's buffered untagged matching does not see
// JSON numbers as numbers.
fn from_value<'de, D: serde::Deserializer<'de>, T>(
    d: D,
    what: &str,
    convert: impl FnOnce(Value) -> Option<T>,
) -> std::result::Result<T, D::Error> {
    let v = Value::deserialize(d)?;
    let shown = v.to_string();
    convert(v).ok_or_else(|| serde::de::Error::custom(format!("invalid {what}: {shown}")))
}

impl<'de, T: serde::de::DeserializeOwned> Deserialize<'de> for OneOrMany<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        from_value(d, "value or list", |v| match v {
            Value::Array(_) => serde_json::from_value(v).ok().map(OneOrMany::Many),
            other => serde_json::from_value(other).ok().map(OneOrMany::One),
        })
    }
}

impl<'de> Deserialize<'de> for PointSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        from_value(d, "point specification", |v| match v {
            Value::String(s) => Some(PointSpec::Text(s)),
            Value::Array(_) => serde_json::from_value(v).ok().map(PointSpec::List),
            _ => None,
        })
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        from_value(d, "matrix entry", |v| match v {
            Value::Number(n) => n.as_f64().map(Entry::Real),
            Value::Array(_) => serde_json::from_value(v).ok().map(Entry::Complex),
            _ => None,
        })
    }
}

/// Raw run parameters. Every field is optional so that layers can be
/// merged; the same names are used on the command line and in JSON
/// config files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub m: Option<u32>,
    pub degree: Option<OneOrMany<u32>>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub radius: Option<f64>,
    pub bins: Option<PointSpec>,
    pub grid: Option<PointSpec>,
    pub out: Option<String>,
    pub workers: Option<usize>,
    pub gram: Option<MatrixSpec>,
    pub vectors: Option<MatrixSpec>,
}

impl Settings {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            m: self.m.or(lower.m),
            degree: self.degree.or(lower.degree),
            samples: self.samples.or(lower.samples),
            seed: self.seed.or(lower.seed),
            radius: self.radius.or(lower.radius),
            bins: self.bins.or(lower.bins),
            grid: self.grid.or(lower.grid),
            out: self.out.or(lower.out),
            workers: self.workers.or(lower.workers),
            gram: self.gram.or(lower.gram),
            vectors: self.vectors.or(lower.vectors),
        }
    }

    /// Built-in defaults for `cmd`.
    pub fn defaults(cmd: Command) -> Settings {
        let mut s = Settings {
            m: Some(1),
            seed: Some(42),
            ..Settings::default()
        };
        match cmd {
            Command::TheoryCurve => s.grid = Some(PointSpec::Text("0.1:5:0.1".into())),
            Command::EmpiricalPc => {
                s.degree = Some(OneOrMany::One(500));
                s.samples = Some(10_000);
                s.radius = Some(5.0);
                s.bins = Some(PointSpec::Text("0.1:3.1:0.2".into()));
            }
            Command::SzegoCheck => {
                s.degree = Some(OneOrMany::Many(vec![25, 100, 400, 1600]));
                s.radius = Some(2.0);
            }
            Command::Gn => s.samples = Some(1_000_000),
            Command::SelfTest => {}
        }
        s
    }
}

/// Worker count from the environment, if set and valid.
pub fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::config(format!("{WORKERS_ENV}={v} is not a worker count"))),
        _ => Ok(None),
    }
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing required parameter --{name}")))
}

fn dimension(m: Option<u32>) -> Result<Dimension> {
    Dimension::new(need(m, "m")?).map_err(|_| Error::config("--m must be >= 1"))
}

/// Finite float serialized with 17 significant digits; non-finite values
/// become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(serde_json::Number::from_str(&format!("{x:.16e}")).expect("formatted float parses"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub command: String,
    pub version: String,
    pub config: Value,
    pub metadata: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultRecord {
    fn new(cmd: Command, config: Value, columns: &[&str]) -> Self {
        ResultRecord {
            schema: SCHEMA_VERSION,
            command: cmd.name().to_string(),
            version: version(),
            config,
            metadata: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: Value) {
        self.metadata.insert(key.to_string(), value);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# schema: {}\n", self.schema));
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# config: {}\n", self.config));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Null => "nan".to_string(),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// Writes JSON when `path` ends in `.json`, CSV otherwise; no path means
    /// CSV on stdout.
    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) if p.extension().is_some_and(|e| e == "json") => std::fs::write(p, self.to_json())?,
            Some(p) => std::fs::write(p, self.to_csv())?,
            None => print!("{}", self.to_csv()),
        }
        Ok(())
    }
}

/// Result of a run; `failed` is set when a self-test check did not pass.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub record: ResultRecord,
    pub failed: bool,
}

/// Runs `cmd` with fully merged settings.
pub fn run(cmd: Command, settings: &Settings) -> Result<Outcome> {
    let workers = match settings.workers {
        Some(w) => Some(w),
        None => env_workers()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::config("--workers must be >= 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cmd {
        Command::TheoryCurve => theory_curve(settings).map(ok),
        Command::EmpiricalPc => empirical_pc(settings).map(ok),
        Command::SzegoCheck => szego_check(settings).map(ok),
        Command::Gn => gn(settings).map(ok),
        Command::SelfTest => self_test(settings),
    })
}

fn ok(record: ResultRecord) -> Outcome {
    Outcome { record, failed: false }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryCurveConfig {
    pub m: Dimension,
    pub grid: Vec<f64>,
}

impl TheoryCurveConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        let grid = need(s.grid.clone(), "grid")?.points().map_err(Error::config)?;
        if grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::config("--grid points must be finite and > 0"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("--grid points must be strictly ascending"));
        }
        Ok(TheoryCurveConfig { m: dimension(s.m)?, grid })
    }
}

pub fn cmd_theory_curve(cfg: &TheoryCurveConfig) -> Result<ResultRecord> {
    let curve = CorrelationCurve::tabulate(cfg.grid.clone(), |r| limit_pair_density(cfg.m, r))?;
    let mut rec = ResultRecord::new(Command::TheoryCurve, serde_json::to_value(cfg)?, &["r", "pair_density", "stderr"]);
    rec.meta(
        "diagonal_atom",
        match diagonal_atom(cfg.m) {
            Some(a) => json!({ "at": 0, "mass": num(a.mass) }),
            None => Value::Null,
        },
    );
    rec.rows = curve.iter().map(|(r, v, e)| vec![num(r), num(v), num(e)]).collect();
    Ok(rec)
}

fn theory_curve(s: &Settings) -> Result<ResultRecord> {
    cmd_theory_curve(&TheoryCurveConfig::resolve(s)?)
}

pub fn resolve_empirical(s: &Settings) -> Result<EmpiricalConfig> {
    if dimension(s.m)?.get() != 1 {
        return Err(Error::config("empirical-pc supports --m 1 only"));
    }
    let degrees = need(s.degree.clone(), "degree")?.to_vec();
    let [degree] = degrees[..] else {
        return Err(Error::config("empirical-pc takes a single --degree"));
    };
    let samples = need(s.samples, "samples")?;
    if samples < crate::stats::MIN_SAMPLES {
        return Err(Error::config(format!("--samples must be >= {}", crate::stats::MIN_SAMPLES)));
    }
    let radius = need(s.radius, "radius")?;
    ScaledWindow::new(radius, degree).map_err(|e| Error::config(format!("--radius: {e}")))?;
    let edges = need(s.bins.clone(), "bins")?.points().map_err(Error::config)?;
    Ok(EmpiricalConfig {
        degree,
        samples,
        seed: need(s.seed, "seed")?,
        radius,
        edges,
    })
}

pub fn cmd_empirical_pc(cfg: &EmpiricalConfig) -> Result<ResultRecord> {
    let res = empirical_pair_correlation(cfg)?;
    let mut rec = ResultRecord::new(
        Command::EmpiricalPc,
        serde_json::to_value(cfg)?,
        &["r_lo", "r_hi", "r", "g_hat", "stderr", "theory_binned", "theory_center"],
    );
    rec.meta("seed", json!(cfg.seed));
    rec.meta("samples", json!(cfg.samples));
    rec.meta("streams", json!([0, cfg.samples - 1]));
    rec.meta("intensity", num(res.estimate.intensity));
    rec.meta(
        "density",
        json!({ "value": num(res.density.value), "stderr": num(res.density.stderr), "limit": num(1.0 / PI) }),
    );
    rec.meta("empty_bins", json!(res.estimate.empty_bins));
    rec.meta("worst_residual", num(res.worst_residual));
    for (b, (r, g, se)) in res.estimate.curve.iter().enumerate() {
        rec.rows.push(vec![
            num(res.estimate.edges[b]),
            num(res.estimate.edges[b + 1]),
            num(r),
            num(g),
            num(se),
            num(res.theory[b]),
            num(hannay_h(0.5 * r * r)),
        ]);
    }
    Ok(rec)
}

fn empirical_pc(s: &Settings) -> Result<ResultRecord> {
    cmd_empirical_pc(&resolve_empirical(s)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SzegoConfig {
    pub m: Dimension,
    pub degrees: Vec<u32>,
    pub radius: f64,
    pub step: f64,
}

impl SzegoConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        let degrees = need(s.degree.clone(), "degree")?.to_vec();
        if degrees.is_empty() {
            return Err(Error::config("--degree needs at least one value"));
        }
        let radius = need(s.radius, "radius")?;
        for &n in &degrees {
            if n < 4 {
                return Err(Error::config(format!("--degree {n}: every degree must be >= 4")));
            }
            let limit = 0.5 * f64::from(n).sqrt();
            if !(radius > 0.0) || radius > limit {
                return Err(Error::config(format!(
                    "--radius {radius} exceeds sqrt(N)/2 = {limit} for N = {n}"
                )));
            }
        }
        Ok(SzegoConfig {
            m: dimension(s.m)?,
            degrees,
            radius,
            step: SZEGO_STEP,
        })
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn cmd_szego_check(cfg: &SzegoConfig) -> Result<ResultRecord> {
    let errors = cfg
        .degrees
        .iter()
        .map(|&n| szego_scaling_error(cfg.m, n, cfg.radius, cfg.step))
        .collect::<Result<Vec<f64>>>()?;
    let mut rec = ResultRecord::new(Command::SzegoCheck, serde_json::to_value(cfg)?, &["N", "sup_error"]);
    if cfg.degrees.len() > 1 {
        let ns: Vec<f64> = cfg.degrees.iter().map(|&n| f64::from(n)).collect();
        rec.meta("slope", num(log_log_slope(&ns, &errors)));
    }
    rec.rows = cfg.degrees.iter().zip(&errors).map(|(&n, &e)| vec![json!(n), num(e)]).collect();
    Ok(rec)
}

fn szego_check(s: &Settings) -> Result<ResultRecord> {
    cmd_szego_check(&SzegoConfig::resolve(s)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GnConfig {
    pub gram: Option<MatrixSpec>,
    pub vectors: Option<MatrixSpec>,
    pub samples: u64,
    pub seed: u64,
}

impl GnConfig {
    pub fn resolve(s: &Settings) -> Result<Self> {
        if s.gram.is_some() == s.vectors.is_some() {
            return Err(Error::config("gn needs exactly one of --gram or --vectors"));
        }
        let samples = need(s.samples, "samples")?;
        if samples < 2 {
            return Err(Error::config("--samples must be >= 2"));
        }
        Ok(GnConfig {
            gram: s.gram.clone(),
            vectors: s.vectors.clone(),
            samples,
            seed: need(s.seed, "seed")?,
        })
    }
}

fn matrix(spec: &MatrixSpec, what: &str) -> Result<Vec<Vec<Complex64>>> {
    if spec.is_empty() || spec.iter().any(|r| r.len() != spec[0].len()) {
        return Err(Error::config(format!("--{what} must be a non-empty rectangular matrix")));
    }
    Ok(spec.iter().map(|r| r.iter().map(|e| e.value()).collect()).collect())
}

fn xi_json(xi: &XiMatrix) -> Value {
    let n = xi.n();
    Value::Array(
        (0..n)
            .map(|j| Value::Array((0..n).map(|k| json!([num(xi.get(j, k).re), num(xi.get(j, k).im)])).collect()))
            .collect(),
    )
}

pub fn cmd_gn(cfg: &GnConfig) -> Result<ResultRecord> {
    let mut rec = ResultRecord::new(Command::Gn, serde_json::to_value(cfg)?, &["quantity", "value", "stderr"]);
    let (gram, estimate, xi) = match (&cfg.gram, &cfg.vectors) {
        (Some(spec), _) => {
            let rows = matrix(spec, "gram")?;
            let n = rows.len();
            if rows[0].len() != n {
                return Err(Error::config("--gram must be square"));
            }
            let gram = GramMatrix::from_entries(n, rows.concat())?;
            let xi = gram_to_xi(&gram)?;
            let est = gn_monte_carlo(&xi, cfg.samples, cfg.seed)?;
            (gram, est, Some(xi))
        }
        (None, Some(spec)) => {
            let vectors = matrix(spec, "vectors")?;
            let gram = GramMatrix::from_vectors(&vectors)?;
            let est = g_full_mc(&vectors, cfg.samples, cfg.seed)?;
            let xi = match gram_to_xi(&gram) {
                Ok(xi) => Some(xi),
                Err(Error::RankDeficient { .. }) if gram.n() == 2 => None,
                Err(e) => return Err(e),
            };
            (gram, est, xi)
        }
        (None, None) => return Err(Error::config("gn needs --gram or --vectors")),
    };
    rec.meta("n", json!(gram.n()));
    rec.meta("xi", xi.as_ref().map_or(Value::Null, xi_json));
    rec.meta("seed", json!(cfg.seed));
    rec.meta("samples", json!(cfg.samples));
    rec.meta("streams", json!([0, cfg.samples - 1]));
    rec.rows.push(vec![json!("monte_carlo"), num(estimate.value), num(estimate.stderr)]);
    if gram.n() == 2 {
        let c = gram.get(1, 0).norm().min(1.0);
        rec.rows.push(vec![json!("quadrature"), num(g2_quadrature(c)?), num(0.0)]);
    }
    Ok(rec)
}

fn gn(s: &Settings) -> Result<ResultRecord> {
    cmd_gn(&GnConfig::resolve(s)?)
}

struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value <= self.bound
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Quick end-to-end checks, each reduced to `value <= bound`.
fn self_test(s: &Settings) -> Result<Outcome> {
    let seed = s.seed.unwrap_or(42);
    let mut checks = Vec::new();

    let series = (0..20)
        .map(|k| {
            let t = 1e-3 * 300f64.powf(k as f64 / 19.0);
            (hannay_h(t) - (t + t.powi(3) * (2.0 / 45.0 * t * t - 2.0 / 9.0))).abs() / (5.0 * t.powi(7))
        })
        .fold(0.0, f64::max);
    checks.push(Check { name: "series_ratio", value: series, bound: 1.0 });

    let mut degeneration: f64 = 0.0;
    for k in 0..50 {
        let t = 1e-2 * 5000f64.powf(k as f64 / 49.0);
        degeneration = degeneration.max((gamma_m(Dimension::ONE, t)? - hannay_h(t)).abs());
    }
    checks.push(Check { name: "degeneration", value: degeneration, bound: 1e-12 });

    let mut identity: f64 = 0.0;
    for r in [0.05, 0.5, 1.0, 2.0, 5.0] {
        identity = identity.max((1.0 + 0.25 * bilaplacian_g_closed(r)? - hannay_h(0.5 * r * r)).abs());
    }
    checks.push(Check { name: "bilaplacian_identity", value: identity, bound: 1e-10 });

    let g1 = (EULER_GAMMA * EULER_GAMMA + PI * PI / 6.0) / 4.0;
    let g0 = EULER_GAMMA * EULER_GAMMA / 4.0;
    let quad = (g2_quadrature(1.0)? - g1).abs().max((g2_quadrature(0.0)? - g0).abs());
    checks.push(Check { name: "g2_quadrature", value: quad, bound: 1e-7 });

    let mc = gn_monte_carlo(&XiMatrix::identity(1), 100_000, seed)?;
    checks.push(Check { name: "gn_mc_z", value: mc.z_score_exact(-EULER_GAMMA / 2.0), bound: 3.0 });

    let window = ScaledWindow::disc(5.0)?;
    let sets: Vec<_> = (0..2000).map(|i| poisson_pattern(1.0 / PI, &window, seed, i)).collect();
    let edges: Vec<f64> = (0..=5).map(|k| 0.5 + 0.5 * k as f64).collect();
    let csr = pair_correlation_estimate(&sets, &window, &edges)?;
    let csr_z = csr.curve.iter().map(|(_, g, se)| (g - 1.0).abs() / se).fold(0.0, f64::max);
    checks.push(Check { name: "csr_max_z", value: csr_z, bound: 3.0 });

    let degree = 100;
    let small = ScaledWindow::new(1.0, degree)?;
    let sampler = EnsembleSampler::new(EnsembleParams::new(Dimension::ONE, degree, seed)?);
    let mut zeros = Vec::new();
    for i in 0..400 {
        zeros.push(rescale_roots(&find_roots(&sampler.sample(i))?, degree, &small)?);
    }
    let density = density_estimate(&zeros, &small);
    // exact mean density of the rescaled zeros in a centred disc of radius R
    let exact = 1.0 / (PI * (1.0 + 1.0 / f64::from(degree)));
    checks.push(Check { name: "density_z", value: density.z_score_exact(exact), bound: 3.0 });

    let e25 = szego_scaling_error(Dimension::ONE, 25, 2.0, SZEGO_STEP)?;
    let e400 = szego_scaling_error(Dimension::ONE, 400, 2.0, SZEGO_STEP)?;
    checks.push(Check { name: "szego_ratio", value: e400 / e25, bound: 1.0 });

    let mut rec = ResultRecord::new(Command::SelfTest, json!({ "seed": seed }), &["check", "value", "bound", "pass"]);
    let failed = checks.iter().any(|c| !c.passed());
    for c in &checks {
        rec.rows.push(vec![json!(c.name), num(c.value), num(c.bound), json!(u8::from(c.passed()))]);
    }
    rec.meta("failed", json!(checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect::<Vec<_>>()));
    Ok(Outcome { record: rec, failed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_specs() {
        assert_eq!(PointSpec::Text("1:2:0.5".into()).points().unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(PointSpec::Text("0.5, 2".into()).points().unwrap(), vec![0.5, 2.0]);
        assert!(PointSpec::Text("".into()).points().unwrap().is_empty());
        assert!(PointSpec::Text("1:2:0.3".into()).points().is_err());
        assert!(PointSpec::Text("1:2".into()).points().is_err());
        assert!("x".parse::<PointSpec>().is_err());
    }

    #[test]
    fn precedence() {
        let cli = Settings { seed: Some(1), ..Settings::default() };
        let file = Settings { seed: Some(2), samples: Some(5), ..Settings::default() };
        let merged = cli.over(file).over(Settings::defaults(Command::Gn));
        assert_eq!(merged.seed, Some(1));
        assert_eq!(merged.samples, Some(5));
        assert_eq!(merged.m, Some(1));
    }

    #[test]
    fn numbers_carry_17_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(PI).to_string().parse().unwrap();
        assert_eq!(back, PI);
    }

    #[test]
    fn theory_curve_examples() {
        let cfg = TheoryCurveConfig { m: Dimension::ONE, grid: vec![1.0] };
        let rec = cmd_theory_curve(&cfg).unwrap();
        assert_eq!(rec.rows[0][1], num(hannay_h(0.5)));
        assert_eq!(rec.rows[0][2], num(0.0));
        let empty = Settings { grid: Some(PointSpec::Text(String::new())), ..Settings::defaults(Command::TheoryCurve) };
        assert!(theory_curve(&empty).unwrap().rows.is_empty());
        let m2 = TheoryCurveConfig { m: Dimension::new(2).unwrap(), grid: vec![0.1] };
        let v = cmd_theory_curve(&m2).unwrap().rows[0][1].as_f64().unwrap();
        assert!((v / (0.25 * 2.0 / 0.01) - 1.0).abs() < 0.1);
    }

    #[test]
    fn szego_validation_and_slope_column() {
        let base = Settings::defaults(Command::SzegoCheck);
        let single = Settings { degree: Some(OneOrMany::One(100)), ..base.clone() };
        let rec = szego_check(&single).unwrap();
        assert!(!rec.metadata.contains_key("slope"));
        let wide = Settings { radius: Some(3.0), ..base };
        assert!(matches!(szego_check(&wide), Err(Error::Config(_))));
    }

    #[test]
    fn empirical_validation() {
        let base = Settings::defaults(Command::EmpiricalPc);
        assert_eq!(resolve_empirical(&Settings { samples: Some(0), ..base.clone() }).unwrap_err().exit_code(), 2);
        assert!(resolve_empirical(&Settings { m: Some(2), ..base.clone() }).is_err());
        assert!(resolve_empirical(&base).is_ok());
    }

    #[test]
    fn gn_boundary_cases() {
        let s = |gram: Option<MatrixSpec>, vectors: Option<MatrixSpec>| Settings {
            gram,
            vectors,
            samples: Some(1000),
            ..Settings::defaults(Command::Gn)
        };
        let coincident = vec![vec![Entry::Real(1.0), Entry::Real(1.0)], vec![Entry::Real(1.0), Entry::Real(1.0)]];
        assert!(matches!(gn(&s(Some(coincident), None)), Err(Error::RankDeficient { .. })));
        let same = vec![vec![Entry::Real(1.0), Entry::Real(0.0)], vec![Entry::Real(1.0), Entry::Real(0.0)]];
        let rec = gn(&s(None, Some(same))).unwrap();
        assert_eq!(rec.rows.len(), 2);
        assert_eq!(rec.metadata["xi"], Value::Null);
        assert!(gn(&s(None, None)).is_err());
    }

    #[test]
    fn csv_layout() {
        let rec = cmd_theory_curve(&TheoryCurveConfig { m: Dimension::ONE, grid: vec![1.0, 2.0] }).unwrap();
        let csv = rec.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines.iter().take_while(|l| l.starts_with('#')).count() >= 4);
        assert!(lines.contains(&"r,pair_density,stderr"));
        assert_eq!(lines.last().unwrap().split(',').count(), 3);
    }
}
