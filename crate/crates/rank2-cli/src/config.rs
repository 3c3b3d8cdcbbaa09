//! Experiment configuration: a TOML file with complex numbers written as `[re, im]`.
//!
//! Parsing and validation happen before anything is written, so a config
//! error never leaves partial outputs behind.

use std::collections::BTreeMap;
use std::path::Path;

use rank2::construction::{FormulaSet, InverseData};
use rank2::diffop::{Seq, Window};
use rank2::elliptic::{make_lattice, LatticeSpec};
use rank2::C64;
use serde::{Deserialize, Serialize};

use crate::generator::{generate_inverse_data, GeneratorParams};
use crate::Suite;

pub type Complex = [f64; 2];

pub fn cx(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

/// A config problem, tied to the key that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), message: message.into() }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required whenever the subcommand draws random numbers.
    pub seed: Option<u64>,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub elliptic: EllipticConfig,
    #[serde(default)]
    pub commute: CommuteConfig,
    #[serde(default)]
    pub ba: BaConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Overrides of the named tolerances; see [`default_tolerances`].
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

/// Either both half-periods, or `tau` with `omega1 = 1`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub omega1: Option<Complex>,
    pub omega2: Option<Complex>,
    pub tau: Option<Complex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaChoice {
    Transfer,
    Printed,
}

impl FormulaChoice {
    pub fn set(&self) -> FormulaSet {
        match self {
            FormulaChoice::Transfer => FormulaSet::TransferCompatible,
            FormulaChoice::Printed => FormulaSet::Printed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Ignored for explicit data, where the length of `gamma` decides.
    pub window: usize,
    pub c_sum: Complex,
    pub alpha0: [Complex; 2],
    pub formula_set: FormulaChoice,
    pub gamma: Option<Vec<Complex>>,
    pub v: Option<Vec<Complex>>,
    pub generator: Option<GeneratorConfig>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            window: 48,
            c_sum: [0.0, 0.0],
            alpha0: [[0.7, 0.0], [-0.4, 0.0]],
            formula_set: FormulaChoice::Transfer,
            gamma: None,
            v: None,
            generator: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub gamma_center: Complex,
    pub gamma_radius: f64,
    pub v_scale: f64,
    pub c_bound: f64,
    pub max_attempts: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let p = GeneratorParams::default();
        GeneratorConfig {
            gamma_center: [p.gamma_centre.re, p.gamma_centre.im],
            gamma_radius: p.gamma_radius,
            v_scale: p.v_scale,
            c_bound: p.c_bound,
            max_attempts: p.max_attempts,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipticConfig {
    /// Number of random lattices, checked in addition to the configured one.
    pub lattices: usize,
    pub points: usize,
    /// Known invariants of the configured lattice, checked when present.
    pub expect_g2: Option<Complex>,
    pub expect_g3: Option<Complex>,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig { lattices: 5, points: 100, expect_g2: None, expect_g3: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommuteConfig {
    /// Generated data sets, seeded `seed, seed + 1, …`. Explicit data is scanned once.
    pub seeds: usize,
    pub bands: [usize; 2],
    pub control: bool,
}

impl Default for CommuteConfig {
    fn default() -> Self {
        CommuteConfig { seeds: 10, bands: [3, 3], control: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaConfig {
    /// Sites `0..=sites` are solved and reported.
    pub sites: usize,
    pub k_tail: usize,
    pub eta0: [Complex; 2],
    pub train_points: usize,
    pub fresh_points: usize,
}

impl Default for BaConfig {
    fn default() -> Self {
        BaConfig { sites: 6, k_tail: 18, eta0: [[0.0, 0.0], [1.0, 0.0]], train_points: 30, fresh_points: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// The Toda reduction.
    Zero,
    /// `κ_n` read from `flow.kappa_table`.
    Table,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub period: usize,
    pub dt: f64,
    pub t_end: f64,
    pub kappa: KappaMode,
    pub kappa_table: Option<Vec<Complex>>,
    pub sample_every: usize,
    pub c_range: [f64; 2],
    pub v_range: [f64; 2],
    pub order_t_end: f64,
    pub order_dt: f64,
    pub order_dt_ref: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            period: 16,
            dt: 1e-3,
            t_end: 10.0,
            kappa: KappaMode::Zero,
            kappa_table: None,
            sample_every: 100,
            c_range: [0.5, 1.5],
            v_range: [-0.5, 0.5],
            order_t_end: 1.0,
            order_dt: 1e-2,
            order_dt_ref: 1e-5,
        }
    }
}

/// Every named tolerance with its default. Checks compare against these.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("elliptic.ode", 1e-9),
        ("elliptic.legendre", 1e-12),
        ("elliptic.quasi_period", 1e-11),
        ("elliptic.jet", 1e-8),
        ("elliptic.invariant", 1e-12),
        ("operators.identity", 1e-9),
        ("commute.gap", 1e6),
        ("commute.commutator", 1e-8),
        ("curve.invariants", 1e-6),
        ("curve.residual", 1e-6),
        ("ba.solve_residual", 1e-9),
        ("ba.uniqueness_gap", 1e6),
        ("ba.eigen_residual", 1e-8),
        ("ba.fit", 1e-7),
        ("ba.discrepancy", 1e-6),
        ("tyurin.sum", 1e-6),
        ("tyurin.alpha", 1e-6),
        ("tyurin.residue_ratio", 1e-6),
        ("kappa.stability", 1e-6),
        ("flow.invariants", 1e-10),
        ("flow.monodromy", 1e-8),
        ("flow.order_min", 3.8),
        ("flow.order_max", 4.2),
        ("hierarchy.m_consistency", 1e-8),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// A config after overrides and validation, with the data already built.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// The config as echoed in the report: seed filled in, all tolerances listed.
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub lattice: LatticeSpec,
    pub data: DataSource,
    pub tol: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub enum DataSource {
    Explicit(Box<InverseData>),
    Generated(GeneratorParams),
}

impl Resolved {
    pub fn tol(&self, name: &str) -> f64 {
        self.tol[name]
    }

    /// The data for `seed`; explicit data ignores it.
    pub fn inverse_data(&self, seed: u64) -> rank2::Result<InverseData> {
        match &self.data {
            DataSource::Explicit(d) => Ok((**d).clone()),
            DataSource::Generated(p) => generate_inverse_data(&self.lattice, p, seed),
        }
    }

    /// The seed of the primary data set; 0 when no seed is needed.
    pub fn data_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("--config", format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let key = unknown_or_missing_key(e.message()).unwrap_or_else(|| "<document>".into());
        err(&key, e.message().trim().to_string())
    })
}

/// Pulls the key name out of serde's "unknown field `x`" and "missing field `x`".
fn unknown_or_missing_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// Parses one `--tol name=value` flag.
pub fn parse_tol(flag: &str) -> Result<(String, f64), ConfigError> {
    let (name, value) = flag
        .split_once('=')
        .ok_or_else(|| err("--tol", format!("`{flag}` is not of the form name=value")))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| err(&format!("--tol {name}"), format!("`{value}` is not a number")))?;
    Ok((name.trim().to_string(), v))
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(err(key, format!("must be positive and finite, got {x}")))
    }
}

fn at_least(key: &str, x: usize, min: usize) -> Result<(), ConfigError> {
    if x >= min {
        Ok(())
    } else {
        Err(err(key, format!("must be at least {min}, got {x}")))
    }
}

fn lattice(cfg: &LatticeConfig) -> Result<LatticeSpec, ConfigError> {
    let (o1, o2, key) = match (cfg.omega1, cfg.omega2, cfg.tau) {
        (Some(a), Some(b), None) => (cx(a), cx(b), "lattice.omega2"),
        (None, None, Some(t)) => (C64::new(1.0, 0.0), cx(t), "lattice.tau"),
        (_, _, Some(_)) => return Err(err("lattice.tau", "give either tau or omega1 and omega2, not both")),
        (None, _, None) => return Err(err("lattice.omega1", "missing; give omega1 and omega2, or tau")),
        (_, None, None) => return Err(err("lattice.omega2", "missing; give omega1 and omega2, or tau")),
    };
    make_lattice(o1, o2).map_err(|e| err(key, e.to_string()))
}

fn uses_data(s: Suite) -> bool {
    !matches!(s, Suite::EllipticCheck | Suite::FlowRun)
}

/// Whether `s` draws random numbers under `cfg`.
fn needs_seed(s: Suite, cfg: &ExperimentConfig) -> bool {
    let generated = cfg.data.gamma.is_none() && cfg.data.v.is_none();
    match s {
        Suite::EllipticCheck | Suite::FlowRun | Suite::FullSuite => true,
        Suite::BuildOperators | Suite::CommuteScan | Suite::BaVerify => generated,
    }
}

/// Applies `--seed` and `--tol`, validates every key, and builds the data.
pub fn resolve(
    mut cfg: ExperimentConfig,
    suite: Suite,
    seed_flag: Option<u64>,
    tol_flags: &[(String, f64)],
) -> Result<Resolved, ConfigError> {
    if seed_flag.is_some() {
        cfg.seed = seed_flag;
    }
    let mut tol = default_tolerances();
    for (k, v) in &cfg.tolerances {
        if !tol.contains_key(k) {
            return Err(err(&format!("tolerances.{k}"), "unknown tolerance name"));
        }
        tol.insert(k.clone(), *v);
    }
    for (k, v) in tol_flags {
        if !tol.contains_key(k) {
            return Err(err(&format!("--tol {k}"), "unknown tolerance name"));
        }
        tol.insert(k.clone(), *v);
    }
    for (k, v) in &tol {
        if !v.is_finite() {
            return Err(err(&format!("tolerances.{k}"), "must be finite"));
        }
    }
    cfg.tolerances = tol.clone();

    if needs_seed(suite, &cfg) && cfg.seed.is_none() {
        return Err(err("seed", format!("required by `{}` (seeded generation); set it or pass --seed", suite.name())));
    }
    let l = lattice(&cfg.lattice)?;

    let e = &cfg.elliptic;
    at_least("elliptic.points", e.points, 1)?;

    let c = &cfg.commute;
    at_least("commute.seeds", c.seeds, 1)?;
    at_least("commute.bands", c.bands[0].min(c.bands[1]), 1)?;

    let b = &cfg.ba;
    at_least("ba.k_tail", b.k_tail, 4)?;
    at_least("ba.train_points", b.train_points, 15)?;
    at_least("ba.fresh_points", b.fresh_points, 1)?;
    if cx(b.eta0[0]) != C64::new(0.0, 0.0) || cx(b.eta0[1]).norm() == 0.0 {
        return Err(err("ba.eta0", "must be [[0, 0], [a, b]] with a nonzero second entry"));
    }

    let f = &cfg.flow;
    at_least("flow.period", f.period, 3)?;
    positive("flow.dt", f.dt)?;
    positive("flow.t_end", f.t_end)?;
    positive("flow.order_t_end", f.order_t_end)?;
    positive("flow.order_dt", f.order_dt)?;
    positive("flow.order_dt_ref", f.order_dt_ref)?;
    if f.order_dt_ref >= f.order_dt / 2.0 {
        return Err(err("flow.order_dt_ref", "must be well below order_dt / 2"));
    }
    if f.c_range[0].partial_cmp(&f.c_range[1]).is_none_or(|o| o.is_gt()) {
        return Err(err("flow.c_range", "lower end exceeds upper end"));
    }
    if f.v_range[0].partial_cmp(&f.v_range[1]).is_none_or(|o| o.is_gt()) {
        return Err(err("flow.v_range", "lower end exceeds upper end"));
    }
    match (&f.kappa, &f.kappa_table) {
        (KappaMode::Table, None) => return Err(err("flow.kappa_table", "required when kappa = \"table\"")),
        (KappaMode::Table, Some(t)) if t.len() != f.period => {
            return Err(err("flow.kappa_table", format!("has {} entries, period is {}", t.len(), f.period)))
        }
        _ => {}
    }

    let d = &cfg.data;
    if cx(d.c_sum) != C64::new(0.0, 0.0) {
        return Err(err("data.c_sum", "only c_sum = [0, 0] is supported"));
    }
    let alpha0 = (cx(d.alpha0[0]), cx(d.alpha0[1]));
    let data = match (&d.gamma, &d.v, &d.generator) {
        (Some(_), Some(_), Some(_)) => return Err(err("data.generator", "explicit gamma and v exclude a generator")),
        (Some(g), Some(v), None) => {
            if g.len() != v.len() {
                return Err(err("data.v", format!("has {} entries, gamma has {}", v.len(), g.len())));
            }
            at_least("data.gamma", g.len(), 2)?;
            let w = Window::new(0, g.len() as i64 - 1).map_err(|e| err("data.gamma", e.to_string()))?;
            let seq = |xs: &[Complex]| Seq::new(w, xs.iter().map(|&z| cx(z)).collect()).expect("lengths match");
            let inv = InverseData::new(l.clone(), seq(g), cx(d.c_sum), seq(v), alpha0)
                .map_err(|e| err("data.gamma", e.to_string()))?;
            DataSource::Explicit(Box::new(inv))
        }
        (Some(_), None, _) => return Err(err("data.v", "missing; explicit data needs both gamma and v")),
        (None, Some(_), _) => return Err(err("data.gamma", "missing; explicit data needs both gamma and v")),
        (None, None, g) => {
            let g = g.clone().unwrap_or_default();
            at_least("data.window", d.window, 8)?;
            positive("data.generator.gamma_radius", g.gamma_radius)?;
            positive("data.generator.c_bound", g.c_bound)?;
            at_least("data.generator.max_attempts", g.max_attempts as usize, 1)?;
            if g.v_scale.is_nan() || g.v_scale < 0.0 {
                return Err(err("data.generator.v_scale", "must be non-negative"));
            }
            DataSource::Generated(GeneratorParams {
                window: d.window,
                gamma_centre: cx(g.gamma_center),
                gamma_radius: g.gamma_radius,
                v_scale: g.v_scale,
                alpha0,
                c_bound: g.c_bound,
                max_attempts: g.max_attempts,
            })
        }
    };
    let window = match &data {
        DataSource::Explicit(inv) => inv.window().len(),
        DataSource::Generated(p) => p.window,
    };
    if matches!(suite, Suite::BaVerify | Suite::FullSuite) {
        // ψ up to site `sites + 3` and the background that carries it.
        let need = b.sites + 12;
        if window < need {
            return Err(err("ba.sites", format!("needs a data window of at least {need}, have {window}")));
        }
    }
    let resolved = Resolved { config: cfg, seed: None, lattice: l, data, tol };
    let seed = resolved.config.seed;
    let resolved = Resolved { seed, ..resolved };
    if uses_data(suite) && !matches!(resolved.data, DataSource::Explicit(_)) {
        // Fail early, before any output exists, if the generator cannot produce data.
        resolved
            .inverse_data(resolved.data_seed())
            .map_err(|e| err("data.generator", format!("seed {}: {e}", resolved.data_seed())))?;
    }
    Ok(resolved)
}
