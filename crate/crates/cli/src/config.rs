//! Experiment configuration: `[model]`, `[run]` and `[test]` sections of
//! `key = value` lines, `#` comments and comma-separated lists.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use ini::{Ini, ParseOption};
use rdlab_core::coefficients::ProfileKind;
use rdlab_core::{BoundaryCondition, Diffusion};

/// Every violation found in a configuration file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration:\n  {}", .violations.join("\n  "))]
pub struct ConfigError {
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    HolderSqrt,
    Lipschitz,
    Additive,
    CustomTable,
}

impl NoiseKind {
    const NAMES: [(&'static str, Self); 5] = [
        ("none", Self::None),
        ("holder_sqrt", Self::HolderSqrt),
        ("lipschitz", Self::Lipschitz),
        ("additive", Self::Additive),
        ("custom_table", Self::CustomTable),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, k)| *k == self).map_or("none", |(n, _)| n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffLaw {
    /// `c_k = scale · rate^k`.
    Geometric,
    /// `c_k = scale · k^{−rate}`.
    Power,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub profile: ProfileKind,
    pub coeffs: Vec<f64>,
    pub truncation: Option<f64>,
    pub tail_bound: f64,
    /// Response table `(r, ρ(r))` for `custom_table`.
    pub table: Vec<(f64, f64)>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma_coef: Vec<f64>,
    pub sigma_exponent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n: usize,
    pub length: f64,
    pub bc: BoundaryCondition,
    pub diffusion: Diffusion,
    /// `f(r) = Σ_j drift[j] r^j`.
    pub drift: Vec<f64>,
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Zero,
    /// `amp · sin(πx/L)`.
    Sine(f64),
    /// Combination of the leading eigenvectors.
    Eigen(Vec<f64>),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub stop_level: f64,
    pub initial: InitialState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub r_max: f64,
    pub r_points: usize,
    pub store_paths: usize,
    pub martingale_s: f64,
    pub martingale_t: f64,
    pub test_modes: usize,
    pub general_functions: usize,
    pub qv_tolerance: f64,
    pub corrupt_offset: f64,
    pub deltas: Vec<f64>,
    pub mesh_levels: usize,
    pub markov_s: f64,
    pub markov_t: f64,
    pub restart_level: Option<f64>,
    pub control_shift: f64,
    pub ks_alpha: f64,
    pub ck_z: f64,
    pub feller_deltas: Vec<f64>,
    pub moment_horizons: Vec<f64>,
    pub moment_tolerance: f64,
    pub levels: usize,
    pub modulus: String,
    pub batteries: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub run: RunConfig,
    pub test: TestConfig,
}

pub const BATTERIES: [&str; 6] = ["validate", "simulate", "martingale", "uniqueness", "markov", "regularizer"];
const MODULI: [&str; 4] = ["noise", "sqrt", "linear", "quarter"];

fn canonical_f64(v: f64) -> String {
    format!("{v}")
}

fn join<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn join_f64(items: &[f64]) -> String {
    join(items, |v| canonical_f64(*v))
}

/// Raw key/value pairs of one section, consumed as they are read.
struct Section {
    name: &'static str,
    entries: BTreeMap<String, String>,
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn fail(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn raw(&mut self, sec: &mut Section, key: &str) -> Option<String> {
        sec.entries.remove(key)
    }

    fn parsed<T: FromStr>(&mut self, sec: &mut Section, key: &str) -> Option<T> {
        let raw = self.raw(sec, key)?;
        match raw.trim().parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(format!("[{}] {key}: cannot parse '{raw}'", sec.name));
                None
            }
        }
    }

    fn f64_in(&mut self, sec: &mut Section, key: &str, default: f64, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        match self.parsed::<f64>(sec, key) {
            Some(v) if ok(v) && v.is_finite() => v,
            Some(v) => {
                self.fail(format!("{key} must be {rule}, got {v}"));
                default
            }
            None => default,
        }
    }

    fn usize_in(&mut self, sec: &mut Section, key: &str, default: usize, lo: usize, hi: usize) -> usize {
        match self.parsed::<usize>(sec, key) {
            Some(v) if (lo..=hi).contains(&v) => v,
            Some(v) => {
                self.fail(format!("{key} must lie in {lo}..={hi}, got {v}"));
                default
            }
            None => default,
        }
    }

    fn list(&mut self, sec: &mut Section, key: &str) -> Option<Vec<f64>> {
        let raw = self.raw(sec, key)?;
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.fail(format!("[{}] {key}: '{item}' is not a finite number", sec.name));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn words(&mut self, sec: &mut Section, key: &str) -> Option<Vec<String>> {
        let raw = self.raw(sec, key)?;
        Some(raw.split(',').map(|s| s.trim().to_ascii_lowercase()).filter(|s| !s.is_empty()).collect())
    }

    fn choice<T: Copy>(&mut self, sec: &mut Section, key: &str, default: T, table: &[(&str, T)], what: &str) -> T {
        let Some(raw) = self.raw(sec, key) else { return default };
        let word = raw.trim().to_ascii_lowercase();
        match table.iter().find(|(n, _)| *n == word) {
            Some((_, v)) => *v,
            None => {
                let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
                self.fail(format!("unknown {what} '{word}' (expected one of {})", names.join(", ")));
                default
            }
        }
    }

    fn leftovers(&mut self, sec: &Section) {
        for key in sec.entries.keys() {
            self.fail(format!("unknown key '{key}' in [{}]", sec.name));
        }
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Section>, ConfigError> {
    let opt = ParseOption { enabled_quote: false, enabled_escape: false, ..ParseOption::default() };
    let ini = Ini::load_from_str_opt(text, opt)
        .map_err(|e| ConfigError { violations: vec![format!("syntax error: {e}")] })?;
    let mut sections: BTreeMap<&'static str, Section> = ["model", "run", "test"]
        .into_iter()
        .map(|name| (name, Section { name, entries: BTreeMap::new() }))
        .collect();
    let mut errors = Vec::new();
    for (name, props) in ini.iter() {
        let name = name.unwrap_or("").trim().to_ascii_lowercase();
        if name.is_empty() {
            for (k, _) in props.iter() {
                errors.push(format!("key '{k}' appears before any section"));
            }
            continue;
        }
        let Some(sec) = sections.get_mut(name.as_str()) else {
            errors.push(format!("unknown section [{name}]"));
            continue;
        };
        for (k, v) in props.iter() {
            let key = k.trim().to_ascii_lowercase();
            if sec.entries.insert(key.clone(), v.trim().to_string()).is_some() {
                errors.push(format!("duplicate key '{key}' in [{name}]"));
            }
        }
    }
    if errors.is_empty() {
        Ok(sections)
    } else {
        Err(ConfigError { violations: errors })
    }
}

fn parse_diffusion(r: &mut Reader, kind: &str, p: &[f64]) -> Diffusion {
    let need = |r: &mut Reader, count: usize| {
        let ok = p.len() == count;
        if !ok {
            r.fail(format!("diffusion '{kind}' needs {count} diffusion_params, got {}", p.len()));
        }
        ok
    };
    match kind {
        "constant" if need(r, 1) => Diffusion::Constant(p[0]),
        "affine" if need(r, 2) => Diffusion::Affine { intercept: p[0], slope: p[1] },
        "bump" if need(r, 4) => Diffusion::Bump { base: p[0], amplitude: p[1], center: p[2], width: p[3] },
        "table" => {
            if p.len() < 2 || !p.len().is_multiple_of(2) {
                r.fail(format!("diffusion 'table' needs x, a pairs, got {} values", p.len()));
                return Diffusion::Constant(1.0);
            }
            Diffusion::Table(p.chunks(2).map(|c| (c[0], c[1])).collect())
        }
        "constant" | "affine" | "bump" => Diffusion::Constant(1.0),
        other => {
            r.fail(format!("unknown diffusion '{other}' (expected one of constant, affine, bump, table)"));
            Diffusion::Constant(1.0)
        }
    }
}

fn diffusion_parts(d: &Diffusion) -> (&'static str, Vec<f64>) {
    match d {
        Diffusion::Constant(c) => ("constant", vec![*c]),
        Diffusion::Affine { intercept, slope } => ("affine", vec![*intercept, *slope]),
        Diffusion::Bump { base, amplitude, center, width } => ("bump", vec![*base, *amplitude, *center, *width]),
        Diffusion::Table(t) => ("table", t.iter().flat_map(|(x, a)| [*x, *a]).collect()),
    }
}

fn profile_name(p: ProfileKind) -> &'static str {
    match p {
        ProfileKind::Flat => "flat",
        ProfileKind::Sine => "sine",
        ProfileKind::Cosine => "cosine",
        ProfileKind::Eigen => "eigen",
    }
}

fn parse_model(r: &mut Reader, sec: &mut Section) -> ModelConfig {
    let n = r.usize_in(sec, "n", 32, 2, 4096);
    let length = r.f64_in(sec, "length", PI, |v| v > 0.0, "positive");
    let bc = match r.raw(sec, "bc") {
        None => BoundaryCondition::Dirichlet,
        Some(raw) => raw.parse::<BoundaryCondition>().unwrap_or_else(|_| {
            r.fail(format!("unknown boundary condition '{}' (expected dirichlet or neumann)", raw.trim()));
            BoundaryCondition::Dirichlet
        }),
    };
    let kind = r.raw(sec, "diffusion").map_or_else(|| "constant".to_string(), |s| s.trim().to_ascii_lowercase());
    let params = r.list(sec, "diffusion_params").unwrap_or_else(|| if kind == "constant" { vec![1.0] } else { Vec::new() });
    let diffusion = parse_diffusion(r, &kind, &params);
    let drift = r.list(sec, "drift").unwrap_or_else(|| vec![0.0]);
    if drift.is_empty() {
        r.fail("drift needs at least one coefficient".into());
    }

    let kind = r.choice(sec, "noise", NoiseKind::None, &NoiseKind::NAMES, "noise");
    let profiles = [
        ("flat", ProfileKind::Flat),
        ("sine", ProfileKind::Sine),
        ("cosine", ProfileKind::Cosine),
        ("eigen", ProfileKind::Eigen),
    ];
    let profile = r.choice(sec, "profile", ProfileKind::Sine, &profiles, "noise profile");
    let explicit = r.list(sec, "noise_coeffs");
    let modes = r.usize_in(sec, "modes", 0, 1, 1024);
    let law = r.choice(sec, "coeff_law", CoeffLaw::Geometric, &[("geometric", CoeffLaw::Geometric), ("power", CoeffLaw::Power)], "coefficient law");
    let scale = r.f64_in(sec, "coeff_scale", 1.0, |v| v >= 0.0, ">= 0");
    let rate = r.f64_in(sec, "coeff_rate", 0.5, |v| v > 0.0, "positive");
    let coeffs = match (kind, explicit) {
        (NoiseKind::None, Some(_)) => {
            r.fail("noise_coeffs given but noise = none".into());
            Vec::new()
        }
        (NoiseKind::None, None) => Vec::new(),
        (_, Some(c)) => c,
        (_, None) if modes > 0 => (1..=modes)
            .map(|k| match law {
                CoeffLaw::Geometric => scale * rate.powi(k as i32),
                CoeffLaw::Power => scale * (k as f64).powf(-rate),
            })
            .collect(),
        (_, None) => {
            r.fail("noise needs noise_coeffs or modes".into());
            Vec::new()
        }
    };
    if profile == ProfileKind::Eigen && coeffs.len() > n {
        r.fail(format!("eigen profile supports at most n = {n} modes, got {}", coeffs.len()));
    }
    let truncation = r.parsed::<f64>(sec, "truncation");
    if truncation.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
        r.fail("truncation must be positive".into());
    }
    let tail_bound = r.f64_in(sec, "tail_bound", 0.0, |v| v >= 0.0, ">= 0");
    let table_raw = r.list(sec, "table").unwrap_or_default();
    let alpha = r.list(sec, "alpha").unwrap_or_default();
    let beta = r.list(sec, "beta").unwrap_or_default();
    let sigma_coef = r.list(sec, "sigma_coef").unwrap_or_default();
    let sigma_exponent = r.list(sec, "sigma_exponent").unwrap_or_default();
    let mut table = Vec::new();
    if kind == NoiseKind::CustomTable {
        if table_raw.len() < 4 || !table_raw.len().is_multiple_of(2) {
            r.fail(format!("custom_table needs at least two r, value pairs in table, got {} values", table_raw.len()));
        } else {
            table = table_raw.chunks(2).map(|c| (c[0], c[1])).collect();
        }
        for (name, v) in [("alpha", &alpha), ("beta", &beta), ("sigma_coef", &sigma_coef), ("sigma_exponent", &sigma_exponent)] {
            if v.len() != coeffs.len() {
                r.fail(format!("custom_table needs {} values in {name}, got {}", coeffs.len(), v.len()));
            }
        }
        if sigma_exponent.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            r.fail("sigma_exponent values must lie in (0, 1]".into());
        }
    } else if !(table_raw.is_empty() && alpha.is_empty() && beta.is_empty() && sigma_coef.is_empty() && sigma_exponent.is_empty()) {
        r.fail("table, alpha, beta, sigma_coef and sigma_exponent only apply to noise = custom_table".into());
    }
    ModelConfig {
        n,
        length,
        bc,
        diffusion,
        drift,
        noise: NoiseConfig { kind, profile, coeffs, truncation, tail_bound, table, alpha, beta, sigma_coef, sigma_exponent },
    }
}

fn parse_run(r: &mut Reader, sec: &mut Section, n: usize) -> RunConfig {
    let horizon = r.f64_in(sec, "horizon", 1.0, |v| v > 0.0, "positive");
    let dt = match r.parsed::<f64>(sec, "dt") {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(_) => {
            r.fail("dt must be positive".into());
            1e-3
        }
        None => 1e-3,
    };
    if dt > horizon {
        r.fail(format!("dt = {dt} exceeds horizon = {horizon}"));
    }
    let paths = r.usize_in(sec, "paths", 1000, 1, 10_000_000);
    let seed = match r.raw(sec, "seed") {
        Some(raw) => raw.trim().parse::<u64>().unwrap_or_else(|_| {
            r.fail(format!("seed must be a non-negative integer, got '{}'", raw.trim()));
            0
        }),
        None => {
            r.fail("missing seed in [run]".into());
            0
        }
    };
    let stop_level = r.f64_in(sec, "stop_level", 1e6, |v| v > 0.0, "positive");
    let kind = r.raw(sec, "initial").map_or_else(|| "sine".to_string(), |s| s.trim().to_ascii_lowercase());
    let params = r.list(sec, "initial_params");
    let initial = match (kind.as_str(), params) {
        ("zero", None) => InitialState::Zero,
        ("sine", None) => InitialState::Sine(0.5),
        ("sine", Some(p)) if p.len() == 1 => InitialState::Sine(p[0]),
        ("eigen", Some(p)) if !p.is_empty() && p.len() <= n => InitialState::Eigen(p),
        ("values", Some(p)) if p.len() == n => InitialState::Values(p),
        ("zero" | "sine" | "eigen" | "values", p) => {
            r.fail(format!("initial_params do not fit initial = {kind} ({} values given)", p.map_or(0, |p| p.len())));
            InitialState::Zero
        }
        (other, _) => {
            r.fail(format!("unknown initial state '{other}' (expected one of zero, sine, eigen, values)"));
            InitialState::Zero
        }
    };
    RunConfig { horizon, dt, paths, seed, stop_level, initial }
}

fn parse_test(r: &mut Reader, sec: &mut Section, run: &RunConfig) -> TestConfig {
    let t_max = run.horizon;
    let in_window = |v: f64| (0.0..=t_max).contains(&v);
    let r_max = r.f64_in(sec, "r_max", 10.0, |v| v > 0.0, "positive");
    let r_points = r.usize_in(sec, "r_points", 81, 2, 100_000);
    let store_paths = r.usize_in(sec, "store_paths", 4, 0, 100_000);
    let martingale_s = r.f64_in(sec, "martingale_s", 0.4 * t_max, in_window, "within [0, horizon]");
    let martingale_t = r.f64_in(sec, "martingale_t", t_max, in_window, "within [0, horizon]");
    if martingale_s >= martingale_t {
        r.fail(format!("martingale_s = {martingale_s} must be below martingale_t = {martingale_t}"));
    }
    let test_modes = r.usize_in(sec, "test_modes", 3, 1, 64);
    let general_functions = r.usize_in(sec, "general_functions", 2, 0, 64);
    let qv_tolerance = r.f64_in(sec, "qv_tolerance", 0.05, |v| v > 0.0, "positive");
    let corrupt_offset = r.f64_in(sec, "corrupt_offset", 1.0, |v| v >= 0.0, ">= 0");
    let deltas = r.list(sec, "deltas").unwrap_or_else(|| vec![0.1, 0.01, 0.001, 0.0]);
    if deltas.is_empty() || deltas.iter().any(|&d| d < 0.0) {
        r.fail("deltas must be a nonempty list of values >= 0".into());
    }
    let mesh_levels = r.usize_in(sec, "mesh_levels", 3, 0, 12);
    let markov_s = r.f64_in(sec, "markov_s", 0.4 * t_max, |v| v > 0.0, "positive");
    let markov_t = r.f64_in(sec, "markov_t", 0.6 * t_max, |v| v > 0.0, "positive");
    let restart_level = r.parsed::<f64>(sec, "restart_level");
    if restart_level.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
        r.fail("restart_level must be positive".into());
    }
    let control_shift = r.f64_in(sec, "control_shift", 0.5, |v| v >= 0.0, ">= 0");
    let ks_alpha = r.f64_in(sec, "ks_alpha", 0.01, |v| v > 0.0 && v < 1.0, "in (0, 1)");
    let ck_z = r.f64_in(sec, "ck_z", 3.0, |v| v > 0.0, "positive");
    let feller_deltas = r.list(sec, "feller_deltas").unwrap_or_else(|| vec![0.1, 0.01, 0.001]);
    if feller_deltas.is_empty() || feller_deltas.windows(2).any(|w| w[1] > w[0]) || feller_deltas.iter().any(|&d| d < 0.0) {
        r.fail("feller_deltas must be a nonempty nonincreasing list of values >= 0".into());
    }
    let moment_horizons = r.list(sec, "moment_horizons").unwrap_or_default();
    if moment_horizons.iter().any(|&h| !in_window(h) || h == 0.0) {
        r.fail("moment_horizons must lie in (0, horizon]".into());
    }
    let moment_tolerance = r.f64_in(sec, "moment_tolerance", 0.2, |v| v > 0.0, "positive");
    let levels = r.usize_in(sec, "levels", 6, 1, 40);
    let modulus = r.raw(sec, "modulus").map_or_else(|| "noise".to_string(), |s| s.trim().to_ascii_lowercase());
    if !MODULI.contains(&modulus.as_str()) {
        r.fail(format!("unknown modulus '{modulus}' (expected one of {})", MODULI.join(", ")));
    }
    let batteries = r.words(sec, "batteries").unwrap_or_else(|| BATTERIES.iter().map(|s| s.to_string()).collect());
    for b in &batteries {
        if !BATTERIES.contains(&b.as_str()) {
            r.fail(format!("unknown battery '{b}' (expected one of {})", BATTERIES.join(", ")));
        }
    }
    TestConfig {
        r_max,
        r_points,
        store_paths,
        martingale_s,
        martingale_t,
        test_modes,
        general_functions,
        qv_tolerance,
        corrupt_offset,
        deltas,
        mesh_levels,
        markov_s,
        markov_t,
        restart_level,
        control_shift,
        ks_alpha,
        ck_z,
        feller_deltas,
        moment_horizons,
        moment_tolerance,
        levels,
        modulus,
        batteries,
    }
}

/// Extracts the configuration text from a `manifest.json`, or returns the input.
fn config_text(text: &str) -> Result<String, ConfigError> {
    if !text.trim_start().starts_with('{') {
        return Ok(text.to_string());
    }
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ConfigError { violations: vec![format!("manifest is not valid JSON: {e}")] })?;
    value
        .get("config")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| ConfigError { violations: vec!["manifest has no 'config' string".into()] })
}

impl ExperimentConfig {
    /// Parses a configuration file (or a manifest written by a previous run).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let text = config_text(text)?;
        let mut sections = split_sections(&text)?;
        let mut r = Reader { errors: Vec::new() };
        let mut take = |name: &str| sections.remove(name).expect("fixed section names");
        let (mut m, mut u, mut t) = (take("model"), take("run"), take("test"));
        let model = parse_model(&mut r, &mut m);
        let run = parse_run(&mut r, &mut u, model.n);
        let test = parse_test(&mut r, &mut t, &run);
        for sec in [&m, &u, &t] {
            r.leftovers(sec);
        }
        if r.errors.is_empty() {
            Ok(Self { model, run, test })
        } else {
            Err(ConfigError { violations: r.errors })
        }
    }

    /// Every field written out explicitly; parsing it yields the same config.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let m = &self.model;
        let (dkind, dparams) = diffusion_parts(&m.diffusion);
        let nz = &m.noise;
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "n = {}", m.n);
        let _ = writeln!(s, "length = {}", canonical_f64(m.length));
        let _ = writeln!(s, "bc = {}", m.bc);
        let _ = writeln!(s, "diffusion = {dkind}");
        let _ = writeln!(s, "diffusion_params = {}", join_f64(&dparams));
        let _ = writeln!(s, "drift = {}", join_f64(&m.drift));
        let _ = writeln!(s, "noise = {}", nz.kind.name());
        if nz.kind != NoiseKind::None {
            let _ = writeln!(s, "profile = {}", profile_name(nz.profile));
            let _ = writeln!(s, "noise_coeffs = {}", join_f64(&nz.coeffs));
            if let Some(tr) = nz.truncation {
                let _ = writeln!(s, "truncation = {}", canonical_f64(tr));
            }
            let _ = writeln!(s, "tail_bound = {}", canonical_f64(nz.tail_bound));
        }
        if nz.kind == NoiseKind::CustomTable {
            let flat: Vec<f64> = nz.table.iter().flat_map(|(a, b)| [*a, *b]).collect();
            let _ = writeln!(s, "table = {}", join_f64(&flat));
            let _ = writeln!(s, "alpha = {}", join_f64(&nz.alpha));
            let _ = writeln!(s, "beta = {}", join_f64(&nz.beta));
            let _ = writeln!(s, "sigma_coef = {}", join_f64(&nz.sigma_coef));
            let _ = writeln!(s, "sigma_exponent = {}", join_f64(&nz.sigma_exponent));
        }
        let r = &self.run;
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "horizon = {}", canonical_f64(r.horizon));
        let _ = writeln!(s, "dt = {}", canonical_f64(r.dt));
        let _ = writeln!(s, "paths = {}", r.paths);
        let _ = writeln!(s, "seed = {}", r.seed);
        let _ = writeln!(s, "stop_level = {}", canonical_f64(r.stop_level));
        match &r.initial {
            InitialState::Zero => {
                let _ = writeln!(s, "initial = zero");
            }
            InitialState::Sine(a) => {
                let _ = writeln!(s, "initial = sine\ninitial_params = {}", canonical_f64(*a));
            }
            InitialState::Eigen(c) => {
                let _ = writeln!(s, "initial = eigen\ninitial_params = {}", join_f64(c));
            }
            InitialState::Values(v) => {
                let _ = writeln!(s, "initial = values\ninitial_params = {}", join_f64(v));
            }
        }
        let t = &self.test;
        let _ = writeln!(s, "\n[test]");
        let _ = writeln!(s, "batteries = {}", t.batteries.join(", "));
        let _ = writeln!(s, "r_max = {}", canonical_f64(t.r_max));
        let _ = writeln!(s, "r_points = {}", t.r_points);
        let _ = writeln!(s, "store_paths = {}", t.store_paths);
        let _ = writeln!(s, "martingale_s = {}", canonical_f64(t.martingale_s));
        let _ = writeln!(s, "martingale_t = {}", canonical_f64(t.martingale_t));
        let _ = writeln!(s, "test_modes = {}", t.test_modes);
        let _ = writeln!(s, "general_functions = {}", t.general_functions);
        let _ = writeln!(s, "qv_tolerance = {}", canonical_f64(t.qv_tolerance));
        let _ = writeln!(s, "corrupt_offset = {}", canonical_f64(t.corrupt_offset));
        let _ = writeln!(s, "deltas = {}", join_f64(&t.deltas));
        let _ = writeln!(s, "mesh_levels = {}", t.mesh_levels);
        let _ = writeln!(s, "markov_s = {}", canonical_f64(t.markov_s));
        let _ = writeln!(s, "markov_t = {}", canonical_f64(t.markov_t));
        if let Some(level) = t.restart_level {
            let _ = writeln!(s, "restart_level = {}", canonical_f64(level));
        }
        let _ = writeln!(s, "control_shift = {}", canonical_f64(t.control_shift));
        let _ = writeln!(s, "ks_alpha = {}", canonical_f64(t.ks_alpha));
        let _ = writeln!(s, "ck_z = {}", canonical_f64(t.ck_z));
        let _ = writeln!(s, "feller_deltas = {}", join_f64(&t.feller_deltas));
        if !t.moment_horizons.is_empty() {
            let _ = writeln!(s, "moment_horizons = {}", join_f64(&t.moment_horizons));
        }
        let _ = writeln!(s, "moment_tolerance = {}", canonical_f64(t.moment_tolerance));
        let _ = writeln!(s, "levels = {}", t.levels);
        let _ = writeln!(s, "modulus = {}", t.modulus);
        s
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nn = 8\nnoise = holder_sqrt\nmodes = 3\n\n[run]\nseed = 7\n\n[test]\nbatteries = validate\n";

    fn violations(text: &str) -> Vec<String> {
        ExperimentConfig::parse(text).unwrap_err().violations
    }

    #[test]
    fn minimal_file_parses() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model.n, 8);
        assert_eq!(c.model.noise.coeffs, vec![0.5, 0.25, 0.125]);
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.test.batteries, vec!["validate".to_string()]);
    }

    #[test]
    fn canonical_round_trip() {
        let text = "[model]\nn = 12\nbc = neumann\ndiffusion = bump\ndiffusion_params = 1, 0.5, 1.5, 0.3\ndrift = 0, 1, 0, -1 # cubic\n\
                    noise = custom_table\nmodes = 2\ntable = -1, 1, 0, 0, 1, 1\nalpha = 1, 1\nbeta = 1, 1\n\
                    sigma_coef = 1, 1\nsigma_exponent = 1, 0.5\n[run]\nseed = 3\ninitial = eigen\ninitial_params = 1, 0.5\n\
                    [test]\nrestart_level = 2\nmoment_horizons = 0.5, 1\n";
        let c = ExperimentConfig::parse(text).unwrap();
        let again = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical(), again.canonical());
    }

    #[test]
    fn robin_is_rejected() {
        let v = violations("[model]\nbc = Robin\n[run]\nseed = 1\n");
        assert!(v.iter().any(|e| e.contains("unknown boundary condition")), "{v:?}");
    }

    #[test]
    fn zero_dt_is_rejected() {
        let v = violations("[run]\nseed = 1\ndt = 0\n");
        assert!(v.iter().any(|e| e.contains("dt must be positive")), "{v:?}");
    }

    #[test]
    fn all_violations_are_reported() {
        let v = violations("[model]\nn = 1\nbogus = 3\n[run]\ndt = -1\n[test]\nwhatever = 2\n");
        assert!(v.iter().any(|e| e.contains("unknown key 'bogus'")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("unknown key 'whatever'")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("missing seed")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("dt must be positive")), "{v:?}");
        assert!(v.iter().any(|e| e.starts_with("n must lie")), "{v:?}");
    }

    #[test]
    fn unknown_section_and_duplicates() {
        let v = violations("[model]\nn = 4\nn = 5\n[extra]\nx = 1\n[run]\nseed = 1\n");
        assert!(v.iter().any(|e| e.contains("duplicate key 'n'")), "{v:?}");
        assert!(v.iter().any(|e| e.contains("unknown section [extra]")), "{v:?}");
    }

    #[test]
    fn manifest_text_is_accepted() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let manifest = serde_json::json!({ "config": c.canonical() }).to_string();
        assert_eq!(ExperimentConfig::parse(&manifest).unwrap(), c);
    }
}
