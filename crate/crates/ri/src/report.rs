//! Run specifications, config parsing, and CSV/JSON result emission.
//!
//! Every command writes a flat, schema-versioned `result.json` (scalars
//! only; 17 significant digits, fixed field order, so identical runs are
//! byte-identical) plus plot-ready CSV sidecars where a kernel, marginal,
//! or residual vector exists. Exit status 2 is reserved for mathematically
//! meaningful negative findings (infeasibility, nonexistence); software
//! faults exit 1, usage problems 64.

use crate::density::{gaussian_density, DiscreteDensity};
use crate::error::{Result, RiError};
use crate::grid::Grid;
use crate::info::{marginal_values, mutual_information_with_marginal};
use crate::log_model::{LogModelParams, DEFAULT_TAIL_MASS};
use crate::lq_gaussian::{
    self, check_feasibility, lq_utility_eval, LqProblem, RootChoice,
};
use crate::solver::{solve, SolverConfig};
use crate::utility::UtilitySpec;
use crate::variational::{
    bc_residual_h, el_candidate, variational_derivative_analytic,
    variational_derivative_richardson,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: i64 = 1;

/// Exit codes: success, negative mathematical finding, error, usage.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 2;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lq,
    LogModel,
    Solve,
    Check,
    DerivCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lq => "lq",
            Command::LogModel => "logmodel",
            Command::Solve => "solve",
            Command::Check => "check",
            Command::DerivCheck => "derivcheck",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// A fully merged run request: command, parameter map (config file values
/// overridden by command-line flags), output directory, and formats.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub parameters: BTreeMap<String, String>,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl RunSpec {
    pub fn new(command: Command) -> RunSpec {
        RunSpec {
            command,
            parameters: BTreeMap::new(),
            output_dir: PathBuf::from("."),
            formats: vec![Format::Csv, Format::Json],
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.parameters.insert(key.replace('-', "_"), value.into());
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.parameters.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| RiError::Usage(format!("{key} must be a number, got '{v}'"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_required(&self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| RiError::Usage(format!("missing required parameter --{key}")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.parameters.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| RiError::Usage(format!("{key} must be a nonnegative integer, got '{v}'"))),
        }
    }

    fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.parameters.get(key).map(|s| s.as_str()).unwrap_or(default)
    }

    fn root_choice(&self) -> Result<RootChoice> {
        match self.str_or("root", "plus") {
            "plus" => Ok(RootChoice::Plus),
            "minus" => Ok(RootChoice::Minus),
            other => Err(RiError::Usage(format!(
                "root must be 'plus' or 'minus', got '{other}'"
            ))),
        }
    }

    fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// Keys accepted in config files and as flags, with their value kinds.
const KEY_SCHEMA: &[(&str, ValueKind)] = &[
    ("kappa", ValueKind::Float),
    ("mu_x", ValueKind::Float),
    ("sigma_x", ValueKind::Float),
    ("theta", ValueKind::Float),
    ("phi", ValueKind::Float),
    ("b", ValueKind::Float),
    ("c", ValueKind::Float),
    ("alpha", ValueKind::Float),
    ("beta", ValueKind::Float),
    ("span_sigmas", ValueKind::Float),
    ("truncation_tail", ValueKind::Float),
    ("eps1", ValueKind::Float),
    ("eps2", ValueKind::Float),
    ("n", ValueKind::Integer),
    ("pairs", ValueKind::Integer),
    ("seed", ValueKind::Integer),
    ("max_inner", ValueKind::Integer),
    ("root", ValueKind::Keyword(&["plus", "minus"])),
    ("model", ValueKind::Keyword(&["lq", "log"])),
    ("preset", ValueKind::Keyword(&["sims2003-quadratic"])),
    ("format", ValueKind::FormatList),
    ("out", ValueKind::Text),
];

#[derive(Clone, Copy)]
enum ValueKind {
    Float,
    Integer,
    Keyword(&'static [&'static str]),
    FormatList,
    Text,
}

fn validate_key_value(key: &str, value: &str) -> std::result::Result<(), String> {
    let kind = KEY_SCHEMA
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, kind)| *kind)
        .ok_or_else(|| format!("unknown key '{key}'"))?;
    match kind {
        ValueKind::Float => value
            .parse::<f64>()
            .map(|_| ())
            .map_err(|_| format!("value '{value}' for '{key}' is not a number")),
        ValueKind::Integer => value
            .parse::<u64>()
            .map(|_| ())
            .map_err(|_| format!("value '{value}' for '{key}' is not a nonnegative integer")),
        ValueKind::Keyword(allowed) => {
            if allowed.contains(&value) {
                Ok(())
            } else {
                Err(format!(
                    "value '{value}' for '{key}' must be one of: {}",
                    allowed.join(", ")
                ))
            }
        }
        ValueKind::FormatList => parse_formats(value).map(|_| ()).map_err(|e| e.to_string()),
        ValueKind::Text => Ok(()),
    }
}

/// Parse a `key = value` config file: `#` comments, blank lines allowed,
/// duplicate keys rejected, values validated against the key schema.
pub fn parse_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(RiError::Config {
                line,
                message: format!("expected 'key = value', got '{raw}'"),
            });
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(RiError::Config { line, message: "empty key or value".into() });
        }
        if let Err(message) = validate_key_value(&key, &value) {
            return Err(RiError::Config { line, message });
        }
        if out.insert(key.clone(), value).is_some() {
            return Err(RiError::Config {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(out)
}

pub fn parse_formats(s: &str) -> Result<Vec<Format>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.trim() {
            "csv" => out.push(Format::Csv),
            "json" => out.push(Format::Json),
            other => {
                return Err(RiError::Usage(format!(
                    "format must be a comma list of 'csv' and 'json', got '{other}'"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(RiError::Usage("format list is empty".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// deterministic JSON / CSV emission
// ---------------------------------------------------------------------------

/// Ordered JSON object whose floats are printed with 17 significant digits,
/// so a given run spec produces byte-identical output.
#[derive(Debug, Clone, Default)]
pub struct JsonObject {
    entries: Vec<(String, JsonValue)>,
}

#[derive(Debug, Clone)]
enum JsonValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Object(JsonObject),
}

impl JsonObject {
    pub fn new() -> JsonObject {
        JsonObject::default()
    }

    pub fn float(mut self, key: &str, v: f64) -> Self {
        self.entries.push((key.into(), JsonValue::Float(v)));
        self
    }

    pub fn int(mut self, key: &str, v: i64) -> Self {
        self.entries.push((key.into(), JsonValue::Int(v)));
        self
    }

    pub fn bool(mut self, key: &str, v: bool) -> Self {
        self.entries.push((key.into(), JsonValue::Bool(v)));
        self
    }

    pub fn str(mut self, key: &str, v: &str) -> Self {
        self.entries.push((key.into(), JsonValue::Str(v.into())));
        self
    }

    pub fn object(mut self, key: &str, v: JsonObject) -> Self {
        self.entries.push((key.into(), JsonValue::Object(v)));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s, 0);
        s.push('\n');
        s
    }

    fn render_into(&self, s: &mut String, depth: usize) {
        let pad = "  ".repeat(depth + 1);
        s.push_str("{\n");
        for (i, (key, value)) in self.entries.iter().enumerate() {
            let _ = write!(s, "{pad}\"{key}\": ");
            match value {
                JsonValue::Float(v) => {
                    let _ = write!(s, "{}", format_float(*v));
                }
                JsonValue::Int(v) => {
                    let _ = write!(s, "{v}");
                }
                JsonValue::Bool(v) => {
                    let _ = write!(s, "{v}");
                }
                JsonValue::Str(v) => {
                    let _ = write!(s, "\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\""));
                }
                JsonValue::Object(v) => v.render_into(s, depth + 1),
            }
            s.push_str(if i + 1 < self.entries.len() { ",\n" } else { "\n" });
        }
        let _ = write!(s, "{}}}", "  ".repeat(depth));
    }
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        // JSON has no inf/nan literals; encode as strings
        format!("\"{v}\"")
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content.as_bytes())?;
    Ok(())
}

fn write_kernel_csv(
    path: &Path,
    x_nodes: &[f64],
    y_nodes: &[f64],
    rows: impl Iterator<Item = impl AsRef<[f64]>>,
) -> Result<()> {
    let mut s = String::from("x,y,q\n");
    for (i, row) in rows.enumerate() {
        for (j, q) in row.as_ref().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{}",
                format_float(x_nodes[i]),
                format_float(y_nodes[j]),
                format_float(*q)
            );
        }
    }
    write_file(path, &s)
}

fn write_marginal_csv(path: &Path, y_nodes: &[f64], g: &[f64]) -> Result<()> {
    let mut s = String::from("y,g\n");
    for (y, v) in y_nodes.iter().zip(g) {
        let _ = writeln!(s, "{},{}", format_float(*y), format_float(*v));
    }
    write_file(path, &s)
}

fn write_residuals_csv(path: &Path, nodes: &[f64], residuals: &[f64]) -> Result<()> {
    let mut s = String::from("node,residual\n");
    for (n, r) in nodes.iter().zip(residuals) {
        let _ = writeln!(s, "{},{}", format_float(*n), format_float(*r));
    }
    write_file(path, &s)
}

/// Outcome of a run: the process exit code plus a one-line finding summary
/// when the mathematics said "no".
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub finding: Option<String>,
}

/// Execute a run spec: compute, write artifacts, classify the outcome.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    std::fs::create_dir_all(&spec.output_dir)?;
    match spec.command {
        Command::Lq => run_lq(spec),
        Command::LogModel => run_logmodel(spec),
        Command::Check => run_check(spec),
        Command::Solve => run_solve(spec),
        Command::DerivCheck => run_derivcheck(spec),
    }
}

fn run_lq(spec: &RunSpec) -> Result<RunOutcome> {
    let kappa = spec.f64_required("kappa")?;
    let mu_x = spec.f64_or("mu_x", 0.0)?;
    let sigma_x = spec.f64_or("sigma_x", 1.0)?;
    let theta = spec.f64_or("theta", 1.0)?;
    let root = spec.root_choice()?;
    let n = spec.usize_or("n", 201)?;
    let span = spec.f64_or("span_sigmas", 5.0)?;

    let problem = LqProblem::new(kappa, mu_x, sigma_x * sigma_x, theta)?;
    let sol = lq_gaussian::solve_restrictions(&problem, root)?;

    // discretize the optimal kernel for the CSV sidecars and the
    // information cross-check
    let gx = Grid::uniform(mu_x - span * sigma_x, mu_x + span * sigma_x, n)?;
    let gy = lq_gaussian::default_action_grid(&sol, &problem, &gx, n)?;
    let kernel = lq_gaussian::optimal_kernel(&sol, &problem, &gx, &gy)?;
    let prior = gaussian_density(mu_x, sigma_x * sigma_x, &gx)?;
    let g = marginal_values(&prior, &kernel);
    let achieved = mutual_information_with_marginal(&prior, &kernel, &g);

    // stationarity identity residual on a 21 x 21 probe lattice
    let identity_residual = identity_lattice_residual(&problem, &sol);

    // candidate normalization residuals in the state direction: probe
    // actions within 3 sigma_y, on a state grid wide enough to hold each
    // probe's conditional mass
    let sigma_y = sol.sigma_y_sq.sqrt();
    let rho = sol.rho_sq.sqrt();
    let cond_sd_x = (problem.sigma_x_sq * (1.0 - sol.rho_sq)).sqrt();
    let reach = 3.0 * rho * sigma_x + 8.0 * cond_sd_x;
    let bc_x_grid = Grid::uniform(mu_x - reach, mu_x + reach, 1601)?;
    let bc_y_grid = Grid::uniform(sol.mu_y - 3.0 * sigma_y, sol.mu_y + 3.0 * sigma_y, 61)?;
    let bc_prior = gaussian_density(mu_x, sigma_x * sigma_x, &bc_x_grid)?;
    let cand = el_candidate(&bc_prior, &sol.utility(&problem), &bc_y_grid, sol.lambda_nats)?;
    let bc = bc_residual_h(&cand);

    if spec.wants(Format::Json) {
        let json = JsonObject::new()
            .int("schema_version", SCHEMA_VERSION)
            .str("command", "lq")
            .float("kappa_bits", kappa)
            .float("mu_x", mu_x)
            .float("sigma_x", sigma_x)
            .float("theta", theta)
            .str("root", if root == RootChoice::Plus { "plus" } else { "minus" })
            .float("rho_sq", sol.rho_sq)
            .float("sigma_y_sq", sol.sigma_y_sq)
            .float("phi", sol.phi)
            .float("mu_y", sol.mu_y)
            .float("b", sol.b)
            .float("c", sol.c)
            .float("lambda_tilde_bits", sol.lambda_tilde_bits)
            .float("lambda_nats", sol.lambda_nats)
            .float("conditional_mean_slope", sol.conditional_mean_slope(&problem))
            .float("conditional_variance", sol.conditional_variance())
            .float("achieved_information_bits", achieved)
            .float("identity_max_residual", identity_residual)
            .float("bc_max_residual", bc.max_abs_residual)
            .bool("bc_satisfied", bc.satisfied);
        write_file(&spec.output_dir.join("result.json"), &json.render())?;
    }
    if spec.wants(Format::Csv) {
        write_kernel_csv(
            &spec.output_dir.join("kernel.csv"),
            gx.nodes(),
            gy.nodes(),
            kernel.rows(),
        )?;
        write_marginal_csv(&spec.output_dir.join("marginal.csv"), gy.nodes(), &g)?;
        write_residuals_csv(
            &spec.output_dir.join("residuals.csv"),
            gy.nodes(),
            &bc.residuals,
        )?;
    }
    Ok(RunOutcome { exit_code: EXIT_OK, finding: None })
}

fn identity_lattice_residual(problem: &LqProblem, sol: &lq_gaussian::LqSolution) -> f64 {
    let sigma_x = problem.sigma_x_sq.sqrt();
    let sigma_y = sol.sigma_y_sq.sqrt();
    let rho = sol.rho_sq.sqrt();
    let cond_var = problem.sigma_x_sq * (1.0 - sol.rho_sq);
    let mut max_resid = 0.0f64;
    for i in 0..21 {
        for j in 0..21 {
            let x = problem.mu_x + sigma_x * (-3.0 + 0.3 * i as f64);
            let y = sol.mu_y + sigma_y * (-3.0 + 0.3 * j as f64);
            let u = lq_utility_eval(problem.theta, sol.phi, sol.b, sol.c, x, y);
            let mu_xy = problem.mu_x + rho * (sigma_x / sigma_y) * (y - sol.mu_y);
            let ln_ratio = 0.5 * (problem.sigma_x_sq / cond_var).ln()
                - (x - mu_xy) * (x - mu_xy) / (2.0 * cond_var)
                + (x - problem.mu_x) * (x - problem.mu_x) / (2.0 * problem.sigma_x_sq);
            max_resid = max_resid.max((u - sol.lambda_nats * ln_ratio).abs());
        }
    }
    max_resid
}

fn run_logmodel(spec: &RunSpec) -> Result<RunOutcome> {
    let alpha = spec.f64_required("alpha")?;
    let beta = spec.f64_required("beta")?;
    let n = spec.usize_or("n", crate::log_model::DEFAULT_GRID_N)?;
    let tail = spec.f64_or("truncation_tail", DEFAULT_TAIL_MASS)?;

    let params = LogModelParams::new(alpha, beta)?;
    let state_grid = params.default_state_grid(n, tail)?;
    let prior = params.powerlaw_prior(&state_grid)?;

    // reverse-conditional normalization at five probe actions
    let probes: Vec<f64> = [1.0, 1.25, 1.5, 2.0, 3.0]
        .iter()
        .map(|m| m * params.x0)
        .collect();
    let mut h_residuals = Vec::with_capacity(probes.len());
    for &y in &probes {
        let grid = params.default_conditional_grid(y, 20_001, tail)?;
        let h = params.h_conditional(y, &grid)?;
        h_residuals.push(grid.integrate(&h)? - 1.0);
    }
    let h_max_residual = h_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));

    // running-mass diagnostic over three distinct positive marginals
    let y_grid = Grid::uniform(params.x0, 3.0 * params.x0, 2001)?;
    let marginals: Vec<(&str, Vec<f64>)> = vec![
        ("uniform", vec![1.0; y_grid.n()]),
        (
            "decaying",
            y_grid.nodes().iter().map(|y| (params.x0 / y).powi(3)).collect(),
        ),
        (
            "bump",
            y_grid
                .nodes()
                .iter()
                .map(|y| {
                    let z = (y - 1.8 * params.x0) / (0.3 * params.x0);
                    (-0.5 * z * z).exp()
                })
                .collect(),
        ),
    ];
    let m_probes: Vec<f64> = (1..=5).map(|k| params.x0 * (1.0 + 0.5 * k as f64)).collect();
    let mut all_increasing = true;
    let mut min_slope = f64::INFINITY;
    for (_, g) in &marginals {
        let rep = crate::log_model::nonexistence_diagnostic(&params, g, &y_grid, &m_probes)?;
        all_increasing &= rep.strictly_increasing;
        for s in &rep.slopes {
            min_slope = min_slope.min(*s);
        }
    }

    let mean_ratio = if alpha > 1.0 {
        Some(params.conditional_mean_ratio()?)
    } else {
        None
    };

    if spec.wants(Format::Json) {
        let nonexistence = JsonObject::new()
            .bool("strictly_increasing", all_increasing)
            .float("min_slope", min_slope)
            .int("marginals_tested", marginals.len() as i64)
            .int("probes_per_marginal", m_probes.len() as i64);
        let mut json = JsonObject::new()
            .int("schema_version", SCHEMA_VERSION)
            .str("command", "logmodel")
            .float("alpha", alpha)
            .float("beta", beta)
            .float("x0", params.x0)
            .float("lambda_tilde_bits", params.lambda_tilde_bits())
            .float("lambda_nats", params.lambda_nats())
            .float("consistency_residual", params.consistency_residual())
            .bool("mean_ratio_exists", mean_ratio.is_some());
        if let Some(r) = mean_ratio {
            json = json.float("mean_ratio", r);
        }
        json = json
            .float("prior_raw_mass_defect", prior.raw_mass() - 1.0)
            .float("h_normalization_max_residual", h_max_residual)
            .object("nonexistence", nonexistence);
        write_file(&spec.output_dir.join("result.json"), &json.render())?;
    }
    if spec.wants(Format::Csv) {
        write_residuals_csv(&spec.output_dir.join("residuals.csv"), &probes, &h_residuals)?;
        write_marginal_csv(
            &spec.output_dir.join("marginal.csv"),
            state_grid.nodes(),
            prior.values(),
        )?;
    }
    if all_increasing {
        Ok(RunOutcome {
            exit_code: EXIT_FINDING,
            finding: Some(
                "no normalized forward kernel exists: the running mass is strictly increasing"
                    .into(),
            ),
        })
    } else {
        Ok(RunOutcome { exit_code: EXIT_OK, finding: None })
    }
}

fn run_check(spec: &RunSpec) -> Result<RunOutcome> {
    let kappa = spec.f64_required("kappa")?;
    let mu_x = spec.f64_or("mu_x", 0.0)?;
    let sigma_x = spec.f64_or("sigma_x", 1.0)?;
    let (theta, phi, b, c) = match spec.parameters.get("preset").map(|s| s.as_str()) {
        Some("sims2003-quadratic") => (1.0, 1.0, 0.0, 0.0),
        Some(other) => {
            return Err(RiError::Usage(format!("unknown preset '{other}'")));
        }
        None => (
            spec.f64_required("theta")?,
            spec.f64_required("phi")?,
            spec.f64_required("b")?,
            spec.f64_required("c")?,
        ),
    };

    let report = check_feasibility(theta, phi, b, c, kappa, mu_x, sigma_x * sigma_x)?;

    if spec.wants(Format::Json) {
        let mut json = JsonObject::new()
            .int("schema_version", SCHEMA_VERSION)
            .str("command", "check")
            .float("kappa_bits", kappa)
            .float("mu_x", mu_x)
            .float("sigma_x", sigma_x)
            .float("theta", theta)
            .float("phi", phi)
            .float("b", b)
            .float("c", c)
            .bool("feasible", report.feasible)
            .str("certificate", &report.certificate);
        if let Some(s) = &report.solution {
            json = json
                .float("rho_sq", s.rho_sq)
                .float("sigma_y_sq", s.sigma_y_sq)
                .float("mu_y", s.mu_y)
                .float("lambda_tilde_bits", s.lambda_tilde_bits)
                .float("lambda_nats", s.lambda_nats);
        }
        write_file(&spec.output_dir.join("result.json"), &json.render())?;
    }

    if report.feasible {
        Ok(RunOutcome { exit_code: EXIT_OK, finding: None })
    } else {
        Ok(RunOutcome { exit_code: EXIT_FINDING, finding: Some(report.certificate) })
    }
}

fn run_solve(spec: &RunSpec) -> Result<RunOutcome> {
    let model = spec.str_or("model", "lq").to_string();
    let kappa = spec.f64_required("kappa")?;
    let n = spec.usize_or("n", 201)?;
    let mut config = SolverConfig::new(kappa)?;
    config.max_inner_iterations = spec.usize_or("max_inner", config.max_inner_iterations)?;

    let (prior, utility, action_grid) = match model.as_str() {
        "lq" => {
            let mu_x = spec.f64_or("mu_x", 0.0)?;
            let sigma_x = spec.f64_or("sigma_x", 1.0)?;
            let theta = spec.f64_or("theta", 1.0)?;
            let span = spec.f64_or("span_sigmas", 5.0)?;
            let problem = LqProblem::new(kappa, mu_x, sigma_x * sigma_x, theta)?;
            let sol = lq_gaussian::solve_restrictions(&problem, spec.root_choice()?)?;
            let gx = Grid::uniform(mu_x - span * sigma_x, mu_x + span * sigma_x, n)?;
            let gy = lq_gaussian::default_action_grid(&sol, &problem, &gx, n)?;
            let prior = gaussian_density(mu_x, sigma_x * sigma_x, &gx)?;
            (prior, sol.utility(&problem), gy)
        }
        "log" => {
            let alpha = spec.f64_required("alpha")?;
            let beta = spec.f64_required("beta")?;
            let params = LogModelParams::new(alpha, beta)?;
            let tail = spec.f64_or("truncation_tail", 1e-6)?;
            let gx = params.default_state_grid(n, tail)?;
            let prior = params.powerlaw_prior(&gx)?;
            // actions live on (0, x); start the action grid below x0 so the
            // certainty action x/(1+beta) is reachable for every state
            let y_lo = params.x0 / (2.0 * (1.0 + beta));
            let gy = Grid::uniform(y_lo, gx.upper(), n)?;
            (prior, UtilitySpec::log(beta)?, gy)
        }
        other => {
            return Err(RiError::Usage(format!(
                "model must be 'lq' or 'log', got '{other}'"
            )))
        }
    };

    let result = solve(&prior, &utility, &action_grid, &config)?;
    let residuals: Vec<f64> = result
        .kernel
        .rows()
        .map(|row| {
            row.iter()
                .zip(action_grid.weights())
                .map(|(q, w)| q * w)
                .sum::<f64>()
                - 1.0
        })
        .collect();
    let max_row_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));

    if spec.wants(Format::Json) {
        let json = JsonObject::new()
            .int("schema_version", SCHEMA_VERSION)
            .str("command", "solve")
            .str("model", &model)
            .float("kappa_bits", kappa)
            .int("n", n as i64)
            .float("lambda_tilde_bits", result.lambda_tilde_bits)
            .float("lambda_nats", result.lambda_tilde_bits / std::f64::consts::LN_2)
            .float("achieved_information_bits", result.achieved_information_bits)
            .float("expected_utility", result.expected_utility)
            .int("inner_iterations", result.inner_iterations as i64)
            .int("multiplier_probes", result.probe_trace.len() as i64)
            .bool("converged", result.converged)
            .bool("slack_constraint", result.slack_constraint)
            .float("max_row_residual", max_row_residual);
        write_file(&spec.output_dir.join("result.json"), &json.render())?;
    }
    if spec.wants(Format::Csv) {
        write_kernel_csv(
            &spec.output_dir.join("kernel.csv"),
            prior.grid().nodes(),
            action_grid.nodes(),
            result.kernel.rows(),
        )?;
        write_marginal_csv(
            &spec.output_dir.join("marginal.csv"),
            action_grid.nodes(),
            result.marginal.values(),
        )?;
        write_residuals_csv(
            &spec.output_dir.join("residuals.csv"),
            prior.grid().nodes(),
            &residuals,
        )?;
    }
    Ok(RunOutcome { exit_code: EXIT_OK, finding: None })
}

fn run_derivcheck(spec: &RunSpec) -> Result<RunOutcome> {
    let pairs = spec.usize_or("pairs", 50)?;
    let seed = spec.usize_or("seed", 42)? as u64;
    let eps1 = spec.f64_or("eps1", 1e-5)?;
    let eps2 = spec.f64_or("eps2", 1e-6)?;
    let n = spec.usize_or("n", 41)?;
    let tolerance = 1e-4;

    let gx = Grid::uniform(-4.0, 4.0, n)?;
    let gy = Grid::uniform(-4.0, 4.0, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deviations = Vec::with_capacity(pairs);
    let mut indices = Vec::with_capacity(pairs);
    for trial in 0..pairs {
        let pv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let prior = DiscreteDensity::normalized(gx.clone(), pv)?;
        let kv: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let kernel = crate::density::ConditionalKernel::new_unnormalized(
            gx.clone(),
            gy.clone(),
            kv,
        )?
        .row_normalized()?;
        let u: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda_tilde = rng.gen_range(0.2..2.0);
        let lambda_nats = lambda_tilde / std::f64::consts::LN_2;
        let (ix, iy) = loop {
            let ix = rng.gen_range(2..n - 2);
            let iy = rng.gen_range(2..n - 2);
            if prior.values()[ix] * kernel.value(ix, iy) > 1e-3 {
                break (ix, iy);
            }
        };
        let analytic =
            variational_derivative_analytic(&prior, &kernel, &u, lambda_nats, ix, iy)?;
        let extrapolated = variational_derivative_richardson(
            &prior, &kernel, &u, lambda_tilde, 1.0, ix, iy, eps1, eps2,
        )?;
        let denom = analytic.abs().max(1.0);
        deviations.push((extrapolated - analytic).abs() / denom);
        indices.push(trial as f64);
    }
    let max_deviation = deviations.iter().fold(0.0f64, |m, d| m.max(*d));
    let pass = max_deviation <= tolerance;

    if spec.wants(Format::Json) {
        let json = JsonObject::new()
            .int("schema_version", SCHEMA_VERSION)
            .str("command", "derivcheck")
            .int("pairs", pairs as i64)
            .int("seed", seed as i64)
            .float("eps1", eps1)
            .float("eps2", eps2)
            .float("max_rel_deviation", max_deviation)
            .float("tolerance", tolerance)
            .bool("pass", pass);
        write_file(&spec.output_dir.join("result.json"), &json.render())?;
    }
    if spec.wants(Format::Csv) {
        write_residuals_csv(&spec.output_dir.join("residuals.csv"), &indices, &deviations)?;
    }
    if pass {
        Ok(RunOutcome { exit_code: EXIT_OK, finding: None })
    } else {
        Err(RiError::Numeric(format!(
            "analytic and finite-perturbation derivatives disagree: max relative deviation {max_deviation:.3e} > {tolerance:.0e}"
        )))
    }
}

/// Map an error to its process exit code.
pub fn exit_code_for(err: &RiError) -> i32 {
    match err {
        RiError::Usage(_) | RiError::Config { .. } => EXIT_USAGE,
        _ => EXIT_ERROR,
    }
}
