//! Experiment configuration: TOML schema, validation and resolution into model objects.

use std::path::Path;

use cca_core::dynamics::RateKind;
use cca_core::hilbert::{CutoffSpec, HilbertSpace, StateSpec};
use cca_core::model::{DephasingConvention, DriveKind, ModelParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Eigenspectrum,
    Qmap,
    Pulse,
    DissipationSweep,
    SteadySweep,
    SwRates,
    SwSweep,
    PumpEquivalenceCheck,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eigenspectrum => "eigenspectrum",
            Task::Qmap => "qmap",
            Task::Pulse => "pulse",
            Task::DissipationSweep => "dissipation-sweep",
            Task::SteadySweep => "steady-sweep",
            Task::SwRates => "sw-rates",
            Task::SwSweep => "sw-sweep",
            Task::PumpEquivalenceCheck => "pump-equivalence-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub model: ModelConfig,
    pub space: SpaceConfig,
    #[serde(default)]
    pub task_params: TaskParams,
}

/// Hopping given either as a single all-to-all value or as the full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hopping {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub omega_q: f64,
    pub omega_c: f64,
    #[serde(default)]
    pub omega_d: f64,
    #[serde(default = "one")]
    pub g: f64,
    #[serde(rename = "J")]
    pub hopping: Hopping,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub gamma_phi: f64,
    #[serde(default)]
    pub dephasing: DephasingConvention,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveConfig {
    #[serde(default)]
    pub kind: DriveKind,
    /// Peak amplitude eps in units of g.
    #[serde(default)]
    pub amplitude: f64,
    /// Per-site phases in radians; missing entries are zero.
    #[serde(default)]
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub n_sites: usize,
    pub cutoff: CutoffSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Linspace { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![start],
                n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d_grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    /// Overrides the Rabi frequency read off the spectrum when tailoring the pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_kind: Option<RateKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_peaks: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_check: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

pub const DEFAULT_TIME_POINTS: usize = 601;
pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

/// Parameters accepted by each task; anything else set in `task_params` is reported.
fn allowed(task: Task) -> &'static [&'static str] {
    const ODE: [&str; 2] = ["rtol", "atol"];
    match task {
        Task::Eigenspectrum => &["delta_grid"],
        Task::Qmap => &["delta_grid", "omega_d_grid", "target"],
        Task::Pulse | Task::PumpEquivalenceCheck => &["target", "time_points", "rabi_frequency", ODE[0], ODE[1]],
        Task::DissipationSweep => &["target", "time_points", "rabi_frequency", "rate_kind", "rate_grid", ODE[0], ODE[1]],
        Task::SteadySweep => &["omega_d_grid", "refine_peaks", "convergence_check"],
        Task::SwRates => &["omega_d_grid", "refine_peaks"],
        Task::SwSweep => &["omega_d_grid", "refine_peaks"],
    }
}

fn required(task: Task) -> &'static [&'static str] {
    match task {
        Task::Eigenspectrum => &["delta_grid"],
        Task::Qmap => &["delta_grid", "omega_d_grid", "target"],
        Task::Pulse | Task::PumpEquivalenceCheck => &["target"],
        Task::DissipationSweep => &["target", "rate_kind", "rate_grid"],
        Task::SteadySweep | Task::SwRates | Task::SwSweep => &["omega_d_grid"],
    }
}

impl TaskParams {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $(if self.$f.is_some() { v.push(stringify!($f)); })* };
        }
        check!(delta_grid, omega_d_grid, target, time_points, rabi_frequency, rate_kind, rate_grid, rtol, atol, refine_peaks, convergence_check);
        v
    }
}

/// A validated configuration with the model objects it describes.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub params: ModelParams,
    pub space: HilbertSpace,
    pub hash: String,
}

#[derive(Debug)]
pub struct ValidationError {
    pub problems: Vec<String>,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration ({} problem{}):", self.problems.len(), if self.problems.len() == 1 { "" } else { "s" })?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// Parses TOML text, reporting every unknown key and every semantic problem at once.
pub fn parse(text: &str) -> Result<Resolved, ValidationError> {
    let mut value: toml::Value = toml::from_str(text).map_err(|e| ValidationError { problems: vec![format!("TOML syntax: {}", e.message())] })?;
    let mut problems = unit_problems(&mut value);
    let units_ok = problems.is_empty();
    let mut unknown = Vec::new();
    let cfg: Result<ExperimentConfig, _> = serde_ignored::deserialize(value, |path| unknown.push(path.to_string()));
    problems.extend(unknown.iter().map(|k| format!("unknown key `{k}`")));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            problems.push(e.message().to_string());
            return Err(ValidationError { problems });
        }
    };
    if !units_ok {
        // semantic checks on placeholder values would only add noise
        return Err(ValidationError { problems });
    }
    match validate(cfg) {
        Ok(r) if problems.is_empty() => Ok(r),
        Ok(_) => Err(ValidationError { problems }),
        Err(mut more) => {
            problems.append(&mut more.problems);
            Err(ValidationError { problems })
        }
    }
}

pub fn load(path: &Path) -> Result<Resolved, ValidationError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ValidationError { problems: vec![format!("cannot read {}: {e}", path.display())] })?;
    parse(&text)
}

/// Energies are bare numbers in units of g; strings such as "7 GHz" are rejected explicitly and
/// replaced by a placeholder so that the remaining keys can still be checked.
fn unit_problems(v: &mut toml::Value) -> Vec<String> {
    let mut out = Vec::new();
    let placeholder = toml::Value::Float(1.0);
    if let Some(model) = v.get_mut("model").and_then(|m| m.as_table_mut()) {
        for (k, x) in model.iter_mut() {
            if x.is_str() && k != "dephasing" {
                out.push(format!("model.{k}: energies are dimensionless multiples of g, found the string {x}"));
                *x = placeholder.clone();
            }
        }
        if let Some(d) = model.get_mut("drive").and_then(|d| d.as_table_mut()) {
            if let Some(a) = d.get_mut("amplitude").filter(|a| a.is_str()) {
                out.push(format!("model.drive.amplitude: energies are dimensionless multiples of g, found the string {a}"));
                *a = placeholder.clone();
            }
        }
    }
    out
}

fn grid_problems(name: &str, g: &Grid, out: &mut Vec<String>) {
    let v = g.values();
    if v.is_empty() {
        out.push(format!("task_params.{name} is empty"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        out.push(format!("task_params.{name} contains non-finite values"));
    }
    if let Grid::Linspace { start, stop, .. } = g {
        if !(start.is_finite() && stop.is_finite()) {
            out.push(format!("task_params.{name} bounds must be finite"));
        }
    }
}

pub fn validate(cfg: ExperimentConfig) -> Result<Resolved, ValidationError> {
    let mut p = Vec::new();
    let tp = &cfg.task_params;
    let present = tp.present();
    for k in &present {
        if !allowed(cfg.task).contains(k) {
            p.push(format!("task_params.{k} is not used by task `{}`", cfg.task.name()));
        }
    }
    for k in required(cfg.task) {
        if !present.contains(k) {
            p.push(format!("task_params.{k} is required by task `{}`", cfg.task.name()));
        }
    }
    for (name, g) in [("delta_grid", &tp.delta_grid), ("omega_d_grid", &tp.omega_d_grid), ("rate_grid", &tp.rate_grid)] {
        if let Some(g) = g {
            grid_problems(name, g, &mut p);
        }
    }
    if let Some(g) = &tp.rate_grid {
        let v = g.values();
        if v.iter().any(|&r| r < 0.0) || v.windows(2).any(|w| w[1] <= w[0]) {
            p.push("task_params.rate_grid must be non-negative and strictly ascending".into());
        }
    }
    if tp.time_points.is_some_and(|n| n < 2) {
        p.push("task_params.time_points must be at least 2".into());
    }
    for (name, v) in [("rtol", tp.rtol), ("atol", tp.atol), ("rabi_frequency", tp.rabi_frequency)] {
        if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
            p.push(format!("task_params.{name} must be positive"));
        }
    }

    let n = cfg.space.n_sites;
    if n == 0 {
        p.push("space.n_sites must be at least 1".into());
    }
    let m = &cfg.model;
    if !(m.g > 0.0) {
        p.push("model.g must be positive".into());
    }
    if m.drive.phases.len() > n {
        p.push(format!("model.drive.phases has {} entries for {n} sites", m.drive.phases.len()));
    }
    let hopping = match &m.hopping {
        Hopping::Uniform(j) => (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { *j }).collect()).collect(),
        Hopping::Matrix(mat) => mat.clone(),
    };
    if hopping.len() != n {
        p.push(format!("model.J has {} rows for {n} sites", hopping.len()));
    }
    let mut params = ModelParams::uniform(n.max(1), m.omega_q, m.omega_c, m.omega_d, 0.0);
    params.g = m.g;
    params.hopping = hopping;
    params = match m.drive.kind {
        DriveKind::Qubit => params.with_qubit_drive(m.drive.amplitude, &m.drive.phases),
        DriveKind::Cavity => params.with_cavity_drive(m.drive.amplitude, &m.drive.phases),
    };
    params = params.with_rates(m.kappa, m.gamma, m.gamma_phi).with_dephasing(m.dephasing);
    if let Err(e) = params.validate() {
        p.push(format!("model: {e}"));
    }

    let two_site = matches!(cfg.task, Task::SteadySweep | Task::SwRates | Task::SwSweep) || tp.refine_peaks == Some(true);
    if two_site && n != 2 {
        p.push(format!("task `{}` needs space.n_sites = 2", cfg.task.name()));
    }
    if matches!(cfg.task, Task::SwRates | Task::SwSweep) && m.drive.kind != DriveKind::Cavity {
        p.push(format!("task `{}` needs a cavity drive", cfg.task.name()));
    }
    if matches!(cfg.task, Task::SwRates | Task::SwSweep) && !matches!(cfg.space.cutoff, CutoffSpec::PerModeMax(_)) {
        p.push(format!("task `{}` takes the fluctuation-mode cutoff from space.cutoff = {{ per_mode_max = n }}", cfg.task.name()));
    }
    if cfg.task == Task::PumpEquivalenceCheck && m.drive.kind != DriveKind::Qubit {
        p.push("task `pump-equivalence-check` starts from a qubit drive".into());
    }
    if matches!(cfg.task, Task::Pulse | Task::DissipationSweep | Task::PumpEquivalenceCheck) && !(m.drive.amplitude > 0.0) {
        p.push(format!("task `{}` needs a positive model.drive.amplitude", cfg.task.name()));
    }
    if tp.convergence_check == Some(true) && !matches!(cfg.space.cutoff, CutoffSpec::PerModeMax(_)) {
        p.push("task_params.convergence_check needs space.cutoff = { per_mode_max = n }".into());
    }

    let space = if n > 0 {
        match HilbertSpace::build(n, cfg.space.cutoff) {
            Ok(s) => Some(s),
            Err(e) => {
                p.push(format!("space: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let (Some(s), Some(t)) = (&space, &tp.target) {
        if let Err(e) = cca_core::hilbert::named_state(s, t) {
            p.push(format!("task_params.target: {e}"));
        }
    }
    if !p.is_empty() {
        return Err(ValidationError { problems: p });
    }
    let hash = config_hash(&cfg);
    Ok(Resolved { config: cfg, params, space: space.expect("space built when no problems"), hash })
}

/// SHA-256 of the canonical JSON form of the configuration, ignoring where output goes.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.task_params.output_dir = None;
    let json = serde_json::to_vec(&c).expect("config serialises");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
task = "qmap"
[model]
omega_q = 7.0
omega_c = 6.0
J = 1.0
drive = { kind = "qubit", amplitude = 0.05 }
[space]
n_sites = 2
cutoff = { total_excitations = 2 }
[task_params]
delta_grid = { start = -1.0, stop = 1.0, points = 3 }
omega_d_grid = [7.0, 7.4]
target = { kind = "qubit_bell", state = "T0" }
"#;

    #[test]
    fn base_config_resolves() {
        let r = parse(BASE).unwrap();
        assert_eq!(r.params.hopping, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(r.config.task_params.delta_grid.unwrap().values(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(r.hash.len(), 64);
    }

    #[test]
    fn every_problem_is_listed() {
        let text = BASE.replace("J = 1.0", "J = 1.0\nfoo = 2\nomega_x = 1").replace("omega_d_grid = [7.0, 7.4]", "omega_d_grid = []\nrtol = -1.0");
        let e = parse(&text).unwrap_err();
        let all = e.problems.join("\n");
        for needle in ["model.foo", "model.omega_x", "omega_d_grid is empty", "rtol is not used"] {
            assert!(all.contains(needle), "missing {needle} in {all}");
        }
    }

    #[test]
    fn absolute_units_are_rejected() {
        let e = parse(&BASE.replace("omega_q = 7.0", "omega_q = \"7 GHz\"")).unwrap_err();
        assert!(e.problems.iter().any(|p| p.contains("dimensionless")));
    }

    #[test]
    fn output_dir_does_not_change_the_hash() {
        let a = parse(BASE).unwrap();
        let b = parse(&format!("{BASE}output_dir = \"elsewhere\"\n")).unwrap();
        assert_eq!(a.hash, b.hash);
        let c = parse(&BASE.replace("omega_c = 6.0", "omega_c = 6.5")).unwrap();
        assert_ne!(a.hash, c.hash);
    }
}
