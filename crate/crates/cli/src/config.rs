//! Run configuration: one TOML file fully determines a run.
//!
//! Angles that are naturally multiples of π (pulse areas, spectral phase
//! offsets) are given in units of π under keys ending in `_pi`.

use std::f64::consts::PI;
use std::fmt;

use pap_core::atom::{angular_frequency, default_potassium, AtomSpec};
use pap_core::dynamics::IntegratorParams;
use pap_core::experiments::{CouplingMode, ExperimentSetup, Line, AP_CHIRP};
use pap_core::shaper::{ShapeSpec, SpectralGrid, WidthConvention, WindowSpec};
use serde::{Deserialize, Serialize};

/// The default potassium configuration shipped with the tool.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory; overridden by `--out` and `PAPSIM_OUT`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default = "default_potassium")]
    pub atom: AtomSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub shape: ShapeConfig,
    #[serde(default)]
    pub integrator: IntegratorParams,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: None,
            atom: default_potassium(),
            grid: GridConfig::default(),
            shape: ShapeConfig::default(),
            integrator: IntegratorParams::default(),
            experiment: ExperimentBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// nm
    pub lambda_min: f64,
    /// nm
    pub lambda_max: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { lambda_min: 740.0, lambda_max: 800.0, n_points: 1 << 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeConfig {
    /// nm
    pub source_center: f64,
    /// nm, intensity FWHM
    pub source_fwhm: f64,
    /// Envelope reference, nm.
    pub carrier_wavelength: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixel_width: Option<f64>,
    pub width_convention: WidthConvention,
    pub coupling: CouplingMode,
    /// Used by synthesize, simulate and scan-2d.
    pub windows: Vec<WindowSpec>,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            source_center: 768.2,
            source_fwhm: 9.5,
            carrier_wavelength: 768.2,
            pixel_width: None,
            width_convention: WidthConvention::Intensity,
            coupling: CouplingMode::CrossTalk,
            windows: vec![
                WindowSpec::new(769.9, 1.8).with_chirp(AP_CHIRP),
                WindowSpec::new(766.5, 1.8).with_chirp(AP_CHIRP),
            ],
        }
    }
}

/// Uniform axis `start..=stop` with `points` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.start + k as f64 * step).collect()
    }

    fn check(&self, path: &str, issues: &mut Vec<Issue>) {
        if self.points == 0 {
            issues.push(Issue::new(format!("{path}.points"), "must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            issues.push(Issue::new(path, "start and stop must be finite"));
        } else if self.points > 1 && !(self.stop > self.start) {
            issues.push(Issue::new(format!("{path}.stop"), "must exceed start"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesizeParams {
    /// Effective area the exported envelope is scaled to.
    pub area_pi: f64,
}

impl Default for SynthesizeParams {
    fn default() -> Self {
        Self { area_pi: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub area_pi: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self { area_pi: 1.0 }
    }
}

/// Single-window area sweep; `chirp` is ignored by scan-rabi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSweepParams {
    pub line: Line,
    /// nm
    pub window_fwhm: f64,
    /// fs²
    pub chirp: f64,
    pub area_pi: Axis,
}

impl Default for LineSweepParams {
    fn default() -> Self {
        Self { line: Line::D1, window_fwhm: 1.8, chirp: AP_CHIRP, area_pi: Axis { start: 0.0, stop: 3.0, points: 31 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scan2dParams {
    pub area_pi: Axis,
}

impl Default for Scan2dParams {
    fn default() -> Self {
        Self { area_pi: Axis { start: 0.25, stop: 3.0, points: 12 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompletenessParams {
    /// nm
    pub window_fwhm: f64,
    /// D1 pulse delay after the D2 pulse, fs.
    pub delay: f64,
    /// fs², D2 window
    pub first_chirp: f64,
    /// fs², D1 window
    pub second_chirp: f64,
    pub first_area_pi: f64,
    pub second_area_pi: f64,
}

impl Default for CompletenessParams {
    fn default() -> Self {
        Self {
            window_fwhm: 1.8,
            delay: 8000.0,
            first_chirp: AP_CHIRP,
            second_chirp: AP_CHIRP,
            first_area_pi: 1.0,
            second_area_pi: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseControlParams {
    pub line: Line,
    pub window_fwhm: f64,
    pub chirp: f64,
    pub area_pi: f64,
    pub offsets_pi: Vec<f64>,
}

impl Default for PhaseControlParams {
    fn default() -> Self {
        Self { line: Line::D1, window_fwhm: 1.8, chirp: AP_CHIRP, area_pi: 1.0, offsets_pi: vec![0.0, 0.5, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeControlParams {
    pub targets: Vec<f64>,
    /// Number of corrections after the initial guess.
    pub max_iterations: usize,
    pub window_fwhm: f64,
    pub chirp: f64,
    /// The initial guess is also evaluated with these narrower windows.
    pub narrow_fwhm: f64,
}

impl Default for AmplitudeControlParams {
    fn default() -> Self {
        Self {
            targets: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            max_iterations: 2,
            window_fwhm: 1.8,
            chirp: AP_CHIRP,
            narrow_fwhm: 0.18,
        }
    }
}

/// At most one experiment table may be present; it must match the
/// subcommand. Absent tables take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesize: Option<SynthesizeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_rabi: Option<LineSweepParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_ap: Option<LineSweepParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_2d: Option<Scan2dParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_control: Option<PhaseControlParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_control: Option<AmplitudeControlParams>,
}

impl ExperimentBlock {
    /// Names of the tables that are present.
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.synthesize.is_some() {
            v.push("synthesize");
        }
        if self.simulate.is_some() {
            v.push("simulate");
        }
        if self.scan_rabi.is_some() {
            v.push("scan-rabi");
        }
        if self.scan_ap.is_some() {
            v.push("scan-ap");
        }
        if self.scan_2d.is_some() {
            v.push("scan-2d");
        }
        if self.completeness.is_some() {
            v.push("completeness");
        }
        if self.phase_control.is_some() {
            v.push("phase-control");
        }
        if self.amplitude_control.is_some() {
            v.push("amplitude-control");
        }
        v
    }
}

/// One semantic violation, located by its key path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    /// TOML syntax or schema error (unknown key, wrong type), with location.
    #[error("{0}")]
    Syntax(String),
    #[error("more than one experiment is set: {}", .0.join(", "))]
    Ambiguous(Vec<String>),
    #[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Issue>),
}

/// Parses and validates a configuration, reporting every semantic violation.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let names = cfg.experiment.names();
    if names.len() > 1 {
        return Err(ConfigError::Ambiguous(names.iter().map(|s| s.to_string()).collect()));
    }
    let issues = cfg.issues();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

fn non_negative(v: f64) -> bool {
    v >= 0.0 && v.is_finite()
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn spectral_grid(&self) -> SpectralGrid {
        SpectralGrid::from_wavelengths(self.grid.lambda_min, self.grid.lambda_max, self.grid.n_points)
            .expect("validated grid")
    }

    pub fn shape_spec(&self) -> ShapeSpec {
        ShapeSpec {
            windows: self.shape.windows.clone(),
            pixel_width: self.shape.pixel_width,
            width_convention: self.shape.width_convention,
        }
    }

    /// Experiment setup with the given default window geometry.
    pub fn setup(&self, window_fwhm: f64, chirp: f64) -> ExperimentSetup {
        ExperimentSetup {
            grid: self.spectral_grid(),
            source_center: self.shape.source_center,
            source_fwhm: self.shape.source_fwhm,
            atom: self.atom.clone(),
            integrator: self.integrator.clone(),
            carrier: angular_frequency(self.shape.carrier_wavelength).expect("validated carrier"),
            window_fwhm,
            chirp,
            pixel_width: self.shape.pixel_width,
            coupling: self.shape.coupling,
        }
    }

    /// All semantic violations, in key order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut v = Vec::new();
        self.grid_issues(&mut v);
        self.atom_issues(&mut v);
        self.shape_issues(&mut v);
        self.integrator_issues(&mut v);
        self.experiment_issues(&mut v);
        v
    }

    fn grid_ok(&self) -> bool {
        let g = &self.grid;
        positive(g.lambda_min) && positive(g.lambda_max) && g.lambda_min < g.lambda_max
    }

    fn inside_grid(&self, lambda: f64) -> bool {
        self.grid_ok() && lambda >= self.grid.lambda_min && lambda <= self.grid.lambda_max
    }

    fn grid_issues(&self, v: &mut Vec<Issue>) {
        let g = &self.grid;
        if !positive(g.lambda_min) {
            v.push(Issue::new("grid.lambda_min", "must be positive"));
        }
        if !positive(g.lambda_max) {
            v.push(Issue::new("grid.lambda_max", "must be positive"));
        } else if !(g.lambda_max > g.lambda_min) {
            v.push(Issue::new("grid.lambda_max", "must exceed lambda_min"));
        }
        if !g.n_points.is_power_of_two() || g.n_points < 1 << 12 {
            v.push(Issue::new("grid.n_points", format!("must be a power of two >= 4096, got {}", g.n_points)));
        }
    }

    fn atom_issues(&self, v: &mut Vec<Issue>) {
        let a = &self.atom;
        if a.excited.is_empty() {
            v.push(Issue::new("atom.excited", "needs at least one level"));
        }
        for (i, lvl) in a.excited.iter().enumerate() {
            if !positive(lvl.transition_wavelength) {
                v.push(Issue::new(format!("atom.excited[{i}].transition_wavelength"), "must be positive"));
            } else if !self.inside_grid(lvl.transition_wavelength) {
                v.push(Issue::new(format!("atom.excited[{i}].transition_wavelength"), "lies outside the grid"));
            }
            if !positive(lvl.dipole_weight) {
                v.push(Issue::new(format!("atom.excited[{i}].dipole_weight"), "must be positive"));
            }
        }
        if !a.excited.is_empty() && !a.excited.iter().any(|l| l.dipole_weight == 1.0) {
            v.push(Issue::new("atom.excited", "one dipole_weight must equal 1.0 (the reference transition)"));
        }
        if let Err(e) = a.probe.validate() {
            v.push(Issue::new("atom.probe", e.to_string()));
        }
        // remaining structural checks (duplicate wavelengths)
        if v.iter().all(|i| !i.path.starts_with("atom")) {
            if let Err(e) = a.validate() {
                v.push(Issue::new("atom", e.to_string()));
            }
        }
    }

    fn shape_issues(&self, v: &mut Vec<Issue>) {
        let s = &self.shape;
        if !positive(s.source_center) {
            v.push(Issue::new("shape.source_center", "must be positive"));
        } else if !self.inside_grid(s.source_center) {
            v.push(Issue::new("shape.source_center", "lies outside the grid"));
        }
        if !positive(s.source_fwhm) {
            v.push(Issue::new("shape.source_fwhm", "must be positive"));
        }
        if !positive(s.carrier_wavelength) {
            v.push(Issue::new("shape.carrier_wavelength", "must be positive"));
        } else if !self.inside_grid(s.carrier_wavelength) {
            v.push(Issue::new("shape.carrier_wavelength", "lies outside the grid"));
        }
        if let Some(p) = s.pixel_width {
            if !positive(p) {
                v.push(Issue::new("shape.pixel_width", "must be positive"));
            }
        }
        if s.windows.is_empty() {
            v.push(Issue::new("shape.windows", "needs at least one window"));
        }
        for (i, w) in s.windows.iter().enumerate() {
            let at = |k: &str| format!("shape.windows[{i}].{k}");
            if !positive(w.center_wavelength) {
                v.push(Issue::new(at("center_wavelength"), "must be positive"));
            } else if !self.inside_grid(w.center_wavelength) {
                v.push(Issue::new(at("center_wavelength"), "lies outside the grid"));
            }
            if !positive(w.fwhm) {
                v.push(Issue::new(at("fwhm"), format!("must be positive, got {}", w.fwhm)));
            }
            if !non_negative(w.rel_amplitude) {
                v.push(Issue::new(at("rel_amplitude"), "must be >= 0"));
            }
            for (k, x) in [("chirp_alpha", w.chirp_alpha), ("phase_offset", w.phase_offset), ("delay", w.delay)] {
                if !x.is_finite() {
                    v.push(Issue::new(at(k), "must be finite"));
                }
            }
        }
    }

    fn integrator_issues(&self, v: &mut Vec<Issue>) {
        let p = &self.integrator;
        if !(p.dt_max > 0.0 && p.dt_max <= 0.5) {
            v.push(Issue::new("integrator.dt_max", format!("must lie in (0, 0.5] fs, got {}", p.dt_max)));
        }
        if !positive(p.sample_interval) {
            v.push(Issue::new("integrator.sample_interval", "must be positive"));
        }
        if !(p.support_threshold > 0.0 && p.support_threshold < 1.0) {
            v.push(Issue::new("integrator.support_threshold", "must lie in (0, 1)"));
        }
    }

    fn experiment_issues(&self, v: &mut Vec<Issue>) {
        let e = &self.experiment;
        let two_levels = |v: &mut Vec<Issue>, name: &str| {
            if self.atom.excited.len() < 2 {
                v.push(Issue::new(format!("experiment.{name}"), "needs an atom with two excited levels"));
            }
        };
        let fwhm = |v: &mut Vec<Issue>, path: String, x: f64| {
            if !positive(x) {
                v.push(Issue::new(path, "must be positive"));
            }
        };
        let chirp = |v: &mut Vec<Issue>, path: String, x: f64| {
            if !non_negative(x) {
                v.push(Issue::new(path, "must be >= 0"));
            }
        };
        if let Some(p) = &e.synthesize {
            if !non_negative(p.area_pi) {
                v.push(Issue::new("experiment.synthesize.area_pi", "must be >= 0"));
            }
        }
        if let Some(p) = &e.simulate {
            if !non_negative(p.area_pi) {
                v.push(Issue::new("experiment.simulate.area_pi", "must be >= 0"));
            }
        }
        for (name, p) in [("scan-rabi", &e.scan_rabi), ("scan-ap", &e.scan_ap)] {
            if let Some(p) = p {
                two_levels(v, name);
                fwhm(v, format!("experiment.{name}.window_fwhm"), p.window_fwhm);
                chirp(v, format!("experiment.{name}.chirp"), p.chirp);
                p.area_pi.check(&format!("experiment.{name}.area_pi"), v);
            }
        }
        if let Some(p) = &e.scan_2d {
            two_levels(v, "scan-2d");
            p.area_pi.check("experiment.scan-2d.area_pi", v);
        }
        if let Some(p) = &e.completeness {
            two_levels(v, "completeness");
            fwhm(v, "experiment.completeness.window_fwhm".into(), p.window_fwhm);
            if !positive(p.delay) {
                v.push(Issue::new("experiment.completeness.delay", "must be positive"));
            }
            chirp(v, "experiment.completeness.first_chirp".into(), p.first_chirp);
            chirp(v, "experiment.completeness.second_chirp".into(), p.second_chirp);
            for (k, x) in [("first_area_pi", p.first_area_pi), ("second_area_pi", p.second_area_pi)] {
                if !non_negative(x) {
                    v.push(Issue::new(format!("experiment.completeness.{k}"), "must be >= 0"));
                }
            }
        }
        if let Some(p) = &e.phase_control {
            two_levels(v, "phase-control");
            fwhm(v, "experiment.phase-control.window_fwhm".into(), p.window_fwhm);
            chirp(v, "experiment.phase-control.chirp".into(), p.chirp);
            if !positive(p.area_pi) {
                v.push(Issue::new("experiment.phase-control.area_pi", "must be positive"));
            }
            if p.offsets_pi.is_empty() {
                v.push(Issue::new("experiment.phase-control.offsets_pi", "needs at least one offset"));
            }
        }
        if let Some(p) = &e.amplitude_control {
            two_levels(v, "amplitude-control");
            fwhm(v, "experiment.amplitude-control.window_fwhm".into(), p.window_fwhm);
            chirp(v, "experiment.amplitude-control.chirp".into(), p.chirp);
            fwhm(v, "experiment.amplitude-control.narrow_fwhm".into(), p.narrow_fwhm);
            if p.targets.is_empty() {
                v.push(Issue::new("experiment.amplitude-control.targets", "needs at least one target"));
            }
            for (i, t) in p.targets.iter().enumerate() {
                if !positive(*t) {
                    v.push(Issue::new(format!("experiment.amplitude-control.targets[{i}]"), "must be positive"));
                }
            }
        }
    }
}

/// Converts an area or phase given in units of π to radians.
pub fn pi(x: f64) -> f64 {
    x * PI
}
