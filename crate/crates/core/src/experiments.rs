//! Experiment recipes: Rabi calibration, single-line adiabatic passage,
//! area × delay scans, the two-pulse completeness test, phase control and
//! adaptive amplitude control.
//!
//! Every recipe takes an [`ExperimentSetup`] (grid, source, atom, integrator,
//! default window geometry) and is deterministic. Independent grid points are
//! evaluated in parallel; results are assembled in input order.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{angular_frequency, default_potassium, fine_structure_splitting, AtomSpec};
use crate::dynamics::{
    assign_windows, propagate_with, scale_for_area, unit_areas, AmplitudeTrajectory, AreaReport,
    Drive, IntegratorParams,
};
use crate::error::{Error, Result};
use crate::observables::{
    analyze_beat, beat_trace, ion_signal, peak_power_near, trace_power_spectrum, wrap_phase,
    BeatAnalysis, BeatTrace, FinalState,
};
use crate::shaper::{
    shape_field, source_spectrum, synthesize, ShapeSpec, SpectralField, SpectralGrid,
    TemporalField, WindowSpec,
};

/// Local chirp that makes each line adiabatic, fs².
pub const AP_CHIRP: f64 = 270e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Every level is driven by the full envelope.
    #[default]
    CrossTalk,
    /// Each level sees only the envelope of its own window (Stark-free
    /// reference).
    IndependentChannels,
}

/// Which excited level a single-line experiment addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Line {
    D1,
    D2,
}

impl Line {
    pub fn level(self) -> usize {
        match self {
            Line::D1 => 0,
            Line::D2 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub grid: SpectralGrid,
    /// nm
    pub source_center: f64,
    /// nm, intensity FWHM
    pub source_fwhm: f64,
    pub atom: AtomSpec,
    pub integrator: IntegratorParams,
    /// rad/fs
    pub carrier: f64,
    /// Default window FWHM, nm.
    pub window_fwhm: f64,
    /// Default local chirp, fs².
    pub chirp: f64,
    /// SLM pixel width applied to every constructed shape, nm.
    pub pixel_width: Option<f64>,
    pub coupling: CouplingMode,
}

impl Default for ExperimentSetup {
    fn default() -> Self {
        Self {
            grid: SpectralGrid::default_grid(),
            source_center: 768.2,
            source_fwhm: 9.5,
            atom: default_potassium(),
            integrator: IntegratorParams::default(),
            carrier: angular_frequency(768.2).unwrap(),
            window_fwhm: 1.8,
            chirp: AP_CHIRP,
            pixel_width: None,
            coupling: CouplingMode::CrossTalk,
        }
    }
}

/// A shape synthesized once at unit scale, with its unit pulse areas.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub shape: ShapeSpec,
    pub field: TemporalField,
    /// Per-level fields for the independent-channels mode.
    pub channels: Option<Vec<Option<TemporalField>>>,
    pub unit: AreaReport,
}

impl ExperimentSetup {
    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.integrator.validate()?;
        if self.atom.n_levels() < 2 {
            return Err(Error::Config("experiments need two excited levels".into()));
        }
        Ok(())
    }

    pub fn source(&self) -> Result<SpectralField> {
        source_spectrum(self.grid, self.source_center, self.source_fwhm)
    }

    /// Window at the resonance of `level` with the default width.
    pub fn window(&self, level: usize) -> WindowSpec {
        WindowSpec::new(self.atom.excited[level].transition_wavelength, self.window_fwhm)
    }

    pub fn shape(&self, windows: Vec<WindowSpec>) -> ShapeSpec {
        ShapeSpec { pixel_width: self.pixel_width, ..ShapeSpec::new(windows) }
    }

    /// Both resonant windows with equal relative amplitude and common chirp.
    pub fn double_window(&self, chirp: f64) -> ShapeSpec {
        self.shape(vec![self.window(0).with_chirp(chirp), self.window(1).with_chirp(chirp)])
    }

    pub fn prepare(&self, shape: &ShapeSpec) -> Result<Prepared> {
        let source = self.source()?;
        let field = synthesize(&shape_field(&source, shape)?, self.carrier)?;
        let unit = AreaReport::from_areas(unit_areas(shape, &source, &self.atom)?);
        let channels = match self.coupling {
            CouplingMode::CrossTalk => None,
            CouplingMode::IndependentChannels => {
                let assign = assign_windows(shape, &self.atom)?;
                let fields = assign
                    .iter()
                    .map(|w| match w {
                        Some(k) if shape.windows[*k].rel_amplitude > 0.0 => {
                            let single = ShapeSpec { windows: vec![shape.windows[*k].clone()], ..shape.clone() };
                            synthesize(&shape_field(&source, &single)?, self.carrier).map(Some)
                        }
                        _ => Ok(None),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(fields)
            }
        };
        Ok(Prepared { shape: shape.clone(), field, channels, unit })
    }

    pub fn propagate_scaled(&self, prep: &Prepared, scale: f64) -> Result<AmplitudeTrajectory> {
        match &prep.channels {
            None => {
                let f = prep.field.clone().with_scale(scale);
                propagate_with(Drive::Shared(&f), &self.atom, &self.integrator, None)
            }
            Some(ch) => {
                let scaled: Vec<Option<TemporalField>> =
                    ch.iter().map(|f| f.clone().map(|f| f.with_scale(scale))).collect();
                propagate_with(Drive::PerLevel(&scaled), &self.atom, &self.integrator, None)
            }
        }
    }

    /// Propagates with the scale that gives effective area `area`.
    pub fn propagate_area(&self, prep: &Prepared, area: f64) -> Result<AmplitudeTrajectory> {
        if area == 0.0 {
            return self.propagate_scaled(prep, 0.0);
        }
        self.propagate_scaled(prep, scale_for_area(&prep.unit, area)?)
    }

    /// Beat period of the first two levels, fs.
    pub fn beat_period(&self) -> Result<f64> {
        Ok(1e3 / fine_structure_splitting(&self.atom)?)
    }

    pub fn beat_frequency(&self) -> Result<f64> {
        fine_structure_splitting(&self.atom)
    }
}

/// Final excited amplitudes freely evolved (carrier frame) to time `t`.
pub fn state_at(tr: &AmplitudeTrajectory, atom: &AtomSpec, t: f64) -> FinalState {
    let s = tr.final_state();
    let dt = t - tr.final_time();
    let evolve = |b: C64, lvl: usize| b * C64::from_polar(1.0, -(atom.excited[lvl].omega() - tr.frame.carrier) * dt);
    FinalState::new(evolve(s[1], 0), evolve(s[2], 1), t)
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Config(format!("{name} axis is empty")));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

/// Parabolic vertex through three points.
fn vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv == 0.0 {
        return x[1];
    }
    0.5 * (x[0] + x[1]) - d1 / (2.0 * curv)
}

/// Location of the first local maximum of `y(x)`, refined parabolically.
pub fn first_maximum(x: &[f64], y: &[f64]) -> Option<f64> {
    (1..y.len().saturating_sub(1))
        .find(|&k| y[k] >= y[k - 1] && y[k] > y[k + 1])
        .map(|k| vertex([x[k - 1], x[k], x[k + 1]], [y[k - 1], y[k], y[k + 1]]))
}

/// Least-squares `s` in `P(A) = sin²(s·A/2)`, searched over [0.5, 1.5].
pub fn fit_area_scale(areas: &[f64], pops: &[f64]) -> f64 {
    let sse = |s: f64| -> f64 {
        areas.iter().zip(pops).map(|(a, p)| ((0.5 * s * a).sin().powi(2) - p).powi(2)).sum()
    };
    let n = 401;
    let mut best = (1.0, f64::INFINITY);
    for k in 0..n {
        let s = 0.5 + k as f64 / (n - 1) as f64;
        let e = sse(s);
        if e < best.1 {
            best = (s, e);
        }
    }
    let (mut a, mut b) = (best.0 - 2.5e-3, best.0 + 2.5e-3);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if sse(c) < sse(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSweep {
    pub line: Line,
    pub chirp: f64,
    pub areas: Vec<f64>,
    /// Population of the addressed level per area.
    pub target_population: Vec<f64>,
    /// `[ground, level 1, level 2, …]` per area.
    pub populations: Vec<Vec<f64>>,
    pub first_maximum: Option<f64>,
    /// `s` of the best `sin²(s·A/2)` fit.
    pub fit_scale: f64,
    /// min / max of the target population over areas ≥ 1.2π.
    pub plateau_min: Option<f64>,
    pub plateau_max: Option<f64>,
}

fn line_sweep(setup: &ExperimentSetup, line: Line, chirp: f64, areas: &[f64]) -> Result<LineSweep> {
    setup.validate()?;
    check_axis("area", areas)?;
    if chirp < 0.0 {
        return Err(Error::Config("chirp must be non-negative".into()));
    }
    let lvl = line.level();
    let shape = setup.shape(vec![setup.window(lvl).with_chirp(chirp)]);
    let prep = setup.prepare(&shape)?;
    let populations = areas
        .par_iter()
        .map(|&a| setup.propagate_area(&prep, a).map(|tr| tr.final_populations()))
        .collect::<Result<Vec<_>>>()?;
    let target: Vec<f64> = populations.iter().map(|p| p[lvl + 1]).collect();
    let plateau: Vec<f64> = areas
        .iter()
        .zip(&target)
        .filter(|(a, _)| **a >= 1.2 * PI - 1e-12)
        .map(|(_, p)| *p)
        .collect();
    Ok(LineSweep {
        line,
        chirp,
        areas: areas.to_vec(),
        first_maximum: first_maximum(areas, &target),
        fit_scale: fit_area_scale(areas, &target),
        plateau_min: plateau.iter().cloned().reduce(f64::min),
        plateau_max: plateau.iter().cloned().reduce(f64::max),
        target_population: target,
        populations,
    })
}

/// Flat-phase single-window sweep: Rabi oscillations on one line.
pub fn run_rabi_calibration(setup: &ExperimentSetup, line: Line, areas: &[f64]) -> Result<LineSweep> {
    line_sweep(setup, line, 0.0, areas)
}

/// Chirped single-window sweep: adiabatic passage on one line.
pub fn run_single_line_ap(
    setup: &ExperimentSetup,
    line: Line,
    chirp: f64,
    areas: &[f64],
) -> Result<LineSweep> {
    line_sweep(setup, line, chirp, areas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub shape: ShapeSpec,
    /// Effective-area axis, rad.
    pub areas: Vec<f64>,
    /// Pump–probe delays, fs on the pump clock. `None`: 0.5–4.5 ps after the
    /// end of the pump in 10 fs steps.
    pub delays: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan2DResult {
    pub areas: Vec<f64>,
    pub delays: Vec<f64>,
    /// `signal[area][delay]`
    pub signal: Vec<Vec<f64>>,
    /// `[ground, level 1, level 2]` per area.
    pub populations: Vec<Vec<f64>>,
    /// arg{b₁*b₂d₁₂} at the end of the pump, per area.
    pub relative_phase: Vec<f64>,
    pub beats: Vec<BeatAnalysis>,
    /// End of the pump (start of free evolution), fs.
    pub t_ref: f64,
}

/// Default delay axis: `t_end + 0.5 ps ..= t_end + 4.5 ps`, 10 fs steps.
pub fn default_delays(t_end: f64) -> Vec<f64> {
    (0..=400).map(|k| t_end + 500.0 + 10.0 * k as f64).collect()
}

pub fn run_scan_2d(setup: &ExperimentSetup, spec: &ScanSpec) -> Result<Scan2DResult> {
    setup.validate()?;
    check_axis("area", &spec.areas)?;
    let prep = setup.prepare(&spec.shape)?;
    let freq = setup.beat_frequency()?;
    let rows = spec
        .areas
        .par_iter()
        .map(|&a| setup.propagate_area(&prep, a))
        .collect::<Result<Vec<_>>>()?;
    let t_ref = rows.iter().map(|tr| tr.final_time()).fold(f64::MIN, f64::max);
    let delays = match &spec.delays {
        Some(d) => d.clone(),
        None => default_delays(t_ref),
    };
    check_axis("delay", &delays)?;
    if delays[0] < t_ref {
        return Err(Error::Config(format!(
            "delay axis starts at {} fs, before the pump ends at {t_ref:.1} fs",
            delays[0]
        )));
    }
    let mut signal = Vec::with_capacity(rows.len());
    let mut populations = Vec::with_capacity(rows.len());
    let mut relative_phase = Vec::with_capacity(rows.len());
    let mut beats = Vec::with_capacity(rows.len());
    for tr in &rows {
        let st = state_at(tr, &setup.atom, t_ref);
        let trace = trace_on(&st, &setup.atom, &delays)?;
        beats.push(analyze_beat(&trace, freq)?);
        signal.push(trace.signal);
        populations.push(tr.final_populations());
        relative_phase.push(st.relative_phase(&setup.atom));
    }
    Ok(Scan2DResult { areas: spec.areas.clone(), delays, signal, populations, relative_phase, beats, t_ref })
}

/// Beat trace on an explicit uniform delay axis.
fn trace_on(state: &FinalState, atom: &AtomSpec, delays: &[f64]) -> Result<BeatTrace> {
    let n = delays.len();
    if n < 2 {
        return Err(Error::Config("delay axis needs at least two points".into()));
    }
    beat_trace(state, atom, delays[0], delays[n - 1], n)
}

/// D2 pulse first, D1 pulse `delay` fs later.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletenessSpec {
    /// fs
    pub delay: f64,
    /// fs², D2 window
    pub first_chirp: f64,
    /// fs², D1 window
    pub second_chirp: f64,
    /// Individual area of the D2 pulse, rad.
    pub first_area: f64,
    /// Individual area of the D1 pulse, rad.
    pub second_area: f64,
}

impl Default for CompletenessSpec {
    fn default() -> Self {
        Self { delay: 8000.0, first_chirp: AP_CHIRP, second_chirp: AP_CHIRP, first_area: PI, second_area: PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub spec: CompletenessSpec,
    /// Final populations `[ground, 4P1/2, 4P3/2]`.
    pub populations: Vec<f64>,
    /// Final population of the level addressed by the second pulse.
    pub residual: f64,
    pub before: BeatTrace,
    pub after: BeatTrace,
    pub before_spectrum: Vec<(f64, f64)>,
    pub after_spectrum: Vec<(f64, f64)>,
    /// Beat-frequency peak power of an equal superposition sampled on the
    /// "after" delay axis.
    pub reference_peak: f64,
    pub before_peak: f64,
    pub after_peak: f64,
}

/// Times where the window's unit-scale envelope exceeds 1% of its peak.
fn pulse_extent(setup: &ExperimentSetup, win: &WindowSpec) -> Result<(f64, f64)> {
    let shape = ShapeSpec { windows: vec![win.clone()], ..setup.shape(vec![]) };
    let f = synthesize(&shape_field(&setup.source()?, &shape)?, setup.carrier)?;
    let (a, b) = f
        .refined_support(1e-2, 1.0, 2)
        .and_then(|r| r.support(1e-2).map(|(i, j)| (r.time(i), r.time(j))))
        .ok_or_else(|| Error::Config("empty pulse".into()))?;
    Ok((a, b))
}

/// Ion signal at pump–probe delay `tau` given the trajectory (frozen-probe
/// readout of the instantaneous state, free evolution after the last
/// sample).
pub fn signal_along(tr: &AmplitudeTrajectory, atom: &AtomSpec, tau: f64) -> f64 {
    let k = match tr.times.binary_search_by(|t| t.partial_cmp(&tau).unwrap()) {
        Ok(k) => k,
        Err(0) => 0,
        Err(k) => k - 1,
    };
    let st = FinalState::new(tr.b_excited[0][k], tr.b_excited[1][k], tr.times[k]);
    ion_signal(&st, atom, tau)
}

/// Two sequential pulses, each with its own window, chirp and area; one
/// propagation over the whole two-pulse field.
pub fn run_completeness(setup: &ExperimentSetup, spec: &CompletenessSpec) -> Result<CompletenessReport> {
    setup.validate()?;
    let CompletenessSpec { delay, first_chirp, second_chirp, first_area, second_area } = *spec;
    if !(delay > 0.0) {
        return Err(Error::Config("completeness delay must be positive".into()));
    }
    if first_chirp < 0.0 || second_chirp < 0.0 || first_area < 0.0 || second_area < 0.0 {
        return Err(Error::Config("completeness chirps and areas must be non-negative".into()));
    }
    let first = setup.window(Line::D2.level()).with_chirp(first_chirp);
    let second = setup.window(Line::D1.level()).with_chirp(second_chirp).with_delay(delay);
    let source = setup.source()?;

    // window amplitudes that give each line its own area at unit scale
    let probe = setup.shape(vec![second.clone(), first.clone()]);
    let unit = unit_areas(&probe, &source, &setup.atom)?;
    let (u1, u2) = (unit[Line::D1.level()], unit[Line::D2.level()]);
    if !(u1 > 0.0 && u2 > 0.0) {
        return Err(Error::Domain("zero unit area in completeness windows".into()));
    }
    let a2 = first_area / u2;
    let a1 = second_area / u1;
    let mut windows = Vec::new();
    if a1 > 0.0 {
        windows.push(second.clone().with_amplitude(a1));
    }
    if a2 > 0.0 {
        windows.push(first.clone().with_amplitude(a2));
    }
    if windows.is_empty() {
        return Err(Error::Config("both completeness pulses have zero area".into()));
    }
    let shape = setup.shape(windows);
    let prep = setup.prepare(&shape)?;
    let tr = setup.propagate_scaled(&prep, 1.0)?;
    let pops = tr.final_populations();

    let (_, first_end) = pulse_extent(setup, &first)?;
    let (second_start, second_end) = pulse_extent(setup, &second)?;
    let step = 10.0;
    let axis = |a: f64, b: f64| -> Vec<f64> {
        let n = ((b - a) / step).floor() as usize + 1;
        (0..n).map(|k| a + step * k as f64).collect()
    };
    let before_axis = axis(first_end, second_start);
    let after_axis = axis(second_end, second_end + 6000.0);
    let mk = |d: Vec<f64>| {
        let signal = d.iter().map(|&t| signal_along(&tr, &setup.atom, t)).collect();
        BeatTrace { t_ref: d[0], ..BeatTrace::from_samples(d, signal) }
    };
    let before = mk(before_axis);
    let after = mk(after_axis.clone());
    let before_spectrum = trace_power_spectrum(&before)?;
    let after_spectrum = trace_power_spectrum(&after)?;

    let freq = setup.beat_frequency()?;
    let tol = 0.1 * freq;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ideal = FinalState::new(C64::new(h, 0.0), C64::new(h, 0.0), after_axis[0]);
    let reference = trace_on(&ideal, &setup.atom, &after_axis)?;
    let reference_peak = peak_power_near(&trace_power_spectrum(&reference)?, freq, tol);

    Ok(CompletenessReport {
        spec: *spec,
        residual: pops[Line::D1.level() + 1],
        populations: pops,
        before_peak: peak_power_near(&before_spectrum, freq, tol),
        after_peak: peak_power_near(&after_spectrum, freq, tol),
        before,
        after,
        before_spectrum,
        after_spectrum,
        reference_peak,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseControlPoint {
    pub offset: f64,
    pub populations: Vec<f64>,
    pub beat: BeatAnalysis,
    /// Displacement of the beat pattern relative to the first offset, rad,
    /// wrapped to (−π, π].
    pub beat_shift: f64,
    /// Change of φ₁₂ relative to the first offset, rad, wrapped.
    pub phi12_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseControlReport {
    pub line: Line,
    pub area: f64,
    pub chirp: f64,
    pub points: Vec<PhaseControlPoint>,
}

/// Adds each constant phase in `offsets` to the window of `line` on a chirped
/// double-window pulse of effective area `area` and reads the beat phase.
/// Shifts are reported relative to the first offset.
pub fn run_phase_control(
    setup: &ExperimentSetup,
    offsets: &[f64],
    line: Line,
    area: f64,
) -> Result<PhaseControlReport> {
    setup.validate()?;
    if offsets.is_empty() {
        return Err(Error::Config("phase control needs at least one offset".into()));
    }
    let freq = setup.beat_frequency()?;
    let runs = offsets
        .par_iter()
        .map(|&theta| {
            let mut shape = setup.double_window(setup.chirp);
            shape.windows[line.level()].phase_offset = theta;
            let prep = setup.prepare(&shape)?;
            setup.propagate_area(&prep, area)
        })
        .collect::<Result<Vec<_>>>()?;
    // the integration window depends weakly on the offset; compare all
    // phases at one reference time
    let t_ref = runs.iter().map(|tr| tr.final_time()).fold(f64::MIN, f64::max);
    let delays = default_delays(t_ref);
    let results = offsets
        .iter()
        .zip(&runs)
        .map(|(&theta, tr)| {
            let st = state_at(tr, &setup.atom, t_ref);
            let beat = analyze_beat(&trace_on(&st, &setup.atom, &delays)?, freq)?;
            if !beat.has_beat() {
                return Err(Error::Control(format!("no beat at offset {theta}")));
            }
            Ok((tr.final_populations(), beat))
        })
        .collect::<Result<Vec<_>>>()?;
    let (osc0, phi0) = (results[0].1.oscillation_phase, results[0].1.phase);
    let points = offsets
        .iter()
        .zip(results)
        .map(|(&offset, (populations, beat))| PhaseControlPoint {
            offset,
            populations,
            beat_shift: wrap_phase(beat.oscillation_phase - osc0),
            phi12_shift: wrap_phase(beat.phase - phi0),
            beat,
        })
        .collect();
    Ok(PhaseControlReport { line, area, chirp: setup.chirp, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlIteration {
    /// D1 : D2 window amplitude ratio.
    pub ratio: f64,
    pub achieved_beta: f64,
    pub ground_residual: f64,
    pub populations: Vec<f64>,
    /// |achieved/target − 1|
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub target_beta: f64,
    pub window_fwhm: f64,
    pub iterations: Vec<ControlIteration>,
    pub converged: bool,
}

impl ControlReport {
    pub fn last(&self) -> &ControlIteration {
        self.iterations.last().unwrap()
    }
}

/// Relative error below which the control loop stops.
pub const CONTROL_TOLERANCE: f64 = 1e-3;

/// Adaptive amplitude control of β = |b₁|²/|b₂|² at A_eff = π.
///
/// Iteration 0 uses the Stark-free prediction `r₀ = √β/(d₁/d₂)`; each
/// correction multiplies the window ratio by `√(target/achieved)` and
/// re-normalizes the total area. `max_iterations` counts corrections.
pub fn run_amplitude_control(
    setup: &ExperimentSetup,
    target_beta: f64,
    max_iterations: usize,
    window_fwhm: f64,
) -> Result<ControlReport> {
    setup.validate()?;
    if !(target_beta > 0.0) || !target_beta.is_finite() {
        return Err(Error::Config(format!("target beta must be positive, got {target_beta}")));
    }
    let local = ExperimentSetup { window_fwhm, ..setup.clone() };
    let weights = (local.atom.excited[0].dipole_weight, local.atom.excited[1].dipole_weight);
    let mut ratio = target_beta.sqrt() / (weights.0 / weights.1);
    let mut iterations = Vec::new();
    let mut converged = false;
    for it in 0..=max_iterations {
        let mut shape = local.double_window(local.chirp);
        shape.windows[0].rel_amplitude = ratio;
        shape.windows[1].rel_amplitude = 1.0;
        let prep = local.prepare(&shape)?;
        let tr = local.propagate_area(&prep, PI)?;
        let pops = tr.final_populations();
        if !(pops[1] > 0.0 && pops[2] > 0.0) {
            return Err(Error::Control(format!(
                "iteration {it}: an excited level is empty (populations {pops:?})"
            )));
        }
        let beta = pops[1] / pops[2];
        let error = (beta / target_beta - 1.0).abs();
        iterations.push(ControlIteration {
            ratio,
            achieved_beta: beta,
            ground_residual: pops[0],
            populations: pops,
            error,
        });
        if error < CONTROL_TOLERANCE {
            converged = true;
            break;
        }
        ratio *= (target_beta / beta).sqrt();
    }
    Ok(ControlReport { target_beta, window_fwhm, iterations, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowbandPair {
    pub target_beta: f64,
    pub wide: ControlReport,
    pub narrow: ControlReport,
}

/// Iteration-0 amplitude control at 1.8 nm and 0.18 nm windows.
pub fn run_narrowband_comparison(
    setup: &ExperimentSetup,
    target_betas: &[f64],
    wide_fwhm: f64,
    narrow_fwhm: f64,
) -> Result<Vec<NarrowbandPair>> {
    target_betas
        .par_iter()
        .map(|&b| {
            Ok(NarrowbandPair {
                target_beta: b,
                wide: run_amplitude_control(setup, b, 0, wide_fwhm)?,
                narrow: run_amplitude_control(setup, b, 0, narrow_fwhm)?,
            })
        })
        .collect()
}
