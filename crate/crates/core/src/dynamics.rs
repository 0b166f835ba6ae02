//! Rotating-wave Schrödinger dynamics of a ground state coupled to N excited
//! levels by a shaped pulse, plus the closed-form oracles used to validate it.
//!
//! In the frame rotating at the carrier ω_c the amplitudes obey
//!
//! ```text
//! i db₀/dt = Σ_i (χ_i*(t)/2) b_i
//! i db_i/dt = Δ_i b_i + (χ_i(t)/2) b₀,     Δ_i = ω_i − ω_c
//! ```
//!
//! with `χ_i(t) = d_i · s · e(t)`: dipole weight times global scale times the
//! envelope. With cross-talk on, every level sees the full envelope, which is
//! what produces the dynamic Stark shifts between the channels. Integration is
//! classical fourth-order Runge–Kutta at a fixed step.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::atom::{angular_frequency, AtomSpec};
use crate::error::{Error, Result};
use crate::shaper::{apply_shape, synthesize, ShapeSpec, SpectralField, TemporalField};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default envelope level, relative to the peak, below which the field is
/// treated as off when choosing the integration interval.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;
/// Unitarity drift above which a propagation is rejected.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorParams {
    /// Upper bound on the RK4 step, fs.
    #[serde(default = "IntegratorParams::default_dt_max")]
    pub dt_max: f64,
    #[serde(default)]
    pub method: Method,
    /// Re-run at half the step and report the population change.
    #[serde(default)]
    pub convergence_check: bool,
    /// Spacing of the recorded trajectory samples, fs.
    #[serde(default = "IntegratorParams::default_sample_interval")]
    pub sample_interval: f64,
    /// Integration starts and ends where |envelope| crosses this fraction of
    /// its peak.
    #[serde(default = "IntegratorParams::default_support_threshold")]
    pub support_threshold: f64,
}

impl Default for IntegratorParams {
    fn default() -> Self {
        Self {
            dt_max: Self::default_dt_max(),
            method: Method::Rk4,
            convergence_check: false,
            sample_interval: Self::default_sample_interval(),
            support_threshold: SUPPORT_THRESHOLD,
        }
    }
}

impl IntegratorParams {
    fn default_dt_max() -> f64 {
        0.25
    }

    fn default_sample_interval() -> f64 {
        1.0
    }

    fn default_support_threshold() -> f64 {
        SUPPORT_THRESHOLD
    }

    pub fn with_dt_max(mut self, dt: f64) -> Self {
        self.dt_max = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max <= 0.5) {
            return Err(Error::IntegratorParams(format!(
                "dt_max must lie in (0, 0.5] fs, got {}",
                self.dt_max
            )));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::IntegratorParams("sample_interval must be positive".into()));
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return Err(Error::IntegratorParams(format!(
                "support_threshold must lie in (0, 1), got {}",
                self.support_threshold
            )));
        }
        Ok(())
    }

    fn check_rates(&self, max_detuning: f64, max_rabi: f64) -> Result<()> {
        if self.dt_max * max_detuning > 0.1 {
            return Err(Error::IntegratorParams(format!(
                "dt_max·max|Δ| = {:.3} rad exceeds 0.1",
                self.dt_max * max_detuning
            )));
        }
        if self.dt_max * max_rabi > 0.1 {
            return Err(Error::IntegratorParams(format!(
                "dt_max·max|Ω| = {:.3} rad exceeds 0.1",
                self.dt_max * max_rabi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// rad/fs
    pub carrier: f64,
    pub convention: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub b0: Vec<C64>,
    /// `b_excited[i][k]`: level `i` at sample `k`.
    pub b_excited: Vec<Vec<C64>>,
    pub frame: Frame,
    /// Largest |Σ|b|² − 1| seen over all steps.
    pub max_norm_drift: f64,
    /// RK4 step actually used, fs.
    pub step: f64,
}

impl AmplitudeTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `[b₀, b₁, …]` at the last sample.
    pub fn final_state(&self) -> Vec<C64> {
        let k = self.len() - 1;
        std::iter::once(self.b0[k]).chain(self.b_excited.iter().map(|b| b[k])).collect()
    }

    /// `[|b₀|², |b₁|², …]` at the last sample.
    pub fn final_populations(&self) -> Vec<f64> {
        self.final_state().iter().map(|b| b.norm_sqr()).collect()
    }

    pub fn populations_at(&self, k: usize) -> Vec<f64> {
        std::iter::once(self.b0[k].norm_sqr())
            .chain(self.b_excited.iter().map(|b| b[k].norm_sqr()))
            .collect()
    }
}

/// What drives each transition.
#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    /// The full envelope drives every level (Stark cross-talk included).
    Shared(&'a TemporalField),
    /// Level `i` is driven only by `fields[i]` (`None`: undriven). All fields
    /// must share one time grid and carrier.
    PerLevel(&'a [Option<TemporalField>]),
}

impl<'a> Drive<'a> {
    fn fields(&self) -> Vec<&'a TemporalField> {
        match *self {
            Drive::Shared(f) => vec![f],
            Drive::PerLevel(fs) => fs.iter().flatten().collect(),
        }
    }
}

/// Per-level coupling samples `χ_i` on a grid of half RK4 steps.
struct Couplings {
    t0: f64,
    half_dt: f64,
    chi: Vec<Vec<C64>>,
}

impl Couplings {
    fn n_steps(&self) -> usize {
        (self.chi[0].len() - 1) / 2
    }
}

fn build_couplings(
    drive: Drive<'_>,
    atom: &AtomSpec,
    dt_max: f64,
    threshold: f64,
) -> Result<Option<Couplings>> {
    let fields = drive.fields();
    if let Drive::PerLevel(fs) = drive {
        if fs.len() != atom.n_levels() {
            return Err(Error::Config(format!(
                "{} per-level fields for {} levels",
                fs.len(),
                atom.n_levels()
            )));
        }
    }
    let Some(first) = fields.first() else {
        return Ok(None);
    };
    for f in &fields {
        if f.len() != first.len() || f.dt != first.dt || f.t_start != first.t_start {
            return Err(Error::Config("per-level fields must share one time grid".into()));
        }
    }
    // union of the supports
    let mut range: Option<(usize, usize)> = None;
    for f in &fields {
        if f.amplitude_scale == 0.0 {
            continue;
        }
        if let Some((a, b)) = f.support(threshold) {
            range = Some(match range {
                Some((ra, rb)) => (ra.min(a), rb.max(b)),
                None => (a, b),
            });
        }
    }
    let Some((a, b)) = range else {
        return Ok(None);
    };
    const PAD: usize = 8;
    let a = a.saturating_sub(PAD);
    let b = (b + PAD).min(first.len() - 1);
    let factor = (first.dt / (0.5 * dt_max)).ceil().max(1.0) as usize;

    let refine = |f: &TemporalField| -> Vec<C64> {
        let r = f.refine(a, b, factor);
        r.envelope.iter().map(|e| e * f.amplitude_scale).collect()
    };
    let mut chi = match drive {
        Drive::Shared(f) => {
            let e = refine(f);
            atom.excited.iter().map(|l| e.iter().map(|x| x * l.dipole_weight).collect()).collect()
        }
        Drive::PerLevel(fs) => {
            let len = (b - a) * factor + 1;
            fs.iter()
                .zip(&atom.excited)
                .map(|(f, l)| match f {
                    Some(f) => refine(f).iter().map(|x| x * l.dipole_weight).collect(),
                    None => vec![C64::new(0.0, 0.0); len],
                })
                .collect::<Vec<Vec<C64>>>()
        }
    };
    // an odd number of samples makes every RK4 stage land on a sample
    if chi[0].len() % 2 == 0 {
        chi.iter_mut().for_each(|c| {
            c.pop();
        });
    }
    Ok(Some(Couplings { t0: first.time(a), half_dt: first.dt / factor as f64, chi }))
}

#[inline]
fn rhs(y: &[C64], chi: &[C64], delta: &[f64], out: &mut [C64]) {
    let mut d0 = C64::new(0.0, 0.0);
    for i in 0..delta.len() {
        d0 += chi[i].conj() * 0.5 * y[i + 1];
        out[i + 1] = -I * (delta[i] * y[i + 1] + chi[i] * 0.5 * y[0]);
    }
    out[0] = -I * d0;
}

/// Integrates the RWA equations from `initial` (default: all population in
/// the ground state).
pub fn propagate_with(
    drive: Drive<'_>,
    atom: &AtomSpec,
    params: &IntegratorParams,
    initial: Option<&[C64]>,
) -> Result<AmplitudeTrajectory> {
    params.validate()?;
    let n = atom.n_levels();
    let fields = drive.fields();
    let carrier = fields.first().map(|f| f.carrier).unwrap_or(0.0);
    if fields.iter().any(|f| f.carrier != carrier) {
        return Err(Error::Config("per-level fields must share one carrier".into()));
    }
    let delta: Vec<f64> = atom.excited.iter().map(|l| l.omega() - carrier).collect();

    let mut y: Vec<C64> = match initial {
        Some(s) => {
            if s.len() != n + 1 {
                return Err(Error::Config(format!(
                    "initial state has {} amplitudes, expected {}",
                    s.len(),
                    n + 1
                )));
            }
            s.to_vec()
        }
        None => {
            let mut v = vec![C64::new(0.0, 0.0); n + 1];
            v[0] = C64::new(1.0, 0.0);
            v
        }
    };
    let frame = Frame {
        carrier,
        convention: "rotating at carrier; i db0/dt = sum_i conj(chi_i)/2 b_i; \
                     i db_i/dt = delta_i b_i + chi_i/2 b0"
            .into(),
    };

    let max_detuning = delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let max_rabi = fields
        .iter()
        .map(|f| f.peak() * f.amplitude_scale.abs())
        .fold(0.0, f64::max)
        * atom.excited.iter().map(|l| l.dipole_weight).fold(0.0, f64::max);
    params.check_rates(max_detuning, max_rabi)?;

    let Some(c) = build_couplings(drive, atom, params.dt_max, params.support_threshold)? else {
        // no field at all: the state is frozen up to the free evolution phase,
        // which we report over the field's time window
        let (t0, t1) = fields
            .first()
            .map(|f| (f.t_start, f.t_end()))
            .unwrap_or((0.0, 0.0));
        let y1: Vec<C64> = std::iter::once(y[0])
            .chain((0..n).map(|i| y[i + 1] * C64::from_polar(1.0, -delta[i] * (t1 - t0))))
            .collect();
        return Ok(AmplitudeTrajectory {
            times: vec![t0, t1],
            b0: vec![y[0], y1[0]],
            b_excited: (0..n).map(|i| vec![y[i + 1], y1[i + 1]]).collect(),
            frame,
            max_norm_drift: 0.0,
            step: 0.0,
        });
    };

    let h = 2.0 * c.half_dt;
    let steps = c.n_steps();
    let stride = ((params.sample_interval / h).round() as usize).max(1);
    let norm0: f64 = y.iter().map(|b| b.norm_sqr()).sum();

    let cap = steps / stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut b0 = Vec::with_capacity(cap);
    let mut bx: Vec<Vec<C64>> = (0..n).map(|_| Vec::with_capacity(cap)).collect();
    let mut record = |t: f64, y: &[C64]| {
        times.push(t);
        b0.push(y[0]);
        for i in 0..n {
            bx[i].push(y[i + 1]);
        }
    };
    record(c.t0, &y);

    let m = n + 1;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![C64::default(); m], vec![C64::default(); m], vec![C64::default(); m], vec![C64::default(); m], vec![C64::default(); m]);
    let mut chi_a = vec![C64::default(); n];
    let mut chi_b = vec![C64::default(); n];
    let mut chi_c = vec![C64::default(); n];
    let mut max_drift = 0.0f64;

    for s in 0..steps {
        for i in 0..n {
            chi_a[i] = c.chi[i][2 * s];
            chi_b[i] = c.chi[i][2 * s + 1];
            chi_c[i] = c.chi[i][2 * s + 2];
        }
        rhs(&y, &chi_a, &delta, &mut k1);
        for j in 0..m {
            tmp[j] = y[j] + k1[j] * (0.5 * h);
        }
        rhs(&tmp, &chi_b, &delta, &mut k2);
        for j in 0..m {
            tmp[j] = y[j] + k2[j] * (0.5 * h);
        }
        rhs(&tmp, &chi_b, &delta, &mut k3);
        for j in 0..m {
            tmp[j] = y[j] + k3[j] * h;
        }
        rhs(&tmp, &chi_c, &delta, &mut k4);
        for j in 0..m {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
        let norm: f64 = y.iter().map(|b| b.norm_sqr()).sum();
        max_drift = max_drift.max((norm - norm0).abs());
        if (s + 1) % stride == 0 || s + 1 == steps {
            record(c.t0 + (s + 1) as f64 * h, &y);
        }
    }
    if max_drift > MAX_NORM_DRIFT {
        return Err(Error::Integrator { drift: max_drift, limit: MAX_NORM_DRIFT });
    }
    Ok(AmplitudeTrajectory { times, b0, b_excited: bx, frame, max_norm_drift: max_drift, step: h })
}

/// Cross-talk propagation from the ground state.
pub fn propagate(
    field: &TemporalField,
    atom: &AtomSpec,
    params: &IntegratorParams,
) -> Result<AmplitudeTrajectory> {
    propagate_with(Drive::Shared(field), atom, params, None)
}

/// Max over levels of the change in final population between runs at
/// `dt_max` and `dt_max / 2`.
pub fn convergence_report(
    field: &TemporalField,
    atom: &AtomSpec,
    params: &IntegratorParams,
) -> Result<f64> {
    convergence_report_with(Drive::Shared(field), atom, params)
}

pub fn convergence_report_with(
    drive: Drive<'_>,
    atom: &AtomSpec,
    params: &IntegratorParams,
) -> Result<f64> {
    params.validate()?;
    let coarse = propagate_with(drive, atom, params, None)?;
    let half = params.clone().with_dt_max(params.dt_max / 2.0);
    let fine = propagate_with(drive, atom, &half, None)?;
    Ok(coarse
        .final_populations()
        .iter()
        .zip(fine.final_populations())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Resonant two-level excited population after a pulse of area `area`:
/// `sin²(A/2)`.
pub fn analytic_rabi(area: f64) -> f64 {
    (0.5 * area).sin().powi(2)
}

/// Landau–Zener transfer probability for `H = ½[[−βt, Ω], [Ω, βt]]`.
pub fn landau_zener(rabi: f64, sweep_rate: f64) -> Result<f64> {
    if !(sweep_rate > 0.0) {
        return Err(Error::Domain(format!("sweep rate must be positive, got {sweep_rate}")));
    }
    if !(rabi >= 0.0) {
        return Err(Error::Domain(format!("Rabi frequency must be non-negative, got {rabi}")));
    }
    Ok(1.0 - (-PI * rabi * rabi / (2.0 * sweep_rate)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    /// Per excited level, rad.
    pub areas: Vec<f64>,
    /// `sqrt(Σ A_i²)`, rad.
    pub effective: f64,
}

impl AreaReport {
    pub fn from_areas(areas: Vec<f64>) -> Self {
        let effective = areas.iter().map(|a| a * a).sum::<f64>().sqrt();
        Self { areas, effective }
    }
}

/// Window index driving each excited level (nearest resonance), `None` for
/// levels no window is tuned to.
pub fn assign_windows(shape: &ShapeSpec, atom: &AtomSpec) -> Result<Vec<Option<usize>>> {
    let mut out = vec![None; atom.n_levels()];
    for (k, w) in shape.windows.iter().enumerate() {
        let lvl = atom.nearest_level(angular_frequency(w.center_wavelength)?);
        if let Some(prev) = out[lvl] {
            return Err(Error::Config(format!(
                "windows[{prev}] and windows[{k}] are both nearest to level {}",
                atom.excited[lvl].label
            )));
        }
        out[lvl] = Some(k);
    }
    Ok(out)
}

/// Envelope of window `k` of `shape` alone, chirp, phase offset and delay
/// removed, referenced to the window center.
fn unshaped_window_field(shape: &ShapeSpec, k: usize, source: &SpectralField) -> Result<TemporalField> {
    let single = ShapeSpec {
        windows: vec![shape.windows[k].unshaped()],
        pixel_width: None,
        width_convention: shape.width_convention,
    };
    let spec = apply_shape(source, &single)?;
    synthesize(&spec, angular_frequency(shape.windows[k].center_wavelength)?)
}

/// `∫|e(t)|dt` of a band-limited envelope, evaluated on a ≤ 2 fs grid.
fn abs_integral(field: &TemporalField) -> f64 {
    match field.refined_support(1e-12, 2.0, 8) {
        Some(f) => f.envelope.iter().map(|e| e.norm()).sum::<f64>() * f.dt,
        None => 0.0,
    }
}

/// Per-level areas at unit amplitude scale. Areas are taken from the
/// unchirped windows, so chirp does not change the reported area.
pub fn unit_areas(shape: &ShapeSpec, source: &SpectralField, atom: &AtomSpec) -> Result<Vec<f64>> {
    shape.validate()?;
    let assign = assign_windows(shape, atom)?;
    assign
        .iter()
        .zip(&atom.excited)
        .map(|(w, lvl)| match w {
            Some(k) if shape.windows[*k].rel_amplitude > 0.0 => {
                let f = unshaped_window_field(shape, *k, source)?;
                Ok(lvl.dipole_weight * abs_integral(&f))
            }
            _ => Ok(0.0),
        })
        .collect()
}

/// Pulse areas `A_i = ∫|Ω_i(t)|dt`, `Ω_i = d_i · s · |e_i(t)|`, with `e_i` the
/// envelope of the window tuned to level `i` alone.
pub fn pulse_areas(
    shape: &ShapeSpec,
    source: &SpectralField,
    atom: &AtomSpec,
    amplitude_scale: f64,
) -> Result<AreaReport> {
    let unit = unit_areas(shape, source, atom)?;
    Ok(AreaReport::from_areas(unit.iter().map(|a| a * amplitude_scale.abs()).collect()))
}

/// Amplitude scale giving an effective area of `target` rad.
pub fn calibrate_scale_for_area(
    shape: &ShapeSpec,
    source: &SpectralField,
    atom: &AtomSpec,
    target: f64,
) -> Result<f64> {
    let unit = AreaReport::from_areas(unit_areas(shape, source, atom)?);
    scale_for_area(&unit, target)
}

/// `target / A_eff(scale = 1)`.
pub fn scale_for_area(unit: &AreaReport, target: f64) -> Result<f64> {
    if !(target >= 0.0) {
        return Err(Error::Domain(format!("target area must be non-negative, got {target}")));
    }
    if !(unit.effective > 0.0) {
        return Err(Error::Domain("shape has zero pulse area; cannot calibrate".into()));
    }
    Ok(target / unit.effective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{default_potassium, LevelSpec, ProbeSpec};
    use approx::assert_relative_eq;

    fn two_level(lambda: f64) -> AtomSpec {
        AtomSpec {
            ground_label: "g".into(),
            excited: vec![LevelSpec::new("e", lambda, 1.0)],
            probe: ProbeSpec::default(),
        }
    }

    /// Gaussian envelope of unit peak sampled on a fine grid; returns the
    /// field and its exact area ∫|e| dt.
    fn gaussian_field(sigma: f64, dt: f64, carrier: f64) -> (TemporalField, f64) {
        let half = (12.0 * sigma / dt).ceil() as i64;
        let env = (-half..=half)
            .map(|j| {
                let t = j as f64 * dt;
                C64::new((-t * t / (2.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        let area = sigma * (2.0 * PI).sqrt();
        (TemporalField::from_samples(-(half as f64) * dt, dt, env, carrier), area)
    }

    #[test]
    fn analytic_rabi_values() {
        assert_relative_eq!(analytic_rabi(PI), 1.0, epsilon = 1e-15);
        assert_eq!(analytic_rabi(0.0), 0.0);
        assert_relative_eq!(analytic_rabi(PI / 2.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn landau_zener_values() {
        assert_eq!(landau_zener(0.0, 1.0).unwrap(), 0.0);
        let beta: f64 = 3e-4;
        let p = landau_zener((2.0 * beta).sqrt(), beta).unwrap();
        assert_relative_eq!(p, 1.0 - (-PI).exp(), epsilon = 1e-12);
        assert_relative_eq!(p, 0.9568, epsilon = 1e-4);
        assert!(landau_zener((20.0 * beta).sqrt(), beta).unwrap() >= 0.999999);
        assert!(landau_zener(1.0, 0.0).is_err());
        assert!(landau_zener(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_field_keeps_ground_state() {
        let atom = default_potassium();
        let f = TemporalField::from_samples(0.0, 0.1, vec![C64::default(); 100], 2.45);
        let tr = propagate(&f, &atom, &IntegratorParams::default()).unwrap();
        let p = tr.final_populations();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|x| *x == 0.0));
        assert_eq!(convergence_report(&f, &atom, &IntegratorParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn resonant_rabi_matches_closed_form() {
        let lambda = 768.2;
        let carrier = angular_frequency(lambda).unwrap();
        let atom = two_level(lambda);
        let (unit, area1) = gaussian_field(200.0, 0.125, carrier);
        for area in [0.3, PI / 2.0, PI, 2.5, 2.0 * PI, 3.0 * PI] {
            let f = unit.clone().with_scale(area / area1);
            let tr = propagate(&f, &atom, &IntegratorParams::default()).unwrap();
            let p1 = tr.final_populations()[1];
            assert!((p1 - analytic_rabi(area)).abs() < 1e-6, "A={area}: {p1}");
            assert!(tr.max_norm_drift < 1e-9);
        }
    }

    #[test]
    fn coarse_step_rejected() {
        let atom = default_potassium();
        let f = TemporalField::from_samples(0.0, 0.1, vec![C64::new(1e-3, 0.0); 100], 2.45);
        let p = IntegratorParams::default().with_dt_max(1.0);
        assert!(matches!(propagate(&f, &atom, &p), Err(Error::IntegratorParams(_))));
        assert!(matches!(convergence_report(&f, &atom, &p), Err(Error::IntegratorParams(_))));
        // strong field violates dt·Ω ≤ 0.1
        let f = TemporalField::from_samples(0.0, 0.1, vec![C64::new(1.0, 0.0); 100], 2.45);
        let p = IntegratorParams::default();
        assert!(matches!(propagate(&f, &atom, &p), Err(Error::IntegratorParams(_))));
    }

    #[test]
    fn area_report_identity() {
        let r = AreaReport::from_areas(vec![3.0, 4.0]);
        assert_eq!(r.effective, 5.0);
        assert!(scale_for_area(&AreaReport::from_areas(vec![0.0]), 1.0).is_err());
        assert_eq!(scale_for_area(&r, 0.0).unwrap(), 0.0);
    }
}
