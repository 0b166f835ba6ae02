//! Pump spectrum, 4f-shaper mask and synthesis of the complex temporal
//! envelope.
//!
//! Spectral profiles (source and windows) are Gaussians in wavelength, so a
//! quoted nm FWHM holds exactly at the half-maximum points. Spectral phases
//! (chirp, offset, delay) are polynomials in angular frequency.
//!
//! Envelope convention: the physical field is `E(t) = Re[s·e(t)·exp(-iω_c t)]`
//! with `e(t) = Δω/√(2π) · Σ_k A(ω_k) exp(-i(ω_k - ω_c) t)`, so a spectral phase
//! `(ω - ω_k)·T` delays the pulse by `+T` and spectral and temporal energies
//! agree (`Σ|A|²Δω = Σ|e|²dt`).

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::atom::{angular_frequency, wavelength_of};
use crate::error::{Error, Result};

/// Relative envelope level that must not be exceeded in the guard bands at
/// both ends of the time window.
pub const WRAP_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl SpectralGrid {
    pub const MIN_POINTS: usize = 1 << 12;

    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self> {
        if !(omega_min > 0.0) || !(omega_min < omega_max) || !omega_max.is_finite() {
            return Err(Error::Config(format!(
                "grid needs 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
            )));
        }
        if n_points < Self::MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid n_points must be a power of two >= {}, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { omega_min, omega_max, n_points })
    }

    /// Grid spanning `[lambda_min, lambda_max]` nm.
    pub fn from_wavelengths(lambda_min: f64, lambda_max: f64, n_points: usize) -> Result<Self> {
        if !(lambda_min < lambda_max) {
            return Err(Error::Config("grid needs lambda_min < lambda_max".into()));
        }
        Self::new(angular_frequency(lambda_max)?, angular_frequency(lambda_min)?, n_points)
    }

    /// 740–800 nm with 2¹⁵ points.
    pub fn default_grid() -> Self {
        Self::from_wavelengths(740.0, 800.0, 1 << 15).expect("default grid is valid")
    }

    pub fn span(&self) -> f64 {
        self.omega_max - self.omega_min
    }

    /// Δω, rad/fs.
    pub fn step(&self) -> f64 {
        self.span() / self.n_points as f64
    }

    pub fn omega(&self, k: usize) -> f64 {
        self.omega_min + k as f64 * self.step()
    }

    /// Length of the periodic time window, `2π/Δω`, fs.
    pub fn time_window(&self) -> f64 {
        2.0 * PI / self.step()
    }

    /// Temporal sampling step of synthesized envelopes, `2π/span`, fs.
    pub fn time_step(&self) -> f64 {
        2.0 * PI / self.span()
    }

    pub fn contains_omega(&self, omega: f64) -> bool {
        omega >= self.omega_min && omega <= self.omega_max
    }

    pub fn contains_wavelength(&self, lambda: f64) -> bool {
        angular_frequency(lambda).map(|w| self.contains_omega(w)).unwrap_or(false)
    }

    /// Wavelength spacing between the two bluest grid points, the narrowest
    /// bin in nm.
    pub fn min_wavelength_bin(&self) -> f64 {
        let n = self.n_points;
        let hi = wavelength_of(self.omega(n - 2)).unwrap();
        let lo = wavelength_of(self.omega(n - 1)).unwrap();
        hi - lo
    }

    fn check_window(&self, center: f64, fwhm: f64, what: &str) -> Result<()> {
        let lo = center - 2.0 * fwhm;
        let hi = center + 2.0 * fwhm;
        if !(lo > 0.0) || !self.contains_wavelength(lo) || !self.contains_wavelength(hi) {
            return Err(Error::Config(format!(
                "{what} [{lo:.3}, {hi:.3}] nm lies outside the spectral grid"
            )));
        }
        Ok(())
    }
}

/// Whether a quoted FWHM refers to intensity (|A|²) or field amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthConvention {
    #[default]
    Intensity,
    Amplitude,
}

impl WidthConvention {
    /// Unit-peak Gaussian amplitude at offset `x` for a FWHM `w` in the same
    /// unit.
    fn gaussian(self, x: f64, w: f64) -> f64 {
        let k = match self {
            WidthConvention::Intensity => 2.0 * LN_2,
            WidthConvention::Amplitude => 4.0 * LN_2,
        };
        (-k * (x / w).powi(2)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: SpectralGrid,
    pub amplitude: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: SpectralGrid) -> Self {
        Self { grid, amplitude: vec![C64::new(0.0, 0.0); grid.n_points] }
    }

    /// `Σ|A|²Δω`.
    pub fn energy(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.step()
    }

    /// Linear interpolation of the complex amplitude at a wavelength.
    pub fn amplitude_at_wavelength(&self, lambda: f64) -> Result<C64> {
        let w = angular_frequency(lambda)?;
        if !self.grid.contains_omega(w) {
            return Err(Error::Config(format!("{lambda} nm is outside the grid")));
        }
        let x = (w - self.grid.omega_min) / self.grid.step();
        let k = (x.floor() as usize).min(self.grid.n_points - 2);
        let f = x - k as f64;
        Ok(self.amplitude[k] * (1.0 - f) + self.amplitude[k + 1] * f)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, amplitude: self.amplitude.iter().map(|a| a * factor).collect() }
    }
}

fn default_rel_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// nm
    pub center_wavelength: f64,
    /// nm
    pub fwhm: f64,
    #[serde(default = "default_rel_amplitude")]
    pub rel_amplitude: f64,
    /// Quadratic spectral phase coefficient α, fs².
    #[serde(default)]
    pub chirp_alpha: f64,
    /// Constant spectral phase, rad.
    #[serde(default)]
    pub phase_offset: f64,
    /// Group delay of the window, fs.
    #[serde(default)]
    pub delay: f64,
}

impl WindowSpec {
    /// Flat-phase, undelayed window with unit relative amplitude.
    pub fn new(center_wavelength: f64, fwhm: f64) -> Self {
        Self {
            center_wavelength,
            fwhm,
            rel_amplitude: 1.0,
            chirp_alpha: 0.0,
            phase_offset: 0.0,
            delay: 0.0,
        }
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.rel_amplitude = a;
        self
    }

    pub fn with_chirp(mut self, alpha: f64) -> Self {
        self.chirp_alpha = alpha;
        self
    }

    pub fn with_phase(mut self, theta: f64) -> Self {
        self.phase_offset = theta;
        self
    }

    pub fn with_delay(mut self, t: f64) -> Self {
        self.delay = t;
        self
    }

    /// Same window with chirp, phase offset and delay removed.
    pub fn unshaped(&self) -> Self {
        Self { chirp_alpha: 0.0, phase_offset: 0.0, delay: 0.0, ..self.clone() }
    }

    /// Complex transmission at angular frequency `omega`.
    pub fn mask(&self, omega: f64, convention: WidthConvention) -> C64 {
        let lambda = wavelength_of(omega).unwrap();
        let g = convention.gaussian(lambda - self.center_wavelength, self.fwhm);
        let dw = omega - angular_frequency(self.center_wavelength).unwrap();
        let phase = 0.5 * self.chirp_alpha * dw * dw + self.phase_offset + dw * self.delay;
        C64::from_polar(self.rel_amplitude * g, phase)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub windows: Vec<WindowSpec>,
    /// SLM pixel width, nm.
    #[serde(default)]
    pub pixel_width: Option<f64>,
    #[serde(default)]
    pub width_convention: WidthConvention,
}

impl ShapeSpec {
    pub fn new(windows: Vec<WindowSpec>) -> Self {
        Self { windows, pixel_width: None, width_convention: WidthConvention::Intensity }
    }

    pub fn with_pixel_width(mut self, w: f64) -> Self {
        self.pixel_width = Some(w);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(Error::Config("shape needs at least one window".into()));
        }
        for (i, w) in self.windows.iter().enumerate() {
            if !(w.fwhm > 0.0) || !w.fwhm.is_finite() {
                return Err(Error::Config(format!("windows[{i}].fwhm must be positive")));
            }
            if !(w.rel_amplitude >= 0.0) || !w.rel_amplitude.is_finite() {
                return Err(Error::Config(format!("windows[{i}].rel_amplitude must be >= 0")));
            }
            if !(w.center_wavelength > 0.0) {
                return Err(Error::Config(format!(
                    "windows[{i}].center_wavelength must be positive"
                )));
            }
        }
        if let Some(p) = self.pixel_width {
            if !(p > 0.0) {
                return Err(Error::Config("pixel_width must be positive".into()));
            }
        }
        Ok(())
    }

    /// Largest absolute window delay, fs.
    pub fn max_delay(&self) -> f64 {
        self.windows.iter().map(|w| w.delay.abs()).fold(0.0, f64::max)
    }
}

/// Gaussian source spectrum with intensity FWHM `fwhm` nm centered at
/// `center` nm, unit peak amplitude and flat phase.
pub fn source_spectrum(grid: SpectralGrid, center: f64, fwhm: f64) -> Result<SpectralField> {
    if !(fwhm > 0.0) {
        return Err(Error::Config("source fwhm must be positive".into()));
    }
    grid.check_window(center, fwhm, "source spectrum")?;
    let amplitude = (0..grid.n_points)
        .map(|k| {
            let lambda = wavelength_of(grid.omega(k)).unwrap();
            C64::new(WidthConvention::Intensity.gaussian(lambda - center, fwhm), 0.0)
        })
        .collect();
    Ok(SpectralField { grid, amplitude })
}

/// Multiplies the field by the coherent sum of all window masks.
///
/// Delays are checked against the grid: the time window must be at least
/// twice the longest delay.
pub fn apply_shape(field: &SpectralField, shape: &ShapeSpec) -> Result<SpectralField> {
    shape.validate()?;
    let grid = field.grid;
    for (i, w) in shape.windows.iter().enumerate() {
        grid.check_window(w.center_wavelength, w.fwhm, &format!("windows[{i}]"))?;
    }
    let max_delay = shape.max_delay();
    if 2.0 * max_delay > grid.time_window() {
        return Err(Error::GridTooCoarse {
            reason: format!(
                "time window {:.0} fs is shorter than twice the delay {max_delay:.0} fs",
                grid.time_window()
            ),
            required_n_points: required_points_for_window(grid, 2.0 * max_delay),
        });
    }
    let amplitude = field
        .amplitude
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let w = grid.omega(k);
            let m: C64 = shape.windows.iter().map(|win| win.mask(w, shape.width_convention)).sum();
            a * m
        })
        .collect();
    Ok(SpectralField { grid, amplitude })
}

fn required_points_for_window(grid: SpectralGrid, window: f64) -> usize {
    // T = 2π n / span  =>  n = T·span / 2π
    let n = (window * grid.span() / (2.0 * PI)).ceil() as usize;
    n.next_power_of_two().max(grid.n_points * 2)
}

/// Replaces the amplitude by its mean over contiguous wavelength pixels of
/// width `pixel_width` nm, with pixel edges anchored at the bluest grid point.
pub fn pixelize(field: &SpectralField, pixel_width: f64) -> Result<SpectralField> {
    let grid = field.grid;
    let min_bin = grid.min_wavelength_bin();
    if !(pixel_width > 0.0) || pixel_width < min_bin * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "pixel width {pixel_width} nm is narrower than one grid bin ({min_bin:.3e} nm)"
        )));
    }
    if pixel_width <= min_bin * (1.0 + 1e-9) {
        // at most one grid point per pixel
        return Ok(field.clone());
    }
    let n = grid.n_points;
    let lambda_lo = wavelength_of(grid.omega(n - 1)).unwrap();
    let pixel_of = |k: usize| -> i64 {
        let lambda = wavelength_of(grid.omega(k)).unwrap();
        ((lambda - lambda_lo) / pixel_width).floor() as i64
    };
    let mut out = field.amplitude.clone();
    let mut start = 0;
    while start < n {
        let id = pixel_of(start);
        let mut end = start + 1;
        while end < n && pixel_of(end) == id {
            end += 1;
        }
        let group = &field.amplitude[start..end];
        // leaves already-uniform pixels untouched so that pixelize is idempotent
        if group.iter().any(|a| *a != group[0]) {
            let mean = group.iter().sum::<C64>() / group.len() as f64;
            out[start..end].iter_mut().for_each(|a| *a = mean);
        }
        start = end;
    }
    Ok(SpectralField { grid, amplitude: out })
}

/// Applies the shape and, when requested, the SLM pixelization.
pub fn shape_field(source: &SpectralField, shape: &ShapeSpec) -> Result<SpectralField> {
    let shaped = apply_shape(source, shape)?;
    match shape.pixel_width {
        Some(w) => pixelize(&shaped, w),
        None => Ok(shaped),
    }
}

/// Uniformly sampled complex envelope relative to a carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalField {
    /// fs
    pub t_start: f64,
    /// fs
    pub dt: f64,
    pub envelope: Vec<C64>,
    /// rad/fs
    pub carrier: f64,
    /// Global field multiplier applied when the envelope drives the atom.
    pub amplitude_scale: f64,
    /// Center of the envelope's spectral band relative to the carrier, rad/fs.
    /// Used to center band-limited interpolation.
    pub band_offset: f64,
}

impl TemporalField {
    /// Field from explicit samples, unit scale, band centered on the carrier.
    pub fn from_samples(t_start: f64, dt: f64, envelope: Vec<C64>, carrier: f64) -> Self {
        Self { t_start, dt, envelope, carrier, amplitude_scale: 1.0, band_offset: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.envelope.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envelope.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    pub fn with_scale(mut self, s: f64) -> Self {
        self.amplitude_scale = s;
        self
    }

    /// `Σ|e|²dt` of the unscaled envelope.
    pub fn energy(&self) -> f64 {
        self.envelope.iter().map(|e| e.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Maximum of the unscaled |envelope|.
    pub fn peak(&self) -> f64 {
        self.envelope.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Index range `[first, last]` of samples with |e| above `rel` times the
    /// peak, or `None` for a zero field.
    pub fn support(&self, rel: f64) -> Option<(usize, usize)> {
        let peak = self.peak();
        if peak == 0.0 {
            return None;
        }
        let thr = rel * peak;
        let first = self.envelope.iter().position(|e| e.norm() > thr)?;
        let last = self.envelope.iter().rposition(|e| e.norm() > thr)?;
        Some((first, last))
    }

    /// Band-limited (FFT zero-padding) interpolation of the samples
    /// `first..=last`, `factor` output samples per input step. Extra samples
    /// are taken on both sides so the periodic extension of the segment is
    /// smooth. The result starts exactly at `time(first)`.
    pub fn refine(&self, first: usize, last: usize, factor: usize) -> TemporalField {
        assert!(first <= last && last < self.len() && factor >= 1);
        if factor == 1 {
            return TemporalField {
                t_start: self.time(first),
                envelope: self.envelope[first..=last].to_vec(),
                ..self.clone()
            };
        }
        const MARGIN: usize = 64;
        let a = first.saturating_sub(MARGIN);
        let b = (last + MARGIN).min(self.len() - 1);
        let seg_len = b - a + 1;
        let nu = self.band_offset;
        // demodulate so the band is centered at zero frequency
        let mut buf: Vec<C64> = (a..=b)
            .map(|j| self.envelope[j] * C64::from_polar(1.0, nu * self.time(j)))
            .collect();
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(seg_len).process(&mut buf);

        let big = seg_len * factor;
        let mut spec = vec![C64::new(0.0, 0.0); big];
        let half = seg_len / 2;
        if seg_len.is_multiple_of(2) {
            spec[..half].copy_from_slice(&buf[..half]);
            spec[big - half + 1..].copy_from_slice(&buf[half + 1..]);
            // split the Nyquist bin between both ends
            spec[half] = buf[half] * 0.5;
            spec[big - half] = buf[half] * 0.5;
        } else {
            spec[..=half].copy_from_slice(&buf[..=half]);
            spec[big - half..].copy_from_slice(&buf[half + 1..]);
        }
        planner.plan_fft_inverse(big).process(&mut spec);

        let fine_dt = self.dt / factor as f64;
        let t0 = self.time(a);
        let skip = (first - a) * factor;
        let count = (last - first) * factor + 1;
        let norm = 1.0 / seg_len as f64;
        let envelope = (0..count)
            .map(|j| {
                let t = t0 + (skip + j) as f64 * fine_dt;
                spec[skip + j] * norm * C64::from_polar(1.0, -nu * t)
            })
            .collect();
        TemporalField {
            t_start: self.time(first),
            dt: fine_dt,
            envelope,
            carrier: self.carrier,
            amplitude_scale: self.amplitude_scale,
            band_offset: self.band_offset,
        }
    }

    /// Refines the part of the envelope above `rel` of the peak so that the
    /// sampling step does not exceed `max_dt`. `pad` extra input samples are
    /// kept on each side of the support.
    pub fn refined_support(&self, rel: f64, max_dt: f64, pad: usize) -> Option<TemporalField> {
        let (first, last) = self.support(rel)?;
        let first = first.saturating_sub(pad);
        let last = (last + pad).min(self.len() - 1);
        let factor = (self.dt / max_dt).ceil().max(1.0) as usize;
        Some(self.refine(first, last, factor))
    }
}

/// Inverse transform of the spectrum to a complex envelope referenced to
/// `carrier`. The time window is centered on t = 0.
pub fn synthesize(field: &SpectralField, carrier: f64) -> Result<TemporalField> {
    let grid = field.grid;
    if !(field.energy() > 0.0) {
        return Err(Error::Config("cannot synthesize a zero field".into()));
    }
    if !grid.contains_omega(carrier) {
        return Err(Error::Config(format!("carrier {carrier} rad/fs lies outside the grid")));
    }
    let n = grid.n_points;
    let dt = grid.time_step();
    let dw = grid.step();
    let t_start = -((n / 2) as f64) * dt;

    // exp(-i k Δω t_start) = (-1)^k because t_start = -(n/2)·2π/(nΔω)
    let mut buf: Vec<C64> = field
        .amplitude
        .iter()
        .enumerate()
        .map(|(k, a)| if k % 2 == 0 { *a } else { -*a })
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);

    let c = dw / (2.0 * PI).sqrt();
    let nu0 = grid.omega_min - carrier;
    let envelope: Vec<C64> = buf
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let t = t_start + j as f64 * dt;
            x * c * C64::from_polar(1.0, -nu0 * t)
        })
        .collect();

    let out = TemporalField {
        t_start,
        dt,
        envelope,
        carrier,
        amplitude_scale: 1.0,
        band_offset: grid.omega(n / 2) - carrier,
    };
    check_wrap_around(&out, grid)?;
    Ok(out)
}

fn check_wrap_around(field: &TemporalField, grid: SpectralGrid) -> Result<()> {
    let n = field.len();
    let guard = (n / 32).max(1);
    let peak = field.peak();
    let edge = field.envelope[..guard]
        .iter()
        .chain(&field.envelope[n - guard..])
        .map(|e| e.norm())
        .fold(0.0, f64::max);
    if edge > WRAP_TOLERANCE * peak {
        return Err(Error::GridTooCoarse {
            reason: format!(
                "envelope reaches {:.2e} of its peak at the edges of the {:.0} fs window",
                edge / peak,
                grid.time_window()
            ),
            required_n_points: grid.n_points * 2,
        });
    }
    Ok(())
}

/// Median spacing (fs) between consecutive local maxima of |envelope| that
/// exceed 10% of the global maximum. Coarsely sampled envelopes are
/// interpolated to 1 fs first; peak positions are refined parabolically.
pub fn train_spacing(field: &TemporalField) -> Result<f64> {
    let fine;
    let f = if field.dt > 1.0 {
        fine = field.refined_support(1e-3, 1.0, 4).ok_or(Error::NotATrain { peaks: 0 })?;
        &fine
    } else {
        field
    };
    let mags: Vec<f64> = f.envelope.iter().map(|e| e.norm()).collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let thr = 0.1 * peak;
    let mut peaks = Vec::new();
    for j in 1..mags.len().saturating_sub(1) {
        let (l, c, r) = (mags[j - 1], mags[j], mags[j + 1]);
        if c > thr && c > l && c >= r {
            let denom = l - 2.0 * c + r;
            let off = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            peaks.push(f.time(j) + off * f.dt);
        }
    }
    if peaks.len() < 2 {
        return Err(Error::NotATrain { peaks: peaks.len() });
    }
    let mut gaps: Vec<f64> = peaks.windows(2).map(|p| p[1] - p[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = gaps.len();
    Ok(if m % 2 == 1 { gaps[m / 2] } else { 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]) })
}
