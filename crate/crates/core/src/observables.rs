//! Bichromatic ionization signal, quantum-beat traces and their analysis.
//!
//! After the pump, the probe transfers population from both excited levels
//! to a common intermediate state; the two paths interfere and the signal
//! beats at the level splitting as a function of pump–probe delay.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::atom::{fine_structure_splitting, AtomSpec};
use crate::error::{Error, Result};

/// Minimum samples per beat period accepted by [`beat_trace`].
pub const MIN_SAMPLES_PER_PERIOD: f64 = 16.0;
/// Fit residual (fraction of the signal variance) above which a trace is
/// declared beat-free.
pub const NO_BEAT_RESIDUAL: f64 = 0.2;

/// Excited amplitudes of the first two levels at `t_ref`, in the carrier
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub b1: C64,
    pub b2: C64,
    /// fs
    pub t_ref: f64,
}

impl FinalState {
    pub fn new(b1: C64, b2: C64, t_ref: f64) -> Self {
        Self { b1, b2, t_ref }
    }

    /// `arg{b₁* b₂ d₁₂}`.
    pub fn relative_phase(&self, atom: &AtomSpec) -> f64 {
        (self.b1.conj() * self.b2 * atom.probe.d12).arg()
    }
}

/// Ionization signal at pump–probe delay `delay` (fs, same clock as
/// `state.t_ref`). Delays before `t_ref` are evaluated by the same free
/// evolution and carry no physical meaning.
pub fn ion_signal(state: &FinalState, atom: &AtomSpec, delay: f64) -> f64 {
    let p = &atom.probe;
    let (w1, w2) = (atom.excited[0].omega(), atom.excited[1].omega());
    let tau = delay - state.t_ref;
    // only the relative phase matters: b1 b2* picks up exp(-i(ω1-ω2)τ)
    let cross = state.b1 * state.b2.conj() * C64::from_polar(1.0, -(w1 - w2) * tau);
    state.b1.norm_sqr() * p.probe_amp_1.norm_sqr() * p.d11
        + state.b2.norm_sqr() * p.probe_amp_2.norm_sqr() * p.d22
        + 2.0 * (cross * p.probe_amp_1 * p.probe_amp_2.conj() * p.d12).re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTrace {
    /// fs, uniform and strictly increasing.
    pub delays: Vec<f64>,
    pub signal: Vec<f64>,
    /// Time the fitted phase refers to, fs.
    pub t_ref: f64,
    /// `arg(ε₁ε₂*) + 2·arg(d₁₂)`; maps the fitted phase to φ₁₂.
    pub phase_reference: f64,
    /// +1 when level 2 lies above level 1, −1 otherwise.
    pub beat_sign: f64,
}

impl BeatTrace {
    /// Trace from explicit samples with the default phase bookkeeping
    /// (`t_ref = 0`, real probe constants, level 2 above level 1).
    pub fn from_samples(delays: Vec<f64>, signal: Vec<f64>) -> Self {
        Self { delays, signal, t_ref: 0.0, phase_reference: 0.0, beat_sign: 1.0 }
    }

    pub fn step(&self) -> f64 {
        self.delays[1] - self.delays[0]
    }
}

/// `n` uniform samples of [`ion_signal`] over `[delay_start, delay_end]`.
pub fn beat_trace(
    state: &FinalState,
    atom: &AtomSpec,
    delay_start: f64,
    delay_end: f64,
    n: usize,
) -> Result<BeatTrace> {
    if !(delay_end > delay_start) {
        return Err(Error::Config("beat trace needs delay_end > delay_start".into()));
    }
    let split = fine_structure_splitting(atom)?;
    let period = if split > 0.0 { 1e3 / split } else { f64::INFINITY };
    let required = ((delay_end - delay_start) / (period / MIN_SAMPLES_PER_PERIOD)).ceil() as usize + 1;
    if n < required.max(2) {
        return Err(Error::Sampling { required_n: required.max(2) });
    }
    let step = (delay_end - delay_start) / (n - 1) as f64;
    let delays: Vec<f64> = (0..n).map(|k| delay_start + k as f64 * step).collect();
    let signal = delays.iter().map(|&d| ion_signal(state, atom, d)).collect();
    let p = &atom.probe;
    Ok(BeatTrace {
        delays,
        signal,
        t_ref: state.t_ref,
        phase_reference: (p.probe_amp_1 * p.probe_amp_2.conj()).arg() + 2.0 * p.d12.arg(),
        beat_sign: (atom.excited[1].omega() - atom.excited[0].omega()).signum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatAnalysis {
    /// THz
    pub frequency: f64,
    /// `B/A` of the fitted `A + B·sin(2πfτ + φ)`, in [0, 1]; 0 for no beat.
    pub contrast: f64,
    /// φ₁₂ = arg{b₁*b₂d₁₂}, wrapped to (−π, π]. Meaningless when
    /// `phase_defined` is false.
    pub phase: f64,
    /// Raw fitted φ, with τ measured from the trace's `t_ref`.
    pub oscillation_phase: f64,
    pub mean_level: f64,
    /// Fit residual as a fraction of the signal variance.
    pub residual: f64,
    pub phase_defined: bool,
}

impl BeatAnalysis {
    fn no_beat(mean_level: f64, frequency: f64, residual: f64) -> Self {
        Self {
            frequency,
            contrast: 0.0,
            phase: 0.0,
            oscillation_phase: 0.0,
            mean_level,
            residual,
            phase_defined: false,
        }
    }

    pub fn has_beat(&self) -> bool {
        self.phase_defined
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

struct SineFit {
    offset: f64,
    sin: f64,
    cos: f64,
    sse: f64,
}

/// Linear least squares of `y ≈ a + s·sin(ωx) + c·cos(ωx)`.
fn fit_at(x: &[f64], y: &[f64], omega: f64) -> SineFit {
    // normal equations, 3×3
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let b = [1.0, (omega * xi).sin(), (omega * xi).cos()];
        for i in 0..3 {
            r[i] += b[i] * yi;
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    let p = solve3(m, r);
    let sse = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = p[0] + p[1] * (omega * xi).sin() + p[2] * (omega * xi).cos();
            (yi - f).powi(2)
        })
        .sum();
    SineFit { offset: p[0], sin: p[1], cos: p[2], sse }
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let piv = (c..3).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap()).unwrap();
        m.swap(c, piv);
        r.swap(c, piv);
        if m[c][c] == 0.0 {
            return [0.0; 3];
        }
        for row in c + 1..3 {
            let f = m[row][c] / m[c][c];
            for k in c..3 {
                m[row][k] -= f * m[c][k];
            }
            r[row] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| m[c][k] * x[k]).sum();
        x[c] = (r[c] - s) / m[c][c];
    }
    x
}

/// Least-squares fit of `A + B·sin(2πfτ + φ)` with `f` searched within ±10%
/// of `expected_frequency` (THz). Traces whose fit leaves more than 20% of the
/// variance unexplained, or that are flat, return a no-beat result.
pub fn analyze_beat(trace: &BeatTrace, expected_frequency: f64) -> Result<BeatAnalysis> {
    let n = trace.delays.len();
    if n < 4 || trace.signal.len() != n {
        return Err(Error::Config("beat analysis needs at least 4 matching samples".into()));
    }
    if !(expected_frequency > 0.0) {
        return Err(Error::Domain("expected beat frequency must be positive".into()));
    }
    let span = trace.delays[n - 1] - trace.delays[0];
    let periods = span * expected_frequency * 1e-3;
    if periods < 3.0 - 1e-9 {
        return Err(Error::Config(format!(
            "trace spans {periods:.2} expected periods; at least 3 are needed"
        )));
    }
    let x: Vec<f64> = trace.delays.iter().map(|d| d - trace.t_ref).collect();
    let y = &trace.signal;
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var <= 1e-24 * mean.abs().max(1e-300).powi(2) || var == 0.0 {
        return Ok(BeatAnalysis::no_beat(mean, expected_frequency, 1.0));
    }

    // coarse scan, then golden-section refinement of the frequency
    let to_omega = |f: f64| 2.0 * PI * f * 1e-3;
    let (lo, hi) = (0.9 * expected_frequency, 1.1 * expected_frequency);
    let n_scan = 201;
    let mut best = (expected_frequency, f64::INFINITY);
    for k in 0..n_scan {
        let f = lo + (hi - lo) * k as f64 / (n_scan - 1) as f64;
        let sse = fit_at(&x, y, to_omega(f)).sse;
        if sse < best.1 {
            best = (f, sse);
        }
    }
    let h = (hi - lo) / (n_scan - 1) as f64;
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = fit_at(&x, y, to_omega(c)).sse;
    let mut fd = fit_at(&x, y, to_omega(d)).sse;
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fit_at(&x, y, to_omega(c)).sse;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fit_at(&x, y, to_omega(d)).sse;
        }
    }
    let f = 0.5 * (a + b);
    let fit = fit_at(&x, y, to_omega(f));
    let residual = fit.sse / n as f64 / var;
    if residual > NO_BEAT_RESIDUAL {
        return Ok(BeatAnalysis::no_beat(mean, f, residual));
    }
    // s·sin + c·cos = B·sin(x + φ), B cos φ = s, B sin φ = c
    let amp = fit.sin.hypot(fit.cos);
    let phi = fit.cos.atan2(fit.sin);
    let contrast = if fit.offset > 0.0 { (amp / fit.offset).min(1.0) } else { 0.0 };
    let phase = wrap_phase(-trace.beat_sign * (phi - PI / 2.0) + trace.phase_reference);
    Ok(BeatAnalysis {
        frequency: f,
        contrast,
        phase,
        oscillation_phase: wrap_phase(phi),
        mean_level: fit.offset,
        residual,
        phase_defined: true,
    })
}

/// Hann-windowed power spectrum of the mean-subtracted trace, zero-padded to
/// the next power of two. Returns `(frequency THz, power)` up to Nyquist.
pub fn trace_power_spectrum(trace: &BeatTrace) -> Result<Vec<(f64, f64)>> {
    let n = trace.signal.len();
    if n < 64 {
        return Err(Error::Sampling { required_n: 64 });
    }
    let mean = trace.signal.iter().sum::<f64>() / n as f64;
    let size = n.next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); size];
    for (k, v) in trace.signal.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
        buf[k] = C64::new((v - mean) * w, 0.0);
    }
    FftPlanner::<f64>::new().plan_fft_forward(size).process(&mut buf);
    let df = 1e3 / (size as f64 * trace.step());
    Ok((0..=size / 2).map(|k| (k as f64 * df, buf[k].norm_sqr())).collect())
}

/// Power of the strongest spectral bin within `±tol` THz of `freq`.
pub fn peak_power_near(spectrum: &[(f64, f64)], freq: f64, tol: f64) -> f64 {
    spectrum
        .iter()
        .filter(|(f, _)| (f - freq).abs() <= tol)
        .map(|(_, p)| *p)
        .fold(0.0, f64::max)
}
