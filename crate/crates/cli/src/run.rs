//! Subcommand execution. Each experiment returns its data files, a JSON
//! summary and the outcome of its built-in checks; nothing is written until
//! the computation has succeeded.

use std::f64::consts::PI;

use pap_core::dynamics::scale_for_area;
use pap_core::experiments::{
    run_amplitude_control, run_completeness, run_phase_control, run_rabi_calibration, run_scan_2d,
    run_single_line_ap, CompletenessSpec, ControlReport, LineSweep, ScanSpec, AP_CHIRP,
};
use pap_core::observables::wrap_phase;
use pap_core::shaper::{self, shape_field, train_spacing};
use pap_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{pi, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Synthesize,
    Simulate,
    ScanRabi,
    ScanAp,
    #[value(name = "scan-2d")]
    #[serde(rename = "scan-2d")]
    Scan2d,
    Completeness,
    PhaseControl,
    AmplitudeControl,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Synthesize => "synthesize",
            Experiment::Simulate => "simulate",
            Experiment::ScanRabi => "scan-rabi",
            Experiment::ScanAp => "scan-ap",
            Experiment::Scan2d => "scan-2d",
            Experiment::Completeness => "completeness",
            Experiment::PhaseControl => "phase-control",
            Experiment::AmplitudeControl => "amplitude-control",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

pub struct Output {
    /// CSV data files, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

type Rows = Vec<Vec<f64>>;

fn csv(header: &[String], rows: &Rows) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn pop_columns(n_levels: usize) -> Vec<String> {
    (0..=n_levels).map(|i| format!("pop{i}")).collect()
}

fn pairs(xs: &[(f64, f64)]) -> Rows {
    xs.iter().map(|&(a, b)| vec![a, b]).collect()
}

pub fn execute(exp: Experiment, cfg: &RunConfig) -> Result<Output, Error> {
    match exp {
        Experiment::Synthesize => synthesize(cfg),
        Experiment::Simulate => simulate(cfg),
        Experiment::ScanRabi => line_sweep(cfg, false),
        Experiment::ScanAp => line_sweep(cfg, true),
        Experiment::Scan2d => scan_2d(cfg),
        Experiment::Completeness => completeness(cfg),
        Experiment::PhaseControl => phase_control(cfg),
        Experiment::AmplitudeControl => amplitude_control(cfg),
    }
}

fn synthesize(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.synthesize.clone().unwrap_or_default();
    let setup = cfg.setup(1.8, AP_CHIRP);
    let prep = setup.prepare(&cfg.shape_spec())?;
    let area = pi(p.area_pi);
    let scale = if area == 0.0 { 0.0 } else { scale_for_area(&prep.unit, area)? };
    let spacing_of = |f: &shaper::TemporalField| match train_spacing(f) {
        Ok(s) => Ok(Some(s)),
        Err(Error::NotATrain { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let spacing = spacing_of(&prep.field)?;
    // the train spacing is defined for flat spectral phase
    let mut flat_shape = cfg.shape_spec();
    for w in &mut flat_shape.windows {
        w.chirp_alpha = 0.0;
    }
    let flat = shaper::synthesize(&shape_field(&setup.source()?, &flat_shape)?, setup.carrier)?;
    let flat_spacing = spacing_of(&flat)?;
    let field = prep.field.clone().with_scale(scale);
    let view = field.refined_support(1e-6, 1.0, 4).unwrap_or_else(|| field.clone());
    let rows = (0..view.len())
        .map(|j| {
            let e = view.envelope[j];
            vec![view.time(j), e.re, e.im, e.norm()]
        })
        .collect();
    let period = setup.atom.excited.get(1).map(|_| setup.beat_period()).transpose()?;
    let checks = vec![check(
        "flat-phase train spacing 578 ± 2 fs",
        flat_spacing.is_some_and(|s| (s - 578.0).abs() <= 2.0),
        format!("{flat_spacing:?} fs"),
    )];
    Ok(Output {
        files: vec![("envelope.csv".into(), csv(&header(&["t_fs", "re", "im", "abs"]), &rows))],
        summary: json!({
            "area_rad": area,
            "amplitude_scale": scale,
            "unit_areas": prep.unit.areas,
            "train_spacing_fs": spacing,
            "flat_phase_train_spacing_fs": flat_spacing,
            "beat_period_fs": period,
            "peak_abs": field.peak(),
            "energy": field.energy(),
            "samples": view.len(),
            "dt_fs": view.dt,
        }),
        checks,
    })
}

fn simulate(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.simulate.clone().unwrap_or_default();
    let setup = cfg.setup(1.8, AP_CHIRP);
    let prep = setup.prepare(&cfg.shape_spec())?;
    let area = pi(p.area_pi);
    let tr = setup.propagate_area(&prep, area)?;
    let n = setup.atom.n_levels();
    let mut cols = vec!["t_fs".to_string()];
    cols.extend(pop_columns(n));
    if n >= 2 {
        cols.push("phase12".into());
    }
    let rows = (0..tr.len())
        .map(|k| {
            let mut r = vec![tr.times[k]];
            r.extend(tr.populations_at(k));
            if n >= 2 {
                r.push((tr.b_excited[0][k].conj() * tr.b_excited[1][k]).arg());
            }
            r
        })
        .collect();
    let mut checks = vec![check(
        "unitarity drift < 1e-9",
        tr.max_norm_drift < 1e-9,
        format!("{:.3e}", tr.max_norm_drift),
    )];
    let convergence = if cfg.integrator.convergence_check {
        let mut half = setup.clone();
        half.integrator = half.integrator.with_dt_max(0.5 * setup.integrator.dt_max);
        let fine = half.propagate_area(&prep, area)?;
        let d = tr
            .final_populations()
            .iter()
            .zip(fine.final_populations())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        checks.push(check("dt halving changes populations < 1e-6", d < 1e-6, format!("{d:.3e}")));
        Some(d)
    } else {
        None
    };
    Ok(Output {
        files: vec![("trajectory.csv".into(), csv(&cols, &rows))],
        summary: json!({
            "area_rad": area,
            "unit_areas": prep.unit.areas,
            "final_time_fs": tr.final_time(),
            "final_populations": tr.final_populations(),
            "max_norm_drift": tr.max_norm_drift,
            "dt_halving_change": convergence,
        }),
        checks,
    })
}

fn line_sweep(cfg: &RunConfig, adiabatic: bool) -> Result<Output, Error> {
    let block = if adiabatic { &cfg.experiment.scan_ap } else { &cfg.experiment.scan_rabi };
    let p = block.clone().unwrap_or_default();
    let setup = cfg.setup(p.window_fwhm, p.chirp);
    let areas: Vec<f64> = p.area_pi.values().into_iter().map(pi).collect();
    let r: LineSweep = if adiabatic {
        run_single_line_ap(&setup, p.line, p.chirp, &areas)?
    } else {
        run_rabi_calibration(&setup, p.line, &areas)?
    };
    let mut cols = vec!["area_rad".to_string()];
    cols.extend(pop_columns(setup.atom.n_levels()));
    let rows = r
        .areas
        .iter()
        .zip(&r.populations)
        .map(|(a, pops)| std::iter::once(*a).chain(pops.iter().cloned()).collect())
        .collect();
    let checks = if adiabatic {
        vec![check(
            "plateau over [1.2π, 3π] ≥ 0.95",
            r.plateau_min.is_some_and(|m| m >= 0.95),
            format!("min {:?}", r.plateau_min),
        )]
    } else {
        vec![check(
            "first maximum at π ± 5%",
            r.first_maximum.is_some_and(|m| (m / PI - 1.0).abs() <= 0.05),
            format!("{:?} rad", r.first_maximum),
        )]
    };
    Ok(Output {
        files: vec![("sweep.csv".into(), csv(&cols, &rows))],
        summary: serde_json::to_value(&r).expect("serializable"),
        checks,
    })
}

fn scan_2d(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.scan_2d.clone().unwrap_or_default();
    let setup = cfg.setup(1.8, AP_CHIRP);
    let shape = cfg.shape_spec();
    let chirped = shape.windows.iter().any(|w| w.chirp_alpha != 0.0);
    let areas: Vec<f64> = p.area_pi.values().into_iter().map(pi).collect();
    let r = run_scan_2d(&setup, &ScanSpec { shape, areas, delays: None })?;

    let mut traces = Vec::with_capacity(r.areas.len() * r.delays.len());
    for (a, row) in r.areas.iter().zip(&r.signal) {
        for (d, s) in r.delays.iter().zip(row) {
            traces.push(vec![*a, *d, *s]);
        }
    }
    let mut cols = vec!["area_rad".to_string()];
    cols.extend(pop_columns(setup.atom.n_levels()));
    cols.extend(header(&["contrast", "beat_phase", "relative_phase"]));
    let beats = r
        .areas
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut row = vec![*a];
            row.extend(&r.populations[k]);
            row.extend([r.beats[k].contrast, r.beats[k].phase, r.relative_phase[k]]);
            row
        })
        .collect();

    let mut checks = Vec::new();
    if chirped {
        let plateau: Vec<usize> =
            (0..r.areas.len()).filter(|&k| r.areas[k] >= 1.2 * PI - 1e-9 && r.areas[k] <= 3.0 * PI + 1e-9).collect();
        if !plateau.is_empty() {
            let excited = plateau.iter().map(|&k| 1.0 - r.populations[k][0]).fold(f64::INFINITY, f64::min);
            let ground = plateau.iter().map(|&k| r.populations[k][0]).fold(0.0, f64::max);
            let mut phases = vec![r.beats[plateau[0]].phase];
            for &k in &plateau[1..] {
                let prev = *phases.last().unwrap();
                phases.push(prev + wrap_phase(r.beats[k].phase - prev));
            }
            let drift = phases.iter().cloned().fold(f64::MIN, f64::max) - phases.iter().cloned().fold(f64::MAX, f64::min);
            checks.push(check("excited population ≥ 0.95 on [1.2π, 3π]", excited >= 0.95, format!("min {excited:.4}")));
            checks.push(check("ground residual ≤ 0.05 on [1.2π, 3π]", ground <= 0.05, format!("max {ground:.4}")));
            checks.push(check("beat phase drift < 0.2 rad on [1.2π, 3π]", drift < 0.2, format!("{drift:.4} rad")));
        }
    } else {
        let find = |x: f64| r.areas.iter().position(|a| (a - x).abs() < 1e-9);
        if let (Some(i), Some(j)) = (find(PI), find(2.0 * PI)) {
            let ratio = r.beats[j].contrast / r.beats[i].contrast;
            checks.push(check("contrast(2π) < 25% of contrast(π)", ratio < 0.25, format!("ratio {ratio:.4}")));
        }
    }
    Ok(Output {
        files: vec![
            ("traces.csv".into(), csv(&header(&["area_rad", "delay_fs", "signal"]), &traces)),
            ("beats.csv".into(), csv(&cols, &beats)),
        ],
        summary: json!({
            "t_ref_fs": r.t_ref,
            "areas_rad": r.areas,
            "delay_range_fs": [r.delays[0], r.delays[r.delays.len() - 1]],
            "populations": r.populations,
            "relative_phase": r.relative_phase,
            "beats": r.beats,
        }),
        checks,
    })
}

fn completeness(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.completeness.clone().unwrap_or_default();
    let setup = cfg.setup(p.window_fwhm, AP_CHIRP);
    let spec = CompletenessSpec {
        delay: p.delay,
        first_chirp: p.first_chirp,
        second_chirp: p.second_chirp,
        first_area: pi(p.first_area_pi),
        second_area: pi(p.second_area_pi),
    };
    let r = run_completeness(&setup, &spec)?;
    let trace = |t: &pap_core::observables::BeatTrace| {
        csv(&header(&["delay_fs", "signal"]), &t.delays.iter().zip(&t.signal).map(|(d, s)| vec![*d, *s]).collect())
    };
    let spectrum = |s: &[(f64, f64)]| csv(&header(&["freq_THz", "power"]), &pairs(s));
    let ratio = r.after_peak / r.reference_peak;
    let checks = vec![
        check("second-line residual ≤ 0.03", r.residual <= 0.03, format!("{:.4}", r.residual)),
        check("post-pulse beat peak ≤ 5% of reference", ratio <= 0.05, format!("{ratio:.4}")),
    ];
    Ok(Output {
        files: vec![
            ("trace_before.csv".into(), trace(&r.before)),
            ("trace_after.csv".into(), trace(&r.after)),
            ("spectrum_before.csv".into(), spectrum(&r.before_spectrum)),
            ("spectrum_after.csv".into(), spectrum(&r.after_spectrum)),
        ],
        summary: json!({
            "spec": r.spec,
            "populations": r.populations,
            "residual": r.residual,
            "reference_peak": r.reference_peak,
            "before_peak": r.before_peak,
            "after_peak": r.after_peak,
            "after_to_reference": ratio,
        }),
        checks,
    })
}

fn phase_control(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.phase_control.clone().unwrap_or_default();
    let setup = cfg.setup(p.window_fwhm, p.chirp);
    let offsets: Vec<f64> = p.offsets_pi.iter().map(|&x| pi(x)).collect();
    let r = run_phase_control(&setup, &offsets, p.line, pi(p.area_pi))?;
    let mut cols = header(&["offset_rad", "beat_shift", "phi12_shift", "contrast"]);
    cols.extend(pop_columns(setup.atom.n_levels()));
    let rows = r
        .points
        .iter()
        .map(|q| {
            let mut row = vec![q.offset, q.beat_shift, q.phi12_shift, q.beat.contrast];
            row.extend(&q.populations);
            row
        })
        .collect();
    let p0 = &r.points[0].populations;
    let mut shift_err: f64 = 0.0;
    let mut pop_change: f64 = 0.0;
    for q in &r.points {
        shift_err = shift_err.max(wrap_phase(q.beat_shift - (q.offset - offsets[0])).abs());
        for (a, b) in q.populations.iter().zip(p0).skip(1) {
            pop_change = pop_change.max((a - b).abs());
        }
    }
    let checks = vec![
        check("beat shift follows offset ± 0.1 rad", shift_err <= 0.1, format!("max error {shift_err:.4} rad")),
        check("population changes < 0.02", pop_change < 0.02, format!("max {pop_change:.4}")),
    ];
    Ok(Output {
        files: vec![("phase.csv".into(), csv(&cols, &rows))],
        summary: serde_json::to_value(&r).expect("serializable"),
        checks,
    })
}

fn amplitude_control(cfg: &RunConfig) -> Result<Output, Error> {
    let p = cfg.experiment.amplitude_control.clone().unwrap_or_default();
    let setup = cfg.setup(p.window_fwhm, p.chirp);
    let wide: Vec<ControlReport> = p
        .targets
        .par_iter()
        .map(|&b| run_amplitude_control(&setup, b, p.max_iterations, p.window_fwhm))
        .collect::<Result<_, _>>()?;
    let narrow: Vec<ControlReport> = p
        .targets
        .par_iter()
        .map(|&b| run_amplitude_control(&setup, b, 0, p.narrow_fwhm))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for r in wide.iter().chain(&narrow) {
        for (k, it) in r.iterations.iter().enumerate() {
            rows.push(vec![r.target_beta, r.window_fwhm, k as f64, it.ratio, it.achieved_beta, it.ground_residual, it.error]);
        }
    }
    let cols = header(&["target_beta", "window_fwhm_nm", "iteration", "ratio", "achieved_beta", "ground", "error"]);

    let final_err = wide.iter().map(|r| r.last().error).fold(0.0, f64::max);
    let ground = wide.iter().flat_map(|r| r.iterations.iter().map(|i| i.ground_residual)).fold(0.0, f64::max);
    let mut checks = vec![
        check("final |β/target − 1| ≤ 0.002", final_err <= 0.002, format!("max {final_err:.3e}")),
        check("ground residual ≤ 0.05 at every iteration", ground <= 0.05, format!("max {ground:.4}")),
    ];
    let better = wide.iter().zip(&narrow).all(|(w, n)| n.iterations[0].error < w.iterations[0].error);
    let detail = wide
        .iter()
        .zip(&narrow)
        .map(|(w, n)| format!("{:.4}/{:.4}", w.iterations[0].error, n.iterations[0].error))
        .collect::<Vec<_>>()
        .join(", ");
    checks.push(check("narrow windows improve the initial guess", better, detail));
    Ok(Output {
        files: vec![("iterations.csv".into(), csv(&cols, &rows))],
        summary: json!({ "wide": wide, "narrow": narrow }),
        checks,
    })
}
