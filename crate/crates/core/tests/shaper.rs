use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;
use pap_core::atom::{angular_frequency, SPEED_OF_LIGHT};
use pap_core::shaper::{
    apply_shape, shape_field, source_spectrum, synthesize, train_spacing, ShapeSpec, SpectralField, SpectralGrid,
    TemporalField, WindowSpec,
};
use pap_core::Error;

fn source() -> SpectralField {
    source_spectrum(SpectralGrid::default_grid(), 768.2, 9.5).unwrap()
}

fn carrier() -> f64 {
    angular_frequency(768.2).unwrap()
}

/// Full width at half maximum of samples `y(x)`, linear interpolation of the
/// outermost crossings.
fn fwhm(x: &[f64], y: &[f64]) -> f64 {
    let half = 0.5 * y.iter().cloned().fold(0.0, f64::max);
    let lo = y.iter().position(|v| *v >= half).unwrap();
    let hi = y.iter().rposition(|v| *v >= half).unwrap();
    let cross = |i: usize, j: usize| x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    (cross(hi, hi + 1) - cross(lo - 1, lo)).abs()
}

fn intensity_fwhm_fs(f: &TemporalField) -> f64 {
    let r = f.refined_support(1e-6, 0.5, 4).unwrap();
    let y: Vec<f64> = r.envelope.iter().map(|e| e.norm_sqr()).collect();
    fwhm(&r.times(), &y)
}

#[test]
fn transform_limited_time_bandwidth_product() {
    for (center, width) in [(769.9, 1.8), (766.5, 1.8), (768.2, 0.5)] {
        let spec = apply_shape(&source(), &ShapeSpec::new(vec![WindowSpec::new(center, width)])).unwrap();
        // spectral FWHM in THz from the sampled |A(ω)|²
        let g = spec.grid;
        let nu: Vec<f64> = (0..g.n_points).map(|k| g.omega(k) / (2.0 * PI) * 1e3).collect();
        let p: Vec<f64> = spec.amplitude.iter().map(|a| a.norm_sqr()).collect();
        let dnu = fwhm(&nu, &p);
        let dt = intensity_fwhm_fs(&synthesize(&spec, carrier()).unwrap()) * 1e-3;
        let tbp = dt * dnu;
        let gauss = 2.0 * LN_2 / PI;
        assert!((tbp / gauss - 1.0).abs() < 0.01, "{center}/{width}: TBP {tbp} vs {gauss}");
    }
}

#[test]
fn window_fwhm_matches_frequency_width() {
    // 1.8 nm at 769.9 nm is c·Δλ/λ² ≈ 0.91 THz wide in frequency; the 9.5 nm
    // source narrows the product to (1.8⁻² + 9.5⁻²)^(-1/2) nm
    let w = (1.8f64.powi(-2) + 9.5f64.powi(-2)).powf(-0.5);
    let spec = apply_shape(&source(), &ShapeSpec::new(vec![WindowSpec::new(769.9, 1.8)])).unwrap();
    let g = spec.grid;
    let nu: Vec<f64> = (0..g.n_points).map(|k| g.omega(k) / (2.0 * PI) * 1e3).collect();
    let p: Vec<f64> = spec.amplitude.iter().map(|a| a.norm_sqr()).collect();
    let expect = SPEED_OF_LIGHT * 1e3 * (1.0 / (769.9 - 0.5 * w) - 1.0 / (769.9 + 0.5 * w));
    assert!((fwhm(&nu, &p) - expect).abs() < 0.01 * expect);
}

fn peak_time(f: &TemporalField) -> f64 {
    let r = f.refined_support(1e-3, 1.0, 4).unwrap();
    let k = (0..r.len()).max_by(|&a, &b| r.envelope[a].norm().total_cmp(&r.envelope[b].norm())).unwrap();
    let y = |i: usize| r.envelope[i].norm();
    let (a, b, c) = (y(k - 1), y(k), y(k + 1));
    r.time(k) + 0.5 * r.dt * (a - c) / (a - 2.0 * b + c)
}

#[test]
fn delay_moves_pulse() {
    let w = WindowSpec::new(766.5, 1.8);
    let f0 = synthesize(&apply_shape(&source(), &ShapeSpec::new(vec![w.clone()])).unwrap(), carrier()).unwrap();
    let f8 = synthesize(&apply_shape(&source(), &ShapeSpec::new(vec![w.with_delay(8000.0)])).unwrap(), carrier()).unwrap();
    let shift = peak_time(&f8) - peak_time(&f0);
    assert!((shift - 8000.0).abs() < 0.5, "shift {shift}");
    assert!((f0.energy() - f8.energy()).abs() < 1e-10 * f0.energy());
}

#[test]
fn chirp_stretches_pulse_and_keeps_energy() {
    let w = WindowSpec::new(769.9, 1.8);
    let tl = synthesize(&shape_field(&source(), &ShapeSpec::new(vec![w.clone()])).unwrap(), carrier()).unwrap();
    let ch = synthesize(&shape_field(&source(), &ShapeSpec::new(vec![w.with_chirp(270e3)])).unwrap(), carrier()).unwrap();
    assert!((tl.energy() - ch.energy()).abs() < 1e-10 * tl.energy());
    // Gaussian stretch factor sqrt(1 + (4 ln2 α / τ0²)²) for intensity FWHM τ0
    let t0 = intensity_fwhm_fs(&tl);
    let expect = t0 * (1.0 + (4.0 * LN_2 * 270e3 / (t0 * t0)).powi(2)).sqrt();
    let got = intensity_fwhm_fs(&ch);
    assert!((got / expect - 1.0).abs() < 0.02, "{got} vs {expect}");
}

#[test]
fn train_spacing_of_synthetic_peaks() {
    let dt = 1.0;
    let env: Vec<C64> = (0..2000)
        .map(|j| {
            let t = j as f64 * dt - 300.0;
            let g = |c: f64| (-(t - c).powi(2) / (2.0 * 30.0f64.powi(2))).exp();
            C64::new(g(0.0) + g(500.0) + g(1000.0), 0.0)
        })
        .collect();
    let f = TemporalField::from_samples(-300.0, dt, env, carrier());
    assert!((train_spacing(&f).unwrap() - 500.0).abs() < 0.1);
}

#[test]
fn single_pulse_is_not_a_train() {
    let f = synthesize(&apply_shape(&source(), &ShapeSpec::new(vec![WindowSpec::new(768.2, 9.0)])).unwrap(), carrier()).unwrap();
    assert!(matches!(train_spacing(&f), Err(Error::NotATrain { .. })));
}

#[test]
fn wrap_around_reports_required_points() {
    // a 5×10⁷ fs² chirp stretches a 1.8 nm window to ~300 ps, more than the
    // ~135 ps window of a 4096-point grid
    let grid = SpectralGrid::from_wavelengths(740.0, 800.0, 1 << 12).unwrap();
    let src = source_spectrum(grid, 768.2, 9.5).unwrap();
    let spec = apply_shape(&src, &ShapeSpec::new(vec![WindowSpec::new(768.2, 1.8).with_chirp(5e7)])).unwrap();
    match synthesize(&spec, carrier()) {
        Err(Error::GridTooCoarse { required_n_points, .. }) => assert!(required_n_points > 1 << 12),
        other => panic!("expected a grid error, got {other:?}"),
    }
}

#[test]
fn delay_beyond_window_is_rejected() {
    let shape = ShapeSpec::new(vec![WindowSpec::new(769.9, 1.8).with_delay(2e6)]);
    assert!(matches!(apply_shape(&source(), &shape), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn pixelized_chirp_needs_a_finer_grid() {
    let shape = ShapeSpec::new(vec![WindowSpec::new(769.9, 1.8).with_chirp(270e3)]).with_pixel_width(0.14);
    let coarse = shape_field(&source(), &shape).unwrap();
    assert!(matches!(synthesize(&coarse, carrier()), Err(Error::GridTooCoarse { .. })));
    let fine = SpectralGrid::from_wavelengths(740.0, 800.0, 1 << 20).unwrap();
    let src = source_spectrum(fine, 768.2, 9.5).unwrap();
    let f = synthesize(&shape_field(&src, &shape).unwrap(), carrier()).unwrap();
    let spec = shape_field(&src, &shape).unwrap();
    let es = spec.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * spec.grid.step();
    assert!((f.energy() - es).abs() < 1e-10 * es);
}
