use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use pap_core::atom::{angular_frequency, beat_period, default_potassium, fine_structure_splitting, AtomSpec, LevelSpec};
use pap_core::observables::{ion_signal, FinalState};
use pap_core::shaper::{
    apply_shape, pixelize, shape_field, source_spectrum, synthesize, ShapeSpec, SpectralField, SpectralGrid,
    WindowSpec,
};
use proptest::prelude::*;

fn source() -> SpectralField {
    source_spectrum(SpectralGrid::default_grid(), 768.2, 9.5).unwrap()
}

fn carrier() -> f64 {
    angular_frequency(768.2).unwrap()
}

fn window() -> impl Strategy<Value = WindowSpec> {
    (764.0..772.0f64, 0.5..3.0f64, 0.1..2.0f64, 0.0..3e5f64, -PI..PI)
        .prop_map(|(c, w, a, chirp, ph)| WindowSpec::new(c, w).with_amplitude(a).with_chirp(chirp).with_phase(ph))
}

fn spectral_energy(f: &SpectralField) -> f64 {
    f.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * f.grid.step()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn angular_frequency_decreases_with_wavelength(a in 100.0..2000.0f64, b in 100.0..2000.0f64) {
        prop_assume!(a != b);
        let (wa, wb) = (angular_frequency(a).unwrap(), angular_frequency(b).unwrap());
        prop_assert_eq!(a < b, wa > wb);
    }

    #[test]
    fn beat_period_times_splitting(l1 in 700.0..800.0f64, dl in 0.5..20.0f64) {
        let atom = AtomSpec {
            excited: vec![LevelSpec::new("a", l1, 1.0), LevelSpec::new("b", l1 - dl, 1.3)],
            ..default_potassium()
        };
        let p = beat_period(&atom).unwrap() * fine_structure_splitting(&atom).unwrap();
        prop_assert!((p - 1e3).abs() < 1e-9);
    }

    #[test]
    fn parseval(w1 in window(), w2 in window()) {
        let spec = apply_shape(&source(), &ShapeSpec::new(vec![w1, w2])).unwrap();
        let env = synthesize(&spec, carrier()).unwrap();
        let (es, et) = (spectral_energy(&spec), env.energy());
        prop_assert!((es - et).abs() <= 1e-10 * es, "{es} vs {et}");
    }

    #[test]
    fn delay_shifts_envelope(w in window(), m in -200i64..200) {
        let grid = SpectralGrid::default_grid();
        let t = m as f64 * grid.time_step();
        // the delay phase is referenced to the window center
        let rot = C64::from_polar(1.0, (carrier() - angular_frequency(w.center_wavelength).unwrap()) * t);
        let base = synthesize(&apply_shape(&source(), &ShapeSpec::new(vec![w.clone()])).unwrap(), carrier()).unwrap();
        let moved = synthesize(&apply_shape(&source(), &ShapeSpec::new(vec![w.with_delay(t)])).unwrap(), carrier()).unwrap();
        let n = base.len() as i64;
        let peak = base.peak();
        for j in 0..n {
            let k = (j - m).rem_euclid(n) as usize;
            prop_assert!((moved.envelope[j as usize] - rot * base.envelope[k]).norm() <= 1e-9 * peak);
        }
    }

    #[test]
    fn synthesis_is_linear(w1 in window(), w2 in window(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        prop_assume!(a.abs() > 0.05 && b.abs() > 0.05);
        let f1 = apply_shape(&source(), &ShapeSpec::new(vec![w1])).unwrap();
        let f2 = apply_shape(&source(), &ShapeSpec::new(vec![w2])).unwrap();
        let mut sum = f1.clone();
        for (s, (x, y)) in sum.amplitude.iter_mut().zip(f1.amplitude.iter().zip(&f2.amplitude)) {
            *s = x * a + y * b;
        }
        prop_assume!(sum.energy() > 0.0);
        let (e1, e2) = (synthesize(&f1, carrier()).unwrap(), synthesize(&f2, carrier()).unwrap());
        let es = synthesize(&sum, carrier()).unwrap();
        let scale = e1.peak().max(e2.peak());
        for j in 0..es.len() {
            let lin = e1.envelope[j] * a + e2.envelope[j] * b;
            prop_assert!((es.envelope[j] - lin).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn pixelize_is_idempotent(w in window(), px in 0.01..0.5f64) {
        let shaped = shape_field(&source(), &ShapeSpec::new(vec![w])).unwrap();
        let once = pixelize(&shaped, px).unwrap();
        let twice = pixelize(&once, px).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn ion_signal_is_non_negative(
        r1 in 0.0..1.0f64, p1 in -PI..PI, p2 in -PI..PI,
        e1 in 0.0..2.0f64, e2 in 0.0..2.0f64, pe in -PI..PI,
        d11 in 0.0..2.0f64, d22 in 0.0..2.0f64, frac in 0.0..1.0f64, pd in -PI..PI,
        tau in 0.0..5000.0f64,
    ) {
        let mut atom = default_potassium();
        atom.probe.probe_amp_1 = C64::new(e1, 0.0);
        atom.probe.probe_amp_2 = C64::from_polar(e2, pe);
        atom.probe.d11 = d11;
        atom.probe.d22 = d22;
        atom.probe.d12 = C64::from_polar(frac * (d11 * d22).sqrt(), pd);
        atom.validate().unwrap();
        let st = FinalState::new(C64::from_polar(r1.sqrt(), p1), C64::from_polar((1.0 - r1).sqrt(), p2), 0.0);
        prop_assert!(ion_signal(&st, &atom, tau) >= -1e-12);
    }
}
