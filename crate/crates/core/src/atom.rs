//! Level structure of the simulated atom and the unit bridges used throughout
//! the crate.
//!
//! Units: wavelengths in nm, times in fs, angular frequencies in rad/fs,
//! ordinary frequencies in THz.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in nm/fs.
pub const SPEED_OF_LIGHT: f64 = 299.792458;

/// `ω = 2πc/λ` in rad/fs for a wavelength in nm.
pub fn angular_frequency(wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::Domain(format!(
            "wavelength must be positive and finite, got {wavelength} nm"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / wavelength)
}

/// Inverse of [`angular_frequency`]: wavelength in nm of an angular frequency
/// in rad/fs.
pub fn wavelength_of(omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "angular frequency must be positive and finite, got {omega} rad/fs"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub label: String,
    /// Ground to level resonance, nm.
    pub transition_wavelength: f64,
    /// Transition dipole relative to the reference transition.
    pub dipole_weight: f64,
}

impl LevelSpec {
    pub fn new(label: impl Into<String>, transition_wavelength: f64, dipole_weight: f64) -> Self {
        Self { label: label.into(), transition_wavelength, dipole_weight }
    }

    /// Resonance angular frequency in rad/fs.
    pub fn omega(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.transition_wavelength
    }
}

/// Probe constants of the bichromatic ionization signal: field amplitudes at
/// the two probe transitions and the two-photon dipole products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub probe_amp_1: C64,
    pub probe_amp_2: C64,
    pub d11: f64,
    pub d22: f64,
    pub d12: C64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            probe_amp_1: C64::new(1.0, 0.0),
            probe_amp_2: C64::new(1.0, 0.0),
            d11: 1.0,
            d22: 1.0,
            d12: C64::new(1.0, 0.0),
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.d11 >= 0.0) || !(self.d22 >= 0.0) {
            return Err(Error::Config("probe weights d11, d22 must be non-negative".into()));
        }
        let bound = (self.d11 * self.d22).sqrt();
        // small slack so that d12 = sqrt(d11 d22) computed in floating point passes
        if self.d12.norm() > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Config(format!(
                "|d12| = {} exceeds sqrt(d11*d22) = {bound}",
                self.d12.norm()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub ground_label: String,
    pub excited: Vec<LevelSpec>,
    pub probe: ProbeSpec,
}

impl AtomSpec {
    /// Checks the structural invariants: at least one excited level, positive
    /// distinct wavelengths, positive dipole weights with at least one equal to
    /// 1 (the reference transition), and a physical probe.
    pub fn validate(&self) -> Result<()> {
        if self.excited.is_empty() {
            return Err(Error::Config("atom needs at least one excited level".into()));
        }
        for (i, lvl) in self.excited.iter().enumerate() {
            if !(lvl.transition_wavelength > 0.0) || !lvl.transition_wavelength.is_finite() {
                return Err(Error::Config(format!(
                    "excited[{i}].transition_wavelength must be positive"
                )));
            }
            if !(lvl.dipole_weight > 0.0) || !lvl.dipole_weight.is_finite() {
                return Err(Error::Config(format!("excited[{i}].dipole_weight must be positive")));
            }
            for (j, other) in self.excited.iter().enumerate().skip(i + 1) {
                if lvl.transition_wavelength == other.transition_wavelength {
                    return Err(Error::Config(format!(
                        "excited[{i}] and excited[{j}] share the wavelength {} nm",
                        lvl.transition_wavelength
                    )));
                }
            }
        }
        let unit = self.excited.iter().filter(|l| l.dipole_weight == 1.0).count();
        if unit == 0 {
            return Err(Error::Config("one dipole weight must equal 1.0 (the reference transition)".into()));
        }
        self.probe.validate()
    }

    pub fn n_levels(&self) -> usize {
        self.excited.len()
    }

    /// Index of the excited level whose resonance is nearest to `omega`.
    pub fn nearest_level(&self, omega: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, lvl) in self.excited.iter().enumerate() {
            let d = (lvl.omega() - omega).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Potassium 4S₁/₂ → 4P₁/₂ (D1, 769.9 nm) and 4S₁/₂ → 4P₃/₂ (D2, 766.5 nm),
/// D2:D1 dipole ratio sqrt(2), equal unit probe weights.
pub fn default_potassium() -> AtomSpec {
    AtomSpec {
        ground_label: "4S1/2".into(),
        excited: vec![
            LevelSpec::new("4P1/2", 769.9, 1.0),
            LevelSpec::new("4P3/2", 766.5, std::f64::consts::SQRT_2),
        ],
        probe: ProbeSpec::default(),
    }
}

/// Splitting between the first two excited levels in THz.
pub fn fine_structure_splitting(spec: &AtomSpec) -> Result<f64> {
    if spec.excited.len() < 2 {
        return Err(Error::Config("fine-structure splitting needs two excited levels".into()));
    }
    let l1 = spec.excited[0].transition_wavelength;
    let l2 = spec.excited[1].transition_wavelength;
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::Domain("non-positive transition wavelength".into()));
    }
    // c in nm/fs gives 1/fs; 1/fs = 1000 THz
    Ok(SPEED_OF_LIGHT * (1.0 / l1 - 1.0 / l2).abs() * 1e3)
}

/// Quantum-beat period of the first two excited levels, fs.
pub fn beat_period(spec: &AtomSpec) -> Result<f64> {
    let split = fine_structure_splitting(spec)?;
    if split <= 0.0 {
        return Err(Error::Domain("degenerate levels have no beat period".into()));
    }
    Ok(1e3 / split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn angular_frequency_values() {
        // 2π·299.792458/768.2
        assert_relative_eq!(angular_frequency(768.2).unwrap(), 2.452032761401788, epsilon = 1e-12);
        let d = angular_frequency(766.5).unwrap() - angular_frequency(769.9).unwrap();
        assert_relative_eq!(d, 1.0852580339260065e-2, epsilon = 1e-12);
        let w = angular_frequency(500.0).unwrap();
        assert_relative_eq!(angular_frequency(1000.0).unwrap(), w / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn angular_frequency_rejects_nonpositive() {
        assert!(matches!(angular_frequency(0.0), Err(Error::Domain(_))));
        assert!(matches!(angular_frequency(-3.0), Err(Error::Domain(_))));
        assert!(angular_frequency(f64::NAN).is_err());
    }

    #[test]
    fn potassium_splitting_and_period() {
        let k = default_potassium();
        k.validate().unwrap();
        let s = fine_structure_splitting(&k).unwrap();
        assert!((s - 1.73).abs() <= 0.01);
        assert_relative_eq!(s, 1.7272418062951873, epsilon = 1e-9);
        let p = beat_period(&k).unwrap();
        assert!((p - 578.0).abs() <= 2.0);
        assert_relative_eq!(p, 578.957732701555, epsilon = 1e-6);
        assert_relative_eq!(p * s, 1e3, epsilon = 1e-9);
        assert_eq!(k.excited[1].transition_wavelength, 766.5);
        assert_relative_eq!(k.probe.d12.norm(), (k.probe.d11 * k.probe.d22).sqrt());
    }

    #[test]
    fn degenerate_levels() {
        let mut k = default_potassium();
        k.excited[1].transition_wavelength = 769.9;
        assert_eq!(fine_structure_splitting(&k).unwrap(), 0.0);
        assert!(matches!(beat_period(&k), Err(Error::Domain(_))));
        assert!(k.validate().is_err());
    }

    #[test]
    fn one_level_has_no_splitting() {
        let mut k = default_potassium();
        k.excited.truncate(1);
        assert!(matches!(fine_structure_splitting(&k), Err(Error::Config(_))));
    }

    #[test]
    fn unit_splitting_gives_1000_fs() {
        // λ2 chosen so that c·(1/λ1 − 1/λ2) = 1 THz
        let l1 = 800.0;
        let l2 = 1.0 / (1.0 / l1 - 1e-3 / SPEED_OF_LIGHT);
        let mut k = default_potassium();
        k.excited[0].transition_wavelength = l1;
        k.excited[1].transition_wavelength = l2;
        assert_relative_eq!(beat_period(&k).unwrap(), 1000.0, epsilon = 1e-6);
    }

    #[test]
    fn validate_catches_bad_weights() {
        let mut k = default_potassium();
        k.excited[0].dipole_weight = 2.0;
        assert!(k.validate().is_err());
        k.excited[0].dipole_weight = 0.0;
        assert!(k.validate().is_err());
        let mut k = default_potassium();
        k.probe.d12 = C64::new(1.5, 0.0);
        assert!(k.validate().is_err());
    }

    #[test]
    fn nearest_level_lookup() {
        let k = default_potassium();
        assert_eq!(k.nearest_level(angular_frequency(770.0).unwrap()), 0);
        assert_eq!(k.nearest_level(angular_frequency(766.0).unwrap()), 1);
    }
}
