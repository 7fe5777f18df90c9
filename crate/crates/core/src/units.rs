//! Physical specifications and the internal unit system.
//!
//! Internally, time is measured in picoseconds and energies are angular
//! frequencies in rad/ps with ħ = 1.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use crate::error::{AlignError, Result};

/// Speed of light in cm/s.
pub const SPEED_OF_LIGHT_CM_S: f64 = 2.997_924_58e10;
/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 2.997_924_58e8;
/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permittivity in F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Bohr radius in Å; a³₀ is the atomic unit of polarizability volume.
pub const BOHR_ANGSTROM: f64 = 0.529_177_210_903;

const PS_PER_S: f64 = 1e12;
const FS_PER_PS: f64 = 1e3;

/// Unit tag carried by a polarizability anisotropy value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizabilityUnit {
    /// Polarizability volume in Å³.
    CubicAngstrom,
    /// Atomic units (a³₀ as a volume).
    Atomic,
}

impl PolarizabilityUnit {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "A3" | "Å3" | "Å³" | "angstrom3" => Some(Self::CubicAngstrom),
            "au" | "a.u." => Some(Self::Atomic),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::CubicAngstrom => "A3",
            Self::Atomic => "au",
        }
    }

    fn to_cubic_angstrom(self) -> f64 {
        match self {
            Self::CubicAngstrom => 1.0,
            Self::Atomic => BOHR_ANGSTROM.powi(3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarizability {
    pub value: f64,
    pub unit: PolarizabilityUnit,
}

impl Polarizability {
    pub fn cubic_angstrom(value: f64) -> Self {
        Self { value, unit: PolarizabilityUnit::CubicAngstrom }
    }

    /// Value expressed as a polarizability volume in Å³.
    pub fn in_cubic_angstrom(&self) -> f64 {
        self.value * self.unit.to_cubic_angstrom()
    }
}

/// Linear molecule data.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    /// Rotational constant in cm⁻¹.
    pub rotational_constant: f64,
    pub polarizability_anisotropy: Polarizability,
    pub spin_weight_even: f64,
    pub spin_weight_odd: f64,
}

impl MoleculeSpec {
    /// CO₂ ground state: B = 0.3902 cm⁻¹, Δα = 2.0 Å³, only even J.
    pub fn co2() -> Self {
        Self {
            name: "co2".to_string(),
            rotational_constant: 0.3902,
            polarizability_anisotropy: Polarizability::cubic_angstrom(2.0),
            spin_weight_even: 1.0,
            spin_weight_odd: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rotational_constant > 0.0 && self.rotational_constant.is_finite()) {
            return Err(AlignError::domain("rotational constant must be positive"));
        }
        let alpha = self.polarizability_anisotropy.value;
        if !alpha.is_finite() {
            return Err(AlignError::domain("polarizability anisotropy must be finite"));
        }
        let (even, odd) = (self.spin_weight_even, self.spin_weight_odd);
        if !(even >= 0.0 && odd >= 0.0) || !(even > 0.0 || odd > 0.0) {
            return Err(AlignError::domain(
                "spin weights must be non-negative with at least one positive",
            ));
        }
        Ok(())
    }

    pub fn spin_weight(&self, j: u32) -> f64 {
        if j % 2 == 0 {
            self.spin_weight_even
        } else {
            self.spin_weight_odd
        }
    }

    /// Rotational constant as an angular frequency in rad/ps.
    pub fn b_rad_per_ps(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT_CM_S * self.rotational_constant / PS_PER_S
    }

    /// Full revival period π/B in ps.
    pub fn revival_period(&self) -> f64 {
        PI / self.b_rad_per_ps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeShape {
    Gaussian,
}

impl fmt::Display for EnvelopeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian => f.write_str("gaussian"),
        }
    }
}

/// Pump pulse. b² = 1 − a² is derived, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    /// Peak intensity in W/cm².
    pub peak_intensity: f64,
    /// Intensity FWHM in fs.
    pub fwhm: f64,
    /// Squared relative field amplitude along the minor axis x.
    pub ellipticity_a2: f64,
    pub envelope: EnvelopeShape,
    /// Peak time in ps.
    pub center_time: f64,
    /// Carrier wavelength in nm. Informational only: the carrier is cycle-averaged away.
    pub wavelength: f64,
}

impl PulseSpec {
    pub fn new(peak_intensity: f64, fwhm: f64, ellipticity_a2: f64) -> Result<Self> {
        let pulse = Self {
            peak_intensity,
            fwhm,
            ellipticity_a2,
            envelope: EnvelopeShape::Gaussian,
            center_time: 0.0,
            wavelength: 800.0,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.ellipticity_a2) {
            return Err(AlignError::domain(format!(
                "ellipticity a2 = {} outside [0, 1/2]; swap the x and y axes instead",
                self.ellipticity_a2
            )));
        }
        if !(self.peak_intensity >= 0.0 && self.peak_intensity.is_finite()) {
            return Err(AlignError::domain("peak intensity must be non-negative"));
        }
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(AlignError::domain("pulse FWHM must be positive"));
        }
        if !self.center_time.is_finite() {
            return Err(AlignError::domain("pulse center time must be finite"));
        }
        Ok(())
    }

    pub fn b2(&self) -> f64 {
        1.0 - self.ellipticity_a2
    }

    pub fn fwhm_ps(&self) -> f64 {
        self.fwhm / FS_PER_PS
    }

    /// Integration window `[t₀ − 4τ, t₀ + 4τ]` in ps.
    pub fn window(&self) -> (f64, f64) {
        let half = 4.0 * self.fwhm_ps();
        (self.center_time - half, self.center_time + half)
    }

    pub fn with_a2(&self, a2: f64) -> Result<Self> {
        let mut pulse = self.clone();
        pulse.ellipticity_a2 = a2;
        pulse.validate()?;
        Ok(pulse)
    }
}

/// Normalized intensity envelope Λ²(t), equal to 1 at the pulse peak.
pub fn envelope_squared(pulse: &PulseSpec, t: f64) -> f64 {
    match pulse.envelope {
        EnvelopeShape::Gaussian => {
            let tau = pulse.fwhm_ps();
            let dt = t - pulse.center_time;
            (-4.0 * LN_2 * dt * dt / (tau * tau)).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JMax {
    Auto,
    Fixed(u32),
}

impl fmt::Display for JMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Fixed(j) => write!(f, "{j}"),
        }
    }
}

/// Output time grid, all times in ps.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub j_max: JMax,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_start: -1.0, t_end: 50.0, dt: 0.01, j_max: JMax::Auto }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > self.t_start) {
            return Err(AlignError::domain("grid t_end must exceed t_start"));
        }
        if !(self.dt > 0.0) {
            return Err(AlignError::domain("grid dt must be positive"));
        }
        if let JMax::Fixed(j) = self.j_max {
            if j < 2 {
                return Err(AlignError::domain("j_max must be at least 2"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample times `t_start + k·dt`; computed by multiplication so grids never drift.
    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t_start + k as f64 * self.dt).collect()
    }
}

/// Temperature in kelvin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureSpec(pub f64);

impl Default for TemperatureSpec {
    fn default() -> Self {
        Self(295.0)
    }
}

impl TemperatureSpec {
    pub fn new(kelvin: f64) -> Result<Self> {
        if !(kelvin >= 0.0 && kelvin.is_finite()) {
            return Err(AlignError::domain("temperature must be a finite value >= 0 K"));
        }
        Ok(Self(kelvin))
    }

    pub fn kelvin(&self) -> f64 {
        self.0
    }
}

/// Parameters in propagation units (ps, rad/ps).
#[derive(Debug, Clone, PartialEq)]
pub struct InternalParams {
    /// Rotational constant as angular frequency.
    pub b_rad: f64,
    /// Peak coupling Δα·E₀²/(4ħ).
    pub u_peak: f64,
    pub a2: f64,
    pub pulse: PulseSpec,
}

impl InternalParams {
    pub fn envelope_squared(&self, t: f64) -> f64 {
        envelope_squared(&self.pulse, t)
    }

    pub fn revival_period(&self) -> f64 {
        PI / self.b_rad
    }

    /// Converts back to (B in cm⁻¹, peak intensity in W/cm²) given Δα in Å³.
    pub fn to_laboratory(&self, delta_alpha_a3: f64) -> (f64, f64) {
        let b_cm = self.b_rad * PS_PER_S / (2.0 * PI * SPEED_OF_LIGHT_CM_S);
        let intensity = if delta_alpha_a3 == 0.0 {
            0.0
        } else {
            self.u_peak / coupling_per_intensity(delta_alpha_a3)
        };
        (b_cm, intensity)
    }
}

/// U_peak per unit intensity (rad/ps per W/cm²) for a polarizability volume in Å³.
///
/// With Δα_SI = 4πε₀·Δα_vol and E₀² = 2I/(ε₀c), Δα_SI·E₀²/(4ħ) = 2π·Δα_vol·I/(c·ħ).
fn coupling_per_intensity(delta_alpha_a3: f64) -> f64 {
    let alpha_si = 4.0 * PI * EPSILON_0 * delta_alpha_a3 * 1e-30;
    let e0_sq_per_intensity = 2.0 * 1e4 / (EPSILON_0 * SPEED_OF_LIGHT_M_S);
    alpha_si * e0_sq_per_intensity / (4.0 * HBAR) / PS_PER_S
}

pub fn internal_units(mol: &MoleculeSpec, pulse: &PulseSpec) -> Result<InternalParams> {
    mol.validate()?;
    pulse.validate()?;
    let alpha = mol.polarizability_anisotropy.in_cubic_angstrom();
    Ok(InternalParams {
        b_rad: mol.b_rad_per_ps(),
        u_peak: coupling_per_intensity(alpha) * pulse.peak_intensity,
        a2: pulse.ellipticity_a2,
        pulse: pulse.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn co2_revival_times() {
        let mol = MoleculeSpec::co2();
        assert_relative_eq!(mol.b_rad_per_ps(), 0.07350, max_relative = 1e-3);
        let t_rev = mol.revival_period();
        assert!((t_rev - 42.7).abs() < 0.1, "{t_rev}");
        let direct = 1.0 / (2.0 * mol.rotational_constant * SPEED_OF_LIGHT_CM_S) * 1e12;
        assert_relative_eq!(t_rev, direct, max_relative = 1e-12);
        assert!((t_rev / 4.0 - 10.7).abs() < 0.05);
    }

    #[test]
    fn zero_intensity_gives_zero_coupling() {
        let pulse = PulseSpec::new(0.0, 100.0, 0.2).unwrap();
        let p = internal_units(&MoleculeSpec::co2(), &pulse).unwrap();
        assert_eq!(p.u_peak, 0.0);
    }

    #[test]
    fn coupling_matches_hand_conversion() {
        // SI by hand: Δα = 2 Å³ = 2e-30 m³ → α = 4πε₀·2e-30 C·m²/V;
        // I = 25 TW/cm² = 2.5e17 W/m² → E₀² = 2I/(ε₀c).
        let eps0 = 8.854_187_812_8e-12;
        let c = 2.997_924_58e8;
        let hbar = 1.054_571_817e-34;
        let alpha = 4.0 * std::f64::consts::PI * eps0 * 2e-30;
        let e0_sq = 2.0 * 2.5e17 / (eps0 * c);
        let u_rad_per_s = alpha * e0_sq / (4.0 * hbar);
        let expected = u_rad_per_s * 1e-12;
        assert_relative_eq!(expected, 99.369, max_relative = 1e-4);

        let pulse = PulseSpec::new(25e12, 100.0, 0.0).unwrap();
        let p = internal_units(&MoleculeSpec::co2(), &pulse).unwrap();
        assert_relative_eq!(p.u_peak, expected, max_relative = 1e-12);
    }

    #[test]
    fn atomic_unit_tag_converts() {
        let mut mol = MoleculeSpec::co2();
        mol.polarizability_anisotropy = Polarizability {
            value: 2.0 / BOHR_ANGSTROM.powi(3),
            unit: PolarizabilityUnit::Atomic,
        };
        let pulse = PulseSpec::new(25e12, 100.0, 0.0).unwrap();
        let a = internal_units(&mol, &pulse).unwrap();
        let b = internal_units(&MoleculeSpec::co2(), &pulse).unwrap();
        assert_relative_eq!(a.u_peak, b.u_peak, max_relative = 1e-12);
        assert!(PolarizabilityUnit::parse("bohr").is_none());
    }

    #[test]
    fn envelope_peak_and_half_maximum() {
        let pulse = PulseSpec { center_time: 1.5, ..PulseSpec::new(1e12, 100.0, 0.0).unwrap() };
        assert_eq!(envelope_squared(&pulse, 1.5), 1.0);
        assert_relative_eq!(envelope_squared(&pulse, 1.55), 0.5, max_relative = 1e-14);
        assert_relative_eq!(envelope_squared(&pulse, 1.45), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn envelope_area_by_quadrature() {
        let pulse = PulseSpec::new(1e12, 80.0, 0.0).unwrap();
        let tau = pulse.fwhm_ps();
        // composite Simpson over ±10τ
        let n = 20_000;
        let (lo, hi) = (-10.0 * tau, 10.0 * tau);
        let h = (hi - lo) / n as f64;
        let mut sum = envelope_squared(&pulse, lo) + envelope_squared(&pulse, hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * envelope_squared(&pulse, lo + k as f64 * h);
        }
        let area = sum * h / 3.0;
        let expected = tau * (PI / (4.0 * LN_2)).sqrt();
        assert_relative_eq!(area, expected, max_relative = 1e-12);
    }

    #[test]
    fn ellipticity_range_is_enforced() {
        assert!(PulseSpec::new(1e12, 100.0, 0.75).is_err());
        assert!(PulseSpec::new(1e12, 100.0, -0.01).is_err());
        assert!(PulseSpec::new(1e12, 100.0, 0.5).is_ok());
    }

    #[test]
    fn molecule_validation() {
        let mut mol = MoleculeSpec::co2();
        mol.spin_weight_even = 0.0;
        assert!(mol.validate().is_err());
        mol.spin_weight_odd = 3.0;
        assert!(mol.validate().is_ok());
        mol.rotational_constant = 0.0;
        assert!(mol.validate().is_err());
    }

    #[test]
    fn grid_times_cover_range() {
        let g = GridSpec { t_start: 0.0, t_end: 1.0, dt: 0.1, j_max: JMax::Auto };
        let t = g.times();
        assert_eq!(t.len(), 11);
        assert_relative_eq!(*t.last().unwrap(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn laboratory_round_trip(b in 0.01f64..20.0, intensity in 1e9f64..1e15, alpha in 0.1f64..20.0) {
            let mol = MoleculeSpec {
                rotational_constant: b,
                polarizability_anisotropy: Polarizability::cubic_angstrom(alpha),
                ..MoleculeSpec::co2()
            };
            let pulse = PulseSpec::new(intensity, 100.0, 0.1).unwrap();
            let p = internal_units(&mol, &pulse).unwrap();
            let (b_back, i_back) = p.to_laboratory(alpha);
            prop_assert!(((b_back - b) / b).abs() < 1e-12);
            prop_assert!(((i_back - intensity) / intensity).abs() < 1e-12);
        }

        #[test]
        fn coupling_is_linear(intensity in 1e9f64..1e15, alpha in 0.1f64..20.0, k in 0.1f64..10.0) {
            let mk = |i: f64, a: f64| {
                let mol = MoleculeSpec {
                    polarizability_anisotropy: Polarizability::cubic_angstrom(a),
                    ..MoleculeSpec::co2()
                };
                internal_units(&mol, &PulseSpec::new(i, 100.0, 0.0).unwrap()).unwrap().u_peak
            };
            let base = mk(intensity, alpha);
            prop_assert!(((mk(k * intensity, alpha) - k * base) / (k * base)).abs() < 1e-12);
            prop_assert!(((mk(intensity, k * alpha) - k * base) / (k * base)).abs() < 1e-12);
        }
    }
}
