#![allow(dead_code)]

use ellipalign::ensemble::{simulate_ensemble, EnsembleRun, EnsembleSettings};
use ellipalign::exec::Execution;
use ellipalign::units::{internal_units, GridSpec, InternalParams, JMax, MoleculeSpec, PulseSpec, TemperatureSpec};

pub const TW: f64 = 1e12;

pub fn pulse(intensity: f64, a2: f64) -> PulseSpec {
    PulseSpec::new(intensity, 100.0, a2).unwrap()
}

pub fn params(intensity: f64, a2: f64) -> InternalParams {
    internal_units(&MoleculeSpec::co2(), &pulse(intensity, a2)).unwrap()
}

pub fn grid(t_start: f64, t_end: f64, dt: f64) -> GridSpec {
    GridSpec { t_start, t_end, dt, j_max: JMax::Auto }
}

pub fn sequential() -> EnsembleSettings {
    EnsembleSettings { execution: Execution::Sequential, ..EnsembleSettings::default() }
}

pub fn thermal(intensity: f64, a2: f64, kelvin: f64, grid: &GridSpec, settings: &EnsembleSettings) -> EnsembleRun {
    let mol = MoleculeSpec::co2();
    let params = params(intensity, a2);
    simulate_ensemble(&mol, &params, TemperatureSpec::new(kelvin).unwrap(), grid, settings).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Minimal config with the given overrides appended.
pub fn config_text(extra: &str) -> String {
    format!("molecule.preset = co2\npulse.intensity = 25 TW/cm2\npulse.a2 = 0\n{extra}")
}
