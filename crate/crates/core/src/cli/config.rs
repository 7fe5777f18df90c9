//! Line-oriented `section.key = value` run configuration.
//!
//! Dimensioned values carry their unit after the number
//! (`pulse.intensity = 25 TW/cm2`); dimensionless ones must not. Numbers may
//! be written as fractions (`pulse.a2 = 1/3`). Unknown keys are rejected and
//! every default that gets applied is logged.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use log::info;

use crate::error::{AlignError, Result};
use crate::signal::DEFAULT_PROBE_FWHM_FS;
use crate::units::{
    EnvelopeShape, GridSpec, JMax, MoleculeSpec, Polarizability, PolarizabilityUnit, PulseSpec,
    TemperatureSpec,
};

/// Files a run can produce besides the alignment trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Artifact {
    Trace,
    Signal,
    Peaks,
    Superposition,
}

impl Artifact {
    pub const ALL: [Artifact; 4] = [Self::Trace, Self::Signal, Self::Peaks, Self::Superposition];

    pub fn name(self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::Signal => "signal",
            Self::Peaks => "peaks",
            Self::Superposition => "superposition",
        }
    }
}

impl FromStr for Artifact {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown artifact `{s}` (expected trace, signal, peaks or superposition)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    /// Largest acceptable normalized RMS residual.
    pub threshold: f64,
    /// Delay range (ps) used by the fit; the whole overlap when absent.
    pub window: Option<(f64, f64)>,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { threshold: 0.1, window: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub molecule: MoleculeSpec,
    pub pulse: PulseSpec,
    /// Probe intensity FWHM in fs.
    pub probe_fwhm: f64,
    pub temperature: TemperatureSpec,
    /// Relative Boltzmann population left out of the ensemble.
    pub population_cutoff: f64,
    pub grid: GridSpec,
    pub outputs: Vec<Artifact>,
    pub fit: FitSpec,
    /// Cell pressure in Pa. Recorded in output headers only.
    pub pressure: Option<f64>,
}

impl RunConfig {
    pub fn wants(&self, artifact: Artifact) -> bool {
        artifact == Artifact::Trace || self.outputs.contains(&artifact)
    }

    /// Text that [`parse_config`] turns back into an identical config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let m = &self.molecule;
        let p = &self.pulse;
        let g = &self.grid;
        let mut line = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        line("molecule.name", m.name.clone());
        line("molecule.B", format!("{} cm-1", m.rotational_constant));
        line(
            "molecule.delta_alpha",
            format!("{} {}", m.polarizability_anisotropy.value, m.polarizability_anisotropy.unit.tag()),
        );
        line("molecule.spin_even", m.spin_weight_even.to_string());
        line("molecule.spin_odd", m.spin_weight_odd.to_string());
        line("pulse.intensity", format!("{} W/cm2", p.peak_intensity));
        line("pulse.fwhm", format!("{} fs", p.fwhm));
        line("pulse.a2", p.ellipticity_a2.to_string());
        line("pulse.center", format!("{} ps", p.center_time));
        line("pulse.shape", p.envelope.to_string());
        line("pulse.wavelength", format!("{} nm", p.wavelength));
        line("probe.fwhm", format!("{} fs", self.probe_fwhm));
        line("thermal.temperature", format!("{} K", self.temperature.kelvin()));
        line("thermal.cutoff", self.population_cutoff.to_string());
        line("grid.t_start", format!("{} ps", g.t_start));
        line("grid.t_end", format!("{} ps", g.t_end));
        line("grid.dt", format!("{} ps", g.dt));
        line("grid.j_max", g.j_max.to_string());
        let artifacts: Vec<&str> = self.outputs.iter().map(|a| a.name()).collect();
        line("output.artifacts", artifacts.join(", "));
        line("fit.threshold", self.fit.threshold.to_string());
        if let Some((start, end)) = self.fit.window {
            line("fit.start", format!("{start} ps"));
            line("fit.end", format!("{end} ps"));
        }
        if let Some(pa) = self.pressure {
            line("experiment.pressure", format!("{pa} Pa"));
        }
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config_string())
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Text,
    Number,
    Quantity(&'static [(&'static str, f64)]),
}

const INTENSITY: &[(&str, f64)] = &[
    ("W/cm2", 1.0),
    ("W/cm^2", 1.0),
    ("GW/cm2", 1e9),
    ("GW/cm^2", 1e9),
    ("TW/cm2", 1e12),
    ("TW/cm^2", 1e12),
    ("PW/cm2", 1e15),
    ("PW/cm^2", 1e15),
];
const DURATION_FS: &[(&str, f64)] = &[("fs", 1.0), ("ps", 1e3)];
const TIME_PS: &[(&str, f64)] = &[("ps", 1.0), ("fs", 1e-3), ("ns", 1e3)];
const WAVENUMBER: &[(&str, f64)] = &[("cm-1", 1.0), ("cm^-1", 1.0), ("1/cm", 1.0)];
const KELVIN: &[(&str, f64)] = &[("K", 1.0)];
const NANOMETRE: &[(&str, f64)] = &[("nm", 1.0), ("um", 1e3)];
const PASCAL: &[(&str, f64)] = &[("Pa", 1.0), ("kPa", 1e3), ("bar", 1e5), ("mbar", 1e2)];
// polarizability tags are resolved separately, listed here for messages only
const POLARIZABILITY: &[(&str, f64)] = &[("A3", 1.0), ("au", 1.0)];

const KEYS: &[(&str, Kind)] = &[
    ("molecule.preset", Kind::Text),
    ("molecule.name", Kind::Text),
    ("molecule.B", Kind::Quantity(WAVENUMBER)),
    ("molecule.delta_alpha", Kind::Quantity(POLARIZABILITY)),
    ("molecule.spin_even", Kind::Number),
    ("molecule.spin_odd", Kind::Number),
    ("pulse.intensity", Kind::Quantity(INTENSITY)),
    ("pulse.fwhm", Kind::Quantity(DURATION_FS)),
    ("pulse.a2", Kind::Number),
    ("pulse.center", Kind::Quantity(TIME_PS)),
    ("pulse.shape", Kind::Text),
    ("pulse.wavelength", Kind::Quantity(NANOMETRE)),
    ("probe.fwhm", Kind::Quantity(DURATION_FS)),
    ("thermal.temperature", Kind::Quantity(KELVIN)),
    ("thermal.cutoff", Kind::Number),
    ("grid.t_start", Kind::Quantity(TIME_PS)),
    ("grid.t_end", Kind::Quantity(TIME_PS)),
    ("grid.dt", Kind::Quantity(TIME_PS)),
    ("grid.j_max", Kind::Text),
    ("output.artifacts", Kind::Text),
    ("fit.threshold", Kind::Number),
    ("fit.start", Kind::Quantity(TIME_PS)),
    ("fit.end", Kind::Quantity(TIME_PS)),
    ("experiment.pressure", Kind::Quantity(PASCAL)),
];

/// Plain decimal or `p/q`.
fn parse_number(text: &str) -> Option<f64> {
    let value = match text.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?,
        None => text.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

struct Entry {
    line: usize,
    raw: String,
}

struct Entries {
    map: HashMap<&'static str, Entry>,
}

impl Entries {
    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.line)
    }

    fn text(&self, key: &'static str) -> Option<(&str, usize)> {
        self.map.get(key).map(|e| (e.raw.as_str(), e.line))
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>> {
        let Some((raw, line)) = self.text(key) else { return Ok(None) };
        parse_number(raw)
            .map(Some)
            .ok_or_else(|| AlignError::config(key, line, format!("`{raw}` is not a dimensionless number")))
    }

    /// Value converted to the key's base unit, plus the unit as written.
    fn quantity(&self, key: &'static str) -> Result<Option<(f64, String)>> {
        let Some((raw, line)) = self.text(key) else { return Ok(None) };
        let Some((_, Kind::Quantity(units))) = KEYS.iter().find(|(k, _)| *k == key) else {
            unreachable!("quantity lookup on a non-quantity key")
        };
        let expected = || units.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ");
        let (number, unit) = match raw.split_once(char::is_whitespace) {
            Some((n, u)) => (n, u.trim()),
            None => {
                return Err(AlignError::config(key, line, format!("missing unit (expected one of {})", expected())))
            }
        };
        let value = parse_number(number)
            .ok_or_else(|| AlignError::config(key, line, format!("`{number}` is not a number")))?;
        if key == "molecule.delta_alpha" {
            return if PolarizabilityUnit::parse(unit).is_some() {
                Ok(Some((value, unit.to_string())))
            } else {
                Err(AlignError::config(key, line, format!("unknown unit `{unit}` (expected one of {})", expected())))
            };
        }
        let factor = units.iter().find(|(u, _)| *u == unit).map(|(_, f)| *f).ok_or_else(|| {
            AlignError::config(key, line, format!("unknown unit `{unit}` (expected one of {})", expected()))
        })?;
        Ok(Some((value * factor, unit.to_string())))
    }

    fn value(&self, key: &'static str) -> Result<Option<f64>> {
        Ok(self.quantity(key)?.map(|(v, _)| v))
    }
}

fn defaulted<T: fmt::Display>(key: &str, value: Option<T>, default: T, shown: &str) -> T {
    value.unwrap_or_else(|| {
        info!("default applied: {key} = {shown}");
        default
    })
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map: HashMap<&'static str, Entry> = HashMap::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(AlignError::config(content, line, "expected `section.key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&(known, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(AlignError::config(key, line, "unknown key"));
        };
        if value.is_empty() {
            return Err(AlignError::config(key, line, "empty value"));
        }
        if let Kind::Number = kind {
            if value.split_whitespace().count() > 1 {
                return Err(AlignError::config(key, line, "dimensionless value takes no unit"));
            }
        }
        if let Some(previous) = map.insert(known, Entry { line, raw: value.to_string() }) {
            return Err(AlignError::config(key, line, format!("duplicate key, first set on line {}", previous.line)));
        }
    }
    let e = Entries { map };

    let molecule = build_molecule(&e)?;
    let pulse = build_pulse(&e)?;

    let probe_fwhm = defaulted("probe.fwhm", e.value("probe.fwhm")?, DEFAULT_PROBE_FWHM_FS, "100 fs");
    if !(probe_fwhm > 0.0) {
        return Err(AlignError::config("probe.fwhm", e.line("probe.fwhm"), "must be positive"));
    }

    let kelvin = defaulted("thermal.temperature", e.value("thermal.temperature")?, 295.0, "295 K");
    let temperature = TemperatureSpec::new(kelvin)
        .map_err(|err| AlignError::config("thermal.temperature", e.line("thermal.temperature"), err.to_string()))?;
    let population_cutoff = defaulted("thermal.cutoff", e.number("thermal.cutoff")?, 1e-6, "1e-6");
    if !(population_cutoff > 0.0 && population_cutoff <= 1e-4) {
        return Err(AlignError::config("thermal.cutoff", e.line("thermal.cutoff"), "must lie in (0, 1e-4]"));
    }

    let base = GridSpec::default();
    let j_max = match e.text("grid.j_max") {
        None => defaulted("grid.j_max", None, JMax::Auto, "auto"),
        Some(("auto", _)) => JMax::Auto,
        Some((raw, line)) => JMax::Fixed(
            raw.parse::<u32>()
                .map_err(|_| AlignError::config("grid.j_max", line, "expected `auto` or an integer"))?,
        ),
    };
    let grid = GridSpec {
        t_start: defaulted("grid.t_start", e.value("grid.t_start")?, base.t_start, "-1 ps"),
        t_end: defaulted("grid.t_end", e.value("grid.t_end")?, base.t_end, "50 ps"),
        dt: defaulted("grid.dt", e.value("grid.dt")?, base.dt, "0.01 ps"),
        j_max,
    };
    grid.validate().map_err(|err| {
        let key = if !(grid.dt > 0.0) {
            "grid.dt"
        } else if matches!(grid.j_max, JMax::Fixed(_)) && grid.t_end > grid.t_start {
            "grid.j_max"
        } else {
            "grid.t_end"
        };
        AlignError::config(key, e.line(key), err.to_string())
    })?;

    let outputs = match e.text("output.artifacts") {
        None => {
            info!("default applied: output.artifacts = trace, signal, peaks");
            vec![Artifact::Trace, Artifact::Signal, Artifact::Peaks]
        }
        Some((raw, line)) => {
            let mut list = Vec::new();
            for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let artifact = item.parse::<Artifact>().map_err(|m| AlignError::config("output.artifacts", line, m))?;
                if !list.contains(&artifact) {
                    list.push(artifact);
                }
            }
            list
        }
    };

    let fit = FitSpec {
        threshold: defaulted("fit.threshold", e.number("fit.threshold")?, FitSpec::default().threshold, "0.1"),
        window: match (e.value("fit.start")?, e.value("fit.end")?) {
            (None, None) => None,
            (Some(start), Some(end)) if end > start => Some((start, end)),
            (Some(_), Some(_)) => {
                return Err(AlignError::config("fit.end", e.line("fit.end"), "must exceed fit.start"))
            }
            (None, Some(_)) => return Err(AlignError::MissingKey { key: "fit.start".into() }),
            (Some(_), None) => return Err(AlignError::MissingKey { key: "fit.end".into() }),
        },
    };
    if !(fit.threshold > 0.0) {
        return Err(AlignError::config("fit.threshold", e.line("fit.threshold"), "must be positive"));
    }

    let pressure = e.value("experiment.pressure")?;
    if let Some(pa) = pressure {
        if pa < 0.0 {
            return Err(AlignError::config("experiment.pressure", e.line("experiment.pressure"), "must be >= 0"));
        }
        info!("experiment.pressure = {pa} Pa is recorded but does not enter the simulation");
    }

    Ok(RunConfig { molecule, pulse, probe_fwhm, temperature, population_cutoff, grid, outputs, fit, pressure })
}

fn build_molecule(e: &Entries) -> Result<MoleculeSpec> {
    let preset = match e.text("molecule.preset") {
        Some(("co2" | "CO2", _)) => Some(MoleculeSpec::co2()),
        Some((other, line)) => {
            return Err(AlignError::config("molecule.preset", line, format!("unknown preset `{other}` (known: co2)")))
        }
        None => None,
    };
    let b = e.value("molecule.B")?;
    let alpha = e.quantity("molecule.delta_alpha")?;
    let mut mol = match preset {
        Some(mol) => mol,
        None => {
            if b.is_none() {
                return Err(AlignError::MissingKey { key: "molecule.preset".into() });
            }
            if alpha.is_none() {
                return Err(AlignError::MissingKey { key: "molecule.delta_alpha".into() });
            }
            MoleculeSpec {
                name: defaulted("molecule.name", None, "molecule".to_string(), "molecule"),
                rotational_constant: 0.0,
                polarizability_anisotropy: Polarizability::cubic_angstrom(0.0),
                spin_weight_even: defaulted("molecule.spin_even", None, 1.0, "1"),
                spin_weight_odd: defaulted("molecule.spin_odd", None, 1.0, "1"),
            }
        }
    };
    if let Some((name, _)) = e.text("molecule.name") {
        mol.name = name.to_string();
    }
    if let Some(b) = b {
        mol.rotational_constant = b;
    }
    if let Some((value, tag)) = alpha {
        let unit = PolarizabilityUnit::parse(&tag).expect("tag checked while parsing");
        mol.polarizability_anisotropy = Polarizability { value, unit };
    }
    if let Some(w) = e.number("molecule.spin_even")? {
        mol.spin_weight_even = w;
    }
    if let Some(w) = e.number("molecule.spin_odd")? {
        mol.spin_weight_odd = w;
    }
    mol.validate().map_err(|err| {
        let key = if !(mol.rotational_constant > 0.0) {
            "molecule.B"
        } else if !(mol.polarizability_anisotropy.value.is_finite()) {
            "molecule.delta_alpha"
        } else {
            "molecule.spin_even"
        };
        AlignError::config(key, e.line(key), err.to_string())
    })?;
    Ok(mol)
}

fn build_pulse(e: &Entries) -> Result<PulseSpec> {
    let intensity = e.value("pulse.intensity")?.ok_or_else(|| AlignError::MissingKey { key: "pulse.intensity".into() })?;
    if !(intensity >= 0.0) {
        return Err(AlignError::config("pulse.intensity", e.line("pulse.intensity"), "must be >= 0"));
    }
    let a2 = e.number("pulse.a2")?.ok_or_else(|| AlignError::MissingKey { key: "pulse.a2".into() })?;
    if !(0.0..=0.5).contains(&a2) {
        return Err(AlignError::config(
            "pulse.a2",
            e.line("pulse.a2"),
            format!("a² = {a2} is outside [0, 1/2]; values above 1/2 amount to swapping x and y"),
        ));
    }
    let fwhm = defaulted("pulse.fwhm", e.value("pulse.fwhm")?, 100.0, "100 fs");
    if !(fwhm > 0.0) {
        return Err(AlignError::config("pulse.fwhm", e.line("pulse.fwhm"), "must be positive"));
    }
    let envelope = match e.text("pulse.shape") {
        None => defaulted("pulse.shape", None, EnvelopeShape::Gaussian, "gaussian"),
        Some(("gaussian", _)) => EnvelopeShape::Gaussian,
        Some((other, line)) => {
            return Err(AlignError::config("pulse.shape", line, format!("unknown envelope `{other}` (supported: gaussian)")))
        }
    };
    let center_time = defaulted("pulse.center", e.value("pulse.center")?, 0.0, "0 ps");
    let wavelength = defaulted("pulse.wavelength", e.value("pulse.wavelength")?, 800.0, "800 nm");
    let pulse = PulseSpec { peak_intensity: intensity, fwhm, ellipticity_a2: a2, envelope, center_time, wavelength };
    pulse.validate().map_err(|err| AlignError::config("pulse", 0, err.to_string()))?;
    Ok(pulse)
}
