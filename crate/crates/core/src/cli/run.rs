//! Subcommand drivers. Each one computes everything first and only then
//! writes its files, so outputs depend on the config alone.

use std::path::{Path, PathBuf};

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{Artifact, RunConfig};
use super::io;
use crate::angular::{Axis, TableSet};
use crate::ensemble::{simulate_ensemble, AlignmentTrace, EnsembleRun, EnsembleSettings};
use crate::error::{AlignError, Result};
use crate::exec::Execution;
use crate::propagator::PropagationSettings;
use crate::signal::{fit_scale, revival_peaks, RevivalPeak, ScaleFit, SignalTrace};
use crate::superposition::{
    compare_superposition, parallel_weight, perpendicular_weight, superposed_trace, LinearReference,
    SuperpositionDeviation,
};
use crate::units::internal_units;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub execution: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { output_dir: PathBuf::from("."), execution: Execution::default() }
    }
}

impl RunOptions {
    fn path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.output_dir)?;
        Ok(())
    }
}

/// Everything computed for one configuration.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub run: EnsembleRun,
    pub signal: SignalTrace,
    pub peaks_x: Vec<RevivalPeak>,
    pub peaks_y: Vec<RevivalPeak>,
}

impl Simulation {
    pub fn trace(&self) -> &AlignmentTrace {
        &self.run.trace
    }

    /// First-revival peak of one axis, zero when below threshold.
    pub fn first_revival(&self, axis: Axis) -> RevivalPeak {
        let list = if axis == Axis::X { &self.peaks_x } else { &self.peaks_y };
        list.iter().find(|p| p.index == 1).copied().unwrap_or(RevivalPeak { index: 1, time: f64::NAN, height: 0.0 })
    }
}

pub fn ensemble_settings(cfg: &RunConfig, execution: Execution) -> EnsembleSettings {
    EnsembleSettings {
        population_cutoff: cfg.population_cutoff,
        propagation: PropagationSettings { j_max: cfg.grid.j_max, ..PropagationSettings::default() },
        fold_m: true,
        execution,
    }
}

/// Ensemble, signals and revival peaks for `cfg`, without touching disk.
pub fn simulate(cfg: &RunConfig, execution: Execution) -> Result<Simulation> {
    let params = internal_units(&cfg.molecule, &cfg.pulse)?;
    let run = simulate_ensemble(&cfg.molecule, &params, cfg.temperature, &cfg.grid, &ensemble_settings(cfg, execution))?;
    info!(
        "a² = {}: {} states in {} propagations, J ≤ {}, edge population ≤ {:.2e}, norm drift ≤ {:.2e}",
        cfg.pulse.ellipticity_a2,
        run.members.len(),
        run.propagated,
        run.max_j,
        run.max_tail_population,
        run.max_norm_drift
    );
    let signal = SignalTrace::from_alignment(&run.trace, cfg.probe_fwhm)?;
    let origin = cfg.pulse.center_time;
    let peaks_x = revival_peaks(&signal, Axis::X, &cfg.molecule, origin)?;
    let peaks_y = revival_peaks(&signal, Axis::Y, &cfg.molecule, origin)?;
    Ok(Simulation { run, signal, peaks_x, peaks_y })
}

fn header(cfg: &RunConfig, notes: &[String]) -> String {
    io::header(Some(&cfg.to_config_string()), notes)
}

/// Samples after the pulse window.
fn post_pulse(cfg: &RunConfig) -> std::ops::RangeInclusive<f64> {
    cfg.pulse.window().1..=cfg.grid.t_end
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub simulation: Simulation,
    pub superposition: Option<SuperpositionDeviation>,
    pub files: Vec<PathBuf>,
}

/// The `simulate` subcommand.
pub fn run_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<SimulateReport> {
    let simulation = simulate(cfg, opts.execution)?;
    let mut superposition = None;
    let mut approx = None;
    if cfg.wants(Artifact::Superposition) {
        let reference = if cfg.pulse.ellipticity_a2 == 0.0 {
            simulation.run.trace.clone()
        } else {
            let linear = RunConfig { pulse: cfg.pulse.with_a2(0.0)?, ..cfg.clone() };
            simulate(&linear, opts.execution)?.run.trace
        };
        let estimate = superposed_trace(&LinearReference::from_trace(&reference), cfg.pulse.ellipticity_a2)?;
        superposition = Some(compare_superposition(&simulation.run.trace, &estimate, post_pulse(cfg))?);
        approx = Some(estimate);
    }

    opts.prepare()?;
    let notes = vec![format!(
        "{} thermal states, {} propagations, max J {}, max edge population {:e}, max norm drift {:e}",
        simulation.run.members.len(),
        simulation.run.propagated,
        simulation.run.max_j,
        simulation.run.max_tail_population,
        simulation.run.max_norm_drift
    )];
    let mut files = Vec::new();
    let path = opts.path("trace.csv");
    io::write_trace(&path, &header(cfg, &notes), &simulation.run.trace)?;
    files.push(path);
    if cfg.wants(Artifact::Signal) {
        let path = opts.path("signal.csv");
        io::write_signal(&path, &header(cfg, &[]), &simulation.signal)?;
        files.push(path);
    }
    if cfg.wants(Artifact::Peaks) {
        let path = opts.path("peaks.csv");
        io::write_peaks(&path, &header(cfg, &[]), &simulation.peaks_x, &simulation.peaks_y)?;
        files.push(path);
    }
    if let (Some(dev), Some(estimate)) = (superposition, approx.as_ref()) {
        let path = opts.path("superposition.csv");
        let note = format!("relative rms deviation after the pulse: x {:e}, y {:e}, z {:e}", dev.x, dev.y, dev.z);
        io::write_superposition(&path, &header(cfg, &[note]), &simulation.run.trace, estimate)?;
        files.push(path);
    }
    Ok(SimulateReport { simulation, superposition, files })
}

/// `0, step, 2·step, …, 1/2`.
pub fn a2_grid(divisions: u32) -> Vec<f64> {
    (0..=divisions).map(|k| k as f64 / (2 * divisions) as f64).collect()
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub rows: Vec<io::ScanRow>,
    pub file: PathBuf,
}

/// First-revival peaks over a list of ellipticities, each normalized to its
/// linear-polarization value.
pub fn scan_rows(cfg: &RunConfig, a2_list: &[f64], execution: Execution) -> Result<Vec<io::ScanRow>> {
    if let Some(bad) = a2_list.iter().find(|a| !(0.0..=0.5).contains(*a)) {
        return Err(AlignError::domain(format!("scan value a² = {bad} is outside [0, 1/2]")));
    }
    let mut values: Vec<f64> = a2_list.to_vec();
    if !values.contains(&0.0) {
        values.insert(0, 0.0);
    }
    let mut peaks = Vec::with_capacity(values.len());
    for &a2 in &values {
        let point = RunConfig { pulse: cfg.pulse.with_a2(a2)?, ..cfg.clone() };
        let sim = simulate(&point, execution)?;
        peaks.push((a2, sim.first_revival(Axis::Y), sim.first_revival(Axis::X)));
    }
    let (_, y0, x0) = peaks[values.iter().position(|&a| a == 0.0).expect("zero inserted")];
    if y0.height <= 0.0 || x0.height <= 0.0 {
        return Err(AlignError::domain("no first revival at a² = 0; cannot normalize the scan"));
    }
    Ok(peaks
        .into_iter()
        .filter(|(a2, _, _)| a2_list.contains(a2))
        .map(|(a2, y, x)| io::ScanRow {
            a2,
            peak_y: y.height,
            peak_x: x.height,
            time_y: y.time,
            time_x: x.time,
            norm_y: y.height / y0.height,
            norm_x: x.height / x0.height,
            closed_y: parallel_weight(a2).powi(2),
            closed_x: (perpendicular_weight(a2) / perpendicular_weight(0.0)).powi(2),
        })
        .collect())
}

/// The `scan` subcommand.
pub fn run_scan(cfg: &RunConfig, a2_list: &[f64], opts: &RunOptions) -> Result<ScanReport> {
    let rows = scan_rows(cfg, a2_list, opts.execution)?;
    opts.prepare()?;
    let file = opts.path("scan.csv");
    let note = "pulse.a2 above is replaced by the a2 column".to_string();
    io::write_scan(&file, &header(cfg, &[note]), &rows)?;
    Ok(ScanReport { rows, file })
}

#[derive(Debug, Clone)]
pub struct AxisFit {
    pub axis: Axis,
    pub fit: ScaleFit,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub fits: Vec<AxisFit>,
    pub file: PathBuf,
}

/// Fits the simulated signal for `cfg` to a measured signal file, one scale
/// per axis present in the file.
pub fn fit_signal(cfg: &RunConfig, measured: &SignalTrace, model: &SignalTrace) -> Result<Vec<AxisFit>> {
    let (m0, m1) = (measured.delays[0], measured.delays[measured.len() - 1]);
    let (s0, s1) = (model.delays[0], model.delays[model.len() - 1]);
    let (start, end) = cfg.fit.window.unwrap_or((m0.max(s0), m1.min(s1)));
    if start >= end {
        return Err(AlignError::GridMismatch("measured and model delays do not overlap".into()));
    }
    [Axis::X, Axis::Y]
        .into_iter()
        .filter(|&a| measured.axis(a).is_some())
        .map(|axis| Ok(AxisFit { axis, fit: fit_scale(measured, model, axis, start..=end)? }))
        .collect()
}

/// The `fit` subcommand. Writes `fit.csv`, then fails with the threshold
/// error if any axis residual is above `fit.threshold`.
pub fn run_fit(cfg: &RunConfig, measured_csv: &Path, opts: &RunOptions) -> Result<FitReport> {
    let measured = io::read_signal(measured_csv)?;
    let model = simulate(cfg, opts.execution)?.signal;
    let fits = fit_signal(cfg, &measured, &model)?;
    opts.prepare()?;
    let file = opts.path("fit.csv");
    let mut text = header(cfg, &[format!("measured: {}", measured_csv.display())]);
    text.push_str("axis,scale,rms_residual,samples\n");
    for f in &fits {
        text.push_str(&format!("{},{:e},{:e},{}\n", f.axis.label(), f.fit.scale, f.fit.rms_residual, f.fit.samples));
    }
    std::fs::write(&file, text)?;
    if let Some(worst) = fits.iter().find(|f| f.fit.rms_residual > cfg.fit.threshold) {
        return Err(AlignError::FitThreshold {
            axis: worst.axis.label(),
            residual: worst.fit.rms_residual,
            threshold: cfg.fit.threshold,
        });
    }
    Ok(FitReport { fits, file })
}

/// The `tables` subcommand.
pub fn run_tables(j_max: u32, opts: &RunOptions) -> Result<PathBuf> {
    let tables = TableSet::new(j_max)?;
    opts.prepare()?;
    let path = opts.path("tables.csv");
    io::write_tables(&path, &io::header(None, &[format!("J <= {j_max}")]), &tables)?;
    Ok(path)
}

/// Adds white noise of standard deviation `noise`·(column peak) to a signal.
pub fn add_noise(signal: &SignalTrace, noise: f64, seed: u64) -> Result<SignalTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = signal.clone();
    for column in [&mut out.s_x, &mut out.s_y].into_iter().flatten() {
        let peak = column.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let normal = Normal::new(0.0, noise * peak).map_err(|e| AlignError::domain(e.to_string()))?;
        for v in column.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    out.probe_fwhm = None;
    Ok(out)
}

/// Noisy synthetic measurement for `cfg`, written to `measured.csv`.
pub fn run_synth(cfg: &RunConfig, noise: f64, seed: u64, opts: &RunOptions) -> Result<PathBuf> {
    if !(noise >= 0.0) {
        return Err(AlignError::domain("noise level must be >= 0"));
    }
    let signal = add_noise(&simulate(cfg, opts.execution)?.signal, noise, seed)?;
    opts.prepare()?;
    let path = opts.path("measured.csv");
    io::write_signal(&path, &header(cfg, &[format!("synthetic: noise {noise}, seed {seed}")]), &signal)?;
    Ok(path)
}
