//! Single-state propagation through the pulse and analytic free evolution
//! afterwards.
//!
//! Inside the pulse window `[t₀ − 4τ, t₀ + 4τ]` the amplitudes are integrated
//! in the interaction picture of the rigid-rotor Hamiltonian, so the stepper
//! only resolves the laser coupling. Past the window every amplitude picks up
//! the phase exp(−i·B·J(J+1)·(t − t_ref)) and the observables reduce to a
//! constant plus beat terms at ω_J = B·(4J + 6), see [`RevivalSpectrum`].

mod basis;
mod integrator;

use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;

use crate::angular::{Axis, BasisIndex, TableSet};
use crate::ensemble::AlignmentTrace;
use crate::error::{AlignError, Result};
use crate::units::{GridSpec, InternalParams, JMax};

pub use basis::{BandedOperator, BlockBasis, SparseOperator, BAND_PAD};
pub use integrator::{Dopri5, StepStats, StepperConfig};

/// Successive J/M half-widths tried in automatic basis mode.
pub const AUTO_MARGINS: [u32; 16] = [8, 12, 16, 20, 24, 28, 32, 40, 48, 56, 64, 80, 96, 112, 128, 160];

/// Algebraic form of the cycle-averaged interaction.
///
/// `YZ` is (1 − 2a²)·cos²θ_y + a²·sin²θ_z, `XY` is a²·cos²θ_x + b²·cos²θ_y.
/// Both describe the same operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PotentialForm {
    #[default]
    YZ,
    XY,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationSettings {
    pub j_max: JMax,
    pub rel_tol: f64,
    /// Largest population allowed on truncated basis edges.
    pub tail_limit: f64,
    pub norm_limit: f64,
    pub form: PotentialForm,
    /// Remove the orientation average of the coupling (a global phase only).
    pub shift_coupling: bool,
    /// Smallest automatic margin worth trying; smaller ladder entries are skipped.
    pub start_margin: u32,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            j_max: JMax::Auto,
            rel_tol: 1e-10,
            tail_limit: 1e-8,
            norm_limit: 1e-8,
            form: PotentialForm::YZ,
            shift_coupling: true,
            start_margin: 0,
        }
    }
}

/// Complex amplitudes over one parity block.
#[derive(Debug, Clone)]
pub struct Wavepacket {
    pub basis: Arc<BlockBasis>,
    pub amplitudes: Vec<Complex64>,
    pub initial: BasisIndex,
    /// Time (ps) at which the amplitudes apply, Schrödinger picture.
    pub time: f64,
}

impl Wavepacket {
    pub fn eigenstate(basis: Arc<BlockBasis>, initial: BasisIndex, time: f64) -> Result<Self> {
        let idx = basis
            .index_of(initial)
            .ok_or_else(|| AlignError::domain(format!("{initial} outside its basis block")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes, initial, time })
    }

    pub fn from_amplitudes(
        basis: Arc<BlockBasis>,
        amplitudes: Vec<Complex64>,
        initial: BasisIndex,
        time: f64,
    ) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(AlignError::domain("amplitude count does not match the basis"));
        }
        Ok(Self { basis, amplitudes, initial, time })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn amplitude(&self, s: BasisIndex) -> Complex64 {
        self.basis.index_of(s).map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn population(&self, s: BasisIndex) -> f64 {
        self.amplitude(s).norm_sqr()
    }

    pub fn j_max(&self) -> u32 {
        self.basis.j_max()
    }

    /// Population within two layers of a truncated basis edge.
    pub fn tail_population(&self) -> f64 {
        self.basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .filter(|(s, _)| self.basis.is_edge(**s))
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// Free evolution by `dt` ps under B·J(J+1).
    pub fn evolved(&self, b_rad: f64, dt: f64) -> Self {
        let amplitudes = self
            .basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .map(|(s, c)| c * Complex64::from_polar(1.0, -b_rad * rotational_level(s.j) * dt))
            .collect();
        Self { amplitudes, time: self.time + dt, ..self.clone() }
    }
}

/// phases[l] = exp(i·energies[l]·dt) for levels J = j_lo + 2l. Successive
/// ratios differ by the constant factor exp(i·8B·dt), so two complex
/// exponentials suffice for the whole ladder.
fn level_phases(energies: &[f64], b_rad: f64, j_lo: u32, dt: f64, phases: &mut [Complex64]) {
    let Some(&e0) = energies.first() else { return };
    let mut phase = Complex64::from_polar(1.0, e0 * dt);
    let mut ratio = Complex64::from_polar(1.0, b_rad * (4.0 * j_lo as f64 + 6.0) * dt);
    let step = Complex64::from_polar(1.0, 8.0 * b_rad * dt);
    for (l, p) in phases.iter_mut().enumerate() {
        // re-anchor now and then so rounding cannot build up
        if l % 16 == 0 && l > 0 {
            phase = Complex64::from_polar(1.0, energies[l] * dt);
        }
        *p = phase;
        phase *= ratio;
        ratio *= step;
    }
}

fn rotational_level(j: u32) -> f64 {
    let j = j as f64;
    j * (j + 1.0)
}

/// ⟨ψ| cos²θ_axis |ψ⟩ / ⟨ψ|ψ⟩.
pub fn expectation_cos2(wp: &Wavepacket, tables: &TableSet, axis: Axis) -> f64 {
    let table = tables.get(axis);
    let mut total = 0.0;
    for (bra, c_bra) in wp.basis.states().iter().zip(&wp.amplitudes) {
        if *c_bra == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (ket, v) in table.row(*bra) {
            if let Some(i) = wp.basis.index_of(ket) {
                acc += wp.amplitudes[i] * v;
            }
        }
        total += (c_bra.conj() * acc).re;
    }
    total / wp.norm_sqr()
}

/// Time-dependent Hamiltonian H(t) = B·J(J+1) − U·Λ²(t)·W on one basis block.
pub struct Hamiltonian<'a> {
    params: &'a InternalParams,
    basis: &'a BlockBasis,
    coupling: SparseOperator,
    shift: f64,
}

/// Builds H(t) on `basis`; `apply` then gives H(t)ψ.
pub fn build_hamiltonian<'a>(
    params: &'a InternalParams,
    tables: &TableSet,
    basis: &'a BlockBasis,
    form: PotentialForm,
    shift_coupling: bool,
) -> Hamiltonian<'a> {
    let a2 = params.a2;
    let b2 = 1.0 - a2;
    let shift = if shift_coupling { 0.5 * b2 } else { 0.0 };
    let coupling = match form {
        PotentialForm::YZ => SparseOperator::assemble(
            basis,
            &[(1.0 - 2.0 * a2, &tables.y), (-a2, &tables.z)],
            a2 - shift,
        ),
        PotentialForm::XY => {
            SparseOperator::assemble(basis, &[(a2, &tables.x), (b2, &tables.y)], -shift)
        }
    };
    Hamiltonian { params, basis, coupling, shift }
}

impl Hamiltonian<'_> {
    /// Coupling strength U·Λ²(t) in rad/ps.
    pub fn strength(&self, t: f64) -> f64 {
        self.params.u_peak * self.params.envelope_squared(t)
    }

    /// Constant removed from W; contributes only the global phase U·shift·∫Λ².
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn coupling(&self) -> &SparseOperator {
        &self.coupling
    }

    /// out = H(t)·psi in the Schrödinger picture.
    pub fn apply(&self, t: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let f = self.strength(t);
        for (k, s) in self.basis.states().iter().enumerate() {
            let w: Complex64 = self.coupling.row_dot(k, psi);
            out[k] = psi[k] * (self.params.b_rad * rotational_level(s.j)) - w * f;
        }
    }
}

/// Post-pulse observables of one or many states: for each axis,
/// value(t) = constant + 2·Re Σ_J beat_J·exp(−i·B·(4J+6)·(t − t_ref)).
#[derive(Debug, Clone, PartialEq)]
pub struct RevivalSpectrum {
    pub t_ref: f64,
    pub b_rad: f64,
    pub constant: [f64; 3],
    /// Indexed by the lower J of each (J, J+2) pair.
    pub beats: Vec<[Complex64; 3]>,
}

impl RevivalSpectrum {
    pub fn empty(t_ref: f64, b_rad: f64) -> Self {
        Self { t_ref, b_rad, constant: [0.0; 3], beats: Vec::new() }
    }

    pub fn from_wavepacket(wp: &Wavepacket, tables: &TableSet, b_rad: f64) -> Self {
        let mut spectrum = Self::empty(wp.time, b_rad);
        let norm = wp.norm_sqr();
        spectrum.beats = vec![[Complex64::new(0.0, 0.0); 3]; wp.j_max() as usize + 1];
        for (a, axis) in Axis::ALL.iter().enumerate() {
            let table = tables.get(*axis);
            for (bra, c_bra) in wp.basis.states().iter().zip(&wp.amplitudes) {
                for (ket, v) in table.row(*bra) {
                    let Some(i) = wp.basis.index_of(ket) else { continue };
                    let term = c_bra.conj() * wp.amplitudes[i] * (v / norm);
                    if ket.j == bra.j {
                        spectrum.constant[a] += term.re;
                    } else if ket.j == bra.j + 2 {
                        spectrum.beats[bra.j as usize][a] += term;
                    }
                }
            }
        }
        spectrum
    }

    /// self += weight·other. Both must share t_ref and B.
    pub fn accumulate(&mut self, other: &Self, weight: f64) {
        if self.beats.len() < other.beats.len() {
            self.beats.resize(other.beats.len(), [Complex64::new(0.0, 0.0); 3]);
        }
        for a in 0..3 {
            self.constant[a] += weight * other.constant[a];
        }
        for (mine, theirs) in self.beats.iter_mut().zip(&other.beats) {
            for a in 0..3 {
                mine[a] += theirs[a] * weight;
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> [f64; 3] {
        let tau = t - self.t_ref;
        let mut out = self.constant;
        for (j, beat) in self.beats.iter().enumerate() {
            if beat.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let omega = self.b_rad * (4.0 * j as f64 + 6.0);
            let phase = Complex64::from_polar(1.0, -omega * tau);
            for a in 0..3 {
                out[a] += 2.0 * (beat[a] * phase).re;
            }
        }
        out
    }
}

/// Per-state propagation output split by time region.
#[derive(Debug, Clone)]
pub struct MemberEvolution {
    pub initial: BasisIndex,
    /// Observables of the unperturbed initial state (samples before the window).
    pub before: [f64; 3],
    /// Samples strictly inside the window, in grid order.
    pub window: Vec<[f64; 3]>,
    pub spectrum: RevivalSpectrum,
    pub final_state: Wavepacket,
    pub tail_population: f64,
    pub norm_drift: f64,
    pub stats: StepStats,
}

/// How a time grid is divided by the pulse window.
#[derive(Debug, Clone)]
pub struct GridPartition {
    pub times: Vec<f64>,
    pub window_start: f64,
    pub t_ref: f64,
    /// Index of the first sample after `window_start`.
    pub first_window: usize,
    /// Index of the first sample after `t_ref`.
    pub first_free: usize,
}

impl GridPartition {
    pub fn new(params: &InternalParams, grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        let (start, end) = params.pulse.window();
        if grid.t_start > start || grid.t_end < end {
            return Err(AlignError::domain(format!(
                "time grid [{}, {}] ps must contain the pulse window [{start}, {end}] ps",
                grid.t_start, grid.t_end
            )));
        }
        let times = grid.times();
        let first_window = times.partition_point(|&t| t <= start);
        let first_free = times.partition_point(|&t| t <= end);
        Ok(Self { times, window_start: start, t_ref: end, first_window, first_free })
    }

    pub fn window_times(&self) -> &[f64] {
        &self.times[self.first_window..self.first_free]
    }
}

fn tables_for(tables: &TableSet, j_needed: u32) -> Result<Cow<'_, TableSet>> {
    if tables.j_max() >= j_needed {
        Ok(Cow::Borrowed(tables))
    } else {
        Ok(Cow::Owned(TableSet::new(j_needed)?))
    }
}

enum WindowOutcome {
    Completed { state: Wavepacket, samples: Vec<[f64; 3]>, stats: StepStats },
    /// The edge population crossed the tail limit part way through.
    Spilled { tail: f64, time: f64 },
}

/// Integrates one basis choice through the pulse window, giving up as soon
/// as population reaches the truncated edges.
fn run_window(
    params: &InternalParams,
    tables: &TableSet,
    basis: Arc<BlockBasis>,
    initial: BasisIndex,
    part: &GridPartition,
    settings: &PropagationSettings,
) -> Result<WindowOutcome> {
    let ham = build_hamiltonian(params, tables, &basis, settings.form, settings.shift_coupling);
    let observables: Vec<SparseOperator> = Axis::ALL
        .iter()
        .map(|&a| SparseOperator::assemble(&basis, &[(1.0, tables.get(a))], 0.0))
        .collect();

    let t0 = part.window_start;
    let j_lo = basis.states().first().map_or(0, |s| s.j);
    let levels: Vec<usize> = basis.states().iter().map(|s| ((s.j - j_lo) / 2) as usize).collect();
    let energies: Vec<f64> = (0..=(basis.j_max() - j_lo) / 2)
        .map(|l| params.b_rad * rotational_level(j_lo + 2 * l))
        .collect();
    let n = basis.len();
    let edges: Vec<usize> = (0..n).filter(|&k| basis.is_edge(basis.states()[k])).collect();
    let mut phases = vec![Complex64::new(0.0, 0.0); energies.len()];
    let mut rotated = vec![Complex64::new(0.0, 0.0); n + 2 * BAND_PAD];
    let coupling = BandedOperator::from_sparse(&basis, ham.coupling());

    // interaction picture: c_k(t) = d_k(t)·exp(−i·E_k·(t − t0))
    // d' = i·U·Λ²(t)·P W P* d with P = diag(exp(i·E_k·(t − t0)))
    let mut rhs = |t: f64, d: &[Complex64], out: &mut [Complex64]| {
        let f = ham.strength(t);
        if f == 0.0 {
            out.fill(Complex64::new(0.0, 0.0));
            return;
        }
        level_phases(&energies, params.b_rad, j_lo, t - t0, &mut phases);
        for ((r, c), &l) in rotated[BAND_PAD..].iter_mut().zip(d).zip(&levels) {
            *r = c * phases[l].conj();
        }
        for (k, (o, &l)) in out.iter_mut().zip(&levels).enumerate() {
            let w = coupling.row_dot_padded(k, &rotated);
            *o = Complex64::new(0.0, f) * phases[l] * w;
        }
    };

    let to_schrodinger = |d: &[Complex64], t: f64| -> Vec<Complex64> {
        d.iter()
            .zip(&levels)
            .map(|(c, &l)| c * Complex64::from_polar(1.0, -energies[l] * (t - t0)))
            .collect()
    };

    let tau = params.pulse.fwhm_ps();
    let cfg = StepperConfig { rel_tol: settings.rel_tol, max_step: tau / 10.0, max_steps: 2_000_000 };
    let mut stepper = Dopri5::new(n, cfg, tau / 200.0);
    let mut d = Wavepacket::eigenstate(basis.clone(), initial, t0)?.amplitudes;
    let mut t = t0;
    let mut samples = Vec::with_capacity(part.window_times().len());
    // extra stops so the edge population is watched even on a coarse grid
    let checkpoint = tau / 2.0;
    let mut next_check = t0 + checkpoint;
    let mut pending = part.window_times().iter().copied().peekable();
    while t < part.t_ref {
        let sample = pending.peek().copied();
        let stop = sample.unwrap_or(part.t_ref).min(next_check).min(part.t_ref);
        stepper.integrate(&mut rhs, t, stop, &mut d)?;
        t = stop;
        let is_sample = sample == Some(stop);
        if is_sample {
            pending.next();
            let c = to_schrodinger(&d, t);
            let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            samples.push([0, 1, 2].map(|a| observables[a].expectation(&c) / norm));
        }
        if stop == next_check || is_sample {
            if stop == next_check {
                next_check += checkpoint;
            }
            let tail: f64 = edges.iter().map(|&k| d[k].norm_sqr()).sum();
            if tail >= settings.tail_limit {
                return Ok(WindowOutcome::Spilled { tail, time: t });
            }
        }
    }
    let c = to_schrodinger(&d, part.t_ref);
    let wp = Wavepacket::from_amplitudes(basis, c, initial, part.t_ref)?;
    Ok(WindowOutcome::Completed { state: wp, samples, stats: stepper.stats })
}

/// Propagates |initial⟩ through the pulse and prepares its free evolution.
pub fn propagate_member(
    params: &InternalParams,
    tables: &TableSet,
    initial: BasisIndex,
    part: &GridPartition,
    settings: &PropagationSettings,
) -> Result<MemberEvolution> {
    let margins: Vec<Option<u32>> = match settings.j_max {
        JMax::Fixed(j_max) => {
            if initial.j + 2 > j_max {
                return Err(AlignError::Truncation { initial, tail: 1.0, j_max });
            }
            vec![None]
        }
        JMax::Auto => {
            let skip = AUTO_MARGINS.partition_point(|&m| m < settings.start_margin);
            let skip = skip.min(AUTO_MARGINS.len() - 1);
            AUTO_MARGINS[skip..].iter().copied().map(Some).collect()
        }
    };

    for (i, margin) in margins.iter().enumerate() {
        let last = i + 1 == margins.len();
        let basis = Arc::new(match (margin, settings.j_max) {
            (Some(m), _) => BlockBasis::window(initial, *m),
            (None, JMax::Fixed(j_max)) => BlockBasis::full(initial, j_max),
            (None, JMax::Auto) => unreachable!(),
        });
        let local = tables_for(tables, basis.j_max())?;
        let outcome = run_window(params, &local, basis.clone(), initial, part, settings)?;
        let (wp, window, stats) = match outcome {
            WindowOutcome::Completed { state, samples, stats } => (state, samples, stats),
            WindowOutcome::Spilled { tail, time } => {
                log::debug!("{initial}: edge population {tail:e} at {time} ps with J ≤ {}", basis.j_max());
                if last {
                    return Err(AlignError::Truncation { initial, tail, j_max: basis.j_max() });
                }
                continue;
            }
        };
        let tail = wp.tail_population();
        if tail >= settings.tail_limit {
            if last {
                return Err(AlignError::Truncation { initial, tail, j_max: basis.j_max() });
            }
            continue;
        }
        let norm_drift = (wp.norm_sqr() - 1.0).abs();
        if norm_drift > settings.norm_limit {
            return Err(AlignError::NormDrift { initial, drift: norm_drift });
        }
        let before = Axis::ALL.map(|a| local.get(a).get(initial, initial));
        let spectrum = RevivalSpectrum::from_wavepacket(&wp, &local, params.b_rad);
        return Ok(MemberEvolution {
            initial,
            before,
            window,
            spectrum,
            final_state: wp,
            tail_population: tail,
            norm_drift,
            stats,
        });
    }
    unreachable!("the last attempt either returns or errors")
}

impl MemberEvolution {
    /// Observables on every sample of the partitioned grid.
    pub fn samples(&self, part: &GridPartition) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(part.times.len());
        out.extend(std::iter::repeat_n(self.before, part.first_window));
        out.extend_from_slice(&self.window);
        out.extend(part.times[part.first_free..].iter().map(|&t| self.spectrum.evaluate(t)));
        out
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub trace: AlignmentTrace,
    pub final_amplitudes: Wavepacket,
    pub tail_population: f64,
    pub norm_drift: f64,
}

/// Propagates a single initial state and evaluates its observables on `grid`.
pub fn propagate_pulse(
    params: &InternalParams,
    grid: &GridSpec,
    initial: BasisIndex,
    settings: &PropagationSettings,
) -> Result<PropagationResult> {
    let part = GridPartition::new(params, grid)?;
    let j_needed = match settings.j_max {
        JMax::Fixed(j) => j.max(2),
        JMax::Auto => initial.j + AUTO_MARGINS[AUTO_MARGINS.len() - 1] + 2,
    };
    let tables = TableSet::new(j_needed)?;
    let member = propagate_member(params, &tables, initial, &part, settings)?;
    let trace = AlignmentTrace::from_samples(part.times.clone(), &member.samples(&part))?;
    Ok(PropagationResult {
        trace,
        tail_population: member.tail_population,
        norm_drift: member.norm_drift,
        final_amplitudes: member.final_state,
    })
}
