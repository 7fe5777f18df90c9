//! Boltzmann-weighted initial states and the thermal average of the
//! per-state observables.

use log::debug;

use crate::angular::{Axis, BasisIndex, TableSet};
use crate::error::{AlignError, Result};
use crate::exec::Execution;
use crate::propagator::{
    propagate_member, GridPartition, MemberEvolution, PropagationSettings, RevivalSpectrum,
    AUTO_MARGINS,
};
use crate::units::{
    GridSpec, InternalParams, JMax, MoleculeSpec, TemperatureSpec, BOLTZMANN, HBAR,
};

/// Default bound on the population left out of the ensemble.
pub const DEFAULT_POPULATION_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleMember {
    pub initial: BasisIndex,
    pub weight: f64,
}

/// ⟨cos²θ_x,y,z⟩ sampled on a uniform time grid (ps).
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentTrace {
    pub times: Vec<f64>,
    pub cos2_x: Vec<f64>,
    pub cos2_y: Vec<f64>,
    pub cos2_z: Vec<f64>,
}

impl AlignmentTrace {
    pub fn new(times: Vec<f64>, cos2_x: Vec<f64>, cos2_y: Vec<f64>, cos2_z: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if cos2_x.len() != n || cos2_y.len() != n || cos2_z.len() != n {
            return Err(AlignError::GridMismatch("trace columns differ in length".into()));
        }
        Ok(Self { times, cos2_x, cos2_y, cos2_z })
    }

    pub fn from_samples(times: Vec<f64>, samples: &[[f64; 3]]) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(AlignError::GridMismatch(format!(
                "{} times for {} samples",
                times.len(),
                samples.len()
            )));
        }
        let column = |a: usize| samples.iter().map(|s| s[a]).collect();
        Ok(Self { cos2_x: column(0), cos2_y: column(1), cos2_z: column(2), times })
    }

    /// Constant isotropic trace (1/3 on every axis).
    pub fn isotropic(times: Vec<f64>) -> Self {
        let n = times.len();
        Self { times, cos2_x: vec![1.0 / 3.0; n], cos2_y: vec![1.0 / 3.0; n], cos2_z: vec![1.0 / 3.0; n] }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.cos2_x,
            Axis::Y => &self.cos2_y,
            Axis::Z => &self.cos2_z,
        }
    }

    /// ⟨cos²θ_axis⟩ − 1/3 per sample.
    pub fn deviation(&self, axis: Axis) -> Vec<f64> {
        self.axis(axis).iter().map(|v| v - 1.0 / 3.0).collect()
    }

    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            return 0.0;
        }
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Largest |Σ_axes ⟨cos²θ⟩ − 1| over the trace.
    pub fn sum_rule_violation(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.cos2_x[i] + self.cos2_y[i] + self.cos2_z[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

/// Thermal populations of the rotational levels. Returns each J with its
/// total (M-summed) weight, normalized over all retained levels.
fn level_populations(mol: &MoleculeSpec, temperature: TemperatureSpec, cutoff: f64) -> Vec<(u32, f64)> {
    let kelvin = temperature.kelvin();
    if kelvin == 0.0 {
        let j = if mol.spin_weight_even > 0.0 { 0 } else { 1 };
        return vec![(j, 1.0)];
    }
    // E_J / kT with E_J = ħ·B·J(J+1), B in rad/s
    let scale = HBAR * mol.b_rad_per_ps() * 1e12 / (BOLTZMANN * kelvin);
    let mut raw = Vec::new();
    let mut j = 0u32;
    loop {
        let jf = j as f64;
        let boltz = (-scale * jf * (jf + 1.0)).exp();
        let p = mol.spin_weight(j) * (2.0 * jf + 1.0) * boltz;
        raw.push((j, p));
        // past the maximum and negligible compared with everything kept
        if jf * (jf + 1.0) * scale > 1.0 && (2.0 * jf + 3.0) * boltz < 1e-20 {
            break;
        }
        j += 1;
    }
    let total: f64 = raw.iter().map(|(_, p)| p).sum();
    // excluded[i] = population above level i, summed from the tail
    let mut excluded = vec![0.0; raw.len()];
    let mut acc = 0.0;
    for i in (0..raw.len()).rev() {
        excluded[i] = acc;
        acc += raw[i].1;
    }
    let keep = excluded.iter().position(|&e| e / total < cutoff).unwrap_or(raw.len() - 1);
    let kept: Vec<(u32, f64)> = raw[..=keep].iter().copied().filter(|(_, p)| *p > 0.0).collect();
    let kept_total: f64 = kept.iter().map(|(_, p)| p).sum();
    kept.into_iter().map(|(j, p)| (j, p / kept_total)).collect()
}

/// Initial states |J₀,M₀⟩ with Boltzmann and nuclear-spin weights, uniform in M₀.
/// Levels are kept in ascending J until the excluded population drops below
/// `cutoff`; the retained weights are renormalized to one.
pub fn boltzmann_ensemble(
    mol: &MoleculeSpec,
    temperature: TemperatureSpec,
    cutoff: f64,
) -> Result<Vec<EnsembleMember>> {
    mol.validate()?;
    if !(cutoff > 0.0 && cutoff <= 1e-4) {
        return Err(AlignError::domain(format!("population cutoff {cutoff} outside (0, 1e-4]")));
    }
    let mut members = Vec::new();
    for (j, level) in level_populations(mol, temperature, cutoff) {
        let per_m = level / (2 * j + 1) as f64;
        for m in -(j as i32)..=j as i32 {
            members.push(EnsembleMember { initial: BasisIndex { j, m }, weight: per_m });
        }
    }
    Ok(members)
}

/// Weighted sample-wise mean of per-state traces.
pub fn thermal_average(members: &[EnsembleMember], traces: &[AlignmentTrace]) -> Result<AlignmentTrace> {
    if members.len() != traces.len() || traces.is_empty() {
        return Err(AlignError::GridMismatch(format!(
            "{} members for {} traces",
            members.len(),
            traces.len()
        )));
    }
    let reference = &traces[0];
    if let Some(bad) = traces.iter().position(|t| !t.same_grid(reference)) {
        return Err(AlignError::GridMismatch(format!("trace {bad} uses a different time grid")));
    }
    let n = reference.len();
    let mut out = AlignmentTrace {
        times: reference.times.clone(),
        cos2_x: vec![0.0; n],
        cos2_y: vec![0.0; n],
        cos2_z: vec![0.0; n],
    };
    for (member, trace) in members.iter().zip(traces) {
        for i in 0..n {
            out.cos2_x[i] += member.weight * trace.cos2_x[i];
            out.cos2_y[i] += member.weight * trace.cos2_y[i];
            out.cos2_z[i] += member.weight * trace.cos2_z[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleSettings {
    pub population_cutoff: f64,
    pub propagation: PropagationSettings,
    /// Propagate only M₀ ≥ 0 and double the weight of M₀ > 0; the
    /// reflection y → −y maps |J,M⟩ to |J,−M⟩ and leaves every observable unchanged.
    pub fold_m: bool,
    pub execution: Execution,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self {
            population_cutoff: DEFAULT_POPULATION_CUTOFF,
            propagation: PropagationSettings::default(),
            fold_m: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub trace: AlignmentTrace,
    pub members: Vec<EnsembleMember>,
    /// Number of single-state propagations performed.
    pub propagated: usize,
    pub max_tail_population: f64,
    pub max_norm_drift: f64,
    pub max_j: u32,
    pub evaluations: usize,
    pub spectrum: RevivalSpectrum,
}

/// Folds ±M₀ pairs; the result stays ordered by ascending J₀, then M₀.
fn fold_members(members: &[EnsembleMember]) -> Vec<EnsembleMember> {
    members
        .iter()
        .filter(|m| m.initial.m >= 0)
        .map(|m| EnsembleMember {
            initial: m.initial,
            weight: if m.initial.m > 0 { 2.0 * m.weight } else { m.weight },
        })
        .collect()
}

/// Propagates every ensemble member and returns the thermally averaged trace.
///
/// Members are mapped in parallel; the reduction runs in ascending (J₀, M₀)
/// order so the result does not depend on scheduling.
pub fn simulate_ensemble(
    mol: &MoleculeSpec,
    params: &InternalParams,
    temperature: TemperatureSpec,
    grid: &GridSpec,
    settings: &EnsembleSettings,
) -> Result<EnsembleRun> {
    let members = boltzmann_ensemble(mol, temperature, settings.population_cutoff)?;
    let part = GridPartition::new(params, grid)?;
    let thermal_j = members.iter().map(|m| m.initial.j).max().unwrap_or(0);
    let table_j = match settings.propagation.j_max {
        JMax::Fixed(j) => {
            if j < thermal_j + 2 {
                let top = members.last().map(|m| m.initial).unwrap_or(BasisIndex { j: 0, m: 0 });
                let excluded = members.iter().filter(|m| m.initial.j > j).map(|m| m.weight).sum();
                return Err(AlignError::Truncation { initial: top, tail: excluded, j_max: j });
            }
            j
        }
        JMax::Auto => thermal_j + AUTO_MARGINS[AUTO_MARGINS.len() - 1] + 2,
    };
    let tables = TableSet::new(table_j)?;
    let work = if settings.fold_m { fold_members(&members) } else { members.clone() };
    debug!("{} ensemble members, {} propagations, thermal J <= {thermal_j}", members.len(), work.len());

    // the lowest state is kicked hardest; its basis size seeds the ladder for the rest
    let Some((first, rest)) = work.split_first() else {
        return Err(AlignError::domain("empty ensemble"));
    };
    let pilot = propagate_member(params, &tables, first.initial, &part, &settings.propagation)?;
    let mut propagation = settings.propagation;
    if propagation.j_max == JMax::Auto {
        let used = pilot.final_state.j_max() - first.initial.j;
        let below = AUTO_MARGINS.partition_point(|&m| m < used).saturating_sub(1);
        propagation.start_margin = propagation.start_margin.max(AUTO_MARGINS[below]);
    }
    let mut results: Vec<Result<MemberEvolution>> = vec![Ok(pilot)];
    results.extend(settings.execution.map(rest, |m| {
        propagate_member(params, &tables, m.initial, &part, &propagation)
    }));

    let n = part.times.len();
    let mut before = [0.0; 3];
    let mut window = vec![[0.0; 3]; part.first_free - part.first_window];
    let mut spectrum = RevivalSpectrum::empty(part.t_ref, params.b_rad);
    let (mut max_tail, mut max_drift, mut max_j, mut evaluations) = (0.0f64, 0.0f64, 0u32, 0usize);
    for (member, result) in work.iter().zip(results) {
        let evo = result?;
        let w = member.weight;
        for (acc, v) in before.iter_mut().zip(evo.before) {
            *acc += w * v;
        }
        for (acc, s) in window.iter_mut().zip(&evo.window) {
            for a in 0..3 {
                acc[a] += w * s[a];
            }
        }
        spectrum.accumulate(&evo.spectrum, w);
        max_tail = max_tail.max(evo.tail_population);
        max_drift = max_drift.max(evo.norm_drift);
        max_j = max_j.max(evo.final_state.j_max());
        evaluations += evo.stats.evaluations;
    }

    let mut samples = Vec::with_capacity(n);
    samples.extend(std::iter::repeat_n(before, part.first_window));
    samples.extend_from_slice(&window);
    samples.extend(part.times[part.first_free..].iter().map(|&t| spectrum.evaluate(t)));
    let trace = AlignmentTrace::from_samples(part.times.clone(), &samples)?;
    Ok(EnsembleRun {
        trace,
        members,
        propagated: work.len(),
        max_tail_population: max_tail,
        max_norm_drift: max_drift,
        max_j,
        evaluations,
        spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{PulseSpec, internal_units, PLANCK, SPEED_OF_LIGHT_CM_S};
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_temperature_is_ground_state() {
        let members = boltzmann_ensemble(&MoleculeSpec::co2(), TemperatureSpec(0.0), 1e-6).unwrap();
        assert_eq!(members, vec![EnsembleMember { initial: BasisIndex { j: 0, m: 0 }, weight: 1.0 }]);

        let mut odd_only = MoleculeSpec::co2();
        odd_only.spin_weight_even = 0.0;
        odd_only.spin_weight_odd = 1.0;
        let members = boltzmann_ensemble(&odd_only, TemperatureSpec(0.0), 1e-6).unwrap();
        assert_eq!(members.len(), 3);
        assert!(members.iter().all(|m| m.initial.j == 1));
    }

    #[test]
    fn cutoff_outside_range_is_rejected() {
        let mol = MoleculeSpec::co2();
        assert!(boltzmann_ensemble(&mol, TemperatureSpec(295.0), 1e-3).is_err());
        assert!(boltzmann_ensemble(&mol, TemperatureSpec(295.0), 0.0).is_err());
    }

    #[test]
    fn co2_has_no_odd_levels_and_normalized_weights() {
        let members = boltzmann_ensemble(&MoleculeSpec::co2(), TemperatureSpec(295.0), 1e-6).unwrap();
        assert!(members.iter().all(|m| m.initial.j % 2 == 0));
        let total: f64 = members.iter().map(|m| m.weight).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // ascending J, then M
        assert!(members.windows(2).all(|w| w[0].initial < w[1].initial));
    }

    /// Direct Boltzmann sum written with hc/k and no shared helpers.
    fn brute_force_levels(b_cm: f64, kelvin: f64, cutoff: f64) -> (u32, u32, usize) {
        let hc_over_k = PLANCK * SPEED_OF_LIGHT_CM_S / 1.380_649e-23;
        let pop = |j: u32| {
            if j % 2 == 1 {
                return 0.0;
            }
            let e = b_cm * (j * (j + 1)) as f64 * hc_over_k / kelvin;
            (2 * j + 1) as f64 * (-e).exp()
        };
        let z: f64 = (0..2000).map(pop).sum();
        let most = (0..2000).max_by(|&a, &b| pop(a).total_cmp(&pop(b))).unwrap();
        let mut j_last = 0;
        loop {
            let above: f64 = (j_last + 1..2000).map(pop).sum();
            if above / z < cutoff {
                break;
            }
            j_last += 1;
        }
        let j_last = if j_last % 2 == 1 { j_last - 1 } else { j_last };
        let count = (0..=j_last).filter(|j| j % 2 == 0).map(|j| (2 * j + 1) as usize).sum();
        (most, j_last, count)
    }

    #[test]
    fn room_temperature_matches_direct_summation() {
        let mol = MoleculeSpec::co2();
        let members = boltzmann_ensemble(&mol, TemperatureSpec(295.0), 1e-6).unwrap();
        let (most, j_last, count) = brute_force_levels(0.3902, 295.0, 1e-6);
        assert_eq!(most, 16);
        assert_eq!(members.len(), count);
        assert_eq!(members.last().unwrap().initial.j, j_last);
        let best = members.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
        // per-M weights peak at J = 0; the level weight (2J+1)·w peaks at 16
        assert_eq!(best.initial.j, 0);
        let level = |j: u32| members.iter().filter(|m| m.initial.j == j).map(|m| m.weight).sum::<f64>();
        let top = (0..=j_last).step_by(2).max_by(|&a, &b| level(a).total_cmp(&level(b))).unwrap();
        assert_eq!(top, most);
    }

    fn trace(values: [f64; 3]) -> AlignmentTrace {
        AlignmentTrace::from_samples(vec![0.0, 0.5], &[values, values]).unwrap()
    }

    #[test]
    fn single_member_average_is_identity() {
        let t = trace([0.2, 0.3, 0.5]);
        let m = [EnsembleMember { initial: BasisIndex { j: 2, m: 0 }, weight: 1.0 }];
        assert_eq!(thermal_average(&m, std::slice::from_ref(&t)).unwrap(), t);
    }

    #[test]
    fn two_member_average_is_affine() {
        let w = 0.3;
        let members = [
            EnsembleMember { initial: BasisIndex { j: 0, m: 0 }, weight: w },
            EnsembleMember { initial: BasisIndex { j: 2, m: 0 }, weight: 1.0 - w },
        ];
        let avg = thermal_average(&members, &[trace([0.2, 0.3, 0.5]), trace([0.4, 0.4, 0.2])]).unwrap();
        // 0.3·0.2 + 0.7·0.4 = 0.34
        assert_abs_diff_eq!(avg.cos2_x[1], 0.34, epsilon = 1e-15);
        assert_abs_diff_eq!(avg.cos2_z[0], 0.29, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = trace([0.2, 0.3, 0.5]);
        let b = AlignmentTrace::from_samples(vec![0.0, 0.6], &[[0.3; 3], [0.3; 3]]).unwrap();
        let members = [
            EnsembleMember { initial: BasisIndex { j: 0, m: 0 }, weight: 0.5 },
            EnsembleMember { initial: BasisIndex { j: 2, m: 0 }, weight: 0.5 },
        ];
        assert!(matches!(thermal_average(&members, &[a, b]), Err(AlignError::GridMismatch(_))));
    }

    #[test]
    fn zero_field_room_temperature_is_isotropic() {
        let mol = MoleculeSpec::co2();
        let params = internal_units(&mol, &PulseSpec::new(0.0, 100.0, 0.25).unwrap()).unwrap();
        let grid = GridSpec { t_start: -1.0, t_end: 12.0, dt: 0.05, j_max: JMax::Auto };
        let run = simulate_ensemble(&mol, &params, TemperatureSpec(295.0), &grid, &EnsembleSettings::default())
            .unwrap();
        for axis in Axis::ALL {
            for v in run.trace.axis(axis) {
                assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-10);
            }
        }
    }
}
