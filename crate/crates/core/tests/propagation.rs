mod common;

use common::*;
use ellipalign::angular::{Axis, BasisIndex};
use ellipalign::ensemble::EnsembleSettings;
use ellipalign::exec::{configure_threads, Execution};
use ellipalign::propagator::{propagate_pulse, PotentialForm, PropagationSettings};
use ellipalign::units::JMax;
use ellipalign::AlignError;

#[test]
fn potential_forms_give_identical_traces() {
    let p = params(25.0 * TW, 0.3);
    let g = grid(-0.5, 6.0, 0.01);
    for shift_coupling in [true, false] {
        let run = |form| {
            let s = PropagationSettings { form, shift_coupling, ..PropagationSettings::default() };
            propagate_pulse(&p, &g, BasisIndex { j: 4, m: 1 }, &s).unwrap().trace
        };
        let (yz, xy) = (run(PotentialForm::YZ), run(PotentialForm::XY));
        for axis in Axis::ALL {
            assert!(max_abs_diff(yz.axis(axis), xy.axis(axis)) < 1e-10, "{axis:?}, shift {shift_coupling}");
        }
    }
}

#[test]
fn folded_ensemble_equals_full_ensemble() {
    let g = grid(-1.0, 12.0, 0.02);
    let folded = thermal(25.0 * TW, 0.3, 30.0, &g, &sequential());
    let full = thermal(25.0 * TW, 0.3, 30.0, &g, &EnsembleSettings { fold_m: false, ..sequential() });
    assert!(full.propagated > folded.propagated);
    for axis in Axis::ALL {
        assert!(max_abs_diff(folded.trace.axis(axis), full.trace.axis(axis)) < 1e-12, "{axis:?}");
    }
}

#[test]
fn parallel_and_sequential_runs_are_bitwise_equal() {
    let _ = configure_threads(4);
    let g = grid(-1.0, 12.0, 0.02);
    let seq = thermal(25.0 * TW, 0.25, 30.0, &g, &sequential());
    let par = thermal(25.0 * TW, 0.25, 30.0, &g, &EnsembleSettings { execution: Execution::Parallel, ..sequential() });
    assert_eq!(seq.trace, par.trace);
    assert_eq!(seq.spectrum, par.spectrum);
}

#[test]
fn linear_and_circular_symmetries() {
    let g = grid(-1.0, 24.0, 0.02);
    let linear = thermal(25.0 * TW, 0.0, 30.0, &g, &sequential()).trace;
    let circular = thermal(25.0 * TW, 0.5, 30.0, &g, &sequential()).trace;
    let third = 1.0 / 3.0;
    assert!(max_abs_diff(&linear.cos2_x, &linear.cos2_z) < 1e-10);
    let half_y: Vec<f64> = linear.cos2_y.iter().map(|y| third - (y - third) / 2.0).collect();
    assert!(max_abs_diff(&linear.cos2_x, &half_y) < 1e-10);
    assert!(max_abs_diff(&circular.cos2_x, &circular.cos2_y) < 1e-10);
    let half_z: Vec<f64> = circular.cos2_z.iter().map(|z| third - (z - third) / 2.0).collect();
    assert!(max_abs_diff(&circular.cos2_x, &half_z) < 1e-10);
}

#[test]
fn sum_rule_and_norm_hold_for_every_member() {
    let g = grid(-1.0, 24.0, 0.02);
    for a2 in [0.0, 0.2, 1.0 / 3.0] {
        let run = thermal(50.0 * TW, a2, 30.0, &g, &sequential());
        assert!(run.trace.sum_rule_violation() < 1e-10, "a2 = {a2}: {:e}, drift {:e}", run.trace.sum_rule_violation(), run.max_norm_drift);
        assert!(run.max_norm_drift <= 1e-8);
        assert!(run.max_tail_population < 1e-8);
    }
}

#[test]
fn trace_repeats_after_a_full_revival() {
    let period = ellipalign::units::MoleculeSpec::co2().revival_period();
    let steps = 2000;
    let g = grid(-1.0, 2.2 * period, period / steps as f64);
    let run = thermal(25.0 * TW, 0.25, 30.0, &g, &sequential());
    let (_, end) = pulse(25.0 * TW, 0.25).window();
    let start = run.trace.times.iter().position(|&t| t > end).unwrap();
    for axis in Axis::ALL {
        let v = run.trace.axis(axis);
        for k in start..v.len() - steps {
            assert!((v[k] - v[k + steps]).abs() < 1e-9, "{axis:?} at {}", run.trace.times[k]);
        }
    }
}

fn first_revival_extremum(times: &[f64], dev: &[f64], period: f64) -> f64 {
    let quarter = period / 4.0;
    times
        .iter()
        .zip(dev)
        .filter(|(t, _)| (**t - quarter).abs() <= 1.5)
        .map(|(_, d)| *d)
        .fold(0.0, |best: f64, d| if d.abs() > best.abs() { d } else { best })
}

#[test]
fn halving_the_population_cutoff_barely_moves_the_revival() {
    let g = grid(-1.0, 13.0, 0.02);
    let period = ellipalign::units::MoleculeSpec::co2().revival_period();
    let base = sequential();
    let peak = |cutoff: f64| {
        let run = thermal(25.0 * TW, 0.0, 150.0, &g, &EnsembleSettings { population_cutoff: cutoff, ..base });
        first_revival_extremum(&run.trace.times, &run.trace.deviation(Axis::Y), period)
    };
    let (coarse, fine) = (peak(base.population_cutoff), peak(base.population_cutoff / 2.0));
    assert!(((coarse - fine) / fine).abs() < 0.005, "{coarse} vs {fine}");
}

#[test]
fn fixed_basis_too_small_is_a_truncation_error() {
    let mut g = grid(-1.0, 2.0, 0.02);
    g.j_max = JMax::Fixed(6);
    let err = propagate_pulse(&params(25.0 * TW, 0.0), &g, BasisIndex { j: 0, m: 0 }, &PropagationSettings {
        j_max: JMax::Fixed(6),
        ..PropagationSettings::default()
    })
    .unwrap_err();
    assert!(matches!(err, AlignError::Truncation { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}
