mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use common::*;
use ellipalign::angular::Axis;
use ellipalign::cli::run::add_noise;
use ellipalign::ensemble::AlignmentTrace;
use ellipalign::signal::{defocusing_signal, fit_scale, reconstruct_z, revival_peaks, SignalTrace};
use ellipalign::units::MoleculeSpec;

const PROBE_FS: f64 = 100.0;

fn cold_trace(a2: f64) -> &'static AlignmentTrace {
    static LINEAR: OnceLock<AlignmentTrace> = OnceLock::new();
    static QUARTER: OnceLock<AlignmentTrace> = OnceLock::new();
    let cell = if a2 == 0.0 { &LINEAR } else { &QUARTER };
    cell.get_or_init(|| thermal(25.0 * TW, a2, 50.0, &grid(-1.0, 25.0, 0.01), &sequential()).trace)
}

fn cold_signal(a2: f64) -> SignalTrace {
    SignalTrace::from_alignment(cold_trace(a2), PROBE_FS).unwrap()
}

#[test]
fn narrow_probe_reproduces_squared_deviation() {
    let run = thermal(25.0 * TW, 0.0, 50.0, &grid(-0.5, 12.0, 0.002), &sequential());
    for axis in [Axis::X, Axis::Y] {
        let squared: Vec<f64> = run.trace.deviation(axis).iter().map(|d| d * d).collect();
        let peak = squared.iter().cloned().fold(0.0, f64::max);
        let s = defocusing_signal(&run.trace, axis, 5.0 * 2.0).unwrap();
        assert!(max_abs_diff(&s, &squared) < 0.01 * peak, "{axis:?}");
    }
}

#[test]
fn noisy_measurements_recover_unit_scale() {
    let model = cold_signal(0.0);
    let window = 0.5..=25.0;
    for axis in [Axis::X, Axis::Y] {
        let scales: Vec<f64> = (0..100)
            .map(|seed| {
                let measured = add_noise(&model, 0.05, seed).unwrap();
                fit_scale(&measured, &model, axis, window.clone()).unwrap().scale
            })
            .collect();
        let mean = scales.iter().sum::<f64>() / scales.len() as f64;
        let inside = scales.iter().filter(|s| (**s - 1.0).abs() <= 0.02).count();
        assert!((mean - 1.0).abs() < 0.005, "{axis:?}: mean {mean}");
        assert!(inside >= 95, "{axis:?}: {inside} of 100 inside 1 ± 0.02");
    }
}

#[test]
fn wrong_ellipticity_shows_in_the_residual() {
    let linear = cold_signal(0.0);
    let quarter = cold_signal(0.25);
    let window = 0.5..=25.0;
    let measured = add_noise(&quarter, 0.01, 7).unwrap();
    let floor = fit_scale(&measured, &quarter, Axis::X, window.clone()).unwrap();
    let cross = fit_scale(&measured, &linear, Axis::X, window).unwrap();
    assert!(cross.rms_residual > 5.0 * floor.rms_residual, "{} vs floor {}", cross.rms_residual, floor.rms_residual);
}

#[test]
fn linear_polarization_peak_ratio_is_four() {
    let signal = cold_signal(0.0);
    let mol = MoleculeSpec::co2();
    let x = revival_peaks(&signal, Axis::X, &mol, 0.0).unwrap();
    let y = revival_peaks(&signal, Axis::Y, &mol, 0.0).unwrap();
    assert!(!x.is_empty());
    for (px, py) in x.iter().zip(&y) {
        assert_eq!(px.index, py.index);
        assert!((py.height / px.height - 4.0).abs() < 1e-6);
    }
}

#[test]
fn reconstructed_z_closes_the_sum_rule() {
    let trace = cold_trace(0.25);
    let z = reconstruct_z(trace);
    assert!(max_abs_diff(&z, &trace.cos2_z) < 1e-10);
}

fn synthetic(times: Vec<f64>, amps: &[f64], freqs: &[f64]) -> AlignmentTrace {
    let x: Vec<f64> = times
        .iter()
        .map(|t| 1.0 / 3.0 + amps.iter().zip(freqs).map(|(a, f)| a * (f * t).sin()).sum::<f64>())
        .collect();
    let y: Vec<f64> = x.iter().map(|x| 1.0 / 3.0 - 0.5 * (x - 1.0 / 3.0)).collect();
    let z: Vec<f64> = x.iter().zip(&y).map(|(x, y)| 1.0 - x - y).collect();
    AlignmentTrace::new(times, x, y, z).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signal_is_translation_covariant(
        shift in -50.0f64..50.0,
        amps in prop::collection::vec(-0.1f64..0.1, 3),
        freqs in prop::collection::vec(0.1f64..20.0, 3),
    ) {
        let n = 400;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let moved: Vec<f64> = times.iter().map(|t| t + shift).collect();
        let a = synthetic(times, &amps, &freqs);
        let mut b = a.clone();
        b.times = moved;
        for axis in Axis::ALL {
            let sa = defocusing_signal(&a, axis, PROBE_FS).unwrap();
            let sb = defocusing_signal(&b, axis, PROBE_FS).unwrap();
            let scale = sa.iter().cloned().fold(1e-300, f64::max);
            prop_assert!(max_abs_diff(&sa, &sb) <= 1e-12 * scale);
        }
    }

    #[test]
    fn signal_is_linear_in_squared_deviation(
        amps in prop::collection::vec(-0.1f64..0.1, 3),
        freqs in prop::collection::vec(0.1f64..20.0, 3),
    ) {
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.01).collect();
        let a = synthetic(times.clone(), &amps, &freqs);
        let scaled: Vec<f64> = amps.iter().map(|a| a * 2f64.sqrt()).collect();
        let b = synthetic(times, &scaled, &freqs);
        let sa = defocusing_signal(&a, Axis::X, PROBE_FS).unwrap();
        let sb = defocusing_signal(&b, Axis::X, PROBE_FS).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn scale_fit_recovers_any_factor(k in 0.01f64..100.0, amp in 0.01f64..0.2, f in 0.5f64..5.0) {
        let times: Vec<f64> = (0..2500).map(|i| i as f64 * 0.01).collect();
        let trace = synthetic(times, &[amp], &[f]);
        let model = SignalTrace::from_alignment(&trace, PROBE_FS).unwrap();
        let scaled = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v.iter().map(|s| k * s).collect());
        let measured = SignalTrace::new(model.delays.clone(), scaled(&model.s_x), scaled(&model.s_y)).unwrap();
        let fit = fit_scale(&measured, &model, Axis::Y, 0.0..=25.0).unwrap();
        prop_assert!((fit.scale - k).abs() <= 1e-12 * k);
        prop_assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn revival_peaks_follow_a_time_shift(shift in -20.0f64..20.0) {
        let mol = MoleculeSpec::co2();
        let base = cold_signal(0.0);
        let moved = SignalTrace::new(
            base.delays.iter().map(|t| t + shift).collect(),
            base.s_x.clone(),
            base.s_y.clone(),
        ).unwrap();
        let a = revival_peaks(&base, Axis::Y, &mol, 0.0).unwrap();
        let b = revival_peaks(&moved, Axis::Y, &mol, shift).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!(p.index, q.index);
            prop_assert_eq!(p.height, q.height);
            prop_assert!((q.time - p.time - shift).abs() < 1e-9);
        }
    }
}
