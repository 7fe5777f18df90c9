//! Room-temperature runs at three intensities, shared by every test here.

mod common;

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use common::*;
use ellipalign::angular::Axis;
use ellipalign::ensemble::AlignmentTrace;
use ellipalign::superposition::{compare_superposition, superposed_trace, LinearReference, SuperpositionDeviation};

const INTENSITIES: [f64; 3] = [12.5, 25.0, 50.0];

fn room(intensity_tw: f64, a2: f64) -> AlignmentTrace {
    static CACHE: OnceLock<Mutex<BTreeMap<(u64, u64), AlignmentTrace>>> = OnceLock::new();
    let key = (intensity_tw.to_bits(), a2.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(trace) = cache.lock().unwrap().get(&key) {
        return trace.clone();
    }
    let trace = thermal(intensity_tw * TW, a2, 295.0, &grid(-1.0, 25.0, 0.01), &sequential()).trace;
    cache.lock().unwrap().entry(key).or_insert(trace).clone()
}

fn plateau(trace: &AlignmentTrace) -> (f64, f64) {
    let dev = trace.deviation(Axis::Y);
    let values: Vec<f64> =
        trace.times.iter().zip(&dev).filter(|(t, _)| (3.0..=8.0).contains(*t)).map(|(_, d)| *d).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (values.iter().sum::<f64>() / values.len() as f64, hi - lo)
}

#[test]
fn permanent_alignment_is_flat_and_grows_with_intensity() {
    let mut previous = 0.0;
    for i in INTENSITIES {
        let (offset, spread) = plateau(&room(i, 0.0));
        assert!(offset > 0.0);
        assert!(spread < 0.05 * offset);
        assert!(offset > previous);
        previous = offset;
    }
}

fn circular_deviation(intensity_tw: f64) -> SuperpositionDeviation {
    let full = room(intensity_tw, 0.5);
    let approx = superposed_trace(&LinearReference::from_trace(&room(intensity_tw, 0.0)), 0.5).unwrap();
    let window = pulse(intensity_tw * TW, 0.5).window().1..=25.0;
    compare_superposition(&full, &approx, window).unwrap()
}

/// Relative RMS of the superposition estimate at a² = 1/2, 25 TW/cm², measured
/// on the first baseline run (0.71200) and frozen.
const CIRCULAR_DEVIATION_25TW: f64 = 0.71200;

#[test]
fn superposition_error_for_circular_polarization() {
    let mut previous = 0.0;
    for i in INTENSITIES {
        let dev = circular_deviation(i);
        assert!((dev.x - dev.y).abs() < 1e-9, "{dev:?}");
        let worst = dev.x.max(dev.y).max(dev.z);
        if i == 25.0 {
            assert!((worst - CIRCULAR_DEVIATION_25TW).abs() < 5e-4, "{worst}");
        }
        assert!(worst > previous, "{i} TW/cm2: {worst} after {previous}");
        previous = worst;
    }
}
