//! Elliptical alignment pictured as two cross-polarized linear pulses.
//!
//! A pulse with field weights (a², b²) along (x, y) acts, to first order in
//! the intensity, like a linear pulse along y of weight b² plus one along x
//! of weight a². With A the post-pulse deviation ⟨cos²θ_y⟩ − 1/3 of a purely
//! y-polarized pulse and −A/2 its deviation on the perpendicular axes:
//!
//! * y: b²·A − a²·A/2 = (1 − 3a²/2)·A
//! * x: a²·A − b²·A/2 = ((3a² − 1)/2)·A

use std::ops::RangeInclusive;

use crate::ensemble::AlignmentTrace;
use crate::error::{AlignError, Result};

/// y-axis deviation of a linearly polarized run with the same envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReference {
    pub times: Vec<f64>,
    pub a_parallel: Vec<f64>,
}

impl LinearReference {
    /// Takes the y deviation of a trace computed at a² = 0.
    pub fn from_trace(trace: &AlignmentTrace) -> Self {
        Self { times: trace.times.clone(), a_parallel: trace.deviation(crate::angular::Axis::Y) }
    }

    /// Deviation along either axis perpendicular to the field.
    pub fn a_perpendicular(&self) -> Vec<f64> {
        self.a_parallel.iter().map(|a| -a / 2.0).collect()
    }
}

/// Approximate deviations from 1/3 predicted by the superposition picture.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperposedTrace {
    pub times: Vec<f64>,
    pub a2: f64,
    pub dev_x: Vec<f64>,
    pub dev_y: Vec<f64>,
}

impl SuperposedTrace {
    /// z deviation implied by the sum rule.
    pub fn dev_z(&self) -> Vec<f64> {
        self.dev_x.iter().zip(&self.dev_y).map(|(x, y)| -x - y).collect()
    }

    pub fn to_alignment_trace(&self) -> Result<AlignmentTrace> {
        let third = 1.0 / 3.0;
        AlignmentTrace::new(
            self.times.clone(),
            self.dev_x.iter().map(|d| third + d).collect(),
            self.dev_y.iter().map(|d| third + d).collect(),
            self.dev_z().iter().map(|d| third + d).collect(),
        )
    }
}

/// Weight of A on the y axis.
pub fn parallel_weight(a2: f64) -> f64 {
    1.0 - 1.5 * a2
}

/// Weight of A on the x axis.
pub fn perpendicular_weight(a2: f64) -> f64 {
    (3.0 * a2 - 1.0) / 2.0
}

pub fn superposed_trace(reference: &LinearReference, a2: f64) -> Result<SuperposedTrace> {
    if !(0.0..=0.5).contains(&a2) {
        return Err(AlignError::domain(format!("a² must lie in [0, 1/2], got {a2}")));
    }
    let (wy, wx) = (parallel_weight(a2), perpendicular_weight(a2));
    Ok(SuperposedTrace {
        times: reference.times.clone(),
        a2,
        dev_x: reference.a_parallel.iter().map(|a| wx * a).collect(),
        dev_y: reference.a_parallel.iter().map(|a| wy * a).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagicEllipticity {
    pub a2: f64,
    /// Waveplate input angle θ with cos²θ = 1/3, in degrees.
    pub angle_deg: f64,
}

/// Ellipticity at which the x axis is left unaligned, 1 − 2a² = a².
pub fn magic_ellipticity() -> MagicEllipticity {
    MagicEllipticity { a2: 1.0 / 3.0, angle_deg: 2f64.sqrt().atan().to_degrees() }
}

/// RMS(full − approx) / RMS(full) per axis, on deviations from 1/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionDeviation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

fn relative_rms(full: &[f64], approx: &[f64]) -> f64 {
    let diff: f64 = full.iter().zip(approx).map(|(f, a)| (f - a).powi(2)).sum();
    let norm: f64 = full.iter().map(|f| f * f).sum();
    if norm == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (diff / norm).sqrt()
    }
}

/// Compares a full simulation with the superposition estimate on the
/// samples inside `window` (ps).
pub fn compare_superposition(
    full: &AlignmentTrace,
    approx: &SuperposedTrace,
    window: RangeInclusive<f64>,
) -> Result<SuperpositionDeviation> {
    if full.times != approx.times {
        return Err(AlignError::GridMismatch("full and approximate traces use different grids".into()));
    }
    let keep: Vec<usize> = (0..full.len()).filter(|&k| window.contains(&full.times[k])).collect();
    if keep.is_empty() {
        return Err(AlignError::domain(format!(
            "comparison window [{}, {}] ps holds no samples",
            window.start(),
            window.end()
        )));
    }
    let pick = |v: &[f64], offset: f64| -> Vec<f64> { keep.iter().map(|&k| v[k] - offset).collect() };
    let third = 1.0 / 3.0;
    let approx_z = approx.dev_z();
    Ok(SuperpositionDeviation {
        x: relative_rms(&pick(&full.cos2_x, third), &pick(&approx.dev_x, 0.0)),
        y: relative_rms(&pick(&full.cos2_y, third), &pick(&approx.dev_y, 0.0)),
        z: relative_rms(&pick(&full.cos2_z, third), &pick(&approx_z, 0.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference() -> LinearReference {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let a_parallel = times.iter().map(|t| 0.1 * (3.0 * t).sin()).collect();
        LinearReference { times, a_parallel }
    }

    #[test]
    fn quarter_ellipticity_weights() {
        let r = reference();
        let s = superposed_trace(&r, 0.25).unwrap();
        for ((a, x), y) in r.a_parallel.iter().zip(&s.dev_x).zip(&s.dev_y) {
            assert_abs_diff_eq!(*y, 5.0 * a / 8.0, epsilon = 1e-15);
            assert_abs_diff_eq!(*x, -a / 8.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn linear_limit_reproduces_reference() {
        let r = reference();
        let s = superposed_trace(&r, 0.0).unwrap();
        assert_eq!(s.dev_y, r.a_parallel);
        assert_eq!(s.dev_x, r.a_perpendicular());
    }

    #[test]
    fn magic_value_cancels_x() {
        let m = magic_ellipticity();
        assert_abs_diff_eq!(1.0 - 2.0 * m.a2, m.a2, epsilon = 1e-15);
        assert_abs_diff_eq!(m.angle_deg.to_radians().cos().powi(2), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.angle_deg, 54.7356, epsilon = 1e-4);
        let s = superposed_trace(&reference(), m.a2).unwrap();
        assert!(s.dev_x.iter().all(|x| x.abs() < 1e-16));
        // magic-angle style cancellation A∥/3 + 2·A⊥/3
        let r = reference();
        for (a, p) in r.a_parallel.iter().zip(r.a_perpendicular()) {
            assert_abs_diff_eq!(a / 3.0 + 2.0 * p / 3.0, 0.0, epsilon = 1e-16);
        }
    }

    #[test]
    fn circular_limit_is_symmetric() {
        let s = superposed_trace(&reference(), 0.5).unwrap();
        assert_eq!(s.dev_x, s.dev_y);
    }

    #[test]
    fn out_of_range_ellipticity() {
        assert!(superposed_trace(&reference(), 0.6).is_err());
        assert!(superposed_trace(&reference(), -0.1).is_err());
    }

    #[test]
    fn self_comparison_is_exact() {
        let r = reference();
        let s = superposed_trace(&r, 0.0).unwrap();
        let full = s.to_alignment_trace().unwrap();
        let d = compare_superposition(&full, &s, 0.0..=10.0).unwrap();
        assert!(d.x < 1e-14 && d.y < 1e-14 && d.z < 1e-14);
        assert!(full.sum_rule_violation() < 1e-15);
    }
}
