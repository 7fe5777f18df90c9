//! Cross-defocusing pump-probe signal, revival peaks and the shape-based
//! scale fit.
//!
//! The signal along axis i is the squared alignment deviation
//! (⟨cos²θ_i⟩ − 1/3)² smeared by the probe intensity envelope. Its absolute
//! proportionality constant is never modeled, so every comparison is either a
//! ratio or goes through [`fit_scale`].

use std::ops::RangeInclusive;

use crate::angular::Axis;
use crate::ensemble::AlignmentTrace;
use crate::error::{AlignError, Result};
use crate::units::MoleculeSpec;

/// Probe duration used when none is given, equal to the pump duration.
pub const DEFAULT_PROBE_FWHM_FS: f64 = 100.0;

/// Half-width of the search window around each revival.
pub const PEAK_WINDOW_PS: f64 = 1.5;

/// Peaks lower than this are treated as absent.
pub const PEAK_THRESHOLD: f64 = 1e-12;

/// Kernel support in units of the Gaussian standard deviation.
const KERNEL_SIGMAS: f64 = 6.0;

/// Pump-probe signals on a delay grid. Measured data may carry only some
/// of the columns, and its probe width is usually unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub delays: Vec<f64>,
    pub s_x: Option<Vec<f64>>,
    pub s_y: Option<Vec<f64>>,
    /// Probe intensity FWHM in fs.
    pub probe_fwhm: Option<f64>,
}

impl SignalTrace {
    pub fn new(delays: Vec<f64>, s_x: Option<Vec<f64>>, s_y: Option<Vec<f64>>) -> Result<Self> {
        for column in [&s_x, &s_y].into_iter().flatten() {
            if column.len() != delays.len() {
                return Err(AlignError::domain("signal column length differs from the delay grid"));
            }
        }
        if delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AlignError::domain("delays must be strictly increasing"));
        }
        Ok(Self { delays, s_x, s_y, probe_fwhm: None })
    }

    /// Both x and y signals of an alignment trace.
    pub fn from_alignment(trace: &AlignmentTrace, probe_fwhm: f64) -> Result<Self> {
        let s_x = defocusing_signal(trace, Axis::X, probe_fwhm)?;
        let s_y = defocusing_signal(trace, Axis::Y, probe_fwhm)?;
        Ok(Self {
            delays: trace.times.clone(),
            s_x: Some(s_x),
            s_y: Some(s_y),
            probe_fwhm: Some(probe_fwhm),
        })
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn axis(&self, axis: Axis) -> Option<&[f64]> {
        match axis {
            Axis::X => self.s_x.as_deref(),
            Axis::Y => self.s_y.as_deref(),
            Axis::Z => None,
        }
    }

    fn require(&self, axis: Axis) -> Result<&[f64]> {
        self.axis(axis)
            .ok_or_else(|| AlignError::domain(format!("signal has no {axis} column")))
    }
}

/// Discrete unit-sum Gaussian on a grid of spacing `dt`, intensity FWHM `fwhm`
/// (both ps). Index `half` is the centre.
fn probe_kernel(dt: f64, fwhm: f64) -> Vec<f64> {
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let half = (KERNEL_SIGMAS * sigma / dt).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = k as f64 * dt / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    kernel
}

/// S_i(Δ) = Σ_t G(t − Δ)·(⟨cos²θ_i⟩(t) − 1/3)² on the trace grid, with a
/// unit-area Gaussian probe of intensity FWHM `probe_fwhm` (fs). Samples
/// beyond the ends of the trace take the nearest end value.
pub fn defocusing_signal(trace: &AlignmentTrace, axis: Axis, probe_fwhm: f64) -> Result<Vec<f64>> {
    if !(probe_fwhm > 0.0 && probe_fwhm.is_finite()) {
        return Err(AlignError::domain(format!("probe FWHM must be positive, got {probe_fwhm} fs")));
    }
    let fwhm = probe_fwhm * 1e-3;
    if trace.len() < 2 {
        return Err(AlignError::domain("trace needs at least two samples"));
    }
    let dt = trace.spacing();
    if dt > fwhm / 5.0 * (1.0 + 1e-9) {
        return Err(AlignError::CoarseGrid { spacing: dt, fwhm });
    }
    let squared: Vec<f64> = trace.deviation(axis).iter().map(|d| d * d).collect();
    Ok(convolve_clamped(&squared, &probe_kernel(dt, fwhm)))
}

fn convolve_clamped(input: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = input.len() as i64;
    let half = (kernel.len() / 2) as i64;
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * input[(i + k as i64 - half).clamp(0, n - 1) as usize])
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalPeak {
    /// 1 for the quarter revival, 2 for the half revival, and so on.
    pub index: u32,
    /// Delay in ps.
    pub time: f64,
    pub height: f64,
}

/// Largest signal sample within ±1.5 ps of each `origin + k·T_rev/4`,
/// for every k whose centre lies on the delay grid. `origin` is the pulse
/// centre in ps. Windows whose maximum stays under the threshold are omitted.
pub fn revival_peaks(
    signal: &SignalTrace,
    axis: Axis,
    mol: &MoleculeSpec,
    origin: f64,
) -> Result<Vec<RevivalPeak>> {
    let values = signal.require(axis)?;
    let (Some(&first), Some(&last)) = (signal.delays.first(), signal.delays.last()) else {
        return Err(AlignError::domain("empty signal"));
    };
    let quarter = mol.revival_period() / 4.0;
    if last - first < 2.0 * quarter {
        return Err(AlignError::domain(format!(
            "delay grid spans {:.3} ps, shorter than half a revival period ({:.3} ps)",
            last - first,
            2.0 * quarter
        )));
    }
    let mut peaks = Vec::new();
    let mut index = 1u32;
    loop {
        let center = origin + index as f64 * quarter;
        if center > last {
            break;
        }
        if center >= first {
            let lo = signal.delays.partition_point(|&t| t < center - PEAK_WINDOW_PS);
            let hi = signal.delays.partition_point(|&t| t <= center + PEAK_WINDOW_PS);
            if lo >= hi {
                return Err(AlignError::EmptyWindow { index, center });
            }
            // first maximum wins ties, so the result is grid-order deterministic
            let best = (lo..hi).fold(lo, |b, k| if values[k] > values[b] { k } else { b });
            if values[best] > PEAK_THRESHOLD {
                peaks.push(RevivalPeak { index, time: signal.delays[best], height: values[best] });
            }
        }
        index += 1;
    }
    Ok(peaks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub scale: f64,
    /// RMS of measured − scale·model, divided by the measured peak.
    pub rms_residual: f64,
    pub samples: usize,
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let (first, last) = (*xs.first()?, *xs.last()?);
    if x < first || x > last {
        return None;
    }
    let k = xs.partition_point(|&t| t <= x);
    if k == xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let f = (x - x0) / (x1 - x0);
    Some(ys[k - 1] + f * (ys[k] - ys[k - 1]))
}

/// Least-squares factor s minimizing Σ (m − s·model)² over the measured
/// delays inside `window`, with the model linearly interpolated onto them.
pub fn fit_scale(
    measured: &SignalTrace,
    model: &SignalTrace,
    axis: Axis,
    window: RangeInclusive<f64>,
) -> Result<ScaleFit> {
    let m = measured.require(axis)?;
    let s = model.require(axis)?;
    let mut pairs = Vec::new();
    for (&t, &value) in measured.delays.iter().zip(m) {
        if !window.contains(&t) {
            continue;
        }
        let predicted = interpolate(&model.delays, s, t).ok_or_else(|| {
            AlignError::GridMismatch(format!("measured delay {t} ps lies outside the model grid"))
        })?;
        pairs.push((value, predicted));
    }
    if pairs.is_empty() {
        return Err(AlignError::GridMismatch(format!(
            "no measured samples inside the fit window [{}, {}] ps",
            window.start(),
            window.end()
        )));
    }
    let ms: f64 = pairs.iter().map(|(m, s)| m * s).sum();
    let ss: f64 = pairs.iter().map(|(_, s)| s * s).sum();
    if ss == 0.0 {
        return Err(AlignError::UndefinedScale);
    }
    let scale = ms / ss;
    let rms = (pairs.iter().map(|(m, s)| (m - scale * s).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    let peak = pairs.iter().map(|(m, _)| m.abs()).fold(0.0, f64::max);
    let rms_residual = if peak > 0.0 { rms / peak } else { rms };
    Ok(ScaleFit { scale, rms_residual, samples: pairs.len() })
}

/// ⟨cos²θ_z⟩ recovered from the two transverse axes as 1 − x − y.
pub fn reconstruct_z(trace: &AlignmentTrace) -> Vec<f64> {
    trace.cos2_x.iter().zip(&trace.cos2_y).map(|(x, y)| 1.0 - x - y).collect()
}
