//! Adaptive Dormand–Prince 5(4) stepper for complex state vectors.

use num_complex::Complex64;

use crate::error::{AlignError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    /// Per-step error bound relative to the state norm.
    pub rel_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` while retaining the FSAL derivative and the
/// last step size between calls, so a run can be split at output times.
pub struct Dopri5 {
    cfg: StepperConfig,
    n: usize,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    next: Vec<Complex64>,
    fsal_valid: bool,
    h: f64,
    pub stats: StepStats,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Dopri5 {
    pub fn new(n: usize, cfg: StepperConfig, initial_step: f64) -> Self {
        let zero = || vec![Complex64::new(0.0, 0.0); n];
        Self {
            cfg,
            n,
            k: [zero(), zero(), zero(), zero(), zero(), zero(), zero()],
            stage: zero(),
            next: zero(),
            fsal_valid: false,
            h: initial_step.min(cfg.max_step),
            stats: StepStats::default(),
        }
    }

    fn combine(&mut self, y: &[Complex64], h: f64, coeffs: &[(usize, f64)]) {
        self.stage.copy_from_slice(y);
        for &(s, c) in coeffs {
            let hc = h * c;
            for (st, k) in self.stage.iter_mut().zip(&self.k[s]) {
                *st += k * hc;
            }
        }
    }

    /// Advances `y` from `t0` to exactly `t1`.
    pub fn integrate<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [Complex64]) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        assert_eq!(y.len(), self.n);
        let mut t = t0;
        if !self.fsal_valid {
            f(t, y, &mut self.k[0]);
            self.stats.evaluations += 1;
            self.fsal_valid = true;
        }
        while t < t1 {
            if self.stats.accepted + self.stats.rejected >= self.cfg.max_steps {
                return Err(AlignError::Integrator {
                    time: t,
                    message: format!("step budget of {} exhausted", self.cfg.max_steps),
                });
            }
            let remaining = t1 - t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if !last && h <= 1e-14 * t.abs().max(1.0) {
                return Err(AlignError::Integrator { time: t, message: "step size underflow".into() });
            }

            self.combine(y, h, &[(0, A21)]);
            f(t + C2 * h, &self.stage, &mut self.k[1]);
            self.combine(y, h, &[(0, A31), (1, A32)]);
            f(t + C3 * h, &self.stage, &mut self.k[2]);
            self.combine(y, h, &[(0, A41), (1, A42), (2, A43)]);
            f(t + C4 * h, &self.stage, &mut self.k[3]);
            self.combine(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(t + C5 * h, &self.stage, &mut self.k[4]);
            self.combine(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            f(t + h, &self.stage, &mut self.k[5]);
            self.combine(y, h, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
            std::mem::swap(&mut self.next, &mut self.stage);
            f(t + h, &self.next, &mut self.k[6]);
            self.stats.evaluations += 6;

            let mut err_sq = 0.0;
            let [k0, _, k2, k3, k4, k5, k6] = &self.k;
            for i in 0..self.n {
                let e = (k0[i] * E1 + k2[i] * E3 + k3[i] * E4 + k4[i] * E5 + k5[i] * E6 + k6[i] * E7) * h;
                err_sq += e.norm_sqr();
            }
            let scale = self.cfg.rel_tol * norm2(y).max(norm2(&self.next)) + f64::MIN_POSITIVE;
            let err = err_sq.sqrt() / scale;

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.next);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                // a truncated final step says nothing about the natural step size
                if !last || factor < 1.0 {
                    self.h = (h * factor).min(self.cfg.max_step);
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }
}
