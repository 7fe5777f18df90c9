//! Brute-force sphere quadrature, used as an independent check on the
//! closed-form tables.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Axis, BasisIndex};

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Normalized associated Legendre function with the Condon–Shortley phase,
/// scaled so that Y_lm(θ, φ) = value·e^{imφ}. Requires m ≥ 0.
fn normalized_legendre(l: u32, m: u32, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let sin = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sin;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev = pmm;
    let mut cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let lp = lf - 1.0;
        let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
        let next = a * (x * cur - prev / a_prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Y_JM(θ, φ) with the Condon–Shortley phase.
pub fn spherical_harmonic(state: BasisIndex, cos_theta: f64, phi: f64) -> Complex64 {
    let m_abs = state.m.unsigned_abs();
    let p = normalized_legendre(state.j, m_abs, cos_theta);
    let y = Complex64::from_polar(p, m_abs as f64 * phi);
    if state.m >= 0 {
        y
    } else if m_abs.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    }
}

fn direction_cosine_squared(axis: Axis, cos_theta: f64, phi: f64) -> f64 {
    let sin2 = 1.0 - cos_theta * cos_theta;
    match axis {
        Axis::X => sin2 * phi.cos().powi(2),
        Axis::Y => sin2 * phi.sin().powi(2),
        Axis::Z => cos_theta * cos_theta,
    }
}

/// ⟨bra| cos²θ_axis |ket⟩ by direct integration over the sphere: Gauss–Legendre
/// in cos θ and the trapezoid rule in φ, both exact for these integrands.
pub fn quadrature_oracle(axis: Axis, bra: BasisIndex, ket: BasisIndex) -> f64 {
    quadrature_oracle_with(axis, bra, ket, 1)
}

/// Same integral with every node count multiplied by `refine`.
pub fn quadrature_oracle_with(axis: Axis, bra: BasisIndex, ket: BasisIndex, refine: usize) -> f64 {
    let n_theta = (bra.j + ket.j + 4) as usize * refine;
    let n_phi = (2 * (bra.m.unsigned_abs() + ket.m.unsigned_abs()) + 8) as usize * refine;
    let (nodes, weights) = gauss_legendre(n_theta);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for (&x, &w) in nodes.iter().zip(&weights) {
        let mut ring = Complex64::new(0.0, 0.0);
        for k in 0..n_phi {
            let phi = k as f64 * dphi;
            let f = direction_cosine_squared(axis, x, phi);
            ring += spherical_harmonic(bra, x, phi).conj() * f * spherical_harmonic(ket, x, phi);
        }
        total += ring * w;
    }
    (total * dphi).re
}
