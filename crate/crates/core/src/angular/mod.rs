//! Matrix elements of the squared direction cosines in the |J,M⟩ basis.
//!
//! The quantization axis is z, normal to the polarization ellipse. Harmonics
//! follow the Condon–Shortley phase convention, which makes every element of
//! cos²θ_x, cos²θ_y and cos²θ_z real.
//!
//! The rank-2 elements are assembled exactly from first-rank ladder elements:
//! cos²θ = (cos θ)² and sin²θ·e^{±2iφ} = (sin θ·e^{±iφ})², with the
//! intermediate sum running over the two shells J ± 1 only.

mod quadrature;

use std::fmt;

use crate::error::{AlignError, Result};

pub use quadrature::{gauss_legendre, quadrature_oracle, spherical_harmonic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A rotational state |J,M⟩. Ordering is ascending J, then M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub j: u32,
    pub m: i32,
}

impl BasisIndex {
    pub fn new(j: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > j {
            return Err(AlignError::domain(format!("|M| = {} exceeds J = {j}", m.abs())));
        }
        Ok(Self { j, m })
    }

    /// Position in the full (unblocked) ordering J² + J + M.
    pub fn flat(self) -> usize {
        let j = self.j as i64;
        (j * j + j + self.m as i64) as usize
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.j, self.m)
    }
}

/// ⟨J+1,M| cos θ |J,M⟩.
fn cos_up(j: f64, m: f64) -> f64 {
    (((j + 1.0).powi(2) - m * m) / ((2.0 * j + 1.0) * (2.0 * j + 3.0))).sqrt()
}

/// ⟨J−1,M| cos θ |J,M⟩.
fn cos_down(j: f64, m: f64) -> f64 {
    if j < 1.0 {
        0.0
    } else {
        ((j * j - m * m) / ((2.0 * j - 1.0) * (2.0 * j + 1.0))).sqrt()
    }
}

/// ⟨J+1,M+1| sin θ e^{iφ} |J,M⟩.
fn raise_up(j: f64, m: f64) -> f64 {
    -(((j + m + 1.0) * (j + m + 2.0)) / ((2.0 * j + 1.0) * (2.0 * j + 3.0))).sqrt()
}

/// ⟨J−1,M+1| sin θ e^{iφ} |J,M⟩.
fn raise_down(j: f64, m: f64) -> f64 {
    if j < 1.0 {
        0.0
    } else {
        (((j - m) * (j - m - 1.0)).max(0.0) / ((2.0 * j - 1.0) * (2.0 * j + 1.0))).sqrt()
    }
}

/// ⟨J+dj,M| cos²θ |J,M⟩ for dj ∈ {−2, 0, 2}.
fn cos2_z(j: u32, m: i32, dj: i32) -> f64 {
    let (jf, mf) = (j as f64, m as f64);
    match dj {
        2 => cos_up(jf, mf) * cos_up(jf + 1.0, mf),
        0 => cos_up(jf, mf).powi(2) + cos_down(jf, mf).powi(2),
        -2 if j >= 2 => cos_down(jf, mf) * cos_down(jf - 1.0, mf),
        _ => 0.0,
    }
}

/// ⟨J+dj,M+2| sin²θ e^{2iφ} |J,M⟩ for dj ∈ {−2, 0, 2}.
fn sin2_raise(j: u32, m: i32, dj: i32) -> f64 {
    let (jf, mf) = (j as f64, m as f64);
    match dj {
        2 => raise_up(jf, mf) * raise_up(jf + 1.0, mf + 1.0),
        0 => {
            let via_up = raise_up(jf, mf) * raise_down(jf + 1.0, mf + 1.0);
            let via_down = if j >= 1 { raise_down(jf, mf) * raise_up(jf - 1.0, mf + 1.0) } else { 0.0 };
            via_up + via_down
        }
        -2 if j >= 2 => raise_down(jf, mf) * raise_down(jf - 1.0, mf + 1.0),
        _ => 0.0,
    }
}

/// Exact ⟨bra| cos²θ_axis |ket⟩. Zero outside the selection rules.
pub fn cos2_element(axis: Axis, bra: BasisIndex, ket: BasisIndex) -> f64 {
    let dj = bra.j as i64 - ket.j as i64;
    let dm = bra.m as i64 - ket.m as i64;
    if !matches!(dj, -2 | 0 | 2) || bra.m.unsigned_abs() > bra.j || ket.m.unsigned_abs() > ket.j {
        return 0.0;
    }
    let dj = dj as i32;
    let z = if dm == 0 { cos2_z(ket.j, ket.m, dj) } else { 0.0 };
    if axis == Axis::Z {
        return z;
    }
    // cos²θ_{x,y} = (1 − cos²θ)/2 ± (S₊ + S₋)/4 with S± = sin²θ e^{±2iφ}
    let tensor = match dm {
        0 => {
            let identity = if dj == 0 { 1.0 } else { 0.0 };
            return 0.5 * (identity - z);
        }
        2 => sin2_raise(ket.j, ket.m, dj),
        // S₋ = S₊†, so ⟨bra|S₋|ket⟩ = ⟨ket|S₊|bra⟩.
        -2 => sin2_raise(bra.j, bra.m, -dj),
        _ => return 0.0,
    };
    match axis {
        Axis::X => 0.25 * tensor,
        Axis::Y => -0.25 * tensor,
        Axis::Z => unreachable!(),
    }
}

const DJ: [i32; 3] = [-2, 0, 2];
const DM: [i32; 3] = [-2, 0, 2];

/// Banded table of ⟨J',M'| cos²θ_axis |J,M⟩ for all J, J' ≤ j_max.
///
/// Each ket holds the nine possible (ΔJ, ΔM) neighbours; absent entries are zero.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    axis: Axis,
    j_max: u32,
    band: Vec<[f64; 9]>,
}

impl CouplingTable {
    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }

    fn slot(dj: i32, dm: i32) -> Option<usize> {
        let a = DJ.iter().position(|&d| d == dj)?;
        let b = DM.iter().position(|&d| d == dm)?;
        Some(a * 3 + b)
    }

    /// Table lookup; zero for pairs outside the selection rules or beyond j_max.
    pub fn get(&self, bra: BasisIndex, ket: BasisIndex) -> f64 {
        if bra.j > self.j_max || ket.j > self.j_max {
            return 0.0;
        }
        let dj = bra.j as i64 - ket.j as i64;
        let dm = bra.m as i64 - ket.m as i64;
        match Self::slot(dj as i32, dm as i32) {
            Some(s) if dj.abs() <= 2 && dm.abs() <= 2 => self.band[ket.flat()][s],
            _ => 0.0,
        }
    }

    /// Nonzero neighbours of `ket` as (bra, value).
    pub fn row(&self, ket: BasisIndex) -> impl Iterator<Item = (BasisIndex, f64)> + '_ {
        let band = &self.band[ket.flat()];
        DJ.iter().enumerate().flat_map(move |(a, &dj)| {
            DM.iter().enumerate().filter_map(move |(b, &dm)| {
                let v = band[a * 3 + b];
                (v != 0.0).then(|| {
                    (BasisIndex { j: (ket.j as i32 + dj) as u32, m: ket.m + dm }, v)
                })
            })
        })
    }

    /// All nonzero entries as (bra, ket, value), kets in ascending order.
    pub fn entries(&self) -> impl Iterator<Item = (BasisIndex, BasisIndex, f64)> + '_ {
        all_states(self.j_max).flat_map(move |ket| self.row(ket).map(move |(bra, v)| (bra, ket, v)))
    }
}

fn all_states(j_max: u32) -> impl Iterator<Item = BasisIndex> {
    (0..=j_max).flat_map(|j| (-(j as i32)..=j as i32).map(move |m| BasisIndex { j, m }))
}

/// Builds the coupling table of cos²θ_axis up to `j_max`.
pub fn cos2_elements(axis: Axis, j_max: u32) -> Result<CouplingTable> {
    if j_max < 2 {
        return Err(AlignError::domain(format!("j_max = {j_max} < 2")));
    }
    let mut band = vec![[0.0; 9]; ((j_max + 1) * (j_max + 1)) as usize];
    for ket in all_states(j_max) {
        let slots = &mut band[ket.flat()];
        for (a, &dj) in DJ.iter().enumerate() {
            let j = ket.j as i32 + dj;
            if j < 0 || j > j_max as i32 {
                continue;
            }
            for (b, &dm) in DM.iter().enumerate() {
                let m = ket.m + dm;
                if m.abs() > j {
                    continue;
                }
                let bra = BasisIndex { j: j as u32, m };
                slots[a * 3 + b] = cos2_element(axis, bra, ket);
            }
        }
    }
    Ok(CouplingTable { axis, j_max, band })
}

/// The three direction-cosine tables sharing one j_max.
#[derive(Debug, Clone)]
pub struct TableSet {
    pub x: CouplingTable,
    pub y: CouplingTable,
    pub z: CouplingTable,
}

impl TableSet {
    pub fn new(j_max: u32) -> Result<Self> {
        Ok(Self {
            x: cos2_elements(Axis::X, j_max)?,
            y: cos2_elements(Axis::Y, j_max)?,
            z: cos2_elements(Axis::Z, j_max)?,
        })
    }

    pub fn j_max(&self) -> u32 {
        self.z.j_max
    }

    pub fn get(&self, axis: Axis) -> &CouplingTable {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(j: u32, m: i32) -> BasisIndex {
        BasisIndex::new(j, m).unwrap()
    }

    #[test]
    fn ground_state_is_isotropic() {
        for axis in Axis::ALL {
            assert_abs_diff_eq!(cos2_element(axis, s(0, 0), s(0, 0)), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn known_z_elements() {
        assert_abs_diff_eq!(
            cos2_element(Axis::Z, s(2, 0), s(0, 0)),
            2.0 / (3.0 * 5f64.sqrt()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(cos2_element(Axis::Z, s(1, 0), s(1, 0)), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(cos2_element(Axis::Z, s(2, 0), s(2, 0)), 11.0 / 21.0, epsilon = 1e-15);
    }

    #[test]
    fn small_j_max_rejected() {
        assert!(cos2_elements(Axis::X, 1).is_err());
        assert!(BasisIndex::new(1, 2).is_err());
    }

    #[test]
    fn tables_are_symmetric_and_obey_selection_rules() {
        let tables = TableSet::new(12).unwrap();
        for axis in Axis::ALL {
            let t = tables.get(axis);
            for (bra, ket, v) in t.entries() {
                assert_abs_diff_eq!(t.get(ket, bra), v, epsilon = 1e-15);
                let dj = bra.j as i32 - ket.j as i32;
                let dm = bra.m - ket.m;
                assert!(matches!(dj, -2 | 0 | 2));
                match axis {
                    Axis::Z => assert_eq!(dm, 0),
                    _ => assert!(matches!(dm, -2 | 0 | 2)),
                }
            }
        }
    }

    #[test]
    fn x_and_y_differ_only_in_tensor_sign() {
        let tables = TableSet::new(10).unwrap();
        for (bra, ket, vx) in tables.x.entries() {
            let vy = tables.y.get(bra, ket);
            if bra.m == ket.m {
                assert_abs_diff_eq!(vx, vy, epsilon = 1e-15);
            } else {
                assert_abs_diff_eq!(vx, -vy, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn axes_sum_to_identity() {
        let tables = TableSet::new(16).unwrap();
        for ket in all_states(16) {
            for bra in all_states(16) {
                let sum: f64 = Axis::ALL.iter().map(|&a| tables.get(a).get(bra, ket)).sum();
                let expected = if bra == ket { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(sum, expected, epsilon = 1e-12);
            }
        }
    }
}
