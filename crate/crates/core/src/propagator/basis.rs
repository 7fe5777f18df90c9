//! Parity blocks of the |J,M⟩ basis and the sparse operators acting on them.

use num_complex::Complex64;

use crate::angular::{BasisIndex, CouplingTable};

/// A window of one (J-parity, M-parity) block: J ∈ [j_lo, j_hi] and
/// M ∈ [m_lo, m_hi], both stepping by 2, with |M| ≤ J.
#[derive(Debug, Clone)]
pub struct BlockBasis {
    states: Vec<BasisIndex>,
    j_lo: u32,
    j_hi: u32,
    m_lo: i32,
    m_hi: i32,
    lookup: Vec<Option<usize>>,
    m_slots: usize,
    truncated_low_j: bool,
    truncated_low_m: bool,
    truncated_high_m: bool,
}

impl BlockBasis {
    /// Full block up to `j_max`, containing `initial`.
    pub fn full(initial: BasisIndex, j_max: u32) -> Self {
        let j_hi = if (j_max - initial.j).is_multiple_of(2) { j_max } else { j_max - 1 };
        let j_lo = initial.j % 2;
        let m_par = initial.m.rem_euclid(2);
        let m_hi = if (j_hi as i32 - m_par) % 2 == 0 { j_hi as i32 } else { j_hi as i32 - 1 };
        Self::build(j_lo, j_hi, -m_hi, m_hi, false, false, false)
    }

    /// Window of half-width `margin` (in J and in M) around `initial`.
    pub fn window(initial: BasisIndex, margin: u32) -> Self {
        let margin = margin + margin % 2;
        let j_hi = initial.j + margin;
        let j_floor = initial.j % 2;
        let j_lo = initial.j.saturating_sub(margin).max(j_floor);
        let j_lo = if (initial.j - j_lo).is_multiple_of(2) { j_lo } else { j_lo + 1 };
        let reach = |m: i32| if (j_hi as i32 - m.abs()) % 2 == 0 { m } else { m - m.signum() };
        let m_edge_lo = reach(-(j_hi as i32));
        let m_edge_hi = reach(j_hi as i32);
        let m_lo = (initial.m - margin as i32).max(m_edge_lo);
        let m_hi = (initial.m + margin as i32).min(m_edge_hi);
        let m_lo = if (initial.m - m_lo) % 2 == 0 { m_lo } else { m_lo + 1 };
        let m_hi = if (m_hi - initial.m) % 2 == 0 { m_hi } else { m_hi - 1 };
        Self::build(j_lo, j_hi, m_lo, m_hi, j_lo > j_floor, m_lo > m_edge_lo, m_hi < m_edge_hi)
    }

    fn build(
        j_lo: u32,
        j_hi: u32,
        m_lo: i32,
        m_hi: i32,
        truncated_low_j: bool,
        truncated_low_m: bool,
        truncated_high_m: bool,
    ) -> Self {
        let m_slots = ((m_hi - m_lo) / 2 + 1) as usize;
        let j_slots = ((j_hi - j_lo) / 2 + 1) as usize;
        let mut lookup = vec![None; m_slots * j_slots];
        let mut states = Vec::new();
        for (a, j) in (j_lo..=j_hi).step_by(2).enumerate() {
            for (b, m) in (m_lo..=m_hi).step_by(2).enumerate() {
                if m.unsigned_abs() <= j {
                    lookup[a * m_slots + b] = Some(states.len());
                    states.push(BasisIndex { j, m });
                }
            }
        }
        Self {
            states,
            j_lo,
            j_hi,
            m_lo,
            m_hi,
            lookup,
            m_slots,
            truncated_low_j,
            truncated_low_m,
            truncated_high_m,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisIndex] {
        &self.states
    }

    pub fn j_max(&self) -> u32 {
        self.j_hi
    }

    pub fn index_of(&self, s: BasisIndex) -> Option<usize> {
        if s.j < self.j_lo || s.j > self.j_hi || s.m < self.m_lo || s.m > self.m_hi {
            return None;
        }
        let (dj, dm) = (s.j - self.j_lo, s.m - self.m_lo);
        if dj % 2 != 0 || dm % 2 != 0 {
            return None;
        }
        self.lookup[(dj / 2) as usize * self.m_slots + (dm / 2) as usize]
    }

    /// Whether a state lies within two layers of a truncated edge.
    pub fn is_edge(&self, s: BasisIndex) -> bool {
        s.j + 2 >= self.j_hi
            || (self.truncated_low_j && s.j <= self.j_lo + 2)
            || (self.truncated_low_m && s.m <= self.m_lo + 2)
            || (self.truncated_high_m && s.m + 2 >= self.m_hi)
    }
}

/// Largest number of entries in one row: ΔJ and ΔM each in {−2, 0, 2}.
const ROW_WIDTH: usize = 9;

/// Real sparse matrix with a fixed number of slots per row. Unused slots
/// hold a zero weight pointing at the row itself.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    cols: Vec<[u32; ROW_WIDTH]>,
    values: Vec<[f64; ROW_WIDTH]>,
}

impl SparseOperator {
    /// Σ_i weight_i·table_i + diagonal·I, restricted to `basis`.
    pub fn assemble(basis: &BlockBasis, terms: &[(f64, &CouplingTable)], diagonal: f64) -> Self {
        let mut cols = Vec::with_capacity(basis.len());
        let mut values = Vec::with_capacity(basis.len());
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(ROW_WIDTH);
        for (own, &bra) in basis.states().iter().enumerate() {
            row.clear();
            row.push((own, diagonal));
            // tables are symmetric, so the row of `bra` is its column
            for &(weight, table) in terms {
                if weight == 0.0 {
                    continue;
                }
                for (ket, v) in table.row(bra) {
                    if let Some(col) = basis.index_of(ket) {
                        match row.iter_mut().find(|(c, _)| *c == col) {
                            Some(entry) => entry.1 += weight * v,
                            None => row.push((col, weight * v)),
                        }
                    }
                }
            }
            assert!(row.len() <= ROW_WIDTH, "row of {bra} has {} entries", row.len());
            row.sort_by_key(|&(c, _)| c);
            let mut c = [own as u32; ROW_WIDTH];
            let mut v = [0.0; ROW_WIDTH];
            for (slot, &(col, value)) in row.iter().enumerate() {
                c[slot] = col as u32;
                v[slot] = value;
            }
            cols.push(c);
            values.push(v);
        }
        Self { cols, values }
    }

    pub fn rows(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row_dot(&self, row: usize, x: &[Complex64]) -> Complex64 {
        let (cols, values) = (&self.cols[row], &self.values[row]);
        let (mut re, mut im) = (0.0, 0.0);
        for slot in 0..ROW_WIDTH {
            let z = x[cols[slot] as usize];
            re += z.re * values[slot];
            im += z.im * values[slot];
        }
        Complex64::new(re, im)
    }

    /// y = A·x
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (k, out) in y.iter_mut().enumerate() {
            *out = self.row_dot(k, x);
        }
    }

    /// ⟨x| A |x⟩ for a complex vector; imaginary part discarded (A is symmetric).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        (0..self.rows()).map(|k| (x[k].conj() * self.row_dot(k, x)).re).sum()
    }
}

/// Padding on each side of the vectors read by [`BandedOperator`].
pub const BAND_PAD: usize = 2;

/// The same matrix stored as three runs of three consecutive columns per
/// row, one run per ΔJ. Within a J level the basis is contiguous in M, so
/// (J', M − 2), (J', M), (J', M + 2) are adjacent; states missing at the
/// block edges get zero weight. Reads a vector padded by [`BAND_PAD`] zeros.
#[derive(Debug, Clone)]
pub struct BandedOperator {
    starts: Vec<[u32; 3]>,
    values: Vec<[f64; ROW_WIDTH]>,
}

impl BandedOperator {
    pub fn from_sparse(basis: &BlockBasis, op: &SparseOperator) -> Self {
        let mut starts = Vec::with_capacity(basis.len());
        let mut values = Vec::with_capacity(basis.len());
        for (k, s) in basis.states().iter().enumerate() {
            let mut start = [BAND_PAD as u32; 3];
            for (r, dj) in [-2i64, 0, 2].into_iter().enumerate() {
                let j = s.j as i64 + dj;
                if j < 0 {
                    continue;
                }
                let found = (0..3).find_map(|o| {
                    let m = s.m + 2 * (o as i32 - 1);
                    basis.index_of(BasisIndex { j: j as u32, m }).map(|i| (o, i))
                });
                if let Some((o, i)) = found {
                    start[r] = (i + BAND_PAD - o) as u32;
                }
            }
            let mut v = [0.0; ROW_WIDTH];
            for slot in 0..ROW_WIDTH {
                let weight = op.values[k][slot];
                if weight == 0.0 {
                    continue;
                }
                let col = op.cols[k][slot] as usize;
                let other = basis.states()[col];
                let r = ((other.j as i64 - s.j as i64 + 2) / 2) as usize;
                let o = ((other.m - s.m + 2) / 2) as usize;
                assert_eq!(start[r] as usize + o, col + BAND_PAD, "basis not contiguous in M");
                v[3 * r + o] += weight;
            }
            starts.push(start);
            values.push(v);
        }
        Self { starts, values }
    }

    pub fn rows(&self) -> usize {
        self.starts.len()
    }

    /// Row `row` of A applied to the padded vector `xp` (length rows + 2·BAND_PAD).
    #[inline]
    pub fn row_dot_padded(&self, row: usize, xp: &[Complex64]) -> Complex64 {
        let (starts, w) = (&self.starts[row], &self.values[row]);
        let (mut re, mut im) = (0.0, 0.0);
        for r in 0..3 {
            let s = starts[r] as usize;
            let run = &xp[s..s + 3];
            for o in 0..3 {
                re += run[o].re * w[3 * r + o];
                im += run[o].im * w[3 * r + o];
            }
        }
        Complex64::new(re, im)
    }
}
