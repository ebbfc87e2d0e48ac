//! Compressed sparse row storage for structure constants and coordinate operators.

use crate::linalg::{CMat, C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<C64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, ptr: vec![0; rows + 1], idx: Vec::new(), val: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            ptr: (0..=n).collect(),
            idx: (0..n).collect(),
            val: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Duplicates are summed; exact zeros are dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut ptr = vec![0usize; rows + 1];
        let mut idx = Vec::with_capacity(t.len());
        let mut val: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < rows && c < cols, "triplet out of range");
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(c);
                val.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_idx = Vec::with_capacity(idx.len());
        let mut keep_val = Vec::with_capacity(val.len());
        for k in 0..idx.len() {
            if val[k] != ZERO {
                ptr[row_of[k] + 1] += 1;
                keep_idx.push(idx[k]);
                keep_val.push(val[k]);
            }
        }
        for r in 0..rows {
            ptr[r + 1] += ptr[r];
        }
        Self { rows, cols, ptr, idx: keep_idx, val: keep_val }
    }

    pub fn from_dense(m: &CMat) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != ZERO {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        self.idx[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|&(k, _)| k == c).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                t.push((r, c, v));
            }
        }
        t
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.val.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let t = self.triplets().into_iter().map(|(r, c, v)| (r, c, v * s)).collect();
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub fn add(&self, other: &Self, s: C64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, v * s)));
        Self::from_triplets(self.rows, self.cols, t)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut acc = vec![ZERO; other.cols];
        let mut seen = vec![false; other.cols];
        let mut touched = Vec::new();
        let mut t = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                t.push((r, c, acc[c]));
                acc[c] = ZERO;
                seen[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.rows, other.cols, t)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(other, C64::new(-1.0, 0.0)).max_abs()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                let mut it = self.row(r);
                matches!((it.next(), it.next()), (Some((c, v)), None) if c == r && v == C64::new(1.0, 0.0))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let one = C64::new(1.0, 0.0);
        let m = Csr::from_triplets(2, 2, vec![(0, 1, one), (0, 1, -one), (1, 0, one), (1, 0, one)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), C64::new(2.0, 0.0));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = CMat::from_fn(3, 4, |i, j| C64::new((i + 2 * j) as f64, (i as f64) - 1.0));
        let b = CMat::from_fn(4, 2, |i, j| C64::new(1.0 - (i * j) as f64, 0.5));
        let p = Csr::from_dense(&a).matmul(&Csr::from_dense(&b)).to_dense();
        assert!((p - &a * &b).iter().all(|z| z.norm() < 1e-12));
    }
}
