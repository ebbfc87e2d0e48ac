//! Dense complex linear algebra helpers shared by the finite-dimensional engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().copied())
}

pub fn unvec(v: &[C64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Streams constraint rows through repeated QR, keeping only the triangular factor.
#[derive(Debug, Clone)]
pub struct RowCompressor {
    ncols: usize,
    r: Option<CMat>,
    pending: Vec<CMat>,
    pending_rows: usize,
}

impl RowCompressor {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, r: None, pending: Vec::new(), pending_rows: 0 }
    }

    pub fn push(&mut self, block: CMat) {
        assert_eq!(block.ncols(), self.ncols);
        self.pending_rows += block.nrows();
        self.pending.push(block);
        if self.pending_rows >= 2 * self.ncols.max(8) {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let base = self.r.as_ref().map(|r| r.nrows()).unwrap_or(0);
        let mut stacked = CMat::zeros(base + self.pending_rows, self.ncols);
        if let Some(r) = &self.r {
            stacked.rows_mut(0, base).copy_from(r);
        }
        let mut at = base;
        for b in self.pending.drain(..) {
            stacked.rows_mut(at, b.nrows()).copy_from(&b);
            at += b.nrows();
        }
        self.pending_rows = 0;
        self.r = Some(if stacked.nrows() > self.ncols { stacked.qr().r() } else { stacked });
    }

    /// Square `ncols × ncols` factor with the same row space as everything pushed.
    pub fn finish(mut self) -> CMat {
        self.flush();
        let n = self.ncols;
        let mut out = CMat::zeros(n, n);
        if let Some(r) = self.r {
            let k = r.nrows().min(n);
            out.rows_mut(0, k).copy_from(&r.rows(0, k));
        }
        out
    }
}

/// Orthonormal basis (columns) of the nullspace of a square factor.
pub fn nullspace_of(r: &CMat, rel_tol: f64) -> CMat {
    let n = r.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let svd = r.clone().svd(false, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let vt = svd.v_t.expect("v_t requested");
    let cut = rel_tol * smax;
    let idx: Vec<usize> = (0..sv.len()).filter(|&i| smax == 0.0 || sv[i] <= cut).collect();
    let mut out = CMat::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for k in 0..n {
            out[(k, c)] = vt[(i, k)].conj();
        }
    }
    out
}

/// Orthonormal basis of the column span.
pub fn column_span(m: &CMat, rel_tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > rel_tol * smax).collect();
    let mut out = CMat::zeros(m.nrows(), idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// max(‖U − WWᴴU‖, ‖W − UUᴴW‖) for orthonormal column bases.
pub fn subspace_residual(u: &CMat, w: &CMat) -> f64 {
    if u.ncols() != w.ncols() {
        return f64::INFINITY;
    }
    if u.ncols() == 0 {
        return 0.0;
    }
    let a = u - w * (w.adjoint() * u);
    let b = w - u * (u.adjoint() * w);
    frob(&a).max(frob(&b))
}

/// Least squares via streamed QR; returns (solution, max abs residual).
pub fn least_squares(a: &CMat, b: &CVec) -> (CVec, f64) {
    let n = a.ncols();
    let mut aug = CMat::zeros(a.nrows(), n + 1);
    aug.columns_mut(0, n).copy_from(a);
    aug.set_column(n, b);
    let mut comp = RowCompressor::new(n + 1);
    comp.push(aug);
    let r = comp.finish();
    let rr = r.view((0, 0), (n, n)).into_owned();
    let rhs = r.view((0, n), (n, 1)).into_owned();
    let svd = rr.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let x = svd
        .solve(&rhs, 1e-13 * smax.max(f64::MIN_POSITIVE))
        .map(|m| m.column(0).into_owned())
        .unwrap_or_else(|_| CVec::zeros(n));
    let res = a * &x - b;
    let worst = res.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    (x, worst)
}

/// `a · b` through the blocked complex kernel of `matrixmultiply`.
pub fn zgemm(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows());
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    // Complex<f64> is repr(C) with (re, im) layout.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol * (1.0 + max_abs(m))
}

/// Hermitian positive-definite check by Cholesky.
pub fn cholesky_upper(g: &CMat) -> Option<CMat> {
    g.clone().cholesky().map(|c| c.l().adjoint())
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}
