//! Weyl kernels for products of canonical pairs.
//!
//! For one pair with effective parameter `θ_e` the symbol `f(q, p)` is sent to
//! `K(q₀, q₁) = (2πθ_e)⁻¹ ∫ f((q₀+q₁)/2, p) e^{−(i/θ_e) p (q₀−q₁)} dp`, which turns the
//! Moyal product with plane-wave law `E_a ⋆ E_b = e^{(iθ_e/2)ω(a,b)} E_{a+b}` into
//! composition of integral operators. Several pairs act as a tensor product.

use std::f64::consts::PI;

use crate::error::{HdqError, Result};
use crate::grid::{permute, upsample_axis, Axis};
use crate::linalg::{zgemm, CMat, C64, ZERO};

/// Upper bound on kernel matrix entries (each 16 bytes).
pub const MAX_KERNEL_ENTRIES: usize = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSpec {
    pub q: Axis,
    pub p: Axis,
    pub theta_e: f64,
}

#[derive(Debug, Clone)]
pub struct KernelEngine {
    pairs: Vec<PairSpec>,
    up: Vec<usize>,
}

impl KernelEngine {
    pub fn new(pairs: Vec<PairSpec>) -> Result<Self> {
        let mut up = Vec::with_capacity(pairs.len());
        for pr in &pairs {
            // sampling in q₀ − q₁ must resolve the oscillation e^{(i/θ_e) p s}
            let dmax = PI * pr.theta_e / (2.0 * pr.p.l);
            let mut r = 1usize;
            while pr.q.h() / (r as f64) > dmax * (1.0 + 1e-12) {
                r *= 2;
            }
            up.push(r);
        }
        let eng = Self { pairs, up };
        let dim = eng.kernel_dim();
        if dim.saturating_mul(dim) > MAX_KERNEL_ENTRIES {
            return Err(HdqError::ResourceError(format!(
                "kernel of dimension {dim} exceeds the memory gate of {MAX_KERNEL_ENTRIES} entries"
            )));
        }
        Ok(eng)
    }

    pub fn pairs(&self) -> &[PairSpec] {
        &self.pairs
    }

    pub fn upsampling(&self) -> &[usize] {
        &self.up
    }

    /// q-grid of the kernel for pair `j`.
    pub fn kernel_axis(&self, j: usize) -> Axis {
        Axis::new(self.pairs[j].q.m * self.up[j], self.pairs[j].q.l)
    }

    pub fn kernel_dim(&self) -> usize {
        (0..self.pairs.len()).map(|j| self.kernel_axis(j).m).product()
    }

    /// Quadrature weight of one kernel row index.
    pub fn delta(&self) -> f64 {
        (0..self.pairs.len()).map(|j| self.kernel_axis(j).h()).product()
    }

    pub fn symbol_dims(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|p| [p.q.m, p.p.m]).collect()
    }

    fn cutoff(&self, j: usize) -> f64 {
        self.pairs[j].p.nyquist()
    }

    /// Symbol laid out pair-major, axes `[q₁, p₁, q₂, p₂, …]`.
    pub fn kernel(&self, f: &[C64]) -> CMat {
        let np = self.pairs.len();
        let mut dims = self.symbol_dims();
        assert_eq!(f.len(), dims.iter().product::<usize>());
        let mut data = f.to_vec();
        for j in 0..np {
            let pr = self.pairs[j];
            let kax = self.kernel_axis(j);
            let mk = kax.m;
            let (up, ud) = upsample_axis(&data, &dims, 2 * j, 2 * self.up[j]);
            let mp = pr.p.m;
            let delta = kax.h();
            let cut = self.cutoff(j);
            let c = pr.p.h() / (2.0 * PI * pr.theta_e);
            // phase[(m + mk − 1)·mp + k] = c · e^{−(i/θ_e) p_k m δ}
            let mut phase = vec![ZERO; (2 * mk - 1) * mp];
            for m in 0..2 * mk - 1 {
                let mm = m as f64 - (mk as f64 - 1.0);
                let nu = mm * delta / pr.theta_e;
                if nu.abs() > cut {
                    continue;
                }
                for k in 0..mp {
                    phase[m * mp + k] = C64::from_polar(c, -nu * pr.p.point(k));
                }
            }
            let outer: usize = ud[..2 * j].iter().product();
            let inner: usize = ud[2 * j + 2..].iter().product();
            let smax = ud[2 * j];
            let mut out = vec![ZERO; outer * mk * mk * inner];
            for o in 0..outer {
                for j0 in 0..mk {
                    for j1 in 0..mk {
                        let s = j0 + j1;
                        let m = j0 + mk - 1 - j1;
                        let ph = &phase[m * mp..(m + 1) * mp];
                        if ph[0] == ZERO && ph[mp - 1] == ZERO {
                            continue;
                        }
                        let dst = ((o * mk + j0) * mk + j1) * inner;
                        for (k, w) in ph.iter().enumerate() {
                            let src = ((o * smax + s) * mp + k) * inner;
                            for i in 0..inner {
                                out[dst + i] += up[src + i] * w;
                            }
                        }
                    }
                }
            }
            data = out;
            dims = ud;
            dims[2 * j] = mk;
            dims[2 * j + 1] = mk;
        }
        let order: Vec<usize> = (0..np).map(|j| 2 * j).chain((0..np).map(|j| 2 * j + 1)).collect();
        let (rm, _) = permute(&data, &dims, &order);
        let n = self.kernel_dim();
        CMat::from_row_slice(n, n, &rm)
    }

    /// Inverse of [`kernel`](Self::kernel) on the symbol grid.
    pub fn symbol(&self, k: &CMat) -> Vec<C64> {
        let np = self.pairs.len();
        let n = self.kernel_dim();
        assert_eq!(k.shape(), (n, n));
        let mut rm = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                rm.push(k[(r, c)]);
            }
        }
        let mut dims: Vec<usize> = (0..np).map(|j| self.kernel_axis(j).m).collect();
        dims.extend((0..np).map(|j| self.kernel_axis(j).m));
        let order: Vec<usize> = (0..np).flat_map(|j| [j, np + j]).collect();
        let (mut data, mut dims) = permute(&rm, &dims, &order);
        for j in 0..np {
            let pr = self.pairs[j];
            let kax = self.kernel_axis(j);
            let (mk, mq, mp, r) = (kax.m, pr.q.m, pr.p.m, self.up[j]);
            let delta = kax.h();
            let cut = self.cutoff(j);
            let mmax = mk / 2;
            // phase[m·mp + k] = 2δ e^{(i/θ_e) p_k 2mδ}, m ≥ 0 stored for ±m
            let mut phase = vec![ZERO; (2 * mmax + 1) * mp];
            for mi in 0..=2 * mmax {
                let m = mi as f64 - mmax as f64;
                let nu = 2.0 * m * delta / pr.theta_e;
                if nu.abs() > cut {
                    continue;
                }
                for kk in 0..mp {
                    phase[mi * mp + kk] = C64::from_polar(2.0 * delta, nu * pr.p.point(kk));
                }
            }
            let outer: usize = dims[..2 * j].iter().product();
            let inner: usize = dims[2 * j + 2..].iter().product();
            let mut out = vec![ZERO; outer * mq * mp * inner];
            for o in 0..outer {
                for i in 0..mq {
                    let jj = (i * r) as i64;
                    for mi in 0..=2 * mmax {
                        let m = mi as i64 - mmax as i64;
                        let (a, b) = (jj + m, jj - m);
                        if a < 0 || b < 0 || a >= mk as i64 || b >= mk as i64 {
                            continue;
                        }
                        let ph = &phase[mi * mp..(mi + 1) * mp];
                        if ph[0] == ZERO && ph[mp - 1] == ZERO {
                            continue;
                        }
                        let src = ((o * mk + a as usize) * mk + b as usize) * inner;
                        for (kk, w) in ph.iter().enumerate() {
                            let dst = ((o * mq + i) * mp + kk) * inner;
                            for t in 0..inner {
                                out[dst + t] += data[src + t] * w;
                            }
                        }
                    }
                }
            }
            data = out;
            dims[2 * j] = mq;
            dims[2 * j + 1] = mp;
        }
        data
    }

    /// Kernel of the operator product.
    pub fn compose(&self, a: &CMat, b: &CMat) -> CMat {
        let d = self.delta();
        let prod = if a.nrows() >= 64 { zgemm(a, b) } else { a * b };
        prod * C64::new(d, 0.0)
    }

    pub fn product(&self, f: &[C64], g: &[C64]) -> Vec<C64> {
        self.symbol(&self.compose(&self.kernel(f), &self.kernel(g)))
    }

    pub fn hs_norm(&self, k: &CMat) -> f64 {
        self.delta() * k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}
