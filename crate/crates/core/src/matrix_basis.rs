//! Laguerre matrix basis of the Moyal plane (`n = 1`).
//!
//! `b_mn(x) = 2(−1)^m √(m!/n!) e^{i(m−n)φ} (2r²/θ)^{(n−m)/2} L_m^{n−m}(2r²/θ) e^{−r²/θ}` for `n ≥ m`
//! and `b_mn = conj(b_nm)` otherwise, so that `b_mn ⋆ b_kl = δ_nk b_ml` for the product
//! `E_a ⋆ E_b = e^{(iθ/2)ω(a,b)} E_{a+b}`.

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::linalg::{CMat, C64, ONE, ZERO};

pub const MAX_TRUNC: usize = 16;
pub const DEFAULT_TRUNC: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSymbol {
    pub trunc: usize,
    pub theta: f64,
    pub coeffs: CMat,
}

impl MatrixSymbol {
    pub fn new(theta: f64, coeffs: CMat) -> Result<Self> {
        if coeffs.nrows() != coeffs.ncols() || coeffs.nrows() == 0 {
            return Err(HdqError::SpecMismatch(format!("coefficient matrix {:?} is not square", coeffs.shape())));
        }
        Ok(Self { trunc: coeffs.nrows(), theta, coeffs })
    }

    pub fn zeros(trunc: usize, theta: f64) -> Self {
        Self { trunc, theta, coeffs: CMat::zeros(trunc, trunc) }
    }

    /// Matrix unit `E_mn`, the coefficients of `b_mn`.
    pub fn unit(trunc: usize, theta: f64, m: usize, n: usize) -> Self {
        let mut s = Self::zeros(trunc, theta);
        s.coeffs[(m, n)] = ONE;
        s
    }

    /// Coefficients of the algebra unit `Σ_m b_mm`.
    pub fn identity(trunc: usize, theta: f64) -> Self {
        Self { trunc, theta, coeffs: CMat::identity(trunc, trunc) }
    }

    pub fn is_identity(&self) -> bool {
        self.coeffs == CMat::identity(self.trunc, self.trunc)
    }

    pub fn adjoint(&self) -> Self {
        Self { trunc: self.trunc, theta: self.theta, coeffs: self.coeffs.adjoint() }
    }

    /// `‖f‖₂ = √(2πθ) ‖F‖_F`.
    pub fn l2_norm(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.theta).sqrt() * self.coeffs.norm()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.trunc != other.trunc || self.theta != other.theta {
            return Err(HdqError::SpecMismatch(format!(
                "(N, θ) = ({}, {}) vs ({}, {})",
                self.trunc, self.theta, other.trunc, other.theta
            )));
        }
        Ok(())
    }
}

/// `L_k^α(x)` for `k = 0..=deg` by the three-term recurrence in the degree.
pub fn laguerre(deg: usize, alpha: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(deg + 1);
    out.push(1.0);
    if deg >= 1 {
        out.push(1.0 + alpha - x);
    }
    for k in 1..deg {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Closed-form `b_mn` at `(q, p)`.
pub fn basis_value(m: usize, n: usize, theta: f64, q: f64, p: f64) -> C64 {
    if n < m {
        return basis_value(n, m, theta, q, p).conj();
    }
    let r2 = q * q + p * p;
    let t = 2.0 * r2 / theta;
    let d = n - m;
    // √(m!/n!) = Π_{j=m+1}^{n} j^{−1/2}
    let ratio: f64 = (m + 1..=n).map(|j| (j as f64).sqrt().recip()).product();
    let lag = laguerre(m, d as f64, t)[m];
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    // e^{−idφ} r^d = (q − ip)^d
    let z = C64::new(q, -p) * (2.0 / theta).sqrt();
    z.powu(d as u32) * (2.0 * sign * ratio * lag * (-r2 / theta).exp())
}

/// Sampled `b_mn` for `m, n < N` on a two-dimensional grid.
#[derive(Debug, Clone)]
pub struct BasisCache {
    spec: GridSpec,
    trunc: usize,
    funcs: Vec<GridFunction>,
}

pub fn synthesize_basis(spec: GridSpec, trunc: usize) -> Result<BasisCache> {
    if spec.n != 1 {
        return Err(HdqError::SpecMismatch(format!("matrix basis needs n = 1, got n = {}", spec.n)));
    }
    if trunc == 0 || trunc > MAX_TRUNC {
        return Err(HdqError::TruncationError(format!("N = {trunc} outside 1..={MAX_TRUNC}")));
    }
    let mut funcs = vec![GridFunction::zeros(spec); trunc * trunc];
    for m in 0..trunc {
        for n in m..trunc {
            let f = GridFunction::from_fn(spec, |x| basis_value(m, n, spec.theta, x[0], x[1]));
            if f.samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(HdqError::TruncationError(format!("b_{m}{n} overflowed on the grid")));
            }
            funcs[n * trunc + m] = f.conj();
            funcs[m * trunc + n] = f;
        }
    }
    Ok(BasisCache { spec, trunc, funcs })
}

impl BasisCache {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn get(&self, m: usize, n: usize) -> &GridFunction {
        &self.funcs[m * self.trunc + n]
    }

    /// `f_mn = (2πθ)⁻¹ ∫ f b_nm`.
    pub fn forward(&self, f: &GridFunction) -> Result<MatrixSymbol> {
        if !f.spec.same_as(&self.spec) {
            return Err(HdqError::SpecMismatch(format!("{:?} vs cache {:?}", f.spec, self.spec)));
        }
        let c = 1.0 / (2.0 * std::f64::consts::PI * self.spec.theta);
        let n = self.trunc;
        let coeffs = CMat::from_fn(n, n, |m, k| self.get(m, k).inner(f) * c);
        Ok(MatrixSymbol { trunc: n, theta: self.spec.theta, coeffs })
    }

    /// `f = Σ f_mn b_mn`.
    pub fn backward(&self, s: &MatrixSymbol) -> Result<GridFunction> {
        if s.trunc != self.trunc || s.theta != self.spec.theta {
            return Err(HdqError::SpecMismatch(format!(
                "symbol (N, θ) = ({}, {}) vs cache ({}, {})",
                s.trunc, s.theta, self.trunc, self.spec.theta
            )));
        }
        if s.is_identity() {
            return Err(HdqError::NotSquareIntegrable(
                "the unit Σ b_mm is a multiplier and has no L² grid representative".into(),
            ));
        }
        let mut out = vec![ZERO; self.spec.len()];
        for m in 0..self.trunc {
            for n in 0..self.trunc {
                let c = s.coeffs[(m, n)];
                if c == ZERO {
                    continue;
                }
                for (o, b) in out.iter_mut().zip(&self.get(m, n).samples) {
                    *o += c * b;
                }
            }
        }
        GridFunction::from_samples(self.spec, out)
    }

    /// Worst `|conj(b_mn) − b_nm|` and worst `|⟨b_mn, b_kl⟩ − 2πθ δδ|`.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let n = self.trunc;
        let norm = 2.0 * std::f64::consts::PI * self.spec.theta;
        let mut herm = 0.0f64;
        let mut orth = 0.0f64;
        for a in 0..n * n {
            let (m, k) = (a / n, a % n);
            let bc = self.get(m, k).conj();
            herm = herm.max(bc.samples.iter().zip(&self.get(k, m).samples).fold(0.0, |acc, (x, y)| acc.max((x - y).norm())));
            for b in 0..n * n {
                let g = self.funcs[a].inner(&self.funcs[b]);
                let expect = if a == b { norm } else { 0.0 };
                orth = orth.max((g - expect).norm());
            }
        }
        (herm, orth)
    }
}

/// Exact star product in coefficients.
pub fn matrix_product_oracle(f: &MatrixSymbol, g: &MatrixSymbol) -> Result<MatrixSymbol> {
    f.check_same(g)?;
    Ok(MatrixSymbol { trunc: f.trunc, theta: f.theta, coeffs: &f.coeffs * &g.coeffs })
}

/// `(Z₁)_mn = i√m δ_{m,n+1}` truncated to `size`.
pub fn ladder_z1(size: usize) -> CMat {
    CMat::from_fn(size, size, |m, n| if m == n + 1 { C64::new(0.0, (m as f64).sqrt()) } else { ZERO })
}

/// `(Z₂)_mn = −i√(m+1) δ_{m+1,n}`, the adjoint of `Z₁`.
pub fn ladder_z2(size: usize) -> CMat {
    ladder_z1(size).adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GbvMode {
    Usual,
    Operator,
}

/// `√(m^k)` with `0⁰ = 1`.
fn weight(m: usize, k: u32) -> f64 {
    (m.pow(k) as f64).sqrt()
}

/// Euclidean norm scaled by the largest entry, exact for a single nonzero term.
fn scaled_norm(v: &[f64]) -> f64 {
    let top = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if top == 0.0 {
        return 0.0;
    }
    top * v.iter().map(|x| (x / top).powi(2)).sum::<f64>().sqrt()
}

/// Usual: `(Σ m^k n^l |f_mn|²)^{1/2}`. Operator: sup of `‖Z_{i₁}⋯Z_{i_p} F Z_{j₁}⋯Z_{j_q}‖_F`
/// over `p ≤ k`, `q ≤ l`, letters in `{Z₁, Z₂}`, computed on a padded truncation so no word
/// leaves the matrix.
pub fn gbv_norm(x: &MatrixSymbol, k: u32, l: u32, mode: GbvMode) -> f64 {
    let n = x.trunc;
    match mode {
        GbvMode::Usual => {
            let mut v = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    v.push(weight(a, k) * weight(b, l) * x.coeffs[(a, b)].norm());
                }
            }
            scaled_norm(&v)
        }
        GbvMode::Operator => {
            let size = n + k.max(l) as usize;
            let mut f = CMat::zeros(size, size);
            f.view_mut((0, 0), (n, n)).copy_from(&x.coeffs);
            let z = [ladder_z1(size), ladder_z2(size)];
            let lefts = words(&z, k, size, true);
            let rights = words(&z, l, size, false);
            let mut best = 0.0f64;
            for a in &lefts {
                let af = a * &f;
                for b in &rights {
                    best = best.max((&af * b).norm());
                }
            }
            best
        }
    }
}

/// All products of at most `len` letters; left words are `Z_{i₁}⋯Z_{i_p}`, right words
/// `Z_{j_q}⋯Z_{j₁}` (the order in which right multiplications compose).
fn words(z: &[CMat; 2], len: u32, size: usize, left: bool) -> Vec<CMat> {
    let mut all = vec![CMat::identity(size, size)];
    let mut frontier = all.clone();
    for _ in 0..len {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for w in &frontier {
            for zi in z {
                next.push(if left { w * zi } else { zi * w });
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// `exp(sF)` in the matrix model.
pub fn matrix_star_exp(f: &MatrixSymbol, s: C64) -> MatrixSymbol {
    let a = &f.coeffs * s;
    MatrixSymbol { trunc: f.trunc, theta: f.theta, coeffs: a.exp() }
}
