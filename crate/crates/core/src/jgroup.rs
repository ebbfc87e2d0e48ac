//! Elementary normal j-group `𝕊 = ℝ × ℝ² × ℝ` (n = 1).
//!
//! Functions are sampled on a product grid with axes `(a, x_q, x_p, ℓ)`. The invariant
//! product is computed by conjugating the Moyal product `⋆⁰` for `ω_𝕊 = 2 da∧dℓ + ω`
//! with the intertwiner `U`. After the substitution `u = (2/θ) sinh(θt/2)` both `U` and
//! `U⁻¹` become a non-uniform DFT in `ℓ`, an `x` dilation and a uniform inverse DFT.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::grid::{
    fourier_multiplier_axis, fourier_shift, matrix_axis, permute, spectral_derivative, trig_interp_matrix,
    upsample_axis, validate_power_of_two, Axis,
};
use crate::kernel::{KernelEngine, PairSpec};
use crate::hilbert::Side;
use crate::linalg::{CMat, C64, ZERO};

/// Maximum number of evaluation points for the direct quadratures.
pub const MAX_DIRECT_POINTS: usize = 8;

fn omega2(x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[1] - x[1] * y[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JGroupElement {
    pub a: f64,
    pub x: [f64; 2],
    pub l: f64,
}

impl JGroupElement {
    pub fn new(a: f64, x: [f64; 2], l: f64) -> Self {
        Self { a, x, l }
    }

    pub fn identity() -> Self {
        Self::new(0.0, [0.0, 0.0], 0.0)
    }

    /// `(a,x,ℓ)·(a',x',ℓ') = (a+a', e^{−a'}x + x', e^{−2a'}ℓ + ℓ' + ½e^{−a'}ω(x,x'))`.
    pub fn mul(&self, o: &Self) -> Self {
        let e = (-o.a).exp();
        let x = [e * self.x[0] + o.x[0], e * self.x[1] + o.x[1]];
        // ω(x, x') = ω(x, e^{−a'}x + x'), which makes g·g⁻¹ = e hold exactly
        Self { a: self.a + o.a, x, l: e * e * self.l + o.l + 0.5 * e * omega2(self.x, x) }
    }

    pub fn inv(&self) -> Self {
        let e = self.a.exp();
        Self { a: -self.a, x: [-(e * self.x[0]), -(e * self.x[1])], l: -(e * e * self.l) }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.x.iter().all(|v| v.is_finite()) && self.l.is_finite()
    }

    /// Largest coordinate difference.
    pub fn distance(&self, o: &Self) -> f64 {
        [self.a - o.a, self.x[0] - o.x[0], self.x[1] - o.x[1], self.l - o.l].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.a, [-self.x[0], -self.x[1]], -self.l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupOp {
    Mul,
    Inv,
}

/// `Mul` returns `g·h`; `Inv` returns `g⁻¹` and ignores `h`.
pub fn group_op(g: &JGroupElement, h: &JGroupElement, kind: GroupOp) -> JGroupElement {
    match kind {
        GroupOp::Mul => g.mul(h),
        GroupOp::Inv => g.inv(),
    }
}

/// Moment-map generators, including the transvection extension `y'`, `E'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentGenerator {
    H,
    Y([f64; 2]),
    E,
    YPrime([f64; 2]),
    EPrime,
}

pub fn moment_map(gen: MomentGenerator, g: &JGroupElement) -> f64 {
    match gen {
        MomentGenerator::H => 2.0 * g.l,
        MomentGenerator::Y(y) => (-g.a).exp() * omega2(y, g.x),
        MomentGenerator::E => (-2.0 * g.a).exp(),
        MomentGenerator::YPrime(y) => g.a.exp() * omega2(y, g.x),
        MomentGenerator::EPrime => (2.0 * g.a).exp(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JGroupSpec {
    pub n: usize,
    pub a: Axis,
    pub xq: Axis,
    pub xp: Axis,
    pub l: Axis,
    pub theta: f64,
}

impl JGroupSpec {
    pub fn new(a: Axis, xq: Axis, xp: Axis, l: Axis, theta: f64) -> Result<Self> {
        for (ax, name) in [(a, "a"), (xq, "x_q"), (xp, "x_p"), (l, "ℓ")] {
            validate_power_of_two(ax.m, &format!("{name} grid size"))?;
            if !(ax.l.is_finite() && ax.l > 0.0) {
                return Err(HdqError::SpecMismatch(format!("{name} half-width must be positive, got {}", ax.l)));
            }
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(HdqError::SpecMismatch(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { n: 1, a, xq, xp, l, theta })
    }

    /// 32 points per axis, `a ∈ [−3,3)`, `x ∈ [−6√θ, 6√θ)`, `ℓ ∈ [−8,8)`.
    pub fn standard(theta: f64) -> Self {
        let x = Axis::new(32, 6.0 * theta.sqrt());
        Self::new(Axis::new(32, 3.0), x, x, Axis::new(32, 8.0), theta).expect("default j-group grid")
    }

    /// [`JGroupSpec::standard`] with `ℓ ∈ [−16,16)` on 128 points. `ℓ`-multipliers and `U⁻¹`
    /// only decay like `e^{−c|ℓ|}` and `U⁻¹` stretches `ℓ`-frequencies by `sinh`, so identities
    /// that chain them need both the longer box and the finer step.
    pub fn extended(theta: f64) -> Self {
        let s = Self::standard(theta);
        Self { l: Axis::new(128, 16.0), ..s }
    }

    pub fn axes(&self) -> [Axis; 4] {
        [self.a, self.xq, self.xp, self.l]
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.a.m, self.xq.m, self.xp.m, self.l.m]
    }

    pub fn len(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self) -> f64 {
        self.axes().iter().map(|a| a.h()).product()
    }

    pub fn index(&self, i: usize, j: usize, k: usize, m: usize) -> usize {
        let d = self.dims();
        ((i * d[1] + j) * d[2] + k) * d[3] + m
    }

    pub fn element(&self, flat: usize) -> JGroupElement {
        let d = self.dims();
        let m = flat % d[3];
        let k = (flat / d[3]) % d[2];
        let j = (flat / (d[3] * d[2])) % d[1];
        let i = flat / (d[3] * d[2] * d[1]);
        JGroupElement::new(self.a.point(i), [self.xq.point(j), self.xp.point(k)], self.l.point(m))
    }

    pub fn same_as(&self, o: &Self) -> bool {
        self == o
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JGroupFunction {
    pub spec: JGroupSpec,
    pub samples: Vec<C64>,
}

impl JGroupFunction {
    pub fn zeros(spec: JGroupSpec) -> Self {
        Self { spec, samples: vec![ZERO; spec.len()] }
    }

    pub fn from_samples(spec: JGroupSpec, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(HdqError::SpecMismatch(format!("expected {} samples, got {}", spec.len(), samples.len())));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(HdqError::SpecMismatch("non-finite sample".into()));
        }
        Ok(Self { spec, samples })
    }

    pub fn from_fn<F: Fn(&JGroupElement) -> C64>(spec: JGroupSpec, f: F) -> Self {
        Self { spec, samples: (0..spec.len()).map(|k| f(&spec.element(k))).collect() }
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if !self.spec.same_as(&o.spec) {
            return Err(HdqError::SpecMismatch("j-group functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        (self.spec.cell() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// `∫ conj(f) g`.
    pub fn inner(&self, o: &Self) -> C64 {
        self.samples.iter().zip(&o.samples).map(|(a, b)| a.conj() * b).sum::<C64>() * self.spec.cell()
    }

    pub fn integral(&self) -> C64 {
        self.samples.iter().sum::<C64>() * self.spec.cell()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        Self { spec: self.spec, samples: self.samples.iter().map(|&z| f(z)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    fn zip<F: Fn(C64, C64) -> C64>(&self, o: &Self, f: F) -> Self {
        Self { spec: self.spec, samples: self.samples.iter().zip(&o.samples).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn pointwise(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a * b)
    }

    /// `‖self − reference‖ / ‖reference‖`, or the absolute norm when the reference vanishes.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        let d = self.sub(reference).norm();
        let r = reference.norm();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    pub fn multiply_by<F: Fn(&JGroupElement) -> C64>(&self, f: F) -> Self {
        let spec = self.spec;
        Self { spec, samples: self.samples.iter().enumerate().map(|(k, z)| z * f(&spec.element(k))).collect() }
    }

    /// Spectral derivative along axis `0..4` = `(a, x_q, x_p, ℓ)`.
    pub fn derivative(&self, axis: usize, order: usize) -> Self {
        let mut data = self.samples.clone();
        spectral_derivative(&mut data, &self.spec.dims(), axis, self.spec.axes()[axis], order);
        Self { spec: self.spec, samples: data }
    }

    /// `g ↦ f(g)` shifted by `s` along one axis: `f(…, x_axis − s, …)`.
    pub fn shifted(&self, axis: usize, s: f64) -> Self {
        let mut data = self.samples.clone();
        fourier_shift(&mut data, &self.spec.dims(), axis, self.spec.axes()[axis], s);
        Self { spec: self.spec, samples: data }
    }

    /// Fourier multiplier `m(κ)` in `ℓ`.
    pub fn ell_multiplier<F: Fn(f64) -> C64>(&self, m: F) -> Self {
        let ax = self.spec.l;
        let mut data = self.samples.clone();
        fourier_multiplier_axis(&mut data, &self.spec.dims(), 3, |k| {
            if ax.is_nyquist_bin(k) {
                ZERO
            } else {
                m(ax.wavenumber(k))
            }
        });
        Self { spec: self.spec, samples: data }
    }

    /// Trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, g: &JGroupElement) -> C64 {
        let [a, q, p, l] = self.spec.axes();
        let w: Vec<Vec<C64>> = [(a, g.a), (q, g.x[0]), (p, g.x[1]), (l, g.l)]
            .iter()
            .map(|&(ax, v)| trig_interp_matrix(ax, &[v]))
            .collect();
        let d = self.spec.dims();
        let mut acc = ZERO;
        for i in 0..d[0] {
            for j in 0..d[1] {
                let wij = w[0][i] * w[1][j];
                for k in 0..d[2] {
                    let wijk = wij * w[2][k];
                    let base = self.spec.index(i, j, k, 0);
                    let line: C64 = (0..d[3]).map(|m| w[3][m] * self.samples[base + m]).sum();
                    acc += wijk * line;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Trigonometric interpolation at `c·x_j`; rows landing outside the box are zero.
fn dilation_matrix(ax: Axis, c: f64) -> Vec<C64> {
    let targets: Vec<f64> = ax.points().iter().map(|x| c * x).collect();
    let mut mat = trig_interp_matrix(ax, &targets);
    for (r, &t) in targets.iter().enumerate() {
        if t < -ax.l || t >= ax.l {
            mat[r * ax.m..(r + 1) * ax.m].iter_mut().for_each(|z| *z = ZERO);
        }
    }
    mat
}

/// `out(ℓ_m) = (1/(M h)) Σ_k e^{i σ_k ℓ_m} w_k F_k(c_k x)`, `F_k(x) = h Σ_j f(x, ℓ_j) e^{−i ν_k ℓ_j}`.
fn ell_dilation_transform(
    f: &JGroupFunction,
    analysis: &[Option<f64>],
    synthesis: &[f64],
    dilation: &[f64],
    weight: &[f64],
) -> JGroupFunction {
    let spec = f.spec;
    let lax = spec.l;
    let mm = lax.m;
    let h = lax.h();
    let lp = lax.points();
    let dims = spec.dims();
    let mut ana = vec![ZERO; mm * mm];
    for (k, nu) in analysis.iter().enumerate() {
        if let Some(nu) = nu {
            for j in 0..mm {
                ana[k * mm + j] = C64::from_polar(h, -nu * lp[j]);
            }
        }
    }
    let (d1, dims1) = matrix_axis(&f.samples, &dims, 3, &ana, mm);
    let (mut d2, dims2) = permute(&d1, &dims1, &[3, 0, 1, 2]);
    let slab = dims[0] * dims[1] * dims[2];
    let sub = [dims[0], dims[1], dims[2]];
    for k in 0..mm {
        let s = &mut d2[k * slab..(k + 1) * slab];
        if analysis[k].is_none() || weight[k] == 0.0 {
            s.iter_mut().for_each(|z| *z = ZERO);
            continue;
        }
        let (t1, _) = matrix_axis(s, &sub, 1, &dilation_matrix(spec.xq, dilation[k]), dims[1]);
        let (t2, _) = matrix_axis(&t1, &sub, 2, &dilation_matrix(spec.xp, dilation[k]), dims[2]);
        for (z, v) in s.iter_mut().zip(t2) {
            *z = v * weight[k];
        }
    }
    let scale = 1.0 / (mm as f64 * h);
    let mut syn = vec![ZERO; mm * mm];
    for m in 0..mm {
        for k in 0..mm {
            syn[m * mm + k] = C64::from_polar(scale, synthesis[k] * lp[m]);
        }
    }
    let (d3, dims3) = matrix_axis(&d2, &dims2, 0, &syn, mm);
    let (out, _) = permute(&d3, &dims3, &[1, 2, 3, 0]);
    JGroupFunction { spec, samples: out }
}

/// `U` (forward) or `U⁻¹` (inverse).
pub fn intertwiner(f: &JGroupFunction, direction: Direction) -> Result<JGroupFunction> {
    let spec = f.spec;
    let th = spec.theta;
    let lax = spec.l;
    let n = spec.n as i32;
    let mm = lax.m;
    let mut analysis = vec![None; mm];
    let mut synthesis = vec![0.0; mm];
    let mut dilation = vec![1.0; mm];
    let mut weight = vec![0.0; mm];
    for k in 0..mm {
        let s = lax.wavenumber(k);
        synthesis[k] = s;
        if lax.is_nyquist_bin(k) {
            continue;
        }
        match direction {
            Direction::Forward => {
                // σ = u, ν = t(u)
                let t = (2.0 / th) * (th * s / 2.0).asinh();
                let c = (th * t / 4.0).cosh();
                analysis[k] = Some(t);
                dilation[k] = c;
                weight[k] = (th * t / 2.0).cosh().powf(-0.5) * c.powi(n);
            }
            Direction::Inverse => {
                // σ = t, ν = u(t)
                let u = (2.0 / th) * (th * s / 2.0).sinh();
                let c = (th * s / 4.0).cosh();
                if u.abs() <= lax.nyquist() {
                    analysis[k] = Some(u);
                }
                dilation[k] = 1.0 / c;
                weight[k] = (th * s / 2.0).cosh().sqrt() / c.powi(n);
            }
        }
        if !weight[k].is_finite() || !dilation[k].is_finite() {
            return Err(HdqError::QuadratureError(format!("intertwiner weight overflow at t-bin {k}")));
        }
    }
    Ok(ell_dilation_transform(f, &analysis, &synthesis, &dilation, &weight))
}

/// Kernel engine for `⋆⁰`: pairs `(a, ℓ)` with `θ/2` and `(x_q, x_p)` with `θ`.
pub fn star0_engine(spec: &JGroupSpec) -> Result<KernelEngine> {
    KernelEngine::new(vec![
        PairSpec { q: spec.a, p: spec.l, theta_e: spec.theta / 2.0 },
        PairSpec { q: spec.xq, p: spec.xp, theta_e: spec.theta },
    ])
}

fn to_pairs(f: &JGroupFunction) -> Vec<C64> {
    permute(&f.samples, &f.spec.dims(), &[0, 3, 1, 2]).0
}

fn from_pairs(spec: JGroupSpec, data: &[C64]) -> JGroupFunction {
    let d = spec.dims();
    let (out, _) = permute(data, &[d[0], d[3], d[1], d[2]], &[0, 2, 3, 1]);
    JGroupFunction { spec, samples: out }
}

/// Moyal product `⋆⁰` on `ℝ⁴` for `ω_𝕊 = 2 da∧dℓ + ω`, normalized so that 1 is the unit.
pub fn star0_product(f: &JGroupFunction, g: &JGroupFunction) -> Result<JGroupFunction> {
    f.check_same(g)?;
    let eng = star0_engine(&f.spec)?;
    Ok(from_pairs(f.spec, &eng.product(&to_pairs(f), &to_pairs(g))))
}

/// `f ⋆ g = U((U⁻¹f) ⋆⁰ (U⁻¹g))`.
pub fn jstar_product(f: &JGroupFunction, g: &JGroupFunction) -> Result<JGroupFunction> {
    f.check_same(g)?;
    let eng = star0_engine(&f.spec)?;
    let fi = intertwiner(f, Direction::Inverse)?;
    let gi = intertwiner(g, Direction::Inverse)?;
    let p = from_pairs(f.spec, &eng.product(&to_pairs(&fi), &to_pairs(&gi)));
    intertwiner(&p, Direction::Forward)
}

/// Samples of `∫ f(·, ·, ℓ) e^{−iνℓ} dℓ` (trapezoid), zero above the `ℓ` Nyquist frequency.
fn ell_fourier_at(data: &[C64], outer: usize, lax: Axis, nu: f64, out: &mut [C64]) {
    if nu.abs() > lax.nyquist() {
        out.iter_mut().for_each(|z| *z = ZERO);
        return;
    }
    let m = lax.m;
    let e: Vec<C64> = (0..m).map(|j| C64::from_polar(lax.h(), -nu * lax.point(j))).collect();
    for (o, z) in out.iter_mut().enumerate().take(outer) {
        *z = data[o * m..(o + 1) * m].iter().zip(&e).map(|(a, b)| a * b).sum();
    }
}

/// Separable sum `Σ_{x₁,x₂} F₁(x₁) F₂(x₂) e^{−iκ ω(x₁,x₂)}` on a `(q, p)` grid.
fn bilinear_omega_sum(f1: &[C64], f2: &[C64], xq: &[f64], xp: &[f64], kappa: f64) -> C64 {
    let (nq, np) = (xq.len(), xp.len());
    // G[x₂q][x₁q] = Σ_{x₂p} e^{−iκ x₁q x₂p} F₂[x₂q, x₂p]
    let eq: Vec<C64> = (0..nq * np).map(|r| C64::from_polar(1.0, -kappa * xq[r / np] * xp[r % np])).collect();
    let mut g = vec![ZERO; nq * nq];
    for i2 in 0..nq {
        let row = &f2[i2 * np..(i2 + 1) * np];
        for i1 in 0..nq {
            g[i2 * nq + i1] = row.iter().zip(&eq[i1 * np..(i1 + 1) * np]).map(|(a, b)| a * b).sum();
        }
    }
    // H[x₁q][x₁p] = Σ_{x₂q} e^{iκ x₁p x₂q} G[x₂q][x₁q]
    let mut acc = ZERO;
    for i1 in 0..nq {
        let col: Vec<C64> = (0..nq).map(|i2| g[i2 * nq + i1]).collect();
        for j1 in 0..np {
            let h: C64 = col.iter().enumerate().map(|(i2, c)| c * C64::from_polar(1.0, kappa * xp[j1] * xq[i2])).sum();
            acc += f1[i1 * np + j1] * h;
        }
    }
    acc
}

/// Index range along `axis` outside of which all samples are below `tol · max`.
fn support_range(data: &[C64], dims: &[usize], axis: usize, tol: f64) -> (usize, usize) {
    let inner: usize = dims[axis + 1..].iter().product();
    let n = dims[axis];
    let mut marg = vec![0.0f64; n];
    for (k, z) in data.iter().enumerate() {
        let i = (k / inner) % n;
        marg[i] = marg[i].max(z.norm());
    }
    let mx = marg.iter().cloned().fold(0.0, f64::max);
    if mx == 0.0 {
        return (0, 0);
    }
    let lo = marg.iter().position(|&v| v > tol * mx).unwrap_or(0);
    let hi = marg.iter().rposition(|&v| v > tol * mx).unwrap_or(n - 1) + 1;
    (lo, hi)
}

/// `x` axes upsampled by two and cropped to the joint support of `f` and `g`.
struct DirectGrid {
    xq: Vec<f64>,
    xp: Vec<f64>,
    hx: f64,
    f: Vec<C64>,
    g: Vec<C64>,
}

fn direct_grid(f: &JGroupFunction, g: &JGroupFunction) -> DirectGrid {
    let spec = f.spec;
    let d = spec.dims();
    let up = |s: &[C64]| {
        let (u1, d1) = upsample_axis(s, &d, 1, 2);
        upsample_axis(&u1, &d1, 2, 2)
    };
    let (fu, du) = up(&f.samples);
    let (gu, _) = up(&g.samples);
    let both: Vec<C64> = fu.iter().zip(&gu).map(|(a, b)| C64::new(a.norm().max(b.norm()), 0.0)).collect();
    let (q0, q1) = support_range(&both, &du, 1, 1e-13);
    let (p0, p1) = support_range(&both, &du, 2, 1e-13);
    let aq = Axis::new(du[1], spec.xq.l);
    let ap = Axis::new(du[2], spec.xp.l);
    let crop = |s: &[C64]| {
        let mut out = Vec::with_capacity(d[0] * (q1 - q0) * (p1 - p0) * d[3]);
        for i in 0..d[0] {
            for j in q0..q1 {
                for k in p0..p1 {
                    let b = ((i * du[1] + j) * du[2] + k) * d[3];
                    out.extend_from_slice(&s[b..b + d[3]]);
                }
            }
        }
        out
    };
    DirectGrid {
        xq: (q0..q1).map(|j| aq.point(j)).collect(),
        xp: (p0..p1).map(|k| ap.point(k)).collect(),
        hx: aq.h() * ap.h(),
        f: crop(&fu),
        g: crop(&gu),
    }
}

/// Direct quadrature of the invariant product at a few points. The `ℓ₁`, `ℓ₂` integrals
/// are Fourier transforms at `−(2/θ) sinh 2(a₂−a)` and `−(2/θ) sinh 2(a−a₁)`; the
/// remaining `(a₁, x₁, a₂, x₂)` sum uses the grid of the arguments with `x` refined twice.
pub fn jstar_kernel_direct(f: &JGroupFunction, g: &JGroupFunction, points: &[JGroupElement]) -> Result<Vec<C64>> {
    f.check_same(g)?;
    if points.len() > MAX_DIRECT_POINTS {
        return Err(HdqError::ResourceError(format!(
            "direct kernel limited to {MAX_DIRECT_POINTS} points, got {}",
            points.len()
        )));
    }
    let spec = f.spec;
    let th = spec.theta;
    let n = spec.n as i32;
    let dg = direct_grid(f, g);
    let (nq, np) = (dg.xq.len(), dg.xp.len());
    let na = spec.a.m;
    let slab = nq * np;
    let ap = spec.a.points();
    let ha = spec.a.h();
    let mut out = Vec::with_capacity(points.len());
    for pt in points {
        let (a, x, l) = (pt.a, pt.x, pt.l);
        // F₁[a₂][a₁][x₁], F₂[a₁][a₂][x₂]
        let mut f1 = vec![ZERO; na * na * slab];
        let mut f2 = vec![ZERO; na * na * slab];
        for j in 0..na {
            let nu1 = -(2.0 / th) * (2.0 * (ap[j] - a)).sinh();
            ell_fourier_at(&dg.f, na * slab, spec.l, nu1, &mut f1[j * na * slab..(j + 1) * na * slab]);
            let nu2 = -(2.0 / th) * (2.0 * (a - ap[j])).sinh();
            ell_fourier_at(&dg.g, na * slab, spec.l, nu2, &mut f2[j * na * slab..(j + 1) * na * slab]);
        }
        let mut acc = ZERO;
        let mut w1 = vec![ZERO; slab];
        let mut w2 = vec![ZERO; slab];
        for i1 in 0..na {
            for i2 in 0..na {
                let (a1, a2) = (ap[i1], ap[i2]);
                let s1 = &f1[(i2 * na + i1) * slab..(i2 * na + i1 + 1) * slab];
                let s2 = &f2[(i1 * na + i2) * slab..(i1 * na + i2 + 1) * slab];
                if s1.iter().all(|z| *z == ZERO) || s2.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let c1 = (a1 - a).cosh() * (a2 - a).cosh();
                let c2 = (a1 - a).cosh() * (a1 - a2).cosh();
                let c3 = (a1 - a2).cosh() * (a2 - a).cosh();
                let amp = 4.0
                    * ((2.0 * (a1 - a2)).cosh() * (2.0 * (a1 - a)).cosh() * (2.0 * (a - a2)).cosh()).sqrt()
                    * ((a2 - a).cosh() * (a1 - a).cosh() * (a1 - a2).cosh()).powi(n);
                for r in 0..slab {
                    let xr = [dg.xq[r / np], dg.xp[r % np]];
                    w1[r] = s1[r] * C64::from_polar(1.0, -(2.0 / th) * c3 * omega2(x, xr));
                    w2[r] = s2[r] * C64::from_polar(1.0, -(2.0 / th) * c2 * omega2(xr, x));
                }
                let xs = bilinear_omega_sum(&w1, &w2, &dg.xq, &dg.xp, 2.0 * c1 / th);
                acc += xs * C64::from_polar(amp, (2.0 / th) * (2.0 * (a1 - a2)).sinh() * l);
            }
        }
        let norm = ha * ha * dg.hx * dg.hx / (PI * th).powi(2 * spec.n as i32 + 2);
        out.push(acc * norm);
    }
    Ok(out)
}

/// Integral operator on `L²(a₀, v₀)`, `(Ωφ)(r) = δ Σ_c K(r, c) φ(c)`, rows ordered `(a₀, v₀)`.
#[derive(Debug, Clone)]
pub struct JOperator {
    pub a_axis: Axis,
    pub v_axis: Axis,
    pub kernel: CMat,
    engine: KernelEngine,
}

impl JOperator {
    pub fn delta(&self) -> f64 {
        self.engine.delta()
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { kernel: self.engine.compose(&self.kernel, &other.kernel), ..self.clone() }
    }

    pub fn adjoint(&self) -> Self {
        Self { kernel: self.kernel.adjoint(), ..self.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { kernel: &self.kernel - &other.kernel, ..self.clone() }
    }

    pub fn hs_norm(&self) -> f64 {
        self.engine.hs_norm(&self.kernel)
    }

    pub fn row(&self, ia: usize, iv: usize) -> usize {
        ia * self.v_axis.m + iv
    }

    /// `Ωφ` on the kernel grid.
    pub fn apply<P: Fn(f64, f64) -> C64>(&self, phi: P) -> Vec<C64> {
        let mv = self.v_axis.m;
        let v: Vec<C64> =
            (0..self.kernel.ncols()).map(|c| phi(self.a_axis.point(c / mv), self.v_axis.point(c % mv))).collect();
        let d = self.delta();
        (0..self.kernel.nrows()).map(|r| self.kernel.row(r).iter().zip(&v).map(|(k, p)| k * p).sum::<C64>() * d).collect()
    }
}

/// `Ω = Ω⁰ ∘ U⁻¹` with positions `(a, x_q)` and momenta `(ℓ, x_p)`.
pub fn quantize(f: &JGroupFunction) -> Result<JOperator> {
    let eng = star0_engine(&f.spec)?;
    let fi = intertwiner(f, Direction::Inverse)?;
    let kernel = eng.kernel(&to_pairs(&fi));
    Ok(JOperator { a_axis: eng.kernel_axis(0), v_axis: eng.kernel_axis(1), kernel, engine: eng })
}

/// Expected `‖Ω(f)‖_HS / ‖f‖`, `(πθ)^{−1/2} (2πθ)^{−1/2}`.
pub fn quantize_isometry_constant(theta: f64) -> f64 {
    ((PI * theta) * (2.0 * PI * theta)).sqrt().recip()
}

/// Direct quadrature of the quantization integral for `(Ω(f)φ)(a₀, v₀)` over the grid of `f`.
pub fn quantize_direct<P: Fn(f64, f64) -> C64>(f: &JGroupFunction, phi: P, a0: f64, v0: f64) -> C64 {
    let spec = f.spec;
    let th = spec.theta;
    let n = spec.n as i32;
    let [aa, qa, pa, la] = spec.axes();
    let lp = la.points();
    let mut acc = ZERO;
    for i in 0..aa.m {
        let a = aa.point(i);
        let c = (a - a0).cosh();
        let amp = (2.0 * (a - a0)).cosh().sqrt() * c.powi(n);
        let s2 = (2.0 * (a - a0)).sinh();
        let el: Vec<C64> = lp.iter().map(|l| C64::from_polar(1.0, (2.0 / th) * s2 * l)).collect();
        for j in 0..qa.m {
            let v = qa.point(j);
            let ph = phi(2.0 * a - a0, 2.0 * c * v - v0);
            if ph == ZERO {
                continue;
            }
            for k in 0..pa.m {
                let w = pa.point(k);
                let base = spec.index(i, j, k, 0);
                let line: C64 = (0..la.m).map(|m| f.samples[base + m] * el[m]).sum();
                acc += line * C64::from_polar(amp, (2.0 / th) * (c * v - v0) * (c * w)) * ph;
            }
        }
    }
    acc * (2.0 * spec.cell() / (PI * th).powi(n + 1))
}

/// Numerator `c` of the Fourier prefactor `c/(πθ)^{n+1}`; `c = 2` makes both sides unitary.
pub const JFOURIER_PREFACTOR: f64 = 2.0;

fn side_sign(side: Side) -> f64 {
    match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    }
}

/// `ℱ_L` / `ℱ_R` by direct quadrature at a few points.
pub fn jfourier(f: &JGroupFunction, side: Side, points: &[JGroupElement]) -> Result<Vec<C64>> {
    if points.len() > MAX_DIRECT_POINTS {
        return Err(HdqError::ResourceError(format!(
            "direct transform limited to {MAX_DIRECT_POINTS} points, got {}",
            points.len()
        )));
    }
    let spec = f.spec;
    let th = spec.theta;
    let n = spec.n as i32;
    let sg = side_sign(side);
    let [aa, qa, pa, la] = spec.axes();
    let lp = la.points();
    let pref = JFOURIER_PREFACTOR / (PI * th).powi(n + 1) * spec.cell();
    let mut out = Vec::with_capacity(points.len());
    for g in points {
        let mut acc = ZERO;
        for i in 0..aa.m {
            let a1 = aa.point(i);
            let amp = ((2.0 * g.a).cosh() * (2.0 * a1).cosh()).sqrt() * (g.a.cosh() * a1.cosh()).powi(n);
            let cc = g.a.cosh() * a1.cosh();
            let el: Vec<C64> = lp.iter().map(|l1| C64::from_polar(1.0, -sg * (2.0 / th) * (2.0 * g.a).sinh() * l1)).collect();
            let mut part = ZERO;
            for j in 0..qa.m {
                for k in 0..pa.m {
                    let x1 = [qa.point(j), pa.point(k)];
                    let base = spec.index(i, j, k, 0);
                    let line: C64 = (0..la.m).map(|m| f.samples[base + m] * el[m]).sum();
                    part += line * C64::from_polar(1.0, sg * (2.0 / th) * cc * omega2(x1, g.x));
                }
            }
            acc += part * C64::from_polar(amp, sg * (2.0 / th) * (2.0 * a1).sinh() * g.l);
        }
        out.push(acc * pref);
    }
    Ok(out)
}

/// `ℱ_L` / `ℱ_R` on the whole grid: an `ℓ'` transform at `(2/θ) sinh 2a`, a separable `x'`
/// transform scaled by `cosh a cosh a'`, then a sum over `a'`. Frequencies above the
/// Nyquist limit of the summed axis are dropped.
pub fn jfourier_grid(f: &JGroupFunction, side: Side) -> JGroupFunction {
    let spec = f.spec;
    let th = spec.theta;
    let n = spec.n as i32;
    let sg = side_sign(side);
    let [aa, qa, pa, la] = spec.axes();
    let (na, nq, np, nl) = (aa.m, qa.m, pa.m, la.m);
    let slab = nq * np;
    // t1[a'][a][x'] = h_ℓ Σ_ℓ' f(a',x',ℓ') e^{∓... } at frequency (2/θ) sinh 2a
    let mut t1 = vec![ZERO; na * na * slab];
    for ia in 0..na {
        let nu = sg * (2.0 / th) * (2.0 * aa.point(ia)).sinh();
        let mut buf = vec![ZERO; na * slab];
        ell_fourier_at(&f.samples, na * slab, la, nu, &mut buf);
        for i1 in 0..na {
            t1[(i1 * na + ia) * slab..(i1 * na + ia + 1) * slab].copy_from_slice(&buf[i1 * slab..(i1 + 1) * slab]);
        }
    }
    let xq = qa.points();
    let xp = pa.points();
    let mut out = vec![ZERO; spec.len()];
    let pref = JFOURIER_PREFACTOR / (PI * th).powi(n + 1) * aa.h() * qa.h() * pa.h();
    for ia in 0..na {
        let a = aa.point(ia);
        // t3[x][ℓ] accumulated over a'
        let mut t3 = vec![ZERO; slab * nl];
        for i1 in 0..na {
            let a1 = aa.point(i1);
            let kap = sg * (2.0 / th) * a.cosh() * a1.cosh();
            let src = &t1[(i1 * na + ia) * slab..(i1 * na + ia + 1) * slab];
            // ω(x',x) = x'_q x_p − x'_p x_q
            let mq: Vec<C64> = (0..np * nq)
                .map(|r| {
                    let (kp, jq) = (r / nq, r % nq);
                    if (kap * xp[kp]).abs() > qa.nyquist() {
                        ZERO
                    } else {
                        C64::from_polar(1.0, kap * xq[jq] * xp[kp])
                    }
                })
                .collect();
            let mp: Vec<C64> = (0..nq * np)
                .map(|r| {
                    let (jq, kp) = (r / np, r % np);
                    if (kap * xq[jq]).abs() > pa.nyquist() {
                        ZERO
                    } else {
                        C64::from_polar(1.0, -kap * xp[kp] * xq[jq])
                    }
                })
                .collect();
            // s[j'][k] = Σ_{k'} e^{−iκ x'_p x_q} src[j'][k'], with output x_q index k
            let mut s = vec![ZERO; nq * nq];
            for j1 in 0..nq {
                for jq in 0..nq {
                    s[j1 * nq + jq] = (0..np).map(|k1| src[j1 * np + k1] * mp[jq * np + k1]).sum();
                }
            }
            let amp = ((2.0 * a).cosh() * (2.0 * a1).cosh()).sqrt() * (a.cosh() * a1.cosh()).powi(n);
            let el: Vec<C64> =
                la.points().iter().map(|l| C64::from_polar(amp, sg * (2.0 / th) * (2.0 * a1).sinh() * l)).collect();
            for jq in 0..nq {
                for kp in 0..np {
                    let v: C64 = (0..nq).map(|j1| s[j1 * nq + jq] * mq[kp * nq + j1]).sum();
                    if v == ZERO {
                        continue;
                    }
                    let row = &mut t3[(jq * np + kp) * nl..(jq * np + kp + 1) * nl];
                    for (r, e) in row.iter_mut().zip(&el) {
                        *r += v * e;
                    }
                }
            }
        }
        for (r, z) in t3.iter().enumerate() {
            out[ia * slab * nl + r] = z * pref;
        }
    }
    JGroupFunction { spec, samples: out }
}

/// Generators of the transvection symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JGenerator {
    /// `e^{−2ka}`; `k = −1` is `e^{2a}`.
    ExpA(i32),
    /// `e^{εa} ω(y, x)` with `ε = ±1`.
    Linear { eps: i32, y: [f64; 2] },
    /// `ℓ`.
    Ell,
}

impl JGenerator {
    pub fn validate(&self) -> Result<()> {
        if let JGenerator::Linear { eps, y } = self {
            if eps.abs() != 1 {
                return Err(HdqError::SpecMismatch(format!("ε must be ±1, got {eps}")));
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(HdqError::SpecMismatch("non-finite y".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Commutator,
    Anticommutator,
}

/// `y · ∇_x f`.
pub fn directional_x(f: &JGroupFunction, y: [f64; 2]) -> JGroupFunction {
    f.derivative(1, 1).scale(C64::new(y[0], 0.0)).add(&f.derivative(2, 1).scale(C64::new(y[1], 0.0)))
}

/// `x · ∇_x f`.
fn euler_x(f: &JGroupFunction) -> JGroupFunction {
    let dq = f.derivative(1, 1).multiply_by(|g| C64::new(g.x[0], 0.0));
    let dp = f.derivative(2, 1).multiply_by(|g| C64::new(g.x[1], 0.0));
    dq.add(&dp)
}

fn half_c(t: f64) -> f64 {
    (0.5 * t.asinh()).cosh()
}

fn half_s(t: f64) -> f64 {
    (0.5 * t.asinh()).sinh()
}

/// Closed forms of `[G, f]⋆` and `{G, f}⋆`. The `e^{−2ka}` and `ε` families act as Fourier
/// multipliers in `ℓ` (`κ ↔ −i∂_ℓ`); `{ℓ, f}` is the exact conjugate of `2ℓ·` under `U`.
pub fn generator_multiplication(gen: JGenerator, f: &JGroupFunction, part: Part) -> Result<JGroupFunction> {
    gen.validate()?;
    let th = f.spec.theta;
    Ok(match (gen, part) {
        (JGenerator::ExpA(k), Part::Commutator) => f
            .ell_multiplier(|kk| C64::new(-2.0 * (k as f64 * (th * kk / 2.0).asinh()).sinh(), 0.0))
            .multiply_by(|g| C64::new((-2.0 * k as f64 * g.a).exp(), 0.0)),
        (JGenerator::ExpA(k), Part::Anticommutator) => f
            .ell_multiplier(|kk| C64::new(2.0 * (k as f64 * (th * kk / 2.0).asinh()).cosh(), 0.0))
            .multiply_by(|g| C64::new((-2.0 * k as f64 * g.a).exp(), 0.0)),
        (JGenerator::Linear { eps, y }, Part::Commutator) => {
            let e = eps as f64;
            let dy = directional_x(f, y);
            let dl = f.derivative(3, 1).multiply_by(|g| C64::new(omega2(y, g.x), 0.0));
            dy.sub(&dl.scale(C64::new(e / 2.0, 0.0)))
                .multiply_by(|g| C64::new(0.0, th * (e * g.a).exp()))
        }
        (JGenerator::Linear { eps, y }, Part::Anticommutator) => {
            let e = eps as f64;
            let t1 = f
                .multiply_by(|g| C64::new(omega2(y, g.x), 0.0))
                .ell_multiplier(|kk| C64::new(2.0 * half_c(th * kk / 2.0).powi(2), 0.0));
            let t2 = directional_x(f, y)
                .ell_multiplier(|kk| C64::new(0.0, th * e * half_s(th * kk / 2.0) / half_c(th * kk / 2.0)));
            t1.add(&t2).multiply_by(|g| C64::new((e * g.a).exp(), 0.0))
        }
        (JGenerator::Ell, Part::Commutator) => f.derivative(0, 1).scale(C64::new(0.0, th / 2.0)),
        (JGenerator::Ell, Part::Anticommutator) => ell_anticommutator(f),
    })
}

/// `{ℓ, f}⋆ = 2U(ℓ·U⁻¹f)` in closed form: with `t = (2/θ) arcsinh(θu/2)`,
/// `½{ℓ,f}^ = i(ln(φ'/w))'(t) f̂ − i(c'/c)(t) (x·∇f)^ + cosh(θt/2) (ℓf)^`.
fn ell_anticommutator(f: &JGroupFunction) -> JGroupFunction {
    let th = f.spec.theta;
    let n = f.spec.n as f64;
    let t_of = move |u: f64| (2.0 / th) * (th * u / 2.0).asinh();
    let t1 = f.ell_multiplier(|u| {
        let t = t_of(u);
        C64::new(0.0, (th / 4.0) * (th * t / 2.0).tanh() - n * (th / 4.0) * (th * t / 4.0).tanh())
    });
    let t2 = euler_x(f).ell_multiplier(|u| C64::new(0.0, -(th / 4.0) * (th * t_of(u) / 4.0).tanh()));
    let t3 = f
        .multiply_by(|g| C64::new(g.l, 0.0))
        .ell_multiplier(|u| C64::new((1.0 + (th * u / 2.0).powi(2)).sqrt(), 0.0));
    t1.add(&t2).add(&t3).scale(C64::new(2.0, 0.0))
}

/// Multiplies the `ℓ`-Fourier coefficients `H_β(a, x)` by `m(a, β)`.
fn ell_mode_map<M: Fn(f64, f64) -> C64>(h: &JGroupFunction, m: M) -> JGroupFunction {
    let spec = h.spec;
    let dims = spec.dims();
    let mut data = h.samples.clone();
    crate::grid::fft_axis(&mut data, &dims, 3, false);
    let lax = spec.l;
    for (k, z) in data.iter_mut().enumerate() {
        let b = k % dims[3];
        let ia = k / (dims[1] * dims[2] * dims[3]);
        *z *= if lax.is_nyquist_bin(b) { ZERO } else { m(spec.a.point(ia), lax.wavenumber(b)) };
    }
    crate::grid::fft_axis(&mut data, &dims, 3, true);
    JGroupFunction { spec, samples: data }
}

/// Same quantities through the intertwiner: `U([G, U⁻¹f]⋆⁰)`, with `⋆⁰` by generator
/// evaluated exactly from the mixed law `u(a) ⋆⁰ H(a)e^{iβℓ} = u(a + θβ/4) H(a) e^{iβℓ}`.
pub fn generator_multiplication_route(gen: JGenerator, f: &JGroupFunction, part: Part) -> Result<JGroupFunction> {
    gen.validate()?;
    let th = f.spec.theta;
    let sg = match part {
        Part::Commutator => -1.0,
        Part::Anticommutator => 1.0,
    };
    let h = intertwiner(f, Direction::Inverse)?;
    let r = match gen {
        JGenerator::ExpA(k) => {
            let u = move |a: f64| (-2.0 * k as f64 * a).exp();
            ell_mode_map(&h, |a, b| C64::new(u(a + th * b / 4.0) + sg * u(a - th * b / 4.0), 0.0))
        }
        JGenerator::Linear { eps, y } => {
            let e = eps as f64;
            let u = move |a: f64| (e * a).exp();
            let eh = h.multiply_by(|g| C64::new(omega2(y, g.x), 0.0));
            let dh = directional_x(&h, y).scale(C64::new(0.0, th / 2.0));
            let plus = ell_mode_map(&eh.add(&dh), |a, b| C64::new(u(a + th * b / 4.0), 0.0));
            let minus = ell_mode_map(&eh.sub(&dh), |a, b| C64::new(u(a - th * b / 4.0), 0.0));
            plus.add(&minus.scale(C64::new(sg, 0.0)))
        }
        JGenerator::Ell => match part {
            Part::Commutator => h.derivative(0, 1).scale(C64::new(0.0, th / 2.0)),
            Part::Anticommutator => h.multiply_by(|g| C64::new(2.0 * g.l, 0.0)),
        },
    };
    intertwiner(&r, Direction::Forward)
}

/// `L_G f = G ⋆ f = ½({G,f} + [G,f])`.
pub fn generator_left(gen: JGenerator, f: &JGroupFunction) -> Result<JGroupFunction> {
    let a = generator_multiplication(gen, f, Part::Anticommutator)?;
    let c = generator_multiplication(gen, f, Part::Commutator)?;
    Ok(a.add(&c).scale(C64::new(0.5, 0.0)))
}

/// One Lie relation `[L_A, L_B] f = c · (L_C f)` with its relative residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LieRelation {
    pub name: String,
    pub residual: f64,
}

/// The transvection Lie relations as operator identities on `f`.
pub fn lie_relations(f: &JGroupFunction, y: [f64; 2], yp: [f64; 2]) -> Result<Vec<LieRelation>> {
    let th = f.spec.theta;
    let i_th = C64::new(0.0, th);
    let comm = |a: JGenerator, b: JGenerator| -> Result<JGroupFunction> {
        let ab = generator_left(a, &generator_left(b, f)?)?;
        let ba = generator_left(b, &generator_left(a, f)?)?;
        Ok(ab.sub(&ba))
    };
    let lin = |eps: i32, y: [f64; 2]| JGenerator::Linear { eps, y };
    let wyy = omega2(y, yp);
    let mut out = Vec::new();
    let mut push = |name: &str, lhs: JGroupFunction, rhs: JGroupFunction| {
        out.push(LieRelation { name: name.into(), residual: lhs.sub(&rhs).norm() / f.norm().max(f64::MIN_POSITIVE) });
    };
    push("[l,e^-2a] = -i theta e^-2a", comm(JGenerator::Ell, JGenerator::ExpA(1))?, generator_left(JGenerator::ExpA(1), f)?.scale(-i_th));
    push("[l,e^2a] = i theta e^2a", comm(JGenerator::Ell, JGenerator::ExpA(-1))?, generator_left(JGenerator::ExpA(-1), f)?.scale(i_th));
    push("[e^-a w(y,x), e^a w(y',x)] = -i theta w(y,y')", comm(lin(-1, y), lin(1, yp))?, f.scale(-i_th * wyy));
    push("[e^a w(y,x), e^-a w(y',x)] = -i theta w(y,y')", comm(lin(1, y), lin(-1, yp))?, f.scale(-i_th * wyy));
    push(
        "[e^-a w(y,x), e^-a w(y',x)] = -i theta w(y,y') e^-2a",
        comm(lin(-1, y), lin(-1, yp))?,
        generator_left(JGenerator::ExpA(1), f)?.scale(-i_th * wyy),
    );
    push(
        "[e^a w(y,x), e^a w(y',x)] = -i theta w(y,y') e^2a",
        comm(lin(1, y), lin(1, yp))?,
        generator_left(JGenerator::ExpA(-1), f)?.scale(-i_th * wyy),
    );
    push("[l,e^-a w(y,x)] = -(i theta/2) e^-a w(y,x)", comm(JGenerator::Ell, lin(-1, y))?, generator_left(lin(-1, y), f)?.scale(-i_th * 0.5));
    push("[l,e^a w(y,x)] = (i theta/2) e^a w(y,x)", comm(JGenerator::Ell, lin(1, y))?, generator_left(lin(1, y), f)?.scale(i_th * 0.5));
    Ok(out)
}

/// Polynomials with `cosh(k·arcsinh u) = P_k(u) ε(u)` and `sinh(k·arcsinh u) = Q_k(u) ε(u)`,
/// `ε ∈ {1, √(1+u²)}`, as ascending coefficient lists (`k ≥ 0`).
pub fn arcsinh_polynomials(k: usize) -> (Vec<f64>, Vec<f64>) {
    // C_k = cosh(kz), S_k = sinh(kz) with z = arcsinh u: C_{k+1} = C_k √(1+u²) + S_k u and
    // S_{k+1} = S_k √(1+u²) + C_k u. Track the part carrying √(1+u²) separately.
    type Pair = (Vec<f64>, Vec<f64>); // (plain, times √(1+u²))
    let mul_u = |p: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            r[i + 1] += c;
        }
        r
    };
    let mul_1u2 = |p: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; p.len() + 2];
        for (i, c) in p.iter().enumerate() {
            r[i] += c;
            r[i + 2] += c;
        }
        r
    };
    let add = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; a.len().max(b.len())];
        for (i, c) in a.iter().enumerate() {
            r[i] += c;
        }
        for (i, c) in b.iter().enumerate() {
            r[i] += c;
        }
        r
    };
    let mut c: Pair = (vec![1.0], vec![]);
    let mut s: Pair = (vec![], vec![]);
    for _ in 0..k {
        // multiplying by √(1+u²) swaps the two parts
        let nc = (add(&mul_1u2(&c.1), &mul_u(&s.0)), add(&c.0, &mul_u(&s.1)));
        let ns = (add(&mul_1u2(&s.1), &mul_u(&c.0)), add(&s.0, &mul_u(&c.1)));
        c = nc;
        s = ns;
    }
    let pick = |p: Pair| if k.is_multiple_of(2) { p.0 } else { p.1 };
    let trim = |mut v: Vec<f64>| {
        while v.last() == Some(&0.0) {
            v.pop();
        }
        v
    };
    let p = trim(pick(c));
    let q = trim(if k.is_multiple_of(2) { s.1 } else { s.0 });
    (p, q)
}

fn poly_multiplier(f: &JGroupFunction, coeffs: &[f64]) -> JGroupFunction {
    let th = f.spec.theta;
    f.ell_multiplier(|kk| {
        let u = th * kk / 2.0;
        C64::new(coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c), 0.0)
    })
}

/// `(‖[e^{−2ka},f]‖, ‖{e^{−2ka},f}‖)` next to the values predicted by the `P_k`, `Q_k` reduction.
pub fn exp_generator_norm_identities(k: usize, f: &JGroupFunction) -> Result<[(f64, f64); 2]> {
    let th = f.spec.theta;
    let (p, q) = arcsinh_polynomials(k);
    let weight = |h: JGroupFunction| h.multiply_by(|g| C64::new((-2.0 * k as f64 * g.a).exp(), 0.0));
    let pf = weight(poly_multiplier(f, &p));
    let qf = weight(poly_multiplier(f, &q));
    let with_eps1 = |h: &JGroupFunction| (4.0 * h.norm().powi(2) + th * th * h.derivative(3, 1).norm().powi(2)).sqrt();
    let plain = |h: &JGroupFunction| 2.0 * h.norm();
    let (pred_c, pred_a) = if k.is_multiple_of(2) { (with_eps1(&qf), plain(&pf)) } else { (plain(&qf), with_eps1(&pf)) };
    let c = generator_multiplication(JGenerator::ExpA(k as i32), f, Part::Commutator)?.norm();
    let a = generator_multiplication(JGenerator::ExpA(k as i32), f, Part::Anticommutator)?.norm();
    Ok([(c, pred_c), (a, pred_a)])
}

/// Fundamental vector fields of the left action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldGenerator {
    H,
    Y([f64; 2]),
    YPrime([f64; 2]),
    E,
    EPrime,
}

impl FieldGenerator {
    pub fn moment(&self) -> MomentGenerator {
        match *self {
            FieldGenerator::H => MomentGenerator::H,
            FieldGenerator::Y(y) => MomentGenerator::Y(y),
            FieldGenerator::YPrime(y) => MomentGenerator::YPrime(y),
            FieldGenerator::E => MomentGenerator::E,
            FieldGenerator::EPrime => MomentGenerator::EPrime,
        }
    }

    /// The generator whose moment map is `η_X`; `η_H = 2ℓ` is twice `ℓ`.
    pub fn generator(&self) -> (JGenerator, f64) {
        match *self {
            FieldGenerator::H => (JGenerator::Ell, 2.0),
            FieldGenerator::Y(y) => (JGenerator::Linear { eps: -1, y }, 1.0),
            FieldGenerator::YPrime(y) => (JGenerator::Linear { eps: 1, y }, 1.0),
            FieldGenerator::E => (JGenerator::ExpA(1), 1.0),
            FieldGenerator::EPrime => (JGenerator::ExpA(-1), 1.0),
        }
    }
}

/// `H* = −∂_a`, `y* = −e^{−a}∂_y + ½e^{−a}ω(x,y)∂_ℓ`, `E* = −e^{−2a}∂_ℓ`,
/// `y'* = −e^{a}∂_{y'} − ½e^{a}ω(x,y')∂_ℓ`, `E'* = −e^{2a}∂_ℓ`.
pub fn fundamental_field(field: FieldGenerator, f: &JGroupFunction) -> JGroupFunction {
    let dl = || f.derivative(3, 1);
    match field {
        FieldGenerator::H => f.derivative(0, 1).scale(C64::new(-1.0, 0.0)),
        FieldGenerator::E => dl().multiply_by(|g| C64::new(-(-2.0 * g.a).exp(), 0.0)),
        FieldGenerator::EPrime => dl().multiply_by(|g| C64::new(-(2.0 * g.a).exp(), 0.0)),
        FieldGenerator::Y(y) => {
            let t = dl().multiply_by(|g| C64::new(0.5 * omega2(g.x, y), 0.0));
            t.sub(&directional_x(f, y)).multiply_by(|g| C64::new((-g.a).exp(), 0.0))
        }
        FieldGenerator::YPrime(y) => {
            let t = dl().multiply_by(|g| C64::new(0.5 * omega2(g.x, y), 0.0));
            t.add(&directional_x(f, y)).multiply_by(|g| C64::new(-g.a.exp(), 0.0))
        }
    }
}

/// Relative residual of `[η_X, f]⋆ = −iθ X* f`.
pub fn fundamental_field_residual(field: FieldGenerator, f: &JGroupFunction) -> Result<f64> {
    let (gen, s) = field.generator();
    let lhs = generator_multiplication(gen, f, Part::Commutator)?.scale(C64::new(s, 0.0));
    let rhs = fundamental_field(field, f).scale(C64::new(0.0, -f.spec.theta));
    Ok(lhs.relative_error(&rhs))
}

/// Left-invariant vector fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftField {
    H,
    Y([f64; 2]),
    E,
}

/// `H̃ = ∂_a − x·∂_x − 2ℓ∂_ℓ`, `ỹ = y·∂_x + ½ω(x,y)∂_ℓ`, `Ẽ = ∂_ℓ`.
pub fn left_invariant_field(field: LeftField, f: &JGroupFunction) -> JGroupFunction {
    match field {
        LeftField::H => {
            let dl = f.derivative(3, 1).multiply_by(|g| C64::new(2.0 * g.l, 0.0));
            f.derivative(0, 1).sub(&euler_x(f)).sub(&dl)
        }
        LeftField::Y(y) => directional_x(f, y).add(&f.derivative(3, 1).multiply_by(|g| C64::new(0.5 * omega2(g.x, y), 0.0))),
        LeftField::E => f.derivative(3, 1),
    }
}

pub const MAX_MODIFIED_ORDER: usize = 3;

/// `sup |α^j P̃ f|` with `α = (ℓ, cosh a ω(e_q,x), cosh a ω(e_p,x), sinh 2a)`; the word is
/// applied right to left.
pub fn modified_schwartz_seminorm(f: &JGroupFunction, j: [usize; 4], word: &[LeftField]) -> Result<f64> {
    if j.iter().sum::<usize>() > MAX_MODIFIED_ORDER || word.len() > MAX_MODIFIED_ORDER {
        return Err(HdqError::SpecMismatch(format!(
            "modified seminorm orders limited to {MAX_MODIFIED_ORDER}, got |j| = {}, |P| = {}",
            j.iter().sum::<usize>(),
            word.len()
        )));
    }
    let mut h = f.clone();
    for w in word.iter().rev() {
        h = left_invariant_field(*w, &h);
    }
    let h = h.multiply_by(|g| {
        let al = [g.l, g.a.cosh() * omega2([1.0, 0.0], g.x), g.a.cosh() * omega2([0.0, 1.0], g.x), (2.0 * g.a).sinh()];
        C64::new(al.iter().zip(&j).map(|(a, &e)| a.powi(e as i32)).product(), 0.0)
    });
    Ok(h.max_abs())
}

fn sinhc(a: f64) -> f64 {
    if a.abs() < 1e-6 {
        1.0 + a * a / 6.0
    } else {
        a.sinh() / a
    }
}

/// Star exponential `E⋆((i/θ)(αη_H + η_y + η_{y'} + βη_E + β'η_{E'}))` sampled at `g`.
pub fn jstar_exp_at(alpha: f64, y: [f64; 2], yp: [f64; 2], beta: f64, betap: f64, theta: f64, g: &JGroupElement) -> C64 {
    let pre = alpha.cosh().sqrt() * (alpha / 2.0).cosh();
    let sc = sinhc(alpha);
    let ph = alpha.sinh() * 2.0 * g.l
        + sc * (beta * (-2.0 * g.a).exp() - betap * (2.0 * g.a).exp() + (-g.a).exp() * omega2(y, g.x) - g.a.exp() * omega2(yp, g.x));
    C64::from_polar(pre, ph / theta)
}

pub fn jstar_exp(alpha: f64, y: [f64; 2], yp: [f64; 2], beta: f64, betap: f64, spec: JGroupSpec) -> JGroupFunction {
    JGroupFunction::from_fn(spec, |g| jstar_exp_at(alpha, y, yp, beta, betap, spec.theta, g))
}

/// `E(α) ⋆ ψ = U(T_α U⁻¹ψ)` with `T_α h = h(a − α/2) e^{(2iα/θ)ℓ}`.
pub fn jstar_exp_multiply(alpha: f64, psi: &JGroupFunction) -> Result<JGroupFunction> {
    let th = psi.spec.theta;
    let h = intertwiner(psi, Direction::Inverse)?;
    let t = h.shifted(0, alpha / 2.0).multiply_by(|g| C64::from_polar(1.0, 2.0 * alpha * g.l / th));
    intertwiner(&t, Direction::Forward)
}

/// `(E(α) ⋆ ψ)(g)` from the direct kernel after the `ℓ₁` and `x₁` integrals collapse:
/// `(2/πθ) ∫ √(cosh 2(a₁−a*) cosh 2(a₁−a)) (cosh(a₁−a*)/cosh(a₁−a)) e^{(2i/θ)(sinh 2(a₁−a*) ℓ + sinh 2(a−a₁) ℓ₂)}
/// ψ(a*, x cosh(a₁−a*)/cosh(a₁−a), ℓ₂) da₁ dℓ₂` with `a* = a − α/2`.
pub fn jstar_exp_oracle<P: Fn(&JGroupElement) -> C64>(alpha: f64, psi: P, theta: f64, points: &[JGroupElement]) -> Vec<C64> {
    let a_ax = Axis::new(1024, 3.5);
    let l_ax = Axis::new(512, 14.0);
    points
        .iter()
        .map(|g| {
            let ast = g.a - alpha / 2.0;
            let mut acc = ZERO;
            for i in 0..a_ax.m {
                let a1 = g.a + a_ax.point(i);
                let r = (a1 - ast).cosh() / (a1 - g.a).cosh();
                let amp = ((2.0 * (a1 - ast)).cosh() * (2.0 * (a1 - g.a)).cosh()).sqrt() * r;
                let nu = (2.0 / theta) * (2.0 * (g.a - a1)).sinh();
                if nu.abs() > l_ax.nyquist() {
                    continue;
                }
                let x2 = [r * g.x[0], r * g.x[1]];
                let line: C64 = (0..l_ax.m)
                    .map(|m| {
                        let l2 = l_ax.point(m);
                        psi(&JGroupElement::new(ast, x2, l2)) * C64::from_polar(1.0, nu * l2)
                    })
                    .sum();
                acc += line * C64::from_polar(amp, (2.0 / theta) * (2.0 * (a1 - ast)).sinh() * g.l);
            }
            acc * (2.0 / (PI * theta) * a_ax.h() * l_ax.h())
        })
        .collect()
}

/// Worst relative deviation of `(𝕃f ⋆ 𝕃g)(g_k)` from `(f⋆g)(g₀⁻¹g_k)`, `𝕃f(g) = f(g₀⁻¹g)`,
/// scaled by `max |f⋆g|`.
pub fn left_invariance_defect<F, G>(f: F, g: G, g0: &JGroupElement, spec: JGroupSpec, points: &[usize]) -> Result<f64>
where
    F: Fn(&JGroupElement) -> C64,
    G: Fn(&JGroupElement) -> C64,
{
    let gi = g0.inv();
    let fs = JGroupFunction::from_fn(spec, &f);
    let gs = JGroupFunction::from_fn(spec, &g);
    let lf = JGroupFunction::from_fn(spec, |h| f(&gi.mul(h)));
    let lg = JGroupFunction::from_fn(spec, |h| g(&gi.mul(h)));
    let p = jstar_product(&fs, &gs)?;
    let q = jstar_product(&lf, &lg)?;
    let scale = p.max_abs().max(f64::MIN_POSITIVE);
    Ok(points
        .iter()
        .map(|&k| (q.samples[k] - p.eval(&gi.mul(&spec.element(k)))).norm() / scale)
        .fold(0.0, f64::max))
}
