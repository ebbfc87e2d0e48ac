//! Moyal product on truncated phase-space grids, its canonical multipliers and the Weyl map.
//!
//! Conventions: `ω((q,p),(q',p')) = q·p' − p·q'`, plane waves `E_a(x) = e^{i a·x}` multiply as
//! `E_a ⋆ E_b = e^{(iθ/2)ω(a,b)} E_{a+b}`, hence `[q, f] = −iθ ∂_p f` and `[p, f] = iθ ∂_q f`.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{HdqError, Result};
use crate::grid::{fft_axis, matrix_axis, omega, permute, Axis, GridFunction, GridSpec};
use crate::hilbert::Side;
use crate::kernel::{KernelEngine, PairSpec};
use crate::linalg::{CMat, C64, ZERO};

/// Most points accepted by [`moyal_direct`].
pub const MAX_DIRECT_POINTS: usize = 64;

/// Relative magnitude below which a Fourier mode is skipped by [`moyal_fast`].
const MODE_CUTOFF: f64 = 1e-16;

fn check_pair(f: &GridFunction, g: &GridFunction) -> Result<()> {
    f.check_same(g)
}

/// Separable phase transform `out[k] = Σ_j in[j] e^{i c a_k b_j}` along `axis`, with `a`
/// shifted by `offset`.
fn phase_axis(data: &[C64], dims: &[usize], axis: usize, ax: Axis, c: f64, offset: f64) -> Vec<C64> {
    let m = ax.m;
    let mut mat = vec![ZERO; m * m];
    for k in 0..m {
        let a = ax.point(k) - offset;
        for j in 0..m {
            mat[k * m + j] = C64::from_polar(1.0, c * a * ax.point(j));
        }
    }
    matrix_axis(data, dims, axis, &mat, m).0
}

/// Trapezoid quadrature of
/// `(f⋆g)(x) = (πθ)^{−2n} ∫∫ f(y) g(z) e^{−(2i/θ)(ω(y,z)+ω(z,x)+ω(x,y))} dy dz`
/// at the listed flat grid indices.
pub fn moyal_direct(f: &GridFunction, g: &GridFunction, points: &[usize]) -> Result<Vec<C64>> {
    check_pair(f, g)?;
    if points.len() > MAX_DIRECT_POINTS {
        return Err(HdqError::ResourceError(format!(
            "direct quadrature takes at most {MAX_DIRECT_POINTS} points, got {}",
            points.len()
        )));
    }
    let spec = f.spec;
    let n = spec.n;
    let dims = spec.dims();
    let ax = spec.axis();
    let c = 2.0 / spec.theta;
    let pref = (PI * spec.theta).powi(-2 * n as i32) * spec.cell() * spec.cell();
    let mut out = Vec::with_capacity(points.len());
    for &pt in points {
        if pt >= spec.len() {
            return Err(HdqError::SpecMismatch(format!("grid index {pt} out of range")));
        }
        let x = spec.point(pt);
        // ĝ(y − x) = Σ_z g(z) e^{−(2i/θ)ω(y−x, z)}, one axis of z at a time
        let mut data = g.samples.clone();
        for a in 0..2 * n {
            // z_q pairs with (y−x)_p with sign +, z_p with (y−x)_q with sign −
            let (partner, sign) = if a < n { (a + n, 1.0) } else { (a - n, -1.0) };
            data = phase_axis(&data, &dims, a, ax, sign * c, x[partner]);
        }
        // axis a now indexes y_{partner(a)}
        let order: Vec<usize> = (0..2 * n).map(|a| if a < n { a + n } else { a - n }).collect();
        let (ghat, _) = permute(&data, &dims, &order);
        let mut acc = ZERO;
        for (k, (&fy, &gh)) in f.samples.iter().zip(&ghat).enumerate() {
            if fy == ZERO {
                continue;
            }
            let y = spec.point(k);
            acc += fy * gh * C64::from_polar(1.0, -c * omega(&x, &y));
        }
        out.push(acc * pref);
    }
    Ok(out)
}

/// Full-grid product. For `n = 1` the `p` dependence is expanded in plane waves and each pair
/// of modes is combined with the translation law
/// `(u(q)e^{iαp}) ⋆ (v(q)e^{iβp}) = u(q + θβ/2) v(q − θα/2) e^{i(α+β)p}`; modes outside the
/// grid band are dropped. For `n ≥ 2` the product is evaluated as a kernel composition.
pub fn moyal_fast(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_pair(f, g)?;
    if f.spec.n == 1 {
        Ok(mixed_product(f, g))
    } else {
        kernel_product(f, g)
    }
}

fn mixed_product(f: &GridFunction, g: &GridFunction) -> GridFunction {
    let spec = f.spec;
    let m = spec.m;
    let ax = spec.axis();
    let theta = spec.theta;
    let dims = [m, m];
    let mut planner = FftPlanner::<f64>::new();
    let inv = planner.plan_fft_inverse(m);
    // modes along p, then spectra along q: S[k_p][k_q]
    let spectra = |h: &GridFunction| -> Vec<C64> {
        let mut d = h.samples.clone();
        fft_axis(&mut d, &dims, 1, false);
        fft_axis(&mut d, &dims, 0, false);
        let (t, _) = permute(&d, &dims, &[1, 0]);
        let s = 1.0 / (m * m) as f64;
        t.into_iter().map(|z| z * s).collect()
    };
    let fs = spectra(f);
    let gs = spectra(g);
    let active = |s: &[C64]| -> Vec<usize> {
        let mags: Vec<f64> = (0..m).map(|a| s[a * m..(a + 1) * m].iter().map(|z| z.norm()).sum()).collect();
        let top = mags.iter().cloned().fold(0.0, f64::max);
        (0..m).filter(|&a| top > 0.0 && mags[a] > MODE_CUTOFF * top).collect()
    };
    let fa = active(&fs);
    let ga = active(&gs);
    let signed = |k: usize| -> i64 {
        let k = k as i64;
        let mm = m as i64;
        if k < mm / 2 {
            k
        } else {
            k - mm
        }
    };
    let half = (m / 2) as i64;
    // line of a q-spectrum evaluated at q + s, in physical space (unnormalized inverse FFT)
    let shifted = |spec_line: &[C64], s: f64, buf: &mut Vec<C64>| {
        buf.clear();
        for (k, z) in spec_line.iter().enumerate() {
            let kk = ax.wavenumber(k);
            let w = if ax.is_nyquist_bin(k) { C64::new((kk * s).cos(), 0.0) } else { C64::from_polar(1.0, kk * s) };
            buf.push(z * w);
        }
        inv.process(buf);
    };
    let mut h = vec![ZERO; m * m];
    let mut ua = Vec::with_capacity(m);
    let mut vb = Vec::with_capacity(m);
    for &a in &fa {
        let alpha = ax.wavenumber(a);
        let fl = &fs[a * m..(a + 1) * m];
        for &b in &ga {
            let c = signed(a) + signed(b);
            if c < -half || c >= half {
                continue;
            }
            let ci = c.rem_euclid(m as i64) as usize;
            let beta = ax.wavenumber(b);
            shifted(fl, theta * beta / 2.0, &mut ua);
            shifted(&gs[b * m..(b + 1) * m], -theta * alpha / 2.0, &mut vb);
            let row = &mut h[ci * m..(ci + 1) * m];
            for ((o, u), v) in row.iter_mut().zip(&ua).zip(&vb) {
                *o += u * v;
            }
        }
    }
    // back to physical p: h currently [k_p][q]
    let (mut d, _) = permute(&h, &dims, &[1, 0]);
    fft_axis(&mut d, &dims, 1, true);
    let s = m as f64;
    let samples = d.into_iter().map(|z| z * s).collect();
    GridFunction { spec, samples }
}

fn pair_engine(spec: &GridSpec, theta_e: f64) -> Result<KernelEngine> {
    let ax = spec.axis();
    KernelEngine::new(vec![PairSpec { q: ax, p: ax, theta_e }; spec.n])
}

/// Grid order `(q₁..qₙ, p₁..pₙ)` to pair order `(q₁, p₁, q₂, p₂, …)`.
fn to_pairs(spec: &GridSpec, data: &[C64]) -> Vec<C64> {
    let n = spec.n;
    let order: Vec<usize> = (0..n).flat_map(|j| [j, n + j]).collect();
    permute(data, &spec.dims(), &order).0
}

fn from_pairs(spec: &GridSpec, data: &[C64]) -> Vec<C64> {
    let n = spec.n;
    let order: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
    permute(data, &spec.dims(), &order).0
}

fn kernel_product(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let spec = f.spec;
    let eng = pair_engine(&spec, spec.theta)?;
    let h = eng.product(&to_pairs(&spec, &f.samples), &to_pairs(&spec, &g.samples));
    Ok(GridFunction { spec, samples: from_pairs(&spec, &h) })
}

/// `(∫ f⋆g, ∫ f·g)`.
pub fn tracial_pairing(f: &GridFunction, g: &GridFunction) -> Result<(C64, C64)> {
    let star = moyal_fast(f, g)?;
    Ok((star.integral(), f.pointwise(g).integral()))
}

fn fourier_with_sign(f: &GridFunction, sign: f64) -> GridFunction {
    let spec = f.spec;
    let n = spec.n;
    let dims = spec.dims();
    let ax = spec.axis();
    let c = 2.0 / spec.theta;
    let h = spec.h();
    let mut data = f.samples.clone();
    for a in 0..2 * n {
        // ω(x,y) pairs y_p with x_q (+) and y_q with x_p (−)
        let s = if a < n { -sign } else { sign };
        data = phase_axis(&data, &dims, a, ax, s * c, 0.0);
    }
    let order: Vec<usize> = (0..2 * n).map(|a| if a < n { a + n } else { a - n }).collect();
    let (data, _) = permute(&data, &dims, &order);
    let pref = (PI * spec.theta).powi(-(n as i32)) * h.powi(2 * n as i32);
    GridFunction { spec, samples: data.into_iter().map(|z| z * pref).collect() }
}

/// `F_L f(x) = (πθ)^{−n} ∫ f(y) e^{(2i/θ)ω(x,y)} dy`; the right transform has the opposite sign.
pub fn symplectic_fourier(f: &GridFunction, side: Side) -> GridFunction {
    match side {
        Side::Left => fourier_with_sign(f, 1.0),
        Side::Right => fourier_with_sign(f, -1.0),
    }
}

/// Hilbert-space adjoint, `F* f = conj(Fᵀ conj f)`.
pub fn symplectic_fourier_adjoint(f: &GridFunction, side: Side) -> GridFunction {
    let flipped = match side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    symplectic_fourier(&f.conj(), flipped).conj()
}

/// Left: `f(x − x₀/2) e^{(i/θ)ω(x₀,x)}`. Right: `f(x + x₀/2) e^{(i/θ)ω(x₀,x)}`.
/// These are the left and right Moyal multiplications by `W_{x₀}(x) = e^{(i/θ)ω(x₀,x)}`.
pub fn translation_multiplier(x0: &[f64], f: &GridFunction, side: Side) -> Result<GridFunction> {
    let spec = f.spec;
    if x0.len() != spec.ndim() {
        return Err(HdqError::SpecMismatch(format!("x₀ has {} components, expected {}", x0.len(), spec.ndim())));
    }
    let s = match side {
        Side::Left => 0.5,
        Side::Right => -0.5,
    };
    let mut out = f.clone();
    for (a, &c) in x0.iter().enumerate() {
        if c != 0.0 {
            out = out.shifted(a, s * c);
        }
    }
    let theta = spec.theta;
    Ok(out.multiply_by(|x| C64::from_polar(1.0, omega(x0, x) / theta)))
}

/// `W_{x₀}(y) = e^{(i/θ)ω(x₀,y)}` at a point.
pub fn plane_wave(x0: &[f64], theta: f64, y: &[f64]) -> C64 {
    C64::from_polar(1.0, omega(x0, y) / theta)
}

/// `(a·x) ⋆ f` (left) or `f ⋆ (a·x)` (right), exact for linear symbols:
/// `(a·x) f ∓ (iθ/2){a·x, f}`.
pub fn linear_star(a: &[f64], f: &GridFunction, side: Side) -> Result<GridFunction> {
    let spec = f.spec;
    let n = spec.n;
    if a.len() != 2 * n {
        return Err(HdqError::SpecMismatch(format!("linear symbol has {} components, expected {}", a.len(), 2 * n)));
    }
    // {a·x, f} = Σ_j a_{q_j} ∂_{p_j} f − a_{p_j} ∂_{q_j} f
    let mut pb = GridFunction::zeros(spec);
    for j in 0..n {
        if a[j] != 0.0 {
            pb = pb.add(&f.derivative(n + j, 1).scale(C64::new(a[j], 0.0)));
        }
        if a[n + j] != 0.0 {
            pb = pb.sub(&f.derivative(j, 1).scale(C64::new(a[n + j], 0.0)));
        }
    }
    let lin = f.multiply_by(|x| C64::new(a.iter().zip(x).map(|(c, y)| c * y).sum(), 0.0));
    let s = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    Ok(lin.add(&pb.scale(C64::new(0.0, s * spec.theta / 2.0))))
}

/// Integral operator `(Ωφ)(q₀) = δ Σ_{q₁} K(q₀, q₁) φ(q₁)` on a `q` grid.
#[derive(Debug, Clone)]
pub struct WeylOperator {
    pub qaxis: Axis,
    pub theta: f64,
    pub kernel: CMat,
    engine: KernelEngine,
}

impl WeylOperator {
    pub fn delta(&self) -> f64 {
        self.qaxis.h()
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { kernel: self.engine.compose(&self.kernel, &other.kernel), ..self.clone() }
    }

    pub fn adjoint(&self) -> Self {
        Self { kernel: self.kernel.adjoint(), ..self.clone() }
    }

    pub fn hs_norm(&self) -> f64 {
        self.engine.hs_norm(&self.kernel)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { kernel: &self.kernel - &other.kernel, ..self.clone() }
    }

    /// Matrix of the operator on `L²` with quadrature weights folded in.
    pub fn matrix(&self) -> CMat {
        &self.kernel * C64::new(self.delta(), 0.0)
    }

    /// Symbol on the original grid.
    pub fn symbol(&self, spec: GridSpec) -> Result<GridFunction> {
        GridFunction::from_samples(spec, self.engine.symbol(&self.kernel))
    }
}

/// Weyl operator of `f` for the product `⋆_θ`. The kernel is
/// `K(q₀,q₁) = (πθ_w)⁻¹ ∫ f((q₀+q₁)/2, p) e^{−(2i/θ_w)(q₀−q₁)p} dp`, obtained from the
/// quantization formula `(2/(πθ_w)) ∫ f(q,p) e^{(4i/θ_w)(q−q₀)p} φ(2q−q₀) dq dp` by
/// `q₁ = 2q − q₀`, evaluated at `θ_w = 2θ`; this is the value for which the map is
/// multiplicative for `⋆_θ`.
pub fn weyl_quantize(f: &GridFunction) -> Result<WeylOperator> {
    let spec = f.spec;
    if spec.n != 1 {
        return Err(HdqError::SpecMismatch(format!("Weyl map implemented for n = 1, got n = {}", spec.n)));
    }
    let engine = pair_engine(&spec, spec.theta)?;
    let kernel = engine.kernel(&f.samples);
    Ok(WeylOperator { qaxis: engine.kernel_axis(0), theta: spec.theta, kernel, engine })
}

/// Quantization parameter in the literal formula matched by [`weyl_quantize`].
pub fn weyl_formula_parameter(theta: f64) -> f64 {
    2.0 * theta
}

/// Direct quadrature of the quantization formula's kernel at one `(q₀, q₁)` for an analytic
/// symbol, trapezoid in `p` over `p_axis`.
pub fn weyl_kernel_direct<F: Fn(f64, f64) -> C64>(f: F, theta_w: f64, q0: f64, q1: f64, p_axis: Axis) -> C64 {
    let q = 0.5 * (q0 + q1);
    let c = 2.0 / theta_w;
    let mut acc = ZERO;
    for k in 0..p_axis.m {
        let p = p_axis.point(k);
        acc += f(q, p) * C64::from_polar(1.0, -c * (q0 - q1) * p);
    }
    acc * (p_axis.h() / (PI * theta_w))
}

/// `‖Ω(f)‖_HS / ‖f‖₂`.
pub fn isometry_ratio(f: &GridFunction) -> Result<f64> {
    let op = weyl_quantize(f)?;
    Ok(op.hs_norm() / f.norm())
}

/// Expected value of [`isometry_ratio`], `(2πθ)^{−1/2}`.
pub fn isometry_constant(theta: f64) -> f64 {
    (2.0 * PI * theta).sqrt().recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |x| C64::new(2.0 * (-(x[0] * x[0] + x[1] * x[1]) / spec.theta).exp(), 0.0))
    }

    #[test]
    fn b00_idempotent_fast() {
        let spec = GridSpec::new(1, 64, 6.0 * 2f64.sqrt(), 2.0).unwrap();
        let b = gauss(spec);
        let r = moyal_fast(&b, &b).unwrap().relative_error(&b);
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn b00_idempotent_direct() {
        let spec = GridSpec::standard(2.0);
        let b = gauss(spec);
        let pts = [0, 67 * 128 + 61, 64 * 128 + 64, 70 * 128 + 50];
        let v = moyal_direct(&b, &b, &pts).unwrap();
        for (k, z) in pts.iter().zip(&v) {
            assert!((z - b.samples[*k]).norm() < 1e-6, "{z} vs {}", b.samples[*k]);
        }
    }
}
