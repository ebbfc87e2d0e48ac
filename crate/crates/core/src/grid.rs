//! Uniform periodic grids, grid functions and FFT-based axis operations.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::linalg::{C64, ZERO};

/// Points `x_k = −l + k h`, `h = 2l/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub m: usize,
    pub l: f64,
}

impl Axis {
    pub fn new(m: usize, l: f64) -> Self {
        Self { m, l }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.l + k as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|k| self.point(k)).collect()
    }

    /// Angular wavenumber of FFT bin `k`; the Nyquist bin is reported as negative.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let m = self.m as i64;
        let k = k as i64;
        let s = if k < m / 2 { k } else { k - m };
        PI * s as f64 / self.l
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.h()
    }

    pub fn is_nyquist_bin(&self, k: usize) -> bool {
        self.m.is_multiple_of(2) && k == self.m / 2
    }

    /// Index of `−x_k` under periodic identification.
    pub fn mirror(&self, k: usize) -> usize {
        (self.m - k) % self.m
    }
}

pub fn validate_power_of_two(m: usize, what: &str) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(HdqError::SpecMismatch(format!("{what} must be a power of two, got {m}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
    pub l: f64,
    pub theta: f64,
}

impl GridSpec {
    pub fn new(n: usize, m: usize, l: f64, theta: f64) -> Result<Self> {
        if n == 0 {
            return Err(HdqError::SpecMismatch("n must be positive".into()));
        }
        validate_power_of_two(m, "M")?;
        if m < 8 {
            return Err(HdqError::SpecMismatch(format!("M = {m} below the minimum of 8")));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(HdqError::SpecMismatch(format!("L = {l} must be positive")));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(HdqError::SpecMismatch(format!("θ = {theta} must be positive")));
        }
        Ok(Self { n, m, l, theta })
    }

    /// `M = 128`, `L = 6√θ`.
    pub fn standard(theta: f64) -> Self {
        Self::new(1, 128, 6.0 * theta.sqrt(), theta).expect("valid defaults")
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.n, m, self.l, self.theta)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    pub fn axis(&self) -> Axis {
        Axis::new(self.m, self.l)
    }

    pub fn ndim(&self) -> usize {
        2 * self.n
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.m; self.ndim()]
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.ndim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell(&self) -> f64 {
        self.h().powi(self.ndim() as i32)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, &self.dims())
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let ax = self.axis();
        self.multi_index(flat).into_iter().map(|k| ax.point(k)).collect()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.l == other.l && self.theta == other.theta
    }
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        idx[a] = flat % dims[a];
        flat /= dims[a];
    }
    idx
}

pub fn flatten(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Symplectic form `ω((q,p),(q',p')) = q·p' − p·q'` with coordinates ordered `(q₁..qₙ, p₁..pₙ)`.
pub fn omega(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() / 2;
    (0..n).map(|j| x[j] * y[n + j] - x[n + j] * y[j]).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub samples: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, samples: vec![ZERO; spec.len()] }
    }

    pub fn from_samples(spec: GridSpec, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(HdqError::SpecMismatch(format!(
                "expected {} samples, got {}",
                spec.len(),
                samples.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HdqError::SpecMismatch("non-finite sample".into()));
        }
        Ok(Self { spec, samples })
    }

    pub fn from_fn<F: Fn(&[f64]) -> C64>(spec: GridSpec, f: F) -> Self {
        let samples = (0..spec.len()).map(|k| f(&spec.point(k))).collect();
        Self { spec, samples }
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if !self.spec.same_as(&other.spec) {
            return Err(HdqError::SpecMismatch(format!("{:?} vs {:?}", self.spec, other.spec)));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spec.cell()).sqrt()
    }

    /// `∫ conj(f) g`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum::<C64>() * self.spec.cell()
    }

    pub fn integral(&self) -> C64 {
        self.samples.iter().sum::<C64>() * self.spec.cell()
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

    pub fn zip<F: Fn(C64, C64) -> C64>(&self, other: &Self, f: F) -> Self {
        Self {
            spec: self.spec,
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    /// `‖self − other‖ / ‖other‖` (absolute when `other` vanishes).
    pub fn relative_error(&self, reference: &Self) -> f64 {
        let d = self.sub(reference).norm();
        let r = reference.norm();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    /// `f(x) ↦ f(−x)` with periodic identification of the box edge.
    pub fn parity(&self) -> Self {
        let dims = self.spec.dims();
        let ax = self.spec.axis();
        let mut out = vec![ZERO; self.samples.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let idx: Vec<usize> = unflatten(k, &dims).into_iter().map(|i| ax.mirror(i)).collect();
            *o = self.samples[flatten(&idx, &dims)];
        }
        Self { spec: self.spec, samples: out }
    }

    pub fn multiply_by<F: Fn(&[f64]) -> C64>(&self, f: F) -> Self {
        let samples = self.samples.iter().enumerate().map(|(k, &z)| z * f(&self.spec.point(k))).collect();
        Self { spec: self.spec, samples }
    }

    /// Spectral `∂_axis^order`.
    pub fn derivative(&self, axis: usize, order: usize) -> Self {
        let dims = self.spec.dims();
        let mut data = self.samples.clone();
        spectral_derivative(&mut data, &dims, axis, self.spec.axis(), order);
        Self { spec: self.spec, samples: data }
    }

    /// `f(x − s e_axis)` by Fourier shift.
    pub fn shifted(&self, axis: usize, s: f64) -> Self {
        let dims = self.spec.dims();
        let mut data = self.samples.clone();
        fourier_shift(&mut data, &dims, axis, self.spec.axis(), s);
        Self { spec: self.spec, samples: data }
    }
}

/// Applies `f` to every 1-d line along `axis` of a row-major array.
pub fn apply_axis<F: FnMut(&mut [C64])>(data: &mut [C64], dims: &[usize], axis: usize, mut f: F) {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut buf = vec![ZERO; n];
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..inner {
            for k in 0..n {
                buf[k] = data[base + k * inner + i];
            }
            f(&mut buf);
            for k in 0..n {
                data[base + k * inner + i] = buf[k];
            }
        }
    }
}

/// Maps lines of length `dims[axis]` to lines of length `new_len` via `f(input, output)`.
pub fn transform_axis<F: FnMut(&[C64], &mut [C64])>(
    data: &[C64],
    dims: &[usize],
    axis: usize,
    new_len: usize,
    mut f: F,
) -> (Vec<C64>, Vec<usize>) {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![ZERO; outer * new_len * inner];
    let mut src = vec![ZERO; n];
    let mut dst = vec![ZERO; new_len];
    for o in 0..outer {
        for i in 0..inner {
            for k in 0..n {
                src[k] = data[o * n * inner + k * inner + i];
            }
            dst.iter_mut().for_each(|z| *z = ZERO);
            f(&src, &mut dst);
            for k in 0..new_len {
                out[o * new_len * inner + k * inner + i] = dst[k];
            }
        }
    }
    let mut nd = dims.to_vec();
    nd[axis] = new_len;
    (out, nd)
}

/// Dense matrix along an axis: `out[r] = Σ_c mat[r·n + c] in[c]`.
pub fn matrix_axis(data: &[C64], dims: &[usize], axis: usize, mat: &[C64], rows: usize) -> (Vec<C64>, Vec<usize>) {
    let n = dims[axis];
    transform_axis(data, dims, axis, rows, |src, dst| {
        for r in 0..rows {
            let row = &mat[r * n..(r + 1) * n];
            dst[r] = row.iter().zip(src).map(|(a, b)| a * b).sum();
        }
    })
}

pub fn permute(data: &[C64], dims: &[usize], order: &[usize]) -> (Vec<C64>, Vec<usize>) {
    let nd: Vec<usize> = order.iter().map(|&a| dims[a]).collect();
    let mut out = vec![ZERO; data.len()];
    let mut src_strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        src_strides[a] = src_strides[a + 1] * dims[a + 1];
    }
    let strides: Vec<usize> = order.iter().map(|&a| src_strides[a]).collect();
    let mut idx = vec![0usize; nd.len()];
    for o in out.iter_mut() {
        let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        *o = data[off];
        for a in (0..nd.len()).rev() {
            idx[a] += 1;
            if idx[a] < nd[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    (out, nd)
}

pub fn fft_axis(data: &mut [C64], dims: &[usize], axis: usize, inverse: bool) {
    let n = dims[axis];
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    apply_axis(data, dims, axis, |line| {
        plan.process(line);
        if inverse {
            line.iter_mut().for_each(|z| *z *= scale);
        }
    });
}

/// Multiplies every Fourier mode along `axis` by `mult(k)`.
pub fn fourier_multiplier_axis<F: Fn(usize) -> C64>(data: &mut [C64], dims: &[usize], axis: usize, mult: F) {
    let n = dims[axis];
    let weights: Vec<C64> = (0..n).map(&mult).collect();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    apply_axis(data, dims, axis, |line| {
        fwd.process(line);
        for (z, w) in line.iter_mut().zip(&weights) {
            *z *= w * scale;
        }
        inv.process(line);
    });
}

pub fn spectral_derivative(data: &mut [C64], dims: &[usize], axis: usize, ax: Axis, order: usize) {
    if order == 0 {
        return;
    }
    fourier_multiplier_axis(data, dims, axis, |k| {
        if ax.is_nyquist_bin(k) && order % 2 == 1 {
            return ZERO;
        }
        C64::new(0.0, ax.wavenumber(k)).powu(order as u32)
    });
}

/// `g(x) = f(x − s)` along `axis`.
pub fn fourier_shift(data: &mut [C64], dims: &[usize], axis: usize, ax: Axis, s: f64) {
    if s == 0.0 {
        return;
    }
    fourier_multiplier_axis(data, dims, axis, |k| {
        let kk = ax.wavenumber(k);
        if ax.is_nyquist_bin(k) {
            C64::new((kk * s).cos(), 0.0)
        } else {
            C64::from_polar(1.0, -kk * s)
        }
    });
}

/// Trigonometric interpolation onto a grid `factor` times finer over the same box.
pub fn upsample_axis(data: &[C64], dims: &[usize], axis: usize, factor: usize) -> (Vec<C64>, Vec<usize>) {
    let n = dims[axis];
    let big = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(big);
    transform_axis(data, dims, axis, big, |src, dst| {
        let mut spec = src.to_vec();
        fwd.process(&mut spec);
        let mut pad = vec![ZERO; big];
        let half = n / 2;
        for k in 0..n {
            if n.is_multiple_of(2) && k == half && factor > 1 {
                pad[half] += spec[k] * 0.5;
                pad[big - half] += spec[k] * 0.5;
            } else if k < half || (n % 2 == 1 && k == half) {
                pad[k] = spec[k];
            } else {
                pad[big - (n - k)] = spec[k];
            }
        }
        inv.process(&mut pad);
        let s = 1.0 / n as f64;
        for (d, p) in dst.iter_mut().zip(&pad) {
            *d = p * s;
        }
    })
}

/// Evaluates the trigonometric interpolant of one line at arbitrary points.
pub struct TrigInterp {
    ax: Axis,
    coeffs: Vec<C64>,
}

impl TrigInterp {
    pub fn new(ax: Axis, values: &[C64]) -> Self {
        let mut spec = values.to_vec();
        FftPlanner::<f64>::new().plan_fft_forward(ax.m).process(&mut spec);
        let s = 1.0 / ax.m as f64;
        spec.iter_mut().for_each(|z| *z *= s);
        Self { ax, coeffs: spec }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let t = x + self.ax.l;
        let mut acc = ZERO;
        for (k, c) in self.coeffs.iter().enumerate() {
            let kk = self.ax.wavenumber(k);
            if self.ax.is_nyquist_bin(k) {
                acc += c * (kk * t).cos();
            } else {
                acc += c * C64::from_polar(1.0, kk * t);
            }
        }
        acc
    }
}

/// Interpolation matrix (row-major, `targets.len() × m`) of the trigonometric interpolant.
pub fn trig_interp_matrix(ax: Axis, targets: &[f64]) -> Vec<C64> {
    let m = ax.m;
    let mut out = vec![ZERO; targets.len() * m];
    for (r, &x) in targets.iter().enumerate() {
        let t = x + ax.l;
        for j in 0..m {
            // Σ_k e^{iκ_k (t − t_j)} / m
            let dt = t - j as f64 * ax.h();
            let mut acc = ZERO;
            for k in 0..m {
                let kk = ax.wavenumber(k);
                if ax.is_nyquist_bin(k) {
                    acc += C64::new((kk * dt).cos(), 0.0);
                } else {
                    acc += C64::from_polar(1.0, kk * dt);
                }
            }
            out[r * m + j] = acc / m as f64;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss_line(ax: Axis, c: f64) -> Vec<C64> {
        ax.points().iter().map(|x| C64::new((-(x - c).powi(2)).exp(), 0.0)).collect()
    }

    #[test]
    fn shift_moves_gaussian() {
        let ax = Axis::new(64, 8.0);
        let mut d = gauss_line(ax, 0.0);
        fourier_shift(&mut d, &[64], 0, ax, 1.3);
        let e = gauss_line(ax, 1.3);
        assert!(d.iter().zip(&e).all(|(a, b)| (a - b).norm() < 1e-10));
    }

    #[test]
    fn derivative_of_gaussian() {
        let ax = Axis::new(64, 8.0);
        let mut d = gauss_line(ax, 0.5);
        spectral_derivative(&mut d, &[64], 0, ax, 1);
        for (k, x) in ax.points().iter().enumerate() {
            let e = -2.0 * (x - 0.5) * (-(x - 0.5).powi(2)).exp();
            assert!((d[k].re - e).abs() < 1e-10);
        }
    }

    #[test]
    fn upsample_and_interp_agree() {
        let ax = Axis::new(32, 6.0);
        let d = gauss_line(ax, 0.2);
        let (up, dims) = upsample_axis(&d, &[32], 0, 4);
        assert_eq!(dims, vec![128]);
        let fine = Axis::new(128, 6.0);
        let ti = TrigInterp::new(ax, &d);
        for k in 0..128 {
            let x = fine.point(k);
            let e = (-(x - 0.2f64).powi(2)).exp();
            assert!((up[k].re - e).abs() < 1e-8);
            assert!((ti.eval(x) - up[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn permute_round_trip() {
        let dims = [2, 3, 4];
        let data: Vec<C64> = (0..24).map(|k| C64::new(k as f64, 0.0)).collect();
        let (p, pd) = permute(&data, &dims, &[2, 0, 1]);
        assert_eq!(pd, vec![4, 2, 3]);
        // p[c][a][b] = data[a][b][c]
        assert_eq!(p[flatten(&[3, 1, 2], &pd)], data[flatten(&[1, 2, 3], &dims)]);
        let (q, qd) = permute(&p, &pd, &[1, 2, 0]);
        assert_eq!(qd, dims.to_vec());
        assert_eq!(q, data);
    }
}
