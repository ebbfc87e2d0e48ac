//! Translation symmetry of the Moyal product: coordinate commutators, Sobolev and Schwartz
//! norms, plane-wave star-exponentials and their composition phase.
//!
//! Coordinates are not square integrable; where they enter a grid star product they are
//! replaced by `x_j w(x_j)` with the flat-top window `w(s) = exp(−(|s|/(0.93L))^48)`.

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::grid::{omega, GridFunction, GridSpec};
use crate::hilbert::Side;
use crate::linalg::{C64, ZERO};
use crate::moyal::{moyal_direct, moyal_fast, plane_wave, translation_multiplier};

pub const WINDOW_FRACTION: f64 = 0.93;
pub const WINDOW_POWER: i32 = 48;
pub const MAX_SOBOLEV_ORDER: usize = 4;
pub const MAX_SCHWARTZ_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryGenerator {
    Coordinate(usize),
    PlaneWave(Vec<f64>),
    Unit,
}

impl SymmetryGenerator {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Coordinate(j) if *j >= 2 * n => {
                Err(HdqError::SpecMismatch(format!("coordinate index {j} out of range for n = {n}")))
            }
            Self::PlaneWave(x) if x.len() != 2 * n => {
                Err(HdqError::SpecMismatch(format!("plane wave needs {} components", 2 * n)))
            }
            _ => Ok(()),
        }
    }

    /// Left or right star multiplication on a Schwartz-class grid function.
    pub fn act(&self, f: &GridFunction, side: Side) -> Result<GridFunction> {
        self.validate(f.spec.n)?;
        match self {
            Self::Coordinate(j) => {
                let x = windowed_coordinate(f.spec, *j);
                match side {
                    Side::Left => moyal_fast(&x, f),
                    Side::Right => moyal_fast(f, &x),
                }
            }
            Self::PlaneWave(x0) => translation_multiplier(x0, f, side),
            Self::Unit => Ok(f.clone()),
        }
    }
}

pub fn window(spec: GridSpec, s: f64) -> f64 {
    (-(s.abs() / (WINDOW_FRACTION * spec.l)).powi(WINDOW_POWER)).exp()
}

/// `x_j w(x_j)` on the grid.
pub fn windowed_coordinate(spec: GridSpec, j: usize) -> GridFunction {
    GridFunction::from_fn(spec, |x| C64::new(x[j] * window(spec, x[j]), 0.0))
}

/// Windowed moment map `η_a(y) = ω(a, y)`.
pub fn windowed_moment(spec: GridSpec, a: &[f64]) -> GridFunction {
    GridFunction::from_fn(spec, |y| {
        let yw: Vec<f64> = y.iter().map(|&v| v * window(spec, v)).collect();
        C64::new(omega(a, &yw), 0.0)
    })
}

/// `(ω⁻¹∂)_j f`: `−∂_{p_j} f` for `j < n`, `∂_{q_{j−n}} f` otherwise.
pub fn symplectic_gradient(j: usize, f: &GridFunction) -> GridFunction {
    let n = f.spec.n;
    if j < n {
        f.derivative(n + j, 1).scale(C64::new(-1.0, 0.0))
    } else {
        f.derivative(j - n, 1)
    }
}

fn relative(diff: &GridFunction, reference: &GridFunction) -> f64 {
    let r = reference.norm();
    if r == 0.0 {
        diff.norm()
    } else {
        diff.norm() / r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// `‖[x_j, f] − iθ(ω⁻¹∂)_j f‖ / ‖iθ(ω⁻¹∂)_j f‖`.
    pub commutator: f64,
    /// `‖{x_j, f} − 2x_j f‖ / ‖2x_j f‖`.
    pub anticommutator: f64,
}

impl CommutatorReport {
    pub fn max(&self) -> f64 {
        self.commutator.max(self.anticommutator)
    }
}

pub fn linear_commutator_check(j: usize, f: &GridFunction) -> Result<CommutatorReport> {
    let spec = f.spec;
    SymmetryGenerator::Coordinate(j).validate(spec.n)?;
    let x = windowed_coordinate(spec, j);
    let l = moyal_fast(&x, f)?;
    let r = moyal_fast(f, &x)?;
    let expect_c = symplectic_gradient(j, f).scale(C64::new(0.0, spec.theta));
    let expect_a = f.multiply_by(|y| C64::new(2.0 * y[j], 0.0));
    Ok(CommutatorReport {
        commutator: relative(&l.sub(&r).sub(&expect_c), &expect_c),
        anticommutator: relative(&l.add(&r).sub(&expect_a), &expect_a),
    })
}

/// Realized `[x_j, x_k]⋆ = c_jk`, `c_jk = iθ(ω⁻¹)_jk`.
pub fn heisenberg_constant(j: usize, k: usize, n: usize, theta: f64) -> C64 {
    // (ω⁻¹)_{q_i p_i} = −1, (ω⁻¹)_{p_i q_i} = 1
    let w = if j < n && k == j + n {
        -1.0
    } else if j >= n && k + n == j {
        1.0
    } else {
        0.0
    };
    C64::new(0.0, theta * w)
}

/// `‖x_j⋆(x_k⋆f) − x_k⋆(x_j⋆f) − c_jk f‖ / ‖f‖` through nested grid products.
pub fn heisenberg_check(j: usize, k: usize, f: &GridFunction) -> Result<f64> {
    let spec = f.spec;
    SymmetryGenerator::Coordinate(j).validate(spec.n)?;
    SymmetryGenerator::Coordinate(k).validate(spec.n)?;
    let xj = windowed_coordinate(spec, j);
    let xk = windowed_coordinate(spec, k);
    let a = moyal_fast(&xj, &moyal_fast(&xk, f)?)?;
    let b = moyal_fast(&xk, &moyal_fast(&xj, f)?)?;
    let c = heisenberg_constant(j, k, spec.n, spec.theta);
    Ok(relative(&a.sub(&b).sub(&f.scale(c)), f))
}

/// Multi-indices over `dims` axes with total order exactly `order`.
fn multi_indices(dims: usize, order: usize) -> Vec<Vec<usize>> {
    if dims == 0 {
        return if order == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=order {
        for mut rest in multi_indices(dims - 1, order - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn derivative_multi(f: &GridFunction, beta: &[usize]) -> GridFunction {
    let mut g = f.clone();
    for (a, &b) in beta.iter().enumerate() {
        if b > 0 {
            g = g.derivative(a, b);
        }
    }
    g
}

/// `sup_{l ≤ k} sup_{i₁..i_l} ‖[x_{i₁}, [⋯[x_{i_l}, f]]]‖`, evaluated with
/// `[x_j, ·] = iθ(ω⁻¹∂)_j`, i.e. `max_{|α| ≤ k} θ^{|α|} ‖∂^α f‖`.
pub fn sobolev_norm(f: &GridFunction, k: usize) -> Result<f64> {
    if k > MAX_SOBOLEV_ORDER {
        return Err(HdqError::SpecMismatch(format!("Sobolev order {k} above {MAX_SOBOLEV_ORDER}")));
    }
    let d = f.spec.ndim();
    let mut best = 0.0f64;
    for l in 0..=k {
        for alpha in multi_indices(d, l) {
            best = best.max(f.spec.theta.powi(l as i32) * derivative_multi(f, &alpha).norm());
        }
    }
    Ok(best)
}

/// `(∫ (1 + |ξ|²)^k |f̂(ξ)|² dξ)^{1/2}` with the unitary Fourier transform.
pub fn classical_sobolev_norm(f: &GridFunction, k: usize) -> f64 {
    let spec = f.spec;
    let dims = spec.dims();
    let ax = spec.axis();
    let mut data = f.samples.clone();
    for a in 0..dims.len() {
        crate::grid::fft_axis(&mut data, &dims, a, false);
    }
    let mut acc = 0.0;
    for (flat, z) in data.iter().enumerate() {
        let idx = spec.multi_index(flat);
        let xi2: f64 = idx.iter().map(|&i| ax.wavenumber(i).powi(2)).sum();
        acc += (1.0 + xi2).powi(k as i32) * z.norm_sqr();
    }
    (acc * spec.cell() / spec.len() as f64).sqrt()
}

/// `‖x^α ∂^β f‖₂`.
pub fn schwartz_seminorm(f: &GridFunction, alpha: &[usize], beta: &[usize]) -> Result<f64> {
    let d = f.spec.ndim();
    if alpha.len() != d || beta.len() != d {
        return Err(HdqError::SpecMismatch(format!("multi-indices need {d} entries")));
    }
    let (na, nb): (usize, usize) = (alpha.iter().sum(), beta.iter().sum());
    if na > MAX_SCHWARTZ_ORDER || nb > MAX_SCHWARTZ_ORDER {
        return Err(HdqError::SpecMismatch(format!("orders ({na}, {nb}) above {MAX_SCHWARTZ_ORDER}")));
    }
    let g = derivative_multi(f, beta);
    let g = g.multiply_by(|x| C64::new(x.iter().zip(alpha).map(|(v, &a)| v.powi(a as i32)).product(), 0.0));
    Ok(g.norm())
}

/// `e^{(i/2θ)ω(x₀,x₁)}`.
pub fn bch_phase(x0: &[f64], x1: &[f64], theta: f64) -> C64 {
    C64::from_polar(1.0, omega(x0, x1) / (2.0 * theta))
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Phase `c` in `W_{x₀} ⋆ W_{x₁} = c W_{x₀+x₁}` from the left translation multiplier applied
/// to the symbol `W_{x₁}`, sampled at `probes`; returns the mean and the spread over probes.
pub fn compose_plane_waves(x0: &[f64], x1: &[f64], theta: f64, probes: &[Vec<f64>]) -> (C64, f64) {
    let half: Vec<f64> = x0.iter().map(|v| 0.5 * v).collect();
    let sum = add(x0, x1);
    let vals: Vec<C64> = probes
        .iter()
        .map(|y| {
            let shifted: Vec<f64> = y.iter().zip(&half).map(|(a, b)| a - b).collect();
            let lf = plane_wave(x1, theta, &shifted) * plane_wave(x0, theta, y);
            lf / plane_wave(&sum, theta, y)
        })
        .collect();
    let mean = vals.iter().sum::<C64>() / vals.len().max(1) as f64;
    let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - mean).norm()));
    (mean, spread)
}

/// Phase fixed by quadrature: `(W_{x₀} ⋆ (W_{x₁} ⋆ g))(x) / (W_{x₀+x₁} ⋆ g)(x)` at spot
/// points, with the outer product by direct quadrature and `g` the ground-state Gaussian.
pub fn quadrature_phase(x0: &[f64], x1: &[f64], spec: GridSpec, spots: &[usize]) -> Result<C64> {
    let theta = spec.theta;
    let g = GridFunction::from_fn(spec, |y| C64::new(2.0 * (-y.iter().map(|v| v * v).sum::<f64>() / theta).exp(), 0.0));
    let w0 = GridFunction::from_fn(spec, |y| plane_wave(x0, theta, y));
    let inner = translation_multiplier(x1, &g, Side::Left)?;
    let outer = moyal_direct(&w0, &inner, spots)?;
    let reference = translation_multiplier(&add(x0, x1), &g, Side::Left)?;
    let mut num = ZERO;
    let mut den = 0.0;
    for (k, v) in spots.iter().zip(&outer) {
        let r = reference.samples[*k];
        // weighted least squares for v ≈ c r
        num += r.conj() * v;
        den += r.norm_sqr();
    }
    if den == 0.0 {
        return Err(HdqError::QuadratureError("reference vanishes at every spot point".into()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BchReport {
    pub computed: C64,
    pub closed_form: C64,
    pub oracle: Option<C64>,
    pub spread: f64,
    pub residual: f64,
}

/// Composition phase of two plane waves, compared with the closed form and, when `spec` is
/// given, with the quadrature phase at a few central spot points.
pub fn plane_wave_bch(x0: &[f64], x1: &[f64], theta: f64, spec: Option<GridSpec>) -> Result<BchReport> {
    if x0.len() != x1.len() || !x0.len().is_multiple_of(2) || x0.is_empty() {
        return Err(HdqError::SpecMismatch("plane-wave parameters must share an even dimension".into()));
    }
    let probes: Vec<Vec<f64>> = (0..5)
        .map(|k| (0..x0.len()).map(|a| 0.37 * (k as f64 + 1.0) * if a % 2 == 0 { 1.0 } else { -0.6 }).collect())
        .collect();
    let (computed, spread) = compose_plane_waves(x0, x1, theta, &probes);
    let closed_form = bch_phase(x0, x1, theta);
    let mut residual = (computed - closed_form).norm().max(spread);
    let oracle = match spec {
        Some(s) => {
            if s.ndim() != x0.len() || s.theta != theta {
                return Err(HdqError::SpecMismatch("grid does not match the plane-wave data".into()));
            }
            let c = s.m / 2;
            let dims = s.dims();
            let spots: Vec<usize> = [[c, c], [c + 1, c - 2], [c - 3, c + 1]]
                .iter()
                .map(|ij| {
                    let mut idx = vec![c; dims.len()];
                    idx[0] = ij[0];
                    idx[dims.len() - 1] = ij[1];
                    crate::grid::flatten(&idx, &dims)
                })
                .collect();
            let o = quadrature_phase(x0, x1, s, &spots)?;
            residual = residual.max((computed - o).norm());
            Some(o)
        }
        None => None,
    };
    Ok(BchReport { computed, closed_form, oracle, spread, residual })
}

/// `|[ω(x₀,x₁) + ω(x₀+x₁,x₂)] − [ω(x₁,x₂) + ω(x₀,x₁+x₂)]|`; zero in exact arithmetic, and
/// bit-exact for integer coordinates.
pub fn cocycle_defect(x0: &[f64], x1: &[f64], x2: &[f64]) -> f64 {
    let a = omega(x0, x1) + omega(&add(x0, x1), x2);
    let b = omega(x1, x2) + omega(x0, &add(x1, x2));
    (a - b).abs()
}

/// Residual of `∂_t (E_t ⋆ g) = (i/θ) η_a ⋆ (E_t ⋆ g)` at spot points, where
/// `E_t = W_{ta}` is applied by the translation multiplier and `∂_t` by a central difference.
pub fn star_exp_ode_residual(a: &[f64], t: f64, g: &GridFunction, spots: &[usize]) -> Result<f64> {
    let spec = g.spec;
    let tau = 1e-4;
    let at = |s: f64| -> Vec<f64> { a.iter().map(|v| v * s).collect() };
    let plus = translation_multiplier(&at(t + tau), g, Side::Left)?;
    let minus = translation_multiplier(&at(t - tau), g, Side::Left)?;
    let mid = translation_multiplier(&at(t), g, Side::Left)?;
    let eta = windowed_moment(spec, a);
    let rhs = moyal_fast(&eta, &mid)?.scale(C64::new(0.0, 1.0 / spec.theta));
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for &k in spots {
        let lhs = (plus.samples[k] - minus.samples[k]) / (2.0 * tau);
        err = err.max((lhs - rhs.samples[k]).norm());
        scale = scale.max(rhs.samples[k].norm());
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}
