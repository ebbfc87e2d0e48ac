//! Validation suites: each module's invariants as named checks with residuals and
//! tolerances. The acceptance target and the `hdqkit validate` command both run these.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{as_hilbert_algebra, structure_checks, verify_unital_multipliers};
use crate::error::{HdqError, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::hilbert::{combine, cyclic_table, full_matrix, group_algebra, s3_table, CombineMode, FiniteHilbertAlgebra, Side};
use crate::jgroup::{self, Direction, FieldGenerator, JGenerator, JGroupElement, JGroupFunction, JGroupSpec, Part};
use crate::linalg::{CMat, C64};
use crate::matrix_basis::{
    gbv_norm, ladder_z1, matrix_product_oracle, matrix_star_exp, synthesize_basis, GbvMode, MatrixSymbol, MAX_TRUNC,
};
use crate::moyal::{
    isometry_constant, linear_star, moyal_direct, moyal_fast, symplectic_fourier, symplectic_fourier_adjoint,
    tracial_pairing, weyl_quantize,
};
use crate::symmetry::{
    classical_sobolev_norm, cocycle_defect, heisenberg_check, linear_commutator_check, plane_wave_bch as bch_report,
    sobolev_norm, star_exp_ode_residual,
};

/// Truncation used by the product-law criterion.
pub const PRODUCT_LAW_TRUNC: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub theta: f64,
    /// Points per axis of the two-dimensional Moyal grid.
    pub grid: usize,
    /// Matrix-basis truncation `N`.
    pub trunc: usize,
    /// Replaces every residual tolerance when set.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { theta: 2.0, grid: 128, trunc: 8, tol: None, seed: 0 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(HdqError::SpecMismatch(format!("theta must be positive, got {}", self.theta)));
        }
        GridSpec::new(1, self.grid, 6.0 * self.theta.sqrt(), self.theta)?;
        if self.grid < 16 {
            return Err(HdqError::SpecMismatch(format!("grid must be at least 16, got {}", self.grid)));
        }
        if self.trunc == 0 || self.trunc > MAX_TRUNC {
            return Err(HdqError::SpecMismatch(format!("trunc must be in 1..={MAX_TRUNC}, got {}", self.trunc)));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(HdqError::SpecMismatch(format!("tol must be in (0, 1), got {t}")));
            }
        }
        Ok(())
    }

    /// `M` points on `[−6√θ, 6√θ)`.
    pub fn moyal_spec(&self) -> Result<GridSpec> {
        GridSpec::new(1, self.grid, 6.0 * self.theta.sqrt(), self.theta)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Measured quantity reported next to the check, e.g. an isometry constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub elapsed_ms: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Hilbert,
    Moyal,
    Matrix,
    Symmetry,
    Jgroup,
    Clifford,
    All,
}

impl SuiteName {
    pub const MODULES: [SuiteName; 6] =
        [SuiteName::Hilbert, SuiteName::Moyal, SuiteName::Matrix, SuiteName::Symmetry, SuiteName::Jgroup, SuiteName::Clifford];
}

impl FromStr for SuiteName {
    type Err = HdqError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hilbert" => SuiteName::Hilbert,
            "moyal" => SuiteName::Moyal,
            "matrix" => SuiteName::Matrix,
            "symmetry" => SuiteName::Symmetry,
            "jgroup" => SuiteName::Jgroup,
            "clifford" => SuiteName::Clifford,
            "all" => SuiteName::All,
            _ => return Err(HdqError::ParseError(format!("unknown suite {s:?}"))),
        })
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteName::Hilbert => "hilbert",
            SuiteName::Moyal => "moyal",
            SuiteName::Matrix => "matrix",
            SuiteName::Symmetry => "symmetry",
            SuiteName::Jgroup => "jgroup",
            SuiteName::Clifford => "clifford",
            SuiteName::All => "all",
        })
    }
}

struct Checks<'a> {
    cfg: &'a RunConfig,
    out: Vec<CheckRecord>,
}

impl<'a> Checks<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, out: Vec::new() }
    }

    /// `residual ≤ tol`, with `tol` replaced by the configured override.
    fn residual(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> &mut Self {
        let tolerance = self.cfg.tol.unwrap_or(tol);
        self.out.push(CheckRecord { name: name.into(), residual, tolerance, pass: residual <= tolerance, value: None });
        self
    }

    /// Exact comparison; not affected by the override.
    fn exact(&mut self, name: impl Into<String>, residual: f64) -> &mut Self {
        self.out.push(CheckRecord { name: name.into(), residual, tolerance: 0.0, pass: residual == 0.0, value: None });
        self
    }

    fn flag(&mut self, name: impl Into<String>, ok: bool) -> &mut Self {
        self.exact(name, if ok { 0.0 } else { 1.0 })
    }

    fn with_value(&mut self, v: f64) -> &mut Self {
        if let Some(last) = self.out.last_mut() {
            last.value = Some(v);
        }
        self
    }

    fn done(self) -> Vec<CheckRecord> {
        self.out
    }
}

pub fn run_suite(name: SuiteName, cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let t = Instant::now();
    let checks = match name {
        SuiteName::Hilbert => [hilbert_axioms(cfg)?, structure_theorems(cfg)?, natural_traces(cfg)?].concat(),
        SuiteName::Moyal => [
            matrix_product_law(cfg)?,
            traciality(cfg)?,
            fourier_multiplier(cfg)?,
            weyl_map(cfg)?,
            convergence(cfg)?.0,
        ]
        .concat(),
        SuiteName::Matrix => [matrix_transform(cfg)?, gbv_norms(cfg)?].concat(),
        SuiteName::Symmetry => [plane_wave_bch(cfg)?, translation_symmetry(cfg)?, sobolev_equivalence(cfg)?].concat(),
        SuiteName::Jgroup => jgroup_checks(cfg)?,
        SuiteName::Clifford => clifford_checks(cfg)?,
        SuiteName::All => {
            let mut all = Vec::new();
            for s in SuiteName::MODULES {
                for mut c in run_suite(s, cfg)?.checks {
                    c.name = format!("{s}: {}", c.name);
                    all.push(c);
                }
            }
            all
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { suite: name.to_string(), config: *cfg, checks, elapsed_ms: t.elapsed().as_millis() as u64, pass })
}

// ---------------------------------------------------------------------------
// hilbert

fn shipped_algebras(cfg: &RunConfig) -> Result<Vec<(String, FiniteHilbertAlgebra)>> {
    let pool = || -> Result<Vec<(&'static str, FiniteHilbertAlgebra)>> {
        Ok(vec![
            ("C", full_matrix(1)),
            ("Z2", group_algebra(&cyclic_table(2))?),
            ("Z3", group_algebra(&cyclic_table(3))?),
            ("M2", full_matrix(2)),
        ])
    };
    let mut rng = cfg.rng(1);
    let p = pool()?;
    let (i, j) = (rng.gen_range(0..p.len()), rng.gen_range(0..p.len()));
    let sum = combine(&p[i].1, &p[j].1, CombineMode::DirectSum)?;
    // tensor products up to dimension 8
    let pairs: Vec<(usize, usize)> =
        (0..p.len()).flat_map(|u| (0..p.len()).map(move |v| (u, v))).filter(|&(u, v)| p[u].1.dim() * p[v].1.dim() <= 8).collect();
    let (u, v) = pairs[rng.gen_range(0..pairs.len())];
    let tensor = combine(&p[u].1, &p[v].1, CombineMode::Tensor)?;
    Ok(vec![
        ("M2".into(), full_matrix(2)),
        ("C[Z3]".into(), group_algebra(&cyclic_table(3))?),
        ("C[S3]".into(), group_algebra(&s3_table())?),
        ("Cl(2)".into(), as_hilbert_algebra(1)?),
        (format!("{}+{}", p[i].0, p[j].0), sum),
        (format!("{}⊗{}", p[u].0, p[v].0), tensor),
    ])
}

pub fn hilbert_axioms(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut c = Checks::new(cfg);
    for (name, a) in shipped_algebras(cfg)? {
        let r = a.validate_axioms()?;
        c.residual(format!("axioms {name}"), r.max_residual(), 1e-10);
    }
    Ok(c.done())
}

/// Bicommutant equals the multipliers, and the commutant has the block form.
pub fn structure_theorems(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut c = Checks::new(cfg);
    for (name, a) in shipped_algebras(cfg)? {
        let r = a.verify_caract()?;
        c.flag(format!("bicommutant dim = multiplier dim {name}"), r.bicommutant_dim == r.multiplier_dim);
        c.residual(format!("bicommutant span {name}"), r.residual, 1e-10);
        let s = a.verify_commutant_structure()?;
        c.residual(format!("commutant block form {name}"), s.commutation_residual.max(s.right_span_residual), 1e-10);
    }
    Ok(c.done())
}

pub fn natural_traces(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut c = Checks::new(cfg);
    let mut algs = shipped_algebras(cfg)?;
    algs.push(("C".into(), full_matrix(1)));
    algs.push(("C[Z2]".into(), group_algebra(&cyclic_table(2))?));
    algs.push(("Cl(4)".into(), as_hilbert_algebra(2)?));
    for (name, a) in algs {
        c.residual(format!("natural trace {name}"), a.natural_trace_check()?, 1e-10);
    }
    Ok(c.done())
}

// ---------------------------------------------------------------------------
// moyal

/// `c · e^{−|x−x₀|²/(2σ²)} · (1 + a q + b p)`.
fn gauss_poly(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let q0 = rng.gen_range(-1.0..1.0);
    let p0 = rng.gen_range(-1.0..1.0);
    let s2 = rng.gen_range(0.8..1.6f64).powi(2);
    let a = rng.gen_range(-0.5..0.5);
    let b = rng.gen_range(-0.5..0.5);
    let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    GridFunction::from_fn(spec, move |x| {
        let (q, p) = (x[0], x[1]);
        c * (-((q - q0).powi(2) + (p - p0).powi(2)) / (2.0 * s2)).exp() * (1.0 + a * q + b * p)
    })
}

fn max_abs(f: &GridFunction) -> f64 {
    f.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn nearest_index(spec: GridSpec, q: f64, p: f64) -> usize {
    let h = spec.h();
    let i = ((q + spec.l) / h).round() as usize;
    let j = ((p + spec.l) / h).round() as usize;
    i.min(spec.m - 1) * spec.m + j.min(spec.m - 1)
}

/// `b_mn ⋆ b_kl = δ_nk b_ml` over all tuples below [`PRODUCT_LAW_TRUNC`], plus direct
/// quadrature at ten points.
pub fn matrix_product_law(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let n = PRODUCT_LAW_TRUNC;
    let cache = synthesize_basis(spec, n)?;
    let unit = (2.0 * PI * cfg.theta).sqrt();
    let mut worst = 0.0f64;
    for m in 0..n {
        for a in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let p = moyal_fast(cache.get(m, a), cache.get(k, l))?;
                    let r = if a == k { p.sub(cache.get(m, l)).norm() } else { p.norm() };
                    worst = worst.max(r / unit);
                }
            }
        }
    }
    let mut c = Checks::new(cfg);
    c.residual(format!("b_mn*b_kl = d_nk b_ml, max over {} tuples", n.pow(4)), worst, 1e-3);

    let pts: Vec<usize> = [(0.0, 0.0), (0.5, -0.3), (-1.0, 0.8), (1.5, 1.5), (-2.0, -0.5), (0.3, 2.2), (2.5, -1.0), (-0.7, -1.8), (1.1, 0.2), (-1.6, 1.3)]
        .iter()
        .map(|&(q, p)| nearest_index(spec, q, p))
        .collect();
    let mut spot = 0.0f64;
    for &(m, a, k, l) in &[(0, 0, 0, 0), (0, 1, 1, 2), (2, 1, 1, 1), (1, 2, 3, 0)] {
        let expect = cache.get(m, l);
        let scale = max_abs(expect);
        let v = moyal_direct(cache.get(m, a), cache.get(k, l), &pts)?;
        for (&i, z) in pts.iter().zip(&v) {
            let e = if a == k { expect.samples[i] } else { C64::new(0.0, 0.0) };
            spot = spot.max((z - e).norm() / scale);
        }
    }
    c.residual("direct quadrature at 10 points", spot, 1e-3);
    Ok(c.done())
}

/// `∫ f⋆g = ∫ fg` over 20 seeded Gaussian-polynomial pairs.
pub fn traciality(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let mut rng = cfg.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = gauss_poly(spec, &mut rng);
        let g = gauss_poly(spec, &mut rng);
        let (a, b) = tracial_pairing(&f, &g)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    let mut c = Checks::new(cfg);
    c.residual("traciality, 20 pairs", worst, 1e-6);
    Ok(c.done())
}

pub fn fourier_multiplier(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let mut rng = cfg.rng(3);
    let (mut unit, mut iso, mut par) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..4 {
        let f = gauss_poly(spec, &mut rng);
        for side in [Side::Left, Side::Right] {
            unit = unit.max(symplectic_fourier(&symplectic_fourier_adjoint(&f, side), side).relative_error(&f));
            unit = unit.max(symplectic_fourier_adjoint(&symplectic_fourier(&f, side), side).relative_error(&f));
            iso = iso.max((symplectic_fourier(&f, side).norm() / f.norm() - 1.0).abs());
        }
        let p = symplectic_fourier(&symplectic_fourier_adjoint(&f, Side::Right), Side::Left);
        par = par.max(p.relative_error(&f.parity()));
    }
    let mut c = Checks::new(cfg);
    c.residual("F F* = F* F = I", unit, 1e-6);
    c.residual("norm preservation", iso, 1e-6);
    c.residual("F_L F_R* = parity", par, 1e-6);
    Ok(c.done())
}

pub fn weyl_map(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let cache = synthesize_basis(spec, PRODUCT_LAW_TRUNC)?;
    let mut hom = 0.0f64;
    for &(m, n, k, l) in &[(0, 0, 0, 0), (0, 1, 1, 0), (1, 2, 2, 3), (2, 1, 3, 3), (3, 0, 0, 2), (1, 1, 2, 2)] {
        let (f, g) = (cache.get(m, n), cache.get(k, l));
        let (of, og) = (weyl_quantize(f)?, weyl_quantize(g)?);
        let lhs = weyl_quantize(&moyal_fast(f, g)?)?;
        hom = hom.max(lhs.sub(&of.compose(&og)).hs_norm() / (of.hs_norm() * og.hs_norm()));
    }
    let mut fs: Vec<GridFunction> = [(0, 0), (1, 1), (0, 2), (3, 1)].iter().map(|&(m, n)| cache.get(m, n).clone()).collect();
    let mut rng = cfg.rng(4);
    fs.extend((0..6).map(|_| gauss_poly(spec, &mut rng)));
    let ratios = fs.iter().map(|f| Ok(weyl_quantize(f)?.hs_norm() / f.norm())).collect::<Result<Vec<f64>>>()?;
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let mut c = Checks::new(cfg);
    c.residual("Weyl homomorphism on basis pairs", hom, 1e-3);
    c.residual("isometry ratio spread over 10 functions", (hi - lo) / lo, 1e-4);
    c.residual("isometry constant vs (2 pi theta)^-1/2", (mean / isometry_constant(cfg.theta) - 1.0).abs(), 1e-4)
        .with_value(mean);
    Ok(c.done())
}

/// `b₀₀ ⋆ b₀₀` residual for `M = 16, 32, …` up to the configured grid, and whether it is
/// nonincreasing.
pub fn convergence(cfg: &RunConfig) -> Result<(Vec<CheckRecord>, Vec<(usize, f64)>)> {
    let base = cfg.moyal_spec()?;
    let mut table = Vec::new();
    let mut m = 16;
    while m <= cfg.grid.max(128) {
        let spec = base.with_m(m)?;
        let b = synthesize_basis(spec, 1)?;
        let r = moyal_fast(b.get(0, 0), b.get(0, 0))?.relative_error(b.get(0, 0));
        table.push((m, r));
        m *= 2;
    }
    let mut c = Checks::new(cfg);
    for &(m, r) in &table {
        c.flag(format!("b00*b00 residual at M={m}"), r.is_finite()).with_value(r);
    }
    c.flag("residual nonincreasing as M doubles", table.windows(2).all(|w| w[1].1 <= w[0].1));
    Ok((c.done(), table))
}

// ---------------------------------------------------------------------------
// matrix basis

pub fn matrix_transform(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let n = cfg.trunc;
    let cache = synthesize_basis(spec, n)?;
    let mut rng = cfg.rng(5);
    let mut random_symbol = || {
        MatrixSymbol::new(cfg.theta, CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
    };
    let (s1, s2) = (random_symbol()?, random_symbol()?);
    let f = cache.backward(&s1)?;
    let g = cache.backward(&s2)?;
    let back = cache.forward(&f)?;
    let mut c = Checks::new(cfg);
    let (herm, orth) = cache.invariant_residuals();
    c.residual("conj(b_mn) = b_nm", herm, 1e-12);
    c.residual("<b_mn, b_kl> = 2 pi theta d d", orth / (2.0 * PI * cfg.theta), 1e-6);
    c.residual("grid round trip on basis span", (&back.coeffs - &s1.coeffs).norm() / s1.coeffs.norm(), 1e-6);
    let parseval = 2.0 * PI * cfg.theta * s1.coeffs.norm_squared();
    c.residual("Parseval", (f.norm().powi(2) / parseval - 1.0).abs(), 1e-6);
    let lhs = cache.forward(&moyal_fast(&f, &g)?)?;
    let rhs = matrix_product_oracle(&s1, &s2)?;
    c.residual("transform(f*g) = transform(f) transform(g)", (&lhs.coeffs - &rhs.coeffs).norm() / rhs.coeffs.norm(), 1e-3);
    let h = cache.forward(&f.conj())?;
    c.residual("transform(conj f) = transform(f)*", (&h.coeffs - s1.adjoint().coeffs).norm() / s1.coeffs.norm(), 1e-10);
    let e = matrix_star_exp(&s1, C64::new(0.3, 0.0));
    let ei = matrix_star_exp(&s1, C64::new(-0.3, 0.0));
    let id = CMat::identity(n, n);
    c.residual("exp(sF) exp(-sF) = I", (&e.coeffs * &ei.coeffs - &id).norm(), 1e-12);
    Ok(c.done())
}

/// Exact usual GBV norms of matrix units and the ladder-matrix vs grid cross-oracle.
pub fn gbv_norms(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut worst = 0.0f64;
    for m in 0..4usize {
        for n in 0..4usize {
            for k in 0..3u32 {
                for l in 0..3u32 {
                    let v = gbv_norm(&MatrixSymbol::unit(4, cfg.theta, m, n), k, l, GbvMode::Usual);
                    let expect = (m.pow(k) as f64).sqrt() * (n.pow(l) as f64).sqrt();
                    worst = worst.max((v - expect).abs());
                }
            }
        }
    }
    let mut c = Checks::new(cfg);
    c.exact("gbv_norm(E_mn, k, l) = m^(k/2) n^(l/2)", worst);
    let trunc = 6;
    let cache = synthesize_basis(cfg.moyal_spec()?, trunc)?;
    let s = (2.0 * cfg.theta).sqrt().recip();
    let mut cross = 0.0f64;
    for &(m, n) in &[(0, 0), (1, 0), (2, 3), (3, 1)] {
        let b = cache.get(m, n);
        let re = linear_star(&[s, 0.0], b, Side::Left)?;
        let im = linear_star(&[0.0, s], b, Side::Left)?;
        let grid = re.add(&im.scale(C64::new(0.0, 1.0))).norm().powi(2);
        let e = MatrixSymbol::unit(trunc, cfg.theta, m, n);
        let ladder = 2.0 * PI * cfg.theta * (&ladder_z1(trunc) * &e.coeffs).norm_squared();
        cross = cross.max((grid - ladder).abs() / ladder.max(f64::MIN_POSITIVE));
    }
    c.residual("|z1 * b_mn|^2: ladder vs grid", cross, 1e-3);
    Ok(c.done())
}

// ---------------------------------------------------------------------------
// symmetry

fn symmetry_function(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let q0 = rng.gen_range(-1.0..1.0);
    let p0 = rng.gen_range(-1.0..1.0);
    let s = rng.gen_range(1.0..1.5f64);
    let a = rng.gen_range(-0.5..0.5);
    GridFunction::from_fn(spec, move |x| {
        let r2 = ((x[0] - q0).powi(2) + (x[1] - p0).powi(2)) / (s * s);
        C64::new((-r2).exp() * (1.0 + a * x[0] * x[1]), 0.0)
    })
}

/// Composition phase of plane waves against the quadrature oracle at 16 seeded pairs, and
/// the cocycle identity on integer points.
pub fn plane_wave_bch(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let mut rng = cfg.rng(6);
    let mut worst = 0.0f64;
    for _ in 0..16 {
        let x0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let x1 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let r = bch_report(&x0, &x1, cfg.theta, Some(spec))?;
        let o = r.oracle.expect("oracle requested");
        worst = worst.max(r.residual).max((r.closed_form - o).norm());
    }
    let mut cocycle = 0.0f64;
    for _ in 0..16 {
        let mut p = || -> [f64; 2] { [rng.gen_range(-5i32..=5) as f64, rng.gen_range(-5i32..=5) as f64] };
        let (a, b, d) = (p(), p(), p());
        cocycle = cocycle.max(cocycle_defect(&a, &b, &d));
    }
    let mut c = Checks::new(cfg);
    c.residual("plane-wave BCH phase vs quadrature, 16 pairs", worst, 1e-6);
    c.exact("cocycle identity on integer points", cocycle);
    Ok(c.done())
}

pub fn translation_symmetry(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let cache = synthesize_basis(spec, 2)?;
    let mut c = Checks::new(cfg);
    let mut comm = 0.0f64;
    for (m, n) in [(0, 0), (1, 1)] {
        for j in 0..2 {
            comm = comm.max(linear_commutator_check(j, cache.get(m, n))?.max());
        }
    }
    c.residual("[x_j, f] and {x_j, f} on b00, b11", comm, 1e-3);
    let mut rng = cfg.rng(7);
    let f = symmetry_function(spec, &mut rng);
    let heis = heisenberg_check(0, 1, &f)?.max(heisenberg_check(1, 0, &f)?);
    c.residual("Heisenberg constants", heis, 1e-3);
    let m = spec.m / 2;
    let spots: Vec<usize> = [(m, m), (m + 3, m - 2), (m - 4, m + 5)].iter().map(|&(i, j)| i * spec.m + j).collect();
    let mut ode = 0.0f64;
    for t in [0.0, 0.5, 1.3] {
        ode = ode.max(star_exp_ode_residual(&[0.7, -0.4], t, &f, &spots)?);
    }
    c.residual("plane-wave star-exponential ODE", ode, 1e-3);
    Ok(c.done())
}

/// Ratios of the Sobolev norm to the classical `H^k` norm over ten seeded functions.
pub fn sobolev_equivalence(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.moyal_spec()?;
    let mut rng = cfg.rng(8);
    let fs: Vec<GridFunction> = (0..10).map(|_| symmetry_function(spec, &mut rng)).collect();
    let mut c = Checks::new(cfg);
    for k in 0..=3 {
        let mut ratios = Vec::new();
        for f in &fs {
            ratios.push(sobolev_norm(f, k)? / classical_sobolev_norm(f, k));
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        c.flag(format!("Sobolev/H^{k} ratio min"), lo.is_finite() && lo > 0.0).with_value(lo);
        c.flag(format!("Sobolev/H^{k} ratio max"), hi.is_finite() && hi > 0.0).with_value(hi);
    }
    Ok(c.done())
}

// ---------------------------------------------------------------------------
// j-group

#[derive(Clone, Copy)]
struct JGauss {
    c: [f64; 4],
    s: [f64; 4],
    k: [f64; 2],
    amp: C64,
}

impl JGauss {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            c: [rng.gen_range(-0.2..0.2), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)],
            s: [rng.gen_range(0.45..0.55), rng.gen_range(1.1..1.4), rng.gen_range(1.1..1.4), rng.gen_range(1.4..1.7)],
            k: [rng.gen_range(-0.2..0.2), rng.gen_range(-0.15..0.15)],
            amp: C64::new(rng.gen_range(0.5..1.0), rng.gen_range(-0.5..0.5)),
        }
    }

    fn at(&self, g: &JGroupElement) -> C64 {
        let v = [g.a, g.x[0], g.x[1], g.l];
        let r: f64 = (0..4).map(|i| ((v[i] - self.c[i]) / self.s[i]).powi(2)).sum();
        self.amp * C64::from_polar((-0.5 * r).exp(), self.k[0] * g.x[0] + self.k[1] * g.l)
    }

    fn sample(&self, spec: JGroupSpec) -> JGroupFunction {
        let s = *self;
        JGroupFunction::from_fn(spec, move |g| s.at(g))
    }
}

fn jgroup_spots(spec: JGroupSpec) -> Vec<usize> {
    let c = [spec.a.m / 2, spec.xq.m / 2, spec.xp.m / 2, spec.l.m / 2];
    [(0i32, 0i32, 0i32, 0i32), (1, -1, 2, -1), (-2, 2, -1, 1), (2, -2, 1, 3)]
        .iter()
        .map(|&(i, j, k, m)| {
            let at = |c: usize, d: i32| (c as i32 + d) as usize;
            spec.index(at(c[0], i), at(c[1], j), at(c[2], k), at(c[3], m))
        })
        .collect()
}

fn spot_error(a: &JGroupFunction, b: &[C64], idx: &[usize]) -> f64 {
    let s = a.max_abs();
    idx.iter().zip(b).map(|(&k, v)| (a.samples[k] - v).norm() / s).fold(0.0, f64::max)
}

/// The j-group criteria on the default grid. The Lie relations chain `ℓ`-multipliers whose
/// images decay slowly in `ℓ`, so they run on [`JGroupSpec::extended`].
pub fn jgroup_checks(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let th = cfg.theta;
    let spec = JGroupSpec::standard(th);
    let mut rng = cfg.rng(9);
    let mut c = Checks::new(cfg);

    let mut iso = 0.0f64;
    for _ in 0..10 {
        let f = JGauss::random(&mut rng).sample(spec);
        iso = iso.max((jgroup::intertwiner(&f, Direction::Forward)?.norm() / f.norm() - 1.0).abs());
    }
    c.residual("U isometry, 10 Gaussians", iso, 1e-4);

    let gs: Vec<JGauss> = (0..3).map(|_| JGauss::random(&mut rng)).collect();
    let [f, g, h] = [0, 1, 2].map(|i| gs[i].sample(spec));
    let idx = jgroup_spots(spec);
    let pts: Vec<JGroupElement> = idx.iter().map(|&k| spec.element(k)).collect();
    let fg = jgroup::jstar_product(&f, &g)?;
    let direct = jgroup::jstar_kernel_direct(&f, &g, &pts)?;
    c.residual("route vs direct kernel at spot points", spot_error(&fg, &direct, &idx), 5e-3);
    let left = jgroup::jstar_product(&fg, &h)?;
    let right = jgroup::jstar_product(&f, &jgroup::jstar_product(&g, &h)?)?;
    c.residual("associativity", left.relative_error(&right), 5e-3);
    let (lhs, rhs) = (fg.integral(), f.pointwise(&g).integral());
    c.residual("traciality", (lhs - rhs).norm() / rhs.norm(), 5e-3);

    let g0 = JGroupElement::new(0.2, [0.3, -0.2], 0.25);
    let (a0, b0) = (gs[0], gs[1]);
    let d = jgroup::left_invariance_defect(|x| a0.at(x), |x| b0.at(x), &g0, spec, &idx)?;
    c.residual("left invariance", d, 5e-3);

    let (qf, qg) = (jgroup::quantize(&f)?, jgroup::quantize(&g)?);
    let q = qf.compose(&qg);
    c.residual("quantization homomorphism", jgroup::quantize(&fg)?.sub(&q).hs_norm() / q.hs_norm(), 5e-3);
    c.residual("quantization *-morphism", jgroup::quantize(&f.conj())?.sub(&qf.adjoint()).hs_norm() / qf.hs_norm(), 1e-10);

    // generator identities
    let e1 = jgroup::generator_multiplication(JGenerator::ExpA(1), &f, Part::Commutator)?;
    let d_l = f.derivative(3, 1).multiply_by(|x| C64::new(0.0, th * (-2.0 * x.a).exp()));
    c.residual("[e^-2a, f] = i theta e^-2a d_l f", e1.relative_error(&d_l), 1e-3);
    let y = [0.7, -0.4];
    let gj = gs[0];
    let mut eps_res = 0.0f64;
    for eps in [-1, 1] {
        let e = eps as f64;
        let comm = jgroup::generator_multiplication(JGenerator::Linear { eps, y }, &f, Part::Commutator)?;
        let expected = JGroupFunction::from_fn(spec, |x| {
            let v = gj.at(x);
            let dq = v * C64::new(-(x.x[0] - gj.c[1]) / gj.s[1].powi(2), gj.k[0]);
            let dp = v * C64::new(-(x.x[1] - gj.c[2]) / gj.s[2].powi(2), 0.0);
            let dl = v * C64::new(-(x.l - gj.c[3]) / gj.s[3].powi(2), gj.k[1]);
            let w = y[0] * x.x[1] - y[1] * x.x[0];
            C64::new(0.0, th * (e * x.a).exp()) * (dq * y[0] + dp * y[1] - dl * (e / 2.0 * w))
        });
        eps_res = eps_res.max(comm.relative_error(&expected));
    }
    c.residual("e^(eps a) w(y,x) commutator", eps_res, 1e-3);
    for (name, fld) in [("H", FieldGenerator::H), ("E", FieldGenerator::E)] {
        c.residual(format!("[eta_{name}, f] = -i theta {name}* f"), jgroup::fundamental_field_residual(fld, &f)?, 1e-3);
    }

    let ext = JGroupSpec::extended(th);
    let fe = JGauss::random(&mut rng).sample(ext);
    let worst = jgroup::lie_relations(&fe, y, [0.2, 0.9])?.iter().fold(0.0f64, |m, r| m.max(r.residual));
    c.residual("Lie relations (extended l grid)", worst, 1e-3);

    let zero = jgroup::jstar_exp(0.0, [0.0; 2], [0.0; 2], 0.0, 0.0, spec);
    c.exact("star-exponential at zero is 1", zero.samples.iter().fold(0.0f64, |m, z| m.max((z - C64::new(1.0, 0.0)).norm())));
    let (a1, a2) = (0.3, 0.4);
    let psi = gs[2];
    let nested = jgroup::jstar_exp_multiply(a1, &jgroup::jstar_exp_multiply(a2, &h)?)?;
    let oracle = jgroup::jstar_exp_oracle(a1 + a2, |x| psi.at(x), th, &pts);
    c.residual("one-parameter BCH E(a1)*E(a2) = E(a1+a2)", spot_error(&nested, &oracle, &idx), 5e-3);
    Ok(c.done())
}

// ---------------------------------------------------------------------------
// clifford

pub fn clifford_checks(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut c = Checks::new(cfg);
    for m in 0..=4 {
        let s = structure_checks(m);
        c.flag(format!("Cl({}) anticommutation", 2 * m), s.anticommutation);
        c.flag(format!("Cl({}) associativity", 2 * m), s.associativity);
        c.flag(format!("Cl({}) involution", 2 * m), s.involution_antimultiplicative);
        c.flag(format!("Cl({}) orthonormal blades", 2 * m), s.gram_identity);
    }
    for m in 1..=4 {
        let r = verify_unital_multipliers(m)?;
        let d = 1usize << (2 * m);
        c.flag(format!("Cl({}) multiplier dimension 4^{m}", 2 * m), r.solution_dim == d).with_value(r.solution_dim as f64);
        c.flag(format!("Cl({}) multipliers biject onto the algebra", 2 * m), r.image_rank == d && r.pass);
    }
    Ok(c.done())
}

// ---------------------------------------------------------------------------
// benchmarks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchTarget {
    MoyalFast,
    Intertwiner,
    Quantize,
}

impl FromStr for BenchTarget {
    type Err = HdqError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "moyal_fast" => BenchTarget::MoyalFast,
            "intertwiner" => BenchTarget::Intertwiner,
            "quantize" => BenchTarget::Quantize,
            _ => return Err(HdqError::ParseError(format!("unknown bench target {s:?}"))),
        })
    }
}

impl BenchTarget {
    /// Sizes used when none are given.
    pub fn default_sizes(self) -> &'static [usize] {
        match self {
            BenchTarget::MoyalFast | BenchTarget::Quantize => &[32, 64, 128, 256],
            BenchTarget::Intertwiner => &[32],
        }
    }

    /// Tolerance the residual column is held to.
    pub fn tolerance(self) -> f64 {
        match self {
            BenchTarget::MoyalFast => 1e-3,
            BenchTarget::Quantize | BenchTarget::Intertwiner => 1e-4,
        }
    }
}

/// Largest `M` for the two-dimensional targets.
pub const MAX_BENCH_GRID: usize = 1024;
/// Largest points-per-axis for the four-dimensional intertwiner target.
pub const MAX_BENCH_JGROUP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    pub wall_ms: f64,
    pub residual: f64,
}

/// One timed run at `size`. Residuals: `‖b₀₀⋆b₀₀ − b₀₀‖/‖b₀₀‖` for `moyal_fast`,
/// `|‖Uf‖/‖f‖ − 1|` on a seeded Gaussian for `intertwiner`, and the deviation of
/// `‖Ω(b₀₀)‖_HS/‖b₀₀‖` from `(2πθ)^{−1/2}` for `quantize`.
pub fn bench_row(target: BenchTarget, size: usize, cfg: &RunConfig) -> Result<BenchRow> {
    let cap = if target == BenchTarget::Intertwiner { MAX_BENCH_JGROUP } else { MAX_BENCH_GRID };
    if size > cap {
        return Err(HdqError::ResourceError(format!("size {size} exceeds the {cap} limit for this target")));
    }
    let th = cfg.theta;
    match target {
        BenchTarget::MoyalFast | BenchTarget::Quantize => {
            let spec = GridSpec::new(1, size, 6.0 * th.sqrt(), th)?;
            let b = synthesize_basis(spec, 1)?.get(0, 0).clone();
            let t = Instant::now();
            let residual = if target == BenchTarget::MoyalFast {
                moyal_fast(&b, &b)?.relative_error(&b)
            } else {
                (weyl_quantize(&b)?.hs_norm() / b.norm() / isometry_constant(th) - 1.0).abs()
            };
            Ok(BenchRow { size, wall_ms: t.elapsed().as_secs_f64() * 1e3, residual })
        }
        BenchTarget::Intertwiner => {
            let s = JGroupSpec::standard(th);
            let ax = |a: crate::grid::Axis| crate::grid::Axis::new(size, a.l);
            let spec = JGroupSpec::new(ax(s.a), ax(s.xq), ax(s.xp), ax(s.l), th)?;
            let f = JGauss::random(&mut cfg.rng(10)).sample(spec);
            let t = Instant::now();
            let u = jgroup::intertwiner(&f, Direction::Forward)?;
            let wall_ms = t.elapsed().as_secs_f64() * 1e3;
            Ok(BenchRow { size, wall_ms, residual: (u.norm() / f.norm() - 1.0).abs() })
        }
    }
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("size,wall_ms,residual\n");
    for r in rows {
        out.push_str(&format!("{},{:.3},{:.6e}\n", r.size, r.wall_ms, r.residual));
    }
    out
}
