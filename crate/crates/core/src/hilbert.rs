//! Finite-dimensional Hilbert algebras in basis coordinates with an explicit gram matrix.
//!
//! Coordinates: a vector `x` stands for `Σ x_i e_i`. The inner product is `xᴴ G y`,
//! so adjoints of coordinate operators are `G⁻¹ Tᴴ G`. The involution acts as
//! `x* = Jm · conj(x)` with `Jm = Sᵀ`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::linalg::{
    cholesky_upper, column_span, frob, inverse, is_hermitian, kron, max_abs, nullspace_of,
    subspace_residual, unvec, vec_of, CMat, CVec, RowCompressor, C64, ONE, ZERO,
};
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HilbertTol {
    pub axiom: f64,
    pub nullspace: f64,
    pub multiplier: f64,
    pub subspace: f64,
    pub trace: f64,
    pub unitary: f64,
    pub automorphism: f64,
}

impl Default for HilbertTol {
    fn default() -> Self {
        Self {
            axiom: 1e-10,
            nullspace: 1e-10,
            multiplier: 1e-10,
            subspace: 1e-10,
            trace: 1e-10,
            unitary: 1e-10,
            automorphism: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHilbertAlgebra {
    dim: usize,
    /// Row `i·d + j` holds the coefficients of `e_i e_j`.
    structure: Csr,
    involution: Csr,
    gram: Csr,
}

fn is_diagonal(m: &Csr) -> bool {
    (0..m.rows).all(|r| m.row(r).all(|(c, _)| c == r))
}

fn check_gram(g: &Csr) -> Result<()> {
    if is_diagonal(g) {
        for r in 0..g.rows {
            let v = g.get(r, r);
            if v.im.abs() > 1e-12 * v.re.abs().max(1.0) || !(v.re > 0.0) {
                return Err(HdqError::InvalidGram(format!("diagonal entry {r} is {v}")));
            }
        }
        return Ok(());
    }
    let dense = g.to_dense();
    if !is_hermitian(&dense, 1e-12) {
        return Err(HdqError::InvalidGram("gram is not Hermitian".into()));
    }
    if cholesky_upper(&dense).is_none() {
        return Err(HdqError::InvalidGram("gram is not positive definite".into()));
    }
    Ok(())
}

impl FiniteHilbertAlgebra {
    pub fn new(dim: usize, structure: Csr, involution: Csr, gram: Csr) -> Result<Self> {
        if dim == 0 {
            return Err(HdqError::StructureError("dimension must be positive".into()));
        }
        if (structure.rows, structure.cols) != (dim * dim, dim) {
            return Err(HdqError::StructureError(format!(
                "structure has shape {}x{}, expected {}x{}",
                structure.rows,
                structure.cols,
                dim * dim,
                dim
            )));
        }
        if (involution.rows, involution.cols) != (dim, dim) || (gram.rows, gram.cols) != (dim, dim) {
            return Err(HdqError::StructureError("involution and gram must be d×d".into()));
        }
        check_gram(&gram)?;
        Ok(Self { dim, structure, involution, gram })
    }

    /// `c` is indexed `(i·d + j)·d + k`.
    pub fn from_dense(dim: usize, c: &[C64], involution: &CMat, gram: &CMat) -> Result<Self> {
        if c.len() != dim * dim * dim {
            return Err(HdqError::StructureError(format!(
                "expected {} structure constants, got {}",
                dim * dim * dim,
                c.len()
            )));
        }
        let mut t = Vec::new();
        for (n, &v) in c.iter().enumerate() {
            if v != ZERO {
                t.push((n / dim, n % dim, v));
            }
        }
        let s = Csr::from_triplets(dim * dim, dim, t);
        Self::new(dim, s, Csr::from_dense(involution), Csr::from_dense(gram))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure(&self) -> &Csr {
        &self.structure
    }

    pub fn involution(&self) -> &Csr {
        &self.involution
    }

    pub fn gram(&self) -> &Csr {
        &self.gram
    }

    pub fn gram_dense(&self) -> CMat {
        self.gram.to_dense()
    }

    /// Coordinate matrix of the antilinear involution: `x* = jm · conj(x)`.
    pub fn jm(&self) -> CMat {
        self.involution.transpose().to_dense()
    }

    pub fn with_gram(&self, gram: &CMat) -> Result<Self> {
        Self::new(self.dim, self.structure.clone(), self.involution.clone(), Csr::from_dense(gram))
    }

    pub fn basis_product(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.structure.row(i * self.dim + j)
    }

    pub fn product(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj == ZERO {
                    continue;
                }
                let s = xi * yj;
                for (k, c) in self.basis_product(i, j) {
                    out[k] += s * c;
                }
            }
        }
        out
    }

    fn product_sparse(&self, x: &[(usize, C64)], y: &[(usize, C64)], out: &mut [C64]) {
        for &(i, xi) in x {
            for &(j, yj) in y {
                let s = xi * yj;
                for (k, c) in self.basis_product(i, j) {
                    out[k] += s * c;
                }
            }
        }
    }

    pub fn star(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for (j, s) in self.involution.row(i) {
                out[j] += s * xi.conj();
            }
        }
        out
    }

    pub fn inner(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut acc = ZERO;
        for (r, &xr) in x.iter().enumerate() {
            if xr == ZERO {
                continue;
            }
            let gy: C64 = self.gram.row(r).map(|(c, g)| g * y[c]).sum();
            acc += xr.conj() * gy;
        }
        acc
    }

    pub fn norm(&self, x: &[C64]) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    pub fn unit_vector(&self, i: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.dim];
        v[i] = ONE;
        v
    }

    /// Sparse `λ_x`: entry `(k, j)` is `Σ_i x_i c_ij^k`.
    pub fn left_op(&self, x: &[C64]) -> Csr {
        let d = self.dim;
        let mut t = Vec::new();
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for j in 0..d {
                for (k, c) in self.basis_product(i, j) {
                    t.push((k, j, xi * c));
                }
            }
        }
        Csr::from_triplets(d, d, t)
    }

    /// Sparse `ρ_y`: entry `(k, i)` is `Σ_j y_j c_ij^k`.
    pub fn right_op(&self, y: &[C64]) -> Csr {
        let d = self.dim;
        let mut t = Vec::new();
        for (j, &yj) in y.iter().enumerate() {
            if yj == ZERO {
                continue;
            }
            for i in 0..d {
                for (k, c) in self.basis_product(i, j) {
                    t.push((k, i, yj * c));
                }
            }
        }
        Csr::from_triplets(d, d, t)
    }

    pub fn regular_representation(&self, x: &[C64], side: Side) -> CMat {
        match side {
            Side::Left => self.left_op(x).to_dense(),
            Side::Right => self.right_op(x).to_dense(),
        }
    }

    /// G-adjoint `G⁻¹ Tᴴ G` of a coordinate operator.
    pub fn adjoint_of(&self, t: &CMat) -> CMat {
        let g = self.gram_dense();
        if is_diagonal(&self.gram) {
            let mut out = t.adjoint();
            for r in 0..self.dim {
                let gr = g[(r, r)];
                for c in 0..self.dim {
                    out[(r, c)] *= g[(c, c)] / gr;
                }
            }
            return out;
        }
        let gi = inverse(&g).expect("gram is invertible");
        gi * t.adjoint() * g
    }

    /// Gram-orthonormal copy. Returns `(B, C)` with `G = CᴴC`; coordinates map as `x' = C x`.
    pub fn orthonormalized(&self) -> (Self, CMat) {
        let d = self.dim;
        if self.gram.is_identity() {
            return (self.clone(), CMat::identity(d, d));
        }
        let c = cholesky_upper(&self.gram_dense()).expect("gram checked positive definite");
        let b = inverse(&c).expect("Cholesky factor invertible");
        let mut cs = vec![ZERO; d * d * d];
        for i in 0..d {
            for j in 0..d {
                let mut v = vec![ZERO; d];
                for a in 0..d {
                    let bai = b[(a, i)];
                    if bai == ZERO {
                        continue;
                    }
                    for bb in 0..d {
                        let s = bai * b[(bb, j)];
                        if s == ZERO {
                            continue;
                        }
                        for (k, ck) in self.basis_product(a, bb) {
                            v[k] += s * ck;
                        }
                    }
                }
                for kk in 0..d {
                    let w: C64 = (0..d).map(|k| c[(kk, k)] * v[k]).sum();
                    cs[(i * d + j) * d + kk] = w;
                }
            }
        }
        // e'_i* = Σ_a conj(B_ai) e_a* ; coordinates in the primed basis via C.
        let s = self.involution.to_dense();
        let s_new = b.adjoint() * s * c.transpose();
        let mut clean = |v: C64| if v.norm() < 1e-15 { ZERO } else { v };
        let cs: Vec<C64> = cs.into_iter().map(&mut clean).collect();
        let s_new = s_new.map(&mut clean);
        let out = Self::from_dense(d, &cs, &s_new, &CMat::identity(d, d))
            .expect("orthonormal gram is valid");
        (out, c)
    }
}

// ---------------------------------------------------------------------------
// Axioms

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub associativity: f64,
    pub involution: f64,
    pub axiom1: f64,
    pub axiom2: f64,
    pub product_span_rank: usize,
    pub dim: usize,
}

impl AxiomReport {
    /// Rank deficit of the product span, as a residual.
    pub fn axiom4(&self) -> f64 {
        (self.dim - self.product_span_rank) as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.associativity.max(self.involution).max(self.axiom1).max(self.axiom2).max(self.axiom4())
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

struct Scratch {
    v: Vec<C64>,
    touched: Vec<usize>,
    seen: Vec<bool>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self { v: vec![ZERO; d], touched: Vec::new(), seen: vec![false; d] }
    }

    fn add(&mut self, k: usize, z: C64) {
        if !self.seen[k] {
            self.seen[k] = true;
            self.touched.push(k);
        }
        self.v[k] += z;
    }

    fn drain(&mut self) -> Vec<(usize, C64)> {
        let mut out = Vec::with_capacity(self.touched.len());
        for &k in &self.touched {
            if self.v[k] != ZERO {
                out.push((k, self.v[k]));
            }
            self.v[k] = ZERO;
            self.seen[k] = false;
        }
        self.touched.clear();
        out.sort_by_key(|p| p.0);
        out
    }
}

fn max_abs_sparse_diff(a: &[(usize, C64)], b: &[(usize, C64)]) -> f64 {
    let mut m: HashMap<usize, C64> = a.iter().copied().collect();
    for &(k, v) in b {
        *m.entry(k).or_insert(ZERO) -= v;
    }
    m.values().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Row echelon rank of sparse vectors, stopping once `cap` is reached.
fn sparse_rank<I: Iterator<Item = Vec<(usize, C64)>>>(d: usize, vecs: I, cap: usize, rel_tol: f64) -> usize {
    let mut pivots: Vec<Option<Vec<C64>>> = vec![None; d];
    let mut rank = 0;
    let mut buf = vec![ZERO; d];
    for v in vecs {
        if rank >= cap {
            break;
        }
        let scale = v.iter().fold(0.0f64, |a, p| a.max(p.1.norm()));
        if scale == 0.0 {
            continue;
        }
        buf.iter_mut().for_each(|z| *z = ZERO);
        for (k, z) in v {
            buf[k] += z;
        }
        for c in 0..d {
            if buf[c].norm() <= rel_tol * scale {
                buf[c] = ZERO;
                continue;
            }
            match &pivots[c] {
                Some(p) => {
                    let f = buf[c];
                    for k in c..d {
                        buf[k] -= f * p[k];
                    }
                }
                None => {
                    let f = buf[c];
                    let row: Vec<C64> = buf.iter().map(|z| *z / f).collect();
                    pivots[c] = Some(row);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

impl FiniteHilbertAlgebra {
    /// Residuals of associativity, the involution laws and axioms 1, 2, 4.
    pub fn validate_axioms(&self) -> Result<AxiomReport> {
        check_gram(&self.gram)?;
        let d = self.dim;
        let mut sc = Scratch::new(d);

        let mut assoc = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let ij: Vec<(usize, C64)> = self.basis_product(i, j).collect();
                for k in 0..d {
                    for &(m, c) in &ij {
                        for (n, v) in self.basis_product(m, k) {
                            sc.add(n, c * v);
                        }
                    }
                    let lhs = sc.drain();
                    for (m, c) in self.basis_product(j, k) {
                        for (n, v) in self.basis_product(i, m) {
                            sc.add(n, c * v);
                        }
                    }
                    let rhs = sc.drain();
                    assoc = assoc.max(max_abs_sparse_diff(&lhs, &rhs));
                }
            }
        }

        let s = &self.involution;
        let mut invol = s.matmul(&s.conj()).max_abs_diff(&Csr::identity(d));
        let srow: Vec<Vec<(usize, C64)>> = (0..d).map(|i| s.row(i).collect()).collect();
        for i in 0..d {
            for j in 0..d {
                for (k, c) in self.basis_product(i, j) {
                    for (m, v) in s.row(k) {
                        sc.add(m, c.conj() * v);
                    }
                }
                let lhs = sc.drain();
                let mut out = vec![ZERO; d];
                self.product_sparse(&srow[j], &srow[i], &mut out);
                let rhs: Vec<(usize, C64)> =
                    out.into_iter().enumerate().filter(|p| p.1 != ZERO).collect();
                invol = invol.max(max_abs_sparse_diff(&lhs, &rhs));
            }
        }

        let mut ax1 = 0.0f64;
        let mut dense_i = vec![ZERO; d];
        for i in 0..d {
            dense_i.iter_mut().for_each(|z| *z = ZERO);
            for &(k, v) in &srow[i] {
                dense_i[k] = v;
            }
            for j in 0..d {
                let mut val = ZERO;
                for &(k, v) in &srow[j] {
                    let gy: C64 = self.gram.row(k).map(|(l, g)| g * dense_i[l]).sum();
                    val += v.conj() * gy;
                }
                ax1 = ax1.max((val - self.gram.get(i, j)).norm());
            }
        }

        let g = &self.gram;
        let mut ax2 = 0.0f64;
        for i in 0..d {
            let li = self.left_op(&self.unit_vector(i));
            let lhs = li.adjoint().matmul(g);
            let mut sv = vec![ZERO; d];
            for &(k, v) in &srow[i] {
                sv[k] = v;
            }
            let rhs = g.matmul(&self.left_op(&sv));
            ax2 = ax2.max(lhs.max_abs_diff(&rhs));
        }

        let rank = if d <= 64 {
            let mut comp = RowCompressor::new(d);
            for i in 0..d {
                let mut block = CMat::zeros(d, d);
                for j in 0..d {
                    for (k, c) in self.basis_product(i, j) {
                        block[(j, k)] = c;
                    }
                }
                comp.push(block);
            }
            crate::linalg::rank(&comp.finish(), 1e-10)
        } else {
            let it = (0..d * d).map(|n| self.structure.row(n).collect::<Vec<_>>());
            sparse_rank(d, it, d, 1e-10)
        };

        Ok(AxiomReport {
            associativity: assoc,
            involution: invol,
            axiom1: ax1,
            axiom2: ax2,
            product_span_rank: rank,
            dim: d,
        })
    }

    /// Residual of `Jm conj(λ_x) conj(Jm) = ρ_{x*}` over the basis.
    pub fn j_intertwining_residual(&self) -> f64 {
        let jm = self.jm();
        let jbar = jm.map(|z| z.conj());
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            let e = self.unit_vector(i);
            let l = self.left_op(&e).to_dense();
            let lhs = &jm * l.map(|z| z.conj()) * &jbar;
            let rhs = self.right_op(&self.star(&e)).to_dense();
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
        worst
    }

    /// Basis of `{x : ρ_y x = 0 ∀y}`; trivial for a Hilbert algebra.
    pub fn right_annihilator(&self) -> CMat {
        let d = self.dim;
        let mut comp = RowCompressor::new(d);
        for j in 0..d {
            comp.push(self.right_op(&self.unit_vector(j)).to_dense());
        }
        nullspace_of(&comp.finish(), 1e-10)
    }
}

// ---------------------------------------------------------------------------
// Multipliers

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierPair {
    pub left: Csr,
    pub right: Csr,
    pub defect: f64,
}

impl MultiplierPair {
    pub fn new(a: &FiniteHilbertAlgebra, left: Csr, right: Csr) -> Self {
        let defect = multiplier_defect(a, &left, &right);
        Self { left, right, defect }
    }

    pub fn from_dense(a: &FiniteHilbertAlgebra, left: &CMat, right: &CMat) -> Self {
        Self::new(a, Csr::from_dense(left), Csr::from_dense(right))
    }

    pub fn identity(a: &FiniteHilbertAlgebra) -> Self {
        Self::new(a, Csr::identity(a.dim()), Csr::identity(a.dim()))
    }

    /// `(λ_z, ρ_z)`.
    pub fn regular(a: &FiniteHilbertAlgebra, z: &[C64]) -> Self {
        Self::new(a, a.left_op(z), a.right_op(z))
    }

    pub fn left_dense(&self) -> CMat {
        self.left.to_dense()
    }

    pub fn right_dense(&self) -> CMat {
        self.right.to_dense()
    }
}

/// `max_{i,j} ‖e_i L(e_j) − R(e_i) e_j‖ / (‖e_i‖‖e_j‖)`.
pub fn multiplier_defect(a: &FiniteHilbertAlgebra, left: &Csr, right: &Csr) -> f64 {
    let d = a.dim();
    let lcols = left.transpose();
    let rcols = right.transpose();
    let norms: Vec<f64> = (0..d).map(|i| a.gram.get(i, i).re.max(0.0).sqrt()).collect();
    let mut sc = Scratch::new(d);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            for (aa, v) in lcols.row(j) {
                for (k, c) in a.basis_product(i, aa) {
                    sc.add(k, v * c);
                }
            }
            for (b, v) in rcols.row(i) {
                for (k, c) in a.basis_product(b, j) {
                    sc.add(k, -v * c);
                }
            }
            let diff = sc.drain();
            if diff.is_empty() {
                continue;
            }
            let mut dense = vec![ZERO; d];
            for &(k, z) in &diff {
                dense[k] = z;
            }
            let n = a.norm(&dense);
            worst = worst.max(n / (norms[i] * norms[j]));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    #[default]
    Auto,
    Dense,
    /// Union-find over equations with at most two terms.
    Sparse,
}

fn dense_multipliers(a: &FiniteHilbertAlgebra, tol: f64) -> Vec<MultiplierPair> {
    let d = a.dim();
    let n = 2 * d * d;
    let mut comp = RowCompressor::new(n);
    for i in 0..d {
        let mut block = CMat::zeros(d * d, n);
        for j in 0..d {
            for aa in 0..d {
                for (k, c) in a.basis_product(i, aa) {
                    block[(j * d + k, j * d + aa)] += c;
                }
            }
            for b in 0..d {
                for (k, c) in a.basis_product(b, j) {
                    block[(j * d + k, d * d + i * d + b)] -= c;
                }
            }
        }
        comp.push(block);
    }
    let ns = nullspace_of(&comp.finish(), tol);
    (0..ns.ncols())
        .map(|c| {
            let col: Vec<C64> = ns.column(c).iter().copied().collect();
            let l = unvec(&col[..d * d], d, d);
            let r = unvec(&col[d * d..], d, d);
            MultiplierPair::from_dense(a, &l, &r)
        })
        .collect()
}

struct RatioUnionFind {
    parent: Vec<usize>,
    ratio: Vec<C64>,
    zero: Vec<bool>,
}

impl RatioUnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), ratio: vec![ONE; n], zero: vec![false; n] }
    }

    /// Returns `(root, r)` with `value(v) = r · value(root)`.
    fn find(&mut self, v: usize) -> (usize, C64) {
        let mut path = Vec::new();
        let mut cur = v;
        while self.parent[cur] != cur {
            path.push(cur);
            cur = self.parent[cur];
        }
        let root = cur;
        let mut acc = ONE;
        for &p in path.iter().rev() {
            acc *= self.ratio[p];
            self.ratio[p] = acc;
            self.parent[p] = root;
        }
        (root, if v == root { ONE } else { self.ratio[v] })
    }

    fn set_zero(&mut self, v: usize) {
        let (r, _) = self.find(v);
        self.zero[r] = true;
    }

    /// Impose `c1 v1 + c2 v2 = 0`.
    fn relate(&mut self, v1: usize, c1: C64, v2: usize, c2: C64) {
        let (r1, a1) = self.find(v1);
        let (r2, a2) = self.find(v2);
        let k = -(c2 * a2) / (c1 * a1);
        if r1 == r2 {
            if (k - ONE).norm() > 1e-12 * k.norm().max(1.0) {
                self.zero[r1] = true;
            }
            return;
        }
        self.parent[r1] = r2;
        self.ratio[r1] = k;
        if self.zero[r1] {
            self.zero[r2] = true;
        }
    }
}

fn sparse_multipliers(a: &FiniteHilbertAlgebra) -> Option<Vec<MultiplierPair>> {
    let d = a.dim();
    let nvar = 2 * d * d;
    let lvar = |aa: usize, j: usize| j * d + aa;
    let rvar = |b: usize, i: usize| d * d + i * d + b;
    let mut uf = RatioUnionFind::new(nvar);
    let mut eqs: Vec<Vec<(usize, C64)>> = vec![Vec::new(); d];
    let mut touched = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for aa in 0..d {
                for (k, c) in a.basis_product(i, aa) {
                    if eqs[k].is_empty() {
                        touched.push(k);
                    }
                    eqs[k].push((lvar(aa, j), c));
                }
            }
            for b in 0..d {
                for (k, c) in a.basis_product(b, j) {
                    if eqs[k].is_empty() {
                        touched.push(k);
                    }
                    eqs[k].push((rvar(b, i), -c));
                }
            }
            for &k in &touched {
                let e = std::mem::take(&mut eqs[k]);
                match e.len() {
                    1 => uf.set_zero(e[0].0),
                    2 => uf.relate(e[0].0, e[0].1, e[1].0, e[1].1),
                    _ => return None,
                }
            }
            touched.clear();
        }
    }
    let mut comps: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
    for v in 0..nvar {
        let (r, ratio) = uf.find(v);
        if !uf.zero[r] {
            comps.entry(r).or_default().push((v, ratio));
        }
    }
    let mut roots: Vec<usize> = comps.keys().copied().collect();
    roots.sort_unstable();
    let pairs = roots
        .into_iter()
        .map(|r| {
            let members = &comps[&r];
            let nrm = members.iter().map(|p| p.1.norm_sqr()).sum::<f64>().sqrt();
            let mut lt = Vec::new();
            let mut rt = Vec::new();
            for &(v, z) in members {
                let z = z / nrm;
                if v < d * d {
                    lt.push((v % d, v / d, z));
                } else {
                    let w = v - d * d;
                    rt.push((w % d, w / d, z));
                }
            }
            MultiplierPair::new(a, Csr::from_triplets(d, d, lt), Csr::from_triplets(d, d, rt))
        })
        .collect();
    Some(pairs)
}

impl FiniteHilbertAlgebra {
    pub fn solve_multipliers(&self) -> Vec<MultiplierPair> {
        self.solve_multipliers_with(SolveMethod::Auto, &HilbertTol::default())
            .expect("auto method always succeeds")
    }

    /// Basis of `{(L, R) : e_i L(e_j) = R(e_i) e_j}`.
    pub fn solve_multipliers_with(&self, method: SolveMethod, tol: &HilbertTol) -> Result<Vec<MultiplierPair>> {
        let d = self.dim;
        match method {
            SolveMethod::Dense => Ok(dense_multipliers(self, tol.nullspace)),
            SolveMethod::Sparse => sparse_multipliers(self).ok_or_else(|| {
                HdqError::StructureError("structure is not monomial; sparse solver unavailable".into())
            }),
            SolveMethod::Auto => {
                if 2 * d * d <= 1024 {
                    Ok(dense_multipliers(self, tol.nullspace))
                } else {
                    Ok(sparse_multipliers(self).unwrap_or_else(|| dense_multipliers(self, tol.nullspace)))
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Commutants

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSubspace {
    pub rows: usize,
    pub cols: usize,
    /// Frobenius-orthonormal.
    pub basis: Vec<CMat>,
}

impl OperatorSubspace {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Basis as columns of vectorized matrices.
    pub fn as_columns(&self) -> CMat {
        let n = self.rows * self.cols;
        let mut m = CMat::zeros(n, self.basis.len());
        for (c, b) in self.basis.iter().enumerate() {
            m.set_column(c, &vec_of(b));
        }
        m
    }

    pub fn from_spanning(rows: usize, cols: usize, mats: &[CMat], rel_tol: f64) -> Self {
        let mut m = CMat::zeros(rows * cols, mats.len());
        for (c, b) in mats.iter().enumerate() {
            m.set_column(c, &vec_of(b));
        }
        let span = column_span(&m, rel_tol);
        let basis = (0..span.ncols())
            .map(|c| unvec(span.column(c).as_slice(), rows, cols))
            .collect();
        Self { rows, cols, basis }
    }

    /// Distance from `m` to the subspace, relative to `‖m‖`.
    pub fn membership_residual(&self, m: &CMat) -> f64 {
        let v = vec_of(m);
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        let cols = self.as_columns();
        let p = &cols * (cols.adjoint() * &v);
        (v - p).norm() / nv
    }

    /// Mutual projection residual between two subspaces.
    pub fn residual_to(&self, other: &Self) -> f64 {
        subspace_residual(&self.as_columns(), &other.as_columns())
    }

    pub fn gram_residual(&self) -> f64 {
        let c = self.as_columns();
        max_abs(&(c.adjoint() * &c - CMat::identity(c.ncols(), c.ncols())))
    }
}

/// Orthonormal basis of `{T : [T, g] = 0 ∀ g ∈ gens ∪ gens*}`.
pub fn commutant(gens: &[CMat], dim: usize) -> Result<OperatorSubspace> {
    commutant_with(gens, dim, 1e-10)
}

pub fn commutant_with(gens: &[CMat], dim: usize, rel_tol: f64) -> Result<OperatorSubspace> {
    for g in gens {
        if g.shape() != (dim, dim) {
            return Err(HdqError::StructureError(format!(
                "generator has shape {:?}, expected {dim}x{dim}",
                g.shape()
            )));
        }
    }
    let n = dim * dim;
    if gens.is_empty() {
        let basis = (0..n)
            .map(|k| {
                let mut m = CMat::zeros(dim, dim);
                m[(k % dim, k / dim)] = ONE;
                m
            })
            .collect();
        return Ok(OperatorSubspace { rows: dim, cols: dim, basis });
    }
    let id = CMat::identity(dim, dim);
    let mut comp = RowCompressor::new(n);
    for g in gens {
        for h in [g.clone(), g.adjoint()] {
            comp.push(kron(&h.transpose(), &id) - kron(&id, &h));
        }
    }
    let ns = nullspace_of(&comp.finish(), rel_tol);
    let basis = (0..ns.ncols()).map(|c| unvec(ns.column(c).as_slice(), dim, dim)).collect();
    Ok(OperatorSubspace { rows: dim, cols: dim, basis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaractReport {
    pub bicommutant_dim: usize,
    pub multiplier_dim: usize,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutantStructureReport {
    pub commutant_dim: usize,
    /// Worst `‖[R_i, λ_x]‖` over blocks and basis `x`.
    pub commutation_residual: f64,
    /// Worst distance of a recovered block from `span ρ(A)`.
    pub right_span_residual: f64,
    pub pass: bool,
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMat::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

impl FiniteHilbertAlgebra {
    /// Image of `L` on `H ⊕ H̄` in orthonormal coordinates.
    fn doubled(l: &CMat, jm: &CMat, jbar: &CMat) -> CMat {
        block_diag(l, &(jbar * l * jm))
    }

    fn doubled_left_gens(b: &Self) -> Vec<CMat> {
        let jm = b.jm();
        let jbar = jm.map(|z| z.conj());
        (0..b.dim)
            .map(|i| Self::doubled(&b.left_op(&b.unit_vector(i)).to_dense(), &jm, &jbar))
            .collect()
    }

    pub fn verify_caract(&self) -> Result<CaractReport> {
        self.verify_caract_with(&HilbertTol::default())
    }

    /// Compares the bicommutant of the doubled left representation with the multiplier span.
    pub fn verify_caract_with(&self, tol: &HilbertTol) -> Result<CaractReport> {
        let (b, c) = self.orthonormalized();
        let ci = inverse(&c).expect("invertible");
        let d2 = 2 * self.dim;
        let gens = Self::doubled_left_gens(&b);
        let comm = commutant_with(&gens, d2, tol.nullspace)?;
        let bic = commutant_with(&comm.basis, d2, tol.nullspace)?;

        let jm = b.jm();
        let jbar = jm.map(|z| z.conj());
        let mults = self.solve_multipliers_with(SolveMethod::Auto, tol)?;
        let images: Vec<CMat> = mults
            .iter()
            .map(|p| Self::doubled(&(&c * p.left_dense() * &ci), &jm, &jbar))
            .collect();
        let span = OperatorSubspace::from_spanning(d2, d2, &images, tol.nullspace);
        let residual = bic.residual_to(&span);
        Ok(CaractReport {
            bicommutant_dim: bic.len(),
            multiplier_dim: span.len(),
            residual,
            pass: residual <= tol.subspace && bic.len() == span.len(),
        })
    }

    pub fn verify_commutant_structure(&self) -> Result<CommutantStructureReport> {
        self.verify_commutant_structure_with(&HilbertTol::default())
    }

    /// Splits each element of the multiplier commutant into blocks and checks each is a right multiplier.
    pub fn verify_commutant_structure_with(&self, tol: &HilbertTol) -> Result<CommutantStructureReport> {
        let (b, _) = self.orthonormalized();
        let d = b.dim;
        let jm = b.jm();
        let jbar = jm.map(|z| z.conj());
        let gens = Self::doubled_left_gens(&b);
        let comm = commutant_with(&gens, 2 * d, tol.nullspace)?;
        let lefts: Vec<CMat> = (0..d).map(|i| b.left_op(&b.unit_vector(i)).to_dense()).collect();
        let rights: Vec<CMat> = (0..d).map(|i| b.right_op(&b.unit_vector(i)).to_dense()).collect();
        let rspan = OperatorSubspace::from_spanning(d, d, &rights, tol.nullspace);
        let mut cres = 0.0f64;
        let mut sres = 0.0f64;
        for t in &comm.basis {
            let s1 = t.view((0, 0), (d, d)).into_owned();
            let s2 = t.view((0, d), (d, d)).into_owned();
            let s3 = t.view((d, 0), (d, d)).into_owned();
            let s4 = t.view((d, d), (d, d)).into_owned();
            let blocks = [s1, &s2 * &jbar, &jm * &s3, &jm * &s4 * &jbar];
            for r in &blocks {
                for l in &lefts {
                    cres = cres.max(max_abs(&(r * l - l * r)));
                }
                sres = sres.max(rspan.membership_residual(r) * frob(r).min(1.0));
            }
        }
        Ok(CommutantStructureReport {
            commutant_dim: comm.len(),
            commutation_residual: cres,
            right_span_residual: sres,
            pass: cres <= tol.subspace && sres <= tol.subspace,
        })
    }
}

// ---------------------------------------------------------------------------
// Natural trace, center

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalTrace {
    /// `τ(x) = Σ t_k x_k` on the span of products.
    pub functional: CVec,
    pub residual: f64,
}

impl NaturalTrace {
    pub fn eval(&self, x: &[C64]) -> C64 {
        self.functional.iter().zip(x).map(|(t, v)| t * v).sum()
    }
}

impl FiniteHilbertAlgebra {
    fn star_product_rows(&self, i: usize) -> CMat {
        let d = self.dim;
        let si: Vec<(usize, C64)> = self.involution.row(i).collect();
        let mut block = CMat::zeros(d, d);
        for j in 0..d {
            let mut out = vec![ZERO; d];
            self.product_sparse(&si, &[(j, ONE)], &mut out);
            for k in 0..d {
                block[(j, k)] = out[k];
            }
        }
        block
    }

    /// Solves `τ(e_i* e_j) = G_ij` in the least-squares sense.
    pub fn natural_trace(&self) -> Result<NaturalTrace> {
        let d = self.dim;
        let mut comp = RowCompressor::new(d + 1);
        for i in 0..d {
            let rows = self.star_product_rows(i);
            let mut aug = CMat::zeros(d, d + 1);
            aug.columns_mut(0, d).copy_from(&rows);
            for j in 0..d {
                aug[(j, d)] = self.gram.get(i, j);
            }
            comp.push(aug);
        }
        let r = comp.finish();
        let rr = r.view((0, 0), (d, d)).into_owned();
        let rhs = r.view((0, d), (d, 1)).into_owned();
        let svd = rr.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let t = svd
            .solve(&rhs, 1e-13 * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| HdqError::StructureError(e.to_string()))?
            .column(0)
            .into_owned();
        let mut residual = 0.0f64;
        for i in 0..d {
            let rows = self.star_product_rows(i);
            let pred = &rows * &t;
            for j in 0..d {
                residual = residual.max((pred[j] - self.gram.get(i, j)).norm());
            }
        }
        if residual > 1e-8 {
            return Err(HdqError::StructureError(format!(
                "no linear functional reproduces the inner product (residual {residual:.3e})"
            )));
        }
        Ok(NaturalTrace { functional: t, residual })
    }

    pub fn natural_trace_check(&self) -> Result<f64> {
        Ok(self.natural_trace()?.residual)
    }

    /// Basis of `{z : λ_z = ρ_z}` as `d × 1` coordinate columns.
    pub fn center(&self) -> OperatorSubspace {
        let d = self.dim;
        let mut comp = RowCompressor::new(d);
        for k in 0..d {
            // rows (k, j): Σ_i z_i (c_ij^k − c_ji^k)
            let mut block = CMat::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let v = self.structure.get(i * d + j, k) - self.structure.get(j * d + i, k);
                    block[(j, i)] += v;
                }
            }
            comp.push(block);
        }
        let ns = nullspace_of(&comp.finish(), 1e-10);
        let basis = (0..ns.ncols()).map(|c| CMat::from_column_slice(d, 1, ns.column(c).as_slice())).collect();
        OperatorSubspace { rows: d, cols: 1, basis }
    }
}

// ---------------------------------------------------------------------------
// Automorphisms

#[derive(Debug, Clone, PartialEq)]
pub struct InnerAutomorphism {
    pub u: CMat,
    pub multiplicativity: f64,
    pub star: f64,
    pub unitarity: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedMultiplier {
    pub pair: MultiplierPair,
    pub trace_a: C64,
    pub trace_b: C64,
    pub trace_residual: f64,
}

impl FiniteHilbertAlgebra {
    fn unitarity_residual(&self, t: &CMat) -> f64 {
        let id = CMat::identity(self.dim, self.dim);
        let ta = self.adjoint_of(t);
        max_abs(&(&ta * t - &id)).max(max_abs(&(t * &ta - &id)))
    }

    /// `U_T = L R†`, checked to be a unitary *-automorphism.
    pub fn inner_automorphism(&self, t: &MultiplierPair, tol: &HilbertTol) -> Result<InnerAutomorphism> {
        let l = t.left_dense();
        let r = t.right_dense();
        for (name, m) in [("left", &l), ("right", &r)] {
            let res = self.unitarity_residual(m);
            if res > tol.unitary {
                return Err(HdqError::NotUnitary(format!("{name} part fails unitarity by {res:.3e}")));
            }
        }
        let u = &l * self.adjoint_of(&r);
        let d = self.dim;
        let img: Vec<Vec<C64>> = (0..d).map(|i| u.column(i).iter().copied().collect()).collect();
        let mut mult = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut lhs = vec![ZERO; d];
                for (k, c) in self.basis_product(i, j) {
                    for m in 0..d {
                        lhs[m] += c * img[k][m];
                    }
                }
                let rhs = self.product(&img[i], &img[j]);
                let e = lhs.iter().zip(&rhs).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
                mult = mult.max(e);
            }
        }
        let mut star = 0.0f64;
        for i in 0..d {
            let es = self.star(&self.unit_vector(i));
            let lhs = &u * CVec::from_vec(es);
            let rhs = self.star(&img[i]);
            let e = lhs.iter().zip(&rhs).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            star = star.max(e);
        }
        let unitarity = self.unitarity_residual(&u);
        let pass = mult.max(star).max(unitarity) <= tol.automorphism;
        Ok(InnerAutomorphism { u, multiplicativity: mult, star, unitarity, pass })
    }

    /// `τ(T)` through `L = λ_z` solved in the least-squares sense.
    pub fn multiplier_trace(&self, t: &MultiplierPair) -> Result<(C64, f64)> {
        let d = self.dim;
        let mut a = CMat::zeros(d * d, d);
        for i in 0..d {
            a.set_column(i, &vec_of(&self.left_op(&self.unit_vector(i)).to_dense()));
        }
        let (z, res) = crate::linalg::least_squares(&a, &vec_of(&t.left_dense()));
        let tr = self.natural_trace()?;
        Ok((tr.eval(z.as_slice()), res))
    }

    /// Transports `T` along a unitary isomorphism `Φ: self → b`.
    pub fn extend_isomorphism(
        &self,
        b: &FiniteHilbertAlgebra,
        phi: &CMat,
        t: &MultiplierPair,
        tol: &HilbertTol,
    ) -> Result<ExtendedMultiplier> {
        let d = self.dim;
        if b.dim != d || phi.shape() != (d, d) {
            return Err(HdqError::NotIsomorphism("dimension mismatch".into()));
        }
        let u = max_abs(&(phi.adjoint() * b.gram_dense() * phi - self.gram_dense()));
        if u > tol.multiplier {
            return Err(HdqError::NotIsomorphism(format!("Φ is not unitary (residual {u:.3e})")));
        }
        let img: Vec<Vec<C64>> = (0..d).map(|i| phi.column(i).iter().copied().collect()).collect();
        let mut mult = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut lhs = vec![ZERO; d];
                for (k, c) in self.basis_product(i, j) {
                    for m in 0..d {
                        lhs[m] += c * img[k][m];
                    }
                }
                let rhs = b.product(&img[i], &img[j]);
                let e = lhs.iter().zip(&rhs).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
                mult = mult.max(e);
            }
        }
        if mult > tol.multiplier {
            return Err(HdqError::NotIsomorphism(format!("Φ is not multiplicative (residual {mult:.3e})")));
        }
        let pinv = inverse(phi).ok_or_else(|| HdqError::NotIsomorphism("Φ is singular".into()))?;
        let l = phi * t.left_dense() * &pinv;
        let r = phi * t.right_dense() * &pinv;
        let pair = MultiplierPair::from_dense(b, &l, &r);
        let (ta, _) = self.multiplier_trace(t)?;
        let (tb, _) = b.multiplier_trace(&pair)?;
        Ok(ExtendedMultiplier { pair, trace_a: ta, trace_b: tb, trace_residual: (ta - tb).norm() })
    }
}

// ---------------------------------------------------------------------------
// Constructions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    DirectSum,
    Tensor,
}

pub fn combine(a: &FiniteHilbertAlgebra, b: &FiniteHilbertAlgebra, mode: CombineMode) -> Result<FiniteHilbertAlgebra> {
    let (da, db) = (a.dim, b.dim);
    match mode {
        CombineMode::DirectSum => {
            let d = da + db;
            let mut st = Vec::new();
            for i in 0..da {
                for j in 0..da {
                    for (k, c) in a.basis_product(i, j) {
                        st.push((i * d + j, k, c));
                    }
                }
            }
            for i in 0..db {
                for j in 0..db {
                    for (k, c) in b.basis_product(i, j) {
                        st.push(((i + da) * d + j + da, k + da, c));
                    }
                }
            }
            let shift = |m: &Csr, off: usize| m.triplets().into_iter().map(move |(r, c, v)| (r + off, c + off, v));
            let s = Csr::from_triplets(d, d, shift(&a.involution, 0).chain(shift(&b.involution, da)).collect());
            let g = Csr::from_triplets(d, d, shift(&a.gram, 0).chain(shift(&b.gram, da)).collect());
            FiniteHilbertAlgebra::new(d, Csr::from_triplets(d * d, d, st), s, g)
        }
        CombineMode::Tensor => {
            let d = da * db;
            let mut st = Vec::new();
            for i1 in 0..da {
                for j1 in 0..da {
                    let p1: Vec<_> = a.basis_product(i1, j1).collect();
                    if p1.is_empty() {
                        continue;
                    }
                    for i2 in 0..db {
                        for j2 in 0..db {
                            for (k2, c2) in b.basis_product(i2, j2) {
                                for &(k1, c1) in &p1 {
                                    let i = i1 * db + i2;
                                    let j = j1 * db + j2;
                                    st.push((i * d + j, k1 * db + k2, c1 * c2));
                                }
                            }
                        }
                    }
                }
            }
            let s = kron(&a.involution.to_dense(), &b.involution.to_dense());
            let g = kron(&a.gram_dense(), &b.gram_dense());
            FiniteHilbertAlgebra::new(d, Csr::from_triplets(d * d, d, st), Csr::from_dense(&s), Csr::from_dense(&g))
        }
    }
}

/// `M_n(ℂ)` with matrix units `E_ab` at index `a·n + b` and `⟨x, y⟩ = tr(x*y)`.
pub fn full_matrix(n: usize) -> FiniteHilbertAlgebra {
    assert!(n >= 1);
    let d = n * n;
    let mut st = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                st.push(((a * n + b) * d + b * n + c, a * n + c, ONE));
            }
        }
    }
    let s = Csr::from_triplets(d, d, (0..n).flat_map(|a| (0..n).map(move |b| (a * n + b, b * n + a, ONE))).collect());
    FiniteHilbertAlgebra::new(d, Csr::from_triplets(d * d, d, st), s, Csr::identity(d)).expect("valid")
}

/// Group algebra with `⟨g, h⟩ = δ_gh` and `g* = g⁻¹`.
pub fn group_algebra(table: &[Vec<usize>]) -> Result<FiniteHilbertAlgebra> {
    let n = table.len();
    if n == 0 {
        return Err(HdqError::ParseError("empty multiplication table".into()));
    }
    for (r, row) in table.iter().enumerate() {
        if row.len() != n {
            return Err(HdqError::ParseError(format!("row {r} has {} entries, expected {n}", row.len())));
        }
        if let Some(&bad) = row.iter().find(|&&v| v >= n) {
            return Err(HdqError::ParseError(format!("entry {bad} in row {r} out of range")));
        }
    }
    let e = (0..n)
        .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
        .ok_or_else(|| HdqError::ParseError("no identity element".into()))?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if table[table[a][b]][c] != table[a][table[b][c]] {
                    return Err(HdqError::ParseError(format!("not associative at ({a},{b},{c})")));
                }
            }
        }
    }
    let mut inv = vec![0; n];
    for g in 0..n {
        inv[g] = (0..n)
            .find(|&h| table[g][h] == e && table[h][g] == e)
            .ok_or_else(|| HdqError::ParseError(format!("element {g} has no inverse")))?;
    }
    let st = (0..n)
        .flat_map(|g| (0..n).map(move |h| (g, h)))
        .map(|(g, h)| (g * n + h, table[g][h], ONE))
        .collect();
    let s = Csr::from_triplets(n, n, (0..n).map(|g| (g, inv[g], ONE)).collect());
    FiniteHilbertAlgebra::new(n, Csr::from_triplets(n * n, n, st), s, Csr::identity(n))
}

pub fn cyclic_table(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Permutations of three letters in lexicographic order; `(στ)(k) = σ(τ(k))`.
pub fn s3_table() -> Vec<Vec<usize>> {
    let perms: Vec<[usize; 3]> =
        vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    perms
        .iter()
        .map(|s| perms.iter().map(|t| index([s[t[0]], s[t[1]], s[t[2]]])).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub structure: Vec<[f64; 2]>,
    pub involution: Vec<[f64; 2]>,
    pub gram: Vec<[f64; 2]>,
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpairs(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

impl FiniteHilbertAlgebra {
    pub fn to_file(&self) -> AlgebraFile {
        let d = self.dim;
        let mut c = vec![ZERO; d * d * d];
        for n in 0..d * d {
            for (k, v) in self.structure.row(n) {
                c[n * d + k] = v;
            }
        }
        let rowmajor = |m: &CMat| -> Vec<C64> {
            (0..d).flat_map(|r| (0..d).map(move |cc| (r, cc))).map(|(r, cc)| m[(r, cc)]).collect()
        };
        AlgebraFile {
            dim: d,
            structure: pairs(&c),
            involution: pairs(&rowmajor(&self.involution.to_dense())),
            gram: pairs(&rowmajor(&self.gram_dense())),
        }
    }

    pub fn from_file(f: &AlgebraFile) -> Result<Self> {
        let d = f.dim;
        if f.involution.len() != d * d || f.gram.len() != d * d {
            return Err(HdqError::ParseError("involution and gram need d² entries".into()));
        }
        if f.structure.len() != d * d * d {
            return Err(HdqError::ParseError("structure needs d³ entries".into()));
        }
        let s = CMat::from_row_slice(d, d, &unpairs(&f.involution));
        let g = CMat::from_row_slice(d, d, &unpairs(&f.gram));
        Self::from_dense(d, &unpairs(&f.structure), &s, &g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: AlgebraFile = serde_json::from_str(s).map_err(|e| HdqError::ParseError(e.to_string()))?;
        Self::from_file(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExampleKind {
    FullMatrix { n: usize },
    GroupAlgebra { table: Vec<Vec<usize>> },
    FromFile { path: String },
}

pub fn example_algebra(kind: &ExampleKind) -> Result<FiniteHilbertAlgebra> {
    match kind {
        ExampleKind::FullMatrix { n } => {
            if *n == 0 {
                return Err(HdqError::ParseError("matrix size must be positive".into()));
            }
            Ok(full_matrix(*n))
        }
        ExampleKind::GroupAlgebra { table } => group_algebra(table),
        ExampleKind::FromFile { path } => {
            let s = std::fs::read_to_string(path)?;
            FiniteHilbertAlgebra::from_json(&s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn scalar_algebra_is_exact() {
        let a = full_matrix(1);
        let r = a.validate_axioms().unwrap();
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn matrix_units_multiply() {
        let a = full_matrix(2);
        // E_01 E_10 = E_00
        let p = a.product(&a.unit_vector(1), &a.unit_vector(2));
        assert_eq!(p, a.unit_vector(0));
    }

    #[test]
    fn s3_table_is_a_group() {
        let a = group_algebra(&s3_table()).unwrap();
        assert_eq!(a.dim(), 6);
        assert!(a.validate_axioms().unwrap().passes(1e-12));
    }

    #[test]
    fn bad_gram_rejected() {
        let g = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        let a = group_algebra(&cyclic_table(2)).unwrap();
        assert!(matches!(a.with_gram(&g), Err(HdqError::InvalidGram(_))));
        let g = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        assert!(matches!(a.with_gram(&g), Err(HdqError::InvalidGram(_))));
    }

    #[test]
    fn orthonormalized_keeps_axioms() {
        let a = group_algebra(&cyclic_table(3)).unwrap();
        let g = CMat::from_fn(3, 3, |i, j| if i == j { c(2.0) } else { ZERO });
        let scaled = a.with_gram(&g).unwrap();
        let (b, _) = scaled.orthonormalized();
        assert!(b.gram().is_identity());
        assert_eq!(b.solve_multipliers().len(), 3);
    }

    #[test]
    fn sparse_and_dense_solvers_agree_on_dimension() {
        let a = group_algebra(&s3_table()).unwrap();
        let tol = HilbertTol::default();
        let dn = a.solve_multipliers_with(SolveMethod::Dense, &tol).unwrap();
        let sp = a.solve_multipliers_with(SolveMethod::Sparse, &tol).unwrap();
        assert_eq!(dn.len(), sp.len());
        assert!(sp.iter().all(|p| p.defect < 1e-12));
    }

    #[test]
    fn sparse_solver_rejects_dense_structure() {
        let a = full_matrix(2);
        let (b, _) = a
            .with_gram(&CMat::from_fn(4, 4, |i, j| if i == j { c(1.0 + i as f64) } else { ZERO }))
            .unwrap()
            .orthonormalized();
        // still monomial after diagonal rescaling
        assert!(b.solve_multipliers_with(SolveMethod::Sparse, &HilbertTol::default()).is_ok());
        let t = combine(&full_matrix(2), &group_algebra(&cyclic_table(2)).unwrap(), CombineMode::Tensor).unwrap();
        assert_eq!(t.dim(), 8);
    }

    #[test]
    fn json_round_trip() {
        let a = group_algebra(&s3_table()).unwrap();
        let b = FiniteHilbertAlgebra::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(FiniteHilbertAlgebra::from_json("{\"dim\":2}"), Err(HdqError::ParseError(_))));
    }
}
