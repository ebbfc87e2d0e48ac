//! Complex Clifford algebras on `2m` anticommuting self-adjoint generators, `ξ_i² = 1`.
//!
//! Basis blades `ξ_I` are indexed by bitmask; generator `ξ_{k+1}` is bit `k`.

use serde::{Deserialize, Serialize};

use crate::error::{HdqError, Result};
use crate::hilbert::{FiniteHilbertAlgebra, HilbertTol, SolveMethod};
use crate::linalg::{rank, CMat, C64, ONE, ZERO};
use crate::sparse::Csr;

pub const MAX_PAIRS: usize = 6;
pub const MAX_MULTIPLIER_PAIRS: usize = 4;

/// Parity of the transpositions that sort `ξ_I ξ_J` into ascending order.
pub fn reorder_sign(a: u32, b: u32) -> i32 {
    let mut a = a >> 1;
    let mut swaps = 0;
    while a != 0 {
        swaps += (a & b).count_ones();
        a >>= 1;
    }
    if swaps & 1 == 0 {
        1
    } else {
        -1
    }
}

/// `(−1)^{|I|(|I|−1)/2}`.
pub fn reversion_sign(blade: u32) -> i32 {
    let k = blade.count_ones();
    if (k * k.saturating_sub(1) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordElement {
    pub m: usize,
    pub coeffs: Vec<C64>,
}

impl CliffordElement {
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_PAIRS, "at most {MAX_PAIRS} generator pairs");
        Self { m, coeffs: vec![ZERO; 1 << (2 * m)] }
    }

    pub fn one(m: usize) -> Self {
        Self::blade(m, 0)
    }

    pub fn blade(m: usize, mask: u32) -> Self {
        let mut x = Self::zero(m);
        x.coeffs[mask as usize] = ONE;
        x
    }

    /// `ξ_k` for `k` in `1..=2m`.
    pub fn generator(m: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= 2 * m);
        Self::blade(m, 1 << (k - 1))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: self.m, coeffs: self.coeffs.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.m, other.m);
        Self { m: self.m, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }
}

pub fn clifford_product(x: &CliffordElement, y: &CliffordElement) -> Result<CliffordElement> {
    if x.m != y.m {
        return Err(HdqError::SpecMismatch(format!("Cl({}) vs Cl({})", 2 * x.m, 2 * y.m)));
    }
    let mut out = CliffordElement::zero(x.m);
    for (i, &a) in x.coeffs.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        for (j, &b) in y.coeffs.iter().enumerate() {
            if b == ZERO {
                continue;
            }
            let s = reorder_sign(i as u32, j as u32) as f64;
            out.coeffs[i ^ j] += a * b * s;
        }
    }
    Ok(out)
}

/// `(x*, τ(x))` with `τ(x) = x_∅`.
pub fn involution_and_trace(x: &CliffordElement) -> (CliffordElement, C64) {
    let coeffs = x
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, z)| z.conj() * reversion_sign(i as u32) as f64)
        .collect();
    (CliffordElement { m: x.m, coeffs }, x.coeffs[0])
}

pub fn inner(x: &CliffordElement, y: &CliffordElement) -> Result<C64> {
    let (xs, _) = involution_and_trace(x);
    Ok(clifford_product(&xs, y)?.coeffs[0])
}

/// Structure constants, involution and `⟨x, y⟩ = τ(x*y)` in the blade basis.
pub fn as_hilbert_algebra(m: usize) -> Result<FiniteHilbertAlgebra> {
    if m > MAX_PAIRS {
        return Err(HdqError::StructureError(format!("m = {m} exceeds the cap {MAX_PAIRS}")));
    }
    let d = 1usize << (2 * m);
    let mut idx = Vec::with_capacity(d * d);
    let mut val = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            idx.push(i ^ j);
            val.push(C64::new(reorder_sign(i as u32, j as u32) as f64, 0.0));
        }
    }
    let structure = Csr { rows: d * d, cols: d, ptr: (0..=d * d).collect(), idx, val };
    let involution = Csr {
        rows: d,
        cols: d,
        ptr: (0..=d).collect(),
        idx: (0..d).collect(),
        val: (0..d).map(|i| C64::new(reversion_sign(i as u32) as f64, 0.0)).collect(),
    };
    // τ(ξ_I* ξ_J) = δ_IJ · reversion_sign(I) · reorder_sign(I, I)
    let gram = Csr {
        rows: d,
        cols: d,
        ptr: (0..=d).collect(),
        idx: (0..d).collect(),
        val: (0..d)
            .map(|i| C64::new((reversion_sign(i as u32) * reorder_sign(i as u32, i as u32)) as f64, 0.0))
            .collect(),
    };
    FiniteHilbertAlgebra::new(d, structure, involution, gram)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureChecks {
    pub m: usize,
    pub anticommutation: bool,
    pub associativity: bool,
    pub involution_antimultiplicative: bool,
    pub gram_identity: bool,
}

impl StructureChecks {
    pub fn pass(&self) -> bool {
        self.anticommutation && self.associativity && self.involution_antimultiplicative && self.gram_identity
    }
}

/// Integer-exact checks of the sign rule. Associativity is exhaustive over blade triples.
pub fn structure_checks(m: usize) -> StructureChecks {
    let n = 2 * m;
    let d = 1u32 << n;
    let mut anti = true;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (1u32 << i, 1u32 << j);
            // ξ_iξ_j + ξ_jξ_i lands on blade a^b with coefficient s(a,b) + s(b,a)
            let coeff = reorder_sign(a, b) + reorder_sign(b, a);
            anti &= coeff == if i == j { 2 } else { 0 };
        }
    }
    let mut assoc = true;
    let mut invol = true;
    for i in 0..d {
        for j in 0..d {
            let sij = reorder_sign(i, j);
            // (ξ_I ξ_J)* = ξ_J* ξ_I*
            let lhs = sij * reversion_sign(i ^ j);
            let rhs = reversion_sign(j) * reversion_sign(i) * reorder_sign(j, i);
            invol &= lhs == rhs;
            for k in 0..d {
                let l = sij * reorder_sign(i ^ j, k);
                let r = reorder_sign(j, k) * reorder_sign(i, j ^ k);
                assoc &= l == r;
            }
        }
    }
    let gram = (0..d).all(|i| reversion_sign(i) * reorder_sign(i, i) == 1);
    StructureChecks { m, anticommutation: anti, associativity: assoc, involution_antimultiplicative: invol, gram_identity: gram }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitalMultiplierReport {
    pub m: usize,
    pub solution_dim: usize,
    pub expected_dim: usize,
    /// Rank of the map `(L, R) ↦ L(1)` on the solved basis.
    pub image_rank: usize,
    /// Worst `‖L − λ_{L(1)}‖`, `‖R − ρ_{R(1)}‖` and `|L(1) − R(1)|` over the basis.
    pub residual: f64,
    pub max_defect: f64,
    pub pass: bool,
}

pub fn verify_unital_multipliers(m: usize) -> Result<UnitalMultiplierReport> {
    if m > MAX_MULTIPLIER_PAIRS {
        return Err(HdqError::StructureError(format!(
            "multiplier verification is capped at m = {MAX_MULTIPLIER_PAIRS}"
        )));
    }
    let a = as_hilbert_algebra(m)?;
    let d = a.dim();
    let pairs = a.solve_multipliers_with(SolveMethod::Auto, &HilbertTol::default())?;
    let mut img = CMat::zeros(d, pairs.len());
    let mut residual = 0.0f64;
    let mut max_defect = 0.0f64;
    for (c, p) in pairs.iter().enumerate() {
        max_defect = max_defect.max(p.defect);
        let lt = p.left.transpose();
        let rt = p.right.transpose();
        let mut l1 = vec![ZERO; d];
        let mut r1 = vec![ZERO; d];
        for (k, v) in lt.row(0) {
            l1[k] = v;
        }
        for (k, v) in rt.row(0) {
            r1[k] = v;
        }
        for k in 0..d {
            img[(k, c)] = l1[k];
            residual = residual.max((l1[k] - r1[k]).norm());
        }
        residual = residual.max(p.left.max_abs_diff(&a.left_op(&l1)));
        residual = residual.max(p.right.max_abs_diff(&a.right_op(&r1)));
    }
    let image_rank = rank(&img, 1e-10);
    let expected_dim = 1usize << (2 * m);
    Ok(UnitalMultiplierReport {
        m,
        solution_dim: pairs.len(),
        expected_dim,
        image_rank,
        residual,
        max_defect,
        pass: pairs.len() == expected_dim && image_rank == expected_dim && residual <= 1e-10 && max_defect <= 1e-10,
    })
}
