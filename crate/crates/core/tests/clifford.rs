use hdqkit_core::clifford::*;
use hdqkit_core::linalg::{C64, ONE};
use proptest::prelude::*;

fn elem(m: usize) -> impl Strategy<Value = CliffordElement> {
    let d = 1usize << (2 * m);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_map(move |v| CliffordElement { m, coeffs: v.into_iter().map(|(a, b)| C64::new(a, b)).collect() })
}

#[test]
fn generator_relations() {
    let m = 2;
    let x1 = CliffordElement::generator(m, 1);
    let x2 = CliffordElement::generator(m, 2);
    assert_eq!(clifford_product(&x1, &x1).unwrap(), CliffordElement::one(m));
    let a = clifford_product(&x1, &x2).unwrap();
    let b = clifford_product(&x2, &x1).unwrap();
    assert_eq!(a, b.scale(C64::new(-1.0, 0.0)));
    for i in 1..=4 {
        for j in 1..=4 {
            let gi = CliffordElement::generator(m, i);
            let gj = CliffordElement::generator(m, j);
            let s = clifford_product(&gi, &gj).unwrap().add(&clifford_product(&gj, &gi).unwrap());
            let expect = if i == j { CliffordElement::one(m).scale(C64::new(2.0, 0.0)) } else { CliffordElement::zero(m) };
            assert_eq!(s, expect);
        }
    }
}

#[test]
fn mismatched_sizes_rejected() {
    let r = clifford_product(&CliffordElement::one(1), &CliffordElement::one(2));
    assert!(matches!(r, Err(hdqkit_core::HdqError::SpecMismatch(_))));
}

#[test]
fn involution_and_trace_examples() {
    let m = 1;
    let x12 = clifford_product(&CliffordElement::generator(m, 1), &CliffordElement::generator(m, 2)).unwrap();
    let (s, _) = involution_and_trace(&x12);
    assert_eq!(s, x12.scale(C64::new(-1.0, 0.0)));
    assert_eq!(involution_and_trace(&CliffordElement::one(m)).1, ONE);
    for mask in 1..4u32 {
        assert_eq!(involution_and_trace(&CliffordElement::blade(m, mask)).1, C64::new(0.0, 0.0));
    }
}

#[test]
fn exact_structure_checks() {
    for m in 0..=4 {
        let c = structure_checks(m);
        assert!(c.pass(), "{c:?}");
    }
}

#[test]
fn exported_algebras_validate() {
    for m in 0..=3 {
        let a = as_hilbert_algebra(m).unwrap();
        assert_eq!(a.dim(), 1 << (2 * m));
        let r = a.validate_axioms().unwrap();
        assert!(r.passes(1e-10), "m = {m}: {r:?}");
        assert_eq!(r.associativity, 0.0);
        assert!(a.gram().is_identity());
    }
}

#[test]
fn export_of_largest_size_builds() {
    let a = as_hilbert_algebra(5).unwrap();
    assert_eq!(a.dim(), 1024);
    assert!(as_hilbert_algebra(MAX_PAIRS + 1).is_err());
}

#[test]
fn unital_multipliers() {
    for m in 1..=4 {
        let r = verify_unital_multipliers(m).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.solution_dim, 1 << (2 * m));
    }
    assert!(verify_unital_multipliers(5).is_err());
}

#[test]
fn cl2_bicommutant_and_blocks() {
    let a = as_hilbert_algebra(1).unwrap();
    assert!(a.verify_caract().unwrap().pass);
    assert!(a.verify_commutant_structure().unwrap().pass);
    assert!(a.natural_trace_check().unwrap() <= 1e-10);
}

proptest! {
    #[test]
    fn trace_is_tracial(x in elem(2), y in elem(2)) {
        let a = clifford_product(&x, &y).unwrap().coeffs[0];
        let b = clifford_product(&y, &x).unwrap().coeffs[0];
        prop_assert!((a - b).norm() <= 1e-12);
    }

    #[test]
    fn norm_matches_inner(x in elem(2)) {
        let n2 = inner(&x, &x).unwrap();
        prop_assert!((n2.re - x.norm().powi(2)).abs() <= 1e-12);
        prop_assert!(n2.im.abs() <= 1e-12);
    }

    #[test]
    fn unit_is_neutral(x in elem(1)) {
        prop_assert_eq!(clifford_product(&x, &CliffordElement::one(1)).unwrap(), x.clone());
        prop_assert_eq!(clifford_product(&CliffordElement::one(1), &x).unwrap(), x);
    }

    #[test]
    fn star_is_antimultiplicative(x in elem(1), y in elem(1)) {
        let (xy_s, _) = involution_and_trace(&clifford_product(&x, &y).unwrap());
        let (xs, _) = involution_and_trace(&x);
        let (ys, _) = involution_and_trace(&y);
        let rhs = clifford_product(&ys, &xs).unwrap();
        for (p, q) in xy_s.coeffs.iter().zip(&rhs.coeffs) {
            prop_assert!((p - q).norm() <= 1e-12);
        }
    }
}
