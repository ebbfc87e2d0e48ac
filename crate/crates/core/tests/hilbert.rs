use hdqkit_core::hilbert::*;
use hdqkit_core::linalg::{max_abs, CMat, C64, ONE, ZERO};
use proptest::prelude::*;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn m2() -> FiniteHilbertAlgebra {
    full_matrix(2)
}

fn z2() -> FiniteHilbertAlgebra {
    group_algebra(&cyclic_table(2)).unwrap()
}

fn shipped() -> Vec<(&'static str, FiniteHilbertAlgebra)> {
    let c = full_matrix(1);
    vec![
        ("C", c.clone()),
        ("M2", m2()),
        ("Z2", z2()),
        ("Z3", group_algebra(&cyclic_table(3)).unwrap()),
        ("S3", group_algebra(&s3_table()).unwrap()),
        ("M2+C", combine(&m2(), &c, CombineMode::DirectSum).unwrap()),
    ]
}

#[test]
fn axioms_pass_on_shipped_examples() {
    for (name, a) in shipped() {
        let r = a.validate_axioms().unwrap();
        assert!(r.passes(1e-10), "{name}: {r:?}");
        assert!(r.associativity <= 1e-12, "{name}");
    }
}

#[test]
fn scalar_algebra_residuals_vanish() {
    let r = full_matrix(1).validate_axioms().unwrap();
    assert_eq!((r.associativity, r.axiom1, r.axiom2, r.axiom4()), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn perturbed_gram_breaks_axiom_two() {
    let g = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(2.0), re(1.0), re(1.0)]));
    let a = m2().with_gram(&g).unwrap();
    let r = a.validate_axioms().unwrap();
    assert!(r.axiom2 > 1e-10, "{r:?}");
    assert!(!r.passes(1e-10));
}

#[test]
fn unit_acts_as_identity() {
    let a = m2();
    let unit = vec![ONE, ZERO, ZERO, ONE];
    for side in [Side::Left, Side::Right] {
        let l = a.regular_representation(&unit, side);
        assert!(max_abs(&(l - CMat::identity(4, 4))) == 0.0);
    }
}

#[test]
fn commutative_left_equals_right() {
    let a = z2();
    let x = vec![C64::new(0.3, -1.2), C64::new(2.0, 0.5)];
    let l = a.regular_representation(&x, Side::Left);
    let r = a.regular_representation(&x, Side::Right);
    assert!(max_abs(&(l - r)) == 0.0);
}

fn cvec(d: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b)), d)
}

proptest! {
    #[test]
    fn left_is_hom_right_is_antihom(x in cvec(4), y in cvec(4)) {
        let a = m2();
        let xy = a.product(&x, &y);
        let lx = a.regular_representation(&x, Side::Left);
        let ly = a.regular_representation(&y, Side::Left);
        let rx = a.regular_representation(&x, Side::Right);
        let ry = a.regular_representation(&y, Side::Right);
        prop_assert!(max_abs(&(a.regular_representation(&xy, Side::Left) - &lx * &ly)) < 1e-12);
        prop_assert!(max_abs(&(a.regular_representation(&xy, Side::Right) - &ry * &rx)) < 1e-12);
    }

    #[test]
    fn tensor_gram_factorizes(a1 in cvec(4), a2 in cvec(4), b1 in cvec(2), b2 in cvec(2)) {
        let a = m2();
        let b = z2();
        let t = combine(&a, &b, CombineMode::Tensor).unwrap();
        let tens = |u: &[C64], v: &[C64]| -> Vec<C64> {
            u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect()
        };
        let lhs = t.inner(&tens(&a1, &b1), &tens(&a2, &b2));
        let rhs = a.inner(&a1, &a2) * b.inner(&b1, &b2);
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn commutant_contains_generators_in_bicommutant(seed in 0u64..200) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let mut g = CMat::zeros(n, n);
        // block-structured generator so the commutant is nontrivial
        for i in 0..2 { for j in 0..2 { g[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)); } }
        g[(2, 2)] = re(rng.gen_range(-1.0..1.0));
        let gens = vec![g.clone()];
        let c1 = commutant(&gens, n).unwrap();
        let c2 = commutant(&c1.basis, n).unwrap();
        let c3 = commutant(&c2.basis, n).unwrap();
        prop_assert!(c1.residual_to(&c3) < 1e-9);
        prop_assert!(c2.membership_residual(&g) < 1e-9);
        prop_assert!(c1.gram_residual() < 1e-12);
    }
}

#[test]
fn j_intertwines_left_and_right() {
    for (name, a) in shipped() {
        assert!(a.j_intertwining_residual() <= 1e-10, "{name}");
    }
}

#[test]
fn multiplier_dimensions() {
    assert_eq!(m2().solve_multipliers().len(), 4);
    assert_eq!(full_matrix(1).solve_multipliers().len(), 1);
    assert_eq!(z2().solve_multipliers().len(), 2);
    for (name, a) in shipped() {
        for p in a.solve_multipliers() {
            assert!(p.defect <= 1e-10, "{name}: {}", p.defect);
        }
    }
}

#[test]
fn unital_multipliers_are_regular_pairs() {
    for (name, a) in shipped() {
        let d = a.dim();
        let mults = a.solve_multipliers();
        assert_eq!(mults.len(), d, "{name}");
        let regular: Vec<CMat> = (0..d)
            .map(|i| {
                let e = a.unit_vector(i);
                stack(&a.regular_representation(&e, Side::Left), &a.regular_representation(&e, Side::Right))
            })
            .collect();
        let span = OperatorSubspace::from_spanning(2 * d, d, &regular, 1e-10);
        for p in &mults {
            assert!(span.membership_residual(&stack(&p.left_dense(), &p.right_dense())) < 1e-10, "{name}");
        }
    }
}

fn stack(a: &CMat, b: &CMat) -> CMat {
    let d = a.nrows();
    let mut m = CMat::zeros(2 * d, d);
    m.rows_mut(0, d).copy_from(a);
    m.rows_mut(d, d).copy_from(b);
    m
}

#[test]
fn right_part_is_conjugated_left_adjoint() {
    // R = J L* J in coordinates for an orthonormal basis
    for (name, a) in shipped() {
        let jm = a.jm();
        let jbar = jm.map(|z| z.conj());
        for p in a.solve_multipliers() {
            let l = p.left_dense();
            let lstar = a.adjoint_of(&l);
            let r = &jm * lstar.map(|z| z.conj()) * &jbar;
            assert!(max_abs(&(r - p.right_dense())) < 1e-10, "{name}");
        }
    }
}

#[test]
fn commutant_examples() {
    let units: Vec<CMat> = (0..4)
        .map(|k| {
            let mut m = CMat::zeros(2, 2);
            m[(k / 2, k % 2)] = ONE;
            m
        })
        .collect();
    assert_eq!(commutant(&units, 2).unwrap().len(), 1);
    assert_eq!(commutant(&[], 2).unwrap().len(), 4);

    let a = m2();
    let lefts: Vec<CMat> = (0..4).map(|i| a.regular_representation(&a.unit_vector(i), Side::Left)).collect();
    let rights: Vec<CMat> = (0..4).map(|i| a.regular_representation(&a.unit_vector(i), Side::Right)).collect();
    let comm = commutant(&lefts, 4).unwrap();
    assert_eq!(comm.len(), 4);
    let rspan = OperatorSubspace::from_spanning(4, 4, &rights, 1e-10);
    assert!(comm.residual_to(&rspan) < 1e-10);
    assert!(comm.gram_residual() < 1e-12);
}

#[test]
fn bicommutant_equals_multipliers() {
    let cases = [
        ("M2", m2(), 4),
        ("Z3", group_algebra(&cyclic_table(3)).unwrap(), 3),
        ("S3", group_algebra(&s3_table()).unwrap(), 6),
        ("C", full_matrix(1), 1),
        ("Z2", z2(), 2),
    ];
    for (name, a, dim) in cases {
        let r = a.verify_caract().unwrap();
        assert!(r.pass, "{name}: {r:?}");
        assert_eq!(r.bicommutant_dim, dim, "{name}");
        assert_eq!(r.multiplier_dim, dim, "{name}");
    }
}

#[test]
fn bicommutant_with_nonorthonormal_gram() {
    let g = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(2.0), re(2.0), re(2.0)]));
    let a = group_algebra(&cyclic_table(3)).unwrap().with_gram(&g).unwrap();
    assert!(a.validate_axioms().unwrap().passes(1e-10));
    assert!(a.verify_caract().unwrap().pass);
}

#[test]
fn commutant_block_form() {
    for (name, a) in [("M2", m2()), ("C", full_matrix(1)), ("Z2", z2()), ("S3", group_algebra(&s3_table()).unwrap())] {
        let r = a.verify_commutant_structure().unwrap();
        assert!(r.pass, "{name}: {r:?}");
    }
}

#[test]
fn natural_trace_reproduces_inner_product() {
    for (name, a) in shipped() {
        let r = a.natural_trace_check().unwrap();
        assert!(r <= 1e-10, "{name}: {r}");
    }
    // matrix trace on M2
    let t = m2().natural_trace().unwrap();
    let expect = [ONE, ZERO, ZERO, ONE];
    for (k, e) in expect.iter().enumerate() {
        assert!((t.functional[k] - e).norm() < 1e-12);
    }
}

#[test]
fn natural_trace_fails_without_hilbert_structure() {
    let g = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![re(1.0), re(2.0), re(1.0), re(1.0)]));
    let a = m2().with_gram(&g).unwrap();
    assert!(matches!(a.natural_trace_check(), Err(hdqkit_core::HdqError::StructureError(_))));
}

#[test]
fn center_dimensions() {
    assert_eq!(m2().center().len(), 1);
    assert_eq!(z2().center().len(), 2);
    let sum = combine(&m2(), &full_matrix(1), CombineMode::DirectSum).unwrap();
    assert_eq!(sum.center().len(), 2);
    assert_eq!(group_algebra(&s3_table()).unwrap().center().len(), 3);
}

#[test]
fn combine_examples() {
    let c = full_matrix(1);
    let s = combine(&c, &c, CombineMode::DirectSum).unwrap();
    assert_eq!(s.dim(), 2);
    assert_eq!(s.center().len(), 2);
    assert_eq!(s.solve_multipliers().len(), 2);
    let t = combine(&m2(), &m2(), CombineMode::Tensor).unwrap();
    assert_eq!(t.dim(), 16);
    assert!(t.validate_axioms().unwrap().passes(1e-10));
}

#[test]
fn right_annihilator_is_trivial() {
    for (name, a) in shipped() {
        assert_eq!(a.right_annihilator().ncols(), 0, "{name}");
    }
}

fn unitary_2x2() -> CMat {
    let (c, s) = (0.6f64, 0.8f64);
    let ph = C64::from_polar(1.0, 0.7);
    CMat::from_row_slice(2, 2, &[re(c), -re(s) * ph.conj(), re(s) * ph, re(c)])
}

fn as_coords(m: &CMat) -> Vec<C64> {
    vec![m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

fn from_coords(v: &[C64]) -> CMat {
    CMat::from_row_slice(2, 2, v)
}

#[test]
fn inner_automorphism_identity_pair() {
    let a = m2();
    let r = a.inner_automorphism(&MultiplierPair::identity(&a), &HilbertTol::default()).unwrap();
    assert!(max_abs(&(r.u - CMat::identity(4, 4))) < 1e-14);
    assert!(r.pass);
}

#[test]
fn inner_automorphism_is_conjugation() {
    let a = m2();
    let u = unitary_2x2();
    let t = MultiplierPair::regular(&a, &as_coords(&u));
    let r = a.inner_automorphism(&t, &HilbertTol::default()).unwrap();
    assert!(r.pass, "{r:?}");
    for i in 0..4 {
        let x = from_coords(&a.unit_vector(i));
        let expect = as_coords(&(&u * x * u.adjoint()));
        let got: Vec<C64> = r.u.column(i).iter().copied().collect();
        for k in 0..4 {
            assert!((got[k] - expect[k]).norm() < 1e-12);
        }
    }
}

#[test]
fn involutive_pair_squares_to_identity() {
    let a = m2();
    let sigma = vec![ZERO, ONE, ONE, ZERO];
    let t = MultiplierPair::regular(&a, &sigma);
    let r = a.inner_automorphism(&t, &HilbertTol::default()).unwrap();
    assert!(max_abs(&(&r.u * &r.u - CMat::identity(4, 4))) < 1e-12);
}

#[test]
fn non_unitary_pair_rejected() {
    let a = m2();
    let t = MultiplierPair::regular(&a, &[re(2.0), ZERO, ZERO, ONE]);
    assert!(matches!(
        a.inner_automorphism(&t, &HilbertTol::default()),
        Err(hdqkit_core::HdqError::NotUnitary(_))
    ));
}

#[test]
fn extend_identity_keeps_pair() {
    let a = m2();
    let t = MultiplierPair::regular(&a, &[re(1.0), re(2.0), C64::new(0.0, 1.0), re(-1.0)]);
    let e = a.extend_isomorphism(&a, &CMat::identity(4, 4), &t, &HilbertTol::default()).unwrap();
    assert!(max_abs(&(e.pair.left_dense() - t.left_dense())) < 1e-14);
    assert!(e.pair.defect <= 1e-9);
    assert!(e.trace_residual <= 1e-9);
}

#[test]
fn extend_along_permutation() {
    let a = z2();
    let phi = CMat::identity(2, 2); // only automorphism of Z/2 fixing the unit
    let t = MultiplierPair::regular(&a, &[re(0.5), re(1.5)]);
    let e = a.extend_isomorphism(&a, &phi, &t, &HilbertTol::default()).unwrap();
    assert!(e.trace_residual <= 1e-9);
    // relabelled copy: basis order swapped
    let swapped = group_algebra(&[vec![1, 0], vec![0, 1]]).unwrap();
    let p = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let e = a.extend_isomorphism(&swapped, &p, &t, &HilbertTol::default()).unwrap();
    assert!(e.pair.defect <= 1e-9);
    assert!(e.trace_residual <= 1e-9);
    assert!(max_abs(&(e.pair.left_dense() - &p * t.left_dense() * &p)) < 1e-14);
}

#[test]
fn extend_along_conjugation_preserves_trace() {
    let a = m2();
    let u = unitary_2x2();
    let inner = a.inner_automorphism(&MultiplierPair::regular(&a, &as_coords(&u)), &HilbertTol::default()).unwrap();
    let t = MultiplierPair::regular(&a, &[re(3.0), re(-1.0), C64::new(0.2, 0.4), re(0.5)]);
    let e = a.extend_isomorphism(&a, &inner.u, &t, &HilbertTol::default()).unwrap();
    assert!(e.pair.defect <= 1e-9);
    assert!(e.trace_residual <= 1e-9, "{}", e.trace_residual);
    assert!((e.trace_a - re(3.5)).norm() < 1e-10);
}

#[test]
fn non_multiplicative_map_rejected() {
    let a = m2();
    let p = CMat::from_row_slice(4, 4, &[
        ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE,
    ]);
    // transpose is an anti-automorphism, not an automorphism
    let t = MultiplierPair::identity(&a);
    assert!(matches!(
        a.extend_isomorphism(&a, &p, &t, &HilbertTol::default()),
        Err(hdqkit_core::HdqError::NotIsomorphism(_))
    ));
}

#[test]
fn malformed_tables_rejected() {
    assert!(group_algebra(&[vec![0, 1], vec![1]]).is_err());
    assert!(group_algebra(&[vec![0, 2], vec![1, 0]]).is_err());
    assert!(group_algebra(&[vec![0, 0], vec![0, 0]]).is_err());
    assert!(example_algebra(&ExampleKind::FullMatrix { n: 0 }).is_err());
}

#[test]
fn example_kinds() {
    assert_eq!(example_algebra(&ExampleKind::FullMatrix { n: 1 }).unwrap().dim(), 1);
    let z = example_algebra(&ExampleKind::GroupAlgebra { table: cyclic_table(2) }).unwrap();
    assert_eq!(z.dim(), 2);
    let dir = std::env::temp_dir().join("hdq_alg_example.json");
    std::fs::write(&dir, group_algebra(&s3_table()).unwrap().to_json()).unwrap();
    let s = example_algebra(&ExampleKind::FromFile { path: dir.to_string_lossy().into() }).unwrap();
    assert_eq!(s.center().len(), 3);
}
