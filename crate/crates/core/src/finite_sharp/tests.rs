use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;

/// Counts, for every pair of distinct k-tuples, the elements carrying one
/// to the other.
fn oracle_sharp(elements: &[Perm], n: usize, k: usize) -> bool {
    let tuples: Vec<Vec<u32>> = (0..n as u32).permutations(k).collect();
    tuples.iter().all(|s| {
        tuples.iter().all(|t| {
            elements
                .iter()
                .filter(|g| s.iter().zip(t).all(|(&a, &b)| g[a as usize] == b))
                .count()
                == 1
        })
    })
}

fn all_perms(n: usize) -> BTreeSet<Perm> {
    (0..n as u32).permutations(n).collect()
}

fn sign(p: &[u32]) -> bool {
    let inversions = (0..p.len()).tuple_combinations().filter(|&(i, j)| p[i] > p[j]).count();
    inversions % 2 == 0
}

fn as_set(g: &FinitePermGroup) -> BTreeSet<Perm> {
    g.elements(DEFAULT_CAP).unwrap().into_iter().collect()
}

#[test]
fn symmetric_and_alternating_orders() {
    for n in 1..=5 {
        assert_eq!(as_set(&FinitePermGroup::symmetric(n)), all_perms(n));
        let even: BTreeSet<Perm> = all_perms(n).into_iter().filter(|p| sign(p)).collect();
        assert_eq!(as_set(&FinitePermGroup::alternating(n)), even);
    }
}

#[test]
fn s3_is_sharply_3_and_2_transitive() {
    let s3 = FinitePermGroup::symmetric(3);
    let e = s3.elements(DEFAULT_CAP).unwrap();
    for k in [2, 3] {
        let c = verify_sharp_transitive(&s3, k, DEFAULT_CAP).unwrap();
        assert_eq!(c, SharpCertificate::Sharp { order: 6, tuples: 6 });
        assert!(oracle_sharp(&e, 3, k));
    }
}

#[test]
fn a5_is_sharply_3_transitive() {
    let a5 = FinitePermGroup::alternating(5);
    let c = verify_sharp_transitive(&a5, 3, DEFAULT_CAP).unwrap();
    assert_eq!(c, SharpCertificate::Sharp { order: 60, tuples: 60 });
    assert!(oracle_sharp(&a5.elements(DEFAULT_CAP).unwrap(), 5, 3));
}

#[test]
fn failures_carry_certificates() {
    let s4 = FinitePermGroup::symmetric(4);
    match verify_sharp_transitive(&s4, 2, DEFAULT_CAP).unwrap() {
        SharpCertificate::NotFree { element, fixed } => {
            assert_ne!(element, identity(4));
            assert!(fixed.iter().all(|&i| element[i as usize] == i));
        }
        c => panic!("{c:?}"),
    }
    let a4 = FinitePermGroup::alternating(4);
    match verify_sharp_transitive(&a4, 3, DEFAULT_CAP).unwrap() {
        SharpCertificate::NotTransitive { missing, orbit } => {
            assert_eq!(orbit, 12);
            let e = a4.elements(DEFAULT_CAP).unwrap();
            assert!(!e.iter().any(|g| (0..3).all(|i| g[i] == missing[i])));
        }
        c => panic!("{c:?}"),
    }
}

#[test]
fn verifier_errors() {
    let s5 = FinitePermGroup::symmetric(5);
    assert_eq!(verify_sharp_transitive(&s5, 2, 50), Err(FiniteError::TooLarge(50)));
    assert_eq!(
        verify_sharp_transitive(&s5, 6, DEFAULT_CAP),
        Err(FiniteError::TooFewPoints { n: 5, k: 6 })
    );
    assert_eq!(
        FinitePermGroup::new(3, vec![vec![0, 0, 1]]),
        Err(FiniteError::NotAPermutation { index: 0, n: 3 })
    );
}

#[test]
fn group_json_round_trip() {
    let g = FinitePermGroup::alternating(5);
    let text = serde_json::to_string(&g).unwrap();
    assert!(text.starts_with("{\"n\":5,\"generators\":"));
    assert_eq!(serde_json::from_str::<FinitePermGroup>(&text).unwrap(), g);
}

#[test]
fn prime_fields_are_integers_mod_p() {
    for p in [2u32, 3, 5, 7, 11, 13] {
        let f = FiniteField::new(p).unwrap();
        for (x, y) in (0..p).cartesian_product(0..p) {
            assert_eq!(f.add(x, y), (x + y) % p);
            assert_eq!(f.mul(x, y), x * y % p);
        }
    }
}

#[test]
fn field_axioms_hold() {
    for q in [4u32, 8, 9, 16] {
        let f = FiniteField::new(q).unwrap();
        for x in 1..q {
            assert_eq!(f.mul(x, f.inv(x).unwrap()), 1);
        }
        for (x, y, z) in (0..q).cartesian_product(0..q).cartesian_product(0..q).map(|((x, y), z)| (x, y, z)) {
            assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
            assert_eq!(f.mul(x, y), f.mul(y, x));
        }
        let g = f.primitive();
        let powers: BTreeSet<u32> = (0..q - 1).map(|e| f.pow(g, e)).collect();
        assert_eq!(powers.len() as u32, q - 1);
    }
    assert_eq!(FiniteField::new(6), Err(FiniteError::UnsupportedOrder(6)));
    assert_eq!(FiniteField::new(1), Err(FiniteError::UnsupportedOrder(1)));
}

fn element_order(nf: &NearField, x: u32) -> u32 {
    let mut y = x;
    let mut k = 1;
    while y != 1 {
        y = nf.mul(y, x);
        k += 1;
    }
    k
}

#[test]
fn dickson_additive_group_is_elementary_abelian() {
    let nf = NearField::dickson(9).unwrap();
    assert_eq!(nf.order(), 9);
    for x in 0..9 {
        assert_eq!(nf.add(nf.add(x, x), x), 0);
    }
}

#[test]
fn dickson_multiplicative_group_is_quaternion() {
    let nf = NearField::dickson(9).unwrap();
    let report = nf.report();
    assert!(!report.multiplication_commutative);
    let orders: Vec<u32> = (1..9).map(|x| element_order(&nf, x)).collect();
    assert_eq!(orders.iter().filter(|&&o| o == 2).count(), 1);
    assert_eq!(orders.iter().filter(|&&o| o == 4).count(), 6);
}

#[test]
fn dickson_left_distributivity_fails() {
    let nf = NearField::dickson(9).unwrap();
    let [x, y, z] = nf.report().left_distributivity_witness.unwrap();
    assert_ne!(nf.mul(x, nf.add(y, z)), nf.add(nf.mul(x, y), nf.mul(x, z)));
    assert_eq!(NearField::dickson(4), Err(FiniteError::UnsupportedOrder(4)));
    let field = NearField::from_field(&FiniteField::new(9).unwrap()).report();
    assert!(field.multiplication_commutative);
    assert_eq!(field.left_distributivity_witness, None);
}

#[test]
fn near_field_validation_rejects_rings() {
    // Z/4 is not a near-field.
    let add = (0..4).map(|x| (0..4).map(|y| (x + y) % 4).collect()).collect();
    let mul = (0..4).map(|x| (0..4).map(|y| x * y % 4).collect()).collect();
    assert!(matches!(NearField::new(add, mul), Err(FiniteError::NotANearField(_))));
}

#[test]
fn affine_group_of_f3() {
    let g = affine_group(&NearField::from_field(&FiniteField::new(3).unwrap()));
    assert_eq!(
        verify_sharp_transitive(&g, 2, DEFAULT_CAP).unwrap(),
        SharpCertificate::Sharp { order: 6, tuples: 6 }
    );
}

#[test]
fn affine_group_of_dickson_near_field() {
    let g = affine_group(&NearField::dickson(9).unwrap());
    assert_eq!(
        verify_sharp_transitive(&g, 2, DEFAULT_CAP).unwrap(),
        SharpCertificate::Sharp { order: 72, tuples: 72 }
    );
    assert!(oracle_sharp(&g.elements(DEFAULT_CAP).unwrap(), 9, 2));
}

#[test]
fn affine_groups_are_sharply_2_transitive() {
    for q in [2u32, 3, 4, 5, 7, 8, 9] {
        let g = affine_group(&NearField::from_field(&FiniteField::new(q).unwrap()));
        let c = verify_sharp_transitive(&g, 2, DEFAULT_CAP).unwrap();
        assert!(c.is_sharp(), "q = {q}");
        assert_eq!(g.order(DEFAULT_CAP).unwrap(), (q * (q - 1)) as usize);
    }
}

#[test]
fn translations_are_simply_transitive() {
    let nf = NearField::dickson(9).unwrap();
    let g = translation_group(&nf);
    assert_eq!(
        verify_sharp_transitive(&g, 1, DEFAULT_CAP).unwrap(),
        SharpCertificate::Sharp { order: 9, tuples: 9 }
    );
}

/// Every invertible matrix acting by `x ↦ (ax + b)/(cx + d)`.
fn oracle_pgl2(q: u32) -> BTreeSet<Perm> {
    let f = FiniteField::new(q).unwrap();
    let inf = q;
    let act = |[a, b, c, d]: [u32; 4], x: u32| -> u32 {
        let (num, den) = if x == inf { (a, c) } else { (f.add(f.mul(a, x), b), f.add(f.mul(c, x), d)) };
        if den == 0 {
            inf
        } else {
            f.mul(num, f.inv(den).unwrap())
        }
    };
    (0..q.pow(4))
        .map(|i| [i % q, i / q % q, i / q / q % q, i / q / q / q])
        .filter(|&[a, b, c, d]| f.mul(a, d) != f.mul(b, c))
        .map(|m| (0..=q).map(|x| act(m, x)).collect())
        .collect()
}

#[test]
fn pgl2_matches_matrix_enumeration() {
    for q in [2u32, 3, 4, 5, 7, 8, 9] {
        let g = pgl2_fq_action(q).unwrap();
        let n = (q + 1) * q * (q - 1);
        assert_eq!(as_set(&g), oracle_pgl2(q), "q = {q}");
        assert_eq!(
            verify_sharp_transitive(&g, 3, DEFAULT_CAP).unwrap(),
            SharpCertificate::Sharp {
                order: n as usize,
                tuples: n as usize
            }
        );
    }
}

#[test]
fn pgl2_small_cases() {
    assert_eq!(pgl2_fq_action(2).unwrap().order(DEFAULT_CAP).unwrap(), 6);
    assert_eq!(as_set(&pgl2_fq_action(3).unwrap()), all_perms(4));
    let g5 = pgl2_fq_action(5).unwrap();
    assert_eq!(g5.n, 6);
    assert!(oracle_sharp(&g5.elements(DEFAULT_CAP).unwrap(), 6, 3));
    assert_eq!(pgl2_fq_action(6), Err(FiniteError::UnsupportedOrder(6)));
    assert_eq!(pgl2_fq_action(17), Err(FiniteError::UnsupportedOrder(17)));
}

proptest! {
    #[test]
    fn verifier_agrees_with_brute_force(
        gens in prop::collection::vec(Just((0..5u32).collect::<Vec<_>>()).prop_shuffle(), 1..3),
        k in 1usize..=3,
    ) {
        let g = FinitePermGroup::new(5, gens).unwrap();
        let e = g.elements(DEFAULT_CAP).unwrap();
        let c = verify_sharp_transitive(&g, k, DEFAULT_CAP).unwrap();
        prop_assert_eq!(c.is_sharp(), oracle_sharp(&e, 5, k));
    }

    #[test]
    fn closure_is_a_group(gens in prop::collection::vec(Just((0..5u32).collect::<Vec<_>>()).prop_shuffle(), 1..3)) {
        let g = FinitePermGroup::new(5, gens).unwrap();
        let e: BTreeSet<Perm> = g.elements(DEFAULT_CAP).unwrap().into_iter().collect();
        prop_assert_eq!(120 % e.len(), 0);
        for a in &e {
            prop_assert!(e.contains(&invert(a)));
            for b in &e {
                prop_assert!(e.contains(&compose(a, b)));
            }
        }
    }
}
