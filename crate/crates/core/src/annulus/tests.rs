use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::tree_boundary::Word;

fn r(x: i64, y: i64) -> Rational {
    Rational::new(x, y)
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Atoms `1..=6` are indices `0..6`.
fn six(minus: &[usize], plus: &[usize]) -> Annulus {
    let m: Vec<usize> = minus.iter().map(|a| a - 1).collect();
    let p: Vec<usize> = plus.iter().map(|a| a - 1).collect();
    Annulus::from_atoms(6, &m, &p).unwrap()
}

fn ab_system() -> AnnulusSystem {
    AnnulusSystem::new(names(6), vec![six(&[1, 2], &[4, 5, 6]), six(&[1, 2, 3], &[5, 6])]).unwrap()
}

fn set(n: usize, atoms: &[usize]) -> Region {
    region(n, atoms.iter().copied())
}

/// Gromov-product formula for the distance between the geodesics `xy` and
/// `zw` of a rooted tree, with ends given as words.
fn geodesic_crossratio(x: &[u32], y: &[u32], z: &[u32], w: &[u32]) -> i64 {
    let g = |a: &[u32], b: &[u32]| common_prefix_len(a, b) as i64;
    (g(x, y) + g(z, w) - (g(x, z) + g(y, w)).max(g(x, w) + g(y, z))).max(0)
}

fn binary_atoms(depth: usize) -> (RegularTreeModel, Vec<Word>) {
    let model = RegularTreeModel::binary(depth).unwrap();
    let atoms = model.level(depth);
    (model, atoms)
}

#[test]
fn annulus_validation() {
    assert_eq!(Annulus::from_atoms(4, &[0], &[0, 1]), Err(AnnulusError::Overlap));
    assert_eq!(Annulus::from_atoms(4, &[0, 1], &[2, 3]), Err(AnnulusError::NoGap));
    assert_eq!(Annulus::from_atoms(4, &[], &[2]), Err(AnnulusError::EmptySide));
    assert_eq!(Annulus::from_atoms(4, &[0], &[7]), Err(AnnulusError::AtomOutOfRange(7)));
}

#[test]
fn annulus_never_below_its_negative() {
    let a = six(&[1, 2], &[4, 5, 6]);
    assert!(!nesting_lt(&a, &a.negate()).unwrap());
    assert!(!nesting_lt(&a.negate(), &a).unwrap());
}

#[test]
fn nesting_examples() {
    let a = six(&[1, 2], &[4, 5, 6]);
    let b = six(&[1, 2, 3], &[5, 6]);
    assert!(nesting_lt(&a, &b).unwrap());
    assert!(!nesting_lt(&b, &a).unwrap());
    let small = Annulus::from_atoms(3, &[0], &[2]).unwrap();
    assert_eq!(nesting_lt(&a, &small), Err(AnnulusError::UniverseMismatch(6, 3)));
}

#[test]
fn region_relations() {
    let a = six(&[1, 2], &[4, 5, 6]);
    assert!(region_below(&set(6, &[0]), &a));
    assert!(!region_below(&set(6, &[2]), &a));
    assert!(region_above(&a, &set(6, &[5])));
    assert!(!region_above(&a, &set(6, &[2])));
}

#[test]
fn separation_examples() {
    let sys = ab_system();
    let empty = AnnulusSystem::empty(names(6)).unwrap();
    assert_eq!(separation_count(&set(6, &[0]), &set(6, &[5]), &empty), 0);
    assert_eq!(separation_count(&set(6, &[0]), &set(6, &[5]), &sys), 2);
    assert_eq!(separation_count(&set(6, &[0]), &set(6, &[1]), &sys), 0);
    assert_eq!(separation_count(&set(6, &[0]), &set(6, &[3]), &sys), 1);
    assert_eq!(longest_chain(&sys), 2);
}

#[test]
fn symmetry_and_dedup() {
    let a = six(&[1, 2], &[4, 5, 6]);
    let sys = AnnulusSystem::new(names(6), vec![a.clone(), a.clone()]).unwrap();
    assert_eq!(sys.len(), 1);
    assert!(!sys.is_symmetric());
    let s = sys.symmetrized();
    assert_eq!(s.len(), 2);
    assert!(s.is_symmetric());
    assert_eq!(
        AnnulusSystem::empty(vec!["a".into(), "a".into()]),
        Err(AnnulusError::DuplicateAtom("a".into()))
    );
}

#[test]
fn json_round_trip() {
    let sys = ab_system().symmetrized();
    let text = serde_json::to_string(&sys.to_json()).unwrap();
    let back: SystemJson = serde_json::from_str(&text).unwrap();
    assert_eq!(AnnulusSystem::from_json(&back).unwrap(), sys);
    let bad = SystemJson {
        universe: names(3),
        annuli: vec![AnnulusJson {
            minus: vec!["1".into()],
            plus: vec!["9".into()],
        }],
    };
    assert_eq!(AnnulusSystem::from_json(&bad), Err(AnnulusError::UnknownAtom("9".into())));
}

#[test]
fn induced_crossratio_of_level_one_cylinders() {
    let (model, atoms) = binary_atoms(3);
    let sys = cylinder_system(&model, 3, 1).unwrap();
    let sample = [0, 1, 4, 6];
    let t = induced_crossratio(&sys, &sample).unwrap();
    for q in (0..4).permutations(4) {
        let v = t.value(q[0], q[1], q[2], q[3]).unwrap();
        assert!(v == r(0, 1) || v == r(1, 1), "{v} at {q:?}");
    }
    assert_eq!(t.value(0, 1, 2, 3).unwrap(), r(1, 1));
    assert_eq!(t.value(0, 2, 1, 3).unwrap(), r(0, 1));
    assert_eq!(atoms.len(), 8);
}

#[test]
fn induced_crossratio_of_empty_system() {
    let sys = AnnulusSystem::empty(names(5)).unwrap();
    let t = induced_crossratio(&sys, &[0, 1, 2, 3, 4]).unwrap();
    for q in (0..5).permutations(4) {
        assert_eq!(t.value(q[0], q[1], q[2], q[3]).unwrap(), r(0, 1));
    }
    assert_eq!(
        induced_crossratio(&sys, &[0, 1, 2]).unwrap_err(),
        AnnulusError::SampleTooSmall { got: 3, need: 4 }
    );
}

fn additive_constant(depth: usize) -> i64 {
    let (model, atoms) = binary_atoms(depth);
    let sys = cylinder_system(&model, depth, depth - 1).unwrap();
    let sample = check_atoms(atoms.len());
    let mut worst = 0;
    for q in sample.iter().copied().permutations(4) {
        let count = pair_count(&sys, q[0], q[1], q[2], q[3]) as i64;
        let geo = geodesic_crossratio(&atoms[q[0]], &atoms[q[1]], &atoms[q[2]], &atoms[q[3]]);
        worst = worst.max((count - geo).abs());
    }
    worst
}

#[test]
fn cylinder_crossratio_tracks_geodesic_crossratio() {
    let c6 = additive_constant(6);
    assert_eq!(c6, 2);
    assert_eq!(additive_constant(8), c6);
}

#[test]
fn antipodal_pairs_grow_with_agreement() {
    let (model, atoms) = binary_atoms(6);
    let sys = cylinder_system(&model, 6, 5).unwrap();
    let index = |w: &[u32]| atoms.iter().position(|a| a == w).unwrap();
    let mut last = None;
    for k in 1..6 {
        let x = vec![0; 6];
        let mut y = vec![0; 6];
        y[k] = 1;
        let z = vec![1; 6];
        let mut w = vec![1; 6];
        w[k] = 0;
        let v = pair_count(&sys, index(&x), index(&y), index(&z), index(&w));
        if let Some(prev) = last {
            assert!(v > prev);
        }
        last = Some(v);
    }
}

#[test]
fn tree_systems_satisfy_dual_exclusion() {
    let (model, atoms) = binary_atoms(5);
    let sys = cylinder_system(&model, 5, 4).unwrap();
    let report = check_axioms(&sys, &check_atoms(atoms.len()), 1).unwrap();
    assert_eq!(report.a2_k, 0);
    assert!(report.a1_finite);
    assert!(report.perfectness_assumed);
}

#[test]
fn single_annulus_fails_positivity() {
    let sys = AnnulusSystem::new(names(6), vec![six(&[1, 2], &[4, 5, 6])]).unwrap();
    let report = check_axioms(&sys, &[0, 1, 2, 3, 4, 5], 1).unwrap();
    assert!(report.a1_finite);
    assert!(report.a4_failures.contains(&["1".to_string(), "2".to_string()]));
    assert!(!report.a4_failures.contains(&["1".to_string(), "4".to_string()]));
    assert_eq!(report.a4_checked, 15);
}

fn visual_binary(depth: usize) -> (Vec<String>, AtomMetric) {
    let model = RegularTreeModel::binary(depth).unwrap();
    AtomMetric::visual(&model, depth, r(1, 2)).unwrap()
}

#[test]
fn metric_examples() {
    let (_, d) = visual_binary(4);
    let a = Annulus::from_atoms(16, &[0], &[15]).unwrap();
    let points = AtomMetric::discrete(vec![vec![r(0, 1), r(1, 1), r(1, 1)], vec![r(1, 1), r(0, 1), r(1, 1)], vec![r(1, 1), r(1, 1), r(0, 1)]]).unwrap();
    let p = Annulus::from_atoms(3, &[0], &[1]).unwrap();
    assert_eq!(annulus_metrics(&p, &points).unwrap().0, r(0, 1));
    // Level-one cylinders minus one atom so that the gap is nonempty.
    let halves = Annulus::from_atoms(16, &(0..8).collect::<Vec<_>>(), &(8..15).collect::<Vec<_>>()).unwrap();
    assert_eq!(annulus_metrics(&halves, &d).unwrap().1, r(1, 1));
    let siblings = Annulus::from_atoms(16, &[0, 1, 2, 3], &[4, 5, 6, 7]).unwrap();
    assert_eq!(annulus_metrics(&siblings, &d).unwrap(), (r(1, 4), r(1, 2)));
    assert_eq!(annulus_metrics(&a, &d).unwrap(), (r(1, 16), r(1, 1)));
}

#[test]
fn metric_validation() {
    assert!(AtomMetric::discrete(vec![vec![r(0, 1), r(1, 1)], vec![r(2, 1), r(0, 1)]]).is_err());
    assert!(AtomMetric::discrete(vec![vec![r(0, 1), r(0, 1)], vec![r(0, 1), r(0, 1)]]).is_err());
}

fn swap_map(depth: usize) -> Vec<usize> {
    let model = RegularTreeModel::binary(depth).unwrap();
    atom_permutation(&TreeAutomorphism::root_swap(model), depth).unwrap()
}

#[test]
fn atom_permutation_of_root_swap() {
    let map = swap_map(3);
    assert_eq!(map, vec![4, 5, 6, 7, 0, 1, 2, 3]);
    let (_, d) = visual_binary(3);
    assert!(d.is_isometry(&map));
}

#[test]
fn small_annulus_examples() {
    let (_, d) = visual_binary(4);
    let id: Vec<usize> = (0..16).collect();
    let a = small_separating_annulus(0, 15, std::slice::from_ref(&id), r(4, 1), &d).unwrap();
    assert!(a.minus.contains(0) && a.plus.contains(15));
    let b = small_separating_annulus(0, 15, &[swap_map(4)], r(1, 2), &d).unwrap();
    assert_eq!(b.minus.ones().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(b.plus.ones().collect::<Vec<_>>(), vec![12, 13, 14, 15]);
    assert_eq!(
        small_separating_annulus(0, 15, &[id], r(1, 32), &d),
        Err(AnnulusError::NoAnnulus("0".into(), "15".into()))
    );
}

fn one_triple(n: usize) -> ([usize; 3], [Region; 3]) {
    let q = n / 4;
    (
        [0, q, 2 * q],
        [
            region(n, 0..q),
            region(n, q..2 * q),
            region(n, 2 * q..3 * q),
        ],
    )
}

#[test]
fn cover_system_examples() {
    let (t, nb) = one_triple(8);
    let id: Vec<usize> = (0..8).collect();
    let sys = build_cover_system(names(8), &[t], std::slice::from_ref(&nb), std::slice::from_ref(&id)).unwrap();
    assert_eq!(sys.len(), 2);
    assert!(sys.is_symmetric());
    let empty = build_cover_system(names(8), &[t], std::slice::from_ref(&nb), &[]).unwrap();
    assert!(empty.is_empty());
    let model = RegularTreeModel::binary(3).unwrap();
    let flip = TreeAutomorphism::explicit(model, BTreeMap::from([(vec![0], vec![1, 0])])).unwrap();
    let maps = vec![
        id,
        swap_map(3),
        atom_permutation(&flip, 3).unwrap(),
    ];
    let sys = build_cover_system(names(8), &[t], std::slice::from_ref(&nb), &maps).unwrap();
    assert!(sys.len() <= 6 && sys.is_symmetric());
    let mut bad = nb;
    bad[1] = region(8, [0, 3]);
    assert_eq!(
        build_cover_system(names(8), &[t], &[bad], &[(0..8).collect()]),
        Err(AnnulusError::BadNeighbourhoods(0))
    );
}

fn refined(depth: usize, steps: u32) -> (AnnulusSystem, AtomMetric) {
    let (names, d) = visual_binary(depth);
    let maps = vec![swap_map(depth)];
    let mut sys = AnnulusSystem::empty(names).unwrap();
    for n in 0..steps {
        sys = refine_system_step(&sys, n, &d, &maps).unwrap();
    }
    (sys, d)
}

#[test]
fn refine_from_empty() {
    let (sys, d) = refined(4, 1);
    assert!(!sys.is_empty() && sys.is_symmetric());
    for (x, y) in (0..16).tuple_combinations() {
        if d.dist(x, y) >= r(1, 1) {
            assert!(separation_count(&set(16, &[x]), &set(16, &[y]), &sys) > 0);
        }
    }
}

#[test]
fn refine_second_step_separates_far_pairs() {
    let (sys, d) = refined(4, 2);
    for (x, y) in (0..16).tuple_combinations() {
        if d.dist(x, y) >= r(1, 2) {
            assert!(separation_count(&set(16, &[x]), &set(16, &[y]), &sys) > 0);
        }
    }
    assert_eq!(two_zeros_on(&sys, &check_atoms(16)), None);
}

#[test]
fn refine_on_axioms_report() {
    let (sys, d) = refined(4, 4);
    let report = check_axioms(&sys, &check_atoms(16), 1).unwrap();
    let far: Vec<[String; 2]> = report
        .a4_failures
        .iter()
        .filter(|p| {
            let x = sys.atom(&p[0]).unwrap();
            let y = sys.atom(&p[1]).unwrap();
            d.dist(x, y) >= r(1, 4)
        })
        .cloned()
        .collect();
    assert!(far.is_empty(), "{far:?}");
}

#[test]
fn refine_rejects_broken_input() {
    let (names, d) = visual_binary(3);
    // Crossing annuli give two nonzero dual values on {0, 1, 2, 3}.
    let sys = AnnulusSystem::new(
        names,
        vec![
            Annulus::from_atoms(8, &[0, 1], &[2, 3]).unwrap(),
            Annulus::from_atoms(8, &[0, 2], &[1, 3]).unwrap(),
        ],
    )
    .unwrap()
    .symmetrized();
    let e = refine_system_step(&sys, 0, &d, &[]).unwrap_err();
    assert!(matches!(e, AnnulusError::InvariantViolated(_)), "{e}");
}

#[test]
fn refine_reports_insufficient_resolution() {
    let (sys, d) = refined(2, 2);
    let e = refine_system_step(&sys, 2, &d, &[swap_map(2)]).unwrap_err();
    assert!(matches!(e, AnnulusError::NoAnnulus(..)), "{e}");
}

fn random_annulus(n: usize) -> impl Strategy<Value = Annulus> {
    prop::collection::vec(0u8..3, n).prop_filter_map("not an annulus", move |sides| {
        let pick = |s| sides.iter().enumerate().filter(|&(_, &v)| v == s).map(|(i, _)| i).collect::<Vec<_>>();
        Annulus::from_atoms(n, &pick(1), &pick(2)).ok()
    })
}

fn random_perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn nesting_is_a_strict_partial_order(annuli in prop::collection::vec(random_annulus(7), 1..12)) {
        let sys = AnnulusSystem::new(names(7), annuli).unwrap().symmetrized();
        prop_assert!(sys.nesting_is_strict_order());
    }

    #[test]
    fn cylinder_systems_have_no_crossing_duals(sample in prop::sample::subsequence((0..32).collect::<Vec<_>>(), 4..=8)) {
        let (model, _) = binary_atoms(5);
        let sys = cylinder_system(&model, 5, 4).unwrap();
        prop_assert_eq!(two_zeros_on(&sys, &sample), None);
    }

    #[test]
    fn cover_chains_are_bounded(
        maps in prop::collection::vec(random_perm(8), 1..4),
        k in 1usize..3,
    ) {
        let (t, nb) = one_triple(8);
        let triples = vec![t; k];
        let nbs = vec![nb; k];
        let sys = build_cover_system(names(8), &triples, &nbs, &maps).unwrap();
        prop_assert!(longest_chain(&sys) <= k * maps.len());
    }

    #[test]
    fn refinement_keeps_two_zeros(depth in 3usize..=4, steps in 1u32..=3) {
        let (names, d) = visual_binary(depth);
        let maps = vec![swap_map(depth)];
        let mut sys = AnnulusSystem::empty(names).unwrap();
        for n in 0..steps {
            match refine_system_step(&sys, n, &d, &maps) {
                Ok(next) => sys = next,
                Err(AnnulusError::NoAnnulus(..)) => break,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
        prop_assert_eq!(two_zeros_on(&sys, &check_atoms(d.len())), None);
    }
}
