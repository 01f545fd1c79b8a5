use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::tree_boundary::{boundary_crossratio, classify_automorphism, DynamicsKind};

const PREC: u32 = 20;

fn pt(p: u64, n: i64) -> ProjPoint {
    ProjPoint::from_i64(p, PREC, n).unwrap()
}

fn mob(p: u64, m: [[i64; 2]; 2]) -> Mobius {
    Mobius::from_i64(p, PREC, m).unwrap()
}

/// `v_p(n)` for `n ≠ 0`.
fn vp(p: i128, mut n: i128) -> i64 {
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Valuation of `[x,y]` for integer points, `None` standing for ∞.
fn bracket_val(p: i128, x: Option<i128>, y: Option<i128>) -> i64 {
    match (x, y) {
        (Some(a), Some(b)) => vp(p, a - b),
        _ => 0,
    }
}

fn oracle_cr(p: i128, x: [Option<i128>; 4]) -> i64 {
    bracket_val(p, x[0], x[2]) + bracket_val(p, x[1], x[3])
        - bracket_val(p, x[0], x[3])
        - bracket_val(p, x[1], x[2])
}

fn to_point(p: u64, x: Option<i128>) -> ProjPoint {
    x.map_or(ProjPoint::infinity(p), |n| pt(p, n as i64))
}

#[test]
fn mobius_act_examples() {
    let one = pt(2, 1);
    assert!(mobius_act(&Mobius::identity(2, PREC).unwrap(), &one).unwrap().approx_eq(&one));
    let flip = mob(2, [[0, 1], [1, 0]]);
    assert_eq!(mobius_act(&flip, &pt(2, 0)).unwrap(), ProjPoint::infinity(2));
    let double = mob(2, [[2, 0], [0, 1]]);
    assert!(mobius_act(&double, &one).unwrap().approx_eq(&pt(2, 2)));
}

#[test]
fn singular_matrix_is_rejected() {
    assert_eq!(Mobius::from_i64(3, 8, [[1, 2], [2, 4]]), Err(PadicError::Singular));
}

#[test]
fn solve_standard_triple_is_identity() {
    let m = solve_sharply3(&pt(3, 0), &pt(3, 1), &ProjPoint::infinity(3)).unwrap();
    assert!(m.proj_eq(&Mobius::identity(3, PREC).unwrap()).unwrap());
}

#[test]
fn solve_reversed_triple_is_inversion() {
    let m = solve_sharply3(&ProjPoint::infinity(3), &pt(3, 1), &pt(3, 0)).unwrap();
    assert!(m.proj_eq(&mob(3, [[0, 1], [1, 0]])).unwrap());
}

#[test]
fn solve_with_det_valuation_one() {
    let targets = [pt(3, 0), pt(3, 1), pt(3, 3)];
    let m = solve_sharply3(&targets[0], &targets[1], &targets[2]).unwrap();
    assert_eq!(m.det().unwrap().valuation(), Some(1));
    let sources = [pt(3, 0), pt(3, 1), ProjPoint::infinity(3)];
    for (s, t) in sources.iter().zip(&targets) {
        assert!(mobius_act(&m, s).unwrap().approx_eq(t));
    }
}

#[test]
fn solve_rejects_coincident_points() {
    assert_eq!(
        solve_sharply3(&pt(2, 5), &pt(2, 5), &pt(2, 1)),
        Err(PadicError::Coincident)
    );
}

/// A random point at relative precision `k`, ∞ one time in eight.
fn random_point(rng: &mut ChaCha8Rng, p: u64, k: u32) -> ProjPoint {
    if rng.gen_ratio(1, 8) {
        return ProjPoint::infinity(p);
    }
    let modulus = (p as u128).pow(k);
    let unit = loop {
        let u = rng.gen_range(1..modulus);
        if u % p as u128 != 0 {
            break u;
        }
    };
    let a = crate::padic::Padic::from_parts(p, k, rng.gen_range(-2..=3), unit).unwrap();
    ProjPoint::from_scalar(&a).unwrap()
}

#[test]
fn sharp_three_transitivity_on_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [2u64, 3] {
        let mut done = 0;
        while done < 500 {
            let ps: Vec<ProjPoint> = (0..3).map(|_| random_point(&mut rng, p, 8)).collect();
            // Distinct at precision: every pair separated within half the
            // working precision.
            let separated = (0..3).all(|i| {
                (i + 1..3).all(|j| {
                    let (u1, v1) = ps[i].homogeneous();
                    let (u2, v2) = ps[j].homogeneous();
                    let d = u1.mul(&v2).unwrap().sub(&u2.mul(&v1).unwrap()).unwrap();
                    d.valuation().is_some_and(|v| v <= 4)
                })
            });
            if !separated {
                continue;
            }
            let m = solve_sharply3(&ps[0], &ps[1], &ps[2]).unwrap();
            let std = [
                ProjPoint::from_i64(p, 8, 0).unwrap(),
                ProjPoint::from_i64(p, 8, 1).unwrap(),
                ProjPoint::infinity(p),
            ];
            for (s, t) in std.iter().zip(&ps) {
                assert!(mobius_act(&m, s).unwrap().approx_eq(t), "{ps:?}");
            }
            done += 1;
        }
    }
}

#[test]
fn crossratio_valuation_examples() {
    let (zero, one, inf) = (pt(3, 0), pt(3, 1), ProjPoint::infinity(3));
    assert_eq!(classical_crossratio_valuation(&zero, &inf, &one, &pt(3, 2)).unwrap(), 0);
    let (zero, one, inf) = (pt(2, 0), pt(2, 1), ProjPoint::infinity(2));
    assert_eq!(classical_crossratio_valuation(&zero, &inf, &one, &pt(2, 2)).unwrap(), -1);
}

fn distinct4(rng: &mut ChaCha8Rng) -> [Option<i128>; 4] {
    loop {
        let x: [Option<i128>; 4] = std::array::from_fn(|_| {
            if rng.gen_ratio(1, 10) {
                None
            } else {
                Some(rng.gen_range(-200i128..=200))
            }
        });
        if (0..4).all(|i| (i + 1..4).all(|j| x[i] != x[j])) {
            return x;
        }
    }
}

#[test]
fn crossratio_valuation_matches_integer_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [2u64, 3, 5] {
        for _ in 0..300 {
            let x = distinct4(&mut rng);
            let ps: Vec<ProjPoint> = x.iter().map(|&n| to_point(p, n)).collect();
            assert_eq!(
                classical_crossratio_valuation(&ps[0], &ps[1], &ps[2], &ps[3]).unwrap(),
                oracle_cr(p as i128, x),
                "{x:?}"
            );
        }
    }
}

fn random_mobius(rng: &mut ChaCha8Rng, p: u64) -> Mobius {
    loop {
        let e: [[i64; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-12..=12)));
        if e[0][0] * e[1][1] - e[0][1] * e[1][0] != 0 {
            return mob(p, e);
        }
    }
}

#[test]
fn crossratio_valuation_is_mobius_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for p in [2u64, 3] {
        for _ in 0..200 {
            let x = distinct4(&mut rng);
            let m = random_mobius(&mut rng, p);
            let ps: Vec<ProjPoint> = x.iter().map(|&n| to_point(p, n)).collect();
            let qs: Vec<ProjPoint> = ps.iter().map(|q| mobius_act(&m, q).unwrap()).collect();
            assert_eq!(
                classical_crossratio_valuation(&ps[0], &ps[1], &ps[2], &ps[3]).unwrap(),
                classical_crossratio_valuation(&qs[0], &qs[1], &qs[2], &qs[3]).unwrap()
            );
        }
    }
}

#[test]
fn words_round_trip() {
    for p in [2u64, 3, 5] {
        for n in [-7i64, 0, 1, 6, 25] {
            let x = pt(p, n);
            let w = x.word(12).unwrap();
            assert!(ProjPoint::from_word(p, &w).unwrap().word(12).unwrap() == w);
        }
        let inf = ProjPoint::infinity(p).word(4).unwrap();
        assert_eq!(inf, vec![p as u32, 0, 0, 0]);
    }
}

#[test]
fn json_round_trip() {
    for x in [pt(3, 0), pt(3, 18), pt(3, -4), ProjPoint::infinity(3)] {
        let j = x.to_json();
        let y = ProjPoint::from_json(3, PREC, &j).unwrap();
        assert_eq!(x.word(10).unwrap(), y.word(10).unwrap(), "{j:?}");
    }
    let far = mobius_act(&mob(3, [[0, 1], [1, 0]]), &pt(3, 9)).unwrap();
    let back = ProjPoint::from_json(3, PREC, &far.to_json()).unwrap();
    assert_eq!(far.word(10).unwrap(), back.word(10).unwrap());
}

#[test]
fn depth_one_star() {
    let (model, ends) = bt_correspondence(2, 1, 8).unwrap();
    assert_eq!(model.root_branching, 3);
    let letters: Vec<Word> = [pt(2, 0), pt(2, 1), ProjPoint::infinity(2)]
        .iter()
        .map(|x| ends.to_boundary(x).unwrap().word(1).unwrap())
        .collect();
    assert_eq!(letters, vec![vec![0], vec![1], vec![2]]);
    assert!(bt_correspondence(2, 9, 8).is_err());
    assert!(bt_correspondence(4, 2, 8).is_err());
}

#[test]
fn identity_acts_trivially() {
    let (model, ends) = bt_correspondence(3, 4, PREC).unwrap();
    let g = ends.automorphism(&Mobius::identity(3, PREC).unwrap());
    for w in model.ball() {
        assert_eq!(g.vertex(&w).unwrap(), w);
    }
}

#[test]
fn end_map_is_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let depth = 6;
    for p in [2u64, 3] {
        let (_, ends) = bt_correspondence(p, depth, PREC).unwrap();
        for _ in 0..200 {
            let m = random_mobius(&mut rng, p);
            let x = to_point(p, distinct4(&mut rng)[0]);
            let g = ends.automorphism(&m);
            let shift = g.root_shift().unwrap();
            let (d, img) = g.image(&x.word(depth + shift).unwrap(), depth).unwrap();
            assert!(d >= depth);
            assert_eq!(img, mobius_act(&m, &x).unwrap().word(depth).unwrap(), "{m:?} {x:?}");
        }
    }
}

#[test]
fn vertex_images_respect_adjacency() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (model, ends) = bt_correspondence(2, 4, PREC).unwrap();
    for _ in 0..50 {
        let g = ends.automorphism(&random_mobius(&mut rng, 2));
        for w in model.ball().into_iter().filter(|w| !w.is_empty()) {
            let a = g.vertex(&w).unwrap();
            let b = g.vertex(&w[..w.len() - 1]).unwrap();
            assert_eq!(crate::tree_boundary::vertex_distance(&a, &b), 1);
        }
    }
}

#[test]
fn tree_crossratio_from_classical_valuation() {
    // Established by exhaustive comparison: the tree crossratio
    // (x1 x4 | x2 x3) equals max(0, −v(x1, x2; x3, x4)).
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let depth = 8;
    for p in [2u64, 3] {
        let (model, ends) = bt_correspondence(p, depth, PREC).unwrap();
        let mut checked = 0;
        while checked < 300 {
            let x = distinct4(&mut rng);
            let ps: Vec<ProjPoint> = x.iter().map(|&n| to_point(p, n)).collect();
            let bs: Vec<_> = ps.iter().map(|q| ends.to_boundary(q).unwrap()).collect();
            let Ok(t) = boundary_crossratio(&model, &bs[0], &bs[3], &bs[1], &bs[2]) else {
                continue;
            };
            let v = oracle_cr(p as i128, x);
            assert_eq!(t as i64, (-v).max(0), "{x:?}");
            checked += 1;
        }
    }
}

#[test]
fn doubling_is_loxodromic_along_zero_infinity() {
    let (_, ends) = bt_correspondence(2, 6, PREC).unwrap();
    let m = mob(2, [[2, 0], [0, 1]]);
    let class = classify_automorphism(&ends.automorphism(&m)).unwrap();
    assert_eq!(class.kind, DynamicsKind::Loxodromic);
    assert_eq!(class.translation_length, 1);
    assert!(class.criterion_checked);
    assert_eq!(class.attracting.unwrap().to_string(), "000000");
    assert_eq!(class.repelling.unwrap().to_string(), "200000");
}

#[test]
fn dynamics_agree_with_fixed_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let depth = 6;
    for p in [2u64, 3] {
        let (_, ends) = bt_correspondence(p, depth, 40.min(crate::padic::max_precision(p))).unwrap();
        let mut seen = [0usize; 2];
        for _ in 0..150 {
            let m = random_mobius(&mut rng, p);
            let Ok(class) = classify_automorphism(&ends.automorphism(&m)) else {
                continue;
            };
            let fp = fixed_points(&m).unwrap();
            match fp {
                FixedPoints::Attracting { attracting, repelling } => {
                    seen[0] += 1;
                    assert_eq!(class.kind, DynamicsKind::Loxodromic, "{m:?}");
                    assert_eq!(class.translation_length, m.translation_length().unwrap());
                    assert_eq!(class.attracting.unwrap().word(depth).unwrap(), attracting.word(depth).unwrap());
                    assert_eq!(class.repelling.unwrap().word(depth).unwrap(), repelling.word(depth).unwrap());
                    assert!(mobius_act(&m, &attracting).unwrap().approx_eq(&attracting));
                }
                FixedPoints::Balanced => {
                    seen[1] += 1;
                    assert_ne!(class.kind, DynamicsKind::Loxodromic, "{m:?}");
                }
            }
        }
        assert!(seen[0] > 10 && seen[1] > 10, "{seen:?}");
    }
}

#[test]
fn powers_and_inverse() {
    let m = mob(3, [[1, 2], [3, 7]]);
    let cube = m.compose(&m).unwrap().compose(&m).unwrap();
    assert!(m.pow(3).unwrap().proj_eq(&cube).unwrap());
    assert!(m.compose(&m.inverse()).unwrap().proj_eq(&Mobius::identity(3, PREC).unwrap()).unwrap());
    assert_eq!(mob(2, [[4, 0], [0, 1]]).translation_length().unwrap(), 2);
    assert_eq!(mob(2, [[0, 1], [1, 0]]).translation_length().unwrap(), 0);
}
