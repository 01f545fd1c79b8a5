//! Seeded property suites, one per acceptance property, run by the CLI.

use itertools::Itertools;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::annulus::{check_atoms, cylinder_system, separation_count, AnnulusSystem};
use crate::crossratio::certify_hyperbolic;
use crate::finite_sharp::{affine_group, pgl2_fq_action, verify_sharp_transitive, NearField, DEFAULT_CAP};
use crate::fit::fit_tree;
use crate::metric_tree::{MetricTree, NodeId};
use crate::padic::Padic;
use crate::padic_projective::{bt_correspondence, mobius_act, solve_sharply3, Mobius, ProjPoint};
use crate::quasimetric::{crossratio_from_qm, QuasimetricSpace};
use crate::rational::{format_rational, Rational};
use crate::tree_boundary::{
    boundary_crossratio, classify_automorphism, collapsing_limit, conical_witness, gerasimov_limit,
    indistinguishable, interpolated_ray, median_of_ends, ray_rho, ray_triple_geodesic, vertex_distance,
    BoundaryError, BoundaryPoint, DynamicsKind, RegularTreeModel, TreeAutomorphism, Word,
};

pub const SUITES: [&str; 12] = [
    "tree-zero-hyperbolic",
    "path-realization",
    "qm-consistency",
    "rho-median",
    "fit-roundtrip",
    "annulus-constant",
    "dual-exclusion",
    "finite-sharp",
    "padic-sharp3",
    "collapsing-dynamics",
    "geodesic-interpolation",
    "conical-witness",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("empty suite name")]
    Empty,
    #[error("unknown suite {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseLine {
    pub suite: String,
    pub case: usize,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub seed: u64,
    pub passed: usize,
    pub total: usize,
    pub pass: bool,
    pub metrics: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub cases: Vec<CaseLine>,
    pub summary: SuiteSummary,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    /// One JSON object per case, then the summary.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.cases {
            out.push_str(&serde_json::to_string(c).expect("serializable"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("serializable"));
        out.push('\n');
        out
    }
}

struct Cases {
    suite: &'static str,
    lines: Vec<CaseLine>,
}

impl Cases {
    fn new(suite: &'static str) -> Self {
        Cases {
            suite,
            lines: Vec::new(),
        }
    }

    fn push(&mut self, pass: bool, detail: Value) {
        let case = self.lines.len();
        self.lines.push(CaseLine {
            suite: self.suite.to_string(),
            case,
            pass,
            detail,
        });
    }

    fn finish(self, seed: u64, metrics: Value) -> SuiteReport {
        let passed = self.lines.iter().filter(|c| c.pass).count();
        let total = self.lines.len();
        SuiteReport {
            summary: SuiteSummary {
                suite: self.suite.to_string(),
                seed,
                passed,
                total,
                pass: total > 0 && passed == total,
                metrics,
            },
            cases: self.lines,
        }
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport, SuiteError> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let report = match name {
        "" => return Err(SuiteError::Empty),
        "tree-zero-hyperbolic" => tree_zero_hyperbolic(rng, seed),
        "path-realization" => path_realization(rng, seed),
        "qm-consistency" => qm_consistency(rng, seed),
        "rho-median" => rho_median(rng, seed),
        "fit-roundtrip" => fit_roundtrip(rng, seed),
        "annulus-constant" => annulus_constant(seed),
        "dual-exclusion" => dual_exclusion(rng, seed),
        "finite-sharp" => finite_sharp(seed),
        "padic-sharp3" => padic_sharp3(rng, seed),
        "collapsing-dynamics" => collapsing_dynamics(rng, seed),
        "geodesic-interpolation" => geodesic_interpolation(rng, seed),
        "conical-witness" => conical(rng, seed),
        other => return Err(SuiteError::Unknown(other.to_string())),
    };
    Ok(report)
}

/// 200 random trees with 4 to 10 leaves.
pub fn tree_corpus(rng: &mut ChaCha8Rng, count: usize, max_leaves: usize) -> Vec<MetricTree> {
    (0..count)
        .map(|_| {
            let n = rng.gen_range(4..=max_leaves);
            MetricTree::random(rng, n)
        })
        .collect()
}

fn r(v: Rational) -> Value {
    Value::String(format_rational(&v))
}

fn tree_zero_hyperbolic(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("tree-zero-hyperbolic");
    for t in tree_corpus(&mut rng, 200, 10) {
        let tbl = t.leaf_table();
        match certify_hyperbolic(&tbl, Some(Rational::zero())) {
            Ok(c) => cases.push(c.k.is_zero() && c.violation.is_none(), json!({"leaves": tbl.len(), "k": r(c.k)})),
            Err(e) => cases.push(false, json!({"error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({}))
}

/// Least distance between the vertex sets of the geodesics `xy` and `zw`.
fn path_distance(t: &MetricTree, x: NodeId, y: NodeId, z: NodeId, w: NodeId) -> Rational {
    let p = t.path(x, y).expect("nodes of the tree");
    let q = t.path(z, w).expect("nodes of the tree");
    p.iter()
        .cartesian_product(&q)
        .map(|(&u, &v)| t.distance(u, v).expect("nodes of the tree"))
        .min()
        .expect("paths are nonempty")
}

fn path_realization(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("path-realization");
    let mut checked = 0usize;
    for t in tree_corpus(&mut rng, 200, 10) {
        let leaves = t.leaves();
        let mut bad = None;
        for q in leaves.iter().copied().permutations(4) {
            checked += 1;
            let cr = t.crossratio(q[0], q[1], q[2], q[3]).expect("leaves");
            let pd = path_distance(&t, q[0], q[1], q[2], q[3]);
            if cr != pd {
                bad = Some(json!({"quadruple": q.iter().map(|&v| t.name(v)).collect::<Vec<_>>(), "crossratio": r(cr), "paths": r(pd)}));
                break;
            }
        }
        cases.push(bad.is_none(), bad.unwrap_or(json!({"leaves": leaves.len()})));
    }
    cases.finish(seed, json!({"quadruples": checked}))
}

fn qm_consistency(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("qm-consistency");
    for t in tree_corpus(&mut rng, 200, 10) {
        let leaves = t.leaves();
        let tbl = t.leaf_table();
        let qm = crossratio_from_qm(&QuasimetricSpace::from_tree(&t, &leaves)).expect("at least four leaves");
        let bad = (0..leaves.len())
            .permutations(4)
            .find(|q| tbl.value(q[0], q[1], q[2], q[3]).ok() != qm.value(q[0], q[1], q[2], q[3]).ok());
        cases.push(bad.is_none(), json!({"leaves": leaves.len(), "mismatch": bad}));
    }
    cases.finish(seed, json!({}))
}

/// A ray of the model: a random word of its depth followed by a constant
/// tail.
pub fn random_ray(rng: &mut ChaCha8Rng, t: &RegularTreeModel) -> BoundaryPoint {
    let w: Word = (0..t.depth).map(|l| rng.gen_range(0..t.arity(l))).collect();
    BoundaryPoint::with_tail(w, 0)
}

/// `k` rays pairwise distinguishable at the model depth.
pub fn distinct_rays(rng: &mut ChaCha8Rng, t: &RegularTreeModel, k: usize) -> Vec<BoundaryPoint> {
    loop {
        let rays: Vec<BoundaryPoint> = (0..k).map(|_| random_ray(rng, t)).collect();
        let ok = rays
            .iter()
            .tuple_combinations()
            .all(|(a, b)| !indistinguishable(a, b, t.depth));
        if ok {
            return rays;
        }
    }
}

/// Number of labelings of the quadruple with two positive dual values.
fn dual_violations(values: impl Fn(usize, usize, usize, usize) -> u64) -> usize {
    let pairings = [values(0, 1, 2, 3), values(0, 2, 1, 3), values(0, 3, 1, 2)];
    usize::from(pairings.iter().filter(|&&v| v > 0).count() > 1)
}

fn rho_median_corpus(rng: &mut ChaCha8Rng) -> (RegularTreeModel, Vec<Vec<BoundaryPoint>>) {
    let t = RegularTreeModel::regular(3, 8).expect("valid model");
    let corpus = (0..100).map(|_| distinct_rays(rng, &t, 6)).collect();
    (t, corpus)
}

fn rho_median(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("rho-median");
    let (t, corpus) = rho_median_corpus(&mut rng);
    let mut worst = 0u64;
    for rays in corpus {
        let x = [&rays[0], &rays[1], &rays[2]];
        let y = [&rays[3], &rays[4], &rays[5]];
        let outcome = (|| -> Result<(u64, u64), BoundaryError> {
            let rho = ray_rho(&t, x, y)?;
            let mx = median_of_ends(&t, x[0], x[1], x[2])?;
            let my = median_of_ends(&t, y[0], y[1], y[2])?;
            Ok((rho, vertex_distance(&mx, &my) as u64))
        })();
        match outcome {
            Ok((rho, d)) => {
                worst = worst.max(rho.abs_diff(d));
                cases.push(rho == d, json!({"rho": rho, "median_distance": d}));
            }
            Err(e) => cases.push(false, json!({"error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({"max_deviation": worst}))
}

fn fit_roundtrip(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("fit-roundtrip");
    for t in tree_corpus(&mut rng, 50, 6) {
        let tbl = t.leaf_table();
        match fit_tree(&tbl) {
            Ok(e) => cases.push(e.deviation.is_zero(), json!({"leaves": tbl.len(), "deviation": r(e.deviation)})),
            Err(e) => cases.push(false, json!({"error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({}))
}

/// `({x, y} | {z, w})` in an annulus system.
fn induced(sys: &AnnulusSystem, q: &[usize]) -> u64 {
    let n = sys.universe_len();
    let set = |a: usize, b: usize| {
        let mut s = fixedbitset::FixedBitSet::with_capacity(n);
        s.insert(a);
        s.insert(b);
        s
    };
    separation_count(&set(q[0], q[1]), &set(q[2], q[3]), sys) as u64
}

/// Largest `|induced − geodesic|` over ordered sampled 4-tuples of the
/// depth-`depth` cylinder system of the binary tree, and the number of
/// dual-exclusion violations.
pub fn cylinder_constant(depth: usize) -> (u64, usize) {
    let t = RegularTreeModel::binary(depth).expect("valid model");
    let sys = cylinder_system(&t, depth, depth - 1).expect("valid system");
    let atoms = t.level(depth);
    let rays: Vec<BoundaryPoint> = atoms.iter().map(|w| BoundaryPoint::truncated(w.clone())).collect();
    let sample = check_atoms(atoms.len());
    let mut worst = 0;
    let mut violations = 0;
    for q in sample.iter().copied().permutations(4) {
        let geo = boundary_crossratio(&t, &rays[q[0]], &rays[q[1]], &rays[q[2]], &rays[q[3]]).expect("distinct atoms");
        worst = worst.max(induced(&sys, &q).abs_diff(geo));
    }
    for q in sample.iter().copied().combinations(4) {
        violations += dual_violations(|a, b, c, d| induced(&sys, &[q[a], q[b], q[c], q[d]]));
    }
    (worst, violations)
}

fn annulus_constant(seed: u64) -> SuiteReport {
    let mut cases = Cases::new("annulus-constant");
    let (c6, _) = cylinder_constant(6);
    let (c8, _) = cylinder_constant(8);
    cases.push(true, json!({"depth": 6, "constant": c6}));
    cases.push(c8 == c6, json!({"depth": 8, "constant": c8}));
    cases.finish(seed, json!({"constant": c6}))
}

fn dual_exclusion(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    let mut cases = Cases::new("dual-exclusion");
    let (t, corpus) = rho_median_corpus(&mut rng);
    let mut total = 0;
    for rays in &corpus {
        let mut v = 0;
        for q in rays.iter().combinations(4) {
            v += dual_violations(|a, b, c, d| boundary_crossratio(&t, q[a], q[b], q[c], q[d]).expect("distinct rays"));
        }
        total += v;
        cases.push(v == 0, json!({"source": "boundary", "violations": v}));
    }
    for depth in [6, 8] {
        let (_, v) = cylinder_constant(depth);
        total += v;
        cases.push(v == 0, json!({"source": "annulus", "depth": depth, "violations": v}));
    }
    cases.finish(seed, json!({"violations": total}))
}

fn finite_sharp(seed: u64) -> SuiteReport {
    let mut cases = Cases::new("finite-sharp");
    for q in [2u32, 3, 4, 5, 7, 8, 9] {
        let expected = ((q + 1) * q * (q - 1)) as usize;
        let outcome = pgl2_fq_action(q).and_then(|g| verify_sharp_transitive(&g, 3, DEFAULT_CAP));
        match outcome {
            Ok(c) => {
                let ok = c == crate::finite_sharp::SharpCertificate::Sharp { order: expected, tuples: expected };
                cases.push(ok, json!({"q": q, "certificate": c}));
            }
            Err(e) => cases.push(false, json!({"q": q, "error": e.to_string()})),
        }
    }
    let outcome = NearField::dickson(9).and_then(|nf| {
        let report = nf.report();
        let c = verify_sharp_transitive(&affine_group(&nf), 2, DEFAULT_CAP)?;
        Ok((report, c))
    });
    match outcome {
        Ok((report, c)) => {
            let ok = report.left_distributivity_witness.is_some()
                && c == crate::finite_sharp::SharpCertificate::Sharp { order: 72, tuples: 72 };
            cases.push(ok, json!({"near_field": report, "certificate": c}));
        }
        Err(e) => cases.push(false, json!({"error": e.to_string()})),
    }
    cases.finish(seed, json!({}))
}

/// A point at relative precision `k`, or ∞ one time in eight.
pub fn random_proj_point(rng: &mut ChaCha8Rng, p: u64, k: u32) -> ProjPoint {
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
    let a = Padic::from_parts(p, k, rng.gen_range(0..=2), unit).expect("unit below p^k");
    ProjPoint::from_scalar(&a).expect("nonzero")
}

/// The same point with its digits read as an exact value at precision `prec`.
fn lift(x: &ProjPoint, prec: u32) -> ProjPoint {
    let (u, v) = x.homogeneous();
    let scale = |a: &Padic| match (a.valuation(), a.unit()) {
        (Some(val), Some(unit)) => Padic::from_parts(a.prime(), prec, val, unit).expect("unit fits"),
        _ => Padic::zero(a.prime()),
    };
    ProjPoint::from_homogeneous(&scale(&u), &scale(&v)).expect("nonzero")
}

/// Whether every pair of points differs within the first `k` digits.
pub fn separated(ps: &[ProjPoint], k: i64) -> bool {
    ps.iter().tuple_combinations().all(|(a, b)| {
        let (u1, v1) = a.homogeneous();
        let (u2, v2) = b.homogeneous();
        let d = u1.mul(&v2).and_then(|x| x.sub(&u2.mul(&v1)?));
        d.ok().and_then(|d| d.valuation()).is_some_and(|v| v <= k)
    })
}

fn padic_sharp3(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    const PREC: u32 = 8;
    const DEPTH: usize = 6;
    let mut cases = Cases::new("padic-sharp3");
    for p in [2u64, 3] {
        let (_, ends) = bt_correspondence(p, DEPTH, PREC).expect("prime");
        let mut done = 0;
        while done < 500 {
            let ps: Vec<ProjPoint> = (0..3).map(|_| random_proj_point(&mut rng, p, PREC)).collect();
            if !separated(&ps, (PREC / 2) as i64) {
                continue;
            }
            done += 1;
            let outcome = (|| -> Result<bool, String> {
                let m = solve_sharply3(&ps[0], &ps[1], &ps[2]).map_err(|e| format!("solve: {e}"))?;
                let exact = crate::padic::max_precision(p);
                let lifted: Vec<ProjPoint> = ps.iter().map(|x| lift(x, exact)).collect();
                let ml = solve_sharply3(&lifted[0], &lifted[1], &lifted[2])
                    .map_err(|e| format!("lifted solve: {e}"))?;
                let mut ok = m.proj_eq(&ml).map_err(|e| format!("lift: {e}"))?;
                let g = ends.automorphism(&ml);
                let shift = g.root_shift().map_err(|e| format!("root shift: {e}"))?;
                let std = [
                    ProjPoint::from_i64(p, exact, 0).expect("valid"),
                    ProjPoint::from_i64(p, exact, 1).expect("valid"),
                    ProjPoint::infinity(p),
                ];
                for (s, t) in std.iter().zip(&ps) {
                    ok &= mobius_act(&m, s).map_err(|e| format!("act: {e}"))?.approx_eq(t);
                    let w = s.word(DEPTH + shift).map_err(|e| format!("source word: {e}"))?;
                    let (d, img) = g.image(&w, DEPTH).map_err(|e| format!("tree image: {e}"))?;
                    ok &= d >= DEPTH && img == t.word(DEPTH).map_err(|e| format!("target word: {e}"))?;
                }
                Ok(ok)
            })();
            match outcome {
                Ok(ok) => cases.push(ok, json!({"p": p})),
                Err(e) => cases.push(false, json!({"p": p, "error": e})),
            }
        }
    }
    cases.finish(seed, json!({}))
}

/// A random loxodromic Möbius map over `Q_2` with small integer entries,
/// with its classification at `depth`.
pub fn random_loxodromic(rng: &mut ChaCha8Rng, depth: usize) -> (TreeAutomorphism, crate::tree_boundary::DynamicsClass) {
    loop {
        let e: Vec<i64> = (0..4).map(|_| rng.gen_range(-12..=12)).collect();
        if e[0] * e[3] == e[1] * e[2] {
            continue;
        }
        let Ok(m) = Mobius::from_i64(2, crate::padic::max_precision(2), [[e[0], e[1]], [e[2], e[3]]]) else {
            continue;
        };
        let g = TreeAutomorphism::Mobius { m, depth };
        if let Ok(c) = classify_automorphism(&g) {
            if c.kind == DynamicsKind::Loxodromic {
                return (g, c);
            }
        }
    }
}

fn eventually_decreasing(trace: &[Rational], floor: Rational) -> bool {
    let Some(start) = trace.iter().position(|&v| v <= floor) else {
        return false;
    };
    trace[start..].iter().all(|&v| v <= floor) && trace[..=start].windows(2).all(|w| w[1] <= w[0])
}

fn collapsing_dynamics(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    const DEPTH: usize = 5;
    const REACH: u64 = 4 * DEPTH as u64;
    let base = Rational::new(1, 2);
    let mut cases = Cases::new("collapsing-dynamics");
    for _ in 0..50 {
        let (g, class) = random_loxodromic(&mut rng, DEPTH);
        let outcome = (|| -> Result<Value, BoundaryError> {
            let powers = REACH.div_ceil(class.translation_length.max(1)).max(4) as u32;
            let seq: Vec<TreeAutomorphism> = (1..=powers).map(|i| g.pow(i)).collect::<Result<_, _>>()?;
            let lim = collapsing_limit(&seq, DEPTH, base)?;
            let ger = gerasimov_limit(&seq, 3, DEPTH, base)?;
            let rep = class.repelling.as_ref().map(|x| x.truncate(DEPTH));
            let att = class.attracting.as_ref().map(|x| x.truncate(DEPTH));
            let collapses = lim
                .as_ref()
                .is_some_and(|l| eventually_decreasing(&l.trace, l.floor) && Some(&l.a) == rep.as_ref() && Some(&l.c) == att.as_ref());
            let agrees = ger.p.len() == 1 && ger.q.len() == 1 && Some(&ger.p[0]) == rep.as_ref() && Some(&ger.q[0]) == att.as_ref();
            Ok(json!({
                "translation_length": class.translation_length,
                "powers": powers,
                "repelling": rep.map(|x| x.to_string()),
                "attracting": att.map(|x| x.to_string()),
                "collapses": collapses,
                "gerasimov_agrees": agrees,
            }))
        })();
        match outcome {
            Ok(v) => {
                let ok = v["collapses"] == json!(true) && v["gerasimov_agrees"] == json!(true);
                cases.push(ok, v);
            }
            Err(e) => cases.push(false, json!({"error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({"depth": DEPTH, "reach": REACH}))
}

fn geodesic_interpolation(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    const LENGTH: usize = 10;
    let t = RegularTreeModel::regular(3, 32).expect("valid model");
    let mut cases = Cases::new("geodesic-interpolation");
    let mut done = 0;
    while done < 50 {
        let rays = distinct_rays(&mut rng, &t, 3);
        let (a, b, c) = (&rays[0], &rays[1], &rays[2]);
        let window = match interpolated_ray(&t, a, b, c, LENGTH) {
            Ok(w) => w,
            Err(BoundaryError::WindowTooDeep { .. }) => continue,
            Err(e) => {
                done += 1;
                cases.push(false, json!({"error": e.to_string()}));
                continue;
            }
        };
        done += 1;
        let outcome = (|| -> Result<(u64, u64, Rational), BoundaryError> {
            let mut err = 0;
            for (i, j) in (0..window.len()).tuple_combinations() {
                let v = boundary_crossratio(&t, b, &window[i], a, &window[j])?;
                err = err.max(v.abs_diff((j - i) as u64));
            }
            let rep = ray_triple_geodesic(&t, a, b, &window)?;
            Ok((err, rep.rho_error, rep.centre_deviation))
        })();
        match outcome {
            Ok((err, rho, centre)) => cases.push(
                err == 0 && rho == 0 && centre.is_zero(),
                json!({"interpolation_error": err, "rho_error": rho, "centre_deviation": r(centre)}),
            ),
            Err(e) => cases.push(false, json!({"error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({"window": LENGTH}))
}

/// A periodic end of the model with a random prefix and period.
pub fn random_end(rng: &mut ChaCha8Rng, t: &RegularTreeModel) -> BoundaryPoint {
    let len = rng.gen_range(0..=t.depth);
    let prefix: Word = (0..len).map(|l| rng.gen_range(0..t.arity(l))).collect();
    let plen = rng.gen_range(1..=2);
    let period: Word = (0..plen).map(|_| rng.gen_range(0..t.branching)).collect();
    BoundaryPoint::periodic(prefix, period).expect("nonempty period")
}

fn conical(mut rng: ChaCha8Rng, seed: u64) -> SuiteReport {
    const DEPTH: usize = 6;
    let t = RegularTreeModel::bruhat_tits(2, DEPTH).expect("valid model");
    let g = TreeAutomorphism::Mobius {
        m: Mobius::from_i64(2, 48, [[2, 0], [0, 1]]).expect("invertible"),
        depth: DEPTH,
    };
    let mut cases = Cases::new("conical-witness");
    for _ in 0..20 {
        let x = random_end(&mut rng, &t);
        match conical_witness(&x, &g, DEPTH) {
            Ok(w) => cases.push(
                true,
                json!({"x": x.to_string(), "b": w.b.to_string(), "c": w.c.to_string(), "conjugated": w.conjugated}),
            ),
            Err(e) => cases.push(false, json!({"x": x.to_string(), "error": e.to_string()})),
        }
    }
    cases.finish(seed, json!({"depth": DEPTH}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_and_empty_names() {
        assert_eq!(run_suite("", 7).unwrap_err(), SuiteError::Empty);
        assert_eq!(run_suite("nope", 7).unwrap_err(), SuiteError::Unknown("nope".into()));
    }

    #[test]
    fn reports_are_deterministic() {
        let a = run_suite("rho-median", 7).unwrap().to_json_lines();
        let b = run_suite("rho-median", 7).unwrap().to_json_lines();
        assert_eq!(a, b);
        assert!(a.lines().last().unwrap().contains("\"max_deviation\""));
    }
}
