//! Finite quasimetric spaces, their crossratios, the quasimetric on distinct
//! triples and k-geodesic search.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::crossratio::{CrossratioError, CrossratioTable};
use crate::metric_tree::{MetricTree, NodeId};
use crate::rational::{abs_diff, RatStr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QmError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has {rows} rows for {points} points")]
    Dimension { rows: usize, points: usize },
    #[error("rho({0}, {1}) != rho({1}, {0})")]
    NotSymmetric(usize, usize),
    #[error("rho({0}, {1}) is negative")]
    Negative(usize, usize),
    #[error("rho({0}, {0}) is not zero")]
    NonzeroDiagonal(usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("duplicate point {0:?}")]
    DuplicatePoint(String),
    #[error("no value for rho({0}, {1})")]
    MissingPair(String, String),
    #[error("conflicting values for rho({0}, {1})")]
    ConflictingPair(String, String),
    #[error("triple {0:?} repeats an element")]
    DegenerateTriple([usize; 3]),
    #[error(transparent)]
    Table(#[from] CrossratioError),
}

/// Least `k ≥ 0` with `ρ(x,y) ≤ ρ(x,z) + ρ(z,y) + k` for all `x, y, z`.
pub fn qm_defect(m: &[Vec<Rational>]) -> Result<Rational, QmError> {
    let n = m.len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(QmError::NotSquare);
        }
        if !row[i].is_zero() {
            return Err(QmError::NonzeroDiagonal(i));
        }
        for j in 0..n {
            if row[j] < Rational::zero() {
                return Err(QmError::Negative(i, j));
            }
            if row[j] != m[j][i] {
                return Err(QmError::NotSymmetric(i, j));
            }
        }
    }
    let mut k = Rational::zero();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                k = k.max(m[x][y] - m[x][z] - m[z][y]);
            }
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasimetricSpace {
    points: Vec<String>,
    rho: Vec<Vec<Rational>>,
    defect: Rational,
}

impl QuasimetricSpace {
    pub fn new(points: Vec<String>, rho: Vec<Vec<Rational>>) -> Result<Self, QmError> {
        if rho.len() != points.len() {
            return Err(QmError::Dimension {
                rows: rho.len(),
                points: points.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &points {
            if !seen.insert(p) {
                return Err(QmError::DuplicatePoint(p.clone()));
            }
        }
        let defect = qm_defect(&rho)?;
        Ok(QuasimetricSpace {
            points,
            rho,
            defect,
        })
    }

    /// Restriction of a tree metric to `nodes`.
    pub fn from_tree(tree: &MetricTree, nodes: &[NodeId]) -> Self {
        let points = nodes.iter().map(|&v| tree.name(v).to_string()).collect();
        let rho = nodes
            .iter()
            .map(|&u| {
                nodes
                    .iter()
                    .map(|&v| tree.distance(u, v).expect("nodes belong to the tree"))
                    .collect()
            })
            .collect();
        QuasimetricSpace::new(points, rho).expect("tree metrics are metrics")
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn defect(&self) -> Rational {
        self.defect
    }

    pub fn rho(&self, i: usize, j: usize) -> Rational {
        self.rho[i][j]
    }

    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.rho
    }

    pub fn index_of(&self, label: &str) -> Result<usize, QmError> {
        self.points
            .iter()
            .position(|p| p == label)
            .ok_or_else(|| QmError::UnknownPoint(label.to_string()))
    }

    pub fn to_json(&self) -> QmJson {
        let mut rho = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                rho.push((self.points[i].clone(), self.points[j].clone(), RatStr(self.rho[i][j])));
            }
        }
        QmJson {
            points: self.points.clone(),
            rho,
        }
    }

    /// Every off-diagonal pair must be given in at least one order.
    pub fn from_json(j: &QmJson) -> Result<Self, QmError> {
        let n = j.points.len();
        let idx = |s: &str| {
            j.points
                .iter()
                .position(|p| p == s)
                .ok_or_else(|| QmError::UnknownPoint(s.to_string()))
        };
        let mut given: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (a, b, v) in &j.rho {
            let (i, k) = (idx(a)?, idx(b)?);
            if i == k {
                if !v.0.is_zero() {
                    return Err(QmError::NonzeroDiagonal(i));
                }
                continue;
            }
            let key = (i.min(k), i.max(k));
            if let Some(prev) = given.insert(key, v.0) {
                if prev != v.0 {
                    return Err(QmError::ConflictingPair(a.clone(), b.clone()));
                }
            }
        }
        let mut rho = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for k in i + 1..n {
                let v = *given.get(&(i, k)).ok_or_else(|| {
                    QmError::MissingPair(j.points[i].clone(), j.points[k].clone())
                })?;
                rho[i][k] = v;
                rho[k][i] = v;
            }
        }
        QuasimetricSpace::new(j.points.clone(), rho)
    }
}

/// JSON form `{points:[...], rho:[["x","y","p/q"],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmJson {
    pub points: Vec<String>,
    pub rho: Vec<(String, String, RatStr)>,
}

/// `(xy|zw)_ρ = ½[max{ρ(x,y)+ρ(z,w), ρ(x,z)+ρ(y,w), ρ(x,w)+ρ(y,z)} − ρ(x,y) − ρ(z,w)]`.
pub fn qm_crossratio(q: &QuasimetricSpace, x: usize, y: usize, z: usize, w: usize) -> Rational {
    if x == y || x == z || x == w || y == z || y == w || z == w {
        return Rational::zero();
    }
    let a = q.rho(x, y) + q.rho(z, w);
    let b = q.rho(x, z) + q.rho(y, w);
    let c = q.rho(x, w) + q.rho(y, z);
    (a.max(b).max(c) - a) / 2
}

pub fn crossratio_from_qm(q: &QuasimetricSpace) -> Result<CrossratioTable, QmError> {
    if q.len() < 4 {
        return Err(QmError::TooFewPoints {
            got: q.len(),
            need: 4,
        });
    }
    Ok(CrossratioTable::from_fn(q.points.clone(), |x, y, z, w| {
        qm_crossratio(q, x, y, z, w)
    }))
}

/// `ρ(X, Y)`: the largest `(x_i x_j | y_m y_n)` over the nine choices of a
/// pair from each triple. Terms with a repeated element count as 0.
pub fn triple_distance(
    tbl: &CrossratioTable,
    x: [usize; 3],
    y: [usize; 3],
) -> Result<Rational, QmError> {
    for t in [x, y] {
        if t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
            return Err(QmError::DegenerateTriple(t));
        }
    }
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut best = Rational::zero();
    for (i, j) in PAIRS {
        for (m, n) in PAIRS {
            best = best.max(tbl.value(x[i], x[j], y[m], y[n])?);
        }
    }
    Ok(best)
}

/// The quasimetric space of the given distinct triples of `tbl`'s ground set.
/// Triple `[a, b, c]` is labelled `"a,b,c"`.
pub fn rho_on_triples(
    tbl: &CrossratioTable,
    triples: &[[usize; 3]],
) -> Result<QuasimetricSpace, QmError> {
    if tbl.len() < 3 {
        return Err(QmError::TooFewPoints {
            got: tbl.len(),
            need: 3,
        });
    }
    let n = triples.len();
    let mut rho = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = triple_distance(tbl, triples[i], triples[j])?;
            rho[i][j] = v;
            rho[j][i] = v;
        }
    }
    if n == 1 {
        triple_distance(tbl, triples[0], triples[0])?;
    }
    let g = tbl.ground();
    let labels = triples
        .iter()
        .map(|t| format!("{},{},{}", g[t[0]], g[t[1]], g[t[2]]))
        .collect();
    QuasimetricSpace::new(labels, rho)
}

/// All distinct unordered triples of `0..n` in lexicographic order.
pub fn all_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicSegment {
    pub points: Vec<usize>,
    pub k: Rational,
}

impl GeodesicSegment {
    /// Recheck `ρ(x_i, x_j) ≈_k |i − j|` for all index pairs.
    pub fn verify(&self, q: &QuasimetricSpace) -> bool {
        let p = &self.points;
        (0..p.len()).all(|i| {
            (0..p.len()).all(|j| {
                let d = Rational::from_integer((i as i64 - j as i64).abs());
                abs_diff(q.rho(p[i], p[j]), d) <= self.k
            })
        })
    }
}

/// Shortest `k`-geodesic segment of distinct points from `x` to `y`, found by
/// exhaustive search over admissible lengths in increasing order.
pub fn find_geodesic_segment(
    q: &QuasimetricSpace,
    k: Rational,
    x: usize,
    y: usize,
) -> Result<Option<GeodesicSegment>, QmError> {
    for v in [x, y] {
        if v >= q.len() {
            return Err(QmError::UnknownPoint(v.to_string()));
        }
    }
    if x == y {
        return Ok(Some(GeodesicSegment {
            points: vec![x],
            k,
        }));
    }
    let d = q.rho(x, y);
    for n in 1..q.len() {
        let target = Rational::from_integer(n as i64);
        if abs_diff(d, target) > k {
            continue;
        }
        let mut seq = vec![x];
        let mut used = vec![false; q.len()];
        used[x] = true;
        if extend(q, k, y, n, &mut seq, &mut used) {
            return Ok(Some(GeodesicSegment { points: seq, k }));
        }
    }
    Ok(None)
}

fn extend(
    q: &QuasimetricSpace,
    k: Rational,
    y: usize,
    n: usize,
    seq: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    let j = seq.len();
    if j == n {
        if fits(q, k, seq, y) {
            seq.push(y);
            return true;
        }
        return false;
    }
    let to_end = Rational::from_integer((n - j) as i64);
    for c in 0..q.len() {
        if used[c] || c == y || abs_diff(q.rho(c, y), to_end) > k || !fits(q, k, seq, c) {
            continue;
        }
        seq.push(c);
        used[c] = true;
        if extend(q, k, y, n, seq, used) {
            return true;
        }
        used[c] = false;
        seq.pop();
    }
    false
}

/// Whether `c` can follow `seq` at index `seq.len()`.
fn fits(q: &QuasimetricSpace, k: Rational, seq: &[usize], c: usize) -> bool {
    let j = seq.len();
    seq.iter()
        .enumerate()
        .all(|(i, &p)| abs_diff(q.rho(p, c), Rational::from_integer((j - i) as i64)) <= k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_tree::h_tree;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn line(n: usize) -> QuasimetricSpace {
        let pts = (0..n).map(|i| i.to_string()).collect();
        let m = (0..n)
            .map(|i| (0..n).map(|j| r((i as i64 - j as i64).abs())).collect())
            .collect();
        QuasimetricSpace::new(pts, m).unwrap()
    }

    #[test]
    fn defect_examples() {
        assert_eq!(line(5).defect(), r(0));
        let m = vec![
            vec![r(0), r(5), r(1)],
            vec![r(5), r(0), r(1)],
            vec![r(1), r(1), r(0)],
        ];
        assert_eq!(qm_defect(&m).unwrap(), r(3));
        assert_eq!(qm_defect(&[vec![r(0)]]).unwrap(), r(0));
        assert!(matches!(
            qm_defect(&[vec![r(0), r(1)], vec![r(2), r(0)]]),
            Err(QmError::NotSymmetric(0, 1))
        ));
        assert!(matches!(qm_defect(&[vec![r(1)]]), Err(QmError::NonzeroDiagonal(0))));
    }

    #[test]
    fn h_tree_crossratio() {
        let t = h_tree();
        let q = QuasimetricSpace::from_tree(&t, &t.leaves());
        let c = crossratio_from_qm(&q).unwrap();
        assert_eq!(c.value(0, 1, 2, 3).unwrap(), r(1));
        assert_eq!(c.value(0, 2, 1, 3).unwrap(), r(0));
        assert_eq!(qm_crossratio(&q, 0, 0, 2, 3), r(0));
    }

    #[test]
    fn equidistant_points() {
        let m = (0..4)
            .map(|i| (0..4).map(|j| if i == j { r(0) } else { r(2) }).collect())
            .collect();
        let q = QuasimetricSpace::new((0..4).map(|i| i.to_string()).collect(), m).unwrap();
        let c = crossratio_from_qm(&q).unwrap();
        assert_eq!(c.max_value(), r(0));
    }

    #[test]
    fn triple_distance_symmetries() {
        let t = h_tree().leaf_table();
        assert_eq!(triple_distance(&t, [0, 1, 2], [0, 1, 2]).unwrap(), r(0));
        let a = triple_distance(&t, [0, 1, 2], [1, 2, 3]).unwrap();
        assert_eq!(triple_distance(&t, [2, 0, 1], [3, 1, 2]).unwrap(), a);
        assert!(triple_distance(&t, [0, 0, 1], [1, 2, 3]).is_err());
        let s = rho_on_triples(&t, &all_triples(4)).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.points()[0], "x,y,z");
    }

    #[test]
    fn geodesics_on_a_line() {
        let q = line(6);
        let g = find_geodesic_segment(&q, r(0), 0, 5).unwrap().unwrap();
        assert_eq!(g.points, vec![0, 1, 2, 3, 4, 5]);
        assert!(g.verify(&q));
        let g = find_geodesic_segment(&q, r(0), 3, 3).unwrap().unwrap();
        assert_eq!(g.points, vec![3]);
        let two = QuasimetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![r(0), r(10)], vec![r(10), r(0)]],
        )
        .unwrap();
        assert_eq!(find_geodesic_segment(&two, r(1), 0, 1).unwrap(), None);
    }

    #[test]
    fn json_round_trip() {
        let q = line(4);
        assert_eq!(QuasimetricSpace::from_json(&q.to_json()).unwrap(), q);
        let mut j = q.to_json();
        j.rho.pop();
        assert!(matches!(QuasimetricSpace::from_json(&j), Err(QmError::MissingPair(..))));
    }
}
