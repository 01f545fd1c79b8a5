//! Crossratio tables on finite sets and their hyperbolicity certificates.
//!
//! A table stores one value per unordered pair of disjoint unordered pairs,
//! so `(xy|zw) = (yx|zw) = (zw|xy)` holds by construction of the key. Any
//! lookup with a repeated argument returns 0.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{abs_diff, format_rational, parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrValue {
    Finite(Rational),
    /// Stand-in for an unbounded separation count.
    Infinite,
}

impl CrValue {
    pub fn finite(self) -> Option<Rational> {
        match self {
            CrValue::Finite(r) => Some(r),
            CrValue::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CrossratioError {
    #[error("ground set has {got} elements, need at least {need}")]
    GroundTooSmall { got: usize, need: usize },
    #[error("ground set has {got} elements, exhaustive fitting supports at most {max}")]
    GroundTooLarge { got: usize, max: usize },
    #[error("no value for ({0}{1}|{2}{3})")]
    MissingEntry(String, String, String, String),
    #[error("value for ({0}{1}|{2}{3}) is infinite")]
    InfiniteEntry(String, String, String, String),
    #[error("negative value for ({0}{1}|{2}{3})")]
    NegativeEntry(String, String, String, String),
    #[error("conflicting values for ({0}{1}|{2}{3})")]
    ConflictingEntry(String, String, String, String),
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("duplicate ground element {0:?}")]
    DuplicateElement(String),
    #[error("parameters must be distinct")]
    CoincidentParameters,
    #[error("lambda must be greater than 1")]
    LambdaNotAboveOne,
    #[error("malformed table: {0}")]
    Malformed(String),
}

type Key = [u32; 4];

fn key(x: usize, y: usize, z: usize, w: usize) -> Key {
    let p = if x < y { [x, y] } else { [y, x] };
    let q = if z < w { [z, w] } else { [w, z] };
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    [p[0] as u32, p[1] as u32, q[0] as u32, q[1] as u32]
}

fn degenerate(x: usize, y: usize, z: usize, w: usize) -> bool {
    x == y || x == z || x == w || y == z || y == w || z == w
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossratioTable {
    ground: Vec<String>,
    values: HashMap<Key, CrValue>,
}

impl CrossratioTable {
    pub fn new(ground: Vec<String>) -> Result<Self, CrossratioError> {
        let mut seen = BTreeSet::new();
        for g in &ground {
            if !seen.insert(g) {
                return Err(CrossratioError::DuplicateElement(g.clone()));
            }
        }
        Ok(CrossratioTable {
            ground,
            values: HashMap::new(),
        })
    }

    /// Fills every distinct quadruple from `f(x, y, z, w) = (xy|zw)`.
    /// `f` is called once per key in normal form.
    pub fn from_fn(
        ground: Vec<String>,
        mut f: impl FnMut(usize, usize, usize, usize) -> Rational,
    ) -> Self {
        let mut t = CrossratioTable {
            ground,
            values: HashMap::new(),
        };
        let n = t.ground.len();
        for q in (0..n).combinations(4) {
            let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
            for (x, y, z, w) in [(a, b, c, d), (a, c, b, d), (a, d, b, c)] {
                t.values.insert(key(x, y, z, w), CrValue::Finite(f(x, y, z, w)));
            }
        }
        t
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize, CrossratioError> {
        self.ground
            .iter()
            .position(|g| g == label)
            .ok_or_else(|| CrossratioError::UnknownElement(label.to_string()))
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, w: usize, v: CrValue) {
        assert!(!degenerate(x, y, z, w), "degenerate quadruples are fixed at 0");
        self.values.insert(key(x, y, z, w), v);
    }

    fn names(&self, x: usize, y: usize, z: usize, w: usize) -> (String, String, String, String) {
        (
            self.ground[x].clone(),
            self.ground[y].clone(),
            self.ground[z].clone(),
            self.ground[w].clone(),
        )
    }

    pub fn get(&self, x: usize, y: usize, z: usize, w: usize) -> Result<CrValue, CrossratioError> {
        if degenerate(x, y, z, w) {
            return Ok(CrValue::Finite(Rational::zero()));
        }
        self.values.get(&key(x, y, z, w)).copied().ok_or_else(|| {
            let (a, b, c, d) = self.names(x, y, z, w);
            CrossratioError::MissingEntry(a, b, c, d)
        })
    }

    /// Like [`CrossratioTable::get`] but rejects the infinite sentinel.
    pub fn value(&self, x: usize, y: usize, z: usize, w: usize) -> Result<Rational, CrossratioError> {
        match self.get(x, y, z, w)? {
            CrValue::Finite(r) => Ok(r),
            CrValue::Infinite => {
                let (a, b, c, d) = self.names(x, y, z, w);
                Err(CrossratioError::InfiniteEntry(a, b, c, d))
            }
        }
    }

    /// Checks totality and nonnegativity.
    pub fn validate(&self) -> Result<(), CrossratioError> {
        let n = self.len();
        for q in (0..n).combinations(4) {
            let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
            for (x, y, z, w) in [(a, b, c, d), (a, c, b, d), (a, d, b, c)] {
                if let CrValue::Finite(v) = self.get(x, y, z, w)? {
                    if v < Rational::zero() {
                        let (a, b, c, d) = self.names(x, y, z, w);
                        return Err(CrossratioError::NegativeEntry(a, b, c, d));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest finite value in the table (0 when empty).
    pub fn max_value(&self) -> Rational {
        self.values
            .values()
            .filter_map(|v| v.finite())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_json(&self) -> TableJson {
        let mut entries: Vec<(Key, CrValue)> = self.values.iter().map(|(k, v)| (*k, *v)).collect();
        entries.sort_by_key(|e| e.0);
        TableJson {
            ground: self.ground.clone(),
            entries: entries
                .into_iter()
                .map(|(k, v)| {
                    let g = |i: u32| self.ground[i as usize].clone();
                    let val = match v {
                        CrValue::Finite(r) => format_rational(&r),
                        CrValue::Infinite => "inf".to_string(),
                    };
                    (g(k[0]), g(k[1]), g(k[2]), g(k[3]), val)
                })
                .collect(),
        }
    }

    /// Loads a table, normalizing keys. Repeated entries must agree.
    pub fn from_json(j: &TableJson) -> Result<Self, CrossratioError> {
        let mut t = CrossratioTable::new(j.ground.clone())?;
        for (x, y, z, w, v) in &j.entries {
            let (a, b, c, d) = (t.index_of(x)?, t.index_of(y)?, t.index_of(z)?, t.index_of(w)?);
            if degenerate(a, b, c, d) {
                return Err(CrossratioError::Malformed(format!(
                    "entry ({x}{y}|{z}{w}) repeats an element"
                )));
            }
            let val = if v.trim() == "inf" {
                CrValue::Infinite
            } else {
                CrValue::Finite(
                    parse_rational(v).map_err(|e| CrossratioError::Malformed(e.to_string()))?,
                )
            };
            if let Some(prev) = t.values.insert(key(a, b, c, d), val) {
                if prev != val {
                    return Err(CrossratioError::ConflictingEntry(
                        x.clone(),
                        y.clone(),
                        z.clone(),
                        w.clone(),
                    ));
                }
            }
        }
        Ok(t)
    }
}

/// JSON form: `{ground:[labels], entries:[[x,y,z,w,"p/q"],...]}`; the value
/// may also be `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableJson {
    pub ground: Vec<String>,
    pub entries: Vec<(String, String, String, String, String)>,
}

/// Best labeling found for one 4- or 5-element subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetWitness {
    pub subset: Vec<usize>,
    /// The subset written in the order `x, y, z, w[, u]` of the axioms.
    pub labeling: Vec<usize>,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub deviation: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityCertificate {
    #[serde(serialize_with = "crate::rational::serialize")]
    pub k: Rational,
    pub witnesses: Vec<SubsetWitness>,
    /// 4-subsets carrying an infinite value; excluded from `k`.
    pub infinite_quadruples: Vec<[usize; 4]>,
    /// First subset (smallest size, then lexicographic) whose best
    /// deviation exceeds the caller's bound.
    pub violation: Option<SubsetWitness>,
}

/// The least `k` for which the table is `k`-hyperbolic, by exhaustive search
/// over labelings of every 4- and 5-element subset.
pub fn hyperbolicity_constant(
    tbl: &CrossratioTable,
) -> Result<HyperbolicityCertificate, CrossratioError> {
    certify_hyperbolic(tbl, None)
}

/// As [`hyperbolicity_constant`], additionally reporting the first subset
/// whose deviation exceeds `bound`.
pub fn certify_hyperbolic(
    tbl: &CrossratioTable,
    bound: Option<Rational>,
) -> Result<HyperbolicityCertificate, CrossratioError> {
    let n = tbl.len();
    if n < 4 {
        return Err(CrossratioError::GroundTooSmall { got: n, need: 4 });
    }
    let mut witnesses = Vec::new();
    let mut infinite = Vec::new();
    let mut infinite_set = BTreeSet::new();
    let mut k = Rational::zero();
    let mut violation = None;
    let mut note = |w: SubsetWitness, k: &mut Rational, witnesses: &mut Vec<SubsetWitness>| {
        if w.deviation > *k {
            *k = w.deviation;
        }
        if let Some(b) = bound {
            if violation.is_none() && w.deviation > b {
                violation = Some(w.clone());
            }
        }
        witnesses.push(w);
    };

    for q in (0..n).combinations(4) {
        let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
        let pairings = [(a, b, c, d), (a, c, b, d), (a, d, b, c)];
        let mut vals = Vec::with_capacity(3);
        let mut has_inf = false;
        for &(x, y, z, w) in &pairings {
            match tbl.get(x, y, z, w)? {
                CrValue::Finite(v) => vals.push(v),
                CrValue::Infinite => has_inf = true,
            }
        }
        if has_inf {
            infinite.push([a, b, c, d]);
            infinite_set.insert(q.clone());
            continue;
        }
        // The largest pairing plays (xy|zw); the other two must be ≈ 0.
        let big = (0..3).max_by_key(|&i| vals[i]).expect("three pairings");
        let deviation = (0..3)
            .filter(|&i| i != big)
            .map(|i| vals[i])
            .max()
            .expect("two others");
        let (x, y, z, w) = pairings[big];
        note(
            SubsetWitness {
                subset: q.clone(),
                labeling: vec![x, y, z, w],
                deviation,
            },
            &mut k,
            &mut witnesses,
        );
    }

    for s in (0..n).combinations(5) {
        if s.iter().copied().combinations(4).any(|q| infinite_set.contains(&q)) {
            continue;
        }
        let w = best_five_labeling(tbl, &s)?;
        note(w, &mut k, &mut witnesses);
    }

    Ok(HyperbolicityCertificate {
        k,
        witnesses,
        infinite_quadruples: infinite,
        violation,
    })
}

fn local_key(a: usize, b: usize, c: usize, d: usize) -> usize {
    let k = key(a, b, c, d);
    ((k[0] * 5 + k[1]) * 5 + k[2]) as usize * 5 + k[3] as usize
}

fn best_five_labeling(tbl: &CrossratioTable, s: &[usize]) -> Result<SubsetWitness, CrossratioError> {
    // Local values indexed by the normal-form key over positions 0..5.
    let mut local = vec![Rational::zero(); 625];
    let mut keys = Vec::with_capacity(15);
    for q in (0..5).combinations(4) {
        let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
        for (x, y, z, w) in [(a, b, c, d), (a, c, b, d), (a, d, b, c)] {
            let lk = local_key(x, y, z, w);
            local[lk] = tbl.value(s[x], s[y], s[z], s[w])?;
            keys.push(lk);
        }
    }
    let v = |a, b, c, d| local[local_key(a, b, c, d)];
    let mut best: Option<(Rational, Vec<usize>)> = None;
    for p in (0..5).permutations(5) {
        let (x, y, z, w, u) = (p[0], p[1], p[2], p[3], p[4]);
        let named = [
            local_key(x, y, z, u),
            local_key(x, y, w, u),
            local_key(x, u, z, w),
            local_key(y, u, z, w),
            local_key(x, y, z, w),
        ];
        let mut dev = abs_diff(v(x, y, z, u), v(x, y, w, u))
            .max(abs_diff(v(x, u, z, w), v(y, u, z, w)))
            .max(abs_diff(v(x, y, z, w), v(x, y, z, u) + v(x, u, z, w)));
        for &k in &keys {
            if !named.contains(&k) {
                dev = dev.max(local[k]);
            }
        }
        if best.as_ref().is_none_or(|(b, _)| dev < *b) {
            best = Some((dev, p.iter().map(|&i| s[i]).collect()));
        }
    }
    let (deviation, labeling) = best.expect("120 labelings");
    Ok(SubsetWitness {
        subset: s.to_vec(),
        labeling,
        deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainWitness {
    /// `(x, y, z, w)` in the order of the property.
    pub quadruple: [usize; 4],
    /// `y = u₀, …, u_n = w`.
    pub chain: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathPropertyReport {
    pub holds: bool,
    pub witnesses: Vec<ChainWitness>,
    pub failure: Option<[usize; 4]>,
}

/// Checks that every ordered distinct `(x, y, z, w)` admits a chain
/// `y = u₀, …, u_n = w` of distinct ground elements with
/// `(x u_i | z u_j) ≈_p j − i` for all `0 ≤ i < j ≤ n`.
pub fn check_path_property(
    tbl: &CrossratioTable,
    p: Rational,
) -> Result<PathPropertyReport, CrossratioError> {
    let n = tbl.len();
    let mut witnesses = Vec::new();
    for quad in (0..n).permutations(4) {
        let q = [quad[0], quad[1], quad[2], quad[3]];
        let mut chain = vec![q[1]];
        let mut used = vec![false; n];
        used[q[1]] = true;
        if find_chain(tbl, p, q, &mut chain, &mut used)? {
            witnesses.push(ChainWitness {
                quadruple: q,
                chain,
            });
        } else {
            return Ok(PathPropertyReport {
                holds: false,
                witnesses,
                failure: Some(q),
            });
        }
    }
    Ok(PathPropertyReport {
        holds: true,
        witnesses,
        failure: None,
    })
}

fn find_chain(
    tbl: &CrossratioTable,
    p: Rational,
    q: [usize; 4],
    chain: &mut Vec<usize>,
    used: &mut [bool],
) -> Result<bool, CrossratioError> {
    let [x, _, z, w] = q;
    let j = chain.len();
    for u in 0..tbl.len() {
        if used[u] {
            continue;
        }
        let mut ok = true;
        for (i, &ui) in chain.iter().enumerate() {
            let target = Rational::from_integer((j - i) as i64);
            if abs_diff(tbl.value(x, ui, z, u)?, target) > p {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        chain.push(u);
        if u == w {
            return Ok(true);
        }
        used[u] = true;
        if find_chain(tbl, p, q, chain, used)? {
            return Ok(true);
        }
        used[u] = false;
        chain.pop();
    }
    Ok(false)
}

/// Entry `λ^{−e}` of the quasi-ultrametric, kept symbolic in `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuEntry {
    Zero,
    /// `λ^{−exponent}`.
    Power(Rational),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiUltrametric {
    pub lambda: Rational,
    /// Ground indices of the rows/columns (ground set minus `a`, `b`).
    pub points: Vec<usize>,
    pub entries: Vec<Vec<QuEntry>>,
}

impl QuasiUltrametric {
    /// Exact value when the exponent is an integer.
    pub fn exact(&self, i: usize, j: usize) -> Option<Rational> {
        match self.entries[i][j] {
            QuEntry::Zero => Some(Rational::zero()),
            QuEntry::Power(e) if e.is_integer() => {
                let e = e.to_integer();
                let base = crate::rational::pow(self.lambda, e.unsigned_abs() as u32);
                Some(if e >= 0 { base.recip() } else { base })
            }
            QuEntry::Power(_) => None,
        }
    }

    pub fn approx(&self, i: usize, j: usize) -> f64 {
        match self.entries[i][j] {
            QuEntry::Zero => 0.0,
            QuEntry::Power(e) => {
                let l = self.lambda.to_f64().unwrap_or(f64::NAN);
                l.powf(-e.to_f64().unwrap_or(f64::NAN))
            }
        }
    }
}

/// `λ^{−(ab|xy)}` over the ground set minus `{a, b}`, 0 on the diagonal.
pub fn quasi_ultrametric_matrix(
    tbl: &CrossratioTable,
    a: usize,
    b: usize,
    lambda: Rational,
) -> Result<QuasiUltrametric, CrossratioError> {
    if a == b {
        return Err(CrossratioError::CoincidentParameters);
    }
    if lambda <= Rational::from_integer(1) {
        return Err(CrossratioError::LambdaNotAboveOne);
    }
    let points: Vec<usize> = (0..tbl.len()).filter(|&i| i != a && i != b).collect();
    let mut entries = vec![vec![QuEntry::Zero; points.len()]; points.len()];
    for (i, &x) in points.iter().enumerate() {
        for (j, &y) in points.iter().enumerate() {
            if i != j {
                entries[i][j] = match tbl.get(a, b, x, y)? {
                    CrValue::Finite(e) => QuEntry::Power(e),
                    CrValue::Infinite => QuEntry::Zero,
                };
            }
        }
    }
    Ok(QuasiUltrametric {
        lambda,
        points,
        entries,
    })
}

/// `D_ab(x, r) = {x} ∪ {y ∉ {a,b,x} : (ab|xy) ≥ r}`.
pub fn cr_ball(
    tbl: &CrossratioTable,
    a: usize,
    b: usize,
    x: usize,
    r: Rational,
) -> Result<BTreeSet<usize>, CrossratioError> {
    if a == b || a == x || b == x {
        return Err(CrossratioError::CoincidentParameters);
    }
    let mut out = BTreeSet::from([x]);
    for y in 0..tbl.len() {
        if y == a || y == b || y == x {
            continue;
        }
        let inside = match tbl.get(a, b, x, y)? {
            CrValue::Finite(v) => v >= r,
            CrValue::Infinite => true,
        };
        if inside {
            out.insert(y);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_tree::{h_tree, star, MetricTree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn single_four(v1: i64, v2: i64, v3: i64) -> CrossratioTable {
        let mut t = CrossratioTable::new(["x", "y", "z", "w"].map(String::from).to_vec()).unwrap();
        t.set(0, 1, 2, 3, CrValue::Finite(r(v1)));
        t.set(0, 2, 1, 3, CrValue::Finite(r(v2)));
        t.set(0, 3, 1, 2, CrValue::Finite(r(v3)));
        t
    }

    #[test]
    fn key_symmetry() {
        let h = h_tree().leaf_table();
        assert_eq!(h.get(0, 1, 2, 3), h.get(1, 0, 2, 3));
        assert_eq!(h.get(0, 1, 2, 3), h.get(2, 3, 0, 1));
        assert_eq!(h.get(0, 1, 0, 2).unwrap(), CrValue::Finite(r(0)));
    }

    #[test]
    fn tree_tables_are_zero_hyperbolic() {
        assert_eq!(hyperbolicity_constant(&h_tree().leaf_table()).unwrap().k, r(0));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 4..=8 {
            let t = MetricTree::random(&mut rng, n);
            assert_eq!(hyperbolicity_constant(&t.leaf_table()).unwrap().k, r(0));
        }
    }

    #[test]
    fn two_large_pairings_give_k3() {
        let c = hyperbolicity_constant(&single_four(0, 3, 3)).unwrap();
        assert_eq!(c.k, r(3));
        let c = certify_hyperbolic(&single_four(0, 3, 3), Some(r(2))).unwrap();
        assert_eq!(c.violation.unwrap().deviation, r(3));
    }

    #[test]
    fn too_small_or_missing() {
        let t = CrossratioTable::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        assert!(matches!(
            hyperbolicity_constant(&t),
            Err(CrossratioError::GroundTooSmall { got: 3, need: 4 })
        ));
        let t = CrossratioTable::new(["a", "b", "c", "d"].map(String::from).to_vec()).unwrap();
        assert!(matches!(
            hyperbolicity_constant(&t),
            Err(CrossratioError::MissingEntry(..))
        ));
    }

    #[test]
    fn infinite_entries_reported_separately() {
        let mut t = single_four(1, 0, 0);
        t.set(0, 2, 1, 3, CrValue::Infinite);
        let c = hyperbolicity_constant(&t).unwrap();
        assert_eq!(c.infinite_quadruples, vec![[0, 1, 2, 3]]);
        assert_eq!(c.k, r(0));
    }

    #[test]
    fn path_property_examples() {
        let h = h_tree().leaf_table();
        assert!(!check_path_property(&h, r(0)).unwrap().holds);
        let zero = single_four(0, 0, 0);
        // Direct chain y, w needs (xy|zw) ≈ 1.
        assert!(!check_path_property(&zero, r(0)).unwrap().holds);
        let rep = check_path_property(&zero, r(1)).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.witnesses.len(), 24);
    }

    #[test]
    fn quasi_ultrametric_entries() {
        let h = h_tree().leaf_table();
        let q = quasi_ultrametric_matrix(&h, 2, 3, r(2)).unwrap();
        assert_eq!(q.points, vec![0, 1]);
        assert_eq!(q.exact(0, 1), Some(Rational::new(1, 2)));
        assert_eq!(q.exact(0, 0), Some(r(0)));
        let z = quasi_ultrametric_matrix(&single_four(0, 2, 0), 0, 1, r(2)).unwrap();
        assert_eq!(z.exact(0, 1), Some(r(1)));
        let z = quasi_ultrametric_matrix(&single_four(2, 0, 0), 0, 1, r(2)).unwrap();
        assert_eq!(z.exact(0, 1), Some(Rational::new(1, 4)));
        assert!(quasi_ultrametric_matrix(&h, 1, 1, r(2)).is_err());
        assert!(quasi_ultrametric_matrix(&h, 0, 1, r(1)).is_err());
    }

    #[test]
    fn cr_ball_examples() {
        let h = h_tree().leaf_table();
        assert_eq!(cr_ball(&h, 2, 3, 0, r(1)).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(cr_ball(&h, 2, 3, 0, r(0)).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(cr_ball(&h, 2, 3, 0, r(5)).unwrap(), BTreeSet::from([0]));
        assert!(cr_ball(&h, 2, 2, 0, r(0)).is_err());
        let s = star(6).leaf_table();
        assert_eq!(cr_ball(&s, 0, 1, 2, r(0)).unwrap().len(), 4);
    }

    #[test]
    fn json_round_trip_and_conflicts() {
        let h = h_tree().leaf_table();
        let back = CrossratioTable::from_json(&h.to_json()).unwrap();
        assert_eq!(back, h);
        let bad = TableJson {
            ground: ["a", "b", "c", "d"].map(String::from).to_vec(),
            entries: vec![
                ("a".into(), "b".into(), "c".into(), "d".into(), "1/1".into()),
                ("d".into(), "c".into(), "b".into(), "a".into(), "2/1".into()),
            ],
        };
        assert!(matches!(
            CrossratioTable::from_json(&bad),
            Err(CrossratioError::ConflictingEntry(..))
        ));
    }
}
