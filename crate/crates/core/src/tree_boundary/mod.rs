//! Rooted locally finite trees with a depth cap, their ends, and the
//! geodesic crossratio on ends.
//!
//! Vertices are words over child indices; the root is the empty word. The
//! root may have a different number of children from the other vertices,
//! which makes `(d, d − 1)` the `d`-regular tree.

mod automorphism;
mod dynamics;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::crossratio::CrossratioTable;
use crate::metric_tree::{MetricTree, NodeId};
use crate::padic::PadicError;
use crate::rational::{pow, Rational};

pub use automorphism::{
    classify_automorphism, cylinder_image, CylinderImage, DynamicsClass, DynamicsKind,
    TreeAutomorphism,
};
pub use dynamics::{
    collapsing_limit, conical_witness, gerasimov_limit, hausdorff_to_sharp, CollapsingLimit,
    ConicalWitness, GerasimovLimit, GraphAtResolution,
};

pub type Word = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoundaryError {
    #[error("invalid tree model: {0}")]
    InvalidModel(String),
    #[error("letter {letter} at position {pos} exceeds the branching")]
    LetterOutOfRange { pos: usize, letter: u32 },
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("rays {0} and {1} are indistinguishable at depth {2}")]
    Indistinguishable(String, String, usize),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("at most {max} points supported, got {got}")]
    TooManyPoints { got: usize, max: usize },
    #[error("cannot parse boundary point {0:?}")]
    Parse(String),
    #[error("parameters must be distinct")]
    CoincidentParameters,
    #[error("window needs depth {needed}, model depth is {depth}")]
    WindowTooDeep { needed: usize, depth: usize },
    #[error("no free direction at position {0} of the geodesic")]
    NoFreeDirection(i64),
    #[error("ray {0} is not known to depth {1}")]
    TooShort(String, usize),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("automorphism is not loxodromic")]
    NotLoxodromic,
    #[error("cannot decide at depth {0}")]
    Undecided(usize),
    #[error("depth {0} is too small")]
    DepthTooSmall(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("no pair of sets within budget {0}")]
    BudgetExhausted(usize),
    #[error("conical witness fails at cylinder {0}")]
    WitnessFailed(String),
}

/// Rooted tree, the root has `root_branching` children and every other
/// vertex `branching` children. Balls are materialized to `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegularTreeModel {
    pub root_branching: u32,
    pub branching: u32,
    pub depth: usize,
}

impl RegularTreeModel {
    pub fn new(root_branching: u32, branching: u32, depth: usize) -> Result<Self, BoundaryError> {
        if root_branching < 2 || branching < 2 {
            return Err(BoundaryError::InvalidModel("branching must be at least 2".into()));
        }
        if depth < 1 {
            return Err(BoundaryError::InvalidModel("depth must be at least 1".into()));
        }
        Ok(RegularTreeModel {
            root_branching,
            branching,
            depth,
        })
    }

    /// Rooted binary tree: every vertex has two children.
    pub fn binary(depth: usize) -> Result<Self, BoundaryError> {
        RegularTreeModel::new(2, 2, depth)
    }

    /// The unrooted `degree`-regular tree seen from a base vertex.
    pub fn regular(degree: u32, depth: usize) -> Result<Self, BoundaryError> {
        RegularTreeModel::new(degree, degree.saturating_sub(1), depth)
    }

    /// Bruhat–Tits tree of PGL₂(Q_p).
    pub fn bruhat_tits(p: u32, depth: usize) -> Result<Self, BoundaryError> {
        RegularTreeModel::new(p + 1, p, depth)
    }

    pub fn with_depth(self, depth: usize) -> Self {
        RegularTreeModel { depth, ..self }
    }

    pub fn arity(&self, level: usize) -> u32 {
        if level == 0 {
            self.root_branching
        } else {
            self.branching
        }
    }

    pub fn is_vertex(&self, w: &[u32]) -> bool {
        w.iter().enumerate().all(|(i, &l)| l < self.arity(i))
    }

    pub fn children(&self, w: &[u32]) -> Vec<Word> {
        (0..self.arity(w.len()))
            .map(|l| {
                let mut c = w.to_vec();
                c.push(l);
                c
            })
            .collect()
    }

    /// All vertices at `level`, in lexicographic order.
    pub fn level(&self, level: usize) -> Vec<Word> {
        let mut out = vec![Vec::new()];
        for l in 0..level {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..self.arity(l)).map(move |c| {
                        let mut v = w.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Vertices of the ball of radius `depth` around the root.
    pub fn ball(&self) -> Vec<Word> {
        (0..=self.depth).flat_map(|l| self.level(l)).collect()
    }

    pub fn validate_point(&self, x: &BoundaryPoint) -> Result<(), BoundaryError> {
        let check = |pos: usize, letter: u32| {
            if letter < self.arity(pos) {
                Ok(())
            } else {
                Err(BoundaryError::LetterOutOfRange { pos, letter })
            }
        };
        for (i, &l) in x.prefix.iter().enumerate() {
            check(i, l)?;
        }
        for (i, &l) in x.period.iter().enumerate() {
            check(x.prefix.len() + i, l)?;
        }
        Ok(())
    }
}

pub fn common_prefix_len(u: &[u32], v: &[u32]) -> usize {
    u.iter().zip(v).take_while(|(a, b)| a == b).count()
}

/// Graph distance between vertices.
pub fn vertex_distance(u: &[u32], v: &[u32]) -> usize {
    u.len() + v.len() - 2 * common_prefix_len(u, v)
}

/// `^` followed by the letters, used as a node name.
pub fn vertex_name(w: &[u32]) -> String {
    let mut s = String::from("^");
    for &l in w {
        s.push(letter_char(l));
    }
    s
}

fn letter_char(l: u32) -> char {
    char::from_digit(l, 36).unwrap_or('?')
}

/// An end of the tree: an eventually periodic word, or a word known only
/// to a finite depth when `period` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryPoint {
    prefix: Word,
    period: Word,
}

impl BoundaryPoint {
    pub fn periodic(prefix: Word, period: Word) -> Result<Self, BoundaryError> {
        if period.is_empty() {
            return Err(BoundaryError::EmptyPeriod);
        }
        Ok(BoundaryPoint { prefix, period })
    }

    /// Constant tail `prefix` followed by `letter` forever.
    pub fn with_tail(prefix: Word, letter: u32) -> Self {
        BoundaryPoint {
            prefix,
            period: vec![letter],
        }
    }

    pub fn truncated(word: Word) -> Self {
        BoundaryPoint {
            prefix: word,
            period: Vec::new(),
        }
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    pub fn is_truncated(&self) -> bool {
        self.period.is_empty()
    }

    /// Number of known letters; `None` when infinite.
    pub fn known_len(&self) -> Option<usize> {
        self.is_truncated().then_some(self.prefix.len())
    }

    pub fn letter(&self, i: usize) -> Option<u32> {
        if i < self.prefix.len() {
            Some(self.prefix[i])
        } else if self.period.is_empty() {
            None
        } else {
            Some(self.period[(i - self.prefix.len()) % self.period.len()])
        }
    }

    /// The first `n` letters, if known.
    pub fn take(&self, n: usize) -> Option<Word> {
        (0..n).map(|i| self.letter(i)).collect()
    }

    /// As [`BoundaryPoint::take`] with an error naming the point.
    pub fn word(&self, n: usize) -> Result<Word, BoundaryError> {
        self.take(n)
            .ok_or_else(|| BoundaryError::TooShort(self.to_string(), n))
    }

    /// Truncation to `n` letters (or fewer when fewer are known).
    pub fn truncate(&self, n: usize) -> BoundaryPoint {
        let n = self.known_len().map_or(n, |k| k.min(n));
        BoundaryPoint::truncated(self.take(n).expect("within known length"))
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.prefix {
            write!(f, "{}", letter_char(l))?;
        }
        if !self.period.is_empty() {
            write!(f, "(")?;
            for &l in &self.period {
                write!(f, "{}", letter_char(l))?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl FromStr for BoundaryPoint {
    type Err = BoundaryError;

    /// `"01(1)"` is `0 1 1 1 …`; `"011"` is a truncated ray.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BoundaryError::Parse(s.to_string());
        let letters = |t: &str| -> Result<Word, BoundaryError> {
            t.chars().map(|c| c.to_digit(36).ok_or_else(err)).collect()
        };
        let s = s.trim();
        match s.find('(') {
            None => Ok(BoundaryPoint::truncated(letters(s)?)),
            Some(i) => {
                let rest = s[i + 1..].strip_suffix(')').ok_or_else(err)?;
                BoundaryPoint::periodic(letters(&s[..i])?, letters(rest)?).map_err(|_| err())
            }
        }
    }
}

impl Serialize for BoundaryPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BoundaryPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Length of the common prefix of two rays, compared to `depth` letters.
pub fn ray_lcp(x: &BoundaryPoint, y: &BoundaryPoint, depth: usize) -> Result<usize, BoundaryError> {
    for i in 0..depth {
        match (x.letter(i), y.letter(i)) {
            (Some(a), Some(b)) if a != b => return Ok(i),
            (Some(_), Some(_)) => {}
            _ => break,
        }
    }
    Err(BoundaryError::Indistinguishable(
        x.to_string(),
        y.to_string(),
        depth,
    ))
}

/// Whether two rays agree on every letter available up to `depth`.
pub fn indistinguishable(x: &BoundaryPoint, y: &BoundaryPoint, depth: usize) -> bool {
    ray_lcp(x, y, depth).is_err()
}

/// Distance between the geodesics `[x, y]` and `[z, w]`:
/// `max(0, |x∧y| + |z∧w| − |x∧z| − |y∧w|)`.
pub fn boundary_crossratio(
    t: &RegularTreeModel,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    z: &BoundaryPoint,
    w: &BoundaryPoint,
) -> Result<u64, BoundaryError> {
    let d = t.depth;
    let pts = [x, y, z, w];
    let mut l = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in i + 1..4 {
            let v = ray_lcp(pts[i], pts[j], d)? as i64;
            l[i][j] = v;
            l[j][i] = v;
        }
    }
    Ok((l[0][1] + l[2][3] - l[0][2] - l[1][3]).max(0) as u64)
}

/// The crossratio table of the given rays, labelled by their text form.
pub fn boundary_table(
    t: &RegularTreeModel,
    points: &[BoundaryPoint],
) -> Result<CrossratioTable, BoundaryError> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            ray_lcp(&points[i], &points[j], t.depth)?;
        }
    }
    let labels: Vec<String> = points.iter().map(|p| p.to_string()).collect();
    let labels = if labels.iter().collect::<BTreeSet<_>>().len() == labels.len() {
        labels
    } else {
        (0..points.len()).map(|i| format!("{i}:{}", points[i])).collect()
    };
    Ok(CrossratioTable::from_fn(labels, |a, b, c, d| {
        let v = boundary_crossratio(t, &points[a], &points[b], &points[c], &points[d])
            .expect("rays are pairwise distinguishable");
        Rational::from_integer(v as i64)
    }))
}

/// Visual distance `base^{|x∧y|}`, or 0 when the rays cannot be told apart.
pub fn visual_distance(x: &BoundaryPoint, y: &BoundaryPoint, depth: usize, base: Rational) -> Rational {
    match ray_lcp(x, y, depth) {
        Ok(l) => pow(base, l as u32),
        Err(_) => Rational::zero(),
    }
}

/// Median vertex of three distinct ends: the deepest of the three
/// pairwise branch points.
pub fn median_of_ends(
    t: &RegularTreeModel,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
    z: &BoundaryPoint,
) -> Result<Word, BoundaryError> {
    let pairs = [(x, y), (x, z), (y, z)];
    let mut best = (0, x);
    for (a, b) in pairs {
        let l = ray_lcp(a, b, t.depth)?;
        if l >= best.0 {
            best = (l, a);
        }
    }
    best.1.word(best.0)
}

/// The triple-space quasimetric for triples of ends: the largest
/// `(x_i x_j | y_m y_n)` over pairs from each triple, 0 for terms whose four
/// ends are not pairwise distinct.
pub fn ray_rho(
    t: &RegularTreeModel,
    x: [&BoundaryPoint; 3],
    y: [&BoundaryPoint; 3],
) -> Result<u64, BoundaryError> {
    for tr in [x, y] {
        for i in 0..3 {
            for j in i + 1..3 {
                ray_lcp(tr[i], tr[j], t.depth)?;
            }
        }
    }
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut best = 0;
    for (i, j) in PAIRS {
        for (m, n) in PAIRS {
            let q = [x[i], x[j], y[m], y[n]];
            let distinct = (0..4).all(|a| (a + 1..4).all(|b| !indistinguishable(q[a], q[b], t.depth)));
            if distinct {
                best = best.max(boundary_crossratio(t, q[0], q[1], q[2], q[3])?);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct ApproximatingTree {
    pub tree: MetricTree,
    /// Node `t_x` of each input ray.
    pub embedding: Vec<NodeId>,
}

/// Largest input accepted by [`approximating_subtree`].
pub const MAX_APPROX_POINTS: usize = 8;

/// Finite subtree spanned by the root and the vertices `t_x`, where `t_x`
/// is the vertex of `x` one step below its deepest branch point with the
/// other rays. Unit edge lengths.
pub fn approximating_subtree(
    t: &RegularTreeModel,
    f: &[BoundaryPoint],
) -> Result<ApproximatingTree, BoundaryError> {
    if f.is_empty() {
        return Err(BoundaryError::TooFewPoints { got: 0, need: 1 });
    }
    if f.len() > MAX_APPROX_POINTS {
        return Err(BoundaryError::TooManyPoints {
            got: f.len(),
            max: MAX_APPROX_POINTS,
        });
    }
    let mut tips = Vec::with_capacity(f.len());
    for (i, x) in f.iter().enumerate() {
        let mut deepest = 0;
        for (j, y) in f.iter().enumerate() {
            if i != j {
                deepest = deepest.max(ray_lcp(x, y, t.depth)?);
            }
        }
        tips.push(x.word(deepest + 1)?);
    }
    let mut vertices: BTreeSet<Word> = BTreeSet::new();
    for tip in &tips {
        for k in 0..=tip.len() {
            vertices.insert(tip[..k].to_vec());
        }
    }
    let names: Vec<String> = vertices.iter().map(|v| vertex_name(v)).collect();
    let one = Rational::from_integer(1);
    let edges: Vec<(String, String, Rational)> = vertices
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| (vertex_name(&v[..v.len() - 1]), vertex_name(v), one))
        .collect();
    let leaf_names: Vec<String> = tips.iter().map(|w| vertex_name(w)).collect();
    let tree = MetricTree::new(&names, &edges, Some(&leaf_names))
        .map_err(|e| BoundaryError::InvalidModel(e.to_string()))?;
    let embedding = leaf_names
        .iter()
        .map(|n| tree.node(n).expect("tip is a node"))
        .collect();
    Ok(ApproximatingTree { tree, embedding })
}

/// Vertex at signed position `s` on the geodesic from `b` (s → −∞) to
/// `a` (s → +∞); position 0 is the branch point of `a` and `b`.
fn geodesic_vertex(a: &BoundaryPoint, b: &BoundaryPoint, h: usize, s: i64) -> Result<Word, BoundaryError> {
    if s >= 0 {
        a.word(h + s as usize)
    } else {
        b.word(h + (-s) as usize)
    }
}

/// A ray leaving the geodesic `(b, a)` exactly at position `s`.
fn branch_off(
    t: &RegularTreeModel,
    a: &BoundaryPoint,
    b: &BoundaryPoint,
    h: usize,
    s: i64,
) -> Result<BoundaryPoint, BoundaryError> {
    let v = geodesic_vertex(a, b, h, s)?;
    let on_line: Vec<Word> = [s - 1, s + 1]
        .iter()
        .map(|&q| geodesic_vertex(a, b, h, q))
        .collect::<Result<_, _>>()?;
    for c in t.children(&v) {
        if !on_line.contains(&c) {
            return Ok(BoundaryPoint::with_tail(c, 0));
        }
    }
    // Only the branch point itself can leave upward: through its parent
    // into a sibling.
    if s == 0 && !v.is_empty() {
        let depth = v.len() - 1;
        let parent = &v[..depth];
        for l in 0..t.arity(depth) {
            if l != v[depth] {
                let mut w = parent.to_vec();
                w.push(l);
                return Ok(BoundaryPoint::with_tail(w, 0));
            }
        }
    }
    Err(BoundaryError::NoFreeDirection(s))
}

/// Window `x_{−length}, …, x_0 = c, …, x_length` of rays leaving the geodesic
/// `(b, a)` at consecutive positions, so `(b x_i | a x_j) = j − i` for
/// `i < j`.
pub fn interpolated_ray(
    t: &RegularTreeModel,
    a: &BoundaryPoint,
    b: &BoundaryPoint,
    c: &BoundaryPoint,
    length: usize,
) -> Result<Vec<BoundaryPoint>, BoundaryError> {
    let d = t.depth;
    let h = ray_lcp(a, b, d).map_err(|_| BoundaryError::CoincidentParameters)?;
    let ca = ray_lcp(c, a, d).map_err(|_| BoundaryError::CoincidentParameters)?;
    let cb = ray_lcp(c, b, d).map_err(|_| BoundaryError::CoincidentParameters)?;
    let sc = if ca > h {
        (ca - h) as i64
    } else if cb > h {
        -((cb - h) as i64)
    } else {
        0
    };
    let lo = sc - length as i64;
    let hi = sc + length as i64;
    let needed = h + lo.unsigned_abs().max(hi.unsigned_abs()) as usize + 1;
    if needed > d {
        return Err(BoundaryError::WindowTooDeep { needed, depth: d });
    }
    let mut out = Vec::with_capacity(2 * length + 1);
    for s in lo..=hi {
        if s == sc {
            out.push(c.clone());
        } else {
            out.push(branch_off(t, a, b, h, s)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayTripleReport {
    /// Ends of `X_i = (b, a, x_i)`, one per window entry.
    pub triples: Vec<[BoundaryPoint; 3]>,
    /// `max |ρ(X_i, X_j) − |i − j||`.
    pub rho_error: u64,
    /// Largest of the three Gromov products at the centre triple.
    #[serde(serialize_with = "crate::rational::serialize")]
    pub centre_deviation: Rational,
}

/// Triple approximating the end `x` from inside the triple space: two rays
/// leaving `x` at depths `n` and `n + 1`, so its median is `x[..n+1]`.
fn deep_triple(t: &RegularTreeModel, x: &BoundaryPoint, n: usize) -> Result<[BoundaryPoint; 3], BoundaryError> {
    let mut side = Vec::new();
    for k in [n, n + 1] {
        let mut w = x.word(k)?;
        let here = x.letter(k).ok_or_else(|| BoundaryError::TooShort(x.to_string(), k + 1))?;
        let other = (0..t.arity(k)).find(|&l| l != here).expect("branching ≥ 2");
        w.push(other);
        side.push(BoundaryPoint::with_tail(w, 0));
    }
    Ok([x.clone(), side[0].clone(), side[1].clone()])
}

/// Triples `X_i = (b, a, x_i)` along a window, their pairwise `ρ`, and the
/// centre property of `(a, b, x_0)`: the Gromov products of deep
/// approximations of `a`, `b`, `x_0` based at that triple vanish.
pub fn ray_triple_geodesic(
    t: &RegularTreeModel,
    a: &BoundaryPoint,
    b: &BoundaryPoint,
    window: &[BoundaryPoint],
) -> Result<RayTripleReport, BoundaryError> {
    if indistinguishable(a, b, t.depth) {
        return Err(BoundaryError::CoincidentParameters);
    }
    if window.is_empty() {
        return Err(BoundaryError::TooFewPoints { got: 0, need: 1 });
    }
    let triples: Vec<[BoundaryPoint; 3]> = window
        .iter()
        .map(|x| [b.clone(), a.clone(), x.clone()])
        .collect();
    let mut rho_error = 0u64;
    for i in 0..triples.len() {
        for j in i + 1..triples.len() {
            let [p, q, r] = &triples[i];
            let [u, v, w] = &triples[j];
            let rho = ray_rho(t, [p, q, r], [u, v, w])?;
            rho_error = rho_error.max(rho.abs_diff((j - i) as u64));
        }
    }

    let centre = &window[window.len() / 2];
    let ends = [a, b, centre];
    let mut deepest = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            deepest = deepest.max(ray_lcp(ends[i], ends[j], t.depth)?);
        }
    }
    let n = deepest + 1;
    let deep_model = t.with_depth(t.depth.max(n + 3));
    let approx: Vec<[BoundaryPoint; 3]> = ends
        .iter()
        .map(|e| deep_triple(t, e, n))
        .collect::<Result<_, _>>()?;
    let c = [a, b, centre];
    let r = |x: &[BoundaryPoint; 3], y: [&BoundaryPoint; 3]| -> Result<i64, BoundaryError> {
        Ok(ray_rho(&deep_model, [&x[0], &x[1], &x[2]], y)? as i64)
    };
    let mut centre_deviation = Rational::zero();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let g = r(&approx[i], c)? + r(&approx[j], c)?
            - r(&approx[i], [&approx[j][0], &approx[j][1], &approx[j][2]])?;
        centre_deviation = centre_deviation.max(Rational::new(g, 2).abs());
    }
    Ok(RayTripleReport {
        triples,
        rho_error,
        centre_deviation,
    })
}
