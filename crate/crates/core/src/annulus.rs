//! Annulus systems on a compactum seen at finite resolution.
//!
//! The space is a finite universe of atoms (cylinders of a tree boundary, or
//! points of a finite space); closed and open sets both become sets of atoms.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::crossratio::CrossratioTable;
use crate::rational::{pow, Rational};
use crate::tree_boundary::{common_prefix_len, BoundaryError, BoundaryPoint, RegularTreeModel, TreeAutomorphism};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnulusError {
    #[error("regions live in universes of sizes {0} and {1}")]
    UniverseMismatch(usize, usize),
    #[error("unknown atom {0:?}")]
    UnknownAtom(String),
    #[error("duplicate atom {0:?}")]
    DuplicateAtom(String),
    #[error("annulus sides overlap")]
    Overlap,
    #[error("annulus sides cover the whole universe")]
    NoGap,
    #[error("annulus side is empty")]
    EmptySide,
    #[error("need at least {need} sample atoms, got {got}")]
    SampleTooSmall { got: usize, need: usize },
    #[error("atom index {0} out of range")]
    AtomOutOfRange(usize),
    #[error("invalid metric: {0}")]
    Metric(String),
    #[error("map is not a permutation of the atoms: {0}")]
    NotAPermutation(String),
    #[error("neighbourhoods of triple {0} overlap or miss their point")]
    BadNeighbourhoods(usize),
    #[error("no annulus separating {0:?} and {1:?} at this resolution")]
    NoAnnulus(String, String),
    #[error("input system violates the induction invariant: {0}")]
    InvariantViolated(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

/// A set of atoms.
pub type Region = FixedBitSet;

fn region(n: usize, atoms: impl IntoIterator<Item = usize>) -> Region {
    let mut r = FixedBitSet::with_capacity(n);
    r.extend(atoms);
    r
}

fn complement(r: &Region) -> Region {
    let mut c = r.clone();
    c.toggle_range(..);
    c
}

/// A pair `(A⁻, A⁺)` of disjoint regions whose union misses some atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Annulus {
    pub minus: Region,
    pub plus: Region,
}

impl Annulus {
    pub fn new(minus: Region, plus: Region) -> Result<Self, AnnulusError> {
        if minus.len() != plus.len() {
            return Err(AnnulusError::UniverseMismatch(minus.len(), plus.len()));
        }
        if minus.count_ones(..) == 0 || plus.count_ones(..) == 0 {
            return Err(AnnulusError::EmptySide);
        }
        if !minus.is_disjoint(&plus) {
            return Err(AnnulusError::Overlap);
        }
        if minus.count_ones(..) + plus.count_ones(..) == minus.len() {
            return Err(AnnulusError::NoGap);
        }
        Ok(Annulus { minus, plus })
    }

    pub fn from_atoms(n: usize, minus: &[usize], plus: &[usize]) -> Result<Self, AnnulusError> {
        if let Some(&a) = minus.iter().chain(plus).find(|&&a| a >= n) {
            return Err(AnnulusError::AtomOutOfRange(a));
        }
        Annulus::new(region(n, minus.iter().copied()), region(n, plus.iter().copied()))
    }

    pub fn universe_len(&self) -> usize {
        self.minus.len()
    }

    /// `−A = (A⁺, A⁻)`.
    pub fn negate(&self) -> Annulus {
        Annulus {
            minus: self.plus.clone(),
            plus: self.minus.clone(),
        }
    }

    /// Image under a permutation of the atoms.
    pub fn apply(&self, map: &[usize]) -> Annulus {
        let n = self.universe_len();
        Annulus {
            minus: region(n, self.minus.ones().map(|a| map[a])),
            plus: region(n, self.plus.ones().map(|a| map[a])),
        }
    }
}

/// `K < A`: `K ⊆ A⁻`.
pub fn region_below(k: &Region, a: &Annulus) -> bool {
    k.is_subset(&a.minus)
}

/// `A < K`: `K ⊆ A⁺`.
pub fn region_above(a: &Annulus, k: &Region) -> bool {
    k.is_subset(&a.plus)
}

/// `A < B`: the complement of `A⁺` lies in `B⁻`.
pub fn nesting_lt(a: &Annulus, b: &Annulus) -> Result<bool, AnnulusError> {
    if a.universe_len() != b.universe_len() {
        return Err(AnnulusError::UniverseMismatch(a.universe_len(), b.universe_len()));
    }
    Ok(lt(a, b))
}

fn lt(a: &Annulus, b: &Annulus) -> bool {
    complement(&a.plus).is_subset(&b.minus)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnulusSystem {
    universe: Vec<String>,
    index: HashMap<String, usize>,
    annuli: Vec<Annulus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusJson {
    pub minus: Vec<String>,
    pub plus: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemJson {
    pub universe: Vec<String>,
    pub annuli: Vec<AnnulusJson>,
}

impl AnnulusSystem {
    /// A system on the named atoms; duplicate annuli are dropped.
    pub fn new(universe: Vec<String>, annuli: Vec<Annulus>) -> Result<Self, AnnulusError> {
        let mut index = HashMap::new();
        for (i, a) in universe.iter().enumerate() {
            if index.insert(a.clone(), i).is_some() {
                return Err(AnnulusError::DuplicateAtom(a.clone()));
            }
        }
        let n = universe.len();
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for a in annuli {
            if a.universe_len() != n {
                return Err(AnnulusError::UniverseMismatch(a.universe_len(), n));
            }
            if seen.insert(a.clone()) {
                kept.push(a);
            }
        }
        Ok(AnnulusSystem {
            universe,
            index,
            annuli: kept,
        })
    }

    pub fn empty(universe: Vec<String>) -> Result<Self, AnnulusError> {
        AnnulusSystem::new(universe, Vec::new())
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    pub fn annuli(&self) -> &[Annulus] {
        &self.annuli
    }

    pub fn len(&self) -> usize {
        self.annuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annuli.is_empty()
    }

    pub fn atom(&self, name: &str) -> Result<usize, AnnulusError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| AnnulusError::UnknownAtom(name.to_string()))
    }

    pub fn region(&self, atoms: &[usize]) -> Result<Region, AnnulusError> {
        let n = self.universe_len();
        if let Some(&a) = atoms.iter().find(|&&a| a >= n) {
            return Err(AnnulusError::AtomOutOfRange(a));
        }
        Ok(region(n, atoms.iter().copied()))
    }

    /// Closed under `A ↦ −A`.
    pub fn is_symmetric(&self) -> bool {
        let set: BTreeSet<&Annulus> = self.annuli.iter().collect();
        self.annuli.iter().all(|a| set.contains(&a.negate()))
    }

    /// The system together with all negatives.
    pub fn symmetrized(&self) -> AnnulusSystem {
        let mut all = self.annuli.clone();
        all.extend(self.annuli.iter().map(|a| a.negate()));
        AnnulusSystem::new(self.universe.clone(), all).expect("same universe")
    }

    /// Union with another system on the same universe.
    pub fn union(&self, other: &AnnulusSystem) -> Result<AnnulusSystem, AnnulusError> {
        if self.universe != other.universe {
            return Err(AnnulusError::UniverseMismatch(self.universe_len(), other.universe_len()));
        }
        let mut all = self.annuli.clone();
        all.extend(other.annuli.iter().cloned());
        AnnulusSystem::new(self.universe.clone(), all)
    }

    /// Checks that nesting is irreflexive, antisymmetric and transitive.
    pub fn nesting_is_strict_order(&self) -> bool {
        let a = &self.annuli;
        let m = a.len();
        let rel: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| lt(&a[i], &a[j])).collect()).collect();
        (0..m).all(|i| !rel[i][i])
            && (0..m).all(|i| (0..m).all(|j| !(rel[i][j] && rel[j][i])))
            && (0..m).all(|i| (0..m).all(|j| !rel[i][j] || (0..m).all(|k| !rel[j][k] || rel[i][k])))
    }

    pub fn to_json(&self) -> SystemJson {
        let names = |r: &Region| r.ones().map(|i| self.universe[i].clone()).collect();
        SystemJson {
            universe: self.universe.clone(),
            annuli: self
                .annuli
                .iter()
                .map(|a| AnnulusJson {
                    minus: names(&a.minus),
                    plus: names(&a.plus),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &SystemJson) -> Result<Self, AnnulusError> {
        let empty = AnnulusSystem::empty(j.universe.clone())?;
        let n = j.universe.len();
        let side = |names: &[String]| -> Result<Region, AnnulusError> {
            let idx: Vec<usize> = names.iter().map(|s| empty.atom(s)).collect::<Result<_, _>>()?;
            Ok(region(n, idx))
        };
        let annuli = j
            .annuli
            .iter()
            .map(|a| Annulus::new(side(&a.minus)?, side(&a.plus)?))
            .collect::<Result<Vec<_>, _>>()?;
        AnnulusSystem::new(j.universe.clone(), annuli)
    }
}

/// `(K | L)`: the length of the longest chain `K < A₁ < … < Aₙ < L`.
///
/// Every annulus of such a chain lies strictly between `K` and `L`, and
/// `A < B` forces `|A⁻| < |B⁻|`, so sorting by `|A⁻|` orders the DAG.
pub fn separation_count(k: &Region, l: &Region, sys: &AnnulusSystem) -> usize {
    let mut between: Vec<&Annulus> = sys
        .annuli
        .iter()
        .filter(|a| region_below(k, a) && region_above(a, l))
        .collect();
    between.sort_by_key(|a| a.minus.count_ones(..));
    let mut best = vec![1usize; between.len()];
    for j in 0..between.len() {
        for i in 0..j {
            if best[i] + 1 > best[j] && lt(between[i], between[j]) {
                best[j] = best[i] + 1;
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

/// The longest nested chain in the whole system.
pub fn longest_chain(sys: &AnnulusSystem) -> usize {
    let empty = FixedBitSet::with_capacity(sys.universe_len());
    separation_count(&empty, &empty, sys)
}

fn pair(n: usize, a: usize, b: usize) -> Region {
    region(n, [a, b])
}

fn pair_count(sys: &AnnulusSystem, x: usize, y: usize, z: usize, w: usize) -> usize {
    let n = sys.universe_len();
    separation_count(&pair(n, x, y), &pair(n, z, w), sys)
}

fn check_sample(sys: &AnnulusSystem, sample: &[usize], need: usize) -> Result<(), AnnulusError> {
    if sample.len() < need {
        return Err(AnnulusError::SampleTooSmall {
            got: sample.len(),
            need,
        });
    }
    if let Some(&a) = sample.iter().find(|&&a| a >= sys.universe_len()) {
        return Err(AnnulusError::AtomOutOfRange(a));
    }
    if sample.iter().collect::<BTreeSet<_>>().len() != sample.len() {
        return Err(AnnulusError::DuplicateAtom(format!("{sample:?}")));
    }
    Ok(())
}

/// The crossratio `(xy | zw) = ({x, y} | {z, w})` on the sampled atoms.
pub fn induced_crossratio(sys: &AnnulusSystem, sample: &[usize]) -> Result<CrossratioTable, AnnulusError> {
    check_sample(sys, sample, 4)?;
    let labels = sample.iter().map(|&a| sys.universe[a].clone()).collect();
    Ok(CrossratioTable::from_fn(labels, |a, b, c, d| {
        Rational::from_integer(pair_count(sys, sample[a], sample[b], sample[c], sample[d]) as i64)
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub sample_size: usize,
    /// Always true for a finite system; kept so the report lists every axiom.
    pub a1_finite: bool,
    /// Least `k` with no sampled 4-tuple having two dual values above `k`.
    pub a2_k: usize,
    pub a2_witness: Option<[String; 4]>,
    pub a3_threshold: usize,
    pub a3_checked: usize,
    /// Triples `(x, y, z)` with `(x | yz)` below the threshold.
    pub a3_failures: Vec<[String; 3]>,
    pub a4_checked: usize,
    /// Pairs with `(x | y) = 0`.
    pub a4_failures: Vec<[String; 2]>,
    /// The axioms are stated for perfect compacta; a finite universe cannot
    /// witness perfectness, so the report assumes it.
    pub perfectness_assumed: bool,
}

/// Evaluates (A1), (A2) and threshold proxies of (A3) and (A4) on a sample.
pub fn check_axioms(
    sys: &AnnulusSystem,
    sample: &[usize],
    a3_threshold: usize,
) -> Result<AxiomReport, AnnulusError> {
    check_sample(sys, sample, 2)?;
    let n = sys.universe_len();
    let name = |a: usize| sys.universe[a].clone();
    let mut a2_k = 0;
    let mut a2_witness = None;
    for q in sample.iter().copied().combinations(4) {
        let (x, y, z, w) = (q[0], q[1], q[2], q[3]);
        let mut v = [
            pair_count(sys, x, y, z, w),
            pair_count(sys, x, z, y, w),
            pair_count(sys, x, w, y, z),
        ];
        v.sort_unstable();
        if v[1] > a2_k {
            a2_k = v[1];
            a2_witness = Some([name(x), name(y), name(z), name(w)]);
        }
    }
    let mut a3_checked = 0;
    let mut a3_failures = Vec::new();
    for t in sample.iter().copied().permutations(3) {
        let (x, y, z) = (t[0], t[1], t[2]);
        if y > z {
            continue;
        }
        a3_checked += 1;
        if separation_count(&region(n, [x]), &pair(n, y, z), sys) < a3_threshold {
            a3_failures.push([name(x), name(y), name(z)]);
        }
    }
    let mut a4_checked = 0;
    let mut a4_failures = Vec::new();
    for p in sample.iter().copied().combinations(2) {
        a4_checked += 1;
        if separation_count(&region(n, [p[0]]), &region(n, [p[1]]), sys) == 0 {
            a4_failures.push([name(p[0]), name(p[1])]);
        }
    }
    Ok(AxiomReport {
        sample_size: sample.len(),
        a1_finite: true,
        a2_k,
        a2_witness,
        a3_threshold,
        a3_checked,
        a3_failures,
        a4_checked,
        a4_failures,
        perfectness_assumed: true,
    })
}

/// A metric on atoms. Each atom also carries its own diameter, the size of
/// the piece of space it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomMetric {
    d: Vec<Vec<Rational>>,
    atom_diam: Vec<Rational>,
}

impl AtomMetric {
    pub fn new(d: Vec<Vec<Rational>>, atom_diam: Vec<Rational>) -> Result<Self, AnnulusError> {
        let n = d.len();
        if atom_diam.len() != n || d.iter().any(|row| row.len() != n) {
            return Err(AnnulusError::Metric("matrix is not square".into()));
        }
        for i in 0..n {
            if !d[i][i].is_zero() {
                return Err(AnnulusError::Metric(format!("nonzero diagonal at {i}")));
            }
            if atom_diam[i] < Rational::zero() {
                return Err(AnnulusError::Metric(format!("negative atom diameter at {i}")));
            }
            for j in 0..n {
                if d[i][j] != d[j][i] || (i != j && d[i][j] <= Rational::zero()) {
                    return Err(AnnulusError::Metric(format!("bad entry at ({i}, {j})")));
                }
            }
        }
        Ok(AtomMetric { d, atom_diam })
    }

    /// A finite metric space: atoms are points.
    pub fn discrete(d: Vec<Vec<Rational>>) -> Result<Self, AnnulusError> {
        let n = d.len();
        AtomMetric::new(d, vec![Rational::zero(); n])
    }

    /// Visual metric `base^{|u ∧ v|}` on the cylinders at `depth`, which
    /// are named by their words. Each cylinder has diameter `base^depth`.
    pub fn visual(
        model: &RegularTreeModel,
        depth: usize,
        base: Rational,
    ) -> Result<(Vec<String>, AtomMetric), AnnulusError> {
        if depth == 0 {
            return Err(BoundaryError::DepthTooSmall(0).into());
        }
        let atoms = model.level(depth);
        let names = atoms
            .iter()
            .map(|w| BoundaryPoint::truncated(w.clone()).to_string())
            .collect();
        let d = atoms
            .iter()
            .map(|u| {
                atoms
                    .iter()
                    .map(|v| {
                        if u == v {
                            Rational::zero()
                        } else {
                            pow(base, common_prefix_len(u, v) as u32)
                        }
                    })
                    .collect()
            })
            .collect();
        let m = AtomMetric::new(d, vec![pow(base, depth as u32); atoms.len()])?;
        Ok((names, m))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn dist(&self, u: usize, v: usize) -> Rational {
        self.d[u][v]
    }

    pub fn diam(&self, r: &Region) -> Result<Rational, AnnulusError> {
        let pts: Vec<usize> = r.ones().collect();
        if pts.is_empty() {
            return Err(AnnulusError::EmptySide);
        }
        let mut best = pts.iter().map(|&u| self.atom_diam[u]).max().expect("nonempty");
        for (&u, &v) in pts.iter().tuple_combinations() {
            best = best.max(self.d[u][v]);
        }
        Ok(best)
    }

    pub fn set_distance(&self, a: &Region, b: &Region) -> Result<Rational, AnnulusError> {
        a.ones()
            .flat_map(|u| b.ones().map(move |v| (u, v)))
            .map(|(u, v)| self.d[u][v])
            .min()
            .ok_or(AnnulusError::EmptySide)
    }

    /// Closed ball of radius `r` around `x`.
    pub fn ball(&self, x: usize, r: Rational) -> Region {
        region(self.len(), (0..self.len()).filter(|&u| self.d[x][u] <= r))
    }

    /// Whether `map` preserves the metric.
    pub fn is_isometry(&self, map: &[usize]) -> bool {
        let n = self.len();
        (0..n).all(|u| (0..n).all(|v| self.d[map[u]][map[v]] == self.d[u][v]))
    }
}

/// `λ(A) = min(diam A⁻, diam A⁺)` and `μ(A) = d(A⁻, A⁺)`.
pub fn annulus_metrics(a: &Annulus, d: &AtomMetric) -> Result<(Rational, Rational), AnnulusError> {
    if a.universe_len() != d.len() {
        return Err(AnnulusError::UniverseMismatch(a.universe_len(), d.len()));
    }
    let lambda = d.diam(&a.minus)?.min(d.diam(&a.plus)?);
    let mu = d.set_distance(&a.minus, &a.plus)?;
    Ok((lambda, mu))
}

/// The permutation of the atoms at `depth` induced by a root-fixing
/// automorphism.
pub fn atom_permutation(g: &TreeAutomorphism, depth: usize) -> Result<Vec<usize>, AnnulusError> {
    let model = g.model()?.with_depth(depth);
    let atoms = model.level(depth);
    let index: HashMap<&[u32], usize> = atoms.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
    let mut out = Vec::with_capacity(atoms.len());
    for w in &atoms {
        let (d, img) = g.image(w, depth)?;
        let j = (d == depth)
            .then(|| index.get(img.as_slice()).copied())
            .flatten()
            .ok_or_else(|| AnnulusError::NotAPermutation(format!("moves the root (atom {w:?})")))?;
        out.push(j);
    }
    Ok(out)
}

fn check_maps(maps: &[Vec<usize>], n: usize) -> Result<(), AnnulusError> {
    for (k, m) in maps.iter().enumerate() {
        let image: BTreeSet<usize> = m.iter().copied().collect();
        if m.len() != n || image.len() != n || image.iter().any(|&a| a >= n) {
            return Err(AnnulusError::NotAPermutation(format!("map {k}")));
        }
    }
    Ok(())
}

fn max_lambda(a: &Annulus, maps: &[Vec<usize>], d: &AtomMetric) -> Result<Rational, AnnulusError> {
    let mut worst = annulus_metrics(a, d)?.0;
    for m in maps {
        worst = worst.max(annulus_metrics(&a.apply(m), d)?.0);
    }
    Ok(worst)
}

/// Shrinks balls around `x` and `y` together until the pair is an annulus
/// with `λ(γA) < s` for every `γ` (and the identity) and `μ(A) > mu_floor`.
fn shrink_to_annulus(
    x: usize,
    y: usize,
    maps: &[Vec<usize>],
    s: Rational,
    mu_floor: Option<Rational>,
    d: &AtomMetric,
    names: (&str, &str),
) -> Result<Annulus, AnnulusError> {
    let n = d.len();
    if x >= n || y >= n {
        return Err(AnnulusError::AtomOutOfRange(x.max(y)));
    }
    if x == y {
        return Err(AnnulusError::NoAnnulus(names.0.into(), names.1.into()));
    }
    check_maps(maps, n)?;
    let dxy = d.dist(x, y);
    let radii: BTreeSet<Rational> = (0..n)
        .flat_map(|u| [d.dist(x, u), d.dist(y, u)])
        .filter(|&r| r < dxy)
        .collect();
    for &r in radii.iter().rev() {
        let (minus, plus) = (d.ball(x, r), d.ball(y, r));
        let Ok(a) = Annulus::new(minus, plus) else {
            continue;
        };
        if max_lambda(&a, maps, d)? >= s {
            continue;
        }
        if let Some(floor) = mu_floor {
            if annulus_metrics(&a, d)?.1 <= floor {
                continue;
            }
        }
        return Ok(a);
    }
    Err(AnnulusError::NoAnnulus(names.0.into(), names.1.into()))
}

/// An annulus with `x ∈ A⁻`, `y ∈ A⁺` and `λ(γA) < s` for each given map
/// `γ` of the atoms, obtained by shrinking concentric balls around `x`
/// and `y`.
pub fn small_separating_annulus(
    x: usize,
    y: usize,
    maps: &[Vec<usize>],
    s: Rational,
    d: &AtomMetric,
) -> Result<Annulus, AnnulusError> {
    let (xn, yn) = (x.to_string(), y.to_string());
    shrink_to_annulus(x, y, maps, s, None, d, (&xn, &yn))
}

/// The symmetric system `{γAᵢ, −γAᵢ}` with `Aᵢ = (Uᵢ, Vᵢ)` taken from the
/// neighbourhoods `(Uᵢ, Vᵢ, Wᵢ)` of the triples.
pub fn build_cover_system(
    universe: Vec<String>,
    triples: &[[usize; 3]],
    neighbourhoods: &[[Region; 3]],
    maps: &[Vec<usize>],
) -> Result<AnnulusSystem, AnnulusError> {
    let n = universe.len();
    if triples.len() != neighbourhoods.len() {
        return Err(AnnulusError::SampleTooSmall {
            got: neighbourhoods.len(),
            need: triples.len(),
        });
    }
    check_maps(maps, n)?;
    let mut reps = Vec::new();
    for (i, (t, nb)) in triples.iter().zip(neighbourhoods).enumerate() {
        let ok = nb.iter().all(|r| r.len() == n)
            && (0..3).all(|k| t[k] < n && nb[k].contains(t[k]))
            && (0..3).all(|a| (a + 1..3).all(|b| nb[a].is_disjoint(&nb[b])));
        if !ok {
            return Err(AnnulusError::BadNeighbourhoods(i));
        }
        reps.push(Annulus::new(nb[0].clone(), nb[1].clone())?);
    }
    let mut annuli = Vec::new();
    for a in &reps {
        for m in maps {
            let g = a.apply(m);
            annuli.push(g.negate());
            annuli.push(g);
        }
    }
    AnnulusSystem::new(universe, annuli)
}

/// Atoms used for sampled invariant checks: all of them up to twelve,
/// otherwise twelve evenly spaced ones.
pub fn check_atoms(n: usize) -> Vec<usize> {
    const MAX: usize = 12;
    if n <= MAX {
        (0..n).collect()
    } else {
        (0..MAX).map(|i| i * n / MAX).collect()
    }
}

/// Whether at least two of the three dual values vanish on every 4-tuple
/// of the sample.
pub fn two_zeros_on(sys: &AnnulusSystem, sample: &[usize]) -> Option<[usize; 4]> {
    sample.iter().copied().combinations(4).find_map(|q| {
        let (x, y, z, w) = (q[0], q[1], q[2], q[3]);
        let nonzero = [
            pair_count(sys, x, y, z, w),
            pair_count(sys, x, z, y, w),
            pair_count(sys, x, w, y, z),
        ]
        .iter()
        .filter(|&&v| v > 0)
        .count();
        (nonzero > 1).then_some([x, y, z, w])
    })
}

/// One step `A(n) → A(n+1)` of the metric construction, with the group
/// replaced by the sampled maps.
///
/// Covers every pair at distance `≥ 1/(n+1)` by an annulus `A` with
/// `λ(γA) < min(μ/2, 1/(n+2))` for all sampled `γ` and `μ(A) > 1/(n+2)`,
/// where `μ` is the least over `A(n)` of the largest `μ(γA)`. The sampled
/// `μ` can only overestimate the true one.
pub fn refine_system_step(
    sys: &AnnulusSystem,
    n: u32,
    d: &AtomMetric,
    maps: &[Vec<usize>],
) -> Result<AnnulusSystem, AnnulusError> {
    let size = sys.universe_len();
    if d.len() != size {
        return Err(AnnulusError::UniverseMismatch(size, d.len()));
    }
    check_maps(maps, size)?;
    let sample = check_atoms(size);
    if let Some(q) = two_zeros_on(sys, &sample) {
        let names: Vec<&str> = q.iter().map(|&a| sys.universe[a].as_str()).collect();
        return Err(AnnulusError::InvariantViolated(format!(
            "two nonzero dual values at {names:?}"
        )));
    }
    let threshold = |k: u32| Rational::new(1, k as i64);
    if n > 0 {
        for (x, y) in (0..size).tuple_combinations() {
            if d.dist(x, y) >= threshold(n) && separation_count(&region(size, [x]), &region(size, [y]), sys) == 0 {
                return Err(AnnulusError::InvariantViolated(format!(
                    "({} | {}) = 0",
                    sys.universe[x], sys.universe[y]
                )));
            }
        }
    }
    let mut mu = None::<Rational>;
    for a in &sys.annuli {
        let (l, m) = annulus_metrics(a, d)?;
        if l.is_zero() || m.is_zero() {
            return Err(AnnulusError::InvariantViolated("annulus with λ or μ zero".into()));
        }
        let mut best = m;
        for g in maps {
            best = best.max(annulus_metrics(&a.apply(g), d)?.1);
        }
        mu = Some(mu.map_or(best, |v| v.min(best)));
    }
    let next = threshold(n + 2);
    let bound = mu.map_or(next, |m| (m / Rational::from_integer(2)).min(next));
    let mut chosen: Vec<Annulus> = Vec::new();
    for (x, y) in (0..size).tuple_combinations() {
        if d.dist(x, y) < threshold(n + 1) {
            continue;
        }
        let covered = chosen.iter().any(|a| {
            (a.minus.contains(x) && a.plus.contains(y)) || (a.minus.contains(y) && a.plus.contains(x))
        });
        if covered {
            continue;
        }
        let a = shrink_to_annulus(
            x,
            y,
            maps,
            bound,
            Some(next),
            d,
            (&sys.universe[x], &sys.universe[y]),
        )?;
        chosen.push(a);
    }
    let mut added = Vec::new();
    for a in &chosen {
        added.push(a.clone());
        added.push(a.negate());
        for g in maps {
            let b = a.apply(g);
            added.push(b.negate());
            added.push(b);
        }
    }
    sys.union(&AnnulusSystem::new(sys.universe.clone(), added)?)
}

/// Annuli `(M ∖ C_v, C_c)` and their negatives, for every vertex `v` with
/// `1 ≤ |v| ≤ max_level` and child `c` at most `depth` deep, over the
/// cylinders at `depth`.
pub fn cylinder_system(
    model: &RegularTreeModel,
    depth: usize,
    max_level: usize,
) -> Result<AnnulusSystem, AnnulusError> {
    let base = Rational::one();
    let (names, _) = AtomMetric::visual(model, depth, base)?;
    let atoms = model.level(depth);
    let n = atoms.len();
    let cylinder = |w: &[u32]| region(n, (0..n).filter(|&i| atoms[i].starts_with(w)));
    let mut annuli = Vec::new();
    for level in 1..=max_level.min(depth.saturating_sub(1)) {
        for v in model.level(level) {
            let outside = complement(&cylinder(&v));
            for c in model.children(&v) {
                let a = Annulus::new(outside.clone(), cylinder(&c))?;
                annuli.push(a.negate());
                annuli.push(a);
            }
        }
    }
    AnnulusSystem::new(names, annuli)
}

#[cfg(test)]
mod tests;
