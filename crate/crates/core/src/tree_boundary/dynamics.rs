use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_traits::Zero;
use serde::Serialize;

use super::automorphism::{classify_automorphism, cylinder_image, CylinderImage, DynamicsKind, TreeAutomorphism};
use super::{common_prefix_len, BoundaryError, BoundaryPoint, RegularTreeModel, Word};
use crate::padic::max_precision;
use crate::padic_projective::{fixed_points, mobius_act, solve_sharply3, EndMap, FixedPoints, Mobius, ProjPoint};
use crate::rational::{pow, Rational};

/// Graph of an automorphism seen through the cylinders ("atoms") at a
/// fixed level: atom `u` is related to every atom meeting `g(C_u)`.
#[derive(Debug, Clone)]
pub struct GraphAtResolution {
    depth: usize,
    atoms: Vec<Word>,
    /// `block[k]`: number of atoms sharing a prefix of length `k`.
    block: Vec<usize>,
    images: Vec<FixedBitSet>,
    /// `near[u][m]`: closeness of atom `m` to `g(C_u)`.
    near: Vec<Vec<usize>>,
}

impl GraphAtResolution {
    pub fn new(g: &TreeAutomorphism, depth: usize) -> Result<Self, BoundaryError> {
        if depth == 0 {
            return Err(BoundaryError::DepthTooSmall(0));
        }
        let model = g.model()?.with_depth(depth);
        let atoms = model.level(depth);
        let n = atoms.len();
        let mut block = vec![1; depth + 1];
        for k in (0..depth).rev() {
            block[k] = block[k + 1] * model.arity(k) as usize;
        }
        let mut graph = GraphAtResolution {
            depth,
            atoms,
            block,
            images: Vec::with_capacity(n),
            near: Vec::new(),
        };
        for u in 0..n {
            let mut img = FixedBitSet::with_capacity(n);
            match cylinder_image(g, &graph.atoms[u], depth)? {
                CylinderImage::Cylinder { prefix, .. } => img.insert_range(graph.range(&prefix)),
                CylinderImage::Complement { depth: d, prefix } => {
                    img.insert_range(..);
                    if d <= depth {
                        img.set_range(graph.range(&prefix), false);
                    }
                }
            }
            graph.images.push(img);
        }
        graph.near = (0..n)
            .map(|u| (0..n).map(|m| graph.closeness_to(m, &graph.images[u]).unwrap_or(0)).collect())
            .collect();
        Ok(graph)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn atoms(&self) -> &[Word] {
        &self.atoms
    }

    /// Atoms met by the image of atom `u`.
    pub fn image(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.images[u].ones()
    }

    pub fn atom_of(&self, x: &BoundaryPoint) -> Result<usize, BoundaryError> {
        Ok(self.range(&x.word(self.depth)?).start)
    }

    fn range(&self, prefix: &[u32]) -> std::ops::Range<usize> {
        let k = prefix.len().min(self.depth);
        let start: usize = prefix[..k]
            .iter()
            .enumerate()
            .map(|(l, &c)| c as usize * self.block[l + 1])
            .sum();
        start..start + self.block[k]
    }

    /// Length of the longest common prefix of atom `m` with an atom of `s`,
    /// `depth` when `m ∈ s`, `None` when `s` is empty.
    fn closeness_to(&self, m: usize, s: &FixedBitSet) -> Option<usize> {
        if s.contains(m) {
            return Some(self.depth);
        }
        (0..self.depth).rev().find(|&k| {
            let b = self.block[k];
            let start = m / b * b;
            s.count_ones(start..start + b) > 0
        })
    }

    fn closeness(&self, u: usize, v: usize) -> usize {
        common_prefix_len(&self.atoms[u], &self.atoms[v])
    }

    fn set_of(&self, atoms: &[usize]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.atoms.len());
        for &a in atoms {
            s.insert(a);
        }
        s
    }

    /// How far the graph sticks out of `(P × M) ∪ (M × Q)`, as a closeness.
    fn excess_closeness(&self, p: &FixedBitSet, q: &FixedBitSet) -> Option<usize> {
        let cq: Vec<Option<usize>> = (0..self.atoms.len()).map(|v| self.closeness_to(v, q)).collect();
        (0..self.atoms.len())
            .map(|u| {
                let second = self.images[u].ones().map(|v| cq[v]).min().flatten();
                self.closeness_to(u, p).max(second)
            })
            .min()
            .flatten()
    }

    /// How far `(P × M) ∪ (M × Q)` sticks out of the graph, as a closeness.
    fn deficit_closeness(&self, p: &[usize], q: &[usize]) -> usize {
        let n = self.atoms.len();
        let mut worst = self.depth;
        for &a in p {
            for m in 0..n {
                let best = (0..n)
                    .map(|u| self.closeness(a, u).min(self.near[u][m]))
                    .max()
                    .unwrap_or(0);
                worst = worst.min(best);
            }
        }
        for &b in q {
            for m in 0..n {
                let best = (0..n)
                    .map(|u| self.closeness(m, u).min(self.near[u][b]))
                    .max()
                    .unwrap_or(0);
                worst = worst.min(best);
            }
        }
        worst
    }

    fn distance(&self, closeness: usize, base: Rational) -> Rational {
        if closeness >= self.depth {
            Rational::zero()
        } else {
            pow(base, closeness as u32)
        }
    }

    /// One-sided distance from the graph to `(P × M) ∪ (M × Q)`, on atom
    /// indices.
    pub fn excess(&self, p: &[usize], q: &[usize], base: Rational) -> Option<Rational> {
        let c = self.excess_closeness(&self.set_of(p), &self.set_of(q))?;
        Some(self.distance(c, base))
    }

    /// Hausdorff distance from the graph to `(P × M) ∪ (M × Q)` in the
    /// max-product visual metric, on atom indices.
    pub fn hausdorff(&self, p: &[usize], q: &[usize], base: Rational) -> Option<Rational> {
        let e = self.excess_closeness(&self.set_of(p), &self.set_of(q))?;
        let d = self.deficit_closeness(p, q);
        Some(self.distance(e.min(d), base))
    }

    /// Atom with the largest image, first on ties.
    fn widest(&self) -> usize {
        (0..self.atoms.len())
            .max_by_key(|&u| (self.images[u].count_ones(..), std::cmp::Reverse(u)))
            .unwrap_or(0)
    }

    fn hits(&self) -> Vec<usize> {
        let mut h = vec![0; self.atoms.len()];
        for img in &self.images {
            for v in img.ones() {
                h[v] += 1;
            }
        }
        h
    }
}

/// Hausdorff distance between the graph and `(P × M) ∪ (M × Q)`.
pub fn hausdorff_to_sharp(
    graph: &GraphAtResolution,
    p: &[BoundaryPoint],
    q: &[BoundaryPoint],
    base: Rational,
) -> Result<Rational, BoundaryError> {
    if p.is_empty() && q.is_empty() {
        return Err(BoundaryError::TooFewPoints { got: 0, need: 1 });
    }
    let pa: Vec<usize> = p.iter().map(|x| graph.atom_of(x)).collect::<Result<_, _>>()?;
    let qa: Vec<usize> = q.iter().map(|x| graph.atom_of(x)).collect::<Result<_, _>>()?;
    Ok(graph.hausdorff(&pa, &qa, base).expect("target is nonempty"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapsingLimit {
    /// The end whose neighbourhoods get spread over everything.
    pub a: BoundaryPoint,
    /// The end everything else collapses to.
    pub c: BoundaryPoint,
    /// Hausdorff distance of each graph to `({a} × M) ∪ (M × {c})`.
    #[serde(serialize_with = "serialize_trace")]
    pub trace: Vec<Rational>,
    /// Distances at or below this are zero at the working depth.
    #[serde(serialize_with = "crate::rational::serialize")]
    pub floor: Rational,
}

fn serialize_trace<S: serde::Serializer>(t: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (i, h) in t.iter().enumerate() {
        seq.serialize_element(&serde_json::json!({
            "i": i,
            "hausdorff": crate::rational::format_rational(h),
        }))?;
    }
    seq.end()
}

fn tail_len(n: usize) -> usize {
    (n / 3).max(2).min(n)
}

/// Detects a pair `(a, c)` with the sequence converging to `c` away from
/// `a`: the widest atom and the most hit atom must be the same over the
/// last third of the sequence, and the latter must be hit from more than
/// half of the atoms at the end.
pub fn collapsing_limit(
    seq: &[TreeAutomorphism],
    depth: usize,
    base: Rational,
) -> Result<Option<CollapsingLimit>, BoundaryError> {
    if seq.is_empty() {
        return Err(BoundaryError::TooFewPoints { got: 0, need: 1 });
    }
    let graphs: Vec<GraphAtResolution> = seq
        .iter()
        .map(|g| GraphAtResolution::new(g, depth))
        .collect::<Result<_, _>>()?;
    let modes: Vec<(usize, usize, usize)> = graphs
        .iter()
        .map(|g| {
            let hits = g.hits();
            let (c, hc) = hits
                .iter()
                .enumerate()
                .max_by_key(|&(v, &h)| (h, std::cmp::Reverse(v)))
                .map(|(v, &h)| (v, h))
                .unwrap_or((0, 0));
            (g.widest(), c, hc)
        })
        .collect();
    let tail = &modes[modes.len() - tail_len(modes.len())..];
    let (a, c, hc) = *tail.last().expect("nonempty");
    let n = graphs[0].atoms.len();
    if !tail.iter().all(|&(x, y, _)| x == a && y == c) || 2 * hc <= n {
        return Ok(None);
    }
    let trace = graphs
        .iter()
        .map(|g| g.hausdorff(&[a], &[c], base).expect("target is nonempty"))
        .collect();
    let atoms = &graphs[0].atoms;
    Ok(Some(CollapsingLimit {
        a: BoundaryPoint::truncated(atoms[a].clone()),
        c: BoundaryPoint::truncated(atoms[c].clone()),
        trace,
        floor: pow(base, depth as u32),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GerasimovLimit {
    pub p: Vec<BoundaryPoint>,
    pub q: Vec<BoundaryPoint>,
    /// Largest distance from a tail graph to `(P × M) ∪ (M × Q)`.
    #[serde(serialize_with = "crate::rational::serialize")]
    pub residual: Rational,
    #[serde(serialize_with = "crate::rational::serialize")]
    pub floor: Rational,
}

/// Smallest `P`, `Q` with `|P| + |Q| ≤ n − 1` whose thickening contains the
/// tail graphs at the working depth. Candidates are the six widest atoms
/// for `P` and the six most hit atoms for `Q` of the last graph.
pub fn gerasimov_limit(
    seq: &[TreeAutomorphism],
    n: usize,
    depth: usize,
    base: Rational,
) -> Result<GerasimovLimit, BoundaryError> {
    const CANDIDATES: usize = 6;
    if n < 2 {
        return Err(BoundaryError::TooFewPoints { got: n, need: 2 });
    }
    if seq.is_empty() {
        return Err(BoundaryError::TooFewPoints { got: 0, need: 1 });
    }
    let tail = &seq[seq.len() - tail_len(seq.len())..];
    let graphs: Vec<GraphAtResolution> = tail
        .iter()
        .map(|g| GraphAtResolution::new(g, depth))
        .collect::<Result<_, _>>()?;
    let last = graphs.last().expect("nonempty");
    let atoms = last.atoms.len();
    let hits = last.hits();
    let cand_p: Vec<usize> = (0..atoms)
        .sorted_by_key(|&u| std::cmp::Reverse(last.images[u].count_ones(..)))
        .take(CANDIDATES)
        .collect();
    let cand_q: Vec<usize> = (0..atoms)
        .sorted_by_key(|&v| std::cmp::Reverse(hits[v]))
        .take(CANDIDATES)
        .collect();
    let floor = pow(base, depth as u32);
    for size in 1..n {
        for np in 0..=size {
            for p in cand_p.iter().copied().combinations(np) {
                for q in cand_q.iter().copied().combinations(size - np) {
                    let mut residual = Rational::zero();
                    let mut ok = true;
                    for g in &graphs {
                        match g.excess(&p, &q, base) {
                            Some(r) if r <= floor => residual = residual.max(r),
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        let pts = |s: &[usize]| {
                            s.iter()
                                .map(|&u| BoundaryPoint::truncated(last.atoms[u].clone()))
                                .collect()
                        };
                        return Ok(GerasimovLimit {
                            p: pts(&p),
                            q: pts(&q),
                            residual,
                            floor,
                        });
                    }
                }
            }
        }
    }
    Err(BoundaryError::BudgetExhausted(n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConicalWitness {
    /// `γ_i(x)`, constant along the sequence.
    pub b: BoundaryPoint,
    /// Where everything away from `x` collapses.
    pub c: BoundaryPoint,
    /// `steps[j]`: first power mapping the complement of the cylinder at
    /// `x[..j + 1]` into the atom of `c`.
    pub steps: Vec<u32>,
    /// The point `w` with `γ_i(x, c, x_i) = (x, c, w)`.
    pub anchor: BoundaryPoint,
    /// `x_i = γ_i⁻¹(w)`, approaching `x`.
    pub approach: Vec<BoundaryPoint>,
    /// Whether a conjugate of `g` was needed to move its repelling end to `x`.
    pub conjugated: bool,
}

fn projective_candidates(p: u64, prec: u32) -> Result<Vec<ProjPoint>, BoundaryError> {
    let mut out = vec![ProjPoint::infinity(p)];
    for n in 0..2 * p as i64 + 4 {
        out.push(ProjPoint::from_i64(p, prec, n)?);
    }
    Ok(out)
}

fn pick_distinct(
    cands: &[ProjPoint],
    avoid: &[&ProjPoint],
    depth: usize,
) -> Result<ProjPoint, BoundaryError> {
    let words: Vec<Word> = avoid.iter().map(|x| x.word(depth)).collect::<Result<_, _>>()?;
    for c in cands {
        if !words.contains(&c.word(depth)?) {
            return Ok(*c);
        }
    }
    Err(BoundaryError::Unsupported("no auxiliary point".into()))
}

/// An end separated from both `x` and `c` right after they branch.
fn anchor_point(model: &RegularTreeModel, x: &BoundaryPoint, c: &BoundaryPoint, depth: usize) -> Result<BoundaryPoint, BoundaryError> {
    let xw = x.word(depth)?;
    let cw = c.word(depth)?;
    let h = common_prefix_len(&xw, &cw);
    if h >= depth {
        return Err(BoundaryError::Indistinguishable(x.to_string(), c.to_string(), depth));
    }
    if let Some(l) = (0..model.arity(h)).find(|&l| l != xw[h] && l != cw[h]) {
        let mut w = xw[..h].to_vec();
        w.push(l);
        return Ok(BoundaryPoint::with_tail(w, 0));
    }
    if h + 1 >= depth {
        return Err(BoundaryError::WindowTooDeep { needed: h + 2, depth });
    }
    let mut w = cw[..h + 1].to_vec();
    w.push(if cw[h + 1] == 0 { 1 } else { 0 });
    Ok(BoundaryPoint::with_tail(w, 0))
}

/// Certifies at `depth` that `x` is a conical limit point for the group
/// generated by a conjugate of the loxodromic `g`.
///
/// When `x` is not already the repelling end of `g`, `g` must be a Möbius
/// map and is conjugated by `h` with `h(repelling) = x`.
pub fn conical_witness(
    x: &BoundaryPoint,
    g: &TreeAutomorphism,
    depth: usize,
) -> Result<ConicalWitness, BoundaryError> {
    let g = match g {
        TreeAutomorphism::Mobius { m, .. } => TreeAutomorphism::Mobius { m: *m, depth },
        TreeAutomorphism::Explicit { model, portrait } => TreeAutomorphism::Explicit {
            model: model.with_depth(depth),
            portrait: portrait.clone(),
        },
        other => other.clone(),
    };
    let class = classify_automorphism(&g)?;
    if class.kind != DynamicsKind::Loxodromic {
        return Err(BoundaryError::NotLoxodromic);
    }
    let model = g.model()?.with_depth(depth);
    model.validate_point(x)?;
    let repelling = class.repelling.expect("loxodromic");
    let xw = x.word(depth)?;
    let (gp, c, conjugated) = if repelling.word(depth)? == xw {
        (g.clone(), class.attracting.expect("loxodromic"), false)
    } else {
        let TreeAutomorphism::Mobius { m, .. } = &g else {
            return Err(BoundaryError::Unsupported(
                "conjugating a non-Möbius automorphism".into(),
            ));
        };
        let p = m.prime();
        let prec = max_precision(p).min(4 * depth as u32 + 8);
        let ends = EndMap { p, depth, prec };
        let FixedPoints::Attracting { attracting, repelling } = fixed_points(m)? else {
            return Err(BoundaryError::NotLoxodromic);
        };
        let xp = ends.from_boundary(x)?;
        let cands = projective_candidates(p, prec)?;
        let t1 = pick_distinct(&cands, &[&repelling, &attracting], depth)?;
        let y = pick_distinct(&cands, &[&xp], depth)?;
        let t2 = pick_distinct(&cands, &[&xp, &y], depth)?;
        let s1 = solve_sharply3(&repelling, &attracting, &t1)?;
        let s2 = solve_sharply3(&xp, &y, &t2)?;
        let h = s2.compose(&s1.inverse())?;
        let conj: Mobius = h.compose(m)?.compose(&h.inverse())?;
        if mobius_act(&conj, &xp)?.word(depth)? != xw {
            return Err(BoundaryError::WitnessFailed("conjugate does not fix x".into()));
        }
        let c = BoundaryPoint::truncated(y.word(depth)?);
        (TreeAutomorphism::Mobius { m: conj, depth }, c, true)
    };
    let cw = c.word(depth)?;
    let ell = class.translation_length.max(1) as usize;
    let max_power = ((2 * depth + 4) / ell + 2) as u32;

    let mut powers: Vec<TreeAutomorphism> = Vec::new();
    let mut steps = Vec::new();
    for j in 1..depth {
        let siblings: Vec<Word> = (0..j)
            .flat_map(|k| {
                let xw = &xw;
                (0..model.arity(k)).filter(move |&l| l != xw[k]).map(move |l| {
                    let mut w = xw[..k].to_vec();
                    w.push(l);
                    w
                })
            })
            .collect();
        let start = steps.last().copied().unwrap_or(1);
        let mut found = None;
        for i in start..=max_power {
            while powers.len() < i as usize {
                powers.push(gp.pow(powers.len() as u32 + 1)?);
            }
            let gi = &powers[i as usize - 1];
            let mut collapses = true;
            for w in &siblings {
                match cylinder_image(gi, w, depth)? {
                    CylinderImage::Cylinder { depth: d, prefix } if d >= depth && prefix == cw => {}
                    _ => {
                        collapses = false;
                        break;
                    }
                }
            }
            if collapses {
                found = Some(i);
                break;
            }
        }
        match found {
            Some(i) => steps.push(i),
            None => {
                return Err(BoundaryError::WitnessFailed(
                    BoundaryPoint::truncated(xw[..j].to_vec()).to_string(),
                ))
            }
        }
    }
    for gi in &powers {
        if gi.boundary_prefix(x, depth)? != xw {
            return Err(BoundaryError::WitnessFailed("x is not fixed".into()));
        }
    }

    let anchor = anchor_point(&model, x, &c, depth)?;
    let aw = anchor.word(depth)?;
    let mut approach = Vec::with_capacity(powers.len());
    for gi in &powers {
        let inv = gi.inverse()?;
        let long = gi.root_shift()? + depth;
        let xi = BoundaryPoint::truncated(inv.boundary_prefix(&anchor, long)?);
        if gi.boundary_prefix(&xi, depth)? != aw {
            return Err(BoundaryError::WitnessFailed("triple is not carried to the anchor".into()));
        }
        approach.push(xi.truncate(depth));
    }
    let lcps: Vec<usize> = approach
        .iter()
        .map(|xi| common_prefix_len(&xi.word(depth).unwrap_or_default(), &xw))
        .collect();
    if lcps.windows(2).any(|w| w[1] < w[0]) || lcps.last() != Some(&depth) {
        return Err(BoundaryError::WitnessFailed("x_i do not approach x".into()));
    }
    Ok(ConicalWitness {
        b: x.truncate(depth),
        c,
        steps,
        anchor,
        approach,
        conjugated,
    })
}
