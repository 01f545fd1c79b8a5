//! Best sup-norm approximation of a crossratio table by a metric tree.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::crossratio::{CrossratioError, CrossratioTable};
use crate::metric_tree::{MetricTree, NodeId};
use crate::rational::Rational;
use crate::simplex::{big, maximize};

/// Largest ground set handled by exhaustive topology enumeration.
pub const MAX_FIT_POINTS: usize = 8;

#[derive(Debug, Clone)]
pub struct TreeEmbedding {
    pub tree: MetricTree,
    /// Tree node of each ground element, in ground order.
    pub embedding: Vec<NodeId>,
    /// `max |(xy|zw) − (xy|zw)_τ|` over distinct quadruples.
    pub deviation: Rational,
}

impl TreeEmbedding {
    pub fn node_of(&self, ground_index: usize) -> NodeId {
        self.embedding[ground_index]
    }
}

struct Quartet {
    leaves: [usize; 4],
    mask: u32,
    /// Values of `(ab|cd)`, `(ac|bd)`, `(ad|bc)`.
    values: [Rational; 3],
}

impl Quartet {
    fn pair_mask(&self, pairing: usize) -> u32 {
        let [a, b, c, d] = self.leaves;
        let partner = [b, c, d][pairing];
        (1 << a) | (1 << partner)
    }
}

/// Unrooted binary tree: leaves `0..n`, internal nodes `n..2n−2`.
type Shape = Vec<(usize, usize)>;

fn shapes(n: usize) -> Vec<Shape> {
    let mut out = Vec::new();
    let start = vec![(0, n), (1, n), (2, n)];
    grow(n, 3, n + 1, start, &mut out);
    out
}

fn grow(n: usize, next_leaf: usize, next_internal: usize, shape: Shape, out: &mut Vec<Shape>) {
    if next_leaf == n {
        out.push(shape);
        return;
    }
    for e in 0..shape.len() {
        let (a, b) = shape[e];
        let mut s = shape.clone();
        s[e] = (a, next_internal);
        s.push((next_internal, b));
        s.push((next_internal, next_leaf));
        grow(n, next_leaf + 1, next_internal + 1, s, out);
    }
}

/// Leaf masks on the far side of each internal edge.
fn splits(n: usize, shape: &Shape) -> Vec<(usize, usize, u32)> {
    let nodes = 2 * n - 2;
    let mut adj = vec![Vec::new(); nodes];
    for &(a, b) in shape {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut out = Vec::new();
    for &(a, b) in shape {
        if a < n || b < n {
            continue;
        }
        let mut mask = 0u32;
        let mut stack = vec![(b, a)];
        while let Some((v, from)) = stack.pop() {
            if v < n {
                mask |= 1 << v;
            }
            for &w in &adj[v] {
                if w != from {
                    stack.push((w, v));
                }
            }
        }
        out.push((a, b, mask));
    }
    out
}

struct ShapeData {
    lower: Rational,
    /// Internal-edge subset → (min, max) target value over quartets it
    /// must realize.
    groups: BTreeMap<u32, (Rational, Rational)>,
}

fn analyse(quartets: &[Quartet], splits: &[(usize, usize, u32)]) -> ShapeData {
    let mut lower = Rational::zero();
    let mut groups: BTreeMap<u32, (Rational, Rational)> = BTreeMap::new();
    for q in quartets {
        let mut edges = 0u32;
        let mut pairing = None;
        for (e, &(_, _, mask)) in splits.iter().enumerate() {
            let inside = mask & q.mask;
            if inside.count_ones() == 2 {
                edges |= 1 << e;
                pairing = (0..3).find(|&i| {
                    let pm = q.pair_mask(i);
                    inside == pm || inside == q.mask ^ pm
                });
            }
        }
        for (i, v) in q.values.iter().enumerate() {
            if Some(i) != pairing {
                lower = lower.max(*v);
            }
        }
        if let Some(i) = pairing {
            let v = q.values[i];
            groups
                .entry(edges)
                .and_modify(|(lo, hi)| {
                    *lo = (*lo).min(v);
                    *hi = (*hi).max(v);
                })
                .or_insert((v, v));
        }
    }
    ShapeData { lower, groups }
}

fn small(r: &BigRational) -> Result<Rational, CrossratioError> {
    let n = r.numer().to_i64();
    let d = r.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Rational::new(n, d)),
        _ => Err(CrossratioError::Malformed("fitted value overflows i64".into())),
    }
}

/// Optimal internal edge lengths and deviation for one shape.
fn solve(
    data: &ShapeData,
    n_edges: usize,
) -> Result<(Rational, Vec<Rational>), CrossratioError> {
    let top = data
        .groups
        .values()
        .map(|&(_, hi)| hi)
        .max()
        .unwrap_or_else(Rational::zero);
    let t_big = big(top);
    let one = BigRational::from_integer(BigInt::from(1));
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (&edges, &(lo, hi)) in &data.groups {
        let row = |sign: &BigRational| {
            let mut r: Vec<BigRational> = (0..n_edges)
                .map(|e| {
                    if edges & (1 << e) != 0 {
                        sign.clone()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect();
            r.push(one.clone());
            r
        };
        a.push(row(&one));
        b.push(big(lo) + &t_big);
        a.push(row(&-one.clone()));
        b.push(&t_big - big(hi));
    }
    let mut cap = vec![BigRational::zero(); n_edges];
    cap.push(one.clone());
    a.push(cap);
    b.push(t_big.clone());
    let mut c = vec![BigRational::zero(); n_edges];
    c.push(one);
    let sol = maximize(&c, &a, &b).expect("slack variable is capped");
    let t = small(&(t_big - &sol.value))?;
    let lengths = sol.x[..n_edges].iter().map(small).collect::<Result<Vec<_>, _>>()?;
    Ok((t.max(data.lower), lengths))
}

fn fresh_names(ground: &[String], count: usize) -> Vec<String> {
    let taken: BTreeSet<&str> = ground.iter().map(String::as_str).collect();
    let mut prefix = String::from("v");
    while (0..count).any(|i| taken.contains(format!("{prefix}{i}").as_str())) {
        prefix.insert(0, '_');
    }
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

fn star_embedding(tbl: &CrossratioTable) -> Result<TreeEmbedding, CrossratioError> {
    let ground = tbl.ground();
    let one = Rational::from_integer(1);
    let (nodes, edges): (Vec<String>, Vec<(String, String, Rational)>) = match ground.len() {
        0 => return Err(CrossratioError::GroundTooSmall { got: 0, need: 1 }),
        1 => (ground.to_vec(), vec![]),
        2 => (ground.to_vec(), vec![(ground[0].clone(), ground[1].clone(), one)]),
        _ => {
            let c = fresh_names(ground, 1).remove(0);
            let mut nodes = ground.to_vec();
            nodes.push(c.clone());
            let edges = ground.iter().map(|g| (g.clone(), c.clone(), one)).collect();
            (nodes, edges)
        }
    };
    let tree = MetricTree::new(&nodes, &edges, Some(ground)).expect("star is a tree");
    let embedding = (0..ground.len()).map(NodeId).collect();
    Ok(TreeEmbedding {
        tree,
        embedding,
        deviation: Rational::zero(),
    })
}

/// Fits a metric tree to `tbl` minimizing the largest crossratio error.
///
/// Every unrooted binary leaf-labelled shape is tried; internal edge
/// lengths come from an exact linear program and zero-length internal edges
/// are contracted. Pendant edges get length 1 since they do not affect
/// crossratios.
pub fn fit_tree(tbl: &CrossratioTable) -> Result<TreeEmbedding, CrossratioError> {
    let n = tbl.len();
    if n > MAX_FIT_POINTS {
        return Err(CrossratioError::GroundTooLarge {
            got: n,
            max: MAX_FIT_POINTS,
        });
    }
    if n < 4 {
        return star_embedding(tbl);
    }
    let mut quartets = Vec::new();
    for q in (0..n).combinations(4) {
        let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
        quartets.push(Quartet {
            leaves: [a, b, c, d],
            mask: q.iter().map(|&i| 1u32 << i).sum(),
            values: [
                tbl.value(a, b, c, d)?,
                tbl.value(a, c, b, d)?,
                tbl.value(a, d, b, c)?,
            ],
        });
    }

    let mut candidates: Vec<(Shape, Vec<(usize, usize, u32)>, ShapeData)> = shapes(n)
        .into_iter()
        .map(|s| {
            let sp = splits(n, &s);
            let data = analyse(&quartets, &sp);
            (s, sp, data)
        })
        .collect();
    candidates.sort_by_key(|c| c.2.lower);

    let mut best: Option<(Rational, usize, Vec<Rational>)> = None;
    for (i, (_, sp, data)) in candidates.iter().enumerate() {
        if let Some((b, _, _)) = &best {
            if data.lower >= *b {
                break;
            }
            let spread = data
                .groups
                .values()
                .map(|&(lo, hi)| (hi - lo) / 2)
                .max()
                .unwrap_or_else(Rational::zero);
            if spread >= *b {
                continue;
            }
        }
        let (dev, lengths) = solve(data, sp.len())?;
        if best.as_ref().is_none_or(|(b, _, _)| dev < *b) {
            best = Some((dev, i, lengths));
        }
    }
    let (deviation, idx, lengths) = best.expect("at least one shape");
    let (shape, sp, _) = &candidates[idx];
    build(tbl, n, shape, sp, &lengths, deviation)
}

fn build(
    tbl: &CrossratioTable,
    n: usize,
    shape: &Shape,
    sp: &[(usize, usize, u32)],
    lengths: &[Rational],
    deviation: Rational,
) -> Result<TreeEmbedding, CrossratioError> {
    let total = 2 * n - 2;
    // Merge endpoints of zero-length internal edges.
    let mut rep: Vec<usize> = (0..total).collect();
    fn find(rep: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while rep[r] != r {
            r = rep[r];
        }
        rep[v] = r;
        r
    }
    let mut internal_len = BTreeMap::new();
    for (&(a, b, _), &l) in sp.iter().zip(lengths) {
        if l.is_zero() {
            let (ra, rb) = (find(&mut rep, a), find(&mut rep, b));
            rep[ra.max(rb)] = ra.min(rb);
        } else {
            internal_len.insert((a, b), l);
        }
    }
    let reps: BTreeSet<usize> = (n..total).map(|v| find(&mut rep, v)).collect();
    let names = fresh_names(tbl.ground(), reps.len());
    let mut name_of: BTreeMap<usize, String> = BTreeMap::new();
    for (i, g) in tbl.ground().iter().enumerate() {
        name_of.insert(i, g.clone());
    }
    for (r, nm) in reps.iter().zip(names) {
        name_of.insert(*r, nm);
    }
    let mut edges = Vec::new();
    for &(a, b) in shape {
        let (ra, rb) = (find(&mut rep, a), find(&mut rep, b));
        if ra == rb {
            continue;
        }
        let len = if a < n || b < n {
            Rational::from_integer(1)
        } else {
            internal_len[&(a, b)]
        };
        edges.push((name_of[&ra].clone(), name_of[&rb].clone(), len));
    }
    let nodes: Vec<String> = name_of.values().cloned().collect();
    let tree = MetricTree::new(&nodes, &edges, Some(tbl.ground()))
        .map_err(|e| CrossratioError::Malformed(e.to_string()))?;
    let embedding = tbl
        .ground()
        .iter()
        .map(|g| tree.node(g).expect("leaf present"))
        .collect();
    Ok(TreeEmbedding {
        tree,
        embedding,
        deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::CrValue;
    use crate::metric_tree::h_tree;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn shape_counts() {
        assert_eq!(shapes(4).len(), 3);
        assert_eq!(shapes(5).len(), 15);
        assert_eq!(shapes(6).len(), 105);
    }

    #[test]
    fn h_tree_round_trip() {
        let t = h_tree().leaf_table();
        let fit = fit_tree(&t).unwrap();
        assert_eq!(fit.deviation, r(0));
        assert_eq!(fit.tree.leaf_table(), t);
    }

    #[test]
    fn zero_table_gives_star() {
        let mut t = CrossratioTable::new(["a", "b", "c", "d"].map(String::from).to_vec()).unwrap();
        for (x, y, z, w) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
            t.set(x, y, z, w, CrValue::Finite(r(0)));
        }
        let fit = fit_tree(&t).unwrap();
        assert_eq!(fit.deviation, r(0));
        assert_eq!(fit.tree.len(), 5);
        assert_eq!(fit.tree.degree(fit.tree.node("v0").unwrap()), 4);
    }

    #[test]
    fn perturbed_h_tree() {
        // Raising the realized pairing keeps the table a tree table.
        let mut t = h_tree().leaf_table();
        t.set(0, 1, 2, 3, CrValue::Finite(r(2)));
        assert_eq!(fit_tree(&t).unwrap().deviation, r(0));
        // Raising a vanishing pairing: on four points the best fit keeps the
        // largest pairing and pays the second largest.
        let mut t = h_tree().leaf_table();
        t.set(0, 2, 1, 3, CrValue::Finite(r(1)));
        assert_eq!(fit_tree(&t).unwrap().deviation, r(1));
    }

    #[test]
    fn four_point_deviation_is_second_largest_pairing() {
        for (a, b, c) in [(0, 0, 0), (3, 1, 0), (2, 2, 5), (1, 4, 4)] {
            let mut t =
                CrossratioTable::new(["a", "b", "c", "d"].map(String::from).to_vec()).unwrap();
            t.set(0, 1, 2, 3, CrValue::Finite(r(a)));
            t.set(0, 2, 1, 3, CrValue::Finite(r(b)));
            t.set(0, 3, 1, 2, CrValue::Finite(r(c)));
            let mut v = [a, b, c];
            v.sort();
            assert_eq!(fit_tree(&t).unwrap().deviation, r(v[1]));
        }
    }

    #[test]
    fn too_large() {
        let g: Vec<String> = (0..9).map(|i| format!("p{i}")).collect();
        let t = CrossratioTable::from_fn(g, |_, _, _, _| r(0));
        assert!(matches!(
            fit_tree(&t),
            Err(CrossratioError::GroundTooLarge { got: 9, max: 8 })
        ));
    }
}
