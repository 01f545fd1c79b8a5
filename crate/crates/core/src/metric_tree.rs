//! Finite metric trees with exact rational edge lengths.
//!
//! Distances are precomputed for every node pair at construction, so all
//! queries are table lookups. The crossratio follows the four-point formula
//! `½·max{0, d(x,z)+d(y,w)−d(x,y)−d(z,w)}`, which is the distance between the
//! paths `[x,y]` and `[z,w]`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crossratio::CrossratioTable;
use crate::rational::{abs_diff, format_rational, parse_rational, RatStr, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("duplicate node identifier {0:?}")]
    DuplicateNode(String),
    #[error("edge {0:?}--{1:?} has non-positive length {2}")]
    NonPositiveLength(String, String, String),
    #[error("a tree on {nodes} nodes needs {} edges, got {edges}", nodes.saturating_sub(1))]
    EdgeCount { nodes: usize, edges: usize },
    #[error("tree is not connected")]
    Disconnected,
    #[error("tree has no nodes")]
    Empty,
    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A point of the geometric realization: a node, or a point strictly inside
/// the edge `from -- to` at distance `offset` from `from`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreePoint {
    Node(NodeId),
    OnEdge {
        from: NodeId,
        to: NodeId,
        offset: Rational,
    },
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    names: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(usize, Rational)>>,
    edges: Vec<(usize, usize, Rational)>,
    leaves: Vec<usize>,
    dist: Vec<Vec<Rational>>,
}

impl MetricTree {
    /// Builds a tree, validating unique names, positive lengths, edge count
    /// and connectivity. Leaf labels default to the degree-one nodes.
    pub fn new<S: AsRef<str>>(
        nodes: &[S],
        edges: &[(S, S, Rational)],
        leaves: Option<&[S]>,
    ) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut index = HashMap::new();
        let mut names = Vec::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            let n = n.as_ref().to_string();
            if index.insert(n.clone(), i).is_some() {
                return Err(TreeError::DuplicateNode(n));
            }
            names.push(n);
        }
        if edges.len() + 1 != nodes.len() {
            return Err(TreeError::EdgeCount {
                nodes: nodes.len(),
                edges: edges.len(),
            });
        }
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| TreeError::UnknownNode(s.to_string()))
        };
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut edge_list = Vec::with_capacity(edges.len());
        for (u, v, len) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            if *len <= Rational::zero() {
                return Err(TreeError::NonPositiveLength(
                    u.to_string(),
                    v.to_string(),
                    format_rational(len),
                ));
            }
            let (a, b) = (lookup(u)?, lookup(v)?);
            adj[a].push((b, *len));
            adj[b].push((a, *len));
            edge_list.push((a, b, *len));
        }
        let n = nodes.len();
        let mut dist = vec![vec![Rational::zero(); n]; n];
        for (src, row) in dist.iter_mut().enumerate() {
            let mut seen = vec![false; n];
            let mut stack = vec![src];
            seen[src] = true;
            let mut count = 1;
            while let Some(u) = stack.pop() {
                for &(v, len) in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        row[v] = row[u] + len;
                        count += 1;
                        stack.push(v);
                    }
                }
            }
            if count != n {
                return Err(TreeError::Disconnected);
            }
        }
        let leaves = match leaves {
            Some(ls) => ls
                .iter()
                .map(|l| lookup(l.as_ref()))
                .collect::<Result<Vec<_>, _>>()?,
            None => (0..n).filter(|&i| adj[i].len() <= 1).collect(),
        };
        Ok(MetricTree {
            names,
            index,
            adj,
            edges: edge_list,
            leaves,
            dist,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn node(&self, name: &str) -> Result<NodeId, TreeError> {
        self.index
            .get(name)
            .map(|&i| NodeId(i))
            .ok_or_else(|| TreeError::UnknownNode(name.to_string()))
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.leaves.iter().map(|&i| NodeId(i)).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, Rational)> + '_ {
        self.edges.iter().map(|&(a, b, l)| (NodeId(a), NodeId(b), l))
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adj[id.0].len()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, Rational)> + '_ {
        self.adj[id.0].iter().map(|&(v, l)| (NodeId(v), l))
    }

    fn check(&self, id: NodeId) -> Result<usize, TreeError> {
        if id.0 < self.names.len() {
            Ok(id.0)
        } else {
            Err(TreeError::NodeOutOfRange(id.0))
        }
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> Result<Rational, TreeError> {
        Ok(self.dist[self.check(u)?][self.check(v)?])
    }

    pub fn distance_by_name(&self, u: &str, v: &str) -> Result<Rational, TreeError> {
        self.distance(self.node(u)?, self.node(v)?)
    }

    /// Nodes of the unique simple path from `u` to `v`, endpoints included.
    pub fn path(&self, u: NodeId, v: NodeId) -> Result<Vec<NodeId>, TreeError> {
        let (mut cur, target) = (self.check(u)?, self.check(v)?);
        let mut out = vec![NodeId(cur)];
        while cur != target {
            let remaining = self.dist[cur][target];
            let &(next, _) = self.adj[cur]
                .iter()
                .find(|&&(w, len)| self.dist[w][target] + len == remaining)
                .expect("tree distances are consistent");
            cur = next;
            out.push(NodeId(cur));
        }
        Ok(out)
    }

    /// The median of three nodes. In a tree it is always a node, so the
    /// `OnEdge` variant is only produced by [`MetricTree::point_on_path`].
    pub fn median(&self, x: NodeId, y: NodeId, z: NodeId) -> Result<TreePoint, TreeError> {
        let (x, y, z) = (self.check(x)?, self.check(y)?, self.check(z)?);
        let d = &self.dist;
        let m = (0..self.len())
            .find(|&m| {
                d[x][m] + d[m][y] == d[x][y]
                    && d[y][m] + d[m][z] == d[y][z]
                    && d[x][m] + d[m][z] == d[x][z]
            })
            .expect("every tree triple has a median");
        Ok(TreePoint::Node(NodeId(m)))
    }

    /// The point at distance `t` from `u` along `[u, v]`.
    pub fn point_on_path(
        &self,
        u: NodeId,
        v: NodeId,
        t: Rational,
    ) -> Result<TreePoint, TreeError> {
        let path = self.path(u, v)?;
        let total = self.dist[u.0][v.0];
        let t = t.max(Rational::zero()).min(total);
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let da = self.dist[u.0][a.0];
            let db = self.dist[u.0][b.0];
            if t == da {
                return Ok(TreePoint::Node(a));
            }
            if t < db {
                return Ok(TreePoint::OnEdge {
                    from: a,
                    to: b,
                    offset: t - da,
                });
            }
        }
        Ok(TreePoint::Node(*path.last().expect("nonempty path")))
    }

    /// Distance between two points of the geometric realization.
    pub fn point_distance(&self, p: &TreePoint, q: &TreePoint) -> Result<Rational, TreeError> {
        // Reduce each point to (anchor node, offset toward the other node).
        let ends = |p: &TreePoint| -> Vec<(NodeId, Rational)> {
            match p {
                TreePoint::Node(n) => vec![(*n, Rational::zero())],
                TreePoint::OnEdge { from, to, offset } => {
                    let len = self.dist[from.0][to.0];
                    vec![(*from, *offset), (*to, len - *offset)]
                }
            }
        };
        if let (
            TreePoint::OnEdge { from: a, to: b, offset: s },
            TreePoint::OnEdge { from: c, to: d, offset: t },
        ) = (p, q)
        {
            let len = self.dist[a.0][b.0];
            if (a, b) == (c, d) {
                return Ok(abs_diff(*s, *t));
            }
            if (a, b) == (d, c) {
                return Ok(abs_diff(*s, len - *t));
            }
        }
        let mut best: Option<Rational> = None;
        for (n1, o1) in ends(p) {
            for (n2, o2) in ends(q) {
                let cand = o1 + self.distance(n1, n2)? + o2;
                best = Some(best.map_or(cand, |b: Rational| b.min(cand)));
            }
        }
        Ok(best.expect("points have anchors"))
    }

    /// `(xy|zw)` by the four-point formula. Any repeated argument gives 0.
    pub fn crossratio(
        &self,
        x: NodeId,
        y: NodeId,
        z: NodeId,
        w: NodeId,
    ) -> Result<Rational, TreeError> {
        let (x, y, z, w) = (self.check(x)?, self.check(y)?, self.check(z)?, self.check(w)?);
        if x == y || x == z || x == w || y == z || y == w || z == w {
            return Ok(Rational::zero());
        }
        let d = &self.dist;
        let v = d[x][z] + d[y][w] - d[x][y] - d[z][w];
        Ok((v / 2).max(Rational::zero()))
    }

    /// Crossratio table over the given nodes, labeled by node name.
    pub fn crossratio_table(&self, nodes: &[NodeId]) -> Result<CrossratioTable, TreeError> {
        for &n in nodes {
            self.check(n)?;
        }
        let labels: Vec<String> = nodes.iter().map(|&n| self.names[n.0].clone()).collect();
        Ok(CrossratioTable::from_fn(labels, |a, b, c, d| {
            self.crossratio(nodes[a], nodes[b], nodes[c], nodes[d])
                .expect("nodes checked")
        }))
    }

    /// Crossratio table over the designated leaves.
    pub fn leaf_table(&self) -> CrossratioTable {
        self.crossratio_table(&self.leaves())
            .expect("leaves are nodes of the tree")
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            nodes: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, l)| (self.names[a].clone(), self.names[b].clone(), RatStr(l)))
                .collect(),
            leaves: Some(self.leaves.iter().map(|&i| self.names[i].clone()).collect()),
        }
    }

    pub fn from_json(j: &TreeJson) -> Result<Self, TreeError> {
        let edges: Vec<(&str, &str, Rational)> = j
            .edges
            .iter()
            .map(|(a, b, l)| (a.as_str(), b.as_str(), l.0))
            .collect();
        let nodes: Vec<&str> = j.nodes.iter().map(String::as_str).collect();
        let leaves: Option<Vec<&str>> = j
            .leaves
            .as_ref()
            .map(|ls| ls.iter().map(String::as_str).collect());
        MetricTree::new(&nodes, &edges, leaves.as_deref())
    }

    /// Graphviz export; every edge carries `len="p/q"`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph tree {\n");
        for n in &self.names {
            let _ = writeln!(out, "  \"{n}\";");
        }
        for &(a, b, l) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [len=\"{}\"];",
                self.names[a],
                self.names[b],
                format_rational(&l)
            );
        }
        out.push_str("}\n");
        out
    }

    /// Reads the subset of DOT produced by [`MetricTree::to_dot`]: node
    /// statements and `a -- b [len="p/q"]` edge statements.
    pub fn from_dot(src: &str) -> Result<Self, TreeError> {
        let mut nodes: Vec<String> = Vec::new();
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        let mut edges: Vec<(String, String, Rational)> = Vec::new();
        let mut add = |n: &str, nodes: &mut Vec<String>| {
            if seen.insert(n.to_string(), ()).is_none() {
                nodes.push(n.to_string());
            }
        };
        for (lineno, raw) in src.lines().enumerate() {
            let line = lineno + 1;
            let perr = |msg: &str| TreeError::Parse {
                line,
                msg: msg.to_string(),
            };
            let stmt = raw.trim().trim_end_matches(';').trim();
            if stmt.is_empty()
                || stmt.starts_with("graph")
                || stmt.starts_with('}')
                || stmt.starts_with("//")
            {
                continue;
            }
            if let Some((lhs, rhs)) = stmt.split_once("--") {
                let (target, attrs) = match rhs.split_once('[') {
                    Some((t, a)) => (t, a.trim_end_matches(']')),
                    None => return Err(perr("edge without len attribute")),
                };
                let a = unquote(lhs);
                let b = unquote(target);
                let len_val = attrs
                    .split(',')
                    .filter_map(|kv| kv.split_once('='))
                    .find(|(k, _)| k.trim() == "len")
                    .map(|(_, v)| unquote(v))
                    .ok_or_else(|| perr("edge without len attribute"))?;
                let len = parse_rational(&len_val).map_err(|e| perr(&e.to_string()))?;
                add(&a, &mut nodes);
                add(&b, &mut nodes);
                edges.push((a, b, len));
            } else {
                let name = unquote(stmt.split('[').next().unwrap_or(stmt));
                if name.is_empty() {
                    return Err(perr("empty node statement"));
                }
                add(&name, &mut nodes);
            }
        }
        let edges: Vec<(&str, &str, Rational)> = edges
            .iter()
            .map(|(a, b, l)| (a.as_str(), b.as_str(), *l))
            .collect();
        let nodes: Vec<&str> = nodes.iter().map(String::as_str).collect();
        MetricTree::new(&nodes, &edges, None)
    }

    /// Random tree with `n_leaves` labeled leaves `l0, l1, …` and internal
    /// nodes `v0, v1, …`. Edge lengths are `p/q` with `q ≤ 4`, `p ≤ 2q`.
    pub fn random<R: Rng>(rng: &mut R, n_leaves: usize) -> Self {
        assert!(n_leaves >= 2, "need at least two leaves");
        fn len<R: Rng>(rng: &mut R) -> Rational {
            let q = rng.gen_range(1..=4i64);
            Rational::new(rng.gen_range(1..=2 * q), q)
        }
        let mut names: Vec<String> = vec!["l0".into(), "l1".into()];
        let mut edges: Vec<(usize, usize, Rational)> = vec![(0, 1, len(rng))];
        let mut internal = 0;
        for leaf in 2..n_leaves {
            let leaf_id = names.len();
            names.push(format!("l{leaf}"));
            let internals: Vec<usize> = (0..leaf_id)
                .filter(|&i| names[i].starts_with('v'))
                .collect();
            // Mostly subdivide an edge; sometimes attach to an existing
            // internal node to produce higher-degree vertices.
            if !internals.is_empty() && rng.gen_bool(0.25) {
                let at = internals[rng.gen_range(0..internals.len())];
                edges.push((at, leaf_id, len(rng)));
            } else {
                let e = rng.gen_range(0..edges.len());
                let (a, b, _) = edges[e];
                let mid = names.len();
                names.push(format!("v{internal}"));
                internal += 1;
                edges[e] = (a, mid, len(rng));
                edges.push((mid, b, len(rng)));
                edges.push((mid, leaf_id, len(rng)));
            }
        }
        let leaves: Vec<String> = (0..n_leaves).map(|i| format!("l{i}")).collect();
        let edges: Vec<(&str, &str, Rational)> = edges
            .iter()
            .map(|&(a, b, l)| (names[a].as_str(), names[b].as_str(), l))
            .collect();
        let nodes: Vec<&str> = names.iter().map(String::as_str).collect();
        let leaves: Vec<&str> = leaves.iter().map(String::as_str).collect();
        MetricTree::new(&nodes, &edges, Some(&leaves)).expect("generated tree is valid")
    }
}

fn unquote(s: &str) -> String {
    s.trim().trim_matches('"').to_string()
}

/// JSON form: `{nodes:[...], edges:[[u,v,"p/q"],...], leaves:[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, RatStr)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaves: Option<Vec<String>>,
}

/// The H-shaped tree: leaves x, y on m1, z, w on m2, five unit edges.
pub fn h_tree() -> MetricTree {
    let one = Rational::from_integer(1);
    MetricTree::new(
        &["x", "y", "z", "w", "m1", "m2"],
        &[
            ("x", "m1", one),
            ("y", "m1", one),
            ("m1", "m2", one),
            ("z", "m2", one),
            ("w", "m2", one),
        ],
        Some(&["x", "y", "z", "w"]),
    )
    .expect("valid tree")
}

/// Star with `legs` unit legs around a node named `c`.
pub fn star(legs: usize) -> MetricTree {
    let one = Rational::from_integer(1);
    let mut nodes = vec!["c".to_string()];
    let names: Vec<String> = (0..legs).map(|i| format!("s{i}")).collect();
    nodes.extend(names.iter().cloned());
    let edges: Vec<(&str, &str, Rational)> =
        names.iter().map(|n| ("c", n.as_str(), one)).collect();
    let nodes: Vec<&str> = nodes.iter().map(String::as_str).collect();
    MetricTree::new(&nodes, &edges, None).expect("valid star")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn distances_on_h_tree_and_star() {
        let h = h_tree();
        assert_eq!(h.distance_by_name("x", "x").unwrap(), r(0));
        assert_eq!(h.distance_by_name("x", "z").unwrap(), r(3));
        let s = star(4);
        assert_eq!(s.distance_by_name("s0", "s1").unwrap(), r(2));
    }

    #[test]
    fn unknown_node_is_an_error() {
        let h = h_tree();
        assert_eq!(
            h.distance_by_name("x", "nope"),
            Err(TreeError::UnknownNode("nope".into()))
        );
        assert!(h.distance(NodeId(0), NodeId(99)).is_err());
    }

    #[test]
    fn medians() {
        let h = h_tree();
        let n = |s| h.node(s).unwrap();
        assert_eq!(
            h.median(n("x"), n("y"), n("z")).unwrap(),
            TreePoint::Node(n("m1"))
        );
        assert_eq!(
            h.median(n("x"), n("x"), n("w")).unwrap(),
            TreePoint::Node(n("x"))
        );
        let s = star(4);
        let m = |a, b, c| s.median(s.node(a).unwrap(), s.node(b).unwrap(), s.node(c).unwrap());
        assert_eq!(m("s0", "s1", "s3").unwrap(), TreePoint::Node(s.node("c").unwrap()));
    }

    #[test]
    fn crossratio_examples() {
        let h = h_tree();
        let n = |s| h.node(s).unwrap();
        assert_eq!(h.crossratio(n("x"), n("y"), n("z"), n("w")).unwrap(), r(1));
        assert_eq!(h.crossratio(n("x"), n("z"), n("y"), n("w")).unwrap(), r(0));
        assert_eq!(h.crossratio(n("x"), n("y"), n("x"), n("z")).unwrap(), r(0));
        let s = star(4);
        let m = |a| s.node(a).unwrap();
        assert_eq!(s.crossratio(m("s0"), m("s1"), m("s2"), m("s3")).unwrap(), r(0));
    }

    #[test]
    fn validation_errors() {
        let one = r(1);
        assert!(matches!(
            MetricTree::new(&["a", "a"], &[("a", "a", one)], None),
            Err(TreeError::DuplicateNode(_))
        ));
        assert!(matches!(
            MetricTree::new(&["a", "b"], &[("a", "b", r(0))], None),
            Err(TreeError::NonPositiveLength(..))
        ));
        assert!(matches!(
            MetricTree::new(&["a", "b", "c"], &[("a", "b", one)], None),
            Err(TreeError::EdgeCount { .. })
        ));
        assert!(matches!(
            MetricTree::new(&["a", "b", "c", "d"], &[("a", "b", one), ("b", "a", one), ("c", "d", one)], None),
            Err(TreeError::Disconnected)
        ));
    }

    #[test]
    fn point_on_path_splits_edges() {
        let h = h_tree();
        let n = |s| h.node(s).unwrap();
        let p = h.point_on_path(n("x"), n("z"), Rational::new(3, 2)).unwrap();
        assert_eq!(
            p,
            TreePoint::OnEdge {
                from: n("m1"),
                to: n("m2"),
                offset: Rational::new(1, 2)
            }
        );
        let q = h.point_on_path(n("w"), n("y"), Rational::new(3, 2)).unwrap();
        assert_eq!(h.point_distance(&p, &q).unwrap(), r(0));
        assert_eq!(
            h.point_distance(&p, &TreePoint::Node(n("x"))).unwrap(),
            Rational::new(3, 2)
        );
    }

    #[test]
    fn dot_and_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = MetricTree::random(&mut rng, 6);
        let back = MetricTree::from_dot(&t.to_dot()).unwrap();
        for u in t.nodes() {
            for v in t.nodes() {
                let (a, b) = (t.name(u), t.name(v));
                assert_eq!(
                    t.distance(u, v).unwrap(),
                    back.distance_by_name(a, b).unwrap()
                );
            }
        }
        let json = serde_json::to_string(&t.to_json()).unwrap();
        let parsed: TreeJson = serde_json::from_str(&json).unwrap();
        assert_eq!(MetricTree::from_json(&parsed).unwrap().leaves().len(), 6);
    }

    #[test]
    fn dot_errors_carry_line_numbers() {
        let src = "graph t {\n a -- b [len=\"x\"];\n}\n";
        assert!(matches!(
            MetricTree::from_dot(src),
            Err(TreeError::Parse { line: 2, .. })
        ));
    }
}
