use std::collections::BTreeMap;

use serde::Serialize;

use super::{common_prefix_len, BoundaryError, BoundaryPoint, RegularTreeModel, Word};
use crate::padic_projective::{mobius_vertex_image, Mobius};

/// An automorphism of a rooted tree model.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeAutomorphism {
    /// Root-fixing map given by its portrait: `portrait[w]` permutes the
    /// children of `w`. Vertices without an entry, and all vertices at or
    /// below `model.depth`, move their children rigidly.
    Explicit {
        model: RegularTreeModel,
        portrait: BTreeMap<Word, Vec<u32>>,
    },
    /// A Möbius map acting on the Bruhat–Tits tree, materialized to `depth`.
    Mobius { m: Mobius, depth: usize },
    /// Product of the parts, the last one applied first.
    Composite(Vec<TreeAutomorphism>),
}

fn is_permutation(s: &[u32], n: u32) -> bool {
    let mut seen = vec![false; n as usize];
    s.len() == n as usize
        && s.iter().all(|&x| {
            x < n && !std::mem::replace(&mut seen[x as usize], true)
        })
}

impl TreeAutomorphism {
    pub fn identity(model: RegularTreeModel) -> Self {
        TreeAutomorphism::Explicit {
            model,
            portrait: BTreeMap::new(),
        }
    }

    pub fn explicit(
        model: RegularTreeModel,
        portrait: BTreeMap<Word, Vec<u32>>,
    ) -> Result<Self, BoundaryError> {
        for (w, s) in &portrait {
            if w.len() >= model.depth || !model.is_vertex(w) {
                return Err(BoundaryError::InvalidModel(format!(
                    "portrait vertex {w:?} outside the ball"
                )));
            }
            if !is_permutation(s, model.arity(w.len())) {
                return Err(BoundaryError::InvalidModel(format!(
                    "portrait entry at {w:?} is not a permutation"
                )));
            }
        }
        Ok(TreeAutomorphism::Explicit { model, portrait })
    }

    /// Swaps the first two children of the root.
    pub fn root_swap(model: RegularTreeModel) -> Self {
        let mut s: Vec<u32> = (0..model.root_branching).collect();
        s.swap(0, 1);
        TreeAutomorphism::Explicit {
            model,
            portrait: BTreeMap::from([(Vec::new(), s)]),
        }
    }

    pub fn model(&self) -> Result<RegularTreeModel, BoundaryError> {
        match self {
            TreeAutomorphism::Explicit { model, .. } => Ok(*model),
            TreeAutomorphism::Mobius { m, depth } => {
                RegularTreeModel::bruhat_tits(m.prime() as u32, (*depth).max(1))
            }
            TreeAutomorphism::Composite(parts) => parts
                .first()
                .ok_or_else(|| BoundaryError::InvalidModel("empty composite".into()))?
                .model(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeAutomorphism::Explicit { model, .. } => model.depth,
            TreeAutomorphism::Mobius { depth, .. } => *depth,
            TreeAutomorphism::Composite(parts) => {
                parts.iter().map(|p| p.depth()).min().unwrap_or(0)
            }
        }
    }

    /// Depth of the image of `w` and its first `min(depth, want)` letters.
    pub fn image(&self, w: &[u32], want: usize) -> Result<(usize, Word), BoundaryError> {
        match self {
            TreeAutomorphism::Explicit { portrait, .. } => {
                let out = w
                    .iter()
                    .enumerate()
                    .take(want)
                    .map(|(i, &l)| portrait.get(&w[..i]).map_or(l, |s| s[l as usize]))
                    .collect();
                Ok((w.len(), out))
            }
            TreeAutomorphism::Mobius { m, .. } => Ok(mobius_vertex_image(m, w, want)?),
            TreeAutomorphism::Composite(parts) => {
                let mut cur = w.to_vec();
                for (k, part) in parts.iter().rev().enumerate() {
                    let last = k + 1 == parts.len();
                    let (d, img) = part.image(&cur, if last { want } else { usize::MAX })?;
                    if last {
                        return Ok((d, img));
                    }
                    cur = img;
                }
                Ok((cur.len(), cur.into_iter().take(want).collect()))
            }
        }
    }

    pub fn vertex(&self, w: &[u32]) -> Result<Word, BoundaryError> {
        Ok(self.image(w, usize::MAX)?.1)
    }

    /// Distance from the root to its image.
    pub fn root_shift(&self) -> Result<usize, BoundaryError> {
        Ok(self.image(&[], 0)?.0)
    }

    /// First `len` letters of the image of the end `x`.
    pub fn boundary_prefix(&self, x: &BoundaryPoint, len: usize) -> Result<Word, BoundaryError> {
        let n = len + self.root_shift()?;
        let (d, img) = self.image(&x.word(n)?, len)?;
        debug_assert!(d >= len);
        Ok(img)
    }

    pub fn act_boundary(&self, x: &BoundaryPoint, len: usize) -> Result<BoundaryPoint, BoundaryError> {
        Ok(BoundaryPoint::truncated(self.boundary_prefix(x, len)?))
    }

    pub fn inverse(&self) -> Result<Self, BoundaryError> {
        Ok(match self {
            TreeAutomorphism::Explicit { model, portrait } => {
                let mut inv = BTreeMap::new();
                for (w, s) in portrait {
                    let mut si = vec![0u32; s.len()];
                    for (i, &j) in s.iter().enumerate() {
                        si[j as usize] = i as u32;
                    }
                    inv.insert(self.vertex(w)?, si);
                }
                TreeAutomorphism::Explicit {
                    model: *model,
                    portrait: inv,
                }
            }
            TreeAutomorphism::Mobius { m, depth } => TreeAutomorphism::Mobius {
                m: m.inverse(),
                depth: *depth,
            },
            TreeAutomorphism::Composite(parts) => TreeAutomorphism::Composite(
                parts
                    .iter()
                    .rev()
                    .map(|p| p.inverse())
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &TreeAutomorphism) -> Result<Self, BoundaryError> {
        use TreeAutomorphism as T;
        Ok(match (self, other) {
            (T::Mobius { m: a, depth: da }, T::Mobius { m: b, depth: db }) => T::Mobius {
                m: a.compose(b)?,
                depth: (*da).min(*db),
            },
            (
                T::Explicit { model, portrait: pa },
                T::Explicit {
                    model: mb,
                    portrait: pb,
                },
            ) if model == mb => {
                let mut out = BTreeMap::new();
                for level in 0..model.depth {
                    for w in model.level(level) {
                        let hw = other.vertex(&w)?;
                        let sh = pb.get(&w);
                        let sg = pa.get(&hw);
                        if sh.is_none() && sg.is_none() {
                            continue;
                        }
                        let n = model.arity(level);
                        let s: Vec<u32> = (0..n)
                            .map(|l| {
                                let mid = sh.map_or(l, |s| s[l as usize]);
                                sg.map_or(mid, |s| s[mid as usize])
                            })
                            .collect();
                        if s.iter().enumerate().any(|(i, &j)| i as u32 != j) {
                            out.insert(w, s);
                        }
                    }
                }
                T::Explicit {
                    model: *model,
                    portrait: out,
                }
            }
            _ => T::Composite(vec![self.clone(), other.clone()]),
        })
    }

    pub fn pow(&self, n: u32) -> Result<Self, BoundaryError> {
        if let TreeAutomorphism::Mobius { m, depth } = self {
            return Ok(TreeAutomorphism::Mobius {
                m: m.pow(n)?,
                depth: *depth,
            });
        }
        let mut acc = TreeAutomorphism::identity(self.model()?);
        for _ in 0..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }
}

/// Image of the cylinder `C_u` of ends through `u`, with the defining
/// word known to `min(depth, want)` letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CylinderImage {
    Cylinder { depth: usize, prefix: Word },
    /// Everything outside the cylinder at `prefix`.
    Complement { depth: usize, prefix: Word },
}

/// `g(C_u)` is `C_{g(u)}` when `g` keeps the edge from `u`'s parent pointing
/// away from the root, and the complement of `C_{g(parent)}` otherwise.
pub fn cylinder_image(
    g: &TreeAutomorphism,
    u: &[u32],
    want: usize,
) -> Result<CylinderImage, BoundaryError> {
    assert!(!u.is_empty(), "the root has no cylinder");
    let (dp, wp) = g.image(&u[..u.len() - 1], want)?;
    let (du, wu) = g.image(u, want)?;
    Ok(if du == dp + 1 {
        CylinderImage::Cylinder {
            depth: du,
            prefix: wu,
        }
    } else {
        CylinderImage::Complement {
            depth: dp,
            prefix: wp,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DynamicsKind {
    Elliptic,
    Inversion,
    Loxodromic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynamicsClass {
    pub kind: DynamicsKind,
    /// Minimal displacement; 0 unless loxodromic.
    pub translation_length: u64,
    pub attracting: Option<BoundaryPoint>,
    pub repelling: Option<BoundaryPoint>,
    pub fixed_vertex: Option<Word>,
    /// For loxodromic maps: `g` sends a cylinder around the attracting end
    /// properly into itself.
    pub criterion_checked: bool,
}

fn displacement(g: &TreeAutomorphism, w: &[u32]) -> Result<usize, BoundaryError> {
    let (d, img) = g.image(w, w.len())?;
    let l = common_prefix_len(w, &img);
    Ok(w.len() + d - 2 * l)
}

/// Ends of the axis: follow `g` from an axis vertex until the orbit
/// descends past `depth`.
fn axis_end(
    g: &TreeAutomorphism,
    start: &[u32],
    ell: usize,
    depth: usize,
) -> Result<Word, BoundaryError> {
    let mut u = start.to_vec();
    for _ in 0..(start.len() + depth) / ell.max(1) + 4 {
        let next = g.vertex(&u)?;
        if next.len() == u.len() + ell && next.len() >= depth {
            return Ok(next[..depth].to_vec());
        }
        u = next;
    }
    Err(BoundaryError::Undecided(depth))
}

/// Classifies `g` by scanning vertex displacements over its ball.
///
/// A tree automorphism fixes a vertex (elliptic), swaps the ends of an edge
/// (inversion), or translates along an axis (loxodromic); there are no
/// parabolic ones. When every minimizer of the displacement sits on the
/// boundary sphere of the ball the scan cannot decide.
pub fn classify_automorphism(g: &TreeAutomorphism) -> Result<DynamicsClass, BoundaryError> {
    let model = g.model()?;
    let depth = g.depth();
    if depth == 0 {
        return Err(BoundaryError::DepthTooSmall(depth));
    }
    let model = model.with_depth(depth);
    let mut best = usize::MAX;
    let mut minimizers: Vec<Word> = Vec::new();
    for w in model.ball() {
        let d = displacement(g, &w)?;
        if d < best {
            best = d;
            minimizers.clear();
        }
        if d == best {
            minimizers.push(w);
        }
    }
    if best == 0 {
        return Ok(DynamicsClass {
            kind: DynamicsKind::Elliptic,
            translation_length: 0,
            attracting: None,
            repelling: None,
            fixed_vertex: minimizers.into_iter().next(),
            criterion_checked: false,
        });
    }
    let Some(v) = minimizers.iter().find(|w| w.len() < depth).cloned() else {
        return Err(BoundaryError::Undecided(depth));
    };
    if best == 1 && g.vertex(&g.vertex(&v)?)? == v {
        return Ok(DynamicsClass {
            kind: DynamicsKind::Inversion,
            translation_length: 0,
            attracting: None,
            repelling: None,
            fixed_vertex: None,
            criterion_checked: false,
        });
    }
    let ginv = g.inverse()?;
    let attracting = axis_end(g, &v, best, depth)?;
    let repelling = axis_end(&ginv, &v, best, depth)?;
    let criterion_checked = match cylinder_image(g, &attracting, usize::MAX)? {
        CylinderImage::Cylinder { prefix, .. } => {
            prefix.len() > attracting.len() && prefix.starts_with(&attracting)
        }
        CylinderImage::Complement { .. } => false,
    };
    Ok(DynamicsClass {
        kind: DynamicsKind::Loxodromic,
        translation_length: best as u64,
        attracting: Some(BoundaryPoint::truncated(attracting)),
        repelling: Some(BoundaryPoint::truncated(repelling)),
        fixed_vertex: None,
        criterion_checked,
    })
}

