//! Finite sharply k-transitive actions: permutation groups, finite fields,
//! near-fields and their affine groups, and `PGL₂(F_q)` on the projective line.

use std::collections::{HashMap, HashSet, VecDeque};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

/// Element cap used when a group is materialized without an explicit one.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FiniteError {
    #[error("generator {index} is not a permutation of {n} points")]
    NotAPermutation { index: usize, n: usize },
    #[error("group has more than {0} elements")]
    TooLarge(usize),
    #[error("need at least {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("unsupported order {0}")]
    UnsupportedOrder(u32),
    #[error("near-field axiom fails: {0}")]
    NotANearField(String),
}

pub type Perm = Vec<u32>;

fn identity(n: usize) -> Perm {
    (0..n as u32).collect()
}

/// `p ∘ q`: apply `q` first.
pub fn compose(p: &[u32], q: &[u32]) -> Perm {
    q.iter().map(|&i| p[i as usize]).collect()
}

pub fn invert(p: &[u32]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j as usize] = i as u32;
    }
    inv
}

fn is_permutation(p: &[u32], n: usize) -> bool {
    p.len() == n && p.iter().all(|&x| (x as usize) < n) && p.iter().collect::<HashSet<_>>().len() == n
}

/// A permutation group given by generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePermGroup {
    pub n: usize,
    pub generators: Vec<Perm>,
}

impl FinitePermGroup {
    pub fn new(n: usize, generators: Vec<Perm>) -> Result<Self, FiniteError> {
        if let Some(index) = generators.iter().position(|g| !is_permutation(g, n)) {
            return Err(FiniteError::NotAPermutation { index, n });
        }
        Ok(FinitePermGroup { n, generators })
    }

    pub fn symmetric(n: usize) -> Self {
        let mut gens = Vec::new();
        if n >= 2 {
            let mut t = identity(n);
            t.swap(0, 1);
            gens.push(t);
            gens.push((0..n as u32).map(|i| (i + 1) % n as u32).collect());
        }
        FinitePermGroup { n, generators: gens }
    }

    /// Generated by the 3-cycles `(0 1 i)`.
    pub fn alternating(n: usize) -> Self {
        let gens = (2..n)
            .map(|i| {
                let mut c = identity(n);
                c[0] = 1;
                c[1] = i as u32;
                c[i] = 0;
                c
            })
            .collect();
        FinitePermGroup { n, generators: gens }
    }

    /// All elements, by breadth-first closure from the identity.
    pub fn elements(&self, cap: usize) -> Result<Vec<Perm>, FiniteError> {
        let id = identity(self.n);
        let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
        let mut out = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for s in &self.generators {
                let h = compose(s, &g);
                if seen.insert(h.clone()) {
                    if out.len() == cap {
                        return Err(FiniteError::TooLarge(cap));
                    }
                    out.push(h.clone());
                    queue.push_back(h);
                }
            }
        }
        Ok(out)
    }

    pub fn order(&self, cap: usize) -> Result<usize, FiniteError> {
        Ok(self.elements(cap)?.len())
    }
}

/// `n (n−1) … (n−k+1)`, the number of distinct k-tuples.
pub fn tuple_count(n: usize, k: usize) -> usize {
    (0..k).map(|i| n - i).product()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SharpCertificate {
    /// `g ↦ g(0, …, k−1)` is a bijection onto the distinct k-tuples.
    Sharp { order: usize, tuples: usize },
    /// A nonidentity element fixing the tuple pointwise.
    NotFree { element: Perm, fixed: Vec<u32> },
    /// A tuple outside the orbit of `(0, …, k−1)`.
    NotTransitive { missing: Vec<u32>, orbit: usize },
}

impl SharpCertificate {
    pub fn is_sharp(&self) -> bool {
        matches!(self, SharpCertificate::Sharp { .. })
    }
}

/// Decides sharp k-transitivity by materializing the group.
///
/// The orbit map of the base tuple is injective iff its stabilizer is
/// trivial, and all stabilizers in one orbit are conjugate.
pub fn verify_sharp_transitive(
    g: &FinitePermGroup,
    k: usize,
    cap: usize,
) -> Result<SharpCertificate, FiniteError> {
    if g.n < k {
        return Err(FiniteError::TooFewPoints { n: g.n, k });
    }
    let elements = g.elements(cap)?;
    let base: Vec<u32> = (0..k as u32).collect();
    let mut by_image: HashMap<Vec<u32>, &Perm> = HashMap::new();
    for e in &elements {
        let image: Vec<u32> = base.iter().map(|&i| e[i as usize]).collect();
        if let Some(&other) = by_image.get(&image) {
            return Ok(SharpCertificate::NotFree {
                element: compose(&invert(other), e),
                fixed: base,
            });
        }
        by_image.insert(image, e);
    }
    let tuples = tuple_count(g.n, k);
    if by_image.len() < tuples {
        let missing = (0..g.n as u32)
            .permutations(k)
            .find(|t| !by_image.contains_key(t))
            .expect("orbit is smaller than the tuple set");
        return Ok(SharpCertificate::NotTransitive {
            missing,
            orbit: by_image.len(),
        });
    }
    Ok(SharpCertificate::Sharp {
        order: elements.len(),
        tuples,
    })
}

/// `GF(p^m)`. Elements are integers whose base-`p` digits are the
/// coefficients of a polynomial modulo `modulus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteField {
    pub p: u32,
    pub m: u32,
    /// Monic irreducible polynomial, lowest coefficient first.
    pub modulus: Vec<u32>,
    add: Vec<Vec<u32>>,
    mul: Vec<Vec<u32>>,
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut m = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        m += 1;
    }
    (r == 1).then_some((p, m))
}

fn digits(x: u32, p: u32, m: u32) -> Vec<u32> {
    (0..m).map(|i| x / p.pow(i) % p).collect()
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Remainder of `a` modulo the monic `b`, coefficients mod `p`.
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = r.pop().expect("nonempty");
        let shift = r.len() - db;
        for (i, &c) in b[..db].iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - lead * c % p) % p;
        }
    }
    r
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn monic(p: u32, deg: u32) -> impl Iterator<Item = Vec<u32>> {
    (0..p.pow(deg)).map(move |x| {
        let mut c = digits(x, p, deg);
        c.push(1);
        c
    })
}

fn irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() as u32 - 1;
    (1..=deg / 2).all(|d| monic(p, d).all(|g| poly_rem(f, &g, p).iter().any(|&c| c != 0)))
}

impl FiniteField {
    /// The field of order `q`, using the first monic irreducible modulus in
    /// lexicographic order.
    pub fn new(q: u32) -> Result<Self, FiniteError> {
        let (p, m) = prime_power(q).ok_or(FiniteError::UnsupportedOrder(q))?;
        if q > 256 {
            return Err(FiniteError::UnsupportedOrder(q));
        }
        let modulus = monic(p, m).find(|f| irreducible(f, p)).expect("irreducibles exist");
        let add = (0..q)
            .map(|x| {
                (0..q)
                    .map(|y| {
                        let s: Vec<u32> = digits(x, p, m).iter().zip(digits(y, p, m)).map(|(a, b)| (a + b) % p).collect();
                        undigits(&s, p)
                    })
                    .collect()
            })
            .collect();
        let mul = (0..q)
            .map(|x| {
                (0..q)
                    .map(|y| {
                        let prod = poly_mul(&digits(x, p, m), &digits(y, p, m), p);
                        undigits(&poly_rem(&prod, &modulus, p), p)
                    })
                    .collect()
            })
            .collect();
        Ok(FiniteField { p, m, modulus, add, mul })
    }

    pub fn order(&self) -> u32 {
        self.add.len() as u32
    }

    pub fn add(&self, x: u32, y: u32) -> u32 {
        self.add[x as usize][y as usize]
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        self.mul[x as usize][y as usize]
    }

    pub fn neg(&self, x: u32) -> u32 {
        (0..self.order()).find(|&y| self.add(x, y) == 0).expect("additive inverse")
    }

    pub fn inv(&self, x: u32) -> Option<u32> {
        (1..self.order()).find(|&y| self.mul(x, y) == 1)
    }

    pub fn pow(&self, x: u32, e: u32) -> u32 {
        (0..e).fold(1, |acc, _| self.mul(acc, x))
    }

    /// A generator of the multiplicative group.
    pub fn primitive(&self) -> u32 {
        let q = self.order();
        (1..q)
            .find(|&g| (1..q - 1).all(|e| self.pow(g, e) != 1))
            .expect("cyclic multiplicative group")
    }

    pub fn is_square(&self, x: u32) -> bool {
        (0..self.order()).any(|y| self.mul(y, y) == x)
    }
}

/// A finite near-field: `(F, +)` abelian, `(F∖0, ·)` a group, and
/// `(x + y)z = xz + yz`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearField {
    add: Vec<Vec<u32>>,
    mul: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NearFieldReport {
    pub order: u32,
    pub multiplication_commutative: bool,
    /// `(x, y, z)` with `x(y + z) ≠ xy + xz`.
    pub left_distributivity_witness: Option<[u32; 3]>,
}

impl NearField {
    /// Validates the tables; element 0 is the additive and 1 the
    /// multiplicative identity.
    pub fn new(add: Vec<Vec<u32>>, mul: Vec<Vec<u32>>) -> Result<Self, FiniteError> {
        let nf = NearField { add, mul };
        nf.check()?;
        Ok(nf)
    }

    pub fn from_field(f: &FiniteField) -> Self {
        NearField {
            add: f.add.clone(),
            mul: f.mul.clone(),
        }
    }

    /// Dickson's near-field of order 9: `x ∘ y = xy` if `y` is a square in
    /// `GF(9)`, and `x³y` otherwise.
    pub fn dickson(q: u32) -> Result<Self, FiniteError> {
        if q != 9 {
            return Err(FiniteError::UnsupportedOrder(q));
        }
        let f = FiniteField::new(9)?;
        let mul = (0..9)
            .map(|x| {
                (0..9)
                    .map(|y| {
                        if f.is_square(y) {
                            f.mul(x, y)
                        } else {
                            f.mul(f.pow(x, 3), y)
                        }
                    })
                    .collect()
            })
            .collect();
        NearField::new(f.add, mul)
    }

    pub fn order(&self) -> u32 {
        self.add.len() as u32
    }

    pub fn add(&self, x: u32, y: u32) -> u32 {
        self.add[x as usize][y as usize]
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        self.mul[x as usize][y as usize]
    }

    fn check(&self) -> Result<(), FiniteError> {
        let q = self.add.len() as u32;
        let fail = |s: String| Err(FiniteError::NotANearField(s));
        if q < 2 || self.mul.len() != q as usize || self.add.iter().chain(&self.mul).any(|r| r.len() != q as usize) {
            return fail("tables are not square".into());
        }
        if self.add.iter().flatten().chain(self.mul.iter().flatten()).any(|&v| v >= q) {
            return fail("table entry out of range".into());
        }
        let all = || 0..q;
        for x in all() {
            if self.add(0, x) != x || self.add(x, 0) != x {
                return fail(format!("0 is not additive identity at {x}"));
            }
            if !all().any(|y| self.add(x, y) == 0) {
                return fail(format!("{x} has no additive inverse"));
            }
            if self.mul(0, x) != 0 || self.mul(x, 0) != 0 {
                return fail(format!("0 does not absorb {x}"));
            }
            if x != 0 {
                if self.mul(1, x) != x || self.mul(x, 1) != x {
                    return fail(format!("1 is not multiplicative identity at {x}"));
                }
                if !(1..q).any(|y| self.mul(x, y) == 1) {
                    return fail(format!("{x} has no multiplicative inverse"));
                }
            }
        }
        for (x, y) in all().cartesian_product(all()) {
            if self.add(x, y) != self.add(y, x) {
                return fail(format!("addition not commutative at ({x}, {y})"));
            }
            if x != 0 && y != 0 && self.mul(x, y) == 0 {
                return fail(format!("zero divisors ({x}, {y})"));
            }
            for z in all() {
                if self.add(self.add(x, y), z) != self.add(x, self.add(y, z)) {
                    return fail(format!("addition not associative at ({x}, {y}, {z})"));
                }
                if self.mul(self.mul(x, y), z) != self.mul(x, self.mul(y, z)) {
                    return fail(format!("multiplication not associative at ({x}, {y}, {z})"));
                }
                if self.mul(self.add(x, y), z) != self.add(self.mul(x, z), self.mul(y, z)) {
                    return fail(format!("right distributivity fails at ({x}, {y}, {z})"));
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> NearFieldReport {
        let q = self.order();
        let multiplication_commutative = (0..q).cartesian_product(0..q).all(|(x, y)| self.mul(x, y) == self.mul(y, x));
        let left_distributivity_witness = (0..q)
            .cartesian_product(0..q)
            .cartesian_product(0..q)
            .map(|((x, y), z)| [x, y, z])
            .find(|&[x, y, z]| self.mul(x, self.add(y, z)) != self.add(self.mul(x, y), self.mul(x, z)));
        NearFieldReport {
            order: q,
            multiplication_commutative,
            left_distributivity_witness,
        }
    }
}

fn affine_map(nf: &NearField, a: u32, b: u32) -> Perm {
    (0..nf.order()).map(|x| nf.add(nf.mul(x, a), b)).collect()
}

/// The maps `x ↦ xa + b` with `a ≠ 0`. Scalars act on the right, the side
/// on which the near-field distributes.
pub fn affine_group(nf: &NearField) -> FinitePermGroup {
    let q = nf.order();
    let gens = (1..q)
        .cartesian_product(0..q)
        .map(|(a, b)| affine_map(nf, a, b))
        .collect();
    FinitePermGroup { n: q as usize, generators: gens }
}

/// The translations `x ↦ x + b`.
pub fn translation_group(nf: &NearField) -> FinitePermGroup {
    let gens = (0..nf.order()).map(|b| affine_map(nf, 1, b)).collect();
    FinitePermGroup {
        n: nf.order() as usize,
        generators: gens,
    }
}

/// `PGL₂(F_q)` on `P¹(F_q)`, with points `0..q` the field elements and
/// point `q` at infinity. Generated by `x ↦ x + 1`, `x ↦ gx` for a
/// primitive `g`, and `x ↦ 1/x`.
pub fn pgl2_fq_action(q: u32) -> Result<FinitePermGroup, FiniteError> {
    if q > 16 {
        return Err(FiniteError::UnsupportedOrder(q));
    }
    let f = FiniteField::new(q)?;
    let inf = q;
    let on_line = |h: &dyn Fn(u32) -> u32, at_inf: u32| -> Perm { (0..q).map(h).chain([at_inf]).collect() };
    let g = f.primitive();
    let translate = on_line(&|x| f.add(x, 1), inf);
    let scale = on_line(&|x| f.mul(g, x), inf);
    let invert = (0..=q)
        .map(|x| match x {
            0 => inf,
            x if x == inf => 0,
            x => f.inv(x).expect("nonzero"),
        })
        .collect();
    FinitePermGroup::new(q as usize + 1, vec![translate, scale, invert])
}

#[cfg(test)]
mod tests;
