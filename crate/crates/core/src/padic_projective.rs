//! The projective line over Q_p, Möbius maps, and the Bruhat–Tits tree.
//!
//! Ends of the tree are words in the `(p+1, p)` model: a point `(a:1)` with
//! `a ∈ Z_p` is the word of its digits `a₀ a₁ …`; a point `(1:b)` with
//! `b ∈ pZ_p` is the letter `p` followed by `b₁ b₂ …`.

use serde::{Deserialize, Serialize};

use crate::padic::{Padic, PadicError};
use crate::tree_boundary::{BoundaryPoint, RegularTreeModel, TreeAutomorphism, Word};

/// A point of P¹(Q_p) in normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjPoint {
    /// `(a : 1)` with `v(a) ≥ 0`.
    Affine(Padic),
    /// `(1 : b)` with `v(b) ≥ 1`; `b = 0` is ∞.
    Far(Padic),
}

fn det2(a: &Padic, b: &Padic, c: &Padic, d: &Padic) -> Result<Padic, PadicError> {
    a.mul(d)?.sub(&b.mul(c)?)
}

impl ProjPoint {
    pub fn infinity(p: u64) -> Self {
        ProjPoint::Far(Padic::zero(p))
    }

    pub fn from_i64(p: u64, prec: u32, n: i64) -> Result<Self, PadicError> {
        ProjPoint::from_homogeneous(&Padic::from_i64(p, prec, n)?, &Padic::from_i64(p, prec, 1)?)
    }

    pub fn from_scalar(a: &Padic) -> Result<Self, PadicError> {
        let one = Padic::from_i64(a.prime(), a.rel_precision().unwrap_or(1), 1)?;
        ProjPoint::from_homogeneous(a, &one)
    }

    /// Normal form of `(u : v)`.
    pub fn from_homogeneous(u: &Padic, v: &Padic) -> Result<Self, PadicError> {
        if u.is_exact_zero() && v.is_exact_zero() {
            return Err(PadicError::Singular);
        }
        match (u.valuation(), v.valuation()) {
            (_, Some(vv)) if u.valuation_bound().is_none_or(|b| b >= vv) => {
                let a = u.div(v)?;
                if a.is_zero() && a.abs_precision().is_some_and(|n| n < 1) {
                    return Err(PadicError::PrecisionExhausted);
                }
                Ok(ProjPoint::Affine(a))
            }
            (Some(vu), _) if v.valuation_bound().is_none_or(|b| b > vu) => {
                let b = v.div(u)?;
                if b.is_zero() && b.abs_precision().is_some_and(|n| n < 1) {
                    return Err(PadicError::PrecisionExhausted);
                }
                Ok(ProjPoint::Far(b))
            }
            _ => Err(PadicError::PrecisionExhausted),
        }
    }

    pub fn prime(&self) -> u64 {
        match self {
            ProjPoint::Affine(a) | ProjPoint::Far(a) => a.prime(),
        }
    }

    /// A homogeneous representative with unit-sized coordinates.
    pub fn homogeneous(&self) -> (Padic, Padic) {
        let p = self.prime();
        let one = Padic::from_i64(p, 1, 1).expect("valid prime");
        match *self {
            ProjPoint::Affine(a) => (a, exact_one(p, &a, one)),
            ProjPoint::Far(b) => (exact_one(p, &b, one), b),
        }
    }

    /// First `len` letters of the corresponding end.
    pub fn word(&self, len: usize) -> Result<Word, PadicError> {
        let p = self.prime() as u32;
        match self {
            ProjPoint::Affine(a) => a.digits(len),
            ProjPoint::Far(b) => {
                if len == 0 {
                    return Ok(Vec::new());
                }
                let mut w = vec![p];
                w.extend_from_slice(&b.digits(len)?[1..]);
                Ok(w)
            }
        }
    }

    /// The point whose end begins with `word`, known to `word.len()` letters.
    pub fn from_word(p: u64, word: &[u32]) -> Result<Self, PadicError> {
        match word.first() {
            None => Err(PadicError::PrecisionExhausted),
            Some(&l) if (l as u64) < p => Ok(ProjPoint::Affine(Padic::from_digits(p, word)?)),
            Some(&l) if l as u64 == p => {
                let mut digits = word.to_vec();
                digits[0] = 0;
                Ok(ProjPoint::Far(Padic::from_digits(p, &digits)?))
            }
            Some(&l) => Err(PadicError::Malformed(format!("letter {l} exceeds {p}"))),
        }
    }

    /// Equal at the available precision.
    pub fn approx_eq(&self, o: &ProjPoint) -> bool {
        match (self, o) {
            (ProjPoint::Affine(a), ProjPoint::Affine(b)) | (ProjPoint::Far(a), ProjPoint::Far(b)) => {
                a.approx_eq(b)
            }
            _ => false,
        }
    }

    pub fn to_json(&self) -> PointJson {
        match self {
            ProjPoint::Far(b) if b.is_zero() => PointJson {
                num: "1".into(),
                den: "0".into(),
                val: 0,
            },
            ProjPoint::Affine(a) if a.is_zero() => PointJson {
                num: "0".into(),
                den: "1".into(),
                val: 0,
            },
            ProjPoint::Affine(a) => PointJson {
                num: a.unit().expect("nonzero").to_string(),
                den: "1".into(),
                val: a.valuation().expect("nonzero"),
            },
            ProjPoint::Far(b) => {
                let a = b.inv().expect("nonzero");
                PointJson {
                    num: a.unit().expect("nonzero").to_string(),
                    den: "1".into(),
                    val: a.valuation().expect("nonzero"),
                }
            }
        }
    }

    pub fn from_json(p: u64, prec: u32, j: &PointJson) -> Result<Self, PadicError> {
        let parse = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| PadicError::Malformed(format!("not an integer: {s:?}")))
        };
        let (num, den) = (parse(&j.num)?, parse(&j.den)?);
        if den == 0 {
            if num == 0 {
                return Err(PadicError::Singular);
            }
            return Ok(ProjPoint::infinity(p));
        }
        let a = Padic::from_ratio(p, prec, num, den)?.shift(j.val);
        ProjPoint::from_scalar(&a)
    }
}

fn exact_one(p: u64, like: &Padic, fallback: Padic) -> Padic {
    let prec = like
        .rel_precision()
        .unwrap_or_else(|| crate::padic::max_precision(p));
    Padic::from_i64(p, prec, 1).unwrap_or(fallback)
}

/// JSON point `p^val · num / den`; `den = "0"` is ∞.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointJson {
    pub num: String,
    pub den: String,
    pub val: i64,
}

/// `z ↦ (az + b)/(cz + d)`, an element of PGL₂(Q_p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mobius {
    pub a: Padic,
    pub b: Padic,
    pub c: Padic,
    pub d: Padic,
}

impl Mobius {
    pub fn new(a: Padic, b: Padic, c: Padic, d: Padic) -> Result<Self, PadicError> {
        let m = Mobius { a, b, c, d };
        if m.det()?.is_zero() {
            return Err(PadicError::Singular);
        }
        Ok(m)
    }

    pub fn from_i64(p: u64, prec: u32, m: [[i64; 2]; 2]) -> Result<Self, PadicError> {
        let e = |n| Padic::from_i64(p, prec, n);
        Mobius::new(e(m[0][0])?, e(m[0][1])?, e(m[1][0])?, e(m[1][1])?)
    }

    pub fn identity(p: u64, prec: u32) -> Result<Self, PadicError> {
        Mobius::from_i64(p, prec, [[1, 0], [0, 1]])
    }

    pub fn prime(&self) -> u64 {
        self.a.prime()
    }

    pub fn det(&self) -> Result<Padic, PadicError> {
        det2(&self.a, &self.b, &self.c, &self.d)
    }

    pub fn trace(&self) -> Result<Padic, PadicError> {
        self.a.add(&self.d)
    }

    /// Matrix product `self · o`, i.e. apply `o` first.
    pub fn compose(&self, o: &Mobius) -> Result<Mobius, PadicError> {
        let e = |x: &Padic, y: &Padic, z: &Padic, w: &Padic| x.mul(y)?.add(&z.mul(w)?);
        Ok(Mobius {
            a: e(&self.a, &o.a, &self.b, &o.c)?,
            b: e(&self.a, &o.b, &self.b, &o.d)?,
            c: e(&self.c, &o.a, &self.d, &o.c)?,
            d: e(&self.c, &o.b, &self.d, &o.d)?,
        }
        .normalized())
    }

    /// Adjugate, which is the inverse in PGL₂.
    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: self.b.neg(),
            c: self.c.neg(),
            d: self.a,
        }
    }

    pub fn pow(&self, n: u32) -> Result<Mobius, PadicError> {
        let prec = self
            .entries()
            .iter()
            .filter_map(|e| e.rel_precision())
            .max()
            .unwrap_or(1);
        let mut acc = Mobius::identity(self.prime(), prec)?;
        let mut base = *self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            base = base.compose(&base)?;
            k >>= 1;
        }
        Ok(acc)
    }

    fn entries(&self) -> [Padic; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Smallest valuation among the entries.
    pub fn min_valuation(&self) -> Option<i64> {
        self.entries().iter().filter_map(|e| e.valuation()).min()
    }

    /// Rescaled by a power of p so the entries are integral with one unit.
    pub fn normalized(&self) -> Mobius {
        match self.min_valuation() {
            Some(m) => Mobius {
                a: self.a.shift(-m),
                b: self.b.shift(-m),
                c: self.c.shift(-m),
                d: self.d.shift(-m),
            },
            None => *self,
        }
    }

    /// Equality in PGL₂: all cross products `mᵢ m'ⱼ − mⱼ m'ᵢ` vanish.
    pub fn proj_eq(&self, o: &Mobius) -> Result<bool, PadicError> {
        let x = self.entries();
        let y = o.entries();
        for i in 0..4 {
            for j in i + 1..4 {
                if !x[i].mul(&y[j])?.sub(&x[j].mul(&y[i])?)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `max(0, v(det) − 2·v(tr))`, the translation length on the tree.
    pub fn translation_length(&self) -> Result<u64, PadicError> {
        let det = self.det()?;
        let tr = self.trace()?;
        let vd = det.valuation().ok_or(PadicError::PrecisionExhausted)?;
        Ok(match tr.valuation() {
            Some(vt) => (vd - 2 * vt).max(0) as u64,
            None => 0,
        })
    }
}

pub fn mobius_act(m: &Mobius, x: &ProjPoint) -> Result<ProjPoint, PadicError> {
    let (u, v) = x.homogeneous();
    let nu = m.a.mul(&u)?.add(&m.b.mul(&v)?)?;
    let nv = m.c.mul(&u)?.add(&m.d.mul(&v)?)?;
    ProjPoint::from_homogeneous(&nu, &nv)
}

fn det_points(x: &ProjPoint, y: &ProjPoint) -> Result<Padic, PadicError> {
    let (u1, v1) = x.homogeneous();
    let (u2, v2) = y.homogeneous();
    det2(&u1, &u2, &v1, &v2)
}

fn nonzero_det(x: &ProjPoint, y: &ProjPoint) -> Result<Padic, PadicError> {
    let d = det_points(x, y)?;
    if d.is_zero() {
        Err(PadicError::Coincident)
    } else {
        Ok(d)
    }
}

/// The Möbius map sending `0, 1, ∞` to `p1, p2, p3`.
///
/// Solved in closed form, then checked against an independently built map
/// sending `p1, p2, p3` back to `0, 1, ∞`: their product must be scalar.
pub fn solve_sharply3(p1: &ProjPoint, p2: &ProjPoint, p3: &ProjPoint) -> Result<Mobius, PadicError> {
    let d21 = nonzero_det(p2, p1)?;
    let d32 = nonzero_det(p3, p2)?;
    let d23 = d32.neg();
    nonzero_det(p1, p3)?;
    let (u1, v1) = p1.homogeneous();
    let (u3, v3) = p3.homogeneous();
    // det = d21 · d32 · [p3, p1], nonzero by the checks above.
    let m = Mobius {
        a: d21.mul(&u3)?,
        b: d32.mul(&u1)?,
        c: d21.mul(&v3)?,
        d: d32.mul(&v1)?,
    }
    .normalized();
    let n = Mobius {
        a: d23.mul(&v1)?,
        b: d23.mul(&u1.neg())?,
        c: d21.mul(&v3)?,
        d: d21.mul(&u3.neg())?,
    };
    let prod = n.compose(&m)?;
    if prod.a.is_zero() || prod.d.is_zero() {
        return Err(PadicError::PrecisionExhausted);
    }
    if !(prod.b.is_zero() && prod.c.is_zero() && prod.a.approx_eq(&prod.d)) {
        return Err(PadicError::UniquenessCheckFailed);
    }
    Ok(m)
}

/// `v((x1, x2; x3, x4))` for the cross-ratio
/// `[x1,x3][x2,x4] / ([x1,x4][x2,x3])` with `[x,y]` the 2×2 determinant.
pub fn classical_crossratio_valuation(
    x1: &ProjPoint,
    x2: &ProjPoint,
    x3: &ProjPoint,
    x4: &ProjPoint,
) -> Result<i64, PadicError> {
    let v = |x: &ProjPoint, y: &ProjPoint| -> Result<i64, PadicError> {
        Ok(nonzero_det(x, y)?.valuation().expect("nonzero"))
    };
    Ok(v(x1, x3)? + v(x2, x4)? - v(x1, x4)? - v(x2, x3)?)
}

/// Fixed points of a Möbius map whose eigenvalues have distinct
/// valuations, found by iterating `λ ↦ tr − det/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPoints {
    Attracting {
        attracting: ProjPoint,
        repelling: ProjPoint,
    },
    /// Eigenvalues of equal valuation: no attracting/repelling pair.
    Balanced,
}

pub fn fixed_points(m: &Mobius) -> Result<FixedPoints, PadicError> {
    let m = m.normalized();
    if m.translation_length()? == 0 {
        return Ok(FixedPoints::Balanced);
    }
    let tr = m.trace()?;
    let det = m.det()?;
    let mut lam = tr;
    for _ in 0..256 {
        let next = tr.sub(&det.div(&lam)?)?;
        if next.approx_eq(&lam) {
            lam = next;
            break;
        }
        lam = next;
    }
    let mu = det.div(&lam)?;
    let eigvec = |l: &Padic| -> Result<ProjPoint, PadicError> {
        let first = (m.b, l.sub(&m.a)?);
        let second = (l.sub(&m.d)?, m.c);
        let score = |(x, y): &(Padic, Padic)| {
            [x, y]
                .iter()
                .filter_map(|e| e.valuation())
                .min()
                .unwrap_or(i64::MAX)
        };
        let pick = if score(&first) <= score(&second) { first } else { second };
        ProjPoint::from_homogeneous(&pick.0, &pick.1)
    };
    Ok(FixedPoints::Attracting {
        attracting: eigvec(&lam)?,
        repelling: eigvec(&mu)?,
    })
}

fn integer_from_digits(p: u64, prec: u32, digits: &[u32]) -> Result<Padic, PadicError> {
    let mut acc = Padic::zero(p);
    let mut pk = Padic::from_i64(p, prec, 1)?;
    let pp = Padic::from_i64(p, prec, p as i64)?;
    for &d in digits {
        if d != 0 {
            acc = acc.add(&pk.mul(&Padic::from_i64(p, prec, d as i64)?)?)?;
        }
        pk = pk.mul(&pp)?;
    }
    Ok(acc)
}

/// Image of the vertex `w` of the Bruhat–Tits tree under `m`.
///
/// Returns the depth of the image and its first `min(depth, want)` letters.
/// The vertex of `w` is the lattice spanned by `(a, 1), (pⁿ, 0)` (first
/// letter below `p`) or `(1, b), (0, pⁿ)` (first letter `p`).
pub fn mobius_vertex_image(
    m: &Mobius,
    w: &[u32],
    want: usize,
) -> Result<(usize, Word), PadicError> {
    let p = m.prime();
    let prec = [m.a, m.b, m.c, m.d]
        .iter()
        .filter_map(|e| e.rel_precision())
        .max()
        .unwrap_or(1);
    let n = w.len();
    let one = Padic::from_i64(p, prec, 1)?;
    let zero = Padic::zero(p);
    let pn = one.shift(n as i64);
    let (c1, c2) = match w.first() {
        None => ((one, zero), (zero, one)),
        Some(&l) if (l as u64) < p => ((integer_from_digits(p, prec, w)?, one), (pn, zero)),
        Some(_) => {
            let mut digits = w.to_vec();
            digits[0] = 0;
            ((one, integer_from_digits(p, prec, &digits)?), (zero, pn))
        }
    };
    let act = |(x, y): (Padic, Padic)| -> Result<(Padic, Padic), PadicError> {
        Ok((m.a.mul(&x)?.add(&m.b.mul(&y)?)?, m.c.mul(&x)?.add(&m.d.mul(&y)?)?))
    };
    let g1 = act(c1)?;
    let g2 = act(c2)?;
    let entries = [g1.0, g1.1, g2.0, g2.1];
    let mu = entries
        .iter()
        .filter_map(|e| e.valuation())
        .min()
        .ok_or(PadicError::PrecisionExhausted)?;
    if entries
        .iter()
        .any(|e| e.is_zero() && !e.is_exact_zero() && e.valuation_bound().is_some_and(|b| b <= mu))
    {
        return Err(PadicError::PrecisionExhausted);
    }
    let vdet = m.det()?.valuation().ok_or(PadicError::PrecisionExhausted)?;
    let depth = vdet + n as i64 - 2 * mu;
    if depth < 0 {
        return Err(PadicError::PrecisionExhausted);
    }
    let depth = depth as usize;
    let take = depth.min(want);
    let primitive = [g1, g2]
        .into_iter()
        .find(|(x, y)| x.valuation() == Some(mu) || y.valuation() == Some(mu))
        .expect("some entry attains the minimum");
    let (x, y) = (primitive.0.shift(-mu), primitive.1.shift(-mu));
    let word = if take == 0 {
        Vec::new()
    } else if y.valuation() == Some(0) {
        x.div(&y)?.digits(take)?
    } else {
        let b = y.div(&x)?;
        let mut word = vec![p as u32];
        word.extend_from_slice(&b.digits(take)?[1..]);
        word
    };
    Ok((depth, word))
}

/// The Bruhat–Tits tree of PGL₂(Q_p) to `depth`, with the identification
/// of P¹(Q_p) with its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndMap {
    pub p: u64,
    pub depth: usize,
    pub prec: u32,
}

impl EndMap {
    pub fn to_boundary(&self, x: &ProjPoint) -> Result<BoundaryPoint, PadicError> {
        Ok(BoundaryPoint::truncated(x.word(self.depth)?))
    }

    /// The point with the given end, using up to `prec` letters.
    pub fn from_boundary(&self, x: &BoundaryPoint) -> Result<ProjPoint, PadicError> {
        let n = x.known_len().map_or(self.prec as usize, |k| k.min(self.prec as usize));
        let w = x.take(n).ok_or(PadicError::PrecisionExhausted)?;
        ProjPoint::from_word(self.p, &w)
    }

    pub fn automorphism(&self, m: &Mobius) -> TreeAutomorphism {
        TreeAutomorphism::Mobius {
            m: *m,
            depth: self.depth,
        }
    }
}

pub fn bt_correspondence(
    p: u64,
    depth: usize,
    prec: u32,
) -> Result<(RegularTreeModel, EndMap), PadicError> {
    if !crate::padic::is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    if depth > prec as usize {
        return Err(PadicError::DepthExceedsPrecision { depth, prec });
    }
    let model = RegularTreeModel::bruhat_tits(p as u32, depth)
        .map_err(|e| PadicError::Malformed(e.to_string()))?;
    Ok((model, EndMap { p, depth, prec }))
}

#[cfg(test)]
mod tests;
