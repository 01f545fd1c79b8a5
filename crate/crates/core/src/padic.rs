//! p-adic numbers with capped relative precision.
//!
//! A nonzero value is `p^val · unit` with the unit known modulo `p^prec`.
//! Zeros are either exact or known only modulo `p^abs`. Operations never
//! invent digits: a difference whose known digits all cancel becomes an
//! inexact zero, and anything that would need its digits fails with
//! [`PadicError::PrecisionExhausted`].

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("p^precision must stay below 2^63 (p = {p}, precision = {prec})")]
    PrecisionTooLarge { p: u64, prec: u32 },
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("operands use different primes")]
    MixedPrimes,
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("points coincide")]
    Coincident,
    #[error("matrix is singular")]
    Singular,
    #[error("depth {depth} exceeds precision {prec}")]
    DepthExceedsPrecision { depth: usize, prec: u32 },
    #[error("second solution disagrees with the first")]
    UniquenessCheckFailed,
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub(crate) fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn pow(p: u64, e: u32) -> u128 {
    (p as u128).pow(e)
}

/// Largest relative precision allowed for `p`.
pub fn max_precision(p: u64) -> u32 {
    let mut k = 0;
    while pow(p, k + 1) < 1u128 << 63 {
        k += 1;
    }
    k
}

fn check(p: u64, prec: u32) -> Result<(), PadicError> {
    if !is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    if prec == 0 {
        return Err(PadicError::ZeroPrecision);
    }
    if prec > max_precision(p) {
        return Err(PadicError::PrecisionTooLarge { p, prec });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Repr {
    Exact0,
    /// Zero modulo `p^abs`.
    Zero { abs: i64 },
    Unit { val: i64, unit: u128, prec: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Padic {
    p: u64,
    repr: Repr,
}

fn inv_mod(a: u128, m: u128) -> u128 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "unit must be invertible");
    t0.rem_euclid(m as i128) as u128
}

impl Padic {
    pub fn zero(p: u64) -> Self {
        Padic { p, repr: Repr::Exact0 }
    }

    pub fn from_i64(p: u64, prec: u32, n: i64) -> Result<Self, PadicError> {
        check(p, prec)?;
        if n == 0 {
            return Ok(Padic::zero(p));
        }
        let mut val = 0;
        let mut m = n.unsigned_abs() as u128;
        while m.is_multiple_of(p as u128) {
            m /= p as u128;
            val += 1;
        }
        let modulus = pow(p, prec);
        let mut unit = m % modulus;
        if n < 0 {
            unit = (modulus - unit) % modulus;
        }
        Ok(Padic {
            p,
            repr: Repr::Unit { val, unit, prec },
        })
    }

    pub fn from_ratio(p: u64, prec: u32, num: i64, den: i64) -> Result<Self, PadicError> {
        if den == 0 {
            return Err(PadicError::DivisionByZero);
        }
        Padic::from_i64(p, prec, num)?.div(&Padic::from_i64(p, prec, den)?)
    }

    /// `p^val · unit` with the unit reduced modulo `p^prec`; `unit` must be
    /// prime to `p`.
    pub fn from_parts(p: u64, prec: u32, val: i64, unit: u128) -> Result<Self, PadicError> {
        check(p, prec)?;
        if unit.is_multiple_of(p as u128) {
            return Err(PadicError::Malformed(format!("{unit} is divisible by {p}")));
        }
        Ok(Padic {
            p,
            repr: Repr::Unit {
                val,
                unit: unit % pow(p, prec),
                prec,
            },
        })
    }

    /// `Σ digits[i] · p^i`, known modulo `p^digits.len()`. Leading zero
    /// digits count toward the precision.
    pub fn from_digits(p: u64, digits: &[u32]) -> Result<Self, PadicError> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        let abs = digits.len() as i64;
        let Some(first) = digits.iter().position(|&d| d != 0) else {
            return Ok(Padic {
                p,
                repr: Repr::Zero { abs },
            });
        };
        let prec = (digits.len() - first) as u32;
        check(p, prec)?;
        let mut unit = 0u128;
        for &d in digits[first..].iter().rev() {
            if d as u64 >= p {
                return Err(PadicError::Malformed(format!("digit {d} out of range")));
            }
            unit = unit * p as u128 + d as u128;
        }
        Ok(Padic {
            p,
            repr: Repr::Unit {
                val: first as i64,
                unit,
                prec,
            },
        })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// `None` for zeros.
    pub fn valuation(&self) -> Option<i64> {
        match self.repr {
            Repr::Unit { val, .. } => Some(val),
            _ => None,
        }
    }

    /// Lower bound on the valuation; `None` for an exact zero.
    pub fn valuation_bound(&self) -> Option<i64> {
        match self.repr {
            Repr::Exact0 => None,
            Repr::Zero { abs } => Some(abs),
            Repr::Unit { val, .. } => Some(val),
        }
    }

    /// Digits known, counted from `p^0`; `None` when exact.
    pub fn abs_precision(&self) -> Option<i64> {
        match self.repr {
            Repr::Exact0 => None,
            Repr::Zero { abs } => Some(abs),
            Repr::Unit { val, prec, .. } => Some(val + prec as i64),
        }
    }

    pub fn rel_precision(&self) -> Option<u32> {
        match self.repr {
            Repr::Unit { prec, .. } => Some(prec),
            _ => None,
        }
    }

    pub fn unit(&self) -> Option<u128> {
        match self.repr {
            Repr::Unit { unit, .. } => Some(unit),
            _ => None,
        }
    }

    /// Exact zero or zero at the known precision.
    pub fn is_zero(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Exact0)
    }

    fn same_prime(&self, o: &Padic) -> Result<(), PadicError> {
        if self.p == o.p {
            Ok(())
        } else {
            Err(PadicError::MixedPrimes)
        }
    }

    fn truncate_abs(&self, abs: i64) -> Padic {
        match self.repr {
            Repr::Exact0 => Padic {
                p: self.p,
                repr: Repr::Zero { abs },
            },
            Repr::Zero { abs: a } => Padic {
                p: self.p,
                repr: Repr::Zero { abs: a.min(abs) },
            },
            Repr::Unit { val, unit, prec } => {
                if abs <= val {
                    Padic {
                        p: self.p,
                        repr: Repr::Zero { abs },
                    }
                } else {
                    let prec = prec.min((abs - val) as u32);
                    Padic {
                        p: self.p,
                        repr: Repr::Unit {
                            val,
                            unit: unit % pow(self.p, prec),
                            prec,
                        },
                    }
                }
            }
        }
    }

    pub fn add(&self, o: &Padic) -> Result<Padic, PadicError> {
        self.same_prime(o)?;
        let p = self.p;
        Ok(match (self.repr, o.repr) {
            (Repr::Exact0, _) => *o,
            (_, Repr::Exact0) => *self,
            (Repr::Zero { abs }, _) => o.truncate_abs(abs),
            (_, Repr::Zero { abs }) => self.truncate_abs(abs),
            (
                Repr::Unit {
                    val: va,
                    unit: ua,
                    prec: pa,
                },
                Repr::Unit {
                    val: vb,
                    unit: ub,
                    prec: pb,
                },
            ) => {
                let m = va.min(vb);
                let n = (va + pa as i64).min(vb + pb as i64);
                let r = (n - m) as u32;
                let modulus = pow(p, r);
                let shift = |u: u128, v: i64| {
                    let s = (v - m) as u32;
                    if s >= r {
                        0
                    } else {
                        (u % pow(p, r - s)) * pow(p, s) % modulus
                    }
                };
                let s = (shift(ua, va) + shift(ub, vb)) % modulus;
                if s == 0 {
                    Padic {
                        p,
                        repr: Repr::Zero { abs: n },
                    }
                } else {
                    let mut k = 0u32;
                    let mut u = s;
                    while u.is_multiple_of(p as u128) {
                        u /= p as u128;
                        k += 1;
                    }
                    Padic {
                        p,
                        repr: Repr::Unit {
                            val: m + k as i64,
                            unit: u,
                            prec: r - k,
                        },
                    }
                }
            }
        })
    }

    pub fn neg(&self) -> Padic {
        match self.repr {
            Repr::Unit { val, unit, prec } => {
                let m = pow(self.p, prec);
                Padic {
                    p: self.p,
                    repr: Repr::Unit {
                        val,
                        unit: (m - unit) % m,
                        prec,
                    },
                }
            }
            _ => *self,
        }
    }

    pub fn sub(&self, o: &Padic) -> Result<Padic, PadicError> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Padic) -> Result<Padic, PadicError> {
        self.same_prime(o)?;
        let p = self.p;
        Ok(match (self.repr, o.repr) {
            (Repr::Exact0, _) | (_, Repr::Exact0) => Padic::zero(p),
            (Repr::Zero { abs }, r) | (r, Repr::Zero { abs }) => Padic {
                p,
                repr: Repr::Zero {
                    abs: abs
                        + match r {
                            Repr::Zero { abs } => abs,
                            Repr::Unit { val, .. } => val,
                            Repr::Exact0 => unreachable!(),
                        },
                },
            },
            (
                Repr::Unit {
                    val: va,
                    unit: ua,
                    prec: pa,
                },
                Repr::Unit {
                    val: vb,
                    unit: ub,
                    prec: pb,
                },
            ) => {
                let prec = pa.min(pb);
                let m = pow(p, prec);
                Padic {
                    p,
                    repr: Repr::Unit {
                        val: va + vb,
                        unit: (ua % m) * (ub % m) % m,
                        prec,
                    },
                }
            }
        })
    }

    pub fn inv(&self) -> Result<Padic, PadicError> {
        match self.repr {
            Repr::Exact0 => Err(PadicError::DivisionByZero),
            Repr::Zero { .. } => Err(PadicError::PrecisionExhausted),
            Repr::Unit { val, unit, prec } => Ok(Padic {
                p: self.p,
                repr: Repr::Unit {
                    val: -val,
                    unit: inv_mod(unit, pow(self.p, prec)),
                    prec,
                },
            }),
        }
    }

    pub fn div(&self, o: &Padic) -> Result<Padic, PadicError> {
        self.mul(&o.inv()?)
    }

    /// Multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> Padic {
        let repr = match self.repr {
            Repr::Exact0 => Repr::Exact0,
            Repr::Zero { abs } => Repr::Zero { abs: abs + k },
            Repr::Unit { val, unit, prec } => Repr::Unit {
                val: val + k,
                unit,
                prec,
            },
        };
        Padic { p: self.p, repr }
    }

    /// Coefficients of `p^0 … p^(len−1)`; needs a nonnegative valuation.
    pub fn digits(&self, len: usize) -> Result<Vec<u32>, PadicError> {
        let mut out = vec![0u32; len];
        match self.repr {
            Repr::Exact0 => {}
            Repr::Zero { abs } => {
                if abs < len as i64 {
                    return Err(PadicError::PrecisionExhausted);
                }
            }
            Repr::Unit { val, unit, prec } => {
                if val < 0 {
                    return Err(PadicError::Malformed("negative valuation has no integer digits".into()));
                }
                if val + (prec as i64) < len as i64 {
                    return Err(PadicError::PrecisionExhausted);
                }
                let mut u = unit;
                for slot in out.iter_mut().skip(val as usize) {
                    *slot = (u % self.p as u128) as u32;
                    u /= self.p as u128;
                }
            }
        }
        Ok(out)
    }

    /// Equal at the precision both sides carry.
    pub fn approx_eq(&self, o: &Padic) -> bool {
        self.sub(o).map(|d| d.is_zero()).unwrap_or(false)
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.repr {
            Repr::Exact0 => write!(f, "0"),
            Repr::Zero { abs } => write!(f, "O({}^{})", self.p, abs),
            Repr::Unit { val, unit, prec } => {
                write!(f, "{}*{}^{} + O({}^{})", unit, self.p, val, self.p, val + prec as i64)
            }
        }
    }
}

/// JSON scalar: `p^val · num / den` with decimal integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub num: String,
    pub den: String,
    pub val: i64,
}
