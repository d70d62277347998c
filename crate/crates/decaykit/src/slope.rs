//! Surgery slopes on the peripheral Z^2 lattice and lexicographic lattice
//! orders, with the exact decision procedure for sign constancy on a
//! half-open slope window.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{gcd, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlopeError {
    #[error("zero vector has no slope")]
    ZeroVector,
    #[error("operation requires a finite slope")]
    NotFinite,
    #[error("target slope does not lie strictly between the endpoints")]
    NotInterleaved,
    #[error("degenerate order: functionals are linearly dependent")]
    DegenerateOrder,
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    fn from_i128(x: i128) -> Option<Sign> {
        match x.cmp(&0) {
            Ordering::Greater => Some(Sign::Positive),
            Ordering::Less => Some(Sign::Negative),
            Ordering::Equal => None,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Positive => write!(f, "+"),
            Sign::Negative => write!(f, "-"),
        }
    }
}

/// m/n with Infinity for the meridian direction (n = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeValue {
    Finite(Rational),
    Infinity,
}

impl PartialOrd for SlopeValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SlopeValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (SlopeValue::Infinity, SlopeValue::Infinity) => Ordering::Equal,
            (SlopeValue::Infinity, SlopeValue::Finite(_)) => Ordering::Greater,
            (SlopeValue::Finite(_), SlopeValue::Infinity) => Ordering::Less,
            (SlopeValue::Finite(a), SlopeValue::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for SlopeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlopeValue::Finite(r) => write!(f, "{r}"),
            SlopeValue::Infinity => write!(f, "inf"),
        }
    }
}

/// A lattice direction mu^m lambda^n stored as a primitive vector plus its
/// content. Invariants: (m, n) primitive, n >= 0, and m = 1 when n = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slope {
    m: i64,
    n: i64,
    weight: i64,
}

impl Slope {
    pub fn reduce(m: i64, n: i64) -> Result<Slope, SlopeError> {
        if m == 0 && n == 0 {
            return Err(SlopeError::ZeroVector);
        }
        let g = gcd(m, n);
        let (mut m, mut n) = (m / g, n / g);
        if n < 0 || (n == 0 && m < 0) {
            m = -m;
            n = -n;
        }
        Ok(Slope { m, n, weight: g })
    }

    pub fn from_rational(r: Rational) -> Slope {
        Slope {
            m: r.num(),
            n: r.den(),
            weight: 1,
        }
    }

    pub fn primitive(&self) -> (i64, i64) {
        (self.m, self.n)
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    /// The full lattice vector, weight included.
    pub fn vector(&self) -> (i64, i64) {
        (self.m * self.weight, self.n * self.weight)
    }

    pub fn value(&self) -> SlopeValue {
        if self.n == 0 {
            SlopeValue::Infinity
        } else {
            SlopeValue::Finite(Rational::new(self.m, self.n).expect("n != 0"))
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight == 1 {
            write!(f, "{}/{}", self.m, self.n)
        } else {
            write!(f, "{}*({}/{})", self.weight, self.m, self.n)
        }
    }
}

/// Verdict for the window of finite slopes with value >= r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowVerdict {
    AllPositive,
    AllNegative,
    Mixed,
}

/// Lexicographic order on Z^2: sign of v is sign(f1(v)), broken by f2 when
/// f1 vanishes. det(f1, f2) != 0 makes every nonzero vector signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZZOrder {
    f1: (i64, i64),
    f2: (i64, i64),
}

impl ZZOrder {
    pub fn new(f1: (i64, i64), f2: (i64, i64)) -> Result<ZZOrder, SlopeError> {
        let det = (f1.0 as i128) * (f2.1 as i128) - (f1.1 as i128) * (f2.0 as i128);
        if det == 0 {
            return Err(SlopeError::DegenerateOrder);
        }
        Ok(ZZOrder { f1, f2 })
    }

    pub fn reverse(&self) -> ZZOrder {
        ZZOrder {
            f1: (-self.f1.0, -self.f1.1),
            f2: (-self.f2.0, -self.f2.1),
        }
    }

    fn apply(f: (i64, i64), m: i64, n: i64) -> i128 {
        (f.0 as i128) * (m as i128) + (f.1 as i128) * (n as i128)
    }

    /// Sign of the lattice vector (m, n) != (0, 0).
    pub fn vector_sign(&self, m: i64, n: i64) -> Result<Sign, SlopeError> {
        if m == 0 && n == 0 {
            return Err(SlopeError::ZeroVector);
        }
        if let Some(s) = Sign::from_i128(Self::apply(self.f1, m, n)) {
            return Ok(s);
        }
        Sign::from_i128(Self::apply(self.f2, m, n)).ok_or(SlopeError::DegenerateOrder)
    }

    pub fn slope_sign(&self, s: &Slope) -> Result<Sign, SlopeError> {
        let (m, n) = s.primitive();
        self.vector_sign(m, n)
    }

    /// Slope of the kernel direction of the leading functional.
    pub fn boundary_slope(&self) -> SlopeValue {
        let (a1, b1) = self.f1;
        // Kernel direction (b1, -a1), normalized to n >= 0.
        if a1 == 0 {
            SlopeValue::Infinity
        } else {
            SlopeValue::Finite(Rational::new(b1, -a1).expect("a1 != 0"))
        }
    }

    /// Decide whether every finite slope with value >= r gets the same sign.
    ///
    /// The window is a convex cone between alpha_r and the meridian
    /// direction; the leading functional is sign-constant on it unless its
    /// kernel crosses the interior, so the decision is exact.
    pub fn decayed_window_check(&self, r: &Rational) -> WindowVerdict {
        let (rm, rn) = (r.num(), r.den());
        let verdict = |s: Sign| match s {
            Sign::Positive => WindowVerdict::AllPositive,
            Sign::Negative => WindowVerdict::AllNegative,
        };
        match self.boundary_slope() {
            SlopeValue::Infinity => {
                // f1 = (0, b1): on n >= 1 the sign is sign(b1).
                verdict(Sign::from_i128(self.f1.1 as i128).expect("f1 != 0"))
            }
            SlopeValue::Finite(beta) => match beta.cmp(r) {
                Ordering::Less => {
                    let s = Sign::from_i128(Self::apply(self.f1, rm, rn))
                        .expect("kernel below window");
                    verdict(s)
                }
                Ordering::Equal => {
                    // f1 vanishes exactly at alpha_r; the tie-break sign
                    // there must agree with the open part.
                    let at_r = Sign::from_i128(Self::apply(self.f2, rm, rn))
                        .expect("det != 0");
                    let above = Sign::from_i128(Self::apply(self.f1, rm + 1, rn))
                        .expect("strictly above kernel");
                    if at_r == above {
                        verdict(at_r)
                    } else {
                        WindowVerdict::Mixed
                    }
                }
                Ordering::Greater => WindowVerdict::Mixed,
            },
        }
    }
}

/// Express c * target as a * r1 + b * r2 with a, b, c > 0, on full lattice
/// vectors. Requires finite slopes with value(r1) < value(target) < value(r2).
pub fn cramer_decompose(
    r1: &Slope,
    r2: &Slope,
    target: &Slope,
) -> Result<(i64, i64, i64), SlopeError> {
    for s in [r1, r2, target] {
        if s.value() == SlopeValue::Infinity {
            return Err(SlopeError::NotFinite);
        }
    }
    if !(r1.value() < target.value() && target.value() < r2.value()) {
        return Err(SlopeError::NotInterleaved);
    }
    let (p1, q1) = r1.vector();
    let (p2, q2) = r2.vector();
    let (m, n) = target.vector();
    let a = (n as i128) * (p2 as i128) - (q2 as i128) * (m as i128);
    let b = (q1 as i128) * (m as i128) - (n as i128) * (p1 as i128);
    let c = (q1 as i128) * (p2 as i128) - (q2 as i128) * (p1 as i128);
    let a = i64::try_from(a).map_err(|_| SlopeError::Overflow)?;
    let b = i64::try_from(b).map_err(|_| SlopeError::Overflow)?;
    let c = i64::try_from(c).map_err(|_| SlopeError::Overflow)?;
    Ok((a, b, c))
}
