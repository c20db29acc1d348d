//! Exact rational scalars and their `"p/q"` string form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or a plain integer `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator {s:?}: {e}"))?;
            let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator {s:?}: {e}"))?;
            if d.is_zero() {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Rat::new(n, d))
        }
        None => {
            let n = BigInt::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
            Ok(Rat::from_integer(n))
        }
    }
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational-or-infinite scalar. `NegInf` only ever appears as an operation
/// output (an unbounded infimum), never in stored map data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRat {
    NegInf,
    Finite(Rat),
    PosInf,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(Rat::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn min(self, other: ExtRat) -> ExtRat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: ExtRat) -> ExtRat {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Difference with the `+inf - inf = 0` convention used for constancy
    /// detection.
    pub fn sub_inf_zero(&self, other: &ExtRat) -> ExtRat {
        match (self, other) {
            (ExtRat::PosInf, ExtRat::PosInf) | (ExtRat::NegInf, ExtRat::NegInf) => ExtRat::zero(),
            (ExtRat::PosInf, _) => ExtRat::PosInf,
            (ExtRat::NegInf, _) => ExtRat::NegInf,
            (_, ExtRat::PosInf) => ExtRat::NegInf,
            (_, ExtRat::NegInf) => ExtRat::PosInf,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a - b),
        }
    }

    pub fn to_string_ext(&self) -> String {
        match self {
            ExtRat::NegInf => "-inf".to_string(),
            ExtRat::PosInf => "inf".to_string(),
            ExtRat::Finite(r) => format_rat(r),
        }
    }

    pub fn parse_ext(s: &str) -> Result<ExtRat, String> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtRat::PosInf),
            "-inf" => Ok(ExtRat::NegInf),
            other => parse_rat(other).map(ExtRat::Finite),
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        use ExtRat::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Equal,
            (NegInf, _) | (_, PosInf) => Less,
            (_, NegInf) | (PosInf, _) => Greater,
            (Finite(a), Finite(b)) => a.cmp(b),
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

pub fn abs(r: &Rat) -> Rat {
    r.abs()
}
