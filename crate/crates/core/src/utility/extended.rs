use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A real number or one of the two infinities.
///
/// Addition is the lower (concave) convention: `−∞` absorbs everything,
/// including `+∞`. This is the convention under which `E[u(X)] = −∞` as soon
/// as one outcome has `u = −∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    /// Converts an `f64`, mapping IEEE infinities to the symbolic ones.
    ///
    /// # Panics
    /// Panics on NaN.
    pub fn from_f64(v: f64) -> Self {
        assert!(!v.is_nan(), "NaN has no extended-real representation");
        if v == f64::INFINITY {
            ExtendedReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtendedReal::NegInf
        } else {
            ExtendedReal::Finite(v)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInf => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInf => f64::INFINITY,
        }
    }

    /// Multiplies by a nonnegative scalar with `0 · (±∞) = 0`.
    pub fn scale(self, k: f64) -> Self {
        debug_assert!(k >= 0.0);
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v * k),
            _ if k == 0.0 => ExtendedReal::ZERO,
            other => other,
        }
    }

    /// Supremum of a collection; the empty supremum is `−∞`.
    pub fn sup<I: IntoIterator<Item = ExtendedReal>>(iter: I) -> Self {
        iter.into_iter()
            .fold(ExtendedReal::NegInf, |acc, v| if v > acc { v } else { acc })
    }

    /// Upper addition: `+∞` absorbs everything. Used for convex integrands.
    pub fn add_upper(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::PosInf, _) | (_, ExtendedReal::PosInf) => ExtendedReal::PosInf,
            (ExtendedReal::NegInf, _) | (_, ExtendedReal::NegInf) => ExtendedReal::NegInf,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::from_f64(v)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::NegInf, _) | (_, ExtendedReal::NegInf) => ExtendedReal::NegInf,
            (ExtendedReal::PosInf, _) | (_, ExtendedReal::PosInf) => ExtendedReal::PosInf,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn add(self, rhs: f64) -> ExtendedReal {
        self + ExtendedReal::from_f64(rhs)
    }
}

impl Sub<f64> for ExtendedReal {
    type Output = ExtendedReal;
    fn sub(self, rhs: f64) -> ExtendedReal {
        self + ExtendedReal::from_f64(-rhs)
    }
}

impl Neg for ExtendedReal {
    type Output = ExtendedReal;
    fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::NegInf => ExtendedReal::PosInf,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(-v),
            ExtendedReal::PosInf => ExtendedReal::NegInf,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInf => write!(f, "-inf"),
            ExtendedReal::PosInf => write!(f, "+inf"),
            ExtendedReal::Finite(v) => fmt::Display::fmt(v, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_inf_absorbs() {
        assert_eq!(ExtendedReal::NegInf + 3.0, ExtendedReal::NegInf);
        assert_eq!(ExtendedReal::NegInf + ExtendedReal::PosInf, ExtendedReal::NegInf);
        assert_eq!(ExtendedReal::NegInf.add_upper(ExtendedReal::PosInf), ExtendedReal::PosInf);
    }

    #[test]
    fn empty_sup_is_neg_inf() {
        assert_eq!(ExtendedReal::sup(std::iter::empty()), ExtendedReal::NegInf);
        let s = ExtendedReal::sup([ExtendedReal::Finite(1.0), ExtendedReal::Finite(2.0)]);
        assert_eq!(s, ExtendedReal::Finite(2.0));
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtendedReal::PosInf.scale(0.0), ExtendedReal::ZERO);
        assert_eq!(ExtendedReal::PosInf.scale(2.0), ExtendedReal::PosInf);
    }

    #[test]
    fn ordering() {
        assert!(ExtendedReal::NegInf < ExtendedReal::Finite(-1e300));
        assert!(ExtendedReal::PosInf > ExtendedReal::Finite(1e300));
    }
}
