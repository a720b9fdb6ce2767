//! Nonnegative-or-infinite reals with saturating arithmetic.

use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// An extended real in `(-inf, +inf]`.
///
/// `+inf` absorbs addition and compares above every finite value. NaN is
/// never stored: constructors map it to `+inf`, which is the conservative
/// reading for cost-like quantities.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    pub fn new(x: f64) -> Self {
        if x.is_nan() || x == f64::NEG_INFINITY {
            // -inf never arises from nonnegative costs; treat as undefined
            ExtReal(f64::INFINITY)
        } else {
            ExtReal(x)
        }
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        !self.0.is_finite()
    }

    /// The raw value; `f64::INFINITY` for `+inf`.
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn finite(self) -> Option<f64> {
        self.is_finite().then_some(self.0)
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::new(x)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        if self.is_infinite() || rhs.is_infinite() {
            ExtReal::INFINITY
        } else {
            ExtReal::new(self.0 + rhs.0)
        }
    }
}

/// Scaling by a nonnegative finite factor. `0 * inf = inf` here, since an
/// infinite cost on a set of zero length is still infeasible on the lattice.
impl Mul<f64> for ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: f64) -> ExtReal {
        if self.is_infinite() {
            ExtReal::INFINITY
        } else {
            ExtReal::new(self.0 * rhs)
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "+inf")
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Serialized as a number, or the string `"inf"` (JSON has no infinity).
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.finite() {
            Some(x) => s.serialize_f64(x),
            None => s.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_and_dominates() {
        let a = ExtReal::new(3.0);
        assert_eq!(a + ExtReal::INFINITY, ExtReal::INFINITY);
        assert!(ExtReal::INFINITY > ExtReal::new(f64::MAX));
        assert_eq!((a + ExtReal::new(1.5)).value(), 4.5);
        assert_eq!(ExtReal::INFINITY * 0.0, ExtReal::INFINITY);
    }

    #[test]
    fn nan_maps_to_infinity() {
        assert!(ExtReal::new(f64::NAN).is_infinite());
    }

    #[test]
    fn serializes_infinity_as_string() {
        let s = serde_json::to_string(&[ExtReal::new(1.0), ExtReal::INFINITY]).unwrap();
        assert_eq!(s, "[1.0,\"inf\"]");
    }
}
