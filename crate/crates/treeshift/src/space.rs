use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The sequence space an operator acts on: `l^1`, `l^p` with `1 < p < oo`,
/// or `c_0` with the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpaceTag {
    L1,
    Lp(f64),
    C0,
}

impl SpaceTag {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::invalid(format!(
                "l^p requires p in [1, oo), got {p}"
            )));
        }
        if p == 1.0 {
            return Ok(SpaceTag::L1);
        }
        Ok(SpaceTag::Lp(p))
    }

    /// Conjugate exponent `p*` with `1/p + 1/p* = 1`; `None` for `l^1`
    /// (where it is infinite) and for `c_0` (where it is not used).
    pub fn conjugate_exponent(&self) -> Option<f64> {
        match self {
            SpaceTag::Lp(p) => Some(p / (p - 1.0)),
            SpaceTag::L1 | SpaceTag::C0 => None,
        }
    }

    /// Exponent of the child sums in the boundedness and hypercyclicity
    /// criteria: `p*` on `l^p`, `1` on `c_0`, none on `l^1` (which uses a
    /// supremum instead).
    pub fn sum_exponent(&self) -> Option<f64> {
        match self {
            SpaceTag::L1 => None,
            SpaceTag::Lp(p) => Some(p / (p - 1.0)),
            SpaceTag::C0 => Some(1.0),
        }
    }
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTag::L1 => write!(f, "l1"),
            SpaceTag::Lp(p) => write!(f, "l{p}"),
            SpaceTag::C0 => write!(f, "c0"),
        }
    }
}

impl FromStr for SpaceTag {
    type Err = Error;

    /// Accepts `l1`, `c0`, and `l<p>` such as `l2` or `l1.5`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(SpaceTag::L1),
            "c0" => Ok(SpaceTag::C0),
            _ if s.starts_with('l') => {
                let p: f64 = s[1..]
                    .parse()
                    .map_err(|_| Error::invalid(format!("unknown space `{s}`")))?;
                SpaceTag::lp(p)
            }
            _ => Err(Error::invalid(format!("unknown space `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_exponent_identity() {
        for p in [1.5, 2.0, 3.0, 7.5] {
            let s = SpaceTag::lp(p).unwrap();
            let q = s.conjugate_exponent().unwrap();
            assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(SpaceTag::lp(1.0).is_ok()); // folds to l1
        assert!(SpaceTag::lp(0.5).is_err());
        assert!(SpaceTag::lp(f64::INFINITY).is_err());
    }

    #[test]
    fn parses_space_names() {
        assert_eq!("l1".parse::<SpaceTag>().unwrap(), SpaceTag::L1);
        assert_eq!("c0".parse::<SpaceTag>().unwrap(), SpaceTag::C0);
        assert_eq!("l2".parse::<SpaceTag>().unwrap(), SpaceTag::Lp(2.0));
        assert!("x3".parse::<SpaceTag>().is_err());
    }
}
