use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::addr::VertexAddr;
use crate::space::SpaceTag;

/// Entries whose modulus falls below this are treated as zero and purged,
/// keeping the no-stored-zero invariant meaningful.
const PURGE_THRESHOLD: f64 = 1e-300;

/// A finitely supported complex-valued function on the vertices.
/// Zero entries are never stored; addresses are expected canonical.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FinSuppVec {
    entries: BTreeMap<VertexAddr, Complex64>,
}

impl FinSuppVec {
    pub fn zero() -> Self {
        FinSuppVec::default()
    }

    /// The canonical basis vector `e_v`.
    pub fn unit(v: VertexAddr) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(v, Complex64::ONE);
        FinSuppVec { entries }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VertexAddr, Complex64)>) -> Self {
        let mut out = FinSuppVec::zero();
        for (v, z) in pairs {
            out.add_assign_entry(v, z);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: &VertexAddr) -> Complex64 {
        self.entries.get(v).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn support(&self) -> impl Iterator<Item = &VertexAddr> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexAddr, &Complex64)> {
        self.entries.iter()
    }

    /// Accumulates `z` into the entry at `v`, purging near-zero results.
    pub fn add_assign_entry(&mut self, v: VertexAddr, z: Complex64) {
        let new = self.get(&v) + z;
        if new.norm() < PURGE_THRESHOLD {
            self.entries.remove(&v);
        } else {
            self.entries.insert(v, new);
        }
    }

    /// Inserts replacing any previous entry (still purging near-zeros).
    pub fn set(&mut self, v: VertexAddr, z: Complex64) {
        if z.norm() < PURGE_THRESHOLD {
            self.entries.remove(&v);
        } else {
            self.entries.insert(v, z);
        }
    }

    pub fn add(&self, other: &FinSuppVec) -> FinSuppVec {
        let mut out = self.clone();
        for (v, z) in &other.entries {
            out.add_assign_entry(v.clone(), *z);
        }
        out
    }

    pub fn sub(&self, other: &FinSuppVec) -> FinSuppVec {
        let mut out = self.clone();
        for (v, z) in &other.entries {
            out.add_assign_entry(v.clone(), -z);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> FinSuppVec {
        let mut out = FinSuppVec::zero();
        for (v, z) in &self.entries {
            out.add_assign_entry(v.clone(), c * z);
        }
        out
    }

    /// `l^p` or sup norm per the space tag.
    pub fn norm(&self, space: SpaceTag) -> f64 {
        match space {
            SpaceTag::L1 => self.entries.values().map(|z| z.norm()).sum(),
            SpaceTag::Lp(p) => self
                .entries
                .values()
                .map(|z| z.norm().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
            SpaceTag::C0 => self
                .entries
                .values()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        }
    }

    /// Coordinatewise product; the support shrinks to the intersection.
    pub fn cw_product(&self, other: &FinSuppVec) -> FinSuppVec {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = FinSuppVec::zero();
        for (v, z) in &small.entries {
            let w = large.get(v);
            if w != Complex64::ZERO {
                out.set(v.clone(), z * w);
            }
        }
        out
    }

    /// Coordinatewise principal `s`-th power: `z -> exp(s Log z)` with the
    /// argument in `(-pi, pi]`. `s = 1` is the identity, exactly.
    pub fn power(&self, s: f64) -> FinSuppVec {
        if s == 1.0 {
            return self.clone();
        }
        let mut out = FinSuppVec::zero();
        for (v, z) in &self.entries {
            out.set(v.clone(), z.powf(s));
        }
        out
    }

    /// Coordinatewise integer power by repeated multiplication (exact
    /// complex arithmetic, no branch cuts).
    pub fn powu(&self, k: u32) -> FinSuppVec {
        let mut out = FinSuppVec::zero();
        for (v, z) in &self.entries {
            out.set(v.clone(), z.powu(k));
        }
        out
    }
}

/// The monomial `h_1^{a_1} ... h_d^{a_d}` under the coordinatewise product;
/// factors with exponent zero are omitted (not treated as all-ones).
pub fn monomial(h: &[FinSuppVec], alpha: &[u32]) -> FinSuppVec {
    debug_assert_eq!(h.len(), alpha.len());
    let mut acc: Option<FinSuppVec> = None;
    for (f, &a) in h.iter().zip(alpha) {
        if a == 0 {
            continue;
        }
        let factor = f.powu(a);
        acc = Some(match acc {
            None => factor,
            Some(prev) => prev.cw_product(&factor),
        });
    }
    acc.unwrap_or_else(FinSuppVec::zero)
}

impl fmt::Display for FinSuppVec {
    /// The vector literal format: `addr=re,im` entries joined by `;`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (v, z) in &self.entries {
            if !first {
                write!(f, ";")?;
            }
            write!(f, "{v}={},{}", z.re, z.im)?;
            first = false;
        }
        Ok(())
    }
}
