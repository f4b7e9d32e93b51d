use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Canonical address of a vertex in a rooted or anchored-unrooted tree.
///
/// A vertex is reached by climbing `ascent` parent steps above the anchor
/// (the root, for rooted trees, where `ascent` is always 0) and then
/// descending along 1-based child indices in `path`.
///
/// For unrooted trees the same vertex could be written in several ways by
/// ascending too far and coming back down through a spine child; the
/// canonical form forbids `path[0]` from being the spine index of the
/// topmost ascended vertex, so each vertex has exactly one address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VertexAddr {
    ascent: u32,
    path: Vec<u32>,
}

impl VertexAddr {
    /// The root of a rooted tree (also used for the anchor of an unrooted one).
    pub fn root() -> Self {
        VertexAddr { ascent: 0, path: Vec::new() }
    }

    /// Alias for [`VertexAddr::root`] that reads better on unrooted trees.
    pub fn anchor() -> Self {
        Self::root()
    }

    /// Address with ascent 0 and the given descent path.
    pub fn rooted(path: impl Into<Vec<u32>>) -> Self {
        VertexAddr { ascent: 0, path: path.into() }
    }

    pub fn new(ascent: u32, path: impl Into<Vec<u32>>) -> Self {
        VertexAddr { ascent, path: path.into() }
    }

    pub fn ascent(&self) -> u32 {
        self.ascent
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// Signed generation relative to the root/anchor: `|path| - ascent`.
    pub fn generation(&self) -> i64 {
        self.path.len() as i64 - self.ascent as i64
    }

    /// Depth below the root; only meaningful on rooted trees.
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn is_root(&self) -> bool {
        self.ascent == 0 && self.path.is_empty()
    }

    /// Child address by appending one descent index (no canonicality check;
    /// appending never breaks canonical form when `self` is canonical and
    /// the index is not a spine index at an on-spine vertex).
    pub(crate) fn child_unchecked(&self, index: u32) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        VertexAddr { ascent: self.ascent, path }
    }

    /// Structural parent: strip the last descent step, else ascend.
    pub(crate) fn parent_unchecked(&self) -> Self {
        if self.path.is_empty() {
            VertexAddr { ascent: self.ascent + 1, path: Vec::new() }
        } else {
            VertexAddr {
                ascent: self.ascent,
                path: self.path[..self.path.len() - 1].to_vec(),
            }
        }
    }
}

impl fmt::Display for VertexAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ascent == 0 {
            write!(f, "r")?;
        } else {
            write!(f, "p{}", self.ascent)?;
        }
        for step in &self.path {
            write!(f, ".{step}")?;
        }
        Ok(())
    }
}

impl FromStr for VertexAddr {
    type Err = Error;

    /// Parses `r`, `a`, `r.1.2`, `p3`, `p3.2.1`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut parts = s.split('.');
        let head = parts.next().unwrap_or("");
        let ascent = match head {
            "r" | "a" => 0,
            _ if head.starts_with('p') => head[1..]
                .parse::<u32>()
                .map_err(|_| Error::malformed(s, "ascent must be `p<k>` with k >= 1"))
                .and_then(|k| {
                    if k == 0 {
                        Err(Error::malformed(s, "use `r` or `a` instead of `p0`"))
                    } else {
                        Ok(k)
                    }
                })?,
            _ => return Err(Error::malformed(s, "expected `r`, `a` or `p<k>` head")),
        };
        let mut path = Vec::new();
        for part in parts {
            let idx: u32 = part
                .parse()
                .map_err(|_| Error::malformed(s, "child indices must be positive integers"))?;
            if idx == 0 {
                return Err(Error::malformed(s, "child indices are 1-based"));
            }
            path.push(idx);
        }
        Ok(VertexAddr { ascent, path })
    }
}

impl From<VertexAddr> for String {
    fn from(a: VertexAddr) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for VertexAddr {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}
