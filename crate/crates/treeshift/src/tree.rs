use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::addr::VertexAddr;
use crate::error::{Error, Result};

/// Number of children of a vertex. Leafless trees require at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChildCount {
    Finite(u32),
    CountablyInfinite,
}

impl ChildCount {
    pub fn finite(self) -> Option<u32> {
        match self {
            ChildCount::Finite(n) => Some(n),
            ChildCount::CountablyInfinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ChildCount::CountablyInfinite)
    }
}

impl fmt::Display for ChildCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChildCount::Finite(n) => write!(f, "{n}"),
            ChildCount::CountablyInfinite => write!(f, "countably-infinite"),
        }
    }
}

/// One ascent level of an anchored-unrooted tree: the arity of
/// `Par^k(anchor)` and the 1-based child index that leads back down
/// toward `Par^{k-1}(anchor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpineLevel {
    pub arity: ChildCount,
    pub spine_index: u32,
}

impl SpineLevel {
    pub fn new(arity: ChildCount, spine_index: u32) -> Result<Self> {
        if spine_index == 0 {
            return Err(Error::invalid("spine index is 1-based"));
        }
        if let ChildCount::Finite(m) = arity {
            if m == 0 {
                return Err(Error::invalid("leafless trees need arity >= 1"));
            }
            if spine_index > m {
                return Err(Error::invalid(format!(
                    "spine index {spine_index} exceeds arity {m}"
                )));
            }
        }
        Ok(SpineLevel { arity, spine_index })
    }

    /// Pure spine continuation: one child, which is the spine itself.
    pub fn singleton() -> Self {
        SpineLevel { arity: ChildCount::Finite(1), spine_index: 1 }
    }
}

/// Spine description of an anchored-unrooted tree: explicit levels
/// 1..=levels.len(), then `default` for every higher level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnrootedSpine {
    pub levels: Vec<SpineLevel>,
    pub default: SpineLevel,
}

impl UnrootedSpine {
    pub fn level(&self, k: u32) -> SpineLevel {
        debug_assert!(k >= 1);
        self.levels
            .get(k as usize - 1)
            .copied()
            .unwrap_or(self.default)
    }

    /// A free left end means all sufficiently negative generations are
    /// singletons, which with a finite table happens exactly when the
    /// default level is a pure spine continuation.
    pub fn has_free_left_end(&self) -> bool {
        self.default.arity == ChildCount::Finite(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeKind {
    Rooted,
    AnchoredUnrooted,
}

/// Structural families with closed-form analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeTag {
    /// Every vertex has exactly `n` children (dyadic = `NAdic(2)`).
    NAdic(u32),
    /// Star of rays: the root has countably many children, each starting
    /// a stationary ray.
    Menthe,
    /// The staircase with no fertile vertex: vertex `r_k` has `2^k`
    /// children, the last of which is `r_{k+1}`, the others stationary rays.
    Staircase,
    /// Anchored-unrooted tree described by a spine table; off-spine
    /// vertices all share one arity.
    Spine,
}

#[derive(Debug, Clone, PartialEq)]
enum ArityRule {
    Constant(ChildCount),
    Menthe,
    Staircase,
    Table {
        default: ChildCount,
        overrides: BTreeMap<VertexAddr, ChildCount>,
    },
}

/// Finite description of a (possibly infinite) leafless directed tree.
///
/// Immutable after construction; all queries are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    kind: TreeKind,
    arity_rule: ArityRule,
    spine: Option<UnrootedSpine>,
    tag: Option<TreeTag>,
}

/// Result of a budgeted enumeration: the vertices produced so far, in
/// deterministic order, and whether the true set goes on beyond them.
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub vertices: Vec<VertexAddr>,
    pub truncated: bool,
}

/// Exact or partial cardinality of a descendant set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountBound {
    Exact(f64),
    AtLeast(f64),
    Infinite,
}

impl CountBound {
    pub fn lower(&self) -> f64 {
        match self {
            CountBound::Exact(c) | CountBound::AtLeast(c) => *c,
            CountBound::Infinite => f64::INFINITY,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CountBound::Exact(_) | CountBound::Infinite)
    }
}

/// Outcome of the fertile-vertex search.
#[derive(Debug, Clone, PartialEq)]
pub enum FertilityVerdict {
    /// A vertex all of whose strict descendants have `|X^n(.)| -> oo`,
    /// with a structural justification.
    Fertile { vertex: VertexAddr, certificate: String },
    /// Proven structurally that no vertex is fertile.
    ProvenNone { certificate: String },
    /// Nothing provable from finite data: reports the horizon used and the
    /// smallest `|X^horizon(w)|` seen over the examined descendants.
    Inconclusive { horizon: u32, min_descendant_count: f64 },
}

impl fmt::Display for FertilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FertilityVerdict::Fertile { vertex, certificate } => {
                write!(f, "fertile({vertex}): {certificate}")
            }
            FertilityVerdict::ProvenNone { certificate } => {
                write!(f, "proven-none: {certificate}")
            }
            FertilityVerdict::Inconclusive { horizon, min_descendant_count } => write!(
                f,
                "inconclusive(horizon {horizon}): min |X^{horizon}(w)| over examined w = {min_descendant_count}"
            ),
        }
    }
}

impl TreeSpec {
    /// Rooted tree in which every vertex has exactly `n` children.
    pub fn nadic(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("leafless trees need arity >= 1"));
        }
        Ok(TreeSpec {
            kind: TreeKind::Rooted,
            arity_rule: ArityRule::Constant(ChildCount::Finite(n)),
            spine: None,
            tag: Some(TreeTag::NAdic(n)),
        })
    }

    pub fn dyadic() -> Self {
        Self::nadic(2).expect("2 >= 1")
    }

    /// The star-of-rays tree: `X(r) = {u_{i,1} : i in N}` and
    /// `X(u_{i,j}) = {u_{i,j+1}}`.
    pub fn menthe() -> Self {
        TreeSpec {
            kind: TreeKind::Rooted,
            arity_rule: ArityRule::Menthe,
            spine: None,
            tag: Some(TreeTag::Menthe),
        }
    }

    /// The staircase tree: `r_k` has `2^k` children, the last being
    /// `r_{k+1}` and the rest starting stationary rays. No vertex is
    /// fertile although `|X^n(r)|` grows exponentially.
    pub fn staircase() -> Self {
        TreeSpec {
            kind: TreeKind::Rooted,
            arity_rule: ArityRule::Staircase,
            spine: None,
            tag: Some(TreeTag::Staircase),
        }
    }

    /// Rooted tree from an explicit arity table with a default rule.
    pub fn rooted_table(
        default: ChildCount,
        overrides: BTreeMap<VertexAddr, ChildCount>,
    ) -> Result<Self> {
        validate_counts(default, &overrides)?;
        for addr in overrides.keys() {
            if addr.ascent() != 0 {
                return Err(Error::malformed(addr, "rooted addresses have ascent 0"));
            }
        }
        Ok(TreeSpec {
            kind: TreeKind::Rooted,
            arity_rule: ArityRule::Table { default, overrides },
            spine: None,
            tag: None,
        })
    }

    /// Anchored-unrooted tree: a spine table above the anchor and one
    /// constant arity for the anchor and every off-spine vertex.
    pub fn spine_tree(
        levels: Vec<SpineLevel>,
        default: SpineLevel,
        below: ChildCount,
    ) -> Result<Self> {
        if below == ChildCount::Finite(0) {
            return Err(Error::invalid("leafless trees need arity >= 1"));
        }
        Ok(TreeSpec {
            kind: TreeKind::AnchoredUnrooted,
            arity_rule: ArityRule::Constant(below),
            spine: Some(UnrootedSpine { levels, default }),
            tag: Some(TreeTag::Spine),
        })
    }

    /// Anchored-unrooted tree with an explicit arity table for off-spine
    /// vertices.
    pub fn unrooted_table(
        spine: UnrootedSpine,
        default: ChildCount,
        overrides: BTreeMap<VertexAddr, ChildCount>,
    ) -> Result<Self> {
        validate_counts(default, &overrides)?;
        Ok(TreeSpec {
            kind: TreeKind::AnchoredUnrooted,
            arity_rule: ArityRule::Table { default, overrides },
            spine: Some(spine),
            tag: None,
        })
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn is_rooted(&self) -> bool {
        self.kind == TreeKind::Rooted
    }

    pub fn tag(&self) -> Option<TreeTag> {
        self.tag
    }

    pub fn spine(&self) -> Option<&UnrootedSpine> {
        self.spine.as_ref()
    }

    pub fn has_free_left_end(&self) -> bool {
        self.spine.as_ref().is_some_and(|s| s.has_free_left_end())
    }

    /// Spine child index at ascent level `k >= 1` (unrooted trees only).
    pub fn spine_index(&self, k: u32) -> Option<u32> {
        self.spine.as_ref().map(|s| s.level(k).spine_index)
    }

    /// Number of children of a canonical vertex.
    pub fn arity(&self, v: &VertexAddr) -> Result<ChildCount> {
        self.validate(v)?;
        Ok(self.arity_unchecked(v))
    }

    fn arity_unchecked(&self, v: &VertexAddr) -> ChildCount {
        if v.ascent() > 0 && v.path().is_empty() {
            // On-spine vertex of an unrooted tree.
            let spine = self.spine.as_ref().expect("ascent > 0 implies unrooted");
            return spine.level(v.ascent()).arity;
        }
        match &self.arity_rule {
            ArityRule::Constant(c) => *c,
            ArityRule::Menthe => {
                if v.is_root() {
                    ChildCount::CountablyInfinite
                } else {
                    ChildCount::Finite(1)
                }
            }
            ArityRule::Staircase => match staircase_class(v.path()) {
                StaircaseClass::Root => ChildCount::Finite(1),
                StaircaseClass::Rung(k) => ChildCount::Finite(1 << k),
                StaircaseClass::Ray => ChildCount::Finite(1),
            },
            ArityRule::Table { default, overrides } => {
                overrides.get(v).copied().unwrap_or(*default)
            }
        }
    }

    pub(crate) fn arity_table(&self) -> Option<(ChildCount, &BTreeMap<VertexAddr, ChildCount>)> {
        match &self.arity_rule {
            ArityRule::Table { default, overrides } => Some((*default, overrides)),
            _ => None,
        }
    }

    /// Checks that an address denotes a vertex of this tree and is in
    /// canonical form.
    pub fn validate(&self, v: &VertexAddr) -> Result<()> {
        if self.is_rooted() && v.ascent() != 0 {
            return Err(Error::malformed(v, "rooted addresses have ascent 0"));
        }
        // Walk the descent and check each index against the arity above it.
        let mut cursor = VertexAddr::new(v.ascent(), vec![]);
        for (pos, &idx) in v.path().iter().enumerate() {
            if idx == 0 {
                return Err(Error::malformed(v, "child indices are 1-based"));
            }
            if pos == 0 && v.ascent() > 0 {
                let s = self.spine_index(v.ascent()).expect("unrooted");
                if idx == s {
                    return Err(Error::malformed(
                        v,
                        format!(
                            "not canonical: first step {idx} is the spine index at level {}",
                            v.ascent()
                        ),
                    ));
                }
            }
            if let ChildCount::Finite(m) = self.arity_unchecked(&cursor) {
                if idx > m {
                    return Err(Error::malformed(
                        v,
                        format!("child index {idx} exceeds arity {m} of `{cursor}`"),
                    ));
                }
            }
            cursor = cursor.child_unchecked(idx);
        }
        Ok(())
    }

    /// Folds spine-descending prefixes away so every vertex has exactly one
    /// address, then validates.
    pub fn canonicalize(&self, v: &VertexAddr) -> Result<VertexAddr> {
        let mut ascent = v.ascent();
        let mut path = v.path().to_vec();
        if !self.is_rooted() {
            while ascent > 0
                && !path.is_empty()
                && path[0] == self.spine_index(ascent).expect("unrooted")
            {
                ascent -= 1;
                path.remove(0);
            }
        }
        let out = VertexAddr::new(ascent, path);
        self.validate(&out)?;
        Ok(out)
    }

    /// `Par^k(v)` in canonical form: `None` when a rooted tree runs out of
    /// ancestors, always a vertex on unrooted trees.
    pub fn parent(&self, v: &VertexAddr, k: u32) -> Result<Option<VertexAddr>> {
        self.validate(v)?;
        if self.is_rooted() && (k as usize) > v.depth() {
            return Ok(None);
        }
        let mut cur = v.clone();
        for _ in 0..k {
            cur = cur.parent_unchecked();
        }
        Ok(Some(cur))
    }

    /// Children of a canonical vertex, in ascending child-index order,
    /// capped at `budget`.
    pub fn children(&self, v: &VertexAddr, budget: usize) -> Result<Enumeration> {
        self.validate(v)?;
        if budget == 0 {
            return Err(Error::invalid("budget must be positive"));
        }
        Ok(self.children_unchecked(v, budget))
    }

    fn children_unchecked(&self, v: &VertexAddr, budget: usize) -> Enumeration {
        let arity = self.arity_unchecked(v);
        let (limit, truncated) = match arity {
            ChildCount::Finite(m) => ((m as usize).min(budget), m as usize > budget),
            ChildCount::CountablyInfinite => (budget, true),
        };
        let on_spine = v.ascent() > 0 && v.path().is_empty();
        let spine_idx = if on_spine {
            self.spine_index(v.ascent()).expect("unrooted")
        } else {
            0
        };
        let mut vertices = Vec::with_capacity(limit);
        for i in 1..=limit as u32 {
            if on_spine && i == spine_idx {
                vertices.push(VertexAddr::new(v.ascent() - 1, vec![]));
            } else {
                vertices.push(v.child_unchecked(i));
            }
        }
        Enumeration { vertices, truncated }
    }

    /// `X^n(v)`: the n-th generation descendants of `v`, streamed
    /// depth-first with ascending child indices, capped at `budget`.
    /// `n = 0` yields `{v}`.
    pub fn children_n(&self, v: &VertexAddr, n: u32, budget: usize) -> Result<Enumeration> {
        self.validate(v)?;
        if budget == 0 {
            return Err(Error::invalid("budget must be positive"));
        }
        let mut out = Enumeration { vertices: Vec::new(), truncated: false };
        self.descend(v, n, budget, &mut |addr| out.vertices.push(addr), &mut out.truncated);
        Ok(out)
    }

    /// Depth-first walk of `X^n(v)` calling `sink` on every vertex, at most
    /// `budget` of them. Sets `truncated` when the walk is cut short.
    pub(crate) fn descend(
        &self,
        v: &VertexAddr,
        n: u32,
        budget: usize,
        sink: &mut dyn FnMut(VertexAddr),
        truncated: &mut bool,
    ) {
        let mut emitted = 0usize;
        let mut stack: Vec<(VertexAddr, u32)> = vec![(v.clone(), n)];
        while let Some((cur, rem)) = stack.pop() {
            if rem == 0 {
                if emitted >= budget {
                    *truncated = true;
                    return;
                }
                emitted += 1;
                sink(cur);
                continue;
            }
            let kids = self.children_unchecked(&cur, budget.saturating_add(1));
            if kids.truncated {
                *truncated = true;
            }
            for child in kids.vertices.into_iter().rev() {
                stack.push((child, rem - 1));
            }
        }
    }

    /// `Gen_n`: for rooted trees the vertices at depth `n >= 0`; for
    /// unrooted trees the vertices whose signed level relative to the
    /// anchor is `n`.
    pub fn generation(&self, n: i64, budget: usize) -> Result<Enumeration> {
        if budget == 0 {
            return Err(Error::invalid("budget must be positive"));
        }
        if self.is_rooted() {
            if n < 0 {
                return Err(Error::invalid("rooted trees have no negative generations"));
            }
            return self.children_n(&VertexAddr::root(), n as u32, budget);
        }
        let spine = self.spine.as_ref().expect("unrooted");
        let mut out = Enumeration { vertices: Vec::new(), truncated: false };
        // Ascend level by level; at ascent a the canonical vertices of
        // generation n are the off-spine descent trees of Par^a(anchor)
        // at depth a + n (the anchor's own subtree for a = 0).
        let mut a: u32 = 0;
        loop {
            let depth = a as i64 + n;
            if depth >= 0 {
                let depth = depth as u32;
                if a == 0 {
                    let remaining = budget.saturating_sub(out.vertices.len());
                    if remaining == 0 {
                        out.truncated = true;
                        break;
                    }
                    self.descend(
                        &VertexAddr::anchor(),
                        depth,
                        remaining,
                        &mut |addr| out.vertices.push(addr),
                        &mut out.truncated,
                    );
                } else if depth == 0 {
                    if out.vertices.len() >= budget {
                        out.truncated = true;
                        break;
                    }
                    out.vertices.push(VertexAddr::new(a, vec![]));
                } else {
                    let top = VertexAddr::new(a, vec![]);
                    let kids = self.children_unchecked(&top, budget.saturating_add(1));
                    if kids.truncated {
                        out.truncated = true;
                    }
                    for child in kids.vertices {
                        // Skip the spine child; its subtree belongs to a
                        // smaller ascent level.
                        if child.ascent() < a {
                            continue;
                        }
                        let remaining = budget.saturating_sub(out.vertices.len());
                        if remaining == 0 {
                            out.truncated = true;
                            break;
                        }
                        self.descend(
                            &child,
                            depth - 1,
                            remaining,
                            &mut |addr| out.vertices.push(addr),
                            &mut out.truncated,
                        );
                    }
                }
            }
            if out.truncated && out.vertices.len() >= budget {
                break;
            }
            // Stop once every higher level is a pure spine continuation:
            // those contribute only the single on-spine vertex, already
            // emitted at a = -n (when n < 0), and nothing else.
            let table_len = spine.levels.len() as u32;
            let beyond_table = a >= table_len;
            let tail_is_spine = spine.default.arity == ChildCount::Finite(1);
            if beyond_table && tail_is_spine && a as i64 >= -n {
                break;
            }
            if beyond_table && !tail_is_spine {
                // Infinitely many levels keep contributing vertices.
                if out.vertices.len() >= budget {
                    out.truncated = true;
                    break;
                }
            }
            a += 1;
            if a > 10_000 {
                // Safety stop for pathological spines; callers always
                // receive the truncation flag.
                out.truncated = true;
                break;
            }
        }
        Ok(out)
    }

    /// `|X^n(v)|`, exactly when the structure allows, else a lower bound
    /// from a budgeted walk.
    pub fn count_descendants(&self, v: &VertexAddr, n: u32, budget: usize) -> Result<CountBound> {
        self.validate(v)?;
        Ok(self.count_unchecked(v, n, budget))
    }

    fn count_unchecked(&self, v: &VertexAddr, n: u32, budget: usize) -> CountBound {
        if n == 0 {
            return CountBound::Exact(1.0);
        }
        match self.tag {
            Some(TreeTag::NAdic(m)) => CountBound::Exact((m as f64).powi(n as i32)),
            Some(TreeTag::Menthe) => {
                if v.is_root() {
                    CountBound::Infinite
                } else {
                    CountBound::Exact(1.0)
                }
            }
            Some(TreeTag::Staircase) => CountBound::Exact(staircase_count(v.path(), n)),
            Some(TreeTag::Spine) => {
                let below = match self.arity_rule {
                    ArityRule::Constant(c) => c,
                    _ => unreachable!("spine trees have constant off-spine arity"),
                };
                self.spine_count(v, n, below)
            }
            None => {
                // Budgeted walk.
                let mut count = 0f64;
                let mut truncated = false;
                self.descend(v, n, budget, &mut |_| count += 1.0, &mut truncated);
                if truncated {
                    CountBound::AtLeast(count)
                } else {
                    CountBound::Exact(count)
                }
            }
        }
    }

    fn spine_count(&self, v: &VertexAddr, n: u32, below: ChildCount) -> CountBound {
        let below_m = match below {
            ChildCount::Finite(m) => m as f64,
            ChildCount::CountablyInfinite => return CountBound::Infinite,
        };
        if v.ascent() == 0 || !v.path().is_empty() {
            // Anchor or off-spine: everything beneath is uniform.
            return CountBound::Exact(below_m.powi(n as i32));
        }
        let spine = self.spine.as_ref().expect("unrooted");
        // Walk down the spine: X^n(Par^a) splits into the spine child's
        // X^{n-1} plus the off-spine children's uniform subtrees.
        let mut total = 0f64;
        let mut a = v.ascent();
        let mut rem = n;
        loop {
            if a == 0 {
                total += below_m.powi(rem as i32);
                break;
            }
            let level = spine.level(a);
            let arity = match level.arity {
                ChildCount::Finite(m) => m as f64,
                ChildCount::CountablyInfinite => return CountBound::Infinite,
            };
            if rem == 0 {
                total += 1.0;
                break;
            }
            total += (arity - 1.0) * below_m.powi(rem as i32 - 1);
            a -= 1;
            rem -= 1;
        }
        CountBound::Exact(total)
    }

    /// Looks for a fertile vertex: exact verdicts for the builtin families,
    /// an honest `Inconclusive` for user arity tables.
    pub fn find_fertile(&self, horizon: u32) -> Result<FertilityVerdict> {
        if !self.is_rooted() {
            return Err(Error::unsupported(
                "fertility is defined here only for rooted trees",
            ));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        match self.tag {
            Some(TreeTag::NAdic(m)) if m >= 2 => Ok(FertilityVerdict::Fertile {
                vertex: VertexAddr::root(),
                certificate: format!(
                    "every strict descendant w satisfies |X^n(w)| = {m}^n -> oo"
                ),
            }),
            Some(TreeTag::NAdic(_)) => Ok(FertilityVerdict::ProvenNone {
                certificate: "the tree is a single ray: |X^n(w)| = 1 for every w".into(),
            }),
            Some(TreeTag::Menthe) => Ok(FertilityVerdict::ProvenNone {
                certificate: "every vertex dominates a stationary ray u_{i,j}, u_{i,j+1}, ..."
                    .into(),
            }),
            Some(TreeTag::Staircase) => Ok(FertilityVerdict::ProvenNone {
                certificate:
                    "every vertex dominates a stationary ray spawned by some rung r_k".into(),
            }),
            Some(TreeTag::Spine) => unreachable!("spine trees are unrooted"),
            None => {
                // Examine the root's strict descendants up to the horizon.
                let budget = 4096usize;
                let mut min_count = f64::INFINITY;
                for depth in 1..=horizon.min(6) {
                    let gen = self.children_n(&VertexAddr::root(), depth, budget)?;
                    for w in gen.vertices {
                        let c = self.count_unchecked(&w, horizon, budget);
                        let lower = c.lower();
                        if lower < min_count {
                            min_count = lower;
                        }
                    }
                }
                if !min_count.is_finite() {
                    min_count = 0.0;
                }
                Ok(FertilityVerdict::Inconclusive { horizon, min_descendant_count: min_count })
            }
        }
    }

    /// One-line structural description used in reports.
    pub fn describe(&self) -> String {
        match self.tag {
            Some(TreeTag::NAdic(n)) => format!("{n}-adic rooted tree"),
            Some(TreeTag::Menthe) => "star-of-rays rooted tree".into(),
            Some(TreeTag::Staircase) => "staircase rooted tree".into(),
            Some(TreeTag::Spine) => {
                let spine = self.spine.as_ref().expect("spine tree");
                let below = match self.arity_rule {
                    ArityRule::Constant(c) => c,
                    _ => unreachable!(),
                };
                format!(
                    "anchored-unrooted spine tree ({} explicit level(s), default arity {}, off-spine arity {})",
                    spine.levels.len(),
                    spine.default.arity,
                    below
                )
            }
            None => match self.kind {
                TreeKind::Rooted => "rooted tree (arity table)".into(),
                TreeKind::AnchoredUnrooted => "anchored-unrooted tree (arity table)".into(),
            },
        }
    }
}

fn validate_counts(
    default: ChildCount,
    overrides: &BTreeMap<VertexAddr, ChildCount>,
) -> Result<()> {
    if default == ChildCount::Finite(0) {
        return Err(Error::invalid("leafless trees need arity >= 1"));
    }
    for (addr, c) in overrides {
        if *c == ChildCount::Finite(0) {
            return Err(Error::malformed(addr, "leafless trees need arity >= 1"));
        }
    }
    Ok(())
}

enum StaircaseClass {
    Root,
    /// `r_k`, k >= 1.
    Rung(u32),
    Ray,
}

/// Classifies a rooted staircase address: the rung chain is
/// `r_1 = [1]`, `r_{k+1} = r_k ++ [2^k]`; any deviation starts a ray.
fn staircase_class(path: &[u32]) -> StaircaseClass {
    if path.is_empty() {
        return StaircaseClass::Root;
    }
    if path[0] != 1 {
        // The root has a single child, so indices other than 1 are invalid;
        // validation catches them before this matters.
        return StaircaseClass::Ray;
    }
    let mut k = 1u32;
    for &step in &path[1..] {
        if k < 31 && step == (1 << k) {
            k += 1;
        } else {
            return StaircaseClass::Ray;
        }
    }
    StaircaseClass::Rung(k)
}

fn staircase_count(path: &[u32], n: u32) -> f64 {
    match staircase_class(path) {
        StaircaseClass::Ray => 1.0,
        StaircaseClass::Root => {
            if n == 0 {
                1.0
            } else {
                staircase_rung_count(1, n - 1)
            }
        }
        StaircaseClass::Rung(k) => staircase_rung_count(k, n),
    }
}

/// `|X^n(r_k)|` for the staircase: each step down contributes `2^k - 1`
/// stationary vertices plus the next rung's subtree.
fn staircase_rung_count(k: u32, n: u32) -> f64 {
    let mut total = 0f64;
    let mut kk = k;
    let mut rem = n;
    loop {
        if rem == 0 {
            total += 1.0;
            break;
        }
        total += (2f64.powi(kk as i32)) - 1.0;
        kk += 1;
        rem -= 1;
    }
    total
}
