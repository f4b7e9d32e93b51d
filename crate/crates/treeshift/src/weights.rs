use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::addr::VertexAddr;
use crate::error::{Error, Result};
use crate::space::SpaceTag;
use crate::tree::{ChildCount, TreeSpec, TreeTag};

/// Above this many factors, path products switch to log-magnitude
/// accumulation with separately tracked phase.
const LOG_ACCUM_DEPTH: i64 = 1000;

/// Guard against silently truncating a divergent child sum.
const OVERFLOW_GUARD: f64 = 1e100;

/// Position of a dyadic index `i in {1,2}^n` in the lexicographic order,
/// via the recurrences `theta_1(1) = 1`, `theta_1(2) = 2`,
/// `theta_{n+1}(i,1) = 2 theta_n(i) - 1`, `theta_{n+1}(i,2) = 2 theta_n(i)`.
pub fn theta(path: &[u32]) -> Result<u64> {
    if path.is_empty() {
        return Err(Error::invalid("theta expects a nonempty dyadic index"));
    }
    let mut t: u64 = 1;
    for &step in path {
        let doubled = t
            .checked_mul(2)
            .ok_or_else(|| Error::invalid("theta overflows u64 at this depth"))?;
        t = match step {
            1 => doubled - 1,
            2 => doubled,
            other => {
                return Err(Error::invalid(format!(
                    "dyadic indices have entries in {{1,2}}, got {other}"
                )))
            }
        };
    }
    Ok(t)
}

/// A parametric scalar sequence `i -> z_i`, `i >= 1`. Parametric forms keep
/// weight families serializable and give exact tail sums where they exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarSeq {
    Constant { value: (f64, f64) },
    /// `i -> base^i`.
    Geometric { base: (f64, f64) },
    /// `i -> i^exponent`.
    Power { exponent: f64 },
}

impl ScalarSeq {
    pub fn constant(value: Complex64) -> Result<Self> {
        if value == Complex64::ZERO {
            return Err(Error::invalid("sequence values must be nonzero"));
        }
        Ok(ScalarSeq::Constant { value: (value.re, value.im) })
    }

    pub fn geometric(base: Complex64) -> Result<Self> {
        if base == Complex64::ZERO {
            return Err(Error::invalid("geometric base must be nonzero"));
        }
        Ok(ScalarSeq::Geometric { base: (base.re, base.im) })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !exponent.is_finite() {
            return Err(Error::invalid("power exponent must be finite"));
        }
        Ok(ScalarSeq::Power { exponent })
    }

    pub fn eval(&self, i: u64) -> Complex64 {
        debug_assert!(i >= 1);
        match *self {
            ScalarSeq::Constant { value } => Complex64::new(value.0, value.1),
            ScalarSeq::Geometric { base } => {
                Complex64::new(base.0, base.1).powf(i as f64)
            }
            ScalarSeq::Power { exponent } => Complex64::new((i as f64).powf(exponent), 0.0),
        }
    }

    /// Exact `sum_{i >= 1} |z_i|^q`; `None` when no closed form is known,
    /// `Some(inf)` when provably divergent.
    pub fn abs_power_tail(&self, q: f64) -> Option<f64> {
        match *self {
            ScalarSeq::Constant { .. } => Some(f64::INFINITY),
            ScalarSeq::Geometric { base } => {
                let r = Complex64::new(base.0, base.1).norm().powf(q);
                if r < 1.0 {
                    Some(r / (1.0 - r))
                } else {
                    Some(f64::INFINITY)
                }
            }
            ScalarSeq::Power { exponent } => {
                if q * exponent >= -1.0 {
                    Some(f64::INFINITY)
                } else {
                    None // a zeta value; no closed form here
                }
            }
        }
    }

    /// Exact `sup_{i >= 1} |z_i|`.
    pub fn abs_sup(&self) -> f64 {
        match *self {
            ScalarSeq::Constant { value } => Complex64::new(value.0, value.1).norm(),
            ScalarSeq::Geometric { base } => {
                let r = Complex64::new(base.0, base.1).norm();
                if r <= 1.0 {
                    r
                } else {
                    f64::INFINITY
                }
            }
            ScalarSeq::Power { exponent } => {
                if exponent <= 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// True when `|z_i| -> oo` is provable from the parametric form.
    pub fn abs_diverges(&self) -> bool {
        match *self {
            ScalarSeq::Constant { .. } => false,
            ScalarSeq::Geometric { base } => Complex64::new(base.0, base.1).norm() > 1.0,
            ScalarSeq::Power { exponent } => exponent > 0.0,
        }
    }

    /// Exact `sup_{j >= 1} |z_{j+1} / z_j|`.
    pub fn ratio_sup(&self) -> f64 {
        match *self {
            ScalarSeq::Constant { .. } => 1.0,
            ScalarSeq::Geometric { base } => Complex64::new(base.0, base.1).norm(),
            ScalarSeq::Power { exponent } => {
                if exponent >= 0.0 {
                    2f64.powf(exponent)
                } else {
                    1.0
                }
            }
        }
    }
}

/// Identifiers of the weight families built in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightTag {
    Rolewicz,
    DyadicCounterexample,
    Menthe,
    FertileNoAlgebra,
    BilateralRolewicz,
    Symmetric,
    Table,
}

impl fmt::Display for WeightTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WeightTag::Rolewicz => "rolewicz",
            WeightTag::DyadicCounterexample => "dyadic-counterexample",
            WeightTag::Menthe => "menthe",
            WeightTag::FertileNoAlgebra => "fertile-no-algebra",
            WeightTag::BilateralRolewicz => "bilateral-rolewicz",
            WeightTag::Symmetric => "symmetric",
            WeightTag::Table => "table",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WeightKind {
    Rolewicz {
        lambda: Complex64,
    },
    Dyadic {
        p: f64,
        m0: u32,
        alpha: f64,
    },
    Menthe {
        alpha: ScalarSeq,
        beta: ScalarSeq,
    },
    FertileNoAlgebra {
        p: f64,
        p_star: f64,
    },
    Bilateral {
        lambda: Complex64,
        n_lo: i64,
        n_hi: i64,
        middle: BTreeMap<i64, Complex64>,
    },
    SymmetricByGen {
        default: Complex64,
        overrides: BTreeMap<i64, Complex64>,
    },
    Table {
        default: Complex64,
        overrides: BTreeMap<VertexAddr, Complex64>,
    },
}

/// A family of nonzero weights, one per vertex, with closed-form tail sums
/// where the family structure provides them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFamily {
    kind: WeightKind,
}

impl WeightFamily {
    /// The Rolewicz family: the same scalar at every vertex.
    pub fn rolewicz(lambda: Complex64) -> Result<Self> {
        if lambda == Complex64::ZERO {
            return Err(Error::invalid("Rolewicz scalar must be nonzero"));
        }
        Ok(WeightFamily { kind: WeightKind::Rolewicz { lambda } })
    }

    /// The dyadic-tree family `lambda(r -> v_i) = theta_n(i)^{-alpha}`:
    /// hypercyclic and mixing on `l^p`, yet with no hypercyclic algebra.
    ///
    /// Defaults: `m0` the smallest integer above `p^2/(p-1)`, `alpha` the
    /// midpoint of the admissible interval `(p/m0, (p-1)/p)`.
    pub fn dyadic_counterexample(p: f64, m0: Option<u32>, alpha: Option<f64>) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid("dyadic counterexample requires p in (1, oo)"));
        }
        let cutoff = p * p / (p - 1.0);
        let m0 = match m0 {
            Some(m) => {
                if (m as f64) <= cutoff {
                    return Err(Error::invalid(format!(
                        "m0 must exceed p^2/(p-1) = {cutoff}, got {m}"
                    )));
                }
                m
            }
            None => cutoff.floor() as u32 + 1,
        };
        let lo = p / m0 as f64;
        let hi = (p - 1.0) / p;
        debug_assert!(lo < hi);
        let alpha = match alpha {
            Some(a) => {
                if !(a > lo && a < hi) {
                    return Err(Error::invalid(format!(
                        "alpha must lie in the open interval ({lo}, {hi}), got {a}"
                    )));
                }
                a
            }
            None => (lo + hi) / 2.0,
        };
        Ok(WeightFamily { kind: WeightKind::Dyadic { p, m0, alpha } })
    }

    /// Weights on the star-of-rays tree with `lambda(r -> u_{i,j}) = alpha_i beta_j`.
    pub fn menthe(alpha: ScalarSeq, beta: ScalarSeq) -> Result<Self> {
        // Parametric sequences are nonzero by construction.
        Ok(WeightFamily { kind: WeightKind::Menthe { alpha, beta } })
    }

    /// The mixing-without-algebra construction on a tree whose root is
    /// provably fertile: two unit-weight children everywhere, the rest of
    /// each child list sharing the leftover `p*`-mass.
    pub fn fertile_no_algebra(spec: &TreeSpec, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid("fertile-no-algebra requires p in (1, oo)"));
        }
        if !spec.is_rooted() {
            return Err(Error::unsupported(
                "fertile-no-algebra weights are built on rooted trees",
            ));
        }
        match spec.find_fertile(8)? {
            crate::tree::FertilityVerdict::Fertile { vertex, .. } if vertex.is_root() => {}
            other => {
                return Err(Error::unsupported(format!(
                    "the root is not provably fertile ({other}); the extension to inner fertile vertices is out of scope"
                )))
            }
        }
        let p_star = p / (p - 1.0);
        Ok(WeightFamily { kind: WeightKind::FertileNoAlgebra { p, p_star } })
    }

    /// The bilateral Rolewicz family on an unrooted tree with a free left
    /// end: `1/lambda` below generation `n_lo`, `lambda` above `n_hi`, and
    /// explicit nonzero values in between.
    pub fn bilateral_rolewicz(
        spec: &TreeSpec,
        lambda: Complex64,
        n_lo: i64,
        n_hi: i64,
        middle: BTreeMap<i64, Complex64>,
    ) -> Result<Self> {
        if lambda.norm() <= 1.0 {
            return Err(Error::invalid("bilateral Rolewicz requires |lambda| > 1"));
        }
        if spec.is_rooted() || !spec.has_free_left_end() {
            return Err(Error::invalid(
                "bilateral Rolewicz weights live on an unrooted tree with a free left end",
            ));
        }
        if n_hi < n_lo {
            return Err(Error::invalid("need n_lo <= n_hi"));
        }
        for g in n_lo..=n_hi {
            match middle.get(&g) {
                None => {
                    return Err(Error::invalid(format!(
                        "middle table is missing generation {g}"
                    )))
                }
                Some(z) if *z == Complex64::ZERO => {
                    return Err(Error::invalid(format!(
                        "middle weight at generation {g} must be nonzero"
                    )))
                }
                _ => {}
            }
        }
        Ok(WeightFamily { kind: WeightKind::Bilateral { lambda, n_lo, n_hi, middle } })
    }

    /// A symmetric family: one value per generation.
    pub fn symmetric_by_generation(
        default: Complex64,
        overrides: BTreeMap<i64, Complex64>,
    ) -> Result<Self> {
        if default == Complex64::ZERO || overrides.values().any(|z| *z == Complex64::ZERO) {
            return Err(Error::invalid("weights must be nonzero"));
        }
        Ok(WeightFamily { kind: WeightKind::SymmetricByGen { default, overrides } })
    }

    /// An explicit address table with a default value.
    pub fn table(default: Complex64, overrides: BTreeMap<VertexAddr, Complex64>) -> Result<Self> {
        if default == Complex64::ZERO || overrides.values().any(|z| *z == Complex64::ZERO) {
            return Err(Error::invalid("weights must be nonzero"));
        }
        Ok(WeightFamily { kind: WeightKind::Table { default, overrides } })
    }

    pub fn tag(&self) -> WeightTag {
        match self.kind {
            WeightKind::Rolewicz { .. } => WeightTag::Rolewicz,
            WeightKind::Dyadic { .. } => WeightTag::DyadicCounterexample,
            WeightKind::Menthe { .. } => WeightTag::Menthe,
            WeightKind::FertileNoAlgebra { .. } => WeightTag::FertileNoAlgebra,
            WeightKind::Bilateral { .. } => WeightTag::BilateralRolewicz,
            WeightKind::SymmetricByGen { .. } => WeightTag::Symmetric,
            WeightKind::Table { .. } => WeightTag::Table,
        }
    }

    /// True when `value(u) = value(v)` whenever `u` and `v` share a
    /// generation.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self.kind,
            WeightKind::Rolewicz { .. }
                | WeightKind::Bilateral { .. }
                | WeightKind::SymmetricByGen { .. }
        )
    }

    /// Parameters of the dyadic counterexample, when this is one.
    pub fn dyadic_params(&self) -> Option<(f64, u32, f64)> {
        match self.kind {
            WeightKind::Dyadic { p, m0, alpha } => Some((p, m0, alpha)),
            _ => None,
        }
    }

    pub fn menthe_seqs(&self) -> Option<(ScalarSeq, ScalarSeq)> {
        match self.kind {
            WeightKind::Menthe { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    pub fn rolewicz_lambda(&self) -> Option<Complex64> {
        match self.kind {
            WeightKind::Rolewicz { lambda } => Some(lambda),
            _ => None,
        }
    }

    /// `(p, p*)` of the fertile-no-algebra family, when this is one.
    pub fn fertile_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            WeightKind::FertileNoAlgebra { p, p_star } => Some((p, p_star)),
            _ => None,
        }
    }

    pub(crate) fn bilateral_params(
        &self,
    ) -> Option<(Complex64, i64, i64, &BTreeMap<i64, Complex64>)> {
        match &self.kind {
            WeightKind::Bilateral { lambda, n_lo, n_hi, middle } => {
                Some((*lambda, *n_lo, *n_hi, middle))
            }
            _ => None,
        }
    }

    pub(crate) fn symmetric_table(&self) -> Option<(Complex64, &BTreeMap<i64, Complex64>)> {
        match &self.kind {
            WeightKind::SymmetricByGen { default, overrides } => Some((*default, overrides)),
            _ => None,
        }
    }

    pub(crate) fn address_table(
        &self,
    ) -> Option<(Complex64, &BTreeMap<VertexAddr, Complex64>)> {
        match &self.kind {
            WeightKind::Table { default, overrides } => Some((*default, overrides)),
            _ => None,
        }
    }

    /// Modulus shared by all weights of generation `g`, for the families
    /// that are symmetric in modulus.
    pub fn gen_modulus(&self, g: i64) -> Option<f64> {
        match &self.kind {
            WeightKind::Rolewicz { lambda } => Some(lambda.norm()),
            WeightKind::Bilateral { lambda, n_lo, n_hi, middle } => Some(if g < *n_lo {
                1.0 / lambda.norm()
            } else if g > *n_hi {
                lambda.norm()
            } else {
                middle[&g].norm()
            }),
            WeightKind::SymmetricByGen { default, overrides } => {
                Some(overrides.get(&g).copied().unwrap_or(*default).norm())
            }
            _ => None,
        }
    }

    /// The weight at a canonical vertex.
    pub fn value(&self, spec: &TreeSpec, v: &VertexAddr) -> Result<Complex64> {
        spec.validate(v)?;
        match &self.kind {
            WeightKind::Rolewicz { lambda } => Ok(*lambda),
            WeightKind::Dyadic { alpha, .. } => {
                if v.is_root() {
                    return Ok(Complex64::ONE);
                }
                let t = theta(v.path())? as f64;
                let t_parent = if v.path().len() == 1 {
                    1.0
                } else {
                    theta(&v.path()[..v.path().len() - 1])? as f64
                };
                Ok(Complex64::new((t_parent / t).powf(*alpha), 0.0))
            }
            WeightKind::Menthe { alpha, beta } => {
                if v.is_root() {
                    return Ok(Complex64::ONE);
                }
                let path = v.path();
                if path.len() == 1 {
                    return Ok(alpha.eval(path[0] as u64) * beta.eval(1));
                }
                if path[1..].iter().any(|&s| s != 1) {
                    return Err(Error::malformed(
                        v,
                        "not a vertex of the star-of-rays tree",
                    ));
                }
                let j = path.len() as u64;
                Ok(beta.eval(j) / beta.eval(j - 1))
            }
            WeightKind::FertileNoAlgebra { p_star, .. } => {
                if v.is_root() {
                    return Ok(Complex64::ONE);
                }
                let l = *v.path().last().expect("nonempty path");
                let parent = v.parent_unchecked();
                let arity = spec.arity(&parent)?;
                let w = match arity {
                    ChildCount::Finite(1) | ChildCount::Finite(2) => 1.0,
                    ChildCount::Finite(m) => {
                        if l <= 2 {
                            1.0
                        } else {
                            (1.0 / (m as f64 - 2.0)).powf(1.0 / p_star)
                        }
                    }
                    ChildCount::CountablyInfinite => {
                        if l <= 2 {
                            1.0
                        } else {
                            0.5f64.powf((l as f64 - 2.0) / p_star)
                        }
                    }
                };
                Ok(Complex64::new(w, 0.0))
            }
            WeightKind::Bilateral { lambda, n_lo, n_hi, middle } => {
                let g = v.generation();
                Ok(if g < *n_lo {
                    Complex64::ONE / lambda
                } else if g > *n_hi {
                    *lambda
                } else {
                    middle[&g]
                })
            }
            WeightKind::SymmetricByGen { default, overrides } => {
                Ok(overrides.get(&v.generation()).copied().unwrap_or(*default))
            }
            WeightKind::Table { default, overrides } => {
                Ok(overrides.get(v).copied().unwrap_or(*default))
            }
        }
    }

    /// Exact `sum_{u in X(v)} |lambda_u|^q` for vertices with infinitely
    /// many children; `None` when no closed form is available,
    /// `Some(inf)` when the sum provably diverges.
    pub fn child_abs_power_tail(&self, spec: &TreeSpec, v: &VertexAddr, q: f64) -> Option<f64> {
        if spec.arity(v).ok()? != ChildCount::CountablyInfinite {
            return None;
        }
        match &self.kind {
            WeightKind::Rolewicz { .. } => Some(f64::INFINITY),
            WeightKind::Dyadic { .. } => None, // dyadic tree has no infinite vertex
            WeightKind::Menthe { alpha, beta } => {
                if v.is_root() {
                    let tail = alpha.abs_power_tail(q)?;
                    Some(beta.eval(1).norm().powf(q) * tail)
                } else {
                    None
                }
            }
            WeightKind::FertileNoAlgebra { p_star, .. } => {
                // 1 + 1 + sum_{l >= 3} 2^{-(l-2) q / p*}
                let x = 0.5f64.powf(q / p_star);
                Some(2.0 + x / (1.0 - x))
            }
            WeightKind::Bilateral { .. } | WeightKind::SymmetricByGen { .. } => {
                // Infinitely many children of one shared modulus > 0.
                Some(f64::INFINITY)
            }
            WeightKind::Table { .. } => {
                // All but finitely many children carry the nonzero default.
                Some(f64::INFINITY)
            }
        }
    }

    /// `lambda(v -> u)`: the product of the weights along the descent from
    /// `v` (exclusive) to `u` (inclusive); `1` when `u = v`.
    pub fn path_product(
        &self,
        spec: &TreeSpec,
        v: &VertexAddr,
        u: &VertexAddr,
    ) -> Result<Complex64> {
        spec.validate(v)?;
        spec.validate(u)?;
        let n = u.generation() - v.generation();
        let ancestor_ok = n >= 0
            && match spec.parent(u, n.min(u32::MAX as i64) as u32)? {
                Some(p) => p == *v,
                None => false,
            };
        if !ancestor_ok {
            return Err(Error::NotAnAncestor { v: v.to_string(), u: u.to_string() });
        }
        if n <= LOG_ACCUM_DEPTH {
            // Multiply from v downward, matching the order of the
            // enumeration walks, so ratios of identical paths cancel
            // bit for bit.
            let mut factors = Vec::with_capacity(n as usize);
            let mut cur = u.clone();
            for _ in 0..n {
                factors.push(self.value(spec, &cur)?);
                cur = cur.parent_unchecked();
            }
            let mut prod = Complex64::ONE;
            for z in factors.iter().rev() {
                prod *= z;
            }
            Ok(prod)
        } else {
            let mut log_abs = 0f64;
            let mut arg = 0f64;
            let mut cur = u.clone();
            for _ in 0..n {
                let z = self.value(spec, &cur)?;
                log_abs += z.norm().ln();
                arg += z.arg();
                cur = cur.parent_unchecked();
            }
            Ok(Complex64::from_polar(log_abs.exp(), arg))
        }
    }

    /// One-line description used in reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            WeightKind::Rolewicz { lambda } => format!("rolewicz(lambda = {lambda})"),
            WeightKind::Dyadic { p, m0, alpha } => {
                format!("dyadic-counterexample(p = {p}, m0 = {m0}, alpha = {alpha})")
            }
            WeightKind::Menthe { alpha, beta } => {
                format!("menthe(alpha = {alpha:?}, beta = {beta:?})")
            }
            WeightKind::FertileNoAlgebra { p, .. } => format!("fertile-no-algebra(p = {p})"),
            WeightKind::Bilateral { lambda, n_lo, n_hi, .. } => {
                format!("bilateral-rolewicz(lambda = {lambda}, range = [{n_lo}, {n_hi}])")
            }
            WeightKind::SymmetricByGen { default, overrides } => {
                format!("symmetric(default = {default}, {} override(s))", overrides.len())
            }
            WeightKind::Table { default, overrides } => {
                format!("table(default = {default}, {} override(s))", overrides.len())
            }
        }
    }
}

/// Operator-norm answer: exact closed form, a budgeted lower bound, or a
/// detected divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormBound {
    Exact(f64),
    LowerBound(f64),
    Unbounded,
}

impl NormBound {
    pub fn value(&self) -> f64 {
        match self {
            NormBound::Exact(v) | NormBound::LowerBound(v) => *v,
            NormBound::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NormBound::Exact(_) | NormBound::Unbounded)
    }
}

impl fmt::Display for NormBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormBound::Exact(v) => write!(f, "{v} (exact)"),
            NormBound::LowerBound(v) => write!(f, ">= {v} (budgeted lower bound)"),
            NormBound::Unbounded => write!(f, "unbounded (divergent child sum)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub space: SpaceTag,
    pub bound: NormBound,
}

/// The boundedness quantity for `B_lambda` on the given space:
/// `sup_v |lambda_v|` on `l^1`,
/// `sup_v (sum_{u in X(v)} |lambda_u|^{p*})^{1/p*}` on `l^p`,
/// `sup_v sum_{u in X(v)} |lambda_u|` on `c_0`.
pub fn operator_norm(
    w: &WeightFamily,
    spec: &TreeSpec,
    space: SpaceTag,
    budget: usize,
) -> Result<NormReport> {
    if budget == 0 {
        return Err(Error::invalid("budget must be positive"));
    }
    if let Some(bound) = closed_form_norm(w, spec, space) {
        return Ok(NormReport { space, bound });
    }
    let bound = budgeted_norm(w, spec, space, budget)?;
    Ok(NormReport { space, bound })
}

/// Largest arity in the tree, when the family makes it knowable.
fn sup_arity(spec: &TreeSpec) -> Option<ChildCount> {
    match spec.tag()? {
        TreeTag::NAdic(n) => Some(ChildCount::Finite(n)),
        TreeTag::Menthe | TreeTag::Staircase => Some(ChildCount::CountablyInfinite),
        TreeTag::Spine => {
            let spine = spec.spine().expect("spine tree");
            let mut max: u32 = match spec
                .arity(&VertexAddr::anchor())
                .expect("anchor is valid")
            {
                ChildCount::Finite(m) => m,
                ChildCount::CountablyInfinite => return Some(ChildCount::CountablyInfinite),
            };
            for level in spine.levels.iter().chain([&spine.default]) {
                match level.arity {
                    ChildCount::Finite(m) => max = max.max(m),
                    ChildCount::CountablyInfinite => {
                        return Some(ChildCount::CountablyInfinite)
                    }
                }
            }
            Some(ChildCount::Finite(max))
        }
    }
}

fn closed_form_norm(w: &WeightFamily, spec: &TreeSpec, space: SpaceTag) -> Option<NormBound> {
    match (w.tag(), spec.tag()) {
        (WeightTag::Rolewicz, Some(_)) => {
            let lam = w.rolewicz_lambda().expect("rolewicz").norm();
            match space {
                SpaceTag::L1 => Some(NormBound::Exact(lam)),
                SpaceTag::Lp(_) | SpaceTag::C0 => {
                    let q = space.sum_exponent().expect("lp or c0");
                    match sup_arity(spec)? {
                        ChildCount::Finite(a) => {
                            Some(NormBound::Exact((a as f64 * lam.powf(q)).powf(1.0 / q)))
                        }
                        ChildCount::CountablyInfinite => Some(NormBound::Unbounded),
                    }
                }
            }
        }
        (WeightTag::DyadicCounterexample, Some(TreeTag::NAdic(2))) => {
            let (_, _, alpha) = w.dyadic_params().expect("dyadic");
            match space {
                // The leftmost branch carries weight exactly 1, and all
                // weights are at most 1.
                SpaceTag::L1 => Some(NormBound::Exact(1.0)),
                SpaceTag::Lp(_) | SpaceTag::C0 => {
                    let q = space.sum_exponent().expect("lp or c0");
                    // Child sums are maximal at the root: 1 + (1/2)^(alpha q).
                    let sum = 1.0 + 0.5f64.powf(alpha * q);
                    Some(NormBound::Exact(match space {
                        SpaceTag::Lp(_) => sum.powf(1.0 / q),
                        _ => sum,
                    }))
                }
            }
        }
        (WeightTag::Menthe, Some(TreeTag::Menthe)) => {
            let (alpha, beta) = w.menthe_seqs().expect("menthe");
            let ray_sup = beta.ratio_sup();
            match space {
                SpaceTag::L1 => {
                    let a_sup = alpha.abs_sup();
                    if !a_sup.is_finite() {
                        return Some(NormBound::Unbounded);
                    }
                    Some(NormBound::Exact(
                        (a_sup * beta.eval(1).norm()).max(ray_sup),
                    ))
                }
                SpaceTag::Lp(_) | SpaceTag::C0 => {
                    let q = space.sum_exponent().expect("lp or c0");
                    let tail = alpha.abs_power_tail(q)?;
                    if !tail.is_finite() {
                        return Some(NormBound::Unbounded);
                    }
                    let root_sum = beta.eval(1).norm().powf(q) * tail;
                    let root_value = match space {
                        SpaceTag::Lp(_) => root_sum.powf(1.0 / q),
                        _ => root_sum,
                    };
                    Some(NormBound::Exact(root_value.max(ray_sup)))
                }
            }
        }
        (WeightTag::FertileNoAlgebra, Some(TreeTag::NAdic(n))) => {
            let p_star = match w.kind {
                WeightKind::FertileNoAlgebra { p_star, .. } => p_star,
                _ => unreachable!(),
            };
            match space {
                SpaceTag::L1 => Some(NormBound::Exact(1.0)),
                SpaceTag::Lp(_) | SpaceTag::C0 => {
                    let q = space.sum_exponent().expect("lp or c0");
                    let sum = match n {
                        1 => 1.0,
                        2 => 2.0,
                        m => 2.0 + (m as f64 - 2.0).powf(1.0 - q / p_star),
                    };
                    Some(NormBound::Exact(match space {
                        SpaceTag::Lp(_) => sum.powf(1.0 / q),
                        _ => sum,
                    }))
                }
            }
        }
        (WeightTag::BilateralRolewicz, Some(TreeTag::Spine)) => {
            let (_, n_lo, n_hi, _) = w.bilateral_params().expect("bilateral");
            Some(gen_symmetric_norm_on_spine(w, spec, space, n_lo, n_hi))
        }
        (WeightTag::Symmetric, Some(tree_tag)) => {
            let (_, overrides) = w.symmetric_table().expect("symmetric");
            let band_lo = overrides.keys().next().copied().unwrap_or(0);
            let band_hi = overrides.keys().next_back().copied().unwrap_or(0);
            match tree_tag {
                TreeTag::Spine => {
                    Some(gen_symmetric_norm_on_spine(w, spec, space, band_lo, band_hi))
                }
                TreeTag::NAdic(n) => {
                    let sup_m = (1..=band_hi.max(1) + 1)
                        .map(|g| w.gen_modulus(g).expect("symmetric"))
                        .fold(0.0, f64::max);
                    Some(match space {
                        SpaceTag::L1 => NormBound::Exact(sup_m),
                        SpaceTag::Lp(_) | SpaceTag::C0 => {
                            let q = space.sum_exponent().expect("lp or c0");
                            let sum = n as f64 * sup_m.powf(q);
                            NormBound::Exact(match space {
                                SpaceTag::Lp(_) => sum.powf(1.0 / q),
                                _ => sum,
                            })
                        }
                    })
                }
                TreeTag::Menthe | TreeTag::Staircase => Some(match space {
                    // Infinitely many (menthe root) or unboundedly many
                    // (staircase rungs) children of one positive modulus.
                    SpaceTag::Lp(_) | SpaceTag::C0 => NormBound::Unbounded,
                    SpaceTag::L1 => NormBound::Exact(
                        (1..=band_hi.max(1) + 1)
                            .map(|g| w.gen_modulus(g).expect("symmetric"))
                            .fold(0.0, f64::max),
                    ),
                }),
            }
        }
        _ => None,
    }
}

/// Exact norm of a generation-symmetric family on a spine tree: a finite
/// max over the structurally distinct (arity, child-generation) pairs.
/// `[band_lo, band_hi]` brackets the generations with non-default weights.
fn gen_symmetric_norm_on_spine(
    w: &WeightFamily,
    spec: &TreeSpec,
    space: SpaceTag,
    band_lo: i64,
    band_hi: i64,
) -> NormBound {
    let spine = spec.spine().expect("spine tree");
    let (n_lo, n_hi) = (band_lo, band_hi);
    let below = match spec.arity(&VertexAddr::anchor()).expect("anchor") {
        ChildCount::Finite(m) => m as f64,
        ChildCount::CountablyInfinite => return NormBound::Unbounded,
    };
    let table_len = spine.levels.len() as i64;

    // Generations that host an off-spine (constant-arity) vertex: the
    // anchor's subtree covers g >= 0, and each branching level k covers
    // g >= 1 - k.
    let mut g_off_min: i64 = 0;
    for (idx, level) in spine.levels.iter().enumerate() {
        let k = idx as i64 + 1;
        match level.arity {
            ChildCount::Finite(m) if m >= 2 => g_off_min = g_off_min.min(1 - k),
            ChildCount::CountablyInfinite => return NormBound::Unbounded,
            _ => {}
        }
    }
    if spine.default.arity.is_infinite() {
        return NormBound::Unbounded;
    }

    let per_vertex = |arity: f64, child_gen: i64| -> f64 {
        let m = w.gen_modulus(child_gen).expect("bilateral is symmetric");
        match space {
            SpaceTag::L1 => m,
            SpaceTag::Lp(_) | SpaceTag::C0 => {
                let q = space.sum_exponent().expect("lp or c0");
                let sum = arity * m.powf(q);
                match space {
                    SpaceTag::Lp(_) => sum.powf(1.0 / q),
                    _ => sum,
                }
            }
        }
    };

    let mut best = 0f64;
    // On-spine vertices: levels of the table, one representative of the
    // default regime, and one deep in the constant-weight regime.
    let k_max = (table_len + 1).max(2 - n_lo);
    for k in 1..=k_max {
        let level = spine.level(k as u32);
        let arity = match level.arity {
            ChildCount::Finite(m) => m as f64,
            ChildCount::CountablyInfinite => return NormBound::Unbounded,
        };
        best = best.max(per_vertex(arity, 1 - k));
    }
    // Off-spine vertices of generation g have children in generation g+1;
    // sweep the exceptional band plus one representative on each side.
    let g_hi = n_hi + 1;
    let g_lo = g_off_min.min(n_lo - 1);
    for g in g_lo..=g_hi {
        if g < g_off_min {
            continue;
        }
        best = best.max(per_vertex(below, g + 1));
    }
    best = best.max(per_vertex(below, g_hi + 1));
    NormBound::Exact(best)
}

/// Budgeted lower bound: sweep vertices breadth-first by generation and
/// take the best per-vertex quantity seen.
fn budgeted_norm(
    w: &WeightFamily,
    spec: &TreeSpec,
    space: SpaceTag,
    budget: usize,
) -> Result<NormBound> {
    let mut probes: Vec<VertexAddr> = Vec::new();
    let gens: Vec<i64> = if spec.is_rooted() {
        (0..=12).collect()
    } else {
        let mut g = vec![0i64];
        for k in 1..=6i64 {
            g.push(-k);
            g.push(k);
        }
        g
    };
    // Spread the budget across generations so infinite early generations
    // cannot starve the later ones.
    let per_gen = (budget / gens.len()).max(1);
    for g in gens {
        let e = spec.generation(g, per_gen)?;
        probes.extend(e.vertices);
    }

    let mut best = 0f64;
    match space {
        SpaceTag::L1 => {
            for v in &probes {
                if spec.is_rooted() && v.is_root() {
                    continue; // the root weight never enters the operator
                }
                best = best.max(w.value(spec, v)?.norm());
            }
        }
        SpaceTag::Lp(_) | SpaceTag::C0 => {
            let q = space.sum_exponent().expect("lp or c0");
            for v in &probes {
                let sum = match spec.arity(v)? {
                    ChildCount::Finite(_) | ChildCount::CountablyInfinite
                        if w.child_abs_power_tail(spec, v, q).is_some() =>
                    {
                        w.child_abs_power_tail(spec, v, q).expect("checked")
                    }
                    _ => {
                        let kids = spec.children(v, budget)?;
                        let mut s = 0f64;
                        for u in &kids.vertices {
                            s += w.value(spec, u)?.norm().powf(q);
                            if s > OVERFLOW_GUARD {
                                return Ok(NormBound::Unbounded);
                            }
                        }
                        s
                    }
                };
                if !sum.is_finite() {
                    return Ok(NormBound::Unbounded);
                }
                let value = match space {
                    SpaceTag::Lp(_) => sum.powf(1.0 / q),
                    _ => sum,
                };
                best = best.max(value);
            }
        }
    }
    Ok(NormBound::LowerBound(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::SpineLevel;

    fn addr(s: &str) -> VertexAddr {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_small_cases() {
        assert_eq!(theta(&[1]).unwrap(), 1);
        assert_eq!(theta(&[2]).unwrap(), 2);
        assert_eq!(theta(&[1, 2]).unwrap(), 2);
        assert_eq!(theta(&[2, 2]).unwrap(), 4);
        assert!(theta(&[3]).is_err());
        assert!(theta(&[]).is_err());
    }

    #[test]
    fn theta_matches_lexicographic_enumeration() {
        // Oracle: generate {1,2}^n in lexicographic order and compare positions.
        for n in 1..=12u32 {
            let mut idx: Vec<Vec<u32>> = vec![vec![]];
            for _ in 0..n {
                let mut next = Vec::with_capacity(idx.len() * 2);
                for prefix in idx {
                    for step in [1u32, 2] {
                        let mut p = prefix.clone();
                        p.push(step);
                        next.push(p);
                    }
                }
                idx = next;
            }
            idx.sort();
            for (pos, i) in idx.iter().enumerate() {
                assert_eq!(theta(i).unwrap(), pos as u64 + 1, "n = {n}, i = {i:?}");
            }
        }
    }

    #[test]
    fn theta_recurrence_for_second_child() {
        let mut path = vec![2u32];
        for _ in 0..10 {
            let t = theta(&path).unwrap();
            let mut extended = path.clone();
            extended.push(2);
            assert_eq!(theta(&extended).unwrap(), 2 * t);
            path.push(1);
        }
    }

    #[test]
    fn rolewicz_values_and_path_products() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        assert_eq!(w.value(&spec, &addr("r.1.2")).unwrap(), c(2.0, 0.0));
        let prod = w
            .path_product(&spec, &VertexAddr::root(), &addr("r.1.2.1"))
            .unwrap();
        assert_eq!(prod, c(8.0, 0.0));
        // i^4 = 1.
        let wi = WeightFamily::rolewicz(c(0.0, 1.0)).unwrap();
        let prod = wi
            .path_product(&spec, &VertexAddr::root(), &addr("r.1.1.1.1"))
            .unwrap();
        assert!((prod - c(1.0, 0.0)).norm() < 1e-15);
        assert!(WeightFamily::rolewicz(Complex64::ZERO).is_err());
    }

    #[test]
    fn constant_unit_weights_have_unit_products() {
        let spec = TreeSpec::nadic(3).unwrap();
        let w = WeightFamily::rolewicz(Complex64::ONE).unwrap();
        for (v, u) in [("r", "r.2.3.1"), ("r.1", "r.1.1"), ("r.3.3", "r.3.3")] {
            assert_eq!(
                w.path_product(&spec, &addr(v), &addr(u)).unwrap(),
                Complex64::ONE
            );
        }
    }

    #[test]
    fn path_product_of_vertex_with_itself_is_one() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(3.0, 1.0)).unwrap();
        let v = addr("r.2.1");
        assert_eq!(w.path_product(&spec, &v, &v).unwrap(), Complex64::ONE);
    }

    #[test]
    fn path_product_rejects_non_ancestors() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        assert!(matches!(
            w.path_product(&spec, &addr("r.1"), &addr("r.2.1")),
            Err(Error::NotAnAncestor { .. })
        ));
        assert!(w.path_product(&spec, &addr("r.1.1"), &addr("r.1")).is_err());
    }

    #[test]
    fn cocycle_law_on_one_ancestry_line() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let v = VertexAddr::root();
        let mid = addr("r.2.1");
        let u = addr("r.2.1.2.2");
        let full = w.path_product(&spec, &v, &u).unwrap();
        let left = w.path_product(&spec, &v, &mid).unwrap();
        let right = w.path_product(&spec, &mid, &u).unwrap();
        assert!((full - left * right).norm() <= 1e-12 * full.norm());
    }

    #[test]
    fn dyadic_counterexample_defaults_and_bounds() {
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let (p, m0, alpha) = w.dyadic_params().unwrap();
        assert_eq!(p, 2.0);
        assert_eq!(m0, 5);
        assert!((alpha - 0.45).abs() < 1e-15);
        // Explicit m0 = 5 gives the same default midpoint.
        let w5 = WeightFamily::dyadic_counterexample(2.0, Some(5), None).unwrap();
        assert_eq!(w5.dyadic_params().unwrap().2, 0.45);
        // m0 = 3 violates 2/3 < 1/2.
        assert!(WeightFamily::dyadic_counterexample(2.0, Some(3), None).is_err());
        // alpha outside the interval.
        assert!(WeightFamily::dyadic_counterexample(2.0, Some(5), Some(0.6)).is_err());
    }

    #[test]
    fn dyadic_root_products_follow_theta() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let alpha = w.dyadic_params().unwrap().2;
        // lambda(r -> v_1) = 1 from the empty product and theta_1(1) = 1.
        let v1 = addr("r.1");
        assert!((w.value(&spec, &v1).unwrap() - Complex64::ONE).norm() < 1e-15);
        for path in [vec![1, 2], vec![2, 2], vec![2, 1, 1], vec![1, 2, 1, 2]] {
            let v = VertexAddr::rooted(path.clone());
            let t = theta(&path).unwrap() as f64;
            let prod = w.path_product(&spec, &VertexAddr::root(), &v).unwrap();
            let expected = t.powf(-alpha);
            assert!(
                (prod.re - expected).abs() <= 1e-12 * expected && prod.im == 0.0,
                "path {path:?}"
            );
        }
    }

    #[test]
    fn menthe_values_telescope() {
        let spec = TreeSpec::menthe();
        let alpha = ScalarSeq::geometric(c(0.5, 0.0)).unwrap();
        let beta = ScalarSeq::power(1.0).unwrap();
        let w = WeightFamily::menthe(alpha, beta).unwrap();
        // lambda_{u_{3,1}} = 2^{-3} * 1.
        assert!((w.value(&spec, &addr("r.3")).unwrap() - c(0.125, 0.0)).norm() < 1e-15);
        // lambda(r -> u_{i,j}) = 2^{-i} j.
        for (i, j) in [(1u32, 1usize), (2, 3), (3, 4), (5, 2)] {
            let mut path = vec![i];
            path.extend(std::iter::repeat_n(1, j - 1));
            let u = VertexAddr::rooted(path);
            let prod = w.path_product(&spec, &VertexAddr::root(), &u).unwrap();
            let expected = 0.5f64.powi(i as i32) * j as f64;
            assert!((prod.re - expected).abs() < 1e-12 * expected, "i={i} j={j}");
        }
        // Constant beta makes every ray weight 1.
        let w1 = WeightFamily::menthe(alpha, ScalarSeq::constant(c(1.0, 0.0)).unwrap()).unwrap();
        assert_eq!(w1.value(&spec, &addr("r.7.1.1")).unwrap(), Complex64::ONE);
    }

    #[test]
    fn fertile_weights_follow_the_child_list_rule() {
        // Dyadic tree: only the two unit children exist.
        let dy = TreeSpec::dyadic();
        let w = WeightFamily::fertile_no_algebra(&dy, 2.0).unwrap();
        for v in ["r.1", "r.2", "r.1.2", "r.2.2.1"] {
            assert_eq!(w.value(&dy, &addr(v)).unwrap(), Complex64::ONE);
        }
        // 4-adic tree with p = 2 (p* = 2): weights (1, 1, (1/2)^(1/2), (1/2)^(1/2)).
        let t4 = TreeSpec::nadic(4).unwrap();
        let w4 = WeightFamily::fertile_no_algebra(&t4, 2.0).unwrap();
        let half_sqrt = 0.5f64.sqrt();
        let mut sum_sq = 0f64;
        let mut sup = 0f64;
        for l in 1..=4u32 {
            let v = VertexAddr::rooted(vec![l]);
            let val = w4.value(&t4, &v).unwrap().re;
            let expected = if l <= 2 { 1.0 } else { half_sqrt };
            assert!((val - expected).abs() < 1e-15, "child {l}");
            sum_sq += val * val;
            sup = sup.max(val);
        }
        assert!((sum_sq - 3.0).abs() < 1e-12);
        assert_eq!(sup, 1.0);
    }

    #[test]
    fn fertile_weights_need_a_provably_fertile_root() {
        assert!(WeightFamily::fertile_no_algebra(&TreeSpec::staircase(), 2.0).is_err());
        assert!(WeightFamily::fertile_no_algebra(&TreeSpec::menthe(), 2.0).is_err());
    }

    fn free_spine(below: u32) -> TreeSpec {
        TreeSpec::spine_tree(vec![], SpineLevel::singleton(), ChildCount::Finite(below)).unwrap()
    }

    #[test]
    fn bilateral_left_products_decay() {
        let spec = free_spine(2);
        let mut middle = BTreeMap::new();
        middle.insert(0, Complex64::ONE);
        let w = WeightFamily::bilateral_rolewicz(&spec, c(2.0, 0.0), 0, 0, middle).unwrap();
        // v in a strictly negative generation: the product of n factors 1/2.
        let v = VertexAddr::new(1, vec![]); // Gen_{-1}
        for n in 1..=10u32 {
            let par = spec.parent(&v, n).unwrap().unwrap();
            let prod = w.path_product(&spec, &par, &v).unwrap();
            assert!((prod.norm() - 0.5f64.powi(n as i32)).abs() < 1e-15, "n = {n}");
        }
        // Below the anchor every weight is 2.
        let u = addr("r.1.2.1");
        let prod = w.path_product(&spec, &VertexAddr::anchor(), &u).unwrap();
        assert_eq!(prod, c(8.0, 0.0));
    }

    #[test]
    fn bilateral_validation() {
        let spec = free_spine(2);
        let mut middle = BTreeMap::new();
        middle.insert(0, Complex64::ONE);
        assert!(WeightFamily::bilateral_rolewicz(&spec, c(1.0, 0.0), 0, 0, middle.clone())
            .is_err());
        assert!(
            WeightFamily::bilateral_rolewicz(&spec, c(2.0, 0.0), 0, 1, middle.clone()).is_err(),
            "missing middle entry"
        );
        let rooted = TreeSpec::dyadic();
        assert!(WeightFamily::bilateral_rolewicz(&rooted, c(2.0, 0.0), 0, 0, middle).is_err());
    }

    #[test]
    fn symmetric_families_are_constant_per_generation() {
        let spec = free_spine(3);
        let mut over = BTreeMap::new();
        over.insert(1i64, c(0.0, 2.0));
        let w = WeightFamily::symmetric_by_generation(c(1.0, 0.0), over).unwrap();
        assert!(w.is_symmetric());
        let g1 = spec.generation(1, 100).unwrap();
        let values: Vec<Complex64> = g1
            .vertices
            .iter()
            .map(|v| w.value(&spec, v).unwrap())
            .collect();
        assert!(values.windows(2).all(|p| p[0] == p[1]));
        assert_eq!(values[0], c(0.0, 2.0));
    }

    #[test]
    fn operator_norm_rolewicz_on_dyadic_l2() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        let r = operator_norm(&w, &spec, SpaceTag::Lp(2.0), 1000).unwrap();
        match r.bound {
            NormBound::Exact(v) => assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-14),
            other => panic!("expected exact, got {other:?}"),
        }
    }

    #[test]
    fn operator_norm_dyadic_counterexample_matches_paper_bound() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let (p, _, alpha) = w.dyadic_params().unwrap();
        let p_star = p / (p - 1.0);
        let r = operator_norm(&w, &spec, SpaceTag::Lp(p), 1000).unwrap();
        let bound = (1.0 + 0.5f64.powf(alpha * p_star)).powf(1.0 / p_star);
        match r.bound {
            NormBound::Exact(v) => {
                assert!(v <= bound + 1e-15);
                assert!((v - bound).abs() < 1e-14);
            }
            other => panic!("expected exact, got {other:?}"),
        }
    }

    #[test]
    fn operator_norm_fertile_child_sums_are_three() {
        let t4 = TreeSpec::nadic(4).unwrap();
        let w = WeightFamily::fertile_no_algebra(&t4, 2.0).unwrap();
        let r = operator_norm(&w, &t4, SpaceTag::Lp(2.0), 1000).unwrap();
        match r.bound {
            NormBound::Exact(v) => assert!((v - 3f64.sqrt()).abs() < 1e-14),
            other => panic!("expected exact, got {other:?}"),
        }
    }

    #[test]
    fn operator_norm_rolewicz_on_menthe_diverges() {
        let spec = TreeSpec::menthe();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        assert_eq!(
            operator_norm(&w, &spec, SpaceTag::Lp(2.0), 1000).unwrap().bound,
            NormBound::Unbounded
        );
        assert_eq!(
            operator_norm(&w, &spec, SpaceTag::L1, 1000).unwrap().bound,
            NormBound::Exact(2.0)
        );
    }

    #[test]
    fn divergent_tails_give_an_unbounded_verdict_not_an_error() {
        // Menthe weights whose root tail sum provably diverges.
        let spec = TreeSpec::menthe();
        let w = WeightFamily::menthe(
            ScalarSeq::power(-0.1).unwrap(),
            ScalarSeq::constant(c(1.0, 0.0)).unwrap(),
        )
        .unwrap();
        let r = operator_norm(&w, &spec, SpaceTag::Lp(2.0), 1000).unwrap();
        assert_eq!(r.bound, NormBound::Unbounded);
    }

    #[test]
    fn table_families_report_budgeted_lower_bounds() {
        let spec = TreeSpec::dyadic();
        let mut overrides = BTreeMap::new();
        overrides.insert(addr("r.2.2"), c(5.0, 0.0));
        let w = WeightFamily::table(c(1.0, 0.0), overrides).unwrap();
        let r = operator_norm(&w, &spec, SpaceTag::Lp(2.0), 1000).unwrap();
        match r.bound {
            NormBound::LowerBound(v) => {
                // The probed sweep sees the override: child sum at r.2 is
                // 1 + 25.
                assert!((v - 26f64.sqrt()).abs() < 1e-12);
                assert!(!r.bound.is_exact());
            }
            other => panic!("expected a lower bound, got {other:?}"),
        }
    }

    #[test]
    fn closed_forms_agree_with_budgeted_partials() {
        // Every builtin family: the exact value must match the budgeted
        // lower bound at budget 10^4 to relative 1e-9.
        let budget = 10_000usize;
        let mut cases: Vec<(WeightFamily, TreeSpec)> = vec![
            (
                WeightFamily::rolewicz(c(2.0, 0.0)).unwrap(),
                TreeSpec::dyadic(),
            ),
            (
                WeightFamily::dyadic_counterexample(2.0, None, None).unwrap(),
                TreeSpec::dyadic(),
            ),
            (
                WeightFamily::menthe(
                    ScalarSeq::geometric(c(0.5, 0.0)).unwrap(),
                    ScalarSeq::power(1.0).unwrap(),
                )
                .unwrap(),
                TreeSpec::menthe(),
            ),
            (
                WeightFamily::fertile_no_algebra(&TreeSpec::nadic(4).unwrap(), 2.0).unwrap(),
                TreeSpec::nadic(4).unwrap(),
            ),
        ];
        let spine = free_spine(2);
        let mut middle = BTreeMap::new();
        middle.insert(0, Complex64::ONE);
        cases.push((
            WeightFamily::bilateral_rolewicz(&spine, c(2.0, 0.0), 0, 0, middle).unwrap(),
            spine.clone(),
        ));
        let mut sym_overrides = BTreeMap::new();
        sym_overrides.insert(-1i64, c(0.5, 0.5));
        sym_overrides.insert(2i64, c(1.25, 0.0));
        let sym = WeightFamily::symmetric_by_generation(c(1.0, 0.0), sym_overrides).unwrap();
        cases.push((sym.clone(), spine.clone()));
        cases.push((sym, TreeSpec::nadic(3).unwrap()));
        for (w, spec) in &cases {
            for space in [SpaceTag::L1, SpaceTag::Lp(2.0), SpaceTag::C0] {
                let closed = closed_form_norm(w, spec, space)
                    .unwrap_or_else(|| panic!("no closed form for {}", w.describe()));
                let partial = budgeted_norm(w, spec, space, budget).unwrap();
                match (closed, partial) {
                    (NormBound::Unbounded, _) => {} // partial keeps growing; nothing to compare
                    (NormBound::Exact(cv), NormBound::LowerBound(pv)) => {
                        assert!(
                            pv <= cv * (1.0 + 1e-9),
                            "partial exceeded closed form: {} vs {cv} ({}, {space})",
                            pv,
                            w.describe()
                        );
                        assert!(
                            (cv - pv).abs() <= 1e-9 * cv.max(1.0),
                            "closed form {cv} vs partial {pv} ({}, {space})",
                            w.describe()
                        );
                    }
                    other => panic!("unexpected bounds {other:?}"),
                }
            }
        }
    }

    #[test]
    fn dyadic_displayed_sum_identity() {
        // sum_{u in X^N(v_i)} |lambda(v_i -> u)|^{p*}
        //   = sum_{k=1}^{2^N} (theta_n(i) / (2^N (theta_n(i) - 1) + k))^{alpha p*}
        // by brute-force enumeration for n <= 4, N <= 6.
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let alpha = w.dyadic_params().unwrap().2;
        let p_star = 2.0;
        for n in 0..=4usize {
            // A deterministic sample of depth-n starting vertices.
            let starts: Vec<Vec<u32>> = match n {
                0 => vec![vec![]],
                _ => vec![
                    std::iter::repeat_n(1, n).collect(),
                    std::iter::repeat_n(2, n).collect(),
                    (0..n).map(|k| if k % 2 == 0 { 1 } else { 2 }).collect(),
                ],
            };
            for start in starts {
                let v = VertexAddr::rooted(start.clone());
                let t = if start.is_empty() {
                    1.0
                } else {
                    theta(&start).unwrap() as f64
                };
                for big_n in 1..=6u32 {
                    let kids = spec.children_n(&v, big_n, 1 << 12).unwrap();
                    assert!(!kids.truncated);
                    let brute: f64 = kids
                        .vertices
                        .iter()
                        .map(|u| {
                            w.path_product(&spec, &v, u).unwrap().norm().powf(p_star)
                        })
                        .sum();
                    let m = 2f64.powi(big_n as i32);
                    let formula: f64 = (1..=(1u64 << big_n))
                        .map(|k| (t / (m * (t - 1.0) + k as f64)).powf(alpha * p_star))
                        .sum();
                    assert!(
                        (brute - formula).abs() <= 1e-10 * formula.max(1.0),
                        "n = {n}, N = {big_n}, start = {start:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn tail_oracle_sandwiches_partial_sums() {
        let spec = TreeSpec::menthe();
        let w = WeightFamily::menthe(
            ScalarSeq::geometric(c(0.5, 0.0)).unwrap(),
            ScalarSeq::power(1.0).unwrap(),
        )
        .unwrap();
        let q = 2.0;
        let oracle = w
            .child_abs_power_tail(&spec, &VertexAddr::root(), q)
            .expect("geometric tail");
        let mut last = 0f64;
        for budget in [4usize, 16, 64, 256] {
            let kids = spec.children(&VertexAddr::root(), budget).unwrap();
            let partial: f64 = kids
                .vertices
                .iter()
                .map(|u| w.value(&spec, u).unwrap().norm().powf(q))
                .sum();
            assert!(partial <= oracle + 1e-15);
            assert!(partial >= last);
            last = partial;
        }
        assert!((oracle - last).abs() < 1e-9);
    }
}
