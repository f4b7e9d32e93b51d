use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::addr::VertexAddr;
use crate::error::{Error, Result};
use crate::space::SpaceTag;
use crate::tree::{ChildCount, CountBound, TreeSpec, TreeTag};
use crate::weights::{theta, WeightFamily, WeightTag};

/// Largest dyadic descendant set summed term by term before degrading to
/// the proven lower bound.
const DYADIC_EXACT_CAP: u32 = 16;

/// A criterion quantity at one `(vertex, n)` cell: exact closed form or a
/// budgeted (possibly truncated) evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CritValue {
    pub value: f64,
    pub exact: bool,
    pub truncated: bool,
}

impl CritValue {
    fn exact(value: f64) -> Self {
        CritValue { value, exact: true, truncated: false }
    }

    fn min(self, other: CritValue) -> CritValue {
        CritValue {
            value: self.value.min(other.value),
            exact: self.exact && other.exact,
            truncated: self.truncated || other.truncated,
        }
    }
}

/// Product of the shared generation moduli over `(g0, g0 + n]`, for
/// families that are symmetric in modulus.
fn gen_modulus_product(w: &WeightFamily, g0: i64, n: u32) -> Option<f64> {
    let mut prod = 1f64;
    for k in 1..=n as i64 {
        prod *= w.gen_modulus(g0 + k)?;
    }
    Some(prod)
}

/// `|lambda(Par^n(v) -> v)|`, through the same generation-modulus route as
/// `crit_sup` when the family allows it, so that symmetric ratios come out
/// exactly 1.
fn left_modulus(w: &WeightFamily, spec: &TreeSpec, v: &VertexAddr, n: u32) -> Result<f64> {
    if let Some(prod) = gen_modulus_product(w, v.generation() - n as i64, n) {
        return Ok(prod);
    }
    let par = spec.parent(v, n)?.expect("unrooted trees have all ancestors");
    Ok(w.path_product(spec, &par, v)?.norm())
}

/// Walks `X^n(v)` accumulating `sup |lambda(v -> u)|` and
/// `sum |lambda(v -> u)|^q`, within a budget.
fn walk_products(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    q: f64,
    budget: usize,
) -> Result<(f64, f64, bool)> {
    let mut sup = 0f64;
    let mut sum = 0f64;
    let mut truncated = false;
    let mut emitted = 0usize;
    let mut stack: Vec<(VertexAddr, u32, Complex64)> = vec![(v.clone(), n, Complex64::ONE)];
    while let Some((cur, rem, prod)) = stack.pop() {
        if rem == 0 {
            if emitted >= budget {
                truncated = true;
                break;
            }
            emitted += 1;
            let m = prod.norm();
            sup = sup.max(m);
            sum += m.powf(q);
            continue;
        }
        let kids = spec.children(&cur, budget.saturating_add(1))?;
        if kids.truncated {
            truncated = true;
        }
        for child in kids.vertices.into_iter().rev() {
            let wchild = w.value(spec, &child)?;
            stack.push((child, rem - 1, prod * wchild));
        }
    }
    Ok((sup, sum, truncated))
}

/// `sup_{u in X^n(v)} |lambda(v -> u)|`: exact for the builtin families,
/// else a budgeted lower bound.
pub fn crit_sup(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    budget: usize,
) -> Result<CritValue> {
    if n == 0 {
        return Err(Error::invalid("criterion iterate n must be >= 1"));
    }
    spec.validate(v)?;
    // Families symmetric in modulus: every path product shares one modulus.
    if let Some(prod) = gen_modulus_product(w, v.generation(), n) {
        return Ok(CritValue::exact(prod));
    }
    match (w.tag(), spec.tag()) {
        (WeightTag::DyadicCounterexample, Some(TreeTag::NAdic(2))) => {
            let (_, _, alpha) = w.dyadic_params().expect("dyadic");
            let t = if v.path().is_empty() {
                1.0
            } else {
                theta(v.path())? as f64
            };
            // The supremum sits on the leftmost branch, where
            // theta_{d+n} = 2^n (theta_d - 1) + 1.
            let m = 2f64.powi(n as i32);
            Ok(CritValue::exact((t / (m * (t - 1.0) + 1.0)).powf(alpha)))
        }
        (WeightTag::FertileNoAlgebra, Some(TreeTag::NAdic(m))) if m >= 2 => {
            // Two unit-weight children everywhere keep an all-ones branch
            // below every vertex, and no weight exceeds 1.
            Ok(CritValue::exact(1.0))
        }
        (WeightTag::Menthe, Some(TreeTag::Menthe)) => {
            let (alpha, beta) = w.menthe_seqs().expect("menthe");
            if v.is_root() {
                let s = alpha.abs_sup();
                Ok(CritValue::exact(beta.eval(n as u64).norm() * s))
            } else {
                let j = v.path().len() as u64;
                let ratio = (beta.eval(j + n as u64) / beta.eval(j)).norm();
                Ok(CritValue::exact(ratio))
            }
        }
        _ => {
            let (sup, _, truncated) = walk_products(w, spec, v, n, 1.0, budget)?;
            Ok(CritValue { value: sup, exact: !truncated, truncated })
        }
    }
}

/// `sum_{u in X^n(v)} |lambda(v -> u)|^q`: exact for the builtin families,
/// else a budgeted lower bound.
pub fn crit_sum(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    q: f64,
    budget: usize,
) -> Result<CritValue> {
    if n == 0 {
        return Err(Error::invalid("criterion iterate n must be >= 1"));
    }
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::invalid("criterion exponent q must be positive"));
    }
    spec.validate(v)?;
    if let Some(prod) = gen_modulus_product(w, v.generation(), n) {
        let term = prod.powf(q);
        return Ok(match spec.count_descendants(v, n, budget)? {
            CountBound::Exact(c) => CritValue::exact(c * term),
            CountBound::Infinite => CritValue::exact(f64::INFINITY),
            CountBound::AtLeast(c) => {
                CritValue { value: c * term, exact: false, truncated: true }
            }
        });
    }
    match (w.tag(), spec.tag()) {
        (WeightTag::DyadicCounterexample, Some(TreeTag::NAdic(2))) => {
            let (_, _, alpha) = w.dyadic_params().expect("dyadic");
            let t = if v.path().is_empty() {
                1.0
            } else {
                theta(v.path())? as f64
            };
            if n <= DYADIC_EXACT_CAP {
                let m = 2f64.powi(n as i32);
                let mut sum = 0f64;
                for k in 1..=(1u64 << n) {
                    sum += (t / (m * (t - 1.0) + k as f64)).powf(alpha * q);
                }
                Ok(CritValue::exact(sum))
            } else {
                // Every term is at least (t / (2^n t))^{alpha q}.
                let bound = 2f64.powf(n as f64 * (1.0 - alpha * q));
                Ok(CritValue { value: bound, exact: false, truncated: true })
            }
        }
        (WeightTag::FertileNoAlgebra, Some(TreeTag::NAdic(m))) if m >= 2 => {
            let (_, p_star) = w.fertile_params().expect("fertile");
            let per_level = if m == 2 {
                2.0
            } else {
                2.0 + (m as f64 - 2.0).powf(1.0 - q / p_star)
            };
            Ok(CritValue::exact(per_level.powi(n as i32)))
        }
        (WeightTag::Menthe, Some(TreeTag::Menthe)) => {
            let (alpha, beta) = w.menthe_seqs().expect("menthe");
            if v.is_root() {
                match alpha.abs_power_tail(q) {
                    Some(tail) => {
                        Ok(CritValue::exact(beta.eval(n as u64).norm().powf(q) * tail))
                    }
                    None => {
                        let (_, sum, truncated) = walk_products(w, spec, v, n, q, budget)?;
                        Ok(CritValue { value: sum, exact: !truncated, truncated })
                    }
                }
            } else {
                let j = v.path().len() as u64;
                let ratio = (beta.eval(j + n as u64) / beta.eval(j)).norm();
                Ok(CritValue::exact(ratio.powf(q)))
            }
        }
        _ => {
            // Depth-1 sums over infinite child sets go through the tail oracle.
            if n == 1 && spec.arity(v)? == ChildCount::CountablyInfinite {
                if let Some(tail) = w.child_abs_power_tail(spec, v, q) {
                    return Ok(CritValue::exact(tail));
                }
            }
            let (_, sum, truncated) = walk_products(w, spec, v, n, q, budget)?;
            Ok(CritValue { value: sum, exact: !truncated, truncated })
        }
    }
}

/// The backward path product `lambda(Par^n(v) -> v)` (unrooted trees).
pub fn crit_left(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
) -> Result<Complex64> {
    if spec.is_rooted() {
        return Err(Error::unsupported(
            "the left condition is defined on unrooted trees",
        ));
    }
    let par = spec.parent(v, n)?.expect("unrooted trees have all ancestors");
    w.path_product(spec, &par, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioMode {
    Sup,
    Sum,
}

/// The two-sided quantity of the unrooted necessary conditions:
/// the ratio part over `X^n(Par^n(v))`, the companion
/// `1/|lambda(Par^n(v) -> v)|`, and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioValue {
    pub ratio_part: f64,
    pub inv_left: f64,
    pub max_part: f64,
    pub exact: bool,
    pub truncated: bool,
}

pub fn crit_ratio(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    mode: RatioMode,
    budget: usize,
) -> Result<RatioValue> {
    if n == 0 {
        return Err(Error::invalid("criterion iterate n must be >= 1"));
    }
    if spec.is_rooted() {
        return Err(Error::unsupported(
            "the ratio condition is defined on unrooted trees",
        ));
    }
    let par = spec.parent(v, n)?.expect("unrooted trees have all ancestors");
    let left = left_modulus(w, spec, v, n)?;
    let numerator = match mode {
        RatioMode::Sup => crit_sup(w, spec, &par, n, budget)?,
        RatioMode::Sum => crit_sum(w, spec, &par, n, 1.0, budget)?,
    };
    let ratio_part = numerator.value / left;
    let inv_left = 1.0 / left;
    Ok(RatioValue {
        ratio_part,
        inv_left,
        max_part: ratio_part.max(inv_left),
        exact: numerator.exact,
        truncated: numerator.truncated,
    })
}

/// The criterion sequences evaluated by [`assemble_verdict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremId {
    /// Rooted hypercyclicity on `l^1`: `sup |lambda(v -> u)| -> oo`.
    RootedHcL1,
    /// Rooted hypercyclicity on `l^p`: `sum |lambda(v -> u)|^{p*} -> oo`.
    RootedHcLp,
    /// Rooted hypercyclicity on `c_0`: `sum |lambda(v -> u)| -> oo`.
    RootedHcC0,
    /// Rooted hypercyclic-algebra condition (iv): `sup |lambda(v -> u)| -> oo`.
    RootedAlgebraIv,
    /// Unrooted necessary condition (v): the sup condition plus the
    /// max(1/left, ratio-sup) condition.
    UnrootedV,
    /// Unrooted `c_0` condition: the sum condition plus max(1/left, ratio-sum).
    UnrootedC0,
    /// Symmetric-weight characterization: sup condition plus left -> 0.
    Symmetric,
    /// Free-left-end characterization: sup (or sum on `c_0`) plus left -> 0.
    FreeLeftEnd,
}

impl TheoremId {
    pub fn requires_rooted(self) -> bool {
        matches!(
            self,
            TheoremId::RootedHcL1
                | TheoremId::RootedHcLp
                | TheoremId::RootedHcC0
                | TheoremId::RootedAlgebraIv
        )
    }

    /// Check the space tag fits the theorem.
    pub fn admits_space(self, space: SpaceTag) -> bool {
        match self {
            TheoremId::RootedHcL1 => matches!(space, SpaceTag::L1),
            TheoremId::RootedHcLp => matches!(space, SpaceTag::Lp(_)),
            TheoremId::RootedHcC0 | TheoremId::UnrootedC0 => matches!(space, SpaceTag::C0),
            TheoremId::RootedAlgebraIv | TheoremId::UnrootedV | TheoremId::Symmetric => {
                matches!(space, SpaceTag::L1 | SpaceTag::Lp(_))
            }
            TheoremId::FreeLeftEnd => true,
        }
    }

    pub fn note(self) -> Option<&'static str> {
        match self {
            TheoremId::UnrootedV => {
                Some("necessary conditions; their sufficiency for a hypercyclic algebra is open")
            }
            _ => None,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TheoremId::RootedHcL1 => "rooted-hc-l1",
            TheoremId::RootedHcLp => "rooted-hc-lp",
            TheoremId::RootedHcC0 => "rooted-hc-c0",
            TheoremId::RootedAlgebraIv => "rooted-algebra-iv",
            TheoremId::UnrootedV => "unrooted-v",
            TheoremId::UnrootedC0 => "unrooted-c0",
            TheoremId::Symmetric => "symmetric",
            TheoremId::FreeLeftEnd => "free-left-end",
        };
        write!(f, "{s}")
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rooted-hc-l1" => TheoremId::RootedHcL1,
            "rooted-hc-lp" => TheoremId::RootedHcLp,
            "rooted-hc-c0" => TheoremId::RootedHcC0,
            "rooted-algebra-iv" => TheoremId::RootedAlgebraIv,
            "unrooted-v" => TheoremId::UnrootedV,
            "unrooted-c0" => TheoremId::UnrootedC0,
            "symmetric" => TheoremId::Symmetric,
            "free-left-end" => TheoremId::FreeLeftEnd,
            other => return Err(Error::invalid(format!("unknown theorem id `{other}`"))),
        })
    }
}

/// Three-valued verdict: a horizon computation can never certify a limit,
/// so `ExactDivergence` requires a closed-form certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum CriterionVerdict {
    ExactDivergence { certificate: String },
    DivergesUpToHorizon { witness: Vec<u32> },
    StalledBelow { bound: f64 },
}

impl CriterionVerdict {
    pub fn diverges(&self) -> bool {
        !matches!(self, CriterionVerdict::StalledBelow { .. })
    }
}

impl fmt::Display for CriterionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionVerdict::ExactDivergence { certificate } => {
                write!(f, "exact-divergence: {certificate}")
            }
            CriterionVerdict::DivergesUpToHorizon { witness } => {
                write!(f, "diverges-up-to-horizon along n_k = ")?;
                for (i, n) in witness.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
            CriterionVerdict::StalledBelow { bound } => write!(f, "stalled-below {bound}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CritCell {
    pub vertex: usize,
    pub n: u32,
    pub value: f64,
    pub exact: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub theorem: TheoremId,
    pub space: SpaceTag,
    pub tree_desc: String,
    pub weight_desc: String,
    pub horizon: u32,
    pub growth_threshold: f64,
    pub probes: Vec<VertexAddr>,
    pub cells: Vec<CritCell>,
    pub min_by_n: Vec<(u32, f64)>,
    pub verdict: CriterionVerdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CritParams {
    pub horizon: u32,
    pub growth_threshold: f64,
    pub budget: usize,
    pub probes: Option<Vec<VertexAddr>>,
}

impl Default for CritParams {
    fn default() -> Self {
        CritParams { horizon: 40, growth_threshold: 1e3, budget: 4096, probes: None }
    }
}

/// Default probe set: every vertex of the generations `|g| <= 3`, capped
/// at 64 vertices.
pub fn default_probes(spec: &TreeSpec, cap: usize) -> Result<Vec<VertexAddr>> {
    let gens: Vec<i64> = if spec.is_rooted() {
        (0..=3).collect()
    } else {
        (-3..=3).collect()
    };
    let mut probes = Vec::new();
    for g in gens {
        if probes.len() >= cap {
            break;
        }
        let e = spec.generation(g, cap - probes.len())?;
        probes.extend(e.vertices);
    }
    probes.truncate(cap);
    Ok(probes)
}

fn quantity(
    theorem: TheoremId,
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    budget: usize,
) -> Result<CritValue> {
    let ratio_as_value = |r: RatioValue| CritValue {
        value: r.max_part,
        exact: r.exact,
        truncated: r.truncated,
    };
    let inv_left = |v: &VertexAddr| -> Result<CritValue> {
        Ok(CritValue::exact(1.0 / left_modulus(w, spec, v, n)?))
    };
    match theorem {
        TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv => crit_sup(w, spec, v, n, budget),
        TheoremId::RootedHcLp => {
            let q = space.conjugate_exponent().expect("validated: space is lp");
            crit_sum(w, spec, v, n, q, budget)
        }
        TheoremId::RootedHcC0 => crit_sum(w, spec, v, n, 1.0, budget),
        TheoremId::UnrootedV => {
            let sup = crit_sup(w, spec, v, n, budget)?;
            let ratio = crit_ratio(w, spec, v, n, RatioMode::Sup, budget)?;
            Ok(sup.min(ratio_as_value(ratio)))
        }
        TheoremId::UnrootedC0 => {
            let sum = crit_sum(w, spec, v, n, 1.0, budget)?;
            let ratio = crit_ratio(w, spec, v, n, RatioMode::Sum, budget)?;
            Ok(sum.min(ratio_as_value(ratio)))
        }
        TheoremId::Symmetric => {
            let sup = crit_sup(w, spec, v, n, budget)?;
            Ok(sup.min(inv_left(v)?))
        }
        TheoremId::FreeLeftEnd => {
            let growth = match space {
                SpaceTag::C0 => crit_sum(w, spec, v, n, 1.0, budget)?,
                _ => crit_sup(w, spec, v, n, budget)?,
            };
            Ok(growth.min(inv_left(v)?))
        }
    }
}

/// A closed-form proof that the theorem's quantity diverges for *every*
/// vertex of the tree, when the weight family provides one.
fn divergence_certificate(
    theorem: TheoremId,
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
) -> Option<String> {
    let q = match theorem {
        TheoremId::RootedHcLp => space.conjugate_exponent(),
        TheoremId::RootedHcC0 | TheoremId::UnrootedC0 => Some(1.0),
        _ => None,
    };
    match w.tag() {
        WeightTag::Rolewicz => {
            let lam = w.rolewicz_lambda()?.norm();
            match theorem {
                TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv => {
                    if lam > 1.0 {
                        Some(format!("sup |lambda(v->u)| = |lambda|^n = {lam}^n -> oo"))
                    } else {
                        None
                    }
                }
                TheoremId::RootedHcLp | TheoremId::RootedHcC0 => {
                    let q = q?;
                    // The slowest vertices are the stationary rays (menthe,
                    // staircase) or the uniform branching (N-adic).
                    let b_min = match spec.tag()? {
                        TreeTag::NAdic(m) => m as f64,
                        TreeTag::Menthe | TreeTag::Staircase => 1.0,
                        TreeTag::Spine => return None,
                    };
                    if b_min * lam.powf(q) > 1.0 {
                        Some(format!(
                            "sum |lambda(v->u)|^q >= ({b_min} * {lam}^q)^n with q = {q} -> oo"
                        ))
                    } else {
                        None
                    }
                }
                _ => None,
            }
        }
        WeightTag::DyadicCounterexample => {
            if spec.tag() != Some(TreeTag::NAdic(2)) {
                return None;
            }
            let (_, _, alpha) = w.dyadic_params()?;
            match theorem {
                TheoremId::RootedHcLp | TheoremId::RootedHcC0 => {
                    let q = q?;
                    if alpha * q < 1.0 {
                        Some(format!(
                            "sum |lambda(v->u)|^q >= 2^(n (1 - alpha q)) with alpha q = {} -> oo",
                            alpha * q
                        ))
                    } else {
                        None
                    }
                }
                _ => None,
            }
        }
        WeightTag::FertileNoAlgebra => {
            let m = match spec.tag()? {
                TreeTag::NAdic(m) if m >= 2 => m,
                _ => return None,
            };
            match theorem {
                TheoremId::RootedHcLp | TheoremId::RootedHcC0 => {
                    let q = q?;
                    let (_, p_star) = w.fertile_params()?;
                    let per_level = if m == 2 {
                        2.0
                    } else {
                        2.0 + (m as f64 - 2.0).powf(1.0 - q / p_star)
                    };
                    Some(format!(
                        "sum |lambda(v->u)|^q = {per_level}^n for every v -> oo"
                    ))
                }
                _ => None,
            }
        }
        WeightTag::Menthe => {
            if spec.tag() != Some(TreeTag::Menthe) {
                return None;
            }
            let (alpha, beta) = w.menthe_seqs()?;
            if !beta.abs_diverges() {
                return None;
            }
            match theorem {
                TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv => {
                    if alpha.abs_sup() > 0.0 {
                        Some(
                            "|beta_n| -> oo drives both the root supremum and every ray ratio"
                                .into(),
                        )
                    } else {
                        None
                    }
                }
                TheoremId::RootedHcLp | TheoremId::RootedHcC0 => {
                    let q = q?;
                    match alpha.abs_power_tail(q) {
                        Some(t) if t.is_finite() && t > 0.0 => Some(
                            "|beta_n| -> oo drives both the root child sums and every ray ratio"
                                .into(),
                        ),
                        _ => None,
                    }
                }
                _ => None,
            }
        }
        WeightTag::BilateralRolewicz => {
            if spec.tag() != Some(TreeTag::Spine) || !spec.has_free_left_end() {
                return None;
            }
            match theorem {
                TheoremId::Symmetric
                | TheoremId::FreeLeftEnd
                | TheoremId::UnrootedV
                | TheoremId::UnrootedC0 => Some(
                    "downward products eventually gain only |lambda| > 1 factors (-> oo) \
                     while backward products gain only 1/|lambda| factors (-> 0)"
                        .into(),
                ),
                _ => None,
            }
        }
        _ => None,
    }
}

/// A closed-form ceiling on the theorem quantity, proving a stall.
fn stall_ceiling(
    theorem: TheoremId,
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
) -> Option<f64> {
    match w.tag() {
        WeightTag::Rolewicz => {
            let lam = w.rolewicz_lambda()?.norm();
            match theorem {
                TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv => {
                    if lam <= 1.0 {
                        Some(1.0)
                    } else {
                        None
                    }
                }
                TheoremId::RootedHcLp | TheoremId::RootedHcC0 => {
                    let q = match theorem {
                        TheoremId::RootedHcLp => space.conjugate_exponent()?,
                        _ => 1.0,
                    };
                    let b_ray = match spec.tag()? {
                        TreeTag::NAdic(m) => m as f64,
                        TreeTag::Menthe | TreeTag::Staircase => 1.0,
                        TreeTag::Spine => return None,
                    };
                    if b_ray * lam.powf(q) <= 1.0 {
                        Some(1.0)
                    } else {
                        None
                    }
                }
                // On unrooted trees a Rolewicz quantity is capped by 1:
                // either the growth part decays or the left part does not.
                TheoremId::UnrootedV | TheoremId::Symmetric | TheoremId::FreeLeftEnd => {
                    if matches!(theorem, TheoremId::FreeLeftEnd if space == SpaceTag::C0) {
                        None
                    } else {
                        Some(1.0)
                    }
                }
                _ => None,
            }
        }
        WeightTag::DyadicCounterexample => match theorem {
            TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv
                if spec.tag() == Some(TreeTag::NAdic(2)) =>
            {
                // theta ratios never exceed 1.
                Some(1.0)
            }
            _ => None,
        },
        WeightTag::FertileNoAlgebra => match theorem {
            TheoremId::RootedHcL1 | TheoremId::RootedAlgebraIv
                if matches!(spec.tag(), Some(TreeTag::NAdic(m)) if m >= 2) =>
            {
                // 0 < lambda_v <= 1 everywhere.
                Some(1.0)
            }
            _ => None,
        },
        _ => None,
    }
}

/// Evaluates the theorem's quantity over the probe set and horizon and
/// extracts the verdict.
pub fn assemble_verdict(
    theorem: TheoremId,
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    params: &CritParams,
) -> Result<CriterionReport> {
    if params.horizon == 0 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    if theorem.requires_rooted() != spec.is_rooted() {
        return Err(Error::invalid(format!(
            "theorem `{theorem}` applies to {} trees",
            if theorem.requires_rooted() { "rooted" } else { "unrooted" }
        )));
    }
    if !theorem.admits_space(space) {
        return Err(Error::invalid(format!(
            "theorem `{theorem}` is not stated for space {space}"
        )));
    }
    let probes = match &params.probes {
        Some(p) => {
            if p.is_empty() {
                return Err(Error::invalid("probe set must be nonempty"));
            }
            for v in p {
                spec.validate(v)?;
            }
            p.clone()
        }
        None => default_probes(spec, 64)?,
    };

    let mut cells = Vec::with_capacity(probes.len() * params.horizon as usize);
    let mut min_by_n = Vec::with_capacity(params.horizon as usize);
    for n in 1..=params.horizon {
        let mut min_val = f64::INFINITY;
        for (vi, v) in probes.iter().enumerate() {
            let cv = quantity(theorem, space, w, spec, v, n, params.budget)?;
            min_val = min_val.min(cv.value);
            cells.push(CritCell {
                vertex: vi,
                n,
                value: cv.value,
                exact: cv.exact,
                truncated: cv.truncated,
            });
        }
        min_by_n.push((n, min_val));
    }

    let verdict = if let Some(certificate) = divergence_certificate(theorem, space, w, spec) {
        CriterionVerdict::ExactDivergence { certificate }
    } else {
        // Greedy strictly-increasing subsequence of the min-over-probes row.
        let mut witness = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for &(n, m) in &min_by_n {
            if m > last {
                witness.push(n);
                last = m;
            }
        }
        if last > params.growth_threshold && witness.len() >= 2 {
            CriterionVerdict::DivergesUpToHorizon { witness }
        } else if let Some(bound) = stall_ceiling(theorem, space, w, spec) {
            CriterionVerdict::StalledBelow { bound }
        } else {
            let best = min_by_n.iter().map(|&(_, m)| m).fold(f64::NEG_INFINITY, f64::max);
            CriterionVerdict::StalledBelow { bound: best }
        }
    };

    Ok(CriterionReport {
        theorem,
        space,
        tree_desc: spec.describe(),
        weight_desc: w.describe(),
        horizon: params.horizon,
        growth_threshold: params.growth_threshold,
        probes,
        cells,
        min_by_n,
        verdict,
        note: theorem.note().map(String::from),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::SpineLevel;
    use std::collections::BTreeMap;

    fn addr(s: &str) -> VertexAddr {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_spine(below: u32) -> TreeSpec {
        TreeSpec::spine_tree(vec![], SpineLevel::singleton(), ChildCount::Finite(below)).unwrap()
    }

    fn bilateral(spec: &TreeSpec, lam: f64) -> WeightFamily {
        let mut middle = BTreeMap::new();
        middle.insert(0, Complex64::ONE);
        WeightFamily::bilateral_rolewicz(spec, c(lam, 0.0), 0, 0, middle).unwrap()
    }

    #[test]
    fn rolewicz_sup_is_lambda_to_the_n() {
        let spec = TreeSpec::nadic(3).unwrap();
        let w = WeightFamily::rolewicz(c(0.0, 2.0)).unwrap();
        for n in 1..=10u32 {
            let v = crit_sup(&w, &spec, &VertexAddr::root(), n, 64).unwrap();
            assert!(v.exact);
            assert!((v.value - 2f64.powi(n as i32)).abs() < 1e-12 * v.value);
        }
    }

    #[test]
    fn rolewicz_sum_matches_brute_force_on_nadic() {
        for big_n in [2u32, 3] {
            let spec = TreeSpec::nadic(big_n).unwrap();
            let w = WeightFamily::rolewicz(c(1.2, -0.3)).unwrap();
            let lam = w.rolewicz_lambda().unwrap().norm();
            for q in [1.0, 1.7, 2.0] {
                for n in 1..=8u32 {
                    let closed = crit_sum(&w, &spec, &addr("r.1"), n, q, 1 << 20).unwrap();
                    assert!(closed.exact);
                    let expected = (big_n as f64 * lam.powf(q)).powi(n as i32);
                    assert!(
                        (closed.value - expected).abs() <= 1e-9 * expected,
                        "N={big_n} q={q} n={n}"
                    );
                    // Brute force over the enumerated descendants.
                    let kids = spec.children_n(&addr("r.1"), n, 1 << 20).unwrap();
                    assert!(!kids.truncated);
                    let brute: f64 = kids
                        .vertices
                        .iter()
                        .map(|u| {
                            w.path_product(&spec, &addr("r.1"), u)
                                .unwrap()
                                .norm()
                                .powf(q)
                        })
                        .sum();
                    assert!((closed.value - brute).abs() <= 1e-9 * brute.max(1.0));
                }
            }
        }
    }

    #[test]
    fn dyadic_sup_stays_at_most_one() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        // At the root the leftmost branch keeps the supremum exactly 1.
        for n in 1..=10u32 {
            let v = crit_sup(&w, &spec, &VertexAddr::root(), n, 1 << 12).unwrap();
            assert!(v.exact);
            assert!((v.value - 1.0).abs() < 1e-15, "n = {n}");
        }
        // Deeper probes fall strictly below 1, and match enumeration.
        for start in ["r.2", "r.1.2", "r.2.1.2"] {
            let v = addr(start);
            for n in 1..=6u32 {
                let closed = crit_sup(&w, &spec, &v, n, 1 << 12).unwrap();
                assert!(closed.value <= 1.0 + 1e-15);
                let kids = spec.children_n(&v, n, 1 << 12).unwrap();
                let brute = kids
                    .vertices
                    .iter()
                    .map(|u| w.path_product(&spec, &v, u).unwrap().norm())
                    .fold(0.0, f64::max);
                assert!(
                    (closed.value - brute).abs() <= 1e-12 * brute.max(1e-12),
                    "start {start} n {n}"
                );
            }
        }
    }

    #[test]
    fn dyadic_sum_lower_bound_from_the_displayed_chain() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let (_, _, alpha) = w.dyadic_params().unwrap();
        let q = 2.0; // p* for p = 2
        for n in 1..=12u32 {
            let v = crit_sum(&w, &spec, &VertexAddr::root(), n, q, 1 << 20).unwrap();
            assert!(v.exact);
            let bound = 2f64.powf(n as f64 * (1.0 - alpha * q));
            assert!(v.value >= bound - 1e-12, "n = {n}: {} < {bound}", v.value);
        }
    }

    #[test]
    fn dyadic_power_sums_stay_bounded() {
        // q = m0 / p: the running sup over n is finite (the stronger
        // no-algebra property).
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let (p, m0, alpha) = w.dyadic_params().unwrap();
        let q = m0 as f64 / p;
        let zeta_bound: f64 = (1..=1_000_000u64)
            .map(|k| (k as f64).powf(-alpha * q))
            .sum();
        let mut sup = 0f64;
        for n in 1..=12u32 {
            let v = crit_sum(&w, &spec, &VertexAddr::root(), n, q, 1 << 20).unwrap();
            sup = sup.max(v.value);
        }
        assert!(sup <= zeta_bound + 1e-3, "{sup} vs {zeta_bound}");
    }

    #[test]
    fn fertile_family_mixes_without_algebra() {
        let spec = TreeSpec::nadic(4).unwrap();
        let w = WeightFamily::fertile_no_algebra(&spec, 2.0).unwrap();
        for n in 1..=20u32 {
            let sup = crit_sup(&w, &spec, &addr("r.3"), n, 1 << 12).unwrap();
            assert!(sup.value <= 1.0 + 1e-15);
            let sum = crit_sum(&w, &spec, &addr("r.3"), n, 2.0, 1 << 12).unwrap();
            assert!((sum.value - 3f64.powi(n as i32)).abs() <= 1e-9 * sum.value);
        }
        // Cross-check the closed form against enumeration at small n.
        for n in 1..=5u32 {
            let kids = spec.children_n(&VertexAddr::root(), n, 1 << 20).unwrap();
            let brute: f64 = kids
                .vertices
                .iter()
                .map(|u| {
                    w.path_product(&spec, &VertexAddr::root(), u)
                        .unwrap()
                        .norm()
                        .powi(2)
                })
                .sum();
            let closed = crit_sum(&w, &spec, &VertexAddr::root(), n, 2.0, 1 << 20).unwrap();
            assert!((closed.value - brute).abs() <= 1e-9 * brute);
        }
    }

    #[test]
    fn crit_left_examples() {
        let spec = free_spine(2);
        let w = bilateral(&spec, 2.0);
        let anchor = VertexAddr::anchor();
        for n in 1..=20u32 {
            let left = crit_left(&w, &spec, &anchor, n).unwrap().norm();
            // Generations -n+1..=0 contribute 1/2 except generation 0 (middle = 1).
            let expected = 0.5f64.powi(n as i32 - 1);
            assert!((left - expected).abs() <= 1e-15 * expected.max(1.0), "n = {n}");
        }
        // All-ones symmetric weights: left products are 1 forever.
        let ones = WeightFamily::symmetric_by_generation(Complex64::ONE, BTreeMap::new()).unwrap();
        for n in 1..=10u32 {
            assert_eq!(crit_left(&ones, &spec, &anchor, n).unwrap(), Complex64::ONE);
        }
        // n = 0 is the empty product.
        assert_eq!(crit_left(&w, &spec, &anchor, 0).unwrap(), Complex64::ONE);
        // Rooted trees are rejected.
        assert!(crit_left(&w, &TreeSpec::dyadic(), &VertexAddr::root(), 1).is_err());
    }

    #[test]
    fn ratio_part_is_one_for_symmetric_weights() {
        let spec = free_spine(3);
        let ones = WeightFamily::symmetric_by_generation(c(0.7, 0.1), BTreeMap::new()).unwrap();
        for v in [VertexAddr::anchor(), addr("r.2"), addr("r.3.1")] {
            for n in 1..=6u32 {
                let r = crit_ratio(&ones, &spec, &v, n, RatioMode::Sup, 1 << 12).unwrap();
                assert_eq!(r.ratio_part, 1.0, "v = {v}, n = {n}");
            }
        }
    }

    #[test]
    fn ratio_part_is_one_on_singleton_generations() {
        // A bi-infinite path: X^n(Par^n(v)) = {v}, so the ratio part is 1
        // even for weights with no symmetry at all.
        let line = TreeSpec::spine_tree(vec![], SpineLevel::singleton(), ChildCount::Finite(1))
            .unwrap();
        let mut overrides = BTreeMap::new();
        overrides.insert(VertexAddr::new(2, vec![]), c(0.3, 0.7));
        overrides.insert(addr("r.1.1"), c(-1.2, 0.1));
        let w = WeightFamily::table(c(0.9, -0.4), overrides).unwrap();
        for v in [VertexAddr::anchor(), VertexAddr::new(3, vec![]), addr("r.1.1.1")] {
            for n in 1..=8u32 {
                let r = crit_ratio(&w, &line, &v, n, RatioMode::Sup, 64).unwrap();
                assert_eq!(r.ratio_part, 1.0, "v = {v}, n = {n}");
            }
        }
    }

    #[test]
    fn ratio_max_diverges_for_bilateral() {
        let spec = free_spine(2);
        let w = bilateral(&spec, 2.0);
        let mut prev = 0.0;
        for n in 5..=20u32 {
            let r = crit_ratio(&w, &spec, &VertexAddr::anchor(), n, RatioMode::Sup, 1 << 12)
                .unwrap();
            assert!(r.max_part >= r.inv_left);
            assert!(r.inv_left > prev, "1/left must grow");
            prev = r.inv_left;
        }
    }

    #[test]
    fn sup_sum_sandwich() {
        // crit_sup <= crit_sum(q=1) <= |X^n(v)| * crit_sup on every probe.
        let spec = TreeSpec::nadic(3).unwrap();
        let mut overrides = BTreeMap::new();
        overrides.insert(addr("r.1"), c(3.0, 0.0));
        overrides.insert(addr("r.2.2"), c(0.25, 0.25));
        let w = WeightFamily::table(c(0.8, 0.3), overrides).unwrap();
        for v in [VertexAddr::root(), addr("r.2"), addr("r.3.1")] {
            for n in 1..=5u32 {
                let sup = crit_sup(&w, &spec, &v, n, 1 << 16).unwrap();
                let sum = crit_sum(&w, &spec, &v, n, 1.0, 1 << 16).unwrap();
                let count = match spec.count_descendants(&v, n, 1 << 16).unwrap() {
                    CountBound::Exact(c) => c,
                    _ => panic!("finite"),
                };
                assert!(sup.value <= sum.value + 1e-12);
                assert!(sum.value <= count * sup.value + 1e-12);
            }
        }
    }

    #[test]
    fn verdict_rolewicz_two_is_exact_divergence() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        let params = CritParams { horizon: 20, ..CritParams::default() };
        let rep =
            assemble_verdict(TheoremId::RootedAlgebraIv, SpaceTag::Lp(2.0), &w, &spec, &params)
                .unwrap();
        assert!(matches!(rep.verdict, CriterionVerdict::ExactDivergence { .. }));
    }

    #[test]
    fn verdict_rolewicz_decaying_stalls() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(0.9, 0.0)).unwrap();
        let rep = assemble_verdict(
            TheoremId::RootedAlgebraIv,
            SpaceTag::Lp(2.0),
            &w,
            &spec,
            &CritParams::default(),
        )
        .unwrap();
        match rep.verdict {
            CriterionVerdict::StalledBelow { bound } => assert_eq!(bound, 1.0),
            other => panic!("expected stall, got {other:?}"),
        }
        // Monotone decay per n.
        for pair in rep.min_by_n.windows(2) {
            assert!(pair[1].1 < pair[0].1);
        }
    }

    #[test]
    fn verdict_dyadic_counterexample() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        // Hypercyclic on l^2 ...
        let params = CritParams { horizon: 12, ..CritParams::default() };
        let hc = assemble_verdict(TheoremId::RootedHcLp, SpaceTag::Lp(2.0), &w, &spec, &params)
            .unwrap();
        assert!(hc.verdict.diverges());
        // ... but the algebra condition stalls below 1.
        let alg =
            assemble_verdict(TheoremId::RootedAlgebraIv, SpaceTag::Lp(2.0), &w, &spec, &params)
                .unwrap();
        match alg.verdict {
            CriterionVerdict::StalledBelow { bound } => assert_eq!(bound, 1.0),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn verdict_witness_is_strictly_increasing() {
        // A table family with no certificate: horizon extraction applies.
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::table(c(1.5, 0.0), BTreeMap::new()).unwrap();
        let params = CritParams {
            horizon: 12,
            growth_threshold: 10.0,
            budget: 1 << 14,
            probes: Some(vec![VertexAddr::root(), addr("r.1"), addr("r.2.2")]),
        };
        let rep =
            assemble_verdict(TheoremId::RootedAlgebraIv, SpaceTag::Lp(2.0), &w, &spec, &params)
                .unwrap();
        match &rep.verdict {
            CriterionVerdict::DivergesUpToHorizon { witness } => {
                assert!(witness.windows(2).all(|p| p[0] < p[1]));
                let values: Vec<f64> = witness
                    .iter()
                    .map(|n| rep.min_by_n[*n as usize - 1].1)
                    .collect();
                assert!(values.windows(2).all(|p| p[0] < p[1]));
                assert!(*values.last().unwrap() > 10.0);
            }
            other => panic!("expected horizon divergence, got {other:?}"),
        }
    }

    #[test]
    fn verdict_validates_kind_and_space() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        assert!(assemble_verdict(
            TheoremId::UnrootedV,
            SpaceTag::Lp(2.0),
            &w,
            &spec,
            &CritParams::default()
        )
        .is_err());
        assert!(assemble_verdict(
            TheoremId::RootedHcLp,
            SpaceTag::L1,
            &w,
            &spec,
            &CritParams::default()
        )
        .is_err());
        assert!(assemble_verdict(
            TheoremId::RootedAlgebraIv,
            SpaceTag::C0,
            &w,
            &spec,
            &CritParams::default()
        )
        .is_err());
    }

    #[test]
    fn verdict_bilateral_free_left_end() {
        let spec = free_spine(2);
        let w = bilateral(&spec, 2.0);
        for theorem in [TheoremId::FreeLeftEnd, TheoremId::Symmetric, TheoremId::UnrootedV] {
            let rep =
                assemble_verdict(theorem, SpaceTag::Lp(2.0), &w, &spec, &CritParams::default())
                    .unwrap();
            assert!(
                matches!(rep.verdict, CriterionVerdict::ExactDivergence { .. }),
                "{theorem}"
            );
        }
    }

    #[test]
    fn verdict_rolewicz_never_has_unrooted_algebra() {
        let spec = free_spine(2);
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        for theorem in [TheoremId::UnrootedV, TheoremId::Symmetric, TheoremId::FreeLeftEnd] {
            let rep =
                assemble_verdict(theorem, SpaceTag::Lp(2.0), &w, &spec, &CritParams::default())
                    .unwrap();
            match rep.verdict {
                CriterionVerdict::StalledBelow { bound } => assert_eq!(bound, 1.0),
                other => panic!("{theorem}: expected stall, got {other:?}"),
            }
        }
    }
}
