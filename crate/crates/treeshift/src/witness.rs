use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::addr::VertexAddr;
use crate::error::{Error, Result};
use crate::shift;
use crate::space::SpaceTag;
use crate::tree::TreeSpec;
use crate::vectors::{monomial, FinSuppVec};
use crate::weights::WeightFamily;

/// How far past the requested iterate the needs-larger-n scan looks.
const MINIMAL_N_SCAN: u32 = 1024;

/// Retry budget for random separating directions.
const DIRECTION_TRIES: usize = 1000;

/// Positive exponents `s` with a unique minimizer `beta` of the linear
/// forms `L_alpha(s) = sum_j alpha_j s_j` over `P`, normalized so that
/// `L_beta(s) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSolution {
    pub s: Vec<f64>,
    pub beta: Vec<u32>,
    /// `L_alpha(s)` for every `alpha` in the input order.
    pub values: Vec<(Vec<u32>, f64)>,
    /// `min_{alpha != beta} L_alpha(s) - 1`.
    pub margin: f64,
}

fn l_form(alpha: &[u32], t: &[f64]) -> f64 {
    alpha.iter().zip(t).map(|(&a, &tj)| a as f64 * tj).sum()
}

/// Normalizes a direction: `Some((s, beta_index))` when `t` separates a
/// unique minimizer.
fn normalize_direction(p_set: &[Vec<u32>], t: &[f64]) -> Option<(Vec<f64>, usize)> {
    let values: Vec<f64> = p_set.iter().map(|a| l_form(a, t)).collect();
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let unique = values
        .iter()
        .enumerate()
        .all(|(i, v)| i == best || *v > values[best]);
    if !unique {
        return None;
    }
    let scale = values[best];
    Some((t.iter().map(|tj| tj / scale).collect(), best))
}

/// Deterministic search for the exponents of the separating lemma: fixed
/// geometric directions first, then seeded pseudo-random ones.
pub fn solve_exponents(p_set: &[Vec<u32>]) -> Result<ExponentSolution> {
    if p_set.is_empty() {
        return Err(Error::invalid("exponent set P must be nonempty"));
    }
    let d = p_set[0].len();
    if d == 0 {
        return Err(Error::invalid("exponent tuples must have dimension >= 1"));
    }
    for alpha in p_set {
        if alpha.len() != d {
            return Err(Error::invalid("exponent tuples must share one dimension"));
        }
        if alpha.iter().all(|&a| a == 0) {
            return Err(Error::invalid("the all-zero tuple is not allowed in P"));
        }
    }
    for (i, a) in p_set.iter().enumerate() {
        for b in &p_set[i + 1..] {
            if *a == *b {
                return Err(Error::DegenerateExponents(format!(
                    "duplicate tuple {a:?}: no direction separates identical forms"
                )));
            }
        }
    }

    let finish = |t: &[f64]| -> Option<ExponentSolution> {
        let (s, beta_idx) = normalize_direction(p_set, t)?;
        let values: Vec<(Vec<u32>, f64)> = p_set
            .iter()
            .map(|a| (a.clone(), l_form(a, &s)))
            .collect();
        let margin = values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != beta_idx)
            .map(|(_, (_, v))| v - 1.0)
            .fold(f64::INFINITY, f64::min);
        Some(ExponentSolution { s, beta: p_set[beta_idx].clone(), values, margin })
    };

    for r in [1.0f64, 0.5, 1.0 / 3.0, 2.0, 3.0] {
        let t: Vec<f64> = (0..d).map(|j| r.powi(j as i32)).collect();
        if let Some(sol) = finish(&t) {
            return Ok(sol);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x7265_6573);
    for _ in 0..DIRECTION_TRIES {
        let t: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
        if let Some(sol) = finish(&t) {
            return Ok(sol);
        }
    }
    Err(Error::DegenerateExponents(
        "no separating direction found within the retry budget".into(),
    ))
}

/// The exact minimizer of `sup_j |x_j mu_j|` over the simplex
/// `x_j >= 0, sum x_j = 1`: reciprocal moduli normalized, with value
/// `1 / sum_j 1/|mu_j|`.
pub fn keylemma_optimal(mu: &[Complex64]) -> Result<(Vec<f64>, f64)> {
    if mu.is_empty() {
        return Err(Error::invalid("key-lemma needs at least one scalar"));
    }
    if mu.contains(&Complex64::ZERO) {
        return Err(Error::invalid("key-lemma scalars must be nonzero"));
    }
    let recips: Vec<f64> = mu.iter().map(|z| 1.0 / z.norm()).collect();
    let s: f64 = recips.iter().sum();
    let x: Vec<f64> = recips.iter().map(|r| r / s).collect();
    Ok((x, 1.0 / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessMode {
    Rooted,
    UnrootedPower,
    UnrootedAlgebra,
}

impl fmt::Display for WitnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WitnessMode::Rooted => "rooted",
            WitnessMode::UnrootedPower => "unrooted-power",
            WitnessMode::UnrootedAlgebra => "unrooted-algebra",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct WitnessParams {
    /// Enumeration budget per descendant set.
    pub budget: usize,
    /// Classification threshold between the vanishing-left class F1 and
    /// the ratio class F2 (power mode).
    pub tau: f64,
}

impl Default for WitnessParams {
    fn default() -> Self {
        WitnessParams { budget: 4096, tau: 1.0 }
    }
}

/// One F2 vertex with its sibling target and the size of the coefficient
/// at `e_{Par^n(a)}` before and after the telescoping cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct F2Assignment {
    pub vertex: VertexAddr,
    pub sibling: VertexAddr,
    pub pre_cancel: f64,
    pub post_cancel: f64,
}

/// The constructed generators and the numeric evidence that the shifted
/// `beta`-monomial hits the target while the others collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub mode: WitnessMode,
    pub space: SpaceTag,
    pub n: u32,
    pub exponents: Option<ExponentSolution>,
    pub m: Option<u32>,
    pub h: Vec<FinSuppVec>,
    pub approach_norms: Vec<f64>,
    /// `|B^n h^beta - g|` in the algebra modes; the deviation from the
    /// exact identity `B^n h^m = residual + g` in power mode.
    pub hit_error: f64,
    pub collapse_norms: Vec<(Vec<u32>, f64)>,
    /// Norm of the surviving F1 term (unrooted builders).
    pub residual_norm: Option<f64>,
    pub f1: Vec<VertexAddr>,
    pub f2: Vec<F2Assignment>,
}

fn zpow(z: Complex64, s: f64) -> Complex64 {
    if s == 1.0 {
        z
    } else {
        z.powf(s)
    }
}

/// Enumerates `X^n(v)` with the running path products, capped at `budget`.
fn descendants_with_products(
    w: &WeightFamily,
    spec: &TreeSpec,
    v: &VertexAddr,
    n: u32,
    budget: usize,
) -> Result<Vec<(VertexAddr, Complex64)>> {
    let mut out = Vec::new();
    let mut stack: Vec<(VertexAddr, u32, Complex64)> = vec![(v.clone(), n, Complex64::ONE)];
    while let Some((cur, rem, prod)) = stack.pop() {
        if rem == 0 {
            out.push((cur, prod));
            if out.len() >= budget {
                break;
            }
            continue;
        }
        let kids = spec.children(&cur, budget.saturating_add(1))?;
        for child in kids.vertices.into_iter().rev() {
            let wc = w.value(spec, &child)?;
            stack.push((child, rem - 1, prod * wc));
        }
    }
    Ok(out)
}

fn max_generation(vecs: &[&FinSuppVec]) -> Option<i64> {
    vecs.iter()
        .flat_map(|f| f.support())
        .map(|v| v.generation())
        .max()
}

/// Smallest iterate at which no support vertex lies in `X^n(supp g)`.
fn minimal_collision_free_n(
    spec: &TreeSpec,
    sources: &FinSuppVec,
    all: &[&FinSuppVec],
) -> Result<u32> {
    let mut minimal = 1u32;
    for a in sources.support() {
        for f in all {
            for x in f.support() {
                let diff = x.generation() - a.generation();
                if diff >= 1 {
                    if let Some(par) = spec.parent(x, diff as u32)? {
                        if par == *a {
                            minimal = minimal.max(diff as u32 + 1);
                        }
                    }
                }
            }
        }
    }
    Ok(minimal)
}

/// Shared bump construction of the two algebra builders. On rooted trees
/// the shift annihilates the base point, so the beta-monomial hits `g`
/// exactly; on unrooted trees the base point survives as the residual
/// term, reported separately.
#[allow(clippy::too_many_arguments)]
fn build_algebra(
    mode: WitnessMode,
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    fs: &[FinSuppVec],
    g: &FinSuppVec,
    p_set: &[Vec<u32>],
    n: u32,
    params: &WitnessParams,
) -> Result<WitnessReport> {
    let rooted = mode == WitnessMode::Rooted;
    if rooted != spec.is_rooted() {
        return Err(Error::unsupported(match rooted {
            true => "rooted witness mode needs a rooted tree",
            false => "unrooted witness modes need an anchored-unrooted tree",
        }));
    }
    if fs.is_empty() {
        return Err(Error::invalid("need at least one base vector f_j"));
    }
    if p_set.iter().any(|a| a.len() != fs.len()) {
        return Err(Error::invalid(
            "exponent tuples must have one entry per base vector",
        ));
    }
    if n == 0 {
        return Err(Error::invalid("iterate n must be >= 1"));
    }
    for f in fs.iter().chain([g]) {
        for v in f.support() {
            spec.validate(v)?;
        }
    }

    let all_vecs: Vec<&FinSuppVec> = fs.iter().chain([g]).collect();
    // The bumps (inside X^n(supp g)) must avoid every support vertex.
    let mut n_min = minimal_collision_free_n(spec, g, &all_vecs)?;
    if rooted {
        // B^n must also annihilate every base monomial.
        let fs_refs: Vec<&FinSuppVec> = fs.iter().collect();
        n_min = n_min.max(max_generation(&fs_refs).map_or(1, |g| g as u32 + 1));
    }
    if n < n_min {
        return Err(Error::NeedsLargerN { given: n, minimal: n_min });
    }

    let sol = solve_exponents(p_set)?;
    let d = fs.len();

    // One bump per target vertex; every h_j shares the bump supports.
    let mut bumps: Vec<FinSuppVec> = vec![FinSuppVec::zero(); d];
    for (a, ga) in g.iter() {
        let reachable = descendants_with_products(w, spec, a, n, params.budget)?;
        match space {
            SpaceTag::L1 | SpaceTag::Lp(_) => {
                let (u_best, prod_best) = reachable
                    .iter()
                    .max_by(|x, y| {
                        x.1.norm().partial_cmp(&y.1.norm()).expect("finite moduli")
                    })
                    .cloned()
                    .expect("leafless trees have descendants");
                let z = ga / prod_best;
                for (j, bump) in bumps.iter_mut().enumerate() {
                    bump.add_assign_entry(u_best.clone(), zpow(z, sol.s[j]));
                }
            }
            SpaceTag::C0 => {
                let mu: Vec<Complex64> = reachable.iter().map(|(_, p)| *p).collect();
                let (x, _) = keylemma_optimal(&mu)?;
                // R_a = sum_u x_u / lambda(a -> u) e_u satisfies B^n R_a = e_a.
                let r_a = FinSuppVec::from_pairs(
                    reachable
                        .iter()
                        .zip(&x)
                        .map(|((u, prod), xu)| (u.clone(), xu / prod)),
                );
                for (j, bump) in bumps.iter_mut().enumerate() {
                    let term = r_a.power(sol.s[j]).scale(zpow(*ga, sol.s[j]));
                    *bump = bump.add(&term);
                }
            }
        }
    }

    // The bump supports must stay clear of every base vector and of g.
    for bump in &bumps {
        for u in bump.support() {
            if all_vecs.iter().any(|f| f.get(u) != Complex64::ZERO) {
                return Err(Error::NeedsLargerN { given: n, minimal: n + 1 });
            }
        }
    }

    let h: Vec<FinSuppVec> = fs.iter().zip(&bumps).map(|(f, b)| f.add(b)).collect();
    let approach_norms: Vec<f64> = bumps.iter().map(|b| b.norm(space)).collect();

    let hit_vec = shift::apply(w, spec, &monomial(&h, &sol.beta), n)?;
    let hit_error = hit_vec.sub(g).norm(space);
    let residual_norm = if rooted {
        None
    } else {
        Some(shift::apply(w, spec, &monomial(fs, &sol.beta), n)?.norm(space))
    };

    let mut collapse_norms = Vec::new();
    for alpha in p_set {
        if *alpha == sol.beta {
            continue;
        }
        let shifted = shift::apply(w, spec, &monomial(&h, alpha), n)?;
        collapse_norms.push((alpha.clone(), shifted.norm(space)));
    }

    Ok(WitnessReport {
        mode,
        space,
        n,
        exponents: Some(sol),
        m: None,
        h,
        approach_norms,
        hit_error,
        collapse_norms,
        residual_norm,
        f1: Vec::new(),
        f2: Vec::new(),
    })
}

/// Rooted-tree witness: `B^n h^beta = g` exactly, every other monomial
/// collapses, and each `h_j` stays near `f_j`.
#[allow(clippy::too_many_arguments)]
pub fn build_rooted(
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    fs: &[FinSuppVec],
    g: &FinSuppVec,
    p_set: &[Vec<u32>],
    n: u32,
    params: &WitnessParams,
) -> Result<WitnessReport> {
    build_algebra(WitnessMode::Rooted, space, w, spec, fs, g, p_set, n, params)
}

/// Unrooted-tree algebra witness under the vanishing-left hypothesis: the
/// bump construction plus the explicitly reported residual
/// `sum_a f^beta(a) lambda(Par^n(a) -> a) e_{Par^n(a)}`.
#[allow(clippy::too_many_arguments)]
pub fn build_unrooted_algebra(
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    fs: &[FinSuppVec],
    g: &FinSuppVec,
    p_set: &[Vec<u32>],
    n: u32,
    params: &WitnessParams,
) -> Result<WitnessReport> {
    build_algebra(
        WitnessMode::UnrootedAlgebra,
        space,
        w,
        spec,
        fs,
        g,
        p_set,
        n,
        params,
    )
}

/// Unrooted power witness: `B^n h^m = residual + g` exactly, with the F2
/// coefficients cancelled by the `e^{i pi / m}`-weighted correction term.
#[allow(clippy::too_many_arguments)]
pub fn build_unrooted_power(
    space: SpaceTag,
    w: &WeightFamily,
    spec: &TreeSpec,
    f: &FinSuppVec,
    g: &FinSuppVec,
    m: u32,
    n: u32,
    params: &WitnessParams,
) -> Result<WitnessReport> {
    if spec.is_rooted() {
        return Err(Error::unsupported(
            "the power witness is built on anchored-unrooted trees",
        ));
    }
    if m == 0 {
        return Err(Error::invalid("power m must be >= 1"));
    }
    if n == 0 {
        return Err(Error::invalid("iterate n must be >= 1"));
    }
    for v in f.support().chain(g.support()) {
        spec.validate(v)?;
    }
    let all_vecs = [f, g];
    let n_min = minimal_collision_free_n(spec, g, &all_vecs)?;
    if n < n_min {
        return Err(Error::NeedsLargerN { given: n, minimal: n_min });
    }

    // Union of the supports, classified by the left products at this n.
    let f_union: Vec<VertexAddr> = {
        let mut set: Vec<VertexAddr> = f.support().chain(g.support()).cloned().collect();
        set.sort();
        set.dedup();
        set
    };
    let in_f = |v: &VertexAddr| f_union.binary_search(v).is_ok();
    let mut f1: Vec<VertexAddr> = Vec::new();
    let mut f2_vertices: Vec<VertexAddr> = Vec::new();
    for a in &f_union {
        let par = spec.parent(a, n)?.expect("unrooted");
        let left = w.path_product(spec, &par, a)?.norm();
        if left <= params.tau {
            f1.push(a.clone());
        } else {
            f2_vertices.push(a.clone());
        }
    }

    let root_m = 1.0 / m as f64;
    let phase = Complex64::from_polar(1.0, std::f64::consts::PI / m as f64);

    // Bumps that reproduce g.
    let mut bump = FinSuppVec::zero();
    for (a, ga) in g.iter() {
        let reachable = descendants_with_products(w, spec, a, n, params.budget)?;
        match space {
            SpaceTag::L1 | SpaceTag::Lp(_) => {
                let (u_best, prod_best) = reachable
                    .iter()
                    .max_by(|x, y| {
                        x.1.norm().partial_cmp(&y.1.norm()).expect("finite moduli")
                    })
                    .cloned()
                    .expect("leafless trees have descendants");
                bump.add_assign_entry(u_best, zpow(ga / prod_best, root_m));
            }
            SpaceTag::C0 => {
                let mu: Vec<Complex64> = reachable.iter().map(|(_, p)| *p).collect();
                let (x, _) = keylemma_optimal(&mu)?;
                let r_a = FinSuppVec::from_pairs(
                    reachable
                        .iter()
                        .zip(&x)
                        .map(|((u, prod), xu)| (u.clone(), xu / prod)),
                );
                bump = bump.add(&r_a.power(root_m).scale(zpow(*ga, root_m)));
            }
        }
    }

    // Correction killing the F2 coefficients of B^n f^m.
    let mut correction = FinSuppVec::zero();
    let mut f2_assignments: Vec<F2Assignment> = Vec::new();
    let f2_active: Vec<VertexAddr> = f2_vertices
        .iter()
        .filter(|v| f.get(v) != Complex64::ZERO)
        .cloned()
        .collect();
    match space {
        SpaceTag::L1 | SpaceTag::Lp(_) => {
            // Sibling targets maximize the ratio; vertices sharing a target
            // form one J-set with a single correction entry.
            let mut j_sets: BTreeMap<VertexAddr, Vec<VertexAddr>> = BTreeMap::new();
            for v in &f2_active {
                let par = spec.parent(v, n)?.expect("unrooted");
                let mut best: Option<(VertexAddr, f64)> = None;
                for (u, prod) in descendants_with_products(w, spec, &par, n, params.budget)? {
                    if in_f(&u) {
                        continue;
                    }
                    let ratio = prod.norm();
                    if best.as_ref().is_none_or(|(_, b)| ratio > *b) {
                        best = Some((u, ratio));
                    }
                }
                let Some((b, _)) = best else {
                    return Err(Error::NeedsLargerN {
                        given: n,
                        minimal: scan_sibling_n(spec, v, n, f_union.len())?,
                    });
                };
                j_sets.entry(b).or_default().push(v.clone());
            }
            for (b, members) in &j_sets {
                let par = spec.parent(b, n)?.expect("unrooted");
                let prod_b = w.path_product(spec, &par, b)?;
                let mut coeff = Complex64::ZERO;
                for v in members {
                    let prod_v = w.path_product(spec, &par, v)?;
                    coeff += f.get(v).powu(m) * prod_v / prod_b;
                    f2_assignments.push(F2Assignment {
                        vertex: v.clone(),
                        sibling: b.clone(),
                        pre_cancel: (f.get(v).powu(m) * prod_v).norm(),
                        post_cancel: f64::NAN, // filled in below
                    });
                }
                correction.add_assign_entry(b.clone(), phase * zpow(coeff, root_m));
            }
        }
        SpaceTag::C0 => {
            // One representative per generation; same-generation F2 vertices
            // merge at their common ancestor Par^M.
            let mut by_gen: BTreeMap<i64, Vec<VertexAddr>> = BTreeMap::new();
            for v in &f2_active {
                by_gen.entry(v.generation()).or_default().push(v.clone());
            }
            let mut merge_depth = 0u32;
            for group in by_gen.values() {
                let rep = &group[0];
                for v in &group[1..] {
                    let mut k = 0u32;
                    loop {
                        let pa = spec.parent(rep, k)?.expect("unrooted");
                        let pb = spec.parent(v, k)?.expect("unrooted");
                        if pa == pb {
                            merge_depth = merge_depth.max(k);
                            break;
                        }
                        k += 1;
                    }
                }
            }
            if n < merge_depth {
                return Err(Error::NeedsLargerN { given: n, minimal: merge_depth });
            }
            for group in by_gen.values() {
                let rep = &group[0];
                let rep_merge = w.path_product(
                    spec,
                    &spec.parent(rep, merge_depth)?.expect("unrooted"),
                    rep,
                )?;
                let par = spec.parent(rep, n)?.expect("unrooted");
                // Key lemma over the non-F siblings with the ratio weights.
                let prod_rep = w.path_product(spec, &par, rep)?;
                let mut j_mu = Vec::new();
                let mut j_addr = Vec::new();
                for (u, prod) in descendants_with_products(w, spec, &par, n, params.budget)? {
                    if in_f(&u) {
                        continue;
                    }
                    j_addr.push(u);
                    j_mu.push(prod / prod_rep);
                }
                if j_mu.is_empty() {
                    return Err(Error::NeedsLargerN {
                        given: n,
                        minimal: scan_sibling_n(spec, rep, n, f_union.len())?,
                    });
                }
                let (x, _) = keylemma_optimal(&j_mu)?;
                let h_rep = FinSuppVec::from_pairs(
                    j_addr
                        .iter()
                        .zip(&j_mu)
                        .zip(&x)
                        .map(|((u, mu), xu)| (u.clone(), xu / mu)),
                );
                let mut coeff = Complex64::ZERO;
                for v in group {
                    let v_merge = w.path_product(
                        spec,
                        &spec.parent(v, merge_depth)?.expect("unrooted"),
                        v,
                    )?;
                    coeff += f.get(v).powu(m) * v_merge / rep_merge;
                    f2_assignments.push(F2Assignment {
                        vertex: v.clone(),
                        sibling: j_addr[0].clone(),
                        pre_cancel: (f.get(v).powu(m)
                            * w.path_product(spec, &par, v).expect("ancestry"))
                        .norm(),
                        post_cancel: f64::NAN,
                    });
                }
                correction =
                    correction.add(&h_rep.power(root_m).scale(phase * zpow(coeff, root_m)));
            }
        }
    }

    // All three groups of terms must have pairwise disjoint supports.
    for u in bump.support() {
        if in_f(u) || correction.get(u) != Complex64::ZERO {
            return Err(Error::NeedsLargerN { given: n, minimal: n + 1 });
        }
    }
    for u in correction.support() {
        if in_f(u) {
            return Err(Error::NeedsLargerN { given: n, minimal: n + 1 });
        }
    }

    let h = f.add(&bump).add(&correction);
    let approach = bump.add(&correction).norm(space);

    // residual = B^n (f restricted to F1)^m.
    let f_on_f1 = FinSuppVec::from_pairs(
        f.iter()
            .filter(|(v, _)| f1.binary_search(v).is_ok())
            .map(|(v, z)| (v.clone(), *z)),
    );
    let residual = shift::apply(w, spec, &f_on_f1.powu(m), n)?;
    let shifted = shift::apply(w, spec, &h.powu(m), n)?;
    let identity_err = shifted.sub(&residual).sub(g);
    let hit_error = identity_err.norm(space);

    for assign in &mut f2_assignments {
        let par = spec.parent(&assign.vertex, n)?.expect("unrooted");
        assign.post_cancel = identity_err.get(&par).norm();
    }

    Ok(WitnessReport {
        mode: WitnessMode::UnrootedPower,
        space,
        n,
        exponents: None,
        m: Some(m),
        h: vec![h],
        approach_norms: vec![approach],
        hit_error,
        collapse_norms: Vec::new(),
        residual_norm: Some(residual.norm(space)),
        f1,
        f2: f2_assignments,
    })
}

/// First iterate past `n` at which the parent of `v` has a descendant set
/// provably larger than the excluded support.
fn scan_sibling_n(spec: &TreeSpec, v: &VertexAddr, n: u32, excluded: usize) -> Result<u32> {
    for n2 in (n + 1)..=(n + MINIMAL_N_SCAN) {
        let par = spec.parent(v, n2)?.expect("unrooted");
        let count = spec.count_descendants(&par, n2, excluded + 2)?;
        if count.lower() > excluded as f64 {
            return Ok(n2);
        }
    }
    Err(Error::invalid(
        "no iterate with a free sibling found within the scan range",
    ))
}
