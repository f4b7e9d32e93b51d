use crate::error::Result;
use crate::space::SpaceTag;
use crate::tree::TreeSpec;
use crate::vectors::FinSuppVec;
use crate::weights::WeightFamily;

/// `B_lambda^n f`, exactly, via ancestor hops: each basis vector obeys
/// `B^n e_u = lambda(Par^n(u) -> u) e_{Par^n(u)}` when the ancestor exists
/// and vanishes otherwise (rooted trees). Finite support keeps this exact;
/// the definitional sum over `X^n(v)` is used only as a test oracle.
pub fn apply(
    w: &WeightFamily,
    spec: &TreeSpec,
    f: &FinSuppVec,
    n: u32,
) -> Result<FinSuppVec> {
    if n == 0 {
        return Ok(f.clone());
    }
    let mut out = FinSuppVec::zero();
    for (u, coeff) in f.iter() {
        // Entries shifted past the root vanish.
        if let Some(par) = spec.parent(u, n)? {
            let prod = w.path_product(spec, &par, u)?;
            out.add_assign_entry(par, prod * coeff);
        }
    }
    Ok(out)
}

/// The distance trajectory `(n, |B^n f - g|)` for `n = 0..=n_max`.
pub fn orbit_norms(
    w: &WeightFamily,
    spec: &TreeSpec,
    f: &FinSuppVec,
    g: &FinSuppVec,
    space: SpaceTag,
    n_max: u32,
) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let shifted = apply(w, spec, f, n)?;
        out.push((n, shifted.sub(g).norm(space)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::addr::VertexAddr;
    use num_complex::Complex64;

    fn addr(s: &str) -> VertexAddr {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn root_is_annihilated() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        let out = apply(&w, &spec, &FinSuppVec::unit(VertexAddr::root()), 1).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn two_steps_collect_the_path_product() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        let out = apply(&w, &spec, &FinSuppVec::unit(addr("r.1.2")), 2).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.get(&VertexAddr::root()), c(4.0, 0.0));
    }

    #[test]
    fn zero_iterations_is_identity() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(0.5, 0.5)).unwrap();
        let f = FinSuppVec::from_pairs([
            (addr("r.1"), c(1.0, -2.0)),
            (addr("r.2.2"), c(0.25, 0.0)),
        ]);
        assert_eq!(apply(&w, &spec, &f, 0).unwrap(), f);
    }

    #[test]
    fn linearity() {
        let spec = TreeSpec::nadic(3).unwrap();
        let w = WeightFamily::rolewicz(c(1.5, -0.5)).unwrap();
        let f = FinSuppVec::from_pairs([
            (addr("r.1.2"), c(1.0, 1.0)),
            (addr("r.3.3.2"), c(-2.0, 0.5)),
        ]);
        let g = FinSuppVec::from_pairs([
            (addr("r.1.2"), c(0.5, 0.0)),
            (addr("r.2"), c(0.0, 3.0)),
        ]);
        let a = c(2.0, 1.0);
        let b = c(-0.5, 0.25);
        for n in 0..4u32 {
            let lhs = apply(&w, &spec, &f.scale(a).add(&g.scale(b)), n).unwrap();
            let rhs = apply(&w, &spec, &f, n)
                .unwrap()
                .scale(a)
                .add(&apply(&w, &spec, &g, n).unwrap().scale(b));
            let diff = lhs.sub(&rhs).norm(SpaceTag::C0);
            assert!(diff <= 1e-12, "n = {n}, diff = {diff}");
        }
    }

    #[test]
    fn semigroup_property() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::dyadic_counterexample(2.0, None, None).unwrap();
        let f = FinSuppVec::from_pairs([
            (addr("r.1.2.1.2.2"), c(1.0, 0.5)),
            (addr("r.2.2.2.1.1"), c(-1.0, 0.25)),
        ]);
        for (a, b) in [(1u32, 1u32), (2, 1), (2, 3), (0, 4)] {
            let two_step = apply(&w, &spec, &apply(&w, &spec, &f, a).unwrap(), b).unwrap();
            let one_step = apply(&w, &spec, &f, a + b).unwrap();
            assert_eq!(
                two_step.support().collect::<Vec<_>>(),
                one_step.support().collect::<Vec<_>>()
            );
            let diff = two_step.sub(&one_step).norm(SpaceTag::C0);
            let scale = one_step.norm(SpaceTag::C0).max(1e-12);
            assert!(diff <= 1e-12 * scale, "a = {a}, b = {b}");
        }
    }

    #[test]
    fn orbit_norms_of_nilpotent_vector() {
        let spec = TreeSpec::dyadic();
        let w = WeightFamily::rolewicz(c(2.0, 0.0)).unwrap();
        // e_u at depth 5 with lambda = 2 hits 32 e_root at n = 5.
        let f = FinSuppVec::unit(addr("r.1.1.1.1.1"));
        let g = FinSuppVec::unit(VertexAddr::root()).scale(c(32.0, 0.0));
        let traj = orbit_norms(&w, &spec, &f, &g, SpaceTag::Lp(2.0), 6).unwrap();
        assert_eq!(traj.len(), 7);
        assert_eq!(traj[5], (5, 0.0));
        // After the support is exhausted the orbit sits at the origin.
        assert_eq!(traj[6], (6, g.norm(SpaceTag::Lp(2.0))));
        // n_max = 0 gives the single distance |f - g|.
        let single = orbit_norms(&w, &spec, &f, &g, SpaceTag::Lp(2.0), 0).unwrap();
        assert_eq!(single, vec![(0, f.sub(&g).norm(SpaceTag::Lp(2.0)))]);
    }

    /// Brute-force oracle: `(B^n f)(v) = sum_{u in X^n(v)} lambda(v -> u) f(u)`.
    fn apply_by_definition(
        w: &WeightFamily,
        spec: &TreeSpec,
        f: &FinSuppVec,
        n: u32,
    ) -> FinSuppVec {
        let mut out = FinSuppVec::zero();
        // Candidate output vertices: n-th ancestors of the support.
        let mut candidates: Vec<VertexAddr> = Vec::new();
        for u in f.support() {
            if let Some(p) = spec.parent(u, n).unwrap() {
                if !candidates.contains(&p) {
                    candidates.push(p);
                }
            }
        }
        for v in candidates {
            let kids = spec.children_n(&v, n, 1 << 20).unwrap();
            assert!(!kids.truncated);
            let mut acc = Complex64::ZERO;
            for u in &kids.vertices {
                let fu = f.get(u);
                if fu != Complex64::ZERO {
                    acc += w.path_product(spec, &v, u).unwrap() * fu;
                }
            }
            out.add_assign_entry(v, acc);
        }
        out
    }

    #[test]
    fn ancestor_hops_match_definitional_sum() {
        let spec = TreeSpec::nadic(3).unwrap();
        let w = WeightFamily::rolewicz(c(0.8, 0.6)).unwrap();
        let f = FinSuppVec::from_pairs([
            (addr("r.1.2.3"), c(1.0, 0.0)),
            (addr("r.2.2.2"), c(0.0, 1.0)),
            (addr("r.3"), c(2.0, -1.0)),
        ]);
        for n in 0..=4u32 {
            let fast = apply(&w, &spec, &f, n).unwrap();
            let slow = apply_by_definition(&w, &spec, &f, n);
            let diff = fast.sub(&slow).norm(SpaceTag::C0);
            assert!(diff <= 1e-12, "n = {n}");
        }
    }
}
