//! Weighted backward shifts on sequence spaces of directed trees.
//!
//! The crate models leafless directed trees (rooted or anchored-unrooted)
//! by finite branching rules, weight families with closed-form tail sums,
//! finitely supported vectors under the coordinatewise product, and the
//! backward shift `B_lambda` acting on them. On top of that it evaluates
//! the hypercyclicity and hypercyclic-algebra criterion sequences for
//! these operators and constructs the explicit perturbation vectors whose
//! shifted powers hit a prescribed target while every other monomial
//! collapses.

#![forbid(unsafe_code)]

pub mod addr;
pub mod criteria;
pub mod error;
pub mod files;
pub mod report;
pub mod shift;
pub mod space;
pub mod tree;
pub mod vectors;
pub mod weights;
pub mod witness;

pub use addr::VertexAddr;
pub use criteria::{
    assemble_verdict, crit_left, crit_ratio, crit_sum, crit_sup, CritParams, CritValue,
    CriterionReport, CriterionVerdict, RatioValue, TheoremId,
};
pub use error::{Error, Result};
pub use shift::{apply, orbit_norms};
pub use space::SpaceTag;
pub use tree::{
    ChildCount, CountBound, Enumeration, FertilityVerdict, SpineLevel, TreeKind, TreeSpec,
    TreeTag, UnrootedSpine,
};
pub use vectors::{monomial, FinSuppVec};
pub use weights::{
    operator_norm, theta, NormBound, NormReport, ScalarSeq, WeightFamily, WeightTag,
};
pub use witness::{
    build_rooted, build_unrooted_algebra, build_unrooted_power, keylemma_optimal,
    solve_exponents, ExponentSolution, WitnessMode, WitnessParams, WitnessReport,
};
