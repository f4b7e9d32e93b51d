//! Plain-text and CSV renderings of the analysis reports. All iteration
//! orders are deterministic, so identical inputs produce byte-identical
//! output.

use std::fmt::Write as _;

use crate::criteria::CriterionReport;
use crate::tree::FertilityVerdict;
use crate::witness::{WitnessMode, WitnessReport};

pub fn render_criterion_text(r: &CriterionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "treeshift criterion report");
    let _ = writeln!(out, "theorem: {}", r.theorem);
    let _ = writeln!(out, "space: {}", r.space);
    let _ = writeln!(out, "tree: {}", r.tree_desc);
    let _ = writeln!(out, "weights: {}", r.weight_desc);
    let _ = writeln!(out, "horizon: {}", r.horizon);
    let _ = writeln!(out, "growth-threshold: {}", r.growth_threshold);
    let _ = write!(out, "probes ({}):", r.probes.len());
    for v in &r.probes {
        let _ = write!(out, " {v}");
    }
    let _ = writeln!(out);
    if let Some(note) = &r.note {
        let _ = writeln!(out, "note: {note}");
    }
    let _ = writeln!(out, "verdict: {}", r.verdict);
    let _ = writeln!(out, "min over probes by n:");
    for (n, m) in &r.min_by_n {
        let _ = writeln!(out, "  n={n} {m}");
    }
    out
}

/// One row per `(vertex, n)` cell.
pub fn render_criterion_csv(r: &CriterionReport) -> String {
    let mut out = String::from("vertex,n,value,exact,truncated\n");
    for cell in &r.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.probes[cell.vertex], cell.n, cell.value, cell.exact, cell.truncated
        );
    }
    out
}

pub fn render_witness_text(r: &WitnessReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "treeshift witness report");
    let _ = writeln!(out, "mode: {}", r.mode);
    let _ = writeln!(out, "space: {}", r.space);
    let _ = writeln!(out, "n: {}", r.n);
    if let Some(m) = r.m {
        let _ = writeln!(out, "m: {m}");
    }
    if let Some(sol) = &r.exponents {
        let _ = writeln!(out, "beta: {}", fmt_tuple(&sol.beta));
        let _ = write!(out, "s:");
        for s in &sol.s {
            let _ = write!(out, " {s}");
        }
        let _ = writeln!(out);
        let _ = write!(out, "L-values:");
        for (alpha, v) in &sol.values {
            let _ = write!(out, " {}={v}", fmt_tuple(alpha));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "margin: {}", sol.margin);
    }
    for (j, h) in r.h.iter().enumerate() {
        let _ = writeln!(out, "h_{}: {h}", j + 1);
    }
    let _ = write!(out, "approach |h_j - f_j|:");
    for a in &r.approach_norms {
        let _ = write!(out, " {a}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "hit-error: {}", r.hit_error);
    if !r.collapse_norms.is_empty() {
        let _ = write!(out, "collapse |B^n h^alpha|:");
        for (alpha, v) in &r.collapse_norms {
            let _ = write!(out, " {}={v}", fmt_tuple(alpha));
        }
        let _ = writeln!(out);
    }
    if let Some(res) = r.residual_norm {
        let _ = writeln!(out, "residual-norm: {res}");
    }
    if r.mode == WitnessMode::UnrootedPower {
        let _ = write!(out, "F1:");
        for v in &r.f1 {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "F2 ({} vertices):", r.f2.len());
        for a in &r.f2 {
            let _ = writeln!(
                out,
                "  {} -> sibling {} pre-cancel={} post-cancel={}",
                a.vertex, a.sibling, a.pre_cancel, a.post_cancel
            );
        }
    }
    out
}

pub fn render_fertility_text(tree_desc: &str, horizon: u32, verdict: &FertilityVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "treeshift fertility report");
    let _ = writeln!(out, "tree: {tree_desc}");
    let _ = writeln!(out, "horizon: {horizon}");
    let _ = writeln!(out, "verdict: {verdict}");
    out
}

fn fmt_tuple(alpha: &[u32]) -> String {
    let mut s = String::from("(");
    for (i, a) in alpha.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{a}");
    }
    s.push(')');
    s
}
