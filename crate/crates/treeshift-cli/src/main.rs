mod gallery;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use treeshift::files::{
    parse_exponent_set, parse_tree_file, parse_vector_literal, parse_weight_file,
};
use treeshift::report::{
    render_criterion_csv, render_criterion_text, render_fertility_text, render_witness_text,
};
use treeshift::{
    assemble_verdict, build_rooted, build_unrooted_algebra, build_unrooted_power, CritParams,
    CriterionVerdict, Error, FertilityVerdict, FinSuppVec, SpaceTag, TheoremId, TreeSpec,
    WeightFamily, WitnessMode, WitnessParams, WitnessReport,
};

/// Exit codes: 0 success/affirmative, 1 negative analytic outcome,
/// 2 usage error, 3 stalled verdict, 4 needs-larger-n.
const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_STALLED: u8 = 3;
const EXIT_NEEDS_LARGER_N: u8 = 4;

#[derive(Parser)]
#[command(
    name = "treeshift",
    about = "Weighted backward shifts on directed trees: norms, hypercyclicity criteria, witness vectors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a criterion sequence over a probe set and report the verdict.
    Analyze {
        /// Tree spec file (TOML).
        #[arg(long)]
        tree: PathBuf,
        /// Weight spec file (TOML).
        #[arg(long)]
        weights: PathBuf,
        /// Sequence space: l1, l<p> (e.g. l2), or c0.
        #[arg(long)]
        space: String,
        /// Criterion id: rooted-hc-l1 | rooted-hc-lp | rooted-hc-c0 |
        /// rooted-algebra-iv | unrooted-v | unrooted-c0 | symmetric | free-left-end.
        #[arg(long)]
        theorem: String,
        #[arg(long, default_value_t = 40)]
        horizon: u32,
        /// Growth threshold a witness subsequence must pass.
        #[arg(long, default_value_t = 1e3)]
        threshold: f64,
        /// Probe vertices, `;`-separated addresses (default: generations |g| <= 3, capped at 64).
        #[arg(long)]
        probes: Option<String>,
        /// Enumeration budget per descendant set.
        #[arg(long, default_value_t = 4096)]
        budget: usize,
        /// Output directory (default: $TREESHIFT_OUT or the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct the perturbation vectors whose shifted monomials hit a target.
    Witness {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        space: String,
        /// rooted | unrooted-power | unrooted-algebra.
        #[arg(long)]
        mode: String,
        /// Base vector literals (repeatable, one per generator; missing ones are zero).
        #[arg(long = "f")]
        f: Vec<String>,
        /// Target vector literal, e.g. "r=1,0;r.1=0,-2".
        #[arg(long = "g")]
        g: String,
        /// Exponent set P, e.g. "1;2" or "1,0;0,1;1,1" (algebra modes).
        #[arg(long = "set", default_value = "1;2")]
        p_set: String,
        /// Power m (unrooted-power mode).
        #[arg(long, default_value_t = 2)]
        m: u32,
        /// Iterate of the shift.
        #[arg(long, default_value_t = 20)]
        n: u32,
        /// F1/F2 classification threshold (power mode).
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Tolerance on approach/collapse/residual norms for exit 0.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 4096)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a fertile vertex.
    Fertile {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 8)]
        horizon: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a named example end-to-end and compare against the stored
    /// expected outcome.
    Gallery {
        /// rolewicz-threshold | dyadic-counterexample | menthe |
        /// fertile-no-algebra | bilateral-rolewicz | no-fertile-staircase.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rewrite the stored expected outcome instead of comparing.
        #[arg(long)]
        regen: bool,
    },
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("TREESHIFT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load_tree(path: &Path) -> Result<TreeSpec, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_tree_file(&text).map_err(|e| e.to_string())
}

fn load_weights(path: &Path, spec: &TreeSpec) -> Result<WeightFamily, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_weight_file(&text, spec).map_err(|e| e.to_string())
}

fn usage_exit(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn lib_error_exit(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::NeedsLargerN { .. } => ExitCode::from(EXIT_NEEDS_LARGER_N),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

/// The witness acceptance rule: the beta-monomial must hit the target at
/// fine precision while every side term sits below epsilon.
pub(crate) fn witness_passes(rep: &WitnessReport, g: &FinSuppVec, epsilon: f64) -> bool {
    let hit_ok = rep.hit_error <= 1e-9 * (1.0 + g.norm(rep.space));
    let approach_ok = rep.approach_norms.iter().all(|&a| a <= epsilon);
    let collapse_ok = rep.collapse_norms.iter().all(|(_, v)| *v <= epsilon);
    let residual_ok = match rep.mode {
        WitnessMode::UnrootedPower => rep.residual_norm.is_none_or(|r| r <= epsilon),
        // In algebra mode the residual is already inside hit_error.
        _ => true,
    };
    hit_ok && approach_ok && collapse_ok && residual_ok
}

#[allow(clippy::too_many_arguments)]
fn run_analyze(
    tree: &Path,
    weights: &Path,
    space: &str,
    theorem: &str,
    horizon: u32,
    threshold: f64,
    probes: &Option<String>,
    budget: usize,
    out: &Option<PathBuf>,
) -> ExitCode {
    let spec = match load_tree(tree) {
        Ok(s) => s,
        Err(e) => return usage_exit(&e),
    };
    let w = match load_weights(weights, &spec) {
        Ok(w) => w,
        Err(e) => return usage_exit(&e),
    };
    let space: SpaceTag = match space.parse() {
        Ok(s) => s,
        Err(e) => return usage_exit(&format!("{e}")),
    };
    let theorem: TheoremId = match theorem.parse() {
        Ok(t) => t,
        Err(e) => return usage_exit(&format!("{e}")),
    };
    let probe_vec = match probes {
        None => None,
        Some(text) => {
            let mut v = Vec::new();
            for part in text.split(';') {
                match part.trim().parse() {
                    Ok(a) => v.push(a),
                    Err(e) => return usage_exit(&format!("{e}")),
                }
            }
            Some(v)
        }
    };
    let params = CritParams { horizon, growth_threshold: threshold, budget, probes: probe_vec };
    let report = match assemble_verdict(theorem, space, &w, &spec, &params) {
        Ok(r) => r,
        Err(e) => return lib_error_exit(&e),
    };
    let text = render_criterion_text(&report);
    let csv = render_criterion_csv(&report);
    print!("{text}");
    let dir = out_dir(out);
    if let Err(e) = write_out(&dir, "criterion-report.txt", &text)
        .and_then(|()| write_out(&dir, "criterion-report.csv", &csv))
    {
        return usage_exit(&e);
    }
    match report.verdict {
        CriterionVerdict::ExactDivergence { .. }
        | CriterionVerdict::DivergesUpToHorizon { .. } => ExitCode::from(EXIT_OK),
        CriterionVerdict::StalledBelow { .. } => ExitCode::from(EXIT_STALLED),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_witness(
    tree: &Path,
    weights: &Path,
    space: &str,
    mode: &str,
    f_literals: &[String],
    g_literal: &str,
    p_literal: &str,
    m: u32,
    n: u32,
    tau: f64,
    epsilon: f64,
    budget: usize,
    out: &Option<PathBuf>,
) -> ExitCode {
    let spec = match load_tree(tree) {
        Ok(s) => s,
        Err(e) => return usage_exit(&e),
    };
    let w = match load_weights(weights, &spec) {
        Ok(w) => w,
        Err(e) => return usage_exit(&e),
    };
    let space: SpaceTag = match space.parse() {
        Ok(s) => s,
        Err(e) => return usage_exit(&format!("{e}")),
    };
    let g = match parse_vector_literal(g_literal, &spec) {
        Ok(g) => g,
        Err(e) => return usage_exit(&format!("{e}")),
    };
    let mut fs_parsed: Vec<FinSuppVec> = Vec::new();
    for lit in f_literals {
        match parse_vector_literal(lit, &spec) {
            Ok(f) => fs_parsed.push(f),
            Err(e) => return usage_exit(&format!("{e}")),
        }
    }
    let params = WitnessParams { budget, tau };
    let built = match mode {
        "rooted" | "unrooted-algebra" => {
            let p_set = match parse_exponent_set(p_literal) {
                Ok(p) => p,
                Err(e) => return usage_exit(&format!("{e}")),
            };
            let d = p_set.first().map_or(1, Vec::len);
            while fs_parsed.len() < d {
                fs_parsed.push(FinSuppVec::zero());
            }
            if mode == "rooted" {
                build_rooted(space, &w, &spec, &fs_parsed, &g, &p_set, n, &params)
            } else {
                build_unrooted_algebra(space, &w, &spec, &fs_parsed, &g, &p_set, n, &params)
            }
        }
        "unrooted-power" => {
            let f = fs_parsed.first().cloned().unwrap_or_default();
            build_unrooted_power(space, &w, &spec, &f, &g, m, n, &params)
        }
        other => return usage_exit(&format!("unknown witness mode `{other}`")),
    };
    let report = match built {
        Ok(r) => r,
        Err(e) => return lib_error_exit(&e),
    };
    let text = render_witness_text(&report);
    print!("{text}");
    let dir = out_dir(out);
    if let Err(e) = write_out(&dir, "witness-report.txt", &text) {
        return usage_exit(&e);
    }
    if witness_passes(&report, &g, epsilon) {
        ExitCode::from(EXIT_OK)
    } else {
        ExitCode::from(EXIT_NEGATIVE)
    }
}

fn run_fertile(tree: &Path, horizon: u32, out: &Option<PathBuf>) -> ExitCode {
    let spec = match load_tree(tree) {
        Ok(s) => s,
        Err(e) => return usage_exit(&e),
    };
    let verdict = match spec.find_fertile(horizon) {
        Ok(v) => v,
        Err(e) => return lib_error_exit(&e),
    };
    let text = render_fertility_text(&spec.describe(), horizon, &verdict);
    print!("{text}");
    let dir = out_dir(out);
    if let Err(e) = write_out(&dir, "fertility-report.txt", &text) {
        return usage_exit(&e);
    }
    match verdict {
        FertilityVerdict::Fertile { .. } => ExitCode::from(EXIT_OK),
        FertilityVerdict::ProvenNone { .. } => ExitCode::from(EXIT_NEGATIVE),
        FertilityVerdict::Inconclusive { .. } => ExitCode::from(EXIT_STALLED),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Analyze {
            tree,
            weights,
            space,
            theorem,
            horizon,
            threshold,
            probes,
            budget,
            out,
        } => run_analyze(
            tree, weights, space, theorem, *horizon, *threshold, probes, *budget, out,
        ),
        Command::Witness {
            tree,
            weights,
            space,
            mode,
            f,
            g,
            p_set,
            m,
            n,
            tau,
            epsilon,
            budget,
            out,
        } => run_witness(
            tree, weights, space, mode, f, g, p_set, *m, *n, *tau, *epsilon, *budget, out,
        ),
        Command::Fertile { tree, horizon, out } => run_fertile(tree, *horizon, out),
        Command::Gallery { name, out, regen } => gallery::run(name, &out_dir(out), *regen),
    }
}
