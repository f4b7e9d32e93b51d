//! On-disk formats: tree spec files and weight spec files (TOML), the
//! inline vector literal, and the exponent-set literal. Both documents
//! round-trip losslessly through [`render_tree_file`] / [`render_weight_file`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::addr::VertexAddr;
use crate::error::{Error, Result};
use crate::tree::{ChildCount, SpineLevel, TreeSpec, TreeTag, UnrootedSpine};
use crate::vectors::FinSuppVec;
use crate::weights::{ScalarSeq, WeightFamily, WeightTag};

fn parse_err(what: &str, e: impl std::fmt::Display) -> Error {
    Error::Parse { what: what.into(), reason: e.to_string() }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CountDto {
    Finite(u32),
    Named(String),
}

impl CountDto {
    fn decode(&self) -> Result<ChildCount> {
        match self {
            CountDto::Finite(n) => Ok(ChildCount::Finite(*n)),
            CountDto::Named(s) if s == "countably-infinite" => {
                Ok(ChildCount::CountablyInfinite)
            }
            CountDto::Named(s) => Err(parse_err(
                "child count",
                format!("expected an integer or \"countably-infinite\", got \"{s}\""),
            )),
        }
    }

    fn encode(c: ChildCount) -> Self {
        match c {
            ChildCount::Finite(n) => CountDto::Finite(n),
            ChildCount::CountablyInfinite => CountDto::Named("countably-infinite".into()),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SpineLevelDto {
    arity: CountDto,
    spine_index: u32,
}

impl SpineLevelDto {
    fn decode(&self) -> Result<SpineLevel> {
        SpineLevel::new(self.arity.decode()?, self.spine_index)
    }

    fn encode(l: SpineLevel) -> Self {
        SpineLevelDto { arity: CountDto::encode(l.arity), spine_index: l.spine_index }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ArityOverrideDto {
    addr: String,
    count: CountDto,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArityDto {
    default: CountDto,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<ArityOverrideDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpineDto {
    #[serde(default, rename = "level", skip_serializing_if = "Vec::is_empty")]
    levels: Vec<SpineLevelDto>,
    default: SpineLevelDto,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeBuiltinDto {
    tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    below: Option<CountDto>,
    #[serde(default, rename = "level", skip_serializing_if = "Vec::is_empty")]
    levels: Vec<SpineLevelDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    default_level: Option<SpineLevelDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeFileDto {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    builtin: Option<TreeBuiltinDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arity: Option<ArityDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spine: Option<SpineDto>,
}

/// Parses a tree spec document (one tree per document).
pub fn parse_tree_file(text: &str) -> Result<TreeSpec> {
    let dto: TreeFileDto = toml::from_str(text).map_err(|e| parse_err("tree file", e))?;
    let rooted = match dto.kind.as_str() {
        "rooted" => true,
        "anchored-unrooted" => false,
        other => {
            return Err(parse_err(
                "tree file",
                format!("kind must be \"rooted\" or \"anchored-unrooted\", got \"{other}\""),
            ))
        }
    };
    match (&dto.builtin, &dto.arity) {
        (Some(b), None) => match b.tag.as_str() {
            "n-adic" => {
                let n = b.n.ok_or_else(|| parse_err("tree file", "n-adic needs `n`"))?;
                if !rooted {
                    return Err(parse_err("tree file", "n-adic trees are rooted"));
                }
                TreeSpec::nadic(n)
            }
            "dyadic" => {
                if !rooted {
                    return Err(parse_err("tree file", "the dyadic tree is rooted"));
                }
                Ok(TreeSpec::dyadic())
            }
            "menthe" => {
                if !rooted {
                    return Err(parse_err("tree file", "the menthe tree is rooted"));
                }
                Ok(TreeSpec::menthe())
            }
            "no-fertile-staircase" => {
                if !rooted {
                    return Err(parse_err("tree file", "the staircase tree is rooted"));
                }
                Ok(TreeSpec::staircase())
            }
            "free-left-end-spine" => {
                if rooted {
                    return Err(parse_err("tree file", "spine trees are anchored-unrooted"));
                }
                let below = b
                    .below
                    .as_ref()
                    .ok_or_else(|| parse_err("tree file", "spine needs `below`"))?
                    .decode()?;
                let levels = b
                    .levels
                    .iter()
                    .map(SpineLevelDto::decode)
                    .collect::<Result<Vec<_>>>()?;
                let default = match &b.default_level {
                    Some(d) => d.decode()?,
                    None => SpineLevel::singleton(),
                };
                TreeSpec::spine_tree(levels, default, below)
            }
            other => Err(parse_err("tree file", format!("unknown builtin tag \"{other}\""))),
        },
        (None, Some(a)) => {
            let default = a.default.decode()?;
            let mut overrides = BTreeMap::new();
            for o in &a.overrides {
                let addr: VertexAddr = o.addr.parse()?;
                overrides.insert(addr, o.count.decode()?);
            }
            if rooted {
                TreeSpec::rooted_table(default, overrides)
            } else {
                let spine = dto
                    .spine
                    .as_ref()
                    .ok_or_else(|| parse_err("tree file", "unrooted tables need a [spine]"))?;
                let levels = spine
                    .levels
                    .iter()
                    .map(SpineLevelDto::decode)
                    .collect::<Result<Vec<_>>>()?;
                TreeSpec::unrooted_table(
                    UnrootedSpine { levels, default: spine.default.decode()? },
                    default,
                    overrides,
                )
            }
        }
        _ => Err(parse_err(
            "tree file",
            "exactly one of [builtin] or [arity] is required",
        )),
    }
}

/// Serializes a tree spec back to the document format.
pub fn render_tree_file(spec: &TreeSpec) -> String {
    let kind = if spec.is_rooted() { "rooted" } else { "anchored-unrooted" }.to_string();
    let dto = match spec.tag() {
        Some(TreeTag::NAdic(n)) => TreeFileDto {
            kind,
            builtin: Some(TreeBuiltinDto {
                tag: "n-adic".into(),
                n: Some(n),
                below: None,
                levels: Vec::new(),
                default_level: None,
            }),
            arity: None,
            spine: None,
        },
        Some(TreeTag::Menthe) => TreeFileDto {
            kind,
            builtin: Some(TreeBuiltinDto {
                tag: "menthe".into(),
                n: None,
                below: None,
                levels: Vec::new(),
                default_level: None,
            }),
            arity: None,
            spine: None,
        },
        Some(TreeTag::Staircase) => TreeFileDto {
            kind,
            builtin: Some(TreeBuiltinDto {
                tag: "no-fertile-staircase".into(),
                n: None,
                below: None,
                levels: Vec::new(),
                default_level: None,
            }),
            arity: None,
            spine: None,
        },
        Some(TreeTag::Spine) => {
            let spine = spec.spine().expect("spine tree");
            let below = spec.arity(&VertexAddr::anchor()).expect("anchor arity");
            TreeFileDto {
                kind,
                builtin: Some(TreeBuiltinDto {
                    tag: "free-left-end-spine".into(),
                    n: None,
                    below: Some(CountDto::encode(below)),
                    levels: spine.levels.iter().map(|l| SpineLevelDto::encode(*l)).collect(),
                    default_level: Some(SpineLevelDto::encode(spine.default)),
                }),
                arity: None,
                spine: None,
            }
        }
        None => {
            let (default, overrides) = spec.arity_table().expect("untagged trees are tables");
            TreeFileDto {
                kind,
                builtin: None,
                arity: Some(ArityDto {
                    default: CountDto::encode(default),
                    overrides: overrides
                        .iter()
                        .map(|(a, c)| ArityOverrideDto {
                            addr: a.to_string(),
                            count: CountDto::encode(*c),
                        })
                        .collect(),
                }),
                spine: spec.spine().map(|s| SpineDto {
                    levels: s.levels.iter().map(|l| SpineLevelDto::encode(*l)).collect(),
                    default: SpineLevelDto::encode(s.default),
                }),
            }
        }
    };
    toml::to_string(&dto).expect("tree DTOs serialize")
}

#[derive(Debug, Serialize, Deserialize)]
struct GenValueDto {
    gen: i64,
    value: (f64, f64),
}

#[derive(Debug, Serialize, Deserialize)]
struct AddrValueDto {
    addr: String,
    value: (f64, f64),
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightBuiltinDto {
    tag: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m0: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_seq: Option<ScalarSeq>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_seq: Option<ScalarSeq>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_lo: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_hi: Option<i64>,
    #[serde(default, rename = "middle", skip_serializing_if = "Vec::is_empty")]
    middle: Vec<GenValueDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    default: Option<(f64, f64)>,
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<GenValueDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightTableDto {
    default: (f64, f64),
    #[serde(default, rename = "override", skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<AddrValueDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFileDto {
    #[serde(skip_serializing_if = "Option::is_none")]
    tree: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    builtin: Option<WeightBuiltinDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<WeightTableDto>,
}

fn c(pair: (f64, f64)) -> Complex64 {
    Complex64::new(pair.0, pair.1)
}

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

/// Checks the weight file's declared tree against the actual spec.
fn check_tree_reference(reference: &str, spec: &TreeSpec) -> Result<()> {
    let ok = match reference {
        "any" => true,
        "n-adic" => matches!(spec.tag(), Some(TreeTag::NAdic(_))),
        "dyadic" => spec.tag() == Some(TreeTag::NAdic(2)),
        "menthe" => spec.tag() == Some(TreeTag::Menthe),
        "no-fertile-staircase" => spec.tag() == Some(TreeTag::Staircase),
        "free-left-end-spine" => spec.tag() == Some(TreeTag::Spine),
        "table" => spec.tag().is_none(),
        other => {
            return Err(parse_err(
                "weight file",
                format!("unknown tree reference \"{other}\""),
            ))
        }
    };
    if !ok {
        return Err(Error::invalid(format!(
            "weight file expects tree \"{reference}\" but the tree is {}",
            spec.describe()
        )));
    }
    Ok(())
}

/// Parses a weight spec document against the tree it will act on.
pub fn parse_weight_file(text: &str, spec: &TreeSpec) -> Result<WeightFamily> {
    let dto: WeightFileDto = toml::from_str(text).map_err(|e| parse_err("weight file", e))?;
    if let Some(reference) = &dto.tree {
        check_tree_reference(reference, spec)?;
    }
    match (&dto.builtin, &dto.table) {
        (Some(b), None) => match b.tag.as_str() {
            "rolewicz" => {
                let lambda = b
                    .lambda
                    .ok_or_else(|| parse_err("weight file", "rolewicz needs `lambda`"))?;
                WeightFamily::rolewicz(c(lambda))
            }
            "dyadic-counterexample" => {
                let p = b
                    .p
                    .ok_or_else(|| parse_err("weight file", "dyadic-counterexample needs `p`"))?;
                WeightFamily::dyadic_counterexample(p, b.m0, b.alpha)
            }
            "menthe" => {
                let alpha = b
                    .alpha_seq
                    .ok_or_else(|| parse_err("weight file", "menthe needs `alpha_seq`"))?;
                let beta = b
                    .beta_seq
                    .ok_or_else(|| parse_err("weight file", "menthe needs `beta_seq`"))?;
                WeightFamily::menthe(alpha, beta)
            }
            "fertile-no-algebra" => {
                let p = b
                    .p
                    .ok_or_else(|| parse_err("weight file", "fertile-no-algebra needs `p`"))?;
                WeightFamily::fertile_no_algebra(spec, p)
            }
            "bilateral-rolewicz" => {
                let lambda = b
                    .lambda
                    .ok_or_else(|| parse_err("weight file", "bilateral-rolewicz needs `lambda`"))?;
                let n_lo = b
                    .n_lo
                    .ok_or_else(|| parse_err("weight file", "bilateral-rolewicz needs `n_lo`"))?;
                let n_hi = b
                    .n_hi
                    .ok_or_else(|| parse_err("weight file", "bilateral-rolewicz needs `n_hi`"))?;
                let middle: BTreeMap<i64, Complex64> =
                    b.middle.iter().map(|m| (m.gen, c(m.value))).collect();
                WeightFamily::bilateral_rolewicz(spec, c(lambda), n_lo, n_hi, middle)
            }
            "symmetric" => {
                let default = b
                    .default
                    .ok_or_else(|| parse_err("weight file", "symmetric needs `default`"))?;
                let overrides: BTreeMap<i64, Complex64> =
                    b.overrides.iter().map(|m| (m.gen, c(m.value))).collect();
                WeightFamily::symmetric_by_generation(c(default), overrides)
            }
            other => Err(parse_err(
                "weight file",
                format!("unknown builtin tag \"{other}\""),
            )),
        },
        (None, Some(t)) => {
            let mut overrides = BTreeMap::new();
            for o in &t.overrides {
                let addr: VertexAddr = o.addr.parse()?;
                spec.validate(&addr)?;
                overrides.insert(addr, c(o.value));
            }
            WeightFamily::table(c(t.default), overrides)
        }
        _ => Err(parse_err(
            "weight file",
            "exactly one of [builtin] or [table] is required",
        )),
    }
}

/// Serializes a weight family back to the document format.
pub fn render_weight_file(w: &WeightFamily) -> String {
    let builtin = |b: WeightBuiltinDto| WeightFileDto {
        tree: None,
        builtin: Some(b),
        table: None,
    };
    let empty = WeightBuiltinDto {
        tag: String::new(),
        lambda: None,
        p: None,
        m0: None,
        alpha: None,
        alpha_seq: None,
        beta_seq: None,
        n_lo: None,
        n_hi: None,
        middle: Vec::new(),
        default: None,
        overrides: Vec::new(),
    };
    let dto = match w.tag() {
        WeightTag::Rolewicz => builtin(WeightBuiltinDto {
            tag: "rolewicz".into(),
            lambda: w.rolewicz_lambda().map(pair),
            ..empty
        }),
        WeightTag::DyadicCounterexample => {
            let (p, m0, alpha) = w.dyadic_params().expect("dyadic");
            builtin(WeightBuiltinDto {
                tag: "dyadic-counterexample".into(),
                p: Some(p),
                m0: Some(m0),
                alpha: Some(alpha),
                ..empty
            })
        }
        WeightTag::Menthe => {
            let (alpha_seq, beta_seq) = w.menthe_seqs().expect("menthe");
            builtin(WeightBuiltinDto {
                tag: "menthe".into(),
                alpha_seq: Some(alpha_seq),
                beta_seq: Some(beta_seq),
                ..empty
            })
        }
        WeightTag::FertileNoAlgebra => {
            let (p, _) = w.fertile_params().expect("fertile");
            builtin(WeightBuiltinDto { tag: "fertile-no-algebra".into(), p: Some(p), ..empty })
        }
        WeightTag::BilateralRolewicz => {
            let (lambda, n_lo, n_hi, middle) = w.bilateral_params().expect("bilateral");
            builtin(WeightBuiltinDto {
                tag: "bilateral-rolewicz".into(),
                lambda: Some(pair(lambda)),
                n_lo: Some(n_lo),
                n_hi: Some(n_hi),
                middle: middle
                    .iter()
                    .map(|(g, z)| GenValueDto { gen: *g, value: pair(*z) })
                    .collect(),
                ..empty
            })
        }
        WeightTag::Symmetric => {
            let (default, overrides) = w.symmetric_table().expect("symmetric");
            builtin(WeightBuiltinDto {
                tag: "symmetric".into(),
                default: Some(pair(default)),
                overrides: overrides
                    .iter()
                    .map(|(g, z)| GenValueDto { gen: *g, value: pair(*z) })
                    .collect(),
                ..empty
            })
        }
        WeightTag::Table => {
            let (default, overrides) = w.address_table().expect("table");
            WeightFileDto {
                tree: None,
                builtin: None,
                table: Some(WeightTableDto {
                    default: pair(default),
                    overrides: overrides
                        .iter()
                        .map(|(a, z)| AddrValueDto { addr: a.to_string(), value: pair(*z) })
                        .collect(),
                }),
            }
        }
    };
    toml::to_string(&dto).expect("weight DTOs serialize")
}

/// Parses the inline vector literal: `addr=re,im` entries joined by `;`,
/// or `0` for the zero vector.
pub fn parse_vector_literal(text: &str, spec: &TreeSpec) -> Result<FinSuppVec> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "0" {
        return Ok(FinSuppVec::zero());
    }
    let mut out = FinSuppVec::zero();
    for part in trimmed.split(';') {
        let part = part.trim();
        let (addr_s, value_s) = part
            .split_once('=')
            .ok_or_else(|| parse_err("vector literal", format!("missing `=` in \"{part}\"")))?;
        let addr: VertexAddr = addr_s.trim().parse()?;
        spec.validate(&addr)?;
        let (re_s, im_s) = value_s
            .split_once(',')
            .ok_or_else(|| parse_err("vector literal", "values are `re,im` pairs"))?;
        let re: f64 = re_s
            .trim()
            .parse()
            .map_err(|e| parse_err("vector literal", e))?;
        let im: f64 = im_s
            .trim()
            .parse()
            .map_err(|e| parse_err("vector literal", e))?;
        out.add_assign_entry(addr, Complex64::new(re, im));
    }
    Ok(out)
}

/// Parses the exponent-set literal: tuples joined by `;`, entries by `,`,
/// e.g. `1;2` or `1,0;0,1;1,1`.
pub fn parse_exponent_set(text: &str) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::new();
    for part in text.split(';') {
        let tuple = part
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<u32>()
                    .map_err(|e| parse_err("exponent set", e))
            })
            .collect::<Result<Vec<u32>>>()?;
        out.push(tuple);
    }
    Ok(out)
}
