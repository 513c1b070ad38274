//! Experiment configuration: a flat `key = value` map assembled from an
//! optional file and command-line overrides.
//!
//! Recognized keys:
//!
//! | key           | example                          |
//! |---------------|----------------------------------|
//! | `case`        | `1`, `2`, `3` or `custom`        |
//! | `v0 a b c rho s0` | parameter overrides          |
//! | `schemes`     | `ivi,qe,euler,ivi-simple`        |
//! | `quantities`  | `variance_swap,laplace(1),call(0.8),iv_slice(0.8:1:1.2)` |
//! | `steps`       | `1,2,4` or `1..100`              |
//! | `paths`       | `200000`                         |
//! | `path_counts` | `10000,50000`                    |
//! | `seed`        | `42`                             |
//! | `maturity`    | `1`                              |
//! | `out`         | `results.csv`                    |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::cases::builtin_case;
use crate::error::{Error, Result};
use crate::heston::{HestonParams, Payoff};
use crate::ivi::CirParams;
use crate::scheme::VarianceScheme;

pub const DESK_PATHS: u64 = 200_000;
pub const PAPER_PATHS: u64 = 2_000_000;
pub const DEFAULT_STRIKES: [f64; 3] = [0.8, 1.0, 1.2];

#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    VarianceSwap,
    VolSwap,
    /// `E[exp(-q U_{0,T})]`.
    Laplace {
        q: f64,
    },
    Call {
        strike: f64,
    },
    IvSlice {
        strikes: Vec<f64>,
    },
}

impl Quantity {
    /// Payoffs simulated for this quantity, in record order.
    pub fn payoffs(&self) -> Vec<Payoff> {
        match self {
            Quantity::VarianceSwap => vec![Payoff::IntegratedVariance],
            Quantity::VolSwap => vec![Payoff::SqrtIntegratedVariance],
            Quantity::Laplace { q } => vec![Payoff::Laplace { q: *q }],
            Quantity::Call { strike } => vec![Payoff::Call { strike: *strike }],
            Quantity::IvSlice { strikes } => strikes
                .iter()
                .map(|&strike| Payoff::Call { strike })
                .collect(),
        }
    }

    pub fn needs_price(&self) -> bool {
        matches!(self, Quantity::Call { .. } | Quantity::IvSlice { .. })
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::VarianceSwap => f.write_str("variance_swap"),
            Quantity::VolSwap => f.write_str("vol_swap"),
            Quantity::Laplace { q } => write!(f, "laplace({})", fmt_num(*q)),
            Quantity::Call { strike } => write!(f, "call({})", fmt_num(*strike)),
            Quantity::IvSlice { strikes } => {
                let s: Vec<String> = strikes.iter().map(|&k| fmt_num(k)).collect();
                write!(f, "iv_slice({})", s.join(":"))
            }
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{s}' as a number")))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: '{s}' is not finite")));
    }
    Ok(x)
}

fn parse_positive(key: &str, s: &str) -> Result<f64> {
    let x = parse_f64(key, s)?;
    if x <= 0.0 {
        return Err(Error::Config(format!("{key}: {x} must be > 0")));
    }
    Ok(x)
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(Error::Config(format!("malformed quantity '{s}'"))),
            None => (s, None),
        };
        match (name, arg) {
            ("variance_swap", None) => Ok(Quantity::VarianceSwap),
            ("vol_swap", None) => Ok(Quantity::VolSwap),
            ("laplace", None) => Ok(Quantity::Laplace { q: 1.0 }),
            ("laplace", Some(q)) => {
                let q = parse_f64("laplace", q)?;
                if q < 0.0 {
                    return Err(Error::Config(format!("laplace: q = {q} must be >= 0")));
                }
                Ok(Quantity::Laplace { q })
            }
            ("call", Some(k)) => Ok(Quantity::Call {
                strike: parse_positive("call", k)?,
            }),
            ("iv_slice", None) => Ok(Quantity::IvSlice {
                strikes: DEFAULT_STRIKES.to_vec(),
            }),
            ("iv_slice", Some(ks)) => {
                let strikes = ks
                    .split(':')
                    .map(|k| parse_positive("iv_slice", k))
                    .collect::<Result<Vec<_>>>()?;
                if strikes.is_empty() {
                    return Err(Error::Config("iv_slice needs at least one strike".into()));
                }
                Ok(Quantity::IvSlice { strikes })
            }
            _ => Err(Error::Config(format!(
                "unknown quantity '{s}' (expected variance_swap, vol_swap, laplace[(q)], call(K), iv_slice[(K1:K2:...)])"
            ))),
        }
    }
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn parse_quantities(s: &str) -> Result<Vec<Quantity>> {
    split_top_level(s).into_iter().map(str::parse).collect()
}

pub fn parse_schemes(s: &str) -> Result<Vec<VarianceScheme>> {
    split_top_level(s).into_iter().map(str::parse).collect()
}

/// `1,2,8` or an inclusive range `1..100`.
pub fn parse_steps(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in split_top_level(s) {
        if let Some((lo, hi)) = item.split_once("..") {
            let lo = parse_count("steps", lo)? as usize;
            let hi = parse_count("steps", hi)? as usize;
            if lo > hi {
                return Err(Error::Config(format!("steps: empty range {item}")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_count("steps", item)? as usize);
        }
    }
    Ok(out)
}

fn parse_count(key: &str, s: &str) -> Result<u64> {
    s.trim().replace('_', "").parse().map_err(|_| {
        Error::Config(format!(
            "{key}: cannot parse '{s}' as a non-negative integer"
        ))
    })
}

fn parse_counts(key: &str, s: &str) -> Result<Vec<u64>> {
    split_top_level(s)
        .into_iter()
        .map(|t| parse_count(key, t))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum CaseSpec {
    Builtin(u32),
    Custom(HestonParams),
}

impl CaseSpec {
    pub fn params(&self) -> Result<HestonParams> {
        match self {
            CaseSpec::Builtin(id) => builtin_case(*id),
            CaseSpec::Custom(p) => Ok(*p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CaseSpec::Builtin(id) => id.to_string(),
            CaseSpec::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub case: CaseSpec,
    pub schemes: Vec<VarianceScheme>,
    pub quantities: Vec<Quantity>,
    pub steps: Vec<usize>,
    pub n_paths: u64,
    /// Path counts of the path-count sweep.
    pub path_counts: Vec<u64>,
    pub seed: u64,
    pub maturity: f64,
    pub output: Option<PathBuf>,
}

const KEYS: [&str; 16] = [
    "case",
    "v0",
    "a",
    "b",
    "c",
    "rho",
    "s0",
    "schemes",
    "quantities",
    "steps",
    "paths",
    "path_counts",
    "seed",
    "maturity",
    "out",
    "paper_scale",
];

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl ExperimentConfig {
    /// Builds a configuration from `pairs` on top of `defaults`; keys in
    /// `pairs` win.
    pub fn from_pairs(
        defaults: &BTreeMap<String, String>,
        pairs: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut m = defaults.clone();
        for (k, v) in pairs {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key '{k}'")));
            }
            m.insert(k.clone(), v.clone());
        }
        let get = |k: &str| m.get(k).map(String::as_str);

        let base = match get("case").unwrap_or("1") {
            "custom" => None,
            id => Some(parse_count("case", id)? as u32),
        };
        let overrides = ["v0", "a", "b", "c", "rho", "s0"];
        let case = if base.is_none() || overrides.iter().any(|k| m.contains_key(*k)) {
            let start = match base {
                Some(id) => Some(builtin_case(id).map_err(|e| Error::Config(e.to_string()))?),
                None => None,
            };
            let field = |k: &str, from_base: Option<f64>| -> Result<f64> {
                match (get(k), from_base) {
                    (Some(s), _) => parse_f64(k, s),
                    (None, Some(x)) => Ok(x),
                    (None, None) if k == "s0" => Ok(1.0),
                    (None, None) => Err(Error::Config(format!("custom case needs '{k}'"))),
                }
            };
            let cir = CirParams::new(
                field("v0", start.map(|p| p.cir.v0))?,
                field("a", start.map(|p| p.cir.a))?,
                field("b", start.map(|p| p.cir.b))?,
                field("c", start.map(|p| p.cir.c))?,
            )
            .map_err(|e| Error::Config(e.to_string()))?;
            let p = HestonParams::new(
                cir,
                field("rho", start.map(|p| p.rho))?,
                field("s0", start.map(|p| p.s0))?,
            )
            .map_err(|e| Error::Config(e.to_string()))?;
            CaseSpec::Custom(p)
        } else {
            let id = base.unwrap_or(1);
            builtin_case(id).map_err(|e| Error::Config(e.to_string()))?;
            CaseSpec::Builtin(id)
        };

        let paper_scale = match get("paper_scale") {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(s) => {
                return Err(Error::Config(format!(
                    "paper_scale: '{s}' is not a boolean"
                )))
            }
        };
        let scale = |n: u64| if paper_scale { n * 10 } else { n };
        let n_paths = match get("paths") {
            Some(s) => parse_count("paths", s)?,
            None => scale(DESK_PATHS),
        };
        let path_counts = match get("path_counts") {
            Some(s) => parse_counts("path_counts", s)?,
            None => vec![10_000, 20_000, 50_000, 100_000, 200_000],
        };
        let cfg = Self {
            case,
            schemes: parse_schemes(get("schemes").unwrap_or("ivi"))?,
            quantities: parse_quantities(get("quantities").unwrap_or("variance_swap"))?,
            steps: parse_steps(get("steps").unwrap_or("1,2,4,8,16,32,64,100"))?,
            n_paths,
            path_counts,
            seed: parse_count("seed", get("seed").unwrap_or("42"))?,
            maturity: parse_f64("maturity", get("maturity").unwrap_or("1"))?,
            output: get("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.quantities.is_empty() {
            return Err(Error::Config("no quantities selected".into()));
        }
        if self.steps.is_empty() || self.steps.contains(&0) {
            return Err(Error::Config(
                "steps must be a non-empty list of values >= 1".into(),
            ));
        }
        if self.n_paths < 2 || self.path_counts.iter().any(|&n| n < 2) {
            return Err(Error::Config("path counts must be >= 2".into()));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::Config(format!(
                "maturity {} must be > 0",
                self.maturity
            )));
        }
        self.case
            .params()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn params(&self) -> HestonParams {
        self.case.params().expect("validated at construction")
    }
}
