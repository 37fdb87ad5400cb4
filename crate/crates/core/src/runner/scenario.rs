//! Scenario files: TOML with top-level keys and a single `[pair]` table.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_BUDGET, DEFAULT_NODE_BUDGET};
use crate::entropy::{BoxSet, Budgets, CoverMethod, SandwichTolerance};
use crate::error::{Error, Result};
use crate::presets;
use crate::spectral::LogBase;
use crate::system::{ControlRange, LinearSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Minimal `(n, K, N_ε(Q))`-spanning sets of controls.
    Spanning,
    /// Maximal `(n, ε)`-separated sets of the uncontrolled map.
    Separated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub k_lo: Vec<f64>,
    pub k_hi: Vec<f64>,
    #[serde(default)]
    pub q_lo: Option<Vec<f64>>,
    #[serde(default)]
    pub q_hi: Option<Vec<f64>>,
    pub rho: f64,
}

fn default_mode() -> String {
    "greedy".into()
}
fn default_log_base() -> String {
    "2".into()
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}
fn default_node_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}
fn default_tol() -> f64 {
    0.15
}
fn default_estimator() -> Estimator {
    Estimator::Spanning
}

/// Raw file contents, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub preset: Option<String>,
    /// Inline Euclidean system `x ↦ A x + B u`.
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub u_lo: Option<Vec<f64>>,
    #[serde(default)]
    pub u_hi: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub eps_list: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_log_base")]
    pub log_base: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
    #[serde(default = "default_tol")]
    pub tol_upper: f64,
    /// Omit to skip the lower-side comparison.
    #[serde(default)]
    pub tol_lower: Option<f64>,
    /// Inclusive `[lo, hi]` range of `n` for the exact-versus-greedy comparison.
    #[serde(default)]
    pub exact_check: Option<[usize; 2]>,
    pub pair: PairSpec,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub system: LinearSystem,
    pub k: BoxSet,
    pub q: Option<BoxSet>,
    pub method: CoverMethod,
    pub base: LogBase,
    pub budgets: Budgets,
    pub tolerance: SandwichTolerance,
    /// The file's bytes, used for the provenance hash.
    pub source: String,
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub log_base: Option<String>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

/// `line:column` of `key`, searched inside `[section]` when given.
fn locate(text: &str, section: Option<&str>, key: &str) -> Option<(usize, usize)> {
    let mut current: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.split(']').next().map(|s| s.trim().to_string());
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some(rest) = t.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some((i + 1, line.len() - t.len() + 1));
            }
        }
    }
    None
}

struct Diagnostics<'a> {
    text: &'a str,
}

impl Diagnostics<'_> {
    fn field(&self, section: Option<&str>, key: &str, msg: impl std::fmt::Display) -> Error {
        let path = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        match locate(self.text, section, key) {
            Some((l, c)) => Error::Config(format!("line {l}, column {c}, field `{path}`: {msg}")),
            None => Error::Config(format!("field `{path}`: {msg}")),
        }
    }
}

fn matrix(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first()?.len();
    if c == 0 || rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl Scenario {
    pub fn from_path(path: &std::path::Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        if let Some(m) = &overrides.mode {
            file.mode = m.clone();
        }
        if let Some(b) = &overrides.log_base {
            file.log_base = b.clone();
        }
        if let Some(s) = overrides.seed {
            file.seed = s;
        }
        if let Some(b) = overrides.budget {
            file.budget = b;
        }
        Self::validate(file, text)
    }

    fn validate(file: ScenarioFile, text: &str) -> Result<Self> {
        let diag = Diagnostics { text };
        let method = CoverMethod::parse(&file.mode).map_err(|e| diag.field(None, "mode", e.root()))?;
        let base = LogBase::parse(&file.log_base).map_err(|e| diag.field(None, "log_base", e.root()))?;

        let system = match (&file.preset, &file.a, &file.b) {
            (Some(name), None, None) => {
                let sys = presets::by_name(name).ok_or_else(|| {
                    diag.field(None, "preset", format!("unknown preset {name:?}; known: {}", presets::PRESET_NAMES.join(", ")))
                })?;
                match (&file.u_lo, &file.u_hi, file.delta) {
                    (None, None, None) => sys,
                    _ => {
                        let c = &sys.control;
                        let range = ControlRange::new(
                            file.u_lo.clone().unwrap_or_else(|| c.lo().to_vec()),
                            file.u_hi.clone().unwrap_or_else(|| c.hi().to_vec()),
                            file.delta.unwrap_or(c.delta()),
                        )
                        .map_err(|e| diag.field(None, "u_lo", e.root()))?;
                        presets::with_control(sys, range).map_err(|e| diag.field(None, "u_lo", e.root()))?
                    }
                }
            }
            (None, Some(a), Some(b)) => {
                let a = matrix(a).ok_or_else(|| diag.field(None, "a", "rows must be nonempty and of equal length"))?;
                let b = matrix(b).ok_or_else(|| diag.field(None, "b", "rows must be nonempty and of equal length"))?;
                let missing = |k: &str| diag.field(None, k, "required for an inline system");
                let range = ControlRange::new(
                    file.u_lo.clone().ok_or_else(|| missing("u_lo"))?,
                    file.u_hi.clone().ok_or_else(|| missing("u_hi"))?,
                    file.delta.ok_or_else(|| missing("delta"))?,
                )
                .map_err(|e| diag.field(None, "u_lo", e.root()))?;
                LinearSystem::euclidean(file.name.clone(), a, b, range).map_err(|e| diag.field(None, "a", e.root()))?
            }
            (Some(_), _, _) => return Err(diag.field(None, "preset", "give either `preset` or inline `a` and `b`, not both")),
            _ => return Err(diag.field(None, "a", "inline systems need both `a` and `b` (or use `preset`)")),
        };

        if file.eps_list.is_empty() {
            return Err(diag.field(None, "eps_list", "must not be empty"));
        }
        if file.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(diag.field(None, "eps_list", "entries must be positive and finite"));
        }
        if file.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(diag.field(None, "eps_list", "must be strictly decreasing"));
        }
        if file.n_min > file.n_max {
            return Err(diag.field(None, "n_min", format!("n range {}..={} is empty", file.n_min, file.n_max)));
        }
        if let Some([lo, hi]) = file.exact_check {
            if lo > hi || lo == 0 {
                return Err(diag.field(None, "exact_check", "need 1 <= lo <= hi"));
            }
        }
        if !(file.tol_upper >= 0.0) {
            return Err(diag.field(None, "tol_upper", "must be nonnegative"));
        }
        if file.tol_lower.is_some_and(|t| !(t >= 0.0)) {
            return Err(diag.field(None, "tol_lower", "must be nonnegative"));
        }

        let p = &file.pair;
        let eps_min = *file.eps_list.last().unwrap();
        if !(p.rho > 0.0 && p.rho <= eps_min / 4.0) {
            return Err(diag.field(
                Some("pair"),
                "rho",
                format!("rho = {} must satisfy 0 < rho <= eps_min/4 = {}", p.rho, eps_min / 4.0),
            ));
        }
        let d = system.dimension();
        for (key, v) in [("k_lo", Some(&p.k_lo)), ("k_hi", Some(&p.k_hi)), ("q_lo", p.q_lo.as_ref()), ("q_hi", p.q_hi.as_ref())] {
            if let Some(v) = v {
                if v.len() != d {
                    return Err(diag.field(Some("pair"), key, format!("expected {d} coordinates, got {}", v.len())));
                }
            }
        }
        let k = BoxSet::new(p.k_lo.clone(), p.k_hi.clone()).map_err(|e| diag.field(Some("pair"), "k_lo", e.root()))?;
        let q = match (&p.q_lo, &p.q_hi) {
            (Some(lo), Some(hi)) => {
                let q = BoxSet::new(lo.clone(), hi.clone()).map_err(|e| diag.field(Some("pair"), "q_lo", e.root()))?;
                if !q.contains_box(&k) {
                    return Err(diag.field(Some("pair"), "q_lo", "K must lie inside Q"));
                }
                Some(q)
            }
            (None, None) => None,
            _ => return Err(diag.field(Some("pair"), "q_lo", "give both q_lo and q_hi")),
        };
        if file.estimator == Estimator::Spanning && q.is_none() {
            return Err(diag.field(Some("pair"), "q_lo", "the spanning estimator needs Q"));
        }

        let budgets = Budgets { evaluations: file.budget, nodes: file.node_budget };
        let tolerance = SandwichTolerance { upper: file.tol_upper, lower: file.tol_lower };
        Ok(Scenario { file, system, k, q, method, base, budgets, tolerance, source: text.to_string() })
    }

    pub fn n_range(&self) -> (usize, usize) {
        (self.file.n_min, self.file.n_max)
    }
}
