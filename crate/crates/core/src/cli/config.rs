//! Run configuration files.
//!
//! Line-oriented `key = value` pairs under `[section]` headers; `#` starts a
//! comment. Lists are comma-separated. Sections and keys:
//!
//! ```text
//! [drift]      breakpoints, slopes, intercepts          (piecewise form)
//!              expression, domain, resolution           (expression form)
//!              bound, lipschitz                         (optional M₁, M₂)
//! [query]      x0, barrier
//! [inversion]  method (euler_summation | gaver_stehfest), terms, target_rel_tol
//! [grid]       t_max, steps  |  times
//! [mc]         n_paths, dt, seed, bridge_correction
//! ```
//!
//! Exactly one drift form must be given. Defaults: `resolution = 64`,
//! `domain = [min(x0, c) − 8, max(x0, c) + 8]`, Euler summation with 32
//! terms and `target_rel_tol = 1e-8`, `seed = 1`, `bridge_correction = true`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::expr::{parse_expression, DriftExpression, ExprError};
use crate::drift::{DriftError, PiecewiseLinearDrift};
use crate::invert::{InversionConfig, InversionMethod};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_DOMAIN_MARGIN: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("missing field `{key}` in [{section}]")]
    MissingField {
        section: &'static str,
        key: &'static str,
    },
    #[error("line {line}: unknown field `{key}` in [{section}]")]
    UnknownField {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: `{key}` expects {expected}, found `{found}`")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("line {line}: bad drift expression: {source}")]
    Expression { line: usize, source: ExprError },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

const SECTIONS: [(&str, &[&str]); 5] = [
    (
        "drift",
        &[
            "breakpoints",
            "slopes",
            "intercepts",
            "expression",
            "domain",
            "resolution",
            "bound",
            "lipschitz",
        ],
    ),
    ("query", &["x0", "barrier"]),
    ("inversion", &["method", "terms", "target_rel_tol"]),
    ("grid", &["t_max", "steps", "times"]),
    ("mc", &["n_paths", "dt", "seed", "bridge_correction"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    Piecewise(PiecewiseLinearDrift),
    Expression {
        expression: DriftExpression,
        domain: (f64, f64),
        resolution: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeGrid {
    /// `t_max·i/steps`, `i = 1..=steps`.
    Uniform {
        t_max: f64,
        steps: usize,
    },
    Explicit(Vec<f64>),
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::Uniform { t_max, steps } => (1..=*steps)
                .map(|i| t_max * i as f64 / *steps as f64)
                .collect(),
            TimeGrid::Explicit(t) => t.clone(),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            TimeGrid::Uniform { t_max, .. } => *t_max,
            TimeGrid::Explicit(t) => *t.last().expect("non-empty grid"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bridge_correction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub drift: DriftSpec,
    /// Declared `sup|μ|`.
    pub bound: Option<f64>,
    /// Declared Lipschitz constant of `μ`.
    pub lipschitz: Option<f64>,
    pub x0: f64,
    pub barrier: f64,
    pub inversion: InversionConfig,
    pub grid: TimeGrid,
    pub mc: Option<McSettings>,
}

struct Entry {
    line: usize,
    value: String,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn split(src: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header `{text}`"),
            })?;
            let name = name.trim().to_string();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name,
                });
            }
            if out.contains_key(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("section [{name}] appears twice"),
                });
            }
            out.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{text}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let section = current.as_ref().ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("`{key}` appears before any section header"),
        })?;
        let known = SECTIONS
            .iter()
            .find(|(s, _)| s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !known.contains(&key) {
            return Err(ConfigError::UnknownField {
                line,
                section: section.clone(),
                key: key.to_string(),
            });
        }
        let table = out.get_mut(section).expect("section inserted");
        if table.contains_key(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate field `{key}`"),
            });
        }
        table.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(out)
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl<'a> Reader<'a> {
    fn entry(&self, section: &str, key: &str) -> Option<&'a Entry> {
        self.sections.get(section).and_then(|t| t.get(key))
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.entry(section, key).is_some()
    }

    fn mismatch(e: &Entry, key: &str, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            line: e.line,
            key: key.to_string(),
            expected,
            found: e.value.clone(),
        }
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.entry(section, key)
            .map(|e| match e.value.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Self::mismatch(e, key, "a finite number")),
            })
            .transpose()
    }

    fn integer(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.entry(section, key)
            .map(|e| {
                e.value
                    .parse::<u64>()
                    .map_err(|_| Self::mismatch(e, key, "a non-negative integer"))
            })
            .transpose()
    }

    fn boolean(&self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        self.entry(section, key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Self::mismatch(e, key, "`true` or `false`")),
            })
            .transpose()
    }

    fn reals(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.entry(section, key)
            .map(|e| {
                if e.value.is_empty() {
                    return Ok(Vec::new());
                }
                e.value
                    .split(',')
                    .map(|p| match p.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        _ => Err(Self::mismatch(e, key, "a comma-separated list of numbers")),
                    })
                    .collect()
            })
            .transpose()
    }
}

fn require<T>(v: Option<T>, section: &'static str, key: &'static str) -> Result<T, ConfigError> {
    v.ok_or(ConfigError::MissingField { section, key })
}

fn violation(msg: impl Into<String>) -> ConfigError {
    ConfigError::ConstraintViolation(msg.into())
}

fn drift_spec(r: &Reader<'_>, x0: f64, barrier: f64) -> Result<DriftSpec, ConfigError> {
    let piecewise = ["breakpoints", "slopes", "intercepts"]
        .iter()
        .any(|k| r.has("drift", k));
    let expression = ["expression", "domain", "resolution"]
        .iter()
        .any(|k| r.has("drift", k));
    match (piecewise, expression) {
        (true, true) => Err(violation(
            "drift is given both as piecewise lists and as an expression",
        )),
        (false, false) => Err(ConfigError::MissingField {
            section: "drift",
            key: "expression",
        }),
        (true, false) => {
            let breakpoints = r.reals("drift", "breakpoints")?.unwrap_or_default();
            let slopes = require(r.reals("drift", "slopes")?, "drift", "slopes")?;
            let intercepts = require(r.reals("drift", "intercepts")?, "drift", "intercepts")?;
            PiecewiseLinearDrift::new(breakpoints, slopes, intercepts)
                .map(DriftSpec::Piecewise)
                .map_err(|e: DriftError| violation(format!("drift: {e}")))
        }
        (false, true) => {
            let entry = r
                .entry("drift", "expression")
                .ok_or(ConfigError::MissingField {
                    section: "drift",
                    key: "expression",
                })?;
            let expression =
                parse_expression(&entry.value).map_err(|source| ConfigError::Expression {
                    line: entry.line,
                    source,
                })?;
            let domain = match r.reals("drift", "domain")? {
                None => (
                    x0.min(barrier) - DEFAULT_DOMAIN_MARGIN,
                    x0.max(barrier) + DEFAULT_DOMAIN_MARGIN,
                ),
                Some(v) if v.len() == 2 => (v[0], v[1]),
                Some(_) => {
                    let e = r.entry("drift", "domain").expect("present");
                    return Err(Reader::mismatch(e, "domain", "two numbers `L, R`"));
                }
            };
            if !(domain.0 < domain.1) {
                return Err(violation(format!(
                    "drift domain [{}, {}] is empty",
                    domain.0, domain.1
                )));
            }
            let resolution = r
                .integer("drift", "resolution")?
                .unwrap_or(DEFAULT_RESOLUTION as u64) as usize;
            if resolution == 0 {
                return Err(violation("drift resolution must be at least 1"));
            }
            Ok(DriftSpec::Expression {
                expression,
                domain,
                resolution,
            })
        }
    }
}

fn inversion(r: &Reader<'_>) -> Result<InversionConfig, ConfigError> {
    let mut cfg = match r.entry("inversion", "method") {
        None => InversionConfig::euler(),
        Some(e) => match e.value.as_str() {
            "euler_summation" => InversionConfig::euler(),
            "gaver_stehfest" => InversionConfig::gaver_stehfest(),
            _ => {
                return Err(Reader::mismatch(
                    e,
                    "method",
                    "`euler_summation` or `gaver_stehfest`",
                ))
            }
        },
    };
    if let Some(terms) = r.integer("inversion", "terms")? {
        cfg.terms = terms as usize;
    }
    if let Some(tol) = r.real("inversion", "target_rel_tol")? {
        cfg.target_rel_tol = tol;
    }
    if cfg.terms < 10 {
        return Err(violation(format!(
            "inversion terms = {} (need at least 10)",
            cfg.terms
        )));
    }
    if cfg.method == InversionMethod::GaverStehfest && cfg.terms % 2 != 0 {
        return Err(violation(format!(
            "gaver_stehfest needs an even number of terms, got {}",
            cfg.terms
        )));
    }
    if !(cfg.target_rel_tol > 0.0 && cfg.target_rel_tol < 1.0) {
        return Err(violation(format!(
            "target_rel_tol = {} must lie in (0, 1)",
            cfg.target_rel_tol
        )));
    }
    Ok(cfg)
}

fn grid(r: &Reader<'_>) -> Result<TimeGrid, ConfigError> {
    let times = r.reals("grid", "times")?;
    let uniform = r.has("grid", "t_max") || r.has("grid", "steps");
    match (times, uniform) {
        (Some(_), true) => Err(violation(
            "grid is given both as `times` and as `t_max`/`steps`",
        )),
        (Some(t), false) => {
            if t.is_empty() {
                return Err(violation("grid times must not be empty"));
            }
            if t[0] <= 0.0 {
                return Err(violation("grid times must be positive"));
            }
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(violation("grid times must be strictly increasing"));
            }
            Ok(TimeGrid::Explicit(t))
        }
        (None, _) => {
            let t_max = require(r.real("grid", "t_max")?, "grid", "t_max")?;
            let steps = require(r.integer("grid", "steps")?, "grid", "steps")? as usize;
            if t_max <= 0.0 {
                return Err(violation(format!("t_max = {t_max} must be positive")));
            }
            if steps < 1 {
                return Err(violation("steps must be at least 1"));
            }
            Ok(TimeGrid::Uniform { t_max, steps })
        }
    }
}

fn mc(r: &Reader<'_>) -> Result<Option<McSettings>, ConfigError> {
    if !r.sections.contains_key("mc") {
        return Ok(None);
    }
    let n_paths = require(r.integer("mc", "n_paths")?, "mc", "n_paths")? as usize;
    let dt = require(r.real("mc", "dt")?, "mc", "dt")?;
    let seed = r.integer("mc", "seed")?.unwrap_or(1);
    let bridge_correction = r.boolean("mc", "bridge_correction")?.unwrap_or(true);
    if n_paths < 100 {
        return Err(violation(format!(
            "mc n_paths = {n_paths} (need at least 100)"
        )));
    }
    if dt <= 0.0 {
        return Err(violation(format!("mc dt = {dt} must be positive")));
    }
    Ok(Some(McSettings {
        n_paths,
        dt,
        seed,
        bridge_correction,
    }))
}

pub fn parse_config_str(src: &str) -> Result<RunConfig, ConfigError> {
    let sections = split(src)?;
    let r = Reader {
        sections: &sections,
    };
    let x0 = require(r.real("query", "x0")?, "query", "x0")?;
    let barrier = require(r.real("query", "barrier")?, "query", "barrier")?;
    if !(x0 < barrier) {
        return Err(violation(format!(
            "x0 = {x0} must lie below barrier = {barrier}"
        )));
    }
    let drift = drift_spec(&r, x0, barrier)?;
    let bound = r.real("drift", "bound")?;
    let lipschitz = r.real("drift", "lipschitz")?;
    for (name, v) in [("bound", bound), ("lipschitz", lipschitz)] {
        if let Some(v) = v {
            if v <= 0.0 {
                return Err(violation(format!("drift {name} = {v} must be positive")));
            }
        }
    }
    let inversion = inversion(&r)?;
    let grid = grid(&r)?;
    let mc = mc(&r)?;
    if let Some(m) = &mc {
        if m.dt >= grid.horizon() {
            return Err(violation(format!(
                "mc dt = {} must be below the horizon {}",
                m.dt,
                grid.horizon()
            )));
        }
    }
    Ok(RunConfig {
        drift,
        bound,
        lipschitz,
        x0,
        barrier,
        inversion,
        grid,
        mc,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&src)
}
