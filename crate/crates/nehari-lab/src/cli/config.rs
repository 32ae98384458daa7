//! Run configuration: flat key-value files with dotted sections, every key
//! overridable by a `--key value` flag (flags win). One config file plus the
//! flag list fully determines a run, which is what reproducibility needs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::SolverError;
use crate::grid::{DiscreteDomain, DomainKind};
use crate::levels::{geometric_grid, linear_grid};
use crate::solve::{SolverConfig, StepRule};

/// A configuration problem: bad key, bad value, unreadable file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

const KNOWN_KEYS: &[&str] = &[
    "domain.kind",
    "domain.extents",
    "domain.resolution",
    "problem.p",
    "problem.lambda",
    "problem.lambda_grid",
    "problem.mu",
    "problem.mu_grid",
    "solver.tol",
    "solver.max_iters",
    "solver.n_starts",
    "solver.step_rule",
    "solver.seed",
    "solver.divergence_threshold",
    "output.directory",
    "output.formats",
    "report.duality_tol",
    "report.derivative_tol",
    "report.jump_threshold",
    "report.n_probes",
    "report.probe_seed",
    "report.eig_tol",
    "report.identity_tol",
    "report.inequality_slack",
];

/// Short flag aliases for the common keys.
fn resolve_key(raw: &str) -> String {
    match raw {
        "p" => "problem.p".into(),
        "lambda" => "problem.lambda".into(),
        "lambda-grid" | "lambda_grid" => "problem.lambda_grid".into(),
        "mu" => "problem.mu".into(),
        "mu-grid" | "mu_grid" => "problem.mu_grid".into(),
        "kind" => "domain.kind".into(),
        "extents" => "domain.extents".into(),
        "resolution" => "domain.resolution".into(),
        "tol" => "solver.tol".into(),
        "seed" => "solver.seed".into(),
        "out" => "output.directory".into(),
        other => other.into(),
    }
}

/// Ordered raw key-value map (ordering keeps error messages and dumps stable).
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse_file(path: &PathBuf) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(i) => &raw_line[..i],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: lineno + 1,
                    text: raw_line.to_string(),
                });
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = resolve_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        self.map.insert(key, value.to_string());
        Ok(())
    }

    pub fn merge_flags(&mut self, flags: &[(String, String)]) -> Result<(), ConfigError> {
        for (k, v) in flags {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }
}

fn parse_scalar<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match raw.get(key) {
        None => Ok(None),
        Some(s) => s.parse::<T>().map(Some).map_err(|e| ConfigError::BadValue {
            key: key.into(),
            message: format!("{e}"),
        }),
    }
}

fn parse_list<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Option<Vec<T>>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match raw.get(key) {
        None => Ok(None),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<T>())
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
            .map_err(|e| ConfigError::BadValue {
                key: key.into(),
                message: format!("{e}"),
            }),
    }
}

/// Parse a sample grid: `a,b,c` (explicit), `lin:a:b:n`, or `geom:a:b:n`.
fn parse_grid(raw: &RawConfig, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(s) = raw.get(key) else {
        return Ok(None);
    };
    let bad = |message: String| ConfigError::BadValue {
        key: key.into(),
        message,
    };
    let parts: Vec<&str> = s.split(':').collect();
    let spec = match parts.as_slice() {
        [_] => None,
        [kind, a, b, n] => Some((*kind, *a, *b, *n)),
        [a, b, n] => Some(("lin", *a, *b, *n)),
        _ => return Err(bad(format!("cannot parse grid `{s}`"))),
    };
    if let Some((kind, a, b, n)) = spec {
        let a: f64 = a.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let b: f64 = b.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let n: usize = n.trim().parse().map_err(|e| bad(format!("{e}")))?;
        let grid = match kind.trim() {
            "lin" => linear_grid(a, b, n),
            "geom" => geometric_grid(a, b, n),
            other => return Err(bad(format!("unknown grid kind `{other}`"))),
        };
        return grid.map(Some).map_err(|e| bad(e.to_string()));
    }
    // Comma list.
    let grid: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(format!("{e}")))?;
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("grid must be strictly increasing".into()));
    }
    Ok(Some(grid))
}

/// Report thresholds and probe counts.
#[derive(Debug, Clone, Copy)]
pub struct ReportConfig {
    pub duality_tol: f64,
    pub derivative_tol: f64,
    pub jump_threshold: f64,
    pub n_probes: usize,
    pub probe_seed: u64,
    pub eig_tol: f64,
    pub identity_tol: f64,
    pub inequality_slack: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            duality_tol: 1e-2,
            derivative_tol: 1e-2,
            jump_threshold: 1e-2,
            n_probes: 50,
            probe_seed: 7,
            eig_tol: 1e-8,
            identity_tol: 1e-8,
            inequality_slack: 1e-6,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain_kind: DomainKind,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub p: f64,
    pub lambda: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub mu_grid: Option<Vec<f64>>,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
    pub formats: Vec<String>,
    pub report: ReportConfig,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let domain_kind = match raw.get("domain.kind") {
            None => DomainKind::Interval,
            Some(s) => DomainKind::from_str(s).map_err(|e| ConfigError::BadValue {
                key: "domain.kind".into(),
                message: e.to_string(),
            })?,
        };
        let extents =
            parse_list::<f64>(raw, "domain.extents")?.unwrap_or_else(|| match domain_kind {
                DomainKind::Interval => vec![40.0],
                _ => vec![4.0, 3.0],
            });
        let resolution =
            parse_list::<usize>(raw, "domain.resolution")?.unwrap_or_else(|| match domain_kind {
                DomainKind::Interval => vec![2000],
                _ => vec![96, 72],
            });

        let p = parse_scalar::<f64>(raw, "problem.p")?.unwrap_or(4.0);
        let lambda = parse_scalar::<f64>(raw, "problem.lambda")?;
        let mu = parse_scalar::<f64>(raw, "problem.mu")?;
        let lambda_grid = parse_grid(raw, "problem.lambda_grid")?;
        let mu_grid = parse_grid(raw, "problem.mu_grid")?;
        if lambda.is_some() && lambda_grid.is_some() {
            return Err(ConfigError::Invalid(
                "set either problem.lambda or problem.lambda_grid, not both".into(),
            ));
        }
        if mu.is_some() && mu_grid.is_some() {
            return Err(ConfigError::Invalid(
                "set either problem.mu or problem.mu_grid, not both".into(),
            ));
        }

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            tol: parse_scalar(raw, "solver.tol")?.unwrap_or(defaults.tol),
            max_iters: parse_scalar(raw, "solver.max_iters")?.unwrap_or(defaults.max_iters),
            n_starts: parse_scalar(raw, "solver.n_starts")?.unwrap_or(defaults.n_starts),
            step_rule: match raw.get("solver.step_rule") {
                None => defaults.step_rule,
                Some(s) => StepRule::from_str(s).map_err(|e| ConfigError::BadValue {
                    key: "solver.step_rule".into(),
                    message: e.to_string(),
                })?,
            },
            seed: parse_scalar(raw, "solver.seed")?.unwrap_or(defaults.seed),
            divergence_threshold: parse_scalar(raw, "solver.divergence_threshold")?
                .unwrap_or(defaults.divergence_threshold),
        };
        solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let out_dir = PathBuf::from(raw.get("output.directory").unwrap_or("out"));
        let formats: Vec<String> = raw
            .get("output.formats")
            .unwrap_or("csv,json,svg")
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        for f in &formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                return Err(ConfigError::BadValue {
                    key: "output.formats".into(),
                    message: format!("unknown format `{f}` (expected csv, json, svg)"),
                });
            }
        }

        let rd = ReportConfig::default();
        let report = ReportConfig {
            duality_tol: parse_scalar(raw, "report.duality_tol")?.unwrap_or(rd.duality_tol),
            derivative_tol: parse_scalar(raw, "report.derivative_tol")?
                .unwrap_or(rd.derivative_tol),
            jump_threshold: parse_scalar(raw, "report.jump_threshold")?
                .unwrap_or(rd.jump_threshold),
            n_probes: parse_scalar(raw, "report.n_probes")?.unwrap_or(rd.n_probes),
            probe_seed: parse_scalar(raw, "report.probe_seed")?.unwrap_or(rd.probe_seed),
            eig_tol: parse_scalar(raw, "report.eig_tol")?.unwrap_or(rd.eig_tol),
            identity_tol: parse_scalar(raw, "report.identity_tol")?.unwrap_or(rd.identity_tol),
            inequality_slack: parse_scalar(raw, "report.inequality_slack")?
                .unwrap_or(rd.inequality_slack),
        };

        Ok(RunConfig {
            domain_kind,
            extents,
            resolution,
            p,
            lambda,
            lambda_grid,
            mu,
            mu_grid,
            solver,
            out_dir,
            formats,
            report,
        })
    }

    pub fn build_domain(&self) -> Result<Arc<DiscreteDomain>, SolverError> {
        DiscreteDomain::from_spec(self.domain_kind, &self.extents, &self.resolution)
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }

    /// Default frequency sweep: geometric so that relative resolution (and
    /// the relative accuracy of grid-adapted derivative estimates) is uniform
    /// across the decade.
    pub fn lambda_grid_or_default(&self) -> Result<Vec<f64>, SolverError> {
        match (&self.lambda_grid, self.lambda) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(l)) => Ok(vec![l]),
            (None, None) => geometric_grid(0.1, 6.0, 60),
        }
    }

    pub fn mu_grid_or_default(&self) -> Result<Vec<f64>, SolverError> {
        match (&self.mu_grid, self.mu) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(m)) => Ok(vec![m]),
            (None, None) => linear_grid(0.5, 3.0, 6),
        }
    }
}
