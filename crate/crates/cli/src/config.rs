//! The JSON run configuration and the flag overrides applied on top of it.

use std::path::{Path, PathBuf};

use gtd::curvature::{Backend, BACKEND_TOL};
use gtd::grid::{Axis, Grid, Spacing};
use gtd::metric::MetricSpec;
use gtd::relation::{
    default_variables, homogeneous_sum, monomial_relation, parse_relation, FundamentalRelation,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    /// 1-based representation index `i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDef", into = "SystemDef")]
pub enum SystemConfig {
    Monomial {
        coefficient: f64,
        exponents: Vec<f64>,
    },
    HomogeneousSum {
        terms: Vec<Term>,
    },
    Expression {
        source: String,
        variables: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SystemKind {
    Monomial,
    HomogeneousSum,
    Expression,
}

/// Flat wire form of [`SystemConfig`], so that type errors keep their
/// field path and position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDef {
    kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficient: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variables: Option<Vec<String>>,
}

impl TryFrom<SystemDef> for SystemConfig {
    type Error = String;

    fn try_from(d: SystemDef) -> std::result::Result<Self, String> {
        let need = |name: &str| format!("`{name}` is required for this kind");
        let extra = |name: &str, present: bool| {
            if present {
                Err(format!("`{name}` does not apply to this kind"))
            } else {
                Ok(())
            }
        };
        match d.kind {
            SystemKind::Monomial => {
                extra("terms", d.terms.is_some())?;
                extra("source", d.source.is_some())?;
                extra("variables", d.variables.is_some())?;
                Ok(SystemConfig::Monomial {
                    coefficient: d.coefficient.unwrap_or_else(one),
                    exponents: d.exponents.ok_or_else(|| need("exponents"))?,
                })
            }
            SystemKind::HomogeneousSum => {
                extra("coefficient", d.coefficient.is_some())?;
                extra("exponents", d.exponents.is_some())?;
                extra("source", d.source.is_some())?;
                extra("variables", d.variables.is_some())?;
                Ok(SystemConfig::HomogeneousSum {
                    terms: d.terms.ok_or_else(|| need("terms"))?,
                })
            }
            SystemKind::Expression => {
                extra("coefficient", d.coefficient.is_some())?;
                extra("exponents", d.exponents.is_some())?;
                extra("terms", d.terms.is_some())?;
                Ok(SystemConfig::Expression {
                    source: d.source.ok_or_else(|| need("source"))?,
                    variables: d.variables.ok_or_else(|| need("variables"))?,
                })
            }
        }
    }
}

impl From<SystemConfig> for SystemDef {
    fn from(s: SystemConfig) -> Self {
        let mut d = SystemDef {
            kind: SystemKind::Monomial,
            coefficient: None,
            exponents: None,
            terms: None,
            source: None,
            variables: None,
        };
        match s {
            SystemConfig::Monomial {
                coefficient,
                exponents,
            } => {
                d.coefficient = Some(coefficient);
                d.exponents = Some(exponents);
            }
            SystemConfig::HomogeneousSum { terms } => {
                d.kind = SystemKind::HomogeneousSum;
                d.terms = Some(terms);
            }
            SystemConfig::Expression { source, variables } => {
                d.kind = SystemKind::Expression;
                d.source = Some(source);
                d.variables = Some(variables);
            }
        }
        d
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coefficient: f64,
    pub exponents: Vec<f64>,
}

/// Either per-axis ranges (one axis is repeated for every coordinate) or an
/// explicit point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<Axis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default = "yes")]
    pub cross_check: bool,
    #[serde(default = "default_backend_tol")]
    pub tolerance: f64,
}

fn default_backend() -> Backend {
    Backend::Jets
}

fn yes() -> bool {
    true
}

fn default_backend_tol() -> f64 {
    BACKEND_TOL
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            backend: default_backend(),
            cross_check: true,
            tolerance: BACKEND_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Claim names, or `"all"`.
    #[serde(default = "all_claims")]
    pub claims: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub factor_perturbation: f64,
}

fn all_claims() -> Vec<String> {
    vec!["all".into()]
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            claims: all_claims(),
            tolerance: None,
            factor_perturbation: 0.0,
        }
    }
}

impl RunConfig {
    pub fn empty() -> Self {
        RunConfig {
            system: None,
            metric: None,
            grid: None,
            representation: None,
            output: OutputConfig::default(),
            curvature: CurvatureConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    /// Parses a configuration document; errors name the offending field
    /// path together with the line and column.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            CliError::Config(format!("field `{path}`: {inner}"))
        })?;
        de.end().map_err(|err| {
            CliError::Config(format!("trailing content after the configuration: {err}"))
        })?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Config(format!("cannot read {}: {err}", path.display())))?;
        RunConfig::from_json(&text).map_err(|err| match err {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("configuration serializes");
        text.push('\n');
        text
    }

    pub fn relation(&self) -> CliResult<FundamentalRelation> {
        let system = self.system.as_ref().ok_or_else(|| {
            CliError::Config("no system given (use --system or the `system` field)".into())
        })?;
        Ok(build_relation(system)?)
    }

    /// The configured grid, or the default `5ⁿ` grid.
    pub fn grid(&self, n: usize) -> CliResult<Grid> {
        let Some(config) = &self.grid else {
            return Ok(Grid::default_for(n));
        };
        let grid = match (&config.axes, &config.points) {
            (Some(axes), None) => {
                let axes = match axes.len() {
                    1 => vec![axes[0].clone(); n],
                    k if k == n => axes.clone(),
                    k => {
                        return Err(CliError::Config(format!(
                            "grid has {k} axes for a system with {n} coordinates"
                        )))
                    }
                };
                Grid::cartesian(&axes)?
            }
            (None, Some(points)) => Grid::from_points(points.clone())?,
            _ => {
                return Err(CliError::Config(
                    "grid needs exactly one of `axes` or `points`".into(),
                ))
            }
        };
        if grid.dim() != n {
            return Err(CliError::Config(format!(
                "grid points have {} coordinates for a system with {n}",
                grid.dim()
            )));
        }
        Ok(grid)
    }

    /// 0-based representation index, checked against `n`.
    pub fn representation_index(&self, n: usize) -> CliResult<Option<usize>> {
        match self.representation {
            None => Ok(None),
            Some(i) if (1..=n).contains(&i) => Ok(Some(i - 1)),
            Some(i) => Err(CliError::Config(format!(
                "representation index {i} is outside 1..={n}"
            ))),
        }
    }
}

pub fn build_relation(system: &SystemConfig) -> gtd::Result<FundamentalRelation> {
    match system {
        SystemConfig::Monomial {
            coefficient,
            exponents,
        } => monomial_relation(*coefficient, exponents),
        SystemConfig::HomogeneousSum { terms } => {
            let terms: Vec<(f64, Vec<f64>)> = terms
                .iter()
                .map(|t| (t.coefficient, t.exponents.clone()))
                .collect();
            homogeneous_sum(&terms)
        }
        SystemConfig::Expression { source, variables } => {
            let vars: Vec<&str> = variables.iter().map(String::as_str).collect();
            parse_relation(source, &vars)?.with_detected_beta()
        }
    }
}

fn numbers(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: `{s}` is not a number")))
        })
        .collect()
}

/// `monomial:<a1>,<a2>,…[:<coefficient>]` or `expr:<v1>,<v2>,…:<source>`.
pub fn parse_system_flag(text: &str) -> CliResult<SystemConfig> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| {
        CliError::Config(format!(
            "--system `{text}`: expected `monomial:…` or `expr:…`"
        ))
    })?;
    match kind {
        "monomial" => {
            let (exps, coefficient) = match rest.split_once(':') {
                Some((exps, c)) => (exps, numbers(c, "--system coefficient")?[0]),
                None => (rest, 1.0),
            };
            Ok(SystemConfig::Monomial {
                coefficient,
                exponents: numbers(exps, "--system exponents")?,
            })
        }
        "expr" => {
            let (vars, source) = rest.split_once(':').ok_or_else(|| {
                CliError::Config("--system expr: expected `expr:<variables>:<expression>`".into())
            })?;
            let variables: Vec<String> = if vars.trim().is_empty() {
                Vec::new()
            } else {
                vars.split(',').map(|v| v.trim().to_string()).collect()
            };
            if variables.is_empty() {
                return Err(CliError::Config(
                    "--system expr: no variables declared".into(),
                ));
            }
            Ok(SystemConfig::Expression {
                source: source.to_string(),
                variables,
            })
        }
        other => Err(CliError::Config(format!(
            "--system: unknown kind `{other}`"
        ))),
    }
}

/// `natural[:i]`, `gt[:λ]`, `gii[:λ]`, `gp:<k>`, `hessian`, or an inline
/// JSON metric object.
pub fn parse_metric_flag(text: &str, n: usize) -> CliResult<MetricSpec> {
    let text = text.trim();
    if text.starts_with('{') {
        return serde_json::from_str(text)
            .map_err(|err| CliError::Config(format!("--metric JSON: {err}")));
    }
    let (kind, arg) = match text.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (text, None),
    };
    let number = |default: f64| -> CliResult<f64> {
        arg.map_or(Ok(default), |a| {
            a.parse()
                .map_err(|_| CliError::Config(format!("--metric {kind}: `{a}` is not a number")))
        })
    };
    let spec = match kind {
        "natural" => {
            let i = match arg {
                None => 1,
                Some(a) => a.parse::<usize>().map_err(|_| {
                    CliError::Config(format!("--metric natural: `{a}` is not an index"))
                })?,
            };
            if !(1..=n).contains(&i) {
                return Err(CliError::Config(format!(
                    "--metric natural: index {i} is outside 1..={n}"
                )));
            }
            MetricSpec::natural(n, i - 1)?
        }
        "gt" => MetricSpec::gt_identity(n, number(1.0)?)?,
        "gii" => MetricSpec::gt_eta(n, number(1.0)?)?,
        "gp" => {
            let k = arg
                .ok_or_else(|| {
                    CliError::Config("--metric gp needs an integer exponent, e.g. gp:0".into())
                })?
                .parse::<i32>()
                .map_err(|_| CliError::Config("--metric gp: exponent must be an integer".into()))?;
            MetricSpec::gp(n, k, 1.0)?
        }
        "hessian" => MetricSpec::hessian_limit(n)?,
        other => {
            return Err(CliError::Config(format!(
                "--metric: unknown metric `{other}`"
            )))
        }
    };
    Ok(spec)
}

/// `min:max:count[:linear|log]`, comma-separated per axis; one axis is
/// repeated for every coordinate.
pub fn parse_grid_flag(text: &str) -> CliResult<GridConfig> {
    let axes = text
        .split(',')
        .map(|axis| {
            let parts: Vec<&str> = axis.trim().split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(CliError::Config(format!(
                    "--grid axis `{axis}`: expected min:max:count[:spacing]"
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("--grid axis `{axis}`: `{s}` is not a number"))
                })
            };
            let count = parts[2].parse::<usize>().map_err(|_| {
                CliError::Config(format!("--grid axis `{axis}`: count must be an integer"))
            })?;
            let spacing = match parts.get(3).copied().unwrap_or("log") {
                "log" => Spacing::Log,
                "linear" => Spacing::Linear,
                s => {
                    return Err(CliError::Config(format!(
                        "--grid axis `{axis}`: unknown spacing `{s}`"
                    )))
                }
            };
            Ok(Axis {
                min: num(parts[0])?,
                max: num(parts[1])?,
                count,
                spacing,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    for axis in &axes {
        axis.validate()?;
    }
    Ok(GridConfig {
        axes: Some(axes),
        points: None,
    })
}

pub fn parse_backend(text: &str) -> CliResult<Backend> {
    match text {
        "jets" => Ok(Backend::Jets),
        "fd" | "finite_diff" | "finite-diff" => Ok(Backend::FiniteDiff),
        other => Err(CliError::Config(format!(
            "--backend: unknown backend `{other}` (jets or finite_diff)"
        ))),
    }
}

/// Column names for the equilibrium coordinates of a system.
pub fn coordinate_names(rel: &FundamentalRelation) -> Vec<String> {
    let vars = rel.variables();
    if vars.len() == rel.n() {
        vars.to_vec()
    } else {
        default_variables(rel.n())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_forms() {
        assert_eq!(
            parse_system_flag("monomial:0.75,0.75").unwrap(),
            SystemConfig::Monomial {
                coefficient: 1.0,
                exponents: vec![0.75, 0.75]
            }
        );
        assert_eq!(
            parse_system_flag("expr:S,V:(S*V)^0.5").unwrap(),
            SystemConfig::Expression {
                source: "(S*V)^0.5".into(),
                variables: vec!["S".into(), "V".into()]
            }
        );
        assert!(parse_system_flag("ideal").is_err());
        assert_eq!(
            parse_metric_flag("natural:2", 2).unwrap(),
            MetricSpec::natural(2, 1).unwrap()
        );
        assert_eq!(
            parse_metric_flag("gp:-1", 2).unwrap(),
            MetricSpec::gp(2, -1, 1.0).unwrap()
        );
        assert!(parse_metric_flag("natural:3", 2).is_err());
        let grid = parse_grid_flag("0.5:2:5,1:3:4:linear").unwrap();
        assert_eq!(grid.axes.unwrap()[1].spacing, Spacing::Linear);
        assert!(parse_grid_flag("0.5:2:1").is_err());
    }

    #[test]
    fn json_errors_name_the_field() {
        let err = RunConfig::from_json(
            r#"{"grid": {"axes": [{"min": 0.5, "max": 2, "count": "five", "spacing": "log"}]}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("grid.axes[0].count") && msg.contains("line 1"),
            "{msg}"
        );
        assert!(RunConfig::from_json(r#"{"sytem": {}}"#).is_err());
    }
}
