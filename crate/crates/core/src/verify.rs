//! Numerical certification of the representation-change results.
//!
//! Each claim is checked pointwise over a grid and summarized as a
//! [`VerificationReport`]; `passed` holds iff `max_residual ≤ tolerance`
//! (and, for `Prop2`, the curvature sub-check passes or is not applicable).
//!
//! | claim                      | residual per point                                   | tolerance |
//! |----------------------------|------------------------------------------------------|-----------|
//! | `Lemma1`                   | `max|JᵀG(TZ)J − G(Z)| / max(1, max|G|)`              | 1e-10     |
//! | `Prop1_forward`            | `max(|f − f_pred|/|f_pred|, conformal misfit)`       | 1e-8      |
//! | `Prop1_converse`           | fraction of points found conformal                   | 1/25      |
//! | `Prop2`                    | `max|g^(i) − g^Φ| / max|g^Φ|`; curvature `ΔR/max(1,|R|)` | 1e-10, 1e-6 |
//! | `Corollary`                | `|Λ(Z) − Λ(TZ)| / max(1, |Λ|)`                        | 1e-12     |
//! | `Prop3_integer_k`          | fraction of points found conformal                   | 1/25      |
//! | `Prop3_hessian`            | `max(|f + 1/I_(i)|·|I_(i)|, misfit)`                 | 1e-10     |
//! | `Example_gIconf`           | as `Prop1_forward` with `f = −S/(T(ST − PV))`        | 1e-8      |
//! | `Example_natural_isometry` | closed form and isometry, relative max norm          | 1e-10     |
//! | `Example_rao`              | as `Prop3_hessian` with `f = −1/T`                   | 1e-10     |
//!
//! A point is "found conformal" when the least-squares ratio leaves a
//! relative misfit of at most [`CONFORMAL_TOL`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact::{legendre_jacobian, legendre_map, lift_to_equilibrium};
use crate::curvature::{metric_field, metric_field_in_representation, scalar_curvature, Backend};
use crate::error::{GtdError, Result};
use crate::expr::Expression;
use crate::grid::Grid;
use crate::metric::{
    conformal_misfit, induced_metric, induced_metric_in_representation, lambda_variables,
    phase_metric, predicted_conformal_factor, pullback_to_canonical, LambdaMode, MetricFamily,
    MetricSample, MetricSpec,
};
use crate::relation::{representation_point, FundamentalRelation};

/// Misfit below which two metrics count as conformally related.
pub const CONFORMAL_TOL: f64 = 1e-9;

/// Curvature agreement required by `Prop2`.
pub const CURVATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClaimId {
    Lemma1,
    #[serde(rename = "Prop1_forward")]
    Prop1Forward,
    #[serde(rename = "Prop1_converse")]
    Prop1Converse,
    Prop2,
    Corollary,
    #[serde(rename = "Prop3_integer_k")]
    Prop3IntegerK,
    #[serde(rename = "Prop3_hessian")]
    Prop3Hessian,
    #[serde(rename = "Example_gIconf")]
    ExampleGIconf,
    #[serde(rename = "Example_natural_isometry")]
    ExampleNaturalIsometry,
    #[serde(rename = "Example_rao")]
    ExampleRao,
}

impl ClaimId {
    pub const ALL: [ClaimId; 10] = [
        ClaimId::Lemma1,
        ClaimId::Prop1Forward,
        ClaimId::Prop1Converse,
        ClaimId::Prop2,
        ClaimId::Corollary,
        ClaimId::Prop3IntegerK,
        ClaimId::Prop3Hessian,
        ClaimId::ExampleGIconf,
        ClaimId::ExampleNaturalIsometry,
        ClaimId::ExampleRao,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimId::Lemma1 => "Lemma1",
            ClaimId::Prop1Forward => "Prop1_forward",
            ClaimId::Prop1Converse => "Prop1_converse",
            ClaimId::Prop2 => "Prop2",
            ClaimId::Corollary => "Corollary",
            ClaimId::Prop3IntegerK => "Prop3_integer_k",
            ClaimId::Prop3Hessian => "Prop3_hessian",
            ClaimId::ExampleGIconf => "Example_gIconf",
            ClaimId::ExampleNaturalIsometry => "Example_natural_isometry",
            ClaimId::ExampleRao => "Example_rao",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            ClaimId::Lemma1 => 1e-10,
            ClaimId::Prop1Forward | ClaimId::ExampleGIconf => 1e-8,
            ClaimId::Prop1Converse | ClaimId::Prop3IntegerK => 1.0 / 25.0,
            ClaimId::Prop2 | ClaimId::ExampleNaturalIsometry => 1e-10,
            ClaimId::Corollary => 1e-12,
            ClaimId::Prop3Hessian | ClaimId::ExampleRao => 1e-10,
        }
    }

    /// Whether the claim is stated only for homogeneous relations.
    pub fn needs_homogeneity(self) -> bool {
        !matches!(self, ClaimId::Lemma1 | ClaimId::Corollary)
    }

    fn counts_conformal_points(self) -> bool {
        matches!(self, ClaimId::Prop1Converse | ClaimId::Prop3IntegerK)
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = ClaimId::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown claim `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStatus {
    Passed,
    Failed,
    NotApplicable,
    HypothesisNotMet,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Measured quantity (conformal factor, curvature, Λ) when there is one.
    pub value: Option<f64>,
    pub expected: Option<f64>,
    pub curvature_residual: Option<f64>,
    pub note: Option<String>,
}

/// The curvature-level part of `Prop2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubCheck {
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub not_applicable: bool,
    pub degenerate_points: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim_id: ClaimId,
    pub system: String,
    pub metric: String,
    pub points: usize,
    pub skipped: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub status: ClaimStatus,
    pub message: Option<String>,
    pub warnings: Vec<String>,
    pub curvature: Option<SubCheck>,
    pub details: Vec<PointRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Representation index `i`; defaults to the natural metric's excluded
    /// slot, otherwise 0.
    pub index: Option<usize>,
    pub tolerance: Option<f64>,
    /// Relative perturbation applied to every predicted factor.
    pub factor_perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            index: None,
            tolerance: None,
            factor_perturbation: 0.0,
        }
    }
}

enum CurvatureOutcome {
    Residual(f64),
    Degenerate,
}

struct Outcome {
    record: PointRecord,
    conformal: bool,
    curvature: Option<CurvatureOutcome>,
}

fn record(point: &[f64], residual: f64) -> PointRecord {
    PointRecord {
        point: point.to_vec(),
        residual,
        value: None,
        expected: None,
        curvature_residual: None,
        note: None,
    }
}

fn plain(rec: PointRecord) -> Outcome {
    Outcome {
        record: rec,
        conformal: false,
        curvature: None,
    }
}

fn hypothesis<T>(msg: impl Into<String>) -> Result<T> {
    Err(GtdError::HypothesisNotMet(msg.into()))
}

fn rel_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

/// `(g^Φ, Jᵀ g^(i) J)` at `e`.
fn metric_pair(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Result<(MetricSample, MetricSample)> {
    let canon = induced_metric(spec, rel, e)?;
    let rep = induced_metric_in_representation(spec, rel, index, e)?;
    let back = pullback_to_canonical(&rep, rel, index, e)?;
    Ok((canon, back))
}

/// Conformal comparison of the pulled-back representation metric against an
/// expected factor.
fn factor_outcome(canon: &MetricSample, back: &MetricSample, e: &[f64], expected: f64) -> Outcome {
    let mut rec = record(e, f64::INFINITY);
    rec.expected = Some(expected);
    match conformal_misfit(&back.g, &canon.g) {
        Some((f, misfit)) => {
            rec.value = Some(f);
            rec.residual = ((f - expected) / expected).abs().max(misfit);
            if misfit > CONFORMAL_TOL {
                rec.note = Some(format!("not conformal (misfit {misfit:e})"));
            }
        }
        None => rec.note = Some("canonical metric vanishes".into()),
    }
    plain(rec)
}

fn conformal_count_outcome(canon: &MetricSample, back: &MetricSample, e: &[f64]) -> Outcome {
    let mut rec = record(e, f64::INFINITY);
    let mut conformal = false;
    if let Some((f, misfit)) = conformal_misfit(&back.g, &canon.g) {
        rec.value = Some(f);
        rec.residual = misfit;
        conformal = misfit <= CONFORMAL_TOL;
    }
    if conformal {
        rec.note = Some("conformal".into());
    }
    Outcome {
        record: rec,
        conformal,
        curvature: None,
    }
}

fn cond1_holds(spec: &MetricSpec, index: usize) -> Option<bool> {
    let n = spec.n();
    let lambda = match spec.lambda() {
        LambdaMode::Constant(c) => vec![*c; n],
        LambdaMode::PerComponent(v) => v.clone(),
        _ => return None,
    };
    let anchor = lambda[index] * spec.chi()[index];
    Some((0..n).filter(|&j| j != index).all(|j| {
        let other = lambda[j] * spec.chi()[j];
        (other - anchor).abs() <= 1e-12 * anchor.abs().max(other.abs())
    }))
}

fn require_family(claim: ClaimId, spec: &MetricSpec, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        hypothesis(format!("{claim} concerns {what}; got {}", spec.label()))
    }
}

fn two_dof(claim: ClaimId, rel: &FundamentalRelation) -> Result<()> {
    if rel.n() != 2 {
        return hypothesis(format!(
            "{claim} is a two-degree-of-freedom example; n = {}",
            rel.n()
        ));
    }
    Ok(())
}

fn all_pairs(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Runs one claim over a grid.
pub fn verify(
    claim: ClaimId,
    rel: &FundamentalRelation,
    spec: &MetricSpec,
    grid: &Grid,
    options: VerifyOptions,
) -> Result<VerificationReport> {
    let n = rel.n();
    if spec.n() != n {
        return Err(GtdError::DimensionMismatch {
            expected: n,
            found: spec.n(),
        });
    }
    if grid.dim() != n {
        return Err(GtdError::DimensionMismatch {
            expected: n,
            found: grid.dim(),
        });
    }
    if claim.needs_homogeneity() && rel.beta().is_none() {
        return hypothesis(format!(
            "{claim} is stated for homogeneous fundamental relations; `{}` has no homogeneity order",
            rel.label()
        ));
    }
    let natural_slot = match spec.family() {
        MetricFamily::Natural { excluded } => Some(excluded),
        _ => None,
    };
    let index = options.index.or(natural_slot).unwrap_or(0);
    if index >= n {
        return Err(GtdError::IndexOutOfRange { index, dim: n });
    }
    let perturb = 1.0 + options.factor_perturbation;

    match claim {
        ClaimId::Prop1Forward | ClaimId::Prop1Converse | ClaimId::ExampleGIconf => require_family(
            claim,
            spec,
            spec.family() == MetricFamily::GtGeneral,
            "G^Phi",
        )?,
        ClaimId::Prop2 | ClaimId::ExampleNaturalIsometry => {
            require_family(claim, spec, natural_slot.is_some(), "the natural metric")?;
            if natural_slot != Some(index) {
                return hypothesis(format!(
                    "the natural metric excludes slot {}, so the representation index must match",
                    natural_slot.unwrap_or(0) + 1
                ));
            }
        }
        ClaimId::Corollary => require_family(
            claim,
            spec,
            matches!(spec.lambda(), LambdaMode::NaturalFormula { .. }),
            "the natural Lambda",
        )?,
        ClaimId::Prop3IntegerK => require_family(
            claim,
            spec,
            matches!(spec.family(), MetricFamily::Gp { .. }),
            "G_P with integer k",
        )?,
        ClaimId::Prop3Hessian | ClaimId::ExampleRao => require_family(
            claim,
            spec,
            spec.family() == MetricFamily::GpHessianLimit,
            "the hessian limit",
        )?,
        ClaimId::Lemma1 => {}
    }
    match claim {
        ClaimId::Prop1Converse => {
            if n < 2 {
                return hypothesis("the converse needs at least two degrees of freedom");
            }
            if cond1_holds(spec, index) == Some(true) {
                return hypothesis(
                    "Lambda_(i) chi_(i) = Lambda_j chi_j holds, so conformality is expected",
                );
            }
        }
        ClaimId::ExampleGIconf => {
            two_dof(claim, rel)?;
            let beta = rel.beta().unwrap_or(f64::NAN);
            if (beta - 1.0).abs() > 1e-12 {
                return hypothesis(format!(
                    "{claim} needs a first-order homogeneous relation; beta = {beta}"
                ));
            }
            let identity = spec.xi().iter().chain(spec.chi()).all(|v| *v == 1.0);
            if !identity || !matches!(spec.lambda(), LambdaMode::Constant(_)) {
                return hypothesis(format!("{claim} uses xi = chi = 1 with constant Lambda"));
            }
        }
        ClaimId::ExampleNaturalIsometry | ClaimId::ExampleRao => two_dof(claim, rel)?,
        _ => {}
    }

    let point_check = |e: &Vec<f64>| -> Result<Outcome> {
        let e = e.as_slice();
        match claim {
            ClaimId::Lemma1 => {
                let z = lift_to_equilibrium(rel, e)?;
                let subset = all_pairs(n);
                let g = phase_metric(spec, &z)?.g;
                let gt = phase_metric(spec, &legendre_map(&z, &subset)?)?.g;
                let j = legendre_jacobian(&z, &subset)?;
                let moved = j.transpose() * gt * j;
                Ok(plain(record(e, (moved - &g).amax() / g.amax().max(1.0))))
            }
            ClaimId::Prop1Forward => {
                let predicted = predicted_conformal_factor(rel, spec, index, e)?;
                if predicted.degenerate {
                    let mut rec = record(e, 0.0);
                    rec.note = Some("predicted factor degenerate".into());
                    return Ok(plain(rec));
                }
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                Ok(factor_outcome(&canon, &back, e, predicted.value * perturb))
            }
            ClaimId::Prop1Converse | ClaimId::Prop3IntegerK => {
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                Ok(conformal_count_outcome(&canon, &back, e))
            }
            ClaimId::Prop2 => {
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                let mut rec = record(e, rel_max_diff(&back.g, &canon.g));
                let canonical = scalar_curvature(&metric_field(spec, rel)?, e, Backend::Jets);
                let curvature = match canonical {
                    Err(GtdError::DegenerateMetric { .. }) => CurvatureOutcome::Degenerate,
                    Err(err) => return Err(err),
                    Ok(rc) => {
                        let field = metric_field_in_representation(spec, rel, index, e)?;
                        let y = representation_point(rel, index, e)?;
                        let rr = scalar_curvature(&field, &y, Backend::Jets)?;
                        let residual = (rc.scalar - rr.scalar).abs() / rc.scalar.abs().max(1.0);
                        rec.value = Some(rc.scalar);
                        rec.expected = Some(rr.scalar);
                        rec.curvature_residual = Some(residual);
                        CurvatureOutcome::Residual(residual)
                    }
                };
                Ok(Outcome {
                    record: rec,
                    conformal: false,
                    curvature: Some(curvature),
                })
            }
            ClaimId::Corollary => {
                let z = lift_to_equilibrium(rel, e)?;
                let moved = legendre_map(&z, &all_pairs(n))?;
                let before = spec.lambda_values(&z.coords())?[0];
                let after = spec.lambda_values(&moved.coords())?[0];
                let mut rec = record(e, (before - after).abs() / before.abs().max(1.0));
                rec.value = Some(after);
                rec.expected = Some(before);
                Ok(plain(rec))
            }
            ClaimId::Prop3Hessian | ClaimId::ExampleRao => {
                let t = rel.gradient(e)?[index];
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                Ok(factor_outcome(&canon, &back, e, -perturb / t))
            }
            ClaimId::ExampleGIconf => {
                let j = 1 - index;
                let i = rel.gradient(e)?;
                let (s, v, t, p) = (e[index], e[j], i[index], -i[j]);
                let expected = -s / (t * (s * t - p * v));
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                Ok(factor_outcome(&canon, &back, e, expected * perturb))
            }
            ClaimId::ExampleNaturalIsometry => {
                let j = 1 - index;
                let i = rel.gradient(e)?;
                let h = rel.hessian(e)?;
                let (v, p) = (e[j], -i[j]);
                // dS = e_i, dV = e_j, dT = H_i·, dP = −H_j·
                let ds = unit(index);
                let dv = unit(j);
                let dt = [h[index][0], h[index][1]];
                let dp = [-h[j][0], -h[j][1]];
                let closed = DMatrix::from_fn(2, 2, |a, b| {
                    let sym = |x: &[f64; 2], y: &[f64; 2]| 0.5 * (x[a] * y[b] + y[a] * x[b]);
                    -(sym(&ds, &dt) - sym(&dv, &dp)) / (p * v)
                });
                let (canon, back) = metric_pair(spec, rel, index, e)?;
                let residual = rel_max_diff(&closed, &canon.g).max(rel_max_diff(&back.g, &canon.g));
                Ok(plain(record(e, residual)))
            }
        }
    };

    let outcomes: Vec<Result<Outcome>> = grid.points().par_iter().map(point_check).collect();
    let tolerance = options.tolerance.unwrap_or_else(|| claim.tolerance());
    let mut details = Vec::with_capacity(outcomes.len());
    let mut skipped = 0;
    let mut conformal_points = 0;
    let mut curvature_residuals = Vec::new();
    let mut degenerate_points = 0;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                conformal_points += usize::from(o.conformal);
                match o.curvature {
                    Some(CurvatureOutcome::Residual(r)) => curvature_residuals.push(r),
                    Some(CurvatureOutcome::Degenerate) => degenerate_points += 1,
                    None => {}
                }
                details.push(o.record);
            }
            Err(GtdError::SingularRepresentation { .. }) => skipped += 1,
            Err(err) => return Err(err),
        }
    }
    let points = details.len();
    let max_residual = if points == 0 {
        f64::NAN
    } else if claim.counts_conformal_points() {
        conformal_points as f64 / points as f64
    } else {
        details.iter().map(|d| d.residual).fold(0.0, f64::max)
    };
    let curvature = (claim == ClaimId::Prop2).then(|| {
        let worst = curvature_residuals.iter().copied().fold(0.0, f64::max);
        let not_applicable = curvature_residuals.is_empty();
        SubCheck {
            max_residual: if not_applicable { f64::NAN } else { worst },
            tolerance: CURVATURE_TOL,
            passed: not_applicable || worst <= CURVATURE_TOL,
            not_applicable,
            degenerate_points,
            note: (degenerate_points > 0)
                .then(|| format!("{degenerate_points} points have a degenerate metric; curvature undefined there")),
        }
    });
    let passed = max_residual <= tolerance && curvature.as_ref().is_none_or(|c| c.passed);
    Ok(VerificationReport {
        claim_id: claim,
        system: rel.label().to_string(),
        metric: spec.label(),
        points,
        skipped,
        max_residual,
        tolerance,
        passed,
        status: if passed {
            ClaimStatus::Passed
        } else {
            ClaimStatus::Failed
        },
        message: (points == 0).then(|| "no admissible points".to_string()),
        warnings: spec.warnings(),
        curvature,
        details,
    })
}

fn unit(k: usize) -> [f64; 2] {
    let mut v = [0.0; 2];
    v[k] = 1.0;
    v
}

/// The metric each claim is run with by [`verify_all`].
pub fn canonical_specs(claim: ClaimId, n: usize) -> Result<Vec<MetricSpec>> {
    Ok(match claim {
        ClaimId::Lemma1 => {
            let names = lambda_variables(n);
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let exprs = (1..=n)
                .map(|k| Expression::parse(&format!("1 + (E{k}*I{k})^2"), &names))
                .collect::<Result<Vec<_>>>()?;
            vec![MetricSpec::gt_general(
                vec![1.0; n],
                vec![1.0; n],
                LambdaMode::Expression(exprs),
            )?]
        }
        ClaimId::Prop1Forward | ClaimId::ExampleGIconf => vec![MetricSpec::gt_identity(n, 1.0)?],
        ClaimId::Prop1Converse => vec![MetricSpec::gt_eta(n, 1.0)?],
        ClaimId::Prop2 | ClaimId::Corollary | ClaimId::ExampleNaturalIsometry => {
            vec![MetricSpec::natural(n, 0)?]
        }
        ClaimId::Prop3IntegerK => [-1, 0, 1]
            .into_iter()
            .map(|k| MetricSpec::gp(n, k, 1.0))
            .collect::<Result<_>>()?,
        ClaimId::Prop3Hessian | ClaimId::ExampleRao => vec![MetricSpec::hessian_limit(n)?],
    })
}

/// Why a claim cannot be run on a system of this shape, if it cannot.
fn inapplicable(claim: ClaimId, rel: &FundamentalRelation) -> Option<String> {
    let n = rel.n();
    match claim {
        ClaimId::Prop1Converse | ClaimId::Prop2 | ClaimId::Corollary if n < 2 => {
            Some(format!("{claim} needs at least two degrees of freedom"))
        }
        ClaimId::ExampleNaturalIsometry | ClaimId::ExampleRao if n != 2 => {
            Some(format!("{claim} is a two-degree-of-freedom example"))
        }
        ClaimId::ExampleGIconf if n != 2 || rel.beta().is_some_and(|b| (b - 1.0).abs() > 1e-12) => {
            Some(format!(
                "{claim} is a two-degree-of-freedom example with beta = 1"
            ))
        }
        _ => None,
    }
}

fn placeholder(
    claim: ClaimId,
    rel: &FundamentalRelation,
    metric: String,
    status: ClaimStatus,
    message: String,
) -> VerificationReport {
    VerificationReport {
        claim_id: claim,
        system: rel.label().to_string(),
        metric,
        points: 0,
        skipped: 0,
        max_residual: f64::NAN,
        tolerance: claim.tolerance(),
        passed: false,
        status,
        message: Some(message),
        warnings: Vec::new(),
        curvature: None,
        details: Vec::new(),
    }
}

/// Runs one claim, turning errors into reports.
pub fn verify_or_report(
    claim: ClaimId,
    rel: &FundamentalRelation,
    spec: &MetricSpec,
    grid: &Grid,
    options: VerifyOptions,
) -> VerificationReport {
    verify(claim, rel, spec, grid, options).unwrap_or_else(|err| {
        let status = match err {
            GtdError::HypothesisNotMet(_) => ClaimStatus::HypothesisNotMet,
            _ => ClaimStatus::Error,
        };
        placeholder(claim, rel, spec.label(), status, err.to_string())
    })
}

/// Every claim with its canonical metric; never aborts on a failing claim.
pub fn verify_all(rel: &FundamentalRelation, grid: &Grid) -> Vec<VerificationReport> {
    verify_claims(&ClaimId::ALL, rel, grid, VerifyOptions::default())
}

pub fn verify_claims(
    claims: &[ClaimId],
    rel: &FundamentalRelation,
    grid: &Grid,
    options: VerifyOptions,
) -> Vec<VerificationReport> {
    let mut reports = Vec::new();
    for &claim in claims {
        if claim.needs_homogeneity() && rel.beta().is_none() {
            reports.push(placeholder(
                claim,
                rel,
                String::new(),
                ClaimStatus::HypothesisNotMet,
                format!("{claim} is stated for homogeneous fundamental relations"),
            ));
            continue;
        }
        if let Some(reason) = inapplicable(claim, rel) {
            reports.push(placeholder(
                claim,
                rel,
                String::new(),
                ClaimStatus::NotApplicable,
                reason,
            ));
            continue;
        }
        match canonical_specs(claim, rel.n()) {
            Ok(specs) => reports.extend(
                specs
                    .iter()
                    .map(|spec| verify_or_report(claim, rel, spec, grid, options)),
            ),
            Err(err) => reports.push(placeholder(
                claim,
                rel,
                String::new(),
                ClaimStatus::Error,
                err.to_string(),
            )),
        }
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{monomial_relation, parse_relation};

    fn mono34() -> FundamentalRelation {
        monomial_relation(1.0, &[0.75, 0.75]).unwrap()
    }

    #[test]
    fn claim_names_round_trip() {
        for c in ClaimId::ALL {
            assert_eq!(c.as_str().parse::<ClaimId>().unwrap(), c);
            assert_eq!(
                serde_json::to_string(&c).unwrap(),
                format!("\"{}\"", c.as_str())
            );
        }
        assert!("Prop4".parse::<ClaimId>().is_err());
    }

    #[test]
    fn prop2_on_default_grid() {
        let rel = mono34();
        let r = verify(
            ClaimId::Prop2,
            &rel,
            &MetricSpec::natural(2, 0).unwrap(),
            &Grid::default_for(2),
            VerifyOptions::default(),
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.points, 25);
        assert!(r.max_residual < 1e-10);
        assert!(r.curvature.as_ref().unwrap().passed);
    }

    #[test]
    fn converse_is_a_negative_control() {
        let r = verify(
            ClaimId::Prop1Converse,
            &mono34(),
            &MetricSpec::gt_eta(2, 1.0).unwrap(),
            &Grid::default_for(2),
            VerifyOptions::default(),
        )
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert!(matches!(
            verify(
                ClaimId::Prop1Converse,
                &mono34(),
                &MetricSpec::gt_identity(2, 1.0).unwrap(),
                &Grid::default_for(2),
                VerifyOptions::default(),
            ),
            Err(GtdError::HypothesisNotMet(_))
        ));
    }

    #[test]
    fn rao_ratio() {
        let rel = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
        let r = verify(
            ClaimId::ExampleRao,
            &rel,
            &MetricSpec::hessian_limit(2).unwrap(),
            &Grid::default_for(2),
            VerifyOptions::default(),
        )
        .unwrap();
        assert!(r.passed && r.max_residual < 1e-10, "{r:?}");
    }

    #[test]
    fn perturbation_flips_forward() {
        let spec = MetricSpec::gt_identity(2, 1.0).unwrap();
        let grid = Grid::default_for(2);
        let ok = verify(
            ClaimId::Prop1Forward,
            &mono34(),
            &spec,
            &grid,
            VerifyOptions::default(),
        )
        .unwrap();
        assert!(ok.passed);
        let perturbed = VerifyOptions {
            factor_perturbation: 0.01,
            ..VerifyOptions::default()
        };
        let bad = verify(ClaimId::Prop1Forward, &mono34(), &spec, &grid, perturbed).unwrap();
        assert!(!bad.passed);
        let tight = VerifyOptions {
            tolerance: Some(1e-20),
            ..VerifyOptions::default()
        };
        assert!(
            !verify(ClaimId::Prop1Forward, &mono34(), &spec, &grid, tight)
                .unwrap()
                .passed
        );
    }

    #[test]
    fn non_homogeneous_guard() {
        let rel = parse_relation("E1^2 + E2", &["E1", "E2"]).unwrap();
        let err = verify(
            ClaimId::Prop2,
            &rel,
            &MetricSpec::natural(2, 0).unwrap(),
            &Grid::default_for(2),
            VerifyOptions::default(),
        );
        assert!(matches!(err, Err(GtdError::HypothesisNotMet(_))));
        for r in verify_all(&rel, &Grid::default_for(2)) {
            if r.claim_id.needs_homogeneity() {
                assert_eq!(r.status, ClaimStatus::HypothesisNotMet, "{}", r.claim_id);
            }
        }
    }

    #[test]
    fn all_claims_on_three_quarter_monomial() {
        let reports = verify_all(&mono34(), &Grid::default_for(2));
        assert_eq!(reports.len(), 12);
        for r in &reports {
            let ok = matches!(r.status, ClaimStatus::Passed | ClaimStatus::NotApplicable);
            assert!(
                ok,
                "{} {:?} {:?} {}",
                r.claim_id, r.status, r.message, r.max_residual
            );
        }
    }

    #[test]
    fn first_order_system() {
        let rel = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
        let reports = verify_all(&rel, &Grid::default_for(2));
        for r in &reports {
            let ok = matches!(r.status, ClaimStatus::Passed | ClaimStatus::NotApplicable);
            assert!(
                ok,
                "{} {:?} {:?} {}",
                r.claim_id, r.status, r.message, r.max_residual
            );
            if r.claim_id == ClaimId::Prop2 {
                assert!(r.curvature.as_ref().unwrap().not_applicable);
            }
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = verify_all(&mono34(), &Grid::default_for(2));
        let b = verify_all(&mono34(), &Grid::default_for(2));
        assert_eq!(
            crate::report::to_json_compact(&a).unwrap(),
            crate::report::to_json_compact(&b).unwrap()
        );
    }
}
