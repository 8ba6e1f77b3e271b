//! The `curvature`, `compare` and `verify` commands.

use gtd::contact::lift_to_equilibrium;
use gtd::curvature::{
    curvature_scan, metric_field, metric_field_in_representation, scalar_curvature, ScanOptions,
    ScanRow, ScanStatus,
};
use gtd::metric::{
    conformal_misfit, induced_metric, induced_metric_in_representation, predicted_conformal_factor,
    pullback_to_canonical, MetricFamily, MetricSpec,
};
use gtd::relation::{representation_point, FundamentalRelation};
use gtd::report::{format_f64, to_json_pretty};
use gtd::verify::{
    verify_claims, verify_or_report, ClaimId, ClaimStatus, VerificationReport, VerifyOptions,
    CONFORMAL_TOL,
};
use gtd::GtdError;
use serde::Serialize;

use crate::config::{coordinate_names, Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Rendered report and the exit code it implies.
pub struct Outcome {
    pub text: String,
    pub exit: u8,
}

fn metric_or_default(cfg: &RunConfig, rel: &FundamentalRelation) -> CliResult<MetricSpec> {
    let spec = match &cfg.metric {
        Some(spec) => spec.clone(),
        None => MetricSpec::natural(rel.n(), 0)?,
    };
    if spec.n() != rel.n() {
        return Err(CliError::Config(format!(
            "metric has {} degrees of freedom, the system has {}",
            spec.n(),
            rel.n()
        )));
    }
    Ok(spec)
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn write_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |err: csv::Error| CliError::Config(format!("cannot write CSV: {err}"));
    w.write_record(&header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|err| CliError::Config(format!("cannot write CSV: {err}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    to_json_pretty(value).map_err(|err| CliError::Config(format!("cannot write JSON: {err}")))
}

fn scan_status_name(status: ScanStatus) -> &'static str {
    match status {
        ScanStatus::Ok => "ok",
        ScanStatus::Degenerate => "degenerate",
        ScanStatus::SingularRepresentation => "singular_representation",
        ScanStatus::BackendDisagreement => "backend_disagreement",
        ScanStatus::Error => "error",
    }
}

fn failed_row(point: &[f64], status: ScanStatus, err: &GtdError) -> ScanRow {
    ScanRow {
        point: point.to_vec(),
        det_g: None,
        scalar: None,
        degenerate: status == ScanStatus::Degenerate,
        backend_residual: None,
        status,
        message: Some(err.to_string()),
    }
}

fn status_of(err: &GtdError) -> ScanStatus {
    match err {
        GtdError::SingularRepresentation { .. } => ScanStatus::SingularRepresentation,
        GtdError::DegenerateMetric { .. } => ScanStatus::Degenerate,
        _ => ScanStatus::Error,
    }
}

#[derive(Serialize)]
struct CurvatureRowOut<'a> {
    point: &'a [f64],
    det_g: Option<f64>,
    #[serde(rename = "scalar_R")]
    scalar_r: Option<f64>,
    degenerate: bool,
    backend_residual: Option<f64>,
    status: ScanStatus,
    message: &'a Option<String>,
}

#[derive(Serialize)]
struct CurvatureOut<'a> {
    command: &'static str,
    system: &'a str,
    metric: String,
    representation: Option<usize>,
    coordinates: Vec<String>,
    backend: gtd::curvature::Backend,
    rows: Vec<CurvatureRowOut<'a>>,
}

/// Scalar curvature of the induced metric over the grid. With a
/// representation index the metric is that of the `E^(i)` representation,
/// evaluated at the image of each canonical grid point; rows always list the
/// canonical coordinates.
pub fn curvature(cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let rel = cfg.relation()?;
    let spec = metric_or_default(cfg, &rel)?;
    let grid = cfg.grid(rel.n())?;
    let index = cfg.representation_index(rel.n())?;
    let options = ScanOptions {
        backend: cfg.curvature.backend,
        cross_check: cfg.curvature.cross_check,
        tolerance: cfg.curvature.tolerance,
    };
    let rows: Vec<ScanRow> = match index {
        None => curvature_scan(&metric_field(&spec, &rel)?, grid.points(), options),
        Some(i) => grid
            .points()
            .iter()
            .map(|e| {
                let field = metric_field_in_representation(&spec, &rel, i, e)
                    .and_then(|f| representation_point(&rel, i, e).map(|y| (f, y)));
                match field {
                    Ok((field, y)) => {
                        let mut row = curvature_scan(&field, &[y], options).remove(0);
                        row.point = e.clone();
                        row
                    }
                    Err(err) => failed_row(e, status_of(&err), &err),
                }
            })
            .collect(),
    };
    let exit = if rows.iter().all(|r| r.status == ScanStatus::Ok) {
        0
    } else {
        4
    };
    let names = coordinate_names(&rel);
    let text = match format {
        Format::Csv => {
            let mut header = names.clone();
            header.extend(
                [
                    "det_g",
                    "scalar_R",
                    "degenerate",
                    "backend_residual",
                    "status",
                ]
                .iter()
                .map(|s| s.to_string()),
            );
            let body = rows
                .iter()
                .map(|r| {
                    let mut out: Vec<String> = r.point.iter().map(|v| format_f64(*v)).collect();
                    out.push(opt(r.det_g));
                    out.push(opt(r.scalar));
                    out.push(r.degenerate.to_string());
                    out.push(opt(r.backend_residual));
                    out.push(scan_status_name(r.status).to_string());
                    out
                })
                .collect();
            write_csv(header, body)?
        }
        Format::Json => json(&CurvatureOut {
            command: "curvature",
            system: rel.label(),
            metric: spec.label(),
            representation: index.map(|i| i + 1),
            coordinates: names,
            backend: options.backend,
            rows: rows
                .iter()
                .map(|r| CurvatureRowOut {
                    point: &r.point,
                    det_g: r.det_g,
                    scalar_r: r.scalar,
                    degenerate: r.degenerate,
                    backend_residual: r.backend_residual,
                    status: r.status,
                    message: &r.message,
                })
                .collect(),
        })?,
    };
    Ok(Outcome { text, exit })
}

#[derive(Debug, Clone, Serialize)]
struct CompareRow {
    point: Vec<f64>,
    factor: Option<f64>,
    predicted_factor: Option<f64>,
    conformal_misfit: Option<f64>,
    #[serde(rename = "scalar_R_canonical")]
    scalar_r_canonical: Option<f64>,
    #[serde(rename = "scalar_R_representation")]
    scalar_r_representation: Option<f64>,
    curvature_rel_diff: Option<f64>,
    status: ScanStatus,
    message: Option<String>,
}

#[derive(Serialize)]
struct CompareOut<'a> {
    command: &'static str,
    system: &'a str,
    metric: String,
    representation: usize,
    coordinates: Vec<String>,
    rows: Vec<CompareRow>,
}

/// The factor the theory predicts between the two representations, when it
/// predicts one.
fn predicted_factor(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Option<f64> {
    match spec.family() {
        MetricFamily::GtGeneral => predicted_conformal_factor(rel, spec, index, e)
            .ok()
            .filter(|p| !p.degenerate)
            .map(|p| p.value),
        MetricFamily::Natural { excluded } if excluded == index && rel.beta().is_some() => {
            Some(1.0)
        }
        MetricFamily::GpHessianLimit => lift_to_equilibrium(rel, e).ok().map(|z| -1.0 / z.i[index]),
        _ => None,
    }
}

fn compare_point(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
    cfg: &RunConfig,
) -> CompareRow {
    let mut row = CompareRow {
        point: e.to_vec(),
        factor: None,
        predicted_factor: None,
        conformal_misfit: None,
        scalar_r_canonical: None,
        scalar_r_representation: None,
        curvature_rel_diff: None,
        status: ScanStatus::Ok,
        message: None,
    };
    let metrics = induced_metric(spec, rel, e).and_then(|canon| {
        let rep = induced_metric_in_representation(spec, rel, index, e)?;
        Ok((canon, pullback_to_canonical(&rep, rel, index, e)?))
    });
    let (canon, back) = match metrics {
        Ok(pair) => pair,
        Err(err) => {
            row.status = status_of(&err);
            row.message = Some(err.to_string());
            return row;
        }
    };
    if let Some((f, misfit)) = conformal_misfit(&back.g, &canon.g) {
        row.conformal_misfit = Some(misfit);
        row.factor = (misfit <= CONFORMAL_TOL).then_some(f);
    }
    row.predicted_factor = predicted_factor(spec, rel, index, e);
    let backend = cfg.curvature.backend;
    let curvatures = metric_field(spec, rel)
        .and_then(|field| scalar_curvature(&field, e, backend))
        .and_then(|rc| {
            let field = metric_field_in_representation(spec, rel, index, e)?;
            let y = representation_point(rel, index, e)?;
            Ok((rc.scalar, scalar_curvature(&field, &y, backend)?.scalar))
        });
    match curvatures {
        Ok((rc, rr)) => {
            row.scalar_r_canonical = Some(rc);
            row.scalar_r_representation = Some(rr);
            row.curvature_rel_diff = Some((rc - rr).abs() / rc.abs().max(1.0));
        }
        Err(err) => {
            row.status = status_of(&err);
            row.message = Some(err.to_string());
        }
    }
    row
}

/// Per-point comparison of the canonical and `E^(i)` representations.
pub fn compare(cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let rel = cfg.relation()?;
    let spec = metric_or_default(cfg, &rel)?;
    let grid = cfg.grid(rel.n())?;
    let natural = match spec.family() {
        MetricFamily::Natural { excluded } => Some(excluded),
        _ => None,
    };
    let index = cfg.representation_index(rel.n())?.or(natural).unwrap_or(0);
    let rows: Vec<CompareRow> = grid
        .points()
        .iter()
        .map(|e| compare_point(&spec, &rel, index, e, cfg))
        .collect();
    let exit = if rows.iter().all(|r| r.status == ScanStatus::Ok) {
        0
    } else {
        4
    };
    let names = coordinate_names(&rel);
    let text = match format {
        Format::Csv => {
            let mut header = names.clone();
            header.extend(
                [
                    "factor",
                    "predicted_factor",
                    "conformal_misfit",
                    "scalar_R_canonical",
                    "scalar_R_representation",
                    "curvature_rel_diff",
                    "status",
                ]
                .iter()
                .map(|s| s.to_string()),
            );
            let body = rows
                .iter()
                .map(|r| {
                    let mut out: Vec<String> = r.point.iter().map(|v| format_f64(*v)).collect();
                    out.extend(
                        [
                            r.factor,
                            r.predicted_factor,
                            r.conformal_misfit,
                            r.scalar_r_canonical,
                            r.scalar_r_representation,
                            r.curvature_rel_diff,
                        ]
                        .map(opt),
                    );
                    out.push(scan_status_name(r.status).to_string());
                    out
                })
                .collect();
            write_csv(header, body)?
        }
        Format::Json => json(&CompareOut {
            command: "compare",
            system: rel.label(),
            metric: spec.label(),
            representation: index + 1,
            coordinates: names,
            rows,
        })?,
    };
    Ok(Outcome { text, exit })
}

pub fn parse_claims(names: &[String]) -> CliResult<Vec<ClaimId>> {
    let mut claims = Vec::new();
    for name in names {
        for part in name.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                claims.extend(ClaimId::ALL);
            } else {
                claims.push(part.parse::<ClaimId>().map_err(CliError::Config)?);
            }
        }
    }
    if claims.is_empty() {
        return Err(CliError::Config("no claims selected".into()));
    }
    let mut seen = Vec::new();
    claims.retain(|c| {
        let fresh = !seen.contains(c);
        seen.push(*c);
        fresh
    });
    Ok(claims)
}

/// 0 when every report passed or was not applicable; otherwise 4 for
/// evaluation errors, 1 for failures, 3 for unmet hypotheses.
pub fn verify_exit_code(reports: &[VerificationReport]) -> u8 {
    let any = |s: ClaimStatus| reports.iter().any(|r| r.status == s);
    if any(ClaimStatus::Error) {
        4
    } else if any(ClaimStatus::Failed) {
        1
    } else if any(ClaimStatus::HypothesisNotMet) {
        3
    } else {
        0
    }
}

/// Runs the selected claims; with an explicit metric every claim uses it,
/// otherwise each claim uses its canonical metric.
pub fn verify(cfg: &RunConfig, format: Format) -> CliResult<Outcome> {
    let rel = cfg.relation()?;
    let grid = cfg.grid(rel.n())?;
    let claims = parse_claims(&cfg.verify.claims)?;
    let options = VerifyOptions {
        index: cfg.representation_index(rel.n())?,
        tolerance: cfg.verify.tolerance,
        factor_perturbation: cfg.verify.factor_perturbation,
    };
    let reports = match &cfg.metric {
        Some(spec) => {
            if spec.n() != rel.n() {
                return Err(CliError::Config(format!(
                    "metric has {} degrees of freedom, the system has {}",
                    spec.n(),
                    rel.n()
                )));
            }
            claims
                .iter()
                .map(|&c| verify_or_report(c, &rel, spec, &grid, options))
                .collect()
        }
        None => verify_claims(&claims, &rel, &grid, options),
    };
    let exit = verify_exit_code(&reports);
    let text = match format {
        Format::Json => json(&reports)?,
        Format::Csv => {
            let header = [
                "claim_id",
                "system",
                "metric",
                "points",
                "skipped",
                "max_residual",
                "tolerance",
                "passed",
                "status",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let body = reports
                .iter()
                .map(|r| {
                    vec![
                        r.claim_id.to_string(),
                        r.system.clone(),
                        r.metric.clone(),
                        r.points.to_string(),
                        r.skipped.to_string(),
                        opt(r.max_residual.is_finite().then_some(r.max_residual)),
                        format_f64(r.tolerance),
                        r.passed.to_string(),
                        serde_json::to_value(r.status)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(header, body)?
        }
    };
    Ok(Outcome { text, exit })
}
