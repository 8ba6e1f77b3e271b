//! Levi-Civita curvature of metric fields on the equilibrium manifold.
//!
//! With `g_ab,c = ∂_c g_ab`:
//!
//! - `Γ_{d,bc} = ½(g_db,c + g_dc,b − g_bc,d)`, `Γ^a_bc = g^{ad} Γ_{d,bc}`
//! - `R_abcd = ½(g_ad,bc + g_bc,ad − g_ac,bd − g_bd,ac)
//!            + g_ef (Γ^e_bc Γ^f_ad − Γ^e_bd Γ^f_ac)`, `R^a_bcd = g^{ae} R_ebcd`
//! - `Ric_bd = R^a_bad`, `R = g^{bd} Ric_bd`
//!
//! The unit 2-sphere has `R = +2` in this convention.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deriv::{fd_partial, Jet4};
use crate::error::{GtdError, Result};
use crate::metric::{degeneracy, induced_metric_jets, MetricSpec};
use crate::relation::FundamentalRelation;

/// A metric whose components can be expanded as jets at any point.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;
    fn labels(&self) -> Vec<String>;
    /// Component jets `g_ab`, valid to at least order 2.
    fn jets(&self, x: &[f64]) -> Result<Vec<Vec<Jet4>>>;

    fn values(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let jets = self.jets(x)?;
        let n = self.dim();
        Ok(DMatrix::from_fn(n, n, |a, b| jets[a][b].value()))
    }
}

/// The induced metric of a spec on the equilibrium manifold of a relation.
#[derive(Debug, Clone)]
pub struct InducedMetricField {
    spec: MetricSpec,
    rel: FundamentalRelation,
}

impl InducedMetricField {
    pub fn relation(&self) -> &FundamentalRelation {
        &self.rel
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }
}

pub fn metric_field(spec: &MetricSpec, rel: &FundamentalRelation) -> Result<InducedMetricField> {
    if spec.n() != rel.n() {
        return Err(GtdError::DimensionMismatch {
            expected: rel.n(),
            found: spec.n(),
        });
    }
    Ok(InducedMetricField {
        spec: spec.clone(),
        rel: rel.clone(),
    })
}

/// The field of the `E^(i)` representation over `(Φ, E^{j≠i})`; `anchor`
/// is a canonical point used to start the inversion.
pub fn metric_field_in_representation(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    index: usize,
    anchor: &[f64],
) -> Result<InducedMetricField> {
    metric_field(spec, &rel.in_representation(index, anchor)?)
}

impl MetricField for InducedMetricField {
    fn dim(&self) -> usize {
        self.rel.n()
    }

    fn labels(&self) -> Vec<String> {
        self.rel.variables().to_vec()
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<Vec<Jet4>>> {
        induced_metric_jets(&self.spec, &self.rel, x)
    }
}

type JetComponents = dyn Fn(&[Jet4]) -> Result<Vec<Vec<Jet4>>> + Send + Sync;

/// A metric given by a closure over coordinate jets.
#[derive(Clone)]
pub struct ClosureMetricField {
    dim: usize,
    labels: Vec<String>,
    components: Arc<JetComponents>,
}

impl ClosureMetricField {
    pub fn new<F>(labels: Vec<String>, components: F) -> Self
    where
        F: Fn(&[Jet4]) -> Result<Vec<Vec<Jet4>>> + Send + Sync + 'static,
    {
        ClosureMetricField {
            dim: labels.len(),
            labels,
            components: Arc::new(components),
        }
    }

    /// `δ_ab` on `ℝⁿ`.
    pub fn euclidean(n: usize) -> Self {
        let labels = (1..=n).map(|a| format!("x{a}")).collect();
        ClosureMetricField::new(labels, move |x| {
            Ok((0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| x[0].constant_like(f64::from(u8::from(a == b))))
                        .collect()
                })
                .collect())
        })
    }

    /// `r²(dθ² + sin²θ dφ²)`; scalar curvature `2/r²`.
    pub fn sphere(radius: f64) -> Self {
        let r2 = radius * radius;
        ClosureMetricField::new(vec!["theta".into(), "phi".into()], move |x| {
            let s = x[0].sin();
            let zero = x[0].constant_like(0.0);
            Ok(vec![
                vec![x[0].constant_like(r2), zero.clone()],
                vec![zero, (&s * &s).scale(r2)],
            ])
        })
    }

    /// Upper half-plane `(dx² + dy²)/y²`; scalar curvature `−2`.
    pub fn hyperbolic_plane() -> Self {
        ClosureMetricField::new(vec!["x".into(), "y".into()], |x| {
            let w = x[1].powi(-2)?;
            let zero = x[0].constant_like(0.0);
            Ok(vec![vec![w.clone(), zero.clone()], vec![zero, w]])
        })
    }
}

use crate::deriv::Scalar;

impl MetricField for ClosureMetricField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<Vec<Jet4>>> {
        if x.len() != self.dim {
            return Err(GtdError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        (self.components)(&Jet4::seeds(x)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Jets,
    FiniteDiff,
}

/// Base step of the finite-difference backend (scaled by `max(1, |x|)`).
pub const FD_STEP: f64 = 1e-4;

/// Relative tolerance of the jets/finite-difference cross-check.
pub const BACKEND_TOL: f64 = 1e-4;

/// Metric values with first and second coordinate derivatives:
/// `dg[c][(a,b)] = ∂_c g_ab`, `ddg[c][d][(a,b)] = ∂_c∂_d g_ab`.
struct MetricDerivatives {
    g: DMatrix<f64>,
    dg: Vec<DMatrix<f64>>,
    ddg: Vec<Vec<DMatrix<f64>>>,
}

fn derivatives(field: &dyn MetricField, x: &[f64], backend: Backend) -> Result<MetricDerivatives> {
    let n = field.dim();
    if x.len() != n {
        return Err(GtdError::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    match backend {
        Backend::Jets => {
            let jets = field.jets(x)?;
            let have = jets
                .iter()
                .flatten()
                .map(Jet4::valid_order)
                .min()
                .unwrap_or(0);
            if have < 2 {
                return Err(GtdError::InsufficientOrder { have, need: 2 });
            }
            let at = |f: &dyn Fn(&Jet4) -> f64| DMatrix::from_fn(n, n, |a, b| f(&jets[a][b]));
            Ok(MetricDerivatives {
                g: at(&|j| j.value()),
                dg: (0..n).map(|c| at(&|j| j.first(c))).collect(),
                ddg: (0..n)
                    .map(|c| (0..n).map(|d| at(&|j| j.second(c, d))).collect())
                    .collect(),
            })
        }
        Backend::FiniteDiff => {
            let g = field.values(x)?;
            let partial = |alpha: &[u8]| -> Result<DMatrix<f64>> {
                let mut out = DMatrix::zeros(n, n);
                for a in 0..n {
                    for b in a..n {
                        let v =
                            fd_partial(|p| Ok(field.values(p)?[(a, b)]), x, alpha, Some(FD_STEP))?;
                        out[(a, b)] = v;
                        out[(b, a)] = v;
                    }
                }
                Ok(out)
            };
            let mut dg = Vec::with_capacity(n);
            let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
            for c in 0..n {
                let mut alpha = vec![0u8; n];
                alpha[c] = 1;
                dg.push(partial(&alpha)?);
                for d in c..n {
                    let mut alpha = vec![0u8; n];
                    alpha[c] += 1;
                    alpha[d] += 1;
                    let m = partial(&alpha)?;
                    ddg[d][c] = m.clone();
                    ddg[c][d] = m;
                }
            }
            Ok(MetricDerivatives { g, dg, ddg })
        }
    }
}

/// Curvature data at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    /// `gamma[a][b][c] = Γ^a_bc`.
    pub gamma: Vec<Vec<Vec<f64>>>,
    /// `riemann[a][b][c][d] = R^a_bcd`.
    pub riemann: Vec<Vec<Vec<Vec<f64>>>>,
    pub ricci: Vec<Vec<f64>>,
    pub scalar: f64,
    pub det_g: f64,
    pub degenerate: bool,
    /// `‖g‖₁ ‖g⁻¹‖₁`.
    pub condition: f64,
    pub backend: Backend,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn inverse(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64, f64)> {
    let (det, threshold) = degeneracy(g);
    if !(det.abs() > threshold) {
        return Err(GtdError::DegenerateMetric { det, threshold });
    }
    let inv = g
        .clone()
        .lu()
        .try_inverse()
        .ok_or(GtdError::DegenerateMetric { det, threshold })?;
    let condition = one_norm(g) * one_norm(&inv);
    Ok((inv, det, condition))
}

/// `Γ_{d,bc}` and `Γ^a_bc`.
fn connection(
    m: &MetricDerivatives,
    inv: &DMatrix<f64>,
) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let n = m.g.nrows();
    let mut lowered = vec![vec![vec![0.0; n]; n]; n];
    for d in 0..n {
        for b in 0..n {
            for c in 0..n {
                lowered[d][b][c] = 0.5 * (m.dg[c][(d, b)] + m.dg[b][(d, c)] - m.dg[d][(b, c)]);
            }
        }
    }
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                gamma[a][b][c] = (0..n).map(|d| inv[(a, d)] * lowered[d][b][c]).sum();
            }
        }
    }
    (lowered, gamma)
}

/// `Γ^a_bc` from the jet backend.
pub fn christoffel(field: &dyn MetricField, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let m = derivatives(field, x, Backend::Jets)?;
    let (inv, _, _) = inverse(&m.g)?;
    Ok(connection(&m, &inv).1)
}

pub fn scalar_curvature(
    field: &dyn MetricField,
    x: &[f64],
    backend: Backend,
) -> Result<CurvatureReport> {
    let m = derivatives(field, x, backend)?;
    let n = m.g.nrows();
    let (inv, det_g, condition) = inverse(&m.g)?;
    let (_, gamma) = connection(&m, &inv);

    let mut lowered = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let second = 0.5
                        * (m.ddg[b][c][(a, d)] + m.ddg[a][d][(b, c)]
                            - m.ddg[b][d][(a, c)]
                            - m.ddg[a][c][(b, d)]);
                    let mut quadratic = 0.0;
                    for e in 0..n {
                        for f in 0..n {
                            quadratic += m.g[(e, f)]
                                * (gamma[e][b][c] * gamma[f][a][d]
                                    - gamma[e][b][d] * gamma[f][a][c]);
                        }
                    }
                    lowered[a][b][c][d] = second + quadratic;
                }
            }
        }
    }
    let mut riemann = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    riemann[a][b][c][d] = (0..n).map(|e| inv[(a, e)] * lowered[e][b][c][d]).sum();
                }
            }
        }
    }
    let ricci: Vec<Vec<f64>> = (0..n)
        .map(|b| {
            (0..n)
                .map(|d| (0..n).map(|a| riemann[a][b][a][d]).sum())
                .collect()
        })
        .collect();
    let scalar = (0..n)
        .flat_map(|b| (0..n).map(move |d| (b, d)))
        .map(|(b, d)| inv[(b, d)] * ricci[b][d])
        .sum();
    Ok(CurvatureReport {
        point: x.to_vec(),
        gamma,
        riemann,
        ricci,
        scalar,
        det_g,
        degenerate: false,
        condition,
        backend,
    })
}

/// `|R_jets − R_fd| / max(1, |R_jets|)`.
pub fn backend_residual(jets: &CurvatureReport, fd: &CurvatureReport) -> f64 {
    (jets.scalar - fd.scalar).abs() / jets.scalar.abs().max(1.0)
}

/// Jet-backend report, checked against finite differences; disagreement
/// beyond `tol` is an error.
pub fn cross_checked_curvature(
    field: &dyn MetricField,
    x: &[f64],
    tol: f64,
) -> Result<CurvatureReport> {
    let jets = scalar_curvature(field, x, Backend::Jets)?;
    let fd = scalar_curvature(field, x, Backend::FiniteDiff)?;
    if backend_residual(&jets, &fd) > tol {
        return Err(GtdError::BackendDisagreement {
            jets: jets.scalar,
            finite_diff: fd.scalar,
        });
    }
    Ok(jets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    Ok,
    Degenerate,
    SingularRepresentation,
    BackendDisagreement,
    Error,
}

/// One grid point of a curvature scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub point: Vec<f64>,
    pub det_g: Option<f64>,
    pub scalar: Option<f64>,
    pub degenerate: bool,
    pub backend_residual: Option<f64>,
    pub status: ScanStatus,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub backend: Backend,
    /// Also run the other backend and record the residual.
    pub cross_check: bool,
    pub tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            backend: Backend::Jets,
            cross_check: true,
            tolerance: BACKEND_TOL,
        }
    }
}

fn scan_point(field: &dyn MetricField, x: &[f64], options: ScanOptions) -> ScanRow {
    let mut row = ScanRow {
        point: x.to_vec(),
        det_g: None,
        scalar: None,
        degenerate: false,
        backend_residual: None,
        status: ScanStatus::Ok,
        message: None,
    };
    let fail = |mut row: ScanRow, err: GtdError| {
        row.status = match err {
            GtdError::DegenerateMetric { .. } => {
                row.degenerate = true;
                ScanStatus::Degenerate
            }
            GtdError::SingularRepresentation { .. } => ScanStatus::SingularRepresentation,
            GtdError::BackendDisagreement { .. } => ScanStatus::BackendDisagreement,
            _ => ScanStatus::Error,
        };
        row.message = Some(err.to_string());
        row
    };
    match field.values(x) {
        Ok(g) => row.det_g = Some(g.determinant()),
        Err(err) => return fail(row, err),
    }
    let primary = match scalar_curvature(field, x, options.backend) {
        Ok(report) => report,
        Err(err) => return fail(row, err),
    };
    row.scalar = Some(primary.scalar);
    if options.cross_check {
        let other = match options.backend {
            Backend::Jets => Backend::FiniteDiff,
            Backend::FiniteDiff => Backend::Jets,
        };
        match scalar_curvature(field, x, other) {
            Ok(second) => {
                let (jets, fd) = match options.backend {
                    Backend::Jets => (&primary, &second),
                    Backend::FiniteDiff => (&second, &primary),
                };
                let residual = backend_residual(jets, fd);
                row.backend_residual = Some(residual);
                if residual > options.tolerance {
                    let err = GtdError::BackendDisagreement {
                        jets: jets.scalar,
                        finite_diff: fd.scalar,
                    };
                    return fail(row, err);
                }
            }
            Err(err) => return fail(row, err),
        }
    }
    row
}

/// Curvature at every point, in parallel; rows keep the order of `points`
/// and per-point failures are recorded rather than aborting the scan.
pub fn curvature_scan(
    field: &dyn MetricField,
    points: &[Vec<f64>],
    options: ScanOptions,
) -> Vec<ScanRow> {
    points
        .par_iter()
        .map(|x| scan_point(field, x, options))
        .collect()
}
