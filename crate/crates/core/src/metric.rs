//! Phase-space metrics and their pullbacks to the equilibrium manifold.
//!
//! Every family has the shape
//! `G = Θ⊗Θ + Σ_k c_k(Z) · ½(dE^k⊗dI_k + dI_k⊗dE^k)`
//! and differs only in the cross coefficients `c_k`:
//!
//! | family            | `c_k`                                  |
//! |-------------------|----------------------------------------|
//! | `GtGeneral`       | `(Σ_a ξ_a E^a I_a) · Λ_k · χ_k`        |
//! | `Gp { k }`        | `Λ_k · (E^k I_k)^{2k+1}`               |
//! | `GpHessianLimit`  | `Λ_k` (exponent `2k+1 = 0`)            |
//! | `Natural { i }`   | `Σ_{j≠i} 1 / (E^j I_j)`                |
//!
//! Pulled back along `E ↦ (Φ, E, ∂Φ)` the `Θ⊗Θ` part vanishes and
//! `g_ab = ½(c_a + c_b) · ∂_a∂_bΦ`.
//!
//! A metric on a representation is the same spec applied to the relation
//! `E^(i)(Φ, E^j)` in slot layout, so `ξ_(i)`, `χ_(i)` and `Λ_(i)` attach to
//! the slot holding `Φ` there.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::contact::{gibbs_one_form, PhasePoint};
use crate::deriv::{Jet4, Scalar};
use crate::error::{GtdError, Result};
use crate::expr::Expression;
use crate::relation::{check_invertible, representation_point, FundamentalRelation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricFamily {
    GtGeneral,
    Gp {
        k: i32,
    },
    /// `G_P` at `k = −½`: the pullback is the Hessian of `Φ`. Not Legendre
    /// invariant.
    GpHessianLimit,
    /// `G♮` with the sum excluding slot `excluded`.
    Natural {
        excluded: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaMode {
    Constant(f64),
    PerComponent(Vec<f64>),
    /// `Λ = (Σ ξ_a E^a I_a)⁻¹ Σ_{j≠i} 1/(E^j I_j)`.
    NaturalFormula {
        excluded: usize,
    },
    /// One shared expression or one per component, over `Phi, E1…, I1…`.
    Expression(Vec<Expression>),
}

/// Variable names available to `Λ` expressions, in phase-space order.
pub fn lambda_variables(n: usize) -> Vec<String> {
    crate::contact::phase_labels(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    family: MetricFamily,
    xi: Vec<f64>,
    chi: Vec<f64>,
    lambda: LambdaMode,
}

impl MetricSpec {
    pub fn new(
        family: MetricFamily,
        xi: Vec<f64>,
        chi: Vec<f64>,
        lambda: LambdaMode,
    ) -> Result<Self> {
        let spec = MetricSpec {
            family,
            xi,
            chi,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gt_general(xi: Vec<f64>, chi: Vec<f64>, lambda: LambdaMode) -> Result<Self> {
        MetricSpec::new(MetricFamily::GtGeneral, xi, chi, lambda)
    }

    /// `G_I`: `ξ = χ = 1`, constant `Λ`.
    pub fn gt_identity(n: usize, lambda: f64) -> Result<Self> {
        MetricSpec::gt_general(vec![1.0; n], vec![1.0; n], LambdaMode::Constant(lambda))
    }

    /// `G_II`: `ξ = 1`, `χ = diag(−1, 1, …, 1)`, constant `Λ`.
    pub fn gt_eta(n: usize, lambda: f64) -> Result<Self> {
        let mut chi = vec![1.0; n];
        chi[0] = -1.0;
        MetricSpec::gt_general(vec![1.0; n], chi, LambdaMode::Constant(lambda))
    }

    pub fn gp(n: usize, k: i32, lambda: f64) -> Result<Self> {
        MetricSpec::new(
            MetricFamily::Gp { k },
            vec![1.0; n],
            vec![1.0; n],
            LambdaMode::Constant(lambda),
        )
    }

    /// The `k = −½` Hessian metric with `Λ = 1`. Breaks Legendre invariance.
    pub fn hessian_limit(n: usize) -> Result<Self> {
        MetricSpec::new(
            MetricFamily::GpHessianLimit,
            vec![1.0; n],
            vec![1.0; n],
            LambdaMode::Constant(1.0),
        )
    }

    pub fn natural(n: usize, excluded: usize) -> Result<Self> {
        MetricSpec::new(
            MetricFamily::Natural { excluded },
            vec![1.0; n],
            vec![1.0; n],
            LambdaMode::NaturalFormula { excluded },
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.xi.len();
        let invalid = |msg: String| Err(GtdError::InvalidSpec(msg));
        if n == 0 || n > crate::deriv::MAX_DIM {
            return invalid(format!(
                "dimension {n} outside 1..={}",
                crate::deriv::MAX_DIM
            ));
        }
        if self.chi.len() != n {
            return invalid(format!("xi has {n} entries but chi has {}", self.chi.len()));
        }
        if self.xi.iter().chain(&self.chi).any(|v| !v.is_finite()) {
            return invalid("xi and chi must be finite".into());
        }
        match &self.lambda {
            LambdaMode::Constant(c) if !c.is_finite() => {
                return invalid("lambda must be finite".into())
            }
            LambdaMode::PerComponent(v) if v.len() != n => {
                return invalid(format!(
                    "per-component lambda needs {n} values, got {}",
                    v.len()
                ))
            }
            LambdaMode::PerComponent(v) if v.iter().any(|x| !x.is_finite()) => {
                return invalid("lambda must be finite".into())
            }
            LambdaMode::NaturalFormula { excluded } if *excluded >= n => {
                return invalid(format!(
                    "excluded index {} out of range for n = {n}",
                    excluded + 1
                ))
            }
            LambdaMode::Expression(exprs) => {
                if exprs.len() != 1 && exprs.len() != n {
                    return invalid(format!(
                        "lambda needs 1 or {n} expressions, got {}",
                        exprs.len()
                    ));
                }
                if exprs
                    .iter()
                    .any(|e| e.variables() != lambda_variables(n).as_slice())
                {
                    return invalid("lambda expressions must range over Phi, E1.., I1..".into());
                }
            }
            _ => {}
        }
        if let MetricFamily::Natural { excluded } = self.family {
            if n < 2 {
                return invalid("the natural metric needs at least two degrees of freedom".into());
            }
            if excluded >= n {
                return invalid(format!(
                    "excluded index {} out of range for n = {n}",
                    excluded + 1
                ));
            }
            if self.xi.iter().chain(&self.chi).any(|v| *v != 1.0)
                || self.lambda != (LambdaMode::NaturalFormula { excluded })
            {
                return invalid(
                    "the natural metric fixes xi = chi = 1 and the natural lambda".into(),
                );
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn family(&self) -> MetricFamily {
        self.family
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    pub fn lambda(&self) -> &LambdaMode {
        &self.lambda
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match self.family {
            MetricFamily::GtGeneral => format!("G^Phi(xi={:?}, chi={:?})", self.xi, self.chi),
            MetricFamily::Gp { k } => format!("G_P(k={k})"),
            MetricFamily::GpHessianLimit => "G_P hessian limit (not Legendre invariant)".into(),
            MetricFamily::Natural { excluded } => format!("G_natural(i={})", excluded + 1),
        }
    }

    /// Notes about choices that are allowed but unusual.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.xi.iter().any(|v| *v < 0.0) {
            out.push("negative xi entries have no established thermodynamic reading".into());
        }
        if self.family == MetricFamily::GpHessianLimit {
            out.push("the hessian limit violates Legendre invariance".into());
        }
        out
    }

    /// `Λ_k` at phase coordinates `z = (Φ, E, I)`.
    pub fn lambda_values<S: Scalar>(&self, z: &[S]) -> Result<Vec<S>> {
        let n = self.n();
        check_phase_len(z, n)?;
        let proto = &z[0];
        Ok(match &self.lambda {
            LambdaMode::Constant(c) => vec![proto.constant_like(*c); n],
            LambdaMode::PerComponent(v) => v.iter().map(|c| proto.constant_like(*c)).collect(),
            LambdaMode::NaturalFormula { excluded } => {
                let trace = self.trace(z);
                let value = natural_sum(z, n, *excluded)?.try_div(&trace)?;
                vec![value; n]
            }
            LambdaMode::Expression(exprs) => {
                let values = exprs
                    .iter()
                    .map(|e| e.eval(z))
                    .collect::<Result<Vec<S>>>()?;
                if values.len() == 1 {
                    vec![values[0].clone(); n]
                } else {
                    values
                }
            }
        })
    }

    /// `Σ_a ξ_a E^a I_a`.
    pub fn trace<S: Scalar>(&self, z: &[S]) -> S {
        let n = self.n();
        (0..n).fold(z[0].constant_like(0.0), |acc, a| {
            acc + (z[1 + a].clone() * z[1 + n + a].clone()).scale(self.xi[a])
        })
    }

    /// Cross coefficients `c_k` at phase coordinates `z = (Φ, E, I)`.
    pub fn cross_coefficients<S: Scalar>(&self, z: &[S]) -> Result<Vec<S>> {
        let n = self.n();
        check_phase_len(z, n)?;
        match self.family {
            MetricFamily::GtGeneral => {
                let trace = self.trace(z);
                let lambda = self.lambda_values(z)?;
                Ok((0..n)
                    .map(|k| (trace.clone() * lambda[k].clone()).scale(self.chi[k]))
                    .collect())
            }
            MetricFamily::Gp { k: power } => {
                let lambda = self.lambda_values(z)?;
                (0..n)
                    .map(|k| {
                        let product = z[1 + k].clone() * z[1 + n + k].clone();
                        Ok(lambda[k].clone() * product.try_powf((2 * power + 1) as f64)?)
                    })
                    .collect()
            }
            MetricFamily::GpHessianLimit => self.lambda_values(z),
            MetricFamily::Natural { excluded } => Ok(vec![natural_sum(z, n, excluded)?; n]),
        }
    }
}

fn check_phase_len<S>(z: &[S], n: usize) -> Result<()> {
    if z.len() != 2 * n + 1 {
        return Err(GtdError::DimensionMismatch {
            expected: 2 * n + 1,
            found: z.len(),
        });
    }
    Ok(())
}

/// `Σ_{j≠i} 1/(E^j I_j)`, refusing products that vanish against the scale
/// of the others.
fn natural_sum<S: Scalar>(z: &[S], n: usize, excluded: usize) -> Result<S> {
    let products: Vec<S> = (0..n)
        .map(|a| z[1 + a].clone() * z[1 + n + a].clone())
        .collect();
    let scale = products.iter().fold(0.0f64, |m, p| m.max(p.value().abs()));
    let mut total = z[0].constant_like(0.0);
    for (j, p) in products.iter().enumerate().filter(|(j, _)| *j != excluded) {
        let magnitude = p.value().abs();
        if scale == 0.0 || magnitude <= 1e-12 * scale {
            return Err(GtdError::SingularRepresentation {
                index: j,
                magnitude,
            });
        }
        total = total + p.try_recip()?;
    }
    Ok(total)
}

/// Relative determinant threshold for degeneracy: `|det g| ≤ tol·(max|g|)ⁿ`.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `(det, threshold)` for a square matrix.
pub fn degeneracy(g: &DMatrix<f64>) -> (f64, f64) {
    let det = g.determinant();
    let threshold = DEGENERACY_TOL * g.amax().powi(g.nrows() as i32);
    (det, threshold)
}

/// A metric evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub basis: Vec<String>,
    pub g: DMatrix<f64>,
    pub point: Vec<f64>,
    pub degenerate: bool,
}

impl MetricSample {
    pub fn new(basis: Vec<String>, g: DMatrix<f64>, point: Vec<f64>) -> Self {
        let (det, threshold) = degeneracy(&g);
        MetricSample {
            basis,
            g,
            point,
            degenerate: !(det.abs() > threshold),
        }
    }

    pub fn det(&self) -> f64 {
        self.g.determinant()
    }
}

/// The `(2n+1)`-dimensional metric at `z`.
pub fn phase_metric(spec: &MetricSpec, z: &PhasePoint) -> Result<MetricSample> {
    let n = z.n();
    if spec.n() != n {
        return Err(GtdError::DimensionMismatch {
            expected: spec.n(),
            found: n,
        });
    }
    let coords = z.coords();
    let coef = spec.cross_coefficients(&coords)?;
    let theta = DVector::from_vec(gibbs_one_form(z).components);
    let mut g = &theta * theta.transpose();
    for (k, c) in coef.iter().enumerate() {
        let (e, i) = (1 + k, 1 + n + k);
        g[(e, i)] += 0.5 * c;
        g[(i, e)] += 0.5 * c;
    }
    Ok(MetricSample::new(
        crate::contact::phase_labels(n),
        g,
        coords,
    ))
}

/// Jets of the induced metric components `g_ab(E)` at `e`, in the
/// coordinates of `rel`. Components carry valid order 2.
pub fn induced_metric_jets(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    e: &[f64],
) -> Result<Vec<Vec<Jet4>>> {
    let n = rel.n();
    if spec.n() != n {
        return Err(GtdError::DimensionMismatch {
            expected: spec.n(),
            found: n,
        });
    }
    let phi = rel.jet(e)?;
    let intensive = (0..n)
        .map(|a| phi.derivative(a))
        .collect::<Result<Vec<_>>>()?;
    let mut z = vec![phi.clone()];
    z.extend(Jet4::seeds(e)?);
    z.extend(intensive.iter().cloned());
    let coef = spec.cross_coefficients(&z)?;
    let mut g = vec![Vec::with_capacity(n); n];
    for a in 0..n {
        let row = intensive[a].clone();
        for b in 0..n {
            let hess = row.derivative(b)?;
            g[a].push((coef[a].clone() + coef[b].clone()).scale(0.5) * hess);
        }
    }
    Ok(g)
}

/// Induced metric on the equilibrium manifold of `rel`, basis `dE^a`.
pub fn induced_metric(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    e: &[f64],
) -> Result<MetricSample> {
    let jets = induced_metric_jets(spec, rel, e)?;
    let n = rel.n();
    let g = DMatrix::from_fn(n, n, |a, b| jets[a][b].value());
    Ok(MetricSample::new(rel.variables().to_vec(), g, e.to_vec()))
}

/// Induced metric of the `E^(i)` representation at the image of `e`, in the
/// coordinates `(Φ, E^{j≠i})` (slot layout).
pub fn induced_metric_in_representation(
    spec: &MetricSpec,
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Result<MetricSample> {
    let rep = rel.in_representation(index, e)?;
    let y = representation_point(rel, index, e)?;
    induced_metric(spec, &rep, &y)
}

/// Re-expresses a representation-`i` metric in the canonical coordinates by
/// the congruence `Jᵀ m J`, where `J` is the Jacobian of
/// `E ↦ (Φ(E), E^{j≠i})`: row `i` is the gradient, other rows are unit rows.
pub fn pullback_to_canonical(
    m: &MetricSample,
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Result<MetricSample> {
    let n = rel.n();
    if m.g.nrows() != n || m.g.ncols() != n {
        return Err(GtdError::DimensionMismatch {
            expected: n,
            found: m.g.nrows(),
        });
    }
    if index >= n {
        return Err(GtdError::IndexOutOfRange { index, dim: n });
    }
    let grad = rel.gradient(e)?;
    let mut j = DMatrix::identity(n, n);
    for b in 0..n {
        j[(index, b)] = grad[b];
    }
    let g = j.transpose() * &m.g * &j;
    // symmetric by construction up to rounding of the products
    let g = (&g + g.transpose()) * 0.5;
    Ok(MetricSample::new(rel.variables().to_vec(), g, e.to_vec()))
}

/// `f` with `g1 = f·g2` when the componentwise residual is at most
/// `tol·max|g1|`. `f` is a least-squares fit over the components of `g2`
/// above `1e-12·max|g2|`; structural zeros are still checked.
pub fn conformal_check(g1: &MetricSample, g2: &MetricSample, tol: f64) -> Option<f64> {
    conformal_fit(&g1.g, &g2.g, tol)
}

pub fn conformal_fit(g1: &DMatrix<f64>, g2: &DMatrix<f64>, tol: f64) -> Option<f64> {
    conformal_misfit(g1, g2).and_then(|(f, misfit)| (misfit <= tol).then_some(f))
}

/// Least-squares `f` for `g1 ≈ f·g2` and the relative misfit
/// `max|g1 − f·g2| / max|g1|`; `None` when `g2` has no usable component.
pub fn conformal_misfit(g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Option<(f64, f64)> {
    if g1.shape() != g2.shape() {
        return None;
    }
    let floor = 1e-12 * g2.amax();
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in g1.iter().zip(g2.iter()) {
        if b.abs() > floor {
            num += a * b;
            den += b * b;
        }
    }
    if den == 0.0 {
        return None;
    }
    let f = num / den;
    let scale = g1.amax();
    let residual = (g1 - g2 * f).amax();
    let misfit = if scale > 0.0 {
        residual / scale
    } else {
        f64::INFINITY
    };
    f.is_finite().then_some((f, misfit))
}

/// Value of the conformal factor relating the two representations, with a
/// flag when its bracket vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictedFactor {
    pub value: f64,
    pub degenerate: bool,
}

/// `−(1/(β I_(i)))·[ξ_(i) E^(i) + Σ_{j≠i}(ξ_(i) − ξ_j β) I_j E^j / I_(i)]·(ξ E·I)⁻¹`
/// for `G^Φ` specs with constant or per-component `Λ` satisfying
/// `Λ_(i) χ_(i) = Λ_j χ_j`.
pub fn predicted_conformal_factor(
    rel: &FundamentalRelation,
    spec: &MetricSpec,
    index: usize,
    e: &[f64],
) -> Result<PredictedFactor> {
    let beta = rel.beta().ok_or_else(|| {
        GtdError::HypothesisNotMet("the conformal factor requires a homogeneous relation".into())
    })?;
    if spec.family() != MetricFamily::GtGeneral {
        return Err(GtdError::InvalidSpec(
            "the conformal factor is defined for G^Phi only".into(),
        ));
    }
    let n = rel.n();
    if spec.n() != n {
        return Err(GtdError::DimensionMismatch {
            expected: spec.n(),
            found: n,
        });
    }
    let lambda: Vec<f64> = match spec.lambda() {
        LambdaMode::Constant(c) => vec![*c; n],
        LambdaMode::PerComponent(v) => v.clone(),
        _ => {
            return Err(GtdError::InvalidSpec(
                "the conformal factor needs constant or per-component lambda".into(),
            ))
        }
    };
    let chi = spec.chi();
    let anchor = lambda[index] * chi[index];
    for j in (0..n).filter(|&j| j != index) {
        let other = lambda[j] * chi[j];
        if (other - anchor).abs() > 1e-12 * anchor.abs().max(other.abs()) {
            return Err(GtdError::HypothesisNotMet(format!(
                "Lambda_{0} chi_{0} = {anchor} differs from Lambda_{1} chi_{1} = {other}",
                index + 1,
                j + 1
            )));
        }
    }
    let intensive = rel.gradient(e)?;
    check_invertible(&intensive, index)?;
    let xi = spec.xi();
    let ii = intensive[index];
    let trace: f64 = (0..n).map(|a| xi[a] * e[a] * intensive[a]).sum();
    if trace == 0.0 {
        return Err(GtdError::domain("xi E.I vanishes"));
    }
    let bracket_terms: Vec<f64> = std::iter::once(xi[index] * e[index])
        .chain(
            (0..n)
                .filter(|&j| j != index)
                .map(|j| (xi[index] - xi[j] * beta) * intensive[j] * e[j] / ii),
        )
        .collect();
    let bracket: f64 = bracket_terms.iter().sum();
    let scale = bracket_terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(PredictedFactor {
        value: -bracket / (beta * ii * trace),
        degenerate: bracket.abs() <= 1e-12 * scale,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LambdaDef {
    Constant { value: f64 },
    PerComponent { values: Vec<f64> },
    NaturalFormula { excluded: usize },
    Expression { sources: Vec<String> },
}

/// Serialized form of [`MetricSpec`]; indices are zero-based.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSpecDef {
    family: MetricFamily,
    xi: Vec<f64>,
    chi: Vec<f64>,
    lambda: LambdaDef,
}

impl Serialize for MetricSpec {
    fn serialize<Ser: serde::Serializer>(
        &self,
        s: Ser,
    ) -> std::result::Result<Ser::Ok, Ser::Error> {
        let lambda = match &self.lambda {
            LambdaMode::Constant(value) => LambdaDef::Constant { value: *value },
            LambdaMode::PerComponent(values) => LambdaDef::PerComponent {
                values: values.clone(),
            },
            LambdaMode::NaturalFormula { excluded } => LambdaDef::NaturalFormula {
                excluded: *excluded,
            },
            LambdaMode::Expression(exprs) => LambdaDef::Expression {
                sources: exprs.iter().map(|e| e.to_string()).collect(),
            },
        };
        MetricSpecDef {
            family: self.family,
            xi: self.xi.clone(),
            chi: self.chi.clone(),
            lambda,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let def = MetricSpecDef::deserialize(d)?;
        let n = def.xi.len();
        let lambda = match def.lambda {
            LambdaDef::Constant { value } => LambdaMode::Constant(value),
            LambdaDef::PerComponent { values } => LambdaMode::PerComponent(values),
            LambdaDef::NaturalFormula { excluded } => LambdaMode::NaturalFormula { excluded },
            LambdaDef::Expression { sources } => {
                let names = lambda_variables(n);
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                LambdaMode::Expression(
                    sources
                        .iter()
                        .map(|s| Expression::parse(s, &names))
                        .collect::<Result<_>>()
                        .map_err(D::Error::custom)?,
                )
            }
        };
        MetricSpec::new(def.family, def.xi, def.chi, lambda).map_err(D::Error::custom)
    }
}
