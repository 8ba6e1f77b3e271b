//! Fundamental relations `Φ(E¹…Eⁿ)` and their alternative representations.
//!
//! Built-in families live on the open positive orthant `E^a > 0`. A relation
//! may carry a homogeneity order `β` (`Φ(λE) = λ^β Φ(E)`); the propositions
//! about changes of representation are only certified when it does.
//!
//! Representation coordinates keep the slot layout of the canonical ones:
//! in the `E^(i)` representation, slot `i` holds `Φ` and every other slot
//! keeps its `E^j`. The new potential is `E^(i)(Φ, E^j)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deriv::{Jet4, Scalar, MAX_DIM, ORDER};
use crate::error::{GtdError, Result};
use crate::expr::Expression;

/// A scalar potential that can be evaluated on values and on jets.
pub trait Potential: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn eval_jet(&self, x: &[Jet4]) -> Result<Jet4>;
    fn in_domain(&self, x: &[f64]) -> bool;
}

/// `Σ_k c_k ∏_a (E^a)^{p_{k,a}}` on the positive orthant.
#[derive(Debug, Clone)]
struct PowerSum {
    terms: Vec<(f64, Vec<f64>)>,
}

impl PowerSum {
    fn arity(&self) -> usize {
        self.terms[0].1.len()
    }

    fn eval_generic<S: Scalar>(&self, x: &[S]) -> Result<S> {
        if x.len() != self.arity() {
            return Err(GtdError::DimensionMismatch {
                expected: self.arity(),
                found: x.len(),
            });
        }
        if let Some(bad) = x.iter().map(Scalar::value).find(|v| !(*v > 0.0)) {
            return Err(GtdError::domain(format!(
                "built-in relations require E^a > 0 (got {bad})"
            )));
        }
        let mut total = x[0].constant_like(0.0);
        for (c, powers) in &self.terms {
            let mut term = x[0].constant_like(*c);
            for (xa, &p) in x.iter().zip(powers) {
                if p != 0.0 {
                    term = term * xa.try_powf(p)?;
                }
            }
            total = total + term;
        }
        Ok(total)
    }
}

impl Potential for PowerSum {
    fn arity(&self) -> usize {
        PowerSum::arity(self)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_generic(x)
    }

    fn eval_jet(&self, x: &[Jet4]) -> Result<Jet4> {
        self.eval_generic(x)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.arity() && x.iter().all(|v| *v > 0.0 && v.is_finite())
    }
}

#[derive(Debug, Clone)]
struct ExprPotential {
    expr: Expression,
}

impl Potential for ExprPotential {
    fn arity(&self) -> usize {
        self.expr.variables().len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = self.expr.eval(x)?;
        if !v.is_finite() {
            return Err(GtdError::domain(
                "expression evaluated to a non-finite value",
            ));
        }
        Ok(v)
    }

    fn eval_jet(&self, x: &[Jet4]) -> Result<Jet4> {
        self.expr.eval(x)
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.arity() && self.eval(x).is_ok()
    }
}

/// `E^(i)` as a function of `(Φ, E^{j≠i})`, defined implicitly by
/// `Φ(E) = const`.
#[derive(Debug, Clone)]
struct InvertedPotential {
    base: FundamentalRelation,
    index: usize,
    hint: f64,
}

impl InvertedPotential {
    fn value_at(&self, y: &[f64]) -> Result<f64> {
        solve_representation_value(&self.base, self.index, y, self.hint)
    }
}

impl Potential for InvertedPotential {
    fn arity(&self) -> usize {
        self.base.n()
    }

    fn eval(&self, y: &[f64]) -> Result<f64> {
        self.value_at(y)
    }

    /// Solves `Φ(X, y_j) = y_i` order by order: the chord step
    /// `X ← X − (Φ(X, y_j) − y_i) / I_(i)` fixes one more Taylor order per
    /// pass, so `ORDER + 1` passes give the exact truncated expansion.
    fn eval_jet(&self, y: &[Jet4]) -> Result<Jet4> {
        let n = self.base.n();
        if y.len() != n {
            return Err(GtdError::DimensionMismatch {
                expected: n,
                found: y.len(),
            });
        }
        let values: Vec<f64> = y.iter().map(Jet4::value).collect();
        let x0 = self.value_at(&values)?;
        let mut canonical = values.clone();
        canonical[self.index] = x0;
        let slope = partial_along(&self.base, &canonical, self.index)?;
        check_invertible(&self.base.gradient(&canonical)?, self.index)?;

        let dim = y[0].dim();
        let mut x = Jet4::constant(dim, x0);
        for _ in 0..=ORDER {
            let args: Vec<Jet4> = (0..n)
                .map(|a| {
                    if a == self.index {
                        x.clone()
                    } else {
                        y[a].clone()
                    }
                })
                .collect();
            let residual = self.base.potential.eval_jet(&args)? - &y[self.index];
            x = x - residual.scale(1.0 / slope);
        }
        Ok(x)
    }

    fn in_domain(&self, y: &[f64]) -> bool {
        y.len() == self.base.n() && self.value_at(y).is_ok()
    }
}

/// `∂Φ/∂E^axis` at `x` through a one-variable jet.
fn partial_along(rel: &FundamentalRelation, x: &[f64], axis: usize) -> Result<f64> {
    let args: Vec<Jet4> = x
        .iter()
        .enumerate()
        .map(|(a, &v)| {
            if a == axis {
                Jet4::seed(&[v], 0).expect("one-dimensional seed")
            } else {
                Jet4::constant(1, v)
            }
        })
        .collect();
    Ok(rel.potential.eval_jet(&args)?.first(0))
}

/// Relative tolerance below which `I_(i)` counts as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

pub(crate) fn check_invertible(intensive: &[f64], index: usize) -> Result<()> {
    if index >= intensive.len() {
        return Err(GtdError::IndexOutOfRange {
            index,
            dim: intensive.len(),
        });
    }
    let scale = intensive.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let magnitude = intensive[index].abs();
    if scale == 0.0 || magnitude <= SINGULAR_TOL * scale || !magnitude.is_finite() {
        return Err(GtdError::SingularRepresentation { index, magnitude });
    }
    Ok(())
}

/// A fundamental relation `Φ(E¹…Eⁿ)`.
#[derive(Debug, Clone)]
pub struct FundamentalRelation {
    potential: Arc<dyn Potential>,
    beta: Option<f64>,
    label: String,
    variables: Vec<String>,
}

pub fn default_variables(n: usize) -> Vec<String> {
    (1..=n).map(|a| format!("E{a}")).collect()
}

impl FundamentalRelation {
    pub fn from_potential(potential: Arc<dyn Potential>, label: impl Into<String>) -> Result<Self> {
        let n = potential.arity();
        if n == 0 || n > MAX_DIM {
            return Err(GtdError::DimensionMismatch {
                expected: MAX_DIM,
                found: n,
            });
        }
        Ok(FundamentalRelation {
            potential,
            beta: None,
            label: label.into(),
            variables: default_variables(n),
        })
    }

    pub fn n(&self) -> usize {
        self.potential.arity()
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    pub fn with_beta(mut self, beta: Option<f64>) -> Self {
        self.beta = beta;
        self
    }

    /// Sets `β` from [`detect_homogeneity`] with 32 samples.
    pub fn with_detected_beta(self) -> Result<Self> {
        let beta = detect_homogeneity(&self, 32)?;
        Ok(self.with_beta(beta))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    pub fn in_domain(&self, e: &[f64]) -> bool {
        self.potential.in_domain(e)
    }

    fn check_point(&self, e: &[f64]) -> Result<()> {
        if e.len() != self.n() {
            return Err(GtdError::DimensionMismatch {
                expected: self.n(),
                found: e.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, e: &[f64]) -> Result<f64> {
        self.check_point(e)?;
        self.potential.eval(e)
    }

    /// Order-4 jet of `Φ` at `e` in the coordinates `E^a`.
    pub fn jet(&self, e: &[f64]) -> Result<Jet4> {
        self.check_point(e)?;
        self.potential.eval_jet(&Jet4::seeds(e)?)
    }

    /// `I_a = ∂Φ/∂E^a`.
    pub fn gradient(&self, e: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(e)?.gradient())
    }

    pub fn hessian(&self, e: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.jet(e)?.hessian())
    }

    /// The relation `E^(i)(Φ, E^{j≠i})`, evaluated in slot layout (slot `i`
    /// carries `Φ`). `anchor` is a canonical point the inversion starts from.
    pub fn in_representation(&self, index: usize, anchor: &[f64]) -> Result<FundamentalRelation> {
        self.check_point(anchor)?;
        check_invertible(&self.gradient(anchor)?, index)?;
        let mut variables = self.variables.clone();
        variables[index] = "Phi".to_string();
        Ok(FundamentalRelation {
            potential: Arc::new(InvertedPotential {
                base: self.clone(),
                index,
                hint: anchor[index],
            }),
            beta: None,
            label: format!("{}-representation of {}", self.variables[index], self.label),
            variables,
        })
    }
}

/// `c · ∏ (E^a)^{p_a}`, homogeneous of order `Σ p_a`.
pub fn monomial_relation(c: f64, exponents: &[f64]) -> Result<FundamentalRelation> {
    homogeneous_sum(&[(c, exponents.to_vec())])
}

/// `Σ_k c_k ∏ (E^a)^{p_{k,a}}` where every term has the same total degree.
pub fn homogeneous_sum(terms: &[(f64, Vec<f64>)]) -> Result<FundamentalRelation> {
    let Some((_, first)) = terms.first() else {
        return Err(GtdError::DegenerateRelation("no terms".into()));
    };
    let n = first.len();
    if n == 0 || n > MAX_DIM {
        return Err(GtdError::DimensionMismatch {
            expected: MAX_DIM,
            found: n,
        });
    }
    let beta: f64 = first.iter().sum();
    for (c, powers) in terms {
        if *c == 0.0 || !c.is_finite() {
            return Err(GtdError::DegenerateRelation(format!("coefficient {c}")));
        }
        if powers.len() != n {
            return Err(GtdError::DimensionMismatch {
                expected: n,
                found: powers.len(),
            });
        }
        if powers.iter().any(|p| !p.is_finite()) {
            return Err(GtdError::DegenerateRelation("non-finite exponent".into()));
        }
        let degree: f64 = powers.iter().sum();
        if (degree - beta).abs() > 1e-12 * beta.abs().max(1.0) {
            return Err(GtdError::HypothesisNotMet(format!(
                "terms have different degrees {beta} and {degree}"
            )));
        }
    }
    let label = terms
        .iter()
        .map(|(c, p)| {
            let factors: Vec<String> = p
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0.0)
                .map(|(a, e)| format!("E{}^{e}", a + 1))
                .collect();
            format!("{c}*{}", factors.join("*"))
        })
        .collect::<Vec<_>>()
        .join(" + ");
    let potential = PowerSum {
        terms: terms.to_vec(),
    };
    Ok(FundamentalRelation::from_potential(Arc::new(potential), label)?.with_beta(Some(beta)))
}

/// Parses a relation over the given variable names; `β` is left unset.
pub fn parse_relation(source: &str, variables: &[&str]) -> Result<FundamentalRelation> {
    let expr = Expression::parse(source, variables)?;
    let mut rel = FundamentalRelation::from_potential(
        Arc::new(ExprPotential { expr }),
        source.trim().to_string(),
    )?;
    rel.variables = variables.iter().map(|s| s.to_string()).collect();
    Ok(rel)
}

/// Largest accepted residual of the log-log homogeneity fit.
pub const HOMOGENEITY_TOL: f64 = 1e-8;

/// Estimates `β` from `ln Φ(λE) − ln Φ(E) = β ln λ` at `samples` random
/// points `E ∈ [0.5, 2]ⁿ` and scalings `λ ∈ [0.5, 0.9] ∪ [1.1, 2]`.
/// Returns `None` when the fit residual exceeds [`HOMOGENEITY_TOL`].
pub fn detect_homogeneity(rel: &FundamentalRelation, samples: usize) -> Result<Option<f64>> {
    if samples < 8 {
        return Err(GtdError::domain(
            "homogeneity detection needs at least 8 samples",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f_6e6f);
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let e: Vec<f64> = (0..rel.n()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let lambda = if rng.gen_bool(0.5) {
            rng.gen_range(0.5..0.9)
        } else {
            rng.gen_range(1.1..2.0)
        };
        let scaled: Vec<f64> = e.iter().map(|v| v * lambda).collect();
        let (phi, phi_scaled) = (rel.eval(&e)?, rel.eval(&scaled)?);
        if phi == 0.0 || phi_scaled == 0.0 {
            if phi != phi_scaled {
                return Ok(None);
            }
            continue;
        }
        if phi.signum() != phi_scaled.signum() {
            return Ok(None);
        }
        pairs.push((lambda.ln(), (phi_scaled.abs() / phi.abs()).ln()));
    }
    if pairs.is_empty() {
        return Ok(None);
    }
    let beta = pairs.iter().map(|(l, r)| l * r).sum::<f64>()
        / pairs.iter().map(|(l, _)| l * l).sum::<f64>();
    let residual = pairs
        .iter()
        .map(|(l, r)| (r - beta * l).abs())
        .fold(0.0, f64::max);
    Ok((residual < HOMOGENEITY_TOL).then_some(beta))
}

/// Image of a canonical point in the `E^(i)` representation: `E` with slot
/// `i` replaced by `Φ(E)`.
pub fn representation_point(
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Result<Vec<f64>> {
    if index >= rel.n() {
        return Err(GtdError::IndexOutOfRange {
            index,
            dim: rel.n(),
        });
    }
    let mut y = e.to_vec();
    y[index] = rel.eval(e)?;
    Ok(y)
}

/// Derivatives of `E^(i)(Φ, E^{j≠i})` at the image of a canonical point.
#[derive(Debug, Clone)]
pub struct RepresentationJet {
    pub index: usize,
    /// Representation coordinates (slot `index` holds `Φ`).
    pub point: Vec<f64>,
    pub jet: Jet4,
}

impl RepresentationJet {
    pub fn value(&self) -> f64 {
        self.jet.value()
    }

    /// `∂E^(i)/∂Φ`.
    pub fn d_phi(&self) -> f64 {
        self.jet.first(self.index)
    }

    /// `∂E^(i)/∂E^j` for `j ≠ i`.
    pub fn d_extensive(&self, j: usize) -> f64 {
        self.jet.first(j)
    }

    /// Second partial along two representation slots.
    pub fn second(&self, a: usize, b: usize) -> f64 {
        self.jet.second(a, b)
    }
}

/// Implicit derivatives of `E^(i)` at the image of `e`, from the jets of `Φ`
/// alone (no root finding: `e` already lies on the graph).
pub fn induced_representation_jet(
    rel: &FundamentalRelation,
    index: usize,
    e: &[f64],
) -> Result<RepresentationJet> {
    let rep = rel.in_representation(index, e)?;
    let point = representation_point(rel, index, e)?;
    let jet = rep.jet(&point)?;
    Ok(RepresentationJet { index, point, jet })
}

/// Solves `Φ(E) = y_i` for `E^(i)` with the other slots fixed at `y_j`,
/// by Newton's method guarded with backtracking and, once a sign change is
/// seen, bisection.
pub fn solve_representation_value(
    rel: &FundamentalRelation,
    index: usize,
    y: &[f64],
    guess: f64,
) -> Result<f64> {
    rel.check_point(y)?;
    if index >= rel.n() {
        return Err(GtdError::IndexOutOfRange {
            index,
            dim: rel.n(),
        });
    }
    let target = y[index];
    let mut point = y.to_vec();
    let mut residual_at = |x: f64| -> Result<(f64, f64)> {
        point[index] = x;
        if !rel.in_domain(&point) {
            return Err(GtdError::domain(format!(
                "E^{} = {x} outside the domain",
                index + 1
            )));
        }
        let slope = partial_along(rel, &point, index)?;
        Ok((rel.eval(&point)? - target, slope))
    };

    let mut x = guess;
    let (mut g, mut slope) = residual_at(x)?;
    let tolerance = 1e-12 * target.abs().max(1.0);
    // (point with negative residual, point with positive residual)
    let mut bracket: Option<(f64, f64)> = None;
    for _ in 0..200 {
        if g == 0.0 {
            return Ok(x);
        }
        let newton = if slope != 0.0 {
            x - g / slope
        } else {
            f64::NAN
        };
        let mut candidate = match bracket {
            Some((neg, pos)) => {
                let (lo, hi) = (neg.min(pos), neg.max(pos));
                if newton.is_finite() && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                }
            }
            None => newton,
        };
        if !candidate.is_finite() {
            return Err(GtdError::RootFinding(format!(
                "zero slope at E^{} = {x}",
                index + 1
            )));
        }
        // backtrack towards x until the candidate is admissible and, before a
        // bracket exists, the residual does not grow
        let mut accepted = None;
        for _ in 0..60 {
            match residual_at(candidate) {
                Ok((gc, sc))
                    if bracket.is_some() || gc.abs() <= g.abs() || gc.signum() != g.signum() =>
                {
                    accepted = Some((gc, sc));
                    break;
                }
                _ => candidate = 0.5 * (x + candidate),
            }
        }
        let Some((gc, sc)) = accepted else {
            return Err(GtdError::RootFinding(format!(
                "no admissible Newton step from E^{} = {x}",
                index + 1
            )));
        };
        if gc.signum() != g.signum() {
            bracket = Some(if g < 0.0 {
                (x, candidate)
            } else {
                (candidate, x)
            });
        } else if let Some((neg, pos)) = bracket {
            bracket = Some(if gc < 0.0 {
                (candidate, pos)
            } else {
                (neg, candidate)
            });
        }
        let step = (candidate - x).abs();
        x = candidate;
        g = gc;
        slope = sc;
        if step <= 4.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    if g.abs() > tolerance {
        return Err(GtdError::RootFinding(format!(
            "residual {g:e} after iteration limit at E^{} = {x}",
            index + 1
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_root_monomial() {
        let rel = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
        assert_eq!(rel.beta(), Some(1.0));
        assert_relative_eq!(rel.eval(&[1.0, 1.0]).unwrap(), 1.0);
        let grad = rel.gradient(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(grad[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(grad[1], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn three_quarter_monomial_hessian() {
        let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        assert_eq!(rel.beta(), Some(1.5));
        let jet = rel.jet(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(jet.value(), 1.0);
        assert_relative_eq!(jet.first(0), 0.75, max_relative = 1e-14);
        assert_relative_eq!(jet.first(1), 0.75, max_relative = 1e-14);
        let h = jet.hessian();
        assert_relative_eq!(h[0][0], -3.0 / 16.0, max_relative = 1e-14);
        assert_relative_eq!(h[1][1], -3.0 / 16.0, max_relative = 1e-14);
        assert_relative_eq!(h[0][1], 9.0 / 16.0, max_relative = 1e-14);
        assert_relative_eq!(h[1][0], 9.0 / 16.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_relation() {
        let rel = monomial_relation(1.0, &[1.0, 0.0]).unwrap();
        for e in [[7.0, 3.0], [0.2, 5.0]] {
            assert_eq!(rel.eval(&e).unwrap(), e[0]);
            assert_eq!(rel.gradient(&e).unwrap(), vec![1.0, 0.0]);
        }
        assert_eq!(rel.beta(), Some(1.0));
    }

    #[test]
    fn zero_coefficient_rejected() {
        assert!(matches!(
            monomial_relation(0.0, &[1.0, 1.0]),
            Err(GtdError::DegenerateRelation(_))
        ));
    }

    #[test]
    fn mixed_degree_sum_rejected() {
        assert!(homogeneous_sum(&[(1.0, vec![2.0, 0.0]), (1.0, vec![0.0, 1.0])]).is_err());
    }

    #[test]
    fn built_ins_reject_boundary() {
        let rel = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
        assert!(matches!(rel.eval(&[0.0, 1.0]), Err(GtdError::Domain(_))));
        assert!(!rel.in_domain(&[-1.0, 1.0]));
    }

    #[test]
    fn parsed_matches_monomial_on_grid() {
        let parsed = parse_relation("(E1*E2)^0.75", &["E1", "E2"]).unwrap();
        let mono = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        assert_eq!(parsed.beta(), None);
        for a in 0..10 {
            for b in 0..10 {
                let e = [0.5 + 0.15 * a as f64, 0.5 + 0.15 * b as f64];
                let (p, m) = (parsed.eval(&e).unwrap(), mono.eval(&e).unwrap());
                assert!((p - m).abs() <= 1e-12 * m.abs(), "{e:?}");
            }
        }
    }

    #[test]
    fn parse_errors_surface() {
        assert!(matches!(
            parse_relation("E1 + ", &["E1"]),
            Err(GtdError::Parse { offset: 5, .. })
        ));
        let rel = parse_relation("ln(E1)", &["E1"]).unwrap();
        assert!(matches!(rel.eval(&[-1.0]), Err(GtdError::Domain(_))));
    }

    #[test]
    fn homogeneity_detection() {
        let mono = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        let beta = detect_homogeneity(&mono, 16).unwrap().unwrap();
        assert!((beta - 1.5).abs() < 1e-8);

        let quad = parse_relation("E1^2 + E1*E2", &["E1", "E2"]).unwrap();
        let beta = detect_homogeneity(&quad, 16).unwrap().unwrap();
        assert!((beta - 2.0).abs() < 1e-8);

        let mixed = parse_relation("E1^2 + E2", &["E1", "E2"]).unwrap();
        assert_eq!(detect_homogeneity(&mixed, 16).unwrap(), None);

        assert!(detect_homogeneity(&mono, 4).is_err());
    }

    #[test]
    fn representation_first_partials() {
        let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        let rj = induced_representation_jet(&rel, 0, &[1.0, 1.0]).unwrap();
        assert_eq!(rj.point, vec![1.0, 1.0]);
        assert_relative_eq!(rj.value(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(rj.d_phi(), 4.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(rj.d_extensive(1), -1.0, max_relative = 1e-13);
    }

    #[test]
    fn representation_singular_when_potential_ignores_axis() {
        let rel = monomial_relation(1.0, &[1.0, 0.0]).unwrap();
        assert!(matches!(
            induced_representation_jet(&rel, 1, &[2.0, 3.0]),
            Err(GtdError::SingularRepresentation { index: 1, .. })
        ));
    }

    #[test]
    fn inverse_closed_form() {
        // (E1 E2)^{3/4} = Φ  ⇔  E1 = Φ^{4/3} / E2
        let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        let closed = monomial_relation(1.0, &[4.0 / 3.0, -1.0]).unwrap();
        for e in [[1.0, 1.0], [0.6, 1.7], [1.9, 0.55]] {
            let rj = induced_representation_jet(&rel, 0, &e).unwrap();
            let reference = closed.jet(&rj.point).unwrap();
            for (got, want) in rj.jet.coefficients().iter().zip(reference.coefficients()) {
                assert!(
                    (got - want).abs() <= 1e-11 * want.abs().max(1.0),
                    "{got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn root_finder_recovers_off_anchor_points() {
        let rel = monomial_relation(2.0, &[0.25, 1.25]).unwrap();
        let y = [3.0, 0.8];
        let x = solve_representation_value(&rel, 0, &y, 1.0).unwrap();
        assert_relative_eq!(rel.eval(&[x, 0.8]).unwrap(), 3.0, max_relative = 1e-12);
        // far-away guess still converges
        let x2 = solve_representation_value(&rel, 0, &y, 40.0).unwrap();
        assert_relative_eq!(x, x2, max_relative = 1e-12);
    }
}
