//! The thermodynamic phase space in Darboux coordinates.
//!
//! Coordinates are ordered `(Φ, E¹…Eⁿ, I₁…Iₙ)` everywhere: phase points,
//! one-form components, Jacobians and phase-space metrics share it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{GtdError, Result};
use crate::relation::{check_invertible, FundamentalRelation};

/// A point `Z = (Φ, E, I)` of the `(2n+1)`-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub phi: f64,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
}

impl PhasePoint {
    pub fn new(phi: f64, e: Vec<f64>, i: Vec<f64>) -> Result<Self> {
        if e.len() != i.len() {
            return Err(GtdError::DimensionMismatch {
                expected: e.len(),
                found: i.len(),
            });
        }
        if e.is_empty() {
            return Err(GtdError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(PhasePoint { phi, e, i })
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    /// Flat coordinates `(Φ, E, I)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.n() + 1);
        z.push(self.phi);
        z.extend_from_slice(&self.e);
        z.extend_from_slice(&self.i);
        z
    }

    pub fn from_coords(z: &[f64]) -> Result<Self> {
        if z.len() < 3 || z.len() % 2 == 0 {
            return Err(GtdError::DimensionMismatch {
                expected: 2 * (z.len() / 2).max(1) + 1,
                found: z.len(),
            });
        }
        let n = (z.len() - 1) / 2;
        PhasePoint::new(z[0], z[1..=n].to_vec(), z[n + 1..].to_vec())
    }
}

/// Coordinate labels in the global ordering.
pub fn phase_labels(n: usize) -> Vec<String> {
    let mut labels = vec!["Phi".to_string()];
    labels.extend((1..=n).map(|a| format!("E{a}")));
    labels.extend((1..=n).map(|a| format!("I{a}")));
    labels
}

/// Components of a one-form in the basis `(dΦ, dE¹…dEⁿ, dI₁…dIₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormValue {
    pub components: Vec<f64>,
}

/// `Θ = dΦ − I_a dE^a`.
pub fn gibbs_one_form(z: &PhasePoint) -> OneFormValue {
    let mut components = vec![1.0];
    components.extend(z.i.iter().map(|v| -v));
    components.extend(std::iter::repeat(0.0).take(z.n()));
    OneFormValue { components }
}

/// The equilibrium point over `e`: `Φ = Φ(E)`, `I_a = ∂Φ/∂E^a`.
pub fn lift_to_equilibrium(rel: &FundamentalRelation, e: &[f64]) -> Result<PhasePoint> {
    let jet = rel.jet(e)?;
    PhasePoint::new(jet.value(), e.to_vec(), jet.gradient())
}

/// Jacobian `(2n+1) × n` of the embedding `E ↦ (Φ(E), E, ∂Φ(E))`.
pub fn embedding_jacobian(rel: &FundamentalRelation, e: &[f64]) -> Result<DMatrix<f64>> {
    let jet = rel.jet(e)?;
    let n = rel.n();
    let grad = jet.gradient();
    let hess = jet.hessian();
    let mut j = DMatrix::zeros(2 * n + 1, n);
    for b in 0..n {
        j[(0, b)] = grad[b];
        j[(1 + b, b)] = 1.0;
        for a in 0..n {
            j[(1 + n + a, b)] = hess[a][b];
        }
    }
    Ok(j)
}

/// Components of `φ*Θ` on the equilibrium manifold (basis `dE^a`); these
/// vanish by the first law.
pub fn equilibrium_pullback(rel: &FundamentalRelation, e: &[f64]) -> Result<Vec<f64>> {
    let z = lift_to_equilibrium(rel, e)?;
    let theta = DVector::from_vec(gibbs_one_form(&z).components);
    let j = embedding_jacobian(rel, e)?;
    Ok((j.transpose() * theta).iter().copied().collect())
}

/// A differentiable self-map of phase space.
pub trait PhaseMap {
    fn apply(&self, z: &PhasePoint) -> Result<PhasePoint>;
    /// `∂(f(Z))/∂Z` in the global ordering.
    fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>>;
}

pub struct IdentityMap;

impl PhaseMap for IdentityMap {
    fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        Ok(z.clone())
    }

    fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(2 * z.n() + 1, 2 * z.n() + 1))
    }
}

fn check_subset(subset: &[usize], n: usize) -> Result<Vec<bool>> {
    let mut member = vec![false; n];
    for &k in subset {
        if k >= n {
            return Err(GtdError::IndexOutOfRange { index: k, dim: n });
        }
        member[k] = true;
    }
    Ok(member)
}

/// Partial Legendre transformation on the conjugate pairs in `subset`:
/// `Φ̃ = Φ − Σ I_k E^k`, `Ẽ^k = −I_k`, `Ĩ_k = E^k`. The full subset is the
/// total transformation. Applying it twice gives `(Φ, −E^k, −I_k)` on the
/// subset.
pub fn legendre_map(z: &PhasePoint, subset: &[usize]) -> Result<PhasePoint> {
    let member = check_subset(subset, z.n())?;
    let mut out = z.clone();
    for k in (0..z.n()).filter(|&k| member[k]) {
        out.phi -= z.i[k] * z.e[k];
        out.e[k] = -z.i[k];
        out.i[k] = z.e[k];
    }
    Ok(out)
}

pub fn legendre_jacobian(z: &PhasePoint, subset: &[usize]) -> Result<DMatrix<f64>> {
    let n = z.n();
    let member = check_subset(subset, n)?;
    let mut j = DMatrix::identity(2 * n + 1, 2 * n + 1);
    for k in (0..n).filter(|&k| member[k]) {
        let (ek, ik) = (1 + k, 1 + n + k);
        j[(0, ek)] = -z.i[k];
        j[(0, ik)] = -z.e[k];
        j[(ek, ek)] = 0.0;
        j[(ek, ik)] = -1.0;
        j[(ik, ik)] = 0.0;
        j[(ik, ek)] = 1.0;
    }
    Ok(j)
}

/// Change of representation exchanging `Φ` with `E^(i)`:
/// `Φ' = E^(i)`, `E^(i)' = Φ`, `I_(i)' = 1/I_(i)`, `I_j' = −I_j/I_(i)`.
/// Its own inverse.
pub fn representation_map(z: &PhasePoint, index: usize) -> Result<PhasePoint> {
    check_invertible(&z.i, index)?;
    let ii = z.i[index];
    let mut out = z.clone();
    out.phi = z.e[index];
    out.e[index] = z.phi;
    for k in 0..z.n() {
        out.i[k] = if k == index { 1.0 / ii } else { -z.i[k] / ii };
    }
    Ok(out)
}

pub fn representation_jacobian(z: &PhasePoint, index: usize) -> Result<DMatrix<f64>> {
    check_invertible(&z.i, index)?;
    let n = z.n();
    let ii = z.i[index];
    let (ei, col_i) = (1 + index, 1 + n + index);
    let mut j = DMatrix::identity(2 * n + 1, 2 * n + 1);
    j[(0, 0)] = 0.0;
    j[(0, ei)] = 1.0;
    j[(ei, ei)] = 0.0;
    j[(ei, 0)] = 1.0;
    for k in 0..n {
        let row = 1 + n + k;
        if k == index {
            j[(row, col_i)] = -1.0 / (ii * ii);
        } else {
            j[(row, row)] = -1.0 / ii;
            j[(row, col_i)] = z.i[k] / (ii * ii);
        }
    }
    Ok(j)
}

pub struct LegendreMap(pub Vec<usize>);

impl PhaseMap for LegendreMap {
    fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        legendre_map(z, &self.0)
    }

    fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>> {
        legendre_jacobian(z, &self.0)
    }
}

pub struct RepresentationMap(pub usize);

impl PhaseMap for RepresentationMap {
    fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        representation_map(z, self.0)
    }

    fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>> {
        representation_jacobian(z, self.0)
    }
}

/// Wraps a plain closure; the Jacobian is taken by central differences with
/// step `1e-6 · max(1, |z|)`.
pub struct NumericMap<F>(pub F);

impl<F> PhaseMap for NumericMap<F>
where
    F: Fn(&PhasePoint) -> Result<PhasePoint>,
{
    fn apply(&self, z: &PhasePoint) -> Result<PhasePoint> {
        (self.0)(z)
    }

    fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>> {
        let base = z.coords();
        let dim = base.len();
        let mut j = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let h = 1e-6 * base[col].abs().max(1.0);
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[col] += h;
            minus[col] -= h;
            let fp = (self.0)(&PhasePoint::from_coords(&plus)?)?.coords();
            let fm = (self.0)(&PhasePoint::from_coords(&minus)?)?.coords();
            for row in 0..dim {
                j[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}

/// Relative residual above which a pulled-back Θ is not proportional to Θ.
pub const PROPORTIONALITY_TOL: f64 = 1e-9;

/// `Ω` with `f*(Θ) = Ω·Θ` at `z`, from the least-squares fit
/// `Ω = ⟨f*Θ, Θ⟩ / ⟨Θ, Θ⟩` and a componentwise residual check.
pub fn contactomorphism_factor(map: &dyn PhaseMap, z: &PhasePoint) -> Result<f64> {
    let image = map.apply(z)?;
    let jac = map.jacobian(z)?;
    let theta_image = DVector::from_vec(gibbs_one_form(&image).components);
    let pulled = jac.transpose() * theta_image;
    let theta = DVector::from_vec(gibbs_one_form(z).components);
    if pulled.len() != theta.len() {
        return Err(GtdError::DimensionMismatch {
            expected: theta.len(),
            found: pulled.len(),
        });
    }
    let omega = pulled.dot(&theta) / theta.dot(&theta);
    let residual = (&pulled - &theta * omega).amax();
    if !omega.is_finite() || residual > PROPORTIONALITY_TOL * pulled.amax().max(1.0) {
        return Err(GtdError::NotAContactomorphism { residual });
    }
    Ok(omega)
}

/// A differential form with constant coefficients, stored as a map from the
/// bitmask of its basis covectors (ascending order) to the coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    terms: BTreeMap<u32, f64>,
}

impl Form {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= 31, "form dimension {dim} too large");
        Form {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn one_form(components: &[f64]) -> Self {
        let mut f = Form::zero(components.len());
        for (k, &c) in components.iter().enumerate() {
            f.add_term(1 << k, c);
        }
        f
    }

    /// `c · dx^a ∧ dx^b`.
    pub fn basis_two_form(dim: usize, a: usize, b: usize, c: f64) -> Self {
        let left = Form::one_form(&unit(dim, a, c));
        left.wedge(&Form::one_form(&unit(dim, b, 1.0)))
    }

    fn add_term(&mut self, mask: u32, c: f64) {
        if c != 0.0 {
            *self.terms.entry(mask).or_insert(0.0) += c;
        }
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim, "form dimension mismatch");
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim, "form dimension mismatch");
        let mut out = Form::zero(self.dim);
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                // sign of sorting the concatenation: count pairs (i in a, j in b) with i > j
                let mut swaps = 0;
                for j in 0..self.dim {
                    if b & (1 << j) != 0 {
                        swaps += (a >> (j + 1)).count_ones();
                    }
                }
                let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
                out.add_term(a | b, sign * ca * cb);
            }
        }
        out
    }

    /// Coefficient of `dx¹ ∧ … ∧ dx^dim`.
    pub fn top_component(&self) -> f64 {
        let full = if self.dim == 0 {
            0
        } else {
            (1u32 << self.dim) - 1
        };
        self.terms.get(&full).copied().unwrap_or(0.0)
    }
}

fn unit(dim: usize, k: usize, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = c;
    v
}

/// `dΘ = dE^a ∧ dI_a` for the Gibbs form.
pub fn gibbs_differential(n: usize) -> Form {
    let dim = 2 * n + 1;
    (0..n).fold(Form::zero(dim), |acc, a| {
        acc.add(&Form::basis_two_form(dim, 1 + a, 1 + n + a, 1.0))
    })
}

/// Single component of `θ ∧ (dθ)ⁿ` for a one-form and its differential.
pub fn nonintegrability_value(theta: &OneFormValue, dtheta: &Form) -> f64 {
    let n = (theta.components.len() - 1) / 2;
    let mut top = Form::one_form(&theta.components);
    for _ in 0..n {
        top = top.wedge(dtheta);
    }
    top.top_component()
}

/// Whether `Θ ∧ (dΘ)ⁿ ≠ 0` at `z`.
pub fn nonintegrability_check(z: &PhasePoint) -> bool {
    nonintegrability_value(&gibbs_one_form(z), &gibbs_differential(z.n())) != 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::monomial_relation;

    fn z0() -> PhasePoint {
        PhasePoint::new(1.0, vec![1.0, 1.0], vec![0.75, 0.75]).unwrap()
    }

    #[test]
    fn lift_examples() {
        let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        let z = lift_to_equilibrium(&rel, &[1.0, 1.0]).unwrap();
        assert_eq!(z.phi, 1.0);
        assert!((z.i[0] - 0.75).abs() < 1e-15 && (z.i[1] - 0.75).abs() < 1e-15);

        let rel = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
        let z = lift_to_equilibrium(&rel, &[4.0, 1.0]).unwrap();
        assert!((z.phi - 2.0).abs() < 1e-15);
        assert!((z.i[0] - 0.25).abs() < 1e-15 && (z.i[1] - 1.0).abs() < 1e-15);

        let rel = monomial_relation(1.0, &[1.0, 0.0]).unwrap();
        let z = lift_to_equilibrium(&rel, &[7.0, 3.0]).unwrap();
        assert_eq!((z.phi, z.i.clone()), (7.0, vec![1.0, 0.0]));
    }

    #[test]
    fn gibbs_form_components() {
        assert_eq!(
            gibbs_one_form(&z0()).components,
            vec![1.0, -0.75, -0.75, 0.0, 0.0]
        );
        let zero = PhasePoint::new(3.0, vec![1.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            gibbs_one_form(&zero).components,
            vec![1.0, 0.0, 0.0, 0.0, 0.0]
        );
        let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
        let pulled = equilibrium_pullback(&rel, &[1.0, 1.0]).unwrap();
        assert!(pulled.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn total_legendre_example() {
        let t = legendre_map(&z0(), &[0, 1]).unwrap();
        assert_eq!(t.phi, -0.5);
        assert_eq!(t.e, vec![-0.75, -0.75]);
        assert_eq!(t.i, vec![1.0, 1.0]);
        assert_eq!(legendre_map(&z0(), &[]).unwrap(), z0());
        let origin = PhasePoint::new(0.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(
            legendre_map(&origin, &[1]).unwrap().coords(),
            origin.coords()
        );
        let twice = legendre_map(&t, &[0, 1]).unwrap();
        assert_eq!(twice.phi, 1.0);
        assert_eq!(twice.e, vec![-1.0, -1.0]);
        assert_eq!(twice.i, vec![-0.75, -0.75]);
        assert!(legendre_map(&z0(), &[2]).is_err());
    }

    #[test]
    fn representation_example_and_involution() {
        let r = representation_map(&z0(), 0).unwrap();
        assert_eq!(r.phi, 1.0);
        assert_eq!(r.e, vec![1.0, 1.0]);
        assert!((r.i[0] - 4.0 / 3.0).abs() < 1e-15 && (r.i[1] + 1.0).abs() < 1e-15);
        let back = representation_map(&r, 0).unwrap();
        for (a, b) in back.coords().iter().zip(z0().coords()) {
            assert!((a - b).abs() < 1e-15);
        }
        let singular = PhasePoint::new(1.0, vec![1.0, 1.0], vec![0.0, 0.5]).unwrap();
        assert!(matches!(
            representation_map(&singular, 0),
            Err(GtdError::SingularRepresentation { index: 0, .. })
        ));
    }

    #[test]
    fn conformal_factors() {
        let z = z0();
        assert!((contactomorphism_factor(&IdentityMap, &z).unwrap() - 1.0).abs() < 1e-15);
        for subset in [vec![0], vec![1], vec![0, 1]] {
            let omega = contactomorphism_factor(&LegendreMap(subset), &z).unwrap();
            assert!((omega - 1.0).abs() < 1e-15);
        }
        let omega = contactomorphism_factor(&RepresentationMap(0), &z).unwrap();
        assert!((omega + 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn numeric_jacobian_agrees_with_analytic() {
        let z = PhasePoint::new(0.7, vec![1.3, 0.4], vec![0.9, -0.2]).unwrap();
        let numeric = NumericMap(|p: &PhasePoint| representation_map(p, 0))
            .jacobian(&z)
            .unwrap();
        let exact = representation_jacobian(&z, 0).unwrap();
        assert!((numeric - exact).amax() < 1e-8);
    }

    #[test]
    fn non_contact_map_rejected() {
        // scaling E alone does not preserve the contact distribution
        let squash = NumericMap(|p: &PhasePoint| {
            let mut q = p.clone();
            q.e[0] *= 2.0;
            Ok(q)
        });
        assert!(matches!(
            contactomorphism_factor(&squash, &z0()),
            Err(GtdError::NotAContactomorphism { .. })
        ));
    }

    #[test]
    fn wedge_signs() {
        let dx = Form::one_form(&[1.0, 0.0]);
        let dy = Form::one_form(&[0.0, 1.0]);
        assert_eq!(dx.wedge(&dy).top_component(), 1.0);
        assert_eq!(dy.wedge(&dx).top_component(), -1.0);
        assert_eq!(dx.wedge(&dx).top_component(), 0.0);
    }

    #[test]
    fn nonintegrability() {
        let z1 = PhasePoint::new(0.3, vec![2.0], vec![0.4]).unwrap();
        let v1 = nonintegrability_value(&gibbs_one_form(&z1), &gibbs_differential(1));
        assert_eq!(v1.abs(), 1.0);
        assert!(nonintegrability_check(&z1));
        let v2 = nonintegrability_value(&gibbs_one_form(&z0()), &gibbs_differential(2));
        assert_eq!(v2.abs(), 2.0);
        assert!(nonintegrability_check(&z0()));
        let zero = OneFormValue {
            components: vec![0.0; 5],
        };
        assert_eq!(nonintegrability_value(&zero, &gibbs_differential(2)), 0.0);
    }
}
