use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{GtdError, Result};

/// Highest total derivative order carried by a [`Jet4`].
pub const ORDER: u8 = 4;

/// Largest number of variables a jet may be taken over.
pub const MAX_DIM: usize = 8;

type Key = [u8; MAX_DIM];

/// Monomial bookkeeping shared by every jet of a given dimension.
struct Layout {
    dim: usize,
    monomials: Vec<Key>,
    factorial: Vec<f64>,
    index: HashMap<Key, usize>,
    /// `(p, q, r)` with `monomials[p] + monomials[q] == monomials[r]`.
    products: Vec<(u16, u16, u16)>,
    /// Per axis: `(src, dst, multiplier)` for the coefficientwise derivative.
    derivative: Vec<Vec<(u16, u16, f64)>>,
}

fn compositions(dim: usize, degree: u8, prefix: &mut Vec<u8>, out: &mut Vec<Key>) {
    if prefix.len() + 1 == dim {
        let mut key = [0u8; MAX_DIM];
        key[..prefix.len()].copy_from_slice(prefix);
        key[prefix.len()] = degree;
        out.push(key);
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first);
        compositions(dim, degree - first, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn new(dim: usize) -> Self {
        let mut monomials = Vec::new();
        if dim == 0 {
            monomials.push([0u8; MAX_DIM]);
        } else {
            for d in 0..=ORDER {
                compositions(dim, d, &mut Vec::with_capacity(dim), &mut monomials);
            }
        }
        let degree: Vec<u8> = monomials.iter().map(|m| m.iter().sum()).collect();
        let factorial = monomials
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&k| (1..=k as u32).product::<u32>() as f64)
                    .product()
            })
            .collect();
        let index: HashMap<Key, usize> =
            monomials.iter().enumerate().map(|(i, m)| (*m, i)).collect();

        let mut products = Vec::new();
        for (p, mp) in monomials.iter().enumerate() {
            for (q, mq) in monomials.iter().enumerate() {
                if degree[p] + degree[q] > ORDER {
                    continue;
                }
                let mut sum = [0u8; MAX_DIM];
                for k in 0..dim {
                    sum[k] = mp[k] + mq[k];
                }
                products.push((p as u16, q as u16, index[&sum] as u16));
            }
        }

        let derivative = (0..dim)
            .map(|axis| {
                monomials
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m[axis] > 0)
                    .map(|(src, m)| {
                        let mut lowered = *m;
                        lowered[axis] -= 1;
                        (src as u16, index[&lowered] as u16, m[axis] as f64)
                    })
                    .collect()
            })
            .collect();

        Layout {
            dim,
            monomials,
            factorial,
            index,
            products,
            derivative,
        }
    }

    fn get(dim: usize) -> &'static Layout {
        static LAYOUTS: [OnceLock<Layout>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
        LAYOUTS[dim].get_or_init(|| Layout::new(dim))
    }

    fn key(&self, alpha: &[u8]) -> Option<usize> {
        if alpha.len() != self.dim {
            return None;
        }
        let mut key = [0u8; MAX_DIM];
        key[..self.dim].copy_from_slice(alpha);
        self.index.get(&key).copied()
    }
}

/// Truncated multivariate Taylor expansion of a scalar function at a point.
///
/// Holds every coefficient with total degree at most [`ORDER`]. Coefficients
/// use the Taylor normalization `c_α = ∂^α f / α!`, so that
/// `f(x + h) ≈ Σ c_α h^α`; [`Jet4::partial`] converts back to raw partial
/// derivatives by multiplying with `α!`.
///
/// `valid_order` records how many orders are trustworthy. Seeds and
/// constants are exact through order 4; every [`Jet4::derivative`] loses one
/// order and binary operations keep the smaller of their operands.
#[derive(Clone)]
pub struct Jet4 {
    layout: &'static Layout,
    coeffs: Vec<f64>,
    valid_order: u8,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(GtdError::DimensionMismatch {
            expected: MAX_DIM,
            found: dim,
        });
    }
    Ok(())
}

/// All multi-indices of total degree ≤ 4 over `dim` variables, in storage order.
pub fn multi_indices(dim: usize) -> Vec<Vec<u8>> {
    assert!(dim <= MAX_DIM, "jets support at most {MAX_DIM} variables");
    let layout = Layout::get(dim);
    layout.monomials.iter().map(|m| m[..dim].to_vec()).collect()
}

impl Jet4 {
    pub fn constant(dim: usize, value: f64) -> Self {
        assert!(dim <= MAX_DIM, "jets support at most {MAX_DIM} variables");
        let layout = Layout::get(dim);
        let mut coeffs = vec![0.0; layout.monomials.len()];
        coeffs[0] = value;
        Jet4 {
            layout,
            coeffs,
            valid_order: ORDER,
        }
    }

    /// Jet of the coordinate function `x[index]` at `point`.
    pub fn seed(point: &[f64], index: usize) -> Result<Self> {
        check_dim(point.len())?;
        if index >= point.len() {
            return Err(GtdError::IndexOutOfRange {
                index,
                dim: point.len(),
            });
        }
        let mut jet = Jet4::constant(point.len(), point[index]);
        let mut alpha = vec![0u8; point.len()];
        alpha[index] = 1;
        let slot = jet.layout.key(&alpha).expect("first-order monomial");
        jet.coeffs[slot] = 1.0;
        Ok(jet)
    }

    /// Seeds for every coordinate of `point`.
    pub fn seeds(point: &[f64]) -> Result<Vec<Self>> {
        (0..point.len()).map(|i| Jet4::seed(point, i)).collect()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn valid_order(&self) -> u8 {
        self.valid_order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Normalized coefficients in storage order (see [`multi_indices`]).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `∂^α f / α!`. Panics if `alpha` has the wrong
    /// length or total degree above 4.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        let slot = self.layout.key(alpha).unwrap_or_else(|| {
            panic!(
                "multi-index {alpha:?} is not stored in a jet of dim {}",
                self.dim()
            )
        });
        self.coeffs[slot]
    }

    /// Raw partial derivative `∂^α f`.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        let slot = self.layout.key(alpha).unwrap_or_else(|| {
            panic!(
                "multi-index {alpha:?} is not stored in a jet of dim {}",
                self.dim()
            )
        });
        self.coeffs[slot] * self.layout.factorial[slot]
    }

    pub fn first(&self, axis: usize) -> f64 {
        let mut alpha = vec![0u8; self.dim()];
        alpha[axis] = 1;
        self.partial(&alpha)
    }

    pub fn second(&self, a: usize, b: usize) -> f64 {
        let mut alpha = vec![0u8; self.dim()];
        alpha[a] += 1;
        alpha[b] += 1;
        self.partial(&alpha)
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.first(a)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.second(a, b)).collect())
            .collect()
    }

    /// True when every coefficient above the value is exactly zero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// Partial derivative along `axis` as a jet. The top-degree coefficients
    /// become unknown, so the valid order drops by one.
    pub fn derivative(&self, axis: usize) -> Result<Jet4> {
        if axis >= self.dim() {
            return Err(GtdError::IndexOutOfRange {
                index: axis,
                dim: self.dim(),
            });
        }
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(src, dst, mult) in &self.layout.derivative[axis] {
            coeffs[dst as usize] += mult * self.coeffs[src as usize];
        }
        Ok(Jet4 {
            layout: self.layout,
            coeffs,
            valid_order: self.valid_order.saturating_sub(1),
        })
    }

    pub fn scale(&self, factor: f64) -> Jet4 {
        Jet4 {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            valid_order: self.valid_order,
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet4 {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn assert_same_dim(&self, other: &Jet4) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "jet dimensions differ ({} vs {})",
            self.dim(),
            other.dim()
        );
    }

    fn zip_with(&self, other: &Jet4, f: impl Fn(f64, f64) -> f64) -> Jet4 {
        self.assert_same_dim(other);
        Jet4 {
            layout: self.layout,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            valid_order: self.valid_order.min(other.valid_order),
        }
    }

    fn product(&self, other: &Jet4) -> Jet4 {
        self.assert_same_dim(other);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(p, q, r) in &self.layout.products {
            coeffs[r as usize] += self.coeffs[p as usize] * other.coeffs[q as usize];
        }
        Jet4 {
            layout: self.layout,
            coeffs,
            valid_order: self.valid_order.min(other.valid_order),
        }
    }

    /// Evaluates `Σ t_k (f - f₀)^k` for univariate Taylor coefficients `t`
    /// taken at the value `f₀`.
    fn compose(&self, taylor: [f64; 5]) -> Jet4 {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet4::constant(self.dim(), taylor[4]);
        acc.valid_order = self.valid_order;
        for &t in taylor[..4].iter().rev() {
            acc = acc.product(&h).add_scalar(t);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet4> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(GtdError::domain("division by a jet with zero value"));
        }
        let inv = 1.0 / a;
        let mut t = [0.0; 5];
        let mut term = inv;
        for slot in t.iter_mut() {
            *slot = term;
            term *= -inv;
        }
        Ok(self.compose(t))
    }

    pub fn div(&self, rhs: &Jet4) -> Result<Jet4> {
        Ok(self.product(&rhs.recip()?))
    }

    pub fn ln(&self) -> Result<Jet4> {
        let a = self.value();
        if !(a > 0.0) || !a.is_finite() {
            return Err(GtdError::domain(format!(
                "logarithm of nonpositive value {a}"
            )));
        }
        let mut t = [a.ln(), 0.0, 0.0, 0.0, 0.0];
        for (k, slot) in t.iter_mut().enumerate().skip(1) {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            *slot = sign / (k as f64 * a.powi(k as i32));
        }
        Ok(self.compose(t))
    }

    pub fn exp(&self) -> Jet4 {
        let e = self.value().exp();
        self.compose([e, e, e / 2.0, e / 6.0, e / 24.0])
    }

    pub fn sin(&self) -> Jet4 {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s / 2.0, -c / 6.0, s / 24.0])
    }

    pub fn cos(&self) -> Jet4 {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c / 2.0, s / 6.0, c / 24.0])
    }

    /// Real power. Non-negative small integer exponents are expanded by
    /// repeated multiplication and accept any base; other integer exponents
    /// need a nonzero base and non-integer exponents a positive one.
    pub fn powf(&self, p: f64) -> Result<Jet4> {
        let a = self.value();
        let integral = p.fract() == 0.0 && p.abs() <= i32::MAX as f64;
        if integral && (0.0..=8.0).contains(&p) {
            let mut acc = Jet4::constant(self.dim(), 1.0);
            acc.valid_order = self.valid_order;
            for _ in 0..p as u32 {
                acc = acc.product(self);
            }
            return Ok(acc);
        }
        if integral {
            if a == 0.0 {
                return Err(GtdError::domain(format!(
                    "zero raised to negative power {p}"
                )));
            }
        } else if !(a > 0.0) {
            return Err(GtdError::domain(format!(
                "non-integer power {p} of nonpositive value {a}"
            )));
        }
        let mut t = [0.0; 5];
        let mut binom = 1.0;
        for (k, slot) in t.iter_mut().enumerate() {
            let exponent = p - k as f64;
            let base_pow = if integral {
                a.powi(exponent as i32)
            } else {
                a.powf(exponent)
            };
            *slot = binom * base_pow;
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(t))
    }

    pub fn powi(&self, n: i32) -> Result<Jet4> {
        self.powf(n as f64)
    }

    /// `self^exponent` for a jet-valued exponent, via `exp(exponent · ln self)`
    /// unless the exponent is constant.
    pub fn pow(&self, exponent: &Jet4) -> Result<Jet4> {
        if exponent.is_constant() {
            let mut out = self.powf(exponent.value())?;
            out.valid_order = out.valid_order.min(exponent.valid_order);
            return Ok(out);
        }
        Ok((exponent.clone() * self.ln()?).exp())
    }
}

impl PartialEq for Jet4 {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.valid_order == other.valid_order
            && self.coeffs == other.coeffs
    }
}

impl fmt::Debug for Jet4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet4")
            .field("dim", &self.dim())
            .field("valid_order", &self.valid_order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: Jet4) -> Jet4 {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Jet4> for &Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &Jet4) -> Jet4 {
                $body(self, rhs)
            }
        }
        impl $tr<&Jet4> for Jet4 {
            type Output = Jet4;
            fn $method(self, rhs: &Jet4) -> Jet4 {
                $body(&self, rhs)
            }
        }
    };
}

binop!(Add, add, |a: &Jet4, b: &Jet4| a.zip_with(b, |x, y| x + y));
binop!(Sub, sub, |a: &Jet4, b: &Jet4| a.zip_with(b, |x, y| x - y));
binop!(Mul, mul, |a: &Jet4, b: &Jet4| a.product(b));

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

impl Neg for &Jet4 {
    type Output = Jet4;
    fn neg(self) -> Jet4 {
        self.scale(-1.0)
    }
}

/// Operations understood by [`jet_arith`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow(f64),
    Ln,
    Exp,
}

/// Applies `op` to `args`: binary ops take two jets, the rest one.
pub fn jet_arith(op: JetOp, args: &[Jet4]) -> Result<Jet4> {
    let arity = match op {
        JetOp::Add | JetOp::Sub | JetOp::Mul | JetOp::Div => 2,
        JetOp::Pow(_) | JetOp::Ln | JetOp::Exp => 1,
    };
    if args.len() != arity {
        return Err(GtdError::DimensionMismatch {
            expected: arity,
            found: args.len(),
        });
    }
    if arity == 2 && args[0].dim() != args[1].dim() {
        return Err(GtdError::DimensionMismatch {
            expected: args[0].dim(),
            found: args[1].dim(),
        });
    }
    match op {
        JetOp::Add => Ok(&args[0] + &args[1]),
        JetOp::Sub => Ok(&args[0] - &args[1]),
        JetOp::Mul => Ok(&args[0] * &args[1]),
        JetOp::Div => args[0].div(&args[1]),
        JetOp::Pow(p) => args[0].powf(p),
        JetOp::Ln => args[0].ln(),
        JetOp::Exp => Ok(args[0].exp()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn storage_covers_all_multi_indices() {
        for dim in 0..=6 {
            let expected = (1..=4).fold(1usize, |acc, k| acc * (dim + k) / k);
            assert_eq!(multi_indices(dim).len(), expected, "dim {dim}");
        }
        assert_eq!(multi_indices(6).len(), 210);
    }

    #[test]
    fn seed_of_first_coordinate() {
        let x = Jet4::seed(&[2.0, 3.0], 0).unwrap();
        assert_eq!(x.value(), 2.0);
        assert_eq!(x.first(0), 1.0);
        assert_eq!(x.first(1), 0.0);
        assert!(x.coefficients()[3..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn seed_of_second_coordinate() {
        let y = Jet4::seed(&[1.0, 1.0], 1).unwrap();
        assert_eq!(y.value(), 1.0);
        assert_eq!(y.first(1), 1.0);
        assert_eq!(y.first(0), 0.0);
    }

    #[test]
    fn seed_single_variable() {
        let x = Jet4::seed(&[5.0], 0).unwrap();
        assert_eq!(x.value(), 5.0);
        assert_eq!(x.partial(&[1]), 1.0);
        for k in 2..=4u8 {
            assert_eq!(x.partial(&[k]), 0.0);
        }
    }

    #[test]
    fn seed_rejects_bad_index() {
        assert!(matches!(
            Jet4::seed(&[1.0, 2.0], 2),
            Err(GtdError::IndexOutOfRange { index: 2, dim: 2 })
        ));
    }

    #[test]
    fn product_rule() {
        let s = Jet4::seeds(&[2.0, 3.0]).unwrap();
        let p = jet_arith(JetOp::Mul, &s).unwrap();
        assert_eq!(p.value(), 6.0);
        assert_eq!(p.first(0), 3.0);
        assert_eq!(p.first(1), 2.0);
        assert_eq!(p.second(0, 1), 1.0);
        assert_eq!(p.second(0, 0), 0.0);
        assert_eq!(p.second(1, 1), 0.0);
    }

    #[test]
    fn square_root_derivatives() {
        let x = Jet4::seed(&[1.0], 0).unwrap();
        let r = jet_arith(JetOp::Pow(0.5), &[x]).unwrap();
        assert_relative_eq!(r.value(), 1.0);
        assert_relative_eq!(r.partial(&[1]), 0.5, max_relative = 1e-14);
        assert_relative_eq!(r.partial(&[2]), -0.25, max_relative = 1e-14);
        assert_relative_eq!(r.partial(&[3]), 0.375, max_relative = 1e-14);
        assert_relative_eq!(r.partial(&[4]), -0.9375, max_relative = 1e-14);
    }

    #[test]
    fn log_derivatives() {
        let x = Jet4::seed(&[1.0], 0).unwrap();
        let l = jet_arith(JetOp::Ln, &[x]).unwrap();
        assert_eq!(l.value(), 0.0);
        assert_relative_eq!(l.partial(&[1]), 1.0, max_relative = 1e-14);
        assert_relative_eq!(l.partial(&[2]), -1.0, max_relative = 1e-14);
        assert_relative_eq!(l.partial(&[3]), 2.0, max_relative = 1e-14);
        assert_relative_eq!(l.partial(&[4]), -6.0, max_relative = 1e-14);
    }

    #[test]
    fn domain_errors() {
        let neg = Jet4::seed(&[-1.0], 0).unwrap();
        assert!(matches!(neg.ln(), Err(GtdError::Domain(_))));
        assert!(matches!(neg.powf(0.5), Err(GtdError::Domain(_))));
        let zero = Jet4::seed(&[0.0], 0).unwrap();
        assert!(matches!(
            jet_arith(JetOp::Div, &[neg.clone(), zero.clone()]),
            Err(GtdError::Domain(_))
        ));
        assert!(matches!(zero.powf(-1.0), Err(GtdError::Domain(_))));
        // integer powers of negative and zero bases are fine
        assert_relative_eq!(neg.powf(3.0).unwrap().partial(&[2]), -6.0);
        assert_relative_eq!(
            neg.powf(-2.0).unwrap().partial(&[1]),
            2.0,
            max_relative = 1e-14
        );
        assert_eq!(zero.powf(2.0).unwrap().partial(&[2]), 2.0);
    }

    #[test]
    fn arity_and_dimension_checks() {
        let a = Jet4::seed(&[1.0], 0).unwrap();
        let b = Jet4::seed(&[1.0, 2.0], 0).unwrap();
        assert!(jet_arith(JetOp::Add, &[a.clone()]).is_err());
        assert!(matches!(
            jet_arith(JetOp::Mul, &[a, b]),
            Err(GtdError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn derivative_drops_one_order() {
        let s = Jet4::seeds(&[1.5, 0.5]).unwrap();
        let f = (&s[0] * &s[0]) * &s[1];
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.valid_order(), 3);
        assert_relative_eq!(fx.value(), 2.0 * 1.5 * 0.5);
        assert_relative_eq!(fx.first(0), 1.0);
        assert_relative_eq!(fx.first(1), 3.0);
        assert_relative_eq!(fx.second(0, 1), 2.0);
        assert_eq!(
            fx.derivative(1)
                .unwrap()
                .derivative(0)
                .unwrap()
                .valid_order(),
            1
        );
    }

    #[test]
    fn jet_valued_exponent() {
        // x^y at (2, 3): d/dy = x^y ln x
        let s = Jet4::seeds(&[2.0, 3.0]).unwrap();
        let p = s[0].pow(&s[1]).unwrap();
        assert_relative_eq!(p.value(), 8.0, max_relative = 1e-14);
        assert_relative_eq!(p.first(1), 8.0 * 2f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(p.first(0), 12.0, max_relative = 1e-14);
    }

    #[test]
    fn trig_derivatives() {
        // d^k/dx^k sin at 0.4 cycles through cos, -sin, -cos, sin
        let x = 0.4f64;
        let s = Jet4::seed(&[x], 0).unwrap().sin();
        let want = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        for (k, w) in want.iter().enumerate() {
            assert_relative_eq!(s.partial(&[k as u8]), *w, max_relative = 1e-14);
        }
        let c = Jet4::seed(&[x], 0).unwrap().cos();
        assert_relative_eq!(c.partial(&[3]), x.sin(), max_relative = 1e-14);
    }
}
