use std::ops::{Add, Mul, Neg, Sub};

use super::jet::Jet4;
use crate::error::{GtdError, Result};

/// Numeric type that expressions, potentials and metric coefficients are
/// evaluated over: plain `f64` for values, [`Jet4`] for derivatives.
pub trait Scalar:
    Clone
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// A constant of the same shape as `self`.
    fn constant_like(&self, c: f64) -> Self;
    /// A constant over no variables.
    fn lift(c: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(&self, c: f64) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self>;
    fn try_ln(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn try_powf(&self, p: f64) -> Result<Self>;
    fn try_pow(&self, exponent: &Self) -> Result<Self>;

    fn try_recip(&self) -> Result<Self> {
        self.constant_like(1.0).try_div(self)
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(GtdError::domain(format!(
            "{what} produced a non-finite value"
        )))
    }
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }

    fn lift(c: f64) -> Self {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn scale(&self, c: f64) -> Self {
        self * c
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            return Err(GtdError::domain("division by zero"));
        }
        finite(self / rhs, "division")
    }

    fn try_ln(&self) -> Result<Self> {
        if !(*self > 0.0) {
            return Err(GtdError::domain(format!(
                "logarithm of nonpositive value {self}"
            )));
        }
        Ok(self.ln())
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn try_powf(&self, p: f64) -> Result<Self> {
        let integral = p.fract() == 0.0;
        if !integral && !(*self > 0.0) {
            return Err(GtdError::domain(format!(
                "non-integer power {p} of nonpositive value {self}"
            )));
        }
        if integral && p < 0.0 && *self == 0.0 {
            return Err(GtdError::domain(format!(
                "zero raised to negative power {p}"
            )));
        }
        finite(self.powf(p), "power")
    }

    fn try_pow(&self, exponent: &Self) -> Result<Self> {
        self.try_powf(*exponent)
    }
}

impl Scalar for Jet4 {
    fn constant_like(&self, c: f64) -> Self {
        Jet4::constant(self.dim(), c)
    }

    fn lift(c: f64) -> Self {
        Jet4::constant(0, c)
    }

    fn value(&self) -> f64 {
        Jet4::value(self)
    }

    fn scale(&self, c: f64) -> Self {
        Jet4::scale(self, c)
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        self.div(rhs)
    }

    fn try_ln(&self) -> Result<Self> {
        self.ln()
    }

    fn exp(&self) -> Self {
        Jet4::exp(self)
    }

    fn try_powf(&self, p: f64) -> Result<Self> {
        self.powf(p)
    }

    fn try_pow(&self, exponent: &Self) -> Result<Self> {
        self.pow(exponent)
    }
}
