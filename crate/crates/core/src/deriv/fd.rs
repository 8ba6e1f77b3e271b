//! Central finite differences, kept as an independent cross-check of jets.
//!
//! A mixed partial `∂^α f` is the tensor product of one-dimensional central
//! stencils, one per axis with `α_a > 0`:
//!
//! | order | offsets (in steps)  | weights                 |
//! |-------|---------------------|-------------------------|
//! | 1     | -1, 1               | -1/2, 1/2               |
//! | 2     | -1, 0, 1            | 1, -2, 1                |
//! | 3     | -2, -1, 1, 2        | -1/2, 1, -1, 1/2        |
//! | 4     | -2, -1, 0, 1, 2     | 1, -4, 6, -4, 1         |
//!
//! The step on axis `a` is `max(1, |x_a|) · h₀`.

use crate::error::{GtdError, Result};

const STENCILS: [&[(i32, f64)]; 5] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
];

/// Default base step for a stencil of the given total order.
pub fn default_step(order: u32) -> f64 {
    if order <= 3 {
        1e-3
    } else {
        1e-2
    }
}

/// Central-difference estimate of `∂^α f` at `point`. `step` overrides the
/// base step `h₀`; `None` uses [`default_step`].
pub fn fd_partial<F>(f: F, point: &[f64], alpha: &[u8], step: Option<f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if alpha.len() != point.len() {
        return Err(GtdError::DimensionMismatch {
            expected: point.len(),
            found: alpha.len(),
        });
    }
    let order: u32 = alpha.iter().map(|&a| a as u32).sum();
    if order > 4 {
        return Err(GtdError::domain(format!(
            "finite-difference order {order} exceeds 4"
        )));
    }
    let h0 = step.unwrap_or_else(|| default_step(order));
    let steps: Vec<f64> = point.iter().map(|x| x.abs().max(1.0) * h0).collect();

    let axes: Vec<usize> = (0..point.len()).filter(|&a| alpha[a] > 0).collect();
    let mut scale = 1.0;
    for &a in &axes {
        scale *= steps[a].powi(alpha[a] as i32);
    }

    let mut total = 0.0;
    let mut cursor = vec![0usize; axes.len()];
    let mut shifted = point.to_vec();
    loop {
        let mut weight = 1.0;
        for (slot, &a) in axes.iter().enumerate() {
            let (offset, w) = STENCILS[alpha[a] as usize][cursor[slot]];
            weight *= w;
            shifted[a] = point[a] + offset as f64 * steps[a];
        }
        total += weight * f(&shifted)?;

        // odometer over the stencil tensor product
        let mut slot = 0;
        loop {
            if slot == axes.len() {
                return Ok(total / scale);
            }
            cursor[slot] += 1;
            if cursor[slot] < STENCILS[alpha[axes[slot]] as usize].len() {
                break;
            }
            cursor[slot] = 0;
            slot += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bilinear_mixed_partial() {
        let d = fd_partial(|x| Ok(x[0] * x[1]), &[2.0, 3.0], &[1, 1], None).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn quadratic_second_derivative() {
        let d = fd_partial(|x| Ok(x[0] * x[0]), &[3.0], &[2], None).unwrap();
        assert_relative_eq!(d, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn fractional_monomial() {
        // ∂²/∂x² (xy)^{3/4} = (3/4)(-1/4) x^{-5/4} y^{3/4} = -3/16 at (1, 1)
        let f = |x: &[f64]| Ok((x[0] * x[1]).powf(0.75));
        let d = fd_partial(f, &[1.0, 1.0], &[2, 0], None).unwrap();
        assert_relative_eq!(d, -3.0 / 16.0, max_relative = 1e-5);
    }

    #[test]
    fn zeroth_order_is_evaluation() {
        let d = fd_partial(|x| Ok(x[0].exp()), &[0.3], &[0], None).unwrap();
        assert_eq!(d, 0.3f64.exp());
    }

    #[test]
    fn domain_violation_propagates() {
        let f = |x: &[f64]| {
            if x[0] <= 0.0 {
                Err(GtdError::domain("outside"))
            } else {
                Ok(x[0].ln())
            }
        };
        assert!(fd_partial(f, &[1e-4], &[1], None).is_err());
    }

    #[test]
    fn rejects_order_five() {
        assert!(fd_partial(|x| Ok(x[0]), &[1.0], &[5], None).is_err());
    }
}
