//! Sample grids over equilibrium coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{GtdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// One grid axis; both endpoints are included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let axis = Axis {
            min,
            max,
            count,
            spacing,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GtdError::InvalidGrid(msg));
        if self.count < 2 {
            return bad(format!("count must be at least 2 (got {})", self.count));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || !(self.min < self.max) {
            return bad(format!(
                "need finite min < max (got {} and {})",
                self.min, self.max
            ));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return bad(format!("log spacing needs min > 0 (got {})", self.min));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let t = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

/// An ordered list of points of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<Vec<f64>>,
}

impl Grid {
    /// Cartesian product of the axes; the first axis varies slowest.
    pub fn cartesian(axes: &[Axis]) -> Result<Self> {
        if axes.is_empty() {
            return Err(GtdError::InvalidGrid("no axes".into()));
        }
        let mut points = vec![Vec::new()];
        for axis in axes {
            axis.validate()?;
            let values = axis.values();
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        Ok(Grid { points })
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(GtdError::InvalidGrid("no points".into()));
        };
        let dim = first.len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(GtdError::InvalidGrid(
                "points must share a nonzero dimension".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GtdError::InvalidGrid("points must be finite".into()));
        }
        Ok(Grid { points })
    }

    /// The default `5ⁿ` grid, log-uniform over `[0.5, 2]` on every axis.
    pub fn default_for(n: usize) -> Self {
        let axis = Axis::new(0.5, 2.0, 5, Spacing::Log).expect("valid default axis");
        Grid::cartesian(&vec![axis; n]).expect("valid default grid")
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = Grid::default_for(2);
        assert_eq!(g.len(), 25);
        assert_eq!(g.points()[0], vec![0.5, 0.5]);
        assert_eq!(g.points()[1][1], 0.5 * 4f64.powf(0.25));
        assert!((g.points()[24][0] - 2.0).abs() < 1e-15);
        assert!((g.points()[12][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_axis() {
        let a = Axis::new(0.0, 1.0, 3, Spacing::Linear).unwrap();
        assert_eq!(a.values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Axis::new(0.5, 2.0, 1, Spacing::Log).is_err());
        assert!(Axis::new(2.0, 0.5, 3, Spacing::Linear).is_err());
        assert!(Axis::new(0.0, 2.0, 3, Spacing::Log).is_err());
        assert!(Grid::from_points(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Grid::from_points(vec![]).is_err());
    }
}
