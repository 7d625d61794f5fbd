use serde::{Deserialize, Serialize};

use super::belief::{ActionPair, Belief};
use crate::error::{Error, Result};

/// A function on `[0, 1]` sampled on a uniform grid that includes both
/// endpoints, evaluated between grid points by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    values: Vec<f64>,
}

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "value grid needs at least 2 points".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "value function must be finite".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid_size: usize) -> Result<Self> {
        Self::new(vec![0.0; grid_size])
    }

    pub fn constant(grid_size: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; grid_size])
    }

    /// Sample `f` at every grid point.
    pub fn from_fn<F: Fn(f64) -> f64>(grid_size: usize, f: F) -> Result<Self> {
        Self::new(
            (0..grid_size)
                .map(|i| f(grid_point(grid_size, i)))
                .collect(),
        )
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        grid_point(self.values.len(), i)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.point(i))
    }

    /// Linear interpolation; arguments outside `[0, 1]` are clamped.
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.values.len();
        let x = z.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x as usize).min(n - 2);
        let t = x - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + t * (b - a)
    }

    /// `h(z) - h(0)`.
    pub fn differential(&self) -> Self {
        let base = self.values[0];
        Self {
            values: self.values.iter().map(|v| v - base).collect(),
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Largest second difference `h[i-1] - 2 h[i] + h[i+1]`; nonpositive for
    /// concave samples.
    pub fn max_second_difference(&self) -> f64 {
        self.values
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Index of the grid point nearest to `z` (the histogram bin of `z`).
    pub fn nearest_index(&self, z: f64) -> usize {
        nearest_index(self.values.len(), z)
    }
}

pub(crate) fn grid_point(grid_size: usize, i: usize) -> f64 {
    if i + 1 == grid_size {
        1.0
    } else {
        i as f64 / (grid_size - 1) as f64
    }
}

pub(crate) fn nearest_index(grid_size: usize, z: f64) -> usize {
    ((z.clamp(0.0, 1.0) * (grid_size - 1) as f64).round() as usize).min(grid_size - 1)
}

/// Greedy actions per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    actions: Vec<ActionPair>,
}

impl PolicyTable {
    pub fn new(actions: Vec<ActionPair>) -> Result<Self> {
        let n = actions.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "policy grid needs at least 2 points".into(),
            ));
        }
        for (i, a) in actions.iter().enumerate() {
            a.check(Belief::clamped(grid_point(n, i)))?;
        }
        Ok(Self { actions })
    }

    pub fn grid_size(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[ActionPair] {
        &self.actions
    }

    /// Action at an arbitrary belief, interpolated linearly between the two
    /// neighbouring grid actions. A convex combination of actions feasible at
    /// the neighbours is feasible at `z`.
    pub fn action_at(&self, z: f64) -> ActionPair {
        let n = self.actions.len();
        let z = z.clamp(0.0, 1.0);
        let x = z * (n - 1) as f64;
        let i = (x as usize).min(n - 2);
        let t = x - i as f64;
        let (a, b) = (self.actions[i], self.actions[i + 1]);
        ActionPair {
            delta: (a.delta + t * (b.delta - a.delta)).clamp(0.0, z),
            gamma: (a.gamma + t * (b.gamma - a.gamma)).clamp(0.0, 1.0 - z),
        }
    }
}
