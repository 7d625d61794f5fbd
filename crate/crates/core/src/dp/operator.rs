use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::belief::{ActionPair, Belief};
use super::value::{PolicyTable, ValueFunction};
use crate::error::{Error, Result};
use crate::info::binary_entropy;
use crate::search::{maximize_on_rectangle, ActionSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellmanOptions {
    /// Points of the uniform action grid on `[0, 1]` (per coordinate).
    pub action_grid: usize,
    pub search: ActionSearch,
}

impl BellmanOptions {
    pub fn new(action_grid: usize) -> Self {
        Self {
            action_grid,
            search: ActionSearch::Concave,
        }
    }

    pub fn with_search(mut self, search: ActionSearch) -> Self {
        self.search = search;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.action_grid < 2 {
            return Err(Error::InvalidParameter(
                "action grid must have at least 2 points".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellmanValue {
    pub value: f64,
    pub best: ActionPair,
}

/// Right-hand side of the Bellman equation at action `(delta, gamma)`:
/// one-step reward plus expected continuation value of `h`.
#[inline]
pub fn bellman_objective(h: &ValueFunction, delta: f64, gamma: f64) -> f64 {
    let p0 = 0.5 * (1.0 + delta - gamma);
    let p1 = 0.5 * (1.0 - delta + gamma);
    let mut v = binary_entropy(p0) + delta + gamma - 1.0;
    if p0 > 0.0 {
        v += p0 * h.eval(delta / p0);
    }
    if p1 > 0.0 {
        v += p1 * h.eval(1.0 - gamma / p1);
    }
    v
}

/// `(T h)(z)` and a maximizing action.
pub fn bellman_apply(h: &ValueFunction, z: Belief, opts: BellmanOptions) -> Result<BellmanValue> {
    opts.validate()?;
    let z = z.get();
    let m = maximize_on_rectangle(z, 1.0 - z, opts.action_grid, opts.search, |d, g| {
        bellman_objective(h, d, g)
    });
    Ok(BellmanValue {
        value: m.value,
        best: ActionPair {
            delta: m.delta,
            gamma: m.gamma,
        },
    })
}

/// Apply `T` at every grid point of `h`. Grid points are independent, so the
/// sweep runs in parallel; the output does not depend on scheduling.
pub fn bellman_sweep(
    h: &ValueFunction,
    opts: BellmanOptions,
) -> Result<(ValueFunction, PolicyTable)> {
    opts.validate()?;
    let results: Vec<BellmanValue> = (0..h.grid_size())
        .into_par_iter()
        .map(|i| bellman_apply(h, Belief::clamped(h.point(i)), opts))
        .collect::<Result<_>>()?;
    let values = results.iter().map(|r| r.value).collect();
    let actions = results.iter().map(|r| r.best).collect();
    Ok((ValueFunction::new(values)?, PolicyTable::new(actions)?))
}

/// Outcome of `J_{k+1} = T J_k` from `J_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueIteration {
    /// `J_k` after the requested number of sweeps.
    pub value: ValueFunction,
    /// Greedy actions with respect to `J_k`.
    pub policy: PolicyTable,
    /// `J_{k+1} - J_k` at `z = 0` per sweep, a running estimate of the average reward.
    pub increments: Vec<f64>,
}

impl ValueIteration {
    /// `h_k(z) = J_k(z) - J_k(0)`.
    pub fn differential(&self) -> ValueFunction {
        self.value.differential()
    }
}

pub fn value_iteration(
    grid_size: usize,
    opts: BellmanOptions,
    iterations: usize,
) -> Result<ValueIteration> {
    let mut value = ValueFunction::zeros(grid_size)?;
    let mut increments = Vec::with_capacity(iterations);
    let (mut next, mut policy) = bellman_sweep(&value, opts)?;
    for _ in 0..iterations {
        increments.push(next.values()[0] - value.values()[0]);
        value = next;
        (next, policy) = bellman_sweep(&value, opts)?;
    }
    Ok(ValueIteration {
        value,
        policy,
        increments,
    })
}
