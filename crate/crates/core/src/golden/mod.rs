//! Closed-form solution of the trapdoor dynamic program.
//!
//! Everything here is expressed through the golden ratio: the optimal
//! average reward is `log2(phi)`, the recurrent beliefs are the four points
//! `b1 < b2 < 1/2 < b3 < b4`, and on `[b1, b4]` the differential value is an
//! entropy plus a linear term.

mod stationary;
mod verify;

use serde::{Deserialize, Serialize};

pub use stationary::{stationary_check, StationaryReport, TransitionRecord};
pub use verify::{
    verify_fixed_point, FixedPointReport, IterationRecord, VerifyParams, CONTRACTION_TOL,
    FIXED_POINT_TOL, MONOTONE_TOL, RHO_TOL,
};

use crate::dp::{ActionPair, Belief, Policy, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::info::{binary_entropy, binary_entropy_derivative};
use crate::search::golden_section_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenConstants {
    /// `(1 + sqrt 5) / 2`
    pub phi: f64,
    /// `log2(phi)`, the capacity in bits per channel use.
    pub rho: f64,
    /// `sqrt 5 - 2`
    pub b1: f64,
    /// `(3 - sqrt 5) / 2`
    pub b2: f64,
    /// `(sqrt 5 - 1) / 2`
    pub b3: f64,
    /// `3 - sqrt 5`
    pub b4: f64,
    /// `log2(3 - sqrt 5)`
    pub c1: f64,
    /// `log2(sqrt 5 - 1)`
    pub c2: f64,
}

impl GoldenConstants {
    pub fn new() -> Self {
        let s5 = 5f64.sqrt();
        let phi = (1.0 + s5) / 2.0;
        Self {
            phi,
            rho: phi.log2(),
            b1: s5 - 2.0,
            b2: (3.0 - s5) / 2.0,
            b3: (s5 - 1.0) / 2.0,
            b4: 3.0 - s5,
            c1: (3.0 - s5).log2(),
            c2: (s5 - 1.0).log2(),
        }
    }

    pub fn recurrent_beliefs(&self) -> [f64; 4] {
        [self.b1, self.b2, self.b3, self.b4]
    }
}

impl Default for GoldenConstants {
    fn default() -> Self {
        Self::new()
    }
}

fn check_domain(z: f64) -> Result<f64> {
    let g = GoldenConstants::new();
    if z < g.b1 - FEASIBILITY_TOL || z > g.b4 + FEASIBILITY_TOL || z.is_nan() {
        return Err(Error::OutsidePolicyDomain(z));
    }
    Ok(z.clamp(g.b1, g.b4))
}

/// The optimal stationary policy on `[b1, b4]`, linear on each of the
/// three sub-intervals.
pub fn conjectured_policy(z: f64) -> Result<ActionPair> {
    let z = check_domain(z)?;
    let g = GoldenConstants::new();
    let a = if z <= g.b2 {
        ActionPair {
            delta: z,
            gamma: g.b3 * (1.0 - z),
        }
    } else if z <= g.b3 {
        ActionPair {
            delta: g.b2,
            gamma: g.b2,
        }
    } else {
        ActionPair {
            delta: g.b3 * z,
            gamma: 1.0 - z,
        }
    };
    Ok(a)
}

/// [`conjectured_policy`] as a [`Policy`], snapping beliefs that drift out of
/// `[b1, b4]` by at most `snap` (floating-point round-off along a trajectory).
#[derive(Debug, Clone, Copy)]
pub struct ConjecturedPolicy {
    pub snap: f64,
}

impl Default for ConjecturedPolicy {
    fn default() -> Self {
        Self { snap: 1e-9 }
    }
}

impl Policy for ConjecturedPolicy {
    fn action(&self, z: Belief) -> Result<ActionPair> {
        let g = GoldenConstants::new();
        let zv = z.get();
        if zv < g.b1 - self.snap || zv > g.b4 + self.snap {
            return Err(Error::OutsidePolicyDomain(zv));
        }
        let zc = zv.clamp(g.b1, g.b4);
        let a = conjectured_policy(zc)?;
        Ok(ActionPair {
            delta: a.delta.min(zv),
            gamma: a.gamma.min(1.0 - zv),
        })
    }
}

fn h_tilde_inner(z: f64) -> f64 {
    let g = GoldenConstants::new();
    if z < g.b2 {
        binary_entropy(z) - g.rho * z + g.c2
    } else if z <= g.b3 {
        1.0
    } else {
        binary_entropy(z) + g.rho * z + g.c1
    }
}

/// Differential value on `[b1, b4]`, normalized so that `h(1/2) = 1`.
pub fn h_tilde(z: f64) -> Result<f64> {
    check_domain(z).map(h_tilde_inner)
}

/// One-sided slope of `h_tilde` at `b4` from the left, `H'(b4) + rho` (= -1).
pub fn extension_slope() -> f64 {
    let g = GoldenConstants::new();
    binary_entropy_derivative(g.b4) + g.rho
}

/// The smallest concave function on `[0, 1]` agreeing with `h_tilde` on
/// `[b1, b4]`: linear continuation with the one-sided boundary slopes.
pub fn h_extended(z: f64) -> f64 {
    let g = GoldenConstants::new();
    if z > g.b4 {
        h_tilde_inner(g.b4) + extension_slope() * (z - g.b4)
    } else if z < g.b1 {
        h_tilde_inner(g.b1) + extension_slope() * (g.b1 - z)
    } else {
        h_tilde_inner(z)
    }
}

/// Entropy rate `H(p) / (1 + p)` of the two-state chain that leaves state 0
/// with probability `p` and always returns from state 1.
pub fn markov_entropy_rate(p: f64) -> f64 {
    binary_entropy(p) / (1.0 + p)
}

/// Maximize [`markov_entropy_rate`] over `p` by golden-section search.
pub fn maximize_entropy_rate() -> (f64, f64) {
    golden_section_max(0.0, 1.0, 1e-14, markov_entropy_rate)
}
