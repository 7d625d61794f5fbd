//! Numerical verification of the Bellman fixed point.
//!
//! Starting from `h_0 = h_extended` sampled on the value grid, iterate
//! `h_{k+1} = T h_k - rho`. The iterates should stay equal to `h_tilde` on
//! `[b1, b4]`, decrease pointwise, and contract in sup-norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{h_extended, h_tilde_inner, GoldenConstants};
use crate::dp::{bellman_apply, bellman_sweep, ActionPair, Belief, BellmanOptions, ValueFunction};
use crate::error::{Error, Result};
use crate::report::{all_passed, Check};

/// Allowed pointwise increase `h_{k+1} - h_k`.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Slack on the sup-norm contraction `||h_{k+1} - h_k|| <= ||h_k - h_{k-1}||`.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// Fixed-point tolerance at the reference grid of 4001 points.
pub const FIXED_POINT_TOL: f64 = 1e-4;

/// Capacity check on the supplied average reward.
pub const RHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    pub grid_size: usize,
    pub bellman: BellmanOptions,
    pub iterations: usize,
    /// Average reward subtracted at each step; the golden value unless overridden.
    pub rho: f64,
}

impl VerifyParams {
    pub fn new(grid_size: usize, action_grid: usize, iterations: usize) -> Self {
        Self {
            grid_size,
            bellman: BellmanOptions::new(action_grid),
            iterations,
            rho: GoldenConstants::new().rho,
        }
    }

    /// Interpolation error of a concave function scales with the squared
    /// grid spacing, so the tolerance is pinned at 4001 points and grows
    /// quadratically for coarser grids.
    pub fn fixed_point_tolerance(&self) -> f64 {
        let ratio = 4000.0 / (self.grid_size.max(2) - 1) as f64;
        FIXED_POINT_TOL * ratio.powi(2).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `max |h_k - h_tilde|` over grid points in `[b1, b4]` and at `b1..b4`.
    pub fixed_point_deviation: f64,
    /// `max (h_k - h_{k-1})`; nonpositive for a nonincreasing sequence.
    pub max_increase: f64,
    /// `||h_k - h_{k-1}||_inf`.
    pub sup_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub params: VerifyParams,
    pub grid_spacing: f64,
    pub fixed_point_tolerance: f64,
    pub iterations: Vec<IterationRecord>,
    /// `max |T h_K - rho - h_tilde|` on `[b1, b4]`.
    pub bellman_residual: f64,
    /// `max |T h_K - rho - h_K|` on `[b1, b4]`.
    pub self_residual: f64,
    /// Maximizer of the Bellman right-hand side at `b2` under `h_K`.
    pub argmax_at_b2: ActionPair,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// `h_0..h_K` on the value grid.
    #[serde(skip)]
    pub iterates: Vec<ValueFunction>,
}

/// Grid points inside `[b1, b4]` plus the four constants themselves.
fn probe_points(h: &ValueFunction, g: &GoldenConstants) -> Vec<f64> {
    let mut pts: Vec<f64> = h.points().filter(|z| (g.b1..=g.b4).contains(z)).collect();
    pts.extend(g.recurrent_beliefs());
    pts
}

fn deviation_from_h_tilde(h: &ValueFunction, probes: &[f64]) -> f64 {
    probes
        .iter()
        .map(|&z| (h.eval(z) - h_tilde_inner(z)).abs())
        .fold(0.0, f64::max)
}

pub fn verify_fixed_point(params: VerifyParams) -> Result<FixedPointReport> {
    if params.grid_size < 2 || params.iterations == 0 {
        return Err(Error::InvalidParameter(
            "grid >= 2 and iterations >= 1 required".into(),
        ));
    }
    let g = GoldenConstants::new();
    let rho = params.rho;
    let mut h = ValueFunction::from_fn(params.grid_size, h_extended)?;
    let probes = probe_points(&h, &g);
    let mut iterates = vec![h.clone()];
    let mut records = Vec::with_capacity(params.iterations);

    for k in 1..=params.iterations {
        let (th, _) = bellman_sweep(&h, params.bellman)?;
        let next = th.shifted(-rho);
        let max_increase = next
            .values()
            .iter()
            .zip(h.values())
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        records.push(IterationRecord {
            k,
            fixed_point_deviation: deviation_from_h_tilde(&next, &probes),
            max_increase,
            sup_change: next.sup_distance(&h),
        });
        h = next;
        iterates.push(h.clone());
    }

    let residuals: Vec<(f64, f64)> = probes
        .par_iter()
        .map(|&z| {
            let t = bellman_apply(&h, Belief::clamped(z), params.bellman)?.value - rho;
            Ok(((t - h_tilde_inner(z)).abs(), (t - h.eval(z)).abs()))
        })
        .collect::<Result<_>>()?;
    let bellman_residual = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
    let self_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let argmax_at_b2 = bellman_apply(&h, Belief::clamped(g.b2), params.bellman)?.best;

    let tol = params.fixed_point_tolerance();
    let action_step = 1.0 / (params.bellman.action_grid - 1) as f64;
    let worst_deviation = records
        .iter()
        .map(|r| r.fixed_point_deviation)
        .fold(0.0, f64::max);
    let worst_increase = records
        .iter()
        .map(|r| r.max_increase)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_contraction = records
        .windows(2)
        .skip(1)
        .map(|w| w[1].sup_change - w[0].sup_change)
        .fold(f64::NEG_INFINITY, f64::max);
    let argmax_offset = (argmax_at_b2.delta - g.b2)
        .abs()
        .max((argmax_at_b2.gamma - g.b2).abs());

    let mut checks = vec![
        Check::close("rho_equals_log2_phi", rho, g.rho, RHO_TOL),
        Check::at_most("fixed_point_deviation", worst_deviation, 0.0, tol),
        Check::at_most("bellman_residual", bellman_residual, 0.0, tol),
        Check::at_most("monotone_nonincreasing", worst_increase, 0.0, MONOTONE_TOL),
        Check::at_most("argmax_at_b2", argmax_offset, 0.0, action_step),
    ];
    if records.len() >= 3 {
        checks.push(Check::at_most(
            "sup_change_nonincreasing",
            worst_contraction,
            0.0,
            CONTRACTION_TOL,
        ));
    }
    let passed = all_passed(&checks);
    Ok(FixedPointReport {
        params,
        grid_spacing: h.spacing(),
        fixed_point_tolerance: tol,
        iterations: records,
        bellman_residual,
        self_residual,
        argmax_at_b2,
        checks,
        passed,
        iterates,
    })
}
