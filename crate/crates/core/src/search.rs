//! One- and two-dimensional maximization used by the Bellman operator.
//!
//! The objective maximized at every belief is jointly concave over the
//! feasible action rectangle `[0, z] x [0, 1 - z]`, so a discrete search on
//! the action grid followed by golden-section refinement inside the
//! neighbouring cells locates the continuous maximum.

use serde::{Deserialize, Serialize};

/// Bracket width at which golden-section refinement stops.
pub const REFINE_TOL: f64 = 1e-11;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns the best interior point evaluated; endpoints are the caller's job.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut f: F,
) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best_f) = if fd > fc { (d, fd) } else { (c, fc) };
    // 200 iterations shrink any bracket in [0, 1] far below f64 resolution.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc < fd {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
            if fd > best_f {
                best_x = d;
                best_f = fd;
            }
        } else {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
            if fc > best_f {
                best_x = c;
                best_f = fc;
            }
        }
    }
    (best_x, best_f)
}

/// How the action rectangle is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSearch {
    /// Scan every feasible action-grid pair, then refine around the best one.
    /// Cost grows with the square of the action grid.
    Exhaustive,
    /// Nested discrete ternary search over the action grid followed by
    /// golden-section refinement. Exact for jointly concave objectives.
    #[default]
    Concave,
}

/// The feasible points `{0, step, 2 step, ...} ∩ [0, upper]`, plus `upper`
/// itself when it is not a grid point.
#[derive(Debug, Clone, Copy)]
pub struct ActionAxis {
    step: f64,
    on_grid: usize,
    upper: f64,
    extra: bool,
}

impl ActionAxis {
    pub fn new(upper: f64, action_grid: usize) -> Self {
        assert!(action_grid >= 2, "action grid needs at least two points");
        let upper = upper.clamp(0.0, 1.0);
        let step = 1.0 / (action_grid - 1) as f64;
        let last = ((upper / step) + 1e-9).floor() as usize;
        let last = last.min(action_grid - 1);
        let extra = upper - last as f64 * step > 1e-13;
        Self {
            step,
            on_grid: last + 1,
            upper,
            extra,
        }
    }

    pub fn len(&self) -> usize {
        self.on_grid + usize::from(self.extra)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i < self.on_grid {
            (i as f64 * self.step).min(self.upper)
        } else {
            self.upper
        }
    }
}

/// Maximum over one axis of a function that is concave along it.
fn axis_max<F: FnMut(f64) -> f64>(axis: &ActionAxis, mut f: F) -> (f64, f64) {
    let n = axis.len();
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 2 {
        let third = (hi - lo) / 3;
        let m1 = lo + third;
        let m2 = hi - third;
        if f(axis.point(m1)) < f(axis.point(m2)) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    let mut best_i = lo;
    let mut best_f = f(axis.point(lo));
    for i in lo + 1..=hi {
        let v = f(axis.point(i));
        if v > best_f {
            best_i = i;
            best_f = v;
        }
    }
    refine_axis(axis, best_i, best_f, f)
}

fn refine_axis<F: FnMut(f64) -> f64>(axis: &ActionAxis, i: usize, fi: f64, f: F) -> (f64, f64) {
    let n = axis.len();
    let a = axis.point(i.saturating_sub(1));
    let b = axis.point((i + 1).min(n - 1));
    let xi = axis.point(i);
    if b - a <= REFINE_TOL {
        return (xi, fi);
    }
    let (x, v) = golden_section_max(a, b, REFINE_TOL, f);
    if v > fi {
        (x, v)
    } else {
        (xi, fi)
    }
}

/// Result of maximizing over the feasible action rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleMax {
    pub value: f64,
    pub delta: f64,
    pub gamma: f64,
}

/// Maximize `f(delta, gamma)` over `[0, delta_max] x [0, gamma_max]`
/// discretized on a uniform grid of `action_grid` points per unit.
///
/// Ties on the grid resolve to the smallest `delta`, then the smallest `gamma`.
pub fn maximize_on_rectangle<F: Fn(f64, f64) -> f64>(
    delta_max: f64,
    gamma_max: f64,
    action_grid: usize,
    search: ActionSearch,
    f: F,
) -> RectangleMax {
    let da = ActionAxis::new(delta_max, action_grid);
    let ga = ActionAxis::new(gamma_max, action_grid);
    match search {
        ActionSearch::Concave => {
            let profile = |d: f64| axis_max(&ga, |g| f(d, g));
            let (delta, value) = axis_max(&da, |d| profile(d).1);
            let (gamma, v) = profile(delta);
            RectangleMax {
                value: v.max(value),
                delta,
                gamma,
            }
        }
        ActionSearch::Exhaustive => {
            let mut best = (0usize, 0usize, f64::NEG_INFINITY);
            for i in 0..da.len() {
                let d = da.point(i);
                for j in 0..ga.len() {
                    let v = f(d, ga.point(j));
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            let (i, j, grid_best) = best;
            // Refine inside the neighbouring cells with a nested golden search.
            let d_lo = da.point(i.saturating_sub(1));
            let d_hi = da.point((i + 1).min(da.len() - 1));
            let g_lo = ga.point(j.saturating_sub(1));
            let g_hi = ga.point((j + 1).min(ga.len() - 1));
            let inner = |d: f64| {
                let mut best = (ga.point(j), f(d, ga.point(j)));
                for g in [g_lo, g_hi] {
                    let v = f(d, g);
                    if v > best.1 {
                        best = (g, v);
                    }
                }
                if g_hi - g_lo > REFINE_TOL {
                    let (g, v) = golden_section_max(g_lo, g_hi, REFINE_TOL, |g| f(d, g));
                    if v > best.1 {
                        best = (g, v);
                    }
                }
                best
            };
            let mut out = RectangleMax {
                value: grid_best,
                delta: da.point(i),
                gamma: ga.point(j),
            };
            let mut consider = |d: f64| {
                let (g, v) = inner(d);
                if v > out.value {
                    out = RectangleMax {
                        value: v,
                        delta: d,
                        gamma: g,
                    };
                }
                v
            };
            consider(d_lo);
            consider(d_hi);
            consider(da.point(i));
            if d_hi - d_lo > REFINE_TOL {
                golden_section_max(d_lo, d_hi, REFINE_TOL, &mut consider);
            }
            out
        }
    }
}
