//! The four-state belief chain induced by the conjectured policy.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::{conjectured_policy, GoldenConstants};
use crate::channel::Bit;
use crate::dp::{disturbance_prob, reward, transition_z, Belief};
use crate::error::Result;
use crate::report::{all_passed, Check};

pub const CLOSURE_TOL: f64 = 1e-12;
pub const REWARD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from: f64,
    pub output: u8,
    pub probability: f64,
    pub to: f64,
    /// Index into `{b1, b2, b3, b4}` of the successor, if it is one of them.
    pub to_index: Option<usize>,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub states: [f64; 4],
    pub transitions: Vec<TransitionRecord>,
    pub closed: bool,
    pub transition_matrix: [[f64; 4]; 4],
    pub stationary: [f64; 4],
    pub rewards: [f64; 4],
    pub expected_reward: f64,
    pub rho: f64,
    pub irreducible: bool,
    pub period: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn stationary_check() -> Result<StationaryReport> {
    let g = GoldenConstants::new();
    let states = g.recurrent_beliefs();
    let mut transitions = Vec::with_capacity(8);
    let mut p = [[0.0; 4]; 4];
    let mut rewards = [0.0; 4];

    for (i, &z) in states.iter().enumerate() {
        let a = conjectured_policy(z)?;
        rewards[i] = reward(a);
        for w in Bit::ALL {
            let prob = disturbance_prob(a, w);
            let to = transition_z(Belief::new(z)?, a, w)?.get();
            let (j, err) = states
                .iter()
                .enumerate()
                .map(|(j, s)| (j, (s - to).abs()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("four states");
            let to_index = (err <= CLOSURE_TOL).then_some(j);
            if let Some(j) = to_index {
                p[i][j] += prob;
            }
            transitions.push(TransitionRecord {
                from: z,
                output: w.as_u8(),
                probability: prob,
                to,
                to_index,
                error: err,
            });
        }
    }
    let closed = transitions.iter().all(|t| t.to_index.is_some());

    // Solve pi (P - I) = 0 with the last balance equation replaced by sum(pi) = 1.
    let mut a = Matrix4::from_fn(|r, c| p[c][r] - if r == c { 1.0 } else { 0.0 });
    for c in 0..4 {
        a[(3, c)] = 1.0;
    }
    let rhs = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let pi = a.lu().solve(&rhs).unwrap_or_else(Vector4::zeros);
    let stationary = [pi[0], pi[1], pi[2], pi[3]];
    let expected_reward: f64 = stationary.iter().zip(&rewards).map(|(s, r)| s * r).sum();

    let irreducible = (0..4).all(|s| reachable(&p, s).iter().all(|r| *r));
    let period = period(&p);

    let checks = vec![
        Check::flag("transition_closure", closed),
        Check::close(
            "stationary_reward_equals_rho",
            expected_reward,
            g.rho,
            REWARD_TOL,
        ),
        Check::flag("irreducible", irreducible),
        Check::flag("aperiodic", period == 1),
    ];
    let passed = all_passed(&checks);
    Ok(StationaryReport {
        states,
        transitions,
        closed,
        transition_matrix: p,
        stationary,
        rewards,
        expected_reward,
        rho: g.rho,
        irreducible,
        period,
        checks,
        passed,
    })
}

fn reachable(p: &[[f64; 4]; 4], from: usize) -> [bool; 4] {
    let mut seen = [false; 4];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for v in 0..4 {
            if p[u][v] > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Period of the chain restricted to the class of state 0: gcd of
/// `level(u) + 1 - level(v)` over edges, with BFS levels from state 0.
fn period(p: &[[f64; 4]; 4]) -> usize {
    let mut level = [usize::MAX; 4];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..4 {
            if p[u][v] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let gcd = |mut a: usize, mut b: usize| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let mut d = 0;
    for u in 0..4 {
        for v in 0..4 {
            if p[u][v] > 0.0 && level[u] != usize::MAX && level[v] != usize::MAX {
                d = gcd(d, (level[u] + 1).abs_diff(level[v]));
            }
        }
    }
    d
}
