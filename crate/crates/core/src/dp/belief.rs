use serde::{Deserialize, Serialize};

use super::FEASIBILITY_TOL;
use crate::channel::{Bit, UnifilarChannel};
use crate::error::{Error, Result};
use crate::info::binary_entropy;

/// Posterior probability that the channel holds ball 0, given past outputs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Belief(f64);

impl Belief {
    pub fn new(z: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&z) {
            Ok(Self(z))
        } else {
            Err(Error::InvalidBelief(z))
        }
    }

    /// Clamp values that left `[0, 1]` through rounding only.
    pub fn clamped(z: f64) -> Self {
        Self(z.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Full posterior over channel states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let total: f64 = components.iter().sum();
        if components.is_empty()
            || components.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidParameter(format!(
                "belief vector must be a probability distribution, got {components:?}"
            )));
        }
        Ok(Self(components))
    }

    pub fn from_scalar(z: Belief) -> Self {
        Self(vec![z.get(), 1.0 - z.get()])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }
}

/// Input policy `u(s, x) = p(x | s)`, one row per channel state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMatrix(Vec<Vec<f64>>);

impl ActionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (s, row) in rows.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMatrix(format!(
                    "row {s} is not a distribution: {row:?}"
                )));
            }
        }
        Ok(Self(rows))
    }

    /// The 2x2 matrix with `p(x=0|s=0) = stay0` and `p(x=1|s=1) = stay1`.
    pub fn binary(stay0: f64, stay1: f64) -> Result<Self> {
        Self::new(vec![vec![stay0, 1.0 - stay0], vec![1.0 - stay1, stay1]])
    }

    /// Inverse of [`action_pair_from_matrix`] for `z` strictly inside `(0, 1)`.
    pub fn from_action_pair(z: Belief, a: ActionPair) -> Result<Self> {
        let z = z.get();
        if z <= 0.0 || z >= 1.0 {
            return Err(Error::InvalidBelief(z));
        }
        Self::binary((a.delta / z).min(1.0), (a.gamma / (1.0 - z)).min(1.0))
    }

    pub fn get(&self, s: usize, x: usize) -> f64 {
        self.0[s][x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }
}

/// Action in the scalar parametrization: `delta = z u(0,0)`, `gamma = (1 - z) u(1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionPair {
    pub delta: f64,
    pub gamma: f64,
}

impl ActionPair {
    /// Validated against the feasible rectangle of `z`.
    pub fn new(z: Belief, delta: f64, gamma: f64) -> Result<Self> {
        let a = Self { delta, gamma };
        a.check(z)?;
        Ok(a)
    }

    pub fn check(&self, z: Belief) -> Result<()> {
        let z = z.get();
        let ok = self.delta >= -FEASIBILITY_TOL
            && self.gamma >= -FEASIBILITY_TOL
            && self.delta <= z + FEASIBILITY_TOL
            && self.gamma <= 1.0 - z + FEASIBILITY_TOL;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidAction {
                z,
                delta: self.delta,
                gamma: self.gamma,
            })
        }
    }
}

/// Posterior over the next channel state after observing `y`.
pub fn belief_update<C: UnifilarChannel>(
    channel: &C,
    beta: &BeliefVector,
    u: &ActionMatrix,
    y: usize,
) -> Result<BeliefVector> {
    let ns = channel.num_states();
    if beta.components().len() != ns || u.rows().len() != ns {
        return Err(Error::InvalidParameter(
            "belief/action dimensions do not match the channel".into(),
        ));
    }
    let mut next = vec![0.0; ns];
    for (s_prev, &b) in beta.components().iter().enumerate() {
        for x in 0..channel.num_inputs() {
            let p = b * u.get(s_prev, x) * channel.output_prob_idx(x, s_prev, y);
            if p > 0.0 {
                next[channel.next_state_idx(s_prev, x, y)] += p;
            }
        }
    }
    let total: f64 = next.iter().sum();
    if total <= 0.0 {
        return Err(Error::ImpossibleObservation { output: y });
    }
    next.iter_mut().for_each(|p| *p /= total);
    Ok(BeliefVector(next))
}

pub fn action_pair_from_matrix(z: Belief, u: &ActionMatrix) -> ActionPair {
    ActionPair {
        delta: z.get() * u.get(0, 0),
        gamma: (1.0 - z.get()) * u.get(1, 1),
    }
}

/// Probability of output `w` under belief `z` and action `a`.
pub fn disturbance_prob(a: ActionPair, w: Bit) -> f64 {
    let p0 = (1.0 + a.delta - a.gamma) / 2.0;
    match w {
        Bit::Zero => p0,
        Bit::One => (1.0 - a.delta + a.gamma) / 2.0,
    }
}

/// Next belief after output `w`.
pub fn transition_z(z: Belief, a: ActionPair, w: Bit) -> Result<Belief> {
    a.check(z)?;
    let p = disturbance_prob(a, w);
    if p <= 0.0 {
        return Err(Error::ImpossibleObservation { output: w.index() });
    }
    let next = match w {
        Bit::Zero => a.delta / p,
        Bit::One => 1.0 - a.gamma / p,
    };
    Ok(Belief::clamped(next))
}

/// One-step reward `I(X, S; Y)` in bits.
pub fn reward(a: ActionPair) -> f64 {
    binary_entropy(0.5 + (a.delta - a.gamma) / 2.0) + a.delta + a.gamma - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Trapdoor;
    use crate::golden::GoldenConstants;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b(z: f64) -> Belief {
        Belief::new(z).unwrap()
    }

    #[test]
    fn belief_update_known_state_is_absorbing() {
        let beta = BeliefVector::new(vec![1.0, 0.0]).unwrap();
        let u = ActionMatrix::binary(1.0, 0.0).unwrap();
        let next = belief_update(&Trapdoor, &beta, &u, 0).unwrap();
        assert_eq!(next.components(), &[1.0, 0.0]);
    }

    #[test]
    fn belief_update_identity_policy_reveals_state() {
        let beta = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        let u = ActionMatrix::binary(1.0, 1.0).unwrap();
        let next = belief_update(&Trapdoor, &beta, &u, 0).unwrap();
        assert_eq!(next.components(), &[1.0, 0.0]);
    }

    #[test]
    fn belief_update_at_b2_reaches_b4() {
        let g = GoldenConstants::new();
        let u = ActionMatrix::from_action_pair(
            b(g.b2),
            ActionPair {
                delta: g.b2,
                gamma: g.b2,
            },
        )
        .unwrap();
        let next = belief_update(&Trapdoor, &BeliefVector::from_scalar(b(g.b2)), &u, 0).unwrap();
        assert!((next.components()[0] - g.b4).abs() < 1e-12);
    }

    #[test]
    fn belief_update_rejects_impossible_output() {
        let beta = BeliefVector::new(vec![1.0, 0.0]).unwrap();
        let u = ActionMatrix::binary(1.0, 0.0).unwrap();
        assert_eq!(
            belief_update(&Trapdoor, &beta, &u, 1),
            Err(Error::ImpossibleObservation { output: 1 })
        );
    }

    #[test]
    fn action_pair_examples() {
        let g = GoldenConstants::new();
        let u = ActionMatrix::binary(1.0, 1.0).unwrap();
        assert_eq!(
            action_pair_from_matrix(b(0.5), &u),
            ActionPair {
                delta: 0.5,
                gamma: 0.5
            }
        );
        let u = ActionMatrix::binary(1.0, g.b3).unwrap();
        let a = action_pair_from_matrix(b(g.b2), &u);
        assert_eq!(a.delta, g.b2);
        assert!((a.gamma - g.b3 * (1.0 - g.b2)).abs() < 1e-15);
        let u = ActionMatrix::binary(0.3, 0.7).unwrap();
        assert_eq!(
            action_pair_from_matrix(b(0.0), &u),
            ActionPair {
                delta: 0.0,
                gamma: 0.7
            }
        );
    }

    #[test]
    fn transition_examples() {
        let g = GoldenConstants::new();
        let a = ActionPair {
            delta: g.b2,
            gamma: g.b2,
        };
        let z = b(g.b2);
        assert!((transition_z(z, a, Bit::Zero).unwrap().get() - g.b4).abs() < 1e-12);
        assert!((transition_z(z, a, Bit::One).unwrap().get() - g.b1).abs() < 1e-12);
        let a4 = ActionPair {
            delta: g.b3 * g.b4,
            gamma: 1.0 - g.b4,
        };
        assert!((transition_z(b(g.b4), a4, Bit::Zero).unwrap().get() - g.b4).abs() < 1e-12);
    }

    #[test]
    fn transition_rejects_zero_probability_output() {
        let a = ActionPair {
            delta: 0.0,
            gamma: 1.0,
        };
        assert!(matches!(
            transition_z(b(0.0), a, Bit::Zero),
            Err(Error::ImpossibleObservation { .. })
        ));
        assert!(transition_z(b(0.0), a, Bit::One).is_ok());
        assert!(matches!(
            transition_z(
                b(0.2),
                ActionPair {
                    delta: 0.3,
                    gamma: 0.0
                },
                Bit::Zero
            ),
            Err(Error::InvalidAction { .. })
        ));
    }

    #[test]
    fn disturbance_examples() {
        let g = GoldenConstants::new();
        let p = |d, gm| {
            disturbance_prob(
                ActionPair {
                    delta: d,
                    gamma: gm,
                },
                Bit::Zero,
            )
        };
        assert_eq!(p(0.0, 0.0), 0.5);
        assert_eq!(p(1.0, 0.0), 1.0);
        assert!((p(g.b2, g.b2) - 0.5).abs() < 1e-15);
        let a = ActionPair {
            delta: 0.2,
            gamma: 0.7,
        };
        assert!(
            (disturbance_prob(a, Bit::Zero) + disturbance_prob(a, Bit::One) - 1.0).abs() < 1e-15
        );
    }

    #[test]
    fn reward_examples() {
        let g = GoldenConstants::new();
        assert_eq!(
            reward(ActionPair {
                delta: 0.0,
                gamma: 0.0
            }),
            0.0
        );
        assert_eq!(
            reward(ActionPair {
                delta: 1.0,
                gamma: 0.0
            }),
            0.0
        );
        let r = reward(ActionPair {
            delta: g.b2,
            gamma: g.b2,
        });
        assert!((r - (3.0 - 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn reward_is_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let z: f64 = rng.random();
            let a = ActionPair {
                delta: rng.random::<f64>() * z,
                gamma: rng.random::<f64>() * (1.0 - z),
            };
            assert!(reward(a) <= 1.0 + 1e-15);
            assert!(reward(a) >= -1.0);
        }
        assert!(
            (reward(ActionPair {
                delta: 0.5,
                gamma: 0.5
            }) - 1.0)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn generic_update_matches_scalar_transition() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 10_000 {
            let z: f64 = rng.random_range(1e-6..1.0 - 1e-6);
            let u = ActionMatrix::binary(rng.random(), rng.random()).unwrap();
            let a = action_pair_from_matrix(b(z), &u);
            for w in Bit::ALL {
                if disturbance_prob(a, w) < 1e-4 {
                    continue;
                }
                let generic =
                    belief_update(&Trapdoor, &BeliefVector::from_scalar(b(z)), &u, w.index())
                        .unwrap();
                let scalar = transition_z(b(z), a, w).unwrap().get();
                assert!(
                    (generic.components()[0] - scalar).abs() < 1e-12,
                    "z={z} {a:?} {w}"
                );
            }
            checked += 1;
        }
    }
}
