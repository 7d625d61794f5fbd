use rand::Rng;
use serde::{Deserialize, Serialize};

use super::belief::{disturbance_prob, reward, transition_z, ActionPair, Belief};
use super::value::{nearest_index, PolicyTable};
use crate::channel::Bit;
use crate::error::Result;

/// A stationary policy on beliefs.
pub trait Policy {
    fn action(&self, z: Belief) -> Result<ActionPair>;
}

impl Policy for PolicyTable {
    fn action(&self, z: Belief) -> Result<ActionPair> {
        Ok(self.action_at(z.get()))
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action(&self, z: Belief) -> Result<ActionPair> {
        (**self).action(z)
    }
}

/// Summary of one simulated belief trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub steps: usize,
    /// Mean one-step reward; `None` for an empty run.
    pub avg_reward: Option<f64>,
    /// Visit frequency per bin; bin `i` collects beliefs nearest grid point `i`.
    pub histogram: Vec<f64>,
    /// Belief after the last step, for continuing a trajectory.
    pub final_belief: f64,
}

impl ChainStats {
    pub fn bins(&self) -> usize {
        self.histogram.len()
    }

    /// Fraction of visits whose bin is within `radius` bins of a target's bin.
    pub fn mass_near(&self, targets: &[f64], radius: usize) -> f64 {
        let n = self.histogram.len();
        let centers: Vec<usize> = targets.iter().map(|&t| nearest_index(n, t)).collect();
        self.histogram
            .iter()
            .enumerate()
            .filter(|(i, _)| centers.iter().any(|c| c.abs_diff(*i) <= radius))
            .map(|(_, f)| f)
            .sum()
    }
}

/// Run the belief chain `z_t = F(z_{t-1}, mu(z_{t-1}), w_t)` with outputs
/// drawn from the disturbance law, recording reward and visited beliefs.
pub fn simulate_belief_chain<P: Policy, R: Rng + ?Sized>(
    policy: &P,
    z0: Belief,
    steps: usize,
    bins: usize,
    rng: &mut R,
) -> Result<ChainStats> {
    let bins = bins.max(2);
    let mut counts = vec![0u64; bins];
    let mut total = 0.0;
    let mut z = z0;
    for _ in 0..steps {
        counts[nearest_index(bins, z.get())] += 1;
        let a = policy.action(z)?;
        total += reward(a);
        let w = if rng.random::<f64>() < disturbance_prob(a, Bit::Zero) {
            Bit::Zero
        } else {
            Bit::One
        };
        z = transition_z(z, a, w)?;
    }
    let histogram = counts
        .iter()
        .map(|&c| {
            if steps == 0 {
                0.0
            } else {
                c as f64 / steps as f64
            }
        })
        .collect();
    Ok(ChainStats {
        steps,
        avg_reward: (steps > 0).then(|| total / steps as f64),
        histogram,
        final_belief: z.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden::{ConjecturedPolicy, GoldenConstants};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_step_from_b2_lands_on_b1_or_b4() {
        let g = GoldenConstants::new();
        let policy = ConjecturedPolicy::default();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z0 = Belief::new(g.b2).unwrap();
            let a = policy.action(z0).unwrap();
            let w = if rng.random::<f64>() < disturbance_prob(a, Bit::Zero) {
                Bit::Zero
            } else {
                Bit::One
            };
            let z1 = transition_z(z0, a, w).unwrap().get();
            assert!((z1 - g.b1).abs() < 1e-12 || (z1 - g.b4).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_run_has_no_reward() {
        let policy = ConjecturedPolicy::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = simulate_belief_chain(&policy, Belief::new(0.5).unwrap(), 0, 10, &mut rng).unwrap();
        assert_eq!(s.avg_reward, None);
        assert!(s.histogram.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn seeded_runs_repeat() {
        let policy = ConjecturedPolicy::default();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            simulate_belief_chain(&policy, Belief::new(0.5).unwrap(), 5000, 101, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }
}
