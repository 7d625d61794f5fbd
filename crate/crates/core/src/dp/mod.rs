//! The feedback-capacity dynamic program.
//!
//! For a unifilar channel the decoder's posterior over the channel state is
//! a sufficient statistic, so capacity becomes the optimal average reward of
//! an MDP on beliefs. For the trapdoor channel the belief collapses to the
//! scalar `z = P(state = 0 | outputs)` and the action to the pair
//! `(delta, gamma)`; this module provides both the generic belief recursion
//! and the scalar specialization with its Bellman operator.

mod belief;
mod chain;
mod operator;
mod value;

pub use belief::{
    action_pair_from_matrix, belief_update, disturbance_prob, reward, transition_z, ActionMatrix,
    ActionPair, Belief, BeliefVector,
};
pub use chain::{simulate_belief_chain, ChainStats, Policy};
pub use operator::{
    bellman_apply, bellman_objective, bellman_sweep, value_iteration, BellmanOptions, BellmanValue,
    ValueIteration,
};
pub use value::{PolicyTable, ValueFunction};

/// Slack allowed when checking `0 <= delta <= z`, `0 <= gamma <= 1 - z`.
pub const FEASIBILITY_TOL: f64 = 1e-12;
