//! Seeded workloads shared by the benchmarks.

use creative_mdp::fixtures::{random_mdp_continuous, random_policy, random_values};
use creative_mdp::{StochasticPolicy, TabularMdp, ValueEstimate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A dense random MDP with a matching policy and value estimate.
pub fn workload(num_states: usize, num_actions: usize, seed: u64) -> (TabularMdp, StochasticPolicy, ValueEstimate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mdp = random_mdp_continuous(&mut rng, num_states, num_actions);
    let policy = random_policy(&mut rng, &mdp, false);
    let values = random_values(&mut rng, &mdp);
    (mdp, policy, values)
}
