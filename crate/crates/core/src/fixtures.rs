//! Canonical small models and seeded random instances for tests and benches.

use rand::Rng;

use crate::mdp::{ActionId, StateId, StochasticPolicy, TabularMdp, ValueEstimate};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// CHAIN2: two states, two actions, `s1` absorbing, reward 1 for every arrival in `s1`.
pub fn chain2() -> TabularMdp {
    let reward_row = vec![0.0, 1.0];
    TabularMdp::new(
        labels("s", 2),
        labels("a", 2),
        vec![
            vec![vec![0.9, 0.1], vec![0.0, 1.0]],
            vec![vec![0.2, 0.8], vec![0.0, 1.0]],
        ],
        vec![vec![reward_row.clone(); 2]; 2],
        None,
    )
    .expect("chain2 is well formed")
}

/// CHAIN2 with every reward zero.
pub fn chain2_zero_reward() -> TabularMdp {
    let base = chain2();
    TabularMdp::new(
        base.state_labels().to_vec(),
        base.action_labels().to_vec(),
        vec![
            vec![vec![0.9, 0.1], vec![0.0, 1.0]],
            vec![vec![0.2, 0.8], vec![0.0, 1.0]],
        ],
        vec![vec![vec![0.0; 2]; 2]; 2],
        None,
    )
    .expect("well formed")
}

/// Reference policy: `s0` picks a0 with 0.25 and a1 with 0.75, `s1` always a0.
pub fn chain2_reference_policy() -> StochasticPolicy {
    StochasticPolicy::new(vec![vec![0.25, 0.75], vec![1.0, 0.0]]).expect("valid rows")
}

/// Always the given action.
pub fn constant_policy(mdp: &TabularMdp, action: ActionId) -> StochasticPolicy {
    StochasticPolicy::deterministic(&vec![action; mdp.num_states()], mdp.num_actions())
}

/// Values `(0, 10)` on CHAIN2.
pub fn chain2_values() -> ValueEstimate {
    ValueEstimate::new(vec![0.0, 10.0]).expect("finite")
}

/// A random row-stochastic vector. With `sparse`, each entry is zeroed with
/// probability one half (at least one entry survives).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize, sparse: bool) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    if sparse {
        let keep = rng.random_range(0..n);
        for (i, p) in row.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.5) {
                *p = 0.0;
            }
        }
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
    row
}

/// A random MDP with rewards drawn from a small integer grid so that ties occur.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize) -> TabularMdp {
    let transition = (0..num_actions)
        .map(|_| {
            (0..num_states)
                .map(|_| random_distribution(rng, num_states, true))
                .collect()
        })
        .collect();
    let reward = (0..num_states)
        .map(|_| {
            (0..num_actions)
                .map(|_| (0..num_states).map(|_| rng.random_range(0..4) as f64).collect())
                .collect()
        })
        .collect();
    TabularMdp::new(
        labels("s", num_states),
        labels("a", num_actions),
        transition,
        reward,
        None,
    )
    .expect("random rows are normalized")
}

/// A random MDP with continuous rewards in `[0, 1)`.
pub fn random_mdp_continuous<R: Rng + ?Sized>(rng: &mut R, num_states: usize, num_actions: usize) -> TabularMdp {
    let transition = (0..num_actions)
        .map(|_| {
            (0..num_states)
                .map(|_| random_distribution(rng, num_states, false))
                .collect()
        })
        .collect();
    let reward = (0..num_states)
        .map(|_| {
            (0..num_actions)
                .map(|_| (0..num_states).map(|_| rng.random::<f64>()).collect())
                .collect()
        })
        .collect();
    TabularMdp::new(
        labels("s", num_states),
        labels("a", num_actions),
        transition,
        reward,
        None,
    )
    .expect("random rows are normalized")
}

/// A random policy; sparse rows put zero mass on some actions.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &TabularMdp, sparse: bool) -> StochasticPolicy {
    let rows = (0..mdp.num_states())
        .map(|_| random_distribution(rng, mdp.num_actions(), sparse))
        .collect();
    StochasticPolicy::new(rows).expect("random rows are normalized")
}

/// Random values on a small integer grid.
pub fn random_values<R: Rng + ?Sized>(rng: &mut R, mdp: &TabularMdp) -> ValueEstimate {
    ValueEstimate::new((0..mdp.num_states()).map(|_| rng.random_range(-2..3) as f64).collect()).expect("finite")
}

/// A random MDP with a policy, values, start states and horizon, sized for
/// exhaustive checking: at most 4 states, 3 actions and horizon 4.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub mdp: TabularMdp,
    pub policy: StochasticPolicy,
    pub values: ValueEstimate,
    pub starts: Vec<StateId>,
    pub horizon: usize,
}

/// Threshold grid used by the exhaustive checks.
pub const THRESHOLD_GRID: [f64; 4] = [0.0, 0.25, 0.5, 0.9];

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R) -> RandomInstance {
    let ns = rng.random_range(1..=4);
    let na = rng.random_range(1..=3);
    let mdp = random_mdp(rng, ns, na);
    let sparse = rng.random_bool(0.7);
    let policy = random_policy(rng, &mdp, sparse);
    let values = random_values(rng, &mdp);
    let mut starts: Vec<StateId> = (0..ns).filter(|_| rng.random_bool(0.4)).map(StateId).collect();
    if starts.is_empty() {
        starts.push(StateId(rng.random_range(0..ns)));
    }
    let horizon = rng.random_range(1..=4);
    RandomInstance {
        mdp,
        policy,
        values,
        starts,
        horizon,
    }
}
