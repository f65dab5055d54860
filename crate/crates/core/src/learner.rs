//! Agents that produce evolving policies: value iteration and tabular
//! Q-learning with an epsilon-greedy behaviour policy.
//!
//! Both use the discounted return.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    argmax_lowest, sample_index, sample_next_state, sample_reward, ActionId, MdpError, StateId, StochasticPolicy,
    TabularMdp, ValueEstimate,
};
use crate::run::{Experience, RunRecord, Snapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("value iteration did not converge within {iterations} sweeps (residual {residual})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ValueIteration,
    TabularTd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub gamma: f64,
    /// Value iteration stops once the sup-norm Bellman residual falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub episodes: usize,
    pub epsilon: f64,
    /// Step size for the first update of each state-action pair.
    pub learning_rate: f64,
    /// Step size after `n` updates is `learning_rate / n^learning_rate_decay`.
    pub learning_rate_decay: f64,
    /// Episode length cap for TD learning.
    pub max_steps: usize,
    /// Snapshot every this many episodes (TD) or sweeps (value iteration).
    pub snapshot_every: usize,
    pub seed: u64,
    /// Episode start states; `None` samples every state uniformly.
    pub starts: Option<Vec<StateId>>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::TabularTd,
            gamma: 0.9,
            tolerance: 1e-10,
            max_iterations: 100_000,
            episodes: 500,
            epsilon: 0.1,
            learning_rate: 1.0,
            learning_rate_decay: 0.8,
            max_steps: 50,
            snapshot_every: 50,
            seed: 0,
            starts: None,
        }
    }
}

impl LearnerConfig {
    fn validate(&self, mdp: &TabularMdp) -> Result<(), LearnError> {
        let bad = |msg: &str| Err(LearnError::Config(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning rate must lie in (0, 1]");
        }
        if !(self.learning_rate_decay >= 0.0 && self.learning_rate_decay <= 1.0) {
            return bad("learning rate decay must lie in [0, 1]");
        }
        if self.snapshot_every == 0 {
            return bad("snapshot cadence must be positive");
        }
        if let Some(starts) = &self.starts {
            if starts.is_empty() {
                return bad("start state list is empty");
            }
            for &s in starts {
                mdp.check_state(s)?;
            }
        }
        Ok(())
    }

    fn start_states(&self, mdp: &TabularMdp) -> Vec<StateId> {
        self.starts.clone().unwrap_or_else(|| mdp.states().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult {
    pub values: ValueEstimate,
    /// Deterministic greedy policy, lowest action index on ties.
    pub policy: StochasticPolicy,
    pub iterations: usize,
}

fn action_values(mdp: &TabularMdp, values: &[f64], gamma: f64, s: StateId) -> Vec<f64> {
    mdp.actions()
        .map(|a| {
            mdp.states()
                .map(|n| mdp.transition(s, a, n) * (mdp.reward(s, a, n) + gamma * values[n.0]))
                .sum()
        })
        .collect()
}

fn greedy_policy(mdp: &TabularMdp, values: &[f64], gamma: f64) -> StochasticPolicy {
    let actions: Vec<ActionId> = mdp
        .states()
        .map(|s| ActionId(argmax_lowest(&action_values(mdp, values, gamma, s))))
        .collect();
    StochasticPolicy::deterministic(&actions, mdp.num_actions())
}

fn bellman_sweep(mdp: &TabularMdp, values: &[f64], gamma: f64) -> (Vec<f64>, f64) {
    let next: Vec<f64> = mdp
        .states()
        .map(|s| {
            action_values(mdp, values, gamma, s)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let residual = next.iter().zip(values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (next, residual)
}

/// Value iteration on expected rewards until the Bellman residual drops below
/// `cfg.tolerance`.
pub fn value_iteration(mdp: &TabularMdp, cfg: &LearnerConfig) -> Result<ValueIterationResult, LearnError> {
    value_iteration_with(mdp, cfg, |_, _| {})
}

fn value_iteration_with(
    mdp: &TabularMdp,
    cfg: &LearnerConfig,
    mut on_sweep: impl FnMut(usize, &[f64]),
) -> Result<ValueIterationResult, LearnError> {
    cfg.validate(mdp)?;
    let mut values = vec![0.0; mdp.num_states()];
    let mut residual = f64::INFINITY;
    for iteration in 1..=cfg.max_iterations {
        let (next, r) = bellman_sweep(mdp, &values, cfg.gamma);
        values = next;
        residual = r;
        on_sweep(iteration, &values);
        if residual < cfg.tolerance {
            return Ok(ValueIterationResult {
                policy: greedy_policy(mdp, &values, cfg.gamma),
                values: ValueEstimate::new(values)?,
                iterations: iteration,
            });
        }
    }
    Err(LearnError::NotConverged {
        iterations: cfg.max_iterations,
        residual,
    })
}

/// A run of value iteration: the uniform policy with zero values, then the
/// greedy policy every `snapshot_every` sweeps and at convergence.
pub fn value_iteration_run(mdp: &TabularMdp, cfg: &LearnerConfig) -> Result<RunRecord, LearnError> {
    let mut snapshots = vec![Snapshot {
        step: 0,
        policy: StochasticPolicy::uniform(mdp.num_states(), mdp.num_actions()),
        values: Some(ValueEstimate::zeros(mdp.num_states())),
    }];
    let result = value_iteration_with(mdp, cfg, |sweep, values| {
        if sweep % cfg.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: sweep as u64,
                policy: greedy_policy(mdp, values, cfg.gamma),
                values: Some(ValueEstimate::new(values.to_vec()).expect("finite sweep")),
            });
        }
    })?;
    if snapshots.last().map(|s| s.step) != Some(result.iterations as u64) {
        snapshots.push(Snapshot {
            step: result.iterations as u64,
            policy: result.policy,
            values: Some(result.values),
        });
    }
    Ok(RunRecord {
        mdp: mdp.clone(),
        snapshots,
        experience: Vec::new(),
        start_states: cfg.start_states(mdp),
        seed: None,
    })
}

fn epsilon_greedy_row(q_row: &[f64], epsilon: f64) -> Vec<f64> {
    let n = q_row.len();
    let mut row = vec![epsilon / n as f64; n];
    row[argmax_lowest(q_row)] += 1.0 - epsilon;
    row
}

fn snapshot_from_q(q: &[f64], num_actions: usize, epsilon: f64, step: u64) -> Snapshot {
    let rows: Vec<Vec<f64>> = q
        .chunks(num_actions)
        .map(|row| epsilon_greedy_row(row, epsilon))
        .collect();
    let values = q
        .chunks(num_actions)
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Snapshot {
        step,
        policy: StochasticPolicy::new(rows).expect("epsilon-greedy rows are stochastic"),
        values: Some(ValueEstimate::new(values).expect("finite estimates")),
    }
}

/// Tabular Q-learning. Snapshots hold the epsilon-greedy policy and
/// `max_a Q(s, a)`; the first is taken before any episode, then one every
/// `snapshot_every` episodes and after the last. Experience is attributed
/// to the latest snapshot taken before it was sampled.
pub fn td_learn(mdp: &TabularMdp, cfg: &LearnerConfig) -> Result<RunRecord, LearnError> {
    cfg.validate(mdp)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let starts = cfg.start_states(mdp);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = vec![0.0; ns * na];
    let mut visits = vec![0u64; ns * na];
    let mut snapshots = vec![snapshot_from_q(&q, na, cfg.epsilon, 0)];
    let mut experience = Vec::new();

    for episode in 0..cfg.episodes {
        let mut s = starts[rng.random_range(0..starts.len())];
        for _ in 0..cfg.max_steps {
            let row = &q[s.0 * na..(s.0 + 1) * na];
            let a = ActionId(sample_index(&epsilon_greedy_row(row, cfg.epsilon), &mut rng));
            let next = sample_next_state(mdp, s, a, &mut rng)?;
            let reward = sample_reward(mdp, s, a, next, &mut rng);
            experience.push(Experience {
                snapshot: snapshots.len() - 1,
                episode,
                state: s,
                action: a,
                next,
                reward,
            });

            let idx = s.0 * na + a.0;
            visits[idx] += 1;
            let step_size = cfg.learning_rate / (visits[idx] as f64).powf(cfg.learning_rate_decay);
            let best_next = q[next.0 * na..(next.0 + 1) * na]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            q[idx] += step_size * (reward + cfg.gamma * best_next - q[idx]);
            s = next;
        }
        let done = episode + 1;
        if done % cfg.snapshot_every == 0 || done == cfg.episodes {
            snapshots.push(snapshot_from_q(&q, na, cfg.epsilon, done as u64));
        }
    }

    Ok(RunRecord {
        mdp: mdp.clone(),
        snapshots,
        experience,
        start_states: starts,
        seed: Some(cfg.seed),
    })
}

/// Dispatches on `cfg.algorithm`.
pub fn learn(mdp: &TabularMdp, cfg: &LearnerConfig) -> Result<RunRecord, LearnError> {
    match cfg.algorithm {
        Algorithm::ValueIteration => value_iteration_run(mdp, cfg),
        Algorithm::TabularTd => td_learn(mdp, cfg),
    }
}

/// Largest Bellman optimality residual of `values`.
pub fn bellman_residual(mdp: &TabularMdp, values: &ValueEstimate, gamma: f64) -> f64 {
    bellman_sweep(mdp, values.as_slice(), gamma).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chain2, chain2_zero_reward};

    #[test]
    fn chain2_closed_form() {
        let res = value_iteration(&chain2(), &LearnerConfig::default()).unwrap();
        // Absorbing s1 earns 1 per step forever: 1 / (1 - 0.9).
        assert!((res.values.get(StateId(1)) - 10.0).abs() < 1e-6);
        // s0 under a1: V = 0.8 * (1 + 0.9 * 10) + 0.2 * 0.9 * V, so V = 8 / 0.82.
        assert!((res.values.get(StateId(0)) - 8.0 / 0.82).abs() < 1e-6);
        assert_eq!(res.policy.greedy_actions()[0], ActionId(1));
        assert!(bellman_residual(&chain2(), &res.values, 0.9) < 1e-9);
    }

    #[test]
    fn zero_discount_is_one_step_lookahead() {
        let cfg = LearnerConfig {
            gamma: 0.0,
            ..Default::default()
        };
        let res = value_iteration(&chain2(), &cfg).unwrap();
        // max_a E[r]: s0 best is a1 with 0.8, s1 always 1.
        assert!((res.values.get(StateId(0)) - 0.8).abs() < 1e-12);
        assert!((res.values.get(StateId(1)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let res = value_iteration(&chain2_zero_reward(), &LearnerConfig::default()).unwrap();
        assert!(res.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let cfg = LearnerConfig {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(matches!(value_iteration(&chain2(), &cfg), Err(LearnError::Config(_))));
        let cfg = LearnerConfig {
            max_iterations: 3,
            ..Default::default()
        };
        assert!(matches!(
            value_iteration(&chain2(), &cfg),
            Err(LearnError::NotConverged { .. })
        ));
    }

    #[test]
    fn zero_episodes_has_initial_snapshot_only() {
        let cfg = LearnerConfig {
            episodes: 0,
            ..Default::default()
        };
        let run = td_learn(&chain2(), &cfg).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert!(run.experience.is_empty());
    }

    #[test]
    fn td_is_seed_deterministic() {
        let cfg = LearnerConfig {
            episodes: 30,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(td_learn(&chain2(), &cfg).unwrap(), td_learn(&chain2(), &cfg).unwrap());
    }

    #[test]
    fn td_finds_a1_on_chain2() {
        let cfg = LearnerConfig {
            episodes: 500,
            seed: 1,
            ..Default::default()
        };
        let run = td_learn(&chain2(), &cfg).unwrap();
        let last = run.snapshots.last().unwrap();
        assert_eq!(last.step, 500);
        assert_eq!(last.policy.greedy_actions()[0], ActionId(1));
        assert_eq!(run.experience.len(), 500 * cfg.max_steps);
    }

    #[test]
    fn value_iteration_run_snapshots() {
        let cfg = LearnerConfig {
            algorithm: Algorithm::ValueIteration,
            snapshot_every: 10,
            ..Default::default()
        };
        let run = learn(&chain2(), &cfg).unwrap();
        assert_eq!(run.snapshots[0].policy, StochasticPolicy::uniform(2, 2));
        assert!(run.snapshots.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(run.snapshots.last().unwrap().policy.greedy_actions()[0], ActionId(1));
    }
}
