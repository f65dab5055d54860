//! Brute-force reference implementations.
//!
//! Everything here is deliberately naive and shares no code with the
//! production search, cut and normalization routines; it exists so tests can
//! compare the two. Only the plain data types are reused.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::csf::{AberrationClass, Concept, UninspirationFlags};
use crate::mdp::{ActionId, StateId, StochasticPolicy, TabularMdp, Trajectory, ValueEstimate};

/// Largest enumeration the oracle will attempt.
pub const ORACLE_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration would exceed {ORACLE_LIMIT} entries")]
    TooLarge,
}

/// States reachable from `starts` along edges with `pi(a|s) T_a(s,s') > 0`,
/// starts included.
pub fn bfs_reachable(mdp: &TabularMdp, policy: &StochasticPolicy, starts: &[StateId]) -> BTreeSet<StateId> {
    let mut seen: BTreeSet<StateId> = starts.iter().copied().collect();
    let mut queue: VecDeque<StateId> = starts.iter().copied().collect();
    while let Some(s) = queue.pop_front() {
        for a in 0..mdp.num_actions() {
            for n in 0..mdp.num_states() {
                let p = policy.prob(s, ActionId(a)) * mdp.transition(s, ActionId(a), StateId(n));
                if p > 0.0 && seen.insert(StateId(n)) {
                    queue.push_back(StateId(n));
                }
            }
        }
    }
    seen
}

/// Every trajectory of exactly `horizon` steps from `start`, including those
/// of probability zero, with its probability.
pub fn enumerate_trajectories(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start: StateId,
    horizon: usize,
) -> Result<Vec<(Trajectory, f64)>, OracleError> {
    let branching = mdp.num_actions() * mdp.num_states();
    let mut size: usize = 1;
    for _ in 0..horizon {
        size = size.checked_mul(branching).ok_or(OracleError::TooLarge)?;
        if size > ORACLE_LIMIT {
            return Err(OracleError::TooLarge);
        }
    }
    let mut out = Vec::with_capacity(size);
    let mut steps = Vec::with_capacity(horizon);
    depth_first(mdp, policy, start, start, 1.0, horizon, &mut steps, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn depth_first(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start: StateId,
    at: StateId,
    p: f64,
    remaining: usize,
    steps: &mut Vec<(ActionId, StateId)>,
    out: &mut Vec<(Trajectory, f64)>,
) {
    if remaining == 0 {
        out.push((
            Trajectory {
                start,
                steps: steps.clone(),
            },
            p,
        ));
        return;
    }
    for a in 0..mdp.num_actions() {
        for n in 0..mdp.num_states() {
            let step = policy.prob(at, ActionId(a)) * mdp.transition(at, ActionId(a), StateId(n));
            steps.push((ActionId(a), StateId(n)));
            depth_first(mdp, policy, start, StateId(n), p * step, remaining - 1, steps, out);
            steps.pop();
        }
    }
}

/// What the definitions say about one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub conceptual_space: BTreeSet<Concept>,
    pub reachable: BTreeSet<Concept>,
    pub aberration: BTreeSet<Concept>,
    pub aberration_class: AberrationClass,
    pub uninspiration: UninspirationFlags,
}

fn min_max(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    xs.iter()
        .map(|&x| if hi > lo { (x - lo) / (hi - lo) } else { 0.5 })
        .collect()
}

fn verdict(
    universe: &[(Concept, f64, f64)],
    reachable: BTreeSet<Concept>,
    alpha: f64,
    beta: f64,
    hopeless: Option<bool>,
) -> Verdict {
    let conceptual_space: BTreeSet<Concept> = universe
        .iter()
        .filter(|(_, acc, _)| *acc > alpha)
        .map(|(c, _, _)| c.clone())
        .collect();
    let values: BTreeMap<&Concept, f64> = universe.iter().map(|(c, _, v)| (c, *v)).collect();
    let value = |c: &Concept| values.get(c).copied().unwrap_or(0.0);
    let aberration: BTreeSet<Concept> = reachable.difference(&conceptual_space).cloned().collect();
    let valued = aberration.iter().filter(|c| value(c) > beta).count();
    let aberration_class = if aberration.is_empty() {
        AberrationClass::None
    } else if valued == aberration.len() {
        AberrationClass::Perfect
    } else if valued == 0 {
        AberrationClass::Pointless
    } else {
        AberrationClass::Productive
    };
    let uninspiration = UninspirationFlags {
        generative: !reachable.iter().any(|c| value(c) > beta),
        conceptual: !conceptual_space.iter().any(|c| value(c) > beta),
        hopeless,
    };
    Verdict {
        conceptual_space,
        reachable,
        aberration,
        aberration_class,
        uninspiration,
    }
}

/// States as concepts, min-max normalized values.
pub fn classify_states(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    values: &ValueEstimate,
    alpha: f64,
    beta: f64,
    starts: &[StateId],
) -> Verdict {
    let v = min_max(values.as_slice());
    let universe: Vec<_> = (0..mdp.num_states())
        .map(|s| (Concept::State(StateId(s)), 1.0, v[s]))
        .collect();
    let reachable = bfs_reachable(mdp, policy, starts)
        .into_iter()
        .map(Concept::State)
        .collect();
    // Every state is in the sub-universe, but so is everything that is not a state.
    verdict(&universe, reachable, alpha, beta, None)
}

/// Transitions as concepts, min-max normalized mean rewards. The start tuple
/// is every positive-probability transition out of `starts`.
pub fn classify_transitions(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    alpha: f64,
    beta: f64,
    starts: &[StateId],
) -> Verdict {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut keys = Vec::new();
    let mut rewards = Vec::new();
    for s in 0..ns {
        for a in 0..na {
            for n in 0..ns {
                keys.push((StateId(s), ActionId(a), StateId(n)));
                rewards.push(mdp.reward(StateId(s), ActionId(a), StateId(n)));
            }
        }
    }
    let r = min_max(&rewards);
    let p = |(s, a, n): (StateId, ActionId, StateId)| policy.prob(s, a) * mdp.transition(s, a, n);
    let universe: Vec<_> = keys
        .iter()
        .zip(&r)
        .map(|(&k, &v)| (Concept::Transition(k.0, k.1, k.2), p(k), v))
        .collect();

    let first: BTreeSet<StateId> = starts.iter().copied().collect();
    let sources: BTreeSet<StateId> = keys
        .iter()
        .filter(|&&k| first.contains(&k.0) && p(k) > 0.0)
        .flat_map(|&(s, _, n)| [s, n])
        .collect();
    let states = bfs_reachable(mdp, policy, &sources.into_iter().collect::<Vec<_>>());
    let reachable = keys
        .iter()
        .filter(|&&k| states.contains(&k.0) && p(k) > 0.0)
        .map(|&(s, a, n)| Concept::Transition(s, a, n))
        .collect();
    let hopeless = !r.iter().any(|&v| v > beta);
    verdict(&universe, reachable, alpha, beta, Some(hopeless))
}

/// Trajectories of up to `horizon` steps from `starts`, valued by the
/// min-max normalized value of their final state.
pub fn classify_trajectories(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    values: &ValueEstimate,
    alpha: f64,
    beta: f64,
    starts: &[StateId],
    horizon: usize,
) -> Result<Verdict, OracleError> {
    let v = min_max(values.as_slice());
    let mut universe = Vec::new();
    for &start in starts {
        for k in 0..=horizon {
            for (t, p) in enumerate_trajectories(mdp, policy, start, k)? {
                let last = t.steps.last().map_or(t.start, |&(_, s)| s);
                universe.push((Concept::Trajectory(t), p, v[last.0]));
                if universe.len() > ORACLE_LIMIT {
                    return Err(OracleError::TooLarge);
                }
            }
        }
    }
    universe.sort_by(|a, b| a.0.cmp(&b.0));
    universe.dedup_by(|a, b| a.0 == b.0);
    let reachable = universe
        .iter()
        .filter(|(_, p, _)| *p > 0.0)
        .map(|(c, _, _)| c.clone())
        .collect();
    // Any state ends some trajectory, so the sub-universe takes every state value.
    let hopeless = !v.iter().any(|&x| x > beta);
    Ok(verdict(&universe, reachable, alpha, beta, Some(hopeless)))
}
