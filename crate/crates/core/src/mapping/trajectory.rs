//! Finite trajectories as concepts.
//!
//! Acceptability is the probability of the trajectory given its start state,
//! `prod pi(a | s) T_a(s, s')` over its steps, and evaluation is the normalized
//! value estimate of its final state. Trajectories are enumerated up to a
//! horizon `H` from explicit start states; the empty trajectory at a start
//! state stands for the empty concept.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{check_policies, MappingError};
use crate::csf::{
    conceptual_space, diagnose, transformation_kind, Concept, Domain, EcsInstance, ReachBound, SubUniverse,
    TransformationKind, UninspirationFlags, DEFAULT_MAX_CONCEPTS,
};
use crate::mdp::{sample_index, ActionId, StateId, StochasticPolicy, TabularMdp, Trajectory, ValueEstimate};
use crate::normalize::{normalize, Normalization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtauConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Longest trajectory considered. Required.
    pub horizon: Option<usize>,
    pub normalization: Normalization,
    pub starts: Vec<StateId>,
}

impl MtauConfig {
    fn checked_horizon(&self) -> Result<usize, MappingError> {
        match self.horizon {
            None => Err(MappingError::HorizonRequired),
            Some(0) => Err(MappingError::ZeroHorizon),
            Some(h) => Ok(h),
        }
    }
}

fn step_probability(mdp: &TabularMdp, policy: &StochasticPolicy, s: StateId, a: ActionId, next: StateId) -> f64 {
    policy.prob(s, a) * mdp.transition(s, a, next)
}

fn probability(mdp: &TabularMdp, policy: &StochasticPolicy, tau: &Trajectory) -> f64 {
    tau.transitions()
        .map(|(s, a, n)| step_probability(mdp, policy, s, a, n))
        .product()
}

/// `P(tau | start, pi, T)`; the empty trajectory has probability one.
pub fn trajectory_acceptability(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    tau: &Trajectory,
) -> Result<f64, MappingError> {
    policy.check_compatible(mdp)?;
    tau.check(mdp)?;
    Ok(probability(mdp, policy, tau))
}

/// Probability of `tau` given that its first `prefix_len` steps were observed.
/// `None` when the prefix itself has probability zero.
pub fn conditional_trajectory_probability(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    tau: &Trajectory,
    prefix_len: usize,
) -> Result<Option<f64>, MappingError> {
    policy.check_compatible(mdp)?;
    tau.check(mdp)?;
    let prior = probability(mdp, policy, &tau.prefix(prefix_len));
    if prior > 0.0 {
        Ok(Some(
            tau.transitions()
                .skip(prefix_len)
                .map(|(s, a, n)| step_probability(mdp, policy, s, a, n))
                .product(),
        ))
    } else {
        Ok(None)
    }
}

/// Splits `ln p(tau)` into the policy's and the dynamics' contributions.
/// Diagnostic only; either part is `-inf` when that factor rules `tau` out.
pub fn log_probability_factors(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    tau: &Trajectory,
) -> Result<(f64, f64), MappingError> {
    policy.check_compatible(mdp)?;
    tau.check(mdp)?;
    Ok(tau.transitions().fold((0.0, 0.0), |(lp, lt), (s, a, n)| {
        (lp + policy.prob(s, a).ln(), lt + mdp.transition(s, a, n).ln())
    }))
}

fn valid(mdp: &TabularMdp, tau: &Trajectory) -> bool {
    tau.check(mdp).is_ok()
}

pub fn build_mtau(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    values: &ValueEstimate,
    cfg: &MtauConfig,
) -> Result<EcsInstance, MappingError> {
    let horizon = cfg.checked_horizon()?;
    policy.check_compatible(mdp)?;
    values.check_compatible(mdp)?;
    if cfg.starts.is_empty() {
        return Err(MappingError::NoStartStates);
    }
    for &s in &cfg.starts {
        mdp.check_state(s)?;
    }
    let final_values = Arc::new(normalize(values.as_slice(), cfg.normalization)?);
    let mdp = Arc::new(mdp.clone());
    let policy = Arc::new(policy.clone());

    let roots: Vec<Concept> = cfg
        .starts
        .iter()
        .map(|&s| Concept::Trajectory(Trajectory::empty(s)))
        .collect();
    let everywhere: Vec<Concept> = mdp
        .states()
        .map(|s| Concept::Trajectory(Trajectory::empty(s)))
        .collect();

    let extend = {
        let mdp = mdp.clone();
        move |c: &Concept| match c {
            Concept::Trajectory(t) if valid(&mdp, t) => mdp
                .actions()
                .flat_map(|a| mdp.states().map(move |n| (a, n)))
                .map(|(a, n)| Concept::Trajectory(t.extended(a, n)))
                .collect(),
            _ => Vec::new(),
        }
    };
    let acceptability = {
        let (mdp, policy) = (mdp.clone(), policy.clone());
        move |c: &Concept| match c {
            Concept::Trajectory(t) if valid(&mdp, t) => probability(&mdp, &policy, t),
            _ => 0.0,
        }
    };
    let evaluation = {
        let mdp = mdp.clone();
        move |c: &Concept| match c {
            Concept::Trajectory(t) if valid(&mdp, t) => final_values[t.last_state().0],
            _ => 0.0,
        }
    };
    let support = {
        let (mdp, policy) = (mdp.clone(), policy.clone());
        move |c: &Concept| match c {
            Concept::Trajectory(t) if t.len() < horizon && valid(&mdp, t) => {
                let s = t.last_state();
                let mut out = Vec::new();
                for a in mdp.actions() {
                    for n in mdp.states() {
                        if step_probability(&mdp, &policy, s, a, n) > 0.0 {
                            out.push(Concept::Trajectory(t.extended(a, n)));
                        }
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    };
    let sample = {
        let mdp = mdp.clone();
        move |c: &Concept, rng: &mut dyn RngCore| match c {
            Concept::Trajectory(t) if valid(&mdp, t) => {
                let s = t.last_state();
                let a = ActionId(sample_index(policy.row(s), rng));
                let n = StateId(sample_index(mdp.transition_row(s, a), rng));
                Some(Concept::Trajectory(t.extended(a, n)))
            }
            _ => None,
        }
    };

    Ok(EcsInstance {
        domain: Domain::Tree {
            roots: roots.clone(),
            extend: Arc::new(extend),
            horizon,
        },
        acceptability: Arc::new(acceptability),
        evaluation: Arc::new(evaluation),
        support: Arc::new(support),
        sample: Some(Arc::new(sample)),
        alpha: cfg.alpha,
        beta: cfg.beta,
        // Evaluation depends only on the final state, so one trajectory per
        // state covers every value the infinite sub-universe can take.
        sub_universe: SubUniverse::Representatives(everywhere),
        blank_canvas: Some(roots),
        acceptability_antitone: true,
        max_concepts: DEFAULT_MAX_CONCEPTS,
    })
}

/// `NAndQ` when the set of trajectories (up to the horizon) with probability
/// above `alpha` moves, `QOnly` for any other policy change.
pub fn mtau_transformation_kind(
    mdp: &TabularMdp,
    before: &StochasticPolicy,
    after: &StochasticPolicy,
    values: &ValueEstimate,
    cfg: &MtauConfig,
) -> Result<TransformationKind, MappingError> {
    check_policies(mdp, before, after)?;
    if before == after {
        return Ok(TransformationKind::None);
    }
    let c_before = conceptual_space(&build_mtau(mdp, before, values, cfg)?)?;
    let c_after = conceptual_space(&build_mtau(mdp, after, values, cfg)?)?;
    Ok(transformation_kind(true, &c_before, &c_after))
}

/// Uninspiration from the configured start states, searching up to the horizon.
pub fn mtau_uninspiration(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    values: &ValueEstimate,
    cfg: &MtauConfig,
) -> Result<UninspirationFlags, MappingError> {
    let ecs = build_mtau(mdp, policy, values, cfg)?;
    let horizon = cfg.checked_horizon()?;
    Ok(diagnose(&ecs, &[Concept::Empty], ReachBound::Steps(horizon))?.uninspiration)
}
