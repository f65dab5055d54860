//! Transitions `(s, a, s')` as concepts.
//!
//! Acceptability is the occurrence probability `p(s, a, s') = T_a(s, s') * pi(a | s)`,
//! evaluation the normalized expected reward, and traversal moves a
//! transition to the next one drawn from the policy at `s'`.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{check_policies, MappingError};
use crate::csf::{
    conceptual_space, transformation_kind, transformation_valued, Concept, Domain, EcsInstance, ReachBound,
    SubUniverse, TransformationKind, DEFAULT_MAX_CONCEPTS,
};
use crate::mdp::{sample_index, ActionId, StateId, StochasticPolicy, TabularMdp};
use crate::normalize::{normalize, Normalization};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsasConfig {
    pub alpha: f64,
    pub beta: f64,
    pub normalization: Normalization,
}

/// `T_a(s, s') * pi(a | s)`.
pub fn transition_acceptability(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    s: StateId,
    a: ActionId,
    next: StateId,
) -> Result<f64, MappingError> {
    policy.check_compatible(mdp)?;
    mdp.check_state(s)?;
    mdp.check_action(a)?;
    mdp.check_state(next)?;
    Ok(occurrence(mdp, policy, s, a, next))
}

fn occurrence(mdp: &TabularMdp, policy: &StochasticPolicy, s: StateId, a: ActionId, next: StateId) -> f64 {
    mdp.transition(s, a, next) * policy.prob(s, a)
}

/// Transitions out of `s` with positive occurrence probability.
pub fn supported_transitions(mdp: &TabularMdp, policy: &StochasticPolicy, s: StateId) -> Vec<Concept> {
    let mut out = Vec::new();
    for a in mdp.actions() {
        for next in mdp.states() {
            if occurrence(mdp, policy, s, a, next) > 0.0 {
                out.push(Concept::Transition(s, a, next));
            }
        }
    }
    out
}

/// Start concepts for a set of start states: every supported first transition.
pub fn initial_concepts(mdp: &TabularMdp, policy: &StochasticPolicy, starts: &[StateId]) -> Vec<Concept> {
    starts
        .iter()
        .flat_map(|&s| supported_transitions(mdp, policy, s))
        .collect()
}

fn in_range(mdp: &TabularMdp, c: &Concept) -> Option<(StateId, ActionId, StateId)> {
    match *c {
        Concept::Transition(s, a, n) if s.0 < mdp.num_states() && a.0 < mdp.num_actions() && n.0 < mdp.num_states() => {
            Some((s, a, n))
        }
        _ => None,
    }
}

pub fn build_msas(mdp: &TabularMdp, policy: &StochasticPolicy, cfg: &MsasConfig) -> Result<EcsInstance, MappingError> {
    policy.check_compatible(mdp)?;
    // reward_means() is laid out [s][a][s'], the same order as the domain below.
    let rewards = Arc::new(normalize(mdp.reward_means(), cfg.normalization)?);
    let mdp = Arc::new(mdp.clone());
    let policy = Arc::new(policy.clone());

    let mut domain = Vec::with_capacity(mdp.num_states() * mdp.num_actions() * mdp.num_states());
    for s in mdp.states() {
        for a in mdp.actions() {
            for n in mdp.states() {
                domain.push(Concept::Transition(s, a, n));
            }
        }
    }

    let acceptability = {
        let (mdp, policy) = (mdp.clone(), policy.clone());
        move |c: &Concept| in_range(&mdp, c).map_or(0.0, |(s, a, n)| occurrence(&mdp, &policy, s, a, n))
    };
    let evaluation = {
        let mdp = mdp.clone();
        move |c: &Concept| {
            in_range(&mdp, c).map_or(0.0, |(s, a, n)| {
                rewards[(s.0 * mdp.num_actions() + a.0) * mdp.num_states() + n.0]
            })
        }
    };
    let support = {
        let (mdp, policy) = (mdp.clone(), policy.clone());
        move |c: &Concept| in_range(&mdp, c).map_or_else(Vec::new, |(_, _, n)| supported_transitions(&mdp, &policy, n))
    };
    let sample = {
        let mdp = mdp.clone();
        move |c: &Concept, rng: &mut dyn RngCore| {
            let (_, _, s) = in_range(&mdp, c)?;
            let a = ActionId(sample_index(policy.row(s), rng));
            let next = StateId(sample_index(mdp.transition_row(s, a), rng));
            Some(Concept::Transition(s, a, next))
        }
    };

    Ok(EcsInstance {
        domain: Domain::Finite(domain),
        acceptability: Arc::new(acceptability),
        evaluation: Arc::new(evaluation),
        support: Arc::new(support),
        sample: Some(Arc::new(sample)),
        alpha: cfg.alpha,
        beta: cfg.beta,
        sub_universe: SubUniverse::Domain,
        blank_canvas: None,
        acceptability_antitone: false,
        max_concepts: DEFAULT_MAX_CONCEPTS,
    })
}

/// `NAndQ` when the alpha-cut of transition probabilities moves, `QOnly`
/// for any other policy change.
pub fn msas_transformation_kind(
    mdp: &TabularMdp,
    before: &StochasticPolicy,
    after: &StochasticPolicy,
    cfg: &MsasConfig,
) -> Result<TransformationKind, MappingError> {
    check_policies(mdp, before, after)?;
    if before == after {
        return Ok(TransformationKind::None);
    }
    let c_before = conceptual_space(&build_msas(mdp, before, cfg)?)?;
    let c_after = conceptual_space(&build_msas(mdp, after, cfg)?)?;
    Ok(transformation_kind(true, &c_before, &c_after))
}

/// Whether switching from `before` to `after` admits a transition with
/// normalized reward above `beta` into the reachable set or the conceptual space.
pub fn msas_transformation_valued(
    mdp: &TabularMdp,
    before: &StochasticPolicy,
    after: &StochasticPolicy,
    cfg: &MsasConfig,
    initial: &[Concept],
) -> Result<bool, MappingError> {
    check_policies(mdp, before, after)?;
    if before == after {
        return Err(MappingError::NoTransformation);
    }
    let old = build_msas(mdp, before, cfg)?;
    let new = build_msas(mdp, after, cfg)?;
    Ok(transformation_valued(
        &old,
        &new,
        initial,
        initial,
        ReachBound::Fixpoint,
    )?)
}
