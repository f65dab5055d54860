//! States as concepts.
//!
//! Acceptability is membership in the state space, so the conceptual space is
//! the whole state space for any `alpha < 1` and empty at `alpha = 1`. Nothing
//! reachable lies outside it, and a policy change never alters it.

use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{check_policies, MappingError};
use crate::csf::{
    transformation_kind, Concept, ConceptSet, Domain, EcsInstance, SubUniverse, TransformationKind,
    DEFAULT_MAX_CONCEPTS,
};
use crate::mdp::{sample_index, ActionId, StateId, StochasticPolicy, TabularMdp, ValueEstimate};
use crate::normalize::{normalize, Normalization};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub normalization: Normalization,
}

/// Next states with positive probability under `policy`.
pub fn state_successors(mdp: &TabularMdp, policy: &StochasticPolicy, s: StateId) -> Vec<StateId> {
    let mut out: Vec<StateId> = mdp
        .states()
        .filter(|&next| {
            mdp.actions()
                .any(|a| policy.prob(s, a) * mdp.transition(s, a, next) > 0.0)
        })
        .collect();
    out.dedup();
    out
}

/// Start concepts for a set of start states.
pub fn initial_concepts(starts: &[StateId]) -> Vec<Concept> {
    starts.iter().map(|&s| Concept::State(s)).collect()
}

pub fn build_ms(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    values: &ValueEstimate,
    cfg: &MsConfig,
) -> Result<EcsInstance, MappingError> {
    policy.check_compatible(mdp)?;
    values.check_compatible(mdp)?;
    let n = mdp.num_states();
    let normalized = Arc::new(normalize(values.as_slice(), cfg.normalization)?);
    let mdp = Arc::new(mdp.clone());
    let policy = Arc::new(policy.clone());

    let membership = move |c: &Concept| match c {
        Concept::State(s) if s.0 < n => 1.0,
        _ => 0.0,
    };
    let evaluation = move |c: &Concept| match c {
        Concept::State(s) if s.0 < n => normalized[s.0],
        _ => 0.0,
    };
    let support = {
        let (mdp, policy) = (mdp.clone(), policy.clone());
        move |c: &Concept| match c {
            Concept::State(s) if s.0 < n => state_successors(&mdp, &policy, *s)
                .into_iter()
                .map(Concept::State)
                .collect(),
            _ => Vec::new(),
        }
    };
    let sample = move |c: &Concept, rng: &mut dyn RngCore| match c {
        Concept::State(s) if s.0 < n => {
            let a = ActionId(sample_index(policy.row(*s), rng));
            let next = StateId(sample_index(mdp.transition_row(*s, a), rng));
            Some(Concept::State(next))
        }
        _ => None,
    };

    Ok(EcsInstance {
        domain: Domain::Finite((0..n).map(|i| Concept::State(StateId(i))).collect()),
        acceptability: Arc::new(membership),
        evaluation: Arc::new(evaluation),
        support: Arc::new(support),
        sample: Some(Arc::new(sample)),
        alpha: cfg.alpha,
        beta: cfg.beta,
        sub_universe: SubUniverse::NotEnumerable,
        blank_canvas: None,
        acceptability_antitone: false,
        max_concepts: DEFAULT_MAX_CONCEPTS,
    })
}

/// Any policy change is a traversal change; the conceptual space cannot move.
pub fn ms_transformation_kind(
    mdp: &TabularMdp,
    before: &StochasticPolicy,
    after: &StochasticPolicy,
) -> Result<TransformationKind, MappingError> {
    check_policies(mdp, before, after)?;
    let space: ConceptSet = mdp.states().map(Concept::State).collect();
    Ok(transformation_kind(before != after, &space, &space))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csf::{aberration_set, classify_uninspiration, conceptual_space, ReachBound};
    use crate::fixtures::{chain2, chain2_reference_policy, chain2_values};
    use crate::learner::{value_iteration, LearnerConfig};

    fn cfg(alpha: f64, beta: f64) -> MsConfig {
        MsConfig {
            alpha,
            beta,
            normalization: Normalization::MinMax,
        }
    }

    fn s(i: usize) -> Concept {
        Concept::State(StateId(i))
    }

    #[test]
    fn conceptual_space_is_state_space_below_one() {
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(0.5, 0.5)).unwrap();
        assert_eq!(conceptual_space(&ecs).unwrap(), [s(0), s(1)].into_iter().collect());
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(1.0, 0.5)).unwrap();
        assert!(conceptual_space(&ecs).unwrap().is_empty());
    }

    #[test]
    fn values_are_min_max_normalized() {
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(0.5, 0.5)).unwrap();
        assert_eq!((ecs.evaluation)(&s(0)), 0.0);
        assert_eq!((ecs.evaluation)(&s(1)), 1.0);
    }

    #[test]
    fn reachable_from_start_and_absorbing() {
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(0.5, 0.5)).unwrap();
        let r = crate::csf::reachable_set(&ecs, &[s(1)], ReachBound::Fixpoint).unwrap();
        assert_eq!(r.concepts, [s(1)].into_iter().collect());
        let r = crate::csf::reachable_set(&ecs, &[s(0)], ReachBound::Fixpoint).unwrap();
        assert_eq!(r.concepts, [s(0), s(1)].into_iter().collect());
        assert!(aberration_set(&ecs, &[s(0)], ReachBound::Fixpoint)
            .unwrap()
            .concepts
            .is_empty());
    }

    #[test]
    fn reaching_valued_state_avoids_generative_uninspiration() {
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(0.5, 0.5)).unwrap();
        let flags = classify_uninspiration(&ecs, &[s(0)], ReachBound::Fixpoint).unwrap();
        assert!(!flags.generative);
        assert!(!flags.conceptual);
        assert_eq!(flags.hopeless, None);
    }

    #[test]
    fn blank_canvas_is_rejected() {
        let ecs = build_ms(&chain2(), &chain2_reference_policy(), &chain2_values(), &cfg(0.5, 0.5)).unwrap();
        assert!(crate::csf::reachable_set(&ecs, &[Concept::Empty], ReachBound::Fixpoint).is_err());
    }

    #[test]
    fn mismatched_values_are_rejected() {
        let values = ValueEstimate::new(vec![1.0]).unwrap();
        assert!(build_ms(&chain2(), &chain2_reference_policy(), &values, &cfg(0.5, 0.5)).is_err());
    }

    #[test]
    fn policy_changes_are_q_only() {
        let mdp = chain2();
        let pi = chain2_reference_policy();
        assert_eq!(
            ms_transformation_kind(&mdp, &pi, &pi).unwrap(),
            TransformationKind::None
        );
        let vi = value_iteration(&mdp, &LearnerConfig::default()).unwrap();
        assert_eq!(
            ms_transformation_kind(&mdp, &pi, &vi.policy).unwrap(),
            TransformationKind::QOnly
        );
        let nudged = StochasticPolicy::new(vec![vec![0.251, 0.749], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            ms_transformation_kind(&mdp, &pi, &nudged).unwrap(),
            TransformationKind::QOnly
        );
        let wrong = StochasticPolicy::new(vec![vec![1.0]]).unwrap();
        assert!(ms_transformation_kind(&mdp, &pi, &wrong).is_err());
    }
}
