//! Exploratory creative systems over finite concept domains.
//!
//! An [`EcsInstance`] bundles a concept domain, an acceptability function, an
//! evaluation function and a traversal strategy, together with the acceptance
//! threshold `alpha` and value threshold `beta`. Everything here is agnostic
//! of how concepts are derived from an MDP; see [`crate::mapping`] for that.

use std::collections::btree_set;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{ActionId, StateId, TabularMdp, Trajectory};

/// Default cap on the number of concepts any single enumeration may touch.
pub const DEFAULT_MAX_CONCEPTS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsfError {
    #[error("threshold {name} = {value} is outside [0, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error("score {value} for concept {concept} is outside [0, 1]")]
    ScoreOutOfRange { concept: String, value: f64 },
    #[error("horizon required: concept domain is unbounded")]
    HorizonRequired,
    #[error("fixpoint undefined on growing concepts; supply horizon")]
    FixpointUndefined,
    #[error("initial tuple of concepts is empty")]
    EmptyInitial,
    #[error("the empty concept has no analogue in this mapping; supply explicit start concepts")]
    BlankCanvasUnsupported,
    #[error("enumeration exceeds {limit} concepts")]
    TooLarge { limit: usize },
}

/// A concept: a state, a transition, a trajectory, or the empty concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Empty,
    State(StateId),
    Transition(StateId, ActionId, StateId),
    Trajectory(Trajectory),
}

impl Concept {
    /// Human-readable form using the MDP's labels: `s0`, `(s0,a1,s1)`,
    /// `(s0)` for the empty trajectory at `s0`, and `⊤` for the empty concept.
    pub fn render(&self, mdp: &TabularMdp) -> String {
        match self {
            Concept::Empty => "⊤".to_string(),
            Concept::State(s) => mdp.state_label(*s).to_string(),
            Concept::Transition(s, a, n) => format!(
                "({},{},{})",
                mdp.state_label(*s),
                mdp.action_label(*a),
                mdp.state_label(*n)
            ),
            Concept::Trajectory(t) => {
                let mut out = format!("({}", mdp.state_label(t.start));
                for &(a, s) in &t.steps {
                    out.push(',');
                    out.push_str(mdp.action_label(a));
                    out.push(',');
                    out.push_str(mdp.state_label(s));
                }
                out.push(')');
                out
            }
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Empty => f.write_str("⊤"),
            Concept::State(s) => write!(f, "s#{}", s.0),
            Concept::Transition(s, a, n) => write!(f, "(s#{},a#{},s#{})", s.0, a.0, n.0),
            Concept::Trajectory(t) => {
                write!(f, "(s#{}", t.start.0)?;
                for &(a, s) in &t.steps {
                    write!(f, ",a#{},s#{}", a.0, s.0)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A finite set of concepts, iterated in concept order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConceptSet(BTreeSet<Concept>);

impl ConceptSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Concept) -> bool {
        self.0.insert(c)
    }

    pub fn contains(&self, c: &Concept) -> bool {
        self.0.contains(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> btree_set::Iter<'_, Concept> {
        self.0.iter()
    }

    pub fn union(&self, other: &ConceptSet) -> ConceptSet {
        ConceptSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &ConceptSet) -> ConceptSet {
        ConceptSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &ConceptSet) -> ConceptSet {
        ConceptSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &ConceptSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn render(&self, mdp: &TabularMdp) -> Vec<String> {
        self.iter().map(|c| c.render(mdp)).collect()
    }
}

impl FromIterator<Concept> for ConceptSet {
    fn from_iter<I: IntoIterator<Item = Concept>>(iter: I) -> Self {
        ConceptSet(iter.into_iter().collect())
    }
}

impl IntoIterator for ConceptSet {
    type Item = Concept;
    type IntoIter = btree_set::IntoIter<Concept>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a ConceptSet {
    type Item = &'a Concept;
    type IntoIter = btree_set::Iter<'a, Concept>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub type ScoreFn = Arc<dyn Fn(&Concept) -> f64 + Send + Sync>;
pub type SuccessorFn = Arc<dyn Fn(&Concept) -> Vec<Concept> + Send + Sync>;
pub type SampleFn = Arc<dyn Fn(&Concept, &mut dyn RngCore) -> Option<Concept> + Send + Sync>;

/// The enumerable part of the sub-universe.
#[derive(Clone)]
pub enum Domain {
    /// An explicit finite list.
    Finite(Vec<Concept>),
    /// Every concept reachable from `roots` through `extend` in at most
    /// `horizon` extensions. Concepts grow along `extend`.
    Tree {
        roots: Vec<Concept>,
        extend: SuccessorFn,
        horizon: usize,
    },
    /// Concepts grow without bound and no horizon was given.
    Unbounded,
}

/// What a hopelessness check ranges over.
#[derive(Clone, Debug)]
pub enum SubUniverse {
    /// The enumerated domain is the whole sub-universe.
    Domain,
    /// The sub-universe is infinite, but its evaluations are exactly those of
    /// these representatives.
    Representatives(Vec<Concept>),
    /// The sub-universe cannot be enumerated; hopelessness is indeterminate.
    NotEnumerable,
}

/// How far to apply the traversal strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachBound {
    Steps(usize),
    Fixpoint,
}

/// An exploratory creative system with its thresholds.
#[derive(Clone)]
pub struct EcsInstance {
    pub domain: Domain,
    pub acceptability: ScoreFn,
    pub evaluation: ScoreFn,
    /// Every successor the traversal strategy can produce with positive probability.
    pub support: SuccessorFn,
    /// One stochastic traversal step; `None` drops the concept from the output tuple.
    pub sample: Option<SampleFn>,
    pub alpha: f64,
    pub beta: f64,
    pub sub_universe: SubUniverse,
    /// What the empty concept stands for as a traversal start, if anything.
    pub blank_canvas: Option<Vec<Concept>>,
    /// Acceptability never increases along `Domain::Tree` extensions, so
    /// subtrees at or below `alpha` can be skipped.
    pub acceptability_antitone: bool,
    pub max_concepts: usize,
}

impl fmt::Debug for EcsInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EcsInstance")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("sub_universe", &self.sub_universe)
            .finish_non_exhaustive()
    }
}

impl EcsInstance {
    /// A finite instance whose domain is the whole sub-universe.
    pub fn finite(concepts: Vec<Concept>, acceptability: ScoreFn, evaluation: ScoreFn, support: SuccessorFn) -> Self {
        Self {
            domain: Domain::Finite(concepts),
            acceptability,
            evaluation,
            support,
            sample: None,
            alpha: 0.0,
            beta: 0.0,
            sub_universe: SubUniverse::Domain,
            blank_canvas: None,
            acceptability_antitone: false,
            max_concepts: DEFAULT_MAX_CONCEPTS,
        }
    }

    pub fn with_thresholds(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    fn grows(&self) -> bool {
        !matches!(self.domain, Domain::Finite(_))
    }

    /// Applies the traversal strategy once to every concept of `tuple`.
    pub fn traverse<R: Rng>(&self, tuple: &[Concept], rng: &mut R) -> Vec<Concept> {
        let rng: &mut dyn RngCore = rng;
        tuple
            .iter()
            .filter_map(|c| match &self.sample {
                Some(sample) => sample(c, rng),
                None => {
                    let succ = (self.support)(c);
                    if succ.is_empty() {
                        None
                    } else {
                        let i = rng.random_range(0..succ.len());
                        succ.into_iter().nth(i)
                    }
                }
            })
            .collect()
    }

    fn resolve_initial(&self, initial: &[Concept]) -> Result<Vec<Concept>, CsfError> {
        if initial.is_empty() {
            return Err(CsfError::EmptyInitial);
        }
        let mut out = Vec::with_capacity(initial.len());
        for c in initial {
            if *c == Concept::Empty {
                match &self.blank_canvas {
                    Some(expansion) => out.extend(expansion.iter().cloned()),
                    None => return Err(CsfError::BlankCanvasUnsupported),
                }
            } else {
                out.push(c.clone());
            }
        }
        Ok(out)
    }
}

fn check_threshold(name: &'static str, value: f64) -> Result<(), CsfError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CsfError::Threshold { name, value })
    }
}

fn checked_score(f: &dyn Fn(&Concept) -> f64, c: &Concept) -> Result<f64, CsfError> {
    let v = f(c);
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CsfError::ScoreOutOfRange {
            concept: c.to_string(),
            value: v,
        })
    }
}

/// `{c in set | f(c) > alpha}`.
pub fn strong_alpha_cut<F>(f: F, set: &ConceptSet, alpha: f64) -> Result<ConceptSet, CsfError>
where
    F: Fn(&Concept) -> f64,
{
    check_threshold("alpha", alpha)?;
    let mut out = ConceptSet::new();
    for c in set {
        if checked_score(&f, c)? > alpha {
            out.insert(c.clone());
        }
    }
    Ok(out)
}

/// Every concept of the domain, including those with zero acceptability.
pub fn enumerate_domain(ecs: &EcsInstance) -> Result<ConceptSet, CsfError> {
    match &ecs.domain {
        Domain::Finite(cs) => {
            if cs.len() > ecs.max_concepts {
                return Err(CsfError::TooLarge {
                    limit: ecs.max_concepts,
                });
            }
            Ok(cs.iter().cloned().collect())
        }
        Domain::Tree { roots, extend, horizon } => {
            let mut out = ConceptSet::new();
            walk_tree(roots, extend, *horizon, ecs.max_concepts, &mut |c| {
                out.insert(c.clone());
                Ok(true)
            })?;
            Ok(out)
        }
        Domain::Unbounded => Err(CsfError::HorizonRequired),
    }
}

/// Depth-first walk; `visit` returning `false` prunes the subtree below.
fn walk_tree(
    roots: &[Concept],
    extend: &SuccessorFn,
    horizon: usize,
    limit: usize,
    visit: &mut dyn FnMut(&Concept) -> Result<bool, CsfError>,
) -> Result<(), CsfError> {
    let mut seen = 0usize;
    let mut stack: Vec<(Concept, usize)> = roots.iter().rev().map(|c| (c.clone(), 0)).collect();
    while let Some((c, depth)) = stack.pop() {
        seen += 1;
        if seen > limit {
            return Err(CsfError::TooLarge { limit });
        }
        if visit(&c)? && depth < horizon {
            let children = extend(&c);
            stack.extend(children.into_iter().rev().map(|k| (k, depth + 1)));
        }
    }
    Ok(())
}

/// The strong alpha-cut of the domain under the acceptability function.
pub fn conceptual_space(ecs: &EcsInstance) -> Result<ConceptSet, CsfError> {
    check_threshold("alpha", ecs.alpha)?;
    match &ecs.domain {
        Domain::Tree { roots, extend, horizon } if ecs.acceptability_antitone => {
            let mut out = ConceptSet::new();
            walk_tree(roots, extend, *horizon, ecs.max_concepts, &mut |c| {
                let p = checked_score(&*ecs.acceptability, c)?;
                if p > ecs.alpha {
                    out.insert(c.clone());
                    Ok(true)
                } else {
                    Ok(false)
                }
            })?;
            Ok(out)
        }
        _ => strong_alpha_cut(&*ecs.acceptability, &enumerate_domain(ecs)?, ecs.alpha),
    }
}

/// Concepts reachable from an initial tuple, with how the search ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachable {
    pub concepts: ConceptSet,
    /// No new concept appeared in the last application of the traversal.
    pub converged: bool,
    /// The step bound used, or `None` for a fixpoint search.
    pub bound: Option<usize>,
}

/// `E^m(initial)` by exact support propagation, or its fixpoint.
pub fn reachable_set(ecs: &EcsInstance, initial: &[Concept], bound: ReachBound) -> Result<Reachable, CsfError> {
    let start = ecs.resolve_initial(initial)?;
    let max_steps = match bound {
        ReachBound::Steps(m) => Some(m),
        ReachBound::Fixpoint if ecs.grows() => return Err(CsfError::FixpointUndefined),
        ReachBound::Fixpoint => None,
    };

    let mut concepts = ConceptSet::new();
    let mut frontier = VecDeque::new();
    for c in start {
        if concepts.insert(c.clone()) {
            frontier.push_back((c, 0usize));
        }
    }
    let mut converged = true;
    while let Some((c, depth)) = frontier.pop_front() {
        if max_steps.is_some_and(|m| depth >= m) {
            if !(ecs.support)(&c).iter().all(|n| concepts.contains(n)) {
                converged = false;
            }
            continue;
        }
        for next in (ecs.support)(&c) {
            if concepts.insert(next.clone()) {
                if concepts.len() > ecs.max_concepts {
                    return Err(CsfError::TooLarge {
                        limit: ecs.max_concepts,
                    });
                }
                frontier.push_back((next, depth + 1));
            }
        }
    }
    Ok(Reachable {
        concepts,
        converged,
        bound: max_steps,
    })
}

/// Reachable concepts outside the conceptual space.
#[derive(Debug, Clone, PartialEq)]
pub struct Aberration {
    pub concepts: ConceptSet,
    pub bound: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AberrationClass {
    None,
    Perfect,
    Productive,
    Pointless,
}

impl AberrationClass {
    pub fn name(self) -> &'static str {
        match self {
            AberrationClass::None => "none",
            AberrationClass::Perfect => "perfect",
            AberrationClass::Productive => "productive",
            AberrationClass::Pointless => "pointless",
        }
    }
}

impl fmt::Display for AberrationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Uninspiration diagnosis. `hopeless` is `None` when the sub-universe
/// cannot be enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UninspirationFlags {
    pub generative: bool,
    pub conceptual: bool,
    pub hopeless: Option<bool>,
}

impl UninspirationFlags {
    /// Comma-separated names of the raised flags, or `none`.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if self.generative {
            parts.push("generative");
        }
        if self.conceptual {
            parts.push("conceptual");
        }
        match self.hopeless {
            Some(true) => parts.push("hopeless"),
            Some(false) => {}
            None => parts.push("hopeless?"),
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join(",")
        }
    }
}

pub fn aberration_set(ecs: &EcsInstance, initial: &[Concept], bound: ReachBound) -> Result<Aberration, CsfError> {
    let reach = reachable_set(ecs, initial, bound)?;
    let space = conceptual_space(ecs)?;
    Ok(Aberration {
        concepts: reach.concepts.difference(&space),
        bound: reach.bound,
    })
}

/// Perfect if every aberrant concept is valued above `beta`, pointless if
/// none is, productive otherwise.
pub fn classify_aberration(ecs: &EcsInstance, aberrant: &ConceptSet) -> Result<AberrationClass, CsfError> {
    check_threshold("beta", ecs.beta)?;
    if aberrant.is_empty() {
        return Ok(AberrationClass::None);
    }
    let valued = strong_alpha_cut(&*ecs.evaluation, aberrant, ecs.beta)?;
    Ok(if valued.len() == aberrant.len() {
        AberrationClass::Perfect
    } else if valued.is_empty() {
        AberrationClass::Pointless
    } else {
        AberrationClass::Productive
    })
}

/// Everything the framework says about one instance and start tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnosis {
    pub conceptual_space: ConceptSet,
    pub reachable: Reachable,
    pub aberration: Aberration,
    pub aberration_class: AberrationClass,
    pub uninspiration: UninspirationFlags,
}

pub fn diagnose(ecs: &EcsInstance, initial: &[Concept], bound: ReachBound) -> Result<Diagnosis, CsfError> {
    check_threshold("alpha", ecs.alpha)?;
    check_threshold("beta", ecs.beta)?;
    let reachable = reachable_set(ecs, initial, bound)?;
    let space = conceptual_space(ecs)?;
    let aberration = Aberration {
        concepts: reachable.concepts.difference(&space),
        bound: reachable.bound,
    };
    let aberration_class = classify_aberration(ecs, &aberration.concepts)?;

    let no_valued = |set: &ConceptSet| -> Result<bool, CsfError> {
        Ok(strong_alpha_cut(&*ecs.evaluation, set, ecs.beta)?.is_empty())
    };
    let hopeless = match &ecs.sub_universe {
        SubUniverse::Domain => Some(no_valued(&enumerate_domain(ecs)?)?),
        SubUniverse::Representatives(reps) => Some(no_valued(&reps.iter().cloned().collect())?),
        SubUniverse::NotEnumerable => None,
    };
    let uninspiration = UninspirationFlags {
        generative: no_valued(&reachable.concepts)?,
        conceptual: no_valued(&space)?,
        hopeless,
    };
    Ok(Diagnosis {
        conceptual_space: space,
        reachable,
        aberration,
        aberration_class,
        uninspiration,
    })
}

pub fn classify_uninspiration(
    ecs: &EcsInstance,
    initial: &[Concept],
    bound: ReachBound,
) -> Result<UninspirationFlags, CsfError> {
    Ok(diagnose(ecs, initial, bound)?.uninspiration)
}

/// Kind of a change between two traversal strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformationKind {
    None,
    QOnly,
    NAndQ,
}

impl TransformationKind {
    pub fn is_q(self) -> bool {
        !matches!(self, TransformationKind::None)
    }

    pub fn is_n(self) -> bool {
        matches!(self, TransformationKind::NAndQ)
    }
}

/// Classifies a change given whether the traversal strategy changed at all
/// and the conceptual spaces before and after.
pub fn transformation_kind(
    traversal_changed: bool,
    space_before: &ConceptSet,
    space_after: &ConceptSet,
) -> TransformationKind {
    let kind = if !traversal_changed {
        TransformationKind::None
    } else if space_before != space_after {
        TransformationKind::NAndQ
    } else {
        TransformationKind::QOnly
    };
    // Changing the conceptual space here always goes through a policy change.
    debug_assert!(!kind.is_n() || kind.is_q());
    kind
}

/// Whether anything in `new` but not in `old` is valued above `before.beta`
/// under `before`'s evaluation.
pub fn admits_valued(before: &EcsInstance, old: &ConceptSet, new: &ConceptSet) -> Result<bool, CsfError> {
    check_threshold("beta", before.beta)?;
    let admitted = new.difference(old);
    Ok(!strong_alpha_cut(&*before.evaluation, &admitted, before.beta)?.is_empty())
}

/// Whether the change from `before` to `after` admits a concept valued above
/// `before.beta` (under `before`'s evaluation, held fixed) into the reachable
/// set or the conceptual space. Each side starts from its own initial tuple.
pub fn transformation_valued(
    before: &EcsInstance,
    after: &EcsInstance,
    initial_before: &[Concept],
    initial_after: &[Concept],
    bound: ReachBound,
) -> Result<bool, CsfError> {
    let old = reachable_set(before, initial_before, bound)?
        .concepts
        .union(&conceptual_space(before)?);
    let new = reachable_set(after, initial_after, bound)?
        .concepts
        .union(&conceptual_space(after)?);
    admits_valued(before, &old, &new)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(i: usize) -> Concept {
        Concept::State(StateId(i))
    }

    /// Concepts 0..n on a line; each steps to the next, the last is absorbing.
    fn line(n: usize, acc: Vec<f64>, eval: Vec<f64>) -> EcsInstance {
        let concepts = (0..n).map(st).collect();
        let score = |v: Vec<f64>| -> ScoreFn {
            Arc::new(move |c| match c {
                Concept::State(s) => v[s.0],
                _ => 0.0,
            })
        };
        EcsInstance::finite(
            concepts,
            score(acc),
            score(eval),
            Arc::new(move |c| match c {
                Concept::State(s) => vec![st((s.0 + 1).min(n - 1))],
                _ => vec![],
            }),
        )
    }

    #[test]
    fn alpha_one_cut_is_empty() {
        let set: ConceptSet = (0..3).map(st).collect();
        assert!(strong_alpha_cut(|_| 1.0, &set, 1.0).unwrap().is_empty());
    }

    #[test]
    fn cut_is_strict_and_pointwise() {
        let set: ConceptSet = (0..2).map(st).collect();
        let f = |c: &Concept| if *c == st(0) { 0.3 } else { 0.7 };
        let cut = strong_alpha_cut(f, &set, 0.5).unwrap();
        assert_eq!(cut, [st(1)].into_iter().collect());
        assert!(strong_alpha_cut(|_| 0.5, &set, 0.5).unwrap().is_empty());
    }

    #[test]
    fn cut_rejects_out_of_range_scores() {
        let set: ConceptSet = [st(0)].into_iter().collect();
        assert!(matches!(
            strong_alpha_cut(|_| 1.5, &set, 0.5),
            Err(CsfError::ScoreOutOfRange { .. })
        ));
        assert!(matches!(
            strong_alpha_cut(|_| 0.5, &set, -0.1),
            Err(CsfError::Threshold { .. })
        ));
    }

    #[test]
    fn zero_steps_returns_initial_elements() {
        let ecs = line(4, vec![1.0; 4], vec![0.0; 4]);
        let r = reachable_set(&ecs, &[st(1), st(1)], ReachBound::Steps(0)).unwrap();
        assert_eq!(r.concepts, [st(1)].into_iter().collect());
        assert!(!r.converged);
        assert_eq!(r.bound, Some(0));
    }

    #[test]
    fn reachability_is_layered_and_converges() {
        let ecs = line(4, vec![1.0; 4], vec![0.0; 4]);
        let r2 = reachable_set(&ecs, &[st(0)], ReachBound::Steps(2)).unwrap();
        assert_eq!(r2.concepts.len(), 3);
        let fix = reachable_set(&ecs, &[st(0)], ReachBound::Fixpoint).unwrap();
        assert_eq!(fix.concepts.len(), 4);
        assert!(fix.converged);
        let r9 = reachable_set(&ecs, &[st(0)], ReachBound::Steps(9)).unwrap();
        assert_eq!(r9.concepts, fix.concepts);
        assert!(r9.converged);
    }

    #[test]
    fn empty_initial_and_blank_canvas() {
        let ecs = line(2, vec![1.0; 2], vec![0.0; 2]);
        assert_eq!(
            reachable_set(&ecs, &[], ReachBound::Fixpoint),
            Err(CsfError::EmptyInitial)
        );
        assert_eq!(
            reachable_set(&ecs, &[Concept::Empty], ReachBound::Fixpoint),
            Err(CsfError::BlankCanvasUnsupported)
        );
        let mut with_canvas = ecs.clone();
        with_canvas.blank_canvas = Some(vec![st(1)]);
        let r = reachable_set(&with_canvas, &[Concept::Empty], ReachBound::Fixpoint).unwrap();
        assert_eq!(r.concepts, [st(1)].into_iter().collect());
    }

    #[test]
    fn aberration_classes() {
        // Concepts 0..3 reachable from 0; only 0 is typical.
        let ecs = line(3, vec![0.9, 0.1, 0.1], vec![0.0, 0.9, 0.8]).with_thresholds(0.5, 0.5);
        let b = aberration_set(&ecs, &[st(0)], ReachBound::Fixpoint).unwrap();
        assert_eq!(b.concepts, [st(1), st(2)].into_iter().collect());
        assert_eq!(
            classify_aberration(&ecs, &b.concepts).unwrap(),
            AberrationClass::Perfect
        );

        let ecs = line(3, vec![0.9, 0.1, 0.1], vec![0.0, 0.9, 0.1]).with_thresholds(0.5, 0.5);
        assert_eq!(
            classify_aberration(&ecs, &b.concepts).unwrap(),
            AberrationClass::Productive
        );
        let ecs = line(3, vec![0.9, 0.1, 0.1], vec![0.0, 0.2, 0.1]).with_thresholds(0.5, 0.5);
        assert_eq!(
            classify_aberration(&ecs, &b.concepts).unwrap(),
            AberrationClass::Pointless
        );
        assert_eq!(
            classify_aberration(&ecs, &ConceptSet::new()).unwrap(),
            AberrationClass::None
        );
    }

    #[test]
    fn alpha_zero_with_positive_acceptability_has_no_aberration() {
        let ecs = line(3, vec![0.2, 0.1, 0.3], vec![0.0; 3]).with_thresholds(0.0, 0.5);
        assert!(aberration_set(&ecs, &[st(0)], ReachBound::Fixpoint)
            .unwrap()
            .concepts
            .is_empty());
    }

    #[test]
    fn uninspiration_flags() {
        let ecs = line(3, vec![1.0; 3], vec![0.0, 0.0, 1.0]).with_thresholds(0.5, 0.5);
        let from_start = classify_uninspiration(&ecs, &[st(0)], ReachBound::Fixpoint).unwrap();
        assert_eq!(
            from_start,
            UninspirationFlags {
                generative: false,
                conceptual: false,
                hopeless: Some(false)
            }
        );
        let steps = classify_uninspiration(&ecs, &[st(0)], ReachBound::Steps(1)).unwrap();
        assert!(steps.generative);
        let mut blind = ecs.clone();
        blind.sub_universe = SubUniverse::NotEnumerable;
        assert_eq!(
            classify_uninspiration(&blind, &[st(0)], ReachBound::Fixpoint)
                .unwrap()
                .hopeless,
            None
        );
    }

    #[test]
    fn tree_domain_needs_steps() {
        let mut ecs = line(2, vec![1.0; 2], vec![0.0; 2]);
        ecs.domain = Domain::Unbounded;
        assert_eq!(conceptual_space(&ecs), Err(CsfError::HorizonRequired));
        assert_eq!(
            reachable_set(&ecs, &[st(0)], ReachBound::Fixpoint),
            Err(CsfError::FixpointUndefined)
        );
    }

    #[test]
    fn transformation_kinds() {
        let a: ConceptSet = [st(0)].into_iter().collect();
        let b: ConceptSet = [st(1)].into_iter().collect();
        assert_eq!(transformation_kind(false, &a, &a), TransformationKind::None);
        assert_eq!(transformation_kind(true, &a, &a), TransformationKind::QOnly);
        assert_eq!(transformation_kind(true, &a, &b), TransformationKind::NAndQ);
    }

    #[test]
    fn sampled_traversal_stays_in_support() {
        use rand::SeedableRng;
        let ecs = line(3, vec![1.0; 3], vec![0.0; 3]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let out = ecs.traverse(&[st(0), st(2)], &mut rng);
        assert_eq!(out, vec![st(1), st(2)]);
    }
}
