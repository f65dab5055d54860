//! Finite discrete-time MDPs, policies, value estimates and trajectories.
//!
//! States and actions carry string labels externally and dense indices
//! internally. Transition probabilities are stored `[action][state][next]`,
//! expected rewards `[state][action][next]`, both flattened.

use std::collections::HashMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows of a stochastic tensor must sum to one within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Rows whose sum is off by less than this are left untouched on load;
/// rows between this and [`ROW_SUM_TOLERANCE`] are rescaled. Keeps loading idempotent.
const RENORMALIZE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("action index {0} out of range")]
    ActionOutOfRange(usize),
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("{}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// One broken invariant, located by a key path into the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.location.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.location, self.message)
        }
    }
}

/// A finite MDP with every action available in every state.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    states: Vec<String>,
    actions: Vec<String>,
    state_index: HashMap<String, usize>,
    action_index: HashMap<String, usize>,
    transition: Vec<f64>,
    reward_mean: Vec<f64>,
    reward_noise: Option<Vec<f64>>,
}

type Tensor3 = Vec<Vec<Vec<f64>>>;

fn flatten(what: &str, t: Tensor3, d0: usize, d1: usize, d2: usize) -> Result<Vec<f64>, MdpError> {
    let shape_err = |expected, found| MdpError::Shape {
        what: what.to_string(),
        expected,
        found,
    };
    if t.len() != d0 {
        return Err(shape_err(d0, t.len()));
    }
    let mut out = Vec::with_capacity(d0 * d1 * d2);
    for plane in t {
        if plane.len() != d1 {
            return Err(shape_err(d1, plane.len()));
        }
        for row in plane {
            if row.len() != d2 {
                return Err(shape_err(d2, row.len()));
            }
            out.extend(row);
        }
    }
    Ok(out)
}

impl TabularMdp {
    /// Builds an MDP, validating it and rescaling rows that are within tolerance.
    ///
    /// `transition` is indexed `[action][state][next]`, `reward_mean` and
    /// `reward_noise` `[state][action][next]`.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        transition: Tensor3,
        reward_mean: Tensor3,
        reward_noise: Option<Tensor3>,
    ) -> Result<Self, MdpError> {
        let mut mdp = Self::new_unchecked(states, actions, transition, reward_mean, reward_noise)?;
        let violations = validate_mdp(&mdp);
        if !violations.is_empty() {
            return Err(MdpError::Invalid(violations));
        }
        let n = mdp.num_states();
        for row in mdp.transition.chunks_mut(n) {
            renormalize_row(row);
        }
        Ok(mdp)
    }

    /// Builds an MDP checking only tensor shapes. Use [`validate_mdp`] to list
    /// numeric violations.
    pub fn new_unchecked(
        states: Vec<String>,
        actions: Vec<String>,
        transition: Tensor3,
        reward_mean: Tensor3,
        reward_noise: Option<Tensor3>,
    ) -> Result<Self, MdpError> {
        let (ns, na) = (states.len(), actions.len());
        let transition = flatten("transition", transition, na, ns, ns)?;
        let reward_mean = flatten("reward_mean", reward_mean, ns, na, ns)?;
        let reward_noise = reward_noise
            .map(|t| flatten("reward_noise", t, ns, na, ns))
            .transpose()?;
        let state_index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let action_index = actions.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Self {
            states,
            actions,
            state_index,
            action_index,
            transition,
            reward_mean,
            reward_noise,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn action_labels(&self) -> &[String] {
        &self.actions
    }

    pub fn state_label(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn action_label(&self, a: ActionId) -> &str {
        &self.actions[a.0]
    }

    pub fn state_id(&self, label: &str) -> Option<StateId> {
        self.state_index.get(label).copied().map(StateId)
    }

    pub fn action_id(&self, label: &str) -> Option<ActionId> {
        self.action_index.get(label).copied().map(ActionId)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + Clone {
        (0..self.num_states()).map(StateId)
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + Clone {
        (0..self.num_actions()).map(ActionId)
    }

    pub fn check_state(&self, s: StateId) -> Result<(), MdpError> {
        if s.0 < self.num_states() {
            Ok(())
        } else {
            Err(MdpError::StateOutOfRange(s.0))
        }
    }

    pub fn check_action(&self, a: ActionId) -> Result<(), MdpError> {
        if a.0 < self.num_actions() {
            Ok(())
        } else {
            Err(MdpError::ActionOutOfRange(a.0))
        }
    }

    /// `T_a(s, s')`.
    pub fn transition(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.transition_row(s, a)[next.0]
    }

    /// Distribution over next states for `(s, a)`.
    pub fn transition_row(&self, s: StateId, a: ActionId) -> &[f64] {
        let n = self.num_states();
        let off = (a.0 * n + s.0) * n;
        &self.transition[off..off + n]
    }

    /// Expected reward for the transition `(s, a, s')`.
    pub fn reward(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.reward_mean[self.reward_offset(s, a, next)]
    }

    pub fn reward_noise(&self, s: StateId, a: ActionId, next: StateId) -> Option<f64> {
        self.reward_noise.as_ref().map(|n| n[self.reward_offset(s, a, next)])
    }

    pub fn has_reward_noise(&self) -> bool {
        self.reward_noise.is_some()
    }

    fn reward_offset(&self, s: StateId, a: ActionId, next: StateId) -> usize {
        let n = self.num_states();
        (s.0 * self.num_actions() + a.0) * n + next.0
    }

    /// All expected rewards in `[state][action][next]` order.
    pub fn reward_means(&self) -> &[f64] {
        &self.reward_mean
    }
}

fn renormalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > RENORMALIZE_EPS && sum > 0.0 {
        row.iter_mut().for_each(|p| *p /= sum);
    }
}

fn check_probability_row(row: &[f64], location: &str, label: &str, out: &mut Vec<Violation>) {
    let mut ok = true;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            out.push(Violation::new(format!("{location}[{i}]"), "non-finite probability"));
            ok = false;
        } else if p < 0.0 {
            out.push(Violation::new(
                format!("{location}[{i}]"),
                format!("negative probability {p} in row {label}"),
            ));
            ok = false;
        } else if p > 1.0 {
            out.push(Violation::new(
                format!("{location}[{i}]"),
                format!("probability {p} exceeds 1 in row {label}"),
            ));
            ok = false;
        }
    }
    if ok {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            out.push(Violation::new(location, format!("row {label} sums to {sum}")));
        }
    }
}

/// Lists every violated invariant of `mdp`. An empty list means valid.
pub fn validate_mdp(mdp: &TabularMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    if mdp.states.is_empty() {
        out.push(Violation::new("states", "state set is empty"));
    }
    if mdp.actions.is_empty() {
        out.push(Violation::new("actions", "action set is empty"));
    }
    if mdp.state_index.len() != mdp.states.len() {
        out.push(Violation::new("states", "duplicate state label"));
    }
    if mdp.action_index.len() != mdp.actions.len() {
        out.push(Violation::new("actions", "duplicate action label"));
    }
    for a in mdp.actions() {
        for s in mdp.states() {
            let (al, sl) = (mdp.action_label(a), mdp.state_label(s));
            check_probability_row(
                mdp.transition_row(s, a),
                &format!("transitions.{al}.{sl}"),
                &format!("({al},{sl})"),
                &mut out,
            );
        }
    }
    for s in mdp.states() {
        for a in mdp.actions() {
            for next in mdp.states() {
                let loc = || format!("{}.{}[{}]", mdp.state_label(s), mdp.action_label(a), next.0);
                let r = mdp.reward(s, a, next);
                if !r.is_finite() {
                    out.push(Violation::new(format!("rewards.{}", loc()), "non-finite reward"));
                }
                if let Some(sd) = mdp.reward_noise(s, a, next) {
                    if !sd.is_finite() || sd < 0.0 {
                        out.push(Violation::new(
                            format!("reward_noise.{}", loc()),
                            format!("noise standard deviation {sd} must be finite and >= 0"),
                        ));
                    }
                }
            }
        }
    }
    out
}

/// `pi(a | s)` for every state, stored `[state][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    num_actions: usize,
    probs: Vec<f64>,
}

impl StochasticPolicy {
    /// Validates rows, rescaling rows within tolerance of one.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        Self::with_row_names(rows, &|s| (format!("policy[{s}]"), s.to_string()))
    }

    /// As [`StochasticPolicy::new`]; `names(s)` gives the location and the
    /// display name used in violations for row `s`.
    pub(crate) fn with_row_names(
        rows: Vec<Vec<f64>>,
        names: &dyn Fn(usize) -> (String, String),
    ) -> Result<Self, MdpError> {
        let num_actions = rows.first().map_or(0, Vec::len);
        let mut violations = Vec::new();
        let mut probs = Vec::with_capacity(rows.len() * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(MdpError::Shape {
                    what: format!("policy row {s}"),
                    expected: num_actions,
                    found: row.len(),
                });
            }
            let (location, name) = names(s);
            check_probability_row(row, &location, &name, &mut violations);
            probs.extend(row);
        }
        if num_actions == 0 {
            violations.push(Violation::new("policy", "policy has no actions"));
        }
        if !violations.is_empty() {
            return Err(MdpError::Invalid(violations));
        }
        let mut policy = Self { num_actions, probs };
        for row in policy.probs.chunks_mut(num_actions) {
            renormalize_row(row);
        }
        Ok(policy)
    }

    /// Uniform over actions in every state.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            num_actions,
            probs: vec![p; num_states * num_actions],
        }
    }

    /// Picks `actions[s]` with probability one in state `s`.
    pub fn deterministic(actions: &[ActionId], num_actions: usize) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, a) in actions.iter().enumerate() {
            probs[s * num_actions + a.0] = 1.0;
        }
        Self { num_actions, probs }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len().checked_div(self.num_actions).unwrap_or(0)
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, s: StateId, a: ActionId) -> f64 {
        self.probs[s.0 * self.num_actions + a.0]
    }

    pub fn row(&self, s: StateId) -> &[f64] {
        &self.probs[s.0 * self.num_actions..(s.0 + 1) * self.num_actions]
    }

    /// Most probable action per state, lowest index on ties.
    pub fn greedy_actions(&self) -> Vec<ActionId> {
        (0..self.num_states())
            .map(|s| ActionId(argmax_lowest(self.row(StateId(s)))))
            .collect()
    }

    pub fn check_compatible(&self, mdp: &TabularMdp) -> Result<(), MdpError> {
        if self.num_states() != mdp.num_states() {
            return Err(MdpError::Shape {
                what: "policy states".into(),
                expected: mdp.num_states(),
                found: self.num_states(),
            });
        }
        if self.num_actions != mdp.num_actions() {
            return Err(MdpError::Shape {
                what: "policy actions".into(),
                expected: mdp.num_actions(),
                found: self.num_actions,
            });
        }
        Ok(())
    }
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// An estimate `V(s)` per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    values: Vec<f64>,
}

impl ValueEstimate {
    pub fn new(values: Vec<f64>) -> Result<Self, MdpError> {
        let violations: Vec<_> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_finite())
            .map(|(i, _)| Violation::new(format!("values[{i}]"), "non-finite value"))
            .collect();
        if violations.is_empty() {
            Ok(Self { values })
        } else {
            Err(MdpError::Invalid(violations))
        }
    }

    pub fn zeros(num_states: usize) -> Self {
        Self {
            values: vec![0.0; num_states],
        }
    }

    pub fn get(&self, s: StateId) -> f64 {
        self.values[s.0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_compatible(&self, mdp: &TabularMdp) -> Result<(), MdpError> {
        if self.values.len() == mdp.num_states() {
            Ok(())
        } else {
            Err(MdpError::Shape {
                what: "values".into(),
                expected: mdp.num_states(),
                found: self.values.len(),
            })
        }
    }
}

/// `(s, a, s', ..., s_last)`: a start state followed by `(action, next)` steps.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trajectory {
    pub start: StateId,
    pub steps: Vec<(ActionId, StateId)>,
}

impl Trajectory {
    pub fn empty(start: StateId) -> Self {
        Self {
            start,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> StateId {
        self.steps.last().map_or(self.start, |&(_, s)| s)
    }

    /// Extends a copy by one step.
    pub fn extended(&self, a: ActionId, next: StateId) -> Self {
        let mut t = self.clone();
        t.steps.push((a, next));
        t
    }

    /// The `(s, a, s')` triples along the trajectory.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, ActionId, StateId)> + '_ {
        let mut prev = self.start;
        self.steps.iter().map(move |&(a, s)| {
            let t = (prev, a, s);
            prev = s;
            t
        })
    }

    /// The first `len` steps.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            start: self.start,
            steps: self.steps[..len.min(self.steps.len())].to_vec(),
        }
    }

    pub fn check(&self, mdp: &TabularMdp) -> Result<(), MdpError> {
        mdp.check_state(self.start)?;
        for &(a, s) in &self.steps {
            mdp.check_action(a)?;
            mdp.check_state(s)?;
        }
        Ok(())
    }
}

/// One sampled interaction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub action: ActionId,
    pub next: StateId,
    pub reward: f64,
}

/// Samples `s' ~ T_a(s, .)`.
pub fn sample_next_state<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    s: StateId,
    a: ActionId,
    rng: &mut R,
) -> Result<StateId, MdpError> {
    mdp.check_state(s)?;
    mdp.check_action(a)?;
    Ok(StateId(sample_index(mdp.transition_row(s, a), rng)))
}

/// Reward for `(s, a, s')`: the mean plus Gaussian noise when noise is configured.
pub fn sample_reward<R: Rng + ?Sized>(mdp: &TabularMdp, s: StateId, a: ActionId, next: StateId, rng: &mut R) -> f64 {
    let mean = mdp.reward(s, a, next);
    match mdp.reward_noise(s, a, next) {
        Some(sd) if sd > 0.0 => Normal::new(mean, sd)
            .expect("noise validated non-negative and finite")
            .sample(rng),
        _ => mean,
    }
}

/// Draws `a ~ pi(s)`, `s' ~ T_a(s, .)` and the reward.
pub fn sample_step<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    s: StateId,
    rng: &mut R,
) -> Result<Step, MdpError> {
    policy.check_compatible(mdp)?;
    mdp.check_state(s)?;
    let action = ActionId(sample_index(policy.row(s), rng));
    let next = StateId(sample_index(mdp.transition_row(s, action), rng));
    let reward = sample_reward(mdp, s, action, next, rng);
    Ok(Step { action, next, reward })
}

/// Exactly `horizon` sampled steps from `start`.
pub fn rollout<R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start: StateId,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory, MdpError> {
    policy.check_compatible(mdp)?;
    mdp.check_state(start)?;
    let mut traj = Trajectory::empty(start);
    let mut s = start;
    for _ in 0..horizon {
        let step = sample_step(mdp, policy, s, rng)?;
        traj.steps.push((step.action, step.next));
        s = step.next;
    }
    Ok(traj)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(weights)
        .expect("validated rows have positive mass")
        .sample(rng)
}
