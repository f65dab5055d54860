//! A recorded agent run: policy snapshots plus the experience sampled under them.

use crate::mdp::{ActionId, MdpError, StateId, StochasticPolicy, TabularMdp, ValueEstimate, Violation};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Learner progress when the snapshot was taken (episodes or sweeps).
    pub step: u64,
    pub policy: StochasticPolicy,
    pub values: Option<ValueEstimate>,
}

/// One sampled `(s, a, s', r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    /// Index into [`RunRecord::snapshots`] of the policy in effect.
    pub snapshot: usize,
    pub episode: usize,
    pub state: StateId,
    pub action: ActionId,
    pub next: StateId,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub mdp: TabularMdp,
    pub snapshots: Vec<Snapshot>,
    pub experience: Vec<Experience>,
    pub start_states: Vec<StateId>,
    pub seed: Option<u64>,
}

impl RunRecord {
    /// A run with a single snapshot and no experience.
    pub fn single(
        mdp: TabularMdp,
        policy: StochasticPolicy,
        values: Option<ValueEstimate>,
        start_states: Vec<StateId>,
    ) -> Self {
        Self {
            mdp,
            snapshots: vec![Snapshot {
                step: 0,
                policy,
                values,
            }],
            experience: Vec::new(),
            start_states,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), MdpError> {
        let mdp = &self.mdp;
        let mut violations = Vec::new();
        if self.snapshots.is_empty() {
            violations.push(Violation::new("snapshots", "run has no snapshots"));
        }
        for (i, snap) in self.snapshots.iter().enumerate() {
            if i > 0 && snap.step <= self.snapshots[i - 1].step {
                violations.push(Violation::new(
                    format!("snapshots[{i}].step"),
                    "snapshot steps must be strictly increasing",
                ));
            }
            if let Err(e) = snap.policy.check_compatible(mdp) {
                violations.push(Violation::new(format!("snapshots[{i}].policy"), e.to_string()));
            }
            if let Some(Err(e)) = snap.values.as_ref().map(|v| v.check_compatible(mdp)) {
                violations.push(Violation::new(format!("snapshots[{i}].values"), e.to_string()));
            }
        }
        for (i, e) in self.experience.iter().enumerate() {
            let ok = e.snapshot < self.snapshots.len()
                && mdp.check_state(e.state).is_ok()
                && mdp.check_action(e.action).is_ok()
                && mdp.check_state(e.next).is_ok()
                && e.reward.is_finite();
            if !ok {
                violations.push(Violation::new(
                    format!("experience[{i}]"),
                    "experience refers to an unknown snapshot, state or action",
                ));
            }
            if i > 0 && e.snapshot < self.experience[i - 1].snapshot {
                violations.push(Violation::new(
                    format!("experience[{i}].snapshot"),
                    "experience must be ordered by snapshot",
                ));
            }
        }
        for (i, &s) in self.start_states.iter().enumerate() {
            if mdp.check_state(s).is_err() {
                violations.push(Violation::new(format!("start_states[{i}]"), "unknown state"));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(MdpError::Invalid(violations))
        }
    }
}
