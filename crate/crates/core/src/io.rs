//! JSON file formats for MDPs, policies, value estimates and runs.
//!
//! States and actions are referred to by label. Objects keyed by label are
//! written in declaration order.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{MdpError, StateId, StochasticPolicy, TabularMdp, ValueEstimate, Violation};
use crate::run::{Experience, RunRecord, Snapshot};

pub const RUN_SCHEMA: &str = "creative-mdp/run/v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { found: String, expected: &'static str },
}

impl From<MdpError> for FormatError {
    fn from(e: MdpError) -> Self {
        match e {
            MdpError::Invalid(v) => FormatError::Invalid(v),
            other => FormatError::Invalid(vec![Violation::new("", other.to_string())]),
        }
    }
}

type LabeledRows = IndexMap<String, Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// action -> state -> distribution over next states
    pub transitions: IndexMap<String, LabeledRows>,
    /// state -> action -> expected reward per next state
    pub rewards: IndexMap<String, LabeledRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_noise: Option<IndexMap<String, LabeledRows>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub policy: LabeledRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuesFile {
    pub values: IndexMap<String, f64>,
}

/// Looks up `outer -> inner -> row` for every declared label pair, recording
/// missing, unknown and wrongly sized entries.
fn nested_tensor(
    key: &str,
    map: &IndexMap<String, LabeledRows>,
    outer: &[String],
    inner: &[String],
    row_len: usize,
    violations: &mut Vec<Violation>,
) -> Vec<Vec<Vec<f64>>> {
    for k in map.keys() {
        if !outer.contains(k) {
            violations.push(Violation::new(format!("{key}.{k}"), format!("unknown label `{k}`")));
        }
    }
    outer
        .iter()
        .map(|o| {
            let Some(rows) = map.get(o) else {
                violations.push(Violation::new(format!("{key}.{o}"), "missing entry"));
                return vec![vec![0.0; row_len]; inner.len()];
            };
            for k in rows.keys() {
                if !inner.contains(k) {
                    violations.push(Violation::new(format!("{key}.{o}.{k}"), format!("unknown label `{k}`")));
                }
            }
            inner
                .iter()
                .map(|i| match rows.get(i) {
                    None => {
                        violations.push(Violation::new(format!("{key}.{o}.{i}"), "missing entry"));
                        vec![0.0; row_len]
                    }
                    Some(row) if row.len() != row_len => {
                        violations.push(Violation::new(
                            format!("{key}.{o}.{i}"),
                            format!("expected {row_len} entries, found {}", row.len()),
                        ));
                        vec![0.0; row_len]
                    }
                    Some(row) => row.clone(),
                })
                .collect()
        })
        .collect()
}

fn check_labels(key: &str, labels: &[String], violations: &mut Vec<Violation>) {
    if labels.is_empty() {
        violations.push(Violation::new(key, "must not be empty"));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            violations.push(Violation::new(format!("{key}[{i}]"), format!("duplicate label `{l}`")));
        }
    }
}

impl MdpFile {
    pub fn into_mdp(self) -> Result<TabularMdp, FormatError> {
        let mut v = Vec::new();
        check_labels("states", &self.states, &mut v);
        check_labels("actions", &self.actions, &mut v);
        let ns = self.states.len();
        let transition = nested_tensor(
            "transitions",
            &self.transitions,
            &self.actions,
            &self.states,
            ns,
            &mut v,
        );
        let rewards = nested_tensor("rewards", &self.rewards, &self.states, &self.actions, ns, &mut v);
        let noise = self
            .reward_noise
            .as_ref()
            .map(|n| nested_tensor("reward_noise", n, &self.states, &self.actions, ns, &mut v));
        if !v.is_empty() {
            return Err(FormatError::Invalid(v));
        }
        Ok(TabularMdp::new(self.states, self.actions, transition, rewards, noise)?)
    }

    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        let tensor = |f: &dyn Fn(StateId, crate::mdp::ActionId, StateId) -> f64, by_action: bool| {
            let mut out = IndexMap::new();
            if by_action {
                for a in mdp.actions() {
                    let rows = mdp
                        .states()
                        .map(|s| {
                            (
                                mdp.state_label(s).to_string(),
                                mdp.states().map(|n| f(s, a, n)).collect(),
                            )
                        })
                        .collect();
                    out.insert(mdp.action_label(a).to_string(), rows);
                }
            } else {
                for s in mdp.states() {
                    let rows = mdp
                        .actions()
                        .map(|a| {
                            (
                                mdp.action_label(a).to_string(),
                                mdp.states().map(|n| f(s, a, n)).collect(),
                            )
                        })
                        .collect();
                    out.insert(mdp.state_label(s).to_string(), rows);
                }
            }
            out
        };
        Self {
            states: mdp.state_labels().to_vec(),
            actions: mdp.action_labels().to_vec(),
            transitions: tensor(&|s, a, n| mdp.transition(s, a, n), true),
            rewards: tensor(&|s, a, n| mdp.reward(s, a, n), false),
            reward_noise: mdp
                .has_reward_noise()
                .then(|| tensor(&|s, a, n| mdp.reward_noise(s, a, n).unwrap_or(0.0), false)),
        }
    }
}

fn policy_rows(mdp: &TabularMdp, key: &str, rows: &LabeledRows) -> Result<StochasticPolicy, FormatError> {
    let mut v = Vec::new();
    for k in rows.keys() {
        if mdp.state_id(k).is_none() {
            v.push(Violation::new(format!("{key}.{k}"), format!("unknown state `{k}`")));
        }
    }
    let dense: Vec<Vec<f64>> = mdp
        .state_labels()
        .iter()
        .map(|s| match rows.get(s) {
            None => {
                v.push(Violation::new(format!("{key}.{s}"), "missing entry"));
                vec![0.0; mdp.num_actions()]
            }
            Some(r) if r.len() != mdp.num_actions() => {
                v.push(Violation::new(
                    format!("{key}.{s}"),
                    format!("expected {} entries, found {}", mdp.num_actions(), r.len()),
                ));
                vec![0.0; mdp.num_actions()]
            }
            Some(r) => r.clone(),
        })
        .collect();
    if !v.is_empty() {
        return Err(FormatError::Invalid(v));
    }
    let labels = mdp.state_labels();
    Ok(StochasticPolicy::with_row_names(dense, &|s| {
        (format!("{key}.{}", labels[s]), labels[s].clone())
    })?)
}

fn policy_to_rows(mdp: &TabularMdp, policy: &StochasticPolicy) -> LabeledRows {
    mdp.states()
        .map(|s| (mdp.state_label(s).to_string(), policy.row(s).to_vec()))
        .collect()
}

fn values_from_map(mdp: &TabularMdp, key: &str, map: &IndexMap<String, f64>) -> Result<ValueEstimate, FormatError> {
    let mut v = Vec::new();
    for k in map.keys() {
        if mdp.state_id(k).is_none() {
            v.push(Violation::new(format!("{key}.{k}"), format!("unknown state `{k}`")));
        }
    }
    let dense: Vec<f64> = mdp
        .state_labels()
        .iter()
        .map(|s| {
            map.get(s).copied().unwrap_or_else(|| {
                v.push(Violation::new(format!("{key}.{s}"), "missing entry"));
                0.0
            })
        })
        .collect();
    if !v.is_empty() {
        return Err(FormatError::Invalid(v));
    }
    Ok(ValueEstimate::new(dense)?)
}

fn values_to_map(mdp: &TabularMdp, values: &ValueEstimate) -> IndexMap<String, f64> {
    mdp.states()
        .map(|s| (mdp.state_label(s).to_string(), values.get(s)))
        .collect()
}

pub fn parse_mdp(json: &str) -> Result<TabularMdp, FormatError> {
    serde_json::from_str::<MdpFile>(json)?.into_mdp()
}

pub fn parse_policy(json: &str, mdp: &TabularMdp) -> Result<StochasticPolicy, FormatError> {
    let file: PolicyFile = serde_json::from_str(json)?;
    policy_rows(mdp, "policy", &file.policy)
}

pub fn parse_values(json: &str, mdp: &TabularMdp) -> Result<ValueEstimate, FormatError> {
    let file: ValuesFile = serde_json::from_str(json)?;
    values_from_map(mdp, "values", &file.values)
}

pub fn mdp_to_json(mdp: &TabularMdp) -> String {
    pretty(&MdpFile::from_mdp(mdp))
}

pub fn policy_to_json(mdp: &TabularMdp, policy: &StochasticPolicy) -> String {
    pretty(&PolicyFile {
        policy: policy_to_rows(mdp, policy),
    })
}

pub fn values_to_json(mdp: &TabularMdp, values: &ValueEstimate) -> String {
    pretty(&ValuesFile {
        values: values_to_map(mdp, values),
    })
}

pub(crate) fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    step: u64,
    policy: LabeledRows,
    values: Option<IndexMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperienceFile {
    snapshot: usize,
    episode: usize,
    state: String,
    action: String,
    next: String,
    reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    schema: String,
    seed: Option<u64>,
    start_states: Vec<String>,
    mdp: MdpFile,
    snapshots: Vec<SnapshotFile>,
    experience: Vec<ExperienceFile>,
}

pub fn run_to_json(run: &RunRecord) -> String {
    let mdp = &run.mdp;
    let file = RunFile {
        schema: RUN_SCHEMA.to_string(),
        seed: run.seed,
        start_states: run
            .start_states
            .iter()
            .map(|&s| mdp.state_label(s).to_string())
            .collect(),
        mdp: MdpFile::from_mdp(mdp),
        snapshots: run
            .snapshots
            .iter()
            .map(|s| SnapshotFile {
                step: s.step,
                policy: policy_to_rows(mdp, &s.policy),
                values: s.values.as_ref().map(|v| values_to_map(mdp, v)),
            })
            .collect(),
        experience: run
            .experience
            .iter()
            .map(|e| ExperienceFile {
                snapshot: e.snapshot,
                episode: e.episode,
                state: mdp.state_label(e.state).to_string(),
                action: mdp.action_label(e.action).to_string(),
                next: mdp.state_label(e.next).to_string(),
                reward: e.reward,
            })
            .collect(),
    };
    pretty(&file)
}

pub fn parse_run(json: &str) -> Result<RunRecord, FormatError> {
    let file: RunFile = serde_json::from_str(json)?;
    if file.schema != RUN_SCHEMA {
        return Err(FormatError::Schema {
            found: file.schema,
            expected: RUN_SCHEMA,
        });
    }
    let mdp = file.mdp.into_mdp()?;
    let mut v = Vec::new();
    let state = |key: String, label: &str, v: &mut Vec<Violation>| {
        mdp.state_id(label).unwrap_or_else(|| {
            v.push(Violation::new(key, format!("unknown state `{label}`")));
            StateId(0)
        })
    };
    let start_states = file
        .start_states
        .iter()
        .enumerate()
        .map(|(i, l)| state(format!("start_states[{i}]"), l, &mut v))
        .collect();
    let experience = file
        .experience
        .iter()
        .enumerate()
        .map(|(i, e)| Experience {
            snapshot: e.snapshot,
            episode: e.episode,
            state: state(format!("experience[{i}].state"), &e.state, &mut v),
            action: mdp.action_id(&e.action).unwrap_or_else(|| {
                v.push(Violation::new(
                    format!("experience[{i}].action"),
                    format!("unknown action `{}`", e.action),
                ));
                crate::mdp::ActionId(0)
            }),
            next: state(format!("experience[{i}].next"), &e.next, &mut v),
            reward: e.reward,
        })
        .collect();
    let mut snapshots = Vec::with_capacity(file.snapshots.len());
    for (i, s) in file.snapshots.iter().enumerate() {
        let key = format!("snapshots[{i}]");
        let policy = match policy_rows(&mdp, &format!("{key}.policy"), &s.policy) {
            Ok(p) => p,
            Err(FormatError::Invalid(mut vs)) => {
                v.append(&mut vs);
                continue;
            }
            Err(e) => return Err(e),
        };
        let values = match s
            .values
            .as_ref()
            .map(|m| values_from_map(&mdp, &format!("{key}.values"), m))
        {
            None => None,
            Some(Ok(vals)) => Some(vals),
            Some(Err(FormatError::Invalid(mut vs))) => {
                v.append(&mut vs);
                continue;
            }
            Some(Err(e)) => return Err(e),
        };
        snapshots.push(Snapshot {
            step: s.step,
            policy,
            values,
        });
    }
    if !v.is_empty() {
        return Err(FormatError::Invalid(v));
    }
    let run = RunRecord {
        mdp,
        snapshots,
        experience,
        start_states,
        seed: file.seed,
    };
    run.validate()?;
    Ok(run)
}
