//! Run-level creativity analysis.
//!
//! [`analyze`] instantiates the chosen mapping at every policy snapshot of a
//! [`RunRecord`], diagnoses each instance, classifies the change between
//! consecutive snapshots, and replays the sampled experience looking for
//! exploratory events and experienced aberrations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::csf::{
    admits_valued, diagnose, strong_alpha_cut, transformation_kind, AberrationClass, Concept, ConceptSet, Diagnosis,
    EcsInstance, ReachBound, TransformationKind, UninspirationFlags,
};
use crate::mapping::state::{build_ms, MsConfig};
use crate::mapping::trajectory::{build_mtau, MtauConfig};
use crate::mapping::transition::{build_msas, initial_concepts as transition_starts, MsasConfig};
use crate::mapping::{MappingError, MappingKind};
use crate::mdp::{MdpError, StateId, Trajectory, ValueEstimate};
use crate::normalize::Normalization;
use crate::run::RunRecord;

pub const REPORT_SCHEMA: &str = "creative-mdp/report/v1";

/// How novelty of a concept is judged when replaying experience.
pub const NOVELTY_RULE: &str = "run-local first occurrence";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error("invalid run: {0}")]
    Run(#[from] MdpError),
    #[error("snapshot {index}: {source}")]
    Snapshot { index: usize, source: MappingError },
    #[error("snapshots {from} -> {to}: {source}")]
    Pair {
        from: usize,
        to: usize,
        source: MappingError,
    },
    #[error("snapshot {0}: no value estimate in the run and none supplied")]
    ValuesRequired(usize),
    #[error("run has no start states")]
    NoStartStates,
    #[error("{mapping} concepts need a horizon")]
    HorizonRequired { mapping: MappingKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub mapping: MappingKind,
    pub alpha: f64,
    pub beta: f64,
    /// Trajectory length bound; required for trajectory concepts, ignored otherwise.
    pub horizon: Option<usize>,
    pub normalization: Normalization,
    /// Used for snapshots that carry no value estimate of their own and
    /// follow no snapshot that does.
    pub fallback_values: Option<ValueEstimate>,
}

impl AnalysisConfig {
    pub fn new(mapping: MappingKind, alpha: f64, beta: f64) -> Self {
        Self {
            mapping,
            alpha,
            beta,
            horizon: None,
            normalization: Normalization::MinMax,
            fallback_values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub beta: f64,
    pub horizon: Option<usize>,
    pub normalization: Normalization,
    pub seed: Option<u64>,
    pub start_states: Vec<String>,
    /// `fixpoint`, or `steps` when reachability is bounded by the horizon.
    pub reachability: String,
    pub novelty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotReport {
    pub index: usize,
    pub step: u64,
    /// `snapshot`, `snapshot N` (inherited), `supplied`, or `none`.
    pub values_from: String,
    pub conceptual_space_size: usize,
    /// SHA-256 of the sorted conceptual space, one rendered concept per line.
    pub conceptual_space_hash: String,
    pub conceptual_space: Vec<String>,
    pub reachable_size: usize,
    pub reachable_converged: bool,
    pub reach_bound: Option<usize>,
    pub aberration_class: AberrationClass,
    pub aberration_size: usize,
    pub aberration: Vec<String>,
    pub uninspiration: UninspirationFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationReport {
    pub from: usize,
    pub to: usize,
    pub kind: TransformationKind,
    pub valued: bool,
    /// Newly reachable or acceptable concepts valued above beta by the earlier snapshot.
    pub admitted_valued: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploratoryEvent {
    /// Index of the experience tuple that first produced the concept.
    pub step: usize,
    pub snapshot: usize,
    pub concept: String,
    pub evaluation: f64,
    pub in_conceptual_space: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperiencedAberration {
    /// First experience index at which the concept was sampled under this snapshot.
    pub step: usize,
    pub snapshot: usize,
    pub concept: String,
    pub acceptability: f64,
    pub occurrences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativityReport {
    pub schema: String,
    pub mapping: MappingKind,
    pub config: ConfigEcho,
    pub snapshots: Vec<SnapshotReport>,
    pub transformations: Vec<TransformationReport>,
    pub exploratory_events: Vec<ExploratoryEvent>,
    pub experienced_aberrations: Vec<ExperiencedAberration>,
}

impl CreativityReport {
    pub fn to_json(&self) -> String {
        crate::io::pretty(self)
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// One `path = value` line per scalar field, in the same order as the JSON.
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        flatten("", &value, &mut out);
        out
    }

    /// One line describing the last snapshot and the run as a whole.
    pub fn summary(&self) -> String {
        let last = self.snapshots.last();
        let n_q = self
            .transformations
            .iter()
            .filter(|t| t.kind != TransformationKind::None)
            .count();
        format!(
            "mapping={} C={} aberration={} uninspiration={} events={} transformations={}",
            self.mapping,
            last.map_or(0, |s| s.conceptual_space_size),
            last.map_or("none", |s| s.aberration_class.name()),
            last.map_or_else(|| "none".to_string(), |s| s.uninspiration.summary()),
            self.exploratory_events.len(),
            n_q,
        )
    }
}

fn flatten(path: &str, value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten(&p, v, out);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{path}[{i}]"), v, out);
            }
        }
        other => {
            let _ = writeln!(out, "{path} = {other}");
        }
    }
}

/// A mapping instantiated at one snapshot.
struct Instance {
    ecs: EcsInstance,
    initial: Vec<Concept>,
    values_from: String,
}

struct Prepared<'a> {
    run: &'a RunRecord,
    bound: ReachBound,
    instances: Vec<Instance>,
}

fn prepare<'a>(run: &'a RunRecord, cfg: &AnalysisConfig) -> Result<Prepared<'a>, AnalyzeError> {
    run.validate()?;
    if run.start_states.is_empty() {
        return Err(AnalyzeError::NoStartStates);
    }
    let bound = match cfg.mapping {
        MappingKind::Trajectory => match cfg.horizon {
            Some(h) => ReachBound::Steps(h),
            None => return Err(AnalyzeError::HorizonRequired { mapping: cfg.mapping }),
        },
        _ => ReachBound::Fixpoint,
    };
    let mdp = &run.mdp;
    let mut instances = Vec::with_capacity(run.snapshots.len());
    let mut latest: Option<(usize, &ValueEstimate)> = None;
    for (index, snap) in run.snapshots.iter().enumerate() {
        if let Some(v) = &snap.values {
            latest = Some((index, v));
        }
        let values = match latest {
            Some((i, v)) if i == index => Some((v, "snapshot".to_string())),
            Some((i, v)) => Some((v, format!("snapshot {i}"))),
            None => cfg.fallback_values.as_ref().map(|v| (v, "supplied".to_string())),
        };
        let wrap = |source| AnalyzeError::Snapshot { index, source };
        let needs_values = || values.clone().ok_or(AnalyzeError::ValuesRequired(index));
        let instance = match cfg.mapping {
            MappingKind::State => {
                let (v, from) = needs_values()?;
                let ms = MsConfig {
                    alpha: cfg.alpha,
                    beta: cfg.beta,
                    normalization: cfg.normalization,
                };
                Instance {
                    ecs: build_ms(mdp, &snap.policy, v, &ms).map_err(wrap)?,
                    initial: run.start_states.iter().map(|&s| Concept::State(s)).collect(),
                    values_from: from,
                }
            }
            MappingKind::Transition => {
                let msas = MsasConfig {
                    alpha: cfg.alpha,
                    beta: cfg.beta,
                    normalization: cfg.normalization,
                };
                Instance {
                    ecs: build_msas(mdp, &snap.policy, &msas).map_err(wrap)?,
                    initial: transition_starts(mdp, &snap.policy, &run.start_states),
                    values_from: values.map_or_else(|| "none".to_string(), |(_, f)| f),
                }
            }
            MappingKind::Trajectory => {
                let (v, from) = needs_values()?;
                let mtau = MtauConfig {
                    alpha: cfg.alpha,
                    beta: cfg.beta,
                    horizon: cfg.horizon,
                    normalization: cfg.normalization,
                    starts: run.start_states.clone(),
                };
                Instance {
                    ecs: build_mtau(mdp, &snap.policy, v, &mtau).map_err(wrap)?,
                    initial: vec![Concept::Empty],
                    values_from: from,
                }
            }
        };
        instances.push(instance);
    }
    Ok(Prepared { run, bound, instances })
}

fn diagnoses(prep: &Prepared<'_>) -> Result<Vec<Diagnosis>, AnalyzeError> {
    prep.instances
        .iter()
        .enumerate()
        .map(|(index, inst)| {
            if inst.initial.is_empty() {
                // Nothing leaves the start states with positive probability.
                let space = crate::csf::conceptual_space(&inst.ecs).map_err(|e| AnalyzeError::Snapshot {
                    index,
                    source: e.into(),
                })?;
                return empty_diagnosis(&inst.ecs, space).map_err(|e| AnalyzeError::Snapshot {
                    index,
                    source: e.into(),
                });
            }
            diagnose(&inst.ecs, &inst.initial, prep.bound).map_err(|e| AnalyzeError::Snapshot {
                index,
                source: e.into(),
            })
        })
        .collect()
}

fn empty_diagnosis(ecs: &EcsInstance, space: ConceptSet) -> Result<Diagnosis, crate::csf::CsfError> {
    use crate::csf::{Aberration, Reachable};
    let conceptual = strong_alpha_cut(&*ecs.evaluation, &space, ecs.beta)?.is_empty();
    Ok(Diagnosis {
        conceptual_space: space,
        reachable: Reachable {
            concepts: ConceptSet::new(),
            converged: true,
            bound: None,
        },
        aberration: Aberration {
            concepts: ConceptSet::new(),
            bound: None,
        },
        aberration_class: AberrationClass::None,
        uninspiration: UninspirationFlags {
            generative: true,
            conceptual,
            hopeless: None,
        },
    })
}

fn cut_hash(rendered: &[String]) -> String {
    let mut hasher = Sha256::new();
    for line in rendered {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

fn transformations(prep: &Prepared<'_>, diags: &[Diagnosis]) -> Result<Vec<TransformationReport>, AnalyzeError> {
    let mdp = &prep.run.mdp;
    let mut out = Vec::new();
    for i in 1..prep.instances.len() {
        let (before, after) = (&diags[i - 1], &diags[i]);
        let changed = prep.run.snapshots[i - 1].policy != prep.run.snapshots[i].policy;
        let kind = transformation_kind(changed, &before.conceptual_space, &after.conceptual_space);
        let mut admitted = Vec::new();
        let mut valued = false;
        if kind != TransformationKind::None {
            let wrap = |e: crate::csf::CsfError| AnalyzeError::Pair {
                from: i - 1,
                to: i,
                source: e.into(),
            };
            let ecs = &prep.instances[i - 1].ecs;
            let old = before.reachable.concepts.union(&before.conceptual_space);
            let new = after.reachable.concepts.union(&after.conceptual_space);
            valued = admits_valued(ecs, &old, &new).map_err(wrap)?;
            admitted = strong_alpha_cut(&*ecs.evaluation, &new.difference(&old), ecs.beta)
                .map_err(wrap)?
                .render(mdp);
        }
        out.push(TransformationReport {
            from: i - 1,
            to: i,
            kind,
            valued,
            admitted_valued: admitted,
        });
    }
    Ok(out)
}

/// Concepts produced by each experience tuple, replaying episodes as
/// trajectories for the trajectory mapping.
fn observed_concepts(run: &RunRecord, mapping: MappingKind, horizon: Option<usize>) -> Vec<Vec<Concept>> {
    let mut current: Option<(usize, Trajectory)> = None;
    run.experience
        .iter()
        .map(|e| match mapping {
            MappingKind::State => vec![Concept::State(e.state), Concept::State(e.next)],
            MappingKind::Transition => vec![Concept::Transition(e.state, e.action, e.next)],
            MappingKind::Trajectory => {
                let h = horizon.unwrap_or(0);
                let mut out = Vec::new();
                let continues = matches!(&current, Some((ep, t)) if *ep == e.episode && t.last_state() == e.state);
                if !continues {
                    let t = Trajectory::empty(e.state);
                    out.push(Concept::Trajectory(t.clone()));
                    current = Some((e.episode, t));
                }
                let (_, t) = current.as_mut().expect("set above");
                if t.len() < h {
                    t.steps.push((e.action, e.next));
                    out.push(Concept::Trajectory(t.clone()));
                }
                out
            }
        })
        .collect()
}

fn events(prep: &Prepared<'_>, diags: &[Diagnosis], cfg: &AnalysisConfig) -> Vec<ExploratoryEvent> {
    let run = prep.run;
    let mut seen = ConceptSet::new();
    let mut out = Vec::new();
    for (step, (e, concepts)) in run
        .experience
        .iter()
        .zip(observed_concepts(run, cfg.mapping, cfg.horizon))
        .enumerate()
    {
        let ecs = &prep.instances[e.snapshot].ecs;
        for c in concepts {
            if !seen.insert(c.clone()) {
                continue;
            }
            let evaluation = (ecs.evaluation)(&c);
            if evaluation > ecs.beta {
                out.push(ExploratoryEvent {
                    step,
                    snapshot: e.snapshot,
                    concept: c.render(&run.mdp),
                    evaluation,
                    in_conceptual_space: diags[e.snapshot].conceptual_space.contains(&c),
                });
            }
        }
    }
    out
}

fn experienced_aberrations(prep: &Prepared<'_>, cfg: &AnalysisConfig) -> Vec<ExperiencedAberration> {
    if cfg.mapping == MappingKind::State {
        return Vec::new();
    }
    let run = prep.run;
    let mut found: BTreeMap<(usize, Concept), ExperiencedAberration> = BTreeMap::new();
    for (step, (e, concepts)) in run
        .experience
        .iter()
        .zip(observed_concepts(run, cfg.mapping, cfg.horizon))
        .enumerate()
    {
        let ecs = &prep.instances[e.snapshot].ecs;
        for c in concepts {
            if matches!(&c, Concept::Trajectory(t) if t.is_empty()) {
                continue;
            }
            let acceptability = (ecs.acceptability)(&c);
            if acceptability > ecs.alpha {
                continue;
            }
            found
                .entry((e.snapshot, c.clone()))
                .and_modify(|a| a.occurrences += 1)
                .or_insert_with(|| ExperiencedAberration {
                    step,
                    snapshot: e.snapshot,
                    concept: c.render(&run.mdp),
                    acceptability,
                    occurrences: 1,
                });
        }
    }
    let mut out: Vec<_> = found.into_values().collect();
    out.sort_by_key(|a| (a.step, a.snapshot));
    out
}

/// First occurrences within the run of concepts valued above beta.
pub fn detect_exploratory_events(run: &RunRecord, cfg: &AnalysisConfig) -> Result<Vec<ExploratoryEvent>, AnalyzeError> {
    let prep = prepare(run, cfg)?;
    let diags = diagnoses(&prep)?;
    Ok(events(&prep, &diags, cfg))
}

/// Classifies every consecutive pair of snapshots.
pub fn detect_transformations(
    run: &RunRecord,
    cfg: &AnalysisConfig,
) -> Result<Vec<TransformationReport>, AnalyzeError> {
    let prep = prepare(run, cfg)?;
    let diags = diagnoses(&prep)?;
    transformations(&prep, &diags)
}

pub fn analyze(run: &RunRecord, cfg: &AnalysisConfig) -> Result<CreativityReport, AnalyzeError> {
    let prep = prepare(run, cfg)?;
    let diags = diagnoses(&prep)?;
    let mdp = &run.mdp;

    let snapshots = diags
        .iter()
        .zip(&prep.instances)
        .zip(&run.snapshots)
        .enumerate()
        .map(|(index, ((d, inst), snap))| {
            let space = d.conceptual_space.render(mdp);
            SnapshotReport {
                index,
                step: snap.step,
                values_from: inst.values_from.clone(),
                conceptual_space_size: space.len(),
                conceptual_space_hash: cut_hash(&space),
                conceptual_space: space,
                reachable_size: d.reachable.concepts.len(),
                reachable_converged: d.reachable.converged,
                reach_bound: d.reachable.bound,
                aberration_class: d.aberration_class,
                aberration_size: d.aberration.concepts.len(),
                aberration: d.aberration.concepts.render(mdp),
                uninspiration: d.uninspiration,
            }
        })
        .collect();

    Ok(CreativityReport {
        schema: REPORT_SCHEMA.to_string(),
        mapping: cfg.mapping,
        config: ConfigEcho {
            alpha: cfg.alpha,
            beta: cfg.beta,
            horizon: match cfg.mapping {
                MappingKind::Trajectory => cfg.horizon,
                _ => None,
            },
            normalization: cfg.normalization,
            seed: run.seed,
            start_states: run
                .start_states
                .iter()
                .map(|&s| mdp.state_label(s).to_string())
                .collect(),
            reachability: match prep.bound {
                ReachBound::Fixpoint => "fixpoint".to_string(),
                ReachBound::Steps(_) => "steps".to_string(),
            },
            novelty: NOVELTY_RULE.to_string(),
        },
        transformations: transformations(&prep, &diags)?,
        exploratory_events: events(&prep, &diags, cfg),
        experienced_aberrations: experienced_aberrations(&prep, cfg),
        snapshots,
    })
}

/// Start states for a run when none are given: every state.
pub fn default_starts(num_states: usize) -> Vec<StateId> {
    (0..num_states).map(StateId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{chain2, chain2_reference_policy, chain2_values, constant_policy};
    use crate::mdp::ActionId;
    use crate::run::{Experience, Snapshot};

    fn exp(snapshot: usize, episode: usize, s: usize, a: usize, n: usize) -> Experience {
        Experience {
            snapshot,
            episode,
            state: StateId(s),
            action: ActionId(a),
            next: StateId(n),
            reward: if n == 1 { 1.0 } else { 0.0 },
        }
    }

    fn two_policy_run() -> RunRecord {
        let mdp = chain2();
        let a0 = constant_policy(&mdp, ActionId(0));
        RunRecord {
            snapshots: vec![
                Snapshot {
                    step: 0,
                    policy: a0,
                    values: Some(chain2_values()),
                },
                Snapshot {
                    step: 1,
                    policy: chain2_reference_policy(),
                    values: None,
                },
            ],
            experience: vec![
                exp(0, 0, 0, 0, 0),
                exp(0, 0, 0, 0, 0),
                exp(1, 1, 0, 0, 0),
                exp(1, 1, 0, 1, 1),
                exp(1, 1, 1, 0, 1),
            ],
            start_states: vec![StateId(0)],
            seed: None,
            mdp,
        }
    }

    #[test]
    fn single_snapshot_sas_report() {
        let run = RunRecord::single(chain2(), chain2_reference_policy(), None, vec![StateId(0)]);
        let report = analyze(&run, &AnalysisConfig::new(MappingKind::Transition, 0.5, 0.5)).unwrap();
        assert_eq!(report.snapshots[0].conceptual_space, ["(s0,a1,s1)", "(s1,a0,s1)"]);
        assert!(report.exploratory_events.is_empty());
        assert!(report.transformations.is_empty());
        assert!(report.summary().starts_with("mapping=sas C=2 "));
    }

    #[test]
    fn policy_switch_scenario() {
        let run = two_policy_run();
        let report = analyze(&run, &AnalysisConfig::new(MappingKind::Transition, 0.5, 0.5)).unwrap();
        let t = &report.transformations[0];
        assert_eq!(t.kind, TransformationKind::NAndQ);
        assert!(t.valued);
        let events: Vec<_> = report
            .exploratory_events
            .iter()
            .map(|e| (e.step, e.concept.as_str()))
            .collect();
        assert_eq!(events, [(3, "(s0,a1,s1)"), (4, "(s1,a0,s1)")]);
        // (s0,a0,s0) has probability 0.9 under always-a0 but 0.225 under the reference policy.
        let ab: Vec<_> = report
            .experienced_aberrations
            .iter()
            .map(|a| (a.step, a.concept.as_str(), a.occurrences))
            .collect();
        assert_eq!(ab, [(2, "(s0,a0,s0)", 1)]);
    }

    #[test]
    fn state_events_need_values_and_inherit_them() {
        let mut run = two_policy_run();
        let cfg = AnalysisConfig::new(MappingKind::State, 0.05, 0.5);
        let report = analyze(&run, &cfg).unwrap();
        assert_eq!(report.snapshots[1].values_from, "snapshot 0");
        let events: Vec<_> = report
            .exploratory_events
            .iter()
            .map(|e| (e.step, e.concept.as_str()))
            .collect();
        assert_eq!(events, [(3, "s1")]);

        let strict = AnalysisConfig {
            beta: 1.0,
            ..cfg.clone()
        };
        assert!(analyze(&run, &strict).unwrap().exploratory_events.is_empty());

        run.snapshots[0].values = None;
        assert_eq!(analyze(&run, &cfg).unwrap_err(), AnalyzeError::ValuesRequired(0));
    }

    #[test]
    fn trajectory_replay_caps_at_horizon() {
        let run = two_policy_run();
        let cfg = AnalysisConfig {
            horizon: Some(2),
            ..AnalysisConfig::new(MappingKind::Trajectory, 0.05, 0.5)
        };
        let observed = observed_concepts(&run, MappingKind::Trajectory, Some(2));
        let lens: Vec<_> = observed.iter().map(Vec::len).collect();
        assert_eq!(lens, [2, 1, 2, 1, 0]);
        let report = analyze(&run, &cfg).unwrap();
        let events: Vec<_> = report.exploratory_events.iter().map(|e| e.concept.as_str()).collect();
        assert_eq!(events, ["(s0,a0,s0,a1,s1)"]);
        assert!(analyze(&run, &AnalysisConfig::new(MappingKind::Trajectory, 0.05, 0.5)).is_err());
    }

    #[test]
    fn report_is_deterministic_and_round_trips() {
        let run = two_policy_run();
        let cfg = AnalysisConfig::new(MappingKind::Transition, 0.5, 0.5);
        let a = analyze(&run, &cfg).unwrap().to_json();
        let b = analyze(&run, &cfg).unwrap().to_json();
        assert_eq!(a, b);
        let parsed = CreativityReport::from_json(&a).unwrap();
        assert_eq!(parsed.to_json(), a);
        let text = parsed.to_text();
        assert!(text.contains("transformations[0].kind = \"n-and-q\""));
        assert!(text.contains("snapshots[0].conceptual_space_size = 2"));
    }

    #[test]
    fn constant_policy_has_no_transformations() {
        let mdp = chain2();
        let pi = chain2_reference_policy();
        let run = RunRecord {
            snapshots: (0..3)
                .map(|k| Snapshot {
                    step: k,
                    policy: pi.clone(),
                    values: None,
                })
                .collect(),
            experience: vec![],
            start_states: vec![StateId(0)],
            seed: None,
            mdp,
        };
        let ts = detect_transformations(&run, &AnalysisConfig::new(MappingKind::Transition, 0.5, 0.5)).unwrap();
        assert!(ts.iter().all(|t| t.kind == TransformationKind::None && !t.valued));
    }
}
