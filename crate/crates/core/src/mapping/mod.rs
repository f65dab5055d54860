//! Instantiating creative systems from an MDP and a policy.
//!
//! Three concept granularities are supported: single states ([`state`]),
//! transitions `(s, a, s')` ([`transition`]) and finite trajectories
//! ([`trajectory`]). In every case the agent's policy is the traversal
//! strategy, so transformations are policy changes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csf::CsfError;
use crate::mdp::{MdpError, StochasticPolicy, TabularMdp};
use crate::normalize::NormalizeError;

pub mod state;
pub mod trajectory;
pub mod transition;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Csf(#[from] CsfError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("horizon required for trajectory concepts")]
    HorizonRequired,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("no start states given")]
    NoStartStates,
    #[error("policies are identical; there is no transformation to value")]
    NoTransformation,
}

/// Which MDP element plays the role of a concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MappingKind {
    /// Concepts are states.
    #[serde(rename = "s")]
    State,
    /// Concepts are transitions `(s, a, s')`.
    #[serde(rename = "sas")]
    Transition,
    /// Concepts are trajectories `(s, a, s', ..., s_last)`.
    #[serde(rename = "tau")]
    Trajectory,
}

impl MappingKind {
    pub fn tag(self) -> &'static str {
        match self {
            MappingKind::State => "s",
            MappingKind::Transition => "sas",
            MappingKind::Trajectory => "tau",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MappingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s" => Ok(MappingKind::State),
            "sas" => Ok(MappingKind::Transition),
            "tau" => Ok(MappingKind::Trajectory),
            other => Err(format!("unknown mapping `{other}` (expected s, sas or tau)")),
        }
    }
}

fn check_policies(mdp: &TabularMdp, before: &StochasticPolicy, after: &StochasticPolicy) -> Result<(), MdpError> {
    before.check_compatible(mdp)?;
    after.check_compatible(mdp)
}
