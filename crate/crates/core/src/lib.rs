//! Creativity analysis for agents acting in finite Markov decision processes.
//!
//! An agent's policy is read as the traversal strategy of an exploratory
//! creative system whose concepts are states, transitions or trajectories.
//! From there the crate computes conceptual spaces (strict alpha-cuts of an
//! acceptability function), reachable sets, aberrations, uninspiration and
//! transformations between policy snapshots.
//!
//! ```
//! use creative_mdp::fixtures::{chain2, chain2_reference_policy};
//! use creative_mdp::mapping::transition::{build_msas, MsasConfig};
//! use creative_mdp::{conceptual_space, Normalization};
//!
//! let cfg = MsasConfig { alpha: 0.5, beta: 0.5, normalization: Normalization::MinMax };
//! let ecs = build_msas(&chain2(), &chain2_reference_policy(), &cfg).unwrap();
//! assert_eq!(conceptual_space(&ecs).unwrap().len(), 2);
//! ```

pub mod analyzer;
pub mod csf;
pub mod fixtures;
pub mod io;
pub mod learner;
pub mod mapping;
pub mod mdp;
pub mod normalize;
pub mod oracle;
pub mod run;

pub use analyzer::{analyze, AnalysisConfig, AnalyzeError, CreativityReport};
pub use csf::{
    aberration_set, classify_aberration, classify_uninspiration, conceptual_space, diagnose, reachable_set,
    strong_alpha_cut, AberrationClass, Concept, ConceptSet, CsfError, Diagnosis, EcsInstance, ReachBound,
    TransformationKind, UninspirationFlags,
};
pub use io::FormatError;
pub use learner::{Algorithm, LearnError, LearnerConfig};
pub use mapping::{MappingError, MappingKind};
pub use mdp::{
    validate_mdp, ActionId, MdpError, StateId, StochasticPolicy, TabularMdp, Trajectory, ValueEstimate, Violation,
};
pub use normalize::{normalize, Normalization, NormalizeError};
pub use run::{Experience, RunRecord, Snapshot};
