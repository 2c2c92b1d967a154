//! Causal-structure analysis for two-party measurement phenomena.
//!
//! The crate decides, with exact rational arithmetic end to end:
//!
//! - d-separation in causal DAGs and its agreement with conditional
//!   independence in finite probability tables ([`dag`], [`prob`]);
//! - validity of measurement scenarios, phenomena, and the no-disturbance
//!   conditions ([`scenario`]);
//! - membership of a phenomenon in the classical polytope spanned by
//!   deterministic response functions, with weight or witness certificates
//!   ([`polytope`]);
//! - faithfulness of a causal model: whether every observed conditional
//!   independence is structural rather than fine-tuned ([`faithfulness`]);
//! - an exhaustive check that every causal structure passing the
//!   no-disturbance filter supports only factorisable phenomena
//!   ([`theorem`]).

pub mod ci;
pub mod dag;
pub mod faithfulness;
pub mod polytope;
pub mod prob;
pub mod scalar;
pub mod scenario;
pub mod theorem;

pub use ci::{canonical_triples, CiStatement, TripleMode};
pub use dag::{bell_graph, genealogy, Dag, DagError, Genealogy, NodeId, NodeKind};
pub use faithfulness::{
    bell_common_cause_model, is_faithful, one_bit_signalling_pr_model, required_nd_dseps,
    saturated_model, FaithfulnessReport,
};
pub use polytope::{
    classical_bound, evaluate_inequality, is_factorisable, Inequality, MembershipResult,
    PolytopeError, VertexSet,
};
pub use prob::{
    is_compatible, markov_factorize, random_compatible, random_kernels, Alphabet, CiCheck,
    JointDistribution, Kernel, ProbError,
};
pub use scalar::{rat, Rat, Scalar};
pub use scenario::{
    is_bell_scenario, no_disturbance, phenomenon_from_model, BellPartition, CausalModel,
    DisturbanceViolation, MeasurementScenario, NoDisturbanceReport, Phenomenon, ScenarioError,
};
pub use theorem::{
    classify_survivor, enumerate_candidates, filter_by_nd, nd_violation, verify_survivor_numeric,
    verify_theorem1, CandidateSpace, ExclusionCounts, ProofClass, SurvivorRecord, TheoremConfig,
    VerificationReport,
};
