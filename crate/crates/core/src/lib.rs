//! Red-teaming workbench for symbolic planning domains.
//!
//! A seed domain model is challenged in three analyses (possibility
//! enumeration, assumption extraction, reflective dialogue with a blue
//! agent). Each analysis may produce a [`model::ModelPatch`]; applying the
//! accepted edits yields the next [`model::ModelHypothesis`] in a
//! content-addressed lineage. Hypotheses compile to PDDL, are solved by a
//! built-in STRIPS planner against failure-injected task batches, and feed a
//! logistic-regression policy that picks risk-mitigating actions during
//! simulated execution.
//!
//! The modules mirror that pipeline:
//!
//! * [`model`]: domain types, patches, diffs, validation, workspace storage
//! * [`hrrt`]: the red-teaming analyses, dialogue trees and blue agents
//! * [`pddl`]: PDDL emission and parsing
//! * [`planner`]: grounding, heuristics, search and plan validation
//! * [`bench`]: seeded task generation, evaluation and reports
//! * [`riskmit`]: featurization, utility models and execution simulation
//! * [`fixtures`]: bundled domains, scripts and dialogue trees

pub mod bench;
pub mod fixtures;
pub mod hrrt;
pub mod model;
pub mod pddl;
pub mod planner;
pub mod riskmit;
