//! Symbolic domain models, patches between them, and their lineage.
//!
//! A model is a closed-world STRIPS domain extended with negative
//! preconditions, failure cases and task templates. Hypotheses are immutable;
//! change happens by applying a [`ModelPatch`] to produce a new hypothesis
//! whose id is the hash of its canonical serialization.

pub mod canonical;
mod diff;
pub mod ground;
mod lineage;
mod patch;
pub(crate) mod sexpr_text;
mod task;
mod types;
mod validate;
pub mod workspace;

pub use diff::{diff, diff_domains};
pub use ground::{ActionRef, GroundAction, ObjectTable};
pub use lineage::{Lineage, LineageError};
pub use patch::{apply_edits, apply_patch, Edit, ModelPatch, PatchEntry, PatchError, Provenance, SetDelta};
pub use sexpr_text::TextError;
pub use task::GroundTaskSpec;
pub use types::*;
pub use validate::{validate_domain, validate_model, Diagnostic, DiagnosticKind};
pub use workspace::{load_workspace, save_workspace, Workspace, WorkspaceError};
