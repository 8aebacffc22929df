//! The red-teaming analyses.
//!
//! * H2 enumerates transitions the model supports so the blue team can judge them.
//! * H3 extracts one causal assumption per precondition and effect literal.
//! * H4 walks a dialogue tree with a [`BlueAgent`], focusing on what H2 and
//!   H3 flagged, and collects proposed edits.
//!
//! Each level yields a [`ModelPatch`](crate::model::ModelPatch) whose
//! accepted edits (at most `max_accepted`) produce the next hypothesis.

pub mod agent;
mod assumptions;
pub mod dialogue;
mod iteration;
mod possibilities;
mod reflection;
mod transcript;

pub use agent::{
    AgentContext, AgentError, BlueAgent, HumanReply, InteractiveAgent, InteractiveBridge, MalformedEdit,
    PendingQuestion, Proposal, RemoteConfig, RemoteTextAgent, Script, ScriptRule, ScriptedAgent,
};
pub use assumptions::{extract_assumptions, render_assumption, Assumption, AssumptionKind, AssumptionStatus};
pub use dialogue::{AnswerSchema, DialogueError, DialogueNode, DialogueTree};
pub use iteration::{
    detect_saturation, iterate_workspace, run_h2, run_h3, run_h4, run_iteration, IterationConfig, IterationError, IterationOutcome,
    LevelOutcome,
};
pub use possibilities::{
    enumerate_possibilities, EnumerationConfig, EnumerationError, Judgment, Possibility, PossibilitySet,
};
pub use reflection::{child_iteration, run_reflection, ReflectionError, DEFAULT_MAX_ACCEPTED, MIN_MAX_ACCEPTED};
pub use transcript::{Decision, ProposalRecord, Transcript, TranscriptEntry};
