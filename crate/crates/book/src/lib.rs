//! The guide's chapters as doc-tests, so `cargo test` runs every snippet
//! in `book/src`. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/analyses.md")]
pub mod analyses {}
#[doc = include_str!("../../../book/src/dialogue.md")]
pub mod dialogue {}
#[doc = include_str!("../../../book/src/planning.md")]
pub mod planning {}
#[doc = include_str!("../../../book/src/benchmarks.md")]
pub mod benchmarks {}
#[doc = include_str!("../../../book/src/riskmit.md")]
pub mod riskmit {}
#[doc = include_str!("../../../book/src/workspace.md")]
pub mod workspace {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
