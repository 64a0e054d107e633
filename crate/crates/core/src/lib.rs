//! Knowledge-prompted quality estimation for machine translation.
//!
//! The crate is organised around the evaluation pipeline:
//!
//! - [`corpus`]: ingestion of segments, system outputs and relative-ranking judgments
//! - [`prompting`]: versioned prompt templates and rendering
//! - [`backend`]: completion providers, the content-addressed cache, batch execution
//! - [`parsing`]: typed scores recovered from free-form completions
//! - [`chains`]: one-step and chain-of-thought estimators
//! - [`metrics`]: segment-level Kendall tau, system-level pairwise accuracy, scorer distributions
//! - [`alignment`]: token alignment matrices and SVG heatmaps
//! - [`cli`]: the `kpe` command line surface and report generation

pub mod alignment;
pub mod backend;
pub mod chains;
pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod parsing;
pub mod prompting;

pub use corpus::{EvalDataset, LanguagePair, RRJudgment, Segment, SystemOutput};
pub use prompting::{PromptTemplate, RenderedPrompt, TemplateRegistry};
