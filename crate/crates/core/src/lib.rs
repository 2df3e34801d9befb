//! Content analysis and recommendation auditing for a corpus of video metadata.
//!
//! Stages: load a corpus ([`corpus`]), tokenize ([`textprep`]), score
//! sentiment ([`sentiment`]) and toxicity ([`toxicity`]), fit topics
//! ([`topics`]), build TF-IDF recommendations ([`simrec`]) and measure catalog
//! coverage ([`coverage`]). [`pipeline`] wires them together.

pub mod corpus;
pub mod coverage;
pub mod error;
pub mod pipeline;
pub mod seeds;
pub mod sentiment;
pub mod simrec;
pub mod synth;
pub mod textprep;
pub mod topics;
pub mod toxicity;

pub use corpus::{load_corpus, Corpus, LoadOptions, VideoRecord, YearMonth};
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
