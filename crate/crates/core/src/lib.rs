//! Linear-chain conditional random fields for part-of-speech tagging.
//!
//! The crate covers the whole pipeline: `word/TAG` corpora ([`corpus`]),
//! per-token feature templates ([`features`]), CRF inference and training
//! ([`crf`], [`optim`]), evaluation ([`eval`]), a syllable-structure model
//! ([`phonotactics`]) and a synthetic corpus generator ([`datagen`]).

pub mod cli;
pub mod corpus;
pub mod crf;
pub mod datagen;
pub mod eval;
pub mod features;
pub mod optim;
pub mod phonotactics;

pub use corpus::{TagSet, TaggedCorpus};
pub use crf::ModelParameters;
