//! Linear-chain CRF: parameters, lattice inference, training objective,
//! decoding and persistence.

mod lattice;
mod model_io;
mod objective;
mod train;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Sentence, TagSet, Token};
use crate::features::{sentence_attributes, FeatureConfig};

pub use lattice::{
    build_lattice, logsumexp, posterior_marginals, sequence_log_score, viterbi, Lattice, Marginals,
    StateScores,
};
pub use model_io::ModelIoError;
pub use objective::{encode_sentence, nll_and_gradient, CrfObjective, Instance};
pub use train::{train, TrainConfig, TrainError, TrainOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum CrfError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("length mismatch: {attrs} positions but {tags} tags")]
    LengthMismatch { attrs: usize, tags: usize },
    #[error("tag index {tag} out of range for {num_tags} tags")]
    TagOutOfRange { tag: usize, num_tags: usize },
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Flat parameter vector laid out as
/// `[state (A x K, attribute-major) | transitions (K x K) | begin (K) | end (K)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    num_attributes: usize,
    num_tags: usize,
    data: Vec<f64>,
}

impl Weights {
    pub fn zeros(num_attributes: usize, num_tags: usize) -> Self {
        let len = Self::len_for(num_attributes, num_tags);
        Self {
            num_attributes,
            num_tags,
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(num_attributes: usize, num_tags: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), Self::len_for(num_attributes, num_tags));
        Self {
            num_attributes,
            num_tags,
            data,
        }
    }

    pub fn len_for(num_attributes: usize, num_tags: usize) -> usize {
        num_attributes * num_tags + num_tags * num_tags + 2 * num_tags
    }

    pub fn num_attributes(&self) -> usize {
        self.num_attributes
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn transition_offset(&self) -> usize {
        self.num_attributes * self.num_tags
    }

    fn begin_offset(&self) -> usize {
        self.transition_offset() + self.num_tags * self.num_tags
    }

    fn end_offset(&self) -> usize {
        self.begin_offset() + self.num_tags
    }

    pub fn state_index(&self, attribute: usize, tag: usize) -> usize {
        attribute * self.num_tags + tag
    }

    pub fn transition_index(&self, from: usize, to: usize) -> usize {
        self.transition_offset() + from * self.num_tags + to
    }

    pub fn begin_index(&self, tag: usize) -> usize {
        self.begin_offset() + tag
    }

    pub fn end_index(&self, tag: usize) -> usize {
        self.end_offset() + tag
    }

    pub fn state(&self, attribute: usize, tag: usize) -> f64 {
        self.data[self.state_index(attribute, tag)]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.data[self.transition_index(from, to)]
    }

    pub fn begin(&self, tag: usize) -> f64 {
        self.data[self.begin_index(tag)]
    }

    pub fn end(&self, tag: usize) -> f64 {
        self.data[self.end_index(tag)]
    }

    pub fn set_state(&mut self, attribute: usize, tag: usize, w: f64) {
        let i = self.state_index(attribute, tag);
        self.data[i] = w;
    }

    pub fn set_transition(&mut self, from: usize, to: usize, w: f64) {
        let i = self.transition_index(from, to);
        self.data[i] = w;
    }

    pub fn set_begin(&mut self, tag: usize, w: f64) {
        let i = self.begin_index(tag);
        self.data[i] = w;
    }

    pub fn set_end(&mut self, tag: usize, w: f64) {
        let i = self.end_index(tag);
        self.data[i] = w;
    }

    /// Attribute-major A x K block.
    pub fn state_block(&self) -> &[f64] {
        &self.data[..self.transition_offset()]
    }

    /// Row-major K x K block, row = previous tag.
    pub fn transition_block(&self) -> &[f64] {
        &self.data[self.transition_offset()..self.begin_offset()]
    }

    pub fn begin_block(&self) -> &[f64] {
        &self.data[self.begin_offset()..self.end_offset()]
    }

    pub fn end_block(&self) -> &[f64] {
        &self.data[self.end_offset()..]
    }

    pub fn nonzero_state_weights(&self) -> usize {
        self.state_block().iter().filter(|&&w| w != 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub c1: f64,
    pub c2: f64,
    pub iterations: usize,
    pub final_objective: f64,
}

/// A trained (or hand-built) chain CRF.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    tagset: TagSet,
    feature_config: FeatureConfig,
    attributes: Vec<String>,
    attribute_index: HashMap<String, usize>,
    pub weights: Weights,
    pub training: TrainingInfo,
}

impl ModelParameters {
    /// Zero-weight model over the given attribute vocabulary. Duplicate
    /// attributes are dropped, keeping first occurrence.
    pub fn new(tagset: TagSet, feature_config: FeatureConfig, attributes: Vec<String>) -> Self {
        let mut attribute_index = HashMap::with_capacity(attributes.len());
        let mut unique = Vec::with_capacity(attributes.len());
        for a in attributes {
            if !attribute_index.contains_key(&a) {
                attribute_index.insert(a.clone(), unique.len());
                unique.push(a);
            }
        }
        let weights = Weights::zeros(unique.len(), tagset.len());
        Self {
            tagset,
            feature_config,
            attributes: unique,
            attribute_index,
            weights,
            training: TrainingInfo::default(),
        }
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.feature_config
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn attribute_id(&self, attribute: &str) -> Option<usize> {
        self.attribute_index.get(attribute).copied()
    }

    pub fn num_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    /// Maps attribute strings to ids, dropping unknown ones.
    pub fn encode_attributes<S: AsRef<str>>(&self, attrs: &[Vec<S>]) -> Vec<Vec<usize>> {
        attrs
            .iter()
            .map(|pos| {
                pos.iter()
                    .filter_map(|a| self.attribute_id(a.as_ref()))
                    .collect()
            })
            .collect()
    }

    /// Viterbi tags for a word sequence using the model's own feature config.
    pub fn tag<S: AsRef<str>>(&self, words: &[S]) -> Result<Sentence, CrfError> {
        tag_sentence(self, &self.feature_config, words)
    }
}

/// Extracts features, decodes, and attaches the predicted tags.
pub fn tag_sentence<S: AsRef<str>>(
    model: &ModelParameters,
    config: &FeatureConfig,
    words: &[S],
) -> Result<Sentence, CrfError> {
    if words.is_empty() {
        return Err(CrfError::EmptySequence);
    }
    let attrs = sentence_attributes(words, config);
    let (tags, _) = viterbi(model, &attrs)?;
    let tokens = words
        .iter()
        .zip(tags)
        .map(|(w, tag)| Token {
            word: w.as_ref().to_string(),
            tag,
        })
        .collect();
    Ok(Sentence::new(tokens).expect("non-empty"))
}
