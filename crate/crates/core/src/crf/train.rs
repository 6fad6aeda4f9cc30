use std::collections::BTreeSet;

use thiserror::Error;

use super::{CrfError, CrfObjective, ModelParameters, TrainingInfo, Weights};
use crate::corpus::{CorpusError, TagSet, TaggedCorpus};
use crate::features::{sentence_attributes, FeatureConfig, FeatureError};
use crate::optim::{minimize_with_observer, IterationRecord, IterationTrace, OptimConfig, OptimError, StopReason};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrainConfig {
    pub features: FeatureConfig,
    pub optim: OptimConfig,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParameters,
    pub trace: IterationTrace,
    pub stop: StopReason,
}

/// Fits a model on `corpus`, starting from all-zero weights. The attribute
/// vocabulary is every attribute seen in the corpus, sorted.
pub fn train<O>(
    corpus: &TaggedCorpus,
    tagset: &TagSet,
    config: &TrainConfig,
    observer: O,
) -> Result<TrainOutcome, TrainError>
where
    O: FnMut(&IterationRecord),
{
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    config.features.validate()?;
    config.optim.validate()?;
    corpus.validate(tagset)?;

    let per_sentence: Vec<Vec<Vec<String>>> = corpus
        .sentences()
        .iter()
        .map(|s| sentence_attributes(&s.words(), &config.features))
        .collect();
    let vocabulary: BTreeSet<&String> = per_sentence.iter().flatten().flatten().collect();
    let mut model = ModelParameters::new(
        tagset.clone(),
        config.features,
        vocabulary.into_iter().cloned().collect(),
    );
    let instances = per_sentence
        .iter()
        .zip(corpus.sentences())
        .map(|(attrs, s)| super::Instance {
            attrs: model.encode_attributes(attrs),
            tags: s.tags(),
        })
        .collect();
    let objective = CrfObjective::new(
        model.num_attributes(),
        model.num_tags(),
        instances,
        config.optim.c2,
    )?;

    let x0 = vec![0.0; objective.dimension()];
    let minimum = minimize_with_observer(
        |x: &[f64]| match objective.evaluate(x) {
            Ok(r) => r,
            // The optimizer turns this into a NonFinite error.
            Err(_) => (f64::NAN, vec![0.0; x.len()]),
        },
        x0,
        &config.optim,
        observer,
    )?;

    model.weights = Weights::from_vec(model.num_attributes(), model.num_tags(), minimum.x);
    model.training = TrainingInfo {
        c1: config.optim.c1,
        c2: config.optim.c2,
        iterations: minimum.iterations,
        final_objective: minimum.objective,
    };
    Ok(TrainOutcome {
        model,
        trace: minimum.trace,
        stop: minimum.stop,
    })
}
