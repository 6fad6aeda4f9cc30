use rayon::prelude::*;

use super::lattice::{path_score, Lattice, StateScores};
use super::{CrfError, ModelParameters, Weights};
use crate::corpus::Sentence;
use crate::features::{sentence_attributes, FeatureConfig};

/// One training sequence with attributes already mapped to ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub attrs: Vec<Vec<usize>>,
    pub tags: Vec<usize>,
}

pub fn encode_sentence(
    model: &ModelParameters,
    config: &FeatureConfig,
    sentence: &Sentence,
) -> Instance {
    let attrs = sentence_attributes(&sentence.words(), config);
    Instance {
        attrs: model.encode_attributes(&attrs),
        tags: sentence.tags(),
    }
}

/// Number of slices the batch is cut into for parallel evaluation. Fixed so
/// the summation order, and therefore the result, does not depend on the
/// thread count.
const DEFAULT_CHUNKS: usize = 8;

/// L2-regularized negative conditional log-likelihood over a fixed batch.
#[derive(Debug, Clone)]
pub struct CrfObjective {
    num_attributes: usize,
    num_tags: usize,
    instances: Vec<Instance>,
    c2: f64,
}

impl CrfObjective {
    pub fn new(
        num_attributes: usize,
        num_tags: usize,
        instances: Vec<Instance>,
        c2: f64,
    ) -> Result<Self, CrfError> {
        if instances.is_empty() {
            return Err(CrfError::EmptyBatch);
        }
        for inst in &instances {
            if inst.attrs.len() != inst.tags.len() {
                return Err(CrfError::LengthMismatch {
                    attrs: inst.attrs.len(),
                    tags: inst.tags.len(),
                });
            }
            if inst.tags.is_empty() {
                return Err(CrfError::EmptySequence);
            }
            if let Some(&tag) = inst.tags.iter().find(|&&y| y >= num_tags) {
                return Err(CrfError::TagOutOfRange { tag, num_tags });
            }
        }
        Ok(Self {
            num_attributes,
            num_tags,
            instances,
            c2,
        })
    }

    pub fn dimension(&self) -> usize {
        Weights::len_for(self.num_attributes, self.num_tags)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>), CrfError> {
        self.evaluate_chunked(x, DEFAULT_CHUNKS)
    }

    /// Evaluates with the batch cut into `chunks` contiguous slices, summed
    /// in slice order.
    pub fn evaluate_chunked(&self, x: &[f64], chunks: usize) -> Result<(f64, Vec<f64>), CrfError> {
        assert_eq!(x.len(), self.dimension());
        let weights = Weights::from_vec(self.num_attributes, self.num_tags, x.to_vec());
        let chunk_len = self.instances.len().div_ceil(chunks.max(1));
        let partials: Vec<(f64, Vec<f64>)> = self
            .instances
            .par_chunks(chunk_len)
            .map(|chunk| {
                let mut grad = vec![0.0; x.len()];
                let mut value = 0.0;
                for inst in chunk {
                    value += accumulate(&weights, inst, &mut grad)?;
                }
                Ok((value, grad))
            })
            .collect::<Result<_, CrfError>>()?;

        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (v, g) in partials {
            value += v;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        if self.c2 > 0.0 {
            for (gi, &wi) in grad.iter_mut().zip(x) {
                value += self.c2 * wi * wi;
                *gi += 2.0 * self.c2 * wi;
            }
        }
        if !value.is_finite() {
            return Err(CrfError::NonFinite("objective"));
        }
        Ok((value, grad))
    }
}

/// Adds expected-minus-observed counts of one sequence into `grad` and
/// returns `log Z - score(gold)`.
fn accumulate(weights: &Weights, inst: &Instance, grad: &mut [f64]) -> Result<f64, CrfError> {
    let k = weights.num_tags();
    let scores = StateScores::from_encoded(weights, &inst.attrs);
    let gold = path_score(&scores, weights, &inst.tags)?;
    let lattice = Lattice::compute(scores, weights)?;
    let marginals = lattice.marginals(weights);
    let n = inst.tags.len();

    for (t, active) in inst.attrs.iter().enumerate() {
        let row = marginals.unary_row(t);
        for &a in active {
            let base = weights.state_index(a, 0);
            for (g, p) in grad[base..base + k].iter_mut().zip(row) {
                *g += p;
            }
            grad[base + inst.tags[t]] -= 1.0;
        }
    }
    let trans = weights.transition_index(0, 0);
    for t in 0..n - 1 {
        for (g, p) in grad[trans..trans + k * k]
            .iter_mut()
            .zip(marginals.pairwise_slice(t))
        {
            *g += p;
        }
        grad[weights.transition_index(inst.tags[t], inst.tags[t + 1])] -= 1.0;
    }
    let begin = weights.begin_index(0);
    for (g, p) in grad[begin..begin + k].iter_mut().zip(marginals.unary_row(0)) {
        *g += p;
    }
    grad[weights.begin_index(inst.tags[0])] -= 1.0;
    let end = weights.end_index(0);
    for (g, p) in grad[end..end + k].iter_mut().zip(marginals.unary_row(n - 1)) {
        *g += p;
    }
    grad[weights.end_index(inst.tags[n - 1])] -= 1.0;

    let nll = lattice.log_z() - gold;
    if !nll.is_finite() {
        return Err(CrfError::NonFinite("sequence likelihood"));
    }
    Ok(nll)
}

/// `sum(log Z - gold score) + c2 |w|^2` and its gradient at the model's
/// current weights.
pub fn nll_and_gradient<S: AsRef<str>>(
    model: &ModelParameters,
    batch: &[(Vec<Vec<S>>, Vec<usize>)],
    c2: f64,
) -> Result<(f64, Weights), CrfError> {
    let instances = batch
        .iter()
        .map(|(attrs, tags)| Instance {
            attrs: model.encode_attributes(attrs),
            tags: tags.clone(),
        })
        .collect();
    let objective = CrfObjective::new(model.num_attributes(), model.num_tags(), instances, c2)?;
    let (value, grad) = objective.evaluate(model.weights.as_slice())?;
    Ok((
        value,
        Weights::from_vec(model.num_attributes(), model.num_tags(), grad),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TagSet;

    #[test]
    fn uniform_single_token() {
        let tags = TagSet::new(["A", "B", "C", "D"]).unwrap();
        let m = ModelParameters::new(
            tags,
            FeatureConfig::default(),
            vec!["f1".into(), "f2".into(), "idle".into()],
        );
        let batch = vec![(vec![vec!["f1", "f2"]], vec![2])];
        let (value, grad) = nll_and_gradient(&m, &batch, 0.0).unwrap();
        assert!((value - 4f64.ln()).abs() < 1e-12);
        for a in 0..2 {
            for y in 0..4 {
                let expect = if y == 2 { 0.25 - 1.0 } else { 0.25 };
                assert!((grad.state(a, y) - expect).abs() < 1e-12);
            }
        }
        assert!(grad.state_block()[8..].iter().all(|&g| g == 0.0));
        assert!(grad.transition_block().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn rejects_bad_batches() {
        let m = ModelParameters::new(TagSet::default(), FeatureConfig::default(), vec![]);
        let empty: Vec<(Vec<Vec<&str>>, Vec<usize>)> = vec![];
        assert_eq!(nll_and_gradient(&m, &empty, 0.0).unwrap_err(), CrfError::EmptyBatch);
        let bad = vec![(vec![Vec::<&str>::new(); 2], vec![0])];
        assert!(matches!(
            nll_and_gradient(&m, &bad, 0.0),
            Err(CrfError::LengthMismatch { .. })
        ));
        let bad = vec![(vec![Vec::<&str>::new()], vec![99])];
        assert!(matches!(
            nll_and_gradient(&m, &bad, 0.0),
            Err(CrfError::TagOutOfRange { .. })
        ));
    }

    #[test]
    fn l2_term_adds_to_value_and_gradient() {
        let tags = TagSet::new(["A", "B"]).unwrap();
        let mut m = ModelParameters::new(tags, FeatureConfig::default(), vec!["x".into()]);
        m.weights.set_state(0, 1, 0.5);
        m.weights.set_end(0, -1.0);
        let batch = vec![(vec![vec!["x"]], vec![1])];
        let (v0, g0) = nll_and_gradient(&m, &batch, 0.0).unwrap();
        let (v1, g1) = nll_and_gradient(&m, &batch, 0.3).unwrap();
        assert!((v1 - v0 - 0.3 * (0.25 + 1.0)).abs() < 1e-12);
        assert!((g1.state(0, 1) - g0.state(0, 1) - 0.3).abs() < 1e-12);
        assert!((g1.end(0) - g0.end(0) + 0.6).abs() < 1e-12);
    }
}
