//! JSON model files. Every weight is written with 17 significant digits so
//! that reading a file back reproduces the exact bits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use super::{ModelParameters, TrainingInfo, Weights};
use crate::corpus::TagSet;
use crate::features::FeatureConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn exact(w: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{w:.16e}")).expect("formatted float is valid JSON")
}

fn exact_all(ws: &[f64]) -> Vec<Box<RawValue>> {
    ws.iter().copied().map(exact).collect()
}

#[derive(Serialize)]
struct TrainingOut {
    c1: Box<RawValue>,
    c2: Box<RawValue>,
    iterations: usize,
    final_objective: Box<RawValue>,
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: u32,
    tagset: &'a [String],
    feature_config: &'a FeatureConfig,
    attributes: &'a [String],
    state_weights: Vec<(usize, usize, Box<RawValue>)>,
    transitions: Vec<Box<RawValue>>,
    begin: Vec<Box<RawValue>>,
    end: Vec<Box<RawValue>>,
    training: TrainingOut,
}

#[derive(Deserialize)]
struct ModelFileIn {
    format_version: u32,
    tagset: TagSet,
    feature_config: FeatureConfig,
    attributes: Vec<String>,
    state_weights: Vec<(usize, usize, f64)>,
    transitions: Vec<f64>,
    begin: Vec<f64>,
    end: Vec<f64>,
    training: TrainingInfo,
}

impl ModelParameters {
    pub fn to_json(&self) -> String {
        let w = &self.weights;
        let k = self.num_tags();
        let state_weights = w
            .state_block()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i / k, i % k, exact(v)))
            .collect();
        let file = ModelFileOut {
            format_version: FORMAT_VERSION,
            tagset: self.tagset.names(),
            feature_config: &self.feature_config,
            attributes: &self.attributes,
            state_weights,
            transitions: exact_all(w.transition_block()),
            begin: exact_all(w.begin_block()),
            end: exact_all(w.end_block()),
            training: TrainingOut {
                c1: exact(self.training.c1),
                c2: exact(self.training.c2),
                iterations: self.training.iterations,
                final_objective: exact(self.training.final_objective),
            },
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelIoError> {
        let file: ModelFileIn = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(ModelIoError::Version(file.format_version));
        }
        file.feature_config
            .validate()
            .map_err(|e| ModelIoError::Invalid(e.to_string()))?;
        let k = file.tagset.len();
        let a = file.attributes.len();
        let invalid = |msg: String| Err(ModelIoError::Invalid(msg));
        if file.transitions.len() != k * k {
            return invalid(format!(
                "transitions has {} entries, expected {}",
                file.transitions.len(),
                k * k
            ));
        }
        if file.begin.len() != k || file.end.len() != k {
            return invalid(format!("begin/end must have {k} entries"));
        }
        let mut model = ModelParameters::new(file.tagset, file.feature_config, file.attributes);
        if model.num_attributes() != a {
            return invalid("attribute list contains duplicates".into());
        }
        let mut weights = Weights::zeros(a, k);
        for (attr, tag, w) in file.state_weights {
            if attr >= a || tag >= k {
                return invalid(format!("state weight index ({attr}, {tag}) out of range"));
            }
            weights.set_state(attr, tag, w);
        }
        for i in 0..k {
            for j in 0..k {
                weights.set_transition(i, j, file.transitions[i * k + j]);
            }
            weights.set_begin(i, file.begin[i]);
            weights.set_end(i, file.end[i]);
        }
        if weights.as_slice().iter().any(|w| !w.is_finite()) {
            return invalid("non-finite weight".into());
        }
        model.weights = weights;
        model.training = file.training;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ModelIoError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64) -> ModelParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attrs = (0..6).map(|i| format!("word=w{i}")).collect();
        let mut m = ModelParameters::new(TagSet::default(), FeatureConfig::default(), attrs);
        for w in m.weights.as_mut_slice() {
            if rng.gen_bool(0.6) {
                *w = rng.gen_range(-3.0..3.0) * 10f64.powi(rng.gen_range(-12..4));
            }
        }
        m.training = TrainingInfo {
            c1: 0.1,
            c2: 0.1,
            iterations: 42,
            final_objective: std::f64::consts::PI * 1e3,
        };
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for seed in 0..20 {
            let m = random_model(seed);
            let back = ModelParameters::from_json(&m.to_json()).unwrap();
            let bits = |m: &ModelParameters| {
                m.weights
                    .as_slice()
                    .iter()
                    .map(|w| w.to_bits())
                    .collect::<Vec<_>>()
            };
            assert_eq!(bits(&back), bits(&m));
            assert_eq!(back, m);
        }
    }

    #[test]
    fn writes_seventeen_significant_digits() {
        let mut m = ModelParameters::new(TagSet::new(["A"]).unwrap(), FeatureConfig::default(), vec![]);
        m.weights.set_begin(0, 0.1);
        let json = m.to_json();
        assert!(json.contains("1.0000000000000001e-1"), "{json}");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["tagset"][0], "A");
        assert_eq!(v["feature_config"]["suffix_max"], 4);
        assert!(v["state_weights"].as_array().unwrap().is_empty());
    }

    #[test]
    fn sparse_state_weights_list_nonzero_only() {
        let mut m = ModelParameters::new(
            TagSet::new(["A", "B"]).unwrap(),
            FeatureConfig::default(),
            vec!["x".into(), "y".into()],
        );
        m.weights.set_state(1, 0, -2.5);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        let sw = v["state_weights"].as_array().unwrap();
        assert_eq!(sw.len(), 1);
        assert_eq!(sw[0][0], 1);
        assert_eq!(sw[0][1], 0);
        assert_eq!(sw[0][2].as_f64(), Some(-2.5));
        assert_eq!(v["transitions"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn rejects_invalid_files() {
        let good = random_model(1).to_json();
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["format_version"] = 2.into();
        assert!(matches!(
            ModelParameters::from_json(&v.to_string()),
            Err(ModelIoError::Version(2))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["transitions"].as_array_mut().unwrap().pop();
        assert!(matches!(
            ModelParameters::from_json(&v.to_string()),
            Err(ModelIoError::Invalid(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["state_weights"] = serde_json::json!([[99, 0, 1.0]]);
        assert!(matches!(
            ModelParameters::from_json(&v.to_string()),
            Err(ModelIoError::Invalid(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
        v["tagset"] = serde_json::json!(["N", "N"]);
        assert!(matches!(
            ModelParameters::from_json(&v.to_string()),
            Err(ModelIoError::Json(_))
        ));
        assert!(ModelParameters::from_json("{").is_err());
    }
}
