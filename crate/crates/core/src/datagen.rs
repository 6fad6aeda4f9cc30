//! Seeded synthetic corpora whose tags are recoverable from a word-final
//! marker, for end-to-end checks of training and evaluation.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{serialize_tagged, Sentence, TagSet, TaggedCorpus, Token};
use crate::phonotactics::{generate_word_with, transliterate, PhonemeInventory};

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error("sentence length range {0}..={1} is empty or starts at zero")]
    BadLengthRange(usize, usize),
    #[error("marker {0:?} maps to unknown tag {1:?}")]
    UnknownTag(String, String),
    #[error("marker {0:?} is a suffix of marker {1:?}")]
    OverlappingMarkers(String, String),
    #[error("empty or whitespace-bearing marker {0:?}")]
    BadMarker(String),
    #[error("tag {0:?} has more than one marker")]
    DuplicateTagMarker(String),
    #[error("no sentence-final punctuation marker for tag {0:?}")]
    MissingPunctuation(&'static str),
    #[error("suffix rule needs at least one word tag besides {0:?}")]
    NoWordTags(&'static str),
}

/// Tag for the sentence-final punctuation token.
pub const PUNCT_TAG: &str = "SYM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_sentences: usize,
    /// Inclusive token-count bounds, final punctuation included.
    pub min_len: usize,
    pub max_len: usize,
    pub tagset: TagSet,
    /// Word-final marker to tag name. The `SYM` marker is emitted on its own
    /// as sentence-final punctuation.
    pub suffix_rule: BTreeMap<String, String>,
}

impl SynthConfig {
    pub fn new(seed: u64, n_sentences: usize) -> Self {
        Self {
            seed,
            n_sentences,
            min_len: 5,
            max_len: 20,
            tagset: TagSet::default(),
            suffix_rule: default_suffix_rule(),
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(DatagenError::BadLengthRange(self.min_len, self.max_len));
        }
        let mut seen_tags = BTreeMap::new();
        for (marker, tag) in &self.suffix_rule {
            if marker.is_empty() || marker.chars().any(|c| c.is_whitespace() || c == '/') {
                return Err(DatagenError::BadMarker(marker.clone()));
            }
            if self.tagset.index_of(tag).is_none() {
                return Err(DatagenError::UnknownTag(marker.clone(), tag.clone()));
            }
            if seen_tags.insert(tag.clone(), marker).is_some() {
                return Err(DatagenError::DuplicateTagMarker(tag.clone()));
            }
            for other in self.suffix_rule.keys() {
                if other != marker && other.ends_with(marker.as_str()) {
                    return Err(DatagenError::OverlappingMarkers(marker.clone(), other.clone()));
                }
            }
        }
        if !seen_tags.contains_key(PUNCT_TAG) {
            return Err(DatagenError::MissingPunctuation(PUNCT_TAG));
        }
        if seen_tags.len() < 2 {
            return Err(DatagenError::NoWordTags(PUNCT_TAG));
        }
        Ok(())
    }

    /// Word tags (every rule tag except the punctuation tag), in tagset order.
    fn word_tags(&self) -> Vec<(usize, &str)> {
        let mut tags: Vec<(usize, &str)> = self
            .suffix_rule
            .iter()
            .filter(|(_, tag)| tag.as_str() != PUNCT_TAG)
            .map(|(marker, tag)| (self.tagset.index_of(tag).expect("validated"), marker.as_str()))
            .collect();
        tags.sort();
        tags
    }

    /// Tag of the longest rule marker that ends `word`.
    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.suffix_rule
            .iter()
            .filter(|(marker, _)| word.ends_with(marker.as_str()))
            .max_by_key(|(marker, _)| marker.len())
            .map(|(_, tag)| tag.as_str())
    }
}

/// Three-letter marker per word tag plus `.` for punctuation.
pub fn default_suffix_rule() -> BTreeMap<String, String> {
    [
        ("adj", "ADJ"),
        ("adv", "ADV"),
        ("cnj", "CONJ"),
        ("cmp", "CMP"),
        ("det", "DET"),
        ("ppo", "PP"),
        ("itj", "INTJ"),
        ("nou", "N"),
        ("prn", "PN"),
        ("qnt", "QN"),
        ("vrb", "V"),
        ("fwd", "FW"),
        ("unk", "UNK"),
        ("num", "NUM"),
        (".", "SYM"),
    ]
    .into_iter()
    .map(|(m, t)| (m.to_string(), t.to_string()))
    .collect()
}

/// Row-stochastic transition matrix over `n` word tags. Each row favours a
/// few successors so the chain has visible structure.
pub fn markov_chain(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let raw: Vec<f64> = (0..n)
                .map(|j| 1.0 + ((3 * i + 5 * j) % 7) as f64 + if j == (i + 1) % n { 6.0 } else { 0.0 })
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|w| w / total).collect()
        })
        .collect()
}

/// Stationary distribution of `chain` by power iteration.
pub fn stationary(chain: &[Vec<f64>]) -> Vec<f64> {
    let n = chain.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| pi[i] * chain[i][j]).sum())
            .collect();
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// Generates the corpus described by `config`. Each sentence starts from the
/// chain's stationary distribution, so every position has the same tag law.
pub fn generate(config: &SynthConfig) -> Result<TaggedCorpus, DatagenError> {
    config.validate()?;
    let inv = PhonemeInventory::default();
    let word_tags = config.word_tags();
    let chain = markov_chain(word_tags.len());
    let start = WeightedIndex::new(stationary(&chain)).expect("positive weights");
    let rows: Vec<WeightedIndex<f64>> = chain
        .iter()
        .map(|row| WeightedIndex::new(row).expect("positive weights"))
        .collect();
    let (punct_marker, _) = config
        .suffix_rule
        .iter()
        .find(|(_, tag)| tag.as_str() == PUNCT_TAG)
        .expect("validated");
    let punct_tag = config.tagset.index_of(PUNCT_TAG).expect("validated");

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sentences = Vec::with_capacity(config.n_sentences);
    for _ in 0..config.n_sentences {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut tokens = Vec::with_capacity(len);
        let mut state = start.sample(&mut rng);
        for position in 0..len - 1 {
            if position > 0 {
                state = rows[state].sample(&mut rng);
            }
            let (tag, marker) = word_tags[state];
            let syllables = rng.gen_range(1..=3);
            let stem = generate_word_with(&mut rng, syllables, &inv).expect("count in range");
            let word = format!("{}{marker}", transliterate(&stem));
            tokens.push(Token { word, tag });
        }
        tokens.push(Token {
            word: punct_marker.clone(),
            tag: punct_tag,
        });
        sentences.push(Sentence::new(tokens).expect("non-empty"));
    }
    Ok(TaggedCorpus::new(sentences))
}

/// Corpus file text with the config echoed as a leading `# ` JSON line.
pub fn render_with_header(config: &SynthConfig, corpus: &TaggedCorpus) -> String {
    let header = serde_json::to_string(config).expect("config serializes");
    format!("# {header}\n{}", serialize_tagged(corpus, &config.tagset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_tagged, UnknownTagPolicy};

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig::new(11, 40);
        let a = render_with_header(&cfg, &generate(&cfg).unwrap());
        let b = render_with_header(&cfg, &generate(&cfg).unwrap());
        assert_eq!(a, b);
        let other = SynthConfig::new(12, 40);
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn tags_follow_suffix_rule() {
        let cfg = SynthConfig::new(3, 200);
        let corpus = generate(&cfg).unwrap();
        for s in corpus.sentences() {
            assert!((cfg.min_len..=cfg.max_len).contains(&s.len()));
            assert_eq!(s.tokens().last().unwrap().word, ".");
            for tok in s.tokens() {
                assert_eq!(cfg.lookup(&tok.word), cfg.tagset.name(tok.tag));
            }
        }
    }

    #[test]
    fn header_line_is_skipped_by_parser() {
        let cfg = SynthConfig::new(5, 10);
        let corpus = generate(&cfg).unwrap();
        let text = render_with_header(&cfg, &corpus);
        assert!(text.starts_with("# {"));
        let back = parse_tagged(&text, &cfg.tagset, UnknownTagPolicy::Reject).unwrap();
        assert_eq!(back, corpus);
        let header: SynthConfig = serde_json::from_str(&text.lines().next().unwrap()[2..]).unwrap();
        assert_eq!(header, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SynthConfig::new(0, 1);
        cfg.suffix_rule.insert("xnou".into(), "NUM".into());
        assert!(matches!(cfg.validate(), Err(DatagenError::DuplicateTagMarker(_)) | Err(DatagenError::OverlappingMarkers(..))));
        let mut cfg = SynthConfig::new(0, 1);
        cfg.suffix_rule.insert("zz".into(), "NOPE".into());
        assert!(matches!(cfg.validate(), Err(DatagenError::UnknownTag(..))));
        let mut cfg = SynthConfig::new(0, 1);
        cfg.suffix_rule.remove(".");
        assert_eq!(cfg.validate(), Err(DatagenError::MissingPunctuation("SYM")));
        let mut cfg = SynthConfig::new(0, 1);
        cfg.min_len = 9;
        cfg.max_len = 3;
        assert!(matches!(cfg.validate(), Err(DatagenError::BadLengthRange(9, 3))));
        let mut cfg = SynthConfig::new(0, 1);
        cfg.suffix_rule = [(".".to_string(), "SYM".to_string())].into();
        assert_eq!(cfg.validate(), Err(DatagenError::NoWordTags("SYM")));
    }

    #[test]
    fn chain_rows_are_stochastic() {
        let chain = markov_chain(14);
        for row in &chain {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let pi = stationary(&chain);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..14 {
            let back: f64 = (0..14).map(|i| pi[i] * chain[i][j]).sum();
            assert!((back - pi[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn tag_frequencies_approach_stationary_law() {
        let mut cfg = SynthConfig::new(2024, 5000);
        cfg.min_len = 10;
        cfg.max_len = 15;
        let corpus = generate(&cfg).unwrap();
        let word_tags = cfg.word_tags();
        let pi = stationary(&markov_chain(word_tags.len()));
        let mut counts = vec![0usize; word_tags.len()];
        for tok in corpus.tokens() {
            if let Some(i) = word_tags.iter().position(|&(t, _)| t == tok.tag) {
                counts[i] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        assert!(total >= 50_000, "only {total} word tokens");
        let tv: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.05, "total variation {tv}");
    }
}
