//! Per-token observation features and their expansion into indicator
//! attribute strings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("position {index} out of range for a sentence of {len} words")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("prefix_max and suffix_max must be at least 1 (got {prefix_max}, {suffix_max})")]
    BadAffixLength { prefix_max: usize, suffix_max: usize },
}

/// Switches for the individual template items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureFlags {
    pub word: bool,
    pub is_first: bool,
    pub is_last: bool,
    pub is_capitalized: bool,
    pub is_all_caps: bool,
    pub is_all_lower: bool,
    pub capitals_inside: bool,
    pub has_hyphen: bool,
    pub is_numeric: bool,
    pub prev_word: bool,
    pub next_word: bool,
    pub prefixes: bool,
    pub suffixes: bool,
}

impl Default for FeatureFlags {
    fn default() -> Self {
        Self {
            word: true,
            is_first: true,
            is_last: true,
            is_capitalized: true,
            is_all_caps: true,
            is_all_lower: true,
            capitals_inside: true,
            has_hyphen: true,
            is_numeric: true,
            prev_word: true,
            next_word: true,
            prefixes: true,
            suffixes: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub prefix_max: usize,
    pub suffix_max: usize,
    #[serde(default)]
    pub flags: FeatureFlags,
}

impl FeatureConfig {
    pub fn new(prefix_max: usize, suffix_max: usize) -> Result<Self, FeatureError> {
        let config = Self {
            prefix_max,
            suffix_max,
            flags: FeatureFlags::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.prefix_max == 0 || self.suffix_max == 0 {
            return Err(FeatureError::BadAffixLength {
                prefix_max: self.prefix_max,
                suffix_max: self.suffix_max,
            });
        }
        Ok(())
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        // The serialized sample output goes up to suffix-4.
        Self {
            prefix_max: 3,
            suffix_max: 4,
            flags: FeatureFlags::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureValue {
    Bool(bool),
    Str(String),
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::Bool(b) => write!(f, "{b}"),
            FeatureValue::Str(s) => f.write_str(s),
        }
    }
}

/// Feature name to value, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureMap(BTreeMap<String, FeatureValue>);

impl FeatureMap {
    pub fn get(&self, key: &str) -> Option<&FeatureValue> {
        self.0.get(key)
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        match self.0.get(key)? {
            FeatureValue::Bool(b) => Some(*b),
            FeatureValue::Str(_) => None,
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        match self.0.get(key)? {
            FeatureValue::Str(s) => Some(s),
            FeatureValue::Bool(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FeatureValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn set_bool(&mut self, key: &str, value: bool) {
        self.0.insert(key.to_string(), FeatureValue::Bool(value));
    }

    fn set_str(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), FeatureValue::Str(value.into()));
    }

    /// Python-dict style rendering: `'key': 'value', 'flag': True`.
    pub fn to_dict_string(&self) -> String {
        let items: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| match v {
                FeatureValue::Bool(true) => format!("'{k}': True"),
                FeatureValue::Bool(false) => format!("'{k}': False"),
                FeatureValue::Str(s) => format!("'{k}': '{s}'"),
            })
            .collect();
        format!("{{{}}}", items.join(", "))
    }
}

fn is_cased(c: char) -> bool {
    c.is_uppercase() || c.is_lowercase()
}

/// Features of `sentence[t]` under `config`.
pub fn extract_token_features<S: AsRef<str>>(
    sentence: &[S],
    t: usize,
    config: &FeatureConfig,
) -> Result<FeatureMap, FeatureError> {
    if t >= sentence.len() {
        return Err(FeatureError::IndexOutOfRange {
            index: t,
            len: sentence.len(),
        });
    }
    let word = sentence[t].as_ref();
    let chars: Vec<char> = word.chars().collect();
    let flags = &config.flags;
    let mut fm = FeatureMap::default();

    if flags.word {
        fm.set_str("word", word);
    }
    if flags.is_first {
        fm.set_bool("is_first", t == 0);
    }
    if flags.is_last {
        fm.set_bool("is_last", t + 1 == sentence.len());
    }
    if flags.is_capitalized {
        fm.set_bool(
            "is_capitalized",
            chars.first().is_some_and(|c| c.is_uppercase()),
        );
    }
    let mut cased = chars.iter().copied().filter(|&c| is_cased(c)).peekable();
    let any_cased = cased.peek().is_some();
    let (mut all_upper, mut all_lower) = (true, true);
    for c in cased {
        all_upper &= c.is_uppercase();
        all_lower &= c.is_lowercase();
    }
    if flags.is_all_caps {
        fm.set_bool("is_all_caps", any_cased && all_upper);
    }
    if flags.is_all_lower {
        fm.set_bool("is_all_lower", any_cased && all_lower);
    }
    if flags.capitals_inside {
        fm.set_bool(
            "capitals_inside",
            chars.iter().skip(1).any(|c| c.is_uppercase()),
        );
    }
    if flags.has_hyphen {
        fm.set_bool("has_hyphen", word.contains('-'));
    }
    if flags.is_numeric {
        fm.set_bool(
            "is_numeric",
            !chars.is_empty() && chars.iter().all(char::is_ascii_digit),
        );
    }
    if flags.prev_word {
        let prev = if t == 0 { "" } else { sentence[t - 1].as_ref() };
        fm.set_str("prev_word", prev);
    }
    if flags.next_word {
        let next = sentence.get(t + 1).map_or("", |w| w.as_ref());
        fm.set_str("next_word", next);
    }
    if flags.prefixes {
        for k in 1..=config.prefix_max.min(chars.len()) {
            fm.set_str(format!("prefix-{k}"), chars[..k].iter().collect::<String>());
        }
    }
    if flags.suffixes {
        for k in 1..=config.suffix_max.min(chars.len()) {
            fm.set_str(
                format!("suffix-{k}"),
                chars[chars.len() - k..].iter().collect::<String>(),
            );
        }
    }
    Ok(fm)
}

/// Expands a feature map into `key=value` indicator attributes.
pub fn binarize(fm: &FeatureMap) -> BTreeSet<String> {
    fm.iter().map(|(k, v)| format!("{k}={v}")).collect()
}

/// Attribute sets for every position of a sentence, each sorted.
pub fn sentence_attributes<S: AsRef<str>>(
    sentence: &[S],
    config: &FeatureConfig,
) -> Vec<Vec<String>> {
    (0..sentence.len())
        .map(|t| {
            let fm = extract_token_features(sentence, t, config).expect("t is in range");
            binarize(&fm).into_iter().collect()
        })
        .collect()
}
