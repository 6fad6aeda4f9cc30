//! Annotated `word/TAG` corpora: tagset, parsing, serialization, splitting,
//! tag statistics and inter-annotator agreement.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tags of the built-in tagset, in index order.
pub const DEFAULT_TAGS: [&str; 15] = [
    "ADJ", "ADV", "CONJ", "CMP", "DET", "PP", "INTJ", "N", "PN", "QN", "V", "FW", "SYM", "UNK",
    "NUM",
];

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}, column {column}: token {token:?} has no '/' separator")]
    MissingSeparator {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: token {token:?} has an empty word")]
    EmptyWord {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: token {token:?} has an empty tag")]
    EmptyTag {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: token {token:?} uses unknown tag {tag:?}")]
    UnknownTag {
        line: usize,
        column: usize,
        token: String,
        tag: String,
    },
    #[error("unknown tag {0:?}")]
    NoSuchTag(String),
    #[error("invalid tag name {0:?}: tags must be non-empty uppercase ASCII letters")]
    InvalidTagName(String),
    #[error("duplicate tag name {0:?}")]
    DuplicateTag(String),
    #[error("tagset is empty")]
    EmptyTagSet,
    #[error("tag {0:?} is required by the unknown-tag policy but missing from the tagset")]
    MissingUnkTag(&'static str),
    #[error("invalid word {0:?}: words must be non-empty and contain no whitespace")]
    InvalidWord(String),
    #[error("tag index {index} out of range for a tagset of {len} tags")]
    TagOutOfRange { index: usize, len: usize },
    #[error("a sentence must contain at least one token")]
    EmptySentence,
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error("train fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("corpora differ in structure: {0}")]
    StructureMismatch(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Ordered, closed inventory of tag names. Position defines the tag index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(into = "Vec<String>")]
pub struct TagSet {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TagSet {
    pub fn new<I, S>(names: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(CorpusError::EmptyTagSet);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || !name.bytes().all(|b| b.is_ascii_uppercase()) {
                return Err(CorpusError::InvalidTagName(name.clone()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(CorpusError::DuplicateTag(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    /// Reads one tag name per line; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Like [`TagSet::index_of`] but reports a missing tag as an error.
    pub fn require(&self, name: &str) -> Result<usize, CorpusError> {
        self.index_of(name)
            .ok_or_else(|| CorpusError::NoSuchTag(name.to_string()))
    }
}

impl Default for TagSet {
    fn default() -> Self {
        Self::new(DEFAULT_TAGS).expect("built-in tagset is valid")
    }
}

impl From<TagSet> for Vec<String> {
    fn from(tagset: TagSet) -> Self {
        tagset.names
    }
}

impl<'de> Deserialize<'de> for TagSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        TagSet::new(names).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub word: String,
    pub tag: usize,
}

impl Token {
    pub fn new(word: impl Into<String>, tag: usize) -> Result<Self, CorpusError> {
        let word = word.into();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidWord(word));
        }
        Ok(Self { word, tag })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.word.as_str()).collect()
    }

    pub fn tags(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.tag).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaggedCorpus {
    sentences: Vec<Sentence>,
}

impl TaggedCorpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Self { sentences }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    /// Checks every tag index against `tagset`.
    pub fn validate(&self, tagset: &TagSet) -> Result<(), CorpusError> {
        match self.tokens().find(|t| t.tag >= tagset.len()) {
            Some(t) => Err(CorpusError::TagOutOfRange {
                index: t.tag,
                len: tagset.len(),
            }),
            None => Ok(()),
        }
    }
}

/// What to do with a tag that is not part of the tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownTagPolicy {
    #[default]
    Reject,
    MapToUnk,
}

const UNK_TAG: &str = "UNK";

/// A line is a comment when it is exactly `#` or starts with `# `. Such a line
/// can never be a sentence because its first token would lack a separator.
fn is_comment(line: &str) -> bool {
    line == "#" || line.starts_with("# ")
}

/// Splits `line` on whitespace runs, yielding each piece with its 1-based
/// character column.
fn tokens_with_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut column = 0usize;
    let mut rest = line;
    std::iter::from_fn(move || {
        let skipped = rest.len() - rest.trim_start().len();
        column += rest[..skipped].chars().count();
        rest = &rest[skipped..];
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let piece = &rest[..end];
        let start = column + 1;
        column += piece.chars().count();
        rest = &rest[end..];
        Some((start, piece))
    })
}

/// Parses `word/TAG` text: one sentence per non-blank line, the tag being
/// everything after the last `/` of each token.
pub fn parse_tagged(
    text: &str,
    tagset: &TagSet,
    policy: UnknownTagPolicy,
) -> Result<TaggedCorpus, CorpusError> {
    let unk = match policy {
        UnknownTagPolicy::Reject => None,
        UnknownTagPolicy::MapToUnk => Some(
            tagset
                .index_of(UNK_TAG)
                .ok_or(CorpusError::MissingUnkTag(UNK_TAG))?,
        ),
    };
    let mut sentences = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_comment(trimmed) {
            continue;
        }
        let mut tokens = Vec::new();
        for (column, piece) in tokens_with_columns(line) {
            let err_ctx = || (line_no, column, piece.to_string());
            let Some(split) = piece.rfind('/') else {
                let (line, column, token) = err_ctx();
                return Err(CorpusError::MissingSeparator {
                    line,
                    column,
                    token,
                });
            };
            let (word, tag) = (&piece[..split], &piece[split + 1..]);
            if word.is_empty() {
                let (line, column, token) = err_ctx();
                return Err(CorpusError::EmptyWord {
                    line,
                    column,
                    token,
                });
            }
            if tag.is_empty() {
                let (line, column, token) = err_ctx();
                return Err(CorpusError::EmptyTag {
                    line,
                    column,
                    token,
                });
            }
            let tag = match (tagset.index_of(tag), unk) {
                (Some(index), _) => index,
                (None, Some(unk)) => unk,
                (None, None) => {
                    let (line, column, token) = err_ctx();
                    return Err(CorpusError::UnknownTag {
                        line,
                        column,
                        token,
                        tag: tag.to_string(),
                    });
                }
            };
            tokens.push(Token {
                word: word.to_string(),
                tag,
            });
        }
        sentences.push(Sentence { tokens });
    }
    Ok(TaggedCorpus { sentences })
}

pub fn read_tagged(
    path: impl AsRef<Path>,
    tagset: &TagSet,
    policy: UnknownTagPolicy,
) -> Result<TaggedCorpus, CorpusError> {
    parse_tagged(&read_file(path.as_ref())?, tagset, policy)
}

/// Renders a corpus as `word/TAG` lines, one sentence per line.
pub fn serialize_tagged(corpus: &TaggedCorpus, tagset: &TagSet) -> String {
    let mut out = String::new();
    for sentence in &corpus.sentences {
        for (i, token) in sentence.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&token.word);
            out.push('/');
            out.push_str(tagset.name(token.tag).unwrap_or(UNK_TAG));
        }
        out.push('\n');
    }
    out
}

/// Parses untagged text: one sentence per non-blank line, whitespace tokens.
pub fn parse_raw(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect()
}

pub(crate) fn read_file(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Gold counts per tag index; tags that never occur count 0.
pub fn tag_frequencies(corpus: &TaggedCorpus, tagset: &TagSet) -> Vec<usize> {
    let mut counts = vec![0usize; tagset.len()];
    for token in corpus.tokens() {
        counts[token.tag] += 1;
    }
    counts
}

/// Sentence-level shuffled split. The first `floor(fraction * n)` sentences of
/// a seeded permutation go to the training side.
pub fn split_corpus(
    corpus: &TaggedCorpus,
    train_fraction: f64,
    seed: u64,
) -> Result<(TaggedCorpus, TaggedCorpus), CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let n = corpus.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // The epsilon keeps products like 0.29 * 100 from flooring one short.
    let n_train = ((train_fraction * n as f64 + 1e-9).floor() as usize).min(n);
    let pick = |idx: &[usize]| TaggedCorpus {
        sentences: idx.iter().map(|&i| corpus.sentences[i].clone()).collect(),
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub total_tokens: usize,
    pub disagreed: usize,
    pub disagreed_on_excluded_tag: usize,
    pub rate: f64,
    pub rate_excluding: f64,
}

impl AgreementReport {
    /// Both rates share the full token count as denominator.
    pub fn from_counts(
        total_tokens: usize,
        disagreed: usize,
        disagreed_on_excluded_tag: usize,
    ) -> Self {
        assert!(disagreed_on_excluded_tag <= disagreed && disagreed <= total_tokens);
        let (rate, rate_excluding) = if total_tokens == 0 {
            (0.0, 0.0)
        } else {
            let total = total_tokens as f64;
            (
                disagreed as f64 / total,
                (disagreed - disagreed_on_excluded_tag) as f64 / total,
            )
        };
        Self {
            total_tokens,
            disagreed,
            disagreed_on_excluded_tag,
            rate,
            rate_excluding,
        }
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tokens compared:         {}", self.total_tokens)?;
        writeln!(f, "disagreements:           {}", self.disagreed)?;
        writeln!(f, "  on excluded tag:       {}", self.disagreed_on_excluded_tag)?;
        writeln!(f, "disagreement:            {:.2}%", self.rate * 100.0)?;
        write!(
            f,
            "disagreement (excluded): {:.2}%",
            self.rate_excluding * 100.0
        )
    }
}

/// Verifies two corpora carry the same words in the same sentence layout.
pub(crate) fn check_same_structure(
    reference: &TaggedCorpus,
    other: &TaggedCorpus,
) -> Result<(), CorpusError> {
    if reference.len() != other.len() {
        return Err(CorpusError::StructureMismatch(format!(
            "{} sentences vs {}",
            reference.len(),
            other.len()
        )));
    }
    for (i, (a, b)) in reference.sentences.iter().zip(&other.sentences).enumerate() {
        if a.len() != b.len() {
            return Err(CorpusError::StructureMismatch(format!(
                "sentence {} has {} tokens vs {}",
                i + 1,
                a.len(),
                b.len()
            )));
        }
        for (j, (x, y)) in a.tokens.iter().zip(&b.tokens).enumerate() {
            if x.word != y.word {
                return Err(CorpusError::StructureMismatch(format!(
                    "sentence {}, token {}: {:?} vs {:?}",
                    i + 1,
                    j + 1,
                    x.word,
                    y.word
                )));
            }
        }
    }
    Ok(())
}

/// Token-level disagreement between two annotations of the same text.
pub fn agreement(
    reference: &TaggedCorpus,
    other: &TaggedCorpus,
    excluded_tag: usize,
) -> Result<AgreementReport, CorpusError> {
    check_same_structure(reference, other)?;
    let mut disagreed = 0;
    let mut on_excluded = 0;
    for (a, b) in reference.tokens().zip(other.tokens()) {
        if a.tag != b.tag {
            disagreed += 1;
            if a.tag == excluded_tag {
                on_excluded += 1;
            }
        }
    }
    Ok(AgreementReport::from_counts(
        reference.token_count(),
        disagreed,
        on_excluded,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE_1: &str = "Titia/ADV Isor/N koise/V ,/SYM \"/SYM Ujala/N hobole/V dibi/V ./SYM \"/SYM Aru/CONJ Ujala/N hoise/V ./SYM";
    const SAMPLE_2: &str = "Itu/ADJ dikhikena/V Isor/N khusi/ADJ lagise/V ./SYM";

    fn tags() -> TagSet {
        TagSet::default()
    }

    #[test]
    fn default_tagset_order() {
        let t = tags();
        assert_eq!(t.len(), 15);
        assert_eq!(t.index_of("ADJ"), Some(0));
        assert_eq!(t.index_of("CMP"), Some(3));
        assert_eq!(t.index_of("NUM"), Some(14));
        assert_eq!(t.name(11), Some("FW"));
    }

    #[test]
    fn tagset_rejects_bad_names() {
        assert!(matches!(
            TagSet::new(["N", "N"]),
            Err(CorpusError::DuplicateTag(_))
        ));
        assert!(matches!(
            TagSet::new(["adj"]),
            Err(CorpusError::InvalidTagName(_))
        ));
        assert!(matches!(
            TagSet::new(Vec::<String>::new()),
            Err(CorpusError::EmptyTagSet)
        ));
        let parsed = TagSet::parse("N\n\nV\n").unwrap();
        assert_eq!(parsed.names(), ["N", "V"]);
    }

    #[test]
    fn parses_sample_line() {
        let c = parse_tagged(SAMPLE_1, &tags(), UnknownTagPolicy::Reject).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.token_count(), 14);
        let first = &c.sentences()[0].tokens()[0];
        assert_eq!(first.word, "Titia");
        assert_eq!(first.tag, tags().index_of("ADV").unwrap());
    }

    #[test]
    fn empty_input() {
        let c = parse_tagged("", &tags(), UnknownTagPolicy::Reject).unwrap();
        assert_eq!(c.len(), 0);
        assert_eq!(c.token_count(), 0);
        assert_eq!(serialize_tagged(&c, &tags()), "");
    }

    #[test]
    fn last_slash_splits() {
        let c = parse_tagged("a/b/N", &tags(), UnknownTagPolicy::Reject).unwrap();
        let tok = &c.sentences()[0].tokens()[0];
        assert_eq!(tok.word, "a/b");
        assert_eq!(tok.tag, tags().index_of("N").unwrap());
    }

    #[test]
    fn skips_blank_and_comment_lines() {
        let text = "# {\"seed\":1}\n\nfoo/N\n   \nbar/V baz/N\n";
        let c = parse_tagged(text, &tags(), UnknownTagPolicy::Reject).unwrap();
        assert_eq!(c.len(), 2);
        // "#/SYM" is a token, not a comment
        let c = parse_tagged("#/SYM x/N", &tags(), UnknownTagPolicy::Reject).unwrap();
        assert_eq!(c.token_count(), 2);
    }

    #[test]
    fn parse_errors_carry_position() {
        let t = tags();
        let err = parse_tagged("ok/N\nfoo/N  bar", &t, UnknownTagPolicy::Reject).unwrap_err();
        assert_eq!(
            err,
            CorpusError::MissingSeparator {
                line: 2,
                column: 8,
                token: "bar".into()
            }
        );
        assert!(matches!(
            parse_tagged("/N", &t, UnknownTagPolicy::Reject),
            Err(CorpusError::EmptyWord { line: 1, .. })
        ));
        assert!(matches!(
            parse_tagged("x/", &t, UnknownTagPolicy::Reject),
            Err(CorpusError::EmptyTag { line: 1, .. })
        ));
        let err = parse_tagged("x/N y/NOUN", &t, UnknownTagPolicy::Reject).unwrap_err();
        assert_eq!(
            err,
            CorpusError::UnknownTag {
                line: 1,
                column: 5,
                token: "y/NOUN".into(),
                tag: "NOUN".into()
            }
        );
    }

    #[test]
    fn unknown_tags_map_to_unk() {
        let t = tags();
        let c = parse_tagged("y/NOUN", &t, UnknownTagPolicy::MapToUnk).unwrap();
        assert_eq!(c.sentences()[0].tokens()[0].tag, t.index_of("UNK").unwrap());
        let small = TagSet::new(["N"]).unwrap();
        assert!(matches!(
            parse_tagged("y/V", &small, UnknownTagPolicy::MapToUnk),
            Err(CorpusError::MissingUnkTag(_))
        ));
    }

    #[test]
    fn sample_round_trip() {
        let t = tags();
        let messy = SAMPLE_1.replace(' ', "   ");
        let c = parse_tagged(&messy, &t, UnknownTagPolicy::Reject).unwrap();
        assert_eq!(serialize_tagged(&c, &t), format!("{SAMPLE_1}\n"));
    }

    #[test]
    fn sample_frequencies() {
        let t = tags();
        let text = format!("{SAMPLE_1}\n{SAMPLE_2}\n");
        let c = parse_tagged(&text, &t, UnknownTagPolicy::Reject).unwrap();
        assert_eq!(c.token_count(), 20);
        let freq = tag_frequencies(&c, &t);
        let get = |name| freq[t.index_of(name).unwrap()];
        assert_eq!(get("ADV"), 1);
        assert_eq!(get("N"), 4);
        assert_eq!(get("V"), 6);
        assert_eq!(get("SYM"), 6);
        assert_eq!(get("CONJ"), 1);
        assert_eq!(get("ADJ"), 2);
        assert_eq!(freq.iter().sum::<usize>(), 20);
        assert!(tag_frequencies(&TaggedCorpus::default(), &t)
            .iter()
            .all(|&n| n == 0));
    }

    fn numbered_corpus(n: usize) -> TaggedCorpus {
        TaggedCorpus::new(
            (0..n)
                .map(|i| Sentence::new(vec![Token::new(format!("w{i}"), 0).unwrap()]).unwrap())
                .collect(),
        )
    }

    #[test]
    fn split_counts_follow_floor() {
        let c = numbered_corpus(749);
        let (train, test) = split_corpus(&c, 0.7, 1).unwrap();
        assert_eq!((train.len(), test.len()), (524, 225));
        let (train, test) = split_corpus(&c, 1.0, 9).unwrap();
        assert_eq!((train.len(), test.len()), (749, 0));
        let (train, _) = split_corpus(&numbered_corpus(100), 0.29, 3).unwrap();
        assert_eq!(train.len(), 29);
    }

    #[test]
    fn split_is_deterministic() {
        let c = numbered_corpus(10);
        let a = split_corpus(&c, 0.7, 42).unwrap();
        let b = split_corpus(&c, 0.7, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_errors() {
        assert_eq!(
            split_corpus(&TaggedCorpus::default(), 0.7, 0),
            Err(CorpusError::EmptyCorpus)
        );
        let c = numbered_corpus(3);
        assert!(matches!(
            split_corpus(&c, 0.0, 0),
            Err(CorpusError::BadFraction(_))
        ));
        assert!(matches!(
            split_corpus(&c, 1.5, 0),
            Err(CorpusError::BadFraction(_))
        ));
    }

    #[test]
    fn agreement_paper_counts() {
        let r = AgreementReport::from_counts(1864, 125, 102);
        assert_eq!(format!("{:.2}", r.rate * 100.0), "6.71");
        assert_eq!(format!("{:.2}", r.rate_excluding * 100.0), "1.23");
        assert!((r.rate - 0.06706).abs() < 1e-5);
        assert!((r.rate_excluding - 0.01234).abs() < 1e-5);
    }

    #[test]
    fn agreement_on_hand_pair() {
        let t = tags();
        let a = parse_tagged("a/N b/V c/N d/FW", &t, UnknownTagPolicy::Reject).unwrap();
        let b = parse_tagged("a/N b/ADJ c/N d/FW", &t, UnknownTagPolicy::Reject).unwrap();
        let fw = t.index_of("FW").unwrap();
        let r = agreement(&a, &b, fw).unwrap();
        assert_eq!((r.total_tokens, r.disagreed, r.disagreed_on_excluded_tag), (4, 1, 0));
        assert_eq!(r.rate, 0.25);
        assert_eq!(r.rate_excluding, 0.25);
        let same = agreement(&a, &a, fw).unwrap();
        assert_eq!((same.disagreed, same.rate, same.rate_excluding), (0, 0.0, 0.0));
    }

    #[test]
    fn agreement_excluded_tag_counts_reference_side() {
        let t = tags();
        let a = parse_tagged("a/FW b/N", &t, UnknownTagPolicy::Reject).unwrap();
        let b = parse_tagged("a/N b/FW", &t, UnknownTagPolicy::Reject).unwrap();
        let r = agreement(&a, &b, t.index_of("FW").unwrap()).unwrap();
        assert_eq!((r.disagreed, r.disagreed_on_excluded_tag), (2, 1));
        assert_eq!(r.rate_excluding, 0.5);
    }

    #[test]
    fn agreement_structure_mismatch() {
        let t = tags();
        let a = parse_tagged("a/N b/V", &t, UnknownTagPolicy::Reject).unwrap();
        let b = parse_tagged("a/N c/V", &t, UnknownTagPolicy::Reject).unwrap();
        let c = parse_tagged("a/N", &t, UnknownTagPolicy::Reject).unwrap();
        assert!(matches!(agreement(&a, &b, 0), Err(CorpusError::StructureMismatch(_))));
        assert!(matches!(agreement(&a, &c, 0), Err(CorpusError::StructureMismatch(_))));
    }

    fn word_strategy() -> impl Strategy<Value = String> {
        // Words may themselves contain '/', '#' and non-ASCII letters.
        "[a-zA-Z0-9#/,.\"əṅš-]{1,8}"
    }

    fn corpus_strategy() -> impl Strategy<Value = TaggedCorpus> {
        let token = (word_strategy(), 0usize..15).prop_map(|(w, t)| Token::new(w, t).unwrap());
        let sentence = prop::collection::vec(token, 1..8).prop_map(|t| Sentence::new(t).unwrap());
        prop::collection::vec(sentence, 0..6).prop_map(TaggedCorpus::new)
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(corpus in corpus_strategy()) {
            let t = tags();
            let text = serialize_tagged(&corpus, &t);
            let back = parse_tagged(&text, &t, UnknownTagPolicy::Reject).unwrap();
            prop_assert_eq!(&back, &corpus);
            prop_assert_eq!(serialize_tagged(&back, &t), text);
        }

        #[test]
        fn frequencies_sum_to_token_count(corpus in corpus_strategy()) {
            let freq = tag_frequencies(&corpus, &tags());
            prop_assert_eq!(freq.iter().sum::<usize>(), corpus.token_count());
        }

        #[test]
        fn split_partitions_sentences(corpus in corpus_strategy(), frac in 0.01f64..=1.0, seed: u64) {
            prop_assume!(!corpus.is_empty());
            let (train, test) = split_corpus(&corpus, frac, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), corpus.len());
            let mut all: Vec<_> = train.sentences().iter().chain(test.sentences()).cloned().collect();
            let mut orig = corpus.sentences().to_vec();
            let key = |s: &Sentence| format!("{:?}", s);
            all.sort_by_key(key);
            orig.sort_by_key(key);
            prop_assert_eq!(all, orig);
        }

        #[test]
        fn self_agreement_is_perfect(corpus in corpus_strategy(), tag in 0usize..15) {
            let r = agreement(&corpus, &corpus, tag).unwrap();
            prop_assert_eq!(r.disagreed, 0);
        }
    }
}
