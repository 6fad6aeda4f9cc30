//! Syllable-structure model: phoneme inventory, CV skeletons, the word-shape
//! formulas compiled into slot templates, an exhaustive enumeration oracle
//! and a seeded word generator.
//!
//! Formulas are written with `C` and `V` for mandatory slots and `(C)` for an
//! optional consonant. The monosyllabic formula's trailing `(C)(C)^2` is read
//! as "up to two coda consonants", giving `(C)(C)V(C)(C)`.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhonoError {
    #[error("unknown phoneme {symbol:?} at position {position}")]
    UnknownPhoneme { symbol: String, position: usize },
    #[error("syllable count {0} outside 1..=4")]
    BadSyllableCount(usize),
    #[error("enumeration length {0} outside 1..=16")]
    BadLength(usize),
    #[error("empty skeleton")]
    EmptySkeleton,
    #[error("invalid skeleton character {0:?}")]
    BadSkeletonChar(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Segment {
    C,
    V,
}

/// Vowels and consonants, each phoneme a single token (aspirates included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeInventory {
    vowels: Vec<&'static str>,
    consonants: Vec<&'static str>,
}

const VOWELS: [&str; 6] = ["i", "u", "e", "ə", "o", "a"];
// The source list prints "I" where the lateral "l" belongs.
const CONSONANTS: [&str; 22] = [
    "p", "t", "c", "k", "b", "d", "j", "g", "pʰ", "tʰ", "cʰ", "kʰ", "m", "n", "ṅ", "s", "š", "h",
    "r", "l", "w", "y",
];

/// ASCII spellings accepted for the non-ASCII phonemes.
const ALIASES: [(&str, &str); 7] = [
    ("ph", "pʰ"),
    ("th", "tʰ"),
    ("ch", "cʰ"),
    ("kh", "kʰ"),
    ("ng", "ṅ"),
    ("sh", "š"),
    ("@", "ə"),
];

impl Default for PhonemeInventory {
    fn default() -> Self {
        Self {
            vowels: VOWELS.to_vec(),
            consonants: CONSONANTS.to_vec(),
        }
    }
}

impl PhonemeInventory {
    pub fn vowels(&self) -> &[&'static str] {
        &self.vowels
    }

    pub fn consonants(&self) -> &[&'static str] {
        &self.consonants
    }

    pub fn classify(&self, phoneme: &str) -> Option<Segment> {
        if self.vowels.contains(&phoneme) {
            Some(Segment::V)
        } else if self.consonants.contains(&phoneme) {
            Some(Segment::C)
        } else {
            None
        }
    }

    /// Canonical symbol for a phoneme given in either form.
    pub fn canonical(&self, symbol: &str) -> Option<&'static str> {
        let symbol = ALIASES
            .iter()
            .find(|(ascii, _)| *ascii == symbol)
            .map_or(symbol, |(_, ipa)| ipa);
        self.vowels
            .iter()
            .chain(&self.consonants)
            .find(|p| **p == symbol)
            .copied()
    }

    /// Parses dot-separated phonemes such as `g.o.r` or `kh.u.s.i`.
    pub fn parse_dotted(&self, text: &str) -> Result<Vec<&'static str>, PhonoError> {
        text.split('.')
            .enumerate()
            .map(|(position, symbol)| {
                self.canonical(symbol).ok_or(PhonoError::UnknownPhoneme {
                    symbol: symbol.to_string(),
                    position,
                })
            })
            .collect()
    }
}

/// ASCII spelling of a phoneme sequence, using the alias table.
pub fn transliterate<S: AsRef<str>>(phonemes: &[S]) -> String {
    phonemes
        .iter()
        .map(|p| {
            let p = p.as_ref();
            ALIASES
                .iter()
                .find(|(_, ipa)| *ipa == p)
                .map_or(p, |(ascii, _)| ascii)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CvSkeleton(Vec<Segment>);

impl CvSkeleton {
    pub fn new(segments: Vec<Segment>) -> Result<Self, PhonoError> {
        if segments.is_empty() {
            return Err(PhonoError::EmptySkeleton);
        }
        Ok(Self(segments))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vowel_count(&self) -> usize {
        self.0.iter().filter(|&&s| s == Segment::V).count()
    }
}

impl std::str::FromStr for CvSkeleton {
    type Err = PhonoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let segments = s
            .chars()
            .map(|c| match c {
                'C' => Ok(Segment::C),
                'V' => Ok(Segment::V),
                other => Err(PhonoError::BadSkeletonChar(other)),
            })
            .collect::<Result<_, _>>()?;
        Self::new(segments)
    }
}

impl fmt::Display for CvSkeleton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Segment::C => "C",
                Segment::V => "V",
            })?;
        }
        Ok(())
    }
}

pub fn to_skeleton<S: AsRef<str>>(
    phonemes: &[S],
    inv: &PhonemeInventory,
) -> Result<CvSkeleton, PhonoError> {
    let segments = phonemes
        .iter()
        .enumerate()
        .map(|(position, p)| {
            inv.classify(p.as_ref()).ok_or(PhonoError::UnknownPhoneme {
                symbol: p.as_ref().to_string(),
                position,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    CvSkeleton::new(segments)
}

/// `(identifier, syllable count, formula)` for every word shape.
pub const FORMULAS: [(&str, usize, &str); 7] = [
    ("mono", 1, "(C)(C)V(C)(C)"),
    ("di-1", 2, "V(C)(C)(C)V(C)"),
    ("di-2a", 2, "(C)CV(C)(C)CV(C)(C)"),
    ("di-2b", 2, "(C)CV(C)(C)V(C)(C)"),
    ("tri-1", 3, "V(C)(C)CV(C)(C)CV(C)"),
    ("tri-2", 3, "(C)CV(C)(C)V(C)(C)(C)V(C)"),
    ("tetra", 4, "(C)V(C)CVCV(C)CV(C)"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Vowel,
    Consonant,
    OptionalConsonant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyllableTemplate {
    pub id: &'static str,
    pub syllables: usize,
    pub slots: Vec<Slot>,
}

impl SyllableTemplate {
    fn compile(id: &'static str, syllables: usize, formula: &str) -> Self {
        let mut slots = Vec::new();
        let mut rest = formula;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix("(C)") {
                slots.push(Slot::OptionalConsonant);
                rest = r;
            } else if let Some(r) = rest.strip_prefix('C') {
                slots.push(Slot::Consonant);
                rest = r;
            } else if let Some(r) = rest.strip_prefix('V') {
                slots.push(Slot::Vowel);
                rest = r;
            } else {
                panic!("bad formula {formula:?}");
            }
        }
        let template = Self {
            id,
            syllables,
            slots,
        };
        debug_assert_eq!(
            template.slots.iter().filter(|&&s| s == Slot::Vowel).count(),
            syllables
        );
        template
    }

    /// Slot-automaton match: tracks every slot position reachable after each
    /// segment, skipping optional slots freely.
    pub fn matches(&self, skeleton: &[Segment]) -> bool {
        let n = self.slots.len();
        let close = |set: &mut Vec<bool>| {
            for i in 0..n {
                if set[i] && self.slots[i] == Slot::OptionalConsonant {
                    set[i + 1] = true;
                }
            }
        };
        let mut states = vec![false; n + 1];
        states[0] = true;
        close(&mut states);
        for &seg in skeleton {
            let mut next = vec![false; n + 1];
            for i in 0..n {
                if !states[i] {
                    continue;
                }
                let fits = match self.slots[i] {
                    Slot::Vowel => seg == Segment::V,
                    Slot::Consonant | Slot::OptionalConsonant => seg == Segment::C,
                };
                if fits {
                    next[i + 1] = true;
                }
            }
            close(&mut next);
            if !next.iter().any(|&b| b) {
                return false;
            }
            states = next;
        }
        states[n]
    }
}

pub fn templates() -> Vec<SyllableTemplate> {
    FORMULAS
        .iter()
        .map(|&(id, n, f)| SyllableTemplate::compile(id, n, f))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemplateMatch {
    pub template: &'static str,
    pub syllables: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyllableAnalysis {
    pub skeleton: String,
    pub accepted: bool,
    pub matches: Vec<TemplateMatch>,
}

impl SyllableAnalysis {
    /// Fewest syllables among the matching templates.
    pub fn syllables(&self) -> Option<usize> {
        self.matches.iter().map(|m| m.syllables).min()
    }
}

/// Word-level constraints that hold regardless of template: a lone vowel, a
/// bare vowel pair and more than four nuclei are all ruled out.
fn globally_excluded(skeleton: &[Segment]) -> bool {
    skeleton == [Segment::V]
        || skeleton == [Segment::V, Segment::V]
        || skeleton.iter().filter(|&&s| s == Segment::V).count() > 4
}

pub fn classify(skeleton: &CvSkeleton) -> SyllableAnalysis {
    classify_with(skeleton, &templates())
}

fn classify_with(skeleton: &CvSkeleton, templates: &[SyllableTemplate]) -> SyllableAnalysis {
    let segs = skeleton.segments();
    let matches: Vec<TemplateMatch> = if globally_excluded(segs) {
        Vec::new()
    } else {
        templates
            .iter()
            .filter(|t| t.matches(segs))
            .map(|t| TemplateMatch {
                template: t.id,
                syllables: t.syllables,
            })
            .collect()
    };
    SyllableAnalysis {
        skeleton: skeleton.to_string(),
        accepted: !matches.is_empty(),
        matches,
    }
}

/// Every string a formula can produce, by expanding each `(C)` both ways.
/// Kept separate from the slot matcher so the two can check each other.
fn expand_formula(formula: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(String::new());
    let chars: Vec<char> = formula.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '(' => {
                let inner = chars[i + 1];
                assert_eq!(chars[i + 2], ')');
                out = out
                    .into_iter()
                    .flat_map(|s| [s.clone(), format!("{s}{inner}")])
                    .collect();
                i += 3;
            }
            c => {
                out = out.into_iter().map(|s| format!("{s}{c}")).collect();
                i += 1;
            }
        }
    }
    out
}

/// Direct reading of the word-shape rules over plain `C`/`V` strings.
pub fn direct_accepts(skeleton: &str) -> bool {
    thread_local! {
        static SHAPES: BTreeSet<String> =
            FORMULAS.iter().flat_map(|(_, _, f)| expand_formula(f)).collect();
    }
    let vowels = skeleton.matches('V').count();
    if skeleton == "V" || skeleton == "VV" || vowels == 0 || vowels > 4 {
        return false;
    }
    SHAPES.with(|s| s.contains(skeleton))
}

/// All accepted skeletons up to `max_len` segments, sorted as strings.
pub fn enumerate_accepted(max_len: usize) -> Result<Vec<String>, PhonoError> {
    if !(1..=16).contains(&max_len) {
        return Err(PhonoError::BadLength(max_len));
    }
    let mut out = Vec::new();
    for len in 1..=max_len {
        for bits in 0u32..(1 << len) {
            let s: String = (0..len)
                .map(|i| if bits >> (len - 1 - i) & 1 == 1 { 'V' } else { 'C' })
                .collect();
            if direct_accepts(&s) {
                out.push(s);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Draws a word of `syllables` syllables from `rng`.
pub fn generate_word_with<R: RngCore + ?Sized>(
    rng: &mut R,
    syllables: usize,
    inv: &PhonemeInventory,
) -> Result<Vec<&'static str>, PhonoError> {
    if !(1..=4).contains(&syllables) {
        return Err(PhonoError::BadSyllableCount(syllables));
    }
    let candidates: Vec<SyllableTemplate> = templates()
        .into_iter()
        .filter(|t| t.syllables == syllables)
        .collect();
    loop {
        let template = candidates.choose(rng).expect("every count has a template");
        let segments: Vec<Segment> = template
            .slots
            .iter()
            .filter_map(|slot| match slot {
                Slot::Vowel => Some(Segment::V),
                Slot::Consonant => Some(Segment::C),
                Slot::OptionalConsonant => rng.gen_bool(0.5).then_some(Segment::C),
            })
            .collect();
        // Shapes like a lone V satisfy a template but not the word rules.
        if globally_excluded(&segments) {
            continue;
        }
        return Ok(segments
            .into_iter()
            .map(|s| match s {
                Segment::V => *inv.vowels.choose(rng).expect("vowels"),
                Segment::C => *inv.consonants.choose(rng).expect("consonants"),
            })
            .collect());
    }
}

pub fn generate_word(
    seed: u64,
    syllables: usize,
    inv: &PhonemeInventory,
) -> Result<Vec<&'static str>, PhonoError> {
    generate_word_with(&mut ChaCha8Rng::seed_from_u64(seed), syllables, inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inv() -> PhonemeInventory {
        PhonemeInventory::default()
    }

    fn sk(s: &str) -> CvSkeleton {
        s.parse().unwrap()
    }

    #[test]
    fn inventory_shape() {
        let inv = inv();
        assert_eq!(inv.vowels().len(), 6);
        assert_eq!(inv.consonants().len(), 22);
        assert!(inv.vowels().iter().all(|v| !inv.consonants().contains(v)));
        assert_eq!(inv.canonical("kh"), Some("kʰ"));
        assert_eq!(inv.canonical("@"), Some("ə"));
        assert_eq!(inv.canonical("x"), None);
    }

    #[test]
    fn skeletons_of_example_words() {
        assert_eq!(to_skeleton(&["g", "o", "r"], &inv()).unwrap().to_string(), "CVC");
        assert_eq!(to_skeleton(&["a"], &inv()).unwrap().to_string(), "V");
        assert_eq!(to_skeleton(&["m", "o", "y"], &inv()).unwrap().to_string(), "CVC");
        assert_eq!(
            to_skeleton(&["g", "x"], &inv()),
            Err(PhonoError::UnknownPhoneme {
                symbol: "x".into(),
                position: 1
            })
        );
        assert_eq!(
            to_skeleton::<&str>(&[], &inv()),
            Err(PhonoError::EmptySkeleton)
        );
    }

    #[test]
    fn dotted_input() {
        let p = inv().parse_dotted("kh.u.s.i").unwrap();
        assert_eq!(p, ["kʰ", "u", "s", "i"]);
        assert_eq!(transliterate(&p), "khusi");
        assert!(matches!(
            inv().parse_dotted("g..r"),
            Err(PhonoError::UnknownPhoneme { position: 1, .. })
        ));
    }

    #[test]
    fn global_rules() {
        assert!(!classify(&sk("V")).accepted);
        assert!(!classify(&sk("VV")).accepted);
        assert!(!classify(&sk("C")).accepted);
        assert!(!classify(&sk("CVCVCVCVCV")).accepted);
        let a = classify(&sk("CVC"));
        assert!(a.accepted);
        assert_eq!(a.syllables(), Some(1));
        assert_eq!(a.matches[0].template, "mono");
    }

    #[test]
    fn ambiguous_shapes_report_all_matches() {
        // CVCV fits both disyllabic type-2 variants.
        let a = classify(&sk("CVCV"));
        let ids: Vec<_> = a.matches.iter().map(|m| m.template).collect();
        assert_eq!(ids, ["di-2a", "di-2b"]);
        assert_eq!(a.syllables(), Some(2));
    }

    #[test]
    fn small_enumerations() {
        assert!(enumerate_accepted(1).unwrap().is_empty());
        let two = enumerate_accepted(2).unwrap();
        assert_eq!(two, ["CV", "VC"]);
        assert!(enumerate_accepted(0).is_err());
        assert!(enumerate_accepted(17).is_err());
    }

    #[test]
    fn frozen_count_at_length_six() {
        // Fixed from the first verified oracle run.
        assert_eq!(enumerate_accepted(6).unwrap().len(), FROZEN_COUNT_LEN6);
    }

    const FROZEN_COUNT_LEN6: usize = 47;

    #[test]
    fn compiled_matches_direct_up_to_twelve() {
        let tpl = templates();
        for len in 1..=12usize {
            for bits in 0u32..(1 << len) {
                let s: String = (0..len)
                    .map(|i| if bits >> i & 1 == 1 { 'V' } else { 'C' })
                    .collect();
                let compiled = classify_with(&sk(&s), &tpl).accepted;
                assert_eq!(compiled, direct_accepts(&s), "disagreement on {s}");
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(generate_word(7, 3, &inv()), generate_word(7, 3, &inv()));
        assert_eq!(generate_word(7, 0, &inv()), Err(PhonoError::BadSyllableCount(0)));
        assert_eq!(generate_word(7, 5, &inv()), Err(PhonoError::BadSyllableCount(5)));
    }

    proptest! {
        #[test]
        fn generated_words_are_accepted(seed: u64, syllables in 1usize..=4) {
            let word = generate_word(seed, syllables, &inv()).unwrap();
            let skeleton = to_skeleton(&word, &inv()).unwrap();
            prop_assert_eq!(skeleton.len(), word.len());
            let analysis = classify(&skeleton);
            prop_assert!(analysis.accepted);
            prop_assert!(analysis.matches.iter().any(|m| m.syllables == syllables));
            prop_assert!(direct_accepts(&skeleton.to_string()));
        }
    }
}
