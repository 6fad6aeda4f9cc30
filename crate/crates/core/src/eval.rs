//! Token-level evaluation and transition-weight inspection.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{check_same_structure, CorpusError, TagSet, TaggedCorpus};
use crate::crf::ModelParameters;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Structure(#[from] CorpusError),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
}

/// Gold tags as rows, predicted tags as columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    num_tags: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(num_tags: usize) -> Self {
        Self {
            num_tags,
            counts: vec![0; num_tags * num_tags],
        }
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold * self.num_tags + predicted]
    }

    pub fn add(&mut self, gold: usize, predicted: usize, n: u64) {
        self.counts[gold * self.num_tags + predicted] += n;
    }

    pub fn set(&mut self, gold: usize, predicted: usize, n: u64) {
        self.counts[gold * self.num_tags + predicted] = n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_tags).map(|i| self.get(i, i)).sum()
    }

    /// Gold count of `tag`.
    pub fn row_sum(&self, tag: usize) -> u64 {
        (0..self.num_tags).map(|p| self.get(tag, p)).sum()
    }

    /// Predicted count of `tag`.
    pub fn column_sum(&self, tag: usize) -> u64 {
        (0..self.num_tags).map(|g| self.get(g, tag)).sum()
    }

    /// CSV with a header row and a leading column of tag names.
    pub fn to_csv(&self, tagset: &TagSet) -> String {
        let mut out = String::from("gold\\predicted");
        for name in tagset.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for g in 0..self.num_tags {
            out.push_str(tagset.name(g).unwrap_or("?"));
            for p in 0..self.num_tags {
                let _ = write!(out, ",{}", self.get(g, p));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(
    gold: &TaggedCorpus,
    predicted: &TaggedCorpus,
    num_tags: usize,
) -> Result<ConfusionMatrix, EvalError> {
    check_same_structure(gold, predicted)?;
    let mut cm = ConfusionMatrix::zeros(num_tags);
    for (g, p) in gold.tokens().zip(predicted.tokens()) {
        cm.add(g.tag, p.tag, 1);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TagMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tags: Vec<String>,
    pub per_tag: Vec<TagMetrics>,
    pub accuracy: f64,
    /// Mean over tags that occur in the gold or predicted data.
    pub macro_avg: Averages,
    /// Support-weighted mean.
    pub weighted_avg: Averages,
    pub total: u64,
    /// Metric cells that were 0/0 and reported as 0.
    pub warnings: Vec<String>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn report(cm: &ConfusionMatrix, tagset: &TagSet) -> Result<EvalReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let k = cm.num_tags();
    let name = |i: usize| tagset.name(i).unwrap_or("?").to_string();
    let mut warnings = Vec::new();
    let mut per_tag = Vec::with_capacity(k);
    for tag in 0..k {
        let tp = cm.get(tag, tag);
        let support = cm.row_sum(tag);
        let predicted = cm.column_sum(tag);
        let precision = ratio(tp, predicted).unwrap_or_else(|| {
            warnings.push(format!("precision of {} is 0/0, reported as 0", name(tag)));
            0.0
        });
        let recall = ratio(tp, support).unwrap_or_else(|| {
            warnings.push(format!("recall of {} is 0/0, reported as 0", name(tag)));
            0.0
        });
        per_tag.push(TagMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support,
        });
    }

    let present: Vec<usize> = (0..k)
        .filter(|&t| cm.row_sum(t) > 0 || cm.column_sum(t) > 0)
        .collect();
    let n = present.len() as f64;
    let macro_avg = Averages {
        precision: present.iter().map(|&t| per_tag[t].precision).sum::<f64>() / n,
        recall: present.iter().map(|&t| per_tag[t].recall).sum::<f64>() / n,
        f1: present.iter().map(|&t| per_tag[t].f1).sum::<f64>() / n,
    };
    let weighted = |f: fn(&TagMetrics) -> f64| {
        per_tag.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    let accuracy = cm.trace() as f64 / total as f64;
    let weighted_avg = Averages {
        precision: weighted(|m| m.precision),
        // support * TP / support summed over tags is exactly trace / total.
        recall: accuracy,
        f1: weighted(|m| m.f1),
    };
    Ok(EvalReport {
        tags: (0..k).map(name).collect(),
        per_tag,
        accuracy,
        macro_avg,
        weighted_avg,
        total,
        warnings,
    })
}

impl EvalReport {
    /// Fixed-point table: one row per tag, then the aggregate rows.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>12} {:>10} {:>10} {:>10} {:>10}",
            "tag", "precision", "recall", "f1-score", "support"
        );
        out.push('\n');
        for (name, m) in self.tags.iter().zip(&self.per_tag) {
            let _ = writeln!(
                out,
                "{:>12} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                name, m.precision, m.recall, m.f1, m.support
            );
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:>12} {:>10} {:>10} {:>10.2} {:>10}",
            "accuracy", "", "", self.accuracy, self.total
        );
        for (label, avg) in [("macro avg", &self.macro_avg), ("avg / total", &self.weighted_avg)] {
            let _ = writeln!(
                out,
                "{:>12} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                label, avg.precision, avg.recall, avg.f1, self.total
            );
        }
        let _ = writeln!(out, "\noverall accuracy: {:.2}%", self.accuracy * 100.0);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEntry {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEntry {
    pub tag: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRanking {
    pub top: Vec<TransitionEntry>,
    pub bottom: Vec<TransitionEntry>,
    /// Begin weights, highest first.
    pub begin: Vec<BoundaryEntry>,
    /// End weights, highest first.
    pub end: Vec<BoundaryEntry>,
}

/// The `n` most and least likely tag-to-tag transitions. Equal weights are
/// ordered by (from, to) index.
pub fn top_transitions(model: &ModelParameters, n: usize) -> TransitionRanking {
    let k = model.num_tags();
    let w = &model.weights;
    let tags = model.tagset();
    let name = |i: usize| tags.name(i).unwrap_or("?").to_string();
    let mut pairs: Vec<(usize, usize, f64)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, w.transition(i, j)))
        .collect();
    let entry = |&(i, j, weight): &(usize, usize, f64)| TransitionEntry {
        from: name(i),
        to: name(j),
        weight,
    };
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let top = pairs.iter().take(n).map(entry).collect();
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let bottom = pairs.iter().take(n).map(entry).collect();

    let boundary = |get: &dyn Fn(usize) -> f64| {
        let mut v: Vec<(usize, f64)> = (0..k).map(|i| (i, get(i))).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter()
            .map(|(i, weight)| BoundaryEntry {
                tag: name(i),
                weight,
            })
            .collect()
    };
    TransitionRanking {
        top,
        bottom,
        begin: boundary(&|i| w.begin(i)),
        end: boundary(&|i| w.end(i)),
    }
}

impl TransitionRanking {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let section = |out: &mut String, title: &str, rows: &[TransitionEntry]| {
            let _ = writeln!(out, "{title}:");
            for e in rows {
                let _ = writeln!(out, "{:>10.6} {:<6} -> {}", e.weight, e.from, e.to);
            }
        };
        section(&mut out, "Top likely transitions", &self.top);
        out.push('\n');
        section(&mut out, "Top unlikely transitions", &self.bottom);
        for (title, rows) in [("Begin weights", &self.begin), ("End weights", &self.end)] {
            let _ = writeln!(out, "\n{title}:");
            for e in rows {
                let _ = writeln!(out, "{:>10.6} {}", e.weight, e.tag);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ranking serializes")
    }
}
