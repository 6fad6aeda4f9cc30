//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::sync::OnceLock;

use chaincrf::features::FeatureConfig;
use chaincrf::{ModelParameters, TagSet};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn letters(k: usize) -> TagSet {
    TagSet::new((0..k).map(|i| ((b'A' + i as u8) as char).to_string())).unwrap()
}

/// Model with `num_attrs` attributes and every weight drawn from [-2, 2].
pub fn random_model<R: Rng>(rng: &mut R, num_tags: usize, num_attrs: usize) -> ModelParameters {
    let attrs = (0..num_attrs).map(|a| format!("f{a}")).collect();
    let mut model = ModelParameters::new(letters(num_tags), FeatureConfig::default(), attrs);
    for w in model.weights.as_mut_slice() {
        *w = rng.gen_range(-2.0..=2.0);
    }
    model
}

/// `len` positions, each holding a random subset (possibly empty) of the
/// model's attributes, without repeats.
pub fn random_attrs<R: Rng>(rng: &mut R, model: &ModelParameters, len: usize) -> Vec<Vec<String>> {
    let all = model.attributes().to_vec();
    (0..len)
        .map(|_| {
            let n = rng.gen_range(0..=all.len().min(3));
            all.choose_multiple(rng, n).cloned().collect()
        })
        .collect()
}

pub fn random_tags<R: Rng>(rng: &mut R, num_tags: usize, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.gen_range(0..num_tags)).collect()
}

/// Score of one path, computed straight from the definition.
pub fn path_score(model: &ModelParameters, attrs: &[Vec<String>], tags: &[usize]) -> f64 {
    let w = &model.weights;
    let mut s = w.begin(tags[0]) + w.end(tags[tags.len() - 1]);
    for (t, &y) in tags.iter().enumerate() {
        for a in &attrs[t] {
            if let Some(id) = model.attribute_id(a) {
                s += w.state(id, y);
            }
        }
        if t > 0 {
            s += w.transition(tags[t - 1], y);
        }
    }
    s
}

/// Every tag sequence of length `len` over `k` tags, in lexicographic order.
pub fn all_paths(k: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    out
}

pub struct Enumeration {
    pub log_z: f64,
    /// T x K
    pub unary: Vec<Vec<f64>>,
    /// (T-1) x K x K
    pub pairwise: Vec<Vec<Vec<f64>>>,
    pub best_path: Vec<usize>,
    pub best_score: f64,
}

/// Exhaustive K^T enumeration of all quantities the lattice computes.
pub fn enumerate(model: &ModelParameters, attrs: &[Vec<String>]) -> Enumeration {
    let k = model.num_tags();
    let len = attrs.len();
    let paths = all_paths(k, len);
    let scores: Vec<f64> = paths.iter().map(|p| path_score(model, attrs, p)).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_z = max + z.ln();

    let mut unary = vec![vec![0.0; k]; len];
    let mut pairwise = vec![vec![vec![0.0; k]; k]; len.saturating_sub(1)];
    let mut best = 0;
    for (i, (p, s)) in paths.iter().zip(&scores).enumerate() {
        let prob = (s - log_z).exp();
        for t in 0..len {
            unary[t][p[t]] += prob;
            if t + 1 < len {
                pairwise[t][p[t]][p[t + 1]] += prob;
            }
        }
        if *s > scores[best] {
            best = i;
        }
    }
    Enumeration {
        log_z,
        unary,
        pairwise,
        best_path: paths[best].clone(),
        best_score: scores[best],
    }
}

/// Negative log-likelihood plus `c2 * |w|^2`, by enumeration.
pub fn brute_nll(model: &ModelParameters, batch: &[(Vec<Vec<String>>, Vec<usize>)], c2: f64) -> f64 {
    let data: f64 = batch
        .iter()
        .map(|(attrs, tags)| enumerate(model, attrs).log_z - path_score(model, attrs, tags))
        .sum();
    let l2: f64 = model.weights.as_slice().iter().map(|w| w * w).sum();
    data + c2 * l2
}

/// Every shape a formula such as `(C)CV(C)` can take, by expanding each
/// optional slot both ways.
pub fn expand(formula: &str) -> Vec<String> {
    let mut slots: Vec<(char, bool)> = Vec::new();
    let mut chars = formula.chars();
    while let Some(c) = chars.next() {
        match c {
            '(' => {
                let inner = chars.next().unwrap();
                assert_eq!(chars.next(), Some(')'));
                slots.push((inner, true));
            }
            'C' | 'V' => slots.push((c, false)),
            other => panic!("unexpected {other:?} in {formula}"),
        }
    }
    let optional = slots.iter().filter(|s| s.1).count();
    let mut out = Vec::new();
    for mask in 0u32..(1 << optional) {
        let mut bit = 0;
        let mut s = String::new();
        for &(c, opt) in &slots {
            if opt {
                if mask >> bit & 1 == 1 {
                    s.push(c);
                }
                bit += 1;
            } else {
                s.push(c);
            }
        }
        out.push(s);
    }
    out
}

pub const SHAPES: [&str; 7] = [
    "(C)(C)V(C)(C)",
    "V(C)(C)(C)V(C)",
    "(C)CV(C)(C)CV(C)(C)",
    "(C)CV(C)(C)V(C)(C)",
    "V(C)(C)CV(C)(C)CV(C)",
    "(C)CV(C)(C)V(C)(C)(C)V(C)",
    "(C)V(C)CVCV(C)CV(C)",
];

/// Independent acceptance rule: some formula expands to `skeleton` and none of
/// the word-level exclusions apply.
pub fn oracle_accepts(skeleton: &str) -> bool {
    let vowels = skeleton.chars().filter(|&c| c == 'V').count();
    if skeleton == "V" || skeleton == "VV" || vowels > 4 {
        return false;
    }
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| SHAPES.iter().flat_map(|f| expand(f)).collect())
        .contains(skeleton)
}

pub fn all_skeletons(len: usize) -> impl Iterator<Item = String> {
    (0u32..(1 << len)).map(move |bits| {
        (0..len)
            .map(|i| if bits >> (len - 1 - i) & 1 == 1 { 'V' } else { 'C' })
            .collect()
    })
}
