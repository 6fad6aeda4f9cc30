use super::{CrfError, ModelParameters, Weights};

/// `log(sum(exp(xs)))` with max-shift. Returns `-inf` for an empty or
/// all-`-inf` input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Per-position, per-tag observation scores (T x K, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct StateScores {
    len: usize,
    num_tags: usize,
    data: Vec<f64>,
}

impl StateScores {
    pub fn from_vec(len: usize, num_tags: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), len * num_tags);
        Self {
            len,
            num_tags,
            data,
        }
    }

    /// `s[t][y]` as the sum of state weights of the active attributes at `t`.
    pub fn from_encoded(weights: &Weights, attrs: &[Vec<usize>]) -> Self {
        let k = weights.num_tags();
        let mut data = vec![0.0; attrs.len() * k];
        let state = weights.state_block();
        for (row, active) in data.chunks_exact_mut(k).zip(attrs) {
            for &a in active {
                for (s, w) in row.iter_mut().zip(&state[a * k..(a + 1) * k]) {
                    *s += w;
                }
            }
        }
        Self {
            len: attrs.len(),
            num_tags: k,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn get(&self, t: usize, y: usize) -> f64 {
        self.data[t * self.num_tags + y]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_tags..(t + 1) * self.num_tags]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.num_tags..(t + 1) * self.num_tags]
    }
}

/// Forward/backward tables for one sequence, all in natural-log domain.
#[derive(Debug, Clone)]
pub struct Lattice {
    scores: StateScores,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_z: f64,
}

impl Lattice {
    pub fn compute(scores: StateScores, weights: &Weights) -> Result<Self, CrfError> {
        let (n, k) = (scores.len(), scores.num_tags());
        if n == 0 {
            return Err(CrfError::EmptySequence);
        }
        let trans = weights.transition_block();
        let mut alpha = vec![0.0; n * k];
        let mut beta = vec![0.0; n * k];
        let mut buf = vec![0.0; k];

        for j in 0..k {
            alpha[j] = weights.begin(j) + scores.get(0, j);
        }
        for t in 1..n {
            let (prev, cur) = alpha.split_at_mut(t * k);
            let prev = &prev[(t - 1) * k..];
            for j in 0..k {
                for i in 0..k {
                    buf[i] = prev[i] + trans[i * k + j];
                }
                cur[j] = logsumexp(&buf) + scores.get(t, j);
            }
        }

        beta[(n - 1) * k..].copy_from_slice(weights.end_block());
        for t in (0..n - 1).rev() {
            let (cur, next) = beta.split_at_mut((t + 1) * k);
            let cur = &mut cur[t * k..];
            let next = &next[..k];
            let s_next = scores.row(t + 1);
            for i in 0..k {
                for j in 0..k {
                    buf[j] = trans[i * k + j] + s_next[j] + next[j];
                }
                cur[i] = logsumexp(&buf);
            }
        }

        for j in 0..k {
            buf[j] = alpha[(n - 1) * k + j] + weights.end(j);
        }
        let log_z = logsumexp(&buf);
        if !log_z.is_finite() {
            return Err(CrfError::NonFinite("partition function"));
        }
        Ok(Self {
            scores,
            alpha,
            beta,
            log_z,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn num_tags(&self) -> usize {
        self.scores.num_tags()
    }

    pub fn scores(&self) -> &StateScores {
        &self.scores
    }

    pub fn alpha(&self, t: usize, y: usize) -> f64 {
        self.alpha[t * self.num_tags() + y]
    }

    pub fn beta(&self, t: usize, y: usize) -> f64 {
        self.beta[t * self.num_tags() + y]
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// `log Z` recomputed from the backward table at position 0.
    pub fn log_z_from_beta(&self, weights: &Weights) -> f64 {
        let row: Vec<f64> = (0..self.num_tags())
            .map(|j| self.beta(0, j) + weights.begin(j) + self.scores.get(0, j))
            .collect();
        logsumexp(&row)
    }

    pub fn marginals(&self, weights: &Weights) -> Marginals {
        let (n, k) = (self.len(), self.num_tags());
        let mut unary = vec![0.0; n * k];
        for t in 0..n {
            for y in 0..k {
                unary[t * k + y] = (self.alpha(t, y) + self.beta(t, y) - self.log_z).exp();
            }
        }
        let trans = weights.transition_block();
        let mut pairwise = vec![0.0; n.saturating_sub(1) * k * k];
        for t in 0..n.saturating_sub(1) {
            let s_next = self.scores.row(t + 1);
            let slice = &mut pairwise[t * k * k..(t + 1) * k * k];
            for i in 0..k {
                let a = self.alpha(t, i) - self.log_z;
                for j in 0..k {
                    slice[i * k + j] =
                        (a + trans[i * k + j] + s_next[j] + self.beta(t + 1, j)).exp();
                }
            }
        }
        Marginals {
            len: n,
            num_tags: k,
            unary,
            pairwise,
        }
    }

    /// Score of a complete tag path under the scores held by this lattice.
    pub fn path_score(&self, weights: &Weights, tags: &[usize]) -> Result<f64, CrfError> {
        path_score(&self.scores, weights, tags)
    }
}

/// Posterior tag marginals of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    len: usize,
    num_tags: usize,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl Marginals {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    /// `P(y_t = y | x)`.
    pub fn unary(&self, t: usize, y: usize) -> f64 {
        self.unary[t * self.num_tags + y]
    }

    pub fn unary_row(&self, t: usize) -> &[f64] {
        &self.unary[t * self.num_tags..(t + 1) * self.num_tags]
    }

    /// `P(y_t = i, y_{t+1} = j | x)` for `t < len - 1`.
    pub fn pairwise(&self, t: usize, i: usize, j: usize) -> f64 {
        let k = self.num_tags;
        self.pairwise[t * k * k + i * k + j]
    }

    pub fn pairwise_slice(&self, t: usize) -> &[f64] {
        let kk = self.num_tags * self.num_tags;
        &self.pairwise[t * kk..(t + 1) * kk]
    }
}

pub(crate) fn path_score(
    scores: &StateScores,
    weights: &Weights,
    tags: &[usize],
) -> Result<f64, CrfError> {
    if tags.len() != scores.len() {
        return Err(CrfError::LengthMismatch {
            attrs: scores.len(),
            tags: tags.len(),
        });
    }
    let k = scores.num_tags();
    if let Some(&tag) = tags.iter().find(|&&y| y >= k) {
        return Err(CrfError::TagOutOfRange { tag, num_tags: k });
    }
    let Some((&first, _)) = tags.split_first() else {
        return Err(CrfError::EmptySequence);
    };
    let mut score = weights.begin(first) + weights.end(tags[tags.len() - 1]);
    for (t, &y) in tags.iter().enumerate() {
        score += scores.get(t, y);
        if t > 0 {
            score += weights.transition(tags[t - 1], y);
        }
    }
    Ok(score)
}

pub fn build_lattice<S: AsRef<str>>(
    model: &ModelParameters,
    attrs: &[Vec<S>],
) -> Result<Lattice, CrfError> {
    let encoded = model.encode_attributes(attrs);
    Lattice::compute(
        StateScores::from_encoded(&model.weights, &encoded),
        &model.weights,
    )
}

/// Unnormalized log score of `tags`; subtract `log Z` for `log p(tags | x)`.
pub fn sequence_log_score<S: AsRef<str>>(
    model: &ModelParameters,
    attrs: &[Vec<S>],
    tags: &[usize],
) -> Result<f64, CrfError> {
    let encoded = model.encode_attributes(attrs);
    path_score(
        &StateScores::from_encoded(&model.weights, &encoded),
        &model.weights,
        tags,
    )
}

pub fn posterior_marginals(lattice: &Lattice, model: &ModelParameters) -> Marginals {
    lattice.marginals(&model.weights)
}

/// Best path under `scores`. Ties go to the lower tag index at every choice.
pub(crate) fn viterbi_scores(
    scores: &StateScores,
    weights: &Weights,
) -> Result<(Vec<usize>, f64), CrfError> {
    let (n, k) = (scores.len(), scores.num_tags());
    if n == 0 {
        return Err(CrfError::EmptySequence);
    }
    let mut delta: Vec<f64> = (0..k).map(|j| weights.begin(j) + scores.get(0, j)).collect();
    let mut back = vec![0usize; n * k];
    let mut next = vec![0.0; k];
    for t in 1..n {
        for j in 0..k {
            let mut best = 0;
            let mut best_score = delta[0] + weights.transition(0, j);
            for i in 1..k {
                let s = delta[i] + weights.transition(i, j);
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            back[t * k + j] = best;
            next[j] = best_score + scores.get(t, j);
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut last = 0;
    let mut best_score = delta[0] + weights.end(0);
    for j in 1..k {
        let s = delta[j] + weights.end(j);
        if s > best_score {
            last = j;
            best_score = s;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t * k + path[t]];
    }
    Ok((path, best_score))
}

pub fn viterbi<S: AsRef<str>>(
    model: &ModelParameters,
    attrs: &[Vec<S>],
) -> Result<(Vec<usize>, f64), CrfError> {
    let encoded = model.encode_attributes(attrs);
    viterbi_scores(
        &StateScores::from_encoded(&model.weights, &encoded),
        &model.weights,
    )
}
