//! Limited-memory quasi-Newton minimization. Plain L-BFGS when `c1 == 0`,
//! OWL-QN (orthant-wise L-BFGS) for `f(x) + c1 * |x|_1` otherwise.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iterations: usize,
    pub memory_pairs: usize,
    /// L1 weight, handled here through the orthant-wise extension.
    pub c1: f64,
    /// L2 weight. Not applied by [`minimize`]; objectives that support it
    /// (the CRF likelihood) read it from here.
    pub c2: f64,
    /// Stop once the max-norm of the (pseudo-)gradient falls to this value.
    pub gradient_tolerance: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub max_line_search: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            memory_pairs: 10,
            c1: 0.1,
            c2: 0.1,
            gradient_tolerance: 1e-5,
            armijo: 1e-4,
            backtrack: 0.5,
            max_line_search: 50,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |msg: &str| Err(OptimError::InvalidConfig(msg.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if self.memory_pairs < 1 {
            return bad("memory_pairs must be at least 1");
        }
        if !(self.c1 >= 0.0 && self.c1.is_finite()) || !(self.c2 >= 0.0 && self.c2.is_finite()) {
            return bad("c1 and c2 must be finite and non-negative");
        }
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient_tolerance must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo constant must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if self.max_line_search < 1 {
            return bad("max_line_search must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned a non-finite value or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("line search found no sufficient-decrease step at iteration {iteration}")]
    LineSearchFailed {
        iteration: usize,
        /// Last accepted point and the trace up to it.
        partial: Box<Minimum>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 is the starting point.
    pub iteration: usize,
    /// Regularized objective, including the L1 term.
    pub objective: f64,
    pub gradient_norm: f64,
    pub step: f64,
    pub nonzero: usize,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter {:>4}  objective {:.10e}  |g|max {:.4e}  step {:.4e}  nonzero {}",
            self.iteration, self.objective, self.gradient_norm, self.step, self.nonzero
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective)
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    /// Regularized objective at `x`.
    pub objective: f64,
    /// Accepted steps taken.
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: IterationTrace,
}

/// Subgradient of `f + c1 |x|_1` of minimum norm in the descent-feasible
/// direction.
pub fn pseudo_gradient(x: &[f64], grad: &[f64], c1: f64) -> Vec<f64> {
    if c1 == 0.0 {
        return grad.to_vec();
    }
    x.iter()
        .zip(grad)
        .map(|(&xi, &gi)| {
            if xi > 0.0 {
                gi + c1
            } else if xi < 0.0 {
                gi - c1
            } else if gi + c1 < 0.0 {
                gi + c1
            } else if gi - c1 > 0.0 {
                gi - c1
            } else {
                0.0
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn nonzero(v: &[f64]) -> usize {
    v.iter().filter(|&&x| x != 0.0).count()
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H * grad` via the two-loop recursion over the stored pairs.
fn two_loop(grad: &[f64], history: &VecDeque<CurvaturePair>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (pair, a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub fn minimize<F>(objective: F, x0: Vec<f64>, config: &OptimConfig) -> Result<Minimum, OptimError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_with_observer(objective, x0, config, |_| {})
}

/// Like [`minimize`], calling `observer` after the starting point and after
/// every accepted step.
pub fn minimize_with_observer<F, O>(
    mut objective: F,
    x0: Vec<f64>,
    config: &OptimConfig,
    mut observer: O,
) -> Result<Minimum, OptimError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    O: FnMut(&IterationRecord),
{
    config.validate()?;
    let c1 = config.c1;
    let finite = |f: f64, g: &[f64]| f.is_finite() && g.iter().all(|v| v.is_finite());

    let mut x = x0;
    let (f0, mut g) = objective(&x);
    if !finite(f0, &g) || g.len() != x.len() {
        return Err(OptimError::NonFinite { iteration: 0 });
    }
    let mut big_f = f0 + c1 * l1_norm(&x);
    let mut pg = pseudo_gradient(&x, &g, c1);
    let mut trace = IterationTrace::default();
    let first = IterationRecord {
        iteration: 0,
        objective: big_f,
        gradient_norm: max_norm(&pg),
        step: 0.0,
        nonzero: nonzero(&x),
    };
    observer(&first);
    trace.records.push(first);

    let mut history: VecDeque<CurvaturePair> = VecDeque::with_capacity(config.memory_pairs);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < config.max_iterations {
        if max_norm(&pg) <= config.gradient_tolerance {
            stop = StopReason::Converged;
            break;
        }
        let iteration = iterations + 1;

        let mut accepted = None;
        // Second attempt falls back to steepest descent with fresh memory.
        for attempt in 0..2 {
            if attempt == 1 {
                if history.is_empty() {
                    break;
                }
                history.clear();
            }
            let mut d = two_loop(&pg, &history);
            if c1 > 0.0 {
                for (di, &pi) in d.iter_mut().zip(&pg) {
                    if *di * pi >= 0.0 {
                        *di = 0.0;
                    }
                }
            }
            if dot(&d, &pg) >= 0.0 {
                history.clear();
                d = pg.iter().map(|v| -v).collect();
            }
            let orthant: Vec<f64> = x
                .iter()
                .zip(&pg)
                .map(|(&xi, &pi)| if xi != 0.0 { xi.signum() } else { -pi.signum() })
                .collect();

            let mut step = if history.is_empty() {
                (1.0 / dot(&d, &d).sqrt()).min(1.0)
            } else {
                1.0
            };
            for _ in 0..config.max_line_search {
                let mut x_new: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                if c1 > 0.0 {
                    for (xn, &o) in x_new.iter_mut().zip(&orthant) {
                        if *xn * o <= 0.0 {
                            *xn = 0.0;
                        }
                    }
                }
                let (f_new, g_new) = objective(&x_new);
                if !finite(f_new, &g_new) || g_new.len() != x.len() {
                    return Err(OptimError::NonFinite { iteration });
                }
                let big_f_new = f_new + c1 * l1_norm(&x_new);
                let decrease: f64 = pg
                    .iter()
                    .zip(x_new.iter().zip(&x))
                    .map(|(p, (xn, xo))| p * (xn - xo))
                    .sum();
                if big_f_new <= big_f + config.armijo * decrease {
                    accepted = Some((x_new, g_new, big_f_new, step));
                    break;
                }
                step *= config.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some((x_new, g_new, big_f_new, step)) = accepted else {
            let partial = Minimum {
                objective: big_f,
                x,
                iterations,
                stop: StopReason::MaxIterations,
                trace,
            };
            return Err(OptimError::LineSearchFailed {
                iteration,
                partial: Box::new(partial),
            });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        if ys > 1e-10 {
            if history.len() == config.memory_pairs {
                history.pop_front();
            }
            history.push_back(CurvaturePair { s, y, rho: 1.0 / ys });
        }

        x = x_new;
        g = g_new;
        big_f = big_f_new;
        pg = pseudo_gradient(&x, &g, c1);
        iterations = iteration;
        let record = IterationRecord {
            iteration,
            objective: big_f,
            gradient_norm: max_norm(&pg),
            step,
            nonzero: nonzero(&x),
        };
        observer(&record);
        trace.records.push(record);
    }
    if max_norm(&pg) <= config.gradient_tolerance {
        stop = StopReason::Converged;
    }
    Ok(Minimum {
        x,
        objective: big_f,
        iterations,
        stop,
        trace,
    })
}
