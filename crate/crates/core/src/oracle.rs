//! Independent ground truth for the rest of the crate: exhaustive subset
//! enumeration, central-difference gradients, and summary statistics of the
//! per-iteration progress trace.

use crate::error::{Error, Result};
use crate::exchange::SwapRecord;
use crate::relax::{self, DesignInstance};
use crate::spectra;

/// Enumeration guard: refuse above this many subsets.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Result of exhaustive subset search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Lexicographically first minimizer.
    pub best_set: Vec<usize>,
    /// `(tr((sum_{i in S} u_i u_i^T)^{-p}))^{1/p}` of the best set.
    pub best_objective: f64,
    /// Number of subsets visited (singular ones included).
    pub enumerated: u64,
}

fn count_combinations(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Objective of one subset, or `None` when the subset covariance is singular.
fn subset_objective(instance: &DesignInstance, set: &[usize], p: f64) -> Option<f64> {
    crate::objective::trace_objective(&instance.subset_gram(set), p).ok()
}

/// Lexicographic successor of a combination drawn from `[.., n)`; the lower
/// end of the window never matters because only saturation against `n` does.
fn advance(indices: &mut [usize], n: usize) -> bool {
    let k = indices.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if indices[i] != i + n - k {
            break;
        }
    }
    indices[i] += 1;
    for j in (i + 1)..k {
        indices[j] = indices[j - 1] + 1;
    }
    true
}

fn scan_range(
    instance: &DesignInstance,
    first: usize,
    k: usize,
    p: f64,
) -> (Option<(f64, Vec<usize>)>, u64) {
    // All size-k subsets whose smallest element is `first`.
    let n = instance.n();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count = 0u64;
    if k == 0 {
        return (None, 0);
    }
    let rest = k - 1;
    if n - first - 1 < rest {
        return (None, 0);
    }
    let mut tail: Vec<usize> = (first + 1..first + 1 + rest).collect();
    loop {
        let mut set = Vec::with_capacity(k);
        set.push(first);
        set.extend_from_slice(&tail);
        count += 1;
        if let Some(obj) = subset_objective(instance, &set, p) {
            let better = match &best {
                None => true,
                Some((b, _)) => obj < *b,
            };
            if better {
                best = Some((obj, set));
            }
        }
        if rest == 0 || !advance(&mut tail, n) {
            break;
        }
    }
    (best, count)
}

fn merge(
    a: (Option<(f64, Vec<usize>)>, u64),
    b: (Option<(f64, Vec<usize>)>, u64),
) -> (Option<(f64, Vec<usize>)>, u64) {
    let best = match (a.0, b.0) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            // Strictly better objective wins; exact ties go to the
            // lexicographically smaller set, so the merge order of parallel
            // partitions cannot change the answer.
            if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) {
                Some(y)
            } else {
                Some(x)
            }
        }
    };
    (best, a.1 + b.1)
}

/// Exact minimizer of `(tr((sum_{i in S} u_i u_i^T)^{-p}))^{1/p}` over
/// subsets of size exactly `min(k, n)`; exact-`k` search is enough because
/// adding a vector never increases the objective. Singular subsets are
/// skipped. Ties break lexicographically.
pub fn brute_force_best(instance: &DesignInstance) -> Result<BruteForceResult> {
    #[cfg(feature = "parallel")]
    {
        brute_force_impl(instance, true)
    }
    #[cfg(not(feature = "parallel"))]
    {
        brute_force_impl(instance, false)
    }
}

/// Sequential entry point, independent of the `parallel` feature; the
/// benchmark suite compares this against [`brute_force_best`].
pub fn brute_force_best_seq(instance: &DesignInstance) -> Result<BruteForceResult> {
    brute_force_impl(instance, false)
}

fn brute_force_impl(instance: &DesignInstance, parallel: bool) -> Result<BruteForceResult> {
    let p = instance
        .exponent()
        .as_finite()
        .ok_or_else(|| Error::UnsupportedExponent("brute force needs finite p".into()))?;
    let n = instance.n();
    let k = instance.k().min(n);
    let subsets = count_combinations(n, k);
    if subsets > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { subsets, limit: ENUMERATION_LIMIT });
    }
    let firsts: Vec<usize> = (0..=(n - k)).collect();

    let (best, enumerated) = if parallel {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            firsts
                .par_iter()
                .map(|&f| scan_range(instance, f, k, p))
                .reduce(|| (None, 0), merge)
        }
        #[cfg(not(feature = "parallel"))]
        {
            unreachable!("parallel path without the parallel feature")
        }
    } else {
        firsts
            .iter()
            .map(|&f| scan_range(instance, f, k, p))
            .fold((None, 0), merge)
    };

    let (best_objective, best_set) = best.ok_or(Error::RankDeficient)?;
    Ok(BruteForceResult { best_set, best_objective, enumerated })
}

/// Summary of a progress trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressSummary {
    /// Sum of per-iteration progress over records where it is defined.
    pub cumulative_progress: f64,
    pub mean_progress: f64,
    pub variance: f64,
    pub max_abs_progress: f64,
    /// `max |progress| / scale` when an increment scale (typically
    /// `tr(X^{-p}) * p / k`) is supplied.
    pub increment_ratio: Option<f64>,
    /// Records carrying a defined progress value.
    pub counted: usize,
}

pub fn progress_statistics(trace: &[SwapRecord], increment_scale: Option<f64>) -> ProgressSummary {
    let values: Vec<f64> = trace.iter().filter_map(|r| r.progress).collect();
    let counted = values.len();
    let cumulative: f64 = values.iter().sum();
    let mean = if counted > 0 { cumulative / counted as f64 } else { 0.0 };
    let variance = if counted > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (counted as f64 - 1.0)
    } else {
        0.0
    };
    let max_abs = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    ProgressSummary {
        cumulative_progress: cumulative,
        mean_progress: mean,
        variance,
        max_abs_progress: max_abs,
        increment_ratio: increment_scale.map(|s| max_abs / s),
        counted,
    }
}

/// Central differences of the relaxation objective `(tr X(x)^{-p})^{1/p}`.
/// The evaluation route is shared with the solver; the differentiation route
/// is not, which is the point of the oracle.
pub fn finite_difference_gradient(
    instance: &DesignInstance,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    assert!(h > 0.0);
    let base = instance.weighted_gram(x);
    if !spectra::eig_sym(&base)?.is_positive_definite() {
        return Err(Error::SingularMatrix);
    }
    let n = instance.n();
    let mut grad = Vec::with_capacity(n);
    let mut xs = x.to_vec();
    for i in 0..n {
        let orig = xs[i];
        xs[i] = orig + h;
        let plus = relax::objective_value(instance, &xs)?;
        xs[i] = orig - h;
        let minus = relax::objective_value(instance, &xs)?;
        xs[i] = orig;
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}
