//! The continuous side of the pipeline: the convex relaxation over weights
//! `x` in `{0 <= x <= 1, sum x <= k}` minimizing `(tr X(x)^{-p})^{1/p}`, a
//! null-space walk that prunes the fractional support to at most
//! `d(d+1)/2 + 1` entries without moving `X`, whitening so the fractional
//! design becomes the identity, and the first-order optimality certificate
//! `<X^{-p-1}, u_i u_i^T> <= tr(X^{-p}) / k` on fractional coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{self, PNormExponent};
use crate::spectra::{self, SymMatrix};

/// Entries strictly inside `(tau, 1 - tau)` count as fractional.
pub const FRACTIONAL_TAU: f64 = 1e-9;

/// Default solver budget used by the end-to-end pipeline and the CLI.
pub const DEFAULT_MAX_ITERS: usize = 200_000;

/// Default stationarity tolerance `||x - proj(x - grad)||_inf`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Conservation tolerance for sparsification and whitening checks.
pub const CONSERVATION_TOL: f64 = 1e-8;

/// A design instance: `n` row vectors in `R^d`, a budget `k >= d`, the
/// objective exponent, and the rounding accuracy `epsilon`.
///
/// `k > n` is accepted: the budget constraint is then inactive and the
/// relaxation optimum is the all-ones weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignInstance {
    vectors: Vec<f64>, // n x d, row-major
    n: usize,
    d: usize,
    k: usize,
    exponent: PNormExponent,
    epsilon: f64,
}

impl DesignInstance {
    pub fn new(
        rows: &[Vec<f64>],
        k: usize,
        exponent: PNormExponent,
        epsilon: f64,
    ) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInstance("need at least one vector".into()));
        }
        let d = rows[0].len();
        let mut vectors = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::InvalidInstance("ragged vector rows".into()));
            }
            vectors.extend_from_slice(row);
        }
        Self::from_flat(vectors, n, d, k, exponent, epsilon)
    }

    pub fn from_flat(
        vectors: Vec<f64>,
        n: usize,
        d: usize,
        k: usize,
        exponent: PNormExponent,
        epsilon: f64,
    ) -> Result<Self> {
        if d == 0 || n == 0 || vectors.len() != n * d {
            return Err(Error::InvalidInstance("inconsistent dimensions".into()));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite vector entry".into()));
        }
        if k < d {
            return Err(Error::InvalidInstance(format!(
                "budget k = {k} must be at least the dimension d = {d}"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidInstance(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let instance = DesignInstance { vectors, n, d, k, exponent, epsilon };
        let gram = instance.weighted_gram(&vec![1.0; n]);
        let dec = spectra::eig_sym(&gram)?;
        if !dec.is_positive_definite() {
            return Err(Error::RankDeficient);
        }
        Ok(instance)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn exponent(&self) -> PNormExponent {
        self.exponent
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn with_exponent(&self, exponent: PNormExponent) -> Self {
        DesignInstance { exponent, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidInstance(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(DesignInstance { epsilon, ..self.clone() })
    }

    pub fn with_budget(&self, k: usize) -> Result<Self> {
        if k < self.d {
            return Err(Error::InvalidInstance(format!(
                "budget k = {k} must be at least the dimension d = {}",
                self.d
            )));
        }
        Ok(DesignInstance { k, ..self.clone() })
    }

    /// `sum_i w_i u_i u_i^T`.
    pub fn weighted_gram(&self, weights: &[f64]) -> SymMatrix {
        debug_assert_eq!(weights.len(), self.n);
        let mut m = SymMatrix::zeros(self.d);
        for (i, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                m.add_outer(self.row(i), w);
            }
        }
        m
    }

    /// `sum_{i in set} u_i u_i^T`.
    pub fn subset_gram(&self, set: &[usize]) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.d);
        for &i in set {
            m.add_outer(self.row(i), 1.0);
        }
        m
    }
}

/// `(tr X(x)^{-p})^{1/p}`: the relaxation objective without the `1/d`
/// normalization (the normalization cancels from every ratio we report).
pub fn objective_value(instance: &DesignInstance, x: &[f64]) -> Result<f64> {
    let p = instance
        .exponent()
        .as_finite()
        .ok_or_else(|| Error::UnsupportedExponent("relaxation needs finite p".into()))?;
    objective::trace_objective(&instance.weighted_gram(x), p)
}

/// A feasible weight vector with its design matrix and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    pub x: Vec<f64>,
    pub big_x: SymMatrix,
    /// `(tr X^{-p})^{1/p}`.
    pub objective: f64,
    /// Indices with `tau < x(i) < 1 - tau`.
    pub fractional_support: Vec<usize>,
    /// False when the solver hit its iteration cap before reaching the
    /// stationarity tolerance; the solution is the best iterate found.
    pub converged: bool,
    /// Final value of `||x - proj(x - grad)||_inf`.
    pub stationarity: f64,
}

impl FractionalSolution {
    pub fn from_weights(
        instance: &DesignInstance,
        mut x: Vec<f64>,
        converged: bool,
        stationarity: f64,
    ) -> Result<Self> {
        assert_eq!(x.len(), instance.n());
        for v in x.iter_mut() {
            debug_assert!(*v >= -1e-12 && *v <= 1.0 + 1e-12, "weight {v} out of box");
            *v = v.clamp(0.0, 1.0);
        }
        let total: f64 = x.iter().sum();
        if total > instance.k() as f64 + 1e-9 {
            return Err(Error::InvalidInstance(format!(
                "weights sum to {total}, above the budget {}",
                instance.k()
            )));
        }
        let big_x = instance.weighted_gram(&x);
        let objective = objective_value(instance, &x)?;
        let fractional_support = fractional_support_of(&x);
        Ok(FractionalSolution {
            x,
            big_x,
            objective,
            fractional_support,
            converged,
            stationarity,
        })
    }
}

pub fn fractional_support_of(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v > FRACTIONAL_TAU && v < 1.0 - FRACTIONAL_TAU)
        .map(|(i, _)| i)
        .collect()
}

/// Whitened copy of the instance vectors: `v_i = X^{-1/2} u_i`, so that
/// `sum_i x_i v_i v_i^T = I`.
#[derive(Debug, Clone)]
pub struct NormalizedInstance {
    v_vectors: Vec<f64>, // n x d, row-major
    pub whitener: SymMatrix,
    n: usize,
    d: usize,
}

impl NormalizedInstance {
    #[cfg(test)]
    pub(crate) fn from_parts(v_vectors: Vec<f64>, whitener: SymMatrix, n: usize, d: usize) -> Self {
        debug_assert_eq!(v_vectors.len(), n * d);
        NormalizedInstance { v_vectors, whitener, n, d }
    }

    pub fn v(&self, i: usize) -> &[f64] {
        &self.v_vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

/// Exact Euclidean projection onto `{0 <= x <= 1, sum x <= budget}` by a
/// scalar threshold search over the breakpoints of
/// `g(theta) = sum_i clamp(y_i - theta, 0, 1)`.
pub fn project_capped_simplex(y: &[f64], budget: f64) -> Vec<f64> {
    let clamped: Vec<f64> = y.iter().map(|&v| v.clamp(0.0, 1.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= budget {
        return clamped;
    }
    let g = |theta: f64| -> f64 { y.iter().map(|&v| (v - theta).clamp(0.0, 1.0)).sum() };
    let mut bps: Vec<f64> = y
        .iter()
        .flat_map(|&v| [v, v - 1.0])
        .filter(|&b| b > 0.0)
        .collect();
    bps.push(0.0);
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    // Smallest breakpoint index where g drops to the budget or below; g at
    // the largest breakpoint (max y) is zero, so it exists.
    let (mut lo, mut hi) = (0usize, bps.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if g(bps[mid]) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (g(bps[lo]), g(bps[hi]));
    let theta = if g_lo <= budget {
        bps[lo]
    } else if g_lo - g_hi <= 0.0 {
        bps[hi]
    } else {
        // g is linear between adjacent breakpoints.
        bps[lo] + (g_lo - budget) * (bps[hi] - bps[lo]) / (g_lo - g_hi)
    };
    y.iter().map(|&v| (v - theta).clamp(0.0, 1.0)).collect()
}

/// Projected gradient with Barzilai-Borwein step sizes and Armijo
/// backtracking. Stops at `||x - proj(x - grad)||_inf <= tol`; if the
/// iteration cap lands first the best iterate is returned with
/// `converged = false`.
pub fn solve_relaxation(
    instance: &DesignInstance,
    max_iters: usize,
    tol: f64,
) -> Result<FractionalSolution> {
    let budget = instance.k() as f64;
    let n = instance.n();
    let start = vec![(budget / n as f64).min(1.0); n];
    let mut x = project_capped_simplex(&start, budget);

    let eval = |x: &[f64]| objective_value(instance, x);
    let mut f = eval(&x).map_err(|e| match e {
        Error::SingularMatrix => Error::RankDeficient,
        other => other,
    })?;
    let mut grad = objective::phi_p_weight_gradient(instance, &x)?;

    let stationarity_at = |x: &[f64], grad: &[f64]| -> f64 {
        let full: Vec<f64> = x.iter().zip(grad).map(|(xi, gi)| xi - gi).collect();
        let proj = project_capped_simplex(&full, budget);
        x.iter()
            .zip(proj.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };

    let mut step = {
        let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        1.0 / gmax.max(1e-12)
    };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut stationarity = stationarity_at(&x, &grad);
    let mut converged = stationarity <= tol;

    for _ in 0..max_iters {
        if converged {
            break;
        }
        if let Some((px, pg)) = &prev {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..n {
                let s = x[i] - px[i];
                let y = grad[i] - pg[i];
                ss += s * s;
                sy += s * y;
            }
            if sy > 1e-300 {
                step = (ss / sy).clamp(1e-12, 1e12);
            }
        }
        prev = Some((x.clone(), grad.clone()));

        let mut alpha = step;
        let mut advanced = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - alpha * gi).collect();
            let cand = project_capped_simplex(&trial, budget);
            let decrease: f64 = grad
                .iter()
                .zip(x.iter().zip(cand.iter()))
                .map(|(g, (xi, ci))| g * (xi - ci))
                .sum();
            if decrease <= 0.0 {
                break; // projection did not move: stationary along this step
            }
            if let Ok(fc) = eval(&cand) {
                if fc <= f - 1e-4 * decrease {
                    x = cand;
                    f = fc;
                    grad = objective::phi_p_weight_gradient(instance, &x)?;
                    advanced = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !advanced {
            break;
        }
        stationarity = stationarity_at(&x, &grad);
        converged = stationarity <= tol;
    }

    FractionalSolution::from_weights(instance, x, converged, stationarity)
}

/// Prune the fractional support to at most `d(d+1)/2 + 1` entries by walking
/// along null directions of the moment map: any `delta` supported on
/// fractional entries with `sum delta_i = 0` and `sum delta_i u_i u_i^T = 0`
/// leaves both the budget and `X` unchanged, and moving to the nearest box
/// boundary retires at least one fractional entry per round.
pub fn sparsify_support(
    instance: &DesignInstance,
    sol: &FractionalSolution,
) -> Result<FractionalSolution> {
    let d = instance.d();
    let target = d * (d + 1) / 2 + 1;
    let mut x = sol.x.clone();

    let mut rounds = sol.fractional_support.len() + 1;
    loop {
        let frac = fractional_support_of(&x);
        if frac.len() <= target || rounds == 0 {
            break;
        }
        rounds -= 1;
        let cols: Vec<usize> = frac[..target + 1].to_vec();
        // Rows: budget conservation plus the upper triangle of the moment map.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(target);
        rows.push(vec![1.0; cols.len()]);
        for a in 0..d {
            for b in a..d {
                rows.push(
                    cols.iter()
                        .map(|&i| instance.row(i)[a] * instance.row(i)[b])
                        .collect(),
                );
            }
        }
        let delta = null_space_vector(&rows);
        let mut t_pos = f64::INFINITY;
        let mut t_neg = f64::NEG_INFINITY;
        for (j, &i) in cols.iter().enumerate() {
            let dj = delta[j];
            if dj > 1e-14 {
                t_pos = t_pos.min((1.0 - x[i]) / dj);
                t_neg = t_neg.max(-x[i] / dj);
            } else if dj < -1e-14 {
                t_pos = t_pos.min(x[i] / (-dj));
                t_neg = t_neg.max((1.0 - x[i]) / dj);
            }
        }
        if !t_pos.is_finite() && !t_neg.is_finite() {
            break; // degenerate direction; leave the support as-is
        }
        let t = if t_pos.is_finite() && (-t_neg > t_pos || !t_neg.is_finite()) {
            t_pos
        } else {
            t_neg
        };
        for (j, &i) in cols.iter().enumerate() {
            x[i] = (x[i] + t * delta[j]).clamp(0.0, 1.0);
        }
    }
    FractionalSolution::from_weights(instance, x, sol.converged, sol.stationarity)
}

/// A nonzero null vector of an `r x c` system with `c > r`, via row-reduction
/// with partial pivoting and a free column set to one.
fn null_space_vector(rows: &[Vec<f64>]) -> Vec<f64> {
    let r = rows.len();
    let c = rows[0].len();
    debug_assert!(c > r);
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..c {
        if row >= r {
            break;
        }
        let best = (row..r)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).expect("finite"))
            .expect("non-empty");
        if m[best][col].abs() <= 1e-12 * scale {
            continue;
        }
        m.swap(row, best);
        let piv = m[row][col];
        for j in 0..c {
            m[row][j] /= piv;
        }
        for rr in 0..r {
            if rr != row && m[rr][col] != 0.0 {
                let factor = m[rr][col];
                for j in 0..c {
                    m[rr][j] -= factor * m[row][j];
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let free = (0..c)
        .find(|col| !pivots.iter().any(|&(_, pc)| pc == *col))
        .expect("free column exists when c > rank");
    let mut delta = vec![0.0; c];
    delta[free] = 1.0;
    for &(prow, pcol) in &pivots {
        delta[pcol] = -m[prow][free];
    }
    delta
}

/// Whiten: `v_i = X^{-1/2} u_i`, making the fractional design the identity.
pub fn normalize(instance: &DesignInstance, sol: &FractionalSolution) -> Result<NormalizedInstance> {
    let dec = spectra::eig_sym(&sol.big_x)?;
    if !dec.is_positive_definite() {
        return Err(Error::SingularMatrix);
    }
    let whitener = dec.apply(|l| 1.0 / l.sqrt());
    let n = instance.n();
    let d = instance.d();
    let mut v_vectors = Vec::with_capacity(n * d);
    for i in 0..n {
        v_vectors.extend_from_slice(&whitener.mat_vec(instance.row(i)));
    }
    Ok(NormalizedInstance { v_vectors, whitener, n, d })
}

/// First-order optimality certificate: on the fractional support every
/// leverage `<X^{-p-1}, u_i u_i^T>` must stay below `tr(X^{-p}) / k`, up to a
/// `1e-4 * tr(X^{-p}) / k` slack for the inexact solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCertificate {
    pub max_violation: f64,
    pub threshold: f64,
    pub passed: bool,
    pub fractional_checked: usize,
}

pub fn certify_optimality(
    instance: &DesignInstance,
    sol: &FractionalSolution,
) -> Result<OptimalityCertificate> {
    let p = instance
        .exponent()
        .as_finite()
        .ok_or_else(|| Error::UnsupportedExponent("certificate needs finite p".into()))?;
    let dec = spectra::eig_sym(&sol.big_x)?;
    if !dec.is_positive_definite() {
        return Err(Error::SingularMatrix);
    }
    let trace_p = spectra::trace_neg_power_from_spectrum(dec.eigenvalues(), p)?;
    let bound = trace_p / instance.k() as f64;
    // Signed: negative values report the slack of the most binding entry.
    let mut max_violation = f64::NEG_INFINITY;
    for &i in &sol.fractional_support {
        let w = dec.coordinates(instance.row(i));
        let lev: f64 = w
            .iter()
            .zip(dec.eigenvalues())
            .map(|(wj, &l)| wj * wj * l.powf(-p - 1.0))
            .sum();
        max_violation = max_violation.max(lev - bound);
    }
    if sol.fractional_support.is_empty() {
        max_violation = 0.0;
    }
    let threshold = 1e-4 * bound;
    Ok(OptimalityCertificate {
        max_violation,
        threshold,
        passed: max_violation <= threshold,
        fractional_checked: sol.fractional_support.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        // Box-Muller keeps this file independent of rand_distr.
        (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let u1: f64 = rng.random::<f64>().max(1e-12);
                        let u2: f64 = rng.random();
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    })
                    .collect()
            })
            .collect()
    }

    fn instance(
        rng: &mut ChaCha8Rng,
        n: usize,
        d: usize,
        k: usize,
        p: f64,
        eps: f64,
    ) -> DesignInstance {
        DesignInstance::new(
            &gaussian_rows(rng, n, d),
            k,
            PNormExponent::finite(p).unwrap(),
            eps,
        )
        .unwrap()
    }

    #[test]
    fn instance_validation() {
        let e = PNormExponent::finite(2.0).unwrap();
        assert!(matches!(
            DesignInstance::new(&[vec![1.0, 0.0]], 1, e, 0.5),
            Err(Error::InvalidInstance(_)) // k < d
        ));
        assert!(matches!(
            DesignInstance::new(&[vec![1.0, 0.0], vec![2.0, 0.0]], 2, e, 0.5),
            Err(Error::RankDeficient)
        ));
        assert!(matches!(
            DesignInstance::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2, e, 1.5),
            Err(Error::InvalidInstance(_))
        ));
        // k > n is allowed; the budget is simply inactive.
        assert!(DesignInstance::new(&[vec![1.0, 0.0], vec![0.0, 1.0]], 5, e, 0.5).is_ok());
    }

    #[test]
    fn projection_feasible_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n = 1 + (rng.random::<u32>() % 12) as usize;
            let y: Vec<f64> = (0..n).map(|_| 4.0 * (rng.random::<f64>() - 0.3)).collect();
            let budget = 1.0 + (rng.random::<u32>() % n as u32) as f64;
            let p = project_capped_simplex(&y, budget);
            let total: f64 = p.iter().sum();
            assert!(total <= budget + 1e-9, "budget violated: {total} > {budget}");
            assert!(p.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
            let pp = project_capped_simplex(&p, budget);
            for (a, b) in p.iter().zip(pp.iter()) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn projection_matches_bisection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..100 {
            let n = 2 + (rng.random::<u32>() % 10) as usize;
            let y: Vec<f64> = (0..n).map(|_| 3.0 * (rng.random::<f64>() - 0.4)).collect();
            let budget = 1.0 + (rng.random::<u32>() % n as u32) as f64;
            let exact = project_capped_simplex(&y, budget);
            let clamped_total: f64 = y.iter().map(|&v| v.clamp(0.0, 1.0)).sum();
            if clamped_total <= budget {
                continue;
            }
            let g = |t: f64| y.iter().map(|&v| (v - t).clamp(0.0, 1.0)).sum::<f64>();
            let (mut lo, mut hi) = (0.0, y.iter().cloned().fold(0.0, f64::max));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let theta = 0.5 * (lo + hi);
            for (i, &v) in y.iter().enumerate() {
                assert!((exact[i] - (v - theta).clamp(0.0, 1.0)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn solve_identity_instance_is_all_ones() {
        // n = d = k with axis vectors: the only full-rank choice is x = 1.
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let inst =
            DesignInstance::new(&rows, 3, PNormExponent::finite(2.0).unwrap(), 0.25).unwrap();
        let sol = solve_relaxation(&inst, 10_000, 1e-8).unwrap();
        assert!(sol.converged);
        for &v in &sol.x {
            assert!((v - 1.0).abs() <= 1e-8);
        }
        let expected = 3.0_f64.powf(0.5); // (tr I^{-p})^{1/p} = d^{1/p}
        assert!((sol.objective - expected).abs() <= 1e-7);
        assert!(sol.fractional_support.is_empty());
    }

    #[test]
    fn solve_one_dimensional_mass_k() {
        // d = 1, identical unit vectors: any split with total mass k is
        // optimal; objective (tr X^{-1})^{1/1} = 1/k.
        let rows: Vec<Vec<f64>> = (0..6).map(|_| vec![1.0]).collect();
        let inst = DesignInstance::new(&rows, 4, PNormExponent::finite(1.0).unwrap(), 0.25).unwrap();
        let sol = solve_relaxation(&inst, 20_000, 1e-10).unwrap();
        let total: f64 = sol.x.iter().sum();
        assert!((total - 4.0).abs() <= 1e-7, "total mass {total}");
        assert!((sol.objective - 0.25).abs() <= 1e-8);
    }

    #[test]
    fn solve_saturating_instance_stays_feasible_and_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let inst = instance(&mut rng, 14, 3, 5, 2.0, 0.25);
        let sol = solve_relaxation(&inst, 50_000, 1e-8).unwrap();
        assert!(sol.converged, "stationarity {}", sol.stationarity);
        let total: f64 = sol.x.iter().sum();
        assert!(total <= 5.0 + 1e-9);
        assert!(spectra::eig_sym(&sol.big_x).unwrap().is_positive_definite());
    }

    #[test]
    fn sparsify_is_noop_on_small_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let inst = instance(&mut rng, 8, 2, 4, 1.0, 0.25);
        let sol = solve_relaxation(&inst, 50_000, 1e-8).unwrap();
        if sol.fractional_support.len() <= 4 {
            let sparse = sparsify_support(&inst, &sol).unwrap();
            assert_eq!(sparse.x, sol.x);
        }
    }

    #[test]
    fn sparsify_preserves_moment_map_and_budget() {
        // Hand-built d = 2 solution with ten fractional entries.
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let rows = gaussian_rows(&mut rng, 10, 2);
        let inst =
            DesignInstance::new(&rows, 6, PNormExponent::finite(2.0).unwrap(), 0.25).unwrap();
        let x = vec![0.55; 10];
        let sol = FractionalSolution::from_weights(&inst, x, true, 0.0).unwrap();
        assert_eq!(sol.fractional_support.len(), 10);
        let sparse = sparsify_support(&inst, &sol).unwrap();
        assert!(
            sparse.fractional_support.len() <= 4,
            "support {} > d(d+1)/2 + 1",
            sparse.fractional_support.len()
        );
        let x_drift = sparse.big_x.add_scaled(&sol.big_x, -1.0).frob_norm();
        assert!(x_drift <= CONSERVATION_TOL * sol.big_x.frob_norm().max(1.0));
        let mass_before: f64 = sol.x.iter().sum();
        let mass_after: f64 = sparse.x.iter().sum();
        assert!((mass_before - mass_after).abs() <= CONSERVATION_TOL);
        assert!((sparse.objective - sol.objective).abs() <= CONSERVATION_TOL * sol.objective);
        // Idempotent once the support is small.
        let again = sparsify_support(&inst, &sparse).unwrap();
        assert_eq!(again.x, sparse.x);
    }

    #[test]
    fn normalize_identity_and_diagonal_whiteners() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let inst =
            DesignInstance::new(&rows, 2, PNormExponent::finite(1.0).unwrap(), 0.25).unwrap();
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0], true, 0.0).unwrap();
        let norm = normalize(&inst, &sol).unwrap();
        assert!((norm.v(0)[0] - 1.0).abs() < 1e-12);
        assert!((norm.v(1)[1] - 1.0).abs() < 1e-12);

        // X = diag(4, 1) halves the first coordinate.
        let rows = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        let inst =
            DesignInstance::new(&rows, 2, PNormExponent::finite(1.0).unwrap(), 0.25).unwrap();
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0], true, 0.0).unwrap();
        let norm = normalize(&inst, &sol).unwrap();
        assert!((norm.v(0)[0] - 1.0).abs() < 1e-12); // (2, 0) -> (1, 0)
        assert!((norm.v(1)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_recovers_identity_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let inst = instance(&mut rng, 12, 3, 6, 2.0, 0.25);
        let sol = solve_relaxation(&inst, 50_000, 1e-8).unwrap();
        let norm = normalize(&inst, &sol).unwrap();
        let mut design = SymMatrix::zeros(3);
        for i in 0..inst.n() {
            design.add_outer(norm.v(i), sol.x[i]);
        }
        let err = design.add_scaled(&SymMatrix::identity(3), -1.0).frob_norm();
        assert!(err <= CONSERVATION_TOL, "whitened design off identity by {err}");
    }

    #[test]
    fn certificate_passes_on_solved_and_fails_on_perturbed() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let inst = instance(&mut rng, 12, 3, 6, 2.0, 0.25);
        let sol = solve_relaxation(&inst, 100_000, 1e-9).unwrap();
        let cert = certify_optimality(&inst, &sol).unwrap();
        assert!(
            cert.passed,
            "violation {} over threshold {}",
            cert.max_violation, cert.threshold
        );

        // Negative control with a provable violation: d = 1, rows (1,1,1,3),
        // uniform half weights give X = 6, and the heavy row has
        // u^2 = 9 > X/k = 3, so its leverage exceeds the bound outright.
        let rows = vec![vec![1.0], vec![1.0], vec![1.0], vec![3.0]];
        let inst1 =
            DesignInstance::new(&rows, 2, PNormExponent::finite(1.0).unwrap(), 0.25).unwrap();
        let bad = FractionalSolution::from_weights(&inst1, vec![0.5; 4], true, 0.0).unwrap();
        let bad_cert = certify_optimality(&inst1, &bad).unwrap();
        assert!(!bad_cert.passed, "suboptimal weights must fail the certificate");
        assert!(bad_cert.max_violation > bad_cert.threshold);
    }

    #[test]
    fn certificate_zero_violation_in_one_dimension() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![1.0]).collect();
        let inst = DesignInstance::new(&rows, 3, PNormExponent::finite(1.0).unwrap(), 0.25).unwrap();
        let sol = FractionalSolution::from_weights(&inst, vec![0.6; 5], true, 0.0).unwrap();
        let cert = certify_optimality(&inst, &sol).unwrap();
        assert!(cert.max_violation.abs() <= 1e-12);
        assert!(cert.passed);
    }
}
