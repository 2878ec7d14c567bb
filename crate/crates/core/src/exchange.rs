//! Randomized exchange rounding: sample an initial set from the fractional
//! weights, then repeatedly swap one vector in and one out, with both draws
//! directed by the action matrix `A_t = (alpha Z_t - c_t I)^{-2}` of the
//! regret-minimization potential. Removals are restricted to members with
//! small action score and small leverage, which tames the higher-order terms
//! of the p-norm update bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{self};
use crate::relax::{self, DesignInstance, FractionalSolution, NormalizedInstance};
use crate::spectra::{self, SymMatrix};

/// Consistency rebuild cadence for the rank-one-maintained `Y_t`, `Z_t`.
const REBUILD_EVERY: usize = 256;

/// Frobenius tolerance for the rebuild consistency assertion.
const REBUILD_TOL: f64 = 1e-8;

/// Parameters of one rounding run, all derived from `(d, p, epsilon)`:
/// `gamma = max(eps/6, 1/(6p))`, `kappa = max(eps/2, 1/(2p))`,
/// `M = d/gamma + d^2 + 1`, `alpha = sqrt(d)/gamma`, and the iteration cap
/// `ceil(2M/gamma + 2M/(eps p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExchangeParams {
    pub p: u32,
    pub epsilon: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub big_m: f64,
    pub alpha: f64,
    pub iter_cap: usize,
    pub seed: u64,
}

impl ExchangeParams {
    pub fn new(d: usize, p: u32, epsilon: f64, seed: u64) -> Result<Self> {
        if p == 0 || p > objective::MAX_INTEGER_P {
            return Err(Error::UnsupportedExponent(format!(
                "rounding needs an integer exponent in [1, {}], got {p}",
                objective::MAX_INTEGER_P
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidInstance(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let pf = p as f64;
        let gamma = (epsilon / 6.0).max(1.0 / (6.0 * pf));
        let kappa = (epsilon / 2.0).max(1.0 / (2.0 * pf));
        let big_m = d as f64 / gamma + (d * d) as f64 + 1.0;
        let alpha = (d as f64).sqrt() / gamma;
        let iter_cap = (2.0 * big_m / gamma + 2.0 * big_m / (epsilon * pf)).ceil() as usize;
        Ok(ExchangeParams { p, epsilon, gamma, kappa, big_m, alpha, iter_cap, seed })
    }
}

/// Mutable rounding state: the member set `S_{t-1}`, its raw covariance
/// `Y_t = sum u_i u_i^T`, its whitened covariance `Z_t = sum v_i v_i^T`, the
/// iteration counter, and the deterministic generator.
#[derive(Debug, Clone)]
pub struct ExchangeState {
    members: Vec<bool>,
    member_count: usize,
    y: SymMatrix,
    z: SymMatrix,
    t: usize,
    rng: ChaCha8Rng,
    swaps_since_rebuild: usize,
}

impl ExchangeState {
    pub fn is_member(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn member_count(&self) -> usize {
        self.member_count
    }

    /// Members in ascending index order.
    pub fn member_indices(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn y(&self) -> &SymMatrix {
        &self.y
    }

    pub fn z(&self) -> &SymMatrix {
        &self.z
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Per-iteration trace record. Quantities that need `Y_t` positive definite
/// (gain, loss, progress, objective) are `None` while the early solution is
/// still singular; an absent swap side contributes zero, not `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub t: usize,
    pub c_t: f64,
    pub i_t: Option<usize>,
    pub j_t: Option<usize>,
    pub restricted_size: usize,
    pub gain: Option<f64>,
    pub loss: Option<f64>,
    pub progress: Option<f64>,
    pub lambda_min_z: f64,
    /// `(tr(Y_t^{-p}))^{1/p}` before the swap.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminationCause {
    ObjectiveMet,
    IterCap,
}

/// Outcome of one rounding run.
#[derive(Debug, Clone, Serialize)]
pub struct RoundingReport {
    /// Returned set `S` in ascending index order.
    pub final_set: Vec<usize>,
    /// `(tr(Y^{-p}))^{1/p} / (tr(X^{-p}))^{1/p}`; infinite if the final
    /// covariance is singular (only reachable by hitting the iteration cap).
    pub objective_ratio: f64,
    pub size: usize,
    pub termination: TerminationCause,
    pub iterations: usize,
    pub trace: Vec<SwapRecord>,
}

/// Draw `S_0` by including each index independently with probability `x(i)`,
/// then assemble `Y_1` and `Z_1`. Every index consumes exactly one draw, so
/// replay is stable across weight vectors.
pub fn sample_initial(
    instance: &DesignInstance,
    norm: &NormalizedInstance,
    sol: &FractionalSolution,
    seed: u64,
) -> ExchangeState {
    let n = instance.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        let u: f64 = rng.random();
        if u < sol.x[i] {
            members[i] = true;
            count += 1;
        }
    }
    let mut y = SymMatrix::zeros(instance.d());
    let mut z = SymMatrix::zeros(instance.d());
    for i in 0..n {
        if members[i] {
            y.add_outer(instance.row(i), 1.0);
            z.add_outer(norm.v(i), 1.0);
        }
    }
    ExchangeState {
        members,
        member_count: count,
        y,
        z,
        t: 1,
        rng,
        swaps_since_rebuild: 0,
    }
}

/// Members eligible for removal: `alpha <v_i v_i^T, A_t^{1/2}> <= 1/2` and
/// `<v_i v_i^T, Z_t^{-1}> <= kappa`. `A_t^{1/2}` is the principal square root
/// of the action matrix, which equals `(alpha Z_t - c_t I)^{-1}`. Errors with
/// `SingularMatrix` when `Z_t` is singular; callers then treat the iteration
/// as removal-free.
pub fn restricted_set(
    state: &ExchangeState,
    norm: &NormalizedInstance,
    a_matrix: &SymMatrix,
    params: &ExchangeParams,
) -> Result<Vec<usize>> {
    let z_dec = spectra::eig_sym(&state.z)?;
    if !z_dec.is_positive_definite() {
        return Err(Error::SingularMatrix);
    }
    let a_dec = spectra::eig_sym(a_matrix)?;
    let a_sqrt = a_dec.apply(|l| l.max(0.0).sqrt());
    let mut out = Vec::new();
    for i in 0..norm.n() {
        if !state.members[i] {
            continue;
        }
        let v = norm.v(i);
        let score = a_sqrt.quad_form(v);
        if params.alpha * score > 0.5 {
            continue;
        }
        let w = z_dec.coordinates(v);
        let leverage: f64 = w
            .iter()
            .zip(z_dec.eigenvalues())
            .map(|(wj, &l)| wj * wj / l)
            .sum();
        if leverage <= params.kappa {
            out.push(i);
        }
    }
    Ok(out)
}

fn sample_from(rng: &mut ChaCha8Rng, probs: &[(usize, f64)]) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(idx, p) in probs {
        acc += p;
        if u < acc {
            return Some(idx);
        }
    }
    None
}

fn validate_mass(probs: &mut [(usize, f64)], what: &str) -> Result<f64> {
    let mut total = 0.0;
    for (_, p) in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-12 {
                return Err(Error::DistributionInvalid(format!(
                    "negative {what} probability {p}"
                )));
            }
            *p = 0.0;
        }
        total += *p;
    }
    if total > 1.0 + 1e-12 {
        return Err(Error::DistributionInvalid(format!(
            "{what} probabilities sum to {total}"
        )));
    }
    Ok(total)
}

/// One exchange iteration: build the action matrix on `Z_t`, draw the
/// incoming index from `P(j) = x(j) (1 + alpha <v_j v_j^T, A^{1/2}>) / M`
/// over non-members (remaining mass on no-op), draw the outgoing index from
/// `P(i) = (1 - x(i)) (1 - alpha <v_i v_i^T, A^{1/2}>) / M` over the
/// restricted set, apply the swap, and log the diagnostics.
pub fn swap_step(
    state: &mut ExchangeState,
    instance: &DesignInstance,
    norm: &NormalizedInstance,
    sol: &FractionalSolution,
    params: &ExchangeParams,
) -> Result<SwapRecord> {
    let n = instance.n();
    let z_dec = spectra::eig_sym(&state.z)?;
    let c = spectra::action_scalar_from_spectrum(z_dec.eigenvalues(), params.alpha);
    let lambda_min_z = z_dec.lambda_min();

    // <v v^T, A^{1/2}> through the spectrum of Z_t.
    let score = |v: &[f64]| -> f64 {
        let w = z_dec.coordinates(v);
        w.iter()
            .zip(z_dec.eigenvalues())
            .map(|(wj, &l)| wj * wj / (params.alpha * l - c))
            .sum()
    };

    let a_matrix = z_dec.apply(|l| {
        let g = params.alpha * l - c;
        1.0 / (g * g)
    });
    let restricted = match restricted_set(state, norm, &a_matrix, params) {
        Ok(set) => set,
        Err(Error::SingularMatrix) => Vec::new(),
        Err(other) => return Err(other),
    };

    let mut add_probs: Vec<(usize, f64)> = (0..n)
        .filter(|&j| !state.members[j])
        .map(|j| {
            let pj = sol.x[j] * (1.0 + params.alpha * score(norm.v(j))) / params.big_m;
            (j, pj)
        })
        .collect();
    validate_mass(&mut add_probs, "addition")?;

    let mut remove_probs: Vec<(usize, f64)> = restricted
        .iter()
        .map(|&i| {
            let qi = (1.0 - sol.x[i]) * (1.0 - params.alpha * score(norm.v(i))) / params.big_m;
            (i, qi)
        })
        .collect();
    validate_mass(&mut remove_probs, "removal")?;

    let j_t = sample_from(&mut state.rng, &add_probs);
    let i_t = sample_from(&mut state.rng, &remove_probs);

    if let Some(j) = j_t {
        debug_assert!(!state.members[j] && sol.x[j] > 0.0);
    }
    if let Some(i) = i_t {
        debug_assert!(state.members[i] && sol.x[i] < 1.0);
    }

    // Pre-swap diagnostics on Y_t; undefined while Y_t is singular.
    let empty: [f64; 0] = [];
    let u_add: &[f64] = j_t.map_or(&empty, |j| instance.row(j));
    let u_remove: &[f64] = i_t.map_or(&empty, |i| instance.row(i));
    let (gain, loss, progress, objective) =
        match objective::swap_delta(&state.y, u_add, u_remove, params.p) {
            Ok(delta) => {
                let obj = objective::trace_objective(&state.y, params.p as f64).ok();
                (Some(delta.gain), Some(delta.loss), Some(delta.progress), obj)
            }
            Err(Error::SingularMatrix) => (None, None, None, None),
            Err(other) => return Err(other),
        };

    let record = SwapRecord {
        t: state.t,
        c_t: c,
        i_t,
        j_t,
        restricted_size: restricted.len(),
        gain,
        loss,
        progress,
        lambda_min_z,
        objective,
    };

    if let Some(j) = j_t {
        state.members[j] = true;
        state.member_count += 1;
        state.y.add_outer(instance.row(j), 1.0);
        state.z.add_outer(norm.v(j), 1.0);
    }
    if let Some(i) = i_t {
        state.members[i] = false;
        state.member_count -= 1;
        state.y.add_outer(instance.row(i), -1.0);
        state.z.add_outer(norm.v(i), -1.0);
    }
    state.t += 1;
    state.swaps_since_rebuild += 1;
    if state.swaps_since_rebuild >= REBUILD_EVERY {
        rebuild(state, instance, norm);
    }

    Ok(record)
}

fn rebuild(state: &mut ExchangeState, instance: &DesignInstance, norm: &NormalizedInstance) {
    let mut y = SymMatrix::zeros(instance.d());
    let mut z = SymMatrix::zeros(instance.d());
    for i in 0..instance.n() {
        if state.members[i] {
            y.add_outer(instance.row(i), 1.0);
            z.add_outer(norm.v(i), 1.0);
        }
    }
    let y_drift = y.add_scaled(&state.y, -1.0).frob_norm();
    let z_drift = z.add_scaled(&state.z, -1.0).frob_norm();
    assert!(
        y_drift <= REBUILD_TOL * (1.0 + y.frob_norm()),
        "rank-one maintenance of Y drifted by {y_drift}"
    );
    assert!(
        z_drift <= REBUILD_TOL * (1.0 + z.frob_norm()),
        "rank-one maintenance of Z drifted by {z_drift}"
    );
    state.y = y;
    state.z = z;
    state.swaps_since_rebuild = 0;
}

/// Round a sparsified, whitened fractional solution with the given
/// parameters. Loops the exchange subroutine until
/// `(tr(Y_t^{-p}))^{1/p} <= (1 + eps) (tr(X^{-p}))^{1/p}` or the iteration
/// cap; a singular `Y_t` leaves the condition unmet, and
/// `lambda_min(Z_t) >= 1` short-circuits to success since it forces
/// `Y_t >= X`.
pub fn round_solution(
    instance: &DesignInstance,
    sol: &FractionalSolution,
    norm: &NormalizedInstance,
    params: &ExchangeParams,
) -> Result<RoundingReport> {
    if sol.fractional_support.len() > instance.d() * instance.d() + 1 {
        return Err(Error::InvalidInstance(
            "fractional support too large; sparsify before rounding".into(),
        ));
    }
    let pf = params.p as f64;
    let threshold = (1.0 + instance.epsilon()) * sol.objective;
    let mut state = sample_initial(instance, norm, sol, params.seed);
    let mut trace = Vec::new();
    let termination = loop {
        let current = objective::trace_objective(&state.y, pf).ok();
        if let Some(obj) = current {
            if obj <= threshold {
                break TerminationCause::ObjectiveMet;
            }
        }
        let z_min = spectra::eig_sym(&state.z)?.lambda_min();
        if z_min >= 1.0 {
            break TerminationCause::ObjectiveMet;
        }
        if state.t > params.iter_cap {
            break TerminationCause::IterCap;
        }
        trace.push(swap_step(&mut state, instance, norm, sol, params)?);
    };
    let final_objective =
        objective::trace_objective(&state.y, pf).unwrap_or(f64::INFINITY);
    Ok(RoundingReport {
        final_set: state.member_indices(),
        objective_ratio: final_objective / sol.objective,
        size: state.member_count,
        termination,
        iterations: trace.len(),
        trace,
    })
}

/// Full pipeline for one seed: solve the relaxation, sparsify, whiten, round.
pub fn run(instance: &DesignInstance, seed: u64) -> Result<RoundingReport> {
    let p = instance.exponent().integer_p().ok_or_else(|| {
        Error::UnsupportedExponent(
            "rounding needs an integer exponent p in [1, 64]".into(),
        )
    })?;
    let sol = relax::solve_relaxation(instance, relax::DEFAULT_MAX_ITERS, relax::DEFAULT_TOL)?;
    let sol = relax::sparsify_support(instance, &sol)?;
    let norm = relax::normalize(instance, &sol)?;
    let params = ExchangeParams::new(instance.d(), p, instance.epsilon(), seed)?;
    round_solution(instance, &sol, &norm, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::PNormExponent;
    use rand::Rng;

    fn axis_instance(d: usize, p: f64, eps: f64) -> DesignInstance {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        DesignInstance::new(&rows, d, PNormExponent::finite(p).unwrap(), eps).unwrap()
    }

    #[test]
    fn params_follow_the_formulas() {
        let p = ExchangeParams::new(3, 2, 0.25, 7).unwrap();
        assert!((p.gamma - 1.0 / 12.0).abs() < 1e-15);
        assert!((p.kappa - 0.25).abs() < 1e-15);
        assert!((p.big_m - (36.0 + 9.0 + 1.0)).abs() < 1e-12);
        assert_eq!(p.alpha, 3.0_f64.sqrt() / p.gamma);
        assert!((p.alpha * p.gamma - 3.0_f64.sqrt()).abs() <= 1e-12);
        let expected_cap = (2.0 * p.big_m / p.gamma + 2.0 * p.big_m / (0.25 * 2.0)).ceil();
        assert_eq!(p.iter_cap, expected_cap as usize);
        // gamma in (0, 1/6], kappa in (0, 1/2] for p >= 1, eps < 1.
        for pp in [1u32, 2, 5, 64] {
            for eps in [0.01, 0.25, 0.9] {
                let q = ExchangeParams::new(4, pp, eps, 0).unwrap();
                assert!(q.gamma > 0.0 && q.gamma <= 1.0 / 6.0 + 1e-15);
                assert!(q.kappa > 0.0 && q.kappa <= 0.5 + 1e-15);
            }
        }
        assert!(ExchangeParams::new(3, 0, 0.25, 0).is_err());
        assert!(ExchangeParams::new(3, 65, 0.25, 0).is_err());
        assert!(ExchangeParams::new(3, 2, 1.0, 0).is_err());
    }

    #[test]
    fn integral_weights_give_deterministic_initial_set() {
        let inst = axis_instance(3, 2.0, 0.25);
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0, 1.0], true, 0.0).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        for seed in 0..50 {
            let state = sample_initial(&inst, &norm, &sol, seed);
            assert_eq!(state.member_indices(), vec![0, 1, 2]);
        }
    }

    #[test]
    fn restricted_set_empty_for_empty_membership() {
        let inst = axis_instance(2, 1.0, 0.25);
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0], true, 0.0).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        let params = ExchangeParams::new(2, 1, 0.25, 0).unwrap();
        let state = ExchangeState {
            members: vec![false, false],
            member_count: 0,
            y: SymMatrix::zeros(2),
            z: SymMatrix::zeros(2),
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(0),
            swaps_since_rebuild: 0,
        };
        // Z is singular here, which the caller maps to "no removals".
        assert!(matches!(
            restricted_set(&state, &norm, &SymMatrix::identity(2), &params),
            Err(Error::SingularMatrix)
        ));
    }

    #[test]
    fn restricted_set_excludes_axis_vector_at_identity() {
        // With Z = I the action scores are alpha/sqrt(d) = 1/gamma > 1/2 for a
        // unit vector, and its leverage is 1 > kappa: excluded on both counts.
        let d = 2;
        let inst = axis_instance(d, 1.0, 0.25);
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0], true, 0.0).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        let params = ExchangeParams::new(d, 1, 0.25, 0).unwrap();
        let (_, a_matrix) = spectra::solve_action_scalar(&SymMatrix::identity(d), params.alpha).unwrap();
        let state = ExchangeState {
            members: vec![true, false],
            member_count: 1,
            y: SymMatrix::identity(d),
            z: SymMatrix::identity(d),
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(0),
            swaps_since_rebuild: 0,
        };
        let restricted = restricted_set(&state, &norm, &a_matrix, &params).unwrap();
        assert!(restricted.is_empty());
    }

    #[test]
    fn restricted_set_keeps_tiny_vectors() {
        // Tiny whitened vectors pass both thresholds, so every member stays
        // eligible. The state is assembled directly; the thresholds only see
        // Z and the v's.
        let d = 2;
        let params = ExchangeParams::new(d, 1, 0.25, 0).unwrap();
        // Unit-norm directions scaled so every ||v_i||^2 clears both bounds.
        let scale = (params.kappa / d as f64)
            .min(params.gamma * (d as f64).sqrt() / 2.0)
            .sqrt()
            * 0.7;
        let h = scale / 2.0_f64.sqrt();
        let rows = vec![vec![scale, 0.0], vec![0.0, scale], vec![h, h]];
        let norm = NormalizedInstance::from_parts(
            rows.iter().flatten().copied().collect(),
            SymMatrix::identity(d),
            3,
            d,
        );
        let (_, a_matrix) =
            spectra::solve_action_scalar(&SymMatrix::identity(d), params.alpha).unwrap();
        let state = ExchangeState {
            members: vec![true, true, true],
            member_count: 3,
            y: SymMatrix::identity(d),
            z: SymMatrix::identity(d),
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(0),
            swaps_since_rebuild: 0,
        };
        let restricted = restricted_set(&state, &norm, &a_matrix, &params).unwrap();
        assert_eq!(restricted, vec![0, 1, 2]);
    }

    #[test]
    fn empty_restricted_set_means_no_removal() {
        // Singular Z (empty member set) flags the iteration as removal-free.
        let inst = axis_instance(2, 1.0, 0.25);
        let sol = FractionalSolution::from_weights(&inst, vec![1.0, 1.0], true, 0.0).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        let params = ExchangeParams::new(2, 1, 0.25, 31).unwrap();
        let mut state = ExchangeState {
            members: vec![false, false],
            member_count: 0,
            y: SymMatrix::zeros(2),
            z: SymMatrix::zeros(2),
            t: 1,
            rng: ChaCha8Rng::seed_from_u64(31),
            swaps_since_rebuild: 0,
        };
        for _ in 0..20 {
            let rec = swap_step(&mut state, &inst, &norm, &sol, &params).unwrap();
            if rec.restricted_size == 0 {
                assert_eq!(rec.i_t, None, "no removal candidate may be drawn from an empty set");
            }
        }
    }

    #[test]
    fn run_on_integral_instance_terminates_immediately() {
        let inst = axis_instance(3, 2.0, 0.25);
        let report = run(&inst, 12345).unwrap();
        assert_eq!(report.termination, TerminationCause::ObjectiveMet);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.final_set, vec![0, 1, 2]);
        assert!((report.objective_ratio - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn swap_step_never_touches_forced_indices() {
        // x(0) = 1 is never removed; x with weight 0 is never added.
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![-1.0, 0.5],
            vec![0.3, -0.8],
        ];
        let inst =
            DesignInstance::new(&rows, 3, PNormExponent::finite(1.0).unwrap(), 0.3).unwrap();
        let x = vec![1.0, 0.7, 0.6, 0.7, 0.0];
        let sol = FractionalSolution::from_weights(&inst, x, true, 0.0).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        let params = ExchangeParams::new(2, 1, 0.3, 99).unwrap();
        let mut state = sample_initial(&inst, &norm, &sol, params.seed);
        for _ in 0..200 {
            let rec = swap_step(&mut state, &inst, &norm, &sol, &params).unwrap();
            assert_ne!(rec.i_t, Some(0), "forced member removed");
            assert_ne!(rec.j_t, Some(4), "zero-weight index added");
            assert!(state.is_member(0));
            assert!(!state.is_member(4));
        }
    }

    #[test]
    fn state_counts_stay_consistent() {
        let rows = vec![
            vec![1.0, 0.2],
            vec![0.1, 1.0],
            vec![0.8, 0.7],
            vec![-0.5, 0.9],
            vec![0.9, -0.4],
            vec![0.2, 0.3],
        ];
        let inst =
            DesignInstance::new(&rows, 3, PNormExponent::finite(2.0).unwrap(), 0.3).unwrap();
        let sol = relax::solve_relaxation(&inst, 50_000, 1e-8).unwrap();
        let sol = relax::sparsify_support(&inst, &sol).unwrap();
        let norm = relax::normalize(&inst, &sol).unwrap();
        let params = ExchangeParams::new(2, 2, 0.3, 5).unwrap();
        let mut state = sample_initial(&inst, &norm, &sol, params.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let _ = swap_step(&mut state, &inst, &norm, &sol, &params).unwrap();
            assert_eq!(state.member_indices().len(), state.member_count());
            // Spot-check Y against its definition now and then.
            if rng.random::<f64>() < 0.05 {
                let y = inst.subset_gram(&state.member_indices());
                let drift = y.add_scaled(state.y(), -1.0).frob_norm();
                assert!(drift <= 1e-8 * (1.0 + y.frob_norm()));
            }
        }
    }
}
