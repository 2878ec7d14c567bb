//! The five CLI verbs. Each command is an ordinary function over paths and
//! options so the test suites drive them directly; `main` only parses
//! arguments and maps [`CliError`] to exit codes (0 success, 1 verification
//! failure, 2 invalid input).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use pnorm_design::exchange::{self, ExchangeParams, TerminationCause};
use pnorm_design::objective::{self, PNormExponent};
use pnorm_design::relax::{self, DesignInstance, FractionalSolution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::formats::{
    self, GeneratorMeta, InstanceFile, PSpec, ParamsEcho, RelaxationSummary, ReportFile,
    RunOutcome, SolutionFile, SCHEMA_VERSION,
};

/// Exponent used when an E-design (`p = infinity`) rounding is requested:
/// the largest exponent the integer-mode update machinery accepts.
pub const INFINITY_PROXY_P: u32 = objective::MAX_INTEGER_P;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input, unusable instance, or I/O failure. Exit code 2.
    Invalid(anyhow::Error),
    /// A verification check failed. Exit code 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(e) => write!(f, "{e:#}"),
            CliError::Failed(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Invalid(e)
    }
}

impl From<pnorm_design::Error> for CliError {
    fn from(e: pnorm_design::Error) -> Self {
        CliError::Invalid(anyhow::Error::new(e))
    }
}

pub type CliResult = std::result::Result<(), CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorDistribution {
    Gaussian,
    Heavy,
    Identity,
}

impl VectorDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            VectorDistribution::Gaussian => "gaussian",
            VectorDistribution::Heavy => "heavy",
            VectorDistribution::Identity => "identity",
        }
    }
}

/// Generate an instance file. Gaussian rows are i.i.d. standard normal,
/// heavy-tailed rows are Student-t with three degrees of freedom, and
/// `identity` emits the axis vectors (requires `n == d`). Deterministic per
/// seed.
#[allow(clippy::too_many_arguments)]
pub fn cmd_generate(
    distribution: VectorDistribution,
    d: usize,
    n: usize,
    k: usize,
    p: &PSpec,
    epsilon: f64,
    seed: u64,
    out: &Path,
) -> CliResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: Vec<Vec<f64>> = match distribution {
        VectorDistribution::Gaussian => (0..n)
            .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect(),
        VectorDistribution::Heavy => {
            let t = StudentT::new(3.0).expect("valid dof");
            (0..n).map(|_| (0..d).map(|_| t.sample(&mut rng)).collect()).collect()
        }
        VectorDistribution::Identity => {
            if n != d {
                return Err(CliError::Invalid(anyhow!(
                    "identity distribution requires n == d, got n = {n}, d = {d}"
                )));
            }
            (0..n)
                .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        }
    };
    let file = InstanceFile {
        schema_version: SCHEMA_VERSION,
        d,
        n,
        k,
        p: p.clone(),
        epsilon,
        vectors,
        generator: Some(GeneratorMeta { distribution: distribution.name().to_string(), seed }),
    };
    // Full-rank / budget / exponent validation before anything touches disk.
    file.to_instance().map_err(CliError::Invalid)?;
    formats::write_json(out, &file)?;
    println!(
        "generated {} instance d={d} n={n} k={k} seed={seed} -> {}",
        distribution.name(),
        out.display()
    );
    Ok(())
}

fn load_instance(path: &Path) -> Result<(InstanceFile, DesignInstance)> {
    let file: InstanceFile = formats::read_json(path)?;
    let instance = file.to_instance()?;
    Ok((file, instance))
}

/// Solve the relaxation, prune the fractional support, certify first-order
/// optimality, and persist the artifact.
pub fn cmd_solve(
    instance_path: &Path,
    tol: f64,
    max_iters: usize,
    out: &Path,
) -> CliResult {
    let (file, instance) = load_instance(instance_path).map_err(CliError::Invalid)?;
    let sol = relax::solve_relaxation(&instance, max_iters, tol)?;
    let sol = relax::sparsify_support(&instance, &sol)?;
    let certificate = relax::certify_optimality(&instance, &sol)?;
    let artifact = SolutionFile {
        schema_version: SCHEMA_VERSION,
        instance_digest: file.digest(),
        p: file.p.clone(),
        epsilon: file.epsilon,
        tol,
        max_iters,
        objective: sol.objective,
        stationarity: sol.stationarity,
        converged: sol.converged,
        fractional_support: sol.fractional_support.clone(),
        certificate: certificate.clone(),
        x: sol.x.clone(),
    };
    formats::write_json(out, &artifact)?;
    println!(
        "solved: objective {:.9e}, {} fractional entries, certificate {}, converged {}",
        sol.objective,
        sol.fractional_support.len(),
        if certificate.passed { "PASS" } else { "FAIL" },
        sol.converged
    );
    Ok(())
}

/// Map a file exponent to the integer exponent the exchange accepts;
/// E-design requests fall back to the documented large-p proxy.
fn rounding_exponent(p: &PSpec) -> Result<(u32, PSpec)> {
    let exponent = p.to_exponent()?;
    if exponent.is_infinity() {
        eprintln!(
            "warning: p = infinity is rounded through the large-p proxy p = {INFINITY_PROXY_P}; \
             the reported objective uses the proxy exponent"
        );
        return Ok((INFINITY_PROXY_P, PSpec::Number(INFINITY_PROXY_P as f64)));
    }
    if exponent.is_zero() {
        bail!(
            "rounding requires an integer exponent p >= 1; p = 0 (determinant objective) is \
             evaluation-only"
        );
    }
    match exponent.integer_p() {
        Some(pi) => Ok((pi, p.clone())),
        None => bail!(
            "rounding requires an integer exponent p in [1, {}]",
            objective::MAX_INTEGER_P
        ),
    }
}

struct PreparedRounding {
    instance: DesignInstance,
    sol: FractionalSolution,
    norm: relax::NormalizedInstance,
    p_int: u32,
    p_echo: PSpec,
    relaxation: RelaxationSummary,
    digest: String,
    epsilon: f64,
}

#[allow(clippy::too_many_arguments)]
fn prepare_rounding(
    file: &InstanceFile,
    p_override: Option<&PSpec>,
    epsilon_override: Option<f64>,
    solution_path: Option<&Path>,
) -> Result<PreparedRounding> {
    let digest = file.digest();
    let p_spec = p_override.cloned().unwrap_or_else(|| file.p.clone());
    let epsilon = epsilon_override.unwrap_or(file.epsilon);
    let (p_int, p_echo) = rounding_exponent(&p_spec)?;

    let instance = file
        .to_instance()?
        .with_exponent(PNormExponent::finite(p_int as f64)?)
        .with_epsilon(epsilon)?;

    let (sol, tol, max_iters) = match solution_path {
        Some(path) => {
            let artifact: SolutionFile = formats::read_json(path)?;
            if artifact.instance_digest != digest {
                bail!(
                    "solution artifact {} was computed for a different instance",
                    path.display()
                );
            }
            if artifact.p != p_echo || artifact.epsilon != epsilon {
                bail!(
                    "solution artifact {} was solved with different p/epsilon than requested",
                    path.display()
                );
            }
            let sol =
                FractionalSolution::from_weights(&instance, artifact.x.clone(), artifact.converged, artifact.stationarity)?;
            if (sol.objective - artifact.objective).abs()
                > 1e-9 * (1.0 + artifact.objective.abs())
            {
                bail!("solution artifact {} is stale: objective mismatch", path.display());
            }
            (sol, artifact.tol, artifact.max_iters)
        }
        None => {
            let sol = relax::solve_relaxation(&instance, relax::DEFAULT_MAX_ITERS, relax::DEFAULT_TOL)?;
            let sol = relax::sparsify_support(&instance, &sol)?;
            (sol, relax::DEFAULT_TOL, relax::DEFAULT_MAX_ITERS)
        }
    };

    let certificate = relax::certify_optimality(&instance, &sol)?;
    let relaxation = RelaxationSummary {
        objective: sol.objective,
        fractional_support_size: sol.fractional_support.len(),
        converged: sol.converged,
        tol,
        max_iters,
        certificate,
    };
    let norm = relax::normalize(&instance, &sol)?;
    Ok(PreparedRounding { instance, sol, norm, p_int, p_echo, relaxation, digest, epsilon })
}

fn run_seeds(
    prepared: &PreparedRounding,
    seeds: &[u64],
    trace_out: Option<&Path>,
    partial_path: Option<&Path>,
) -> Result<Vec<RunOutcome>> {
    if let Some(dir) = trace_out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let partial = partial_path
        .map(|p| -> Result<_> {
            Ok(Mutex::new(std::io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )))
        })
        .transpose()?;

    let run_one = |&seed: &u64| -> Result<RunOutcome> {
        let params = ExchangeParams::new(prepared.instance.d(), prepared.p_int, prepared.epsilon, seed)?;
        let report = exchange::round_solution(&prepared.instance, &prepared.sol, &prepared.norm, &params)?;
        if let Some(dir) = trace_out {
            formats::write_trace(&dir.join(format!("trace-{seed}.ndjson")), &report.trace)?;
        }
        let outcome = RunOutcome {
            seed,
            ratio: report.objective_ratio.is_finite().then_some(report.objective_ratio),
            size: report.size,
            termination: report.termination,
            iterations: report.iterations,
            final_set: report.final_set,
        };
        if let Some(partial) = &partial {
            let mut guard = partial.lock().expect("partial writer");
            let line = serde_json::to_string(&outcome).expect("serializable outcome");
            let _ = writeln!(guard, "{line}");
            let _ = guard.flush();
        }
        Ok(outcome)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Result<Vec<RunOutcome>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Result<Vec<RunOutcome>> = seeds.iter().map(run_one).collect();

    outcomes
}

fn assemble_report(prepared: &PreparedRounding, outcomes: Vec<RunOutcome>) -> ReportFile {
    let params = ExchangeParams::new(prepared.instance.d(), prepared.p_int, prepared.epsilon, 0)
        .expect("validated earlier");
    let successes = outcomes
        .iter()
        .filter(|o| {
            o.termination == TerminationCause::ObjectiveMet
                && o.ratio.is_some_and(|r| r <= 1.0 + prepared.epsilon + 1e-12)
        })
        .count();
    let success_rate = if outcomes.is_empty() {
        0.0
    } else {
        successes as f64 / outcomes.len() as f64
    };
    ReportFile {
        schema_version: SCHEMA_VERSION,
        instance_digest: prepared.digest.clone(),
        p: prepared.p_echo.clone(),
        epsilon: prepared.epsilon,
        relaxation: prepared.relaxation.clone(),
        params: ParamsEcho {
            gamma: params.gamma,
            kappa: params.kappa,
            big_m: params.big_m,
            alpha: params.alpha,
            iter_cap: params.iter_cap,
        },
        runs: outcomes,
        success_rate,
    }
}

/// Round the instance once per seed and write the aggregate report; per-seed
/// outcomes are flushed to `<out>.partial.ndjson` as they complete so an
/// interrupted sweep still leaves its finished rows behind.
#[allow(clippy::too_many_arguments)]
pub fn cmd_round(
    instance_path: &Path,
    seeds: &[u64],
    p_override: Option<&PSpec>,
    epsilon_override: Option<f64>,
    solution_path: Option<&Path>,
    trace_out: Option<&Path>,
    out: &Path,
) -> CliResult {
    if seeds.is_empty() {
        return Err(CliError::Invalid(anyhow!("empty seed range")));
    }
    let (file, _) = load_instance(instance_path).map_err(CliError::Invalid)?;
    let prepared = prepare_rounding(&file, p_override, epsilon_override, solution_path)
        .map_err(CliError::Invalid)?;
    let partial_path = out.with_extension("partial.ndjson");
    let outcomes = run_seeds(&prepared, seeds, trace_out, Some(&partial_path))
        .map_err(CliError::Invalid)?;
    let report = assemble_report(&prepared, outcomes);
    formats::write_json(out, &report)?;
    let _ = fs::remove_file(&partial_path);
    println!(
        "rounded {} seeds: success rate {:.3}, relaxation objective {:.9e} -> {}",
        report.runs.len(),
        report.success_rate,
        report.relaxation.objective,
        out.display()
    );
    Ok(())
}

/// Size bound checked by `verify`: `(1 + eps) k + 12 d / gamma + 2 d / kappa`.
pub fn size_bound(k: usize, d: usize, epsilon: f64, gamma: f64, kappa: f64) -> f64 {
    (1.0 + epsilon) * k as f64 + 12.0 * d as f64 / gamma + 2.0 * d as f64 / kappa
}

/// Independently recompute everything a report claims: relaxation objective
/// and certificate (re-solved at the recorded tolerance), each per-seed ratio
/// from its stored final set, the solution-size bound, and the aggregate
/// success rate. Digest mismatch refuses outright (exit 2); any failed check
/// exits 1.
pub fn cmd_verify(instance_path: &Path, report_path: &Path) -> CliResult {
    let (file, _) = load_instance(instance_path).map_err(CliError::Invalid)?;
    let report: ReportFile = formats::read_json(report_path).map_err(CliError::Invalid)?;
    if report.instance_digest != file.digest() {
        return Err(CliError::Invalid(anyhow!(
            "instance digest mismatch: report was produced from a different instance"
        )));
    }

    let prepared = prepare_rounding(&file, Some(&report.p), Some(report.epsilon), None)
        .map_err(CliError::Invalid)?;
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("verify {name}: {}{detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    let obj_diff = (prepared.relaxation.objective - report.relaxation.objective).abs();
    check(
        "relaxation objective",
        obj_diff <= 1e-8 * (1.0 + report.relaxation.objective.abs()),
        format!(" (recomputed {:.9e})", prepared.relaxation.objective),
    );
    check(
        "optimality certificate",
        prepared.relaxation.certificate.passed == report.relaxation.certificate.passed,
        format!(" (recomputed {})", prepared.relaxation.certificate.passed),
    );

    let params = ExchangeParams::new(prepared.instance.d(), prepared.p_int, prepared.epsilon, 0)
        .map_err(CliError::from)?;
    let echo_ok = (params.gamma - report.params.gamma).abs() <= 1e-12
        && (params.kappa - report.params.kappa).abs() <= 1e-12
        && (params.big_m - report.params.big_m).abs() <= 1e-9
        && (params.alpha - report.params.alpha).abs() <= 1e-9
        && params.iter_cap == report.params.iter_cap;
    check("parameter echo", echo_ok, String::new());

    let bound = size_bound(
        prepared.instance.k(),
        prepared.instance.d(),
        prepared.epsilon,
        params.gamma,
        params.kappa,
    );
    let mut ratio_ok = true;
    let mut ratio_detail = String::new();
    let mut size_ok = true;
    let mut successes = 0usize;
    for run in &report.runs {
        let recomputed = objective::trace_objective(
            &prepared.instance.subset_gram(&run.final_set),
            prepared.p_int as f64,
        )
        .ok()
        .map(|obj| obj / prepared.relaxation.objective);
        match (run.ratio, recomputed) {
            (Some(stored), Some(actual)) => {
                if (stored - actual).abs() > 1e-8 * (1.0 + actual.abs()) {
                    ratio_ok = false;
                    let _ = write!(
                        ratio_detail,
                        " [seed {}: stored {stored:.12} recomputed {actual:.12}]",
                        run.seed
                    );
                }
            }
            (None, None) => {}
            (stored, actual) => {
                ratio_ok = false;
                let _ = write!(
                    ratio_detail,
                    " [seed {}: stored {stored:?} recomputed {actual:?}]",
                    run.seed
                );
            }
        }
        if run.size != run.final_set.len() || (run.size as f64) > bound {
            size_ok = false;
        }
        if run.termination == TerminationCause::ObjectiveMet
            && run.ratio.is_some_and(|r| r <= 1.0 + prepared.epsilon + 1e-12)
        {
            successes += 1;
        }
    }
    check("per-seed ratios", ratio_ok, ratio_detail);
    check(
        "size bound",
        size_ok,
        format!(" (|S| <= {bound:.3} for every run)"),
    );
    let rate = if report.runs.is_empty() {
        0.0
    } else {
        successes as f64 / report.runs.len() as f64
    };
    check(
        "success rate",
        (rate - report.success_rate).abs() <= 1e-12,
        format!(" (recomputed {rate:.6})"),
    );

    if failures.is_empty() {
        println!("verify: PASS");
        Ok(())
    } else {
        Err(CliError::Failed(failures.join(", ")))
    }
}

/// Bicriteria-to-true-approximation helper: re-run the whole pipeline with
/// the shrunken budget `k' = max(d, floor((1 - eps) k))` so the returned sets
/// tend to fit the original budget, trading a `(1 - eps)` factor in the
/// relaxation optimum.
pub fn cmd_rescale(
    instance_path: &Path,
    seeds: &[u64],
    trace_out: Option<&Path>,
    out: &Path,
) -> CliResult {
    if seeds.is_empty() {
        return Err(CliError::Invalid(anyhow!("empty seed range")));
    }
    let (file, instance) = load_instance(instance_path).map_err(CliError::Invalid)?;
    let original_k = instance.k();
    let shrunk = ((1.0 - file.epsilon) * original_k as f64).floor() as usize;
    let new_k = shrunk.max(instance.d());
    let mut rescaled = file.clone();
    rescaled.k = new_k;
    let prepared = prepare_rounding(&rescaled, None, None, None).map_err(CliError::Invalid)?;
    let outcomes = run_seeds(&prepared, seeds, trace_out, None).map_err(CliError::Invalid)?;
    let within_budget = outcomes.iter().filter(|o| o.size <= original_k).count();
    let report = assemble_report(&prepared, outcomes);
    formats::write_json(out, &report)?;
    println!(
        "rescaled budget {original_k} -> {new_k}: {}/{} runs within the original budget, \
         success rate {:.3} against the shrunken relaxation -> {}",
        within_budget,
        report.runs.len(),
        report.success_rate,
        out.display()
    );
    Ok(())
}

/// Parse `a..b` (half-open) or a single seed `s` into the seed list.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let start: u64 = a.trim().parse().context("seed range start")?;
        let end: u64 = b.trim().parse().context("seed range end")?;
        if end <= start {
            bail!("empty seed range {text:?}");
        }
        Ok((start..end).collect())
    } else {
        let seed: u64 = text.trim().parse().context("seed")?;
        Ok(vec![seed])
    }
}
