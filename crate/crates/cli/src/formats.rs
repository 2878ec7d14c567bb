//! On-disk formats: instance files, relaxation artifacts, rounding reports,
//! and newline-delimited trace files. Everything is serialized through one
//! canonical pretty-printer so that write -> read -> write is byte-identical
//! and digests are whitespace-independent.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pnorm_design::exchange::{SwapRecord, TerminationCause};
use pnorm_design::objective::PNormExponent;
use pnorm_design::relax::{DesignInstance, OptimalityCertificate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Exponent as it appears in files: a number, or the strings
/// `"zero"` / `"infinity"` for the determinant and minimum-eigenvalue limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Number(f64),
    Name(String),
}

impl PSpec {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "zero" | "infinity" => Ok(PSpec::Name(text.to_string())),
            other => {
                let value: f64 = other
                    .parse()
                    .with_context(|| format!("exponent must be a number, \"zero\", or \"infinity\"; got {other:?}"))?;
                Ok(PSpec::Number(value))
            }
        }
    }

    pub fn to_exponent(&self) -> Result<PNormExponent> {
        match self {
            PSpec::Name(name) if name == "zero" => Ok(PNormExponent::ZERO),
            PSpec::Name(name) if name == "infinity" => Ok(PNormExponent::INFINITY),
            PSpec::Name(name) => bail!("unknown exponent name {name:?}"),
            PSpec::Number(p) if *p == 0.0 => Ok(PNormExponent::ZERO),
            PSpec::Number(p) if *p >= 1.0 => Ok(PNormExponent::finite(*p)?),
            PSpec::Number(p) if *p > 0.0 => Ok(PNormExponent::finite_low(*p)?),
            PSpec::Number(p) => bail!("exponent must be positive, got {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub distribution: String,
    pub seed: u64,
}

/// A design instance on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub p: PSpec,
    pub epsilon: f64,
    pub vectors: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub generator: Option<GeneratorMeta>,
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<DesignInstance> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {}", self.schema_version);
        }
        if self.vectors.len() != self.n || self.vectors.iter().any(|r| r.len() != self.d) {
            bail!("vector block does not match the declared n = {} by d = {}", self.n, self.d);
        }
        let exponent = self.p.to_exponent()?;
        Ok(DesignInstance::new(&self.vectors, self.k, exponent, self.epsilon)?)
    }

    /// Digest of the canonical serialization; whitespace and key formatting
    /// in the source file do not matter.
    pub fn digest(&self) -> String {
        digest_of(self)
    }
}

/// Persisted relaxation solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema_version: u32,
    pub instance_digest: String,
    pub p: PSpec,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub objective: f64,
    pub stationarity: f64,
    pub converged: bool,
    pub fractional_support: Vec<usize>,
    pub certificate: OptimalityCertificate,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSummary {
    pub objective: f64,
    pub fractional_support_size: usize,
    pub converged: bool,
    pub tol: f64,
    pub max_iters: usize,
    pub certificate: OptimalityCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub gamma: f64,
    pub kappa: f64,
    pub big_m: f64,
    pub alpha: f64,
    pub iter_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    /// `None` when the final covariance is singular (infinite objective).
    pub ratio: Option<f64>,
    pub size: usize,
    pub termination: TerminationCause,
    pub iterations: usize,
    pub final_set: Vec<usize>,
}

/// Rounding report: everything needed to recompute each ratio from the
/// instance plus the stored final sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub instance_digest: String,
    pub p: PSpec,
    pub epsilon: f64,
    pub relaxation: RelaxationSummary,
    pub params: ParamsEcho,
    pub runs: Vec<RunOutcome>,
    pub success_rate: f64,
}

/// Canonical serialization: pretty JSON with a trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = canonical_json(value);
    let hash = Sha256::digest(bytes.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, canonical_json(value))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One trace record per line, streamable.
pub fn write_trace(path: &Path, trace: &[SwapRecord]) -> Result<()> {
    let mut out = String::new();
    for record in trace {
        out.push_str(&serde_json::to_string(record).expect("serializable record"));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_trace(path: &Path) -> Result<Vec<SwapRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|line| serde_json::from_str(line).with_context(|| format!("parsing {}", path.display())))
        .collect()
}
