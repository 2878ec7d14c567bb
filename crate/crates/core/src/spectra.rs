//! Dense symmetric linear algebra for small matrices: cyclic Jacobi
//! eigendecomposition, positive-definite powers, inverse-trace evaluation,
//! and the scalar root-finder for the action matrix `(alpha Z - c I)^{-2}`.
//!
//! Everything here is pure and reentrant; matrices are plain row-major
//! `Vec<f64>` buffers symmetrized at construction.

use crate::error::{Error, Result};

/// Relative positive-definiteness tolerance: `lambda_min > PD_RTOL * lambda_max`.
pub const PD_RTOL: f64 = 1e-12;

/// Target residual for the action-matrix trace equation `tr(A_t) = 1`.
const ACTION_ROOT_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 64;

/// Dense symmetric matrix, row-major, symmetrized by averaging at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Build from a row-major buffer of length `dim * dim`. Off-diagonal pairs
    /// are averaged so the stored matrix is exactly symmetric.
    pub fn new(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(SymMatrix { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, entries: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = diag[i];
        }
        m
    }

    /// Rank-one outer product `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let dim = v.len();
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = v[i] * v[j];
            }
        }
        SymMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Write both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.dim + j] = value;
        self.entries[j * self.dim + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self += coeff * v v^T`.
    pub fn add_outer(&mut self, v: &[f64], coeff: f64) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            let ci = coeff * v[i];
            for j in 0..self.dim {
                self.entries[i * self.dim + j] += ci * v[j];
            }
        }
    }

    /// `self + coeff * other`, elementwise.
    pub fn add_scaled(&self, other: &SymMatrix, coeff: f64) -> SymMatrix {
        debug_assert_eq!(self.dim, other.dim);
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a + coeff * b)
            .collect();
        SymMatrix { dim: self.dim, entries }
    }

    pub fn scaled(&self, coeff: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| coeff * e).collect(),
        }
    }

    /// `v^T M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.entries[i * self.dim + j] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.entries[i * self.dim + j] * v[j])
                    .sum()
            })
            .collect()
    }

    /// `self * other * self` (symmetric for symmetric inputs).
    pub fn sandwich(&self, inner: &SymMatrix) -> SymMatrix {
        debug_assert_eq!(self.dim, inner.dim);
        let d = self.dim;
        let ba = mat_mul(&self.entries, &inner.entries, d);
        let bab = mat_mul(&ba, &self.entries, d);
        // Symmetrize away the last-bit drift of the two multiplies.
        SymMatrix::new(d, bab).expect("product of finite matrices is finite")
    }
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and an
/// orthonormal eigenvector basis (column `j` pairs with eigenvalue `j`).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    /// Column-major: `vectors[j*dim..(j+1)*dim]` is eigenvector `j`.
    vectors: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim - 1]
    }

    pub fn eigenvector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    /// Coordinates of `v` in the eigenbasis: `w_j = <v, q_j>`.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|j| {
                self.eigenvector(j)
                    .iter()
                    .zip(v.iter())
                    .map(|(q, x)| q * x)
                    .sum()
            })
            .collect()
    }

    /// `V f(Lambda) V^T`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.dim;
        let mut entries = vec![0.0; d * d];
        for j in 0..d {
            let fj = f(self.eigenvalues[j]);
            if fj == 0.0 {
                continue;
            }
            let q = self.eigenvector(j);
            for r in 0..d {
                let c = fj * q[r];
                for s in 0..d {
                    entries[r * d + s] += c * q[s];
                }
            }
        }
        SymMatrix::new(d, entries).expect("spectral reconstruction is finite")
    }

    /// `V Lambda V^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> SymMatrix {
        self.apply(|lambda| lambda)
    }

    /// `||V^T V - I||_F`, for orthonormality checks.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim;
        let mut err = 0.0;
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = self
                    .eigenvector(a)
                    .iter()
                    .zip(self.eigenvector(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                err += (dot - target) * (dot - target);
            }
        }
        err.sqrt()
    }

    /// True when the spectrum is positive definite at the relative tolerance.
    pub fn is_positive_definite(&self) -> bool {
        let lmax = self.lambda_max();
        lmax > 0.0 && self.lambda_min() > PD_RTOL * lmax
    }
}

/// Eigendecomposition by cyclic Jacobi sweeps with accumulated rotations.
/// Quadratic convergence once the off-diagonal mass is small; for the matrix
/// sizes in this crate (d up to a few hundred) the O(d^3) sweeps are cheap.
pub fn eig_sym(m: &SymMatrix) -> Result<SpectralDecomposition> {
    let d = m.dim;
    if m.entries.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    if d == 1 {
        return Ok(SpectralDecomposition {
            dim: 1,
            eigenvalues: vec![m.entries[0]],
            vectors: vec![1.0],
        });
    }

    let mut a = m.entries.clone();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale = m.frob_norm();
    let off_tol = 1e-15 * scale.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if (2.0 * off).sqrt() <= off_tol {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.abs() <= 1e-3 * off_tol / (d as f64) {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for r in 0..d {
                    if r != p && r != q {
                        let arp = a[r * d + p];
                        let arq = a[r * d + q];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        a[r * d + p] = new_rp;
                        a[p * d + r] = new_rp;
                        a[r * d + q] = new_rq;
                        a[q * d + r] = new_rq;
                    }
                }
                for r in 0..d {
                    let vrp = v[r * d + p];
                    let vrq = v[r * d + q];
                    v[r * d + p] = vrp - s * (vrq + tau * vrp);
                    v[r * d + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    if !converged {
        // One last check: the sweeps above may have converged on the final pass.
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        if (2.0 * off).sqrt() > 1e-10 * scale.max(1.0) {
            return Err(Error::EigenFailure);
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[i * d + i].partial_cmp(&a[j * d + j]).expect("finite"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * d + i]).collect();
    let mut vectors = vec![0.0; d * d];
    for (slot, &col) in order.iter().enumerate() {
        for r in 0..d {
            vectors[slot * d + r] = v[r * d + col];
        }
    }
    Ok(SpectralDecomposition { dim: d, eigenvalues, vectors })
}

/// `tr(m^{-p})` for positive definite `m` and positive real `p`. Callers that
/// want the normalized objective divide by the dimension themselves.
pub fn trace_neg_power(m: &SymMatrix, p: f64) -> Result<f64> {
    assert!(p > 0.0, "exponent must be positive");
    let dec = eig_sym(m)?;
    trace_neg_power_from_spectrum(dec.eigenvalues(), p)
}

/// Same as [`trace_neg_power`] but from a precomputed ascending spectrum.
pub fn trace_neg_power_from_spectrum(eigenvalues: &[f64], p: f64) -> Result<f64> {
    let lmin = eigenvalues[0];
    let lmax = eigenvalues[eigenvalues.len() - 1];
    if !(lmax > 0.0 && lmin > PD_RTOL * lmax) {
        return Err(Error::SingularMatrix);
    }
    let integral = p.fract() == 0.0 && p <= i32::MAX as f64;
    let sum = eigenvalues
        .iter()
        .map(|&l| if integral { l.powi(-(p as i32)) } else { l.powf(-p) })
        .sum();
    Ok(sum)
}

/// Root `c` of `sum_j (alpha*lambda_j - c)^{-2} = 1` on `(-inf, alpha*lambda_min)`;
/// `f` is strictly increasing there, so the root is unique and the trace
/// equation pins `alpha*lambda_min - c` into `[1, sqrt(d)]`.
pub fn action_scalar_from_spectrum(eigenvalues: &[f64], alpha: f64) -> f64 {
    assert!(alpha > 0.0, "alpha must be positive");
    let d = eigenvalues.len();
    let edge = alpha * eigenvalues[0];
    if d == 1 {
        return edge - 1.0;
    }
    let f = |c: f64| -> f64 {
        eigenvalues
            .iter()
            .map(|&l| {
                let g = alpha * l - c;
                1.0 / (g * g)
            })
            .sum::<f64>()
            - 1.0
    };
    // f(lo) < 0 and f(hi) > 0 strictly: at lo every term is below 1/d, at hi
    // the lambda_min term alone exceeds 1.
    let mut lo = edge - (d as f64).sqrt() - 1.0;
    let mut hi = edge - (1.0 - 1e-6);
    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fc = f(c);
        if fc.abs() <= ACTION_ROOT_TOL {
            return c;
        }
        if fc < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let fp: f64 = eigenvalues
            .iter()
            .map(|&l| {
                let g = alpha * l - c;
                2.0 / (g * g * g)
            })
            .sum();
        let newton = c - fc / fp;
        c = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    c
}

/// Unique scalar `c` with `alpha*z - c*I` positive definite and
/// `tr((alpha*z - c*I)^{-2}) = 1`, together with the action matrix
/// `(alpha*z - c*I)^{-2}` itself.
pub fn solve_action_scalar(z: &SymMatrix, alpha: f64) -> Result<(f64, SymMatrix)> {
    let dec = eig_sym(z)?;
    let c = action_scalar_from_spectrum(dec.eigenvalues(), alpha);
    let a_matrix = dec.apply(|l| {
        let g = alpha * l - c;
        1.0 / (g * g)
    });
    Ok((c, a_matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> SymMatrix {
        let entries: Vec<f64> = (0..d * d).map(|_| scale * (rng.random::<f64>() - 0.5)).collect();
        SymMatrix::new(d, entries).unwrap()
    }

    fn random_pd(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> SymMatrix {
        // Random spectrum in [lo, hi] conjugated by the eigenbasis of a random
        // symmetric matrix.
        let basis = eig_sym(&random_sym(rng, d, 2.0)).unwrap();
        let spectrum: Vec<f64> = (0..d).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        let mut m = SymMatrix::zeros(d);
        for (j, &l) in spectrum.iter().enumerate() {
            m.add_outer(basis.eigenvector(j), l);
        }
        m
    }

    #[test]
    fn eig_identity_2x2() {
        let dec = eig_sym(&SymMatrix::identity(2)).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0, 1.0]);
        assert!(dec.orthonormality_error() < 1e-12);
    }

    #[test]
    fn eig_diagonal_is_exact() {
        let dec = eig_sym(&SymMatrix::from_diagonal(&[2.0, 5.0])).unwrap();
        assert_eq!(dec.eigenvalues(), &[2.0, 5.0]);
        // Axis-aligned eigenvectors up to sign.
        assert!((dec.eigenvector(0)[0].abs() - 1.0).abs() < 1e-14);
        assert!((dec.eigenvector(1)[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_sym(&mut rng, 6, 3.0);
            let dec = eig_sym(&m).unwrap();
            let rec = dec.reconstruct();
            let err = rec.add_scaled(&m, -1.0).frob_norm();
            assert!(err <= 1e-10 * m.frob_norm().max(1.0), "reconstruction error {err}");
            assert!(dec.orthonormality_error() <= 1e-10);
            for w in dec.eigenvalues().windows(2) {
                assert!(w[0] <= w[1], "eigenvalues must ascend");
            }
        }
    }

    #[test]
    fn eig_rejects_non_finite() {
        let m = SymMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut bad = m.clone();
        bad.entries[3] = f64::NAN;
        assert!(matches!(eig_sym(&bad), Err(Error::InvalidMatrix(_))));
        assert!(matches!(
            SymMatrix::new(2, vec![1.0, f64::INFINITY, 0.0, 1.0]),
            Err(Error::InvalidMatrix(_))
        ));
    }

    #[test]
    fn symmetrization_averages_pairs() {
        let m = SymMatrix::new(2, vec![1.0, 3.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 0), 2.0);
    }

    #[test]
    fn trace_neg_power_identity_and_diagonal() {
        assert_eq!(trace_neg_power(&SymMatrix::identity(3), 2.0).unwrap(), 3.0);
        let m = SymMatrix::from_diagonal(&[1.0, 2.0]);
        assert_eq!(trace_neg_power(&m, 1.0).unwrap(), 1.5);
    }

    #[test]
    fn trace_neg_power_rejects_singular() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert_eq!(trace_neg_power(&m, 1.0), Err(Error::SingularMatrix));
    }

    /// Independent route: invert by Gauss-Jordan, cube by repeated
    /// multiplication, take the trace.
    fn inverse_power_trace_by_solves(m: &SymMatrix, p: usize) -> f64 {
        let d = m.dim();
        let mut a: Vec<f64> = m.as_slice().to_vec();
        let mut inv = vec![0.0; d * d];
        for i in 0..d {
            inv[i * d + i] = 1.0;
        }
        for col in 0..d {
            let pivot_row = (col..d)
                .max_by(|&r1, &r2| a[r1 * d + col].abs().partial_cmp(&a[r2 * d + col].abs()).unwrap())
                .unwrap();
            for j in 0..d {
                a.swap(col * d + j, pivot_row * d + j);
                inv.swap(col * d + j, pivot_row * d + j);
            }
            let piv = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= piv;
                inv[col * d + j] /= piv;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = a[r * d + col];
                for j in 0..d {
                    a[r * d + j] -= factor * a[col * d + j];
                    inv[r * d + j] -= factor * inv[col * d + j];
                }
            }
        }
        let mut power = inv.clone();
        for _ in 1..p {
            power = mat_mul(&power, &inv, d);
        }
        (0..d).map(|i| power[i * d + i]).sum()
    }

    #[test]
    fn trace_neg_power_matches_repeated_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_pd(&mut rng, 5, 0.4, 3.0);
            for p in [1usize, 2, 3] {
                let via_eig = trace_neg_power(&m, p as f64).unwrap();
                let via_solve = inverse_power_trace_by_solves(&m, p);
                let rel = (via_eig - via_solve).abs() / via_solve.abs();
                assert!(rel <= 1e-8, "p={p}: {via_eig} vs {via_solve} (rel {rel})");
            }
        }
    }

    #[test]
    fn action_scalar_identity_closed_form() {
        for d in [1usize, 2, 4, 7] {
            let z = SymMatrix::identity(d);
            let alpha = 10.0;
            let (c, a) = solve_action_scalar(&z, alpha).unwrap();
            let expected = alpha - (d as f64).sqrt();
            assert!((c - expected).abs() <= 1e-9, "d={d}: c={c} expected {expected}");
            assert!((a.trace() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn action_scalar_matches_bisection_oracle() {
        // z = diag(1, 4), alpha = 10: solve (10-c)^{-2} + (40-c)^{-2} = 1 by
        // plain bisection to 1e-12 and compare.
        let z = SymMatrix::from_diagonal(&[1.0, 4.0]);
        let alpha = 10.0;
        let f = |c: f64| (10.0 - c).powi(-2) + (40.0 - c).powi(-2) - 1.0;
        let (mut lo, mut hi) = (10.0 - 2.0_f64.sqrt() - 1.0, 10.0 - 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let (c, a) = solve_action_scalar(&z, alpha).unwrap();
        assert!((c - oracle).abs() <= 1e-10, "c={c} oracle={oracle}");
        assert!((a.trace() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn action_matrix_trace_and_bracket_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let d = 2 + (rng.random::<u32>() % 5) as usize;
            let z = random_pd(&mut rng, d, 0.05, 2.5);
            let alpha = 1.0 + 20.0 * rng.random::<f64>();
            let (c, a) = solve_action_scalar(&z, alpha).unwrap();
            let lmin = eig_sym(&z).unwrap().lambda_min();
            assert!(c < alpha * lmin, "c must stay below alpha*lambda_min");
            // Independent trace: sum the diagonal of the formed matrix.
            let trace: f64 = (0..d).map(|i| a.get(i, i)).sum();
            assert!((trace - 1.0).abs() <= 1e-10, "trace {trace}");
            // Eigenvalues of the action matrix are (alpha*lambda_j - c)^{-2}.
            let za = eig_sym(&z).unwrap();
            let mut expected: Vec<f64> = za
                .eigenvalues()
                .iter()
                .map(|&l| (alpha * l - c).powi(-2))
                .collect();
            expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let got = eig_sym(&a).unwrap();
            for (e, g) in expected.iter().zip(got.eigenvalues()) {
                assert!((e - g).abs() <= 1e-9 * e.max(1.0));
            }
        }
    }

    #[test]
    fn action_sandwich_inequalities_hold() {
        // For lambda_min(z) in [1-5*gamma, 1) and alpha = sqrt(d)/gamma:
        //   <vv^T, z^{-1}> <= alpha <vv^T, A^{1/2}> <= alpha lambda_min <vv^T, z^{-1}>.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let d = 2 + (rng.random::<u32>() % 5) as usize;
            let gamma = (1.0 / 6.0) * (0.05 + 0.95 * rng.random::<f64>());
            let lmin = 1.0 - 5.0 * gamma + (5.0 * gamma - 1e-6) * rng.random::<f64>();
            let basis = eig_sym(&random_sym(&mut rng, d, 1.0)).unwrap();
            let mut z = SymMatrix::zeros(d);
            z.add_outer(basis.eigenvector(0), lmin);
            for j in 1..d {
                let l = lmin + (2.0 - lmin) * rng.random::<f64>();
                z.add_outer(basis.eigenvector(j), l);
            }
            let alpha = (d as f64).sqrt() / gamma;
            let dec = eig_sym(&z).unwrap();
            let c = action_scalar_from_spectrum(dec.eigenvalues(), alpha);
            let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let w = dec.coordinates(&v);
            let lev: f64 = w.iter().zip(dec.eigenvalues()).map(|(wj, &l)| wj * wj / l).sum();
            let score: f64 = w
                .iter()
                .zip(dec.eigenvalues())
                .map(|(wj, &l)| wj * wj / (alpha * l - c))
                .sum();
            let mid = alpha * score;
            let upper = alpha * dec.lambda_min() * lev;
            assert!(lev <= mid * (1.0 + 1e-9) + 1e-12, "lower sandwich: {lev} vs {mid}");
            assert!(mid <= upper * (1.0 + 1e-9) + 1e-12, "upper sandwich: {mid} vs {upper}");
        }
    }
}
