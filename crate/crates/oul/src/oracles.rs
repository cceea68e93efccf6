//! Independent brute-force ground truth.
//!
//! Everything in this module deliberately avoids the analytic machinery of
//! [`crate::ou_core`] and [`crate::lindblad_core`]:
//!
//! * [`sample_ou`] integrates the stochastic differential equation itself
//!   (exact Gaussian increments or Euler-Maruyama), with counter-based RNG
//!   streams so results are bit-identical for any thread count;
//! * [`build_fock_liouvillian`] assembles the vectorized Lindblad generator
//!   in the truncated number basis *from the raw bath couplings* — never
//!   from the loss/pump/coherence contractions — so the analytic and oracle
//!   paths share no code;
//! * [`evolve_density`] integrates `∂ₜ|ρ⟩⟩ = 𝓛|ρ⟩⟩` by substepped Taylor
//!   series with a half-step Richardson acceptance test;
//! * [`q_function`] reads the Husimi function `⟨α|ρ|α⟩/πᴺ` off a density
//!   matrix with explicit truncated coherent vectors;
//! * [`apply_fokker_planck`] / [`apply_husimi_generator`] apply the classical
//!   and Husimi generators by second-order central differences on a grid;
//! * [`gauss_hermite`] supplies Golub-Welsch quadrature for the probabilist
//!   weight `e^{-x²/2}/√(2π)`, used for eigenfunction inner products.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad_core::{ComplexOUForm, LindbladModel};
use crate::ou_core::{Direction, OUModel};
use crate::tensor_linalg::{c, matrix_exponential, DenseMatrix};

// ---------------------------------------------------------------------------
// Stochastic sampling
// ---------------------------------------------------------------------------

/// How [`sample_ou`] advances each path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingScheme {
    /// One Gaussian draw from the exact transition law
    /// `x_t ~ N(e^{-βt} x₀, ∫₀ᵗ e^{-βs} 2D e^{-βᵀs} ds)`.
    Exact,
    /// Euler-Maruyama iteration `x ← x - βx·dt + σ·√dt·ξ`.  The step is
    /// shrunk to divide `t` evenly, never enlarged.
    Euler { dt: f64 },
}

/// Empirical moments of a batch of sampled paths.
#[derive(Clone, Debug)]
pub struct SampleStatistics {
    /// Sample mean of `x_t`.
    pub mean: Vec<f64>,
    /// Unbiased sample covariance.
    pub covariance: DenseMatrix,
    pub path_count: usize,
    /// Standard error of each mean component, `√(S_ii / n)`.
    pub mean_standard_errors: Vec<f64>,
    /// Standard error of each covariance entry under the Gaussian formula
    /// `√((S_ii S_jj + S_ij²) / (n-1))`.
    pub covariance_standard_errors: DenseMatrix,
}

/// Simulates `paths` realizations of `dx = -βx dt + σ dW` from `x0` to time
/// `t` and returns their empirical moments.
///
/// Each path owns RNG stream `path_index` of a ChaCha8 generator seeded with
/// `seed`, and paths are reduced in index order, so the result is identical
/// for any thread count.
pub fn sample_ou(
    model: &OUModel,
    x0: &[f64],
    t: f64,
    paths: usize,
    seed: u64,
    scheme: SamplingScheme,
) -> Result<SampleStatistics> {
    let n = model.dim();
    if x0.len() != n {
        return Err(Error::Validation {
            field: "x0".into(),
            reason: format!("expected {n} components, got {}", x0.len()),
        });
    }
    if paths < 2 {
        return Err(Error::Validation {
            field: "paths".into(),
            reason: "at least two paths are required for sample statistics".into(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Validation {
            field: "t".into(),
            reason: "time must be finite and non-negative".into(),
        });
    }

    let samples: Vec<Vec<f64>> = match scheme {
        SamplingScheme::Exact => {
            let mean = real_matvec(&matrix_exponential(model.beta(), -t)?, x0);
            let factor = transition_noise_factor(model, t)?;
            (0..paths)
                .into_par_iter()
                .map(|path| {
                    let mut rng = path_rng(seed, path);
                    let z: Vec<f64> =
                        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let mut x = mean.clone();
                    for (i, xi) in x.iter_mut().enumerate() {
                        for (j, zj) in z.iter().enumerate() {
                            *xi += factor.get(i, j).re * zj;
                        }
                    }
                    x
                })
                .collect()
        }
        SamplingScheme::Euler { dt } => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Validation {
                    field: "dt".into(),
                    reason: "Euler step must be positive".into(),
                });
            }
            let steps = (t / dt).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            let sigma = noise_factor(model)?;
            let sqrt_h = h.sqrt();
            (0..paths)
                .into_par_iter()
                .map(|path| {
                    let mut rng = path_rng(seed, path);
                    let mut x = x0.to_vec();
                    let mut drift = vec![0.0; n];
                    for _ in 0..steps {
                        for (i, di) in drift.iter_mut().enumerate() {
                            *di = 0.0;
                            for (j, xj) in x.iter().enumerate() {
                                *di += model.beta().get(i, j).re * xj;
                            }
                        }
                        let z: Vec<f64> =
                            (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                        for i in 0..n {
                            let mut kick = 0.0;
                            for (j, zj) in z.iter().enumerate() {
                                kick += sigma.get(i, j).re * zj;
                            }
                            x[i] += -drift[i] * h + kick * sqrt_h;
                        }
                    }
                    x
                })
                .collect()
        }
    };

    Ok(statistics(&samples, n))
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn real_matvec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| x.iter().enumerate().map(|(j, xj)| m.get(i, j).re * xj).sum())
        .collect()
}

/// Factor `F` with `F Fᵀ = ∫₀ᵗ e^{-βs} 2D e^{-βᵀs} ds`, via composite
/// Simpson integration of the covariance integrand followed by a symmetric
/// eigenvalue square root.  Deliberately independent of the stationary
/// Lyapunov identity that the analytic layer relies on.
fn transition_noise_factor(model: &OUModel, t: f64) -> Result<DenseMatrix> {
    let n = model.dim();
    if t == 0.0 {
        return Ok(DenseMatrix::zeros(n, n));
    }
    let intervals = 2000usize;
    let h = t / intervals as f64;
    let step = matrix_exponential(model.beta(), -h)?;
    let two_d = model.diffusion().scale(c(2.0, 0.0));
    let mut decay = DenseMatrix::identity(n);
    let mut integral = DenseMatrix::zeros(n, n);
    for node in 0..=intervals {
        let weight = if node == 0 || node == intervals {
            1.0
        } else if node % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = decay.matmul(&two_d).matmul(&decay.transpose());
        integral = integral.add(&f.scale(c(weight * h / 3.0, 0.0)));
        decay = decay.matmul(&step);
    }
    symmetric_sqrt(&integral.symmetrized())
}

/// Noise factor for the Euler scheme: the model's own `σ` when present,
/// otherwise the symmetric square root of `2D`.
fn noise_factor(model: &OUModel) -> Result<DenseMatrix> {
    if let Some(sigma) = model.noise() {
        return Ok(sigma.clone());
    }
    symmetric_sqrt(&model.diffusion().scale(c(2.0, 0.0)))
}

/// Symmetric PSD square root of a real symmetric matrix, with small negative
/// eigenvalues clamped to zero.
fn symmetric_sqrt(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows();
    let mut real = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            real[(i, j)] = m.get(i, j).re;
        }
    }
    let (vals, vecs) = real.eigh(UPLO::Lower)?;
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda < -1e-10 * (1.0 + scale) {
            return Err(Error::SingularCovariance);
        }
        let root = lambda.max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, out.get(i, j) + c(root * vecs[(i, k)] * vecs[(j, k)], 0.0));
            }
        }
    }
    // out = V diag(√λ) Vᵀ is itself the factor: (V√ΛVᵀ)(V√ΛVᵀ)ᵀ = VΛVᵀ = m.
    Ok(out)
}

fn statistics(samples: &[Vec<f64>], n: usize) -> SampleStatistics {
    let count = samples.len();
    let mut mean = vec![0.0; n];
    for x in samples {
        for i in 0..n {
            mean[i] += x[i];
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut cov = DenseMatrix::zeros(n, n);
    for x in samples {
        for i in 0..n {
            for j in 0..n {
                let v = cov.get(i, j) + c((x[i] - mean[i]) * (x[j] - mean[j]), 0.0);
                cov.set(i, j, v);
            }
        }
    }
    let cov = cov.scale(c(1.0 / (count as f64 - 1.0), 0.0)).symmetrized();
    let mean_se: Vec<f64> =
        (0..n).map(|i| (cov.get(i, i).re / count as f64).sqrt()).collect();
    let mut cov_se = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sii = cov.get(i, i).re;
            let sjj = cov.get(j, j).re;
            let sij = cov.get(i, j).re;
            cov_se.set(i, j, c(((sii * sjj + sij * sij) / (count as f64 - 1.0)).sqrt(), 0.0));
        }
    }
    SampleStatistics {
        mean,
        covariance: cov,
        path_count: count,
        mean_standard_errors: mean_se,
        covariance_standard_errors: cov_se,
    }
}

// ---------------------------------------------------------------------------
// Fock-space Liouvillian
// ---------------------------------------------------------------------------

/// Vectorized Lindblad generator on the truncated number basis.
#[derive(Clone, Debug)]
pub struct FockLiouvillian {
    /// Per-mode occupation cutoff (levels `0..=n_max`).
    pub n_max: usize,
    pub n_modes: usize,
    /// Hilbert-space dimension `(n_max+1)^N`; the matrix is `dim² × dim²`.
    pub dim: usize,
    pub matrix: DenseMatrix,
}

/// Assembles `𝓛` with `∂ₜ|ρ⟩⟩ = 𝓛|ρ⟩⟩` under row-major vectorization
/// `|AρB⟩⟩ = (A⊗Bᵀ)|ρ⟩⟩`, directly from the Hamiltonian matrices and the
/// raw bath couplings.
///
/// Memory guard: one mode up to `n_max = 60`, two modes up to `n_max = 10`;
/// more modes are out of scope for a dense oracle.
pub fn build_fock_liouvillian(model: &LindbladModel, n_max: usize) -> Result<FockLiouvillian> {
    let modes = model.n_modes();
    let max_allowed = match modes {
        1 => 60,
        2 => 10,
        _ => {
            return Err(Error::Validation {
                field: "n_modes".into(),
                reason: "the dense Fock oracle supports at most two modes".into(),
            })
        }
    };
    if n_max == 0 || n_max > max_allowed {
        return Err(Error::CutoffTooLarge { requested: n_max, max: max_allowed });
    }

    let d = n_max + 1;
    let dim = d.pow(modes as u32);
    let lowering = mode_lowering_operators(modes, d);
    let identity = DenseMatrix::identity(dim);

    // Hamiltonian: quadratic hopping plus the symmetric two-photon part.
    let mut h_full = DenseMatrix::zeros(dim, dim);
    for row in 0..modes {
        for col in 0..modes {
            let hop = lowering[row].adjoint().matmul(&lowering[col]);
            h_full = h_full.add(&hop.scale(model.hamiltonian().get(row, col)));
            let pair_up = lowering[row].adjoint().matmul(&lowering[col].adjoint());
            let pair_down = lowering[col].matmul(&lowering[row]);
            let kappa = model.squeezing().get(row, col);
            h_full = h_full.add(&pair_up.scale(kappa * 0.5));
            h_full = h_full.add(&pair_down.scale(kappa.conj() * 0.5));
        }
    }
    let minus_i = c(0.0, -1.0);
    let mut liouvillian = h_full
        .kron(&identity)
        .sub(&identity.kron(&h_full.transpose()))
        .scale(minus_i);

    // Dissipators straight from the couplings: L_b = Σ_m (l_m a_m + p*_m a†_m).
    for bath in model.baths() {
        let mut jump = DenseMatrix::zeros(dim, dim);
        for (m, low) in lowering.iter().enumerate() {
            jump = jump.add(&low.scale(bath.loss[m]));
            jump = jump.add(&low.adjoint().scale(bath.pump[m].conj()));
        }
        let sandwich = jump.kron(&jump.conj());
        let normal = jump.adjoint().matmul(&jump);
        let anticommutator = normal
            .kron(&identity)
            .add(&identity.kron(&normal.transpose()))
            .scale(c(0.5, 0.0));
        liouvillian = liouvillian.add(&sandwich).sub(&anticommutator);
    }

    // Trace preservation: summing any column of 𝓛 over the rows that carry
    // diagonal density-matrix entries must give zero.
    let scale = 1.0 + liouvillian.max_norm();
    for col in 0..dim * dim {
        let mut sum = c(0.0, 0.0);
        for k in 0..dim {
            sum += liouvillian.get(k * dim + k, col);
        }
        if sum.norm() > 1e-10 * scale {
            return Err(Error::Numerical {
                reason: format!(
                    "assembled Liouvillian violates trace preservation (column sum {:.3e})",
                    sum.norm()
                ),
            });
        }
    }

    Ok(FockLiouvillian { n_max, n_modes: modes, dim, matrix: liouvillian })
}

/// Lowering operator of each mode on the `d^modes`-dimensional product
/// basis, with mode 0 owning the most significant digit (row-major tensor
/// order, matching the Kronecker convention used for vectorization).
fn mode_lowering_operators(modes: usize, d: usize) -> Vec<DenseMatrix> {
    let mut single = DenseMatrix::zeros(d, d);
    for level in 1..d {
        single.set(level - 1, level, c((level as f64).sqrt(), 0.0));
    }
    let eye = DenseMatrix::identity(d);
    (0..modes)
        .map(|m| {
            let mut op = DenseMatrix::identity(1);
            for k in 0..modes {
                op = op.kron(if k == m { &single } else { &eye });
            }
            op
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Density-matrix evolution
// ---------------------------------------------------------------------------

/// Result of [`evolve_density`], carrying the numerical health indicators
/// alongside the evolved state.
#[derive(Clone, Debug)]
pub struct DensityEvolution {
    /// Evolved density matrix, re-symmetrized.
    pub rho: DenseMatrix,
    /// Hermiticity deviation accumulated by the integrator before
    /// symmetrization.
    pub hermiticity_drift: f64,
    /// Population on the cutoff boundary (any mode at level `n_max`).
    pub tail_mass: f64,
    /// Number of integrator substeps actually used.
    pub substeps: usize,
}

/// Integrates `|ρ(t)⟩⟩ = exp(𝓛 t)|ρ₀⟩⟩` by substepped Taylor series on the
/// vectorized state, accepting the step count only once halving it changes
/// the result by less than `1e-9`.
///
/// Validates that `ρ₀` is Hermitian, unit-trace, positive semi-definite and
/// supported away from the cutoff (boundary population below `1e-8`).
pub fn evolve_density(
    liouv: &FockLiouvillian,
    rho0: &DenseMatrix,
    t: f64,
) -> Result<DensityEvolution> {
    let dim = liouv.dim;
    if rho0.rows() != dim || rho0.cols() != dim {
        return Err(Error::Validation {
            field: "rho0".into(),
            reason: format!("density matrix must be {dim} x {dim}"),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Validation {
            field: "t".into(),
            reason: "time must be finite and non-negative".into(),
        });
    }
    let hdev = rho0.hermiticity_deviation();
    if hdev > 1e-10 {
        return Err(Error::Validation {
            field: "rho0".into(),
            reason: format!("density matrix must be Hermitian (deviation {hdev:.3e})"),
        });
    }
    let trace = rho0.trace();
    if (trace - c(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::Validation {
            field: "rho0".into(),
            reason: format!("density matrix must have unit trace (got {trace})"),
        });
    }
    let (evals, _) = rho0.array().eigh(UPLO::Lower)?;
    if evals.iter().any(|&v| v < -1e-10) {
        return Err(Error::Validation {
            field: "rho0".into(),
            reason: "density matrix must be positive semi-definite".into(),
        });
    }
    let initial_tail = boundary_population(rho0, liouv.n_modes, liouv.n_max);
    if initial_tail >= 1e-8 {
        return Err(Error::TailMass { mass: initial_tail });
    }
    if t == 0.0 {
        return Ok(DensityEvolution {
            rho: rho0.clone(),
            hermiticity_drift: 0.0,
            tail_mass: initial_tail,
            substeps: 0,
        });
    }

    let sparse = CompressedRows::from_dense(&liouv.matrix);
    let v0 = rho0.vec_row_major();
    let mut steps =
        ((liouv.matrix.one_norm() * t / 0.5).ceil() as usize).max(1);
    let mut coarse = integrate_taylor(&sparse, &v0, t, steps);
    let accepted = loop {
        let fine = integrate_taylor(&sparse, &v0, t, steps * 2);
        let diff = coarse
            .iter()
            .zip(fine.iter())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
        if diff < 1e-9 {
            break fine;
        }
        steps *= 2;
        if steps > 1 << 22 {
            return Err(Error::Numerical {
                reason: "density evolution failed to converge under step halving".into(),
            });
        }
        coarse = fine;
    };
    let steps_used = steps * 2;

    let rho = DenseMatrix::from_vec_row_major(dim, dim, accepted);
    let drift = rho.hermiticity_deviation();
    if drift > 1e-7 {
        return Err(Error::HermiticityDrift { drift });
    }
    let rho = rho.hermitized();
    let final_trace = rho.trace();
    if (final_trace - c(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::Numerical {
            reason: format!("evolved density trace drifted to {final_trace}"),
        });
    }
    let tail = boundary_population(&rho, liouv.n_modes, liouv.n_max);
    if tail > 1e-6 {
        return Err(Error::TailMass { mass: tail });
    }
    Ok(DensityEvolution { rho, hermiticity_drift: drift, tail_mass: tail, substeps: steps_used })
}

/// Total population on basis states with any mode at the cutoff level.
fn boundary_population(rho: &DenseMatrix, modes: usize, n_max: usize) -> f64 {
    let d = n_max + 1;
    let dim = rho.rows();
    let mut mass = 0.0;
    for idx in 0..dim {
        let mut rest = idx;
        let mut on_boundary = false;
        for _ in 0..modes {
            if rest % d == n_max {
                on_boundary = true;
            }
            rest /= d;
        }
        if on_boundary {
            mass += rho.get(idx, idx).re.abs();
        }
    }
    mass
}

/// Minimal compressed-sparse-row view of a dense matrix; the Liouvillian is
/// a few-banded operator, so matrix-vector products through this view are
/// hundreds of times cheaper than dense ones.
struct CompressedRows {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    size: usize,
}

impl CompressedRows {
    fn from_dense(m: &DenseMatrix) -> Self {
        let size = m.rows();
        let mut row_ptr = Vec::with_capacity(size + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..size {
            for j in 0..size {
                let v = m.get(i, j);
                if v != c(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals, size }
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, out_i) in out.iter_mut().enumerate().take(self.size) {
            let mut acc = c(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out_i = acc;
        }
    }
}

/// `exp(L t) v` as `steps` repetitions of a machine-precision Taylor series
/// on the vector.
fn integrate_taylor(
    sparse: &CompressedRows,
    v0: &[Complex64],
    t: f64,
    steps: usize,
) -> Vec<Complex64> {
    let h = t / steps as f64;
    let mut v = v0.to_vec();
    let mut term = vec![c(0.0, 0.0); v.len()];
    let mut next = vec![c(0.0, 0.0); v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&v);
        let mut k = 1.0f64;
        loop {
            sparse.apply(&term, &mut next);
            let scale = c(h / k, 0.0);
            let mut term_norm = 0.0f64;
            let mut v_norm = 0.0f64;
            for i in 0..v.len() {
                term[i] = next[i] * scale;
                v[i] += term[i];
                term_norm = term_norm.max(term[i].norm());
                v_norm = v_norm.max(v[i].norm());
            }
            if term_norm <= 1e-18 * (1.0 + v_norm) || k > 80.0 {
                break;
            }
            k += 1.0;
        }
    }
    v
}

/// Embeds a density matrix into a larger per-mode cutoff (zero padding).
/// The embedding is exact: no population is created or moved.
pub fn pad_density(
    rho: &DenseMatrix,
    n_modes: usize,
    new_n_max: usize,
) -> Result<DenseMatrix> {
    let d_old = per_mode_dimension(rho.rows(), n_modes)?;
    let d_new = new_n_max + 1;
    if d_new < d_old {
        return Err(Error::Validation {
            field: "new_n_max".into(),
            reason: "padding cannot shrink the cutoff".into(),
        });
    }
    let dim_new = d_new.pow(n_modes as u32);
    let mut out = DenseMatrix::zeros(dim_new, dim_new);
    let remap = |idx: usize| -> usize {
        let mut rest = idx;
        let mut digits = vec![0usize; n_modes];
        for d in digits.iter_mut().rev() {
            *d = rest % d_old;
            rest /= d_old;
        }
        digits.iter().fold(0usize, |acc, &d| acc * d_new + d)
    };
    for i in 0..rho.rows() {
        let ni = remap(i);
        for j in 0..rho.cols() {
            out.set(ni, remap(j), rho.get(i, j));
        }
    }
    Ok(out)
}

fn per_mode_dimension(dim: usize, n_modes: usize) -> Result<usize> {
    let d = (dim as f64).powf(1.0 / n_modes as f64).round() as usize;
    if d.pow(n_modes as u32) != dim || d < 2 {
        return Err(Error::Validation {
            field: "rho".into(),
            reason: format!("dimension {dim} is not a perfect {n_modes}-mode product"),
        });
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// Husimi function extraction
// ---------------------------------------------------------------------------

/// Husimi function `Q(α) = ⟨α|ρ|α⟩/πᴺ` read off a truncated density matrix
/// with explicitly built coherent vectors.
///
/// The truncation guard `|α_m|² ≤ n_max/4` per mode keeps the discarded
/// Poisson tail of the coherent state far below the tolerances this oracle
/// backs; enlarge the density matrix with [`pad_density`] to probe larger
/// amplitudes.
pub fn q_function(rho: &DenseMatrix, alpha: &[Complex64]) -> Result<f64> {
    let modes = alpha.len();
    if modes == 0 {
        return Err(Error::Validation {
            field: "alpha".into(),
            reason: "at least one mode amplitude is required".into(),
        });
    }
    let d = per_mode_dimension(rho.rows(), modes)?;
    let n_max = d - 1;
    let limit = n_max as f64 / 4.0;
    for a in alpha {
        if a.norm_sqr() > limit {
            return Err(Error::AmplitudeTooLarge { amplitude_sq: a.norm_sqr(), limit });
        }
    }

    // Per-mode coherent coefficients c_n = e^{-|α|²/2} αⁿ/√n!, by the stable
    // recurrence c_{n+1} = c_n α/√(n+1).
    let mode_vectors: Vec<Vec<Complex64>> = alpha
        .iter()
        .map(|a| {
            let mut v = Vec::with_capacity(d);
            v.push(c((-0.5 * a.norm_sqr()).exp(), 0.0));
            for level in 1..d {
                let prev = v[level - 1];
                v.push(prev * a / (level as f64).sqrt());
            }
            v
        })
        .collect();
    let dim = rho.rows();
    let mut coherent = vec![c(1.0, 0.0); dim];
    for (idx, slot) in coherent.iter_mut().enumerate() {
        let mut rest = idx;
        for m in (0..modes).rev() {
            *slot *= mode_vectors[m][rest % d];
            rest /= d;
        }
    }

    let mut value = c(0.0, 0.0);
    for (i, ci) in coherent.iter().enumerate() {
        let mut row = c(0.0, 0.0);
        for (j, cj) in coherent.iter().enumerate() {
            row += rho.get(i, j) * cj;
        }
        value += ci.conj() * row;
    }
    if value.im.abs() > 1e-9 * (1.0 + value.re.abs()) {
        return Err(Error::Numerical {
            reason: format!("Husimi value has imaginary part {:.3e}", value.im),
        });
    }
    Ok(value.re / std::f64::consts::PI.powi(modes as i32))
}

/// Single-mode thermal density matrix `ρ ∝ Σ (n̄/(n̄+1))ⁿ |n⟩⟨n|`, truncated
/// to `dim` levels and renormalized to unit trace on the truncated space.
pub fn thermal_density(nbar: f64, dim: usize) -> DenseMatrix {
    let ratio = nbar / (nbar + 1.0);
    let mut rho = DenseMatrix::zeros(dim, dim);
    let mut weight = 1.0;
    let mut total = 0.0;
    for n in 0..dim {
        rho.set(n, n, c(weight, 0.0));
        total += weight;
        weight *= ratio;
    }
    rho.scale(c(1.0 / total, 0.0))
}

/// Single-mode coherent density matrix `|α⟩⟨α|`, truncated to `dim` levels
/// and renormalized to unit trace on the truncated space.
pub fn coherent_density(alpha: Complex64, dim: usize) -> DenseMatrix {
    let mut v = Vec::with_capacity(dim);
    v.push(c((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..dim {
        let prev = v[n - 1];
        v.push(prev * alpha / (n as f64).sqrt());
    }
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut rho = DenseMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            rho.set(i, j, v[i] * v[j].conj() / norm);
        }
    }
    rho
}

// ---------------------------------------------------------------------------
// Finite-difference generator application
// ---------------------------------------------------------------------------

/// A complex-valued function sampled on a uniform axis-aligned grid.
#[derive(Clone, Debug)]
pub struct GridFunction {
    origin: Vec<f64>,
    spacing: f64,
    points: Vec<usize>,
    values: Vec<Complex64>,
}

impl GridFunction {
    /// Samples `f` on the grid `origin[axis] + index·spacing`.
    pub fn sample(
        origin: &[f64],
        spacing: f64,
        points: &[usize],
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Self {
        assert_eq!(origin.len(), points.len(), "one origin component per axis");
        assert!(spacing > 0.0, "grid spacing must be positive");
        let total: usize = points.iter().product();
        let dim = points.len();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0f64; dim];
        for _ in 0..total {
            for a in 0..dim {
                x[a] = origin[a] + idx[a] as f64 * spacing;
            }
            values.push(f(&x));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < points[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self { origin: origin.to_vec(), spacing, points: points.to_vec(), values }
    }

    /// Samples `f` on a cube `[-half_width, half_width]^dim` with
    /// `points_per_axis` nodes per axis.
    pub fn centered(
        half_width: f64,
        points_per_axis: usize,
        dim: usize,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Self {
        assert!(points_per_axis >= 2, "need at least two points per axis");
        let spacing = 2.0 * half_width / (points_per_axis - 1) as f64;
        Self::sample(&vec![-half_width; dim], spacing, &vec![points_per_axis; dim], f)
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at a multi-index.
    pub fn value(&self, idx: &[usize]) -> Complex64 {
        self.values[self.flat(idx)]
    }

    /// Physical coordinates of a multi-index.
    pub fn coordinate(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(self.origin.iter())
            .map(|(&i, &o)| o + i as f64 * self.spacing)
            .collect()
    }

    /// Whether a multi-index is at least `margin` cells from every boundary.
    pub fn is_interior(&self, idx: &[usize], margin: usize) -> bool {
        idx.iter()
            .zip(self.points.iter())
            .all(|(&i, &p)| i >= margin && i + margin < p)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut out = 0usize;
        for (a, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.points[a]);
            out = out * self.points[a] + i;
        }
        out
    }

    fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    fn like(&self) -> Self {
        Self {
            origin: self.origin.clone(),
            spacing: self.spacing,
            points: self.points.clone(),
            values: vec![c(0.0, 0.0); self.values.len()],
        }
    }

    fn validate_for_stencils(&self, expected_dim: usize) -> Result<()> {
        if self.dim() != expected_dim {
            return Err(Error::Validation {
                field: "grid".into(),
                reason: format!("expected {expected_dim} axes, got {}", self.dim()),
            });
        }
        if self.spacing > 0.05 {
            return Err(Error::GridTooCoarse { spacing: self.spacing });
        }
        if self.points.iter().any(|&p| p < 5) {
            return Err(Error::Validation {
                field: "grid".into(),
                reason: "stencils need at least five points per axis".into(),
            });
        }
        Ok(())
    }

    /// Visits every multi-index that is at least `margin` cells interior.
    fn for_each_interior(&self, margin: usize, mut body: impl FnMut(&[usize], usize)) {
        let dim = self.dim();
        let mut idx = vec![margin; dim];
        if self.points.iter().any(|&p| p < 2 * margin + 1) {
            return;
        }
        loop {
            body(&idx, self.flat(&idx));
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] + margin < self.points[axis] {
                    break;
                }
                idx[axis] = margin;
            }
        }
    }
}

/// Applies the forward or adjoint generator of a classical model to a grid
/// function by second-order central differences:
///
/// * forward:  `Σᵢ ∂ᵢ((βx)ᵢ f) + Σᵢⱼ Dᵢⱼ ∂ᵢ∂ⱼ f` (drift in divergence form),
/// * adjoint:  `-Σᵢ (βx)ᵢ ∂ᵢ f + Σᵢⱼ Dᵢⱼ ∂ᵢ∂ⱼ f`.
///
/// The outermost two cells of the result are zeroed; callers compare
/// interiors only.
pub fn apply_fokker_planck(
    model: &OUModel,
    f: &GridFunction,
    direction: Direction,
) -> Result<GridFunction> {
    f.validate_for_stencils(model.dim())?;
    let n = model.dim();
    let h = f.spacing;

    // Drift field components (βx)ᵢ at every grid point.
    let total = f.values.len();
    let mut drift = vec![vec![0.0f64; total]; n];
    f.for_each_interior(0, |idx, flat| {
        let x = f.coordinate(idx);
        for (i, component) in drift.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += model.beta().get(i, j).re * xj;
            }
            component[flat] = acc;
        }
    });

    let mut out = f.like();
    f.for_each_interior(2, |_, flat| {
        let mut acc = c(0.0, 0.0);
        for (i, component) in drift.iter().enumerate() {
            let si = f.stride(i);
            match direction {
                Direction::Forward => {
                    let plus = component[flat + si] * f.values[flat + si];
                    let minus = component[flat - si] * f.values[flat - si];
                    acc += (plus - minus) / (2.0 * h);
                }
                Direction::Adjoint => {
                    let grad = (f.values[flat + si] - f.values[flat - si]) / (2.0 * h);
                    acc -= component[flat] * grad;
                }
            }
            for j in 0..n {
                let d_ij = model.diffusion().get(i, j).re;
                if d_ij == 0.0 {
                    continue;
                }
                let second = if i == j {
                    (f.values[flat + si] - 2.0 * f.values[flat] + f.values[flat - si])
                        / (h * h)
                } else {
                    let sj = f.stride(j);
                    (f.values[flat + si + sj] - f.values[flat + si - sj]
                        - f.values[flat - si + sj]
                        + f.values[flat - si - sj])
                        / (4.0 * h * h)
                };
                acc += d_ij * second;
            }
        }
        out.values[flat] = acc;
    });
    Ok(out)
}

/// Applies the Husimi generator of a single-mode form to a function sampled
/// on the `(Re α, Im α)` plane, using Wirtinger derivatives
/// `∂_α = (∂ₓ - i∂_y)/2`, `∂_{α*} = (∂ₓ + i∂_y)/2` built from central
/// differences.  The outermost two cells of the result are zeroed.
pub fn apply_husimi_generator(form: &ComplexOUForm, f: &GridFunction) -> Result<GridFunction> {
    if form.n_modes() != 1 {
        return Err(Error::PreconditionNotMet {
            reason: "grid application of the Husimi generator is single-mode only".into(),
        });
    }
    f.validate_for_stencils(2)?;
    let h = f.spacing;
    let beta = form.beta_q();
    let d = form.d_q();

    // Drift products u₁ = (β₁₁α + β₁₂α*) f and u₂ = (β₂₁α + β₂₂α*) f.
    let total = f.values.len();
    let mut u1 = vec![c(0.0, 0.0); total];
    let mut u2 = vec![c(0.0, 0.0); total];
    f.for_each_interior(0, |idx, flat| {
        let xy = f.coordinate(idx);
        let alpha = c(xy[0], xy[1]);
        let astar = alpha.conj();
        u1[flat] = (beta.get(0, 0) * alpha + beta.get(0, 1) * astar) * f.values[flat];
        u2[flat] = (beta.get(1, 0) * alpha + beta.get(1, 1) * astar) * f.values[flat];
    });

    let sx = f.stride(0);
    let sy = f.stride(1);
    let i_unit = c(0.0, 1.0);
    let mut out = f.like();
    f.for_each_interior(2, |_, flat| {
        let dx = |g: &[Complex64]| (g[flat + sx] - g[flat - sx]) / (2.0 * h);
        let dy = |g: &[Complex64]| (g[flat + sy] - g[flat - sy]) / (2.0 * h);
        // First Wirtinger derivatives of the drift products.
        let div = 0.5 * (dx(&u1) - i_unit * dy(&u1)) + 0.5 * (dx(&u2) + i_unit * dy(&u2));

        let v = &f.values;
        let fxx = (v[flat + sx] - 2.0 * v[flat] + v[flat - sx]) / (h * h);
        let fyy = (v[flat + sy] - 2.0 * v[flat] + v[flat - sy]) / (h * h);
        let fxy = (v[flat + sx + sy] - v[flat + sx - sy] - v[flat - sx + sy]
            + v[flat - sx - sy])
            / (4.0 * h * h);
        let daa = 0.25 * (fxx - fyy - 2.0 * i_unit * fxy);
        let dab = 0.25 * (fxx + fyy);
        let dbb = 0.25 * (fxx - fyy + 2.0 * i_unit * fxy);

        out.values[flat] = div
            + d.get(0, 0) * daa
            + (d.get(0, 1) + d.get(1, 0)) * dab
            + d.get(1, 1) * dbb;
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature
// ---------------------------------------------------------------------------

/// Golub-Welsch nodes and weights for the probabilist weight
/// `e^{-x²/2}/√(2π)`: `∫ f(x) e^{-x²/2}/√(2π) dx ≈ Σ wᵢ f(xᵢ)`, exact for
/// polynomials of degree `≤ 2·order - 1`.  Weights sum to one.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(2..=128).contains(&order) {
        return Err(Error::OrderOutOfRange { order });
    }
    // Jacobi matrix of the monic probabilist recurrence He_{n+1} = x He_n -
    // n He_{n-1}: zero diagonal, off-diagonal √k.
    let mut jacobi = Array2::<f64>::zeros((order, order));
    for k in 1..order {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let (nodes, vectors) = jacobi.eigh(UPLO::Lower)?;
    let weights: Vec<f64> = (0..order).map(|k| vectors[(0, k)] * vectors[(0, k)]).collect();
    Ok((nodes.to_vec(), weights))
}
