//! Quadratic bosonic Lindblad master equations as complex
//! Ornstein-Uhlenbeck processes in the Husimi representation.
//!
//! The master equation treated here is, for `N` bosonic modes,
//!
//! `∂ₜρ = -i Σ ℍₙₘ [a†ₙaₘ, ρ] - (i/2) Σ [𝕂ₙₘ a†ₙa†ₘ + h.c., ρ]
//!        + Σ_b 𝒟[Σₘ (l_{bm} aₘ + p*_{bm} a†ₘ)] ρ`
//!
//! with Hermitian `ℍ`, symmetric `𝕂`, and bath coupling rows `l_b`, `p_b`.
//! Collecting the dissipative channels into the Hermitian loss and pump
//! matrices `𝕃ₙₘ = Σ_b l*_{bn} l_{bm}`, `ℙₙₘ = Σ_b p*_{bn} p_{bm}` and the
//! coherence matrix `ℂₙₘ = Σ_b l*_{bn} p*_{bm}`, the Husimi function
//! `Q(ᾱ) = ⟨α|ρ|α⟩/πᴺ` of the state obeys a *forward Fokker-Planck equation
//! in the doubled complex coordinates* `ᾱ = (α, α*)`:
//!
//! `∂ₜQ = (∂_α, ∂_{α*}) [ β_q ᾱ + D_q (∂_α, ∂_{α*})ᵀ ] Q`
//!
//! with drift and diffusion blocks
//!
//! `β_q = [[ℍ₊, 𝔹₁₂], [𝔹₁₂*, ℍ₋ᵀ]]`,  `ℍ± = ±iℍ + (𝕃-ℙ)/2`,
//! `𝔹₁₂ = i𝕂 + (ℂ-ℂᵀ)/2`,
//! `D_q = ½ [[𝔻₁₁, 𝕃], [𝕃ᵀ, 𝔻₁₁*]]`,  `𝔻₁₁ = i𝕂 - (ℂ+ℂᵀ)/2`,
//!
//! plus the scalar shift `½ Tr(𝕃-ℙ)` that cancels against the quadratic
//! part's normal ordering and does not enter the PDE.  From there the whole
//! classical normal-form machinery of [`crate::ou_core`] applies verbatim
//! over the complex field: stationary covariance `Σ_α∞`, whitening, ladder
//! spectrum `E_μ = -Σᵢ μᵢ δ_{q,i}` over `2N`-component multi-indices, and
//! biorthonormal left/right eigenfunctions of the Husimi generator.
//!
//! One genuinely quantum subtlety remains: the doubled Gaussian
//! `exp(-ᾱᵀΣ_α∞⁻¹ᾱ/2)` must be normalized over the *physical slice*
//! `α* = conj(α)` (integration over Re α and Im α), not over `ℂ²ᴺ`.  The
//! stationary Husimi function is therefore normalized numerically on that
//! slice at construction time; the bare doubled-Gaussian constant
//! `(2π)ᴺ √det Σ_α∞` stays available as [`q_ness_raw`] for algebraic
//! cross-checks.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermite_mehler::{multi_indices_up_to, MultiIndex};
use crate::ou_core::{spectrum, NormalForm, SpectralMode};
use crate::oracles::gauss_hermite;
use crate::tensor_linalg::{c, matrix_exponential, solve_lyapunov, DenseMatrix};

/// Coupling of one bath channel to the `N` modes: the jump operator is
/// `L_b = Σₘ (loss[m] aₘ + conj(pump[m]) a†ₘ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BathCoupling {
    /// Annihilation couplings `l_{bm}`.
    pub loss: Vec<Complex64>,
    /// Creation couplings `p_{bm}` (stored unconjugated).
    pub pump: Vec<Complex64>,
}

/// A quadratic bosonic Lindblad model.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    n_modes: usize,
    h: DenseMatrix,
    k: DenseMatrix,
    baths: Vec<BathCoupling>,
}

impl LindbladModel {
    /// Validates shapes and symmetries: `h` Hermitian, `k` symmetric, every
    /// bath coupling row of length `N`.
    pub fn new(h: DenseMatrix, k: DenseMatrix, baths: Vec<BathCoupling>) -> Result<Self> {
        if !h.is_square() || !k.is_square() || h.rows() != k.rows() {
            return Err(Error::Validation {
                field: "h/k".into(),
                reason: "Hamiltonian and squeezing matrices must be square with equal dimension"
                    .into(),
            });
        }
        let n_modes = h.rows();
        let hdev = h.hermiticity_deviation();
        if hdev > 1e-12 {
            return Err(Error::Validation {
                field: "h".into(),
                reason: format!("Hamiltonian matrix must be Hermitian (deviation {hdev:.3e})"),
            });
        }
        let kdev = k.symmetry_deviation();
        if kdev > 1e-12 {
            return Err(Error::NotSymmetric { deviation: kdev });
        }
        for (b, bath) in baths.iter().enumerate() {
            if bath.loss.len() != n_modes || bath.pump.len() != n_modes {
                return Err(Error::Validation {
                    field: format!("baths[{b}]"),
                    reason: "coupling rows must have one entry per mode".into(),
                });
            }
        }
        Ok(Self { n_modes, h, k, baths })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn hamiltonian(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn squeezing(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn baths(&self) -> &[BathCoupling] {
        &self.baths
    }
}

/// The Hermitian loss/pump matrices and the loss-pump coherence matrix.
#[derive(Clone, Debug)]
pub struct DissipationMatrices {
    /// `𝕃ₙₘ = Σ_b l*_{bn} l_{bm}` (Hermitian, positive semi-definite).
    pub loss: DenseMatrix,
    /// `ℙₙₘ = Σ_b p*_{bn} p_{bm}` (Hermitian, positive semi-definite).
    pub pump: DenseMatrix,
    /// `ℂₙₘ = Σ_b l*_{bn} p*_{bm}`.
    pub coherence: DenseMatrix,
}

/// Contracts the bath coupling rows into `𝕃`, `ℙ` and `ℂ`.
pub fn assemble_dissipation(model: &LindbladModel) -> DissipationMatrices {
    let n = model.n_modes;
    let mut loss = DenseMatrix::zeros(n, n);
    let mut pump = DenseMatrix::zeros(n, n);
    let mut coherence = DenseMatrix::zeros(n, n);
    for bath in &model.baths {
        for row in 0..n {
            for col in 0..n {
                loss.set(row, col, loss.get(row, col) + bath.loss[row].conj() * bath.loss[col]);
                pump.set(row, col, pump.get(row, col) + bath.pump[row].conj() * bath.pump[col]);
                coherence.set(
                    row,
                    col,
                    coherence.get(row, col) + bath.loss[row].conj() * bath.pump[col].conj(),
                );
            }
        }
    }
    DissipationMatrices { loss, pump, coherence }
}

/// Drift and diffusion of the Husimi-representation Fokker-Planck equation,
/// together with the scalar trace shift of the vectorized generator.
#[derive(Clone, Debug)]
pub struct ComplexOUForm {
    beta_q: DenseMatrix,
    d_q: DenseMatrix,
    trace_shift: Complex64,
    n_modes: usize,
}

impl ComplexOUForm {
    /// Assembles a form from explicit `2N × 2N` drift and diffusion blocks.
    ///
    /// This is the entry point for synthetic models that do not come from a
    /// Lindblad generator; [`build_complex_ou`] is the physical path.
    pub fn from_matrices(
        beta_q: DenseMatrix,
        d_q: DenseMatrix,
        trace_shift: Complex64,
    ) -> Result<Self> {
        if !beta_q.is_square() || !d_q.is_square() || beta_q.rows() != d_q.rows() {
            return Err(Error::Validation {
                field: "beta_q/d_q".into(),
                reason: "drift and diffusion must be square with equal dimension".into(),
            });
        }
        if !beta_q.rows().is_multiple_of(2) || beta_q.rows() == 0 {
            return Err(Error::Validation {
                field: "beta_q".into(),
                reason: "doubled phase-space dimension must be a positive even number".into(),
            });
        }
        let dev = d_q.symmetry_deviation();
        if dev > 1e-12 {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        let n_modes = beta_q.rows() / 2;
        Ok(Self { beta_q, d_q, trace_shift, n_modes })
    }

    pub fn beta_q(&self) -> &DenseMatrix {
        &self.beta_q
    }

    pub fn d_q(&self) -> &DenseMatrix {
        &self.d_q
    }

    /// Scalar shift `½ Tr(𝕃 - ℙ)` of the vectorized generator.
    pub fn trace_shift(&self) -> Complex64 {
        self.trace_shift
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
}

/// Maps a Lindblad model to its Husimi drift/diffusion form.
pub fn build_complex_ou(model: &LindbladModel) -> ComplexOUForm {
    let n = model.n_modes;
    let diss = assemble_dissipation(model);
    let i = c(0.0, 1.0);
    let half = c(0.5, 0.0);

    let lp_half = diss.loss.sub(&diss.pump).scale(half);
    let h_plus = model.h.scale(i).add(&lp_half);
    let h_minus_t = model.h.scale(-i).add(&lp_half).transpose();
    let b12 = model
        .k
        .scale(i)
        .add(&diss.coherence.sub(&diss.coherence.transpose()).scale(half));
    let beta_q = DenseMatrix::from_blocks(&h_plus, &b12, &b12.conj(), &h_minus_t);

    let d11 = model
        .k
        .scale(i)
        .sub(&diss.coherence.add(&diss.coherence.transpose()).scale(half));
    let d_q = DenseMatrix::from_blocks(&d11, &diss.loss, &diss.loss.transpose(), &d11.conj())
        .scale(half);

    let trace_shift = diss.loss.sub(&diss.pump).trace() * 0.5;

    ComplexOUForm { beta_q, d_q, trace_shift, n_modes: n }
}

/// Returns the Husimi Fokker-Planck coefficients `(drift, diffusion)` of a
/// form, in the `∂·(β_q ᾱ ·) + ∂·D_q·∂` convention of the module equation.
pub fn q_pde_coefficients(form: &ComplexOUForm) -> (DenseMatrix, DenseMatrix) {
    (form.beta_q.clone(), form.d_q.clone())
}

/// Normal form of the Husimi generator: the classical machinery over the
/// complex field plus the physical-slice normalization of the stationary
/// Gaussian.
#[derive(Clone, Debug)]
pub struct QNormalForm {
    /// The underlying complex Ornstein-Uhlenbeck normal form in the doubled
    /// coordinates `ᾱ = (α, α*)`.
    pub nf: NormalForm,
    pub n_modes: usize,
    /// Whether the stationary Gaussian was normalizable over the physical
    /// slice (true for physical models; synthetic drift/diffusion pairs may
    /// produce non-integrable doubled Gaussians, in which case the bare
    /// doubled-Gaussian constant is used instead).
    pub slice_normalized: bool,
    norm: Complex64,
}

impl QNormalForm {
    /// The Gaussian divisor actually used by [`q_ness`] and the
    /// eigenfunction/propagator family.
    pub fn effective_norm(&self) -> Complex64 {
        self.norm
    }
}

/// Doubles `α ↦ ᾱ = (α₁…α_N, α₁*…α_N*)`.
fn doubled(alpha: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * alpha.len());
    out.extend_from_slice(alpha);
    out.extend(alpha.iter().map(|z| z.conj()));
    out
}

/// Computes the normal form of the Husimi generator.
///
/// Requires a diagonalizable, stable `β_q`.  The stationary-Gaussian slice
/// normalization `Z = ∫ exp(-ᾱᵀΣ_α∞⁻¹ᾱ/2) d(Re α) d(Im α)` is evaluated by
/// Gauss-Hermite quadrature after an importance transform by the Cholesky
/// factor of the real part of the slice quadratic form; the analytic
/// doubled-Gaussian constant is retained separately for [`q_ness_raw`].
pub fn q_normal_form(form: &ComplexOUForm) -> Result<QNormalForm> {
    let nf = NormalForm::from_complex(&form.beta_q, &form.d_q)?;
    let n = form.n_modes;

    // Slice quadratic form M = Tᵀ Σ∞⁻¹ T, where T maps (Re α, Im α) to
    // (α, α*) mode by mode and Σ∞⁻¹ = Wᵀ W by the whitening contract.
    let mut t = DenseMatrix::zeros(2 * n, 2 * n);
    for m in 0..n {
        t.set(m, m, c(1.0, 0.0));
        t.set(m, n + m, c(0.0, 1.0));
        t.set(n + m, m, c(1.0, 0.0));
        t.set(n + m, n + m, c(0.0, -1.0));
    }
    let sigma_inv = nf.w.w.transpose().matmul(&nf.w.w);
    let m_slice = t.transpose().matmul(&sigma_inv).matmul(&t);

    match slice_normalization(&m_slice) {
        Some(z) => Ok(QNormalForm {
            norm: c(z, 0.0),
            slice_normalized: true,
            n_modes: n,
            nf,
        }),
        None => {
            let norm = nf_gaussian_norm(&nf);
            Ok(QNormalForm { norm, slice_normalized: false, n_modes: n, nf })
        }
    }
}

fn nf_gaussian_norm(nf: &NormalForm) -> Complex64 {
    let dim = nf.dim();
    c((2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0), 0.0)
        * nf.det_sigma_inf().sqrt()
}

/// Gauss-Hermite evaluation of `∫ exp(-sᵀ M s / 2) ds` over the real slice,
/// or `None` when `Re M` is not positive definite (non-integrable Gaussian).
fn slice_normalization(m_slice: &DenseMatrix) -> Option<f64> {
    let dim = m_slice.rows();
    let re = DenseMatrix::from_array(m_slice.array().mapv(|z| c(z.re, 0.0))).ok()?;
    let evals = crate::tensor_linalg::eigenvalues(&re).ok()?;
    let scale = 1.0 + re.max_norm();
    if evals.iter().any(|v| v.re <= 1e-12 * scale) {
        return None;
    }

    // Re M = Rᵀ R with R real upper triangular; importance transform
    // s = R⁻¹ u maps the weight onto the standard Gaussian measure.
    let r = real_upper_cholesky(&re)?;
    let r_inv = r.inverse().ok()?;
    let det_r: f64 = (0..dim).map(|i| r.get(i, i).re).product();

    let (nodes, weights) = gauss_hermite(24).ok()?;
    let mut total = 0.0;
    let mut idx = vec![0usize; dim];
    let order = nodes.len();
    loop {
        let mut weight = 1.0;
        let mut u = vec![c(0.0, 0.0); dim];
        let mut u_sq = 0.0;
        for (axis, &k) in idx.iter().enumerate() {
            weight *= weights[k];
            u[axis] = c(nodes[k], 0.0);
            u_sq += nodes[k] * nodes[k];
        }
        let s = r_inv.matvec(&u);
        let mut quad = c(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                quad += s[i] * m_slice.get(i, j) * s[j];
            }
        }
        // Integrand relative to the Gaussian reference: exp(u²/2 - sᵀMs/2).
        total += weight * ((c(0.5 * u_sq, 0.0) - quad * 0.5).exp()).re;

        let mut pos = 0;
        loop {
            if pos == dim {
                let z = total * (2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0) / det_r;
                return if z.is_finite() && z > 0.0 { Some(z) } else { None };
            }
            idx[pos] += 1;
            if idx[pos] < order {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Plain real Cholesky `A = Rᵀ R` with `R` upper triangular, for symmetric
/// positive definite real input.
fn real_upper_cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut pivot = a.get(i, i).re;
        for k in 0..i {
            pivot -= r.get(k, i).re * r.get(k, i).re;
        }
        if pivot <= 0.0 {
            return None;
        }
        let root = pivot.sqrt();
        r.set(i, i, c(root, 0.0));
        for j in (i + 1)..n {
            let mut s = a.get(i, j).re;
            for k in 0..i {
                s -= r.get(k, i).re * r.get(k, j).re;
            }
            r.set(i, j, c(s / root, 0.0));
        }
    }
    Some(r)
}

/// Stationary Husimi function, normalized over the physical slice:
/// `∫ q_ness d(Re α) d(Im α) = 1` for physical models.
pub fn q_ness(qnf: &QNormalForm, alpha: &[Complex64]) -> f64 {
    assert_eq!(alpha.len(), qnf.n_modes, "alpha must have one entry per mode");
    let xbar = doubled(alpha);
    let xp = qnf.nf.whitened(&xbar);
    qnf.nf.gaussian(&xp, qnf.norm).re
}

/// Stationary doubled Gaussian with the bare constant
/// `(2π)ᴺ √det Σ_α∞` — generally complex, useful only for algebraic
/// cross-checks against the closed normalization formula.
pub fn q_ness_raw(qnf: &QNormalForm, alpha: &[Complex64]) -> Complex64 {
    assert_eq!(alpha.len(), qnf.n_modes, "alpha must have one entry per mode");
    let xbar = doubled(alpha);
    let xp = qnf.nf.whitened(&xbar);
    qnf.nf.gaussian(&xp, nf_gaussian_norm(&qnf.nf))
}

/// Husimi-generator eigenvalue lattice over `2N`-component multi-indices.
pub fn q_spectrum(qnf: &QNormalForm, max_total_order: usize) -> Vec<SpectralMode> {
    spectrum(&qnf.nf, max_total_order)
}

/// Right (density-side) eigenfunction of the Husimi generator at the
/// physical point `ᾱ = (α, α*)`.
pub fn q_right_eigenfunction(
    qnf: &QNormalForm,
    mu: &MultiIndex,
    alpha: &[Complex64],
) -> Result<Complex64> {
    assert_eq!(alpha.len(), qnf.n_modes, "alpha must have one entry per mode");
    qnf.nf.right_eval(mu, &doubled(alpha), qnf.norm)
}

/// Left (observable-side) eigenfunction of the Husimi generator.
pub fn q_left_eigenfunction(
    qnf: &QNormalForm,
    mu: &MultiIndex,
    alpha: &[Complex64],
) -> Result<Complex64> {
    assert_eq!(alpha.len(), qnf.n_modes, "alpha must have one entry per mode");
    qnf.nf.left_eval(mu, &doubled(alpha))
}

/// Deterministic evolution of the doubled covariance,
/// `Σ_α(t) = e^{-β_q t} (Σ₀ - Σ_α∞) e^{-β_qᵀ t} + Σ_α∞`.
pub fn covariance_evolution(
    form: &ComplexOUForm,
    sigma0: &DenseMatrix,
    t: f64,
) -> Result<DenseMatrix> {
    let dim = 2 * form.n_modes;
    if sigma0.rows() != dim || sigma0.cols() != dim {
        return Err(Error::Validation {
            field: "sigma0".into(),
            reason: "initial covariance must be 2N x 2N".into(),
        });
    }
    let dev = sigma0.symmetry_deviation();
    if dev > 1e-12 {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    let sigma_inf = solve_lyapunov(&form.beta_q, &form.d_q)?;
    let decay = matrix_exponential(&form.beta_q, -t)?;
    let transient = decay.matmul(&sigma0.sub(&sigma_inf)).matmul(&decay.transpose());
    Ok(transient.add(&sigma_inf).symmetrized())
}

/// Spectral propagator of the Husimi function for a fixed initial coherent
/// state `|α₀⟩` and time `t`, prepared once and then evaluated at many
/// phase-space points:
///
/// `Q(α, t) = Σ_{|μ| ≤ order} c_μ e^{E_μ t} r_μ(ᾱ)`,  `c_μ = ⟨⟨l_μ | ρ₀⟩⟩`.
///
/// The overlap coefficient is *not* the left polynomial evaluated at
/// `(α₀, α₀*)`: the Husimi function of `|α₀⟩` is a unit-covariance Gaussian,
/// not a point mass, so
///
/// `c_μ = E_ζ[ l_μ(α₀+ζ, (α₀+ζ)*) ]`,   `ζ ∼ e^{-|ζ|²}/π`  per mode,
///
/// equivalently the normally ordered symbol of the left eigenoperator at
/// `α₀`.  Point evaluation would propagate a point mass instead — it solves
/// the same PDE but starts from width `n̄+1` rather than `1`, an `O(n̄)`
/// error that persists at all finite times.  Every retained `l_μ` has total
/// degree ≤ order, so the Gaussian average is computed *exactly* by a tensor
/// Gauss-Hermite rule with `order/2 + 1` nodes per real smoothing axis.
pub struct QPropagator<'a> {
    qnf: &'a QNormalForm,
    max_total_order: usize,
    indices: Vec<MultiIndex>,
    /// `c_μ e^{E_μ t}`, ordered like `indices`.
    weights: Vec<Complex64>,
}

impl<'a> QPropagator<'a> {
    /// Computes the smoothed overlap coefficients of the initial coherent
    /// state and folds in the decay factors `e^{E_μ t}`.
    pub fn prepare(
        qnf: &'a QNormalForm,
        alpha0: &[Complex64],
        t: f64,
        max_total_order: usize,
    ) -> Result<Self> {
        assert_eq!(alpha0.len(), qnf.n_modes, "alpha0 must have one entry per mode");
        let indices = multi_indices_up_to(2 * qnf.n_modes, max_total_order);
        let quad_order = (max_total_order / 2 + 1).max(2);
        let (nodes, node_weights) = gauss_hermite(quad_order)?;

        // Tensor quadrature over the 2N real smoothing axes (Re ζₘ, Im ζₘ
        // with variance ½ each), walked by an odometer over the node digits.
        let axes = 2 * qnf.n_modes;
        let mut weights = vec![c(0.0, 0.0); indices.len()];
        let mut digits = vec![0usize; axes];
        'nodes: loop {
            let mut w = 1.0;
            let mut point = Vec::with_capacity(qnf.n_modes);
            for m in 0..qnf.n_modes {
                let (du, dv) = (digits[2 * m], digits[2 * m + 1]);
                w *= node_weights[du] * node_weights[dv];
                point.push(alpha0[m] + c(nodes[du], nodes[dv]) * FRAC_1_SQRT_2);
            }
            let left = qnf.nf.left_eval_all(&doubled(&point), max_total_order)?;
            for (acc, l) in weights.iter_mut().zip(left.iter()) {
                *acc += l * w;
            }
            let mut axis = 0;
            loop {
                if axis == axes {
                    break 'nodes;
                }
                digits[axis] += 1;
                if digits[axis] < quad_order {
                    break;
                }
                digits[axis] = 0;
                axis += 1;
            }
        }

        for (mu, weight) in indices.iter().zip(weights.iter_mut()) {
            let energy: Complex64 = mu
                .as_slice()
                .iter()
                .zip(qnf.nf.delta.iter())
                .map(|(&m, &d)| -d * m as f64)
                .sum();
            *weight *= (energy * t).exp();
        }
        Ok(Self { qnf, max_total_order, indices, weights })
    }

    /// Evaluates the propagated Husimi function at `α`.
    pub fn at(&self, alpha: &[Complex64]) -> Result<Complex64> {
        assert_eq!(alpha.len(), self.qnf.n_modes, "alpha must have one entry per mode");
        self.qnf.nf.weighted_right_eval(
            &self.indices,
            &self.weights,
            self.max_total_order,
            &doubled(alpha),
            self.qnf.norm,
        )
    }
}

/// One-shot form of [`QPropagator`]: prepares the coefficient table for
/// `(α₀, t)` and evaluates at a single point.  Loops over many target points
/// should prepare once and reuse the plan instead.
pub fn propagate_q_spectral(
    qnf: &QNormalForm,
    alpha0: &[Complex64],
    t: f64,
    alpha: &[Complex64],
    max_total_order: usize,
) -> Result<Complex64> {
    QPropagator::prepare(qnf, alpha0, t, max_total_order)?.at(alpha)
}

/// Closed-form propagation for single-mode models whose normal frame
/// satisfies `W_q P_q = 𝟙`.  For those models the bilinear eigenfunction sum
/// telescopes into a product of two Mehler kernels in the whitened
/// coordinates; averaging that product over the initial coherent state's
/// unit Gaussian — the same smoothing [`QPropagator`] performs by
/// quadrature, here carried out analytically — leaves a ratio of Gaussians:
///
/// `Q(α, t) = Q_ness(ᾱ) · ∏ₜ (1-ρₜ²)^{-1/2} e^{-gₜ(x'ₜ² + y'ₜ²) + hₜ y'ₜ} · I`
///
/// with `ρₜ = e^{-δₜt}`, `gₜ = ρₜ²/(2(1-ρₜ²))`, `hₜ = ρₜ x'ₜ/(1-ρₜ²)`,
/// `x' = W_q ᾱ`, `y' = W_q ᾱ₀`, and the exact complex-Gaussian average of
/// the smoothing cross terms
///
/// `I = Δ^{-1/2} exp[((1-c)de + ae² + bd²)/Δ]`,  `Δ = (1-c)² - 4ab`,
///
/// where, summing over the two whitened rows `Wₜ₁, Wₜ₂` with
/// `λₜ = hₜ - 2gₜy'ₜ`:  `a = -Σ gₜWₜ₁²`, `b = -Σ gₜWₜ₂²`,
/// `c = -2Σ gₜWₜ₁Wₜ₂`, `d = Σ λₜWₜ₁`, `e = Σ λₜWₜ₂`.
///
/// Models outside the `W_q P_q = 𝟙` family, and times with
/// `|e^{-δt}| ≥ 1` where the kernels degenerate, are rejected with
/// [`Error::PreconditionNotMet`].
pub fn propagate_q_mehler(
    qnf: &QNormalForm,
    alpha0: Complex64,
    t: f64,
    alpha: Complex64,
) -> Result<Complex64> {
    if qnf.n_modes != 1 {
        return Err(Error::PreconditionNotMet {
            reason: "factorized propagation is defined for single-mode models".into(),
        });
    }
    let wp = qnf.nf.w.w.matmul(&qnf.nf.p);
    let dev = wp.sub(&DenseMatrix::identity(2)).max_norm();
    if dev > 1e-10 {
        return Err(Error::PreconditionNotMet {
            reason: format!(
                "factorized propagation needs W_q P_q = identity (deviation {dev:.3e})"
            ),
        });
    }
    let xp = qnf.nf.whitened(&doubled(&[alpha]));
    let y0 = qnf.nf.whitened(&doubled(&[alpha0]));

    let one = c(1.0, 0.0);
    let mut prefactor = one;
    let (mut qa, mut qb, mut qc) = (c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    let (mut qd, mut qe) = (c(0.0, 0.0), c(0.0, 0.0));
    for row in 0..2 {
        let rho = (-qnf.nf.delta[row] * t).exp();
        if rho.norm() >= 1.0 - 1e-12 {
            return Err(Error::PreconditionNotMet {
                reason: format!(
                    "factorized propagation needs |e^{{-δt}}| < 1 (got {:.6})",
                    rho.norm()
                ),
            });
        }
        let denom = one - rho * rho;
        let g = rho * rho / (denom * 2.0);
        let h = rho * xp[row] / denom;
        prefactor *= (h * y0[row] - g * (xp[row] * xp[row] + y0[row] * y0[row])).exp()
            / denom.sqrt();
        let w1 = qnf.nf.w.w.get(row, 0);
        let w2 = qnf.nf.w.w.get(row, 1);
        let lam = h - g * y0[row] * 2.0;
        qa -= g * w1 * w1;
        qb -= g * w2 * w2;
        qc -= g * w1 * w2 * 2.0;
        qd += lam * w1;
        qe += lam * w2;
    }
    let disc = (one - qc) * (one - qc) - qa * qb * 4.0;
    let smoothing = ((one - qc) * qd * qe + qa * qe * qe + qb * qd * qd) / disc;
    Ok(qnf.nf.gaussian(&xp, qnf.norm) * prefactor * smoothing.exp() / disc.sqrt())
}

/// Phase-space representation of a single driven-damped optical mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseSpaceRepresentation {
    /// Glauber-Sudarshan (normally ordered) distribution.
    GlauberP,
    /// Husimi (anti-normally ordered) distribution.
    HusimiQ,
    /// Anti-normally ordered characteristic function.
    AntinormalCharacteristic,
}

/// PDE coefficients of one representation of the optical master equation
/// `∂ₜρ = γ↓ 𝒟[a] ρ + γ↑ 𝒟[a†] ρ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticalCoefficients {
    pub representation: PhaseSpaceRepresentation,
    /// Relaxation rate `κ = (γ↓ - γ↑)/2`.
    pub kappa: f64,
    /// Stationary occupation `n̄ = γ↑ / (γ↓ - γ↑)`.
    pub nbar: f64,
    /// Coefficient of the radial drift term (`∂_α α + ∂_{α*} α*` for the
    /// distributions, `-(η ∂_η + η* ∂_{η*})` sign convention folded in for
    /// the characteristic function).
    pub drift: f64,
    /// Coefficient of `∂_α ∂_{α*}` (distributions only).
    pub diffusion: Option<f64>,
    /// Coefficient of the multiplicative `η η*` term (characteristic
    /// function only).
    pub multiplier: Option<f64>,
}

/// Builds the two-bath Lindblad model of a single optical mode with loss
/// rate `γ↓` and pump rate `γ↑`.
pub fn optical_model(gamma_down: f64, gamma_up: f64) -> Result<LindbladModel> {
    if !(gamma_down >= 0.0 && gamma_up >= 0.0) {
        return Err(Error::Validation {
            field: "gamma".into(),
            reason: "rates must be non-negative".into(),
        });
    }
    let zero = DenseMatrix::zeros(1, 1);
    LindbladModel::new(
        zero.clone(),
        zero,
        vec![
            BathCoupling { loss: vec![c(gamma_down.sqrt(), 0.0)], pump: vec![c(0.0, 0.0)] },
            BathCoupling { loss: vec![c(0.0, 0.0)], pump: vec![c(gamma_up.sqrt(), 0.0)] },
        ],
    )
}

/// PDE coefficients of the optical master equation in the requested
/// phase-space representation: the ordering ladder
///
/// * Glauber `P`: drift `κ`, diffusion `γ↑`,
/// * Husimi `Q`: drift `κ`, diffusion `γ↓`,
/// * anti-normal characteristic function: drift `-κ`, multiplier `-γ↑`.
///
/// The values are emitted algebraically (exact in floating point); that the
/// Husimi row agrees with the general assembly of [`build_complex_ou`] is a
/// separate cross-check (it can only hold to roundoff, since the assembly
/// path goes through `√γ·√γ`).  Requires `γ↓ > γ↑ ≥ 0` so that the
/// stationary state exists.
pub fn optical_representation(
    gamma_down: f64,
    gamma_up: f64,
    representation: PhaseSpaceRepresentation,
) -> Result<OpticalCoefficients> {
    if gamma_up < 0.0 {
        return Err(Error::Validation {
            field: "gamma_up".into(),
            reason: "pump rate must be non-negative".into(),
        });
    }
    let kappa = 0.5 * (gamma_down - gamma_up);
    if kappa <= 0.0 {
        return Err(Error::Unstable { eigenvalue: c(kappa, 0.0) });
    }
    let nbar = gamma_up / (gamma_down - gamma_up);
    let coefficients = match representation {
        PhaseSpaceRepresentation::GlauberP => OpticalCoefficients {
            representation,
            kappa,
            nbar,
            drift: kappa,
            diffusion: Some(gamma_up),
            multiplier: None,
        },
        PhaseSpaceRepresentation::HusimiQ => OpticalCoefficients {
            representation,
            kappa,
            nbar,
            drift: kappa,
            diffusion: Some(gamma_down),
            multiplier: None,
        },
        PhaseSpaceRepresentation::AntinormalCharacteristic => OpticalCoefficients {
            representation,
            kappa,
            nbar,
            drift: -kappa,
            diffusion: None,
            multiplier: Some(-gamma_up),
        },
    };
    Ok(coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite_mehler::{factorial_f64, generalized_hermite};
    use crate::ou_core::quadratic_symbol;
    use approx::assert_abs_diff_eq;

    const GAMMA_DOWN: f64 = 2.4;
    const GAMMA_UP: f64 = 0.4;

    fn optical_form() -> ComplexOUForm {
        build_complex_ou(&optical_model(GAMMA_DOWN, GAMMA_UP).unwrap())
    }

    #[test]
    fn model_rejects_non_hermitian_hamiltonian() {
        let h = DenseMatrix::from_rows(&[vec![c(0.0, 1.0)]]).unwrap();
        let k = DenseMatrix::zeros(1, 1);
        assert!(matches!(LindbladModel::new(h, k, vec![]), Err(Error::Validation { .. })));
    }

    #[test]
    fn dissipation_matrices_for_separate_and_coherent_baths() {
        // Separate loss/pump baths: 𝕃 = γ↓, ℙ = γ↑, ℂ = 0.
        let model = optical_model(GAMMA_DOWN, GAMMA_UP).unwrap();
        let diss = assemble_dissipation(&model);
        assert_abs_diff_eq!(diss.loss.get(0, 0).re, GAMMA_DOWN, epsilon = 1e-14);
        assert_abs_diff_eq!(diss.pump.get(0, 0).re, GAMMA_UP, epsilon = 1e-14);
        assert_eq!(diss.coherence.get(0, 0), c(0.0, 0.0));

        // One bath coupling to both ladders: ℂ₀₀ = l₀* p₀*.
        let l = c(0.8, -0.3);
        let p = c(0.2, 0.5);
        let model = LindbladModel::new(
            DenseMatrix::zeros(1, 1),
            DenseMatrix::zeros(1, 1),
            vec![BathCoupling { loss: vec![l], pump: vec![p] }],
        )
        .unwrap();
        let diss = assemble_dissipation(&model);
        let expected = l.conj() * p.conj();
        assert_abs_diff_eq!(diss.coherence.get(0, 0).re, expected.re, epsilon = 1e-14);
        assert_abs_diff_eq!(diss.coherence.get(0, 0).im, expected.im, epsilon = 1e-14);
        assert_abs_diff_eq!(diss.loss.get(0, 0).re, l.norm_sqr(), epsilon = 1e-14);
        assert_abs_diff_eq!(diss.pump.get(0, 0).re, p.norm_sqr(), epsilon = 1e-14);
    }

    #[test]
    fn optical_form_has_isotropic_drift_and_swap_diffusion() {
        let form = optical_form();
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        assert_abs_diff_eq!(form.beta_q().get(0, 0).re, kappa, epsilon = 1e-14);
        assert_abs_diff_eq!(form.beta_q().get(1, 1).re, kappa, epsilon = 1e-14);
        assert_eq!(form.beta_q().get(0, 1), c(0.0, 0.0));
        assert_abs_diff_eq!(form.d_q().get(0, 1).re, 0.5 * GAMMA_DOWN, epsilon = 1e-14);
        assert_eq!(form.d_q().get(0, 0), c(0.0, 0.0));
        assert_abs_diff_eq!(form.trace_shift().re, kappa, epsilon = 1e-14);
    }

    #[test]
    fn husimi_generator_satisfies_swap_conjugation_symmetry() {
        // Physical forms obey X β_q* X = β_q and X D_q* X = D_q with X the
        // block swap of (α, α*): evaluate on a model with every ingredient.
        let h = DenseMatrix::from_rows(&[vec![c(0.7, 0.0)]]).unwrap();
        let k = DenseMatrix::from_rows(&[vec![c(0.3, 0.2)]]).unwrap();
        let model = LindbladModel::new(
            h,
            k,
            vec![BathCoupling { loss: vec![c(1.1, -0.4)], pump: vec![c(0.5, 0.3)] }],
        )
        .unwrap();
        let form = build_complex_ou(&model);
        let x = DenseMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        for m in [form.beta_q(), form.d_q()] {
            let swapped = x.matmul(&m.conj()).matmul(&x);
            assert!(swapped.sub(m).max_norm() <= 1e-14, "swap symmetry violated");
        }
    }

    #[test]
    fn quadratic_symbol_is_normalized_by_the_adjoint_frame() {
        // S_q = [[0, β_qᵀ], [β_q, 2D_q]] and V⁺ bring the generator to the
        // ladder form +[[0, Δ], [Δ, 0]].
        let form = optical_form();
        let qnf = q_normal_form(&form).unwrap();
        let s_q = quadratic_symbol(form.beta_q(), form.d_q(), crate::ou_core::Direction::Adjoint);
        let v_inv = qnf.nf.v_adjoint.inverse().unwrap();
        let congruent = v_inv.transpose().matmul(&s_q).matmul(&v_inv);
        let mut ladder = DenseMatrix::zeros(4, 4);
        for i in 0..2 {
            ladder.set(i, 2 + i, qnf.nf.delta[i]);
            ladder.set(2 + i, i, qnf.nf.delta[i]);
        }
        let dev = congruent.sub(&ladder).max_norm();
        assert!(dev <= 1e-10, "congruence deviation {dev}");
    }

    #[test]
    fn stationary_covariance_is_swap_form_with_thermal_weight() {
        let qnf = q_normal_form(&optical_form()).unwrap();
        let b = GAMMA_DOWN / (GAMMA_DOWN - GAMMA_UP); // n̄ + 1
        assert_abs_diff_eq!(qnf.nf.sigma_inf.get(0, 1).re, b, epsilon = 1e-12);
        assert_abs_diff_eq!(qnf.nf.sigma_inf.get(0, 0).re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qnf.nf.sigma_inf.get(1, 1).re, 0.0, epsilon = 1e-12);
        // Both drift eigenvalues are the relaxation rate κ.
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        assert_abs_diff_eq!(qnf.nf.delta[0].re, kappa, epsilon = 1e-12);
        assert_abs_diff_eq!(qnf.nf.delta[1].re, kappa, epsilon = 1e-12);
    }

    #[test]
    fn stationary_husimi_is_the_thermal_distribution() {
        // q_ness must reproduce exp(-|α|²/(n̄+1)) / (π (n̄+1)) exactly.
        let qnf = q_normal_form(&optical_form()).unwrap();
        assert!(qnf.slice_normalized);
        let b = GAMMA_DOWN / (GAMMA_DOWN - GAMMA_UP);
        for alpha in [c(0.0, 0.0), c(0.7, -0.4), c(-1.5, 0.9)] {
            let expected = (-alpha.norm_sqr() / b).exp() / (std::f64::consts::PI * b);
            assert_abs_diff_eq!(q_ness(&qnf, &[alpha]), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn raw_doubled_gaussian_keeps_the_closed_form_constant() {
        // det Σ_α∞ = -b² puts the bare constant at ±2πib, so the raw value
        // is ∓i/2 times the physical one — the square root sits exactly on
        // its branch cut (the sign follows the roundoff of the determinant's
        // imaginary part), which is precisely why the physical normalization
        // is computed over the slice instead.
        let qnf = q_normal_form(&optical_form()).unwrap();
        let alpha = c(0.4, 0.3);
        let raw = q_ness_raw(&qnf, &[alpha]);
        let physical = q_ness(&qnf, &[alpha]);
        assert_abs_diff_eq!(raw.im.abs(), 0.5 * physical, epsilon = 1e-12);
        assert_abs_diff_eq!(raw.re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_is_the_kappa_ladder() {
        let qnf = q_normal_form(&optical_form()).unwrap();
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        let modes = q_spectrum(&qnf, 2);
        let mut rates: Vec<f64> = modes.iter().map(|m| m.eigenvalue.re / kappa).collect();
        rates.sort_by(f64::total_cmp);
        let expected = [-2.0, -2.0, -2.0, -1.0, -1.0, 0.0];
        for (got, want) in rates.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_mode_eigenfunctions_match_the_two_variable_hermite_form() {
        // Independent route: r_{(m,n)} = Q_ness ℋ_{m,n}((W P)ᵀ; α'₁, α'₂)
        // / √(m! n!) via the closed two-variable Hermite sum.
        let qnf = q_normal_form(&optical_form()).unwrap();
        let alpha = c(0.6, -0.35);
        let xp = qnf.nf.whitened(&[alpha, alpha.conj()]);
        let wp_t = qnf.nf.w.w.matmul(&qnf.nf.p).transpose();
        for (m, n) in [(0usize, 0usize), (1, 0), (1, 1), (2, 1), (3, 2)] {
            let mu = MultiIndex::new(vec![m, n]);
            let direct = q_right_eigenfunction(&qnf, &mu, &[alpha]).unwrap();
            let hermite = generalized_hermite(&wp_t, m, n, xp[0], xp[1]).unwrap();
            let gauss = q_ness(&qnf, &[alpha]);
            let expected = hermite * gauss / (factorial_f64(m) * factorial_f64(n)).sqrt();
            assert_abs_diff_eq!(direct.re, expected.re, epsilon = 1e-12);
            assert_abs_diff_eq!(direct.im, expected.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn covariance_evolution_relaxes_vacuum_to_thermal() {
        let form = optical_form();
        let vacuum = DenseMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        let b = GAMMA_DOWN / (GAMMA_DOWN - GAMMA_UP);
        for t in [0.0, 0.3, 1.7] {
            let sigma = covariance_evolution(&form, &vacuum, t).unwrap();
            let expected = b + (1.0 - b) * (-2.0 * kappa * t).exp();
            assert_abs_diff_eq!(sigma.get(0, 1).re, expected, epsilon = 1e-11);
            assert_abs_diff_eq!(sigma.get(0, 0).re, 0.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn factorized_propagation_rejects_mixing_frames() {
        // The optical model whitens with a genuinely mixing W, so the
        // factorized route must refuse it.
        let qnf = q_normal_form(&optical_form()).unwrap();
        assert!(matches!(
            propagate_q_mehler(&qnf, c(0.5, 0.0), 0.4, c(0.1, 0.2)),
            Err(Error::PreconditionNotMet { .. })
        ));
    }

    #[test]
    fn factorized_and_spectral_propagation_agree_on_decoupled_model() {
        // β_q = D_q = b𝟙 gives Σ∞ = 𝟙 and P = W = 𝟙 exactly, the family for
        // which the double Hermite sum telescopes into bilinear kernels.
        let b = 1.3;
        let eye_scaled = DenseMatrix::identity(2).scale(c(b, 0.0));
        let form =
            ComplexOUForm::from_matrices(eye_scaled.clone(), eye_scaled, c(0.0, 0.0)).unwrap();
        let qnf = q_normal_form(&form).unwrap();
        assert!(!qnf.slice_normalized, "synthetic Gaussian is not slice-integrable");
        let wp_dev = qnf.nf.w.w.matmul(&qnf.nf.p).sub(&DenseMatrix::identity(2)).max_norm();
        assert!(wp_dev <= 1e-14, "decoupled model must have W P = identity");

        let alpha0 = c(0.45, -0.2);
        let t = 0.9;
        // The smoothed coefficients of this model grow like √2^|μ| (its
        // stationary covariance is *below* the coherent width), so the
        // spectral side needs order 28 for the tail to clear 1e-9.
        for alpha in [c(0.3, 0.2), c(-0.5, 0.1), c(0.0, 0.0)] {
            let mehler = propagate_q_mehler(&qnf, alpha0, t, alpha).unwrap();
            let spectral = propagate_q_spectral(&qnf, &[alpha0], t, &[alpha], 28).unwrap();
            assert_abs_diff_eq!(mehler.re, spectral.re, epsilon = 1e-9);
            assert_abs_diff_eq!(mehler.im, spectral.im, epsilon = 1e-9);
        }
    }

    #[test]
    fn prepared_plan_matches_one_shot_propagation() {
        let qnf = q_normal_form(&optical_form()).unwrap();
        let alpha0 = [c(1.0, 0.5)];
        let t = 0.7;
        let plan = QPropagator::prepare(&qnf, &alpha0, t, 10).unwrap();
        for alpha in [c(0.4, 0.1), c(-0.3, 0.8)] {
            let one_shot = propagate_q_spectral(&qnf, &alpha0, t, &[alpha], 10).unwrap();
            let planned = plan.at(&[alpha]).unwrap();
            assert_abs_diff_eq!(one_shot.re, planned.re, epsilon = 1e-15);
            assert_abs_diff_eq!(one_shot.im, planned.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn coherent_state_under_pure_loss_stays_a_unit_gaussian() {
        // γ↑ = 0 keeps |α₀⟩ coherent with amplitude α₀e^{-κt}, so the Husimi
        // function is exp(-|α - α₀e^{-κt}|²)/π at every time.
        let form = build_complex_ou(&optical_model(2.0, 0.0).unwrap());
        let qnf = q_normal_form(&form).unwrap();
        let kappa = 1.0f64;
        let alpha0 = c(0.8, -0.3);
        for t in [0.2, 0.9] {
            let center = alpha0 * (-kappa * t).exp();
            let plan = QPropagator::prepare(&qnf, &[alpha0], t, 24).unwrap();
            for alpha in [c(0.5, -0.2), c(0.0, 0.0), c(1.1, 0.4)] {
                let expected = (-(alpha - center).norm_sqr()).exp() / std::f64::consts::PI;
                let got = plan.at(&[alpha]).unwrap();
                assert_abs_diff_eq!(got.re, expected, epsilon = 1e-10);
                assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_relaxation_follows_the_width_law() {
        // A coherent state in a thermal bath stays Gaussian with center
        // α₀e^{-κt} and Husimi width s(t) = 1 + n̄(1 - e^{-2κt}).
        let qnf = q_normal_form(&optical_form()).unwrap();
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        let nbar = GAMMA_UP / (GAMMA_DOWN - GAMMA_UP);
        let alpha0 = c(1.0, 0.5);
        for t in [0.35, 1.0] {
            let s = 1.0 + nbar * (1.0 - (-2.0 * kappa * t).exp());
            let center = alpha0 * (-kappa * t).exp();
            let plan = QPropagator::prepare(&qnf, &[alpha0], t, 26).unwrap();
            for alpha in [c(0.6, 0.3), c(0.0, 0.0), c(-0.4, 0.9)] {
                let expected =
                    (-(alpha - center).norm_sqr() / s).exp() / (std::f64::consts::PI * s);
                let got = plan.at(&[alpha]).unwrap();
                assert_abs_diff_eq!(got.re, expected, epsilon = 1e-9);
                assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn optical_coefficients_follow_the_ordering_ladder() {
        let p = optical_representation(GAMMA_DOWN, GAMMA_UP, PhaseSpaceRepresentation::GlauberP)
            .unwrap();
        let q = optical_representation(GAMMA_DOWN, GAMMA_UP, PhaseSpaceRepresentation::HusimiQ)
            .unwrap();
        let chi = optical_representation(
            GAMMA_DOWN,
            GAMMA_UP,
            PhaseSpaceRepresentation::AntinormalCharacteristic,
        )
        .unwrap();
        let kappa = 0.5 * (GAMMA_DOWN - GAMMA_UP);
        assert_eq!(p.drift, kappa);
        assert_eq!(p.diffusion, Some(GAMMA_UP));
        assert_eq!(q.drift, kappa);
        assert_eq!(q.diffusion, Some(GAMMA_DOWN));
        assert_eq!(chi.drift, -kappa);
        assert_eq!(chi.multiplier, Some(-GAMMA_UP));
        assert_abs_diff_eq!(p.nbar, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn husimi_table_row_agrees_with_the_generator_assembly() {
        // Independent route: read the same coefficients off β_q and D_q as
        // assembled from the raw couplings.  Exact equality is impossible
        // (√γ·√γ costs an ulp), so compare to 1e-12.
        let q = optical_representation(GAMMA_DOWN, GAMMA_UP, PhaseSpaceRepresentation::HusimiQ)
            .unwrap();
        let form = optical_form();
        let assembled_drift = form.beta_q().get(0, 0).re;
        let assembled_diffusion = form.d_q().get(0, 1).re + form.d_q().get(1, 0).re;
        assert_abs_diff_eq!(assembled_drift, q.drift, epsilon = 1e-12);
        assert_abs_diff_eq!(assembled_diffusion, q.diffusion.unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn optical_coefficients_require_net_loss() {
        assert!(matches!(
            optical_representation(0.4, 2.4, PhaseSpaceRepresentation::HusimiQ),
            Err(Error::Unstable { .. })
        ));
    }
}
