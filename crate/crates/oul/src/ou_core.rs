//! Classical multidimensional Ornstein-Uhlenbeck processes and the spectral
//! theory of their Fokker-Planck generators.
//!
//! The process is `dx = -β x dt + σ dW` with drift matrix `β` (stable: all
//! eigenvalue real parts positive) and diffusion `D = σσᵀ/2`.  Its
//! probability density obeys the forward equation
//!
//! `∂ₜ P = Σᵢⱼ ∂ᵢ (βᵢⱼ xⱼ P) + Σᵢⱼ Dᵢⱼ ∂ᵢ∂ⱼ P`,
//!
//! while observables evolve under the adjoint generator
//! `L⁺ = -Σᵢⱼ βᵢⱼ xⱼ ∂ᵢ + Σᵢⱼ Dᵢⱼ ∂ᵢ∂ⱼ`.
//!
//! Packing gradient and coordinate into a length-`2n` symbol vector turns
//! either generator into a quadratic form `S∓`; a block-triangular,
//! symplectic change of frame `V` built from the drift eigenbasis `β = P Δ
//! P⁻¹` and the stationary covariance `Σ∞` (solving `β Σ∞ + Σ∞ βᵀ = 2D`)
//! brings that form to the normal ladder shape with decay rates `Δ`.  In the
//! normal frame the spectrum is the lattice `E_μ = -Σᵢ μᵢ δᵢ` over occupation
//! multi-indices `μ`, and the eigenfunctions are finite Hermite-polynomial
//! sums in the whitened coordinates `x' = W x`, where `Wᵀ W = Σ∞⁻¹`:
//!
//! * right (density-side) eigenfunctions carry the stationary Gaussian as a
//!   prefactor and mix coordinates through powers of `(W P)ᵀ`;
//! * left (observable-side) eigenfunctions are plain polynomials mixing
//!   through powers of `P⁻¹ W⁻¹`.
//!
//! The two families are biorthonormal, `∫ lₘ(x) rₙ(x) dx = δₘₙ`, and resum
//! the transition density `P(x, t | x₀) = Σ_μ e^{E_μ t} r_μ(x) l_μ(x₀)`.
//!
//! Everything in this module is field-agnostic: the same machinery is reused
//! verbatim over the complex field by the quadratic-Lindblad layer, which is
//! why whitened coordinates and Gaussian normalizations are kept complex
//! internally even though the public classical API speaks `f64`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermite_mehler::{
    compositions, factorial_f64, hermite_table, multi_indices_up_to, multinomial_f64,
    MultiIndex, MAX_HERMITE_ORDER,
};
use crate::tensor_linalg::{
    c, eigendecompose, matrix_exponential, solve_lyapunov, whiten, DenseMatrix,
    WhiteningFactor, STABILITY_MARGIN,
};

/// Which generator a quadratic form or stencil represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Forward (Fokker-Planck, density-side) generator.
    Forward,
    /// Adjoint (observable-side) generator.
    Adjoint,
}

/// A classical Ornstein-Uhlenbeck model `dx = -β x dt + σ dW`.
///
/// Stored as the pair `(β, D)` with `D = σσᵀ/2` symmetric positive
/// semi-definite; the noise factor `σ` is kept when the model was built from
/// one so that path sampling can use it directly.
#[derive(Clone, Debug, PartialEq)]
pub struct OUModel {
    beta: DenseMatrix,
    diffusion: DenseMatrix,
    noise: Option<DenseMatrix>,
    dim: usize,
}

impl OUModel {
    /// Builds a model from real drift and diffusion matrices.
    ///
    /// `diffusion` must be symmetric positive semi-definite; stability of
    /// `beta` is *not* required here (unstable models can still be sampled
    /// over finite horizons) and is checked by the spectral constructors.
    pub fn from_drift_diffusion(beta: &[Vec<f64>], diffusion: &[Vec<f64>]) -> Result<Self> {
        let beta = DenseMatrix::from_real_rows(beta)?;
        let diffusion = DenseMatrix::from_real_rows(diffusion)?;
        Self::validate(beta, diffusion, None)
    }

    /// Builds a model from a drift matrix and a noise factor `σ` (`n × m`),
    /// with `D = σσᵀ/2`.
    pub fn from_drift_noise(beta: &[Vec<f64>], sigma: &[Vec<f64>]) -> Result<Self> {
        let beta = DenseMatrix::from_real_rows(beta)?;
        let noise = DenseMatrix::from_real_rows(sigma)?;
        if noise.rows() != beta.rows() {
            return Err(Error::Validation {
                field: "sigma".into(),
                reason: "noise factor must have one row per state dimension".into(),
            });
        }
        let diffusion = noise.matmul(&noise.transpose()).scale(c(0.5, 0.0));
        Self::validate(beta, diffusion, Some(noise))
    }

    fn validate(
        beta: DenseMatrix,
        diffusion: DenseMatrix,
        noise: Option<DenseMatrix>,
    ) -> Result<Self> {
        if !beta.is_square() {
            return Err(Error::Validation {
                field: "beta".into(),
                reason: "drift matrix must be square".into(),
            });
        }
        let dim = beta.rows();
        if diffusion.rows() != dim || diffusion.cols() != dim {
            return Err(Error::Validation {
                field: "diffusion".into(),
                reason: "diffusion matrix must match the drift dimension".into(),
            });
        }
        let dev = diffusion.symmetry_deviation();
        if dev > 1e-12 {
            return Err(Error::NotSymmetric { deviation: dev });
        }
        // Positive semi-definiteness via the symmetric eigenvalues of the
        // real part (the matrix is real by construction here).
        let sym = diffusion.symmetrized();
        let evals = crate::tensor_linalg::eigenvalues(&sym)?;
        let scale = 1.0 + sym.max_norm();
        for v in evals {
            if v.re < -1e-12 * scale {
                return Err(Error::Validation {
                    field: "diffusion".into(),
                    reason: format!("not positive semi-definite (eigenvalue {:.3e})", v.re),
                });
            }
        }
        Ok(Self { beta, diffusion, noise, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> &DenseMatrix {
        &self.beta
    }

    pub fn diffusion(&self) -> &DenseMatrix {
        &self.diffusion
    }

    /// The noise factor `σ`, when the model was constructed from one.
    pub fn noise(&self) -> Option<&DenseMatrix> {
        self.noise.as_ref()
    }
}

/// Quadratic symbol form of the generator in the doubled `(∂, x)` variables:
///
/// * forward:  `S₋ = [[0, -βᵀ], [-β, 2D]]`
/// * adjoint:  `S₊ = [[0, +βᵀ], [+β, 2D]]`
///
/// Both are symmetric `2n × 2n` matrices.
pub fn build_quadratic_form(model: &OUModel, direction: Direction) -> DenseMatrix {
    quadratic_symbol(&model.beta, &model.diffusion, direction)
}

/// Matrix-level form of [`build_quadratic_form`], for generators whose drift
/// and diffusion are complex (the Husimi layer).
pub fn quadratic_symbol(
    beta: &DenseMatrix,
    diffusion: &DenseMatrix,
    direction: Direction,
) -> DenseMatrix {
    let n = beta.rows();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Adjoint => 1.0,
    };
    let bt = beta.transpose().scale(c(sign, 0.0));
    let b = beta.scale(c(sign, 0.0));
    let two_d = diffusion.scale(c(2.0, 0.0));
    DenseMatrix::from_blocks(&DenseMatrix::zeros(n, n), &bt, &b, &two_d)
}

/// One eigenvalue of the generator together with its occupation label.
#[derive(Clone, Debug)]
pub struct SpectralMode {
    pub index: MultiIndex,
    pub eigenvalue: Complex64,
}

/// Normal form of a (possibly complex) Ornstein-Uhlenbeck generator.
///
/// Holds the sorted drift eigensystem `β = P Δ P⁻¹`, the stationary
/// covariance `Σ∞`, the whitening factor `W` with `Wᵀ W = Σ∞⁻¹`, and the
/// block-triangular symplectic frames
///
/// `V = [[P⁻¹, -P⁻¹ Σ∞], [0, Pᵀ]]`,   `V⁺ = [[P⁻¹, +P⁻¹ Σ∞], [0, Pᵀ]]`
///
/// that normalize the forward and adjoint quadratic forms respectively.
/// The cached mixing matrices `(W P)ᵀ` and `P⁻¹ W⁻¹` drive the right/left
/// eigenfunction sums.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub(crate) dim: usize,
    /// Drift eigenvalues, ascending by `(Re, Im)`.
    pub delta: Vec<Complex64>,
    /// Drift eigenvectors as columns, ordered like `delta`.
    pub p: DenseMatrix,
    /// Inverse eigenvector matrix.
    pub p_inv: DenseMatrix,
    /// Condition number of `p`.
    pub condition: f64,
    /// Stationary covariance `Σ∞`.
    pub sigma_inf: DenseMatrix,
    /// Whitening factor of `Σ∞⁻¹`.
    pub w: WhiteningFactor,
    /// Forward normalizing frame.
    pub v: DenseMatrix,
    /// Adjoint normalizing frame.
    pub v_adjoint: DenseMatrix,
    /// Right-eigenfunction mixing matrix, indexed `[mode][coordinate]`:
    /// `a_right[i][t] = (W P)[t][i]`.
    pub(crate) a_right: DenseMatrix,
    /// Left-eigenfunction mixing matrix `P⁻¹ W⁻¹`, indexed the same way.
    pub(crate) a_left: DenseMatrix,
    /// Determinant of `Σ∞`.
    pub(crate) det_sigma_inf: Complex64,
    /// Divisor `Z` of the stationary Gaussian `exp(-x'ᵀx'/2) / Z`; the
    /// analytic value `(2π)^{n/2} √det Σ∞` unless a caller overrides it
    /// (the Husimi layer replaces it with a physical-slice normalization).
    pub(crate) gaussian_norm: Complex64,
}

impl NormalForm {
    /// Shared constructor over the complex field.  Classical callers come
    /// through [`normal_form`]; the quadratic-Lindblad layer calls this
    /// directly with its complex drift and diffusion.
    pub(crate) fn from_complex(beta: &DenseMatrix, d: &DenseMatrix) -> Result<Self> {
        let eig = eigendecompose(beta)?;
        for &v in &eig.delta {
            if v.re <= STABILITY_MARGIN {
                return Err(Error::Unstable { eigenvalue: v });
            }
        }
        let sigma_inf = solve_lyapunov(beta, d)?;
        let w = whiten(&sigma_inf)?;
        let w_inv = w.w.inverse()?;

        let dim = beta.rows();
        let minus_ps = eig.p_inv.matmul(&sigma_inf).scale(c(-1.0, 0.0));
        let plus_ps = eig.p_inv.matmul(&sigma_inf);
        let zero = DenseMatrix::zeros(dim, dim);
        let pt = eig.p.transpose();
        let v = DenseMatrix::from_blocks(&eig.p_inv, &minus_ps, &zero, &pt);
        let v_adjoint = DenseMatrix::from_blocks(&eig.p_inv, &plus_ps, &zero, &pt);

        let a_right = w.w.matmul(&eig.p).transpose();
        let a_left = eig.p_inv.matmul(&w_inv);
        let det_sigma_inf = sigma_inf.determinant()?;
        let gaussian_norm =
            c((2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0), 0.0) * det_sigma_inf.sqrt();

        Ok(Self {
            dim,
            delta: eig.delta,
            p: eig.p,
            p_inv: eig.p_inv,
            condition: eig.condition,
            sigma_inf,
            w,
            v,
            v_adjoint,

            a_right,
            a_left,
            det_sigma_inf,
            gaussian_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn det_sigma_inf(&self) -> Complex64 {
        self.det_sigma_inf
    }

    /// Whitened coordinates `x' = W x`.
    pub(crate) fn whitened(&self, xbar: &[Complex64]) -> Vec<Complex64> {
        self.w.w.matvec(xbar)
    }

    /// Stationary Gaussian `exp(-Σₜ x'ₜ²/2) / Z` at whitened coordinates.
    pub(crate) fn gaussian(&self, xprime: &[Complex64], norm: Complex64) -> Complex64 {
        let exponent: Complex64 = xprime.iter().map(|&z| z * z).sum::<Complex64>() * (-0.5);
        exponent.exp() / norm
    }

    /// Right eigenfunction at doubled/complex coordinates, with an explicit
    /// Gaussian divisor (the Husimi layer normalizes differently).
    pub(crate) fn right_eval(
        &self,
        mu: &MultiIndex,
        xbar: &[Complex64],
        norm: Complex64,
    ) -> Result<Complex64> {
        assert_eq!(mu.len(), self.dim, "multi-index length must match dimension");
        assert_eq!(xbar.len(), self.dim, "coordinate length must match dimension");
        let total = mu.total_order();
        if total > MAX_HERMITE_ORDER {
            return Err(Error::OrderTooLarge { order: total, max: MAX_HERMITE_ORDER });
        }
        let xp = self.whitened(xbar);
        let tables: Vec<Vec<Complex64>> =
            xp.iter().map(|&z| hermite_table(total, z)).collect();
        Ok(self.gaussian(&xp, norm) * mode_polynomial(&self.a_right, mu, &tables))
    }

    /// Left eigenfunction at doubled/complex coordinates.
    pub(crate) fn left_eval(&self, mu: &MultiIndex, xbar: &[Complex64]) -> Result<Complex64> {
        assert_eq!(mu.len(), self.dim, "multi-index length must match dimension");
        assert_eq!(xbar.len(), self.dim, "coordinate length must match dimension");
        let total = mu.total_order();
        if total > MAX_HERMITE_ORDER {
            return Err(Error::OrderTooLarge { order: total, max: MAX_HERMITE_ORDER });
        }
        let xp = self.whitened(xbar);
        let tables: Vec<Vec<Complex64>> =
            xp.iter().map(|&z| hermite_table(total, z)).collect();
        Ok(mode_polynomial(&self.a_left, mu, &tables))
    }

    /// Spectral resummation `Σ_{|μ| ≤ order} e^{E_μ t} r_μ(x) l_μ(x₀)` with a
    /// caller-chosen Gaussian divisor.  Hermite tables are shared across all
    /// modes of the sum.
    pub(crate) fn propagator_eval(
        &self,
        xbar: &[Complex64],
        x0bar: &[Complex64],
        t: f64,
        max_total_order: usize,
        norm: Complex64,
    ) -> Result<Complex64> {
        assert_eq!(xbar.len(), self.dim, "coordinate length must match dimension");
        assert_eq!(x0bar.len(), self.dim, "initial point length must match dimension");
        if max_total_order > MAX_HERMITE_ORDER {
            return Err(Error::OrderTooLarge {
                order: max_total_order,
                max: MAX_HERMITE_ORDER,
            });
        }
        let xp = self.whitened(xbar);
        let x0p = self.whitened(x0bar);
        let hx: Vec<Vec<Complex64>> =
            xp.iter().map(|&z| hermite_table(max_total_order, z)).collect();
        let h0: Vec<Vec<Complex64>> =
            x0p.iter().map(|&z| hermite_table(max_total_order, z)).collect();

        let mut acc = c(0.0, 0.0);
        for mu in multi_indices_up_to(self.dim, max_total_order) {
            let energy: Complex64 = mu
                .as_slice()
                .iter()
                .zip(self.delta.iter())
                .map(|(&m, &d)| -d * m as f64)
                .sum();
            let weight = (energy * t).exp();
            let r_poly = mode_polynomial(&self.a_right, &mu, &hx);
            let l_poly = mode_polynomial(&self.a_left, &mu, &h0);
            acc += weight * r_poly * l_poly;
        }
        Ok(self.gaussian(&xp, norm) * acc)
    }

    /// All left polynomials `l_μ` with `|μ| ≤ max_total_order` at one point,
    /// sharing one set of Hermite tables; ordered like
    /// [`multi_indices_up_to`].
    pub(crate) fn left_eval_all(
        &self,
        xbar: &[Complex64],
        max_total_order: usize,
    ) -> Result<Vec<Complex64>> {
        assert_eq!(xbar.len(), self.dim, "coordinate length must match dimension");
        if max_total_order > MAX_HERMITE_ORDER {
            return Err(Error::OrderTooLarge {
                order: max_total_order,
                max: MAX_HERMITE_ORDER,
            });
        }
        let xp = self.whitened(xbar);
        let tables: Vec<Vec<Complex64>> =
            xp.iter().map(|&z| hermite_table(max_total_order, z)).collect();
        Ok(multi_indices_up_to(self.dim, max_total_order)
            .iter()
            .map(|mu| mode_polynomial(&self.a_left, mu, &tables))
            .collect())
    }

    /// Weighted right-eigenfunction sum
    /// `gaussian(x') · Σ_s weights[s] · (Hermite part of r_{μ_s})(x')` with
    /// shared Hermite tables and a caller-chosen Gaussian divisor.
    pub(crate) fn weighted_right_eval(
        &self,
        indices: &[MultiIndex],
        weights: &[Complex64],
        max_total_order: usize,
        xbar: &[Complex64],
        norm: Complex64,
    ) -> Result<Complex64> {
        assert_eq!(indices.len(), weights.len(), "one weight per multi-index");
        assert_eq!(xbar.len(), self.dim, "coordinate length must match dimension");
        if max_total_order > MAX_HERMITE_ORDER {
            return Err(Error::OrderTooLarge {
                order: max_total_order,
                max: MAX_HERMITE_ORDER,
            });
        }
        let xp = self.whitened(xbar);
        let tables: Vec<Vec<Complex64>> =
            xp.iter().map(|&z| hermite_table(max_total_order, z)).collect();
        let mut acc = c(0.0, 0.0);
        for (mu, &w) in indices.iter().zip(weights.iter()) {
            acc += w * mode_polynomial(&self.a_right, mu, &tables);
        }
        Ok(self.gaussian(&xp, norm) * acc)
    }
}

/// The Hermite-polynomial part of an eigenfunction: for mixing matrix `A`
/// (indexed `[mode i][coordinate t]`) and multi-index `μ`,
///
/// `Σ_{k¹⋯k^n} ∏ᵢ [ C(μᵢ; kⁱ) / √(μᵢ!) · ∏ₜ A[i][t]^{kⁱₜ} ] · ∏ₜ He_{Kₜ}(x'ₜ)`
///
/// where each `kⁱ` runs over the compositions of `μᵢ` into one part per
/// coordinate and `Kₜ = Σᵢ kⁱₜ`.  `hermites[t]` must hold `He₀ … He_{|μ|}`
/// at the whitened coordinate `x'ₜ`.  The term count is
/// `∏ᵢ C(μᵢ + n - 1, n - 1)`, manageable for the small dimensions used here.
fn mode_polynomial(
    a: &DenseMatrix,
    mu: &MultiIndex,
    hermites: &[Vec<Complex64>],
) -> Complex64 {
    let dim = mu.len();
    // Per-mode composition tables with fully folded coefficients:
    // multinomial / √(μᵢ!) times the matrix-power product over coordinates.
    let mut comp_data: Vec<Vec<(Complex64, Vec<usize>)>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mi = mu.get(i);
        let inv_sqrt_fact = 1.0 / factorial_f64(mi).sqrt();
        let mut entries = Vec::new();
        for comp in compositions(mi, dim) {
            let coeff = multinomial_f64(mi, &comp).expect("composition sums to its order");
            let mut folded = c(coeff * inv_sqrt_fact, 0.0);
            for (t, &k) in comp.parts().iter().enumerate() {
                folded *= a.get(i, t).powu(k as u32);
            }
            entries.push((folded, comp.parts().to_vec()));
        }
        comp_data.push(entries);
    }

    // Odometer over the cartesian product of per-mode compositions.
    let mut choice = vec![0usize; dim];
    let mut sum = c(0.0, 0.0);
    loop {
        let mut coeff = c(1.0, 0.0);
        let mut k_total = vec![0usize; dim];
        for i in 0..dim {
            let (folded, parts) = &comp_data[i][choice[i]];
            coeff *= folded;
            for (t, &k) in parts.iter().enumerate() {
                k_total[t] += k;
            }
        }
        let mut term = coeff;
        for t in 0..dim {
            term *= hermites[t][k_total[t]];
        }
        sum += term;

        // Advance the odometer.
        let mut pos = 0;
        loop {
            if pos == dim {
                return sum;
            }
            choice[pos] += 1;
            if choice[pos] < comp_data[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Computes the normal form of a classical model.
///
/// Requires a diagonalizable, stable drift and a diffusion for which the
/// stationary covariance is invertible.
pub fn normal_form(model: &OUModel) -> Result<NormalForm> {
    NormalForm::from_complex(&model.beta, &model.diffusion)
}

/// The eigenvalue lattice `E_μ = -Σᵢ μᵢ δᵢ` for all multi-indices with
/// `|μ| ≤ max_total_order`, in graded lexicographic order (the zero mode
/// comes first).
pub fn spectrum(nf: &NormalForm, max_total_order: usize) -> Vec<SpectralMode> {
    multi_indices_up_to(nf.dim, max_total_order)
        .into_iter()
        .map(|mu| {
            let eigenvalue: Complex64 = mu
                .as_slice()
                .iter()
                .zip(nf.delta.iter())
                .map(|(&m, &d)| -d * m as f64)
                .sum();
            SpectralMode { index: mu, eigenvalue }
        })
        .collect()
}

/// Stationary density `exp(-xᵀ Σ∞⁻¹ x / 2) / ((2π)^{n/2} √det Σ∞)`.
pub fn ness_density(nf: &NormalForm, x: &[f64]) -> f64 {
    let xbar: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
    let xp = nf.whitened(&xbar);
    nf.gaussian(&xp, nf.gaussian_norm).re
}

/// Right (density-side) eigenfunction `r_μ(x)`.
pub fn right_eigenfunction(nf: &NormalForm, mu: &MultiIndex, x: &[f64]) -> Result<Complex64> {
    let xbar: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
    nf.right_eval(mu, &xbar, nf.gaussian_norm)
}

/// Left (observable-side) eigenfunction `l_μ(x)`.
pub fn left_eigenfunction(nf: &NormalForm, mu: &MultiIndex, x: &[f64]) -> Result<Complex64> {
    let xbar: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
    nf.left_eval(mu, &xbar)
}

/// Spectral transition density `P(x, t | x₀) = Σ_{|μ| ≤ order} e^{E_μ t}
/// r_μ(x) l_μ(x₀)`.
///
/// The value is complex in general; for a real stable drift the imaginary
/// parts of conjugate modes cancel to roundoff.
pub fn transition_density(
    nf: &NormalForm,
    x: &[f64],
    x0: &[f64],
    t: f64,
    max_total_order: usize,
) -> Result<Complex64> {
    let xbar: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
    let x0bar: Vec<Complex64> = x0.iter().map(|&v| c(v, 0.0)).collect();
    nf.propagator_eval(&xbar, &x0bar, t, max_total_order, nf.gaussian_norm)
}

/// Deterministic covariance evolution
/// `Σ(t) = e^{-βt} (Σ₀ - Σ∞) e^{-βᵀt} + Σ∞`.
pub fn covariance_trajectory(
    model: &OUModel,
    sigma0: &DenseMatrix,
    t: f64,
) -> Result<DenseMatrix> {
    if sigma0.rows() != model.dim() || sigma0.cols() != model.dim() {
        return Err(Error::Validation {
            field: "sigma0".into(),
            reason: "initial covariance must match the model dimension".into(),
        });
    }
    let dev = sigma0.symmetry_deviation();
    if dev > 1e-12 {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    let sigma_inf = solve_lyapunov(&model.beta, &model.diffusion)?;
    let decay = matrix_exponential(&model.beta, -t)?;
    let transient = decay
        .matmul(&sigma0.sub(&sigma_inf))
        .matmul(&decay.transpose());
    Ok(transient.add(&sigma_inf).symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_model() -> OUModel {
        OUModel::from_drift_diffusion(&[vec![2.0]], &[vec![1.0]]).unwrap()
    }

    fn planar_model() -> OUModel {
        OUModel::from_drift_diffusion(
            &[vec![2.0, 0.6], vec![-0.4, 1.3]],
            &[vec![1.0, 0.2], vec![0.2, 0.7]],
        )
        .unwrap()
    }

    #[test]
    fn model_rejects_asymmetric_diffusion() {
        let r = OUModel::from_drift_diffusion(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[vec![1.0, 0.3], vec![0.0, 1.0]],
        );
        assert!(matches!(r, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn model_rejects_indefinite_diffusion() {
        let r = OUModel::from_drift_diffusion(&[vec![1.0]], &[vec![-0.5]]);
        assert!(matches!(r, Err(Error::Validation { .. })));
    }

    #[test]
    fn noise_factor_halves_into_diffusion() {
        let m = OUModel::from_drift_noise(&[vec![2.0]], &[vec![1.4]]).unwrap();
        assert_abs_diff_eq!(m.diffusion().get(0, 0).re, 0.5 * 1.4 * 1.4, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_forms_are_symmetric_with_signed_drift_blocks() {
        let m = planar_model();
        let forward = build_quadratic_form(&m, Direction::Forward);
        let adjoint = build_quadratic_form(&m, Direction::Adjoint);
        assert_eq!(forward.symmetry_deviation(), 0.0);
        assert_eq!(adjoint.symmetry_deviation(), 0.0);
        // Off-diagonal blocks carry ∓β, diagonal block carries 2D.
        assert_eq!(forward.get(2, 0).re, -2.0);
        assert_eq!(adjoint.get(2, 0).re, 2.0);
        assert_eq!(forward.get(2, 2).re, 2.0);
        assert_eq!(forward.get(0, 0).re, 0.0);
    }

    #[test]
    fn scalar_normal_form_has_known_entries() {
        let nf = normal_form(&scalar_model()).unwrap();
        assert_abs_diff_eq!(nf.delta[0].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nf.sigma_inf.get(0, 0).re, 0.5, epsilon = 1e-12);
        // W = √2 whitens Σ∞ = 1/2; V = [[1, -1/2], [0, 1]] up to the
        // eigenvector scaling, which is unique (±1) in one dimension.
        assert_abs_diff_eq!(nf.w.w.get(0, 0).re, 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(nf.v.get(0, 1).re * nf.v.get(0, 0).re.signum(), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(nf.v_adjoint.get(0, 1).re * nf.v.get(0, 0).re.signum(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn frames_are_symplectic_and_normalize_both_forms() {
        let m = planar_model();
        let nf = normal_form(&m).unwrap();
        let n = m.dim();

        // J = [[0, 𝟙], [-𝟙, 0]] must be preserved: Vᵀ J V = J.
        let eye = DenseMatrix::identity(n);
        let j = DenseMatrix::from_blocks(
            &DenseMatrix::zeros(n, n),
            &eye,
            &eye.scale(c(-1.0, 0.0)),
            &DenseMatrix::zeros(n, n),
        );
        for v in [&nf.v, &nf.v_adjoint] {
            let dev = v.transpose().matmul(&j).matmul(v).sub(&j).max_norm();
            assert!(dev <= 1e-10, "symplectic deviation {dev}");
        }

        // V⁻ᵀ S∓ V⁻¹ = ∓[[0, Δ], [Δ, 0]].
        let mut ladder = DenseMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            ladder.set(i, n + i, nf.delta[i]);
            ladder.set(n + i, i, nf.delta[i]);
        }
        let cases = [
            (Direction::Forward, &nf.v, -1.0),
            (Direction::Adjoint, &nf.v_adjoint, 1.0),
        ];
        for (direction, v, sign) in cases {
            let s = build_quadratic_form(&m, direction);
            let v_inv = v.inverse().unwrap();
            let congruent = v_inv.transpose().matmul(&s).matmul(&v_inv);
            let dev = congruent.sub(&ladder.scale(c(sign, 0.0))).max_norm();
            assert!(dev <= 1e-10, "congruence deviation {dev} ({direction:?})");
        }
    }

    #[test]
    fn spectrum_of_scalar_model_is_arithmetic_ladder() {
        let nf = normal_form(&scalar_model()).unwrap();
        let modes = spectrum(&nf, 3);
        let eigs: Vec<f64> = modes.iter().map(|m| m.eigenvalue.re).collect();
        assert_eq!(modes.len(), 4);
        for (k, e) in eigs.iter().enumerate() {
            assert_abs_diff_eq!(*e, -2.0 * k as f64, epsilon = 1e-12);
        }
        assert_eq!(modes[0].index.as_slice(), &[0]);
    }

    #[test]
    fn ness_is_the_zero_mode_and_normalizes() {
        let nf = normal_form(&scalar_model()).unwrap();
        // Direct value: Σ∞ = 1/2 means density exp(-x²)/√π.
        let x = 0.7f64;
        let expected = (-x * x).exp() / std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(ness_density(&nf, &[x]), expected, epsilon = 1e-12);

        let mu0 = MultiIndex::new(vec![0]);
        let r0 = right_eigenfunction(&nf, &mu0, &[x]).unwrap();
        assert_abs_diff_eq!(r0.re, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r0.im, 0.0, epsilon = 1e-15);

        // Simpson integration of the density over [-10, 10].
        let steps = 4000;
        let h = 20.0 / steps as f64;
        let mut integral = 0.0;
        for k in 0..=steps {
            let xk = -10.0 + k as f64 * h;
            let wk = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += wk * ness_density(&nf, &[xk]);
        }
        integral *= h / 3.0;
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn scalar_eigenfunctions_have_closed_forms() {
        // β = 2, D = 1: W = √2, P = ±1, so up to the ladder the first pair is
        // r₁(x) = ±2x · P_ness(x) and l₁(x) = ±x, with matching signs.
        let nf = normal_form(&scalar_model()).unwrap();
        let x = 0.7f64;
        let mu1 = MultiIndex::new(vec![1]);
        let r1 = right_eigenfunction(&nf, &mu1, &[x]).unwrap();
        let l1 = left_eigenfunction(&nf, &mu1, &[x]).unwrap();
        let ness = ness_density(&nf, &[x]);
        assert_abs_diff_eq!(r1.re * l1.re.signum(), 2.0 * x * ness, epsilon = 1e-12);
        assert_abs_diff_eq!(l1.re.abs(), x, epsilon = 1e-12);
        // The product is scaling-invariant.
        assert_abs_diff_eq!((r1 * l1).re, 2.0 * x * x * ness, epsilon = 1e-12);
    }

    #[test]
    fn left_right_pairs_are_biorthonormal_scalar() {
        let nf = normal_form(&scalar_model()).unwrap();
        // Simpson quadrature of ∫ l_m r_n dx over [-12, 12].
        let steps = 6000;
        let h = 24.0 / steps as f64;
        for m in 0..4usize {
            for n in 0..4usize {
                let mut integral = 0.0;
                for k in 0..=steps {
                    let xk = -12.0 + k as f64 * h;
                    let wk = if k == 0 || k == steps {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let l = left_eigenfunction(&nf, &MultiIndex::new(vec![m]), &[xk]).unwrap();
                    let r = right_eigenfunction(&nf, &MultiIndex::new(vec![n]), &[xk]).unwrap();
                    integral += wk * (l * r).re;
                }
                integral *= h / 3.0;
                let expected = if m == n { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(integral, expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn transition_density_relaxes_to_stationary() {
        let nf = normal_form(&planar_model()).unwrap();
        let x = [0.4, -0.8];
        let x0 = [1.0, 0.5];
        let late = transition_density(&nf, &x, &x0, 20.0, 8).unwrap();
        assert_abs_diff_eq!(late.re, ness_density(&nf, &x), epsilon = 1e-10);
        assert_abs_diff_eq!(late.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transition_density_is_real_for_rotational_drift() {
        // Complex-conjugate drift eigenvalues: imaginary parts must cancel.
        let m = OUModel::from_drift_diffusion(
            &[vec![1.0, -0.9], vec![0.9, 1.0]],
            &[vec![0.8, 0.0], vec![0.0, 0.8]],
        )
        .unwrap();
        let nf = normal_form(&m).unwrap();
        let p = transition_density(&nf, &[0.3, -0.2], &[0.9, 0.1], 0.7, 10).unwrap();
        assert!(p.im.abs() <= 1e-8, "imaginary residue {}", p.im);
        assert!(p.re > 0.0);
    }

    #[test]
    fn covariance_trajectory_interpolates_initial_and_stationary() {
        let m = scalar_model();
        let sigma0 = DenseMatrix::from_real_rows(&[vec![2.0]]).unwrap();
        let at_zero = covariance_trajectory(&m, &sigma0, 0.0).unwrap();
        assert_abs_diff_eq!(at_zero.get(0, 0).re, 2.0, epsilon = 1e-12);
        let late = covariance_trajectory(&m, &sigma0, 15.0).unwrap();
        assert_abs_diff_eq!(late.get(0, 0).re, 0.5, epsilon = 1e-12);
        // Scalar closed form Σ(t) = Σ∞ + (Σ₀ - Σ∞) e^{-2βt}.
        let t = 0.37f64;
        let expected = 0.5 + 1.5 * (-4.0 * t).exp();
        let mid = covariance_trajectory(&m, &sigma0, t).unwrap();
        assert_abs_diff_eq!(mid.get(0, 0).re, expected, epsilon = 1e-12);
    }
}
