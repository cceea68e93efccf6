//! Dense complex linear algebra services shared by every other module.
//!
//! Conventions used throughout the crate:
//!
//! * Matrices are dense, row-major, with `Complex64` entries.  Real-valued
//!   models are promoted to the complex field on entry; nothing downstream
//!   distinguishes the two cases.
//! * Vectorization of a matrix is **row-major**: `vec(X)[i*n + j] = X[i][j]`,
//!   so `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
//! * "Symmetric" always means the *unconjugated* transpose, `X == Xᵀ`, also
//!   for complex matrices.  Hermitian symmetry is called out explicitly where
//!   it matters.
//! * Square roots of complex numbers and of matrices take the principal
//!   branch (non-negative real part).
//!
//! The heavy lifting (general eigenproblems, LU solves, SVD) is delegated to
//! LAPACK through `ndarray-linalg`; this module owns the orderings, branch
//! choices and error classification that the rest of the crate relies on.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Determinant, Eig, EigVals, Inverse, Solve, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shorthand constructor for complex scalars.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Eigenvector condition number above which a matrix is treated as
/// numerically defective.
pub const DIAGONALIZABILITY_LIMIT: f64 = 1e8;

/// Real-part threshold below which a drift eigenvalue counts as unstable.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// Dense complex matrix with finite entries.
///
/// A thin wrapper around `ndarray::Array2<Complex64>` that pins down the
/// crate-wide conventions (row-major storage, unconjugated transpose) and
/// centralizes finiteness checking at construction boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    data: Array2<Complex64>,
}

impl DenseMatrix {
    /// Wraps an array after checking all entries are finite.
    pub fn from_array(data: Array2<Complex64>) -> Result<Self> {
        let m = Self { data };
        m.check_finite()?;
        Ok(m)
    }

    /// Internal constructor for values produced by our own arithmetic.
    pub(crate) fn wrap(data: Array2<Complex64>) -> Self {
        Self { data }
    }

    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: Array2::zeros((rows, cols)) }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        Self { data: Array2::eye(n) }
    }

    /// Builds a matrix from complex row slices; all rows must have equal
    /// length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Validation {
                field: "matrix".into(),
                reason: "rows must be non-empty and of equal length".into(),
            });
        }
        let mut data = Array2::zeros((r, c));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[(i, j)] = v;
            }
        }
        Self::from_array(data)
    }

    /// Builds a complex matrix from real row slices.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> =
            rows.iter().map(|row| row.iter().map(|&v| c(v, 0.0)).collect()).collect();
        Self::from_rows(&complex)
    }

    /// Returns an error if any entry is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[(i, j)] = v;
    }

    /// Read-only view of the underlying array.
    pub fn array(&self) -> &Array2<Complex64> {
        &self.data
    }

    /// Unconjugated transpose.
    pub fn transpose(&self) -> Self {
        Self { data: self.data.t().to_owned() }
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self { data: self.data.mapv(|z| z.conj()) }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols(), rhs.rows(), "matmul shape mismatch");
        Self { data: self.data.dot(&rhs.data) }
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols(), v.len(), "matvec shape mismatch");
        let v = Array1::from(v.to_vec());
        self.data.dot(&v).to_vec()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { data: &self.data + &rhs.data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { data: &self.data - &rhs.data }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { data: self.data.mapv(|z| z * s) }
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.data[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest imaginary-part magnitude over all entries.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `max |X - Xᵀ|` over entries (unconjugated).
    pub fn symmetry_deviation(&self) -> f64 {
        self.sub(&self.transpose()).max_norm()
    }

    /// `max |X - X†|` over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).max_norm()
    }

    /// `(X + Xᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.transpose()).scale(c(0.5, 0.0))
    }

    /// `(X + X†) / 2`.
    pub fn hermitized(&self) -> Self {
        self.add(&self.adjoint()).scale(c(0.5, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows().min(self.cols())).map(|i| self.data[(i, i)]).sum()
    }

    /// Row-major flattening.
    pub fn vec_row_major(&self) -> Vec<Complex64> {
        self.data.iter().copied().collect()
    }

    /// Inverse of row-major flattening.
    pub fn from_vec_row_major(rows: usize, cols: usize, v: Vec<Complex64>) -> Self {
        assert_eq!(v.len(), rows * cols, "vector length does not match shape");
        Self { data: Array2::from_shape_vec((rows, cols), v).expect("shape checked above") }
    }

    /// Contiguous submatrix starting at `(r0, c0)` with shape `(nr, nc)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self { data: self.data.slice(ndarray::s![r0..r0 + nr, c0..c0 + nc]).to_owned() }
    }

    /// Assembles `[[a, b], [d, e]]` from four equally-shaped square blocks.
    pub fn from_blocks(a: &Self, b: &Self, d: &Self, e: &Self) -> Self {
        let n = a.rows();
        for m in [a, b, d, e] {
            assert_eq!((m.rows(), m.cols()), (n, n), "blocks must share one square shape");
        }
        let mut out = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a.data[(i, j)];
                out[(i, j + n)] = b.data[(i, j)];
                out[(i + n, j)] = d.data[(i, j)];
                out[(i + n, j + n)] = e.data[(i, j)];
            }
        }
        Self { data: out }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self { data: ndarray::linalg::kron(&self.data, &rhs.data) }
    }

    /// Solves `self * x = rhs` by LU factorization.
    pub fn solve_vec(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        assert!(self.is_square(), "solve requires a square matrix");
        let b = Array1::from(rhs.to_vec());
        let x = self.data.solve(&b)?;
        Ok(x.to_vec())
    }

    /// Matrix inverse by LU factorization.
    pub fn inverse(&self) -> Result<Self> {
        assert!(self.is_square(), "inverse requires a square matrix");
        Ok(Self { data: self.data.inv()? })
    }

    /// Determinant by LU factorization.
    pub fn determinant(&self) -> Result<Complex64> {
        assert!(self.is_square(), "determinant requires a square matrix");
        Ok(self.data.det()?)
    }
}

impl std::ops::Mul for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl std::ops::Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::add(self, rhs)
    }
}

impl std::ops::Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::sub(self, rhs)
    }
}

/// Result of a sorted dense eigendecomposition `m = P Δ P⁻¹`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Eigenvalues sorted ascending by `(Re, Im)` lexicographically.
    pub delta: Vec<Complex64>,
    /// Right eigenvectors as columns, ordered like `delta`.
    pub p: DenseMatrix,
    /// Inverse of the eigenvector matrix.
    pub p_inv: DenseMatrix,
    /// 2-norm condition number of `p`.
    pub condition: f64,
}

/// Full eigendecomposition with deterministic eigenvalue ordering.
///
/// Eigenpairs are sorted ascending by `(Re λ, Im λ)`; complex-conjugate pairs
/// of a real matrix therefore always sit adjacently, negative imaginary part
/// first.  Fails with [`Error::NonDiagonalizable`] when the eigenvector
/// matrix has 2-norm condition number above `1e8`, which is how a defective
/// (Jordan-block) matrix manifests in floating point.
pub fn eigendecompose(m: &DenseMatrix) -> Result<EigenDecomposition> {
    assert!(m.is_square(), "eigendecomposition requires a square matrix");
    m.check_finite()?;
    let (values, vectors) = m.array().eig()?;

    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });

    let delta: Vec<Complex64> = order.iter().map(|&k| values[k]).collect();
    let mut p = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            p[(row, col)] = vectors[(row, k)];
        }
    }
    let p = DenseMatrix::wrap(p);

    let (_, singular, _) = p.array().svd(false, false)?;
    let s_max = singular.iter().cloned().fold(0.0, f64::max);
    let s_min = singular.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !condition.is_finite() || condition > DIAGONALIZABILITY_LIMIT {
        return Err(Error::NonDiagonalizable { condition });
    }

    let p_inv = p.inverse()?;
    Ok(EigenDecomposition { delta, p, p_inv, condition })
}

/// Eigenvalues only (no ordering guarantees beyond the sorted convention).
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    assert!(m.is_square(), "eigenvalues require a square matrix");
    m.check_finite()?;
    let vals = m.array().eigvals()?;
    let mut out: Vec<Complex64> = vals.to_vec();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// Returns `Err(Unstable)` unless every eigenvalue of `m` has real part
/// above [`STABILITY_MARGIN`].  The drift convention is that of a relaxation
/// generator: *positive* real parts mean decay.
pub fn require_stable(m: &DenseMatrix) -> Result<Vec<Complex64>> {
    let vals = eigenvalues(m)?;
    for &v in &vals {
        if v.re <= STABILITY_MARGIN {
            return Err(Error::Unstable { eigenvalue: v });
        }
    }
    Ok(vals)
}

/// Solves the stationary covariance equation `β Σ + Σ βᵀ = 2 D`.
///
/// The equation is vectorized row-major into the Kronecker-sum system
/// `(β ⊗ 𝟙 + 𝟙 ⊗ β) vec(Σ) = vec(2D)` and solved by LU factorization; the
/// result is symmetrized to remove roundoff asymmetry.  Requires a stable
/// `β` so that the stationary state exists and is unique.
pub fn solve_lyapunov(beta: &DenseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    assert!(beta.is_square() && d.is_square(), "drift and diffusion must be square");
    assert_eq!(beta.rows(), d.rows(), "drift and diffusion dimensions must agree");
    beta.check_finite()?;
    d.check_finite()?;
    require_stable(beta)?;

    let n = beta.rows();
    let eye = DenseMatrix::identity(n);
    let ksum = beta.kron(&eye).add(&eye.kron(beta));
    let rhs: Vec<Complex64> = d.vec_row_major().iter().map(|&z| z * 2.0).collect();
    let x = ksum
        .solve_vec(&rhs)
        .map_err(|_| Error::SingularKroneckerSum)?;
    let sigma = DenseMatrix::from_vec_row_major(n, n, x).symmetrized();
    sigma.check_finite()?;
    Ok(sigma)
}

/// Which factorization produced a whitening factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhiteningRoute {
    /// Unconjugated upper-triangular Cholesky of `Σ⁻¹` succeeded.
    UpperCholesky,
    /// A zero pivot forced the dense principal square root of `Σ⁻¹`.
    PrincipalSquareRoot,
}

/// Whitening factor `W` with `Wᵀ W = Σ⁻¹` (unconjugated transpose).
#[derive(Clone, Debug)]
pub struct WhiteningFactor {
    pub w: DenseMatrix,
    pub route: WhiteningRoute,
}

/// Unconjugated upper-triangular Cholesky: finds upper-triangular `U` with
/// `Uᵀ U = A` for complex symmetric `A`, taking principal square roots of
/// the pivots.  Fails when a pivot magnitude drops below `tol`.
fn split_cholesky(a: &DenseMatrix, tol: f64) -> std::result::Result<DenseMatrix, f64> {
    let n = a.rows();
    let mut u = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        let mut pivot = a.get(i, i);
        for k in 0..i {
            pivot -= u[(k, i)] * u[(k, i)];
        }
        if pivot.norm() <= tol {
            return Err(pivot.norm());
        }
        let root = pivot.sqrt();
        u[(i, i)] = root;
        for j in (i + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..i {
                s -= u[(k, i)] * u[(k, j)];
            }
            u[(i, j)] = s / root;
        }
    }
    Ok(DenseMatrix::wrap(u))
}

/// Whitening factor of a complex symmetric covariance: returns `W` with
/// `Wᵀ W = Σ⁻¹`.
///
/// Tries the unconjugated upper-triangular Cholesky factorization of `Σ⁻¹`
/// first.  When that hits a (near-)zero pivot — which happens for perfectly
/// legitimate covariances with zero diagonal entries — it falls back to the
/// dense principal matrix square root `W = (Σ⁻¹)^{1/2}`, which is symmetric
/// (a polynomial in `Σ⁻¹`) and therefore also satisfies `Wᵀ W = Σ⁻¹`.
pub fn whiten(sigma: &DenseMatrix) -> Result<WhiteningFactor> {
    assert!(sigma.is_square(), "whitening requires a square matrix");
    sigma.check_finite()?;
    let dev = sigma.symmetry_deviation();
    if dev > 1e-12 {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    let a = sigma.inverse().map_err(|_| Error::SingularCovariance)?;

    let tol = 1e-12 * (1.0 + a.max_norm());
    match split_cholesky(&a, tol) {
        Ok(w) => Ok(WhiteningFactor { w, route: WhiteningRoute::UpperCholesky }),
        Err(_) => {
            let eig = eigendecompose(&a)?;
            let n = a.rows();
            let mut root = DenseMatrix::zeros(n, n);
            for i in 0..n {
                root.set(i, i, eig.delta[i].sqrt());
            }
            let w = eig.p.matmul(&root).matmul(&eig.p_inv).symmetrized();
            let residual = w.transpose().matmul(&w).sub(&a).max_norm();
            if residual > 1e-8 * (1.0 + a.max_norm()) {
                return Err(Error::NearSingularPivot { pivot: residual });
            }
            Ok(WhiteningFactor { w, route: WhiteningRoute::PrincipalSquareRoot })
        }
    }
}

/// Matrix exponential `exp(m t)`.
///
/// `t = 0` returns the identity exactly.  Small matrices go through the
/// eigendecomposition when it is well conditioned; everything else falls
/// back to scaling-and-squaring with a Taylor kernel, which needs no
/// structure at all.
pub fn matrix_exponential(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    assert!(m.is_square(), "matrix exponential requires a square matrix");
    m.check_finite()?;
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.rows();
    if t == 0.0 {
        return Ok(DenseMatrix::identity(n));
    }

    // The eigenvector route is preferred while the decomposition is cheap;
    // a defective or ill-conditioned matrix silently falls through.
    if n <= 64 {
        if let Ok(eig) = eigendecompose(m) {
            let mut expd = DenseMatrix::zeros(n, n);
            for i in 0..n {
                expd.set(i, i, (eig.delta[i] * t).exp());
            }
            let out = eig.p.matmul(&expd).matmul(&eig.p_inv);
            out.check_finite()?;
            return Ok(out);
        }
    }

    scaling_squaring_exp(m, t)
}

/// Scaling-and-squaring with a truncated Taylor kernel: `exp(X) =
/// (exp(X/2^s))^{2^s}` with `‖X/2^s‖₁ ≤ 1/2` and the inner exponential
/// summed to machine precision.
fn scaling_squaring_exp(m: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    let n = m.rows();
    let x = m.scale(c(t, 0.0));
    let norm = x.one_norm();
    let squarings = if norm <= 0.5 { 0 } else { (norm / 0.5).log2().ceil() as u32 };
    let scaled = x.scale(c((0.5f64).powi(squarings as i32), 0.0));

    let mut term = DenseMatrix::identity(n);
    let mut sum = DenseMatrix::identity(n);
    for k in 1..=64u32 {
        term = term.matmul(&scaled).scale(c(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.max_norm() <= 1e-18 * (1.0 + sum.max_norm()) {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..squarings {
        out = out.matmul(&out);
    }
    out.check_finite()?;
    Ok(out)
}
