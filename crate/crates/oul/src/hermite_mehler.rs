//! Probabilists' Hermite polynomials, multi-index combinatorics, and the
//! bilinear generating-function kernel.
//!
//! Everything here is exact combinatorics or stable three-term recurrences:
//!
//! * `Heₙ` denotes the *probabilists'* Hermite polynomial, orthogonal with
//!   respect to the weight `exp(-x²/2)`, with recurrence
//!   `Heₙ₊₁(x) = x Heₙ(x) - n Heₙ₋₁(x)`.
//! * Multi-indices `μ = (μ₁, …, μ_k)` label polynomial excitation orders of
//!   spectral modes; compositions split a single order `μᵢ` into per-axis
//!   contributions.
//! * The bilinear kernel `E(ρ, x, y) = (1-ρ²)^{-1/2} ·
//!   exp(-[ρ²(x²+y²) - 2ρxy] / (2(1-ρ²)))` resums the diagonal Hermite
//!   series `Σₙ ρⁿ Heₙ(x) Heₙ(y) / n!` in closed form.
//!
//! Orders are capped (60 for plain polynomials, 30 per index for the
//! two-variable matrix-argument sums) so that every coefficient stays inside
//! the exactly-representable integer range of `f64` arithmetic paths that
//! consume them.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::tensor_linalg::{c, DenseMatrix};

/// Highest supported order for plain Hermite polynomial evaluation.
pub const MAX_HERMITE_ORDER: usize = 60;

/// Highest supported per-index order for the two-variable matrix-argument
/// Hermite sums.
pub const MAX_GENERALIZED_ORDER: usize = 30;

/// Occupation multi-index labelling a spectral mode.
///
/// Entry `μᵢ` is the polynomial excitation order of normal coordinate `i`;
/// the total order `|μ| = Σᵢ μᵢ` controls the decay rate of the mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    occupations: Vec<usize>,
}

impl MultiIndex {
    pub fn new(occupations: Vec<usize>) -> Self {
        assert!(!occupations.is_empty(), "multi-index needs at least one entry");
        Self { occupations }
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.occupations[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.occupations
    }

    /// Total order `|μ| = Σᵢ μᵢ`.
    pub fn total_order(&self) -> usize {
        self.occupations.iter().sum()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.occupations.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An ordered split of a non-negative integer into a fixed number of
/// non-negative parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    parts: Vec<usize>,
}

impl Composition {
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The integer this composition splits.
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }
}

/// Probabilists' Hermite polynomial `Heₙ(x)` by the three-term recurrence.
pub fn hermite_prob(n: usize, x: Complex64) -> Result<Complex64> {
    if n > MAX_HERMITE_ORDER {
        return Err(Error::OrderTooLarge { order: n, max: MAX_HERMITE_ORDER });
    }
    Ok(hermite_table(n, x)[n])
}

/// Values `He₀(x), …, He_max(x)` in one recurrence sweep.
///
/// Callers evaluating many orders at a fixed point should use this instead
/// of repeated [`hermite_prob`] calls.  The order cap is the caller's
/// responsibility here; use [`hermite_prob`] for a checked single value.
pub fn hermite_table(max: usize, x: Complex64) -> Vec<Complex64> {
    let mut table = Vec::with_capacity(max + 1);
    table.push(c(1.0, 0.0));
    if max == 0 {
        return table;
    }
    table.push(x);
    for n in 1..max {
        let next = x * table[n] - c(n as f64, 0.0) * table[n - 1];
        table.push(next);
    }
    table
}

/// All compositions of `target` into exactly `parts` non-negative parts, in
/// ascending lexicographic order: `(0,…,0,target)` first, `(target,0,…,0)`
/// last.  The count is `C(target + parts - 1, parts - 1)`.
pub fn compositions(target: usize, parts: usize) -> Vec<Composition> {
    assert!(parts >= 1, "compositions need at least one part");
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fill_compositions(target, 0, &mut current, &mut out);
    out
}

fn fill_compositions(
    remaining: usize,
    position: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Composition>,
) {
    if position + 1 == current.len() {
        current[position] = remaining;
        out.push(Composition { parts: current.clone() });
        return;
    }
    for k in 0..=remaining {
        current[position] = k;
        fill_compositions(remaining - k, position + 1, current, out);
    }
}

/// All multi-indices of length `len` with total order at most `max_total`,
/// in graded lexicographic order: sorted by total order first, then
/// lexicographically within each grade.  Includes the zero index.
pub fn multi_indices_up_to(len: usize, max_total: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=max_total {
        for comp in compositions(total, len) {
            out.push(MultiIndex::new(comp.parts.to_vec()));
        }
    }
    out
}

fn factorial_big(n: usize) -> BigUint {
    let mut acc = BigUint::one();
    for k in 2..=n {
        acc *= BigUint::from(k);
    }
    acc
}

/// `n!` as a float; exact up to `n = 20` and correctly rounded beyond.
pub fn factorial_f64(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Exact multinomial coefficient `C(n; k₁, …, k_p) = n! / (k₁!⋯k_p!)` for a
/// composition `(k₁, …, k_p)` of `n`.
///
/// Fails with [`Error::PartsMismatch`] when the composition does not sum to
/// `n`.  The result is exact for any order, hence the big-integer return.
pub fn multinomial(n: usize, parts: &Composition) -> Result<BigUint> {
    let total = parts.total();
    if total != n {
        return Err(Error::PartsMismatch { expected: n, got: total });
    }
    let mut acc = factorial_big(n);
    for &k in parts.parts() {
        acc /= factorial_big(k);
    }
    Ok(acc)
}

/// Multinomial coefficient rounded to `f64` (exact below 2⁵³).
pub fn multinomial_f64(n: usize, parts: &Composition) -> Result<f64> {
    Ok(multinomial(n, parts)?.to_f64().unwrap_or(f64::INFINITY))
}

/// Two-variable Hermite polynomial with 2×2 matrix argument `U`:
///
/// `ℋ_{m,n}(U; x, y) = Σ_{k≤m} Σ_{j≤n} C(m,k) C(n,j) U₁₁ᵏ U₁₂^{m-k} U₂₁ʲ
///  U₂₂^{n-j} He_{k+j}(x) He_{m+n-k-j}(y)`.
///
/// For `U = 𝟙` this collapses to the product `He_m(x) He_n(y)`; a sign flip
/// of `U` multiplies the value by `(-1)^{m+n}`.
pub fn generalized_hermite(
    u: &DenseMatrix,
    m: usize,
    n: usize,
    x: Complex64,
    y: Complex64,
) -> Result<Complex64> {
    assert_eq!((u.rows(), u.cols()), (2, 2), "matrix argument must be 2x2");
    let max = m.max(n);
    if max > MAX_GENERALIZED_ORDER {
        return Err(Error::OrderTooLarge { order: max, max: MAX_GENERALIZED_ORDER });
    }
    let hx = hermite_table(m + n, x);
    let hy = hermite_table(m + n, y);

    // Binomial rows for m and n; orders ≤ 30 keep these exact in f64.
    let binom_m: Vec<f64> = binomial_row(m);
    let binom_n: Vec<f64> = binomial_row(n);

    let pow = |base: Complex64, exp: usize| -> Complex64 { base.powu(exp as u32) };

    let mut sum = c(0.0, 0.0);
    for k in 0..=m {
        let factor_k = c(binom_m[k], 0.0) * pow(u.get(0, 0), k) * pow(u.get(0, 1), m - k);
        for j in 0..=n {
            let factor_j =
                c(binom_n[j], 0.0) * pow(u.get(1, 0), j) * pow(u.get(1, 1), n - j);
            sum += factor_k * factor_j * hx[k + j] * hy[m + n - k - j];
        }
    }
    Ok(sum)
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..=n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// Closed form of the diagonal bilinear Hermite series,
///
/// `E(ρ, x, y) = Σₙ ρⁿ Heₙ(x) Heₙ(y) / n!
///             = (1-ρ²)^{-1/2} exp(-[ρ²(x²+y²) - 2ρxy] / (2(1-ρ²)))`,
///
/// with the principal branch of the square root.  The kernel degenerates as
/// `ρ² → 1`; arguments with `|1-ρ²| ≤ 1e-12` are rejected.
pub fn mehler_kernel(rho: Complex64, x: Complex64, y: Complex64) -> Result<Complex64> {
    let one = c(1.0, 0.0);
    let denom = one - rho * rho;
    if denom.norm() <= 1e-12 {
        return Err(Error::RhoTooCloseToOne);
    }
    let exponent = -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * denom);
    Ok(exponent.exp() / denom.sqrt())
}
