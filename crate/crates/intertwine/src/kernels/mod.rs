//! The explicit intertwining kernels: the one-step Ehrenfest link Λ_N, its
//! chains Λ_{M,N}, the Yule-to-Ehrenfest link Λ̂_N, and the Hermite-density
//! kernels Λ_a from Yule to Ornstein-Uhlenbeck. Every intertwining claim is
//! verified as an exactly-zero residual, and the polytope solver decides
//! triviality questions for small generator pairs.

mod polytope;
mod simplex;

pub use polytope::{kernel_polytope, KernelPolytope, PolytopeDecision};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::generators::FiniteGenerator;
use crate::linalg::RatMat;
use crate::polyalg::{
    factorial, hermite, integrate_gaussian, rat, rat_int, rational_binomial, Poly, Rational,
    ValueVector,
};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("expected M <= N, got M={m}, N={n}")]
    BadRange { m: usize, n: usize },
    #[error("dimension or offset mismatch: {0}")]
    Mismatch(String),
    #[error("coefficient vector must start with a_0 = 1")]
    BadLeadingCoefficient,
    #[error("coefficient vector must have length N+1 = {expected}, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("row {0} does not integrate to 1 against the Gaussian")]
    BadRowMass(usize),
    #[error("state spaces capped at {cap} states, got {got}")]
    Oversize { cap: usize, got: usize },
}

/// Row-stochastic rectangular matrix linking two integer state windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteKernel {
    row_offset: i64,
    col_offset: i64,
    entries: RatMat,
}

impl FiniteKernel {
    /// Validates nonnegativity and exact row sums of 1.
    pub fn new(row_offset: i64, col_offset: i64, entries: RatMat) -> Self {
        for i in 0..entries.rows() {
            let mut sum = rat_int(0);
            for j in 0..entries.cols() {
                let v = entries.at(i, j);
                assert!(!v.is_negative(), "negative kernel entry at ({i},{j})");
                sum += v;
            }
            assert!(sum.is_one(), "row {i} does not sum to 1");
        }
        FiniteKernel {
            row_offset,
            col_offset,
            entries,
        }
    }

    pub fn row_offset(&self) -> i64 {
        self.row_offset
    }

    pub fn col_offset(&self) -> i64 {
        self.col_offset
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &RatMat {
        &self.entries
    }

    /// Entry by actual state values.
    pub fn at_states(&self, y: i64, x: i64) -> &Rational {
        self.entries
            .at((y - self.row_offset) as usize, (x - self.col_offset) as usize)
    }

    pub fn rank(&self) -> usize {
        self.entries.rank()
    }

    /// Applies the kernel to a function on the column space:
    /// (K f)(x) = Σ_y K(x,y) f(y).
    pub fn apply(&self, f: &ValueVector) -> Result<ValueVector, KernelError> {
        if f.len() != self.cols() || f.offset != self.col_offset {
            return Err(KernelError::Mismatch(format!(
                "kernel columns start at {} ({} states), function at {} ({} states)",
                self.col_offset,
                self.cols(),
                f.offset,
                f.len()
            )));
        }
        Ok(ValueVector::new(
            self.row_offset,
            self.entries.mul_vec(&f.values),
        ))
    }

    /// Kernel composition (this: W -> U, rhs: U -> V).
    pub fn compose(&self, rhs: &FiniteKernel) -> Result<FiniteKernel, KernelError> {
        if self.cols() != rhs.rows() || self.col_offset != rhs.row_offset {
            return Err(KernelError::Mismatch(
                "inner state spaces do not match".into(),
            ));
        }
        Ok(FiniteKernel::new(
            self.row_offset,
            rhs.col_offset,
            self.entries.mul(&rhs.entries),
        ))
    }

    /// Pushforward of a probability vector on the row space.
    pub fn pushforward(&self, m: &[Rational]) -> Result<ValueVector, KernelError> {
        if m.len() != self.rows() {
            return Err(KernelError::Mismatch(format!(
                "measure on {} states, kernel has {} rows",
                m.len(),
                self.rows()
            )));
        }
        Ok(ValueVector::new(self.col_offset, self.entries.vec_mul(m)))
    }

    /// JSON document with exact rational entry strings.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Doc {
            #[serde(rename = "rowOffset")]
            row_offset: i64,
            #[serde(rename = "colOffset")]
            col_offset: i64,
            entries: Vec<Vec<String>>,
        }
        let entries = (0..self.rows())
            .map(|i| self.entries.row(i).iter().map(|r| r.to_string()).collect())
            .collect();
        serde_json::to_value(Doc {
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            entries,
        })
        .expect("kernel serialization cannot fail")
    }
}

/// One-step Ehrenfest link Λ_N from `[[0,N]]` to `[[0,N+1]]`:
/// Λ_N(x,x) = Λ_N(x,x+1) = 1/2.
pub fn lambda_step(n: usize) -> FiniteKernel {
    let mut m = RatMat::zero(n + 1, n + 2);
    for x in 0..=n {
        *m.at_mut(x, x) = rat(1, 2);
        *m.at_mut(x, x + 1) = rat(1, 2);
    }
    FiniteKernel::new(0, 0, m)
}

/// Chain link Λ_{M,N}(x,y) = 2^{M-N} binom(N-M, y-x) on x <= y <= x+N-M;
/// equals the product Λ_M Λ_{M+1} ··· Λ_{N-1}.
pub fn lambda_chain(m: usize, n: usize) -> Result<FiniteKernel, KernelError> {
    if m > n {
        return Err(KernelError::BadRange { m, n });
    }
    let scale = Rational::new(BigInt::one(), BigInt::one() << (n - m));
    let mut mat = RatMat::zero(m + 1, n + 1);
    for x in 0..=m {
        for y in x..=(x + n - m) {
            *mat.at_mut(x, y) = rational_binomial((n - m) as i64, (y - x) as i64) * &scale;
        }
    }
    Ok(FiniteKernel::new(0, 0, mat))
}

/// Yule-to-Ehrenfest link Λ̂_N(x,y) = 2^{x-N} binom(N-x, y-x); row x is
/// supported on [[x, N]] and row 0 is the binomial measure.
pub fn lambda_hat(n: usize) -> FiniteKernel {
    let mut mat = RatMat::zero(n + 1, n + 1);
    for x in 0..=n {
        let scale = Rational::new(BigInt::one(), BigInt::one() << (n - x));
        for y in x..=n {
            *mat.at_mut(x, y) = rational_binomial((n - x) as i64, (y - x) as i64) * &scale;
        }
    }
    FiniteKernel::new(0, 0, mat)
}

/// Λ̂_{M,N} = I_{M,N} Λ̂_N (the first M+1 rows of Λ̂_N), which also equals
/// Λ̂_M Λ_{M,N}.
pub fn lambda_hat_chain(m: usize, n: usize) -> Result<FiniteKernel, KernelError> {
    if m > n {
        return Err(KernelError::BadRange { m, n });
    }
    let full = lambda_hat(n);
    let mut mat = RatMat::zero(m + 1, n + 1);
    for x in 0..=m {
        for y in 0..=n {
            *mat.at_mut(x, y) = full.entries.at(x, y).clone();
        }
    }
    Ok(FiniteKernel::new(0, 0, mat))
}

/// Natural embedding I_{M,N} of `[[0,M]]` into `[[0,N]]` as a Markov kernel.
pub fn identity_embedding(m: usize, n: usize) -> Result<FiniteKernel, KernelError> {
    if m > n {
        return Err(KernelError::BadRange { m, n });
    }
    let mut mat = RatMat::zero(m + 1, n + 1);
    for x in 0..=m {
        *mat.at_mut(x, x) = rat_int(1);
    }
    Ok(FiniteKernel::new(0, 0, mat))
}

/// Exact residual A·K - K·B; the zero matrix certifies the intertwining
/// relation from A to B through K.
pub fn verify_finite_intertwining(
    a: &FiniteGenerator,
    k: &FiniteKernel,
    b: &FiniteGenerator,
) -> Result<RatMat, KernelError> {
    if a.dim() != k.rows() || a.offset() != k.row_offset() {
        return Err(KernelError::Mismatch(
            "left generator does not match kernel rows".into(),
        ));
    }
    if b.dim() != k.cols() || b.offset() != k.col_offset() {
        return Err(KernelError::Mismatch(
            "right generator does not match kernel columns".into(),
        ));
    }
    Ok(a.rates().mul(&k.entries).sub(&k.entries.mul(b.rates())))
}

/// Kernel from `[[0,N]]` to R whose rows are polynomial densities against the
/// standard Gaussian. Rows built from a coefficient vector a (via
/// `lambda_a`) carry it along; arbitrary polynomial rows are allowed for
/// diagnostic kernels, as long as each row integrates to 1.
///
/// Rows are *not* required to be nonnegative here: signed kernels still
/// intertwine, and deciding nonnegativity is the feasibility module's job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermiteDensityKernel {
    n: usize,
    rows: Vec<Poly>,
    coeffs: Option<Vec<Rational>>,
}

impl HermiteDensityKernel {
    /// λ_a(y,·) = Σ_{n<=y} (a_n/n!) binom(y,n) h_n, for y in `[[0,N]]`.
    pub fn lambda_a(n: usize, a: Vec<Rational>) -> Result<Self, KernelError> {
        if a.len() != n + 1 {
            return Err(KernelError::BadLength {
                expected: n + 1,
                got: a.len(),
            });
        }
        if !a[0].is_one() {
            return Err(KernelError::BadLeadingCoefficient);
        }
        let rows = (0..=n).map(|y| lambda_a_row(&a, y)).collect();
        Ok(HermiteDensityKernel {
            n,
            rows,
            coeffs: Some(a),
        })
    }

    /// Arbitrary polynomial-density rows; each must have total mass 1.
    pub fn from_rows(rows: Vec<Poly>) -> Result<Self, KernelError> {
        assert!(!rows.is_empty());
        for (y, row) in rows.iter().enumerate() {
            if !integrate_gaussian(row).is_one() {
                return Err(KernelError::BadRowMass(y));
            }
        }
        Ok(HermiteDensityKernel {
            n: rows.len() - 1,
            rows,
            coeffs: None,
        })
    }

    /// Largest row index N (states are [[0, N]]).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, y: usize) -> &Poly {
        &self.rows[y]
    }

    pub fn coeffs(&self) -> Option<&[Rational]> {
        self.coeffs.as_deref()
    }

    /// `Λ[h_k]`: y -> ∫ h_k(x) λ(y,x) γ(dx), by exact Gaussian-moment
    /// integration of the product polynomial.
    pub fn apply_hermite(&self, k: usize) -> ValueVector {
        let h = hermite(k);
        let values = self
            .rows
            .iter()
            .map(|row| integrate_gaussian(&(&h * row)))
            .collect();
        ValueVector::new(0, values)
    }

    /// Mixture of rows under a probability vector on `[[0,N]]`, returned as
    /// exact Hermite coefficients (density Σ_k c_k h_k).
    pub fn pushforward(&self, m: &[Rational]) -> Result<Vec<Rational>, KernelError> {
        if m.len() != self.n + 1 {
            return Err(KernelError::Mismatch(format!(
                "measure on {} states, kernel has {} rows",
                m.len(),
                self.n + 1
            )));
        }
        let mut mix = Poly::zero();
        for (w, row) in m.iter().zip(&self.rows) {
            if !w.is_zero() {
                mix = &mix + &row.scale(w);
            }
        }
        Ok(to_hermite_coeffs(&mix))
    }
}

fn lambda_a_row(a: &[Rational], y: usize) -> Poly {
    let mut row = Poly::zero();
    for (n, an) in a.iter().enumerate().take(y + 1) {
        if an.is_zero() {
            continue;
        }
        let c = an / factorial(n) * rational_binomial(y as i64, n as i64);
        row = &row + &hermite(n).scale(&c);
    }
    row
}

/// Expands a polynomial in the monic Hermite basis (exact, triangular).
pub fn to_hermite_coeffs(p: &Poly) -> Vec<Rational> {
    let mut rem = p.clone();
    let deg = rem.degree().unwrap_or(0);
    let mut coeffs = vec![rat_int(0); deg + 1];
    while let Some(d) = rem.degree() {
        let c = rem.leading().unwrap().clone();
        coeffs[d] = c.clone();
        rem = &rem - &hermite(d).scale(&c);
        assert_ne!(rem.degree(), Some(d), "leading term did not cancel");
    }
    coeffs
}

/// Per-mode residual report for D_N Λ = Λ L checked on h_0..h_depth.
#[derive(Debug, Clone)]
pub struct OuIntertwiningReport {
    /// (mode n, residual vector of `G·Λ[h_n] + n·Λ[h_n]`)
    pub residuals: Vec<(usize, ValueVector)>,
}

impl OuIntertwiningReport {
    pub fn is_zero(&self) -> bool {
        self.residuals.iter().all(|(_, v)| v.is_zero())
    }

    pub fn first_nonzero_mode(&self) -> Option<usize> {
        self.residuals
            .iter()
            .find(|(_, v)| !v.is_zero())
            .map(|(n, _)| *n)
    }
}

/// Checks `G·Λ[h_n] = -n·Λ[h_n]` exactly for every n <= depth. For a kernel
/// of the λ_a form this holds at every mode (`Λ[h_n]` = a_n φ_n below N, zero
/// above); a nonzero residual pinpoints a kernel that fails to map
/// eigenspaces to eigenspaces.
pub fn verify_ou_intertwining(
    gen: &FiniteGenerator,
    kernel: &HermiteDensityKernel,
    depth: usize,
) -> Result<OuIntertwiningReport, KernelError> {
    if gen.dim() != kernel.n + 1 || gen.offset() != 0 {
        return Err(KernelError::Mismatch(
            "generator does not match kernel rows".into(),
        ));
    }
    if depth < kernel.n {
        return Err(KernelError::Mismatch(format!(
            "depth {depth} below kernel size {}",
            kernel.n
        )));
    }
    let mut residuals = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let image = kernel.apply_hermite(n);
        let g_image = gen
            .apply(&image)
            .map_err(|e| KernelError::Mismatch(e.to_string()))?;
        let res = ValueVector::new(
            0,
            g_image
                .values
                .iter()
                .zip(image.values.iter())
                .map(|(g, v)| g + v * rat_int(n as i64))
                .collect(),
        );
        residuals.push((n, res));
    }
    Ok(OuIntertwiningReport { residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{binomial_measure, ehrenfest, yule};
    use crate::polyalg::{krawtchouk, phi};
    use proptest::prelude::*;

    #[test]
    fn lambda_step_base_case() {
        let l0 = lambda_step(0);
        assert_eq!(l0.entries().row(0), &[rat(1, 2), rat(1, 2)][..]);
    }

    #[test]
    fn lambda_step_maps_krawtchouk_down() {
        // Λ_N[K_{N+1,n}] = K_{N,n}, with K_{N,N+1} = 0
        for n_big in 0..=8usize {
            let step = lambda_step(n_big);
            for n in 0..=n_big + 1 {
                let upper = krawtchouk(n_big + 1, n).unwrap();
                let image = step.apply(&upper).unwrap();
                if n <= n_big {
                    assert_eq!(image, krawtchouk(n_big, n).unwrap(), "N={n_big} n={n}");
                } else {
                    assert!(image.is_zero(), "K_{{N,N+1}} convention, N={n_big}");
                }
            }
        }
    }

    #[test]
    fn lambda_step_intertwines_ehrenfest_neighbors() {
        for n in 0..=10usize {
            let res =
                verify_finite_intertwining(&ehrenfest(n), &lambda_step(n), &ehrenfest(n + 1))
                    .unwrap();
            assert!(res.is_zero(), "N={n}");
        }
    }

    #[test]
    fn lambda_chain_examples() {
        let k = lambda_chain(1, 2).unwrap();
        assert_eq!(k.entries().row(0), &[rat(1, 2), rat(1, 2), rat_int(0)][..]);
        assert_eq!(k.entries().row(1), &[rat_int(0), rat(1, 2), rat(1, 2)][..]);
        // empty product is the identity
        let id = lambda_chain(3, 3).unwrap();
        assert_eq!(id.entries(), &RatMat::identity(4));
        assert!(lambda_chain(3, 2).is_err());
    }

    #[test]
    fn lambda_chain_matches_step_products() {
        for m in 0..=8usize {
            for n in m..=8usize {
                let closed = lambda_chain(m, n).unwrap();
                let mut prod = lambda_chain(m, m).unwrap();
                for k in m..n {
                    prod = prod.compose(&lambda_step(k)).unwrap();
                }
                assert_eq!(closed, prod, "M={m} N={n}");
            }
        }
    }

    #[test]
    fn lambda_hat_rows() {
        let k = lambda_hat(2);
        assert_eq!(k.entries().row(0), &[rat(1, 4), rat(1, 2), rat(1, 4)][..]);
        assert_eq!(k.entries().row(1), &[rat_int(0), rat(1, 2), rat(1, 2)][..]);
        assert_eq!(k.entries().row(2), &[rat_int(0), rat_int(0), rat_int(1)][..]);
        // row 0 is the binomial measure
        for n in 0..=10usize {
            let hat = lambda_hat(n);
            let pi = binomial_measure(n);
            assert_eq!(hat.entries().row(0), &pi.weights.values[..], "N={n}");
        }
    }

    #[test]
    fn lambda_hat_sends_krawtchouk_to_binomials() {
        // Λ̂_N[K_{N,n}] = 2^{-n} n! φ_n
        for n_big in 0..=8usize {
            let hat = lambda_hat(n_big);
            for n in 0..=n_big {
                let image = hat.apply(&krawtchouk(n_big, n).unwrap()).unwrap();
                let scale = factorial(n) * Rational::new(BigInt::one(), BigInt::one() << n);
                let expected = phi(n, n_big + 1).scale(&scale);
                assert_eq!(image, expected, "N={n_big} n={n}");
            }
        }
    }

    #[test]
    fn hat_chain_factorizations_agree() {
        // I_{M,N} Λ̂_N = Λ̂_M Λ_{M,N}, and both intertwine D_M with L_N
        for m in 0..=8usize {
            for n in m..=8usize {
                let via_restriction = lambda_hat_chain(m, n).unwrap();
                let via_product =
                    lambda_hat(m).compose(&lambda_chain(m, n).unwrap()).unwrap();
                assert_eq!(via_restriction, via_product, "M={m} N={n}");
                let emb = identity_embedding(m, n)
                    .unwrap()
                    .compose(&lambda_hat(n))
                    .unwrap();
                assert_eq!(via_restriction, emb);
            }
        }
    }

    #[test]
    fn intertwining_certificates_through_n_10() {
        for m in 0..=10usize {
            for n in m..=10usize {
                let chain = lambda_chain(m, n).unwrap();
                let res =
                    verify_finite_intertwining(&ehrenfest(m), &chain, &ehrenfest(n)).unwrap();
                assert!(res.is_zero(), "L_M chain M={m} N={n}");
                let hat = lambda_hat_chain(m, n).unwrap();
                let res = verify_finite_intertwining(&yule(m), &hat, &ehrenfest(n)).unwrap();
                assert!(res.is_zero(), "D_M hat M={m} N={n}");
            }
        }
    }

    #[test]
    fn chain_maps_krawtchouk_across_sizes() {
        // Λ_{M,N}[K_{N,n}] = K_{M,n} for n <= M, 0 for M < n <= N
        for m in 0..=6usize {
            for n_big in m..=6usize {
                let chain = lambda_chain(m, n_big).unwrap();
                for n in 0..=n_big {
                    let image = chain.apply(&krawtchouk(n_big, n).unwrap()).unwrap();
                    if n <= m {
                        assert_eq!(image, krawtchouk(m, n).unwrap());
                    } else {
                        assert!(image.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn specific_intertwining_examples() {
        assert!(verify_finite_intertwining(
            &ehrenfest(1),
            &lambda_chain(1, 2).unwrap(),
            &ehrenfest(2)
        )
        .unwrap()
        .is_zero());
        assert!(
            verify_finite_intertwining(&yule(2), &lambda_hat(2), &ehrenfest(2))
                .unwrap()
                .is_zero()
        );
        assert!(verify_finite_intertwining(
            &yule(1),
            &lambda_hat_chain(1, 3).unwrap(),
            &ehrenfest(3)
        )
        .unwrap()
        .is_zero());
        // mismatched shapes error out
        assert!(verify_finite_intertwining(&yule(2), &lambda_hat(3), &ehrenfest(3)).is_err());
    }

    #[test]
    fn lambda_a_rows_and_mass() {
        // trivial coefficients: every row is the constant 1
        let k = HermiteDensityKernel::lambda_a(
            3,
            vec![rat_int(1), rat_int(0), rat_int(0), rat_int(0)],
        )
        .unwrap();
        for y in 0..=3 {
            assert_eq!(k.row(y), &Poly::one());
        }
        // N=2, a=(1,0,2): row 2 density 1 + h_2 = x^2
        let k =
            HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(2)]).unwrap();
        let x2 = Poly::from_coeffs(vec![rat_int(0), rat_int(0), rat_int(1)]);
        assert_eq!(k.row(2), &x2);
        // N=3, a=(1,0,2/3,0): row 3 density also x^2
        let k = HermiteDensityKernel::lambda_a(
            3,
            vec![rat_int(1), rat_int(0), rat(2, 3), rat_int(0)],
        )
        .unwrap();
        assert_eq!(k.row(3), &x2);
        // every row has total mass 1
        for y in 0..=3 {
            assert!(integrate_gaussian(k.row(y)).is_one());
        }
        // a_0 != 1 or wrong length is rejected
        assert!(HermiteDensityKernel::lambda_a(1, vec![rat_int(2), rat_int(0)]).is_err());
        assert!(HermiteDensityKernel::lambda_a(1, vec![rat_int(1)]).is_err());
    }

    #[test]
    fn ou_intertwining_certificates() {
        let k =
            HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(1)]).unwrap();
        let report = verify_ou_intertwining(&yule(2), &k, 6).unwrap();
        assert!(report.is_zero());
        // trivial kernel: both sides vanish
        let k =
            HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(0)]).unwrap();
        assert!(verify_ou_intertwining(&yule(2), &k, 6).unwrap().is_zero());
        // depth below N is rejected
        assert!(verify_ou_intertwining(&yule(2), &k, 1).is_err());
    }

    #[test]
    fn quadratic_row_kernel_fails_mode_two() {
        // Row 1 density h_1^2 = x^2 has Λ[h_2](1) = 2, but eigenvector
        // alignment would force a_2 φ_2(1) = 0.
        let x2 = Poly::from_coeffs(vec![rat_int(0), rat_int(0), rat_int(1)]);
        let k = HermiteDensityKernel::from_rows(vec![Poly::one(), x2]).unwrap();
        let image = k.apply_hermite(2);
        assert_eq!(image.values, vec![rat_int(0), rat_int(2)]);
        let report = verify_ou_intertwining(&yule(1), &k, 4).unwrap();
        assert!(!report.is_zero());
        assert_eq!(report.first_nonzero_mode(), Some(2));
    }

    #[test]
    fn from_rows_rejects_bad_mass() {
        let h2 = hermite(2); // integrates to 0, not 1
        assert!(HermiteDensityKernel::from_rows(vec![h2]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        // δ_0 Λ̂_N = π_N and δ_N Λ̂_N = δ_N
        for n in 2..=6usize {
            let hat = lambda_hat(n);
            let mut delta0 = vec![rat_int(0); n + 1];
            delta0[0] = rat_int(1);
            let pushed = hat.pushforward(&delta0).unwrap();
            assert_eq!(pushed.values, binomial_measure(n).weights.values);
            let mut deltan = vec![rat_int(0); n + 1];
            deltan[n] = rat_int(1);
            let pushed = hat.pushforward(&deltan).unwrap();
            let mut expect = vec![rat_int(0); n + 1];
            expect[n] = rat_int(1);
            assert_eq!(pushed.values, expect);
        }
        // δ_2 under lambda_a(2,(1,0,2)) has density x^2 = 1 + h_2
        let k =
            HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(2)]).unwrap();
        let m = vec![rat_int(0), rat_int(0), rat_int(1)];
        let coeffs = k.pushforward(&m).unwrap();
        assert_eq!(coeffs, vec![rat_int(1), rat_int(0), rat_int(1)]);
    }

    #[test]
    fn kernel_json_shape() {
        let j = lambda_step(1).to_json();
        assert_eq!(j["rowOffset"], 0);
        assert_eq!(j["colOffset"], 0);
        assert_eq!(j["entries"][0][0], "1/2");
        assert_eq!(j["entries"][1][0], "0");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        /// Signed kernels intertwine regardless of nonnegativity: any a with
        /// a_0 = 1 passes the OU residual check.
        #[test]
        fn signed_kernels_always_intertwine(
            raw in proptest::collection::vec((-6i64..=6, 1i64..=4), 1..=5)
        ) {
            let mut a = vec![rat_int(1)];
            a.extend(raw.iter().map(|&(p, q)| rat(p, q)));
            let n = a.len() - 1;
            let k = HermiteDensityKernel::lambda_a(n, a).unwrap();
            let report = verify_ou_intertwining(&yule(n), &k, n + 5).unwrap();
            prop_assert!(report.is_zero());
        }

        /// Hermite basis conversion is exact in both directions.
        #[test]
        fn hermite_coeff_roundtrip(cs in proptest::collection::vec(-9i64..=9, 1..=8)) {
            let p = Poly::from_coeffs(cs.iter().map(|&c| rat_int(c)).collect());
            let coeffs = to_hermite_coeffs(&p);
            let mut back = Poly::zero();
            for (k, c) in coeffs.iter().enumerate() {
                back = &back + &hermite(k).scale(c);
            }
            prop_assert_eq!(back, p);
        }
    }
}
