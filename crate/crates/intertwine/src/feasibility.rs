//! Membership in the feasibility regions: 𝒜_N for Yule → OU kernels (the
//! coefficient vectors whose Hermite densities stay nonnegative), the exact
//! a_2 boundary, and executable negativity witnesses for the two
//! triviality results (Ehrenfest → OU and reverse-Yule → OU).

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::kernels::HermiteDensityKernel;
use crate::polyalg::{
    factorial, hermite, krawtchouk, nonneg_on_reals, phi_tilde, rat, rat_int, rational_binomial,
    NonnegDecision, Poly, Rational,
};

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("coefficient vector must start with a_0 = 1")]
    BadLeadingCoefficient,
    #[error("coefficient vector must have length {expected}, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("operation requires a nontrivial coefficient vector")]
    TrivialInput,
    #[error("a_2 boundary needs N >= 2")]
    BelowMinimumN,
    #[error("prefix restriction needs M <= N")]
    BadRange,
    #[error("precondition failed: vector is not a member of the feasibility region")]
    NotMember,
}

/// Coefficient vector a with a_0 = 1, indexing the kernels Λ_a.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffVector {
    a: Vec<Rational>,
}

impl CoeffVector {
    pub fn new(a: Vec<Rational>) -> Result<Self, FeasibilityError> {
        use num_traits::One;
        if a.is_empty() || !a[0].is_one() {
            return Err(FeasibilityError::BadLeadingCoefficient);
        }
        Ok(CoeffVector { a })
    }

    /// (1, 0, ..., 0) of length n+1.
    pub fn trivial(n: usize) -> Self {
        let mut a = vec![rat_int(0); n + 1];
        a[0] = rat_int(1);
        CoeffVector { a }
    }

    pub fn values(&self) -> &[Rational] {
        &self.a
    }

    /// Number of coefficients (never zero: a_0 is always present).
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.a.len()
    }

    /// True when every coefficient beyond a_0 vanishes.
    pub fn is_trivial(&self) -> bool {
        self.a[1..].iter().all(|v| v.is_zero())
    }

    /// Largest index >= 1 with a nonzero coefficient.
    pub fn top_nonzero(&self) -> Option<usize> {
        (1..self.a.len()).rev().find(|&i| !self.a[i].is_zero())
    }

    pub fn prefix(&self, m: usize) -> CoeffVector {
        CoeffVector {
            a: self.a[..=m].to_vec(),
        }
    }
}

/// A certified point of negativity: row y evaluates to `value < 0` at x0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub y: i64,
    pub x0: Rational,
    pub value: Rational,
}

impl Witness {
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "y": self.y,
            "x0": self.x0.to_string(),
            "value": self.value.to_string(),
        })
    }
}

/// Outcome of a membership query. `member` is true exactly when no witness
/// and no parity violation was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub member: bool,
    pub witness: Option<Witness>,
    pub parity_violation: Option<usize>,
}

impl FeasibilityReport {
    fn member() -> Self {
        FeasibilityReport {
            member: true,
            witness: None,
            parity_violation: None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Doc {
            member: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            witness: Option<serde_json::Value>,
            #[serde(rename = "parityViolation", skip_serializing_if = "Option::is_none")]
            parity_violation: Option<usize>,
        }
        serde_json::to_value(Doc {
            member: self.member,
            witness: self.witness.as_ref().map(|w| w.to_json()),
            parity_violation: self.parity_violation,
        })
        .expect("report serialization cannot fail")
    }
}

/// Decides a ∈ 𝒜_N: first the parity screen (odd coefficients must vanish,
/// even ones must be nonnegative — both forced by the tail of the top
/// Hermite term), then exact row-by-row nonnegativity, lowest row first.
pub fn check_membership_a(
    n: usize,
    a: &CoeffVector,
) -> Result<FeasibilityReport, FeasibilityError> {
    if a.len() != n + 1 {
        return Err(FeasibilityError::BadLength {
            expected: n + 1,
            got: a.len(),
        });
    }
    for (idx, coeff) in a.values().iter().enumerate().skip(1) {
        let violates = if idx % 2 == 1 {
            !coeff.is_zero()
        } else {
            coeff.is_negative()
        };
        if violates {
            return Ok(FeasibilityReport {
                member: false,
                witness: None,
                parity_violation: Some(idx),
            });
        }
    }
    match row_negativity_witness(n, a)? {
        Some(w) => Ok(FeasibilityReport {
            member: false,
            witness: Some(w),
            parity_violation: None,
        }),
        None => Ok(FeasibilityReport::member()),
    }
}

/// Pure row scan without the parity screen: the complete (slower) decision,
/// also used to cross-certify the screen.
pub fn row_negativity_witness(
    n: usize,
    a: &CoeffVector,
) -> Result<Option<Witness>, FeasibilityError> {
    let kernel =
        HermiteDensityKernel::lambda_a(n, a.values().to_vec()).map_err(|_| {
            FeasibilityError::BadLength {
                expected: n + 1,
                got: a.len(),
            }
        })?;
    for y in 0..=n {
        if let NonnegDecision::NegativeWitness { x, value } = nonneg_on_reals(kernel.row(y)) {
            return Ok(Some(Witness {
                y: y as i64,
                x0: x,
                value,
            }));
        }
    }
    Ok(None)
}

/// Exact boundary of the one-parameter slice (1, 0, a_2, 0, ..., 0):
/// sup{a_2 >= 0 : a ∈ 𝒜_N}. The binding row is y = N via the Hermite
/// minimum h_2(0) = -1, giving 2/binom(N,2); both sides of the boundary are
/// re-certified by the membership decision before the value is returned.
pub fn max_a2(n: usize) -> Result<Rational, FeasibilityError> {
    if n < 2 {
        return Err(FeasibilityError::BelowMinimumN);
    }
    let threshold = rat(2, 1) / rational_binomial(n as i64, 2);
    let eps = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << 40);
    let at = |s: &Rational| -> Result<bool, FeasibilityError> {
        let mut a = vec![rat_int(0); n + 1];
        a[0] = rat_int(1);
        a[2] = s.clone();
        let cv = CoeffVector::new(a).expect("a_0 = 1");
        Ok(check_membership_a(n, &cv)?.member)
    };
    assert!(at(&threshold)?, "threshold must be feasible");
    assert!(
        !at(&(&threshold + &eps))?,
        "threshold + 2^-40 must be infeasible"
    );
    Ok(threshold)
}

/// Restriction property: a verified member of 𝒜_N restricts to 𝒜_M for
/// M <= N. Errs when the precondition (membership in 𝒜_N) fails.
pub fn restriction_check(n: usize, m: usize, a: &CoeffVector) -> Result<bool, FeasibilityError> {
    if m > n {
        return Err(FeasibilityError::BadRange);
    }
    if !check_membership_a(n, a)?.member {
        return Err(FeasibilityError::NotMember);
    }
    Ok(check_membership_a(m, &a.prefix(m))?.member)
}

/// Candidate Ehrenfest → OU row density per the moment expansion:
/// Σ_n K_{N,n}(y) (a_n/n!) h_n.
pub fn ehrenfest_ou_row(n: usize, a: &CoeffVector, y: i64) -> Poly {
    let mut row = Poly::zero();
    for (idx, an) in a.values().iter().enumerate() {
        if an.is_zero() {
            continue;
        }
        let k = krawtchouk(n, idx).expect("idx <= N by construction");
        let c = k.at(y) * an / factorial(idx);
        row = &row + &hermite(idx).scale(&c);
    }
    row
}

/// Reverse-Yule → OU row density: Σ_n (a_n/n!) φ̃_n(y) h_n on y ∈ [[-N,0]],
/// with φ̃_0 ≡ 1 (terms with 1 <= n <= -y vanish on their own).
pub fn reverse_row(n: usize, a: &CoeffVector, y: i64) -> Poly {
    let mut row = Poly::zero();
    for (idx, an) in a.values().iter().enumerate() {
        if an.is_zero() {
            continue;
        }
        let phi_val = if idx == 0 {
            rat_int(1)
        } else {
            phi_tilde(idx, n).expect("idx >= 1").at(y).clone()
        };
        if phi_val.is_zero() {
            continue;
        }
        let c = phi_val * an / factorial(idx);
        row = &row + &hermite(idx).scale(&c);
    }
    row
}

/// Negativity witness realizing the triviality of Ehrenfest → OU
/// intertwinings: pick the top nonzero mode n_0, choose the lowest y with
/// K_{N,n_0}(y)·a_{n_0} < 0 (one exists since K_{N,n_0} integrates to zero
/// against π_N), and certify the negative tail exactly.
pub fn ehrenfest_ou_witness(n: usize, a: &CoeffVector) -> Result<Witness, FeasibilityError> {
    if a.len() != n + 1 {
        return Err(FeasibilityError::BadLength {
            expected: n + 1,
            got: a.len(),
        });
    }
    let Some(n0) = a.top_nonzero() else {
        return Err(FeasibilityError::TrivialInput);
    };
    let k = krawtchouk(n, n0).expect("n0 <= N");
    let a_top = &a.values()[n0];
    let y0 = (0..=n as i64)
        .find(|&y| (k.at(y) * a_top).is_negative())
        .expect("K_{N,n0} takes both signs");
    let row = ehrenfest_ou_row(n, a, y0);
    match nonneg_on_reals(&row) {
        NonnegDecision::NegativeWitness { x, value } => {
            debug_assert!(row.eval(&x).is_negative());
            Ok(Witness { y: y0, x0: x, value })
        }
        NonnegDecision::Nonnegative => {
            unreachable!("row with negative leading term cannot be nonnegative")
        }
    }
}

/// Negativity witness realizing 𝒜̃_N = {(1,0,...,0)}: on [[-n_0+1, 0]] the
/// sign of φ̃_{n_0} alternates as (-1)^y, so some row has a negative top
/// coefficient (or an odd-degree top term), and its tail goes negative.
pub fn reverse_witness(n: usize, a: &CoeffVector) -> Result<Witness, FeasibilityError> {
    if a.len() != n + 1 {
        return Err(FeasibilityError::BadLength {
            expected: n + 1,
            got: a.len(),
        });
    }
    let Some(n0) = a.top_nonzero() else {
        return Err(FeasibilityError::TrivialInput);
    };
    let a_top = &a.values()[n0];
    let y0 = if n0 % 2 == 1 {
        0 // odd top degree: the y = 0 row always carries it with weight 1
    } else if a_top.is_positive() {
        -1 // φ̃_{n0}(-1) < 0 flips the leading coefficient negative
    } else {
        0
    };
    let row = reverse_row(n, a, y0);
    match nonneg_on_reals(&row) {
        NonnegDecision::NegativeWitness { x, value } => {
            debug_assert!(row.eval(&x).is_negative());
            Ok(Witness { y: y0, x0: x, value })
        }
        NonnegDecision::Nonnegative => {
            unreachable!("selected row has a sign-changing or negative tail")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::yule;
    use crate::kernels::verify_ou_intertwining;
    use proptest::prelude::*;

    fn cv(vals: &[(i64, i64)]) -> CoeffVector {
        CoeffVector::new(vals.iter().map(|&(p, q)| rat(p, q)).collect()).unwrap()
    }

    #[test]
    fn membership_examples() {
        // boundary of the L_2 lemma: a_2 = 2 is still a member
        let r = check_membership_a(2, &cv(&[(1, 1), (0, 1), (2, 1)])).unwrap();
        assert!(r.member);
        // a_2 = 1 at N = 3 exceeds 2/3: witness at y = 3, value -1/2 at 0
        let r = check_membership_a(3, &cv(&[(1, 1), (0, 1), (1, 1), (0, 1)])).unwrap();
        assert!(!r.member);
        let w = r.witness.unwrap();
        assert_eq!(w.y, 3);
        assert_eq!(w.x0, rat_int(0));
        assert_eq!(w.value, rat(-1, 2));
        // trivial vector is always a member
        for n in 0..=6 {
            let r = check_membership_a(n, &CoeffVector::trivial(n)).unwrap();
            assert!(r.member);
        }
        // length mismatch errors
        assert!(check_membership_a(4, &cv(&[(1, 1), (0, 1)])).is_err());
        // a_0 != 1 cannot even be constructed
        assert!(CoeffVector::new(vec![rat_int(2)]).is_err());
    }

    #[test]
    fn parity_screen_fires() {
        let r = check_membership_a(3, &cv(&[(1, 1), (1, 2), (0, 1), (0, 1)])).unwrap();
        assert!(!r.member);
        assert_eq!(r.parity_violation, Some(1));
        // negative even coefficient is screened too
        let r = check_membership_a(2, &cv(&[(1, 1), (0, 1), (-1, 1)])).unwrap();
        assert!(!r.member);
        assert_eq!(r.parity_violation, Some(2));
    }

    #[test]
    fn max_a2_exact_values() {
        assert_eq!(max_a2(2).unwrap(), rat_int(2));
        assert_eq!(max_a2(3).unwrap(), rat(2, 3));
        assert_eq!(max_a2(4).unwrap(), rat(1, 3));
        assert!(max_a2(1).is_err());
    }

    #[test]
    fn max_a2_matches_bisection_oracle() {
        // independent bisection over the membership decision
        for n in 2..=6usize {
            let member = |s: &Rational| {
                let mut a = vec![rat_int(0); n + 1];
                a[0] = rat_int(1);
                a[2] = s.clone();
                check_membership_a(n, &CoeffVector::new(a).unwrap())
                    .unwrap()
                    .member
            };
            let mut lo = rat_int(0);
            let mut hi = rat_int(4);
            assert!(member(&lo) && !member(&hi));
            for _ in 0..40 {
                let mid = (&lo + &hi) * rat(1, 2);
                if member(&mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let exact = max_a2(n).unwrap();
            assert!(lo <= exact && exact <= hi, "N={n}");
        }
    }

    #[test]
    fn max_a2_is_nonincreasing() {
        let boundary: Vec<Rational> = (2..=8).map(|n| max_a2(n).unwrap()).collect();
        for w in boundary.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn restriction_examples() {
        assert!(restriction_check(3, 2, &cv(&[(1, 1), (0, 1), (2, 3), (0, 1)])).unwrap());
        let a = cv(&[(1, 1), (0, 1), (2, 1)]);
        assert!(restriction_check(2, 2, &a).unwrap());
        // not a member of A_3, so the precondition fails
        let bad = cv(&[(1, 1), (0, 1), (1, 1), (0, 1)]);
        assert!(matches!(
            restriction_check(3, 2, &bad),
            Err(FeasibilityError::NotMember)
        ));
        assert!(restriction_check(2, 3, &a).is_err());
    }

    #[test]
    fn ehrenfest_witness_examples() {
        // N=1, a=(1, 1/10): row 0 has a negative slope, so the tail dips
        let w = ehrenfest_ou_witness(1, &cv(&[(1, 1), (1, 10)])).unwrap();
        assert_eq!(w.y, 0);
        let row = ehrenfest_ou_row(1, &cv(&[(1, 1), (1, 10)]), w.y);
        assert!(row.eval(&w.x0).is_negative());
        // N=2, a=(1,0,1/2): top mode 2, K_{2,2} negative at y=1
        let a = cv(&[(1, 1), (0, 1), (1, 2)]);
        let w = ehrenfest_ou_witness(2, &a).unwrap();
        assert_eq!(w.y, 1);
        assert!(ehrenfest_ou_row(2, &a, w.y).eval(&w.x0).is_negative());
        // trivial input is an error
        assert!(matches!(
            ehrenfest_ou_witness(3, &CoeffVector::trivial(3)),
            Err(FeasibilityError::TrivialInput)
        ));
    }

    #[test]
    fn reverse_witness_examples() {
        // N=2, a=(1,0,1/10): even top mode, positive coefficient -> y = -1
        let a = cv(&[(1, 1), (0, 1), (1, 10)]);
        let w = reverse_witness(2, &a).unwrap();
        assert_eq!(w.y, -1);
        assert!(reverse_row(2, &a, w.y).eval(&w.x0).is_negative());
        // N=1, any a_1 != 0: odd leading term
        for c in [rat(1, 3), rat(-2, 1)] {
            let a = CoeffVector::new(vec![rat_int(1), c]).unwrap();
            let w = reverse_witness(1, &a).unwrap();
            assert_eq!(w.y, 0);
            assert!(reverse_row(1, &a, w.y).eval(&w.x0).is_negative());
        }
        assert!(matches!(
            reverse_witness(2, &CoeffVector::trivial(2)),
            Err(FeasibilityError::TrivialInput)
        ));
    }

    #[test]
    fn reverse_row_uses_phi_tilde_supports() {
        // row at y = -N only keeps modes n > N plus the constant; within
        // length N+1 that leaves the constant alone
        let a = cv(&[(1, 1), (0, 1), (3, 1)]);
        let row = reverse_row(2, &a, -2);
        assert_eq!(row, Poly::one());
        // the trivial vector gives the constant-1 density at every level
        for y in -2..=0 {
            assert_eq!(reverse_row(2, &CoeffVector::trivial(2), y), Poly::one());
        }
    }

    #[test]
    fn report_serializes_with_rational_strings() {
        let r = check_membership_a(3, &cv(&[(1, 1), (0, 1), (1, 1), (0, 1)])).unwrap();
        let j = r.to_json();
        assert_eq!(j["member"], false);
        assert_eq!(j["witness"]["value"], "-1/2");
        assert!(j.get("parityViolation").is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Odd nonzero coefficients are rejected by the screen and,
        /// independently, by the pure row scan.
        #[test]
        fn parity_double_certification(
            n in 1usize..=6,
            num in 1i64..=5,
            den in 1i64..=4,
            rest in proptest::collection::vec(0i64..=2, 0..=5)
        ) {
            let odd_idx = if n % 2 == 1 { n } else { n - 1 };
            let mut a = vec![rat_int(0); n + 1];
            a[0] = rat_int(1);
            a[odd_idx] = rat(num, den);
            for (k, &v) in rest.iter().enumerate() {
                let idx = 2 * (k + 1);
                if idx <= n && idx != odd_idx {
                    a[idx] = rat(v, 7);
                }
            }
            let cvec = CoeffVector::new(a).unwrap();
            let screened = check_membership_a(n, &cvec).unwrap();
            prop_assert!(!screened.member);
            prop_assert!(screened.parity_violation.is_some());
            let witness = row_negativity_witness(n, &cvec).unwrap();
            prop_assert!(witness.is_some());
        }

        /// Membership implies a genuine Markov intertwining: accepted
        /// vectors produce kernels with exactly-zero OU residuals.
        #[test]
        fn members_intertwine(
            n in 2usize..=5,
            num in 0i64..=2,
            den in 3i64..=9
        ) {
            let mut a = vec![rat_int(0); n + 1];
            a[0] = rat_int(1);
            a[2] = rat(num, den * (n as i64));
            let cvec = CoeffVector::new(a.clone()).unwrap();
            let report = check_membership_a(n, &cvec).unwrap();
            prop_assert!(report.member);
            let kernel = HermiteDensityKernel::lambda_a(n, a).unwrap();
            let res = verify_ou_intertwining(&yule(n), &kernel, n + 5).unwrap();
            prop_assert!(res.is_zero());
        }

        /// Witness soundness on random nontrivial vectors.
        #[test]
        fn witnesses_are_sound(
            n in 1usize..=6,
            coeffs in proptest::collection::vec((-4i64..=4, 1i64..=5), 1..=6)
        ) {
            let mut a = vec![rat_int(0); n + 1];
            a[0] = rat_int(1);
            let mut any = false;
            for (k, &(p, q)) in coeffs.iter().enumerate() {
                let idx = 1 + (k % n);
                if idx <= n && p != 0 {
                    a[idx] = rat(p, q);
                    any = true;
                }
            }
            prop_assume!(any);
            let cvec = CoeffVector::new(a).unwrap();
            let w = ehrenfest_ou_witness(n, &cvec).unwrap();
            prop_assert!(ehrenfest_ou_row(n, &cvec, w.y).eval(&w.x0).is_negative());
            prop_assert!(w.value.is_negative());
            let w = reverse_witness(n, &cvec).unwrap();
            prop_assert!(reverse_row(n, &cvec, w.y).eval(&w.x0).is_negative());
            prop_assert!(w.value.is_negative());
        }
    }
}
