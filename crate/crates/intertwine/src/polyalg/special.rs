//! The special families used throughout: Hermite polynomials h_n (orthogonal
//! for the standard Gaussian, monic), Krawtchouk value vectors K_{N,n}
//! (eigenfunctions of the Ehrenfest generator), and the binomial
//! eigenfunctions of the Yule and reverse-Yule generators.

use num_bigint::BigInt;
use num_traits::One;

use super::{rat, rat_int, Poly, PolyalgError, Rational, ValueVector};

/// `n!` as an exact rational.
pub fn factorial(n: usize) -> Rational {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    Rational::from_integer(acc)
}

/// `binom(m, k)` with the usual conventions: 0 when k < 0 or k > m.
pub fn rational_binomial(m: i64, k: i64) -> Rational {
    if k < 0 || k > m || m < 0 {
        return rat_int(0);
    }
    let k = k.min(m - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k {
        num *= BigInt::from(m - j);
        den *= BigInt::from(j + 1);
    }
    Rational::new(num, den)
}

/// Monic Hermite polynomial h_n, built by the three-term recurrence
/// h_{n+1} = x h_n - n h_{n-1}, h_0 = 1, h_1 = x.
pub fn hermite(n: usize) -> Poly {
    let mut prev = Poly::one();
    if n == 0 {
        return prev;
    }
    let mut cur = Poly::x();
    let x = Poly::x();
    for k in 1..n {
        let next = &(&x * &cur) - &prev.scale(&rat_int(k as i64));
        prev = cur;
        cur = next;
    }
    cur
}

/// Krawtchouk values (K_{N,n}(x))_{x in `[[0,N]]`}: K_{N,n}(x) is n! times the
/// coefficient of z^n in (1 + z/2)^x (1 - z/2)^{N-x}.
pub fn krawtchouk(big_n: usize, n: usize) -> Result<ValueVector, PolyalgError> {
    if n > big_n {
        return Err(PolyalgError::IndexOutOfRange(n));
    }
    let nfac = factorial(n);
    let mut values = Vec::with_capacity(big_n + 1);
    for x in 0..=big_n {
        let gen = generating_series(x, big_n - x, big_n);
        values.push(&gen[n] * &nfac);
    }
    Ok(ValueVector::new(0, values))
}

/// Coefficients in z of (1 + z/2)^a (1 - z/2)^b, up to degree `deg`.
fn generating_series(a: usize, b: usize, deg: usize) -> Vec<Rational> {
    let mut coeffs = vec![rat_int(0); deg + 1];
    coeffs[0] = rat_int(1);
    let half = rat(1, 2);
    let neg_half = rat(-1, 2);
    for _ in 0..a {
        mul_linear(&mut coeffs, &half);
    }
    for _ in 0..b {
        mul_linear(&mut coeffs, &neg_half);
    }
    coeffs
}

/// In-place truncated multiplication by (1 + c z).
fn mul_linear(coeffs: &mut [Rational], c: &Rational) {
    for k in (1..coeffs.len()).rev() {
        let t = &coeffs[k - 1] * c;
        coeffs[k] = &coeffs[k] + &t;
    }
}

/// Yule eigenfunction values: y -> binom(y, n) on [[0, length-1]].
pub fn phi(n: usize, length: usize) -> ValueVector {
    assert!(length > 0);
    let values = (0..length as i64)
        .map(|y| rational_binomial(y, n as i64))
        .collect();
    ValueVector::new(0, values)
}

/// Reverse-Yule eigenfunction values on [[-N, 0]]:
/// y -> (-1)^y binom(n-1, -y), for n >= 1.
pub fn phi_tilde(n: usize, big_n: usize) -> Result<ValueVector, PolyalgError> {
    if n == 0 {
        return Err(PolyalgError::PhiTildeZero);
    }
    let values = (-(big_n as i64)..=0)
        .map(|y| {
            let b = rational_binomial(n as i64 - 1, -y);
            if y.rem_euclid(2) == 1 {
                -b
            } else {
                b
            }
        })
        .collect();
    Ok(ValueVector::new(-(big_n as i64), values))
}
