//! Exact rational polynomial arithmetic, the generating-function special
//! families (Hermite, Krawtchouk, binomial eigenfunctions) and the real-root
//! decision procedures built on Sturm sequences.

mod poly;
mod special;
mod sturm;

pub use poly::{gaussian_moment, integrate_gaussian, Poly};
pub use special::{factorial, hermite, krawtchouk, phi, phi_tilde, rational_binomial};
pub use sturm::{global_min, isolate_real_roots, nonneg_on_reals, refine_root, NonnegDecision};

use num_bigint::BigInt;
use thiserror::Error;

/// Arbitrary-precision rational. `num_rational::BigRational` keeps the value
/// reduced with a positive denominator, which is exactly the representation
/// invariant we need.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyalgError {
    #[error("index {0} exceeds the admissible range")]
    IndexOutOfRange(usize),
    #[error("phi_tilde requires n >= 1 (use the all-ones vector for n = 0)")]
    PhiTildeZero,
    #[error("polynomial is unbounded below, no global minimum")]
    UnboundedBelow,
}

/// `n/d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer `n` as an exact rational.
pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Conversion to f64 that stays accurate for huge numerators/denominators
/// (plain `numer/denom` overflows to `inf/inf = NaN` past ~2^1023).
pub fn rat_to_f64(r: &Rational) -> f64 {
    use num_traits::{Signed, ToPrimitive, Zero};
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let n = r.numer().abs();
    let d = r.denom().clone();
    // Keep ~96 significant bits in the integer quotient, then rescale.
    let shift = n.bits() as i64 - d.bits() as i64 - 96;
    let q = if shift >= 0 {
        (n >> shift as u64) / d
    } else {
        (n << (-shift) as u64) / d
    };
    let v = q.to_f64().unwrap_or(f64::INFINITY) * powi2(shift);
    if neg {
        -v
    } else {
        v
    }
}

fn powi2(e: i64) -> f64 {
    // 2^e without going through powf; e stays modest in practice.
    if e >= 0 {
        if e > 1023 {
            f64::INFINITY
        } else {
            f64::from_bits(((1023 + e) as u64) << 52)
        }
    } else if e < -1022 {
        0.0
    } else {
        f64::from_bits(((1023 + e) as u64) << 52)
    }
}

/// Exact rational value of an f64 (every finite float is rational).
pub fn rat_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

/// Values of a function on a contiguous integer window `offset..offset+len`.
///
/// The discrete eigenfunctions here live on `[[0,N]]` or `[[-N,0]]`; keeping
/// the offset explicit avoids the translation bugs a 0-based shift invites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueVector {
    pub offset: i64,
    pub values: Vec<Rational>,
}

impl ValueVector {
    pub fn new(offset: i64, values: Vec<Rational>) -> Self {
        assert!(!values.is_empty(), "ValueVector must be nonempty");
        ValueVector { offset, values }
    }

    /// All-ones vector on `offset..offset+len`.
    pub fn ones(offset: i64, len: usize) -> Self {
        ValueVector::new(offset, vec![rat_int(1); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at integer state `s` (must lie in the window).
    pub fn at(&self, s: i64) -> &Rational {
        let idx = s - self.offset;
        assert!(
            idx >= 0 && (idx as usize) < self.values.len(),
            "state {s} outside window starting at {}",
            self.offset
        );
        &self.values[idx as usize]
    }

    pub fn is_zero(&self) -> bool {
        use num_traits::Zero;
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn scale(&self, c: &Rational) -> ValueVector {
        ValueVector::new(self.offset, self.values.iter().map(|v| v * c).collect())
    }
}
