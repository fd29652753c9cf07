//! The generator families: Ehrenfest L_N on `[[0,N]]`, the pure-death Yule
//! D_N on `[[0,N]]`, the reverse Yule family on `[[-N,0]]` and the
//! Ornstein-Uhlenbeck operator acting on polynomials. All spectral claims
//! are certified against the closed-form eigenvectors in exact arithmetic;
//! no numerical eigensolver is involved anywhere.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::RatMat;
use crate::polyalg::{rat, rat_int, rational_binomial, Poly, Rational, ValueVector};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("dimension mismatch: generator on {gen} states, vector on {vec}")]
    DimensionMismatch { gen: usize, vec: usize },
    #[error("offset mismatch: generator starts at {gen}, vector at {vec}")]
    OffsetMismatch { gen: i64, vec: i64 },
}

/// Markov generator on a contiguous integer window: nonnegative off-diagonal
/// rates, rows summing to exactly zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGenerator {
    offset: i64,
    rates: RatMat,
}

impl FiniteGenerator {
    pub fn new(offset: i64, rates: RatMat) -> Self {
        assert_eq!(rates.rows(), rates.cols(), "generator must be square");
        for i in 0..rates.rows() {
            let mut sum = rat_int(0);
            for j in 0..rates.cols() {
                let v = rates.at(i, j);
                if i != j {
                    assert!(!v.is_negative(), "negative off-diagonal rate at ({i},{j})");
                }
                sum += v;
            }
            assert!(sum.is_zero(), "row {i} does not sum to zero");
        }
        FiniteGenerator { offset, rates }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.rates.rows()
    }

    pub fn rates(&self) -> &RatMat {
        &self.rates
    }

    /// Rate from state `x` to state `y` (actual state values, not indices).
    pub fn rate(&self, x: i64, y: i64) -> &Rational {
        self.rates
            .at((x - self.offset) as usize, (y - self.offset) as usize)
    }

    /// Largest |diagonal| entry, the uniformization threshold.
    pub fn max_diagonal_magnitude(&self) -> Rational {
        let mut m = rat_int(0);
        for i in 0..self.dim() {
            let a = self.rates.at(i, i).abs();
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Applies the generator to a function vector: (L f)(x) = Σ_y L(x,y)f(y).
    pub fn apply(&self, f: &ValueVector) -> Result<ValueVector, GeneratorError> {
        if f.len() != self.dim() {
            return Err(GeneratorError::DimensionMismatch {
                gen: self.dim(),
                vec: f.len(),
            });
        }
        if f.offset != self.offset {
            return Err(GeneratorError::OffsetMismatch {
                gen: self.offset,
                vec: f.offset,
            });
        }
        Ok(ValueVector::new(self.offset, self.rates.mul_vec(&f.values)))
    }
}

/// Ehrenfest generator on [[0, N]]: x -> x+1 at rate (N-x)/2, x -> x-1 at
/// rate x/2.
pub fn ehrenfest(n: usize) -> FiniteGenerator {
    let dim = n + 1;
    let mut m = RatMat::zero(dim, dim);
    for x in 0..dim {
        let up = rat((n - x) as i64, 2);
        let down = rat(x as i64, 2);
        if x + 1 < dim {
            *m.at_mut(x, x + 1) = up.clone();
        }
        if x > 0 {
            *m.at_mut(x, x - 1) = down.clone();
        }
        // up + down = N/2 for every state, so the diagonal is constant
        *m.at_mut(x, x) = -(up + down);
    }
    FiniteGenerator::new(0, m)
}

/// Yule pure-death generator on [[0, N]]: x -> x-1 at rate x, 0 absorbing.
pub fn yule(n: usize) -> FiniteGenerator {
    let dim = n + 1;
    let mut m = RatMat::zero(dim, dim);
    for x in 1..dim {
        *m.at_mut(x, x - 1) = rat_int(x as i64);
        *m.at_mut(x, x) = rat_int(-(x as i64));
    }
    FiniteGenerator::new(0, m)
}

/// Reverse Yule generator on [[-N, 0]]: y -> y-1 at rate 1-y for
/// y > -N, with -N absorbing.
pub fn reverse_yule(n: usize) -> FiniteGenerator {
    let dim = n + 1;
    let mut m = RatMat::zero(dim, dim);
    for idx in 1..dim {
        // idx corresponds to the state y = idx - N
        let y = idx as i64 - n as i64;
        *m.at_mut(idx, idx - 1) = rat_int(1 - y);
        *m.at_mut(idx, idx) = rat_int(y - 1);
    }
    FiniteGenerator::new(-(n as i64), m)
}

/// The Ornstein-Uhlenbeck operator f -> f'' - x f' on polynomials.
#[derive(Debug, Clone, Copy, Default)]
pub struct OuOperator;

impl OuOperator {
    pub fn apply(&self, f: &Poly) -> Poly {
        ou_apply(f)
    }
}

/// f'' - x f', exactly.
pub fn ou_apply(f: &Poly) -> Poly {
    let d1 = f.derivative();
    let d2 = d1.derivative();
    &d2 - &(&Poly::x() * &d1)
}

/// Exact eigen-residual `gen·v + lambda·v`; the zero vector certifies that
/// (v, -lambda) is an eigenpair of the generator.
pub fn check_eigen(
    gen: &FiniteGenerator,
    v: &ValueVector,
    lambda: &Rational,
) -> Result<ValueVector, GeneratorError> {
    let lv = gen.apply(v)?;
    let values = lv
        .values
        .iter()
        .zip(v.values.iter())
        .map(|(a, b)| a + b * lambda)
        .collect();
    Ok(ValueVector::new(v.offset, values))
}

/// The binomial(N, 1/2) distribution, invariant and reversible for L_N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialMeasure {
    pub n: usize,
    pub weights: ValueVector,
}

pub fn binomial_measure(n: usize) -> BinomialMeasure {
    let denom = Rational::new(num_bigint::BigInt::from(1), num_bigint::BigInt::from(1) << n);
    let values: Vec<Rational> = (0..=n as i64)
        .map(|x| rational_binomial(n as i64, x) * &denom)
        .collect();
    let total: Rational = values.iter().fold(rat_int(0), |a, b| a + b);
    assert_eq!(total, rat_int(1));
    BinomialMeasure {
        n,
        weights: ValueVector::new(0, values),
    }
}
