//! Exact spectral evolution of initial laws under the Ornstein-Uhlenbeck
//! and Ehrenfest semigroups, separation and total-variation distances, and
//! the strong-stationary-time bound curves tv <= separation <= `P[tau > t]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Signed, Zero};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::coupling::hypo_survival;
use crate::generators::binomial_measure;
use crate::kernels::HermiteDensityKernel;
use crate::polyalg::{
    global_min, hermite, isolate_real_roots, krawtchouk, nonneg_on_reals, rat_from_f64, rat_int,
    rat_to_f64, refine_root, NonnegDecision, Poly, Rational,
};

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("Hermite measure must have c_0 = 1")]
    BadMass,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("density is negative (at x = {x}): not a probability measure")]
    NegativeDensity { x: String },
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
}

/// Probability measure on R with density Σ_n c_n h_n against the standard
/// Gaussian. c_0 = 1 pins the total mass; nonnegativity of the density is
/// *not* assumed and is checked on demand by the distance functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermiteMeasure {
    coeffs: Vec<Rational>,
}

impl HermiteMeasure {
    pub fn new(coeffs: Vec<Rational>) -> Result<Self, ConvergenceError> {
        if coeffs.first().is_none_or(|c| !c.is_one()) {
            return Err(ConvergenceError::BadMass);
        }
        Ok(HermiteMeasure { coeffs })
    }

    /// The standard Gaussian itself (density 1).
    pub fn gaussian() -> Self {
        HermiteMeasure {
            coeffs: vec![rat_int(1)],
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Density polynomial Σ_n c_n h_n in the monomial basis.
    pub fn density(&self) -> Poly {
        let mut p = Poly::zero();
        for (n, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                p = &p + &hermite(n).scale(c);
            }
        }
        p
    }

    pub fn density_nonneg(&self) -> NonnegDecision {
        nonneg_on_reals(&self.density())
    }
}

/// OU semigroup action: mode n decays by e^{-nt}. The decay factors are
/// f64 values embedded exactly into the rationals, so c_0 stays exactly 1.
pub fn ou_evolve(mu: &HermiteMeasure, t: f64) -> Result<HermiteMeasure, ConvergenceError> {
    if t < 0.0 {
        return Err(ConvergenceError::NegativeTime(t));
    }
    let coeffs = mu
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| {
            if n == 0 {
                c.clone()
            } else {
                c * rat_from_f64((-(n as f64) * t).exp())
            }
        })
        .collect();
    HermiteMeasure::new(coeffs)
}

/// Separation from the Gaussian: 1 - inf_R density, with the infimum
/// enclosed by the exact global-minimum procedure at tolerance 2^-40.
pub fn separation(mu: &HermiteMeasure) -> Result<f64, ConvergenceError> {
    if let NonnegDecision::NegativeWitness { x, .. } = mu.density_nonneg() {
        return Err(ConvergenceError::NegativeDensity { x: x.to_string() });
    }
    let p = mu.density();
    let tol = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << 40);
    let (lo, hi) = global_min(&p, &tol).expect("nonnegative density is bounded below");
    let mid = (lo + hi) * crate::polyalg::rat(1, 2);
    Ok((1.0 - rat_to_f64(&mid)).clamp(0.0, 1.0))
}

/// Total variation from the Gaussian: (1/2)∫|density - 1| dγ. The real
/// line is split at Sturm-isolated roots of density-1 and each piece is
/// integrated exactly against γ via the partial-moment recursion.
pub fn tv_distance(mu: &HermiteMeasure) -> Result<f64, ConvergenceError> {
    if let NonnegDecision::NegativeWitness { x, .. } = mu.density_nonneg() {
        return Err(ConvergenceError::NegativeDensity { x: x.to_string() });
    }
    let q = &mu.density() - &Poly::one();
    if q.is_zero() {
        return Ok(0.0);
    }
    let intervals = isolate_real_roots(&q);
    if intervals.is_empty() {
        // no sign change and ∫ q dγ = 0 forces q = 0; only reachable when
        // the density is identically 1 up to representation, handled above
        return Ok(0.0);
    }
    let sf = q.square_free_part();
    let width = Rational::new(1.into(), num_bigint::BigInt::from(1u8) << 40);
    let mut splits = Vec::with_capacity(intervals.len());
    let mut region_signs = Vec::with_capacity(intervals.len() + 1);
    // sign left of the first root
    region_signs.push(q.eval(&intervals[0].0).is_positive());
    for (a, b) in &intervals {
        let refined = refine_root(&sf, (a.clone(), b.clone()), &width);
        let mid = (rat_to_f64(&refined.0) + rat_to_f64(&refined.1)) / 2.0;
        splits.push(mid);
        // sign between this root and the next: original right endpoint is
        // strictly inside the adjacent root-free region
        region_signs.push(q.eval(b).is_positive());
    }
    let qf: Vec<f64> = q.coeffs().iter().map(rat_to_f64).collect();
    let mut total = 0.0;
    for r in 0..=splits.len() {
        let a = if r == 0 { None } else { Some(splits[r - 1]) };
        let b = if r == splits.len() {
            None
        } else {
            Some(splits[r])
        };
        let integral = integrate_against_gaussian(&qf, a, b);
        total += if region_signs[r] { integral } else { -integral };
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

/// ∫_a^b x^k φ(x) dx summed against polynomial coefficients; None bounds
/// mean ±∞.
fn integrate_against_gaussian(coeffs: &[f64], a: Option<f64>, b: Option<f64>) -> f64 {
    let deg = coeffs.len().saturating_sub(1);
    let moments = partial_moments(deg, a, b);
    coeffs.iter().zip(&moments).map(|(c, m)| c * m).sum()
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// M_k = ∫_a^b x^k φ(x) dx via M_k = (k-1)M_{k-2} + a^{k-1}φ(a) - b^{k-1}φ(b).
fn partial_moments(deg: usize, a: Option<f64>, b: Option<f64>) -> Vec<f64> {
    let (fa, cb_a) = match a {
        Some(x) => (std_normal_pdf(x), std_normal_cdf(x)),
        None => (0.0, 0.0),
    };
    let (fb, cb_b) = match b {
        Some(x) => (std_normal_pdf(x), std_normal_cdf(x)),
        None => (0.0, 1.0),
    };
    let pow = |x: Option<f64>, k: i32, f: f64| -> f64 {
        match x {
            Some(v) => v.powi(k) * f,
            None => 0.0,
        }
    };
    let mut m = Vec::with_capacity(deg + 1);
    m.push(cb_b - cb_a);
    if deg >= 1 {
        m.push(fa - fb);
    }
    for k in 2..=deg {
        let v = (k as f64 - 1.0) * m[k - 2] + pow(a, k as i32 - 1, fa) - pow(b, k as i32 - 1, fb);
        m.push(v);
    }
    m
}

/// Krawtchouk spectral data for one Ehrenfest size, cached per N.
struct KrawtchoukBasis {
    /// values[n][x] = K_{N,n}(x) as f64
    values: Vec<Vec<f64>>,
    /// 1 / ||K_{N,n}||^2 under π_N
    inv_norms: Vec<f64>,
    /// π_N as f64
    pi: Vec<f64>,
}

fn krawtchouk_basis(n: usize) -> Arc<KrawtchoukBasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<KrawtchoukBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache");
    guard
        .entry(n)
        .or_insert_with(|| {
            let pi = binomial_measure(n).weights;
            let mut values = Vec::with_capacity(n + 1);
            let mut inv_norms = Vec::with_capacity(n + 1);
            for mode in 0..=n {
                let k = krawtchouk(n, mode).expect("mode <= N");
                // exact Gram normalizer Σ_x K² π
                let mut norm = rat_int(0);
                for (kx, px) in k.values.iter().zip(pi.values.iter()) {
                    norm += kx * kx * px;
                }
                inv_norms.push(1.0 / rat_to_f64(&norm));
                values.push(k.values.iter().map(rat_to_f64).collect());
            }
            Arc::new(KrawtchoukBasis {
                values,
                inv_norms,
                pi: pi.values.iter().map(rat_to_f64).collect(),
            })
        })
        .clone()
}

/// Spectral evolution of a law under the Ehrenfest semigroup: expand the
/// π_N-density in the Krawtchouk basis, decay mode n by e^{-nt}, recombine.
pub fn ehrenfest_evolve(n: usize, m0: &[f64], t: f64) -> Result<Vec<f64>, ConvergenceError> {
    if t < 0.0 {
        return Err(ConvergenceError::NegativeTime(t));
    }
    if m0.len() != n + 1 {
        return Err(ConvergenceError::Mismatch(format!(
            "law on {} states, Ehrenfest size {n} needs {}",
            m0.len(),
            n + 1
        )));
    }
    let total: f64 = m0.iter().sum();
    if m0.iter().any(|&p| p < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(ConvergenceError::InvalidProbability(format!(
            "entries >= 0 and sum 1 required (sum = {total})"
        )));
    }
    let basis = krawtchouk_basis(n);
    let mut coords = Vec::with_capacity(n + 1);
    for mode in 0..=n {
        let g: f64 = m0
            .iter()
            .zip(&basis.values[mode])
            .map(|(m, k)| m * k)
            .sum::<f64>()
            * basis.inv_norms[mode];
        coords.push(g * (-(mode as f64) * t).exp());
    }
    let mut out = Vec::with_capacity(n + 1);
    for x in 0..=n {
        let mut density = 0.0;
        for mode in 0..=n {
            density += coords[mode] * basis.values[mode][x];
        }
        out.push(basis.pi[x] * density);
    }
    Ok(out)
}

/// Separation of a law from π_N: max_x (1 - p(x)/π_N(x)).
pub fn separation_from_binomial(n: usize, p: &[f64]) -> f64 {
    let basis = krawtchouk_basis(n);
    let mut sep: f64 = 0.0;
    for (px, pix) in p.iter().zip(&basis.pi) {
        sep = sep.max(1.0 - px / pix);
    }
    sep.clamp(0.0, 1.0)
}

/// Total variation of a law from π_N.
pub fn tv_from_binomial(n: usize, p: &[f64]) -> f64 {
    let basis = krawtchouk_basis(n);
    0.5 * p
        .iter()
        .zip(&basis.pi)
        .map(|(px, pix)| (px - pix).abs())
        .sum::<f64>()
}

/// Which equilibrium the evolved law is compared against.
pub enum ConvergenceTarget {
    /// Yule → OU kernel: evolve m0·Λ_a under the OU semigroup toward γ.
    OrnsteinUhlenbeck(HermiteDensityKernel),
    /// Yule → Ehrenfest via Λ̂_N: evolve m0·Λ̂_N toward π_N.
    Ehrenfest(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct CurveRow {
    pub t: f64,
    pub tv: f64,
    pub separation: f64,
    pub bound: f64,
}

/// Rows of (t, tv, separation, strong-stationary-time bound); the
/// inequality chain tv <= separation <= bound <= 1 holds on every row, up
/// to float round-off in the cases where separation and bound coincide
/// exactly.
#[derive(Debug, Clone)]
pub struct SeparationCurve {
    pub rows: Vec<CurveRow>,
}

impl SeparationCurve {
    /// Indices of rows violating the chain beyond `slack`.
    pub fn chain_violations(&self, slack: f64) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                !(r.tv >= -slack
                    && r.tv <= r.separation + slack
                    && r.separation <= r.bound + slack
                    && r.bound <= 1.0 + slack)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Plot-ready CSV with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,tv,separation,bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                sig12(r.t),
                sig12(r.tv),
                sig12(r.separation),
                sig12(r.bound)
            ));
        }
        out
    }
}

fn sig12(x: f64) -> String {
    format!("{:.11e}", x)
}

/// Builds the convergence curve for a Yule chain started from m0 linked to
/// its target by Λ: bound(t) = Σ_y m0(y)·P[ℰ(1)*...*ℰ(y) > t], separation
/// and tv from the exactly evolved law of the target chain.
pub fn bound_curve(
    target: &ConvergenceTarget,
    m0: &[Rational],
    tgrid: &[f64],
) -> Result<SeparationCurve, ConvergenceError> {
    let total = m0.iter().fold(rat_int(0), |acc, p| acc + p);
    if !total.is_one() || m0.iter().any(|p| p.is_negative()) {
        return Err(ConvergenceError::InvalidProbability(
            "m0 must be an exact probability vector".into(),
        ));
    }
    let bound_at = |t: f64| -> f64 {
        m0.iter()
            .enumerate()
            .map(|(y, w)| rat_to_f64(w) * hypo_survival(y, t).expect("t >= 0"))
            .sum()
    };
    let mut rows = Vec::with_capacity(tgrid.len());
    match target {
        ConvergenceTarget::OrnsteinUhlenbeck(kernel) => {
            if m0.len() != kernel.n() + 1 {
                return Err(ConvergenceError::Mismatch(
                    "m0 does not match kernel rows".into(),
                ));
            }
            let mu0 = HermiteMeasure::new(
                kernel
                    .pushforward(m0)
                    .map_err(|e| ConvergenceError::Mismatch(e.to_string()))?,
            )?;
            for &t in tgrid {
                let mu = ou_evolve(&mu0, t)?;
                rows.push(CurveRow {
                    t,
                    tv: tv_distance(&mu)?,
                    separation: separation(&mu)?,
                    bound: bound_at(t),
                });
            }
        }
        ConvergenceTarget::Ehrenfest(n) => {
            if m0.len() != n + 1 {
                return Err(ConvergenceError::Mismatch(
                    "m0 does not match Ehrenfest size".into(),
                ));
            }
            let hat = crate::kernels::lambda_hat(*n);
            let p0 = hat
                .pushforward(m0)
                .map_err(|e| ConvergenceError::Mismatch(e.to_string()))?;
            let p0_f: Vec<f64> = p0.values.iter().map(rat_to_f64).collect();
            for &t in tgrid {
                let pt = ehrenfest_evolve(*n, &p0_f, t)?;
                rows.push(CurveRow {
                    t,
                    tv: tv_from_binomial(*n, &pt),
                    separation: separation_from_binomial(*n, &pt),
                    bound: bound_at(t),
                });
            }
        }
    }
    Ok(SeparationCurve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::rat;
    use proptest::prelude::*;

    fn measure(cs: &[(i64, i64)]) -> HermiteMeasure {
        HermiteMeasure::new(cs.iter().map(|&(p, q)| rat(p, q)).collect()).unwrap()
    }

    #[test]
    fn ou_evolve_cases() {
        let mu = measure(&[(1, 1), (0, 1), (1, 1)]);
        let same = ou_evolve(&mu, 0.0).unwrap();
        assert_eq!(same, mu);
        let t = 0.7;
        let evolved = ou_evolve(&mu, t).unwrap();
        assert!(evolved.coeffs()[0].is_one());
        let expect = (-2.0 * t).exp();
        assert!((rat_to_f64(&evolved.coeffs()[2]) - expect).abs() < 1e-16);
        // long time: everything but the mass dies
        let late = ou_evolve(&mu, 500.0).unwrap();
        assert!(rat_to_f64(&late.coeffs()[2]) < 1e-300);
        assert!(ou_evolve(&mu, -0.1).is_err());
    }

    #[test]
    fn separation_cases() {
        assert_eq!(separation(&HermiteMeasure::gaussian()).unwrap(), 0.0);
        // density x² = 1 + h_2: infimum 0, separation 1
        let mu = measure(&[(1, 1), (0, 1), (1, 1)]);
        assert!((separation(&mu).unwrap() - 1.0).abs() < 1e-9);
        // density 1 + e^{-2t} h_2: separation e^{-2t}
        for t in [0.3, 1.0, 2.5] {
            let mu = ou_evolve(&measure(&[(1, 1), (0, 1), (1, 1)]), t).unwrap();
            assert!((separation(&mu).unwrap() - (-2.0 * t).exp()).abs() < 1e-9);
        }
        // negative density is rejected
        let bad = measure(&[(1, 1), (0, 1), (-1, 1)]);
        assert!(matches!(
            separation(&bad),
            Err(ConvergenceError::NegativeDensity { .. })
        ));
    }

    /// Independent quadrature oracle for (1/2)∫ |p - 1| dγ over a wide
    /// window: composite midpoint rule, fine enough that the kink at the
    /// sign changes stays below 1e-9.
    fn tv_quadrature(p: &Poly) -> f64 {
        let coeffs: Vec<f64> = p.coeffs().iter().map(rat_to_f64).collect();
        let eval = |x: f64| -> f64 {
            let mut acc = 0.0;
            for c in coeffs.iter().rev() {
                acc = acc * x + c;
            }
            acc
        };
        let mut acc = 0.0;
        let steps = 4_000_000;
        let lo = -12.0;
        let hi = 12.0;
        let h = (hi - lo) / steps as f64;
        for i in 0..steps {
            let x = lo + (i as f64 + 0.5) * h;
            acc += (eval(x) - 1.0).abs() * std_normal_pdf(x) * h;
        }
        0.5 * acc
    }

    #[test]
    fn tv_cases() {
        assert_eq!(tv_distance(&HermiteMeasure::gaussian()).unwrap(), 0.0);
        let mu = measure(&[(1, 1), (0, 1), (1, 1)]); // density x²
        let tv = tv_distance(&mu).unwrap();
        let oracle = tv_quadrature(&mu.density());
        assert!((tv - oracle).abs() < 1e-8, "{tv} vs {oracle}");
        // a sharper oracle still: closed form ∫|x²-1|dγ = 4φ(1)
        let exact = 4.0 * std_normal_pdf(1.0) / 2.0;
        assert!((tv - exact).abs() < 1e-10, "{tv} vs {exact}");
        let evolved = ou_evolve(&mu, 0.8).unwrap();
        let tv = tv_distance(&evolved).unwrap();
        let oracle = tv_quadrature(&evolved.density());
        assert!((tv - oracle).abs() < 1e-8);
        // degree-4 density with two sign-change pairs
        let quartic = measure(&[(1, 1), (0, 1), (1, 2), (0, 1), (1, 30)]);
        assert!(quartic.density_nonneg().is_nonnegative());
        let tv = tv_distance(&quartic).unwrap();
        let oracle = tv_quadrature(&quartic.density());
        assert!((tv - oracle).abs() < 1e-8, "{tv} vs {oracle}");
    }

    #[test]
    fn ehrenfest_evolve_cases() {
        // stationarity of π_N
        for n in 1..=6usize {
            let pi: Vec<f64> = binomial_measure(n)
                .weights
                .values
                .iter()
                .map(rat_to_f64)
                .collect();
            for t in [0.0, 0.5, 3.0] {
                let evolved = ehrenfest_evolve(n, &pi, t).unwrap();
                for (a, b) in evolved.iter().zip(&pi) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
        // t = 0 is the identity
        let m0 = [0.0, 0.0, 1.0];
        let evolved = ehrenfest_evolve(2, &m0, 0.0).unwrap();
        for (a, b) in evolved.iter().zip(&m0) {
            assert!((a - b).abs() < 1e-12);
        }
        // long time: convergence to π_2 = (1/4, 1/2, 1/4)
        let late = ehrenfest_evolve(2, &m0, 60.0).unwrap();
        for (a, b) in late.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
        // mass conservation within 1e-12
        let p = ehrenfest_evolve(5, &[0.1, 0.2, 0.3, 0.2, 0.1, 0.1], 0.37).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // invalid laws are rejected
        assert!(ehrenfest_evolve(2, &[0.5, 0.6, 0.5], 1.0).is_err());
        assert!(ehrenfest_evolve(2, &m0, -1.0).is_err());
    }

    /// Dense matrix exponential via scaling and squaring, for the oracle.
    fn expm(a: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
        let n = a.len();
        let norm: f64 = a
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let s = ((norm * t).log2().ceil().max(0.0)) as u32 + 1;
        let scale = t / 2f64.powi(s as i32);
        // Taylor series of exp(A·scale)
        let mut result = vec![vec![0.0; n]; n];
        for i in 0..n {
            result[i][i] = 1.0;
        }
        let mut term = result.clone();
        for k in 1..=24 {
            term = mat_mul(&term, a);
            for r in term.iter_mut() {
                for v in r.iter_mut() {
                    *v *= scale / k as f64;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..s {
            result = mat_mul(&result, &result);
        }
        result
    }

    fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn ehrenfest_evolve_matches_matrix_exponential() {
        for n in 1..=6usize {
            let gen = crate::generators::ehrenfest(n);
            let a: Vec<Vec<f64>> = (0..=n)
                .map(|i| gen.rates().row(i).iter().map(rat_to_f64).collect())
                .collect();
            for &t in &[0.35, 1.0] {
                let et = expm(&a, t);
                // law evolution is m0 · e^{tL}
                let m0: Vec<f64> = {
                    let mut v = vec![0.0; n + 1];
                    v[n] = 1.0;
                    v
                };
                let spectral = ehrenfest_evolve(n, &m0, t).unwrap();
                for x in 0..=n {
                    let direct: f64 = (0..=n).map(|y| m0[y] * et[y][x]).sum();
                    assert!(
                        (spectral[x] - direct).abs() < 1e-10,
                        "N={n} t={t} x={x}: {} vs {direct}",
                        spectral[x]
                    );
                }
            }
        }
    }

    #[test]
    fn bound_curve_ou_boundary_case() {
        // m0 = δ_2, Λ = lambda_a(2,(1,0,2)): separation(t) = e^{-2t} and
        // bound(t) = 2e^{-t} - e^{-2t}
        let kernel = HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(2)])
            .unwrap();
        let m0 = vec![rat_int(0), rat_int(0), rat_int(1)];
        let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        let curve = bound_curve(
            &ConvergenceTarget::OrnsteinUhlenbeck(kernel),
            &m0,
            &grid,
        )
        .unwrap();
        assert!(curve.chain_violations(1e-9).is_empty());
        for row in &curve.rows {
            let sep_expect = (-2.0 * row.t).exp();
            let bound_expect = 2.0 * (-row.t).exp() - (-2.0 * row.t).exp();
            assert!((row.separation - sep_expect).abs() < 1e-9);
            assert!((row.bound - bound_expect).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_curve_from_stationarity_is_flat_zero() {
        // m0 = δ_0: already stationary, bound identically 0
        let kernel =
            HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(2)]).unwrap();
        let m0 = vec![rat_int(1), rat_int(0), rat_int(0)];
        let grid = [0.5, 1.0];
        let curve =
            bound_curve(&ConvergenceTarget::OrnsteinUhlenbeck(kernel), &m0, &grid).unwrap();
        for row in &curve.rows {
            assert_eq!(row.bound, 0.0);
            assert!(row.separation < 1e-9);
            assert!(row.tv < 1e-9);
        }
    }

    #[test]
    fn bound_curve_ehrenfest_target() {
        let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
        for n in 1..=6usize {
            let mut m0 = vec![rat_int(0); n + 1];
            m0[n] = rat_int(1);
            let curve = bound_curve(&ConvergenceTarget::Ehrenfest(n), &m0, &grid).unwrap();
            assert!(
                curve.chain_violations(1e-9).is_empty(),
                "N={n}: {:?}",
                curve.chain_violations(1e-9)
            );
            // the bound here is exactly 1 - (1-e^{-t})^N
            for row in &curve.rows {
                let expect = hypo_survival(n, row.t).unwrap();
                assert!((row.bound - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separation_is_nonincreasing_under_ou() {
        let mu0 = measure(&[(1, 1), (0, 1), (1, 2), (0, 1), (1, 50)]);
        assert!(mu0.density_nonneg().is_nonnegative());
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let mu = ou_evolve(&mu0, 0.25 * i as f64).unwrap();
            let s = separation(&mu).unwrap();
            assert!(s <= last + 1e-12);
            last = s;
        }
    }

    #[test]
    fn csv_has_twelve_significant_digits() {
        let curve = SeparationCurve {
            rows: vec![CurveRow {
                t: 0.1,
                tv: 0.123456789012345,
                separation: 0.5,
                bound: 1.0,
            }],
        };
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,tv,separation,bound"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.00000000000e-1,1.23456789012e-1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// tv <= separation for nonnegative Hermite measures (degree <= 6),
        /// and nonnegativity propagates under the OU flow.
        #[test]
        fn tv_below_separation_and_positivity_flows(
            c2 in 0i64..=9,
            c4 in 0i64..=4,
            c6 in 0i64..=2,
            t in 0u8..=30
        ) {
            let mu = measure(&[(1, 1), (0, 1), (c2, 10), (0, 1), (c4, 100), (0, 1), (c6, 2000)]);
            prop_assume!(mu.density_nonneg().is_nonnegative());
            let sep = separation(&mu).unwrap();
            let tv = tv_distance(&mu).unwrap();
            prop_assert!(tv <= sep + 1e-9, "tv {tv} vs sep {sep}");
            let evolved = ou_evolve(&mu, t as f64 / 10.0).unwrap();
            prop_assert!(evolved.density_nonneg().is_nonnegative());
        }
    }
}
