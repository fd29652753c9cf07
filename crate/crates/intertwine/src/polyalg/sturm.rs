//! Sturm-sequence real-root counting and the two decision procedures built
//! on it: exact nonnegativity of a rational polynomial over all of R, and a
//! rigorous enclosure of its global minimum.

use num_traits::{Signed, Zero};

use super::{rat, rat_int, Poly, PolyalgError, Rational};

/// Outcome of the exact `p >= 0 on R` decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonnegDecision {
    Nonnegative,
    /// A rational point with `p(x) < 0`, together with the (negative) value.
    NegativeWitness { x: Rational, value: Rational },
}

impl NonnegDecision {
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, NonnegDecision::Nonnegative)
    }
}

struct SturmChain {
    chain: Vec<Poly>,
}

impl SturmChain {
    /// Expects a square-free input.
    fn new(p: &Poly) -> Self {
        let mut chain = vec![p.positive_normalized(), p.derivative().positive_normalized()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push((-&r).positive_normalized());
        }
        SturmChain { chain }
    }

    fn variations<I: Iterator<Item = i8>>(signs: I) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for s in signs {
            if s == 0 {
                continue;
            }
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn variations_at(&self, x: &Rational) -> usize {
        Self::variations(self.chain.iter().map(|p| sign_rat(&p.eval(x))))
    }

    fn variations_at_infinity(&self, positive: bool) -> usize {
        Self::variations(self.chain.iter().map(|p| match p.degree() {
            None => 0,
            Some(d) => {
                let s = sign_rat(p.leading().unwrap());
                if positive || d % 2 == 0 {
                    s
                } else {
                    -s
                }
            }
        }))
    }

    /// Number of distinct real roots in the open interval (a, b); both
    /// endpoints must be non-roots.
    fn count_in(&self, a: &Rational, b: &Rational) -> usize {
        self.variations_at(a) - self.variations_at(b)
    }

    fn count_all(&self) -> usize {
        self.variations_at_infinity(false) - self.variations_at_infinity(true)
    }
}

fn sign_rat(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// An integer B with every real root of `p` strictly inside (-B, B) and
/// `p(±B) != 0`.
fn root_bound(p: &Poly) -> Rational {
    let lead = p.leading().expect("nonzero polynomial").abs();
    let mut m = rat_int(0);
    for c in p.coeffs() {
        let a = c.abs();
        if a > m {
            m = a;
        }
    }
    let mut b = (m / lead).ceil() + rat_int(2);
    while p.eval(&b).is_zero() || p.eval(&(-b.clone())).is_zero() {
        b *= rat_int(2);
    }
    b
}

/// Isolating intervals for every distinct real root of `p` (any nonzero
/// polynomial; isolation runs on its square-free part). Returns disjoint,
/// ascending open intervals (a, b), each containing exactly one root, with
/// `p(a) != 0 != p(b)`.
pub fn isolate_real_roots(p: &Poly) -> Vec<(Rational, Rational)> {
    assert!(!p.is_zero());
    let sf = p.square_free_part();
    if sf.degree() == Some(0) {
        return Vec::new();
    }
    let chain = SturmChain::new(&sf);
    let total = chain.count_all();
    if total == 0 {
        return Vec::new();
    }
    let b = root_bound(&sf);
    let mut out = Vec::with_capacity(total);
    subdivide(&chain, &sf, &(-b.clone()), &b, total, &mut out);
    out
}

fn subdivide(
    chain: &SturmChain,
    sf: &Poly,
    a: &Rational,
    b: &Rational,
    count: usize,
    out: &mut Vec<(Rational, Rational)>,
) {
    if count == 0 {
        return;
    }
    if count == 1 {
        out.push((a.clone(), b.clone()));
        return;
    }
    let mid = split_point(sf, a, b);
    let left = chain.count_in(a, &mid);
    subdivide(chain, sf, a, &mid, left, out);
    subdivide(chain, sf, &mid, b, count - left, out);
}

/// A point strictly inside (a, b) that is not a root of `sf`.
fn split_point(sf: &Poly, a: &Rational, b: &Rational) -> Rational {
    let half = rat(1, 2);
    let mid = (a + b) * &half;
    if !sf.eval(&mid).is_zero() {
        return mid;
    }
    // Nudge by shrinking offsets; only finitely many roots can collide.
    let mut offset = (b - a) * rat(1, 4);
    loop {
        let cand = &mid + &offset;
        if cand < *b && !sf.eval(&cand).is_zero() {
            return cand;
        }
        offset *= &half;
    }
}

/// Shrinks an isolating interval of a simple root of `sf` below `width` by
/// bisection. May return a degenerate interval (a == b) when the root is
/// hit exactly.
pub fn refine_root(sf: &Poly, interval: (Rational, Rational), width: &Rational) -> (Rational, Rational) {
    let (mut a, mut b) = interval;
    let mut fa = sf.eval(&a);
    debug_assert!(!fa.is_zero() && !sf.eval(&b).is_zero());
    let half = rat(1, 2);
    while &(&b - &a) > width {
        let mid = (&a + &b) * &half;
        let fm = sf.eval(&mid);
        if fm.is_zero() {
            return (mid.clone(), mid);
        }
        if sign_rat(&fm) == sign_rat(&fa) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    (a, b)
}

/// Exact decision of `p(x) >= 0 for all real x`.
///
/// `p >= 0` on R iff p is zero, or p has even degree, positive leading
/// coefficient and no sign change anywhere — equivalently every region
/// between consecutive distinct real roots evaluates positive. The regions
/// are sampled at exact rational points obtained from Sturm isolation, so
/// the decision is complete. Witness extraction tries a handful of small
/// candidate points first, then falls back to the isolation samples.
pub fn nonneg_on_reals(p: &Poly) -> NonnegDecision {
    if p.is_zero() {
        return NonnegDecision::Nonnegative;
    }
    // Cheap candidates double as witness normalization: spec-level callers
    // expect e.g. x = 0 for x^2 - 1.
    for cand in [
        rat_int(0),
        rat(1, 2),
        rat(-1, 2),
        rat_int(1),
        rat_int(-1),
        rat_int(2),
        rat_int(-2),
    ] {
        let v = p.eval(&cand);
        if v.is_negative() {
            return NonnegDecision::NegativeWitness { x: cand, value: v };
        }
    }
    let deg = p.degree().unwrap();
    let lead_negative = p.leading().unwrap().is_negative();
    if deg % 2 == 1 || lead_negative {
        // Negative tail: march outward until the sign shows up.
        let mut m = rat_int(4);
        loop {
            for cand in [m.clone(), -m.clone()] {
                let v = p.eval(&cand);
                if v.is_negative() {
                    return NonnegDecision::NegativeWitness { x: cand, value: v };
                }
            }
            m *= rat_int(2);
        }
    }
    if deg == 0 {
        // Positive constant (negative ones were caught above).
        return NonnegDecision::Nonnegative;
    }
    let intervals = isolate_real_roots(p);
    // Sample one point in every maximal root-free region: the first left
    // endpoint, then every right endpoint.
    let mut samples = Vec::with_capacity(intervals.len() + 1);
    if let Some((a0, _)) = intervals.first() {
        samples.push(a0.clone());
    }
    for (_, bi) in &intervals {
        samples.push(bi.clone());
    }
    for s in samples {
        let v = p.eval(&s);
        debug_assert!(!v.is_zero());
        if v.is_negative() {
            return NonnegDecision::NegativeWitness { x: s, value: v };
        }
    }
    NonnegDecision::Nonnegative
}

/// Rigorous enclosure `[lo, hi]` of `inf_R p` with `hi - lo <= tol`.
///
/// Requires p bounded below (even degree and positive leading coefficient,
/// or constant); the minimum is then attained at a critical point, so the
/// enclosure is the min over Sturm-isolated roots of p' of interval bounds
/// on p around each root.
pub fn global_min(p: &Poly, tol: &Rational) -> Result<(Rational, Rational), PolyalgError> {
    assert!(tol.is_positive());
    match p.degree() {
        None => return Ok((rat_int(0), rat_int(0))),
        Some(0) => {
            let c = p.coeff(0);
            return Ok((c.clone(), c));
        }
        Some(d) => {
            if d % 2 == 1 || p.leading().unwrap().is_negative() {
                return Err(PolyalgError::UnboundedBelow);
            }
        }
    }
    let dp = p.derivative();
    let dp_sf = dp.square_free_part();
    let intervals = isolate_real_roots(&dp);
    debug_assert!(!intervals.is_empty());
    let mut best: Option<(Rational, Rational)> = None;
    for (a, b) in intervals {
        let enc = enclose_at_critical(p, &dp_sf, (a, b), tol);
        best = Some(match best {
            None => enc,
            Some((lo, hi)) => (lo.min(enc.0), hi.min(enc.1)),
        });
    }
    Ok(best.unwrap())
}

/// Encloses p(r) for the single root r of dp_sf inside the interval.
fn enclose_at_critical(
    p: &Poly,
    dp_sf: &Poly,
    interval: (Rational, Rational),
    tol: &Rational,
) -> (Rational, Rational) {
    let dp_bound_base = p.derivative();
    let (mut a, mut b) = interval;
    loop {
        if a == b {
            let v = p.eval(&a);
            return (v.clone(), v);
        }
        // |p(r) - p(m)| <= max|p'| on [a,b] * (b - a)
        let m_bound = poly_abs_bound(&dp_bound_base, &a, &b);
        let width = &b - &a;
        let err = &m_bound * &width;
        if err <= (tol * rat(1, 2)) {
            let mid = (&a + &b) * rat(1, 2);
            let v = p.eval(&mid);
            return (&v - &err, &v + &err);
        }
        let refined = refine_root(dp_sf, (a, b), &(width * rat(1, 2)));
        a = refined.0;
        b = refined.1;
    }
}

/// Crude upper bound for |q| on [a, b]: sum of |coeff| * max(|a|,|b|)^k.
fn poly_abs_bound(q: &Poly, a: &Rational, b: &Rational) -> Rational {
    let m = a.abs().max(b.abs()).max(rat_int(1));
    let mut acc = rat_int(0);
    let mut pow = rat_int(1);
    for c in q.coeffs() {
        acc += c.abs() * &pow;
        pow *= &m;
    }
    acc
}
