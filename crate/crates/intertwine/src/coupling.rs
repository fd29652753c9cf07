//! Uniformized Diaconis-Fill coupling of an intertwined pair. Both chains
//! share one Poisson(θ) event clock; at each event the X-component moves by
//! K = I + L^X/θ and the Y-component by the conditional rule
//! P(y' | y, x') = K̂(y,y') Λ(y',x') / (K̂Λ)(y,x'), which keeps
//! `ℒ(X_t | Y_[0,t])` = Λ(Y_t, ·) exactly. All transition tables are built in
//! exact arithmetic and only cast to floats for sampling.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::generators::FiniteGenerator;
use crate::kernels::{verify_finite_intertwining, FiniteKernel};
use crate::linalg::RatMat;
use crate::polyalg::{rat_int, rat_to_f64, Rational};

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("intertwining residual is nonzero; the pair is not coupled by this link")]
    IntertwiningFailed,
    #[error("uniformization rate {theta} is below a diagonal magnitude {needed}")]
    ThetaTooSmall { theta: String, needed: String },
    #[error("uniformization rate must be positive")]
    ThetaNotPositive,
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
}

/// Joint state of the coupled pair, in actual state values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointState {
    pub x: i64,
    pub y: i64,
}

/// Piecewise-constant joint path: the state holds between consecutive event
/// times. Only change events are recorded (plus the initial one at time 0).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub events: Vec<(f64, JointState)>,
    pub horizon: f64,
}

impl Trajectory {
    /// State at time t (last event at or before t).
    pub fn state_at(&self, t: f64) -> JointState {
        let mut cur = self.events[0].1;
        for &(time, s) in &self.events {
            if time > t {
                break;
            }
            cur = s;
        }
        cur
    }
}

/// First event time at which the Y-component sits at its absorbing state 0,
/// or None when it is not reached before the horizon.
pub fn absorption_time(traj: &Trajectory) -> Option<f64> {
    traj.events.iter().find(|(_, s)| s.y == 0).map(|(t, _)| *t)
}

/// The uniformized pair: K = I + L^X/θ, K̂ = I + L^Y/θ, the link Λ, and the
/// exact conditional tables of the Diaconis-Fill step rule.
pub struct UniformizedPair {
    theta: Rational,
    theta_f64: f64,
    x_offset: i64,
    y_offset: i64,
    k: RatMat,
    k_hat: RatMat,
    link: FiniteKernel,
    /// cond[y][x'] = exact conditional distribution of y' (None when (y,x')
    /// is unreachable, i.e. (ΛK)(y,x') = 0)
    cond: Vec<Vec<Option<Vec<Rational>>>>,
    // float caches for sampling
    k_cdf: Vec<Vec<f64>>,
    link_cdf: Vec<Vec<f64>>,
    cond_cdf: Vec<Vec<Option<Vec<f64>>>>,
}

impl UniformizedPair {
    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    pub fn k(&self) -> &RatMat {
        &self.k
    }

    pub fn k_hat(&self) -> &RatMat {
        &self.k_hat
    }

    pub fn link(&self) -> &FiniteKernel {
        &self.link
    }

    pub fn x_states(&self) -> usize {
        self.k.rows()
    }

    pub fn y_states(&self) -> usize {
        self.k_hat.rows()
    }

    pub fn x_offset(&self) -> i64 {
        self.x_offset
    }

    pub fn y_offset(&self) -> i64 {
        self.y_offset
    }

    /// Exact conditional distribution of y' given (y, x'), when reachable.
    pub fn conditional(&self, y: i64, x_next: i64) -> Option<&Vec<Rational>> {
        self.cond[(y - self.y_offset) as usize][(x_next - self.x_offset) as usize].as_ref()
    }
}

/// Builds the coupling after certifying L^Y Λ = Λ L^X exactly and checking
/// θ against both diagonals. The discrete identity K̂Λ = ΛK then holds
/// algebraically and is asserted entry by entry.
pub fn build_coupling(
    ly: &FiniteGenerator,
    link: &FiniteKernel,
    lx: &FiniteGenerator,
    theta: Rational,
) -> Result<UniformizedPair, CouplingError> {
    let residual = verify_finite_intertwining(ly, link, lx)
        .map_err(|e| CouplingError::Mismatch(e.to_string()))?;
    if !residual.is_zero() {
        return Err(CouplingError::IntertwiningFailed);
    }
    if !theta.is_positive() {
        return Err(CouplingError::ThetaNotPositive);
    }
    for gen in [lx, ly] {
        let needed = gen.max_diagonal_magnitude();
        if theta < needed {
            return Err(CouplingError::ThetaTooSmall {
                theta: theta.to_string(),
                needed: needed.to_string(),
            });
        }
    }
    let k = uniformize(lx, &theta);
    let k_hat = uniformize(ly, &theta);

    // K̂Λ = ΛK, exactly (equivalent to the generator-level intertwining).
    let lhs = k_hat.mul(link.entries());
    let rhs = link.entries().mul(&k);
    assert_eq!(lhs, rhs, "uniformized intertwining must hold exactly");

    let ny = k_hat.rows();
    let nx = k.rows();
    let mut cond: Vec<Vec<Option<Vec<Rational>>>> = Vec::with_capacity(ny);
    for y in 0..ny {
        let mut per_y = Vec::with_capacity(nx);
        for xn in 0..nx {
            let denom = rhs.at(y, xn); // (ΛK)(y, x')
            if denom.is_zero() {
                per_y.push(None);
                continue;
            }
            let probs: Vec<Rational> = (0..ny)
                .map(|yn| k_hat.at(y, yn) * link.entries().at(yn, xn) / denom)
                .collect();
            let total = probs.iter().fold(rat_int(0), |acc, p| acc + p);
            assert!(total.is_one(), "conditional row must sum to exactly 1");
            per_y.push(Some(probs));
        }
        cond.push(per_y);
    }

    let k_cdf = (0..nx).map(|i| cdf_row(k.row(i))).collect();
    let link_cdf = (0..ny).map(|i| cdf_row(link.entries().row(i))).collect();
    let cond_cdf = cond
        .iter()
        .map(|per_y| {
            per_y
                .iter()
                .map(|c| c.as_ref().map(|p| cdf_row(p)))
                .collect()
        })
        .collect();

    Ok(UniformizedPair {
        theta_f64: rat_to_f64(&theta),
        theta,
        x_offset: lx.offset(),
        y_offset: ly.offset(),
        k,
        k_hat,
        link: link.clone(),
        cond,
        k_cdf,
        link_cdf,
        cond_cdf,
    })
}

fn uniformize(gen: &FiniteGenerator, theta: &Rational) -> RatMat {
    let n = gen.dim();
    let inv = theta.recip();
    let mut m = RatMat::zero(n, n);
    let mut row_ok = true;
    for i in 0..n {
        let mut sum = rat_int(0);
        for j in 0..n {
            let mut v = gen.rates().at(i, j) * &inv;
            if i == j {
                v += rat_int(1);
            }
            row_ok &= !v.is_negative();
            sum += &v;
            *m.at_mut(i, j) = v;
        }
        assert!(sum.is_one());
    }
    assert!(row_ok, "theta below diagonal magnitude");
    m
}

fn cdf_row(row: &[Rational]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = row
        .iter()
        .map(|p| {
            acc += rat_to_f64(p);
            acc
        })
        .collect();
    // Cap at the last positive-mass index so float round-off in the cumsum
    // can never push a draw onto a zero-probability tail entry.
    if let Some(last) = row.iter().rposition(|p| p.is_positive()) {
        cdf[last] = f64::MAX;
    }
    cdf
}

fn sample_cdf<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    for (i, &c) in cdf.iter().enumerate() {
        if u < c {
            return i;
        }
    }
    cdf.len() - 1
}

/// One Diaconis-Fill event: X moves by K, then Y moves by the conditional
/// rule given the new X position.
pub fn step<R: Rng>(pair: &UniformizedPair, s: JointState, rng: &mut R) -> JointState {
    let xi = (s.x - pair.x_offset) as usize;
    let yi = (s.y - pair.y_offset) as usize;
    debug_assert!(pair.link.entries().at(yi, xi).is_positive());
    let xn = sample_cdf(&pair.k_cdf[xi], rng);
    let cond = pair.cond_cdf[yi][xn]
        .as_ref()
        .expect("reached (y, x') must have positive probability");
    let yn = sample_cdf(cond, rng);
    JointState {
        x: xn as i64 + pair.x_offset,
        y: yn as i64 + pair.y_offset,
    }
}

/// Runs the coupled chain to the horizon: Y_0 ~ m0, X_0 ~ Λ(Y_0,·), events
/// at exponential(θ) spacings. The support invariant Λ(Y_t, X_t) > 0 is
/// asserted at every event.
pub fn simulate<R: Rng>(
    pair: &UniformizedPair,
    m0: &[Rational],
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory, CouplingError> {
    if horizon < 0.0 {
        return Err(CouplingError::NegativeTime(horizon));
    }
    if m0.len() != pair.y_states() {
        return Err(CouplingError::Mismatch(format!(
            "initial law on {} states, Y has {}",
            m0.len(),
            pair.y_states()
        )));
    }
    let total = m0.iter().fold(rat_int(0), |acc, p| acc + p);
    if !total.is_one() || m0.iter().any(|p| p.is_negative()) {
        return Err(CouplingError::Mismatch(
            "initial law must be a probability vector".into(),
        ));
    }
    let m0_cdf = cdf_row(m0);
    let yi = sample_cdf(&m0_cdf, rng);
    let xi = sample_cdf(&pair.link_cdf[yi], rng);
    assert!(
        pair.link.entries().at(yi, xi).is_positive(),
        "initial draw must land in the link support"
    );
    let mut state = JointState {
        x: xi as i64 + pair.x_offset,
        y: yi as i64 + pair.y_offset,
    };
    let mut events = vec![(0.0, state)];
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen();
        // u = 0 would give a zero holding time; keep times strictly increasing
        t += (-(1.0 - u).ln() / pair.theta_f64).max(f64::MIN_POSITIVE);
        if t > horizon {
            break;
        }
        let next = step(pair, state, rng);
        assert!(
            pair.link
                .entries()
                .at((next.y - pair.y_offset) as usize, (next.x - pair.x_offset) as usize)
                .is_positive(),
            "support invariant violated"
        );
        if next != state {
            events.push((t, next));
            state = next;
        }
    }
    Ok(Trajectory { events, horizon })
}

/// Counter-based RNG for trajectory `index` of a batch: same (seed, index)
/// always yields the same stream, independent of worker count.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates `count` trajectories, fanned out over `workers` threads when
/// given; output order is by trajectory index either way.
pub fn simulate_batch(
    pair: &UniformizedPair,
    m0: &[Rational],
    horizon: f64,
    seed: u64,
    count: usize,
    workers: Option<usize>,
) -> Result<Vec<Trajectory>, CouplingError> {
    use rayon::prelude::*;
    let run = || -> Result<Vec<Trajectory>, CouplingError> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trajectory_rng(seed, i);
                simulate(pair, m0, horizon, &mut rng)
            })
            .collect()
    };
    match workers {
        None => run(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("thread pool")
            .install(run),
    }
}

/// Survival function of ℰ(1) * ℰ(2) * ... * ℰ(N): `P[τ > t]` = 1-(1-e^-t)^N.
/// Validated against an exact convolution oracle and Monte Carlo sums in
/// the test suite before being relied on anywhere.
pub fn hypo_survival(n: usize, t: f64) -> Result<f64, CouplingError> {
    if t < 0.0 {
        return Err(CouplingError::NegativeTime(t));
    }
    Ok(1.0 - (1.0 - (-t).exp()).powi(n as i32))
}

/// A draw of ℰ(1) + ℰ(2) + ... + ℰ(N).
pub fn hypo_sample<R: Rng>(n: usize, rng: &mut R) -> f64 {
    let mut acc = 0.0;
    for k in 1..=n {
        let u: f64 = rng.gen();
        acc += -(1.0 - u).ln() / k as f64;
    }
    acc
}

/// CSV export: one `time,x,y` row per event, trajectories concatenated in
/// batch order (a new trajectory starts whenever time returns to 0).
pub fn trajectories_to_csv(trajs: &[Trajectory]) -> String {
    let mut out = String::from("time,x,y\n");
    for traj in trajs {
        for (t, s) in &traj.events {
            out.push_str(&format!("{},{},{}\n", t, s.x, s.y));
        }
    }
    out
}

/// Batch manifest with the exact uniformization rate.
pub fn batch_manifest(
    seed: u64,
    theta: &Rational,
    horizon: f64,
    trajs: &[Trajectory],
) -> serde_json::Value {
    let events: usize = trajs.iter().map(|t| t.events.len()).sum();
    serde_json::json!({
        "seed": seed,
        "theta": theta.to_string(),
        "horizon": horizon,
        "counts": {
            "trajectories": trajs.len(),
            "events": events,
        },
    })
}
