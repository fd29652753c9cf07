//! The full certificate suite: every check the crate promises, runnable as
//! one batch (the CLI `selftest` command and the acceptance test target
//! both drive this module). Statistical checks use fixed seeds so the
//! suite is deterministic.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::convergence::{bound_curve, ConvergenceTarget};
use crate::coupling::{
    absorption_time, batch_manifest, build_coupling, hypo_sample, hypo_survival, simulate_batch,
    trajectories_to_csv, trajectory_rng, UniformizedPair,
};
use crate::feasibility::{
    ehrenfest_ou_row, ehrenfest_ou_witness, max_a2, reverse_row, reverse_witness, CoeffVector,
};
use crate::generators::{check_eigen, ehrenfest, ou_apply, reverse_yule, yule};
use crate::kernels::{
    kernel_polytope, lambda_chain, lambda_hat, lambda_hat_chain, lambda_step,
    verify_finite_intertwining, verify_ou_intertwining, HermiteDensityKernel, PolytopeDecision,
};
use crate::polyalg::{
    factorial, hermite, krawtchouk, phi, phi_tilde, rat, rat_int, rat_to_f64, Poly, Rational,
    ValueVector,
};
use crate::stats::{chi_square_gof, chi_square_homogeneity};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {}: {} ({:.2}s) — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

fn finish(
    id: usize,
    name: &'static str,
    start: Instant,
    passed: bool,
    detail: String,
    budget: Option<f64>,
) -> CriterionResult {
    let seconds = start.elapsed().as_secs_f64();
    let in_budget = budget.is_none_or(|b| seconds < b);
    let detail = if in_budget {
        detail
    } else {
        format!("{detail}; runtime {seconds:.2}s exceeded budget {:?}s", budget)
    };
    CriterionResult {
        id,
        name,
        passed: passed && in_budget,
        detail,
        seconds,
    }
}

/// Criterion 1: exact spectral certificates for all four families.
pub fn criterion_1() -> CriterionResult {
    let start = Instant::now();
    let mut pairs = 0usize;
    let mut ok = true;
    for n_big in 0..=10usize {
        let l = ehrenfest(n_big);
        let d = yule(n_big);
        let dr = reverse_yule(n_big);
        for n in 0..=n_big {
            let lam = rat_int(n as i64);
            ok &= check_eigen(&l, &krawtchouk(n_big, n).unwrap(), &lam)
                .unwrap()
                .is_zero();
            ok &= check_eigen(&d, &phi(n, n_big + 1), &lam).unwrap().is_zero();
            let vec = if n == 0 {
                ValueVector::ones(-(n_big as i64), n_big + 1)
            } else {
                phi_tilde(n, n_big).unwrap()
            };
            ok &= check_eigen(&dr, &vec, &lam).unwrap().is_zero();
            pairs += 3;
        }
    }
    for n in 0..=10usize {
        let h = hermite(n);
        ok &= ou_apply(&h) == h.scale(&rat_int(-(n as i64)));
        pairs += 1;
    }
    finish(
        1,
        "exact spectral certificates (N <= 10, zero residuals)",
        start,
        ok,
        format!("{pairs} eigenpairs certified"),
        Some(5.0),
    )
}

/// Criterion 2: exact intertwining certificates and eigenfunction mappings.
pub fn criterion_2() -> CriterionResult {
    let start = Instant::now();
    let mut ok = true;
    let mut certs = 0usize;
    for m in 0..=10usize {
        for n in m..=10usize {
            ok &= verify_finite_intertwining(&ehrenfest(m), &lambda_chain(m, n).unwrap(), &ehrenfest(n))
                .unwrap()
                .is_zero();
            ok &= verify_finite_intertwining(&yule(m), &lambda_hat_chain(m, n).unwrap(), &ehrenfest(n))
                .unwrap()
                .is_zero();
            certs += 2;
        }
    }
    for n_big in 0..=8usize {
        let step = lambda_step(n_big);
        for n in 0..=n_big + 1 {
            let image = step.apply(&krawtchouk(n_big + 1, n).unwrap()).unwrap();
            if n <= n_big {
                ok &= image == krawtchouk(n_big, n).unwrap();
            } else {
                ok &= image.is_zero();
            }
            certs += 1;
        }
        let hat = lambda_hat(n_big);
        for n in 0..=n_big {
            let image = hat.apply(&krawtchouk(n_big, n).unwrap()).unwrap();
            let scale = factorial(n) * Rational::new(BigInt::one(), BigInt::one() << n);
            ok &= image == phi(n, n_big + 1).scale(&scale);
            certs += 1;
        }
    }
    finish(
        2,
        "exact intertwining certificates (M <= N <= 10)",
        start,
        ok,
        format!("{certs} identities certified"),
        Some(10.0),
    )
}

/// Criterion 3: the exact endpoints of the a_2 feasibility slice.
pub fn criterion_3() -> CriterionResult {
    let start = Instant::now();
    let two = max_a2(2).unwrap();
    let two_thirds = max_a2(3).unwrap();
    let ok = two == rat_int(2) && two_thirds == rat(2, 3);
    finish(
        3,
        "exact feasibility boundaries max_a2(2) = 2, max_a2(3) = 2/3",
        start,
        ok,
        format!("max_a2(2) = {two}, max_a2(3) = {two_thirds}"),
        Some(1.0),
    )
}

fn random_nontrivial_coeffs<R: Rng>(n: usize, rng: &mut R) -> CoeffVector {
    loop {
        let mut a = vec![rat_int(0); n + 1];
        a[0] = rat_int(1);
        for item in a.iter_mut().skip(1) {
            if rng.gen_bool(0.6) {
                let num = rng.gen_range(-4i64..=4);
                let den = rng.gen_range(1i64..=6);
                *item = rat(num, den);
            }
        }
        let cv = CoeffVector::new(a).expect("a_0 = 1");
        if !cv.is_trivial() {
            return cv;
        }
    }
}

/// Criterion 4: triviality theorems as executable certificates.
pub fn criterion_4() -> CriterionResult {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    // (a) kernel polytopes L_N -> D_M contain only the δ_0-row kernel
    let mut polytopes = 0usize;
    'outer: for n in 0..=4usize {
        for m in 0..=4usize {
            let p = kernel_polytope(&ehrenfest(n), &yule(m)).unwrap();
            match &p.decision {
                PolytopeDecision::OnlyRowConstant { example } => {
                    for i in 0..example.rows() {
                        ok &= example.at(i, 0).is_one();
                        for j in 1..example.cols() {
                            ok &= example.at(i, j).is_zero();
                        }
                    }
                }
                other => {
                    ok = false;
                    detail.push(format!("(L_{n}, D_{m}) gave {other:?}"));
                    break 'outer;
                }
            }
            polytopes += 1;
        }
    }
    // (b) 200 random Ehrenfest -> OU negativity witnesses
    let mut rng = trajectory_rng(0xE4A1, 0);
    let mut ehr_ok = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6usize);
        let a = random_nontrivial_coeffs(n, &mut rng);
        let w = ehrenfest_ou_witness(n, &a).unwrap();
        if ehrenfest_ou_row(n, &a, w.y).eval(&w.x0) == w.value && w.value < rat_int(0) {
            ehr_ok += 1;
        }
    }
    ok &= ehr_ok == 200;
    // (c) 200 random reverse-Yule negativity witnesses
    let mut rev_ok = 0usize;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6usize);
        let a = random_nontrivial_coeffs(n, &mut rng);
        let w = reverse_witness(n, &a).unwrap();
        if reverse_row(n, &a, w.y).eval(&w.x0) == w.value && w.value < rat_int(0) {
            rev_ok += 1;
        }
    }
    ok &= rev_ok == 200;
    detail.insert(
        0,
        format!("{polytopes} polytopes trivial-only, {ehr_ok}/200 + {rev_ok}/200 witnesses sound"),
    );
    finish(
        4,
        "triviality certificates (polytopes and 400 witnesses)",
        start,
        ok,
        detail.join("; "),
        None,
    )
}

/// Criterion 5: the kernel with row-1 density h_1² cannot intertwine with
/// any Yule generator — eigenspace alignment fails at mode 2 with a
/// nonzero exact residual.
pub fn criterion_5() -> CriterionResult {
    let start = Instant::now();
    let x2 = Poly::from_coeffs(vec![rat_int(0), rat_int(0), rat_int(1)]);
    let kernel = HermiteDensityKernel::from_rows(vec![Poly::one(), x2]).unwrap();
    let image = kernel.apply_hermite(2);
    let report = verify_ou_intertwining(&yule(1), &kernel, 4).unwrap();
    let ok = !report.is_zero()
        && report.first_nonzero_mode() == Some(2)
        && image.values == vec![rat_int(0), rat_int(2)];
    finish(
        5,
        "eigenspace alignment: row density h_1^2 breaks the mode-2 residual",
        start,
        ok,
        format!(
            "Λ[h_2] = ({}, {}), first nonzero residual at mode {:?}",
            image.values[0],
            image.values[1],
            report.first_nonzero_mode()
        ),
        None,
    )
}

/// Exact stepwise convolution of ℰ(1),...,ℰ(N): density weights of e^{-kt}
/// stay rational at every step, so no quadrature is involved.
fn convolution_survival(n: usize, t: f64) -> f64 {
    let mut weights = vec![rat_int(1)];
    for m in 2..=n as i64 {
        let mut next = vec![rat_int(0); m as usize];
        for (idx, w) in weights.iter().enumerate() {
            let k = idx as i64 + 1;
            let c = w * rat(m, m - k);
            next[idx] = &next[idx] + &c;
            next[m as usize - 1] = &next[m as usize - 1] - &c;
        }
        weights = next;
    }
    weights
        .iter()
        .enumerate()
        .map(|(idx, w)| {
            let k = idx as i64 + 1;
            rat_to_f64(&(w / rat_int(k))) * (-(k as f64) * t).exp()
        })
        .sum()
}

/// Criterion 6: the hypoexponential closed form against the convolution
/// oracle and Monte Carlo sums of exponentials.
pub fn criterion_6() -> CriterionResult {
    let start = Instant::now();
    let mut ok = true;
    let mut max_gap: f64 = 0.0;
    for n in 1..=5usize {
        for i in 1..=50 {
            let t = 0.2 * i as f64;
            let gap = (convolution_survival(n, t) - hypo_survival(n, t).unwrap()).abs();
            max_gap = max_gap.max(gap);
            ok &= gap < 1e-10;
        }
    }
    // Monte Carlo: 10^6 sums per N, empirical survival within 3 SE
    let draws = 1_000_000usize;
    let ts = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut worst_sigma: f64 = 0.0;
    for (stream, n) in [1usize, 3, 5].into_iter().enumerate() {
        let mut rng = trajectory_rng(0x4710, stream as u64);
        let mut above = [0usize; 5];
        for _ in 0..draws {
            let s = hypo_sample(n, &mut rng);
            for (i, &t) in ts.iter().enumerate() {
                if s > t {
                    above[i] += 1;
                }
            }
        }
        for (i, &t) in ts.iter().enumerate() {
            let p = hypo_survival(n, t).unwrap();
            let emp = above[i] as f64 / draws as f64;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            let sigmas = (emp - p).abs() / se;
            worst_sigma = worst_sigma.max(sigmas);
            ok &= sigmas <= 3.0;
        }
    }
    finish(
        6,
        "hypoexponential law vs convolution oracle and Monte Carlo",
        start,
        ok,
        format!("max oracle gap {max_gap:.2e}, worst MC deviation {worst_sigma:.2} SE"),
        None,
    )
}

struct TrajectorySummary {
    x_at: [i64; 3],
    y_at: [i64; 3],
    tau: Option<f64>,
    x_at_tau: Option<i64>,
}

fn summarize_batch(
    pair: &UniformizedPair,
    m0: &[Rational],
    horizon: f64,
    seed: u64,
    count: usize,
) -> Vec<TrajectorySummary> {
    use rayon::prelude::*;
    let times = [0.5, 1.0, 2.0];
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i);
            let traj = crate::coupling::simulate(pair, m0, horizon, &mut rng).unwrap();
            let mut x_at = [0i64; 3];
            let mut y_at = [0i64; 3];
            for (k, &t) in times.iter().enumerate() {
                let s = traj.state_at(t);
                x_at[k] = s.x;
                y_at[k] = s.y;
            }
            let tau = absorption_time(&traj);
            let x_at_tau = tau.map(|t| traj.state_at(t).x);
            TrajectorySummary {
                x_at,
                y_at,
                tau,
                x_at_tau,
            }
        })
        .collect()
}

/// Criterion 7: the coupling contract for (D_3, Λ̂_3, L_3) with 10^5
/// trajectories: marginals, conditional laws, and the strong stationary
/// time, all at significance 0.001.
pub fn criterion_7() -> CriterionResult {
    let start = Instant::now();
    let n = 3usize;
    let pair = build_coupling(&yule(n), &lambda_hat(n), &ehrenfest(n), rat_int(n as i64)).unwrap();
    let mut m0 = vec![rat_int(0); n + 1];
    m0[n] = rat_int(1);
    let count = 100_000usize;
    let summaries = summarize_batch(&pair, &m0, 25.0, 0xC0917, count);
    let times = [0.5, 1.0, 2.0];
    let mut ok = true;
    let mut details = Vec::new();

    // (i) X_t marginal vs the exactly evolved law
    let delta_n: Vec<f64> = {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        v
    };
    for (k, &t) in times.iter().enumerate() {
        let expected = crate::convergence::ehrenfest_evolve(n, &delta_n, t).unwrap();
        let mut observed = vec![0u64; n + 1];
        for s in &summaries {
            observed[s.x_at[k] as usize] += 1;
        }
        let p = chi_square_gof(&observed, &expected);
        ok &= p > 0.001;
        details.push(format!("marginal t={t}: p={p:.3}"));
    }

    // (ii) X_t conditional on Y_t vs the link row, buckets of >= 500
    for (k, &t) in times.iter().enumerate() {
        for y in 0..=n {
            let bucket: Vec<i64> = summaries
                .iter()
                .filter(|s| s.y_at[k] == y as i64)
                .map(|s| s.x_at[k])
                .collect();
            if bucket.len() < 500 {
                continue;
            }
            let probs: Vec<f64> = (0..=n)
                .map(|x| rat_to_f64(pair.link().entries().at(y, x)))
                .collect();
            let mut observed = vec![0u64; n + 1];
            for &x in &bucket {
                observed[x as usize] += 1;
            }
            let p = chi_square_gof(&observed, &probs);
            ok &= p > 0.001;
            details.push(format!("cond t={t} y={y} (n={}): p={p:.3}", bucket.len()));
        }
    }

    // (iii) X_τ vs π_3, and independence of τ and X_τ across quartiles
    let absorbed: Vec<(f64, i64)> = summaries
        .iter()
        .filter_map(|s| s.tau.map(|t| (t, s.x_at_tau.unwrap())))
        .collect();
    ok &= absorbed.len() == count; // horizon 25 absorbs everything
    let pi: Vec<f64> = crate::generators::binomial_measure(n)
        .weights
        .values
        .iter()
        .map(rat_to_f64)
        .collect();
    let mut observed = vec![0u64; n + 1];
    for &(_, x) in &absorbed {
        observed[x as usize] += 1;
    }
    let p_pi = chi_square_gof(&observed, &pi);
    ok &= p_pi > 0.001;
    details.push(format!("X_tau vs pi: p={p_pi:.3}"));

    let mut taus: Vec<f64> = absorbed.iter().map(|&(t, _)| t).collect();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |f: f64| taus[((taus.len() as f64 * f) as usize).min(taus.len() - 1)];
    let cuts = [q(0.25), q(0.5), q(0.75)];
    let mut table = vec![vec![0u64; n + 1]; 4];
    for &(t, x) in &absorbed {
        let g = cuts.iter().take_while(|&&c| t > c).count();
        table[g][x as usize] += 1;
    }
    let p_ind = chi_square_homogeneity(&table);
    ok &= p_ind > 0.001;
    details.push(format!("tau-quartile independence: p={p_ind:.3}"));

    finish(
        7,
        "coupling contract for (D_3, hat-Λ_3, L_3), 10^5 trajectories",
        start,
        ok,
        details.join(", "),
        Some(60.0),
    )
}

/// Criterion 8: the convergence bound chain on 50-point grids, plus the
/// closed-form separation identity for the N = 2 boundary kernel.
pub fn criterion_8() -> CriterionResult {
    let start = Instant::now();
    let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
    let mut ok = true;
    let mut details = Vec::new();

    // (N=2, a=(1,0,2)) from δ_2, with separation(t) = e^{-2t} to 1e-9
    let k2 = HermiteDensityKernel::lambda_a(2, vec![rat_int(1), rat_int(0), rat_int(2)]).unwrap();
    let m0 = vec![rat_int(0), rat_int(0), rat_int(1)];
    let curve = bound_curve(&ConvergenceTarget::OrnsteinUhlenbeck(k2), &m0, &grid).unwrap();
    let viol = curve.chain_violations(1e-9);
    ok &= viol.is_empty();
    let mut max_gap: f64 = 0.0;
    for row in &curve.rows {
        max_gap = max_gap.max((row.separation - (-2.0 * row.t).exp()).abs());
    }
    ok &= max_gap < 1e-9;
    details.push(format!(
        "N=2 boundary: {} violations, sep identity gap {max_gap:.2e}",
        viol.len()
    ));

    // (N=3, a=(1,0,2/3,0)) from δ_3
    let k3 = HermiteDensityKernel::lambda_a(
        3,
        vec![rat_int(1), rat_int(0), rat(2, 3), rat_int(0)],
    )
    .unwrap();
    let m0 = vec![rat_int(0), rat_int(0), rat_int(0), rat_int(1)];
    let curve = bound_curve(&ConvergenceTarget::OrnsteinUhlenbeck(k3), &m0, &grid).unwrap();
    let viol = curve.chain_violations(1e-9);
    ok &= viol.is_empty();
    details.push(format!("N=3 boundary: {} violations", viol.len()));

    // Ehrenfest target from δ_N for N <= 6
    for n in 1..=6usize {
        let mut m0 = vec![rat_int(0); n + 1];
        m0[n] = rat_int(1);
        let curve = bound_curve(&ConvergenceTarget::Ehrenfest(n), &m0, &grid).unwrap();
        let viol = curve.chain_violations(1e-9);
        ok &= viol.is_empty();
        // the bound column must be the closed form exactly
        for row in &curve.rows {
            ok &= (row.bound - hypo_survival(n, row.t).unwrap()).abs() < 1e-12;
        }
    }
    details.push("Ehrenfest targets N <= 6: chain holds".into());

    finish(
        8,
        "convergence chain tv <= separation <= 1-(1-e^-t)^N",
        start,
        ok,
        details.join("; "),
        None,
    )
}

/// Criterion 9: batch simulation output is byte-identical across repeat
/// runs and across worker counts.
pub fn criterion_9() -> CriterionResult {
    let start = Instant::now();
    let n = 3usize;
    let pair = build_coupling(&yule(n), &lambda_hat(n), &ehrenfest(n), rat_int(n as i64)).unwrap();
    let mut m0 = vec![rat_int(0); n + 1];
    m0[n] = rat_int(1);
    let seed = 7u64;
    let render = |workers: usize| -> (String, String) {
        let trajs = simulate_batch(&pair, &m0, 10.0, seed, 2_000, Some(workers)).unwrap();
        let csv = trajectories_to_csv(&trajs);
        let manifest = batch_manifest(seed, pair.theta(), 10.0, &trajs).to_string();
        (csv, manifest)
    };
    let (csv1, man1) = render(1);
    let (csv4, man4) = render(4);
    let (csv4b, man4b) = render(4);
    let ok = csv1 == csv4 && csv4 == csv4b && man1 == man4 && man4 == man4b;
    finish(
        9,
        "determinism across runs and worker counts",
        start,
        ok,
        format!(
            "{} CSV bytes identical over worker counts 1 and 4",
            csv1.len()
        ),
        None,
    )
}

/// Runs the whole suite in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ]
}
