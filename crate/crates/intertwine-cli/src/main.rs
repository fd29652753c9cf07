//! Batch CLI over the intertwining library. Exit codes: 0 success or
//! certificate passed, 1 certified-negative (a witness or nonzero residual
//! was found where the query allows one), 2 usage error, 3 internal
//! invariant violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde_json::json;

use intertwine::convergence::{bound_curve, ehrenfest_evolve, ConvergenceTarget};
use intertwine::coupling::{
    absorption_time, batch_manifest, build_coupling, hypo_survival, simulate_batch,
    trajectories_to_csv, Trajectory,
};
use intertwine::feasibility::{check_membership_a, max_a2, reverse_witness, CoeffVector, Witness};
use intertwine::generators::{
    binomial_measure, check_eigen, ehrenfest, ou_apply, reverse_yule, yule, FiniteGenerator,
};
use intertwine::kernels::{
    kernel_polytope, lambda_chain, lambda_hat, lambda_hat_chain, verify_finite_intertwining,
    verify_ou_intertwining, HermiteDensityKernel, PolytopeDecision,
};
use intertwine::polyalg::{
    hermite, krawtchouk, phi, phi_tilde, rat_from_f64, rat_int, rat_to_f64, Rational, ValueVector,
};
use intertwine::stats::{chi_square_gof, chi_square_homogeneity, ks_pvalue, ks_statistic};

const EXIT_NEGATIVE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "intertwine",
    about = "Exact intertwining certificates, feasibility regions, coupling simulation and convergence bounds for the Ehrenfest/Yule/Ornstein-Uhlenbeck families"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified eigenpairs of one generator family
    Spectra {
        /// ehrenfest | yule | reverse-yule | ou
        #[arg(long)]
        family: String,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-residual intertwining certificates and polytope decisions
    Verify {
        /// ehrenfest-ehrenfest | yule-ehrenfest | yule-ou
        #[arg(long)]
        pair: Option<String>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        /// comma-separated coefficients (rationals like 1,0,2/3)
        #[arg(long)]
        a: Option<String>,
        /// generator pair like ehrenfest:2,yule:2
        #[arg(long)]
        polytope: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feasibility-region membership and boundaries
    Feasible {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        a: Option<String>,
        /// exact sup of the a_2 slice of the region
        #[arg(long = "max-a2")]
        max_a2: bool,
        /// query the reverse-Yule region instead
        #[arg(long)]
        reverse: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the Diaconis-Fill coupling for (D_N, hat-Lambda_N, L_N)
    Couple {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 25.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// directory for trajectories.csv, manifest.json, stats.json
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Separation/tv/bound convergence curves
    Converge {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        a: Option<String>,
        /// use the Ehrenfest target through hat-Lambda_N
        #[arg(long)]
        hat: bool,
        /// grid as start:end:step or a comma list
        #[arg(long, default_value = "0.1:5:0.1")]
        tgrid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full certificate suite (CI entry point)
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = worker_count_override() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .map(|s| s.as_str())
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            eprintln!("internal invariant violation: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn worker_count_override() -> Option<usize> {
    std::env::var("WORKER_COUNT")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
}

fn dispatch(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Cmd::Spectra { family, n, out } => cmd_spectra(&family, n, out),
        Cmd::Verify {
            pair,
            m,
            n,
            a,
            polytope,
            out,
        } => cmd_verify(pair, m, n, a, polytope, out),
        Cmd::Feasible {
            n,
            a,
            max_a2,
            reverse,
            out,
        } => cmd_feasible(n, a, max_a2, reverse, out),
        Cmd::Couple {
            n,
            samples,
            horizon,
            seed,
            out_dir,
        } => cmd_couple(n, samples, horizon, seed, out_dir),
        Cmd::Converge {
            n,
            a,
            hat,
            tgrid,
            out,
        } => cmd_converge(n, a, hat, &tgrid, out),
        Cmd::Selftest => cmd_selftest(),
    }
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    s.parse::<f64>()
        .map(rat_from_f64)
        .map_err(|_| format!("cannot parse '{s}' as a rational"))
}

fn parse_coeffs(s: &str) -> Result<Vec<Rational>, String> {
    s.split(',').map(parse_rational).collect()
}

fn parse_tgrid(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("t-grid '{s}' must be start:end:step"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| format!("bad t-grid '{s}'")))
            .collect::<Result<_, _>>()?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if step <= 0.0 || end < start {
            return Err("t-grid needs step > 0 and end >= start".into());
        }
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let t = start + step * i as f64;
            if t > end + 1e-12 {
                break;
            }
            out.push(t);
            i += 1;
        }
        Ok(out)
    } else {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad t-grid '{s}'"))
            })
            .collect()
    }
}

fn rational_strings(values: &[Rational]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

fn emit(value: &serde_json::Value, out: Option<PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("json");
    match out {
        Some(path) => fs::write(&path, text).map_err(|e| format!("writing {path:?}: {e}")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_spectra(family: &str, n: usize, out: Option<PathBuf>) -> Result<u8, String> {
    if n > 10 {
        return Err("spectra capped at N <= 10".into());
    }
    let config = json!({"command": "spectra", "family": family, "N": n});
    let mut eigenpairs = Vec::new();
    let mut all_zero = true;
    match family {
        "ehrenfest" | "yule" | "reverse-yule" => {
            let gen: FiniteGenerator = match family {
                "ehrenfest" => ehrenfest(n),
                "yule" => yule(n),
                _ => reverse_yule(n),
            };
            for mode in 0..=n {
                let vector = match family {
                    "ehrenfest" => krawtchouk(n, mode).expect("mode <= N"),
                    "yule" => phi(mode, n + 1),
                    _ => {
                        if mode == 0 {
                            ValueVector::ones(-(n as i64), n + 1)
                        } else {
                            phi_tilde(mode, n).expect("mode >= 1")
                        }
                    }
                };
                let residual = check_eigen(&gen, &vector, &rat_int(mode as i64))
                    .map_err(|e| e.to_string())?;
                let zero = residual.is_zero();
                all_zero &= zero;
                eigenpairs.push(json!({
                    "eigenvalue": -(mode as i64),
                    "offset": vector.offset,
                    "eigenvector": rational_strings(&vector.values),
                    "residualZero": zero,
                }));
            }
        }
        "ou" => {
            for mode in 0..=n {
                let h = hermite(mode);
                let residual = &ou_apply(&h) - &h.scale(&rat_int(-(mode as i64)));
                let zero = residual.is_zero();
                all_zero &= zero;
                eigenpairs.push(json!({
                    "eigenvalue": -(mode as i64),
                    "hermiteCoefficients": rational_strings(h.coeffs()),
                    "residualZero": zero,
                }));
            }
        }
        other => return Err(format!("unsupported family '{other}'")),
    }
    let doc = json!({
        "config": config,
        "eigenpairs": eigenpairs,
        "allZeroResiduals": all_zero,
    });
    emit(&doc, out)?;
    Ok(if all_zero { 0 } else { EXIT_NEGATIVE })
}

fn parse_generator(spec: &str) -> Result<FiniteGenerator, String> {
    let (fam, size) = spec
        .split_once(':')
        .ok_or_else(|| format!("generator spec '{spec}' must be family:N"))?;
    let size: usize = size
        .trim()
        .parse()
        .map_err(|_| format!("bad size in '{spec}'"))?;
    match fam.trim() {
        "ehrenfest" => Ok(ehrenfest(size)),
        "yule" => Ok(yule(size)),
        "reverse-yule" => Ok(reverse_yule(size)),
        other => Err(format!("unknown family '{other}'")),
    }
}

fn cmd_verify(
    pair: Option<String>,
    m: Option<usize>,
    n: Option<usize>,
    a: Option<String>,
    polytope: Option<String>,
    out: Option<PathBuf>,
) -> Result<u8, String> {
    if let Some(spec) = polytope {
        let (left, right) = spec
            .split_once(',')
            .ok_or_else(|| format!("polytope spec '{spec}' must be genA,genB"))?;
        let ga = parse_generator(left)?;
        let gb = parse_generator(right)?;
        let poly = kernel_polytope(&ga, &gb).map_err(|e| e.to_string())?;
        let config = json!({"command": "verify", "polytope": spec});
        let doc = match &poly.decision {
            PolytopeDecision::OnlyRowConstant { example } => json!({
                "config": config,
                "decision": "trivial-only",
                "freeDimension": poly.basis.len(),
                "example": matrix_strings(example),
            }),
            PolytopeDecision::NonTrivial {
                witness,
                witness_rank,
            } => json!({
                "config": config,
                "decision": "non-trivial",
                "freeDimension": poly.basis.len(),
                "witness": matrix_strings(witness),
                "witnessRank": witness_rank,
            }),
            PolytopeDecision::Infeasible => json!({
                "config": config,
                "decision": "infeasible",
            }),
        };
        emit(&doc, out)?;
        return Ok(0);
    }
    let pair = pair.ok_or("verify needs --pair or --polytope")?;
    let config = json!({"command": "verify", "pair": pair, "M": m, "N": n, "a": a});
    match pair.as_str() {
        "ehrenfest-ehrenfest" | "yule-ehrenfest" => {
            let n = n.ok_or("--N required")?;
            let m = m.unwrap_or(n);
            if m > n {
                return Err("need M <= N".into());
            }
            let (res_zero, kernel_json) = if pair == "ehrenfest-ehrenfest" {
                let k = lambda_chain(m, n).map_err(|e| e.to_string())?;
                let res = verify_finite_intertwining(&ehrenfest(m), &k, &ehrenfest(n))
                    .map_err(|e| e.to_string())?;
                (res.is_zero(), k.to_json())
            } else {
                let k = lambda_hat_chain(m, n).map_err(|e| e.to_string())?;
                let res = verify_finite_intertwining(&yule(m), &k, &ehrenfest(n))
                    .map_err(|e| e.to_string())?;
                (res.is_zero(), k.to_json())
            };
            let doc = json!({
                "config": config,
                "kernel": kernel_json,
                "residualZero": res_zero,
            });
            emit(&doc, out)?;
            Ok(if res_zero { 0 } else { EXIT_NEGATIVE })
        }
        "yule-ou" => {
            let n = n.ok_or("--N required")?;
            let coeffs = parse_coeffs(&a.ok_or("--a required for yule-ou")?)?;
            let kernel = HermiteDensityKernel::lambda_a(n, coeffs).map_err(|e| e.to_string())?;
            let report =
                verify_ou_intertwining(&yule(n), &kernel, n + 5).map_err(|e| e.to_string())?;
            let zero = report.is_zero();
            let doc = json!({
                "config": config,
                "depth": n + 5,
                "residualZero": zero,
                "firstNonzeroMode": report.first_nonzero_mode(),
            });
            emit(&doc, out)?;
            Ok(if zero { 0 } else { EXIT_NEGATIVE })
        }
        other => Err(format!("unknown pair '{other}'")),
    }
}

fn matrix_strings(m: &intertwine::linalg::RatMat) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v.to_string()).collect())
        .collect()
}

fn cmd_feasible(
    n: usize,
    a: Option<String>,
    want_max_a2: bool,
    reverse: bool,
    out: Option<PathBuf>,
) -> Result<u8, String> {
    if want_max_a2 {
        let bound = max_a2(n).map_err(|e| e.to_string())?;
        let doc = json!({
            "config": {"command": "feasible", "N": n, "maxA2": true},
            "maxA2": bound.to_string(),
        });
        emit(&doc, out)?;
        return Ok(0);
    }
    let coeffs = parse_coeffs(&a.ok_or("feasible needs --a or --max-a2")?)?;
    let cv = CoeffVector::new(coeffs).map_err(|e| e.to_string())?;
    let config = json!({
        "command": "feasible", "N": n, "reverse": reverse,
        "a": rational_strings(cv.values()),
    });
    if reverse {
        if cv.values().len() != n + 1 {
            return Err(format!("--a must have length N+1 = {}", n + 1));
        }
        if cv.is_trivial() {
            let doc = json!({"config": config, "member": true});
            emit(&doc, out)?;
            return Ok(0);
        }
        let w = reverse_witness(n, &cv).map_err(|e| e.to_string())?;
        let doc = json!({
            "config": config,
            "member": false,
            "witness": witness_json(&w),
        });
        emit(&doc, out)?;
        return Ok(EXIT_NEGATIVE);
    }
    let report = check_membership_a(n, &cv).map_err(|e| e.to_string())?;
    let doc = json!({"config": config, "report": report.to_json()});
    emit(&doc, out)?;
    Ok(if report.member { 0 } else { EXIT_NEGATIVE })
}

fn witness_json(w: &Witness) -> serde_json::Value {
    json!({"y": w.y, "x0": w.x0.to_string(), "value": w.value.to_string()})
}

fn cmd_couple(
    n: usize,
    samples: usize,
    horizon: f64,
    seed: u64,
    out_dir: PathBuf,
) -> Result<u8, String> {
    if n > 10 {
        return Err("couple capped at N <= 10".into());
    }
    if samples == 0 {
        return Err("need samples >= 1".into());
    }
    // smallest valid uniformization rate (made positive for N = 0)
    let theta = rat_int((n as i64).max(1));
    let pair = build_coupling(&yule(n), &lambda_hat(n), &ehrenfest(n), theta)
        .map_err(|e| e.to_string())?;
    let mut m0 = vec![rat_int(0); n + 1];
    m0[n] = rat_int(1);
    let trajs = simulate_batch(&pair, &m0, horizon, seed, samples, worker_count_override())
        .map_err(|e| e.to_string())?;

    fs::create_dir_all(&out_dir).map_err(|e| format!("creating {out_dir:?}: {e}"))?;
    fs::write(out_dir.join("trajectories.csv"), trajectories_to_csv(&trajs))
        .map_err(|e| e.to_string())?;
    let manifest = batch_manifest(seed, pair.theta(), horizon, &trajs);
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("json"),
    )
    .map_err(|e| e.to_string())?;

    let stats = couple_stats(n, &trajs, horizon, seed, samples);
    let all_pass = stats["allTestsPass"].as_bool().unwrap_or(false);
    fs::write(
        out_dir.join("stats.json"),
        serde_json::to_string_pretty(&stats).expect("json"),
    )
    .map_err(|e| e.to_string())?;
    println!(
        "{} trajectories -> {} (tests {})",
        trajs.len(),
        out_dir.display(),
        if all_pass { "pass" } else { "FAIL" }
    );
    Ok(if all_pass { 0 } else { EXIT_INTERNAL })
}

fn couple_stats(
    n: usize,
    trajs: &[Trajectory],
    horizon: f64,
    seed: u64,
    samples: usize,
) -> serde_json::Value {
    let mut all_pass = true;
    // KS of absorption times against the closed-form CDF from level N
    let mut taus: Vec<f64> = trajs.iter().filter_map(absorption_time).collect();
    let absorbed = taus.len();
    let ks = if absorbed >= 10 && n >= 1 {
        let d = ks_statistic(&mut taus, |t| 1.0 - hypo_survival(n, t.max(0.0)).unwrap());
        let p = ks_pvalue(d, absorbed);
        all_pass &= p > 0.001;
        json!({"statistic": d, "pValue": p, "absorbed": absorbed})
    } else {
        json!({"absorbed": absorbed})
    };
    // marginal chi-squares at the standard probe times within the horizon
    let mut marginals = Vec::new();
    let mut delta_n = vec![0.0; n + 1];
    delta_n[n] = 1.0;
    for &t in [0.5, 1.0, 2.0].iter().filter(|&&t| t <= horizon) {
        let expected = ehrenfest_evolve(n, &delta_n, t).expect("valid law");
        let mut observed = vec![0u64; n + 1];
        for traj in trajs {
            observed[traj.state_at(t).x as usize] += 1;
        }
        let p = chi_square_gof(&observed, &expected);
        if n >= 1 {
            all_pass &= p > 0.001;
        }
        marginals.push(json!({"t": t, "pValue": p}));
    }
    // conditional law per Y_t bucket with at least 500 samples
    let link = lambda_hat(n);
    let mut conditionals = Vec::new();
    for &t in [0.5, 1.0, 2.0].iter().filter(|&&t| t <= horizon) {
        for y in 0..=n {
            let xs: Vec<i64> = trajs
                .iter()
                .map(|traj| traj.state_at(t))
                .filter(|s| s.y == y as i64)
                .map(|s| s.x)
                .collect();
            if xs.len() < 500 {
                continue;
            }
            let probs: Vec<f64> = (0..=n)
                .map(|x| rat_to_f64(link.entries().at(y, x)))
                .collect();
            let mut observed = vec![0u64; n + 1];
            for &x in &xs {
                observed[x as usize] += 1;
            }
            let p = chi_square_gof(&observed, &probs);
            all_pass &= p > 0.001;
            conditionals.push(json!({"t": t, "y": y, "samples": xs.len(), "pValue": p}));
        }
    }
    // strong stationary time: X_tau ~ pi_N, independent of tau
    let absorbed_states: Vec<(f64, i64)> = trajs
        .iter()
        .filter_map(|traj| absorption_time(traj).map(|t| (t, traj.state_at(t).x)))
        .collect();
    let stationary = if absorbed_states.len() >= 100 && n >= 1 {
        let pi: Vec<f64> = binomial_measure(n)
            .weights
            .values
            .iter()
            .map(rat_to_f64)
            .collect();
        let mut observed = vec![0u64; n + 1];
        for &(_, x) in &absorbed_states {
            observed[x as usize] += 1;
        }
        let p_pi = chi_square_gof(&observed, &pi);
        all_pass &= p_pi > 0.001;
        let mut sorted: Vec<f64> = absorbed_states.iter().map(|&(t, _)| t).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |f: f64| sorted[((sorted.len() as f64 * f) as usize).min(sorted.len() - 1)];
        let cuts = [q(0.25), q(0.5), q(0.75)];
        let mut table = vec![vec![0u64; n + 1]; 4];
        for &(t, x) in &absorbed_states {
            let g = cuts.iter().take_while(|&&c| t > c).count();
            table[g][x as usize] += 1;
        }
        let p_ind = chi_square_homogeneity(&table);
        all_pass &= p_ind > 0.001;
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        json!({"meanTau": mean, "pValuePi": p_pi, "pValueIndependence": p_ind})
    } else {
        json!({"absorbed": absorbed_states.len()})
    };
    json!({
        "config": {
            "command": "couple", "N": n, "samples": samples,
            "horizon": horizon, "seed": seed,
        },
        "ks": ks,
        "marginals": marginals,
        "conditionals": conditionals,
        "stationaryTime": stationary,
        "allTestsPass": all_pass,
    })
}

fn cmd_converge(
    n: usize,
    a: Option<String>,
    hat: bool,
    tgrid: &str,
    out: Option<PathBuf>,
) -> Result<u8, String> {
    let grid = parse_tgrid(tgrid)?;
    if grid.is_empty() {
        return Err("empty t-grid".into());
    }
    let target = if hat {
        ConvergenceTarget::Ehrenfest(n)
    } else {
        let coeffs = parse_coeffs(&a.ok_or("converge needs --a or --hat")?)?;
        let cv = CoeffVector::new(coeffs.clone()).map_err(|e| e.to_string())?;
        let report = check_membership_a(n, &cv).map_err(|e| e.to_string())?;
        if !report.member {
            eprintln!(
                "infeasible coefficients: {}",
                serde_json::to_string(&report.to_json()).expect("json")
            );
            return Ok(EXIT_NEGATIVE);
        }
        let kernel = HermiteDensityKernel::lambda_a(n, coeffs).map_err(|e| e.to_string())?;
        ConvergenceTarget::OrnsteinUhlenbeck(kernel)
    };
    // the chain starts from the top level, matching the coupling batch
    let mut m0 = vec![rat_int(0); n + 1];
    m0[n] = rat_int(1);
    let curve = bound_curve(&target, &m0, &grid).map_err(|e| e.to_string())?;
    let violations = curve.chain_violations(1e-9);
    let csv = curve.to_csv();
    match out {
        Some(path) => fs::write(&path, csv).map_err(|e| format!("writing {path:?}: {e}"))?,
        None => print!("{csv}"),
    }
    if !violations.is_empty() {
        eprintln!("inequality chain violated on rows {violations:?}");
        return Ok(EXIT_INTERNAL);
    }
    Ok(0)
}

fn cmd_selftest() -> Result<u8, String> {
    let results = intertwine::selftest::run_all();
    let mut all = true;
    for r in &results {
        println!("{}", r.line());
        all &= r.passed;
    }
    Ok(if all { 0 } else { EXIT_NEGATIVE })
}
