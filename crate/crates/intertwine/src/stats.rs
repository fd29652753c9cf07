//! Statistical test helpers for validating the simulation against the
//! exact laws: chi-square goodness-of-fit/homogeneity and Kolmogorov-
//! Smirnov against an analytic CDF.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Chi-square goodness-of-fit p-value of observed counts against a
/// probability vector. Zero-probability cells must be empty (p-value 0
/// otherwise); they carry no degrees of freedom.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                return 0.0;
            }
            continue;
        }
        let e = p * n as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells <= 1 {
        return 1.0;
    }
    chi_square_pvalue(stat, cells - 1)
}

/// Chi-square homogeneity p-value for a contingency table
/// (groups x categories).
pub fn chi_square_homogeneity(table: &[Vec<u64>]) -> f64 {
    let groups = table.len();
    assert!(groups >= 2);
    let cats = table[0].len();
    assert!(table.iter().all(|r| r.len() == cats));
    let row_tot: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let mut col_tot = vec![0u64; cats];
    for row in table {
        for (j, &v) in row.iter().enumerate() {
            col_tot[j] += v;
        }
    }
    let grand: u64 = row_tot.iter().sum();
    let mut stat = 0.0;
    let mut used_cols = 0usize;
    for j in 0..cats {
        if col_tot[j] == 0 {
            continue;
        }
        used_cols += 1;
        for i in 0..groups {
            let e = row_tot[i] as f64 * col_tot[j] as f64 / grand as f64;
            if e > 0.0 {
                stat += (table[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    if used_cols <= 1 {
        return 1.0;
    }
    chi_square_pvalue(stat, (groups - 1) * (used_cols - 1))
}

pub fn chi_square_pvalue(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    (1.0 - dist.cdf(stat)).clamp(0.0, 1.0)
}

/// Two-sided KS statistic of samples against an analytic CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value with the Stephens small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn gof_accepts_matching_counts() {
        // counts drawn deterministically near expectation
        let probs = [0.25, 0.5, 0.25];
        let observed = [2500u64, 5000, 2500];
        assert!(chi_square_gof(&observed, &probs) > 0.99);
        let skewed = [4000u64, 4000, 2000];
        assert!(chi_square_gof(&skewed, &probs) < 1e-6);
        // mass in a zero-probability cell is fatal
        assert_eq!(chi_square_gof(&[10, 1], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn homogeneity_detects_shifts() {
        let same = vec![vec![100u64, 200, 100], vec![105, 195, 100]];
        assert!(chi_square_homogeneity(&same) > 0.5);
        let diff = vec![vec![100u64, 200, 100], vec![200, 100, 100]];
        assert!(chi_square_homogeneity(&diff) < 1e-6);
    }

    #[test]
    fn ks_uniform_samples_accept() {
        let mut rng = crate::coupling::trajectory_rng(1, 0);
        let mut xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(d, xs.len()) > 0.01);
        // shifted samples are rejected
        let mut ys: Vec<f64> = xs.iter().map(|x| x.powf(1.3)).collect();
        let d = ks_statistic(&mut ys, |x| x.clamp(0.0, 1.0));
        assert!(ks_pvalue(d, ys.len()) < 1e-6);
    }
}
