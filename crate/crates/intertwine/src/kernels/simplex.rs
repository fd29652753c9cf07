//! Exact-rational two-phase simplex with Bland's rule. Dense tableau; only
//! used at desk scale by the kernel polytope solver, so simplicity wins
//! over sparsity.

use num_traits::{Signed, Zero};

use crate::polyalg::{rat_int, Rational};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

/// Minimizes `c·x` subject to `A x = b`, `x >= 0`.
pub fn solve_lp(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n));

    // Tableau with artificials: columns 0..n original, n..n+m artificial,
    // last column rhs. Rows oriented so the rhs is nonnegative.
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rational> = Vec::with_capacity(n + m + 1);
        for j in 0..n {
            row.push(if flip { -a[i][j].clone() } else { a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { rat_int(1) } else { rat_int(0) });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![rat_int(0); n + m];
    for j in n..n + m {
        phase1_cost[j] = rat_int(1);
    }
    match run_simplex(&mut t, &mut basis, &phase1_cost) {
        SimplexEnd::Unbounded => unreachable!("phase 1 objective is bounded below by 0"),
        SimplexEnd::Optimal(value) => {
            if !value.is_zero() {
                return LpOutcome::Infeasible;
            }
        }
    }

    // Drive leftover artificial variables out of the basis; rows where that
    // is impossible are redundant and get dropped.
    let mut drop_rows = Vec::new();
    for i in 0..t.len() {
        if basis[i] < n {
            continue;
        }
        match (0..n).find(|&j| !t[i][j].is_zero()) {
            Some(j) => pivot(&mut t, &mut basis, i, j),
            None => drop_rows.push(i),
        }
    }
    for &i in drop_rows.iter().rev() {
        t.remove(i);
        basis.remove(i);
    }
    // Artificial columns out of play for phase 2.
    let rhs_col = n + m;
    for row in t.iter_mut() {
        let rhs = row[rhs_col].clone();
        row.truncate(n);
        row.push(rhs);
    }

    // Phase 2.
    let phase2_cost = c.to_vec();
    match run_simplex(&mut t, &mut basis, &phase2_cost) {
        SimplexEnd::Unbounded => LpOutcome::Unbounded,
        SimplexEnd::Optimal(value) => {
            let mut x = vec![rat_int(0); n];
            let rhs = t[0].len() - 1;
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    x[bi] = t[i][rhs].clone();
                }
            }
            LpOutcome::Optimal { x, value }
        }
    }
}

enum SimplexEnd {
    Optimal(Rational),
    Unbounded,
}

fn run_simplex(t: &mut [Vec<Rational>], basis: &mut [usize], cost: &[Rational]) -> SimplexEnd {
    let ncols = t.first().map_or(1, |r| r.len());
    let rhs = ncols - 1;
    loop {
        // Reduced costs under Bland's rule: entering column is the smallest
        // index with negative reduced cost.
        let mut entering = None;
        for j in 0..rhs {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost.get(j).cloned().unwrap_or_else(|| rat_int(0));
            for (i, &bi) in basis.iter().enumerate() {
                let cb = cost.get(bi).cloned().unwrap_or_else(|| rat_int(0));
                if !cb.is_zero() && !t[i][j].is_zero() {
                    red -= cb * &t[i][j];
                }
            }
            if red.is_negative() {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            let mut value = rat_int(0);
            for (i, &bi) in basis.iter().enumerate() {
                let cb = cost.get(bi).cloned().unwrap_or_else(|| rat_int(0));
                if !cb.is_zero() {
                    value += cb * &t[i][rhs];
                }
            }
            return SimplexEnd::Optimal(value);
        };
        // Ratio test, ties broken by smallest basis index (Bland).
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..t.len() {
            if !t[i][j].is_positive() {
                continue;
            }
            let ratio = &t[i][rhs] / &t[i][j];
            let better = match &leave {
                None => true,
                Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((i, _)) = leave else {
            return SimplexEnd::Unbounded;
        };
        pivot(t, basis, i, j);
    }
}

fn pivot(t: &mut [Vec<Rational>], basis: &mut [usize], row: usize, col: usize) {
    let inv = t[row][col].recip();
    for v in t[row].iter_mut() {
        *v = &*v * &inv;
    }
    for i in 0..t.len() {
        if i == row || t[i][col].is_zero() {
            continue;
        }
        let f = t[i][col].clone();
        for j in 0..t[i].len() {
            let d = &f * &t[row][j];
            t[i][j] = &t[i][j] - &d;
        }
    }
    basis[row] = col;
}
