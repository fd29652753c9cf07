//! Exact description of the affine set {Λ : AΛ = ΛB, rows sum to 1} and the
//! decision whether it contains a stochastic point that is not row-constant
//! (that is, a non-trivial intertwining kernel). Small free dimensions
//! go through exhaustive vertex enumeration; larger ones through exact LP.

use num_traits::{Signed, Zero};

use super::simplex::{solve_lp, LpOutcome};
use super::KernelError;
use crate::generators::FiniteGenerator;
use crate::linalg::{solve_affine, RatMat};
use crate::polyalg::{rat_int, Rational};

const STATE_CAP: usize = 13; // 12 non-absorbing levels is already desk scale
const VERTEX_ENUM_BUDGET: u128 = 200_000;

/// Affine solution set of the intertwining system plus the stochasticity
/// decision. `particular + span(basis)` describes *all* (signed) solutions
/// with unit row sums; the basis spans the homogeneous solutions with zero
/// row sums.
#[derive(Debug, Clone)]
pub struct KernelPolytope {
    pub particular: RatMat,
    pub basis: Vec<RatMat>,
    pub decision: PolytopeDecision,
}

#[derive(Debug, Clone)]
pub enum PolytopeDecision {
    /// No nonnegative solution at all (cannot happen for genuine generator
    /// pairs, which always admit a row-constant invariant-measure kernel).
    Infeasible,
    /// Every stochastic solution is row-constant; one such point.
    OnlyRowConstant { example: RatMat },
    /// A stochastic solution with two distinct rows, plus its matrix rank.
    NonTrivial { witness: RatMat, witness_rank: usize },
}

impl PolytopeDecision {
    pub fn is_trivial_only(&self) -> bool {
        matches!(self, PolytopeDecision::OnlyRowConstant { .. })
    }
}

/// Solves AΛ = ΛB with unit row sums by exact elimination and decides
/// whether a non-row-constant stochastic solution exists.
pub fn kernel_polytope(
    a: &FiniteGenerator,
    b: &FiniteGenerator,
) -> Result<KernelPolytope, KernelError> {
    for dim in [a.dim(), b.dim()] {
        if dim > STATE_CAP {
            return Err(KernelError::Oversize {
                cap: STATE_CAP,
                got: dim,
            });
        }
    }
    let m = a.dim();
    let n = b.dim();
    let unknowns = m * n;
    // Equation rows: intertwining residual entries, then unit row sums.
    let mut rows = Vec::with_capacity(unknowns + m);
    let mut rhs = Vec::with_capacity(unknowns + m);
    for i in 0..m {
        for j in 0..n {
            let mut row = vec![rat_int(0); unknowns];
            for k in 0..m {
                // A(i,k) Λ(k,j)
                row[k * n + j] = &row[k * n + j] + a.rates().at(i, k);
            }
            for k in 0..n {
                // -Λ(i,k) B(k,j)
                row[i * n + k] = &row[i * n + k] - b.rates().at(k, j);
            }
            rows.push(row);
            rhs.push(rat_int(0));
        }
    }
    for i in 0..m {
        let mut row = vec![rat_int(0); unknowns];
        for j in 0..n {
            row[i * n + j] = rat_int(1);
        }
        rows.push(row);
        rhs.push(rat_int(1));
    }
    let system = RatMat::from_rows(rows);
    let Some(solution) = solve_affine(&system, &rhs) else {
        return Ok(KernelPolytope {
            particular: RatMat::zero(m, n),
            basis: Vec::new(),
            decision: PolytopeDecision::Infeasible,
        });
    };
    let particular = vec_to_mat(&solution.particular, m, n);
    let basis: Vec<RatMat> = solution
        .nullspace
        .iter()
        .map(|v| vec_to_mat(v, m, n))
        .collect();

    let d = basis.len();
    let decision = if d == 0 {
        let ok = solution.particular.iter().all(|v| !v.is_negative());
        if !ok {
            PolytopeDecision::Infeasible
        } else {
            classify_point(&particular)
        }
    } else if d <= 6 && combinations(unknowns as u128, d as u128) <= VERTEX_ENUM_BUDGET {
        decide_by_vertices(&solution.particular, &solution.nullspace, m, n)
    } else {
        decide_by_lp(&system, &rhs, m, n)
    };

    Ok(KernelPolytope {
        particular,
        basis,
        decision,
    })
}

fn combinations(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.saturating_mul(n - j) / (j + 1);
        if acc > u128::MAX / (n + 1) {
            return u128::MAX;
        }
    }
    acc
}

fn vec_to_mat(v: &[Rational], m: usize, n: usize) -> RatMat {
    let mut out = RatMat::zero(m, n);
    for i in 0..m {
        for j in 0..n {
            *out.at_mut(i, j) = v[i * n + j].clone();
        }
    }
    out
}

fn is_row_constant(k: &RatMat) -> bool {
    (1..k.rows()).all(|i| k.row(i) == k.row(0))
}

fn classify_point(k: &RatMat) -> PolytopeDecision {
    if is_row_constant(k) {
        PolytopeDecision::OnlyRowConstant { example: k.clone() }
    } else {
        PolytopeDecision::NonTrivial {
            witness_rank: k.rank(),
            witness: k.clone(),
        }
    }
}

/// Every point of the (bounded) polytope is a convex combination of its
/// vertices, and convex combinations of row-constant kernels stay
/// row-constant — so checking vertices decides the question completely.
/// Vertices are the feasible solutions of d active entry constraints.
fn decide_by_vertices(
    particular: &[Rational],
    nullspace: &[Vec<Rational>],
    m: usize,
    n: usize,
) -> PolytopeDecision {
    let d = nullspace.len();
    let entries = particular.len();
    let mut combo: Vec<usize> = (0..d).collect();
    let mut row_constant_example: Option<RatMat> = None;
    loop {
        // Solve for t with the chosen entries pinned at zero.
        let sys = RatMat::from_rows(
            combo
                .iter()
                .map(|&e| nullspace.iter().map(|v| v[e].clone()).collect())
                .collect(),
        );
        let rhs: Vec<Rational> = combo.iter().map(|&e| -particular[e].clone()).collect();
        if let Some(sol) = solve_affine(&sys, &rhs) {
            if sol.nullspace.is_empty() {
                let t = sol.particular;
                if feasible_at(particular, nullspace, &t) {
                    let point = point_at(particular, nullspace, &t, m, n);
                    if !is_row_constant(&point) {
                        return PolytopeDecision::NonTrivial {
                            witness_rank: point.rank(),
                            witness: point,
                        };
                    }
                    row_constant_example.get_or_insert(point);
                }
            }
        }
        if !advance(&mut combo, entries) {
            break;
        }
    }
    match row_constant_example {
        Some(example) => PolytopeDecision::OnlyRowConstant { example },
        None => PolytopeDecision::Infeasible,
    }
}

fn advance(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn feasible_at(particular: &[Rational], nullspace: &[Vec<Rational>], t: &[Rational]) -> bool {
    for e in 0..particular.len() {
        let mut v = particular[e].clone();
        for (tj, basis) in t.iter().zip(nullspace) {
            if !tj.is_zero() && !basis[e].is_zero() {
                v += tj * &basis[e];
            }
        }
        if v.is_negative() {
            return false;
        }
    }
    true
}

fn point_at(
    particular: &[Rational],
    nullspace: &[Vec<Rational>],
    t: &[Rational],
    m: usize,
    n: usize,
) -> RatMat {
    let mut v = particular.to_vec();
    for (tj, basis) in t.iter().zip(nullspace) {
        if tj.is_zero() {
            continue;
        }
        for e in 0..v.len() {
            if !basis[e].is_zero() {
                v[e] = &v[e] + tj * &basis[e];
            }
        }
    }
    vec_to_mat(&v, m, n)
}

/// LP route for larger free dimensions: one phase-1 solve for feasibility,
/// then maximize row-difference functionals until one is strictly positive.
fn decide_by_lp(system: &RatMat, rhs: &[Rational], m: usize, n: usize) -> PolytopeDecision {
    // Reduce to an independent equality system first.
    let mut aug = RatMat::zero(system.rows(), system.cols() + 1);
    for i in 0..system.rows() {
        for j in 0..system.cols() {
            *aug.at_mut(i, j) = system.at(i, j).clone();
        }
        *aug.at_mut(i, system.cols()) = rhs[i].clone();
    }
    let pivots = aug.rref();
    let mut eq_rows = Vec::new();
    let mut eq_rhs = Vec::new();
    for r in 0..pivots.len() {
        eq_rows.push(aug.row(r)[..system.cols()].to_vec());
        eq_rhs.push(aug.row(r)[system.cols()].clone());
    }
    let zeros = vec![rat_int(0); system.cols()];
    let x0 = match solve_lp(&eq_rows, &eq_rhs, &zeros) {
        LpOutcome::Infeasible => return PolytopeDecision::Infeasible,
        LpOutcome::Unbounded => unreachable!("zero objective cannot be unbounded"),
        LpOutcome::Optimal { x, .. } => x,
    };
    let p0 = vec_to_mat(&x0, m, n);
    if !is_row_constant(&p0) {
        return PolytopeDecision::NonTrivial {
            witness_rank: p0.rank(),
            witness: p0,
        };
    }
    for i in 1..m {
        for j in 0..n {
            for sign in [1i64, -1] {
                // maximize sign·(Λ(i,j) - Λ(0,j))  ==  minimize the negation
                let mut c = vec![rat_int(0); m * n];
                c[i * n + j] = rat_int(-sign);
                c[j] = rat_int(sign);
                match solve_lp(&eq_rows, &eq_rhs, &c) {
                    LpOutcome::Optimal { x, value } => {
                        if value.is_negative() {
                            let p = vec_to_mat(&x, m, n);
                            debug_assert!(!is_row_constant(&p));
                            return PolytopeDecision::NonTrivial {
                                witness_rank: p.rank(),
                                witness: p,
                            };
                        }
                    }
                    LpOutcome::Unbounded => unreachable!("polytope is bounded"),
                    LpOutcome::Infeasible => unreachable!("feasibility already established"),
                }
            }
        }
    }
    PolytopeDecision::OnlyRowConstant { example: p0 }
}
