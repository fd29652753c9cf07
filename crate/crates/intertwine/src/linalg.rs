//! Dense exact-rational matrices and Gaussian elimination. Desk-scale only:
//! the polytope solver caps state spaces at 13 points, so there is no need
//! for pivoting heuristics or sparsity.

use num_traits::Zero;

use crate::polyalg::{rat_int, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        RatMat {
            rows,
            cols,
            data: vec![rat_int(0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMat::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = rat_int(1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        RatMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, rhs: &RatMat) -> RatMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = RatMat::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let t = a * rhs.at(k, j);
                    let cell = out.at_mut(i, j);
                    *cell = &*cell + &t;
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self
            .data
            .iter()
            .zip(rhs.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        RatMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = rat_int(0);
                for (a, x) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !x.is_zero() {
                        acc += a * x;
                    }
                }
                acc
            })
            .collect()
    }

    /// Row-vector * matrix product.
    pub fn vec_mul(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![rat_int(0); self.cols];
        for (i, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let t = x * self.at(i, j);
                out[j] = &out[j] + &t;
            }
        }
        out
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.at(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self.at(r, c).recip();
            for j in c..self.cols {
                let v = self.at(r, j) * &inv;
                *self.at_mut(r, j) = v;
            }
            for i in 0..self.rows {
                if i == r || self.at(i, c).is_zero() {
                    continue;
                }
                let f = self.at(i, c).clone();
                for j in c..self.cols {
                    let t = &f * self.at(r, j);
                    let cell = self.at_mut(i, j);
                    *cell = &*cell - &t;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Solution of a linear system `A x = b`: one particular solution plus a
/// basis of the homogeneous nullspace. `None` when inconsistent.
pub struct AffineSolution {
    pub particular: Vec<Rational>,
    pub nullspace: Vec<Vec<Rational>>,
}

pub fn solve_affine(a: &RatMat, b: &[Rational]) -> Option<AffineSolution> {
    assert_eq!(a.rows(), b.len());
    let n = a.cols();
    let mut aug = RatMat::zero(a.rows(), n + 1);
    for i in 0..a.rows() {
        for j in 0..n {
            *aug.at_mut(i, j) = a.at(i, j).clone();
        }
        *aug.at_mut(i, n) = b[i].clone();
    }
    let pivots = aug.rref();
    if pivots.contains(&n) {
        return None; // a pivot in the rhs column: inconsistent
    }
    let mut particular = vec![rat_int(0); n];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = aug.at(r, n).clone();
    }
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let mut nullspace = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = vec![rat_int(0); n];
        v[fc] = rat_int(1);
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -aug.at(r, fc).clone();
        }
        nullspace.push(v);
    }
    Some(AffineSolution {
        particular,
        nullspace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::rat;

    #[test]
    fn rref_and_rank() {
        let mut m = RatMat::from_rows(vec![
            vec![rat_int(1), rat_int(2), rat_int(3)],
            vec![rat_int(2), rat_int(4), rat_int(6)],
            vec![rat_int(0), rat_int(1), rat_int(1)],
        ]);
        assert_eq!(m.rank(), 2);
        let pivots = m.rref();
        assert_eq!(pivots, vec![0, 1]);
    }

    #[test]
    fn solve_affine_reconstructs_solutions() {
        // x + y = 2, with a one-dimensional solution family
        let a = RatMat::from_rows(vec![vec![rat_int(1), rat_int(1)]]);
        let sol = solve_affine(&a, &[rat_int(2)]).unwrap();
        assert_eq!(sol.nullspace.len(), 1);
        let p = &sol.particular;
        assert_eq!(&p[0] + &p[1], rat_int(2));
        let d = &sol.nullspace[0];
        assert_eq!(&d[0] + &d[1], rat_int(0));

        // inconsistent system
        let a = RatMat::from_rows(vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(2), rat_int(2)],
        ]);
        assert!(solve_affine(&a, &[rat_int(1), rat_int(3)]).is_none());
    }

    #[test]
    fn matrix_products() {
        let a = RatMat::from_rows(vec![
            vec![rat(1, 2), rat(1, 2), rat_int(0)],
            vec![rat_int(0), rat(1, 2), rat(1, 2)],
        ]);
        let v = a.mul_vec(&[rat_int(2), rat_int(4), rat_int(6)]);
        assert_eq!(v, vec![rat_int(3), rat_int(5)]);
        let w = a.vec_mul(&[rat_int(1), rat_int(1)]);
        assert_eq!(w, vec![rat(1, 2), rat_int(1), rat(1, 2)]);
    }
}
