//! Small dense linear algebra over any [`Scalar`], plus SVD rank tests.
//!
//! Matrices are row-major `Vec<S>`; dimensions here never exceed a few
//! dozen, so clarity wins over blocking.

use crate::ad::Scalar;
use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::cst(0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::cst(1.0);
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::cst(0.0);
                for (j, &vj) in v.iter().enumerate() {
                    acc = acc + self[(i, j)] * vj;
                }
                acc
            })
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].val())
    }

    /// Solve `self · X = rhs` by Gaussian elimination with partial pivoting
    /// (pivots chosen on values). `None` if a pivot vanishes.
    pub fn solve(&self, rhs: &Mat<S>) -> Option<Mat<S>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, rhs.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.val().abs())).max(f64::MIN_POSITIVE);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].val().abs().total_cmp(&a[(j, col)].val().abs()))
                .unwrap();
            if a[(piv, col)].val().abs() <= 1e-14 * scale {
                return None;
            }
            if piv != col {
                a.swap_rows(piv, col);
                b.swap_rows(piv, col);
            }
            let inv = a[(col, col)].recip();
            for r in (col + 1)..n {
                let f = a[(r, col)] * inv;
                if f.val() == 0.0 && f.to_jet().order() == 0 {
                    continue;
                }
                for c in col..n {
                    a[(r, c)] = a[(r, c)] - f * a[(col, c)];
                }
                for c in 0..b.cols {
                    b[(r, c)] = b[(r, c)] - f * b[(col, c)];
                }
            }
        }
        for col in (0..n).rev() {
            let inv = a[(col, col)].recip();
            for c in 0..b.cols {
                let mut acc = b[(col, c)];
                for k in (col + 1)..n {
                    acc = acc - a[(col, k)] * b[(k, c)];
                }
                b[(col, c)] = acc * inv;
            }
        }
        Some(b)
    }

    pub fn solve_vec(&self, v: &[S]) -> Option<Vec<S>> {
        let rhs = Mat::from_columns(&[v.to_vec()], v.len());
        self.solve(&rhs).map(|x| x.column(0))
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::cst(0.0), |acc, (&x, &y)| acc + x * y)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Singular-value summary of a matrix.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RankInfo {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tol: f64,
}

impl RankInfo {
    pub fn full_row_rank(&self) -> bool {
        self.rank == self.rows
    }
    pub fn full_column_rank(&self) -> bool {
        self.rank == self.cols
    }
}

/// Numerical rank with threshold `1e-8 · max(σ_max, 1)`.
pub fn rank_info(m: &DMatrix<f64>) -> RankInfo {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return RankInfo { rows, cols, rank: 0, sigma_min: 0.0, sigma_max: 0.0, tol: 1e-8 };
    }
    let sv = m.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * sigma_max.max(1.0);
    RankInfo { rows, cols, rank: sv.iter().filter(|&&s| s > tol).count(), sigma_min, sigma_max, tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Jet;

    #[test]
    fn solve_matches_nalgebra() {
        let a = Mat { rows: 3, cols: 3, data: vec![0.0, 2.0, 1.0, 1.0, -1.0, 0.5, 3.0, 0.0, 1.0] };
        let b = vec![1.0, 2.0, 3.0];
        let x = a.solve_vec(&b).unwrap();
        let xn = a.to_f64().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..3 {
            assert!((x[i] - xn[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn solve_differentiates_inverse() {
        // d/dt (A + tI)^{-1} b = -A^{-2} b at t = 0 for A = diag(2, 4).
        let t = Jet::variable(0.0, 0);
        let a =
            Mat { rows: 2, cols: 2, data: vec![t + 2.0, Jet::constant(0.0), Jet::constant(0.0), t + 4.0] };
        let x = a.solve_vec(&[Jet::constant(1.0), Jet::constant(1.0)]).unwrap();
        assert!((x[0].coeff(1) + 0.25).abs() < 1e-15);
        assert!((x[1].coeff(1) + 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_rejected() {
        let a: Mat<f64> = Mat { rows: 2, cols: 2, data: vec![1.0, 2.0, 2.0, 4.0] };
        assert!(a.solve_vec(&[1.0, 0.0]).is_none());
    }

    #[test]
    fn rank_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = rank_info(&m);
        assert_eq!(r.rank, 1);
        assert!(!r.full_row_rank());
    }
}
