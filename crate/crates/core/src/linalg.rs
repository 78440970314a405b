//! Small dense linear algebra over exact or floating fields.
//!
//! Sizes in this crate stay below a few hundred rows, so everything is a
//! plain row-major `Vec` with Gauss–Jordan elimination.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::scalar::{cx_abs_f64, cx_negligible, Scalar};

/// Field operations needed by elimination.
pub trait Field:
    Clone + Debug + PartialEq + Zero + One + Neg<Output = Self> + Add<Output = Self> + Sub<Output = Self>
    + Mul<Output = Self> + std::ops::Div<Output = Self> + Send + Sync
{
    /// True when arithmetic is exact; zero tests are then literal.
    const EXACT: bool;
    fn magnitude(&self) -> f64;
    fn negligible(&self) -> bool;
}

macro_rules! real_field {
    ($t:ty, $exact:expr) => {
        impl Field for $t {
            const EXACT: bool = $exact;
            fn magnitude(&self) -> f64 {
                Scalar::to_f64(self).abs()
            }
            fn negligible(&self) -> bool {
                Scalar::is_negligible(self)
            }
        }
    };
}
real_field!(f64, false);
real_field!(f32, false);
real_field!(BigRational, true);

impl<S: Scalar> Field for Complex<S> {
    const EXACT: bool = S::EXACT;
    fn magnitude(&self) -> f64 {
        cx_abs_f64(self)
    }
    fn negligible(&self) -> bool {
        cx_negligible(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        m
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::negligible)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Field::magnitude).fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a.clone(), b.clone())).collect(),
        }
    }

    /// `self + s·Id`.
    pub fn shift(&self, s: &T) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] = m[(i, i)].clone() + s.clone();
        }
        m
    }

    /// In-place Gauss–Jordan reduction; returns pivot columns.
    ///
    /// Float fields pivot on the largest entry and treat entries below
    /// `REL_TOL · max|entry|` as zero.
    pub fn rref(&mut self) -> Vec<usize> {
        const REL_TOL: f64 = 1e-10;
        let threshold = if T::EXACT { 0.0 } else { REL_TOL * self.max_abs().max(f64::MIN_POSITIVE) };
        let is_zero = |x: &T| if T::EXACT { x.is_zero() } else { x.magnitude() <= threshold };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let pick = if T::EXACT {
                (r..self.rows).find(|&i| !is_zero(&self[(i, c)]))
            } else {
                (r..self.rows)
                    .filter(|&i| !is_zero(&self[(i, c)]))
                    .max_by(|&a, &b| self[(a, c)].magnitude().total_cmp(&self[(b, c)].magnitude()))
            };
            let Some(p) = pick else {
                for i in r..self.rows {
                    self[(i, c)] = T::zero();
                }
                continue;
            };
            self.swap_rows(r, p);
            let inv = T::one() / self[(r, c)].clone();
            for j in c..self.cols {
                self[(r, j)] = self[(r, j)].clone() * inv.clone();
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = self[(r, j)].clone();
                    if !v.is_zero() {
                        self[(i, j)] = self[(i, j)].clone() - f.clone() * v;
                    }
                }
                self[(i, c)] = T::zero();
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of `{x : self·x = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![T::zero(); self.cols];
                x[f] = T::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    x[pc] = -m[(r, f)].clone();
                }
                x
            })
            .collect()
    }

    /// A solution of `self·x = b`, or `None` when the system is inconsistent.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        self.solve_many(&[b.to_vec()]).map(|mut v| v.remove(0))
    }

    /// Solves for several right-hand sides with one elimination.
    pub fn solve_many(&self, rhs: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
        let n = self.cols;
        let mut aug = Self::zeros(self.rows, n + rhs.len());
        for i in 0..self.rows {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            for (k, b) in rhs.iter().enumerate() {
                aug[(i, n + k)] = b[i].clone();
            }
        }
        let all = aug.rref();
        if all.iter().any(|&c| c >= n) {
            return None;
        }
        Some(
            (0..rhs.len())
                .map(|k| {
                    let mut x = vec![T::zero(); n];
                    for (r, &pc) in all.iter().enumerate() {
                        x[pc] = aug[(r, n + k)].clone();
                    }
                    x
                })
                .collect(),
        )
    }

    /// Inverse of a square matrix.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let cols: Vec<Vec<T>> = (0..self.rows)
            .map(|j| (0..self.rows).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        if self.rank() != self.rows {
            return None;
        }
        self.solve_many(&cols).map(|c| Self::from_columns(&c))
    }
}

/// Determinant by fraction-free-style elimination (exact for exact fields).
pub fn det<T: Field>(m: &Matrix<T>) -> T {
    assert_eq!(m.rows, m.cols, "determinant of non-square matrix");
    let n = m.rows;
    match n {
        0 => return T::one(),
        1 => return m[(0, 0)].clone(),
        2 => return m[(0, 0)].clone() * m[(1, 1)].clone() - m[(0, 1)].clone() * m[(1, 0)].clone(),
        _ => {}
    }
    let mut a = m.clone();
    let mut result = T::one();
    for c in 0..n {
        let pick = if T::EXACT {
            (c..n).find(|&i| !a[(i, c)].is_zero())
        } else {
            (c..n).max_by(|&x, &y| a[(x, c)].magnitude().total_cmp(&a[(y, c)].magnitude()))
        };
        let Some(p) = pick.filter(|&p| !a[(p, c)].is_zero()) else { return T::zero() };
        if p != c {
            a.swap_rows(p, c);
            result = -result;
        }
        let piv = a[(c, c)].clone();
        result = result * piv.clone();
        for i in c + 1..n {
            let f = a[(i, c)].clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                let v = a[(c, j)].clone();
                a[(i, j)] = a[(i, j)].clone() - f.clone() * v;
            }
        }
    }
    result
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn determinants_agree() {
        let m = Matrix::from_rows(vec![
            vec![q(0, 1), q(2, 1), q(1, 1)],
            vec![q(1, 1), q(0, 1), q(3, 1)],
            vec![q(4, 1), q(1, 1), q(0, 1)],
        ]);
        // 0·(0−3) − 2·(0−12) + 1·(1−0) = 25
        assert_eq!(det(&m), q(25, 1));
        assert!((det(&m.map(|x| x.to_f64())) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn exact_inverse() {
        let m = Matrix::from_rows(vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), Matrix::identity(2));
    }

    #[test]
    fn nullspace_and_rank() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        assert_eq!(m.rank(), 1);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(m.mul_vec(&v).iter().all(|x| f64::abs(*x) < 1e-12));
        }
    }

    #[test]
    fn inconsistent_system_is_rejected() {
        let m = Matrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(2, 1), q(2, 1)]]);
        assert!(m.solve(&[q(1, 1), q(3, 1)]).is_none());
        let x = m.solve(&[q(1, 1), q(2, 1)]).unwrap();
        assert_eq!(x[0].clone() + x[1].clone(), q(1, 1));
    }
}
