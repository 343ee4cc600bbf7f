//! Small dense matrices and a pivoted Gaussian solve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(LinalgError::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// LU factors with partial pivoting.
struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(a: &Matrix<T>) -> Option<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > T::zero()) || !pivot.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Some(Self { lu, perm })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.dim();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    fn inverse_norm_one(&self) -> T {
        let n = self.lu.dim();
        let mut best = T::zero();
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col: T = self.solve(&e).iter().map(|v| v.abs()).sum();
            best = best.max(col);
        }
        best
    }
}

/// One-norm condition number `|A|_1 * |A^-1|_1`; infinite when singular.
pub fn condition_number<T: Scalar>(a: &Matrix<T>) -> T {
    match Lu::factor(a) {
        Some(lu) => a.norm_one() * lu.inverse_norm_one(),
        None => T::infinity(),
    }
}

/// Solves `A x = b`, refusing matrices whose condition estimate exceeds `max_condition`.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T], max_condition: T) -> Result<Vec<T>, LinalgError> {
    if b.len() != a.dim() {
        return Err(LinalgError::Dimension(format!(
            "rhs has {} entries, matrix is {}x{}",
            b.len(),
            a.dim(),
            a.dim()
        )));
    }
    let singular = |c: T| LinalgError::Singular {
        condition: c.to_f64_lossy(),
    };
    let lu = Lu::factor(a).ok_or_else(|| singular(T::infinity()))?;
    let cond = a.norm_one() * lu.inverse_norm_one();
    if !(cond <= max_condition) {
        return Err(singular(cond));
    }
    Ok(lu.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_2x2() {
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let x: Vec<f64> = solve(&a, &[1.0, 1.0], 1e12).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_needed() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(solve(&a, &[2.0, 3.0], 1e12).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_and_ill_conditioned() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0], 1e12), Err(LinalgError::Singular { .. })));
        let b = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]).unwrap();
        assert!(matches!(solve(&b, &[1.0, 1.0], 1e12), Err(LinalgError::Singular { .. })));
        assert!(condition_number(&Matrix::<f64>::identity(3)) == 1.0);
    }

    #[test]
    fn ragged_rows() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
