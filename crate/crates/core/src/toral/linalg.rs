//! Small dense real matrices, enough for projectors and orbit corrections.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::toral::matrix::IntegerMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
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

    pub fn from_integer(a: &IntegerMatrix) -> Self {
        let n = a.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = T::of(a.get(i, j) as f64);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn inf_norm(&self) -> T {
        self.data
            .chunks(self.n)
            .map(|r| r.iter().fold(T::zero(), |acc, &v| acc + v.abs()))
            .fold(T::zero(), T::max)
    }

    /// Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).expect("finite entries"))
                .expect("non-empty range");
            if a[(pivot, col)].abs() <= T::epsilon() * (T::one() + self.inf_norm()) {
                return Err(Error::Numerical("matrix is numerically singular".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let av = a.data[col * n + j];
                    let iv = inv.data[col * n + j];
                    a.data[i * n + j] -= f * av;
                    inv.data[i * n + j] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Matrix sign function by Newton's iteration `X <- (X + X^{-1}) / 2`.
    pub fn sign(&self) -> Result<Self> {
        let half = T::of(0.5);
        let mut x = self.clone();
        for _ in 0..100 {
            let next = x.add(&x.inverse()?).scale(half);
            let change = next.sub(&x).inf_norm();
            x = next;
            if change <= T::of(16.0) * T::epsilon() * x.inf_norm() {
                return Ok(x);
            }
        }
        Err(Error::Numerical("matrix sign iteration did not converge".into()))
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}
