//! Square integer matrices with exact, overflow-checked arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntegerMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntegerMatrix {
    /// Any square integer matrix; see [`IntegerMatrix::unimodular`] for the
    /// automorphism check.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix must be square and non-empty".into()));
        }
        Ok(IntegerMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// A matrix with determinant `+-1`, i.e. an automorphism of the torus.
    pub fn unimodular(rows: Vec<Vec<i64>>) -> Result<Self> {
        let m = Self::from_rows(rows)?;
        let det = m.determinant();
        if det.abs() != BigInt::one() {
            return Err(Error::InvalidMatrix(format!("determinant {det} is not +-1")));
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        IntegerMatrix { n, entries }
    }

    pub fn zero(n: usize) -> Self {
        IntegerMatrix {
            n,
            entries: vec![0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.n != other.n {
            return Err(Error::InvalidMatrix("dimension mismatch".into()));
        }
        let n = self.n;
        let mut out = IntegerMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc: i128 = 0;
                for k in 0..n {
                    acc += self.get(i, k) as i128 * other.get(k, j) as i128;
                }
                out.set(i, j, i64::try_from(acc).map_err(|_| Error::Overflow("integer matrix product"))?);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u64) -> Result<IntegerMatrix> {
        let mut base = self.clone();
        let mut acc = IntegerMatrix::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// `self^e` for any integer `e` (negative powers need unimodularity).
    pub fn pow_signed(&self, e: i64) -> Result<IntegerMatrix> {
        if e >= 0 {
            self.pow(e as u64)
        } else {
            self.inverse()?.pow(e.unsigned_abs())
        }
    }

    pub fn add(&self, other: &IntegerMatrix) -> Result<IntegerMatrix> {
        if self.n != other.n {
            return Err(Error::InvalidMatrix("dimension mismatch".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("integer matrix sum")))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntegerMatrix { n: self.n, entries })
    }

    pub fn neg(&self) -> Result<IntegerMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|a| a.checked_neg().ok_or(Error::Overflow("integer matrix negation")))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntegerMatrix { n: self.n, entries })
    }

    pub fn trace(&self) -> i128 {
        (0..self.n).map(|i| self.get(i, i) as i128).sum()
    }

    fn big(&self) -> Vec<Vec<BigInt>> {
        self.entries.chunks(self.n).map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        let mut a = self.big();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(p) => {
                        a.swap(k, p);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[n - 1][n - 1]
    }

    /// Exact inverse; integral because the determinant is `+-1`.
    pub fn inverse(&self) -> Result<IntegerMatrix> {
        let det = self.determinant();
        if det.abs() != BigInt::one() {
            return Err(Error::InvalidMatrix(format!("determinant {det} is not +-1")));
        }
        let n = self.n;
        // adj(A) / det = adj(A) * det when det = +-1
        let mut out = IntegerMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let mut c = minor.determinant();
                if (i + j) % 2 == 1 {
                    c = -c;
                }
                let v = (c * &det).to_i64().ok_or(Error::Overflow("integer matrix inverse"))?;
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    fn minor(&self, row: usize, col: usize) -> IntegerMatrix {
        let n = self.n;
        if n == 1 {
            return IntegerMatrix::identity(0);
        }
        let mut entries = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                entries.push(self.get(i, j));
            }
        }
        IntegerMatrix { n: n - 1, entries }
    }

    /// Characteristic polynomial `det(tI - A)` by Faddeev-LeVerrier, as
    /// coefficients from the constant term up (monic).
    pub fn characteristic_polynomial(&self) -> Vec<BigInt> {
        let n = self.n;
        let a = self.big();
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        // M_0 = 0, c_n = 1; M_k = A M_{k-1} + c_{n-k+1} I; c_{n-k} = -tr(A M_k)/k
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for k in 1..=n {
            let mut next = mat_mul(&a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += &coeffs[n - k + 1];
            }
            m = next;
            let am = mat_mul(&a, &m);
            let tr: BigInt = (0..n).map(|i| am[i][i].clone()).sum();
            coeffs[n - k] = -tr / BigInt::from(k);
        }
        coeffs
    }

    pub fn inf_norm(&self) -> i128 {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().map(|v| v.unsigned_abs() as i128).sum::<i128>())
            .max()
            .unwrap_or(0)
    }

    pub fn commutes_with(&self, other: &IntegerMatrix) -> Result<bool> {
        Ok(self.mul(other)? == other.mul(self)?)
    }

    /// Block matrix from an `k x k` grid of `n x n` blocks.
    pub fn from_blocks(blocks: &[Vec<IntegerMatrix>]) -> Result<IntegerMatrix> {
        let k = blocks.len();
        let n = blocks.first().and_then(|r| r.first()).map(|b| b.n).unwrap_or(0);
        if k == 0 || blocks.iter().any(|r| r.len() != k || r.iter().any(|b| b.n != n)) {
            return Err(Error::InvalidMatrix("ragged block layout".into()));
        }
        let size = k * n;
        let mut out = IntegerMatrix::zero(size);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        out.set(bi * n + i, bj * n + j, b.get(i, j));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(|r| r.iter().map(|&v| v as f64).collect()).collect()
    }
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let mut out = vec![vec![BigInt::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    out
}

impl TryFrom<Vec<Vec<i64>>> for IntegerMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        IntegerMatrix::from_rows(rows)
    }
}

impl From<IntegerMatrix> for Vec<Vec<i64>> {
    fn from(m: IntegerMatrix) -> Self {
        m.rows()
    }
}

impl fmt::Display for IntegerMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}
