use std::fmt;

use num_traits::{One, Zero};

use super::gauss::GaussRat;
use crate::error::{Error, Result};

/// Dense square matrix over [`GaussRat`], row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    n: usize,
    entries: Vec<GaussRat>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<GaussRat>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Matrix(format!(
                "expected a nonempty square matrix, got {} rows",
                n
            )));
        }
        Ok(Matrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![GaussRat::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = GaussRat::one();
        }
        Matrix { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &GaussRat {
        &self.entries[row * self.n + col]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                entries.push(self.get(c, r).clone());
            }
        }
        Matrix { n, entries }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut s = GaussRat::zero();
                for k in 0..n {
                    s += &(self.get(r, k) * other.get(k, c));
                }
                entries.push(s);
            }
        }
        Matrix { n, entries }
    }

    /// Gauss-Jordan inverse; singular input is a matrix error.
    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or_else(|| Error::Matrix("matrix is singular".into()))?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a.get(col, col).inv().expect("nonzero pivot");
            a.scale_row(col, &p);
            inv.scale_row(col, &p);
            for r in 0..n {
                if r != col && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.sub_row(r, col, &f);
                    inv.sub_row(r, col, &f);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.n {
            self.entries.swap(a * self.n + c, b * self.n + c);
        }
    }

    fn scale_row(&mut self, r: usize, k: &GaussRat) {
        for c in 0..self.n {
            let v = &self.entries[r * self.n + c] * k;
            self.entries[r * self.n + c] = v;
        }
    }

    /// row[r] -= f * row[src]
    fn sub_row(&mut self, r: usize, src: usize, f: &GaussRat) {
        for c in 0..self.n {
            let d = f * &self.entries[src * self.n + c];
            self.entries[r * self.n + c] -= &d;
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|r| {
                (0..self.n)
                    .map(|c| self.get(r, c).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "[{}]", rows.join(";"))
    }
}
