//! Dense complex matrices and vectors.
//!
//! Everything in this crate happens at desk scale (dimensions in the
//! hundreds at most), so a plain row-major `Vec<Complex<R>>` with
//! straightforward O(n^3) kernels is the right tool. No sparse storage,
//! no blocking, no external linear algebra.

use std::fmt;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{r, Real, C};

/// Square dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<R: Real> {
    dim: usize,
    data: Vec<C<R>>,
}

impl<R: Real> fmt::Debug for ComplexMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix(dim={})", self.dim)?;
        if self.dim <= 8 {
            for j in 0..self.dim {
                let row: Vec<String> = (0..self.dim)
                    .map(|k| format!("{:+.3}{:+.3}i", self[(j, k)].re, self[(j, k)].im))
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for ComplexMatrix<R> {
    type Output = C<R>;
    #[inline]
    fn index(&self, (j, k): (usize, usize)) -> &C<R> {
        &self.data[j * self.dim + k]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut C<R> {
        &mut self.data[j * self.dim + k]
    }
}

impl<R: Real> ComplexMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex::new(R::zero(), R::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            m[(j, j)] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            for k in 0..dim {
                m[(j, k)] = f(j, k);
            }
        }
        m
    }

    /// Builds from row-major data. Errors if the length is not `dim*dim`.
    pub fn from_rows(dim: usize, data: Vec<C<R>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::dim(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(ComplexMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C<R>] {
        &self.data
    }

    pub fn row(&self, j: usize) -> &[C<R>] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column(&self, k: usize) -> Vec<C<R>> {
        (0..self.dim).map(|j| self[(j, k)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |j, k| self[(k, j)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |j, k| self[(k, j)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |j, k| self[(j, k)].conj())
    }

    pub fn scale(&self, s: C<R>) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for j in 0..n {
            for l in 0..n {
                let a = self[(j, l)];
                if a.re == R::zero() && a.im == R::zero() {
                    continue;
                }
                let orow = other.row(l);
                let out_row = &mut out.data[j * n..(j + 1) * n];
                for k in 0..n {
                    out_row[k] = out_row[k] + a * orow[k];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C<R>]) -> Result<Vec<C<R>>> {
        if x.len() != self.dim {
            return Err(Error::dim(format!(
                "matvec: matrix dim {} vs vector len {}",
                self.dim,
                x.len()
            )));
        }
        Ok((0..self.dim)
            .map(|j| {
                self.row(j)
                    .iter()
                    .zip(x)
                    .fold(Complex::new(R::zero(), R::zero()), |acc, (a, b)| {
                        acc + a * b
                    })
            })
            .collect())
    }

    /// Integer matrix power by repeated squaring.
    pub fn matpow(&self, mut p: u64) -> Result<Self> {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while p > 0 {
            if p & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            p >>= 1;
            if p > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn trace(&self) -> C<R> {
        (0..self.dim).fold(Complex::new(R::zero(), R::zero()), |acc, j| {
            acc + self[(j, j)]
        })
    }

    /// Largest absolute entry difference to another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> Result<R> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(R::zero(), R::max))
    }

    pub fn max_abs_entry(&self) -> R {
        self.data.iter().map(|z| z.norm()).fold(R::zero(), R::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> R {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    /// `true` when the matrix is Hermitian within `tol` entrywise.
    pub fn is_hermitian(&self, tol: R) -> bool {
        for j in 0..self.dim {
            for k in j..self.dim {
                if (self[(j, k)] - self[(k, j)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// `true` when `U U^dagger = 1` within `tol` entrywise.
    pub fn is_unitary(&self, tol: R) -> bool {
        let gram = match self.matmul(&self.adjoint()) {
            Ok(g) => g,
            Err(_) => return false,
        };
        let id = Self::identity(self.dim);
        gram.max_abs_diff(&id).map(|d| d <= tol).unwrap_or(false)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::dim(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// On-disk matrix format: `{"dim": n, "entries": [[re, im], ...]}` with
/// entries row-major.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl<R: Real> ComplexMatrix<R> {
    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<[f64; 2]> = self
            .data
            .iter()
            .map(|z| {
                [
                    z.re.to_f64().unwrap_or(f64::NAN),
                    z.im.to_f64().unwrap_or(f64::NAN),
                ]
            })
            .collect();
        Ok(serde_json::to_string_pretty(&MatrixFile {
            dim: self.dim,
            entries,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        if file.entries.len() != file.dim * file.dim {
            return Err(Error::contract(format!(
                "matrix file declares dim {} but carries {} entries",
                file.dim,
                file.entries.len()
            )));
        }
        let data = file
            .entries
            .iter()
            .map(|&[re, im]| Complex::new(r(re), r(im)))
            .collect();
        ComplexMatrix::from_rows(file.dim, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Inner product `<x, y>` with the left argument conjugated.
pub fn dot<R: Real>(x: &[C<R>], y: &[C<R>]) -> C<R> {
    x.iter()
        .zip(y)
        .fold(Complex::new(R::zero(), R::zero()), |acc, (a, b)| {
            acc + a.conj() * b
        })
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<R: Real>(x: &[C<R>]) -> R {
    x.iter()
        .map(|z| z.norm_sqr())
        .fold(R::zero(), |a, b| a + b)
        .sqrt()
}

/// Scales a vector in place.
pub fn vec_scale<R: Real>(x: &mut [C<R>], s: C<R>) {
    for z in x {
        *z = *z * s;
    }
}

/// `y += s * x`.
pub fn vec_axpy<R: Real>(y: &mut [C<R>], s: C<R>, x: &[C<R>]) {
    for (yj, xj) in y.iter_mut().zip(x) {
        *yj = *yj + s * xj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_against_hand_computation() {
        let a = ComplexMatrix::from_rows(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let b = ComplexMatrix::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab[(0, 0)], c(0.0, 1.0));
        assert_eq!(ab[(0, 1)], c(1.0, 0.0));
        assert_eq!(ab[(1, 0)], c(0.0, 0.0));
        assert_eq!(ab[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let a = ComplexMatrix::from_rows(2, vec![c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0), c(7.0, 8.0)])
            .unwrap();
        let ad = a.adjoint();
        assert_eq!(ad[(0, 1)], c(5.0, -6.0));
        assert_eq!(ad[(1, 0)], c(3.0, -4.0));
    }

    #[test]
    fn matpow_matches_repeated_multiplication() {
        let a = ComplexMatrix::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let p3 = a.matpow(3).unwrap();
        let manual = a.matmul(&a).unwrap().matmul(&a).unwrap();
        assert!(p3.max_abs_diff(&manual).unwrap() < 1e-15);
    }

    #[test]
    fn json_roundtrip_preserves_entries() {
        let a = ComplexMatrix::from_rows(2, vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.25), c(-1.0, 0.0)])
            .unwrap();
        let text = a.to_json().unwrap();
        let b: ComplexMatrix<f64> = ComplexMatrix::from_json(&text).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() == 0.0);
    }

    #[test]
    fn malformed_json_is_rejected() {
        let bad = r#"{"dim": 3, "entries": [[1.0, 0.0]]}"#;
        assert!(ComplexMatrix::<f64>::from_json(bad).is_err());
    }
}
