//! Small dense complex matrices.
//!
//! Codewords, channels, received blocks and dispersion matrices in this crate
//! are at most 8x8, so a plain row-major `Vec` is all the structure needed.
//! Dimension mismatches in arithmetic are programming errors and panic, the
//! same way slice indexing does.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Default absolute tolerance for matrix equality.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const J: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        ComplexMat {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        ComplexMat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_vec(r, c, rows.concat())
    }

    /// Real-valued matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// `[[tl, tr], [bl, br]]` from four equally sized blocks.
    pub fn from_blocks(tl: &Self, tr: &Self, bl: &Self, br: &Self) -> Self {
        assert!(tl.rows == tr.rows && bl.rows == br.rows, "block row mismatch");
        assert!(tl.cols == bl.cols && tr.cols == br.cols, "block column mismatch");
        let (r0, c0) = (tl.rows, tl.cols);
        Self::from_fn(tl.rows + bl.rows, tl.cols + tr.cols, |i, j| match (i < r0, j < c0) {
            (true, true) => tl[(i, j)],
            (true, false) => tr[(i, j - c0)],
            (false, true) => bl[(i - r0, j)],
            (false, false) => br[(i - r0, j - c0)],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> C64 {
        assert!(
            self.cols == other.rows && self.rows == other.cols,
            "trace_of_product: {}x{} * {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Entry-wise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn determinant(&self) -> C64 {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap_or(col);
            if a[pivot * n + col].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for row in col + 1..n {
                let f = a[row * n + col] / p;
                if f.norm() == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[row * n + j] -= f * v;
                }
            }
        }
        det
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Numerical rank: singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let largest = sv.first().copied().unwrap_or(0.0);
        if largest == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * largest).count()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self^H * rhs` without materialising the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul: row mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * self^H`.
    pub fn gram(&self) -> Self {
        self.matmul(&self.adjoint())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert!(
            self.rows == rhs.rows && self.cols == rhs.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            rhs.rows,
            rhs.cols
        );
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMat {
    type Output = ComplexMat;
    fn add(self, rhs: &ComplexMat) -> ComplexMat {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMat {
    type Output = ComplexMat;
    fn sub(self, rhs: &ComplexMat) -> ComplexMat {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &ComplexMat {
    type Output = ComplexMat;
    fn mul(self, rhs: &ComplexMat) -> ComplexMat {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMat {
    type Output = ComplexMat;
    fn neg(self) -> ComplexMat {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.5}{:+.5}j ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn determinant_of_triangular_and_permuted() {
        let m = ComplexMat::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 3.0), c(5.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ]);
        assert!((m.determinant() - c(0.0, -6.0)).norm() < 1e-14);

        let p = ComplexMat::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((p.determinant() - c(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(ComplexMat::zeros(3, 3).determinant(), c(0.0, 0.0));
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        // 3x3 rule of Sarrus as an independent route
        let m = ComplexMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.7 - 1.3, (i as f64 - j as f64) * 0.4));
        let e = |i: usize, j: usize| m[(i, j)];
        let sarrus = e(0, 0) * e(1, 1) * e(2, 2) + e(0, 1) * e(1, 2) * e(2, 0) + e(0, 2) * e(1, 0) * e(2, 1)
            - e(0, 2) * e(1, 1) * e(2, 0)
            - e(0, 0) * e(1, 2) * e(2, 1)
            - e(0, 1) * e(1, 0) * e(2, 2);
        assert!((m.determinant() - sarrus).norm() < 1e-12);
    }

    #[test]
    fn rank_detects_deficiency() {
        let m = ComplexMat::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 1.0), c(-1.0, 0.0)],
        ]);
        assert_eq!(m.rank(1e-9), 1);
        assert_eq!(ComplexMat::identity(4).rank(1e-9), 4);
        assert_eq!(ComplexMat::zeros(2, 2).rank(1e-9), 0);
    }

    #[test]
    fn products_agree() {
        let a = ComplexMat::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let b = ComplexMat::from_fn(2, 2, |i, j| c(j as f64, i as f64 * 2.0));
        assert!(a.adjoint_mul(&b).approx_eq(&(&a.adjoint() * &b), 1e-14));
        let sq = ComplexMat::from_fn(3, 3, |i, j| c(i as f64 - j as f64, 1.0));
        let t = sq.trace_of_product(&sq.adjoint());
        assert!((t - sq.gram().trace()).norm() < 1e-12);
        assert!((t.re - sq.frobenius_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn blocks_assemble_in_place() {
        let i2 = ComplexMat::identity(2);
        let z = ComplexMat::zeros(2, 2);
        let m = ComplexMat::from_blocks(&z, &i2, &i2, &z);
        assert_eq!(m[(0, 2)], c(1.0, 0.0));
        assert_eq!(m[(3, 1)], c(1.0, 0.0));
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    #[should_panic]
    fn mismatched_product_panics() {
        let _ = &ComplexMat::zeros(2, 3) * &ComplexMat::zeros(2, 3);
    }
}
