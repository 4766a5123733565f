//! Dense complex linear algebra for small matrices.
//!
//! Everything here operates on heap-backed row-major [`CMatrix`] / [`CVector`]
//! values sized for coupled-coil networks (3x3 up to roughly 20x20): LU
//! solve/invert, Hermitian eigendecomposition by cyclic Jacobi rotations, and
//! generalized Rayleigh-quotient maximization via substitution. All functions
//! are pure; dimension misuse panics, numerical failure returns [`LinalgError`].

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

mod eig;
mod lu;

pub use eig::{generalized_max_eigvec, hermitian_eig, hermitian_max_eigpair};
pub use lu::{invert, solve};

/// Relative pivot threshold below which LU factorization reports singularity.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-13;

/// Relative Hermitian-deviation tolerance accepted by the eigensolver.
pub const HERMITIAN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {pivot_index} (|pivot| = {pivot_abs:.3e})")]
    SingularMatrix { pivot_index: usize, pivot_abs: f64 },
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e} > {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("Jacobi eigendecomposition did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries. Panics if the entry count does
    /// not match or any entry is non-finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "entry count mismatch");
        assert!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "matrix entries must be finite"
        );
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Real diagonal matrix, handy for the priority/load weightings.
    pub fn diagonal_real(entries: &[f64]) -> Self {
        let complex: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&complex)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
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

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        CVector::new(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A − Aᴴ‖_F, zero for exactly Hermitian input.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square(), "Hermitian deviation needs a square matrix");
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// (A + Aᴴ)/2 with the diagonal forced real.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "Hermitian part needs a square matrix");
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)].conj());
            }
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.mul_mat(rhs)
    }
}

impl Mul<&CVector> for &CMatrix {
    type Output = CVector;

    fn mul(self, rhs: &CVector) -> CVector {
        self.mul_vec(rhs)
    }
}

impl Add<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.6e}{:+.6e}j", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl CVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        assert!(!data.is_empty(), "vector length must be positive");
        assert!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "vector entries must be finite"
        );
        Self { data }
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "vector length must be positive");
        Self {
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn unit(len: usize, index: usize) -> Self {
        assert!(index < len);
        let mut v = Self::zeros(len);
        v[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hermitian inner product Σᵢ conj(selfᵢ)·otherᵢ.
    pub fn dot_h(&self, other: &Self) -> Complex64 {
        assert_eq!(self.len(), other.len(), "dot product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Element-wise magnitudes.
    pub fn abs(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm2();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(Complex64::new(1.0 / n, 0.0))
    }

    /// Unit-norm copy with the first largest-magnitude entry rotated to be
    /// real nonnegative. Deterministic representative of the phase class.
    pub fn canonicalized(&self) -> Self {
        let mut v = self.normalized();
        let max_abs = v.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v
            .data
            .iter()
            .position(|z| z.norm() == max_abs)
            .expect("nonempty vector");
        let z = v.data[pivot];
        let mag = z.norm();
        if mag > 0.0 {
            let phase = z.conj() / mag;
            v = v.scale(phase);
            v.data[pivot] = Complex64::new(mag, 0.0);
        }
        v
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

impl Add<&CVector> for &CVector {
    type Output = CVector;

    fn add(self, rhs: &CVector) -> CVector {
        assert_eq!(self.len(), rhs.len());
        CVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&CVector> for &CVector {
    type Output = CVector;

    fn sub(self, rhs: &CVector) -> CVector {
        assert_eq!(self.len(), rhs.len());
        CVector {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CVector {
    type Output = CVector;

    fn neg(self) -> CVector {
        CVector {
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

impl fmt::Display for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, z) in self.data.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:+.6e}{:+.6e}j", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal_patterns() {
        let id = CMatrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                assert_eq!(id[(i, j)], expect);
            }
        }
        let d = CMatrix::diagonal(&[c(2.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(d[(0, 0)], c(2.0, 0.0));
        assert_eq!(d[(1, 1)], c(0.0, 1.0));
        assert_eq!(d[(0, 1)], c(0.0, 0.0));
        assert_eq!(d[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn conj_transpose_and_hermitian_part() {
        let m = CMatrix::new(2, 2, vec![c(1.0, 0.0), c(2.0, 3.0), c(0.0, -1.0), c(4.0, 0.0)]);
        let mh = m.conj_transpose();
        assert_eq!(mh[(0, 1)], c(0.0, 1.0));
        assert_eq!(mh[(1, 0)], c(2.0, -3.0));

        let h = m.hermitian_part();
        assert!(h.hermitian_deviation() < 1e-15);
        assert_eq!(h[(0, 0)].im, 0.0);
    }

    #[test]
    fn canonical_phase_makes_pivot_real_nonnegative() {
        let v = CVector::new(vec![c(0.0, 2.0), c(1.0, 0.0)]);
        let canon = v.canonicalized();
        assert!((canon[0].re - 2.0 / 5.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(canon[0].im, 0.0);
        // phase applied uniformly: second entry rotated by -pi/2
        assert!((canon[1].im + 1.0 / 5.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "finite")]
    fn non_finite_entries_rejected() {
        CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]);
    }

    #[test]
    fn matvec_matches_manual_expansion() {
        let m = CMatrix::new(2, 2, vec![c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0), c(0.0, 0.0)]);
        let v = CVector::new(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let out = &m * &v;
        assert_eq!(out[0], c(1.0, 1.0) + c(0.0, 2.0) * c(0.0, 1.0));
        assert_eq!(out[1], c(3.0, 0.0));
    }
}
