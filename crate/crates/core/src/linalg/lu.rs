//! Partial-pivoted LU factorization for complex square matrices.

use num_complex::Complex64;

use super::{CMatrix, CVector, LinalgError, SINGULAR_PIVOT_RTOL};

/// Packed LU factors with row permutation.
pub(crate) struct LuFactors {
    lu: CMatrix,
    perm: Vec<usize>,
}

/// Largest row sum of magnitudes (the infinity norm), used to scale the
/// singularity threshold.
fn max_row_norm(a: &CMatrix) -> f64 {
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn factorize(a: &CMatrix) -> Result<LuFactors, LinalgError> {
    assert!(a.is_square(), "LU factorization requires a square matrix");
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let threshold = SINGULAR_PIVOT_RTOL * max_row_norm(a);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_abs = lu[(col, col)].norm();
        for row in (col + 1)..n {
            let mag = lu[(row, col)].norm();
            if mag > pivot_abs {
                pivot_abs = mag;
                pivot_row = row;
            }
        }
        if pivot_abs < threshold || pivot_abs == 0.0 {
            return Err(LinalgError::SingularMatrix {
                pivot_index: col,
                pivot_abs,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(col, pivot_row);
        }
        let pivot = lu[(col, col)];
        for row in (col + 1)..n {
            let factor = lu[(row, col)] / pivot;
            lu[(row, col)] = factor;
            for j in (col + 1)..n {
                let sub = factor * lu[(col, j)];
                lu[(row, j)] -= sub;
            }
        }
    }

    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub(crate) fn solve(&self, b: &CVector) -> CVector {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "right-hand side length mismatch");

        // forward substitution on the permuted rhs
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = b[self.perm[i]];
            for j in 0..i {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        // back substitution
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        CVector::new(x)
    }
}

/// Solves A·x = b. Errors if a pivot falls below `1e-13` of the largest row
/// norm of A.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector, LinalgError> {
    Ok(factorize(a)?.solve(b))
}

/// Inverts a square matrix by solving against the identity columns.
pub fn invert(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.rows();
    let factors = factorize(a)?;
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        let e = CVector::unit(n, col);
        let x = factors.solve(&e);
        for row in 0..n {
            inv[(row, col)] = x[row];
        }
    }
    Ok(inv)
}
