//! Hermitian eigendecomposition by cyclic Jacobi rotations, plus the
//! generalized Rayleigh-quotient maximizer solved by substitution.

use num_complex::Complex64;

use super::{invert, CMatrix, CVector, LinalgError, HERMITIAN_RTOL};

const MAX_SWEEPS: usize = 60;
const OFF_DIAGONAL_RTOL: f64 = 1e-14;

/// Full eigendecomposition of a Hermitian matrix. Returns eigenvalues and the
/// unitary matrix whose columns are the matching eigenvectors, in ascending
/// eigenvalue order. The input is symmetrized internally; callers that need
/// the Hermitian-deviation check should go through [`hermitian_max_eigpair`].
pub fn hermitian_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    assert!(h.is_square(), "eigendecomposition requires a square matrix");
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tol = OFF_DIAGONAL_RTOL * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        // one last check: the final sweep may have finished the job
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() > tol {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).expect("finite eigenvalues"));

    let sorted_vals: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let sorted_vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((sorted_vals, sorted_vecs))
}

/// One complex Jacobi rotation annihilating the (p, q) entry.
///
/// With b = a_pq = |b|·e^{jβ}, the plane rotation
///   R_pp = c, R_qq = c, R_pq = s·e^{jβ}, R_qp = −s·e^{−jβ}
/// applied as a ← Rᴴ a R zeroes a_pq when tan(θ) solves
/// t² + 2τt − 1 = 0 with τ = (a_qq − a_pp) / (2|b|).
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let b = a[(p, q)];
    let b_abs = b.norm();
    if b_abs == 0.0 {
        return;
    }
    let phase = b / b_abs;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * b_abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.rows();
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        let new_ip = c * aip - s * phase.conj() * aiq;
        let new_iq = s * phase * aip + c * aiq;
        a[(i, p)] = new_ip;
        a[(i, q)] = new_iq;
        a[(p, i)] = new_ip.conj();
        a[(q, i)] = new_iq.conj();
    }
    a[(p, p)] = Complex64::new(app - t * b_abs, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * b_abs, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    for i in 0..v.rows() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = c * vip - s * phase.conj() * viq;
        v[(i, q)] = s * phase * vip + c * viq;
    }
}

/// Maximum eigenpair of a Hermitian matrix.
///
/// Rejects inputs whose Hermitian deviation exceeds `1e-9` of the Frobenius
/// norm, symmetrizes the rest, and returns the largest eigenvalue with its
/// unit-norm eigenvector in canonical phase (first largest-magnitude entry
/// real nonnegative).
pub fn hermitian_max_eigpair(h: &CMatrix) -> Result<(f64, CVector), LinalgError> {
    assert!(h.is_square(), "eigendecomposition requires a square matrix");
    let norm = h.frobenius_norm();
    let deviation = h.hermitian_deviation();
    if norm > 0.0 && deviation > HERMITIAN_RTOL * norm {
        return Err(LinalgError::NotHermitian {
            deviation: deviation / norm,
            tolerance: HERMITIAN_RTOL,
        });
    }
    let (evals, evecs) = hermitian_eig(h)?;
    let n = h.rows();

    let mut best = 0;
    for i in 1..n {
        if evals[i] > evals[best] {
            best = i;
        }
    }
    let vec = CVector::new((0..n).map(|i| evecs[(i, best)]).collect());
    Ok((evals[best], vec.canonicalized()))
}

/// Maximizer of the generalized Rayleigh quotient uᴴDu / uᴴ(MᴴM)u.
///
/// Substitutes x = M·u, eigendecomposes (M⁻¹)ᴴ·D·M⁻¹ and back-substitutes
/// u = M⁻¹·x. Returns the unit-norm, canonical-phase maximizer.
pub fn generalized_max_eigvec(d: &CMatrix, m: &CMatrix) -> Result<CVector, LinalgError> {
    assert!(d.is_square() && m.is_square(), "square matrices required");
    assert_eq!(d.rows(), m.rows(), "dimension mismatch between D and M");
    let m_inv = invert(m)?;
    let reduced = &m_inv.conj_transpose().mul_mat(d) * &m_inv;
    let (_, x) = hermitian_max_eigpair(&reduced.hermitian_part())?;
    let u = &m_inv * &x;
    Ok(u.canonicalized())
}
