//! Principal square root via the complex Schur form and the triangular
//! recurrence of Björck and Hammarling.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::schur;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

/// Principal square root: the unique `s` with `s * s = m` and spectrum in the
/// open right half-plane.
///
/// Fails with [`Error::BranchCut`] when `m` has an eigenvalue on the closed
/// negative real axis (zero included).
pub fn principal_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (q, t) = schur(m)?;
    let n = t.nrows();
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let cut_tol = 8.0 * n as f64 * f64::EPSILON * scale;
    for i in 0..n {
        let z = t[(i, i)];
        if z.re <= cut_tol && z.im.abs() <= cut_tol {
            return Err(Error::BranchCut(z));
        }
    }
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..(n - d) {
            let j = i + d;
            let mut acc = t[(i, j)];
            for k in (i + 1)..j {
                acc -= r[(i, k)] * r[(k, j)];
            }
            let denom = r[(i, i)] + r[(j, j)];
            if denom == ZERO {
                return Err(Error::BranchCut(t[(i, i)]));
            }
            r[(i, j)] = acc / denom;
        }
    }
    let s = &q * r * q.adjoint();
    let out = ComplexMatrix::from_inner(s);
    if !out.is_finite() {
        return Err(Error::Numeric("square root overflowed".into()));
    }
    Ok(out)
}
