//! Cyclic Jacobi rotations for real symmetric matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors (matching columns)
/// of a real symmetric matrix. Sweeps stop once the off-diagonal Frobenius
/// mass drops below `tol` times the Frobenius norm of the input.
pub fn jacobi_eigensystem(sym: &DMatrix<f64>, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = sym.nrows();
    if n != sym.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", n, sym.ncols())));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let scale = sym.norm().max(f64::MIN_POSITIVE);
    let asym = (sym - sym.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!("matrix is not symmetric (residue {asym:e})")));
    }

    let mut a = sym.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle from the stable tangent formula
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol * scale {
        return Err(Error::NonConvergence { what: "Jacobi sweeps", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// `A ← Gᵀ A G`, `V ← V G` for the rotation in the `(p, q)` plane that
/// zeroes `A[p][q]`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
