//! Cyclic Jacobi eigenvalue solver for small dense symmetric matrices.

use crate::error::{Error, Result};

/// Convergence threshold on the off-diagonal Frobenius norm relative to the
/// Frobenius norm of the whole matrix.
pub const JACOBI_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the symmetric `n × n` row-major matrix `a`, sorted in
/// descending order. Only the upper triangle's symmetry is assumed, not checked.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let mut m = a.to_vec();
    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= JACOBI_TOLERANCE * frob {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                // theta == 0 gives signum 1.0, i.e. a 45 degree rotation
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    m[k * n + p] = new_kp;
                    m[p * n + k] = new_kp;
                    m[k * n + q] = new_kq;
                    m[q * n + k] = new_kq;
                }
                m[p * n + p] -= t * apq;
                m[q * n + q] += t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
            }
        }
    }
    if !converged && off_norm(&m) > JACOBI_TOLERANCE * frob {
        return Err(Error::Numerical(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}
