//! Singular values by one-sided Jacobi rotations.
//!
//! Small singular values come out with absolute error of order
//! `eps * ||A||`, unlike square roots of eigenvalues of `A^dagger A`.

use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Singular values of `m`, largest first.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect();
    let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum::<C64>();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = dot(&a[i], &a[i]).re;
                let beta = dot(&a[j], &a[j]).re;
                let gamma = dot(&a[i], &a[j]);
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..rows {
                    let x = a[i][k];
                    let y = a[j][k] * phase.conj();
                    a[i][k] = x * cs - y * sn;
                    a[j][k] = x * sn + y * cs;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence("Jacobi SVD sweeps exhausted".into()));
    }
    let mut s: Vec<f64> = a.iter().map(|col| dot(col, col).re.sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, expm, sigma_x, sigma_y};

    #[test]
    fn diagonal_values_are_sorted_moduli() {
        let m = CMatrix::diagonal(&[c(0.5, 0.0), c(0.0, -3.0), c(-1.0, 0.0)]);
        assert_eq!(singular_values(&m).unwrap(), vec![3.0, 1.0, 0.5]);
    }

    #[test]
    fn unitary_factors_do_not_change_values() {
        let u = expm(&sigma_x().kron(&sigma_y()).scale(c(0.0, -0.7))).unwrap();
        let v = expm(&sigma_y().kron(&sigma_y()).scale(c(0.0, 0.3))).unwrap();
        let d = CMatrix::diagonal(&[c(2.0, 0.0), c(1.0, 0.0), c(1e-9, 0.0), c(0.0, 0.0)]);
        let s = singular_values(&(&(&u * &d) * &v)).unwrap();
        for (a, b) in s.iter().zip([2.0, 1.0, 1e-9, 0.0]) {
            assert!((a - b).abs() < 1e-15 * 4.0, "{a} vs {b}");
        }
    }

    #[test]
    fn rank_one_has_a_single_value() {
        let x = [c(0.3, 0.1), c(-0.2, 0.5), c(0.0, 1.0), c(0.7, 0.0)];
        let m = CMatrix::from_fn(4, 4, |i, j| x[i] * x[j]);
        let s = singular_values(&m).unwrap();
        let norm_sqr: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        assert!((s[0] - norm_sqr).abs() < 1e-15);
        assert!(s[1..].iter().all(|v| *v < 1e-15));
    }
}
