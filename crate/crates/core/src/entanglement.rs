//! Concurrence of pure and mixed two-qubit states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, eig_general, eigh, sigma_y, singular_values, CMatrix, C64, DEFAULT_EIG_TOL, I, ZERO};
use crate::state::{DensityMatrix, PureState};

/// Largest tolerated Hermiticity or positivity violation of a trace-normalized state.
pub const DENSITY_TOL: f64 = 1e-8;

/// `2 |alpha delta - beta zeta| / ||psi||^2`; valid for unnormalized input.
pub fn concurrence_pure(psi: &PureState) -> Result<f64> {
    let n2 = psi.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok((2.0 * (psi.alpha * psi.delta - psi.beta * psi.zeta).norm() / n2).min(1.0))
}

/// The four maximally entangled reference states
/// `(|ff>+|ee>)/sqrt2`, `i(|ff>-|ee>)/sqrt2`, `i(|fe>+|ef>)/sqrt2`, `(|fe>-|ef>)/sqrt2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellBasis {
    pub states: [PureState; 4],
}

impl BellBasis {
    pub fn new() -> Self {
        let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let is = I * s;
        Self {
            states: [
                PureState::new(s, ZERO, ZERO, s),
                PureState::new(is, ZERO, ZERO, -is),
                PureState::new(ZERO, is, is, ZERO),
                PureState::new(ZERO, s, -s, ZERO),
            ],
        }
    }
}

impl Default for BellBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// Coefficients `c_j = <e_j|psi>`; `|sum c_j^2| / ||psi||^2` is the concurrence.
pub fn bell_projection(psi: &PureState) -> Result<[C64; 4]> {
    if psi.norm_sqr() == 0.0 {
        return Err(Error::ZeroState);
    }
    let v = psi.to_vector();
    let b = BellBasis::new();
    Ok(b.states.map(|e| e.to_vector().dot(&v)))
}

/// Concurrence from the Bell coefficients.
pub fn concurrence_from_bell(coeffs: &[C64; 4], norm_sqr: f64) -> f64 {
    coeffs.iter().map(|z| z * z).sum::<C64>().norm() / norm_sqr
}

/// Spin flip `(sy x sy) rho* (sy x sy)`.
pub fn spin_flip(rho: &CMatrix) -> CMatrix {
    let yy = sigma_y().kron(&sigma_y());
    &(&yy * &rho.conj()) * &yy
}

fn validated(rho: &DensityMatrix) -> Result<CMatrix> {
    let r = rho.trace_normalized()?;
    let herm = r.hermiticity_error();
    if herm > DENSITY_TOL {
        return Err(Error::NotADensityMatrix(format!("Hermiticity violation {herm:e}")));
    }
    Ok(r.matrix().hermitian_part())
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (w, v) = eigh(m)?;
    if w[0] < -DENSITY_TOL {
        return Err(Error::NotADensityMatrix(format!("negative eigenvalue {:e}", w[0])));
    }
    let d: Vec<C64> = w.iter().map(|x| c(x.max(0.0).sqrt(), 0.0)).collect();
    Ok(&(&v * &CMatrix::diagonal(&d)) * &v.adjoint())
}

fn wootters(mut tau: Vec<f64>) -> f64 {
    tau.sort_by(|a, b| b.total_cmp(a));
    (tau[0] - tau[1] - tau[2] - tau[3]).clamp(0.0, 1.0)
}

/// Wootters concurrence `max(0, t1 - t2 - t3 - t4)`. With `rho = X X^dagger`
/// built from its eigenvectors, the `t_k` are the singular values of
/// `X^T (sy x sy) X`, the same numbers as the eigenvalues of
/// `sqrt(sqrt(rho) rho~ sqrt(rho))` without the square-root loss of
/// accuracy near zero. The input is trace-normalized first.
pub fn concurrence_mixed(rho: &DensityMatrix) -> Result<f64> {
    let r = validated(rho)?;
    let (w, v) = eigh(&r)?;
    if w[0] < -DENSITY_TOL {
        return Err(Error::NotADensityMatrix(format!("negative eigenvalue {:e}", w[0])));
    }
    let x = &v * &CMatrix::diagonal(&w.iter().map(|p| c(p.max(0.0).sqrt(), 0.0)).collect::<Vec<_>>());
    let yy = sigma_y().kron(&sigma_y());
    let t = &(&x.transpose() * &yy) * &x;
    Ok(wootters(singular_values(&t)?))
}

/// Same quantity from the square roots of the eigenvalues of `rho rho~`.
pub fn concurrence_mixed_via_product(rho: &DensityMatrix) -> Result<f64> {
    let r = validated(rho)?;
    psd_sqrt(&r)?;
    let p = &r * &spin_flip(&r);
    let ev = eig_general(&p, DEFAULT_EIG_TOL.max(1e-8))?;
    Ok(wootters(ev.eigenvalues.iter().map(|z| z.re.max(0.0).sqrt()).collect()))
}
