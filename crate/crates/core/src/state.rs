//! Two-qubit pure and mixed states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigh, CMatrix, CVector, C64, ONE, ZERO};

const NORMALIZED_TOL: f64 = 1e-12;

/// `alpha |ff> + beta |fe> + zeta |ef> + delta |ee>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub alpha: C64,
    pub beta: C64,
    pub zeta: C64,
    pub delta: C64,
    pub normalized: bool,
}

impl PureState {
    pub fn new(alpha: C64, beta: C64, zeta: C64, delta: C64) -> Self {
        let mut s = Self { alpha, beta, zeta, delta, normalized: false };
        s.normalized = (s.norm_sqr() - 1.0).abs() <= NORMALIZED_TOL;
        s
    }

    pub fn from_amplitudes(a: [C64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn from_vector(v: &CVector) -> Result<Self> {
        if v.dim() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "two-qubit state needs 4 amplitudes, got {}",
                v.dim()
            )));
        }
        Ok(Self::new(v[0], v[1], v[2], v[3]))
    }

    /// Basis state `|ab>` with basis index `k = 2a + b`.
    pub fn basis(k: usize) -> Self {
        let mut a = [ZERO; 4];
        a[k] = ONE;
        Self::from_amplitudes(a)
    }

    pub fn ff() -> Self {
        Self::basis(0)
    }

    pub fn fe() -> Self {
        Self::basis(1)
    }

    pub fn ef() -> Self {
        Self::basis(2)
    }

    pub fn ee() -> Self {
        Self::basis(3)
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        [self.alpha, self.beta, self.zeta, self.delta]
    }

    pub fn to_vector(&self) -> CVector {
        CVector::new(self.amplitudes().to_vec())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes().iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        let a = self.amplitudes().map(|z| z / n);
        let mut s = Self::from_amplitudes(a);
        s.normalized = true;
        Ok(s)
    }

    pub fn scale(&self, k: C64) -> Self {
        Self::from_amplitudes(self.amplitudes().map(|z| z * k))
    }

    /// `|psi><psi|` without normalization.
    pub fn projector(&self) -> DensityMatrix {
        let v = self.to_vector();
        DensityMatrix(v.outer(&v))
    }
}

/// 4x4 density matrix; trace is not forced to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be 4x4, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("density matrix"));
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        psi.projector()
    }

    pub fn maximally_mixed() -> Self {
        Self(CMatrix::identity(4).scale(C64::new(0.25, 0.0)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.0.max_abs_diff(&self.0.adjoint())
    }

    pub fn symmetrized(&self) -> Self {
        Self(self.0.hermitian_part())
    }

    pub fn trace_normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::NotADensityMatrix(format!("trace {tr} is not positive")));
        }
        Ok(Self(self.0.scale(C64::new(1.0 / tr, 0.0))))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (w, _) = eigh(&self.0)?;
        Ok(w[0])
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// Diagonal populations `rho_kk`.
    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.0[(k, k)].re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    #[test]
    fn normalization_flag() {
        assert!(PureState::ff().normalized);
        let s = PureState::new(ONE, ONE, ZERO, ZERO);
        assert!(!s.normalized);
        let n = s.normalize().unwrap();
        assert!(n.normalized && (n.norm() - 1.0).abs() < 1e-15);
        assert_eq!(PureState::new(ZERO, ZERO, ZERO, ZERO).normalize(), Err(Error::ZeroState));
    }

    #[test]
    fn projector_of_basis_state() {
        let p = PureState::ef().projector();
        assert_eq!(p.populations(), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.trace(), 1.0);
        assert!((p.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_normalization_rejects_zero() {
        let z = DensityMatrix::new(CMatrix::zeros(4, 4)).unwrap();
        assert!(z.trace_normalized().is_err());
        let r = DensityMatrix::new(CMatrix::identity(4)).unwrap().trace_normalized().unwrap();
        assert!((r.matrix()[(0, 0)] - c(0.25, 0.0)).norm() < 1e-16);
    }
}
