//! Hamiltonians of the driven non-Hermitian qubit pair.
//!
//! Basis order is `{|ff>, |fe>, |ef>, |ee>}` everywhere; qubit 1 is the left
//! tensor factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, sigma_x, CMatrix, C64, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    /// Detuning (rad/us).
    pub delta: f64,
    /// Decay rate of `|e>` (1/us).
    pub gamma: f64,
    /// Drive amplitude (rad/us).
    pub omega: f64,
}

impl QubitParams {
    pub fn new(delta: f64, gamma: f64, omega: f64) -> Result<Self> {
        let p = Self { delta, gamma, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn resonant(gamma: f64, omega: f64) -> Result<Self> {
        Self::new(0.0, gamma, omega)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("gamma", self.gamma), ("omega", self.omega)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidParameter(format!("omega must be >= 0, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn eta(&self) -> C64 {
        eta(self.gamma, self.omega)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub qubit1: QubitParams,
    pub qubit2: QubitParams,
    /// Exchange coupling J (rad/us).
    pub coupling: f64,
}

impl SystemParams {
    pub fn new(qubit1: QubitParams, qubit2: QubitParams, coupling: f64) -> Result<Self> {
        let s = Self { qubit1, qubit2, coupling };
        s.validate()?;
        Ok(s)
    }

    /// Two identical resonant qubits.
    pub fn identical(gamma: f64, omega: f64, coupling: f64) -> Result<Self> {
        let q = QubitParams::resonant(gamma, omega)?;
        Self::new(q, q, coupling)
    }

    pub fn validate(&self) -> Result<()> {
        self.qubit1.validate()?;
        self.qubit2.validate()?;
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling J must be finite and >= 0, got {}",
                self.coupling
            )));
        }
        Ok(())
    }

    pub fn is_identical_resonant(&self) -> bool {
        self.qubit1 == self.qubit2 && self.qubit1.delta == 0.0
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        let mut s = *self;
        s.qubit1.omega = omega;
        s.qubit2.omega = omega;
        s
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }

    pub fn hamiltonian(&self) -> CMatrix {
        coupled_hamiltonian(self)
    }
}

/// `eta = sqrt(16 Omega^2 - gamma^2)`, real in the preserving phase and
/// imaginary in the broken phase.
pub fn eta(gamma: f64, omega: f64) -> C64 {
    c(16.0 * omega * omega - gamma * gamma, 0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Preserving,
    Exceptional,
    Broken,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub eta: C64,
    pub omega_ep: f64,
    /// Slow entangling frequency; identical resonant qubits with `eta > 0` only.
    pub chi2: Option<f64>,
    /// Decoupled oscillation period `4 pi / eta` (us); preserving phase only.
    pub period: Option<f64>,
    pub phase: Phase,
}

/// Scales of qubit 1 (and of the pair when the qubits are identical).
pub fn derived_scales(s: &SystemParams) -> DerivedScales {
    let q = s.qubit1;
    let eta = q.eta();
    let eta_sq = 16.0 * q.omega * q.omega - q.gamma * q.gamma;
    let phase = if eta_sq > 0.0 {
        Phase::Preserving
    } else if eta_sq < 0.0 {
        Phase::Broken
    } else {
        Phase::Exceptional
    };
    let preserving = phase == Phase::Preserving;
    let chi2 = (preserving && s.is_identical_resonant())
        .then(|| s.coupling * (eta_sq + 3.0 * q.gamma * q.gamma) / eta_sq);
    let period = preserving.then(|| 4.0 * std::f64::consts::PI / eta.re);
    DerivedScales {
        eta,
        omega_ep: q.gamma / 4.0,
        chi2,
        period,
        phase,
    }
}

/// `[[0, Omega], [Omega, Delta - i gamma/2]]` in the basis `{|f>, |e>}`.
pub fn single_qubit_hamiltonian(p: &QubitParams) -> CMatrix {
    let w = c(p.omega, 0.0);
    CMatrix::from_rows([[ZERO, w], [w, c(p.delta, -p.gamma / 2.0)]])
}

/// `H1 x I + I x H2 + J (|fe><ef| + |ef><fe|)`.
pub fn coupled_hamiltonian(s: &SystemParams) -> CMatrix {
    let id = CMatrix::identity(2);
    let h1 = single_qubit_hamiltonian(&s.qubit1).kron(&id);
    let h2 = id.kron(&single_qubit_hamiltonian(&s.qubit2));
    let mut h = &h1 + &h2;
    h[(1, 2)] += c(s.coupling, 0.0);
    h[(2, 1)] += c(s.coupling, 0.0);
    h
}

/// Parity operator `sigma_x x sigma_x`.
pub fn parity() -> CMatrix {
    sigma_x().kron(&sigma_x())
}

/// `(PT) M (PT)^-1 = P M* P`.
pub fn pt_transform(m: &CMatrix) -> CMatrix {
    let p = parity();
    &(&p * &m.conj()) * &p
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtCheck {
    pub symmetric: bool,
    pub residual: f64,
}

/// Shift out the mean loss, `H_PT = H + i (gamma1 + gamma2)/4`, and measure
/// how far `H_PT` is from commuting with PT.
pub fn pt_symmetry_check(s: &SystemParams, tol: f64) -> PtCheck {
    let shift = I * ((s.qubit1.gamma + s.qubit2.gamma) / 4.0);
    let h_pt = &coupled_hamiltonian(s) + &CMatrix::identity(4).scale(shift);
    let residual = pt_transform(&h_pt).max_abs_diff(&h_pt);
    PtCheck {
        symmetric: residual <= tol,
        residual,
    }
}

/// Drive amplitude that gives qubit 2 the same period as qubit 1:
/// `Omega2 = sqrt((16 Omega1^2 - gamma1^2 + gamma2^2) / 16)`.
pub fn compensated_omega(gamma1: f64, omega1: f64, gamma2: f64) -> Result<f64> {
    let arg = (16.0 * omega1 * omega1 - gamma1 * gamma1 + gamma2 * gamma2) / 16.0;
    if !arg.is_finite() || arg < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "no real compensating drive for gamma1={gamma1}, omega1={omega1}, gamma2={gamma2}"
        )));
    }
    Ok(arg.sqrt())
}

/// `|ab>` basis vector index for qubit levels `a, b` (0 = f, 1 = e).
pub fn basis_index(a: usize, b: usize) -> usize {
    2 * a + b
}

/// Uncoupled eigenvalues of one identical resonant qubit, `(-i gamma -/+ eta)/4`
/// ordered as (minus, plus).
pub fn single_qubit_eigenvalues(gamma: f64, omega: f64) -> [C64; 2] {
    let e = eta(gamma, omega);
    let base = c(0.0, -gamma / 4.0);
    [base - e / 4.0, base + e / 4.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig_general;

    fn reference() -> SystemParams {
        SystemParams::identical(6.0, 1.6, 1e-3).unwrap()
    }

    #[test]
    fn hermitian_limit_single_qubit_is_pauli_x() {
        let h = single_qubit_hamiltonian(&QubitParams::resonant(0.0, 1.0).unwrap());
        assert!(h.max_abs_diff(&sigma_x()) == 0.0);
    }

    #[test]
    fn single_qubit_matrix_entries() {
        let h = single_qubit_hamiltonian(&QubitParams::resonant(6.0, 1.6).unwrap());
        assert_eq!(h[(0, 1)], c(1.6, 0.0));
        assert_eq!(h[(1, 1)], c(0.0, -3.0));
        assert_eq!(h[(0, 0)], ZERO);
    }

    #[test]
    fn single_qubit_eigenvalues_match_closed_form() {
        let h = single_qubit_hamiltonian(&QubitParams::resonant(6.0, 1.6).unwrap());
        let d = eig_general(&h, 1e-12).unwrap();
        let want = single_qubit_eigenvalues(6.0, 1.6);
        for (got, w) in d.eigenvalues.iter().zip(want) {
            assert!((got - w).norm() < 1e-12, "{got} vs {w}");
        }
    }

    #[test]
    fn coupling_element() {
        let h = coupled_hamiltonian(&reference());
        assert_eq!(h[(1, 2)], c(1e-3, 0.0));
        assert_eq!(h[(2, 1)], c(1e-3, 0.0));
    }

    #[test]
    fn decoupled_is_kronecker_sum() {
        let s = SystemParams::new(
            QubitParams::new(0.3, 6.0, 1.6).unwrap(),
            QubitParams::new(-0.1, 5.0, 1.2).unwrap(),
            0.0,
        )
        .unwrap();
        let id = CMatrix::identity(2);
        let want = &single_qubit_hamiltonian(&s.qubit1).kron(&id)
            + &id.kron(&single_qubit_hamiltonian(&s.qubit2));
        assert_eq!(coupled_hamiltonian(&s).max_abs_diff(&want), 0.0);
    }

    #[test]
    fn derived_scales_at_reference_point() {
        let d = derived_scales(&reference());
        assert!((d.eta.re - 4.96f64.sqrt()).abs() < 1e-14 && d.eta.im == 0.0);
        assert!((d.period.unwrap() - 5.642).abs() < 1e-3);
        assert_eq!(d.omega_ep, 1.5);
        let e2 = 4.96;
        assert!((d.chi2.unwrap() - 1e-3 * (e2 + 108.0) / e2).abs() < 1e-15);
    }

    #[test]
    fn derived_scales_at_ep_and_hermitian_limit() {
        let ep = derived_scales(&SystemParams::identical(6.0, 1.5, 0.0).unwrap());
        assert_eq!(ep.eta, ZERO);
        assert_eq!(ep.phase, Phase::Exceptional);
        assert!(ep.period.is_none() && ep.chi2.is_none());

        let h = derived_scales(&SystemParams::identical(0.0, 0.7, 0.0).unwrap());
        assert!((h.eta.re - 2.8).abs() < 1e-15);
        assert_eq!(h.omega_ep, 0.0);

        let broken = derived_scales(&SystemParams::identical(6.0, 1.0, 0.0).unwrap());
        assert_eq!(broken.phase, Phase::Broken);
        assert!(broken.eta.re == 0.0 && (broken.eta.im - 20f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn passive_pt_symmetry() {
        for j in [0.0, 1e-3, 0.5] {
            let r = pt_symmetry_check(&SystemParams::identical(6.0, 1.6, j).unwrap(), 1e-14);
            assert!(r.symmetric, "J={j}: {}", r.residual);
        }
        let detuned = SystemParams::new(
            QubitParams::new(0.5, 6.0, 1.6).unwrap(),
            QubitParams::resonant(6.0, 1.6).unwrap(),
            1e-3,
        )
        .unwrap();
        assert!(!pt_symmetry_check(&detuned, 1e-10).symmetric);
        let mismatched = SystemParams::new(
            QubitParams::resonant(6.0, 1.6).unwrap(),
            QubitParams::resonant(5.0, 1.6).unwrap(),
            1e-3,
        )
        .unwrap();
        // each qubit is PT symmetric after removing its own mean loss, so the sum is too
        assert!(pt_symmetry_check(&mismatched, 1e-14).symmetric);
    }

    #[test]
    fn compensation_matches_periods() {
        let w2 = compensated_omega(6.0, 1.6, 5.0).unwrap();
        assert!((eta(6.0, 1.6) - eta(5.0, w2)).norm() < 1e-12);
        assert!(compensated_omega(6.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn validation_rejects_negative_rates() {
        assert!(QubitParams::new(0.0, -1.0, 1.0).is_err());
        assert!(QubitParams::new(0.0, 1.0, -1.0).is_err());
        assert!(SystemParams::identical(6.0, 1.6, -1e-3).is_err());
        assert!(QubitParams::new(f64::NAN, 1.0, 1.0).is_err());
    }
}
