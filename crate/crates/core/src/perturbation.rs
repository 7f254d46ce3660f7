//! First-order biorthogonal perturbation theory in the coupling J for two
//! identical resonant qubits in the PT-preserving phase.
//!
//! Left states are stored as kets `w` so that `<w|v>` (conjugate-linear in
//! `w`) gives the biorthogonal pairing.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap_phase, Evolved};
use crate::error::{Error, Result};
use crate::numerics::{c, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::state::PureState;

/// `|eta|` below this is treated as sitting on the exceptional point.
pub const EP_ETA_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    MinusMinus,
    One,
    Two,
    PlusPlus,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::MinusMinus, Label::One, Label::Two, Label::PlusPlus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::MinusMinus => "--",
            Label::One => "1",
            Label::Two => "2",
            Label::PlusPlus => "++",
        }
    }
}

/// Checked `eta > 0` for the perturbative formulas.
pub fn preserving_eta(gamma: f64, omega: f64) -> Result<f64> {
    if !(gamma >= 0.0 && omega >= 0.0 && gamma.is_finite() && omega.is_finite()) {
        return Err(Error::InvalidParameter("gamma and omega must be finite and >= 0".into()));
    }
    let eta_sq = 16.0 * omega * omega - gamma * gamma;
    let eta = eta_sq.abs().sqrt();
    if eta < EP_ETA_TOL {
        return Err(Error::AtExceptionalPoint { eta });
    }
    if eta_sq < 0.0 {
        return Err(Error::BrokenPhase { eta_squared: eta_sq });
    }
    Ok(eta)
}

fn vec4(a: C64, b: C64, cc: C64, d: C64, scale: C64) -> CVector {
    CVector::new(vec![a * scale, b * scale, cc * scale, d * scale])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnperturbedBasis {
    /// Order: `--`, `-+`, `+-`, `++`.
    pub eigenvalues: [C64; 4],
    pub right: [CVector; 4],
    pub left: [CVector; 4],
}

/// Product eigenstates of the uncoupled pair, biorthonormalized.
pub fn unperturbed_basis(gamma: f64, omega: f64) -> Result<UnperturbedBasis> {
    let e = c(preserving_eta(gamma, omega)?, 0.0);
    let ig = I * gamma;
    let w = c(4.0 * omega, 0.0);
    let k = ONE / (e * 2.0);
    let mm = vec4(e - ig, -w, -w, e + ig, k);
    let pp = vec4(e + ig, w, w, e - ig, k);
    let mp = vec4(-w, ig - e, ig + e, w, k);
    let pm = vec4(-w, ig + e, ig - e, w, k);
    let right = [mm, mp, pm, pp];
    // the dual rows carry the same components as the kets
    let left = right.clone().map(|v| v.conj());
    let base = -ig / 2.0;
    Ok(UnperturbedBasis {
        eigenvalues: [base - e / 2.0, base, base, base + e / 2.0],
        right,
        left,
    })
}

/// The coupling term `|fe><ef| + |ef><fe|` scaled by J.
pub fn interaction(j: f64) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(1, 2)] = c(j, 0.0);
    m[(2, 1)] = c(j, 0.0);
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateLift {
    /// `|psi~_1> = (0, -1, 1, 0)/sqrt2` and `|psi~_2>`.
    pub right: [CVector; 2],
    pub left: [CVector; 2],
    /// Interaction restricted to the degenerate pair in the `{-+, +-}` basis.
    pub submatrix: CMatrix,
    /// First-order shifts `{-J, J - 16 J Omega^2 / eta^2}`.
    pub shifts: [f64; 2],
}

pub fn degenerate_lift(gamma: f64, omega: f64, j: f64) -> Result<DegenerateLift> {
    let b = unperturbed_basis(gamma, omega)?;
    let eta = preserving_eta(gamma, omega)?;
    let v = interaction(j);
    let pair = [1usize, 2];
    let submatrix = CMatrix::from_fn(2, 2, |a, k| {
        b.left[pair[a]].dot(&v.mul_vec(&b.right[pair[k]]))
    });
    let s = c(FRAC_1_SQRT_2, 0.0);
    let one = (&b.right[1] - &b.right[2]).scale(s);
    let two = (&b.right[1] + &b.right[2]).scale(s);
    let one_l = (&b.left[1] - &b.left[2]).scale(s);
    let two_l = (&b.left[1] + &b.left[2]).scale(s);
    Ok(DegenerateLift {
        right: [one, two],
        left: [one_l, two_l],
        submatrix,
        shifts: [-j, j - 16.0 * j * omega * omega / (eta * eta)],
    })
}

/// Perturbed eigenvalues and eigenstates, first order in J.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalBasis {
    pub gamma: f64,
    pub omega: f64,
    pub coupling: f64,
    pub labels: [Label; 4],
    pub eigenvalues: [C64; 4],
    pub right: [CVector; 4],
    pub left: [CVector; 4],
}

impl BiorthogonalBasis {
    /// Matrix of pairings `<Psibar_j|Psi_k>`.
    pub fn gram(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |a, k| self.left[a].dot(&self.right[k]))
    }

    /// `max |<Psibar_j|Psi_k> - delta_jk|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        self.gram().max_abs_diff(&CMatrix::identity(4))
    }

    /// `max |sum_k |Psi_k><Psibar_k| - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(4, 4);
        for k in 0..4 {
            sum = &sum + &self.right[k].outer(&self.left[k]);
        }
        sum.max_abs_diff(&CMatrix::identity(4))
    }

    pub fn index(&self, label: Label) -> usize {
        self.labels.iter().position(|l| *l == label).unwrap_or(0)
    }

    pub fn eigenvalue(&self, label: Label) -> C64 {
        self.eigenvalues[self.index(label)]
    }
}

pub fn perturbed_eigensystem(gamma: f64, omega: f64, j: f64) -> Result<BiorthogonalBasis> {
    if !(j >= 0.0) || !j.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling must be finite and >= 0, got {j}")));
    }
    let eta = preserving_eta(gamma, omega)?;
    let e = c(eta, 0.0);
    let ig = I * gamma;
    let (e2, e3, e4) = (eta * eta, eta.powi(3), eta.powi(4));
    let w2 = omega * omega;
    let jw = c(8.0 * j * w2, 0.0);
    let base = -ig / 2.0;

    let lam_one = base - j;
    let lam_two = base - j * gamma * gamma / e2;
    let shift = 8.0 * j * w2 / e2;
    let lam_mm = base - e / 2.0 + shift;
    let lam_pp = base + e / 2.0 + shift;

    let s2 = c(FRAC_1_SQRT_2, 0.0);
    let one = vec4(ZERO, -ONE, ONE, ZERO, s2);

    let n2 = s2 / e3;
    let jg = I * (2.0 * j * gamma);
    let w4 = c(4.0 * omega, 0.0);
    let two = vec4(-w4 * (e2 + jg), ig * e2, ig * e2, w4 * (e2 - jg), n2);
    let two_l = vec4(-w4 * (e2 - jg), -ig * e2, -ig * e2, w4 * (e2 + jg), n2);

    let n4 = c(0.5 / e4, 0.0);
    let mid_mm = -w4 * (e3 - 2.0 * j * e2 + 24.0 * j * w2);
    let mid_pp = w4 * (e3 + 2.0 * j * e2 - 24.0 * j * w2);
    let mm = vec4(
        e3 * (e - ig) + jw * (e - 3.0 * ig),
        mid_mm,
        mid_mm,
        e3 * (e + ig) + jw * (e + 3.0 * ig),
        n4,
    );
    let mm_l = vec4(
        e3 * (e + ig) + jw * (e + 3.0 * ig),
        mid_mm,
        mid_mm,
        e3 * (e - ig) + jw * (e - 3.0 * ig),
        n4,
    );
    let pp = vec4(
        e3 * (e + ig) - jw * (e + 3.0 * ig),
        mid_pp,
        mid_pp,
        e3 * (e - ig) - jw * (e - 3.0 * ig),
        n4,
    );
    let pp_l = vec4(
        e3 * (e - ig) - jw * (e - 3.0 * ig),
        mid_pp,
        mid_pp,
        e3 * (e + ig) - jw * (e + 3.0 * ig),
        n4,
    );

    Ok(BiorthogonalBasis {
        gamma,
        omega,
        coupling: j,
        labels: Label::ALL,
        eigenvalues: [lam_mm, lam_one, lam_two, lam_pp],
        right: [mm, one.clone(), two, pp],
        left: [mm_l, one, two_l, pp_l],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeparations {
    pub d_1_mm: f64,
    pub d_2_mm: f64,
    pub d_pp_1: f64,
    pub d_pp_2: f64,
}

pub fn energy_separations(gamma: f64, omega: f64, j: f64) -> Result<EnergySeparations> {
    let eta = preserving_eta(gamma, omega)?;
    let e2 = eta * eta;
    let g2 = gamma * gamma;
    let a = j * (3.0 * e2 + g2) / e2;
    let b = j * (e2 + 3.0 * g2) / e2;
    Ok(EnergySeparations {
        d_1_mm: (eta - a) / 2.0,
        d_2_mm: (eta - b) / 2.0,
        d_pp_1: (eta + a) / 2.0,
        d_pp_2: (eta + b) / 2.0,
    })
}

/// `sum_k <Psibar_k|psi0> exp(-i t Lambda_k) |Psi_k>`.
pub fn perturbative_evolve(psi0: &PureState, t: f64, basis: &BiorthogonalBasis) -> Result<Evolved> {
    let v0 = psi0.to_vector();
    let mut out = CVector::zeros(4);
    for k in 0..4 {
        let coeff = basis.left[k].dot(&v0) * (-I * t * basis.eigenvalues[k]).exp();
        out = &out + &basis.right[k].scale(coeff);
    }
    let raw = PureState::from_vector(&out)?;
    Ok(Evolved { raw, normalized: raw.normalize()? })
}

/// Closed-form concurrence from `|ff>`:
/// `C = |16 eta^2 Omega^2 (exp(i t chi2) - 1) / B|`.
pub fn concurrence_closed_form(gamma: f64, omega: f64, j: f64, t: f64) -> Result<f64> {
    let eta = preserving_eta(gamma, omega)?;
    let e2 = eta * eta;
    let g = gamma;
    let w2 = omega * omega;
    let chi = j * (e2 + 3.0 * g * g) / e2;
    let b = 16.0 * w2 * (g * g + 32.0 * w2)
        + g * (g * (g * g - e2) * (t * eta).cos()
            - 2.0 * g * g * eta * (t * eta).sin()
            - 64.0 * w2 * (t * chi / 2.0).cos() * (g * (t * eta / 2.0).cos() - eta * (t * eta / 2.0).sin()));
    let num = ((I * t * chi).exp() - ONE) * (16.0 * e2 * w2);
    Ok((num / b).norm())
}

/// The same concurrence written as `2 |A / B|`.
pub fn concurrence_closed_form_ab(gamma: f64, omega: f64, j: f64, t: f64) -> Result<f64> {
    let eta = preserving_eta(gamma, omega)?;
    let e2 = eta * eta;
    let g = gamma;
    let g2 = g * g;
    let k = j * (1.0 + 3.0 * g2 / e2);
    let a = ((I * t * k).exp() - ONE) * (e2 * (e2 + g2));
    let phase = (I * t * eta).exp();
    let b = (ONE + (I * 2.0 * t * eta).exp()) * (g2 * (g2 - e2))
        + phase
            * 2.0
            * ((g2 + e2) * (3.0 * g2 + 2.0 * e2)
                - 4.0 * g * (g2 + e2) * (t * k / 2.0).cos() * (g * (t * eta / 2.0).cos() - eta * (t * eta / 2.0).sin())
                - 2.0 * g2 * g * eta * (t * eta).sin());
    Ok(2.0 * (a / b).norm())
}

/// Approximate (unnormalized) amplitudes of the state evolved from `|ff>`,
/// with `beta = zeta`.
pub fn approximate_amplitudes(gamma: f64, omega: f64, j: f64, t: f64) -> Result<PureState> {
    let eta = preserving_eta(gamma, omega)?;
    let e = c(eta, 0.0);
    let ig = I * gamma;
    let (e2, e3, e6, e8) = (eta * eta, eta.powi(3), eta.powi(6), eta.powi(8));
    let g2 = gamma * gamma;
    let k = j * (1.0 + 3.0 * g2 / e2);
    let big_e = (I * t * eta).exp();
    let half = (I * t * (eta + k) / 2.0).exp();
    let pre = (-(c(gamma, 0.0) + I * eta + I * j * (1.0 + g2 / e2)) * (t / 2.0)).exp();
    let sq = (g2 + e2) * (g2 + e2);

    let alpha = pre / (16.0 * e8)
        * ((big_e - ONE) * (4.0 * j * e3 * sq)
            + ((e - ig) * (e - ig) + big_e * (e + ig) * (e + ig)) * (j * j * sq)
            + (((big_e + ONE) * (e2 - g2)) - (big_e - ONE) * ig * (2.0 * eta) + half * (2.0 * (e2 + g2))) * (4.0 * e6));
    let beta = pre * (omega / (4.0 * e8))
        * ((ig * (ONE + big_e - half * 2.0) - (big_e - ONE) * eta) * (4.0 * e6)
            + ((e + ig) * big_e - e + ig) * (j * j * sq)
            + (ONE - big_e) * I * (4.0 * j * gamma * e3 * (g2 + e2)));
    let delta = pre * (4.0 * omega * omega / e8)
        * ((ONE + big_e - half * 2.0) * e6
            + (big_e - ONE) * (j * e3 * (e2 - g2))
            + (big_e + ONE) * (64.0 * j * j * omega.powi(4)));
    Ok(PureState::new(alpha, beta, beta, delta))
}

/// `pi/2 - Arg(beta')`, wrapped into `(-pi, pi]`.
pub fn differential_phase_analytic(gamma: f64, omega: f64, j: f64, t: f64) -> Result<f64> {
    let amps = approximate_amplitudes(gamma, omega, j, t)?;
    Ok(wrap_phase(FRAC_PI_2 - amps.beta.arg()))
}
