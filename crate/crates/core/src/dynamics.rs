//! Exact evolution under the full non-Hermitian Hamiltonian, with amplitude,
//! phase and reduced-qubit diagnostics.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::concurrence_pure;
use crate::error::{Error, Result};
use crate::model::{coupled_hamiltonian, SystemParams};
use crate::numerics::{c, expm, expm_action, partial_trace, CMatrix, Qubit};
use crate::output::fmt_f64;
use crate::state::PureState;

/// Moduli below this carry no meaningful phase.
pub const PHASE_UNDEFINED_BELOW: f64 = 1e-12;
/// Default modulus spread accepted by `equal_amplitude_concurrence`.
pub const EQUAL_AMPLITUDE_TOL: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evolved {
    pub raw: PureState,
    pub normalized: PureState,
}

/// `exp(-i H t) psi0` with its normalized companion.
pub fn evolve_exact(s: &SystemParams, psi0: &PureState, t: f64) -> Result<Evolved> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    let h = coupled_hamiltonian(s);
    let v = expm_action(&h, t, &psi0.to_vector())?;
    let raw = PureState::from_vector(&v)?;
    Ok(Evolved { raw, normalized: raw.normalize()? })
}

/// Full propagator `exp(-i H t)`.
pub fn propagator(s: &SystemParams, t: f64) -> Result<CMatrix> {
    expm(&coupled_hamiltonian(s).scale(c(0.0, -t)))
}

/// How trajectory points are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    /// One matrix exponential per point, evaluated in parallel.
    Independent,
    /// Repeated application of the one-step propagator; grid must be uniform.
    Chained,
}

/// Raw (unnormalized) states on an increasing time grid.
pub fn evolve_grid(
    s: &SystemParams,
    psi0: &PureState,
    t_grid: &[f64],
    mode: GridMode,
) -> Result<Vec<PureState>> {
    check_grid(t_grid)?;
    match mode {
        GridMode::Independent => t_grid
            .par_iter()
            .map(|&t| evolve_exact(s, psi0, t).map(|e| e.raw))
            .collect(),
        GridMode::Chained => {
            if t_grid.is_empty() {
                return Ok(Vec::new());
            }
            let dt = if t_grid.len() > 1 { t_grid[1] - t_grid[0] } else { 0.0 };
            for w in t_grid.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                    return Err(Error::InvalidParameter("chained evolution needs a uniform grid".into()));
                }
            }
            let step = propagator(s, dt)?;
            let mut v = propagator(s, t_grid[0])?.mul_vec(&psi0.to_vector());
            let mut out = Vec::with_capacity(t_grid.len());
            for _ in t_grid {
                out.push(PureState::from_vector(&v)?);
                v = step.mul_vec(&v);
            }
            Ok(out)
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter("time grid must be finite and non-negative".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` evenly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub t: f64,
    /// `|alpha|, |beta|, |zeta|, |delta|` of the normalized state.
    pub moduli: [f64; 4],
    /// Principal-value phases in `(-pi, pi]`.
    pub phases: [f64; 4],
    /// False where the modulus is below `PHASE_UNDEFINED_BELOW`.
    pub phase_defined: [bool; 4],
    /// `Arg(j) - Arg(alpha)` for `j = beta, zeta, delta`, wrapped.
    pub relative_phases: [f64; 3],
    /// `Arg(alpha) + Arg(delta) - Arg(beta) - Arg(zeta)`, wrapped.
    pub dphi: f64,
}

impl PhaseRecord {
    pub fn from_state(t: f64, psi: &PureState) -> Result<Self> {
        let n = psi.normalize()?;
        let a = n.amplitudes();
        let moduli = a.map(|z| z.norm());
        let phases = a.map(|z| z.arg());
        let phase_defined = moduli.map(|m| m >= PHASE_UNDEFINED_BELOW);
        let relative_phases = [1, 2, 3].map(|k| wrap_phase(phases[k] - phases[0]));
        let dphi = wrap_phase(phases[0] + phases[3] - phases[1] - phases[2]);
        Ok(Self { t, moduli, phases, phase_defined, relative_phases, dphi })
    }

    pub fn dphi_defined(&self) -> bool {
        self.phase_defined.iter().all(|d| *d)
    }

    pub fn modulus_spread(&self) -> f64 {
        let max = self.moduli.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.moduli.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

pub fn phase_trace(s: &SystemParams, psi0: &PureState, t_grid: &[f64]) -> Result<Vec<PhaseRecord>> {
    let states = evolve_grid(s, psi0, t_grid, GridMode::Independent)?;
    t_grid
        .iter()
        .zip(&states)
        .map(|(&t, psi)| PhaseRecord::from_state(t, psi))
        .collect()
}

/// `|sin(dphi / 2)|`, the concurrence of an equal-amplitude state.
pub fn equal_amplitude_concurrence(record: &PhaseRecord, tol: f64) -> Result<f64> {
    let spread = record.modulus_spread();
    if spread > tol {
        return Err(Error::AmplitudesNotEqual { spread, tolerance: tol });
    }
    Ok((record.dphi / 2.0).sin().abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch vector of one qubit of `psi` (Pauli expectations in `{|f>, |e>}`).
pub fn bloch_vector(t: f64, psi: &PureState, keep: Qubit) -> Result<BlochPoint> {
    let n = psi.normalize()?;
    let r = partial_trace(n.projector().matrix(), keep)?;
    Ok(BlochPoint {
        t,
        x: 2.0 * r[(0, 1)].re,
        y: -2.0 * r[(0, 1)].im,
        z: (r[(0, 0)] - r[(1, 1)]).re,
    })
}

pub fn bloch_trajectory(
    s: &SystemParams,
    psi0: &PureState,
    t_grid: &[f64],
    keep: Qubit,
) -> Result<Vec<BlochPoint>> {
    let states = evolve_grid(s, psi0, t_grid, GridMode::Independent)?;
    t_grid
        .iter()
        .zip(&states)
        .map(|(&t, psi)| bloch_vector(t, psi, keep))
        .collect()
}

/// One row of the trajectory table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub record: PhaseRecord,
    pub state: PureState,
    pub concurrence: f64,
    pub bloch: BlochPoint,
}

/// Rows from already-evolved raw states; the listed state is normalized.
pub fn trajectory_rows(t_grid: &[f64], states: &[PureState]) -> Result<Vec<TrajectoryRow>> {
    t_grid
        .iter()
        .zip(states)
        .map(|(&t, psi)| {
            Ok(TrajectoryRow {
                record: PhaseRecord::from_state(t, psi)?,
                state: psi.normalize()?,
                concurrence: concurrence_pure(psi)?,
                bloch: bloch_vector(t, psi, Qubit::First)?,
            })
        })
        .collect()
}

pub const TRAJECTORY_COLUMNS: &str = "t,re_alpha,im_alpha,re_beta,im_beta,re_zeta,im_zeta,re_delta,im_delta,\
abs_alpha,abs_beta,abs_zeta,abs_delta,arg_alpha,arg_beta,arg_zeta,arg_delta,dphi,C,bloch_x,bloch_y,bloch_z";

pub fn write_trajectory_csv<W: Write>(w: &mut W, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_COLUMNS}")?;
    for r in rows {
        let mut fields = vec![r.record.t];
        for z in r.state.amplitudes() {
            fields.push(z.re);
            fields.push(z.im);
        }
        fields.extend(r.record.moduli);
        fields.extend(r.record.phases);
        fields.push(r.record.dphi);
        fields.push(r.concurrence);
        fields.extend([r.bloch.x, r.bloch.y, r.bloch.z]);
        let line: Vec<String> = fields.iter().map(|x| fmt_f64(*x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
