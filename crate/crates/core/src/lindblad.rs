//! Master equation with the non-Hermitian drift and `|f> -> |e>` jumps on
//! each qubit, integrated with fixed-step RK4.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::entanglement::concurrence_mixed;
use crate::error::{Error, Result};
use crate::model::{coupled_hamiltonian, SystemParams};
use crate::numerics::{c, CMatrix, I, ONE, ZERO};
use crate::output::fmt_f64;
use crate::state::DensityMatrix;

pub const DEFAULT_DT: f64 = 1e-3;
/// Largest concurrence change accepted when the step is halved.
pub const STEP_DOUBLING_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladParams {
    pub system: SystemParams,
    pub gamma_f1: f64,
    pub gamma_f2: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Keep every `record_every`-th step (the first and last are always kept).
    pub record_every: usize,
}

impl LindbladParams {
    pub fn new(system: SystemParams, gamma_f: f64, t_max: f64) -> Result<Self> {
        let p = Self { system, gamma_f1: gamma_f, gamma_f2: gamma_f, dt: DEFAULT_DT, t_max, record_every: 10 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(self.gamma_f1 >= 0.0 && self.gamma_f2 >= 0.0) {
            return Err(Error::InvalidParameter("gamma_f must be >= 0".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_max must be >= 0, got {}", self.t_max)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// `|e><f|` on qubit 1 or 2 of the pair.
pub fn jump_operator(qubit: usize) -> CMatrix {
    let lower = CMatrix::from_rows([[ZERO, ZERO], [ONE, ZERO]]);
    let id = CMatrix::identity(2);
    if qubit == 1 {
        lower.kron(&id)
    } else {
        id.kron(&lower)
    }
}

struct Generator {
    h: CMatrix,
    h_dag: CMatrix,
    jumps: Vec<(f64, CMatrix, CMatrix, CMatrix)>,
}

impl Generator {
    fn new(p: &LindbladParams) -> Self {
        let h = coupled_hamiltonian(&p.system);
        let jumps = [(p.gamma_f1, 1), (p.gamma_f2, 2)]
            .into_iter()
            .filter(|(g, _)| *g > 0.0)
            .map(|(g, q)| {
                let l = jump_operator(q);
                let ld = l.adjoint();
                let ldl = &ld * &l;
                (g, l, ld, ldl)
            })
            .collect();
        Self { h_dag: h.adjoint(), h, jumps }
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let comm = &(&self.h * rho) - &(rho * &self.h_dag);
        let mut out = comm.scale(-I);
        for (g, l, ld, ldl) in &self.jumps {
            let sandwich = &(l * rho) * ld;
            let anti = &(ldl * rho) + &(rho * ldl);
            let d = &sandwich - &anti.scale(c(0.5, 0.0));
            out = &out + &d.scale(c(*g, 0.0));
        }
        out
    }
}

/// `d rho / dt = -i (H rho - rho H^dagger) + sum_i g_i (L rho L^dagger - {L^dagger L, rho}/2)`.
pub fn master_rhs(rho: &DensityMatrix, p: &LindbladParams) -> DensityMatrix {
    DensityMatrix::new(Generator::new(p).apply(rho.matrix())).expect("4x4 by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladPoint {
    pub t: f64,
    /// Unnormalized state.
    pub rho: DensityMatrix,
    pub trace: f64,
    pub concurrence: f64,
    /// Diagonal of the trace-normalized state.
    pub populations: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladTrace {
    pub points: Vec<LindbladPoint>,
    /// Largest concurrence change seen in the step-doubling check.
    pub step_doubling_change: Option<f64>,
}

impl LindbladTrace {
    /// `(t, C)` at the largest recorded concurrence; earliest wins ties.
    pub fn peak(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((0.0, f64::MIN), |acc, p| if p.concurrence > acc.1 { (p.t, p.concurrence) } else { acc })
    }
}

fn rk4_run(rho0: &DensityMatrix, p: &LindbladParams, dt: f64, stride: usize) -> Result<Vec<LindbladPoint>> {
    let g = Generator::new(p);
    let steps = (p.t_max / dt).round() as usize;
    let half = c(dt / 2.0, 0.0);
    let full = c(dt, 0.0);
    let sixth = c(dt / 6.0, 0.0);
    let two = c(2.0, 0.0);
    let mut rho = rho0.matrix().hermitian_part();
    let mut out = Vec::with_capacity(steps / stride + 2);
    for n in 0..=steps {
        if n % stride == 0 || n == steps {
            out.push(point(n as f64 * dt, &rho)?);
        }
        if n == steps {
            break;
        }
        let k1 = g.apply(&rho);
        let k2 = g.apply(&(&rho + &k1.scale(half)));
        let k3 = g.apply(&(&rho + &k2.scale(half)));
        let k4 = g.apply(&(&rho + &k3.scale(full)));
        let incr = &(&(&k1 + &k2.scale(two)) + &k3.scale(two)) + &k4;
        rho = (&rho + &incr.scale(sixth)).hermitian_part();
        if !rho.is_finite() {
            return Err(Error::NonFinite("density matrix during integration"));
        }
    }
    Ok(out)
}

fn point(t: f64, rho: &CMatrix) -> Result<LindbladPoint> {
    let r = DensityMatrix::new(rho.clone())?;
    let norm = r.trace_normalized()?;
    Ok(LindbladPoint {
        t,
        trace: r.trace(),
        concurrence: concurrence_mixed(&r)?,
        populations: norm.populations(),
        rho: r,
    })
}

/// Single RK4 run without the step-doubling check.
pub fn integrate_master_unchecked(rho0: &DensityMatrix, p: &LindbladParams) -> Result<LindbladTrace> {
    p.validate()?;
    Ok(LindbladTrace { points: rk4_run(rho0, p, p.dt, p.record_every)?, step_doubling_change: None })
}

/// RK4 integration with a mandatory step-doubling check: the run is repeated
/// at `dt / 2` and any recorded concurrence moving by `STEP_DOUBLING_TOL` or
/// more fails with `StepSizeTooLarge`.
pub fn integrate_master(rho0: &DensityMatrix, p: &LindbladParams) -> Result<LindbladTrace> {
    p.validate()?;
    let (coarse, fine) = rayon::join(
        || rk4_run(rho0, p, p.dt, p.record_every),
        || rk4_run(rho0, p, p.dt / 2.0, 2 * p.record_every),
    );
    let (coarse, fine) = (coarse?, fine?);
    let change = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a.concurrence - b.concurrence).abs())
        .fold(0.0, f64::max);
    if change >= STEP_DOUBLING_TOL {
        return Err(Error::StepSizeTooLarge { dt: p.dt, change });
    }
    Ok(LindbladTrace { points: coarse, step_doubling_change: Some(change) })
}

pub fn write_lindblad_csv<W: Write>(w: &mut W, trace: &LindbladTrace) -> std::io::Result<()> {
    writeln!(w, "t,trace,C_mixed,p_ff,p_fe,p_ef,p_ee")?;
    for p in &trace.points {
        let mut f = vec![p.t, p.trace, p.concurrence];
        f.extend(p.populations);
        let line: Vec<String> = f.into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}
