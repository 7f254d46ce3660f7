//! Dense parameter searches for fast entanglement.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_exact, propagator, wrap_phase};
use crate::entanglement::concurrence_pure;
use crate::error::{Error, Result};
use crate::model::{derived_scales, SystemParams};
use crate::numerics::CVector;
use crate::output::fmt_f64;
use crate::perturbation::differential_phase_analytic;
use crate::spectra::{linear_fit, SweepRange};
use crate::state::PureState;

pub const DEFAULT_OMEGA_STEPS: usize = 151;
pub const DEFAULT_T_STEPS: usize = 400;
/// Concurrence that counts as maximal for the Hermitian reference time.
pub const HERMITIAN_TARGET: f64 = 0.999;
/// Smallest peak height accepted as the first entanglement maximum.
pub const FIRST_PEAK_FLOOR: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridArgmax {
    pub omega: f64,
    pub t: f64,
    pub c_max: f64,
    pub grid_omega: f64,
    pub grid_t: f64,
    pub grid_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceGrid {
    pub omega_axis: Vec<f64>,
    pub t_axis: Vec<f64>,
    /// `values[i][k] = C(omega_axis[i], t_axis[k])`.
    pub values: Vec<Vec<f64>>,
    pub argmax: GridArgmax,
}

/// Concurrence on a uniform time grid for one parameter set, from `psi0`.
pub fn concurrence_series(s: &SystemParams, psi0: &PureState, t_axis: &[f64]) -> Result<Vec<f64>> {
    if t_axis.is_empty() {
        return Ok(Vec::new());
    }
    let dt = if t_axis.len() > 1 { t_axis[1] - t_axis[0] } else { 0.0 };
    let step = propagator(s, dt)?;
    let mut v = propagator(s, t_axis[0])?.mul_vec(&psi0.to_vector());
    let mut out = Vec::with_capacity(t_axis.len());
    for _ in t_axis {
        out.push(concurrence_of(&v)?);
        v = step.mul_vec(&v);
    }
    Ok(out)
}

fn concurrence_of(v: &CVector) -> Result<f64> {
    concurrence_pure(&PureState::from_vector(v)?)
}

fn exact_concurrence(s: &SystemParams, psi0: &PureState, t: f64) -> Result<f64> {
    concurrence_pure(&evolve_exact(s, psi0, t)?.raw)
}

/// Vertex offset of the parabola through three equally spaced samples, in
/// units of the spacing, clamped to `[-1, 1]`.
pub fn parabola_vertex(ym: f64, y0: f64, yp: f64) -> f64 {
    let denom = ym - 2.0 * y0 + yp;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (ym - yp) / denom).clamp(-1.0, 1.0)
}

fn refine_axis(axis: &[f64], values: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= axis.len() {
        return axis[k];
    }
    axis[k] + parabola_vertex(values[k - 1], values[k], values[k + 1]) * (axis[k + 1] - axis[k])
}

/// `C(Omega, t)` from `|ff>` with both drives set to `Omega`.
pub fn concurrence_map_for(base: &SystemParams, omega: &SweepRange, t: &SweepRange) -> Result<ConcurrenceGrid> {
    let omega_axis = omega.points();
    let t_axis = t.points();
    if t.start < 0.0 || omega.start < 0.0 {
        return Err(Error::InvalidParameter("grid ranges must be non-negative".into()));
    }
    let values: Vec<Vec<f64>> = omega_axis
        .par_iter()
        .map(|&w| concurrence_series(&base.with_omega(w), &PureState::ff(), &t_axis))
        .collect::<Result<_>>()?;

    // row-major scan with strict improvement: ties keep the smaller t, then smaller omega
    let mut best = (0usize, 0usize, f64::MIN);
    for k in 0..t_axis.len() {
        for (i, row) in values.iter().enumerate() {
            if row[k] > best.2 {
                best = (i, k, row[k]);
            }
        }
    }
    let (bi, bk, bc) = best;
    let column: Vec<f64> = values.iter().map(|row| row[bk]).collect();
    let w_ref = refine_axis(&omega_axis, &column, bi);
    let t_ref = refine_axis(&t_axis, &values[bi], bk);
    let c_ref = exact_concurrence(&base.with_omega(w_ref), &PureState::ff(), t_ref)?;
    let (w, tt, cc) = if c_ref >= bc { (w_ref, t_ref, c_ref) } else { (omega_axis[bi], t_axis[bk], bc) };
    let argmax = GridArgmax { omega: w, t: tt, c_max: cc, grid_omega: omega_axis[bi], grid_t: t_axis[bk], grid_c: bc };
    Ok(ConcurrenceGrid { omega_axis, t_axis, values, argmax })
}

/// Identical resonant qubits with loss `gamma` and coupling `j`.
pub fn concurrence_map(j: f64, gamma: f64, omega: &SweepRange, t: &SweepRange) -> Result<ConcurrenceGrid> {
    let base = SystemParams::identical(gamma, omega.start, j)?;
    concurrence_map_for(&base, omega, t)
}

pub fn write_grid_csv<W: Write>(w: &mut W, g: &ConcurrenceGrid) -> std::io::Result<()> {
    writeln!(w, "omega,t,C")?;
    for (i, om) in g.omega_axis.iter().enumerate() {
        for (k, t) in g.t_axis.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt_f64(*om), fmt_f64(*t), fmt_f64(g.values[i][k]))?;
        }
    }
    Ok(())
}

/// Index of the first local maximum of `series` reaching `floor`.
pub fn first_peak(series: &[f64], floor: f64) -> Option<usize> {
    (1..series.len().saturating_sub(1))
        .find(|&k| series[k] >= floor && series[k] >= series[k - 1] && series[k] > series[k + 1])
}

/// Search window for the per-J optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalSearch {
    pub omega: SweepRange,
    pub t: SweepRange,
    pub floor: f64,
}

impl Default for OptimalSearch {
    fn default() -> Self {
        Self {
            omega: SweepRange { start: 1.5, end: 2.5, steps: 401 },
            t: SweepRange { start: 0.0, end: 12.0, steps: 2401 },
            floor: FIRST_PEAK_FLOOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstPeakOptimum {
    pub omega_star: f64,
    pub t_star: f64,
    pub c_max: f64,
}

/// Drive that makes the first entanglement maximum as high as possible.
///
/// For every drive on the grid the first local maximum of `C(t)` above the
/// floor and within the first decoupled period `4 pi / eta` is taken;
/// `Omega*` maximizes its height and `T*` is its time.
pub fn first_peak_optimum(base: &SystemParams, search: &OptimalSearch) -> Result<FirstPeakOptimum> {
    let omegas = search.omega.points();
    let t_axis = search.t.points();
    let peaks: Vec<Option<(usize, f64)>> = omegas
        .par_iter()
        .map(|&w| {
            let s = base.with_omega(w);
            let Some(period) = derived_scales(&s).period else {
                return Ok(None);
            };
            let c = concurrence_series(&s, &PureState::ff(), &t_axis)?;
            Ok(first_peak(&c, search.floor).filter(|&k| t_axis[k] <= period).map(|k| (k, c[k])))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, p) in peaks.iter().enumerate() {
        if let Some((k, c)) = p {
            if best.map_or(true, |b| *c > b.2) {
                best = Some((i, *k, *c));
            }
        }
    }
    let (bi, bk, bc) = best.ok_or_else(|| {
        Error::NonConvergence(format!("no concurrence peak above {} in the search window", search.floor))
    })?;

    let heights: Vec<f64> = peaks.iter().map(|p| p.map_or(0.0, |x| x.1)).collect();
    let mut omega_star = omegas[bi];
    if bi > 0 && bi + 1 < omegas.len() && peaks[bi - 1].is_some() && peaks[bi + 1].is_some() {
        omega_star = refine_axis(&omegas, &heights, bi);
    }
    // refine T* on the chosen drive
    let s = base.with_omega(omega_star);
    let dt = t_axis[1] - t_axis[0];
    let local: Vec<f64> = [-1.0, 0.0, 1.0]
        .iter()
        .map(|o| exact_concurrence(&s, &PureState::ff(), (t_axis[bk] + o * dt).max(0.0)))
        .collect::<Result<_>>()?;
    let t_star = t_axis[bk] + parabola_vertex(local[0], local[1], local[2]) * dt;
    let c_star = exact_concurrence(&s, &PureState::ff(), t_star)?;
    let (omega_star, t_star, c_max) =
        if c_star >= bc { (omega_star, t_star, c_star) } else { (omegas[bi], t_axis[bk], bc) };
    Ok(FirstPeakOptimum { omega_star, t_star, c_max })
}

/// First time the Hermitian pair (`gamma = 0`) with the given coupling and
/// drive reaches `target` concurrence from `psi0`.
pub fn hermitian_baseline(j: f64, omega: f64, psi0: &PureState, target: f64) -> Result<f64> {
    if !(j > 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be > 0, got {j}")));
    }
    let s = SystemParams::identical(0.0, omega, j)?;
    // resolve the drive oscillation and the slow envelope
    let dt = (0.02f64).min(0.25 / (4.0 * omega + j)).min(PI / j / 4000.0);
    let t_end = 4.0 * PI / j;
    let step = propagator(&s, dt)?;
    let mut v = psi0.to_vector();
    let mut t = 0.0;
    let mut prev = (t, v.clone());
    while t <= t_end {
        if concurrence_of(&v)? >= target {
            // bisect inside the last step
            let (mut lo, mut hi) = (prev.0, t);
            let base_state = PureState::from_vector(&prev.1)?;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if exact_concurrence(&s, &base_state, mid - prev.0)? >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = (t, v.clone());
        v = step.mul_vec(&v);
        t += dt;
    }
    Err(Error::NonConvergence(format!("concurrence {target} not reached before t = {t_end}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementPoint {
    pub j: f64,
    pub omega_star: f64,
    pub t_star: f64,
    pub c_max: f64,
    /// Numerical Hermitian reference time (same J, same drive, from `|ff>`).
    pub t_hermitian: f64,
    pub factor: f64,
    /// `(pi / J) / T*`, the closed-form strong-drive reference.
    pub factor_pi_over_j: f64,
}

pub fn optimal_vs_j(gamma: f64, j_values: &[f64], search: &OptimalSearch) -> Result<Vec<EnhancementPoint>> {
    if j_values.is_empty() {
        return Err(Error::InvalidParameter("J list is empty".into()));
    }
    if j_values.iter().any(|j| !(*j > 0.0)) {
        return Err(Error::InvalidParameter("J values must be > 0".into()));
    }
    j_values
        .iter()
        .map(|&j| {
            let base = SystemParams::identical(gamma, search.omega.start, j)?;
            let opt = first_peak_optimum(&base, search)?;
            let t_h = hermitian_baseline(j, opt.omega_star, &PureState::ff(), HERMITIAN_TARGET)?;
            Ok(EnhancementPoint {
                j,
                omega_star: opt.omega_star,
                t_star: opt.t_star,
                c_max: opt.c_max,
                t_hermitian: t_h,
                factor: t_h / opt.t_star,
                factor_pi_over_j: PI / j / opt.t_star,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementReport {
    pub points: Vec<EnhancementPoint>,
    /// Log-log fit `factor ~ J^slope`; a diagnostic only.
    pub slope: f64,
    pub intercept: f64,
}

pub fn enhancement_factor(gamma: f64, j_values: &[f64], search: &OptimalSearch) -> Result<EnhancementReport> {
    let points = optimal_vs_j(gamma, j_values, search)?;
    let (slope, intercept) = if points.len() >= 2 {
        let x: Vec<f64> = points.iter().map(|p| p.j.ln()).collect();
        let y: Vec<f64> = points.iter().map(|p| p.factor.ln()).collect();
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(EnhancementReport { points, slope, intercept })
}

/// When the differential phase is read out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseTime {
    Fixed(f64),
    /// At each J's own first-peak optimum time.
    PerJOptimum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentialPhasePoint {
    pub j: f64,
    pub t: f64,
    pub analytic: f64,
    pub exact: f64,
}

/// `pi/2 - Arg(beta)` against J, from the approximate amplitudes and from
/// exact evolution.
pub fn differential_phase_scan(
    gamma: f64,
    omega: f64,
    j_values: &[f64],
    time: PhaseTime,
    search: &OptimalSearch,
) -> Result<Vec<DifferentialPhasePoint>> {
    j_values
        .iter()
        .map(|&j| {
            let s = SystemParams::identical(gamma, omega, j)?;
            let t = match time {
                PhaseTime::Fixed(t) => t,
                PhaseTime::PerJOptimum => first_peak_optimum(&s, search)?.t_star,
            };
            let beta = evolve_exact(&s, &PureState::ff(), t)?.raw.beta;
            Ok(DifferentialPhasePoint {
                j,
                t,
                analytic: differential_phase_analytic(gamma, omega, j, t)?,
                exact: wrap_phase(FRAC_PI_2 - beta.arg()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_of_exact_parabola() {
        // y = -(x - 0.3)^2 sampled at -1, 0, 1
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        assert!((parabola_vertex(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-15);
        // linear data has no interior maximum
        assert_eq!(parabola_vertex(0.0, 1.0, 2.0), 0.0);
        assert_eq!(parabola_vertex(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn first_peak_respects_floor() {
        let s = [0.0, 0.3, 0.2, 0.6, 0.9, 0.7, 1.0, 0.1];
        assert_eq!(first_peak(&s, 0.5), Some(4));
        assert_eq!(first_peak(&s, 0.95), Some(6));
        assert_eq!(first_peak(&s, 1.5), None);
    }

    #[test]
    fn decoupled_grid_is_flat() {
        let g = concurrence_map(
            0.0,
            6.0,
            &SweepRange::new(1.5, 1.8, 7).unwrap(),
            &SweepRange::new(0.0, 8.0, 41).unwrap(),
        )
        .unwrap();
        assert!(g.values.iter().flatten().all(|c| *c <= 1e-10));
    }

    #[test]
    fn swap_baseline_without_drive() {
        let t = hermitian_baseline(1e-3, 0.0, &PureState::fe(), HERMITIAN_TARGET).unwrap();
        // C = |sin 2Jt| reaches 0.999 slightly before pi/(4J)
        let want = 0.999f64.asin() / 2e-3;
        assert!((t - want).abs() < 1e-6 * want, "{t} vs {want}");
    }

    #[test]
    fn empty_j_list_is_rejected() {
        assert!(optimal_vs_j(6.0, &[], &OptimalSearch::default()).is_err());
        assert!(hermitian_baseline(0.0, 1.0, &PureState::ff(), 0.999).is_err());
    }
}
