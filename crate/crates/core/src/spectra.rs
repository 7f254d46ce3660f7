//! Exceptional-point analysis of the coupled Hamiltonian.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupled_hamiltonian, single_qubit_hamiltonian, SystemParams};
use crate::numerics::{eig_general, CMatrix, SpectralDecomposition, C64, DEFAULT_EIG_TOL};
use crate::output::fmt_f64;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.99;
pub const DEFAULT_CLUSTER_GAP: f64 = 2e-2;
pub const DEFAULT_APPROACH_EPS: f64 = 1e-6;
/// Branches varying less than this over the fit range are reported constant.
pub const CONSTANT_BRANCH_TOL: f64 = 1e-9;

const THRESHOLD_PROBE: f64 = 0.005;
/// Pairs with a smaller overlap are ignored when locating an EP.
const LOCATE_MIN_OVERLAP: f64 = 0.9;

/// Pairwise `|<psi_i|psi_j>|` of unit right eigenvectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub values: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn from_decomposition(d: &SpectralDecomposition) -> Self {
        let mut values = d.right_overlaps();
        let n = values.len();
        for i in 0..n {
            values[i][i] = 1.0;
            for j in 0..i {
                let v = values[i][j].max(values[j][i]).min(1.0);
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        Self { values }
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.values.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.values[i][j]))
    }

    pub fn min_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(1.0, f64::min)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(0.0, f64::max)
    }
}

/// Overlaps of a generic eigendecomposition of `h`.
pub fn overlap_matrix(h: &CMatrix) -> Result<OverlapMatrix> {
    if h.rows() != 4 || h.cols() != 4 {
        return Err(Error::DimensionMismatch("overlap analysis needs a 4x4 matrix".into()));
    }
    Ok(OverlapMatrix::from_decomposition(&eig_general(h, DEFAULT_EIG_TOL)?))
}

/// Eigensystem of the coupled Hamiltonian. Without coupling the eigenvectors
/// are built as products of single-qubit eigenvectors, which fixes the basis
/// inside the degenerate `-+`/`+-` pair.
pub fn system_eigensystem(s: &SystemParams) -> Result<SpectralDecomposition> {
    if s.coupling != 0.0 {
        return eig_general(&coupled_hamiltonian(s), DEFAULT_EIG_TOL);
    }
    let a = eig_general(&single_qubit_hamiltonian(&s.qubit1), DEFAULT_EIG_TOL)?;
    let b = eig_general(&single_qubit_hamiltonian(&s.qubit2), DEFAULT_EIG_TOL)?;
    let mut values = Vec::with_capacity(4);
    let mut right = Vec::with_capacity(4);
    let mut left = Vec::with_capacity(4);
    for i in 0..2 {
        for k in 0..2 {
            values.push(a.eigenvalues[i] + b.eigenvalues[k]);
            right.push(a.right_vectors[i].kron(&b.right_vectors[k]));
            left.push(a.left_vectors[i].kron(&b.left_vectors[k]));
        }
    }
    SpectralDecomposition::from_pairs(values, right, left)
}

pub fn system_overlap_matrix(s: &SystemParams) -> Result<OverlapMatrix> {
    Ok(OverlapMatrix::from_decomposition(&system_eigensystem(s)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Drive amplitude of both qubits.
    Omega,
    /// Coupling J.
    Coupling,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Omega => "omega",
            SweepAxis::Coupling => "J",
        }
    }

    pub fn apply(&self, base: &SystemParams, x: f64) -> SystemParams {
        match self {
            SweepAxis::Omega => base.with_omega(x),
            SweepAxis::Coupling => base.with_coupling(x),
        }
    }
}

/// Inclusive range `start:end:steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidParameter("range bounds must be finite".into()));
        }
        if steps < 2 {
            return Err(Error::InvalidParameter(format!("range needs at least 2 steps, got {steps}")));
        }
        if start >= end {
            return Err(Error::InvalidParameter(format!("range start {start} must be below end {end}")));
        }
        Ok(Self { start, end, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        crate::dynamics::linspace(self.start, self.end, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    /// Continuity-matched eigenvalue tracks, one row per axis point.
    pub eigenvalues: Vec<[C64; 4]>,
    pub min_overlap: Vec<f64>,
    pub max_overlap: Vec<f64>,
}

impl SweepResult {
    pub fn track(&self, k: usize) -> Vec<C64> {
        self.eigenvalues.iter().map(|row| row[k]).collect()
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&x| seen[x] = true);
                    if seen.iter().all(|s| *s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Reorder `next` to minimize the total distance to `prev`.
pub fn match_to(prev: &[C64; 4], next: &[C64; 4]) -> [C64; 4] {
    best_permutation(|i, p| (prev[i] - next[p]).norm()).map(|k| next[k])
}

pub fn sweep_eigenvalues(base: &SystemParams, axis: SweepAxis, range: &SweepRange) -> Result<SweepResult> {
    let xs = range.points();
    let points: Vec<([C64; 4], OverlapMatrix)> = xs
        .par_iter()
        .map(|&x| {
            let s = axis.apply(base, x);
            s.validate()?;
            let d = system_eigensystem(&s)?;
            let ev = [d.eigenvalues[0], d.eigenvalues[1], d.eigenvalues[2], d.eigenvalues[3]];
            Ok((ev, OverlapMatrix::from_decomposition(&d)))
        })
        .collect::<Result<_>>()?;

    let mut eigenvalues = Vec::with_capacity(points.len());
    let mut min_overlap = Vec::with_capacity(points.len());
    let mut max_overlap = Vec::with_capacity(points.len());
    for (ev, ov) in &points {
        let row = match eigenvalues.last() {
            Some(prev) => match_to(prev, ev),
            None => *ev,
        };
        eigenvalues.push(row);
        min_overlap.push(ov.min_off_diagonal());
        max_overlap.push(ov.max_off_diagonal());
    }
    Ok(SweepResult { axis, axis_values: xs, eigenvalues, min_overlap, max_overlap })
}

pub fn write_sweep_csv<W: Write>(w: &mut W, r: &SweepResult) -> std::io::Result<()> {
    writeln!(
        w,
        "{},re_l1,re_l2,re_l3,re_l4,im_l1,im_l2,im_l3,im_l4,min_overlap,max_overlap",
        r.axis.name()
    )?;
    for (k, x) in r.axis_values.iter().enumerate() {
        let row = &r.eigenvalues[k];
        let mut f = vec![*x];
        f.extend(row.iter().map(|z| z.re));
        f.extend(row.iter().map(|z| z.im));
        f.push(r.min_overlap[k]);
        f.push(r.max_overlap[k]);
        let line: Vec<String> = f.into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Size of the largest set of eigenpairs that are mutually overlapping
/// (`>= threshold`) and mutually close in eigenvalue (`<= gap`).
pub fn cluster_order(d: &SpectralDecomposition, threshold: f64, gap: f64) -> usize {
    let n = d.dim();
    let ov = OverlapMatrix::from_decomposition(d);
    let mut best = 1;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        if members.len() <= best {
            continue;
        }
        let ok = members.iter().enumerate().all(|(a, &i)| {
            members[a + 1..].iter().all(|&j| {
                ov.values[i][j] >= threshold && (d.eigenvalues[i] - d.eigenvalues[j]).norm() <= gap
            })
        });
        if ok {
            best = members.len();
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpOrderReport {
    pub order: usize,
    pub omega: f64,
    pub eps: f64,
    pub threshold: f64,
    pub gap: f64,
    pub order_below: usize,
    pub order_above: usize,
    pub overlaps_below: OverlapMatrix,
    pub overlaps_above: OverlapMatrix,
    pub eigenvalues_below: Vec<C64>,
    pub eigenvalues_above: Vec<C64>,
}

/// Order of the exceptional point near `omega`, probed at `omega -/+ eps`.
///
/// The classification is repeated with the threshold moved by 0.005 and the
/// gap halved and doubled; any disagreement is an `AmbiguousCluster` error.
pub fn ep_order(base: &SystemParams, omega: f64, eps: f64, threshold: f64, gap: f64) -> Result<EpOrderReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    if !(threshold > 0.0 && threshold <= 1.0) || !(gap > 0.0) {
        return Err(Error::InvalidParameter("threshold must lie in (0, 1] and gap be > 0".into()));
    }
    let below = system_eigensystem(&base.with_omega((omega - eps).max(0.0)))?;
    let above = system_eigensystem(&base.with_omega(omega + eps))?;
    let order_at = |t: f64, g: f64| cluster_order(&below, t, g).max(cluster_order(&above, t, g));

    let probes = [
        (threshold, gap),
        ((threshold - THRESHOLD_PROBE).max(0.0), gap),
        ((threshold + THRESHOLD_PROBE).min(1.0), gap),
        (threshold, gap * 0.5),
        (threshold, gap * 2.0),
    ];
    let orders: Vec<usize> = probes.iter().map(|&(t, g)| order_at(t, g)).collect();
    if orders.iter().any(|o| *o != orders[0]) {
        return Err(Error::AmbiguousCluster { orders });
    }
    Ok(EpOrderReport {
        order: orders[0],
        omega,
        eps,
        threshold,
        gap,
        order_below: cluster_order(&below, threshold, gap),
        order_above: cluster_order(&above, threshold, gap),
        overlaps_below: OverlapMatrix::from_decomposition(&below),
        overlaps_above: OverlapMatrix::from_decomposition(&above),
        eigenvalues_below: below.eigenvalues,
        eigenvalues_above: above.eigenvalues,
    })
}

/// Smallest eigenvalue gap among strongly overlapping pairs.
fn coalescence_gap(s: &SystemParams) -> Result<f64> {
    let d = system_eigensystem(s)?;
    let ov = OverlapMatrix::from_decomposition(&d);
    let mut best = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            if ov.values[i][j] >= LOCATE_MIN_OVERLAP {
                best = best.min((d.eigenvalues[i] - d.eigenvalues[j]).norm());
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpLocation {
    pub omega: f64,
    pub gap: f64,
}

/// Drive amplitude in `[lo, hi]` where a pair of eigenvectors coalesces,
/// found by a scan followed by golden-section refinement of the gap.
pub fn locate_ep(base: &SystemParams, lo: f64, hi: f64, scan_points: usize) -> Result<EpLocation> {
    let range = SweepRange::new(lo, hi, scan_points.max(3))?;
    let xs = range.points();
    let gaps: Vec<f64> = xs
        .par_iter()
        .map(|&x| coalescence_gap(&base.with_omega(x)))
        .collect::<Result<_>>()?;
    let (k, g0) = gaps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &g)| if g < acc.1 { (k, g) } else { acc });
    if !g0.is_finite() {
        return Err(Error::NonConvergence("no coalescing pair found in the search window".into()));
    }
    let mut a = xs[k.saturating_sub(1)];
    let mut b = xs[(k + 1).min(xs.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| coalescence_gap(&base.with_omega(x)).unwrap_or(f64::INFINITY);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    let (omega, gap) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let (omega, gap) = if g0 < gap { (xs[k], g0) } else { (omega, gap) };
    Ok(EpLocation { omega, gap })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentFit {
    /// `|x(J) - x(0)| ~ |coefficient| J^slope`; the coefficient carries the
    /// sign of the offset.
    Fitted { slope: f64, coefficient: f64, reference: f64 },
    Constant { variation: f64, reference: f64 },
}

impl ComponentFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            ComponentFit::Fitted { slope, .. } => Some(*slope),
            ComponentFit::Constant { .. } => None,
        }
    }

    pub fn coefficient(&self) -> Option<f64> {
        match self {
            ComponentFit::Fitted { coefficient, .. } => Some(*coefficient),
            ComponentFit::Constant { .. } => None,
        }
    }

    pub fn reference(&self) -> f64 {
        match self {
            ComponentFit::Fitted { reference, .. } | ComponentFit::Constant { reference, .. } => *reference,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchFit {
    pub real: ComponentFit,
    pub imag: ComponentFit,
    /// False for a branch whose eigenvector stays orthogonal to the others,
    /// i.e. it does not take part in the coalescence.
    pub ep_participating: bool,
    pub max_overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub omega: f64,
    pub j_values: Vec<f64>,
    pub branches: Vec<BranchFit>,
    /// Matched eigenvalue tracks, one row per J.
    pub eigenvalues: Vec<[C64; 4]>,
}

/// Least-squares line through `(x, y)`: `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Power-law component fit of `values - reference` against `j`.
pub fn fit_component(j: &[f64], values: &[f64], reference: f64) -> ComponentFit {
    let offsets: Vec<f64> = values.iter().map(|v| v - reference).collect();
    let variation = offsets.iter().fold(0.0f64, |m, o| m.max(o.abs()));
    if variation < CONSTANT_BRANCH_TOL || offsets.iter().any(|o| *o == 0.0) {
        return ComponentFit::Constant { variation, reference };
    }
    let lx: Vec<f64> = j.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = offsets.iter().map(|o| o.abs().ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let sign = offsets.iter().sum::<f64>().signum();
    ComponentFit::Fitted { slope, coefficient: sign * intercept.exp(), reference }
}

/// Fit the approach of each eigenvalue branch to its uncoupled value as a
/// power of J.
pub fn scaling_fit(base: &SystemParams, j_values: &[f64]) -> Result<ScalingFit> {
    if j_values.len() < 2 || j_values.iter().any(|j| !(*j > 0.0)) {
        return Err(Error::InvalidParameter("scaling fit needs at least two positive J values".into()));
    }
    let mut js = j_values.to_vec();
    js.sort_by(|a, b| a.total_cmp(b));
    if js[js.len() - 1] / js[0] < 100.0 {
        return Err(Error::InvalidParameter("J values must span at least two decades".into()));
    }
    let omega = base.qubit1.omega;
    let reference = system_eigensystem(&base.with_coupling(0.0))?.eigenvalues;

    let decomps: Vec<SpectralDecomposition> = js
        .par_iter()
        .map(|&j| system_eigensystem(&base.with_coupling(j)))
        .collect::<Result<_>>()?;

    // match in units of J^(1/3), where the offsets are nearly stationary
    let mut tracks: Vec<[C64; 4]> = Vec::with_capacity(js.len());
    let mut order: Vec<[usize; 4]> = Vec::with_capacity(js.len());
    for (k, d) in decomps.iter().enumerate() {
        let ev = &d.eigenvalues;
        let perm = match tracks.last() {
            None => best_permutation(|i, p| (ev[p] - reference[i]).norm()),
            Some(prev) => {
                let (s0, s1) = (js[k - 1].cbrt(), js[k].cbrt());
                best_permutation(|i, p| ((prev[i] - reference[i]) / s0 - (ev[p] - reference[i]) / s1).norm())
            }
        };
        tracks.push(perm.map(|p| ev[p]));
        order.push(perm);
    }

    let first = &decomps[0];
    let ov = OverlapMatrix::from_decomposition(first);
    let branches = (0..4)
        .map(|b| {
            let re: Vec<f64> = tracks.iter().map(|row| row[b].re).collect();
            let im: Vec<f64> = tracks.iter().map(|row| row[b].im).collect();
            let idx = order[0][b];
            let max_overlap = (0..4).filter(|&k| k != idx).map(|k| ov.values[idx][k]).fold(0.0, f64::max);
            BranchFit {
                real: fit_component(&js, &re, reference[b].re),
                imag: fit_component(&js, &im, reference[b].im),
                ep_participating: max_overlap >= 0.5,
                max_overlap,
            }
        })
        .collect();
    Ok(ScalingFit { omega, j_values: js, branches, eigenvalues: tracks })
}

/// Assignment `i -> p[i]` minimizing the summed `cost(i, p[i])`.
fn best_permutation(cost: impl Fn(usize, usize) -> f64) -> [usize; 4] {
    let mut best = (f64::INFINITY, [0, 1, 2, 3]);
    for p in permutations4() {
        let total: f64 = (0..4).map(|i| cost(i, p[i])).sum();
        if total < best.0 - 1e-15 {
            best = (total, p);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    fn base(j: f64) -> SystemParams {
        SystemParams::identical(6.0, 1.6, j).unwrap()
    }

    #[test]
    fn hermitian_overlaps_vanish() {
        let h = coupled_hamiltonian(&SystemParams::identical(0.0, 1.6, 0.0).unwrap());
        let o = system_overlap_matrix(&SystemParams::identical(0.0, 1.6, 0.0).unwrap()).unwrap();
        assert!(o.max_off_diagonal() <= 1e-8);
        // the generic route may mix the degenerate pair but stays orthogonal
        assert!(overlap_matrix(&h).unwrap().max_off_diagonal() <= 1e-8);
    }

    #[test]
    fn overlap_matrix_is_symmetric_with_unit_diagonal() {
        let o = overlap_matrix(&coupled_hamiltonian(&base(1e-3))).unwrap();
        for i in 0..4 {
            assert_eq!(o.values[i][i], 1.0);
            for j in 0..4 {
                assert_eq!(o.values[i][j], o.values[j][i]);
                assert!((0.0..=1.0).contains(&o.values[i][j]));
            }
        }
    }

    #[test]
    fn far_from_ep_overlaps_stay_below_one() {
        let o = system_overlap_matrix(&SystemParams::identical(6.0, 3.0, 0.0).unwrap()).unwrap();
        assert!(o.max_off_diagonal() <= 0.95);
    }

    #[test]
    fn hermitian_sweep_is_real() {
        let r = sweep_eigenvalues(
            &SystemParams::identical(0.0, 1.0, 0.1).unwrap(),
            SweepAxis::Omega,
            &SweepRange::new(0.5, 2.0, 31).unwrap(),
        )
        .unwrap();
        for row in &r.eigenvalues {
            assert!(row.iter().all(|z| z.im.abs() < 1e-12));
        }
    }

    #[test]
    fn matching_follows_tracks() {
        let prev = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let next = [c(3.1, 0.0), c(0.1, 0.0), c(2.1, 0.0), c(0.9, 0.0)];
        let m = match_to(&prev, &next);
        assert_eq!(m, [c(0.1, 0.0), c(0.9, 0.0), c(2.1, 0.0), c(3.1, 0.0)]);
    }

    #[test]
    fn range_validation() {
        assert!(SweepRange::new(1.8, 1.3, 10).is_err());
        assert!(SweepRange::new(1.0, 2.0, 1).is_err());
        assert_eq!(SweepRange::new(1.0, 2.0, 5).unwrap().points().len(), 5);
    }

    #[test]
    fn hermitian_has_no_ep() {
        let s = SystemParams::identical(0.0, 1.6, 1e-3).unwrap();
        let r = ep_order(&s, 1.6, DEFAULT_APPROACH_EPS, DEFAULT_OVERLAP_THRESHOLD, DEFAULT_CLUSTER_GAP).unwrap();
        assert_eq!(r.order, 1);
    }

    #[test]
    fn decoupled_fourth_order() {
        let r = ep_order(&base(0.0), 1.5, DEFAULT_APPROACH_EPS, DEFAULT_OVERLAP_THRESHOLD, DEFAULT_CLUSTER_GAP).unwrap();
        assert_eq!(r.order, 4);
        assert!(r.overlaps_below.min_off_diagonal() >= 0.99);
    }

    #[test]
    fn ep_order_rejects_bad_knobs() {
        assert!(ep_order(&base(0.0), 1.5, 0.0, 0.99, 0.02).is_err());
        assert!(ep_order(&base(0.0), 1.5, 1e-6, 1.5, 0.02).is_err());
    }

    #[test]
    fn component_fit_recovers_power_law() {
        let js = [1e-6, 1e-5, 1e-4, 1e-3];
        let vals: Vec<f64> = js.iter().map(|j: &f64| -3.0 - 1.7 * j.powf(0.25)).collect();
        let f = fit_component(&js, &vals, -3.0);
        assert!((f.slope().unwrap() - 0.25).abs() < 1e-12);
        assert!((f.coefficient().unwrap() + 1.7).abs() < 1e-10);
        assert!(matches!(fit_component(&js, &[1.0; 4], 1.0), ComponentFit::Constant { .. }));
    }
}
