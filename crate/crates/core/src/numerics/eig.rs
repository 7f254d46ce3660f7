//! Eigendecomposition of small dense complex matrices.
//!
//! General (non-Hermitian) matrices go through a complex Schur form computed
//! by Householder reduction to Hessenberg form followed by shifted QR sweeps
//! with Wilkinson shifts. Right eigenvectors come from back-substitution on the
//! triangular factor, left eigenvectors from forward substitution on its
//! adjoint, so every eigenvalue carries a matched left/right pair. 2x2 inputs
//! use the closed-form roots instead.
//!
//! Hermitian matrices use cyclic Jacobi rotations.

use serde::{Deserialize, Serialize};

use super::matrix::{c, CMatrix, CVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Default residual tolerance (relative to the Frobenius norm) for `eig_general`.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Overlap above which two eigenvectors are treated as nearly parallel.
pub const NEAR_DEFECTIVE_OVERLAP: f64 = 0.99;

const MAX_DIM: usize = 4;
const MAX_QR_ITERS_PER_EIGENVALUE: usize = 60;

/// Numerical quality marker attached to each eigenpair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenCondition {
    Regular,
    /// The right eigenvector is nearly parallel (overlap > 0.99) to another
    /// returned eigenvector: the matrix is close to defective.
    NearDefective,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors, `M v = lambda v`.
    pub right_vectors: Vec<CVector>,
    /// Unit-norm left eigenvectors stored as kets `w` with `M^dagger w = conj(lambda) w`.
    pub left_vectors: Vec<CVector>,
    pub condition_flags: Vec<EigenCondition>,
}

impl SpectralDecomposition {
    /// Normalize, order and flag a set of eigenpairs.
    pub fn from_pairs(values: Vec<C64>, right: Vec<CVector>, left: Vec<CVector>) -> Result<Self> {
        let n = values.len();
        if right.len() != n || left.len() != n {
            return Err(Error::DimensionMismatch("eigenpair lists differ in length".into()));
        }
        let unit = |v: &CVector| {
            v.normalized()
                .map_err(|_| Error::NonConvergence("zero eigenvector".into()))
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| compare_eigenvalues(values[a], values[b]));
        let right: Vec<CVector> = order.iter().map(|&k| unit(&right[k])).collect::<Result<_>>()?;
        let left: Vec<CVector> = order.iter().map(|&k| unit(&left[k])).collect::<Result<_>>()?;
        let values: Vec<C64> = order.iter().map(|&k| values[k]).collect();

        let mut flags = vec![EigenCondition::Regular; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && right[i].dot(&right[j]).norm() > NEAR_DEFECTIVE_OVERLAP {
                    flags[i] = EigenCondition::NearDefective;
                }
            }
        }
        Ok(Self {
            eigenvalues: values,
            right_vectors: right,
            left_vectors: left,
            condition_flags: flags,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn any_near_defective(&self) -> bool {
        self.condition_flags
            .iter()
            .any(|f| *f == EigenCondition::NearDefective)
    }

    /// Absolute overlaps `|<v_i|v_j>|` of the right eigenvectors.
    pub fn right_overlaps(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.right_vectors[i].dot(&self.right_vectors[j]).norm())
                    .collect()
            })
            .collect()
    }

    /// Rescale the left vectors so that `<w_i|v_i> = 1`. Fails when a pair is
    /// (numerically) self-orthogonal, which happens at an exceptional point.
    pub fn biorthonormal_left(&self) -> Result<Vec<CVector>> {
        self.left_vectors
            .iter()
            .zip(&self.right_vectors)
            .map(|(w, v)| {
                let s = w.dot(v);
                if s.norm() < 1e-14 {
                    return Err(Error::NonConvergence(
                        "left/right pair is self-orthogonal".into(),
                    ));
                }
                // <w'|v> = conj(k) <w|v> = 1  =>  k = 1 / conj(s)
                Ok(w.scale(ONE / s.conj()))
            })
            .collect()
    }
}

fn check_input(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() > MAX_DIM {
        return Err(Error::DimensionTooLarge(m.rows()));
    }
    if m.rows() == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(())
}

/// Eigenvalues with right and left eigenvectors of a general complex matrix of
/// dimension at most 4.
///
/// Eigenpairs are ordered by real part, ties broken by imaginary part. Every
/// pair is checked against `||M v - lambda v|| <= tol * ||M||` (and the same
/// for the adjoint); failure is reported as `NonConvergence`.
pub fn eig_general(m: &CMatrix, tol: f64) -> Result<SpectralDecomposition> {
    check_input(m)?;
    let n = m.rows();
    let (values, right, left) = match n {
        1 => (vec![m[(0, 0)]], vec![CVector::basis(1, 0)], vec![CVector::basis(1, 0)]),
        2 => eig_2x2(m),
        _ => eig_schur(m)?,
    };

    let d = SpectralDecomposition::from_pairs(values, right, left)?;

    let scale = m.frobenius_norm();
    let adj = m.adjoint();
    for k in 0..n {
        let r = (&m.mul_vec(&d.right_vectors[k]) - &d.right_vectors[k].scale(d.eigenvalues[k])).norm();
        let l = (&adj.mul_vec(&d.left_vectors[k]) - &d.left_vectors[k].scale(d.eigenvalues[k].conj())).norm();
        if r > tol * scale || l > tol * scale {
            return Err(Error::NonConvergence(format!(
                "eigenpair {k}: residuals right {r:e}, left {l:e} exceed {tol:e} * {scale:e}"
            )));
        }
    }
    Ok(d)
}

/// Eigenvalues only, same ordering as `eig_general`.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    Ok(eig_general(m, DEFAULT_EIG_TOL)?.eigenvalues)
}

fn compare_eigenvalues(a: C64, b: C64) -> std::cmp::Ordering {
    let scale = 1.0f64.max(a.norm()).max(b.norm());
    if (a.re - b.re).abs() <= 1e-12 * scale {
        a.im.total_cmp(&b.im)
    } else {
        a.re.total_cmp(&b.re)
    }
}

fn eig_2x2(m: &CMatrix) -> (Vec<C64>, Vec<CVector>, Vec<CVector>) {
    let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mean = (a + d) * 0.5;
    let half = (a - d) * 0.5;
    let s = (half * half + b * cc).sqrt();
    let values = vec![mean + s, mean - s];

    let vec_for = |a: C64, b: C64, cc: C64, d: C64, lambda: C64, k: usize| -> CVector {
        if b == ZERO && cc == ZERO {
            // diagonal: pick the unit vector whose diagonal entry is closer
            let first = if a == d { k == 0 } else { (lambda - a).norm() <= (lambda - d).norm() };
            return if first { CVector::basis(2, 0) } else { CVector::basis(2, 1) };
        }
        let from_row0 = CVector::new(vec![b, lambda - a]);
        let from_row1 = CVector::new(vec![lambda - d, cc]);
        if from_row0.norm() >= from_row1.norm() {
            from_row0
        } else {
            from_row1
        }
    };

    let right = values
        .iter()
        .enumerate()
        .map(|(k, &l)| vec_for(a, b, cc, d, l, k))
        .collect();
    let left = values
        .iter()
        .enumerate()
        .map(|(k, &l)| vec_for(a.conj(), cc.conj(), b.conj(), d.conj(), l.conj(), k))
        .collect();
    (values, right, left)
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
#[derive(Clone, Copy)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    fn new(a: C64, b: C64) -> Self {
        let na = a.norm();
        let r = na.hypot(b.norm());
        if r == 0.0 {
            return Self { c: 1.0, s: ZERO };
        }
        if na == 0.0 {
            return Self { c: 0.0, s: ONE };
        }
        Self {
            c: na / r,
            s: (a / na) * b.conj() / r,
        }
    }

    /// Rows `k, k+1` of `h`, columns in `cols`.
    fn apply_left(&self, h: &mut CMatrix, k: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * self.c + self.s * y;
            h[(k + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Multiply columns `k, k+1` of `h` by `G^dagger`, rows in `rows`.
    fn apply_right_adjoint(&self, h: &mut CMatrix, k: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * self.c + self.s.conj() * y;
            h[(i, k + 1)] = -self.s * x + y * self.c;
        }
    }
}

/// Householder reduction to upper Hessenberg form: returns `(H, Q)` with
/// `A = Q H Q^dagger`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { ONE } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // P = I - 2 v v^dagger / (v^dagger v) acting on indices k+1..n
        let beta = 2.0 / vnorm2;
        // H <- P H
        for j in 0..n {
            let dot: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * dot * beta;
            }
        }
        // H <- H P, Q <- Q P
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let dot: C64 = (0..v.len()).map(|j| mat[(i, k + 1 + j)] * v[j]).sum();
                for j in 0..v.len() {
                    mat[(i, k + 1 + j)] -= dot * v[j].conj() * beta;
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Complex Schur decomposition `A = Q T Q^dagger` with `T` upper triangular.
pub(crate) fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.rows();
    let (mut h, mut q) = hessenberg(a);
    if n == 1 {
        return Ok((h, q));
    }
    let eps = f64::EPSILON;
    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iters = 0usize;
    let mut total = 0usize;

    while hi > 0 {
        // deflation scan
        for k in (1..=hi).rev() {
            let sub = h[(k, k - 1)].norm();
            let diag = h[(k, k)].norm() + h[(k - 1, k - 1)].norm();
            if sub <= eps * diag || sub <= eps * eps * norm {
                h[(k, k - 1)] = ZERO;
            }
        }
        if h[(hi, hi - 1)] == ZERO {
            hi -= 1;
            iters = 0;
            continue;
        }
        let mut lo = hi - 1;
        while lo > 0 && h[(lo, lo - 1)] != ZERO {
            lo -= 1;
        }

        iters += 1;
        total += 1;
        if total > MAX_QR_ITERS_PER_EIGENVALUE * n {
            return Err(Error::NonConvergence(format!(
                "shifted QR did not converge after {total} sweeps"
            )));
        }

        let shift = if iters % 11 == 0 {
            // exceptional shift to break cycles
            h[(hi, hi)] + c(h[(hi, hi - 1)].norm() * 0.75, h[(hi, hi - 1)].norm() * 0.5)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..=hi {
            h[(k, k)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let g = Givens::new(h[(k, k)], h[(k + 1, k)]);
            g.apply_left(&mut h, k, k..n);
            h[(k + 1, k)] = ZERO;
            rotations.push(g);
        }
        for (idx, g) in rotations.iter().enumerate() {
            let k = lo + idx;
            g.apply_right_adjoint(&mut h, k, 0..(k + 2).min(hi + 1));
            g.apply_right_adjoint(&mut q, k, 0..n);
        }
        for k in lo..=hi {
            h[(k, k)] += shift;
        }
    }

    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok((h, q))
}

fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let s = (half * half + b * cc).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + s;
    let l2 = mean - s;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

type EigTriple = (Vec<C64>, Vec<CVector>, Vec<CVector>);

fn eig_schur(m: &CMatrix) -> Result<EigTriple> {
    let n = m.rows();
    let (t, q) = schur(m)?;
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let smin = (f64::EPSILON * t.max_abs()).max(f64::MIN_POSITIVE);

    let guard = |z: C64| if z.norm() < smin { c(smin, 0.0) } else { z };

    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = values[k];

        // (T - lambda) x = 0 with x_k = 1, x_j = 0 for j > k
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for j in (0..k).rev() {
            let s: C64 = (j + 1..=k).map(|l| t[(j, l)] * x[l]).sum();
            x[j] = -s / guard(t[(j, j)] - lambda);
        }
        right.push(q.mul_vec(&CVector::new(x)));

        // (T^dagger - conj(lambda)) y = 0 with y_k = 1, y_j = 0 for j < k
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for j in k + 1..n {
            let s: C64 = (k..j).map(|l| t[(l, j)].conj() * y[l]).sum();
            y[j] = -s / guard(t[(j, j)].conj() - lambda.conj());
        }
        left.push(q.mul_vec(&CVector::new(y)));
    }
    Ok((values, right, left))
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns real eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors. The input is symmetrized first.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_input(m)?;
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            let mut pairs: Vec<(f64, CVector)> =
                (0..n).map(|k| (a[(k, k)].re, v.column(k))).collect();
            pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
            let values = pairs.iter().map(|p| p.0).collect();
            let cols: Vec<CVector> = pairs.into_iter().map(|p| p.1).collect();
            return Ok((values, CMatrix::from_columns(&cols)));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // U = D R with D = diag(1, conj(phase)) on (p, q) making a_pq real,
                // R the real Jacobi rotation [[c, s], [-s, c]].
                let mut u = CMatrix::identity(n);
                u[(p, p)] = c(cs, 0.0);
                u[(p, q)] = c(sn, 0.0);
                u[(q, p)] = phase.conj() * (-sn);
                u[(q, q)] = phase.conj() * cs;
                a = &(&u.adjoint() * &a) * &u;
                v = &v * &u;
            }
        }
    }
    Err(Error::NonConvergence("Jacobi sweeps exhausted".into()))
}
