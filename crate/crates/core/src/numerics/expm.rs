//! Matrix exponential by Pade-13 scaling and squaring.

use super::matrix::{c, CMatrix, CVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Relative tolerance of the halved-step consistency check in `expm_action`.
pub const EXPM_CHECK_TOL: f64 = 1e-10;

/// `exp(A)` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("expm needs a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("expm argument"));
    }
    let n = a.rows();
    // the mean diagonal factors out exactly as a scalar exponential
    let mu = a.trace() / n as f64;
    let a = &*a - &CMatrix::identity(n).scale(mu);
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n).scale(mu.exp()));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(c(0.5f64.powi(s), 0.0));
    let b = |k: usize| c(PADE13[k], 0.0);
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |x6: C64, x4: C64, x2: C64, x0: C64| {
        let m = &(&a6.scale(x6) + &a4.scale(x4)) + &a2.scale(x2);
        if x0 == ZERO {
            m
        } else {
            &m + &id.scale(x0)
        }
    };
    let u_inner = &(&a6 * &lin(b(13), b(11), b(9), ZERO)) + &lin(b(7), b(5), b(3), b(1));
    let u = &a * &u_inner;
    let v = &(&a6 * &lin(b(12), b(10), b(8), ZERO)) + &lin(b(6), b(4), b(2), b(0));

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    let r = r.scale(mu.exp());
    if !r.is_finite() {
        return Err(Error::NonConvergence("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// `exp(-i M t) v`, the propagator of `d psi/dt = -i M psi`.
///
/// The result is cross-checked against two half steps; a relative
/// disagreement above `EXPM_CHECK_TOL` is reported as `NonConvergence`.
pub fn expm_action(m: &CMatrix, t: f64, v: &CVector) -> Result<CVector> {
    if m.cols() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, vector has dimension {}",
            m.rows(),
            m.cols(),
            v.dim()
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    let full = expm(&m.scale(c(0.0, -t)))?.mul_vec(v);
    let half = expm(&m.scale(c(0.0, -t / 2.0)))?;
    let twice = half.mul_vec(&half.mul_vec(v));
    let diff = full.max_abs_diff(&twice);
    let scale = full.norm().max(f64::MIN_POSITIVE);
    if diff > EXPM_CHECK_TOL * scale {
        return Err(Error::NonConvergence(format!(
            "matrix exponential self-consistency {:e} exceeds tolerance",
            diff / scale
        )));
    }
    Ok(full)
}

/// Solve `A X = B` by LU decomposition with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::DimensionMismatch("solve: incompatible shapes".into()));
    }
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm()))
            .unwrap_or(k);
        if lu[(p, k)].norm() == 0.0 {
            return Err(Error::NonConvergence("singular matrix in solve".into()));
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            if f == ZERO {
                continue;
            }
            for j in k..n {
                let s = lu[(k, j)];
                lu[(i, j)] -= f * s;
            }
            for j in 0..m {
                let s = x[(k, j)];
                x[(i, j)] -= f * s;
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for l in i + 1..n {
                s -= lu[(i, l)] * x[(l, j)];
            }
            x[(i, j)] = s * (ONE / lu[(i, i)]);
        }
    }
    Ok(x)
}
