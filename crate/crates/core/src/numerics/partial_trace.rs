use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, ZERO};
use crate::error::{Error, Result};

/// Which qubit of the pair; basis index of `|ab>` is `2a + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Qubit {
    First,
    Second,
}

impl Qubit {
    pub fn from_index(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Qubit::First),
            2 => Ok(Qubit::Second),
            _ => Err(Error::InvalidParameter(format!("qubit index must be 1 or 2, got {k}"))),
        }
    }
}

/// Reduced 2x2 state of `keep`, tracing out the other qubit.
pub fn partial_trace(rho: &CMatrix, keep: Qubit) -> Result<CMatrix> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace needs a 4x4 matrix, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let mut out = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut s = ZERO;
            for k in 0..2 {
                s += match keep {
                    Qubit::First => rho[(2 * i + k, 2 * j + k)],
                    Qubit::Second => rho[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}
