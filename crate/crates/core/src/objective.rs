//! The distance that scores candidate solutions, plus the utopian lower
//! bounds obtained by rounding a matrix onto the `1/(2b)` grid.

use thiserror::Error;

use crate::model::{from_matrix, PairOrderMatrix, SquareMatrix, WeightedEnsemble};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("matrices have {left} and {right} items")]
    DimensionMismatch { left: usize, right: usize },
    #[error("value {0} is outside [0,1]")]
    OutOfUnitInterval(f64),
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
}

/// Sum of absolute entrywise differences over all ordered pairs `(u,v)`,
/// diagonal included.
pub fn distance(p: &SquareMatrix, c: &SquareMatrix) -> Result<f64, ObjectiveError> {
    if p.n() != c.n() {
        return Err(ObjectiveError::DimensionMismatch { left: p.n(), right: c.n() });
    }
    Ok(p.as_slice().iter().zip(c.as_slice()).map(|(a, b)| (a - b).abs()).sum())
}

/// Distance from the ensemble's weighted matrix to `c`.
pub fn fitness(ensemble: &WeightedEnsemble, c: &PairOrderMatrix) -> Result<f64, ObjectiveError> {
    if ensemble.n() != c.n() {
        return Err(ObjectiveError::DimensionMismatch { left: ensemble.n(), right: c.n() });
    }
    distance(&ensemble.aggregate(), c)
}

/// Rounds `x` to the nearest multiple of `1/(2b)`.
///
/// With `b = 1` the middle bin is closed, so `0.25` and `0.75` both map to
/// `0.5`. With `b >= 2` bins are half-open and a value on a bin boundary
/// rounds up.
pub fn round_to_grid(x: f64, b: usize) -> Result<f64, ObjectiveError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(ObjectiveError::OutOfUnitInterval(x));
    }
    if b == 0 {
        return Err(ObjectiveError::ZeroResolution);
    }
    if b == 1 {
        return Ok(if x > 0.75 {
            1.0
        } else if x >= 0.25 {
            0.5
        } else {
            0.0
        });
    }
    let quarter = 4.0 * b as f64;
    if x < 1.0 / quarter {
        return Ok(0.0);
    }
    if x >= (quarter - 1.0) / quarter {
        return Ok(1.0);
    }
    // Bin l covers [(2l-1)/4b, (2l+1)/4b); fix up the float estimate
    // against the exact boundary expressions.
    let top = 2 * b - 1;
    let mut l = (((quarter * x + 1.0) / 2.0).floor() as usize).clamp(1, top);
    while l > 1 && x < (2 * l - 1) as f64 / quarter {
        l -= 1;
    }
    while l < top && x >= (2 * l + 1) as f64 / quarter {
        l += 1;
    }
    Ok(l as f64 / (2 * b) as f64)
}

/// The `b`-th utopian matrix of a pair order matrix and its distance to it.
#[derive(Clone, Debug, PartialEq)]
pub struct UtopiaReport {
    pub b: usize,
    /// Entrywise grid rounding of the input. Exactly on a bin boundary the
    /// two halves of a complementary pair can round in the same direction,
    /// so this is kept as a plain matrix.
    pub matrix: SquareMatrix,
    pub value: f64,
}

impl UtopiaReport {
    /// True when the utopian matrix is itself the matrix of a bucket order.
    pub fn is_bucket_matrix(&self) -> bool {
        from_matrix(&self.matrix).is_ok()
    }
}

/// Rounds `c` entrywise onto the `1/(2b)` grid. The resulting distance
/// bounds from below the fitness of every equal-weight ensemble of `b`
/// orders; for `b = 1` it bounds every single bucket order.
pub fn utopia(c: &PairOrderMatrix, b: usize) -> Result<UtopiaReport, ObjectiveError> {
    let n = c.n();
    let mut matrix = SquareMatrix::filled(n, 0.5);
    for u in 0..n {
        for v in 0..n {
            matrix.set(u, v, round_to_grid(c.get(u, v), b)?);
        }
    }
    let value = distance(&matrix, c)?;
    Ok(UtopiaReport { b, matrix, value })
}

/// Fitness kernel for repeated evaluation of the same members under
/// different weights. `members` holds row-major bucket matrices.
pub(crate) fn weighted_distance<M: AsRef<[f64]>>(members: &[M], weights: &[f64], c: &[f64]) -> f64 {
    let mut total = 0.0;
    for (idx, &target) in c.iter().enumerate() {
        let mut mixed = 0.0;
        for (m, &w) in members.iter().zip(weights) {
            mixed += w * m.as_ref()[idx];
        }
        total += (mixed - target).abs();
    }
    total
}
