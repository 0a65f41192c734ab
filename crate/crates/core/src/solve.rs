//! Minimum-norm least squares for migrating learned values into a new
//! representation space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hrr::Hrr;
use crate::scalar::Scalar;

/// Singular values below `RCOND * sigma_max` are treated as zero.
pub const RCOND: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Solution<T: Scalar> {
    pub weights: Hrr<T>,
    /// `max_i |rows_i . w - values_i|`
    pub residual: f64,
    pub rank: usize,
}

/// Solves `rows * w ≈ values` for the Moore–Penrose solution `w = rows⁺ values`.
///
/// Rows are the stacked compound vectors of the new space. With fewer rows
/// than columns the system is consistent for generic rows and the residual
/// is at rounding level; otherwise it is the least-squares fit and the
/// residual says how far off it is. Computation is in `f64` whatever `T` is.
pub fn stack_and_solve<T: Scalar>(rows: &[&Hrr<T>], values: &[T]) -> Result<Solution<T>> {
    let m = rows.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no rows to solve against".into()));
    }
    if values.len() != m {
        return Err(Error::DimensionMismatch {
            left: m,
            right: values.len(),
        });
    }
    let n = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            left: n,
            right: bad.len(),
        });
    }
    let b = DVector::from_iterator(m, values.iter().map(|v| v.to_f64_lossy()));

    let (w, rank) = if m < n {
        // rows^T = Q R with thin Q (n x m); rows = R^T Q^T, so the min-norm
        // solution is w = Q y with y the min-norm solution of R^T y = b.
        let at = DMatrix::from_fn(n, m, |i, j| rows[j].as_slice()[i].to_f64_lossy());
        let qr = at.qr();
        let q = qr.q();
        let rt = qr.r().transpose();
        let (y, rank) = svd_solve(rt, &b)?;
        (q * y, rank)
    } else {
        let a = DMatrix::from_fn(m, n, |i, j| rows[i].as_slice()[j].to_f64_lossy());
        svd_solve(a, &b)?
    };

    let residual = rows
        .iter()
        .zip(values)
        .map(|(r, v)| {
            let fit: f64 = r
                .as_slice()
                .iter()
                .zip(w.iter())
                .map(|(x, wi)| x.to_f64_lossy() * wi)
                .sum();
            (fit - v.to_f64_lossy()).abs()
        })
        .fold(0.0, f64::max);

    let weights = Hrr::from_vec(w.iter().map(|&x| T::of(x)).collect())?;
    Ok(Solution {
        weights,
        residual,
        rank,
    })
}

fn svd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    let ncols = a.ncols();
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Ok((DVector::zeros(ncols), 0));
    }
    let eps = RCOND * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd
        .solve(b, eps)
        .map_err(|e| Error::InvalidArgument(format!("pseudo-inverse failed: {e}")))?;
    Ok((x, rank))
}
