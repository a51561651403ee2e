//! Scalar helpers that work without `std`.

use core::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub use libm::{atan2, cos, exp, hypot, log, sin, sqrt};

/// Wraps an angle into (-π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = libm::fmod(angle + PI, TAU);
    if a < 0.0 {
        a += TAU;
    }
    // a in [0, 2π) maps to [-π, π); flip the lower seam onto +π.
    let wrapped = a - PI;
    if wrapped <= -PI {
        PI
    } else {
        wrapped
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Absolute tolerance below which negative covariance eigenvalues are
/// treated as rounding noise and clamped to zero.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Symmetrizes `m` in place and projects tiny negative eigenvalues to zero.
///
/// The clamp tolerance is `PSD_TOLERANCE` scaled by the largest eigenvalue
/// magnitude when that exceeds one. Anything more negative is reported.
pub fn ensure_psd(m: &mut DMatrix<f64>) -> Result<()> {
    symmetrize(m);
    if m.nrows() == 0 {
        return Ok(());
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min >= 0.0 {
        return Ok(());
    }
    let scale = eig.eigenvalues.amax().max(1.0);
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    *m = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    symmetrize(m);
    Ok(())
}
