//! Single-source least-squares ESPRIT on maximally overlapping subarrays.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, least_squares_1d, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EspritEstimate {
    /// Azimuth in radians, within `[−π/2, π/2]`.
    pub angle: f64,
    /// The two leading eigenvalues are (nearly) equal, so the signal subspace
    /// is not identifiable and the angle is arbitrary.
    pub low_confidence: bool,
}

/// Estimates the azimuth of a single source from a `K×K` auto-correlation.
///
/// The rotation between subarrays `1..K−1` and `2..K` of the dominant
/// eigenvector is `exp(jπ·sin θ)`; its phase is mapped back through `arcsin`.
pub fn esprit_aoa(corr: &ComplexMatrix) -> Result<EspritEstimate> {
    let k = corr.rows();
    if k < 2 || !corr.is_square() {
        return Err(Error::Precondition(format!(
            "ESPRIT needs a square correlation with K >= 2, got {}x{}",
            corr.rows(),
            corr.cols()
        )));
    }
    let eig = hermitian_eig(corr)?;
    let top = eig.eigenvalues[0];
    if !(top > 0.0) || corr.max_abs() == 0.0 {
        return Err(Error::Degenerate("correlation matrix carries no energy".into()));
    }
    let second = eig.eigenvalues[1];
    let low_confidence = second > 0.0 && top / second < 1.0 + 1e-6;
    let u = eig.vector(0);
    let psi = match least_squares_1d(&u[..k - 1], &u[1..]) {
        Ok(psi) => psi,
        // a flat spectrum can hand back an eigenvector living on the last element only
        Err(Error::Degenerate(_)) if low_confidence => {
            return Ok(EspritEstimate {
                angle: 0.0,
                low_confidence,
            })
        }
        Err(e) => return Err(e),
    };
    let s = (psi.arg() / PI).clamp(-1.0, 1.0);
    let angle = s.asin().clamp(-FRAC_PI_2, FRAC_PI_2);
    Ok(EspritEstimate { angle, low_confidence })
}
