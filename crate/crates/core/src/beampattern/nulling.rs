//! Null steering by orthogonal projection.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::{check_len, BeamWeights};
use crate::error::{Error, Result};
use crate::geometry::{steering_vector_toward, ArrayConfig, DirectionAngles, RotationAngles};

/// Nulls closer than this to the pointing direction are rejected, degrees.
pub const NULL_CONFLICT_DEG: f64 = 1.0;

/// Removes the components of `weights` along the steering vectors of `nulls`.
///
/// This is the least-squares closest vector with `a(null)^H w = 0` for every
/// null. PPE is carried over unchanged.
pub fn apply_nulls(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    pointing: DirectionAngles,
    nulls: &[DirectionAngles],
) -> Result<BeamWeights> {
    let mask = alloc::vec![true; config.num_elements()];
    apply_nulls_masked(weights, config, orientation, pointing, nulls, &mask)
}

/// Like [`apply_nulls`] but only elements with `mask[m] == true` may carry
/// weight; inactive entries come out zero.
pub fn apply_nulls_masked(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    pointing: DirectionAngles,
    nulls: &[DirectionAngles],
    mask: &[bool],
) -> Result<BeamWeights> {
    check_len(config, weights.len())?;
    check_len(config, mask.len())?;
    let projector = NullProjector::new(config, orientation, pointing, nulls, mask)?;
    let mut entries: Vec<Complex64> = weights
        .entries
        .iter()
        .zip(mask)
        .map(|(w, on)| if *on { *w } else { Complex64::new(0.0, 0.0) })
        .collect();
    projector.apply(&mut entries);
    BeamWeights::new(entries, weights.ppe_mw)
}

/// Orthonormal basis of the masked null steering vectors.
pub(crate) struct NullProjector {
    basis: Vec<Vec<Complex64>>,
    /// `coeffs[i][j]`: weight of masked null steering vector `j` in `basis[i]`.
    coeffs: Vec<Vec<Complex64>>,
}

impl NullProjector {
    pub(crate) fn new(
        config: &ArrayConfig,
        orientation: RotationAngles,
        pointing: DirectionAngles,
        nulls: &[DirectionAngles],
        mask: &[bool],
    ) -> Result<Self> {
        if nulls.len() >= config.num_elements() {
            return Err(Error::InvalidArgument("need fewer nulls than elements"));
        }
        let k = nulls.len();
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(k);
        let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(k);
        for (j, null) in nulls.iter().enumerate() {
            let sep = pointing.separation(null).to_degrees();
            if sep < NULL_CONFLICT_DEG {
                return Err(Error::NullConflict { separation_deg: sep });
            }
            let mut v: Vec<Complex64> = steering_vector_toward(config, orientation, *null)
                .0
                .into_iter()
                .zip(mask)
                .map(|(a, on)| if *on { a } else { Complex64::new(0.0, 0.0) })
                .collect();
            let start = norm(&v);
            if start == 0.0 {
                continue;
            }
            let mut cv = alloc::vec![Complex64::new(0.0, 0.0); k];
            cv[j] = Complex64::new(1.0, 0.0);
            // Gram-Schmidt twice keeps the basis orthogonal to rounding level.
            for _ in 0..2 {
                for (q, qc) in basis.iter().zip(&coeffs) {
                    let c = dot(q, &v);
                    for (x, qi) in v.iter_mut().zip(q) {
                        *x -= qi * c;
                    }
                    for (x, qi) in cv.iter_mut().zip(qc) {
                        *x -= qi * c;
                    }
                }
            }
            let n = norm(&v);
            if n <= 1e-8 * start {
                continue;
            }
            for x in v.iter_mut().chain(cv.iter_mut()) {
                *x /= n;
            }
            basis.push(v);
            coeffs.push(cv);
        }
        Ok(Self { basis, coeffs })
    }

    #[cfg(test)]
    pub(crate) fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    pub(crate) fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    /// Coefficients `q_i^H w` of a single projection pass.
    pub(crate) fn components(&self, w: &[Complex64]) -> Vec<Complex64> {
        self.basis.iter().map(|q| dot(q, w)).collect()
    }

    /// `w <- w - sum q (q^H w)`, run twice.
    pub(crate) fn apply(&self, w: &mut [Complex64]) {
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, w);
                for (x, qi) in w.iter_mut().zip(q) {
                    *x -= qi * c;
                }
            }
        }
    }
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter()
        .zip(y)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
