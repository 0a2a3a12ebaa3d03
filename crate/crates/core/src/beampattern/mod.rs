//! Radiation patterns, tapering, null steering and pattern synthesis.
//!
//! Weight vectors are indexed like the array elements: element `m` sits at
//! grid position `(m / side, m % side)`. The array factor in a direction `i`
//! is `a(i)^H w`, so weights equal to the steering vector add coherently.

mod cut;
mod nulling;
mod synth;
mod taper;

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{
    rotate_inverse, rotation_matrix, steering_vector, ArrayConfig, DirectionAngles, Pose,
    RotationAngles, Vec3,
};

pub use cut::{extract_sll, pattern_cut, pattern_grid, CutPlane, GridSample, PatternCut, SllReading, CUT_STEP_DEG};
pub use nulling::{apply_nulls, apply_nulls_masked, NULL_CONFLICT_DEG};
pub use synth::{
    synthesize, SynthesisRequest, SynthesisResult, DEFAULT_COUNTER_MAX, DEFAULT_EIRP_MAX_DBM, DEFAULT_ETA,
};
pub use taper::chebyshev_taper;

/// Complex excitation per element plus the power per element (PPE, mW).
///
/// Entries are normalized so the largest magnitude is 1; the radiated
/// vector is `sqrt(PPE) * entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    pub entries: Vec<Complex64>,
    pub ppe_mw: f64,
}

impl BeamWeights {
    pub fn new(entries: Vec<Complex64>, ppe_mw: f64) -> Result<Self> {
        if !(ppe_mw >= 0.0) || !ppe_mw.is_finite() {
            return Err(Error::InvalidArgument("power per element must be finite and non-negative"));
        }
        Ok(Self { entries, ppe_mw })
    }

    /// All-zero weights of length `m`.
    pub fn zeros(m: usize) -> Self {
        Self {
            entries: alloc::vec![Complex64::new(0.0, 0.0); m],
            ppe_mw: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `sqrt(PPE) * entries`, the vector that actually multiplies the signal.
    pub fn transmit_vector(&self) -> Vec<Complex64> {
        let s = self.ppe_mw.sqrt();
        self.entries.iter().map(|w| w * s).collect()
    }

    /// Radiated power `PPE * ||w||^2`, mW.
    pub fn power_mw(&self) -> f64 {
        self.ppe_mw * self.entries.iter().map(|w| w.norm_sqr()).sum::<f64>()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.entries.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// Rescales entries to unit peak magnitude, keeping the transmit vector fixed.
    pub fn normalized(&self) -> Self {
        let peak = self.max_amplitude();
        if peak == 0.0 {
            return self.clone();
        }
        Self {
            entries: self.entries.iter().map(|w| w / peak).collect(),
            ppe_mw: self.ppe_mw * peak * peak,
        }
    }
}

/// Sensing and communication beams sharing one array.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingMatrix {
    pub sensing: BeamWeights,
    pub comm: BeamWeights,
}

impl BeamformingMatrix {
    pub fn total_power_mw(&self) -> f64 {
        self.sensing.power_mw() + self.comm.power_mw()
    }
}

/// Cardioid power pattern `((1 + cos t)/2)^2` for an angle `t` off broadside.
pub fn element_gain_off_broadside(off_broadside: f64) -> f64 {
    let h = 0.5 * (1.0 + off_broadside.cos());
    h * h
}

/// Element gain for a body-frame direction.
///
/// `direction` uses the crate's convention (unit vector pointing back at the
/// array), so the radiated direction is its negation and the angle from
/// broadside (+y) satisfies `cos t = -sin(theta) sin(phi)`.
pub fn element_gain(direction: DirectionAngles) -> f64 {
    element_gain_body_vector(direction.unit_vector())
}

pub(crate) fn element_gain_body_vector(u: Vec3) -> f64 {
    let h = 0.5 * (1.0 - u.y);
    h * h
}

/// `|a(direction)^H w|^2 * g_e`, using the normalized entries (PPE excluded).
pub fn array_gain(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    direction: DirectionAngles,
) -> Result<f64> {
    check_len(config, weights.len())?;
    let table = DirectionTable::from_world(config, orientation, core::iter::once(direction.unit_vector()));
    Ok(table.power(0, &weights.entries))
}

/// `10 log10(PPE * array_gain)` toward `pointing`, dBm. Zero gain gives `-inf`.
pub fn eirp_dbm(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    pointing: DirectionAngles,
) -> Result<f64> {
    let g = array_gain(weights, config, orientation, pointing)?;
    Ok(crate::to_db(weights.ppe_mw * g))
}

/// Transmit beampattern gain toward `target`: `|a^H w_s|^2 + |a^H w_c|^2`
/// with both beams' transmit vectors.
pub fn beampattern_gain(
    matrix: &BeamformingMatrix,
    config: &ArrayConfig,
    pose: Pose,
    target: Vec3,
) -> Result<f64> {
    check_len(config, matrix.sensing.len())?;
    check_len(config, matrix.comm.len())?;
    let a = steering_vector(config, pose.position, pose.orientation, target)?;
    let s = a.inner(&matrix.sensing.transmit_vector())?;
    let c = a.inner(&matrix.comm.transmit_vector())?;
    Ok(s.norm_sqr() + c.norm_sqr())
}

/// Sum over trajectory points of `|B*(n) - B(n)|^2`, with `B*` from `reference`.
pub fn beampattern_error(
    poses: &[Pose],
    predicted: &[BeamformingMatrix],
    reference: &[BeamformingMatrix],
    config: &ArrayConfig,
    target: Vec3,
) -> Result<f64> {
    if predicted.len() != poses.len() {
        return Err(Error::DimensionMismatch {
            expected: poses.len(),
            found: predicted.len(),
        });
    }
    if reference.len() != poses.len() {
        return Err(Error::DimensionMismatch {
            expected: poses.len(),
            found: reference.len(),
        });
    }
    let mut total = 0.0;
    for ((pose, p), r) in poses.iter().zip(predicted).zip(reference) {
        let b = beampattern_gain(p, config, *pose, target)?;
        let b_ref = beampattern_gain(r, config, *pose, target)?;
        total += (b_ref - b) * (b_ref - b);
    }
    Ok(total)
}

fn check_len(config: &ArrayConfig, len: usize) -> Result<()> {
    if len != config.num_elements() {
        return Err(Error::DimensionMismatch {
            expected: config.num_elements(),
            found: len,
        });
    }
    Ok(())
}

/// Precomputed conjugate phasors for a batch of directions.
///
/// The steering phase of element `(r, c)` is `pi((1+r) u_x + (1+c) u_z)` with
/// `u` the body-frame direction, so `a^H w` factors into a row phasor times a
/// column phasor per element.
pub(crate) struct DirectionTable {
    side: usize,
    rows: Vec<Complex64>,
    cols: Vec<Complex64>,
    gain: Vec<f64>,
}

impl DirectionTable {
    pub(crate) fn from_world(
        config: &ArrayConfig,
        orientation: RotationAngles,
        world_dirs: impl Iterator<Item = Vec3>,
    ) -> Self {
        let r = rotation_matrix(orientation);
        Self::from_body(config.side(), world_dirs.map(|v| rotate_inverse(&r, v)))
    }

    pub(crate) fn from_body(side: usize, body_dirs: impl Iterator<Item = Vec3>) -> Self {
        let (lower, _) = body_dirs.size_hint();
        let mut rows = Vec::with_capacity(lower * side);
        let mut cols = Vec::with_capacity(lower * side);
        let mut gain = Vec::with_capacity(lower);
        for u in body_dirs {
            push_phasors(&mut rows, side, u.x);
            push_phasors(&mut cols, side, u.z);
            gain.push(element_gain_body_vector(u));
        }
        Self {
            side,
            rows,
            cols,
            gain,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.gain.len()
    }

    pub(crate) fn row_phasors(&self, s: usize) -> &[Complex64] {
        &self.rows[s * self.side..(s + 1) * self.side]
    }

    pub(crate) fn col_phasors(&self, s: usize) -> &[Complex64] {
        &self.cols[s * self.side..(s + 1) * self.side]
    }

    pub(crate) fn element_gain(&self, s: usize) -> f64 {
        self.gain[s]
    }

    /// `a_s^H (x kron z)` for a separable weight `w[r * side + c] = x[r] z[c]`.
    pub(crate) fn separable_response(&self, s: usize, x: &[Complex64], z: &[Complex64]) -> Complex64 {
        let sx: Complex64 = self.row_phasors(s).iter().zip(x).map(|(p, v)| p * v).sum();
        let sz: Complex64 = self.col_phasors(s).iter().zip(z).map(|(p, v)| p * v).sum();
        sx * sz
    }

    /// `a_s^H w`.
    pub(crate) fn response(&self, s: usize, w: &[Complex64]) -> Complex64 {
        let n = self.side;
        let rows = &self.rows[s * n..(s + 1) * n];
        let cols = &self.cols[s * n..(s + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, wr) in rows.iter().zip(w.chunks_exact(n)) {
            let mut inner = Complex64::new(0.0, 0.0);
            for (c, x) in cols.iter().zip(wr) {
                inner += c * x;
            }
            acc += r * inner;
        }
        acc
    }

    /// Power pattern `|a_s^H w|^2 g_e` at sample `s`.
    pub(crate) fn power(&self, s: usize, w: &[Complex64]) -> f64 {
        self.response(s, w).norm_sqr() * self.gain[s]
    }

    pub(crate) fn powers_into(&self, w: &[Complex64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.len()).map(|s| self.power(s, w)));
    }
}

/// Appends `exp(-j pi (1+k) u)` for `k = 0..side`.
fn push_phasors(out: &mut Vec<Complex64>, side: usize, u: f64) {
    let step = Complex64::from_polar(1.0, -PI * u);
    let mut p = step;
    for _ in 0..side {
        out.push(p);
        p *= step;
    }
}
