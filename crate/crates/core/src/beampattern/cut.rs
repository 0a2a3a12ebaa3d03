//! Principal-plane cuts, sidelobe extraction and full-sphere pattern grids.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{check_len, BeamWeights, DirectionTable};
use crate::error::{Error, Result};
use crate::geometry::{rotate_inverse, rotation_matrix, ArrayConfig, DirectionAngles, RotationAngles, Vec3};

/// Angular step of a principal cut, degrees.
pub const CUT_STEP_DEG: f64 = 0.05;

const FLOOR_DB: f64 = -300.0;

/// Cuts only cover the array's front half-space (body `y <= 0` in the
/// direction-vector convention, where the element gain is at least 1/4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutPlane {
    /// `phi` swept at the pointing `theta`.
    Azimuth,
    /// Signed polar angle swept in the pointing `phi` plane.
    Elevation,
}

/// Gain samples `(angle rad, gain dB)` normalized so the peak is 0 dB.
///
/// Angles increase monotonically. `closed` is true when the cut is a full
/// turn lying entirely in the front half-space, so its ends are adjacent.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCut {
    pub plane: CutPlane,
    pub samples: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Result of sidelobe extraction. `sll_db` is `+inf` when no sidelobe exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SllReading {
    pub sll_db: f64,
    pub sidelobe_found: bool,
}

impl SllReading {
    pub(crate) const NONE: SllReading = SllReading {
        sll_db: f64::INFINITY,
        sidelobe_found: false,
    };
}

fn cut_len() -> usize {
    (360.0 / CUT_STEP_DEG).round() as usize
}

/// Full-turn sample angles and world-frame unit vectors through `pointing`.
fn full_turn(plane: CutPlane, pointing: DirectionAngles) -> (Vec<f64>, Vec<Vec3>) {
    let n = cut_len();
    let step = CUT_STEP_DEG.to_radians();
    let mut angles = Vec::with_capacity(n);
    let mut dirs = Vec::with_capacity(n);
    match plane {
        CutPlane::Azimuth => {
            let (st, ct) = pointing.theta.sin_cos();
            for i in 0..n {
                let phi = pointing.phi - PI + i as f64 * step;
                let (sp, cp) = phi.sin_cos();
                angles.push(phi);
                dirs.push(Vec3::new(cp * st, sp * st, ct));
            }
        }
        CutPlane::Elevation => {
            let (sp, cp) = pointing.phi.sin_cos();
            for i in 0..n {
                let t = pointing.theta - PI + i as f64 * step;
                let (st, ct) = t.sin_cos();
                angles.push(t);
                dirs.push(Vec3::new(cp * st, sp * st, ct));
            }
        }
    }
    (angles, dirs)
}

pub(crate) struct CutDirections {
    pub(crate) angles: Vec<f64>,
    pub(crate) dirs: Vec<Vec3>,
    pub(crate) closed: bool,
}

/// The front half-space part of a cut, as one contiguous arc.
pub(crate) fn cut_directions(
    plane: CutPlane,
    pointing: DirectionAngles,
    orientation: RotationAngles,
) -> CutDirections {
    let (angles, dirs) = full_turn(plane, pointing);
    let r = rotation_matrix(orientation);
    let front: Vec<bool> = dirs.iter().map(|d| rotate_inverse(&r, *d).y <= 0.0).collect();
    let n = dirs.len();
    let Some(start) = (0..n).find(|&i| front[i] && !front[(i + n - 1) % n]) else {
        let closed = front[0];
        let (angles, dirs) = if closed { (angles, dirs) } else { (Vec::new(), Vec::new()) };
        return CutDirections { angles, dirs, closed };
    };
    let mut out = CutDirections {
        angles: Vec::new(),
        dirs: Vec::new(),
        closed: false,
    };
    let mut i = start;
    while front[i] {
        let wrap = if i < start { 2.0 * PI } else { 0.0 };
        out.angles.push(angles[i] + wrap);
        out.dirs.push(dirs[i]);
        i = (i + 1) % n;
        if i == start {
            break;
        }
    }
    out
}

/// Samples one principal cut of `weights` through `pointing`.
pub fn pattern_cut(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    plane: CutPlane,
    pointing: DirectionAngles,
) -> Result<PatternCut> {
    check_len(config, weights.len())?;
    let cut = cut_directions(plane, pointing, orientation);
    let table = DirectionTable::from_world(config, orientation, cut.dirs.into_iter());
    let mut powers = Vec::new();
    table.powers_into(&weights.entries, &mut powers);
    let db = normalize_db(&powers)?;
    Ok(PatternCut {
        plane,
        samples: cut.angles.into_iter().zip(db).collect(),
        closed: cut.closed,
    })
}

fn normalize_db(powers: &[f64]) -> Result<Vec<f64>> {
    let peak = powers.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument("weights radiate no power"));
    }
    Ok(powers
        .iter()
        .map(|p| (10.0 * (p / peak).log10()).max(FLOOR_DB))
        .collect())
}

/// Sidelobe level of a cut: peak minus the highest lobe outside the main lobe.
///
/// The main lobe runs from the global peak down to the first local minimum
/// on each side (or the end of an open cut).
pub fn extract_sll(cut: &PatternCut) -> SllReading {
    let db: Vec<f64> = cut.samples.iter().map(|s| s.1).collect();
    match split_lobes(&db, cut.closed) {
        Some((peak, side)) => SllReading {
            sll_db: peak - side,
            sidelobe_found: true,
        },
        None => SllReading::NONE,
    }
}

/// Same as [`extract_sll`] on raw linear powers.
pub(crate) fn sll_from_powers(powers: &[f64], closed: bool) -> SllReading {
    match split_lobes(powers, closed) {
        Some((peak, side)) if side > 0.0 => SllReading {
            sll_db: 10.0 * (peak / side).log10(),
            sidelobe_found: true,
        },
        Some(_) => SllReading {
            sll_db: -FLOOR_DB,
            sidelobe_found: true,
        },
        None => SllReading::NONE,
    }
}

/// `(peak, highest sidelobe)`, or `None` when the main lobe covers the
/// whole cut.
fn split_lobes(v: &[f64], closed: bool) -> Option<(f64, f64)> {
    let n = v.len();
    if n < 3 {
        return None;
    }
    let mut peak = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[peak] {
            peak = i;
        }
    }
    let next = |i: usize| match (i + 1 == n, closed) {
        (false, _) => Some(i + 1),
        (true, true) => Some(0),
        (true, false) => None,
    };
    let prev = |i: usize| match (i == 0, closed) {
        (false, _) => Some(i - 1),
        (true, true) => Some(n - 1),
        (true, false) => None,
    };

    let mut right = peak;
    let mut right_steps = 0;
    while right_steps < n {
        match next(right) {
            Some(j) if v[j] <= v[right] => {
                right = j;
                right_steps += 1;
            }
            _ => break,
        }
    }
    let mut left = peak;
    let mut left_steps = 0;
    while left_steps < n {
        match prev(left) {
            Some(j) if v[j] <= v[left] => {
                left = j;
                left_steps += 1;
            }
            _ => break,
        }
    }
    if right_steps + left_steps + 1 >= n {
        return None;
    }
    let side = if closed {
        let mut side = f64::NEG_INFINITY;
        let mut i = (right + 1) % n;
        while i != left {
            side = side.max(v[i]);
            i = (i + 1) % n;
        }
        side
    } else {
        v[..left]
            .iter()
            .chain(&v[right + 1..])
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let floor = if closed { v[left].min(v[right]) } else { f64::NEG_INFINITY };
    if side > floor {
        Some((v[peak], side))
    } else {
        None
    }
}

/// Both principal cuts through one pointing direction, tables built once.
pub(crate) struct CutPair {
    pub(crate) az: DirectionTable,
    pub(crate) el: DirectionTable,
    pub(crate) az_closed: bool,
    pub(crate) el_closed: bool,
}

impl CutPair {
    pub(crate) fn new(config: &ArrayConfig, orientation: RotationAngles, pointing: DirectionAngles) -> Self {
        let az = cut_directions(CutPlane::Azimuth, pointing, orientation);
        let el = cut_directions(CutPlane::Elevation, pointing, orientation);
        Self {
            az: DirectionTable::from_world(config, orientation, az.dirs.into_iter()),
            el: DirectionTable::from_world(config, orientation, el.dirs.into_iter()),
            az_closed: az.closed,
            el_closed: el.closed,
        }
    }
}

/// One point of a full-sphere pattern grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub az_deg: f64,
    pub el_deg: f64,
    pub gain_db: f64,
}

/// Pattern over `phi in [-180, 180)` and `theta in [0, 180]` with step
/// `step_deg`, normalized to a 0 dB peak.
pub fn pattern_grid(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    step_deg: f64,
) -> Result<Vec<GridSample>> {
    check_len(config, weights.len())?;
    if !(step_deg > 0.0) || step_deg > 90.0 {
        return Err(Error::InvalidArgument("grid step must be in (0, 90] degrees"));
    }
    let n_az = (360.0 / step_deg).round() as usize;
    let n_el = (180.0 / step_deg).round() as usize + 1;
    let mut coords = Vec::with_capacity(n_az * n_el);
    for j in 0..n_el {
        let el = (j as f64 * step_deg).min(180.0);
        for i in 0..n_az {
            coords.push((-180.0 + i as f64 * step_deg, el));
        }
    }
    let table = DirectionTable::from_world(
        config,
        orientation,
        coords
            .iter()
            .map(|(az, el)| DirectionAngles::from_degrees(*el, *az).unit_vector()),
    );
    let mut powers = Vec::new();
    table.powers_into(&weights.entries, &mut powers);
    let db = normalize_db(&powers)?;
    Ok(coords
        .into_iter()
        .zip(db)
        .map(|((az_deg, el_deg), gain_db)| GridSample {
            az_deg,
            el_deg,
            gain_db,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beampattern::chebyshev_taper;
    use crate::geometry::steering_vector_toward;
    use num_complex::Complex64;
    use alloc::vec;

    fn broadside() -> DirectionAngles {
        DirectionAngles::new(PI / 2.0, -PI / 2.0)
    }

    /// Square array with amplitudes only on the first row, i.e. a linear array along z.
    fn linear_weights(amps: &[f64]) -> (ArrayConfig, BeamWeights) {
        let side = amps.len();
        let cfg = ArrayConfig::new(side * side, 300e9).unwrap();
        let mut w = vec![Complex64::new(0.0, 0.0); side * side];
        for (c, a) in amps.iter().enumerate() {
            w[c] = Complex64::new(*a, 0.0);
        }
        (cfg, BeamWeights::new(w, 1.0).unwrap())
    }

    /// Independent scan: `|sum a_n exp(j pi n cos(t))|^2` over the front half
    /// circle, optionally times the cardioid, peak minus the highest interior
    /// local maximum.
    fn brute_sll(amps: &[f64], cardioid: bool) -> f64 {
        let n = 7201;
        let p: Vec<f64> = (0..n)
            .map(|i| {
                let t = PI * i as f64 / (n - 1) as f64;
                let (mut re, mut im) = (0.0, 0.0);
                for (k, a) in amps.iter().enumerate() {
                    re += a * (PI * k as f64 * t.cos()).cos();
                    im += a * (PI * k as f64 * t.cos()).sin();
                }
                let g = if cardioid { ((1.0 + t.sin()) / 2.0).powi(2) } else { 1.0 };
                (re * re + im * im) * g
            })
            .collect();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let mut side = 0.0f64;
        for i in 1..n - 1 {
            if p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] < peak * 0.999 {
                side = side.max(p[i]);
            }
        }
        10.0 * (peak / side).log10()
    }

    #[test]
    fn uniform_eight_element_sidelobe() {
        let amps = [1.0; 8];
        assert!((brute_sll(&amps, false) - 12.8).abs() < 0.1);
        let reference = brute_sll(&amps, true);
        let (cfg, w) = linear_weights(&amps);
        let cut = pattern_cut(&w, &cfg, RotationAngles::IDENTITY, CutPlane::Elevation, broadside()).unwrap();
        let sll = extract_sll(&cut);
        assert!(sll.sidelobe_found);
        assert!((sll.sll_db - reference).abs() < 0.02, "{} vs {reference}", sll.sll_db);
    }

    #[test]
    fn chebyshev_thirty_db() {
        let amps = chebyshev_taper(8, 30.0).unwrap();
        assert!((brute_sll(&amps, false) - 30.0).abs() < 0.5);
        let reference = brute_sll(&amps, true);
        let (cfg, w) = linear_weights(&amps);
        let cut = pattern_cut(&w, &cfg, RotationAngles::IDENTITY, CutPlane::Elevation, broadside()).unwrap();
        let sll = extract_sll(&cut);
        assert!((sll.sll_db - 30.0).abs() < 0.5, "{}", sll.sll_db);
        assert!((sll.sll_db - reference).abs() < 0.02, "{} vs {reference}", sll.sll_db);
    }

    #[test]
    fn single_element_has_no_sidelobe() {
        let cfg = ArrayConfig::new(1, 300e9).unwrap();
        let w = BeamWeights::new(vec![Complex64::new(1.0, 0.0)], 1.0).unwrap();
        for plane in [CutPlane::Azimuth, CutPlane::Elevation] {
            let cut = pattern_cut(&w, &cfg, RotationAngles::IDENTITY, plane, broadside()).unwrap();
            let sll = extract_sll(&cut);
            assert!(!sll.sidelobe_found);
            assert_eq!(sll.sll_db, f64::INFINITY);
        }
    }

    #[test]
    fn cut_peak_at_pointing_and_normalized() {
        let cfg = ArrayConfig::new(100, 300e9).unwrap();
        // At broadside the cardioid is flat, so the peak lands on the grid
        // point nearest the pointing. Off broadside its slope tilts the peak
        // by a fraction of a degree.
        let cases = [
            (RotationAngles::new(0.4, 0.0, 0.0), DirectionAngles::new(PI / 2.0, -PI / 2.0 + 0.4), CUT_STEP_DEG),
            (RotationAngles::new(0.4, -0.1, 0.0), DirectionAngles::from_degrees(70.0, -40.0), 0.5),
        ];
        for (rot, pointing, tol_deg) in cases {
            let a = steering_vector_toward(&cfg, rot, pointing);
            let w = BeamWeights::new(a.0, 1.0).unwrap();
            for plane in [CutPlane::Azimuth, CutPlane::Elevation] {
                let cut = pattern_cut(&w, &cfg, rot, plane, pointing).unwrap();
                assert!(cut.samples.len() >= 3600 && cut.samples.len() <= 7200);
                for w in cut.samples.windows(2) {
                    assert!(w[1].0 > w[0].0);
                }
                let (mut best, mut best_angle) = (f64::MIN, 0.0);
                for (ang, g) in &cut.samples {
                    if *g > best {
                        best = *g;
                        best_angle = *ang;
                    }
                }
                assert_eq!(best, 0.0);
                let want = match plane {
                    CutPlane::Azimuth => pointing.phi,
                    CutPlane::Elevation => pointing.theta,
                };
                let err = crate::geometry::wrap_angle(best_angle - want).abs().to_degrees();
                assert!(err <= tol_deg + 1e-9, "{plane:?} off by {err} deg");
            }
        }
    }

    #[test]
    fn split_lobes_basic_shapes() {
        assert_eq!(split_lobes(&[0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 0.0], true), Some((3.0, 2.0)));
        assert_eq!(split_lobes(&[0.0, 1.0, 2.0, 1.0], true), None);
        assert_eq!(split_lobes(&[1.0, 1.0, 1.0, 1.0], true), None);
        // open: the far end keeps rising but is still outside the main lobe
        assert_eq!(split_lobes(&[3.0, 1.0, 0.5, 2.0], false), Some((3.0, 2.0)));
        assert_eq!(split_lobes(&[2.0, 1.0, 0.5, 3.0], true), None);
        assert_eq!(split_lobes(&[0.0, 1.0, 2.0, 3.0], false), None);
    }

    #[test]
    fn grid_covers_sphere() {
        let cfg = ArrayConfig::new(4, 300e9).unwrap();
        let w = BeamWeights::new(vec![Complex64::new(1.0, 0.0); 4], 1.0).unwrap();
        let g = pattern_grid(&w, &cfg, RotationAngles::IDENTITY, 10.0).unwrap();
        assert_eq!(g.len(), 36 * 19);
        let peak = g.iter().map(|s| s.gain_db).fold(f64::MIN, f64::max);
        assert_eq!(peak, 0.0);
        assert!(pattern_grid(&w, &cfg, RotationAngles::IDENTITY, 0.0).is_err());
    }
}
