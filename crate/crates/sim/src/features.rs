//! Network inputs and weight encodings.
//!
//! Angles are expressed in the array body frame so the networks see the
//! UAV attitude. Weights are encoded as interleaved `(re, im)` pairs after
//! removing the phase of the virtual array centre, which leaves the pattern
//! unchanged but keeps the targets small and smooth.

use isac_core::beampattern::BeamWeights;
use isac_core::geometry::{rotate_inverse, rotation_matrix, ArrayConfig, DirectionAngles, RotationAngles};
use isac_core::scenario::{Scenario, TrajectoryPoint};
use isac_core::Complex64;

use crate::error::{Result, SimError};

pub const BEAM_FEATURES: usize = 7;
pub const ASSOCIATION_FEATURES: usize = 4;

/// `(phi, theta)` of a world direction in the body frame, radians.
pub fn body_angles(direction: DirectionAngles, orientation: RotationAngles) -> (f64, f64) {
    let b = direction.to_body(orientation);
    (b.phi, b.theta)
}

/// `(phi_gbs, theta_gbs, phi_n1, theta_n1, phi_n2, theta_n2, eirp_dbm)`.
/// Missing nulls are zero.
pub fn comm_features(scenario: &Scenario, point: &TrajectoryPoint, gbs: usize, eirp_dbm: f64) -> Result<Vec<f64>> {
    let mut f = Vec::with_capacity(BEAM_FEATURES);
    let (p, t) = body_angles(scenario.gbs_direction(point, gbs)?, point.orientation);
    f.extend([p, t]);
    let nulls = scenario.null_gbs(point, gbs)?;
    for j in 0..2 {
        match nulls.get(j) {
            Some(&k) => {
                let (p, t) = body_angles(scenario.gbs_direction(point, k)?, point.orientation);
                f.extend([p, t]);
            }
            None => f.extend([0.0, 0.0]),
        }
    }
    f.push(eirp_dbm);
    Ok(f)
}

/// `(phi_target, theta_target, eirp_dbm, 0, 0, 0, 0)`.
pub fn sensing_features(scenario: &Scenario, point: &TrajectoryPoint, eirp_dbm: f64) -> Result<Vec<f64>> {
    let (p, t) = body_angles(scenario.target_direction(point)?, point.orientation);
    Ok(vec![p, t, eirp_dbm, 0.0, 0.0, 0.0, 0.0])
}

/// `(x / width, y / height, phi_target / pi, theta_target / pi)`, target angles in the body frame.
pub fn association_features(scenario: &Scenario, point: &TrajectoryPoint) -> Result<Vec<f64>> {
    let (p, t) = body_angles(scenario.target_direction(point)?, point.orientation);
    Ok(vec![
        point.pos.x / scenario.area_width_m,
        point.pos.y / scenario.area_height_m,
        p / std::f64::consts::PI,
        t / std::f64::consts::PI,
    ])
}

/// Association target `k / (K - 1)`, or 0 for a single GBS.
pub fn encode_gbs(k: usize, num_gbs: usize) -> f64 {
    if num_gbs <= 1 {
        0.0
    } else {
        k as f64 / (num_gbs - 1) as f64
    }
}

/// Nearest index for a network output, clamped to `[0, K - 1]`.
pub fn decode_gbs(y: f64, num_gbs: usize) -> usize {
    if num_gbs <= 1 || !y.is_finite() {
        return 0;
    }
    let k = (y * (num_gbs - 1) as f64).round();
    k.clamp(0.0, (num_gbs - 1) as f64) as usize
}

/// Interleaved `(re, im)` weights with the virtual-centre phase toward
/// `pointing` removed.
pub fn encode_weights(
    weights: &BeamWeights,
    config: &ArrayConfig,
    orientation: RotationAngles,
    pointing: DirectionAngles,
) -> Vec<f64> {
    let u = rotate_inverse(&rotation_matrix(orientation), pointing.unit_vector());
    let centre = 0.5 * (config.side() as f64 + 1.0);
    let gauge = Complex64::from_polar(1.0, -std::f64::consts::PI * centre * (u.x + u.z));
    weights
        .entries
        .iter()
        .flat_map(|w| {
            let v = w * gauge;
            [v.re, v.im]
        })
        .collect()
}

pub fn decode_weights(values: &[f64]) -> Result<Vec<Complex64>> {
    if !values.len().is_multiple_of(2) {
        return Err(SimError::Format(format!("odd weight encoding length {}", values.len())));
    }
    Ok(values.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use isac_core::beampattern::array_gain;
    use isac_core::geometry::{steering_vector_toward, Vec3};

    #[test]
    fn gbs_codec_round_trips() {
        for k in 0..5 {
            assert_eq!(decode_gbs(encode_gbs(k, 5), 5), k);
        }
        assert_eq!(decode_gbs(7.0, 5), 4);
        assert_eq!(decode_gbs(-3.0, 5), 0);
        assert_eq!(decode_gbs(0.9, 1), 0);
        assert_eq!(decode_gbs(f64::NAN, 5), 0);
    }

    #[test]
    fn weight_encoding_keeps_the_pattern() {
        let s = Scenario::default();
        let rot = s.array_orientation(RotationAngles::new(0.3, 0.0, 0.0));
        let p = DirectionAngles::from_degrees(30.0, 40.0);
        let w = BeamWeights::new(steering_vector_toward(&s.array, rot, p).0, 2.0).unwrap();
        let enc = encode_weights(&w, &s.array, rot, p);
        assert_eq!(enc.len(), 200);
        let back = BeamWeights::new(decode_weights(&enc).unwrap(), 2.0).unwrap();
        for d in [p, DirectionAngles::from_degrees(50.0, -20.0)] {
            let a = array_gain(&w, &s.array, rot, d).unwrap();
            let b = array_gain(&back, &s.array, rot, d).unwrap();
            assert!((a - b).abs() <= 1e-9 * a);
        }
        assert!(decode_weights(&[1.0]).is_err());
    }

    #[test]
    fn feature_shapes() {
        let s = Scenario::default();
        let pt = TrajectoryPoint {
            slot: 0,
            pos: Vec3::new(600.0, 600.0, 100.0),
            orientation: s.array_orientation(RotationAngles::IDENTITY),
        };
        let c = comm_features(&s, &pt, 2, 20.0).unwrap();
        assert_eq!(c.len(), BEAM_FEATURES);
        assert_eq!(c[6], 20.0);
        let t = sensing_features(&s, &pt, 20.0).unwrap();
        assert_eq!(&t[2..], &[20.0, 0.0, 0.0, 0.0, 0.0]);
        let a = association_features(&s, &pt).unwrap();
        assert_eq!(a.len(), ASSOCIATION_FEATURES);
        assert_eq!(a[0], 0.4);
    }
}
