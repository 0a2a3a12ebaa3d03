//! Spatial math: rotations, planar-array element placement, direction angles,
//! inter-element delays and steering vectors.
//!
//! Direction angles follow the convention used throughout the crate: for a
//! transmitter at `q` and a destination at `u`, `theta = acos((q_z - u_z)/d)`
//! and `phi = atan2(q_y - u_y, q_x - u_x)`. The matching unit vector
//! `(cos phi sin theta, sin phi sin theta, cos theta)` therefore equals
//! `(q - u)/d`, i.e. it points from the destination back to the array.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Yaw/pitch/roll style orientation of the array, radians.
///
/// `alpha` turns about z, `beta` about y and `gamma` about x; see
/// [`rotation_matrix`] for the exact composition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RotationAngles {
    pub const IDENTITY: RotationAngles = RotationAngles {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    /// Builds the angles, wrapping each into `(-pi, pi]`.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha: wrap_angle(alpha),
            beta: wrap_angle(beta),
            gamma: wrap_angle(gamma),
        }
    }
}

/// Array center plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: RotationAngles,
}

impl Pose {
    pub fn new(position: Vec3, orientation: RotationAngles) -> Self {
        Self {
            position,
            orientation,
        }
    }
}

/// Row-major 3x3 matrix.
pub type Matrix3 = [[f64; 3]; 3];

/// Rotation matrix with the entry layout
///
/// ```text
/// | ca cb   ca sb sg - sa cg   ca sb cg + sa sg |
/// | sa cb   sa sb sg + ca cg   sa sb cg - ca sg |
/// | -sb     cb sg              cb cg            |
/// ```
pub fn rotation_matrix(angles: RotationAngles) -> Matrix3 {
    let (sa, ca) = angles.alpha.sin_cos();
    let (sb, cb) = angles.beta.sin_cos();
    let (sg, cg) = angles.gamma.sin_cos();
    [
        [ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg],
        [sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg],
        [-sb, cb * sg, cb * cg],
    ]
}

pub fn rotate(m: &Matrix3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// Applies the transpose (inverse) of a rotation: world frame to body frame.
pub fn rotate_inverse(m: &Matrix3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
        m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
        m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
    )
}

/// Square planar array on a half-wavelength grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    num_elements: usize,
    side: usize,
    carrier_frequency_hz: f64,
}

impl ArrayConfig {
    pub fn new(num_elements: usize, carrier_frequency_hz: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidConfig("array needs at least one element"));
        }
        let side = integer_sqrt(num_elements);
        if side * side != num_elements {
            return Err(Error::InvalidConfig("element count must be a perfect square"));
        }
        if !(carrier_frequency_hz.is_finite() && carrier_frequency_hz > 0.0) {
            return Err(Error::InvalidConfig("carrier frequency must be positive"));
        }
        Ok(Self {
            num_elements,
            side,
            carrier_frequency_hz,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    /// Elements per row (and per column).
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn carrier_frequency_hz(&self) -> f64 {
        self.carrier_frequency_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn spacing(&self) -> f64 {
        self.wavelength() / 2.0
    }

    /// `(row, col)` grid indices of element `m`; rows run along x, columns along z.
    pub fn grid_index(&self, m: usize) -> (usize, usize) {
        (m / self.side, m % self.side)
    }
}

fn integer_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Unrotated element coordinates relative to the array center.
///
/// Element `m` sits at `((1 + m / side) d, 0, (1 + m % side) d)` with
/// `d = lambda / 2`, so the array lies in the xz-plane with broadside along +y.
pub fn element_offsets(config: &ArrayConfig) -> Vec<Vec3> {
    let d = config.spacing();
    (0..config.num_elements())
        .map(|m| {
            let (row, col) = config.grid_index(m);
            Vec3::new((1 + row) as f64 * d, 0.0, (1 + col) as f64 * d)
        })
        .collect()
}

/// Absolute element positions for an array centered at `center` and rotated by `angles`.
pub fn element_positions(config: &ArrayConfig, center: Vec3, angles: RotationAngles) -> Vec<Vec3> {
    let r = rotation_matrix(angles);
    element_offsets(config)
        .into_iter()
        .map(|p| center + rotate(&r, p))
        .collect()
}

/// Polar/azimuth pair describing a direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionAngles {
    /// Polar angle from +z, in `[0, pi]`.
    pub theta: f64,
    /// Azimuth, in `(-pi, pi]`.
    pub phi: f64,
}

impl DirectionAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// `(cos phi sin theta, sin phi sin theta, cos theta)`.
    pub fn unit_vector(&self) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vec3::new(cp * st, sp * st, ct)
    }

    /// Inverse of [`DirectionAngles::unit_vector`]; the input need not be normalized.
    /// Vertical vectors get `phi = 0`.
    pub fn from_vector(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateGeometry("zero-length direction"));
        }
        let cos_theta = (v.z / n).clamp(-1.0, 1.0);
        let horizontal = v.horizontal_norm();
        let phi = if horizontal <= 1e-12 * n {
            0.0
        } else {
            wrap_angle(v.y.atan2(v.x))
        };
        Ok(Self {
            theta: cos_theta.acos(),
            phi,
        })
    }

    /// Great-circle angle between two directions, radians.
    pub fn separation(&self, other: &DirectionAngles) -> f64 {
        let c = self.unit_vector().dot(other.unit_vector()).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Re-expresses a world-frame direction in the array body frame.
    pub fn to_body(&self, orientation: RotationAngles) -> DirectionAngles {
        let r = rotation_matrix(orientation);
        let body = rotate_inverse(&r, self.unit_vector());
        // Unit vector in, unit vector out: cannot be degenerate.
        DirectionAngles::from_vector(body).unwrap_or(*self)
    }
}

/// Direction angles of the line from `to_pos` back to `from_pos`.
pub fn direction_angles(from_pos: Vec3, to_pos: Vec3) -> Result<DirectionAngles> {
    let diff = from_pos - to_pos;
    if diff.norm() == 0.0 {
        return Err(Error::DegenerateGeometry("coincident points"));
    }
    DirectionAngles::from_vector(diff)
}

/// Inter-element delays `tau_m = (R p_m) . i(theta, phi) / c`, seconds.
pub fn element_delays(
    config: &ArrayConfig,
    angles: RotationAngles,
    direction: DirectionAngles,
) -> Vec<f64> {
    let r = rotation_matrix(angles);
    let i_hat = direction.unit_vector();
    element_offsets(config)
        .into_iter()
        .map(|p| rotate(&r, p).dot(i_hat) / SPEED_OF_LIGHT)
        .collect()
}

/// Unit-modulus per-element phases `exp(j 2 pi f_c tau_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    /// `a^H w`.
    pub fn inner(&self, w: &[Complex64]) -> Result<Complex64> {
        hermitian_dot(&self.0, w)
    }
}

/// `x^H y`.
pub fn hermitian_dot(x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(x.iter()
        .zip(y)
        .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b))
}

/// Steering vector for a direction given directly as angles.
pub fn steering_vector_toward(
    config: &ArrayConfig,
    angles: RotationAngles,
    direction: DirectionAngles,
) -> SteeringVector {
    let two_pi_f = 2.0 * PI * config.carrier_frequency_hz();
    SteeringVector(
        element_delays(config, angles, direction)
            .into_iter()
            .map(|tau| Complex64::from_polar(1.0, two_pi_f * tau))
            .collect(),
    )
}

pub fn steering_vector(
    config: &ArrayConfig,
    uav_pos: Vec3,
    angles: RotationAngles,
    dest: Vec3,
) -> Result<SteeringVector> {
    let direction = direction_angles(uav_pos, dest)?;
    Ok(steering_vector_toward(config, angles, direction))
}

/// Time of arrival from element `m` to `dest`: bulk delay plus the element delay.
pub fn toa(
    config: &ArrayConfig,
    uav_pos: Vec3,
    angles: RotationAngles,
    dest: Vec3,
    element: usize,
) -> Result<f64> {
    if element >= config.num_elements() {
        return Err(Error::InvalidArgument("element index out of range"));
    }
    let direction = direction_angles(uav_pos, dest)?;
    let tau_m = element_delays(config, angles, direction)[element];
    Ok(tau_m + dest.distance(uav_pos) / SPEED_OF_LIGHT)
}
