//! THz air-to-ground propagation: LoS probability, path loss with molecular
//! absorption, channel vectors, SINR and Shannon rate.
//!
//! Path losses are returned as linear power gains (values below 1), with
//! absorption applied as `exp(-2 K d)` one way and `exp(-4 K d)` for the
//! radar round trip.

use core::f64::consts::PI;

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::beampattern::{element_gain, BeamWeights};
use crate::error::{Error, Result};
use crate::geometry::{direction_angles, steering_vector_toward, ArrayConfig, RotationAngles, Vec3, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Molecular absorption coefficient `K_fc`, 1/m.
    pub absorption_per_m: f64,
    /// NLoS amplitude factor `K_N`.
    pub nlos_loss: f64,
    pub radar_cross_section_m2: f64,
    pub noise_power_mw: f64,
    pub bandwidth_hz: f64,
    pub carrier_frequency_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            kappa1: 0.9,
            kappa2: 3.5,
            kappa3: 0.9,
            absorption_per_m: 0.0033,
            nlos_loss: 0.1,
            radar_cross_section_m2: 1.0,
            noise_power_mw: 1e-11,
            bandwidth_hz: 100e6,
            carrier_frequency_hz: 300e9,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.absorption_per_m >= 0.0) {
            return Err(Error::InvalidConfig("absorption coefficient must be non-negative"));
        }
        if !(self.nlos_loss > 0.0 && self.nlos_loss <= 1.0) {
            return Err(Error::InvalidConfig("NLoS loss factor must be in (0, 1]"));
        }
        if !(self.noise_power_mw > 0.0) {
            return Err(Error::InvalidConfig("noise power must be positive"));
        }
        if !(self.radar_cross_section_m2 > 0.0) {
            return Err(Error::InvalidConfig("radar cross section must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.carrier_frequency_hz > 0.0) {
            return Err(Error::InvalidConfig("bandwidth and carrier must be positive"));
        }
        if !(self.kappa1.is_finite() && self.kappa2.is_finite() && self.kappa3.is_finite()) {
            return Err(Error::InvalidConfig("kappa constants must be finite"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }
}

/// NLoS probability `-k1 exp(-k2 atan(dz / horizontal)) + k3`, clamped to [0, 1].
pub fn nlos_probability(params: &ChannelParams, uav_pos: Vec3, dest: Vec3) -> Result<f64> {
    let dz = uav_pos.z - dest.z;
    if !(dz > 0.0) {
        return Err(Error::DegenerateGeometry("UAV must be above the destination"));
    }
    let horizontal = (uav_pos - dest).horizontal_norm();
    // atan2 handles a zero horizontal distance as the pi/2 limit
    let elevation = dz.atan2(horizontal);
    let p = -params.kappa1 * (-params.kappa2 * elevation).exp() + params.kappa3;
    Ok(p.clamp(0.0, 1.0))
}

pub fn los_probability(params: &ChannelParams, uav_pos: Vec3, dest: Vec3) -> Result<f64> {
    Ok(1.0 - nlos_probability(params, uav_pos, dest)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLossMode {
    CommLos,
    CommNlos,
    RadarLos,
    /// Radar LoS scaled by `K_N^2`.
    RadarNlos,
    /// LoS/NLoS blend of the communication losses.
    ExpectedComm,
    /// LoS/NLoS blend of the radar losses.
    ExpectedRadar,
}

/// Linear power gain of the path for `mode`.
pub fn pathloss(params: &ChannelParams, mode: PathLossMode, uav_pos: Vec3, dest: Vec3) -> Result<f64> {
    let d = uav_pos.distance(dest);
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry("zero distance"));
    }
    let lambda = params.wavelength();
    let k = params.absorption_per_m;
    let comm_los = || lambda * lambda / ((4.0 * PI * d).powi(2) * (2.0 * k * d).exp());
    let radar_los = || {
        lambda * lambda * params.radar_cross_section_m2 / ((4.0 * PI).powi(3) * d.powi(4) * (4.0 * k * d).exp())
    };
    let kn2 = params.nlos_loss * params.nlos_loss;
    Ok(match mode {
        PathLossMode::CommLos => comm_los(),
        PathLossMode::CommNlos => comm_los() * kn2,
        PathLossMode::RadarLos => radar_los(),
        PathLossMode::RadarNlos => radar_los() * kn2,
        PathLossMode::ExpectedComm => {
            let pn = nlos_probability(params, uav_pos, dest)?;
            let los = comm_los();
            (1.0 - pn) * los + pn * los * kn2
        }
        PathLossMode::ExpectedRadar => {
            let pn = nlos_probability(params, uav_pos, dest)?;
            let los = radar_los();
            (1.0 - pn) * los + pn * los * kn2
        }
    })
}

/// `h = sqrt(PL g_e) exp(j 2 pi f_c d / c) a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    pub pathloss_linear: f64,
    /// Element gain toward the destination; `||h||^2 = M PL g_e`.
    pub element_gain: f64,
}

pub fn channel_vector(
    params: &ChannelParams,
    config: &ArrayConfig,
    uav_pos: Vec3,
    orientation: RotationAngles,
    dest: Vec3,
    mode: PathLossMode,
) -> Result<ChannelVector> {
    let pl = pathloss(params, mode, uav_pos, dest)?;
    let direction = direction_angles(uav_pos, dest)?;
    let g = element_gain(direction.to_body(orientation));
    let d = uav_pos.distance(dest);
    let phase = Complex64::from_polar((pl * g).sqrt(), 2.0 * PI * config.carrier_frequency_hz() * d / SPEED_OF_LIGHT);
    let a = steering_vector_toward(config, orientation, direction);
    Ok(ChannelVector {
        entries: a.0.into_iter().map(|x| x * phase).collect(),
        pathloss_linear: pl,
        element_gain: g,
    })
}

/// `|h_c^H w_c|^2 / (noise + |h_s^H w_s|^2)` on the transmit vectors.
pub fn sinr(
    h_comm: &ChannelVector,
    h_sense: &ChannelVector,
    w_comm: &BeamWeights,
    w_sense: &BeamWeights,
    noise_power_mw: f64,
) -> Result<f64> {
    let signal = received_power(h_comm, w_comm)?;
    let interference = received_power(h_sense, w_sense)?;
    Ok(signal / (noise_power_mw + interference))
}

/// `|h^H (sqrt(PPE) w)|^2`, mW.
pub fn received_power(h: &ChannelVector, w: &BeamWeights) -> Result<f64> {
    let v = crate::geometry::hermitian_dot(&h.entries, &w.entries)?;
    Ok(v.norm_sqr() * w.ppe_mw)
}

/// Shannon rate `B log2(1 + sinr)`, bit/s.
pub fn achievable_rate(sinr_linear: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr_linear.max(0.0)).log2()
}
