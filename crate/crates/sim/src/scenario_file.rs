//! JSON scenario file. Units are SI unless the key says otherwise.

use std::fs;
use std::path::Path;

use isac_core::channel::ChannelParams;
use isac_core::geometry::{ArrayConfig, Vec3};
use isac_core::scenario::{Scenario, SynthesisSettings};
use isac_core::{from_db, to_db};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub absorption_per_m: f64,
    /// Amplitude factor `K_N` applied on NLoS paths.
    pub nlos_loss: f64,
    pub radar_cross_section_m2: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisFile {
    pub k1: f64,
    pub k2: f64,
    pub eta: f64,
    pub counter_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub gbs_m: Vec<[f64; 3]>,
    pub target_m: [f64; 3],
    pub start_m: [f64; 3],
    pub end_m: [f64; 3],
    pub uav_altitude_m: f64,
    pub v_max_mps: f64,
    pub slot_s: f64,
    pub num_elements: usize,
    pub channel: ChannelFile,
    pub p_max_mw: f64,
    pub gamma_sinr_db: f64,
    pub eirp_max_dbm: f64,
    pub sensing_eirp_dbm: f64,
    pub sll_min_comm_db: f64,
    pub sll_min_sensing_db: f64,
    pub mount_roll_deg: f64,
    pub max_slots: usize,
    pub training_trajectories: usize,
    pub synthesis: SynthesisFile,
}

fn v3(v: Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn p3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario, training_trajectories: usize) -> Self {
        Self {
            format_version: SCENARIO_FORMAT_VERSION,
            area_width_m: s.area_width_m,
            area_height_m: s.area_height_m,
            gbs_m: s.gbs.iter().map(|g| v3(*g)).collect(),
            target_m: v3(s.target),
            start_m: v3(s.start),
            end_m: v3(s.end),
            uav_altitude_m: s.uav_altitude_m,
            v_max_mps: s.v_max_mps,
            slot_s: s.slot_s,
            num_elements: s.array.num_elements(),
            channel: ChannelFile {
                kappa1: s.channel.kappa1,
                kappa2: s.channel.kappa2,
                kappa3: s.channel.kappa3,
                absorption_per_m: s.channel.absorption_per_m,
                nlos_loss: s.channel.nlos_loss,
                radar_cross_section_m2: s.channel.radar_cross_section_m2,
                noise_power_dbm: to_db(s.channel.noise_power_mw),
                bandwidth_hz: s.channel.bandwidth_hz,
                carrier_frequency_hz: s.channel.carrier_frequency_hz,
            },
            p_max_mw: s.p_max_mw,
            gamma_sinr_db: s.gamma_sinr_db,
            eirp_max_dbm: s.eirp_max_dbm,
            sensing_eirp_dbm: s.sensing_eirp_dbm,
            sll_min_comm_db: s.sll_min_comm_db,
            sll_min_sensing_db: s.sll_min_sensing_db,
            mount_roll_deg: s.mount_roll_rad.to_degrees(),
            max_slots: s.max_slots,
            training_trajectories,
            synthesis: SynthesisFile {
                k1: s.synthesis.k1,
                k2: s.synthesis.k2,
                eta: s.synthesis.eta,
                counter_max: s.synthesis.counter_max,
            },
        }
    }

    /// Default scenario with 100 training trajectories.
    pub fn paper_default() -> Self {
        Self::from_scenario(&Scenario::default(), 100)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        if self.format_version != SCENARIO_FORMAT_VERSION {
            return Err(SimError::Format(format!(
                "unsupported scenario format_version {}",
                self.format_version
            )));
        }
        let c = &self.channel;
        let s = Scenario {
            area_width_m: self.area_width_m,
            area_height_m: self.area_height_m,
            gbs: self.gbs_m.iter().map(|g| p3(*g)).collect(),
            target: p3(self.target_m),
            start: p3(self.start_m),
            end: p3(self.end_m),
            uav_altitude_m: self.uav_altitude_m,
            v_max_mps: self.v_max_mps,
            slot_s: self.slot_s,
            channel: ChannelParams {
                kappa1: c.kappa1,
                kappa2: c.kappa2,
                kappa3: c.kappa3,
                absorption_per_m: c.absorption_per_m,
                nlos_loss: c.nlos_loss,
                radar_cross_section_m2: c.radar_cross_section_m2,
                noise_power_mw: from_db(c.noise_power_dbm),
                bandwidth_hz: c.bandwidth_hz,
                carrier_frequency_hz: c.carrier_frequency_hz,
            },
            array: ArrayConfig::new(self.num_elements, c.carrier_frequency_hz)?,
            p_max_mw: self.p_max_mw,
            gamma_sinr_db: self.gamma_sinr_db,
            eirp_max_dbm: self.eirp_max_dbm,
            sensing_eirp_dbm: self.sensing_eirp_dbm,
            sll_min_comm_db: self.sll_min_comm_db,
            sll_min_sensing_db: self.sll_min_sensing_db,
            mount_roll_rad: self.mount_roll_deg.to_radians(),
            max_slots: self.max_slots,
            synthesis: SynthesisSettings {
                k1: self.synthesis.k1,
                k2: self.synthesis.k2,
                eta: self.synthesis.eta,
                counter_max: self.synthesis.counter_max,
            },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Loads a scenario file and returns the scenario with its hash.
pub fn load_scenario(path: &Path) -> Result<(Scenario, String)> {
    let file = ScenarioFile::load(path)?;
    let hash = file.hash()?;
    Ok((file.to_scenario()?, hash))
}
