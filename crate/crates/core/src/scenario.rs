//! World setup, random trajectories and ground base station association.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::f64::consts::FRAC_PI_4;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beampattern::{
    array_gain, synthesize, BeamWeights, SynthesisRequest, SynthesisResult, DEFAULT_COUNTER_MAX, DEFAULT_ETA,
    NULL_CONFLICT_DEG,
};
use crate::channel::{achievable_rate, channel_vector, received_power, ChannelParams, ChannelVector, PathLossMode};
use crate::error::{Error, Result};
use crate::geometry::{
    direction_angles, steering_vector_toward, wrap_angle, ArrayConfig, DirectionAngles, Pose, RotationAngles, Vec3,
};
use crate::{from_db, to_db};

/// Optimizer knobs shared by every beam the scenario asks for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisSettings {
    pub k1: f64,
    pub k2: f64,
    pub eta: f64,
    pub counter_max: usize,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 1.0,
            eta: DEFAULT_ETA,
            counter_max: DEFAULT_COUNTER_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub gbs: Vec<Vec3>,
    pub target: Vec3,
    pub start: Vec3,
    pub end: Vec3,
    pub uav_altitude_m: f64,
    pub v_max_mps: f64,
    pub slot_s: f64,
    pub channel: ChannelParams,
    pub array: ArrayConfig,
    pub p_max_mw: f64,
    pub gamma_sinr_db: f64,
    pub eirp_max_dbm: f64,
    pub sensing_eirp_dbm: f64,
    pub sll_min_comm_db: f64,
    pub sll_min_sensing_db: f64,
    /// Roll of the array on the airframe. `-pi/2` turns the face toward the ground.
    pub mount_roll_rad: f64,
    pub max_slots: usize,
    pub synthesis: SynthesisSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        let gbs = [(200.0, 200.0), (1200.0, 200.0), (700.0, 750.0), (200.0, 1300.0), (1200.0, 1300.0)]
            .iter()
            .map(|(x, y)| Vec3::new(*x, *y, 2.0))
            .collect();
        Self {
            area_width_m: 1500.0,
            area_height_m: 1500.0,
            gbs,
            target: Vec3::new(350.0, 400.0, 0.0),
            start: Vec3::new(0.0, 0.0, 100.0),
            end: Vec3::new(700.0, 800.0, 100.0),
            uav_altitude_m: 100.0,
            v_max_mps: 10.0,
            slot_s: 1.0,
            channel: ChannelParams::default(),
            array: ArrayConfig::new(100, 300e9).expect("static array config"),
            p_max_mw: 1000.0,
            gamma_sinr_db: 0.3,
            eirp_max_dbm: 37.0,
            sensing_eirp_dbm: 20.0,
            sll_min_comm_db: 15.0,
            sll_min_sensing_db: 15.0,
            mount_roll_rad: -FRAC_PI_2,
            max_slots: 1000,
            synthesis: SynthesisSettings::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.gbs.is_empty() {
            return Err(Error::InvalidConfig("at least one GBS is required"));
        }
        if !(self.area_width_m > 0.0 && self.area_height_m > 0.0) {
            return Err(Error::InvalidConfig("area must be positive"));
        }
        if self.gbs.iter().any(|g| !g.is_finite() || g.z >= self.uav_altitude_m) {
            return Err(Error::InvalidConfig("UAV altitude must exceed every GBS height"));
        }
        if !self.target.is_finite() || self.target.z >= self.uav_altitude_m {
            return Err(Error::InvalidConfig("target must lie below the UAV altitude"));
        }
        for p in [self.start, self.end] {
            if !self.inside(p) {
                return Err(Error::InvalidConfig("trajectory endpoints must lie inside the area"));
            }
            if (p.z - self.uav_altitude_m).abs() > 1e-9 {
                return Err(Error::InvalidConfig("trajectory endpoints must be at the UAV altitude"));
            }
        }
        if !(self.v_max_mps > 0.0 && self.slot_s > 0.0) {
            return Err(Error::InvalidConfig("speed and slot length must be positive"));
        }
        if !(self.p_max_mw > 0.0) || !self.eirp_max_dbm.is_finite() || self.gamma_sinr_db.is_nan() {
            return Err(Error::InvalidConfig("power limits must be finite"));
        }
        if !(self.sensing_eirp_dbm <= self.eirp_max_dbm) {
            return Err(Error::InvalidConfig("sensing EIRP exceeds the EIRP limit"));
        }
        if !(self.sll_min_comm_db > 0.0 && self.sll_min_sensing_db > 0.0) {
            return Err(Error::InvalidConfig("SLL minima must be positive"));
        }
        if !self.mount_roll_rad.is_finite() {
            return Err(Error::InvalidConfig("mount roll must be finite"));
        }
        if self.max_slots == 0 || self.synthesis.counter_max == 0 {
            return Err(Error::InvalidConfig("slot and iteration limits must be positive"));
        }
        if !(self.synthesis.eta > 0.0 && self.synthesis.k1 >= 0.0 && self.synthesis.k2 >= 0.0) {
            return Err(Error::InvalidConfig("invalid synthesis weights"));
        }
        Ok(())
    }

    pub fn num_gbs(&self) -> usize {
        self.gbs.len()
    }

    /// Distance flown per slot at full speed.
    pub fn step_m(&self) -> f64 {
        self.v_max_mps * self.slot_s
    }

    fn inside(&self, p: Vec3) -> bool {
        p.is_finite() && (0.0..=self.area_width_m).contains(&p.x) && (0.0..=self.area_height_m).contains(&p.y)
    }

    fn clip(&self, p: Vec3) -> Vec3 {
        Vec3::new(p.x.clamp(0.0, self.area_width_m), p.y.clamp(0.0, self.area_height_m), p.z)
    }

    /// Array attitude for a given flight direction: motion yaw and pitch, mount roll.
    pub fn array_orientation(&self, motion: RotationAngles) -> RotationAngles {
        RotationAngles::new(motion.alpha, motion.beta, self.mount_roll_rad)
    }

    pub fn pose(&self, point: &TrajectoryPoint) -> Pose {
        Pose::new(point.pos, point.orientation)
    }

    pub fn gbs_position(&self, k: usize) -> Result<Vec3> {
        self.gbs
            .get(k)
            .copied()
            .ok_or(Error::InvalidArgument("GBS index out of range"))
    }

    /// World-frame direction of GBS `k` as seen from the UAV.
    pub fn gbs_direction(&self, point: &TrajectoryPoint, k: usize) -> Result<DirectionAngles> {
        direction_angles(point.pos, self.gbs_position(k)?)
    }

    pub fn target_direction(&self, point: &TrajectoryPoint) -> Result<DirectionAngles> {
        direction_angles(point.pos, self.target)
    }

    pub fn comm_channel(&self, point: &TrajectoryPoint, k: usize) -> Result<ChannelVector> {
        channel_vector(
            &self.channel,
            &self.array,
            point.pos,
            point.orientation,
            self.gbs_position(k)?,
            PathLossMode::ExpectedComm,
        )
    }

    /// The two closest GBS other than `associated`, nearest first. GBS whose
    /// direction falls within the null conflict angle of the main beam are skipped.
    pub fn null_gbs(&self, point: &TrajectoryPoint, associated: usize) -> Result<Vec<usize>> {
        let main = self.gbs_direction(point, associated)?;
        let mut others: Vec<(f64, usize)> = Vec::new();
        for k in 0..self.gbs.len() {
            if k == associated {
                continue;
            }
            let dir = self.gbs_direction(point, k)?;
            if main.separation(&dir).to_degrees() < NULL_CONFLICT_DEG {
                continue;
            }
            others.push((point.pos.distance(self.gbs[k]), k));
        }
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(others.into_iter().take(2).map(|(_, k)| k).collect())
    }

    /// Communication beam request toward GBS `k`, nulling its two closest neighbours.
    pub fn comm_request(&self, point: &TrajectoryPoint, k: usize, eirp_dbm: f64) -> Result<SynthesisRequest> {
        let nulls = self
            .null_gbs(point, k)?
            .into_iter()
            .map(|j| self.gbs_direction(point, j))
            .collect::<Result<Vec<_>>>()?;
        let pointing = self.gbs_direction(point, k)?;
        Ok(self.request(pointing, self.sll_min_comm_db, eirp_dbm).with_nulls(nulls))
    }

    pub fn sensing_request(&self, point: &TrajectoryPoint) -> Result<SynthesisRequest> {
        Ok(self.request(self.target_direction(point)?, self.sll_min_sensing_db, self.sensing_eirp_dbm))
    }

    fn request(&self, pointing: DirectionAngles, sll: f64, eirp_dbm: f64) -> SynthesisRequest {
        let mut r = SynthesisRequest::new(pointing, sll, sll, eirp_dbm);
        r.eirp_max_dbm = self.eirp_max_dbm;
        r.k1 = self.synthesis.k1;
        r.k2 = self.synthesis.k2;
        r.eta = self.synthesis.eta;
        r.counter_max = self.synthesis.counter_max;
        r
    }

    /// Smallest comm EIRP giving SINR `>= gamma` at GBS `k` while `sensing` is on, dBm.
    ///
    /// Received power is path loss times EIRP toward the GBS, so this does not
    /// depend on the comm beam shape. `-inf` when no power is needed.
    pub fn required_eirp_dbm(&self, point: &TrajectoryPoint, k: usize, sensing: &BeamWeights) -> Result<f64> {
        let h = self.comm_channel(point, k)?;
        let interference = received_power(&h, sensing)?;
        let gamma = from_db(self.gamma_sinr_db);
        Ok(to_db(gamma * (self.channel.noise_power_mw + interference) / h.pathloss_linear))
    }

    /// SINR at GBS `k` if the comm beam radiates `eirp_dbm` toward it.
    pub fn sinr_at_eirp(&self, point: &TrajectoryPoint, k: usize, sensing: &BeamWeights, eirp_dbm: f64) -> Result<f64> {
        let h = self.comm_channel(point, k)?;
        let interference = received_power(&h, sensing)?;
        Ok(from_db(eirp_dbm) * h.pathloss_linear / (self.channel.noise_power_mw + interference))
    }

    /// Matched beam toward `pointing` scaled to radiate `eirp_dbm` there.
    pub fn matched_beam(&self, orientation: RotationAngles, pointing: DirectionAngles, eirp_dbm: f64) -> Result<BeamWeights> {
        let a = steering_vector_toward(&self.array, orientation, pointing);
        let unit = BeamWeights::new(a.0, 1.0)?;
        let g = array_gain(&unit, &self.array, orientation, pointing)?;
        if !(g > 0.0) {
            return Err(Error::DegenerateGeometry("no gain toward the pointing direction"));
        }
        BeamWeights::new(unit.entries, from_db(eirp_dbm) / g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub slot: usize,
    pub pos: Vec3,
    /// Array attitude, mount roll included.
    pub orientation: RotationAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: usize,
    pub points: Vec<TrajectoryPoint>,
}

/// Yaw and pitch of the flight direction; roll is zero.
///
/// Returns `None` for a zero displacement so the caller can keep the
/// previous attitude.
pub fn orientation_from_motion(prev: Vec3, next: Vec3) -> Option<RotationAngles> {
    let d = next - prev;
    let horizontal = d.horizontal_norm();
    if d.norm() == 0.0 {
        return None;
    }
    let yaw = if horizontal > 0.0 { d.y.atan2(d.x) } else { 0.0 };
    Some(RotationAngles::new(yaw, d.z.atan2(horizontal), 0.0))
}

/// Half-angle of the cone of headings sampled around the bearing to the goal.
const FORWARD_CONE_RAD: f64 = FRAC_PI_4;

/// `count` random walks from `start` to `end`.
///
/// Each slot moves exactly one full-speed step in a heading drawn uniformly
/// within 45 degrees of the bearing to `end`, clipped to the area; once the
/// goal is within one step the walk lands on it. Trajectory `i` draws from
/// ChaCha8 stream `i` of `seed`, so trajectories are independent of each other
/// and of `count`.
pub fn generate_trajectories(scenario: &Scenario, count: usize, seed: u64) -> Result<Vec<Trajectory>> {
    scenario.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("trajectory count must be at least 1"));
    }
    let step = scenario.step_m();
    let distance = scenario.start.distance(scenario.end);
    let budget = step * scenario.max_slots as f64;
    if distance > budget {
        return Err(Error::InfeasibleTrajectory {
            distance_m: distance,
            budget_m: budget,
        });
    }
    (0..count).map(|id| walk(scenario, id, seed)).collect()
}

fn walk(scenario: &Scenario, id: usize, seed: u64) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    let step = scenario.step_m();
    // shortened so rounding in the heading components cannot exceed the limit
    let move_len = step * (1.0 - 1e-12);
    let goal = scenario.end;
    let mut positions = Vec::new();
    positions.push(scenario.start);
    let mut pos = scenario.start;
    while pos != goal {
        if positions.len() > scenario.max_slots {
            return Err(Error::InfeasibleTrajectory {
                distance_m: scenario.start.distance(goal),
                budget_m: step * scenario.max_slots as f64,
            });
        }
        let remaining = goal - pos;
        pos = if remaining.norm() <= step {
            goal
        } else {
            let bearing = remaining.y.atan2(remaining.x);
            let heading = bearing + rng.gen_range(-FORWARD_CONE_RAD..=FORWARD_CONE_RAD);
            let (s, c) = heading.sin_cos();
            scenario.clip(pos + Vec3::new(c * move_len, s * move_len, 0.0))
        };
        positions.push(pos);
    }
    let mut points = Vec::with_capacity(positions.len());
    let mut motion = RotationAngles::IDENTITY;
    for (slot, p) in positions.iter().enumerate() {
        let next = positions.get(slot + 1).copied();
        if let Some(m) = next.and_then(|n| orientation_from_motion(*p, n)) {
            motion = m;
        }
        points.push(TrajectoryPoint {
            slot,
            pos: *p,
            orientation: scenario.array_orientation(motion),
        });
    }
    Ok(Trajectory { id, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationPolicy {
    /// Smallest UAV-GBS distance.
    Closest,
    /// GBS azimuth closest to the target azimuth.
    MinTargetAngle,
    /// Highest SINR with matched probe beams.
    MaxSinr,
    /// Label from [`label_optimal_association`] with [`InitialDesign`].
    Optimal,
    /// Learned mapping; needs an [`AssociationModel`].
    NnModel,
}

/// Learned GBS association.
pub trait AssociationModel {
    fn predict(&self, scenario: &Scenario, point: &TrajectoryPoint) -> Result<usize>;
}

/// Picks a GBS for `point`. Ties go to the lowest index.
pub fn associate(
    scenario: &Scenario,
    point: &TrajectoryPoint,
    policy: AssociationPolicy,
    model: Option<&dyn AssociationModel>,
) -> Result<usize> {
    if scenario.gbs.is_empty() {
        return Err(Error::InvalidConfig("at least one GBS is required"));
    }
    match policy {
        AssociationPolicy::Closest => {
            let d: Vec<f64> = scenario.gbs.iter().map(|g| point.pos.distance(*g)).collect();
            Ok(argmin(&d))
        }
        AssociationPolicy::MinTargetAngle => {
            let t = scenario.target_direction(point)?;
            let d = (0..scenario.num_gbs())
                .map(|k| Ok(wrap_angle(scenario.gbs_direction(point, k)?.phi - t.phi).abs()))
                .collect::<Result<Vec<f64>>>()?;
            Ok(argmin(&d))
        }
        AssociationPolicy::MaxSinr => {
            let s = max_sinr_probe(scenario, point)?;
            Ok(argmin(&s.iter().map(|v| -v).collect::<Vec<_>>()))
        }
        AssociationPolicy::Optimal => Ok(label_optimal_association(scenario, point, &InitialDesign)?.gbs),
        AssociationPolicy::NnModel => match model {
            Some(m) => {
                let k = m.predict(scenario, point)?;
                if k >= scenario.num_gbs() {
                    return Err(Error::InvalidArgument("model predicted an unknown GBS"));
                }
                Ok(k)
            }
            None => Err(Error::InvalidArgument("the NN policy needs a trained model")),
        },
    }
}

/// SINR per GBS with a matched comm beam at the EIRP cap and a matched
/// sensing beam at the sensing EIRP.
fn max_sinr_probe(scenario: &Scenario, point: &TrajectoryPoint) -> Result<Vec<f64>> {
    let sensing = scenario.matched_beam(point.orientation, scenario.target_direction(point)?, scenario.sensing_eirp_dbm)?;
    (0..scenario.num_gbs())
        .map(|k| {
            let h = scenario.comm_channel(point, k)?;
            let comm = scenario.matched_beam(point.orientation, scenario.gbs_direction(point, k)?, scenario.eirp_max_dbm)?;
            crate::channel::sinr(&h, &h, &comm, &sensing, scenario.channel.noise_power_mw)
        })
        .collect()
}

/// First index of the smallest value; NaN never wins.
fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] || v[best].is_nan() {
            best = i;
        }
    }
    best
}

/// Produces beam weights for a synthesis request.
pub trait BeamDesigner {
    fn design(&self, request: &SynthesisRequest, config: &ArrayConfig, orientation: RotationAngles)
        -> Result<SynthesisResult>;
}

/// The optimizer's starting design only: full aperture, taper at the
/// requested SLL, nulls and closed-form PPE.
#[derive(Debug, Clone, Copy, Default)]
pub struct InitialDesign;

impl BeamDesigner for InitialDesign {
    fn design(&self, request: &SynthesisRequest, config: &ArrayConfig, orientation: RotationAngles) -> Result<SynthesisResult> {
        let mut r = request.clone();
        r.counter_max = 1;
        synthesize(&r, config, orientation)
    }
}

/// The full iterative optimizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct Synthesizer;

impl BeamDesigner for Synthesizer {
    fn design(&self, request: &SynthesisRequest, config: &ArrayConfig, orientation: RotationAngles) -> Result<SynthesisResult> {
        synthesize(request, config, orientation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalLabel {
    pub gbs: usize,
    /// Minimum comm EIRP meeting the SINR threshold, uncapped.
    pub required_eirp_dbm: f64,
    pub feasible: bool,
    /// Rate at the EIRP cap.
    pub rate_bps: f64,
}

/// Best GBS for `point` in terms of rate and minimum EIRP.
///
/// A GBS is feasible when its required EIRP is within the cap and the comm
/// beam designed at that EIRP plus the sensing beam fit the power budget.
/// Among feasible GBS the highest rate at the cap wins, then the smaller
/// required EIRP, then the lower index. With none feasible the max-SINR GBS
/// is returned with `feasible = false`.
pub fn label_optimal_association(
    scenario: &Scenario,
    point: &TrajectoryPoint,
    designer: &dyn BeamDesigner,
) -> Result<OptimalLabel> {
    if scenario.gbs.is_empty() {
        return Err(Error::InvalidConfig("at least one GBS is required"));
    }
    let sensing = designer
        .design(&scenario.sensing_request(point)?, &scenario.array, point.orientation)?
        .weights;
    let bandwidth = scenario.channel.bandwidth_hz;
    let mut best: Option<OptimalLabel> = None;
    let mut fallback: Option<OptimalLabel> = None;
    for k in 0..scenario.num_gbs() {
        let req = scenario.required_eirp_dbm(point, k, &sensing)?;
        let rate = achievable_rate(scenario.sinr_at_eirp(point, k, &sensing, scenario.eirp_max_dbm)?, bandwidth);
        let mut label = OptimalLabel {
            gbs: k,
            required_eirp_dbm: req,
            feasible: false,
            rate_bps: rate,
        };
        if fallback.as_ref().is_none_or(|f| rate > f.rate_bps) {
            fallback = Some(label);
        }
        if req > scenario.eirp_max_dbm {
            continue;
        }
        let comm_power = if req.is_finite() {
            let design = designer.design(&scenario.comm_request(point, k, req)?, &scenario.array, point.orientation)?;
            design.weights.power_mw()
        } else {
            0.0
        };
        if comm_power + sensing.power_mw() > scenario.p_max_mw {
            continue;
        }
        label.feasible = true;
        let better = match &best {
            None => true,
            Some(b) => {
                let tol = 1e-9 * b.rate_bps.abs().max(1.0);
                rate > b.rate_bps + tol || ((rate - b.rate_bps).abs() <= tol && req < b.required_eirp_dbm)
            }
        };
        if better {
            best = Some(label);
        }
    }
    Ok(best.or(fallback).expect("at least one GBS"))
}
