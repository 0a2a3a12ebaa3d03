//! Per-slot evaluation of a trajectory with optimizer or network weights.

use std::path::Path;

use isac_core::beampattern::{array_gain, beampattern_gain, eirp_dbm, BeamWeights, BeamformingMatrix};
use isac_core::geometry::{ArrayConfig, DirectionAngles, RotationAngles};
use isac_core::neuralnet::Network;
use isac_core::channel::{achievable_rate, sinr};
use isac_core::scenario::{associate, AssociationModel, AssociationPolicy, BeamDesigner, Scenario, Synthesizer, Trajectory, TrajectoryPoint};
use isac_core::{from_db, to_db};
use serde::{Deserialize, Serialize};

use crate::dataset::policy_name;
use crate::error::{Result, SimError};
use crate::features::{comm_features, decode_weights, sensing_features};
use crate::model::ModelBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    Optimizer,
    Nn,
}

impl WeightSource {
    pub fn name(self) -> &'static str {
        match self {
            WeightSource::Optimizer => "optimizer",
            WeightSource::Nn => "nn",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "optimizer" => Ok(WeightSource::Optimizer),
            "nn" => Ok(WeightSource::Nn),
            other => Err(SimError::Format(format!("unknown weight source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub trajectory_id: usize,
    pub slot: usize,
    pub policy: String,
    pub source: String,
    pub gbs: usize,
    /// Comm EIRP needed for the SINR threshold, uncapped.
    pub required_eirp_dbm: f64,
    /// Emitted comm EIRP toward the associated GBS.
    pub eirp_dbm: f64,
    pub sinr_db: f64,
    pub rate_bps: f64,
    pub beampattern_gain: f64,
    pub total_power_mw: f64,
}

/// Power budget and per-beam EIRP cap applied to every emitted matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub p_max_mw: f64,
    pub eirp_max_dbm: f64,
}

impl Limits {
    pub fn of(scenario: &Scenario) -> Self {
        Self {
            p_max_mw: scenario.p_max_mw,
            eirp_max_dbm: scenario.eirp_max_dbm,
        }
    }
}

/// Scales both beams down so each beam's EIRP toward its pointing stays
/// within the cap and the total power within the budget. Gains are the
/// array gains of the normalized entries toward each pointing.
pub fn clamp_matrix(mut matrix: BeamformingMatrix, comm_gain: f64, sensing_gain: f64, limits: Limits) -> BeamformingMatrix {
    let cap = from_db(limits.eirp_max_dbm);
    for (w, g) in [(&mut matrix.comm, comm_gain), (&mut matrix.sensing, sensing_gain)] {
        let e = w.ppe_mw * g;
        if e > cap {
            w.ppe_mw *= cap / e;
            while w.ppe_mw * g > cap {
                w.ppe_mw *= SHRINK;
            }
        }
    }
    let total = matrix.total_power_mw();
    if total > limits.p_max_mw {
        let f = limits.p_max_mw / total;
        matrix.comm.ppe_mw *= f;
        matrix.sensing.ppe_mw *= f;
        while matrix.total_power_mw() > limits.p_max_mw {
            matrix.comm.ppe_mw *= SHRINK;
            matrix.sensing.ppe_mw *= SHRINK;
        }
    }
    matrix
}

/// Absorbs rounding after a rescale so the limits hold exactly.
const SHRINK: f64 = 1.0 - 4.0 * f64::EPSILON;

/// [`clamp_matrix`] with gains toward the associated GBS and the target.
pub fn enforce_limits(
    scenario: &Scenario,
    point: &TrajectoryPoint,
    gbs: usize,
    matrix: BeamformingMatrix,
) -> Result<BeamformingMatrix> {
    let o = point.orientation;
    let gc = array_gain(&matrix.comm, &scenario.array, o, scenario.gbs_direction(point, gbs)?)?;
    let gs = array_gain(&matrix.sensing, &scenario.array, o, scenario.target_direction(point)?)?;
    Ok(clamp_matrix(matrix, gc, gs, Limits::of(scenario)))
}

/// Network weights for one beam, normalized to unit peak, with the PPE that
/// radiates `eirp_dbm` toward `dir`, and the array gain toward `dir`.
/// Zero PPE when there is no gain there.
pub fn deploy_beam(
    net: &Network,
    features: &[f64],
    config: &ArrayConfig,
    orientation: RotationAngles,
    dir: DirectionAngles,
    eirp_dbm: f64,
) -> Result<(BeamWeights, f64)> {
    let mut w = BeamWeights::new(decode_weights(&net.forward(features)?)?, 0.0)?.normalized();
    let g = array_gain(&w, config, orientation, dir)?;
    if g > 0.0 && eirp_dbm.is_finite() {
        w.ppe_mw = from_db(eirp_dbm) / g;
    }
    Ok((w, g))
}

fn design_slot(
    scenario: &Scenario,
    point: &TrajectoryPoint,
    gbs: usize,
    source: WeightSource,
    bundle: Option<&ModelBundle>,
) -> Result<(BeamformingMatrix, f64)> {
    let m = scenario.array.num_elements();
    let target_dir = scenario.target_direction(point)?;
    let gbs_dir = scenario.gbs_direction(point, gbs)?;
    let sensing = match source {
        WeightSource::Optimizer => {
            Synthesizer
                .design(&scenario.sensing_request(point)?, &scenario.array, point.orientation)?
                .weights
        }
        WeightSource::Nn => {
            let b = need_bundle(bundle)?;
            let f = sensing_features(scenario, point, scenario.sensing_eirp_dbm)?;
            deploy_beam(&b.beamformer, &f, &scenario.array, point.orientation, target_dir, scenario.sensing_eirp_dbm)?.0
        }
    };
    let required = scenario.required_eirp_dbm(point, gbs, &sensing)?;
    if required.is_nan() {
        return Err(SimError::Format(format!("slot {}: undefined required EIRP", point.slot)));
    }
    let eirp = required.min(scenario.eirp_max_dbm);
    let comm = if !eirp.is_finite() {
        BeamWeights::zeros(m)
    } else {
        match source {
            WeightSource::Optimizer => {
                Synthesizer
                    .design(&scenario.comm_request(point, gbs, eirp)?, &scenario.array, point.orientation)?
                    .weights
            }
            WeightSource::Nn => {
                let b = need_bundle(bundle)?;
                let f = comm_features(scenario, point, gbs, eirp)?;
                deploy_beam(&b.beamformer, &f, &scenario.array, point.orientation, gbs_dir, eirp)?.0
            }
        }
    };
    Ok((BeamformingMatrix { sensing, comm }, required))
}

fn need_bundle(bundle: Option<&ModelBundle>) -> Result<&ModelBundle> {
    bundle.ok_or_else(|| SimError::Format("the nn weight source needs a model bundle".into()))
}

/// Records for one slot given its beamforming matrix.
pub fn record_for(
    scenario: &Scenario,
    trajectory_id: usize,
    point: &TrajectoryPoint,
    gbs: usize,
    policy: AssociationPolicy,
    source: WeightSource,
    matrix: &BeamformingMatrix,
    required_eirp_dbm: f64,
) -> Result<EvalRecord> {
    let h = scenario.comm_channel(point, gbs)?;
    let s = sinr(&h, &h, &matrix.comm, &matrix.sensing, scenario.channel.noise_power_mw)?;
    Ok(EvalRecord {
        trajectory_id,
        slot: point.slot,
        policy: policy_name(policy).to_string(),
        source: source.name().to_string(),
        gbs,
        required_eirp_dbm,
        eirp_dbm: eirp_dbm(&matrix.comm, &scenario.array, point.orientation, scenario.gbs_direction(point, gbs)?)?,
        sinr_db: to_db(s),
        rate_bps: achievable_rate(s, scenario.channel.bandwidth_hz),
        beampattern_gain: beampattern_gain(matrix, &scenario.array, scenario.pose(point), scenario.target)?,
        total_power_mw: matrix.total_power_mw(),
    })
}

/// A slot's record together with the matrix it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedSlot {
    pub point: TrajectoryPoint,
    pub matrix: BeamformingMatrix,
    pub record: EvalRecord,
}

/// Every slot in order, with the emitted matrices.
pub fn evaluate_slots(
    scenario: &Scenario,
    trajectory: &Trajectory,
    policy: AssociationPolicy,
    source: WeightSource,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<EvaluatedSlot>> {
    let model = bundle.map(|b| b as &dyn AssociationModel);
    let mut out = Vec::with_capacity(trajectory.points.len());
    for p in &trajectory.points {
        let gbs = associate(scenario, p, policy, model)?;
        let (matrix, required) = design_slot(scenario, p, gbs, source, bundle)?;
        let matrix = enforce_limits(scenario, p, gbs, matrix)?;
        let record = record_for(scenario, trajectory.id, p, gbs, policy, source, &matrix, required)?;
        out.push(EvaluatedSlot {
            point: *p,
            matrix,
            record,
        });
    }
    Ok(out)
}

/// One record per slot, in slot order.
pub fn evaluate_trajectory(
    scenario: &Scenario,
    trajectory: &Trajectory,
    policy: AssociationPolicy,
    source: WeightSource,
    bundle: Option<&ModelBundle>,
) -> Result<Vec<EvalRecord>> {
    Ok(evaluate_slots(scenario, trajectory, policy, source, bundle)?
        .into_iter()
        .map(|s| s.record)
        .collect())
}

pub fn write_records(path: &Path, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
