//! Training samples produced by running the optimizer along trajectories.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use isac_core::scenario::{
    associate, label_optimal_association, AssociationPolicy, BeamDesigner, InitialDesign, Scenario, Synthesizer,
    Trajectory, TrajectoryPoint,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::features::{association_features, comm_features, encode_weights, sensing_features};

/// One trajectory point: beam features, optimizer weights and the optimal association label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub scenario_hash: String,
    pub trajectory_id: usize,
    pub slot: usize,
    pub uav_pos: [f64; 3],
    /// Array attitude `(alpha, beta, gamma)`, radians.
    pub orientation: [f64; 3],
    pub target: [f64; 3],
    pub num_elements: usize,
    pub carrier_frequency_hz: f64,
    pub num_gbs: usize,
    pub policy: String,
    pub gbs: usize,
    pub null_gbs: Vec<usize>,
    pub comm_features: Vec<f64>,
    pub sensing_features: Vec<f64>,
    pub comm_weights: Vec<f64>,
    pub sensing_weights: Vec<f64>,
    pub comm_ppe_mw: f64,
    pub sensing_ppe_mw: f64,
    pub required_eirp_dbm: f64,
    pub comm_eirp_dbm: f64,
    pub p_max_mw: f64,
    pub eirp_max_dbm: f64,
    pub association_features: Vec<f64>,
    pub optimal_gbs: usize,
    pub optimal_feasible: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub points: usize,
    pub kept: usize,
    pub skipped: usize,
}

pub fn policy_name(policy: AssociationPolicy) -> &'static str {
    match policy {
        AssociationPolicy::Closest => "closest",
        AssociationPolicy::MinTargetAngle => "angle",
        AssociationPolicy::MaxSinr => "sinr",
        AssociationPolicy::Optimal => "optimal",
        AssociationPolicy::NnModel => "nn",
    }
}

pub fn parse_policy(name: &str) -> Result<AssociationPolicy> {
    Ok(match name {
        "closest" => AssociationPolicy::Closest,
        "angle" => AssociationPolicy::MinTargetAngle,
        "sinr" => AssociationPolicy::MaxSinr,
        "optimal" => AssociationPolicy::Optimal,
        "nn" => AssociationPolicy::NnModel,
        other => return Err(SimError::Format(format!("unknown policy '{other}'"))),
    })
}

/// Builds one sample, or `None` when either beam fails to converge.
pub fn sample_for_point(
    scenario: &Scenario,
    scenario_hash: &str,
    trajectory_id: usize,
    point: &TrajectoryPoint,
    policy: AssociationPolicy,
) -> Result<Option<Sample>> {
    let label = label_optimal_association(scenario, point, &InitialDesign)?;
    let gbs = match policy {
        AssociationPolicy::Optimal => label.gbs,
        AssociationPolicy::NnModel => {
            return Err(SimError::Format("datasets are built with a baseline or optimal policy".into()))
        }
        p => associate(scenario, point, p, None)?,
    };
    let sensing_req = scenario.sensing_request(point)?;
    let sensing = Synthesizer.design(&sensing_req, &scenario.array, point.orientation)?;
    if !sensing.converged {
        return Ok(None);
    }
    let required = scenario.required_eirp_dbm(point, gbs, &sensing.weights)?;
    if !required.is_finite() {
        return Ok(None);
    }
    let eirp = required.min(scenario.eirp_max_dbm);
    let comm_req = scenario.comm_request(point, gbs, eirp)?;
    let comm = Synthesizer.design(&comm_req, &scenario.array, point.orientation)?;
    if !comm.converged {
        return Ok(None);
    }
    let o = point.orientation;
    Ok(Some(Sample {
        scenario_hash: scenario_hash.to_string(),
        trajectory_id,
        slot: point.slot,
        uav_pos: [point.pos.x, point.pos.y, point.pos.z],
        orientation: [o.alpha, o.beta, o.gamma],
        target: [scenario.target.x, scenario.target.y, scenario.target.z],
        num_elements: scenario.array.num_elements(),
        carrier_frequency_hz: scenario.array.carrier_frequency_hz(),
        num_gbs: scenario.num_gbs(),
        policy: policy_name(policy).to_string(),
        gbs,
        null_gbs: scenario.null_gbs(point, gbs)?,
        comm_features: comm_features(scenario, point, gbs, eirp)?,
        sensing_features: sensing_features(scenario, point, scenario.sensing_eirp_dbm)?,
        comm_weights: encode_weights(&comm.weights, &scenario.array, o, comm_req.pointing),
        sensing_weights: encode_weights(&sensing.weights, &scenario.array, o, sensing_req.pointing),
        comm_ppe_mw: comm.weights.ppe_mw,
        sensing_ppe_mw: sensing.weights.ppe_mw,
        required_eirp_dbm: required,
        comm_eirp_dbm: eirp,
        p_max_mw: scenario.p_max_mw,
        eirp_max_dbm: scenario.eirp_max_dbm,
        association_features: association_features(scenario, point)?,
        optimal_gbs: label.gbs,
        optimal_feasible: label.feasible,
    }))
}

/// Samples for every point of every trajectory, in trajectory then slot
/// order. Points whose designs do not converge are skipped.
pub fn generate_dataset(
    scenario: &Scenario,
    scenario_hash: &str,
    trajectories: &[Trajectory],
    policy: AssociationPolicy,
) -> Result<(Vec<Sample>, DatasetSummary)> {
    if trajectories.is_empty() {
        return Err(SimError::Core(isac_core::Error::InvalidArgument("no trajectories")));
    }
    let mut out = Vec::new();
    let mut summary = DatasetSummary::default();
    for t in trajectories {
        for p in &t.points {
            summary.points += 1;
            match sample_for_point(scenario, scenario_hash, t.id, p, policy)? {
                Some(s) => out.push(s),
                None => {
                    summary.skipped += 1;
                    warn!("trajectory {} slot {}: optimizer did not converge, point skipped", t.id, p.slot);
                }
            }
        }
        info!("trajectory {} done, {} samples so far", t.id, out.len());
    }
    summary.kept = out.len();
    if out.is_empty() {
        return Err(SimError::EmptyDataset);
    }
    Ok((out, summary))
}

pub fn write_jsonl(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut f, s)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Sample>> {
    let f = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: Sample =
            serde_json::from_str(&line).map_err(|e| SimError::Format(format!("line {}: {e}", i + 1)))?;
        out.push(s);
    }
    Ok(out)
}
