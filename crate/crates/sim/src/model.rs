//! Training of the beamformer and association networks and the model bundle file.

use std::fs;
use std::path::{Path, PathBuf};

use isac_core::beampattern::{BeamWeights, BeamformingMatrix};
use isac_core::geometry::{steering_vector_toward, ArrayConfig, DirectionAngles, RotationAngles, SteeringVector};
use isac_core::neuralnet::{
    split_indices, train, train_with_split, Activation, EpochStats, Layer, Network, NetworkConfig, Normalization,
    TrainConfig, TrainReport,
};
use isac_core::scenario::{AssociationModel, Scenario, TrajectoryPoint};
use log::info;
use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::error::{Result, SimError};
use crate::eval::{clamp_matrix, deploy_beam, Limits};
use crate::features::{association_features, decode_gbs, decode_weights, encode_gbs, ASSOCIATION_FEATURES, BEAM_FEATURES};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
pub const MIN_SAMPLES: usize = 10;
pub const ASSOCIATION_HIDDEN: [usize; 2] = [64, 32];
pub const BEAMFORMER_HIDDEN: usize = 50;

/// Seed offset so the two networks start from unrelated weights.
const ASSOCIATION_SEED_OFFSET: u64 = 0x5eed_a550;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub scenario_hash: String,
    pub num_gbs: usize,
    pub num_elements: usize,
    pub beamformer: Network,
    pub association: Network,
    pub train_config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub beamformer_report: TrainReport,
    pub association_report: TrainReport,
}

/// Beamformer rows: comm then sensing for every sample.
pub fn beamformer_rows(samples: &[Sample]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut x = Vec::with_capacity(2 * samples.len());
    let mut t = Vec::with_capacity(2 * samples.len());
    for s in samples {
        x.push(s.comm_features.clone());
        t.push(s.comm_weights.clone());
        x.push(s.sensing_features.clone());
        t.push(s.sensing_weights.clone());
    }
    (x, t)
}

/// Reference quantities for the beampattern error of one sample.
///
/// Directions are body-frame angles, so gains are taken with the identity
/// attitude.
struct MetricSample {
    /// Steering vector toward the target.
    target: SteeringVector,
    comm_dir: DirectionAngles,
    sensing_dir: DirectionAngles,
    comm_eirp_dbm: f64,
    sensing_eirp_dbm: f64,
    limits: Limits,
    /// Reference transmit gain at the target, both beams.
    reference: f64,
}

fn target_gain(a: &SteeringVector, w: &BeamWeights) -> Result<f64> {
    Ok(w.ppe_mw * a.inner(&w.entries)?.norm_sqr())
}

fn body_direction(features: &[f64]) -> DirectionAngles {
    DirectionAngles::new(features[1], features[0])
}

fn metric_samples(samples: &[Sample], config: &ArrayConfig) -> Result<Vec<MetricSample>> {
    samples
        .iter()
        .map(|s| {
            let sensing_dir = body_direction(&s.sensing_features);
            let a = steering_vector_toward(config, RotationAngles::IDENTITY, sensing_dir);
            let c = target_gain(&a, &BeamWeights::new(decode_weights(&s.comm_weights)?, s.comm_ppe_mw)?)?;
            let g = target_gain(&a, &BeamWeights::new(decode_weights(&s.sensing_weights)?, s.sensing_ppe_mw)?)?;
            Ok(MetricSample {
                target: a,
                comm_dir: body_direction(&s.comm_features),
                sensing_dir,
                comm_eirp_dbm: s.comm_features[BEAM_FEATURES - 1],
                sensing_eirp_dbm: s.sensing_features[2],
                limits: Limits {
                    p_max_mw: s.p_max_mw,
                    eirp_max_dbm: s.eirp_max_dbm,
                },
                reference: c + g,
            })
        })
        .collect()
}

/// Normalized beampattern error at the target over the samples in `rows`.
///
/// Both beams are deployed as in evaluation: predicted weights with the PPE
/// meeting each beam's EIRP toward its pointing, clamped to the power budget
/// and EIRP cap. The sum of squared differences to the reference gain is
/// divided by the sum of squared reference gains.
fn beampattern_error(
    net: &Network,
    inputs: &[Vec<f64>],
    refs: &[MetricSample],
    config: &ArrayConfig,
    rows: &[usize],
) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut last = usize::MAX;
    let id = RotationAngles::IDENTITY;
    for &row in rows {
        let i = row / 2;
        if i == last {
            continue;
        }
        last = i;
        let r = &refs[i];
        let (comm, gc) = deploy_beam(net, &inputs[2 * i], config, id, r.comm_dir, r.comm_eirp_dbm)?;
        let (sensing, gs) = deploy_beam(net, &inputs[2 * i + 1], config, id, r.sensing_dir, r.sensing_eirp_dbm)?;
        let m = clamp_matrix(BeamformingMatrix { sensing, comm }, gc, gs, r.limits);
        let d = r.reference - (target_gain(&r.target, &m.comm)? + target_gain(&r.target, &m.sensing)?);
        num += d * d;
        den += r.reference * r.reference;
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Ok(0.0)
    }
}

/// Sample split mapped onto beamformer rows so both beams of a sample land
/// on the same side.
pub fn beamformer_split(num_samples: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let (tr, va) = split_indices(num_samples, fraction, seed);
    let rows = |v: Vec<usize>| v.into_iter().flat_map(|i| [2 * i, 2 * i + 1]).collect();
    (rows(tr), rows(va))
}

fn check_samples(samples: &[Sample]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(SimError::DatasetTooSmall {
            found: samples.len(),
            needed: MIN_SAMPLES,
        });
    }
    let first = &samples[0];
    for (i, s) in samples.iter().enumerate() {
        if s.scenario_hash != first.scenario_hash || s.num_gbs != first.num_gbs || s.num_elements != first.num_elements
        {
            return Err(SimError::Format(format!("sample {i} comes from a different scenario")));
        }
        let m2 = 2 * s.num_elements;
        if s.comm_features.len() != BEAM_FEATURES
            || s.sensing_features.len() != BEAM_FEATURES
            || s.association_features.len() != ASSOCIATION_FEATURES
            || s.comm_weights.len() != m2
            || s.sensing_weights.len() != m2
        {
            return Err(SimError::Format(format!("sample {i} has malformed feature or weight vectors")));
        }
        if s.optimal_gbs >= s.num_gbs {
            return Err(SimError::Format(format!("sample {i} has an out-of-range label")));
        }
    }
    Ok(())
}

/// Trains both networks on `samples` with the split, shuffling and init
/// seeded from `config.seed`.
pub fn train_models(samples: &[Sample], config: &TrainConfig) -> Result<TrainOutcome> {
    check_samples(samples)?;
    let first = &samples[0];
    let m = first.num_elements;
    let k = first.num_gbs;

    let array = ArrayConfig::new(m, first.carrier_frequency_hz)?;
    let (bx, bt) = beamformer_rows(samples);
    let refs = metric_samples(samples, &array)?;
    let beam_net = Network::new(&NetworkConfig::new(vec![BEAM_FEATURES, BEAMFORMER_HIDDEN, 2 * m], config.seed))?;
    let mut metric =
        |net: &Network, rows: &[usize]| beampattern_error(net, &bx, &refs, &array, rows).map_err(core_error);
    let (tr, va) = beamformer_split(samples.len(), config.train_fraction, config.seed);
    info!("training beamformer on {} rows", bx.len());
    let (beamformer, beamformer_report) = train_with_split(beam_net, &bx, &bt, config, tr, va, Some(&mut metric))?;

    let ax: Vec<Vec<f64>> = samples.iter().map(|s| s.association_features.clone()).collect();
    let at: Vec<Vec<f64>> = samples.iter().map(|s| vec![encode_gbs(s.optimal_gbs, k)]).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.optimal_gbs).collect();
    let assoc_net = Network::new(&NetworkConfig::new(
        vec![ASSOCIATION_FEATURES, ASSOCIATION_HIDDEN[0], ASSOCIATION_HIDDEN[1], 1],
        config.seed.wrapping_add(ASSOCIATION_SEED_OFFSET),
    ))?;
    let mut accuracy = |net: &Network, rows: &[usize]| association_accuracy(net, &ax, &labels, k, rows);
    info!("training association net on {} samples", ax.len());
    let (association, association_report) = train(assoc_net, &ax, &at, config, Some(&mut accuracy))?;

    Ok(TrainOutcome {
        bundle: ModelBundle {
            scenario_hash: first.scenario_hash.clone(),
            num_gbs: k,
            num_elements: m,
            beamformer,
            association,
            train_config: config.clone(),
        },
        beamformer_report,
        association_report,
    })
}

fn core_error(e: SimError) -> isac_core::Error {
    match e {
        SimError::Core(c) => c,
        _ => isac_core::Error::InvalidArgument("malformed weight encoding"),
    }
}

/// Fraction of `rows` whose decoded prediction equals the label.
pub fn association_accuracy(
    net: &Network,
    inputs: &[Vec<f64>],
    labels: &[usize],
    num_gbs: usize,
    rows: &[usize],
) -> isac_core::Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for &i in rows {
        if decode_gbs(net.forward(&inputs[i])?[0], num_gbs) == labels[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / rows.len() as f64)
}

impl ModelBundle {
    pub fn predict_association(&self, scenario: &Scenario, point: &TrajectoryPoint) -> Result<usize> {
        let y = self.association.forward(&association_features(scenario, point)?)?;
        Ok(decode_gbs(y[0], scenario.num_gbs()))
    }

    pub fn to_file(&self) -> BundleFile {
        BundleFile {
            format_version: BUNDLE_FORMAT_VERSION,
            scenario_hash: self.scenario_hash.clone(),
            num_gbs: self.num_gbs,
            num_elements: self.num_elements,
            beamformer: NetworkFile::from_network(&self.beamformer),
            association: NetworkFile::from_network(&self.association),
            train_config: TrainConfigFile::from_config(&self.train_config),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_file())? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: BundleFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        f.to_bundle()
    }
}

impl AssociationModel for ModelBundle {
    fn predict(&self, scenario: &Scenario, point: &TrajectoryPoint) -> isac_core::Result<usize> {
        self.predict_association(scenario, point).map_err(core_error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: String,
    pub output_activation: String,
    /// Row-major `outputs x inputs` per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
        Activation::Linear => "linear",
    }
}

fn parse_activation(name: &str) -> Result<Activation> {
    match name {
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        "linear" => Ok(Activation::Linear),
        other => Err(SimError::Format(format!("unknown activation '{other}'"))),
    }
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> Self {
        Self {
            layer_sizes: net.layer_sizes.clone(),
            hidden_activation: activation_name(net.hidden_activation).into(),
            output_activation: activation_name(net.output_activation).into(),
            weights: net.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: net.layers.iter().map(|l| l.biases.clone()).collect(),
            input_mean: net.input_norm.mean.clone(),
            input_std: net.input_norm.std.clone(),
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        if self.weights.len() + 1 != self.layer_sizes.len() || self.biases.len() != self.weights.len() {
            return Err(SimError::Format("layer arrays do not match layer sizes".into()));
        }
        let layers = self
            .layer_sizes
            .windows(2)
            .zip(self.weights.iter().zip(&self.biases))
            .map(|(s, (w, b))| Layer {
                inputs: s[0],
                outputs: s[1],
                weights: w.clone(),
                biases: b.clone(),
            })
            .collect();
        let net = Network {
            layer_sizes: self.layer_sizes.clone(),
            hidden_activation: parse_activation(&self.hidden_activation)?,
            output_activation: parse_activation(&self.output_activation)?,
            layers,
            input_norm: Normalization {
                mean: self.input_mean.clone(),
                std: self.input_std.clone(),
            },
        };
        net.validate()?;
        Ok(net)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfigFile {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl TrainConfigFile {
    pub fn from_config(c: &TrainConfig) -> Self {
        Self {
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            train_fraction: c.train_fraction,
            seed: c.seed,
        }
    }

    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            train_fraction: self.train_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub format_version: u32,
    pub scenario_hash: String,
    pub num_gbs: usize,
    pub num_elements: usize,
    pub beamformer: NetworkFile,
    pub association: NetworkFile,
    pub train_config: TrainConfigFile,
}

impl BundleFile {
    pub fn to_bundle(&self) -> Result<ModelBundle> {
        if self.format_version != BUNDLE_FORMAT_VERSION {
            return Err(SimError::Format(format!(
                "unsupported bundle format_version {}",
                self.format_version
            )));
        }
        let beamformer = self.beamformer.to_network()?;
        let association = self.association.to_network()?;
        if beamformer.layer_sizes != [BEAM_FEATURES, BEAMFORMER_HIDDEN, 2 * self.num_elements] {
            return Err(SimError::Format("unexpected beamformer layer sizes".into()));
        }
        if association.layer_sizes != [ASSOCIATION_FEATURES, ASSOCIATION_HIDDEN[0], ASSOCIATION_HIDDEN[1], 1] {
            return Err(SimError::Format("unexpected association layer sizes".into()));
        }
        Ok(ModelBundle {
            scenario_hash: self.scenario_hash.clone(),
            num_gbs: self.num_gbs,
            num_elements: self.num_elements,
            beamformer,
            association,
            train_config: self.train_config.to_config(),
        })
    }
}

/// `<dir>/<stem>.<suffix>` next to `bundle`.
pub fn sibling_path(bundle: &Path, suffix: &str) -> PathBuf {
    let stem = bundle.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "bundle".into());
    bundle.with_file_name(format!("{stem}.{suffix}"))
}

fn write_report(path: &Path, metric_name: &str, epochs: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_loss", "val_loss", metric_name])?;
    for e in epochs {
        let m = e.val_metric.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string(), m])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.report.csv` (beamformer) and `<stem>.association.csv` beside the bundle.
pub fn write_reports(bundle_path: &Path, outcome: &TrainOutcome) -> Result<(PathBuf, PathBuf)> {
    let beam = sibling_path(bundle_path, "report.csv");
    let assoc = sibling_path(bundle_path, "association.csv");
    write_report(&beam, "val_beampattern_error", &outcome.beamformer_report.epochs)?;
    write_report(&assoc, "val_accuracy", &outcome.association_report.epochs)?;
    Ok((beam, assoc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(sibling_path(Path::new("/a/b/model.json"), "report.csv"), Path::new("/a/b/model.report.csv"));
        assert_eq!(sibling_path(Path::new("m"), "x.csv"), Path::new("m.x.csv"));
    }

    #[test]
    fn network_file_round_trips() {
        let net = Network::new(&NetworkConfig::new(vec![4, 64, 32, 1], 3)).unwrap();
        let back = NetworkFile::from_network(&net).to_network().unwrap();
        assert_eq!(back, net);
        let mut f = NetworkFile::from_network(&net);
        f.hidden_activation = "swish".into();
        assert!(f.to_network().is_err());
        f = NetworkFile::from_network(&net);
        f.weights.pop();
        assert!(f.to_network().is_err());
    }
}
