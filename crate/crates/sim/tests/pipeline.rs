use isac_core::beampattern::{BeamWeights, BeamformingMatrix};
use isac_core::geometry::Vec3;
use isac_core::neuralnet::{split_indices, TrainConfig};
use isac_core::scenario::{generate_trajectories, AssociationPolicy, Scenario, Trajectory};
use isac_core::Complex64;
use isac_sim::dataset::{generate_dataset, read_jsonl, sample_for_point, write_jsonl, Sample};
use isac_sim::eval::{evaluate_slots, evaluate_trajectory, record_for, WeightSource};
use isac_sim::features::encode_gbs;
use isac_sim::model::{beamformer_split, train_models, ModelBundle};
use isac_sim::stats::eirp_stats_by_policy;

fn three_gbs() -> Scenario {
    let mut s = Scenario::default();
    s.gbs.truncate(3);
    s.start = Vec3::new(600.0, 500.0, 100.0);
    s.end = Vec3::new(612.0, 508.0, 100.0);
    s
}

fn short_trajectory(s: &Scenario) -> Trajectory {
    generate_trajectories(s, 1, 5).unwrap().remove(0)
}

/// One real sample repeated `n` times with distinct slots.
fn repeated(n: usize) -> Vec<Sample> {
    let s = three_gbs();
    let t = short_trajectory(&s);
    let base = t
        .points
        .iter()
        .find_map(|p| sample_for_point(&s, "h", 0, p, AssociationPolicy::Optimal).unwrap())
        .expect("a converged point");
    (0..n)
        .map(|i| {
            let mut c = base.clone();
            c.slot = i;
            c
        })
        .collect()
}

#[test]
fn small_dataset_has_two_nulls_per_sample() {
    let s = three_gbs();
    let t = short_trajectory(&s);
    assert_eq!(t.points.len(), 3);
    let (samples, summary) = generate_dataset(&s, "h", &[t], AssociationPolicy::Closest).unwrap();
    assert!(samples.len() <= 3);
    assert_eq!(summary.points, 3);
    assert_eq!(summary.kept + summary.skipped, 3);
    for x in &samples {
        assert_eq!(x.null_gbs.len(), 2);
        assert!(!x.null_gbs.contains(&x.gbs));
        assert_eq!(x.comm_features.len(), 7);
        assert_eq!(x.sensing_features.len(), 7);
        assert_eq!(x.comm_weights.len(), 200);
        assert_eq!(x.sensing_weights.len(), 200);
        assert!(x.comm_eirp_dbm <= s.eirp_max_dbm);
    }
}

#[test]
fn dataset_bytes_are_reproducible() {
    let s = three_gbs();
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let t = generate_trajectories(&s, 1, 5).unwrap();
        let (samples, _) = generate_dataset(&s, "h", &t, AssociationPolicy::Optimal).unwrap();
        let path = dir.path().join(name);
        write_jsonl(&path, &samples).unwrap();
        assert_eq!(read_jsonl(&path).unwrap(), samples);
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn empty_trajectory_list_is_rejected() {
    assert!(generate_dataset(&three_gbs(), "h", &[], AssociationPolicy::Closest).is_err());
}

#[test]
fn identical_samples_are_memorized() {
    let samples = repeated(12);
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 8,
        learning_rate: 1e-2,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train_models(&samples, &cfg).unwrap();
    let last = out.beamformer_report.epochs.last().unwrap();
    assert!(last.val_loss < 1e-4, "{}", last.val_loss);
    let a = out.association_report.epochs.last().unwrap();
    assert!(a.val_loss < 1e-4, "{}", a.val_loss);
    assert_eq!(a.val_metric, Some(1.0));
    // memorized label decodes back to the stored index
    let y = out.bundle.association.forward(&samples[0].association_features).unwrap()[0];
    assert!((y - encode_gbs(samples[0].optimal_gbs, 3)).abs() < 0.05);
}

#[test]
fn too_small_dataset_is_rejected() {
    let err = train_models(&repeated(9), &TrainConfig::default()).unwrap_err();
    assert_eq!(err.kind(), "dataset_too_small");
}

#[test]
fn split_depends_on_seed_but_not_size() {
    let (a, b) = split_indices(101, 0.7, 1);
    let (c, d) = split_indices(101, 0.7, 2);
    assert_ne!(a, c);
    assert_eq!((a.len(), b.len()), (c.len(), d.len()));
    assert!((a.len() as f64 - 70.7).abs() <= 1.0);
    let (tr, va) = beamformer_split(50, 0.7, 4);
    assert_eq!((tr.len(), va.len()), (70, 30));
    for pair in va.chunks(2) {
        assert_eq!(pair[0] + 1, pair[1]);
        assert_eq!(pair[0] % 2, 0);
    }
}

fn quick_bundle(samples: &[Sample]) -> ModelBundle {
    let cfg = TrainConfig {
        epochs: 2,
        seed: 1,
        ..TrainConfig::default()
    };
    train_models(samples, &cfg).unwrap().bundle
}

#[test]
fn single_gbs_association_is_always_zero() {
    let mut samples = repeated(10);
    for s in &mut samples {
        s.num_gbs = 1;
        s.optimal_gbs = 0;
    }
    let b = quick_bundle(&samples);
    let mut sc = three_gbs();
    sc.gbs.truncate(1);
    for p in &short_trajectory(&sc).points {
        assert_eq!(b.predict_association(&sc, p).unwrap(), 0);
    }
}

#[test]
fn bundle_file_round_trips() {
    let b = quick_bundle(&repeated(10));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    b.save(&p).unwrap();
    assert_eq!(ModelBundle::load(&p).unwrap(), b);
    let text = std::fs::read_to_string(&p).unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
    std::fs::write(&p, text).unwrap();
    assert!(ModelBundle::load(&p).is_err());
}

#[test]
fn both_sources_share_schema_and_slot_count() {
    let s = three_gbs();
    let t = short_trajectory(&s);
    let b = quick_bundle(&repeated(10));
    let opt = evaluate_trajectory(&s, &t, AssociationPolicy::Closest, WeightSource::Optimizer, None).unwrap();
    let nn = evaluate_trajectory(&s, &t, AssociationPolicy::NnModel, WeightSource::Nn, Some(&b)).unwrap();
    assert_eq!(opt.len(), t.points.len());
    assert_eq!(nn.len(), opt.len());
    for (i, (a, c)) in opt.iter().zip(&nn).enumerate() {
        assert_eq!(a.slot, i);
        assert_eq!(c.slot, i);
        assert_eq!(a.source, "optimizer");
        assert_eq!(c.source, "nn");
        assert!(a.rate_bps >= 0.0 && c.rate_bps >= 0.0);
    }
    assert!(evaluate_trajectory(&s, &t, AssociationPolicy::Closest, WeightSource::Nn, None).is_err());
    assert!(evaluate_trajectory(&s, &t, AssociationPolicy::NnModel, WeightSource::Optimizer, None).is_err());
}

#[test]
fn zero_comm_weights_give_zero_rate() {
    let s = three_gbs();
    let t = short_trajectory(&s);
    let slots = evaluate_slots(&s, &t, AssociationPolicy::Closest, WeightSource::Optimizer, None).unwrap();
    for slot in &slots {
        let m = BeamformingMatrix {
            sensing: slot.matrix.sensing.clone(),
            comm: BeamWeights::zeros(100),
        };
        let r = record_for(
            &s,
            0,
            &slot.point,
            slot.record.gbs,
            AssociationPolicy::Closest,
            WeightSource::Optimizer,
            &m,
            slot.record.required_eirp_dbm,
        )
        .unwrap();
        assert_eq!(r.rate_bps, 0.0);
    }
}

#[test]
fn audited_sinr_matches_hand_composition() {
    let s = three_gbs();
    let t = short_trajectory(&s);
    let slots = evaluate_slots(&s, &t, AssociationPolicy::Closest, WeightSource::Optimizer, None).unwrap();
    let slot = &slots[1];
    let h = s.comm_channel(&slot.point, slot.record.gbs).unwrap();
    let dot = |w: &BeamWeights| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in h.entries.iter().zip(&w.entries) {
            acc += a.conj() * b * w.ppe_mw.sqrt();
        }
        acc.norm_sqr()
    };
    let sinr = dot(&slot.matrix.comm) / (s.channel.noise_power_mw + dot(&slot.matrix.sensing));
    assert!((10.0 * sinr.log10() - slot.record.sinr_db).abs() < 1e-9);
    let rate = s.channel.bandwidth_hz * (1.0 + sinr).log2();
    assert!((rate - slot.record.rate_bps).abs() <= 1e-9 * rate);
}

#[test]
fn two_outage_bars_per_policy() {
    let s = three_gbs();
    let t = short_trajectory(&s);
    let mut records = Vec::new();
    for p in [AssociationPolicy::Closest, AssociationPolicy::MinTargetAngle] {
        records.extend(evaluate_trajectory(&s, &t, p, WeightSource::Optimizer, None).unwrap());
    }
    let stats = eirp_stats_by_policy(&records, &[10.0, 15.0]).unwrap();
    assert_eq!(stats.len(), 2);
    for (_, st) in &stats {
        assert_eq!(st.outage.len(), 2);
        assert_eq!(st.ecdf.last().unwrap().1, 1.0);
    }
}
