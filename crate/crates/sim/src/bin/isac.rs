use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isac_core::beampattern::{pattern_cut, pattern_grid, synthesize, CutPlane, PatternCut, SynthesisRequest};
use isac_core::geometry::{DirectionAngles, RotationAngles};
use isac_core::neuralnet::TrainConfig;
use isac_core::scenario::{generate_trajectories, AssociationPolicy};
use isac_sim::dataset::{generate_dataset, parse_policy, read_jsonl, write_jsonl};
use isac_sim::eval::{evaluate_trajectory, read_records, write_records, WeightSource};
use isac_sim::model::{train_models, write_reports, ModelBundle};
use isac_sim::scenario_file::{load_scenario, ScenarioFile};
use isac_sim::stats::{eirp_stats_by_policy, write_stats};
use isac_sim::{Result, SimError};
use log::info;

#[derive(Parser)]
#[command(name = "isac", version, about = "UAV ISAC beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario files.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Training datasets.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
    /// Train the beamformer and association networks.
    Train(TrainArgs),
    /// Run the beam optimizer for one pointing direction.
    Synthesize(SynthArgs),
    /// Trajectory evaluation and statistics.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Write the default scenario.
    Init {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    Generate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trajectories: usize,
        /// closest | angle | sinr | optimal
        #[arg(long)]
        policy: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.7)]
    split: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Pointing azimuth, degrees.
    #[arg(long, allow_hyphen_values = true)]
    az: f64,
    /// Pointing elevation (angle from nadir), degrees.
    #[arg(long, allow_hyphen_values = true)]
    el: f64,
    #[arg(long)]
    sll_az: f64,
    #[arg(long)]
    sll_el: f64,
    #[arg(long, allow_hyphen_values = true)]
    eirp: f64,
    /// Null direction `az,el` in degrees; repeatable.
    #[arg(long = "null", allow_hyphen_values = true)]
    nulls: Vec<String>,
    /// Azimuth cut CSV; the elevation cut goes to `<stem>_elevation.csv`.
    #[arg(long)]
    out_cuts: Option<PathBuf>,
    /// Optional full pattern grid CSV.
    #[arg(long)]
    out_grid: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    Trajectory {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// closest | angle | sinr | optimal | nn
        #[arg(long)]
        policy: String,
        /// optimizer | nn
        #[arg(long)]
        source: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trajectories: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Eirp {
        #[arg(long)]
        records: PathBuf,
        /// Comma-separated thresholds, dBm.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thresholds: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Scenario {
            command: ScenarioCommand::Init { out },
        } => ScenarioFile::paper_default().save(&out),
        Command::Dataset {
            command:
                DatasetCommand::Generate {
                    scenario,
                    trajectories,
                    policy,
                    seed,
                    out,
                },
        } => {
            let (s, hash) = load_scenario(&scenario)?;
            let policy = parse_policy(&policy)?;
            let trajs = generate_trajectories(&s, trajectories, seed)?;
            let (samples, summary) = generate_dataset(&s, &hash, &trajs, policy)?;
            write_jsonl(&out, &samples)?;
            println!(
                "{} samples from {} points ({} skipped)",
                summary.kept, summary.points, summary.skipped
            );
            Ok(())
        }
        Command::Train(a) => {
            let samples = read_jsonl(&a.data)?;
            let config = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch,
                learning_rate: a.lr,
                train_fraction: a.split,
                seed: a.seed,
                ..TrainConfig::default()
            };
            let outcome = train_models(&samples, &config)?;
            outcome.bundle.save(&a.out)?;
            let (beam, assoc) = write_reports(&a.out, &outcome)?;
            info!("reports written to {} and {}", beam.display(), assoc.display());
            if let Some(last) = outcome.beamformer_report.epochs.last() {
                println!(
                    "beamformer: val_loss {:.6e}, val_beampattern_error {:.6e}",
                    last.val_loss,
                    last.val_metric.unwrap_or(f64::NAN)
                );
            }
            if let Some(last) = outcome.association_report.epochs.last() {
                println!("association: val_accuracy {:.4}", last.val_metric.unwrap_or(f64::NAN));
            }
            Ok(())
        }
        Command::Synthesize(a) => synthesize_cmd(a),
        Command::Eval { command } => match command {
            EvalCommand::Trajectory {
                scenario,
                bundle,
                policy,
                source,
                seed,
                trajectories,
                out,
            } => {
                let (s, hash) = load_scenario(&scenario)?;
                let policy = parse_policy(&policy)?;
                let source = WeightSource::parse(&source)?;
                let bundle = bundle.as_deref().map(ModelBundle::load).transpose()?;
                if let Some(b) = &bundle {
                    if b.scenario_hash != hash {
                        return Err(SimError::Format("bundle was trained on a different scenario".into()));
                    }
                }
                if policy == AssociationPolicy::NnModel && bundle.is_none() {
                    return Err(SimError::Format("the nn policy needs --bundle".into()));
                }
                let mut records = Vec::new();
                for t in generate_trajectories(&s, trajectories, seed)? {
                    records.extend(evaluate_trajectory(&s, &t, policy, source, bundle.as_ref())?);
                }
                write_records(&out, &records)
            }
            EvalCommand::Eirp { records, thresholds, out } => {
                let r = read_records(&records)?;
                let stats = eirp_stats_by_policy(&r, &thresholds)?;
                write_stats(&out, &stats)?;
                for (p, st) in &stats {
                    let o: Vec<String> = st.outage.iter().map(|(t, f)| format!("{t} dBm: {f:.3}")).collect();
                    println!("{p}: mean rate {:.4e} bit/s, outage {}", st.mean_rate_bps, o.join(", "));
                }
                Ok(())
            }
        },
    }
}

fn parse_null(text: &str) -> Result<DirectionAngles> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || SimError::Format(format!("null '{text}' is not 'az,el'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let az: f64 = parts[0].parse().map_err(|_| bad())?;
    let el: f64 = parts[1].parse().map_err(|_| bad())?;
    Ok(DirectionAngles::from_degrees(el, az))
}

fn elevation_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_elevation{ext}"))
}

/// Normalized cut, 0 dB at the peak.
fn write_cut(path: &Path, cut: &PatternCut) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["angle_deg", "gain_db"])?;
    for (angle, gain_db) in &cut.samples {
        w.write_record([angle.to_degrees().to_string(), gain_db.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn synthesize_cmd(a: SynthArgs) -> Result<()> {
    let (s, _) = load_scenario(&a.scenario)?;
    let pointing = DirectionAngles::from_degrees(a.el, a.az);
    let nulls = a.nulls.iter().map(|n| parse_null(n)).collect::<Result<Vec<_>>>()?;
    let mut req = SynthesisRequest::new(pointing, a.sll_az, a.sll_el, a.eirp).with_nulls(nulls);
    req.k1 = s.synthesis.k1;
    req.k2 = s.synthesis.k2;
    req.eta = s.synthesis.eta;
    req.counter_max = s.synthesis.counter_max;
    let orientation = s.array_orientation(RotationAngles::IDENTITY);
    let r = synthesize(&req, &s.array, orientation)?;
    println!(
        "converged: {}\nachieved_sll_az_db: {:.4}\nachieved_sll_el_db: {:.4}\nachieved_eirp_dbm: {:.4}\nactive_elements: {} ({}x{})\nppe_mw: {:.6e}\niterations: {}",
        r.converged,
        r.achieved_sll_az_db,
        r.achieved_sll_el_db,
        r.achieved_eirp_dbm,
        r.active_elements(),
        r.active_rows,
        r.active_cols,
        r.weights.ppe_mw,
        r.iterations
    );
    if let Some(path) = &a.out_cuts {
        let az = pattern_cut(&r.weights, &s.array, orientation, CutPlane::Azimuth, pointing)?;
        let el = pattern_cut(&r.weights, &s.array, orientation, CutPlane::Elevation, pointing)?;
        write_cut(path, &az)?;
        write_cut(&elevation_path(path), &el)?;
    }
    if let Some(path) = &a.out_grid {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["az_deg", "el_deg", "gain_db"])?;
        for g in pattern_grid(&r.weights, &s.array, orientation, 1.0)? {
            w.write_record([g.az_deg.to_string(), g.el_deg.to_string(), g.gain_db.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}
