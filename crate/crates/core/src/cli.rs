//! `nfdoa` command-line interface.
//!
//! Every command reads an optional flat config file, writes its outputs and a
//! `<command>.manifest.json` under the output directory and prints a short
//! summary. Failures print one JSON line `{"error": kind, "message": ...}` to
//! stderr and exit with 2 (configuration), 3 (numeric) or 4 (I/O).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::baselines::music::near_field_music;
use crate::baselines::tdnn::tdnn;
use crate::config::RunConfig;
use crate::covariance::sample_covariance;
use crate::cvnn::checkpoint::Checkpoint;
use crate::cvnn::flops::flops_count;
use crate::cvnn::network::{cvnn, Network};
use crate::error::{Error, Result};
use crate::pipeline::dataset::{build_dataset, Dataset, Role};
use crate::pipeline::eval::{evaluate, write_predictions_csv, Condition};
use crate::pipeline::experiments::{self, Methods};
use crate::pipeline::manifest::ManifestBuilder;
use crate::pipeline::train::{train_model, write_history_csv, ModelKind, TrainOutcome};
use crate::sim::{received_snapshots, write_snapshots, NoiseSpec};

#[derive(Debug, Parser)]
#[command(name = "nfdoa", version, about = "Near-field DoA estimation with complex-valued networks")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Simulate snapshots for `sources` and write the train/test feature sets.
    Simulate,
    /// Train the configured model and write a checkpoint and its history.
    Train,
    /// Evaluate a checkpoint on the test set.
    Eval,
    /// Run near-field 2-D MUSIC on snapshots of `sources`.
    Music,
    /// Far-field MUSIC spectra of the raw covariance and of its VCM.
    Beampattern,
    /// FLOP counts of the complex network and the time-delay baseline.
    Flops,
    /// Run one experiment suite.
    Experiment {
        #[arg(value_enum)]
        name: ExperimentName,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ExperimentName {
    RmseVsSnr,
    RmseVsSnapshots,
    RmseVsDistance,
    CropInvariance,
    Boxplot,
    Beampattern,
}

impl ExperimentName {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentName::RmseVsSnr => "rmse_vs_snr",
            ExperimentName::RmseVsSnapshots => "rmse_vs_snapshots",
            ExperimentName::RmseVsDistance => "rmse_vs_distance",
            ExperimentName::CropInvariance => "crop_invariance",
            ExperimentName::Boxplot => "boxplot",
            ExperimentName::Beampattern => "beampattern",
        }
    }
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Simulate => "simulate".into(),
            Command::Train => "train".into(),
            Command::Eval => "eval".into(),
            Command::Music => "music".into(),
            Command::Beampattern => "beampattern".into(),
            Command::Flops => "flops".into(),
            Command::Experiment { name } => format!("experiment_{}", name.as_str()),
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Domain(_) => 2,
        Error::Numeric(_) | Error::Shape(_) => 3,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 4,
    }
}

/// One-line machine-readable description of an error.
pub fn error_json(e: &Error) -> String {
    let kind = match exit_code(e) {
        2 => "config",
        3 => "numeric",
        _ => "io",
    };
    json!({ "error": kind, "message": e.to_string() }).to_string()
}

/// Applies the config file and command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args`, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    if cli.dry_run {
        print!("{}", cfg.render());
        return Ok(());
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut manifest = ManifestBuilder::new(&cli.command.name(), cfg.seed, cfg.to_pairs());
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg, &mut manifest)?,
        Command::Train => cmd_train(&cfg, &mut manifest)?,
        Command::Eval => cmd_eval(&cfg, &mut manifest)?,
        Command::Music => cmd_music(&cfg, &mut manifest)?,
        Command::Beampattern => cmd_beampattern(&cfg, &mut manifest)?,
        Command::Flops => cmd_flops(&cfg, &mut manifest)?,
        Command::Experiment { name } => cmd_experiment(*name, &cfg, &mut manifest)?,
    }
    manifest.finish(&cfg.out_dir)?;
    Ok(())
}

fn create(dir: &Path, name: &str, manifest: &mut ManifestBuilder) -> Result<BufWriter<File>> {
    manifest.output(name);
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize, manifest: &mut ManifestBuilder) -> Result<()> {
    let mut w = create(dir, name, manifest)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// CSV with header `theta_rad,range_lambda,re_0,im_0,...`.
fn write_dataset_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["theta_rad".to_string(), "range_lambda".to_string()];
    for i in 0..data.n_in {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    out.write_record(&header)?;
    for s in &data.samples {
        let mut rec = vec![format!("{}", s.theta), format!("{}", s.range)];
        for z in &s.feature {
            rec.push(format!("{}", z.re));
            rec.push(format!("{}", z.im));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let array = cfg.array()?;
    let sources = cfg.source_placements()?;
    let set = received_snapshots(&sources, &array, cfg.snapshots, NoiseSpec::new(cfg.snr_db, cfg.seed))?;
    let mut w = create(&cfg.out_dir, "snapshots.bin", manifest)?;
    write_snapshots(&set, &mut w)?;
    w.flush()?;
    write_json(&cfg.out_dir, "sources.json", &sources, manifest)?;
    for (role, name) in [(Role::Train, "train_dataset.csv"), (Role::Test, "test_dataset.csv")] {
        let data = build_dataset(&cfg.dataset(role)?)?;
        write_dataset_csv(&data, create(&cfg.out_dir, name, manifest)?)?;
        println!("{name}: {} samples", data.len());
    }
    println!("snapshots.bin: N={} K={} M={}", array.n_elements(), cfg.snapshots, sources.len());
    Ok(())
}

fn train_kind(kind: ModelKind, cfg: &RunConfig) -> Result<TrainOutcome> {
    let data = build_dataset(&cfg.dataset(Role::Train)?)?;
    let net = kind.build(cfg.n_in, cfg.seed)?;
    train_model(net, &data, &cfg.train_config(), cfg.val_fraction)
}

fn cmd_train(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let out = train_kind(cfg.model, cfg)?;
    let mut ck = Checkpoint::from_network(&out.network, Some(cfg.train_config()), cfg.seed);
    let last = out.history.last().expect("at least one epoch");
    ck.metrics.insert("train_loss".into(), last.train_loss);
    ck.metrics.insert("train_mae".into(), last.train_mae);
    if let Some(v) = last.val_mae {
        ck.metrics.insert("val_mae".into(), v);
    }
    manifest.output("checkpoint.json");
    ck.save(&cfg.out_dir.join("checkpoint.json"))?;
    write_history_csv(&out.history, create(&cfg.out_dir, "history.csv", manifest)?)?;
    println!(
        "trained {} on {} samples ({} validation): final train MAE {:.5} rad",
        cfg.model.name(),
        out.n_train,
        out.n_val,
        last.train_mae
    );
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let net = Checkpoint::load(&cfg.checkpoint_path())?.to_network()?;
    let data = build_dataset(&cfg.dataset(Role::Test)?)?;
    let distances = cfg.dataset(Role::Test)?.distances()?;
    let condition = Condition {
        snr_db: cfg.snr_db,
        snapshots: cfg.snapshots,
        distance: (distances.len() == 1).then(|| distances[0]),
        n_antennas: cfg.n_elements,
    };
    let report = evaluate(&net, &data, condition)?;
    write_json(&cfg.out_dir, "eval_report.json", &report, manifest)?;
    write_predictions_csv(&data, &report, create(&cfg.out_dir, "eval_predictions.csv", manifest)?)?;
    println!("rmse_deg = {:.4}, mae_deg = {:.4} over {} samples", report.rmse_deg, report.mae_deg, data.len());
    Ok(())
}

fn cmd_music(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let array = cfg.array()?;
    let sources = cfg.source_placements()?;
    let set = received_snapshots(&sources, &array, cfg.snapshots, NoiseSpec::new(cfg.snr_db, cfg.seed))?;
    let grid = cfg.music_settings().grid(&array)?;
    let res = near_field_music(&sample_covariance(&set)?, &array, sources.len(), &grid)?;
    res.write_csv(&grid, create(&cfg.out_dir, "music_spectrum.csv", manifest)?)?;
    let estimates: Vec<_> = res
        .estimates
        .iter()
        .map(|e| json!({ "theta_deg": e.theta.to_degrees(), "range_lambda": e.range, "power": e.power }))
        .collect();
    write_json(&cfg.out_dir, "music_estimates.json", &estimates, manifest)?;
    for e in &res.estimates {
        println!("estimate: theta = {:.3} deg, range = {:.1} lambda", e.theta.to_degrees(), e.range);
    }
    Ok(())
}

fn cmd_beampattern(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let bp = experiments::beampattern(&cfg.array()?, &cfg.source_placements()?, cfg.beam_noise_var, cfg.beam_theta_step)?;
    bp.write_csv(create(&cfg.out_dir, "beampattern.csv", manifest)?)?;
    let peaks: Vec<f64> = bp.vcm_peaks(cfg.sources.len()).iter().map(|t| t.to_degrees()).collect();
    println!("vcm peaks (deg): {peaks:?}");
    Ok(())
}

fn cmd_flops(cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let c = flops_count(&cvnn(cfg.n_in)?);
    let t = flops_count(&tdnn(cfg.n_in)?);
    write_json(
        &cfg.out_dir,
        "flops.json",
        &json!({ "n_in": cfg.n_in, "cvnn": c, "tdnn": t }),
        manifest,
    )?;
    println!("cvnn: {c} FLOPs ({:.2}M)", c as f64 / 1e6);
    println!("tdnn: {t} FLOPs ({:.2}M)", t as f64 / 1e6);
    Ok(())
}

fn load_or_train(kind: ModelKind, path: Option<&PathBuf>, cfg: &RunConfig) -> Result<Network> {
    match path {
        Some(p) => Checkpoint::load(p)?.to_network(),
        None => {
            log::info!("no {} checkpoint configured, training one", kind.name());
            Ok(train_kind(kind, cfg)?.network)
        }
    }
}

fn cmd_experiment(name: ExperimentName, cfg: &RunConfig, manifest: &mut ManifestBuilder) -> Result<()> {
    let file = format!("experiment_{}.csv", name.as_str());
    if name == ExperimentName::Beampattern {
        let bp = experiments::beampattern(&cfg.array()?, &cfg.source_placements()?, cfg.beam_noise_var, cfg.beam_theta_step)?;
        bp.write_csv(create(&cfg.out_dir, &file, manifest)?)?;
        println!("{file}: {} angles", bp.theta.len());
        return Ok(());
    }
    let cv = load_or_train(ModelKind::Cvnn, cfg.checkpoint.as_ref(), cfg)?;
    let td = if cfg.include_tdnn {
        Some(load_or_train(ModelKind::Tdnn, cfg.tdnn_checkpoint.as_ref(), cfg)?)
    } else {
        None
    };
    let methods = Methods {
        cvnn: Some(&cv),
        tdnn: td.as_ref(),
        music: cfg.include_music.then(|| cfg.music_settings()),
    };
    let base = cfg.trial_condition()?;
    let mc = cfg.monte_carlo();
    let out = create(&cfg.out_dir, &file, manifest)?;
    let rows = match name {
        ExperimentName::RmseVsSnr => experiments::rmse_vs_snr(&methods, &base, &cfg.snr_list, &mc)?,
        ExperimentName::RmseVsSnapshots => experiments::rmse_vs_snapshots(&methods, &base, &cfg.snapshot_list, &mc)?,
        ExperimentName::RmseVsDistance => experiments::rmse_vs_distance(&methods, &base, &cfg.distance_list, &mc)?,
        ExperimentName::CropInvariance => experiments::crop_invariance(&methods, &base, &cfg.antenna_list, &mc)?,
        ExperimentName::Boxplot => {
            let rows = experiments::boxplot(&methods, &base, &cfg.direction_list, &mc)?;
            experiments::write_box_csv(&rows, out)?;
            println!("{file}: {} rows", rows.len());
            return Ok(());
        }
        ExperimentName::Beampattern => unreachable!("handled above"),
    };
    experiments::write_rows_csv(&rows, out)?;
    for r in &rows {
        println!("{} = {} {}: rmse {:.4} deg", r.parameter, r.value, r.method, r.rmse_deg);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        let line = error_json(&Error::Parse("bad key".into()));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "config");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn parses_commands_and_globals() {
        let cli = Cli::try_parse_from(["nfdoa", "experiment", "rmse_vs_snr", "--seed", "3", "--dry-run"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Experiment {
                name: ExperimentName::RmseVsSnr
            }
        ));
        assert_eq!(cli.seed, Some(3));
        assert!(cli.dry_run);
        assert!(Cli::try_parse_from(["nfdoa", "experiment", "nope"]).is_err());
    }
}
