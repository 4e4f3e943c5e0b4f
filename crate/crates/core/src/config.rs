//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored and
//! values may be wrapped in double quotes. Lists are comma separated and
//! ranges are written `lo, hi, step`. Unknown or repeated keys are errors.
//! Every key has a default (see [`RunConfig::default`]), so an empty file is
//! a valid configuration.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cvnn::loss::Loss;
use crate::cvnn::optim::{OptimizerKind, TrainConfig};
use crate::error::{domain, Error, Result};
use crate::geometry::{ArrayConfig, SourcePlacement};
use crate::pipeline::dataset::{DatasetSpec, Role};
use crate::pipeline::experiments::{MonteCarlo, MusicSettings, TrialCondition};
use crate::pipeline::train::ModelKind;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,

    pub n_elements: usize,
    pub spacing: f64,
    pub wavelength: f64,

    pub n_in: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub strict_fresnel: bool,
    pub train_distances: (f64, f64, f64),
    pub train_thetas: (f64, f64, f64),
    pub test_distances: (f64, f64, f64),
    pub test_thetas: (f64, f64, f64),

    pub model: ModelKind,
    pub checkpoint: Option<PathBuf>,
    pub tdnn_checkpoint: Option<PathBuf>,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: Loss,
    pub val_fraction: f64,

    /// `(theta_deg, range_lambda)` pairs for `simulate`, `music` and `beampattern`.
    pub sources: Vec<(f64, f64)>,
    pub music_theta_step: f64,
    pub music_ranges: (f64, f64, f64),
    pub beam_noise_var: f64,
    pub beam_theta_step: f64,

    pub trials: usize,
    pub mc_theta_max: f64,
    pub mc_distance: f64,
    pub include_music: bool,
    pub include_tdnn: bool,
    pub snr_list: Vec<f64>,
    pub snapshot_list: Vec<usize>,
    pub distance_list: Vec<f64>,
    pub antenna_list: Vec<usize>,
    pub direction_list: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            n_elements: 65,
            spacing: 0.5,
            wavelength: 0.0107,
            n_in: 33,
            snapshots: 100,
            snr_db: 10.0,
            strict_fresnel: false,
            train_distances: (400.0, 1600.0, 400.0),
            train_thetas: (-90.0, 90.0, 0.5),
            test_distances: (1000.0, 1000.0, 25.0),
            test_thetas: (-89.6, 89.6, 0.7),
            model: ModelKind::Cvnn,
            checkpoint: None,
            tdnn_checkpoint: None,
            optimizer: train.optimizer,
            learning_rate: train.learning_rate,
            adam_beta1: train.adam_beta1,
            adam_beta2: train.adam_beta2,
            adam_eps: train.adam_eps,
            batch_size: train.batch_size,
            epochs: train.epochs,
            loss: train.loss,
            val_fraction: 0.1,
            sources: vec![(-30.0, 300.0), (45.0, 600.0)],
            music_theta_step: 0.1,
            music_ranges: (200.0, 1800.0, 25.0),
            beam_noise_var: 0.1,
            beam_theta_step: 0.1,
            trials: 100,
            mc_theta_max: 60.0,
            mc_distance: 1000.0,
            include_music: true,
            include_tdnn: false,
            snr_list: (0..=10).map(|i| -10.0 + 2.0 * i as f64).collect(),
            snapshot_list: vec![10, 20, 50, 100, 200, 500],
            distance_list: vec![600.0, 800.0, 1000.0, 1200.0],
            antenna_list: vec![65, 97, 129],
            direction_list: vec![-60.0, -30.0, 0.0, 30.0, 60.0],
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "seed",
    "out_dir",
    "n_elements",
    "spacing",
    "wavelength",
    "n_in",
    "snapshots",
    "snr_db",
    "strict_fresnel",
    "train_distances",
    "train_thetas",
    "test_distances",
    "test_thetas",
    "model",
    "checkpoint",
    "tdnn_checkpoint",
    "optimizer",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "batch_size",
    "epochs",
    "loss",
    "val_fraction",
    "sources",
    "music_theta_step",
    "music_ranges",
    "beam_noise_var",
    "beam_theta_step",
    "trials",
    "mc_theta_max",
    "mc_distance",
    "include_music",
    "include_tdnn",
    "snr_list",
    "snapshot_list",
    "distance_list",
    "antenna_list",
    "direction_list",
];

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: Display,
{
    v.parse()
        .map_err(|e| Error::Parse(format!("{key}: cannot parse `{v}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(key, s))
        .collect()
}

fn parse_range(key: &str, v: &str) -> Result<(f64, f64, f64)> {
    match parse_list::<f64>(key, v)?[..] {
        [lo, hi, step] => Ok((lo, hi, step)),
        _ => Err(Error::Parse(format!("{key}: expected `lo, hi, step`, got `{v}`"))),
    }
}

fn parse_sources(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (t, r) = pair
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("{key}: expected `theta_deg:range`, got `{pair}`")))?;
            Ok((parse_scalar(key, t.trim())?, parse_scalar(key, r.trim())?))
        })
        .collect()
}

fn parse_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn range_str(r: (f64, f64, f64)) -> String {
    format!("{}, {}, {}", r.0, r.1, r.2)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_scalar(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "n_elements" => self.n_elements = parse_scalar(key, v)?,
            "spacing" => self.spacing = parse_scalar(key, v)?,
            "wavelength" => self.wavelength = parse_scalar(key, v)?,
            "n_in" => self.n_in = parse_scalar(key, v)?,
            "snapshots" => self.snapshots = parse_scalar(key, v)?,
            "snr_db" => self.snr_db = parse_scalar(key, v)?,
            "strict_fresnel" => self.strict_fresnel = parse_scalar(key, v)?,
            "train_distances" => self.train_distances = parse_range(key, v)?,
            "train_thetas" => self.train_thetas = parse_range(key, v)?,
            "test_distances" => self.test_distances = parse_range(key, v)?,
            "test_thetas" => self.test_thetas = parse_range(key, v)?,
            "model" => self.model = v.parse()?,
            "checkpoint" => self.checkpoint = parse_path(v),
            "tdnn_checkpoint" => self.tdnn_checkpoint = parse_path(v),
            "optimizer" => self.optimizer = v.parse()?,
            "learning_rate" => self.learning_rate = parse_scalar(key, v)?,
            "adam_beta1" => self.adam_beta1 = parse_scalar(key, v)?,
            "adam_beta2" => self.adam_beta2 = parse_scalar(key, v)?,
            "adam_eps" => self.adam_eps = parse_scalar(key, v)?,
            "batch_size" => self.batch_size = parse_scalar(key, v)?,
            "epochs" => self.epochs = parse_scalar(key, v)?,
            "loss" => self.loss = v.parse()?,
            "val_fraction" => self.val_fraction = parse_scalar(key, v)?,
            "sources" => self.sources = parse_sources(key, v)?,
            "music_theta_step" => self.music_theta_step = parse_scalar(key, v)?,
            "music_ranges" => self.music_ranges = parse_range(key, v)?,
            "beam_noise_var" => self.beam_noise_var = parse_scalar(key, v)?,
            "beam_theta_step" => self.beam_theta_step = parse_scalar(key, v)?,
            "trials" => self.trials = parse_scalar(key, v)?,
            "mc_theta_max" => self.mc_theta_max = parse_scalar(key, v)?,
            "mc_distance" => self.mc_distance = parse_scalar(key, v)?,
            "include_music" => self.include_music = parse_scalar(key, v)?,
            "include_tdnn" => self.include_tdnn = parse_scalar(key, v)?,
            "snr_list" => self.snr_list = parse_list(key, v)?,
            "snapshot_list" => self.snapshot_list = parse_list(key, v)?,
            "distance_list" => self.distance_list = parse_list(key, v)?,
            "antenna_list" => self.antenna_list = parse_list(key, v)?,
            "direction_list" => self.direction_list = parse_list(key, v)?,
            _ => return Err(Error::Parse(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if let Some(prev) = seen.insert(key.to_string(), i + 1) {
                return Err(Error::Parse(format!("line {}: `{key}` already set on line {prev}", i + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Parse(format!("line {}: {}", i + 1, strip_prefix(e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Resolved settings as `key -> value`, in the syntax accepted by [`Self::parse`].
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let sources = self
            .sources
            .iter()
            .map(|(t, r)| format!("{t}:{r}"))
            .collect::<Vec<_>>()
            .join(", ");
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("n_elements", self.n_elements.to_string()),
            ("spacing", self.spacing.to_string()),
            ("wavelength", self.wavelength.to_string()),
            ("n_in", self.n_in.to_string()),
            ("snapshots", self.snapshots.to_string()),
            ("snr_db", self.snr_db.to_string()),
            ("strict_fresnel", self.strict_fresnel.to_string()),
            ("train_distances", range_str(self.train_distances)),
            ("train_thetas", range_str(self.train_thetas)),
            ("test_distances", range_str(self.test_distances)),
            ("test_thetas", range_str(self.test_thetas)),
            ("model", self.model.name().into()),
            ("checkpoint", path(&self.checkpoint)),
            ("tdnn_checkpoint", path(&self.tdnn_checkpoint)),
            (
                "optimizer",
                match self.optimizer {
                    OptimizerKind::Adam => "adam".into(),
                    OptimizerKind::Sgd => "sgd".into(),
                },
            ),
            ("learning_rate", self.learning_rate.to_string()),
            ("adam_beta1", self.adam_beta1.to_string()),
            ("adam_beta2", self.adam_beta2.to_string()),
            ("adam_eps", self.adam_eps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            (
                "loss",
                match self.loss {
                    Loss::Mae => "mae".into(),
                    Loss::Mse => "mse".into(),
                },
            ),
            ("val_fraction", self.val_fraction.to_string()),
            ("sources", sources),
            ("music_theta_step", self.music_theta_step.to_string()),
            ("music_ranges", range_str(self.music_ranges)),
            ("beam_noise_var", self.beam_noise_var.to_string()),
            ("beam_theta_step", self.beam_theta_step.to_string()),
            ("trials", self.trials.to_string()),
            ("mc_theta_max", self.mc_theta_max.to_string()),
            ("mc_distance", self.mc_distance.to_string()),
            ("include_music", self.include_music.to_string()),
            ("include_tdnn", self.include_tdnn.to_string()),
            ("snr_list", join(&self.snr_list)),
            ("snapshot_list", join(&self.snapshot_list)),
            ("distance_list", join(&self.distance_list)),
            ("antenna_list", join(&self.antenna_list)),
            ("direction_list", join(&self.direction_list)),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The resolved configuration as a parseable file, keys in documentation order.
    pub fn render(&self) -> String {
        let pairs = self.to_pairs();
        KEYS.iter().map(|k| format!("{k} = {}\n", pairs[*k])).collect()
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.n_elements, self.spacing, self.wavelength)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            batch_size: self.batch_size,
            epochs: self.epochs,
            loss: self.loss,
            seed: self.seed,
        }
    }

    pub fn dataset(&self, role: Role) -> Result<DatasetSpec> {
        let (distance_range, theta_range) = match role {
            Role::Train => (self.train_distances, self.train_thetas),
            Role::Test => (self.test_distances, self.test_thetas),
        };
        Ok(DatasetSpec {
            distance_range,
            theta_range,
            snapshots: self.snapshots,
            snr_db: self.snr_db,
            seed: self.seed,
            n_in: self.n_in,
            array: self.array()?,
            role,
            strict_fresnel: self.strict_fresnel,
        })
    }

    pub fn source_placements(&self) -> Result<Vec<SourcePlacement>> {
        self.sources
            .iter()
            .map(|&(t, r)| SourcePlacement::from_degrees(t, r))
            .collect()
    }

    pub fn music_settings(&self) -> MusicSettings {
        MusicSettings {
            theta_step_deg: self.music_theta_step,
            range: self.music_ranges,
        }
    }

    pub fn monte_carlo(&self) -> MonteCarlo {
        MonteCarlo {
            trials: self.trials,
            seed: self.seed,
            theta_max_deg: self.mc_theta_max,
        }
    }

    pub fn trial_condition(&self) -> Result<TrialCondition> {
        Ok(TrialCondition {
            array: self.array()?,
            n_in: self.n_in,
            snr_db: self.snr_db,
            snapshots: self.snapshots,
            distance: self.mc_distance,
        })
    }

    /// Cross-field checks that single-key parsing cannot catch.
    pub fn validate(&self) -> Result<()> {
        let array = self.array()?;
        if self.n_in == 0 || self.n_in > array.n_elements() {
            return domain(format!("n_in = {} must lie in 1..={}", self.n_in, array.n_elements()));
        }
        if let Some(n) = self.antenna_list.iter().find(|&&n| n < self.n_in) {
            return domain(format!("antenna_list entry {n} is smaller than n_in = {}", self.n_in));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return domain(format!("val_fraction = {} must lie in [0, 1)", self.val_fraction));
        }
        if self.trials == 0 {
            return domain("trials must be positive");
        }
        self.train_config().validate()?;
        self.source_placements()?;
        Ok(())
    }

    /// Checkpoint path: the configured one or `out_dir/checkpoint.json`.
    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join("checkpoint.json"))
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Parse(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_field_validation() {
        assert!(RunConfig::default().validate().is_ok());
        for bad in ["n_in = 70", "n_in = 0", "antenna_list = 17, 65", "val_fraction = 1", "trials = 0", "epochs = 0"] {
            let cfg = RunConfig::parse(bad).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Domain(_))), "{bad}");
        }
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn values_and_comments() {
        let cfg = RunConfig::parse(
            "seed = 7 # trailing\nloss = mse\nsnr_list = -4, 0, 4\nsources = \"10:500, -20:700\"\ntrain_thetas = -45, 45, 1\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.loss, Loss::Mse);
        assert_eq!(cfg.snr_list, vec![-4.0, 0.0, 4.0]);
        assert_eq!(cfg.sources, vec![(10.0, 500.0), (-20.0, 700.0)]);
        assert_eq!(cfg.train_thetas, (-45.0, 45.0, 1.0));
    }

    #[test]
    fn errors() {
        for bad in [
            "sed = 1",
            "seed 1",
            "seed = one",
            "seed = 1\nseed = 2",
            "train_thetas = 1, 2",
            "model = svr",
            "sources = 10",
        ] {
            let err = RunConfig::parse(bad).unwrap_err();
            assert!(matches!(err, Error::Parse(_)), "{bad}: {err}");
        }
        assert!(RunConfig::parse("sed = 1").unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn render_round_trips() {
        let cfg = RunConfig {
            seed: 99,
            checkpoint: Some(PathBuf::from("m.json")),
            snapshot_list: vec![5, 6],
            ..RunConfig::default()
        };
        let text = cfg.render();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        assert_eq!(text.lines().count(), KEYS.len());
    }

    #[test]
    fn defaults_match_desk_scale() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.dataset(Role::Train).unwrap(), DatasetSpec::desk_train(0));
        assert_eq!(cfg.dataset(Role::Test).unwrap(), DatasetSpec::desk_test(0));
        assert_eq!(cfg.train_config(), TrainConfig::default());
    }
}
