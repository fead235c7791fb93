//! Training loops: uniform forward walks (`alg1`) or reversed-score forward
//! walks driven by a per-epoch snapshot of the model (`alg3`).

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diffusion::{sample_trajectories, ForwardProcess, StartDistribution};
use crate::error::{Error, Result};
use crate::group::{FamilyKind, GraphSpec};
use crate::model::{
    load_checkpoint, loss_and_grad_sharded, loss_value, save_checkpoint, AdamState, Checkpoint, ModelConfig,
    ScoreModel,
};

pub const METRICS_HEADER: &str = "step,trajectories,loss,seconds";
pub const CHECKPOINT_FILE: &str = "model.cdsm";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Alg1,
    Alg3,
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg3" => Ok(Algorithm::Alg3),
            _ => Err(Error::Usage(format!("algorithm must be alg1 or alg3, got {s:?}"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg3 => "alg3",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from `lr` to `lr / 20` over the run.
    Cosine,
}

impl FromStr for LrSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            _ => Err(Error::Usage(format!("lr_schedule must be constant or cosine, got {s:?}"))),
        }
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Cosine => "cosine",
        })
    }
}

/// Every training setting. Read from `key=value` lines; see [`TrainConfig::KEYS`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub family: FamilyKind,
    /// Prime for sl2p.
    pub p: Option<u32>,
    /// Order for the cyclic generic-perm shortcut.
    pub n: Option<usize>,
    pub generators: Option<PathBuf>,
    pub goals: Option<PathBuf>,
    /// Horizon T. Required except for cube2 (default 20).
    pub horizon: Option<usize>,
    pub algorithm: Algorithm,
    pub batch_size: usize,
    pub trajectories: usize,
    /// alg3 refreshes its sampling snapshot every this many trajectories.
    pub epoch_trajectories: usize,
    pub lr: f64,
    pub lr_schedule: LrSchedule,
    pub scramble: bool,
    pub scramble_n_max: usize,
    pub seed: u64,
    pub hidden: usize,
    pub blocks: usize,
    pub time_embed: usize,
    /// Gradient shards evaluated in parallel (1 is fully deterministic).
    pub shards: usize,
    pub log_every: usize,
    /// Steps between checkpoints; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub out_dir: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    /// Write measured seconds to the metrics log (0 otherwise).
    pub wall_clock: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            family: FamilyKind::Sl2p,
            p: None,
            n: None,
            generators: None,
            goals: None,
            horizon: None,
            algorithm: Algorithm::Alg1,
            batch_size: 100,
            trajectories: 100_000,
            epoch_trajectories: 100_000,
            lr: 1e-3,
            lr_schedule: LrSchedule::Constant,
            scramble: false,
            scramble_n_max: 1,
            seed: 0,
            hidden: crate::model::DEFAULT_HIDDEN,
            blocks: crate::model::DEFAULT_BLOCKS,
            time_embed: crate::model::DEFAULT_TIME_EMBED,
            shards: 1,
            log_every: 100,
            checkpoint_every: 0,
            out_dir: None,
            resume: None,
            wall_clock: true,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Usage(format!("bad value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Usage(format!("bad value {v:?} for {key}; expected true or false"))),
    }
}

impl TrainConfig {
    pub const KEYS: &'static [&'static str] = &[
        "family",
        "p",
        "n",
        "generators",
        "goals",
        "T",
        "alg",
        "batch_size",
        "trajectories",
        "epoch_trajectories",
        "lr",
        "lr_schedule",
        "scramble",
        "scramble_n_max",
        "seed",
        "hidden",
        "blocks",
        "time_embed",
        "shards",
        "log_every",
        "checkpoint_every",
        "out_dir",
        "resume",
        "wall_clock",
    ];

    /// Sets one key. Unknown keys are usage errors listing the valid ones.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "family" => self.family = FamilyKind::parse(v).map_err(|e| Error::Usage(e.to_string()))?,
            "p" => self.p = Some(parse_num(key, v)?),
            "n" => self.n = Some(parse_num(key, v)?),
            "generators" => self.generators = Some(PathBuf::from(v)),
            "goals" => self.goals = Some(PathBuf::from(v)),
            "T" => self.horizon = Some(parse_num(key, v)?),
            "alg" => self.algorithm = v.parse()?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "trajectories" => self.trajectories = parse_num(key, v)?,
            "epoch_trajectories" => self.epoch_trajectories = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "lr_schedule" => self.lr_schedule = v.parse()?,
            "scramble" => self.scramble = parse_bool(key, v)?,
            "scramble_n_max" => self.scramble_n_max = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "hidden" => self.hidden = parse_num(key, v)?,
            "blocks" => self.blocks = parse_num(key, v)?,
            "time_embed" => self.time_embed = parse_num(key, v)?,
            "shards" => self.shards = parse_num(key, v)?,
            "log_every" => self.log_every = parse_num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, v)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            "resume" => self.resume = Some(PathBuf::from(v)),
            "wall_clock" => self.wall_clock = parse_bool(key, v)?,
            other => {
                return Err(Error::Usage(format!(
                    "unknown config key {other:?}; valid keys: {}",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {} is not key=value: {line:?}", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(&fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// `key=value` lines that reproduce this config.
    pub fn to_text(&self) -> String {
        let mut lines = vec![format!("family={}", self.family.as_str())];
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let optional = [
            ("p", self.p.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("generators", path(&self.generators)),
            ("goals", path(&self.goals)),
            ("T", self.horizon.map(|v| v.to_string())),
            ("out_dir", path(&self.out_dir)),
            ("resume", path(&self.resume)),
        ];
        for (k, v) in optional {
            if let Some(v) = v {
                lines.push(format!("{k}={v}"));
            }
        }
        lines.extend([
            format!("alg={}", self.algorithm),
            format!("batch_size={}", self.batch_size),
            format!("trajectories={}", self.trajectories),
            format!("epoch_trajectories={}", self.epoch_trajectories),
            format!("lr={}", self.lr),
            format!("lr_schedule={}", self.lr_schedule),
            format!("scramble={}", self.scramble),
            format!("scramble_n_max={}", self.scramble_n_max),
            format!("seed={}", self.seed),
            format!("hidden={}", self.hidden),
            format!("blocks={}", self.blocks),
            format!("time_embed={}", self.time_embed),
            format!("shards={}", self.shards),
            format!("log_every={}", self.log_every),
            format!("checkpoint_every={}", self.checkpoint_every),
            format!("wall_clock={}", self.wall_clock),
        ]);
        lines.join("\n") + "\n"
    }

    /// The horizon, applying the cube2 default.
    pub fn resolved_horizon(&self) -> Result<usize> {
        match (self.horizon, self.family) {
            (Some(0), _) => Err(Error::Usage("T must be at least 1".into())),
            (Some(t), _) => Ok(t),
            (None, FamilyKind::Cube2) => Ok(20),
            (None, _) => Err(Error::Usage("T (horizon) is required for this family".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_horizon()?;
        if self.batch_size == 0 || self.trajectories == 0 || self.epoch_trajectories == 0 {
            return Err(Error::Usage("batch_size, trajectories and epoch_trajectories must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Usage("lr must be positive".into()));
        }
        if self.hidden == 0 || self.time_embed == 0 || self.shards == 0 || self.log_every == 0 {
            return Err(Error::Usage("hidden, time_embed, shards and log_every must be positive".into()));
        }
        Ok(())
    }

    /// Builds the graph described by the family keys.
    pub fn spec(&self) -> Result<GraphSpec> {
        let spec = match self.family {
            FamilyKind::Cube3 => GraphSpec::cube3(),
            FamilyKind::Cube2 => GraphSpec::cube2(),
            FamilyKind::Sl2p => GraphSpec::sl2p(self.p.ok_or_else(|| Error::Usage("sl2p needs p".into()))?)?,
            FamilyKind::GenericPerm => match (&self.generators, self.n) {
                (Some(path), _) => GraphSpec::from_generator_file(path)?,
                (None, Some(n)) => GraphSpec::cyclic(n)?,
                (None, None) => {
                    return Err(Error::Usage("generic-perm needs a generators file or n for the cyclic group".into()))
                }
            },
        };
        match &self.goals {
            Some(path) => spec.with_goal_file(path),
            None => Ok(spec),
        }
    }

    pub fn model_config(&self, spec: &GraphSpec) -> ModelConfig {
        ModelConfig::for_spec(spec).hidden(self.hidden).blocks(self.blocks).time_embed(self.time_embed)
    }

    pub fn start_distribution(&self) -> StartDistribution {
        if self.scramble {
            StartDistribution::Scramble { n_max: self.scramble_n_max }
        } else {
            StartDistribution::Goals
        }
    }

    pub fn total_steps(&self) -> usize {
        self.trajectories.div_ceil(self.batch_size)
    }

    fn lr_at(&self, step: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Cosine => {
                let frac = step as f64 / self.total_steps().max(1) as f64;
                let floor = self.lr / 20.0;
                floor + 0.5 * (self.lr - floor) * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    pub trajectories: usize,
    /// Mean training loss over the logging interval.
    pub loss: f64,
    pub seconds: f64,
}

impl MetricRow {
    pub fn csv(&self) -> String {
        format!("{},{},{:.9},{:.3}", self.step, self.trajectories, self.loss, self.seconds)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ScoreModel<f32>,
    pub optimizer: AdamState<f32>,
    pub metrics: Vec<MetricRow>,
}

/// Trains on `spec` per `config`, optionally continuing from a checkpoint.
/// Writes checkpoints and the metrics CSV when `out_dir` is set. A
/// numeric failure aborts without overwriting the last checkpoint.
pub fn train_on(spec: &GraphSpec, config: &TrainConfig, resume: Option<Checkpoint>) -> Result<TrainOutcome> {
    config.validate()?;
    let horizon = config.resolved_horizon()?;
    let (mut model, mut opt) = match resume {
        Some(ck) => {
            let model = ck.model;
            if model.config().input_dim != spec.feature_dim() || model.config().output_dim != spec.num_generators() {
                return Err(Error::Format(format!("checkpoint dimensions do not fit {}", spec.label())));
            }
            let opt = ck.optimizer.unwrap_or_else(|| AdamState::for_model(&model));
            (model, opt)
        }
        None => {
            let model = ScoreModel::init(config.model_config(spec), config.seed)?;
            let opt = AdamState::for_model(&model);
            (model, opt)
        }
    };
    let paths = config.out_dir.as_ref().map(|d| -> Result<_> {
        fs::create_dir_all(d)?;
        Ok((d.join(CHECKPOINT_FILE), d.join(METRICS_FILE)))
    });
    let paths = paths.transpose()?;
    let first_step = opt.step as usize;
    let mut metrics_file = match &paths {
        Some((_, m)) => {
            let mut f = if first_step == 0 {
                let mut f = fs::File::create(m)?;
                writeln!(f, "{METRICS_HEADER}")?;
                f
            } else {
                OpenOptions::new().create(true).append(true).open(m)?
            };
            f.flush()?;
            Some(f)
        }
        None => None,
    };

    let total = config.total_steps();
    let epoch_steps = config.epoch_trajectories.div_ceil(config.batch_size).max(1);
    let mut snapshot: Option<ScoreModel<f32>> =
        (config.algorithm == Algorithm::Alg3 && first_step >= epoch_steps).then(|| model.clone());
    let clock = Instant::now();
    let mut metrics = Vec::new();
    let (mut acc, mut acc_n) = (0.0, 0usize);
    for step in first_step..total {
        if config.algorithm == Algorithm::Alg3 && step > 0 && step % epoch_steps == 0 {
            snapshot = Some(model.clone());
        }
        let process = match &snapshot {
            Some(m) => ForwardProcess::ReversedScore(m),
            None => ForwardProcess::Uniform,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(step as u64);
        let batch = sample_trajectories(spec, horizon, config.batch_size, process, config.start_distribution(), &mut rng)?;
        let (loss, grads) = loss_and_grad_sharded(&model, &batch, spec, config.shards)?;
        opt.step(&mut model, &grads, config.lr_at(step))?;
        if !model.all_finite() {
            return Err(Error::Numeric(format!("parameters became non-finite at step {}", step + 1)));
        }
        acc += loss;
        acc_n += 1;
        let done = step + 1;
        if done % config.log_every == 0 || done == total {
            let row = MetricRow {
                step: done,
                trajectories: done * config.batch_size,
                loss: acc / acc_n as f64,
                seconds: if config.wall_clock { clock.elapsed().as_secs_f64() } else { 0.0 },
            };
            if let Some(f) = metrics_file.as_mut() {
                writeln!(f, "{}", row.csv())?;
                f.flush()?;
            }
            metrics.push(row);
            (acc, acc_n) = (0.0, 0);
        }
        let due = config.checkpoint_every > 0 && done % config.checkpoint_every == 0;
        if let Some((ck, _)) = &paths {
            if due || done == total {
                save_checkpoint(&model, Some(&opt), ck)?;
            }
        }
    }
    if let Some((ck, _)) = &paths {
        if first_step >= total {
            save_checkpoint(&model, Some(&opt), ck)?;
        }
    }
    Ok(TrainOutcome { model, optimizer: opt, metrics })
}

/// Builds the graph from the config and trains, resuming from
/// `config.resume` when set.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    let spec = config.spec()?;
    let resume = config.resume.as_deref().map(load_checkpoint).transpose()?;
    train_on(&spec, config, resume)
}

/// Loss of `model` on `n_eval` fresh uniform-process trajectories drawn
/// with `seed`. Does not touch the parameters.
pub fn evaluate_loss(model: &ScoreModel<f32>, spec: &GraphSpec, horizon: usize, n_eval: usize, seed: u64) -> Result<f64> {
    if n_eval == 0 {
        return Err(Error::Domain("n_eval must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = sample_trajectories(spec, horizon, n_eval, ForwardProcess::Uniform, StartDistribution::Goals, &mut rng)?;
    // evaluate in slices to bound memory; the loss is a mean over trajectories
    let mut total = 0.0;
    for chunk in batch.chunks(256) {
        total += loss_value(model, chunk, spec)? * chunk.len() as f64;
    }
    Ok(total / n_eval as f64)
}
