//! Command-line interface: `train`, `solve`, `bench`, `oracle`, `ball`.
//!
//! Exit statuses: 0 success, 2 usage (also bad states and arguments),
//! 3 format or I/O, 4 resource limit, 5 numeric failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};
use crate::model::{load_checkpoint, ScoreModel};
use crate::oracle::{bfs_distances, DistanceTable, DEFAULT_STATE_BUDGET};
use crate::search::{
    backward_walk, beam_search, build_ball, run_bench, t_calibrate, BallTable, BENCH_CSV_HEADER, DEFAULT_BALL_CAP,
};
use crate::training::{train, TrainConfig, CHECKPOINT_FILE, METRICS_FILE};

#[derive(Parser, Debug)]
#[command(name = "cayley-diffusion", version, about = "Diffusion-model pathfinding on Cayley graphs")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a score network.
    Train(TrainArgs),
    /// Solve one instance with a trained checkpoint.
    Solve(SolveArgs),
    /// Sweep beam widths and ball radii over random instances; writes CSV.
    Bench(BenchArgs),
    /// Full BFS distance table of the goal set's component.
    Oracle(OracleArgs),
    /// Exact-distance ball of radius R around the goal set.
    Ball(BallArgs),
}

/// Graph selection shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct SpecArgs {
    /// Family: cube3, cube2, sl2p or generic-perm.
    #[arg(long = "spec")]
    pub family: Option<String>,
    /// Prime modulus for sl2p.
    #[arg(long)]
    pub p: Option<u32>,
    /// Use the cyclic group Z_n as a generic-perm instance.
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator file for generic-perm (degree line, then `name i0 i1 ...`).
    #[arg(long)]
    pub generators: Option<PathBuf>,
    /// Goal-set file, one state per line (default: the identity).
    #[arg(long)]
    pub goals: Option<PathBuf>,
}

impl SpecArgs {
    fn apply_to(&self, c: &mut TrainConfig) -> Result<()> {
        if let Some(f) = &self.family {
            c.set("family", f)?;
        }
        if self.p.is_some() {
            c.p = self.p;
        }
        if self.n.is_some() {
            c.n = self.n;
        }
        if self.generators.is_some() {
            c.generators = self.generators.clone();
        }
        if self.goals.is_some() {
            c.goals = self.goals.clone();
        }
        Ok(())
    }

    fn build(&self) -> Result<GraphSpec> {
        if self.family.is_none() {
            return Err(Error::Usage("--spec is required".into()));
        }
        let mut c = TrainConfig::default();
        self.apply_to(&mut c)?;
        c.spec()
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// key=value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Horizon T.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// alg1 (uniform forward walks) or alg3 (reversed-score forward walks).
    #[arg(long)]
    pub alg: Option<String>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the checkpoint, metrics and manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Any other config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Start state as comma-separated integers.
    #[arg(long, conflicts_with_all = ["scramble", "uniform"])]
    pub state: Option<String>,
    /// Start from a goal scrambled by this many random moves.
    #[arg(long, conflicts_with = "uniform")]
    pub scramble: Option<usize>,
    /// Start from a uniformly random state (cube2, cube3, sl2p).
    #[arg(long)]
    pub uniform: bool,
    /// Backward horizon T_b.
    #[arg(long = "T")]
    pub horizon: usize,
    /// Beam width (1 is greedy).
    #[arg(long, default_value_t = 1)]
    pub beam: usize,
    /// Sample a single backward walk instead of beam search.
    #[arg(long, conflicts_with = "beam")]
    pub walk: bool,
    /// Ball radius for two-sided completion.
    #[arg(long, default_value_t = 0)]
    pub ball: usize,
    /// Repeat with the horizon shrunk to the best length found.
    #[arg(long)]
    pub calibrate: bool,
    /// Cap on calibration rounds.
    #[arg(long, default_value_t = 64)]
    pub calibrate_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the record (and a manifest) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "T")]
    pub horizon: usize,
    /// Comma-separated beam widths.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    pub widths: Vec<usize>,
    /// Comma-separated ball radii.
    #[arg(long, default_value = "0", value_delimiter = ',')]
    pub radii: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw starts by scrambling this many moves instead of uniformly.
    #[arg(long)]
    pub scramble: Option<usize>,
    /// Persisted distance table for optimality columns.
    #[arg(long, conflicts_with = "exact")]
    pub oracle: Option<PathBuf>,
    /// Compute the distance table by BFS before benchmarking.
    #[arg(long)]
    pub exact: bool,
    /// T-calibration rounds per solve.
    #[arg(long, default_value_t = 0)]
    pub calibrate_rounds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of states.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    pub budget: usize,
}

#[derive(Args, Debug)]
pub struct BallArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "R")]
    pub radius: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of entries.
    #[arg(long, default_value_t = DEFAULT_BALL_CAP)]
    pub cap: usize,
}

/// Provenance record written next to every output.
#[derive(Serialize, Debug)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub started: u64,
    pub finished: u64,
    pub artifacts: Vec<String>,
    /// `sha256("blob <len>\0" + bytes)` of the checkpoint read or written.
    pub checkpoint_hash: Option<String>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Content hash in the style of a git blob id, with SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(content_hash(&fs::read(path)?))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn load_model(path: &Path, spec: &GraphSpec) -> Result<ScoreModel<f32>> {
    let model = load_checkpoint(path)?.model;
    let cfg = model.config();
    if cfg.input_dim != spec.feature_dim() || cfg.output_dim != spec.num_generators() {
        return Err(Error::Format(format!(
            "checkpoint has {} inputs and {} outputs; {} needs {} and {}",
            cfg.input_dim,
            cfg.output_dim,
            spec.label(),
            spec.feature_dim(),
            spec.num_generators()
        )));
    }
    Ok(model)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let started = unix_now();
    let mut c = match &args.config {
        Some(p) => TrainConfig::from_file(p)?,
        None => TrainConfig::default(),
    };
    args.spec.apply_to(&mut c)?;
    if let Some(t) = args.horizon {
        c.horizon = Some(t);
    }
    if let Some(a) = &args.alg {
        c.set("alg", a)?;
    }
    if let Some(v) = args.trajectories {
        c.trajectories = v;
    }
    if let Some(v) = args.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = args.lr {
        c.lr = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(o) = &args.out {
        c.out_dir = Some(o.clone());
    }
    for kv in &args.sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects key=value, got {kv:?}")))?;
        c.set(k, v)?;
    }
    c.validate()?;
    let out_dir = c.out_dir.clone().unwrap_or_else(|| PathBuf::from("run"));
    c.out_dir = Some(out_dir.clone());
    let outcome = train(&c)?;
    let ck = out_dir.join(CHECKPOINT_FILE);
    let metrics = out_dir.join(METRICS_FILE);
    let config_path = out_dir.join("config.txt");
    fs::write(&config_path, c.to_text())?;
    if let Some(last) = outcome.metrics.last() {
        println!("step={} trajectories={} loss={:.6}", last.step, last.trajectories, last.loss);
    }
    println!("checkpoint={}", ck.display());
    write_manifest(
        &out_dir.join("manifest.json"),
        &RunManifest {
            command: "train".into(),
            config: serde_json::to_value(&c).map_err(|e| Error::Format(e.to_string()))?,
            seed: Some(c.seed),
            started,
            finished: unix_now(),
            artifacts: [&ck, &metrics, &config_path].iter().map(|p| p.display().to_string()).collect(),
            checkpoint_hash: Some(file_hash(&ck)?),
        },
    )
}

fn start_state(spec: &GraphSpec, args: &SolveArgs, rng: &mut ChaCha8Rng) -> Result<State> {
    let x = match (&args.state, args.scramble, args.uniform) {
        (Some(s), _, _) => State::parse(s)?,
        (None, Some(k), _) => {
            let mut x = spec.random_goal(rng).clone();
            for _ in 0..k {
                x = spec.step(&x, rand::Rng::random_range(rng, 0..spec.num_generators()));
            }
            x
        }
        (None, None, true) => spec.uniform_state(rng)?,
        (None, None, false) => return Err(Error::Usage("give one of --state, --scramble or --uniform".into())),
    };
    spec.validate(&x)?;
    Ok(x)
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let started = unix_now();
    let spec = args.spec.build()?;
    let model = load_model(&args.checkpoint, &spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let start = start_state(&spec, args, &mut rng)?;
    let ball: Option<BallTable> = (args.ball > 0).then(|| build_ball(&spec, args.ball, DEFAULT_BALL_CAP)).transpose()?;
    let rounds = if args.calibrate { args.calibrate_rounds } else { 0 };
    let result = t_calibrate(
        |h| {
            if args.walk {
                backward_walk(&spec, &model, &start, h, &mut rng, ball.as_ref())
            } else {
                beam_search(&spec, &model, &start, h, args.beam, ball.as_ref())
            }
        },
        args.horizon,
        rounds,
    )?;
    result.check(&spec, &start)?;
    let record = result.record(&spec);
    println!("{record}");
    if let Some(out) = &args.out {
        fs::write(out, format!("{record}\n"))?;
        write_manifest(
            &manifest_beside(out),
            &RunManifest {
                command: "solve".into(),
                config: serde_json::json!({
                    "spec": spec.label(), "start": start.to_string(), "T": args.horizon, "beam": args.beam,
                    "walk": args.walk, "ball": args.ball, "calibrate": args.calibrate,
                    "calibrate_rounds": args.calibrate_rounds, "checkpoint": args.checkpoint.display().to_string(),
                }),
                seed: Some(args.seed),
                started,
                finished: unix_now(),
                artifacts: vec![out.display().to_string()],
                checkpoint_hash: Some(file_hash(&args.checkpoint)?),
            },
        )?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let started = unix_now();
    let spec = args.spec.build()?;
    let model = load_model(&args.checkpoint, &spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let starts: Vec<State> = (0..args.instances)
        .map(|_| match args.scramble {
            Some(k) => {
                let mut x = spec.random_goal(&mut rng).clone();
                for _ in 0..k {
                    x = spec.step(&x, rand::Rng::random_range(&mut rng, 0..spec.num_generators()));
                }
                Ok(x)
            }
            None => spec.uniform_state(&mut rng),
        })
        .collect::<Result<_>>()?;
    let table = match (&args.oracle, args.exact) {
        (Some(p), _) => Some(DistanceTable::load(&spec, p)?),
        (None, true) => Some(bfs_distances(&spec, DEFAULT_STATE_BUDGET)?),
        (None, false) => None,
    };
    let rows = run_bench(
        &spec,
        &model,
        &starts,
        args.horizon,
        &args.widths,
        &args.radii,
        table.as_ref(),
        args.calibrate_rounds,
        DEFAULT_BALL_CAP,
    )?;
    let mut csv = format!("{BENCH_CSV_HEADER}\n");
    for r in &rows {
        csv.push_str(&r.csv());
        csv.push('\n');
    }
    match &args.out {
        Some(out) => {
            fs::write(out, &csv)?;
            write_manifest(
                &manifest_beside(out),
                &RunManifest {
                    command: "bench".into(),
                    config: serde_json::json!({
                        "spec": spec.label(), "T": args.horizon, "widths": args.widths, "radii": args.radii,
                        "instances": args.instances, "scramble": args.scramble,
                        "calibrate_rounds": args.calibrate_rounds,
                        "checkpoint": args.checkpoint.display().to_string(),
                    }),
                    seed: Some(args.seed),
                    started,
                    finished: unix_now(),
                    artifacts: vec![out.display().to_string()],
                    checkpoint_hash: Some(file_hash(&args.checkpoint)?),
                },
            )?;
            print!("{csv}");
        }
        None => print!("{csv}"),
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let started = unix_now();
    let spec = args.spec.build()?;
    let table = bfs_distances(&spec, args.budget)?;
    let s = table.summary();
    println!("spec={} count={} diameter={} mean={:.4}", spec.label(), s.count, s.diameter, s.mean);
    println!("layers={}", s.layers.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    if let Some(out) = &args.out {
        table.save(out)?;
        write_manifest(
            &manifest_beside(out),
            &RunManifest {
                command: "oracle".into(),
                config: serde_json::json!({ "spec": spec.label(), "budget": args.budget }),
                seed: None,
                started,
                finished: unix_now(),
                artifacts: vec![out.display().to_string()],
                checkpoint_hash: None,
            },
        )?;
    }
    Ok(())
}

fn cmd_ball(args: &BallArgs) -> Result<()> {
    let started = unix_now();
    let spec = args.spec.build()?;
    let ball = build_ball(&spec, args.radius, args.cap)?;
    let layers = ball.layer_sizes();
    let mean = layers.iter().enumerate().map(|(d, &n)| (d * n) as f64).sum::<f64>() / ball.len() as f64;
    println!(
        "spec={} radius={} count={} max_distance={} mean={:.4}",
        spec.label(),
        args.radius,
        ball.len(),
        layers.len() - 1,
        mean
    );
    if let Some(out) = &args.out {
        fs::write(out, ball.to_text(&spec))?;
        write_manifest(
            &manifest_beside(out),
            &RunManifest {
                command: "ball".into(),
                config: serde_json::json!({ "spec": spec.label(), "R": args.radius, "cap": args.cap }),
                seed: None,
                started,
                finished: unix_now(),
                artifacts: vec![out.display().to_string()],
                checkpoint_hash: None,
            },
        )?;
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // only fails if a global pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Ball(a) => cmd_ball(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FamilyKind;

    #[test]
    fn family_flag_values() {
        let a = SpecArgs { family: Some("sl2p".into()), p: Some(5), ..Default::default() };
        assert_eq!(a.build().unwrap().family(), FamilyKind::Sl2p);
        let a = SpecArgs { family: Some("nope".into()), ..Default::default() };
        assert!(matches!(a.build(), Err(Error::Usage(_))));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(content_hash(b"abc"), content_hash(b"abc"));
        assert_ne!(content_hash(b"abc"), content_hash(b"abd"));
        assert_eq!(content_hash(b"").len(), 64);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["cayley-diffusion", "frobnicate"]), 2);
        assert_eq!(run(["cayley-diffusion", "train", "--spec", "sl2p", "--p", "5"]), 2);
        assert_eq!(run(["cayley-diffusion", "--help"]), 0);
    }
}
