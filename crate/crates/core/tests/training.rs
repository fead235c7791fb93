use std::path::PathBuf;

use cayley_diffusion::cli::content_hash;
use cayley_diffusion::model::{load_checkpoint, ScoreModel};
use cayley_diffusion::oracle::exact_probabilities;
use cayley_diffusion::score::ScoreSource;
use cayley_diffusion::training::{evaluate_loss, train, train_on, Algorithm, LrSchedule, TrainConfig, CHECKPOINT_FILE};
use cayley_diffusion::FamilyKind;
use tempfile::tempdir;

fn z4_config() -> TrainConfig {
    TrainConfig {
        family: FamilyKind::GenericPerm,
        n: Some(4),
        horizon: Some(4),
        batch_size: 100,
        trajectories: 100_000,
        lr: 3e-3,
        lr_schedule: LrSchedule::Cosine,
        hidden: 32,
        blocks: 2,
        seed: 1,
        log_every: 100,
        ..TrainConfig::default()
    }
}

#[test]
fn z4_learned_scores_match_exact_scores() {
    let c = z4_config();
    let spec = c.spec().unwrap();
    let init = ScoreModel::init(c.model_config(&spec), c.seed).unwrap();
    let before = evaluate_loss(&init, &spec, 4, 2000, 9).unwrap();
    let out = train_on(&spec, &c, None).unwrap();
    let after = evaluate_loss(&out.model, &spec, 4, 2000, 9).unwrap();
    assert!(after < before, "{before} -> {after}");

    let tables = exact_probabilities(&spec, 4).unwrap();
    let mut checked = 0;
    for t in 1..=4 {
        for x in tables.states() {
            if tables.prob(t, x) <= 0.01 {
                continue;
            }
            let exact = tables.score(x, t).unwrap();
            let learned = out.model.score_batch(&spec, std::slice::from_ref(x), t).unwrap();
            let top = exact.iter().cloned().fold(0.0, f64::max);
            for (e, l) in exact.iter().zip(&learned) {
                if *e > 0.0 {
                    assert!((l - e).abs() <= 0.1 * e, "t={t} x={x}: learned {l} exact {e}");
                } else {
                    assert!(*l <= 0.1 * top, "t={t} x={x}: learned {l} where exact is 0");
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 16);
}

#[test]
fn alg3_run_gives_finite_loss_and_loadable_checkpoint() {
    let dir = tempdir().unwrap();
    let c = TrainConfig {
        p: Some(7),
        horizon: Some(10),
        algorithm: Algorithm::Alg3,
        batch_size: 20,
        trajectories: 2000,
        epoch_trajectories: 400,
        hidden: 32,
        blocks: 1,
        log_every: 10,
        out_dir: Some(dir.path().to_path_buf()),
        ..TrainConfig::default()
    };
    let out = train(&c).unwrap();
    assert!(out.metrics.iter().all(|m| m.loss.is_finite()));
    let ck = load_checkpoint(&dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ck.model.params(), out.model.params());
    assert_eq!(ck.optimizer.unwrap().step, 100);
}

/// Long run; the trained checkpoint is cached under the target dir and
/// training resumes from it, so only the first run pays for it.
#[test]
fn sl2p31_alg1_loss_drops_by_thirty_percent() {
    let mut c = TrainConfig {
        p: Some(31),
        horizon: Some(30),
        algorithm: Algorithm::Alg1,
        batch_size: 100,
        trajectories: 3_000_000,
        lr: 2e-3,
        lr_schedule: LrSchedule::Cosine,
        hidden: 128,
        blocks: 2,
        seed: 31,
        log_every: 1000,
        checkpoint_every: 1000,
        ..TrainConfig::default()
    };
    let key = &content_hash(c.to_text().as_bytes())[..16];
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("alg1-sl2p31-{key}"));
    c.out_dir = Some(dir.clone());
    let spec = c.spec().unwrap();
    let ck = dir.join(CHECKPOINT_FILE);
    let resume = ck.exists().then(|| load_checkpoint(&ck).unwrap());
    let out = train_on(&spec, &c, resume).unwrap();

    let init = ScoreModel::init(c.model_config(&spec), c.seed).unwrap();
    let initial = evaluate_loss(&init, &spec, 30, 500, 99).unwrap();
    let last = evaluate_loss(&out.model, &spec, 30, 500, 99).unwrap();
    let drop = 1.0 - last / initial;
    assert!(drop >= 0.30, "loss {initial:.3} -> {last:.3}, drop {:.1}%", 100.0 * drop);
}
