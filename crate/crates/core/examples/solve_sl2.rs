//! Train on SL2(Z_p) and solve random instances with beam search and a
//! ball around the identity, shrinking the horizon to the best length found.
//! Pass a checkpoint to skip training.
//!
//! ```bash
//! cargo run --release --example solve_sl2
//! cargo run --release --example solve_sl2 -- run/model.cdsm
//! ```

use cayley_diffusion::model::load_checkpoint;
use cayley_diffusion::oracle::{bfs_distances, DEFAULT_STATE_BUDGET};
use cayley_diffusion::search::{beam_search, build_ball, t_calibrate, DEFAULT_BALL_CAP};
use cayley_diffusion::training::{train_on, TrainConfig};
use cayley_diffusion::GraphSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cayley_diffusion::Result<()> {
    let p = 31;
    let horizon = 30;
    let spec = GraphSpec::sl2p(p)?;
    let model = match std::env::args().nth(1) {
        Some(path) => load_checkpoint(path.as_ref())?.model,
        None => {
            let mut c = TrainConfig::default();
            c.apply_text(&format!(
                "family=sl2p\np={p}\nT={horizon}\nalg=alg3\ntrajectories=100000\nepoch_trajectories=25000\nhidden=128\nblocks=2\nlog_every=250"
            ))?;
            let out = train_on(&spec, &c, None)?;
            for m in &out.metrics {
                println!("step {:>5}  loss {:.4}", m.step, m.loss);
            }
            out.model
        }
    };
    let table = bfs_distances(&spec, DEFAULT_STATE_BUDGET)?;
    let ball = build_ball(&spec, 4, DEFAULT_BALL_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = spec.uniform_state(&mut rng)?;
        let r = t_calibrate(|h| beam_search(&spec, &model, &x, h, 64, Some(&ball)), horizon, 64)?;
        let optimal = table.distance(&spec, &x).unwrap();
        println!("{x:>14}  optimal {optimal:>2}  {}", r.record(&spec));
    }
    Ok(())
}
