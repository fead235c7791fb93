//! Train a score network on the 12-cycle and compare it to the exact score.

use cayley_diffusion::model::InputBatch;
use cayley_diffusion::oracle::exact_probabilities;
use cayley_diffusion::training::{evaluate_loss, train_on, TrainConfig};
use cayley_diffusion::GraphSpec;

fn main() -> cayley_diffusion::Result<()> {
    let spec = GraphSpec::cyclic(12)?;
    let horizon = 8;
    let mut config = TrainConfig::default();
    config.apply_text(
        "family=generic-perm\nn=12\nT=8\nbatch_size=64\ntrajectories=64000\nhidden=64\nblocks=2\nlr=0.003\nlr_schedule=cosine\nlog_every=250",
    )?;
    let out = train_on(&spec, &config, None)?;
    for m in &out.metrics {
        println!("step {:>5}  loss {:.5}", m.step, m.loss);
    }
    println!("held-out loss {:.5}", evaluate_loss(&out.model, &spec, horizon, 2000, 99)?);

    let tables = exact_probabilities(&spec, horizon)?;
    let mut worst: f64 = 0.0;
    for t in 1..=horizon {
        for x in tables.states() {
            if tables.prob(t, x) <= 0.01 {
                continue;
            }
            let exact = tables.score(x, t)?;
            let mut batch = InputBatch::new();
            batch.push_state(&spec, x, t as u32);
            let learned = out.model.scores(&batch)?;
            for (e, l) in exact.iter().zip(&learned) {
                if *e > 0.0 {
                    worst = worst.max((l - e).abs() / e);
                }
            }
        }
    }
    println!("largest relative score error where p_t(x) > 0.01: {worst:.4}");
    Ok(())
}
