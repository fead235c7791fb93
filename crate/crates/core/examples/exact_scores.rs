//! Exact forward marginals on a 12-cycle and the backward process they
//! induce: sampling with exact scores always lands on the goal at t = 0.

use cayley_diffusion::diffusion::backward_kernel;
use cayley_diffusion::oracle::ExactScorer;
use cayley_diffusion::search::backward_walk;
use cayley_diffusion::GraphSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cayley_diffusion::Result<()> {
    let spec = GraphSpec::cyclic(12)?;
    let horizon = 8;
    let oracle = ExactScorer::new(&spec, horizon)?;
    let tables = &oracle.tables;

    for t in 0..=horizon {
        let row: Vec<String> = tables.marginal(t).iter().map(|p| format!("{p:.3}")).collect();
        println!("p_{t}: {}", row.join(" "));
    }

    let x = tables.states().iter().find(|x| tables.prob(horizon, x) > 0.0 && !spec.is_goal(x)).unwrap().clone();
    let score = tables.score(&x, horizon)?;
    let row = backward_kernel(&spec, &x, horizon, &score)?;
    println!("score at {x} (t={horizon}): {score:?}, kernel {:?}", row.probs);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut hits = 0;
    for _ in 0..1000 {
        let r = backward_walk(&spec, &oracle, &x, horizon, &mut rng, None)?;
        hits += r.solved as usize;
    }
    println!("exact backward walks reaching the goal: {hits}/1000");
    Ok(())
}
