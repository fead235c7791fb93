//! Two-sided search: a larger ball around the goal means fewer model
//! evaluations and shorter paths. Uses exact scores so no training is needed.

use cayley_diffusion::oracle::ExactScorer;
use cayley_diffusion::search::{beam_search, build_ball, DEFAULT_BALL_CAP};
use cayley_diffusion::GraphSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cayley_diffusion::Result<()> {
    let spec = GraphSpec::sl2p(13)?;
    let horizon = 20;
    let oracle = ExactScorer::new(&spec, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let starts: Vec<_> = (0..50).map(|_| spec.uniform_state(&mut rng)).collect::<Result<_, _>>()?;
    println!("radius  entries  mean_length  mean_nodes");
    for radius in 0..=6 {
        let ball = build_ball(&spec, radius, DEFAULT_BALL_CAP)?;
        let (mut len, mut nodes) = (0, 0);
        for x in &starts {
            let r = beam_search(&spec, &oracle, x, horizon, 4, Some(&ball))?;
            assert!(r.solved && r.verify(&spec, x));
            len += r.length();
            nodes += r.nodes_expanded;
        }
        let n = starts.len() as f64;
        println!("{radius:>6}  {:>7}  {:>11.2}  {:>10.1}", ball.len(), len as f64 / n, nodes as f64 / n);
    }
    Ok(())
}
