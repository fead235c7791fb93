//! Beam width x ball radius grid in the CSV format of the `bench` command.
//! Without a checkpoint argument it uses exact scores on SL2(Z_31).

use cayley_diffusion::model::load_checkpoint;
use cayley_diffusion::oracle::{bfs_distances, ExactScorer, DEFAULT_STATE_BUDGET};
use cayley_diffusion::score::ScoreSource;
use cayley_diffusion::search::{run_bench, BENCH_CSV_HEADER, DEFAULT_BALL_CAP};
use cayley_diffusion::GraphSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cayley_diffusion::Result<()> {
    let spec = GraphSpec::sl2p(31)?;
    let horizon = 30;
    let model: Box<dyn ScoreSource> = match std::env::args().nth(1) {
        Some(path) => Box::new(load_checkpoint(path.as_ref())?.model),
        None => Box::new(ExactScorer::new(&spec, horizon)?),
    };
    let table = bfs_distances(&spec, DEFAULT_STATE_BUDGET)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let starts: Vec<_> = (0..100).map(|_| spec.uniform_state(&mut rng)).collect::<Result<_, _>>()?;
    let rows = run_bench(&spec, model.as_ref(), &starts, horizon, &[1, 2, 4, 8, 16], &[0, 2, 4], Some(&table), 0, DEFAULT_BALL_CAP)?;
    println!("{BENCH_CSV_HEADER}");
    for r in rows {
        println!("{}", r.csv());
    }
    Ok(())
}
