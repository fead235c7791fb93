//! Breadth-first distance tables: group orders, diameters and mean
//! distances of SL2(Z_p), plus the 2x2x2 cube when asked.
//!
//! ```bash
//! cargo run --release --example oracle_stats
//! cargo run --release --example oracle_stats -- cube2
//! ```

use cayley_diffusion::group::sl2;
use cayley_diffusion::oracle::{bfs_distances, DEFAULT_STATE_BUDGET};
use cayley_diffusion::GraphSpec;

fn main() -> cayley_diffusion::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>5} {:>8}", "p", "order", "bfs count", "diam", "mean");
    for p in [2u32, 3, 5, 7, 11, 13, 31] {
        let spec = GraphSpec::sl2p(p)?;
        let s = bfs_distances(&spec, DEFAULT_STATE_BUDGET)?.summary().clone();
        println!("{p:>6} {:>10} {:>10} {:>5} {:>8.3}", sl2::order(p as u64), s.count, s.diameter, s.mean);
    }
    if std::env::args().any(|a| a == "cube2") {
        let t = bfs_distances(&GraphSpec::cube2(), DEFAULT_STATE_BUDGET)?;
        let s = t.summary();
        println!("cube2: {} states, diameter {}, mean {:.4}", s.count, s.diameter, s.mean);
        println!("layers: {:?}", s.layers);
    }
    Ok(())
}
