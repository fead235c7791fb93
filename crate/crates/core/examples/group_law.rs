//! Walk each graph family forward along a random word and back along its
//! formal inverse, and watch the cube orbit invariant stay put.
//!
//! ```bash
//! cargo run --example group_law
//! ```

use cayley_diffusion::GraphSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cayley_diffusion::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let families = [GraphSpec::cube3(), GraphSpec::cube2(), GraphSpec::sl2p(31)?, GraphSpec::cyclic(12)?];
    for spec in &families {
        let word: Vec<usize> = (0..12).map(|_| rng.random_range(0..spec.num_generators())).collect();
        let x = spec.apply_word(&spec.identity(), &word)?;
        let back = spec.apply_word(&x, &spec.inverse_word(&word))?;
        println!("{:<28} word: {}", spec.label(), spec.word_names(&word));
        println!("{:<28} state: {x}", "");
        println!("{:<28} back at identity: {}", "", back == spec.identity());
    }

    let cube = GraphSpec::cube3();
    let x = cube.scramble(&mut rng, 40);
    let inv = cube.orbit_invariant(&x)?;
    let all_same = (0..cube.num_generators()).all(|a| cube.orbit_invariant(&cube.step(&x, a)).unwrap() == inv);
    println!("cube3 invariant {inv:?}, unchanged by every quarter turn: {all_same}");

    let sl5 = GraphSpec::sl2p(5)?;
    let features = sl5.encode_features(&sl5.identity())?;
    println!("sl2p(5) identity features: {features:?}");
    Ok(())
}
