use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use cayley_diffusion::diffusion::{
    backward_kernel, forward_step_uniform, reversed_score_rows, sample_trajectories, ForwardProcess,
    StartDistribution,
};
use cayley_diffusion::group::sl2;
use cayley_diffusion::oracle::{bfs_distances, exact_probabilities, DEFAULT_STATE_BUDGET};
use cayley_diffusion::score::ConstantScore;
use cayley_diffusion::{GraphSpec, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn families() -> Vec<GraphSpec> {
    vec![
        GraphSpec::cube3(),
        GraphSpec::cube2(),
        GraphSpec::sl2p(31).unwrap(),
        GraphSpec::sl2p(2).unwrap(),
        GraphSpec::cyclic(12).unwrap(),
    ]
}

fn chi2_critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999)
}

fn chi2_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[test]
fn word_then_inverse_returns_home() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in families() {
        for _ in 0..1000 {
            let x = spec.scramble(&mut rng, 30);
            let len = rng.random_range(0..40);
            let w: Vec<usize> = (0..len).map(|_| rng.random_range(0..spec.num_generators())).collect();
            let y = spec.apply_word(&x, &w).unwrap();
            assert_eq!(spec.apply_word(&y, &spec.inverse_word(&w)).unwrap(), x, "{}", spec.label());
        }
    }
}

#[test]
fn sl2_determinant_preserved_exhaustively() {
    for p in [2u32, 3, 5, 7] {
        let spec = GraphSpec::sl2p(p).unwrap();
        let t = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
        for (x, _) in t.entries(&spec) {
            for a in 0..4 {
                let y = spec.step(&x, a);
                assert_eq!(sl2::determinant(y.as_slice(), p as u16), 1 % p as u16);
            }
        }
    }
}

#[test]
fn sl2_features_injective_exhaustively() {
    for p in [2u32, 3, 5] {
        let spec = GraphSpec::sl2p(p).unwrap();
        let states: Vec<State> = bfs_distances(&spec, 1000).unwrap().entries(&spec).into_iter().map(|e| e.0).collect();
        let feats: HashSet<Vec<u32>> = states
            .iter()
            .map(|x| {
                let mut v = Vec::new();
                spec.feature_indices(x, &mut v);
                v
            })
            .collect();
        assert_eq!(feats.len(), states.len());
        assert_eq!(spec.encode_features(&spec.identity()).unwrap().len(), 4 * p as usize);
    }
}

#[test]
fn cube_features_collision_free_on_million_samples() {
    let spec = GraphSpec::cube3();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut by_hash: HashMap<u64, State> = HashMap::with_capacity(1 << 20);
    let mut idx = Vec::with_capacity(48);
    for _ in 0..1_000_000 {
        let x = spec.uniform_state(&mut rng).unwrap();
        idx.clear();
        spec.feature_indices(&x, &mut idx);
        assert_eq!(idx.len(), 48);
        let mut h = DefaultHasher::new();
        idx.hash(&mut h);
        let key = h.finish();
        if let Some(prev) = by_hash.get(&key) {
            assert_eq!(*prev, x, "two states share a feature hash");
        } else {
            by_hash.insert(key, x);
        }
    }
}

#[test]
fn cube_identity_features_are_a_permutation_matrix() {
    let spec = GraphSpec::cube3();
    let f = spec.encode_features(&spec.identity()).unwrap();
    assert_eq!(f.len(), 48 * 48);
    assert_eq!(f.iter().filter(|&&v| v == 1.0).count(), 48);
    for i in 0..48 {
        assert_eq!(f[i * 48..(i + 1) * 48].iter().sum::<f32>(), 1.0);
    }
}

#[test]
fn cube_orbit_invariant_conserved() {
    let spec = GraphSpec::cube3();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        // arbitrary (possibly unreachable) orientation and permutation data
        let mut v = spec.uniform_state(&mut rng).unwrap().into_vec();
        for o in &mut v[8..16] {
            *o = rng.random_range(0..3);
        }
        for o in &mut v[28..40] {
            *o = rng.random_range(0..2);
        }
        if rng.random_bool(0.5) {
            v.swap(0, 1);
        }
        let x = State::new(v);
        let inv = spec.orbit_invariant(&x).unwrap();
        for a in 0..12 {
            assert_eq!(spec.orbit_invariant(&spec.step(&x, a)).unwrap(), inv);
        }
    }
    let id = spec.orbit_invariant(&spec.identity()).unwrap();
    assert_eq!((id.corner_twist, id.edge_flip, id.parity), (0, 0, 0));
    assert!(GraphSpec::sl2p(5).unwrap().orbit_invariant(&GraphSpec::sl2p(5).unwrap().identity()).is_err());
}

#[test]
fn twelve_orbit_classes_from_single_cubelet_edits() {
    let spec = GraphSpec::cube3();
    let base = spec.identity().into_vec();
    let mut classes = HashSet::new();
    for twist in 0..3u16 {
        for flip in 0..2u16 {
            for swap in [false, true] {
                let mut v = base.clone();
                v[8] = twist;
                v[28] = flip;
                if swap {
                    v.swap(0, 1);
                }
                let inv = spec.orbit_invariant(&State::new(v)).unwrap();
                classes.insert((inv.corner_twist, inv.edge_flip, inv.parity));
            }
        }
    }
    assert_eq!(classes.len(), 12);
}

#[test]
fn scramble_examples() {
    let spec = GraphSpec::sl2p(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(spec.scramble(&mut rng, 0), spec.identity());
    let nbrs: HashSet<State> = (0..4).map(|a| spec.step(&spec.identity(), a)).collect();
    for _ in 0..200 {
        let x = spec.scramble(&mut rng, 1);
        assert!(x == spec.identity() || nbrs.contains(&x));
    }
    let a = spec.scramble(&mut ChaCha8Rng::seed_from_u64(9), 20);
    let b = spec.scramble(&mut ChaCha8Rng::seed_from_u64(9), 20);
    assert_eq!(a, b);
}

#[test]
fn uniform_step_frequencies() {
    let spec = GraphSpec::cube3();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = spec.identity();
    let n = 100_000u64;
    let mut counts = vec![0u64; 12];
    for _ in 0..n {
        counts[forward_step_uniform(&spec, &x, &mut rng).0] += 1;
    }
    let p = 1.0 / 12.0;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{c}");
    }
}

#[test]
fn one_step_from_single_goal_is_uniform_over_neighbors() {
    let spec = GraphSpec::sl2p(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let trs = sample_trajectories(&spec, 1, 40_000, ForwardProcess::Uniform, StartDistribution::Goals, &mut rng).unwrap();
    let mut counts: HashMap<State, u64> = HashMap::new();
    for tr in &trs {
        *counts.entry(tr.end().clone()).or_default() += 1;
    }
    assert_eq!(counts.len(), 4);
    let c: Vec<u64> = counts.values().copied().collect();
    assert!(chi2_uniform(&c) < chi2_critical(3));
}

#[test]
fn z4_two_step_return_probability() {
    let spec = GraphSpec::cyclic(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let trs = sample_trajectories(&spec, 2, n, ForwardProcess::Uniform, StartDistribution::Goals, &mut rng).unwrap();
    let home = trs.iter().filter(|t| spec.is_goal(t.end())).count() as f64;
    let sigma = (n as f64 * 0.25).sqrt();
    assert!((home - n as f64 / 2.0).abs() <= 3.0 * sigma, "{home}");
}

#[test]
fn forward_uniform_reaches_stationarity() {
    let spec = GraphSpec::sl2p(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trs = sample_trajectories(&spec, 200, 100_000, ForwardProcess::Uniform, StartDistribution::Goals, &mut rng).unwrap();
    let mut counts: HashMap<State, u64> = HashMap::new();
    for tr in &trs {
        *counts.entry(tr.end().clone()).or_default() += 1;
    }
    assert_eq!(counts.len(), 24);
    let c: Vec<u64> = counts.values().copied().collect();
    assert!(chi2_uniform(&c) < chi2_critical(23));
}

#[test]
fn kernel_rows_sum_to_one() {
    let spec = GraphSpec::sl2p(11).unwrap();
    let tables = exact_probabilities(&spec, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for t in 1..=12 {
        for x in tables.states() {
            if tables.prob(t, x) > 0.0 {
                let row = backward_kernel(&spec, x, t, &tables.score(x, t).unwrap()).unwrap();
                assert!((row.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
    for _ in 0..100 {
        let s: Vec<f64> = (0..4).map(|_| rng.random_range(1e-6..1e3)).collect();
        let row = backward_kernel(&spec, &spec.identity(), 1, &s).unwrap();
        assert!((row.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let rows = reversed_score_rows(&spec, &[spec.identity()], 0, &ConstantScore(3.0)).unwrap();
    assert_eq!(rows[0].probs, vec![0.25; 4]);
}

#[test]
fn exact_kernel_matches_bayes_reversal() {
    // q~(x -> x a) = p_{t-1}(x a) q(x a -> x) / p_t(x) with q = 1/|S|
    let spec = GraphSpec::cyclic(7).unwrap();
    let tables = exact_probabilities(&spec, 5).unwrap();
    for t in 1..=5 {
        for x in tables.states() {
            if tables.prob(t, x) == 0.0 {
                continue;
            }
            let row = backward_kernel(&spec, x, t, &tables.score(x, t).unwrap()).unwrap();
            let bayes: Vec<f64> =
                (0..2).map(|a| tables.prob(t - 1, &spec.step(x, a)) * 0.5 / tables.prob(t, x)).collect();
            let z: f64 = bayes.iter().sum();
            for a in 0..2 {
                assert!((row.probs[a] - bayes[a] / z).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn probability_support_grows_one_layer_per_step() {
    let spec = GraphSpec::sl2p(7).unwrap();
    let dist = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
    let tables = exact_probabilities(&spec, 10).unwrap();
    for t in 0..=10 {
        for x in tables.states() {
            if tables.prob(t, x) > 0.0 {
                assert!(dist.distance(&spec, x).unwrap() <= t);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sl2_apply_is_a_bijection(p_idx in 0usize..4, a in 0usize..4, seed in any::<u64>()) {
        let p = [5u32, 7, 11, 13][p_idx];
        let spec = GraphSpec::sl2p(p).unwrap();
        let x = spec.uniform_state(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let y = spec.apply(&x, a).unwrap();
        prop_assert_eq!(spec.apply(&y, spec.inverse(a)).unwrap(), x);
    }

    #[test]
    fn cube2_order_four(a in 0usize..6, seed in any::<u64>()) {
        let spec = GraphSpec::cube2();
        let x = spec.uniform_state(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(spec.apply_word(&x, &[a; 4]).unwrap(), x);
    }
}
