//! Exact forward-process marginals and scores on small graphs.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};
use crate::score::ScoreSource;

/// Largest component handled by [`exact_probabilities`].
pub const MAX_EXACT_STATES: usize = 100_000;

/// `p_t(x)` for `t = 0..=T` under the uniform forward process started
/// uniformly on the goal set.
#[derive(Clone, Debug)]
pub struct ProbabilityTables {
    states: Vec<State>,
    index: HashMap<State, usize>,
    /// `neighbors[i * |S| + a]` is the index of `states[i] * a`.
    neighbors: Vec<usize>,
    n_gen: usize,
    p: Vec<Vec<f64>>,
}

/// Enumerates the goal set's component and pushes `p_0` through the
/// uniform kernel `T` times.
pub fn exact_probabilities(spec: &GraphSpec, horizon: usize) -> Result<ProbabilityTables> {
    let n_gen = spec.num_generators();
    let mut states: Vec<State> = Vec::new();
    let mut index = HashMap::new();
    for g in spec.goals() {
        if !index.contains_key(g) {
            index.insert(g.clone(), states.len());
            states.push(g.clone());
        }
    }
    let mut neighbors = Vec::new();
    let mut i = 0;
    while i < states.len() {
        for a in 0..n_gen {
            let y = spec.step(&states[i], a);
            let j = match index.get(&y) {
                Some(&j) => j,
                None => {
                    if states.len() >= MAX_EXACT_STATES {
                        return Err(Error::Resource(format!(
                            "component exceeds {MAX_EXACT_STATES} states for exact probabilities"
                        )));
                    }
                    index.insert(y.clone(), states.len());
                    states.push(y);
                    states.len() - 1
                }
            };
            neighbors.push(j);
        }
        i += 1;
    }
    let n = states.len();
    let mut p0 = vec![0.0; n];
    let w = 1.0 / spec.goals().len() as f64;
    for g in spec.goals() {
        p0[index[g]] = w;
    }
    let mut p = vec![p0];
    let step = 1.0 / n_gen as f64;
    for t in 1..=horizon {
        let prev = &p[t - 1];
        let mut next = vec![0.0; n];
        for (i, &pi) in prev.iter().enumerate() {
            if pi > 0.0 {
                for &j in &neighbors[i * n_gen..(i + 1) * n_gen] {
                    next[j] += pi * step;
                }
            }
        }
        p.push(next);
    }
    Ok(ProbabilityTables { states, index, neighbors, n_gen, p })
}

impl ProbabilityTables {
    pub fn horizon(&self) -> usize {
        self.p.len() - 1
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// `p_t(x)`; zero for states outside the component.
    pub fn prob(&self, t: usize, x: &State) -> f64 {
        self.index.get(x).map_or(0.0, |&i| self.p[t][i])
    }

    /// The whole marginal at time `t`, indexed like [`Self::states`].
    pub fn marginal(&self, t: usize) -> &[f64] {
        &self.p[t]
    }

    /// Exact score `p_{t-1}(x a) / p_t(x)` for every generator.
    pub fn score(&self, x: &State, t: usize) -> Result<Vec<f64>> {
        if t == 0 || t > self.horizon() {
            return Err(Error::Domain(format!("time {t} outside 1..={}", self.horizon())));
        }
        let i = *self.index.get(x).ok_or_else(|| Error::Domain(format!("state {x} is not in the component")))?;
        let pt = self.p[t][i];
        if pt <= 0.0 {
            return Err(Error::Domain(format!("p_{t}({x}) = 0; the score is undefined")));
        }
        Ok(self.neighbors[i * self.n_gen..(i + 1) * self.n_gen].iter().map(|&j| self.p[t - 1][j] / pt).collect())
    }
}

/// Exact score of one state: `p_{t-1}(x a) / p_t(x)` for all `a`.
pub fn exact_score(tables: &ProbabilityTables, x: &State, t: usize) -> Result<Vec<f64>> {
    tables.score(x, t)
}

/// [`ScoreSource`] backed by exact tables. Queries with `p_t(x) = 0`
/// are domain errors.
pub struct ExactScorer {
    pub tables: ProbabilityTables,
}

impl ExactScorer {
    pub fn new(spec: &GraphSpec, horizon: usize) -> Result<Self> {
        Ok(ExactScorer { tables: exact_probabilities(spec, horizon)? })
    }
}

impl ScoreSource for ExactScorer {
    fn score_batch(&self, _spec: &GraphSpec, states: &[State], t: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(states.len() * self.tables.n_gen);
        for x in states {
            out.extend(self.tables.score(x, t)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> GraphSpec {
        GraphSpec::cyclic(n).unwrap()
    }

    fn s(v: u16, n: usize) -> State {
        // the cyclic group acts on positions; state k is the rotation by k
        let spec = z(n);
        let mut x = spec.identity();
        for _ in 0..v {
            x = spec.step(&x, 0);
        }
        x
    }

    #[test]
    fn z4_two_step_marginal() {
        let spec = z(4);
        let tab = exact_probabilities(&spec, 2).unwrap();
        let p2: Vec<f64> = (0..4).map(|k| tab.prob(2, &s(k, 4))).collect();
        assert_eq!(p2, vec![0.5, 0.0, 0.5, 0.0]);
        assert_eq!(tab.prob(0, &spec.identity()), 1.0);
        assert_eq!(tab.prob(1, &s(1, 4)), 0.5);
    }

    #[test]
    fn probabilities_are_conserved() {
        let spec = GraphSpec::sl2p(5).unwrap();
        let tab = exact_probabilities(&spec, 30).unwrap();
        for t in 0..=30 {
            assert!((tab.marginal(t).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_step_score_toward_goal() {
        let spec = z(7);
        let tab = exact_probabilities(&spec, 3).unwrap();
        let x = s(1, 7);
        let sc = exact_score(&tab, &x, 1).unwrap();
        let toward = (0..2).find(|&a| spec.is_goal(&spec.step(&x, a))).unwrap();
        assert!((sc[toward] - 1.0 / tab.prob(1, &x)).abs() < 1e-12);
        assert!(exact_score(&tab, &s(3, 7), 1).is_err());
        assert!(exact_score(&tab, &x, 0).is_err());
    }

    #[test]
    fn scores_approach_one_at_stationarity() {
        // odd cycle: aperiodic, so p_t converges to uniform
        let spec = z(5);
        let tab = exact_probabilities(&spec, 400).unwrap();
        for x in tab.states().to_vec() {
            for v in exact_score(&tab, &x, 400).unwrap() {
                assert!((v - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(exact_probabilities(&GraphSpec::cube2(), 1), Err(Error::Resource(_))));
    }
}
