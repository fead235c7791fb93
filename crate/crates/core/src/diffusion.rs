//! Forward random-walk processes and the reverse (backward) kernel.
//!
//! Time convention: `moves[t-1]` takes `states[t-1]` to `states[t]`. The
//! score `sigma_t(x)_a` estimates `p_{t-1}(x a) / p_t(x)`; under the uniform
//! forward process the backward kernel at `(x, t)` is proportional to it.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};
use crate::score::ScoreSource;

/// A forward walk `x_0 .. x_T` with the generators taken between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub moves: Vec<usize>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.moves.len()
    }

    pub fn start(&self) -> &State {
        &self.states[0]
    }

    pub fn end(&self) -> &State {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Checks the shape, every step, and that the walk starts in the goal
    /// set (pass `require_goal_start = false` for scramble-ball starts).
    pub fn validate(&self, spec: &GraphSpec, require_goal_start: bool) -> Result<()> {
        if self.states.len() != self.moves.len() + 1 {
            return Err(Error::Domain(format!(
                "trajectory has {} states for {} moves",
                self.states.len(),
                self.moves.len()
            )));
        }
        spec.validate(&self.states[0])?;
        if require_goal_start && !spec.is_goal(&self.states[0]) {
            return Err(Error::Domain("trajectory does not start at a goal".into()));
        }
        for (t, &a) in self.moves.iter().enumerate() {
            if spec.apply(&self.states[t], a)? != self.states[t + 1] {
                return Err(Error::Domain(format!("trajectory step {} is not an edge", t + 1)));
            }
        }
        Ok(())
    }

    /// `t0_state | move,move,...` with moves as generator names.
    pub fn to_line(&self, spec: &GraphSpec) -> String {
        let names: Vec<&str> = self.moves.iter().map(|&a| spec.generators().name(a)).collect();
        format!("{} | {}", self.states[0], names.join(","))
    }

    /// Inverse of [`Trajectory::to_line`]; replays the moves.
    pub fn parse_line(spec: &GraphSpec, line: &str) -> Result<Self> {
        let (head, tail) = line
            .split_once('|')
            .ok_or_else(|| Error::Format(format!("missing '|' in trajectory line {line:?}")))?;
        let x0 = State::parse(head.trim())?;
        spec.validate(&x0)?;
        let mut states = vec![x0];
        let mut moves = Vec::new();
        for name in tail.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let a = spec
                .generators()
                .index_of(name)
                .ok_or_else(|| Error::Format(format!("unknown generator {name:?}")))?;
            states.push(spec.step(states.last().unwrap(), a));
            moves.push(a);
        }
        Ok(Trajectory { states, moves })
    }
}

/// A probability vector over the generators.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelRow {
    pub probs: Vec<f64>,
}

impl KernelRow {
    /// Normalizes non-negative finite weights with a positive sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Numeric(format!("kernel weight {w} is not a finite non-negative number")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numeric(format!("kernel weights sum to {total}")));
        }
        Ok(KernelRow { probs: weights.iter().map(|w| w / total).collect() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        WeightedIndex::new(&self.probs).expect("normalized row").sample(rng)
    }

    /// Index of the largest entry; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Backward transition row at `(x, t)` from the score vector at `(x, t)`:
/// `probs[a] = score[a] / sum_b score[b]`. The uniform forward process is
/// assumed regardless of how the score was trained.
pub fn backward_kernel(spec: &GraphSpec, _x: &State, _t: usize, score: &[f64]) -> Result<KernelRow> {
    if score.len() != spec.num_generators() {
        return Err(Error::Domain(format!(
            "score has {} entries for {} generators",
            score.len(),
            spec.num_generators()
        )));
    }
    KernelRow::from_weights(score)
}

pub fn forward_step_uniform<R: Rng + ?Sized>(spec: &GraphSpec, x: &State, rng: &mut R) -> (usize, State) {
    let a = rng.random_range(0..spec.num_generators());
    (a, spec.step(x, a))
}

/// Reversed-score forward row at `(x, t)`: weight of `a` is
/// `sigma_{t+1}(x a)_{a^-1}`.
pub fn reversed_score_row(spec: &GraphSpec, x: &State, t: usize, model: &dyn ScoreSource) -> Result<KernelRow> {
    let mut rows = reversed_score_rows(spec, std::slice::from_ref(x), t, model)?;
    Ok(rows.pop().expect("one row"))
}

/// Batched [`reversed_score_row`]: one `|S|`-row model call per state.
pub fn reversed_score_rows(
    spec: &GraphSpec,
    xs: &[State],
    t: usize,
    model: &dyn ScoreSource,
) -> Result<Vec<KernelRow>> {
    let s = spec.num_generators();
    let succ: Vec<State> = xs.iter().flat_map(|x| (0..s).map(move |a| spec.step(x, a))).collect();
    let scores = model.score_batch(spec, &succ, t + 1)?;
    (0..xs.len())
        .map(|i| {
            let w: Vec<f64> = (0..s).map(|a| scores[(i * s + a) * s + spec.inverse(a)]).collect();
            KernelRow::from_weights(&w)
        })
        .collect()
}

pub fn forward_step_reversed_score<R: Rng + ?Sized>(
    spec: &GraphSpec,
    x: &State,
    t: usize,
    model: &dyn ScoreSource,
    rng: &mut R,
) -> Result<(usize, State)> {
    let a = reversed_score_row(spec, x, t, model)?.sample(rng);
    Ok((a, spec.step(x, a)))
}

/// Which forward kernel drives the walks.
#[derive(Clone, Copy)]
pub enum ForwardProcess<'a> {
    Uniform,
    ReversedScore(&'a dyn ScoreSource),
}

impl fmt::Debug for ForwardProcess<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardProcess::Uniform => f.write_str("Uniform"),
            ForwardProcess::ReversedScore(_) => f.write_str("ReversedScore"),
        }
    }
}

/// The distribution of `x_0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StartDistribution {
    /// Uniform over the goal set.
    #[default]
    Goals,
    /// A goal scrambled by `0..=n_max` uniform moves.
    Scramble { n_max: usize },
}

/// Samples `count` walks of exactly `horizon` moves. Reversed-score walks
/// advance in lockstep so each time step costs one batched model call.
pub fn sample_trajectories<R: Rng + ?Sized>(
    spec: &GraphSpec,
    horizon: usize,
    count: usize,
    process: ForwardProcess<'_>,
    start: StartDistribution,
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    if horizon == 0 || count == 0 {
        return Err(Error::Domain("horizon and count must be at least 1".into()));
    }
    let mut out: Vec<Trajectory> = (0..count)
        .map(|_| {
            let x0 = match start {
                StartDistribution::Goals => spec.random_goal(rng).clone(),
                StartDistribution::Scramble { n_max } => spec.scramble(rng, n_max),
            };
            let mut states = Vec::with_capacity(horizon + 1);
            states.push(x0);
            Trajectory { states, moves: Vec::with_capacity(horizon) }
        })
        .collect();
    for t in 0..horizon {
        match process {
            ForwardProcess::Uniform => {
                for tr in &mut out {
                    let (a, y) = forward_step_uniform(spec, tr.end(), rng);
                    tr.moves.push(a);
                    tr.states.push(y);
                }
            }
            ForwardProcess::ReversedScore(model) => {
                let xs: Vec<State> = out.iter().map(|tr| tr.end().clone()).collect();
                let rows = reversed_score_rows(spec, &xs, t, model)?;
                for (tr, row) in out.iter_mut().zip(rows) {
                    let a = row.sample(rng);
                    let y = spec.step(tr.end(), a);
                    tr.moves.push(a);
                    tr.states.push(y);
                }
            }
        }
    }
    Ok(out)
}
