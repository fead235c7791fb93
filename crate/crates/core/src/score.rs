//! Anything that can produce reverse-process scores for a batch of states.

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};

/// A score function `sigma_t(x)_a` for all generators `a`.
///
/// `score_batch` returns a row-major `states.len() x |S|` matrix of
/// positive reals.
pub trait ScoreSource: Sync {
    fn score_batch(&self, spec: &GraphSpec, states: &[State], t: usize) -> Result<Vec<f64>>;
}

/// The same score `c` on every input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantScore(pub f64);

impl ScoreSource for ConstantScore {
    fn score_batch(&self, spec: &GraphSpec, states: &[State], _t: usize) -> Result<Vec<f64>> {
        if !(self.0 > 0.0 && self.0.is_finite()) {
            return Err(Error::Numeric(format!("constant score must be positive, got {}", self.0)));
        }
        Ok(vec![self.0; states.len() * spec.num_generators()])
    }
}

impl<S: ScoreSource + ?Sized> ScoreSource for &S {
    fn score_batch(&self, spec: &GraphSpec, states: &[State], t: usize) -> Result<Vec<f64>> {
        (**self).score_batch(spec, states, t)
    }
}
