//! Solving by running the learned backward process: sampled walks, beam
//! search, ball completion, T-calibration and benchmark sweeps.

mod ball;
mod beam;
mod bench;
mod calibrate;

use std::time::Duration;

pub use ball::{build_ball, BallTable, DEFAULT_BALL_CAP};
pub use beam::{backward_walk, beam_search, beam_search_with, BeamOptions};
pub use bench::{run_bench, BenchRow, BENCH_CSV_HEADER};
pub use calibrate::{estimate_expected_time, estimate_expected_time_weighted, t_calibrate};

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};

/// Outcome of one solve attempt. `path` is the generator word taking the
/// start state to a goal.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub solved: bool,
    pub path: Vec<usize>,
    /// States whose scores were evaluated.
    pub nodes_expanded: usize,
    pub wall_time: Duration,
    /// Log-probability of the returned walk under the backward kernel
    /// (ball completion contributes nothing).
    pub cum_logprob: Option<f64>,
}

impl SolveResult {
    pub fn unsolved(nodes_expanded: usize, wall_time: Duration) -> Self {
        SolveResult { solved: false, path: Vec::new(), nodes_expanded, wall_time, cum_logprob: None }
    }

    pub fn length(&self) -> usize {
        self.path.len()
    }

    /// True when unsolved, or when the path really leads `start` to a goal.
    pub fn verify(&self, spec: &GraphSpec, start: &State) -> bool {
        !self.solved || spec.apply_word(start, &self.path).is_ok_and(|y| spec.is_goal(&y))
    }

    /// Errors if a solved path does not lead to a goal.
    pub fn check(&self, spec: &GraphSpec, start: &State) -> Result<()> {
        if self.verify(spec, start) {
            Ok(())
        } else {
            Err(Error::Domain(format!("path {} does not reach a goal", spec.word_names(&self.path))))
        }
    }

    /// `solved,length,nodes,seconds,path` with the path as space-separated
    /// generator names; the first field is `solved` or `unsolved`.
    pub fn record(&self, spec: &GraphSpec) -> String {
        format!(
            "{},{},{},{:.6},{}",
            if self.solved { "solved" } else { "unsolved" },
            self.length(),
            self.nodes_expanded,
            self.wall_time.as_secs_f64(),
            spec.word_names(&self.path)
        )
    }
}
