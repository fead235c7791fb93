use super::SolveResult;
use crate::error::{Error, Result};

/// Re-solves with the horizon shrunk to the best length found, for at most
/// `max_rounds` extra attempts, keeping only strict improvements. Node
/// counts and wall time accumulate over all attempts.
pub fn t_calibrate<F>(mut solve: F, initial_horizon: usize, max_rounds: usize) -> Result<SolveResult>
where
    F: FnMut(usize) -> Result<SolveResult>,
{
    let mut best = solve(initial_horizon)?;
    if !best.solved {
        return Ok(best);
    }
    let mut horizon = initial_horizon;
    for _ in 0..max_rounds {
        let len = best.length();
        if len == 0 || len >= horizon {
            break;
        }
        horizon = len;
        let next = solve(horizon)?;
        best.nodes_expanded += next.nodes_expanded;
        best.wall_time += next.wall_time;
        if next.solved && next.length() < best.length() {
            best = SolveResult { nodes_expanded: best.nodes_expanded, wall_time: best.wall_time, ..next };
        } else {
            break;
        }
    }
    Ok(best)
}

/// Mean number of steps, counting unsolved walks as `t_penalty`.
pub fn estimate_expected_time(walks: &[SolveResult], t_penalty: f64) -> Result<f64> {
    if walks.is_empty() {
        return Err(Error::Domain("no walks to average".into()));
    }
    let total: f64 = walks.iter().map(|w| if w.solved { w.length() as f64 } else { t_penalty }).sum();
    Ok(total / walks.len() as f64)
}

/// Variant weighting each solved walk by its normalized walk probability
/// `exp(cum_logprob)`; unsolved walks enter with the average solved weight
/// and `t_penalty` steps. `None` unless every solved walk carries a
/// log-probability.
pub fn estimate_expected_time_weighted(walks: &[SolveResult], t_penalty: f64) -> Option<f64> {
    let solved: Vec<(f64, f64)> =
        walks.iter().filter(|w| w.solved).map(|w| w.cum_logprob.map(|lp| (lp, w.length() as f64))).collect::<Option<_>>()?;
    let unsolved = walks.len() - solved.len();
    if solved.is_empty() {
        return (unsolved > 0).then_some(t_penalty);
    }
    let max = solved.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = solved.iter().map(|s| (s.0 - max).exp()).collect();
    let mean_w = weights.iter().sum::<f64>() / weights.len() as f64;
    let num: f64 = weights.iter().zip(&solved).map(|(w, s)| w * s.1).sum::<f64>() + unsolved as f64 * mean_w * t_penalty;
    let den = weights.iter().sum::<f64>() + unsolved as f64 * mean_w;
    Some(num / den)
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;

    fn solved(len: usize) -> SolveResult {
        SolveResult {
            solved: true,
            path: vec![0; len],
            nodes_expanded: 1,
            wall_time: Duration::ZERO,
            cum_logprob: Some(-(len as f64)),
        }
    }

    #[test]
    fn expected_time_examples() {
        let all: Vec<_> = (0..4).map(|_| solved(6)).collect();
        assert_eq!(estimate_expected_time(&all, 20.0).unwrap(), 6.0);
        let none = vec![SolveResult::unsolved(0, Duration::ZERO); 3];
        assert_eq!(estimate_expected_time(&none, 20.0).unwrap(), 20.0);
        let half = vec![solved(4), solved(4), none[0].clone(), none[0].clone()];
        assert_eq!(estimate_expected_time(&half, 20.0).unwrap(), 12.0);
        assert!(estimate_expected_time(&[], 1.0).is_err());
        assert_eq!(estimate_expected_time_weighted(&all, 20.0), Some(6.0));
        assert_eq!(estimate_expected_time_weighted(&half, 20.0), Some(12.0));
    }

    #[test]
    fn unsolved_first_attempt_stops() {
        let mut calls = 0;
        let r = t_calibrate(
            |_| {
                calls += 1;
                Ok(SolveResult::unsolved(3, Duration::ZERO))
            },
            10,
            5,
        )
        .unwrap();
        assert!(!r.solved);
        assert_eq!(calls, 1);
    }

    #[test]
    fn keeps_improvements_only() {
        // lengths returned per horizon: 10 -> 8, 8 -> 5, 5 -> 7
        let r = t_calibrate(
            |h| {
                Ok(match h {
                    10 => solved(8),
                    8 => solved(5),
                    _ => solved(7),
                })
            },
            10,
            10,
        )
        .unwrap();
        assert_eq!(r.length(), 5);
        assert_eq!(r.nodes_expanded, 3);
        let one = t_calibrate(|h| Ok(if h == 10 { solved(8) } else { solved(5) }), 10, 1).unwrap();
        assert_eq!(one.length(), 5);
    }
}
