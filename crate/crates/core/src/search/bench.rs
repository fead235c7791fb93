use std::time::Instant;

use rayon::prelude::*;

use super::{beam_search, build_ball, t_calibrate, SolveResult};
use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};
use crate::oracle::DistanceTable;
use crate::score::ScoreSource;

pub const BENCH_CSV_HEADER: &str =
    "beam_width,ball_radius,solve_rate,mean_length,mean_excess,opt_pct,mean_nodes,mean_seconds";

/// Aggregate over one grid cell. `mean_excess` and `opt_pct` need oracle
/// distances; `opt_pct` counts instances solved at exactly optimal length.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub beam_width: usize,
    pub ball_radius: usize,
    pub solve_rate: f64,
    pub mean_length: f64,
    pub mean_excess: Option<f64>,
    pub opt_pct: Option<f64>,
    pub mean_nodes: f64,
    pub mean_seconds: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.4}"));
        format!(
            "{},{},{:.4},{:.4},{},{},{:.2},{:.6}",
            self.beam_width,
            self.ball_radius,
            self.solve_rate,
            self.mean_length,
            opt(self.mean_excess),
            opt(self.opt_pct),
            self.mean_nodes,
            self.mean_seconds
        )
    }
}

/// Beam search over every (width, radius) pair on the same starts.
/// `calibrate_rounds > 0` wraps each solve in T-calibration.
#[allow(clippy::too_many_arguments)]
pub fn run_bench(
    spec: &GraphSpec,
    model: &dyn ScoreSource,
    starts: &[State],
    horizon: usize,
    widths: &[usize],
    radii: &[usize],
    oracle: Option<&DistanceTable>,
    calibrate_rounds: usize,
    ball_cap: usize,
) -> Result<Vec<BenchRow>> {
    if starts.is_empty() {
        return Err(Error::Domain("benchmark needs at least one start state".into()));
    }
    let optimal: Option<Vec<usize>> = oracle
        .map(|t| {
            starts
                .iter()
                .map(|x| t.distance(spec, x).ok_or_else(|| Error::Domain(format!("{x} is not in the oracle table"))))
                .collect()
        })
        .transpose()?;
    let mut rows = Vec::new();
    for &r in radii {
        let ball = build_ball(spec, r, ball_cap)?;
        for &w in widths {
            let results: Vec<(SolveResult, f64)> = starts
                .par_iter()
                .map(|x| {
                    let clock = Instant::now();
                    let res = t_calibrate(|h| beam_search(spec, model, x, h, w, Some(&ball)), horizon, calibrate_rounds)?;
                    res.check(spec, x)?;
                    Ok((res, clock.elapsed().as_secs_f64()))
                })
                .collect::<Result<_>>()?;
            rows.push(summarize(w, r, &results, optimal.as_deref()));
        }
    }
    Ok(rows)
}

fn summarize(width: usize, radius: usize, results: &[(SolveResult, f64)], optimal: Option<&[usize]>) -> BenchRow {
    let n = results.len() as f64;
    let solved: Vec<usize> = (0..results.len()).filter(|&i| results[i].0.solved).collect();
    let ns = solved.len().max(1) as f64;
    let mean_length = solved.iter().map(|&i| results[i].0.length() as f64).sum::<f64>() / ns;
    let (mean_excess, opt_pct) = match optimal {
        Some(opt) => (
            Some(solved.iter().map(|&i| results[i].0.length() as f64 - opt[i] as f64).sum::<f64>() / ns),
            Some(100.0 * solved.iter().filter(|&&i| results[i].0.length() == opt[i]).count() as f64 / n),
        ),
        None => (None, None),
    };
    BenchRow {
        beam_width: width,
        ball_radius: radius,
        solve_rate: solved.len() as f64 / n,
        mean_length,
        mean_excess,
        opt_pct,
        mean_nodes: results.iter().map(|r| r.0.nodes_expanded as f64).sum::<f64>() / n,
        mean_seconds: results.iter().map(|r| r.1).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bfs_distances, ExactScorer};

    #[test]
    fn single_cell_grid() {
        let spec = GraphSpec::sl2p(5).unwrap();
        let oracle = ExactScorer::new(&spec, 12).unwrap();
        let table = bfs_distances(&spec, 1000).unwrap();
        let starts: Vec<State> =
            table.entries(&spec).into_iter().map(|e| e.0).filter(|x| oracle.tables.prob(12, x) > 0.0).take(20).collect();
        let rows = run_bench(&spec, &oracle, &starts, 12, &[1], &[0], Some(&table), 0, 1000).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.solve_rate, 1.0);
        assert!(row.mean_excess.unwrap() >= 0.0);
        assert_eq!(row.csv().split(',').count(), BENCH_CSV_HEADER.split(',').count());
    }
}
