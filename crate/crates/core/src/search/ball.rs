//! Exact-distance ball around the goal set.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};

/// Default cap on ball entries.
pub const DEFAULT_BALL_CAP: usize = 20_000_000;

/// Every state within `radius` of the goal set, with its distance and a
/// generator that moves one step closer (`None` on goals).
#[derive(Clone, Debug, PartialEq)]
pub struct BallTable {
    radius: usize,
    entries: HashMap<State, (u8, Option<u16>)>,
}

/// Multi-source BFS from the goals out to `radius`. Fails with a resource
/// error naming the last complete radius once `max_entries` is exceeded.
pub fn build_ball(spec: &GraphSpec, radius: usize, max_entries: usize) -> Result<BallTable> {
    if radius >= u8::MAX as usize {
        return Err(Error::Domain(format!("ball radius {radius} is too large")));
    }
    let mut entries: HashMap<State, (u8, Option<u16>)> = HashMap::new();
    let mut frontier = Vec::new();
    for g in spec.goals() {
        entries.insert(g.clone(), (0, None));
        frontier.push(g.clone());
    }
    if entries.len() > max_entries {
        return Err(Error::Resource(format!("goal set alone exceeds the ball cap of {max_entries}")));
    }
    for depth in 1..=radius {
        let mut next = Vec::new();
        for x in &frontier {
            for a in 0..spec.num_generators() {
                let y = spec.step(x, a);
                if !entries.contains_key(&y) {
                    entries.insert(y.clone(), (depth as u8, Some(spec.inverse(a) as u16)));
                    next.push(y);
                }
            }
        }
        if entries.len() > max_entries {
            return Err(Error::Resource(format!(
                "ball exceeds {max_entries} entries at radius {depth}; achieved radius {}",
                depth - 1
            )));
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(BallTable { radius, entries })
}

impl BallTable {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, x: &State) -> bool {
        self.entries.contains_key(x)
    }

    pub fn distance(&self, x: &State) -> Option<usize> {
        self.entries.get(x).map(|e| e.0 as usize)
    }

    pub fn first_move(&self, x: &State) -> Option<usize> {
        self.entries.get(x).and_then(|e| e.1.map(usize::from))
    }

    /// Optimal path from `x` to the goal set by following first moves.
    pub fn completion(&self, spec: &GraphSpec, x: &State) -> Option<Vec<usize>> {
        let mut cur = x.clone();
        let mut path = Vec::with_capacity(self.distance(x)?);
        while let Some(a) = self.first_move(&cur) {
            path.push(a);
            cur = spec.step(&cur, a);
        }
        Some(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, usize, Option<usize>)> {
        self.entries.iter().map(|(x, e)| (x, e.0 as usize, e.1.map(usize::from)))
    }

    /// Number of entries at each distance.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut v = vec![0; self.radius + 1];
        for (_, d, _) in self.iter() {
            v[d] += 1;
        }
        while v.len() > 1 && v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    /// Text form: one `state;distance;first_move` line per entry, sorted.
    pub fn to_text(&self, spec: &GraphSpec) -> String {
        let mut items: Vec<_> = self.iter().collect();
        items.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        let mut s = format!("# ball radius={} entries={}\n", self.radius, self.len());
        for (x, d, m) in items {
            let name = m.map_or("-", |a| spec.generators().name(a));
            s.push_str(&format!("{x};{d};{name}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bfs_distances, DEFAULT_STATE_BUDGET};

    #[test]
    fn radius_zero_is_goal_set() {
        let spec = GraphSpec::sl2p(7).unwrap();
        let b = build_ball(&spec, 0, 100).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.distance(&spec.identity()), Some(0));
        assert_eq!(b.first_move(&spec.identity()), None);
    }

    #[test]
    fn radius_one_cube3() {
        assert_eq!(build_ball(&GraphSpec::cube3(), 1, 100).unwrap().len(), 13);
        assert_eq!(build_ball(&GraphSpec::cube2(), 1, 100).unwrap().len(), 7);
    }

    #[test]
    fn chains_match_exact_distances() {
        for p in [2, 3, 5, 7] {
            let spec = GraphSpec::sl2p(p).unwrap();
            let table = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
            let ball = build_ball(&spec, 5, usize::MAX).unwrap();
            for (x, d, _) in ball.iter() {
                assert_eq!(table.distance(&spec, x), Some(d));
                let path = ball.completion(&spec, x).unwrap();
                assert_eq!(path.len(), d);
                assert!(spec.is_goal(&spec.apply_word(x, &path).unwrap()));
            }
            let inside = table.entries(&spec).iter().filter(|(_, d)| *d <= 5).count();
            assert_eq!(inside, ball.len());
        }
    }

    #[test]
    fn cap_reports_achieved_radius() {
        let spec = GraphSpec::cube3();
        match build_ball(&spec, 3, 200) {
            Err(Error::Resource(m)) => assert!(m.contains("achieved radius 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }
}
