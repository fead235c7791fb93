//! Exact distance-to-goal tables by multi-source breadth-first search.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::group::{GraphSpec, State};

/// Marks ranks that are not in the goal set's component.
pub const UNREACHED: u8 = u8::MAX;

pub const TABLE_MAGIC: &[u8; 4] = b"CDDT";
pub const TABLE_VERSION: u16 = 1;

/// Default cap on the number of reachable states.
pub const DEFAULT_STATE_BUDGET: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// One byte per rank of the family's perfect rank function.
    Dense(Vec<u8>),
    Sparse(HashMap<State, u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSummary {
    pub count: usize,
    pub diameter: usize,
    pub mean: f64,
    /// Number of states at each distance.
    pub layers: Vec<usize>,
}

/// Exact distances from every state of the goal set's component to the
/// nearest goal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    label: String,
    storage: Storage,
    summary: DistanceSummary,
}

fn summarize(layers: Vec<usize>) -> DistanceSummary {
    let count: usize = layers.iter().sum();
    let total: f64 = layers.iter().enumerate().map(|(d, &n)| d as f64 * n as f64).sum();
    DistanceSummary { count, diameter: layers.len().saturating_sub(1), mean: total / count.max(1) as f64, layers }
}

fn too_deep(depth: usize) -> Error {
    Error::Resource(format!("distance {depth} does not fit the one-byte table encoding"))
}

fn over_budget(budget: usize, layer: usize) -> Error {
    Error::Resource(format!("more than {budget} states; search stopped at layer {layer}"))
}

/// Multi-source BFS from the goal set over its whole component. Uses the
/// dense rank table when the family has one.
pub fn bfs_distances(spec: &GraphSpec, max_states: usize) -> Result<DistanceTable> {
    match spec.rank_space() {
        Some(space) => bfs_dense(spec, space, max_states),
        None => bfs_sparse(spec, max_states),
    }
}

fn bfs_dense(spec: &GraphSpec, space: usize, max_states: usize) -> Result<DistanceTable> {
    let mut dist = vec![UNREACHED; space];
    let mut frontier: Vec<usize> = Vec::new();
    for g in spec.goals() {
        let r = spec.rank(g).expect("dense family");
        if dist[r] != 0 {
            dist[r] = 0;
            frontier.push(r);
        }
    }
    let mut layers = vec![frontier.len()];
    let mut seen = frontier.len();
    while !frontier.is_empty() {
        let depth = layers.len();
        if depth >= UNREACHED as usize {
            return Err(too_deep(depth));
        }
        let mut next = Vec::new();
        for &r in &frontier {
            let x = spec.unrank(r).expect("dense family");
            for a in 0..spec.num_generators() {
                let y = spec.rank(&spec.step(&x, a)).expect("dense family");
                if dist[y] == UNREACHED {
                    dist[y] = depth as u8;
                    next.push(y);
                }
            }
        }
        seen += next.len();
        if seen > max_states {
            return Err(over_budget(max_states, depth));
        }
        if !next.is_empty() {
            layers.push(next.len());
        }
        frontier = next;
    }
    Ok(DistanceTable { label: spec.label(), storage: Storage::Dense(dist), summary: summarize(layers) })
}

fn bfs_sparse(spec: &GraphSpec, max_states: usize) -> Result<DistanceTable> {
    let mut dist: HashMap<State, u8> = HashMap::new();
    let mut frontier = Vec::new();
    for g in spec.goals() {
        if dist.insert(g.clone(), 0).is_none() {
            frontier.push(g.clone());
        }
    }
    let mut layers = vec![frontier.len()];
    while !frontier.is_empty() {
        let depth = layers.len();
        if depth >= UNREACHED as usize {
            return Err(too_deep(depth));
        }
        let mut next = Vec::new();
        for x in &frontier {
            for a in 0..spec.num_generators() {
                let y = spec.step(x, a);
                if !dist.contains_key(&y) {
                    dist.insert(y.clone(), depth as u8);
                    next.push(y);
                }
            }
        }
        if dist.len() > max_states {
            return Err(over_budget(max_states, depth));
        }
        if !next.is_empty() {
            layers.push(next.len());
        }
        frontier = next;
    }
    Ok(DistanceTable { label: spec.label(), storage: Storage::Sparse(dist), summary: summarize(layers) })
}

impl DistanceTable {
    /// Distance to the goal set, or `None` outside the component.
    pub fn distance(&self, spec: &GraphSpec, x: &State) -> Option<usize> {
        let d = match &self.storage {
            Storage::Dense(v) => *v.get(spec.rank(x)?)?,
            Storage::Sparse(m) => *m.get(x)?,
        };
        (d != UNREACHED).then_some(d as usize)
    }

    pub fn summary(&self) -> &DistanceSummary {
        &self.summary
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.summary.count
    }

    pub fn is_empty(&self) -> bool {
        self.summary.count == 0
    }

    /// Every reachable state with its distance. Dense tables yield states
    /// in rank order; sparse tables in arbitrary order.
    pub fn entries(&self, spec: &GraphSpec) -> Vec<(State, usize)> {
        match &self.storage {
            Storage::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &d)| d != UNREACHED)
                .map(|(r, &d)| (spec.unrank(r).expect("dense family"), d as usize))
                .collect(),
            Storage::Sparse(m) => m.iter().map(|(x, &d)| (x.clone(), d as usize)).collect(),
        }
    }

    /// Binary layout, little-endian:
    ///
    /// ```text
    /// "CDDT" | version u16 | label length u16 | label bytes | kind u8
    /// kind 0 (dense):  rank-space size u64 | one distance byte per rank
    /// kind 1 (sparse): entry count u64 | state length u16 |
    ///                  per entry: state values (u16 each) | distance byte
    /// ```
    ///
    /// Distance byte 255 means unreachable.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(TABLE_MAGIC);
        buf.extend_from_slice(&TABLE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.label.len() as u16).to_le_bytes());
        buf.extend_from_slice(self.label.as_bytes());
        match &self.storage {
            Storage::Dense(v) => {
                buf.push(0);
                buf.extend_from_slice(&(v.len() as u64).to_le_bytes());
                buf.extend_from_slice(v);
            }
            Storage::Sparse(m) => {
                buf.push(1);
                buf.extend_from_slice(&(m.len() as u64).to_le_bytes());
                let len = m.keys().next().map_or(0, |x| x.as_slice().len());
                buf.extend_from_slice(&(len as u16).to_le_bytes());
                let mut items: Vec<_> = m.iter().collect();
                items.sort();
                for (x, &d) in items {
                    for v in x.as_slice() {
                        buf.extend_from_slice(&v.to_le_bytes());
                    }
                    buf.push(d);
                }
            }
        }
        let tmp = path.with_extension("tmp");
        fs::File::create(&tmp)?.write_all(&buf)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(spec: &GraphSpec, path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let fmt = |m: &str| Error::Format(format!("distance table: {m}"));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| fmt("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(4)? != TABLE_MAGIC {
            return Err(fmt("bad magic"));
        }
        if u16::from_le_bytes(take(2)?.try_into().unwrap()) != TABLE_VERSION {
            return Err(fmt("unsupported version"));
        }
        let label_len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let label = String::from_utf8(take(label_len)?.to_vec()).map_err(|_| fmt("label is not UTF-8"))?;
        if label != spec.label() {
            return Err(fmt(&format!("table is for {label}, not {}", spec.label())));
        }
        let kind = take(1)?[0];
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let mut counts: Vec<usize> = Vec::new();
        let mut bump = |d: u8| {
            if d != UNREACHED {
                let d = d as usize;
                if counts.len() <= d {
                    counts.resize(d + 1, 0);
                }
                counts[d] += 1;
            }
        };
        let storage = match kind {
            0 => {
                if Some(n) != spec.rank_space() {
                    return Err(fmt("rank space size does not match the graph"));
                }
                let v = take(n)?.to_vec();
                v.iter().for_each(|&d| bump(d));
                Storage::Dense(v)
            }
            1 => {
                let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
                let mut m = HashMap::with_capacity(n);
                for _ in 0..n {
                    let raw = take(2 * len)?;
                    let x = State::new(raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect());
                    spec.validate(&x).map_err(|e| fmt(&e.to_string()))?;
                    let d = take(1)?[0];
                    bump(d);
                    m.insert(x, d);
                }
                Storage::Sparse(m)
            }
            k => return Err(fmt(&format!("unknown storage kind {k}"))),
        };
        if pos != bytes.len() {
            return Err(fmt("trailing bytes"));
        }
        if counts.contains(&0) {
            return Err(fmt("distance layers are not contiguous"));
        }
        Ok(DistanceTable { label, storage, summary: summarize(counts) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::sl2;

    #[test]
    fn sl2_component_sizes() {
        for p in [2u32, 3, 5, 7] {
            let spec = GraphSpec::sl2p(p).unwrap();
            let t = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
            assert_eq!(t.len() as u64, sl2::order(p as u64), "p={p}");
        }
    }

    #[test]
    fn neighbors_differ_by_at_most_one() {
        let spec = GraphSpec::sl2p(7).unwrap();
        let t = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
        for (x, d) in t.entries(&spec) {
            let nd: Vec<usize> = (0..4).map(|a| t.distance(&spec, &spec.step(&x, a)).unwrap()).collect();
            assert!(nd.iter().all(|&e| e.abs_diff(d) <= 1));
            if d > 0 {
                assert!(nd.contains(&(d - 1)));
            } else {
                assert!(spec.is_goal(&x));
            }
        }
    }

    #[test]
    fn cyclic_distances() {
        let spec = GraphSpec::cyclic(12).unwrap();
        let t = bfs_distances(&spec, 1000).unwrap();
        assert_eq!(t.summary().diameter, 6);
        assert_eq!(t.summary().layers, vec![1, 2, 2, 2, 2, 2, 1]);
        assert!((t.summary().mean - 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = GraphSpec::sl2p(7).unwrap();
        match bfs_distances(&spec, 50) {
            Err(Error::Resource(msg)) => assert!(msg.contains("layer")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn persistence_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        for spec in [GraphSpec::sl2p(5).unwrap(), GraphSpec::cyclic(9).unwrap()] {
            let t = bfs_distances(&spec, 10_000).unwrap();
            let path = dir.path().join("t.bin");
            t.save(&path).unwrap();
            let back = DistanceTable::load(&spec, &path).unwrap();
            assert_eq!(back, t);
            let bytes = fs::read(&path).unwrap();
            fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
            assert!(matches!(DistanceTable::load(&spec, &path), Err(Error::Format(_))));
        }
        let t = bfs_distances(&GraphSpec::sl2p(5).unwrap(), 10_000).unwrap();
        let path = dir.path().join("u.bin");
        t.save(&path).unwrap();
        assert!(matches!(DistanceTable::load(&GraphSpec::sl2p(7).unwrap(), &path), Err(Error::Format(_))));
    }
}
