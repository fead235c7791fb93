//! Cayley graphs of groups and group actions with invertible generators.
//!
//! A [`GraphSpec`] bundles the vertex encoding, the generator set with its
//! inverse pairing, the goal set and the feature encoder. All families are
//! immutable after construction and safe to share between threads.

pub mod cube;
pub mod perm;
pub mod sl2;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};

/// A vertex: a fixed-length vector of small non-negative integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Vec<u16>);

impl State {
    pub fn new(values: Vec<u16>) -> Self {
        State(values)
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u16> {
        self.0
    }

    /// Parses a comma- or whitespace-separated integer vector.
    pub fn parse(text: &str) -> Result<Self> {
        perm::parse_state(text).map(State)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({self})")
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Generator labels with the inverse involution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    names: Vec<String>,
    inverse_of: Vec<usize>,
}

impl GeneratorSet {
    pub fn new(names: Vec<String>, inverse_of: Vec<usize>) -> Result<Self> {
        if names.is_empty() || names.len() != inverse_of.len() {
            return Err(Error::Domain("generator set needs one inverse per name".into()));
        }
        for (a, &b) in inverse_of.iter().enumerate() {
            if b >= names.len() || inverse_of[b] != a {
                return Err(Error::Domain(format!(
                    "inverse table is not an involution at generator {a}"
                )));
            }
        }
        Ok(GeneratorSet { names, inverse_of })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse_of[a]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Cube3,
    Cube2,
    Sl2p,
    GenericPerm,
}

impl FamilyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cube3" => Ok(FamilyKind::Cube3),
            "cube2" => Ok(FamilyKind::Cube2),
            "sl2p" => Ok(FamilyKind::Sl2p),
            "generic-perm" | "perm" => Ok(FamilyKind::GenericPerm),
            other => Err(Error::Usage(format!(
                "unknown family {other:?} (expected cube3, cube2, sl2p or generic-perm)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Cube3 => "cube3",
            FamilyKind::Cube2 => "cube2",
            FamilyKind::Sl2p => "sl2p",
            FamilyKind::GenericPerm => "generic-perm",
        }
    }
}

#[derive(Clone, Debug)]
enum Action {
    Cube3(Vec<cube::CubeMove>),
    Cube2(Vec<cube::CubeMove>),
    Sl2 { p: u16 },
    Perm { degree: usize, perms: Vec<Vec<u16>> },
}

/// Orbit label of a cube3 facet assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitInvariant {
    pub corner_twist: u8,
    pub edge_flip: u8,
    pub parity: u8,
}

/// Declarative description of one Cayley graph instance.
#[derive(Clone, Debug)]
pub struct GraphSpec {
    action: Action,
    generators: GeneratorSet,
    goals: Vec<State>,
    goal_lookup: HashSet<State>,
    feature_dim: usize,
}

impl GraphSpec {
    /// 3x3x3 cube, quarter-turn metric (12 generators).
    pub fn cube3() -> Self {
        let (names, moves) = cube::cube3_moves();
        let inverse_of = (0..names.len()).map(|a| a ^ 1).collect();
        Self::build(
            Action::Cube3(moves),
            GeneratorSet::new(names, inverse_of).expect("paired turns"),
            vec![State(cube::solved3())],
            cube::CUBE3_FEATURES,
        )
    }

    /// 2x2x2 cube with the DBL corner fixed: U, R, F quarter turns.
    pub fn cube2() -> Self {
        let (names, moves) = cube::cube2_moves();
        let inverse_of = (0..names.len()).map(|a| a ^ 1).collect();
        Self::build(
            Action::Cube2(moves),
            GeneratorSet::new(names, inverse_of).expect("paired turns"),
            vec![State(cube::solved2())],
            cube::CUBE2_FEATURES,
        )
    }

    /// SL2(Z_p) with T+1, T-1, U+1, U-1.
    pub fn sl2p(p: u32) -> Result<Self> {
        if !sl2::is_prime(p) || p > 4093 {
            return Err(Error::Domain(format!("sl2p needs a prime p < 4096, got {p}")));
        }
        let names = sl2::NAMES.iter().map(|s| s.to_string()).collect();
        Ok(Self::build(
            Action::Sl2 { p: p as u16 },
            GeneratorSet::new(names, sl2::INVERSES.to_vec())?,
            vec![State(sl2::identity())],
            4 * p as usize,
        ))
    }

    /// Permutation group generated by `perms` acting on itself; inverses are
    /// appended when missing. The goal is the identity permutation.
    pub fn generic_perm(names: Vec<String>, perms: Vec<Vec<u16>>) -> Result<Self> {
        let degree = perms.first().map(Vec::len).ok_or_else(|| {
            Error::Domain("generic-perm needs at least one generator".into())
        })?;
        if names.len() != perms.len() {
            return Err(Error::Domain("one name per generator".into()));
        }
        for (n, p) in names.iter().zip(&perms) {
            if !perm::is_permutation(p, degree) {
                return Err(Error::Domain(format!("{n} is not a permutation of 0..{degree}")));
            }
        }
        let (names, perms, inverse_of) = perm::close_under_inverses(names, perms);
        Ok(Self::build(
            Action::Perm { degree, perms },
            GeneratorSet::new(names, inverse_of)?,
            vec![State(perm::identity(degree))],
            degree * degree,
        ))
    }

    pub fn from_generator_file(path: &Path) -> Result<Self> {
        let (_, names, perms) = perm::read_generator_file(path)?;
        Self::generic_perm(names, perms)
    }

    /// The cyclic group Z_n as rotations of n points, generators `+1`, `-1`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("cyclic group needs n >= 2".into()));
        }
        let plus: Vec<u16> = (0..n).map(|i| ((i + 1) % n) as u16).collect();
        let minus = perm::inverse(&plus);
        if n == 2 {
            return Self::generic_perm(vec!["+1".into()], vec![plus]);
        }
        Self::generic_perm(vec!["+1".into(), "-1".into()], vec![plus, minus])
    }

    fn build(action: Action, generators: GeneratorSet, goals: Vec<State>, feature_dim: usize) -> Self {
        let goal_lookup = goals.iter().cloned().collect();
        GraphSpec { action, generators, goals, goal_lookup, feature_dim }
    }

    /// Replaces the goal set. Goals must be valid and pairwise distinct.
    pub fn with_goals(mut self, goals: Vec<State>) -> Result<Self> {
        if goals.is_empty() {
            return Err(Error::Domain("goal set must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        for g in &goals {
            self.validate(g)?;
            if !seen.insert(g.clone()) {
                return Err(Error::Domain(format!("duplicate goal state {g}")));
            }
        }
        self.goal_lookup = seen;
        self.goals = goals;
        Ok(self)
    }

    pub fn with_goal_file(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let goals = perm::parse_states(&text)?.into_iter().map(State).collect();
        self.with_goals(goals)
    }

    pub fn family(&self) -> FamilyKind {
        match self.action {
            Action::Cube3(_) => FamilyKind::Cube3,
            Action::Cube2(_) => FamilyKind::Cube2,
            Action::Sl2 { .. } => FamilyKind::Sl2p,
            Action::Perm { .. } => FamilyKind::GenericPerm,
        }
    }

    /// The prime for sl2p, otherwise `None`.
    pub fn modulus(&self) -> Option<u32> {
        match self.action {
            Action::Sl2 { p } => Some(p as u32),
            _ => None,
        }
    }

    /// Short human-readable label such as `sl2p(p=31)`.
    pub fn label(&self) -> String {
        match &self.action {
            Action::Sl2 { p } => format!("sl2p(p={p})"),
            Action::Perm { degree, perms } => {
                format!("generic-perm(n={degree}, |S|={})", perms.len())
            }
            _ => self.family().as_str().to_string(),
        }
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.generators.inverse(a)
    }

    pub fn goals(&self) -> &[State] {
        &self.goals
    }

    pub fn is_goal(&self, x: &State) -> bool {
        self.goal_lookup.contains(x)
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn state_len(&self) -> usize {
        match &self.action {
            Action::Cube3(_) => cube::CUBE3_LEN,
            Action::Cube2(_) => cube::CUBE2_LEN,
            Action::Sl2 { .. } => 4,
            Action::Perm { degree, .. } => *degree,
        }
    }

    /// The solved state / identity element of the family.
    pub fn identity(&self) -> State {
        State(match &self.action {
            Action::Cube3(_) => cube::solved3(),
            Action::Cube2(_) => cube::solved2(),
            Action::Sl2 { .. } => sl2::identity(),
            Action::Perm { degree, .. } => perm::identity(*degree),
        })
    }

    pub fn validate(&self, x: &State) -> Result<()> {
        let v = x.as_slice();
        let res = match &self.action {
            Action::Cube3(_) => cube::validate3(v),
            Action::Cube2(_) => cube::validate2(v),
            Action::Sl2 { p } => sl2::validate(v, *p),
            Action::Perm { degree, .. } => {
                if perm::is_permutation(v, *degree) {
                    Ok(())
                } else {
                    Err(format!("{x} is not a permutation of 0..{degree}"))
                }
            }
        };
        res.map_err(Error::Encoding)
    }

    /// The neighbor `x * a`, with validation of both arguments.
    pub fn apply(&self, x: &State, a: usize) -> Result<State> {
        self.validate(x)?;
        if a >= self.num_generators() {
            return Err(Error::Domain(format!(
                "generator index {a} out of range for {} generators",
                self.num_generators()
            )));
        }
        Ok(self.step(x, a))
    }

    /// Unchecked neighbor: `x` must be valid and `a < |S|`.
    pub fn step(&self, x: &State, a: usize) -> State {
        let v = x.as_slice();
        State(match &self.action {
            Action::Cube3(moves) => cube::apply3(v, &moves[a]),
            Action::Cube2(moves) => cube::apply2(v, &moves[a]),
            Action::Sl2 { p } => sl2::apply(v, a, *p),
            Action::Perm { perms, .. } => perm::apply(v, &perms[a]),
        })
    }

    /// Applies a word of generator indices left to right.
    pub fn apply_word(&self, x: &State, word: &[usize]) -> Result<State> {
        let mut cur = x.clone();
        for &a in word {
            cur = self.apply(&cur, a)?;
        }
        Ok(cur)
    }

    /// The formal inverse of a word: reversed, each letter inverted.
    pub fn inverse_word(&self, word: &[usize]) -> Vec<usize> {
        word.iter().rev().map(|&a| self.inverse(a)).collect()
    }

    /// Indices of the non-zero (unit) entries of the feature vector. Every
    /// family uses a one-hot encoding, so this is the sparse form of
    /// [`GraphSpec::encode_features`].
    pub fn feature_indices(&self, x: &State, out: &mut Vec<u32>) {
        let v = x.as_slice();
        match &self.action {
            Action::Cube3(_) => cube::facet_indices(v, true, out),
            Action::Cube2(_) => cube::facet_indices(v, false, out),
            Action::Sl2 { p } => {
                let p = *p as u32;
                out.extend(v.iter().enumerate().map(|(j, &e)| j as u32 * p + e as u32));
            }
            Action::Perm { degree, .. } => {
                let n = *degree as u32;
                out.extend(v.iter().enumerate().map(|(pos, &label)| label as u32 * n + pos as u32));
            }
        }
    }

    /// Dense feature vector of length `feature_dim`: the one-hot
    /// (label, position) matrix for permutation puzzles, four stacked
    /// one-hot residues for sl2p.
    pub fn encode_features(&self, x: &State) -> Result<Vec<f32>> {
        self.validate(x)?;
        let mut idx = Vec::new();
        self.feature_indices(x, &mut idx);
        let mut dense = vec![0.0f32; self.feature_dim];
        for i in idx {
            dense[i as usize] = 1.0;
        }
        Ok(dense)
    }

    pub fn random_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> &State {
        self.goals.choose(rng).expect("goal set is non-empty")
    }

    /// Draws k uniformly from `0..=n_max` and applies k uniform random
    /// generators to a uniformly chosen goal.
    pub fn scramble<R: Rng + ?Sized>(&self, rng: &mut R, n_max: usize) -> State {
        let k = rng.random_range(0..=n_max);
        let mut x = self.random_goal(rng).clone();
        for _ in 0..k {
            let a = rng.random_range(0..self.num_generators());
            x = self.step(&x, a);
        }
        x
    }

    /// A uniformly random element of the goal's component, where this can be
    /// drawn directly: sl2p by rejection, cube2/cube3 from the orbit's
    /// explicit description. Generic permutation groups are not supported.
    pub fn uniform_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<State> {
        match &self.action {
            Action::Sl2 { p } => loop {
                let v: Vec<u16> = (0..4).map(|_| rng.random_range(0..*p)).collect();
                if sl2::determinant(&v, *p) == 1 % *p {
                    return Ok(State(v));
                }
            },
            Action::Cube2(_) => {
                let r = rng.random_range(0..cube::CUBE2_RANKS);
                let mut v = cube::unrank2(r);
                // the last corner's twist is determined by the others
                let last = 2 * cube::CORNERS - 1;
                let sum: u16 = v[cube::CORNERS..last].iter().sum();
                v[last] = (3 - sum % 3) % 3;
                Ok(State(v))
            }
            Action::Cube3(_) => {
                let mut v = cube::solved3();
                let (c, e) = (cube::CORNERS, cube::EDGES);
                v[..c].shuffle(rng);
                v[2 * c..2 * c + e].shuffle(rng);
                if cube::parity(&v[..c]) != cube::parity(&v[2 * c..2 * c + e]) {
                    v.swap(2 * c, 2 * c + 1);
                }
                let mut twist = 0;
                for i in 0..c - 1 {
                    v[c + i] = rng.random_range(0..3);
                    twist += v[c + i];
                }
                v[2 * c - 1] = (3 - twist % 3) % 3;
                let mut flip = 0;
                for i in 0..e - 1 {
                    v[2 * c + e + i] = rng.random_range(0..2);
                    flip += v[2 * c + e + i];
                }
                v[2 * c + 2 * e - 1] = flip % 2;
                Ok(State(v))
            }
            Action::Perm { .. } => Err(Error::Domain(
                "uniform sampling is only available for sl2p, cube2 and cube3".into(),
            )),
        }
    }

    /// Conserved (twist, flip, parity) triple; cube3 only.
    pub fn orbit_invariant(&self, x: &State) -> Result<OrbitInvariant> {
        match self.action {
            Action::Cube3(_) => {
                self.validate(x)?;
                let (corner_twist, edge_flip, parity) = cube::orbit_invariant(x.as_slice());
                Ok(OrbitInvariant { corner_twist, edge_flip, parity })
            }
            _ => Err(Error::Domain(format!(
                "orbit invariant is defined for cube3, not {}",
                self.family().as_str()
            ))),
        }
    }

    /// Size of the dense rank space, for families with a perfect rank.
    pub fn rank_space(&self) -> Option<usize> {
        match self.action {
            Action::Cube2(_) => Some(cube::CUBE2_RANKS),
            Action::Sl2 { p } => Some((p as usize).pow(4)),
            _ => None,
        }
    }

    /// Mixed-radix rank (cube2) or radix-p rank (sl2p) of a valid state.
    pub fn rank(&self, x: &State) -> Option<usize> {
        match self.action {
            Action::Cube2(_) => Some(cube::rank2(x.as_slice())),
            Action::Sl2 { p } => Some(sl2::rank(x.as_slice(), p)),
            _ => None,
        }
    }

    pub fn unrank(&self, r: usize) -> Option<State> {
        match self.action {
            Action::Cube2(_) => Some(State(cube::unrank2(r))),
            Action::Sl2 { p } => Some(State(sl2::unrank(r, p))),
            _ => None,
        }
    }

    /// Formats a path as space-separated generator names.
    pub fn word_names(&self, word: &[usize]) -> String {
        word.iter().map(|&a| self.generators.name(a)).collect::<Vec<_>>().join(" ")
    }
}
