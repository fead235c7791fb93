//! Cubelet-level model of the 3x3x3 and 2x2x2 cubes under the quarter-turn
//! metric.
//!
//! Corners are numbered URF, UFL, ULB, UBR, DFR, DLF, DBL, DRB and edges UR,
//! UF, UL, UB, DR, DF, DL, DB, FR, FL, BL, BR. A state stores, for each
//! position, the cubelet occupying it and that cubelet's twist (corners) or
//! flip (edges). Composition is the right action
//! `(x * m).perm[i] = x.perm[m.perm[i]]`,
//! `(x * m).ori[i] = x.ori[m.perm[i]] + m.ori[i]`.

pub const CORNERS: usize = 8;
pub const EDGES: usize = 12;

/// Layout of a cube3 state vector: `[cp; 8] [co; 8] [ep; 12] [eo; 12]`.
pub const CUBE3_LEN: usize = 2 * CORNERS + 2 * EDGES;
/// Layout of a cube2 state vector: `[cp; 8] [co; 8]`.
pub const CUBE2_LEN: usize = 2 * CORNERS;

/// Corner position held fixed in the 2x2x2 model (DBL).
pub const CUBE2_FIXED_CORNER: usize = 6;

const FACETS3: usize = 3 * CORNERS + 2 * EDGES;
const FACETS2: usize = 3 * CORNERS;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeMove {
    pub cp: [u8; CORNERS],
    pub co: [u8; CORNERS],
    pub ep: [u8; EDGES],
    pub eo: [u8; EDGES],
}

impl CubeMove {
    const IDENTITY: CubeMove = CubeMove {
        cp: [0, 1, 2, 3, 4, 5, 6, 7],
        co: [0; CORNERS],
        ep: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        eo: [0; EDGES],
    };

    fn compose(&self, m: &CubeMove) -> CubeMove {
        let mut out = CubeMove::IDENTITY;
        for i in 0..CORNERS {
            let src = m.cp[i] as usize;
            out.cp[i] = self.cp[src];
            out.co[i] = (self.co[src] + m.co[i]) % 3;
        }
        for i in 0..EDGES {
            let src = m.ep[i] as usize;
            out.ep[i] = self.ep[src];
            out.eo[i] = (self.eo[src] + m.eo[i]) % 2;
        }
        out
    }
}

const U: CubeMove = CubeMove {
    cp: [3, 0, 1, 2, 4, 5, 6, 7],
    co: [0, 0, 0, 0, 0, 0, 0, 0],
    ep: [3, 0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11],
    eo: [0; EDGES],
};
const R: CubeMove = CubeMove {
    cp: [4, 1, 2, 0, 7, 5, 6, 3],
    co: [2, 0, 0, 1, 1, 0, 0, 2],
    ep: [8, 1, 2, 3, 11, 5, 6, 7, 4, 9, 10, 0],
    eo: [0; EDGES],
};
const F: CubeMove = CubeMove {
    cp: [1, 5, 2, 3, 0, 4, 6, 7],
    co: [1, 2, 0, 0, 2, 1, 0, 0],
    ep: [0, 9, 2, 3, 4, 8, 6, 7, 1, 5, 10, 11],
    eo: [0, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0],
};
const D: CubeMove = CubeMove {
    cp: [0, 1, 2, 3, 5, 6, 7, 4],
    co: [0; CORNERS],
    ep: [0, 1, 2, 3, 5, 6, 7, 4, 8, 9, 10, 11],
    eo: [0; EDGES],
};
const L: CubeMove = CubeMove {
    cp: [0, 2, 6, 3, 4, 1, 5, 7],
    co: [0, 1, 2, 0, 0, 2, 1, 0],
    ep: [0, 1, 10, 3, 4, 5, 9, 7, 8, 2, 6, 11],
    eo: [0; EDGES],
};
const B: CubeMove = CubeMove {
    cp: [0, 1, 3, 7, 4, 5, 2, 6],
    co: [0, 0, 1, 2, 0, 0, 2, 1],
    ep: [0, 1, 2, 11, 4, 5, 6, 10, 8, 9, 3, 7],
    eo: [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 1],
};

/// Quarter turns and their inverses, interleaved `X, X'`.
pub fn quarter_turns(faces: &[(&str, &CubeMove)]) -> (Vec<String>, Vec<CubeMove>) {
    let mut names = Vec::with_capacity(faces.len() * 2);
    let mut moves = Vec::with_capacity(faces.len() * 2);
    for (name, m) in faces {
        let inv = m.compose(m).compose(m);
        names.push(name.to_string());
        moves.push((*m).clone());
        names.push(format!("{name}'"));
        moves.push(inv);
    }
    (names, moves)
}

pub fn cube3_moves() -> (Vec<String>, Vec<CubeMove>) {
    quarter_turns(&[("U", &U), ("R", &R), ("F", &F), ("D", &D), ("L", &L), ("B", &B)])
}

/// Faces that leave the DBL corner in place.
pub fn cube2_moves() -> (Vec<String>, Vec<CubeMove>) {
    quarter_turns(&[("U", &U), ("R", &R), ("F", &F)])
}

pub fn solved3() -> Vec<u16> {
    let mut v = vec![0u16; CUBE3_LEN];
    for i in 0..CORNERS {
        v[i] = i as u16;
    }
    for i in 0..EDGES {
        v[2 * CORNERS + i] = i as u16;
    }
    v
}

pub fn solved2() -> Vec<u16> {
    let mut v = vec![0u16; CUBE2_LEN];
    for i in 0..CORNERS {
        v[i] = i as u16;
    }
    v
}

pub fn apply3(x: &[u16], m: &CubeMove) -> Vec<u16> {
    let mut out = vec![0u16; CUBE3_LEN];
    apply_corners(x, m, &mut out);
    let (ep, eo) = (2 * CORNERS, 2 * CORNERS + EDGES);
    for i in 0..EDGES {
        let src = m.ep[i] as usize;
        out[ep + i] = x[ep + src];
        out[eo + i] = (x[eo + src] + m.eo[i] as u16) % 2;
    }
    out
}

pub fn apply2(x: &[u16], m: &CubeMove) -> Vec<u16> {
    let mut out = vec![0u16; CUBE2_LEN];
    apply_corners(x, m, &mut out);
    out
}

fn apply_corners(x: &[u16], m: &CubeMove, out: &mut [u16]) {
    for i in 0..CORNERS {
        let src = m.cp[i] as usize;
        out[i] = x[src];
        out[CORNERS + i] = (x[CORNERS + src] + m.co[i] as u16) % 3;
    }
}

fn is_permutation(v: &[u16]) -> bool {
    let mut seen = [false; 16];
    v.iter().all(|&c| {
        let c = c as usize;
        c < v.len() && !std::mem::replace(&mut seen[c], true)
    })
}

pub fn validate3(x: &[u16]) -> Result<(), String> {
    if x.len() != CUBE3_LEN {
        return Err(format!("cube3 state has length {}, expected {CUBE3_LEN}", x.len()));
    }
    validate_corners(x)?;
    let (ep, eo) = (&x[2 * CORNERS..2 * CORNERS + EDGES], &x[2 * CORNERS + EDGES..]);
    if !is_permutation(ep) {
        return Err("edge permutation is not a permutation of 0..12".into());
    }
    if eo.iter().any(|&o| o > 1) {
        return Err("edge flip must be 0 or 1".into());
    }
    Ok(())
}

pub fn validate2(x: &[u16]) -> Result<(), String> {
    if x.len() != CUBE2_LEN {
        return Err(format!("cube2 state has length {}, expected {CUBE2_LEN}", x.len()));
    }
    validate_corners(x)?;
    if x[CUBE2_FIXED_CORNER] != CUBE2_FIXED_CORNER as u16 || x[CORNERS + CUBE2_FIXED_CORNER] != 0 {
        return Err("cube2 keeps the DBL corner fixed and untwisted".into());
    }
    Ok(())
}

fn validate_corners(x: &[u16]) -> Result<(), String> {
    if !is_permutation(&x[..CORNERS]) {
        return Err("corner permutation is not a permutation of 0..8".into());
    }
    if x[CORNERS..2 * CORNERS].iter().any(|&o| o > 2) {
        return Err("corner twist must be 0, 1 or 2".into());
    }
    Ok(())
}

/// Facet labels of a cube position, one-hot by (label, position).
///
/// Corner position `i` owns facets `3i..3i+3`, edge position `j` owns
/// `24 + 2j..24 + 2j + 2`. The facet at corner slot `(i, k)` carries label
/// `3 * cp[i] + (k - co[i]) mod 3`; edges likewise with period 2.
pub fn facet_indices(x: &[u16], with_edges: bool, out: &mut Vec<u32>) {
    let facets = if with_edges { FACETS3 } else { FACETS2 };
    for i in 0..CORNERS {
        let (c, o) = (x[i] as usize, x[CORNERS + i] as usize);
        for k in 0..3 {
            let label = 3 * c + (k + 3 - o) % 3;
            let pos = 3 * i + k;
            out.push((label * facets + pos) as u32);
        }
    }
    if with_edges {
        let base = 3 * CORNERS;
        for j in 0..EDGES {
            let (e, o) = (x[2 * CORNERS + j] as usize, x[2 * CORNERS + EDGES + j] as usize);
            for k in 0..2 {
                let label = base + 2 * e + (k + 2 - o) % 2;
                let pos = base + 2 * j + k;
                out.push((label * facets + pos) as u32);
            }
        }
    }
}

pub const CUBE3_FEATURES: usize = FACETS3 * FACETS3;
pub const CUBE2_FEATURES: usize = FACETS2 * FACETS2;

pub fn parity(perm: &[u16]) -> u8 {
    let mut seen = [false; 16];
    let mut transpositions = 0usize;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j] as usize;
            len += 1;
        }
        transpositions += len - 1;
    }
    (transpositions % 2) as u8
}

/// (corner twist sum mod 3, edge flip sum mod 2, corner parity xor edge parity).
pub fn orbit_invariant(x: &[u16]) -> (u8, u8, u8) {
    let twist = x[CORNERS..2 * CORNERS].iter().map(|&o| o as u32).sum::<u32>() % 3;
    let flip = x[2 * CORNERS + EDGES..].iter().map(|&o| o as u32).sum::<u32>() % 2;
    let par = parity(&x[..CORNERS]) ^ parity(&x[2 * CORNERS..2 * CORNERS + EDGES]);
    (twist as u8, flip as u8, par)
}

const FACT: [usize; 8] = [1, 1, 2, 6, 24, 120, 720, 5040];

/// Dense rank of a cube2 state: Lehmer code of the seven movable corners
/// times 3^7 plus their twists in base 3. Covers all twist assignments, not
/// only the reachable ones.
pub fn rank2(x: &[u16]) -> usize {
    let mut perm = [0u8; 7];
    let mut twists = [0u8; 7];
    let mut k = 0;
    for i in 0..CORNERS {
        if i == CUBE2_FIXED_CORNER {
            continue;
        }
        let c = x[i] as u8;
        perm[k] = if c > CUBE2_FIXED_CORNER as u8 { c - 1 } else { c };
        twists[k] = x[CORNERS + i] as u8;
        k += 1;
    }
    let mut lehmer = 0;
    for i in 0..7 {
        let smaller = perm[i + 1..].iter().filter(|&&p| p < perm[i]).count();
        lehmer += smaller * FACT[6 - i];
    }
    let tw = twists.iter().fold(0usize, |acc, &t| acc * 3 + t as usize);
    lehmer * 2187 + tw
}

pub const CUBE2_RANKS: usize = 5040 * 2187;

pub fn unrank2(rank: usize) -> Vec<u16> {
    let (mut lehmer, mut tw) = (rank / 2187, rank % 2187);
    let mut pool: Vec<u8> = (0..7).collect();
    let mut perm = [0u8; 7];
    for i in 0..7 {
        let f = FACT[6 - i];
        let idx = lehmer / f;
        lehmer %= f;
        perm[i] = pool.remove(idx);
    }
    let mut twists = [0u8; 7];
    for i in (0..7).rev() {
        twists[i] = (tw % 3) as u8;
        tw /= 3;
    }
    let mut x = vec![0u16; CUBE2_LEN];
    x[CUBE2_FIXED_CORNER] = CUBE2_FIXED_CORNER as u16;
    let mut k = 0;
    for i in 0..CORNERS {
        if i == CUBE2_FIXED_CORNER {
            continue;
        }
        let p = perm[k] as u16;
        x[i] = if p >= CUBE2_FIXED_CORNER as u16 { p + 1 } else { p };
        x[CORNERS + i] = twists[k] as u16;
        k += 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_face_turn_has_order_four() {
        let (_, moves) = cube3_moves();
        for m in &moves {
            let mut x = solved3();
            for _ in 0..4 {
                x = apply3(&x, m);
            }
            assert_eq!(x, solved3());
        }
    }

    #[test]
    fn move_tables_conserve_twist_and_flip() {
        for m in [&U, &R, &F, &D, &L, &B] {
            assert_eq!(m.co.iter().map(|&c| c as u32).sum::<u32>() % 3, 0);
            assert_eq!(m.eo.iter().map(|&c| c as u32).sum::<u32>() % 2, 0);
        }
    }

    #[test]
    fn sexy_move_has_order_six() {
        // (R U R' U') has order 6 on the real cube.
        let (_, moves) = cube3_moves();
        let word = [2usize, 0, 3, 1];
        let mut x = solved3();
        for rep in 1..=6 {
            for &a in &word {
                x = apply3(&x, &moves[a]);
            }
            assert_eq!(x == solved3(), rep == 6);
        }
    }

    #[test]
    fn cube2_rank_roundtrip() {
        let (_, moves) = cube2_moves();
        let mut x = solved2();
        for i in 0..200 {
            x = apply2(&x, &moves[(i * 7 + i / 3) % moves.len()]);
            assert_eq!(unrank2(rank2(&x)), x);
        }
        assert_eq!(rank2(&solved2()), 0);
    }

    #[test]
    fn identity_facets_are_diagonal() {
        let mut idx = Vec::new();
        facet_indices(&solved3(), true, &mut idx);
        assert_eq!(idx.len(), 48);
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(i as usize, k * 48 + k);
        }
    }
}
