//! Shortest-ish words in SL2(Z) over `T±1`, `U±1` by Euclidean division.
//!
//! `T_k = [[1,k],[0,1]]`, `U_k = [[1,0],[k,1]]`. Right multiplication by
//! `U_{-k}` maps the top row `(a, b)` to `(a - k b, b)`, and by `T_{-k}` to
//! `(a, b - k a)`. Dividing the larger entry by the smaller one strictly
//! decreases `max(|a|, |b|)` until the top row is a unit row (one of
//! `(±1,0)`, `(0,±1)`, `(±1,±1)`). A matrix with a unit top row is
//! `U^k C` for a short word `C` from a table built once by bounded BFS.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Generator indices, matching the sl2p family.
pub const T_PLUS: usize = 0;
pub const T_MINUS: usize = 1;
pub const U_PLUS: usize = 2;
pub const U_MINUS: usize = 3;

/// Longest word [`euclid_solve`] will expand into unit letters.
pub const MAX_EXPANDED_LEN: u64 = 10_000_000;

/// BFS radius of the unit-row table.
const TABLE_RADIUS: usize = 8;

/// Row-major `[[a, b], [c, d]]`.
pub type Mat2 = [BigInt; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    T,
    U,
}

/// A run `T^k` or `U^k` with `k != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub axis: Axis,
    pub power: BigInt,
}

/// Solver output with the top rows seen after each division step.
#[derive(Clone, Debug)]
pub struct EuclidTrace {
    pub runs: Vec<Run>,
    pub top_rows: Vec<(BigInt, BigInt)>,
}

pub fn mat(a: i64, b: i64, c: i64, d: i64) -> Mat2 {
    [a.into(), b.into(), c.into(), d.into()]
}

pub fn identity() -> Mat2 {
    mat(1, 0, 0, 1)
}

pub fn mul(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        &x[0] * &y[0] + &x[1] * &y[2],
        &x[0] * &y[1] + &x[1] * &y[3],
        &x[2] * &y[0] + &x[3] * &y[2],
        &x[2] * &y[1] + &x[3] * &y[3],
    ]
}

fn run_matrix(axis: Axis, k: &BigInt) -> Mat2 {
    match axis {
        Axis::T => [BigInt::one(), k.clone(), BigInt::zero(), BigInt::one()],
        Axis::U => [BigInt::one(), BigInt::zero(), k.clone(), BigInt::one()],
    }
}

/// `I * w_1 * ... * w_n` for a word of unit generators.
pub fn word_matrix(word: &[usize]) -> Result<Mat2> {
    let mut m = identity();
    for &g in word {
        let (axis, k) = match g {
            T_PLUS => (Axis::T, 1),
            T_MINUS => (Axis::T, -1),
            U_PLUS => (Axis::U, 1),
            U_MINUS => (Axis::U, -1),
            _ => return Err(Error::Domain(format!("generator index {g} out of range"))),
        };
        m = mul(&m, &run_matrix(axis, &k.into()));
    }
    Ok(m)
}

pub fn runs_matrix(runs: &[Run]) -> Mat2 {
    runs.iter().fold(identity(), |m, r| mul(&m, &run_matrix(r.axis, &r.power)))
}

/// Merges adjacent runs on the same axis and drops zero powers, which is
/// free reduction of the expanded word.
pub fn reduce_runs(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        if r.power.is_zero() {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.axis == r.axis => {
                last.power += r.power;
                if last.power.is_zero() {
                    out.pop();
                }
            }
            _ => out.push(r),
        }
    }
    out
}

/// Total number of unit letters in the expanded word.
pub fn expanded_len(runs: &[Run]) -> BigUint {
    runs.iter().map(|r| r.power.magnitude().clone()).sum()
}

/// Expands runs into unit generator indices.
pub fn expand(runs: &[Run]) -> Result<Vec<usize>> {
    let len = expanded_len(runs);
    if len > BigUint::from(MAX_EXPANDED_LEN) {
        return Err(Error::Resource(format!(
            "solution has {len} letters, more than the {MAX_EXPANDED_LEN} that can be expanded"
        )));
    }
    let mut word = Vec::with_capacity(len.to_usize().unwrap_or(0));
    for r in runs {
        let g = match (r.axis, r.power.is_positive()) {
            (Axis::T, true) => T_PLUS,
            (Axis::T, false) => T_MINUS,
            (Axis::U, true) => U_PLUS,
            (Axis::U, false) => U_MINUS,
        };
        let n = r.power.magnitude().to_usize().expect("bounded above");
        word.extend(std::iter::repeat_n(g, n));
    }
    Ok(word)
}

type SmallMat = [i64; 4];

fn small_mul(x: &SmallMat, y: &SmallMat) -> SmallMat {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Shortest words (up to [`TABLE_RADIUS`]) of every matrix whose top row
/// is a unit row, grouped by top row.
fn unit_row_table() -> &'static HashMap<(i64, i64), Vec<(SmallMat, Vec<usize>)>> {
    static TABLE: OnceLock<HashMap<(i64, i64), Vec<(SmallMat, Vec<usize>)>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let gens: [SmallMat; 4] = [[1, 1, 0, 1], [1, -1, 0, 1], [1, 0, 1, 1], [1, 0, -1, 1]];
        let mut seen: HashMap<SmallMat, Vec<usize>> = HashMap::new();
        seen.insert([1, 0, 0, 1], Vec::new());
        let mut frontier = vec![[1, 0, 0, 1]];
        for _ in 0..TABLE_RADIUS {
            let mut next = Vec::new();
            for m in &frontier {
                let w = seen[m].clone();
                for (g, gm) in gens.iter().enumerate() {
                    let y = small_mul(m, gm);
                    if !seen.contains_key(&y) {
                        let mut wy = w.clone();
                        wy.push(g);
                        seen.insert(y, wy);
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        let mut table: HashMap<(i64, i64), Vec<(SmallMat, Vec<usize>)>> = HashMap::new();
        for (m, w) in seen {
            if m[0].abs() <= 1 && m[1].abs() <= 1 && (m[0] != 0 || m[1] != 0) {
                table.entry((m[0], m[1])).or_default().push((m, w));
            }
        }
        for v in table.values_mut() {
            v.sort_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| a.1.cmp(&b.1)));
        }
        table
    })
}

fn word_runs(word: &[usize]) -> Vec<Run> {
    reduce_runs(
        word.iter()
            .map(|&g| match g {
                T_PLUS => Run { axis: Axis::T, power: BigInt::one() },
                T_MINUS => Run { axis: Axis::T, power: -BigInt::one() },
                U_PLUS => Run { axis: Axis::U, power: BigInt::one() },
                _ => Run { axis: Axis::U, power: -BigInt::one() },
            })
            .collect(),
    )
}

/// Word for a determinant-one matrix with a unit top row, as `U^k C`.
fn unit_row_runs(m: &Mat2) -> Result<Vec<Run>> {
    let key = (m[0].to_i64().unwrap(), m[1].to_i64().unwrap());
    let cands = unit_row_table().get(&key).expect("all eight unit rows are in the table");
    let mut best: Option<(BigUint, Vec<Run>)> = None;
    for (c, w) in cands {
        // m = U_k C means the bottom rows differ by k times the top row
        let dc = &m[2] - c[2];
        let dd = &m[3] - c[3];
        let k = if !m[0].is_zero() {
            let (q, r) = dc.div_rem(&m[0]);
            if !r.is_zero() || &q * &m[1] != dd {
                continue;
            }
            q
        } else {
            let (q, r) = dd.div_rem(&m[1]);
            if !r.is_zero() || !dc.is_zero() {
                continue;
            }
            q
        };
        let cost = k.magnitude() + BigUint::from(w.len());
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            let mut runs = vec![Run { axis: Axis::U, power: k }];
            runs.extend(word_runs(w));
            best = Some((cost, reduce_runs(runs)));
        }
    }
    best.map(|(_, r)| r).ok_or_else(|| Error::Domain("no table word matches the reduced matrix".into()))
}

fn check_det(m: &Mat2) -> Result<()> {
    if &m[0] * &m[3] - &m[1] * &m[2] != BigInt::one() {
        return Err(Error::Domain("matrix does not have determinant 1".into()));
    }
    Ok(())
}

/// Run-length solution with the top row after every division step.
pub fn euclid_solve_traced(m: &Mat2) -> Result<EuclidTrace> {
    check_det(m)?;
    let mut cur = m.clone();
    let mut steps: Vec<Run> = Vec::new();
    let mut top_rows = Vec::new();
    let one = BigInt::one();
    while !cur[0].is_zero() && !cur[1].is_zero() && (cur[0].abs() > one || cur[1].abs() > one) {
        if cur[0].abs() >= cur[1].abs() {
            let k = &cur[0] / &cur[1];
            cur = mul(&cur, &run_matrix(Axis::U, &-&k));
            steps.push(Run { axis: Axis::U, power: k });
        } else {
            let k = &cur[1] / &cur[0];
            cur = mul(&cur, &run_matrix(Axis::T, &-&k));
            steps.push(Run { axis: Axis::T, power: k });
        }
        top_rows.push((cur[0].clone(), cur[1].clone()));
    }
    let mut runs = unit_row_runs(&cur)?;
    runs.extend(steps.into_iter().rev());
    Ok(EuclidTrace { runs: reduce_runs(runs), top_rows })
}

/// Run-length form of [`euclid_solve`]; no length limit.
pub fn euclid_solve_runs(m: &Mat2) -> Result<Vec<Run>> {
    Ok(euclid_solve_traced(m)?.runs)
}

/// A word in unit generators whose product is `m`.
pub fn euclid_solve(m: &Mat2) -> Result<Vec<usize>> {
    expand(&euclid_solve_runs(m)?)
}
