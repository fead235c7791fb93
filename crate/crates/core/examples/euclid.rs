//! Words in T±1, U±1 for integer matrices of determinant one.
//!
//! ```bash
//! cargo run --example euclid -- 2 1 1 1
//! cargo run --example euclid -- 165580141 102334155 102334155 63245986
//! ```

use cayley_diffusion::oracle::euclid::{euclid_solve_traced, expand, expanded_len, mat, runs_matrix, Axis};
use num_bigint::BigInt;

fn main() -> cayley_diffusion::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m = if args.len() == 4 {
        let v: Vec<BigInt> = args.iter().map(|a| a.parse().expect("integer entry")).collect();
        [v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()]
    } else {
        mat(21, 8, 13, 5)
    };
    let trace = euclid_solve_traced(&m)?;
    println!("matrix [[{}, {}], [{}, {}]]", m[0], m[1], m[2], m[3]);
    for (a, b) in &trace.top_rows {
        println!("  top row -> ({a}, {b})");
    }
    let runs: Vec<String> = trace
        .runs
        .iter()
        .map(|r| format!("{}^{}", if r.axis == Axis::T { "T" } else { "U" }, r.power))
        .collect();
    println!("runs: {}", runs.join(" "));
    println!("letters: {}", expanded_len(&trace.runs));
    assert_eq!(runs_matrix(&trace.runs), m);
    if let Ok(word) = expand(&trace.runs) {
        if word.len() <= 40 {
            let names: Vec<&str> = word.iter().map(|&g| cayley_diffusion::group::sl2::NAMES[g]).collect();
            println!("word: {}", names.join(" "));
        }
    }
    Ok(())
}
