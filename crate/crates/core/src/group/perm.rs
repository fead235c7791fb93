//! Generic permutation groups given by generator lists.

use std::path::Path;

use crate::error::{Error, Result};

/// `(x * g)[i] = x[g[i]]`, a right action of the permutation group on itself.
pub fn apply(x: &[u16], g: &[u16]) -> Vec<u16> {
    g.iter().map(|&j| x[j as usize]).collect()
}

pub fn inverse(g: &[u16]) -> Vec<u16> {
    let mut inv = vec![0u16; g.len()];
    for (i, &j) in g.iter().enumerate() {
        inv[j as usize] = i as u16;
    }
    inv
}

pub fn identity(n: usize) -> Vec<u16> {
    (0..n as u16).collect()
}

pub fn is_permutation(v: &[u16], n: usize) -> bool {
    if v.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    v.iter().all(|&c| (c as usize) < n && !std::mem::replace(&mut seen[c as usize], true))
}

/// Pairs every generator with an inverse, appending missing inverses as
/// `name'`. Returns the completed generator list and the involution table.
pub fn close_under_inverses(
    mut names: Vec<String>,
    mut perms: Vec<Vec<u16>>,
) -> (Vec<String>, Vec<Vec<u16>>, Vec<usize>) {
    let given = perms.len();
    let mut inverse_of: Vec<Option<usize>> = vec![None; given];
    for a in 0..given {
        if inverse_of[a].is_some() {
            continue;
        }
        let inv = inverse(&perms[a]);
        if inv == perms[a] {
            inverse_of[a] = Some(a);
            continue;
        }
        let partner = (a + 1..given).find(|&b| inverse_of[b].is_none() && perms[b] == inv);
        match partner {
            Some(b) => {
                inverse_of[a] = Some(b);
                inverse_of[b] = Some(a);
            }
            None => {
                let b = perms.len();
                names.push(format!("{}'", names[a]));
                perms.push(inv);
                inverse_of[a] = Some(b);
                inverse_of.push(Some(a));
            }
        }
    }
    let table = inverse_of.into_iter().map(|v| v.expect("paired")).collect();
    (names, perms, table)
}

/// Parses the generator file: a degree line followed by `name i0 i1 ...`
/// lines. Blank lines and `#` comments are skipped.
pub fn parse_generators(text: &str) -> Result<(usize, Vec<String>, Vec<Vec<u16>>)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let degree: usize = lines
        .next()
        .ok_or_else(|| Error::Format("generator file is empty".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("bad degree line: {e}")))?;
    if degree == 0 || degree > u16::MAX as usize {
        return Err(Error::Format(format!("unsupported degree {degree}")));
    }
    let mut names = Vec::new();
    let mut perms = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut tokens = line.split_whitespace();
        let name = tokens.next().expect("non-empty line").to_string();
        let perm = tokens
            .map(|t| t.parse::<u16>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::Format(format!("generator {name}: {e}")))?;
        if !is_permutation(&perm, degree) {
            return Err(Error::Format(format!(
                "generator {name} (line {}) is not a permutation of 0..{degree}",
                lineno + 2
            )));
        }
        names.push(name);
        perms.push(perm);
    }
    if perms.is_empty() {
        return Err(Error::Format("generator file lists no generators".into()));
    }
    Ok((degree, names, perms))
}

/// One state per line; entries separated by commas and/or whitespace.
pub fn parse_states(text: &str) -> Result<Vec<Vec<u16>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_state)
        .collect()
}

pub fn parse_state(line: &str) -> Result<Vec<u16>> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u16>()
                .map_err(|e| Error::Encoding(format!("bad state entry {t:?}: {e}")))
        })
        .collect()
}

pub fn read_generator_file(path: &Path) -> Result<(usize, Vec<String>, Vec<Vec<u16>>)> {
    parse_generators(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_inverse_is_appended() {
        let (names, perms, inv) =
            close_under_inverses(vec!["r".into()], vec![vec![1, 2, 0]]);
        assert_eq!(names, vec!["r".to_string(), "r'".to_string()]);
        assert_eq!(perms[1], vec![2, 0, 1]);
        assert_eq!(inv, vec![1, 0]);
    }

    #[test]
    fn involutions_pair_with_themselves() {
        let (_, perms, inv) = close_under_inverses(vec!["s".into()], vec![vec![1, 0, 2]]);
        assert_eq!(perms.len(), 1);
        assert_eq!(inv, vec![0]);
    }

    #[test]
    fn parses_generator_file() {
        let text = "4\n# cycle\nplus 1 2 3 0\nminus 3 0 1 2\n";
        let (n, names, perms) = parse_generators(text).unwrap();
        assert_eq!(n, 4);
        assert_eq!(names, vec!["plus", "minus"]);
        assert_eq!(perms[1], vec![3, 0, 1, 2]);
    }

    #[test]
    fn rejects_non_permutation() {
        assert!(matches!(parse_generators("3\ng 0 0 1\n"), Err(Error::Format(_))));
        assert!(matches!(parse_generators("3\n"), Err(Error::Format(_))));
    }

    #[test]
    fn state_lines_accept_commas_and_spaces() {
        assert_eq!(parse_state("1, 2 3,0").unwrap(), vec![1, 2, 3, 0]);
    }
}
