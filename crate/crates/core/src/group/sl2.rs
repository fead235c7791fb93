//! SL2(Z_p) with generators T+1, T-1, U+1, U-1 acting by right
//! multiplication. States are `(a, b, c, d)` for the matrix `[[a, b], [c, d]]`.

pub const NAMES: [&str; 4] = ["T+1", "T-1", "U+1", "U-1"];
pub const INVERSES: [usize; 4] = [1, 0, 3, 2];

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub fn identity() -> Vec<u16> {
    vec![1, 0, 0, 1]
}

pub fn apply(x: &[u16], gen: usize, p: u16) -> Vec<u16> {
    let p = p as u32;
    let (a, b, c, d) = (x[0] as u32, x[1] as u32, x[2] as u32, x[3] as u32);
    let (a, b, c, d) = match gen {
        // [[a,b],[c,d]] [[1,1],[0,1]] = [[a, a+b], [c, c+d]]
        0 => (a, (a + b) % p, c, (c + d) % p),
        1 => (a, (b + p - a) % p, c, (d + p - c) % p),
        // [[a,b],[c,d]] [[1,0],[1,1]] = [[a+b, b], [c+d, d]]
        2 => ((a + b) % p, b, (c + d) % p, d),
        3 => ((a + p - b) % p, b, (c + p - d) % p, d),
        _ => unreachable!("generator index checked by caller"),
    };
    vec![a as u16, b as u16, c as u16, d as u16]
}

pub fn determinant(x: &[u16], p: u16) -> u16 {
    let p = p as u64;
    let ad = x[0] as u64 * x[3] as u64 % p;
    let bc = x[1] as u64 * x[2] as u64 % p;
    ((ad + p - bc) % p) as u16
}

pub fn validate(x: &[u16], p: u16) -> Result<(), String> {
    if x.len() != 4 {
        return Err(format!("sl2p state has length {}, expected 4", x.len()));
    }
    if let Some(v) = x.iter().find(|&&v| v >= p) {
        return Err(format!("entry {v} is not reduced mod {p}"));
    }
    if determinant(x, p) != 1 % p {
        return Err(format!("determinant of {x:?} is not 1 mod {p}"));
    }
    Ok(())
}

pub fn order(p: u64) -> u64 {
    p * (p * p - 1)
}

pub fn rank(x: &[u16], p: u16) -> usize {
    let p = p as usize;
    ((x[0] as usize * p + x[1] as usize) * p + x[2] as usize) * p + x[3] as usize
}

pub fn unrank(mut r: usize, p: u16) -> Vec<u16> {
    let p = p as usize;
    let mut v = vec![0u16; 4];
    for i in (0..4).rev() {
        v[i] = (r % p) as u16;
        r /= p;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_plus_one_on_identity() {
        assert_eq!(apply(&identity(), 0, 7), vec![1, 1, 0, 1]);
        assert_eq!(apply(&identity(), 2, 7), vec![1, 0, 1, 1]);
    }

    #[test]
    fn inverse_pairs_cancel() {
        let x = vec![2, 3, 1, 2];
        assert_eq!(determinant(&x, 5), 1);
        for g in 0..4 {
            assert_eq!(apply(&apply(&x, g, 5), INVERSES[g], 5), x);
        }
    }

    #[test]
    fn rank_roundtrip() {
        let x = vec![3, 0, 4, 2];
        assert_eq!(unrank(rank(&x, 5), 5), x);
    }

    #[test]
    fn primes() {
        let small: Vec<u32> = (0..30).filter(|&p| is_prime(p)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }
}
