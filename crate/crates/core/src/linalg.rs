//! Exact linear algebra over ℚ and ℤ.

use rug::{Integer, Rational};

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Rational::from(m[r][c].recip_ref());
        for x in m[r].iter_mut().skip(c) {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *x -= Rational::from(&f * y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(a: &[Vec<Rational>]) -> usize {
    let mut m = a.to_vec();
    rref(&mut m).len()
}

/// Some solution of A x = b (free variables set to zero), or `None` if the
/// system is inconsistent.
pub fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Rational::new(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][cols].clone();
    }
    Some(x)
}

/// A basis of {x : A x = 0}.
pub fn nullspace(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut m = a.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::new(); cols];
            v[f] = Rational::from(1);
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn det_bareiss(mut m: Vec<Vec<Integer>>) -> Integer {
    let n = m.len();
    if n == 0 {
        return Integer::from(1);
    }
    let mut sign = 1;
    let mut prev = Integer::from(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return Integer::new();
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = Integer::from(&m[i][j] * &m[k][k]) - Integer::from(&m[i][k] * &m[k][j]);
                m[i][j] = v.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn solves_and_detects_inconsistency() {
        let a = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(solve(&a, &[q(1), q(3)]).is_none());
        let x = solve(&a, &[q(1), q(2)]).unwrap();
        assert_eq!(Rational::from(&x[0] + Rational::from(&x[1] * 2)), 1);
        assert_eq!(nullspace(&a).len(), 1);
        assert_eq!(rank(&a), 1);
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let m = vec![
            vec![Integer::from(2), Integer::from(-1), Integer::from(0)],
            vec![Integer::from(1), Integer::from(3), Integer::from(4)],
            vec![Integer::from(0), Integer::from(5), Integer::from(-2)],
        ];
        // 2*(3*-2 - 4*5) - (-1)*(1*-2 - 0) = -52 - 2
        assert_eq!(det_bareiss(m), -54);
        let zero_pivot = vec![
            vec![Integer::from(0), Integer::from(1)],
            vec![Integer::from(1), Integer::from(0)],
        ];
        assert_eq!(det_bareiss(zero_pivot), -1);
    }
}
