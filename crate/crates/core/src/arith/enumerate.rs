use super::point::canonicalize_factor;
use super::{naive_height, ProjPoint};
use rug::Integer;

/// Largest integer M with ln M ≤ B (with a 1e-12 relative slack so that
/// bounds such as `ln 2` admit the value 2 despite rounding).
pub fn max_abs_for_bound(bound: f64) -> u64 {
    if bound < 0.0 {
        return 0;
    }
    let slack = bound + 1e-12 * bound.max(1.0);
    let mut m = slack.exp().floor() as u64;
    while m > 1 && (m as f64).ln() > slack {
        m -= 1;
    }
    while ((m + 1) as f64).ln() <= slack {
        m += 1;
    }
    m.max(1)
}

/// Stream of points of ℙᴺ(ℚ) with naive height at most `bound`, ordered by
/// (max |x_i|, coordinates lexicographically).
pub struct BoundedPoints {
    n: usize,
    max_abs: i64,
    current: i64,
    buffer: std::vec::IntoIter<ProjPoint>,
}

impl Iterator for BoundedPoints {
    type Item = ProjPoint;

    fn next(&mut self) -> Option<ProjPoint> {
        loop {
            if let Some(p) = self.buffer.next() {
                return Some(p);
            }
            if self.current >= self.max_abs {
                return None;
            }
            self.current += 1;
            self.buffer = shell(self.n, self.current).into_iter();
        }
    }
}

/// Canonical coprime vectors of length n+1 whose max abs is exactly m.
fn shell(n: usize, m: i64) -> Vec<ProjPoint> {
    let len = n + 1;
    let mut v = vec![-m; len];
    let mut out = Vec::new();
    loop {
        if v.iter().any(|c| c.abs() == m) && first_nonzero_positive(&v) && gcd_is_one(&v) {
            let mut coords: Vec<Integer> = v.iter().map(|&c| Integer::from(c)).collect();
            canonicalize_factor(&mut coords);
            out.push(ProjPoint::from_integers(vec![coords]).expect("nonzero"));
        }
        // odometer, last coordinate fastest: lexicographic order
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if v[i] < m {
                v[i] += 1;
                for c in v.iter_mut().skip(i + 1) {
                    *c = -m;
                }
                break;
            }
        }
    }
}

fn first_nonzero_positive(v: &[i64]) -> bool {
    v.iter().find(|&&c| c != 0).map(|&c| c > 0).unwrap_or(false)
}

fn gcd_is_one(v: &[i64]) -> bool {
    let mut g = 0i64;
    for &c in v {
        let (mut a, mut b) = (g, c.abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        g = a;
    }
    g == 1
}

/// Enumerates {x ∈ ℙᴺ(ℚ) : h_nv(x) ≤ bound}; each point appears once.
pub fn enumerate_bounded(n: usize, bound: f64) -> BoundedPoints {
    let max_abs = if bound < 0.0 { 0 } else { max_abs_for_bound(bound) as i64 };
    BoundedPoints { n, max_abs, current: 0, buffer: Vec::new().into_iter() }
}

/// Points of ℙ^{N_1}×⋯×ℙ^{N_m} with Σ_j h(x_j) ≤ bound, in lexicographic
/// order of the factors' enumeration orders.
pub fn enumerate_product_bounded(dims: &[usize], bound: f64) -> Vec<ProjPoint> {
    let per_factor: Vec<Vec<(f64, Vec<Integer>)>> = dims
        .iter()
        .map(|&n| {
            enumerate_bounded(n, bound)
                .map(|p| (naive_height(&p), p.into_factors().remove(0)))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Integer>> = Vec::new();
    product_rec(&per_factor, 0, 0.0, bound, &mut stack, &mut out);
    out
}

fn product_rec(
    lists: &[Vec<(f64, Vec<Integer>)>],
    depth: usize,
    used: f64,
    bound: f64,
    stack: &mut Vec<Vec<Integer>>,
    out: &mut Vec<ProjPoint>,
) {
    if depth == lists.len() {
        out.push(ProjPoint::from_integers(stack.clone()).expect("canonical factors"));
        return;
    }
    for (h, coords) in &lists[depth] {
        if used + h <= bound + 1e-12 * bound.max(1.0) {
            stack.push(coords.clone());
            product_rec(lists, depth + 1, used + h, bound, stack, out);
            stack.pop();
        }
    }
}
