use rug::integer::IsPrime;
use rug::Integer;

/// ord_p(c) for nonzero c.
pub fn valuation(c: &Integer, p: &Integer) -> u32 {
    debug_assert!(!c.is_zero());
    if c.is_divisible(p) {
        let mut tmp = c.clone();
        tmp.remove_factor_mut(p)
    } else {
        0
    }
}

/// Distinct prime divisors of |n| in increasing order (empty for 0 and ±1).
pub fn prime_factors(n: &Integer) -> Vec<Integer> {
    let mut n = Integer::from(n.abs_ref());
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut d = 2u32;
    while d < 10_000 && n > 1 {
        let di = Integer::from(d);
        if n.is_divisible_u(d) {
            n.remove_factor_mut(&di);
            out.push(di);
        }
        d += if d == 2 { 1 } else { 2 };
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if m.is_probably_prime(40) != IsPrime::No {
            out.push(m);
            continue;
        }
        let f = pollard_brent(&m);
        let cofactor = Integer::from(&m / &f);
        stack.push(f);
        stack.push(cofactor);
    }
    out.sort();
    out.dedup();
    out
}

/// A nontrivial factor of a composite `n` with no small prime divisors.
fn pollard_brent(n: &Integer) -> Integer {
    let mut c = Integer::from(1);
    loop {
        let f = |x: &Integer| -> Integer { (Integer::from(x * x) + &c) % n };
        let (mut x, mut y) = (Integer::from(2), Integer::from(2));
        let mut g = Integer::from(1);
        while g == 1 {
            x = f(&x);
            y = f(&f(&y));
            g = Integer::from(&x - &y).abs().gcd(n);
        }
        if &g != n {
            return g;
        }
        c += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_of_small_and_semiprime() {
        let f = |n: u64| prime_factors(&Integer::from(n));
        assert_eq!(f(360), vec![Integer::from(2), Integer::from(3), Integer::from(5)]);
        assert!(f(1).is_empty());
        let p = Integer::from(1_000_003u64);
        let q = Integer::from(998_244_353u64);
        let n = Integer::from(&p * &q) * 4;
        assert_eq!(prime_factors(&n), vec![Integer::from(2), p, q]);
    }

    #[test]
    fn valuation_counts_powers() {
        assert_eq!(valuation(&Integer::from(-48), &Integer::from(2)), 4);
        assert_eq!(valuation(&Integer::from(7), &Integer::from(2)), 0);
    }
}
