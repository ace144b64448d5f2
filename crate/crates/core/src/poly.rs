//! Sparse multivariate polynomials with arbitrary-precision integer
//! coefficients.

use num_complex::Complex64;
use rug::{Assign, Integer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exponent vector of a monomial.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    /// Sorted by exponent, no zero coefficients.
    terms: Vec<(Exponents, Integer)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, Integer)>) -> Self {
        let mut acc: BTreeMap<Exponents, Integer> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            *acc.entry(e).or_default() += c;
        }
        Poly { nvars, terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn from_i64(nvars: usize, terms: &[(&[u32], i64)]) -> Self {
        Self::from_terms(nvars, terms.iter().map(|(e, c)| (e.to_vec(), Integer::from(*c))))
    }

    pub fn monomial(exps: Exponents, c: Integer) -> Self {
        let n = exps.len();
        Self::from_terms(n, [(exps, c)])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Exponents, Integer)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.iter().map(|(e, _)| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    pub fn l1_norm(&self) -> Integer {
        self.terms.iter().map(|(_, c)| Integer::from(c.abs_ref())).sum()
    }

    pub fn max_abs_coeff(&self) -> Integer {
        self.terms.iter().map(|(_, c)| Integer::from(c.abs_ref())).max().unwrap_or_default()
    }

    pub fn coeff(&self, exps: &[u32]) -> Integer {
        self.terms
            .binary_search_by(|(e, _)| e.as_slice().cmp(exps))
            .map(|i| self.terms[i].1.clone())
            .unwrap_or_default()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                terms.push((e, Integer::from(ca * cb)));
            }
        }
        Poly::from_terms(self.nvars, terms)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        Poly::from_terms(self.nvars, self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, c: &Integer) -> Poly {
        Poly::from_terms(self.nvars, self.terms.iter().map(|(e, x)| (e.clone(), Integer::from(x * c))))
    }

    /// Exact evaluation at an integer vector.
    pub fn eval(&self, x: &[Integer]) -> Integer {
        assert_eq!(x.len(), self.nvars);
        let max_deg = self.terms.iter().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0);
        let powers = power_table(x, max_deg);
        let mut acc = Integer::new();
        let mut term = Integer::new();
        for (e, c) in &self.terms {
            term.assign(c);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    term *= &powers[v][k as usize];
                }
            }
            acc += &term;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(c.to_f64(), |acc, (&k, &xi)| acc * xi.powi(k as i32))
            })
            .sum()
    }

    pub fn eval_complex(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(Complex64::new(c.to_f64(), 0.0), |acc, (&k, xi)| acc * xi.powu(k))
            })
            .sum()
    }

    /// Evaluation modulo m (result in [0, m)).
    pub fn eval_mod(&self, x: &[Integer], m: &Integer) -> Integer {
        let mut acc = Integer::new();
        for (e, c) in &self.terms {
            let mut term = Integer::from(c % m);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    let p = x[v].clone().pow_mod(&Integer::from(k), m).expect("nonnegative exponent");
                    term *= p;
                    term %= m;
                }
            }
            acc += term;
        }
        acc.modulo(m)
    }

    /// Substitutes polynomials for the variables (composition).
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        assert_eq!(subs.len(), self.nvars);
        let n = subs.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(n);
        for (e, c) in &self.terms {
            let mut term = Poly::monomial(vec![0; n], c.clone());
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&subs[v]);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

fn power_table(x: &[Integer], max_deg: u32) -> Vec<Vec<Integer>> {
    x.iter()
        .map(|xi| {
            let mut row = Vec::with_capacity(max_deg as usize + 1);
            row.push(Integer::from(1));
            for k in 1..=max_deg as usize {
                let next = Integer::from(&row[k - 1] * xi);
                row.push(next);
            }
            row
        })
        .collect()
}

/// All exponent vectors of total degree `deg` in `nvars` variables, in
/// lexicographic order.
pub fn monomials_of_degree(nvars: usize, deg: u32) -> Vec<Exponents> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponents>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
    }
    if nvars == 0 {
        return out;
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

/// JSON form of a term: exponents plus a decimal-string coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: String,
}

impl Poly {
    pub fn to_spec(&self) -> Vec<TermSpec> {
        self.terms
            .iter()
            .map(|(e, c)| TermSpec { exponents: e.clone(), coeff: c.to_string() })
            .collect()
    }

    pub fn from_spec(nvars: usize, spec: &[TermSpec]) -> Result<Poly, String> {
        let mut terms = Vec::new();
        for t in spec {
            if t.exponents.len() != nvars {
                return Err(format!(
                    "term has {} exponents, expected {nvars}",
                    t.exponents.len()
                ));
            }
            let c: Integer =
                t.coeff.trim().parse().map_err(|_| format!("bad integer coefficient {:?}", t.coeff))?;
            terms.push((t.exponents.clone(), c));
        }
        Ok(Poly::from_terms(nvars, terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_homogeneity() {
        // x^2 - 3xy + 2y^2
        let p = Poly::from_i64(2, &[(&[2, 0], 1), (&[1, 1], -3), (&[0, 2], 2)]);
        assert!(p.is_homogeneous());
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.eval(&[Integer::from(2), Integer::from(1)]), 0);
        assert_eq!(p.eval_f64(&[3.0, 1.0]), 2.0);
        assert_eq!(p.eval_mod(&[Integer::from(5), Integer::from(1)], &Integer::from(7)), 12 % 7);
        assert_eq!(p.l1_norm(), 6);
    }

    #[test]
    fn compose_matches_pointwise() {
        let p = Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 1)]);
        let q = Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], -1)]);
        let r = Poly::from_i64(2, &[(&[1, 1], 2)]);
        let comp = p.compose(&[q.clone(), r.clone()]);
        let x = [Integer::from(3), Integer::from(-2)];
        let direct = p.eval(&[q.eval(&x), r.eval(&x)]);
        assert_eq!(comp.eval(&x), direct);
        assert_eq!(comp.degree(), Some(4));
    }

    #[test]
    fn monomial_listing() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(2, 3), vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
    }
}
