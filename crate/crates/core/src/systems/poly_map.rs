//! Morphisms of ℙᴺ given by homogeneous integer polynomials, resultants and
//! Nullstellensatz certificates.

use super::{check_index, Dynamics, SystemError};
use crate::arith::{canonicalize_factor, ProjPoint, Space};
use crate::linalg::{det_bareiss, rank, rref};
use crate::poly::{monomials_of_degree, Exponents, Poly};
use rug::{Integer, Rational};
use std::collections::HashMap;
use std::sync::OnceLock;

/// A self-map of ℙᴺ given by N+1 homogeneous forms of a common degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    polys: Vec<Poly>,
    deg: u32,
}

impl PolyMap {
    pub fn new(polys: Vec<Poly>) -> Result<Self, SystemError> {
        let nv = polys.len();
        if nv < 2 {
            return Err(SystemError::Invalid("need at least two forms".into()));
        }
        if polys.iter().any(|p| p.nvars() != nv) {
            return Err(SystemError::Invalid(format!("each form must have {nv} variables")));
        }
        if polys.iter().all(|p| p.is_zero()) {
            return Err(SystemError::Invalid("all forms are zero".into()));
        }
        let mut deg = None;
        for p in polys.iter().filter(|p| !p.is_zero()) {
            if !p.is_homogeneous() {
                return Err(SystemError::Invalid("form is not homogeneous".into()));
            }
            match (deg, p.degree()) {
                (None, d) => deg = d,
                (Some(a), Some(b)) if a != b => {
                    return Err(SystemError::Invalid(format!("forms of degrees {a} and {b}")))
                }
                _ => {}
            }
        }
        let deg = deg.unwrap_or(0);
        if deg == 0 {
            return Err(SystemError::Invalid("constant map".into()));
        }
        Ok(PolyMap { polys, deg })
    }

    /// (x_0^e : ⋯ : x_N^e).
    pub fn power_map(n: usize, e: u32) -> Self {
        let polys = (0..=n)
            .map(|i| {
                let mut ex = vec![0; n + 1];
                ex[i] = e;
                Poly::monomial(ex, Integer::from(1))
            })
            .collect();
        PolyMap::new(polys).expect("power map is valid")
    }

    pub fn dim(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn degree(&self) -> u32 {
        self.deg
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    /// F(x̃) on an integer lift, without normalization.
    pub fn apply(&self, lift: &[Integer]) -> Vec<Integer> {
        self.polys.iter().map(|p| p.eval(lift)).collect()
    }

    pub fn apply_f64(&self, lift: &[f64]) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval_f64(lift)).collect()
    }

    /// Σ_i ln max_j ‖F_j‖₁: the upper half of the discrepancy bound.
    pub fn log_upper_bound(&self) -> f64 {
        self.polys
            .iter()
            .map(|p| crate::arith::log_abs(&p.l1_norm()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tri-state outcome of the morphism test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphismCheck {
    Morphism,
    NotMorphism,
    UnknownAtCap,
}

/// Resultant of two binary forms (coefficients of x^i y^{m−i}).
pub fn sylvester_resultant(f: &Poly, g: &Poly) -> Integer {
    let m = f.degree().unwrap_or(0) as usize;
    let n = g.degree().unwrap_or(0) as usize;
    let size = m + n;
    if size == 0 {
        return Integer::from(1);
    }
    // highest power of x first
    let fc: Vec<Integer> = (0..=m).rev().map(|i| f.coeff(&[i as u32, (m - i) as u32])).collect();
    let gc: Vec<Integer> = (0..=n).rev().map(|i| g.coeff(&[i as u32, (n - i) as u32])).collect();
    let mut mat = vec![vec![Integer::new(); size]; size];
    for r in 0..n {
        for (j, c) in fc.iter().enumerate() {
            mat[r][r + j] = c.clone();
        }
    }
    for r in 0..m {
        for (j, c) in gc.iter().enumerate() {
            mat[n + r][r + j] = c.clone();
        }
    }
    det_bareiss(mat)
}

fn macaulay_degree(degs: &[u32]) -> u32 {
    degs.iter().map(|d| d - 1).sum::<u32>() + 1
}

/// Macaulay resultant of N+1 forms in N+1 variables as det(M)/det(M'), or
/// `None` when the extraneous minor M' vanishes.
pub fn macaulay_resultant(forms: &[Poly]) -> Option<Rational> {
    let nv = forms.len();
    let degs: Vec<u32> = forms.iter().map(|p| p.degree().unwrap_or(0)).collect();
    let big_d = macaulay_degree(&degs);
    let monos = monomials_of_degree(nv, big_d);
    let index: HashMap<&Exponents, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut mat = vec![vec![Integer::new(); monos.len()]; monos.len()];
    let mut non_reduced = Vec::new();
    for (row, m) in monos.iter().enumerate() {
        let divisible: Vec<usize> = (0..nv).filter(|&i| m[i] >= degs[i]).collect();
        if divisible.len() > 1 {
            non_reduced.push(row);
        }
        let i = divisible[0];
        let mut shift = m.clone();
        shift[i] -= degs[i];
        for (e, c) in forms[i].terms() {
            let target: Exponents = e.iter().zip(&shift).map(|(a, b)| a + b).collect();
            mat[row][index[&target]] = c.clone();
        }
    }
    let minor: Vec<Vec<Integer>> = non_reduced
        .iter()
        .map(|&r| non_reduced.iter().map(|&c| mat[r][c].clone()).collect())
        .collect();
    let den = det_bareiss(minor);
    if den.is_zero() {
        return None;
    }
    Some(Rational::from((det_bareiss(mat), den)))
}

/// Whether every monomial of degree Σ(d_i − 1) + 1 lies in the ideal of the
/// forms (equivalently: the only common zero is the origin).
fn macaulay_full_rank(forms: &[Poly]) -> bool {
    let nv = forms.len();
    let degs: Vec<u32> = forms.iter().map(|p| p.degree().unwrap_or(0)).collect();
    let big_d = macaulay_degree(&degs);
    let monos = monomials_of_degree(nv, big_d);
    let rows = multiples_matrix(forms, big_d, &monos);
    rank(&rows) == monos.len()
}

/// Rows: coefficient vectors of m·F_j for all monomials m of the right degree.
fn multiples_matrix(forms: &[Poly], target_deg: u32, monos: &[Exponents]) -> Vec<Vec<Rational>> {
    let nv = forms.len();
    let index: HashMap<&Exponents, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut rows = Vec::new();
    for f in forms {
        let d = f.degree().unwrap_or(0);
        if f.is_zero() || d > target_deg {
            continue;
        }
        for shift in monomials_of_degree(nv, target_deg - d) {
            let mut row = vec![Rational::new(); monos.len()];
            for (e, c) in f.terms() {
                let t: Exponents = e.iter().zip(&shift).map(|(a, b)| a + b).collect();
                row[index[&t]] = Rational::from(c);
            }
            rows.push(row);
        }
    }
    rows
}

/// Homogeneous Nullstellensatz certificate: integer forms G_{mj} of degree
/// `extra_degree` with Σ_j G_{mj} F_j = r · x_m^{deg + extra_degree}.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub extra_degree: u32,
    pub r: Integer,
    /// g[m][j]
    pub g: Vec<Vec<Poly>>,
}

impl Certificate {
    /// max_m Σ_j ‖G_{mj}‖₁.
    pub fn s_max(&self) -> Integer {
        self.g
            .iter()
            .map(|row| row.iter().map(|p| p.l1_norm()).sum::<Integer>())
            .max()
            .unwrap_or_default()
    }

    /// Lower bound ln max_j |F_j(x̂)| ≥ −(ln S − ln r) at ∞ for ‖x̂‖_∞ = 1.
    pub fn log_lower_archimedean(&self) -> f64 {
        crate::arith::log_abs(&self.r) - crate::arith::log_abs(&self.s_max())
    }
}

/// Searches for a certificate with extra degree 0, 1, …, `cap`.
pub fn nullstellensatz_certificate(f: &PolyMap, cap: u32) -> Option<Certificate> {
    let nv = f.polys.len();
    for e in 0..=cap {
        let target = f.deg + e;
        let monos = monomials_of_degree(nv, target);
        let shifts = monomials_of_degree(nv, e);
        let index: HashMap<&Exponents, usize> =
            monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
        // columns: (j, shift) unknowns; augmented with one RHS per x_m^target
        let ncols = nv * shifts.len();
        let mut aug = vec![vec![Rational::new(); ncols + nv]; monos.len()];
        for (j, p) in f.polys.iter().enumerate() {
            for (s, shift) in shifts.iter().enumerate() {
                for (ex, c) in p.terms() {
                    let t: Exponents = ex.iter().zip(shift).map(|(a, b)| a + b).collect();
                    aug[index[&t]][j * shifts.len() + s] = Rational::from(c);
                }
            }
        }
        for m in 0..nv {
            let mut ex = vec![0; nv];
            ex[m] = target;
            aug[index[&ex]][ncols + m] = Rational::from(1);
        }
        let pivots = rref(&mut aug);
        let coeff_pivots: Vec<usize> = pivots.iter().copied().filter(|&c| c < ncols).collect();
        // each RHS must be in the column span: no pivot row with zero coefficient part
        let consistent = (0..nv).all(|m| {
            aug.iter()
                .skip(coeff_pivots.len())
                .all(|row| row[ncols + m].is_zero())
        });
        if !consistent {
            continue;
        }
        let mut sols: Vec<Vec<Rational>> = vec![vec![Rational::new(); ncols]; nv];
        for (r, &c) in coeff_pivots.iter().enumerate() {
            for (m, sol) in sols.iter_mut().enumerate() {
                sol[c] = aug[r][ncols + m].clone();
            }
        }
        let mut r = Integer::from(1);
        for v in sols.iter().flatten() {
            r.lcm_mut(v.denom());
        }
        let g = sols
            .iter()
            .map(|sol| {
                (0..nv)
                    .map(|j| {
                        Poly::from_terms(
                            nv,
                            shifts.iter().enumerate().map(|(s, shift)| {
                                let v = Rational::from(&sol[j * shifts.len() + s] * &r);
                                (shift.clone(), v.numer().clone())
                            }),
                        )
                    })
                    .collect()
            })
            .collect();
        return Some(Certificate { extra_degree: e, r, g });
    }
    None
}

/// Default degree cap of the certificate search.
pub fn certificate_cap(f: &PolyMap) -> u32 {
    (f.dim() as u32 + 1) * (f.deg - 1)
}

/// Decides whether the forms have no common zero besides the origin.
pub fn check_morphism(f: &PolyMap) -> MorphismCheck {
    let verdict = |b: bool| if b { MorphismCheck::Morphism } else { MorphismCheck::NotMorphism };
    if f.polys.iter().any(|p| p.is_zero()) {
        return MorphismCheck::NotMorphism;
    }
    match f.dim() {
        1 => verdict(!sylvester_resultant(&f.polys[0], &f.polys[1]).is_zero()),
        2 => match macaulay_resultant(&f.polys) {
            Some(r) => verdict(!r.is_zero()),
            None => verdict(macaulay_full_rank(&f.polys)),
        },
        _ => match nullstellensatz_certificate(f, certificate_cap(f)) {
            Some(_) => MorphismCheck::Morphism,
            None => MorphismCheck::UnknownAtCap,
        },
    }
}

/// The x-coordinate duplication map of y² = x³ + ax + b on ℙ¹ with
/// coordinates (x : z).
pub fn lattes_duplication(a: &Integer, b: &Integer) -> Result<PolyMap, SystemError> {
    let disc: Integer = Integer::from(a * a) * a * 4 + Integer::from(b * b) * 27;
    if disc.is_zero() {
        return Err(SystemError::SingularCurve);
    }
    let t = |x: u32, z: u32, c: Integer| (vec![x, z], c);
    let num = Poly::from_terms(
        2,
        [
            t(4, 0, Integer::from(1)),
            t(2, 2, Integer::from(a * -2)),
            t(1, 3, Integer::from(b * -8)),
            t(0, 4, Integer::from(a * a)),
        ],
    );
    let den = Poly::from_terms(
        2,
        [t(3, 1, Integer::from(4)), t(1, 3, Integer::from(a * 4)), t(0, 4, Integer::from(b * 4))],
    );
    PolyMap::new(vec![num, den])
}

/// A system (ℙᴺ; f_1, …, f_k) with L = 𝒪(1) and d = Σ deg f_i.
#[derive(Debug)]
pub struct PolyMapSystem {
    maps: Vec<PolyMap>,
    certificates: OnceLock<Vec<Option<Certificate>>>,
}

impl Clone for PolyMapSystem {
    fn clone(&self) -> Self {
        PolyMapSystem { maps: self.maps.clone(), certificates: self.certificates.clone() }
    }
}

impl PolyMapSystem {
    pub fn new(maps: Vec<PolyMap>) -> Result<Self, SystemError> {
        let Some(first) = maps.first() else {
            return Err(SystemError::Invalid("no maps".into()));
        };
        if maps.iter().any(|m| m.dim() != first.dim()) {
            return Err(SystemError::Invalid("maps act on different spaces".into()));
        }
        let d: u32 = maps.iter().map(|m| m.deg).sum();
        if d as usize <= maps.len() {
            return Err(SystemError::Invalid(format!(
                "degree d = {d} must exceed the number of maps k = {}",
                maps.len()
            )));
        }
        Ok(PolyMapSystem { maps, certificates: OnceLock::new() })
    }

    pub fn maps(&self) -> &[PolyMap] {
        &self.maps
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn total_degree(&self) -> u32 {
        self.maps.iter().map(|m| m.deg).sum()
    }

    /// Nullstellensatz certificates per map (computed once).
    pub fn certificates(&self) -> &[Option<Certificate>] {
        self.certificates.get_or_init(|| {
            self.maps.iter().map(|m| nullstellensatz_certificate(m, certificate_cap(m))).collect()
        })
    }

    /// Primes at which some map may have bad reduction: divisors of the
    /// certificate constants. `None` if some certificate is missing.
    pub fn bad_primes(&self) -> Option<Vec<Integer>> {
        let mut out = Vec::new();
        for c in self.certificates() {
            out.extend(crate::arith::prime_factors(&c.as_ref()?.r));
        }
        out.sort();
        out.dedup();
        Some(out)
    }
}

impl Dynamics for PolyMapSystem {
    fn label(&self) -> String {
        let forms: Vec<String> = self
            .maps
            .iter()
            .map(|m| {
                m.polys
                    .iter()
                    .map(|p| format!("{:?}", p.terms()))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        format!("poly_pn[{}]", forms.join(";"))
    }

    fn space(&self) -> Space {
        Space::projective(self.dim())
    }

    fn num_maps(&self) -> usize {
        self.maps.len()
    }

    fn degree(&self) -> f64 {
        self.total_degree() as f64
    }

    fn weights(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn evaluate(&self, i: usize, x: &ProjPoint) -> Result<ProjPoint, SystemError> {
        check_index(i, self.maps.len())?;
        x.in_space(&self.space())?;
        let mut img = self.maps[i].apply(x.factor(0));
        if canonicalize_factor(&mut img).is_none() {
            return Err(SystemError::Indeterminate { map: i, point: x.to_string() });
        }
        Ok(ProjPoint::from_integers(vec![img])?)
    }

    fn sample_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let bits = rng.gen_range(1..=24u32);
            let lim = 1i64 << bits;
            let coords: Vec<Integer> = (0..=n).map(|_| Integer::from(rng.gen_range(-lim..=lim))).collect();
            let mut c = coords;
            if canonicalize_factor(&mut c).is_some() {
                out.push(ProjPoint::from_integers(vec![c]).expect("nonzero"));
            }
        }
        out
    }

    fn poly_maps(&self) -> Option<&PolyMapSystem> {
        Some(self)
    }
}
