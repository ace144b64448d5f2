//! K3 surfaces with involutions from double covers: the (2,2,2) surface in
//! (ℙ¹)³ and the surfaces of bidegree (1,1)&(2,2) or (1,2)&(2,1) in ℙ²×ℙ².

use super::{check_index, Dynamics, SystemError};
use crate::arith::{canonicalize_factor, ProjPoint, Space};
use crate::poly::{monomials_of_degree, Poly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;
use std::collections::{HashSet, VecDeque};

/// A point (u : v) of ℙ¹ as an unnormalized pair.
pub type BinaryRoot = [Integer; 2];

/// Failure modes of the residual-root step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    /// The quadratic vanishes identically.
    Degenerate,
    /// The given root does not satisfy the quadratic.
    NotARoot,
}

/// Second root of A u² + B uv + C v² given one root, normalized.
pub fn k3_involution_step(
    form: [&Integer; 3],
    root: [&Integer; 2],
) -> Result<BinaryRoot, StepError> {
    let [a, b, c] = form;
    let [u0, v0] = root;
    if a.is_zero() && b.is_zero() && c.is_zero() {
        return Err(StepError::Degenerate);
    }
    let value = Integer::from(a * u0) * u0 + Integer::from(b * u0) * v0 + Integer::from(c * v0) * v0;
    if !value.is_zero() {
        return Err(StepError::NotARoot);
    }
    let mut out = if v0.is_zero() {
        [Integer::from(-c), b.clone()]
    } else if u0.is_zero() {
        [b.clone(), Integer::from(-a)]
    } else {
        [Integer::from(c * v0), Integer::from(a * u0)]
    };
    if canonicalize_factor(&mut out).is_none() {
        // only reachable for (u0:v0) = (0:0)
        return Err(StepError::NotARoot);
    }
    Ok(out)
}

fn step_error(e: StepError, map: usize, x: &ProjPoint) -> SystemError {
    match e {
        StepError::Degenerate => SystemError::DegenerateFiber { map, point: x.to_string() },
        StepError::NotARoot => SystemError::OffSurface(x.to_string()),
    }
}

/// Hypersurface of tridegree (2,2,2) in ℙ¹×ℙ¹×ℙ¹ with σ_1, σ_2, σ_3;
/// L = L_1 + L_2 + L_3 and d = 5.
#[derive(Debug, Clone, PartialEq)]
pub struct K3TrilinearSystem {
    /// q[a][b][c] is the coefficient of x^a y^b z^c in affine coordinates.
    q: [[[Integer; 3]; 3]; 3],
}

impl K3TrilinearSystem {
    /// From affine terms (exponents each ≤ 2).
    pub fn from_affine_terms(terms: &[([u32; 3], Integer)]) -> Result<Self, SystemError> {
        let mut q: [[[Integer; 3]; 3]; 3] = Default::default();
        for (e, c) in terms {
            if e.iter().any(|&k| k > 2) {
                return Err(SystemError::Invalid(format!("exponent {e:?} exceeds 2")));
            }
            q[e[0] as usize][e[1] as usize][e[2] as usize] += c;
        }
        let sys = K3TrilinearSystem { q };
        sys.check_squarefree()?;
        Ok(sys)
    }

    /// x(1−x) + y(1−y) + z(1−z) − xyz = 0.
    pub fn unit_cube_example() -> Self {
        let t = |e: [u32; 3], c: i64| (e, Integer::from(c));
        Self::from_affine_terms(&[
            t([1, 0, 0], 1),
            t([2, 0, 0], -1),
            t([0, 1, 0], 1),
            t([0, 2, 0], -1),
            t([0, 0, 1], 1),
            t([0, 0, 2], -1),
            t([1, 1, 1], -1),
        ])
        .expect("valid surface")
    }

    pub fn affine_terms(&self) -> Vec<([u32; 3], Integer)> {
        let mut out = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    if !self.q[a][b][c].is_zero() {
                        out.push(([a as u32, b as u32, c as u32], self.q[a][b][c].clone()));
                    }
                }
            }
        }
        out
    }

    /// Binary quadratic in factor i after fixing the other two factors:
    /// [coefficient of X², XW, W²].
    fn fiber_form(&self, i: usize, x: &ProjPoint) -> [Integer; 3] {
        // pw[j][e] = X_j^e W_j^{2-e}
        let pw: Vec<[Integer; 3]> = (0..3)
            .map(|j| {
                let f = x.factor(j);
                let (xx, ww) = (&f[0], &f[1]);
                [Integer::from(ww * ww), Integer::from(xx * ww), Integer::from(xx * xx)]
            })
            .collect();
        let mut out: [Integer; 3] = Default::default();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let coeff = &self.q[a][b][c];
                    if coeff.is_zero() {
                        continue;
                    }
                    let e = [a, b, c];
                    let mut term = coeff.clone();
                    for j in (0..3).filter(|&j| j != i) {
                        term *= &pw[j][e[j]];
                    }
                    out[2 - e[i]] += term;
                }
            }
        }
        out
    }

    /// Q evaluated at the point (bihomogeneous form).
    pub fn form_value(&self, x: &ProjPoint) -> Integer {
        let [a, b, c] = self.fiber_form(0, x);
        let f = x.factor(0);
        Integer::from(&a * &f[0]) * &f[0] + Integer::from(&b * &f[0]) * &f[1] + Integer::from(&c * &f[1]) * &f[1]
    }

    /// Heuristic repeated-factor test: for each variable, some random line
    /// in that direction meets the surface in two distinct points.
    fn check_squarefree(&self) -> Result<(), SystemError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for i in 0..3 {
            let ok = (0..64).any(|_| {
                let coords: Vec<Vec<Integer>> = (0..3)
                    .map(|_| vec![Integer::from(rng.gen_range(-50..=50)), Integer::from(rng.gen_range(1..=50))])
                    .collect();
                let p = ProjPoint::from_integers(coords).expect("nonzero");
                let [a, b, c] = self.fiber_form(i, &p);
                let disc: Integer = Integer::from(&b * &b) - Integer::from(&a * &c) * 4;
                !disc.is_zero()
            });
            if !ok {
                return Err(SystemError::Invalid(format!(
                    "form has a repeated factor in the direction of variable {i}"
                )));
            }
        }
        Ok(())
    }

    /// Rational points on the surface with small affine coordinates found by
    /// solving the fiber quadratic.
    fn random_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut attempts = 0usize;
        while out.len() < count && attempts < 200 * count + 10_000 {
            attempts += 1;
            let i = rng.gen_range(0..3);
            let h = 1 + (attempts / 2000).min(60) as i64;
            let coords: Vec<Vec<Integer>> = (0..3)
                .map(|_| vec![Integer::from(rng.gen_range(-h..=h)), Integer::from(rng.gen_range(1..=h))])
                .collect();
            let base = ProjPoint::from_integers(coords).expect("nonzero");
            let [a, b, c] = self.fiber_form(i, &base);
            let disc: Integer = Integer::from(&b * &b) - Integer::from(&a * &c) * 4;
            if disc < 0 || !disc.is_perfect_square() || (a.is_zero() && b.is_zero() && c.is_zero()) {
                continue;
            }
            let s = disc.sqrt();
            let roots: Vec<[Integer; 2]> = if a.is_zero() {
                vec![[Integer::from(1), Integer::new()], [Integer::from(-&c), b.clone()]]
            } else {
                vec![
                    [Integer::from(-&b) + &s, Integer::from(&a * 2)],
                    [Integer::from(-&b) - &s, Integer::from(&a * 2)],
                ]
            };
            for mut r in roots {
                if canonicalize_factor(&mut r).is_none() {
                    continue;
                }
                let mut f = base.factors().to_vec();
                f[i] = r.to_vec();
                let p = ProjPoint::from_integers(f).expect("canonical");
                if self.images(&p).is_ok() && seen.insert(p.clone()) {
                    out.push(p);
                }
            }
        }
        out.truncate(count);
        out
    }
}

impl Dynamics for K3TrilinearSystem {
    fn label(&self) -> String {
        format!("k3_222{:?}", self.affine_terms())
    }

    fn space(&self) -> Space {
        Space(vec![1, 1, 1])
    }

    fn num_maps(&self) -> usize {
        3
    }

    fn degree(&self) -> f64 {
        5.0
    }

    fn weights(&self) -> Vec<f64> {
        vec![1.0; 3]
    }

    fn contains(&self, x: &ProjPoint) -> bool {
        x.in_space(&self.space()).is_ok() && self.form_value(x).is_zero()
    }

    fn evaluate(&self, i: usize, x: &ProjPoint) -> Result<ProjPoint, SystemError> {
        check_index(i, 3)?;
        x.in_space(&self.space())?;
        let [a, b, c] = self.fiber_form(i, x);
        let f = x.factor(i);
        let r = k3_involution_step([&a, &b, &c], [&f[0], &f[1]]).map_err(|e| step_error(e, i, x))?;
        let mut factors = x.factors().to_vec();
        factors[i] = r.to_vec();
        Ok(ProjPoint::from_integers(factors)?)
    }

    fn involutive(&self) -> bool {
        true
    }

    fn sample_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        self.random_points(count, seed)
    }
}

/// Which pair of bidegrees cuts out the surface in ℙ²×ℙ².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleCoverVariant {
    /// (1,1) and (2,2), d = 4.
    Wheeler,
    /// (1,2) and (2,1), d = 5.
    OneTwoTwoOne,
}

impl DoubleCoverVariant {
    pub fn degree(self) -> u32 {
        match self {
            DoubleCoverVariant::Wheeler => 4,
            DoubleCoverVariant::OneTwoTwoOne => 5,
        }
    }

    /// (first, second) bidegrees.
    pub fn bidegrees(self) -> [(u32, u32); 2] {
        match self {
            DoubleCoverVariant::Wheeler => [(1, 1), (2, 2)],
            DoubleCoverVariant::OneTwoTwoOne => [(1, 2), (2, 1)],
        }
    }
}

/// Complete intersection S of two bihomogeneous forms in ℙ²×ℙ² (variables
/// x0,x1,x2,y0,y1,y2). σ_1 fixes the first factor, σ_2 the second.
#[derive(Debug, Clone, PartialEq)]
pub struct K3DoubleCoverSystem {
    variant: DoubleCoverVariant,
    forms: [Poly; 2],
    /// Known points on S, used for sampling.
    seeds: Vec<ProjPoint>,
}

fn bidegree(p: &Poly) -> Option<(u32, u32)> {
    let mut it = p.terms().iter().map(|(e, _)| (e[0] + e[1] + e[2], e[3] + e[4] + e[5]));
    let first = it.next()?;
    it.all(|b| b == first).then_some(first)
}

/// Cross product of two integer 3-vectors.
fn cross(a: &[Integer], b: &[Integer]) -> [Integer; 3] {
    [
        Integer::from(&a[1] * &b[2]) - Integer::from(&a[2] * &b[1]),
        Integer::from(&a[2] * &b[0]) - Integer::from(&a[0] * &b[2]),
        Integer::from(&a[0] * &b[1]) - Integer::from(&a[1] * &b[0]),
    ]
}

fn linear_coefficients(p: &Poly) -> Vec<Integer> {
    (0..3)
        .map(|j| {
            let mut e = vec![0; 3];
            e[j] = 1;
            p.coeff(&e)
        })
        .collect()
}

fn dot(a: &[Integer], b: &[Integer]) -> Integer {
    a.iter().zip(b).map(|(x, y)| Integer::from(x * y)).sum()
}

impl K3DoubleCoverSystem {
    pub fn new(variant: DoubleCoverVariant, forms: [Poly; 2], seeds: Vec<ProjPoint>) -> Result<Self, SystemError> {
        let want = variant.bidegrees();
        for (f, w) in forms.iter().zip(want) {
            if f.nvars() != 6 {
                return Err(SystemError::Invalid("forms must have 6 variables".into()));
            }
            if bidegree(f) != Some(w) {
                return Err(SystemError::Invalid(format!(
                    "expected a form of bidegree {w:?}, got {:?}",
                    bidegree(f)
                )));
            }
        }
        let sys = K3DoubleCoverSystem { variant, forms, seeds: Vec::new() };
        for s in &seeds {
            if !sys.contains(s) {
                return Err(SystemError::OffSurface(s.to_string()));
            }
        }
        Ok(K3DoubleCoverSystem { seeds, ..sys })
    }

    pub fn variant(&self) -> DoubleCoverVariant {
        self.variant
    }

    pub fn forms(&self) -> &[Poly; 2] {
        &self.forms
    }

    pub fn seeds(&self) -> &[ProjPoint] {
        &self.seeds
    }

    /// Specializes a form at the fixed factor, giving a ternary form in the
    /// moving factor's variables.
    fn specialize(form: &Poly, fixed: usize, coords: &[Integer]) -> Poly {
        let (fo, mo) = if fixed == 0 { (0, 3) } else { (3, 0) };
        let terms = form.terms().iter().map(|(e, c)| {
            let mut v = c.clone();
            for j in 0..3 {
                for _ in 0..e[fo + j] {
                    v *= &coords[j];
                }
            }
            (vec![e[mo], e[mo + 1], e[mo + 2]], v)
        });
        Poly::from_terms(3, terms)
    }

    /// (line form, conic form) in the moving factor for involution i.
    fn fiber_forms(&self, i: usize) -> (&Poly, &Poly) {
        let moving_deg = |f: &Poly| {
            let (a, b) = bidegree(f).expect("checked");
            if i == 0 {
                b
            } else {
                a
            }
        };
        if moving_deg(&self.forms[0]) == 1 {
            (&self.forms[0], &self.forms[1])
        } else {
            (&self.forms[1], &self.forms[0])
        }
    }

    /// Random search: fix a small point in one factor and look for rational
    /// points on the fiber (a line meeting a conic).
    fn random_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let max_attempts = (4000 * count + 20_000).min(400_000);
        for attempt in 0..max_attempts {
            if out.len() >= count {
                break;
            }
            let i = rng.gen_range(0..2);
            let h = 2 + (attempt / 5000).min(40) as i64;
            let mut fixed: Vec<Integer> = (0..3).map(|_| Integer::from(rng.gen_range(-h..=h))).collect();
            if canonicalize_factor(&mut fixed).is_none() {
                continue;
            }
            let (line_form, conic_form) = self.fiber_forms(i);
            let line_poly = Self::specialize(line_form, i, &fixed);
            let conic = Self::specialize(conic_form, i, &fixed);
            let ell = linear_coefficients(&line_poly);
            // two independent integer vectors spanning the line ℓ·y = 0
            let basis: Vec<[Integer; 3]> = (0..3)
                .map(|k| {
                    let mut e = [Integer::new(), Integer::new(), Integer::new()];
                    e[k] = Integer::from(1);
                    cross(&ell, &e)
                })
                .filter(|v| v.iter().any(|c| !c.is_zero()))
                .collect();
            let Some(p) = basis.first() else { continue };
            let Some(q) = basis.iter().skip(1).find(|v| cross(p, *v).iter().any(|c| !c.is_zero())) else {
                continue;
            };
            let a = conic.eval(p);
            let c = conic.eval(q);
            let sum: Vec<Integer> = p.iter().zip(q.iter()).map(|(x, y)| Integer::from(x + y)).collect();
            let b = conic.eval(&sum) - &a - &c;
            let disc: Integer = Integer::from(&b * &b) - Integer::from(&a * &c) * 4;
            if disc < 0 || !disc.is_perfect_square() || (a.is_zero() && b.is_zero() && c.is_zero()) {
                continue;
            }
            let s = disc.sqrt();
            let roots: Vec<[Integer; 2]> = if a.is_zero() {
                vec![[Integer::from(1), Integer::new()], [Integer::from(-&c), b.clone()]]
            } else {
                vec![
                    [Integer::from(-&b) + &s, Integer::from(&a * 2)],
                    [Integer::from(-&b) - &s, Integer::from(&a * 2)],
                ]
            };
            for [u, v] in roots {
                let mut y: Vec<Integer> =
                    p.iter().zip(q.iter()).map(|(x, z)| Integer::from(&u * x) + Integer::from(&v * z)).collect();
                if canonicalize_factor(&mut y).is_none() {
                    continue;
                }
                let factors = if i == 0 { vec![fixed.clone(), y] } else { vec![y, fixed.clone()] };
                let pt = ProjPoint::from_integers(factors).expect("canonical");
                if self.images(&pt).is_ok() && seen.insert(pt.clone()) {
                    out.push(pt);
                }
            }
        }
        out.truncate(count);
        out
    }

    fn sample_orbit_points(&self, starts: &[ProjPoint], count: usize, seed: u64) -> Vec<ProjPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen: HashSet<ProjPoint> = HashSet::new();
        let mut queue: VecDeque<ProjPoint> = self.seeds.iter().chain(starts).cloned().collect();
        let mut out = Vec::new();
        while let Some(p) = queue.pop_front() {
            if out.len() >= count {
                break;
            }
            if !seen.insert(p.clone()) || p.max_coordinate_bits() > 16_384 {
                continue;
            }
            out.push(p.clone());
            let mut order = [0usize, 1];
            if rng.gen_bool(0.5) {
                order.swap(0, 1);
            }
            for i in order {
                if let Ok(q) = self.evaluate(i, &p) {
                    queue.push_back(q);
                }
            }
        }
        out
    }
}

impl Dynamics for K3DoubleCoverSystem {
    fn label(&self) -> String {
        format!("{:?}{:?}{:?}", self.variant, self.forms[0].terms(), self.forms[1].terms())
    }

    fn space(&self) -> Space {
        Space(vec![2, 2])
    }

    fn num_maps(&self) -> usize {
        2
    }

    fn degree(&self) -> f64 {
        self.variant.degree() as f64
    }

    fn weights(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }

    fn contains(&self, x: &ProjPoint) -> bool {
        if x.in_space(&self.space()).is_err() {
            return false;
        }
        let v: Vec<Integer> = x.factors().iter().flatten().cloned().collect();
        self.forms.iter().all(|f| f.eval(&v).is_zero())
    }

    fn evaluate(&self, i: usize, x: &ProjPoint) -> Result<ProjPoint, SystemError> {
        check_index(i, 2)?;
        x.in_space(&self.space())?;
        let (line_form, conic_form) = self.fiber_forms(i);
        let fixed = x.factor(i);
        let y0 = x.factor(1 - i);
        let line_poly = Self::specialize(line_form, i, fixed);
        let conic = Self::specialize(conic_form, i, fixed);
        let ell = linear_coefficients(&line_poly);
        if !dot(&ell, y0).is_zero() {
            return Err(SystemError::OffSurface(x.to_string()));
        }
        let w = cross(&ell, y0);
        if w.iter().all(|c| c.is_zero()) {
            return Err(SystemError::DegenerateFiber { map: i, point: x.to_string() });
        }
        // Q(u y0 + v w) = A u² + B uv + C v²
        let a = conic.eval(y0);
        let c = conic.eval(&w);
        let sum: Vec<Integer> = y0.iter().zip(&w).map(|(p, q)| Integer::from(p + q)).collect();
        let b = conic.eval(&sum) - &a - &c;
        let one = Integer::from(1);
        let zero = Integer::new();
        let [u, v] = k3_involution_step([&a, &b, &c], [&one, &zero]).map_err(|e| step_error(e, i, x))?;
        let mut y1: Vec<Integer> = y0.iter().zip(&w).map(|(p, q)| Integer::from(&u * p) + Integer::from(&v * q)).collect();
        if canonicalize_factor(&mut y1).is_none() {
            return Err(SystemError::DegenerateFiber { map: i, point: x.to_string() });
        }
        let mut factors = x.factors().to_vec();
        factors[1 - i] = y1;
        Ok(ProjPoint::from_integers(factors)?)
    }

    /// A few random fiber points, then orbit points grown from them and from
    /// the stored seeds.
    fn involutive(&self) -> bool {
        true
    }

    fn sample_points(&self, count: usize, seed: u64) -> Vec<ProjPoint> {
        let starts = self.random_points(count.div_ceil(4), seed ^ 0x9e37_79b9);
        self.sample_orbit_points(&starts, count, seed)
    }
}

/// A random Wheeler surface (bidegrees (1,1) and (2,2), small coefficients)
/// through the given point of ℙ²×ℙ², deterministic in `seed`.
pub fn build_wheeler_through(point: &ProjPoint, seed: u64) -> Result<K3DoubleCoverSystem, SystemError> {
    build_through(DoubleCoverVariant::Wheeler, point, seed)
}

/// Same construction for either variant.
pub fn build_through(
    variant: DoubleCoverVariant,
    point: &ProjPoint,
    seed: u64,
) -> Result<K3DoubleCoverSystem, SystemError> {
    const MAX_ATTEMPTS: usize = 64;
    point.in_space(&Space(vec![2, 2]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Integer> = point.factors().iter().flatten().cloned().collect();
    for _ in 0..MAX_ATTEMPTS {
        let forms = variant.bidegrees().map(|bd| random_form_through(bd, &coords, &mut rng));
        let Ok(sys) = K3DoubleCoverSystem::new(variant, forms, vec![point.clone()]) else {
            continue;
        };
        if sys.evaluate(0, point).is_ok() && sys.evaluate(1, point).is_ok() {
            return Ok(sys);
        }
    }
    Err(SystemError::ConstructionFailed { attempts: MAX_ATTEMPTS })
}

fn random_form_through(bd: (u32, u32), coords: &[Integer], rng: &mut ChaCha8Rng) -> Poly {
    let xs = monomials_of_degree(3, bd.0);
    let ys = monomials_of_degree(3, bd.1);
    let mut terms = Vec::new();
    for ex in &xs {
        for ey in &ys {
            let e: Vec<u32> = ex.iter().chain(ey).copied().collect();
            terms.push((e, Integer::from(rng.gen_range(-3..=3))));
        }
    }
    let f = Poly::from_terms(6, terms);
    let value = f.eval(coords);
    if value.is_zero() {
        return f;
    }
    // F ← m·F − F(p)·μ for a monomial μ with μ(p) = m ≠ 0
    let x0 = coords[..3].iter().position(|c| !c.is_zero()).expect("nonzero factor");
    let y0 = coords[3..].iter().position(|c| !c.is_zero()).expect("nonzero factor");
    let mut e = vec![0u32; 6];
    e[x0] = bd.0;
    e[3 + y0] = bd.1;
    let mono = Poly::monomial(e, Integer::from(1));
    let m = mono.eval(coords);
    let adjusted = f.scale(&m).add(&mono.scale(&Integer::from(-&value)));
    // divide out the content to keep coefficients small
    let mut g = Integer::new();
    for (_, c) in adjusted.terms() {
        g.gcd_mut(c);
    }
    if g > 1 {
        Poly::from_terms(6, adjusted.terms().iter().map(|(e, c)| (e.clone(), Integer::from(c / &g))))
    } else {
        adjusted
    }
}
