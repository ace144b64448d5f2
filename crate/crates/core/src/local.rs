//! Local canonical heights on ℙᴺ: per-place Green functions of lifts, the
//! global = Σ local decomposition, and the S-operator on finite closed sets.
//!
//! For a lift x̃ of x and a place v,
//!
//!   g_v(x̃) = ln‖x̃‖_v + Σ_{l≥0} d^{−(l+1)} Σ_{f∈F_l} δ_v(f(x)),
//!   δ_v(y) = Σ_i ln‖F_i(ŷ)‖_v   (ŷ a lift with ‖ŷ‖_v = 1),
//!
//! which is the limit of d^{−l} Σ_{f∈F_l} ln‖F(x̃)‖_v over exact composite
//! lifts. It obeys g_v(c·x̃) = g_v(x̃) + ln|c|_v. With the coordinate
//! section s = x_0^d the section-based local height is g_v(x̃) − ln|x̃_0|_v.
//! Every prime not dividing a certificate constant has δ_p ≡ 0, so only
//! finitely many places contribute.

use crate::arith::{local_log_norm, prime_factors, valuation, Place, ProjPoint};
use crate::linalg::solve;
use crate::systems::{Dynamics, PolyMap, PolyMapSystem, SystemError};
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalError {
    #[error("system has no Nullstellensatz certificate; local heights need a morphism of ℙᴺ")]
    NoCertificate,
    #[error("lift is identically zero or has the wrong length")]
    BadLift,
    #[error("p-adic precision exhausted at depth {depth}")]
    PrecisionExhausted { depth: usize },
    #[error("domain is not closed: node {node} has image {image} outside the domain")]
    NotClosed { node: usize, image: usize },
    #[error("need d > k (got d = {d}, k = {k})")]
    BadDegree { d: f64, k: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesOptions {
    pub target_error: f64,
    pub depth_cap: usize,
    /// Maximum number of node evaluations per place.
    pub work_budget: u64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { target_error: 1e-8, depth_cap: 64, work_budget: 1 << 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalHeightEstimate {
    #[serde(serialize_with = "ser_place")]
    pub place: Place,
    pub value: f64,
    pub error_radius: f64,
    pub iterations: usize,
}

fn ser_place<S: serde::Serializer>(p: &Place, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

/// Per-place bounds |δ_v| ≤ C_v derived from the certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceBounds {
    pub archimedean: f64,
    /// (p, C_p, max_i v_p(R_i))
    pub finite: Vec<(Integer, f64, u32)>,
}

impl PlaceBounds {
    pub fn from_system(sys: &PolyMapSystem) -> Result<Self, LocalError> {
        let certs: Vec<_> = sys
            .certificates()
            .iter()
            .map(|c| c.clone().ok_or(LocalError::NoCertificate))
            .collect::<Result<_, _>>()?;
        let upper: f64 = sys.maps().iter().map(PolyMap::log_upper_bound).sum();
        let lower: f64 = certs.iter().map(|c| c.log_lower_archimedean()).sum();
        let archimedean = upper.abs().max(lower.abs());
        let primes = sys.bad_primes().ok_or(LocalError::NoCertificate)?;
        let finite = primes
            .into_iter()
            .map(|p| {
                let vals: Vec<u32> = certs.iter().map(|c| valuation(&c.r, &p)).collect();
                let c_p = vals.iter().sum::<u32>() as f64 * crate::arith::log_abs(&p);
                let vmax = vals.into_iter().max().unwrap_or(0);
                (p, c_p, vmax)
            })
            .collect();
        Ok(PlaceBounds { archimedean, finite })
    }

    pub fn total(&self) -> f64 {
        self.archimedean + self.finite.iter().map(|(_, c, _)| c).sum::<f64>()
    }

    pub fn bound_for(&self, v: &Place) -> f64 {
        match v {
            Place::Archimedean => self.archimedean,
            Place::Finite(p) => self.finite.iter().find(|(q, _, _)| q == p).map(|(_, c, _)| *c).unwrap_or(0.0),
        }
    }
}

/// Tail Σ_{l≥L} C k^l / d^{l+1} = C (k/d)^L / (d − k).
pub fn tail_bound(c: f64, k: usize, d: f64, depth: usize) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    c * (k as f64 / d).powi(depth as i32) / (d - k as f64)
}

/// Smallest depth meeting the target, clipped by the depth cap and the
/// work budget (Σ_{l<L} k^l evaluations).
pub fn choose_depth(c: f64, k: usize, d: f64, opts: &SeriesOptions) -> usize {
    let mut depth = 0;
    let mut work: f64 = 0.0;
    while tail_bound(c, k, d, depth) > opts.target_error && depth < opts.depth_cap {
        let next = work + (k as f64).powi(depth as i32);
        if next > opts.work_budget as f64 {
            break;
        }
        work = next;
        depth += 1;
    }
    depth
}

/// Float copies of the maps, flattened for fast archimedean evaluation.
struct FloatMaps {
    nvars: usize,
    max_deg: usize,
    /// per map, per coordinate: range into `coefs`
    forms: Vec<Vec<std::ops::Range<usize>>>,
    coefs: Vec<f64>,
    /// exponents of term t at `exps[t * nvars..]`
    exps: Vec<usize>,
}

impl FloatMaps {
    fn new(maps: &[PolyMap]) -> Self {
        let nvars = maps[0].dim() + 1;
        let max_deg = maps.iter().map(|m| m.degree() as usize).max().unwrap_or(1);
        let (mut coefs, mut exps, mut forms) = (Vec::new(), Vec::new(), Vec::new());
        for m in maps {
            let mut ranges = Vec::new();
            for p in m.polys() {
                let start = coefs.len();
                for (e, c) in p.terms() {
                    coefs.push(c.to_f64());
                    exps.extend(e.iter().map(|&x| x as usize));
                }
                ranges.push(start..coefs.len());
            }
            forms.push(ranges);
        }
        FloatMaps { nvars, max_deg, forms, coefs, exps }
    }

    fn k(&self) -> usize {
        self.forms.len()
    }

    /// Writes all normalized images of y into `out` (k blocks of nvars) and
    /// returns δ_∞(y) = Σ_i ln max_j |F_ij(y)|.
    fn step(&self, y: &[f64], pw: &mut [f64], out: &mut [f64]) -> f64 {
        let stride = self.max_deg + 1;
        for (v, &yv) in y.iter().enumerate() {
            let row = &mut pw[v * stride..(v + 1) * stride];
            row[0] = 1.0;
            for e in 1..stride {
                row[e] = row[e - 1] * yv;
            }
        }
        let mut delta = 0.0;
        for (i, ranges) in self.forms.iter().enumerate() {
            let block = &mut out[i * self.nvars..(i + 1) * self.nvars];
            let mut norm = 0.0f64;
            for (j, r) in ranges.iter().enumerate() {
                let mut s = 0.0;
                for t in r.clone() {
                    let mut term = self.coefs[t];
                    for (v, &e) in self.exps[t * self.nvars..(t + 1) * self.nvars].iter().enumerate() {
                        term *= pw[v * stride + e];
                    }
                    s += term;
                }
                block[j] = s;
                norm = norm.max(s.abs());
            }
            for c in block.iter_mut() {
                *c /= norm;
            }
            delta += norm.ln();
        }
        delta
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Σ_{l<depth} d^{−(l+1)} Σ_{f∈F_l} δ_∞(f(y)) for ‖y‖_∞ = 1.
fn archimedean_series(maps: &FloatMaps, y: &[f64], depth: usize, d: f64) -> f64 {
    // unweighted sums per level are combined with d^{-(l+1)} at the end
    fn rec(maps: &FloatMaps, y: &[f64], level: usize, depth: usize, scratch: &mut [Vec<f64>], pw: &mut [f64], sums: &mut [f64]) {
        let (head, tail) = scratch.split_first_mut().expect("scratch per level");
        sums[level] += maps.step(y, pw, head);
        if level + 1 == depth {
            return;
        }
        let n = maps.nvars;
        for i in 0..maps.k() {
            rec(maps, &head[i * n..(i + 1) * n], level + 1, depth, tail, pw, sums);
        }
    }
    if depth == 0 {
        return 0.0;
    }
    let n = maps.nvars;
    let new_scratch = |levels: usize| vec![vec![0.0; maps.k() * n]; levels];
    let mut pw = vec![0.0; n * (maps.max_deg + 1)];
    // expand the first levels breadth-first, then hand subtrees to rayon
    let mut sums = vec![0.0; depth];
    let mut frontier = vec![y.to_vec()];
    let mut level = 0;
    while level < depth && frontier.len() < 64 {
        let mut next = Vec::with_capacity(frontier.len() * maps.k());
        let mut out = vec![0.0; maps.k() * n];
        for node in &frontier {
            sums[level] += maps.step(node, &mut pw, &mut out);
            next.extend(out.chunks(n).map(|c| c.to_vec()));
        }
        frontier = next;
        level += 1;
    }
    if level < depth {
        let partial: Vec<Vec<f64>> = frontier
            .par_iter()
            .map(|node| {
                let mut local = vec![0.0; depth];
                let mut scratch = new_scratch(depth - level);
                let mut pw = vec![0.0; n * (maps.max_deg + 1)];
                rec(maps, node, level, depth, &mut scratch, &mut pw, &mut local);
                local
            })
            .collect();
        for p in partial {
            for (s, v) in sums.iter_mut().zip(p) {
                *s += v;
            }
        }
    }
    sums.iter().enumerate().map(|(l, s)| s / d.powi(l as i32 + 1)).sum()
}

/// Residues modulo p^m with the working precision m attached.
#[derive(Clone, PartialEq, Eq, Hash)]
struct PadicNode {
    coords: Vec<Integer>,
    prec: u32,
}

struct PadicContext {
    p: Integer,
    /// p^j for j ≤ max precision
    powers: Vec<Integer>,
    forms: Vec<Vec<Vec<(Vec<u32>, Integer)>>>,
}

impl PadicContext {
    fn new(p: &Integer, maps: &[PolyMap], max_prec: u32) -> Self {
        let mut powers = vec![Integer::from(1)];
        for _ in 0..max_prec {
            let next = Integer::from(powers.last().unwrap() * p);
            powers.push(next);
        }
        let forms = maps
            .iter()
            .map(|m| m.polys().iter().map(|q| q.terms().to_vec()).collect())
            .collect();
        PadicContext { p: p.clone(), powers, forms }
    }

    /// Scales so that the first unit coordinate is 1.
    fn canonical(&self, mut coords: Vec<Integer>, prec: u32) -> PadicNode {
        let m = &self.powers[prec as usize];
        for c in coords.iter_mut() {
            *c = Integer::from(c.modulo_ref(m));
        }
        if let Some(u) = coords.iter().find(|c| !c.is_divisible(&self.p)) {
            let inv = u.clone().invert(m).expect("unit");
            for c in coords.iter_mut() {
                *c *= &inv;
                *c = Integer::from(c.modulo_ref(m));
            }
        }
        PadicNode { coords, prec }
    }

    /// Images under all maps with the exponents e_i = −ln‖F_i(ŷ)‖_p / ln p.
    fn step(&self, y: &PadicNode) -> Option<Vec<(PadicNode, u32)>> {
        let m = &self.powers[y.prec as usize];
        let mut out = Vec::with_capacity(self.forms.len());
        for forms in &self.forms {
            let vals: Vec<Integer> = forms
                .iter()
                .map(|terms| {
                    let mut acc = Integer::new();
                    for (e, c) in terms {
                        let mut t = Integer::from(c.modulo_ref(m));
                        for (yi, &k) in y.coords.iter().zip(e) {
                            for _ in 0..k {
                                t *= yi;
                                t = Integer::from(t.modulo_ref(m));
                            }
                        }
                        acc += t;
                    }
                    Integer::from(acc.modulo_ref(m))
                })
                .collect();
            let e = vals
                .iter()
                .filter(|v| !v.is_zero())
                .map(|v| valuation(v, &self.p))
                .min()?;
            if e >= y.prec {
                return None;
            }
            let scale = &self.powers[e as usize];
            let coords = vals.into_iter().map(|v| Integer::from(v.div_exact_ref(scale))).collect();
            out.push((self.canonical(coords, y.prec - e), e));
        }
        Some(out)
    }
}

/// Σ_{l<depth} d^{−(l+1)} Σ_{f∈F_l} δ_p(f(y)) for a p-primitive lift, with
/// nodes deduplicated by residue class.
fn padic_series(
    maps: &[PolyMap],
    p: &Integer,
    vmax: u32,
    lift: &[Integer],
    depth: usize,
    d: f64,
) -> Result<f64, LocalError> {
    if depth == 0 {
        return Ok(0.0);
    }
    let prec = (depth as u32 + 1) * vmax + 1;
    let ctx = PadicContext::new(p, maps, prec);
    let ln_p = crate::arith::log_abs(p);
    let mut level: HashMap<PadicNode, f64> = HashMap::new();
    level.insert(ctx.canonical(lift.to_vec(), prec), 1.0);
    let mut total = 0.0;
    for l in 0..depth {
        let entries: Vec<(PadicNode, f64)> = level.into_iter().collect();
        let stepped: Vec<Option<Vec<(PadicNode, u32)>>> = entries.par_iter().map(|(y, _)| ctx.step(y)).collect();
        let mut next: HashMap<PadicNode, f64> = HashMap::new();
        for ((_, w), imgs) in entries.iter().zip(stepped) {
            let imgs = imgs.ok_or(LocalError::PrecisionExhausted { depth: l })?;
            let delta: f64 = imgs.iter().map(|(_, e)| -(*e as f64) * ln_p).sum();
            total += w / d * delta;
            if l + 1 < depth {
                for (img, _) in imgs {
                    *next.entry(img).or_insert(0.0) += w / d;
                }
            }
        }
        level = next;
    }
    Ok(total)
}

/// The series part of g_v at a point (independent of the lift).
fn series_at_place(
    sys: &PolyMapSystem,
    bounds: &PlaceBounds,
    x: &ProjPoint,
    v: &Place,
    depth: usize,
) -> Result<f64, LocalError> {
    let d = sys.total_degree() as f64;
    let lift = x.factor(0);
    match v {
        Place::Archimedean => {
            let maps = FloatMaps::new(sys.maps());
            // scale the exact lift into f64 range before normalizing
            let shift = lift.iter().map(|c| c.significant_bits()).max().unwrap_or(0) as i64 - 60;
            let y: Vec<f64> = lift
                .iter()
                .map(|c| {
                    if shift > 0 {
                        Rational::from((c.clone(), Integer::from(1) << shift as u32)).to_f64()
                    } else {
                        c.to_f64()
                    }
                })
                .collect();
            let n = max_abs(&y);
            let y: Vec<f64> = y.iter().map(|c| c / n).collect();
            Ok(archimedean_series(&maps, &y, depth, d))
        }
        Place::Finite(p) => match bounds.finite.iter().find(|(q, _, _)| q == p) {
            None => Ok(0.0),
            Some((_, _, vmax)) => padic_series(sys.maps(), p, *vmax, lift, depth, d),
        },
    }
}

/// g_v(x̃) for an arbitrary nonzero integer lift.
pub fn local_green(
    sys: &PolyMapSystem,
    lift: &[Integer],
    v: &Place,
    opts: &SeriesOptions,
) -> Result<LocalHeightEstimate, LocalError> {
    if lift.len() != sys.dim() + 1 || lift.iter().all(|c| c.is_zero()) {
        return Err(LocalError::BadLift);
    }
    let bounds = PlaceBounds::from_system(sys)?;
    let x = ProjPoint::from_integers(vec![lift.to_vec()]).map_err(|_| LocalError::BadLift)?;
    let k = sys.maps().len();
    let d = sys.total_degree() as f64;
    let c_v = bounds.bound_for(v);
    let depth = choose_depth(c_v, k, d, opts);
    let series = series_at_place(sys, &bounds, &x, v, depth)?;
    Ok(LocalHeightEstimate {
        place: v.clone(),
        value: local_log_norm(lift, v) + series,
        error_radius: tail_bound(c_v, k, d, depth),
        iterations: depth,
    })
}

/// Exact-lift variant: d^{−l} Σ_{f∈F_l} ln‖F(x̃)‖_v with composite lifts
/// evaluated in integers without normalization. Returns the value at the
/// largest depth ≤ `depth` whose lifts stay under `digit_budget` bits, and
/// that depth.
pub fn local_green_exact_lift(
    sys: &PolyMapSystem,
    lift: &[Integer],
    v: &Place,
    depth: usize,
    digit_budget: u64,
) -> Result<(f64, usize), LocalError> {
    if lift.len() != sys.dim() + 1 || lift.iter().all(|c| c.is_zero()) {
        return Err(LocalError::BadLift);
    }
    let d = sys.total_degree() as f64;
    let mut level: Vec<Vec<Integer>> = vec![lift.to_vec()];
    let mut value = local_log_norm(lift, v);
    for l in 1..=depth {
        let next: Vec<Vec<Integer>> = level
            .par_iter()
            .flat_map_iter(|y| sys.maps().iter().map(move |m| m.apply(y)))
            .collect();
        if next.iter().any(|y| y.iter().all(|c| c.is_zero())) {
            return Err(LocalError::System(SystemError::Indeterminate { map: 0, point: "composite lift".into() }));
        }
        if next.iter().flatten().any(|c| u64::from(c.significant_bits()) > digit_budget) {
            return Ok((value, l - 1));
        }
        value = next.iter().map(|y| local_log_norm(y, v)).sum::<f64>() / d.powi(l as i32);
        level = next;
    }
    Ok((value, depth))
}

/// Local terms of ĥ(x) for the coprime lift, with their sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub locals: Vec<LocalHeightEstimate>,
    pub total: f64,
    pub total_radius: f64,
}

impl Decomposition {
    pub fn as_map(&self) -> BTreeMap<String, f64> {
        self.locals.iter().map(|l| (l.place.to_string(), l.value)).collect()
    }
}

/// ĥ(x) = Σ_v g_v(x̃) over ∞ and the primes where some map has bad
/// reduction (every other prime contributes exactly 0 on a coprime lift).
pub fn decompose_height(sys: &PolyMapSystem, x: &ProjPoint, opts: &SeriesOptions) -> Result<Decomposition, LocalError> {
    let bounds = PlaceBounds::from_system(sys)?;
    let depth = choose_depth(bounds.total(), sys.maps().len(), sys.total_degree() as f64, opts);
    decompose_at_depth(sys, &bounds, x, depth)
}

/// The decomposition with every series truncated at `depth`.
pub fn decompose_at_depth(
    sys: &PolyMapSystem,
    bounds: &PlaceBounds,
    x: &ProjPoint,
    depth: usize,
) -> Result<Decomposition, LocalError> {
    x.in_space(&sys.space()).map_err(SystemError::from)?;
    let k = sys.maps().len();
    let d = sys.total_degree() as f64;
    let mut places = vec![Place::Archimedean];
    places.extend(bounds.finite.iter().map(|(p, _, _)| Place::Finite(p.clone())));
    let locals: Vec<LocalHeightEstimate> = places
        .par_iter()
        .map(|v| {
            let series = series_at_place(sys, bounds, x, v, depth)?;
            Ok(LocalHeightEstimate {
                place: v.clone(),
                value: local_log_norm(x.factor(0), v) + series,
                error_radius: tail_bound(bounds.bound_for(v), k, d, depth),
                iterations: depth,
            })
        })
        .collect::<Result<_, LocalError>>()?;
    let total = locals.iter().map(|l| l.value).sum();
    let total_radius = locals.iter().map(|l| l.error_radius).sum();
    Ok(Decomposition { locals, total, total_radius })
}

/// Primes dividing some coordinate of the lifts explored up to `depth`
/// (exact composites, capped by `digit_budget` bits); for reporting.
pub fn primes_in_lifts(sys: &PolyMapSystem, x: &ProjPoint, depth: usize, digit_budget: u64) -> Vec<Integer> {
    let mut level = vec![x.factor(0).to_vec()];
    let mut out = Vec::new();
    for _ in 0..depth {
        let next: Vec<Vec<Integer>> =
            level.iter().flat_map(|y| sys.maps().iter().map(move |m| m.apply(y))).collect();
        if next.iter().flatten().any(|c| u64::from(c.significant_bits()) > digit_budget.min(256)) {
            break;
        }
        for y in &next {
            let mut g = Integer::new();
            for c in y {
                g.gcd_mut(c);
            }
            out.extend(prime_factors(&g));
        }
        level = next;
    }
    out.sort();
    out.dedup();
    out
}

/// Result of solving γ(x) = Σ_i γ̂(f_i x) − d γ̂(x) on a finite closed set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    /// Exact rational solve, converted to f64.
    pub linear: Vec<f64>,
    /// S-iteration limit.
    pub iterated: Vec<f64>,
    /// sup-norm of successive S-iteration differences.
    pub contraction_log: Vec<f64>,
    pub max_disagreement: f64,
    pub sup_gamma: f64,
    pub sup_gamma_hat: f64,
    /// ((2d+1)/(d−k)) ‖γ‖_sup
    pub bound: f64,
    pub bound_holds: bool,
}

/// `images[x][i]` is the index of f_i(x) in the domain.
pub fn s_operator_fixed_point(
    images: &[Vec<usize>],
    gamma: &[f64],
    d: f64,
    k: usize,
) -> Result<FixedPointReport, LocalError> {
    s_operator_fixed_point_from(images, gamma, d, k, &vec![0.0; gamma.len()])
}

/// Same, starting the S-iteration at `init`.
pub fn s_operator_fixed_point_from(
    images: &[Vec<usize>],
    gamma: &[f64],
    d: f64,
    k: usize,
    init: &[f64],
) -> Result<FixedPointReport, LocalError> {
    if d.is_nan() || d <= k as f64 {
        return Err(LocalError::BadDegree { d, k });
    }
    let n = gamma.len();
    for (node, imgs) in images.iter().enumerate() {
        if imgs.len() != k {
            return Err(LocalError::BadLift);
        }
        if let Some(&bad) = imgs.iter().find(|&&j| j >= n) {
            return Err(LocalError::NotClosed { node, image: bad });
        }
    }
    // (P − dI) γ̂ = γ with P_{xy} = #{i : f_i x = y}
    let dq = Rational::from_f64(d).expect("finite");
    let mut a = vec![vec![Rational::new(); n]; n];
    for (x, imgs) in images.iter().enumerate() {
        for &y in imgs {
            a[x][y] += 1;
        }
        a[x][x] -= &dq;
    }
    let rhs: Vec<Rational> = gamma.iter().map(|g| Rational::from_f64(*g).expect("finite")).collect();
    let exact = solve(&a, &rhs).expect("P − dI is invertible for d > k");
    let linear: Vec<f64> = exact.iter().map(|q| q.to_f64()).collect();

    let mut cur = init.to_vec();
    let mut log = Vec::new();
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..n)
            .map(|x| (images[x].iter().map(|&y| cur[y]).sum::<f64>() - gamma[x]) / d)
            .collect();
        let diff = next.iter().zip(&cur).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        cur = next;
        log.push(diff);
        if diff <= 1e-15 * (1.0 + cur.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_disagreement = linear.iter().zip(&cur).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let sup_gamma = sup(gamma);
    let sup_gamma_hat = sup(&linear);
    let bound = (2.0 * d + 1.0) / (d - k as f64) * sup_gamma;
    Ok(FixedPointReport {
        linear,
        iterated: cur,
        contraction_log: log,
        max_disagreement,
        sup_gamma,
        sup_gamma_hat,
        bound,
        bound_holds: sup_gamma_hat <= bound * (1.0 + 1e-12),
    })
}
