//! Canonical heights ĥ = lim a_l, a_l(x) = d^{−l} Σ_{f∈F_l} h_L(f(x)).
//!
//! If |Σ_i h(f_i y) − d h(y)| ≤ C for all y then
//! |ĥ(x) − a_l(x)| ≤ C (k/d)^l / (d − k).
//!
//! Engines:
//! * `ExactOrbit` walks the orbit DAG in exact arithmetic, merging equal
//!   points and carrying multiplicities d^{−l}·#{f ∈ F_l : f(x) = y}.
//! * `LocalSeries` (morphisms of ℙᴺ with certificates) sums the per-place
//!   series of [`crate::local`], which only ever handles normalized points.
//! * `InvolutionWalk` (every f_i an involution, k ≥ 2). Writing
//!   δ(y) = Σ_i h(f_i y) − d h(y), telescoping gives
//!   ĥ(x) = h(x) + Σ_m d^{−(m+1)} Σ_{f∈F_m} δ(f x). Grouping the length-m
//!   sequences by the reduced word w they collapse to turns the weights into
//!   the Green function of the simple random walk on the k-regular tree:
//!   ĥ(x) = h(x) + (G/d) Σ_w F^{|w|} δ(w x), with
//!   F = (1 − √(1 − 4(k−1)/d²)) / (2(k−1)/d) and G = 1/(1 − kF/d).
//!   Terms decay like ((k−1)F)^{|w|}, e.g. (2−√3)^{|w|} for k = 2, d = 4.
//!
//! A finite forward orbit is detected first and gives ĥ = 0 exactly.

use crate::arith::ProjPoint;
use crate::local::{choose_depth, decompose_at_depth, tail_bound, LocalError, PlaceBounds, SeriesOptions};
use crate::orbits::{explore, OrbitError, OrbitLimits, OrbitStatus};
use crate::systems::{Dynamics, PolyMapSystem, Registration, SystemError, WordSystem};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};
use thiserror::Error;

/// Sample size for empirical discrepancy constants.
pub const EMPIRICAL_SAMPLE: usize = 10_000;
const EMPIRICAL_SEED: u64 = 0x5eed_c0de;
/// Coordinate size cap for the finiteness probe when L is not ample.
const CLOSURE_PROBE_BITS: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeightError {
    #[error("system is registered only through a height inequality (k + ε = {0}); no canonical height exists")]
    InequalityOnly(f64),
    #[error("point {0} is not in the domain of the system")]
    NotInDomain(String),
    #[error("target error must be positive")]
    BadTarget,
    #[error("ratio undefined: ĥ_L(x) = 0 (finite orbit)")]
    ZeroDenominator,
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Local(#[from] LocalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Auto,
    ExactOrbit,
    LocalSeries,
    InvolutionWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FiniteOrbit,
    ExactOrbit,
    LocalSeries,
    InvolutionWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FiniteOrbit,
    TargetReached,
    FixedDepth,
    DepthCap,
    NodeCap,
    DigitBudget,
    WorkBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightOptions {
    pub target_error: f64,
    /// Nodes allowed while testing the orbit for finiteness.
    pub node_budget: usize,
    pub depth_cap: usize,
    /// Bits per coordinate allowed in exact iteration.
    pub digit_budget: u64,
    /// Distinct points allowed in the orbit DAG.
    pub dag_node_cap: usize,
    /// Node evaluations allowed per place in the series engine.
    pub work_budget: u64,
    pub strategy: Strategy,
    /// Iterate to exactly this depth (ignores the target).
    pub fixed_depth: Option<usize>,
}

impl Default for HeightOptions {
    fn default() -> Self {
        HeightOptions {
            target_error: 1e-8,
            node_budget: 10_000,
            depth_cap: 64,
            digit_budget: 1_000_000,
            dag_node_cap: 50_000,
            work_budget: 1 << 24,
            strategy: Strategy::Auto,
            fixed_depth: None,
        }
    }
}

impl HeightOptions {
    pub fn with_target(target_error: f64) -> Self {
        HeightOptions { target_error, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightEstimate {
    pub value: f64,
    pub error_radius: f64,
    /// The radius is a proven bound and meets the target.
    pub certified: bool,
    pub iterations: usize,
    pub orbit_nodes_visited: usize,
    /// Not computed when a small finite orbit settles the answer first.
    #[serde(rename = "discrepancy_C")]
    pub discrepancy_c: Option<f64>,
    pub discrepancy_certified: bool,
    pub method: Method,
    pub stop: StopReason,
    /// Size of the orbit when it was found to be finite.
    pub finite_orbit_size: Option<usize>,
}

/// Bounds on Σ_i h(f_i x) − d h(x) over X(ℚ).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    #[serde(rename = "C")]
    pub c: f64,
    pub certified: bool,
    /// Σ_i h(f_i x) − d h(x) ≤ upper
    pub upper: f64,
    /// Σ_i h(f_i x) − d h(x) ≥ lower
    pub lower: f64,
    /// Points used for an empirical constant (0 when certified).
    pub sample_size: usize,
}

fn discrepancy_cache() -> &'static RwLock<HashMap<String, Discrepancy>> {
    static CACHE: OnceLock<RwLock<HashMap<String, Discrepancy>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// C with |Σ_i h(f_i x) − d h(x)| ≤ C. Certified for morphisms of ℙᴺ with
/// Nullstellensatz certificates; otherwise twice the empirical maximum over
/// a sample and flagged uncertified. Results are memoized per system.
fn cached_discrepancy(sys: &dyn Dynamics) -> Option<Discrepancy> {
    discrepancy_cache().read().expect("cache").get(&sys.label()).cloned()
}

pub fn compute_discrepancy_bound(sys: &dyn Dynamics) -> Discrepancy {
    let key = sys.label();
    if let Some(d) = discrepancy_cache().read().expect("cache").get(&key) {
        return d.clone();
    }
    let d = match sys.poly_maps() {
        Some(p) => certified_discrepancy(p).unwrap_or_else(|| empirical_discrepancy(sys, Some(upper_bound(p)))),
        None => empirical_discrepancy(sys, None),
    };
    discrepancy_cache().write().expect("cache").insert(key, d.clone());
    d
}

fn upper_bound(p: &PolyMapSystem) -> f64 {
    p.maps().iter().map(|m| m.log_upper_bound()).sum()
}

fn certified_discrepancy(p: &PolyMapSystem) -> Option<Discrepancy> {
    let certs = p.certificates();
    let mut lower = 0.0;
    for c in certs {
        // at ∞: ln r − ln S; at p | r: −v_p(r) ln p; together −ln S
        lower -= crate::arith::log_abs(&c.as_ref()?.s_max());
    }
    let upper = upper_bound(p);
    Some(Discrepancy { c: upper.abs().max(lower.abs()), certified: true, upper, lower, sample_size: 0 })
}

fn empirical_discrepancy(sys: &dyn Dynamics, proven_upper: Option<f64>) -> Discrepancy {
    let pts = sys.sample_points(EMPIRICAL_SAMPLE, EMPIRICAL_SEED);
    let d = sys.degree();
    let vals: Vec<f64> = pts
        .par_iter()
        .filter_map(|x| {
            let imgs = sys.images(x).ok()?;
            Some(imgs.iter().map(|y| sys.height(y)).sum::<f64>() - d * sys.height(x))
        })
        .collect();
    let lo = vals.iter().copied().fold(0.0f64, f64::min);
    let hi = vals.iter().copied().fold(0.0f64, f64::max);
    let upper = proven_upper.unwrap_or(2.0 * hi);
    let lower = 2.0 * lo;
    Discrepancy { c: upper.abs().max(lower.abs()), certified: false, upper, lower, sample_size: vals.len() }
}

fn check_domain(sys: &dyn Dynamics, x: &ProjPoint, opts: &HeightOptions) -> Result<(), HeightError> {
    if opts.target_error.is_nan() || opts.target_error <= 0.0 {
        return Err(HeightError::BadTarget);
    }
    if let Registration::InequalityOnly { k_plus_epsilon } = sys.registration() {
        return Err(HeightError::InequalityOnly(k_plus_epsilon));
    }
    if x.in_space(&sys.space()).is_err() || !sys.contains(x) {
        return Err(HeightError::NotInDomain(x.to_string()));
    }
    Ok(())
}

pub fn canonical_height(sys: &dyn Dynamics, x: &ProjPoint, opts: &HeightOptions) -> Result<HeightEstimate, HeightError> {
    check_domain(sys, x, opts)?;
    if cached_discrepancy(sys).is_none() {
        // C may be expensive (empirical sampling); small finite orbits do not need it
        let limits = OrbitLimits {
            nodes: opts.node_budget.min(256),
            digit_budget: opts.digit_budget.min(CLOSURE_PROBE_BITS),
        };
        let orbit = explore(sys, x, limits, &|_| false)?;
        if orbit.status == OrbitStatus::Closed {
            return Ok(finite_orbit_estimate(orbit.nodes.len(), None));
        }
    }
    let disc = compute_discrepancy_bound(sys);
    let k = sys.num_maps();
    let d = sys.degree();

    // Finite orbit ⇒ ĥ = 0. For ample L a point with h > C/(d−k) has
    // ĥ > 0, so its orbit (and that of x) is infinite.
    let threshold = if disc.certified { disc.c / (d - k as f64) } else { 4.0 * disc.c / (d - k as f64) } + 1e-9;
    let ample = sys.is_ample();
    let give_up = move |y: &ProjPoint| ample && sys.height(y) > threshold;
    // without an ample height there is no Northcott cut-off; keep the
    // finiteness probe cheap
    let probe_bits = if ample { opts.digit_budget } else { opts.digit_budget.min(CLOSURE_PROBE_BITS) };
    let limits = OrbitLimits { nodes: opts.node_budget, digit_budget: probe_bits };
    let orbit = explore(sys, x, limits, &give_up)?;
    if orbit.status == OrbitStatus::Closed {
        return Ok(finite_orbit_estimate(orbit.nodes.len(), Some(&disc)));
    }

    let series = sys.poly_maps().filter(|p| p.certificates().iter().all(Option::is_some));
    let walk = sys.involutive() && k >= 2;
    match (opts.strategy, series) {
        (Strategy::ExactOrbit, _) => exact_orbit(sys, x, opts, &disc),
        (Strategy::LocalSeries | Strategy::Auto, Some(p)) => local_series(p, x, opts, &disc),
        (Strategy::InvolutionWalk | Strategy::Auto, _) if walk => involution_walk(sys, x, opts, &disc),
        _ => exact_orbit(sys, x, opts, &disc),
    }
}

fn finite_orbit_estimate(size: usize, disc: Option<&Discrepancy>) -> HeightEstimate {
    HeightEstimate {
        value: 0.0,
        error_radius: 0.0,
        certified: true,
        iterations: 0,
        orbit_nodes_visited: size,
        discrepancy_c: disc.map(|d| d.c),
        discrepancy_certified: disc.is_some_and(|d| d.certified),
        method: Method::FiniteOrbit,
        stop: StopReason::FiniteOrbit,
        finite_orbit_size: Some(size),
    }
}

/// (G/d, F) for the simple random walk on the k-regular tree at z = 1/d.
pub fn walk_constants(k: usize, d: f64) -> (f64, f64) {
    let z = 1.0 / d;
    let km1 = (k - 1) as f64;
    let f = (1.0 - (1.0 - 4.0 * km1 * z * z).sqrt()) / (2.0 * km1 * z);
    let g = 1.0 / (1.0 - k as f64 * z * f);
    (g / d, f)
}

/// Bound on the terms with |w| ≥ r: (G/d) C k F^r (k−1)^{r−1} / (1 − (k−1)F).
pub fn walk_tail(c: f64, k: usize, d: f64, r: usize) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    if r == 0 {
        return c / (d - k as f64);
    }
    let (gd, f) = walk_constants(k, d);
    let q = (k - 1) as f64 * f;
    gd * c * k as f64 * f * q.powi(r as i32 - 1) / (1.0 - q)
}

fn involution_walk(
    sys: &dyn Dynamics,
    x: &ProjPoint,
    opts: &HeightOptions,
    disc: &Discrepancy,
) -> Result<HeightEstimate, HeightError> {
    let k = sys.num_maps();
    let d = sys.degree();
    let (gd, f) = walk_constants(k, d);
    // nodes of the current word length: (point, last letter, height, height of parent)
    let mut level: Vec<(ProjPoint, Option<usize>, f64, f64)> = vec![(x.clone(), None, sys.height(x), 0.0)];
    let mut value = level[0].2;
    let mut visited = 1usize;
    let mut r = 0;
    let stop = loop {
        let radius = walk_tail(disc.c, k, d, r);
        match opts.fixed_depth {
            Some(fd) if r >= fd => break StopReason::FixedDepth,
            None if radius <= opts.target_error => break StopReason::TargetReached,
            _ => {}
        }
        if r >= opts.depth_cap {
            break StopReason::DepthCap;
        }
        let fresh = if r == 0 { k } else { level.len() * (k - 1) };
        if visited + fresh > opts.dag_node_cap {
            break StopReason::NodeCap;
        }
        let kids: Vec<Result<Vec<(ProjPoint, usize, f64)>, OrbitError>> = level
            .par_iter()
            .map(|(y, last, _, _)| {
                (0..k)
                    .filter(|i| Some(*i) != *last)
                    .map(|i| {
                        let z = sys.evaluate(i, y).map_err(|source| OrbitError { node: y.to_string(), source })?;
                        let h = sys.height(&z);
                        Ok((z, i, h))
                    })
                    .collect()
            })
            .collect();
        let kids: Vec<Vec<(ProjPoint, usize, f64)>> = kids.into_iter().collect::<Result<_, _>>()?;
        if kids.iter().flatten().any(|(z, _, _)| z.max_coordinate_bits() as u64 > opts.digit_budget) {
            break StopReason::DigitBudget;
        }
        // δ(y) = Σ_i h(f_i y) − d h(y), where f_last(y) is the parent
        let level_sum: f64 = level
            .iter()
            .zip(&kids)
            .map(|((_, _, h, hp), ch)| ch.iter().map(|c| c.2).sum::<f64>() + hp - d * h)
            .sum();
        value += gd * f.powi(r as i32) * level_sum;
        visited += fresh;
        level = level
            .iter()
            .zip(kids)
            .flat_map(|((_, _, h, _), ch)| ch.into_iter().map(move |(z, i, hz)| (z, Some(i), hz, *h)))
            .collect();
        r += 1;
    };
    let radius = walk_tail(disc.c, k, d, r);
    Ok(HeightEstimate {
        value,
        error_radius: radius,
        certified: disc.certified && radius <= opts.target_error,
        iterations: r,
        orbit_nodes_visited: visited,
        discrepancy_c: Some(disc.c),
        discrepancy_certified: disc.certified,
        method: Method::InvolutionWalk,
        stop,
        finite_orbit_size: None,
    })
}

fn local_series(
    sys: &PolyMapSystem,
    x: &ProjPoint,
    opts: &HeightOptions,
    disc: &Discrepancy,
) -> Result<HeightEstimate, HeightError> {
    let bounds = PlaceBounds::from_system(sys)?;
    let k = sys.maps().len();
    let d = sys.total_degree() as f64;
    let sopts = SeriesOptions { target_error: opts.target_error, depth_cap: opts.depth_cap, work_budget: opts.work_budget };
    let depth = opts.fixed_depth.unwrap_or_else(|| choose_depth(bounds.total(), k, d, &sopts));
    let dec = decompose_at_depth(sys, &bounds, x, depth)?;
    let radius = tail_bound(bounds.total(), k, d, depth);
    let stop = if opts.fixed_depth.is_some() {
        StopReason::FixedDepth
    } else if radius <= opts.target_error {
        StopReason::TargetReached
    } else if depth >= opts.depth_cap {
        StopReason::DepthCap
    } else {
        StopReason::WorkBudget
    };
    let nodes: f64 = (0..depth).map(|l| (k as f64).powi(l as i32)).sum();
    Ok(HeightEstimate {
        value: dec.total,
        error_radius: radius,
        certified: disc.certified && radius <= opts.target_error,
        iterations: depth,
        orbit_nodes_visited: nodes.min(usize::MAX as f64) as usize,
        discrepancy_c: Some(disc.c),
        discrepancy_certified: disc.certified,
        method: Method::LocalSeries,
        stop,
        finite_orbit_size: None,
    })
}

fn exact_orbit(
    sys: &dyn Dynamics,
    x: &ProjPoint,
    opts: &HeightOptions,
    disc: &Discrepancy,
) -> Result<HeightEstimate, HeightError> {
    let k = sys.num_maps();
    let d = sys.degree();
    let mut index: HashMap<ProjPoint, usize> = HashMap::from([(x.clone(), 0)]);
    let mut points = vec![x.clone()];
    let mut heights = vec![sys.height(x)];
    let mut children: Vec<Option<Vec<usize>>> = vec![None];
    let mut level: BTreeMap<usize, f64> = BTreeMap::from([(0, 1.0)]);
    let mut value = heights[0];
    let mut l = 0;
    let stop = loop {
        let radius = tail_bound(disc.c, k, d, l);
        match opts.fixed_depth {
            Some(f) if l >= f => break StopReason::FixedDepth,
            None if radius <= opts.target_error => break StopReason::TargetReached,
            _ => {}
        }
        if l >= opts.depth_cap {
            break StopReason::DepthCap;
        }
        let todo: Vec<usize> = level.keys().copied().filter(|&n| children[n].is_none()).collect();
        let imgs: Vec<Result<Vec<ProjPoint>, SystemError>> =
            todo.par_iter().map(|&n| sys.images(&points[n])).collect();
        let mut fresh = Vec::new();
        for (&n, r) in todo.iter().zip(imgs) {
            let r = r.map_err(|source| OrbitError { node: points[n].to_string(), source })?;
            fresh.push((n, r));
        }
        if fresh.iter().flat_map(|(_, v)| v).any(|y| y.max_coordinate_bits() as u64 > opts.digit_budget) {
            break StopReason::DigitBudget;
        }
        let new_count = fresh.iter().flat_map(|(_, v)| v).filter(|y| !index.contains_key(*y)).count();
        if points.len() + new_count > opts.dag_node_cap {
            break StopReason::NodeCap;
        }
        for (n, ys) in fresh {
            let ids = ys
                .into_iter()
                .map(|y| {
                    *index.entry(y.clone()).or_insert_with(|| {
                        points.push(y);
                        children.push(None);
                        points.len() - 1
                    })
                })
                .collect();
            children[n] = Some(ids);
        }
        // heights of the new points
        let missing: Vec<usize> = (heights.len()..points.len()).collect();
        let hs: Vec<f64> = missing.par_iter().map(|&i| sys.height(&points[i])).collect();
        heights.extend(hs);

        let mut next: BTreeMap<usize, f64> = BTreeMap::new();
        for (&n, &w) in &level {
            for &c in children[n].as_ref().expect("expanded") {
                *next.entry(c).or_insert(0.0) += w / d;
            }
        }
        level = next;
        value = level.iter().map(|(&n, &w)| w * heights[n]).sum();
        l += 1;
    };
    let radius = tail_bound(disc.c, k, d, l);
    Ok(HeightEstimate {
        value,
        error_radius: radius,
        certified: disc.certified && radius <= opts.target_error,
        iterations: l,
        orbit_nodes_visited: points.len(),
        discrepancy_c: Some(disc.c),
        discrepancy_certified: disc.certified,
        method: Method::ExactOrbit,
        stop,
        finite_orbit_size: None,
    })
}

/// Shared memo of heights keyed by (system label, point, target).
#[derive(Default)]
pub struct HeightCache {
    map: RwLock<HashMap<(String, ProjPoint, u64), HeightEstimate>>,
}

impl HeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(
        &self,
        sys: &dyn Dynamics,
        x: &ProjPoint,
        opts: &HeightOptions,
    ) -> Result<HeightEstimate, HeightError> {
        let key = (sys.label(), x.clone(), opts.target_error.to_bits());
        if opts.fixed_depth.is_none() {
            if let Some(e) = self.map.read().expect("cache").get(&key) {
                return Ok(e.clone());
            }
        }
        let e = canonical_height(sys, x, opts)?;
        if opts.fixed_depth.is_none() {
            self.map.write().expect("cache").insert(key, e.clone());
        }
        Ok(e)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalEquationReport {
    pub at_point: HeightEstimate,
    pub at_images: Vec<HeightEstimate>,
    /// |Σ_i ĥ(f_i x) − d ĥ(x)|
    pub residual: f64,
    /// d·r(x) + Σ r(f_i x)
    pub radius_bound: f64,
    /// (k + d)·target
    pub tolerance: f64,
    /// Images evaluated one level shallower than x.
    pub aligned: bool,
}

impl FunctionalEquationReport {
    pub fn within_tolerance(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Residual of Σ_i ĥ(f_i x) = d ĥ(x).
///
/// With `aligned`, ĥ(f_i x) is truncated at depth l − 1 when ĥ(x) is
/// truncated at depth l. Then Σ_i a_{l−1}(f_i x) = d·a_l(x) holds
/// identically, so the residual measures arithmetic consistency and the
/// radii measure distance to the limit. Without it every value is
/// computed independently to the target.
pub fn check_functional_equation(
    sys: &dyn Dynamics,
    x: &ProjPoint,
    opts: &HeightOptions,
    aligned: bool,
) -> Result<FunctionalEquationReport, HeightError> {
    let k = sys.num_maps();
    let d = sys.degree();
    let images = sys.images(x)?;
    let mut opts = *opts;
    if aligned && opts.strategy == Strategy::Auto && sys.involutive() && sys.poly_maps().is_none() {
        // the walk regrouping does not truncate consistently across x and f_i(x)
        opts.strategy = Strategy::ExactOrbit;
    }
    let opts = &opts;
    let mut at_point = canonical_height(sys, x, opts)?;
    let mut img_opts = *opts;
    let is_aligned = aligned && at_point.method != Method::FiniteOrbit;
    if is_aligned {
        if at_point.iterations == 0 {
            at_point = canonical_height(sys, x, &HeightOptions { fixed_depth: Some(1), ..*opts })?;
        }
        img_opts.fixed_depth = Some(at_point.iterations - 1);
    }
    let at_images: Vec<HeightEstimate> =
        images.iter().map(|y| canonical_height(sys, y, &img_opts)).collect::<Result<_, _>>()?;
    let sum: f64 = at_images.iter().map(|e| e.value).sum();
    let residual = (sum - d * at_point.value).abs();
    let radius_bound = d * at_point.error_radius + at_images.iter().map(|e| e.error_radius).sum::<f64>();
    Ok(FunctionalEquationReport {
        at_point,
        at_images,
        residual,
        radius_bound,
        tolerance: (k as f64 + d) * opts.target_error,
        aligned: is_aligned,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilvermanReport {
    pub h_plus: HeightEstimate,
    pub h_minus: HeightEstimate,
    pub h_l: HeightEstimate,
    pub ratio: f64,
    pub expected: f64,
    /// Bound on |ratio − true ratio| propagated from the radii.
    pub ratio_radius: f64,
}

/// (ĥ⁺(x) + ĥ⁻(x)) / ĥ_{L,{σ₁,σ₂}}(x) on a Wheeler surface; the ĥ^± come
/// from the k = 1 systems (σ₂∘σ₁, E⁺) and (σ₁∘σ₂, E⁻) of degree 7+4√3.
pub fn wheeler_silverman_ratio(
    base: Arc<dyn Dynamics>,
    x: &ProjPoint,
    opts: &HeightOptions,
) -> Result<SilvermanReport, HeightError> {
    let h_l = canonical_height(base.as_ref(), x, opts)?;
    if h_l.method == Method::FiniteOrbit || h_l.value.abs() <= h_l.error_radius {
        return Err(HeightError::ZeroDenominator);
    }
    let plus = WordSystem::silverman_plus(base.clone())?;
    let minus = WordSystem::silverman_minus(base)?;
    let (h_plus, h_minus) = rayon::join(|| canonical_height(&plus, x, opts), || canonical_height(&minus, x, opts));
    let (h_plus, h_minus) = (h_plus?, h_minus?);
    let num = h_plus.value + h_minus.value;
    let ratio = num / h_l.value;
    let dn = h_plus.error_radius + h_minus.error_radius;
    let dd = h_l.error_radius;
    let ratio_radius = if h_l.value.abs() > dd { (dn + ratio.abs() * dd) / (h_l.value.abs() - dd) } else { f64::INFINITY };
    Ok(SilvermanReport { h_plus, h_minus, h_l, ratio, expected: 1.0 + 3f64.sqrt(), ratio_radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::systems::{K3TrilinearSystem, PolyMap};

    fn square() -> PolyMapSystem {
        PolyMapSystem::new(vec![PolyMap::power_map(1, 2)]).unwrap()
    }

    fn p(c: &[i64]) -> ProjPoint {
        ProjPoint::from_i64(&[c]).unwrap()
    }

    #[test]
    fn squaring_is_exact() {
        let e = canonical_height(&square(), &p(&[2, 1]), &HeightOptions::default()).unwrap();
        assert_eq!(e.value, 2f64.ln());
        assert_eq!(e.error_radius, 0.0);
        assert!(e.certified);
        let disc = compute_discrepancy_bound(&square());
        assert!(disc.certified && disc.c == 0.0);
    }

    #[test]
    fn finite_orbit_is_zero() {
        let s = K3TrilinearSystem::unit_cube_example();
        let x = ProjPoint::from_i64(&[&[0, 1], &[0, 1], &[0, 1]]).unwrap();
        let e = canonical_height(&s, &x, &HeightOptions::with_target(1e-6)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.finite_orbit_size, Some(7));
        assert!(e.orbit_nodes_visited <= 7 * 3);
        let e = canonical_height(&square(), &p(&[-1, 1]), &HeightOptions::default()).unwrap();
        assert_eq!((e.value, e.method), (0.0, Method::FiniteOrbit));
    }

    #[test]
    fn certified_constant_for_quadratic() {
        let f = PolyMap::new(vec![
            Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 1)]),
            Poly::from_i64(2, &[(&[0, 2], 1)]),
        ])
        .unwrap();
        let s = PolyMapSystem::new(vec![f]).unwrap();
        let disc = compute_discrepancy_bound(&s);
        assert!(disc.certified);
        assert!(disc.upper >= 2f64.ln() - 1e-15);
    }

    #[test]
    fn engines_agree_on_a_polynomial() {
        // z ↦ z² + 1: both engines see the same a_l at equal depth
        let f = PolyMap::new(vec![
            Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 1)]),
            Poly::from_i64(2, &[(&[0, 2], 1)]),
        ])
        .unwrap();
        let s = PolyMapSystem::new(vec![f]).unwrap();
        let x = p(&[3, 2]);
        for depth in [0, 3, 6] {
            let o = |strategy| HeightOptions { strategy, fixed_depth: Some(depth), ..Default::default() };
            let a = canonical_height(&s, &x, &o(Strategy::ExactOrbit)).unwrap();
            let b = canonical_height(&s, &x, &o(Strategy::LocalSeries)).unwrap();
            assert!((a.value - b.value).abs() < 1e-12, "{depth}: {} vs {}", a.value, b.value);
        }
        let e = canonical_height(&s, &x, &HeightOptions::default()).unwrap();
        assert!(e.certified && e.error_radius <= 1e-8);
    }

    #[test]
    fn functional_equation_on_two_maps() {
        let g = PolyMap::new(vec![
            Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 1)]),
            Poly::from_i64(2, &[(&[0, 2], 1)]),
        ])
        .unwrap();
        let s = PolyMapSystem::new(vec![PolyMap::power_map(1, 2), g]).unwrap();
        let o = HeightOptions::with_target(1e-6);
        let r = check_functional_equation(&s, &p(&[5, 7]), &o, false).unwrap();
        assert!(r.within_tolerance(), "{}", r.residual);
        assert!(r.at_point.certified);
    }

    #[test]
    fn walk_constants_for_two_involutions() {
        let (gd, f) = walk_constants(2, 4.0);
        assert!((f - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((gd - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn walk_matches_orbit_dag_on_k3() {
        let s = K3TrilinearSystem::unit_cube_example();
        let x = ProjPoint::from_i64(&[&[3, 1], &[6, -1], &[3, 1]]).unwrap();
        assert!(s.contains(&x));
        let opts = |strategy, depth| HeightOptions { strategy, fixed_depth: Some(depth), ..Default::default() };
        let a = canonical_height(&s, &x, &opts(Strategy::ExactOrbit, 13)).unwrap();
        let b = canonical_height(&s, &x, &opts(Strategy::InvolutionWalk, 10)).unwrap();
        assert_eq!(b.method, Method::InvolutionWalk);
        assert!((a.value - b.value).abs() <= a.error_radius + b.error_radius, "{a:?} {b:?}");
        assert!(b.error_radius < a.error_radius);
        // aligned residual of the DAG engine is exact up to rounding
        let r = check_functional_equation(&s, &x, &HeightOptions { depth_cap: 6, ..Default::default() }, true).unwrap();
        assert!(r.aligned && r.residual < 1e-9, "{}", r.residual);
    }

    #[test]
    fn inequality_only_refused() {
        let h = crate::systems::HenonSystem::new(1.into(), 0.into()).unwrap();
        let x = crate::systems::HenonSystem::affine_point(&1.into(), &2.into());
        assert!(matches!(
            canonical_height(&h, &x, &HeightOptions::default()),
            Err(HeightError::InequalityOnly(_))
        ));
    }
}
