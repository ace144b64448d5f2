//! Forward orbits, finiteness and F-periodicity, Northcott-bounded periodic
//! point search, nonnegative eigenvectors of transition matrices, and the
//! Hénon height inequality check.
//!
//! A subset C' ⊆ C(x) closed under every map is a union of
//! reachability-closed sets. If the orbit multigraph is strongly connected
//! the only nonempty one is C(x) itself; otherwise a sink strongly
//! connected component is a proper closed subset. So x is F-periodic
//! exactly when its orbit is finite and its orbit graph strongly connected.

use crate::arith::{enumerate_product_bounded, naive_height, ProjPoint};
use crate::linalg::{nullspace, rank, solve};
use crate::systems::{Dynamics, HenonSystem, SystemError};
use rayon::prelude::*;
use rug::Rational;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use thiserror::Error;

/// Default cap on coordinate size (bits) while exploring orbits.
pub const DEFAULT_DIGIT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("evaluation failed at orbit node {node}: {source}")]
pub struct OrbitError {
    pub node: String,
    pub source: SystemError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Closed,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub nodes: Vec<ProjPoint>,
    /// (from, map, to)
    pub edges: Vec<(usize, usize, usize)>,
    pub status: OrbitStatus,
    pub visit_order: Vec<usize>,
}

impl OrbitReport {
    /// Out-neighbour lists, one entry per map.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, _, b) in &self.edges {
            adj[a].push(b);
        }
        adj
    }

    /// `images[x][i]` = index of f_i(x); only meaningful when closed.
    pub fn image_table(&self, k: usize) -> Vec<Vec<usize>> {
        let mut t = vec![vec![usize::MAX; k]; self.nodes.len()];
        for &(a, i, b) in &self.edges {
            t[a][i] = b;
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitLimits {
    pub nodes: usize,
    pub digit_budget: u64,
}

impl OrbitLimits {
    pub fn nodes(n: usize) -> Self {
        OrbitLimits { nodes: n, digit_budget: DEFAULT_DIGIT_BUDGET }
    }
}

pub fn forward_orbit(sys: &dyn Dynamics, x: &ProjPoint, node_budget: usize) -> Result<OrbitReport, OrbitError> {
    explore(sys, x, OrbitLimits::nodes(node_budget), &|_| false)
}

pub fn forward_orbit_with(sys: &dyn Dynamics, x: &ProjPoint, limits: OrbitLimits) -> Result<OrbitReport, OrbitError> {
    explore(sys, x, limits, &|_| false)
}

/// BFS closure; stops with `BudgetExceeded` when the node or digit budget
/// is hit or when `give_up` flags a node (used for Northcott-type
/// shortcuts by the height engine).
pub(crate) fn explore(
    sys: &dyn Dynamics,
    x: &ProjPoint,
    limits: OrbitLimits,
    give_up: &(dyn Fn(&ProjPoint) -> bool + Sync),
) -> Result<OrbitReport, OrbitError> {
    let k = sys.num_maps();
    let mut nodes = vec![x.clone()];
    let mut index: HashMap<ProjPoint, usize> = HashMap::from([(x.clone(), 0)]);
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let budget_exceeded = |nodes: Vec<ProjPoint>, edges, n| OrbitReport {
        visit_order: (0..n).collect(),
        nodes,
        edges,
        status: OrbitStatus::BudgetExceeded,
    };
    if give_up(x) || x.max_coordinate_bits() as u64 > limits.digit_budget {
        return Ok(budget_exceeded(nodes, edges, 1));
    }
    while !frontier.is_empty() {
        let images: Vec<Result<Vec<ProjPoint>, OrbitError>> = frontier
            .par_iter()
            .map(|&n| {
                (0..k)
                    .map(|i| {
                        sys.evaluate(i, &nodes[n])
                            .map_err(|source| OrbitError { node: nodes[n].to_string(), source })
                    })
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for (&from, imgs) in frontier.iter().zip(images) {
            for (i, y) in imgs?.into_iter().enumerate() {
                let to = match index.get(&y) {
                    Some(&t) => t,
                    None => {
                        if nodes.len() >= limits.nodes
                            || y.max_coordinate_bits() as u64 > limits.digit_budget
                            || give_up(&y)
                        {
                            let n = nodes.len();
                            return Ok(budget_exceeded(nodes, edges, n));
                        }
                        let t = nodes.len();
                        index.insert(y.clone(), t);
                        nodes.push(y);
                        next.push(t);
                        t
                    }
                };
                edges.push((from, i, to));
            }
        }
        frontier = next;
    }
    let n = nodes.len();
    Ok(OrbitReport { nodes, edges, status: OrbitStatus::Closed, visit_order: (0..n).collect() })
}

/// Tarjan's algorithm (iterative); returns the component id of every node,
/// with components numbered in reverse topological order (sinks first).
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Periodicity {
    Periodic,
    NotPeriodic,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityReport {
    pub verdict: Periodicity,
    pub orbit: OrbitReport,
    /// A proper sub-orbit closed under all maps, when not periodic.
    pub witness: Option<Vec<ProjPoint>>,
}

pub fn is_f_periodic(sys: &dyn Dynamics, x: &ProjPoint, node_budget: usize) -> Result<PeriodicityReport, OrbitError> {
    let orbit = forward_orbit(sys, x, node_budget)?;
    if orbit.status == OrbitStatus::BudgetExceeded {
        return Ok(PeriodicityReport { verdict: Periodicity::BudgetExceeded, orbit, witness: None });
    }
    let adj = orbit.adjacency();
    let comp = strongly_connected_components(&adj);
    if comp.iter().all(|&c| c == comp[0]) {
        return Ok(PeriodicityReport { verdict: Periodicity::Periodic, orbit, witness: None });
    }
    // a sink component other than the one containing x
    let mut is_sink = vec![true; comp.iter().max().unwrap() + 1];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            if comp[v] != comp[w] {
                is_sink[comp[v]] = false;
            }
        }
    }
    let sink = (0..is_sink.len()).find(|&c| is_sink[c] && c != comp[0]).expect("a proper sink exists");
    let mut witness: Vec<ProjPoint> =
        orbit.nodes.iter().zip(&comp).filter(|(_, &c)| c == sink).map(|(p, _)| p.clone()).collect();
    witness.sort_by(canonical_order);
    Ok(PeriodicityReport { verdict: Periodicity::NotPeriodic, orbit, witness: Some(witness) })
}

/// Order used to pick orbit representatives: by size, then structurally.
pub fn canonical_order(a: &ProjPoint, b: &ProjPoint) -> std::cmp::Ordering {
    a.bit_size().cmp(&b.bit_size()).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub representative: ProjPoint,
    pub nodes: Vec<ProjPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSearch {
    pub orbits: Vec<PeriodicOrbit>,
    pub points_checked: usize,
    /// Points where some composite was undefined.
    pub skipped: usize,
    pub undecided: usize,
}

/// All F-periodic orbits containing a point of naive height ≤ `bound`.
///
/// With an ample L and a certified constant C, a node of height above
/// C/(d−k) has ĥ > 0 and proves the orbit infinite; such points are
/// classified without exhausting the node budget.
pub fn find_periodic_points(sys: &dyn Dynamics, bound: f64, node_budget: usize) -> PeriodicSearch {
    let candidates: Vec<ProjPoint> =
        enumerate_product_bounded(sys.space().dims(), bound).into_iter().filter(|p| sys.contains(p)).collect();
    let cutoff = if sys.is_ample() {
        let disc = crate::canonical::compute_discrepancy_bound(sys);
        disc.certified.then(|| disc.c / (sys.degree() - sys.num_maps() as f64) + 1e-9)
    } else {
        None
    };
    let verdicts: Vec<Result<PeriodicityReport, OrbitError>> = candidates
        .par_iter()
        .map(|p| match cutoff {
            None => is_f_periodic(sys, p, node_budget),
            Some(c) => {
                let escaped = AtomicBool::new(false);
                let give_up = |y: &ProjPoint| {
                    let out = sys.height(y) > c;
                    if out {
                        escaped.store(true, AtomicOrdering::Relaxed);
                    }
                    out
                };
                let orbit = explore(sys, p, OrbitLimits::nodes(node_budget), &give_up)?;
                if escaped.load(AtomicOrdering::Relaxed) {
                    Ok(PeriodicityReport { verdict: Periodicity::NotPeriodic, orbit, witness: None })
                } else {
                    is_f_periodic(sys, p, node_budget)
                }
            }
        })
        .collect();
    let mut found: std::collections::BTreeMap<ProjPoint, Vec<ProjPoint>> = Default::default();
    let (mut skipped, mut undecided) = (0, 0);
    for v in verdicts {
        match v {
            Err(_) => skipped += 1,
            Ok(r) => match r.verdict {
                Periodicity::BudgetExceeded => undecided += 1,
                Periodicity::NotPeriodic => {}
                Periodicity::Periodic => {
                    let mut nodes = r.orbit.nodes;
                    nodes.sort_by(canonical_order);
                    found.entry(nodes[0].clone()).or_insert(nodes);
                }
            },
        }
    }
    let mut orbits: Vec<PeriodicOrbit> =
        found.into_iter().map(|(representative, nodes)| PeriodicOrbit { representative, nodes }).collect();
    orbits.sort_by(|a, b| canonical_order(&a.representative, &b.representative));
    PeriodicSearch { orbits, points_checked: candidates.len(), skipped, undecided }
}

/// Square matrix of nonnegative integers whose columns all sum to k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionMatrix {
    a: Vec<Vec<u64>>,
    k: u64,
}

impl TransitionMatrix {
    pub fn new(a: Vec<Vec<u64>>) -> Result<Self, String> {
        let n = a.len();
        if n == 0 || a.iter().any(|r| r.len() != n) {
            return Err("transition matrix must be square and nonempty".into());
        }
        let k: u64 = a.iter().map(|r| r[0]).sum();
        for j in 0..n {
            let s: u64 = a.iter().map(|r| r[j]).sum();
            if s != k {
                return Err(format!("column {j} sums to {s}, expected {k}"));
            }
        }
        if k == 0 {
            return Err("column sums must be positive".into());
        }
        Ok(TransitionMatrix { a, k })
    }

    /// a_{ij} = #{maps sending node j to node i}.
    pub fn from_orbit(orbit: &OrbitReport) -> Result<Self, String> {
        if orbit.status != OrbitStatus::Closed {
            return Err("orbit is not closed".into());
        }
        let n = orbit.nodes.len();
        let mut a = vec![vec![0u64; n]; n];
        for &(j, _, i) in &orbit.edges {
            a[i][j] += 1;
        }
        TransitionMatrix::new(a)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn entries(&self) -> &[Vec<u64>] {
        &self.a
    }

    pub fn apply(&self, c: &[Rational]) -> Vec<Rational> {
        self.a
            .iter()
            .map(|row| row.iter().zip(c).map(|(&a, x)| Rational::from(a) * x).sum())
            .collect()
    }
}

/// Nonnegative c with A c = k c and Σ c = 1.
///
/// Follows the classical route first: put c_n = 1 and solve the remaining
/// (n−1)×(n−1) system. When that system is singular or its solution has a
/// negative entry, the eigenspace is spanned by the stationary vectors of
/// the closed classes of the chain; the uniform average of those is
/// returned.
pub fn perron_vector(m: &TransitionMatrix) -> Vec<Rational> {
    let n = m.n();
    let k = Rational::from(m.k);
    let normalize = |mut c: Vec<Rational>| {
        let s: Rational = c.iter().sum();
        for x in c.iter_mut() {
            *x /= &s;
        }
        c
    };
    if n == 1 {
        return vec![Rational::from(1)];
    }
    // (A − kI) restricted to the first n−1 rows and columns
    let b: Vec<Vec<Rational>> = (0..n - 1)
        .map(|i| {
            (0..n - 1)
                .map(|j| {
                    let mut v = Rational::from(m.a[i][j]);
                    if i == j {
                        v -= &k;
                    }
                    v
                })
                .collect()
        })
        .collect();
    let rhs: Vec<Rational> = (0..n - 1).map(|i| Rational::from(m.a[i][n - 1]) * -1).collect();
    if let Some(mut c) = solve(&b, &rhs).filter(|_| rank(&b) == n - 1) {
        c.push(Rational::from(1));
        if c.iter().all(|x| *x >= 0) {
            return normalize(c);
        }
    }
    let adj: Vec<Vec<usize>> =
        (0..n).map(|j| (0..n).filter(|&i| i != j && m.a[i][j] > 0).collect()).collect();
    let comp = strongly_connected_components(&adj);
    let ncomp = comp.iter().max().unwrap() + 1;
    let mut closed = vec![true; ncomp];
    for (j, outs) in adj.iter().enumerate() {
        for &i in outs {
            if comp[i] != comp[j] {
                closed[comp[j]] = false;
            }
        }
    }
    let mut total = vec![Rational::new(); n];
    for c in (0..ncomp).filter(|&c| closed[c]) {
        let members: Vec<usize> = (0..n).filter(|&i| comp[i] == c).collect();
        let sub: Vec<Vec<Rational>> = members
            .iter()
            .map(|&i| {
                members
                    .iter()
                    .map(|&j| {
                        let mut v = Rational::from(m.a[i][j]);
                        if i == j {
                            v -= &k;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        // an irreducible class has a one-dimensional positive kernel
        let basis = nullspace(&sub);
        let mut v = basis.into_iter().next().expect("closed class has a stationary vector");
        if v.iter().any(|x| *x < 0) {
            for x in v.iter_mut() {
                *x *= -1;
            }
        }
        let v = normalize(v);
        for (&i, x) in members.iter().zip(v) {
            total[i] += x;
        }
    }
    normalize(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginBucket {
    pub height_lo: f64,
    pub height_hi: f64,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenonReport {
    pub points: usize,
    pub skipped: usize,
    pub global_min: f64,
    pub global_mean: f64,
    pub buckets: Vec<MarginBucket>,
    /// min over the highest nonempty bucket ≥ global min
    pub no_downward_trend: bool,
}

/// h(φx) + h(φ⁻¹x) − (5/2) h(x); `None` off the affine chart.
pub fn henon_margin(sys: &HenonSystem, x: &ProjPoint) -> Option<f64> {
    let (u, v) = HenonSystem::affine_coordinates(x)?;
    let (fu, fv) = sys.forward(&u, &v);
    let (bu, bv) = sys.backward(&u, &v);
    let h = |a: &Rational, b: &Rational| naive_height(&HenonSystem::affine_point(a, b));
    Some(h(&fu, &fv) + h(&bu, &bv) - 2.5 * naive_height(x))
}

/// Margins over `points`, bucketed into `buckets` equal slices of h(x).
pub fn henon_inequality_check(sys: &HenonSystem, points: &[ProjPoint], buckets: usize) -> HenonReport {
    let data: Vec<Option<(f64, f64)>> =
        points.par_iter().map(|p| henon_margin(sys, p).map(|m| (naive_height(p), m))).collect();
    let skipped = data.iter().filter(|d| d.is_none()).count();
    let data: Vec<(f64, f64)> = data.into_iter().flatten().collect();
    let global_min = data.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
    let global_mean = data.iter().map(|d| d.1).sum::<f64>() / data.len().max(1) as f64;
    let hmax = data.iter().map(|d| d.0).fold(0.0, f64::max);
    let nb = buckets.max(1);
    let width = if hmax > 0.0 { hmax / nb as f64 } else { 1.0 };
    let mut out: Vec<MarginBucket> = (0..nb)
        .map(|b| MarginBucket {
            height_lo: b as f64 * width,
            height_hi: (b + 1) as f64 * width,
            count: 0,
            min: f64::INFINITY,
            mean: 0.0,
        })
        .collect();
    for &(h, m) in &data {
        let b = ((h / width) as usize).min(nb - 1);
        out[b].count += 1;
        out[b].min = out[b].min.min(m);
        out[b].mean += m;
    }
    for b in out.iter_mut() {
        if b.count > 0 {
            b.mean /= b.count as f64;
        }
    }
    let top = out.iter().rev().find(|b| b.count > 0).map(|b| b.min);
    HenonReport {
        points: points.len(),
        skipped,
        global_min,
        global_mean,
        no_downward_trend: top.is_some_and(|t| t >= global_min),
        buckets: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{K3TrilinearSystem, PolyMap, PolyMapSystem};

    fn square() -> PolyMapSystem {
        PolyMapSystem::new(vec![PolyMap::power_map(1, 2)]).unwrap()
    }

    fn p(c: &[i64]) -> ProjPoint {
        ProjPoint::from_i64(&[c]).unwrap()
    }

    #[test]
    fn squaring_orbits() {
        let s = square();
        let r = forward_orbit(&s, &p(&[1, 1]), 10).unwrap();
        assert_eq!(r.status, OrbitStatus::Closed);
        assert_eq!(r.nodes.len(), 1);
        assert_eq!(forward_orbit(&s, &p(&[2, 1]), 50).unwrap().status, OrbitStatus::BudgetExceeded);
        let m = is_f_periodic(&s, &p(&[-1, 1]), 10).unwrap();
        assert_eq!(m.verdict, Periodicity::NotPeriodic);
        assert_eq!(m.witness.unwrap(), vec![p(&[1, 1])]);
        assert_eq!(is_f_periodic(&s, &p(&[1, 1]), 10).unwrap().verdict, Periodicity::Periodic);
    }

    #[test]
    fn k3_orbit_is_strongly_connected() {
        let s = K3TrilinearSystem::unit_cube_example();
        let x = ProjPoint::from_i64(&[&[0, 1], &[0, 1], &[0, 1]]).unwrap();
        let r = is_f_periodic(&s, &x, 100).unwrap();
        assert_eq!(r.orbit.nodes.len(), 7);
        assert_eq!(r.verdict, Periodicity::Periodic);
        // brute-force: every node reaches every node
        let adj = r.orbit.adjacency();
        for start in 0..7 {
            let mut seen = vec![false; 7];
            let mut st = vec![start];
            while let Some(v) = st.pop() {
                if !std::mem::replace(&mut seen[v], true) {
                    st.extend(&adj[v]);
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn swap_system_periodic_points() {
        let swap = PolyMap::new(vec![
            crate::poly::Poly::from_i64(2, &[(&[0, 2], 1)]),
            crate::poly::Poly::from_i64(2, &[(&[2, 0], 1)]),
        ])
        .unwrap();
        let s = PolyMapSystem::new(vec![PolyMap::power_map(1, 2), swap]).unwrap();
        let r = find_periodic_points(&s, 0.0, 100);
        let reps: Vec<String> = r.orbits.iter().map(|o| o.representative.to_string()).collect();
        // {0, ∞} is one closed strongly connected orbit; {1} another; −1 maps into {1}
        assert_eq!(reps, vec!["(0:1)", "(1:1)"]);
        assert_eq!(r.orbits[0].nodes.len(), 2);
    }

    #[test]
    fn perron_examples() {
        let c = perron_vector(&TransitionMatrix::new(vec![vec![3, 0], vec![0, 3]]).unwrap());
        assert_eq!(c, vec![Rational::from((1, 2)), Rational::from((1, 2))]);
        let c = perron_vector(&TransitionMatrix::new(vec![vec![0, 2], vec![2, 0]]).unwrap());
        assert_eq!(c, vec![Rational::from((1, 2)), Rational::from((1, 2))]);
        let m = TransitionMatrix::new(vec![vec![2, 0, 1], vec![0, 1, 1], vec![0, 1, 0]]).unwrap();
        let c = perron_vector(&m);
        let kc: Vec<Rational> = c.iter().map(|x| Rational::from(x * 2)).collect();
        assert_eq!(m.apply(&c), kc);
        assert!(c.iter().all(|x| *x >= 0));
    }

    #[test]
    fn henon_regression() {
        let h = HenonSystem::new(Rational::from(1), Rational::from(0)).unwrap();
        let x = HenonSystem::affine_point(&Rational::from(1), &Rational::from(2));
        let m = henon_margin(&h, &x).unwrap();
        assert!((m - (5f64.ln() - 2.5 * 2f64.ln())).abs() < 1e-12);
        let o = HenonSystem::affine_point(&Rational::new(), &Rational::new());
        assert_eq!(henon_margin(&h, &o).unwrap(), 0.0);
    }
}
