//! Potential theory on ℙ¹(ℂ): the invariant Green potential of a system of
//! rational maps, its Laplacian measure, preimage equidistribution, and the
//! binomial sequence behind the K3 current decomposition.
//!
//! The iterated quantity is the relative potential u = g − ρ, where g is the
//! homogeneous Green function of lifts and ρ(x̃) = ½ ln(|x|² + |y|²) the
//! Fubini–Study reference. u is a bounded function on ℙ¹ and satisfies
//!
//!   u(p) = (1/d) Σ_i [ u(f_i p) + ln‖F_i(x̃)‖ − d_i ln‖x̃‖ ].
//!
//! It is sampled on two square grids over [−1.5, 1.5]², one in z and one in
//! t = 1/z. Chart values are blended across 0.8 ≤ |z| ≤ 1.25.

use crate::systems::PolyMapSystem;
use num_complex::Complex64;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const EXTENT: f64 = 1.5;
const BLEND_LO: f64 = 0.8;
const BLEND_HI: f64 = 1.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("grid resolution {0} is below the minimum of 64")]
    Resolution(usize),
    #[error("measures are implemented on ℙ¹ only")]
    NotP1,
    #[error("degree mismatch: Σ deg f_i = {sum}, declared d = {d}")]
    Degree { sum: u32, d: u32 },
    #[error("total mass {0} deviates from 1 by more than 5%; refine the grid")]
    GridTooCoarse(f64),
    #[error("base point lies in the exceptional set")]
    Exceptional,
    #[error("root finder failed for {failed} of {total} roots")]
    RootFinder { failed: usize, total: usize },
    #[error("io: {0}")]
    Io(String),
}

/// A point of ℙ¹(ℂ) as a homogeneous pair scaled to max(|x|, |y|) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpherePoint {
    pub x: Complex64,
    pub y: Complex64,
}

impl SpherePoint {
    pub fn new(x: Complex64, y: Complex64) -> Self {
        let n = x.norm().max(y.norm());
        SpherePoint { x: x / n, y: y / n }
    }

    pub fn affine(z: Complex64) -> Self {
        Self::new(z, Complex64::new(1.0, 0.0))
    }

    pub fn infinity() -> Self {
        SpherePoint { x: Complex64::new(1.0, 0.0), y: Complex64::new(0.0, 0.0) }
    }

    /// z = x/y (infinite at ∞).
    pub fn z(&self) -> Complex64 {
        self.x / self.y
    }

    /// Point on the unit sphere in ℝ³ (stereographic).
    pub fn to_sphere(&self) -> [f64; 3] {
        let (a, b) = (self.x.norm_sqr(), self.y.norm_sqr());
        let w = self.x * self.y.conj();
        let s = a + b;
        [2.0 * w.re / s, 2.0 * w.im / s, (a - b) / s]
    }

    /// Chordal distance ‖p − q‖ in ℝ³.
    pub fn chordal(&self, other: &SpherePoint) -> f64 {
        let (p, q) = (self.to_sphere(), other.to_sphere());
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }
}

/// Homogeneous rational map (P : Q) of ℙ¹; coefficient j multiplies x^j y^{deg−j}.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMap {
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl ComplexMap {
    pub fn degree(&self) -> u32 {
        (self.p.len() - 1) as u32
    }

    /// z ↦ c_0 + c_1 z + … + c_m z^m.
    pub fn polynomial(coeffs: &[Complex64]) -> Self {
        let m = coeffs.len() - 1;
        let mut q = vec![Complex64::new(0.0, 0.0); m + 1];
        q[0] = Complex64::new(1.0, 0.0);
        ComplexMap { p: coeffs.to_vec(), q }
    }

    fn eval_form(c: &[Complex64], x: Complex64, y: Complex64) -> Complex64 {
        // Σ c_j x^j y^{m−j} by Horner in x/y or y/x, whichever is smaller
        let m = c.len() - 1;
        if x.norm() <= y.norm() {
            let t = x / y;
            let mut acc = Complex64::new(0.0, 0.0);
            for cj in c.iter().rev() {
                acc = acc * t + cj;
            }
            acc * y.powu(m as u32)
        } else {
            let t = y / x;
            let mut acc = Complex64::new(0.0, 0.0);
            for cj in c.iter() {
                acc = acc * t + cj;
            }
            acc * x.powu(m as u32)
        }
    }

    pub fn apply(&self, x: Complex64, y: Complex64) -> (Complex64, Complex64) {
        (Self::eval_form(&self.p, x, y), Self::eval_form(&self.q, x, y))
    }
}

/// Maps of ℙ¹ with d = Σ deg f_i.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSystem {
    pub maps: Vec<ComplexMap>,
    pub d: u32,
}

impl ComplexSystem {
    pub fn new(maps: Vec<ComplexMap>, d: u32) -> Result<Self, MeasureError> {
        let sum: u32 = maps.iter().map(ComplexMap::degree).sum();
        if sum != d {
            return Err(MeasureError::Degree { sum, d });
        }
        Ok(ComplexSystem { maps, d })
    }

    pub fn from_poly_system(sys: &PolyMapSystem) -> Result<Self, MeasureError> {
        if sys.dim() != 1 {
            return Err(MeasureError::NotP1);
        }
        let maps = sys
            .maps()
            .iter()
            .map(|m| {
                let deg = m.degree() as usize;
                let coeffs = |k: usize| {
                    let mut c = vec![Complex64::new(0.0, 0.0); deg + 1];
                    for (e, v) in m.polys()[k].terms() {
                        c[e[0] as usize] = Complex64::new(v.to_f64(), 0.0);
                    }
                    c
                };
                ComplexMap { p: coeffs(0), q: coeffs(1) }
            })
            .collect();
        ComplexSystem::new(maps, sys.total_degree())
    }

    pub fn k(&self) -> usize {
        self.maps.len()
    }
}

fn fs_log_norm(x: Complex64, y: Complex64) -> f64 {
    0.5 * (x.norm_sqr() + y.norm_sqr()).ln()
}

/// Samples of u on both charts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPotential {
    pub resolution: usize,
    pub extent: f64,
    /// relative potential u, row-major (j over imaginary, i over real)
    pub charts: [Vec<f64>; 2],
    pub iterations: usize,
    /// sup |u_{n+1} − u_n| per iteration
    pub contraction_log: Vec<f64>,
    /// max |u_chart0(z) − u_chart1(1/z)| over the blend annulus
    pub overlap_disagreement: f64,
    /// the contraction rate exceeded (k/d)(1 + slack) at some step
    pub contraction_violated: bool,
    pub k: usize,
    pub d: u32,
}

impl GridPotential {
    pub fn zero(resolution: usize, k: usize, d: u32) -> Self {
        GridPotential {
            resolution,
            extent: EXTENT,
            charts: [vec![0.0; resolution * resolution], vec![0.0; resolution * resolution]],
            iterations: 0,
            contraction_log: Vec::new(),
            overlap_disagreement: 0.0,
            contraction_violated: false,
            k,
            d,
        }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.extent / (self.resolution - 1) as f64
    }

    pub fn coordinate(&self, i: usize, j: usize) -> Complex64 {
        let h = self.step();
        Complex64::new(-self.extent + i as f64 * h, -self.extent + j as f64 * h)
    }

    /// The point of ℙ¹ at grid node (i, j) of a chart.
    pub fn node_point(&self, chart: usize, i: usize, j: usize) -> SpherePoint {
        let s = self.coordinate(i, j);
        let one = Complex64::new(1.0, 0.0);
        if chart == 0 {
            SpherePoint::new(s, one)
        } else {
            SpherePoint::new(one, s)
        }
    }

    fn interpolate(&self, chart: usize, s: Complex64) -> f64 {
        let h = self.step();
        let n = self.resolution;
        let fx = ((s.re + self.extent) / h).clamp(0.0, (n - 1) as f64);
        let fy = ((s.im + self.extent) / h).clamp(0.0, (n - 1) as f64);
        let i = (fx.floor() as usize).min(n - 2);
        let j = (fy.floor() as usize).min(n - 2);
        let (a, b) = (fx - i as f64, fy - j as f64);
        let g = &self.charts[chart];
        let v = |i: usize, j: usize| g[j * n + i];
        (1.0 - a) * (1.0 - b) * v(i, j) + a * (1.0 - b) * v(i + 1, j) + (1.0 - a) * b * v(i, j + 1) + a * b * v(i + 1, j + 1)
    }

    /// u at a point of ℙ¹, blending the charts across the overlap annulus.
    pub fn relative_at(&self, p: &SpherePoint) -> f64 {
        if p.x.norm() <= p.y.norm() {
            let z = p.x / p.y;
            let r = z.norm();
            if r <= BLEND_LO {
                return self.interpolate(0, z);
            }
            let w0 = ((BLEND_HI.ln() - r.ln()) / (BLEND_HI.ln() - BLEND_LO.ln())).clamp(0.0, 1.0);
            w0 * self.interpolate(0, z) + (1.0 - w0) * self.interpolate(1, z.inv())
        } else {
            let t = p.y / p.x;
            let r = t.norm();
            if r <= BLEND_LO {
                return self.interpolate(1, t);
            }
            let w1 = ((BLEND_HI.ln() - r.ln()) / (BLEND_HI.ln() - BLEND_LO.ln())).clamp(0.0, 1.0);
            w1 * self.interpolate(1, t) + (1.0 - w1) * self.interpolate(0, t.inv())
        }
    }

    /// Green potential in the chart coordinate: u + ½ ln(1 + |s|²).
    pub fn green(&self, chart: usize, i: usize, j: usize) -> f64 {
        let s = self.coordinate(i, j);
        self.charts[chart][j * self.resolution + i] + 0.5 * (1.0 + s.norm_sqr()).ln()
    }

    fn measure_overlap(&mut self) {
        let n = self.resolution;
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let z = self.coordinate(i, j);
                let r = z.norm();
                if (BLEND_LO..=BLEND_HI).contains(&r) {
                    let a = self.charts[0][j * n + i];
                    let b = self.interpolate(1, z.inv());
                    worst = worst.max((a - b).abs());
                }
            }
        }
        self.overlap_disagreement = worst;
    }
}

/// Relative slack allowed on the contraction rate for interpolation.
pub const CONTRACTION_SLACK: f64 = 0.05;

/// n steps of u ↦ (1/d) Σ_i [u∘f_i + ln‖F_i‖ − d_i ln‖·‖].
pub fn iterate_potential(
    sys: &ComplexSystem,
    init: Option<GridPotential>,
    resolution: usize,
    n: usize,
) -> Result<GridPotential, MeasureError> {
    if resolution < 64 {
        return Err(MeasureError::Resolution(resolution));
    }
    let mut cur = match init {
        Some(g) if g.resolution == resolution => g,
        Some(g) => return Err(MeasureError::Resolution(g.resolution)),
        None => GridPotential::zero(resolution, sys.k(), sys.d),
    };
    cur.k = sys.k();
    cur.d = sys.d;
    let d = sys.d as f64;
    let rate = sys.k() as f64 / d;
    let resolution_sq = resolution * resolution;
    for _ in 0..n {
        let next: [Vec<f64>; 2] = [0, 1].map(|chart| {
            (0..resolution_sq)
                .into_par_iter()
                .map(|idx| {
                    let p = cur.node_point(chart, idx % resolution, idx / resolution);
                    let base = fs_log_norm(p.x, p.y);
                    sys.maps
                        .iter()
                        .map(|m| {
                            let (x, y) = m.apply(p.x, p.y);
                            cur.relative_at(&SpherePoint::new(x, y)) + fs_log_norm(x, y) - m.degree() as f64 * base
                        })
                        .sum::<f64>()
                        / d
                })
                .collect()
        });
        let diff = next
            .iter()
            .zip(&cur.charts)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max);
        if let Some(&prev) = cur.contraction_log.last() {
            if prev > 1e-9 && diff > prev * rate * (1.0 + CONTRACTION_SLACK) + 1e-12 && cur.contraction_log.len() >= 3 {
                cur.contraction_violated = true;
            }
        }
        cur.contraction_log.push(diff);
        cur.charts = next;
        cur.iterations += 1;
    }
    cur.measure_overlap();
    Ok(cur)
}

/// Applies the pull-back `depth` more times pointwise and interpolates the
/// grid only at the depth-`depth` images, so interpolation error is scaled
/// by (k/d)^depth. Matters near singular points of the Green function
/// (endpoints of an interval Julia set and their preimages). Costs k^depth
/// evaluations per node.
pub fn sharpen_potential(sys: &ComplexSystem, p: &GridPotential, depth: usize) -> GridPotential {
    fn pull(sys: &ComplexSystem, g: &GridPotential, q: &SpherePoint, level: usize) -> f64 {
        if level == 0 {
            return g.relative_at(q);
        }
        let base = fs_log_norm(q.x, q.y);
        sys.maps
            .iter()
            .map(|m| {
                let (x, y) = m.apply(q.x, q.y);
                pull(sys, g, &SpherePoint::new(x, y), level - 1) + fs_log_norm(x, y) - m.degree() as f64 * base
            })
            .sum::<f64>()
            / sys.d as f64
    }
    let n = p.resolution;
    let mut out = p.clone();
    out.charts = [0, 1].map(|chart| {
        (0..n * n).into_par_iter().map(|idx| pull(sys, p, &p.node_point(chart, idx % n, idx / n), depth)).collect()
    });
    out.measure_overlap();
    out
}

/// Largest depth with k^depth ≤ 256, capped at 12.
pub fn default_sharpen_depth(k: usize) -> usize {
    if k <= 1 {
        return 12;
    }
    let mut depth = 0;
    while k.pow(depth as u32 + 1) <= 256 && depth < 12 {
        depth += 1;
    }
    depth
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(SpherePoint, f64)>,
}

impl DiscreteMeasure {
    /// Equal weights on the given points.
    pub fn uniform(points: Vec<SpherePoint>) -> Self {
        let w = 1.0 / points.len() as f64;
        DiscreteMeasure { atoms: points.into_iter().map(|p| (p, w)).collect() }
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn integrate(&self, f: impl Fn(&SpherePoint) -> f64 + Sync) -> f64 {
        self.atoms.par_iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Normalized arc-length measure on |z| = 1, as n equally spaced atoms.
    pub fn unit_circle(n: usize) -> Self {
        Self::uniform(
            (0..n)
                .map(|j| SpherePoint::affine(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64)))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureGrid {
    pub resolution: usize,
    /// mass per node (after clipping and renormalization), per chart
    pub mass: [Vec<f64>; 2],
    pub total_before_normalization: f64,
    pub clipped_negative: f64,
    pub measure: DiscreteMeasure,
}

/// Chart weights of a smooth partition of unity: 1 for |s| ≤ 1/1.25, 0 for
/// |s| ≥ 1.25, quintic in ln|s| between, with w(s) + w(1/s) = 1. A sharp
/// seam would add a lattice-counting error of order h.
pub fn chart_weight(s: Complex64) -> f64 {
    let x = ((s.norm().ln() / BLEND_HI.ln() + 1.0) / 2.0).clamp(0.0, 1.0);
    1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// dd^c of the Green potential by the 5-point Laplacian, each chart
/// weighted by [`chart_weight`].
pub fn measure_from_potential(p: &GridPotential) -> Result<MeasureGrid, MeasureError> {
    let n = p.resolution;
    let mut mass = [vec![0.0; n * n], vec![0.0; n * n]];
    let mut total = 0.0;
    let mut clipped = 0.0;
    let mut atoms = Vec::new();
    for (chart, chart_mass) in mass.iter_mut().enumerate() {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let w = chart_weight(p.coordinate(i, j));
                if w == 0.0 {
                    continue;
                }
                let lap = p.green(chart, i + 1, j) + p.green(chart, i - 1, j) + p.green(chart, i, j + 1)
                    + p.green(chart, i, j - 1)
                    - 4.0 * p.green(chart, i, j);
                let m = w * lap / (2.0 * std::f64::consts::PI);
                total += m;
                if m < 0.0 {
                    clipped -= m;
                    continue;
                }
                chart_mass[j * n + i] = m;
                atoms.push((p.node_point(chart, i, j), m));
            }
        }
    }
    if (total - 1.0).abs() > 0.05 {
        return Err(MeasureError::GridTooCoarse(total));
    }
    let kept: f64 = atoms.iter().map(|a| a.1).sum();
    for a in atoms.iter_mut() {
        a.1 /= kept;
    }
    for m in mass.iter_mut() {
        for v in m.iter_mut() {
            *v /= kept;
        }
    }
    Ok(MeasureGrid {
        resolution: n,
        mass,
        total_before_normalization: total,
        clipped_negative: clipped,
        measure: DiscreteMeasure { atoms },
    })
}

/// Roots of c_0 + c_1 z + … + c_m z^m (Aberth iteration, then Newton
/// polishing). Returns the roots and the number that failed to converge.
pub fn polynomial_roots(c: &[Complex64]) -> (Vec<Complex64>, usize) {
    let m = c.len() - 1;
    if m == 0 {
        return (Vec::new(), 0);
    }
    let lead = c[m];
    let monic: Vec<Complex64> = c.iter().map(|v| v / lead).collect();
    let eval = |z: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for cj in monic.iter().rev() {
            dp = dp * z + p;
            p = p * z + cj;
        }
        (p, dp)
    };
    let radius = 1.0 + monic[..m].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(radius * 0.5 + 0.1, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / m as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for j in 0..m {
            let (p, dp) = eval(z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..m).filter(|&l| l != j).map(|l| (z[j] - z[l]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[j] -= w;
                moved = moved.max(w.norm() / (1.0 + z[j].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    let scale: f64 = monic.iter().map(|v| v.norm()).sum();
    let mut failed = 0;
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*r);
            let step = p / dp;
            if step.is_finite() && dp.norm() > 0.0 {
                *r -= step;
            }
        }
        let (p, _) = eval(*r);
        if !(p.norm() <= 1e-8 * scale * (1.0 + r.norm()).powi(m as i32)) {
            failed += 1;
        }
    }
    (z, failed)
}

/// All solutions of f(p) = w for one map, with multiplicity (deg f points).
pub fn preimages(f: &ComplexMap, w: &SpherePoint) -> (Vec<SpherePoint>, usize) {
    // P(x, y)·w_y − Q(x, y)·w_x = 0 in the chart y = 1, roots at ∞ for a
    // vanishing leading coefficient
    let coeffs: Vec<Complex64> = f.p.iter().zip(&f.q).map(|(p, q)| p * w.y - q * w.x).collect();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut top = coeffs.len() - 1;
    let mut at_infinity = 0;
    while top > 0 && coeffs[top].norm() <= 1e-14 * scale {
        top -= 1;
        at_infinity += 1;
    }
    let (roots, failed) = polynomial_roots(&coeffs[..=top]);
    let mut out: Vec<SpherePoint> = roots.into_iter().map(SpherePoint::affine).collect();
    out.extend(std::iter::repeat(SpherePoint::infinity()).take(at_infinity));
    (out, failed)
}

/// The depth-n backward orbit multiset: d^n points.
pub fn preimage_tree(sys: &ComplexSystem, a: &SpherePoint, depth: usize) -> Result<Vec<SpherePoint>, MeasureError> {
    let mut level = vec![*a];
    let (mut failed, mut total) = (0usize, 0usize);
    for _ in 0..depth {
        let parts: Vec<(Vec<SpherePoint>, usize)> = level
            .par_iter()
            .map(|w| {
                let mut pts = Vec::new();
                let mut bad = 0;
                for f in &sys.maps {
                    let (p, b) = preimages(f, w);
                    pts.extend(p);
                    bad += b;
                }
                (pts, bad)
            })
            .collect();
        level = Vec::with_capacity(level.len() * sys.d as usize);
        for (p, b) in parts {
            total += p.len();
            failed += b;
            level.extend(p);
        }
    }
    if total > 0 && failed as f64 > 1e-3 * total as f64 {
        return Err(MeasureError::RootFinder { failed, total });
    }
    Ok(level)
}

/// Fixed dictionary of 32 bounded Lipschitz functions on the sphere:
/// 26 tents of chordal radius 0.8 centred at the faces, edges and corners
/// of the cube, and the coordinate monomials X, Y, Z, XY, YZ, ZX.
pub fn test_dictionary() -> Vec<Box<dyn Fn(&SpherePoint) -> f64 + Send + Sync>> {
    let mut centers = Vec::new();
    for a in -1i32..=1 {
        for b in -1i32..=1 {
            for c in -1i32..=1 {
                if (a, b, c) != (0, 0, 0) {
                    let n = ((a * a + b * b + c * c) as f64).sqrt();
                    centers.push([a as f64 / n, b as f64 / n, c as f64 / n]);
                }
            }
        }
    }
    let mut dict: Vec<Box<dyn Fn(&SpherePoint) -> f64 + Send + Sync>> = centers
        .into_iter()
        .map(|c| {
            Box::new(move |p: &SpherePoint| {
                let s = p.to_sphere();
                let dist = ((s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2) + (s[2] - c[2]).powi(2)).sqrt();
                (1.0 - dist / 0.8).max(0.0)
            }) as Box<dyn Fn(&SpherePoint) -> f64 + Send + Sync>
        })
        .collect();
    dict.push(Box::new(|p| p.to_sphere()[0]));
    dict.push(Box::new(|p| p.to_sphere()[1]));
    dict.push(Box::new(|p| p.to_sphere()[2]));
    dict.push(Box::new(|p| {
        let s = p.to_sphere();
        s[0] * s[1]
    }));
    dict.push(Box::new(|p| {
        let s = p.to_sphere();
        s[1] * s[2]
    }));
    dict.push(Box::new(|p| {
        let s = p.to_sphere();
        s[2] * s[0]
    }));
    dict
}

/// max over the dictionary of |∫ f dμ_a − ∫ f dμ|.
pub fn discrepancy(empirical: &DiscreteMeasure, target: &DiscreteMeasure) -> f64 {
    test_dictionary()
        .iter()
        .map(|f| (empirical.integrate(f) - target.integrate(f)).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidistributionResult {
    pub depth: usize,
    pub points: usize,
    pub discrepancy: f64,
}

/// Discrepancy of the uniform measure on the depth-n preimage multiset.
pub fn equidistribution_experiment(
    sys: &ComplexSystem,
    a: &SpherePoint,
    depth: usize,
    target: &DiscreteMeasure,
    exceptional: &[SpherePoint],
) -> Result<EquidistributionResult, MeasureError> {
    if exceptional.iter().any(|e| e.chordal(a) < 1e-9) {
        return Err(MeasureError::Exceptional);
    }
    let pts = preimage_tree(sys, a, depth)?;
    let n = pts.len();
    let emp = DiscreteMeasure::uniform(pts);
    Ok(EquidistributionResult { depth, points: n, discrepancy: discrepancy(&emp, target) })
}

/// The sequence s_n in the binomial claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceSpec {
    Constant(f64),
    /// 1/(n+1)
    Harmonic,
    /// 1 + (−1)^n / 2^n
    AlternatingGeometric,
    Explicit { values: Vec<f64>, limit: f64 },
}

impl SequenceSpec {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            SequenceSpec::Constant(c) => *c,
            SequenceSpec::Harmonic => 1.0 / (n as f64 + 1.0),
            SequenceSpec::AlternatingGeometric => 1.0 + if n % 2 == 0 { 1.0 } else { -1.0 } / 2f64.powi(n as i32),
            SequenceSpec::Explicit { values, limit } => values.get(n).copied().unwrap_or(*limit),
        }
    }

    fn exact(&self, n: usize) -> Rational {
        match self {
            SequenceSpec::Constant(c) => Rational::from_f64(*c).expect("finite"),
            SequenceSpec::Harmonic => Rational::from((1, n as u64 + 1)),
            SequenceSpec::AlternatingGeometric => {
                let t = Rational::from((1, Integer::from(Integer::u_pow_u(2, n as u32))));
                if n % 2 == 0 {
                    1 + t
                } else {
                    1 - t
                }
            }
            SequenceSpec::Explicit { .. } => Rational::from_f64(self.value(n)).expect("finite"),
        }
    }

    pub fn limit(&self) -> f64 {
        match self {
            SequenceSpec::Constant(c) => *c,
            SequenceSpec::Harmonic => 0.0,
            SequenceSpec::AlternatingGeometric => 1.0,
            SequenceSpec::Explicit { limit, .. } => *limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimRow {
    pub n: usize,
    pub t_2n: f64,
    pub residual: f64,
}

/// λ = 7 + 4√3.
pub fn default_lambda() -> f64 {
    let r = 2.0 + 3f64.sqrt();
    r * r
}

/// The table for λ = 7 + 4√3, computed exactly in ℚ(√3); residuals keep
/// full relative precision even far below 1e−16.
pub fn binomial_current_claim_default(s: &SequenceSpec, n_max: usize) -> Vec<ClaimRow> {
    let lambda = QuadSurd::new(7, 4);
    let mut powers = vec![QuadSurd::new(1, 0)];
    for j in 1..=n_max {
        powers.push(powers[j - 1].mul(&lambda));
    }
    let limit = Rational::from_f64(s.limit()).expect("finite");
    (0..=n_max)
        .map(|n| {
            let mut binom = Integer::from(1);
            let mut sum = QuadSurd::new(0, 0);
            for i in 0..=n {
                if i > 0 {
                    binom = binom * (2 * n - i + 1) as u64 / i as u64;
                }
                let c = Rational::from(&binom) * s.exact(n - i);
                sum = sum.add(&powers[n - i].scale(&c));
            }
            let t = sum.scale(&Rational::from((1, Integer::from(Integer::u_pow_u(16, n as u32)))));
            let residual = QuadSurd { a: Rational::from(&t.a - &limit), b: t.b.clone() }.to_f64().abs();
            ClaimRow { n, t_2n: t.to_f64(), residual }
        })
        .collect()
}

/// t_{2n} = 4^{−2n} Σ_{i=0}^{n} C(2n, i) λ^{n−i} s_{n−i} for n ≤ n_max, in
/// floating point for arbitrary λ > 1.
pub fn binomial_current_claim(lambda: f64, s: &SequenceSpec, n_max: usize) -> Vec<ClaimRow> {
    let root = lambda.sqrt();
    (0..=n_max)
        .map(|n| {
            let mut binom = Integer::from(1);
            let mut sum = 0.0;
            for i in 0..=n {
                if i > 0 {
                    binom = binom * (2 * n - i + 1) as u64 / i as u64;
                }
                // λ^{n−i} 4^{−2n} computed as (√λ/4)^{2(n−i)} 16^{−i}
                let scale = (root / 4.0).powi(2 * (n - i) as i32) * 16f64.powi(-(i as i32));
                sum += binom.to_f64() * scale * s.value(n - i);
            }
            ClaimRow { n, t_2n: sum, residual: (sum - s.limit()).abs() }
        })
        .collect()
}

/// a + b√3 with rational a, b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSurd {
    pub a: Rational,
    pub b: Rational,
}

impl QuadSurd {
    pub fn new(a: impl Into<Rational>, b: impl Into<Rational>) -> Self {
        QuadSurd { a: a.into(), b: b.into() }
    }

    pub fn mul(&self, o: &QuadSurd) -> QuadSurd {
        let a = Rational::from(&self.a * &o.a) + Rational::from(&self.b * &o.b) * 3;
        let b = Rational::from(&self.a * &o.b) + Rational::from(&self.b * &o.a);
        QuadSurd { a, b }
    }

    pub fn add(&self, o: &QuadSurd) -> QuadSurd {
        QuadSurd { a: Rational::from(&self.a + &o.a), b: Rational::from(&self.b + &o.b) }
    }

    pub fn scale(&self, c: &Rational) -> QuadSurd {
        QuadSurd { a: Rational::from(&self.a * c), b: Rational::from(&self.b * c) }
    }

    /// Nearest f64 without cancellation: when a and b√3 have opposite
    /// signs use (a² − 3b²)/(a − b√3).
    pub fn to_f64(&self) -> f64 {
        let r3 = 3f64.sqrt();
        if self.a.cmp0() == self.b.cmp0() || self.a.cmp0().is_eq() || self.b.cmp0().is_eq() {
            return self.a.to_f64() + self.b.to_f64() * r3;
        }
        let norm: Rational = Rational::from(&self.a * &self.a) - Rational::from(&self.b * &self.b) * 3;
        norm.to_f64() / (self.a.to_f64() - self.b.to_f64() * r3)
    }

    /// Integer powers; negative exponents need a unit (norm ±1).
    pub fn pow(&self, e: i64) -> QuadSurd {
        let base = if e < 0 {
            let norm = Rational::from(&self.a * &self.a) - Rational::from(&self.b * &self.b) * 3;
            QuadSurd { a: Rational::from(&self.a / &norm), b: Rational::from(-&self.b) / &norm }
        } else {
            self.clone()
        };
        let mut out = QuadSurd::new(1, 0);
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }
}

/// Checks Σ_{i=0}^{2n} C(2n, i) λ^{n−i} = 16^n exactly with λ = (2+√3)².
pub fn binomial_identity_holds(n: usize) -> bool {
    let lambda = QuadSurd::new(7, 4);
    let mut sum = QuadSurd::new(0, 0);
    let mut binom = Integer::from(1);
    for i in 0..=2 * n {
        if i > 0 {
            binom = binom * (2 * n - i + 1) as u64 / i as u64;
        }
        sum = sum.add(&lambda.pow(n as i64 - i as i64).scale(&Rational::from(&binom)));
    }
    sum == QuadSurd::new(Integer::from(Integer::u_pow_u(16, n as u32)), 0)
}

/// CSV of a potential: chart, i, j, re, im, u (Green potential in the chart).
pub fn potential_csv(p: &GridPotential) -> String {
    let mut s = String::from("chart,i,j,re,im,u\n");
    for chart in 0..2 {
        for j in 0..p.resolution {
            for i in 0..p.resolution {
                let c = p.coordinate(i, j);
                let _ = writeln!(s, "{chart},{i},{j},{},{},{}", c.re, c.im, p.green(chart, i, j));
            }
        }
    }
    s
}

/// CSV of a measure grid: re, im, density (mass per node), affine coordinates.
pub fn measure_csv(m: &MeasureGrid) -> String {
    let mut s = String::from("re,im,density\n");
    for (p, w) in &m.measure.atoms {
        let z = p.z();
        let _ = writeln!(s, "{},{},{}", z.re, z.im, w);
    }
    s
}

pub fn discrepancy_csv(rows: &[EquidistributionResult]) -> String {
    let mut s = String::from("depth,statistic\n");
    for r in rows {
        let _ = writeln!(s, "{},{}", r.depth, r.discrepancy);
    }
    s
}

/// A gnuplot script plotting a CSV written by the functions above.
pub fn gnuplot_script(csv_name: &str, kind: &str) -> String {
    match kind {
        "potential" => format!(
            "set datafile separator ','\nset view map\nset title 'Green potential (chart 0)'\nsplot '{csv_name}' using 4:5:($1==0?$6:1/0) with points palette pt 5 ps 0.3 notitle\n"
        ),
        "measure" => format!(
            "set datafile separator ','\nset size ratio -1\nset title 'equilibrium measure'\nplot '{csv_name}' using 1:2:3 with points palette pt 5 ps 0.3 notitle\n"
        ),
        _ => format!(
            "set datafile separator ','\nset logscale y\nset title 'discrepancy'\nplot '{csv_name}' using 1:2 with linespoints notitle\n"
        ),
    }
}

/// Writes `contents` to `path` and a gnuplot script next to it.
pub fn write_with_script(path: &Path, contents: &str, kind: &str) -> Result<(), MeasureError> {
    let io = |e: std::io::Error| MeasureError::Io(e.to_string());
    std::fs::write(path, contents).map_err(io)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    std::fs::write(path.with_extension("gp"), gnuplot_script(&name, kind)).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn square() -> ComplexSystem {
        ComplexSystem::new(vec![ComplexMap::polynomial(&[c(0.0), c(0.0), c(1.0)])], 2).unwrap()
    }

    #[test]
    fn roots_of_unity_as_preimages() {
        let pts = preimage_tree(&square(), &SpherePoint::affine(c(1.0)), 4).unwrap();
        assert_eq!(pts.len(), 16);
        for p in &pts {
            let z = p.z();
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!((z.powu(16) - c(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn preimage_at_infinity_and_multiplicity() {
        let (pts, bad) = preimages(&square().maps[0], &SpherePoint::infinity());
        assert_eq!(bad, 0);
        assert!(pts.iter().all(|p| p.y.norm() < 1e-12));
        let (pts, _) = preimages(&square().maps[0], &SpherePoint::affine(c(0.0)));
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p.z().norm() < 1e-6));
    }

    #[test]
    fn squaring_potential_small_grid() {
        let p = iterate_potential(&square(), None, 128, 25).unwrap();
        assert!(!p.contraction_violated);
        let n = p.resolution;
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let z = p.coordinate(i, j);
                if (z.norm() - 1.0).abs() > 0.1 {
                    worst = worst.max((p.green(0, i, j) - z.norm().ln().max(0.0)).abs());
                }
            }
        }
        assert!(worst < 2e-2, "{worst}");
        let m = measure_from_potential(&p).unwrap();
        assert!((m.total_before_normalization - 1.0).abs() < 0.05, "{}", m.total_before_normalization);
    }

    #[test]
    fn initialization_independence() {
        let mut other = GridPotential::zero(96, 1, 2);
        for (idx, v) in other.charts[0].iter_mut().enumerate() {
            *v = ((idx % 17) as f64 * 0.3).sin();
        }
        let a = iterate_potential(&square(), None, 96, 40).unwrap();
        let b = iterate_potential(&square(), Some(other), 96, 40).unwrap();
        let diff = a.charts[0].iter().zip(&b.charts[0]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn claim_small_cases() {
        for n in 0..=8 {
            assert!(binomial_identity_holds(n));
        }
        let rows = binomial_current_claim(default_lambda(), &SequenceSpec::Constant(1.0), 40);
        assert!(rows[40].residual < 1e-6);
        let exact = binomial_current_claim_default(&SequenceSpec::Constant(1.0), 40);
        for (a, b) in rows.iter().zip(&exact) {
            assert!((a.t_2n - b.t_2n).abs() < 1e-12);
        }
        assert!(exact.windows(2).skip(1).all(|w| w[1].residual < w[0].residual));
        let alt = binomial_current_claim_default(&SequenceSpec::AlternatingGeometric, 40);
        let direct = binomial_current_claim(default_lambda(), &SequenceSpec::AlternatingGeometric, 40);
        assert!((alt[40].t_2n - direct[40].t_2n).abs() < 1e-12 && alt[40].residual < 1e-6);
        let h = binomial_current_claim(default_lambda(), &SequenceSpec::Harmonic, 40);
        assert!(h[40].t_2n < 0.05);
    }

    #[test]
    fn dictionary_size() {
        assert_eq!(test_dictionary().len(), 32);
    }
}
