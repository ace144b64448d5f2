use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;
use semidyn_core::measures::{
    default_sharpen_depth, discrepancy, equidistribution_experiment, iterate_potential, measure_from_potential,
    preimage_tree, sharpen_potential, ComplexMap, ComplexSystem, DiscreteMeasure, MeasureError, SpherePoint,
};
use semidyn_core::systems::{lattes_duplication, PolyMap, PolyMapSystem};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn chebyshev() -> ComplexSystem {
    ComplexSystem::new(vec![ComplexMap::polynomial(&[c(-2.0), c(0.0), c(1.0)])], 2).unwrap()
}

// Escape rate of z² − 2: z = w + 1/w with |w| ≥ 1, G(z) = ln|w|.
fn chebyshev_green(z: Complex64) -> f64 {
    let r = (z * z - 4.0).sqrt();
    let w = ((z + r) / 2.0).norm().max(((z - r) / 2.0).norm());
    w.ln()
}

#[test]
fn chebyshev_potential_matches_escape_rate() {
    let sys = chebyshev();
    let p = iterate_potential(&sys, None, 256, 40).unwrap();
    let p = sharpen_potential(&sys, &p, default_sharpen_depth(1));
    let mut worst = 0.0f64;
    for j in 0..p.resolution {
        for i in 0..p.resolution {
            let z = p.coordinate(i, j);
            let exact = chebyshev_green(z) - 0.5 * (1.0 + z.norm_sqr()).ln();
            worst = worst.max((p.charts[0][j * p.resolution + i] - exact).abs());
        }
    }
    assert!(worst < 1e-6, "sup error {worst}");

    let m = measure_from_potential(&p).unwrap();
    let near: f64 = m
        .measure
        .atoms
        .iter()
        .filter(|(q, _)| {
            let z = q.z();
            z.is_finite() && z.im.abs() <= 0.1 && z.re >= -2.1 && z.re <= 2.1
        })
        .map(|a| a.1)
        .sum();
    assert!(near >= 0.95, "mass near [-2, 2]: {near}");
}

#[test]
fn chebyshev_preimages_follow_arcsine_law() {
    // equilibrium measure of [-2, 2] via Chebyshev nodes
    let n = 1 << 14;
    let arcsine = DiscreteMeasure::uniform(
        (0..n)
            .map(|m| SpherePoint::affine(c(2.0 * (std::f64::consts::PI * (m as f64 + 0.5) / n as f64).cos())))
            .collect(),
    );
    let pts = preimage_tree(&chebyshev(), &SpherePoint::affine(c(0.3)), 10).unwrap();
    let d = discrepancy(&DiscreteMeasure::uniform(pts), &arcsine);
    assert!(d < 1e-2, "discrepancy {d}");
}

#[test]
fn mass_is_one_at_moderate_resolution() {
    let square = ComplexSystem::new(vec![ComplexMap::polynomial(&[c(0.0), c(0.0), c(1.0)])], 2).unwrap();
    let pair = ComplexSystem::new(
        vec![ComplexMap::polynomial(&[c(0.0), c(0.0), c(1.0)]), ComplexMap::polynomial(&[c(1.0), c(0.0), c(1.0)])],
        4,
    )
    .unwrap();
    for (name, sys) in [("z²", square), ("{z², z²+1}", pair)] {
        let p = iterate_potential(&sys, None, 256, 30).unwrap();
        let p = sharpen_potential(&sys, &p, default_sharpen_depth(sys.k()));
        let m = measure_from_potential(&p).unwrap();
        assert!((0.99..=1.01).contains(&m.total_before_normalization), "{name}: {}", m.total_before_normalization);
    }
}

#[test]
fn limit_potential_satisfies_the_pullback_equation() {
    let sys = ComplexSystem::new(
        vec![ComplexMap::polynomial(&[c(0.0), c(0.0), c(1.0)]), ComplexMap::polynomial(&[c(1.0), c(0.0), c(1.0)])],
        4,
    )
    .unwrap();
    let p = iterate_potential(&sys, None, 512, 30).unwrap();
    assert!(!p.contraction_violated);
    let norm = |x: Complex64, y: Complex64| 0.5 * (x.norm_sqr() + y.norm_sqr()).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let q = SpherePoint::affine(z);
        let rhs: f64 = sys
            .maps
            .iter()
            .map(|f| {
                let (x, y) = f.apply(q.x, q.y);
                p.relative_at(&SpherePoint::new(x, y)) + norm(x, y) - f.degree() as f64 * norm(q.x, q.y)
            })
            .sum::<f64>()
            / sys.d as f64;
        let lhs = p.relative_at(&q);
        assert!((lhs - rhs).abs() < 2e-3, "z = {z}: {lhs} vs {rhs}");
    }
}

#[test]
fn lattes_density_is_bounded_below() {
    let f = lattes_duplication(&Integer::from(0), &Integer::from(1)).unwrap();
    let sys = ComplexSystem::from_poly_system(&PolyMapSystem::new(vec![f]).unwrap()).unwrap();
    let p = iterate_potential(&sys, None, 256, 16).unwrap();
    let p = sharpen_potential(&sys, &p, default_sharpen_depth(1));
    let m = measure_from_potential(&p).unwrap();
    let n = p.resolution;
    let h2 = p.step() * p.step();
    // block averages over 8×8 nodes, against the spherical area element
    let b = 8;
    let mut lo = f64::INFINITY;
    for bj in (0..n - b).step_by(b) {
        for bi in (0..n - b).step_by(b) {
            let centre = p.coordinate(bi + b / 2, bj + b / 2);
            if centre.norm() > 0.7 {
                continue;
            }
            let mut mass = 0.0;
            for j in bj..bj + b {
                for i in bi..bi + b {
                    mass += m.mass[0][j * n + i];
                }
            }
            lo = lo.min(mass / (h2 * (b * b) as f64) * (1.0 + centre.norm_sqr()).powi(2));
        }
    }
    assert!(lo > 0.05, "min density {lo}");
}

#[test]
fn inputs_are_validated() {
    let z2 = ComplexMap::polynomial(&[c(0.0), c(0.0), c(1.0)]);
    assert!(matches!(ComplexSystem::new(vec![z2.clone()], 3), Err(MeasureError::Degree { sum: 2, d: 3 })));
    let sys = ComplexSystem::new(vec![z2], 2).unwrap();
    assert!(matches!(iterate_potential(&sys, None, 32, 4), Err(MeasureError::Resolution(32))));
    let circle = DiscreteMeasure::unit_circle(256);
    let exceptional = [SpherePoint::affine(c(0.0)), SpherePoint::infinity()];
    let r = equidistribution_experiment(&sys, &SpherePoint::affine(c(0.0)), 4, &circle, &exceptional);
    assert!(matches!(r, Err(MeasureError::Exceptional)));
    let plane = PolyMapSystem::new(vec![PolyMap::power_map(2, 2)]).unwrap();
    assert!(matches!(ComplexSystem::from_poly_system(&plane), Err(MeasureError::NotP1)));
}
