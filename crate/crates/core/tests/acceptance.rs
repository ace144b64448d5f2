//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use semidyn_core::arith::ProjPoint;
use semidyn_core::canonical::{
    canonical_height, check_functional_equation, wheeler_silverman_ratio, HeightOptions,
};
use semidyn_core::local::{decompose_height, s_operator_fixed_point, SeriesOptions};
use semidyn_core::measures::{
    binomial_current_claim, binomial_current_claim_default, binomial_identity_holds, default_lambda, equidistribution_experiment,
    iterate_potential, measure_from_potential, ComplexSystem, DiscreteMeasure, SequenceSpec, SpherePoint,
};
use semidyn_core::orbits::{
    find_periodic_points, forward_orbit, henon_inequality_check, henon_margin, is_f_periodic, perron_vector,
    OrbitStatus, Periodicity, TransitionMatrix,
};
use semidyn_core::poly::Poly;
use semidyn_core::systems::{
    build_wheeler_through, lattes_duplication, Dynamics, HenonSystem, K3TrilinearSystem, PolyMap, PolyMapSystem,
};
use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn square() -> PolyMapSystem {
    PolyMapSystem::new(vec![PolyMap::power_map(1, 2)]).unwrap()
}

fn random_p1(rng: &mut ChaCha8Rng, n: usize) -> ProjPoint {
    loop {
        let c: Vec<i64> = (0..=n).map(|_| rng.gen_range(-1000..=1000)).collect();
        if let Ok(p) = ProjPoint::from_i64(&[&c]) {
            return p;
        }
    }
}

fn criterion_1() -> Outcome {
    let k3 = K3TrilinearSystem::unit_cube_example();
    let origin = ProjPoint::from_i64(&[&[0, 1], &[0, 1], &[0, 1]]).unwrap();
    let orbit = forward_orbit(&k3, &origin, 1000).map_err(|e| e.to_string())?;
    let expected: BTreeSet<ProjPoint> = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 0, 1], [0, 1, 1]]
        .iter()
        .map(|c| ProjPoint::from_i64(&[&[c[0], 1], &[c[1], 1], &[c[2], 1]]).unwrap())
        .collect();
    let got: BTreeSet<ProjPoint> = orbit.nodes.iter().cloned().collect();
    check(orbit.status == OrbitStatus::Closed, "orbit not closed")?;
    check(orbit.nodes.len() == 7 && got == expected, format!("orbit {:?}", orbit.nodes))?;
    let h = canonical_height(&k3, &origin, &HeightOptions::default()).map_err(|e| e.to_string())?;
    check(h.value == 0.0 && h.error_radius == 0.0, format!("ĥ = {} ± {}", h.value, h.error_radius))?;
    Ok("7-point closed orbit, ĥ = 0 exactly".into())
}

fn criterion_2() -> Outcome {
    let s = square();
    let x = ProjPoint::from_i64(&[&[2, 1]]).unwrap();
    let h = canonical_height(&s, &x, &HeightOptions::default()).map_err(|e| e.to_string())?;
    check(h.value == 2f64.ln() && h.error_radius == 0.0 && h.certified, format!("{h:?}"))?;
    check(h.discrepancy_c == Some(0.0) && h.discrepancy_certified, "C is not certified 0")?;
    let dec = decompose_height(&s, &x, &SeriesOptions::default()).map_err(|e| e.to_string())?;
    let map = dec.as_map();
    check((map.get("inf").copied().unwrap_or(f64::NAN) - 2f64.ln()).abs() <= 1e-15, format!("{map:?}"))?;
    check(map.iter().filter(|(k, _)| k.as_str() != "inf").all(|(_, v)| *v == 0.0), format!("{map:?}"))?;
    check((dec.total - h.value).abs() <= 1e-12, format!("Σ local = {}", dec.total))?;
    Ok(format!("ĥ(2:1) = log 2, radius 0; locals {map:?}"))
}

fn criterion_3() -> Outcome {
    let target = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z2_plus_1 = PolyMap::new(vec![
        Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 1)]),
        Poly::from_i64(2, &[(&[0, 2], 1)]),
    ])
    .unwrap();
    let pair = PolyMapSystem::new(vec![PolyMap::power_map(1, 2), z2_plus_1]).unwrap();
    let p2 = PolyMapSystem::new(vec![PolyMap::power_map(2, 2)]).unwrap();
    let k3 = K3TrilinearSystem::unit_cube_example();
    let z2 = square();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let cases: Vec<(&str, &dyn Dynamics, Vec<ProjPoint>, HeightOptions, bool)> = vec![
        ("z^2", &z2 as &dyn Dynamics, (0..100).map(|_| random_p1(&mut rng, 1)).collect(), HeightOptions::with_target(target), false),
        ("(x^2:y^2:z^2)", &p2, (0..100).map(|_| random_p1(&mut rng, 2)).collect(), HeightOptions::with_target(target), false),
        ("{z^2, z^2+1}", &pair, (0..100).map(|_| random_p1(&mut rng, 1)).collect(), HeightOptions::with_target(target), false),
        // the exact DAG cannot reach 1e-6 at these heights; the aligned
        // residual is checked and the radii are reported
        ("K3", &k3, k3.sample_points(100, 33), HeightOptions { depth_cap: 6, ..HeightOptions::with_target(target) }, true),
    ];
    for (name, sys, points, opts, aligned) in cases {
        let mut worst: f64 = 0.0;
        let mut worst_radius: f64 = 0.0;
        let mut bad = 0;
        for x in &points {
            match check_functional_equation(sys, x, &opts, aligned) {
                Ok(r) => {
                    worst = worst.max(r.residual);
                    worst_radius = worst_radius.max(r.radius_bound);
                    if !r.within_tolerance() {
                        bad += 1;
                    }
                }
                Err(e) => {
                    bad += 1;
                    failures.push(format!("{name} at {x}: {e}"));
                }
            }
        }
        let tol = (sys.num_maps() as f64 + sys.degree()) * target;
        lines.push(format!("{name}: {} pts, max residual {worst:.2e} (tol {tol:.1e}), max radius {worst_radius:.2e}", points.len()));
        if bad > 0 || points.len() < 100 {
            failures.push(format!("{name}: {bad} of {} outside tolerance", points.len()));
        }
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("{}; {}", failures.join("; "), lines.join("; ")))
    }
}

fn criterion_4() -> Outcome {
    let x = ProjPoint::from_i64(&[&[982451, -104729, 1299709], &[7919, 3571, -611953]]).unwrap();
    let surface = build_wheeler_through(&x, 1).map_err(|e| e.to_string())?;
    let base: Arc<dyn Dynamics> = Arc::new(surface);
    let opts = HeightOptions { target_error: 1e-9, digit_budget: 4_000_000, ..Default::default() };
    let r = wheeler_silverman_ratio(base, &x, &opts).map_err(|e| e.to_string())?;
    let err = (r.ratio - r.expected).abs();
    check(err <= 1e-3, format!("ratio {} vs {} (radius {:.2e})", r.ratio, r.expected, r.ratio_radius))?;
    Ok(format!("ratio {:.7} vs 1+√3, |error| {err:.1e}, propagated radius {:.1e}", r.ratio, r.ratio_radius))
}

fn power_iteration(a: &[Vec<u64>], k: u64) -> Vec<f64> {
    let n = a.len();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] as f64 * v[j]).sum::<f64>() / k as f64).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let diff = w.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = w;
        if diff < 1e-15 {
            break;
        }
    }
    v
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut positive = 0;
    for trial in 0..1000 {
        let strict = trial % 4 == 0;
        let k: u64 = rng.gen_range(1..=5);
        let n = if strict { rng.gen_range(1..=k as usize) } else { rng.gen_range(1..=8) };
        let mut a = vec![vec![0u64; n]; n];
        for j in 0..n {
            let mut left = k;
            if strict {
                for row in a.iter_mut() {
                    row[j] = 1;
                }
                left -= n as u64;
            }
            for _ in 0..left {
                a[rng.gen_range(0..n)][j] += 1;
            }
        }
        let m = TransitionMatrix::new(a.clone()).map_err(|e| e)?;
        let c = perron_vector(&m);
        let kc: Vec<Rational> = c.iter().map(|x| Rational::from(x * k)).collect();
        check(m.apply(&c) == kc, format!("A·c ≠ k·c for {a:?}"))?;
        check(c.iter().all(|x| *x >= 0), format!("negative entry for {a:?}"))?;
        check(c.iter().fold(Rational::new(), |s, x| s + x) == 1, format!("Σc ≠ 1 for {a:?}"))?;
        if a.iter().all(|r| r.iter().all(|&v| v > 0)) {
            positive += 1;
            let oracle = power_iteration(&a, k);
            let diff = c.iter().zip(&oracle).map(|(x, y)| (x.to_f64() - y).abs()).fold(0.0, f64::max);
            check(diff <= 1e-8, format!("power iteration differs by {diff:.1e} for {a:?}"))?;
        }
    }
    Ok(format!("1000 matrices exact; {positive} strictly positive matched power iteration"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut tightest: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(1..=12);
        let k = rng.gen_range(1..=4);
        let d = k as f64 + rng.gen_range(0.25..4.0);
        let images: Vec<Vec<usize>> = (0..n).map(|_| (0..k).map(|_| rng.gen_range(0..n)).collect()).collect();
        let gamma: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let r = s_operator_fixed_point(&images, &gamma, d, k).map_err(|e| e.to_string())?;
        worst = worst.max(r.max_disagreement);
        if r.sup_gamma > 0.0 {
            tightest = tightest.max(r.sup_gamma_hat / r.bound);
        }
        check(r.max_disagreement <= 1e-10, format!("disagreement {:.1e}", r.max_disagreement))?;
        check(r.bound_holds, format!("bound fails: {} > {}", r.sup_gamma_hat, r.bound))?;
    }
    Ok(format!("500 systems; max disagreement {worst:.1e}; max ‖γ̂‖/bound {tightest:.3}"))
}

fn criterion_7() -> Outcome {
    let rows = binomial_current_claim_default(&SequenceSpec::Constant(1.0), 40);
    let float = binomial_current_claim(default_lambda(), &SequenceSpec::Constant(1.0), 40);
    check((float[40].t_2n - rows[40].t_2n).abs() <= 1e-12, "float and exact tables disagree")?;
    check(rows[40].residual <= 1e-6, format!("|t_80 − 1| = {:.2e}", rows[40].residual))?;
    for w in rows[5..].windows(2) {
        check(w[1].residual < w[0].residual, format!("residual not decreasing at n = {}", w[1].n))?;
    }
    for n in 0..=20 {
        check(binomial_identity_holds(n), format!("identity fails at n = {n}"))?;
    }
    Ok(format!("|t_80 − 1| = {:.2e}, residual decreasing from n = 5, identity exact for n ≤ 20", rows[40].residual))
}

fn criterion_8() -> Outcome {
    let sys = ComplexSystem::from_poly_system(&square()).map_err(|e| e.to_string())?;
    let p = iterate_potential(&sys, None, 512, 40).map_err(|e| e.to_string())?;
    let n = p.resolution;
    let mut sup: f64 = 0.0;
    for chart in 0..2 {
        for j in 0..n {
            for i in 0..n {
                let s = p.coordinate(i, j);
                if (s.norm() - 1.0).abs() > 0.05 {
                    sup = sup.max((p.green(chart, i, j) - s.norm().ln().max(0.0)).abs());
                }
            }
        }
    }
    let m = measure_from_potential(&p).map_err(|e| e.to_string())?;
    let in_annulus: f64 = m
        .measure
        .atoms
        .iter()
        .filter(|(q, _)| {
            let r = q.x.norm() / q.y.norm();
            (0.9..=1.1).contains(&r)
        })
        .map(|a| a.1)
        .sum();
    check(sup <= 5e-3, format!("sup error {sup:.2e}"))?;
    check(in_annulus >= 0.97, format!("annulus mass {in_annulus:.4}"))?;
    check(!p.contraction_violated, "contraction violated")?;
    Ok(format!(
        "sup |u − log⁺|z|| = {sup:.2e}, annulus mass {in_annulus:.4}, raw mass {:.4}",
        m.total_before_normalization
    ))
}

fn criterion_9() -> Outcome {
    let sq = ComplexSystem::from_poly_system(&square()).map_err(|e| e.to_string())?;
    let circle = DiscreteMeasure::unit_circle(1 << 16);
    let one = SpherePoint::affine(Complex64::new(1.0, 0.0));
    let blacklist = [SpherePoint::affine(Complex64::new(0.0, 0.0)), SpherePoint::infinity()];
    let mut sq_stats = Vec::new();
    for depth in [6, 8, 10] {
        let r = equidistribution_experiment(&sq, &one, depth, &circle, &blacklist).map_err(|e| e.to_string())?;
        sq_stats.push(r.discrepancy);
    }
    let lattes = PolyMapSystem::new(vec![lattes_duplication(&Integer::from(0), &Integer::from(1)).unwrap()]).unwrap();
    let lsys = ComplexSystem::from_poly_system(&lattes).map_err(|e| e.to_string())?;
    let pot = iterate_potential(&lsys, None, 2048, 16).map_err(|e| e.to_string())?;
    let mu = measure_from_potential(&pot).map_err(|e| e.to_string())?.measure;
    let five = SpherePoint::affine(Complex64::new(5.0, 0.0));
    let mut l_stats = Vec::new();
    for depth in [4, 6, 8] {
        let r = equidistribution_experiment(&lsys, &five, depth, &mu, &[]).map_err(|e| e.to_string())?;
        l_stats.push(r.discrepancy);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ");
    let detail = format!("z²: [{}]; Lattès: [{}]", fmt(&sq_stats), fmt(&l_stats));
    check(sq_stats.windows(2).all(|w| w[1] < w[0]) && sq_stats[2] <= 0.05, detail.clone())?;
    check(l_stats.windows(2).all(|w| w[1] < w[0]), detail.clone())?;
    Ok(detail)
}

fn criterion_10() -> Outcome {
    let s = square();
    let found = find_periodic_points(&s, 5f64.ln(), 64);
    let sets: Vec<Vec<String>> = found.orbits.iter().map(|o| o.nodes.iter().map(|p| p.to_string()).collect()).collect();
    let expected = vec![vec!["(0:1)".to_string()], vec!["(1:0)".to_string()], vec!["(1:1)".to_string()]];
    let mut sorted = sets.clone();
    sorted.sort();
    check(sorted == expected, format!("orbits {sets:?}"))?;
    let m = is_f_periodic(&s, &ProjPoint::from_i64(&[&[-1, 1]]).unwrap(), 64).map_err(|e| e.to_string())?;
    check(m.verdict == Periodicity::NotPeriodic, format!("{:?}", m.verdict))?;
    let w: Vec<String> = m.witness.unwrap_or_default().iter().map(|p| p.to_string()).collect();
    check(w == vec!["(1:1)".to_string()], format!("witness {w:?}"))?;
    Ok(format!("orbits {sets:?} from {} candidates; −1 not periodic, witness {w:?}", found.points_checked))
}

fn criterion_11() -> Outcome {
    let h = HenonSystem::new(Rational::from(1), Rational::from(0)).unwrap();
    let pts = h.sample_integer_box(10_000, 100, 11);
    let r = henon_inequality_check(&h, &pts, 10);
    check(r.points == 10_000, "sample size")?;
    check(r.no_downward_trend, format!("top bucket below global min {}", r.global_min))?;
    let x = HenonSystem::affine_point(&Rational::from(1), &Rational::from(2));
    let m = henon_margin(&h, &x).ok_or("off chart")?;
    let want = 5f64.ln() - 2.5 * 2f64.ln();
    check((m - want).abs() <= 1e-12, format!("margin(1,2) = {m}"))?;
    let top = r.buckets.iter().rev().find(|b| b.count > 0).unwrap();
    Ok(format!("global min {:.4}, top-bucket min {:.4}, margin(1,2) = {m:.12}", r.global_min, top.min))
}

fn main() {
    // `cargo test` passes harness flags; a name filter selects criteria
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, fn() -> Outcome, Duration); 11] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::MAX),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(120)),
        (5, criterion_5, Duration::MAX),
        (6, criterion_6, Duration::MAX),
        (7, criterion_7, Duration::MAX),
        (8, criterion_8, Duration::from_secs(60)),
        (9, criterion_9, Duration::MAX),
        (10, criterion_10, Duration::MAX),
        (11, criterion_11, Duration::MAX),
    ];
    let mut failed = 0;
    for (n, run, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => Err(format!("{msg}; over time limit {limit:?}")),
            o => o,
        };
        match outcome {
            Ok(msg) => println!("criterion {n:>2}: PASS ({:.2?}) {msg}", elapsed),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL ({:.2?}) {msg}", elapsed)
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
