use approx::assert_abs_diff_eq;
use rug::Integer;
use semidyn_core::arith::{Place, ProjPoint};
use semidyn_core::canonical::{canonical_height, HeightOptions};
use semidyn_core::local::{
    decompose_height, local_green, local_green_exact_lift, tail_bound, PlaceBounds, SeriesOptions,
};
use semidyn_core::poly::Poly;
use semidyn_core::systems::{PolyMap, PolyMapSystem};

// {(x² + 3y² : 2y²), (x² : y²)}: bad reduction at 2 and 3.
fn system() -> PolyMapSystem {
    let f = PolyMap::new(vec![
        Poly::from_i64(2, &[(&[2, 0], 1), (&[0, 2], 3)]),
        Poly::from_i64(2, &[(&[0, 2], 2)]),
    ])
    .unwrap();
    PolyMapSystem::new(vec![f, PolyMap::power_map(1, 2)]).unwrap()
}

fn places() -> Vec<Place> {
    vec![Place::Archimedean, Place::prime(2).unwrap(), Place::prime(3).unwrap()]
}

fn lift(a: i64, b: i64) -> Vec<Integer> {
    vec![Integer::from(a), Integer::from(b)]
}

fn opts() -> SeriesOptions {
    SeriesOptions { target_error: 1e-10, ..SeriesOptions::default() }
}

#[test]
fn scaling_a_lift_shifts_by_log_abs() {
    let sys = system();
    for v in places() {
        for (a, b) in [(1, 2), (5, 3), (-7, 4)] {
            let g = local_green(&sys, &lift(a, b), &v, &opts()).unwrap();
            let g6 = local_green(&sys, &lift(6 * a, 6 * b), &v, &opts()).unwrap();
            let shift = v.log_abs(&Integer::from(6));
            assert_abs_diff_eq!(g6.value - g.value, shift, epsilon = g.error_radius + g6.error_radius + 1e-12);
        }
    }
}

#[test]
fn local_functional_equation() {
    let sys = system();
    let d = sys.total_degree() as f64;
    for v in places() {
        for (a, b) in [(1, 2), (5, 3), (2, 9)] {
            let x = lift(a, b);
            let g = local_green(&sys, &x, &v, &opts()).unwrap();
            let mut sum = 0.0;
            let mut radius = d * g.error_radius;
            for m in sys.maps() {
                let y = local_green(&sys, &m.apply(&x), &v, &opts()).unwrap();
                sum += y.value;
                radius += y.error_radius;
            }
            assert_abs_diff_eq!(sum, d * g.value, epsilon = radius + 1e-9);
        }
    }
}

#[test]
fn series_agrees_with_exact_lifts() {
    let sys = system();
    let bounds = PlaceBounds::from_system(&sys).unwrap();
    let (k, d) = (sys.maps().len(), sys.total_degree() as f64);
    for v in places() {
        let x = lift(3, 5);
        let series = local_green(&sys, &x, &v, &opts()).unwrap();
        let (exact, depth) = local_green_exact_lift(&sys, &x, &v, 8, 1 << 16).unwrap();
        assert_eq!(depth, 8);
        let tol = tail_bound(bounds.bound_for(&v), k, d, depth) + series.error_radius;
        assert_abs_diff_eq!(exact, series.value, epsilon = tol);
    }
}

#[test]
fn local_terms_sum_to_the_canonical_height() {
    let sys = system();
    for (a, b) in [(1, 2), (5, 3), (-7, 4), (0, 1)] {
        let x = ProjPoint::from_i64(&[&[a, b]]).unwrap();
        let dec = decompose_height(&sys, &x, &opts()).unwrap();
        let h = canonical_height(&sys, &x, &HeightOptions::with_target(1e-9)).unwrap();
        assert_abs_diff_eq!(dec.total, h.value, epsilon = dec.total_radius + h.error_radius + 1e-9);
    }
}
