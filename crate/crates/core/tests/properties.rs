use num_complex::Complex64;
use proptest::prelude::*;
use sle_core::{
    beffara_f, bin_endpoints, compute_curve, convex_hull, crossing_times, default_tolerances, diameter,
    harmonic_measure_from_infinity, sample_sle_driving, type_code, ConformalChain, DrivingPath, ExactSum,
};

fn brute_diameter(pts: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for a in pts {
        for b in pts {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Driving path from bounded increments.
fn path_from_steps(steps: &[f64], dt: f64) -> DrivingPath {
    let mut u = vec![0.0];
    for s in steps {
        u.push(u.last().unwrap() + s);
    }
    DrivingPath::from_samples(6.0, dt, u).unwrap()
}

fn points() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..120)
        .prop_map(|v| v.into_iter().map(|(x, y)| Complex64::new(x, y)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diameter_equals_brute_force(pts in points()) {
        let d = diameter(&pts);
        prop_assert!((d - brute_diameter(&pts)).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn hull_vertices_are_input_points(pts in points()) {
        let hull = convex_hull(&pts);
        prop_assert!(!hull.is_empty());
        for v in &hull {
            prop_assert!(pts.contains(v));
        }
        prop_assert!((diameter(&hull) - diameter(&pts)).abs() <= 1e-12 * diameter(&pts).max(1.0));
    }

    #[test]
    fn f_is_symmetric_and_increasing(
        k in prop::sample::select(vec![4.5, 5.0, 6.0, 8.0, 16.0]),
        x in 0.0..1.0f64,
        h in 1e-6..0.1f64,
    ) {
        let f = beffara_f(k, x).unwrap();
        prop_assert!((f + beffara_f(k, 1.0 - x).unwrap() - 1.0).abs() <= 1e-12);
        let y = (x + h).min(1.0);
        if y > x {
            prop_assert!(beffara_f(k, y).unwrap() > f);
        }
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn same_seed_same_driving(seed in any::<u64>(), k in 0.5..10.0f64) {
        let a = sample_sle_driving(k, 1.0, 200, seed).unwrap();
        let b = sample_sle_driving(k, 1.0, 200, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn capacity_is_additive_over_concatenation(
        a in prop::collection::vec(-0.3..0.3f64, 1..40),
        b in prop::collection::vec(-0.3..0.3f64, 1..40),
    ) {
        let ca = path_from_steps(&a, 1e-3).chain();
        let cb = path_from_steps(&b, 7e-4).chain();
        let mut sum = ExactSum::new();
        sum.merge(ca.capacity_sum());
        sum.merge(cb.capacity_sum());
        prop_assert_eq!(ca.concat(&cb).capacity_sum().value(), sum.value());
    }

    #[test]
    fn crossing_sides_alternate(steps in prop::collection::vec(-0.2..0.2f64, 20..200)) {
        let path = path_from_steps(&steps, 1e-3);
        let curve = compute_curve(&path, 1, 0.0).unwrap();
        let (d, d0) = default_tolerances(&curve);
        let ct = crossing_times(&curve, d, d0).unwrap();
        prop_assert!(ct.sides.windows(2).all(|w| w[0] == -w[1]));
        prop_assert!(ct.taus.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(ct.endpoints.len(), ct.taus.len());
    }

    #[test]
    fn binning_conserves_endpoints(
        mut xs in prop::collection::vec(-5.0..-0.01f64, 0..8),
        ends in prop::collection::vec(-6.0..0.0f64, 0..30),
    ) {
        xs.sort_by(f64::total_cmp);
        xs.reverse();
        let cv = bin_endpoints(&xs, ends.clone(), 1.0);
        prop_assert_eq!(cv.counts.iter().sum::<usize>() + cv.outside, ends.len());
        prop_assert_eq!(cv.counts.len(), xs.len().saturating_sub(1));
    }

    #[test]
    fn harmonic_measure_grows_with_the_hull(seed in any::<u64>()) {
        let chain = sample_sle_driving(6.0, 0.25, 60, seed).unwrap().chain();
        let mut prev = 0.0;
        for k in (0..=chain.len()).step_by(10) {
            let sub = chain.slice(0, k).unwrap();
            let m = harmonic_measure_from_infinity(&sub, (-20.0, 20.0)).unwrap();
            prop_assert!(m >= prev - 1e-12, "measure fell from {} to {} at {}", prev, m, k);
            prev = m;
        }
        // a far interval only shrinks, by O(hcap / d^2)
        let far = harmonic_measure_from_infinity(&chain, (100.0, 101.0)).unwrap();
        prop_assert!(far <= 1.0 + 1e-12);
        prop_assert!(far >= 1.0 - 10.0 * chain.total_time() / 1e4);
    }

    #[test]
    fn type_code_is_a_function_of_the_contacts(n in any::<bool>(), p in any::<bool>()) {
        let t = type_code(n, p);
        prop_assert!(t <= 3);
        prop_assert_eq!(t, 2 * u8::from(n) + u8::from(p));
    }
}

#[test]
fn empty_chain_measure_is_length() {
    let m = harmonic_measure_from_infinity(&ConformalChain::new(), (0.0, 1.0)).unwrap();
    assert_eq!(m, 1.0);
}
