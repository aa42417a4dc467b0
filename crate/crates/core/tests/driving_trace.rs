//! Ensemble checks of driving paths and traces at reduced scale.

use sle_core::{compute_trace, refine, sample_sle_driving, sample_sle_rho_driving, ForcePoint};

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn endpoint_variance(kappa: f64, horizon: f64, seeds: u64) -> f64 {
    let ends: Vec<f64> = (0..seeds)
        .map(|s| *sample_sle_driving(kappa, horizon, 64, s).unwrap().u.last().unwrap())
        .collect();
    variance(&ends)
}

#[test]
fn endpoint_variance_is_kappa_t() {
    let v1 = endpoint_variance(6.0, 1.0, 10_000);
    assert!((v1 - 6.0).abs() <= 0.26, "Var U_1 = {v1}");
    let v4 = endpoint_variance(6.0, 4.0, 10_000);
    // same seeds: the ratio is exactly 4 by Brownian scaling of the noise
    assert!((v4 / v1 - 4.0).abs() <= 4.0 * 0.26 / 6.0, "ratio {}", v4 / v1);
}

#[test]
fn increments_are_gaussian_with_variance_kappa_dt() {
    let p = sample_sle_driving(3.0, 1.0, 100_000, 11).unwrap();
    let inc: Vec<f64> = p.u.windows(2).map(|w| w[1] - w[0]).collect();
    let v = variance(&inc) / (3.0 * p.dt);
    assert!((v - 1.0).abs() < 0.015, "{v}");
    let m = inc.iter().sum::<f64>() / inc.len() as f64;
    let k4 = inc.iter().map(|x| (x - m).powi(4)).sum::<f64>() / inc.len() as f64 / (v * 3.0 * p.dt).powi(2);
    assert!((k4 - 3.0).abs() < 0.1, "kurtosis {k4}");
}

#[test]
#[ignore = "fails: the gap is a Bessel process of dimension 7/3 started at 0 and revisits the tolerance band in about 60% of paths"]
fn strong_right_force_point_rarely_collides() {
    // rho = 2 >= kappa/2 - 2 at kappa = 6
    let fp = [ForcePoint::right(0.0, 2.0).unwrap()];
    let seeds = 1000;
    let hit = (0..seeds)
        .filter(|&s| sample_sle_rho_driving(6.0, &fp, 1.0, 100_000, s).unwrap().collisions > 0)
        .count();
    assert!(hit * 100 < seeds as usize, "{hit} of {seeds} paths collided");
}

#[test]
fn kappa2_trace_stays_off_the_line() {
    let mut off = 0;
    for s in 0..50 {
        let p = sample_sle_driving(2.0, 1.0, 10_000, s).unwrap();
        let tr = compute_trace(&p, 1).unwrap();
        let m = tr
            .points
            .iter()
            .zip(&tr.times)
            .filter(|(_, &t)| t > 0.05)
            .map(|(z, _)| z.im)
            .fold(f64::INFINITY, f64::min);
        off += usize::from(m > 0.0);
    }
    assert!(off >= 50 * 99 / 100, "{off} of 50");
}

fn refinement_distances(steps: usize, seed: u64) -> Vec<f64> {
    let coarse = sample_sle_driving(6.0, 1.0, steps, seed).unwrap();
    let fine = refine(&coarse).unwrap();
    let a = compute_trace(&coarse, 1).unwrap();
    let b = compute_trace(&fine, 2).unwrap();
    assert_eq!(a.len(), b.len());
    let mut d: Vec<f64> = a.points.iter().zip(&b.points).map(|(x, y)| (x - y).norm()).collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn traces_converge_under_refinement() {
    for s in 0..5 {
        let p99 = |d: &[f64]| d[d.len() * 99 / 100];
        let a = refinement_distances(2_500, s);
        let b = refinement_distances(10_000, s);
        assert!(p99(&b) < p99(&a), "seed {s}: {} then {}", p99(&a), p99(&b));
        assert!(b[b.len() / 2] < a[a.len() / 2]);
    }
}

#[test]
#[ignore = "fails: a few samples near pinch points jump by 0.07 to 0.15 at 10^5 steps"]
fn refined_traces_are_uniformly_close() {
    let seeds = 100;
    let close = (0..seeds)
        .filter(|&s| *refinement_distances(100_000, s).last().unwrap() <= 0.05)
        .count();
    assert!(close * 100 >= seeds as usize * 95, "{close} of {seeds} within 0.05");
}
