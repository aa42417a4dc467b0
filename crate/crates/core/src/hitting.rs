//! Probability that chordal SLE visits `[c, inf)` before `(-inf, a]`.
//!
//! For `kappa > 4` the answer is `F(-a / (c - a))` with
//! `F(x) = (1/Z) int_0^x u^{-4/kappa} (1 - u)^{-4/kappa} du`, `F(1) = 1`,
//! the regularized incomplete Beta function with both parameters
//! `1 - 4/kappa`. The Monte Carlo estimator follows the boundary points
//! `Y^a = g_t(a) - U_t` and `Y^c = g_t(c) - U_t` under the exact slit maps;
//! a point is swallowed, i.e. the trace has visited its half-line, when the
//! driving value passes its image, so that its process changes sign. An
//! optional collision tolerance `f sqrt(kappa dt)` declares the point
//! swallowed earlier; it biases the estimate toward the nearer point by
//! `O(sqrt(dt))` and is kept for comparison only.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::loewner::{slit_forward_real, ElementarySlit, Side};
use crate::rng;
use crate::trace::Trace;

/// Gauss–Legendre nodes per panel.
pub const DEFAULT_NODES: usize = 32;
/// Panels `[y 2^{-k-1}, y 2^{-k}]` graded toward the endpoint singularity.
const GRADED_PANELS: i32 = 24;

static FLIP_SYMMETRY: AtomicBool = AtomicBool::new(false);

/// Fault injection for the self-test: when set, the upper half of `F` is
/// evaluated with the wrong sign.
#[doc(hidden)]
pub fn inject_symmetry_fault(on: bool) {
    FLIP_SYMMETRY.store(on, Ordering::SeqCst);
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `G(y) = int_0^y u^{-e}(1-u)^{-e} du` for `y <= 1/2`, `e = 4/kappa`.
/// After `u = s^{1/alpha}`, `alpha = 1 - e`, the integrand becomes
/// `(1 - s^{1/alpha})^{-e} / alpha`, bounded on `[0, y^alpha]`; its only
/// non-smoothness is at `s = 0`, which the graded panels absorb.
fn lower_integral(kappa: f64, y: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let e = 4.0 / kappa;
    let alpha = 1.0 - e;
    let top = y.powf(alpha);
    let f = |s: f64| (1.0 - s.powf(1.0 / alpha)).powf(-e);
    let (nodes, weights) = rule;
    let mut total = 0.0;
    let mut hi = top;
    for k in 0..=GRADED_PANELS {
        let lo = if k == GRADED_PANELS { 0.0 } else { 0.5 * hi };
        let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        total += half * nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>();
        hi = lo;
    }
    total / alpha
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 4.0 && kappa.is_finite()) {
        return Err(invalid(format!("hitting formula needs kappa > 4, got {kappa}")));
    }
    Ok(())
}

/// `F` for one `kappa`, with the quadrature rule and `Z_kappa` precomputed.
#[derive(Debug, Clone)]
pub struct BeffaraF {
    kappa: f64,
    rule: (Vec<f64>, Vec<f64>),
    half: f64,
}

impl BeffaraF {
    pub fn new(kappa: f64) -> Result<Self> {
        Self::with_nodes(kappa, DEFAULT_NODES)
    }

    /// `nodes` Gauss–Legendre points per panel.
    pub fn with_nodes(kappa: f64, nodes: usize) -> Result<Self> {
        check_kappa(kappa)?;
        if nodes == 0 {
            return Err(invalid("quadrature needs at least one node"));
        }
        let rule = gauss_legendre(nodes);
        let half = lower_integral(kappa, 0.5, &rule);
        Ok(Self { kappa, rule, half })
    }

    /// Normalizing constant `Z_kappa = B(1 - 4/kappa, 1 - 4/kappa)`.
    pub fn z(&self) -> f64 {
        2.0 * self.half
    }

    /// The integral is split at `1/2`; the upper half uses the symmetry
    /// `u -> 1 - u` of the integrand.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid(format!("F is defined on [0, 1], got {x}")));
        }
        if x <= 0.5 {
            return Ok(lower_integral(self.kappa, x, &self.rule) / self.z());
        }
        let rest = lower_integral(self.kappa, 1.0 - x, &self.rule) / self.z();
        if FLIP_SYMMETRY.load(Ordering::Relaxed) {
            Ok(1.0 + rest)
        } else {
            Ok(1.0 - rest)
        }
    }
}

pub fn beffara_f(kappa: f64, x: f64) -> Result<f64> {
    BeffaraF::new(kappa)?.eval(x)
}

pub fn beffara_f_with(kappa: f64, x: f64, nodes: usize) -> Result<f64> {
    BeffaraF::with_nodes(kappa, nodes)?.eval(x)
}

pub fn z_kappa(kappa: f64) -> Result<f64> {
    Ok(BeffaraF::new(kappa)?.z())
}

/// Equality case `1/(n+1)` of the recursion `P(n) >= P(n-1)(1 - P(n))`.
pub fn recursion_lower_bound(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(invalid("recursion bound is indexed from n = 1"));
    }
    Ok(1.0 / (n as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingQuery {
    pub kappa: f64,
    pub a: f64,
    pub c: f64,
}

impl HittingQuery {
    pub fn new(kappa: f64, a: f64, c: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(a < 0.0 && c > 0.0 && a.is_finite() && c.is_finite()) {
            return Err(invalid(format!("need a < 0 < c, got a = {a}, c = {c}")));
        }
        Ok(Self { kappa, a, c })
    }

    /// Argument `-a / (c - a)` of `F`.
    pub fn x(&self) -> f64 {
        -self.a / (self.c - self.a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    /// Resolved trials; `p_hat` is taken over these.
    pub n_traces: usize,
    pub unresolved: usize,
    pub f_theory: f64,
    pub z_kappa: f64,
}

/// Which half-line a single trial visited first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    /// `c` swallowed first: `[c, inf)` visited before `(-inf, a]`.
    Right,
    Left,
    Unresolved,
}

/// One trial driven by the standard normals of `(seed, stream 0)`, the same
/// noise as `sample_sle_driving(kappa, horizon, steps, seed)`.
pub fn hitting_trial(q: &HittingQuery, steps: usize, horizon: f64, seed: u64) -> Result<Resolution> {
    hitting_trial_with(q, steps, horizon, seed, 0.0)
}

/// As [`hitting_trial`], declaring a point swallowed once its process is
/// within `tol_factor * sqrt(kappa dt)` of zero.
pub fn hitting_trial_with(q: &HittingQuery, steps: usize, horizon: f64, seed: u64, tol_factor: f64) -> Result<Resolution> {
    if steps == 0 || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("need steps >= 1 and horizon > 0, got {steps}, {horizon}")));
    }
    if !(tol_factor >= 0.0) {
        return Err(invalid(format!("tolerance factor must be nonnegative, got {tol_factor}")));
    }
    let dt = horizon / steps as f64;
    let sigma = (q.kappa * dt).sqrt();
    let tol = tol_factor * sigma;
    let mut rng = rng::stream(seed, 0);
    let (mut ga, mut gc, mut u) = (q.a, q.c, 0.0);
    for _ in 0..steps {
        let s = ElementarySlit { u, delta: dt };
        ga = slit_forward_real(ga, &s, Side::Left);
        gc = slit_forward_real(gc, &s, Side::Right);
        let z: f64 = rng.sample(StandardNormal);
        u += sigma * z;
        let ya = ga - u;
        let yc = gc - u;
        let hit_a = ya >= -tol;
        let hit_c = yc <= tol;
        match (hit_a, hit_c) {
            (false, false) => continue,
            (true, false) => return Ok(Resolution::Left),
            (false, true) => return Ok(Resolution::Right),
            (true, true) => {
                // only with a tolerance: the nearer one was reached first
                return Ok(if yc.abs() < ya.abs() {
                    Resolution::Right
                } else {
                    Resolution::Left
                });
            }
        }
    }
    Ok(Resolution::Unresolved)
}

/// Trial outcomes for trial seeds `derive_seed(seed, i)`, `i < n_traces`.
pub fn hitting_trials(q: &HittingQuery, n_traces: usize, steps: usize, horizon: f64, seed: u64) -> Result<Vec<Resolution>> {
    (0..n_traces)
        .map(|i| hitting_trial(q, steps, horizon, rng::derive_seed(seed, i as u64)))
        .collect()
}

/// Estimate from trial outcomes.
pub fn summarize_trials(q: &HittingQuery, outcomes: &[Resolution]) -> Result<HittingEstimate> {
    let right = outcomes.iter().filter(|r| **r == Resolution::Right).count();
    let unresolved = outcomes.iter().filter(|r| **r == Resolution::Unresolved).count();
    let n = outcomes.len() - unresolved;
    let p_hat = if n == 0 { 0.0 } else { right as f64 / n as f64 };
    let stderr = if n == 0 {
        0.0
    } else {
        (p_hat * (1.0 - p_hat) / n as f64).sqrt()
    };
    Ok(HittingEstimate {
        p_hat,
        stderr,
        n_traces: n,
        unresolved,
        f_theory: beffara_f(q.kappa, q.x())?,
        z_kappa: z_kappa(q.kappa)?,
    })
}

pub fn mc_hitting(q: &HittingQuery, n_traces: usize, steps: usize, horizon: f64, seed: u64) -> Result<HittingEstimate> {
    if n_traces == 0 {
        return Err(invalid("need at least one trial"));
    }
    summarize_trials(q, &hitting_trials(q, n_traces, steps, horizon, seed)?)
}

/// Geometric detection on a trace: which of the strips
/// `{Im z <= delta, Re z >= c}` and `{Im z <= delta, Re z <= a}` the
/// polyline enters first.
pub fn geometric_hitting(trace: &Trace, a: f64, c: f64, delta: f64) -> Resolution {
    for (z, _) in trace.polyline() {
        if z.im <= delta {
            if z.re >= c {
                return Resolution::Right;
            }
            if z.re <= a {
                return Resolution::Left;
            }
        }
    }
    Resolution::Unresolved
}
