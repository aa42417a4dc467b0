//! Driving processes: `sqrt(kappa) B_t` and the SLE(kappa; rho) system.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SleError};
use crate::loewner::{slit_forward_real, ConformalChain, ElementarySlit, Side};
use crate::rng;

/// Maximum drift increment per step, in units of the collision scale
/// `sqrt(kappa dt)`.
const STABILITY: f64 = 4.0;

/// A marked boundary point with weight `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcePoint {
    pub x: f64,
    pub rho: f64,
    pub side: Side,
}

impl ForcePoint {
    pub fn new(x: f64, rho: f64, side: Side) -> Result<Self> {
        if !x.is_finite() || !rho.is_finite() {
            return Err(invalid("force point location and weight must be finite"));
        }
        let ok = match side {
            Side::Left => x <= 0.0,
            Side::Right => x >= 0.0,
        };
        if !ok {
            return Err(invalid(format!("force point {x} is on the wrong side of 0")));
        }
        Ok(Self { x, rho, side })
    }

    pub fn left(x: f64, rho: f64) -> Result<Self> {
        Self::new(x, rho, Side::Left)
    }

    pub fn right(x: f64, rho: f64) -> Result<Self> {
        Self::new(x, rho, Side::Right)
    }
}

/// Sampled driving function on a uniform capacity-time grid.
///
/// `u[j]` is the driving value at time `j * dt`; `v[i][j]` is the image of
/// force point `i` at the same time. Sampling stops early at the
/// continuation threshold, so all arrays may be shorter than `steps + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub kappa: f64,
    pub dt: f64,
    pub u: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub force_points: Vec<ForcePoint>,
    pub noise_seed: u64,
    /// Number of step doublings applied to the base noise stream.
    pub refinement: u32,
    pub continuation_time: Option<f64>,
    /// Steps at which some surviving force point came within the collision
    /// tolerance of the driving value (after having been farther away).
    pub collisions: usize,
}

impl DrivingPath {
    /// Path from explicit samples; no force point dynamics are checked.
    pub fn from_samples(kappa: f64, dt: f64, u: Vec<f64>) -> Result<Self> {
        check_kappa_dt(kappa, dt)?;
        if u.is_empty() {
            return Err(invalid("driving path needs at least one sample"));
        }
        Ok(Self {
            kappa,
            dt,
            u,
            v: Vec::new(),
            force_points: Vec::new(),
            noise_seed: 0,
            refinement: 0,
            continuation_time: None,
            collisions: 0,
        })
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.u.len() - 1
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    /// Collision tolerance `sqrt(kappa dt)`.
    pub fn collision_tolerance(&self) -> f64 {
        (self.kappa * self.dt).sqrt()
    }

    /// Slit `j` is driven by `u[j]` over `[j dt, (j+1) dt]`.
    pub fn slits(&self) -> Vec<ElementarySlit> {
        self.u[..self.steps()]
            .iter()
            .map(|&u| ElementarySlit { u, delta: self.dt })
            .collect()
    }

    pub fn chain(&self) -> ConformalChain {
        ConformalChain::from_slits(self.slits())
    }
}

fn check_kappa_dt(kappa: f64, dt: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

fn check_grid(kappa: f64, horizon: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let dt = horizon / steps as f64;
    check_kappa_dt(kappa, dt)?;
    Ok(dt)
}

/// Plain SLE driving `U_t = sqrt(kappa) B_t` with `U_0 = 0`.
pub fn sample_sle_driving(kappa: f64, horizon: f64, steps: usize, seed: u64) -> Result<DrivingPath> {
    let dt = check_grid(kappa, horizon, steps)?;
    let sigma = (kappa * dt).sqrt();
    let mut u = Vec::with_capacity(steps + 1);
    u.push(0.0);
    let mut x = 0.0;
    for z in rng::standard_normals(seed, 0, steps) {
        x += sigma * z;
        u.push(x);
    }
    Ok(DrivingPath {
        kappa,
        dt,
        u,
        v: Vec::new(),
        force_points: Vec::new(),
        noise_seed: seed,
        refinement: 0,
        continuation_time: None,
        collisions: 0,
    })
}

/// Halves the time step of a plain driving path by Brownian bridge
/// interpolation: each coarse increment `D` splits into
/// `D/2 + s z` and `D/2 - s z` with `s = sqrt(kappa dt / 4)` and `z` drawn
/// from the stream of the new refinement level. The coarse samples are
/// kept exactly at every other fine index.
pub fn refine(path: &DrivingPath) -> Result<DrivingPath> {
    if !path.force_points.is_empty() {
        return Err(invalid("refinement is defined for plain driving paths only"));
    }
    let level = path.refinement + 1;
    let steps = path.steps();
    let s = (path.kappa * path.dt / 4.0).sqrt();
    let z = rng::standard_normals(path.noise_seed, u64::from(level), steps);
    let mut u = Vec::with_capacity(2 * steps + 1);
    u.push(path.u[0]);
    for j in 0..steps {
        let (a, b) = (path.u[j], path.u[j + 1]);
        u.push(0.5 * (a + b) + s * z[j]);
        u.push(b);
    }
    Ok(DrivingPath {
        dt: path.dt / 2.0,
        u,
        refinement: level,
        ..path.clone()
    })
}

/// Plain driving at `steps * 2^levels` steps, obtained by refining the
/// `steps`-step path `levels` times.
pub fn sample_sle_driving_refined(
    kappa: f64,
    horizon: f64,
    steps: usize,
    levels: u32,
    seed: u64,
) -> Result<DrivingPath> {
    let mut path = sample_sle_driving(kappa, horizon, steps, seed)?;
    for _ in 0..levels {
        path = refine(&path)?;
    }
    Ok(path)
}

/// Force points sorted outward on each side with cumulative weights.
struct Ordered {
    points: Vec<ForcePoint>,
    partial: Vec<f64>,
    /// Index of the next force point outward on the same side.
    outer: Vec<Option<usize>>,
}

fn order_force_points(fps: &[ForcePoint]) -> Ordered {
    let mut points = Vec::with_capacity(fps.len());
    let mut left: Vec<_> = fps.iter().filter(|f| f.side == Side::Left).copied().collect();
    let mut right: Vec<_> = fps.iter().filter(|f| f.side == Side::Right).copied().collect();
    left.sort_by(|a, b| b.x.total_cmp(&a.x));
    right.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut partial = Vec::with_capacity(fps.len());
    let mut outer = Vec::with_capacity(fps.len());
    for group in [left, right] {
        let mut sum = 0.0;
        let n = group.len();
        for (k, f) in group.into_iter().enumerate() {
            sum += f.rho;
            partial.push(sum);
            outer.push((k + 1 < n).then(|| points.len() + 1));
            points.push(f);
        }
    }
    Ordered {
        points,
        partial,
        outer,
    }
}

/// Euler–Maruyama scheme for
/// `dU = sqrt(kappa) dB + sum_i rho_i / (U - V_i) dt`,
/// `dV_i = 2 / (V_i - U) dt`.
///
/// Force points move by the exact slit map of each step, which never lets
/// them cross the slit base. The drift uses the gap clamped below at
/// `eps = sqrt(kappa dt)`. When the Brownian step carries `U` past a force
/// point whose cumulative weight exceeds -2, the gap is reflected (the force
/// point is placed at the mirror distance on its own side), which leaves the
/// noise of `U` untouched. When the gap closes to `eps` at a point whose
/// cumulative weight is at most -2, the continuation threshold is recorded
/// and sampling stops.
///
/// Force points are stored sorted outward on each side, left side first.
pub fn sample_sle_rho_driving(
    kappa: f64,
    fps: &[ForcePoint],
    horizon: f64,
    steps: usize,
    seed: u64,
) -> Result<DrivingPath> {
    let dt = check_grid(kappa, horizon, steps)?;
    let ord = order_force_points(fps);
    let n = ord.points.len();
    let sigma = (kappa * dt).sqrt();
    let eps = sigma;
    let bound = STABILITY * eps;

    let mut u = Vec::with_capacity(steps + 1);
    let mut v: Vec<Vec<f64>> = ord.points.iter().map(|f| vec![f.x]).collect();
    let mut cur_u = 0.0;
    let mut cur_v: Vec<f64> = ord.points.iter().map(|f| f.x).collect();
    u.push(cur_u);

    let mut path = DrivingPath {
        kappa,
        dt,
        u: Vec::new(),
        v: Vec::new(),
        force_points: ord.points.clone(),
        noise_seed: seed,
        refinement: 0,
        continuation_time: None,
        collisions: 0,
    };

    let threshold_hit = |cu: f64, cv: &[f64]| -> bool {
        (0..n).any(|i| ord.partial[i] <= -2.0 && (cu - cv[i]).abs() <= eps)
    };

    if threshold_hit(cur_u, &cur_v) {
        path.continuation_time = Some(0.0);
        path.u = u;
        path.v = v;
        return Ok(path);
    }

    let mut near: Vec<bool> = cur_v.iter().map(|&x| (x - cur_u).abs() <= eps).collect();
    let mut rng = rng::stream(seed, 0);
    for step in 0..steps {
        let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
        let mut drift = 0.0;
        for i in 0..n {
            let rho = ord.points[i].rho;
            if rho != 0.0 {
                let gap = (cur_u - cur_v[i]).abs().max(eps);
                drift += rho / (-ord.points[i].side.sign() * gap);
            }
        }
        let increment = drift * dt;
        if increment.abs() > bound {
            return Err(SleError::StepSize {
                step,
                increment: increment.abs(),
                bound,
            });
        }
        let slit = ElementarySlit { u: cur_u, delta: dt };
        let next_u = cur_u + sigma * z + increment;
        for i in 0..n {
            cur_v[i] = slit_forward_real(cur_v[i], &slit, ord.points[i].side);
        }
        cur_u = next_u;

        let mut stop = false;
        for i in 0..n {
            let side = ord.points[i].side.sign();
            let signed_gap = side * (cur_v[i] - cur_u);
            if ord.partial[i] <= -2.0 {
                if signed_gap <= eps {
                    stop = true;
                    if signed_gap < 0.0 {
                        cur_v[i] = cur_u;
                    }
                }
            } else if signed_gap < 0.0 {
                cur_v[i] = cur_u - signed_gap * side;
            }
        }
        // keep same-side force points ordered after reflections
        for i in 0..n {
            if let Some(o) = ord.outer[i] {
                let side = ord.points[i].side.sign();
                if side * (cur_v[o] - cur_v[i]) < 0.0 {
                    cur_v[o] = cur_v[i];
                }
            }
        }
        for i in 0..n {
            let close = (cur_v[i] - cur_u).abs() <= eps;
            if close && !near[i] && ord.partial[i] > -2.0 {
                path.collisions += 1;
            }
            near[i] = close;
        }
        u.push(cur_u);
        for (vi, &x) in v.iter_mut().zip(&cur_v) {
            vi.push(x);
        }
        if stop {
            path.continuation_time = Some((step + 1) as f64 * dt);
            break;
        }
    }
    path.u = u;
    path.v = v;
    Ok(path)
}

/// Earliest grid time at which the driving value is within the collision
/// tolerance of a force point whose cumulative weight is at most -2.
pub fn detect_continuation_threshold(path: &DrivingPath, fps: &[ForcePoint]) -> Option<f64> {
    let ord = order_force_points(fps);
    let eps = path.collision_tolerance();
    if ord.points.len() != path.v.len() {
        return None;
    }
    (0..path.u.len()).find_map(|j| {
        let hit = (0..ord.points.len())
            .any(|i| ord.partial[i] <= -2.0 && (path.u[j] - path.v[i][j]).abs() <= eps);
        hit.then(|| path.time(j))
    })
}
