//! Left-right crossings of a trace around the origin.
//!
//! A sample of the trace hits the real line when it lies within `delta` of it
//! and farther than `delta0` from the origin. The crossing times `tau_j` are
//! the first hits on the opposite half-axis from the previous hit; the
//! excursion `j` is the trace on `[tau_{j-1}, tau_j]` with `tau_0 = 0`.
//!
//! For a selected excursion `J`, the marked points are the images under
//! `g_{tau_J} - U_{tau_J}` of the excursion's tips that are still on the left
//! frontier of the hull at time `tau_J`; they are real and negative. The
//! future curve, re-based at `tau_J` by the domain Markov property, lands on
//! the negative axis at its own crossing endpoints, which are binned between
//! consecutive marked points.

use serde::{Deserialize, Serialize};

use crate::driving::DrivingPath;
use crate::error::{invalid, Result, SleError};
use crate::loewner::{slit_forward_real, ComplexPoint, ConformalChain, ElementarySlit, Side};
use crate::trace::{curve_from_tree, diameter, Contact, Trace};
use crate::zipper::PullbackTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingTimes {
    pub taus: Vec<f64>,
    /// Sign of the half-axis hit at `taus[j]`: `+1` for a crossing from the
    /// negative to the positive side.
    pub sides: Vec<i8>,
    /// Real part of the hit sample at `taus[j]`.
    pub endpoints: Vec<f64>,
    pub tol_axis: f64,
    pub tol_origin: f64,
}

impl CrossingTimes {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// `[tau_{j-1}, tau_j]` for the 1-based excursion index `j`.
    pub fn interval(&self, j: usize) -> Option<(f64, f64)> {
        if j == 0 || j > self.taus.len() {
            return None;
        }
        let start = if j == 1 { 0.0 } else { self.taus[j - 2] };
        Some((start, self.taus[j - 1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    /// 1-based crossing index.
    pub j: usize,
    pub interval: (f64, f64),
    pub diam: f64,
    /// Half-axis hit at the end of the excursion (`+1` or `-1`).
    pub side: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointSet {
    pub j: usize,
    /// Marked points `X_{J,k}` in order of first landing.
    pub xs: Vec<f64>,
    pub sigma_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVector {
    /// `counts[k]` = number of future endpoints in `[xs[k], xs[k + 1]]`.
    pub counts: Vec<usize>,
    /// Future endpoints outside every interval.
    pub outside: usize,
    /// Future endpoints on the marked side (mirrored if needed), in time order.
    pub endpoints: Vec<f64>,
    pub horizon: f64,
}

/// Default tolerances: `delta` is four median sample gaps and
/// `delta0 = 2 delta`.
pub fn default_tolerances(trace: &Trace) -> (f64, f64) {
    let delta = 4.0 * trace.median_gap();
    (delta, 2.0 * delta)
}

pub fn crossing_times(trace: &Trace, delta: f64, delta0: f64) -> Result<CrossingTimes> {
    if !(delta > 0.0 && delta0 > 0.0) {
        return Err(invalid(format!(
            "tolerances must be positive, got delta = {delta}, delta0 = {delta0}"
        )));
    }
    let mut ct = CrossingTimes {
        taus: Vec::new(),
        sides: Vec::new(),
        endpoints: Vec::new(),
        tol_axis: delta,
        tol_origin: delta0,
    };
    let mut last: Option<i8> = None;
    for (z, t) in trace.polyline() {
        if z.im > delta || z.re.abs() <= delta0 {
            continue;
        }
        let side = if z.re > 0.0 { 1 } else { -1 };
        if last.is_some_and(|s| s != side) {
            ct.taus.push(t);
            ct.sides.push(side);
            ct.endpoints.push(z.re);
        }
        last = Some(side);
    }
    Ok(ct)
}

/// Every excursion with its diameter.
pub fn excursions(ct: &CrossingTimes, trace: &Trace) -> Vec<ExcursionRecord> {
    let poly = trace.polyline();
    (1..=ct.len())
        .map(|j| {
            let (a, b) = ct.interval(j).expect("index in range");
            let pts: Vec<ComplexPoint> = poly
                .iter()
                .filter(|(_, t)| *t >= a && *t <= b)
                .map(|(z, _)| *z)
                .collect();
            ExcursionRecord {
                j,
                interval: (a, b),
                diam: if pts.is_empty() { 0.0 } else { diameter(&pts) },
                side: ct.sides[j - 1],
            }
        })
        .collect()
}

/// The `n`-th excursion (in time order) of diameter at least `r`. Each
/// diameter is computed from samples up to the end of its own excursion.
pub fn select_excursion(ct: &CrossingTimes, trace: &Trace, r: f64, n: usize) -> Result<ExcursionRecord> {
    if !(r > 0.0) || n == 0 {
        return Err(invalid(format!("need r > 0 and n >= 1, got r = {r}, n = {n}")));
    }
    excursions(ct, trace)
        .into_iter()
        .filter(|e| e.diam >= r)
        .nth(n - 1)
        .ok_or_else(|| SleError::NotFound(format!("fewer than {n} excursions of diameter >= {r}")))
}

/// Variant of [`select_excursion`] taking the diameters directly.
pub fn select_by_diameter(diams: &[f64], r: f64, n: usize) -> Result<usize> {
    if !(r > 0.0) || n == 0 {
        return Err(invalid(format!("need r > 0 and n >= 1, got r = {r}, n = {n}")));
    }
    diams
        .iter()
        .enumerate()
        .filter(|(_, &d)| d >= r)
        .nth(n - 1)
        .map(|(i, _)| i + 1)
        .ok_or_else(|| SleError::NotFound(format!("fewer than {n} excursions of diameter >= {r}")))
}

fn step_of(path: &DrivingPath, t: f64) -> usize {
    ((t / path.dt).round() as usize).min(path.steps())
}

/// Marked points of excursion `exc`: each tip `eta(t_s)`, `s` in
/// `(tau_{J-1}, tau_J]`, is followed as the left prime end of the real point
/// `U_s` through slits `s..J`; a point is dropped once the driving value
/// passes it (it has been swallowed or left the left frontier). Surviving
/// images below `-delta0` are clustered at separation `eps_sep`; each
/// cluster is represented by its earliest member.
///
/// Only an excursion ending on the positive half-axis leaves its own tips on
/// the left frontier. An excursion ending on the negative half-axis is
/// handled in the mirror image `x -> -x`, which maps SLE to SLE: right prime
/// ends are followed and the images are negated, so `xs` is negative in both
/// cases.
pub fn marked_points(path: &DrivingPath, exc: &ExcursionRecord, eps_sep: f64, delta0: f64) -> Result<MarkedPointSet> {
    if !(eps_sep > 0.0 && delta0 > 0.0) {
        return Err(invalid(format!(
            "need eps_sep > 0 and delta0 > 0, got {eps_sep}, {delta0}"
        )));
    }
    let mirror = if exc.side < 0 { -1.0 } else { 1.0 };
    let side = if exc.side < 0 { Side::Right } else { Side::Left };
    let s0 = step_of(path, exc.interval.0);
    let end = step_of(path, exc.interval.1);
    let slits = path.slits();
    let mut active: Vec<(usize, f64)> = Vec::new();
    for k in s0 + 1..end {
        active.push((k, path.u[k]));
        let s = &slits[k];
        let next = path.u[k + 1];
        active.retain_mut(|(_, x)| {
            *x = slit_forward_real(*x, s, side);
            mirror * (*x - next) < 0.0
        });
    }
    let u_end = path.u[end];
    let mut landed: Vec<(usize, f64)> = active
        .into_iter()
        .map(|(k, x)| (k, mirror * (x - u_end)))
        .filter(|&(_, w)| w < -delta0)
        .collect();
    landed.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut clusters: Vec<(usize, f64)> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for (k, w) in landed {
        match clusters.last_mut() {
            Some(c) if w - prev <= eps_sep => {
                if k < c.0 {
                    *c = (k, w);
                }
            }
            _ => clusters.push((k, w)),
        }
        prev = w;
    }
    clusters.sort_by_key(|c| c.0);
    Ok(MarkedPointSet {
        j: exc.j,
        xs: clusters.iter().map(|c| c.1).collect(),
        sigma_times: clusters.iter().map(|c| path.time(c.0)).collect(),
    })
}

/// The curve after step `from`, re-based as a chordal trace from 0: tip `k`
/// is `g_{t_from}(eta(t_k)) - U_{t_from}`, for `k` up to `from + steps`,
/// with every arc base kept as a contact.
pub fn future_trace(tree: &PullbackTree, path: &DrivingPath, from: usize, steps: usize) -> Result<Trace> {
    let n = path.steps();
    if from > n {
        return Err(invalid(format!("start step {from} beyond path of {n} steps")));
    }
    let to = (from + steps).min(n);
    let slits = tree.slits();
    let shift = ComplexPoint::new(path.u[from], 0.0);
    let rebase = |z: ComplexPoint| {
        let z = z - shift;
        ComplexPoint::new(z.re, z.im.max(0.0))
    };
    let points = (from..=to)
        .map(|k| {
            if k == from {
                return Ok(ComplexPoint::new(0.0, 0.0));
            }
            Ok(rebase(tree.pullback_range(slits[k - 1].tip(), from, k - 1)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let contacts = (from..to)
        .map(|k| {
            let b = tree.pullback_range(ComplexPoint::new(path.u[k], 0.0), from, k)?;
            Ok(Contact {
                after: k - from,
                step: k - from,
                time: path.time(k - from),
                point: rebase(b),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        times: (from..=to).map(|k| path.time(k - from)).collect(),
        points,
        kappa: path.kappa,
        steps: (0..=to - from).collect(),
        contacts,
    })
}

/// Bins the crossing endpoints of the re-based future curve over
/// `future_horizon` capacity time after `tau_J` between consecutive marked
/// points. Endpoints on the negative half-axis are used, or on the positive
/// half-axis negated when the excursion is mirrored (see [`marked_points`]).
pub fn crossing_counts(
    tree: &PullbackTree,
    path: &DrivingPath,
    exc: &ExcursionRecord,
    mps: &MarkedPointSet,
    future_horizon: f64,
    delta: f64,
    delta0: f64,
) -> Result<CountVector> {
    if !(future_horizon >= 0.0) {
        return Err(invalid(format!("future horizon must be nonnegative, got {future_horizon}")));
    }
    let from = step_of(path, exc.interval.1);
    let steps = (future_horizon / path.dt).round() as usize;
    let future = future_trace(tree, path, from, steps)?;
    let ct = crossing_times(&future, delta, delta0)?;
    let endpoints: Vec<f64> = ct
        .sides
        .iter()
        .zip(&ct.endpoints)
        .filter(|(&s, _)| s == -exc.side)
        .map(|(_, &x)| x * f64::from(exc.side))
        .collect();
    Ok(bin_endpoints(&mps.xs, endpoints, future_horizon))
}

/// `counts[k]` = number of endpoints in `[xs[k], xs[k+1]]` (the first
/// matching interval when an endpoint sits on a shared boundary).
pub fn bin_endpoints(xs: &[f64], endpoints: Vec<f64>, horizon: f64) -> CountVector {
    let mut counts = vec![0; xs.len().saturating_sub(1)];
    let mut outside = 0;
    for &e in &endpoints {
        match xs
            .windows(2)
            .position(|w| e >= w[0].min(w[1]) && e <= w[0].max(w[1]))
        {
            Some(k) => counts[k] += 1,
            None => outside += 1,
        }
    }
    CountVector {
        counts,
        outside,
        endpoints,
        horizon,
    }
}

/// Length of the image of `[a, b]` under the chain's map `g`, i.e. the
/// harmonic measure from infinity of the boundary arc between the two
/// points (times pi). Endpoints on the hull base follow the outer prime
/// ends.
pub fn harmonic_measure_from_infinity(chain: &ConformalChain, interval: (f64, f64)) -> Result<f64> {
    let (a, b) = interval;
    if !(a <= b) {
        return Err(invalid(format!("interval [{a}, {b}] is empty")));
    }
    if let Some((lo, hi)) = chain.hull_base() {
        for x in [a, b] {
            if x > lo && x < hi {
                return Err(SleError::InsideHullBase(x));
            }
        }
    }
    let n = chain.len();
    Ok(chain.forward_real(b, Side::Right, 0, n)? - chain.forward_real(a, Side::Left, 0, n)?)
}

/// Everything the crossing observable needs for one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub crossings: CrossingTimes,
    pub excursion: ExcursionRecord,
    pub marked: MarkedPointSet,
    pub counts: CountVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingParams {
    pub r: f64,
    pub n: usize,
    pub eps_sep: f64,
    /// Future window in capacity time; `None` runs to the end of the path.
    pub future_horizon: Option<f64>,
    /// Tolerance overrides; `None` takes [`default_tolerances`].
    pub delta: Option<f64>,
    pub delta0: Option<f64>,
}

impl Default for CrossingParams {
    fn default() -> Self {
        Self {
            r: 0.05,
            n: 1,
            eps_sep: 0.01,
            future_horizon: None,
            delta: None,
            delta0: None,
        }
    }
}

/// Full pipeline: curve at every step with all arc bases, crossings with
/// the default tolerances, `J = J_r^{(n)}`, marked points and future counts.
pub fn crossing_report(path: &DrivingPath, params: &CrossingParams) -> Result<CrossingReport> {
    let slits: Vec<ElementarySlit> = path.slits();
    let tree = PullbackTree::new(&slits);
    let trace = curve_from_tree(&tree, path, 1, 0.0)?;
    let (d, d0) = default_tolerances(&trace);
    let delta = params.delta.unwrap_or(d);
    let delta0 = params.delta0.unwrap_or(d0);
    let crossings = crossing_times(&trace, delta, delta0)?;
    let excursion = select_excursion(&crossings, &trace, params.r, params.n)?;
    let marked = marked_points(path, &excursion, params.eps_sep, delta0)?;
    let horizon = params
        .future_horizon
        .unwrap_or(path.horizon() - excursion.interval.1)
        .max(0.0);
    let counts = crossing_counts(&tree, path, &excursion, &marked, horizon, delta, delta0)?;
    Ok(CrossingReport {
        crossings,
        excursion,
        marked,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::sample_sle_driving;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn fixture_crossings() {
        let tr = crate::fixtures::crossing_zigzag();
        let ct = crossing_times(&tr, 1e-9, 0.1).unwrap();
        assert_eq!(ct.sides, vec![1, -1]);
        assert_eq!(ct.endpoints, vec![1.0, -2.0]);
        assert!(ct.taus[0] < ct.taus[1]);
        let ex = excursions(&ct, &tr);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].interval.0, 0.0);
        assert_eq!(ex[1].interval, (ct.taus[0], ct.taus[1]));
    }

    #[test]
    fn vertical_segment_has_no_crossings() {
        let path = DrivingPath::from_samples(1.0, 1e-3, vec![0.0; 1001]).unwrap();
        let tr = crate::trace::compute_trace(&path, 1).unwrap();
        let (d, d0) = default_tolerances(&tr);
        assert!(crossing_times(&tr, d, d0).unwrap().is_empty());
        assert!(crossing_times(&tr, 0.0, d0).is_err());
    }

    #[test]
    fn selection_by_diameter() {
        let diams = [0.2, 1.1, 0.9, 1.3];
        assert_eq!(select_by_diameter(&diams, 1.0, 1).unwrap(), 2);
        assert_eq!(select_by_diameter(&diams, 1.0, 2).unwrap(), 4);
        assert!(matches!(select_by_diameter(&diams, 2.0, 1), Err(SleError::NotFound(_))));
        assert!(select_by_diameter(&diams, 0.0, 1).is_err());
    }

    #[test]
    fn binning() {
        let cv = bin_endpoints(&[-1.0, -0.4, -0.1], vec![-0.9, -0.35, -0.3], 1.0);
        assert_eq!(cv.counts, vec![1, 2]);
        assert_eq!(cv.outside, 0);
        let cv = bin_endpoints(&[-1.0, -0.4, -0.1], vec![-2.0, -0.05], 1.0);
        assert_eq!(cv.counts, vec![0, 0]);
        assert_eq!(cv.outside, 2);
        assert_eq!(bin_endpoints(&[-1.0, -0.4], vec![], 1.0).counts, vec![0]);
    }

    #[test]
    fn harmonic_measure_examples() {
        let empty = ConformalChain::new();
        assert_eq!(harmonic_measure_from_infinity(&empty, (0.0, 1.0)).unwrap(), 1.0);
        let one = ConformalChain::from_slits(vec![ElementarySlit::new(0.0, 1.0).unwrap()]);
        let m = harmonic_measure_from_infinity(&one, (1.0, 2.0)).unwrap();
        assert!((m - (8f64.sqrt() - 5f64.sqrt())).abs() < 1e-14);
        assert!((harmonic_measure_from_infinity(&one, (0.0, 0.0)).unwrap() - 4.0).abs() < 1e-14);
        let two = sample_sle_driving(6.0, 1.0, 2000, 1).unwrap().chain();
        let (lo, hi) = two.hull_base().unwrap();
        assert!(lo < hi);
        assert!(matches!(
            harmonic_measure_from_infinity(&two, (0.5 * (lo + hi), 5.0)),
            Err(SleError::InsideHullBase(_))
        ));
    }

    #[test]
    fn marked_points_of_engineered_path() {
        // The driving value drifts right in three bursts, so the left prime
        // ends of the tips at the start of each burst stay on the left
        // frontier and end up at decreasing distances from the final tip.
        let dt: f64 = 1e-4;
        let mut u = vec![0.0];
        for (len, speed) in [(200, 6.0), (200, 6.0), (200, 6.0)] {
            for _ in 0..len {
                let last = *u.last().unwrap();
                u.push(last + speed * dt.sqrt());
            }
        }
        let path = DrivingPath::from_samples(8.0, dt, u).unwrap();
        let exc = ExcursionRecord {
            j: 1,
            interval: (0.0, path.horizon()),
            diam: 1.0,
            side: 1,
        };
        let mp = marked_points(&path, &exc, 1e-3, 1e-3).unwrap();
        assert!(!mp.xs.is_empty());
        assert!(mp.xs.windows(2).all(|w| w[0] < w[1]), "{:?}", mp.xs);
        assert!(mp.xs.iter().all(|&x| x < -1e-3));
        assert!(mp.sigma_times.windows(2).all(|w| w[0] < w[1]));

        let neg: Vec<f64> = path.u.iter().map(|x| -x).collect();
        let mirrored = DrivingPath::from_samples(8.0, dt, neg).unwrap();
        let exc = ExcursionRecord { side: -1, ..exc };
        let mm = marked_points(&mirrored, &exc, 1e-3, 1e-3).unwrap();
        assert_eq!(mm.sigma_times, mp.sigma_times);
        for (a, b) in mm.xs.iter().zip(&mp.xs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tip_maps_to_driving_value() {
        let path = sample_sle_driving(8.0, 1.0, 2000, 3).unwrap();
        let tree = PullbackTree::new(&path.slits());
        let future = future_trace(&tree, &path, 700, 0).unwrap();
        assert_eq!(future.points, vec![c(0.0, 0.0)]);
        // the re-based future curve equals the trace of the shifted driving
        let shifted: Vec<f64> = path.u[700..].iter().map(|x| x - path.u[700]).collect();
        let rebased = DrivingPath::from_samples(8.0, path.dt, shifted).unwrap();
        let direct = crate::trace::compute_curve(&rebased, 1, 0.0).unwrap();
        let future = future_trace(&tree, &path, 700, 1300).unwrap();
        assert!(future.sup_distance(&direct) < 1e-8);
        assert_eq!(future.times, direct.times);
        assert_eq!(future.contacts.len(), direct.contacts.len());
        let worst = future
            .contacts
            .iter()
            .zip(&direct.contacts)
            .map(|(a, b)| (a.point - b.point).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn report_runs_on_a_kappa8_path() {
        let path = sample_sle_driving(8.0, 1.0, 5000, 21).unwrap();
        let params = CrossingParams::default();
        let rep = crossing_report(&path, &params).map_err(|e| e.to_string()).unwrap();
        let ct = &rep.crossings;
        assert!(ct.sides.windows(2).all(|w| w[0] != w[1]));
        assert!(ct.taus.windows(2).all(|w| w[0] < w[1]));
        let total = rep.counts.counts.iter().sum::<usize>() + rep.counts.outside;
        assert_eq!(total, rep.counts.endpoints.len());
    }
}
