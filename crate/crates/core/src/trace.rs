//! Trace reconstruction and elementary curve geometry.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::driving::DrivingPath;
use crate::error::{invalid, Result};
use crate::loewner::{slit_inverse, ComplexPoint};
use crate::zipper::PullbackTree;

/// Time-ordered samples of a curve in the closed upper half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub points: Vec<ComplexPoint>,
    pub kappa: f64,
    /// Number of slits applied before each sample (`times[i] = steps[i] * dt`).
    pub steps: Vec<usize>,
    /// Points where the growth jumps back to the earlier hull or to the real
    /// line, in time order. Empty unless computed with [`compute_curve`].
    #[serde(default)]
    pub contacts: Vec<Contact>,
}

/// Base point of a growth arc that is not attached at the current tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    /// Index of the last sample at or before the contact.
    pub after: usize,
    pub step: usize,
    pub time: f64,
    pub point: ComplexPoint,
}

impl Trace {
    /// Polyline with sample `i` at time `i`. Intended for constructed curves.
    pub fn from_polyline(points: Vec<ComplexPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("polyline needs at least one point"));
        }
        if points.iter().any(|p| p.im < 0.0 || !p.re.is_finite() || !p.im.is_finite()) {
            return Err(invalid("polyline points must lie in the closed upper half-plane"));
        }
        let n = points.len();
        Ok(Self {
            times: (0..n).map(|i| i as f64).collect(),
            points,
            kappa: f64::NAN,
            steps: (0..n).collect(),
            contacts: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples with `time <= t`.
    pub fn truncated(&self, t: f64) -> Trace {
        let n = self.times.partition_point(|&s| s <= t);
        Trace {
            times: self.times[..n].to_vec(),
            points: self.points[..n].to_vec(),
            kappa: self.kappa,
            steps: self.steps[..n].to_vec(),
            contacts: self.contacts.iter().filter(|c| c.time <= t && c.after + 1 < n).copied().collect(),
        }
    }

    /// The curve as a time-stamped polyline: samples with the contacts
    /// inserted in time order.
    pub fn polyline(&self) -> Vec<(ComplexPoint, f64)> {
        let mut out = Vec::with_capacity(self.points.len() + self.contacts.len());
        let mut contacts = self.contacts.iter().peekable();
        for i in 0..self.points.len() {
            out.push((self.points[i], self.times[i]));
            while let Some(c) = contacts.next_if(|c| c.after <= i) {
                out.push((c.point, c.time));
            }
        }
        out
    }

    /// Distances between consecutive samples.
    pub fn gaps(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    /// Median of the consecutive gaps (0 for fewer than two samples).
    pub fn median_gap(&self) -> f64 {
        let mut g = self.gaps();
        if g.is_empty() {
            return 0.0;
        }
        g.sort_by(f64::total_cmp);
        g[g.len() / 2]
    }

    /// Largest distance between samples with equal index.
    pub fn sup_distance(&self, other: &Trace) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn sample_indices(steps: usize, stride: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (0..=steps).step_by(stride).collect();
    if ks.last() != Some(&steps) {
        ks.push(steps);
    }
    ks
}

fn check_stride(stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(invalid("sample stride must be at least 1"));
    }
    Ok(())
}

/// Trace of the discrete Loewner chain at every `sample_stride`-th step
/// (the final step is always included).
///
/// After `k` steps the hull is the previous hull plus the preimage of the
/// last slit, whose tip `u_{k-1} + 2i sqrt(dt)` pulls back to the curve
/// point `eta(t_k)`; `eta(0) = 0`. Tips are evaluated through the
/// hierarchical [`PullbackTree`]. Points buried deep in fjords of the hull
/// are ill-conditioned for any pullback scheme.
pub fn compute_trace(path: &DrivingPath, sample_stride: usize) -> Result<Trace> {
    check_stride(sample_stride)?;
    let tree = PullbackTree::new(&path.slits());
    trace_from_tree(&tree, path, sample_stride)
}

pub(crate) fn trace_from_tree(tree: &PullbackTree, path: &DrivingPath, stride: usize) -> Result<Trace> {
    let ks = sample_indices(path.steps(), stride);
    let points = ks
        .iter()
        .map(|&k| tree.tip(k).map(clamp_half_plane))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        times: ks.iter().map(|&k| path.time(k)).collect(),
        points,
        kappa: path.kappa,
        steps: ks,
        contacts: Vec::new(),
    })
}

/// Tips at every `stride`-th step together with the contacts of the growth.
///
/// Arc `k` is the preimage of slit `k`; its base is the real driving value
/// `u_k` pulled back through the earlier slits. When the driving value moves
/// by more than the slit height, the base lies on the real line or on an
/// earlier part of the curve rather than at the current tip. Every base
/// farther than `jump` from the tip `eta(t_k)` is recorded as a contact, so
/// the polyline through samples and contacts closes the loops of the curve
/// where the hull swallows a region. `jump = 0` keeps every base.
///
/// Costs two pullbacks per step whatever the stride.
pub fn compute_curve(path: &DrivingPath, stride: usize, jump: f64) -> Result<Trace> {
    check_stride(stride)?;
    let tree = PullbackTree::new(&path.slits());
    curve_from_tree(&tree, path, stride, jump)
}

pub(crate) fn curve_from_tree(tree: &PullbackTree, path: &DrivingPath, stride: usize, jump: f64) -> Result<Trace> {
    let (tips, bases) = curve_samples(tree, path)?;
    assemble_curve(path, &tips, &bases, stride, jump)
}

/// Tips after every step and the bases of every arc.
pub(crate) fn curve_samples(tree: &PullbackTree, path: &DrivingPath) -> Result<(Vec<ComplexPoint>, Vec<ComplexPoint>)> {
    let n = path.steps();
    let tips = (0..=n)
        .map(|k| tree.tip(k).map(clamp_half_plane))
        .collect::<Result<Vec<_>>>()?;
    let bases = (0..n)
        .map(|k| {
            tree.pullback_range(Complex64::new(path.u[k], 0.0), 0, k)
                .map(clamp_half_plane)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tips, bases))
}

pub(crate) fn assemble_curve(
    path: &DrivingPath,
    tips: &[ComplexPoint],
    bases: &[ComplexPoint],
    stride: usize,
    jump: f64,
) -> Result<Trace> {
    check_stride(stride)?;
    if !(jump >= 0.0) {
        return Err(invalid(format!("jump threshold must be nonnegative, got {jump}")));
    }
    let ks = sample_indices(path.steps(), stride);
    let contacts = bases
        .iter()
        .enumerate()
        .filter(|&(k, b)| jump == 0.0 || (b - tips[k]).norm() > jump)
        .map(|(k, &b)| Contact {
            after: k / stride,
            step: k,
            time: path.time(k),
            point: b,
        })
        .collect();
    Ok(Trace {
        times: ks.iter().map(|&k| path.time(k)).collect(),
        points: ks.iter().map(|&k| tips[k]).collect(),
        kappa: path.kappa,
        steps: ks,
        contacts,
    })
}

/// Same samples as [`compute_trace`] by direct slit-by-slit pullback.
/// Quadratic in the number of steps; used as a reference.
pub fn compute_trace_exact(path: &DrivingPath, sample_stride: usize) -> Result<Trace> {
    check_stride(sample_stride)?;
    let slits = path.slits();
    let ks = sample_indices(path.steps(), sample_stride);
    let points = ks
        .iter()
        .map(|&k| {
            if k == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let w = slits[k - 1].tip();
            clamp_half_plane(slits[..k - 1].iter().rev().fold(w, |w, s| slit_inverse(w, s)))
        })
        .collect();
    Ok(Trace {
        times: ks.iter().map(|&k| path.time(k)).collect(),
        points,
        kappa: path.kappa,
        steps: ks,
        contacts: Vec::new(),
    })
}

#[inline]
fn clamp_half_plane(z: Complex64) -> Complex64 {
    Complex64::new(z.re, z.im.max(0.0))
}

fn cross(o: ComplexPoint, a: ComplexPoint, b: ComplexPoint) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull in counter-clockwise order (monotone chain), without
/// collinear points.
pub fn convex_hull(points: &[ComplexPoint]) -> Vec<ComplexPoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<ComplexPoint> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &ComplexPoint>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Maximum pairwise Euclidean distance, via convex hull and rotating
/// calipers. Zero for a single point.
pub fn diameter(points: &[ComplexPoint]) -> f64 {
    let hull = convex_hull(points);
    let h = hull.len();
    match h {
        0 | 1 => 0.0,
        2 => (hull[0] - hull[1]).norm(),
        _ => {
            let mut best: f64 = 0.0;
            let mut j = 1;
            for i in 0..h {
                let ni = (i + 1) % h;
                while cross(hull[i], hull[ni], hull[(j + 1) % h]) > cross(hull[i], hull[ni], hull[j]) {
                    j = (j + 1) % h;
                }
                best = best.max((hull[i] - hull[j]).norm()).max((hull[ni] - hull[j]).norm());
            }
            best
        }
    }
}
