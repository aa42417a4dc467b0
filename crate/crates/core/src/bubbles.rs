//! Bubble decomposition of a finite trace.
//!
//! The region between the left and right boundaries of the curve is the
//! filled hull with the pockets that the curve cuts off against the real
//! line removed: a pocket under the curve on the negative axis lies to the
//! left of the left boundary, one on the positive axis to the right of the
//! right boundary. Bubbles are the pieces of that region between
//! consecutive points where the two boundaries touch.
//!
//! Everything is computed on a pixel grid:
//!
//! 1. the polyline (tips and contacts) is drawn as an 8-connected raster
//!    line, each pixel remembering the earliest segment that crossed it;
//! 2. free pixels are split into 4-connected components; those reaching the
//!    left, right or top edge of the grid form the unbounded domain, which a
//!    shortest 4-connected path from the tip to the top edge cuts into a left
//!    and a right part;
//! 3. free components touching the first row only left (right) of the
//!    origin are pockets and join the left (right) part;
//! 4. the remaining pixels (curve and enclosed holes) within a few pixels of
//!    both parts are pinch pixels; the 4-connected components of what is
//!    left, if they enclose at least a few hole pixels, are the bubbles.
//!
//! A bubble touches the negative (positive) axis when it owns a pixel in the
//! first rows left (right) of the origin.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{invalid, Result, SleError};
use crate::loewner::ComplexPoint;
use crate::driving::DrivingPath;
use crate::trace::{assemble_curve, curve_samples, diameter, Trace};
use crate::zipper::PullbackTree;

/// Diameter a type-3 bubble needs to serve as the anchor `U_0`.
pub const ANCHOR_DIAMETER: f64 = 1.0;

/// Free pixels kept around the curve's bounding box.
const MARGIN_PIXELS: f64 = 8.0;

/// Closed rectangle `[x_min, x_max] x [0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Default for BoundingBox {
    fn default() -> Self {
        Self {
            x_min: -8.0,
            x_max: 8.0,
            y_max: 8.0,
        }
    }
}

impl BoundingBox {
    pub fn contains(&self, z: ComplexPoint) -> bool {
        z.re >= self.x_min && z.re <= self.x_max && z.im >= 0.0 && z.im <= self.y_max
    }
}

/// Tuning of the raster classification, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Minimum number of enclosed (non-curve) pixels of a bubble.
    pub min_hole_pixels: usize,
    /// Rows above the real axis that count as touching it.
    pub touch_rows: usize,
    /// A pixel is a pinch pixel when its distances to the left and right
    /// parts add up to at most this value.
    pub pinch_width: u32,
}

impl Default for BubbleParams {
    fn default() -> Self {
        Self {
            min_hole_pixels: 4,
            touch_rows: 2,
            pinch_width: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub order_index: usize,
    pub type_code: u8,
    pub diameter: f64,
    pub touches_negative_axis: bool,
    pub touches_positive_axis: bool,
    pub component_id: u32,
    /// Earliest curve time adjacent to the bubble.
    pub formation_time: f64,
    pub pixels: usize,
    pub hole_pixels: usize,
}

/// Type code from the axis contacts: `(F,F) -> 0`, `(F,T) -> 1`,
/// `(T,F) -> 2`, `(T,T) -> 3` with the negative axis first.
pub fn type_code(touches_negative: bool, touches_positive: bool) -> u8 {
    match (touches_negative, touches_positive) {
        (false, false) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (true, true) => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BubbleSequence {
    pub bubbles: Vec<Bubble>,
    /// Index into `bubbles` of the first type-3 bubble of diameter at least
    /// [`ANCHOR_DIAMETER`].
    pub anchor: Option<usize>,
}

impl BubbleSequence {
    pub fn new(bubbles: Vec<Bubble>) -> Self {
        let mut bs = Self {
            bubbles,
            anchor: None,
        };
        bs.anchor = bs.first_type3_with_diameter(ANCHOR_DIAMETER);
        bs
    }

    /// Index of the first type-3 bubble with diameter at least `r`.
    pub fn first_type3_with_diameter(&self, r: f64) -> Option<usize> {
        self.bubbles
            .iter()
            .position(|b| b.type_code == 3 && b.diameter >= r)
    }

    /// Indices of the type-3 bubbles in formation order.
    pub fn type3_indices(&self) -> Vec<usize> {
        self.bubbles
            .iter()
            .enumerate()
            .filter(|(_, b)| b.type_code == 3)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn type_codes(&self) -> Vec<u8> {
        self.bubbles.iter().map(|b| b.type_code).collect()
    }

    /// Sequence made of bubbles with the given type codes and unit diameter;
    /// for exercising the bookkeeping on hand-written type lists.
    pub fn from_types(types: &[u8]) -> Self {
        Self::from_types_and_diameters(types, &vec![1.0; types.len()])
    }

    pub fn from_types_and_diameters(types: &[u8], diameters: &[f64]) -> Self {
        let bubbles = types
            .iter()
            .zip(diameters)
            .enumerate()
            .map(|(i, (&t, &d))| Bubble {
                order_index: i,
                type_code: t,
                diameter: d,
                touches_negative_axis: t & 2 != 0,
                touches_positive_axis: t & 1 != 0,
                component_id: i as u32,
                formation_time: i as f64,
                pixels: 0,
                hole_pixels: 0,
            })
            .collect();
        Self::new(bubbles)
    }
}

/// The 0/1 record of whether a type-1 or type-2 bubble forms between
/// consecutive type-3 bubbles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSequence {
    /// `bits[i]` refers to the gap between type-3 bubbles `i` and `i + 1`.
    pub bits: Vec<u8>,
    /// Type-3 ordinal of the anchor, i.e. the index of the bit `E_0`.
    pub anchor_offset: Option<usize>,
}

impl IndicatorSequence {
    /// Bits `E_start, ..., E_{start+len-1}` relative to the anchor, if all of
    /// them were observed.
    pub fn window(&self, start: isize, len: usize) -> Option<Vec<u8>> {
        let a = self.anchor_offset? as isize;
        let from = a + start;
        if from < 0 {
            return None;
        }
        let from = from as usize;
        self.bits.get(from..from + len).map(<[u8]>::to_vec)
    }
}

pub fn indicator_sequence(bs: &BubbleSequence) -> Result<IndicatorSequence> {
    let t3 = bs.type3_indices();
    if t3.len() < 2 {
        return Err(SleError::InsufficientData(format!(
            "{} type-3 bubbles, need at least 2",
            t3.len()
        )));
    }
    let bits = t3
        .windows(2)
        .map(|w| {
            let between = &bs.bubbles[w[0] + 1..w[1]];
            u8::from(between.iter().any(|b| b.type_code == 1 || b.type_code == 2))
        })
        .collect();
    let anchor_offset = bs.anchor.and_then(|a| t3.iter().position(|&i| i == a));
    Ok(IndicatorSequence {
        bits,
        anchor_offset,
    })
}

/// Type-3 ordinal of the `n`-th type-3 bubble (in formation order) whose
/// diameter is at least `r`.
pub fn k_r_n(bs: &BubbleSequence, r: f64, n: usize) -> Result<usize> {
    if !(r > 0.0) || n == 0 {
        return Err(invalid(format!("need r > 0 and n >= 1, got r = {r}, n = {n}")));
    }
    bs.type3_indices()
        .iter()
        .enumerate()
        .filter(|(_, &i)| bs.bubbles[i].diameter >= r)
        .nth(n - 1)
        .map(|(k, _)| k)
        .ok_or_else(|| SleError::NotFound(format!("fewer than {n} type-3 bubbles of diameter >= {r}")))
}

const FREE: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Curve,
    Hole,
    Left,
    Right,
    /// Cut pixels and unresolved outer components count for both sides.
    Both,
}

struct Raster {
    w: usize,
    h: usize,
    x0: f64,
    res: f64,
    /// Earliest polyline segment through each pixel, `FREE` if none.
    time: Vec<u32>,
}

impl Raster {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.w + i
    }

    fn center_x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.res
    }

    fn cell(&self, z: ComplexPoint) -> (i64, i64) {
        (
            ((z.re - self.x0) / self.res).floor() as i64,
            (z.im / self.res).floor() as i64,
        )
    }

    fn plot(&mut self, i: i64, j: i64, t: u32) {
        if i >= 0 && j >= 0 && (i as usize) < self.w && (j as usize) < self.h {
            let k = self.idx(i as usize, j as usize);
            self.time[k] = self.time[k].min(t);
        }
    }

    /// 8-connected Bresenham line.
    fn line(&mut self, a: (i64, i64), b: (i64, i64), t: u32) {
        let (mut x, mut y) = a;
        let dx = (b.0 - x).abs();
        let dy = -(b.1 - y).abs();
        let sx = if x < b.0 { 1 } else { -1 };
        let sy = if y < b.1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.plot(x, y, t);
            if x == b.0 && y == b.1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn neighbors4(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = (k % self.w, k / self.w);
        let w = self.w;
        [
            (i > 0).then(|| k - 1),
            (i + 1 < w).then(|| k + 1),
            (j > 0).then(|| k - w),
            (j + 1 < self.h).then(|| k + w),
        ]
        .into_iter()
        .flatten()
    }

    fn neighbors8(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((k % self.w) as i64, (k / self.w) as i64);
        let (w, h) = (self.w as i64, self.h as i64);
        (-1..=1)
            .flat_map(move |dj| (-1..=1).map(move |di| (i + di, j + dj)))
            .filter(move |&(x, y)| (x, y) != (i, j) && x >= 0 && y >= 0 && x < w && y < h)
            .map(move |(x, y)| (y * w + x) as usize)
    }
}

/// Bubbles of `trace` inside `bbox` at pixel size `resolution`, with the
/// default [`BubbleParams`].
pub fn extract_bubbles(trace: &Trace, bbox: &BoundingBox, resolution: f64) -> Result<BubbleSequence> {
    extract_bubbles_with(trace, bbox, resolution, &BubbleParams::default())
}

pub fn extract_bubbles_with(
    trace: &Trace,
    bbox: &BoundingBox,
    resolution: f64,
    params: &BubbleParams,
) -> Result<BubbleSequence> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid(format!("resolution must be positive, got {resolution}")));
    }
    if !(bbox.x_min < 0.0 && bbox.x_max > 0.0 && bbox.y_max > 0.0) {
        return Err(invalid("bounding box must contain the origin in its bottom edge interior"));
    }
    if trace.len() >= 2 {
        let median_gap = trace.median_gap();
        if median_gap < 2.0 * resolution {
            return Err(SleError::ResolutionTooCoarse {
                resolution,
                median_gap,
            });
        }
    }
    let poly = trace.polyline();
    // finite-horizon truncation at the first exit from the box
    let kept = poly
        .iter()
        .position(|(z, _)| !bbox.contains(*z))
        .unwrap_or(poly.len());
    if kept < 2 {
        return Ok(BubbleSequence::default());
    }
    let poly = &poly[..kept];

    let mut raster = build_raster(poly, bbox, resolution);
    let classes = classify(&mut raster, poly, resolution)?;
    let pinch = pinch_mask(&raster, &classes, params.pinch_width);
    let bubbles = collect_bubbles(&raster, &classes, &pinch, poly, params);
    Ok(BubbleSequence::new(bubbles))
}

/// Curve of `path` sampled coarsely enough for rasterisation at
/// `resolution`, with every contact farther than one pixel from the tip.
/// The stride starts from the Brownian estimate of the tip spacing and
/// doubles until the median gap is at least two pixels.
pub fn curve_for_resolution(path: &DrivingPath, resolution: f64) -> Result<Trace> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid(format!("resolution must be positive, got {resolution}")));
    }
    let tree = PullbackTree::new(&path.slits());
    let (tips, bases) = curve_samples(&tree, path)?;
    let steps = path.steps().max(1);
    let target = 2.0 * resolution;
    // median tip spacing after s steps is roughly 0.19 sqrt(s dt)
    let guess = ((target / 0.19).powi(2) / path.dt).ceil();
    let mut stride = (guess as usize).clamp(1, steps);
    loop {
        let curve = assemble_curve(path, &tips, &bases, stride, resolution)?;
        if curve.len() < 2 || curve.median_gap() >= target || stride >= steps {
            return Ok(curve);
        }
        stride = (2 * stride).min(steps);
    }
}

/// Bubbles of the curve driven by `path`, with the stride chosen by
/// [`curve_for_resolution`].
pub fn extract_path_bubbles(
    path: &DrivingPath,
    bbox: &BoundingBox,
    resolution: f64,
    params: &BubbleParams,
) -> Result<BubbleSequence> {
    let curve = curve_for_resolution(path, resolution)?;
    extract_bubbles_with(&curve, bbox, resolution, params)
}

fn build_raster(poly: &[(ComplexPoint, f64)], bbox: &BoundingBox, res: f64) -> Raster {
    let margin = MARGIN_PIXELS * res;
    let (mut lo, mut hi, mut top) = (0.0f64, 0.0f64, 0.0f64);
    for (z, _) in poly {
        lo = lo.min(z.re);
        hi = hi.max(z.re);
        top = top.max(z.im);
    }
    let x_lo = (lo - margin).max(bbox.x_min);
    let x_hi = (hi + margin).min(bbox.x_max);
    let y_hi = (top + margin).min(bbox.y_max);
    // pixel edges on integer multiples of the resolution, so 0 is an edge
    let x0 = (x_lo / res).floor() * res;
    let w = (((x_hi - x0) / res).ceil() as usize).max(1);
    let h = ((y_hi / res).ceil() as usize).max(1);
    let mut raster = Raster {
        w,
        h,
        x0,
        res,
        time: vec![FREE; w * h],
    };
    let cells: Vec<(i64, i64)> = poly
        .iter()
        .map(|(z, _)| {
            let (i, j) = raster.cell(*z);
            (i.clamp(0, w as i64 - 1), j.clamp(0, h as i64 - 1))
        })
        .collect();
    raster.plot(cells[0].0, cells[0].1, 0);
    for (s, pair) in cells.windows(2).enumerate() {
        raster.line(pair[0], pair[1], s as u32);
    }
    raster
}

/// Labels the components of the pixels accepted by `member`, 4-connected
/// unless `diagonal`.
fn label_components(raster: &Raster, diagonal: bool, member: impl Fn(usize) -> bool) -> (Vec<u32>, u32) {
    let n = raster.w * raster.h;
    let mut label = vec![FREE; n];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != FREE || !member(start) {
            continue;
        }
        label[start] = next;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let w = raster.w;
            for m in raster.neighbors8(k).filter(|&m| diagonal || m % w == k % w || m / w == k / w) {
                if label[m] == FREE && member(m) {
                    label[m] = next;
                    stack.push(m);
                }
            }
        }
        next += 1;
    }
    (label, next)
}

fn classify(raster: &mut Raster, poly: &[(ComplexPoint, f64)], res: f64) -> Result<Vec<Class>> {
    let (w, h) = (raster.w, raster.h);
    let n = w * h;
    let free = |k: usize| raster.time[k] == FREE;
    let (label, count) = label_components(raster, false, free);
    let count = count as usize;

    let mut outer = vec![false; count];
    let mut row0_neg = vec![false; count];
    let mut row0_pos = vec![false; count];
    for k in 0..n {
        let c = label[k];
        if c == FREE {
            continue;
        }
        let (i, j) = (k % w, k / w);
        if i == 0 || i + 1 == w || j + 1 == h {
            outer[c as usize] = true;
        }
        if j == 0 {
            let x = raster.center_x(i);
            if x < -res {
                row0_neg[c as usize] = true;
            } else if x > res {
                row0_pos[c as usize] = true;
            }
        }
    }

    // cut the unbounded domain along a shortest path from the tip to the top
    let tip = poly.last().expect("nonempty polyline").0;
    let (ti, tj) = raster.cell(tip);
    let tip_k = raster.idx(ti.clamp(0, w as i64 - 1) as usize, tj.clamp(0, h as i64 - 1) as usize);
    let is_outer = |k: usize| label[k] != FREE && outer[label[k] as usize];
    let mut cut = vec![false; n];
    let starts: Vec<usize> = (1..=4)
        .map(|r| ring(raster, tip_k, r).into_iter().filter(|&k| is_outer(k)).collect::<Vec<_>>())
        .find(|v| !v.is_empty())
        .unwrap_or_default();
    if !starts.is_empty() {
        let mut parent = vec![FREE; n];
        let mut queue = VecDeque::new();
        for &s in &starts {
            parent[s] = s as u32;
            queue.push_back(s);
        }
        let mut end = None;
        while let Some(k) = queue.pop_front() {
            if k / w + 1 == h {
                end = Some(k);
                break;
            }
            for m in raster.neighbors4(k) {
                if parent[m] == FREE && is_outer(m) {
                    parent[m] = k as u32;
                    queue.push_back(m);
                }
            }
        }
        let mut k = end.ok_or_else(|| SleError::InsufficientData("tip is not connected to the top of the box".into()))?;
        loop {
            cut[k] = true;
            let p = parent[k] as usize;
            if p == k {
                break;
            }
            k = p;
        }
    }

    // split the unbounded domain minus the cut into left and right parts
    let (side_label, side_count) = label_components(raster, false, |k| is_outer(k) && !cut[k]);
    let mut side_left = vec![false; side_count as usize];
    let mut side_right = vec![false; side_count as usize];
    for k in 0..n {
        let c = side_label[k];
        if c == FREE {
            continue;
        }
        let (i, j) = (k % w, k / w);
        let x = raster.center_x(i);
        if i == 0 || (j == 0 && x < -res) {
            side_left[c as usize] = true;
        }
        if i + 1 == w || (j == 0 && x > res) {
            side_right[c as usize] = true;
        }
    }

    let classes = (0..n)
        .map(|k| {
            if raster.time[k] != FREE {
                return Class::Curve;
            }
            if cut[k] {
                return Class::Both;
            }
            let c = label[k] as usize;
            if outer[c] {
                let s = side_label[k] as usize;
                return match (side_left[s], side_right[s]) {
                    (true, false) => Class::Left,
                    (false, true) => Class::Right,
                    _ => Class::Both,
                };
            }
            match (row0_neg[c], row0_pos[c]) {
                (true, false) => Class::Left,
                (false, true) => Class::Right,
                _ => Class::Hole,
            }
        })
        .collect();
    Ok(classes)
}

/// Pixels at Chebyshev distance exactly `r` from `k`.
fn ring(raster: &Raster, k: usize, r: i64) -> Vec<usize> {
    let (i, j) = ((k % raster.w) as i64, (k / raster.w) as i64);
    let mut out = Vec::new();
    for dj in -r..=r {
        for di in -r..=r {
            if di.abs().max(dj.abs()) != r {
                continue;
            }
            let (x, y) = (i + di, j + dj);
            if x >= 0 && y >= 0 && (x as usize) < raster.w && (y as usize) < raster.h {
                out.push(raster.idx(x as usize, y as usize));
            }
        }
    }
    out
}

fn pinch_mask(raster: &Raster, classes: &[Class], width: u32) -> Vec<bool> {
    let inside = |c: Class| matches!(c, Class::Curve | Class::Hole);
    let depth = width.saturating_sub(1).clamp(1, 254) as u8;
    let dist = |is_source: &dyn Fn(Class) -> bool| -> Vec<u8> {
        let mut d = vec![u8::MAX; classes.len()];
        let mut frontier: Vec<usize> = Vec::new();
        for (k, &c) in classes.iter().enumerate() {
            if is_source(c) {
                d[k] = 0;
                frontier.push(k);
            }
        }
        for step in 1..=depth {
            let mut next = Vec::new();
            for &k in &frontier {
                for m in raster.neighbors8(k) {
                    if d[m] == u8::MAX && inside(classes[m]) {
                        d[m] = step;
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        d
    };
    let dl = dist(&|c| matches!(c, Class::Left | Class::Both));
    let dr = dist(&|c| matches!(c, Class::Right | Class::Both));
    classes
        .iter()
        .enumerate()
        .map(|(k, &c)| inside(c) && u32::from(dl[k]) + u32::from(dr[k]) <= width)
        .collect()
}

fn collect_bubbles(
    raster: &Raster,
    classes: &[Class],
    pinch: &[bool],
    poly: &[(ComplexPoint, f64)],
    params: &BubbleParams,
) -> Vec<Bubble> {
    let w = raster.w;
    let member = |k: usize| matches!(classes[k], Class::Curve | Class::Hole) && !pinch[k];
    let (label, count) = label_components(raster, true, member);

    struct Acc {
        pixels: usize,
        holes: usize,
        first: u32,
        leftmost: (usize, usize),
        neg: bool,
        pos: bool,
        rows: std::collections::BTreeMap<usize, (usize, usize)>,
    }
    let mut acc: Vec<Acc> = (0..count)
        .map(|_| Acc {
            pixels: 0,
            holes: 0,
            first: FREE,
            leftmost: (usize::MAX, usize::MAX),
            neg: false,
            pos: false,
            rows: Default::default(),
        })
        .collect();
    for k in 0..label.len() {
        let c = label[k];
        if c == FREE {
            continue;
        }
        let a = &mut acc[c as usize];
        let (i, j) = (k % w, k / w);
        a.pixels += 1;
        if classes[k] == Class::Hole {
            a.holes += 1;
            // a hole's formation is read off the curve pixels around it
            for m in raster.neighbors8(k) {
                a.first = a.first.min(raster.time[m]);
            }
        } else {
            a.first = a.first.min(raster.time[k]);
        }
        if (i, j) < a.leftmost {
            a.leftmost = (i, j);
        }
        if j < params.touch_rows {
            let x = raster.center_x(i);
            if x < -raster.res {
                a.neg = true;
            } else if x > raster.res {
                a.pos = true;
            }
        }
        let e = a.rows.entry(j).or_insert((i, i));
        e.0 = e.0.min(i);
        e.1 = e.1.max(i);
    }

    let mut found: Vec<(u32, (usize, usize), Bubble)> = acc
        .into_iter()
        .enumerate()
        .filter(|(_, a)| a.holes >= params.min_hole_pixels)
        .map(|(c, a)| {
            let pts: Vec<ComplexPoint> = a
                .rows
                .iter()
                .flat_map(|(&j, &(i0, i1))| {
                    let y = (j as f64 + 0.5) * raster.res;
                    [
                        ComplexPoint::new(raster.center_x(i0), y),
                        ComplexPoint::new(raster.center_x(i1), y),
                    ]
                })
                .collect();
            let first = a.first.min(poly.len() as u32 - 1);
            let bubble = Bubble {
                order_index: 0,
                type_code: type_code(a.neg, a.pos),
                diameter: diameter(&pts),
                touches_negative_axis: a.neg,
                touches_positive_axis: a.pos,
                component_id: c as u32,
                formation_time: poly[first as usize].1,
                pixels: a.pixels,
                hole_pixels: a.holes,
            };
            (a.first, (a.leftmost.0, a.leftmost.1), bubble)
        })
        .collect();
    found.sort_by_key(|(first, leftmost, _)| (*first, *leftmost));
    found
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, mut b))| {
            b.order_index = i;
            b
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bead_chain, bubble_fixtures, hanging_loop, FIXTURE_RESOLUTION};

    #[test]
    fn type_codes() {
        assert_eq!(type_code(false, false), 0);
        assert_eq!(type_code(false, true), 1);
        assert_eq!(type_code(true, false), 2);
        assert_eq!(type_code(true, true), 3);
    }

    #[test]
    fn indicator_examples() {
        let bits = |t: &[u8]| indicator_sequence(&BubbleSequence::from_types(t)).unwrap().bits;
        assert_eq!(bits(&[3, 1, 3, 3, 2, 3]), vec![1, 0, 1]);
        assert_eq!(bits(&[3, 3]), vec![0]);
        assert_eq!(bits(&[3, 0, 3]), vec![0]);
        assert!(matches!(
            indicator_sequence(&BubbleSequence::from_types(&[1, 3, 2])),
            Err(SleError::InsufficientData(_))
        ));
    }

    #[test]
    fn k_r_n_examples() {
        let bs = BubbleSequence::from_types_and_diameters(&[3, 3, 3, 3], &[0.5, 2.0, 0.3, 1.5]);
        assert_eq!(k_r_n(&bs, 1.0, 1).unwrap(), 1);
        assert_eq!(k_r_n(&bs, 1.0, 2).unwrap(), 3);
        assert!(matches!(k_r_n(&bs, 1.0, 3), Err(SleError::NotFound(_))));
        assert!(k_r_n(&bs, 0.0, 1).is_err());
        assert!(k_r_n(&bs, 1.0, 0).is_err());
    }

    #[test]
    fn k_r_n_counts_type3_ordinals() {
        let bs = BubbleSequence::from_types_and_diameters(&[1, 3, 0, 3], &[5.0, 0.5, 5.0, 2.0]);
        assert_eq!(k_r_n(&bs, 1.0, 1).unwrap(), 1);
    }

    #[test]
    fn anchor_and_windows() {
        let bs = BubbleSequence::from_types_and_diameters(
            &[3, 1, 3, 3, 2, 3, 3],
            &[0.5, 1.0, 0.7, 1.2, 1.0, 3.0, 1.0],
        );
        assert_eq!(bs.anchor, Some(3));
        let ind = indicator_sequence(&bs).unwrap();
        assert_eq!(ind.bits, vec![1, 0, 1, 0]);
        assert_eq!(ind.anchor_offset, Some(2));
        assert_eq!(ind.window(0, 2), Some(vec![1, 0]));
        assert_eq!(ind.window(-2, 2), Some(vec![1, 0]));
        assert_eq!(ind.window(-3, 1), None);
        assert_eq!(ind.window(1, 2), None);
    }

    const RES: f64 = FIXTURE_RESOLUTION;

    #[test]
    fn single_bead_is_one_type3_bubble() {
        let bs = extract_bubbles(&bead_chain(&[3]), &BoundingBox::default(), RES).unwrap();
        assert_eq!(bs.type_codes(), vec![3]);
        assert!(bs.bubbles[0].diameter > 1.9, "{}", bs.bubbles[0].diameter);
        assert_eq!(bs.anchor, Some(0));
    }

    #[test]
    fn bead_chain_types_and_indicators() {
        for types in [vec![3, 1, 3, 3, 2, 3], vec![3, 0, 3], vec![2, 1, 0, 3]] {
            let bs = extract_bubbles(&bead_chain(&types), &BoundingBox::default(), RES).unwrap();
            assert_eq!(bs.type_codes(), types);
            let times: Vec<f64> = bs.bubbles.iter().map(|b| b.formation_time).collect();
            assert!(times.windows(2).all(|w| w[0] < w[1]), "{times:?}");
        }
        let bits = |t: &[u8]| {
            let bs = extract_bubbles(&bead_chain(t), &BoundingBox::default(), RES).unwrap();
            indicator_sequence(&bs).unwrap().bits
        };
        assert_eq!(bits(&[3, 1, 3, 3, 2, 3]), vec![1, 0, 1]);
        assert_eq!(bits(&[3, 0, 3]), vec![0]);
    }

    #[test]
    fn all_fixtures_classify_exactly() {
        for f in bubble_fixtures() {
            let bs = extract_bubbles(&f.trace, &BoundingBox::default(), RES).unwrap();
            assert_eq!(bs.type_codes(), f.types, "{}", f.name);
            assert_eq!(indicator_sequence(&bs).ok().map(|i| i.bits), f.bits, "{}", f.name);
        }
    }

    #[test]
    fn loop_off_the_axis_is_type0() {
        let bs = extract_bubbles(&hanging_loop(), &BoundingBox::default(), RES).unwrap();
        assert_eq!(bs.type_codes(), vec![0]);
        assert_eq!(bs.anchor, None);
    }

    #[test]
    fn resolution_guard() {
        let pts: Vec<ComplexPoint> = (0..=100).map(|i| ComplexPoint::new(0.0, 0.01 * i as f64)).collect();
        let tr = Trace::from_polyline(pts).unwrap();
        assert!(matches!(
            extract_bubbles(&tr, &BoundingBox::default(), RES),
            Err(SleError::ResolutionTooCoarse { .. })
        ));
        assert!(extract_bubbles(&tr, &BoundingBox::default(), 0.004).is_ok());
    }

    #[test]
    fn path_curve_meets_guard() {
        let path = crate::driving::sample_sle_driving(6.0, 1.0, 20_000, 11).unwrap();
        let curve = curve_for_resolution(&path, 1.0 / 256.0).unwrap();
        assert!(curve.median_gap() >= 2.0 / 256.0);
        assert!(extract_bubbles(&curve, &BoundingBox::default(), 1.0 / 256.0).is_ok());
    }
}
