//! Constructed curves with known bubble and crossing structure.

use crate::loewner::ComplexPoint;
use crate::trace::Trace;

/// Resolution at which the bead chains are resolved exactly.
pub const FIXTURE_RESOLUTION: f64 = 1.0 / 64.0;

/// Polyline through `corners`, each segment subdivided into pieces of
/// length at most `step`. Sample `i` sits at time `i`.
pub fn polyline_through(corners: &[ComplexPoint], step: f64) -> Trace {
    let mut pts = vec![corners[0]];
    for w in corners.windows(2) {
        let n = ((w[1] - w[0]).norm() / step).ceil().max(1.0) as usize;
        pts.extend((1..=n).map(|i| w[0] + (w[1] - w[0]) * (i as f64 / n as f64)));
    }
    Trace::from_polyline(pts).expect("corners in the closed upper half-plane")
}

/// Chain of quadrilateral beads stacked along the imaginary axis and
/// joined by short necks. Bead `k` has its left vertex on the negative
/// axis when `types[k] & 2` and its right vertex on the positive axis when
/// `types[k] & 1`; otherwise the vertex floats at height 0.2. Sampled
/// every 0.05 so that the median gap clears [`FIXTURE_RESOLUTION`].
pub fn bead_chain(types: &[u8]) -> Trace {
    let mut corners = vec![ComplexPoint::new(0.0, 0.0), ComplexPoint::new(0.0, 0.3)];
    for (k, &t) in types.iter().enumerate() {
        let r = 1.0 + k as f64;
        let bottom = *corners.last().unwrap();
        let top = bottom + ComplexPoint::new(0.0, 0.8);
        let a = ComplexPoint::new(-r, if t & 2 != 0 { 0.0 } else { 0.2 });
        let b = ComplexPoint::new(r, if t & 1 != 0 { 0.0 } else { 0.2 });
        corners.extend([a, top, a, bottom, b, top, top + ComplexPoint::new(0.0, 0.2)]);
    }
    let top = corners.last().unwrap().im;
    corners.push(ComplexPoint::new(0.0, top + 1.0));
    polyline_through(&corners, 0.05)
}

/// A closed loop hanging off a vertical stem, away from the real line.
pub fn hanging_loop() -> Trace {
    let c = ComplexPoint::new;
    polyline_through(
        &[
            c(0.0, 0.0),
            c(0.0, 1.0),
            c(1.0, 1.0),
            c(1.0, 2.0),
            c(0.0, 2.0),
            c(0.0, 1.0),
            c(-0.5, 1.0),
            c(-0.5, 3.0),
        ],
        0.05,
    )
}

/// Zig-zag touching the real line at -1, then +1, then -2.
pub fn crossing_zigzag() -> Trace {
    let c = ComplexPoint::new;
    polyline_through(
        &[c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 2.0), c(-2.0, 0.0), c(0.0, 3.0)],
        0.05,
    )
}

/// A bubble fixture and its expected classification.
#[derive(Debug, Clone)]
pub struct BubbleFixture {
    pub name: String,
    pub trace: Trace,
    pub types: Vec<u8>,
    /// Expected indicator bits, `None` when fewer than two type-3 bubbles.
    pub bits: Option<Vec<u8>>,
}

/// Every bubble fixture with its expected output.
pub fn bubble_fixtures() -> Vec<BubbleFixture> {
    let chain = |types: &[u8], bits: Option<Vec<u8>>| BubbleFixture {
        name: format!("beads {types:?}"),
        trace: bead_chain(types),
        types: types.to_vec(),
        bits,
    };
    let straight = (0..=40).map(|i| ComplexPoint::new(0.0, 0.05 * i as f64)).collect();
    let wiggle = (0..=60)
        .map(|i| {
            let t = 0.05 * i as f64;
            ComplexPoint::new(t.sin(), t)
        })
        .collect();
    vec![
        chain(&[3], None),
        chain(&[3, 1, 3, 3, 2, 3], Some(vec![1, 0, 1])),
        chain(&[3, 0, 3], Some(vec![0])),
        chain(&[3, 3], Some(vec![0])),
        chain(&[2, 1, 0, 3], None),
        BubbleFixture {
            name: "segment".into(),
            trace: Trace::from_polyline(straight).unwrap(),
            types: vec![],
            bits: None,
        },
        BubbleFixture {
            name: "sine".into(),
            trace: Trace::from_polyline(wiggle).unwrap(),
            types: vec![],
            bits: None,
        },
        BubbleFixture {
            name: "hanging loop".into(),
            trace: hanging_loop(),
            types: vec![0],
            bits: None,
        },
    ]
}
