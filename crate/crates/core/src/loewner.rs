//! Discrete chordal Loewner evolution built from vertical slit maps.
//!
//! Driving is piecewise constant on a capacity-time grid. Over a step of
//! length `delta` with driving value `u` the Loewner equation integrates in
//! closed form to
//!
//! ```text
//! g(z) = u + sqrt((z - u)^2 + 4 delta)
//! ```
//!
//! which removes the vertical segment `{u + iy : 0 < y <= 2 sqrt(delta)}` and
//! sends its tip to `u`. A [`ConformalChain`] is an ordered list of such
//! maps; applying them in order gives `g_t`, applying the inverses in reverse
//! order gives `g_t^{-1}`.
//!
//! Branch convention: every map is evaluated with the square root whose
//! imaginary part is nonnegative. For real arguments, points left of the slit
//! base stay left and points right of it stay right; the base point itself is
//! split into two prime ends, selected with [`Side`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SleError};

/// A point of the closed upper half-plane.
pub type ComplexPoint = Complex64;

/// Which side of a boundary point (or of the driving value) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// One step of constant driving: the vertical slit of capacity time `delta`
/// based at `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementarySlit {
    pub u: f64,
    pub delta: f64,
}

impl ElementarySlit {
    pub fn new(u: f64, delta: f64) -> Result<Self> {
        if !u.is_finite() {
            return Err(invalid(format!("slit base must be finite, got {u}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("slit capacity time must be positive, got {delta}")));
        }
        Ok(Self { u, delta })
    }

    /// Euclidean height of the slit, `2 sqrt(delta)`.
    #[inline]
    pub fn height(&self) -> f64 {
        2.0 * self.delta.sqrt()
    }

    #[inline]
    pub fn tip(&self) -> ComplexPoint {
        Complex64::new(self.u, self.height())
    }
}

/// Square root with nonnegative imaginary part; purely real results take
/// the sign of `orient`.
#[inline]
fn upper_sqrt(p: Complex64, orient: f64) -> Complex64 {
    let r = p.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re * orient < 0.0) {
        -r
    } else {
        r
    }
}

/// Forward slit map `g(z) = u + sqrt((z-u)^2 + 4 delta)`.
///
/// The radicand is evaluated in the factored form
/// `(z - u - 2i sqrt(delta)) (z - u + 2i sqrt(delta))`, which stays accurate
/// next to the tip where the expanded form cancels.
pub fn slit_forward(z: ComplexPoint, s: &ElementarySlit) -> Result<ComplexPoint> {
    let d = z - s.u;
    let h = s.height();
    if d.re == 0.0 && d.im > 0.0 && d.im < h {
        return Err(SleError::OnSlit {
            re: z.re,
            im: z.im,
            base: s.u,
        });
    }
    Ok(slit_forward_unchecked(d, h, s.u))
}

#[inline]
pub(crate) fn slit_forward_unchecked(d: Complex64, h: f64, u: f64) -> Complex64 {
    let p = Complex64::new(d.re, d.im - h) * Complex64::new(d.re, d.im + h);
    // Real points keep their side; the base point goes to its right prime end.
    let orient = if d.re < 0.0 { -1.0 } else { 1.0 };
    upper_sqrt(p, orient) + u
}

/// Forward slit map restricted to the real line with an explicit prime end
/// for the base point.
#[inline]
pub fn slit_forward_real(x: f64, s: &ElementarySlit, side: Side) -> f64 {
    let d = x - s.u;
    let r = (d * d + 4.0 * s.delta).sqrt();
    let sgn = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        side.sign()
    };
    s.u + sgn * r
}

/// Inverse slit map `z = u + sqrt((w-u)^2 - 4 delta)`.
///
/// Real `w` with `|w - u| < 2 sqrt(delta)` lands on the slit; both sides of
/// the slit are the same geometric point, so only the height depends on `w`.
#[inline]
pub fn slit_inverse(w: ComplexPoint, s: &ElementarySlit) -> ComplexPoint {
    slit_inverse_unchecked(w - s.u, s.height(), s.u)
}

#[inline]
pub(crate) fn slit_inverse_unchecked(d: Complex64, h: f64, u: f64) -> Complex64 {
    let p = Complex64::new(d.re - h, d.im) * Complex64::new(d.re + h, d.im);
    let orient = if d.re < 0.0 { -1.0 } else { 1.0 };
    upper_sqrt(p, orient) + u
}

/// Exact floating-point accumulator (non-overlapping partials, as in
/// Shewchuk's adaptive expansions). Merging two sums is exact, so capacity
/// is additive under chain concatenation with no rounding at all.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    /// Correctly rounded value of the exact sum.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            n -= 1;
            let x = hi;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining tail breaks a tie.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

impl PartialEq for ExactSum {
    /// Equality of the represented real numbers.
    fn eq(&self, other: &Self) -> bool {
        let mut diff = self.clone();
        for &p in &other.partials {
            diff.add(-p);
        }
        diff.value() == 0.0
    }
}

/// Ordered composition of elementary slit maps representing `g_t`.
#[derive(Debug, Clone, Default)]
pub struct ConformalChain {
    slits: Vec<ElementarySlit>,
    total: ExactSum,
}

impl ConformalChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slits(slits: Vec<ElementarySlit>) -> Self {
        let mut total = ExactSum::new();
        for s in &slits {
            total.add(s.delta);
        }
        Self { slits, total }
    }

    /// Chain for piecewise-constant driving `drive[j]` on steps of length `dt`.
    pub fn from_driving(drive: &[f64], dt: f64) -> Result<Self> {
        let slits = drive
            .iter()
            .map(|&u| ElementarySlit::new(u, dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_slits(slits))
    }

    pub fn push(&mut self, s: ElementarySlit) {
        self.total.add(s.delta);
        self.slits.push(s);
    }

    pub fn concat(&self, other: &ConformalChain) -> ConformalChain {
        let mut slits = self.slits.clone();
        slits.extend_from_slice(&other.slits);
        let mut total = self.total.clone();
        total.merge(&other.total);
        ConformalChain { slits, total }
    }

    pub fn slits(&self) -> &[ElementarySlit] {
        &self.slits
    }

    pub fn len(&self) -> usize {
        self.slits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slits.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.total.value()
    }

    pub fn capacity_sum(&self) -> &ExactSum {
        &self.total
    }

    /// Sub-chain of slits `from..to` (shares no state with `self`).
    pub fn slice(&self, from: usize, to: usize) -> Result<ConformalChain> {
        self.check_range(from, to)?;
        Ok(Self::from_slits(self.slits[from..to].to_vec()))
    }

    fn check_range(&self, from: usize, to: usize) -> Result<()> {
        if from > to || to > self.slits.len() {
            return Err(SleError::IndexRange {
                from,
                to,
                len: self.slits.len(),
            });
        }
        Ok(())
    }

    /// Applies slits `from..to` in order.
    pub fn forward(&self, z: ComplexPoint, from: usize, to: usize) -> Result<ComplexPoint> {
        self.check_range(from, to)?;
        let mut w = z;
        for s in &self.slits[from..to] {
            w = slit_forward(w, s)?;
        }
        Ok(w)
    }

    /// Like [`ConformalChain::forward`], also returning the total displacement
    /// `g(z) - z` accumulated step by step. Each step's displacement is
    /// evaluated as `4 delta / (sqrt((z-u)^2 + 4 delta) + (z-u))`, which keeps
    /// full relative precision far from the hull where `g(z) - z` is tiny.
    pub fn forward_with_displacement(
        &self,
        z: ComplexPoint,
        from: usize,
        to: usize,
    ) -> Result<(ComplexPoint, ComplexPoint)> {
        self.check_range(from, to)?;
        let mut w = z;
        let mut total = Complex64::new(0.0, 0.0);
        for s in &self.slits[from..to] {
            let next = slit_forward(w, s)?;
            let d = w - s.u;
            total += 4.0 * s.delta / ((next - s.u) + d);
            w = next;
        }
        Ok((w, total))
    }

    /// Applies slits `from..to` to a real boundary point, following the
    /// prime end on `side` whenever the point sits exactly on a slit base.
    pub fn forward_real(&self, x: f64, side: Side, from: usize, to: usize) -> Result<f64> {
        self.check_range(from, to)?;
        Ok(self.slits[from..to]
            .iter()
            .fold(x, |x, s| slit_forward_real(x, s, side)))
    }

    /// Applies the inverses of slits `from..to` from the last one down.
    pub fn pullback_range(&self, w: ComplexPoint, from: usize, to: usize) -> Result<ComplexPoint> {
        self.check_range(from, to)?;
        Ok(self.slits[from..to]
            .iter()
            .rev()
            .fold(w, |w, s| slit_inverse(w, s)))
    }

    /// `g^{-1}` from the end of the chain down to slit `down_to`.
    pub fn pullback(&self, w: ComplexPoint, down_to: usize) -> Result<ComplexPoint> {
        self.pullback_range(w, down_to, self.slits.len())
    }

    /// Real interval (in the coordinates after slit `to`) onto which the hull
    /// of slits `from..to` is mapped, or `None` for an empty range.
    pub fn image_interval(&self, from: usize, to: usize) -> Result<Option<(f64, f64)>> {
        self.check_range(from, to)?;
        Ok(image_interval_of(&self.slits[from..to]))
    }

    /// Extreme real points of the hull base in the original coordinates.
    pub fn hull_base(&self) -> Option<(f64, f64)> {
        let (lo, hi) = image_interval_of(&self.slits)?;
        let n = self.slits.len();
        let left = self.pullback_range(Complex64::new(lo, 0.0), 0, n).ok()?.re;
        let right = self.pullback_range(Complex64::new(hi, 0.0), 0, n).ok()?.re;
        Some((left, right))
    }
}

pub(crate) fn image_interval_of(slits: &[ElementarySlit]) -> Option<(f64, f64)> {
    let mut iv: Option<(f64, f64)> = None;
    for s in slits {
        let (lo, hi) = match iv {
            None => (s.u, s.u),
            Some((lo, hi)) => (lo.min(s.u), hi.max(s.u)),
        };
        iv = Some((
            slit_forward_real(lo, s, Side::Left),
            slit_forward_real(hi, s, Side::Right),
        ));
    }
    iv
}

/// `g` restricted to slits `from..to`; identity when `from == to`.
pub fn chain_forward(
    c: &ConformalChain,
    z: ComplexPoint,
    from_index: usize,
    to_index: usize,
) -> Result<ComplexPoint> {
    c.forward(z, from_index, to_index)
}

/// `g^{-1}` applied from the end of the chain down to `down_to_index`.
/// Ill-conditioned for points whose preimage sits deep in a fjord of the hull.
pub fn chain_pullback(c: &ConformalChain, w: ComplexPoint, down_to_index: usize) -> Result<ComplexPoint> {
    c.pullback(w, down_to_index)
}

/// Half-plane capacity of the hull: twice the accumulated capacity time.
pub fn half_plane_capacity(c: &ConformalChain) -> f64 {
    2.0 * c.total_time()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> ElementarySlit {
        ElementarySlit::new(0.0, 1.0).unwrap()
    }

    /// RK4 integration of dg/dt = 2/(g - u) with constant driving.
    fn ode_oracle(z: Complex64, u: f64, t: f64, steps: usize) -> Complex64 {
        let f = |g: Complex64| 2.0 / (g - u);
        let h = t / steps as f64;
        let mut g = z;
        for _ in 0..steps {
            let k1 = f(g);
            let k2 = f(g + k1 * (h / 2.0));
            let k3 = f(g + k2 * (h / 2.0));
            let k4 = f(g + k3 * h);
            g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        g
    }

    #[test]
    fn tip_maps_to_driving_point() {
        let w = slit_forward(c(0.0, 2.0), &unit()).unwrap();
        assert!(w.norm() < 1e-15, "{w}");
    }

    #[test]
    fn real_point_matches_ode_oracle() {
        let w = slit_forward(c(1.0, 0.0), &unit()).unwrap();
        let oracle = ode_oracle(c(1.0, 0.0), 0.0, 1.0, 20_000);
        assert!((w - oracle).norm() < 1e-9);
        assert!((w.re - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.im, 0.0);
    }

    #[test]
    fn far_point_is_hydrodynamically_normalised() {
        let w = slit_forward(c(0.0, 10.0), &unit()).unwrap();
        assert!((w.im - 96f64.sqrt()).abs() < 1e-13);
        assert!(w.re.abs() < 1e-15);
        assert!(((w.im - 9.8) / 9.8).abs() < 3e-3);
    }

    #[test]
    fn points_on_open_slit_are_rejected() {
        assert!(matches!(
            slit_forward(c(0.0, 1.0), &unit()),
            Err(SleError::OnSlit { .. })
        ));
        // base and tip are fine
        assert!(slit_forward(c(0.0, 0.0), &unit()).is_ok());
        assert!(slit_forward(c(0.0, 2.0), &unit()).is_ok());
    }

    #[test]
    fn slit_rejects_nonpositive_delta() {
        assert!(ElementarySlit::new(0.0, 0.0).is_err());
        assert!(ElementarySlit::new(0.0, -1.0).is_err());
        assert!(ElementarySlit::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let s = unit();
        assert!((slit_inverse(c(0.0, 0.0), &s) - c(0.0, 2.0)).norm() < 1e-15);
        assert!((slit_inverse(c(5f64.sqrt(), 0.0), &s) - c(1.0, 0.0)).norm() < 1e-15);
        let z = slit_inverse(c(0.0, 3.0), &s);
        assert!((z - c(0.0, 13f64.sqrt())).norm() < 1e-15);
        let back = slit_forward(z, &s).unwrap();
        assert!((back - c(0.0, 3.0)).norm() < 1e-14);
    }

    #[test]
    fn real_points_below_slit_map_onto_it() {
        let s = unit();
        let left = slit_inverse(c(-1.0, 0.0), &s);
        let right = slit_inverse(c(1.0, 0.0), &s);
        assert_eq!(left.re, 0.0);
        assert_eq!(right.re, 0.0);
        assert!((left.im - 3f64.sqrt()).abs() < 1e-15);
        assert!((right.im - 3f64.sqrt()).abs() < 1e-15);
        // outside the slit image the side is preserved
        assert!(slit_inverse(c(-3.0, 0.0), &s).re < 0.0);
        assert!(slit_inverse(c(3.0, 0.0), &s).re > 0.0);
    }

    #[test]
    fn real_base_point_splits_into_prime_ends() {
        let s = unit();
        assert_eq!(slit_forward_real(0.0, &s, Side::Left), -2.0);
        assert_eq!(slit_forward_real(0.0, &s, Side::Right), 2.0);
        assert_eq!(slit_forward_real(-1.0, &s, Side::Right), -(5f64.sqrt()));
    }

    #[test]
    fn empty_chain_is_identity() {
        let ch = ConformalChain::new();
        let z = c(1.0, 1.0);
        assert_eq!(chain_forward(&ch, z, 0, 0).unwrap(), z);
        assert_eq!(chain_pullback(&ch, z, 0).unwrap(), z);
        assert_eq!(half_plane_capacity(&ch), 0.0);
    }

    #[test]
    fn two_slit_chain_matches_one_shot_ode() {
        let ch = ConformalChain::from_slits(vec![unit(), unit()]);
        let z = c(0.0, 10.0);
        let stepwise = chain_forward(&ch, z, 0, 2).unwrap();
        // constant driving for total time 2 is a single slit of delta 2
        let single = slit_forward(z, &ElementarySlit::new(0.0, 2.0).unwrap()).unwrap();
        assert!((stepwise - single).norm() < 1e-12);
        assert!((stepwise - c(0.0, 92f64.sqrt())).norm() < 1e-12);
        let oracle = ode_oracle(z, 0.0, 2.0, 20_000);
        assert!((stepwise - oracle).norm() < 1e-10);
    }

    #[test]
    fn single_slit_pullbacks() {
        let ch = ConformalChain::from_slits(vec![unit()]);
        assert!((chain_pullback(&ch, c(0.0, 0.0), 0).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn normalization_expansion_at_large_radius() {
        let slits: Vec<_> = (0..50)
            .map(|j| ElementarySlit::new((j as f64 * 0.7).sin(), 0.01).unwrap())
            .collect();
        let ch = ConformalChain::from_slits(slits);
        let t = ch.total_time();
        let r = 1e4;
        let z = c(0.0, r);
        let g = chain_forward(&ch, z, 0, ch.len()).unwrap();
        let expected = z + 2.0 * t / z;
        // the next Laurent term is O(hcap * max|u| / R^2)
        assert!((g - expected).norm() <= 10.0 * t * t / r.powi(3) + 2.0 * t / (r * r));
    }

    #[test]
    fn capacity_of_single_slit_and_fitted_coefficient() {
        let ch = ConformalChain::from_slits(vec![unit()]);
        assert_eq!(half_plane_capacity(&ch), 2.0);
        let z = c(0.0, 1e6);
        let (_, disp) = ch.forward_with_displacement(z, 0, 1).unwrap();
        let a = (z * disp).re;
        assert!((a - 2.0).abs() < 1e-6, "{a}");
    }

    #[test]
    fn vertical_slit_height_capacity_relation() {
        // a slit of height y needs capacity time y^2/4, hence hcap y^2/2
        let y = 1.7;
        let s = ElementarySlit::new(0.0, y * y / 4.0).unwrap();
        assert!((s.height() - y).abs() < 1e-15);
        let ch = ConformalChain::from_slits(vec![s]);
        assert!((half_plane_capacity(&ch) - y * y / 2.0).abs() < 1e-15);
        // expansion check: z (g(z) - z) -> hcap
        let z = c(0.0, 1e6);
        let (_, disp) = ch.forward_with_displacement(z, 0, 1).unwrap();
        assert!(((z * disp).re - y * y / 2.0).abs() < 1e-6);
    }

    #[test]
    fn exact_sum_handles_cancellation() {
        let mut s = ExactSum::new();
        for x in [1e100, 1.0, -1e100, 1e-20] {
            s.add(x);
        }
        assert_eq!(s.value(), 1.0 + 1e-20);
        let mut tenths = ExactSum::new();
        for _ in 0..10 {
            tenths.add(0.1);
        }
        assert_eq!(tenths.value(), 1.0);
    }

    #[test]
    fn capacity_is_exactly_additive() {
        let a: Vec<_> = (0..1000).map(|j| ElementarySlit::new(j as f64, 1e-3 * (1.0 + (j % 7) as f64 / 3.0)).unwrap()).collect();
        let b: Vec<_> = (0..777).map(|j| ElementarySlit::new(-(j as f64), 0.1 / 3.0).unwrap()).collect();
        let ca = ConformalChain::from_slits(a);
        let cb = ConformalChain::from_slits(b);
        let joined = ca.concat(&cb);
        let mut parts = ca.capacity_sum().clone();
        parts.merge(cb.capacity_sum());
        assert!(joined.capacity_sum() == &parts);
        let sum = half_plane_capacity(&ca) + half_plane_capacity(&cb);
        assert!((half_plane_capacity(&joined) - sum).abs() <= f64::EPSILON * sum);
    }

    #[test]
    fn chain_range_errors() {
        let ch = ConformalChain::from_slits(vec![unit()]);
        assert!(ch.forward(c(0.0, 1.0), 1, 0).is_err());
        assert!(ch.forward(c(0.0, 5.0), 0, 2).is_err());
        assert!(ch.forward(c(0.0, 1.0), 0, 1).is_err()); // on the slit
    }

    #[test]
    fn image_interval_of_single_slit() {
        let ch = ConformalChain::from_slits(vec![unit()]);
        assert_eq!(ch.image_interval(0, 1).unwrap(), Some((-2.0, 2.0)));
        let (l, r) = ch.hull_base().unwrap();
        assert_eq!((l, r), (0.0, 0.0));
    }
}
