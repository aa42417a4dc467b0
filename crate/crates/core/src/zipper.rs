//! Hierarchical evaluation of long compositions of inverse slit maps.
//!
//! Pulling a point back through `k` slits costs `k` square roots, so
//! reconstructing every tip of an `n`-step trace naively is quadratic. The
//! [`PullbackTree`] groups slits into dyadic blocks. The composed inverse map
//! of a block extends by reflection to the plane minus a real interval `I`
//! (the image of the block's hull), and away from `I` it equals `w` plus a
//! Laurent series in `1/(w - c)` with real coefficients. Each block stores
//! its series, fitted from samples on a circle around `I`, and falls back to
//! its two children when the argument is too close to the interval.

use num_complex::Complex64;

use crate::error::{Result, SleError};
use crate::loewner::{image_interval_of, slit_inverse_unchecked, ElementarySlit};

/// Number of Laurent coefficients kept per block.
const TERMS: usize = 40;
/// Samples on the fitting circle (full circle; half are mirrored).
const SAMPLES: usize = 96;
/// Fitting circle radius as a multiple of the interval half-width.
const FIT_RADIUS: f64 = 1.5;
/// The series is used when `|w - c| >= FAR * R`.
const FAR: f64 = 2.0;
/// Blocks at or below this level are evaluated slit by slit.
const DIRECT_LEVEL: u32 = 2;

/// Sample directions on the upper half of the fitting circle and the
/// Fourier factors `e^{i k theta_m}` shared by every block.
struct FitTable {
    nodes: Vec<Complex64>,
    twiddle: Vec<Complex64>,
    scale: [f64; TERMS],
}

impl FitTable {
    fn new() -> Self {
        let half = SAMPLES / 2;
        let angles: Vec<f64> = (0..half)
            .map(|m| 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / SAMPLES as f64)
            .collect();
        let nodes = angles.iter().map(|&th| Complex64::from_polar(1.0, th)).collect();
        let mut twiddle = Vec::with_capacity(TERMS * half);
        let mut scale = [0.0; TERMS];
        for (k, sc) in scale.iter_mut().enumerate() {
            let k1 = (k + 1) as f64;
            twiddle.extend(angles.iter().map(|&th| Complex64::from_polar(1.0, k1 * th)));
            *sc = 2.0 / SAMPLES as f64 * FIT_RADIUS.powf(k1);
        }
        Self {
            nodes,
            twiddle,
            scale,
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    center: f64,
    radius: f64,
    /// Coefficients scaled by `radius^k`, i.e. the series is
    /// `sum_k coef[k-1] * (radius / (w - center))^k`.
    coef: [f64; TERMS],
}

/// Precomputed hierarchy over an ordered list of slits.
#[derive(Debug, Clone)]
pub struct PullbackTree {
    slits: Vec<ElementarySlit>,
    heights: Vec<f64>,
    /// `levels[l - DIRECT_LEVEL - 1][i]` covers slits `[i << l, (i + 1) << l)`.
    levels: Vec<Vec<Block>>,
}

impl PullbackTree {
    pub fn new(slits: &[ElementarySlit]) -> Self {
        let mut tree = Self {
            slits: slits.to_vec(),
            heights: slits.iter().map(|s| s.height()).collect(),
            levels: Vec::new(),
        };
        let n = slits.len();
        let table = FitTable::new();
        let mut level = DIRECT_LEVEL + 1;
        while (1usize << level) <= n {
            let size = 1usize << level;
            let count = n / size;
            let blocks = (0..count)
                .map(|i| tree.fit_block(&table, level, i * size, (i + 1) * size))
                .collect();
            tree.levels.push(blocks);
            level += 1;
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.slits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slits.is_empty()
    }

    pub fn slits(&self) -> &[ElementarySlit] {
        &self.slits
    }

    fn block(&self, level: u32, index: usize) -> Option<&Block> {
        if level <= DIRECT_LEVEL {
            return None;
        }
        self.levels
            .get((level - DIRECT_LEVEL - 1) as usize)
            .and_then(|v| v.get(index))
    }

    fn fit_block(&self, table: &FitTable, level: u32, from: usize, to: usize) -> Block {
        let (lo, hi) = image_interval_of(&self.slits[from..to]).expect("nonempty block");
        let center = 0.5 * (lo + hi);
        let radius = 0.5 * (hi - lo);
        let rho = FIT_RADIUS * radius;
        let index = from >> level;
        let psi: Vec<Complex64> = table
            .nodes
            .iter()
            .map(|&e| {
                let w = e * rho + center;
                self.eval_children(level, index, w) - w
            })
            .collect();
        // a_k = (2 rho^k / M) sum_m Re(psi_m e^{ik theta_m}); stored as a_k / R^k.
        let mut coef = [0.0; TERMS];
        for (k, c) in coef.iter_mut().enumerate() {
            let row = &table.twiddle[k * psi.len()..(k + 1) * psi.len()];
            let s: f64 = psi.iter().zip(row).map(|(p, e)| (p * e).re).sum();
            *c = s * table.scale[k];
        }
        Block {
            center,
            radius,
            coef,
        }
    }

    /// Composition of the two children of block `(level, index)`.
    fn eval_children(&self, level: u32, index: usize, w: Complex64) -> Complex64 {
        let w = self.eval_block(level - 1, 2 * index + 1, w);
        self.eval_block(level - 1, 2 * index, w)
    }

    fn eval_block(&self, level: u32, index: usize, w: Complex64) -> Complex64 {
        match self.block(level, index) {
            Some(b) => {
                let d = w - b.center;
                if d.norm_sqr() >= (FAR * b.radius).powi(2) {
                    let t = b.radius / d;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &c in b.coef.iter().rev() {
                        acc = (acc + c) * t;
                    }
                    w + acc
                } else {
                    self.eval_children(level, index, w)
                }
            }
            None => {
                let from = index << level;
                let to = (from + (1 << level)).min(self.slits.len());
                self.direct(w, from, to)
            }
        }
    }

    fn direct(&self, w: Complex64, from: usize, to: usize) -> Complex64 {
        (from..to).rev().fold(w, |w, j| {
            let s = &self.slits[j];
            slit_inverse_unchecked(w - s.u, self.heights[j], s.u)
        })
    }

    /// Applies the inverse maps of slits `from..to`, last slit first.
    pub fn pullback_range(&self, w: Complex64, from: usize, to: usize) -> Result<Complex64> {
        if from > to || to > self.slits.len() {
            return Err(SleError::IndexRange {
                from,
                to,
                len: self.slits.len(),
            });
        }
        let mut w = w;
        let mut end = to;
        while end > from {
            let mut level = end.trailing_zeros();
            while (1usize << level) > end - from {
                level -= 1;
            }
            let size = 1usize << level;
            w = if level <= DIRECT_LEVEL {
                self.direct(w, end - size, end)
            } else {
                self.eval_block(level, (end - size) >> level, w)
            };
            end -= size;
        }
        Ok(w)
    }

    /// Trace point after `k` slits: the tip of slit `k - 1` pulled back
    /// through the earlier slits. `tip(0)` is the origin.
    pub fn tip(&self, k: usize) -> Result<Complex64> {
        if k == 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if k > self.slits.len() {
            return Err(SleError::IndexRange {
                from: 0,
                to: k,
                len: self.slits.len(),
            });
        }
        self.pullback_range(self.slits[k - 1].tip(), 0, k - 1)
    }
}
