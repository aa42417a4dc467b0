//! Flat run configuration, read from TOML and overridable from the command
//! line.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sle_core::rng::derive_seed;
use sle_core::{BoundingBox, BubbleParams, CrossingParams, HittingQuery};

use crate::HarnessError;

/// Every key is optional in the file; missing keys take these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    pub horizon: f64,
    pub steps: usize,
    /// Explicit seeds. When empty, `count` seeds are derived from
    /// `base_seed` as `derive_seed(base_seed, i)`.
    pub seeds: Vec<u64>,
    pub base_seed: u64,
    pub count: usize,
    /// Pixel side of the bubble raster.
    pub resolution: f64,
    pub box_x_min: f64,
    pub box_x_max: f64,
    pub box_y_max: f64,
    /// Axis tolerance for crossings; 0 means four median sample gaps.
    pub delta: f64,
    /// Dead zone around the origin; 0 means `2 delta`.
    pub delta0: f64,
    pub eps_sep: f64,
    /// Hitting detection tolerance in units of `sqrt(kappa dt)`; 0 detects
    /// the sign change of the boundary process.
    pub collision_tol_factor: f64,
    pub r: f64,
    pub n: usize,
    /// Future window for crossing counts; 0 means the rest of the path.
    pub future_horizon: f64,
    pub a: f64,
    pub c: f64,
    pub trials: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bbox = BoundingBox::default();
        Self {
            kappa: 6.0,
            horizon: 1.0,
            steps: 100_000,
            seeds: Vec::new(),
            base_seed: 0,
            count: 1,
            resolution: 1.0 / 512.0,
            box_x_min: bbox.x_min,
            box_x_max: bbox.x_max,
            box_y_max: bbox.y_max,
            delta: 0.0,
            delta0: 0.0,
            eps_sep: 0.01,
            collision_tol_factor: 0.0,
            r: 0.05,
            n: 1,
            future_horizon: 0.0,
            a: -1.0,
            c: 1.0,
            trials: 2000,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    /// Seed list after expansion.
    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.count as u64).map(|i| derive_seed(self.base_seed, i)).collect()
        } else {
            self.seeds.clone()
        }
    }

    /// Same configuration with the seed list written out.
    pub fn resolved(&self) -> Self {
        Self {
            seeds: self.seed_list(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Usage(m));
        if self.steps < 10 {
            return bad(format!("steps must be at least 10, got {}", self.steps));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        let seeds = self.seed_list();
        if seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return bad("seeds must be distinct".into());
        }
        for (name, v) in [("delta", self.delta), ("delta0", self.delta0), ("future_horizon", self.future_horizon)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.eps_sep > 0.0) {
            return bad(format!("eps_sep must be positive, got {}", self.eps_sep));
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration, independent of `output_dir`.
    pub fn hash(&self) -> String {
        let canon = Self {
            output_dir: PathBuf::new(),
            ..self.resolved()
        };
        let digest = Sha256::digest(canon.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            x_min: self.box_x_min,
            x_max: self.box_x_max,
            y_max: self.box_y_max,
        }
    }

    pub fn bubble_params(&self) -> BubbleParams {
        BubbleParams::default()
    }

    pub fn crossing_params(&self) -> CrossingParams {
        let opt = |v: f64| (v > 0.0).then_some(v);
        CrossingParams {
            r: self.r,
            n: self.n,
            eps_sep: self.eps_sep,
            future_horizon: opt(self.future_horizon),
            delta: opt(self.delta),
            delta0: opt(self.delta0).or(opt(self.delta).map(|d| 2.0 * d)),
        }
    }

    pub fn hitting_query(&self) -> sle_core::Result<HittingQuery> {
        HittingQuery::new(self.kappa, self.a, self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            seeds: vec![3, 1, 2],
            kappa: 8.0,
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_files_and_unknown_keys() {
        let cfg = RunConfig::parse("kappa = 8.0\nsteps = 500\n").unwrap();
        assert_eq!(cfg.kappa, 8.0);
        assert_eq!(cfg.steps, 500);
        assert_eq!(cfg.horizon, 1.0);
        assert!(RunConfig::parse("kapa = 8.0").is_err());
        assert!(RunConfig::parse("[section]\nkappa = 8.0").is_err());
    }

    #[test]
    fn seed_expansion() {
        let cfg = RunConfig {
            base_seed: 5,
            count: 4,
            ..Default::default()
        };
        let seeds = cfg.seed_list();
        assert_eq!(seeds.len(), 4);
        assert_eq!(seeds[2], derive_seed(5, 2));
        assert_eq!(cfg.resolved().seeds, seeds);
        assert_eq!(cfg.hash(), cfg.resolved().hash());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig { steps: 9, ..Default::default() },
            RunConfig { seeds: vec![1, 1], ..Default::default() },
            RunConfig { count: 0, ..Default::default() },
            RunConfig { resolution: 0.0, ..Default::default() },
            RunConfig { delta: -1.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(HarnessError::Usage(_))), "{cfg:?}");
        }
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: "elsewhere".into(),
            ..Default::default()
        };
        let c = RunConfig {
            kappa: 6.5,
            ..Default::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
