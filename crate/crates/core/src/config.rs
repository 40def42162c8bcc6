//! Run configuration: defaults, `key = value` files and the seed variable.
//!
//! Precedence, highest first: command-line flag, config file, the
//! `PULSEGRID_SEED` environment variable (seed only), built-in default.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::boost::{BoostParams, Loss};
use crate::dsp::BandSpec;
use crate::error::{Error, Result};
use crate::eval::{CvParams, SplitMode, DEFAULT_FOLDS};
use crate::features::{FeatureConfig, DEFAULT_BEAT_LENGTH};
use crate::pca::DEFAULT_RETAIN;
use crate::signalio::DEFAULT_REGULARITY_TOLERANCE;

pub const SEED_ENV: &str = "PULSEGRID_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub band_lo: f64,
    pub band_hi: f64,
    pub feature_length: usize,
    /// Segments cut from each record.
    pub segments: usize,
    /// Segments whose RR intervals deviate more than this from their median
    /// are left out; `0` disables the check.
    pub regularity_tolerance: f64,
    /// Deterministic LMS (`r = 0.5`) when true, seeded draws otherwise.
    pub ampd_deterministic: bool,
    pub pca_retain: f64,
    pub pca_global: bool,
    pub rounds: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub loss: Loss,
    pub folds: usize,
    pub split_by: SplitMode,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BoostParams::default();
        let band = BandSpec::default();
        Self {
            band_lo: band.lo_hz,
            band_hi: band.hi_hz,
            feature_length: DEFAULT_BEAT_LENGTH,
            segments: 3,
            regularity_tolerance: DEFAULT_REGULARITY_TOLERANCE,
            ampd_deterministic: true,
            pca_retain: DEFAULT_RETAIN,
            pca_global: false,
            rounds: b.rounds,
            max_depth: b.max_depth,
            min_leaf: b.min_leaf,
            loss: b.loss,
            folds: DEFAULT_FOLDS,
            split_by: SplitMode::Subject,
            seed: 0,
            input: None,
            output: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "band_lo",
    "band_hi",
    "feature_length",
    "segments",
    "regularity_tolerance",
    "ampd_deterministic",
    "pca_retain",
    "pca_global",
    "rounds",
    "max_depth",
    "min_leaf",
    "loss",
    "folds",
    "split_by",
    "seed",
    "input",
    "output",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config { key: key.into(), message: format!("cannot parse `{value}`") })
}

impl RunConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "band_lo" => self.band_lo = parse(key, v)?,
            "band_hi" => self.band_hi = parse(key, v)?,
            "feature_length" => self.feature_length = parse(key, v)?,
            "segments" => self.segments = parse(key, v)?,
            "regularity_tolerance" => self.regularity_tolerance = parse(key, v)?,
            "ampd_deterministic" => self.ampd_deterministic = parse(key, v)?,
            "pca_retain" => self.pca_retain = parse(key, v)?,
            "pca_global" => self.pca_global = parse(key, v)?,
            "rounds" => self.rounds = parse(key, v)?,
            "max_depth" => self.max_depth = parse(key, v)?,
            "min_leaf" => self.min_leaf = parse(key, v)?,
            "loss" => {
                self.loss = v.parse().map_err(|_| Error::Config { key: key.into(), message: format!("unknown loss `{v}`") })?
            }
            "folds" => self.folds = parse(key, v)?,
            "split_by" => {
                self.split_by =
                    v.parse().map_err(|_| Error::Config { key: key.into(), message: format!("unknown split `{v}`") })?
            }
            "seed" => self.seed = parse(key, v)?,
            "input" => self.input = Some(PathBuf::from(v)),
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(Error::Config { key: key.into(), message: "unknown key".into() }),
        }
        Ok(())
    }

    /// Apply a `key = value` file; `#` starts a comment. Returns the keys set.
    pub fn apply_text(&mut self, text: &str) -> Result<Vec<String>> {
        let mut set = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                key: line.to_string(),
                message: format!("line {} is not `key = value`", ln + 1),
            })?;
            let k = k.trim();
            self.set(k, v)?;
            set.push(k.to_string());
        }
        self.validate()?;
        Ok(set)
    }

    /// Build from defaults, an optional config file and the environment seed.
    /// `env_seed` is the raw value of [`SEED_ENV`], if any.
    pub fn resolve(file_text: Option<&str>, env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(s) = env_seed {
            cfg.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config { key: SEED_ENV.into(), message: format!("cannot parse `{s}`") })?;
        }
        if let Some(t) = file_text {
            cfg.apply_text(t)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: &str| Err(Error::Config { key: key.into(), message: m.into() });
        if BandSpec::new(self.band_lo, self.band_hi).is_err() {
            return bad("band_lo", "band must satisfy 0 <= band_lo < band_hi");
        }
        if self.feature_length < 2 {
            return bad("feature_length", "must be at least 2");
        }
        if self.segments == 0 {
            return bad("segments", "must be positive");
        }
        if !(self.regularity_tolerance >= 0.0 && self.regularity_tolerance.is_finite()) {
            return bad("regularity_tolerance", "must be finite and non-negative");
        }
        if !(self.pca_retain > 0.0 && self.pca_retain <= 1.0) {
            return bad("pca_retain", "must lie in (0, 1]");
        }
        if self.rounds == 0 {
            return bad("rounds", "must be positive");
        }
        if self.min_leaf == 0 {
            return bad("min_leaf", "must be positive");
        }
        if self.folds < 2 {
            return bad("folds", "must be at least 2");
        }
        Ok(())
    }

    pub fn band(&self) -> Result<BandSpec> {
        BandSpec::new(self.band_lo, self.band_hi)
    }

    pub fn boost_params(&self) -> BoostParams {
        BoostParams { rounds: self.rounds, max_depth: self.max_depth, min_leaf: self.min_leaf, loss: self.loss }
    }

    pub fn feature_config(&self) -> Result<FeatureConfig> {
        let ampd = if self.ampd_deterministic {
            None
        } else {
            Some(crate::ampd::AmpdConfig {
                noise: crate::ampd::LmsNoise::Seeded(crate::rng::derive_seed(self.seed, 0xA3D)),
                ..crate::ampd::AmpdConfig::default()
            })
        };
        Ok(FeatureConfig {
            band: self.band()?,
            length: self.feature_length,
            ampd,
            regularity_tolerance: (self.regularity_tolerance > 0.0).then_some(self.regularity_tolerance),
        })
    }

    pub fn cv_params(&self) -> CvParams {
        CvParams {
            k: self.folds,
            split: self.split_by,
            retain: self.pca_retain,
            pca_global: self.pca_global,
            boost: self.boost_params(),
            seed: self.seed,
        }
    }

    /// Every key with its effective value, one `key = value` per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let vals: Vec<(&str, String)> = vec![
            ("band_lo", self.band_lo.to_string()),
            ("band_hi", self.band_hi.to_string()),
            ("feature_length", self.feature_length.to_string()),
            ("segments", self.segments.to_string()),
            ("regularity_tolerance", self.regularity_tolerance.to_string()),
            ("ampd_deterministic", self.ampd_deterministic.to_string()),
            ("pca_retain", self.pca_retain.to_string()),
            ("pca_global", self.pca_global.to_string()),
            ("rounds", self.rounds.to_string()),
            ("max_depth", self.max_depth.to_string()),
            ("min_leaf", self.min_leaf.to_string()),
            ("loss", self.loss.name().to_string()),
            ("folds", self.folds.to_string()),
            ("split_by", self.split_by.name().to_string()),
            ("seed", self.seed.to_string()),
            ("input", path(&self.input)),
            ("output", path(&self.output)),
        ];
        for (k, v) in vals {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
