//! TOML audit configuration.

use std::path::{Path, PathBuf};

use fiat_core::circuit::Algo;
use fiat_core::{Error, Result};
use serde::Deserialize;

pub const DEFAULT_FRACTION: f64 = 0.4;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSpec {
    pub fixed: Option<f64>,
    pub entropy_fraction: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    EntropyFraction(f64),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: Option<PathBuf>,
    roles: Option<PathBuf>,
    threshold: Option<ThresholdSpec>,
    k: Option<usize>,
    algo: Option<String>,
    intervals: Option<usize>,
    max_iters: Option<usize>,
    backend: Option<String>,
    out: Option<PathBuf>,
    owner: Option<String>,
    consumer: Option<String>,
}

#[derive(Clone, Debug)]
pub struct AuditConfig {
    pub dataset: Option<PathBuf>,
    pub roles: Option<PathBuf>,
    pub threshold: Threshold,
    pub algo: Option<Algo>,
    pub intervals: usize,
    pub max_iters: usize,
    pub backend: String,
    pub out: Option<PathBuf>,
    pub owner: String,
    pub consumer: String,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            dataset: None,
            roles: None,
            threshold: Threshold::EntropyFraction(DEFAULT_FRACTION),
            algo: None,
            intervals: fiat_core::estimator::DEFAULT_INTERVALS,
            max_iters: fiat_core::pca::DEFAULT_MAX_ITERS,
            backend: "direct".into(),
            out: None,
            owner: "owner".into(),
            consumer: "consumer".into(),
        }
    }
}

impl AuditConfig {
    /// Parses `text`; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
        let d = AuditConfig::default();
        let threshold = match raw.threshold {
            None => d.threshold,
            Some(ThresholdSpec { fixed: Some(v), entropy_fraction: None }) => Threshold::Fixed(v),
            Some(ThresholdSpec { fixed: None, entropy_fraction: Some(f) }) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::ParseError(format!("entropy_fraction {f} outside [0, 1]")));
                }
                Threshold::EntropyFraction(f)
            }
            Some(_) => return Err(Error::ParseError("set exactly one of threshold.fixed, threshold.entropy_fraction".into())),
        };
        let algo = match (raw.k, raw.algo) {
            (Some(_), Some(_)) => return Err(Error::ParseError("set either k or algo, not both".into())),
            (Some(k), None) => Some(Algo::Pca(k)),
            (None, Some(a)) => Some(a.parse()?),
            (None, None) => None,
        };
        if let Some(Algo::Pca(0)) = algo {
            return Err(Error::ParseError("k must be at least 1".into()));
        }
        let resolve = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
        Ok(AuditConfig {
            dataset: resolve(raw.dataset),
            roles: resolve(raw.roles),
            threshold,
            algo,
            intervals: raw.intervals.unwrap_or(d.intervals),
            max_iters: raw.max_iters.unwrap_or(d.max_iters),
            backend: raw.backend.unwrap_or(d.backend),
            out: resolve(raw.out),
            owner: raw.owner.unwrap_or(d.owner),
            consumer: raw.consumer.unwrap_or(d.consumer),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn fraction(&self) -> f64 {
        match self.threshold {
            Threshold::EntropyFraction(f) => f,
            Threshold::Fixed(_) => DEFAULT_FRACTION,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_modes() {
        let base = Path::new("/data");
        let c = AuditConfig::parse("dataset = \"a.csv\"\nk = 3\n[threshold]\nfixed = 0.5\n", base).unwrap();
        assert_eq!(c.threshold, Threshold::Fixed(0.5));
        assert_eq!(c.algo, Some(Algo::Pca(3)));
        assert_eq!(c.dataset.unwrap(), Path::new("/data/a.csv"));
        let c = AuditConfig::parse("", base).unwrap();
        assert_eq!(c.threshold, Threshold::EntropyFraction(0.4));
        assert!(AuditConfig::parse("[threshold]\nfixed = 0.5\nentropy_fraction = 0.4\n", base).is_err());
        assert!(AuditConfig::parse("k = 0\n", base).is_err());
        assert!(AuditConfig::parse("colour = 1\n", base).is_err());
    }
}
