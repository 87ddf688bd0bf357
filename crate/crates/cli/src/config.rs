//! `key = value` settings file, read as TOML.

use std::path::Path;

use anyhow::{bail, Context, Result};
use niffler::selection::Theta;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub threshold: Option<f64>,
    pub max_hops: Option<usize>,
    pub theta: Option<Theta>,
    pub gamma: Option<usize>,
    pub k: Option<usize>,
    pub sample_size: Option<usize>,
    pub seed: Option<u64>,
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v.as_integer() {
        Some(n) if n >= 0 => Ok(n as usize),
        _ => bail!("{key} must be a non-negative integer, got {v}"),
    }
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().context("config is not key = value TOML")?;
        let mut s = Settings::default();
        for (key, v) in &table {
            match key.as_str() {
                "threshold" => {
                    s.threshold = Some(
                        v.as_float()
                            .or_else(|| v.as_integer().map(|n| n as f64))
                            .with_context(|| format!("threshold must be a number, got {v}"))?,
                    )
                }
                "max_hops" => s.max_hops = Some(as_usize(key, v)?),
                "theta" => {
                    let text = match v {
                        toml::Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    s.theta = Some(text.parse()?);
                }
                "gamma" => s.gamma = Some(as_usize(key, v)?),
                "k" => s.k = Some(as_usize(key, v)?),
                "sample_size" => s.sample_size = Some(as_usize(key, v)?),
                "seed" => s.seed = Some(as_usize(key, v)? as u64),
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Settings::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_every_key() {
        let s = Settings::parse(
            "threshold=0.7\nmax_hops = 3\ntheta = \"inf\"\ngamma=20\nk=5\nsample_size=2\nseed=9\n",
        )
        .unwrap();
        assert_eq!(
            s,
            Settings {
                threshold: Some(0.7),
                max_hops: Some(3),
                theta: Some(Theta::Unbounded),
                gamma: Some(20),
                k: Some(5),
                sample_size: Some(2),
                seed: Some(9),
            }
        );
    }

    #[test]
    fn integer_theta_and_threshold() {
        let s = Settings::parse("theta = 2\nthreshold = 1").unwrap();
        assert_eq!(s.theta, Some(Theta::Top(2)));
        assert_eq!(s.threshold, Some(1.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Settings::parse("thresh = 0.8").is_err());
        assert!(Settings::parse("gamma = -1").is_err());
        assert!(Settings::parse("theta = 0").is_err());
    }
}
