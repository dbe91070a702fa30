//! TOML configuration files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use sagin_core::config::Config;
use sha2::{Digest, Sha256};

/// Parses and validates a configuration document. `origin` names the source
/// in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<Config> {
    let de = toml::Deserializer::parse(text).map_err(|e| anyhow!("{origin}: {e}"))?;
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("{origin}: {path}: {}", e.inner().message().trim())
    })?;
    cfg.validate().map_err(|e| anyhow!("{origin}: {e}"))?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).with_context(|| format!("config file {}", path.display()))?;
    parse_config_str(&text, &path.display().to_string())
}

/// The fully resolved configuration, every default written out.
pub fn to_toml(cfg: &Config) -> Result<String> {
    Ok(toml::to_string(cfg)?)
}

/// SHA-256 of the resolved configuration; stable under re-parsing.
pub fn config_hash(cfg: &Config) -> Result<String> {
    let digest = Sha256::digest(to_toml(cfg)?.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(parse_config_str("", "t").unwrap(), Config::default());
    }

    #[test]
    fn single_override() {
        let c = parse_config_str("[lyapunov]\nv_weight = 10.0\n", "t").unwrap();
        let mut d = Config::default();
        d.lyapunov.v_weight = 10.0;
        assert_eq!(c, d);
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse_config_str("[channel]\nbandwidth_c = -1.0\n", "cfg.toml").unwrap_err().to_string();
        assert!(e.contains("channel.bandwidth_c"), "{e}");
        let e = parse_config_str("[world]\nbogus = 1\n", "cfg.toml").unwrap_err().to_string();
        assert!(e.contains("world") && e.contains("bogus"), "{e}");
        let e = parse_config(Path::new("/nonexistent/x.toml")).unwrap_err();
        assert!(format!("{e:#}").contains("/nonexistent/x.toml"));
    }

    #[test]
    fn hash_is_stable_under_reparse() {
        let c = parse_config_str("[task]\narrival_rate = 0.2\n", "t").unwrap();
        let again = parse_config_str(&to_toml(&c).unwrap(), "t").unwrap();
        assert_eq!(c, again);
        assert_eq!(config_hash(&c).unwrap(), config_hash(&again).unwrap());
        assert_ne!(config_hash(&c).unwrap(), config_hash(&Config::default()).unwrap());
    }
}
