use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub const ENV_BIND: &str = "SONOLEARN_BIND";
pub const ENV_PORT: &str = "SONOLEARN_PORT";
pub const ENV_DATA_DIR: &str = "SONOLEARN_DATA_DIR";
pub const ENV_LIBRARY_DIR: &str = "SONOLEARN_LIBRARY_DIR";
pub const ENV_PRIORS_DIR: &str = "SONOLEARN_PRIORS_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    /// Session logs and the session index.
    pub data_dir: PathBuf,
    /// One sub-directory per sound library, each with a manifest.
    pub library_dir: PathBuf,
    /// Where prior files named in session requests are looked up.
    pub priors_dir: PathBuf,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_dir: "data".into(),
            library_dir: "libraries".into(),
            priors_dir: "priors".into(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads the file if given (defaults otherwise); relative directories
    /// resolve against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            for dir in [&mut config.data_dir, &mut config.library_dir, &mut config.priors_dir] {
                if dir.is_relative() {
                    *dir = base.join(&*dir);
                }
            }
        }
        Ok(config)
    }

    /// Environment variables take precedence over the file.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get(ENV_BIND) {
            self.bind = v;
        }
        if let Some(v) = get(ENV_PORT) {
            self.port = v.parse().map_err(|_| ConfigError(format!("{ENV_PORT}: `{v}` is not a port")))?;
        }
        if let Some(v) = get(ENV_DATA_DIR) {
            self.data_dir = v.into();
        }
        if let Some(v) = get(ENV_LIBRARY_DIR) {
            self.library_dir = v.into();
        }
        if let Some(v) = get(ENV_PRIORS_DIR) {
            self.priors_dir = v.into();
        }
        Ok(())
    }

    pub fn from_process_env(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = Self::load(path)?;
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file() {
        let mut c = ServiceConfig::from_toml_str("port = 9000\ndata_dir = \"/srv/d\"").unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.library_dir, PathBuf::from("libraries"));
        c.apply_env(|k| match k {
            ENV_PORT => Some("9100".into()),
            ENV_LIBRARY_DIR => Some("/srv/libs".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.port, 9100);
        assert_eq!(c.data_dir, PathBuf::from("/srv/d"));
        assert_eq!(c.library_dir, PathBuf::from("/srv/libs"));
        assert!(c.apply_env(|k| (k == ENV_PORT).then(|| "x".into())).is_err());
        assert!(ServiceConfig::from_toml_str("prot = 1").is_err());
    }
}
