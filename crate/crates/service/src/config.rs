use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const CONFIG_ENV: &str = "SCORELENS_CONFIG";

/// Service settings, read from TOML. Relative paths resolve against the
/// directory holding the config file. Unset resources fall back to the
/// bundled ones; an unset event log keeps history in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub models: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub training_corpus: Option<PathBuf>,
    pub event_log: Option<PathBuf>,
    pub external_timeout_secs: u64,
    pub workers: usize,
    pub attention_cache: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            models: None,
            lexicon: None,
            dictionary: None,
            stopwords: None,
            training_corpus: None,
            event_log: None,
            external_timeout_secs: 60,
            workers: 4,
            attention_cache: 8,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: ServiceConfig =
            toml::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            config.resolve_relative(dir);
        }
        Ok(config)
    }

    /// `explicit`, else the path in `SCORELENS_CONFIG`, else defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<Self, ServiceError> {
        match explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
            Some(path) => Self::load(path),
            None => Ok(Self::default()),
        }
    }

    fn resolve_relative(&mut self, dir: &Path) {
        for p in [
            &mut self.models,
            &mut self.lexicon,
            &mut self.dictionary,
            &mut self.stopwords,
            &mut self.training_corpus,
            &mut self.event_log,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ServiceError> {
        let addr: SocketAddr = self
            .listen
            .parse()
            .map_err(|e| ServiceError::Config(format!("listen `{}`: {e}", self.listen)))?;
        if addr.port() == 0 {
            return Err(ServiceError::Config("listen port must be in 1..=65535".into()));
        }
        Ok(addr)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        self.listen_addr()?;
        if self.workers == 0 {
            return Err(ServiceError::Config("workers must be at least 1".into()));
        }
        if self.attention_cache == 0 {
            return Err(ServiceError::Config("attention_cache must be at least 1".into()));
        }
        let readable = [
            ("models", &self.models),
            ("lexicon", &self.lexicon),
            ("dictionary", &self.dictionary),
            ("stopwords", &self.stopwords),
            ("training_corpus", &self.training_corpus),
        ];
        for (name, path) in readable {
            if let Some(path) = path {
                std::fs::File::open(path)
                    .map_err(|e| ServiceError::Config(format!("{name} {}: {e}", path.display())))?;
            }
        }
        if let Some(log) = &self.event_log {
            let parent = log.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(ServiceError::Config(format!("event_log directory {} does not exist", parent.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ServiceConfig::default().validate().unwrap();
    }

    #[test]
    fn relative_paths_and_port() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("lex.tsv"), "cat\tfeline\n").unwrap();
        let path = dir.path().join("scorelens.toml");
        std::fs::write(&path, "listen = \"127.0.0.1:9000\"\nlexicon = \"lex.tsv\"\nworkers = 2\n").unwrap();
        let cfg = ServiceConfig::load(&path).unwrap();
        assert_eq!(cfg.lexicon.as_deref(), Some(dir.path().join("lex.tsv").as_path()));
        cfg.validate().unwrap();

        let bad = ServiceConfig { listen: "127.0.0.1:0".into(), ..cfg.clone() };
        assert!(bad.validate().is_err());
        let missing = ServiceConfig { models: Some(dir.path().join("nope.json")), ..cfg };
        assert!(missing.validate().unwrap_err().to_string().contains("models"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "listen = \"127.0.0.1:1\"\nwokers = 2\n").unwrap();
        assert!(ServiceConfig::load(&path).is_err());
    }
}
