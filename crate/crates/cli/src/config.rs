use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use deckforge::agent::{AgentConfig, HttpProvider};

pub const CONFIG_FILE: &str = "deckforge.toml";

pub const ENV_CONFIG: &str = "DECKFORGE_CONFIG";
pub const ENV_STATIC_DIR: &str = "DECKFORGE_STATIC_DIR";
pub const ENV_WORKDIR: &str = "DECKFORGE_WORKDIR";
pub const ENV_ENDPOINT: &str = "DECKFORGE_ENDPOINT";
pub const ENV_MODEL: &str = "DECKFORGE_MODEL";

/// Keys that would hold secret material. The file names environment
/// variables instead.
const SECRET_KEYS: &[&str] = &["api_key", "key", "token", "secret", "password", "credential"];

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub workdir: Option<PathBuf>,
    pub static_store: Option<PathBuf>,
    #[serde(default)]
    pub provider: ProviderSection,
    #[serde(default)]
    pub features: FeatureSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub agent: AgentSection,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSection {
    pub code_exec: Option<bool>,
    pub auto_approve: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub geometry: Option<f64>,
    pub energy_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub max_iterations: Option<usize>,
    pub retrieval_k: Option<usize>,
    pub code_exec_timeout_s: Option<f64>,
}

fn find_secret(value: &toml::Value, path: &str) -> Option<String> {
    let table = value.as_table()?;
    for (k, v) in table {
        let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        if SECRET_KEYS.contains(&k.as_str()) {
            return Some(here);
        }
        if let Some(found) = find_secret(v, &here) {
            return Some(found);
        }
    }
    None
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: toml::Value = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        if let Some(key) = find_secret(&raw, "") {
            return Err(format!(
                "`{key}`: credentials are not read from the config file; set `provider.api_key_env` to the name of an environment variable"
            ));
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Loads `explicit`, else `$DECKFORGE_CONFIG`, else `./deckforge.toml`
    /// when present.
    pub fn discover(explicit: Option<&Path>, env: &dyn Fn(&str) -> Option<String>) -> Result<Self, String> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => match env(ENV_CONFIG) {
                Some(p) => PathBuf::from(p),
                None if Path::new(CONFIG_FILE).is_file() => PathBuf::from(CONFIG_FILE),
                None => return Ok(Self::default()),
            },
        };
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Command-line values that override the environment and the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workdir: Option<PathBuf>,
    pub static_store: Option<PathBuf>,
    pub auto_approve: bool,
    pub code_exec: bool,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderSettings {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout: Duration,
}

impl ProviderSettings {
    pub fn http(&self) -> HttpProvider {
        HttpProvider {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout: self.timeout,
        }
    }
}

/// Settings after applying flags over environment over file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workdir: PathBuf,
    pub static_store: Option<PathBuf>,
    pub provider: Option<ProviderSettings>,
    pub agent: AgentConfig,
}

impl RunConfig {
    pub fn resolve(file: &FileConfig, env: &dyn Fn(&str) -> Option<String>, flags: &Overrides) -> Result<Self, String> {
        let workdir = flags
            .workdir
            .clone()
            .or_else(|| env(ENV_WORKDIR).map(PathBuf::from))
            .or_else(|| file.workdir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let static_store = flags
            .static_store
            .clone()
            .or_else(|| env(ENV_STATIC_DIR).map(PathBuf::from))
            .or_else(|| file.static_store.clone());
        let endpoint = env(ENV_ENDPOINT).or_else(|| file.provider.endpoint.clone());
        let model = env(ENV_MODEL).or_else(|| file.provider.model.clone());
        let provider = match (endpoint, model) {
            (Some(endpoint), Some(model)) => Some(ProviderSettings {
                endpoint,
                model,
                api_key_env: file.provider.api_key_env.clone(),
                timeout: Duration::from_secs_f64(file.provider.timeout_s.unwrap_or(120.0)),
            }),
            (None, None) => None,
            _ => return Err("provider needs both an endpoint and a model".into()),
        };

        let mut agent = AgentConfig {
            static_store: static_store.clone(),
            auto_approve: flags.auto_approve || file.features.auto_approve.unwrap_or(false),
            ..AgentConfig::default()
        };
        agent.code_exec.enabled = flags.code_exec || file.features.code_exec.unwrap_or(false);
        if let Some(t) = file.agent.code_exec_timeout_s {
            agent.code_exec.timeout_s = t;
        }
        if let Some(n) = flags.max_iterations.or(file.agent.max_iterations) {
            agent.max_iterations = n;
        }
        if let Some(k) = file.agent.retrieval_k {
            agent.retrieval_k = k;
        }
        if let Some(g) = file.tolerances.geometry {
            agent.geometry_tolerance = g;
        }
        if let Some(e) = file.tolerances.energy_threshold {
            agent.energy_threshold = e;
        }
        Ok(Self {
            workdir,
            static_store,
            provider,
            agent,
        })
    }
}
