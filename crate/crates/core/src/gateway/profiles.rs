use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::ChainConfig;
use crate::types::sha256_hex;

const BUILTIN_PROFILES: &str = include_str!("../../fixtures/profiles.toml");

pub const DEFAULT_POLL_INTERVAL_MS: u64 = 250;
pub const DEFAULT_TIMEOUT_MS: u64 = 120_000;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid profile file: {0}")]
    Parse(String),
    #[error("duplicate network name {0:?}")]
    DuplicateName(String),
    #[error("network {0:?}: rpc profiles need an endpoint_url")]
    MissingEndpoint(String),
    #[error("network {0:?}: sim profiles need a [network.sim] table")]
    MissingSimConfig(String),
    #[error("network {name:?}: {reason}")]
    InvalidSimConfig { name: String, reason: String },
    #[error("unknown network {0:?}")]
    UnknownNetwork(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Sim,
    Rpc,
}

fn default_poll() -> u64 {
    DEFAULT_POLL_INTERVAL_MS
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub name: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    pub chain_id: u64,
    #[serde(default)]
    pub sim: Option<ChainConfig>,
    #[serde(default = "default_poll")]
    pub poll_interval_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

impl NetworkProfile {
    fn validate(&self) -> Result<(), ProfileError> {
        match self.kind {
            BackendKind::Rpc if self.endpoint_url.is_none() => Err(ProfileError::MissingEndpoint(self.name.clone())),
            BackendKind::Sim => match &self.sim {
                None => Err(ProfileError::MissingSimConfig(self.name.clone())),
                Some(c) => c.validate().map_err(|e| ProfileError::InvalidSimConfig {
                    name: self.name.clone(),
                    reason: e.to_string(),
                }),
            },
            _ => Ok(()),
        }
    }
}

/// `Eth 1.0 testnet` becomes `ETH_1_0_TESTNET`.
pub fn env_slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_uppercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    #[serde(default)]
    network: Vec<NetworkProfile>,
}

/// Ordered set of network profiles loaded from a TOML file of
/// `[[network]]` tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRegistry {
    profiles: Vec<NetworkProfile>,
    source_sha256: String,
}

impl ProfileRegistry {
    /// Parses and validates. Endpoint URLs may be overridden by
    /// `W2E_RPC_URL_<SLUG>` variables before validation.
    pub fn from_toml_str(text: &str) -> Result<Self, ProfileError> {
        Self::parse_with_env(text, |k| std::env::var(k).ok())
    }

    pub fn parse_with_env(text: &str, env: impl Fn(&str) -> Option<String>) -> Result<Self, ProfileError> {
        let file: ProfileFile = toml::from_str(text).map_err(|e| ProfileError::Parse(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut profiles = file.network;
        for p in &mut profiles {
            if !seen.insert(p.name.clone()) {
                return Err(ProfileError::DuplicateName(p.name.clone()));
            }
            if let Some(url) = env(&format!("W2E_RPC_URL_{}", env_slug(&p.name))) {
                p.endpoint_url = Some(url);
            }
            p.validate()?;
        }
        Ok(ProfileRegistry { profiles, source_sha256: sha256_hex(text.as_bytes()) })
    }

    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    /// The six shipped simulator profiles.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_PROFILES).expect("shipped profiles are valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_PROFILES
    }

    pub fn source_sha256(&self) -> &str {
        &self.source_sha256
    }

    pub fn profiles(&self) -> &[NetworkProfile] {
        &self.profiles
    }

    pub fn names(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&NetworkProfile, ProfileError> {
        self.profiles
            .iter()
            .find(|p| p.name == name || env_slug(&p.name) == env_slug(name))
            .ok_or_else(|| ProfileError::UnknownNetwork(name.to_string()))
    }

    /// Keeps only the named profiles, in registry order.
    pub fn select(&self, names: &[String]) -> Result<Self, ProfileError> {
        if names.is_empty() {
            return Ok(self.clone());
        }
        for n in names {
            self.get(n)?;
        }
        let keep: Vec<String> = names.iter().map(|n| env_slug(n)).collect();
        Ok(ProfileRegistry {
            profiles: self.profiles.iter().filter(|p| keep.contains(&env_slug(&p.name))).cloned().collect(),
            source_sha256: self.source_sha256.clone(),
        })
    }
}
