use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::TokenStandard;

const BUILTIN: [&str; 4] = [
    include_str!("../../fixtures/artifacts/DmdToken.json"),
    include_str!("../../fixtures/artifacts/PetNft.json"),
    include_str!("../../fixtures/artifacts/MultiToken.json"),
    include_str!("../../fixtures/artifacts/OperatorToken.json"),
];

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid artifact {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("no {0} artifact loaded")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractArtifact {
    pub name: String,
    pub standard: TokenStandard,
    pub bytecode_hex: String,
    #[serde(default)]
    pub abi: serde_json::Value,
}

impl ContractArtifact {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ArtifactError> {
        let a: ContractArtifact = serde_json::from_str(text)
            .map_err(|e| ArtifactError::Invalid { path: origin.to_string(), reason: e.to_string() })?;
        a.bytecode().map_err(|reason| ArtifactError::Invalid { path: origin.to_string(), reason })?;
        Ok(a)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ArtifactError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Decoded bytecode. Must be non-empty, even-length hex.
    pub fn bytecode(&self) -> Result<Vec<u8>, String> {
        let h = self.bytecode_hex.strip_prefix("0x").unwrap_or(&self.bytecode_hex);
        if h.is_empty() {
            return Err("empty bytecode".into());
        }
        hex::decode(h).map_err(|e| format!("bytecode: {e}"))
    }
}

/// At most one artifact per standard. A standard whose file failed to load
/// keeps its error so benches can mark just that column.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    loaded: BTreeMap<TokenStandard, ContractArtifact>,
    failed: BTreeMap<TokenStandard, String>,
}

impl ArtifactSet {
    pub fn insert(&mut self, a: ContractArtifact) {
        self.failed.remove(&a.standard);
        self.loaded.insert(a.standard, a);
    }

    pub fn mark_failed(&mut self, s: TokenStandard, reason: String) {
        self.loaded.remove(&s);
        self.failed.insert(s, reason);
    }

    pub fn get(&self, s: TokenStandard) -> Result<&ContractArtifact, ArtifactError> {
        self.loaded.get(&s).ok_or(ArtifactError::Missing(s.label()))
    }

    pub fn failure(&self, s: TokenStandard) -> Option<&str> {
        self.failed.get(&s).map(String::as_str)
    }

    /// Loads every `*.json` in `dir`. Standards without a readable file are
    /// recorded as failed rather than aborting.
    pub fn load_dir(dir: &Path) -> Result<Self, ArtifactError> {
        let entries = std::fs::read_dir(dir)
            .map_err(|source| ArtifactError::Io { path: dir.display().to_string(), source })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut set = ArtifactSet::default();
        let mut errors = Vec::new();
        for p in paths {
            match ContractArtifact::load(&p) {
                Ok(a) => set.insert(a),
                Err(e) => errors.push(e.to_string()),
            }
        }
        for s in TokenStandard::ALL {
            if !set.loaded.contains_key(&s) {
                let reason = if errors.is_empty() {
                    format!("no {} artifact in {}", s.label(), dir.display())
                } else {
                    errors.join("; ")
                };
                set.failed.insert(s, reason);
            }
        }
        Ok(set)
    }
}

/// The four shipped artifacts: DMD token (ERC-20), pet NFT (ERC-721), and
/// two comparison contracts (ERC-1155, ERC-777).
pub fn builtin_artifacts() -> ArtifactSet {
    let mut set = ArtifactSet::default();
    for (i, text) in BUILTIN.iter().enumerate() {
        set.insert(ContractArtifact::from_json(text, &format!("builtin #{i}")).expect("shipped artifact is valid"));
    }
    set
}
