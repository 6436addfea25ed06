use std::path::Path;

use serde::Deserialize;

use crate::bench::BenchError;
use crate::types::Gwei;

const BUILTIN: &str = include_str!("../../fixtures/published_reference.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FeeRow {
    pub network: String,
    pub values: Vec<Gwei>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FeeTable {
    pub columns: Vec<String>,
    pub rows: Vec<FeeRow>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LatencyRow {
    pub network: String,
    pub trials: Vec<u64>,
    /// As printed in the source table.
    pub average: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LatencyTable {
    pub rows: Vec<LatencyRow>,
}

/// Published measurements, used for compare mode only.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PublishedReference {
    pub deploy_fee: FeeTable,
    pub function_fee: FeeTable,
    pub deploy_latency: LatencyTable,
    pub buy_latency: LatencyTable,
}

impl PublishedReference {
    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Reference(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Reference(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("shipped reference data is valid")
    }
}
