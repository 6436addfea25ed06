//! Event cache: folds confirmed contract events into queryable views.
//!
//! One writer ingests batches; readers clone an `Arc` of the views as of the
//! last completed batch. Every batch is appended to a JSONL journal followed
//! by a commit line, so a crash mid-batch loses only the uncommitted tail.

mod journal;
mod views;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use journal::{read_committed, JournalLine, JournalWriter};
pub use views::{Portfolio, StateProjection, Views};

use crate::events::ChainEvent;
use crate::types::{sha256_hex, Address};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexerError {
    #[error("gap: expected block {expected}, batch starts at {got}")]
    GapDetected { expected: u64, got: u64 },
    #[error("block {0} already processed")]
    DuplicateBlock(u64),
    #[error("malformed batch: {0}")]
    InvalidBatch(String),
    #[error("snapshot schema {found}, expected {expected}")]
    SchemaMismatch { expected: u32, found: u32 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("corrupt journal line {line}: {reason}")]
    CorruptJournal { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Events of the consecutive blocks `first_block..=last_block`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub first_block: u64,
    pub last_block: u64,
    pub events: Vec<ChainEvent>,
}

impl EventBatch {
    fn check(&self) -> Result<(), IndexerError> {
        if self.last_block < self.first_block {
            return Err(IndexerError::InvalidBatch("last_block before first_block".into()));
        }
        let mut prev: Option<(u64, u32)> = None;
        for e in &self.events {
            if e.block_number < self.first_block || e.block_number > self.last_block {
                return Err(IndexerError::InvalidBatch(format!("event in block {} outside batch", e.block_number)));
            }
            let key = (e.block_number, e.log_index);
            if prev.is_some_and(|p| p >= key) {
                return Err(IndexerError::InvalidBatch("events not strictly ordered".into()));
            }
            prev = Some(key);
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotBody {
    schema_version: u32,
    contract: Address,
    last_processed_block: u64,
    views: Views,
}

pub struct Indexer {
    contract: Address,
    last_processed_block: u64,
    views: Arc<Views>,
    journal: Option<JournalWriter>,
}

impl Indexer {
    /// Indexes the W2E deployment at `contract`; events from other
    /// emitters are journaled but not folded.
    pub fn new(contract: Address) -> Self {
        Indexer { contract, last_processed_block: 0, views: Arc::new(Views::default()), journal: None }
    }

    pub fn with_journal(mut self, writer: JournalWriter) -> Self {
        self.journal = Some(writer);
        self
    }

    pub fn contract(&self) -> Address {
        self.contract
    }

    pub fn last_processed_block(&self) -> u64 {
        self.last_processed_block
    }

    /// Views as of the last completed batch.
    pub fn views(&self) -> Arc<Views> {
        Arc::clone(&self.views)
    }

    pub fn ingest(&mut self, batch: &EventBatch) -> Result<Arc<Views>, IndexerError> {
        let expected = self.last_processed_block + 1;
        if batch.first_block < expected {
            return Err(IndexerError::DuplicateBlock(batch.first_block));
        }
        if batch.first_block > expected {
            return Err(IndexerError::GapDetected { expected, got: batch.first_block });
        }
        batch.check()?;
        if let Some(j) = &mut self.journal {
            j.append(batch)?;
        }
        let mut next = (*self.views).clone();
        for e in batch.events.iter().filter(|e| e.contract == self.contract) {
            next.apply(&e.event);
        }
        self.views = Arc::new(next);
        self.last_processed_block = batch.last_block;
        tracing::debug!(last_block = batch.last_block, events = batch.events.len(), "batch ingested");
        Ok(self.views())
    }

    pub fn query_portfolio(&self, user: &Address) -> Portfolio {
        self.views.portfolio(&self.contract, user)
    }

    /// Rebuilds from the committed part of a journal.
    pub fn replay_journal(contract: Address, path: &Path) -> Result<Self, IndexerError> {
        let mut ix = Indexer::new(contract);
        for batch in read_committed(path)? {
            ix.ingest(&batch)?;
        }
        Ok(ix)
    }

    pub fn snapshot_string(&self) -> String {
        let body = SnapshotBody {
            schema_version: SCHEMA_VERSION,
            contract: self.contract,
            last_processed_block: self.last_processed_block,
            views: (*self.views).clone(),
        };
        let json = serde_json::to_string_pretty(&body).expect("views serialize");
        format!("{json}\nchecksum sha256:{}\n", sha256_hex(json.as_bytes()))
    }

    pub fn snapshot(&self, path: &Path) -> Result<(), IndexerError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.snapshot_string())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn restore_str(text: &str) -> Result<Self, IndexerError> {
        let corrupt = |m: &str| IndexerError::CorruptSnapshot(m.to_string());
        let body_text = text.trim_end_matches('\n');
        let (json, trailer) = body_text.rsplit_once('\n').ok_or_else(|| corrupt("missing checksum line"))?;
        let digest = trailer.strip_prefix("checksum sha256:").ok_or_else(|| corrupt("missing checksum line"))?;
        if digest != sha256_hex(json.as_bytes()) {
            return Err(corrupt("checksum mismatch"));
        }
        let probe: serde_json::Value = serde_json::from_str(json).map_err(|e| corrupt(&e.to_string()))?;
        let found = probe.get("schema_version").and_then(|v| v.as_u64()).ok_or_else(|| corrupt("no schema_version"))?;
        if found != SCHEMA_VERSION as u64 {
            return Err(IndexerError::SchemaMismatch { expected: SCHEMA_VERSION, found: found as u32 });
        }
        let body: SnapshotBody = serde_json::from_value(probe).map_err(|e| corrupt(&e.to_string()))?;
        Ok(Indexer {
            contract: body.contract,
            last_processed_block: body.last_processed_block,
            views: Arc::new(body.views),
            journal: None,
        })
    }

    pub fn restore(path: &Path) -> Result<Self, IndexerError> {
        Self::restore_str(&std::fs::read_to_string(path)?)
    }
}
