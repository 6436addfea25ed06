use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::events::ChainEvent;
use crate::indexer::{EventBatch, IndexerError};

/// One journal line. A batch is its events followed by a `commit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum JournalLine {
    Event(ChainEvent),
    Commit { first_block: u64, last_block: u64, events: usize },
}

pub struct JournalWriter {
    out: BufWriter<File>,
}

impl JournalWriter {
    pub fn open(path: &Path) -> Result<Self, IndexerError> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JournalWriter { out: BufWriter::new(f) })
    }

    pub fn append(&mut self, batch: &EventBatch) -> Result<(), IndexerError> {
        for e in &batch.events {
            serde_json::to_writer(&mut self.out, &JournalLine::Event(e.clone())).map_err(std::io::Error::other)?;
            self.out.write_all(b"\n")?;
        }
        let commit = JournalLine::Commit {
            first_block: batch.first_block,
            last_block: batch.last_block,
            events: batch.events.len(),
        };
        serde_json::to_writer(&mut self.out, &commit).map_err(std::io::Error::other)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Batches with a commit line. An uncommitted tail, including a torn last
/// line, is dropped.
pub fn read_committed(path: &Path) -> Result<Vec<EventBatch>, IndexerError> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
    let mut batches = Vec::new();
    let mut pending = Vec::new();
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JournalLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(_) if i == last => break,
            Err(e) => return Err(IndexerError::CorruptJournal { line: i + 1, reason: e.to_string() }),
        };
        match parsed {
            JournalLine::Event(e) => pending.push(e),
            JournalLine::Commit { first_block, last_block, events } => {
                if events != pending.len() {
                    return Err(IndexerError::CorruptJournal {
                        line: i + 1,
                        reason: format!("commit counts {events} events, found {}", pending.len()),
                    });
                }
                batches.push(EventBatch { first_block, last_block, events: std::mem::take(&mut pending) });
            }
        }
    }
    Ok(batches)
}
