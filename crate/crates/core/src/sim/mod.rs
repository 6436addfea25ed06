//! Deterministic in-process chain.
//!
//! Blocks are produced on a fixed interval of simulated time. A submitted
//! transaction waits a seeded, uniformly drawn number of blocks; its receipt
//! becomes visible one seeded network overhead after the including block.
//! Token operations are charged flat gas from the operation-cost table, the
//! rest through [`intrinsic_gas`]. Nothing executes EVM bytecode.

mod chain;
mod config;
mod gas;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chain::{DeployedContract, SimChain};
pub use config::{ChainConfig, OperationCosts};
pub use gas::{check_gas_limit, fee_gwei, intrinsic_gas};

use crate::events::ChainEvent;
use crate::types::{u128_str, Address, Gas, Gwei, TxHash, Wei};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid chain config: {0}")]
    InvalidConfig(String),
    #[error("nonce too low: expected {expected}, got {got}")]
    NonceTooLow { expected: u64, got: u64 },
    #[error("nonce gap: expected {expected}, got {got}")]
    NonceGap { expected: u64, got: u64 },
    #[error("insufficient funds: available {available} wei, need {needed} wei")]
    InsufficientFunds { available: Wei, needed: Wei },
    #[error("gas limit {limit} below required {needed}")]
    GasLimitExceeded { needed: Gas, limit: Gas },
    #[error("clock cannot move back from {now} ms to {requested} ms")]
    ClockRegression { now: u64, requested: u64 },
    #[error("transaction {0} is not confirmed")]
    NotConfirmed(TxHash),
    #[error("unknown transaction {0}")]
    UnknownTransaction(TxHash),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub from: Address,
    /// `None` deploys `payload` as contract code.
    pub to: Option<Address>,
    pub payload: Vec<u8>,
    #[serde(with = "u128_str")]
    pub value_wei: Wei,
    pub gas_limit: Gas,
    pub nonce: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Reverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_hash: TxHash,
    pub block_number: u64,
    pub status: TxStatus,
    pub gas_used: Gas,
    pub gas_price: Gwei,
    pub fee: Gwei,
    pub submitted_at_ms: u64,
    pub confirmed_at_ms: u64,
    pub contract_address: Option<Address>,
    pub revert_reason: Option<String>,
    pub logs: Vec<ChainEvent>,
}

impl Receipt {
    /// `confirmed_at − submitted_at` on the backend's own clock.
    pub fn latency_ms(&self) -> u64 {
        self.confirmed_at_ms - self.submitted_at_ms
    }

    pub fn succeeded(&self) -> bool {
        self.status == TxStatus::Success
    }
}
