use std::collections::VecDeque;

use crate::gateway::GatewayError;
use crate::sim::Transaction;
use crate::types::Gwei;

/// Produces raw signed transaction bytes for `eth_sendRawTransaction`.
/// Key handling stays outside this crate.
pub trait TxSigner: Send {
    fn sign(&mut self, tx: &Transaction, chain_id: u64, gas_price: Gwei) -> Result<Vec<u8>, GatewayError>;
}

/// Hands out pre-signed blobs in order, ignoring the transaction fields.
#[derive(Debug, Clone, Default)]
pub struct PresignedQueue {
    blobs: VecDeque<Vec<u8>>,
}

impl PresignedQueue {
    pub fn new(blobs: impl IntoIterator<Item = Vec<u8>>) -> Self {
        PresignedQueue { blobs: blobs.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.blobs.len()
    }
}

impl TxSigner for PresignedQueue {
    fn sign(&mut self, _tx: &Transaction, _chain_id: u64, _gas_price: Gwei) -> Result<Vec<u8>, GatewayError> {
        self.blobs
            .pop_front()
            .ok_or_else(|| GatewayError::Signer("presigned queue is empty".to_string()))
    }
}
