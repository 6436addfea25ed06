use serde::{Deserialize, Serialize};

use crate::reward::RewardGrant;
use crate::types::{u128_str, Address, Dmd, TokenId, TxHash};

/// Everything the W2E contracts log. Mints and burns of DMD are `Transfer`s
/// from or to the zero address, pet mints are `NftTransfer`s from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    Transfer {
        from: Address,
        to: Address,
        #[serde(with = "u128_str")]
        amount: Dmd,
    },
    Approval {
        owner: Address,
        spender: Address,
        #[serde(with = "u128_str")]
        amount: Dmd,
    },
    NftTransfer {
        from: Address,
        to: Address,
        token_id: TokenId,
    },
    NftApproval {
        owner: Address,
        token_id: TokenId,
        approved: Option<Address>,
    },
    Listed {
        seller: Address,
        token_id: TokenId,
        #[serde(with = "u128_str")]
        price: Dmd,
    },
    Purchased {
        buyer: Address,
        seller: Address,
        token_id: TokenId,
        #[serde(with = "u128_str")]
        price: Dmd,
    },
    Cancelled {
        seller: Address,
        token_id: TokenId,
    },
    Rewarded(RewardGrant),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Transfer { .. } => "Transfer",
            EventKind::Approval { .. } => "Approval",
            EventKind::NftTransfer { .. } => "NftTransfer",
            EventKind::NftApproval { .. } => "NftApproval",
            EventKind::Listed { .. } => "Listed",
            EventKind::Purchased { .. } => "Purchased",
            EventKind::Cancelled { .. } => "Cancelled",
            EventKind::Rewarded(_) => "Rewarded",
        }
    }
}

/// An event once its transaction is included in a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEvent {
    pub block_number: u64,
    pub tx_hash: TxHash,
    /// Position within the block, counting across all transactions.
    pub log_index: u32,
    pub contract: Address,
    pub event: EventKind,
}
