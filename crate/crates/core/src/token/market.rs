use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{u128_str, Address, Dmd, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub seller: Address,
    #[serde(with = "u128_str")]
    pub price_dmd: Dmd,
    pub active: bool,
}

/// Approval-based listings: the pet stays with the seller until bought.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marketplace {
    pub(crate) listings: BTreeMap<TokenId, Listing>,
}

impl Marketplace {
    pub fn listing(&self, id: TokenId) -> Option<&Listing> {
        self.listings.get(&id)
    }

    pub fn listings(&self) -> impl Iterator<Item = (TokenId, &Listing)> {
        self.listings.iter().map(|(id, l)| (*id, l))
    }
}

/// Fixed-rate native coin to DMD desk run by the operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaleDesk {
    /// DMD base units credited per 1 native coin (10^18 wei).
    #[serde(with = "u128_str")]
    pub rate_dmd_per_native: Dmd,
    pub treasury: Address,
}

impl SaleDesk {
    pub const DEFAULT_RATE: Dmd = 1000;
}
