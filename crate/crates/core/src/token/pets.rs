use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{Address, TokenId};

/// Pet ownership, per-token approvals and bonus rates.
///
/// Token ids start at 0 and are never reused.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NftRegistry {
    pub(crate) owners: BTreeMap<TokenId, Address>,
    pub(crate) approvals: BTreeMap<TokenId, Address>,
    pub(crate) bonus_rate_pct: BTreeMap<TokenId, u32>,
    pub(crate) owned_count: BTreeMap<Address, u64>,
    pub(crate) next_token_id: TokenId,
}

impl NftRegistry {
    pub fn owner_of(&self, id: TokenId) -> Option<Address> {
        self.owners.get(&id).copied()
    }

    pub fn approved(&self, id: TokenId) -> Option<Address> {
        self.approvals.get(&id).copied()
    }

    pub fn bonus_rate(&self, id: TokenId) -> Option<u32> {
        self.bonus_rate_pct.get(&id).copied()
    }

    pub fn pets_of(&self, who: &Address) -> u64 {
        self.owned_count.get(who).copied().unwrap_or(0)
    }

    pub fn next_token_id(&self) -> TokenId {
        self.next_token_id
    }

    pub fn owners(&self) -> impl Iterator<Item = (TokenId, Address)> + '_ {
        self.owners.iter().map(|(id, a)| (*id, *a))
    }

    pub fn approvals(&self) -> impl Iterator<Item = (TokenId, Address)> + '_ {
        self.approvals.iter().map(|(id, a)| (*id, *a))
    }

    pub fn minted(&self) -> u64 {
        self.owners.len() as u64
    }

    pub(crate) fn insert(&mut self, to: Address, bonus: u32) -> TokenId {
        let id = self.next_token_id;
        self.next_token_id += 1;
        self.owners.insert(id, to);
        self.bonus_rate_pct.insert(id, bonus);
        *self.owned_count.entry(to).or_default() += 1;
        id
    }

    /// Reassigns ownership and clears the approval.
    pub(crate) fn reassign(&mut self, id: TokenId, to: Address) {
        let from = self.owners.insert(id, to).expect("reassign of unminted token");
        self.approvals.remove(&id);
        if let Some(c) = self.owned_count.get_mut(&from) {
            *c -= 1;
            if *c == 0 {
                self.owned_count.remove(&from);
            }
        }
        *self.owned_count.entry(to).or_default() += 1;
    }
}
