use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::events::EventKind;
use crate::reward::RewardGrant;
use crate::token::{DmdAmount, Economy, Listing};
use crate::types::{Address, Dmd, TokenId};

/// Materialized state of one W2E deployment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Views {
    dmd_balances: BTreeMap<Address, DmdAmount>,
    pet_owners: BTreeMap<TokenId, Address>,
    pet_approvals: BTreeMap<TokenId, Address>,
    /// Listings that were neither bought nor cancelled. Staleness is judged
    /// at read time against ownership and approval.
    listings: BTreeMap<TokenId, Listing>,
    reward_history: BTreeMap<Address, Vec<RewardGrant>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Portfolio {
    pub address: Address,
    #[serde(with = "crate::types::u128_str")]
    pub dmd_balance: Dmd,
    pub pets: Vec<TokenId>,
    pub listings: Vec<(TokenId, Listing)>,
    pub reward_history: Vec<RewardGrant>,
}

/// The part of the economy state both the chain and the indexer can see.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StateProjection {
    pub dmd_balances: BTreeMap<Address, Dmd>,
    pub pet_owners: BTreeMap<TokenId, Address>,
    pub pet_approvals: BTreeMap<TokenId, Address>,
    pub active_listings: BTreeMap<TokenId, Listing>,
}

impl StateProjection {
    pub fn of_economy(e: &Economy) -> Self {
        StateProjection {
            dmd_balances: e.ledger().balances().filter(|(_, v)| *v > 0).map(|(a, v)| (*a, v)).collect(),
            pet_owners: e.pets().owners().collect(),
            pet_approvals: e.pets().approvals().collect(),
            active_listings: e.live_listings().map(|(id, l)| (id, l.clone())).collect(),
        }
    }
}

fn adjust(map: &mut BTreeMap<Address, DmdAmount>, who: Address, delta: impl FnOnce(Dmd) -> Dmd) {
    let next = delta(map.get(&who).map_or(0, |v| v.0));
    if next == 0 {
        map.remove(&who);
    } else {
        map.insert(who, DmdAmount(next));
    }
}

impl Views {
    pub fn apply(&mut self, event: &EventKind) {
        match event {
            EventKind::Transfer { from, to, amount } => {
                if !from.is_zero() {
                    adjust(&mut self.dmd_balances, *from, |b| b.saturating_sub(*amount));
                }
                if !to.is_zero() {
                    adjust(&mut self.dmd_balances, *to, |b| b + amount);
                }
            }
            EventKind::Approval { .. } => {}
            EventKind::NftTransfer { to, token_id, .. } => {
                self.pet_owners.insert(*token_id, *to);
                self.pet_approvals.remove(token_id);
            }
            EventKind::NftApproval { token_id, approved, .. } => match approved {
                Some(a) => {
                    self.pet_approvals.insert(*token_id, *a);
                }
                None => {
                    self.pet_approvals.remove(token_id);
                }
            },
            EventKind::Listed { seller, token_id, price } => {
                self.listings.insert(*token_id, Listing { seller: *seller, price_dmd: *price, active: true });
            }
            EventKind::Purchased { token_id, .. } | EventKind::Cancelled { token_id, .. } => {
                self.listings.remove(token_id);
            }
            EventKind::Rewarded(grant) => {
                self.reward_history.entry(grant.user).or_default().push(grant.clone());
            }
        }
    }

    pub fn dmd_balance(&self, who: &Address) -> Dmd {
        self.dmd_balances.get(who).map_or(0, |v| v.0)
    }

    pub fn dmd_balances(&self) -> impl Iterator<Item = (Address, Dmd)> + '_ {
        self.dmd_balances.iter().map(|(a, v)| (*a, v.0))
    }

    pub fn pet_owners(&self) -> &BTreeMap<TokenId, Address> {
        &self.pet_owners
    }

    pub fn reward_history(&self, who: &Address) -> &[RewardGrant] {
        self.reward_history.get(who).map_or(&[], Vec::as_slice)
    }

    fn is_live(&self, contract: &Address, id: TokenId, l: &Listing) -> bool {
        self.pet_owners.get(&id) == Some(&l.seller) && self.pet_approvals.get(&id) == Some(contract)
    }

    /// Listings a buyer could act on right now.
    pub fn active_listings<'a>(&'a self, contract: &'a Address) -> impl Iterator<Item = (TokenId, &'a Listing)> + 'a {
        self.listings.iter().filter(move |(id, l)| self.is_live(contract, **id, l)).map(|(id, l)| (*id, l))
    }

    pub fn portfolio(&self, contract: &Address, user: &Address) -> Portfolio {
        Portfolio {
            address: *user,
            dmd_balance: self.dmd_balance(user),
            pets: self.pet_owners.iter().filter(|(_, o)| *o == user).map(|(id, _)| *id).collect(),
            listings: self
                .active_listings(contract)
                .filter(|(_, l)| l.seller == *user)
                .map(|(id, l)| (id, l.clone()))
                .collect(),
            reward_history: self.reward_history(user).to_vec(),
        }
    }

    pub fn projection(&self, contract: &Address) -> StateProjection {
        StateProjection {
            dmd_balances: self.dmd_balances().collect(),
            pet_owners: self.pet_owners.clone(),
            pet_approvals: self.pet_approvals.clone(),
            active_listings: self.active_listings(contract).map(|(id, l)| (id, l.clone())).collect(),
        }
    }
}
