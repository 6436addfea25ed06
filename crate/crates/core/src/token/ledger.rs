use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{u128_str, Address, Dmd};

/// Fungible DMD balances and allowances.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    pub(crate) balances: BTreeMap<Address, DmdAmount>,
    pub(crate) allowances: BTreeMap<Address, BTreeMap<Address, DmdAmount>>,
    #[serde(with = "u128_str")]
    pub(crate) total_supply: Dmd,
}

/// Wrapper so map values serialize as decimal strings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DmdAmount(#[serde(with = "u128_str")] pub Dmd);

impl TokenLedger {
    pub fn balance_of(&self, who: &Address) -> Dmd {
        self.balances.get(who).map_or(0, |a| a.0)
    }

    pub fn allowance(&self, owner: &Address, spender: &Address) -> Dmd {
        self.allowances
            .get(owner)
            .and_then(|m| m.get(spender))
            .map_or(0, |a| a.0)
    }

    pub fn total_supply(&self) -> Dmd {
        self.total_supply
    }

    pub fn balances(&self) -> impl Iterator<Item = (&Address, Dmd)> {
        self.balances.iter().map(|(a, v)| (a, v.0))
    }

    pub(crate) fn set_balance(&mut self, who: Address, amount: Dmd) {
        if amount == 0 {
            self.balances.remove(&who);
        } else {
            self.balances.insert(who, DmdAmount(amount));
        }
    }

    pub(crate) fn set_allowance(&mut self, owner: Address, spender: Address, amount: Dmd) {
        let entry = self.allowances.entry(owner).or_default();
        if amount == 0 {
            entry.remove(&spender);
            if entry.is_empty() {
                self.allowances.remove(&owner);
            }
        } else {
            entry.insert(spender, DmdAmount(amount));
        }
    }

    /// Moves `amount` between two accounts. Callers check the balance first.
    pub(crate) fn move_balance(&mut self, from: Address, to: Address, amount: Dmd) {
        if from == to || amount == 0 {
            return;
        }
        let from_bal = self.balance_of(&from);
        debug_assert!(from_bal >= amount);
        self.set_balance(from, from_bal - amount);
        let to_bal = self.balance_of(&to);
        self.set_balance(to, to_bal + amount);
    }
}
