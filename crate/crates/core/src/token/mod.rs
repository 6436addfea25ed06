//! W2E contract semantics: the DMD fungible token, pet NFTs, the DMD-priced
//! marketplace and the native-coin sale desk, as one single-writer state
//! machine.
//!
//! Every operation validates completely before it mutates anything, so a
//! failed call leaves the state (and the pending event log) untouched.

mod ledger;
mod market;
mod pets;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ledger::{DmdAmount, TokenLedger};
pub use market::{Listing, Marketplace, SaleDesk};
pub use pets::NftRegistry;

use crate::events::EventKind;
use crate::types::{sha256, Address, Dmd, TokenId, Wei, WEI_PER_NATIVE};

/// Lowest allowed pet bonus rate: a pet never pays less than the base reward.
pub const MIN_BONUS_RATE_PCT: u32 = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenError {
    #[error("insufficient DMD balance: have {have}, need {need}")]
    InsufficientBalance { have: Dmd, need: Dmd },
    #[error("insufficient allowance: have {have}, need {need}")]
    InsufficientAllowance { have: Dmd, need: Dmd },
    #[error("recipient is the zero address")]
    ZeroAddressRecipient,
    #[error("caller is not the operator")]
    NotOperator,
    #[error("insufficient native balance: have {have} wei, need {need} wei")]
    InsufficientNative { have: Wei, need: Wei },
    #[error("payment of zero")]
    ZeroPayment,
    #[error("payment of {paid_wei} wei buys less than one DMD")]
    DustPayment { paid_wei: Wei },
    #[error("bonus rate {0}% is below 100%")]
    InvalidBonusRate(u32),
    #[error("sale rate must be positive")]
    InvalidSaleRate,
    #[error("unknown token {0}")]
    UnknownToken(TokenId),
    #[error("caller does not own token {0}")]
    NotOwner(TokenId),
    #[error("caller is neither owner nor approved for token {0}")]
    NotAuthorized(TokenId),
    #[error("marketplace is not approved for token {0}")]
    NotApproved(TokenId),
    #[error("token {0} is already listed")]
    AlreadyListed(TokenId),
    #[error("listing price must be positive")]
    ZeroPrice,
    #[error("no active listing for token {0}")]
    NoListing(TokenId),
    #[error("listing for token {0} is stale")]
    StaleListing(TokenId),
    #[error("seller cannot buy their own listing")]
    SelfPurchase,
    #[error("caller is not the seller of token {0}")]
    NotSeller(TokenId),
    #[error("arithmetic overflow")]
    Overflow,
}

impl TokenError {
    /// Short stable name used as the revert reason on chain.
    pub fn code(&self) -> &'static str {
        match self {
            TokenError::InsufficientBalance { .. } => "InsufficientBalance",
            TokenError::InsufficientAllowance { .. } => "InsufficientAllowance",
            TokenError::ZeroAddressRecipient => "ZeroAddressRecipient",
            TokenError::NotOperator => "NotOperator",
            TokenError::InsufficientNative { .. } => "InsufficientNative",
            TokenError::ZeroPayment => "ZeroPayment",
            TokenError::DustPayment { .. } => "DustPayment",
            TokenError::InvalidBonusRate(_) => "InvalidBonusRate",
            TokenError::InvalidSaleRate => "InvalidSaleRate",
            TokenError::UnknownToken(_) => "UnknownToken",
            TokenError::NotOwner(_) => "NotOwner",
            TokenError::NotAuthorized(_) => "NotAuthorized",
            TokenError::NotApproved(_) => "NotApproved",
            TokenError::AlreadyListed(_) => "AlreadyListed",
            TokenError::ZeroPrice => "ZeroPrice",
            TokenError::NoListing(_) => "NoListing",
            TokenError::StaleListing(_) => "StaleListing",
            TokenError::SelfPurchase => "SelfPurchase",
            TokenError::NotSeller(_) => "NotSeller",
            TokenError::Overflow => "Overflow",
        }
    }
}

/// Where the sale desk reads and moves native coin. The chain simulator backs
/// this with its account table; standalone use can take [`NativeBalances`].
pub trait NativeLedger {
    fn native_balance(&self, who: &Address) -> Wei;
    fn move_native(&mut self, from: &Address, to: &Address, amount: Wei);
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NativeBalances(pub BTreeMap<Address, DmdAmount>);

impl NativeBalances {
    pub fn credit(&mut self, who: Address, amount: Wei) {
        self.0.entry(who).or_default().0 += amount;
    }
}

impl NativeLedger for NativeBalances {
    fn native_balance(&self, who: &Address) -> Wei {
        self.0.get(who).map_or(0, |v| v.0)
    }

    fn move_native(&mut self, from: &Address, to: &Address, amount: Wei) {
        self.0.entry(*from).or_default().0 -= amount;
        self.0.entry(*to).or_default().0 += amount;
    }
}

/// The full W2E contract suite deployed at one address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economy {
    address: Address,
    operator: Address,
    ledger: TokenLedger,
    pets: NftRegistry,
    market: Marketplace,
    sale_desk: SaleDesk,
    #[serde(skip)]
    pending_events: Vec<EventKind>,
}

impl Economy {
    /// A fresh suite at `address` whose sale desk pays the operator.
    pub fn new(address: Address, operator: Address) -> Self {
        Economy {
            address,
            operator,
            ledger: TokenLedger::default(),
            pets: NftRegistry::default(),
            market: Marketplace::default(),
            sale_desk: SaleDesk {
                rate_dmd_per_native: SaleDesk::DEFAULT_RATE,
                treasury: operator,
            },
            pending_events: Vec::new(),
        }
    }

    pub fn with_sale_desk(mut self, rate_dmd_per_native: Dmd, treasury: Address) -> Result<Self, TokenError> {
        if rate_dmd_per_native == 0 {
            return Err(TokenError::InvalidSaleRate);
        }
        self.sale_desk = SaleDesk { rate_dmd_per_native, treasury };
        Ok(self)
    }

    /// Contract address; also the address the marketplace is approved under.
    pub fn address(&self) -> Address {
        self.address
    }

    pub fn operator(&self) -> Address {
        self.operator
    }

    pub fn ledger(&self) -> &TokenLedger {
        &self.ledger
    }

    pub fn pets(&self) -> &NftRegistry {
        &self.pets
    }

    pub fn market(&self) -> &Marketplace {
        &self.market
    }

    pub fn sale_desk(&self) -> &SaleDesk {
        &self.sale_desk
    }

    pub fn balance_of(&self, who: &Address) -> Dmd {
        self.ledger.balance_of(who)
    }

    pub fn total_supply(&self) -> Dmd {
        self.ledger.total_supply()
    }

    /// Drains events produced since the last call.
    pub fn take_events(&mut self) -> Vec<EventKind> {
        std::mem::take(&mut self.pending_events)
    }

    pub fn pending_events(&self) -> &[EventKind] {
        &self.pending_events
    }

    /// SHA-256 over the canonical serialization of the contract state plus
    /// the undrained event log.
    pub fn state_digest(&self) -> [u8; 32] {
        let state = serde_json::to_vec(self).expect("economy state serializes");
        let events = serde_json::to_vec(&self.pending_events).expect("events serialize");
        sha256(&[&state, &events])
    }

    fn emit(&mut self, e: EventKind) {
        self.pending_events.push(e);
    }

    // ---- DMD (fungible) ----

    pub fn transfer(&mut self, from: Address, to: Address, amount: Dmd) -> Result<(), TokenError> {
        if to.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        let have = self.ledger.balance_of(&from);
        if have < amount {
            return Err(TokenError::InsufficientBalance { have, need: amount });
        }
        self.ledger.move_balance(from, to, amount);
        self.emit(EventKind::Transfer { from, to, amount });
        Ok(())
    }

    /// Overwrites the allowance (no increment semantics).
    pub fn approve(&mut self, owner: Address, spender: Address, amount: Dmd) -> Result<(), TokenError> {
        self.ledger.set_allowance(owner, spender, amount);
        self.emit(EventKind::Approval { owner, spender, amount });
        Ok(())
    }

    pub fn transfer_from(
        &mut self,
        spender: Address,
        owner: Address,
        to: Address,
        amount: Dmd,
    ) -> Result<(), TokenError> {
        let allowed = self.ledger.allowance(&owner, &spender);
        if allowed < amount {
            return Err(TokenError::InsufficientAllowance { have: allowed, need: amount });
        }
        if to.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        let have = self.ledger.balance_of(&owner);
        if have < amount {
            return Err(TokenError::InsufficientBalance { have, need: amount });
        }
        self.ledger.set_allowance(owner, spender, allowed - amount);
        self.ledger.move_balance(owner, to, amount);
        self.emit(EventKind::Transfer { from: owner, to, amount });
        Ok(())
    }

    /// Returns the new total supply.
    pub fn mint_dmd(&mut self, caller: Address, to: Address, amount: Dmd) -> Result<Dmd, TokenError> {
        if caller != self.operator {
            return Err(TokenError::NotOperator);
        }
        self.credit_mint(to, amount)
    }

    fn credit_mint(&mut self, to: Address, amount: Dmd) -> Result<Dmd, TokenError> {
        if to.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        let supply = self.ledger.total_supply.checked_add(amount).ok_or(TokenError::Overflow)?;
        let bal = self.ledger.balance_of(&to) + amount;
        self.ledger.total_supply = supply;
        self.ledger.set_balance(to, bal);
        self.emit(EventKind::Transfer { from: Address::ZERO, to, amount });
        Ok(supply)
    }

    /// Converts native coin to DMD at the desk rate, flooring; payments that
    /// would floor to zero are refused rather than charged.
    pub fn buy_dmd(
        &mut self,
        buyer: Address,
        paid_wei: Wei,
        native: &mut dyn NativeLedger,
    ) -> Result<Dmd, TokenError> {
        if paid_wei == 0 {
            return Err(TokenError::ZeroPayment);
        }
        let have = native.native_balance(&buyer);
        if have < paid_wei {
            return Err(TokenError::InsufficientNative { have, need: paid_wei });
        }
        let credited = dmd_for_payment(paid_wei, self.sale_desk.rate_dmd_per_native)?;
        if credited == 0 {
            return Err(TokenError::DustPayment { paid_wei });
        }
        if buyer.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        self.ledger.total_supply.checked_add(credited).ok_or(TokenError::Overflow)?;
        let treasury = self.sale_desk.treasury;
        native.move_native(&buyer, &treasury, paid_wei);
        self.credit_mint(buyer, credited)?;
        Ok(credited)
    }

    // ---- pets (non-fungible) ----

    pub fn mint_pet(&mut self, caller: Address, to: Address, bonus_rate_pct: u32) -> Result<TokenId, TokenError> {
        if caller != self.operator {
            return Err(TokenError::NotOperator);
        }
        if bonus_rate_pct < MIN_BONUS_RATE_PCT {
            return Err(TokenError::InvalidBonusRate(bonus_rate_pct));
        }
        if to.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        let id = self.pets.insert(to, bonus_rate_pct);
        self.emit(EventKind::NftTransfer { from: Address::ZERO, to, token_id: id });
        Ok(id)
    }

    /// Sets or clears the single approved operator for one pet.
    pub fn approve_pet(&mut self, caller: Address, token_id: TokenId, approved: Option<Address>) -> Result<(), TokenError> {
        let owner = self.pets.owner_of(token_id).ok_or(TokenError::UnknownToken(token_id))?;
        if owner != caller {
            return Err(TokenError::NotOwner(token_id));
        }
        match approved {
            Some(a) if !a.is_zero() => {
                self.pets.approvals.insert(token_id, a);
            }
            _ => {
                self.pets.approvals.remove(&token_id);
            }
        }
        self.emit(EventKind::NftApproval {
            owner,
            token_id,
            approved: approved.filter(|a| !a.is_zero()),
        });
        Ok(())
    }

    /// Plain ERC-721 style transfer by the owner or the approved address.
    pub fn transfer_pet(&mut self, caller: Address, from: Address, to: Address, token_id: TokenId) -> Result<(), TokenError> {
        let owner = self.pets.owner_of(token_id).ok_or(TokenError::UnknownToken(token_id))?;
        if owner != from {
            return Err(TokenError::NotOwner(token_id));
        }
        if caller != owner && self.pets.approved(token_id) != Some(caller) {
            return Err(TokenError::NotAuthorized(token_id));
        }
        if to.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        self.pets.reassign(token_id, to);
        self.emit(EventKind::NftTransfer { from, to, token_id });
        Ok(())
    }

    pub fn owner_of(&self, token_id: TokenId) -> Option<Address> {
        self.pets.owner_of(token_id)
    }

    pub fn is_earnable(&self, user: &Address) -> bool {
        self.pets.pets_of(user) >= 1
    }

    // ---- marketplace ----

    /// A listing is stale once its seller no longer owns the pet or the
    /// marketplace lost its approval.
    pub fn is_stale(&self, token_id: TokenId, listing: &Listing) -> bool {
        self.pets.owner_of(token_id) != Some(listing.seller) || self.pets.approved(token_id) != Some(self.address)
    }

    /// The stored listing if it is active and not stale.
    pub fn live_listing(&self, token_id: TokenId) -> Option<&Listing> {
        self.market
            .listing(token_id)
            .filter(|l| l.active && !self.is_stale(token_id, l))
    }

    pub fn live_listings(&self) -> impl Iterator<Item = (TokenId, &Listing)> {
        self.market
            .listings()
            .filter(|(id, l)| l.active && !self.is_stale(*id, l))
    }

    pub fn list_nft(&mut self, seller: Address, token_id: TokenId, price_dmd: Dmd) -> Result<Listing, TokenError> {
        let owner = self.pets.owner_of(token_id).ok_or(TokenError::UnknownToken(token_id))?;
        if owner != seller {
            return Err(TokenError::NotOwner(token_id));
        }
        if self.pets.approved(token_id) != Some(self.address) {
            return Err(TokenError::NotApproved(token_id));
        }
        if price_dmd == 0 {
            return Err(TokenError::ZeroPrice);
        }
        if self.live_listing(token_id).is_some() {
            return Err(TokenError::AlreadyListed(token_id));
        }
        let listing = Listing { seller, price_dmd, active: true };
        self.market.listings.insert(token_id, listing.clone());
        self.emit(EventKind::Listed { seller, token_id, price: price_dmd });
        Ok(listing)
    }

    pub fn buy_nft(&mut self, buyer: Address, token_id: TokenId) -> Result<(), TokenError> {
        let listing = match self.market.listing(token_id) {
            Some(l) if l.active => l.clone(),
            _ => return Err(TokenError::NoListing(token_id)),
        };
        if self.is_stale(token_id, &listing) {
            return Err(TokenError::StaleListing(token_id));
        }
        if buyer == listing.seller {
            return Err(TokenError::SelfPurchase);
        }
        if buyer.is_zero() {
            return Err(TokenError::ZeroAddressRecipient);
        }
        let have = self.ledger.balance_of(&buyer);
        if have < listing.price_dmd {
            return Err(TokenError::InsufficientBalance { have, need: listing.price_dmd });
        }
        let seller = listing.seller;
        let price = listing.price_dmd;
        self.ledger.move_balance(buyer, seller, price);
        self.emit(EventKind::Transfer { from: buyer, to: seller, amount: price });
        self.pets.reassign(token_id, buyer);
        self.emit(EventKind::NftTransfer { from: seller, to: buyer, token_id });
        if let Some(l) = self.market.listings.get_mut(&token_id) {
            l.active = false;
        }
        self.emit(EventKind::Purchased { buyer, seller, token_id, price });
        Ok(())
    }

    /// Sellers may also withdraw a stale listing.
    pub fn cancel_listing(&mut self, seller: Address, token_id: TokenId) -> Result<(), TokenError> {
        let listing = match self.market.listing(token_id) {
            Some(l) if l.active => l,
            _ => return Err(TokenError::NoListing(token_id)),
        };
        if listing.seller != seller {
            return Err(TokenError::NotSeller(token_id));
        }
        if let Some(l) = self.market.listings.get_mut(&token_id) {
            l.active = false;
        }
        self.emit(EventKind::Cancelled { seller, token_id });
        Ok(())
    }

    /// Reward minting entry point used by the reward module. Same operator
    /// check as [`Economy::mint_dmd`], plus the `Rewarded` log.
    pub(crate) fn mint_reward(&mut self, caller: Address, grant: crate::reward::RewardGrant) -> Result<(), TokenError> {
        if caller != self.operator {
            return Err(TokenError::NotOperator);
        }
        if grant.total_dmd > 0 {
            self.credit_mint(grant.user, grant.total_dmd)?;
        }
        self.emit(EventKind::Rewarded(grant));
        Ok(())
    }
}

/// floor(paid_wei × rate / 10^18), exact for any u128 inputs.
pub fn dmd_for_payment(paid_wei: Wei, rate_dmd_per_native: Dmd) -> Result<Dmd, TokenError> {
    // split paid = q·10^18 + r so the product never needs more than 128 bits
    // unless the result itself would.
    let q = paid_wei / WEI_PER_NATIVE;
    let r = paid_wei % WEI_PER_NATIVE;
    let whole = q.checked_mul(rate_dmd_per_native).ok_or(TokenError::Overflow)?;
    let frac = match r.checked_mul(rate_dmd_per_native) {
        Some(p) => p / WEI_PER_NATIVE,
        None => {
            // r < 10^18 and the product overflowed, so rate > 3.4e20; fall back
            // to splitting the rate instead.
            let rq = rate_dmd_per_native / WEI_PER_NATIVE;
            let rr = rate_dmd_per_native % WEI_PER_NATIVE;
            r.checked_mul(rq).ok_or(TokenError::Overflow)? + (r * rr) / WEI_PER_NATIVE
        }
    };
    whole.checked_add(frac).ok_or(TokenError::Overflow)
}
