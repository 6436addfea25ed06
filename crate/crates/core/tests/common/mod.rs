#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use w2e_core::indexer::{StateProjection, Views};
use w2e_core::reward::{RewardPolicy, WorkoutRecord};
use w2e_core::token::{Economy, Listing};
use w2e_core::types::{Address, Dmd, TokenId};

pub mod script;

pub const ACTORS: usize = 6;

/// Actor 0 is the operator, 1..=4 are users, 5 is the zero address.
pub fn actor(i: usize) -> Address {
    match i {
        5 => Address::ZERO,
        0 => Address::from_label("session/operator"),
        n => Address::from_label(&format!("session/user{n}")),
    }
}

pub fn market() -> Address {
    Address::from_label("session/market")
}

#[derive(Debug, Clone, Copy)]
pub enum PetApproval {
    Clear,
    Market,
    Actor(usize),
}

#[derive(Debug, Clone)]
pub enum Op {
    Transfer { from: usize, to: usize, amount: Dmd },
    Approve { owner: usize, spender: usize, amount: Dmd },
    TransferFrom { spender: usize, owner: usize, to: usize, amount: Dmd },
    MintDmd { caller: usize, to: usize, amount: Dmd },
    MintPet { caller: usize, to: usize, bonus: u32 },
    ApprovePet { caller: usize, id: TokenId, target: PetApproval },
    TransferPet { caller: usize, from: usize, to: usize, id: TokenId },
    List { seller: usize, id: TokenId, price: Dmd },
    Buy { buyer: usize, id: TokenId },
    Cancel { seller: usize, id: TokenId },
    Reward { caller: usize, user: usize, pet: TokenId, duration_sec: u64, distance_m: u64 },
}

/// Speeds in m/s; none lands near the 30 km/h plausibility cap.
const SPEEDS_MPS: [u64; 7] = [1, 2, 3, 5, 7, 9, 12];

fn workout(rng: &mut impl Rng) -> (u64, u64) {
    let duration = if rng.random_bool(0.05) { 0 } else { rng.random_range(60..3600) };
    (duration, duration * SPEEDS_MPS[rng.random_range(0..SPEEDS_MPS.len())])
}

/// Weighted toward the operations that exercise the marketplace.
pub fn random_op(rng: &mut impl Rng, pets_minted: u64) -> Op {
    let a = |rng: &mut dyn rand::RngCore| -> usize {
        // Mostly real users, sometimes the operator or the zero address.
        match rng.random_range(0..20) {
            0 => 0,
            1 => 5,
            _ => rng.random_range(1..5),
        }
    };
    let id = rng.random_range(0..pets_minted + 2);
    let amt = rng.random_range(0..300u128);
    match rng.random_range(0..100) {
        0..=4 => Op::Transfer { from: a(rng), to: a(rng), amount: amt },
        5..=7 => {
            let (duration_sec, distance_m) = workout(rng);
            let caller = if rng.random_bool(0.9) { 0 } else { a(rng) };
            Op::Reward { caller, user: a(rng), pet: id, duration_sec, distance_m }
        }
        8..=11 => Op::Approve { owner: a(rng), spender: a(rng), amount: amt },
        12..=15 => Op::TransferFrom { spender: a(rng), owner: a(rng), to: a(rng), amount: amt },
        16..=25 => Op::MintDmd { caller: if rng.random_bool(0.9) { 0 } else { a(rng) }, to: a(rng), amount: amt },
        26..=33 => Op::MintPet {
            caller: if rng.random_bool(0.9) { 0 } else { a(rng) },
            to: a(rng),
            bonus: rng.random_range(90..200),
        },
        34..=50 => {
            let target = match rng.random_range(0..6) {
                0 => PetApproval::Clear,
                1 => PetApproval::Actor(a(rng)),
                _ => PetApproval::Market,
            };
            Op::ApprovePet { caller: a(rng), id, target }
        }
        51..=57 => Op::TransferPet { caller: a(rng), from: a(rng), to: a(rng), id },
        58..=74 => Op::List { seller: a(rng), id, price: amt },
        75..=91 => Op::Buy { buyer: a(rng), id },
        _ => Op::Cancel { seller: a(rng), id },
    }
}

/// Generates ops online against an oracle so that, most of the time, pet
/// operations are issued by the pet's current owner.
pub fn random_session(seed: u64, len: usize) -> Vec<Op> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Oracle::default();
    (0..len)
        .map(|_| {
            let mut op = random_op(&mut rng, model.owner.len() as u64);
            let owner_of = |id: TokenId| model.owner_of(id).and_then(|o| (0..ACTORS).find(|i| actor(*i) == o));
            if rng.random_bool(0.7) {
                match &mut op {
                    Op::ApprovePet { caller, id, .. } | Op::List { seller: caller, id, .. } | Op::Cancel { seller: caller, id } => {
                        if let Some(o) = owner_of(*id) {
                            *caller = o;
                        }
                    }
                    Op::Reward { user, pet, .. } => {
                        if let Some(o) = owner_of(*pet) {
                            *user = o;
                        }
                    }
                    Op::TransferPet { caller, from, id, .. } => {
                        if let Some(o) = owner_of(*id) {
                            *caller = o;
                            *from = o;
                        }
                    }
                    _ => {}
                }
            }
            let _ = model.apply(&op);
            op
        })
        .collect()
}

pub fn op_strategy() -> impl Strategy<Value = Op> {
    let a = prop_oneof![8 => 1usize..5, 1 => Just(0usize), 1 => Just(5usize)];
    let id = 0u64..12;
    let amt = 0u128..300;
    let target = prop_oneof![
        1 => Just(PetApproval::Clear),
        4 => Just(PetApproval::Market),
        1 => a.clone().prop_map(PetApproval::Actor),
    ];
    prop_oneof![
        1 => (a.clone(), a.clone(), amt.clone()).prop_map(|(from, to, amount)| Op::Transfer { from, to, amount }),
        1 => (a.clone(), a.clone(), amt.clone()).prop_map(|(owner, spender, amount)| Op::Approve { owner, spender, amount }),
        1 => (a.clone(), a.clone(), a.clone(), amt.clone())
            .prop_map(|(spender, owner, to, amount)| Op::TransferFrom { spender, owner, to, amount }),
        2 => (prop_oneof![4 => Just(0usize), 1 => a.clone()], a.clone(), amt.clone())
            .prop_map(|(caller, to, amount)| Op::MintDmd { caller, to, amount }),
        2 => (prop_oneof![4 => Just(0usize), 1 => a.clone()], a.clone(), 90u32..200)
            .prop_map(|(caller, to, bonus)| Op::MintPet { caller, to, bonus }),
        3 => (a.clone(), id.clone(), target).prop_map(|(caller, id, target)| Op::ApprovePet { caller, id, target }),
        1 => (a.clone(), a.clone(), a.clone(), id.clone())
            .prop_map(|(caller, from, to, id)| Op::TransferPet { caller, from, to, id }),
        3 => (a.clone(), id.clone(), amt).prop_map(|(seller, id, price)| Op::List { seller, id, price }),
        3 => (a.clone(), id.clone()).prop_map(|(buyer, id)| Op::Buy { buyer, id }),
        1 => (a.clone(), id.clone()).prop_map(|(seller, id)| Op::Cancel { seller, id }),
        2 => (prop_oneof![4 => Just(0usize), 1 => a.clone()], a, id, 0u64..3600, 0..SPEEDS_MPS.len())
            .prop_map(|(caller, user, pet, duration_sec, s)| Op::Reward {
                caller,
                user,
                pet,
                duration_sec,
                distance_m: duration_sec * SPEEDS_MPS[s],
            }),
    ]
}

pub fn apply(e: &mut Economy, op: &Op) -> Result<(), &'static str> {
    let r = match *op {
        Op::Transfer { from, to, amount } => e.transfer(actor(from), actor(to), amount),
        Op::Approve { owner, spender, amount } => e.approve(actor(owner), actor(spender), amount),
        Op::TransferFrom { spender, owner, to, amount } => e.transfer_from(actor(spender), actor(owner), actor(to), amount),
        Op::MintDmd { caller, to, amount } => e.mint_dmd(actor(caller), actor(to), amount).map(|_| ()),
        Op::MintPet { caller, to, bonus } => e.mint_pet(actor(caller), actor(to), bonus).map(|_| ()),
        Op::ApprovePet { caller, id, target } => {
            let t = match target {
                PetApproval::Clear => None,
                PetApproval::Market => Some(e.address()),
                PetApproval::Actor(i) => Some(actor(i)),
            };
            e.approve_pet(actor(caller), id, t)
        }
        Op::TransferPet { caller, from, to, id } => e.transfer_pet(actor(caller), actor(from), actor(to), id),
        Op::List { seller, id, price } => e.list_nft(actor(seller), id, price).map(|_| ()),
        Op::Buy { buyer, id } => e.buy_nft(actor(buyer), id),
        Op::Cancel { seller, id } => e.cancel_listing(actor(seller), id),
        Op::Reward { caller, user, pet, duration_sec, distance_m } => {
            let record = WorkoutRecord::from_distance(duration_sec, distance_m, 0, 0);
            return RewardPolicy::default()
                .grant_reward(e, actor(caller), actor(user), pet, record)
                .map(|_| ())
                .map_err(|err| err.code());
        }
    };
    r.map_err(|err| err.code())
}

/// Straight-line model of the token rules, written without reference to
/// the implementation's data structures.
#[derive(Debug, Default)]
pub struct Oracle {
    bal: BTreeMap<Address, Dmd>,
    allowance: BTreeMap<(Address, Address), Dmd>,
    supply: Dmd,
    owner: Vec<Address>,
    bonus: Vec<u32>,
    approval: BTreeMap<TokenId, Address>,
    /// (seller, price, active)
    listing: BTreeMap<TokenId, (Address, Dmd, bool)>,
}

impl Oracle {
    fn balance(&self, a: Address) -> Dmd {
        self.bal.get(&a).copied().unwrap_or(0)
    }

    fn credit(&mut self, a: Address, v: Dmd) {
        *self.bal.entry(a).or_default() += v;
    }

    fn debit(&mut self, a: Address, v: Dmd) {
        *self.bal.entry(a).or_default() -= v;
    }

    fn owner_of(&self, id: TokenId) -> Option<Address> {
        self.owner.get(id as usize).copied()
    }

    fn give_pet(&mut self, id: TokenId, to: Address) {
        self.owner[id as usize] = to;
        self.approval.remove(&id);
    }

    fn live(&self, id: TokenId) -> bool {
        matches!(self.listing.get(&id), Some(&(s, _, true))
            if self.owner_of(id) == Some(s) && self.approval.get(&id) == Some(&market()))
    }

    pub fn supply(&self) -> Dmd {
        self.supply
    }

    pub fn apply(&mut self, op: &Op) -> Result<(), &'static str> {
        let zero = Address::ZERO;
        match *op {
            Op::Transfer { from, to, amount } => {
                let (f, t) = (actor(from), actor(to));
                if t == zero {
                    return Err("ZeroAddressRecipient");
                }
                if self.balance(f) < amount {
                    return Err("InsufficientBalance");
                }
                self.debit(f, amount);
                self.credit(t, amount);
            }
            Op::Approve { owner, spender, amount } => {
                self.allowance.insert((actor(owner), actor(spender)), amount);
            }
            Op::TransferFrom { spender, owner, to, amount } => {
                let key = (actor(owner), actor(spender));
                let allowed = self.allowance.get(&key).copied().unwrap_or(0);
                if allowed < amount {
                    return Err("InsufficientAllowance");
                }
                if actor(to) == zero {
                    return Err("ZeroAddressRecipient");
                }
                if self.balance(key.0) < amount {
                    return Err("InsufficientBalance");
                }
                self.allowance.insert(key, allowed - amount);
                self.debit(key.0, amount);
                self.credit(actor(to), amount);
            }
            Op::MintDmd { caller, to, amount } => {
                if caller != 0 {
                    return Err("NotOperator");
                }
                if actor(to) == zero {
                    return Err("ZeroAddressRecipient");
                }
                self.supply += amount;
                self.credit(actor(to), amount);
            }
            Op::MintPet { caller, to, bonus } => {
                if caller != 0 {
                    return Err("NotOperator");
                }
                if bonus < 100 {
                    return Err("InvalidBonusRate");
                }
                if actor(to) == zero {
                    return Err("ZeroAddressRecipient");
                }
                self.owner.push(actor(to));
                self.bonus.push(bonus);
            }
            Op::ApprovePet { caller, id, target } => {
                let owner = self.owner_of(id).ok_or("UnknownToken")?;
                if owner != actor(caller) {
                    return Err("NotOwner");
                }
                let t = match target {
                    PetApproval::Clear => zero,
                    PetApproval::Market => market(),
                    PetApproval::Actor(i) => actor(i),
                };
                if t == zero {
                    self.approval.remove(&id);
                } else {
                    self.approval.insert(id, t);
                }
            }
            Op::TransferPet { caller, from, to, id } => {
                let owner = self.owner_of(id).ok_or("UnknownToken")?;
                if owner != actor(from) {
                    return Err("NotOwner");
                }
                if actor(caller) != owner && self.approval.get(&id) != Some(&actor(caller)) {
                    return Err("NotAuthorized");
                }
                if actor(to) == zero {
                    return Err("ZeroAddressRecipient");
                }
                self.give_pet(id, actor(to));
            }
            Op::List { seller, id, price } => {
                let owner = self.owner_of(id).ok_or("UnknownToken")?;
                if owner != actor(seller) {
                    return Err("NotOwner");
                }
                if self.approval.get(&id) != Some(&market()) {
                    return Err("NotApproved");
                }
                if price == 0 {
                    return Err("ZeroPrice");
                }
                if self.live(id) {
                    return Err("AlreadyListed");
                }
                self.listing.insert(id, (owner, price, true));
            }
            Op::Buy { buyer, id } => {
                let (seller, price) = match self.listing.get(&id) {
                    Some(&(s, p, true)) => (s, p),
                    _ => return Err("NoListing"),
                };
                if !self.live(id) {
                    return Err("StaleListing");
                }
                let b = actor(buyer);
                if b == seller {
                    return Err("SelfPurchase");
                }
                if b == zero {
                    return Err("ZeroAddressRecipient");
                }
                if self.balance(b) < price {
                    return Err("InsufficientBalance");
                }
                self.debit(b, price);
                self.credit(seller, price);
                self.give_pet(id, b);
                self.listing.get_mut(&id).unwrap().2 = false;
            }
            Op::Cancel { seller, id } => {
                let s = match self.listing.get(&id) {
                    Some(&(s, _, true)) => s,
                    _ => return Err("NoListing"),
                };
                if s != actor(seller) {
                    return Err("NotSeller");
                }
                self.listing.get_mut(&id).unwrap().2 = false;
            }
            Op::Reward { caller, user, pet, duration_sec, distance_m } => {
                let u = actor(user);
                if !self.owner.contains(&u) {
                    return Err("NotEarnable");
                }
                if self.owner_of(pet) != Some(u) {
                    return Err("NotPetOwner");
                }
                if duration_sec == 0 {
                    return Err("InvalidRecord");
                }
                // km/h > 30  <=>  36 * m > 300 * s
                if 36 * distance_m > 300 * duration_sec {
                    return Err("ImplausibleRecord");
                }
                if caller != 0 {
                    return Err("NotOperator");
                }
                let base = distance_m as u128 * 10 / 1000;
                let total = base * self.bonus[pet as usize] as u128 / 100;
                self.supply += total;
                self.credit(u, total);
            }
        }
        Ok(())
    }

    pub fn projection(&self) -> StateProjection {
        StateProjection {
            dmd_balances: self.bal.iter().filter(|(_, v)| **v > 0).map(|(a, v)| (*a, *v)).collect(),
            pet_owners: self.owner.iter().enumerate().map(|(i, a)| (i as TokenId, *a)).collect(),
            pet_approvals: self.approval.clone(),
            active_listings: self
                .listing
                .iter()
                .filter(|(id, _)| self.live(**id))
                .map(|(id, (s, p, _))| (*id, Listing { seller: *s, price_dmd: *p, active: true }))
                .collect(),
        }
    }
}

#[derive(Debug, Default)]
pub struct SessionStats {
    pub ok: usize,
    pub failed: usize,
    pub purchases: usize,
    pub rewards: usize,
}

/// Runs `ops` against a fresh economy, the oracle and an event-fed view,
/// checking every invariant after every operation; the full projections are
/// compared every `check_every` operations and at the end.
pub fn run_session(ops: &[Op], check_every: usize) -> Result<SessionStats, String> {
    let mut e = Economy::new(market(), actor(0));
    let mut oracle = Oracle::default();
    let mut views = Views::default();
    let mut stats = SessionStats::default();
    let everyone: Vec<Address> = (0..ACTORS).map(actor).collect();
    for (i, op) in ops.iter().enumerate() {
        let want = oracle.apply(op);
        // Snapshot only when the oracle expects a rejection; a surprise
        // rejection is caught by the comparison below anyway.
        let before = want.is_err().then(|| e.clone());
        let got = apply(&mut e, op);
        if got != want {
            return Err(format!("op {i} {op:?}: economy {got:?}, oracle {want:?}"));
        }
        match got {
            Ok(()) => {
                stats.ok += 1;
                match op {
                    Op::Buy { .. } => stats.purchases += 1,
                    Op::Reward { .. } => stats.rewards += 1,
                    _ => {}
                }
            }
            Err(_) => {
                stats.failed += 1;
                if before.as_ref() != Some(&e) {
                    return Err(format!("op {i} {op:?} failed but changed state"));
                }
            }
        }
        for ev in e.take_events() {
            views.apply(&ev);
        }

        let sum: Dmd = e.ledger().balances().map(|(_, v)| v).sum();
        if sum != e.total_supply() || sum != oracle.supply() {
            return Err(format!("op {i}: balances sum {sum}, supply {}, minted {}", e.total_supply(), oracle.supply()));
        }
        let counted: u64 = everyone.iter().map(|a| e.pets().pets_of(a)).sum();
        if counted != e.pets().minted() {
            return Err(format!("op {i}: {counted} owned pets but {} minted", e.pets().minted()));
        }

        if (i + 1) % check_every == 0 || i + 1 == ops.len() {
            let actual = StateProjection::of_economy(&e);
            if actual != oracle.projection() {
                return Err(format!("op {i}: economy and oracle diverge"));
            }
            if views.projection(&market()) != actual {
                return Err(format!("op {i}: event-fed views diverge"));
            }
            for (id, owner) in &actual.pet_owners {
                let holders = everyone.iter().filter(|a| *a == owner).count();
                if holders != 1 || e.owner_of(*id) != Some(*owner) {
                    return Err(format!("op {i}: pet {id} ownership is ambiguous"));
                }
            }
        }
    }
    Ok(stats)
}
