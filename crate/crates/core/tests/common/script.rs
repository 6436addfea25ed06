//! Runs the same operation list through the gateway on a simulated chain and
//! directly against token-core, with an indexer following the chain.

use w2e_core::abi::{ViewCall, ViewValue, W2eCall};
use w2e_core::gateway::{builtin_artifacts, Gateway, GatewayError, ProfileRegistry};
use w2e_core::reward::WorkoutRecord;
use w2e_core::indexer::{EventBatch, Indexer, StateProjection};
use w2e_core::token::Economy;
use w2e_core::types::{Address, TokenStandard, WEI_PER_NATIVE};

use super::{actor, apply, Op, PetApproval, ACTORS};

/// Transaction form of an op; `None` for ops the zero address would send.
pub fn to_call(op: &Op, contract: Address) -> Option<(Address, W2eCall)> {
    let (sender, call) = match *op {
        Op::Transfer { from, to, amount } => (from, W2eCall::Transfer { to: actor(to), amount }),
        Op::Approve { owner, spender, amount } => (owner, W2eCall::Approve { spender: actor(spender), amount }),
        Op::TransferFrom { spender, owner, to, amount } => {
            (spender, W2eCall::TransferFrom { owner: actor(owner), to: actor(to), amount })
        }
        Op::MintDmd { caller, to, amount } => (caller, W2eCall::MintDmd { to: actor(to), amount }),
        Op::MintPet { caller, to, bonus } => (caller, W2eCall::MintPet { to: actor(to), bonus_rate_pct: bonus }),
        Op::ApprovePet { caller, id, target } => {
            let approved = match target {
                PetApproval::Clear => None,
                PetApproval::Market => Some(contract),
                PetApproval::Actor(i) => Some(actor(i)),
            };
            (caller, W2eCall::ApprovePet { approved, token_id: id })
        }
        Op::TransferPet { caller, from, to, id } => {
            (caller, W2eCall::TransferPet { from: actor(from), to: actor(to), token_id: id })
        }
        Op::List { seller, id, price } => (seller, W2eCall::ListNft { token_id: id, price }),
        Op::Buy { buyer, id } => (buyer, W2eCall::BuyNft { token_id: id }),
        Op::Cancel { seller, id } => (seller, W2eCall::CancelListing { token_id: id }),
        Op::Reward { caller, user, pet, duration_sec, distance_m } => {
            let record = WorkoutRecord::from_distance(duration_sec, distance_m, 0, 0);
            (caller, W2eCall::GrantReward { user: actor(user), pet, record })
        }
    };
    (sender != 5).then(|| (actor(sender), call))
}

#[derive(Debug, Default)]
pub struct CoherenceReport {
    pub ops: usize,
    pub checkpoints: usize,
    pub reverted: usize,
}

/// Returns an error describing the first divergence.
pub fn run_gateway_script(network: &str, ops: &[Op], check_every: usize) -> Result<CoherenceReport, String> {
    let reg = ProfileRegistry::builtin();
    let profile = reg.get(network).map_err(|e| e.to_string())?;
    let mut gw = Gateway::connect(profile).map_err(|e| e.to_string())?;
    for i in 0..ACTORS - 1 {
        gw.faucet(actor(i), 1_000_000 * WEI_PER_NATIVE).map_err(|e| e.to_string())?;
    }
    let art = builtin_artifacts();
    let contract = gw
        .deploy(art.get(TokenStandard::Erc20).unwrap(), actor(0))
        .map_err(|e| e.to_string())?
        .contract;
    let mut direct = Economy::new(contract, actor(0));
    let mut ix = Indexer::new(contract);
    let mut report = CoherenceReport::default();

    for (i, op) in ops.iter().enumerate() {
        let Some((sender, call)) = to_call(op, contract) else { continue };
        report.ops += 1;
        let want = apply(&mut direct, op);
        direct.take_events();
        let got = match gw.call_function(contract, &call, sender, 0) {
            Ok(_) => Ok(()),
            Err(GatewayError::Reverted { reason, .. }) => Err(reason),
            Err(e) => return Err(format!("op {i}: {e}")),
        };
        if got.as_ref().map_err(String::as_str).copied() != want {
            return Err(format!("op {i} {op:?}: gateway {got:?}, direct {want:?}"));
        }
        if got.is_err() {
            report.reverted += 1;
        }

        if (i + 1) % check_every == 0 || i + 1 == ops.len() {
            report.checkpoints += 1;
            let head = gw.head_block().map_err(|e| e.to_string())?;
            let from = ix.last_processed_block() + 1;
            if head >= from {
                let events = gw.events(from, head).map_err(|e| e.to_string())?;
                ix.ingest(&EventBatch { first_block: from, last_block: head, events }).map_err(|e| e.to_string())?;
            }
            let chain = gw.sim().unwrap().economy(&contract).unwrap();
            let on_chain = StateProjection::of_economy(chain);
            if on_chain != StateProjection::of_economy(&direct) {
                return Err(format!("op {i}: chain state differs from direct replay"));
            }
            let views = ix.views();
            if views.projection(&contract) != on_chain {
                return Err(format!("op {i}: indexer views differ from chain"));
            }
            for a in 0..ACTORS {
                let read = gw.read(contract, &ViewCall::BalanceOf(actor(a))).map_err(|e| e.to_string())?;
                if read != ViewValue::Uint(views.dmd_balance(&actor(a))) {
                    return Err(format!("op {i}: balanceOf({a}) {read:?} vs indexer"));
                }
            }
            for id in 0..direct.pets().minted() {
                let read = gw.read(contract, &ViewCall::OwnerOf(id)).map_err(|e| e.to_string())?;
                if Some(&read) != views.pet_owners().get(&id).map(|a| ViewValue::Address(*a)).as_ref() {
                    return Err(format!("op {i}: ownerOf({id}) {read:?} vs indexer"));
                }
            }
        }
    }
    Ok(report)
}

/// A fixed walk through the market, including failures on purpose.
pub fn scripted_ops() -> Vec<Op> {
    use Op::*;
    vec![
        MintDmd { caller: 0, to: 2, amount: 500 },
        MintDmd { caller: 0, to: 3, amount: 300 },
        MintDmd { caller: 1, to: 1, amount: 999 },
        MintPet { caller: 0, to: 1, bonus: 120 },
        MintPet { caller: 0, to: 2, bonus: 150 },
        List { seller: 1, id: 0, price: 200 },
        ApprovePet { caller: 1, id: 0, target: PetApproval::Market },
        List { seller: 1, id: 0, price: 200 },
        Buy { buyer: 1, id: 0 },
        Buy { buyer: 3, id: 0 },
        Buy { buyer: 2, id: 0 },
        Transfer { from: 2, to: 1, amount: 100 },
        Approve { owner: 2, spender: 1, amount: 50 },
        TransferFrom { spender: 1, owner: 2, to: 3, amount: 30 },
        TransferFrom { spender: 1, owner: 2, to: 3, amount: 30 },
        ApprovePet { caller: 2, id: 1, target: PetApproval::Market },
        List { seller: 2, id: 1, price: 80 },
        Cancel { seller: 1, id: 1 },
        Cancel { seller: 2, id: 1 },
        List { seller: 2, id: 1, price: 90 },
        TransferPet { caller: 2, from: 2, to: 4, id: 1 },
        Buy { buyer: 3, id: 1 },
        Cancel { seller: 2, id: 1 },
        Reward { caller: 0, user: 3, pet: 0, duration_sec: 1800, distance_m: 5400 },
        Reward { caller: 0, user: 3, pet: 0, duration_sec: 1800, distance_m: 5400 },
        Reward { caller: 0, user: 2, pet: 0, duration_sec: 1800, distance_m: 5400 },
        Reward { caller: 0, user: 3, pet: 0, duration_sec: 60, distance_m: 720 },
        Reward { caller: 1, user: 3, pet: 0, duration_sec: 1800, distance_m: 5400 },
    ]
}
