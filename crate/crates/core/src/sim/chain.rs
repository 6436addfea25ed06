use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abi::{ViewCall, ViewValue, W2eCall};
use crate::events::ChainEvent;
use crate::reward::RewardPolicy;
use crate::sim::{fee_gwei, intrinsic_gas, ChainConfig, Receipt, SimError, Transaction, TxStatus};
use crate::token::{DmdAmount, Economy, NativeLedger};
use crate::types::{sha256, u128_str, Address, Gas, TokenStandard, TxHash, Wei};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Account {
    /// Nonce of the next transaction to be included.
    nonce: u64,
    #[serde(with = "u128_str")]
    balance: Wei,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PendingTx {
    hash: TxHash,
    tx: Transaction,
    gas: Gas,
    submitted_at_ms: u64,
    include_at_block: u64,
    #[serde(with = "u128_str")]
    reserved: Wei,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedContract {
    pub address: Address,
    pub deployer: Address,
    pub standard: Option<TokenStandard>,
    pub code_size: usize,
    pub economy: Option<Economy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Block {
    number: u64,
    timestamp_ms: u64,
    txs: Vec<TxHash>,
    events: Vec<ChainEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimChain {
    config: ChainConfig,
    chain_id: u64,
    now_ms: u64,
    head: u64,
    accounts: BTreeMap<Address, Account>,
    /// Next nonce including pending transactions.
    pending_nonce: BTreeMap<Address, u64>,
    reserved: BTreeMap<Address, DmdAmount>,
    /// Latest scheduled block per sender, to keep nonce order on inclusion.
    sender_tail: BTreeMap<Address, u64>,
    pool: Vec<PendingTx>,
    receipts: BTreeMap<TxHash, Receipt>,
    blocks: Vec<Block>,
    contracts: BTreeMap<Address, DeployedContract>,
    code_standards: BTreeMap<String, TokenStandard>,
    rng: ChaCha8Rng,
}

struct Accounts<'a>(&'a mut BTreeMap<Address, Account>);

impl NativeLedger for Accounts<'_> {
    fn native_balance(&self, who: &Address) -> Wei {
        self.0.get(who).map_or(0, |a| a.balance)
    }

    fn move_native(&mut self, from: &Address, to: &Address, amount: Wei) {
        self.0.entry(*from).or_default().balance -= amount;
        self.0.entry(*to).or_default().balance += amount;
    }
}

fn code_key(code: &[u8]) -> String {
    hex::encode(sha256(&[code]))
}

impl SimChain {
    pub fn new(config: ChainConfig, chain_id: u64) -> Result<Self, SimError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Ok(SimChain {
            config,
            chain_id,
            now_ms: 0,
            head: 0,
            accounts: BTreeMap::new(),
            pending_nonce: BTreeMap::new(),
            reserved: BTreeMap::new(),
            sender_tail: BTreeMap::new(),
            pool: Vec::new(),
            receipts: BTreeMap::new(),
            blocks: Vec::new(),
            contracts: BTreeMap::new(),
            code_standards: BTreeMap::new(),
            rng,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn chain_id(&self) -> u64 {
        self.chain_id
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn head(&self) -> u64 {
        self.head
    }

    pub fn pending_count(&self) -> usize {
        self.pool.len()
    }

    /// Genesis-style credit of native coin, outside any transaction.
    pub fn faucet(&mut self, who: Address, amount: Wei) {
        self.accounts.entry(who).or_default().balance += amount;
    }

    pub fn native_balance(&self, who: &Address) -> Wei {
        self.accounts.get(who).map_or(0, |a| a.balance)
    }

    /// Next nonce to use, counting pending transactions.
    pub fn next_nonce(&self, who: &Address) -> u64 {
        self.pending_nonce
            .get(who)
            .copied()
            .unwrap_or_else(|| self.accounts.get(who).map_or(0, |a| a.nonce))
    }

    /// Declares which standard a piece of contract code implements, so
    /// deployments of it get W2E semantics and the right gas charge.
    pub fn register_code(&mut self, code: &[u8], standard: TokenStandard) {
        self.code_standards.insert(code_key(code), standard);
    }

    pub fn contract(&self, address: &Address) -> Option<&DeployedContract> {
        self.contracts.get(address)
    }

    pub fn economy(&self, address: &Address) -> Option<&Economy> {
        self.contracts.get(address).and_then(|c| c.economy.as_ref())
    }

    /// Gas the transaction will use when included.
    pub fn gas_for(&self, tx: &Transaction) -> Gas {
        match tx.to {
            None => match self.code_standards.get(&code_key(&tx.payload)) {
                Some(TokenStandard::Erc20) => self.config.op_costs.deploy_token,
                _ => intrinsic_gas(&tx.payload, true, tx.payload.len()),
            },
            Some(to) => {
                let semantic = self.contracts.get(&to).is_some_and(|c| c.economy.is_some());
                match W2eCall::decode(&tx.payload) {
                    Ok(call) if semantic => self.config.op_costs.for_call(&call),
                    _ => intrinsic_gas(&tx.payload, false, 0),
                }
            }
        }
    }

    pub fn tx_hash(&self, tx: &Transaction) -> TxHash {
        let to = tx.to.map(|a| a.0.to_vec()).unwrap_or_default();
        TxHash(sha256(&[
            &self.chain_id.to_be_bytes(),
            tx.from.as_bytes(),
            &tx.nonce.to_be_bytes(),
            &to,
            &tx.value_wei.to_be_bytes(),
            &tx.gas_limit.to_be_bytes(),
            &tx.payload,
        ]))
    }

    pub fn submit_tx(&mut self, tx: Transaction) -> Result<TxHash, SimError> {
        let expected = self.next_nonce(&tx.from);
        if tx.nonce < expected {
            return Err(SimError::NonceTooLow { expected, got: tx.nonce });
        }
        if tx.nonce > expected {
            return Err(SimError::NonceGap { expected, got: tx.nonce });
        }
        let gas = self.gas_for(&tx);
        super::check_gas_limit(gas, tx.gas_limit)?;
        let max_fee = fee_gwei(tx.gas_limit, self.config.gas_price_gwei).as_wei();
        let needed = tx.value_wei.checked_add(max_fee).ok_or(SimError::InsufficientFunds {
            available: 0,
            needed: Wei::MAX,
        })?;
        let reserved = self.reserved.get(&tx.from).map_or(0, |r| r.0);
        let available = self.native_balance(&tx.from).saturating_sub(reserved);
        if available < needed {
            return Err(SimError::InsufficientFunds { available, needed });
        }

        let wait = self
            .rng
            .random_range(self.config.inclusion_blocks_min..=self.config.inclusion_blocks_max);
        let mut include_at = self.head + wait;
        if let Some(tail) = self.sender_tail.get(&tx.from) {
            include_at = include_at.max(*tail);
        }
        let hash = self.tx_hash(&tx);
        self.sender_tail.insert(tx.from, include_at);
        self.pending_nonce.insert(tx.from, expected + 1);
        self.reserved.entry(tx.from).or_default().0 += needed;
        tracing::trace!(%hash, include_at, "tx pooled");
        self.pool.push(PendingTx {
            hash,
            tx,
            gas,
            submitted_at_ms: self.now_ms,
            include_at_block: include_at,
            reserved: needed,
        });
        Ok(hash)
    }

    /// Moves the clock forward, producing one block per interval boundary
    /// crossed. Returns the number of blocks produced.
    pub fn advance_to(&mut self, time_ms: u64) -> Result<u64, SimError> {
        if time_ms < self.now_ms {
            return Err(SimError::ClockRegression { now: self.now_ms, requested: time_ms });
        }
        let interval = self.config.block_interval_ms;
        let mut produced = 0;
        while (self.head + 1) * interval <= time_ms {
            self.produce_block();
            produced += 1;
        }
        self.now_ms = time_ms;
        Ok(produced)
    }

    pub fn advance_by(&mut self, ms: u64) -> Result<u64, SimError> {
        self.advance_to(self.now_ms + ms)
    }

    /// Advances to the next block boundary unless already sitting on one.
    pub fn align_to_block(&mut self) -> Result<u64, SimError> {
        let interval = self.config.block_interval_ms;
        let next = self.now_ms.div_ceil(interval) * interval;
        self.advance_to(next)
    }

    fn produce_block(&mut self) {
        let number = self.head + 1;
        let timestamp_ms = number * self.config.block_interval_ms;
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pool)
            .into_iter()
            .partition(|p| p.include_at_block <= number);
        self.pool = rest;

        let mut block = Block { number, timestamp_ms, txs: Vec::new(), events: Vec::new() };
        for p in due {
            let overhead = self
                .rng
                .random_range(self.config.overhead_ms_min..=self.config.overhead_ms_max);
            let receipt = self.apply(p, number, timestamp_ms + overhead, &mut block.events);
            block.txs.push(receipt.tx_hash);
            self.receipts.insert(receipt.tx_hash, receipt);
        }
        self.head = number;
        self.blocks.push(block);
    }

    fn apply(&mut self, p: PendingTx, block_number: u64, confirmed_at_ms: u64, block_events: &mut Vec<ChainEvent>) -> Receipt {
        let tx = &p.tx;
        let price = self.config.gas_price_gwei;
        let fee = fee_gwei(p.gas, price);

        if let Some(r) = self.reserved.get_mut(&tx.from) {
            r.0 -= p.reserved;
            if r.0 == 0 {
                self.reserved.remove(&tx.from);
            }
        }
        {
            let acct = self.accounts.entry(tx.from).or_default();
            acct.balance -= fee.as_wei();
            acct.nonce += 1;
        }
        if self.accounts[&tx.from].nonce == self.pending_nonce.get(&tx.from).copied().unwrap_or(0) {
            self.pending_nonce.remove(&tx.from);
            self.sender_tail.remove(&tx.from);
        }

        let mut contract_address = None;
        let outcome: Result<Vec<crate::events::EventKind>, String> = match tx.to {
            None => {
                let addr = contract_address_for(&tx.from, tx.nonce);
                let standard = self.code_standards.get(&code_key(&tx.payload)).copied();
                let economy = standard
                    .filter(|s| s.has_w2e_semantics())
                    .map(|_| Economy::new(addr, tx.from));
                self.contracts.insert(
                    addr,
                    DeployedContract { address: addr, deployer: tx.from, standard, code_size: tx.payload.len(), economy },
                );
                contract_address = Some(addr);
                Ok(Vec::new())
            }
            Some(to) => match self.contracts.get_mut(&to) {
                None => {
                    if tx.value_wei > 0 {
                        Accounts(&mut self.accounts).move_native(&tx.from, &to, tx.value_wei);
                    }
                    Ok(Vec::new())
                }
                Some(DeployedContract { economy: None, .. }) => Err("OpaqueContract".to_string()),
                Some(DeployedContract { economy: Some(econ), .. }) => {
                    execute_call(econ, &self.config.reward_policy, &mut self.accounts, tx)
                }
            },
        };

        let (status, revert_reason, kinds) = match outcome {
            Ok(kinds) => (TxStatus::Success, None, kinds),
            Err(reason) => (TxStatus::Reverted, Some(reason), Vec::new()),
        };
        let emitter = tx.to.unwrap_or(Address::ZERO);
        let logs: Vec<ChainEvent> = kinds
            .into_iter()
            .map(|event| {
                let ev = ChainEvent {
                    block_number,
                    tx_hash: p.hash,
                    log_index: block_events.len() as u32,
                    contract: emitter,
                    event,
                };
                block_events.push(ev.clone());
                ev
            })
            .collect();

        Receipt {
            tx_hash: p.hash,
            block_number,
            status,
            gas_used: p.gas,
            gas_price: price,
            fee,
            submitted_at_ms: p.submitted_at_ms,
            confirmed_at_ms,
            contract_address,
            revert_reason,
            logs,
        }
    }

    /// Receipt as seen by a client at the current simulated time.
    pub fn receipt(&self, hash: &TxHash) -> Option<&Receipt> {
        self.receipts.get(hash).filter(|r| r.confirmed_at_ms <= self.now_ms)
    }

    /// Receipt regardless of client visibility.
    pub fn receipt_unobserved(&self, hash: &TxHash) -> Option<&Receipt> {
        self.receipts.get(hash)
    }

    pub fn is_pending(&self, hash: &TxHash) -> bool {
        self.pool.iter().any(|p| p.hash == *hash)
    }

    pub fn confirmation_latency(&self, hash: &TxHash) -> Result<u64, SimError> {
        match self.receipt(hash) {
            Some(r) => Ok(r.latency_ms()),
            None if self.is_pending(hash) || self.receipts.contains_key(hash) => Err(SimError::NotConfirmed(*hash)),
            None => Err(SimError::UnknownTransaction(*hash)),
        }
    }

    /// Events of blocks `from..=to`, in block and log order.
    pub fn events(&self, from_block: u64, to_block: u64) -> Vec<ChainEvent> {
        self.blocks
            .iter()
            .filter(|b| b.number >= from_block && b.number <= to_block)
            .flat_map(|b| b.events.iter().cloned())
            .collect()
    }

    pub fn view(&self, contract: &Address, call: &ViewCall) -> Option<ViewValue> {
        let e = self.economy(contract)?;
        Some(match call {
            ViewCall::BalanceOf(a) => ViewValue::Uint(e.balance_of(a)),
            ViewCall::TotalSupply => ViewValue::Uint(e.total_supply()),
            ViewCall::Allowance { owner, spender } => ViewValue::Uint(e.ledger().allowance(owner, spender)),
            ViewCall::OwnerOf(id) => ViewValue::Address(e.owner_of(*id).unwrap_or(Address::ZERO)),
            ViewCall::BonusRateOf(id) => ViewValue::Uint(e.pets().bonus_rate(*id).unwrap_or(0) as u128),
            ViewCall::IsEarnable(a) => ViewValue::Bool(e.is_earnable(a)),
        })
    }

    /// Digest of every receipt in inclusion order.
    pub fn receipts_digest(&self) -> [u8; 32] {
        let ordered: Vec<&Receipt> = self.blocks.iter().flat_map(|b| b.txs.iter().map(|h| &self.receipts[h])).collect();
        sha256(&[&serde_json::to_vec(&ordered).expect("receipts serialize")])
    }
}

pub(crate) fn contract_address_for(deployer: &Address, nonce: u64) -> Address {
    let d = sha256(&[b"create", deployer.as_bytes(), &nonce.to_be_bytes()]);
    Address::from_slice(&d[..20]).expect("20 bytes")
}

fn execute_call(
    econ: &mut Economy,
    policy: &RewardPolicy,
    accounts: &mut BTreeMap<Address, Account>,
    tx: &Transaction,
) -> Result<Vec<crate::events::EventKind>, String> {
    let call = W2eCall::decode(&tx.payload).map_err(|e| format!("BadCalldata: {e}"))?;
    if tx.value_wei > 0 && call != W2eCall::BuyDmd {
        return Err("NonPayable".to_string());
    }
    let caller = tx.from;
    let result = match call {
        W2eCall::Transfer { to, amount } => econ.transfer(caller, to, amount),
        W2eCall::Approve { spender, amount } => econ.approve(caller, spender, amount),
        W2eCall::TransferFrom { owner, to, amount } => econ.transfer_from(caller, owner, to, amount),
        W2eCall::MintDmd { to, amount } => econ.mint_dmd(caller, to, amount).map(|_| ()),
        W2eCall::BuyDmd => {
            // the payment sits in the transaction value
            econ.buy_dmd(caller, tx.value_wei, &mut Accounts(accounts)).map(|_| ())
        }
        W2eCall::MintPet { to, bonus_rate_pct } => econ.mint_pet(caller, to, bonus_rate_pct).map(|_| ()),
        W2eCall::ApprovePet { approved, token_id } => econ.approve_pet(caller, token_id, approved),
        W2eCall::TransferPet { from, to, token_id } => econ.transfer_pet(caller, from, to, token_id),
        W2eCall::ListNft { token_id, price } => econ.list_nft(caller, token_id, price).map(|_| ()),
        W2eCall::BuyNft { token_id } => econ.buy_nft(caller, token_id),
        W2eCall::CancelListing { token_id } => econ.cancel_listing(caller, token_id),
        W2eCall::GrantReward { user, pet, record } => {
            return policy
                .grant_reward(econ, caller, user, pet, record)
                .map(|_| econ.take_events())
                .map_err(|e| e.code().to_string());
        }
    };
    result.map(|_| econ.take_events()).map_err(|e| e.code().to_string())
}
