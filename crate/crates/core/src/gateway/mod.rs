//! Uniform chain access over the in-process simulator or a JSON-RPC endpoint.

mod artifacts;
mod profiles;
mod rpc;
mod signer;
mod sim_backend;

use std::collections::BTreeMap;

use thiserror::Error;

pub use artifacts::{builtin_artifacts, ArtifactError, ArtifactSet, ContractArtifact};
pub use profiles::{env_slug, BackendKind, NetworkProfile, ProfileError, ProfileRegistry};
pub use rpc::RpcBackend;
pub use signer::{PresignedQueue, TxSigner};
pub use sim_backend::SimBackend;

use crate::abi::{AbiError, ViewCall, ViewValue, W2eCall};
use crate::events::ChainEvent;
use crate::sim::{Receipt, SimChain, SimError, Transaction};
use crate::types::{Address, Dmd, Gas, Gwei, TxHash, Wei};

pub const DEPLOY_GAS_LIMIT: Gas = 8_000_000;
pub const CALL_GAS_LIMIT: Gas = 500_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("no receipt for {tx_hash} within {waited_ms} ms")]
    Timeout { tx_hash: TxHash, waited_ms: u64 },
    #[error("transaction reverted: {reason}")]
    Reverted { reason: String, receipt: Box<Receipt> },
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("rpc error {code}: {message}")]
    Rpc { code: i64, message: String },
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Abi(#[from] AbiError),
    #[error("signer: {0}")]
    Signer(String),
    #[error("{0} is not supported by this backend")]
    Unsupported(&'static str),
    #[error("no contract at {0}")]
    NoContract(Address),
}

/// Operations every backend provides. Reads never change chain state.
pub trait ChainBackend: Send {
    fn chain_id(&self) -> Result<u64, GatewayError>;
    fn gas_price(&self) -> Result<Gwei, GatewayError>;
    fn native_balance(&self, who: &Address) -> Result<Wei, GatewayError>;
    fn next_nonce(&self, who: &Address) -> Result<u64, GatewayError>;
    /// `Ok(None)` while the transaction is still pending.
    fn fetch_receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, GatewayError>;
    fn call_view(&self, contract: &Address, call: &ViewCall) -> Result<ViewValue, GatewayError>;
    fn head_block(&self) -> Result<u64, GatewayError>;
    /// Events of blocks `from..=to`.
    fn events(&self, from_block: u64, to_block: u64) -> Result<Vec<ChainEvent>, GatewayError>;

    fn send_transaction(&mut self, tx: &Transaction) -> Result<TxHash, GatewayError>;
    /// Milliseconds on the backend's clock.
    fn now_ms(&self) -> u64;
    fn wait_ms(&mut self, ms: u64) -> Result<(), GatewayError>;

    /// Lets the backend learn what an artifact is before it is deployed.
    fn prepare_artifact(&mut self, _artifact: &ContractArtifact) -> Result<(), GatewayError> {
        Ok(())
    }

    /// Waits for the next block boundary, where the backend can tell.
    fn align_to_block(&mut self) -> Result<(), GatewayError> {
        Ok(())
    }

    fn faucet(&mut self, _who: Address, _amount: Wei) -> Result<(), GatewayError> {
        Err(GatewayError::Unsupported("faucet"))
    }

    fn as_sim(&self) -> Option<&SimChain> {
        None
    }
}

/// A confirmed transaction as the client observed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Confirmation {
    pub receipt: Receipt,
    pub submitted_at_ms: u64,
    /// First poll at which the receipt was visible.
    pub observed_at_ms: u64,
}

impl Confirmation {
    /// Client-measured latency, including poll quantization.
    pub fn latency_ms(&self) -> u64 {
        self.observed_at_ms - self.submitted_at_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub contract: Address,
    pub confirmation: Confirmation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Balances {
    pub native_wei: Wei,
    pub dmd: Dmd,
}

pub struct Gateway {
    profile: NetworkProfile,
    backend: Box<dyn ChainBackend>,
    nonces: BTreeMap<Address, u64>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("profile", &self.profile.name).finish()
    }
}

impl Gateway {
    /// Connects to a profile. RPC profiles get an empty presigned queue; use
    /// [`Gateway::connect_rpc`] to send transactions over RPC.
    pub fn connect(profile: &NetworkProfile) -> Result<Self, GatewayError> {
        match profile.kind {
            BackendKind::Sim => {
                let config = profile.sim.clone().expect("validated sim profile");
                let chain = SimChain::new(config, profile.chain_id)?;
                Ok(Self::with_backend(profile.clone(), Box::new(SimBackend::new(chain))))
            }
            BackendKind::Rpc => Self::connect_rpc(profile, Box::new(PresignedQueue::default())),
        }
    }

    pub fn connect_rpc(profile: &NetworkProfile, signer: Box<dyn TxSigner>) -> Result<Self, GatewayError> {
        let url = profile
            .endpoint_url
            .clone()
            .ok_or_else(|| GatewayError::EndpointUnreachable(format!("{} has no endpoint", profile.name)))?;
        let backend = RpcBackend::new(url, profile.timeout_ms, signer);
        Ok(Self::with_backend(profile.clone(), Box::new(backend)))
    }

    /// Resumes a gateway over an existing simulated chain.
    pub fn from_sim(profile: &NetworkProfile, chain: SimChain) -> Self {
        Self::with_backend(profile.clone(), Box::new(SimBackend::new(chain)))
    }

    pub fn with_backend(profile: NetworkProfile, backend: Box<dyn ChainBackend>) -> Self {
        Gateway { profile, backend, nonces: BTreeMap::new() }
    }

    pub fn profile(&self) -> &NetworkProfile {
        &self.profile
    }

    pub fn backend(&self) -> &dyn ChainBackend {
        self.backend.as_ref()
    }

    pub fn sim(&self) -> Option<&SimChain> {
        self.backend.as_sim()
    }

    pub fn faucet(&mut self, who: Address, amount: Wei) -> Result<(), GatewayError> {
        self.backend.faucet(who, amount)
    }

    pub fn align_to_block(&mut self) -> Result<(), GatewayError> {
        self.backend.align_to_block()
    }

    pub fn wait_ms(&mut self, ms: u64) -> Result<(), GatewayError> {
        self.backend.wait_ms(ms)
    }

    pub fn head_block(&self) -> Result<u64, GatewayError> {
        self.backend.head_block()
    }

    pub fn events(&self, from_block: u64, to_block: u64) -> Result<Vec<ChainEvent>, GatewayError> {
        self.backend.events(from_block, to_block)
    }

    fn take_nonce(&mut self, sender: &Address) -> Result<u64, GatewayError> {
        let chain = self.backend.next_nonce(sender)?;
        let local = self.nonces.get(sender).copied().unwrap_or(0);
        Ok(chain.max(local))
    }

    /// Signs off a nonce, submits and returns the hash with the submit time.
    pub fn submit(
        &mut self,
        from: Address,
        to: Option<Address>,
        payload: Vec<u8>,
        value_wei: Wei,
        gas_limit: Gas,
    ) -> Result<(TxHash, u64), GatewayError> {
        let nonce = self.take_nonce(&from)?;
        let tx = Transaction { from, to, payload, value_wei, gas_limit, nonce };
        let submitted_at = self.backend.now_ms();
        let hash = self.backend.send_transaction(&tx)?;
        self.nonces.insert(from, nonce + 1);
        tracing::debug!(network = %self.profile.name, %hash, nonce, "submitted");
        Ok((hash, submitted_at))
    }

    /// Polls every `poll_interval_ms` until the receipt shows up or the
    /// profile timeout passes.
    pub fn poll_receipt(&mut self, hash: &TxHash, submitted_at_ms: u64) -> Result<Confirmation, GatewayError> {
        self.poll_with_timeout(hash, submitted_at_ms, self.profile.timeout_ms)
    }

    pub fn poll_with_timeout(
        &mut self,
        hash: &TxHash,
        submitted_at_ms: u64,
        timeout_ms: u64,
    ) -> Result<Confirmation, GatewayError> {
        let deadline = submitted_at_ms.saturating_add(timeout_ms);
        let poll = self.profile.poll_interval_ms.max(1);
        loop {
            if let Some(receipt) = self.backend.fetch_receipt(hash)? {
                return Ok(Confirmation { receipt, submitted_at_ms, observed_at_ms: self.backend.now_ms() });
            }
            let now = self.backend.now_ms();
            if now >= deadline {
                return Err(GatewayError::Timeout { tx_hash: *hash, waited_ms: now - submitted_at_ms });
            }
            self.backend.wait_ms(poll.min(deadline - now))?;
        }
    }

    fn confirm(&mut self, hash: TxHash, submitted_at: u64) -> Result<Confirmation, GatewayError> {
        let c = self.poll_receipt(&hash, submitted_at)?;
        if !c.receipt.succeeded() {
            let reason = c.receipt.revert_reason.clone().unwrap_or_else(|| "reverted".to_string());
            return Err(GatewayError::Reverted { reason, receipt: Box::new(c.receipt) });
        }
        Ok(c)
    }

    pub fn deploy(&mut self, artifact: &ContractArtifact, deployer: Address) -> Result<Deployment, GatewayError> {
        self.backend.prepare_artifact(artifact)?;
        let code = artifact.bytecode().map_err(|e| GatewayError::Signer(e.to_string()))?;
        let (hash, at) = self.submit(deployer, None, code, 0, DEPLOY_GAS_LIMIT)?;
        let confirmation = self.confirm(hash, at)?;
        let contract = confirmation
            .receipt
            .contract_address
            .ok_or_else(|| GatewayError::BadResponse("deployment receipt without contract address".into()))?;
        Ok(Deployment { contract, confirmation })
    }

    /// Sends a state-changing call and waits for it. Reverts come back as
    /// [`GatewayError::Reverted`] carrying the fee-bearing receipt.
    pub fn call_function(
        &mut self,
        contract: Address,
        call: &W2eCall,
        caller: Address,
        value_wei: Wei,
    ) -> Result<Confirmation, GatewayError> {
        let (hash, at) = self.submit(caller, Some(contract), call.encode(), value_wei, CALL_GAS_LIMIT)?;
        self.confirm(hash, at)
    }

    pub fn read(&self, contract: Address, call: &ViewCall) -> Result<ViewValue, GatewayError> {
        self.backend.call_view(&contract, call)
    }

    /// Native balance, plus the DMD balance when a token contract is given.
    pub fn get_balance(&self, who: Address, token: Option<Address>) -> Result<Balances, GatewayError> {
        let native_wei = self.backend.native_balance(&who)?;
        let dmd = match token {
            Some(t) => self
                .read(t, &ViewCall::BalanceOf(who))?
                .as_uint()
                .ok_or_else(|| GatewayError::BadResponse("balanceOf returned a non-integer".into()))?,
            None => 0,
        };
        Ok(Balances { native_wei, dmd })
    }
}
