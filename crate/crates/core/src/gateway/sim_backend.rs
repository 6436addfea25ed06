use crate::abi::{ViewCall, ViewValue};
use crate::events::ChainEvent;
use crate::gateway::{ChainBackend, ContractArtifact, GatewayError};
use crate::sim::{Receipt, SimChain, SimError, Transaction};
use crate::types::{Address, Gwei, TxHash, Wei};

/// [`ChainBackend`] over an owned [`SimChain`]. Waiting advances the
/// simulated clock instead of sleeping.
#[derive(Debug, Clone)]
pub struct SimBackend {
    chain: SimChain,
}

impl SimBackend {
    pub fn new(chain: SimChain) -> Self {
        SimBackend { chain }
    }

    pub fn chain(&self) -> &SimChain {
        &self.chain
    }

    pub fn into_chain(self) -> SimChain {
        self.chain
    }
}

impl ChainBackend for SimBackend {
    fn chain_id(&self) -> Result<u64, GatewayError> {
        Ok(self.chain.chain_id())
    }

    fn gas_price(&self) -> Result<Gwei, GatewayError> {
        Ok(self.chain.config().gas_price_gwei)
    }

    fn native_balance(&self, who: &Address) -> Result<Wei, GatewayError> {
        Ok(self.chain.native_balance(who))
    }

    fn next_nonce(&self, who: &Address) -> Result<u64, GatewayError> {
        Ok(self.chain.next_nonce(who))
    }

    fn fetch_receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, GatewayError> {
        if let Some(r) = self.chain.receipt(hash) {
            return Ok(Some(r.clone()));
        }
        if self.chain.is_pending(hash) || self.chain.receipt_unobserved(hash).is_some() {
            return Ok(None);
        }
        Err(SimError::UnknownTransaction(*hash).into())
    }

    fn call_view(&self, contract: &Address, call: &ViewCall) -> Result<ViewValue, GatewayError> {
        self.chain.view(contract, call).ok_or(GatewayError::NoContract(*contract))
    }

    fn head_block(&self) -> Result<u64, GatewayError> {
        Ok(self.chain.head())
    }

    fn events(&self, from_block: u64, to_block: u64) -> Result<Vec<ChainEvent>, GatewayError> {
        Ok(self.chain.events(from_block, to_block))
    }

    fn send_transaction(&mut self, tx: &Transaction) -> Result<TxHash, GatewayError> {
        Ok(self.chain.submit_tx(tx.clone())?)
    }

    fn now_ms(&self) -> u64 {
        self.chain.now_ms()
    }

    fn wait_ms(&mut self, ms: u64) -> Result<(), GatewayError> {
        self.chain.advance_by(ms)?;
        Ok(())
    }

    fn prepare_artifact(&mut self, artifact: &ContractArtifact) -> Result<(), GatewayError> {
        let code = artifact.bytecode().map_err(|e| GatewayError::Signer(e.to_string()))?;
        self.chain.register_code(&code, artifact.standard);
        Ok(())
    }

    fn align_to_block(&mut self) -> Result<(), GatewayError> {
        self.chain.align_to_block()?;
        Ok(())
    }

    fn faucet(&mut self, who: Address, amount: Wei) -> Result<(), GatewayError> {
        self.chain.faucet(who, amount);
        Ok(())
    }

    fn as_sim(&self) -> Option<&SimChain> {
        Some(&self.chain)
    }
}
