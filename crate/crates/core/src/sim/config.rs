use serde::{Deserialize, Serialize};

use crate::abi::W2eCall;
use crate::reward::RewardPolicy;
use crate::sim::SimError;
use crate::types::{Gas, Gwei};

/// Flat gas charged per W2E operation. Each value is the whole `gasUsed` of
/// the call; the base transaction cost is folded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperationCosts {
    pub deploy_token: Gas,
    pub transfer: Gas,
    pub approve: Gas,
    pub transfer_from: Gas,
    pub mint_dmd: Gas,
    pub buy_dmd: Gas,
    pub mint_pet: Gas,
    pub approve_pet: Gas,
    pub transfer_pet: Gas,
    pub list_nft: Gas,
    pub buy_nft: Gas,
    pub cancel_listing: Gas,
    pub grant_reward: Gas,
}

impl Default for OperationCosts {
    fn default() -> Self {
        OperationCosts {
            deploy_token: 1_200_000,
            transfer: 51_000,
            approve: 46_000,
            transfer_from: 62_000,
            mint_dmd: 55_000,
            buy_dmd: 70_000,
            mint_pet: 120_000,
            approve_pet: 48_000,
            transfer_pet: 58_000,
            list_nft: 90_000,
            buy_nft: 115_000,
            cancel_listing: 60_000,
            grant_reward: 95_000,
        }
    }
}

impl OperationCosts {
    pub fn for_call(&self, call: &W2eCall) -> Gas {
        match call {
            W2eCall::Transfer { .. } => self.transfer,
            W2eCall::Approve { .. } => self.approve,
            W2eCall::TransferFrom { .. } => self.transfer_from,
            W2eCall::MintDmd { .. } => self.mint_dmd,
            W2eCall::BuyDmd => self.buy_dmd,
            W2eCall::MintPet { .. } => self.mint_pet,
            W2eCall::ApprovePet { .. } => self.approve_pet,
            W2eCall::TransferPet { .. } => self.transfer_pet,
            W2eCall::ListNft { .. } => self.list_nft,
            W2eCall::BuyNft { .. } => self.buy_nft,
            W2eCall::CancelListing { .. } => self.cancel_listing,
            W2eCall::GrantReward { .. } => self.grant_reward,
        }
    }
}

/// Parameters of one simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub block_interval_ms: u64,
    pub gas_price_gwei: Gwei,
    /// Blocks a submitted transaction waits, drawn uniformly from this range.
    pub inclusion_blocks_min: u64,
    pub inclusion_blocks_max: u64,
    /// Network round trip added to each confirmation, uniform in this range.
    pub overhead_ms_min: u64,
    pub overhead_ms_max: u64,
    pub rng_seed: u64,
    #[serde(default)]
    pub op_costs: OperationCosts,
    #[serde(default)]
    pub reward_policy: RewardPolicy,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.block_interval_ms == 0 {
            return bad("block_interval_ms must be positive");
        }
        if self.inclusion_blocks_min < 1 {
            return bad("inclusion_blocks_min must be at least 1");
        }
        if self.inclusion_blocks_min > self.inclusion_blocks_max {
            return bad("inclusion_blocks_min exceeds inclusion_blocks_max");
        }
        if self.overhead_ms_min > self.overhead_ms_max {
            return bad("overhead_ms_min exceeds overhead_ms_max");
        }
        Ok(())
    }

    /// E[blocks] × interval + E[overhead] for a submission made right at a
    /// block boundary.
    pub fn expected_latency_ms(&self) -> f64 {
        let blocks = (self.inclusion_blocks_min + self.inclusion_blocks_max) as f64 / 2.0;
        let overhead = (self.overhead_ms_min + self.overhead_ms_max) as f64 / 2.0;
        blocks * self.block_interval_ms as f64 + overhead
    }

    /// Upper bound on any confirmation latency.
    pub fn max_latency_ms(&self) -> u64 {
        self.inclusion_blocks_max * self.block_interval_ms + self.overhead_ms_max
    }
}
