//! Persisted simulator state for the `market` and `index` commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use w2e_core::abi::W2eCall;
use w2e_core::bench::{BUYER, DEPLOYER, SELLER};
use w2e_core::gateway::{builtin_artifacts, Gateway, NetworkProfile};
use w2e_core::indexer::{EventBatch, Indexer, JournalWriter};
use w2e_core::sim::SimChain;
use w2e_core::types::{Address, TokenStandard, WEI_PER_NATIVE};

use crate::CliResult;

#[derive(Serialize, Deserialize)]
pub struct MarketState {
    pub network: String,
    pub token: Address,
    pub chain: SimChain,
}

pub fn state_path(out: &Path, profile: &NetworkProfile) -> PathBuf {
    out.join(format!("market-{}.json", w2e_core::gateway::env_slug(&profile.name).to_lowercase()))
}

/// Accepts `0x…` addresses or fixture labels such as `bench/buyer`.
pub fn parse_actor(s: &str) -> Address {
    s.parse().unwrap_or_else(|_| Address::from_label(s))
}

fn seed_market(profile: &NetworkProfile) -> CliResult<MarketState> {
    let mut gw = Gateway::connect(profile)?;
    let operator = Address::from_label(DEPLOYER);
    let seller = Address::from_label(SELLER);
    let buyer = Address::from_label(BUYER);
    for who in [operator, seller, buyer] {
        gw.faucet(who, 1_000 * WEI_PER_NATIVE)?;
    }
    let art = builtin_artifacts();
    let token = gw.deploy(art.get(TokenStandard::Erc20)?, operator)?.contract;
    gw.call_function(token, &W2eCall::MintDmd { to: buyer, amount: 1_000 }, operator, 0)?;
    for (id, price) in [(0u64, 100u128), (1, 150), (2, 200)] {
        gw.call_function(token, &W2eCall::MintPet { to: seller, bonus_rate_pct: 110 + 10 * id as u32 }, operator, 0)?;
        gw.call_function(token, &W2eCall::ApprovePet { approved: Some(token), token_id: id }, seller, 0)?;
        gw.call_function(token, &W2eCall::ListNft { token_id: id, price }, seller, 0)?;
    }
    let chain = gw.sim().ok_or("market state needs a simulated network")?.clone();
    Ok(MarketState { network: profile.name.clone(), token, chain })
}

impl MarketState {
    /// Loads the saved market for `profile`, creating the fixture market
    /// on first use.
    pub fn open(out: &Path, profile: &NetworkProfile) -> CliResult<Self> {
        let path = state_path(out, profile);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            return Ok(serde_json::from_str(&text)?);
        }
        tracing::info!(path = %path.display(), "creating fixture market");
        let state = seed_market(profile)?;
        state.save(out, profile)?;
        Ok(state)
    }

    pub fn save(&self, out: &Path, profile: &NetworkProfile) -> CliResult<()> {
        std::fs::create_dir_all(out)?;
        let path = state_path(out, profile);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn gateway(&self, profile: &NetworkProfile) -> Gateway {
        Gateway::from_sim(profile, self.chain.clone())
    }

    /// Rebuilds the event cache from genesis, one batch per block, and
    /// rewrites the journal under `out`.
    pub fn index(&self, out: &Path) -> CliResult<Indexer> {
        std::fs::create_dir_all(out)?;
        let journal = out.join("index.journal.jsonl");
        if journal.exists() {
            std::fs::remove_file(&journal)?;
        }
        let mut ix = Indexer::new(self.token).with_journal(JournalWriter::open(&journal)?);
        for b in 1..=self.chain.head() {
            ix.ingest(&EventBatch { first_block: b, last_block: b, events: self.chain.events(b, b) })?;
        }
        Ok(ix)
    }
}
