//! The four experiments: deployment gas, function gas, deployment latency
//! and buy latency, run across a profile registry.
//!
//! Each network is one lane on its own thread; trials inside a lane run in
//! order. Rows come back in registry order, so output never depends on
//! thread scheduling.

mod reference;
mod render;

use thiserror::Error;

pub use reference::{FeeRow, FeeTable, LatencyRow, LatencyTable, PublishedReference};
pub use render::{format_tenths, parse_samples, render, render_samples, Format};

use crate::abi::W2eCall;
use crate::events::EventKind;
use crate::gateway::{ArtifactSet, Confirmation, Gateway, GatewayError, NetworkProfile, ProfileRegistry};
use crate::types::{sha256, Address, Dmd, Gas, Gwei, TokenId, TokenStandard, Wei, WEI_PER_NATIVE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("no samples to average")]
    EmptySamples,
    #[error("unknown format {0:?}; expected csv or markdown")]
    UnknownFormat(String),
    #[error("buy fixture failed: {0}")]
    BuyFixtureFailed(String),
    #[error("fixture setup failed: {0}")]
    Fixture(String),
    #[error("invalid reference data: {0}")]
    Reference(String),
    #[error("trials must be at least 1")]
    InvalidTrials,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    DeployGas,
    FunctionGas,
    DeployLatency,
    BuyLatency,
}

impl ReportKind {
    pub fn title(&self) -> &'static str {
        match self {
            ReportKind::DeployGas => "Deployment fee (Gwei)",
            ReportKind::FunctionGas => "Function fee (Gwei)",
            ReportKind::DeployLatency => "Deployment latency (ms)",
            ReportKind::BuyLatency => "Buy NFT latency (ms)",
        }
    }

    pub fn slug(&self) -> &'static str {
        match self {
            ReportKind::DeployGas => "deploy-gas",
            ReportKind::FunctionGas => "exec-gas",
            ReportKind::DeployLatency => "deploy-time",
            ReportKind::BuyLatency => "exec-time",
        }
    }

    pub fn is_latency(&self) -> bool {
        matches!(self, ReportKind::DeployLatency | ReportKind::BuyLatency)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Fee { gas_used: Gas, gas_price: Gwei, fee: Gwei },
    Latency(u64),
    /// A trial that timed out; excluded from the average.
    Missing(String),
    Error(String),
}

impl Cell {
    fn from_confirmation_fee(c: &Confirmation) -> Cell {
        Cell::Fee { gas_used: c.receipt.gas_used, gas_price: c.receipt.gas_price, fee: c.receipt.fee }
    }

    pub fn fee(&self) -> Option<Gwei> {
        match self {
            Cell::Fee { fee, .. } => Some(*fee),
            _ => None,
        }
    }

    pub fn latency(&self) -> Option<u64> {
        match self {
            Cell::Latency(ms) => Some(*ms),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub network: String,
    pub cells: Vec<Cell>,
}

impl ReportRow {
    pub fn latencies(&self) -> Vec<u64> {
        self.cells.iter().filter_map(Cell::latency).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, Cell::Fee { .. } | Cell::Latency(_)))
    }

    pub fn has_errors(&self) -> bool {
        self.cells.iter().any(|c| matches!(c, Cell::Error(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportMeta {
    pub seed: u64,
    pub profile_sha256: String,
    /// Shown in Markdown only; CSV stays byte-stable across runs.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub kind: ReportKind,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub meta: ReportMeta,
}

/// One measured value in flat form.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSample {
    pub network: String,
    pub operation: String,
    /// 1-based.
    pub trial_index: usize,
    pub gas_used: Option<Gas>,
    pub gas_price: Option<Gwei>,
    pub fee: Option<Gwei>,
    pub latency_ms: Option<u64>,
}

impl BenchReport {
    pub fn empty(kind: ReportKind, columns: Vec<String>) -> Self {
        BenchReport { kind, columns, rows: Vec::new(), meta: ReportMeta::default() }
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(ReportRow::has_errors)
    }

    pub fn row(&self, network: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.network == network)
    }

    pub fn samples(&self) -> Vec<BenchSample> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (i, cell) in row.cells.iter().enumerate() {
                let (operation, trial_index) = if self.kind.is_latency() {
                    (self.kind.slug().to_string(), i + 1)
                } else {
                    (self.columns[i].clone(), 1)
                };
                let mut s = BenchSample {
                    network: row.network.clone(),
                    operation,
                    trial_index,
                    gas_used: None,
                    gas_price: None,
                    fee: None,
                    latency_ms: None,
                };
                match cell {
                    Cell::Fee { gas_used, gas_price, fee } => {
                        s.gas_used = Some(*gas_used);
                        s.gas_price = Some(*gas_price);
                        s.fee = Some(*fee);
                    }
                    Cell::Latency(ms) => s.latency_ms = Some(*ms),
                    Cell::Missing(_) | Cell::Error(_) => {}
                }
                out.push(s);
            }
        }
        out
    }

    /// Latency report whose trials are the reference measurements.
    pub fn from_reference(kind: ReportKind, table: &LatencyTable) -> Self {
        let n = table.rows.iter().map(|r| r.trials.len()).max().unwrap_or(0);
        BenchReport {
            kind,
            columns: (1..=n).map(ordinal).collect(),
            rows: table
                .rows
                .iter()
                .map(|r| ReportRow {
                    network: r.network.clone(),
                    cells: r.trials.iter().map(|t| Cell::Latency(*t)).collect(),
                })
                .collect(),
            meta: ReportMeta::default(),
        }
    }
}

/// Arithmetic mean.
pub fn mean(samples: &[u64]) -> Result<f64, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    Ok(samples.iter().map(|s| *s as u128).sum::<u128>() as f64 / samples.len() as f64)
}

/// Mean in tenths, rounded half up with exact integer arithmetic.
pub fn mean_tenths(samples: &[u64]) -> Result<u128, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    let n = samples.len() as u128;
    let sum: u128 = samples.iter().map(|s| *s as u128).sum();
    Ok((sum * 20 + n) / (2 * n))
}

pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    Deploy,
    BuyNft,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchOptions {
    pub seed: u64,
    pub trials: usize,
    /// DMD minted to the buyer before the market fixture runs.
    pub buyer_dmd: Dmd,
    /// Native coin credited to each actor on simulated networks.
    pub funding_wei: Wei,
    pub listing_price: Dmd,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { seed: 0, trials: 5, buyer_dmd: 1_000_000, funding_wei: 1_000_000 * WEI_PER_NATIVE, listing_price: 100 }
    }
}

pub const DEPLOYER: &str = "bench/deployer";
pub const SELLER: &str = "bench/seller";
pub const BUYER: &str = "bench/buyer";

/// Gives every lane its own stream derived from the run seed.
pub fn seeded_profile(profile: &NetworkProfile, seed: u64) -> NetworkProfile {
    let mut p = profile.clone();
    if let Some(sim) = &mut p.sim {
        let d = sha256(&[&seed.to_be_bytes(), &sim.rng_seed.to_be_bytes(), p.name.as_bytes()]);
        sim.rng_seed = u64::from_be_bytes(d[..8].try_into().expect("8 bytes"));
    }
    p
}

fn fund(gw: &mut Gateway, who: Address, amount: Wei) {
    match gw.faucet(who, amount) {
        Ok(()) | Err(GatewayError::Unsupported(_)) => {}
        Err(e) => tracing::warn!(%who, "funding failed: {e}"),
    }
}

fn meta(registry: &ProfileRegistry, opts: &BenchOptions) -> ReportMeta {
    ReportMeta { seed: opts.seed, profile_sha256: registry.source_sha256().to_string(), timestamp: None }
}

/// Runs `lane` once per profile, concurrently, and joins rows in order.
fn run_lanes<F>(registry: &ProfileRegistry, opts: &BenchOptions, ncols: usize, lane: F) -> Vec<ReportRow>
where
    F: Fn(&mut Gateway) -> Vec<Cell> + Sync,
{
    std::thread::scope(|s| {
        let handles: Vec<_> = registry
            .profiles()
            .iter()
            .map(|p| {
                let lane = &lane;
                s.spawn(move || {
                    let profile = seeded_profile(p, opts.seed);
                    let cells = match Gateway::connect(&profile) {
                        Ok(mut gw) => {
                            for who in [DEPLOYER, SELLER, BUYER] {
                                fund(&mut gw, Address::from_label(who), opts.funding_wei);
                            }
                            lane(&mut gw)
                        }
                        Err(e) => vec![Cell::Error(e.to_string()); ncols],
                    };
                    tracing::info!(network = %p.name, "lane finished");
                    ReportRow { network: p.name.clone(), cells }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench lane panicked")).collect()
    })
}

pub fn run_deploy_gas(registry: &ProfileRegistry, artifacts: &ArtifactSet, opts: &BenchOptions) -> BenchReport {
    let columns: Vec<String> = TokenStandard::ALL.iter().map(|s| s.label().to_string()).collect();
    let rows = run_lanes(registry, opts, columns.len(), |gw| {
        let deployer = Address::from_label(DEPLOYER);
        TokenStandard::ALL
            .iter()
            .map(|s| match artifacts.get(*s) {
                Err(e) => Cell::Error(artifacts.failure(*s).map_or_else(|| e.to_string(), str::to_string)),
                Ok(a) => match gw.deploy(a, deployer) {
                    Ok(d) => Cell::from_confirmation_fee(&d.confirmation),
                    Err(e) => Cell::Error(e.to_string()),
                },
            })
            .collect()
    });
    BenchReport { kind: ReportKind::DeployGas, columns, rows, meta: meta(registry, opts) }
}

/// A deployed DMD economy with a funded buyer.
struct Market {
    token: Address,
    next_pet: TokenId,
}

fn minted_pet(c: &Confirmation, fallback: TokenId) -> TokenId {
    c.receipt
        .logs
        .iter()
        .find_map(|l| match l.event {
            EventKind::NftTransfer { from, token_id, .. } if from.is_zero() => Some(token_id),
            _ => None,
        })
        .unwrap_or(fallback)
}

impl Market {
    fn setup(gw: &mut Gateway, artifacts: &ArtifactSet, buyer_dmd: Dmd) -> Result<Market, BenchError> {
        let fixture = |e: GatewayError| BenchError::Fixture(e.to_string());
        let operator = Address::from_label(DEPLOYER);
        let art = artifacts.get(TokenStandard::Erc20).map_err(|e| BenchError::Fixture(e.to_string()))?;
        let token = gw.deploy(art, operator).map_err(fixture)?.contract;
        if buyer_dmd > 0 {
            let mint = W2eCall::MintDmd { to: Address::from_label(BUYER), amount: buyer_dmd };
            gw.call_function(token, &mint, operator, 0).map_err(fixture)?;
        }
        Ok(Market { token, next_pet: 0 })
    }

    /// Mints a pet to the seller and approves the marketplace for it.
    fn seller_pet(&mut self, gw: &mut Gateway) -> Result<TokenId, BenchError> {
        let fixture = |e: GatewayError| BenchError::Fixture(e.to_string());
        let seller = Address::from_label(SELLER);
        let c = gw
            .call_function(self.token, &W2eCall::MintPet { to: seller, bonus_rate_pct: 110 }, Address::from_label(DEPLOYER), 0)
            .map_err(fixture)?;
        let id = minted_pet(&c, self.next_pet);
        self.next_pet = id + 1;
        let approve = W2eCall::ApprovePet { approved: Some(self.token), token_id: id };
        gw.call_function(self.token, &approve, seller, 0).map_err(fixture)?;
        Ok(id)
    }

    fn list(&self, gw: &mut Gateway, id: TokenId, price: Dmd) -> Result<Confirmation, BenchError> {
        gw.call_function(self.token, &W2eCall::ListNft { token_id: id, price }, Address::from_label(SELLER), 0)
            .map_err(|e| BenchError::Fixture(e.to_string()))
    }
}

fn function_row(gw: &mut Gateway, artifacts: &ArtifactSet, opts: &BenchOptions) -> Result<Vec<Cell>, BenchError> {
    let mut m = Market::setup(gw, artifacts, opts.buyer_dmd)?;
    let seller = Address::from_label(SELLER);

    let sold = m.seller_pet(gw)?;
    let sell = m.list(gw, sold, opts.listing_price)?;
    let buy = gw
        .call_function(m.token, &W2eCall::BuyNft { token_id: sold }, Address::from_label(BUYER), 0)
        .map_err(|e| BenchError::BuyFixtureFailed(e.to_string()))?;

    let withdrawn = m.seller_pet(gw)?;
    m.list(gw, withdrawn, opts.listing_price)?;
    let cancel = gw
        .call_function(m.token, &W2eCall::CancelListing { token_id: withdrawn }, seller, 0)
        .map_err(|e| BenchError::Fixture(e.to_string()))?;

    Ok([buy, sell, cancel].iter().map(Cell::from_confirmation_fee).collect())
}

pub fn run_function_gas(registry: &ProfileRegistry, artifacts: &ArtifactSet, opts: &BenchOptions) -> BenchReport {
    let columns: Vec<String> = ["Buy", "Sell", "Cancel"].map(String::from).to_vec();
    let rows = run_lanes(registry, opts, columns.len(), |gw| {
        function_row(gw, artifacts, opts).unwrap_or_else(|e| vec![Cell::Error(e.to_string()); 3])
    });
    BenchReport { kind: ReportKind::FunctionGas, columns, rows, meta: meta(registry, opts) }
}

fn timed(result: Result<Confirmation, GatewayError>) -> Cell {
    match result {
        Ok(c) => Cell::Latency(c.latency_ms()),
        Err(GatewayError::Timeout { waited_ms, .. }) => Cell::Missing(format!("timeout after {waited_ms} ms")),
        Err(e) => Cell::Error(e.to_string()),
    }
}

fn latency_row(gw: &mut Gateway, artifacts: &ArtifactSet, workload: Workload, opts: &BenchOptions) -> Vec<Cell> {
    let deployer = Address::from_label(DEPLOYER);
    match workload {
        Workload::Deploy => {
            let art = match artifacts.get(TokenStandard::Erc20) {
                Ok(a) => a,
                Err(e) => return vec![Cell::Error(e.to_string()); opts.trials],
            };
            (0..opts.trials)
                .map(|_| {
                    if let Err(e) = gw.align_to_block() {
                        return Cell::Error(e.to_string());
                    }
                    timed(gw.deploy(art, deployer).map(|d| d.confirmation))
                })
                .collect()
        }
        Workload::BuyNft => {
            let buyer_dmd = opts.buyer_dmd.max(opts.listing_price * opts.trials as Dmd);
            let mut m = match Market::setup(gw, artifacts, buyer_dmd) {
                Ok(m) => m,
                Err(e) => return vec![Cell::Error(e.to_string()); opts.trials],
            };
            (0..opts.trials)
                .map(|_| {
                    let id = match m.seller_pet(gw).and_then(|id| m.list(gw, id, opts.listing_price).map(|_| id)) {
                        Ok(id) => id,
                        Err(e) => return Cell::Error(e.to_string()),
                    };
                    if let Err(e) = gw.align_to_block() {
                        return Cell::Error(e.to_string());
                    }
                    timed(gw.call_function(m.token, &W2eCall::BuyNft { token_id: id }, Address::from_label(BUYER), 0))
                })
                .collect()
        }
    }
}

pub fn run_latency(
    registry: &ProfileRegistry,
    artifacts: &ArtifactSet,
    workload: Workload,
    opts: &BenchOptions,
) -> Result<BenchReport, BenchError> {
    if opts.trials == 0 {
        return Err(BenchError::InvalidTrials);
    }
    let kind = match workload {
        Workload::Deploy => ReportKind::DeployLatency,
        Workload::BuyNft => ReportKind::BuyLatency,
    };
    let columns = (1..=opts.trials).map(ordinal).collect();
    let rows = run_lanes(registry, opts, opts.trials, |gw| latency_row(gw, artifacts, workload, opts));
    Ok(BenchReport { kind, columns, rows, meta: meta(registry, opts) })
}
