//! Python bindings. Addresses cross the boundary as `0x` hex strings; any
//! other string is treated as a label and hashed to an address.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use w2e_core::bench::{self, BenchOptions, BenchReport, Format, PublishedReference, ReportKind, Workload};
use w2e_core::gateway::{builtin_artifacts, ProfileRegistry};
use w2e_core::reward::{RewardPolicy, WorkoutRecord};
use w2e_core::sim::{fee_gwei, intrinsic_gas};
use w2e_core::token::Economy as CoreEconomy;
use w2e_core::types::{Address, Dmd, Gwei, TokenId};
use w2e_core::wallet;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn addr(s: &str) -> Address {
    s.parse().unwrap_or_else(|_| Address::from_label(s))
}

/// Address for a hex string or label.
#[pyfunction]
fn address(label: &str) -> String {
    addr(label).to_string()
}

#[pyfunction]
fn generate_mnemonic(entropy: &[u8]) -> PyResult<String> {
    Ok(wallet::generate_mnemonic(entropy).map_err(err)?.phrase())
}

/// Returns `(valid, reason)`.
#[pyfunction]
fn validate_mnemonic(phrase: &str) -> (bool, Option<String>) {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    let v = wallet::validate_mnemonic(&words);
    (v.valid, v.reason.map(|r| r.to_string()))
}

#[pyfunction]
#[pyo3(signature = (phrase, passphrase = ""))]
fn mnemonic_to_seed<'py>(py: Python<'py>, phrase: &str, passphrase: &str) -> PyResult<Bound<'py, PyBytes>> {
    let words: Vec<&str> = phrase.split_whitespace().collect();
    let seed = wallet::mnemonic_to_seed(&words, passphrase).map_err(err)?;
    Ok(PyBytes::new(py, &seed))
}

#[pyfunction]
#[pyo3(signature = (seed, index = 0))]
fn derive_address(seed: &[u8], index: u32) -> PyResult<String> {
    let seed: [u8; 64] = seed.try_into().map_err(|_| err("seed must be 64 bytes"))?;
    Ok(wallet::derive_account(&seed, index).address.to_string())
}

#[pyfunction]
fn mean(samples: Vec<u64>) -> PyResult<f64> {
    bench::mean(&samples).map_err(err)
}

/// Fee in Gwei for `gas` at a decimal Gwei price, as a decimal string.
#[pyfunction]
fn fee(gas: u64, gas_price_gwei: &str) -> PyResult<String> {
    let price: Gwei = gas_price_gwei.parse().map_err(err)?;
    Ok(fee_gwei(gas, price).to_string())
}

#[pyfunction]
#[pyo3(signature = (payload, is_create = false))]
fn intrinsic(payload: &[u8], is_create: bool) -> u64 {
    intrinsic_gas(payload, is_create, payload.len())
}

/// Returns `(base_dmd, total_dmd)`.
#[pyfunction]
#[pyo3(signature = (duration_sec, distance_m, bonus_rate_pct = 100))]
fn compute_reward(duration_sec: u64, distance_m: u64, bonus_rate_pct: u32) -> PyResult<(Dmd, Dmd)> {
    let record = WorkoutRecord::from_distance(duration_sec, distance_m, 0, 0);
    let r = RewardPolicy::default().compute_reward(&record, bonus_rate_pct).map_err(err)?;
    Ok((r.base_dmd, r.total_dmd))
}

#[pyfunction]
fn network_names() -> Vec<String> {
    ProfileRegistry::builtin().names().into_iter().map(String::from).collect()
}

fn kind_of(slug: &str) -> PyResult<ReportKind> {
    match slug {
        "deploy-gas" => Ok(ReportKind::DeployGas),
        "exec-gas" => Ok(ReportKind::FunctionGas),
        "deploy-time" => Ok(ReportKind::DeployLatency),
        "exec-time" => Ok(ReportKind::BuyLatency),
        other => Err(err(format!("unknown report kind {other}"))),
    }
}

/// Runs one benchmark on the shipped simulator profiles and renders it.
#[pyfunction]
#[pyo3(signature = (kind, trials = 5, seed = 0, format = "csv", compare = false))]
fn run_bench(py: Python<'_>, kind: &str, trials: usize, seed: u64, format: &str, compare: bool) -> PyResult<String> {
    let kind = kind_of(kind)?;
    let format: Format = format.parse().map_err(err)?;
    let report = py.detach(|| -> Result<BenchReport, bench::BenchError> {
        let reg = ProfileRegistry::builtin();
        let art = builtin_artifacts();
        let opts = BenchOptions { seed, trials, ..Default::default() };
        Ok(match kind {
            ReportKind::DeployGas => bench::run_deploy_gas(&reg, &art, &opts),
            ReportKind::FunctionGas => bench::run_function_gas(&reg, &art, &opts),
            ReportKind::DeployLatency => bench::run_latency(&reg, &art, Workload::Deploy, &opts)?,
            ReportKind::BuyLatency => bench::run_latency(&reg, &art, Workload::BuyNft, &opts)?,
        })
    });
    let published = PublishedReference::builtin();
    Ok(bench::render(&report.map_err(err)?, format, compare.then_some(&published)))
}

/// In-memory token suite: DMD ledger, pet NFTs and the marketplace.
#[pyclass]
struct Economy {
    inner: CoreEconomy,
}

#[pymethods]
impl Economy {
    #[new]
    #[pyo3(signature = (operator, address = "w2e/economy"))]
    fn new(operator: &str, address: &str) -> Self {
        Economy { inner: CoreEconomy::new(addr(address), addr(operator)) }
    }

    #[getter]
    fn address(&self) -> String {
        self.inner.address().to_string()
    }

    #[getter]
    fn operator(&self) -> String {
        self.inner.operator().to_string()
    }

    fn balance_of(&self, who: &str) -> Dmd {
        self.inner.balance_of(&addr(who))
    }

    fn total_supply(&self) -> Dmd {
        self.inner.total_supply()
    }

    fn owner_of(&self, token_id: TokenId) -> Option<String> {
        self.inner.owner_of(token_id).map(|a| a.to_string())
    }

    fn transfer(&mut self, sender: &str, to: &str, amount: Dmd) -> PyResult<()> {
        self.inner.transfer(addr(sender), addr(to), amount).map_err(err)
    }

    fn mint_dmd(&mut self, caller: &str, to: &str, amount: Dmd) -> PyResult<Dmd> {
        self.inner.mint_dmd(addr(caller), addr(to), amount).map_err(err)
    }

    fn mint_pet(&mut self, caller: &str, to: &str, bonus_rate_pct: u32) -> PyResult<TokenId> {
        self.inner.mint_pet(addr(caller), addr(to), bonus_rate_pct).map_err(err)
    }

    /// Approves the marketplace (this contract) for `token_id`.
    fn approve_market(&mut self, caller: &str, token_id: TokenId) -> PyResult<()> {
        let market = self.inner.address();
        self.inner.approve_pet(addr(caller), token_id, Some(market)).map_err(err)
    }

    fn list_nft(&mut self, seller: &str, token_id: TokenId, price_dmd: Dmd) -> PyResult<()> {
        self.inner.list_nft(addr(seller), token_id, price_dmd).map(|_| ()).map_err(err)
    }

    fn buy_nft(&mut self, buyer: &str, token_id: TokenId) -> PyResult<()> {
        self.inner.buy_nft(addr(buyer), token_id).map_err(err)
    }

    fn cancel_listing(&mut self, seller: &str, token_id: TokenId) -> PyResult<()> {
        self.inner.cancel_listing(addr(seller), token_id).map_err(err)
    }

    /// `[(token_id, seller, price)]` for listings that can still be bought.
    fn listings(&self) -> Vec<(TokenId, String, Dmd)> {
        self.inner.live_listings().map(|(id, l)| (id, l.seller.to_string(), l.price_dmd)).collect()
    }

    /// Grants a workout reward; returns the DMD minted.
    #[pyo3(signature = (user, pet, duration_sec, distance_m, steps = 0, started_at = 0))]
    fn grant_reward(
        &mut self,
        user: &str,
        pet: TokenId,
        duration_sec: u64,
        distance_m: u64,
        steps: u64,
        started_at: u64,
    ) -> PyResult<Dmd> {
        let record = WorkoutRecord::from_distance(duration_sec, distance_m, steps, started_at);
        let operator = self.inner.operator();
        let g = RewardPolicy::default()
            .grant_reward(&mut self.inner, operator, addr(user), pet, record)
            .map_err(err)?;
        Ok(g.total_dmd)
    }

    fn state_digest(&self) -> String {
        self.inner.state_digest().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[pymodule]
fn w2e(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(address, m)?)?;
    m.add_function(wrap_pyfunction!(generate_mnemonic, m)?)?;
    m.add_function(wrap_pyfunction!(validate_mnemonic, m)?)?;
    m.add_function(wrap_pyfunction!(mnemonic_to_seed, m)?)?;
    m.add_function(wrap_pyfunction!(derive_address, m)?)?;
    m.add_function(wrap_pyfunction!(mean, m)?)?;
    m.add_function(wrap_pyfunction!(fee, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic, m)?)?;
    m.add_function(wrap_pyfunction!(compute_reward, m)?)?;
    m.add_function(wrap_pyfunction!(network_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_class::<Economy>()?;
    Ok(())
}
