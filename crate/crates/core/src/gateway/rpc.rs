use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::abi::{ViewCall, ViewValue};
use crate::events::ChainEvent;
use crate::gateway::{ChainBackend, GatewayError, TxSigner};
use crate::sim::{fee_gwei, Receipt, Transaction, TxStatus};
use crate::types::{Address, Gwei, TxHash, Wei};

/// JSON-RPC 2.0 over HTTP. Receipts are timestamped with the local wall
/// clock; log decoding is left to external tooling.
pub struct RpcBackend {
    url: String,
    agent: ureq::Agent,
    signer: Box<dyn TxSigner>,
    next_id: AtomicU64,
}

fn quantity(v: &Value, field: &str) -> Result<u128, GatewayError> {
    let s = v
        .as_str()
        .ok_or_else(|| GatewayError::BadResponse(format!("{field}: expected hex quantity, got {v}")))?;
    let digits = s.strip_prefix("0x").unwrap_or(s);
    if digits.is_empty() {
        return Ok(0);
    }
    u128::from_str_radix(digits, 16).map_err(|e| GatewayError::BadResponse(format!("{field}: {e}")))
}

fn quantity_u64(v: &Value, field: &str) -> Result<u64, GatewayError> {
    u64::try_from(quantity(v, field)?).map_err(|_| GatewayError::BadResponse(format!("{field}: out of range")))
}

fn data_bytes(v: &Value, field: &str) -> Result<Vec<u8>, GatewayError> {
    let s = v.as_str().ok_or_else(|| GatewayError::BadResponse(format!("{field}: expected hex data")))?;
    hex::decode(s.strip_prefix("0x").unwrap_or(s)).map_err(|e| GatewayError::BadResponse(format!("{field}: {e}")))
}

fn wall_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl RpcBackend {
    pub fn new(url: impl Into<String>, timeout_ms: u64, signer: Box<dyn TxSigner>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        RpcBackend { url: url.into(), agent, signer, next_id: AtomicU64::new(1) }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn request(&self, method: &str, params: Value) -> Result<Value, GatewayError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let body = json!({"jsonrpc": "2.0", "id": id, "method": method, "params": params});
        tracing::trace!(method, id, "rpc request");
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| GatewayError::EndpointUnreachable(format!("{}: {e}", self.url)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GatewayError::BadResponse(format!("http status {status}")));
        }
        let reply: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        if let Some(err) = reply.get("error") {
            return Err(GatewayError::Rpc {
                code: err.get("code").and_then(Value::as_i64).unwrap_or(0),
                message: err.get("message").and_then(Value::as_str).unwrap_or("").to_string(),
            });
        }
        reply
            .get("result")
            .cloned()
            .ok_or_else(|| GatewayError::BadResponse("response has neither result nor error".into()))
    }

    fn parse_receipt(&self, hash: &TxHash, v: &Value) -> Result<Receipt, GatewayError> {
        let gas_used = quantity_u64(&v["gasUsed"], "gasUsed")?;
        let price_wei = match v.get("effectiveGasPrice") {
            Some(p) if !p.is_null() => quantity(p, "effectiveGasPrice")?,
            _ => self.gas_price()?.as_wei(),
        };
        let gas_price = Gwei::from_wei(price_wei);
        let status = match v.get("status") {
            Some(s) if !s.is_null() && quantity(s, "status")? == 0 => TxStatus::Reverted,
            _ => TxStatus::Success,
        };
        let contract_address = match v.get("contractAddress") {
            Some(Value::String(s)) => Some(s.parse().map_err(|e| GatewayError::BadResponse(format!("{e}")))?),
            _ => None,
        };
        let now = wall_ms();
        Ok(Receipt {
            tx_hash: *hash,
            block_number: quantity_u64(&v["blockNumber"], "blockNumber")?,
            status,
            gas_used,
            gas_price,
            fee: fee_gwei(gas_used, gas_price),
            // the endpoint reports no timing; the gateway measures it
            submitted_at_ms: now,
            confirmed_at_ms: now,
            contract_address,
            revert_reason: (status == TxStatus::Reverted).then(|| "reverted".to_string()),
            logs: Vec::new(),
        })
    }
}

impl ChainBackend for RpcBackend {
    fn chain_id(&self) -> Result<u64, GatewayError> {
        quantity_u64(&self.request("eth_chainId", json!([]))?, "chainId")
    }

    fn gas_price(&self) -> Result<Gwei, GatewayError> {
        Ok(Gwei::from_wei(quantity(&self.request("eth_gasPrice", json!([]))?, "gasPrice")?))
    }

    fn native_balance(&self, who: &Address) -> Result<Wei, GatewayError> {
        quantity(&self.request("eth_getBalance", json!([who.to_hex(), "latest"]))?, "balance")
    }

    fn next_nonce(&self, who: &Address) -> Result<u64, GatewayError> {
        quantity_u64(&self.request("eth_getTransactionCount", json!([who.to_hex(), "pending"]))?, "nonce")
    }

    fn fetch_receipt(&self, hash: &TxHash) -> Result<Option<Receipt>, GatewayError> {
        let v = self.request("eth_getTransactionReceipt", json!([hash.to_hex()]))?;
        if v.is_null() {
            return Ok(None);
        }
        self.parse_receipt(hash, &v).map(Some)
    }

    fn call_view(&self, contract: &Address, call: &ViewCall) -> Result<ViewValue, GatewayError> {
        let data = format!("0x{}", hex::encode(call.encode()));
        let v = self.request("eth_call", json!([{"to": contract.to_hex(), "data": data}, "latest"]))?;
        Ok(call.decode_return(&data_bytes(&v, "eth_call")?)?)
    }

    fn head_block(&self) -> Result<u64, GatewayError> {
        quantity_u64(&self.request("eth_blockNumber", json!([]))?, "blockNumber")
    }

    fn events(&self, _from_block: u64, _to_block: u64) -> Result<Vec<ChainEvent>, GatewayError> {
        Err(GatewayError::Unsupported("event streaming over rpc"))
    }

    fn send_transaction(&mut self, tx: &Transaction) -> Result<TxHash, GatewayError> {
        let chain_id = self.chain_id()?;
        let price = self.gas_price()?;
        let raw = self.signer.sign(tx, chain_id, price)?;
        let v = self.request("eth_sendRawTransaction", json!([format!("0x{}", hex::encode(raw))]))?;
        let s = v.as_str().ok_or_else(|| GatewayError::BadResponse("tx hash is not a string".into()))?;
        s.parse().map_err(|e| GatewayError::BadResponse(format!("tx hash: {e}")))
    }

    fn now_ms(&self) -> u64 {
        wall_ms()
    }

    fn wait_ms(&mut self, ms: u64) -> Result<(), GatewayError> {
        std::thread::sleep(Duration::from_millis(ms));
        Ok(())
    }
}
