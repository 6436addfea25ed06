use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

use w2e_core::abi::{ViewCall, ViewValue, W2eCall};
use w2e_core::gateway::{ContractArtifact, Gateway, GatewayError, PresignedQueue, ProfileRegistry};
use w2e_core::types::{Address, Gwei};

type Handler = dyn Fn(&str, &Value) -> Reply + Send + Sync;

enum Reply {
    Result(Value),
    Error(i64, &'static str),
    Http(u16),
}

/// Minimal keep-alive HTTP/1.1 JSON-RPC endpoint.
struct MockNode {
    url: String,
    calls: Arc<Mutex<Vec<String>>>,
}

impl MockNode {
    fn start(handler: impl Fn(&str, &Value) -> Reply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let calls = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let log = Arc::clone(&calls);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { return };
                let (h, l) = (Arc::clone(&handler), Arc::clone(&log));
                std::thread::spawn(move || serve(stream, &*h, &l));
            }
        });
        MockNode { url, calls }
    }

    fn methods(&self) -> Vec<String> {
        self.calls.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<String>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut len = 0usize;
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        loop {
            line.clear();
            reader.read_line(&mut line).unwrap();
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body).unwrap();
        let req: Value = serde_json::from_slice(&body).unwrap();
        let method = req["method"].as_str().unwrap().to_string();
        log.lock().unwrap().push(method.clone());
        let (status, payload) = match handler(&method, &req["params"]) {
            Reply::Result(v) => (200, json!({"jsonrpc": "2.0", "id": req["id"], "result": v}).to_string()),
            Reply::Error(code, msg) => {
                (200, json!({"jsonrpc": "2.0", "id": req["id"], "error": {"code": code, "message": msg}}).to_string())
            }
            Reply::Http(code) => (code, String::from("oops")),
        };
        let head = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
            payload.len()
        );
        if out.write_all(head.as_bytes()).and_then(|_| out.write_all(payload.as_bytes())).is_err() {
            return;
        }
    }
}

fn gateway(url: &str, timeout_ms: u64, blobs: usize) -> Gateway {
    let text = format!(
        "[[network]]\nname = \"Local node\"\nkind = \"rpc\"\nendpoint_url = \"{url}\"\nchain_id = 1337\n\
         poll_interval_ms = 5\ntimeout_ms = {timeout_ms}\n"
    );
    let reg = ProfileRegistry::from_toml_str(&text).unwrap();
    let signer = PresignedQueue::new((0..blobs).map(|i| vec![0xf8, i as u8]));
    Gateway::connect_rpc(reg.get("Local node").unwrap(), Box::new(signer)).unwrap()
}

const HASH: &str = "0x1111111111111111111111111111111111111111111111111111111111111111";
const CONTRACT: &str = "0x2222222222222222222222222222222222222222";

fn chain_basics(method: &str) -> Option<Reply> {
    Some(Reply::Result(match method {
        "eth_chainId" => json!("0x539"),
        "eth_gasPrice" => json!("0x3b9aca00"),
        "eth_getTransactionCount" => json!("0x7"),
        "eth_sendRawTransaction" => json!(HASH),
        "eth_blockNumber" => json!("0x2a"),
        _ => return None,
    }))
}

fn artifact() -> ContractArtifact {
    let json = json!({"name": "DmdToken", "standard": "ERC20", "bytecode_hex": "0x6080604052", "abi": []});
    ContractArtifact::from_json(&json.to_string(), "inline").unwrap()
}

#[test]
fn deploy_polls_until_receipt() {
    let polls = Arc::new(Mutex::new(0));
    let p = Arc::clone(&polls);
    let node = MockNode::start(move |m, params| {
        if let Some(r) = chain_basics(m) {
            return r;
        }
        assert_eq!(m, "eth_getTransactionReceipt");
        assert_eq!(params[0], HASH);
        let mut n = p.lock().unwrap();
        *n += 1;
        if *n < 3 {
            return Reply::Result(Value::Null);
        }
        Reply::Result(json!({
            "gasUsed": "0x124f80", "effectiveGasPrice": "0x77359400", "status": "0x1",
            "blockNumber": "0x10", "contractAddress": CONTRACT,
        }))
    });
    let mut gw = gateway(&node.url, 10_000, 1);
    let d = gw.deploy(&artifact(), Address::from_label("deployer")).unwrap();
    assert_eq!(d.contract, CONTRACT.parse().unwrap());
    let r = &d.confirmation.receipt;
    assert_eq!(r.gas_used, 1_200_000);
    assert_eq!(r.gas_price, Gwei::whole(2));
    assert_eq!(r.fee, Gwei::whole(2_400_000));
    assert_eq!(r.block_number, 16);
    assert_eq!(*polls.lock().unwrap(), 3);
    assert!(node.methods().contains(&"eth_sendRawTransaction".to_string()));
    assert_eq!(gw.head_block().unwrap(), 42);
}

#[test]
fn missing_effective_price_falls_back_to_gas_price() {
    let node = MockNode::start(|m, _| {
        chain_basics(m).unwrap_or_else(|| {
            Reply::Result(json!({"gasUsed": "0x5208", "status": "0x1", "blockNumber": "0x1", "contractAddress": null}))
        })
    });
    let mut gw = gateway(&node.url, 10_000, 1);
    let to = Address::from_label("token");
    let c = gw.call_function(to, &W2eCall::Transfer { to, amount: 1 }, Address::from_label("a"), 0).unwrap();
    assert_eq!(c.receipt.fee, Gwei::whole(21_000));
}

#[test]
fn failed_status_is_a_revert() {
    let node = MockNode::start(|m, _| {
        chain_basics(m)
            .unwrap_or_else(|| Reply::Result(json!({"gasUsed": "0x1", "status": "0x0", "blockNumber": "0x1"})))
    });
    let mut gw = gateway(&node.url, 10_000, 1);
    let to = Address::from_label("token");
    let err = gw.call_function(to, &W2eCall::BuyNft { token_id: 1 }, to, 0).unwrap_err();
    assert!(matches!(err, GatewayError::Reverted { ref reason, .. } if reason == "reverted"), "{err:?}");
}

#[test]
fn rpc_errors_and_bad_http_are_distinguished() {
    let node = MockNode::start(|m, _| match m {
        "eth_getBalance" => Reply::Error(-32000, "header not found"),
        _ => Reply::Http(500),
    });
    let gw = gateway(&node.url, 10_000, 0);
    let who = Address::from_label("a");
    match gw.get_balance(who, None) {
        Err(GatewayError::Rpc { code: -32000, message }) => assert_eq!(message, "header not found"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(gw.head_block(), Err(GatewayError::BadResponse(_))));
}

#[test]
fn unreachable_endpoint() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let gw = gateway(&format!("http://127.0.0.1:{port}"), 500, 0);
    assert!(matches!(gw.head_block(), Err(GatewayError::EndpointUnreachable(_))));
}

#[test]
fn receipt_timeout() {
    let node = MockNode::start(|m, _| chain_basics(m).unwrap_or(Reply::Result(Value::Null)));
    let mut gw = gateway(&node.url, 60, 1);
    let err = gw.deploy(&artifact(), Address::from_label("d")).unwrap_err();
    assert!(matches!(err, GatewayError::Timeout { waited_ms, .. } if waited_ms >= 60), "{err:?}");
}

#[test]
fn empty_signer_queue_fails_before_sending() {
    let node = MockNode::start(|m, _| chain_basics(m).unwrap_or(Reply::Result(Value::Null)));
    let mut gw = gateway(&node.url, 1000, 0);
    assert!(matches!(gw.deploy(&artifact(), Address::from_label("d")), Err(GatewayError::Signer(_))));
    assert!(!node.methods().contains(&"eth_sendRawTransaction".to_string()));
}

#[test]
fn view_calls_decode_words() {
    let node = MockNode::start(|m, params| {
        assert_eq!(m, "eth_call");
        let data = params[0]["data"].as_str().unwrap();
        assert!(data.starts_with("0x70a08231"), "balanceOf selector, got {data}");
        Reply::Result(json!(format!("0x{:064x}", 1234)))
    });
    let gw = gateway(&node.url, 1000, 0);
    let token: Address = CONTRACT.parse().unwrap();
    let v = gw.read(token, &ViewCall::BalanceOf(Address::from_label("a"))).unwrap();
    assert_eq!(v, ViewValue::Uint(1234));
}
