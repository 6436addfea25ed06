//! Calldata for the W2E contract functions: a 4-byte Keccak selector followed
//! by 32-byte big-endian words, the same layout Solidity uses for static
//! arguments. Both chain backends carry these bytes.

use std::collections::HashMap;
use std::sync::OnceLock;

use sha3::{Digest, Keccak256};
use thiserror::Error;

use crate::reward::WorkoutRecord;
use crate::types::{Address, Dmd, TokenId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbiError {
    #[error("calldata shorter than a selector")]
    Empty,
    #[error("unknown selector 0x{0}")]
    UnknownSelector(String),
    #[error("expected {expected} argument bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("argument {0} does not fit its type")]
    ValueOverflow(usize),
}

/// State-changing W2E functions.
#[derive(Debug, Clone, PartialEq)]
pub enum W2eCall {
    Transfer { to: Address, amount: Dmd },
    Approve { spender: Address, amount: Dmd },
    TransferFrom { owner: Address, to: Address, amount: Dmd },
    MintDmd { to: Address, amount: Dmd },
    /// Payable: the transaction value is the payment.
    BuyDmd,
    MintPet { to: Address, bonus_rate_pct: u32 },
    ApprovePet { approved: Option<Address>, token_id: TokenId },
    TransferPet { from: Address, to: Address, token_id: TokenId },
    ListNft { token_id: TokenId, price: Dmd },
    BuyNft { token_id: TokenId },
    CancelListing { token_id: TokenId },
    GrantReward { user: Address, pet: TokenId, record: WorkoutRecord },
}

/// Read-only W2E functions, answered without a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewCall {
    BalanceOf(Address),
    TotalSupply,
    Allowance { owner: Address, spender: Address },
    OwnerOf(TokenId),
    BonusRateOf(TokenId),
    IsEarnable(Address),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewValue {
    Uint(u128),
    Address(Address),
    Bool(bool),
}

impl ViewValue {
    pub fn as_uint(&self) -> Option<u128> {
        match self {
            ViewValue::Uint(v) => Some(*v),
            _ => None,
        }
    }

    /// 32-byte ABI return word.
    pub fn encode(&self) -> [u8; 32] {
        match self {
            ViewValue::Uint(v) => uint_word(*v),
            ViewValue::Address(a) => address_word(a),
            ViewValue::Bool(b) => uint_word(*b as u128),
        }
    }
}

const SIGNATURES: &[(&str, usize)] = &[
    ("transfer(address,uint256)", 2),
    ("approve(address,uint256)", 2),
    ("transferFrom(address,address,uint256)", 3),
    ("mint(address,uint256)", 2),
    ("buyDmd()", 0),
    ("mintPet(address,uint256)", 2),
    ("approvePet(address,uint256)", 2),
    ("transferPet(address,address,uint256)", 3),
    ("listNft(uint256,uint256)", 2),
    ("buyNft(uint256)", 1),
    ("cancelListing(uint256)", 1),
    ("grantReward(address,uint256,uint256,uint256,uint256,uint256,uint256)", 7),
    ("balanceOf(address)", 1),
    ("totalSupply()", 0),
    ("allowance(address,address)", 2),
    ("ownerOf(uint256)", 1),
    ("bonusRateOf(uint256)", 1),
    ("isEarnable(address)", 1),
];

pub fn selector(signature: &str) -> [u8; 4] {
    let h = Keccak256::digest(signature.as_bytes());
    [h[0], h[1], h[2], h[3]]
}

fn selectors() -> &'static HashMap<[u8; 4], (&'static str, usize)> {
    static MAP: OnceLock<HashMap<[u8; 4], (&'static str, usize)>> = OnceLock::new();
    MAP.get_or_init(|| SIGNATURES.iter().map(|(s, n)| (selector(s), (*s, *n))).collect())
}

fn uint_word(v: u128) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[16..].copy_from_slice(&v.to_be_bytes());
    w
}

fn address_word(a: &Address) -> [u8; 32] {
    let mut w = [0u8; 32];
    w[12..].copy_from_slice(a.as_bytes());
    w
}

fn encode(signature: &str, words: &[[u8; 32]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 32 * words.len());
    out.extend_from_slice(&selector(signature));
    for w in words {
        out.extend_from_slice(w);
    }
    out
}

struct Args<'a> {
    data: &'a [u8],
}

impl Args<'_> {
    fn word(&self, i: usize) -> &[u8] {
        &self.data[i * 32..(i + 1) * 32]
    }

    fn uint(&self, i: usize) -> Result<u128, AbiError> {
        let w = self.word(i);
        if w[..16].iter().any(|b| *b != 0) {
            return Err(AbiError::ValueOverflow(i));
        }
        Ok(u128::from_be_bytes(w[16..].try_into().unwrap()))
    }

    fn u64(&self, i: usize) -> Result<u64, AbiError> {
        u64::try_from(self.uint(i)?).map_err(|_| AbiError::ValueOverflow(i))
    }

    fn u32(&self, i: usize) -> Result<u32, AbiError> {
        u32::try_from(self.uint(i)?).map_err(|_| AbiError::ValueOverflow(i))
    }

    fn address(&self, i: usize) -> Result<Address, AbiError> {
        let w = self.word(i);
        if w[..12].iter().any(|b| *b != 0) {
            return Err(AbiError::ValueOverflow(i));
        }
        Ok(Address::from_slice(&w[12..]).expect("20 bytes"))
    }
}

fn split(data: &[u8]) -> Result<(&'static str, Args<'_>), AbiError> {
    if data.len() < 4 {
        return Err(AbiError::Empty);
    }
    let sel: [u8; 4] = data[..4].try_into().unwrap();
    let (sig, n) = selectors()
        .get(&sel)
        .copied()
        .ok_or_else(|| AbiError::UnknownSelector(hex::encode(sel)))?;
    let body = &data[4..];
    if body.len() != n * 32 {
        return Err(AbiError::BadLength { expected: n * 32, got: body.len() });
    }
    Ok((sig, Args { data: body }))
}

impl W2eCall {
    pub fn signature(&self) -> &'static str {
        match self {
            W2eCall::Transfer { .. } => SIGNATURES[0].0,
            W2eCall::Approve { .. } => SIGNATURES[1].0,
            W2eCall::TransferFrom { .. } => SIGNATURES[2].0,
            W2eCall::MintDmd { .. } => SIGNATURES[3].0,
            W2eCall::BuyDmd => SIGNATURES[4].0,
            W2eCall::MintPet { .. } => SIGNATURES[5].0,
            W2eCall::ApprovePet { .. } => SIGNATURES[6].0,
            W2eCall::TransferPet { .. } => SIGNATURES[7].0,
            W2eCall::ListNft { .. } => SIGNATURES[8].0,
            W2eCall::BuyNft { .. } => SIGNATURES[9].0,
            W2eCall::CancelListing { .. } => SIGNATURES[10].0,
            W2eCall::GrantReward { .. } => SIGNATURES[11].0,
        }
    }

    pub fn name(&self) -> &'static str {
        let sig = self.signature();
        &sig[..sig.find('(').unwrap()]
    }

    pub fn encode(&self) -> Vec<u8> {
        let sig = self.signature();
        match self {
            W2eCall::Transfer { to, amount } => encode(sig, &[address_word(to), uint_word(*amount)]),
            W2eCall::Approve { spender, amount } => encode(sig, &[address_word(spender), uint_word(*amount)]),
            W2eCall::TransferFrom { owner, to, amount } => {
                encode(sig, &[address_word(owner), address_word(to), uint_word(*amount)])
            }
            W2eCall::MintDmd { to, amount } => encode(sig, &[address_word(to), uint_word(*amount)]),
            W2eCall::BuyDmd => encode(sig, &[]),
            W2eCall::MintPet { to, bonus_rate_pct } => {
                encode(sig, &[address_word(to), uint_word(*bonus_rate_pct as u128)])
            }
            W2eCall::ApprovePet { approved, token_id } => encode(
                sig,
                &[address_word(&approved.unwrap_or(Address::ZERO)), uint_word(*token_id as u128)],
            ),
            W2eCall::TransferPet { from, to, token_id } => {
                encode(sig, &[address_word(from), address_word(to), uint_word(*token_id as u128)])
            }
            W2eCall::ListNft { token_id, price } => encode(sig, &[uint_word(*token_id as u128), uint_word(*price)]),
            W2eCall::BuyNft { token_id } => encode(sig, &[uint_word(*token_id as u128)]),
            W2eCall::CancelListing { token_id } => encode(sig, &[uint_word(*token_id as u128)]),
            W2eCall::GrantReward { user, pet, record } => encode(
                sig,
                &[
                    address_word(user),
                    uint_word(*pet as u128),
                    uint_word(record.duration_sec as u128),
                    uint_word(record.distance_m as u128),
                    // f64 bit pattern keeps the claimed speed exact
                    uint_word(record.avg_speed_kmh.to_bits() as u128),
                    uint_word(record.steps as u128),
                    uint_word(record.started_at as u128),
                ],
            ),
        }
    }

    pub fn decode(data: &[u8]) -> Result<Self, AbiError> {
        let (sig, a) = split(data)?;
        let call = match sig {
            "transfer(address,uint256)" => W2eCall::Transfer { to: a.address(0)?, amount: a.uint(1)? },
            "approve(address,uint256)" => W2eCall::Approve { spender: a.address(0)?, amount: a.uint(1)? },
            "transferFrom(address,address,uint256)" => W2eCall::TransferFrom {
                owner: a.address(0)?,
                to: a.address(1)?,
                amount: a.uint(2)?,
            },
            "mint(address,uint256)" => W2eCall::MintDmd { to: a.address(0)?, amount: a.uint(1)? },
            "buyDmd()" => W2eCall::BuyDmd,
            "mintPet(address,uint256)" => W2eCall::MintPet { to: a.address(0)?, bonus_rate_pct: a.u32(1)? },
            "approvePet(address,uint256)" => {
                let approved = a.address(0)?;
                W2eCall::ApprovePet {
                    approved: (!approved.is_zero()).then_some(approved),
                    token_id: a.u64(1)?,
                }
            }
            "transferPet(address,address,uint256)" => W2eCall::TransferPet {
                from: a.address(0)?,
                to: a.address(1)?,
                token_id: a.u64(2)?,
            },
            "listNft(uint256,uint256)" => W2eCall::ListNft { token_id: a.u64(0)?, price: a.uint(1)? },
            "buyNft(uint256)" => W2eCall::BuyNft { token_id: a.u64(0)? },
            "cancelListing(uint256)" => W2eCall::CancelListing { token_id: a.u64(0)? },
            "grantReward(address,uint256,uint256,uint256,uint256,uint256,uint256)" => W2eCall::GrantReward {
                user: a.address(0)?,
                pet: a.u64(1)?,
                record: WorkoutRecord {
                    duration_sec: a.u64(2)?,
                    distance_m: a.u64(3)?,
                    avg_speed_kmh: f64::from_bits(a.u64(4)?),
                    steps: a.u64(5)?,
                    started_at: a.u64(6)?,
                },
            },
            other => return Err(AbiError::UnknownSelector(other.to_string())),
        };
        Ok(call)
    }
}

impl ViewCall {
    pub fn encode(&self) -> Vec<u8> {
        match self {
            ViewCall::BalanceOf(a) => encode("balanceOf(address)", &[address_word(a)]),
            ViewCall::TotalSupply => encode("totalSupply()", &[]),
            ViewCall::Allowance { owner, spender } => {
                encode("allowance(address,address)", &[address_word(owner), address_word(spender)])
            }
            ViewCall::OwnerOf(id) => encode("ownerOf(uint256)", &[uint_word(*id as u128)]),
            ViewCall::BonusRateOf(id) => encode("bonusRateOf(uint256)", &[uint_word(*id as u128)]),
            ViewCall::IsEarnable(a) => encode("isEarnable(address)", &[address_word(a)]),
        }
    }

    pub fn decode(data: &[u8]) -> Result<Self, AbiError> {
        let (sig, a) = split(data)?;
        Ok(match sig {
            "balanceOf(address)" => ViewCall::BalanceOf(a.address(0)?),
            "totalSupply()" => ViewCall::TotalSupply,
            "allowance(address,address)" => ViewCall::Allowance { owner: a.address(0)?, spender: a.address(1)? },
            "ownerOf(uint256)" => ViewCall::OwnerOf(a.u64(0)?),
            "bonusRateOf(uint256)" => ViewCall::BonusRateOf(a.u64(0)?),
            "isEarnable(address)" => ViewCall::IsEarnable(a.address(0)?),
            other => return Err(AbiError::UnknownSelector(other.to_string())),
        })
    }

    /// Decodes the 32-byte return word for this view.
    pub fn decode_return(&self, data: &[u8]) -> Result<ViewValue, AbiError> {
        if data.len() < 32 {
            return Err(AbiError::BadLength { expected: 32, got: data.len() });
        }
        let a = Args { data: &data[..32] };
        Ok(match self {
            ViewCall::OwnerOf(_) => ViewValue::Address(a.address(0)?),
            ViewCall::IsEarnable(_) => ViewValue::Bool(a.uint(0)? != 0),
            _ => ViewValue::Uint(a.uint(0)?),
        })
    }
}
