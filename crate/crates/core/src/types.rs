//! Identity and unit types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Native-coin amount in wei.
pub type Wei = u128;

/// DMD amount in integer base units (the token has no on-ledger decimals).
pub type Dmd = u128;

/// Pet NFT identifier.
pub type TokenId = u64;

/// Gas units.
pub type Gas = u64;

pub const WEI_PER_GWEI: u128 = 1_000_000_000;
pub const WEI_PER_NATIVE: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("invalid hex: {0}")]
    Hex(String),
    #[error("expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("invalid decimal amount: {0}")]
    Decimal(String),
}

fn strip_0x(s: &str) -> &str {
    s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s)
}

macro_rules! fixed_bytes {
    ($name:ident, $len:expr) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_slice(bytes: &[u8]) -> Result<Self, ParseError> {
                let arr: [u8; $len] = bytes.try_into().map_err(|_| ParseError::Length {
                    expected: $len,
                    got: bytes.len(),
                })?;
                Ok(Self(arr))
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                format!("0x{}", hex::encode(self.0))
            }
        }

        impl FromStr for $name {
            type Err = ParseError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let raw = hex::decode(strip_0x(s.trim())).map_err(|e| ParseError::Hex(e.to_string()))?;
                Self::from_slice(&raw)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(Address, 20);
fixed_bytes!(TxHash, 32);

impl Address {
    pub const ZERO: Address = Address([0u8; 20]);

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Deterministic address from an arbitrary label; handy for fixtures.
    pub fn from_label(label: &str) -> Self {
        let digest = Sha256::digest(label.as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }
}

/// A Gwei quantity held at wei resolution, so gas prices such as 2.5 Gwei and
/// fees such as 0.05 Gwei are exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Gwei {
    wei: u128,
}

impl Gwei {
    pub const ZERO: Gwei = Gwei { wei: 0 };

    pub const fn from_wei(wei: u128) -> Self {
        Gwei { wei }
    }

    pub const fn whole(gwei: u128) -> Self {
        Gwei { wei: gwei * WEI_PER_GWEI }
    }

    pub fn as_wei(&self) -> u128 {
        self.wei
    }

    pub fn as_f64(&self) -> f64 {
        self.wei as f64 / WEI_PER_GWEI as f64
    }

    pub fn checked_mul(self, gas: u64) -> Option<Gwei> {
        self.wei.checked_mul(gas as u128).map(Gwei::from_wei)
    }

    /// Fixed-point rendering with `decimals` places, rounding half up.
    pub fn to_fixed(&self, decimals: u32) -> String {
        let decimals = decimals.min(9);
        let unit = 10u128.pow(9 - decimals);
        let scaled = (self.wei + unit / 2) / unit;
        if decimals == 0 {
            return scaled.to_string();
        }
        let div = 10u128.pow(decimals);
        format!("{}.{:0width$}", scaled / div, scaled % div, width = decimals as usize)
    }
}

impl FromStr for Gwei {
    type Err = ParseError;

    /// Parses a decimal Gwei amount with at most 9 fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ParseError::Decimal(s.to_string());
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if frac_part.len() > 9
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let int: u128 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        let mut frac: u128 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
        frac *= 10u128.pow(9 - frac_part.len() as u32);
        int.checked_mul(WEI_PER_GWEI)
            .and_then(|w| w.checked_add(frac))
            .map(Gwei::from_wei)
            .ok_or_else(bad)
    }
}

impl fmt::Display for Gwei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let full = self.to_fixed(9);
        let trimmed = full.trim_end_matches('0').trim_end_matches('.');
        f.write_str(trimmed)
    }
}

impl fmt::Debug for Gwei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gwei({self})")
    }
}

impl Serialize for Gwei {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Gwei {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serialize helpers for u128 values (JSON/TOML integers cap at 64 bits).
pub mod u128_str {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Token standard of a deployable contract artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenStandard {
    #[serde(rename = "ERC20")]
    Erc20,
    #[serde(rename = "ERC721")]
    Erc721,
    #[serde(rename = "ERC1155")]
    Erc1155,
    #[serde(rename = "ERC777")]
    Erc777,
}

impl TokenStandard {
    pub const ALL: [TokenStandard; 4] = [
        TokenStandard::Erc20,
        TokenStandard::Erc721,
        TokenStandard::Erc1155,
        TokenStandard::Erc777,
    ];

    /// Column label, e.g. `ERC-20`.
    pub fn label(&self) -> &'static str {
        match self {
            TokenStandard::Erc20 => "ERC-20",
            TokenStandard::Erc721 => "ERC-721",
            TokenStandard::Erc1155 => "ERC-1155",
            TokenStandard::Erc777 => "ERC-777",
        }
    }

    /// Whether the simulator runs W2E semantics for this standard.
    pub fn has_w2e_semantics(&self) -> bool {
        matches!(self, TokenStandard::Erc20 | TokenStandard::Erc721)
    }
}

impl FromStr for TokenStandard {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "ERC20" => Ok(TokenStandard::Erc20),
            "ERC721" => Ok(TokenStandard::Erc721),
            "ERC1155" => Ok(TokenStandard::Erc1155),
            "ERC777" => Ok(TokenStandard::Erc777),
            _ => Err(format!("unknown token standard {s:?}")),
        }
    }
}

pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(sha256(&[data]))
}
