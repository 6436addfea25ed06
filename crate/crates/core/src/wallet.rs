//! BIP39 mnemonics and simulator account derivation.
//!
//! Mnemonic encoding, validation and seed stretching follow BIP39 with the
//! English word list. Account addresses are a simulator-local derivation
//! (`SHA-256(seed ‖ index_be32)[..20]`); real key material for live networks
//! lives behind the gateway's signer boundary.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256, Sha512};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::types::{sha256, Address};

const WORDLIST_TEXT: &str = include_str!("../data/bip39-english.txt");

/// SHA-256 of the shipped word list file.
pub const WORDLIST_SHA256: &str = "2f5eed53a4727b4bf8880d8f3f199efc90e58503646d9ff8eff3a2ed3b24dbda";

const PBKDF2_ROUNDS: u32 = 2048;

pub const VALID_ENTROPY_BYTES: [usize; 5] = [16, 20, 24, 28, 32];
pub const VALID_WORD_COUNTS: [usize; 5] = [12, 15, 18, 21, 24];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WalletError {
    #[error("entropy must be 16, 20, 24, 28 or 32 bytes, got {0}")]
    InvalidEntropyLength(usize),
    #[error("invalid mnemonic: {0}")]
    InvalidMnemonic(InvalidReason),
    #[error("word count must be 12, 15, 18, 21 or 24, got {0}")]
    InvalidWordCount(usize),
}

/// Why a phrase failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvalidReason {
    BadWordCount(usize),
    UnknownWord { position: usize, word: String },
    ChecksumMismatch,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::BadWordCount(n) => write!(f, "unsupported word count {n}"),
            InvalidReason::UnknownWord { position, word } => write!(f, "unknown word {word:?} at position {position}"),
            InvalidReason::ChecksumMismatch => f.write_str("checksum mismatch"),
        }
    }
}

struct Wordlist {
    words: Vec<&'static str>,
    index: HashMap<&'static str, u16>,
}

fn wordlist() -> &'static Wordlist {
    static LIST: OnceLock<Wordlist> = OnceLock::new();
    LIST.get_or_init(|| {
        let words: Vec<&'static str> = WORDLIST_TEXT.lines().filter(|l| !l.is_empty()).collect();
        assert_eq!(words.len(), 2048, "word list must hold 2048 entries");
        let index = words.iter().enumerate().map(|(i, w)| (*w, i as u16)).collect();
        Wordlist { words, index }
    })
}

/// The raw shipped word list text, for hashing and auditing.
pub fn wordlist_text() -> &'static str {
    WORDLIST_TEXT
}

pub fn word_at(index: usize) -> Option<&'static str> {
    wordlist().words.get(index).copied()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mnemonic {
    words: Vec<String>,
    entropy: Vec<u8>,
}

impl Mnemonic {
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn entropy(&self) -> &[u8] {
        &self.entropy
    }

    pub fn entropy_bits(&self) -> usize {
        self.entropy.len() * 8
    }

    pub fn phrase(&self) -> String {
        self.words.join(" ")
    }

    /// Parses and checksum-verifies a whitespace separated phrase.
    pub fn parse(phrase: &str) -> Result<Self, WalletError> {
        let words: Vec<&str> = phrase.split_whitespace().collect();
        let entropy = decode_words(&words).map_err(WalletError::InvalidMnemonic)?;
        Ok(Mnemonic { words: words.iter().map(|w| w.to_string()).collect(), entropy })
    }

    pub fn to_seed(&self, passphrase: &str) -> [u8; 64] {
        stretch(&self.phrase(), passphrase)
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.phrase())
    }
}

fn checksum_bits(entropy_len: usize) -> usize {
    entropy_len * 8 / 32
}

/// Encodes entropy ‖ checksum as 11-bit word indices.
pub fn generate_mnemonic(entropy: &[u8]) -> Result<Mnemonic, WalletError> {
    if !VALID_ENTROPY_BYTES.contains(&entropy.len()) {
        return Err(WalletError::InvalidEntropyLength(entropy.len()));
    }
    let hash = Sha256::digest(entropy);
    let cs = checksum_bits(entropy.len());
    let total_bits = entropy.len() * 8 + cs;
    let bit = |i: usize| -> u16 {
        let byte = if i < entropy.len() * 8 { entropy[i / 8] } else { hash[(i - entropy.len() * 8) / 8] };
        let offset = if i < entropy.len() * 8 { i % 8 } else { (i - entropy.len() * 8) % 8 };
        ((byte >> (7 - offset)) & 1) as u16
    };
    let list = wordlist();
    let words = (0..total_bits / 11)
        .map(|w| {
            let idx = (0..11).fold(0u16, |acc, b| (acc << 1) | bit(w * 11 + b));
            list.words[idx as usize].to_string()
        })
        .collect();
    Ok(Mnemonic { words, entropy: entropy.to_vec() })
}

/// Recovers the entropy from a word list, verifying membership and checksum.
pub fn decode_words<S: AsRef<str>>(words: &[S]) -> Result<Vec<u8>, InvalidReason> {
    if !VALID_WORD_COUNTS.contains(&words.len()) {
        return Err(InvalidReason::BadWordCount(words.len()));
    }
    let list = wordlist();
    let mut bits: Vec<bool> = Vec::with_capacity(words.len() * 11);
    for (position, w) in words.iter().enumerate() {
        let w = w.as_ref();
        let idx = *list.index.get(w).ok_or_else(|| InvalidReason::UnknownWord {
            position,
            word: w.to_string(),
        })?;
        bits.extend((0..11).rev().map(|b| (idx >> b) & 1 == 1));
    }
    let total = bits.len();
    let ent_bits = total * 32 / 33;
    let entropy: Vec<u8> = bits[..ent_bits]
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
        .collect();
    let hash = Sha256::digest(&entropy);
    let expected = (0..total - ent_bits).map(|i| (hash[i / 8] >> (7 - i % 8)) & 1 == 1);
    if !expected.eq(bits[ent_bits..].iter().copied()) {
        return Err(InvalidReason::ChecksumMismatch);
    }
    Ok(entropy)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validation {
    pub valid: bool,
    pub reason: Option<InvalidReason>,
}

pub fn validate_mnemonic<S: AsRef<str>>(words: &[S]) -> Validation {
    match decode_words(words) {
        Ok(_) => Validation { valid: true, reason: None },
        Err(r) => Validation { valid: false, reason: Some(r) },
    }
}

/// PBKDF2-HMAC-SHA512 over the NFKD-normalized phrase, salt "mnemonic" +
/// passphrase, 2048 rounds. Rejects phrases that fail validation.
pub fn mnemonic_to_seed<S: AsRef<str>>(words: &[S], passphrase: &str) -> Result<[u8; 64], WalletError> {
    decode_words(words).map_err(WalletError::InvalidMnemonic)?;
    let phrase = words.iter().map(|w| w.as_ref()).collect::<Vec<_>>().join(" ");
    Ok(stretch(&phrase, passphrase))
}

fn stretch(phrase: &str, passphrase: &str) -> [u8; 64] {
    let password: String = phrase.nfkd().collect();
    let salt: String = format!("mnemonic{passphrase}").nfkd().collect();
    let mut seed = [0u8; 64];
    pbkdf2::pbkdf2_hmac::<Sha512>(password.as_bytes(), salt.as_bytes(), PBKDF2_ROUNDS, &mut seed);
    seed
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedAccount {
    pub seed: [u8; 64],
    pub index: u32,
    pub address: Address,
}

pub fn derive_account(seed: &[u8; 64], index: u32) -> DerivedAccount {
    let digest = sha256(&[seed, &index.to_be_bytes()]);
    let mut addr = [0u8; 20];
    addr.copy_from_slice(&digest[..20]);
    DerivedAccount { seed: *seed, index, address: Address(addr) }
}

/// Entropy size for a requested word count.
pub fn entropy_bytes_for_words(words: usize) -> Result<usize, WalletError> {
    if !VALID_WORD_COUNTS.contains(&words) {
        return Err(WalletError::InvalidWordCount(words));
    }
    Ok(words * 11 * 32 / 33 / 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wordlist_hash_is_pinned() {
        assert_eq!(crate::types::sha256_hex(WORDLIST_TEXT.as_bytes()), WORDLIST_SHA256);
        assert_eq!(word_at(0), Some("abandon"));
        assert_eq!(word_at(2047), Some("zoo"));
    }

    #[test]
    fn zero_entropy_phrase() {
        let m = generate_mnemonic(&[0u8; 16]).unwrap();
        let mut expected = vec!["abandon"; 11];
        expected.push("about");
        assert_eq!(m.words(), expected.as_slice());
        assert_eq!(m.entropy_bits(), 128);
    }

    #[test]
    fn rejects_bad_entropy_length() {
        assert_eq!(generate_mnemonic(&[0u8; 17]), Err(WalletError::InvalidEntropyLength(17)));
        assert_eq!(generate_mnemonic(&[]), Err(WalletError::InvalidEntropyLength(0)));
    }

    #[test]
    fn word_count_formula() {
        for bytes in VALID_ENTROPY_BYTES {
            let bits = bytes * 8;
            let m = generate_mnemonic(&vec![0xa5; bytes]).unwrap();
            assert_eq!(m.words().len(), (bits + bits / 32) / 11);
            assert_eq!(entropy_bytes_for_words(m.words().len()).unwrap(), bytes);
        }
        assert!(entropy_bytes_for_words(13).is_err());
    }

    #[test]
    fn validation_reasons() {
        let m = generate_mnemonic(&[0u8; 16]).unwrap();
        assert!(validate_mnemonic(m.words()).valid);
        let mut words: Vec<String> = m.words().to_vec();
        words[3] = "notaword".into();
        assert_eq!(
            validate_mnemonic(&words).reason,
            Some(InvalidReason::UnknownWord { position: 3, word: "notaword".into() })
        );
        let short = &m.words()[..11];
        assert_eq!(validate_mnemonic(short).reason, Some(InvalidReason::BadWordCount(11)));
        let mut zoo: Vec<String> = m.words().to_vec();
        zoo[11] = "zoo".into();
        assert_eq!(validate_mnemonic(&zoo).reason, Some(InvalidReason::ChecksumMismatch));
    }

    #[test]
    fn seed_salt_sensitivity_and_determinism() {
        let m = generate_mnemonic(&[7u8; 16]).unwrap();
        let a = mnemonic_to_seed(m.words(), "").unwrap();
        let b = mnemonic_to_seed(m.words(), "x").unwrap();
        assert_ne!(a, b);
        assert_eq!(a, mnemonic_to_seed(m.words(), "").unwrap());
        assert_eq!(a, m.to_seed(""));
        assert!(matches!(mnemonic_to_seed(&["abandon"; 12], ""), Err(WalletError::InvalidMnemonic(_))));
    }

    #[test]
    fn derivation_is_deterministic_and_distinct() {
        let seed = [3u8; 64];
        assert_eq!(derive_account(&seed, 0), derive_account(&seed, 0));
        let mut seen = std::collections::HashSet::new();
        for i in 0..10_000 {
            assert!(seen.insert(derive_account(&seed, i).address));
        }
    }

    proptest::proptest! {
        #[test]
        fn roundtrip(len_idx in 0usize..5, bytes in proptest::collection::vec(proptest::num::u8::ANY, 32)) {
            let entropy = &bytes[..VALID_ENTROPY_BYTES[len_idx]];
            let m = generate_mnemonic(entropy).unwrap();
            proptest::prop_assert_eq!(decode_words(m.words()).unwrap(), entropy.to_vec());
            proptest::prop_assert_eq!(Mnemonic::parse(&m.phrase()).unwrap(), m);
        }
    }
}
