//! Optional privacy layer for submissions: sentiment is sealed during the
//! contribution period and revealed by the pollster at tally time, so third
//! parties cannot read in-flight sentiment.
//!
//! The commitment is SHA-256 over the canonical choice encoding and a
//! per-submission nonce; it binds the revealed choice bit-exactly. The
//! cipher itself is a pluggable interface with a keyed-keystream reference
//! implementation — test-grade sealing, not production cryptography.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::types::SentimentChoice;

pub const NONCE_LEN: usize = 32;
pub const COMMITMENT_LEN: usize = 32;
const FINGERPRINT_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SealError {
    #[error("choice encoding failed: {0}")]
    EncodingFailure(String),
    #[error("revealed choice does not verify against its commitment")]
    VerificationFailed,
    #[error("reveal key does not match the key this submission was sealed under")]
    KeyMismatch,
}

/// Public half of a poll key pair; given to submitters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SealKey(#[serde(with = "hex::serde")] [u8; 32]);

/// Private half, held by the pollster until tally time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RevealKey(#[serde(with = "hex::serde")] [u8; 32]);

impl RevealKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        RevealKey(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, SealError> {
        let bytes: [u8; 32] = hex::decode(s)
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or(SealError::KeyMismatch)?;
        Ok(RevealKey(bytes))
    }
}

/// Key pair for one poll. The seal key is derived from the reveal key, so
/// holding the private half is enough to open every submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollKeyPair {
    pub seal_key: SealKey,
    pub reveal_key: RevealKey,
}

impl PollKeyPair {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        let reveal_key = RevealKey(seed);
        PollKeyPair {
            seal_key: derive_seal_key(&reveal_key),
            reveal_key,
        }
    }

    pub fn generate<R: rand::Rng>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill(&mut seed);
        PollKeyPair::from_seed(seed)
    }
}

fn derive_seal_key(reveal_key: &RevealKey) -> SealKey {
    let mut hasher = Sha256::new();
    hasher.update(b"sentiment-seal-key");
    hasher.update(reveal_key.0);
    SealKey(hasher.finalize().into())
}

fn fingerprint(seal_key: &SealKey) -> [u8; FINGERPRINT_LEN] {
    let mut hasher = Sha256::new();
    hasher.update(b"sentiment-key-fingerprint");
    hasher.update(seal_key.0);
    let digest = hasher.finalize();
    digest[..FINGERPRINT_LEN].try_into().unwrap()
}

/// A sealed submission: opaque ciphertext plus the binding commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedChoice {
    #[serde(with = "base64_bytes")]
    pub ciphertext: Vec<u8>,
    #[serde(with = "hex::serde")]
    pub commitment: [u8; COMMITMENT_LEN],
}

/// Commitment digest: SHA-256(canonical choice encoding || nonce).
pub fn commitment(choice: &SentimentChoice, nonce: &[u8; NONCE_LEN]) -> [u8; COMMITMENT_LEN] {
    let mut hasher = Sha256::new();
    hasher.update(choice.canonical_encoding());
    hasher.update(nonce);
    hasher.finalize().into()
}

/// Check a revealed (choice, nonce) pair against a sealed submission.
pub fn verify(sealed: &SealedChoice, choice: &SentimentChoice, nonce: &[u8; NONCE_LEN]) -> bool {
    sealed.commitment == commitment(choice, nonce)
}

fn keystream_block(seal_key: &SealKey, commitment: &[u8; 32], counter: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"sentiment-keystream");
    hasher.update(seal_key.0);
    hasher.update(commitment);
    hasher.update(counter.to_le_bytes());
    hasher.finalize().into()
}

fn apply_keystream(seal_key: &SealKey, commitment: &[u8; 32], data: &mut [u8]) {
    for (block_index, chunk) in data.chunks_mut(32).enumerate() {
        let block = keystream_block(seal_key, commitment, block_index as u64);
        for (byte, key) in chunk.iter_mut().zip(block.iter()) {
            *byte ^= key;
        }
    }
}

/// Seal a choice under the poll's public key. Deterministic in
/// (choice, nonce, key); the nonce must be fresh per submission.
pub fn seal(
    choice: &SentimentChoice,
    nonce: [u8; NONCE_LEN],
    key: &SealKey,
) -> Result<SealedChoice, SealError> {
    let encoding = choice.canonical_encoding();
    if encoding.len() > u32::MAX as usize {
        return Err(SealError::EncodingFailure("choice encoding too long".into()));
    }
    let commitment = commitment(choice, &nonce);

    let mut plaintext = Vec::with_capacity(4 + encoding.len() + NONCE_LEN);
    plaintext.extend_from_slice(&(encoding.len() as u32).to_le_bytes());
    plaintext.extend_from_slice(&encoding);
    plaintext.extend_from_slice(&nonce);
    apply_keystream(key, &commitment, &mut plaintext);

    let mut ciphertext = Vec::with_capacity(FINGERPRINT_LEN + plaintext.len());
    ciphertext.extend_from_slice(&fingerprint(key));
    ciphertext.extend_from_slice(&plaintext);
    Ok(SealedChoice {
        ciphertext,
        commitment,
    })
}

/// Open a sealed choice with the pollster's private key and verify it
/// against the commitment.
pub fn reveal(
    sealed: &SealedChoice,
    key: &RevealKey,
) -> Result<(SentimentChoice, [u8; NONCE_LEN]), SealError> {
    let seal_key = derive_seal_key(key);
    if sealed.ciphertext.len() < FINGERPRINT_LEN + 4 + NONCE_LEN {
        return Err(SealError::VerificationFailed);
    }
    let (fp, body) = sealed.ciphertext.split_at(FINGERPRINT_LEN);
    if fp != fingerprint(&seal_key) {
        return Err(SealError::KeyMismatch);
    }
    let mut plaintext = body.to_vec();
    apply_keystream(&seal_key, &sealed.commitment, &mut plaintext);

    let len = u32::from_le_bytes(plaintext[..4].try_into().unwrap()) as usize;
    if plaintext.len() != 4 + len + NONCE_LEN {
        return Err(SealError::VerificationFailed);
    }
    let encoding = &plaintext[4..4 + len];
    let nonce: [u8; NONCE_LEN] = plaintext[4 + len..].try_into().unwrap();
    let choice = decode_choice(encoding).ok_or(SealError::VerificationFailed)?;
    if !verify(sealed, &choice, &nonce) {
        return Err(SealError::VerificationFailed);
    }
    Ok((choice, nonce))
}

fn decode_choice(encoding: &[u8]) -> Option<SentimentChoice> {
    let text = std::str::from_utf8(encoding).ok()?;
    let (tag, body) = text.split_at_checked(2)?;
    match tag {
        "L:" => Some(SentimentChoice::label(body)),
        "I:" => SentimentChoice::parse_key(body).ok(),
        _ => None,
    }
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(deserializer)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn keys() -> PollKeyPair {
        PollKeyPair::from_seed([7u8; 32])
    }

    #[test]
    fn seal_reveal_round_trip() {
        let keys = keys();
        let choice = SentimentChoice::label("D");
        let nonce = [42u8; 32];
        let sealed = seal(&choice, nonce, &keys.seal_key).unwrap();
        let (revealed, revealed_nonce) = reveal(&sealed, &keys.reveal_key).unwrap();
        assert_eq!(revealed, choice);
        assert_eq!(revealed_nonce, nonce);
        assert!(verify(&sealed, &choice, &nonce));
    }

    #[test]
    fn distinct_nonces_give_distinct_commitments() {
        let keys = keys();
        let choice = SentimentChoice::label("D");
        let a = seal(&choice, [1u8; 32], &keys.seal_key).unwrap();
        let b = seal(&choice, [2u8; 32], &keys.seal_key).unwrap();
        assert_ne!(a.commitment, b.commitment);
        assert_ne!(a.ciphertext, b.ciphertext);
    }

    #[test]
    fn tampered_ciphertext_fails_verification() {
        let keys = keys();
        let choice = SentimentChoice::label("D");
        let mut sealed = seal(&choice, [9u8; 32], &keys.seal_key).unwrap();
        let last = sealed.ciphertext.len() - 1;
        sealed.ciphertext[last] ^= 0x01;
        assert_eq!(
            reveal(&sealed, &keys.reveal_key).unwrap_err(),
            SealError::VerificationFailed
        );
    }

    #[test]
    fn wrong_key_is_detected() {
        let keys = keys();
        let other = PollKeyPair::from_seed([8u8; 32]);
        let sealed = seal(&SentimentChoice::label("D"), [3u8; 32], &keys.seal_key).unwrap();
        assert_eq!(
            reveal(&sealed, &other.reveal_key).unwrap_err(),
            SealError::KeyMismatch
        );
    }

    #[test]
    fn mismatched_commitment_fails() {
        let keys = keys();
        let choice = SentimentChoice::label("D");
        let nonce = [5u8; 32];
        let mut sealed = seal(&choice, nonce, &keys.seal_key).unwrap();
        // Graft on the commitment of a different choice.
        sealed.commitment = commitment(&SentimentChoice::label("R"), &nonce);
        assert!(!verify(&sealed, &choice, &nonce));
        assert_eq!(
            reveal(&sealed, &keys.reveal_key).unwrap_err(),
            SealError::VerificationFailed
        );
    }

    #[test]
    fn randomized_round_trips() {
        let mut rng = StdRng::seed_from_u64(0xface);
        let keys = keys();
        for i in 0..10_000 {
            let choice = if i % 3 == 0 {
                let lo = rng.gen_range(0.01f64..10.0);
                let hi = lo + rng.gen_range(0.01f64..10.0);
                SentimentChoice::parse_key(&format!("[{lo},{hi})")).unwrap()
            } else {
                SentimentChoice::label(format!("label-{}", rng.gen::<u32>()))
            };
            let mut nonce = [0u8; 32];
            rng.fill(&mut nonce);
            let sealed = seal(&choice, nonce, &keys.seal_key).unwrap();
            let (revealed, revealed_nonce) = reveal(&sealed, &keys.reveal_key).unwrap();
            assert_eq!(revealed, choice);
            assert_eq!(revealed_nonce, nonce);
        }
    }

    #[test]
    fn binding_resists_random_second_preimages() {
        let keys = keys();
        let choice = SentimentChoice::label("D");
        let nonce = [1u8; 32];
        let sealed = seal(&choice, nonce, &keys.seal_key).unwrap();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..50_000 {
            let other = SentimentChoice::label(format!("fake-{}", rng.gen::<u64>()));
            let mut other_nonce = [0u8; 32];
            rng.fill(&mut other_nonce);
            assert!(!verify(&sealed, &other, &other_nonce));
        }
    }

    #[test]
    fn sealed_json_shape() {
        let keys = keys();
        let sealed = seal(&SentimentChoice::label("D"), [6u8; 32], &keys.seal_key).unwrap();
        let json = serde_json::to_string(&sealed).unwrap();
        assert!(json.contains(r#""ciphertext":""#));
        assert!(json.contains(r#""commitment":""#));
        let back: SealedChoice = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sealed);
    }
}
