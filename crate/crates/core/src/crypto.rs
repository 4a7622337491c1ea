//! Hash-based primitives shared by both ledgers.
//!
//! Every primitive is SHA-256 over a one-byte domain tag followed by its
//! inputs, so digests produced for one purpose can never be replayed as
//! digests for another.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use crate::error::InputError;

/// One-byte domain tags. Each primitive owns exactly one.
pub mod tag {
    pub const COMM: u8 = 0x01;
    pub const PRF_ADDRESS: u8 = 0x02;
    pub const PRF_SERIAL: u8 = 0x03;
    pub const NULLIFIER: u8 = 0x04;
    pub const MERKLE_NODE: u8 = 0x05;
    pub const MERKLE_EMPTY: u8 = 0x06;
    pub const PRF: u8 = 0x07;
    pub const PROOF: u8 = 0x08;
    pub const SIGNATURE: u8 = 0x09;
    pub const VRF: u8 = 0x0a;
    pub const ITERATE: u8 = 0x0b;
    pub const KEYGEN: u8 = 0x0c;
    pub const ATTEST: u8 = 0x0d;
    pub const STATE: u8 = 0x0e;
}

/// Fixed-point scale for reputation values carried inside commitments.
pub const FIXED_SCALE: u64 = 1_000_000;

pub const DIGEST_LEN: usize = 32;

/// A 32-byte hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, InputError> {
        let bytes = hex::decode(s).map_err(|_| InputError::Malformed("digest hex"))?;
        Self::from_slice(&bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, InputError> {
        let arr: [u8; DIGEST_LEN] = bytes
            .try_into()
            .map_err(|_| InputError::Length { what: "digest", expected: DIGEST_LEN, got: bytes.len() })?;
        Ok(Digest(arr))
    }

    /// Big-endian reduction of the digest modulo `n`.
    pub fn mod_u64(&self, n: u64) -> u64 {
        assert!(n > 0, "modulus must be positive");
        let n = n as u128;
        self.0.iter().fold(0u128, |acc, &b| (acc * 256 + b as u128) % n) as u64
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// A 32-byte secret: trapdoors, address seeds, serial randomness.
pub type Secret = [u8; 32];

/// Tagged SHA-256 over a sequence of byte slices.
pub fn hash_tagged(tag: u8, parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update([tag]);
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// Hiding, binding commitment `H(tag ∥ trapdoor ∥ payload)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment(pub Digest);

impl Commitment {
    pub fn digest(&self) -> Digest {
        self.0
    }
    pub fn as_bytes(&self) -> &[u8; 32] {
        self.0.as_bytes()
    }
}

pub fn comm(trapdoor: &[u8], payload: &[u8]) -> Result<Commitment, InputError> {
    if trapdoor.len() != 32 {
        return Err(InputError::Length { what: "trapdoor", expected: 32, got: trapdoor.len() });
    }
    if payload.is_empty() {
        return Err(InputError::Malformed("empty commitment payload"));
    }
    Ok(comm32(trapdoor.try_into().expect("checked"), payload))
}

/// Infallible form for callers that already hold a 32-byte trapdoor.
pub fn comm32(trapdoor: &Secret, payload: &[u8]) -> Commitment {
    Commitment(hash_tagged(tag::COMM, &[trapdoor, payload]))
}

/// General keyed PRF, domain separated from `comm` and from the address/serial PRFs.
pub fn prf(key: &[u8], input: &[u8]) -> Result<Digest, InputError> {
    if key.len() != 32 {
        return Err(InputError::Length { what: "prf key", expected: 32, got: key.len() });
    }
    Ok(hash_tagged(tag::PRF, &[key, input]))
}

/// Address key pair: `apk = PRF_ask(0)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AddressKeyPair {
    pub ask: Secret,
    pub apk: Digest,
}

pub fn address_prf(ask: &Secret, input: &[u8]) -> Digest {
    hash_tagged(tag::PRF_ADDRESS, &[ask, input])
}

pub fn derive_address(ask: Secret) -> AddressKeyPair {
    let apk = address_prf(&ask, &[0u8]);
    AddressKeyPair { ask, apk }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SerialNumber(pub Digest);

pub fn derive_serial(ask: &Secret, s: &Secret) -> SerialNumber {
    SerialNumber(hash_tagged(tag::PRF_SERIAL, &[ask, s]))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nullifier(pub Digest);

pub fn nullifier(s: &Secret) -> Nullifier {
    Nullifier(hash_tagged(tag::NULLIFIER, &[s]))
}

/// Canonical 8-byte encoding of a fixed-point reputation value.
pub fn encode_fixed(micro: u64) -> [u8; 8] {
    micro.to_be_bytes()
}

/// Length-prefixed concatenation; the canonical encoding for multi-field payloads.
#[derive(Default, Clone, Debug)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        self.buf.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn u64(self, v: u64) -> Self {
        self.field(&v.to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rand32(rng: &mut ChaCha8Rng) -> Secret {
        let mut b = [0u8; 32];
        rng.fill(&mut b);
        b
    }

    #[test]
    fn comm_is_deterministic() {
        let r = [7u8; 32];
        assert_eq!(comm(&r, b"x").unwrap(), comm(&r, b"x").unwrap());
    }

    #[test]
    fn comm_rejects_bad_trapdoor_and_empty_payload() {
        assert!(matches!(comm(&[1u8; 31], b"x"), Err(InputError::Length { .. })));
        assert!(comm(&[1u8; 32], b"").is_err());
    }

    #[test]
    fn distinct_trapdoors_and_payloads_never_collide() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            let r = rand32(&mut rng);
            assert!(seen.insert(comm32(&r, b"payload")));
        }
        let r = rand32(&mut rng);
        let mut seen = HashSet::new();
        for i in 0..10_000u64 {
            assert!(seen.insert(comm32(&r, &i.to_be_bytes())));
        }
    }

    #[test]
    fn prf_zero_is_apk() {
        let k = [3u8; 32];
        let pair = derive_address(k);
        assert_eq!(pair.apk, address_prf(&k, &[0]));
        assert_eq!(pair, derive_address(k));
        assert!(prf(&[0u8; 5], b"m").is_err());
        assert_eq!(prf(&k, b"m").unwrap(), prf(&k, b"m").unwrap());
        assert_ne!(prf(&k, b"m").unwrap(), prf(&[4u8; 32], b"m").unwrap());
    }

    #[test]
    fn domain_separation() {
        let k = [9u8; 32];
        let apk = derive_address(k).apk;
        assert_ne!(derive_serial(&k, &[0u8; 32]).0, apk);
        assert_ne!(nullifier(&k).0, comm32(&k, &k).0);
        assert_ne!(nullifier(&k).0, prf(&k, &k).unwrap());
        assert_ne!(hash_tagged(tag::MERKLE_NODE, &[&k]), hash_tagged(tag::COMM, &[&k]));
    }

    #[test]
    fn sampled_outputs_are_collision_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut apks = HashSet::new();
        let mut serials = HashSet::new();
        let mut nulls = HashSet::new();
        let ask = rand32(&mut rng);
        for _ in 0..20_000 {
            let x = rand32(&mut rng);
            assert!(apks.insert(derive_address(x).apk));
            assert!(serials.insert(derive_serial(&ask, &x)));
            assert!(nulls.insert(nullifier(&x)));
        }
    }

    #[test]
    fn mod_reduction_matches_u128_for_small_values() {
        let mut d = [0u8; 32];
        d[31] = 200;
        d[30] = 1;
        assert_eq!(Digest(d).mod_u64(7), (256 + 200) % 7);
    }
}
