//! Secret-bearing notes held client-side. Only their commitments reach a ledger.

use rand::{Rng, RngCore};

use crate::crypto::{
    comm32, derive_address, derive_serial, encode_fixed, nullifier, AddressKeyPair, Commitment, Digest,
    Encoder, Nullifier, Secret, SerialNumber,
};

pub fn random_secret<R: RngCore + ?Sized>(rng: &mut R) -> Secret {
    let mut s = [0u8; 32];
    rng.fill_bytes(&mut s);
    s
}

/// `cm_A = comm(r', cm_u ∥ pk)`.
pub fn access_commitment(r_prime: &Secret, cm_u: &Commitment, pk: &Digest) -> Commitment {
    let mut payload = [0u8; 64];
    payload[..32].copy_from_slice(cm_u.as_bytes());
    payload[32..].copy_from_slice(pk.as_bytes());
    comm32(r_prime, &payload)
}

/// `cm_p = comm(r_1, apk ∥ s)`.
pub fn pseudonym_commitment(r1: &Secret, apk: &Digest, s: &Secret) -> Commitment {
    let mut payload = [0u8; 64];
    payload[..32].copy_from_slice(apk.as_bytes());
    payload[32..].copy_from_slice(s);
    comm32(r1, &payload)
}

/// `cm_R = comm(r_2, encode(R) ∥ cm_p)`.
pub fn reputation_commitment(r2: &Secret, r_micro: u64, cm_p: &Commitment) -> Commitment {
    let mut payload = [0u8; 40];
    payload[..8].copy_from_slice(&encode_fixed(r_micro));
    payload[8..].copy_from_slice(cm_p.as_bytes());
    comm32(r2, &payload)
}

/// `cm_D = comm(r, s ∥ encode(D))`.
pub fn deposit_commitment(r: &Secret, s: &Secret, amount: u64) -> Commitment {
    let mut payload = [0u8; 40];
    payload[..32].copy_from_slice(s);
    payload[32..].copy_from_slice(&amount.to_be_bytes());
    comm32(r, &payload)
}

/// Per-task handle `H = COMM(taskID ∥ sk_ctx)`. The trapdoor is fixed to zero so two
/// parties holding the same `sk_ctx` produce equal handles for the same task.
pub fn task_handle(task_id: &str, sk_ctx: &Secret) -> Commitment {
    let payload = Encoder::new().field(task_id.as_bytes()).field(sk_ctx).finish();
    comm32(&[0u8; 32], &payload)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessToken {
    pub sk_ctx: Secret,
    pub r: Secret,
    pub r_prime: Secret,
    pub pk: Digest,
    pub cm_u: Commitment,
    pub cm_a: Commitment,
}

impl AccessToken {
    pub fn new(sk_ctx: Secret, r: Secret, r_prime: Secret, pk: Digest) -> Self {
        let cm_u = comm32(&r, &sk_ctx);
        let cm_a = access_commitment(&r_prime, &cm_u, &pk);
        AccessToken { sk_ctx, r, r_prime, pk, cm_u, cm_a }
    }

    pub fn sample<R: RngCore + ?Sized>(rng: &mut R, sk_ctx: Secret) -> Self {
        let r = random_secret(rng);
        let r_prime = random_secret(rng);
        let pk = Digest(random_secret(rng));
        Self::new(sk_ctx, r, r_prime, pk)
    }

    pub fn secrets(&self) -> Vec<&[u8]> {
        vec![&self.sk_ctx, &self.r, &self.r_prime]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReputationToken {
    pub keys: AddressKeyPair,
    /// Reputation in millionths.
    pub r_micro: u64,
    pub s: Secret,
    pub r1: Secret,
    pub r2: Secret,
    pub cm_p: Commitment,
    pub cm_r: Commitment,
    pub epoch: u64,
}

impl ReputationToken {
    pub fn new(ask: Secret, r_micro: u64, s: Secret, r1: Secret, r2: Secret, epoch: u64) -> Self {
        let keys = derive_address(ask);
        let cm_p = pseudonym_commitment(&r1, &keys.apk, &s);
        let cm_r = reputation_commitment(&r2, r_micro, &cm_p);
        ReputationToken { keys, r_micro, s, r1, r2, cm_p, cm_r, epoch }
    }

    pub fn sample<R: RngCore + ?Sized>(rng: &mut R, r_micro: u64, epoch: u64) -> Self {
        let ask = random_secret(rng);
        let s = random_secret(rng);
        let r1 = random_secret(rng);
        let r2 = random_secret(rng);
        Self::new(ask, r_micro, s, r1, r2, epoch)
    }

    pub fn apk(&self) -> Digest {
        self.keys.apk
    }

    pub fn serial(&self) -> SerialNumber {
        derive_serial(&self.keys.ask, &self.s)
    }

    pub fn is_well_formed(&self) -> bool {
        self.cm_p == pseudonym_commitment(&self.r1, &self.keys.apk, &self.s)
            && self.cm_r == reputation_commitment(&self.r2, self.r_micro, &self.cm_p)
    }

    /// `r2` is left out: minting from an access token or a pseudonym opens it on-ledger.
    pub fn secrets(&self) -> Vec<&[u8]> {
        vec![&self.keys.ask, &self.s, &self.r1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepositNote {
    pub s: Secret,
    pub r: Secret,
    pub amount: u64,
    pub cm_d: Commitment,
    pub task_id: String,
}

impl DepositNote {
    pub fn new(s: Secret, r: Secret, amount: u64, task_id: impl Into<String>) -> Self {
        let cm_d = deposit_commitment(&r, &s, amount);
        DepositNote { s, r, amount, cm_d, task_id: task_id.into() }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, amount: u64, task_id: impl Into<String>) -> Self {
        let s = random_secret(rng);
        let r = random_secret(rng);
        Self::new(s, r, amount, task_id)
    }

    pub fn nullifier(&self) -> Nullifier {
        nullifier(&self.s)
    }

    pub fn secrets(&self) -> Vec<&[u8]> {
        vec![&self.s, &self.r]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tokens_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let at = AccessToken::sample(&mut rng, [1u8; 32]);
        assert_eq!(at.cm_u, comm32(&at.r, &at.sk_ctx));
        assert_eq!(at.cm_a, access_commitment(&at.r_prime, &at.cm_u, &at.pk));

        let rt = ReputationToken::sample(&mut rng, 500_000, 0);
        assert!(rt.is_well_formed());
        let mut bad = rt.clone();
        bad.r_micro = 900_000;
        assert!(!bad.is_well_formed());

        let note = DepositNote::sample(&mut rng, 100, "t1");
        assert_eq!(note.cm_d, deposit_commitment(&note.r, &note.s, 100));
        assert_eq!(note.nullifier(), nullifier(&note.s));
    }

    #[test]
    fn task_handle_depends_on_both_inputs() {
        let a = task_handle("t", &[1u8; 32]);
        assert_eq!(a, task_handle("t", &[1u8; 32]));
        assert_ne!(a, task_handle("t", &[2u8; 32]));
        assert_ne!(a, task_handle("u", &[1u8; 32]));
    }
}
