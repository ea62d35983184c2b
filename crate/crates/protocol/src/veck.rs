//! Exponent encryption under a committed key with per-chunk equality proofs.
//!
//! Chunk m_j is committed as g^{m_j} and encrypted as (g^{r_j}, vk^{r_j} g^{m_j}).
//! The proof for chunk j shows log_g(u_j) = log_vk(v_j / cm_j), so anyone can
//! check that the ciphertext opens to the committed chunk under the secret
//! key behind vk without learning it.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::group::{hexint, GroupParams};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherChunk {
    #[serde(with = "hexint")]
    pub u: BigUint,
    #[serde(with = "hexint")]
    pub v: BigUint,
}

/// Non-interactive Chaum-Pedersen proof: nonce commitments, challenge, response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DleqProof {
    #[serde(with = "hexint")]
    pub t1: BigUint,
    #[serde(with = "hexint")]
    pub t2: BigUint,
    #[serde(with = "hexint")]
    pub c: BigUint,
    #[serde(with = "hexint")]
    pub s: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VeckBundle {
    #[serde(with = "hexint")]
    pub vk: BigUint,
    #[serde(with = "hexint::vec")]
    pub commitments: Vec<BigUint>,
    /// SHA-256 over all commitments, hex.
    pub commit_digest: String,
    pub ciphertext: Vec<CipherChunk>,
    pub proofs: Vec<DleqProof>,
    /// Plaintext length in bytes; the last chunk is zero-padded.
    pub length: usize,
    /// SHA-256 of the plaintext, hex. Lets the victim detect a wrong key.
    pub data_digest: String,
}

/// Why a bundle was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    #[error("commitments, ciphertext and proofs differ in length")]
    LengthMismatch,
    #[error("bundle has no chunks")]
    Empty,
    #[error("{what} {index} is not in the prime-order subgroup")]
    NotInSubgroup { what: String, index: usize },
    #[error("verification key is the identity")]
    TrivialKey,
    #[error("{what} {index} is not a scalar below q")]
    ScalarOutOfRange { what: String, index: usize },
    #[error("commitment digest does not match")]
    DigestMismatch,
    #[error("equality proof for chunk {index} fails")]
    ProofFailed { index: usize },
}

pub type Verdict = std::result::Result<(), Rejection>;

/// Splits bytes into little-endian `bits`-wide chunks, zero-padding the tail.
pub fn encode_chunks(data: &[u8], bits: u32) -> Vec<u32> {
    let total = data.len() * 8;
    let count = total.div_ceil(bits as usize);
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let mut m = 0u32;
        for b in 0..bits as usize {
            let pos = c * bits as usize + b;
            if pos < total && data[pos / 8] >> (pos % 8) & 1 == 1 {
                m |= 1 << b;
            }
        }
        out.push(m);
    }
    out
}

/// Inverse of [`encode_chunks`], truncated to `length` bytes.
pub fn decode_chunks(chunks: &[u32], length: usize, bits: u32) -> Vec<u8> {
    let mut out = vec![0u8; length];
    for pos in 0..length * 8 {
        let (c, b) = (pos / bits as usize, pos % bits as usize);
        if chunks.get(c).is_some_and(|m| m >> b & 1 == 1) {
            out[pos / 8] |= 1 << (pos % 8);
        }
    }
    out
}

pub fn commitment_digest(params: &GroupParams, commitments: &[BigUint]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"ransomgame/commit");
    hasher.update((commitments.len() as u64).to_le_bytes());
    for cm in commitments {
        hasher.update(params.encode(cm));
    }
    hex::encode(hasher.finalize())
}

pub fn data_digest(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[allow(clippy::too_many_arguments)]
fn challenge(
    params: &GroupParams,
    commit_digest: &str,
    vk: &BigUint,
    index: usize,
    cm: &BigUint,
    chunk: &CipherChunk,
    t1: &BigUint,
    t2: &BigUint,
) -> BigUint {
    let mut hasher = Sha256::new();
    hasher.update(b"ransomgame/dleq");
    params.absorb(&mut hasher);
    hasher.update(commit_digest.as_bytes());
    hasher.update(params.encode(vk));
    hasher.update((index as u64).to_le_bytes());
    for x in [cm, &chunk.u, &chunk.v, t1, t2] {
        hasher.update(params.encode(x));
    }
    params.hash_to_scalar(hasher)
}

/// Encrypts `data` under a fresh key. Returns the secret key and the public bundle.
pub fn encrypt_with_proof(params: &GroupParams, data: &[u8], rng: &mut impl RngCore) -> Result<(BigUint, VeckBundle)> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let sk = params.random_scalar(rng);
    let vk = params.gpow(&sk);
    let chunks = encode_chunks(data, params.chunk_bits);
    // draw every nonce up front so the result does not depend on scheduling
    let nonces: Vec<(BigUint, BigUint)> = chunks
        .iter()
        .map(|_| (params.random_scalar(rng), params.random_scalar(rng)))
        .collect();
    let commitments: Vec<BigUint> = chunks.iter().map(|&m| params.gpow(&BigUint::from(m))).collect();
    let commit_digest = commitment_digest(params, &commitments);

    let sealed = par::map(chunks.len(), |j| {
        let (r, k) = &nonces[j];
        let cm = &commitments[j];
        let chunk = CipherChunk {
            u: params.gpow(r),
            v: params.mul(&params.pow(&vk, r), cm),
        };
        let t1 = params.gpow(k);
        let t2 = params.pow(&vk, k);
        let c = challenge(params, &commit_digest, &vk, j, cm, &chunk, &t1, &t2);
        let s = (k + &c * r) % &params.q;
        (chunk, DleqProof { t1, t2, c, s })
    });
    let (ciphertext, proofs) = sealed.into_iter().unzip();
    Ok((
        sk,
        VeckBundle {
            vk,
            commitments,
            commit_digest,
            ciphertext,
            proofs,
            length: data.len(),
            data_digest: data_digest(data),
        },
    ))
}

/// Checks the commitment digest and every per-chunk proof.
pub fn verify_cipher_data(
    params: &GroupParams,
    commit_digest: &str,
    commitments: &[BigUint],
    vk: &BigUint,
    ciphertext: &[CipherChunk],
    proofs: &[DleqProof],
) -> Verdict {
    if commitments.len() != ciphertext.len() || proofs.len() != ciphertext.len() {
        return Err(Rejection::LengthMismatch);
    }
    if ciphertext.is_empty() {
        return Err(Rejection::Empty);
    }
    let not_in = |what: &str, index| Rejection::NotInSubgroup {
        what: what.into(),
        index,
    };
    if !params.contains(vk) {
        return Err(not_in("vk", 0));
    }
    if vk.is_one() {
        return Err(Rejection::TrivialKey);
    }
    if commitment_digest(params, commitments) != commit_digest {
        return Err(Rejection::DigestMismatch);
    }
    let verdicts = par::map(ciphertext.len(), |j| -> Verdict {
        let (cm, chunk, proof) = (&commitments[j], &ciphertext[j], &proofs[j]);
        for (what, x) in [
            ("commitment", cm),
            ("u", &chunk.u),
            ("v", &chunk.v),
            ("t1", &proof.t1),
            ("t2", &proof.t2),
        ] {
            if !params.contains(x) {
                return Err(not_in(what, j));
            }
        }
        for (what, x) in [("challenge", &proof.c), ("response", &proof.s)] {
            if x >= &params.q {
                return Err(Rejection::ScalarOutOfRange {
                    what: what.into(),
                    index: j,
                });
            }
        }
        let expected = challenge(params, commit_digest, vk, j, cm, chunk, &proof.t1, &proof.t2);
        let w = params.mul(&chunk.v, &params.inv(cm));
        let lhs1 = params.gpow(&proof.s);
        let rhs1 = params.mul(&proof.t1, &params.pow(&chunk.u, &proof.c));
        let lhs2 = params.pow(vk, &proof.s);
        let rhs2 = params.mul(&proof.t2, &params.pow(&w, &proof.c));
        if expected != proof.c || lhs1 != rhs1 || lhs2 != rhs2 {
            return Err(Rejection::ProofFailed { index: j });
        }
        Ok(())
    });
    verdicts.into_iter().collect()
}

impl VeckBundle {
    pub fn verify(&self, params: &GroupParams) -> Verdict {
        verify_cipher_data(
            params,
            &self.commit_digest,
            &self.commitments,
            &self.vk,
            &self.ciphertext,
            &self.proofs,
        )
    }
}

/// True iff sk is in [1, q) and g^sk = vk. Out-of-range keys are simply false.
pub fn verify_key(params: &GroupParams, vk: &BigUint, sk: &BigUint) -> bool {
    !sk.is_zero() && sk < &params.q && &params.gpow(sk) == vk
}

/// Baby-step giant-step table for logs in [0, 2^bits).
struct DlogTable {
    baby: HashMap<BigUint, u32>,
    step: u32,
    giant: BigUint,
}

impl DlogTable {
    fn new(params: &GroupParams) -> Self {
        let step = 1u32 << params.chunk_bits.div_ceil(2);
        let mut baby = HashMap::with_capacity(step as usize);
        let mut x = BigUint::one();
        for j in 0..step {
            baby.entry(x.clone()).or_insert(j);
            x = params.mul(&x, &params.g);
        }
        // x is now g^step
        let giant = params.inv(&x);
        Self { baby, step, giant }
    }

    fn log(&self, params: &GroupParams, y: &BigUint) -> Option<u32> {
        let limit = 1u64 << params.chunk_bits;
        let mut gamma = y.clone();
        for i in 0..self.step {
            if let Some(&j) = self.baby.get(&gamma) {
                let m = i as u64 * self.step as u64 + j as u64;
                return (m < limit).then(|| m.to_u32().expect("below 2^16"));
            }
            gamma = params.mul(&gamma, &self.giant);
        }
        None
    }
}

/// Opens every chunk with `sk` and reassembles `length` bytes.
pub fn decrypt(params: &GroupParams, sk: &BigUint, ciphertext: &[CipherChunk], length: usize) -> Result<Vec<u8>> {
    let table = DlogTable::new(params);
    let chunks = par::map(ciphertext.len(), |j| {
        let c = &ciphertext[j];
        if !params.contains(&c.u) || !params.contains(&c.v) {
            return Err(Error::DlogNotFound {
                chunk: j,
                bits: params.chunk_bits,
            });
        }
        let cm = params.mul(&c.v, &params.inv(&params.pow(&c.u, sk)));
        table.log(params, &cm).ok_or(Error::DlogNotFound {
            chunk: j,
            bits: params.chunk_bits,
        })
    });
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(decode_chunks(&chunks, length, params.chunk_bits))
}

/// [`decrypt`] plus a check against the recorded plaintext digest.
pub fn decrypt_bundle(params: &GroupParams, sk: &BigUint, bundle: &VeckBundle) -> Result<Vec<u8>> {
    let data = decrypt(params, sk, &bundle.ciphertext, bundle.length)?;
    if data_digest(&data) != bundle.data_digest {
        return Err(Error::DigestMismatch);
    }
    Ok(data)
}

/// Field category for single-bit tamper trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperTarget {
    Ciphertext,
    Commitment,
    Proof,
    Vk,
}

impl TamperTarget {
    pub const ALL: [TamperTarget; 4] = [
        TamperTarget::Ciphertext,
        TamperTarget::Commitment,
        TamperTarget::Proof,
        TamperTarget::Vk,
    ];
}

fn flip(x: &mut BigUint, rng: &mut impl RngCore) {
    let bit = rng.random_range(0..x.bits().max(1));
    x.set_bit(bit, !x.bit(bit));
}

/// Flips one random bit of one random element in the chosen field.
pub fn tamper(bundle: &mut VeckBundle, target: TamperTarget, rng: &mut impl RngCore) {
    let j = rng.random_range(0..bundle.ciphertext.len());
    match target {
        TamperTarget::Ciphertext => {
            let c = &mut bundle.ciphertext[j];
            flip(if rng.random_bool(0.5) { &mut c.u } else { &mut c.v }, rng);
        }
        TamperTarget::Commitment => flip(&mut bundle.commitments[j], rng),
        TamperTarget::Proof => {
            let p = &mut bundle.proofs[j];
            let x = match rng.random_range(0..4) {
                0 => &mut p.t1,
                1 => &mut p.t2,
                2 => &mut p.c,
                _ => &mut p.s,
            };
            flip(x, rng);
        }
        TamperTarget::Vk => flip(&mut bundle.vk, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::setup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chunk_round_trip_small() {
        for bits in [4, 7, 8, 12, 16] {
            let data = b"hello, world";
            let chunks = encode_chunks(data, bits);
            assert!(chunks.iter().all(|&m| m < 1 << bits));
            assert_eq!(decode_chunks(&chunks, data.len(), bits), data);
        }
    }

    #[test]
    fn single_byte_single_chunk() {
        let params = setup(8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (sk, bundle) = encrypt_with_proof(&params, &[0xa5], &mut rng).unwrap();
        assert_eq!(bundle.ciphertext.len(), 1);
        assert_eq!(bundle.verify(&params), Ok(()));
        assert_eq!(decrypt_bundle(&params, &sk, &bundle).unwrap(), vec![0xa5]);
    }

    #[test]
    fn empty_data_is_an_error() {
        let params = setup(12, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            encrypt_with_proof(&params, &[], &mut rng),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn key_check_rejects_neighbours_and_range() {
        let params = setup(12, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sk = params.random_scalar(&mut rng);
        let vk = params.gpow(&sk);
        assert!(verify_key(&params, &vk, &sk));
        assert!(!verify_key(&params, &vk, &(&sk + 1u32)));
        assert!(!verify_key(&params, &vk, &BigUint::zero()));
        assert!(!verify_key(&params, &params.gpow(&BigUint::zero()), &params.q));
    }

    #[test]
    fn dlog_covers_the_whole_range() {
        let params = setup(5, 3).unwrap();
        let table = DlogTable::new(&params);
        for m in 0..32u32 {
            assert_eq!(table.log(&params, &params.gpow(&BigUint::from(m))), Some(m));
        }
        assert_eq!(table.log(&params, &params.gpow(&BigUint::from(32u32))), None);
    }
}
