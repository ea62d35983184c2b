//! Prime-order subgroup of Z_p^* for a fixed 256-bit safe prime p = 2q + 1.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const SAFE_PRIME_HEX: &str = "9be54368fdaeb7e5d45d1ef3f6a1eaf9642cb55f167e01b5378e341afe8737ab";

pub const DEFAULT_CHUNK_BITS: u32 = 12;
pub const MIN_CHUNK_BITS: u32 = 4;
pub const MAX_CHUNK_BITS: u32 = 16;

/// Hex (de)serialization for big integers, lowercase without prefix.
pub mod hexint {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_str_radix(16))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(D::Error::custom)
    }

    pub fn parse(s: &str) -> Result<BigUint, String> {
        let t = s.strip_prefix("0x").unwrap_or(s);
        if t.is_empty() {
            return Err("empty hex integer".into());
        }
        BigUint::parse_bytes(t.as_bytes(), 16).ok_or_else(|| format!("not a hex integer: {s:?}"))
    }

    pub mod vec {
        use num_bigint::BigUint;
        use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&x.to_str_radix(16))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| super::parse(s).map_err(D::Error::custom))
                .collect()
        }
    }

    pub mod opt {
        use num_bigint::BigUint;
        use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(x) => s.serialize_some(&x.to_str_radix(16)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| super::parse(&s).map_err(D::Error::custom))
                .transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    #[serde(with = "hexint")]
    pub p: BigUint,
    #[serde(with = "hexint")]
    pub q: BigUint,
    #[serde(with = "hexint")]
    pub g: BigUint,
    #[serde(with = "hexint")]
    pub h: BigUint,
    pub chunk_bits: u32,
}

/// Baked group with `h` derived from `seed`.
///
/// `h` is a hash of the seed squared mod p, so it lands in the quadratic
/// residues, which for a safe prime is exactly the order-q subgroup.
pub fn setup(chunk_bits: u32, seed: u64) -> Result<GroupParams> {
    if !(MIN_CHUNK_BITS..=MAX_CHUNK_BITS).contains(&chunk_bits) {
        return Err(Error::ChunkBits(chunk_bits));
    }
    let p = BigUint::parse_bytes(SAFE_PRIME_HEX.as_bytes(), 16).expect("baked prime");
    let q: BigUint = (&p - 1u32) >> 1;
    let g = BigUint::from(4u32);
    let mut counter = 0u32;
    let h = loop {
        let mut wide = Vec::with_capacity(64);
        for half in 0..2u8 {
            let mut hasher = Sha256::new();
            hasher.update(b"ransomgame/h");
            hasher.update(seed.to_le_bytes());
            hasher.update(counter.to_le_bytes());
            hasher.update([half]);
            wide.extend_from_slice(&hasher.finalize());
        }
        let cand = (BigUint::from_bytes_be(&wide) % &p).modpow(&BigUint::from(2u32), &p);
        counter += 1;
        if !cand.is_zero() && !cand.is_one() && cand != g {
            break cand;
        }
    };
    Ok(GroupParams { p, q, g, h, chunk_bits })
}

impl GroupParams {
    pub fn element_bytes(&self) -> usize {
        (self.p.bits() as usize).div_ceil(8)
    }

    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        base.modpow(exp, &self.p)
    }

    pub fn gpow(&self, exp: &BigUint) -> BigUint {
        self.g.modpow(exp, &self.p)
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    /// Inverse of a nonzero element.
    pub fn inv(&self, a: &BigUint) -> BigUint {
        a.modinv(&self.p).expect("nonzero element of a prime field")
    }

    /// Membership in the order-q subgroup (the identity included).
    pub fn contains(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && x.modpow(&self.q, &self.p).is_one()
    }

    /// Whether every structural invariant of the parameters holds.
    pub fn check(&self) -> bool {
        let two_q_plus_one = (&self.q << 1) + 1u32;
        two_q_plus_one == self.p
            && (MIN_CHUNK_BITS..=MAX_CHUNK_BITS).contains(&self.chunk_bits)
            && !self.g.is_one()
            && !self.h.is_one()
            && self.g != self.h
            && self.contains(&self.g)
            && self.contains(&self.h)
    }

    /// Fixed-width big-endian encoding used inside hashes.
    pub fn encode(&self, x: &BigUint) -> Vec<u8> {
        let raw = x.to_bytes_be();
        let width = self.element_bytes().max(raw.len());
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    /// Uniform-ish scalar in [1, q), from 512 random bits.
    pub fn random_scalar(&self, rng: &mut impl RngCore) -> BigUint {
        let mut buf = [0u8; 64];
        rng.fill_bytes(&mut buf);
        BigUint::from_bytes_be(&buf) % (&self.q - 1u32) + 1u32
    }

    /// Hash to a scalar mod q.
    pub fn hash_to_scalar(&self, hasher: Sha256) -> BigUint {
        BigUint::from_bytes_be(&hasher.finalize()) % &self.q
    }

    pub(crate) fn absorb(&self, hasher: &mut Sha256) {
        hasher.update(self.encode(&self.p));
        hasher.update(self.encode(&self.q));
        hasher.update(self.encode(&self.g));
        hasher.update(self.encode(&self.h));
        hasher.update(self.chunk_bits.to_le_bytes());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baked_group_is_consistent() {
        let params = setup(12, 0).unwrap();
        assert!(params.check());
        assert_eq!(params.p.bits(), 256);
        assert!(params.gpow(&params.q).is_one());
    }

    #[test]
    fn chunk_bits_are_bounded() {
        assert!(matches!(setup(3, 0), Err(Error::ChunkBits(3))));
        assert!(matches!(setup(17, 0), Err(Error::ChunkBits(17))));
        assert!(setup(16, 0).is_ok());
    }

    #[test]
    fn hex_round_trip() {
        let params = setup(8, 5).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        let back: GroupParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
        assert!(hexint::parse("").is_err());
        assert!(hexint::parse("zz").is_err());
        assert_eq!(hexint::parse("0xff").unwrap(), BigUint::from(255u32));
    }
}
