use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::VisionError;

/// Default descriptor length, bits.
pub const DEFAULT_BITS: usize = 256;

/// Fixed-length binary descriptor stored as 64-bit words.
///
/// Lengths are whole multiples of 64 bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Descriptor {
    words: Vec<u64>,
}

impl Descriptor {
    pub fn zeros(bits: usize) -> Result<Self, VisionError> {
        if bits == 0 || !bits.is_multiple_of(64) {
            return Err(VisionError::Argument(format!(
                "descriptor length must be a positive multiple of 64 bits, got {bits}"
            )));
        }
        Ok(Self {
            words: vec![0; bits / 64],
        })
    }

    pub fn from_words(words: Vec<u64>) -> Self {
        Self { words }
    }

    pub fn random<R: Rng + ?Sized>(bits: usize, rng: &mut R) -> Result<Self, VisionError> {
        let mut d = Self::zeros(bits)?;
        for w in &mut d.words {
            *w = rng.random();
        }
        Ok(d)
    }

    pub fn bits(&self) -> usize {
        self.words.len() * 64
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    /// Hamming distance; panics on length mismatch.
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        assert_eq!(self.words.len(), other.words.len(), "descriptor length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Little-endian byte order, word by word.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self, VisionError> {
        let bytes = hex::decode(s).map_err(|e| VisionError::Format(format!("descriptor hex: {e}")))?;
        if bytes.is_empty() || bytes.len() % 8 != 0 {
            return Err(VisionError::Format(format!(
                "descriptor hex must encode a multiple of 64 bits, got {} bytes",
                bytes.len()
            )));
        }
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { words })
    }
}

impl fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor({})", self.to_hex())
    }
}

impl Serialize for Descriptor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Descriptor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Descriptor::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hex_round_trip_and_hamming() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Descriptor::random(256, &mut rng).unwrap();
        let back = Descriptor::from_hex(&a.to_hex()).unwrap();
        assert_eq!(a, back);
        let mut b = a.clone();
        b.flip(0);
        b.flip(200);
        assert_eq!(a.hamming(&b), 2);
        assert!(!a.bit(0) == b.bit(0));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(Descriptor::zeros(0).is_err());
        assert!(Descriptor::zeros(100).is_err());
        assert!(Descriptor::from_hex("abcd").is_err());
        assert!(Descriptor::from_hex("zz").is_err());
    }
}
