//! 48-bit hybrid additive-rotative string hash used to pseudonymize IDs.

use std::fmt;

pub const ANON_BITS: u32 = 48;
pub const ANON_MASK: u64 = (1 << ANON_BITS) - 1;
pub const APHASH48_SEED: u64 = 0xAAAA_AAAA_AAAA;

/// A pseudonymized user ID, always below `2^48`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnonId(u64);

impl AnonId {
    pub fn new(value: u64) -> Option<Self> {
        (value <= ANON_MASK).then_some(AnonId(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for AnonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Alternates a shift-xor-multiply step on even positions with a
/// shift-add-complement step on odd positions, all modulo `2^48`.
pub fn aphash48(key: &[u8]) -> AnonId {
    let mut h = APHASH48_SEED;
    for (i, &b) in key.iter().enumerate() {
        let b = b as u64;
        if i % 2 == 0 {
            let mixed = (h << 7) ^ b.wrapping_mul(h >> 3);
            h ^= mixed & ANON_MASK;
        } else {
            let mixed = (h << 11).wrapping_add(b ^ (h >> 5));
            h ^= !mixed & ANON_MASK;
        }
        h &= ANON_MASK;
    }
    AnonId(h)
}

/// Hashes the decimal rendering of a numeric raw ID.
pub fn anonymize_numeric(raw: u64) -> AnonId {
    let buf = decimal(raw);
    aphash48(buf.as_bytes())
}

struct DecimalBuf {
    bytes: [u8; 20],
    start: usize,
}

impl DecimalBuf {
    fn as_bytes(&self) -> &[u8] {
        &self.bytes[self.start..]
    }
}

fn decimal(mut v: u64) -> DecimalBuf {
    let mut bytes = [0u8; 20];
    let mut i = bytes.len();
    loop {
        i -= 1;
        bytes[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    DecimalBuf { bytes, start: i }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Straight-line transcription of the recurrence in 128-bit arithmetic,
    /// reducing modulo 2^48 after every shift, add and multiply.
    fn reference(key: &[u8]) -> u64 {
        const M: u128 = 1 << 48;
        let mut h: u128 = 0xAAAAAAAAAAAA;
        for (i, &b) in key.iter().enumerate() {
            let b = b as u128;
            if i % 2 == 0 {
                let left = (h * 128) % M;
                let right = h / 8;
                let prod = (b * right) % M;
                h ^= left ^ prod;
            } else {
                let left = (h * 2048) % M;
                let right = h / 32;
                let sum = (left + (b ^ right)) % M;
                let not = (M - 1) - sum;
                h ^= not;
            }
        }
        h as u64
    }

    #[test]
    fn empty_key_returns_seed() {
        assert_eq!(aphash48(b"").value(), 0xAAAAAAAAAAAA);
    }

    #[test]
    fn matches_reference_on_fixed_keys() {
        for key in ["12345", "12346", "0", "4294967295", "alice.smith", "x"] {
            assert_eq!(aphash48(key.as_bytes()).value(), reference(key.as_bytes()), "{key}");
        }
        // frozen from a third, out-of-tree transcription
        assert_eq!(aphash48(b"12345").value(), 0xc811_3897_893e);
        assert_eq!(aphash48(b"12346").value(), 0xe7f8_dd7d_1867);
        assert_ne!(aphash48(b"12345"), aphash48(b"12346"));
    }

    #[test]
    fn numeric_helper_hashes_decimal_text() {
        for v in [0u64, 7, 10, 12345, u32::MAX as u64, u64::MAX] {
            assert_eq!(anonymize_numeric(v), aphash48(v.to_string().as_bytes()));
        }
    }

    proptest! {
        #[test]
        fn agrees_with_reference(key in proptest::collection::vec(any::<u8>(), 0..64)) {
            let h = aphash48(&key);
            prop_assert!(h.value() <= ANON_MASK);
            prop_assert_eq!(h.value(), reference(&key));
        }
    }
}
