//! Record-level Bloom filter encoding (CLK) and Dice similarity.
//!
//! Every quasi-identifier value is split into q-grams, and all grams of a
//! record are hash-mapped into one shared bit vector. Similarity between a
//! set of filters is the generalised Dice coefficient `p * z / sum(x_i)`,
//! where `z` counts bit positions set in all `p` filters and `x_i` is the
//! number of set bits in filter `i`. The same value can be recovered from the
//! counting Bloom filter (position-wise sum) of the set alone, which is what
//! lets a linkage unit score candidates from blinded sums.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Parameters shared by every party that encodes records for one linkage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingParams {
    /// Filter length in bits.
    pub bf_length: usize,
    /// Number of hash positions per q-gram.
    pub num_hashes: usize,
    /// q-gram length in characters.
    pub gram_length: usize,
    /// Keys for the two base hash functions of the double-hashing scheme.
    pub hash_seeds: (u64, u64),
    /// Distinguishes re-encodings of the same data (one salt per protocol round).
    pub salt: Vec<u8>,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            bf_length: 1000,
            num_hashes: 30,
            gram_length: 2,
            hash_seeds: (0x6d70_7072_6c00_0001, 0x6d70_7072_6c00_0002),
            salt: Vec::new(),
        }
    }
}

impl EncodingParams {
    pub fn new(bf_length: usize, num_hashes: usize, gram_length: usize) -> Result<Self> {
        let params = Self {
            bf_length,
            num_hashes,
            gram_length,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_seeds(mut self, h1: u64, h2: u64) -> Self {
        self.hash_seeds = (h1, h2);
        self
    }

    pub fn with_salt(mut self, salt: impl Into<Vec<u8>>) -> Self {
        self.salt = salt.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bf_length == 0 {
            return Err(Error::InvalidParameter("bf_length must be at least 1".into()));
        }
        if self.bf_length > u32::MAX as usize {
            return Err(Error::InvalidParameter("bf_length does not fit in 32 bits".into()));
        }
        if self.num_hashes == 0 {
            return Err(Error::InvalidParameter("num_hashes must be at least 1".into()));
        }
        if self.gram_length == 0 {
            return Err(Error::InvalidParameter("gram_length must be at least 1".into()));
        }
        Ok(())
    }

    /// First four bytes of SHA-256 over the salt, little-endian.
    pub fn salt_digest(&self) -> u32 {
        let digest = Sha256::digest(&self.salt);
        u32::from_le_bytes([digest[0], digest[1], digest[2], digest[3]])
    }

    pub fn tag(&self) -> FilterTag {
        FilterTag {
            num_hashes: self.num_hashes as u32,
            salt_digest: self.salt_digest(),
        }
    }

    fn keyed_hash(&self, seed: u64, gram: &str) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update((self.salt.len() as u64).to_le_bytes());
        hasher.update(&self.salt);
        hasher.update(gram.as_bytes());
        let digest = hasher.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(word)
    }

    /// Bit positions `(h1(s) + i * h2(s)) mod l` for `i` in `1..=k`.
    pub fn positions(&self, gram: &str) -> impl Iterator<Item = usize> + '_ {
        let l = self.bf_length as u128;
        let h1 = self.keyed_hash(self.hash_seeds.0, gram) as u128 % l;
        let h2 = self.keyed_hash(self.hash_seeds.1, gram) as u128 % l;
        (1..=self.num_hashes as u128).map(move |i| ((h1 + i * h2) % l) as usize)
    }
}

/// Metadata carried alongside a filter so a serialized encoding can be
/// checked against the parameters that produced it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct FilterTag {
    pub num_hashes: u32,
    pub salt_digest: u32,
}

/// Distinct contiguous q-grams of the lowercased, trimmed value.
pub fn extract_qgrams(value: &str, params: &EncodingParams) -> BTreeSet<String> {
    qgrams(value, params.gram_length)
}

pub(crate) fn qgrams(value: &str, q: usize) -> BTreeSet<String> {
    let chars: Vec<char> = value.trim().to_lowercase().chars().collect();
    if q == 0 || chars.len() < q {
        return BTreeSet::new();
    }
    chars.windows(q).map(|w| w.iter().collect()).collect()
}

/// Encodes all q-grams of all quasi-identifier values into one filter.
pub fn encode_record<S: AsRef<str>>(qid_values: &[S], params: &EncodingParams) -> Result<BloomFilter> {
    params.validate()?;
    if qid_values.iter().all(|v| v.as_ref().trim().is_empty()) {
        return Err(Error::EmptyRecord);
    }
    let mut filter = BloomFilter::new(params.bf_length);
    filter.tag = params.tag();
    for value in qid_values {
        for gram in extract_qgrams(value.as_ref(), params) {
            for pos in params.positions(&gram) {
                filter.set(pos);
            }
        }
    }
    Ok(filter)
}

/// Fixed-length bit vector with a cached population count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BloomFilter {
    words: Vec<u64>,
    len: usize,
    ones: usize,
    pub tag: FilterTag,
}

impl BloomFilter {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
            ones: 0,
            tag: FilterTag::default(),
        }
    }

    pub fn from_positions(len: usize, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut filter = Self::new(len);
        for pos in positions {
            filter.set(pos);
        }
        filter
    }

    /// Builds a filter from a string of `0`/`1` characters; other characters are skipped.
    pub fn from_bit_str(bits: &str) -> Self {
        let bits: Vec<bool> = bits
            .chars()
            .filter_map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        let mut filter = Self::new(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            filter.set(i);
        }
        filter
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of set bits.
    pub fn cardinality(&self) -> usize {
        self.ones
    }

    pub fn set(&mut self, pos: usize) {
        assert!(pos < self.len, "bit {pos} out of range for length {}", self.len);
        let (w, b) = (pos / 64, pos % 64);
        let mask = 1u64 << b;
        if self.words[w] & mask == 0 {
            self.words[w] |= mask;
            self.ones += 1;
        }
    }

    pub fn get(&self, pos: usize) -> bool {
        pos < self.len && self.words[pos / 64] >> (pos % 64) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Number of positions set in both filters.
    pub fn common_ones(&self, other: &BloomFilter) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Pairwise Dice coefficient. Lengths must match.
    pub fn dice(&self, other: &BloomFilter) -> f64 {
        debug_assert_eq!(self.len, other.len);
        dice_value(2, self.common_ones(other), self.ones + other.ones)
    }

    /// Serializes as a 16-byte header (magic, length, hash count, salt
    /// digest; all little-endian) followed by a `u32` byte count and the
    /// packed bits, least significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let byte_len = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(HEADER_LEN + 4 + byte_len);
        out.extend_from_slice(&FILTER_MAGIC);
        out.extend_from_slice(&(self.len as u32).to_le_bytes());
        out.extend_from_slice(&self.tag.num_hashes.to_le_bytes());
        out.extend_from_slice(&self.tag.salt_digest.to_le_bytes());
        out.extend_from_slice(&(byte_len as u32).to_le_bytes());
        let raw: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.extend_from_slice(&raw[..byte_len]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(Error::Decode(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if bytes[..4] != FILTER_MAGIC {
            return Err(Error::Decode("bad magic".into()));
        }
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let len = read_u32(4) as usize;
        let tag = FilterTag {
            num_hashes: read_u32(8),
            salt_digest: read_u32(12),
        };
        let byte_len = read_u32(16) as usize;
        if byte_len != len.div_ceil(8) {
            return Err(Error::Decode(format!(
                "byte count {byte_len} does not match length {len}"
            )));
        }
        let payload = &bytes[HEADER_LEN + 4..];
        if payload.len() != byte_len {
            return Err(Error::Decode(format!(
                "expected {byte_len} payload bytes, found {}",
                payload.len()
            )));
        }
        let mut filter = Self::new(len);
        filter.tag = tag;
        for (i, chunk) in payload.chunks(8).enumerate() {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            filter.words[i] = u64::from_le_bytes(word);
        }
        if !len.is_multiple_of(64) {
            let last = filter.words.len() - 1;
            if filter.words[last] >> (len % 64) != 0 {
                return Err(Error::Decode("bits set beyond filter length".into()));
            }
        }
        filter.ones = filter.words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(filter)
    }
}

const FILTER_MAGIC: [u8; 4] = *b"MPBF";
const HEADER_LEN: usize = 16;

fn dice_value(p: usize, common: usize, total_ones: usize) -> f64 {
    if total_ones == 0 {
        0.0
    } else {
        (p * common) as f64 / total_ones as f64
    }
}

fn check_lengths(filters: &[&BloomFilter]) -> Result<usize> {
    let len = filters.first().map(|f| f.len).unwrap_or(0);
    for f in filters {
        if f.len != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: f.len,
            });
        }
    }
    Ok(len)
}

/// Dice coefficient of two or more equal-length filters.
pub fn dice_bf<'a>(filters: impl IntoIterator<Item = &'a BloomFilter>) -> Result<f64> {
    let filters: Vec<&BloomFilter> = filters.into_iter().collect();
    if filters.len() < 2 {
        return Err(Error::TooFewFilters {
            needed: 2,
            got: filters.len(),
        });
    }
    check_lengths(&filters)?;
    let mut common = filters[0].words.clone();
    for f in &filters[1..] {
        for (c, w) in common.iter_mut().zip(&f.words) {
            *c &= w;
        }
    }
    let z: usize = common.iter().map(|w| w.count_ones() as usize).sum();
    let total: usize = filters.iter().map(|f| f.ones).sum();
    Ok(dice_value(filters.len(), z, total))
}

/// Position-wise sum of a set of filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingBloomFilter {
    counts: Vec<u32>,
    num_summands: usize,
}

impl CountingBloomFilter {
    /// Wraps counts produced elsewhere (for example by unblinding a secure sum).
    pub fn from_counts(counts: Vec<u32>, num_summands: usize) -> Result<Self> {
        if num_summands == 0 {
            return Err(Error::InvalidParameter(
                "a counting filter needs at least one summand".into(),
            ));
        }
        if let Some(c) = counts.iter().find(|&&c| c as usize > num_summands) {
            return Err(Error::InvalidParameter(format!(
                "count {c} exceeds the number of summands {num_summands}"
            )));
        }
        Ok(Self { counts, num_summands })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_summands(&self) -> usize {
        self.num_summands
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Positions where every summand has a 1-bit.
    pub fn full_positions(&self) -> usize {
        self.counts.iter().filter(|&&c| c as usize == self.num_summands).count()
    }
}

pub fn sum_to_cbf<'a>(filters: impl IntoIterator<Item = &'a BloomFilter>) -> Result<CountingBloomFilter> {
    let filters: Vec<&BloomFilter> = filters.into_iter().collect();
    if filters.is_empty() {
        return Err(Error::TooFewFilters { needed: 1, got: 0 });
    }
    let len = check_lengths(&filters)?;
    let mut counts = vec![0u32; len];
    for f in &filters {
        for pos in f.iter_ones() {
            counts[pos] += 1;
        }
    }
    Ok(CountingBloomFilter {
        counts,
        num_summands: filters.len(),
    })
}

/// Dice coefficient of the summed filters, computed from the sum alone.
pub fn dice_cbf(cbf: &CountingBloomFilter) -> Result<f64> {
    if cbf.num_summands < 2 {
        return Err(Error::TooFewFilters {
            needed: 2,
            got: cbf.num_summands,
        });
    }
    Ok(dice_value(cbf.num_summands, cbf.full_positions(), cbf.total() as usize))
}
