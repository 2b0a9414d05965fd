//! Per-set filter structures: count Bloom filters, binary sketches, and the
//! inverted index over counter positions.
//!
//! A set's count filter is the elementwise sum of its member codes; its
//! sketch is their OR. The inverted index lists, for every bit position,
//! the sets whose counter there is nonzero, sorted by count descending so a
//! minimum-count scan can stop early.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hash::{EncodedDatabase, SparseBinaryCode};

/// Length-`b` counter array; counter `i` is the number of member codes with
/// bit `i` set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountBloomFilter {
    counters: Vec<u32>,
}

impl CountBloomFilter {
    /// Sums the given codes; all must have length `b`.
    pub fn from_codes(codes: &[SparseBinaryCode], b: usize) -> Result<Self> {
        let mut counters = vec![0u32; b];
        for code in codes {
            if code.length() != b {
                return Err(Error::CodeLengthMismatch {
                    expected: b,
                    got: code.length(),
                });
            }
            for &bit in code.set_bits() {
                counters[bit as usize] += 1;
            }
        }
        Ok(CountBloomFilter { counters })
    }

    /// Rebuilds a filter from raw counters (used by storage decode).
    pub fn from_counters(counters: Vec<u32>) -> Self {
        CountBloomFilter { counters }
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    /// Sum of all counters; equals `m * l_wta` for a set of `m` WTA codes.
    pub fn total(&self) -> u64 {
        self.counters.iter().map(|&c| c as u64).sum()
    }

    /// Positions sorted by counter value descending, lower position on ties.
    pub fn positions_by_count_desc(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.counters.len() as u32).collect();
        order.sort_by(|&i, &j| {
            self.counters[j as usize]
                .cmp(&self.counters[i as usize])
                .then(i.cmp(&j))
        });
        order
    }
}

/// Length-`b` bitmap; bit `i` is set iff some member code has bit `i` set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySketch {
    len_bits: usize,
    words: Vec<u64>,
}

impl BinarySketch {
    /// ORs the given codes; all must have length `b`.
    pub fn from_codes(codes: &[SparseBinaryCode], b: usize) -> Result<Self> {
        let mut sketch = BinarySketch::zeroed(b);
        for code in codes {
            if code.length() != b {
                return Err(Error::CodeLengthMismatch {
                    expected: b,
                    got: code.length(),
                });
            }
            for &bit in code.set_bits() {
                sketch.words[bit as usize / 64] |= 1u64 << (bit % 64);
            }
        }
        Ok(sketch)
    }

    pub fn zeroed(len_bits: usize) -> Self {
        BinarySketch {
            len_bits,
            words: vec![0; len_bits.div_ceil(64)],
        }
    }

    /// Rebuilds a sketch from raw words (used by storage decode). Bits past
    /// `len_bits` must be clear.
    pub fn from_words(len_bits: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != len_bits.div_ceil(64) {
            return Err(Error::integrity("sketch word count mismatch"));
        }
        let tail_bits = len_bits % 64;
        if tail_bits != 0 {
            let mask = !0u64 << tail_bits;
            if words.last().is_some_and(|w| w & mask != 0) {
                return Err(Error::integrity("sketch has bits beyond its length"));
            }
        }
        Ok(BinarySketch { len_bits, words })
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Popcount of the AND of two sketches (collision count).
    pub fn and_popcount(&self, other: &BinarySketch) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    fn check_len(&self, other: &BinarySketch) -> Result<()> {
        if self.len_bits != other.len_bits {
            return Err(Error::CodeLengthMismatch {
                expected: self.len_bits,
                got: other.len_bits,
            });
        }
        Ok(())
    }
}

/// Hamming distance between two sketches: popcount of their XOR.
pub fn sketch_hamming(a: &BinarySketch, b: &BinarySketch) -> Result<usize> {
    a.check_len(b)?;
    Ok(a.words
        .iter()
        .zip(b.words.iter())
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum())
}

/// One count filter per set, in database order.
pub fn build_count_filters(enc: &EncodedDatabase) -> Vec<CountBloomFilter> {
    let b = enc.code_length();
    enc.per_set()
        .par_iter()
        .map(|codes| CountBloomFilter::from_codes(codes, b).expect("uniform code length"))
        .collect()
}

/// One sketch per set, in database order.
pub fn build_sketches(enc: &EncodedDatabase) -> Vec<BinarySketch> {
    let b = enc.code_length();
    enc.per_set()
        .par_iter()
        .map(|codes| BinarySketch::from_codes(codes, b).expect("uniform code length"))
        .collect()
}

/// An inverted-list entry: the owning set's id and its counter value at the
/// list's position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub set_id: u64,
    pub count: u32,
}

/// Per-bit-position lists of `(set_id, count)` with count >= 1, sorted by
/// count descending, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedIndex {
    lists: Vec<Vec<IndexEntry>>,
}

impl InvertedIndex {
    /// Assembles lists from raw parts (used by storage decode); ordering and
    /// positivity are validated.
    pub fn from_lists(lists: Vec<Vec<IndexEntry>>) -> Result<Self> {
        for list in &lists {
            for pair in list.windows(2) {
                let ordered = pair[0].count > pair[1].count
                    || (pair[0].count == pair[1].count && pair[0].set_id < pair[1].set_id);
                if !ordered {
                    return Err(Error::integrity("inverted list out of order"));
                }
            }
            if list.iter().any(|e| e.count == 0) {
                return Err(Error::integrity("inverted list stores a zero count"));
            }
        }
        Ok(InvertedIndex { lists })
    }

    /// Number of positions (`b`).
    pub fn num_positions(&self) -> usize {
        self.lists.len()
    }

    pub fn list(&self, position: usize) -> &[IndexEntry] {
        &self.lists[position]
    }

    pub fn lists(&self) -> &[Vec<IndexEntry>] {
        &self.lists
    }

    /// Ids in `position`'s list whose count is at least `min_count`; the
    /// descending sort allows an early stop.
    pub fn ids_with_min_count(&self, position: usize, min_count: u32) -> impl Iterator<Item = u64> + '_ {
        self.lists[position]
            .iter()
            .take_while(move |e| e.count >= min_count.max(1))
            .map(|e| e.set_id)
    }
}

/// Builds the inverted index for filters aligned with `ids`. Zero counters
/// are omitted: they can never pass a minimum-count scan with `M >= 1`.
pub fn build_inverted_index(ids: &[u64], filters: &[CountBloomFilter]) -> Result<InvertedIndex> {
    if ids.len() != filters.len() {
        return Err(Error::invalid(
            "ids",
            format!("{} ids for {} filters", ids.len(), filters.len()),
        ));
    }
    if filters.is_empty() {
        return Err(Error::Empty { what: "filters" });
    }
    let b = filters[0].len();
    for f in filters {
        if f.len() != b {
            return Err(Error::CodeLengthMismatch {
                expected: b,
                got: f.len(),
            });
        }
    }
    let mut lists: Vec<Vec<IndexEntry>> = vec![Vec::new(); b];
    for (&id, filter) in ids.iter().zip(filters.iter()) {
        for (pos, &count) in filter.counters().iter().enumerate() {
            if count > 0 {
                lists[pos].push(IndexEntry { set_id: id, count });
            }
        }
    }
    for list in &mut lists {
        list.sort_by(|a, b| b.count.cmp(&a.count).then(a.set_id.cmp(&b.set_id)));
    }
    Ok(InvertedIndex { lists })
}
