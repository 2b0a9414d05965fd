//! Sparse storage layouts for the count-filter matrix.
//!
//! The `n x b` matrix of counters is sparse for WTA codes, so it can be
//! stored dense, as coordinate triples (COO), or in compressed sparse row
//! form (CSR). All layouts round-trip bit-exactly; `payload_bytes` reports
//! raw array bytes only, which is what makes the layouts comparable.

use crate::bloom::CountBloomFilter;
use crate::error::{Error, Result};

/// Storage layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreLayout {
    Dense,
    Coo,
    Csr,
}

impl StoreLayout {
    pub fn name(&self) -> &'static str {
        match self {
            StoreLayout::Dense => "dense",
            StoreLayout::Coo => "coo",
            StoreLayout::Csr => "csr",
        }
    }
}

/// An encoded filter matrix in one of the three layouts.
///
/// Rows are sets, columns are bit positions; values are u32 counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SparseStore {
    Dense {
        rows: usize,
        cols: usize,
        values: Vec<u32>,
    },
    Coo {
        rows: usize,
        cols: usize,
        /// (row, col, value) triples in row-major order; values nonzero.
        entries: Vec<(u32, u32, u32)>,
    },
    Csr {
        rows: usize,
        cols: usize,
        /// `rows + 1` offsets into `col_idx`/`values`.
        row_ptr: Vec<u32>,
        col_idx: Vec<u32>,
        values: Vec<u32>,
    },
}

impl SparseStore {
    pub fn layout(&self) -> StoreLayout {
        match self {
            SparseStore::Dense { .. } => StoreLayout::Dense,
            SparseStore::Coo { .. } => StoreLayout::Coo,
            SparseStore::Csr { .. } => StoreLayout::Csr,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            SparseStore::Dense { rows, cols, .. }
            | SparseStore::Coo { rows, cols, .. }
            | SparseStore::Csr { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// Raw array bytes of the layout, excluding any container framing.
    pub fn payload_bytes(&self) -> usize {
        match self {
            SparseStore::Dense { values, .. } => values.len() * 4,
            SparseStore::Coo { entries, .. } => entries.len() * 12,
            SparseStore::Csr {
                row_ptr,
                col_idx,
                values,
                ..
            } => (row_ptr.len() + col_idx.len() + values.len()) * 4,
        }
    }
}

/// Encodes a filter sequence (one row per filter) into the given layout.
pub fn encode_store(filters: &[CountBloomFilter], layout: StoreLayout) -> Result<SparseStore> {
    if filters.is_empty() {
        return Err(Error::Empty { what: "filters" });
    }
    let rows = filters.len();
    let cols = filters[0].len();
    for f in filters {
        if f.len() != cols {
            return Err(Error::CodeLengthMismatch {
                expected: cols,
                got: f.len(),
            });
        }
    }
    Ok(match layout {
        StoreLayout::Dense => {
            let mut values = Vec::with_capacity(rows * cols);
            for f in filters {
                values.extend_from_slice(f.counters());
            }
            SparseStore::Dense { rows, cols, values }
        }
        StoreLayout::Coo => {
            let mut entries = Vec::new();
            for (r, f) in filters.iter().enumerate() {
                for (c, &v) in f.counters().iter().enumerate() {
                    if v != 0 {
                        entries.push((r as u32, c as u32, v));
                    }
                }
            }
            SparseStore::Coo { rows, cols, entries }
        }
        StoreLayout::Csr => {
            let mut row_ptr = Vec::with_capacity(rows + 1);
            let mut col_idx = Vec::new();
            let mut values = Vec::new();
            row_ptr.push(0);
            for f in filters {
                for (c, &v) in f.counters().iter().enumerate() {
                    if v != 0 {
                        col_idx.push(c as u32);
                        values.push(v);
                    }
                }
                row_ptr.push(col_idx.len() as u32);
            }
            SparseStore::Csr {
                rows,
                cols,
                row_ptr,
                col_idx,
                values,
            }
        }
    })
}

/// Decodes a store back into filters, validating structural integrity.
pub fn decode_store(store: &SparseStore) -> Result<Vec<CountBloomFilter>> {
    let (rows, cols) = store.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::integrity("empty store shape"));
    }
    match store {
        SparseStore::Dense { values, .. } => {
            if values.len() != rows * cols {
                return Err(Error::integrity("dense value count mismatch"));
            }
            Ok(values
                .chunks_exact(cols)
                .map(|chunk| CountBloomFilter::from_counters(chunk.to_vec()))
                .collect())
        }
        SparseStore::Coo { entries, .. } => {
            let mut counters = vec![vec![0u32; cols]; rows];
            let mut prev: Option<(u32, u32)> = None;
            for &(r, c, v) in entries {
                if r as usize >= rows || c as usize >= cols {
                    return Err(Error::integrity("coo coordinate out of range"));
                }
                if v == 0 {
                    return Err(Error::integrity("coo stores a zero value"));
                }
                if let Some(p) = prev {
                    if (r, c) <= p {
                        return Err(Error::integrity("coo entries not strictly ordered"));
                    }
                }
                prev = Some((r, c));
                counters[r as usize][c as usize] = v;
            }
            Ok(counters.into_iter().map(CountBloomFilter::from_counters).collect())
        }
        SparseStore::Csr {
            row_ptr,
            col_idx,
            values,
            ..
        } => {
            if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
                return Err(Error::integrity("csr row pointers malformed"));
            }
            let nnz = *row_ptr.last().unwrap() as usize;
            if col_idx.len() != nnz || values.len() != nnz {
                return Err(Error::integrity("csr array lengths inconsistent"));
            }
            let mut filters = Vec::with_capacity(rows);
            for r in 0..rows {
                let (start, end) = (row_ptr[r] as usize, row_ptr[r + 1] as usize);
                if start > end || end > nnz {
                    return Err(Error::integrity("csr row pointers not monotone"));
                }
                let mut row = vec![0u32; cols];
                let mut prev_col: Option<u32> = None;
                for i in start..end {
                    let c = col_idx[i];
                    if c as usize >= cols {
                        return Err(Error::integrity("csr column index out of range"));
                    }
                    if prev_col.is_some_and(|p| c <= p) {
                        return Err(Error::integrity("csr columns not strictly increasing"));
                    }
                    if values[i] == 0 {
                        return Err(Error::integrity("csr stores a zero value"));
                    }
                    prev_col = Some(c);
                    row[c as usize] = values[i];
                }
                filters.push(CountBloomFilter::from_counters(row));
            }
            Ok(filters)
        }
    }
}
