//! Binary persistence for datasets and index bundles.
//!
//! Both formats are little-endian and versioned.
//!
//! Dataset (`BVSS`): magic, u32 version, u32 dim, u64 set count, then per
//! set a u64 id, u32 cardinality, and the raw f32 components. A JSON-lines
//! alternative (one object per line: `{"id": .., "vectors": [[..], ..]}`)
//! is accepted on ingest; the binary form is canonical.
//!
//! Index (`BVIX`): magic, u32 version, u32 section count, then tagged
//! sections each carrying a length, payload, and CRC-32 of the payload.
//! The projection matrix is stored explicitly so trained projections
//! persist; count filters are stored in CSR form.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::bloom::{
    build_count_filters, build_inverted_index, build_sketches, BinarySketch, CountBloomFilter,
    IndexEntry, InvertedIndex,
};
use crate::dataset::{Vector, VectorSet, VectorSetDatabase};
use crate::error::{Error, Result};
use crate::hash::{encode_database, ProjectionMatrix, Provenance};
use crate::sparse::{decode_store, encode_store, SparseStore, StoreLayout};

const DATASET_MAGIC: &[u8; 4] = b"BVSS";
const INDEX_MAGIC: &[u8; 4] = b"BVIX";
const DATASET_VERSION: u32 = 1;
const INDEX_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Byte-level helpers

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Parse {
                offset: self.offset(),
                message: format!("unexpected end of file while reading {what}"),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

// ---------------------------------------------------------------------------
// Dataset format

/// Serializes a database into the binary dataset layout.
pub fn dataset_to_bytes(db: &VectorSetDatabase) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    put_u32(&mut out, DATASET_VERSION);
    put_u32(&mut out, db.dim() as u32);
    put_u64(&mut out, db.len() as u64);
    for set in db.sets() {
        put_u64(&mut out, set.id());
        put_u32(&mut out, set.len() as u32);
        for v in set.vectors() {
            for &c in v.components() {
                put_f32(&mut out, c);
            }
        }
    }
    out
}

/// Parses the binary dataset layout.
pub fn dataset_from_bytes(buf: &[u8]) -> Result<VectorSetDatabase> {
    let mut cur = Cursor::new(buf);
    let magic = cur.take(4, "magic")?;
    if magic != DATASET_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic {magic:?}, expected BVSS"),
        });
    }
    let version = cur.u32("version")?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch {
            expected: DATASET_VERSION,
            found: version,
        });
    }
    let dim = cur.u32("dim")? as usize;
    let n = cur.u64("set count")?;
    if dim == 0 || n == 0 {
        return Err(Error::Parse {
            offset: cur.offset(),
            message: "dim and set count must be positive".into(),
        });
    }
    let mut sets = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let id = cur.u64("set id")?;
        let m = cur.u32("set cardinality")? as usize;
        if m == 0 {
            return Err(Error::Parse {
                offset: cur.offset() - 4,
                message: format!("set {id} declares zero vectors"),
            });
        }
        let mut vectors = Vec::with_capacity(m);
        for _ in 0..m {
            let mut components = Vec::with_capacity(dim);
            for _ in 0..dim {
                let at = cur.offset();
                let c = cur.f32("component")?;
                if !c.is_finite() {
                    return Err(Error::Parse {
                        offset: at,
                        message: format!("non-finite component in set {id}"),
                    });
                }
                components.push(c);
            }
            vectors.push(Vector::new(components)?);
        }
        sets.push(VectorSet::new(id, vectors)?);
    }
    if cur.remaining() != 0 {
        return Err(Error::integrity(format!(
            "{} trailing bytes after declared payload",
            cur.remaining()
        )));
    }
    VectorSetDatabase::new(sets)
}

/// Writes the binary dataset file.
pub fn write_dataset(db: &VectorSetDatabase, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_bytes(db))?;
    Ok(())
}

/// Reads the binary dataset file.
pub fn read_dataset(path: &Path) -> Result<VectorSetDatabase> {
    let buf = std::fs::read(path)?;
    dataset_from_bytes(&buf)
}

#[derive(Deserialize)]
struct JsonSet {
    id: u64,
    vectors: Vec<Vec<f32>>,
}

/// Reads the JSON-lines interop format: one set per line.
pub fn read_dataset_jsonl(path: &Path) -> Result<VectorSetDatabase> {
    let text = std::fs::read_to_string(path)?;
    let mut sets = Vec::new();
    let mut offset = 0u64;
    for line in text.lines() {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let parsed: JsonSet = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                offset,
                message: e.to_string(),
            })?;
            let vectors = parsed
                .vectors
                .into_iter()
                .map(Vector::new)
                .collect::<Result<Vec<_>>>()?;
            sets.push(VectorSet::new(parsed.id, vectors)?);
        }
        offset += line.len() as u64 + 1;
    }
    VectorSetDatabase::new(sets)
}

/// Reads either dataset format, sniffing the binary magic.
pub fn read_dataset_auto(path: &Path) -> Result<VectorSetDatabase> {
    let buf = std::fs::read(path)?;
    if buf.len() >= 4 && &buf[..4] == DATASET_MAGIC {
        dataset_from_bytes(&buf)
    } else {
        read_dataset_jsonl(path)
    }
}

// ---------------------------------------------------------------------------
// Index bundle

/// Parameters an index was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    /// Filter length `b`.
    pub code_length: usize,
    pub l_wta: usize,
    pub seed: u64,
    pub provenance: Provenance,
}

/// Everything needed to serve cascade queries: the projection, per-set
/// filters and sketches, the inverted index, and the id table aligned with
/// the structures.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub params: IndexParams,
    pub projection: ProjectionMatrix,
    pub count_filters: Vec<CountBloomFilter>,
    pub sketches: Vec<BinarySketch>,
    pub inverted: InvertedIndex,
    pub ids: Vec<u64>,
}

/// Wall-clock cost of each build stage.
#[derive(Debug, Clone, Copy)]
pub struct BuildTimings {
    pub hashing: Duration,
    pub count_filters: Duration,
    pub sketches: Duration,
    pub inverted_index: Duration,
}

impl IndexBundle {
    /// Builds all filter structures for `db` under the given projection.
    pub fn build(
        db: &VectorSetDatabase,
        projection: ProjectionMatrix,
        l_wta: usize,
    ) -> Result<Self> {
        Ok(Self::build_timed(db, projection, l_wta)?.0)
    }

    /// As [`IndexBundle::build`], also reporting per-stage wall time.
    pub fn build_timed(
        db: &VectorSetDatabase,
        projection: ProjectionMatrix,
        l_wta: usize,
    ) -> Result<(Self, BuildTimings)> {
        let t0 = Instant::now();
        let enc = encode_database(db, &projection, l_wta)?;
        let hashing = t0.elapsed();

        let t1 = Instant::now();
        let count_filters = build_count_filters(&enc);
        let count_time = t1.elapsed();

        let t2 = Instant::now();
        let sketches = build_sketches(&enc);
        let sketch_time = t2.elapsed();

        let ids = db.ids();
        let t3 = Instant::now();
        let inverted = build_inverted_index(&ids, &count_filters)?;
        let invert_time = t3.elapsed();

        let params = IndexParams {
            code_length: projection.code_length(),
            l_wta,
            seed: projection.seed(),
            provenance: projection.provenance(),
        };
        Ok((
            IndexBundle {
                params,
                projection,
                count_filters,
                sketches,
                inverted,
                ids,
            },
            BuildTimings {
                hashing,
                count_filters: count_time,
                sketches: sketch_time,
                inverted_index: invert_time,
            },
        ))
    }
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    put_u64(out, payload.len() as u64);
    out.extend_from_slice(payload);
    put_u32(out, crc32fast::hash(payload));
}

/// Serializes an index bundle.
pub fn index_to_bytes(bundle: &IndexBundle) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(INDEX_MAGIC);
    put_u32(&mut out, INDEX_VERSION);
    put_u32(&mut out, 6); // section count

    // PRMS
    let mut prms = Vec::new();
    put_u32(&mut prms, bundle.params.code_length as u32);
    put_u32(&mut prms, bundle.params.l_wta as u32);
    put_u64(&mut prms, bundle.params.seed);
    prms.push(match bundle.params.provenance {
        Provenance::RandomSparse => 0,
        Provenance::Trained => 1,
    });
    section(&mut out, b"PRMS", &prms);

    // PROJ
    let mut proj = Vec::new();
    put_u32(&mut proj, bundle.projection.code_length() as u32);
    put_u32(&mut proj, bundle.projection.input_dim() as u32);
    for &w in bundle.projection.weights() {
        put_f32(&mut proj, w);
    }
    section(&mut out, b"PROJ", &proj);

    // CFLT: count filters in CSR form.
    let store = encode_store(&bundle.count_filters, StoreLayout::Csr)?;
    let mut cflt = Vec::new();
    if let SparseStore::Csr {
        rows,
        cols,
        row_ptr,
        col_idx,
        values,
    } = &store
    {
        put_u32(&mut cflt, *rows as u32);
        put_u32(&mut cflt, *cols as u32);
        put_u64(&mut cflt, values.len() as u64);
        for &p in row_ptr {
            put_u32(&mut cflt, p);
        }
        for &c in col_idx {
            put_u32(&mut cflt, c);
        }
        for &v in values {
            put_u32(&mut cflt, v);
        }
    }
    section(&mut out, b"CFLT", &cflt);

    // SKCH
    let mut skch = Vec::new();
    put_u32(&mut skch, bundle.sketches.len() as u32);
    let len_bits = bundle.params.code_length;
    put_u32(&mut skch, len_bits as u32);
    for s in &bundle.sketches {
        if s.len_bits() != len_bits {
            return Err(Error::invalid("sketches", "inconsistent sketch length"));
        }
        for &w in s.words() {
            put_u64(&mut skch, w);
        }
    }
    section(&mut out, b"SKCH", &skch);

    // IIDX
    let mut iidx = Vec::new();
    put_u32(&mut iidx, bundle.inverted.num_positions() as u32);
    for list in bundle.inverted.lists() {
        put_u32(&mut iidx, list.len() as u32);
    }
    for list in bundle.inverted.lists() {
        for e in list {
            put_u64(&mut iidx, e.set_id);
            put_u32(&mut iidx, e.count);
        }
    }
    section(&mut out, b"IIDX", &iidx);

    // IDTB
    let mut idtb = Vec::new();
    put_u64(&mut idtb, bundle.ids.len() as u64);
    for &id in &bundle.ids {
        put_u64(&mut idtb, id);
    }
    section(&mut out, b"IDTB", &idtb);

    Ok(out)
}

struct Section<'a> {
    tag: [u8; 4],
    payload: &'a [u8],
}

fn read_sections<'a>(cur: &mut Cursor<'a>, count: u32) -> Result<Vec<Section<'a>>> {
    let mut sections = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let tag: [u8; 4] = cur.take(4, "section tag")?.try_into().unwrap();
        let len = cur.u64("section length")? as usize;
        let payload = cur.take(len, "section payload")?;
        let stored_crc = cur.u32("section crc")?;
        let actual = crc32fast::hash(payload);
        if stored_crc != actual {
            return Err(Error::integrity(format!(
                "section {} checksum mismatch (stored {stored_crc:#010x}, computed {actual:#010x})",
                String::from_utf8_lossy(&tag)
            )));
        }
        sections.push(Section { tag, payload });
    }
    Ok(sections)
}

fn find_section<'a>(sections: &'a [Section<'a>], tag: &[u8; 4]) -> Result<&'a [u8]> {
    sections
        .iter()
        .find(|s| &s.tag == tag)
        .map(|s| s.payload)
        .ok_or_else(|| {
            Error::integrity(format!(
                "missing section {}",
                String::from_utf8_lossy(tag)
            ))
        })
}

/// Parses an index bundle, validating per-section checksums.
pub fn index_from_bytes(buf: &[u8]) -> Result<IndexBundle> {
    let mut cur = Cursor::new(buf);
    let magic = cur.take(4, "magic")?;
    if magic != INDEX_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad magic {magic:?}, expected BVIX"),
        });
    }
    let version = cur.u32("version")?;
    if version != INDEX_VERSION {
        return Err(Error::VersionMismatch {
            expected: INDEX_VERSION,
            found: version,
        });
    }
    let n_sections = cur.u32("section count")?;
    let sections = read_sections(&mut cur, n_sections)?;
    if cur.remaining() != 0 {
        return Err(Error::integrity("trailing bytes after final section"));
    }

    // PRMS
    let mut c = Cursor::new(find_section(&sections, b"PRMS")?);
    let code_length = c.u32("code length")? as usize;
    let l_wta = c.u32("l_wta")? as usize;
    let seed = c.u64("seed")?;
    let provenance = match c.u8("provenance")? {
        0 => Provenance::RandomSparse,
        1 => Provenance::Trained,
        other => {
            return Err(Error::integrity(format!("unknown provenance tag {other}")));
        }
    };

    // PROJ
    let mut c = Cursor::new(find_section(&sections, b"PROJ")?);
    let rows = c.u32("projection rows")? as usize;
    let cols = c.u32("projection cols")? as usize;
    let mut weights = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        weights.push(c.f32("projection weight")?);
    }
    let projection = ProjectionMatrix::from_parts(rows, cols, weights, provenance, seed)?;
    if rows != code_length {
        return Err(Error::integrity("projection rows disagree with params"));
    }

    // CFLT
    let mut c = Cursor::new(find_section(&sections, b"CFLT")?);
    let f_rows = c.u32("filter rows")? as usize;
    let f_cols = c.u32("filter cols")? as usize;
    let nnz = c.u64("filter nnz")? as usize;
    let mut row_ptr = Vec::with_capacity(f_rows + 1);
    for _ in 0..=f_rows {
        row_ptr.push(c.u32("row pointer")?);
    }
    let mut col_idx = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        col_idx.push(c.u32("column index")?);
    }
    let mut values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        values.push(c.u32("counter value")?);
    }
    let count_filters = decode_store(&SparseStore::Csr {
        rows: f_rows,
        cols: f_cols,
        row_ptr,
        col_idx,
        values,
    })?;
    if f_cols != code_length {
        return Err(Error::integrity("filter width disagrees with params"));
    }

    // SKCH
    let mut c = Cursor::new(find_section(&sections, b"SKCH")?);
    let n_sketches = c.u32("sketch count")? as usize;
    let len_bits = c.u32("sketch bits")? as usize;
    if len_bits != code_length {
        return Err(Error::integrity("sketch width disagrees with params"));
    }
    let words_per = len_bits.div_ceil(64);
    let mut sketches = Vec::with_capacity(n_sketches);
    for _ in 0..n_sketches {
        let mut words = Vec::with_capacity(words_per);
        for _ in 0..words_per {
            words.push(c.u64("sketch word")?);
        }
        sketches.push(BinarySketch::from_words(len_bits, words)?);
    }

    // IIDX
    let mut c = Cursor::new(find_section(&sections, b"IIDX")?);
    let positions = c.u32("index positions")? as usize;
    if positions != code_length {
        return Err(Error::integrity("index width disagrees with params"));
    }
    let mut lens = Vec::with_capacity(positions);
    for _ in 0..positions {
        lens.push(c.u32("list length")? as usize);
    }
    let mut lists = Vec::with_capacity(positions);
    for &len in &lens {
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            let set_id = c.u64("entry id")?;
            let count = c.u32("entry count")?;
            list.push(IndexEntry { set_id, count });
        }
        lists.push(list);
    }
    let inverted = InvertedIndex::from_lists(lists)?;

    // IDTB
    let mut c = Cursor::new(find_section(&sections, b"IDTB")?);
    let n_ids = c.u64("id count")? as usize;
    let mut ids = Vec::with_capacity(n_ids);
    for _ in 0..n_ids {
        ids.push(c.u64("set id")?);
    }
    if ids.len() != count_filters.len() || ids.len() != sketches.len() {
        return Err(Error::integrity("id table misaligned with structures"));
    }

    Ok(IndexBundle {
        params: IndexParams {
            code_length,
            l_wta,
            seed,
            provenance,
        },
        projection,
        count_filters,
        sketches,
        inverted,
        ids,
    })
}

/// Writes an index bundle to disk.
pub fn save_index(bundle: &IndexBundle, path: &Path) -> Result<()> {
    std::fs::write(path, index_to_bytes(bundle)?)?;
    Ok(())
}

/// Reads an index bundle from disk.
pub fn load_index(path: &Path) -> Result<IndexBundle> {
    let buf = std::fs::read(path)?;
    index_from_bytes(&buf)
}
