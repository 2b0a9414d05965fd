//! Query pipelines: the linear binary scan and the cascade-filtered search.
//!
//! Both pipelines share the same final stage: a candidate list whose size is
//! capped by the budget `c` is reranked with the exact set metric and the
//! top `k` are returned. They differ in how candidates are found.
//!
//! * The linear scan ranks every database set by a Hamming-based Hausdorff
//!   surrogate over the sparse codes.
//! * The cascade first harvests candidates from the inverted index using the
//!   query's strongest counter positions, then prunes them by sketch Hamming
//!   distance.
//!
//! All tie-breaks are fixed (lower position, then lower set id), so results
//! are fully deterministic and candidate sets grow monotonically with `c`.

use std::collections::HashSet;

use crate::bloom::{sketch_hamming, BinarySketch, CountBloomFilter, InvertedIndex};
use crate::dataset::{VectorSet, VectorSetDatabase};
use crate::distance::SetMetric;
use crate::error::{Error, Result};
use crate::hash::{encode_set, EncodedDatabase, ProjectionMatrix, SparseBinaryCode};

/// Query-time parameter bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Number of results to return.
    pub k: usize,
    /// Number of inverted lists accessed (`A`).
    pub access_lists: usize,
    /// Minimum stored count for a list entry to qualify (`M`).
    pub min_count: u32,
    /// Candidate budget: sets surviving to the exact rerank (`c`).
    pub candidate_budget: usize,
    /// Set bits per code.
    pub l_wta: usize,
    /// Code length in bits (`b`).
    pub code_length: usize,
    /// Exact metric used for the final rerank.
    pub metric: SetMetric,
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.code_length == 0 {
            return Err(Error::invalid("code_length", "must be positive"));
        }
        if self.l_wta == 0 || self.l_wta > self.code_length {
            return Err(Error::invalid(
                "l_wta",
                format!("{} not in 1..={}", self.l_wta, self.code_length),
            ));
        }
        if self.access_lists == 0 || self.access_lists > self.code_length {
            return Err(Error::invalid(
                "access_lists",
                format!("{} not in 1..={}", self.access_lists, self.code_length),
            ));
        }
        if self.k == 0 || self.k > self.candidate_budget {
            return Err(Error::invalid(
                "k",
                format!("{} not in 1..={}", self.k, self.candidate_budget),
            ));
        }
        Ok(())
    }
}

/// One ranked hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchHit {
    pub set_id: u64,
    pub distance: f64,
}

/// Ranked results plus per-query diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// `(set_id, exact distance)` ascending by distance, ties by id.
    pub hits: Vec<SearchHit>,
    /// Stage-1 survivors (`|F1|`); for the linear scan this is `n`.
    pub stage1_survivors: usize,
    /// Stage-2 survivors (`|F2|`), i.e. sets that reached the exact rerank.
    pub stage2_survivors: usize,
    /// Exact set-distance evaluations performed.
    pub exact_evaluations: usize,
    /// True when fewer than `k` candidates were available.
    pub truncated: bool,
}

impl SearchResult {
    pub fn ids(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.set_id).collect()
    }
}

/// Hausdorff aggregation over per-pair Hamming distances between two code
/// sets. Codes on both sides must share one bit length.
pub fn hamming_hausdorff(hq: &[SparseBinaryCode], hv: &[SparseBinaryCode]) -> Result<u64> {
    if hq.is_empty() || hv.is_empty() {
        return Err(Error::Empty { what: "code set" });
    }
    let b = hq[0].length();
    for code in hq.iter().chain(hv.iter()) {
        if code.length() != b {
            return Err(Error::CodeLengthMismatch {
                expected: b,
                got: code.length(),
            });
        }
    }
    let mut row_min = vec![u64::MAX; hq.len()];
    let mut col_min = vec![u64::MAX; hv.len()];
    for (i, q) in hq.iter().enumerate() {
        for (j, v) in hv.iter().enumerate() {
            let d = q.hamming(v)? as u64;
            row_min[i] = row_min[i].min(d);
            col_min[j] = col_min[j].min(d);
        }
    }
    let forward = row_min.into_iter().max().unwrap();
    let backward = col_min.into_iter().max().unwrap();
    Ok(forward.max(backward))
}

/// Linear-scan search: every set is scored with the Hamming surrogate, the
/// `c` best survive to the exact rerank.
pub fn biovss_search(
    query: &VectorSet,
    params: &SearchParams,
    db: &VectorSetDatabase,
    enc: &EncodedDatabase,
    w: &ProjectionMatrix,
) -> Result<SearchResult> {
    params.validate()?;
    check_structures(params, db, w)?;
    if enc.len() != db.len() {
        return Err(Error::invalid(
            "encoded database",
            format!("{} code groups for {} sets", enc.len(), db.len()),
        ));
    }
    let query_codes = encode_set(query, w, params.l_wta)?;

    let mut scored: Vec<(u64, u64)> = Vec::with_capacity(db.len()); // (surrogate, id)
    for (pos, set) in db.sets().iter().enumerate() {
        let d = hamming_hausdorff(&query_codes, enc.codes(pos))?;
        scored.push((d, set.id()));
    }
    scored.sort_unstable();
    scored.truncate(params.candidate_budget);

    let candidates: Vec<u64> = scored.into_iter().map(|(_, id)| id).collect();
    let stage1 = db.len();
    let stage2 = candidates.len();
    finish(query, params, db, candidates, stage1, stage2)
}

/// Cascade-filtered search.
///
/// Stage 0 builds the query's count filter and sketch. Stage 1 takes the
/// `A` positions with the largest query counters (ties toward the lower
/// position) and collects, across those inverted lists, the ids whose
/// stored count is at least `M`. Stage 2 keeps the `c` candidates with the
/// smallest sketch Hamming distance to the query sketch (ties by id).
/// Stage 3 reranks those exactly. An empty stage-1 harvest yields an empty
/// result with diagnostics, not an error.
pub fn biovss_pp_search(
    query: &VectorSet,
    params: &SearchParams,
    db: &VectorSetDatabase,
    index: &InvertedIndex,
    sketches: &[BinarySketch],
    w: &ProjectionMatrix,
) -> Result<SearchResult> {
    params.validate()?;
    check_structures(params, db, w)?;
    if index.num_positions() != params.code_length {
        return Err(Error::invalid(
            "index",
            format!(
                "inverted index has {} positions, params say {}",
                index.num_positions(),
                params.code_length
            ),
        ));
    }
    if sketches.len() != db.len() {
        return Err(Error::invalid(
            "sketches",
            format!("{} sketches for {} sets", sketches.len(), db.len()),
        ));
    }

    // Stage 0: query filter and sketch.
    let query_codes = encode_set(query, w, params.l_wta)?;
    let query_filter = CountBloomFilter::from_codes(&query_codes, params.code_length)?;
    let query_sketch = BinarySketch::from_codes(&query_codes, params.code_length)?;

    // Stage 1: harvest ids from the strongest counter positions.
    let positions = query_filter.positions_by_count_desc();
    let mut harvest: HashSet<u64> = HashSet::new();
    for &pos in positions.iter().take(params.access_lists) {
        for id in index.ids_with_min_count(pos as usize, params.min_count) {
            harvest.insert(id);
        }
    }
    let stage1 = harvest.len();

    // Stage 2: sketch Hamming pruning down to the candidate budget.
    let mut pruned: Vec<(usize, u64)> = Vec::with_capacity(harvest.len());
    for id in harvest {
        let pos = db.position_of(id).ok_or_else(|| {
            Error::integrity(format!("index references unknown set id {id}"))
        })?;
        let d = sketch_hamming(&query_sketch, &sketches[pos])?;
        pruned.push((d, id));
    }
    pruned.sort_unstable();
    pruned.truncate(params.candidate_budget);

    let candidates: Vec<u64> = pruned.into_iter().map(|(_, id)| id).collect();
    let stage2 = candidates.len();
    finish(query, params, db, candidates, stage1, stage2)
}

/// Exact rerank of the surviving candidates; shared final stage.
fn finish(
    query: &VectorSet,
    params: &SearchParams,
    db: &VectorSetDatabase,
    candidates: Vec<u64>,
    stage1_survivors: usize,
    stage2_survivors: usize,
) -> Result<SearchResult> {
    let mut ranked: Vec<SearchHit> = Vec::with_capacity(candidates.len());
    let mut exact_evaluations = 0;
    for id in candidates {
        let pos = db
            .position_of(id)
            .ok_or_else(|| Error::integrity(format!("unknown candidate id {id}")))?;
        let distance = params.metric.evaluate(query, db.get(pos).unwrap())?;
        exact_evaluations += 1;
        ranked.push(SearchHit {
            set_id: id,
            distance,
        });
    }
    ranked.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .expect("finite distances")
            .then(a.set_id.cmp(&b.set_id))
    });
    let truncated = ranked.len() < params.k;
    ranked.truncate(params.k);
    Ok(SearchResult {
        hits: ranked,
        stage1_survivors,
        stage2_survivors,
        exact_evaluations,
        truncated,
    })
}

fn check_structures(
    params: &SearchParams,
    db: &VectorSetDatabase,
    w: &ProjectionMatrix,
) -> Result<()> {
    if w.input_dim() != db.dim() {
        return Err(Error::DimensionMismatch {
            expected: db.dim(),
            got: w.input_dim(),
        });
    }
    if w.code_length() != params.code_length {
        return Err(Error::invalid(
            "code_length",
            format!(
                "projection has {} rows, params say {}",
                w.code_length(),
                params.code_length
            ),
        ));
    }
    Ok(())
}
