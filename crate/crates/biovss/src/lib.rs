//! Approximate top-k vector set search under the Hausdorff distance.
//!
//! A vector set database is searched with a query set; the exact answer
//! ranks sets by the Hausdorff distance (or the mean-minimum / minimum
//! variants). To avoid scanning every set with the full metric, vectors are
//! quantized into winner-take-all sparse binary codes and each set is
//! summarized twice: a count Bloom filter feeding an inverted index, and a
//! binary sketch for Hamming-distance pruning. Queries run a cascade —
//! inverted-index harvest, sketch pruning, exact rerank — whose candidate
//! budget caps the number of exact distance evaluations.
//!
//! Modules:
//! * [`dataset`] / [`distance`] — corpus types and exact set distances.
//! * [`hash`] — WTA encoding, random and trained projections.
//! * [`bloom`] / [`sparse`] — filter structures and their storage layouts.
//! * [`search`] — the linear-scan and cascade query pipelines.
//! * [`theory`] — tail coefficients, required-hash-count bound, connectivity.
//! * [`synth`] / [`storage`] — corpus generation and binary persistence.
//! * [`eval`] — ground truth, recall, benchmarks, statistical suites.
//!
//! ```
//! use biovss::{random_projection, SearchParams, SetMetric};
//! use biovss::search::biovss_pp_search;
//! use biovss::storage::IndexBundle;
//! use biovss::synth::{generate_synthetic, SynthConfig};
//!
//! let db = generate_synthetic(&SynthConfig {
//!     n_sets: 200, m_range: (2, 6), dim: 32,
//!     n_clusters: 8, spread: 0.15, seed: 7,
//! })?;
//! let projection = random_projection(7, 256, 32, 0.1)?;
//! let index = IndexBundle::build(&db, projection, 16)?;
//!
//! let params = SearchParams {
//!     k: 3, access_lists: 3, min_count: 1, candidate_budget: 40,
//!     l_wta: 16, code_length: 256, metric: SetMetric::Hausdorff,
//! };
//! let query = db.get(0).unwrap();
//! let result = biovss_pp_search(query, &params, &db,
//!     &index.inverted, &index.sketches, &index.projection)?;
//! assert_eq!(result.hits[0].set_id, 0); // the query's own set, distance 0
//! # Ok::<(), biovss::Error>(())
//! ```

pub mod bloom;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod eval;
pub mod hash;
pub mod search;
pub mod sparse;
pub mod storage;
pub mod synth;
pub mod theory;

pub use dataset::{Vector, VectorSet, VectorSetDatabase};
pub use distance::{hausdorff, mean_min, min_dist, SetMetric};
pub use error::{Error, Result};
pub use hash::{
    encode_database, random_projection, train_projection, wta_encode, ProjectionMatrix,
    Provenance, SparseBinaryCode, TrainingConfig,
};
pub use search::{biovss_pp_search, biovss_search, SearchParams, SearchResult};
pub use storage::IndexBundle;
