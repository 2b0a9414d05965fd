//! Winner-take-all sparse binary encoding.
//!
//! A vector is projected into `b` dimensions and the `l_wta` largest
//! coordinates become the set bits of its code, so every code has exactly
//! `l_wta` ones. The projection matrix is either sparse random or trained
//! on the database with a competitive-Hebbian rule; the trained variant
//! keeps unit-norm rows and logs its per-batch update magnitudes so
//! convergence can be monitored.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{Vector, VectorSetDatabase};
use crate::error::{Error, Result};

/// Default fraction of nonzero entries in a sparse random projection.
pub const DEFAULT_DENSITY: f64 = 0.1;

/// Default number of inputs per training batch.
pub const DEFAULT_BATCH_SIZE: usize = 10_000;

/// How a projection matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Sparse random Gaussian entries.
    RandomSparse,
    /// Rows learned from the database; unit L2 norm each.
    Trained,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::RandomSparse => "random-sparse",
            Provenance::Trained => "trained",
        }
    }
}

/// A `b x d` projection matrix, stored row-major in f32.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    rows: usize,
    cols: usize,
    weights: Vec<f32>,
    provenance: Provenance,
    seed: u64,
}

impl ProjectionMatrix {
    /// Reassembles a matrix from raw parts (used when loading an index).
    pub fn from_parts(
        rows: usize,
        cols: usize,
        weights: Vec<f32>,
        provenance: Provenance,
        seed: u64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("shape", "rows and cols must be positive"));
        }
        if weights.len() != rows * cols {
            return Err(Error::invalid(
                "weights",
                format!("expected {} weights, got {}", rows * cols, weights.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights", "non-finite weight"));
        }
        Ok(ProjectionMatrix {
            rows,
            cols,
            weights,
            provenance,
            seed,
        })
    }

    /// Code length `b`.
    pub fn code_length(&self) -> usize {
        self.rows
    }

    /// Input dimensionality `d`.
    pub fn input_dim(&self) -> usize {
        self.cols
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.weights[i * self.cols..(i + 1) * self.cols]
    }

    /// `W v`, accumulated in f64.
    pub fn project(&self, v: &[f32]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v.iter())
                    .map(|(&w, &x)| w as f64 * x as f64)
                    .sum()
            })
            .collect()
    }
}

/// Builds a sparse random projection: each entry is nonzero with probability
/// `density` and nonzero values are standard normal. Deterministic per seed.
pub fn random_projection(seed: u64, b: usize, d: usize, density: f64) -> Result<ProjectionMatrix> {
    if b == 0 || d == 0 {
        return Err(Error::invalid("shape", "b and d must be positive"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(
            "density",
            format!("{density} not in (0, 1]"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..b * d)
        .map(|_| {
            if rng.random::<f64>() < density {
                let w: f64 = rng.sample(StandardNormal);
                w as f32
            } else {
                0.0
            }
        })
        .collect();
    ProjectionMatrix::from_parts(b, d, weights, Provenance::RandomSparse, seed)
}

/// A `b`-bit binary code with exactly `l_wta` set bits, stored as strictly
/// increasing bit positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryCode {
    length: usize,
    set_bits: Vec<u32>,
}

impl SparseBinaryCode {
    /// Builds a code from bit positions; they must be strictly increasing
    /// and below `length`.
    pub fn new(length: usize, set_bits: Vec<u32>) -> Result<Self> {
        if set_bits.is_empty() {
            return Err(Error::Empty { what: "code" });
        }
        for pair in set_bits.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::invalid("set_bits", "positions not strictly increasing"));
            }
        }
        if *set_bits.last().unwrap() as usize >= length {
            return Err(Error::invalid("set_bits", "position out of range"));
        }
        Ok(SparseBinaryCode { length, set_bits })
    }

    /// Bit length `b`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn set_bits(&self) -> &[u32] {
        &self.set_bits
    }

    /// Number of set bits; always `l_wta` for WTA codes.
    pub fn popcount(&self) -> usize {
        self.set_bits.len()
    }

    /// Number of positions set in both codes.
    pub fn overlap(&self, other: &SparseBinaryCode) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        let (a, b) = (&self.set_bits, &other.set_bits);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// Hamming distance: popcount of the XOR of the two codes.
    pub fn hamming(&self, other: &SparseBinaryCode) -> Result<usize> {
        if self.length != other.length {
            return Err(Error::CodeLengthMismatch {
                expected: self.length,
                got: other.length,
            });
        }
        Ok(self.popcount() + other.popcount() - 2 * self.overlap(other))
    }
}

/// Encodes one vector: computes `W v` and keeps the `l_wta` largest
/// coordinates, ties broken toward the lower index.
///
/// When `w` is trained, the input is L2-normalized first (training assumes
/// normalized data); for the sparse random projection the raw vector is used.
pub fn wta_encode(w: &ProjectionMatrix, v: &Vector, l_wta: usize) -> Result<SparseBinaryCode> {
    if v.dim() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.input_dim(),
            got: v.dim(),
        });
    }
    let b = w.code_length();
    if l_wta == 0 || l_wta > b {
        return Err(Error::invalid(
            "l_wta",
            format!("{l_wta} not in 1..={b}"),
        ));
    }
    let activations = match w.provenance() {
        Provenance::Trained => w.project(v.l2_normalized().components()),
        Provenance::RandomSparse => w.project(v.components()),
    };
    Ok(top_l_code(&activations, l_wta))
}

/// Selects the positions of the `l` largest activations, lower index first
/// on ties, and packs them as a code.
fn top_l_code(activations: &[f64], l: usize) -> SparseBinaryCode {
    let b = activations.len();
    let mut order: Vec<u32> = (0..b as u32).collect();
    let winner_first = |&i: &u32, &j: &u32| {
        activations[j as usize]
            .partial_cmp(&activations[i as usize])
            .expect("finite activations")
            .then(i.cmp(&j))
    };
    if l < b {
        order.select_nth_unstable_by(l - 1, winner_first);
    }
    let mut set_bits: Vec<u32> = order[..l].to_vec();
    set_bits.sort_unstable();
    SparseBinaryCode {
        length: b,
        set_bits,
    }
}

/// Sparse binary codes for a whole database, grouped per set in database
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDatabase {
    code_length: usize,
    l_wta: usize,
    per_set: Vec<Vec<SparseBinaryCode>>,
}

impl EncodedDatabase {
    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn l_wta(&self) -> usize {
        self.l_wta
    }

    /// Codes of the set at `position` (database order).
    pub fn codes(&self, position: usize) -> &[SparseBinaryCode] {
        &self.per_set[position]
    }

    pub fn len(&self) -> usize {
        self.per_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_set.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<SparseBinaryCode>> {
        self.per_set.iter()
    }

    /// All per-set code groups in database order.
    pub fn per_set(&self) -> &[Vec<SparseBinaryCode>] {
        &self.per_set
    }
}

/// Encodes every vector of every set, order-preserving. Parallel per set.
pub fn encode_database(
    db: &VectorSetDatabase,
    w: &ProjectionMatrix,
    l_wta: usize,
) -> Result<EncodedDatabase> {
    if db.dim() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.input_dim(),
            got: db.dim(),
        });
    }
    let per_set = db
        .sets()
        .par_iter()
        .map(|set| {
            set.vectors()
                .iter()
                .map(|v| wta_encode(w, v, l_wta))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedDatabase {
        code_length: w.code_length(),
        l_wta,
        per_set,
    })
}

/// Encodes a standalone vector set (e.g. a query) with the same contract as
/// [`encode_database`].
pub fn encode_set(
    set: &crate::dataset::VectorSet,
    w: &ProjectionMatrix,
    l_wta: usize,
) -> Result<Vec<SparseBinaryCode>> {
    set.vectors().iter().map(|v| wta_encode(w, v, l_wta)).collect()
}

/// Per-batch maximum absolute weight changes observed while training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    batch_size: usize,
    update_magnitudes: Vec<f64>,
}

impl TrainingLog {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// `M_t` per batch: the largest `|delta W_ij|` seen during batch `t`.
    pub fn update_magnitudes(&self) -> &[f64] {
        &self.update_magnitudes
    }

    /// Means of the first and final quartiles of the `M_t` sequence; a
    /// converging run has the final mean below the first.
    pub fn quartile_means(&self) -> Option<(f64, f64)> {
        let m = &self.update_magnitudes;
        if m.len() < 4 {
            return None;
        }
        let q = m.len() / 4;
        let first = m[..q].iter().sum::<f64>() / q as f64;
        let last = m[m.len() - q..].iter().sum::<f64>() / q as f64;
        Some((first, last))
    }
}

/// Training knobs for the learned projection.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Step size at epoch 0; decays linearly to `initial_learning_rate / epochs`.
    pub initial_learning_rate: f64,
}

impl TrainingConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        TrainingConfig {
            epochs,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            initial_learning_rate: 0.1,
        }
    }
}

/// Trains a `b`-row projection on the database with a competitive-Hebbian
/// rule: for each L2-normalized input `x`, the row `w*` with the largest
/// inner product moves toward `x` (`w* += eta * (x - <x, w*> w*)`) and is
/// renormalized. Returns the matrix and the per-batch `M_t` log.
///
/// Deterministic for a fixed seed; rows keep unit norm after every update.
pub fn train_projection(
    db: &VectorSetDatabase,
    b: usize,
    cfg: &TrainingConfig,
) -> Result<(ProjectionMatrix, TrainingLog)> {
    if b == 0 {
        return Err(Error::invalid("b", "code length must be positive"));
    }
    if cfg.epochs == 0 {
        return Err(Error::invalid("epochs", "must be >= 1"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be >= 1"));
    }
    let d = db.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Unit-norm random rows.
    let mut weights: Vec<f32> = Vec::with_capacity(b * d);
    for _ in 0..b {
        let row: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        weights.extend(row.iter().map(|&x| (x / norm) as f32));
    }

    // Normalized training pool: every vector of every set, zero-norm skipped.
    let pool: Vec<Vec<f32>> = db
        .sets()
        .iter()
        .flat_map(|s| s.vectors())
        .filter(|v| v.norm() > 0.0)
        .map(|v| v.l2_normalized().components().to_vec())
        .collect();
    if pool.is_empty() {
        return Err(Error::Empty {
            what: "training pool",
        });
    }

    let mut magnitudes = Vec::new();
    let mut batch_max: f64 = 0.0;
    let mut in_batch = 0usize;
    let mut order: Vec<usize> = (0..pool.len()).collect();

    for epoch in 0..cfg.epochs {
        let eta = cfg.initial_learning_rate * (cfg.epochs - epoch) as f64 / cfg.epochs as f64;
        order.shuffle(&mut rng);
        for &idx in &order {
            let x = &pool[idx];
            // Winner row: max inner product, lower index on ties.
            let mut best_row = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for r in 0..b {
                let row = &weights[r * d..(r + 1) * d];
                let score: f64 = row
                    .iter()
                    .zip(x.iter())
                    .map(|(&w, &xv)| w as f64 * xv as f64)
                    .sum();
                if score > best_score {
                    best_score = score;
                    best_row = r;
                }
            }
            let row = &mut weights[best_row * d..(best_row + 1) * d];
            let mut updated: Vec<f64> = row
                .iter()
                .zip(x.iter())
                .map(|(&w, &xv)| w as f64 + eta * (xv as f64 - best_score * w as f64))
                .collect();
            let norm = updated.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut updated {
                    *v /= norm;
                }
            }
            for (w, &v) in row.iter_mut().zip(updated.iter()) {
                let delta = (v - *w as f64).abs();
                if delta > batch_max {
                    batch_max = delta;
                }
                *w = v as f32;
            }
            in_batch += 1;
            if in_batch == cfg.batch_size {
                magnitudes.push(batch_max);
                batch_max = 0.0;
                in_batch = 0;
            }
        }
    }
    if in_batch > 0 {
        magnitudes.push(batch_max);
    }

    let matrix = ProjectionMatrix {
        rows: b,
        cols: d,
        weights,
        provenance: Provenance::Trained,
        seed: cfg.seed,
    };
    Ok((
        matrix,
        TrainingLog {
            batch_size: cfg.batch_size,
            update_magnitudes: magnitudes,
        },
    ))
}
