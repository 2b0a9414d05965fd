//! Exact set-to-set distances: Hausdorff, mean-minimum, and minimum.
//!
//! All distances reduce to an aggregation over the pairwise Euclidean grid
//! between the two sets. The grid convention is fixed throughout the crate:
//! rows are query-side vectors, columns are target-side vectors. Pairwise
//! distances are accumulated in f64 even though inputs are f32.

use crate::dataset::{Vector, VectorSet};
use crate::error::{Error, Result};

/// Squared Euclidean distance, f64 accumulation. Callers guarantee equal dims.
fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

/// Euclidean (L2) distance between two vectors of equal dimensionality.
pub fn euclidean(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(sq_dist(a.components(), b.components()).sqrt())
}

/// The pairwise distance grid between two vector sets.
///
/// Entry `(i, j)` is the distance from the i-th query-side vector to the
/// j-th target-side vector. Entries are nonnegative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row slices; rejects empty or ragged input and
    /// negative or non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty {
                what: "distance matrix",
            });
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::invalid("rows", "ragged rows"));
            }
            for &e in row {
                if !e.is_finite() || e < 0.0 {
                    return Err(Error::invalid("entries", format!("invalid entry {e}")));
                }
                entries.push(e);
            }
        }
        Ok(DistanceMatrix {
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    fn row_minima(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn col_minima(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| self.get(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Materializes the pairwise grid of `metric` between two sets of equal
/// dimensionality, with rows on the query side.
pub fn pairwise_matrix<F>(query: &VectorSet, target: &VectorSet, metric: F) -> Result<DistanceMatrix>
where
    F: Fn(&Vector, &Vector) -> Result<f64>,
{
    if query.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: query.dim(),
            got: target.dim(),
        });
    }
    let mut rows = Vec::with_capacity(query.len());
    for q in query.vectors() {
        let mut row = Vec::with_capacity(target.len());
        for v in target.vectors() {
            row.push(metric(q, v)?);
        }
        rows.push(row);
    }
    DistanceMatrix::from_rows(&rows)
}

/// Pairwise Euclidean grid, the realization used by all set distances here.
pub fn euclidean_matrix(query: &VectorSet, target: &VectorSet) -> Result<DistanceMatrix> {
    pairwise_matrix(query, target, euclidean)
}

/// Hausdorff aggregation of a distance grid:
/// `max(max_i min_j M_ij, max_j min_i M_ij)`.
pub fn aggregate_hausdorff(m: &DistanceMatrix) -> f64 {
    let forward = m
        .row_minima()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let backward = m.col_minima().into_iter().fold(f64::NEG_INFINITY, f64::max);
    forward.max(backward)
}

/// Mean-minimum aggregation over the row (query) side:
/// `(1/rows) * sum_i min_j M_ij`. Directional.
pub fn aggregate_mean_min(m: &DistanceMatrix) -> f64 {
    let minima = m.row_minima();
    minima.iter().sum::<f64>() / minima.len() as f64
}

/// Global minimum entry of the grid.
pub fn aggregate_min(m: &DistanceMatrix) -> f64 {
    m.entries.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two vector sets: the larger of the two
/// directed max-of-min Euclidean distances. Symmetric; zero iff the sets
/// contain pair-identical vectors.
pub fn hausdorff(query: &VectorSet, target: &VectorSet) -> Result<f64> {
    check_dims(query, target)?;
    let mut row_min = vec![f64::INFINITY; query.len()];
    let mut col_min = vec![f64::INFINITY; target.len()];
    for (i, q) in query.vectors().iter().enumerate() {
        for (j, v) in target.vectors().iter().enumerate() {
            let d = sq_dist(q.components(), v.components());
            if d < row_min[i] {
                row_min[i] = d;
            }
            if d < col_min[j] {
                col_min[j] = d;
            }
        }
    }
    let forward = row_min.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let backward = col_min.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(forward.max(backward).sqrt())
}

/// Mean-minimum distance from `query` to `target`:
/// `(1/|Q|) * sum_{q in Q} min_{v in V} dist(q, v)`. NOT symmetric.
pub fn mean_min(query: &VectorSet, target: &VectorSet) -> Result<f64> {
    check_dims(query, target)?;
    let mut acc = 0.0;
    for q in query.vectors() {
        let best = target
            .vectors()
            .iter()
            .map(|v| sq_dist(q.components(), v.components()))
            .fold(f64::INFINITY, f64::min);
        acc += best.sqrt();
    }
    Ok(acc / query.len() as f64)
}

/// Minimum distance over all vector pairs. Symmetric.
pub fn min_dist(query: &VectorSet, target: &VectorSet) -> Result<f64> {
    check_dims(query, target)?;
    let mut best = f64::INFINITY;
    for q in query.vectors() {
        for v in target.vectors() {
            let d = sq_dist(q.components(), v.components());
            if d < best {
                best = d;
            }
        }
    }
    Ok(best.sqrt())
}

fn check_dims(a: &VectorSet, b: &VectorSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Set-level distance selector used by the search pipelines and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetMetric {
    /// Symmetric max-of-min aggregation (the primary metric).
    Hausdorff,
    /// Directional mean of per-query-vector minima.
    MeanMin,
    /// Global minimum pair distance.
    Min,
}

impl SetMetric {
    /// Evaluates the metric with `query` on the directional side.
    pub fn evaluate(&self, query: &VectorSet, target: &VectorSet) -> Result<f64> {
        match self {
            SetMetric::Hausdorff => hausdorff(query, target),
            SetMetric::MeanMin => mean_min(query, target),
            SetMetric::Min => min_dist(query, target),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SetMetric::Hausdorff => "hausdorff",
            SetMetric::MeanMin => "meanmin",
            SetMetric::Min => "min",
        }
    }
}

impl std::str::FromStr for SetMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hausdorff" => Ok(SetMetric::Hausdorff),
            "meanmin" => Ok(SetMetric::MeanMin),
            "min" => Ok(SetMetric::Min),
            other => Err(Error::invalid(
                "metric",
                format!("unknown metric `{other}` (expected hausdorff|meanmin|min)"),
            )),
        }
    }
}

impl std::fmt::Display for SetMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
