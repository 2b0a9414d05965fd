//! Analytical objects behind the search guarantees: the min-max similarity
//! aggregation, Chernoff tail coefficients, the required-hash-count bound,
//! set connectivity, and a Monte-Carlo check of the tail bounds.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::dataset::VectorSet;
use crate::error::{Error, Result};

/// A matrix of pairwise similarities in `[0, 1]`, query side on rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty {
                what: "similarity matrix",
            });
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::invalid("rows", "ragged rows"));
            }
            for &s in row {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::invalid(
                        "entries",
                        format!("similarity {s} outside [0, 1]"),
                    ));
                }
                entries.push(s);
            }
        }
        Ok(SimilarityMatrix {
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

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Min-max similarity aggregation:
/// `min(min_i max_j S_ij, min_j max_i S_ij)`.
///
/// This is the similarity-domain mirror of the Hausdorff aggregation; it is
/// always sandwiched between the matrix minimum and maximum.
pub fn sigma(s: &SimilarityMatrix) -> f64 {
    let row_side = (0..s.rows())
        .map(|i| {
            (0..s.cols())
                .map(|j| s.get(i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let col_side = (0..s.cols())
        .map(|j| {
            (0..s.rows())
                .map(|i| s.get(i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    row_side.min(col_side)
}

/// Shared closed form of both tail coefficients:
/// `(s(1-tau) / (tau(1-s)))^tau * ((1-s)/(1-tau))`.
fn tail_coefficient(s: f64, tau: f64) -> f64 {
    let log_ratio = s.ln() + (1.0 - tau).ln() - tau.ln() - (1.0 - s).ln();
    (tau * log_ratio + (1.0 - s).ln() - (1.0 - tau).ln()).exp()
}

/// Upper-tail coefficient `gamma` for a threshold `tau1 in (s_max, 1)`.
/// Always in `(0, 1)` on the valid domain.
pub fn gamma_coefficient(s_max: f64, tau1: f64) -> Result<f64> {
    if !(s_max > 0.0 && s_max < 1.0) {
        return Err(Error::invalid("s_max", format!("{s_max} not in (0, 1)")));
    }
    if !(tau1 > s_max && tau1 < 1.0) {
        return Err(Error::invalid(
            "tau1",
            format!("{tau1} not in ({s_max}, 1)"),
        ));
    }
    Ok(tail_coefficient(s_max, tau1))
}

/// Lower-tail coefficient `xi` for a threshold `tau2 in (0, s_min)`; the
/// same algebraic form as `gamma` evaluated at `(s_min, tau2)`.
pub fn xi_coefficient(s_min: f64, tau2: f64) -> Result<f64> {
    if !(s_min > 0.0 && s_min < 1.0) {
        return Err(Error::invalid("s_min", format!("{s_min} not in (0, 1)")));
    }
    if !(tau2 > 0.0 && tau2 < s_min) {
        return Err(Error::invalid(
            "tau2",
            format!("{tau2} not in (0, {s_min})"),
        ));
    }
    Ok(tail_coefficient(s_min, tau2))
}

/// Inputs for the required-hash-count bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// Database size.
    pub n: u64,
    /// Results requested.
    pub k: u64,
    /// Query-set cardinality.
    pub m_q: u64,
    /// Target-set cardinality (use the corpus maximum when it varies).
    pub m: u64,
    /// Failure probability.
    pub delta: f64,
    /// Worst-case upper-tail coefficient over non-top-k sets.
    pub gamma_max: f64,
    /// Worst-case lower-tail coefficient over top-k sets.
    pub xi_max: f64,
}

impl BoundParams {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.m_q == 0 || self.m == 0 {
            return Err(Error::invalid("counts", "n, k, m_q, m must be positive"));
        }
        if self.k > self.n {
            return Err(Error::invalid("k", "k must not exceed n"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(
                "delta",
                format!("{} not in (0, 1)", self.delta),
            ));
        }
        for (name, v) in [("gamma_max", self.gamma_max), ("xi_max", self.xi_max)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(name, format!("{v} not in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Number of hash functions sufficient for the stated failure probability:
/// the ceiling of
/// `max( log(2(n-k) m_q m / delta) / log(1/gamma_max),
///       log(2 k m_q m / delta) / log(1/xi_max) )`,
/// never below 1.
pub fn required_hash_count(p: &BoundParams) -> Result<u64> {
    p.validate()?;
    let mqm = p.m_q as f64 * p.m as f64;
    let upper = if p.n > p.k {
        (2.0 * (p.n - p.k) as f64 * mqm / p.delta).ln() / (1.0 / p.gamma_max).ln()
    } else {
        0.0
    };
    let lower = (2.0 * p.k as f64 * mqm / p.delta).ln() / (1.0 / p.xi_max).ln();
    Ok((upper.max(lower).ceil() as u64).max(1))
}

/// Set connectivity: the sum over all vector pairs of
/// `sim(q, v) = (1 + cos(q, v)) / 2`, which maps cosine into `[0, 1]`.
/// Zero-norm vectors are rejected.
pub fn connectivity(query: &VectorSet, target: &VectorSet) -> Result<f64> {
    if query.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: query.dim(),
            got: target.dim(),
        });
    }
    let norms = |set: &VectorSet| -> Result<Vec<f64>> {
        set.vectors()
            .iter()
            .map(|v| {
                let n = v.norm();
                if n == 0.0 {
                    Err(Error::ZeroNormVector)
                } else {
                    Ok(n)
                }
            })
            .collect()
    };
    let qn = norms(query)?;
    let tn = norms(target)?;
    let mut total = 0.0;
    for (q, &nq) in query.vectors().iter().zip(qn.iter()) {
        for (v, &nv) in target.vectors().iter().zip(tn.iter()) {
            let dot: f64 = q
                .components()
                .iter()
                .zip(v.components())
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum();
            let cos = (dot / (nq * nv)).clamp(-1.0, 1.0);
            total += (1.0 + cos) / 2.0;
        }
    }
    Ok(total)
}

/// One grid point of the tail simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub tau: f64,
    /// Empirical exceedance frequency over the trials.
    pub frequency: f64,
    /// Single-entry analytic bound (`gamma^L` or `xi^L`); infinity when the
    /// threshold is outside the coefficient's domain.
    pub bound: f64,
}

/// Empirical tail frequencies of the scaled-binomial similarity estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSimulation {
    pub s: f64,
    pub hash_count: usize,
    pub trials: usize,
    /// `Pr[s_hat >= tau1]` per requested upper threshold.
    pub upper: Vec<TailPoint>,
    /// `Pr[s_hat <= tau2]` per requested lower threshold.
    pub lower: Vec<TailPoint>,
}

/// Simulates `trials` draws of `s_hat = B(L, s) / L` and tabulates the
/// exceedance frequencies against the analytic single-entry bounds.
pub fn tail_bound_simulation(
    s: f64,
    hash_count: usize,
    trials: usize,
    tau_upper: &[f64],
    tau_lower: &[f64],
    seed: u64,
) -> Result<TailSimulation> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("{s} not in (0, 1)")));
    }
    if hash_count == 0 || trials == 0 {
        return Err(Error::invalid("trials", "hash_count and trials must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binomial = Binomial::new(hash_count as u64, s)
        .map_err(|e| Error::invalid("s", e.to_string()))?;
    // Histogram over successes: all thresholds share the draws.
    let mut successes = vec![0u64; hash_count + 1];
    for _ in 0..trials {
        successes[rng.sample(binomial) as usize] += 1;
    }
    let upper = tau_upper
        .iter()
        .map(|&tau| {
            // s_hat >= tau  <=>  successes >= ceil(tau * L).
            let cutoff = (tau * hash_count as f64).ceil() as usize;
            let hits: u64 = if cutoff <= hash_count {
                successes[cutoff..].iter().sum()
            } else {
                0
            };
            TailPoint {
                tau,
                frequency: hits as f64 / trials as f64,
                bound: gamma_coefficient(s, tau)
                    .map(|g| g.powi(hash_count as i32))
                    .unwrap_or(f64::INFINITY),
            }
        })
        .collect();
    let lower = tau_lower
        .iter()
        .map(|&tau| {
            let cutoff = (tau * hash_count as f64).floor() as usize;
            let hits: u64 = successes[..=cutoff.min(hash_count)].iter().sum();
            TailPoint {
                tau,
                frequency: hits as f64 / trials as f64,
                bound: xi_coefficient(s, tau)
                    .map(|x| x.powi(hash_count as i32))
                    .unwrap_or(f64::INFINITY),
            }
        })
        .collect();
    Ok(TailSimulation {
        s,
        hash_count,
        trials,
        upper,
        lower,
    })
}
