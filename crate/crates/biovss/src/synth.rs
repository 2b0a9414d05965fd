//! Clustered synthetic corpora with planted near-neighbors.
//!
//! Cluster centers are sampled on the unit sphere; every set draws all of
//! its vectors as perturbations of one center, so sets sharing a center are
//! planted neighbors. Deterministic per seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Vector, VectorSet, VectorSetDatabase};
use crate::error::{Error, Result};

/// Parameters of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_sets: usize,
    /// Inclusive range for set cardinality.
    pub m_range: (usize, usize),
    pub dim: usize,
    pub n_clusters: usize,
    /// Per-component Gaussian noise scale around the cluster center.
    pub spread: f64,
    pub seed: u64,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_sets == 0 || self.dim == 0 || self.n_clusters == 0 {
            return Err(Error::invalid(
                "config",
                "n_sets, dim, n_clusters must be positive",
            ));
        }
        let (lo, hi) = self.m_range;
        if lo == 0 || hi < lo || hi > 4096 {
            return Err(Error::invalid(
                "m_range",
                format!("({lo}, {hi}) not within [1, 4096]"),
            ));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::invalid("spread", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Generates the corpus; set ids are `0..n_sets`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<VectorSetDatabase> {
    Ok(generate_with_assignments(cfg)?.0)
}

/// Generates the corpus together with the cluster each set was drawn from,
/// in id order.
pub fn generate_with_assignments(
    cfg: &SynthConfig,
) -> Result<(VectorSetDatabase, Vec<usize>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let centers: Vec<Vec<f64>> = (0..cfg.n_clusters)
        .map(|_| unit_gaussian(&mut rng, cfg.dim))
        .collect();

    let (m_lo, m_hi) = cfg.m_range;
    let mut sets = Vec::with_capacity(cfg.n_sets);
    let mut assignments = Vec::with_capacity(cfg.n_sets);
    for id in 0..cfg.n_sets {
        let cluster = rng.random_range(0..cfg.n_clusters);
        let center = &centers[cluster];
        let m = rng.random_range(m_lo..=m_hi);
        let vectors = (0..m)
            .map(|_| {
                let mut v: Vec<f64> = center.clone();
                if cfg.spread > 0.0 {
                    for c in &mut v {
                        *c += cfg.spread * rng.sample::<f64, _>(StandardNormal);
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                Vector::new(v.iter().map(|&x| (x / norm) as f32).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        sets.push(VectorSet::new(id as u64, vectors)?);
        assignments.push(cluster);
    }
    Ok((VectorSetDatabase::new(sets)?, assignments))
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::hausdorff;

    fn cfg() -> SynthConfig {
        SynthConfig {
            n_sets: 40,
            m_range: (2, 5),
            dim: 16,
            n_clusters: 4,
            spread: 0.05,
            seed: 77,
        }
    }

    #[test]
    fn same_seed_reproduces_corpus() {
        let a = generate_synthetic(&cfg()).unwrap();
        let b = generate_synthetic(&cfg()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.sets().iter().zip(b.sets()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn degenerate_single_cluster_zero_spread() {
        let db = generate_synthetic(&SynthConfig {
            n_clusters: 1,
            spread: 0.0,
            ..cfg()
        })
        .unwrap();
        let first = db.get(0).unwrap();
        for set in db.sets() {
            assert_eq!(hausdorff(first, set).unwrap(), 0.0);
            for v in set.vectors() {
                assert_eq!(v, &set.vectors()[0]);
            }
        }
    }

    #[test]
    fn vectors_are_unit_norm() {
        let db = generate_synthetic(&cfg()).unwrap();
        for set in db.sets() {
            for v in set.vectors() {
                assert!((v.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn assignments_match_cluster_structure() {
        let config = cfg();
        let (db, assignments) = generate_with_assignments(&config).unwrap();
        assert_eq!(assignments.len(), db.len());
        // Same-cluster sets must be far closer than cross-cluster sets at
        // this spread.
        let mut same = Vec::new();
        let mut cross = Vec::new();
        for i in 0..db.len() {
            for j in (i + 1)..db.len() {
                let d = hausdorff(db.get(i).unwrap(), db.get(j).unwrap()).unwrap();
                if assignments[i] == assignments[j] {
                    same.push(d);
                } else {
                    cross.push(d);
                }
            }
        }
        let max_same = same.iter().copied().fold(0.0, f64::max);
        let min_cross = cross.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            max_same < min_cross,
            "clusters not separated: {max_same} vs {min_cross}"
        );
    }

    #[test]
    fn oracle_top1_stays_in_cluster_at_small_spread() {
        let config = SynthConfig {
            n_sets: 120,
            m_range: (2, 4),
            dim: 24,
            n_clusters: 6,
            spread: 0.02,
            seed: 3,
        };
        let (db, assignments) = generate_with_assignments(&config).unwrap();
        let mut hits = 0;
        let trials = 40;
        for qi in 0..trials {
            let q = db.get(qi).unwrap();
            let mut best: Option<(f64, usize)> = None;
            for (pos, s) in db.sets().iter().enumerate() {
                if pos == qi {
                    continue;
                }
                let d = hausdorff(q, s).unwrap();
                if best.is_none() || d < best.unwrap().0 {
                    best = Some((d, pos));
                }
            }
            if assignments[best.unwrap().1] == assignments[qi] {
                hits += 1;
            }
        }
        assert!(
            hits as f64 / trials as f64 > 0.99,
            "top-1 same-cluster rate {hits}/{trials}"
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(generate_synthetic(&SynthConfig { n_sets: 0, ..cfg() }).is_err());
        assert!(generate_synthetic(&SynthConfig {
            m_range: (0, 3),
            ..cfg()
        })
        .is_err());
        assert!(generate_synthetic(&SynthConfig {
            m_range: (2, 5000),
            ..cfg()
        })
        .is_err());
        assert!(generate_synthetic(&SynthConfig {
            spread: f64::NAN,
            ..cfg()
        })
        .is_err());
    }
}
