//! Ground truth, recall scoring, benchmarking, and the statistical
//! validation suites.
//!
//! Correctness figures (recall, candidate counts, exact-evaluation counts)
//! are deterministic per seed; wall-clock numbers are reported but never
//! asserted anywhere in the test suites.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bloom::{build_sketches, BinarySketch};
use crate::dataset::{Vector, VectorSet, VectorSetDatabase};
use crate::distance::SetMetric;
use crate::error::{Error, Result};
use crate::hash::{
    encode_database, random_projection, train_projection, wta_encode, ProjectionMatrix,
    TrainingConfig, DEFAULT_DENSITY,
};
use crate::search::{biovss_pp_search, SearchHit, SearchParams, SearchResult};
use crate::storage::IndexBundle;
use crate::synth::{generate_with_assignments, SynthConfig};
use crate::theory::{connectivity, gamma_coefficient, tail_bound_simulation, xi_coefficient};

// ---------------------------------------------------------------------------
// Ground truth and recall

/// Exact top-k for one query, from an exhaustive scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRow {
    pub query_id: u64,
    /// `(set_id, distance)` ascending, ties by id.
    pub hits: Vec<SearchHit>,
    /// True when the corpus held fewer than `k` candidates.
    pub truncated: bool,
}

/// Scans every set with the exact metric and keeps the top `k`
/// (distance ascending, ties by ascending id). `exclude` drops one id from
/// the candidate pool, used for in-corpus queries.
pub fn brute_force_topk(
    query: &VectorSet,
    db: &VectorSetDatabase,
    metric: SetMetric,
    k: usize,
    exclude: Option<u64>,
) -> Result<GroundTruthRow> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let mut scored: Vec<SearchHit> = Vec::with_capacity(db.len());
    for set in db.sets() {
        if exclude == Some(set.id()) {
            continue;
        }
        scored.push(SearchHit {
            set_id: set.id(),
            distance: metric.evaluate(query, set)?,
        });
    }
    scored.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .expect("finite distances")
            .then(a.set_id.cmp(&b.set_id))
    });
    let truncated = scored.len() < k;
    scored.truncate(k);
    Ok(GroundTruthRow {
        query_id: query.id(),
        hits: scored,
        truncated,
    })
}

/// Recall@k: `|R_k ∩ G_k| / |G_k|` over id sets, where `G_k` is the first
/// `k` ground-truth hits. Rejects `k` beyond the truth depth.
pub fn recall_at_k(result: &SearchResult, truth: &GroundTruthRow, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    if truth.hits.len() < k {
        return Err(Error::invalid(
            "k",
            format!("{} exceeds truth depth {}", k, truth.hits.len()),
        ));
    }
    let truth_ids: std::collections::HashSet<u64> =
        truth.hits[..k].iter().map(|h| h.set_id).collect();
    let hit = result
        .hits
        .iter()
        .take(k)
        .filter(|h| truth_ids.contains(&h.set_id))
        .count();
    Ok(hit as f64 / k as f64)
}

// ---------------------------------------------------------------------------
// Benchmark harness

/// One grid point of a benchmark sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub code_length: usize,
    pub l_wta: usize,
    pub access_lists: usize,
    pub min_count: u32,
    pub candidate_budget: usize,
    pub metric: SetMetric,
    pub seed: u64,
    /// Train the projection for this many epochs; `None` keeps it random.
    pub train_epochs: Option<usize>,
}

/// Aggregated figures for one configuration at one `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub config: BenchConfig,
    pub k: usize,
    pub queries: usize,
    pub recall: f64,
    pub mean_query_seconds: f64,
    pub brute_mean_seconds: f64,
    pub speedup: f64,
    pub mean_exact_evaluations: f64,
    pub mean_stage1: f64,
    pub mean_stage2: f64,
}

/// Benchmark output: one row per (configuration, k).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "b,l_wta,access,min_count,candidates,metric,trained,k,\
         queries,recall,mean_query_s,brute_mean_s,speedup,mean_exact_evals,mean_f1,mean_f2";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:.6},{:.9},{:.9},{:.3},{:.3},{:.3},{:.3}\n",
                r.config.code_length,
                r.config.l_wta,
                r.config.access_lists,
                r.config.min_count,
                r.config.candidate_budget,
                r.config.metric,
                r.config.train_epochs.is_some(),
                r.k,
                r.queries,
                r.recall,
                r.mean_query_seconds,
                r.brute_mean_seconds,
                r.speedup,
                r.mean_exact_evaluations,
                r.mean_stage1,
                r.mean_stage2,
            ));
        }
        out
    }
}

/// Runs the cascade pipeline over a parameter grid against brute-force
/// ground truth. `exclude_self` removes each query's own id from both the
/// oracle pool and the pipeline results (in-corpus protocol). Queries run
/// sequentially for timing fidelity.
pub fn run_benchmark(
    db: &VectorSetDatabase,
    queries: &[VectorSet],
    ks: &[usize],
    configs: &[BenchConfig],
    exclude_self: bool,
) -> Result<BenchReport> {
    if queries.is_empty() {
        return Err(Error::Empty { what: "queries" });
    }
    if ks.is_empty() {
        return Err(Error::Empty { what: "k list" });
    }
    let k_max = *ks.iter().max().unwrap();

    let mut rows = Vec::new();
    for config in configs {
        let projection = make_projection(db, config)?;
        let bundle = IndexBundle::build(db, projection, config.l_wta)?;

        // Ground truth (timed) per query, under this config's metric.
        let mut truths = Vec::with_capacity(queries.len());
        let mut brute_total = 0.0f64;
        for q in queries {
            let exclude = if exclude_self { Some(q.id()) } else { None };
            let t = Instant::now();
            let truth = brute_force_topk(q, db, config.metric, k_max, exclude)?;
            brute_total += t.elapsed().as_secs_f64();
            truths.push(truth);
        }
        let brute_mean = brute_total / queries.len() as f64;

        // One extra slot absorbs the query's own id before exclusion.
        let run_k = if exclude_self { k_max + 1 } else { k_max };
        let params = SearchParams {
            k: run_k,
            access_lists: config.access_lists,
            min_count: config.min_count,
            candidate_budget: config.candidate_budget.max(run_k),
            l_wta: config.l_wta,
            code_length: config.code_length,
            metric: config.metric,
        };

        let mut results = Vec::with_capacity(queries.len());
        let mut query_total = 0.0f64;
        for q in queries {
            let t = Instant::now();
            let mut result = biovss_pp_search(
                q,
                &params,
                db,
                &bundle.inverted,
                &bundle.sketches,
                &bundle.projection,
            )?;
            query_total += t.elapsed().as_secs_f64();
            if exclude_self {
                result.hits.retain(|h| h.set_id != q.id());
                result.hits.truncate(k_max);
            }
            results.push(result);
        }
        let query_mean = query_total / queries.len() as f64;

        let n = queries.len() as f64;
        let mean_evals = results.iter().map(|r| r.exact_evaluations as f64).sum::<f64>() / n;
        let mean_f1 = results.iter().map(|r| r.stage1_survivors as f64).sum::<f64>() / n;
        let mean_f2 = results.iter().map(|r| r.stage2_survivors as f64).sum::<f64>() / n;

        for &k in ks {
            let mut recall_sum = 0.0;
            for (result, truth) in results.iter().zip(truths.iter()) {
                recall_sum += recall_at_k(result, truth, k)?;
            }
            rows.push(BenchRow {
                config: *config,
                k,
                queries: queries.len(),
                recall: recall_sum / n,
                mean_query_seconds: query_mean,
                brute_mean_seconds: brute_mean,
                speedup: brute_mean / query_mean.max(1e-12),
                mean_exact_evaluations: mean_evals,
                mean_stage1: mean_f1,
                mean_stage2: mean_f2,
            });
        }
    }
    Ok(BenchReport { rows })
}

fn make_projection(db: &VectorSetDatabase, config: &BenchConfig) -> Result<ProjectionMatrix> {
    match config.train_epochs {
        Some(epochs) => {
            let cfg = TrainingConfig::new(epochs, config.seed);
            Ok(train_projection(db, config.code_length, &cfg)?.0)
        }
        None => random_projection(config.seed, config.code_length, db.dim(), DEFAULT_DENSITY),
    }
}

/// Ground-truth CSV emission: `query_id,rank,set_id,distance` with rank
/// starting at 1.
pub fn ground_truth_csv(rows: &[GroundTruthRow]) -> String {
    let mut out = String::from("query_id,rank,set_id,distance\n");
    for row in rows {
        for (rank, hit) in row.hits.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{:.9}\n",
                row.query_id,
                rank + 1,
                hit.set_id,
                hit.distance
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Rank correlation

/// Average ranks (1-based) with ties sharing their mean rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > 1);
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in rx.iter().zip(ry.iter()) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return 0.0;
    }
    cov / (var_x * var_y).sqrt()
}

// ---------------------------------------------------------------------------
// Statistical suites

/// Configuration of the three statistical checks.
#[derive(Debug, Clone)]
pub struct StatConfig {
    pub seed: u64,
    /// Clustered corpus used for training, pair sampling, and connectivity.
    pub corpus: SynthConfig,
    pub code_length: usize,
    pub l_wta: usize,
    /// Number of vector pairs for the similarity-vs-overlap check.
    pub pairs: usize,
    pub train_epochs: usize,
    pub train_batch_size: usize,
    /// Tail grid: similarity values crossed with hash counts.
    pub tail_s: Vec<f64>,
    pub tail_l: Vec<usize>,
    pub tail_trials: usize,
    /// Number of target sets for the connectivity-vs-collision check.
    pub connectivity_pairs: usize,
}

impl StatConfig {
    /// The calibrated configuration used by the validation suite.
    pub fn default_suite(seed: u64) -> Self {
        StatConfig {
            seed,
            corpus: SynthConfig {
                n_sets: 1500,
                m_range: (2, 6),
                dim: 64,
                n_clusters: 20,
                spread: 0.25,
                seed: seed ^ 0x5eed,
            },
            code_length: 1024,
            l_wta: 64,
            pairs: 2000,
            train_epochs: 4,
            train_batch_size: 1000,
            tail_s: vec![0.3, 0.5, 0.7],
            tail_l: vec![16, 64],
            tail_trials: 100_000,
            connectivity_pairs: 500,
        }
    }
}

/// One tail-bound grid cell outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCell {
    pub s: f64,
    pub hash_count: usize,
    pub tau: f64,
    pub upper_side: bool,
    pub frequency: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Results of the statistical suites.
#[derive(Debug, Clone)]
pub struct StatReport {
    pub lsh_spearman_trained: f64,
    pub lsh_spearman_random: f64,
    pub tail_cells: Vec<TailCell>,
    pub tail_all_within: bool,
    pub connectivity_spearman: f64,
    pub mt_first_quartile_mean: f64,
    pub mt_final_quartile_mean: f64,
}

/// Runs the three statistical checks: similarity-preservation of the codes,
/// Monte-Carlo tail frequencies against the Chernoff bounds, and the
/// connectivity-vs-collision correlation. Deterministic per seed.
pub fn statistical_suites(cfg: &StatConfig) -> Result<StatReport> {
    let (db, _assignments) = generate_with_assignments(&cfg.corpus)?;
    let dim = db.dim();

    // Projections under test.
    let random = random_projection(cfg.seed, cfg.code_length, dim, DEFAULT_DENSITY)?;
    let train_cfg = TrainingConfig {
        epochs: cfg.train_epochs,
        batch_size: cfg.train_batch_size,
        seed: cfg.seed,
        initial_learning_rate: 0.1,
    };
    let (trained, log) = train_projection(&db, cfg.code_length, &train_cfg)?;
    let (mt_first, mt_final) = log
        .quartile_means()
        .ok_or_else(|| Error::invalid("train_batch_size", "too few batches for quartiles"))?;

    // Similarity-preservation: pairs with a controlled cosine spread, bases
    // drawn from the corpus so the trained projection sees its own manifold.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9a17);
    let pool: Vec<&Vector> = db.sets().iter().flat_map(|s| s.vectors()).collect();
    let mut cosines = Vec::with_capacity(cfg.pairs);
    let mut overlap_trained = Vec::with_capacity(cfg.pairs);
    let mut overlap_random = Vec::with_capacity(cfg.pairs);
    for _ in 0..cfg.pairs {
        let base = pool[rng.random_range(0..pool.len())].l2_normalized();
        let alpha: f64 = rng.random::<f64>();
        let noise: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let noise_norm = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mixed: Vec<f32> = base
            .components()
            .iter()
            .zip(noise.iter())
            .map(|(&b, &g)| {
                (alpha * b as f64 + (1.0 - alpha * alpha).sqrt() * g / noise_norm) as f32
            })
            .collect();
        let other = Vector::new(mixed)?.l2_normalized();

        let dot: f64 = base
            .components()
            .iter()
            .zip(other.components())
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        cosines.push(dot);
        overlap_trained.push(
            wta_encode(&trained, &base, cfg.l_wta)?
                .overlap(&wta_encode(&trained, &other, cfg.l_wta)?) as f64,
        );
        overlap_random.push(
            wta_encode(&random, &base, cfg.l_wta)?
                .overlap(&wta_encode(&random, &other, cfg.l_wta)?) as f64,
        );
    }
    let lsh_spearman_trained = spearman(&cosines, &overlap_trained);
    let lsh_spearman_random = spearman(&cosines, &overlap_random);

    // Monte-Carlo tails vs the analytic bounds, single-entry case.
    let mut tail_cells = Vec::new();
    for &s in &cfg.tail_s {
        for &l in &cfg.tail_l {
            let tau_upper: Vec<f64> = [0.05, 0.1, 0.15, 0.2]
                .iter()
                .map(|d| s + d)
                .filter(|t| *t < 1.0)
                .collect();
            let tau_lower: Vec<f64> = [0.05, 0.1, 0.15, 0.2]
                .iter()
                .map(|d| s - d)
                .filter(|t| *t > 0.0)
                .collect();
            let sim = tail_bound_simulation(
                s,
                l,
                cfg.tail_trials,
                &tau_upper,
                &tau_lower,
                cfg.seed ^ (l as u64) << 8 ^ (s * 1000.0) as u64,
            )?;
            for p in &sim.upper {
                let bound = gamma_coefficient(s, p.tau)?.powi(l as i32);
                tail_cells.push(make_cell(s, l, p.tau, true, p.frequency, bound, cfg.tail_trials));
            }
            for p in &sim.lower {
                let bound = xi_coefficient(s, p.tau)?.powi(l as i32);
                tail_cells.push(make_cell(s, l, p.tau, false, p.frequency, bound, cfg.tail_trials));
            }
        }
    }
    let tail_all_within = tail_cells.iter().all(|c| c.within_bound);

    // Connectivity vs sketch AND-collisions on the clustered corpus.
    let enc = encode_database(&db, &random, cfg.l_wta)?;
    let sketches = build_sketches(&enc);
    let query = db.get(0).unwrap();
    let query_sketch: &BinarySketch = &sketches[0];
    let take = cfg.connectivity_pairs.min(db.len() - 1);
    let mut connectivities = Vec::with_capacity(take);
    let mut collisions = Vec::with_capacity(take);
    for (target, sketch) in db.sets().iter().zip(sketches.iter()).skip(1).take(take) {
        connectivities.push(connectivity(query, target)?);
        collisions.push(query_sketch.and_popcount(sketch)? as f64);
    }
    let connectivity_spearman = spearman(&collisions, &connectivities);

    Ok(StatReport {
        lsh_spearman_trained,
        lsh_spearman_random,
        tail_cells,
        tail_all_within,
        connectivity_spearman,
        mt_first_quartile_mean: mt_first,
        mt_final_quartile_mean: mt_final,
    })
}

fn make_cell(
    s: f64,
    l: usize,
    tau: f64,
    upper_side: bool,
    frequency: f64,
    bound: f64,
    trials: usize,
) -> TailCell {
    // Allow 3 standard errors above the bound; the bound itself caps the
    // worst-case sampling variance.
    let p = bound.min(1.0);
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    TailCell {
        s,
        hash_count: l,
        tau,
        upper_side,
        frequency,
        bound,
        within_bound: frequency <= bound + 3.0 * se,
    }
}
