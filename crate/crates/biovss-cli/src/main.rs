//! Command-line front end: dataset synthesis, index build, query, ground
//! truth, and benchmarking.
//!
//! Every run prints an effective-config header (`# key=value` lines) so
//! output files are self-describing. Exit codes: 0 success, 2 usage,
//! 3 validation, 4 I/O, 5 integrity/parse.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use biovss::dataset::{VectorSet, VectorSetDatabase};
use biovss::distance::SetMetric;
use biovss::error::Error;
use biovss::eval::{
    brute_force_topk, ground_truth_csv, run_benchmark, BenchConfig, GroundTruthRow,
};
use biovss::hash::{
    encode_database, random_projection, train_projection, TrainingConfig, DEFAULT_DENSITY,
};
use biovss::search::{biovss_pp_search, biovss_search, SearchParams, SearchResult};
use biovss::storage::{load_index, read_dataset_auto, save_index, write_dataset, IndexBundle};
use biovss::synth::{generate_synthetic, SynthConfig};

#[derive(Parser)]
#[command(
    name = "biovss",
    version,
    about = "Approximate top-k vector set search under the Hausdorff distance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clustered synthetic dataset file.
    Synth(SynthArgs),
    /// Build an index (projection, filters, sketches, inverted index).
    Build(BuildArgs),
    /// Run top-k queries against a dataset and index.
    Query(QueryArgs),
    /// Compute exact ground truth as CSV.
    Gt(GtArgs),
    /// Sweep parameters and report recall and timing as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
    /// Number of vector sets.
    #[arg(long, default_value_t = 10_000)]
    sets: usize,
    /// Vector dimensionality.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Number of planted clusters.
    #[arg(long, default_value_t = 20)]
    clusters: usize,
    /// Minimum vectors per set.
    #[arg(long, default_value_t = 2)]
    m_min: usize,
    /// Maximum vectors per set.
    #[arg(long, default_value_t = 8)]
    m_max: usize,
    /// Gaussian spread around the cluster center.
    #[arg(long, default_value_t = 0.15)]
    spread: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    /// Input dataset (binary or JSON-lines).
    #[arg(long)]
    dataset: PathBuf,
    /// Output index path.
    #[arg(long)]
    out: PathBuf,
    /// Bloom filter length in bits (b).
    #[arg(long, default_value_t = 1024)]
    bloom_size: usize,
    /// Winner-take-all count (set bits per code).
    #[arg(long, default_value_t = 64)]
    wta: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Train the projection for this many epochs (0 keeps it random).
    #[arg(long, default_value_t = 0)]
    epochs: usize,
    /// Inputs per training batch.
    #[arg(long, default_value_t = 10_000)]
    batch_size: usize,
}

#[derive(Args)]
struct QueryArgs {
    /// Dataset the index was built from (needed for the exact rerank).
    #[arg(long)]
    dataset: PathBuf,
    /// Index file; required for the biovss and biovss++ modes.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Query sets (dataset-format file).
    #[arg(long)]
    queries: PathBuf,
    /// Results per query.
    #[arg(long, default_value_t = 3)]
    topk: usize,
    /// Inverted lists accessed (A).
    #[arg(long, default_value_t = 3)]
    access: usize,
    /// Minimum stored count (M).
    #[arg(long, default_value_t = 1)]
    min_count: u32,
    /// Candidate budget (c).
    #[arg(long, default_value_t = 50_000)]
    candidates: usize,
    /// Rerank metric.
    #[arg(long, default_value = "hausdorff")]
    metric: String,
    /// Pipeline: exact, biovss, or biovss++.
    #[arg(long, default_value = "biovss++")]
    mode: String,
    /// Must match the index when given.
    #[arg(long)]
    bloom_size: Option<usize>,
    /// Must match the index when given.
    #[arg(long)]
    wta: Option<usize>,
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: text or csv (csv when --out is set).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct GtArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 5)]
    topk: usize,
    #[arg(long, default_value = "hausdorff")]
    metric: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Keep a query's own id in its candidate pool.
    #[arg(long, default_value_t = false)]
    include_self: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Query sets; sampled in-corpus when omitted.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Number of in-corpus queries to sample when --queries is omitted.
    #[arg(long, default_value_t = 500)]
    num_queries: usize,
    /// Bloom sizes to sweep (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    bloom_size: Vec<usize>,
    /// WTA counts to sweep (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "64")]
    wta: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    access: usize,
    #[arg(long, default_value_t = 1)]
    min_count: u32,
    /// Candidate budgets to sweep (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "50000")]
    candidates: Vec<usize>,
    /// Recall depths to report (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "3,5")]
    topk: Vec<usize>,
    #[arg(long, default_value = "hausdorff")]
    metric: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Train the projection for this many epochs (0 keeps it random).
    #[arg(long, default_value_t = 0)]
    epochs: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Keep a query's own id in its candidate pool.
    #[arg(long, default_value_t = false)]
    include_self: bool,
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe (head, grep) closes early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. }
        | Error::DimensionMismatch { .. }
        | Error::CodeLengthMismatch { .. }
        | Error::Empty { .. }
        | Error::ZeroNormVector => 3,
        Error::Io(_) => 4,
        Error::Parse { .. } | Error::Integrity { .. } | Error::VersionMismatch { .. } => 5,
    }
}

fn run(cli: Cli) -> biovss::Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Build(args) => cmd_build(args),
        Command::Query(args) => cmd_query(args),
        Command::Gt(args) => cmd_gt(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_synth(args: SynthArgs) -> biovss::Result<()> {
    println!(
        "# synth sets={} dim={} clusters={} m_range=[{},{}] spread={} seed={} out={}",
        args.sets,
        args.dim,
        args.clusters,
        args.m_min,
        args.m_max,
        args.spread,
        args.seed,
        args.out.display()
    );
    let db = generate_synthetic(&SynthConfig {
        n_sets: args.sets,
        m_range: (args.m_min, args.m_max),
        dim: args.dim,
        n_clusters: args.clusters,
        spread: args.spread,
        seed: args.seed,
    })?;
    write_dataset(&db, &args.out)?;
    println!(
        "# wrote {} sets ({} vectors) to {}",
        db.len(),
        db.total_vectors(),
        args.out.display()
    );
    Ok(())
}

fn cmd_build(args: BuildArgs) -> biovss::Result<()> {
    if args.bloom_size < args.wta {
        return Err(Error::InvalidParameter {
            name: "wta",
            message: format!(
                "wta ({}) must not exceed bloom size ({})",
                args.wta, args.bloom_size
            ),
        });
    }
    println!(
        "# build dataset={} out={} bloom_size={} wta={} seed={} epochs={} batch_size={}",
        args.dataset.display(),
        args.out.display(),
        args.bloom_size,
        args.wta,
        args.seed,
        args.epochs,
        args.batch_size
    );
    let db = read_dataset_auto(&args.dataset)?;

    let train_start = Instant::now();
    let projection = if args.epochs > 0 {
        let cfg = TrainingConfig {
            epochs: args.epochs,
            batch_size: args.batch_size,
            seed: args.seed,
            initial_learning_rate: 0.1,
        };
        train_projection(&db, args.bloom_size, &cfg)?.0
    } else {
        random_projection(args.seed, args.bloom_size, db.dim(), DEFAULT_DENSITY)?
    };
    let train_secs = train_start.elapsed().as_secs_f64();

    let (bundle, timings) = IndexBundle::build_timed(&db, projection, args.wta)?;
    let write_start = Instant::now();
    save_index(&bundle, &args.out)?;
    let write_secs = write_start.elapsed().as_secs_f64();

    println!("stage,seconds");
    if args.epochs > 0 {
        println!("training,{train_secs:.3}");
    }
    println!("hashing,{:.3}", timings.hashing.as_secs_f64());
    println!("count_bloom,{:.3}", timings.count_filters.as_secs_f64());
    println!("single_bloom,{:.3}", timings.sketches.as_secs_f64());
    println!("inverted_index,{:.3}", timings.inverted_index.as_secs_f64());
    println!("write,{write_secs:.3}");
    Ok(())
}

fn cmd_query(args: QueryArgs) -> biovss::Result<()> {
    let metric: SetMetric = args.metric.parse()?;
    let db = read_dataset_auto(&args.dataset)?;
    let queries = read_dataset_auto(&args.queries)?;
    if queries.dim() != db.dim() {
        return Err(Error::DimensionMismatch {
            expected: db.dim(),
            got: queries.dim(),
        });
    }

    let format = args
        .format
        .clone()
        .unwrap_or_else(|| if args.out.is_some() { "csv".into() } else { "text".into() });
    if format != "csv" && format != "text" {
        return Err(Error::InvalidParameter {
            name: "format",
            message: format!("unknown format `{format}` (expected text|csv)"),
        });
    }

    let mode = args.mode.as_str();
    println!(
        "# query mode={} metric={} topk={} access={} min_count={} candidates={} queries={}",
        mode,
        metric,
        args.topk,
        args.access,
        args.min_count,
        args.candidates,
        queries.len()
    );

    let mut out_lines = String::from("query_id,rank,set_id,distance\n");
    let mut text_lines = String::new();

    match mode {
        "exact" => {
            for q in queries.sets() {
                let row = brute_force_topk(q, &db, metric, args.topk, None)?;
                append_truth(&mut out_lines, &mut text_lines, &row);
            }
        }
        "biovss" | "biovss++" => {
            let index_path = args.index.as_ref().ok_or(Error::InvalidParameter {
                name: "index",
                message: format!("--index is required for mode {mode}"),
            })?;
            let bundle = load_index(index_path)?;
            check_index_flags(&args, &bundle)?;
            if bundle.projection.input_dim() != db.dim() {
                return Err(Error::DimensionMismatch {
                    expected: db.dim(),
                    got: bundle.projection.input_dim(),
                });
            }
            // The bundle's structures are aligned with the dataset it was
            // built from; a different or reordered dataset would silently
            // pair sketches with the wrong sets.
            if bundle.ids != db.ids() {
                return Err(Error::InvalidParameter {
                    name: "dataset",
                    message: "dataset id table does not match the index (was the index \
                              built from this dataset?)"
                        .into(),
                });
            }
            let params = SearchParams {
                k: args.topk,
                access_lists: args.access.min(bundle.params.code_length),
                min_count: args.min_count,
                candidate_budget: args.candidates,
                l_wta: bundle.params.l_wta,
                code_length: bundle.params.code_length,
                metric,
            };
            if mode == "biovss" {
                // The linear scan needs per-vector codes; re-encode under
                // the stored projection.
                let enc = encode_database(&db, &bundle.projection, bundle.params.l_wta)?;
                for q in queries.sets() {
                    let result = biovss_search(q, &params, &db, &enc, &bundle.projection)?;
                    append_result(&mut out_lines, &mut text_lines, q, &result);
                }
            } else {
                for q in queries.sets() {
                    let result = biovss_pp_search(
                        q,
                        &params,
                        &db,
                        &bundle.inverted,
                        &bundle.sketches,
                        &bundle.projection,
                    )?;
                    append_result(&mut out_lines, &mut text_lines, q, &result);
                }
            }
        }
        other => {
            return Err(Error::InvalidParameter {
                name: "mode",
                message: format!("unknown mode `{other}` (expected exact|biovss|biovss++)"),
            });
        }
    }

    match (&args.out, format.as_str()) {
        (Some(path), "csv") => std::fs::write(path, out_lines)?,
        (Some(path), _) => std::fs::write(path, text_lines)?,
        (None, "csv") => print!("{out_lines}"),
        (None, _) => print!("{text_lines}"),
    }
    Ok(())
}

fn check_index_flags(args: &QueryArgs, bundle: &IndexBundle) -> biovss::Result<()> {
    if let Some(b) = args.bloom_size {
        if b != bundle.params.code_length {
            return Err(Error::InvalidParameter {
                name: "bloom_size",
                message: format!(
                    "requested {b} but index was built with {}",
                    bundle.params.code_length
                ),
            });
        }
    }
    if let Some(l) = args.wta {
        if l != bundle.params.l_wta {
            return Err(Error::InvalidParameter {
                name: "wta",
                message: format!(
                    "requested {l} but index was built with {}",
                    bundle.params.l_wta
                ),
            });
        }
    }
    Ok(())
}

fn append_truth(csv: &mut String, text: &mut String, row: &GroundTruthRow) {
    text.push_str(&format!("query {}:\n", row.query_id));
    for (rank, hit) in row.hits.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{:.9}\n",
            row.query_id,
            rank + 1,
            hit.set_id,
            hit.distance
        ));
        text.push_str(&format!(
            "  {:>2}. set {:<8} distance {:.6}\n",
            rank + 1,
            hit.set_id,
            hit.distance
        ));
    }
}

fn append_result(csv: &mut String, text: &mut String, query: &VectorSet, result: &SearchResult) {
    text.push_str(&format!(
        "query {}: |F1|={} |F2|={} exact_evals={}{}\n",
        query.id(),
        result.stage1_survivors,
        result.stage2_survivors,
        result.exact_evaluations,
        if result.truncated { " (truncated)" } else { "" }
    ));
    for (rank, hit) in result.hits.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{:.9}\n",
            query.id(),
            rank + 1,
            hit.set_id,
            hit.distance
        ));
        text.push_str(&format!(
            "  {:>2}. set {:<8} distance {:.6}\n",
            rank + 1,
            hit.set_id,
            hit.distance
        ));
    }
}

fn cmd_gt(args: GtArgs) -> biovss::Result<()> {
    let metric: SetMetric = args.metric.parse()?;
    let db = read_dataset_auto(&args.dataset)?;
    let queries = read_dataset_auto(&args.queries)?;
    println!(
        "# gt metric={} topk={} queries={} include_self={} out={}",
        metric,
        args.topk,
        queries.len(),
        args.include_self,
        args.out.display()
    );
    let mut rows = Vec::with_capacity(queries.len());
    for q in queries.sets() {
        let exclude = if args.include_self { None } else { Some(q.id()) };
        rows.push(brute_force_topk(q, &db, metric, args.topk, exclude)?);
    }
    std::fs::write(&args.out, ground_truth_csv(&rows))?;
    println!("# wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn sample_in_corpus(db: &VectorSetDatabase, count: usize, seed: u64) -> Vec<VectorSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = count.min(db.len());
    rand::seq::index::sample(&mut rng, db.len(), take)
        .iter()
        .map(|pos| db.get(pos).unwrap().clone())
        .collect()
}

fn cmd_bench(args: BenchArgs) -> biovss::Result<()> {
    let metric: SetMetric = args.metric.parse()?;
    let db = read_dataset_auto(&args.dataset)?;
    let queries: Vec<VectorSet> = match &args.queries {
        Some(path) => read_dataset_auto(path)?.sets().to_vec(),
        None => sample_in_corpus(&db, args.num_queries, args.seed ^ 0x51ed),
    };
    println!(
        "# bench sets={} queries={} bloom_size={:?} wta={:?} access={} min_count={} candidates={:?} topk={:?} metric={} seed={} epochs={}",
        db.len(),
        queries.len(),
        args.bloom_size,
        args.wta,
        args.access,
        args.min_count,
        args.candidates,
        args.topk,
        metric,
        args.seed,
        args.epochs
    );

    let mut configs = Vec::new();
    for &b in &args.bloom_size {
        for &l in &args.wta {
            for &c in &args.candidates {
                configs.push(BenchConfig {
                    code_length: b,
                    l_wta: l,
                    access_lists: args.access.min(b),
                    min_count: args.min_count,
                    candidate_budget: c,
                    metric,
                    seed: args.seed,
                    train_epochs: (args.epochs > 0).then_some(args.epochs),
                });
            }
        }
    }
    let report = run_benchmark(&db, &queries, &args.topk, &configs, !args.include_self)?;
    std::fs::write(&args.out, report.to_csv())?;
    for row in &report.rows {
        println!(
            "# b={} wta={} c={} k={} recall={:.4} speedup={:.1}x evals/query={:.0}",
            row.config.code_length,
            row.config.l_wta,
            row.config.candidate_budget,
            row.k,
            row.recall,
            row.speedup,
            row.mean_exact_evaluations
        );
    }
    println!("# wrote {} rows to {}", report.rows.len(), args.out.display());
    Ok(())
}
