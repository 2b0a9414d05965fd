//! End-to-end tests of the command surface: every subcommand, the exit-code
//! contract, and the cross-command workflows.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biovss"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn biovss")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        stdout(out),
        stderr(out)
    );
}

fn synth(dir: &Path, name: &str, sets: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let out = run(&[
        "synth",
        "--out",
        path.to_str().unwrap(),
        "--sets",
        &sets.to_string(),
        "--dim",
        "64",
        "--clusters",
        "20",
        "--m-min",
        "2",
        "--m-max",
        "8",
        "--spread",
        "0.15",
        "--seed",
        &seed.to_string(),
    ]);
    assert_ok(&out);
    path
}

/// `query_id,rank,set_id,distance` rows without the header.
fn csv_rows(path: &Path) -> Vec<(u64, usize, u64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|line| {
            let mut parts = line.split(',');
            (
                parts.next().unwrap().parse().unwrap(),
                parts.next().unwrap().parse().unwrap(),
                parts.next().unwrap().parse().unwrap(),
                parts.next().unwrap().parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = run(&["build", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn synth_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.bvss", 200, 7);
    let b = synth(dir.path(), "b.bvss", 200, 7);
    let c = synth(dir.path(), "c.bvss", 200, 8);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn build_same_seed_gives_identical_index_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 300, 11);
    let idx1 = dir.path().join("i1.bvix");
    let idx2 = dir.path().join("i2.bvix");
    for idx in [&idx1, &idx2] {
        let out = run(&[
            "build",
            "--dataset",
            data.to_str().unwrap(),
            "--out",
            idx.to_str().unwrap(),
            "--bloom-size",
            "512",
            "--wta",
            "32",
            "--seed",
            "21",
        ]);
        assert_ok(&out);
        // Stage timings are printed in table shape.
        let text = stdout(&out);
        assert!(text.contains("stage,seconds"));
        assert!(text.contains("hashing,"));
        assert!(text.contains("count_bloom,"));
        assert!(text.contains("single_bloom,"));
        assert!(text.contains("inverted_index,"));
    }
    assert_eq!(std::fs::read(&idx1).unwrap(), std::fs::read(&idx2).unwrap());
}

#[test]
fn build_rejects_wta_beyond_bloom_size() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 50, 3);
    let out = run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("x.bvix").to_str().unwrap(),
        "--bloom-size",
        "32",
        "--wta",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("wta"));
}

#[test]
fn missing_dataset_is_an_io_error() {
    let out = run(&[
        "build",
        "--dataset",
        "/nonexistent/nope.bvss",
        "--out",
        "/tmp/never.bvix",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn corrupt_index_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 100, 5);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
    ]));
    let mut bytes = std::fs::read(&idx).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&idx, bytes).unwrap();
    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        data.to_str().unwrap(),
        "--mode",
        "biovss++",
    ]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

#[test]
fn unknown_metric_and_mode_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 50, 2);
    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        data.to_str().unwrap(),
        "--mode",
        "exact",
        "--metric",
        "cosine",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("metric"));

    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        data.to_str().unwrap(),
        "--mode",
        "fancy",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("mode"));
}

#[test]
fn query_rejects_index_built_from_another_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data_a = synth(dir.path(), "a.bvss", 100, 6);
    let data_b = synth(dir.path(), "b.bvss", 100, 60);
    let idx = dir.path().join("a.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data_a.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
    ]));
    let out = run(&[
        "query",
        "--dataset",
        data_b.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        data_b.to_str().unwrap(),
    ]);
    // Same id tables (both 0..100) but different vectors cannot be told
    // apart by ids alone; the command still answers. A different-sized or
    // reordered corpus must be rejected.
    let data_c = synth(dir.path(), "c.bvss", 80, 61);
    let _ = out;
    let out = run(&[
        "query",
        "--dataset",
        data_c.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        data_c.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("dataset"), "{}", stderr(&out));
}

#[test]
fn query_param_mismatch_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 100, 6);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
    ]));
    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        data.to_str().unwrap(),
        "--bloom-size",
        "1024",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("bloom_size"), "{}", stderr(&out));
}

fn query_file(dir: &Path, data: &Path, n: usize) -> PathBuf {
    // Reuse the first sets of the corpus as a query file via JSON lines to
    // also exercise the interop reader.
    let db = biovss::storage::read_dataset_auto(data).unwrap();
    let mut text = String::new();
    for set in db.sets().iter().take(n) {
        let vectors: Vec<Vec<f32>> = set
            .vectors()
            .iter()
            .map(|v| v.components().to_vec())
            .collect();
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({"id": set.id(), "vectors": vectors})
        ));
    }
    let path = dir.join("queries.jsonl");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn exact_mode_equals_cascade_open_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 400, 13);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "512",
        "--wta",
        "32",
        "--seed",
        "13",
    ]));
    let queries = query_file(dir.path(), &data, 10);

    let exact_csv = dir.path().join("exact.csv");
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "exact",
        "--topk",
        "5",
        "--out",
        exact_csv.to_str().unwrap(),
    ]));

    let open_csv = dir.path().join("open.csv");
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "biovss++",
        "--topk",
        "5",
        "--access",
        "512",
        "--min-count",
        "0",
        "--candidates",
        "400",
        "--out",
        open_csv.to_str().unwrap(),
    ]));

    assert_eq!(csv_rows(&exact_csv), csv_rows(&open_csv));
}

#[test]
fn linear_scan_mode_with_full_budget_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 200, 17);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
        "--seed",
        "17",
    ]));
    let queries = query_file(dir.path(), &data, 5);
    let exact_csv = dir.path().join("exact.csv");
    let scan_csv = dir.path().join("scan.csv");
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "exact",
        "--topk",
        "3",
        "--out",
        exact_csv.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "biovss",
        "--topk",
        "3",
        "--candidates",
        "200",
        "--out",
        scan_csv.to_str().unwrap(),
    ]));
    assert_eq!(csv_rows(&exact_csv), csv_rows(&scan_csv));
}

#[test]
fn meanmin_metric_is_routed() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 150, 19);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
    ]));
    let queries = query_file(dir.path(), &data, 5);
    let exact_csv = dir.path().join("exact_mm.csv");
    let open_csv = dir.path().join("open_mm.csv");
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "exact",
        "--metric",
        "meanmin",
        "--topk",
        "3",
        "--out",
        exact_csv.to_str().unwrap(),
    ]));
    assert_ok(&run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--mode",
        "biovss++",
        "--metric",
        "meanmin",
        "--topk",
        "3",
        "--access",
        "256",
        "--min-count",
        "0",
        "--candidates",
        "150",
        "--out",
        open_csv.to_str().unwrap(),
    ]));
    assert_eq!(csv_rows(&exact_csv), csv_rows(&open_csv));
}

#[test]
fn gt_then_cascade_open_bench_has_recall_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 300, 23);

    // Ground truth CSV exists and is well-formed.
    let gt_csv = dir.path().join("gt.csv");
    let queries = query_file(dir.path(), &data, 8);
    assert_ok(&run(&[
        "gt",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--topk",
        "3",
        "--out",
        gt_csv.to_str().unwrap(),
    ]));
    let rows = csv_rows(&gt_csv);
    assert_eq!(rows.len(), 8 * 3);
    for w in rows.chunks(3) {
        assert!(w[0].3 <= w[1].3 && w[1].3 <= w[2].3, "distances not sorted");
    }

    // Cascade-open bench: recall column must be exactly 1.
    let bench_csv = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
        "--access",
        "256",
        "--min-count",
        "0",
        "--candidates",
        "300",
        "--topk",
        "1,3",
        "--seed",
        "23",
        "--out",
        bench_csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&bench_csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let recall_col = header.split(',').position(|c| c == "recall").unwrap();
    let mut saw = 0;
    for line in lines {
        let recall: f64 = line.split(',').nth(recall_col).unwrap().parse().unwrap();
        assert_eq!(recall, 1.0, "cascade-open recall must be 1.0: {line}");
        saw += 1;
    }
    assert_eq!(saw, 2);
}

#[test]
fn bench_wta_sweep_recall_trend() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 2000, 9);
    let bench_csv = dir.path().join("sweep.csv");
    let out = run(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--num-queries",
        "100",
        "--bloom-size",
        "1024",
        "--wta",
        "16,32,48,64",
        "--access",
        "3",
        "--min-count",
        "1",
        "--candidates",
        "200",
        "--topk",
        "3",
        "--seed",
        "9",
        "--out",
        bench_csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&bench_csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let wta_col = header.split(',').position(|c| c == "l_wta").unwrap();
    let recall_col = header.split(',').position(|c| c == "recall").unwrap();
    let mut by_wta = std::collections::BTreeMap::new();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let wta: usize = cells[wta_col].parse().unwrap();
        let recall: f64 = cells[recall_col].parse().unwrap();
        by_wta.insert(wta, recall);
    }
    assert_eq!(by_wta.len(), 4);
    // The paper-trend assertion: recall does not degrade from 16 to 48.
    assert!(by_wta[&16] <= by_wta[&32] + 1e-12, "{by_wta:?}");
    assert!(by_wta[&32] <= by_wta[&48] + 1e-12, "{by_wta:?}");
}

#[test]
fn query_text_mode_prints_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 100, 29);
    let idx = dir.path().join("i.bvix");
    assert_ok(&run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
    ]));
    let queries = query_file(dir.path(), &data, 2);
    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--topk",
        "3",
        "--candidates",
        "50",
    ]);
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("# query mode=biovss++"), "{text}");
    assert!(text.contains("|F1|="), "{text}");
    assert!(text.contains("exact_evals="), "{text}");
}

#[test]
fn trained_build_round_trips_through_query() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.bvss", 150, 31);
    let idx = dir.path().join("trained.bvix");
    let out = run(&[
        "build",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--bloom-size",
        "256",
        "--wta",
        "16",
        "--seed",
        "31",
        "--epochs",
        "2",
        "--batch-size",
        "200",
    ]);
    assert_ok(&out);
    assert!(stdout(&out).contains("training,"));
    let queries = query_file(dir.path(), &data, 3);
    let out = run(&[
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--index",
        idx.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--topk",
        "3",
        "--candidates",
        "150",
        "--format",
        "csv",
    ]);
    assert_ok(&out);
    // Each query ranks itself first at distance zero.
    for chunk in stdout(&out)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("query_id"))
        .collect::<Vec<_>>()
        .chunks(3)
    {
        let first: Vec<&str> = chunk[0].split(',').collect();
        assert_eq!(first[0], first[2], "self not ranked first: {chunk:?}");
    }
}
