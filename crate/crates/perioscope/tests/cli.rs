mod fixture;

use std::path::Path;
use std::process::{Command, Output};

fn perioscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perioscope")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = perioscope(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn small_corpus(dir: &Path) {
    ok(&["generate", "--output", p(dir), "--series", "6", "--slots", "2000", "--seed", "9"]);
}

#[test]
fn generate_is_deterministic_and_reports_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = ok(&["generate", "--output", p(&a), "--series", "6", "--slots", "2000", "--seed", "9"]);
    ok(&["generate", "--output", p(&b), "--series", "6", "--slots", "2000", "--seed", "9"]);
    assert!(out.starts_with("series 6, planted periodicities "), "{out}");
    for f in ["series.jsonl", "truth.jsonl"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)));
    }
    assert_eq!(read(&a.join("series.jsonl")).lines().count(), 6);
}

#[test]
fn worker_count_does_not_change_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let series = corpus.join("series.jsonl");
    let (one, four) = (tmp.path().join("one"), tmp.path().join("four"));
    ok(&["detect", "--input", p(&series), "--output", p(&one), "--workers", "1"]);
    ok(&["detect", "--input", p(&series), "--output", p(&four), "--workers", "4"]);
    for f in ["periodicities.jsonl", "summary.csv", "durations.csv", "distinct_values.csv"] {
        assert_eq!(read(&one.join(f)), read(&four.join(f)), "{f}");
    }
    let text = read(&one.join("periodicities.jsonl"));
    let keys: Vec<(String, u64)> = text
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (v["series_id"].as_str().unwrap().to_string(), v["start_slot"].as_u64().unwrap())
        })
        .collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]), "records are not ordered");
}

#[test]
fn detections_score_against_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let det = tmp.path().join("det");
    ok(&["detect", "--input", p(&corpus.join("series.jsonl")), "--output", p(&det)]);
    let eval = tmp.path().join("eval");
    let detections = det.join("periodicities.jsonl");
    ok(&["evaluate", "--input", p(&corpus), "--detections", p(&detections), "--output", p(&eval)]);
    let scored: serde_json::Value = serde_json::from_str(&read(&eval.join("report.json"))).unwrap();

    // Scoring the file gives what evaluating in process gives.
    let direct = tmp.path().join("direct");
    ok(&["evaluate", "--input", p(&corpus), "--output", p(&direct)]);
    let run: serde_json::Value = serde_json::from_str(&read(&direct.join("report.json"))).unwrap();
    assert_eq!(scored, run);
    let row = &run["rows"][0];
    assert!(row["found_rate"].as_f64().unwrap() > 0.5);
    assert_eq!(read(&eval.join("fn_by_period_length.csv")).lines().next(), Some("period,count"));
    assert_eq!(read(&eval.join("fn_by_repetitions.csv")).lines().next(), Some("repetitions,count"));
}

#[test]
fn empty_detections_find_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let eval = tmp.path().join("eval");
    ok(&["evaluate", "--input", p(&corpus), "--detections", p(&empty), "--output", p(&eval)]);
    let sweep = read(&eval.join("noise_sweep.csv"));
    assert_eq!(sweep.lines().nth(1), Some("0,0.000000,0.000000,0.000000"));
}

#[test]
fn unknown_series_in_detections_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let bogus = tmp.path().join("bogus.jsonl");
    std::fs::write(
        &bogus,
        r#"{"series_id":"nope","period_slots":2,"period_seconds":120,"start_ts":0,"end_ts":600,"repetitions":5,"mismatch_count":0,"pattern":["a","b"],"start_slot":0,"end_slot":10}
"#,
    )
    .unwrap();
    let out = perioscope(&["evaluate", "--input", p(&corpus), "--detections", p(&bogus), "--output", p(&tmp.path().join("e"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown series nope"));
}

#[test]
fn noise_sweep_rows_follow_the_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let eval = tmp.path().join("eval");
    ok(&["evaluate", "--series", "3", "--slots", "2000", "--noise", "0,2,5,10,15", "--output", p(&eval)]);
    let pcts: Vec<String> = read(&eval.join("noise_sweep.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(pcts, ["0", "2", "5", "10", "15"]);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = p(tmp.path());
    assert_eq!(perioscope(&["generate", "--output", out, "--period-min", "10", "--period-max", "5"]).status.code(), Some(2));
    assert_eq!(perioscope(&["detect", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(perioscope(&["detect", "--output", out]).status.code(), Some(2));
    assert_eq!(perioscope(&["detect", "--input", out, "--output", out, "--gap-cv", "3"]).status.code(), Some(2));
    let missing = tmp.path().join("missing.jsonl");
    assert_eq!(perioscope(&["detect", "--input", p(&missing), "--output", out]).status.code(), Some(1));
    assert_eq!(perioscope(&["ingest-bgp", "--input", p(&missing), "--output", out]).status.code(), Some(2));
}

#[test]
fn flags_win_over_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let config = tmp.path().join("config.json");
    let series = corpus.join("series.jsonl");
    std::fs::write(&config, format!(r#"{{"input": {:?}, "min_reps": 1000}}"#, p(&series))).unwrap();
    let (strict, relaxed) = (tmp.path().join("strict"), tmp.path().join("relaxed"));
    let a = ok(&["detect", "--config", p(&config), "--output", p(&strict)]);
    let b = ok(&["detect", "--config", p(&config), "--output", p(&relaxed), "--min-reps", "3"]);
    assert!(a.ends_with("periodicities 0\n"), "{a}");
    assert!(!b.ends_with("periodicities 0\n"), "{b}");
    assert_eq!(read(&strict.join("periodicities.jsonl")), "");

    std::fs::write(&config, r#"{"min-reps": 3}"#).unwrap();
    let out = perioscope(&["detect", "--config", p(&config), "--input", p(&series), "--output", p(&strict)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn traceroutes_with_paris_attribution() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("tr.jsonl");
    let mut text = fixture::traceroute_jsonl();
    text.push_str("{\"ts\": 5, \"src\": \"x\"}\n");
    std::fs::write(&input, text).unwrap();
    let out = tmp.path().join("out");
    let run = perioscope(&["ingest-traceroute", "--paris", "--input", p(&input), "--output", p(&out)]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("skipped 1 malformed traceroute line"));
    let records = read(&out.join("periodicities.jsonl"));
    assert_eq!(records.lines().count(), 7);
    assert!(records.lines().all(|l| l.contains("\"paris_attribution\"")));
    assert_eq!(read(&out.join("pair_paths.csv")).lines().count(), 21);
}

#[test]
fn beacon_through_ingest_bgp() {
    let tmp = tempfile::tempdir().unwrap();
    let stream = tmp.path().join("beacon.jsonl");
    ok(&["beacon", "--output", p(&stream), "--peers", "20", "--hours", "12"]);
    let out = tmp.path().join("out");
    ok(&[
        "ingest-bgp", "--input", p(&stream), "--prefix", "84.205.64.0/24", "--step", "60", "--start", "0", "--end", "43200",
        "--state-threshold", "0.95", "--output", p(&out),
    ]);
    let records = read(&out.join("periodicities.jsonl"));
    let v: serde_json::Value = serde_json::from_str(records.lines().next().unwrap()).unwrap();
    assert_eq!(records.lines().count(), 1);
    assert_eq!(v["series_id"], "84.205.64.0/24");
    assert_eq!(v["period_seconds"], 14_400);
    assert_eq!(v["pattern_states"], 2);
    assert_eq!(v["as_swaps"], serde_json::json!([]));
}
