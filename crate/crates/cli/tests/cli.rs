use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use behav_core::analysis::{correlate, Method};
use behav_core::exploration::missingness;
use behav_core::ingest::{read_source, SourceSpec};
use behav_core::{Alignment, FeatureTable, WindowSpec};
use tempfile::TempDir;

struct Fixture {
    _dir: TempDir,
    data: PathBuf,
    out: PathBuf,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let out = dir.path().join("out");
        let o = Command::new(env!("CARGO_BIN_EXE_behav"))
            .args(["sample", "--users", "2", "--days", "3", "--seed", "11", "--out"])
            .arg(&data)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        Fixture { _dir: dir, data, out }
    }

    fn config(&self) -> PathBuf {
        self.data.join("pipeline.toml")
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_with(&self.config(), args)
    }

    fn run_with(&self, config: &Path, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_behav"))
            .args(&args[..1])
            .arg("--config")
            .arg(config)
            .args(&args[1..])
            .env("BEHAV_OUTPUT_DIR", &self.out)
            .output()
            .unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_reports_every_source() {
    let f = Fixture::new();
    let o = f.run(&["validate"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let ok: Vec<&str> = text.lines().filter(|l| l.starts_with("ok")).collect();
    assert_eq!(ok.len(), 9);
    assert!(ok.iter().all(|l| l.contains(", 2 users,")), "{text}");
}

#[test]
fn missing_column_is_a_data_error() {
    let f = Fixture::new();
    let path = f.data.join("screen.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let drop = header.iter().position(|h| *h == "status").unwrap();
    let keep = |l: &str| {
        l.split(',')
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, c)| c)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut rewritten = keep(&header.join(","));
    for l in lines {
        rewritten.push('\n');
        rewritten.push_str(&keep(l));
    }
    std::fs::write(&path, rewritten).unwrap();

    let o = f.run(&["validate"]);
    assert_eq!(code(&o), 1);
    let out = String::from_utf8(o.stdout).unwrap();
    let line = out.lines().find(|l| l.starts_with("error")).unwrap();
    assert!(line.contains("screen") && line.contains("status"), "{line}");
}

#[test]
fn usage_errors_exit_with_two() {
    let f = Fixture::new();
    let bad = f.data.join("bad.toml");
    std::fs::write(&bad, "version = 1\nsources = []\n").unwrap();
    assert_eq!(code(&f.run_with(&bad, &["validate"])), 2);
    assert_eq!(code(&f.run_with(&f.data.join("absent.toml"), &["validate"])), 2);
    assert_eq!(code(&f.run(&["extract", "--no-such-flag"])), 2);
    assert_eq!(code(&f.run(&["extract", "--jobs", "0"])), 2);
    let o = f.run(&["extract", "--features", "no_such_feature"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no_such_feature"));
}

#[test]
fn extract_keeps_only_selected_features() {
    let f = Fixture::new();
    let o = f.run(&["extract", "--features", "dist_total", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(f.out.join("features_location.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "user,window_start,dist_total");
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 3));
    assert!(!f.out.join("features_screen.csv").exists());
    assert!(!f.out.join("features_location.json").exists());
}

#[test]
fn explore_writes_the_summaries() {
    let f = Fixture::new();
    let o = f.run(&["explore"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let explore = f.out.join("explore");
    for name in [
        "screen_counts.csv",
        "screen_counts.json",
        "screen_counts.svg",
        "screen_categories.csv",
        "location_punchcard.svg",
        "battery_missingness.csv",
        "audio_line.svg",
        "location_dist_total.svg",
    ] {
        assert!(explore.join(name).is_file(), "{name}");
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("wrote ")));

    let spec = SourceSpec::csv(f.data.join("screen.csv"));
    let table = read_source(&spec).unwrap();
    let window = WindowSpec::new(86_400, Alignment::LocalMidnight, 120).unwrap();
    let mut expected = Vec::new();
    missingness(&table, &window, None)
        .unwrap()
        .write_fraction_csv(&mut expected)
        .unwrap();
    let written = std::fs::read(explore.join("screen_missing_fraction.csv")).unwrap();
    assert_eq!(written, expected);
}

#[test]
fn analyze_matches_the_library() {
    let f = Fixture::new();
    let o = f.run(&["extract", "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let joined = FeatureTable::load_csv(&f.out.join("features_all.csv")).unwrap();

    let o = f.run(&["analyze", "--method", "spearman"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut expected = Vec::new();
    correlate(&joined, Method::Spearman).unwrap().write_csv(&mut expected).unwrap();
    let written = std::fs::read(f.out.join("analysis/correlation.csv")).unwrap();
    assert_eq!(String::from_utf8(written).unwrap(), String::from_utf8(expected).unwrap());
}

#[test]
fn analyze_needs_two_features() {
    let f = Fixture::new();
    let o = f.run(&["analyze", "--features", "dist_total"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}
