//! Drives the `azitrack` binary end to end.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use azitrack::{io, MaskVector};

fn azitrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_azitrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = azitrack(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_track_eval() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let stdout = ok(&["simulate", "--scenario", "static_far", "--seed", "3", "--out", s(&sim)]);
    assert!(stdout.contains("static_far"));
    for f in ["observations.jsonl", "truth.csv", "tracker.json"] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let run = dir.path().join("joint");
    ok(&[
        "track",
        "--obs",
        s(&sim.join("observations.jsonl")),
        "--config",
        s(&sim.join("tracker.json")),
        "--mode",
        "joint",
        "--out",
        s(&run),
    ]);
    let tracks = io::read_tracks(&run.join("tracks.csv"), Some(&run.join("diagnostics.jsonl"))).unwrap();
    let truth = io::read_truth(&sim.join("truth.csv")).unwrap();
    assert_eq!(tracks.frames.len(), truth.num_frames());

    let report = dir.path().join("report.json");
    let stdout = ok(&[
        "eval",
        "--tracks",
        s(&run.join("tracks.csv")),
        "--truth",
        s(&sim.join("truth.csv")),
        "--out",
        s(&report),
    ]);
    assert!(stdout.contains("rlmae"));
    let rep = io::read_report(&report).unwrap();
    assert_eq!(rep.identity_switches, 0);
    assert!(rep.rlmae_deg < 2.0);

    let csv_report = dir.path().join("report.csv");
    ok(&[
        "eval",
        "--tracks",
        s(&run.join("tracks.csv")),
        "--truth",
        s(&sim.join("truth.csv")),
        "--out",
        s(&csv_report),
    ]);
    assert_eq!(io::read_report(&csv_report).unwrap(), rep);
}

#[test]
fn joint_with_uninformative_masks_equals_spatial() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--scenario", "crossing", "--seed", "5", "--out", s(&sim)]);
    let obs: Vec<_> = io::read_observations(&sim.join("observations.jsonl"))
        .unwrap()
        .into_iter()
        .map(|mut o| {
            o.masks = MaskVector::uniform(o.masks.len(), 0.5).unwrap();
            o
        })
        .collect();
    let half = dir.path().join("half.jsonl");
    io::write_observations(&half, &obs).unwrap();

    let mut outputs = Vec::new();
    for mode in ["joint", "spatial"] {
        let out = dir.path().join(mode);
        ok(&[
            "track",
            "--obs",
            s(&half),
            "--config",
            s(&sim.join("tracker.json")),
            "--mode",
            mode,
            "--out",
            s(&out),
        ]);
        outputs.push((fs::read(out.join("tracks.csv")).unwrap(), fs::read(out.join("diagnostics.jsonl")).unwrap()));
    }
    assert!(!outputs[0].0.is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

/// Header, row keys and column count of the comparison tables.
fn table_schema(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let mut out = format!("{}\n", header);
    let width = header.split(',').count();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), width, "{line}");
        for c in &cols[2..] {
            assert!(c.parse::<f64>().is_ok(), "{line}");
        }
        out.push_str(&format!("{},{}\n", cols[0], cols[1]));
    }
    out
}

#[test]
fn compare_table_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "compare",
        "--scenario",
        "static_far",
        "--seeds",
        "0..=2",
        "--max-plots",
        "1",
        "--threads",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert!(stdout.contains("joint"));
    let got = format!(
        "# summary.csv\n{}# runs.csv\n{}",
        table_schema(&dir.path().join("summary.csv")),
        table_schema(&dir.path().join("runs.csv"))
    );
    let golden = common::golden_dir().join("compare_static_far.schema");
    if std::env::var_os("BLESS").is_some() {
        fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, fs::read_to_string(&golden).unwrap());
    let plots: Vec<_> = fs::read_dir(dir.path().join("plots")).unwrap().collect();
    assert_eq!(plots.len(), 1);
    let svg = fs::read_to_string(dir.path().join("plots/static_far_seed0000.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("mask"));
}

#[test]
fn compare_is_deterministic_across_thread_counts() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, threads) in dirs.iter().zip(["1", "4"]) {
        ok(&[
            "compare", "--scenario", "crossing", "--seeds", "3..7", "--max-plots", "0", "--threads", threads, "--out",
            s(d.path()),
        ]);
    }
    for f in ["summary.csv", "runs.csv"] {
        assert_eq!(fs::read(dirs[0].path().join(f)).unwrap(), fs::read(dirs[1].path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"t\":0,\"f\":0,\"az\":0.1,\"m\":[0.5,0.5]}\n{\"t\":0,\"f\":1,\"az\":9.0,\"m\":[0.5,0.5]}\n").unwrap();
    let cfg = dir.path().join("tracker.json");
    io::write_json(&cfg, &azitrack::scenario::preset("static_far").unwrap().tracker).unwrap();

    let out = azitrack(&["track", "--obs", s(&bad), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("az"), "{err}");

    let out = azitrack(&["track", "--obs", s(&dir.path().join("nope.jsonl")), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4));

    let out = azitrack(&["simulate", "--scenario", "no_such_preset", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));

    // every speaker silent: RLMAE undefined
    let tracks = dir.path().join("tracks.csv");
    let truth = dir.path().join("truth.csv");
    fs::write(&tracks, "frame,speaker,az_rad,var\n0,0,0.1,1e-4\n1,0,0.1,1e-4\n").unwrap();
    fs::write(&truth, "frame,speaker,az_rad,active\n0,0,0.1,0\n1,0,0.1,0\n").unwrap();
    let out = azitrack(&["eval", "--tracks", s(&tracks), "--truth", s(&truth), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(3));
}
