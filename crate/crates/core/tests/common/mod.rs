#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use azitrack::io;
use azitrack::tracker::{FrameDiagnostics, TrackFrame, TrackPoint, TrackResult};
use azitrack::WrappedAngle;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Two frames, two tracks; the table diagnostics fixtures are merged into.
pub fn two_by_two() -> TrackResult {
    let point = |az: f64| TrackPoint {
        az: WrappedAngle::new(az).unwrap(),
        variance: 1e-4,
    };
    TrackResult {
        frames: (0..2)
            .map(|frame| TrackFrame {
                frame,
                points: vec![point(0.1), point(-0.1)],
                diagnostics: FrameDiagnostics {
                    frame,
                    ..Default::default()
                },
            })
            .collect(),
    }
}

/// Runs the reader matching the fixture's prefix and returns its error text.
pub fn diagnose(path: &Path) -> Result<String, String> {
    let name = path.file_name().unwrap().to_string_lossy().into_owned();
    let file = fs::File::open(path).map_err(|e| e.to_string())?;
    let err = if name.starts_with("obs_") {
        io::parse_observations(file).err()
    } else if name.starts_with("truth_") {
        io::parse_truth(file).err()
    } else if name.starts_with("tracks_") {
        io::parse_tracks(file).err()
    } else if name.starts_with("report_") {
        io::parse_report_csv(file).err()
    } else if name.starts_with("diag_") {
        io::parse_diagnostics_into(file, &mut two_by_two()).err()
    } else {
        return Err(format!("{name}: no reader for this prefix"));
    };
    err.map(|e| e.to_string())
        .ok_or_else(|| format!("{name}: accepted a malformed input"))
}

/// Malformed-input fixtures, sorted by name.
pub fn fixtures() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let n = p.file_name().unwrap().to_string_lossy();
            !n.ends_with(".expected") && !n.starts_with("compare_")
        })
        .collect();
    out.sort();
    out
}

pub fn expected_path(fixture: &Path) -> PathBuf {
    let mut s = fixture.as_os_str().to_owned();
    s.push(".expected");
    PathBuf::from(s)
}

/// Compares every fixture's diagnostic with its `.expected` file. Set
/// `BLESS=1` to rewrite the expectations.
pub fn check_golden_diagnostics() -> Result<usize, String> {
    let bless = std::env::var_os("BLESS").is_some();
    let fixtures = fixtures();
    for f in &fixtures {
        let got = diagnose(f)?;
        let exp_path = expected_path(f);
        if bless {
            fs::write(&exp_path, format!("{got}\n")).map_err(|e| e.to_string())?;
            continue;
        }
        let want = fs::read_to_string(&exp_path).map_err(|e| format!("{}: {e}", exp_path.display()))?;
        if got != want.trim_end() {
            return Err(format!("{}:\n  got:  {got}\n  want: {}", f.display(), want.trim_end()));
        }
        if !got.starts_with("line ") {
            return Err(format!("{}: diagnostic lacks a line number: {got}", f.display()));
        }
    }
    Ok(fixtures.len())
}
