//! The text formats: write every document type, read it back, and show the
//! line-numbered diagnostics produced for malformed input.
//!
//!     cargo run --example file_formats

use azitrack::io;
use azitrack::metrics::{evaluate, EvalOptions};
use azitrack::scenario::{generate, preset};
use azitrack::tracker;

fn main() -> azitrack::Result<()> {
    let dir = std::env::temp_dir().join("azitrack_file_formats");
    std::fs::create_dir_all(&dir)?;
    let p = preset("static_far")?;
    let (obs, truth) = generate(&p.trajectory, &p.obs_model)?;
    let tracks = tracker::run_frames(&obs, &p.tracker, truth.num_frames())?;
    let report = evaluate(&tracks, &truth, EvalOptions::default())?;

    io::write_observations(&dir.join("observations.jsonl"), &obs)?;
    io::write_truth(&dir.join("truth.csv"), &truth)?;
    io::write_tracks(&dir.join("tracks.csv"), Some(&dir.join("diagnostics.jsonl")), &tracks)?;
    io::write_report(&dir.join("report.json"), &report)?;
    io::write_report(&dir.join("report.csv"), &report)?;
    io::write_json(&dir.join("scenario.json"), &p)?;

    assert_eq!(io::read_observations(&dir.join("observations.jsonl"))?, obs);
    assert_eq!(io::read_truth(&dir.join("truth.csv"))?, truth);
    assert_eq!(io::read_tracks(&dir.join("tracks.csv"), Some(&dir.join("diagnostics.jsonl")))?, tracks);
    assert_eq!(io::read_report(&dir.join("report.json"))?, report);
    assert_eq!(io::read_report(&dir.join("report.csv"))?, report);
    println!("round trip exact for all documents in {}", dir.display());

    for line in std::fs::read_to_string(dir.join("observations.jsonl"))?.lines().take(2) {
        println!("  observations.jsonl: {line}");
    }
    for line in std::fs::read_to_string(dir.join("tracks.csv"))?.lines().take(3) {
        println!("  tracks.csv:         {line}");
    }

    let malformed = [
        "{\"t\":0,\"f\":0,\"az\":0.1,\"m\":[0.6,0.4]}\n{\"t\":0,\"f\":0,\"az\":0.2,\"m\":[0.6,0.4]}\n",
        "{\"t\":0,\"f\":0,\"az\":0.1,\"m\":[0.6,0.4]}\n{\"t\":0,\"f\":1,\"az\":3.2,\"m\":[0.6,0.4]}\n",
        "{\"t\":0,\"f\":0,\"az\":0.1,\"m\":[0.6,0.4]}\n{\"t\":1,\"f\":0,\"az\":0.2,\"m\":[1.0]}\n",
    ];
    for text in malformed {
        match io::parse_observations(text.as_bytes()) {
            Ok(_) => println!("unexpectedly accepted"),
            Err(e) => println!("  rejected: {e}"),
        }
    }
    Ok(())
}
