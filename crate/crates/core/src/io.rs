//! Plain-text formats.
//!
//! * observations: JSON lines `{"t": frame, "f": bin, "az": radians, "m": [masks]}`
//! * ground truth: CSV `frame,speaker,az_rad,active`
//! * tracks: CSV `frame,speaker,az_rad,var`, with per-frame β diagnostics as JSON lines
//! * reports: JSON, or CSV `track,speaker,mae_deg,rlmae_deg,identity_switches,frames_evaluated`
//! * configs: JSON
//!
//! Floats are written in shortest round-trip form, so every write→read
//! cycle is bit-exact. Readers report the 1-based line and field of the
//! first problem they find.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::assoc::MaskVector;
use crate::circular::WrappedAngle;
use crate::metrics::EvalReport;
use crate::scenario::{GroundTruth, TruthPoint};
use crate::tracker::{FrameDiagnostics, Observation, TrackFrame, TrackPoint, TrackResult};
use crate::{Error, Result};

pub const TRUTH_HEADER: [&str; 4] = ["frame", "speaker", "az_rad", "active"];
pub const TRACKS_HEADER: [&str; 4] = ["frame", "speaker", "az_rad", "var"];

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

// ---------------------------------------------------------------- observations

fn field<'a>(obj: &'a serde_json::Map<String, Value>, line: usize, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::format(line, name, "missing field"))
}

fn index_field(obj: &serde_json::Map<String, Value>, line: usize, name: &str) -> Result<usize> {
    field(obj, line, name)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::format(line, name, "expected a non-negative integer"))
}

fn parse_observation(text: &str, line: usize) -> Result<Observation> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::format(line, "record", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::format(line, "record", "expected a JSON object"))?;
    let frame = index_field(obj, line, "t")?;
    let bin = index_field(obj, line, "f")?;
    let az = field(obj, line, "az")?
        .as_f64()
        .ok_or_else(|| Error::format(line, "az", "expected a number"))?;
    let az = WrappedAngle::from_canonical(az)
        .map_err(|_| Error::format(line, "az", format!("{az} outside [-pi, pi)")))?;
    let masks = field(obj, line, "m")?
        .as_array()
        .ok_or_else(|| Error::format(line, "m", "expected an array of numbers"))?
        .iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::format(line, "m", "expected an array of numbers")))
        .collect::<Result<Vec<f64>>>()?;
    let masks = MaskVector::new(masks).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::format(line, "m", msg),
        other => other,
    })?;
    Ok(Observation { frame, bin, az, masks })
}

/// Parses and validates a JSON-lines observation stream. Blank lines are skipped.
pub fn parse_observations<R: Read>(reader: R) -> Result<Vec<Observation>> {
    let mut out: Vec<Observation> = Vec::new();
    for (i, text) in BufReader::new(reader).lines().enumerate() {
        let text = text?;
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let obs = parse_observation(&text, line)?;
        if let Some(prev) = out.last() {
            if obs.masks.len() != prev.masks.len() {
                return Err(Error::format(
                    line,
                    "m",
                    format!("{} mask values, earlier lines have {}", obs.masks.len(), prev.masks.len()),
                ));
            }
            if obs.frame < prev.frame {
                return Err(Error::format(
                    line,
                    "t",
                    format!("frame {} after frame {}; stream must be sorted", obs.frame, prev.frame),
                ));
            }
            if obs.frame == prev.frame && obs.bin == prev.bin {
                return Err(Error::format(
                    line,
                    "f",
                    format!("duplicate bin {} in frame {}", obs.bin, obs.frame),
                ));
            }
            if obs.frame == prev.frame && obs.bin < prev.bin {
                return Err(Error::format(
                    line,
                    "f",
                    format!("bin {} after bin {} in frame {}; stream must be sorted", obs.bin, prev.bin, obs.frame),
                ));
            }
        }
        out.push(obs);
    }
    Ok(out)
}

pub fn read_observations(path: &Path) -> Result<Vec<Observation>> {
    parse_observations(open(path)?)
}

#[derive(Serialize)]
struct ObservationRecord<'a> {
    t: usize,
    f: usize,
    az: f64,
    m: &'a [f64],
}

pub fn write_observations_to<W: Write>(mut w: W, observations: &[Observation]) -> Result<()> {
    for o in observations {
        let rec = ObservationRecord {
            t: o.frame,
            f: o.bin,
            az: o.az.radians(),
            m: o.masks.values(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_observations(path: &Path, observations: &[Observation]) -> Result<()> {
    write_observations_to(create(path)?, observations)
}

// ---------------------------------------------------------------- CSV helpers

fn csv_reader<R: Read>(reader: R, header: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::format(
            1,
            "header",
            format!("expected `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    if let csv::ErrorKind::UnequalLengths { expected_len, len, .. } = e.kind() {
        return Error::format(line, "record", format!("expected {expected_len} columns, found {len}"));
    }
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::format(line, "record", msg),
    }
}

fn csv_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::format(line, name, "missing column"))?;
    raw.parse()
        .map_err(|_| Error::format(line, name, format!("cannot parse `{raw}`")))
}

fn csv_angle(rec: &csv::StringRecord, line: usize) -> Result<WrappedAngle> {
    let az: f64 = csv_field(rec, 2, "az_rad", line)?;
    WrappedAngle::from_canonical(az).map_err(|_| Error::format(line, "az_rad", format!("{az} outside [-pi, pi)")))
}

/// Reads `(frame, speaker, ...)` rows into dense per-frame vectors. Rows
/// must run through frames `0, 1, ...` with speakers `0..Q` in order, where
/// Q is the number of frame-0 rows.
fn read_grid<R: Read, T>(
    reader: R,
    header: &[&str],
    mut value: impl FnMut(&csv::StringRecord, usize) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv_reader(reader, header)?;
    let mut rows = Vec::new();
    let mut last_line = 1;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, last_line + 1))?;
        let line = rec.position().map_or(last_line + 1, |p| p.line() as usize);
        last_line = line;
        if rec.len() != header.len() {
            return Err(Error::format(
                line,
                "record",
                format!("expected {} columns, found {}", header.len(), rec.len()),
            ));
        }
        let frame: usize = csv_field(&rec, 0, "frame", line)?;
        let speaker: usize = csv_field(&rec, 1, "speaker", line)?;
        rows.push((line, frame, speaker, value(&rec, line)?));
    }
    let q = rows.iter().take_while(|r| r.1 == 0).count();
    if q == 0 {
        return match rows.first() {
            None => Ok(Vec::new()),
            Some(r) => Err(Error::format(r.0, "frame", format!("expected frame 0, found {}", r.1))),
        };
    }
    let mut frames: Vec<Vec<T>> = Vec::with_capacity(rows.len() / q);
    for (i, (line, frame, speaker, v)) in rows.into_iter().enumerate() {
        if frame != i / q {
            return Err(Error::format(line, "frame", format!("expected frame {}, found {frame}", i / q)));
        }
        if speaker != i % q {
            return Err(Error::format(line, "speaker", format!("expected speaker {}, found {speaker}", i % q)));
        }
        if i % q == 0 {
            frames.push(Vec::with_capacity(q));
        }
        frames.last_mut().expect("frame started").push(v);
    }
    if frames.last().is_some_and(|f| f.len() != q) {
        return Err(Error::format(
            last_line,
            "speaker",
            format!("frame {} has fewer than {q} speakers", frames.len() - 1),
        ));
    }
    Ok(frames)
}

// ---------------------------------------------------------------- ground truth

pub fn parse_truth<R: Read>(reader: R) -> Result<GroundTruth> {
    let frames = read_grid(reader, &TRUTH_HEADER, |rec, line| {
        let az = csv_angle(rec, line)?;
        let active = match rec.get(3).unwrap_or("") {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(Error::format(line, "active", format!("expected 0/1, found `{other}`"))),
        };
        Ok(TruthPoint { az, active })
    })?;
    Ok(GroundTruth { frames })
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    parse_truth(open(path)?)
}

pub fn write_truth_to<W: Write>(mut w: W, truth: &GroundTruth) -> Result<()> {
    writeln!(w, "{}", TRUTH_HEADER.join(","))?;
    for (k, frame) in truth.frames.iter().enumerate() {
        for (q, p) in frame.iter().enumerate() {
            writeln!(w, "{k},{q},{:?},{}", p.az.radians(), u8::from(p.active))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_truth_to(create(path)?, truth)
}

// ---------------------------------------------------------------- tracks

pub fn write_tracks_to<W: Write>(mut w: W, result: &TrackResult) -> Result<()> {
    writeln!(w, "{}", TRACKS_HEADER.join(","))?;
    for f in &result.frames {
        for (q, p) in f.points.iter().enumerate() {
            writeln!(w, "{},{q},{:?},{:?}", f.frame, p.az.radians(), p.variance)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_to<W: Write>(mut w: W, result: &TrackResult) -> Result<()> {
    for f in &result.frames {
        serde_json::to_writer(&mut w, &f.diagnostics).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the track table and, if `diagnostics` is given, the β traces.
pub fn write_tracks(tracks: &Path, diagnostics: Option<&Path>, result: &TrackResult) -> Result<()> {
    write_tracks_to(create(tracks)?, result)?;
    if let Some(d) = diagnostics {
        write_diagnostics_to(create(d)?, result)?;
    }
    Ok(())
}

pub fn parse_tracks<R: Read>(reader: R) -> Result<TrackResult> {
    let frames = read_grid(reader, &TRACKS_HEADER, |rec, line| {
        let az = csv_angle(rec, line)?;
        let variance: f64 = csv_field(rec, 3, "var", line)?;
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::format(line, "var", format!("variance {variance} must be positive")));
        }
        Ok(TrackPoint { az, variance })
    })?;
    Ok(TrackResult {
        frames: frames
            .into_iter()
            .enumerate()
            .map(|(frame, points)| TrackFrame {
                frame,
                points,
                diagnostics: FrameDiagnostics {
                    frame,
                    ..Default::default()
                },
            })
            .collect(),
    })
}

/// Merges β traces into a track table read by [`parse_tracks`].
pub fn parse_diagnostics_into<R: Read>(reader: R, result: &mut TrackResult) -> Result<()> {
    let mut seen = 0;
    for (i, text) in BufReader::new(reader).lines().enumerate() {
        let text = text?;
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let diag: FrameDiagnostics =
            serde_json::from_str(&text).map_err(|e| Error::format(line, "record", format!("invalid diagnostics: {e}")))?;
        let slot = result
            .frames
            .get_mut(diag.frame)
            .ok_or_else(|| Error::format(line, "frame", format!("frame {} not in the track table", diag.frame)))?;
        if diag.frame != seen {
            return Err(Error::format(line, "frame", format!("expected frame {seen}, found {}", diag.frame)));
        }
        let q = slot.points.len();
        if let Some(u) = diag.updates.iter().find(|u| u.beta.len() != q) {
            return Err(Error::format(
                line,
                "beta",
                format!("bin {} has {} values for {q} tracks", u.bin, u.beta.len()),
            ));
        }
        slot.diagnostics = diag;
        seen += 1;
    }
    Ok(())
}

pub fn read_tracks(tracks: &Path, diagnostics: Option<&Path>) -> Result<TrackResult> {
    let mut result = parse_tracks(open(tracks)?)?;
    if let Some(d) = diagnostics {
        parse_diagnostics_into(open(d)?, &mut result)?;
    }
    Ok(result)
}

// ---------------------------------------------------------------- JSON documents

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(e.line(), "json", e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- reports

pub const REPORT_HEADER: [&str; 6] = [
    "track",
    "speaker",
    "mae_deg",
    "rlmae_deg",
    "identity_switches",
    "frames_evaluated",
];

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// One row per track; the recording-level columns repeat on every row and
/// an empty `mae_deg` means the speaker was never scored.
pub fn write_report_csv_to<W: Write>(mut w: W, report: &EvalReport) -> Result<()> {
    writeln!(w, "{}", REPORT_HEADER.join(","))?;
    for (track, &speaker) in report.assignment.iter().enumerate() {
        let mae = report
            .per_speaker_mae_deg
            .get(speaker)
            .copied()
            .flatten()
            .map_or(String::new(), |m| format!("{m:?}"));
        writeln!(
            w,
            "{track},{speaker},{mae},{:?},{},{}",
            report.rlmae_deg, report.identity_switches, report.frames_evaluated
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_report_csv<R: Read>(reader: R) -> Result<EvalReport> {
    let mut rdr = csv_reader(reader, &REPORT_HEADER)?;
    let mut rows: Vec<(usize, Option<f64>, f64, usize, usize)> = Vec::new();
    let mut last_line = 1;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, last_line + 1))?;
        let line = rec.position().map_or(last_line + 1, |p| p.line() as usize);
        last_line = line;
        let track: usize = csv_field(&rec, 0, "track", line)?;
        if track != rows.len() {
            return Err(Error::format(line, "track", format!("expected track {}, found {track}", rows.len())));
        }
        let speaker: usize = csv_field(&rec, 1, "speaker", line)?;
        let mae = match rec.get(2).unwrap_or("") {
            "" => None,
            _ => Some(csv_field(&rec, 2, "mae_deg", line)?),
        };
        let rlmae: f64 = csv_field(&rec, 3, "rlmae_deg", line)?;
        let switches: usize = csv_field(&rec, 4, "identity_switches", line)?;
        let frames: usize = csv_field(&rec, 5, "frames_evaluated", line)?;
        if let Some(first) = rows.first() {
            if rlmae.to_bits() != first.2.to_bits() || switches != first.3 || frames != first.4 {
                return Err(Error::format(line, "rlmae_deg", "recording-level columns differ between rows"));
            }
        }
        rows.push((speaker, mae, rlmae, switches, frames));
    }
    let Some(&(_, _, rlmae_deg, identity_switches, frames_evaluated)) = rows.first() else {
        return Err(Error::format(1, "record", "report has no rows"));
    };
    let q = rows.len();
    let mut per_speaker = vec![None; q];
    let mut seen = vec![false; q];
    for (i, &(speaker, mae, ..)) in rows.iter().enumerate() {
        if speaker >= q || seen[speaker] {
            return Err(Error::format(i + 2, "speaker", format!("speaker {speaker} breaks the one-to-one assignment")));
        }
        seen[speaker] = true;
        per_speaker[speaker] = mae;
    }
    Ok(EvalReport {
        assignment: rows.iter().map(|r| r.0).collect(),
        rlmae_deg,
        per_speaker_mae_deg: per_speaker,
        identity_switches,
        frames_evaluated,
    })
}

/// JSON, or the CSV table when the path ends in `.csv`.
pub fn read_report(path: &Path) -> Result<EvalReport> {
    if is_csv(path) {
        parse_report_csv(open(path)?)
    } else {
        read_json(path)
    }
}

/// JSON, or the CSV table when the path ends in `.csv`.
pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    if is_csv(path) {
        write_report_csv_to(create(path)?, report)
    } else {
        write_json(path, report)
    }
}
