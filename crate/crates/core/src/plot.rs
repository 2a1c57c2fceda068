//! Minimal SVG rendering of a run: DOA estimates coloured by mask value,
//! then one panel per association mode with tracks over ground truth.

use std::fmt::Write;

use crate::assoc::AssociationMode;
use crate::scenario::GroundTruth;
use crate::tracker::{Observation, TrackResult};

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 180.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 28.0;
const GAP: f64 = 36.0;
const MAX_POINTS: usize = 4000;
const TRACK_COLORS: [&str; 5] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

struct Axes {
    top: f64,
    t_max: f64,
    lo: f64,
    hi: f64,
}

impl Axes {
    fn x(&self, t: f64) -> f64 {
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * t / self.t_max
    }

    fn y(&self, deg: f64) -> f64 {
        self.top + PANEL_H * (self.hi - deg) / (self.hi - self.lo)
    }

    fn frame(&self, out: &mut String, title: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        writeln!(
            out,
            r##"<rect x="{x0:.1}" y="{:.1}" width="{:.1}" height="{PANEL_H:.1}" fill="none" stroke="#444"/>"##,
            self.top,
            x1 - x0
        )
        .unwrap();
        writeln!(out, r#"<text x="{x0:.1}" y="{:.1}" font-size="13">{title}</text>"#, self.top - 6.0).unwrap();
        for deg in [self.lo, 0.5 * (self.lo + self.hi), self.hi] {
            writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{deg:.0}°</text>"#,
                x0 - 4.0,
                self.y(deg) + 3.0
            )
            .unwrap();
        }
    }

    /// Polyline broken wherever the angle jumps across the wrap.
    fn series(&self, out: &mut String, points: &[(f64, f64)], color: &str, width: f64, dash: bool) {
        let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for w in points.windows(2) {
            pieces.last_mut().unwrap().push(w[0]);
            if (w[1].1 - w[0].1).abs() > 180.0 {
                pieces.push(Vec::new());
            }
        }
        if let Some(&last) = points.last() {
            pieces.last_mut().unwrap().push(last);
        }
        let dash = if dash { r#" stroke-dasharray="4 3""# } else { "" };
        for piece in pieces.iter().filter(|p| p.len() > 1) {
            let pts: Vec<String> = piece
                .iter()
                .map(|&(t, d)| format!("{:.1},{:.1}", self.x(t), self.y(d.clamp(self.lo, self.hi))))
                .collect();
            writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
    }
}

fn mask_color(m: f64) -> String {
    let r = (255.0 * m).round() as u8;
    let b = (255.0 * (1.0 - m)).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

fn truth_series(truth: &GroundTruth, q: usize, frame_rate: f64) -> Vec<(f64, f64)> {
    truth
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| (k as f64 / frame_rate, f[q].az.degrees()))
        .collect()
}

/// Renders the multi-panel figure as an SVG document.
pub fn render_run(
    title: &str,
    observations: &[Observation],
    truth: &GroundTruth,
    runs: &[(AssociationMode, &TrackResult)],
    frame_rate: f64,
) -> String {
    let q = truth.num_speakers();
    let t_max = (truth.num_frames().max(2) - 1) as f64 / frame_rate;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in truth.frames.iter().flatten() {
        lo = lo.min(p.az.degrees());
        hi = hi.max(p.az.degrees());
    }
    if !lo.is_finite() {
        (lo, hi) = (-180.0, 180.0);
    }
    let lo = (lo - 25.0).max(-180.0);
    let hi = (hi + 25.0).min(180.0);

    let panels = 1 + runs.len();
    let height = MARGIN_T + panels as f64 * (PANEL_H + GAP);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height:.0}" viewBox="0 0 {WIDTH} {height:.0}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{MARGIN_L}" y="16" font-size="14" font-weight="bold">{title}</text>"#).unwrap();

    let axes = |i: usize| Axes {
        top: MARGIN_T + 14.0 + i as f64 * (PANEL_H + GAP),
        t_max,
        lo,
        hi,
    };

    // estimates coloured by the last speaker's mask
    let a = axes(0);
    a.frame(&mut out, "DOA estimates (colour: mask of the last speaker)");
    let stride = observations.len().div_ceil(MAX_POINTS).max(1);
    let channel = q.saturating_sub(1);
    for o in observations.iter().step_by(stride) {
        let deg = o.az.degrees();
        if deg < lo || deg > hi {
            continue;
        }
        let m = o.masks.values().get(channel).copied().unwrap_or(0.5);
        writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="1.3" fill="{}"/>"#,
            a.x(o.frame as f64 / frame_rate),
            a.y(deg),
            mask_color(m)
        )
        .unwrap();
    }
    for s in 0..q {
        a.series(&mut out, &truth_series(truth, s, frame_rate), "#000", 1.0, true);
    }

    for (i, (mode, tracks)) in runs.iter().enumerate() {
        let a = axes(i + 1);
        a.frame(&mut out, &format!("{mode} association"));
        for s in 0..q {
            a.series(&mut out, &truth_series(truth, s, frame_rate), "#000", 1.0, true);
        }
        for s in 0..tracks.num_speakers() {
            let pts: Vec<(f64, f64)> = tracks
                .frames
                .iter()
                .map(|f| (f.frame as f64 / frame_rate, f.points[s].az.degrees()))
                .collect();
            a.series(&mut out, &pts, TRACK_COLORS[s % TRACK_COLORS.len()], 1.6, false);
        }
    }
    let last = axes(panels - 1);
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">time (s), 0 to {t_max:.1}</text>"#,
        0.5 * WIDTH,
        last.top + PANEL_H + 18.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::run_seed;
    use crate::metrics::EvalOptions;
    use crate::scenario::preset;

    #[test]
    fn renders_well_formed_svg() {
        let p = preset("static_far").unwrap();
        let run = run_seed(&p, 1, EvalOptions::default()).unwrap();
        let modes: Vec<_> = run.modes.iter().map(|(m, t, _)| (*m, t)).collect();
        let svg = render_run("static_far seed 1", &run.observations, &run.truth, &modes, p.obs_model.frame_rate);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count() >= 2 * 4, true);
        assert!(svg.contains("joint association"));
        let again = render_run("static_far seed 1", &run.observations, &run.truth, &modes, p.obs_model.frame_rate);
        assert_eq!(svg, again);
    }
}
