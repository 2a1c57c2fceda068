//! The association ablation on the crossing scenario: all three modes over a
//! seed range, summary table, and an SVG of the first seed.
//!
//!     cargo run --release --example crossing_ablation [seeds]

use azitrack::experiment::{compare_with, summary_csv};
use azitrack::metrics::EvalOptions;
use azitrack::plot::render_run;
use azitrack::scenario::preset;

fn main() -> azitrack::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(100, |s| s.parse().expect("seed count"));
    let p = preset("crossing")?;
    let svg_path = std::path::Path::new("target/crossing_seed0.svg");
    let comparison = compare_with(&p, 0..n, EvalOptions::default(), |run| {
        if run.seed == 0 {
            let modes: Vec<_> = run.modes.iter().map(|(m, t, _)| (*m, t)).collect();
            let svg = render_run("crossing, seed 0", &run.observations, &run.truth, &modes, p.obs_model.frame_rate);
            std::fs::create_dir_all("target")?;
            std::fs::write(svg_path, svg)?;
        }
        Ok(())
    })?;
    print!("{}", summary_csv(&comparison));
    println!();
    for m in &comparison.summary {
        println!(
            "{:<8} median {:6.2}°  runs with an identity switch: {:3}/{}",
            m.mode.as_str(),
            m.median_rlmae_deg,
            m.runs_with_switches,
            m.runs
        );
    }
    println!("plot: {}", svg_path.display());
    Ok(())
}
