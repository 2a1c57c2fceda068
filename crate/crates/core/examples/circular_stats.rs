//! Angles on the circle: wrapping, signed differences, weighted means and
//! k-means clustering across the ±π seam.
//!
//!     cargo run --example circular_stats

use azitrack::circular::{ang_diff, circular_kmeans, circular_mean, wrap};
use azitrack::WrappedAngle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> azitrack::Result<()> {
    let a = wrap(3.5)?;
    println!("wrap(3.5 rad)            = {:.4} rad", a.radians());
    let (x, y) = (WrappedAngle::from_degrees(170.0)?, WrappedAngle::from_degrees(-170.0)?);
    println!("ang_diff(170°, -170°)    = {:.1}°", ang_diff(x, y).to_degrees());
    println!("mean(170°, -170°)        = {:.1}°", circular_mean(&[x, y], None)?.degrees());
    println!(
        "mean weighted 3:1        = {:.1}°",
        circular_mean(&[x, y], Some(&[3.0, 1.0]))?.degrees()
    );

    // two noisy clusters, one straddling the seam
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 4f64.to_radians()).unwrap();
    let mut points = Vec::new();
    for centre in [178f64, -60.0] {
        for _ in 0..200 {
            points.push(WrappedAngle::from_degrees(centre)?.rotate(noise.sample(&mut rng))?);
        }
    }
    let centres = circular_kmeans(&points, 2, 7, 100)?;
    let shown: Vec<String> = centres.iter().map(|c| format!("{:.1}°", c.degrees())).collect();
    println!("k-means centres (k = 2)  = [{}]  (true: 178°, -60°)", shown.join(", "));
    Ok(())
}
