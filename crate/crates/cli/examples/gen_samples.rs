//! Regenerates the synthetic sample files under `assets/`.
//!
//! ```text
//! cargo run -p semalloc-cli --example gen_samples -- crates/cli/assets
//! ```
//!
//! Surface samples: the bundled default surface on a 12×12 grid of BERs
//! log-spaced over [1e-5, 0.5], plus Gaussian noise (σ = 0.01, seed 7),
//! clipped to [0, 1]. Curve samples: each bundled single-stream curve on
//! 16 log-spaced BERs with the same noise model (seeds 8 and 9).

use std::fmt::Write as _;
use std::path::PathBuf;

use rand_distr::{Distribution, Normal};

use semalloc::numerics::{rng_from_seed, RandomSeed};
use semalloc::perception::{SampleSet, StreamCurve, SurfaceParams};
use semalloc_cli::io::{fmt_f64, write_samples};

const NOISE_SD: f64 = 0.01;

fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "assets".into()));
    std::fs::create_dir_all(&dir)?;
    let noise = Normal::new(0.0, NOISE_SD)?;

    let truth = SurfaceParams::default();
    let grid = log_grid(12, 1e-5, 0.5);
    let mut set = SampleSet::tabulate(&truth, &grid, &grid);
    let mut rng = rng_from_seed(RandomSeed(7));
    for s in &mut set.rows {
        s.p = (s.p + noise.sample(&mut rng)).clamp(0.0, 1.0);
    }
    write_samples(
        &dir.join("surface_samples.csv"),
        &set,
        "Synthetic samples of the default surface (p0 0.30, pmax 0.95, tau 5e-3 / 1e-3, beta 1).\n\
         Generated by `cargo run -p semalloc-cli --example gen_samples`: 12x12 log grid\n\
         over [1e-5, 0.5], Gaussian noise sd 0.01, seed 7, clipped to [0, 1].",
    )?;

    for (name, curve, seed) in [("prompt", StreamCurve::prompt(), 8), ("edge", StreamCurve::edge(), 9)] {
        let mut rng = rng_from_seed(RandomSeed(seed));
        let mut out = format!(
            "# Synthetic samples of the bundled {name} curve; gen_samples example, noise sd 0.01, seed {seed}.\npsi,P\n"
        );
        for psi in log_grid(16, 1e-5, 0.5) {
            let p = (curve.value(psi) + noise.sample(&mut rng)).clamp(0.0, 1.0);
            writeln!(out, "{},{}", fmt_f64(psi), fmt_f64(p))?;
        }
        std::fs::write(dir.join(format!("{name}_curve_samples.csv")), out)?;
    }
    println!("wrote samples to {}", dir.display());
    Ok(())
}
