//! Regenerating a perturbation from its seed, and what is left after the
//! usual +ε, -2ε, +ε round trip.
//!
//! cargo run --release --example seed_replay -- [dim] [eps]

use guided_zo::rng::{gaussian_stream, perturb_in_place};
use guided_zo::{derive_seed, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1_000_000);
    let eps: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e-3);

    let seed = derive_seed(MasterSeed(42), 1);
    let z = gaussian_stream(seed, dim);
    assert_eq!(z, gaussian_stream(seed, dim));
    println!("seed {:#018x}: {dim} normals, replayed identically", seed.0);

    let original: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut theta = original.clone();
    perturb_in_place(&mut theta, eps, seed)?;
    perturb_in_place(&mut theta, -2.0 * eps, seed)?;
    perturb_in_place(&mut theta, eps, seed)?;

    let changed = theta.iter().zip(&original).filter(|(a, b)| a != b).count();
    let worst = theta.iter().zip(&original).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("after the round trip {changed} of {dim} coordinates differ, largest gap {worst:.3e}");
    Ok(())
}
