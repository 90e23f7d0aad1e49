//! Builds one guiding vector by hand and measures how well it lines up with
//! the descent direction.
//!
//! cargo run --release --example guiding_vector -- [dim] [probe_count] [split_ratio]

use guided_zo::estimators::{compute_guiding_vector, gv_estimate};
use guided_zo::problems::quadratic_problem;
use guided_zo::rng::SeedPurpose;
use guided_zo::trace::cosine_similarity;
use guided_zo::{GaussianDirections, LossOracle, MasterSeed, Minibatch, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let m: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);
    let alpha: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);

    let problem = quadratic_problem(dim, 10.0, 3)?;
    let batch = Minibatch::full();
    let mut theta = problem.initial_point();
    let descent: Vec<f64> = problem.gradient(&theta, &batch).iter().map(|g| -g).collect();

    let trials = 200;
    let mut cos_sum = 0.0;
    let mut oracle = LossOracle::new(&problem);
    for t in 0..trials {
        let parent = MasterSeed(SeedPurpose::Step.seed(MasterSeed(9), t).0);
        let guide = compute_guiding_vector(&mut oracle, &mut theta, m, alpha, 1e-3, parent, &batch, &GaussianDirections)?;
        cos_sum += cosine_similarity(&guide.values, &descent).unwrap_or(0.0);
        if t == 0 {
            let est = gv_estimate(&mut oracle, &mut theta, 1e-3, &guide, &batch)?;
            println!("M = {m}, elite = {}, ‖v‖ = {:.4}", guide.elite_count, guide.norm());
            println!("directional derivative along v: {:.6e}", est.coefficient);
        }
    }
    println!("mean cos(v, -∇f) over {trials} draws: {:+.4}", cos_sum / trials as f64);
    println!("a random direction in {dim} dimensions averages 0 with spread ≈ {:.4}", 1.0 / (dim as f64).sqrt());
    println!("forward passes used: {}", oracle.forward_passes());
    Ok(())
}
