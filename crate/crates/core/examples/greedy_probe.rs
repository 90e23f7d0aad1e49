//! Evaluates M Gaussian probes, ranks them by loss and keeps the best one.
//!
//! cargo run --release --example greedy_probe -- [probe_count]

use guided_zo::estimators::{compute_greedy_perturbation, probe_directions, rank_probes};
use guided_zo::problems::rosenbrock_problem;
use guided_zo::{GaussianDirections, LossOracle, MasterSeed, Minibatch, Objective};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let problem = rosenbrock_problem(10)?;
    let batch = Minibatch::full();
    let mut theta = problem.initial_point();
    let mut oracle = LossOracle::new(&problem);
    let base = oracle.evaluate(&theta, &batch);
    let parent = MasterSeed(2024);
    let eps = 1e-2;

    let mut records = probe_directions(&mut oracle, &mut theta, m, eps, parent, &batch, &GaussianDirections)?;
    rank_probes(&mut records);
    println!("loss at θ: {base:.6}");
    for r in &records {
        println!("probe {:>2}  seed {:#018x}  loss {:.6}  Δ {:+.3e}", r.index, r.seed.0, r.loss, r.loss - base);
    }
    let best = compute_greedy_perturbation(&mut oracle, &mut theta, m, eps, parent, &batch, &GaussianDirections)?;
    println!("selected probe {} (seed replayed, nothing stored)", best.index);
    println!("forward passes: {}", oracle.forward_passes());
    Ok(())
}
