//! Plain two-point SPSA (MeZO) on an ill-conditioned quadratic.
//!
//! cargo run --release --example spsa_quadratic -- [dim] [steps] [learning_rate]

use guided_zo::problems::quadratic_problem;
use guided_zo::{run_training, MasterSeed, OptimizerConfig, RunOptions, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5000);
    let lr: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e-3);

    let problem = quadratic_problem(dim, 10.0, 1)?;
    let mut cfg = OptimizerConfig::new(Variant::Mezo, lr, steps);
    cfg.eval_every = steps / 10;
    cfg.master_seed = MasterSeed(0);
    let summary = run_training(&problem, &cfg, RunOptions::default())?;

    println!("initial loss {:.6e}", summary.initial_train_loss);
    for c in &summary.checkpoints {
        println!("step {:>6}  loss {:.6e}", c.step, c.train_loss);
    }
    for row in summary.trace.iter().filter(|r| r.cos_sim.is_some()) {
        println!("step {:>6}  cos(estimate, gradient) {:+.4}", row.step, row.cos_sim.unwrap());
    }
    println!("final loss {:.6e} after {} forward passes", summary.final_train_loss, summary.total_forward_passes);
    Ok(())
}
