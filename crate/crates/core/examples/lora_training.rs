//! Trains the low-rank adapter on a frozen linear layer with each variant at
//! the same forward-pass budget.
//!
//! cargo run --release --example lora_training -- [budget] [learning_rate]

use guided_zo::problems::ProblemSpec;
use guided_zo::{run_training, MasterSeed, OptimizerConfig, RunOptions, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let budget: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30_000);
    let lr: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e-3);

    let spec = ProblemSpec::LoraLinear { rows: 16, cols: 16, rank: 2, n_examples: 256, seed: 0 };
    let problem = spec.build()?;
    println!("{} parameters, budget {budget}", problem.dim());
    for variant in Variant::ALL {
        let mut cfg = OptimizerConfig::new(variant, lr, 0);
        cfg.master_seed = MasterSeed(5);
        cfg.steps = cfg.steps_for_budget(budget);
        cfg.eval_every = cfg.steps.max(1);
        let s = run_training(problem.as_ref(), &cfg, RunOptions { timing: false, ..Default::default() })?;
        println!(
            "{:<12} {:>6} steps  train {:.5e} -> {:.5e}  eval {:.5e}",
            variant.as_str(),
            s.steps,
            s.initial_train_loss,
            s.final_train_loss,
            s.final_eval_loss
        );
    }
    Ok(())
}
