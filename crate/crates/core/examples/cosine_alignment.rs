//! Average cosine between each variant's step estimate and the true
//! gradient on logistic regression.
//!
//! cargo run --release --example cosine_alignment -- [steps] [seeds]

use guided_zo::problems::logreg_synthetic;
use guided_zo::{run_training, MasterSeed, OptimizerConfig, RunOptions, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let problem = logreg_synthetic(200, 2000, 0.1, 1)?;

    for variant in Variant::ALL {
        let mut all = Vec::new();
        for seed in 0..seeds {
            let mut cfg = OptimizerConfig::new(variant, 1e-3, steps);
            cfg.eval_every = 10;
            cfg.master_seed = MasterSeed(seed);
            let s = run_training(&problem, &cfg, RunOptions { timing: false, ..Default::default() })?;
            all.extend(s.trace.iter().filter_map(|r| r.cos_sim));
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        println!("{:<12} mean cos {:+.4} over {} evaluations", variant.as_str(), mean, all.len());
    }
    Ok(())
}
