//! Equal forward-pass budget comparison of the three variants.
//!
//! cargo run --release --example budget_compare -- [config] [budget] [seeds] [learning_rate]

use std::path::PathBuf;

use guided_zo::cli::{compare_variants, RunConfig};
use guided_zo::RunOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/quadratic_d1000.json"));
    let budget: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let mut cfg = RunConfig::load(&path)?;
    if let Some(lr) = args.next() {
        cfg.optimizer.learning_rate = lr.parse()?;
    }

    let opts = RunOptions { timing: false, ..Default::default() };
    let (cmp, _) = compare_variants(&cfg, Some(budget), seeds, opts)?;
    println!("{} at budget {budget}, {seeds} seeds, η = {}", cmp.problem, cfg.optimizer.learning_rate);
    for v in &cmp.variants {
        let wins = v.wins_vs_mezo.map_or("-".to_string(), |w| format!("{w}/{seeds}"));
        println!(
            "{:<12} steps {:>6}  median train {:.6e}  median eval {:.6e}  wins vs mezo {wins}",
            v.variant.as_str(),
            v.steps,
            v.median_final_train_loss,
            v.median_final_eval_loss
        );
    }
    Ok(())
}
