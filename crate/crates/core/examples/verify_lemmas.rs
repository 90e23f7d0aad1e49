//! Monte Carlo alignment ratios of the three estimators next to their
//! predicted values.
//!
//! cargo run --release --example verify_lemmas -- [d] [trials]

use guided_zo::theory::{exact_min_order_stat, lemma2_ratios, lemma3_ratios, lemma4_ratios, LemmaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(256);
    let trials: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);

    println!("{:>3} {:>22} {:>22} {:>22} {:>10}", "k", "zo r1", "greedy r1", "gv r1", "E[Y(1)]²");
    for k in [2, 4, 8, 16] {
        let cfg = LemmaConfig::new(d, k, trials, 7).with_sigma(0.5);
        let zo = lemma2_ratios(&cfg)?.ratio1();
        let greedy = lemma3_ratios(&cfg)?.ratio1();
        let gv = lemma4_ratios(&cfg)?.ratio1();
        let (_, second_moment) = exact_min_order_stat(k)?;
        println!(
            "{k:>3} {:>10.3} ± {:<9.3} {:>10.3} ± {:<9.3} {:>10.3} ± {:<9.3} {second_moment:>10.4}",
            zo.mean, zo.ci95, greedy.mean, greedy.ci95, gv.mean, gv.ci95
        );
    }
    Ok(())
}
