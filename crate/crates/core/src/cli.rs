//! Command-line front end: `verify-lemmas`, `train`, `compare` and
//! `sweep-probes`.
//!
//! Exit codes: 0 success, 1 tolerance failure or aborted run, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ZoError;
use crate::optimizers::{run_training, OptimizerConfig, RunOptions, TrainError, Variant};
use crate::problems::ProblemSpec;
use crate::rng::MasterSeed;
use crate::theory::{
    exact_min_order_stat, lemma1_concentration, lemma2_ratios, lemma3_ratios, lemma4_ratios, ConcentrationReport,
    LemmaConfig, RatioReport,
};
use crate::trace::{write_csv, write_json, RunSummary};

/// Overrides the root under which relative output directories are created.
pub const OUTPUT_ROOT_ENV: &str = "GUIDED_ZO_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_directory() -> PathBuf {
    PathBuf::from("runs")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

/// The JSON run file. Re-serializing a parsed config records every default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.optimizer.master_seed = MasterSeed(cfg.seed);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ZoError> {
        let text = std::fs::read_to_string(path).map_err(|e| ZoError::Io { path: path.into(), source: e })?;
        Self::from_json(&text).map_err(|message| ZoError::Format { path: path.into(), message })
    }

    /// Copy with a different master seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c.optimizer.master_seed = MasterSeed(seed);
        c
    }

    fn wants(&self, f: OutputFormat) -> bool {
        self.output.formats.contains(&f)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(ZoError),
    #[error(transparent)]
    Runtime(ZoError),
    #[error(transparent)]
    Aborted(#[from] Box<TrainError>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Aborted(_) => 1,
        }
    }
}

fn config_err(e: ZoError) -> CliError {
    CliError::Config(e)
}

fn runtime(e: ZoError) -> CliError {
    CliError::Runtime(e)
}

#[derive(Debug, Parser)]
#[command(name = "guided-zo", version, about = "Zeroth-order optimization with guided and greedy perturbations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo checks of the alignment ratios and concentration.
    VerifyLemmas(VerifyArgs),
    /// A single training run.
    Train(TrainArgs),
    /// All three variants over several seeds at equal forward-pass budget.
    Compare(CompareArgs),
    /// Guiding-vector and greedy runs over a list of probe counts.
    SweepProbes(SweepArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 512)]
    pub d: usize,
    #[arg(long = "k-list", value_delimiter = ',', default_value = "2,4,8,16")]
    pub k_list: Vec<usize>,
    /// Tail fraction for the guiding-vector ratios, `s = floor(σk)`.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "lemma-reports")]
    pub out: PathBuf,
    #[arg(long = "lemma1-d", default_value_t = 64)]
    pub lemma1_d: usize,
    #[arg(long = "lemma1-k-list", value_delimiter = ',', default_value = "1,4,16,64,256")]
    pub lemma1_k_list: Vec<usize>,
    #[arg(long = "lemma1-trials", default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub lemma1_trials: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 into every `wall_ms` field.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// Measure alignment against the full-data gradient.
    #[arg(long = "full-data-alignment")]
    pub full_data_alignment: bool,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions { timing: !self.no_timing, full_data_alignment: self.full_data_alignment }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunFlags,
    /// Forward-pass budget F.
    #[arg(long, default_value_t = 20_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// Give every variant `optimizer.steps` steps instead of equal budget.
    #[arg(long = "equal-steps")]
    pub equal_steps: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunFlags,
    #[arg(long = "m-list", value_delimiter = ',', default_value = "4,8,12")]
    pub m_list: Vec<usize>,
    #[arg(long, default_value_t = 20_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
}

/// Applies [`OUTPUT_ROOT_ENV`] to relative directories.
pub fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() && !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(ZoError::Io { path: dir.into(), source: e }))
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ---------------------------------------------------------------- lemmas

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub k: usize,
    pub s: Option<usize>,
    pub zo: RatioReport,
    pub greedy: RatioReport,
    pub guiding_vector: Option<RatioReport>,
    pub greedy_oracle_second_moment: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub d: usize,
    pub sigma: f64,
    pub trials: u64,
    pub seed: u64,
    pub table: Vec<TableRow>,
    pub concentration: Vec<ConcentrationReport>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs all four lemma checks and evaluates the tolerances.
pub fn verify_lemmas(args: &VerifyArgs) -> Result<LemmaSummary, CliError> {
    if args.d < 2 {
        return Err(CliError::Usage(format!("--d must be at least 2, got {}", args.d)));
    }
    if args.k_list.is_empty() || args.k_list.contains(&0) {
        return Err(CliError::Usage("--k-list needs positive entries".into()));
    }
    if args.lemma1_k_list.is_empty() || args.lemma1_k_list.contains(&0) {
        return Err(CliError::Usage("--lemma1-k-list needs positive entries".into()));
    }
    if !(args.sigma > 0.0 && args.sigma <= 0.5) {
        return Err(CliError::Usage(format!("--sigma must lie in (0, 0.5], got {}", args.sigma)));
    }
    if args.lemma1_d < 2 || args.lemma1_d > crate::theory::LEMMA1_MAX_DIM {
        return Err(CliError::Usage("--lemma1-d must lie in [2, 512]".into()));
    }
    let mut ks = args.k_list.clone();
    ks.sort_unstable();
    ks.dedup();

    let base = |d: usize, k: usize, trials: u64| {
        let c = LemmaConfig::new(d, k, trials, args.seed);
        match args.workers {
            Some(w) => c.with_workers(w),
            None => c,
        }
    };
    let mut checks = Vec::new();
    let mut table = Vec::new();
    for &k in &ks {
        let cfg = base(args.d, k, args.trials).with_sigma(args.sigma);
        let zo = lemma2_ratios(&cfg).map_err(config_err)?;
        let greedy = lemma3_ratios(&cfg).map_err(config_err)?;
        let gv = if cfg.s >= 1 && cfg.s <= k / 2 { Some(lemma4_ratios(&cfg).map_err(config_err)?) } else { None };
        let (_, m2) = exact_min_order_stat(k).map_err(config_err)?;

        let e1 = rel_err(zo.ratio1_mean, zo.predicted_ratio1);
        checks.push(Check::new(format!("zo ratio1 k={k}"), e1 <= 0.15, format!("relative error {e1:.4} (tol 0.15)")));
        let dv = (zo.vtg_mean - 1.0).abs();
        checks.push(Check::new(format!("zo mean Vtg k={k}"), dv <= 0.02, format!("|mean - 1| = {dv:.4} (tol 0.02)")));
        let e3 = rel_err(greedy.ratio2_mean, m2);
        checks.push(Check::new(
            format!("greedy ratio2 vs quadrature k={k}"),
            e3 <= 0.02,
            format!("{:.5} vs {m2:.5}, relative error {e3:.4} (tol 0.02)", greedy.ratio2_mean),
        ));
        if k >= 8 {
            let f = (greedy.predicted_ratio2 / m2).max(m2 / greedy.predicted_ratio2);
            checks.push(Check::new(format!("greedy 2 ln k factor k={k}"), f < 2.0, format!("factor {f:.3} (tol 2)")));
        }
        if let (Some(gv), true) = (&gv, k >= 4) {
            let ok = gv.ratio2().clearly_above(&greedy.ratio2()) && greedy.ratio2().clearly_above(&zo.ratio2());
            checks.push(Check::new(
                format!("table ordering k={k}"),
                ok,
                format!(
                    "gv {:.4}±{:.4} > greedy {:.4}±{:.4} > zo {:.4}±{:.4}",
                    gv.ratio2_mean, gv.ratio2_ci95, greedy.ratio2_mean, greedy.ratio2_ci95, zo.ratio2_mean, zo.ratio2_ci95
                ),
            ));
        }
        table.push(TableRow { k, s: gv.as_ref().and(Some(cfg.s)), zo, greedy, guiding_vector: gv, greedy_oracle_second_moment: m2 });
    }
    let greedy_means: Vec<f64> = table.iter().map(|r| r.greedy.ratio2_mean).collect();
    checks.push(Check::new(
        "greedy ratio2 increasing in k",
        greedy_means.windows(2).all(|w| w[1] > w[0]),
        format!("{greedy_means:?}"),
    ));

    let mut l1ks = args.lemma1_k_list.clone();
    l1ks.sort_unstable();
    l1ks.dedup();
    let mut concentration = Vec::new();
    for &k in &l1ks {
        concentration.push(lemma1_concentration(&base(args.lemma1_d, k, args.lemma1_trials)).map_err(config_err)?);
    }
    let medians: Vec<f64> = concentration.iter().map(|c| c.spectral_norm_median).collect();
    checks.push(Check::new(
        "concentration median decreasing in k",
        medians.windows(2).all(|w| w[1] < w[0]),
        format!("{medians:?}"),
    ));
    let single = lemma1_concentration(&base(256, 1, args.lemma1_trials)).map_err(config_err)?;
    let e = rel_err(single.spectral_norm_median, 255.0);
    checks.push(Check::new("concentration k=1 d=256", e <= 0.1, format!("median {:.3}, relative error {e:.4} vs d-1", single.spectral_norm_median)));
    concentration.push(single);

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(LemmaSummary { d: args.d, sigma: args.sigma, trials: args.trials, seed: args.seed, table, concentration, checks, all_passed })
}

fn cmd_verify_lemmas(args: &VerifyArgs) -> Result<bool, CliError> {
    let summary = verify_lemmas(args)?;
    let out = resolve_output(&args.out);
    ensure_dir(&out)?;
    let zo: Vec<&RatioReport> = summary.table.iter().map(|r| &r.zo).collect();
    let greedy: Vec<&RatioReport> = summary.table.iter().map(|r| &r.greedy).collect();
    let gv: Vec<&RatioReport> = summary.table.iter().filter_map(|r| r.guiding_vector.as_ref()).collect();
    write_json(&summary.concentration, &out.join("lemma1.json")).map_err(runtime)?;
    write_json(&zo, &out.join("lemma2.json")).map_err(runtime)?;
    write_json(&greedy, &out.join("lemma3.json")).map_err(runtime)?;
    write_json(&gv, &out.join("lemma4.json")).map_err(runtime)?;
    write_json(&summary, &out.join("summary.json")).map_err(runtime)?;

    println!("{:>4} {:>3}  {:>10} {:>10}  {:>10} {:>10}  {:>10} {:>10}", "k", "s", "zo r1", "zo r2", "greedy r1", "greedy r2", "gv r1", "gv r2");
    for row in &summary.table {
        let (g1, g2) = row.guiding_vector.as_ref().map_or((f64::NAN, f64::NAN), |g| (g.ratio1_mean, g.ratio2_mean));
        println!(
            "{:>4} {:>3}  {:>10.4} {:>10.4}  {:>10.4} {:>10.4}  {:>10.4} {:>10.4}",
            row.k,
            row.s.map_or("-".to_string(), |s| s.to_string()),
            row.zo.ratio1_mean,
            row.zo.ratio2_mean,
            row.greedy.ratio1_mean,
            row.greedy.ratio2_mean,
            g1,
            g2
        );
    }
    for c in &summary.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(summary.all_passed)
}

// ---------------------------------------------------------------- training

fn write_run(dir: &Path, stem: &str, cfg: &RunConfig, summary: &RunSummary) -> Result<(), CliError> {
    if cfg.wants(OutputFormat::Csv) {
        write_csv(&summary.trace, &dir.join(format!("{stem}.csv"))).map_err(runtime)?;
    }
    if cfg.wants(OutputFormat::Json) {
        write_json(summary, &dir.join(format!("{stem}.json"))).map_err(runtime)?;
    }
    Ok(())
}

fn load_config(flags: &RunFlags) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&flags.config).map_err(config_err)?;
    cfg.optimizer.validate().map_err(config_err)?;
    let dir = resolve_output(flags.out.as_deref().unwrap_or(&cfg.output.directory));
    Ok((cfg, dir))
}

fn cmd_train(args: &TrainArgs) -> Result<bool, CliError> {
    let (cfg, dir) = load_config(&args.run)?;
    let problem = cfg.problem.build().map_err(config_err)?;
    ensure_dir(&dir)?;
    write_json(&cfg, &dir.join("config.json")).map_err(runtime)?;
    match run_training(problem.as_ref(), &cfg.optimizer, args.run.options()) {
        Ok(summary) => {
            write_run(&dir, "trace", &cfg, &summary)?;
            print_runs(&[&summary]);
            Ok(true)
        }
        Err(err) => {
            write_run(&dir, "trace", &cfg, &err.partial)?;
            Err(Box::new(err).into())
        }
    }
}

fn print_runs(runs: &[&RunSummary]) {
    println!("{:<12} {:>6} {:>8} {:>10} {:>16} {:>16}", "variant", "seed", "steps", "passes", "final train", "final eval");
    for s in runs {
        println!(
            "{:<12} {:>6} {:>8} {:>10} {:>16.8e} {:>16.8e}",
            s.config.variant, s.master_seed, s.steps, s.total_forward_passes, s.final_train_loss, s.final_eval_loss
        );
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: Variant,
    pub probe_count: usize,
    pub steps: u64,
    pub forward_passes_per_run: u64,
    pub final_train_losses: Vec<f64>,
    pub final_eval_losses: Vec<f64>,
    pub median_final_train_loss: f64,
    pub median_final_eval_loss: f64,
    /// Paired seeds where this variant ends below mezo.
    pub wins_vs_mezo: Option<u64>,
    pub losses_vs_mezo: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub problem: String,
    pub budget: Option<u64>,
    pub seeds: Vec<u64>,
    pub variants: Vec<VariantResult>,
    /// Variants sorted by median final train loss, best first.
    pub ordering: Vec<Variant>,
}

/// One configuration per requested variant with steps set for the budget
/// (or left alone when `budget` is `None`).
pub fn budget_configs(base: &OptimizerConfig, variants: &[Variant], budget: Option<u64>) -> Vec<OptimizerConfig> {
    variants
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.variant = v;
            if let Some(f) = budget {
                c.steps = c.steps_for_budget(f);
            }
            c
        })
        .collect()
}

/// Runs every configuration over seeds `base_seed + i`, in parallel, and
/// collects the summaries in `(config, seed)` order.
pub fn run_grid(
    cfg: &RunConfig,
    configs: &[OptimizerConfig],
    seeds: u64,
    opts: RunOptions,
) -> Result<Vec<Vec<RunSummary>>, CliError> {
    let problem = cfg.problem.build().map_err(config_err)?;
    for c in configs {
        c.validate().map_err(config_err)?;
    }
    let jobs: Vec<(usize, u64)> =
        (0..configs.len()).flat_map(|i| (0..seeds).map(move |s| (i, cfg.seed.wrapping_add(s)))).collect();
    let results: Vec<Result<RunSummary, TrainError>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let mut c = configs[i].clone();
            c.master_seed = MasterSeed(seed);
            run_training(problem.as_ref(), &c, opts)
        })
        .collect();
    let mut grid: Vec<Vec<RunSummary>> = vec![Vec::new(); configs.len()];
    for ((i, _), r) in jobs.into_iter().zip(results) {
        grid[i].push(r.map_err(Box::new)?);
    }
    Ok(grid)
}

fn summarize_variants(problem: &str, budget: Option<u64>, seeds: Vec<u64>, grid: &[Vec<RunSummary>]) -> Comparison {
    let mezo: Option<Vec<f64>> = grid
        .iter()
        .find(|runs| runs.first().is_some_and(|r| r.config.variant == Variant::Mezo))
        .map(|runs| runs.iter().map(|r| r.final_train_loss).collect());
    let variants: Vec<VariantResult> = grid
        .iter()
        .filter_map(|runs| {
            let first = runs.first()?;
            let train: Vec<f64> = runs.iter().map(|r| r.final_train_loss).collect();
            let eval: Vec<f64> = runs.iter().map(|r| r.final_eval_loss).collect();
            let (wins, losses) = match (&mezo, first.config.variant) {
                (Some(m), v) if v != Variant::Mezo => {
                    let w = train.iter().zip(m).filter(|(a, b)| a < b).count() as u64;
                    let l = train.iter().zip(m).filter(|(a, b)| a > b).count() as u64;
                    (Some(w), Some(l))
                }
                _ => (None, None),
            };
            Some(VariantResult {
                variant: first.config.variant,
                probe_count: first.config.probe_count,
                steps: first.steps,
                forward_passes_per_run: first.total_forward_passes,
                median_final_train_loss: median(&train),
                median_final_eval_loss: median(&eval),
                final_train_losses: train,
                final_eval_losses: eval,
                wins_vs_mezo: wins,
                losses_vs_mezo: losses,
            })
        })
        .collect();
    let mut ordering: Vec<(f64, Variant)> = variants.iter().map(|v| (v.median_final_train_loss, v.variant)).collect();
    ordering.sort_by(|a, b| a.0.total_cmp(&b.0));
    Comparison {
        problem: problem.to_string(),
        budget,
        seeds,
        variants,
        ordering: ordering.into_iter().map(|o| o.1).collect(),
    }
}

/// The three variants at equal forward-pass budget (or equal steps when
/// `budget` is `None`) over `seeds` master seeds.
pub fn compare_variants(
    cfg: &RunConfig,
    budget: Option<u64>,
    seeds: u64,
    opts: RunOptions,
) -> Result<(Comparison, Vec<Vec<RunSummary>>), CliError> {
    let configs = budget_configs(&cfg.optimizer, &Variant::ALL, budget);
    let grid = run_grid(cfg, &configs, seeds, opts)?;
    let seed_list = (0..seeds).map(|s| cfg.seed.wrapping_add(s)).collect();
    let problem = grid.first().and_then(|r| r.first()).map_or(String::new(), |r| r.problem.clone());
    Ok((summarize_variants(&problem, budget, seed_list, &grid), grid))
}

fn cmd_compare(args: &CompareArgs) -> Result<bool, CliError> {
    let (cfg, dir) = load_config(&args.run)?;
    let budget = (!args.equal_steps).then_some(args.budget);
    if budget == Some(0) {
        return Err(CliError::Usage("--budget must be positive".into()));
    }
    let (comparison, grid) = compare_variants(&cfg, budget, args.seeds, args.run.options())?;
    ensure_dir(&dir)?;
    write_json(&cfg, &dir.join("config.json")).map_err(runtime)?;
    for runs in &grid {
        for r in runs {
            write_run(&dir, &format!("{}-seed{}", r.config.variant, r.master_seed), &cfg, r)?;
        }
    }
    write_json(&comparison, &dir.join("comparison.json")).map_err(runtime)?;
    print_runs(&grid.iter().flatten().collect::<Vec<_>>());
    for v in &comparison.variants {
        println!("{:<12} median final train {:.8e}", v.variant, v.median_final_train_loss);
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub probe_count: usize,
    /// Steps each run gets, `F / (M + 2)`.
    pub steps: u64,
    pub gv_median_final_train_loss: f64,
    pub gv_median_final_eval_loss: f64,
    pub greedy_median_final_train_loss: f64,
    pub greedy_median_final_eval_loss: f64,
}

/// Guiding-vector and greedy runs for each `M` at a fixed budget; one row
/// per `M`.
pub fn sweep_probes(
    cfg: &RunConfig,
    m_list: &[usize],
    budget: u64,
    seeds: u64,
    opts: RunOptions,
) -> Result<Vec<SweepRow>, CliError> {
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(CliError::Usage("--m-list needs positive entries".into()));
    }
    let mut configs = Vec::new();
    for &m in m_list {
        let mut base = cfg.optimizer.clone();
        base.probe_count = m;
        configs.extend(budget_configs(&base, &[Variant::MezoGv, Variant::MezoGreedy], Some(budget)));
    }
    let grid = run_grid(cfg, &configs, seeds, opts)?;
    let med = |runs: &[RunSummary], eval: bool| {
        median(&runs.iter().map(|r| if eval { r.final_eval_loss } else { r.final_train_loss }).collect::<Vec<_>>())
    };
    Ok(grid
        .chunks(2)
        .zip(configs.chunks(2))
        .map(|(runs, c)| SweepRow {
            probe_count: c[0].probe_count,
            steps: c[0].steps,
            gv_median_final_train_loss: med(&runs[0], false),
            gv_median_final_eval_loss: med(&runs[0], true),
            greedy_median_final_train_loss: med(&runs[1], false),
            greedy_median_final_eval_loss: med(&runs[1], true),
        })
        .collect())
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool, CliError> {
    let (cfg, dir) = load_config(&args.run)?;
    if args.budget == 0 {
        return Err(CliError::Usage("--budget must be positive".into()));
    }
    let rows = sweep_probes(&cfg, &args.m_list, args.budget, args.seeds, args.run.options())?;
    ensure_dir(&dir)?;
    write_json(&cfg, &dir.join("config.json")).map_err(runtime)?;
    write_json(&rows, &dir.join("sweep.json")).map_err(runtime)?;
    println!("{:>4} {:>8} {:>16} {:>16}", "M", "steps", "gv train", "greedy train");
    for r in &rows {
        println!(
            "{:>4} {:>8} {:>16.8e} {:>16.8e}",
            r.probe_count, r.steps, r.gv_median_final_train_loss, r.greedy_median_final_train_loss
        );
    }
    Ok(true)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::VerifyLemmas(a) => cmd_verify_lemmas(a),
        Command::Train(a) => cmd_train(a),
        Command::Compare(a) => cmd_compare(a),
        Command::SweepProbes(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
