//! Training loops: MeZO (ZO-SGD), MeZO with a guiding vector, and MeZO with
//! greedy perturbation selection.
//!
//! None of the step functions keep state between steps. The only
//! parameter-sized buffer besides `θ` is the guiding vector built inside a
//! single GV step.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::estimators::{
    compute_greedy_perturbation, compute_guiding_vector, elite_count, gv_estimate, greedy_estimate, spsa_estimate,
    DirectionSource, GaussianDirections, LossOracle,
};
use crate::problems::{sample_minibatch, Minibatch, Objective};
use crate::rng::{add_scaled_in_place, derive_seed, MasterSeed, SeedPurpose};
use crate::trace::{cosine_similarity, Checkpoint, RunSummary, TraceRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Mezo,
    MezoGv,
    MezoGreedy,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Mezo, Variant::MezoGv, Variant::MezoGreedy];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Mezo => "mezo",
            Variant::MezoGv => "mezo_gv",
            Variant::MezoGreedy => "mezo_greedy",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_probe_count() -> usize {
    4
}
fn default_split_ratio() -> f64 {
    0.5
}
fn default_one() -> usize {
    1
}
fn default_eval_every() -> u64 {
    1000
}
fn default_batch_size() -> usize {
    16
}

/// Hyperparameters shared by all three variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub variant: Variant,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub learning_rate: f64,
    #[serde(default)]
    pub weight_decay: f64,
    pub steps: u64,
    #[serde(default = "default_probe_count")]
    pub probe_count: usize,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    #[serde(default = "default_one")]
    pub query_budget: usize,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default)]
    pub normalize_gv: bool,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Set from the run config's top-level `seed`.
    #[serde(skip)]
    pub master_seed: MasterSeed,
}

impl OptimizerConfig {
    pub fn new(variant: Variant, learning_rate: f64, steps: u64) -> Self {
        Self {
            variant,
            epsilon: default_epsilon(),
            learning_rate,
            weight_decay: 0.0,
            steps,
            probe_count: default_probe_count(),
            split_ratio: default_split_ratio(),
            query_budget: 1,
            eval_every: default_eval_every(),
            normalize_gv: false,
            batch_size: default_batch_size(),
            master_seed: MasterSeed(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ZoError::config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("learning_rate", self.learning_rate)?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(ZoError::config("weight_decay must be finite and >= 0"));
        }
        if self.probe_count == 0 {
            return Err(ZoError::config("probe_count M must be at least 1"));
        }
        if self.query_budget == 0 {
            return Err(ZoError::config("query_budget q must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(ZoError::config("eval_every must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(ZoError::config("batch_size must be at least 1"));
        }
        if self.variant == Variant::MezoGv {
            elite_count(self.probe_count, self.split_ratio)?;
        } else if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(ZoError::config("split_ratio α must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Forward passes one step of this variant costs.
    pub fn passes_per_step(&self) -> u64 {
        match self.variant {
            Variant::Mezo => 2 * self.query_budget as u64,
            Variant::MezoGv | Variant::MezoGreedy => self.probe_count as u64 + 2,
        }
    }

    /// Steps that fit in `budget` forward passes (floor).
    pub fn steps_for_budget(&self, budget: u64) -> u64 {
        budget / self.passes_per_step()
    }
}

/// Outcome of a single optimizer step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub step: u64,
    pub train_loss: f64,
    pub coefficient: f64,
    pub forward_passes: u64,
    /// Materialized gradient estimate, present only when requested.
    pub estimate: Option<Vec<f64>>,
}

fn step_seed(cfg: &OptimizerConfig, t: u64) -> MasterSeed {
    SeedPurpose::Step.seed(cfg.master_seed, t).into()
}

fn expect_variant(cfg: &OptimizerConfig, v: Variant) -> Result<()> {
    if cfg.variant == v {
        Ok(())
    } else {
        Err(ZoError::config(format!("step for {v} called with variant {}", cfg.variant)))
    }
}

fn decay(theta: &mut [f64], cfg: &OptimizerConfig) {
    if cfg.weight_decay != 0.0 {
        let keep = 1.0 - cfg.learning_rate * cfg.weight_decay;
        theta.iter_mut().for_each(|x| *x *= keep);
    }
}

/// ZO-SGD step: `θ ← (1 - ηλ)θ - η·g·z`. With `q > 1` the `q` estimates
/// are taken at the same `θ` and applied as `q` seed-regenerated updates of
/// scale `η/q`.
pub fn mezo_step(
    theta: &mut [f64],
    oracle: &mut LossOracle<'_>,
    batch: &Minibatch,
    cfg: &OptimizerConfig,
    t: u64,
    source: &dyn DirectionSource,
    want_estimate: bool,
) -> Result<StepReport> {
    expect_variant(cfg, Variant::Mezo)?;
    let parent = step_seed(cfg, t);
    let q = cfg.query_budget.max(1);
    let mut estimates = Vec::with_capacity(q);
    for i in 1..=q as u64 {
        let seed = derive_seed(parent, i);
        let est = spsa_estimate(oracle, theta, cfg.epsilon, seed, batch, source)?;
        estimates.push((seed, est.coefficient, est.mean_loss()));
    }

    let estimate = want_estimate.then(|| {
        let mut g = vec![0.0; theta.len()];
        for &(seed, coef, _) in &estimates {
            let z = source.materialize(seed, theta.len());
            g.iter_mut().zip(&z).for_each(|(gi, zi)| *gi += coef * zi / q as f64);
        }
        g
    });

    decay(theta, cfg);
    for &(seed, coef, _) in &estimates {
        source.perturb(theta, -cfg.learning_rate * coef / q as f64, seed)?;
    }
    let qf = q as f64;
    Ok(StepReport {
        step: t + 1,
        train_loss: estimates.iter().map(|e| e.2).sum::<f64>() / qf,
        coefficient: estimates.iter().map(|e| e.1).sum::<f64>() / qf,
        forward_passes: oracle.forward_passes(),
        estimate,
    })
}

/// Guiding-vector step: `M` probes build `v`, two passes estimate along it,
/// then `θ ← (1 - ηλ)θ - η·g·v`. `v` is dropped when the step returns.
pub fn mezo_gv_step(
    theta: &mut [f64],
    oracle: &mut LossOracle<'_>,
    batch: &Minibatch,
    cfg: &OptimizerConfig,
    t: u64,
    source: &dyn DirectionSource,
    want_estimate: bool,
) -> Result<StepReport> {
    expect_variant(cfg, Variant::MezoGv)?;
    let parent = step_seed(cfg, t);
    let mut guide =
        compute_guiding_vector(oracle, theta, cfg.probe_count, cfg.split_ratio, cfg.epsilon, parent, batch, source)?;
    if cfg.normalize_gv {
        guide.normalize();
    }
    let est = gv_estimate(oracle, theta, cfg.epsilon, &guide, batch)?;
    let (coefficient, train_loss) = (est.coefficient, est.mean_loss());
    let estimate = want_estimate.then(|| guide.values.iter().map(|v| coefficient * v).collect());

    decay(theta, cfg);
    add_scaled_in_place(theta, -cfg.learning_rate * coefficient, &guide.values)?;
    Ok(StepReport { step: t + 1, train_loss, coefficient, forward_passes: oracle.forward_passes(), estimate })
}

/// Greedy step: keep the lowest-loss probe seed, estimate along it, update.
pub fn mezo_greedy_step(
    theta: &mut [f64],
    oracle: &mut LossOracle<'_>,
    batch: &Minibatch,
    cfg: &OptimizerConfig,
    t: u64,
    source: &dyn DirectionSource,
    want_estimate: bool,
) -> Result<StepReport> {
    expect_variant(cfg, Variant::MezoGreedy)?;
    let parent = step_seed(cfg, t);
    let best = compute_greedy_perturbation(oracle, theta, cfg.probe_count, cfg.epsilon, parent, batch, source)?;
    let est = greedy_estimate(oracle, theta, cfg.epsilon, best.seed, batch, source)?;
    let (coefficient, train_loss) = (est.coefficient, est.mean_loss());
    let estimate = want_estimate
        .then(|| source.materialize(best.seed, theta.len()).into_iter().map(|z| coefficient * z).collect());

    decay(theta, cfg);
    source.perturb(theta, -cfg.learning_rate * coefficient, best.seed)?;
    Ok(StepReport { step: t + 1, train_loss, coefficient, forward_passes: oracle.forward_passes(), estimate })
}

/// Dispatch on `cfg.variant`.
pub fn step(
    theta: &mut [f64],
    oracle: &mut LossOracle<'_>,
    batch: &Minibatch,
    cfg: &OptimizerConfig,
    t: u64,
    source: &dyn DirectionSource,
    want_estimate: bool,
) -> Result<StepReport> {
    match cfg.variant {
        Variant::Mezo => mezo_step(theta, oracle, batch, cfg, t, source, want_estimate),
        Variant::MezoGv => mezo_gv_step(theta, oracle, batch, cfg, t, source, want_estimate),
        Variant::MezoGreedy => mezo_greedy_step(theta, oracle, batch, cfg, t, source, want_estimate),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Record wall-clock milliseconds; when off `wall_ms` is always 0.
    pub timing: bool,
    /// Compare against the full-training-split gradient instead of the
    /// step's own minibatch gradient.
    pub full_data_alignment: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { timing: true, full_data_alignment: false }
    }
}

/// A failed run together with everything recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("run aborted at step {}: {source}", partial.steps + 1)]
pub struct TrainError {
    #[source]
    pub source: ZoError,
    pub partial: Box<RunSummary>,
}

/// Runs `cfg.steps` steps from the objective's initial point.
pub fn run_training(problem: &dyn Objective, cfg: &OptimizerConfig, opts: RunOptions) -> Result<RunSummary, TrainError> {
    let theta = problem.initial_point();
    run_training_from(problem, cfg, opts, theta).map(|(summary, _)| summary)
}

/// Like [`run_training`] but from a given starting point; also returns the
/// final parameters.
pub fn run_training_from(
    problem: &dyn Objective,
    cfg: &OptimizerConfig,
    opts: RunOptions,
    mut theta: Vec<f64>,
) -> Result<(RunSummary, Vec<f64>), TrainError> {
    let mut summary = RunSummary::new(problem.name(), cfg);
    if let Err(source) = cfg.validate() {
        return Err(TrainError { source, partial: Box::new(summary) });
    }
    if theta.len() != problem.dim() {
        let source = ZoError::DimensionMismatch { expected: problem.dim(), found: theta.len() };
        return Err(TrainError { source, partial: Box::new(summary) });
    }
    summary.initial_train_loss = problem.loss(&theta, &Minibatch::full());

    let started = Instant::now();
    let mut oracle = LossOracle::new(problem);
    let source = GaussianDirections;
    for t in 0..cfg.steps {
        let batch = sample_minibatch(problem.train_size(), cfg.batch_size, cfg.master_seed, t);
        let is_eval = (t + 1) % cfg.eval_every == 0;
        let true_grad = is_eval.then(|| {
            if opts.full_data_alignment {
                problem.gradient(&theta, &Minibatch::full())
            } else {
                problem.gradient(&theta, &batch)
            }
        });
        let report = match step(&mut theta, &mut oracle, &batch, cfg, t, &source, is_eval) {
            Ok(r) => r,
            Err(source) => {
                summary.finish(problem, &theta);
                return Err(TrainError { source, partial: Box::new(summary) });
            }
        };
        let cos_sim = match (&report.estimate, &true_grad) {
            (Some(est), Some(g)) => cosine_similarity(est, g),
            _ => None,
        };
        let eval_loss = is_eval.then(|| problem.eval_loss(&theta));
        let wall_ms = if opts.timing { started.elapsed().as_millis() as u64 } else { 0 };
        if report.step % 1000 == 0 || report.step == cfg.steps {
            summary.checkpoints.push(Checkpoint { step: report.step, train_loss: report.train_loss, eval_loss });
        }
        summary.trace.push(TraceRow {
            step: report.step,
            forward_passes: report.forward_passes,
            train_loss: report.train_loss,
            eval_loss,
            cos_sim,
            wall_ms,
        });
        summary.steps = report.step;
        summary.total_forward_passes = report.forward_passes;
    }
    summary.finish(problem, &theta);
    Ok((summary, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::FixedDirections;
    use crate::problems::{logreg_synthetic, quadratic_problem};

    fn sphere(d: usize) -> crate::problems::Quadratic {
        quadratic_problem(d, 1.0, 0).unwrap()
    }

    fn cfg(variant: Variant, lr: f64) -> OptimizerConfig {
        let mut c = OptimizerConfig::new(variant, lr, 10);
        c.master_seed = MasterSeed(7);
        c
    }

    #[test]
    fn mezo_forced_direction() {
        let f = sphere(1);
        let c = cfg(Variant::Mezo, 0.1);
        let seed = derive_seed(step_seed(&c, 0), 1);
        let stub = FixedDirections::new().with(seed, vec![1.0]);
        let mut oracle = LossOracle::new(&f);
        let mut x = vec![3.0];
        let r = mezo_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &stub, false).unwrap();
        assert!((r.coefficient - 3.0).abs() < 1e-9);
        assert!((x[0] - 2.7).abs() < 1e-9);
        assert_eq!(r.forward_passes, 2);
    }

    #[test]
    fn mezo_zero_learning_rate() {
        let f = sphere(5);
        let mut c = cfg(Variant::Mezo, 0.1);
        c.learning_rate = 0.0;
        let mut oracle = LossOracle::new(&f);
        let x0 = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let mut x = x0.clone();
        mezo_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &GaussianDirections, false).unwrap();
        for (a, b) in x.iter().zip(&x0) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs());
        }
    }

    #[test]
    fn decay_only_step() {
        let f = sphere(2);
        let mut c = cfg(Variant::Mezo, 0.1);
        c.weight_decay = 0.5;
        let seed = derive_seed(step_seed(&c, 0), 1);
        let stub = FixedDirections::new().with(seed, vec![1.0, 0.0]);
        let mut oracle = LossOracle::new(&f);
        let mut x = vec![0.0, 5.0];
        let r = mezo_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &stub, false).unwrap();
        assert_eq!(r.coefficient, 0.0);
        assert_eq!(x, vec![0.0, 5.0 * 0.95]);
    }

    #[test]
    fn gv_forced_vector() {
        let f = sphere(2);
        let mut c = cfg(Variant::MezoGv, 0.1);
        c.probe_count = 2;
        let stub = FixedDirections::for_probes(step_seed(&c, 0), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut oracle = LossOracle::new(&f);
        let mut x = vec![3.0, 4.0];
        let r = mezo_gv_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &stub, true).unwrap();
        assert!((r.coefficient + 1.0).abs() < 1e-9);
        assert!((x[0] - 3.1).abs() < 1e-9 && (x[1] - 3.9).abs() < 1e-9);
        assert_eq!(r.forward_passes, 4);
        let est = r.estimate.unwrap();
        assert!((est[0] + 1.0).abs() < 1e-9 && (est[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gv_step_deterministic_and_costed() {
        let f = sphere(20);
        let mut c = cfg(Variant::MezoGv, 0.01);
        c.probe_count = 2;
        let run = || {
            let mut oracle = LossOracle::new(&f);
            let mut x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
            for t in 0..5 {
                mezo_gv_step(&mut x, &mut oracle, &Minibatch::full(), &c, t, &GaussianDirections, false).unwrap();
            }
            (x, oracle.forward_passes())
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b);
        assert_eq!(pa, 5 * 4);
        assert_eq!(pb, 20);
    }

    #[test]
    fn greedy_with_one_probe_matches_mezo() {
        let f = sphere(30);
        let mut mezo = cfg(Variant::Mezo, 0.05);
        let mut greedy = cfg(Variant::MezoGreedy, 0.05);
        greedy.probe_count = 1;
        mezo.probe_count = 1;
        let x0: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let (mut xa, mut xb) = (x0.clone(), x0);
        let mut oa = LossOracle::new(&f);
        let mut ob = LossOracle::new(&f);
        for t in 0..10 {
            mezo_step(&mut xa, &mut oa, &Minibatch::full(), &mezo, t, &GaussianDirections, false).unwrap();
            mezo_greedy_step(&mut xb, &mut ob, &Minibatch::full(), &greedy, t, &GaussianDirections, false).unwrap();
        }
        assert_eq!(xa, xb);
        assert_eq!(oa.forward_passes(), 20);
        assert_eq!(ob.forward_passes(), 30);
    }

    #[test]
    fn greedy_update_descends_linear_loss() {
        struct Linear;
        impl Objective for Linear {
            fn name(&self) -> &'static str {
                "linear"
            }
            fn dim(&self) -> usize {
                2
            }
            fn loss(&self, x: &[f64], _: &Minibatch) -> f64 {
                x[0]
            }
            fn gradient(&self, _: &[f64], _: &Minibatch) -> Vec<f64> {
                vec![1.0, 0.0]
            }
            fn initial_point(&self) -> Vec<f64> {
                vec![0.0, 0.0]
            }
        }
        let mut decreased = 0;
        for trial in 0..1000u64 {
            let mut c = cfg(Variant::MezoGreedy, 0.01);
            c.probe_count = 8;
            c.master_seed = MasterSeed(trial);
            let mut oracle = LossOracle::new(&Linear);
            let mut x = vec![0.0, 0.0];
            mezo_greedy_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &GaussianDirections, false).unwrap();
            if x[0] < 0.0 {
                decreased += 1;
            }
            assert_eq!(oracle.forward_passes(), 10);
        }
        assert!(decreased >= 990, "{decreased}");
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let f = sphere(2);
        let c = cfg(Variant::Mezo, 0.1);
        let mut oracle = LossOracle::new(&f);
        let mut x = vec![0.0; 2];
        assert!(mezo_gv_step(&mut x, &mut oracle, &Minibatch::full(), &c, 0, &GaussianDirections, false).is_err());
    }

    #[test]
    fn budget_arithmetic() {
        let mut c = cfg(Variant::Mezo, 0.1);
        c.probe_count = 2;
        assert_eq!(c.steps_for_budget(4000), 2000);
        c.variant = Variant::MezoGv;
        assert_eq!(c.steps_for_budget(4000), 1000);
        c.variant = Variant::MezoGreedy;
        c.probe_count = 4;
        assert_eq!(c.steps_for_budget(20000), 3333);
    }

    #[test]
    fn zero_steps_leave_theta_alone() {
        let f = sphere(3);
        let mut c = cfg(Variant::Mezo, 0.1);
        c.steps = 0;
        let x0 = vec![1.0, 2.0, 3.0];
        let (summary, x) = run_training_from(&f, &c, RunOptions::default(), x0.clone()).unwrap();
        assert!(summary.trace.is_empty());
        assert_eq!(x, x0);
    }

    #[test]
    fn budget_identity_over_a_run() {
        let f = sphere(10);
        for (variant, per) in [(Variant::Mezo, 2), (Variant::MezoGv, 6), (Variant::MezoGreedy, 6)] {
            let mut c = cfg(variant, 0.01);
            c.steps = 50;
            let s = run_training(&f, &c, RunOptions::default()).unwrap();
            assert_eq!(s.total_forward_passes, per * 50);
            assert!(s.trace.windows(2).all(|w| w[1].forward_passes - w[0].forward_passes == per));
        }
    }

    #[test]
    fn quadratic_mezo_halves_loss() {
        let f = quadratic_problem(100, 10.0, 3).unwrap();
        let mut c = cfg(Variant::Mezo, 1e-3);
        c.steps = 5000;
        let s = run_training(&f, &c, RunOptions::default()).unwrap();
        assert!(s.final_train_loss < 0.5 * s.initial_train_loss, "{} vs {}", s.final_train_loss, s.initial_train_loss);
    }

    #[test]
    fn windowed_loss_non_increasing_on_convex_quadratic() {
        let f = quadratic_problem(50, 10.0, 5).unwrap();
        for variant in Variant::ALL {
            let mut c = cfg(variant, 2e-3);
            c.steps = 2000;
            let s = run_training(&f, &c, RunOptions::default()).unwrap();
            let means: Vec<f64> =
                s.trace.chunks(100).map(|w| w.iter().map(|r| r.train_loss).sum::<f64>() / w.len() as f64).collect();
            assert!(means.windows(2).all(|w| w[1] <= w[0]), "{variant}: {means:?}");
        }
    }

    #[test]
    fn eval_rows_and_alignment() {
        let p = logreg_synthetic(20, 200, 0.1, 1).unwrap();
        let mut c = cfg(Variant::MezoGv, 1e-2);
        c.steps = 40;
        c.eval_every = 10;
        let s = run_training(&p, &c, RunOptions { timing: false, ..Default::default() }).unwrap();
        assert_eq!(s.trace.len(), 40);
        for row in &s.trace {
            let expect = row.step % 10 == 0;
            assert_eq!(row.eval_loss.is_some(), expect);
            assert_eq!(row.cos_sim.is_some(), expect);
            assert_eq!(row.wall_ms, 0);
            if let Some(cs) = row.cos_sim {
                assert!((-1.0..=1.0).contains(&cs));
            }
        }
    }

    #[test]
    fn invalid_split_is_reported() {
        let f = sphere(2);
        let mut c = cfg(Variant::MezoGv, 0.1);
        c.probe_count = 2;
        c.split_ratio = 0.2;
        let err = run_training(&f, &c, RunOptions::default()).unwrap_err();
        assert!(err.to_string().contains("floor(α·M)"), "{err}");
    }

    #[test]
    fn divergence_aborts_with_partial_trace() {
        // Loss is undefined outside the unit box; a large step leaves it.
        struct Boxed;
        impl Objective for Boxed {
            fn name(&self) -> &'static str {
                "boxed"
            }
            fn dim(&self) -> usize {
                4
            }
            fn loss(&self, x: &[f64], _: &Minibatch) -> f64 {
                if x.iter().any(|v| v.abs() > 1.0) {
                    f64::NAN
                } else {
                    x.iter().map(|v| v * v).sum()
                }
            }
            fn gradient(&self, x: &[f64], _: &Minibatch) -> Vec<f64> {
                x.iter().map(|v| 2.0 * v).collect()
            }
            fn initial_point(&self) -> Vec<f64> {
                vec![0.01; 4]
            }
        }
        let mut c = cfg(Variant::Mezo, 50.0);
        c.steps = 10_000;
        let err = run_training(&Boxed, &c, RunOptions::default()).unwrap_err();
        assert!(matches!(err.source, ZoError::NonFiniteEstimate { .. }), "{err}");
        assert!(err.partial.steps < 10_000);
        assert_eq!(err.partial.trace.len() as u64, err.partial.steps);
    }
}
