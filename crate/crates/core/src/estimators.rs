//! Two-point directional estimators and the prior-probing subroutines.
//!
//! All estimators perturb `θ` in place (`+ε`, `-2ε`, `+ε`) and hand back a
//! scalar coefficient plus a description of the direction it multiplies.
//! Directions drawn from seeds are never stored, only their seeds.

use std::collections::HashMap;

use crate::error::{Result, ZoError};
use crate::problems::{Minibatch, Objective};
use crate::rng::{add_scaled_in_place, derive_seed, gaussian_stream, perturb_in_place, DerivedSeed, MasterSeed};

/// Regenerates perturbation directions from seeds.
///
/// [`GaussianDirections`] is the production source; [`FixedDirections`] pins
/// chosen vectors to seeds so hand-computed cases can be exercised.
pub trait DirectionSource: Sync {
    fn perturb(&self, theta: &mut [f64], scale: f64, seed: DerivedSeed) -> Result<()>;

    fn materialize(&self, seed: DerivedSeed, dim: usize) -> Vec<f64>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GaussianDirections;

impl DirectionSource for GaussianDirections {
    fn perturb(&self, theta: &mut [f64], scale: f64, seed: DerivedSeed) -> Result<()> {
        perturb_in_place(theta, scale, seed)
    }

    fn materialize(&self, seed: DerivedSeed, dim: usize) -> Vec<f64> {
        gaussian_stream(seed, dim)
    }
}

/// Lookup table from seed to a fixed direction. Seeds without an entry fall
/// back to the Gaussian stream.
#[derive(Clone, Debug, Default)]
pub struct FixedDirections {
    table: HashMap<DerivedSeed, Vec<f64>>,
}

impl FixedDirections {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, seed: DerivedSeed, direction: Vec<f64>) -> Self {
        self.table.insert(seed, direction);
        self
    }

    /// Pins `directions[i]` to the seed of probe `i + 1` under `parent`.
    pub fn for_probes(parent: impl Into<MasterSeed>, directions: Vec<Vec<f64>>) -> Self {
        let parent = parent.into();
        let table = directions
            .into_iter()
            .enumerate()
            .map(|(i, z)| (derive_seed(parent, i as u64 + 1), z))
            .collect();
        Self { table }
    }
}

impl DirectionSource for FixedDirections {
    fn perturb(&self, theta: &mut [f64], scale: f64, seed: DerivedSeed) -> Result<()> {
        match self.table.get(&seed) {
            Some(z) => add_scaled_in_place(theta, scale, z),
            None => perturb_in_place(theta, scale, seed),
        }
    }

    fn materialize(&self, seed: DerivedSeed, dim: usize) -> Vec<f64> {
        match self.table.get(&seed) {
            Some(z) => z.clone(),
            None => gaussian_stream(seed, dim),
        }
    }
}

/// Wraps an objective and counts every forward pass.
pub struct LossOracle<'a> {
    objective: &'a dyn Objective,
    forward_passes: u64,
}

impl<'a> LossOracle<'a> {
    pub fn new(objective: &'a dyn Objective) -> Self {
        Self { objective, forward_passes: 0 }
    }

    pub fn evaluate(&mut self, theta: &[f64], batch: &Minibatch) -> f64 {
        self.forward_passes += 1;
        self.objective.loss(theta, batch)
    }

    pub fn forward_passes(&self) -> u64 {
        self.forward_passes
    }

    pub fn objective(&self) -> &'a dyn Objective {
        self.objective
    }
}

/// What the coefficient multiplies.
#[derive(Clone, Copy, Debug)]
pub enum Direction<'v> {
    Seed(DerivedSeed),
    Vector(&'v [f64]),
}

#[derive(Clone, Copy, Debug)]
pub struct DirectionalEstimate<'v> {
    /// `(L⁺ - L⁻) / 2ε`
    pub coefficient: f64,
    pub loss_plus: f64,
    pub loss_minus: f64,
    pub direction: Direction<'v>,
}

impl DirectionalEstimate<'_> {
    /// `(L⁺ + L⁻) / 2`, the loss reported for a training step.
    pub fn mean_loss(&self) -> f64 {
        0.5 * (self.loss_plus + self.loss_minus)
    }
}

/// One probe evaluation at `θ + ε·z(seed)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRecord {
    pub index: u64,
    pub seed: DerivedSeed,
    pub loss: f64,
}

/// `v = mean(elite z) - mean(non-elite z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidingVector {
    pub values: Vec<f64>,
    pub probe_count: usize,
    pub split_ratio: f64,
    pub elite_count: usize,
}

impl GuidingVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Rescale to unit length. A zero vector is left untouched.
    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|x| *x /= n);
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ZoError::config(format!("perturbation scale must be positive and finite, got {eps}")))
    }
}

/// Size of the elite group, `⌊αM⌋`, validated to lie in `[1, M-1]`.
pub fn elite_count(probe_count: usize, split_ratio: f64) -> Result<usize> {
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(ZoError::config(format!("split ratio α must lie in (0, 1), got {split_ratio}")));
    }
    // the epsilon absorbs products such as 0.29 * 100 = 28.999999999999996
    let k = (split_ratio * probe_count as f64 + 1e-9).floor() as usize;
    if k < 1 || k + 1 > probe_count {
        return Err(ZoError::config(format!(
            "guiding-vector split needs 1 <= floor(α·M) <= M-1, got floor({split_ratio}·{probe_count}) = {k}"
        )));
    }
    Ok(k)
}

/// The `+ε / -2ε / +ε` dance along a seeded direction.
fn seeded_two_point<'v>(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    eps: f64,
    seed: DerivedSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<DirectionalEstimate<'v>> {
    check_eps(eps)?;
    source.perturb(theta, eps, seed)?;
    let loss_plus = oracle.evaluate(theta, batch);
    source.perturb(theta, -2.0 * eps, seed)?;
    let loss_minus = oracle.evaluate(theta, batch);
    source.perturb(theta, eps, seed)?;
    finish(loss_plus, loss_minus, eps, Direction::Seed(seed))
}

fn finish(loss_plus: f64, loss_minus: f64, eps: f64, direction: Direction<'_>) -> Result<DirectionalEstimate<'_>> {
    let coefficient = (loss_plus - loss_minus) / (2.0 * eps);
    if !loss_plus.is_finite() || !loss_minus.is_finite() || !coefficient.is_finite() {
        return Err(ZoError::NonFiniteEstimate { plus: loss_plus, minus: loss_minus });
    }
    Ok(DirectionalEstimate { coefficient, loss_plus, loss_minus, direction })
}

/// Baseline two-point SPSA along `z(seed)`. Two forward passes.
pub fn spsa_estimate<'v>(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    eps: f64,
    seed: DerivedSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<DirectionalEstimate<'v>> {
    seeded_two_point(oracle, theta, eps, seed, batch, source)
}

/// Averaged `q`-query SPSA estimate, materialized. Seeds are
/// `derive_seed(master, i)` for `i = 1..=q`; `2q` forward passes.
pub fn spsa_estimate_multi(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    eps: f64,
    master: MasterSeed,
    batch: &Minibatch,
    queries: usize,
    source: &dyn DirectionSource,
) -> Result<Vec<f64>> {
    if queries == 0 {
        return Err(ZoError::config("query budget q must be at least 1"));
    }
    let mut avg = vec![0.0; theta.len()];
    for i in 1..=queries as u64 {
        let seed = derive_seed(master, i);
        let est = spsa_estimate(oracle, theta, eps, seed, batch, source)?;
        source.perturb(&mut avg, est.coefficient / queries as f64, seed)?;
    }
    Ok(avg)
}

/// One-sided probes at `θ + ε·z_i` for `i = 1..=M`, restoring `θ` after each.
pub fn probe_directions(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    probe_count: usize,
    eps: f64,
    parent: MasterSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<Vec<ProbeRecord>> {
    check_eps(eps)?;
    let mut records = Vec::with_capacity(probe_count);
    for index in 1..=probe_count as u64 {
        let seed = derive_seed(parent, index);
        source.perturb(theta, eps, seed)?;
        let loss = oracle.evaluate(theta, batch);
        source.perturb(theta, -eps, seed)?;
        if !loss.is_finite() {
            return Err(ZoError::NonFiniteProbe { probe: index, loss });
        }
        records.push(ProbeRecord { index, seed, loss });
    }
    Ok(records)
}

/// Sort ascending by loss; ties go to the lower probe index.
pub fn rank_probes(records: &mut [ProbeRecord]) {
    records.sort_by(|a, b| a.loss.total_cmp(&b.loss).then(a.index.cmp(&b.index)));
}

/// Builds the guiding vector from `M` one-sided probes (exactly `M` forward
/// passes). The elite group is the `⌊αM⌋` lowest-loss probes, the non-elite
/// group is everything else.
#[allow(clippy::too_many_arguments)]
pub fn compute_guiding_vector(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    probe_count: usize,
    split_ratio: f64,
    eps: f64,
    parent: MasterSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<GuidingVector> {
    let elite = elite_count(probe_count, split_ratio)?;
    let mut records = probe_directions(oracle, theta, probe_count, eps, parent, batch, source)?;
    rank_probes(&mut records);

    let rest = probe_count - elite;
    let mut values = vec![0.0; theta.len()];
    for (rank, rec) in records.iter().enumerate() {
        let weight = if rank < elite { 1.0 / elite as f64 } else { -1.0 / rest as f64 };
        source.perturb(&mut values, weight, rec.seed)?;
    }
    Ok(GuidingVector { values, probe_count, split_ratio, elite_count: elite })
}

/// Two-point estimate along the guiding vector. Two forward passes.
pub fn gv_estimate<'v>(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    eps: f64,
    guide: &'v GuidingVector,
    batch: &Minibatch,
) -> Result<DirectionalEstimate<'v>> {
    check_eps(eps)?;
    let v = &guide.values;
    add_scaled_in_place(theta, eps, v)?;
    let loss_plus = oracle.evaluate(theta, batch);
    add_scaled_in_place(theta, -2.0 * eps, v)?;
    let loss_minus = oracle.evaluate(theta, batch);
    add_scaled_in_place(theta, eps, v)?;
    finish(loss_plus, loss_minus, eps, Direction::Vector(v))
}

/// `z* = argmin_i L(θ + ε z_i)` over `M` probes. Only the winning seed is
/// kept.
pub fn compute_greedy_perturbation(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    probe_count: usize,
    eps: f64,
    parent: MasterSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<ProbeRecord> {
    if probe_count == 0 {
        return Err(ZoError::config("greedy perturbation needs at least one probe"));
    }
    let records = probe_directions(oracle, theta, probe_count, eps, parent, batch, source)?;
    let best = records
        .into_iter()
        .reduce(|best, r| if r.loss < best.loss { r } else { best })
        .expect("probe_count >= 1");
    Ok(best)
}

/// Two-point estimate along the greedy winner.
pub fn greedy_estimate<'v>(
    oracle: &mut LossOracle<'_>,
    theta: &mut [f64],
    eps: f64,
    best_seed: DerivedSeed,
    batch: &Minibatch,
    source: &dyn DirectionSource,
) -> Result<DirectionalEstimate<'v>> {
    seeded_two_point(oracle, theta, eps, best_seed, batch, source)
}
