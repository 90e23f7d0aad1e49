//! Desk-scale objectives with analytic gradients.
//!
//! Every objective exposes its loss on a [`Minibatch`] and the matching true
//! gradient, which the alignment diagnostics compare ZO estimates against.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::rng::{derive_seed, GaussianStream, MasterSeed, SeedPurpose, SplitMix64};

/// Indices into an objective's training split. An empty index list stands for
/// the whole objective (full training split, or the deterministic function for
/// problems without data).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Minibatch {
    indices: Vec<usize>,
}

impl Minibatch {
    pub fn full() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn new(indices: Vec<usize>, train_size: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(ZoError::config("minibatch must contain at least one example"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= train_size) {
            return Err(ZoError::config(format!(
                "minibatch index {bad} out of bounds for {train_size} training examples"
            )));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_full(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Uniform sample without replacement, a pure function of `(master, step)`.
///
/// Indices come back sorted so loss sums are evaluated in a fixed order.
pub fn sample_minibatch(
    train_size: Option<usize>,
    batch_size: usize,
    master: MasterSeed,
    step: u64,
) -> Minibatch {
    let Some(n) = train_size else {
        return Minibatch::full();
    };
    if batch_size >= n {
        return Minibatch { indices: (0..n).collect() };
    }
    // Floyd's algorithm
    let mut rng = SplitMix64::new(SeedPurpose::Minibatch.seed(master, step).0);
    let mut chosen = BTreeSet::new();
    for j in (n - batch_size)..n {
        let t = rng.below(j as u64 + 1) as usize;
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    Minibatch { indices: chosen.into_iter().collect() }
}

/// A differentiable objective with an optional train/validation split.
pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn loss(&self, theta: &[f64], batch: &Minibatch) -> f64;

    fn gradient(&self, theta: &[f64], batch: &Minibatch) -> Vec<f64>;

    /// Number of training examples, `None` for deterministic functions.
    fn train_size(&self) -> Option<usize> {
        None
    }

    /// Loss on the held-out split; the deterministic loss when there is none.
    fn eval_loss(&self, theta: &[f64]) -> f64 {
        self.loss(theta, &Minibatch::full())
    }

    fn initial_point(&self) -> Vec<f64>;
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_difference_gradient(obj: &dyn Objective, theta: &[f64], batch: &Minibatch, h: f64) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..x.len())
        .map(|j| {
            let orig = x[j];
            x[j] = orig + h;
            let up = obj.loss(&x, batch);
            x[j] = orig - h;
            let down = obj.loss(&x, batch);
            x[j] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `f(x) = ½ xᵀ diag(λ) x` with eigenvalues log-spaced on `[1, κ]`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    eigenvalues: Vec<f64>,
    seed: MasterSeed,
}

pub fn quadratic_problem(dim: usize, condition_number: f64, seed: u64) -> Result<Quadratic> {
    if dim == 0 {
        return Err(ZoError::config("quadratic dimension must be at least 1"));
    }
    if !condition_number.is_finite() || condition_number < 1.0 {
        return Err(ZoError::config("condition number must be finite and >= 1"));
    }
    let eigenvalues = (0..dim)
        .map(|i| {
            if dim == 1 {
                1.0
            } else {
                condition_number.powf(i as f64 / (dim - 1) as f64)
            }
        })
        .collect();
    Ok(Quadratic { eigenvalues, seed: MasterSeed(seed) })
}

impl Quadratic {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn loss(&self, theta: &[f64], _batch: &Minibatch) -> f64 {
        0.5 * theta.iter().zip(&self.eigenvalues).map(|(x, l)| l * x * x).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64], _batch: &Minibatch) -> Vec<f64> {
        theta.iter().zip(&self.eigenvalues).map(|(x, l)| l * x).collect()
    }

    fn initial_point(&self) -> Vec<f64> {
        GaussianStream::new(SeedPurpose::Init.seed(self.seed, 0)).take(self.dim()).collect()
    }
}

/// Chained Rosenbrock `Σ 100 (x_{i+1} - x_i²)² + (1 - x_i)²`.
#[derive(Clone, Debug)]
pub struct Rosenbrock {
    dim: usize,
}

pub fn rosenbrock_problem(dim: usize) -> Result<Rosenbrock> {
    if dim < 2 {
        return Err(ZoError::config("rosenbrock needs dimension >= 2"));
    }
    Ok(Rosenbrock { dim })
}

impl Objective for Rosenbrock {
    fn name(&self) -> &'static str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, x: &[f64], _batch: &Minibatch) -> f64 {
        x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64], _batch: &Minibatch) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() - 1 {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * r;
        }
        g
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary logistic regression on Gaussian features with labels planted by a
/// hidden weight vector and flipped with probability `label_noise`.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
    n_train: usize,
    planted: Vec<f64>,
}

pub fn logreg_synthetic(dim: usize, n_examples: usize, label_noise: f64, seed: u64) -> Result<LogisticRegression> {
    if dim == 0 {
        return Err(ZoError::config("logistic regression dimension must be at least 1"));
    }
    if n_examples < 2 {
        return Err(ZoError::config("logistic regression needs at least 2 examples"));
    }
    if !(0.0..=0.5).contains(&label_noise) {
        return Err(ZoError::config("label_noise must lie in [0, 0.5]"));
    }
    let master = MasterSeed(seed);
    let mut planted: Vec<f64> = GaussianStream::new(derive_seed(master, 1)).take(dim).collect();
    let norm = planted.iter().map(|w| w * w).sum::<f64>().sqrt();
    planted.iter_mut().for_each(|w| *w /= norm);

    let features: Vec<f64> = GaussianStream::new(derive_seed(master, 2)).take(dim * n_examples).collect();
    let mut flips = SplitMix64::new(derive_seed(master, 3).0);
    let labels = features
        .chunks_exact(dim)
        .map(|x| {
            let clean = dot(x, &planted) > 0.0;
            let flip = flips.next_f64() < label_noise;
            if clean != flip {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let n_val = (n_examples / 5).max(1);
    Ok(LogisticRegression { dim, features, labels, n_train: n_examples - n_val, planted })
}

impl LogisticRegression {
    pub fn planted(&self) -> &[f64] {
        &self.planted
    }

    fn example(&self, i: usize) -> (&[f64], f64) {
        (&self.features[i * self.dim..(i + 1) * self.dim], self.labels[i])
    }

    fn rows<'a>(&self, batch: &'a Minibatch) -> Box<dyn Iterator<Item = usize> + 'a> {
        if batch.is_full() {
            Box::new(0..self.n_train)
        } else {
            Box::new(batch.indices().iter().copied())
        }
    }

    fn mean_loss(&self, theta: &[f64], rows: impl Iterator<Item = usize>) -> f64 {
        let (mut total, mut count) = (0.0, 0usize);
        for i in rows {
            let (x, y) = self.example(i);
            let z = dot(x, theta);
            total += softplus(z) - y * z;
            count += 1;
        }
        total / count as f64
    }
}

impl Objective for LogisticRegression {
    fn name(&self) -> &'static str {
        "logreg"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], batch: &Minibatch) -> f64 {
        self.mean_loss(theta, self.rows(batch))
    }

    fn gradient(&self, theta: &[f64], batch: &Minibatch) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        let mut count = 0usize;
        for i in self.rows(batch) {
            let (x, y) = self.example(i);
            let r = sigmoid(dot(x, theta)) - y;
            g.iter_mut().zip(x).for_each(|(gj, xj)| *gj += r * xj);
            count += 1;
        }
        g.iter_mut().for_each(|gj| *gj /= count as f64);
        g
    }

    fn train_size(&self) -> Option<usize> {
        Some(self.n_train)
    }

    fn eval_loss(&self, theta: &[f64]) -> f64 {
        self.mean_loss(theta, self.n_train..self.labels.len())
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// Linear regression through a low-rank adapter: prediction `(W + BA) x` with
/// `W` frozen. The trainable vector is `vec(B) ‖ vec(A)`, both row-major.
#[derive(Clone, Debug)]
pub struct LoraLinear {
    rows: usize,
    cols: usize,
    rank: usize,
    base: Vec<f64>,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    n_train: usize,
    init_a: Vec<f64>,
}

/// Scale of the initial `A` factor; `B` starts at zero.
const LORA_INIT_SCALE: f64 = 0.1;

pub fn lora_linear_problem(rows: usize, cols: usize, rank: usize, n_examples: usize, seed: u64) -> Result<LoraLinear> {
    if rows == 0 || cols == 0 || rank == 0 {
        return Err(ZoError::config("lora dimensions and rank must be positive"));
    }
    if rank > rows.min(cols) {
        return Err(ZoError::config(format!("lora rank {rank} exceeds min(m, n) = {}", rows.min(cols))));
    }
    if n_examples < 2 {
        return Err(ZoError::config("lora problem needs at least 2 examples"));
    }
    let master = MasterSeed(seed);
    let normals = |index: u64, len: usize, scale: f64| -> Vec<f64> {
        GaussianStream::new(derive_seed(master, index)).take(len).map(|z| z * scale).collect()
    };
    let base = normals(1, rows * cols, 1.0 / (cols as f64).sqrt());
    let planted_b = normals(2, rows * rank, 1.0 / (rank as f64).sqrt());
    let planted_a = normals(3, rank * cols, 1.0 / (cols as f64).sqrt());
    let inputs = normals(4, n_examples * cols, 1.0);
    let init_a = normals(5, rank * cols, LORA_INIT_SCALE);

    let mut target_weight = base.clone();
    add_low_rank(&mut target_weight, &planted_b, &planted_a, rows, cols, rank);
    let targets = inputs.chunks_exact(cols).flat_map(|x| mat_vec(&target_weight, x, rows, cols)).collect();

    let n_val = (n_examples / 5).max(1);
    Ok(LoraLinear { rows, cols, rank, base, inputs, targets, n_train: n_examples - n_val, init_a })
}

fn add_low_rank(w: &mut [f64], b: &[f64], a: &[f64], rows: usize, cols: usize, rank: usize) {
    for i in 0..rows {
        for k in 0..rank {
            let bik = b[i * rank + k];
            if bik == 0.0 {
                continue;
            }
            let arow = &a[k * cols..(k + 1) * cols];
            w[i * cols..(i + 1) * cols].iter_mut().zip(arow).for_each(|(wij, akj)| *wij += bik * akj);
        }
    }
}

fn mat_vec(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows).map(|i| dot(&w[i * cols..(i + 1) * cols], x)).collect()
}

impl LoraLinear {
    pub fn split_params<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        theta.split_at(self.rows * self.rank)
    }

    /// `W + BA` for the given trainable vector.
    pub fn effective_weight(&self, theta: &[f64]) -> Vec<f64> {
        let (b, a) = self.split_params(theta);
        let mut w = self.base.clone();
        add_low_rank(&mut w, b, a, self.rows, self.cols, self.rank);
        w
    }

    pub fn base_weight(&self) -> &[f64] {
        &self.base
    }

    fn rows_of(&self, batch: &Minibatch) -> Vec<usize> {
        if batch.is_full() {
            (0..self.n_train).collect()
        } else {
            batch.indices().to_vec()
        }
    }

    fn mse(&self, theta: &[f64], rows: &[usize]) -> f64 {
        let w = self.effective_weight(theta);
        let mut total = 0.0;
        for &e in rows {
            let x = &self.inputs[e * self.cols..(e + 1) * self.cols];
            let y = &self.targets[e * self.rows..(e + 1) * self.rows];
            total += mat_vec(&w, x, self.rows, self.cols).iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>();
        }
        total / (rows.len() * self.rows) as f64
    }
}

impl Objective for LoraLinear {
    fn name(&self) -> &'static str {
        "lora_linear"
    }

    fn dim(&self) -> usize {
        self.rank * (self.rows + self.cols)
    }

    fn loss(&self, theta: &[f64], batch: &Minibatch) -> f64 {
        self.mse(theta, &self.rows_of(batch))
    }

    fn gradient(&self, theta: &[f64], batch: &Minibatch) -> Vec<f64> {
        let rows = self.rows_of(batch);
        let w = self.effective_weight(theta);
        // G = 2/(m|B|) Σ r xᵀ, dB = G Aᵀ, dA = Bᵀ G
        let mut g = vec![0.0; self.rows * self.cols];
        let scale = 2.0 / (rows.len() * self.rows) as f64;
        for &e in &rows {
            let x = &self.inputs[e * self.cols..(e + 1) * self.cols];
            let y = &self.targets[e * self.rows..(e + 1) * self.rows];
            let pred = mat_vec(&w, x, self.rows, self.cols);
            for i in 0..self.rows {
                let r = scale * (pred[i] - y[i]);
                g[i * self.cols..(i + 1) * self.cols].iter_mut().zip(x).for_each(|(gij, xj)| *gij += r * xj);
            }
        }
        let (b, a) = self.split_params(theta);
        let mut grad = vec![0.0; self.dim()];
        let (db, da) = grad.split_at_mut(self.rows * self.rank);
        for i in 0..self.rows {
            let grow = &g[i * self.cols..(i + 1) * self.cols];
            for k in 0..self.rank {
                db[i * self.rank + k] = dot(grow, &a[k * self.cols..(k + 1) * self.cols]);
                let bik = b[i * self.rank + k];
                da[k * self.cols..(k + 1) * self.cols].iter_mut().zip(grow).for_each(|(d, gij)| *d += bik * gij);
            }
        }
        grad
    }

    fn train_size(&self) -> Option<usize> {
        Some(self.n_train)
    }

    fn eval_loss(&self, theta: &[f64]) -> f64 {
        let rows: Vec<usize> = (self.n_train..self.targets.len() / self.rows).collect();
        self.mse(theta, &rows)
    }

    fn initial_point(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.rows * self.rank];
        theta.extend_from_slice(&self.init_a);
        theta
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Serializable problem selection used by run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        condition_number: f64,
        #[serde(default)]
        seed: u64,
    },
    Rosenbrock {
        dim: usize,
    },
    Logreg {
        dim: usize,
        n_examples: usize,
        #[serde(default)]
        label_noise: f64,
        #[serde(default)]
        seed: u64,
    },
    LoraLinear {
        rows: usize,
        cols: usize,
        rank: usize,
        n_examples: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Arc<dyn Objective>> {
        Ok(match *self {
            ProblemSpec::Quadratic { dim, condition_number, seed } => {
                Arc::new(quadratic_problem(dim, condition_number, seed)?)
            }
            ProblemSpec::Rosenbrock { dim } => Arc::new(rosenbrock_problem(dim)?),
            ProblemSpec::Logreg { dim, n_examples, label_noise, seed } => {
                Arc::new(logreg_synthetic(dim, n_examples, label_noise, seed)?)
            }
            ProblemSpec::LoraLinear { rows, cols, rank, n_examples, seed } => {
                Arc::new(lora_linear_problem(rows, cols, rank, n_examples, seed)?)
            }
        })
    }
}
