//! Monte Carlo checks of the alignment ratios of the three estimators and of
//! the concentration of the empirical second-moment matrix.
//!
//! Every trial draws its directions from `SeedPurpose::Trial.seed(master, t)`,
//! and per-trial results are reduced in trial order, so reports are identical
//! for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, ZoError};
use crate::problems::dot;
use crate::rng::{derive_seed, gaussian_stream, DerivedSeed, GaussianStream, MasterSeed, SeedPurpose};

pub const LEMMA1_MAX_DIM: usize = 512;

/// Direction of the reference gradient `g`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientChoice {
    /// First basis vector. Lossless by rotational invariance, and cheap.
    #[default]
    Basis,
    /// A fixed random unit vector drawn from the master seed.
    RandomUnit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaConfig {
    pub d: usize,
    pub k: usize,
    /// Tail size for the guiding-vector lemma.
    pub s: usize,
    pub trials: u64,
    pub seed: MasterSeed,
    #[serde(default)]
    pub gradient: GradientChoice,
    /// Thread count; `None` uses the global pool.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl LemmaConfig {
    pub fn new(d: usize, k: usize, trials: u64, seed: u64) -> Self {
        Self { d, k, s: 1, trials, seed: MasterSeed(seed), gradient: GradientChoice::Basis, workers: None }
    }

    pub fn with_tail(mut self, s: usize) -> Self {
        self.s = s;
        self
    }

    /// `s = ⌊σk⌋`.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.s = (sigma * self.k as f64 + 1e-9).floor() as usize;
        self
    }

    pub fn with_gradient(mut self, gradient: GradientChoice) -> Self {
        self.gradient = gradient;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn check(&self) -> Result<()> {
        if self.d < 2 {
            return Err(ZoError::config(format!("d must be at least 2, got {}", self.d)));
        }
        if self.k == 0 {
            return Err(ZoError::config("k must be at least 1"));
        }
        if self.trials == 0 {
            return Err(ZoError::config("trials must be at least 1"));
        }
        Ok(())
    }

    fn check_tail(&self) -> Result<()> {
        if self.s == 0 || self.s > self.k / 2 {
            return Err(ZoError::config(format!(
                "tail size s must satisfy 1 <= s <= floor(k/2), got s={} for k={}",
                self.s, self.k
            )));
        }
        Ok(())
    }
}

/// Mean and 95% confidence half-width of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Self { mean, ci95: f64::INFINITY };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self { mean, ci95: 1.96 * (var / n).sqrt() }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.ci95
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.ci95
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo() <= other.hi() && other.lo() <= self.hi()
    }

    /// Strictly above `other` with disjoint intervals.
    pub fn clearly_above(&self, other: &Estimate) -> bool {
        self.lo() > other.hi()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Averaged plain SPSA, `V = (1/k) Σ z zᵀ g`.
    Baseline,
    /// Argmin selection, `V = z* z*ᵀ g`.
    Greedy,
    /// Tail contrast, `V = s (ẑᵀg) ẑ`.
    GuidingVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub estimator: Estimator,
    pub d: usize,
    pub k: usize,
    pub s: Option<usize>,
    pub trials: u64,
    pub seed: MasterSeed,
    pub ratio1_mean: f64,
    pub ratio1_ci95: f64,
    pub ratio2_mean: f64,
    pub ratio2_ci95: f64,
    /// Signed `Vᵀg`, whose expectation is exactly 1 for the baseline.
    pub vtg_mean: f64,
    pub vtg_ci95: f64,
    pub predicted_ratio1: f64,
    pub predicted_ratio2: f64,
}

impl RatioReport {
    pub fn ratio1(&self) -> Estimate {
        Estimate { mean: self.ratio1_mean, ci95: self.ratio1_ci95 }
    }

    pub fn ratio2(&self) -> Estimate {
        Estimate { mean: self.ratio2_mean, ci95: self.ratio2_ci95 }
    }

    pub fn vtg(&self) -> Estimate {
        Estimate { mean: self.vtg_mean, ci95: self.vtg_ci95 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: MasterSeed,
    pub spectral_norm_median: f64,
    pub spectral_norm_q95: f64,
}

/// Parallel and perpendicular parts of `v` relative to a unit vector `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub parallel: Vec<f64>,
    pub perpendicular: Vec<f64>,
    /// `vᵀg`
    pub along: f64,
}

impl Decomposition {
    pub fn parallel_norm(&self) -> f64 {
        self.along.abs()
    }

    pub fn perpendicular_norm(&self) -> f64 {
        norm(&self.perpendicular)
    }

    /// `‖V_∥‖ / ‖V_⊥‖`
    pub fn ratio1(&self) -> f64 {
        self.parallel_norm() / self.perpendicular_norm()
    }

    /// `‖V_∥‖ / ‖g‖` with `‖g‖ = 1`.
    pub fn ratio2(&self) -> f64 {
        self.parallel_norm()
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Splits `v` into `(vᵀg)g` and the remainder. `g` must have unit norm.
pub fn decompose(v: &[f64], g: &[f64]) -> Decomposition {
    let along = dot(v, g);
    let parallel: Vec<f64> = g.iter().map(|gi| along * gi).collect();
    let perpendicular = v.iter().zip(&parallel).map(|(a, b)| a - b).collect();
    Decomposition { parallel, perpendicular, along }
}

/// Largest absolute eigenvalue of a symmetric `n×n` row-major matrix.
///
/// Power iteration on `A²` so that negative eigenvalues are found too; stops
/// after `max_iter` rounds or once the eigen-residual `‖A²x − ρx‖` drops
/// below `rel_tol · ρ`, then refines with a two-dimensional Rayleigh-Ritz
/// step.
pub fn spectral_norm_with(a: &[f64], n: usize, start: &[f64], max_iter: usize, rel_tol: f64) -> f64 {
    assert_eq!(a.len(), n * n, "matrix is not {n}×{n}");
    assert_eq!(start.len(), n, "start vector has wrong length");
    let matvec = |x: &[f64], out: &mut [f64]| {
        for (row, o) in a.chunks_exact(n).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    };
    let mut x = start.to_vec();
    let nx = norm(&x);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut rq = 0.0;
    for _ in 0..max_iter {
        matvec(&x, &mut y);
        // xᵀA²x = ‖Ax‖²
        rq = dot(&y, &y);
        if rq == 0.0 {
            return 0.0;
        }
        matvec(&y, &mut w);
        let residual = w.iter().zip(&x).map(|(wi, xi)| (wi - rq * xi).powi(2)).sum::<f64>().sqrt();
        if residual <= rel_tol * rq {
            break;
        }
        let nw = norm(&w);
        x.iter_mut().zip(&w).for_each(|(xi, wi)| *xi = wi / nw);
    }
    // The iterate is now a mix of the eigenvectors whose |λ| nearly tie.
    // Rayleigh-Ritz on span{x, Ax} separates them.
    matvec(&x, &mut y);
    let a11 = dot(&x, &y);
    let mut q2: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi - a11 * xi).collect();
    let nq = norm(&q2);
    if nq <= 1e-12 * norm(&y) {
        return rq.sqrt().max(a11.abs());
    }
    q2.iter_mut().for_each(|v| *v /= nq);
    matvec(&q2, &mut w);
    let (a12, a22) = (dot(&x, &w), dot(&q2, &w));
    let mid = 0.5 * (a11 + a22);
    let rad = (0.25 * (a11 - a22).powi(2) + a12 * a12).sqrt();
    rq.sqrt().max((mid + rad).abs()).max((mid - rad).abs())
}

const POWER_START_SEED: DerivedSeed = DerivedSeed(0x005E_ED0F_5EC7);

/// [`spectral_norm_with`] from a fixed Gaussian start, 200 iterations,
/// relative tolerance 1e-8.
pub fn spectral_norm(a: &[f64], n: usize) -> f64 {
    spectral_norm_with(a, n, &gaussian_stream(POWER_START_SEED, n), 200, 1e-8)
}

fn run_trials<T, F>(cfg: &LemmaConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(DerivedSeed) -> T + Sync + Send,
{
    let body = || (0..cfg.trials).into_par_iter().map(|t| f(SeedPurpose::Trial.seed(cfg.seed, t))).collect();
    match cfg.workers {
        None => Ok(body()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| ZoError::config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(body))
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Distribution of `‖S_k − I‖` with `S_k = (1/k) Σ z_i z_iᵀ`.
pub fn lemma1_concentration(cfg: &LemmaConfig) -> Result<ConcentrationReport> {
    cfg.check()?;
    if cfg.d > LEMMA1_MAX_DIM {
        return Err(ZoError::config(format!("the concentration study materializes d×d matrices; d must be <= {LEMMA1_MAX_DIM}")));
    }
    let (d, k) = (cfg.d, cfg.k);
    let mut norms = run_trials(cfg, |ts| {
        let mut s = vec![0.0; d * d];
        for i in 0..k {
            let z = gaussian_stream(derive_seed(ts, i as u64 + 1), d);
            for (r, zr) in z.iter().enumerate() {
                let row = &mut s[r * d..(r + 1) * d];
                row.iter_mut().zip(&z).for_each(|(sij, zc)| *sij += zr * zc);
            }
        }
        let inv_k = 1.0 / k as f64;
        s.iter_mut().for_each(|x| *x *= inv_k);
        for r in 0..d {
            s[r * d + r] -= 1.0;
        }
        spectral_norm_with(&s, d, &gaussian_stream(derive_seed(ts, k as u64 + 1), d), 200, 1e-8)
    })?;
    norms.sort_by(f64::total_cmp);
    Ok(ConcentrationReport {
        d,
        k,
        trials: cfg.trials,
        seed: cfg.seed,
        spectral_norm_median: quantile(&norms, 0.5),
        spectral_norm_q95: quantile(&norms, 0.95),
    })
}

fn reference_gradient(cfg: &LemmaConfig) -> Vec<f64> {
    match cfg.gradient {
        GradientChoice::Basis => {
            let mut g = vec![0.0; cfg.d];
            g[0] = 1.0;
            g
        }
        GradientChoice::RandomUnit => {
            let mut g = gaussian_stream(SeedPurpose::Init.seed(cfg.seed, 0), cfg.d);
            let n = norm(&g);
            g.iter_mut().for_each(|x| *x /= n);
            g
        }
    }
}

/// `Y_i = z_iᵀg` for each of the trial's `k` directions. With the basis
/// gradient only the first entry of each stream is drawn.
fn projections(ts: DerivedSeed, k: usize, g: &[f64], basis: bool) -> Vec<f64> {
    (0..k)
        .map(|i| {
            let seed = derive_seed(ts, i as u64 + 1);
            if basis {
                GaussianStream::new(seed).next_normal()
            } else {
                dot(&gaussian_stream(seed, g.len()), g)
            }
        })
        .collect()
}

fn direction(ts: DerivedSeed, i: usize, d: usize) -> Vec<f64> {
    gaussian_stream(derive_seed(ts, i as u64 + 1), d)
}

fn report(
    cfg: &LemmaConfig,
    estimator: Estimator,
    s: Option<usize>,
    per_trial: Vec<(f64, f64, f64)>,
    predicted_ratio1: f64,
    predicted_ratio2: f64,
) -> RatioReport {
    let r1: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let r2: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    let vg: Vec<f64> = per_trial.iter().map(|t| t.2).collect();
    let (r1, r2, vg) = (Estimate::from_samples(&r1), Estimate::from_samples(&r2), Estimate::from_samples(&vg));
    RatioReport {
        estimator,
        d: cfg.d,
        k: cfg.k,
        s,
        trials: cfg.trials,
        seed: cfg.seed,
        ratio1_mean: r1.mean,
        ratio1_ci95: r1.ci95,
        ratio2_mean: r2.mean,
        ratio2_ci95: r2.ci95,
        vtg_mean: vg.mean,
        vtg_ci95: vg.ci95,
        predicted_ratio1,
        predicted_ratio2,
    }
}

fn summarize(v: &[f64], g: &[f64]) -> (f64, f64, f64) {
    let dec = decompose(v, g);
    (dec.ratio1(), dec.ratio2(), dec.along)
}

/// Averaged baseline: `V = (1/k) Σ z_i z_iᵀ g`.
pub fn lemma2_ratios(cfg: &LemmaConfig) -> Result<RatioReport> {
    cfg.check()?;
    let g = reference_gradient(cfg);
    let (d, k) = (cfg.d, cfg.k);
    let per_trial = run_trials(cfg, |ts| {
        let mut v = vec![0.0; d];
        for i in 0..k {
            let z = direction(ts, i, d);
            let y = dot(&z, &g) / k as f64;
            v.iter_mut().zip(&z).for_each(|(vj, zj)| *vj += y * zj);
        }
        summarize(&v, &g)
    })?;
    Ok(report(cfg, Estimator::Baseline, None, per_trial, (k as f64 / (d - 1) as f64).sqrt(), 1.0))
}

/// Greedy idealization: the direction with the smallest projection `Y_i`.
pub fn lemma3_ratios(cfg: &LemmaConfig) -> Result<RatioReport> {
    cfg.check()?;
    let g = reference_gradient(cfg);
    let basis = cfg.gradient == GradientChoice::Basis;
    let (d, k) = (cfg.d, cfg.k);
    let per_trial = run_trials(cfg, |ts| {
        let ys = projections(ts, k, &g, basis);
        let best = (0..k).reduce(|b, i| if ys[i] < ys[b] { i } else { b }).expect("k >= 1");
        let z = direction(ts, best, d);
        let y = dot(&z, &g);
        let v: Vec<f64> = z.iter().map(|zj| y * zj).collect();
        summarize(&v, &g)
    })?;
    let ln_k = (k as f64).ln();
    Ok(report(
        cfg,
        Estimator::Greedy,
        None,
        per_trial,
        (2.0 * ln_k).sqrt() / ((d - 1) as f64).sqrt(),
        2.0 * ln_k,
    ))
}

/// Tail contrast between the `s` smallest and `s` largest projections:
/// `ẑ = (1/s)(Σ_{Λ₁} z − Σ_{Λ₂} z)`, `V = s (ẑᵀg) ẑ`.
pub fn lemma4_ratios(cfg: &LemmaConfig) -> Result<RatioReport> {
    cfg.check()?;
    cfg.check_tail()?;
    let g = reference_gradient(cfg);
    let basis = cfg.gradient == GradientChoice::Basis;
    let (d, k, s) = (cfg.d, cfg.k, cfg.s);
    let per_trial = run_trials(cfg, |ts| {
        let ys = projections(ts, k, &g, basis);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(a.cmp(&b)));
        let mut zhat = vec![0.0; d];
        let w = 1.0 / s as f64;
        for (&lo, &hi) in order[..s].iter().zip(order[k - s..].iter()) {
            let (zl, zh) = (direction(ts, lo, d), direction(ts, hi, d));
            for ((acc, a), b) in zhat.iter_mut().zip(&zl).zip(&zh) {
                *acc += w * (a - b);
            }
        }
        let along = s as f64 * dot(&zhat, &g);
        let v: Vec<f64> = zhat.iter().map(|z| along * z).collect();
        summarize(&v, &g)
    })?;
    let sl = s as f64 * (k as f64).ln();
    Ok(report(
        cfg,
        Estimator::GuidingVector,
        Some(s),
        per_trial,
        2.0 * sl.sqrt() / ((d - 1) as f64).sqrt(),
        8.0 * sl,
    ))
}

fn std_normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Density of the minimum of `k` standard normals, `k(1−Φ(y))^{k−1}φ(y)`.
pub fn min_order_stat_density(k: usize, y: f64) -> f64 {
    let tail = 0.5 * erfc(y / std::f64::consts::SQRT_2);
    k as f64 * tail.powi(k as i32 - 1) * std_normal_pdf(y)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // Unit-width panels first, so narrow peaks are never skipped.
    let panels = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, lo, hi), tol / panels as f64, 40)
        })
        .sum()
}

/// `(E[Y₁], E[Y₁²])` for the minimum of `k` standard normals.
pub fn exact_min_order_stat(k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(ZoError::config("k must be at least 1"));
    }
    let m1 = adaptive_simpson(&|y| y * min_order_stat_density(k, y), -12.0, 12.0, 1e-8);
    let m2 = adaptive_simpson(&|y| y * y * min_order_stat_density(k, y), -12.0, 12.0, 1e-8);
    Ok((m1, m2))
}
