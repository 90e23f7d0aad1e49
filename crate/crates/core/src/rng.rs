//! Seed derivation, Gaussian direction streams and in-place perturbation.
//!
//! Directions are never stored. A [`DerivedSeed`] is enough to regenerate the
//! exact same standard-normal vector, so every perturbation applied with
//! `+c` can be undone with `-c` bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::ZoError;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Top-level seed of a run. Identical master seeds give identical runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MasterSeed(pub u64);

/// A seed derived from a parent seed and an index; the handle from which one
/// Gaussian direction is regenerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DerivedSeed(pub u64);

impl From<DerivedSeed> for MasterSeed {
    fn from(seed: DerivedSeed) -> Self {
        MasterSeed(seed.0)
    }
}

/// Reserved index blocks so streams used for different purposes never share
/// a derived seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedPurpose {
    Step,
    Minibatch,
    Trial,
    Init,
}

impl SeedPurpose {
    const BLOCK: u64 = 1 << 56;

    fn base(self) -> u64 {
        match self {
            SeedPurpose::Step => 0,
            SeedPurpose::Minibatch => Self::BLOCK,
            SeedPurpose::Trial => 2 * Self::BLOCK,
            SeedPurpose::Init => 3 * Self::BLOCK,
        }
    }

    /// Seed for the `index`-th (zero based) draw of this purpose.
    pub fn seed(self, master: MasterSeed, index: u64) -> DerivedSeed {
        derive_seed(master, self.base() + index + 1)
    }
}

/// One step of the SplitMix64 recurrence: returns `(output, next_state)`.
#[inline]
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = next;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31), next)
}

/// `Hash(s ⊕ i)`: first SplitMix64 output from state `s XOR i`.
#[inline]
pub fn derive_seed(master: impl Into<MasterSeed>, index: u64) -> DerivedSeed {
    debug_assert!(index >= 1, "probe indices start at 1");
    let master = master.into();
    DerivedSeed(splitmix64_next(master.0 ^ index).0)
}

/// Stateful SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let (out, next) = splitmix64_next(self.state);
        self.state = next;
        out
    }

    /// Uniform on `(0, 1]`: `1 - (x >> 11) * 2^-53`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        1.0 - (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }
}

/// Box–Muller standard normals over consecutive SplitMix64 outputs.
///
/// Each pair of uniforms `(u1, u2)` on `(0, 1]` yields
/// `r·cos(2πu2)` then `r·sin(2πu2)` with `r = sqrt(-2 ln u1)`.
#[derive(Clone, Debug)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: DerivedSeed) -> Self {
        Self { rng: SplitMix64::new(seed.0), spare: None }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_open01();
        let u2 = self.rng.next_open01();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * angle.sin());
        r * angle.cos()
    }
}

impl Iterator for GaussianStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

/// Materialize the length-`d` direction for `seed`. With odd `d` the final
/// sine draw is discarded.
pub fn gaussian_stream(seed: DerivedSeed, d: usize) -> Vec<f64> {
    GaussianStream::new(seed).take(d).collect()
}

/// `θ_j ← θ_j + c·z_j` for the direction regenerated from `seed`.
///
/// The update order and arithmetic are identical on every call, so `+c`
/// followed by `-c` subtracts exactly the values that were added. Rounding of
/// the two additions can still leave a one-ulp residue in some coordinates.
pub fn perturb_in_place(theta: &mut [f64], scale: f64, seed: DerivedSeed) -> Result<(), ZoError> {
    let mut first_bad = None;
    for (j, (t, z)) in theta.iter_mut().zip(GaussianStream::new(seed)).enumerate() {
        *t += scale * z;
        if first_bad.is_none() && !t.is_finite() {
            first_bad = Some(j);
        }
    }
    match first_bad {
        Some(index) => Err(ZoError::NonFinite { index }),
        None => Ok(()),
    }
}

/// `θ ← θ + c·v`.
pub fn add_scaled_in_place(theta: &mut [f64], scale: f64, v: &[f64]) -> Result<(), ZoError> {
    if theta.len() != v.len() {
        return Err(ZoError::DimensionMismatch { expected: theta.len(), found: v.len() });
    }
    let mut first_bad = None;
    for (j, (t, x)) in theta.iter_mut().zip(v).enumerate() {
        *t += scale * x;
        if first_bad.is_none() && !t.is_finite() {
            first_bad = Some(j);
        }
    }
    match first_bad {
        Some(index) => Err(ZoError::NonFinite { index }),
        None => Ok(()),
    }
}
