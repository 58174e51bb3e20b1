//! Non-uniform partitions of a time interval.
//!
//! A [`Partition`] is one row `(a_1, …, a_n)` of a triangular array of
//! positive weights summing to one; the `i`-th time step of a product over
//! `[0, t]` has length `a_i · t`. Schemes produce rows for any `n`, and
//! [`metrics`] reports the two quantities that govern convergence of the
//! products: the largest weight and the L1 distance to the uniform row.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on `Σ a_i = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// Identifier of the pseudo-random source behind [`make_dirichlet`]; stored
/// next to generated artifacts so partitions can be regenerated bit for bit.
pub const RNG_ALGORITHM: &str = "chacha20(rand_chacha 0.9, seed_from_u64)+gamma(rand_distr 0.5)";

/// Seed used when a random scheme is requested without one.
pub const DEFAULT_SEED: u64 = 7;

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    n: usize,
    weights: Vec<f64>,
}

impl Partition {
    /// Validates and wraps a weight vector.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("a partition needs at least one weight");
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return invalid(format!("weight {i} is not a positive finite number: {w}"));
        }
        let sum = compensated_sum(weights.iter().copied());
        if (sum - 1.0).abs() > SUM_TOL {
            return invalid(format!("weights sum to {sum}, not 1"));
        }
        Ok(Self {
            n: weights.len(),
            weights,
        })
    }

    fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum = compensated_sum(raw.iter().copied());
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The same weights in reverse index order.
    pub fn reversed(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.reverse();
        Self { n: self.n, weights }
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            weights: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.n != raw.weights.len() {
            return Err(serde::de::Error::custom(format!(
                "n = {} but {} weights given",
                raw.n,
                raw.weights.len()
            )));
        }
        Partition::new(raw.weights).map_err(serde::de::Error::custom)
    }
}

pub fn make_uniform(n: usize) -> Result<Partition> {
    if n == 0 {
        return invalid("n must be positive");
    }
    Partition::normalized(vec![1.0 / n as f64; n])
}

/// `a_i = 1/n + (−1)^i / (2n)` for even `n`: the counterexample whose largest
/// weight vanishes while its L1 deviation stays at one half.
pub fn make_alternating(n: usize) -> Result<Partition> {
    if n == 0 || n % 2 == 1 {
        return invalid(format!(
            "alternating partitions need an even n >= 2 (got {n}); use make_uniform for odd n"
        ));
    }
    let nf = n as f64;
    let weights = (1..=n)
        .map(|i| if i % 2 == 1 { 0.5 / nf } else { 1.5 / nf })
        .collect();
    Partition::normalized(weights)
}

/// Weights proportional to `i^theta`.
pub fn make_power_law(n: usize, theta: f64) -> Result<Partition> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if !(theta.is_finite() && theta >= 0.0) {
        return invalid(format!("theta must be a nonnegative number, got {theta}"));
    }
    Partition::normalized((1..=n).map(|i| (i as f64).powf(theta)).collect())
}

/// A symmetric Dirichlet draw with every shape parameter equal to
/// `concentration`; large concentrations concentrate near the uniform row.
pub fn make_dirichlet(n: usize, seed: u64, concentration: f64) -> Result<Partition> {
    if n == 0 {
        return invalid("n must be positive");
    }
    if !(concentration.is_finite() && concentration > 0.0) {
        return invalid(format!(
            "concentration must be positive, got {concentration}"
        ));
    }
    if n == 1 {
        return make_uniform(1);
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("gamma law: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
    if raw.iter().any(|&g| g <= 0.0) {
        return Err(Error::Numerical(
            "gamma sample underflowed to zero; raise the concentration".into(),
        ));
    }
    Partition::normalized(raw)
}

/// Named generator of partition rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionScheme {
    Uniform,
    Alternating,
    #[serde(rename = "dirichlet_random", alias = "dirichlet")]
    Dirichlet {
        #[serde(default = "default_seed")]
        seed: u64,
        concentration: f64,
    },
    PowerLaw {
        theta: f64,
    },
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl PartitionScheme {
    pub fn generate(&self, n: usize) -> Result<Partition> {
        match *self {
            Self::Uniform => make_uniform(n),
            Self::Alternating => make_alternating(n),
            Self::Dirichlet {
                seed,
                concentration,
            } => make_dirichlet(n, seed, concentration),
            Self::PowerLaw { theta } => make_power_law(n, theta),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::Alternating => "alternating".into(),
            Self::Dirichlet {
                seed,
                concentration,
            } => format!("dirichlet(concentration={concentration},seed={seed})"),
            Self::PowerLaw { theta } => format!("power_law(theta={theta})"),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Dirichlet { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionMetrics {
    pub max_weight: f64,
    pub l1_deviation: f64,
}

pub fn metrics(p: &Partition) -> PartitionMetrics {
    let uniform = 1.0 / p.n() as f64;
    PartitionMetrics {
        max_weight: p.weights().iter().copied().fold(0.0, f64::max),
        l1_deviation: compensated_sum(p.weights().iter().map(|a| (uniform - a).abs())),
    }
}

/// `Π_i (1 + a_i t)`, the scalar product whose limit is `e^t`.
pub fn scalar_product(p: &Partition, t: f64) -> f64 {
    p.weights().iter().map(|a| 1.0 + a * t).product()
}
