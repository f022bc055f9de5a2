//! Synthetic mixed-variable benchmarks with additive evaluation noise.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{MixedPoint, SearchSpace, VariableSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("rosenbrock needs at least 2 dimensions, got {0}")]
    DimensionTooSmall(usize),
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("objective returned non-finite value {0}")]
    NonFinite(f64),
    #[error("objective failed: {0}")]
    Failed(String),
}

/// Anything the optimizer can query. Closures `FnMut(&MixedPoint) -> f64`
/// implement it directly.
pub trait Objective {
    fn evaluate(&mut self, point: &MixedPoint) -> Result<f64, ObjectiveError>;
}

impl<F> Objective for F
where
    F: FnMut(&MixedPoint) -> f64,
{
    fn evaluate(&mut self, point: &MixedPoint) -> Result<f64, ObjectiveError> {
        Ok(self(point))
    }
}

/// Ackley with a = 20, b = 0.2, c = 2π.
pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn rosenbrock(x: &[f64], scale: f64) -> Result<f64, ObjectiveError> {
    if x.len() < 2 {
        return Err(ObjectiveError::DimensionTooSmall(x.len()));
    }
    let s: f64 = x
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum();
    Ok(scale * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "lowercase")]
pub enum BaseFunction {
    Ackley,
    Rosenbrock { scale: f64 },
}

impl BaseFunction {
    pub fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        match *self {
            BaseFunction::Ackley => Ok(ackley(x)),
            BaseFunction::Rosenbrock { scale } => rosenbrock(x, scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseLaw {
    None,
    /// Additive noise uniform on `[0, upper]`.
    Uniform { upper: f64 },
}

pub const BENCHMARK_NOISE: NoiseLaw = NoiseLaw::Uniform { upper: 1e-6 };

/// A base function read in declaration order, plus noise and an evaluation counter.
#[derive(Debug, Clone)]
pub struct NoisyObjective {
    base: BaseFunction,
    space: SearchSpace,
    noise: NoiseLaw,
    rng: ChaCha8Rng,
    evaluations: usize,
}

impl NoisyObjective {
    pub fn new(base: BaseFunction, space: SearchSpace, noise: NoiseLaw, noise_seed: u64) -> Self {
        Self {
            base,
            space,
            noise,
            rng: ChaCha8Rng::seed_from_u64(noise_seed),
            evaluations: 0,
        }
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn base(&self) -> BaseFunction {
        self.base
    }

    /// Noise-free value at `p`.
    pub fn exact(&self, p: &MixedPoint) -> Result<f64, ObjectiveError> {
        self.base.value(&self.space.to_declared(p))
    }
}

impl Objective for NoisyObjective {
    fn evaluate(&mut self, point: &MixedPoint) -> Result<f64, ObjectiveError> {
        self.evaluations += 1;
        let v = self.exact(point)?;
        let eps = match self.noise {
            NoiseLaw::None => 0.0,
            NoiseLaw::Uniform { upper } => self.rng.random_range(0.0..=upper),
        };
        Ok(v + eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Ackley53,
    Rosenbrock10,
    Rosenbrock238,
}

impl Benchmark {
    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Ackley53 => "ackley53",
            Benchmark::Rosenbrock10 => "rosenbrock10",
            Benchmark::Rosenbrock238 => "rosenbrock238",
        }
    }

    /// Integer variables are declared first, then continuous ones.
    pub fn space(&self) -> SearchSpace {
        let (ints, conts) = match self {
            Benchmark::Ackley53 => (vec![VariableSpec::integer(0, 1); 50], vec![
                VariableSpec::continuous(-1.0, 1.0);
                3
            ]),
            Benchmark::Rosenbrock10 => (vec![VariableSpec::integer(-2, 2); 3], vec![
                VariableSpec::continuous(-2.0, 2.0);
                7
            ]),
            Benchmark::Rosenbrock238 => (vec![VariableSpec::integer(-2, 2); 119], vec![
                VariableSpec::continuous(-2.0, 2.0);
                119
            ]),
        };
        SearchSpace::new(ints.into_iter().chain(conts).collect())
            .expect("benchmark spaces are valid")
    }

    pub fn base(&self) -> BaseFunction {
        match self {
            Benchmark::Ackley53 => BaseFunction::Ackley,
            Benchmark::Rosenbrock10 => BaseFunction::Rosenbrock { scale: 1.0 / 300.0 },
            Benchmark::Rosenbrock238 => BaseFunction::Rosenbrock { scale: 1.0 / 50000.0 },
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ackley53" => Ok(Benchmark::Ackley53),
            "rosenbrock10" => Ok(Benchmark::Rosenbrock10),
            "rosenbrock238" => Ok(Benchmark::Rosenbrock238),
            _ => Err(ObjectiveError::UnknownBenchmark(s.to_string())),
        }
    }
}

/// Space and noisy objective for a named benchmark.
pub fn make_benchmark(
    name: &str,
    noise_seed: u64,
) -> Result<(SearchSpace, NoisyObjective), ObjectiveError> {
    let b: Benchmark = name.parse()?;
    let space = b.space();
    let obj = NoisyObjective::new(b.base(), space.clone(), BENCHMARK_NOISE, noise_seed);
    Ok((space, obj))
}
