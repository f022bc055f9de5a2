//! Optimizer main loop, random-search baseline and the ask/tell session.
//!
//! An MVRSM run first feeds `init_samples` uniform draws into the surrogate,
//! then repeats: evaluate the current point, fit it by RLS, minimise the
//! surrogate over the relaxed box, round the integer coordinates and perturb
//! the result to get the next point.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxmin::{self, BoxMinConfig, BoxMinError};
use crate::explore::{self, ExploreError};
use crate::objectives::{Objective, ObjectiveError};
use crate::rls::DEFAULT_LAMBDA;
use crate::space::{MixedPoint, SearchSpace, SpaceError};
use crate::surrogate::{ReluSurrogate, SurrogateError};
use crate::trace::RunTrace;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("objective failed at evaluation {}: {source}", partial.len() + 1)]
    ObjectiveFailure {
        source: ObjectiveError,
        /// Records gathered before the failure.
        partial: Box<RunTrace>,
    },
    #[error("ask/tell protocol violation: {0}")]
    ProtocolViolation(&'static str),
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    BoxMin(#[from] BoxMinError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

/// Where the inner surrogate minimization starts.
///
/// Starting from the last evaluated point lets a badly extrapolating model
/// drag the search into far corners of the box; the incumbent is steadier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerStart {
    LastEvaluated,
    #[default]
    BestSoFar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub budget: usize,
    pub init_samples: usize,
    pub rng_seed: u64,
    pub boxmin: BoxMinConfig,
    pub lambda: f64,
    pub inner_start: InnerStart,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            budget: 124,
            init_samples: 24,
            rng_seed: 0,
            boxmin: BoxMinConfig::default(),
            lambda: DEFAULT_LAMBDA,
            inner_start: InnerStart::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn new(budget: usize, init_samples: usize, rng_seed: u64) -> Self {
        Self {
            budget,
            init_samples,
            rng_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if self.init_samples == 0 {
            return Err(DriverError::InvalidConfig("init_samples must be at least 1".into()));
        }
        if self.budget < self.init_samples {
            return Err(DriverError::InvalidConfig(format!(
                "budget {} is smaller than init_samples {}",
                self.budget, self.init_samples
            )));
        }
        self.boxmin
            .validate()
            .map_err(|e| DriverError::InvalidConfig(e.to_string()))
    }
}

/// State shared by [`run_mvrsm`] and [`MvrsmSession`].
///
/// Initial samples come from their own stream, seeded exactly like
/// [`run_random_search`], so both algorithms see the same initial design for
/// a given seed. Surrogate construction and exploration use a second stream.
#[derive(Debug, Clone)]
struct Engine {
    space: SearchSpace,
    cfg: OptimizerConfig,
    init_rng: ChaCha8Rng,
    rng: ChaCha8Rng,
    model: ReluSurrogate,
    best: Option<(MixedPoint, f64)>,
}

impl Engine {
    fn new(space: &SearchSpace, cfg: &OptimizerConfig) -> Result<Self, DriverError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(1);
        let model = ReluSurrogate::build_with_lambda(space, &mut rng, cfg.lambda)?;
        Ok(Self {
            space: space.clone(),
            cfg: cfg.clone(),
            init_rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            rng,
            model,
            best: None,
        })
    }

    fn sample(&mut self) -> MixedPoint {
        self.space.uniform_sample(&mut self.init_rng)
    }

    fn learn(&mut self, p: &MixedPoint, y: f64) -> Result<(), DriverError> {
        self.model.update(p, y)?;
        if self.best.as_ref().is_none_or(|(_, b)| y < *b) {
            self.best = Some((p.clone(), y));
        }
        Ok(())
    }

    fn best_point(&self) -> MixedPoint {
        self.best.as_ref().expect("at least one observation").0.clone()
    }

    /// Minimise the surrogate, round, then explore around the result.
    fn propose(&mut self, evaluated: &MixedPoint) -> Result<MixedPoint, DriverError> {
        let start = match self.cfg.inner_start {
            InnerStart::LastEvaluated => evaluated.clone(),
            InnerStart::BestSoFar => self.best_point(),
        };
        let out = boxmin::minimize(&self.model, &self.space, &start, &self.cfg.boxmin)?;
        let rounded = self.space.project(&out.point)?;
        let xd = explore::perturb_integer(&self.space, &rounded.xd, &mut self.rng)?;
        let xc = explore::perturb_continuous(&self.space, &rounded.xc, &mut self.rng)?;
        Ok(MixedPoint { xc, xd })
    }
}

fn observe<O: Objective + ?Sized>(
    objective: &mut O,
    p: &MixedPoint,
    trace: &RunTrace,
) -> Result<f64, DriverError> {
    let failure = |source| DriverError::ObjectiveFailure {
        source,
        partial: Box::new(trace.clone()),
    };
    match objective.evaluate(p) {
        Ok(y) if y.is_finite() => Ok(y),
        Ok(y) => Err(failure(ObjectiveError::NonFinite(y))),
        Err(e) => Err(failure(e)),
    }
}

/// Runs MVRSM until `cfg.budget` evaluations have been made.
pub fn run_mvrsm<O: Objective + ?Sized>(
    objective: &mut O,
    space: &SearchSpace,
    cfg: &OptimizerConfig,
) -> Result<RunTrace, DriverError> {
    let mut engine = Engine::new(space, cfg)?;
    let mut trace = RunTrace::new();
    let mut current: Option<MixedPoint> = None;

    for i in 0..cfg.budget {
        let started = Instant::now();
        let point = match current.take() {
            Some(p) => p,
            None => engine.sample(),
        };
        let mut step = started.elapsed().as_secs_f64();

        let y = observe(objective, &point, &trace)?;

        let started = Instant::now();
        engine.learn(&point, y)?;
        let done = i + 1;
        if done == cfg.init_samples {
            current = Some(engine.best_point());
        } else if done > cfg.init_samples && done < cfg.budget {
            current = Some(engine.propose(&point)?);
        }
        step += started.elapsed().as_secs_f64();
        trace.push(point, y, step);
    }
    Ok(trace)
}

/// `cfg.budget` uniform samples.
pub fn run_random_search<O: Objective + ?Sized>(
    objective: &mut O,
    space: &SearchSpace,
    cfg: &OptimizerConfig,
) -> Result<RunTrace, DriverError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut trace = RunTrace::new();
    for _ in 0..cfg.budget {
        let started = Instant::now();
        let point = space.uniform_sample(&mut rng);
        let step = started.elapsed().as_secs_f64();
        let y = observe(objective, &point, &trace)?;
        trace.push(point, y, step);
    }
    Ok(trace)
}

/// Control-inverted MVRSM: the caller evaluates the objective.
///
/// `ask` and `tell` must alternate. With the same config the sequence of
/// asked points is identical to the points evaluated by [`run_mvrsm`].
#[derive(Debug, Clone)]
pub struct MvrsmSession {
    engine: Engine,
    pending: Option<MixedPoint>,
    next: Option<MixedPoint>,
    told: usize,
}

impl MvrsmSession {
    pub fn new(space: &SearchSpace, cfg: &OptimizerConfig) -> Result<Self, DriverError> {
        Ok(Self {
            engine: Engine::new(space, cfg)?,
            pending: None,
            next: None,
            told: 0,
        })
    }

    pub fn ask(&mut self) -> Result<MixedPoint, DriverError> {
        if self.pending.is_some() {
            return Err(DriverError::ProtocolViolation("ask called twice without tell"));
        }
        if self.told >= self.engine.cfg.budget {
            return Err(DriverError::BudgetExhausted);
        }
        let p = match self.next.take() {
            Some(p) => p,
            None => self.engine.sample(),
        };
        self.pending = Some(p.clone());
        Ok(p)
    }

    pub fn tell(&mut self, point: &MixedPoint, y: f64) -> Result<(), DriverError> {
        if self.pending.is_none() {
            return Err(DriverError::ProtocolViolation("tell called without a pending ask"));
        }
        self.engine.space.check_dims(point)?;
        if !y.is_finite() {
            return Err(DriverError::ObjectiveFailure {
                source: ObjectiveError::NonFinite(y),
                partial: Box::default(),
            });
        }
        self.engine.learn(point, y)?;
        self.pending = None;
        self.told += 1;
        let init = self.engine.cfg.init_samples;
        if self.told == init {
            self.next = Some(self.engine.best_point());
        } else if self.told > init && self.told < self.engine.cfg.budget {
            self.next = Some(self.engine.propose(point)?);
        }
        Ok(())
    }

    pub fn evaluations(&self) -> usize {
        self.told
    }

    pub fn best(&self) -> Option<(&MixedPoint, f64)> {
        self.engine.best.as_ref().map(|(p, y)| (p, *y))
    }

    pub fn model(&self) -> &ReluSurrogate {
        &self.engine.model
    }
}
