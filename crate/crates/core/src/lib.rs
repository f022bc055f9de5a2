//! Mixed-variable ReLU-based surrogate modelling (MVRSM).
//!
//! A surrogate-based optimizer for expensive, noisy black-box objectives over
//! mixed continuous/integer domains. The surrogate is a linear combination of
//! ReLU units whose pre-activations are chosen so that every strict local
//! minimum of the model has integral integer coordinates; it can therefore be
//! minimised with a continuous method and no integer programming.
//!
//! ```
//! use mvrsm::{run_mvrsm, MixedPoint, OptimizerConfig, SearchSpace, VariableSpec};
//!
//! let space = SearchSpace::new(vec![
//!     VariableSpec::integer(-2, 2),
//!     VariableSpec::continuous(-1.0, 1.0),
//! ])
//! .unwrap();
//! let mut f = |p: &MixedPoint| (p.xd[0] - 1.0).powi(2) + p.xc[0].powi(2);
//! let trace = run_mvrsm(&mut f, &space, &OptimizerConfig::new(40, 10, 7)).unwrap();
//! assert_eq!(trace.len(), 40);
//! ```

pub mod boxmin;
pub mod driver;
pub mod experiment;
pub mod explore;
pub mod objectives;
pub mod rls;
pub mod space;
pub mod surrogate;
pub mod trace;

pub use boxmin::{BoxMinConfig, BoxMinOutcome};
pub use driver::{run_mvrsm, run_random_search, DriverError, InnerStart, MvrsmSession, OptimizerConfig};
pub use objectives::{make_benchmark, Benchmark, NoisyObjective, Objective};
pub use rls::RlsState;
pub use space::{MixedPoint, SearchSpace, VarKind, VariableSpec};
pub use surrogate::{ReluSurrogate, ZFunction, ZKind};
pub use trace::{RunTrace, TraceRecord};
