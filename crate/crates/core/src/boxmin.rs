//! Short-budget projected L-BFGS over the relaxed box.
//!
//! Integer coordinates are treated as continuous here. The search direction
//! comes from the two-loop recursion; each trial step is projected back onto
//! the box and accepted by an Armijo backtracking test, so the objective never
//! increases.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rls::dot;
use crate::space::{MixedPoint, SearchSpace, SpaceError};
use crate::surrogate::{ReluSurrogate, SurrogateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxMinError {
    #[error("surrogate returned a non-finite value or gradient")]
    NonFinite,
    #[error("invalid box minimizer config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoxMinConfig {
    pub max_iters: usize,
    pub memory: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
}

impl Default for BoxMinConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            memory: 5,
            grad_tol: 1e-8,
            step_tol: 1e-12,
        }
    }
}

impl BoxMinConfig {
    pub fn validate(&self) -> Result<(), BoxMinError> {
        if self.max_iters == 0 {
            return Err(BoxMinError::InvalidConfig("max_iters must be at least 1"));
        }
        if self.memory == 0 {
            return Err(BoxMinError::InvalidConfig("memory must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    GradTol,
    StepTol,
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxMinOutcome {
    pub point: MixedPoint,
    pub value: f64,
    pub iterations: usize,
    pub stop: StopReason,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

pub fn minimize(
    model: &ReluSurrogate,
    space: &SearchSpace,
    start: &MixedPoint,
    cfg: &BoxMinConfig,
) -> Result<BoxMinOutcome, BoxMinError> {
    cfg.validate()?;
    let lower = space.lower();
    let upper = space.upper();
    let project = |x: &mut [f64]| {
        for ((v, l), u) in x.iter_mut().zip(&lower).zip(&upper) {
            *v = v.clamp(*l, *u);
        }
    };

    let mut x = space.clip(start)?.flatten();
    let (mut f, mut g) = value_grad(model, &x)?;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIters;

    while iterations < cfg.max_iters {
        if projected_grad_norm(&x, &g, &lower, &upper) < cfg.grad_tol {
            stop = StopReason::GradTol;
            break;
        }
        iterations += 1;

        let mut d = two_loop(&g, &pairs);
        // drop components that push against an active bound
        for (i, di) in d.iter_mut().enumerate() {
            if (x[i] <= lower[i] && *di < 0.0) || (x[i] >= upper[i] && *di > 0.0) {
                *di = 0.0;
            }
        }
        if !(dot(&g, &d) < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            for (i, di) in d.iter_mut().enumerate() {
                if (x[i] <= lower[i] && *di < 0.0) || (x[i] >= upper[i] && *di > 0.0) {
                    *di = 0.0;
                }
            }
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            if decrease < 0.0 {
                let (ft, gt) = value_grad(model, &trial)?;
                if ft <= f + ARMIJO_C1 * decrease {
                    accepted = Some((trial, step, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, step, ft, gt)) = accepted else {
            stop = StopReason::LineSearch;
            break;
        };

        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > 0.0 && sy.is_finite() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((step.clone(), y, 1.0 / sy));
        }
        let step_norm = dot(&step, &step).sqrt();
        x = trial;
        f = ft;
        g = gt;
        if step_norm < cfg.step_tol {
            stop = StopReason::StepTol;
            break;
        }
    }

    Ok(BoxMinOutcome {
        point: MixedPoint::unflatten(&x, space.d_c()),
        value: f,
        iterations,
        stop,
    })
}

fn value_grad(model: &ReluSurrogate, x: &[f64]) -> Result<(f64, Vec<f64>), BoxMinError> {
    let (f, g) = model.value_grad_flat(x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(BoxMinError::NonFinite);
    }
    Ok((f, g))
}

fn projected_grad_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((xi, gi), (l, u))| ((xi - gi).clamp(*l, *u) - xi).abs())
        .fold(0.0, f64::max)
}

/// `−H g` for the implicit inverse-Hessian approximation held in `pairs`.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
