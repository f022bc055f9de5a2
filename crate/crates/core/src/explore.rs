//! Random perturbation of the surrogate minimizer before the next evaluation.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::space::SearchSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("integer coordinate {0} is not integral")]
    NonIntegralInput(usize),
    #[error("integer coordinate {0} is out of bounds")]
    OutOfBounds(usize),
    #[error("expected {want} coordinates, got {got}")]
    DimensionMismatch { got: usize, want: usize },
}

// r1 doubles every pass, so only r1 < 2^-64 could get this far
const MAX_STEPS: usize = 64;

/// Moves one integer coordinate. Each pass of the loop steps by one unit
/// (upward at the lower bound, downward at the upper bound, otherwise in the
/// direction chosen by `r2`) and doubles `r1`; the loop exits once `r1 >= p`.
/// Returns the new value and the number of steps taken.
pub fn step_integer(x: f64, lower: f64, upper: f64, r1: f64, r2: f64, p: f64) -> (f64, usize) {
    let mut x = x;
    let mut r1 = r1;
    let mut steps = 0;
    if lower == upper {
        return (x, 0);
    }
    while r1 < p && steps < MAX_STEPS {
        if x == lower {
            x += 1.0;
        } else if x == upper {
            x -= 1.0;
        } else if r2 < 0.5 {
            x += 1.0;
        } else {
            x -= 1.0;
        }
        r1 *= 2.0;
        steps += 1;
    }
    (x, steps)
}

pub fn perturb_integer<R: Rng + ?Sized>(
    space: &SearchSpace,
    xd: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, ExploreError> {
    if xd.len() != space.d_d() {
        return Err(ExploreError::DimensionMismatch {
            got: xd.len(),
            want: space.d_d(),
        });
    }
    let p = 1.0 / space.dim() as f64;
    space
        .integers()
        .zip(xd)
        .enumerate()
        .map(|(i, (v, &x))| {
            if x.fract() != 0.0 || !x.is_finite() {
                return Err(ExploreError::NonIntegralInput(i));
            }
            if x < v.lower || x > v.upper {
                return Err(ExploreError::OutOfBounds(i));
            }
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            Ok(step_integer(x, v.lower, v.upper, r1, r2, p).0)
        })
        .collect()
}

/// Gaussian step with per-coordinate standard deviation
/// `0.1 · (u − l) / √(d_c + d_d)`, clipped back into the box.
pub fn perturb_continuous<R: Rng + ?Sized>(
    space: &SearchSpace,
    xc: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, ExploreError> {
    if xc.len() != space.d_c() {
        return Err(ExploreError::DimensionMismatch {
            got: xc.len(),
            want: space.d_c(),
        });
    }
    let scale = 0.1 / (space.dim() as f64).sqrt();
    Ok(space
        .continuous()
        .zip(xc)
        .map(|(v, &x)| {
            let sigma = scale * (v.upper - v.lower);
            let n: f64 = rng.sample(StandardNormal);
            (x + sigma * n).clamp(v.lower, v.upper)
        })
        .collect())
}
