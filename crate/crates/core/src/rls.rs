//! Recursive least squares with a ridge prior.
//!
//! Starting from prior coefficients `c0` and covariance `P = I / lambda`, each
//! update absorbs one `(phi, y)` observation. After `n` updates the
//! coefficients equal the batch ridge solution
//! `c0 + (ΦᵀΦ + λI)⁻¹ Φᵀ (y − Φ c0)`, at `O(M²)` cost per observation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LAMBDA: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlsError {
    #[error("regularisation must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("feature vector has length {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("non-finite value in RLS input or state")]
    NonFinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RlsState {
    coeffs: Vec<f64>,
    // row-major M x M
    cov: Vec<f64>,
    lambda: f64,
}

impl RlsState {
    pub fn new(c0: Vec<f64>, lambda: f64) -> Result<Self, RlsError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(RlsError::NonPositiveLambda(lambda));
        }
        let m = c0.len();
        let mut cov = vec![0.0; m * m];
        for i in 0..m {
            cov[i * m + i] = 1.0 / lambda;
        }
        Ok(Self {
            coeffs: c0,
            cov,
            lambda,
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.len() + j]
    }

    /// One unit-forgetting RLS step:
    /// `k = Pφ / (1 + φᵀPφ)`, `c += k (y − φᵀc)`, `P −= k φᵀP`, then `P` is
    /// re-symmetrised.
    pub fn update(&mut self, phi: &[f64], y: f64) -> Result<(), RlsError> {
        let m = self.len();
        if phi.len() != m {
            return Err(RlsError::DimensionMismatch {
                got: phi.len(),
                want: m,
            });
        }
        if !y.is_finite() || phi.iter().any(|v| !v.is_finite()) {
            return Err(RlsError::NonFinite);
        }

        // u = Pφ; P is symmetric so φᵀP = uᵀ
        let mut u = vec![0.0; m];
        for (i, ui) in u.iter_mut().enumerate() {
            let row = &self.cov[i * m..(i + 1) * m];
            *ui = row.iter().zip(phi).map(|(p, f)| p * f).sum();
        }
        let denom = 1.0 + dot(phi, &u);
        let residual = y - dot(phi, &self.coeffs);
        if !denom.is_finite() || !residual.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(RlsError::NonFinite);
        }
        let gain: Vec<f64> = u.iter().map(|v| v / denom).collect();

        for (c, k) in self.coeffs.iter_mut().zip(&gain) {
            *c += k * residual;
        }
        for i in 0..m {
            for j in i..m {
                let a = self.cov[i * m + j] - gain[i] * u[j];
                let b = self.cov[j * m + i] - gain[j] * u[i];
                let s = 0.5 * (a + b);
                self.cov[i * m + j] = s;
                self.cov[j * m + i] = s;
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_covariance() {
        let s = RlsState::new(vec![1.0, 0.0], 1e-8).unwrap();
        assert_eq!(s.coeffs(), &[1.0, 0.0]);
        assert_eq!(s.covariance(0, 0), 1e8);
        assert_eq!(s.covariance(1, 1), 1e8);
        assert_eq!(s.covariance(0, 1), 0.0);
        assert_eq!(
            RlsState::new(vec![1.0], 0.0).unwrap_err(),
            RlsError::NonPositiveLambda(0.0)
        );
        assert!(RlsState::new(vec![1.0], -1.0).is_err());
    }

    #[test]
    fn one_step_closed_form() {
        let mut s = RlsState::new(vec![0.0], 1e-8).unwrap();
        s.update(&[1.0], 2.0).unwrap();
        // c = 1e8 * 2 / (1 + 1e8) = 2 / (1 + 1e-8)
        assert!((s.coeffs()[0] - 2.0 / (1.0 + 1e-8)).abs() < 1e-12);
        assert!((s.coeffs()[0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn zero_features_change_nothing() {
        let mut s = RlsState::new(vec![0.5, -1.0, 2.0], 1e-3).unwrap();
        s.update(&[1.0, 2.0, 0.5], 3.0).unwrap();
        let before = s.clone();
        s.update(&[0.0; 3], 10.0).unwrap();
        assert_eq!(s.coeffs(), before.coeffs());
        assert_eq!(s.cov, before.cov);
    }

    #[test]
    fn errors() {
        let mut s = RlsState::new(vec![0.0; 2], 1e-8).unwrap();
        assert_eq!(
            s.update(&[1.0], 1.0),
            Err(RlsError::DimensionMismatch { got: 1, want: 2 })
        );
        assert_eq!(s.update(&[1.0, f64::NAN], 1.0), Err(RlsError::NonFinite));
        assert_eq!(s.update(&[1.0, 0.0], f64::INFINITY), Err(RlsError::NonFinite));
    }

    #[test]
    fn stays_symmetric() {
        let mut s = RlsState::new(vec![0.0; 4], 1e-8).unwrap();
        let rows = [
            [1.0, 0.3, -0.2, 0.0],
            [0.1, 1.5, 0.7, 2.0],
            [0.0, 0.0, 1.0, -1.0],
            [0.4, 0.2, 0.1, 0.9],
            [1.1, -0.6, 0.6, 0.3],
        ];
        for (k, r) in rows.iter().enumerate() {
            s.update(r, k as f64).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(s.covariance(i, j), s.covariance(j, i));
                }
            }
        }
    }
}
