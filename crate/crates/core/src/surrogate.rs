//! Piecewise-linear ReLU surrogate over a mixed search space.
//!
//! The model is `g(x) = Σ_k c_k · max(0, z_k(x))` with affine `z_k`. Three
//! kinds of `z_k` are used:
//!
//! * one constant function `z ≡ 1`,
//! * *integer* functions depending on one integer coordinate or on the
//!   difference of two adjacent integer coordinates, with integer weights and
//!   bias,
//! * *mixed* functions whose weight vector is one of `d_c` shared random
//!   directions and whose bias is drawn so that the zero hyperplane cuts the
//!   box.
//!
//! Because at most `d_c` mixed functions can be linearly independent, every
//! vertex of the model's linear regions (and therefore every strict local
//! minimum) has integral integer coordinates.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rls::{dot, RlsError, RlsState, DEFAULT_LAMBDA};
use crate::space::{MixedPoint, SearchSpace, SpaceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("surrogate needs at least one integer variable")]
    NoIntegerVariables,
    #[error("mixed basis requested but the direction set is empty")]
    EmptyDirectionSet,
    #[error("vector has length {got}, expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("vertex enumeration would visit {subsets} subsets (limit {limit})")]
    TooLarge { subsets: u128, limit: u128 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Rls(#[from] RlsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZKind {
    Constant,
    Integer,
    Mixed,
}

/// Affine pre-activation `ωᵀ[xc; xd] + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZFunction {
    pub omega: Vec<f64>,
    pub bias: f64,
    pub kind: ZKind,
}

impl ZFunction {
    pub fn constant(dim: usize) -> Self {
        Self {
            omega: vec![0.0; dim],
            bias: 1.0,
            kind: ZKind::Constant,
        }
    }

    /// Value at a flattened `[xc; xd]` point.
    pub fn value(&self, flat: &[f64]) -> f64 {
        dot(&self.omega, flat) + self.bias
    }
}

/// The `d_c` shared directions used by all mixed functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub directions: Vec<Vec<f64>>,
}

/// Builds the constant function followed by all integer z-functions, in the
/// order: single variables (by variable, then offset, then sign), then
/// adjacent pairs (by pair, then offset, then sign).
pub fn build_integer_basis(space: &SearchSpace) -> Result<Vec<ZFunction>, SurrogateError> {
    if space.d_d() == 0 {
        return Err(SurrogateError::NoIntegerVariables);
    }
    let d_c = space.d_c();
    let dim = space.dim();
    let ints: Vec<_> = space.integers().copied().collect();
    let mut out = vec![ZFunction::constant(dim)];

    for (i, v) in ints.iter().enumerate() {
        for alpha in v.lower as i64..=v.upper as i64 {
            for sign in [1.0, -1.0] {
                let mut omega = vec![0.0; dim];
                omega[d_c + i] = sign;
                out.push(ZFunction {
                    omega,
                    bias: -sign * alpha as f64,
                    kind: ZKind::Integer,
                });
            }
        }
    }
    for i in 1..ints.len() {
        let (prev, cur) = (&ints[i - 1], &ints[i]);
        let lo = (cur.lower - prev.upper) as i64;
        let hi = (cur.upper - prev.lower) as i64;
        for alpha in lo..=hi {
            for sign in [1.0, -1.0] {
                let mut omega = vec![0.0; dim];
                omega[d_c + i] = sign;
                omega[d_c + i - 1] = -sign;
                out.push(ZFunction {
                    omega,
                    bias: -sign * alpha as f64,
                    kind: ZKind::Integer,
                });
            }
        }
    }
    Ok(out)
}

/// Number of integer z-functions (excluding the constant) for a space.
pub fn integer_basis_count(space: &SearchSpace) -> usize {
    let m: Vec<usize> = space.integers().map(|v| v.cardinality()).collect();
    let singles: usize = m.iter().sum();
    let pairs: usize = m.windows(2).map(|w| w[0] + w[1] - 1).sum();
    2 * singles + 2 * pairs
}

pub fn build_direction_set<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> DirectionSet {
    let dim = space.dim();
    let bound = 1.0 / dim as f64;
    let directions = (0..space.d_c())
        .map(|_| (0..dim).map(|_| rng.random_range(-bound..=bound)).collect())
        .collect();
    DirectionSet { directions }
}

/// Box corners minimising (`q1`) and maximising (`q2`) `ωᵀx`.
pub fn corner_points(
    space: &SearchSpace,
    omega: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), SurrogateError> {
    if omega.len() != space.dim() {
        return Err(SurrogateError::DimensionMismatch {
            got: omega.len(),
            want: space.dim(),
        });
    }
    let (q1, q2) = space
        .layout()
        .zip(omega)
        .map(|(v, &w)| {
            if w >= 0.0 {
                (v.lower, v.upper)
            } else {
                (v.upper, v.lower)
            }
        })
        .unzip();
    Ok((q1, q2))
}

pub fn build_mixed_basis<R: Rng + ?Sized>(
    space: &SearchSpace,
    dirs: &DirectionSet,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ZFunction>, SurrogateError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if dirs.directions.is_empty() {
        return Err(SurrogateError::EmptyDirectionSet);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let omega = dirs.directions[rng.random_range(0..dirs.directions.len())].clone();
        let (q1, q2) = corner_points(space, &omega)?;
        let beta1 = dot(&omega, &q1);
        let beta2 = dot(&omega, &q2);
        let bias = rng.random_range(-beta2..=-beta1);
        out.push(ZFunction {
            omega,
            bias,
            kind: ZKind::Mixed,
        });
    }
    Ok(out)
}

/// Debug/fixture snapshot of a surrogate: basis parameters and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSnapshot {
    pub d_c: usize,
    pub basis: Vec<ZFunction>,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReluSurrogate {
    d_c: usize,
    basis: Vec<ZFunction>,
    rls: RlsState,
}

impl ReluSurrogate {
    /// Constant + integer + mixed basis with `⌈d_c · C_int / d_d⌉` mixed
    /// functions. Coefficients start at 1 for the constant and integer units
    /// and at 0 for the mixed units.
    pub fn build<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Result<Self, SurrogateError> {
        Self::build_with_lambda(space, rng, DEFAULT_LAMBDA)
    }

    pub fn build_with_lambda<R: Rng + ?Sized>(
        space: &SearchSpace,
        rng: &mut R,
        lambda: f64,
    ) -> Result<Self, SurrogateError> {
        let mut basis = build_integer_basis(space)?;
        let c_int = basis.len() - 1;
        let d_c = space.d_c();
        let d_d = space.d_d();
        let mixed_count = (d_c * c_int).div_ceil(d_d);
        if d_c > 0 {
            let dirs = build_direction_set(space, rng);
            basis.extend(build_mixed_basis(space, &dirs, mixed_count, rng)?);
        }
        let coeffs = basis
            .iter()
            .map(|z| if z.kind == ZKind::Mixed { 0.0 } else { 1.0 })
            .collect();
        Ok(Self {
            d_c,
            rls: RlsState::new(coeffs, lambda)?,
            basis,
        })
    }

    /// A surrogate with explicit basis and coefficients.
    pub fn from_parts(
        d_c: usize,
        basis: Vec<ZFunction>,
        coeffs: Vec<f64>,
        lambda: f64,
    ) -> Result<Self, SurrogateError> {
        if coeffs.len() != basis.len() {
            return Err(SurrogateError::DimensionMismatch {
                got: coeffs.len(),
                want: basis.len(),
            });
        }
        if let Some(z) = basis.iter().find(|z| z.omega.len() < d_c) {
            return Err(SurrogateError::DimensionMismatch {
                got: z.omega.len(),
                want: d_c,
            });
        }
        Ok(Self {
            d_c,
            rls: RlsState::new(coeffs, lambda)?,
            basis,
        })
    }

    pub fn from_snapshot(snap: SurrogateSnapshot) -> Result<Self, SurrogateError> {
        Self::from_parts(snap.d_c, snap.basis, snap.coeffs, DEFAULT_LAMBDA)
    }

    pub fn snapshot(&self) -> SurrogateSnapshot {
        SurrogateSnapshot {
            d_c: self.d_c,
            basis: self.basis.clone(),
            coeffs: self.coeffs().to_vec(),
        }
    }

    pub fn basis(&self) -> &[ZFunction] {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        self.rls.coeffs()
    }

    pub fn rls(&self) -> &RlsState {
        &self.rls
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    /// Total coordinate count `d_c + d_d`.
    pub fn dim(&self) -> usize {
        self.basis.first().map_or(self.d_c, |z| z.omega.len())
    }

    fn check_flat(&self, flat: &[f64]) -> Result<(), SurrogateError> {
        if flat.len() != self.dim() {
            return Err(SurrogateError::DimensionMismatch {
                got: flat.len(),
                want: self.dim(),
            });
        }
        Ok(())
    }

    /// Basis activations `φ_k = max(0, z_k)` at a flattened point.
    pub fn features_flat(&self, flat: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        self.check_flat(flat)?;
        Ok(self.basis.iter().map(|z| z.value(flat).max(0.0)).collect())
    }

    pub fn features(&self, p: &MixedPoint) -> Result<Vec<f64>, SurrogateError> {
        self.features_flat(&p.flatten())
    }

    pub fn eval_flat(&self, flat: &[f64]) -> Result<f64, SurrogateError> {
        Ok(dot(&self.features_flat(flat)?, self.coeffs()))
    }

    pub fn eval(&self, p: &MixedPoint) -> Result<f64, SurrogateError> {
        self.eval_flat(&p.flatten())
    }

    /// Value and (sub)gradient at a flattened point. A unit sitting exactly on
    /// its kink contributes half its weight.
    pub fn value_grad_flat(&self, flat: &[f64]) -> Result<(f64, Vec<f64>), SurrogateError> {
        self.check_flat(flat)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; flat.len()];
        for (z, &c) in self.basis.iter().zip(self.coeffs()) {
            let zv = z.value(flat);
            let slope = if zv > 0.0 {
                value += c * zv;
                1.0
            } else if zv < 0.0 {
                continue;
            } else {
                0.5
            };
            let w = c * slope;
            if w != 0.0 {
                for (g, o) in grad.iter_mut().zip(&z.omega) {
                    *g += w * o;
                }
            }
        }
        Ok((value, grad))
    }

    pub fn grad(&self, p: &MixedPoint) -> Result<Vec<f64>, SurrogateError> {
        Ok(self.value_grad_flat(&p.flatten())?.1)
    }

    /// Fits one observation into the coefficients.
    pub fn update(&mut self, p: &MixedPoint, y: f64) -> Result<(), SurrogateError> {
        let phi = self.features(p)?;
        self.rls.update(&phi, y)?;
        Ok(())
    }

    /// Solves `z_k = 0` for every linearly independent subset of `dim`
    /// non-constant basis functions.
    pub fn vertex_enumerate(&self, space: &SearchSpace) -> Result<Vec<Vertex>, SurrogateError> {
        let n = self.dim();
        let candidates: Vec<usize> = (0..self.basis.len())
            .filter(|&k| self.basis[k].kind != ZKind::Constant)
            .collect();
        let subsets = binomial(candidates.len() as u128, n as u128);
        if subsets > VERTEX_SUBSET_LIMIT {
            return Err(SurrogateError::TooLarge {
                subsets,
                limit: VERTEX_SUBSET_LIMIT,
            });
        }
        let mut out = Vec::new();
        if n == 0 || candidates.len() < n {
            return Ok(out);
        }
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let subset: Vec<usize> = idx.iter().map(|&i| candidates[i]).collect();
            let rows: Vec<&ZFunction> = subset.iter().map(|&k| &self.basis[k]).collect();
            if let Some(flat) = solve_zeros(&rows) {
                let point = MixedPoint::unflatten(&flat, self.d_c);
                out.push(Vertex {
                    in_bounds: space.contains(&point),
                    point,
                    subset,
                });
            }
            if !next_combination(&mut idx, candidates.len()) {
                break;
            }
        }
        Ok(out)
    }
}

const VERTEX_SUBSET_LIMIT: u128 = 2_000_000;

/// Intersection point of `dim` z-function zero sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: MixedPoint,
    /// Basis indices of the defining functions.
    pub subset: Vec<usize>,
    pub in_bounds: bool,
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting on `ωᵀx = −b`. Returns `None`
/// when the weight vectors are linearly dependent.
fn solve_zeros(rows: &[&ZFunction]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|z| {
            let mut r = z.omega.clone();
            r.push(-z.bias);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let tol = 1e-12 * scale;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= tol {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    Some(x)
}
