//! Mixed continuous/integer search spaces.
//!
//! A [`SearchSpace`] is an ordered list of bounded variables. Points are held
//! as a [`MixedPoint`] whose layout is fixed: continuous coordinates first (in
//! declaration order), then integer coordinates (in declaration order). Every
//! other module works in that layout; [`SearchSpace::to_declared`] recovers
//! the declaration order for objectives that read coordinates by position.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("search space has no variables")]
    EmptySpace,
    #[error("variable {0} has lower bound above upper bound")]
    InvertedBounds(usize),
    #[error("integer variable {0} has a non-integer or non-finite bound")]
    NonIntegerBound(usize),
    #[error("search space needs at least one integer variable")]
    NoIntegerVariables,
    #[error("point dimensions ({got_c}, {got_d}) do not match space ({want_c}, {want_d})")]
    DimensionMismatch {
        got_c: usize,
        got_d: usize,
        want_c: usize,
        want_d: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl VariableSpec {
    pub fn continuous(lower: f64, upper: f64) -> Self {
        Self {
            kind: VarKind::Continuous,
            lower,
            upper,
        }
    }

    pub fn integer(lower: i64, upper: i64) -> Self {
        Self {
            kind: VarKind::Integer,
            lower: lower as f64,
            upper: upper as f64,
        }
    }

    /// Number of representable values of an integer variable.
    pub fn cardinality(&self) -> usize {
        (self.upper - self.lower) as usize + 1
    }
}

/// A point of a mixed space. Integer coordinates are stored as reals so that
/// relaxed (fractional) iterates share the same representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint {
    pub xc: Vec<f64>,
    pub xd: Vec<f64>,
}

impl MixedPoint {
    pub fn new(xc: Vec<f64>, xd: Vec<f64>) -> Self {
        Self { xc, xd }
    }

    /// Concatenation `[xc; xd]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.xc.len() + self.xd.len());
        v.extend_from_slice(&self.xc);
        v.extend_from_slice(&self.xd);
        v
    }

    /// Inverse of [`MixedPoint::flatten`] given the number of continuous coordinates.
    pub fn unflatten(flat: &[f64], d_c: usize) -> Self {
        Self {
            xc: flat[..d_c].to_vec(),
            xd: flat[d_c..].to_vec(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.xd.iter().all(|v| v.fract() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VariableSpec>", into = "Vec<VariableSpec>")]
pub struct SearchSpace {
    variables: Vec<VariableSpec>,
    // declaration positions of the continuous and integer variables
    cont_pos: Vec<usize>,
    int_pos: Vec<usize>,
}

impl SearchSpace {
    /// Builds and validates a space.
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self, SpaceError> {
        validate(&variables)?;
        let cont_pos = positions(&variables, VarKind::Continuous);
        let int_pos = positions(&variables, VarKind::Integer);
        Ok(Self {
            variables,
            cont_pos,
            int_pos,
        })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn d_c(&self) -> usize {
        self.cont_pos.len()
    }

    pub fn d_d(&self) -> usize {
        self.int_pos.len()
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn continuous(&self) -> impl Iterator<Item = &VariableSpec> + '_ {
        self.cont_pos.iter().map(|&i| &self.variables[i])
    }

    pub fn integers(&self) -> impl Iterator<Item = &VariableSpec> + '_ {
        self.int_pos.iter().map(|&i| &self.variables[i])
    }

    /// Variable specs in `[xc; xd]` layout order.
    pub fn layout(&self) -> impl Iterator<Item = &VariableSpec> + '_ {
        self.continuous().chain(self.integers())
    }

    pub fn lower(&self) -> Vec<f64> {
        self.layout().map(|v| v.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.layout().map(|v| v.upper).collect()
    }

    pub fn check_dims(&self, p: &MixedPoint) -> Result<(), SpaceError> {
        if p.xc.len() != self.d_c() || p.xd.len() != self.d_d() {
            return Err(SpaceError::DimensionMismatch {
                got_c: p.xc.len(),
                got_d: p.xd.len(),
                want_c: self.d_c(),
                want_d: self.d_d(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: &MixedPoint) -> bool {
        self.check_dims(p).is_ok()
            && self
                .layout()
                .zip(p.xc.iter().chain(&p.xd))
                .all(|(v, &x)| v.lower <= x && x <= v.upper)
    }

    /// In bounds with integral integer coordinates.
    pub fn is_feasible(&self, p: &MixedPoint) -> bool {
        self.contains(p) && p.is_integral()
    }

    /// Clips every coordinate into its bounds and rounds integer coordinates
    /// half-away-from-zero.
    pub fn project(&self, p: &MixedPoint) -> Result<MixedPoint, SpaceError> {
        self.check_dims(p)?;
        let xc = self
            .continuous()
            .zip(&p.xc)
            .map(|(v, &x)| x.clamp(v.lower, v.upper))
            .collect();
        let xd = self
            .integers()
            .zip(&p.xd)
            .map(|(v, &x)| x.round().clamp(v.lower, v.upper))
            .collect();
        Ok(MixedPoint { xc, xd })
    }

    /// Clips into bounds without rounding.
    pub fn clip(&self, p: &MixedPoint) -> Result<MixedPoint, SpaceError> {
        self.check_dims(p)?;
        let clamp = |(v, &x): (&VariableSpec, &f64)| x.clamp(v.lower, v.upper);
        Ok(MixedPoint {
            xc: self.continuous().zip(&p.xc).map(clamp).collect(),
            xd: self.integers().zip(&p.xd).map(clamp).collect(),
        })
    }

    /// Continuous coordinates uniform on their interval, integer coordinates
    /// uniform on their value set.
    pub fn uniform_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MixedPoint {
        let xc = self
            .continuous()
            .map(|v| rng.random_range(v.lower..=v.upper))
            .collect();
        let xd = self
            .integers()
            .map(|v| rng.random_range(v.lower as i64..=v.upper as i64) as f64)
            .collect();
        MixedPoint { xc, xd }
    }

    /// Coordinates of `p` rearranged into declaration order.
    pub fn to_declared(&self, p: &MixedPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (&pos, &x) in self.cont_pos.iter().zip(&p.xc) {
            out[pos] = x;
        }
        for (&pos, &x) in self.int_pos.iter().zip(&p.xd) {
            out[pos] = x;
        }
        out
    }

    pub fn from_declared(&self, values: &[f64]) -> MixedPoint {
        MixedPoint {
            xc: self.cont_pos.iter().map(|&i| values[i]).collect(),
            xd: self.int_pos.iter().map(|&i| values[i]).collect(),
        }
    }
}

impl TryFrom<Vec<VariableSpec>> for SearchSpace {
    type Error = SpaceError;

    fn try_from(variables: Vec<VariableSpec>) -> Result<Self, Self::Error> {
        Self::new(variables)
    }
}

impl From<SearchSpace> for Vec<VariableSpec> {
    fn from(space: SearchSpace) -> Self {
        space.variables
    }
}

fn positions(variables: &[VariableSpec], kind: VarKind) -> Vec<usize> {
    variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == kind)
        .map(|(i, _)| i)
        .collect()
}

/// Checks bound invariants and that at least one integer variable exists.
pub fn validate(variables: &[VariableSpec]) -> Result<(), SpaceError> {
    if variables.is_empty() {
        return Err(SpaceError::EmptySpace);
    }
    for (i, v) in variables.iter().enumerate() {
        if v.kind == VarKind::Integer
            && !(v.lower.is_finite()
                && v.upper.is_finite()
                && v.lower.fract() == 0.0
                && v.upper.fract() == 0.0)
        {
            return Err(SpaceError::NonIntegerBound(i));
        }
        // NaN bounds fail this comparison as well
        if !(v.lower <= v.upper) {
            return Err(SpaceError::InvertedBounds(i));
        }
    }
    if !variables.iter().any(|v| v.kind == VarKind::Integer) {
        return Err(SpaceError::NoIntegerVariables);
    }
    Ok(())
}
