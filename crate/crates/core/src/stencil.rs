//! First-derivative difference formulas on integer multiples of the fast
//! period, used to recover the averaged vector field from flow values
//! `Phi_{kT}(w)`.
//!
//! Weights are computed exactly in rational arithmetic as the derivatives at
//! zero of the Lagrange basis polynomials on the offsets, then rounded once
//! to `f64`.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StencilError {
    #[error("a difference formula needs at least two offsets, got {0}")]
    TooFewOffsets(usize),
    #[error("offset {0} appears more than once")]
    DuplicateOffset(i32),
    #[error("expected {expected} node values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("unknown method `{0}` (expected sam-rk2, sam-rk3 or sam-rk4)")]
    UnknownMethod(String),
}

/// A first-derivative formula `F ~ (1/T) sum_k w_k value(kT)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    offsets: Vec<i32>,
    weights: Vec<f64>,
    order: usize,
}

impl Stencil {
    /// Derives the weights for the given distinct offsets (any order; they are
    /// sorted). The formula is exact for polynomials of degree `n - 1`.
    pub fn derive_weights(offsets: &[i32]) -> Result<Self, StencilError> {
        if offsets.len() < 2 {
            return Err(StencilError::TooFewOffsets(offsets.len()));
        }
        let mut sorted = offsets.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(StencilError::DuplicateOffset(w[0]));
        }
        let nodes: Vec<BigRational> = sorted
            .iter()
            .map(|&k| BigRational::from_integer(BigInt::from(k)))
            .collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, _)| {
                lagrange_derivative_at_zero(&nodes, i)
                    .to_f64()
                    .expect("rational weight representable as f64")
            })
            .collect();
        Ok(Self {
            order: sorted.len() - 1,
            offsets: sorted,
            weights,
        })
    }

    pub fn offsets(&self) -> &[i32] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Error order `q`: the formula is exact on polynomials of degree `q`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn min_offset(&self) -> i32 {
        self.offsets[0]
    }

    pub fn max_offset(&self) -> i32 {
        *self.offsets.last().expect("non-empty")
    }

    /// Returns `(1/T) sum_k w_k values_k`, evaluated as
    /// `(1/T) sum_k w_k (values_k - values_0)` since the weights sum to zero.
    /// Constant data then gives exactly zero.
    pub fn apply<V: AsRef<[f64]>>(&self, values: &[V], period: f64) -> Result<Vec<f64>, StencilError> {
        if values.len() != self.offsets.len() {
            return Err(StencilError::LengthMismatch {
                expected: self.offsets.len(),
                got: values.len(),
            });
        }
        if period.is_nan() || period <= 0.0 {
            return Err(StencilError::BadPeriod(period));
        }
        let base = values[0].as_ref();
        let dim = base.len();
        let mut out = vec![0.0; dim];
        for (w, v) in self.weights.iter().zip(values) {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(StencilError::LengthMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            for ((o, x), b) in out.iter_mut().zip(v).zip(base) {
                *o += w * (x - b);
            }
        }
        for o in &mut out {
            *o /= period;
        }
        Ok(out)
    }
}

/// `L_i'(0)` for the Lagrange basis polynomial of node `i`.
fn lagrange_derivative_at_zero(nodes: &[BigRational], i: usize) -> BigRational {
    let mut denom = BigRational::one();
    for (j, xj) in nodes.iter().enumerate() {
        if j != i {
            denom *= &nodes[i] - xj;
        }
    }
    // d/dx prod_{j != i} (x - x_j) at x = 0.
    let mut numer = BigRational::zero();
    for (m, _) in nodes.iter().enumerate() {
        if m == i {
            continue;
        }
        let mut term = BigRational::one();
        for (j, xj) in nodes.iter().enumerate() {
            if j != i && j != m {
                term *= -xj.clone();
            }
        }
        numer += term;
    }
    numer / denom
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let offs: Vec<String> = self.offsets.iter().map(|k| k.to_string()).collect();
        write!(f, "{{{}}}", offs.join(","))
    }
}

/// The three built-in averaging schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamMethod {
    Rk2,
    Rk3,
    Rk4,
}

impl SamMethod {
    pub fn name(self) -> &'static str {
        match self {
            SamMethod::Rk2 => "sam-rk2",
            SamMethod::Rk3 => "sam-rk3",
            SamMethod::Rk4 => "sam-rk4",
        }
    }
}

impl FromStr for SamMethod {
    type Err = StencilError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sam-rk2" | "rk2" => Ok(SamMethod::Rk2),
            "sam-rk3" | "rk3" => Ok(SamMethod::Rk3),
            "sam-rk4" | "rk4" => Ok(SamMethod::Rk4),
            _ => Err(StencilError::UnknownMethod(s.to_string())),
        }
    }
}

impl fmt::Display for SamMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which member of a [`StencilSchedule`] a macro stage uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilKind {
    Interior,
    AtStart,
    AtEnd,
}

/// Interior formula plus one-sided formulas for stages near the ends of the
/// averaging interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSchedule {
    pub interior: Stencil,
    pub at_start: Stencil,
    pub at_end: Option<Stencil>,
}

impl StencilSchedule {
    pub fn new(interior: Stencil, at_start: Stencil, at_end: Option<Stencil>) -> Result<Self, String> {
        if at_start.min_offset() < 0 {
            return Err(format!("start stencil {at_start} reaches backwards"));
        }
        if let Some(e) = &at_end {
            if e.max_offset() > 0 {
                return Err(format!("end stencil {e} reaches forwards"));
            }
        }
        Ok(Self {
            interior,
            at_start,
            at_end,
        })
    }

    pub fn builtin(method: SamMethod) -> Self {
        let d = |o: &[i32]| Stencil::derive_weights(o).expect("valid built-in offsets");
        match method {
            SamMethod::Rk2 => Self::new(d(&[-1, 1]), d(&[0, 1]), None),
            SamMethod::Rk3 => Self::new(d(&[-2, -1, 0, 1]), d(&[0, 1, 2, 3]), None),
            SamMethod::Rk4 => Self::new(d(&[-2, -1, 1, 2]), d(&[0, 1, 2, 3, 4]), Some(d(&[-4, -3, -2, -1, 0]))),
        }
        .expect("valid built-in schedule")
    }

    pub fn get(&self, kind: StencilKind) -> &Stencil {
        match kind {
            StencilKind::Interior => &self.interior,
            StencilKind::AtStart => &self.at_start,
            StencilKind::AtEnd => self.at_end.as_ref().unwrap_or(&self.interior),
        }
    }

    /// Picks the formula for a stage sitting at `pos` periods from the start
    /// of an interval of `len` periods: the start formula when the interior
    /// window would reach below zero, the end formula when it would reach
    /// past `len`, the interior formula otherwise.
    pub fn choose(&self, pos: f64, len: f64) -> StencilKind {
        const SLACK: f64 = 1e-9;
        if pos + f64::from(self.interior.min_offset()) < -SLACK {
            StencilKind::AtStart
        } else if pos + f64::from(self.interior.max_offset()) > len + SLACK && self.at_end.is_some() {
            StencilKind::AtEnd
        } else {
            StencilKind::Interior
        }
    }
}

pub fn builtin_schedules(method: &str) -> Result<StencilSchedule, StencilError> {
    Ok(StencilSchedule::builtin(method.parse()?))
}
