//! Test problems: the forced delayed genetic toggle switch, its variant with
//! fast forcing growing like `omega`, and synthetic problems with a known
//! whole-period behaviour.

use std::sync::Arc;

use thiserror::Error;

use crate::problem::{HistoryFn, OscDdeProblem, OscillatoryRhs, ProblemError};
use crate::tableau::TrigMode;

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("exponent beta must be a positive integer, got {0}")]
    NonIntegerBeta(f64),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Constants of the toggle-switch benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToggleParams {
    pub alpha: f64,
    pub beta: f64,
    /// Amplitude `A` of the slow forcing `A sin(omega_slow t)`.
    pub slow_amplitude: f64,
    pub omega_slow: f64,
    /// Amplitude `B` of the fast forcing `B sin(omega t)`.
    pub fast_amplitude: f64,
    /// Amplitude `B_hat` of the scaled fast forcing `B_hat omega sin(omega t)`.
    pub scaled_fast_amplitude: f64,
    pub tau: f64,
    /// Constant history `(x1, x2)` on `[-tau, 0]`.
    pub history: [f64; 2],
}

impl Default for ToggleParams {
    fn default() -> Self {
        Self {
            alpha: 2.5,
            beta: 2.0,
            slow_amplitude: 0.1,
            omega_slow: 0.1,
            fast_amplitude: 4.0,
            scaled_fast_amplitude: 0.1,
            tau: 0.5,
            history: [0.5, 2.0],
        }
    }
}

/// Default number of delay intervals, `t_max = 4 tau = 2`.
pub const DEFAULT_SEGMENTS: usize = 4;

fn integer_beta(beta: f64) -> Result<i32, BenchmarkError> {
    if beta > 0.0 && beta.fract() == 0.0 && beta <= f64::from(i32::MAX) {
        Ok(beta as i32)
    } else {
        Err(BenchmarkError::NonIntegerBeta(beta))
    }
}

fn toggle_with_forcing(
    params: &ToggleParams,
    omega: f64,
    segments: usize,
    scaled: bool,
) -> Result<OscDdeProblem, BenchmarkError> {
    let beta = integer_beta(params.beta)?;
    let p = *params;
    let rhs: Arc<dyn OscillatoryRhs> = Arc::new(
        move |x: &[f64], xd: &[f64], t: f64, phase: f64, omega: f64, out: &mut [f64]| {
            let fast = if scaled {
                p.scaled_fast_amplitude * omega * phase.sin()
            } else {
                p.fast_amplitude * phase.sin()
            };
            out[0] = p.alpha / (1.0 + x[1].powi(beta)) - xd[0] + p.slow_amplitude * (p.omega_slow * t).sin() + fast;
            out[1] = p.alpha / (1.0 + x[0].powi(beta)) - xd[1];
        },
    );
    let h = p.history;
    let history: Arc<HistoryFn> = Arc::new(move |_t: f64, out: &mut [f64]| out.copy_from_slice(&h));
    Ok(OscDdeProblem::new(2, p.tau, omega, segments, rhs, history)?)
}

/// Toggle switch with slow forcing `A sin(omega_slow t)` and fast forcing `B sin(omega t)`.
pub fn toggle_problem(params: &ToggleParams, omega: f64, segments: usize) -> Result<OscDdeProblem, BenchmarkError> {
    toggle_with_forcing(params, omega, segments, false)
}

/// Toggle switch whose fast forcing `B_hat omega sin(omega t)` grows with the frequency.
pub fn scaled_toggle_problem(
    params: &ToggleParams,
    omega: f64,
    segments: usize,
) -> Result<OscDdeProblem, BenchmarkError> {
    toggle_with_forcing(params, omega, segments, true)
}

/// Scalar problem `y' = omega sum amp_k cos(k omega t) - decay y` with a
/// constant history `y0` and no delay coupling.
///
/// With `decay = 0` the exact solution is `y0 + sum (amp_k / k) sin(k omega t)`.
pub fn synthetic_quadrature_problem(
    modes: &[TrigMode],
    decay: f64,
    y0: f64,
    delay: f64,
    omega: f64,
    segments: usize,
) -> Result<OscDdeProblem, ProblemError> {
    let modes = modes.to_vec();
    let rhs: Arc<dyn OscillatoryRhs> = Arc::new(
        move |x: &[f64], _xd: &[f64], _t: f64, phase: f64, omega: f64, out: &mut [f64]| {
            let lambda: f64 = modes.iter().map(|m| m.amp * (f64::from(m.k) * phase).cos()).sum();
            out[0] = omega * lambda - decay * x[0];
        },
    );
    let history: Arc<HistoryFn> = Arc::new(move |_t: f64, out: &mut [f64]| out[0] = y0);
    OscDdeProblem::new(1, delay, omega, segments, rhs, history)
}
