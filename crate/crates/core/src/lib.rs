//! Stroboscopic averaging for delay differential equations with a single
//! constant delay and a fast periodic forcing.
//!
//! The delay problem `x'(t) = f(x(t), x(t - tau), t, Omega t; Omega)` is cut into
//! segments of length `tau` (method of steps), which turns it into a
//! lower-bidiagonal system of oscillatory ODEs. Each segment is advanced by a
//! macro Runge–Kutta method applied to the stroboscopically averaged field,
//! which is recovered on the fly by finite differences of short micro
//! integrations over whole fast periods.
//!
//! Module map:
//!
//! * [`tableau`]: explicit Runge–Kutta tableaus, a stage-recording stepper and
//!   the whole-period quadrature exactness check.
//! * [`stencil`]: first-derivative difference formulas on multiples of the period.
//! * [`problem`]: the oscillatory delay problem, case classification and the
//!   per-segment right-hand side.
//! * [`sam`]: the averaging engine (micro store, macro integration, Case I/II drivers).
//! * [`reference`]: brute-force fixed-step oracle, error metrics and order fits.
//! * [`benchmarks`]: the toggle-switch test problems and synthetic problems.
//! * `cli` (feature `cli`, on by default): the command-line front end emitting CSV.

pub mod benchmarks;
#[cfg(feature = "cli")]
pub mod cli;
pub mod problem;
pub mod reference;
pub mod sam;
pub mod stencil;
pub mod tableau;

pub use benchmarks::{scaled_toggle_problem, synthetic_quadrature_problem, toggle_problem, ToggleParams};
pub use problem::{classify_case, CaseInfo, CaseKind, OscDdeProblem};
pub use reference::{endpoint_error, max_strobo_error, observed_order, reference_solve, ReferenceSolution};
pub use sam::{solve, solve_case1, solve_case2, validity_check, SamConfig, SamMethod, StroboscopicSolution};
pub use stencil::{Stencil, StencilSchedule};
pub use tableau::ButcherTableau;
