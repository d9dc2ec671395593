//! The oscillatory delay problem, its history, the segmented reformulation and
//! the Case I / Case II classification.
//!
//! Segment `l` (1-based) is `x_l(t) = x(t + (l - 1) tau)` for `0 <= t <= tau`;
//! its right-hand side reads the previous segment at the same local time, and
//! segment 1 reads the history `phi(t - tau)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Default relative tolerance used to snap `tau / T` to an integer.
pub const DEFAULT_CASE_TOL: f64 = 1e-9;

const TWO_PI: f64 = 2.0 * PI;
// Tail of 2*pi beyond the f64 value above.
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("delay must be positive and finite, got {0}")]
    BadDelay(f64),
    #[error("frequency must be positive and finite, got {0}")]
    BadOmega(f64),
    #[error("at least one segment is required")]
    NoSegments,
    #[error(
        "horizon {horizon} is not an integer multiple of the delay {delay}; extend the horizon to the next \
         multiple of the delay, or stop at the previous multiple and finish with a conventional integrator"
    )]
    HorizonNotMultiple { horizon: f64, delay: f64 },
    #[error("delay {delay} is shorter than the fast period {period}")]
    DelayShorterThanPeriod { delay: f64, period: f64 },
    #[error("case tolerance must lie in (0, 1e-6], got {0}")]
    BadCaseTolerance(f64),
    #[error("history requested at t = {t}, outside [-{delay}, 0]")]
    HistoryOutOfRange { t: f64, delay: f64 },
    #[error("segment index {ell} outside 1..={segments}")]
    BadSegment { ell: usize, segments: usize },
}

/// The oscillatory vector field `f(x, x_delayed, t, phase; omega)`.
///
/// Implementations must be pure and `2 pi`-periodic in `phase`.
pub trait OscillatoryRhs: Send + Sync {
    fn eval(&self, x: &[f64], x_delayed: &[f64], t: f64, phase: f64, omega: f64, out: &mut [f64]);
}

impl<F> OscillatoryRhs for F
where
    F: Fn(&[f64], &[f64], f64, f64, f64, &mut [f64]) + Send + Sync,
{
    fn eval(&self, x: &[f64], x_delayed: &[f64], t: f64, phase: f64, omega: f64, out: &mut [f64]) {
        self(x, x_delayed, t, phase, omega, out)
    }
}

pub type HistoryFn = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// `x'(t) = f(x(t), x(t - tau), t, omega t; omega)` on `[0, L tau]` with
/// `x = phi` on `[-tau, 0]`.
#[derive(Clone)]
pub struct OscDdeProblem {
    dim: usize,
    rhs: Arc<dyn OscillatoryRhs>,
    history: Arc<HistoryFn>,
    delay: f64,
    omega: f64,
    segments: usize,
}

impl fmt::Debug for OscDdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OscDdeProblem")
            .field("dim", &self.dim)
            .field("delay", &self.delay)
            .field("omega", &self.omega)
            .field("segments", &self.segments)
            .finish_non_exhaustive()
    }
}

impl OscDdeProblem {
    pub fn new(
        dim: usize,
        delay: f64,
        omega: f64,
        segments: usize,
        rhs: Arc<dyn OscillatoryRhs>,
        history: Arc<HistoryFn>,
    ) -> Result<Self, ProblemError> {
        if dim == 0 {
            return Err(ProblemError::ZeroDimension);
        }
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(ProblemError::BadDelay(delay));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ProblemError::BadOmega(omega));
        }
        if segments == 0 {
            return Err(ProblemError::NoSegments);
        }
        Ok(Self {
            dim,
            rhs,
            history,
            delay,
            omega,
            segments,
        })
    }

    /// Like [`OscDdeProblem::new`] but takes the horizon `t_max`, which must be
    /// an integer multiple of the delay (to 1e-12 relative).
    pub fn with_horizon(
        dim: usize,
        delay: f64,
        omega: f64,
        horizon: f64,
        rhs: Arc<dyn OscillatoryRhs>,
        history: Arc<HistoryFn>,
    ) -> Result<Self, ProblemError> {
        if !(delay > 0.0 && delay.is_finite()) {
            return Err(ProblemError::BadDelay(delay));
        }
        let ratio = horizon / delay;
        let l = ratio.round();
        if l.is_nan() || l < 1.0 || (ratio - l).abs() > 1e-12 * ratio.abs().max(1.0) {
            return Err(ProblemError::HorizonNotMultiple { horizon, delay });
        }
        Self::new(dim, delay, omega, l as usize, rhs, history)
    }

    /// Same problem at a different frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self, ProblemError> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(ProblemError::BadOmega(omega));
        }
        Ok(Self { omega, ..self.clone() })
    }

    /// Same problem over a different number of delay intervals.
    pub fn with_segments(&self, segments: usize) -> Result<Self, ProblemError> {
        if segments == 0 {
            return Err(ProblemError::NoSegments);
        }
        Ok(Self {
            segments,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        TWO_PI / self.omega
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.segments as f64 * self.delay
    }

    /// Evaluates `f` with an explicit phase argument.
    pub fn eval_rhs(&self, x: &[f64], x_delayed: &[f64], t: f64, phase: f64, out: &mut [f64]) {
        self.rhs.eval(x, x_delayed, t, phase, self.omega, out)
    }

    /// `phi(t)` for `-tau <= t <= 0` (with 1e-12 relative slack).
    pub fn history_eval(&self, t: f64) -> Result<Vec<f64>, ProblemError> {
        let mut out = vec![0.0; self.dim];
        self.history_into(t, &mut out)?;
        Ok(out)
    }

    pub fn history_into(&self, t: f64, out: &mut [f64]) -> Result<(), ProblemError> {
        let slack = 1e-12 * self.delay;
        if !(t >= -self.delay - slack && t <= slack) {
            return Err(ProblemError::HistoryOutOfRange { t, delay: self.delay });
        }
        (self.history)(t.clamp(-self.delay, 0.0), out);
        Ok(())
    }
}

/// Whether the delay is (numerically) a whole number of fast periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    CaseI,
    CaseII,
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::CaseI => "I",
            CaseKind::CaseII => "II",
        })
    }
}

/// `T = 2 pi / omega`, `M = floor(tau / T)` and `r = tau - M T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseInfo {
    pub kind: CaseKind,
    pub periods_in_delay: usize,
    pub remainder: f64,
    pub period: f64,
}

impl CaseInfo {
    /// Length of the interval handled by averaging: `tau` in Case I, `M T` in Case II.
    pub fn averaging_span(&self, delay: f64) -> f64 {
        match self.kind {
            CaseKind::CaseI => delay,
            CaseKind::CaseII => self.periods_in_delay as f64 * self.period,
        }
    }

    /// The same classification read as the other case (used by `--case`).
    pub fn forced(&self, kind: CaseKind, delay: f64) -> CaseInfo {
        let remainder = match kind {
            CaseKind::CaseI => 0.0,
            CaseKind::CaseII => (delay - self.periods_in_delay as f64 * self.period).max(0.0),
        };
        CaseInfo {
            kind,
            remainder,
            ..*self
        }
    }
}

pub fn classify_case(problem: &OscDdeProblem, tol_case: f64) -> Result<CaseInfo, ProblemError> {
    if !(tol_case > 0.0 && tol_case <= 1e-6) {
        return Err(ProblemError::BadCaseTolerance(tol_case));
    }
    let tau = problem.delay;
    let period = problem.period();
    let ratio = tau * problem.omega / TWO_PI;
    let below = ratio.floor();
    let frac = ratio - below;
    let (m, kind, remainder) = if frac * period <= tol_case * tau {
        (below, CaseKind::CaseI, 0.0)
    } else if (1.0 - frac) * period <= tol_case * tau {
        (below + 1.0, CaseKind::CaseI, 0.0)
    } else {
        (below, CaseKind::CaseII, (tau - below * period).max(0.0))
    };
    if m < 1.0 {
        return Err(ProblemError::DelayShorterThanPeriod { delay: tau, period });
    }
    Ok(CaseInfo {
        kind,
        periods_in_delay: m as usize,
        remainder,
        period,
    })
}

/// `a * b` reduced to `(-pi, pi]`, keeping the rounding error of the product.
pub fn reduce_product(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    reduce_with_tail(p, err)
}

fn reduce_with_tail(p: f64, tail: f64) -> f64 {
    let k = (p / TWO_PI).round();
    let r = (-k).mul_add(TWO_PI, p) - k * TWO_PI_LO + tail;
    if r > PI {
        r - TWO_PI
    } else if r <= -PI {
        r + TWO_PI
    } else {
        r
    }
}

/// Phase of segment `ell` at its local time zero, `omega (ell - 1) tau mod 2 pi`.
///
/// In Case I this is zero up to round-off and is snapped to exactly zero.
pub fn phase_offset(problem: &OscDdeProblem, case: &CaseInfo, ell: usize) -> f64 {
    let r = raw_phase_offset(problem, ell);
    if case.kind == CaseKind::CaseI && r.abs() < 1e-9 {
        0.0
    } else {
        r
    }
}

/// `omega (ell - 1) tau` reduced to `(-pi, pi]` without any snapping.
pub fn raw_phase_offset(problem: &OscDdeProblem, ell: usize) -> f64 {
    if ell <= 1 {
        return 0.0;
    }
    let per_delay = reduce_product(problem.omega, problem.delay);
    reduce_product(per_delay, (ell - 1) as f64)
}

/// Identifies the node at which a delayed argument is requested. All keys are
/// integers, so the producer and the consumer of a stored stage agree exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKey {
    /// Micro integration inside a stencil leg: macro step `n`, macro stage
    /// `stage`, leg direction, micro step and micro stage.
    Micro {
        n: usize,
        stage: usize,
        forward: bool,
        step: usize,
        micro_stage: usize,
    },
    /// Case II short integration from `M T` to `tau`.
    Tail { step: usize, micro_stage: usize },
    /// Fine grid of the reference oracle.
    Grid { step: usize, stage: usize },
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Micro {
                n,
                stage,
                forward,
                step,
                micro_stage,
            } => write!(
                f,
                "(n={n}, stage={stage}, leg={}, step={step}, micro_stage={micro_stage})",
                if *forward { "forward" } else { "backward" }
            ),
            NodeKey::Tail { step, micro_stage } => write!(f, "(tail step={step}, micro_stage={micro_stage})"),
            NodeKey::Grid { step, stage } => write!(f, "(grid step={step}, stage={stage})"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProviderError {
    #[error("no stored delayed value at node {node} (segment-local time {t_local})")]
    Miss { node: NodeKey, t_local: f64 },
    #[error(transparent)]
    History(#[from] ProblemError),
}

/// Source of the delayed argument of a segment.
pub trait DelayedProvider: Sync {
    fn delayed(&self, node: NodeKey, t_local: f64, out: &mut [f64]) -> Result<(), ProviderError>;
}

/// Delayed values of segment 1: `x_0(t) = phi(t - tau)`.
pub struct HistoryProvider<'a> {
    pub problem: &'a OscDdeProblem,
}

impl DelayedProvider for HistoryProvider<'_> {
    fn delayed(&self, _node: NodeKey, t_local: f64, out: &mut [f64]) -> Result<(), ProviderError> {
        self.problem.history_into(t_local - self.problem.delay, out)?;
        Ok(())
    }
}

/// Right-hand side of segment `ell` on `[0, tau]`.
pub struct SegmentRhs<'a> {
    pub problem: &'a OscDdeProblem,
    pub segment_index: usize,
    pub slow_offset: f64,
    pub phase_offset: f64,
    pub provider: &'a dyn DelayedProvider,
}

impl<'a> SegmentRhs<'a> {
    /// `f(x, x_prev(node), t_local + (ell - 1) tau, phase_offset + phase; omega)`.
    ///
    /// `phase` is supplied by the caller: elapsed micro time times omega for
    /// micro integrations, `omega * t_local` for direct integrations.
    pub fn eval(
        &self,
        x: &[f64],
        node: NodeKey,
        t_local: f64,
        phase: f64,
        out: &mut [f64],
    ) -> Result<(), ProviderError> {
        let mut delayed = vec![0.0; self.problem.dim];
        self.provider.delayed(node, t_local, &mut delayed)?;
        self.problem
            .eval_rhs(x, &delayed, self.slow_offset + t_local, self.phase_offset + phase, out);
        Ok(())
    }
}

pub fn segment_rhs<'a>(
    problem: &'a OscDdeProblem,
    case: &CaseInfo,
    ell: usize,
    provider: &'a dyn DelayedProvider,
) -> Result<SegmentRhs<'a>, ProblemError> {
    if ell == 0 || ell > problem.segments {
        return Err(ProblemError::BadSegment {
            ell,
            segments: problem.segments,
        });
    }
    Ok(SegmentRhs {
        problem,
        segment_index: ell,
        slow_offset: (ell - 1) as f64 * problem.delay,
        phase_offset: phase_offset(problem, case, ell),
        provider,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_problem(delay: f64, omega: f64) -> OscDdeProblem {
        OscDdeProblem::new(
            2,
            delay,
            omega,
            4,
            Arc::new(|_: &[f64], xd: &[f64], _: f64, _: f64, _: f64, out: &mut [f64]| {
                out.copy_from_slice(xd);
            }),
            Arc::new(|t: f64, out: &mut [f64]| {
                out[0] = 0.5 + t;
                out[1] = 2.0;
            }),
        )
        .unwrap()
    }

    #[test]
    fn case_one_at_sixteen_pi() {
        let c = classify_case(&constant_problem(0.5, 16.0 * PI), DEFAULT_CASE_TOL).unwrap();
        assert_eq!(c.kind, CaseKind::CaseI);
        assert_eq!(c.periods_in_delay, 4);
        assert!((c.period - 0.125).abs() < 1e-15);
        assert_eq!(c.remainder, 0.0);
    }

    #[test]
    fn case_two_at_fifty() {
        let c = classify_case(&constant_problem(0.5, 50.0), DEFAULT_CASE_TOL).unwrap();
        assert_eq!(c.kind, CaseKind::CaseII);
        assert_eq!(c.periods_in_delay, 3);
        let expected = 0.5 - 6.0 * PI / 50.0;
        assert!((c.remainder - expected).abs() < 1e-15);
        assert!((c.remainder - 0.1230).abs() < 1e-4);
        assert!(c.remainder < c.period);
    }

    #[test]
    fn unit_delay_unit_period() {
        let c = classify_case(&constant_problem(1.0, 2.0 * PI), DEFAULT_CASE_TOL).unwrap();
        assert_eq!((c.kind, c.periods_in_delay), (CaseKind::CaseI, 1));
    }

    #[test]
    fn delay_shorter_than_period_is_rejected() {
        let err = classify_case(&constant_problem(0.5, 2.0), DEFAULT_CASE_TOL).unwrap_err();
        assert!(matches!(err, ProblemError::DelayShorterThanPeriod { .. }));
        assert!(classify_case(&constant_problem(0.5, 64.0), 0.1).is_err());
    }

    #[test]
    fn doubling_omega_never_leaves_case_one() {
        let p = constant_problem(0.5, 8.0 * PI);
        for j in 0..12 {
            let q = p.with_omega(8.0 * PI * f64::from(1u32 << j)).unwrap();
            assert_eq!(
                classify_case(&q, DEFAULT_CASE_TOL).unwrap().kind,
                CaseKind::CaseI,
                "j = {j}"
            );
        }
    }

    #[test]
    fn history_bounds() {
        let p = constant_problem(0.5, 16.0 * PI);
        assert_eq!(p.history_eval(0.0).unwrap(), vec![0.5, 2.0]);
        assert_eq!(p.history_eval(-0.5 - 1e-15).unwrap(), vec![0.0, 2.0]);
        assert!(matches!(
            p.history_eval(-1.0),
            Err(ProblemError::HistoryOutOfRange { .. })
        ));
        assert!(p.history_eval(1e-3).is_err());
    }

    #[test]
    fn horizon_must_be_a_multiple_of_the_delay() {
        let rhs: Arc<dyn OscillatoryRhs> =
            Arc::new(|_: &[f64], _: &[f64], _: f64, _: f64, _: f64, o: &mut [f64]| o.fill(0.0));
        let hist: Arc<HistoryFn> = Arc::new(|_, o: &mut [f64]| o.fill(0.0));
        let p = OscDdeProblem::with_horizon(1, 0.5, 10.0, 2.0, rhs.clone(), hist.clone()).unwrap();
        assert_eq!(p.segments(), 4);
        let err = OscDdeProblem::with_horizon(1, 0.5, 10.0, 1.8, rhs, hist).unwrap_err();
        assert!(err.to_string().contains("extend the horizon"));
    }

    #[test]
    fn case_one_phase_offsets_vanish() {
        for j in 0..8 {
            let p = constant_problem(0.5, 8.0 * PI * f64::from(1u32 << j))
                .with_segments(6)
                .unwrap();
            let case = classify_case(&p, DEFAULT_CASE_TOL).unwrap();
            for ell in 1..=6 {
                let raw = reduce_product(reduce_product(p.omega(), p.delay()), (ell - 1) as f64);
                assert!(raw.abs() <= 1e-10, "omega 2^{j} 8pi, ell {ell}: {raw}");
                assert_eq!(phase_offset(&p, &case, ell), 0.0);
            }
        }
    }

    #[test]
    fn case_two_phase_offset_matches_direct_reduction() {
        let p = constant_problem(0.5, 50.0);
        let case = classify_case(&p, DEFAULT_CASE_TOL).unwrap();
        let off = phase_offset(&p, &case, 3);
        let direct = (50.0f64).rem_euclid(TWO_PI);
        let direct = if direct > PI { direct - TWO_PI } else { direct };
        assert!((off - direct).abs() < 1e-13);
    }

    #[test]
    fn segment_one_reads_the_history() {
        let p = constant_problem(0.5, 16.0 * PI);
        let case = classify_case(&p, DEFAULT_CASE_TOL).unwrap();
        let hp = HistoryProvider { problem: &p };
        let s = segment_rhs(&p, &case, 1, &hp).unwrap();
        let mut out = [0.0; 2];
        s.eval(
            &[9.0, 9.0],
            NodeKey::Tail {
                step: 0,
                micro_stage: 0,
            },
            0.0,
            0.0,
            &mut out,
        )
        .unwrap();
        assert_eq!(out, [0.0, 2.0]);
        s.eval(
            &[9.0, 9.0],
            NodeKey::Tail {
                step: 0,
                micro_stage: 0,
            },
            0.25,
            0.0,
            &mut out,
        )
        .unwrap();
        assert_eq!(out, [0.25, 2.0]);
        assert!(segment_rhs(&p, &case, 5, &hp).is_err());
    }
}
