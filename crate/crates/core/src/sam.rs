//! The stroboscopic averaging engine.
//!
//! For each segment the averaged equation is advanced with the macro tableau
//! and step `H = span / N`. Every macro stage evaluates the averaged field by
//! micro-integrating the oscillatory segment equation over whole periods
//! forward and/or backward from the stage value and combining the period
//! endpoints with a difference formula.
//!
//! Two conventions carry the whole method:
//!
//! * Every micro integration sees the phase `phase_offset(l) + omega * elapsed`,
//!   where `elapsed` is the micro time since the start of that integration.
//!   The macro stage time only enters through the slow time argument.
//! * The delayed argument at micro step `nu`, micro stage `j'` of leg
//!   `(n, j, direction)` in segment `l` is the stage value stored under the
//!   same integer key while solving segment `l - 1`. Solving the segments in
//!   sequence is therefore the same computation as applying the scheme to the
//!   stacked lower-bidiagonal system.

use std::collections::HashMap;

use thiserror::Error;

use crate::problem::{
    classify_case, segment_rhs, CaseInfo, CaseKind, DelayedProvider, HistoryProvider, NodeKey, OscDdeProblem,
    ProblemError, ProviderError, SegmentRhs, DEFAULT_CASE_TOL,
};
pub use crate::stencil::SamMethod;
use crate::stencil::{StencilError, StencilKind, StencilSchedule};
use crate::tableau::{rk_step, ButcherTableau};

#[derive(Debug, Error, PartialEq)]
pub enum ValidityError {
    #[error("macro step {macro_step} is shorter than the fast period {period}")]
    MacroStepBelowPeriod { macro_step: f64, period: f64 },
    #[error(
        "macro step n={n}, stage j={stage}: offset k={offset} of the {kind:?} formula leaves the averaging \
         interval (stage at {position:.4} periods, interval {length} periods)"
    )]
    Window {
        n: usize,
        stage: usize,
        offset: i32,
        kind: StencilKind,
        position: f64,
        length: f64,
    },
}

#[derive(Debug, Error)]
pub enum SamError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("problem is Case {found} but the Case {expected} driver was requested")]
    CaseMismatch { expected: CaseKind, found: CaseKind },
    #[error("invalid configuration: {0}")]
    Validity(#[from] ValidityError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("segment {segment}: {source}")]
    Provider {
        segment: usize,
        #[source]
        source: ProviderError,
    },
    #[error("segment {segment}: non-finite state at {at}")]
    NonFinite { segment: usize, at: String },
    #[error(transparent)]
    Stencil(#[from] StencilError),
}

/// Macro and micro tableaus, stencil schedule and step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SamConfig {
    pub label: String,
    pub macro_tableau: ButcherTableau,
    pub micro_tableau: ButcherTableau,
    pub schedule: StencilSchedule,
    /// `N`: macro steps per averaging span.
    pub macro_steps: usize,
    /// `m`: micro steps per fast period, `h = T / m`.
    pub micro_steps_per_period: usize,
}

impl SamConfig {
    pub fn new(
        label: impl Into<String>,
        macro_tableau: ButcherTableau,
        micro_tableau: ButcherTableau,
        schedule: StencilSchedule,
        macro_steps: usize,
        micro_steps_per_period: usize,
    ) -> Result<Self, SamError> {
        if macro_steps == 0 || micro_steps_per_period == 0 {
            return Err(SamError::Config("macro and micro step counts must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            macro_tableau,
            micro_tableau,
            schedule,
            macro_steps,
            micro_steps_per_period,
        })
    }

    /// Built-in scheme with `N` macro steps and the default `m = 2N`.
    pub fn for_method(method: SamMethod, macro_steps: usize) -> Self {
        let tab = match method {
            SamMethod::Rk2 => ButcherTableau::rk2_midpoint(),
            SamMethod::Rk3 => ButcherTableau::rk3_heun(),
            SamMethod::Rk4 => ButcherTableau::rk4_classical(),
        };
        Self {
            label: method.name().to_string(),
            macro_tableau: tab.clone(),
            micro_tableau: tab,
            schedule: StencilSchedule::builtin(method),
            macro_steps: macro_steps.max(1),
            micro_steps_per_period: 2 * macro_steps.max(1),
        }
    }

    pub fn with_micro_steps(mut self, m: usize) -> Self {
        self.micro_steps_per_period = m.max(1);
        self
    }
}

/// Stencil choice per macro step and stage. Depends on `(n, j)` only, so
/// every segment uses the same legs and the stores line up.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    kinds: Vec<Vec<StencilKind>>,
    positions: Vec<Vec<f64>>,
    length: f64,
}

impl StagePlan {
    pub fn new(cfg: &SamConfig, case: &CaseInfo, delay: f64) -> Self {
        // Positions are measured in periods so the window test is exact for
        // the usual power-of-two grids.
        let length = match case.kind {
            CaseKind::CaseI => delay / case.period,
            CaseKind::CaseII => case.periods_in_delay as f64,
        };
        let length = if case.kind == CaseKind::CaseI && (length - length.round()).abs() < 1e-6 {
            length.round()
        } else {
            length
        };
        let per_step = length / cfg.macro_steps as f64;
        let c = cfg.macro_tableau.abscissas();
        let positions: Vec<Vec<f64>> = (0..cfg.macro_steps)
            .map(|n| c.iter().map(|cj| (n as f64 + cj) * per_step).collect())
            .collect();
        let kinds = positions
            .iter()
            .map(|row| row.iter().map(|&p| cfg.schedule.choose(p, length)).collect())
            .collect();
        Self {
            kinds,
            positions,
            length,
        }
    }

    pub fn kind(&self, n: usize, stage: usize) -> StencilKind {
        self.kinds[n][stage]
    }

    /// Stage position in periods from the start of the averaging interval.
    pub fn position(&self, n: usize, stage: usize) -> f64 {
        self.positions[n][stage]
    }

    pub fn length_in_periods(&self) -> f64 {
        self.length
    }
}

/// Checks that every scheduled difference window stays inside the averaging
/// interval and that `H >= T`. Returns the first violation.
pub fn validity_check(problem: &OscDdeProblem, cfg: &SamConfig, case: &CaseInfo) -> Result<(), ValidityError> {
    let span = case.averaging_span(problem.delay());
    let macro_step = span / cfg.macro_steps as f64;
    if macro_step < case.period * (1.0 - 1e-9) {
        return Err(ValidityError::MacroStepBelowPeriod {
            macro_step,
            period: case.period,
        });
    }
    let plan = StagePlan::new(cfg, case, problem.delay());
    check_plan(cfg, &plan)
}

fn check_plan(cfg: &SamConfig, plan: &StagePlan) -> Result<(), ValidityError> {
    const SLACK: f64 = 1e-9;
    for n in 0..cfg.macro_steps {
        for stage in 0..cfg.macro_tableau.stage_count() {
            let kind = plan.kind(n, stage);
            let st = cfg.schedule.get(kind);
            let pos = plan.position(n, stage);
            let (lo, hi) = (st.min_offset(), st.max_offset());
            let bad = if pos + f64::from(lo) < -SLACK {
                Some(lo)
            } else if pos + f64::from(hi) > plan.length + SLACK {
                Some(hi)
            } else {
                None
            };
            if let Some(offset) = bad {
                return Err(ValidityError::Window {
                    n,
                    stage,
                    offset,
                    kind,
                    position: pos,
                    length: plan.length,
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct LegKey {
    n: usize,
    stage: usize,
    forward: bool,
}

/// Micro stage values of one segment, keyed by integers. The store filled
/// while solving segment `l` serves the delayed arguments of segment `l + 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MicroStore {
    dim: usize,
    micro_stages: usize,
    legs: HashMap<LegKey, Vec<f64>>,
    tail: Vec<f64>,
}

impl MicroStore {
    pub fn new(dim: usize, micro_stages: usize) -> Self {
        Self {
            dim,
            micro_stages,
            legs: HashMap::new(),
            tail: Vec::new(),
        }
    }

    pub fn get(&self, node: NodeKey) -> Option<&[f64]> {
        let (trace, step, micro_stage) = match node {
            NodeKey::Micro {
                n,
                stage,
                forward,
                step,
                micro_stage,
            } => (self.legs.get(&LegKey { n, stage, forward })?, step, micro_stage),
            NodeKey::Tail { step, micro_stage } => (&self.tail, step, micro_stage),
            NodeKey::Grid { .. } => return None,
        };
        if micro_stage >= self.micro_stages {
            return None;
        }
        let at = (step * self.micro_stages + micro_stage) * self.dim;
        trace.get(at..at + self.dim)
    }

    /// Number of stored stage vectors.
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            return 0;
        }
        (self.legs.values().map(Vec::len).sum::<usize>() + self.tail.len()) / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl DelayedProvider for MicroStore {
    fn delayed(&self, node: NodeKey, t_local: f64, out: &mut [f64]) -> Result<(), ProviderError> {
        match self.get(node) {
            Some(v) => {
                out.copy_from_slice(v);
                Ok(())
            }
            None => Err(ProviderError::Miss { node, t_local }),
        }
    }
}

/// Macro grid of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSolution {
    /// `X_n` for `n = 0..=N` at local times `n H`.
    pub values: Vec<Vec<f64>>,
    /// Case II: value at local time `tau` from the direct short integration.
    pub tail_end: Option<Vec<f64>>,
}

impl SegmentSolution {
    /// Value handed to the next segment as its initial condition.
    pub fn chain_value(&self) -> &[f64] {
        self.tail_end
            .as_deref()
            .unwrap_or_else(|| self.values.last().expect("non-empty macro grid"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StroboscopicSolution {
    pub case: CaseInfo,
    pub label: String,
    pub macro_steps: usize,
    pub micro_steps_per_period: usize,
    pub delay: f64,
    /// `tau` (Case I) or `M T` (Case II).
    pub span: f64,
    pub segments: Vec<SegmentSolution>,
    /// Evaluations of the oscillatory right-hand side.
    pub work_units: u64,
}

impl StroboscopicSolution {
    pub fn macro_step(&self) -> f64 {
        self.span / self.macro_steps as f64
    }

    pub fn local_time(&self, n: usize) -> f64 {
        n as f64 * self.macro_step()
    }

    /// Absolute time of node `n` of segment `ell` (1-based).
    pub fn absolute_time(&self, ell: usize, n: usize) -> f64 {
        (ell - 1) as f64 * self.delay + self.local_time(n)
    }

    pub fn horizon(&self) -> f64 {
        self.segments.len() as f64 * self.delay
    }

    /// Approximation at `t_max`.
    pub fn endpoint(&self) -> &[f64] {
        self.segments.last().expect("at least one segment").chain_value()
    }
}

struct SegmentSolver<'a> {
    cfg: &'a SamConfig,
    plan: &'a StagePlan,
    srhs: SegmentRhs<'a>,
    omega: f64,
    period: f64,
    macro_step: f64,
    micro_step: f64,
    sink: MicroStore,
    work: u64,
}

impl<'a> SegmentSolver<'a> {
    fn ell(&self) -> usize {
        self.srhs.segment_index
    }

    fn check_finite(&self, y: &[f64], at: impl FnOnce() -> String) -> Result<(), SamError> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SamError::NonFinite {
                segment: self.ell(),
                at: at(),
            })
        }
    }

    /// Integrates the segment equation from local time `t0` over `periods`
    /// whole periods in one direction with step `h`, storing every micro stage
    /// under `(n, stage, direction)`. Returns the state after each period.
    fn micro_propagate(
        &mut self,
        y0: &[f64],
        t0: f64,
        forward: bool,
        periods: usize,
        n: usize,
        stage: usize,
    ) -> Result<Vec<Vec<f64>>, SamError> {
        let m = self.cfg.micro_steps_per_period;
        let dt = if forward { self.micro_step } else { -self.micro_step };
        let sigma = self.cfg.micro_tableau.stage_count();
        let dim = y0.len();
        let mut trace = Vec::with_capacity(periods * m * sigma * dim);
        let mut checkpoints = Vec::with_capacity(periods);
        let mut y = y0.to_vec();
        for step in 0..periods * m {
            let elapsed = step as f64 * dt;
            let srhs = &self.srhs;
            let omega = self.omega;
            let work = &mut self.work;
            let (next, rec) = rk_step(
                &self.cfg.micro_tableau,
                |micro_stage, s, x: &[f64], out: &mut [f64]| {
                    *work += 1;
                    let node = NodeKey::Micro {
                        n,
                        stage,
                        forward,
                        step,
                        micro_stage,
                    };
                    srhs.eval(x, node, t0 + s, omega * s, out)
                },
                elapsed,
                &y,
                dt,
            )
            .map_err(|e| SamError::Provider {
                segment: self.srhs.segment_index,
                source: e.source,
            })?;
            for st in &rec.stage_states {
                trace.extend_from_slice(st);
            }
            y = next;
            self.check_finite(&y, || {
                format!(
                    "macro step {n}, stage {stage}, {} micro step {step}",
                    if forward { "forward" } else { "backward" }
                )
            })?;
            if (step + 1) % m == 0 {
                checkpoints.push(y.clone());
            }
        }
        self.sink.legs.insert(LegKey { n, stage, forward }, trace);
        Ok(checkpoints)
    }

    /// Averaged field at macro stage `(n, stage)` from the stage value `w`.
    fn eval_averaged_rhs(&mut self, n: usize, stage: usize, theta: f64, w: &[f64]) -> Result<Vec<f64>, SamError> {
        let cfg = self.cfg;
        let stencil = cfg.schedule.get(self.plan.kind(n, stage));
        let fwd_periods = stencil.max_offset().max(0) as usize;
        let bwd_periods = (-stencil.min_offset()).max(0) as usize;
        let fwd = if fwd_periods > 0 {
            self.micro_propagate(w, theta, true, fwd_periods, n, stage)?
        } else {
            Vec::new()
        };
        let bwd = if bwd_periods > 0 {
            self.micro_propagate(w, theta, false, bwd_periods, n, stage)?
        } else {
            Vec::new()
        };
        let values: Vec<&[f64]> = stencil
            .offsets()
            .iter()
            .map(|&k| match k {
                0 => w,
                k if k > 0 => fwd[k as usize - 1].as_slice(),
                k => bwd[(-k) as usize - 1].as_slice(),
            })
            .collect();
        Ok(stencil.apply(&values, self.period)?)
    }

    fn macro_integrate(&mut self, x0: &[f64]) -> Result<Vec<Vec<f64>>, SamError> {
        let cfg = self.cfg;
        let tab = &cfg.macro_tableau;
        let sigma = tab.stage_count();
        let big_h = self.macro_step;
        let mut values = Vec::with_capacity(cfg.macro_steps + 1);
        values.push(x0.to_vec());
        for n in 0..cfg.macro_steps {
            let xn = values[n].clone();
            let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(sigma);
            for stage in 0..sigma {
                let mut w = xn.clone();
                for (k, slope) in slopes.iter().enumerate() {
                    let a = tab.coefficients()[stage][k];
                    if a != 0.0 {
                        for (v, s) in w.iter_mut().zip(slope) {
                            *v += big_h * a * s;
                        }
                    }
                }
                let theta = (n as f64 + tab.abscissas()[stage]) * big_h;
                slopes.push(self.eval_averaged_rhs(n, stage, theta, &w)?);
            }
            let mut next = xn;
            for (b, slope) in tab.weights().iter().zip(&slopes) {
                if *b != 0.0 {
                    for (v, s) in next.iter_mut().zip(slope) {
                        *v += big_h * b * s;
                    }
                }
            }
            self.check_finite(&next, || format!("macro step {n}"))?;
            values.push(next);
        }
        Ok(values)
    }

    /// Direct integration of the segment equation from `start` to `end`
    /// (local times) with step `h` and a final shorter step; phase is
    /// `omega * t_local` on top of the segment offset.
    fn integrate_tail(&mut self, y0: &[f64], start: f64, end: f64) -> Result<Vec<f64>, SamError> {
        let h = self.micro_step;
        let length = end - start;
        let full = ((length / h) * (1.0 + 1e-12)).floor().max(0.0) as usize;
        let rest = length - full as f64 * h;
        let mut steps: Vec<(f64, f64)> = (0..full).map(|i| (start + i as f64 * h, h)).collect();
        if rest > 1e-10 * h {
            steps.push((start + full as f64 * h, end - (start + full as f64 * h)));
        }
        let mut y = y0.to_vec();
        let mut trace = Vec::new();
        for (step, &(t, dt)) in steps.iter().enumerate() {
            let srhs = &self.srhs;
            let omega = self.omega;
            let work = &mut self.work;
            let (next, rec) = rk_step(
                &self.cfg.micro_tableau,
                |micro_stage, s, x: &[f64], out: &mut [f64]| {
                    *work += 1;
                    srhs.eval(x, NodeKey::Tail { step, micro_stage }, s, omega * s, out)
                },
                t,
                &y,
                dt,
            )
            .map_err(|e| SamError::Provider {
                segment: self.srhs.segment_index,
                source: e.source,
            })?;
            for st in &rec.stage_states {
                trace.extend_from_slice(st);
            }
            y = next;
            self.check_finite(&y, || format!("tail step {step}"))?;
        }
        self.sink.tail = trace;
        Ok(y)
    }
}

/// Classifies the problem and dispatches to the Case I or Case II driver.
pub fn solve(problem: &OscDdeProblem, cfg: &SamConfig) -> Result<StroboscopicSolution, SamError> {
    let case = classify_case(problem, DEFAULT_CASE_TOL)?;
    solve_with_case(problem, cfg, &case)
}

pub fn solve_case1(problem: &OscDdeProblem, cfg: &SamConfig) -> Result<StroboscopicSolution, SamError> {
    let case = classify_case(problem, DEFAULT_CASE_TOL)?;
    if case.kind != CaseKind::CaseI {
        return Err(SamError::CaseMismatch {
            expected: CaseKind::CaseI,
            found: case.kind,
        });
    }
    solve_with_case(problem, cfg, &case)
}

pub fn solve_case2(problem: &OscDdeProblem, cfg: &SamConfig) -> Result<StroboscopicSolution, SamError> {
    let case = classify_case(problem, DEFAULT_CASE_TOL)?;
    if case.kind != CaseKind::CaseII {
        return Err(SamError::CaseMismatch {
            expected: CaseKind::CaseII,
            found: case.kind,
        });
    }
    solve_with_case(problem, cfg, &case)
}

/// Runs the driver for an explicit classification. A Case I problem may be
/// run through the Case II driver (the tail is then empty); the reverse
/// chains from a non-stroboscopic endpoint and is only useful for testing.
pub fn solve_with_case(
    problem: &OscDdeProblem,
    cfg: &SamConfig,
    case: &CaseInfo,
) -> Result<StroboscopicSolution, SamError> {
    validity_check(problem, cfg, case)?;
    let plan = StagePlan::new(cfg, case, problem.delay());
    let span = case.averaging_span(problem.delay());
    let macro_step = span / cfg.macro_steps as f64;
    let micro_step = case.period / cfg.micro_steps_per_period as f64;
    let history = HistoryProvider { problem };

    let mut x0 = problem.history_eval(0.0)?;
    let mut prev: Option<MicroStore> = None;
    let mut segments = Vec::with_capacity(problem.segments());
    let mut work_units = 0;
    for ell in 1..=problem.segments() {
        let provider: &dyn DelayedProvider = match &prev {
            Some(store) => store,
            None => &history,
        };
        let srhs = segment_rhs(problem, case, ell, provider)?;
        let mut solver = SegmentSolver {
            cfg,
            plan: &plan,
            srhs,
            omega: problem.omega(),
            period: case.period,
            macro_step,
            micro_step,
            sink: MicroStore::new(problem.dim(), cfg.micro_tableau.stage_count()),
            work: 0,
        };
        let values = solver.macro_integrate(&x0)?;
        let tail_end = match case.kind {
            CaseKind::CaseI => None,
            CaseKind::CaseII => Some(solver.integrate_tail(values.last().expect("grid"), span, problem.delay())?),
        };
        work_units += solver.work;
        let seg = SegmentSolution { values, tail_end };
        x0 = seg.chain_value().to_vec();
        prev = Some(solver.sink);
        segments.push(seg);
    }
    Ok(StroboscopicSolution {
        case: *case,
        label: cfg.label.clone(),
        macro_steps: cfg.macro_steps,
        micro_steps_per_period: cfg.micro_steps_per_period,
        delay: problem.delay(),
        span,
        segments,
        work_units,
    })
}
