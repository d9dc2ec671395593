//! Brute-force oracle and error metrics.
//!
//! The oracle integrates the segmented system with classical RK4 and a fixed
//! step `tau / K`. Segment `l` reads the stage values of segment `l - 1` at the
//! same `(step, stage)`, so the delayed arguments are exact grid values and
//! no interpolation enters the comparison.

use thiserror::Error;

use crate::problem::{raw_phase_offset, reduce_product, OscDdeProblem, ProblemError};
use crate::sam::StroboscopicSolution;
use crate::tableau::{rk_step, ButcherTableau};

#[derive(Debug, Error, PartialEq)]
pub enum ReferenceError {
    #[error("reference needs at least two steps per segment, got {0}")]
    TooFewSteps(usize),
    #[error("non-finite reference state in segment {segment} at step {step}")]
    NonFinite { segment: usize, step: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("node t = {time} of segment {segment} does not fall on the reference grid (step {step})")]
    GridMisalignment { segment: usize, time: f64, step: f64 },
    #[error("solution and reference describe different problems: {0}")]
    Mismatch(String),
    #[error("component {component} out of range for dimension {dim}")]
    BadComponent { component: usize, dim: usize },
    #[error("order fit needs at least 3 points with positive finite errors, got {0}")]
    DegenerateFit(usize),
}

/// Dense grid values of every segment at local times `j tau / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub steps: usize,
    pub step: f64,
    pub delay: f64,
    pub dim: usize,
    /// Per segment, `(K + 1) * dim` values.
    pub values: Vec<Vec<f64>>,
    /// Per segment, `K * 4 * dim` RK4 stage values.
    pub stages: Vec<Vec<f64>>,
    pub work_units: u64,
    /// Set when the step does not resolve the fast period (`h > T / 10`).
    pub resolution_warning: Option<String>,
}

impl ReferenceSolution {
    /// Grid value of segment `ell` (1-based) at step `j`.
    pub fn value(&self, ell: usize, j: usize) -> &[f64] {
        &self.values[ell - 1][j * self.dim..(j + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.value(self.values.len(), self.steps)
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }
}

pub fn reference_solve(problem: &OscDdeProblem, steps: usize) -> Result<ReferenceSolution, ReferenceError> {
    if steps < 2 {
        return Err(ReferenceError::TooFewSteps(steps));
    }
    let tab = ButcherTableau::rk4_classical();
    let sigma = tab.stage_count();
    let dim = problem.dim();
    let tau = problem.delay();
    let h = tau / steps as f64;
    let omega = problem.omega();
    let resolution_warning = (h > problem.period() / 10.0).then(|| {
        format!(
            "reference step {h:.3e} exceeds a tenth of the fast period {:.3e}",
            problem.period()
        )
    });

    let mut values = Vec::with_capacity(problem.segments());
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(problem.segments());
    let mut y = problem.history_eval(0.0)?;
    let mut work = 0u64;
    let mut delayed = vec![0.0; dim];
    for ell in 1..=problem.segments() {
        let slow_offset = (ell - 1) as f64 * tau;
        let phase_offset = raw_phase_offset(problem, ell);
        let mut seg_values = Vec::with_capacity((steps + 1) * dim);
        let mut seg_stages = Vec::with_capacity(steps * sigma * dim);
        seg_values.extend_from_slice(&y);
        let prev = stages.last();
        for j in 0..steps {
            let t = j as f64 * h;
            let (next, rec) = rk_step(
                &tab,
                |stage, s, x: &[f64], out: &mut [f64]| -> Result<(), ProblemError> {
                    work += 1;
                    match prev {
                        Some(p) => {
                            let at = (j * sigma + stage) * dim;
                            delayed.copy_from_slice(&p[at..at + dim]);
                        }
                        None => problem.history_into(s - tau, &mut delayed)?,
                    }
                    let phase = phase_offset + reduce_product(omega, s);
                    problem.eval_rhs(x, &delayed, slow_offset + s, phase, out);
                    Ok(())
                },
                t,
                &y,
                h,
            )
            .map_err(|e| e.source)?;
            if !next.iter().all(|v| v.is_finite()) {
                return Err(ReferenceError::NonFinite { segment: ell, step: j });
            }
            for st in &rec.stage_states {
                seg_stages.extend_from_slice(st);
            }
            seg_values.extend_from_slice(&next);
            y = next;
        }
        values.push(seg_values);
        stages.push(seg_stages);
    }
    Ok(ReferenceSolution {
        steps,
        step: h,
        delay: tau,
        dim,
        values,
        stages,
        work_units: work,
        resolution_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MaxStrobo,
    Endpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub metric: Metric,
    pub component: usize,
    pub value: f64,
    /// Number of nodes compared.
    pub compared: usize,
    /// Absolute time where the maximum was attained.
    pub worst_time: f64,
    pub reference_steps: usize,
}

fn check_compatible(
    sol: &StroboscopicSolution,
    reference: &ReferenceSolution,
    component: usize,
) -> Result<(), ReferenceError> {
    if component >= reference.dim {
        return Err(ReferenceError::BadComponent {
            component,
            dim: reference.dim,
        });
    }
    if sol.segments.len() != reference.segments() {
        return Err(ReferenceError::Mismatch(format!(
            "{} segments vs {}",
            sol.segments.len(),
            reference.segments()
        )));
    }
    if (sol.delay - reference.delay).abs() > 1e-14 * sol.delay {
        return Err(ReferenceError::Mismatch(format!(
            "delay {} vs {}",
            sol.delay, reference.delay
        )));
    }
    Ok(())
}

/// True when `t` is an integer multiple of `period` (to 1e-9 periods).
pub fn is_stroboscopic(t: f64, period: f64) -> bool {
    let r = t / period;
    (r - r.round()).abs() <= 1e-9
}

/// Maximum error in one component over all macro nodes at stroboscopic times.
pub fn max_strobo_error(
    sol: &StroboscopicSolution,
    reference: &ReferenceSolution,
    component: usize,
) -> Result<ErrorReport, ReferenceError> {
    check_compatible(sol, reference, component)?;
    let mut worst = 0.0f64;
    let mut worst_time = 0.0;
    let mut compared = 0;
    for (i, seg) in sol.segments.iter().enumerate() {
        let ell = i + 1;
        for (n, x) in seg.values.iter().enumerate() {
            let t_abs = sol.absolute_time(ell, n);
            if !is_stroboscopic(t_abs, sol.case.period) {
                continue;
            }
            let j_f = sol.local_time(n) / reference.step;
            let j = j_f.round();
            if (j_f - j).abs() > 1e-6 || j < 0.0 || j as usize > reference.steps {
                return Err(ReferenceError::GridMisalignment {
                    segment: ell,
                    time: t_abs,
                    step: reference.step,
                });
            }
            let e = (x[component] - reference.value(ell, j as usize)[component]).abs();
            if e.is_nan() {
                return Err(ReferenceError::NonFinite { segment: ell, step: n });
            }
            compared += 1;
            if e > worst {
                worst = e;
                worst_time = t_abs;
            }
        }
    }
    Ok(ErrorReport {
        metric: Metric::MaxStrobo,
        component,
        value: worst,
        compared,
        worst_time,
        reference_steps: reference.steps,
    })
}

/// Error in one component at `t_max`.
pub fn endpoint_error(
    sol: &StroboscopicSolution,
    reference: &ReferenceSolution,
    component: usize,
) -> Result<ErrorReport, ReferenceError> {
    check_compatible(sol, reference, component)?;
    let e = (sol.endpoint()[component] - reference.endpoint()[component]).abs();
    if e.is_nan() {
        return Err(ReferenceError::NonFinite {
            segment: sol.segments.len(),
            step: reference.steps,
        });
    }
    Ok(ErrorReport {
        metric: Metric::Endpoint,
        component,
        value: e,
        compared: 1,
        worst_time: sol.horizon(),
        reference_steps: reference.steps,
    })
}

/// Estimated error of `fine` from its difference with `coarse` (half as many
/// steps): `max |coarse - fine| / 15` over the shared grid nodes.
pub fn richardson_error_estimate(
    coarse: &ReferenceSolution,
    fine: &ReferenceSolution,
    component: usize,
) -> Result<f64, ReferenceError> {
    if fine.steps != 2 * coarse.steps || fine.segments() != coarse.segments() {
        return Err(ReferenceError::Mismatch("fine grid must halve the coarse step".into()));
    }
    let mut worst = 0.0f64;
    for ell in 1..=coarse.segments() {
        for j in 0..=coarse.steps {
            let d = (coarse.value(ell, j)[component] - fine.value(ell, 2 * j)[component]).abs();
            worst = worst.max(d);
        }
    }
    Ok(worst / 15.0)
}

/// Ratio `|x_K - x_2K| / |x_2K - x_4K|` at `t_max`; about 16 for a fourth-order
/// oracle in its asymptotic range.
pub fn richardson_ratio(problem: &OscDdeProblem, steps: usize, component: usize) -> Result<f64, ReferenceError> {
    let a = reference_solve(problem, steps)?;
    let b = reference_solve(problem, 2 * steps)?;
    let c = reference_solve(problem, 4 * steps)?;
    let d1 = (a.endpoint()[component] - b.endpoint()[component]).abs();
    let d2 = (b.endpoint()[component] - c.endpoint()[component]).abs();
    Ok(d1 / d2)
}

/// Least-squares line through `(log x, log error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log units.
    pub residual: f64,
    pub points: usize,
}

pub fn observed_order(points: &[(f64, f64)]) -> Result<OrderFit, ReferenceError> {
    let valid = points
        .iter()
        .all(|&(x, e)| x > 0.0 && x.is_finite() && e > 0.0 && e.is_finite());
    if points.len() < 3 || !valid {
        return Err(ReferenceError::DegenerateFit(points.len()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ReferenceError::DegenerateFit(points.len()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(OrderFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{HistoryFn, OscillatoryRhs};
    use std::sync::Arc;

    fn linear_dde() -> OscDdeProblem {
        let rhs: Arc<dyn OscillatoryRhs> = Arc::new(|_: &[f64], xd: &[f64], _: f64, _: f64, _: f64, o: &mut [f64]| {
            o[0] = -xd[0];
        });
        let hist: Arc<HistoryFn> = Arc::new(|_, o: &mut [f64]| o[0] = 1.0);
        OscDdeProblem::new(1, 1.0, 2.0 * std::f64::consts::PI, 2, rhs, hist).unwrap()
    }

    #[test]
    fn linear_delay_problem_first_interval_is_exact() {
        let r = reference_solve(&linear_dde(), 8).unwrap();
        for j in 0..=8 {
            let t = j as f64 / 8.0;
            assert!((r.value(1, j)[0] - (1.0 - t)).abs() < 1e-15);
        }
        // Second interval: x = 1 - t + (t - 1)^2 / 2, a quadratic, still exact.
        for j in 0..=8 {
            let t = 1.0 + j as f64 / 8.0;
            let exact = 1.0 - t + (t - 1.0).powi(2) / 2.0;
            assert!((r.value(2, j)[0] - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_reference_is_constant() {
        let rhs: Arc<dyn OscillatoryRhs> =
            Arc::new(|_: &[f64], _: &[f64], _: f64, _: f64, _: f64, o: &mut [f64]| o.fill(0.0));
        let hist: Arc<HistoryFn> = Arc::new(|_, o: &mut [f64]| o.copy_from_slice(&[0.5, 2.0]));
        let p = OscDdeProblem::new(2, 0.5, 50.0, 3, rhs, hist).unwrap();
        let r = reference_solve(&p, 16).unwrap();
        assert!(r.values.iter().all(|s| s.chunks(2).all(|v| v == [0.5, 2.0])));
        assert!(r.resolution_warning.is_some());
        assert_eq!(r.work_units, 3 * 16 * 4);
    }

    #[test]
    fn too_few_steps() {
        assert_eq!(
            reference_solve(&linear_dde(), 1).unwrap_err(),
            ReferenceError::TooFewSteps(1)
        );
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powi(-4)))
            .collect();
        let fit = observed_order(&pts).unwrap();
        assert!((fit.slope + 4.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_errors_have_zero_slope() {
        let fit = observed_order(&[(64.0, 8.29e-5), (128.0, 8.29e-5), (256.0, 8.29e-5)]).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn published_column_slope() {
        // Omega = 1024 pi column of the toggle table, N = 1..16.
        let pts = [
            (1.0, 1.95e-5),
            (2.0, 9.98e-7),
            (4.0, 6.18e-8),
            (8.0, 3.89e-9),
            (16.0, 2.23e-10),
        ];
        let fit = observed_order(&pts).unwrap();
        assert!((fit.slope + 4.1).abs() < 0.2, "{}", fit.slope);
    }

    #[test]
    fn degenerate_fits() {
        assert!(observed_order(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(observed_order(&[(1.0, 1.0), (2.0, 0.0), (4.0, 0.1)]).is_err());
        assert!(observed_order(&[(2.0, 1.0), (2.0, 0.5), (2.0, 0.1)]).is_err());
    }

    #[test]
    fn stroboscopic_enumeration() {
        // tau = M T, H = tau / N: node n is stroboscopic iff N divides n M.
        for m in [1usize, 2, 3, 4, 6] {
            for n_steps in [1usize, 2, 3, 4, 8] {
                let period = 0.5 / m as f64;
                let h = 0.5 / n_steps as f64;
                let count = (0..=n_steps).filter(|&n| is_stroboscopic(n as f64 * h, period)).count();
                let expected = (0..=n_steps).filter(|&n| (n * m) % n_steps == 0).count();
                assert_eq!(count, expected, "M={m} N={n_steps}");
            }
        }
    }
}
