//! Oracles shared by the integration tests. None of them call into the code
//! path they check.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samdde::problem::{phase_offset, HistoryFn, OscillatoryRhs};
use samdde::sam::solve_with_case;
use samdde::{classify_case, ButcherTableau, CaseInfo, OscDdeProblem, SamConfig, StroboscopicSolution};

/// Weights `w` with `sum_k w_k k^q = [q == 1]` for `q < n`, by Gaussian
/// elimination with partial pivoting on the transposed Vandermonde matrix.
pub fn vandermonde_weights(offsets: &[i32]) -> Vec<f64> {
    let n = offsets.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|q| {
            let mut row: Vec<f64> = offsets.iter().map(|&k| f64::from(k).powi(q as i32)).collect();
            row.push(if q == 1 { 1.0 } else { 0.0 });
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (r, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *r -= f * p;
            }
        }
    }
    let mut w = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * w[c]).sum();
        w[row] = (a[row][n] - s) / a[row][row];
    }
    w
}

/// Defect of an RK method on `y' = amp exp(i k s)` over one period, summed
/// step by step: the field does not depend on `y`, so each step adds
/// `ds sum_j b_j amp exp(i k (s_n + c_j ds))`.
pub fn direct_period_defect(tab: &ButcherTableau, k: i32, amp: f64, steps: usize, direction: i32) -> f64 {
    let ds = f64::from(direction.signum()) * 2.0 * PI / steps as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for n in 0..steps {
        for (b, c) in tab.weights().iter().zip(tab.abscissas()) {
            let arg = f64::from(k) * (n as f64 + c) * ds;
            re += ds * b * amp * arg.cos();
            im += ds * b * amp * arg.sin();
        }
    }
    re.hypot(im)
}

/// Coefficients of a random smooth oscillatory delay field on `dim` components.
#[derive(Debug, Clone)]
pub struct RandomField {
    pub dim: usize,
    pub own: Vec<f64>,
    pub delayed: Vec<f64>,
    pub fast: Vec<f64>,
    pub slow: Vec<f64>,
    pub cross: Vec<f64>,
    pub history: Vec<f64>,
}

impl RandomField {
    pub fn new(seed: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize, lo: f64, hi: f64| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<f64>>();
        Self {
            dim,
            own: draw(dim, -1.0, 0.5),
            delayed: draw(dim, -1.0, 1.0),
            fast: draw(dim, -2.0, 2.0),
            slow: draw(dim, -0.5, 0.5),
            cross: draw(dim, -0.3, 0.3),
            history: draw(dim, 0.2, 1.5),
        }
    }

    /// `f_i = own_i x_i + delayed_i xd_i + fast_i sin(phase) (1 + x_i^2 / 4)
    ///       + slow_i cos(t) + cross_i x_{i+1} xd_i`.
    pub fn eval(&self, x: &[f64], xd: &[f64], t: f64, phase: f64, out: &mut [f64]) {
        for i in 0..self.dim {
            let next = x[(i + 1) % self.dim];
            out[i] = self.own[i] * x[i]
                + self.delayed[i] * xd[i]
                + self.fast[i] * phase.sin() * (1.0 + x[i] * x[i] / 4.0)
                + self.slow[i] * t.cos()
                + self.cross[i] * next * xd[i];
        }
    }

    pub fn history_at(&self, t: f64, out: &mut [f64]) {
        for (o, h) in out.iter_mut().zip(&self.history) {
            *o = h * (1.0 + 0.3 * (3.0 * t).sin());
        }
    }

    pub fn problem(&self, delay: f64, omega: f64, segments: usize) -> OscDdeProblem {
        let me = self.clone();
        let rhs: Arc<dyn OscillatoryRhs> = Arc::new(
            move |x: &[f64], xd: &[f64], t: f64, phase: f64, _omega: f64, out: &mut [f64]| {
                me.eval(x, xd, t, phase, out)
            },
        );
        let me = self.clone();
        let history: Arc<HistoryFn> = Arc::new(move |t: f64, out: &mut [f64]| me.history_at(t, out));
        OscDdeProblem::new(self.dim, delay, omega, segments, rhs, history).unwrap()
    }
}

/// Builds the stacked single-interval system whose block `l` is segment `l + 1`
/// of `problem`, started from the chain values of `sequential`.
pub fn stacked_problem(
    field: &RandomField,
    problem: &OscDdeProblem,
    case: &CaseInfo,
    sequential: &StroboscopicSolution,
) -> OscDdeProblem {
    let dim = field.dim;
    let blocks = problem.segments();
    let tau = problem.delay();
    let offsets: Vec<f64> = (1..=blocks).map(|ell| phase_offset(problem, case, ell)).collect();
    let starts: Vec<Vec<f64>> = sequential.segments[..blocks - 1]
        .iter()
        .map(|s| s.chain_value().to_vec())
        .collect();
    let f = field.clone();
    let rhs: Arc<dyn OscillatoryRhs> = Arc::new(
        move |x: &[f64], xd: &[f64], t: f64, phase: f64, _omega: f64, out: &mut [f64]| {
            for b in 0..blocks {
                let xb = &x[b * dim..(b + 1) * dim];
                let delayed = if b == 0 { &xd[..dim] } else { &x[(b - 1) * dim..b * dim] };
                f.eval(
                    xb,
                    delayed,
                    (b as f64) * tau + t,
                    offsets[b] + phase,
                    &mut out[b * dim..(b + 1) * dim],
                );
            }
        },
    );
    let f = field.clone();
    let history: Arc<HistoryFn> = Arc::new(move |t: f64, out: &mut [f64]| {
        f.history_at(t, &mut out[..dim]);
        for (b, start) in starts.iter().enumerate() {
            out[(b + 1) * dim..(b + 2) * dim].copy_from_slice(start);
        }
    });
    OscDdeProblem::new(dim * blocks, tau, problem.omega(), 1, rhs, history).unwrap()
}

/// Largest componentwise difference between the sequential segmented solve
/// and the solve of the stacked system, over every macro node and tail end.
pub fn stacked_equivalence_defect(seed: u64, dim: usize, segments: usize, omega: f64, cfg: &SamConfig) -> f64 {
    let field = RandomField::new(seed, dim);
    let problem = field.problem(0.5, omega, segments);
    let case = classify_case(&problem, 1e-9).unwrap();
    let sequential = solve_with_case(&problem, cfg, &case).unwrap();
    let stacked = stacked_problem(&field, &problem, &case, &sequential);
    let stacked_case = classify_case(&stacked, 1e-9).unwrap();
    let joint = solve_with_case(&stacked, cfg, &stacked_case).unwrap();
    let mut worst = 0.0f64;
    for (b, seg) in sequential.segments.iter().enumerate() {
        for (n, x) in seg.values.iter().enumerate() {
            let y = &joint.segments[0].values[n][b * dim..(b + 1) * dim];
            for (a, c) in x.iter().zip(y) {
                worst = worst.max((a - c).abs());
            }
        }
        if let (Some(x), Some(y)) = (&seg.tail_end, &joint.segments[0].tail_end) {
            for (a, c) in x.iter().zip(&y[b * dim..(b + 1) * dim]) {
                worst = worst.max((a - c).abs());
            }
        }
    }
    worst
}
