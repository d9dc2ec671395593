//! Explicit Runge–Kutta tableaus and a single-step advancer that keeps every
//! internal stage value.
//!
//! The same stepper drives the macro integration of the averaged field, the
//! micro integrations of the oscillatory segments and the reference oracle.
//! Stage values are always returned because the delayed argument of segment
//! `l` is served, stage for stage, from the stages computed in segment `l - 1`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Construction errors for [`ButcherTableau`].
#[derive(Debug, Error, PartialEq)]
pub enum TableauError {
    #[error("tableau needs at least one stage")]
    Empty,
    #[error("inconsistent sizes: {0}")]
    Shape(String),
    #[error("coefficient a[{row}][{col}] = {value} on or above the diagonal: method is not explicit")]
    NotExplicit { row: usize, col: usize, value: f64 },
    #[error("declared order must be positive")]
    ZeroOrder,
}

/// Explicit Runge–Kutta coefficients `(c, A, b)` with a declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: String,
    abscissas: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
    weights: Vec<f64>,
    declared_order: usize,
}

impl ButcherTableau {
    pub fn new(
        name: impl Into<String>,
        abscissas: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
        weights: Vec<f64>,
        declared_order: usize,
    ) -> Result<Self, TableauError> {
        let s = abscissas.len();
        if s == 0 {
            return Err(TableauError::Empty);
        }
        if weights.len() != s || coefficients.len() != s {
            return Err(TableauError::Shape(format!(
                "{} abscissas, {} weights, {} coefficient rows",
                s,
                weights.len(),
                coefficients.len()
            )));
        }
        for (row, a_row) in coefficients.iter().enumerate() {
            if a_row.len() != s {
                return Err(TableauError::Shape(format!(
                    "row {row} has {} entries, expected {s}",
                    a_row.len()
                )));
            }
            for (col, &value) in a_row.iter().enumerate().skip(row) {
                if value != 0.0 {
                    return Err(TableauError::NotExplicit { row, col, value });
                }
            }
        }
        if declared_order == 0 {
            return Err(TableauError::ZeroOrder);
        }
        Ok(Self {
            name: name.into(),
            abscissas,
            coefficients,
            weights,
            declared_order,
        })
    }

    /// Runge's two-stage midpoint formula.
    pub fn rk2_midpoint() -> Self {
        Self::new(
            "RK2",
            vec![0.0, 0.5],
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            vec![0.0, 1.0],
            2,
        )
        .expect("valid built-in tableau")
    }

    /// Heun's third-order method.
    pub fn rk3_heun() -> Self {
        Self::new(
            "RK3",
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
            vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0 / 3.0, 0.0, 0.0],
                vec![0.0, 2.0 / 3.0, 0.0],
            ],
            vec![0.25, 0.0, 0.75],
            3,
        )
        .expect("valid built-in tableau")
    }

    /// The classical fourth-order method.
    pub fn rk4_classical() -> Self {
        Self::new(
            "RK4",
            vec![0.0, 0.5, 0.5, 1.0],
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
            4,
        )
        .expect("valid built-in tableau")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stage_count(&self) -> usize {
        self.abscissas.len()
    }

    pub fn abscissas(&self) -> &[f64] {
        &self.abscissas
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn declared_order(&self) -> usize {
        self.declared_order
    }

    /// Residuals of the rooted-tree order conditions up to order four, plus
    /// the row-sum condition `c_i = sum_j a_ij`.
    ///
    /// Only conditions of order `<= min(declared_order, 4)` are returned.
    pub fn order_condition_residuals(&self) -> Vec<(&'static str, f64)> {
        let s = self.stage_count();
        let b = &self.weights;
        let c = &self.abscissas;
        let a = &self.coefficients;
        let ac: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a[i][j] * c[j]).sum()).collect();
        let ac2: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a[i][j] * c[j] * c[j]).sum()).collect();
        let aac: Vec<f64> = (0..s).map(|i| (0..s).map(|j| a[i][j] * ac[j]).sum()).collect();
        let dot = |u: &[f64]| -> f64 { b.iter().zip(u).map(|(x, y)| x * y).sum() };

        let mut out = Vec::new();
        let row_sum = (0..s)
            .map(|i| (a[i].iter().sum::<f64>() - c[i]).abs())
            .fold(0.0, f64::max);
        out.push(("c = A 1", row_sum));
        out.push(("sum b = 1", b.iter().sum::<f64>() - 1.0));
        let p = self.declared_order.min(4);
        if p >= 2 {
            out.push(("sum b c = 1/2", dot(c) - 0.5));
        }
        if p >= 3 {
            let c2: Vec<f64> = c.iter().map(|x| x * x).collect();
            out.push(("sum b c^2 = 1/3", dot(&c2) - 1.0 / 3.0));
            out.push(("sum b A c = 1/6", dot(&ac) - 1.0 / 6.0));
        }
        if p >= 4 {
            let c3: Vec<f64> = c.iter().map(|x| x * x * x).collect();
            let cac: Vec<f64> = c.iter().zip(&ac).map(|(x, y)| x * y).collect();
            out.push(("sum b c^3 = 1/4", dot(&c3) - 0.25));
            out.push(("sum b c A c = 1/8", dot(&cac) - 0.125));
            out.push(("sum b A c^2 = 1/12", dot(&ac2) - 1.0 / 12.0));
            out.push(("sum b A A c = 1/24", dot(&aac) - 1.0 / 24.0));
        }
        out
    }
}

impl fmt::Display for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (order {})", self.name, self.declared_order)
    }
}

/// Internal stage times and values produced by one [`rk_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage_times: Vec<f64>,
    pub stage_states: Vec<Vec<f64>>,
}

/// A right-hand side failure tagged with the stage that produced it.
#[derive(Debug, Error)]
#[error("right-hand side failed at stage {stage}: {source}")]
pub struct StageError<E: std::error::Error + 'static> {
    pub stage: usize,
    #[source]
    pub source: E,
}

/// Advances `y` by one explicit Runge–Kutta step of size `dt` (negative `dt`
/// integrates backwards).
///
/// `rhs(stage, t, y, out)` writes the vector field at stage time `t` into
/// `out`; the stage index is passed so callers can pair delayed arguments
/// positionally (RK4 has two stages at `c = 1/2`).
pub fn rk_step<F, E>(
    tab: &ButcherTableau,
    mut rhs: F,
    t: f64,
    y: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, StageRecord), StageError<E>>
where
    F: FnMut(usize, f64, &[f64], &mut [f64]) -> Result<(), E>,
    E: std::error::Error + 'static,
{
    let s = tab.stage_count();
    let dim = y.len();
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut stage_states = Vec::with_capacity(s);
    let mut stage_times = Vec::with_capacity(s);
    for i in 0..s {
        let mut yi = y.to_vec();
        for (j, k) in slopes.iter().enumerate() {
            let a = tab.coefficients[i][j];
            if a != 0.0 {
                for (v, kv) in yi.iter_mut().zip(k) {
                    *v += dt * a * kv;
                }
            }
        }
        let ti = t + tab.abscissas[i] * dt;
        let mut ki = vec![0.0; dim];
        rhs(i, ti, &yi, &mut ki).map_err(|source| StageError { stage: i, source })?;
        slopes.push(ki);
        stage_states.push(yi);
        stage_times.push(ti);
    }
    let mut next = y.to_vec();
    for (b, k) in tab.weights.iter().zip(&slopes) {
        if *b != 0.0 {
            for (v, kv) in next.iter_mut().zip(k) {
                *v += dt * b * kv;
            }
        }
    }
    Ok((
        next,
        StageRecord {
            stage_times,
            stage_states,
        },
    ))
}

/// One Fourier mode `amp * exp(i k s)` of a trigonometric polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode {
    pub k: i32,
    pub amp: f64,
}

/// Integrates `dy/ds = sum amp_k exp(i k s)` over one signed period with `steps`
/// equal steps and returns the endpoint defect `|y_M - y_0|`.
///
/// The exact increment over a period is zero. The complex state is carried as
/// a real pair `(re, im)`.
pub fn quadrature_exactness_check(tab: &ButcherTableau, modes: &[TrigMode], steps: usize, direction: i32) -> f64 {
    assert!(steps >= 1, "at least one step per period");
    let sign = if direction < 0 { -1.0 } else { 1.0 };
    let ds = sign * 2.0 * PI / steps as f64;
    let field = |_: usize, s: f64, _: &[f64], out: &mut [f64]| -> Result<(), std::convert::Infallible> {
        let (mut re, mut im) = (0.0, 0.0);
        for m in modes {
            let arg = m.k as f64 * s;
            re += m.amp * arg.cos();
            im += m.amp * arg.sin();
        }
        out[0] = re;
        out[1] = im;
        Ok(())
    };
    let mut y = vec![0.0, 0.0];
    for step in 0..steps {
        let s = step as f64 * ds;
        let (next, _) = rk_step(tab, field, s, &y, ds).unwrap_or_else(|e| match e.source {});
        y = next;
    }
    y[0].hypot(y[1])
}

/// Closed form of the defect for a single aliased mode (`exp(i k ds) = 1`):
/// `|amp| * |2 pi sum_j b_j exp(i k c_j ds)|`.
pub fn alias_defect(tab: &ButcherTableau, mode: TrigMode, steps: usize, direction: i32) -> f64 {
    let sign = if direction < 0 { -1.0 } else { 1.0 };
    let ds = sign * 2.0 * PI / steps as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (b, c) in tab.weights.iter().zip(&tab.abscissas) {
        let arg = mode.k as f64 * c * ds;
        re += b * arg.cos();
        im += b * arg.sin();
    }
    mode.amp.abs() * 2.0 * PI * re.hypot(im)
}

/// True when `exp(i k ds)` equals one on a grid of `steps` points per period.
pub fn is_alias(k: i32, steps: usize) -> bool {
    k != 0 && (k as i64).rem_euclid(steps as i64) == 0
}
