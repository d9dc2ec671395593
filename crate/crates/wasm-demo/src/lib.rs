//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: a toggle-switch solve next to its oracle,
//! the whole-period defect of a Runge–Kutta method on one Fourier mode, and
//! difference weights for a user stencil.

use samdde::reference::{endpoint_error, max_strobo_error, reference_solve};
use samdde::tableau::{alias_defect, is_alias, quadrature_exactness_check, TrigMode};
use samdde::{
    classify_case, scaled_toggle_problem, solve, toggle_problem, ButcherTableau, CaseKind, SamConfig, SamMethod,
    Stencil, ToggleParams,
};
use wasm_bindgen::prelude::*;

/// Oracle steps per fast period; kept modest so the page stays responsive.
const ORACLE_STEPS_PER_PERIOD: usize = 64;

/// Result of [`solve_toggle`]. Arrays are flat, one entry per plotted point.
#[wasm_bindgen]
pub struct ToggleRun {
    macro_t: Vec<f64>,
    macro_x1: Vec<f64>,
    oracle_t: Vec<f64>,
    oracle_x1: Vec<f64>,
    error: f64,
    work_units: f64,
    case_label: String,
}

#[wasm_bindgen]
impl ToggleRun {
    #[wasm_bindgen(getter)]
    pub fn macro_t(&self) -> Vec<f64> {
        self.macro_t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn macro_x1(&self) -> Vec<f64> {
        self.macro_x1.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn oracle_t(&self) -> Vec<f64> {
        self.oracle_t.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn oracle_x1(&self) -> Vec<f64> {
        self.oracle_x1.clone()
    }
    /// Stroboscopic error in Case I, endpoint error in Case II.
    #[wasm_bindgen(getter)]
    pub fn error(&self) -> f64 {
        self.error
    }
    #[wasm_bindgen(getter)]
    pub fn work_units(&self) -> f64 {
        self.work_units
    }
    #[wasm_bindgen(getter)]
    pub fn case_label(&self) -> String {
        self.case_label.clone()
    }
}

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Solves the toggle switch (or its scaled-forcing variant) with the named
/// method and compares `x1` with a fixed-step oracle.
#[wasm_bindgen]
pub fn solve_toggle(omega: f64, macro_steps: usize, method: &str, scaled: bool) -> Result<ToggleRun, JsError> {
    let method: SamMethod = method.parse().map_err(err)?;
    let params = ToggleParams::default();
    let problem = if scaled {
        scaled_toggle_problem(&params, omega, 4)
    } else {
        toggle_problem(&params, omega, 4)
    }
    .map_err(err)?;
    let case = classify_case(&problem, 1e-9).map_err(err)?;
    let sol = solve(&problem, &SamConfig::for_method(method, macro_steps)).map_err(err)?;

    let periods = (problem.delay() / problem.period()).ceil() as usize;
    let mut steps = periods * ORACLE_STEPS_PER_PERIOD;
    steps = steps.div_ceil(macro_steps) * macro_steps;
    let reference = reference_solve(&problem, steps).map_err(err)?;
    let report = match case.kind {
        CaseKind::CaseI => max_strobo_error(&sol, &reference, 0),
        CaseKind::CaseII => endpoint_error(&sol, &reference, 0),
    }
    .map_err(err)?;

    let (mut macro_t, mut macro_x1) = (Vec::new(), Vec::new());
    for (i, seg) in sol.segments.iter().enumerate() {
        for (n, x) in seg.values.iter().enumerate() {
            macro_t.push(sol.absolute_time(i + 1, n));
            macro_x1.push(x[0]);
        }
        if let Some(end) = &seg.tail_end {
            macro_t.push((i + 1) as f64 * sol.delay);
            macro_x1.push(end[0]);
        }
    }
    let (mut oracle_t, mut oracle_x1) = (Vec::new(), Vec::new());
    let stride = (steps / 2000).max(1);
    for ell in 1..=reference.segments() {
        for j in (0..=steps).step_by(stride) {
            oracle_t.push((ell - 1) as f64 * reference.delay + j as f64 * reference.step);
            oracle_x1.push(reference.value(ell, j)[0]);
        }
    }
    Ok(ToggleRun {
        macro_t,
        macro_x1,
        oracle_t,
        oracle_x1,
        error: report.value,
        work_units: sol.work_units as f64,
        case_label: format!("Case {} (tau/T = {:.4})", case.kind, problem.delay() / problem.period()),
    })
}

fn tableau(name: &str) -> Result<ButcherTableau, JsError> {
    match name.to_ascii_lowercase().as_str() {
        "rk2" => Ok(ButcherTableau::rk2_midpoint()),
        "rk3" => Ok(ButcherTableau::rk3_heun()),
        "rk4" => Ok(ButcherTableau::rk4_classical()),
        other => Err(JsError::new(&format!("unknown tableau `{other}`"))),
    }
}

/// `[defect, closed form, aliased]` for `y' = exp(i k s)` integrated over one
/// period with `steps` steps. The closed form is 0 unless the mode aliases.
#[wasm_bindgen]
pub fn period_defect(name: &str, steps: usize, k: i32, backward: bool) -> Result<Vec<f64>, JsError> {
    if steps == 0 || k == 0 {
        return Err(JsError::new("steps and k must be nonzero"));
    }
    let tab = tableau(name)?;
    let direction = if backward { -1 } else { 1 };
    let mode = TrigMode { k, amp: 1.0 };
    let defect = quadrature_exactness_check(&tab, &[mode], steps, direction);
    let alias = is_alias(k, steps);
    let closed = if alias {
        alias_defect(&tab, mode, steps, direction)
    } else {
        0.0
    };
    Ok(vec![defect, closed, if alias { 1.0 } else { 0.0 }])
}

/// Weights of the first-derivative formula on the comma-separated offsets,
/// in ascending offset order.
#[wasm_bindgen]
pub fn stencil_weights(offsets: &str) -> Result<Vec<f64>, JsError> {
    let parsed = offsets
        .split(',')
        .map(|s| s.trim().parse::<i32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(Stencil::derive_weights(&parsed).map_err(err)?.weights().to_vec())
}
