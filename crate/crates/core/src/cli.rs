//! Command-line front end. Every subcommand writes CSV to stdout or `--out`
//! and diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 internal failure or failed property check,
//! 2 validity failure, 3 bad arguments, 4 numerical blow-up.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::{self, BenchmarkError, ToggleParams};
use crate::problem::{classify_case, CaseInfo, CaseKind, OscDdeProblem, ProblemError, DEFAULT_CASE_TOL};
use crate::reference::{
    endpoint_error, max_strobo_error, observed_order, reference_solve, richardson_error_estimate, ReferenceError,
    ReferenceSolution,
};
use crate::sam::{solve_with_case, validity_check, SamConfig, SamError, SamMethod, StroboscopicSolution};
use crate::tableau::{alias_defect, is_alias, quadrature_exactness_check, ButcherTableau, TrigMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDITY: i32 = 2;
pub const EXIT_BAD_ARGS: i32 = 3;
pub const EXIT_BLOW_UP: i32 = 4;

/// Reference steps per fast period used when `--ref-K` is absent.
pub const AUTO_REF_STEPS_PER_PERIOD: usize = 512;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("{0}")]
    Validity(String),
    #[error("{0}")]
    BlowUp(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadArgs(_) => EXIT_BAD_ARGS,
            CliError::Validity(_) => EXIT_VALIDITY,
            CliError::BlowUp(_) => EXIT_BLOW_UP,
            CliError::Failed(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl From<SamError> for CliError {
    fn from(e: SamError) -> Self {
        match e {
            SamError::Validity(_) => CliError::Validity(e.to_string()),
            SamError::NonFinite { .. } => CliError::BlowUp(e.to_string()),
            SamError::Problem(_) | SamError::Config(_) | SamError::CaseMismatch { .. } => {
                CliError::BadArgs(e.to_string())
            }
            SamError::Provider { .. } | SamError::Stencil(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<ReferenceError> for CliError {
    fn from(e: ReferenceError) -> Self {
        match e {
            ReferenceError::NonFinite { .. } => CliError::BlowUp(format!("reference: {e}")),
            ReferenceError::TooFewSteps(_) | ReferenceError::BadComponent { .. } | ReferenceError::Problem(_) => {
                CliError::BadArgs(format!("reference: {e}"))
            }
            _ => CliError::Failed(format!("reference: {e}")),
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::BadArgs(e.to_string())
    }
}

impl From<BenchmarkError> for CliError {
    fn from(e: BenchmarkError) -> Self {
        CliError::BadArgs(e.to_string())
    }
}

/// A fast frequency given as `<number>` or `<number>pi` (`16pi` is `16 * PI`).
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaToken {
    pub text: String,
    pub value: f64,
}

impl FromStr for OmegaToken {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim().to_ascii_lowercase();
        let value = match text.strip_suffix("pi").or_else(|| text.strip_suffix('π')) {
            Some(prefix) => {
                let prefix = prefix.trim_end_matches('*');
                let factor = if prefix.is_empty() {
                    1.0
                } else {
                    prefix.parse::<f64>().map_err(|_| format!("bad frequency `{s}`"))?
                };
                factor * PI
            }
            None => text.parse::<f64>().map_err(|_| format!("bad frequency `{s}`"))?,
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("frequency must be positive and finite, got `{s}`"));
        }
        Ok(Self { text, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemName {
    Toggle,
    ScaledToggle,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseChoice {
    Auto,
    Force1,
    Force2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricName {
    Strobo,
    Endpoint,
}

#[derive(Debug, Parser)]
#[command(
    name = "samdde",
    version,
    about = "Stroboscopic averaging solver for delay equations with fast periodic forcing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration and print the macro grid of every segment.
    Solve(SolveArgs),
    /// Error grid with rows N and columns omega.
    Table(GridArgs),
    /// Observed orders along grid columns and rows, with work units.
    Order(GridArgs),
    /// Whole-period exactness and alias checks of the built-in tableaus.
    Propcheck(PropcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "toggle")]
    pub problem: ProblemName,
    #[arg(long, default_value = "sam-rk4")]
    pub method: SamMethod,
    /// Micro steps per fast period (default 2N).
    #[arg(long = "micro-per-period")]
    pub micro_per_period: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    pub case: CaseChoice,
    /// Number of delay intervals in the horizon.
    #[arg(long, default_value_t = benchmarks::DEFAULT_SEGMENTS)]
    pub segments: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub omega: OmegaToken,
    #[arg(long = "N", default_value_t = 1)]
    pub macro_steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub omega: Vec<OmegaToken>,
    #[arg(long = "N", value_delimiter = ',', default_value = "1,2,4,8")]
    pub macro_steps: Vec<usize>,
    #[arg(long, value_enum, default_value = "strobo")]
    pub metric: MetricName,
    /// 1-based solution component.
    #[arg(long, default_value_t = 1)]
    pub component: usize,
    /// Reference steps per delay interval (default: 512 per fast period).
    #[arg(long = "ref-K")]
    pub ref_k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PropcheckArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_ARGS } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stderr).and_then(|csv| emit(&csv, a.common.out.as_ref(), stdout)),
        Command::Table(a) => cmd_table(a, stderr).and_then(|csv| emit(&csv, a.common.out.as_ref(), stdout)),
        Command::Order(a) => cmd_order(a, stderr).and_then(|csv| emit(&csv, a.common.out.as_ref(), stdout)),
        Command::Propcheck(a) => {
            let report = propcheck_rows();
            let csv = propcheck_csv(&report);
            emit(&csv, a.out.as_ref(), stdout).and_then(|_| {
                let worst = report.iter().filter(|r| !r.pass).count();
                let _ = writeln!(stderr, "propcheck: {} checks, {} failed", report.len(), worst);
                if worst == 0 {
                    Ok(())
                } else {
                    Err(CliError::Failed(format!("{worst} property checks failed")))
                }
            })
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(csv: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => stdout.write_all(csv.as_bytes())?,
    }
    Ok(())
}

/// Builds the named benchmark at frequency `omega`.
pub fn build_problem(name: ProblemName, omega: f64, segments: usize) -> Result<OscDdeProblem, CliError> {
    let params = ToggleParams::default();
    Ok(match name {
        ProblemName::Toggle => benchmarks::toggle_problem(&params, omega, segments)?,
        ProblemName::ScaledToggle => benchmarks::scaled_toggle_problem(&params, omega, segments)?,
        ProblemName::Synthetic => benchmarks::synthetic_quadrature_problem(
            &[TrigMode { k: 1, amp: 1.0 }, TrigMode { k: 2, amp: 0.5 }],
            1.0,
            1.0,
            params.tau,
            omega,
            segments,
        )?,
    })
}

fn resolve_case(problem: &OscDdeProblem, choice: CaseChoice) -> Result<CaseInfo, CliError> {
    let case = classify_case(problem, DEFAULT_CASE_TOL)?;
    Ok(match choice {
        CaseChoice::Auto => case,
        CaseChoice::Force1 => case.forced(CaseKind::CaseI, problem.delay()),
        CaseChoice::Force2 => case.forced(CaseKind::CaseII, problem.delay()),
    })
}

fn config(common: &CommonArgs, macro_steps: usize) -> Result<SamConfig, CliError> {
    if macro_steps == 0 {
        return Err(CliError::BadArgs("--N entries must be positive".into()));
    }
    let cfg = SamConfig::for_method(common.method, macro_steps);
    Ok(match common.micro_per_period {
        Some(0) => return Err(CliError::BadArgs("--micro-per-period must be positive".into())),
        Some(m) => cfg.with_micro_steps(m),
        None => cfg,
    })
}

fn warn_non_power_of_two(ns: &[usize], stderr: &mut dyn Write) {
    for &n in ns {
        if n > 0 && !n.is_power_of_two() {
            let _ = writeln!(stderr, "warning: N={n} is not a power of two");
        }
    }
}

pub fn cmd_solve(args: &SolveArgs, stderr: &mut dyn Write) -> Result<String, CliError> {
    warn_non_power_of_two(&[args.macro_steps], stderr);
    let problem = build_problem(args.common.problem, args.omega.value, args.common.segments)?;
    let case = resolve_case(&problem, args.common.case)?;
    let cfg = config(&args.common, args.macro_steps)?;
    let sol = solve_with_case(&problem, &cfg, &case)?;
    Ok(solution_csv(&problem, &sol))
}

/// CSV of a solution: segment 0 holds the history sampled on the macro grid
/// of `[-tau, 0]`; a Case II segment ends with a `tail` row at its right end.
pub fn solution_csv(problem: &OscDdeProblem, sol: &StroboscopicSolution) -> String {
    let dim = problem.dim();
    let mut s = String::from("segment,n,t");
    for i in 1..=dim {
        let _ = write!(s, ",x{i}");
    }
    s.push('\n');
    let row = |s: &mut String, seg: usize, n: &str, t: f64, x: &[f64]| {
        let _ = write!(s, "{seg},{n},{t:e}");
        for v in x {
            let _ = write!(s, ",{v:e}");
        }
        s.push('\n');
    };
    for n in 0..=sol.macro_steps {
        let t = -sol.delay + sol.local_time(n);
        let x = problem.history_eval(t).unwrap_or_else(|_| vec![f64::NAN; dim]);
        row(&mut s, 0, &n.to_string(), t, &x);
    }
    for (i, seg) in sol.segments.iter().enumerate() {
        let ell = i + 1;
        for (n, x) in seg.values.iter().enumerate() {
            row(&mut s, ell, &n.to_string(), sol.absolute_time(ell, n), x);
        }
        if let Some(end) = &seg.tail_end {
            row(&mut s, ell, "tail", ell as f64 * sol.delay, end);
        }
    }
    s
}

/// Reference steps per delay: `AUTO_REF_STEPS_PER_PERIOD` per fast period,
/// rounded up to a multiple of every `N` so stroboscopic macro nodes fall on
/// the reference grid.
pub fn auto_reference_steps(problem: &OscDdeProblem, ns: &[usize]) -> usize {
    let periods = (problem.delay() / problem.period() - 1e-9).ceil().max(1.0) as usize;
    let base = periods * AUTO_REF_STEPS_PER_PERIOD;
    let lcm = ns.iter().fold(1usize, |acc, &n| if n == 0 { acc } else { lcm(acc, n) });
    base.div_ceil(lcm) * lcm
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// One `(N, omega)` entry of an error grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Value {
        error: f64,
        work_units: u64,
    },
    /// Rejected by the validity check.
    Invalid,
    Failed(String),
}

impl Cell {
    pub fn csv(&self) -> String {
        match self {
            Cell::Value { error, .. } => format_sci(*error),
            Cell::Invalid => "***".into(),
            Cell::Failed(_) => "ERR".into(),
        }
    }

    pub fn error(&self) -> Option<f64> {
        match self {
            Cell::Value { error, .. } => Some(*error),
            _ => None,
        }
    }
}

/// Scientific notation with 6 significant digits.
pub fn format_sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// Grid of cells plus the per-column reference data.
#[derive(Debug, Clone)]
pub struct ErrorGrid {
    pub omegas: Vec<OmegaToken>,
    pub ns: Vec<usize>,
    /// `cells[i][j]` for `ns[i]`, `omegas[j]`.
    pub cells: Vec<Vec<Cell>>,
    /// Reference steps and Richardson error estimate per column.
    pub references: Vec<Result<(usize, f64), String>>,
}

pub fn compute_grid(args: &GridArgs) -> Result<ErrorGrid, CliError> {
    if args.macro_steps.is_empty() || args.macro_steps.contains(&0) {
        return Err(CliError::BadArgs("--N needs positive entries".into()));
    }
    for &n in &args.macro_steps {
        config(&args.common, n)?;
    }
    let problems = args
        .omega
        .iter()
        .map(|o| build_problem(args.common.problem, o.value, args.common.segments))
        .collect::<Result<Vec<_>, _>>()?;
    let component = args
        .component
        .checked_sub(1)
        .filter(|&c| c < problems[0].dim())
        .ok_or_else(|| {
            CliError::BadArgs(format!(
                "--component must be in 1..={}, got {}",
                problems[0].dim(),
                args.component
            ))
        })?;
    if args.ref_k.is_some_and(|k| k < 2) {
        return Err(CliError::BadArgs("--ref-K must be at least 2".into()));
    }

    // One reference (and its half-resolution companion) per column.
    let references: Vec<Result<(ReferenceSolution, f64), String>> = problems
        .par_iter()
        .map(|p| {
            let k = args.ref_k.unwrap_or_else(|| auto_reference_steps(p, &args.macro_steps));
            let fine = reference_solve(p, k).map_err(|e| e.to_string())?;
            let floor = if k.is_multiple_of(2) && k >= 4 {
                let coarse = reference_solve(p, k / 2).map_err(|e| e.to_string())?;
                richardson_error_estimate(&coarse, &fine, component).map_err(|e| e.to_string())?
            } else {
                f64::NAN
            };
            Ok((fine, floor))
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..args.macro_steps.len())
        .flat_map(|i| (0..problems.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<Cell> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let reference = match &references[j] {
                Ok((r, _)) => r,
                Err(e) => return Cell::Failed(e.clone()),
            };
            grid_cell(
                &problems[j],
                &args.common,
                args.macro_steps[i],
                args.metric,
                component,
                reference,
            )
        })
        .collect();
    let mut cells = vec![Vec::with_capacity(problems.len()); args.macro_steps.len()];
    for ((i, _), cell) in jobs.into_iter().zip(flat) {
        cells[i].push(cell);
    }
    Ok(ErrorGrid {
        omegas: args.omega.clone(),
        ns: args.macro_steps.clone(),
        cells,
        references: references
            .into_iter()
            .map(|r| r.map(|(sol, floor)| (sol.steps, floor)))
            .collect(),
    })
}

fn grid_cell(
    problem: &OscDdeProblem,
    common: &CommonArgs,
    n: usize,
    metric: MetricName,
    component: usize,
    reference: &ReferenceSolution,
) -> Cell {
    let run = || -> Result<Cell, String> {
        let case = resolve_case(problem, common.case).map_err(|e| e.to_string())?;
        let cfg = config(common, n).map_err(|e| e.to_string())?;
        if validity_check(problem, &cfg, &case).is_err() {
            return Ok(Cell::Invalid);
        }
        let sol = solve_with_case(problem, &cfg, &case).map_err(|e| e.to_string())?;
        let report = match metric {
            MetricName::Strobo => max_strobo_error(&sol, reference, component),
            MetricName::Endpoint => endpoint_error(&sol, reference, component),
        }
        .map_err(|e| e.to_string())?;
        Ok(Cell::Value {
            error: report.value,
            work_units: sol.work_units,
        })
    };
    run().unwrap_or_else(Cell::Failed)
}

fn grid_diagnostics(grid: &ErrorGrid, stderr: &mut dyn Write) {
    for (o, r) in grid.omegas.iter().zip(&grid.references) {
        match r {
            Ok((k, floor)) => {
                let _ = writeln!(stderr, "# omega={} reference K={k} estimated error={floor:.3e}", o.text);
            }
            Err(e) => {
                let _ = writeln!(stderr, "# omega={} reference failed: {e}", o.text);
            }
        }
    }
    for (n, row) in grid.ns.iter().zip(&grid.cells) {
        for (o, cell) in grid.omegas.iter().zip(row) {
            if let Cell::Failed(e) = cell {
                let _ = writeln!(stderr, "# N={n} omega={}: {e}", o.text);
            }
        }
    }
}

pub fn cmd_table(args: &GridArgs, stderr: &mut dyn Write) -> Result<String, CliError> {
    warn_non_power_of_two(&args.macro_steps, stderr);
    let grid = compute_grid(args)?;
    grid_diagnostics(&grid, stderr);
    Ok(table_csv(&grid))
}

pub fn table_csv(grid: &ErrorGrid) -> String {
    let mut s = String::from("N");
    for o in &grid.omegas {
        let _ = write!(s, ",{}", o.text);
    }
    s.push('\n');
    for (n, row) in grid.ns.iter().zip(&grid.cells) {
        let _ = write!(s, "{n}");
        for cell in row {
            let _ = write!(s, ",{}", cell.csv());
        }
        s.push('\n');
    }
    s
}

pub fn cmd_order(args: &GridArgs, stderr: &mut dyn Write) -> Result<String, CliError> {
    warn_non_power_of_two(&args.macro_steps, stderr);
    let grid = compute_grid(args)?;
    grid_diagnostics(&grid, stderr);
    Ok(order_csv(&grid))
}

fn fit_cell(points: &[(f64, f64)]) -> (String, String) {
    match observed_order(points) {
        Ok(fit) => (format!("{:.4}", fit.slope), format!("{:.4}", fit.residual)),
        Err(_) => ("NA".into(), "NA".into()),
    }
}

/// Rows of kind `cell` (one per grid entry), `N-slope` and `work-slope` (one
/// per column) and `omega-slope` (one per row). Cells whose error is not ten
/// times above the column's reference error estimate are left out of fits.
pub fn order_csv(grid: &ErrorGrid) -> String {
    let mut s = String::from("kind,omega,N,work_units,error,slope,residual\n");
    let floor = |j: usize| grid.references[j].as_ref().map(|r| r.1).unwrap_or(f64::NAN);
    let usable = |j: usize, e: f64| floor(j).is_nan() || floor(j) <= 0.0 || e > 10.0 * floor(j);
    for (n, row) in grid.ns.iter().zip(&grid.cells) {
        for (o, cell) in grid.omegas.iter().zip(row) {
            let (work, err) = match cell {
                Cell::Value { error, work_units } => (work_units.to_string(), format_sci(*error)),
                other => ("NA".into(), other.csv()),
            };
            let _ = writeln!(s, "cell,{},{n},{work},{err},NA,NA", o.text);
        }
    }
    for (j, o) in grid.omegas.iter().enumerate() {
        let mut by_n = Vec::new();
        let mut by_work = Vec::new();
        for (i, &n) in grid.ns.iter().enumerate() {
            if let Cell::Value { error, work_units } = grid.cells[i][j] {
                if usable(j, error) {
                    by_n.push((n as f64, error));
                    by_work.push((work_units as f64, error));
                }
            }
        }
        let (slope, res) = fit_cell(&by_n);
        let _ = writeln!(s, "N-slope,{},NA,NA,NA,{slope},{res}", o.text);
        let (slope, res) = fit_cell(&by_work);
        let _ = writeln!(s, "work-slope,{},NA,NA,NA,{slope},{res}", o.text);
    }
    for (i, &n) in grid.ns.iter().enumerate() {
        let points: Vec<(f64, f64)> = grid
            .omegas
            .iter()
            .enumerate()
            .filter_map(|(j, o)| grid.cells[i][j].error().filter(|&e| usable(j, e)).map(|e| (o.value, e)))
            .collect();
        let (slope, res) = fit_cell(&points);
        let _ = writeln!(s, "omega-slope,NA,{n},NA,NA,{slope},{res}");
    }
    s
}

/// One line of the exactness report.
#[derive(Debug, Clone, PartialEq)]
pub struct PropRow {
    pub tableau: String,
    pub steps: usize,
    pub direction: i32,
    /// Mode list, e.g. `3` or `1+2+5`.
    pub modes: String,
    pub alias: bool,
    pub defect: f64,
    /// Closed-form alias defect; zero for non-aliased modes.
    pub expected: f64,
    pub pass: bool,
}

pub const PROPCHECK_TOL: f64 = 1e-12;

/// Runs the whole-period exactness suite for the built-in tableaus with
/// `steps` in {1, 4, 8, 16}, both directions and modes `1..=2 steps`.
pub fn propcheck_rows() -> Vec<PropRow> {
    let tableaus = [
        ButcherTableau::rk2_midpoint(),
        ButcherTableau::rk3_heun(),
        ButcherTableau::rk4_classical(),
    ];
    let mut rows = Vec::new();
    for tab in &tableaus {
        for steps in [1usize, 4, 8, 16] {
            for direction in [1, -1] {
                let mut push = |modes: &[TrigMode], alias: bool, expected: f64| {
                    let defect = quadrature_exactness_check(tab, modes, steps, direction);
                    let label = modes.iter().map(|m| m.k.to_string()).collect::<Vec<_>>().join("+");
                    rows.push(PropRow {
                        tableau: tab.name().to_string(),
                        steps,
                        direction,
                        modes: label,
                        alias,
                        defect,
                        expected,
                        pass: (defect - expected).abs() <= PROPCHECK_TOL,
                    });
                };
                let kmax = 2 * steps as i32;
                for k in (-kmax..=kmax).filter(|&k| k != 0) {
                    let mode = TrigMode { k, amp: 1.0 };
                    if is_alias(k, steps) {
                        push(&[mode], true, alias_defect(tab, mode, steps, direction));
                    } else {
                        push(&[mode], false, 0.0);
                    }
                }
                let mixed: Vec<TrigMode> = (1..=kmax)
                    .filter(|&k| !is_alias(k, steps))
                    .map(|k| TrigMode {
                        k,
                        amp: 1.0 / f64::from(k),
                    })
                    .collect();
                if !mixed.is_empty() {
                    push(&mixed, false, 0.0);
                }
            }
        }
    }
    rows
}

pub fn propcheck_csv(rows: &[PropRow]) -> String {
    let mut s = String::from("tableau,steps,direction,modes,alias,defect,expected,pass\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6e},{:.6e},{}",
            r.tableau, r.steps, r.direction, r.modes, r.alias, r.defect, r.expected, r.pass
        );
    }
    s
}
