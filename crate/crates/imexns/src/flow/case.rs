//! Run configuration and execution of flow cases.
//!
//! Config files are `key = value` lines with `#` comments. Recognized keys:
//!
//! | key         | meaning                                            | default |
//! |-------------|----------------------------------------------------|---------|
//! | `case`      | `tgp` \| `vvp` \| `custom`                         | `tgp`   |
//! | `method`    | comma-separated method names                       | `BDF2`  |
//! | `dt`        | comma-separated step sizes (floats or `2^-k`)      | `2^-7`  |
//! | `t_final`   | integration horizon                                | `0.25`  |
//! | `grid`      | points per axis (even, ≥ 4)                        | by case |
//! | `nu0`       | base viscosity                                     | by case |
//! | `nu1`       | speed-dependent viscosity gain                     | by case |
//! | `sdc_M`     | deferred-correction polynomial degree              | `3`     |
//! | `sdc_K`     | deferred-correction sweep count                    | `3`     |
//! | `predictor` | deferred-correction predictor tableau (short name) | `Eu`    |
//! | `seed`      | recorded in run metadata (reserved)                | unset   |
//!
//! The presets: `tgp` is the 2D traveling Taylor–Green vortex with constant
//! viscosity on a 64² grid (an exact unforced solution); `vvp` is the 3D
//! manufactured vortex array with speed-dependent viscosity on 24³; `custom`
//! is the Taylor–Green family with free grid/viscosity/horizon.

use std::fmt::Write as _;
use std::time::Instant;

use crate::flow::exact::{tg_exact, vv_exact, VV_MAX_SPEED};
use crate::flow::steppers::{FlowMethod, FlowStepper};
use crate::flow::{FlowProblem, FlowState, Forcing, NuModel, VecField};
use crate::spectral::Grid;
use crate::tableaux::TableauId;
use crate::{Error, Result};

/// Preset selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    TaylorGreen,
    VortexArray,
    Custom,
}

impl CaseKind {
    fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tgp" => Ok(CaseKind::TaylorGreen),
            "vvp" => Ok(CaseKind::VortexArray),
            "custom" => Ok(CaseKind::Custom),
            other => Err(Error::Config(format!(
                "unknown case '{other}' (expected tgp, vvp, or custom)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::TaylorGreen => "tgp",
            CaseKind::VortexArray => "vvp",
            CaseKind::Custom => "custom",
        }
    }
}

/// Fully parsed run configuration (defaults applied).
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: CaseKind,
    pub methods: Vec<String>,
    pub dts: Vec<f64>,
    pub t_final: f64,
    pub grid_n: usize,
    pub nu0: f64,
    pub nu1: f64,
    pub sdc_m: usize,
    pub sdc_k: usize,
    pub predictor: TableauId,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseKind::TaylorGreen,
            methods: vec!["BDF2".to_string()],
            dts: vec![2f64.powi(-7)],
            t_final: 0.25,
            grid_n: 0, // resolved per case
            nu0: f64::NAN,
            nu1: f64::NAN,
            sdc_m: 3,
            sdc_k: 3,
            predictor: TableauId::Euler,
            seed: None,
        }
    }
}

/// Splits a comma-separated list, ignoring commas inside parentheses (so
/// method names like `SDC-Eu(3,5)` survive).
/// Splits a comma-separated list, ignoring commas inside parentheses (so
/// composite method names like `SDC-Eu(3,5)` survive).
pub fn split_list(value: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for ch in value.chars() {
        match ch {
            '(' => {
                depth += 1;
                current.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(ch);
            }
            ',' if depth == 0 => {
                items.push(current.trim().to_string());
                current.clear();
            }
            _ => current.push(ch),
        }
    }
    items.push(current.trim().to_string());
    items
}

/// Parses one step size: a float literal or a power `2^-k`/`2^k`.
fn parse_dt(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = if let Some(exp) = s.strip_prefix("2^") {
        let e: i32 = exp
            .parse()
            .map_err(|_| Error::Config(format!("bad step-size exponent '{s}'")))?;
        2f64.powi(e)
    } else {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad step size '{s}'")))?
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got '{s}'")));
    }
    Ok(value)
}

/// Parses `key = value` text with `#` comments into a [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut grid_set = false;
    let (mut nu0_set, mut nu1_set) = (false, false);

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value, got '{line}'", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config(format!("line {}: empty value for '{key}'", lineno + 1)));
        }
        if seen.iter().any(|k| k == key) {
            return Err(Error::Config(format!("duplicate key '{key}'")));
        }
        seen.push(key.to_string());

        let parse_f64 = |what: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad {what} '{value}'")))
        };
        match key {
            "case" => cfg.case = CaseKind::parse(value)?,
            "method" => {
                cfg.methods = split_list(value);
                if cfg.methods.iter().any(|m| m.is_empty()) {
                    return Err(Error::Config("empty method name".into()));
                }
            }
            "dt" => {
                cfg.dts = split_list(value)
                    .iter()
                    .map(|s| parse_dt(s))
                    .collect::<Result<_>>()?;
            }
            "t_final" => {
                cfg.t_final = parse_f64("t_final")?;
                if !(cfg.t_final > 0.0) {
                    return Err(Error::Config("t_final must be positive".into()));
                }
            }
            "grid" => {
                cfg.grid_n = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad grid size '{value}'")))?;
                grid_set = true;
            }
            "nu0" => {
                cfg.nu0 = parse_f64("nu0")?;
                nu0_set = true;
            }
            "nu1" => {
                cfg.nu1 = parse_f64("nu1")?;
                nu1_set = true;
            }
            "sdc_M" => {
                cfg.sdc_m = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sdc_M '{value}'")))?;
            }
            "sdc_K" => {
                cfg.sdc_k = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad sdc_K '{value}'")))?;
            }
            "predictor" => {
                cfg.predictor = TableauId::from_short_name(value)
                    .or_else(|_| TableauId::from_name(value))?;
            }
            "seed" => {
                cfg.seed = Some(
                    value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed '{value}'")))?,
                );
            }
            other => {
                return Err(Error::Config(format!("unknown key '{other}'")));
            }
        }
    }

    // Per-case defaults and validation.
    match cfg.case {
        CaseKind::TaylorGreen | CaseKind::Custom => {
            if !grid_set {
                cfg.grid_n = 64;
            }
            if !nu0_set {
                cfg.nu0 = 0.02;
            }
            if !nu1_set {
                cfg.nu1 = 0.0;
            }
            if cfg.nu1 != 0.0 {
                return Err(Error::Config(
                    "the Taylor-Green cases use constant viscosity; nu1 must be 0".into(),
                ));
            }
        }
        CaseKind::VortexArray => {
            if !grid_set {
                cfg.grid_n = 24;
            }
            if !nu0_set {
                cfg.nu0 = 0.01;
            }
            if !nu1_set {
                cfg.nu1 = 0.01;
            }
            if cfg.nu1 < 0.0 {
                return Err(Error::Config("nu1 must be nonnegative".into()));
            }
        }
    }
    if !(cfg.nu0 > 0.0) {
        return Err(Error::Config("nu0 must be positive".into()));
    }
    Ok(cfg)
}

/// Exact velocity reference of a case.
#[derive(Clone, Copy, Debug)]
enum ExactRef {
    TaylorGreen { nu: f64 },
    VortexArray,
}

/// An executable case: problem, exact reference, and instability ceiling.
pub struct FlowCase {
    pub name: String,
    pub problem: FlowProblem,
    /// Largest speed of the exact solution; the velocity scale in reported
    /// CFL numbers.
    pub reference_speed: f64,
    /// A run is declared unstable once its maximum speed exceeds this.
    pub instability_threshold: f64,
    exact: ExactRef,
}

impl FlowCase {
    /// Builds the executable case from a parsed configuration.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        match cfg.case {
            CaseKind::TaylorGreen | CaseKind::Custom => {
                let grid = Grid::uniform(2, cfg.grid_n, 1.0, -0.5)?;
                let problem =
                    FlowProblem::new(grid, NuModel::Constant(cfg.nu0), Forcing::None);
                // Largest exact speed: |v|² = (1+u)² + (1−w)² maximized at
                // u = 1, w = 0 over the reachable (u, w) set, giving √5.
                let v_ref = 5f64.sqrt();
                Ok(FlowCase {
                    name: cfg.case.name().to_string(),
                    problem,
                    reference_speed: v_ref,
                    instability_threshold: 10.0 * v_ref,
                    exact: ExactRef::TaylorGreen { nu: cfg.nu0 },
                })
            }
            CaseKind::VortexArray => {
                let grid = Grid::uniform(3, cfg.grid_n, 1.0, -0.5)?;
                let problem = FlowProblem::new(
                    grid,
                    NuModel::SpeedDependent {
                        nu0: cfg.nu0,
                        nu1: cfg.nu1,
                        v_max: VV_MAX_SPEED,
                    },
                    Forcing::VortexArray { nu0: cfg.nu0, nu1: cfg.nu1 },
                );
                // Tighter configured ceiling: exact maximum speed plus half
                // of it. The manufactured solution never exceeds 2, so any
                // excursion past 3 is a genuine blow-up in progress.
                Ok(FlowCase {
                    name: cfg.case.name().to_string(),
                    problem,
                    reference_speed: VV_MAX_SPEED,
                    instability_threshold: VV_MAX_SPEED + 0.5 * VV_MAX_SPEED,
                    exact: ExactRef::VortexArray,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.problem.grid.dim()
    }

    /// Exact velocity at a physical point (third component unused in 2D).
    pub fn exact_velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        match self.exact {
            ExactRef::TaylorGreen { nu } => {
                let (v, _) = tg_exact(x, t, nu);
                [v[0], v[1], 0.0]
            }
            ExactRef::VortexArray => vv_exact(x, t).0,
        }
    }

    /// Initial state: the exact solution sampled at `t = 0`.
    pub fn initial_state(&self) -> FlowState {
        FlowState {
            t: 0.0,
            v: VecField::sample(&self.problem.grid, |x, a| self.exact_velocity(x, 0.0)[a]),
        }
    }
}

/// One per-step record of a run.
#[derive(Clone, Copy, Debug)]
pub struct StepRow {
    pub t: f64,
    pub rms_error_v: f64,
    pub divergence_max: f64,
}

/// Everything measured during one `(method, dt)` run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<StepRow>,
    /// Velocity error at the final time (last measured error if unstable).
    pub eps_v: f64,
    /// Wall time spent inside the stepper only (no setup, measurement, IO).
    pub twall_s: f64,
    pub unstable: bool,
    pub steps_taken: usize,
    pub helmholtz_iterations: usize,
    pub helmholtz_residual_max: f64,
    pub divergence_max: f64,
}

/// Relative tolerance for the `t_final / dt` divisibility precondition.
const DIVISIBILITY_TOL: f64 = 1e-12;

/// Number of whole steps covering `t_final`, or an error when `dt` does not
/// divide it (to relative tolerance [`DIVISIBILITY_TOL`]).
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    let ratio = t_final / dt;
    let n = ratio.round();
    if n < 1.0 || ((ratio - n) / ratio).abs() > DIVISIBILITY_TOL {
        return Err(Error::InvalidArgument(format!(
            "t_final = {t_final:.17e} is not an integer multiple of dt = {dt:.17e}"
        )));
    }
    Ok(n as usize)
}

/// Runs one method at one step size, recording per-step error and
/// divergence. Instability (non-finite values or speed past the case
/// ceiling) stops the run and flags the output instead of failing.
pub fn run_case(
    case: &FlowCase,
    method: FlowMethod,
    dt: f64,
    t_final: f64,
) -> Result<RunOutput> {
    let n_steps = step_count(t_final, dt)?;
    run_case_steps(case, method, dt, n_steps)
}

/// [`run_case`] with the step count given directly, for drivers (critical-CFL
/// bisection) whose probe step sizes need not divide the horizon.
pub fn run_case_steps(
    case: &FlowCase,
    method: FlowMethod,
    dt: f64,
    n_steps: usize,
) -> Result<RunOutput> {
    let mut stepper = FlowStepper::new(method)?;
    let mut state = case.initial_state();
    let grid = case.problem.grid.clone();
    let d = case.dim();

    let mut rows = Vec::with_capacity(n_steps);
    let mut twall = 0.0f64;
    let mut unstable = false;
    let mut iterations = 0usize;
    let mut residual_max = 0.0f64;
    let mut divergence_max = 0.0f64;
    let mut eps_v = 0.0f64;
    let mut steps_taken = 0usize;

    for _ in 0..n_steps {
        let clock = Instant::now();
        let report = match stepper.step(&case.problem, &mut state, dt) {
            Ok(r) => r,
            Err(Error::SolveDiverged { .. }) => {
                // A diverged implicit solve is an instability symptom, not a
                // configuration error: flag and stop.
                unstable = true;
                break;
            }
            Err(e) => return Err(e),
        };
        twall += clock.elapsed().as_secs_f64();
        steps_taken += 1;
        iterations += report.helmholtz_iterations;
        residual_max = residual_max.max(report.helmholtz_residual_max);
        divergence_max = divergence_max.max(report.divergence_max);

        // Physical-space measurement: error against the exact reference and
        // the stability ceiling, from one shared inverse transform.
        let phys = state.v.to_physical();
        let mut sum = 0.0f64;
        let mut speed2_max = 0.0f64;
        let mut finite = true;
        for i in 0..grid.size() {
            let ve = case.exact_velocity(grid.coords_of(i), state.t);
            let mut speed2 = 0.0;
            for (a, comp) in phys.iter().enumerate() {
                let val = comp[i];
                finite &= val.is_finite();
                sum += (val - ve[a]) * (val - ve[a]);
                speed2 += val * val;
            }
            speed2_max = speed2_max.max(speed2);
        }
        let rms = (sum / (d as f64 * grid.size() as f64)).sqrt();
        rows.push(StepRow {
            t: state.t,
            rms_error_v: rms,
            divergence_max: report.divergence_max,
        });
        eps_v = rms;
        if !finite || speed2_max.sqrt() > case.instability_threshold {
            unstable = true;
            break;
        }
    }

    Ok(RunOutput {
        rows,
        eps_v,
        twall_s: twall,
        unstable,
        steps_taken,
        helmholtz_iterations: iterations,
        helmholtz_residual_max: residual_max,
        divergence_max,
    })
}

/// Formats the per-step error table as CSV (`t,rms_error_v,divergence_max`,
/// every float with 17 significant digits, LF line endings). Byte-identical
/// across repeated runs of the same configuration.
pub fn errors_csv(rows: &[StepRow]) -> String {
    let mut out = String::from("t,rms_error_v,divergence_max\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e}",
            r.t, r.rms_error_v, r.divergence_max
        );
    }
    out
}

/// Formats the run metadata: the resolved configuration, the advective
/// eigenvalue convention behind reported CFL numbers, and solver statistics.
pub fn meta_text(
    cfg: &RunConfig,
    case: &FlowCase,
    method_name: &str,
    dt: f64,
    out: &RunOutput,
) -> String {
    let grid = &case.problem.grid;
    let mut s = String::new();
    let _ = writeln!(s, "case = {}", case.name);
    let _ = writeln!(s, "method = {method_name}");
    let _ = writeln!(s, "dt = {dt:.16e}");
    let _ = writeln!(s, "t_final = {:.16e}", cfg.t_final);
    let _ = writeln!(s, "grid = {}", cfg.grid_n);
    let _ = writeln!(s, "dim = {}", grid.dim());
    let _ = writeln!(s, "nu0 = {:.16e}", cfg.nu0);
    let _ = writeln!(s, "nu1 = {:.16e}", cfg.nu1);
    let _ = writeln!(s, "sdc_M = {}", cfg.sdc_m);
    let _ = writeln!(s, "sdc_K = {}", cfg.sdc_k);
    let _ = writeln!(s, "predictor = {}", cfg.predictor.short_name());
    match cfg.seed {
        Some(seed) => {
            let _ = writeln!(s, "seed = {seed}");
        }
        None => {
            let _ = writeln!(s, "seed = unset");
        }
    }
    let _ = writeln!(s, "instability_threshold = {:.16e}", case.instability_threshold);
    // The advective eigenvalue is estimated spectrally; CFL numbers derived
    // from it use this substitution.
    let _ = writeln!(s, "cfl_eigenvalue = pi*max(n/L) = {:.16e}", grid.max_advective_eigenvalue());
    let _ = writeln!(s, "steps_taken = {}", out.steps_taken);
    let _ = writeln!(s, "unstable = {}", out.unstable);
    let _ = writeln!(s, "eps_v = {:.16e}", out.eps_v);
    let _ = writeln!(s, "divergence_max = {:.16e}", out.divergence_max);
    let _ = writeln!(s, "helmholtz_iterations = {}", out.helmholtz_iterations);
    let _ = writeln!(s, "helmholtz_residual_max = {:.16e}", out.helmholtz_residual_max);
    let _ = writeln!(s, "twall_s = {:.16e}", out.twall_s);
    s
}
