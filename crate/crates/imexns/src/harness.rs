//! Experiment drivers: convergence sweeps with observed-order estimation,
//! and critical-step-size bisection with CFL reporting.
//!
//! The drivers run either a flow case (see [`crate::flow::case`]) or the
//! scalar model problem `u' = lambda_c u + lambda_d u` treated semi-implicitly,
//! and reduce every run to one [`ConvergenceRecord`]. Policy decisions made
//! here and relied on by the binary:
//!
//! * wall time covers stepping only — setup, error sampling against the
//!   exact reference, and serialization are excluded;
//! * records are sorted by decreasing step size per method, and the observed
//!   order is computed against the previous *stable* row of the same method
//!   (unstable rows are flagged and never enter an order chain);
//! * a row whose error vanishes exactly gets a `NaN` order sentinel rather
//!   than `-inf`;
//! * the `(method, dt)` runs form a work pool executed in parallel when the
//!   `parallel` feature is active, with results assembled in deterministic
//!   `(method, dt)` order regardless of scheduling.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::case::{run_case, run_case_steps, step_count, FlowCase, RunConfig, RunOutput};
use crate::flow::cfl_number;
use crate::flow::steppers::FlowMethod;
use crate::integrators::{bdf2_step, imex_rk_step_const, Bdf2History, RkScheme};
use crate::par;
use crate::scalar::LinearSplit;
use crate::sdc::{sdc_step, SdcConfig};
use crate::tableaux::TableauId;

/// Relative width at which the critical-step bisection stops.
pub const BISECTION_REL_TOL: f64 = 0.02;

/// Blow-up ceiling for model-problem runs, relative to `1 + |u0|`.
const ODE_BLOWUP_FACTOR: f64 = 1e6;

// ---------------------------------------------------------------------------
// Error and order measures
// ---------------------------------------------------------------------------

/// Root-mean-square difference between two sampled fields, averaging over
/// grid points *and* components.
///
/// Both fields are given as one slice per component. Component counts and
/// per-component lengths must agree, otherwise [`Error::GridMismatch`].
pub fn rms_error(numeric: &[&[f64]], exact: &[&[f64]]) -> Result<f64> {
    let shape = |f: &[&[f64]]| {
        let lens: Vec<usize> = f.iter().map(|c| c.len()).collect();
        format!("{} component(s) of lengths {lens:?}", f.len())
    };
    let matches = numeric.len() == exact.len()
        && numeric.iter().zip(exact).all(|(a, b)| a.len() == b.len());
    if !matches || numeric.is_empty() {
        return Err(Error::GridMismatch {
            left: shape(numeric),
            right: shape(exact),
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in numeric.iter().zip(exact) {
        for (x, y) in a.iter().zip(b.iter()) {
            sum += (x - y) * (x - y);
        }
        count += a.len();
    }
    if count == 0 {
        return Err(Error::GridMismatch {
            left: shape(numeric),
            right: shape(exact),
        });
    }
    Ok((sum / count as f64).sqrt())
}

/// Observed convergence order between a coarse and a fine run:
/// `ln(eps_coarse/eps_fine) / ln(dt_coarse/dt_fine)`.
///
/// Equal nonzero errors give `0`; a vanishing or non-finite error on either
/// side gives the `NaN` sentinel, as does a degenerate step-size pair.
pub fn eoc(eps_coarse: f64, dt_coarse: f64, eps_fine: f64, dt_fine: f64) -> f64 {
    let usable = |e: f64| e.is_finite() && e > 0.0;
    if !usable(eps_coarse) || !usable(eps_fine) {
        return f64::NAN;
    }
    let denom = (dt_coarse / dt_fine).ln();
    if !denom.is_finite() || denom == 0.0 {
        return f64::NAN;
    }
    (eps_coarse / eps_fine).ln() / denom
}

// ---------------------------------------------------------------------------
// Method identifiers
// ---------------------------------------------------------------------------

/// A time integrator selectable by name on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodId {
    /// Second-order backward differentiation with extrapolated explicit terms.
    Bdf2,
    /// An IMEX Runge-Kutta pair.
    Rk(TableauId),
    /// Spectral deferred corrections around an IMEX Runge-Kutta predictor.
    Sdc(SdcConfig),
}

impl MethodId {
    /// Parses a method name. Accepted forms (case-insensitive):
    ///
    /// * `BDF2`;
    /// * a tableau name (`RK-CB3e`, `IMEX-Euler`) or its compact form
    ///   (`CB3e`, `Eu`);
    /// * `SDC-<predictor>(<M>,<K>)`, e.g. `SDC-Eu(3,5)`;
    /// * bare `SDC`, which takes subintervals, sweeps, and predictor from
    ///   `fallback`.
    pub fn parse(name: &str, fallback: &SdcConfig) -> Result<Self> {
        let s = name.trim();
        let unknown = || Error::UnknownMethod {
            name: s.to_string(),
            valid: Self::valid_forms(),
        };
        if s.eq_ignore_ascii_case("bdf2") {
            return Ok(MethodId::Bdf2);
        }
        if s.eq_ignore_ascii_case("sdc") {
            return Ok(MethodId::Sdc(*fallback));
        }
        if s.len() >= 4 && s[..4].eq_ignore_ascii_case("sdc-") {
            let rest = &s[4..];
            let (pred, params) = match rest.find('(') {
                Some(p) => {
                    let inner = rest[p..]
                        .strip_prefix('(')
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(unknown)?;
                    (&rest[..p], Some(inner))
                }
                None => (rest, None),
            };
            let predictor = TableauId::from_short_name(pred.trim()).map_err(|_| unknown())?;
            let (m, k) = match params {
                Some(inner) => {
                    let mut it = inner.split(',').map(str::trim);
                    let m = it.next().and_then(|v| v.parse::<usize>().ok());
                    let k = it.next().and_then(|v| v.parse::<usize>().ok());
                    match (m, k, it.next()) {
                        (Some(m), Some(k), None) => (m, k),
                        _ => return Err(unknown()),
                    }
                }
                None => (fallback.m, fallback.k),
            };
            return Ok(MethodId::Sdc(SdcConfig::new(m, k, predictor)?));
        }
        if let Ok(id) = TableauId::from_name(s) {
            return Ok(MethodId::Rk(id));
        }
        if let Ok(id) = TableauId::from_short_name(s) {
            return Ok(MethodId::Rk(id));
        }
        Err(unknown())
    }

    fn valid_forms() -> String {
        let mut forms: Vec<String> = vec!["BDF2".into()];
        for id in TableauId::ALL {
            forms.push(id.name().into());
        }
        forms.push("SDC-<predictor>(<M>,<K>)".into());
        forms.join(", ")
    }

    /// The flow-solver selector for this method.
    pub fn flow_method(&self) -> FlowMethod {
        match *self {
            MethodId::Bdf2 => FlowMethod::Bdf2,
            MethodId::Rk(id) => FlowMethod::Rk(id),
            MethodId::Sdc(cfg) => FlowMethod::Sdc(cfg),
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodId::Bdf2 => f.write_str("BDF2"),
            MethodId::Rk(id) => f.write_str(id.name()),
            MethodId::Sdc(cfg) => f.write_str(&cfg.name()),
        }
    }
}

/// Parses the method list of a run configuration, resolving bare `SDC`
/// against the configured defaults.
pub fn methods_from_config(cfg: &RunConfig) -> Result<Vec<MethodId>> {
    let fallback = SdcConfig::new(cfg.sdc_m, cfg.sdc_k, cfg.predictor)?;
    cfg.methods
        .iter()
        .map(|name| MethodId::parse(name, &fallback))
        .collect()
}

// ---------------------------------------------------------------------------
// Convergence records
// ---------------------------------------------------------------------------

/// One row of a convergence study: a method at one step size.
#[derive(Clone, Debug)]
pub struct ConvergenceRecord {
    /// Display name of the integrator.
    pub method: String,
    /// Step size.
    pub dt: f64,
    /// RMS velocity (or model-state) error at the final time.
    pub eps_v: f64,
    /// Observed order against the previous stable row of the same method
    /// (`NaN` on the first row of a chain and on degenerate errors).
    pub eoc: f64,
    /// Wall-clock seconds spent stepping.
    pub twall_s: f64,
    /// Whether the run blew up before reaching the final time.
    pub unstable: bool,
}

/// Formats convergence records as CSV: header `method,dt,eps_v,eoc,twall_s`,
/// every float with 17 significant digits, LF line endings.
pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from("method,dt,eps_v,eoc,twall_s\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.method, r.dt, r.eps_v, r.eoc, r.twall_s
        );
    }
    out
}

/// The `(eps, twall, unstable)` reduction of one run.
#[derive(Clone, Copy, Debug)]
struct RunSummary {
    eps_v: f64,
    twall_s: f64,
    unstable: bool,
}

/// Builds per-method record chains from run summaries laid out method-major
/// over `dts` (which must already be sorted by decreasing step size).
fn assemble_records(
    methods: &[MethodId],
    dts: &[f64],
    summaries: &[RunSummary],
) -> Vec<ConvergenceRecord> {
    let mut records = Vec::with_capacity(summaries.len());
    for (mi, method) in methods.iter().enumerate() {
        // Previous stable row of this method, if any: (eps, dt).
        let mut prev: Option<(f64, f64)> = None;
        for (di, &dt) in dts.iter().enumerate() {
            let s = summaries[mi * dts.len() + di];
            let order = match (s.unstable, prev) {
                (false, Some((e0, dt0))) => eoc(e0, dt0, s.eps_v, dt),
                _ => f64::NAN,
            };
            if !s.unstable {
                prev = Some((s.eps_v, dt));
            }
            records.push(ConvergenceRecord {
                method: method.to_string(),
                dt,
                eps_v: s.eps_v,
                eoc: order,
                twall_s: s.twall_s,
                unstable: s.unstable,
            });
        }
    }
    records
}

/// Sorts step sizes by decreasing value, rejecting non-positive, non-finite,
/// or duplicate entries.
fn sorted_dts(dts: &[f64]) -> Result<Vec<f64>> {
    if dts.is_empty() {
        return Err(Error::InvalidArgument("empty step-size list".into()));
    }
    let mut sorted = dts.to_vec();
    if sorted.iter().any(|d| !d.is_finite() || *d <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step sizes must be positive and finite, got {sorted:?}"
        )));
    }
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite step sizes"));
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!(
            "duplicate step size in {sorted:?}"
        )));
    }
    Ok(sorted)
}

// ---------------------------------------------------------------------------
// Flow-case convergence
// ---------------------------------------------------------------------------

/// One completed flow run inside a [`Convergence`] report.
pub struct ConvergeRun {
    /// Display name of the integrator.
    pub method: String,
    /// Step size of this run.
    pub dt: f64,
    /// Full per-step output (error table, solver statistics).
    pub output: RunOutput,
}

/// Result of [`converge`]: summary records plus the underlying runs, both in
/// method-major, decreasing-`dt` order.
pub struct Convergence {
    pub records: Vec<ConvergenceRecord>,
    pub runs: Vec<ConvergeRun>,
}

/// Runs every configured method at every configured step size on the flow
/// case and reduces each run to a convergence record.
///
/// Preconditions: each step size divides the final time (to the divisibility
/// tolerance of [`step_count`]) and the lists are nonempty. The runs form a
/// work pool over `(method, dt)`; outputs are assembled in deterministic
/// order.
pub fn converge(cfg: &RunConfig) -> Result<Convergence> {
    let methods = methods_from_config(cfg)?;
    if methods.is_empty() {
        return Err(Error::InvalidArgument("empty method list".into()));
    }
    let dts = sorted_dts(&cfg.dts)?;
    for &dt in &dts {
        step_count(cfg.t_final, dt)?;
    }
    let case = FlowCase::from_config(cfg)?;

    let jobs: Vec<(FlowMethod, f64)> = methods
        .iter()
        .flat_map(|m| dts.iter().map(move |&dt| (m.flow_method(), dt)))
        .collect();
    let outputs: Vec<Result<RunOutput>> = par::map_indexed(jobs.len(), |i| {
        let (method, dt) = jobs[i];
        run_case(&case, method, dt, cfg.t_final)
    });

    let mut runs = Vec::with_capacity(outputs.len());
    let mut summaries = Vec::with_capacity(outputs.len());
    for ((mi, di), output) in index_pairs(methods.len(), dts.len()).zip(outputs) {
        let output = output?;
        summaries.push(RunSummary {
            eps_v: output.eps_v,
            twall_s: output.twall_s,
            unstable: output.unstable,
        });
        runs.push(ConvergeRun {
            method: methods[mi].to_string(),
            dt: dts[di],
            output,
        });
    }
    Ok(Convergence {
        records: assemble_records(&methods, &dts, &summaries),
        runs,
    })
}

fn index_pairs(nm: usize, nd: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..nm).flat_map(move |mi| (0..nd).map(move |di| (mi, di)))
}

// ---------------------------------------------------------------------------
// Model-problem convergence
// ---------------------------------------------------------------------------

/// The scalar semi-implicit model problem `u' = lambda_c u + lambda_d u`,
/// advanced explicitly in `lambda_c u` and implicitly in `lambda_d u`.
#[derive(Clone, Copy, Debug)]
pub struct OdeCase {
    pub lambda_c: Complex64,
    pub lambda_d: Complex64,
    pub u0: Complex64,
    pub t_final: f64,
}

impl OdeCase {
    /// The canonical decaying-oscillator configuration: `lambda_c = -i`,
    /// `lambda_d = -1`, `u0 = 1`, unit horizon.
    pub fn decaying_oscillator() -> Self {
        OdeCase {
            lambda_c: Complex64::new(0.0, -1.0),
            lambda_d: Complex64::new(-1.0, 0.0),
            u0: Complex64::new(1.0, 0.0),
            t_final: 1.0,
        }
    }

    fn exact_final(&self) -> Complex64 {
        self.u0 * ((self.lambda_c + self.lambda_d) * self.t_final).exp()
    }
}

/// Integrates the model problem with one method at one step size.
///
/// The error is the modulus of the final-state defect against
/// `u0 exp((lambda_c + lambda_d) t_final)`; a zero initial state therefore
/// reports an exactly zero error. A run is flagged unstable when the state
/// stops being finite or exceeds [`ODE_BLOWUP_FACTOR`]`·(1 + |u0|)`.
pub fn run_model_ode(ode: &OdeCase, method: &MethodId, dt: f64) -> Result<ConvergenceRecord> {
    let n_steps = step_count(ode.t_final, dt)?;
    let sys = LinearSplit::new(ode.lambda_c, ode.lambda_d);
    let ceiling = ODE_BLOWUP_FACTOR * (1.0 + ode.u0.norm());

    let clock = Instant::now();
    let mut u = ode.u0;
    let mut unstable = false;
    match method {
        MethodId::Bdf2 => {
            let mut hist = Bdf2History::new(&sys, 0.0, u, dt);
            for _ in 0..n_steps {
                bdf2_step(&sys, &mut hist, dt)?;
                u = *hist.state();
                if blown_up(u, ceiling) {
                    unstable = true;
                    break;
                }
            }
        }
        MethodId::Rk(id) => {
            let scheme = RkScheme::<f64>::from_id(*id);
            let nu = ode.lambda_d;
            let mut t = 0.0;
            for _ in 0..n_steps {
                u = imex_rk_step_const(&sys, &scheme, t, dt, &u, &nu)?;
                t += dt;
                if blown_up(u, ceiling) {
                    unstable = true;
                    break;
                }
            }
        }
        MethodId::Sdc(cfg) => {
            let mut t = 0.0;
            for _ in 0..n_steps {
                u = sdc_step(&sys, cfg, t, dt, &u)?;
                t += dt;
                if blown_up(u, ceiling) {
                    unstable = true;
                    break;
                }
            }
        }
    }
    let twall_s = clock.elapsed().as_secs_f64();

    let eps_v = if unstable {
        f64::INFINITY
    } else {
        (u - ode.exact_final()).norm()
    };
    Ok(ConvergenceRecord {
        method: method.to_string(),
        dt,
        eps_v,
        eoc: f64::NAN,
        twall_s,
        unstable,
    })
}

fn blown_up(u: Complex64, ceiling: f64) -> bool {
    !u.norm().is_finite() || u.norm() > ceiling
}

/// [`converge`] for the scalar model problem.
pub fn converge_ode(
    ode: &OdeCase,
    methods: &[MethodId],
    dts: &[f64],
) -> Result<Vec<ConvergenceRecord>> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument("empty method list".into()));
    }
    let dts = sorted_dts(dts)?;
    for &dt in &dts {
        step_count(ode.t_final, dt)?;
    }
    let jobs: Vec<(MethodId, f64)> = methods
        .iter()
        .flat_map(|m| dts.iter().map(move |&dt| (*m, dt)))
        .collect();
    let rows: Vec<Result<ConvergenceRecord>> = par::map_indexed(jobs.len(), |i| {
        let (method, dt) = jobs[i];
        run_model_ode(ode, &method, dt)
    });
    let mut summaries = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row?;
        summaries.push(RunSummary {
            eps_v: row.eps_v,
            twall_s: row.twall_s,
            unstable: row.unstable,
        });
    }
    Ok(assemble_records(methods, &dts, &summaries))
}

// ---------------------------------------------------------------------------
// Critical step size
// ---------------------------------------------------------------------------

/// Bisects the stability boundary of a monotone stability predicate.
///
/// Requires `stable(lo)` and `!stable(hi)`, otherwise [`Error::BracketFailed`].
/// Narrows the bracket until `hi - lo <= `[`BISECTION_REL_TOL`]`·lo` and
/// returns `lo`, the largest step size verified stable; by the exit bound,
/// `1.02·result` is at or past the unstable endpoint.
pub fn bisect_critical(
    lo: f64,
    hi: f64,
    mut stable: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
        return Err(Error::InvalidArgument(format!(
            "invalid bisection bracket [{lo:.17e}, {hi:.17e}]"
        )));
    }
    if !stable(lo)? {
        return Err(Error::BracketFailed {
            lo,
            hi,
            reason: "lower endpoint is already unstable".into(),
        });
    }
    if stable(hi)? {
        return Err(Error::BracketFailed {
            lo,
            hi,
            reason: "upper endpoint is still stable".into(),
        });
    }
    let mut lo = lo;
    let mut hi = hi;
    while hi - lo > BISECTION_REL_TOL * lo {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Result of a critical-step-size search on a flow case.
#[derive(Clone, Copy, Debug)]
pub struct CriticalDt {
    /// Largest step size verified stable (2% relative resolution).
    pub dt_star: f64,
    /// Advective CFL number of `dt_star` at the case's reference speed.
    pub cfl: f64,
}

/// Bisects the largest stable step size of `method` on the configured flow
/// case within `[lo, hi]`, judging stability over the configured horizon.
///
/// Probe step sizes need not divide the final time; each probe runs enough
/// whole steps to cover it.
pub fn critical_cfl(
    cfg: &RunConfig,
    method: &MethodId,
    lo: f64,
    hi: f64,
) -> Result<CriticalDt> {
    let case = FlowCase::from_config(cfg)?;
    let flow_method = method.flow_method();
    let t_final = cfg.t_final;
    let dt_star = bisect_critical(lo, hi, |dt| {
        let steps = ((t_final / dt) - 1e-12).ceil().max(1.0) as usize;
        let out = run_case_steps(&case, flow_method, dt, steps)?;
        Ok(!out.unstable)
    })?;
    Ok(CriticalDt {
        dt_star,
        cfl: cfl_number(&case.problem.grid, dt_star, case.reference_speed),
    })
}
