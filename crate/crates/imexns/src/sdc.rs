//! Spectral deferred corrections on Gauss–Lobatto–Legendre nodes.
//!
//! A step of size `dt` is discretized on the degree-`M` collocation grid. A
//! low-order IMEX Runge-Kutta predictor produces a provisional trajectory at
//! the nodes, and `K` correction sweeps then drive it toward the collocation
//! solution. Each sweep advances node to node with the update
//!
//! ```text
//! u^{k+1}_m = u^{k+1}_{m-1}
//!   + dt_m [ f_c(u^{k+1}_{m-1}) + f_d(nu^{k+1}_{m-1}, u^{k+1}_m)
//!          - f_c(u^k_{m-1})     - f_d(nu^k_{m-1},     u^k_m) ]
//!   + sum_q w[m][q] (f_c + f_d)(u^k_q)
//! ```
//!
//! where the implicit and subtracted diffusive terms use the *lagged*
//! coefficient snapshot from node `m-1` of their respective sweep level,
//! while the quadrature term integrates tendencies at node-local
//! coefficients. Each completed sweep raises the convergence order by one
//! until the collocation ceiling `2M` is reached.

use crate::error::Result;
use crate::integrators::{imex_rk_step_var, RkScheme, SysRe};
use crate::quadrature::{sdc_grid, GridOf};
use crate::scalar::{Field, OdeState, Real, SplitOde};
use crate::tableaux::{builtin_tableau, TableauId};

/// Configuration of a deferred-correction method: node degree `m`, sweep
/// count `k`, and the IMEX Runge-Kutta predictor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SdcConfig {
    pub m: usize,
    pub k: usize,
    pub predictor: TableauId,
}

impl SdcConfig {
    pub fn new(m: usize, k: usize, predictor: TableauId) -> crate::error::Result<Self> {
        if m == 0 {
            return Err(crate::error::Error::InvalidArgument(
                "deferred corrections need at least one subinterval (m >= 1)".into(),
            ));
        }
        Ok(Self { m, k, predictor })
    }

    /// Design order: predictor order plus one per sweep, capped by the
    /// collocation order `2M`.
    pub fn order(&self) -> usize {
        let pred = builtin_tableau(self.predictor).declared_order;
        (pred + self.k).min(2 * self.m)
    }

    /// Number of implicit substeps per step: `M` solves per sweep plus
    /// `M (s - 1)` in the predictor pass.
    pub fn substep_count(&self) -> usize {
        let s = builtin_tableau(self.predictor).s;
        self.m * (self.k + s - 1)
    }

    /// Canonical label, e.g. `SDC-Eu(3,5)`.
    pub fn name(&self) -> String {
        format!("SDC-{}({},{})", self.predictor.short_name(), self.m, self.k)
    }
}

/// Node-level trajectory with cached coefficient snapshots and tendencies
/// (all at node-local coefficients; `fsum = fc + fd`).
pub struct SdcNodes<S: SplitOde> {
    pub u: Vec<S::State>,
    pub nu: Vec<S::Nu>,
    pub fc: Vec<S::State>,
    pub fd: Vec<S::State>,
    pub fsum: Vec<S::State>,
}

impl<S: SplitOde> SdcNodes<S> {
    /// Evaluates coefficient snapshots and tendencies at the given node states.
    pub fn evaluate(
        sys: &S,
        t: f64,
        dt: SysRe<S>,
        grid: &GridOf<SysRe<S>>,
        states: Vec<S::State>,
    ) -> Self {
        assert_eq!(states.len(), grid.m + 1, "node state count mismatch");
        let mut nu = Vec::with_capacity(states.len());
        let mut fc = Vec::with_capacity(states.len());
        let mut fd = Vec::with_capacity(states.len());
        let mut fsum = Vec::with_capacity(states.len());
        for (m, u) in states.iter().enumerate() {
            let tm = t + (grid.nodes[m] * dt).to_f64();
            let nu_m = sys.nu_of(tm, u);
            let fc_m = sys.f_c(tm, u);
            let fd_m = sys.f_d(tm, &nu_m, u);
            let mut sum = fc_m.clone();
            sum.axpy(S::C::one(), &fd_m);
            nu.push(nu_m);
            fc.push(fc_m);
            fd.push(fd_m);
            fsum.push(sum);
        }
        Self {
            u: states,
            nu,
            fc,
            fd,
            fsum,
        }
    }
}

/// One correction sweep over all nodes (see the module equation).
pub fn sdc_sweep<S: SplitOde>(
    sys: &S,
    grid: &GridOf<SysRe<S>>,
    t: f64,
    dt: SysRe<S>,
    old: &SdcNodes<S>,
) -> Result<SdcNodes<S>> {
    let m_nodes = grid.m;
    let mut u = Vec::with_capacity(m_nodes + 1);
    let mut nu = Vec::with_capacity(m_nodes + 1);
    let mut fc = Vec::with_capacity(m_nodes + 1);
    let mut fd = Vec::with_capacity(m_nodes + 1);
    let mut fsum = Vec::with_capacity(m_nodes + 1);

    // Node 0 carries over unchanged (the sweep preserves the initial value).
    u.push(old.u[0].clone());
    nu.push(old.nu[0].clone());
    fc.push(old.fc[0].clone());
    fd.push(old.fd[0].clone());
    fsum.push(old.fsum[0].clone());

    for m in 1..=m_nodes {
        let dtm = dt * grid.lengths[m - 1];
        let tm = t + (grid.nodes[m] * dt).to_f64();

        let mut g = u[m - 1].clone();
        g.axpy(S::C::from_re(dtm), &fc[m - 1]);
        g.axpy(S::C::from_re(-dtm), &old.fc[m - 1]);
        // Subtracted diffusive term at the lagged old-level coefficient,
        // evaluated fresh (the node cache holds node-local tendencies).
        let fd_lagged = sys.f_d(tm, &old.nu[m - 1], &old.u[m]);
        g.axpy(S::C::from_re(-dtm), &fd_lagged);
        for q in 0..=m_nodes {
            g.axpy(S::C::from_re(dt * grid.weights[m - 1][q]), &old.fsum[q]);
        }

        let u_m = sys.implicit_solve(tm, &nu[m - 1], dtm, &g)?;
        let nu_m = sys.nu_of(tm, &u_m);
        let fc_m = sys.f_c(tm, &u_m);
        let fd_m = sys.f_d(tm, &nu_m, &u_m);
        let mut sum = fc_m.clone();
        sum.axpy(S::C::one(), &fd_m);
        u.push(u_m);
        nu.push(nu_m);
        fc.push(fc_m);
        fd.push(fd_m);
        fsum.push(sum);
    }

    Ok(SdcNodes {
        u,
        nu,
        fc,
        fd,
        fsum,
    })
}

/// One deferred-correction step: predictor pass plus `k` sweeps.
///
/// The predictor advances subinterval by subinterval with the configured
/// IMEX Runge-Kutta pair (stage-predictor variant, so state-dependent
/// coefficients are handled). `k = 0` returns the bare predictor result.
pub fn sdc_step<S: SplitOde>(
    sys: &S,
    cfg: &SdcConfig,
    t: f64,
    dt: SysRe<S>,
    u: &S::State,
) -> Result<S::State> {
    let grid = sdc_grid::<SysRe<S>>(cfg.m)?;
    let scheme = RkScheme::<SysRe<S>>::from_id(cfg.predictor);

    let mut states = Vec::with_capacity(cfg.m + 1);
    states.push(u.clone());
    for m in 1..=cfg.m {
        let dtm = dt * grid.lengths[m - 1];
        let tm_prev = t + (grid.nodes[m - 1] * dt).to_f64();
        let next = imex_rk_step_var(sys, &scheme, tm_prev, dtm, &states[m - 1])?;
        states.push(next);
    }
    if cfg.k == 0 {
        return Ok(states.pop().expect("nonempty node states"));
    }

    let mut nodes = SdcNodes::evaluate(sys, t, dt, &grid, states);
    for _ in 0..cfg.k {
        nodes = sdc_sweep(sys, &grid, t, dt, &nodes)?;
    }
    Ok(nodes.u.pop().expect("nonempty node states"))
}
