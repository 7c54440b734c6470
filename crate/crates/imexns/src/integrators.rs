//! IMEX time steppers for additively split ODE systems.
//!
//! * [`imex_euler_step`] — first-order splitting, explicit in `f_c` and
//!   backward Euler in `f_d`.
//! * [`Bdf2History`] / [`bdf2_step`] — second-order backward differentiation
//!   with extrapolated explicit terms and an extrapolated diffusive
//!   coefficient; fixed step size, Euler start.
//! * [`imex_rk_step_const`] — IMEX Runge-Kutta step at a frozen coefficient.
//! * [`imex_rk_step_var`] — IMEX Runge-Kutta step with per-stage coefficient
//!   snapshots taken on explicit stage predictors.
//!
//! The two Runge-Kutta drivers accumulate stage right-hand sides in the
//! identical order (per prior stage: explicit term, then implicit term), so
//! with a state-independent coefficient they produce bitwise identical
//! results — a property the tests pin.

use crate::error::{Error, Result};
use crate::scalar::{Field, OdeState, Real, SplitOde};
use crate::tableaux::{Coeffs, ImexTableau, TableauId};

/// The real precision type associated with a split system.
pub type SysRe<S> = <<S as SplitOde>::C as Field>::Re;
/// The field type of a split system's state components.
pub type SysC<S> = <S as SplitOde>::C;

/// A tableau prepared for stepping in precision `R`: keeps the exact
/// structural view for zero tests alongside lowered dense coefficients.
#[derive(Clone, Debug)]
pub struct RkScheme<R: Real> {
    pub tableau: ImexTableau,
    pub coeffs: Coeffs<R>,
}

impl<R: Real> RkScheme<R> {
    pub fn new(tableau: ImexTableau) -> Self {
        let coeffs = tableau.coeffs_in::<R>();
        Self { tableau, coeffs }
    }

    pub fn from_id(id: TableauId) -> Self {
        Self::new(crate::tableaux::builtin_tableau(id))
    }
}

fn pole_at_stage(err: Error, stage: usize) -> Error {
    match err {
        Error::AmplificationPole { magnitude, .. } => Error::AmplificationPole { stage, magnitude },
        other => other,
    }
}

/// One IMEX Euler step: solves `u' - dt f_d(nu(u), u') = u + dt f_c(u)`.
pub fn imex_euler_step<S: SplitOde>(
    sys: &S,
    t: f64,
    dt: SysRe<S>,
    u: &S::State,
) -> Result<S::State> {
    let nu = sys.nu_of(t, u);
    let mut g = u.clone();
    g.axpy(S::C::from_re(dt), &sys.f_c(t, u));
    sys.implicit_solve(t + dt.to_f64(), &nu, dt, &g)
        .map_err(|e| pole_at_stage(e, 1))
}

/// Multistep coefficients for the second-order backward differentiation
/// formula: `gamma0 u^{n+1}/dt - f_d = (alpha0 u^n + alpha1 u^{n-1})/dt
/// + beta0 f_c^n + beta1 f_c^{n-1}`. The first step falls back to the IMEX
/// Euler values `alpha0 = beta0 = gamma0 = 1`, `alpha1 = beta1 = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Bdf2Coeffs {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub gamma0: f64,
}

pub const BDF2_STARTUP: Bdf2Coeffs = Bdf2Coeffs {
    alpha0: 1.0,
    alpha1: 0.0,
    beta0: 1.0,
    beta1: 0.0,
    gamma0: 1.0,
};

pub const BDF2_REGULAR: Bdf2Coeffs = Bdf2Coeffs {
    alpha0: 2.0,
    alpha1: -0.5,
    beta0: 2.0,
    beta1: -1.0,
    gamma0: 1.5,
};

/// Per-level cache: the state with its coefficient snapshot and tendencies.
#[derive(Clone)]
struct Bdf2Level<S: SplitOde> {
    u: S::State,
    nu: S::Nu,
    f_c: S::State,
    f_d: S::State,
}

impl<S: SplitOde> Bdf2Level<S> {
    fn evaluate(sys: &S, t: f64, u: S::State) -> Self {
        let nu = sys.nu_of(t, &u);
        let f_c = sys.f_c(t, &u);
        let f_d = sys.f_d(t, &nu, &u);
        Self { u, nu, f_c, f_d }
    }
}

/// Two-level solution history for [`bdf2_step`].
///
/// Caches both tendencies and the coefficient snapshot at each level so a
/// step needs exactly one new evaluation of each after its solve.
pub struct Bdf2History<S: SplitOde> {
    t: f64,
    dt: SysRe<S>,
    curr: Bdf2Level<S>,
    prev: Option<Bdf2Level<S>>,
    steps: usize,
}

impl<S: SplitOde> Bdf2History<S> {
    pub fn new(sys: &S, t0: f64, u0: S::State, dt: SysRe<S>) -> Self {
        Self {
            t: t0,
            dt,
            curr: Bdf2Level::evaluate(sys, t0, u0),
            prev: None,
            steps: 0,
        }
    }

    pub fn state(&self) -> &S::State {
        &self.curr.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Cached tendencies `(f_c, f_d)` at the current level.
    pub fn tendencies(&self) -> (&S::State, &S::State) {
        (&self.curr.f_c, &self.curr.f_d)
    }
}

/// Advances the history by one step of the fixed size it was created with.
pub fn bdf2_step<S: SplitOde>(
    sys: &S,
    hist: &mut Bdf2History<S>,
    dt: SysRe<S>,
) -> Result<()> {
    if dt != hist.dt {
        return Err(Error::StepSizeChanged {
            expected: hist.dt.to_f64(),
            got: dt.to_f64(),
        });
    }
    let t_new = hist.t + dt.to_f64();
    let k = match &hist.prev {
        Some(_) => BDF2_REGULAR,
        None => BDF2_STARTUP,
    };
    type C<S> = SysC<S>;

    // g = [alpha0 u^n + alpha1 u^{n-1} + dt (beta0 f_c^n + beta1 f_c^{n-1})] / gamma0
    let inv_gamma = SysRe::<S>::one() / SysRe::<S>::from_f64(k.gamma0);
    let mut g = hist.curr.u.zero_like();
    g.axpy(C::<S>::from_re(SysRe::<S>::from_f64(k.alpha0) * inv_gamma), &hist.curr.u);
    g.axpy(
        C::<S>::from_re(dt * SysRe::<S>::from_f64(k.beta0) * inv_gamma),
        &hist.curr.f_c,
    );
    if let Some(prev) = &hist.prev {
        g.axpy(C::<S>::from_re(SysRe::<S>::from_f64(k.alpha1) * inv_gamma), &prev.u);
        g.axpy(
            C::<S>::from_re(dt * SysRe::<S>::from_f64(k.beta1) * inv_gamma),
            &prev.f_c,
        );
    }

    // Extrapolated coefficient beta0 nu^n + beta1 nu^{n-1}.
    let nu_ext = match &hist.prev {
        Some(prev) => sys.nu_combine(k.beta0, &hist.curr.nu, k.beta1, &prev.nu),
        None => hist.curr.nu.clone(),
    };

    let gamma = dt * inv_gamma;
    let u_new = sys
        .implicit_solve(t_new, &nu_ext, gamma, &g)
        .map_err(|e| pole_at_stage(e, 1))?;

    let new_level = Bdf2Level::evaluate(sys, t_new, u_new);
    hist.prev = Some(std::mem::replace(&mut hist.curr, new_level));
    hist.t = t_new;
    hist.steps += 1;
    Ok(())
}

/// One IMEX Runge-Kutta step at a frozen diffusive coefficient.
///
/// Stage `i` solves
/// `u_i - dt a_im[i][i] f_d(nu, u_i) = u + dt sum_{j<i} (a_ex[i][j] f_c_j + a_im[i][j] f_d_j)`
/// (the first stage is a copy), and the update is
/// `u + dt sum_i (b_ex[i] f_c_i + b_im[i] f_d_i)`. Axpys with exactly zero
/// coefficients are skipped, as are solves for stages with a zero diagonal.
pub fn imex_rk_step_const<S: SplitOde>(
    sys: &S,
    scheme: &RkScheme<SysRe<S>>,
    t: f64,
    dt: SysRe<S>,
    u: &S::State,
    nu: &S::Nu,
) -> Result<S::State> {
    let s = scheme.coeffs.s;
    let cf = &scheme.coeffs;
    let exact = scheme.tableau.exact();
    let mut fc: Vec<S::State> = Vec::with_capacity(s);
    let mut fd: Vec<S::State> = Vec::with_capacity(s);

    let stage_time = |i: usize| t + (cf.c[i] * dt).to_f64();

    // Stage 1 is the input state.
    fc.push(sys.f_c(t, u));
    fd.push(sys.f_d(t, nu, u));

    for i in 1..s {
        let mut g = u.clone();
        for j in 0..i {
            if !exact.a_ex(i, j).is_zero() {
                g.axpy(S::C::from_re(dt * cf.a_ex[i][j]), &fc[j]);
            }
            if !exact.a_im(i, j).is_zero() {
                g.axpy(S::C::from_re(dt * cf.a_im[i][j]), &fd[j]);
            }
        }
        let ti = stage_time(i);
        let ui = if exact.a_im(i, i).is_zero() {
            g
        } else {
            sys.implicit_solve(ti, nu, dt * cf.a_im[i][i], &g)
                .map_err(|e| pole_at_stage(e, i + 1))?
        };
        fc.push(sys.f_c(ti, &ui));
        fd.push(sys.f_d(ti, nu, &ui));
    }

    let mut out = u.clone();
    for i in 0..s {
        if !exact.b_ex[i].is_zero() {
            out.axpy(S::C::from_re(dt * cf.b_ex[i]), &fc[i]);
        }
        if !exact.b_im[i].is_zero() {
            out.axpy(S::C::from_re(dt * cf.b_im[i]), &fd[i]);
        }
    }
    Ok(out)
}

/// One IMEX Runge-Kutta step with per-stage coefficient snapshots.
///
/// Each stage first forms the explicit predictor
/// `v_i = u + dt sum_{j<i} a_ex[i][j] (f_c_j + f_d_j)`,
/// snapshots `nu_i = nu(v_i)`, then solves the stage equation with the
/// frozen `nu_i`. Tendencies are cached at the stage-local coefficient. With
/// a state-independent coefficient the accumulation order makes this
/// bitwise identical to [`imex_rk_step_const`].
pub fn imex_rk_step_var<S: SplitOde>(
    sys: &S,
    scheme: &RkScheme<SysRe<S>>,
    t: f64,
    dt: SysRe<S>,
    u: &S::State,
) -> Result<S::State> {
    let s = scheme.coeffs.s;
    let cf = &scheme.coeffs;
    let exact = scheme.tableau.exact();
    let mut fc: Vec<S::State> = Vec::with_capacity(s);
    let mut fd: Vec<S::State> = Vec::with_capacity(s);
    let mut fsum: Vec<S::State> = Vec::with_capacity(s);

    let stage_time = |i: usize| t + (cf.c[i] * dt).to_f64();

    let nu0 = sys.nu_of(t, u);
    fc.push(sys.f_c(t, u));
    fd.push(sys.f_d(t, &nu0, u));
    let mut sum0 = fc[0].clone();
    sum0.axpy(S::C::one(), &fd[0]);
    fsum.push(sum0);

    for i in 1..s {
        let ti = stage_time(i);
        // Explicit predictor for the coefficient snapshot.
        let mut v = u.clone();
        for j in 0..i {
            if !exact.a_ex(i, j).is_zero() {
                v.axpy(S::C::from_re(dt * cf.a_ex[i][j]), &fsum[j]);
            }
        }
        let nu_i = sys.nu_of(ti, &v);

        let mut g = u.clone();
        for j in 0..i {
            if !exact.a_ex(i, j).is_zero() {
                g.axpy(S::C::from_re(dt * cf.a_ex[i][j]), &fc[j]);
            }
            if !exact.a_im(i, j).is_zero() {
                g.axpy(S::C::from_re(dt * cf.a_im[i][j]), &fd[j]);
            }
        }
        let ui = if exact.a_im(i, i).is_zero() {
            g
        } else {
            sys.implicit_solve(ti, &nu_i, dt * cf.a_im[i][i], &g)
                .map_err(|e| pole_at_stage(e, i + 1))?
        };
        fc.push(sys.f_c(ti, &ui));
        fd.push(sys.f_d(ti, &nu_i, &ui));
        let mut sum = fc[i].clone();
        sum.axpy(S::C::one(), &fd[i]);
        fsum.push(sum);
    }

    let mut out = u.clone();
    for i in 0..s {
        if !exact.b_ex[i].is_zero() {
            out.axpy(S::C::from_re(dt * cf.b_ex[i]), &fc[i]);
        }
        if !exact.b_im[i].is_zero() {
            out.axpy(S::C::from_re(dt * cf.b_im[i]), &fd[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{DecayNonlinear, LinearSplit};
    use num_complex::Complex64;

    type CLin = LinearSplit<Complex64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euler_closed_forms() {
        // u1 = (u0 + dt lambda_c u0) / (1 - dt lambda_d), dt = 1, u0 = 1.
        let cases = [
            (c(0.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)),
            (c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
            (c(0.0, -0.1), c(0.0, 0.0), c(1.0, -0.1)),
            (c(0.1, 0.0), c(0.0, 0.0), c(1.1, 0.0)),
        ];
        for (lc, ld, expect) in cases {
            let sys = CLin::new(lc, ld);
            let got = imex_euler_step(&sys, 0.0, 1.0, &Complex64::new(1.0, 0.0)).unwrap();
            assert!(
                (got - expect).norm() < 1e-15,
                "lc={lc} ld={ld}: got {got}, want {expect}"
            );
        }
    }

    #[test]
    fn tr_reduces_to_trapezoidal_rules() {
        let scheme = RkScheme::<f64>::from_id(TableauId::Tr);
        let u0 = Complex64::new(1.0, 0.0);
        // Implicit part only: (1 + z/2) / (1 - z/2).
        let z = c(-0.3, 0.2);
        let sys = CLin::new(Complex64::new(0.0, 0.0), z);
        let nu = sys.nu_of(0.0, &u0);
        let got = imex_rk_step_const(&sys, &scheme, 0.0, 1.0, &u0, &nu).unwrap();
        let want = (1.0 + 0.5 * z) / (1.0 - 0.5 * z);
        assert!((got - want).norm() < 1e-15, "{got} vs {want}");
        // Explicit part only: 1 + z + z^2/2.
        let sys = CLin::new(z, Complex64::new(0.0, 0.0));
        let nu = sys.nu_of(0.0, &u0);
        let got = imex_rk_step_const(&sys, &scheme, 0.0, 1.0, &u0, &nu).unwrap();
        let want = 1.0 + z + 0.5 * z * z;
        assert!((got - want).norm() < 1e-15, "{got} vs {want}");
    }

    /// Follows the variable-coefficient stage loop by hand for the
    /// three-stage second-order scheme on the nonlinear decay problem.
    #[test]
    fn cb2_variable_coefficient_transcript() {
        let sys = DecayNonlinear;
        let scheme = RkScheme::<f64>::from_id(TableauId::Cb2);
        let (dt, u0) = (0.1, 1.0);

        let fc = |u: f64| -u * u * u;
        let fd = |nu: f64, u: f64| -nu * u;
        let nu_of = |u: f64| 1.0 + u * u;

        // Stage 1.
        let (fc1, fd1) = (fc(u0), fd(nu_of(u0), u0));
        let fsum1 = fc1 + fd1;
        // Stage 2: predictor, snapshot, solve with a_im[1][1] = 2/5.
        let a21 = 0.4;
        let v2 = u0 + dt * a21 * fsum1;
        let nu2 = nu_of(v2);
        let g2 = u0 + dt * a21 * fc1;
        let u2 = g2 / (1.0 + dt * a21 * nu2);
        let (fc2, fd2) = (fc(u2), fd(nu2, u2));
        // Stage 3: a_ex = (0, 1, 0), a_im = (0, 5/6, 1/6).
        let v3 = u0 + dt * 1.0 * (fc2 + fd2);
        let nu3 = nu_of(v3);
        let g3 = u0 + dt * 1.0 * fc2 + dt * (5.0 / 6.0) * fd2;
        let u3 = g3 / (1.0 + dt * (1.0 / 6.0) * nu3);
        let (fc3, fd3) = (fc(u3), fd(nu3, u3));
        // Shared weights (0, 5/6, 1/6).
        let expect = u0 + dt * (5.0 / 6.0) * (fc2 + fd2) + dt * (1.0 / 6.0) * (fc3 + fd3);

        let got = imex_rk_step_var(&sys, &scheme, 0.0, dt, &u0).unwrap();
        assert!(
            (got - expect).abs() < 1e-15,
            "transcript mismatch: {got} vs {expect}"
        );
    }

    fn run_const(
        sys: &CLin,
        scheme: &RkScheme<f64>,
        dt: f64,
        steps: usize,
    ) -> Complex64 {
        let mut u = Complex64::new(1.0, 0.0);
        let nu = sys.nu_of(0.0, &u);
        let mut t = 0.0;
        for _ in 0..steps {
            u = imex_rk_step_const(sys, scheme, t, dt, &u, &nu).unwrap();
            t += dt;
        }
        u
    }

    #[test]
    fn cb3e_third_order_on_linear_problem() {
        let sys = CLin::new(c(0.0, -1.0), c(-1.0, 0.0));
        let scheme = RkScheme::<f64>::from_id(TableauId::Cb3e);
        let exact = (c(-1.0, -1.0)).exp();
        let errs: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&n| (run_const(&sys, &scheme, 1.0 / n as f64, n) - exact).norm())
            .collect();
        let eoc = (errs[1] / errs[2]).ln() / 2.0f64.ln();
        assert!((eoc - 3.0).abs() < 0.1, "EOC {eoc}, errors {errs:?}");
    }

    #[test]
    fn ars3_third_order_on_nonlinear_problem() {
        let sys = DecayNonlinear;
        let scheme = RkScheme::<f64>::from_id(TableauId::Ars3);
        let t_final = 0.5;
        let run = |n: usize| -> f64 {
            let dt = t_final / n as f64;
            let mut u = 1.0f64;
            let mut t = 0.0;
            for _ in 0..n {
                u = imex_rk_step_var(&sys, &scheme, t, dt, &u).unwrap();
                t += dt;
            }
            u
        };
        let reference = run(1 << 14);
        let e1 = (run(16) - reference).abs();
        let e2 = (run(32) - reference).abs();
        let eoc = (e1 / e2).ln() / 2.0f64.ln();
        assert!((eoc - 3.0).abs() < 0.15, "EOC {eoc}");
    }

    #[test]
    fn const_and_var_paths_agree_bitwise_for_frozen_coefficient() {
        let sys = CLin::new(c(0.05, -0.8), c(-1.3, 0.4));
        let u0 = c(0.7, -0.2);
        for id in TableauId::ALL {
            let scheme = RkScheme::<f64>::from_id(id);
            let nu = sys.nu_of(0.0, &u0);
            let a = imex_rk_step_const(&sys, &scheme, 0.0, 0.37, &u0, &nu).unwrap();
            let b = imex_rk_step_var(&sys, &scheme, 0.0, 0.37, &u0).unwrap();
            assert_eq!(a, b, "{}", scheme.tableau.name);
        }
    }

    #[test]
    fn zero_tendencies_leave_state_bitwise_fixed() {
        let sys = CLin::new(c(0.0, 0.0), c(0.0, 0.0));
        let u0 = c(0.8232, -1.7);
        for id in TableauId::ALL {
            let scheme = RkScheme::<f64>::from_id(id);
            let got = imex_rk_step_var(&sys, &scheme, 0.0, 0.25, &u0).unwrap();
            assert_eq!(got, u0, "{}", scheme.tableau.name);
        }
    }

    #[test]
    fn rk_step_is_linear_in_the_state() {
        let sys = CLin::new(c(0.1, -0.6), c(-0.9, 0.3));
        let scheme = RkScheme::<f64>::from_id(TableauId::Cb4);
        let nu = sys.nu_of(0.0, &c(0.0, 0.0));
        let (u, v) = (c(0.3, -1.1), c(-0.4, 0.25));
        let (alpha, beta) = (c(1.7, 0.2), c(-0.35, 0.9));
        let lhs = imex_rk_step_const(&sys, &scheme, 0.0, 0.2, &(alpha * u + beta * v), &nu).unwrap();
        let su = imex_rk_step_const(&sys, &scheme, 0.0, 0.2, &u, &nu).unwrap();
        let sv = imex_rk_step_const(&sys, &scheme, 0.0, 0.2, &v, &nu).unwrap();
        assert!((lhs - (alpha * su + beta * sv)).norm() < 1e-12);
    }

    #[test]
    fn bdf2_first_step_matches_imex_euler() {
        let sys = CLin::new(c(0.2, -0.5), c(-1.0, 0.1));
        let u0 = c(1.0, 0.0);
        let mut hist = Bdf2History::new(&sys, 0.0, u0, 0.125);
        bdf2_step(&sys, &mut hist, 0.125).unwrap();
        let euler = imex_euler_step(&sys, 0.0, 0.125, &u0).unwrap();
        assert_eq!(*hist.state(), euler);
    }

    #[test]
    fn bdf2_two_steps_match_hand_computation() {
        // lambda_c = 0, lambda_d = -1, dt = 1/2, u0 = 1:
        // Euler start: u1 = 1 / 1.5 = 2/3.
        // Then: g = (2 u1 - 0.5 u0) / 1.5 = 5/9, gamma = 1/3,
        //       u2 = g / (1 + 1/3) = 5/12.
        let sys = CLin::new(c(0.0, 0.0), c(-1.0, 0.0));
        let mut hist = Bdf2History::new(&sys, 0.0, c(1.0, 0.0), 0.5);
        bdf2_step(&sys, &mut hist, 0.5).unwrap();
        assert!((hist.state() - c(2.0 / 3.0, 0.0)).norm() < 1e-15);
        bdf2_step(&sys, &mut hist, 0.5).unwrap();
        assert!((hist.state() - c(5.0 / 12.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn bdf2_rejects_step_size_change() {
        let sys = CLin::new(c(0.0, 0.0), c(-1.0, 0.0));
        let mut hist = Bdf2History::new(&sys, 0.0, c(1.0, 0.0), 0.5);
        bdf2_step(&sys, &mut hist, 0.5).unwrap();
        let err = bdf2_step(&sys, &mut hist, 0.25).unwrap_err();
        assert!(matches!(err, Error::StepSizeChanged { .. }), "{err}");
    }

    #[test]
    fn bdf2_is_second_order() {
        let sys = CLin::new(c(0.0, -1.0), c(-1.0, 0.0));
        let exact = (c(-1.0, -1.0)).exp();
        let run = |n: usize| -> f64 {
            let dt = 1.0 / n as f64;
            let mut hist = Bdf2History::new(&sys, 0.0, c(1.0, 0.0), dt);
            for _ in 0..n {
                bdf2_step(&sys, &mut hist, dt).unwrap();
            }
            (hist.state() - exact).norm()
        };
        let (e1, e2) = (run(64), run(128));
        let eoc = (e1 / e2).ln() / 2.0f64.ln();
        assert!((eoc - 2.0).abs() < 0.1, "EOC {eoc}");
    }

    #[test]
    fn pole_reports_failing_stage() {
        // gamma * nu = 1 at stage 2 of IMEX Euler: dt * 1 * nu = 1.
        let sys = CLin::new(c(0.0, 0.0), c(2.0, 0.0));
        let scheme = RkScheme::<f64>::from_id(TableauId::Euler);
        let nu = sys.nu_of(0.0, &c(1.0, 0.0));
        let err =
            imex_rk_step_const(&sys, &scheme, 0.0, 0.5, &c(1.0, 0.0), &nu).unwrap_err();
        match err {
            Error::AmplificationPole { stage, .. } => assert_eq!(stage, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
