//! Closed-form reference solutions.
//!
//! Two flows drive calibration and error measurement:
//!
//! * a traveling Taylor–Green vortex array in 2D — an exact Navier–Stokes
//!   solution for constant viscosity with zero forcing, and
//! * a traveling vortex array in 3D with speed-dependent viscosity
//!   `ν(v) = ν₀ + ν₁(|v|/v_max)²`, turned into an exact solution by a
//!   manufactured forcing.
//!
//! Both live on periodic boxes `[−1/2, 1/2]^d`.

const TAU: f64 = std::f64::consts::TAU; // 2π

/// Traveling 2D Taylor–Green vortex: velocity and pressure at `(x, t)` for
/// constant viscosity `nu`. The pattern advects with mean velocity `(1, 1)`
/// while decaying; the `y` phase is offset by 1/8 so the field has no special
/// symmetry with respect to the grid.
///
/// ```
/// use imexns::flow::exact::tg_exact;
/// let (v, p) = tg_exact([0.0, 0.125, 0.0], 0.0, 0.02);
/// assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
/// assert!((p - 0.5) < 1e-15);
/// ```
pub fn tg_exact(x: [f64; 3], t: f64, nu: f64) -> ([f64; 2], f64) {
    let a = TAU * (x[0] - t);
    let b = TAU * (x[1] - 0.125 - t);
    let decay = (-8.0 * std::f64::consts::PI.powi(2) * nu * t).exp();
    let v = [
        1.0 + a.sin() * b.cos() * decay,
        1.0 - a.cos() * b.sin() * decay,
    ];
    let p = 0.25 * ((2.0 * a).cos() + (2.0 * b).cos()) * decay * decay;
    (v, p)
}

/// Largest speed attained by the 3D vortex array ([`vv_exact`]).
pub const VV_MAX_SPEED: f64 = 2.0;

/// Trigonometric factors shared by the vortex-array formulas: `sx = sin(2π(x+t))`,
/// `cx = cos(2π(x+t))`, and likewise for `y`, `z`.
struct VvTrig {
    sx: f64,
    cx: f64,
    sy: f64,
    cy: f64,
    sz: f64,
    cz: f64,
}

impl VvTrig {
    fn at(x: [f64; 3], t: f64) -> Self {
        let (sx, cx) = (TAU * (x[0] + t)).sin_cos();
        let (sy, cy) = (TAU * (x[1] + t)).sin_cos();
        let (sz, cz) = (TAU * (x[2] + t)).sin_cos();
        VvTrig { sx, cx, sy, cy, sz, cz }
    }

    fn velocity(&self) -> [f64; 3] {
        [
            (self.sx + self.cy) * self.sz,
            (self.cx + self.sy) * self.sz,
            (self.cx + self.cy) * self.cz,
        ]
    }

    /// `grad[a][b] = ∂v_b/∂x_a`, divergence-free by construction.
    fn gradient(&self) -> [[f64; 3]; 3] {
        let VvTrig { sx, cx, sy, cy, sz, cz } = *self;
        let w = TAU;
        [
            [w * cx * sz, -w * sx * sz, -w * sx * cz],
            [-w * sy * sz, w * cy * sz, -w * sy * cz],
            [w * (sx + cy) * cz, w * (cx + sy) * cz, -w * (cx + cy) * sz],
        ]
    }
}

/// Traveling 3D vortex array: velocity and pressure at `(x, t)`. The field is
/// exactly solenoidal, translates with speed `(−1, −1, −1)` relative to the
/// phase arguments (every factor depends on `x_a + t`), and satisfies
/// `|v| ≤ 2` with equality on a lattice of points.
pub fn vv_exact(x: [f64; 3], t: f64) -> ([f64; 3], f64) {
    let g = VvTrig::at(x, t);
    (g.velocity(), g.sx * g.sy * g.sz)
}

/// Speed-dependent viscosity law `ν₀ + ν₁·(|v|/v_max)²` evaluated on a
/// velocity sample.
pub fn vv_viscosity(v: [f64; 3], nu0: f64, nu1: f64) -> f64 {
    let speed2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    nu0 + nu1 * speed2 / (VV_MAX_SPEED * VV_MAX_SPEED)
}

/// Analytic time derivative of the vortex-array velocity. Every phase is
/// `x_a + t`, so `∂_t v_b = Σ_a ∂_a v_b`.
pub fn vv_time_derivative(x: [f64; 3], t: f64) -> [f64; 3] {
    let g = VvTrig::at(x, t).gradient();
    let mut dv = [0.0; 3];
    for (b, d) in dv.iter_mut().enumerate() {
        *d = g[0][b] + g[1][b] + g[2][b];
    }
    dv
}

/// Manufactured forcing that makes [`vv_exact`] solve the momentum equation
/// with viscosity [`vv_viscosity`]:
///
/// ```text
/// f = ∂_t v + ∇·(v v) − ∇·[ν(v)(∇v + (∇v)ᵀ)] + ∇p .
/// ```
///
/// Because the exact velocity is solenoidal, the divergence-penalty part of
/// the diffusion operator vanishes and is omitted. All derivatives are closed
/// forms: `∇²v = −8π²v` (each velocity term is a product of two
/// unit-frequency factors) and `∂_a ν = (ν₁/2)·Σ_c v_c ∂_a v_c` for
/// `v_max = 2`.
pub fn vv_forcing(x: [f64; 3], t: f64, nu0: f64, nu1: f64) -> [f64; 3] {
    let trig = VvTrig::at(x, t);
    let v = trig.velocity();
    let g = trig.gradient();
    let nu = vv_viscosity(v, nu0, nu1);

    // ∂_a ν = ν₁/(v_max²) · ∂_a|v|² = (ν₁/2)·Σ_c v_c ∂_a v_c  (v_max = 2).
    let mut dnu = [0.0; 3];
    for (a, d) in dnu.iter_mut().enumerate() {
        *d = 0.5 * nu1 * (v[0] * g[a][0] + v[1] * g[a][1] + v[2] * g[a][2]);
    }

    let grad_p = [
        TAU * trig.cx * trig.sy * trig.sz,
        TAU * trig.sx * trig.cy * trig.sz,
        TAU * trig.sx * trig.sy * trig.cz,
    ];

    let mut f = [0.0; 3];
    for (b, fb) in f.iter_mut().enumerate() {
        let dt_v = g[0][b] + g[1][b] + g[2][b];
        let conv = v[0] * g[0][b] + v[1] * g[1][b] + v[2] * g[2][b];
        // ∇·[ν(∇v + ∇vᵀ)]_b = ν∇²v_b + Σ_a ∂_aν (∂_a v_b + ∂_b v_a),
        // using ∇·v = 0 and ∇²v = −2(2π)² v.
        let mut visc = nu * (-2.0 * TAU * TAU * v[b]);
        for a in 0..3 {
            visc += dnu[a] * (g[a][b] + g[b][a]);
        }
        *fb = dt_v + conv - visc + grad_p[b];
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    // Deterministic low-discrepancy sample points in [−1/2, 1/2]³ × [0, 0.3].
    fn probes() -> Vec<([f64; 3], f64)> {
        let mut out = Vec::new();
        let mut s = 0.137;
        for _ in 0..24 {
            let mut p = [0.0; 3];
            for q in &mut p {
                s = (s + std::f64::consts::FRAC_1_SQRT_2) % 1.0;
                *q = s - 0.5;
            }
            s = (s + 0.318) % 1.0;
            out.push((p, 0.3 * s));
        }
        out
    }

    #[test]
    fn taylor_green_reference_values() {
        let (v, p) = tg_exact([0.0, 0.125, 0.0], 0.0, 0.02);
        assert!((v[0] - 1.0).abs() <= 1e-15);
        assert!((v[1] - 1.0).abs() <= 1e-15);
        assert!((p - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn taylor_green_travels_and_decays() {
        // v(x, t) − (1,1) must equal the t = 0 pattern shifted by (t, t) and
        // scaled by exp(−8π²νt); pressure scales by the square.
        let nu = 0.02;
        for (x, t) in probes() {
            let (v, p) = tg_exact(x, t, nu);
            let shifted = [x[0] - t, x[1] - t, 0.0];
            let (v0, p0) = tg_exact(shifted, 0.0, nu);
            let decay = (-8.0 * std::f64::consts::PI.powi(2) * nu * t).exp();
            assert!((v[0] - 1.0 - (v0[0] - 1.0) * decay).abs() <= 1e-13);
            assert!((v[1] - 1.0 - (v0[1] - 1.0) * decay).abs() <= 1e-13);
            assert!((p - p0 * decay * decay).abs() <= 1e-13);
        }
    }

    #[test]
    fn taylor_green_satisfies_navier_stokes() {
        // Finite-difference momentum residual ∂_t v + v·∇v + ∇p − ν∇²v.
        let nu = 0.02;
        let h = 1e-4;
        for (x, t) in probes() {
            let (v, _) = tg_exact(x, t, nu);
            for b in 0..2 {
                let vel = |x: [f64; 3], t: f64| tg_exact(x, t, nu).0[b];
                let dt_v = (vel(x, t + h) - vel(x, t - h)) / (2.0 * h);
                let mut residual = dt_v;
                for a in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[a] += h;
                    xm[a] -= h;
                    let dav = (vel(xp, t) - vel(xm, t)) / (2.0 * h);
                    let d2av = (vel(xp, t) - 2.0 * vel(x, t) + vel(xm, t)) / (h * h);
                    let dap = (tg_exact(xp, t, nu).1 - tg_exact(xm, t, nu).1) / (2.0 * h);
                    residual += v[a] * dav - nu * d2av;
                    if a == b {
                        residual += dap;
                    }
                }
                assert!(residual.abs() <= 2e-5, "residual {residual:.3e} at {x:?}, t={t}");
            }
        }
    }

    #[test]
    fn vortex_array_reference_values() {
        let (v, p) = vv_exact([0.0, 0.0, 0.0], 0.0);
        assert_eq!(v, [0.0, 0.0, 2.0]);
        assert_eq!(p, 0.0);
        assert!((vv_viscosity(v, 0.01, 0.01) - 0.02).abs() <= 1e-16);
    }

    #[test]
    fn vortex_array_speed_is_bounded_by_two() {
        let mut max = 0.0f64;
        for (x, t) in probes() {
            let (v, _) = vv_exact(x, t);
            max = max.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
        }
        assert!(max <= VV_MAX_SPEED + 1e-12);
        // The bound is attained where all sines vanish with cosines at +1.
        let (v, _) = vv_exact([0.25, 0.25, 0.25], -0.25);
        let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((speed - VV_MAX_SPEED).abs() <= 1e-12);
    }

    #[test]
    fn vortex_array_gradient_matches_finite_differences() {
        let h = 1e-5;
        for (x, t) in probes() {
            let g = VvTrig::at(x, t).gradient();
            let dt = vv_time_derivative(x, t);
            for b in 0..3 {
                let mut dt_fd = (vv_exact(x, t + h).0[b] - vv_exact(x, t - h).0[b]) / (2.0 * h);
                dt_fd -= dt[b];
                assert!(dt_fd.abs() <= 1e-6);
                for a in 0..3 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[a] += h;
                    xm[a] -= h;
                    let fd = (vv_exact(xp, t).0[b] - vv_exact(xm, t).0[b]) / (2.0 * h);
                    assert!((fd - g[a][b]).abs() <= 1e-6);
                }
            }
            // Divergence vanishes identically.
            assert!((g[0][0] + g[1][1] + g[2][2]).abs() <= 1e-12);
        }
    }

    #[test]
    fn forcing_closes_the_momentum_balance() {
        // Rebuild the viscous term as the finite-difference divergence of the
        // stress ν(v)(∇v + ∇vᵀ) (inner gradients analytic) and compare with
        // the product-rule expansion inside vv_forcing.
        let (nu0, nu1) = (0.01, 0.01);
        let h = 1e-5;
        for (x, t) in probes() {
            let f = vv_forcing(x, t, nu0, nu1);
            let stress = |x: [f64; 3], a: usize, b: usize| {
                let trig = VvTrig::at(x, t);
                let g = trig.gradient();
                vv_viscosity(trig.velocity(), nu0, nu1) * (g[a][b] + g[b][a])
            };
            let trig = VvTrig::at(x, t);
            let v = trig.velocity();
            let g = trig.gradient();
            let (_, _p) = vv_exact(x, t);
            for b in 0..3 {
                let mut visc_fd = 0.0;
                for a in 0..3 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[a] += h;
                    xm[a] -= h;
                    visc_fd += (stress(xp, a, b) - stress(xm, a, b)) / (2.0 * h);
                }
                let dt_v = vv_time_derivative(x, t)[b];
                let conv = v[0] * g[0][b] + v[1] * g[1][b] + v[2] * g[2][b];
                let mut xp = x;
                let mut xm = x;
                xp[b] += h;
                xm[b] -= h;
                let dp = (vv_exact(xp, t).1 - vv_exact(xm, t).1) / (2.0 * h);
                let f_fd = dt_v + conv - visc_fd + dp;
                assert!((f[b] - f_fd).abs() <= 1e-5, "component {b}: {} vs {}", f[b], f_fd);
            }
        }
    }
}
