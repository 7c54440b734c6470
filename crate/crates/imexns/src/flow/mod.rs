//! Periodic incompressible Navier–Stokes solver in 2D/3D.
//!
//! Space is discretized Fourier pseudo-spectrally (module [`crate::spectral`]);
//! time stepping splits the momentum equation `∂_t v = F(x, t, v, p)` into
//!
//! ```text
//! F_c  = −∇·(v v)          convection
//! F_d1 = ∇·(ν ∇v)          diffusion, gradient part
//! F_d2 = ∇·(ν (∇v)ᵀ)       diffusion, transposed part
//! F_d3 = −∇(ν ∇·v)         diffusion, divergence penalty
//! F_p  = −∇p               pressure
//! F_s  = f                 forcing
//! ```
//!
//! with `F_d = F_d1 + F_d2 + F_d3`. For constant viscosity and solenoidal
//! velocity, `F_d = ν∇²v`. The viscosity may be constant or depend on the
//! local speed, `ν(v) = ν₀ + ν₁(|v|/v_max)²`.
//!
//! Submodules: [`exact`] closed-form reference solutions and forcing,
//! [`tendency`] the tendency terms, [`solver`] pressure projection and
//! Helmholtz solves, [`steppers`] the three time steppers, and [`case`]
//! run configuration and execution.

pub mod case;
pub mod exact;
pub mod solver;
pub mod steppers;
pub mod tendency;

use std::sync::Arc;

use num_complex::Complex64;

use crate::spectral::Grid;

/// A `dim`-component velocity-like field in spectral representation.
#[derive(Clone)]
pub struct VecField {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for VecField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VecField")
            .field("dim", &self.dim())
            .field("extents", &self.grid.extents())
            .field("max_coeff", &self.max_coeff_norm())
            .finish()
    }
}

impl VecField {
    pub fn zero(grid: &Arc<Grid>) -> Self {
        let comps = (0..grid.dim())
            .map(|_| vec![Complex64::ZERO; grid.size()])
            .collect();
        VecField { grid: grid.clone(), comps }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: Vec<Vec<Complex64>>) -> Self {
        debug_assert_eq!(comps.len(), grid.dim());
        debug_assert!(comps.iter().all(|c| c.len() == grid.size()));
        VecField { grid: grid.clone(), comps }
    }

    /// Samples a physical vector function component-wise and transforms it.
    pub fn sample(grid: &Arc<Grid>, f: impl Fn([f64; 3], usize) -> f64 + Sync + Send) -> Self {
        let comps = (0..grid.dim())
            .map(|a| grid.forward_real(&grid.sample(|x| f(x, a))))
            .collect();
        VecField { grid: grid.clone(), comps }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, a: usize) -> &[Complex64] {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut [Complex64] {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    /// `self += c·other`; skipped entirely for `c == 0`.
    pub fn axpy(&mut self, c: f64, other: &VecField) {
        debug_assert!(self.grid == other.grid);
        if c == 0.0 {
            return;
        }
        for (mine, theirs) in self.comps.iter_mut().zip(&other.comps) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += c * t;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for comp in &mut self.comps {
            for v in comp.iter_mut() {
                *v *= c;
            }
        }
    }

    /// Largest coefficient magnitude over all components.
    pub fn max_coeff_norm(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Relative discrete divergence of the field (see
    /// [`Grid::divergence_ratio`]).
    pub fn divergence_ratio(&self) -> f64 {
        self.grid.divergence_ratio(&self.comps)
    }

    /// Physical-space samples of every component (unpadded grid).
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        self.comps.iter().map(|c| self.grid.inverse_to_real(c)).collect()
    }
}

/// Viscosity law: constant, or a quadratic function of the local speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NuModel {
    Constant(f64),
    /// `ν(v) = ν₀ + ν₁·(|v|/v_max)²`
    SpeedDependent { nu0: f64, nu1: f64, v_max: f64 },
}

impl NuModel {
    pub fn is_constant(&self) -> bool {
        matches!(self, NuModel::Constant(_))
    }

    /// Evaluates the viscosity law pointwise on the 3/2-padded grid (where
    /// it multiplies velocity gradients), or passes the constant through.
    pub fn snapshot(&self, v: &VecField) -> NuField {
        match *self {
            NuModel::Constant(nu) => NuField::Constant(nu),
            NuModel::SpeedDependent { nu0, nu1, v_max } => {
                let grid = v.grid();
                let mut speed2 = vec![0.0; grid.padded_size()];
                let mut a = 0;
                while a < v.dim() {
                    if a + 1 < v.dim() {
                        let (pa, pb) = grid.inverse_pair_padded(v.comp(a), v.comp(a + 1));
                        for ((s, x), y) in speed2.iter_mut().zip(&pa).zip(&pb) {
                            *s += x * x + y * y;
                        }
                        a += 2;
                    } else {
                        let pa = grid.inverse_padded(v.comp(a));
                        for (s, x) in speed2.iter_mut().zip(&pa) {
                            *s += x * x;
                        }
                        a += 1;
                    }
                }
                let inv_vmax2 = 1.0 / (v_max * v_max);
                let pad: Vec<f64> =
                    speed2.iter().map(|s2| nu0 + nu1 * s2 * inv_vmax2).collect();
                let mean = pad.iter().sum::<f64>() / pad.len() as f64;
                NuField::Variable { pad, mean }
            }
        }
    }
}

/// A viscosity snapshot at one state: either a constant, or pointwise
/// physical values on the 3/2-padded grid together with their volume mean
/// (the mean serves as the Helmholtz preconditioner coefficient).
#[derive(Clone)]
pub enum NuField {
    Constant(f64),
    Variable { pad: Vec<f64>, mean: f64 },
}

impl NuField {
    pub fn mean(&self) -> f64 {
        match self {
            NuField::Constant(nu) => *nu,
            NuField::Variable { mean, .. } => *mean,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NuField::Constant(_))
    }

    /// Pointwise linear combination `c0·a + c1·b` of two snapshots.
    pub fn combine(c0: f64, a: &NuField, c1: f64, b: &NuField) -> NuField {
        match (a, b) {
            (NuField::Constant(x), NuField::Constant(y)) => {
                NuField::Constant(c0 * x + c1 * y)
            }
            (NuField::Variable { pad: pa, .. }, NuField::Variable { pad: pb, .. }) => {
                let pad: Vec<f64> =
                    pa.iter().zip(pb).map(|(x, y)| c0 * x + c1 * y).collect();
                let mean = pad.iter().sum::<f64>() / pad.len() as f64;
                NuField::Variable { pad, mean }
            }
            _ => panic!("cannot combine constant and variable viscosity snapshots"),
        }
    }
}

/// Prescribed body forcing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Forcing {
    None,
    /// The manufactured forcing that makes the traveling vortex array with
    /// speed-dependent viscosity an exact solution (see
    /// [`exact::vv_forcing`]).
    VortexArray { nu0: f64, nu1: f64 },
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::None)
    }

    /// Spectral forcing field at time `t` (zero field for `None`).
    pub fn eval(&self, grid: &Arc<Grid>, t: f64) -> VecField {
        match *self {
            Forcing::None => VecField::zero(grid),
            Forcing::VortexArray { nu0, nu1 } => {
                debug_assert_eq!(grid.dim(), 3);
                VecField::sample(grid, |x, a| exact::vv_forcing(x, t, nu0, nu1)[a])
            }
        }
    }
}

/// Velocity and time; pressure is never carried (it is reconstructible from
/// the projection potentials on demand and is not fed back by any stepper).
#[derive(Clone)]
pub struct FlowState {
    pub t: f64,
    pub v: VecField,
}

/// A flow problem: geometry, viscosity law, forcing, and solver tolerance.
pub struct FlowProblem {
    pub grid: Arc<Grid>,
    pub nu: NuModel,
    pub forcing: Forcing,
    pub helmholtz_tol: f64,
}

impl FlowProblem {
    pub fn new(grid: Arc<Grid>, nu: NuModel, forcing: Forcing) -> Self {
        FlowProblem { grid, nu, forcing, helmholtz_tol: 1e-12 }
    }
}

/// Advective CFL number `Δt·v_ref·|λ_c|_max` with the spectral estimate
/// `|λ_c|_max = π·max(n/L)` for the largest advective eigenvalue.
pub fn cfl_number(grid: &Grid, dt: f64, v_ref: f64) -> f64 {
    dt * v_ref * grid.max_advective_eigenvalue()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Arc<Grid> {
        Grid::uniform(2, 8, 1.0, 0.0).unwrap()
    }

    #[test]
    fn axpy_and_scale() {
        let g = grid2();
        let a = VecField::sample(&g, |x, c| if c == 0 { x[0].sin() } else { x[1] });
        let mut b = a.clone();
        b.axpy(2.0, &a);
        b.scale(1.0 / 3.0);
        for c in 0..2 {
            for i in 0..g.size() {
                assert!((b.comp(c)[i] - a.comp(c)[i]).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn constant_snapshot_passes_through() {
        let g = grid2();
        let v = VecField::zero(&g);
        match NuModel::Constant(0.02).snapshot(&v) {
            NuField::Constant(nu) => assert_eq!(nu, 0.02),
            _ => panic!("expected constant"),
        }
    }

    #[test]
    fn speed_dependent_snapshot_bounds() {
        // |v| = 2 everywhere → ν = ν0 + ν1 exactly.
        let g = grid2();
        let v = VecField::sample(&g, |_, c| if c == 0 { 2.0 } else { 0.0 });
        let nu = NuModel::SpeedDependent { nu0: 0.01, nu1: 0.01, v_max: 2.0 }.snapshot(&v);
        match nu {
            NuField::Variable { pad, mean } => {
                for x in &pad {
                    assert!((x - 0.02).abs() <= 1e-14);
                }
                assert!((mean - 0.02).abs() <= 1e-14);
            }
            _ => panic!("expected variable"),
        }
    }

    #[test]
    fn combine_blends_snapshots() {
        let a = NuField::Constant(1.0);
        let b = NuField::Constant(3.0);
        assert_eq!(NuField::combine(2.0, &a, -1.0, &b).mean(), -1.0);
    }

    #[test]
    fn cfl_formula() {
        let g = Grid::uniform(2, 64, 1.0, 0.0).unwrap();
        let cfl = cfl_number(&g, 1e-3, 1.0);
        assert!((cfl - 1e-3 * std::f64::consts::PI * 64.0).abs() <= 1e-12);
        assert_eq!(cfl_number(&g, 0.0, 5.0), 0.0);
        assert!((cfl_number(&g, 2e-3, 1.0) - 2.0 * cfl).abs() <= 1e-15);
    }
}
