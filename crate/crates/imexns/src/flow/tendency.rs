//! Momentum tendency terms.
//!
//! All nonlinear products are formed pointwise on the 3/2-padded physical
//! grid and transformed back band-limited (exact dealiasing for quadratic
//! products), so every term below is an exact spectral representation of the
//! corresponding product of band-limited fields:
//!
//! ```text
//! F_c  = −∇·(v v)         F_d1 = ∇·(ν ∇v)
//! F_d2 = ∇·(ν (∇v)ᵀ)      F_d3 = −∇(ν ∇·v)
//! ```
//!
//! For a constant-viscosity snapshot the diffusion terms collapse to diagonal
//! spectral operators (`F_d1 = ν∇²v`, `F_d2 = −F_d3 = ν∇(∇·v)`) and only the
//! convective product needs transforms.

use num_complex::Complex64;

use crate::flow::{NuField, VecField};
use crate::par;
use crate::spectral::Grid;

/// The four viscosity/convection tendency terms at one state. Pressure and
/// forcing are not included; steppers add them where their schemes require.
pub struct Tendencies {
    pub f_c: VecField,
    pub f_d1: VecField,
    pub f_d2: VecField,
    pub f_d3: VecField,
}

impl Tendencies {
    /// `F_c + F_d1 + F_d2 + F_d3` — the full unprojected tendency.
    pub fn full(&self) -> VecField {
        let mut out = self.f_c.clone();
        out.axpy(1.0, &self.f_d1);
        out.axpy(1.0, &self.f_d2);
        out.axpy(1.0, &self.f_d3);
        out
    }

    /// `F_c + F_d2 + F_d3` — the part treated explicitly by the spectral
    /// deferred-correction sweeps (everything except the implicit `F_d1`).
    pub fn explicit_group(&self) -> VecField {
        let mut out = self.f_c.clone();
        out.axpy(1.0, &self.f_d2);
        out.axpy(1.0, &self.f_d3);
        out
    }

    /// `F_c + F_d + F_d3 = F_c + F_d1 + F_d2 + 2·F_d3` — the group the
    /// Runge–Kutta stage predictor and the multistep extrapolation treat
    /// explicitly. The extra `F_d3` is a pure gradient, removed again by the
    /// projection and a matching subtraction in the diffusion solve; carrying
    /// it keeps the pressure consistent with the variable-viscosity stress.
    pub fn predictor_group(&self) -> VecField {
        let mut out = self.f_c.clone();
        out.axpy(1.0, &self.f_d1);
        out.axpy(1.0, &self.f_d2);
        out.axpy(2.0, &self.f_d3);
        out
    }

    /// `F_d1 + F_d3` — the group subtracted from the diffusion-solve right
    /// side to compensate for its explicit appearance in the predictor.
    pub fn diffusive_group(&self) -> VecField {
        let mut out = self.f_d1.clone();
        out.axpy(1.0, &self.f_d3);
        out
    }
}

/// Flat index of the symmetric product `v_a·v_b` (`a ≤ b`) in the packed
/// upper-triangular ordering `(0,0), (0,1), …, (0,d−1), (1,1), …`.
fn sym_index(d: usize, a: usize, b: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo * d - lo * (lo + 1) / 2 + hi
}

/// Inverse-transforms spectra to padded physical fields, two per FFT.
fn inverse_many(grid: &Grid, specs: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(specs.len());
    let mut i = 0;
    while i < specs.len() {
        if i + 1 < specs.len() {
            let (a, b) = grid.inverse_pair_padded(specs[i], specs[i + 1]);
            out.push(a);
            out.push(b);
            i += 2;
        } else {
            out.push(grid.inverse_padded(specs[i]));
            i += 1;
        }
    }
    out
}

/// Forward-transforms padded physical fields to band-limited spectra, two
/// per FFT.
fn forward_many(grid: &Grid, fields: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let mut out = Vec::with_capacity(fields.len());
    let mut i = 0;
    while i < fields.len() {
        if i + 1 < fields.len() {
            let (a, b) = grid.forward_pair_padded(&fields[i], &fields[i + 1]);
            out.push(a);
            out.push(b);
            i += 2;
        } else {
            out.push(grid.forward_padded(&fields[i]));
            i += 1;
        }
    }
    out
}

/// `−Σ_a ∂_a ĉ(a, b)` assembled from a table of product spectra indexed by
/// `index(a, b)`.
fn negative_divergence_of(
    grid: &Grid,
    table: &[Vec<Complex64>],
    index: impl Fn(usize, usize) -> usize,
    b: usize,
) -> Vec<Complex64> {
    let mut acc = vec![Complex64::ZERO; grid.size()];
    for a in 0..grid.dim() {
        let d = grid.derivative(&table[index(a, b)], a);
        for (o, x) in acc.iter_mut().zip(&d) {
            *o -= x;
        }
    }
    acc
}

/// Evaluates all four tendency terms of a velocity field under a viscosity
/// snapshot.
pub fn tendency_terms(v: &VecField, nu: &NuField) -> Tendencies {
    let grid = v.grid().clone();
    let d = grid.dim();

    match nu {
        NuField::Constant(nu) => {
            // Convection: invert velocity, form the d(d+1)/2 symmetric
            // products, transform back.
            let refs: Vec<&[Complex64]> = v.components().iter().map(|c| c.as_slice()).collect();
            let vp = inverse_many(&grid, &refs);
            let mut prods = Vec::with_capacity(d * (d + 1) / 2);
            for a in 0..d {
                for b in a..d {
                    let mut p = vec![0.0; grid.padded_size()];
                    par::map2_into(&mut p, &vp[a], &vp[b], |x, y| x * y);
                    prods.push(p);
                }
            }
            let chat = forward_many(&grid, &prods);
            let f_c = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| negative_divergence_of(&grid, &chat, |a, b| sym_index(d, a, b), b))
                    .collect(),
            );

            // Diffusion is diagonal: F_d1 = ν∇²v, F_d2 = ν∇(∇·v) = −F_d3.
            let f_d1 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut l = grid.laplacian(v.comp(b));
                        for x in l.iter_mut() {
                            *x *= *nu;
                        }
                        l
                    })
                    .collect(),
            );
            let div = grid.divergence(v.components());
            let f_d2 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut g = grid.derivative(&div, b);
                        for x in g.iter_mut() {
                            *x *= *nu;
                        }
                        g
                    })
                    .collect(),
            );
            let mut f_d3 = f_d2.clone();
            f_d3.scale(-1.0);
            Tendencies { f_c, f_d1, f_d2, f_d3 }
        }
        NuField::Variable { pad, .. } => {
            // Invert the velocity and the full velocity gradient.
            let grads: Vec<Vec<Complex64>> = {
                let mut g = Vec::with_capacity(d * d);
                for a in 0..d {
                    for b in 0..d {
                        g.push(grid.derivative(v.comp(b), a));
                    }
                }
                g
            };
            let mut refs: Vec<&[Complex64]> = Vec::with_capacity(d + d * d);
            for b in 0..d {
                refs.push(v.comp(b));
            }
            for g in &grads {
                refs.push(g);
            }
            let phys = inverse_many(&grid, &refs);
            let vel = &phys[..d];
            let dv = |a: usize, b: usize| &phys[d + a * d + b];

            // Products: convection v_a v_b (a ≤ b), stress ν ∂_a v_b (all
            // a, b), and the dilatation ν Σ_a ∂_a v_a.
            let nsym = d * (d + 1) / 2;
            let mut prods = Vec::with_capacity(nsym + d * d + 1);
            for a in 0..d {
                for b in a..d {
                    let mut p = vec![0.0; grid.padded_size()];
                    par::map2_into(&mut p, &vel[a], &vel[b], |x, y| x * y);
                    prods.push(p);
                }
            }
            for a in 0..d {
                for b in 0..d {
                    let mut p = vec![0.0; grid.padded_size()];
                    par::map2_into(&mut p, pad, dv(a, b), |n, g| n * g);
                    prods.push(p);
                }
            }
            let mut dil = vec![0.0; grid.padded_size()];
            for a in 0..d {
                let da = dv(a, a);
                for (q, x) in dil.iter_mut().zip(da) {
                    *q += x;
                }
            }
            for (q, n) in dil.iter_mut().zip(pad) {
                *q *= n;
            }
            prods.push(dil);

            let hat = forward_many(&grid, &prods);
            let conv = &hat[..nsym];
            let stress = &hat[nsym..nsym + d * d];
            let qhat = &hat[nsym + d * d];

            let f_c = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| negative_divergence_of(&grid, conv, |a, b| sym_index(d, a, b), b))
                    .collect(),
            );
            // F_d1_b = Σ_a ∂_a ŝ(a, b), F_d2_b = Σ_a ∂_a ŝ(b, a).
            let sum_div = |index: &dyn Fn(usize, usize) -> usize| {
                VecField::from_components(
                    v.grid(),
                    (0..d)
                        .map(|b| {
                            let mut acc = negative_divergence_of(&grid, stress, index, b);
                            for x in acc.iter_mut() {
                                *x = -*x;
                            }
                            acc
                        })
                        .collect(),
                )
            };
            let f_d1 = sum_div(&|a, b| a * d + b);
            let f_d2 = sum_div(&|a, b| b * d + a);
            let f_d3 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut g = grid.derivative(qhat, b);
                        for x in g.iter_mut() {
                            *x = -*x;
                        }
                        g
                    })
                    .collect(),
            );
            Tendencies { f_c, f_d1, f_d2, f_d3 }
        }
    }
}

/// `∇·(ν∇v)` alone — the implicit diffusion operator applied to `v`. This is
/// the per-iteration work of the variable-viscosity Helmholtz solve.
pub fn div_nu_grad(v: &VecField, nu: &NuField) -> VecField {
    match nu {
        NuField::Constant(nu) => {
            let grid = v.grid();
            VecField::from_components(
                v.grid(),
                (0..grid.dim())
                    .map(|b| {
                        let mut l = grid.laplacian(v.comp(b));
                        for x in l.iter_mut() {
                            *x *= *nu;
                        }
                        l
                    })
                    .collect(),
            )
        }
        NuField::Variable { pad, .. } => div_weighted_grad(v, |i| pad[i]),
    }
}

/// `∇·((ν − ν̄)∇v)` for pointwise viscosity values `nu_pad` on the padded
/// grid and a constant offset `ν̄` — the perturbation operator of the
/// fixed-point Helmholtz iteration.
pub fn div_nu_grad_offset(v: &VecField, nu_pad: &[f64], offset: f64) -> VecField {
    div_weighted_grad(v, |i| nu_pad[i] - offset)
}

fn div_weighted_grad(v: &VecField, weight: impl Fn(usize) -> f64 + Sync + Send) -> VecField {
    let grid = v.grid().clone();
    let d = grid.dim();
    let grads: Vec<Vec<Complex64>> = {
        let mut g = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                g.push(grid.derivative(v.comp(b), a));
            }
        }
        g
    };
    let refs: Vec<&[Complex64]> = grads.iter().map(|g| g.as_slice()).collect();
    let phys = inverse_many(&grid, &refs);
    let prods: Vec<Vec<f64>> = phys
        .iter()
        .map(|g| g.iter().enumerate().map(|(i, x)| weight(i) * x).collect())
        .collect();
    let hat = forward_many(&grid, &prods);
    VecField::from_components(
        v.grid(),
        (0..d)
            .map(|b| {
                let mut acc = negative_divergence_of(&grid, &hat, |a, b| a * d + b, b);
                for x in acc.iter_mut() {
                    *x = -*x;
                }
                acc
            })
            .collect(),
    )
}

/// `(F_d1, F_d3)` sharing one set of gradient transforms — the pair needed
/// on the right side of every diffusion solve.
pub fn diffusive_pair(v: &VecField, nu: &NuField) -> (VecField, VecField) {
    let grid = v.grid().clone();
    let d = grid.dim();
    match nu {
        NuField::Constant(nu) => {
            let f_d1 = div_nu_grad(v, &NuField::Constant(*nu));
            let div = grid.divergence(v.components());
            let f_d3 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut g = grid.derivative(&div, b);
                        for x in g.iter_mut() {
                            *x *= -*nu;
                        }
                        g
                    })
                    .collect(),
            );
            (f_d1, f_d3)
        }
        NuField::Variable { pad, .. } => {
            let grads: Vec<Vec<Complex64>> = {
                let mut g = Vec::with_capacity(d * d);
                for a in 0..d {
                    for b in 0..d {
                        g.push(grid.derivative(v.comp(b), a));
                    }
                }
                g
            };
            let refs: Vec<&[Complex64]> = grads.iter().map(|g| g.as_slice()).collect();
            let phys = inverse_many(&grid, &refs);
            let mut prods: Vec<Vec<f64>> = phys
                .iter()
                .map(|g| {
                    let mut p = vec![0.0; grid.padded_size()];
                    par::map2_into(&mut p, pad, g, |n, x| n * x);
                    p
                })
                .collect();
            let mut dil = vec![0.0; grid.padded_size()];
            for a in 0..d {
                for (q, x) in dil.iter_mut().zip(&phys[a * d + a]) {
                    *q += x;
                }
            }
            for (q, n) in dil.iter_mut().zip(pad) {
                *q *= n;
            }
            prods.push(dil);
            let hat = forward_many(&grid, &prods);
            let f_d1 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut acc = negative_divergence_of(&grid, &hat, |a, b| a * d + b, b);
                        for x in acc.iter_mut() {
                            *x = -*x;
                        }
                        acc
                    })
                    .collect(),
            );
            let qhat = &hat[d * d];
            let f_d3 = VecField::from_components(
                v.grid(),
                (0..d)
                    .map(|b| {
                        let mut g = grid.derivative(qhat, b);
                        for x in g.iter_mut() {
                            *x = -*x;
                        }
                        g
                    })
                    .collect(),
            );
            (f_d1, f_d3)
        }
    }
}
