//! Periodic Fourier pseudo-spectral grids: transforms, spectral derivatives,
//! divergence-free projection, and 3/2-rule dealiased products.
//!
//! Physical fields are real samples on a uniform grid over a periodic box.
//! A spectrum stores one complex coefficient per integer frequency vector
//! `f` (per-axis range `−n/2 … n/2−1` in standard FFT index order), so that
//!
//! ```text
//! a(x) = Σ_f â(f) · exp(2πi f·(x − origin)/L),
//! ```
//!
//! i.e. the forward transform normalizes by the number of grid points and a
//! constant field has `â(0)` equal to its value. Arrays are flat with the
//! x-axis fastest: `idx = (iz·n1 + iy)·n0 + ix`.
//!
//! Nonlinear products are formed on a 3/2-times finer grid: spectra are
//! zero-padded to `3n/2` points per axis, transformed to physical space,
//! multiplied pointwise, and transformed back with truncation to the
//! symmetric band `|f| ≤ n/2 − 1` (the Nyquist frequency is dropped). This
//! removes quadratic aliasing entirely. Because physical fields are real,
//! two of them ride in one complex transform (`c = a + i·b`, split on the
//! other side by Hermitian symmetry), halving the FFT count.
//!
//! Per-axis FFT plans are cached in the grid; grids are shared via `Arc`.
//! The per-line FFT loops are memory-bound at the target sizes and run
//! sequentially; data parallelism enters at the pointwise-kernel and
//! multi-run levels instead.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par;

/// A periodic, uniform rectangular grid with cached FFT plans.
///
/// Supports 2D (internally `n[2] = 1`) and 3D boxes with independent even
/// extents `≥ 4` per active axis. Construction validates the geometry; all
/// transform and operator methods then assume matching array lengths.
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    np: [usize; 3],
    len: [f64; 3],
    origin: [f64; 3],
    /// Signed physical wavenumbers `2π·f/L` per axis, indexed in FFT order.
    k: [Vec<f64>; 3],
    /// Per-axis retained-band index maps: `(unpadded, padded, padded of −f)`.
    band: [Vec<(usize, usize, usize)>; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    fwd_pad: [Arc<dyn Fft<f64>>; 3],
    inv_pad: [Arc<dyn Fft<f64>>; 3],
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.len == other.len
            && self.origin == other.origin
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("len", &self.len)
            .field("origin", &self.origin)
            .finish()
    }
}

impl Grid {
    /// Builds a 2D grid of `n0 × n1` points over `[origin, origin + len)`.
    pub fn new_2d(n: [usize; 2], len: [f64; 2], origin: [f64; 2]) -> Result<Arc<Self>> {
        Self::build(2, [n[0], n[1], 1], [len[0], len[1], 1.0], [origin[0], origin[1], 0.0])
    }

    /// Builds a 3D grid of `n0 × n1 × n2` points over `[origin, origin + len)`.
    pub fn new_3d(n: [usize; 3], len: [f64; 3], origin: [f64; 3]) -> Result<Arc<Self>> {
        Self::build(3, n, len, origin)
    }

    /// Square/cube convenience: `n` points per axis on `[origin, origin+l)^d`.
    pub fn uniform(dim: usize, n: usize, l: f64, origin: f64) -> Result<Arc<Self>> {
        match dim {
            2 => Self::new_2d([n, n], [l, l], [origin, origin]),
            3 => Self::new_3d([n; 3], [l; 3], [origin; 3]),
            d => Err(Error::InvalidArgument(format!("grid dimension must be 2 or 3, got {d}"))),
        }
    }

    fn build(dim: usize, n: [usize; 3], len: [f64; 3], origin: [f64; 3]) -> Result<Arc<Self>> {
        for a in 0..dim {
            if n[a] < 4 || n[a] % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "grid extent along axis {a} must be even and ≥ 4, got {}",
                    n[a]
                )));
            }
            if !(len[a] > 0.0) || !len[a].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "domain length along axis {a} must be positive, got {}",
                    len[a]
                )));
            }
        }
        let np = [padded_extent(n[0]), padded_extent(n[1]), padded_extent(n[2])];

        let mut k: [Vec<f64>; 3] = Default::default();
        let mut band: [Vec<(usize, usize, usize)>; 3] = Default::default();
        for a in 0..3 {
            k[a] = (0..n[a])
                .map(|i| 2.0 * PI * signed_freq(i, n[a]) as f64 / len[a])
                .collect();
            band[a] = band_freqs(n[a])
                .map(|f| (wrap_index(f, n[a]), wrap_index(f, np[a]), wrap_index(-f, np[a])))
                .collect();
        }

        let mut planner = FftPlanner::<f64>::new();
        let plan = |p: &mut FftPlanner<f64>, m: usize, forward: bool| {
            if forward {
                p.plan_fft_forward(m)
            } else {
                p.plan_fft_inverse(m)
            }
        };
        let fwd = [
            plan(&mut planner, n[0], true),
            plan(&mut planner, n[1], true),
            plan(&mut planner, n[2], true),
        ];
        let inv = [
            plan(&mut planner, n[0], false),
            plan(&mut planner, n[1], false),
            plan(&mut planner, n[2], false),
        ];
        let fwd_pad = [
            plan(&mut planner, np[0], true),
            plan(&mut planner, np[1], true),
            plan(&mut planner, np[2], true),
        ];
        let inv_pad = [
            plan(&mut planner, np[0], false),
            plan(&mut planner, np[1], false),
            plan(&mut planner, np[2], false),
        ];

        Ok(Arc::new(Grid { dim, n, np, len, origin, k, band, fwd, inv, fwd_pad, inv_pad }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.len
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Number of grid points (= number of spectral coefficients).
    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Number of points of the 3/2-padded product grid.
    pub fn padded_size(&self) -> usize {
        self.np[0] * self.np[1] * self.np[2]
    }

    /// Physical coordinates of the flat grid index.
    pub fn coords_of(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.decompose(idx);
        [
            self.origin[0] + self.len[0] * ix as f64 / self.n[0] as f64,
            self.origin[1] + self.len[1] * iy as f64 / self.n[1] as f64,
            self.origin[2] + self.len[2] * iz as f64 / self.n[2] as f64,
        ]
    }

    /// Wavevector of the flat spectral index.
    pub fn k_at(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.decompose(idx);
        [self.k[0][ix], self.k[1][iy], self.k[2][iz]]
    }

    /// `|k|²` of the flat spectral index.
    pub fn k_squared_at(&self, idx: usize) -> f64 {
        let k = self.k_at(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Largest advective spectral eigenvalue magnitude, `π·max(n/L)`.
    pub fn max_advective_eigenvalue(&self) -> f64 {
        (0..self.dim)
            .map(|a| PI * self.n[a] as f64 / self.len[a])
            .fold(0.0, f64::max)
    }

    fn decompose(&self, idx: usize) -> (usize, usize, usize) {
        let ix = idx % self.n[0];
        let iy = (idx / self.n[0]) % self.n[1];
        let iz = idx / (self.n[0] * self.n[1]);
        (ix, iy, iz)
    }

    /// Samples a scalar function of physical coordinates on the grid.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Vec<f64> {
        par::map_indexed(self.size(), |idx| f(self.coords_of(idx)))
    }

    // ------------------------------------------------------------------
    // Transforms
    // ------------------------------------------------------------------

    fn transform(&self, data: &mut [Complex64], padded: bool, forward: bool) {
        let dims = if padded { self.np } else { self.n };
        debug_assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
        let plans = match (padded, forward) {
            (false, true) => &self.fwd,
            (false, false) => &self.inv,
            (true, true) => &self.fwd_pad,
            (true, false) => &self.inv_pad,
        };
        let mut scratch: Vec<Complex64> = Vec::new();
        let mut line: Vec<Complex64> = Vec::new();
        for axis in 0..3 {
            fft_axis(dims, data, axis, &plans[axis], &mut scratch, &mut line);
        }
        if forward {
            let scale = 1.0 / data.len() as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    /// Forward transform of a real physical field to its full spectrum.
    ///
    /// Keeps every mode (including Nyquist), so `inverse_to_real` is an
    /// exact inverse up to round-off.
    pub fn forward_real(&self, a: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut c, false, true);
        c
    }

    /// Inverse transform of a spectrum to physical values (real part).
    pub fn inverse_to_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut c = spec.to_vec();
        self.transform(&mut c, false, false);
        c.iter().map(|v| v.re).collect()
    }

    fn embed_pair(&self, a: &[Complex64], b: Option<&[Complex64]>, out: &mut [Complex64]) {
        out.fill(Complex64::ZERO);
        for &(zu, zp, _) in &self.band[2] {
            for &(yu, yp, _) in &self.band[1] {
                let row_u = (zu * self.n[1] + yu) * self.n[0];
                let row_p = (zp * self.np[1] + yp) * self.np[0];
                for &(xu, xp, _) in &self.band[0] {
                    let iu = row_u + xu;
                    let v = match b {
                        Some(b) => a[iu] + Complex64::new(-b[iu].im, b[iu].re),
                        None => a[iu],
                    };
                    out[row_p + xp] = v;
                }
            }
        }
    }

    fn extract_pair(
        &self,
        c: &[Complex64],
        a: &mut [Complex64],
        mut b: Option<&mut [Complex64]>,
    ) {
        a.fill(Complex64::ZERO);
        if let Some(b) = b.as_deref_mut() {
            b.fill(Complex64::ZERO);
        }
        for &(zu, zp, zm) in &self.band[2] {
            for &(yu, yp, ym) in &self.band[1] {
                let row_u = (zu * self.n[1] + yu) * self.n[0];
                let row_p = (zp * self.np[1] + yp) * self.np[0];
                let row_m = (zm * self.np[1] + ym) * self.np[0];
                for &(xu, xp, xm) in &self.band[0] {
                    let cp = c[row_p + xp];
                    let cm = c[row_m + xm].conj();
                    let iu = row_u + xu;
                    a[iu] = 0.5 * (cp + cm);
                    if let Some(b) = b.as_deref_mut() {
                        let d = cp - cm;
                        // b̂ = (cp − cm)/(2i) = −i·(cp − cm)/2
                        b[iu] = 0.5 * Complex64::new(d.im, -d.re);
                    }
                }
            }
        }
    }

    /// Transforms two spectra to physical values on the 3/2-padded grid
    /// with a single complex FFT (`c = a + i·b`).
    pub fn inverse_pair_padded(
        &self,
        a: &[Complex64],
        b: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut c = vec![Complex64::ZERO; self.padded_size()];
        self.embed_pair(a, Some(b), &mut c);
        self.transform(&mut c, true, false);
        (c.iter().map(|v| v.re).collect(), c.iter().map(|v| v.im).collect())
    }

    /// Transforms one spectrum to physical values on the 3/2-padded grid.
    pub fn inverse_padded(&self, a: &[Complex64]) -> Vec<f64> {
        let mut c = vec![Complex64::ZERO; self.padded_size()];
        self.embed_pair(a, None, &mut c);
        self.transform(&mut c, true, false);
        c.iter().map(|v| v.re).collect()
    }

    /// Transforms two real fields on the padded grid back to band-limited
    /// spectra (one complex FFT, Hermitian split, Nyquist dropped).
    pub fn forward_pair_padded(
        &self,
        a: &[f64],
        b: &[f64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        debug_assert_eq!(a.len(), self.padded_size());
        debug_assert_eq!(b.len(), self.padded_size());
        let mut c: Vec<Complex64> =
            a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.transform(&mut c, true, true);
        let mut ah = vec![Complex64::ZERO; self.size()];
        let mut bh = vec![Complex64::ZERO; self.size()];
        self.extract_pair(&c, &mut ah, Some(&mut bh));
        (ah, bh)
    }

    /// Transforms one real field on the padded grid back to a band-limited
    /// spectrum.
    pub fn forward_padded(&self, a: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(a.len(), self.padded_size());
        let mut c: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut c, true, true);
        let mut ah = vec![Complex64::ZERO; self.size()];
        self.extract_pair(&c, &mut ah, None);
        ah
    }

    // ------------------------------------------------------------------
    // Spectral operators
    // ------------------------------------------------------------------

    /// Spectral derivative along one axis: `∂_axis ↦ i·k_axis`.
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        debug_assert!(axis < 3);
        let mut out = spec.to_vec();
        self.scale_by_ik(&mut out, axis);
        out
    }

    fn scale_by_ik(&self, spec: &mut [Complex64], axis: usize) {
        let (n0, n1) = (self.n[0], self.n[1]);
        for (idx, v) in spec.iter_mut().enumerate() {
            let i_axis = match axis {
                0 => idx % n0,
                1 => (idx / n0) % n1,
                _ => idx / (n0 * n1),
            };
            let k = self.k[axis][i_axis];
            *v = Complex64::new(-k * v.im, k * v.re);
        }
    }

    /// All `dim` partial derivatives of a scalar spectrum.
    pub fn gradient(&self, spec: &[Complex64]) -> Vec<Vec<Complex64>> {
        (0..self.dim).map(|a| self.derivative(spec, a)).collect()
    }

    /// `Σ_a ∂_a v_a` of a `dim`-component spectral vector field.
    pub fn divergence(&self, v: &[Vec<Complex64>]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim);
        let mut out = self.derivative(&v[0], 0);
        for a in 1..self.dim {
            let d = self.derivative(&v[a], a);
            for (o, x) in out.iter_mut().zip(&d) {
                *o += x;
            }
        }
        out
    }

    /// Spectral Laplacian: `∇² ↦ −|k|²`.
    pub fn laplacian(&self, spec: &[Complex64]) -> Vec<Complex64> {
        spec.iter()
            .enumerate()
            .map(|(idx, &v)| -self.k_squared_at(idx) * v)
            .collect()
    }

    /// Projects a spectral vector field onto its divergence-free part in
    /// place and returns the scalar potential `ψ̂` of the removed gradient,
    /// so that `v_in = v_out + ∇ψ`. The mean mode is untouched and
    /// `ψ̂(0) = 0`.
    pub fn project(&self, v: &mut [Vec<Complex64>]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim);
        let size = self.size();
        let mut psi = vec![Complex64::ZERO; size];
        for idx in 0..size {
            let k = self.k_at(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let mut dot = Complex64::ZERO;
            for (a, va) in v.iter().enumerate() {
                dot += k[a] * va[idx];
            }
            let coef = dot / k2;
            for (a, va) in v.iter_mut().enumerate() {
                va[idx] -= k[a] * coef;
            }
            // ∇ψ ↦ i·k·ψ̂ must equal k·coef, hence ψ̂ = −i·coef.
            psi[idx] = Complex64::new(coef.im, -coef.re);
        }
        psi
    }

    /// `max_k |k·v̂| / max_{k,a} |v̂_a|`, the relative discrete divergence.
    /// Returns 0 for an identically zero field.
    pub fn divergence_ratio(&self, v: &[Vec<Complex64>]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        let mut max_div: f64 = 0.0;
        let mut max_v: f64 = 0.0;
        for idx in 0..self.size() {
            let k = self.k_at(idx);
            let mut dot = Complex64::ZERO;
            for (a, va) in v.iter().enumerate() {
                dot += k[a] * va[idx];
                max_v = max_v.max(va[idx].norm());
            }
            max_div = max_div.max(dot.norm());
        }
        if max_v == 0.0 {
            0.0
        } else {
            max_div / max_v
        }
    }

    /// Maximum relative deviation from Hermitian symmetry,
    /// `max |c(−k) − conj c(k)| / max |c|`.
    pub fn hermitian_error(&self, spec: &[Complex64]) -> f64 {
        let mut max_dev: f64 = 0.0;
        let mut max_c: f64 = 0.0;
        for iz in 0..self.n[2] {
            for iy in 0..self.n[1] {
                for ix in 0..self.n[0] {
                    let idx = (iz * self.n[1] + iy) * self.n[0] + ix;
                    let jx = (self.n[0] - ix) % self.n[0];
                    let jy = (self.n[1] - iy) % self.n[1];
                    let jz = (self.n[2] - iz) % self.n[2];
                    let jdx = (jz * self.n[1] + jy) * self.n[0] + jx;
                    max_dev = max_dev.max((spec[jdx] - spec[idx].conj()).norm());
                    max_c = max_c.max(spec[idx].norm());
                }
            }
        }
        if max_c == 0.0 {
            0.0
        } else {
            max_dev / max_c
        }
    }
}

fn padded_extent(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        3 * n / 2
    }
}

fn signed_freq(i: usize, n: usize) -> i64 {
    if i < n / 2 || n == 1 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn band_freqs(n: usize) -> impl Iterator<Item = i64> {
    let h = if n == 1 { 1 } else { (n / 2) as i64 };
    -(h - 1)..=(h - 1)
}

fn wrap_index(f: i64, n: usize) -> usize {
    (f.rem_euclid(n as i64)) as usize
}

/// Runs the planned FFT over every 1D line of `data` along `axis`.
///
/// Axis 0 lines are contiguous and processed in one batched call; the other
/// axes gather each strided line into a scratch buffer.
fn fft_axis(
    dims: [usize; 3],
    data: &mut [Complex64],
    axis: usize,
    plan: &Arc<dyn Fft<f64>>,
    scratch: &mut Vec<Complex64>,
    line: &mut Vec<Complex64>,
) {
    let n = dims[axis];
    if n == 1 {
        return;
    }
    scratch.resize(plan.get_inplace_scratch_len(), Complex64::ZERO);
    match axis {
        0 => plan.process_with_scratch(data, scratch),
        1 => {
            line.resize(n, Complex64::ZERO);
            let stride = dims[0];
            for iz in 0..dims[2] {
                for ix in 0..dims[0] {
                    let base = iz * dims[1] * dims[0] + ix;
                    for iy in 0..n {
                        line[iy] = data[base + iy * stride];
                    }
                    plan.process_with_scratch(line, scratch);
                    for iy in 0..n {
                        data[base + iy * stride] = line[iy];
                    }
                }
            }
        }
        _ => {
            line.resize(n, Complex64::ZERO);
            let stride = dims[0] * dims[1];
            for iy in 0..dims[1] {
                for ix in 0..dims[0] {
                    let base = iy * dims[0] + ix;
                    for iz in 0..n {
                        line[iz] = data[base + iz * stride];
                    }
                    plan.process_with_scratch(line, scratch);
                    for iz in 0..n {
                        data[base + iz * stride] = line[iz];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(grid: &Grid, seed: u64) -> Vec<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..grid.size()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// A random real field with no content outside the retained band, built
    /// by round-tripping white noise through the padded truncation.
    fn random_band_limited(grid: &Grid, seed: u64) -> Vec<Complex64> {
        let spec = grid.forward_real(&random_field(grid, seed));
        let phys = grid.inverse_padded(&spec);
        grid.forward_padded(&phys)
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    fn max_norm(v: &[Complex64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.norm()))
    }

    #[test]
    fn round_trip_reproduces_physical_values() {
        let grid = Grid::new_2d([16, 8], [1.0, 2.0], [-0.3, 0.1]).unwrap();
        let a = random_field(&grid, 7);
        let back = grid.inverse_to_real(&grid.forward_real(&a));
        let scale = max_abs(&a);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn round_trip_3d_mixed_extents() {
        // 12 is deliberately not a power of two (mixed-radix path).
        let grid = Grid::new_3d([12, 8, 4], [1.0, 1.5, 0.5], [0.0; 3]).unwrap();
        let a = random_field(&grid, 11);
        let back = grid.inverse_to_real(&grid.forward_real(&a));
        let scale = max_abs(&a);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn real_fields_have_hermitian_spectra() {
        let grid = Grid::new_3d([8, 4, 6], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        let spec = grid.forward_real(&random_field(&grid, 3));
        assert!(grid.hermitian_error(&spec) <= 1e-13);
    }

    #[test]
    fn parseval_identity() {
        let grid = Grid::uniform(3, 8, 1.0, 0.0).unwrap();
        let a = random_field(&grid, 5);
        let spec = grid.forward_real(&a);
        let phys_energy: f64 =
            a.iter().map(|x| x * x).sum::<f64>() / grid.size() as f64;
        let spec_energy: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        assert!((phys_energy - spec_energy).abs() <= 1e-13 * phys_energy);
    }

    #[test]
    fn derivative_of_single_modes() {
        let grid = Grid::new_2d([16, 8], [1.0, 1.0], [0.0, 0.0]).unwrap();
        // d/dx sin(2πx) = 2π cos(2πx)
        let s = grid.forward_real(&grid.sample(|x| (2.0 * PI * x[0]).sin()));
        let d = grid.inverse_to_real(&grid.derivative(&s, 0));
        let want = grid.sample(|x| 2.0 * PI * (2.0 * PI * x[0]).cos());
        for (a, b) in d.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-11, "{a} vs {b}");
        }
        // d/dy cos(2πy) = −2π sin(2πy), on the shorter axis
        let s = grid.forward_real(&grid.sample(|x| (2.0 * PI * x[1]).cos()));
        let d = grid.inverse_to_real(&grid.derivative(&s, 1));
        let want = grid.sample(|x| -2.0 * PI * (2.0 * PI * x[1]).sin());
        for (a, b) in d.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn laplacian_of_single_mode() {
        let grid = Grid::new_2d([16, 16], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let s = grid.forward_real(&grid.sample(|x| (2.0 * PI * x[1]).sin()));
        let lap = grid.inverse_to_real(&grid.laplacian(&s));
        let want = grid.sample(|x| -4.0 * PI * PI * (2.0 * PI * x[1]).sin());
        for (a, b) in lap.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn dealiased_product_has_exact_coefficients() {
        // cos(2πx)·cos(4πx) = (cos(2πx) + cos(6πx))/2: coefficients 1/4 at
        // frequencies ±1 and ±3, everything else zero.
        let grid = Grid::new_2d([16, 4], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let a = grid.forward_real(&grid.sample(|x| (2.0 * PI * x[0]).cos()));
        let b = grid.forward_real(&grid.sample(|x| (4.0 * PI * x[0]).cos()));
        let (ap, bp) = grid.inverse_pair_padded(&a, &b);
        let prod: Vec<f64> = ap.iter().zip(&bp).map(|(x, y)| x * y).collect();
        let spec = grid.forward_padded(&prod);
        for idx in 0..grid.size() {
            let k = grid.k_at(idx);
            let f0 = (k[0] / (2.0 * PI)).round() as i64;
            let want = if k[1] == 0.0 && (f0.abs() == 1 || f0.abs() == 3) {
                0.25
            } else {
                0.0
            };
            assert!(
                (spec[idx] - want).norm() <= 1e-15,
                "f0={f0}: {}",
                spec[idx]
            );
        }
    }

    #[test]
    fn dealiasing_discards_out_of_band_content() {
        // cos(14πx)² = (1 + cos(28πx))/2. On 16 points the quadratic mode
        // (frequency 14) would alias onto frequency −2 without padding; the
        // dealiased product must keep only the mean.
        let grid = Grid::new_2d([16, 4], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let a = grid.forward_real(&grid.sample(|x| (14.0 * PI * x[0]).cos()));
        let ap = grid.inverse_padded(&a);
        let prod: Vec<f64> = ap.iter().map(|x| x * x).collect();
        let spec = grid.forward_padded(&prod);
        for idx in 0..grid.size() {
            let want = if idx == 0 { 0.5 } else { 0.0 };
            assert!((spec[idx] - want).norm() <= 1e-15, "idx={idx}: {}", spec[idx]);
        }
    }

    #[test]
    fn paired_transforms_match_single_transforms() {
        let grid = Grid::new_3d([8, 6, 4], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        let a = random_band_limited(&grid, 21);
        let b = random_band_limited(&grid, 22);
        let (ap, bp) = grid.inverse_pair_padded(&a, &b);
        let ap1 = grid.inverse_padded(&a);
        let bp1 = grid.inverse_padded(&b);
        let scale = max_abs(&ap1).max(max_abs(&bp1));
        for i in 0..grid.padded_size() {
            assert!((ap[i] - ap1[i]).abs() <= 1e-13 * scale);
            assert!((bp[i] - bp1[i]).abs() <= 1e-13 * scale);
        }
        let (ah, bh) = grid.forward_pair_padded(&ap, &bp);
        let ah1 = grid.forward_padded(&ap1);
        let bh1 = grid.forward_padded(&bp1);
        let sscale = max_norm(&ah1).max(max_norm(&bh1));
        for i in 0..grid.size() {
            assert!((ah[i] - ah1[i]).norm() <= 1e-13 * sscale);
            assert!((bh[i] - bh1[i]).norm() <= 1e-13 * sscale);
            // and the padded round trip reproduces the band-limited input
            assert!((ah[i] - a[i]).norm() <= 1e-12 * sscale);
            assert!((bh[i] - b[i]).norm() <= 1e-12 * sscale);
        }
    }

    #[test]
    fn projection_annihilates_pure_gradients() {
        let grid = Grid::new_3d([8, 8, 8], [1.0, 1.0, 1.0], [0.0; 3]).unwrap();
        let phi = random_band_limited(&grid, 9);
        let mut v = grid.gradient(&phi);
        let scale = v.iter().map(|c| max_norm(c)).fold(0.0f64, f64::max);
        let psi = grid.project(&mut v);
        for comp in &v {
            assert!(max_norm(comp) <= 1e-12 * scale);
        }
        // the removed part is ∇ψ: reconstruct and compare to the input
        let grad_psi = grid.gradient(&psi);
        let orig = grid.gradient(&phi);
        for (g, o) in grad_psi.iter().zip(&orig) {
            for i in 0..grid.size() {
                assert!((g[i] - o[i]).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn projection_is_idempotent_and_preserves_solenoidal_fields() {
        let grid = Grid::new_2d([16, 16], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let mut v: Vec<Vec<Complex64>> = (0..2)
            .map(|a| random_band_limited(&grid, 30 + a as u64))
            .collect();
        grid.project(&mut v);
        assert!(grid.divergence_ratio(&v) <= 1e-13);
        let before = v.clone();
        let scale = v.iter().map(|c| max_norm(c)).fold(0.0f64, f64::max);
        let psi = grid.project(&mut v);
        assert!(max_norm(&psi) <= 1e-14 * scale);
        for (b, a) in before.iter().zip(&v) {
            for i in 0..grid.size() {
                assert!((b[i] - a[i]).norm() <= 1e-14 * scale);
            }
        }
    }

    #[test]
    fn projection_leaves_the_mean_mode_untouched() {
        let grid = Grid::new_2d([8, 8], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let mut v: Vec<Vec<Complex64>> = (0..2)
            .map(|a| random_band_limited(&grid, 40 + a as u64))
            .collect();
        let means = [v[0][0], v[1][0]];
        grid.project(&mut v);
        assert_eq!(v[0][0], means[0]);
        assert_eq!(v[1][0], means[1]);
    }

    #[test]
    fn divergence_matches_sum_of_derivatives() {
        let grid = Grid::new_2d([8, 8], [1.0, 1.0], [0.0, 0.0]).unwrap();
        let v: Vec<Vec<Complex64>> = (0..2)
            .map(|a| random_band_limited(&grid, 50 + a as u64))
            .collect();
        let div = grid.divergence(&v);
        let dx = grid.derivative(&v[0], 0);
        let dy = grid.derivative(&v[1], 1);
        for i in 0..grid.size() {
            assert!((div[i] - dx[i] - dy[i]).norm() <= 1e-15);
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(Grid::new_2d([15, 8], [1.0, 1.0], [0.0, 0.0]).is_err());
        assert!(Grid::new_2d([2, 8], [1.0, 1.0], [0.0, 0.0]).is_err());
        assert!(Grid::new_2d([8, 8], [0.0, 1.0], [0.0, 0.0]).is_err());
        assert!(Grid::uniform(4, 8, 1.0, 0.0).is_err());
        let g = Grid::uniform(2, 8, 1.0, -0.5).unwrap();
        assert_eq!(g.extents(), [8, 8, 1]);
        assert_eq!(g.coords_of(0), [-0.5, -0.5, 0.0]);
        let c = g.coords_of(g.size() - 1);
        assert!((c[0] - 0.375).abs() <= 1e-15 && (c[1] - 0.375).abs() <= 1e-15);
    }

    #[test]
    fn advective_eigenvalue_and_empty_divergence() {
        let grid = Grid::new_2d([64, 32], [1.0, 1.0], [0.0, 0.0]).unwrap();
        assert!((grid.max_advective_eigenvalue() - PI * 64.0).abs() <= 1e-12);
        let zero = vec![vec![Complex64::ZERO; grid.size()]; 2];
        assert_eq!(grid.divergence_ratio(&zero), 0.0);
    }
}
