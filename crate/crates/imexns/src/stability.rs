//! Amplification-factor analysis: stability domains, imaginary-axis stability
//! margins, damping limits, and empirical consistency orders.
//!
//! Every quantity derives from executing one actual step of the method on the
//! scalar linear split system `du/dt = lambda_c u + lambda_d u` with `dt = 1`
//! and `u0 = 1`, so the measured `R(z)` is the amplification factor of the
//! production stepping code, not a separately maintained formula. The
//! spectral placement of `z` is selected by [`SpectralMode`]:
//!
//! * `Implicit` — `lambda_d = z`, `lambda_c = 0`;
//! * `Explicit` — `lambda_c = z`, `lambda_d = 0`;
//! * `SemiImplicit` — `lambda_d = Re z`, `lambda_c = i Im z` (diffusive real
//!   axis implicit, oscillatory imaginary axis explicit).
//!
//! Only one-step methods are meaningful here, so [`MethodSpec`] admits
//! Runge-Kutta pairs and deferred-correction configurations; the multistep
//! integrator has no single-step amplification factor and is excluded at the
//! type level.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::dd::ComplexDd;
use crate::error::{Error, Result};
use crate::integrators::{imex_rk_step_const, RkScheme};
use crate::par::map_indexed;
use crate::scalar::{Field, LinearSplit, Real};
use crate::sdc::{sdc_step, SdcConfig};
use crate::tableaux::{builtin_tableau, TableauId};

/// A one-step method whose amplification factor can be probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodSpec {
    Tableau(TableauId),
    Sdc(SdcConfig),
}

impl MethodSpec {
    pub fn name(&self) -> String {
        match self {
            MethodSpec::Tableau(id) => id.name().to_string(),
            MethodSpec::Sdc(cfg) => cfg.name(),
        }
    }
}

/// Placement of the probe argument on the split right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralMode {
    Implicit,
    Explicit,
    SemiImplicit,
}

impl SpectralMode {
    pub const ALL: [SpectralMode; 3] = [
        SpectralMode::Implicit,
        SpectralMode::Explicit,
        SpectralMode::SemiImplicit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SpectralMode::Implicit => "implicit",
            SpectralMode::Explicit => "explicit",
            SpectralMode::SemiImplicit => "semi-implicit",
        }
    }
}

/// Number of implicit substeps a single step of the method performs
/// (stage count minus the explicit first stage for Runge-Kutta pairs).
pub fn substeps(method: &MethodSpec) -> usize {
    match method {
        MethodSpec::Tableau(id) => builtin_tableau(*id).s - 1,
        MethodSpec::Sdc(cfg) => cfg.substep_count(),
    }
}

/// Per-substep argument `z / substeps`, for cost-normalized comparisons.
pub fn scaled_argument<C: Field>(method: &MethodSpec, z: C) -> C {
    z / C::from_f64(substeps(method) as f64)
}

fn split_lambdas<C: Field>(mode: SpectralMode, z: C) -> (C, C) {
    match mode {
        SpectralMode::Implicit => (C::zero(), z),
        SpectralMode::Explicit => (z, C::zero()),
        SpectralMode::SemiImplicit => {
            let ld = C::from_re(z.re());
            (z - ld, ld)
        }
    }
}

/// Amplification factor `R(z)`: one step with `dt = 1` from `u0 = 1`.
pub fn eval_r<C: Field>(method: &MethodSpec, mode: SpectralMode, z: C) -> Result<C> {
    let (lambda_c, lambda_d) = split_lambdas(mode, z);
    let sys = LinearSplit::new(lambda_c, lambda_d);
    let one = C::one();
    match method {
        MethodSpec::Tableau(id) => {
            let scheme = RkScheme::<C::Re>::from_id(*id);
            imex_rk_step_const(&sys, &scheme, 0.0, C::Re::one(), &one, &lambda_d)
        }
        MethodSpec::Sdc(cfg) => sdc_step(&sys, cfg, 0.0, C::Re::one(), &one),
    }
}

/// `|R(z)|`, mapping amplification poles to infinity instead of failing.
fn abs_r_lenient(method: &MethodSpec, mode: SpectralMode, z: Complex64) -> Result<f64> {
    match eval_r(method, mode, z) {
        Ok(r) => Ok(r.norm()),
        Err(Error::AmplificationPole { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Result of the imaginary-axis stability search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriticalImag {
    /// Largest `y` with `|R(re + i y)| <= 1`, to absolute tolerance `1e-4`.
    Bounded(f64),
    /// No instability found below `y = 10^3`.
    Unbounded,
}

/// Finds the imaginary-axis stability margin at fixed real part.
///
/// Starting from `y = 0.01` the search doubles until `|R| > 1`, then bisects
/// the bracket to an absolute tolerance of `1e-4`. With `scaled`, the
/// coordinates are per-substep values and evaluation multiplies by
/// [`substeps`]. Requires `|R| < 1` on the real axis at `re_part`.
pub fn critical_imag(
    method: &MethodSpec,
    mode: SpectralMode,
    re_part: f64,
    scaled: bool,
) -> Result<CriticalImag> {
    let n = if scaled { substeps(method) as f64 } else { 1.0 };
    let absr = |y: f64| abs_r_lenient(method, mode, Complex64::new(re_part * n, y * n));

    let r0 = absr(0.0)?;
    if r0 >= 1.0 {
        return Err(Error::BracketFailed {
            lo: re_part,
            hi: re_part,
            reason: format!("|R| = {r0:.6} >= 1 already on the real axis"),
        });
    }

    let mut lo = 0.0f64;
    let mut y = 0.01f64;
    while absr(y)? <= 1.0 {
        lo = y;
        y *= 2.0;
        if y > 1e3 {
            return Ok(CriticalImag::Unbounded);
        }
    }
    let mut hi = y;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if absr(mid)? > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalImag::Bounded(0.5 * (lo + hi)))
}

/// Damping limit `|R(-10^6)|` in implicit mode (zero for L-stable methods).
pub fn l_limit(method: &MethodSpec) -> Result<f64> {
    abs_r_lenient(method, SpectralMode::Implicit, Complex64::new(-1e6, 0.0))
}

/// Result of the consistency-order fit.
#[derive(Clone, Copy, Debug)]
pub struct OrderFit {
    /// Fitted order: slope of `log |R(z) - e^z|` against `log r`, minus one.
    pub order: f64,
    /// Root-mean-square residual of the linear fit (in log space).
    pub rms_residual: f64,
}

/// Residual ceiling above which an order fit is rejected as indeterminate.
pub const ORDER_FIT_RESIDUAL_LIMIT: f64 = 0.1;

/// Measures the consistency order from the one-step error `|R(z) - e^z|`
/// along the ray `z = r e^{i 3 pi / 4}` for eight logarithmically spaced
/// radii in `[10^-3, 10^-1]`, evaluated in double-double precision so the
/// high-order errors stay above the arithmetic floor.
pub fn consistency_order(method: &MethodSpec, mode: SpectralMode) -> Result<OrderFit> {
    const NPTS: usize = 8;
    let theta = 3.0 * std::f64::consts::PI / 4.0;
    let (dir_re, dir_im) = (theta.cos(), theta.sin());

    let mut log_r = Vec::with_capacity(NPTS);
    let mut log_eps = Vec::with_capacity(NPTS);
    for k in 0..NPTS {
        let r = 10f64.powf(-3.0 + 2.0 * k as f64 / (NPTS - 1) as f64);
        let z = ComplexDd::from_re_im(r * dir_re, r * dir_im);
        let amp = eval_r(method, mode, z)?;
        let eps = (amp - z.exp()).modulus();
        log_r.push(r.ln());
        log_eps.push(eps.ln());
    }

    // Least-squares line through (log r, log eps).
    let n = NPTS as f64;
    let sx: f64 = log_r.iter().sum();
    let sy: f64 = log_eps.iter().sum();
    let sxx: f64 = log_r.iter().map(|x| x * x).sum();
    let sxy: f64 = log_r.iter().zip(&log_eps).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rms_residual = (log_r
        .iter()
        .zip(&log_eps)
        .map(|(x, y)| {
            let d = y - (slope * x + intercept);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();

    if rms_residual > ORDER_FIT_RESIDUAL_LIMIT {
        return Err(Error::IndeterminateOrder {
            residual: rms_residual,
            limit: ORDER_FIT_RESIDUAL_LIMIT,
        });
    }
    Ok(OrderFit {
        order: slope - 1.0,
        rms_residual,
    })
}

/// Rectangular lattice in the complex plane.
#[derive(Clone, Copy, Debug)]
pub struct ScanRange {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanRange {
    fn coord(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n <= 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    pub fn re(&self, ix: usize) -> f64 {
        Self::coord(self.re_min, self.re_max, self.nx, ix)
    }

    pub fn im(&self, iy: usize) -> f64 {
        Self::coord(self.im_min, self.im_max, self.ny, iy)
    }
}

/// Scan result: `|R|` and `|R - e^z|` on the lattice, row-major with the
/// imaginary axis outermost. Poles are flagged as infinities, not errors.
#[derive(Clone, Debug)]
pub struct ScanGrid {
    pub range: ScanRange,
    pub scaled: bool,
    pub abs_r: Vec<f64>,
    pub abs_err: Vec<f64>,
    pub pole_count: usize,
}

/// Evaluates the amplification factor on a lattice.
///
/// With `scaled`, lattice coordinates are per-substep arguments and each
/// evaluation happens at `z = z_lattice * substeps`; the error column always
/// compares against `e^z` at the evaluated argument.
pub fn scan_domain(
    method: &MethodSpec,
    mode: SpectralMode,
    range: &ScanRange,
    scaled: bool,
) -> Result<ScanGrid> {
    let n = if scaled { substeps(method) as f64 } else { 1.0 };
    let total = range.nx * range.ny;
    let cells: Vec<Result<(f64, f64, bool)>> = map_indexed(total, |idx| {
        let (iy, ix) = (idx / range.nx, idx % range.nx);
        let z = Complex64::new(range.re(ix) * n, range.im(iy) * n);
        match eval_r(method, mode, z) {
            Ok(r) => Ok((r.norm(), (r - z.exp()).norm(), false)),
            Err(Error::AmplificationPole { .. }) => Ok((f64::INFINITY, f64::INFINITY, true)),
            Err(e) => Err(e),
        }
    });
    let mut abs_r = Vec::with_capacity(total);
    let mut abs_err = Vec::with_capacity(total);
    let mut pole_count = 0;
    for cell in cells {
        let (r, e, pole) = cell?;
        abs_r.push(r);
        abs_err.push(e);
        pole_count += usize::from(pole);
    }
    Ok(ScanGrid {
        range: *range,
        scaled,
        abs_r,
        abs_err,
        pole_count,
    })
}

impl ScanGrid {
    /// Number of lattice points with `|R| <= threshold`.
    pub fn count_within(&self, threshold: f64) -> usize {
        self.abs_r.iter().filter(|&&r| r <= threshold).count()
    }
}

/// Writes a scan as CSV (`re,im,absR,absErr`, 17 significant digits, LF line
/// endings, imaginary axis outermost).
pub fn write_scan_csv<W: Write>(w: &mut W, scan: &ScanGrid) -> io::Result<()> {
    writeln!(w, "re,im,absR,absErr")?;
    let r = &scan.range;
    for iy in 0..r.ny {
        for ix in 0..r.nx {
            let idx = iy * r.nx + ix;
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.re(ix),
                r.im(iy),
                scan.abs_r[idx],
                scan.abs_err[idx]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tab(id: TableauId) -> MethodSpec {
        MethodSpec::Tableau(id)
    }

    #[test]
    fn euler_is_first_order_in_every_mode() {
        for mode in SpectralMode::ALL {
            let fit = consistency_order(&tab(TableauId::Euler), mode).unwrap();
            assert!(
                (fit.order - 1.0).abs() < 0.1,
                "{}: order {}",
                mode.name(),
                fit.order
            );
        }
    }

    #[test]
    fn second_and_fourth_order_examples_in_semi_implicit_mode() {
        let cb2 = consistency_order(&tab(TableauId::Cb2), SpectralMode::SemiImplicit).unwrap();
        assert!((cb2.order - 2.0).abs() < 0.1, "CB2: order {}", cb2.order);
        let cb4 = consistency_order(&tab(TableauId::Cb4), SpectralMode::SemiImplicit).unwrap();
        assert!((cb4.order - 4.0).abs() < 0.1, "CB4: order {}", cb4.order);
    }

    #[test]
    fn every_tableau_meets_its_declared_order_in_every_mode() {
        // One-sided bound: a measured order above the declared one is
        // legitimate (a sub-tableau may satisfy higher-order conditions on
        // the scalar linear problem), while falling short indicates a
        // coefficient or coupling defect.
        for id in TableauId::ALL {
            let declared = builtin_tableau(id).declared_order as f64;
            for mode in SpectralMode::ALL {
                let fit = consistency_order(&tab(id), mode).unwrap();
                assert!(
                    fit.order >= declared - 0.1,
                    "{} {}: order {} < declared {} (residual {})",
                    id.name(),
                    mode.name(),
                    fit.order,
                    declared,
                    fit.rms_residual
                );
            }
        }
    }

    #[test]
    fn cb3e_explicit_part_gains_an_order_on_linear_problems() {
        // The explicit sub-tableau of RK-CB3e satisfies the scalar linear
        // fourth-order condition exactly: with its c = (0, 1/3, 1, 1),
        // A·c = (0, 0, 1/3, 1/2), A²·c = (0, 0, 0, 1/12), and
        // b·A²·c = 1/2 · 1/12 = 1/24. On purely explicit splittings the
        // measured order is therefore 4, one above the design order of the
        // coupled pair.
        let fit = consistency_order(&tab(TableauId::Cb3e), SpectralMode::Explicit).unwrap();
        assert!(
            (fit.order - 4.0).abs() < 0.1,
            "order {} (residual {})",
            fit.order,
            fit.rms_residual
        );
        // The coupled modes stay at the design order.
        for mode in [SpectralMode::Implicit, SpectralMode::SemiImplicit] {
            let fit = consistency_order(&tab(TableauId::Cb3e), mode).unwrap();
            assert!(
                (fit.order - 3.0).abs() < 0.1,
                "{}: order {}",
                mode.name(),
                fit.order
            );
        }
    }

    #[test]
    fn trapezoidal_amplification_matches_closed_form() {
        for &(re, im) in &[(-0.5, 0.3), (-2.0, 1.0), (0.2, -0.7)] {
            let z = Complex64::new(re, im);
            let got = eval_r(&tab(TableauId::Tr), SpectralMode::Implicit, z).unwrap();
            let want = (1.0 + 0.5 * z) / (1.0 - 0.5 * z);
            assert!((got - want).norm() < 1e-14, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn damping_limits_at_strongly_negative_argument() {
        // The trapezoidal implicit part approaches magnitude one from below.
        let tr = l_limit(&tab(TableauId::Tr)).unwrap();
        let expect = (5e5 - 1.0) / (5e5 + 1.0);
        assert!((tr - expect).abs() < 1e-9, "{tr} vs {expect}");
        // Strongly damping schemes go to (numerically) zero.
        for id in [TableauId::Euler, TableauId::Cb3e, TableauId::Ars3, TableauId::Cb4] {
            let lim = l_limit(&tab(id)).unwrap();
            assert!(lim < 1e-4, "{}: {lim}", id.name());
        }
    }

    #[test]
    fn explicit_euler_imaginary_margin() {
        // R(z) = 1 + z in explicit mode; |1 + re + i y| = 1 at
        // y = sqrt(1 - (1 + re)^2) for re in (-2, 0).
        let got = critical_imag(&tab(TableauId::Euler), SpectralMode::Explicit, -0.5, false)
            .unwrap();
        match got {
            CriticalImag::Bounded(y) => {
                assert!((y - 0.75f64.sqrt()).abs() < 2e-4, "y = {y}");
            }
            CriticalImag::Unbounded => panic!("expected a bounded margin"),
        }
    }

    #[test]
    fn a_stable_implicit_part_is_unbounded() {
        let got = critical_imag(&tab(TableauId::Tr), SpectralMode::Implicit, -0.1, false)
            .unwrap();
        assert_eq!(got, CriticalImag::Unbounded);
    }

    #[test]
    fn unstable_real_axis_fails_the_precondition() {
        let err = critical_imag(&tab(TableauId::Euler), SpectralMode::Explicit, 0.5, false)
            .unwrap_err();
        assert!(matches!(err, Error::BracketFailed { .. }), "{err}");
    }

    #[test]
    fn substep_counts() {
        assert_eq!(substeps(&tab(TableauId::Euler)), 1);
        assert_eq!(substeps(&tab(TableauId::Cb4)), 5);
        let sdc = MethodSpec::Sdc(SdcConfig::new(3, 5, TableauId::Euler).unwrap());
        assert_eq!(substeps(&sdc), 18);
        let z = Complex64::new(-3.6, 1.8);
        let zs = scaled_argument(&sdc, z);
        assert!((zs - Complex64::new(-0.2, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn scan_shape_pole_flag_and_scaling() {
        let range = ScanRange {
            re_min: 0.9,
            re_max: 1.1,
            im_min: 0.0,
            im_max: 0.0,
            nx: 3,
            ny: 1,
        };
        // Implicit Euler pole at z = 1: flagged as infinity, not an error.
        let scan = scan_domain(&tab(TableauId::Euler), SpectralMode::Implicit, &range, false)
            .unwrap();
        assert_eq!(scan.abs_r.len(), 3);
        assert_eq!(scan.pole_count, 1);
        assert!(scan.abs_r[1].is_infinite());
        assert!(scan.abs_r[0].is_finite());

        // Scaled evaluation multiplies the lattice argument by the substep count.
        let range1 = ScanRange {
            re_min: -0.1,
            re_max: -0.1,
            im_min: 0.2,
            im_max: 0.2,
            nx: 1,
            ny: 1,
        };
        let m = tab(TableauId::Cb4); // 5 substeps
        let scaled = scan_domain(&m, SpectralMode::SemiImplicit, &range1, true).unwrap();
        let direct = eval_r(&m, SpectralMode::SemiImplicit, Complex64::new(-0.5, 1.0)).unwrap();
        assert!((scaled.abs_r[0] - direct.norm()).abs() < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let range = ScanRange {
            re_min: -1.0,
            re_max: 0.0,
            im_min: -0.5,
            im_max: 0.5,
            nx: 2,
            ny: 3,
        };
        let scan = scan_domain(&tab(TableauId::Tr), SpectralMode::Implicit, &range, false)
            .unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &scan).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "re,im,absR,absErr");
        assert_eq!(lines.len(), 1 + 6);
        // Imaginary axis outermost: the second row shares im with the first.
        assert!(lines[1].starts_with("-1.0000000000000000e0,-5.0000000000000000e-1"));
        assert!(lines[2].starts_with("0.0000000000000000e0,-5.0000000000000000e-1"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn conjugate_symmetry(
            re in -3.0f64..0.5,
            im in 0.01f64..3.0,
            which in 0usize..8,
        ) {
            let method = if which < 7 {
                tab(TableauId::ALL[which])
            } else {
                MethodSpec::Sdc(SdcConfig::new(2, 2, TableauId::Euler).unwrap())
            };
            let z = Complex64::new(re, im);
            for mode in SpectralMode::ALL {
                let up = eval_r(&method, mode, z);
                let down = eval_r(&method, mode, z.conj());
                if let (Ok(up), Ok(down)) = (up, down) {
                    prop_assert!(
                        (up.conj() - down).norm() <= 1e-13,
                        "{} {}: R(z)* = {}, R(z*) = {}",
                        method.name(),
                        mode.name(),
                        up.conj(),
                        down
                    );
                }
            }
        }
    }
}
