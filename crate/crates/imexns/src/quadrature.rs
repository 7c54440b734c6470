//! Gauss–Lobatto–Legendre collocation grids and spectral integration weights.
//!
//! A grid with parameter `M` has `M + 1` nodes on the unit interval: the two
//! endpoints plus the roots of the derivative of the degree-`M` Legendre
//! polynomial. The companion weight matrix integrates the Lagrange cardinal
//! functions over each subinterval,
//! `w[m][q] = ∫_{t_m}^{t_{m+1}} ℓ_q(τ) dτ`,
//! which is what node-to-node spectral deferred corrections consume.
//!
//! Everything is generic over the precision type so the extended-precision
//! convergence studies use the same code path as production `f64`.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

/// Newton iteration cap for polynomial root finding.
const MAX_NEWTON: usize = 100;

/// Collocation grid on the unit interval with subinterval integration weights.
#[derive(Clone, Debug)]
pub struct GridOf<R: Real> {
    /// Polynomial degree; the grid has `m + 1` nodes.
    pub m: usize,
    /// Nodes `t_0 = 0 < t_1 < ... < t_M = 1`.
    pub nodes: Vec<R>,
    /// Subinterval lengths `t_{m+1} - t_m` (length `m`).
    pub lengths: Vec<R>,
    /// `weights[m][q] = ∫_{t_m}^{t_{m+1}} ℓ_q(τ) dτ` (shape `m × (m + 1)`).
    pub weights: Vec<Vec<R>>,
}

/// Production-precision grid.
pub type SdcGrid = GridOf<f64>;

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence and the
/// derivative identity `(1 - x^2) P_n' = n (P_{n-1} - x P_n)`.
fn legendre_with_deriv<R: Real>(n: usize, x: R) -> (R, R) {
    let one = R::one();
    if n == 0 {
        return (one, R::zero());
    }
    let mut pm1 = one; // P_0
    let mut p = x; // P_1
    for k in 1..n {
        // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        let next = (R::from_ratio(2 * k as i128 + 1, k as i128 + 1) * x) * p
            - R::from_ratio(k as i128, k as i128 + 1) * pm1;
        pm1 = p;
        p = next;
    }
    let nn = R::from_f64(n as f64);
    let denom = one - x * x;
    let dp = nn * (pm1 - x * p) / denom;
    (p, dp)
}

/// Evaluates `(P_n'(x), P_n''(x))` using the Legendre differential equation
/// `(1 - x^2) P_n'' = 2 x P_n' - n (n + 1) P_n`.
fn legendre_deriv_pair<R: Real>(n: usize, x: R) -> (R, R) {
    let (p, dp) = legendre_with_deriv(n, x);
    let nn1 = R::from_f64((n * (n + 1)) as f64);
    let two = R::from_f64(2.0);
    let ddp = (two * x * dp - nn1 * p) / (R::one() - x * x);
    (dp, ddp)
}

fn newton<R: Real>(
    mut x: R,
    what: &str,
    mut f_df: impl FnMut(R) -> (R, R),
) -> Result<R> {
    for _ in 0..MAX_NEWTON {
        let (f, df) = f_df(x);
        let dx = f / df;
        x = x - dx;
        if dx.abs().to_f64() <= R::root_tol() {
            return Ok(x);
        }
    }
    Err(Error::RootFinding {
        what: what.to_string(),
        iterations: MAX_NEWTON,
    })
}

/// Gauss–Lobatto–Legendre nodes on `[0, 1]` for polynomial degree `m >= 1`.
///
/// Interior nodes are the roots of `P_m'`, found by Newton iteration from
/// Chebyshev–Lobatto initial guesses (each guess lies in the basin of the
/// adjacent root for all practical `m`).
pub fn gll_nodes<R: Real>(m: usize) -> Result<Vec<R>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "collocation degree must be at least 1".into(),
        ));
    }
    let mut xs = Vec::with_capacity(m + 1);
    xs.push(-R::one());
    for k in 1..m {
        let guess = R::from_f64(-(std::f64::consts::PI * k as f64 / m as f64).cos());
        let x = newton(guess, "Gauss-Lobatto interior node", |x| {
            legendre_deriv_pair::<R>(m, x)
        })?;
        xs.push(x);
    }
    xs.push(R::one());
    // Map from [-1, 1] to [0, 1], pinning the endpoints exactly.
    let half = R::from_ratio(1, 2);
    let mut nodes: Vec<R> = xs.iter().map(|&x| half * (x + R::one())).collect();
    nodes[0] = R::zero();
    nodes[m] = R::one();
    Ok(nodes)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (internal quadrature used to
/// integrate the cardinal functions exactly).
pub fn gauss_legendre<R: Real>(n: usize) -> Result<(Vec<R>, Vec<R>)> {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 1..=n {
        let guess = R::from_f64((std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos());
        let x = newton(guess, "Gauss-Legendre node", |x| legendre_with_deriv::<R>(n, x))?;
        let (_, dp) = legendre_with_deriv::<R>(n, x);
        let w = R::from_f64(2.0) / ((R::one() - x * x) * dp * dp);
        nodes.push(x);
        weights.push(w);
    }
    nodes.reverse();
    weights.reverse();
    Ok((nodes, weights))
}

/// Lagrange cardinal function `ℓ_q` on the given nodes, by direct product.
fn cardinal<R: Real>(nodes: &[R], q: usize, x: R) -> R {
    let mut p = R::one();
    for (j, &tj) in nodes.iter().enumerate() {
        if j != q {
            p = p * (x - tj) / (nodes[q] - tj);
        }
    }
    p
}

/// Integration weights `w[m][q] = ∫_{t_m}^{t_{m+1}} ℓ_q` for arbitrary nodes.
///
/// Uses Gauss–Legendre quadrature with `nodes.len()` points per subinterval,
/// exact for the degree-`M` cardinal functions with margin.
pub fn sdc_weights<R: Real>(nodes: &[R]) -> Result<Vec<Vec<R>>> {
    let n = nodes.len();
    let (gx, gw) = gauss_legendre::<R>(n)?;
    let half = R::from_ratio(1, 2);
    let mut w = Vec::with_capacity(n - 1);
    for m in 0..n - 1 {
        let (a, b) = (nodes[m], nodes[m + 1]);
        let mid = half * (a + b);
        let rad = half * (b - a);
        let mut row = Vec::with_capacity(n);
        for q in 0..n {
            let mut acc = R::zero();
            for (&x, &wt) in gx.iter().zip(&gw) {
                acc = acc + wt * cardinal(nodes, q, mid + rad * x);
            }
            row.push(acc * rad);
        }
        w.push(row);
    }
    Ok(w)
}

/// Builds the degree-`m` collocation grid with its weight matrix.
pub fn sdc_grid<R: Real>(m: usize) -> Result<GridOf<R>> {
    let nodes = gll_nodes::<R>(m)?;
    let lengths = nodes.windows(2).map(|p| p[1] - p[0]).collect();
    let weights = sdc_weights(&nodes)?;
    Ok(GridOf {
        m,
        nodes,
        lengths,
        weights,
    })
}

/// Barycentric (second-form) Lagrange interpolation of `values` at `x`.
///
/// Exact at the nodes by early return, numerically stable between them.
pub fn lagrange_interpolate<C: Field>(nodes: &[C::Re], values: &[C], x: C::Re) -> C {
    assert_eq!(nodes.len(), values.len(), "node/value length mismatch");
    // Barycentric weights 1 / prod_{j != q} (t_q - t_j).
    let mut num = C::zero();
    let mut den = C::zero();
    for (q, (&tq, &vq)) in nodes.iter().zip(values).enumerate() {
        if x == tq {
            return vq;
        }
        let mut wq = C::Re::one();
        for (j, &tj) in nodes.iter().enumerate() {
            if j != q {
                wq = wq / (tq - tj);
            }
        }
        let factor = C::from_re(wq / (x - tq));
        num = num + factor * vq;
        den = den + factor;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;

    #[test]
    fn degree_one_grid_is_trapezoidal() {
        let g = sdc_grid::<f64>(1).unwrap();
        assert_eq!(g.nodes, vec![0.0, 1.0]);
        assert!((g.weights[0][0] - 0.5).abs() < 1e-15);
        assert!((g.weights[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_three_nodes_hit_closed_form() {
        // Interior nodes of the degree-3 Lobatto grid: (1 ± 1/sqrt(5)) / 2.
        let g = sdc_grid::<f64>(3).unwrap();
        let lo = 0.5 * (1.0 - 1.0 / 5.0f64.sqrt());
        let hi = 0.5 * (1.0 + 1.0 / 5.0f64.sqrt());
        assert!((g.nodes[1] - lo).abs() < 1e-15);
        assert!((g.nodes[2] - hi).abs() < 1e-15);
        // Summing each cardinal's weights over all subintervals gives its
        // full-interval quadrature weight: {1/12, 5/12, 5/12, 1/12}.
        let full: Vec<f64> = (0..4)
            .map(|q| (0..3).map(|m| g.weights[m][q]).sum())
            .collect();
        let expect = [1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0];
        for (got, want) in full.iter().zip(expect) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn degree_three_nodes_in_extended_precision() {
        let g = sdc_grid::<Dd>(3).unwrap();
        // 1/sqrt(5) via Newton in double-double: x <- x (3 - 5 x^2) / 2.
        let mut inv_sqrt5 = Dd::from_f64(1.0 / 5.0f64.sqrt());
        for _ in 0..3 {
            let x2 = inv_sqrt5 * inv_sqrt5;
            inv_sqrt5 = inv_sqrt5
                * (Dd::from_f64(3.0) - Dd::from_f64(5.0) * x2)
                * Dd::from_ratio(1, 2);
        }
        let lo = (Dd::ONE - inv_sqrt5) * Dd::from_ratio(1, 2);
        assert!((g.nodes[1] - lo).to_f64().abs() < 1e-30);
    }

    #[test]
    fn weight_rows_sum_to_subinterval_lengths() {
        for m in 1..=8 {
            let g = sdc_grid::<f64>(m).unwrap();
            for (row, &len) in g.weights.iter().zip(&g.lengths) {
                let sum: f64 = row.iter().sum();
                assert!((sum - len).abs() < 1e-13, "M={m}: {sum} vs {len}");
            }
        }
    }

    #[test]
    fn grid_is_reflection_symmetric() {
        for m in 1..=8 {
            let g = sdc_grid::<f64>(m).unwrap();
            for q in 0..=m {
                let mirrored = 1.0 - g.nodes[m - q];
                assert!((g.nodes[q] - mirrored).abs() < 1e-14);
            }
            for sub in 0..m {
                for q in 0..=m {
                    let mirrored = g.weights[m - 1 - sub][m - q];
                    assert!(
                        (g.weights[sub][q] - mirrored).abs() < 1e-14,
                        "M={m} w[{sub}][{q}]"
                    );
                }
            }
        }
    }

    #[test]
    fn weights_integrate_monomials_exactly() {
        for m in 1..=8 {
            let g = sdc_grid::<f64>(m).unwrap();
            for p in 0..=m as i32 {
                for sub in 0..m {
                    let exact = (g.nodes[sub + 1].powi(p + 1) - g.nodes[sub].powi(p + 1))
                        / (p + 1) as f64;
                    let quad: f64 = (0..=m)
                        .map(|q| g.weights[sub][q] * g.nodes[q].powi(p))
                        .sum();
                    assert!(
                        (quad - exact).abs() < 1e-12,
                        "M={m} p={p} sub={sub}: {quad} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials_and_nodes() {
        let g = sdc_grid::<f64>(4).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 3.0 * x.powi(3) - x.powi(4);
        let values: Vec<f64> = g.nodes.iter().map(|&x| f(x)).collect();
        // Exact at nodes (identical bits).
        for (q, &t) in g.nodes.iter().enumerate() {
            assert_eq!(lagrange_interpolate(&g.nodes, &values, t), values[q]);
        }
        for &x in &[0.1, 0.37, 0.52, 0.93] {
            let got: f64 = lagrange_interpolate(&g.nodes, &values, x);
            assert!((got - f(x)).abs() < 1e-13, "x={x}: {got} vs {}", f(x));
        }
    }

    #[test]
    fn degree_zero_is_rejected() {
        assert!(gll_nodes::<f64>(0).is_err());
    }
}
