//! Data-parallel helpers with a sequential fallback.
//!
//! The crate's hot loops are embarrassingly parallel: lattice scans over
//! complex arguments, independent (method, step-size) runs, and pointwise
//! products on physical-space buffers. Each goes through one of these
//! helpers, which dispatch to rayon when the `parallel` feature is enabled
//! (the default) and to plain iterators otherwise. Results are collected in
//! index order either way, so outputs are identical across both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Elementwise `out[i] = f(a[i], b[i])` over equal-length slices.
pub fn map2_into(out: &mut [f64], a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync + Send) {
    assert_eq!(out.len(), a.len());
    assert_eq!(out.len(), b.len());
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut()
            .zip_eq(a.par_iter())
            .zip_eq(b.par_iter())
            .for_each(|((o, &x), &y)| *o = f(x, y));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *o = f(x, y);
        }
    }
}

/// Elementwise `out[i] = f(a[i], b[i], c[i])` over equal-length slices.
pub fn map3_into(
    out: &mut [f64],
    a: &[f64],
    b: &[f64],
    c: &[f64],
    f: impl Fn(f64, f64, f64) -> f64 + Sync + Send,
) {
    assert_eq!(out.len(), a.len());
    assert_eq!(out.len(), b.len());
    assert_eq!(out.len(), c.len());
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut()
            .zip_eq(a.par_iter())
            .zip_eq(b.par_iter())
            .zip_eq(c.par_iter())
            .for_each(|(((o, &x), &y), &z)| *o = f(x, y, z));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (((o, &x), &y), &z) in out.iter_mut().zip(a).zip(b).zip(c) {
            *o = f(x, y, z);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn elementwise_maps() {
        let a = [1.0, 2.0, 3.0];
        let b = [10.0, 20.0, 30.0];
        let c = [0.5, 0.5, 0.5];
        let mut out = [0.0; 3];
        map2_into(&mut out, &a, &b, |x, y| x * y);
        assert_eq!(out, [10.0, 40.0, 90.0]);
        map3_into(&mut out, &a, &b, &c, |x, y, z| (x + y) * z);
        assert_eq!(out, [5.5, 11.0, 16.5]);
    }
}
