//! Ordinary least-squares line fits.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Root-mean-square of the residuals.
    pub rms_residual: T,
}

/// Fits `y = slope * x + intercept`. Returns `None` for fewer than two
/// points or when all `x` coincide.
pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> Option<LineFit<T>> {
    assert_eq!(xs.len(), ys.len(), "fit_line needs paired samples");
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = T::lit(n as f64);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / nf;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / nf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = xs.iter().zip(ys).fold(T::zero(), |a, (&x, &y)| {
        let r = y - (slope * x + intercept);
        a + r * r
    });
    Some(LineFit {
        slope,
        intercept,
        rms_residual: (ss / nf).sqrt(),
    })
}
