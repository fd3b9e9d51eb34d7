//! Native evaluators for the compactly supported primitives.
//!
//! * `bump(t) = exp(1/(t^2-1))` on `|t| < 1`, zero elsewhere. Its k-th
//!   derivative is `P_k(t) / (t^2-1)^(2k) * bump(t)` with the integer
//!   polynomials generated by
//!   `P_{k+1} = (P_k' D - 4k t P_k) D - 2t P_k`, `D = t^2 - 1`.
//! * `cutoff(t) = B(2-|t|) / (B(2-|t|) + B(|t|-1))`, `B(s) = exp(-1/s)` for
//!   `s > 0`; identically 1 on `|t| <= 1` and 0 on `|t| >= 2`. Derivatives
//!   come from Taylor jets.
//! * the radial profile `g(q) = exp(1/(q-1))`, used for multivariate
//!   mollifier derivatives, with `g^(m)(q) = R_m(E) E^(-2m) g(q)`, `E = q-1`,
//!   `R_{m+1} = R_m' E^2 - 2m E R_m - R_m`.

use crate::jet::Jet;
use crate::scalar::Real;
use std::sync::OnceLock;

/// Highest derivative order with a precomputed recurrence polynomial.
pub const MAX_PRIMITIVE_ORDER: usize = 32;

/// Polynomial coefficients, lowest degree first.
type Poly = Vec<f64>;

/// Compensated Horner evaluation; the recurrence polynomials have large
/// alternating coefficients near `|t| = 1`.
fn poly_eval(p: &[f64], t: f64) -> f64 {
    let mut s = 0.0f64;
    let mut err = 0.0f64;
    for &c in p.iter().rev() {
        let prod = s * t;
        let prod_err = s.mul_add(t, -prod);
        let sum = prod + c;
        let z = sum - prod;
        let sum_err = (prod - (sum - z)) + (c - z);
        s = sum;
        err = err * t + (prod_err + sum_err);
    }
    s + err
}

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last() == Some(&0.0) {
        p.pop();
    }
    p
}

fn poly_deriv(p: &[f64]) -> Poly {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Poly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

fn poly_scale(a: &[f64], s: f64) -> Poly {
    a.iter().map(|&c| c * s).collect()
}

fn bump_table() -> &'static [Poly] {
    static TABLE: OnceLock<Vec<Poly>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let d: Poly = vec![-1.0, 0.0, 1.0];
        let two_t: Poly = vec![0.0, 2.0];
        let mut out = vec![vec![1.0]];
        for k in 0..MAX_PRIMITIVE_ORDER {
            let p = &out[k];
            let inner = poly_add(
                &poly_mul(&poly_deriv(p), &d),
                &poly_scale(&poly_mul(&two_t, p), -2.0 * k as f64),
            );
            let next = poly_add(&poly_mul(&inner, &d), &poly_scale(&poly_mul(&two_t, p), -1.0));
            out.push(trim(next));
        }
        out
    })
}

fn radial_table() -> &'static [Poly] {
    static TABLE: OnceLock<Vec<Poly>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let e2: Poly = vec![0.0, 0.0, 1.0];
        let e1: Poly = vec![0.0, 1.0];
        let mut out = vec![vec![1.0]];
        for m in 0..MAX_PRIMITIVE_ORDER {
            let r = &out[m];
            let next = poly_add(
                &poly_add(
                    &poly_mul(&poly_deriv(r), &e2),
                    &poly_scale(&poly_mul(&e1, r), -2.0 * m as f64),
                ),
                &poly_scale(r, -1.0),
            );
            out.push(trim(next));
        }
        out
    })
}

/// Coefficients of the numerator polynomial `P_k` of the k-th bump derivative.
pub fn bump_polynomial(k: usize) -> &'static [f64] {
    &bump_table()[k]
}

/// `bump^(k)(t)`; exactly zero on `|t| >= 1`.
pub fn bump_derivative<T: Real>(k: usize, t: T) -> T {
    assert!(k <= MAX_PRIMITIVE_ORDER, "bump derivative order {k} too high");
    let t = t.to_f64().unwrap_or(f64::NAN);
    if t.is_nan() {
        return T::nan();
    }
    if t.abs() >= 1.0 {
        return T::zero();
    }
    let d = (t - 1.0) * (t + 1.0);
    let p = poly_eval(&bump_table()[k], t);
    if p == 0.0 {
        return T::zero();
    }
    // exp(1/D) underflows long before D^-2k overflows; combine in log form.
    let log_mag = 1.0 / d - 2.0 * k as f64 * (-d).ln();
    T::lit(p * log_mag.exp())
}

pub fn bump<T: Real>(t: T) -> T {
    bump_derivative(0, t)
}

/// `g^(m)(q)` for `g(q) = exp(1/(q-1))` on `q < 1`, zero for `q >= 1`.
pub fn radial_profile_derivative(m: usize, q: f64) -> f64 {
    assert!(m <= MAX_PRIMITIVE_ORDER, "profile derivative order {m} too high");
    if q.is_nan() {
        return f64::NAN;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let e = q - 1.0;
    let r = poly_eval(&radial_table()[m], e);
    if r == 0.0 {
        return 0.0;
    }
    r * (1.0 / e - 2.0 * m as f64 * (-e).ln()).exp()
}

/// Jet of `B(x) = exp(-1/x)`, with the flat-zero region handled exactly.
fn flat_exp_jet<T: Real>(x: &Jet<T>) -> Jet<T> {
    let x0 = x.value();
    // exp(-1/x) < 1e-300 for 0 < x < 1/700: treat as identically zero,
    // including derivatives, which avoids 0 * inf in the recurrence.
    if x0 <= T::lit(1.0 / 700.0) {
        return Jet::zero(x.order());
    }
    x.recip().scale(-T::one()).exp()
}

/// Taylor jet of the cutoff at `t`, up to `order`.
pub fn cutoff_jet<T: Real>(t: T, order: usize) -> Jet<T> {
    let s = t.abs();
    if s <= T::one() {
        return Jet::constant(T::one(), order);
    }
    if s >= T::lit(2.0) {
        return Jet::zero(order);
    }
    let sv = Jet::variable(s, order);
    let u = Jet::constant(T::lit(2.0), order).sub(&sv);
    let v = sv.sub(&Jet::constant(T::one(), order));
    let bu = flat_exp_jet(&u);
    if bu.is_zero() {
        return Jet::zero(order);
    }
    let bv = flat_exp_jet(&v);
    let c = bu.div(&bu.add(&bv));
    if t < T::zero() {
        // d/dt = -d/ds on the negative half line
        let flipped = (0..=order)
            .map(|i| if i % 2 == 0 { c.coeff(i) } else { -c.coeff(i) })
            .collect();
        Jet::from_coeffs(flipped)
    } else {
        c
    }
}

/// `cutoff^(k)(t)`.
pub fn cutoff_derivative<T: Real>(k: usize, t: T) -> T {
    if t.is_nan() {
        return T::nan();
    }
    let s = t.abs();
    if s <= T::one() {
        return if k == 0 { T::one() } else { T::zero() };
    }
    if s >= T::lit(2.0) {
        return T::zero();
    }
    cutoff_jet(t, k).derivative(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: jet of exp(1/(t^2-1)).
    fn bump_by_jet(k: usize, t: f64) -> f64 {
        let x = Jet::variable(t, k);
        let d = x.mul(&x).sub(&Jet::constant(1.0, k));
        d.recip().exp().derivative(k)
    }

    #[test]
    fn recurrence_matches_jet_oracle() {
        for k in 0..=10 {
            for &t in &[-0.93, -0.5, -0.1, 0.0, 0.2, 0.61, 0.9] {
                let a = bump_derivative(k, t);
                let b = bump_by_jet(k, t);
                let scale = b.abs().max(1e-12);
                assert!((a - b).abs() <= 1e-9 * scale, "k={k} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn first_polynomials() {
        assert_eq!(bump_polynomial(0), &[1.0]);
        assert_eq!(bump_polynomial(1), &[0.0, -2.0]);
    }

    #[test]
    fn bump_support_boundary_is_exact_zero() {
        for k in 0..8 {
            assert_eq!(bump_derivative(k, 1.0f64), 0.0);
            assert_eq!(bump_derivative(k, -1.0f64), 0.0);
            assert_eq!(bump_derivative(k, 3.0f64), 0.0);
        }
        assert_eq!(bump(0.0f64), (-1.0f64).exp());
    }

    #[test]
    fn bump_derivatives_vanish_smoothly_near_edge() {
        let v = bump_derivative(8, 0.9999f64);
        assert!(v.is_finite() && v.abs() < 1e-100);
    }

    #[test]
    fn radial_profile_composes_to_bump() {
        // d=1: bump(t) = g(t^2); d/dt = 2t g'(t^2)
        for &t in &[-0.7, 0.1, 0.55] {
            let lhs = bump_derivative(1, t);
            let rhs = 2.0 * t * radial_profile_derivative(1, t * t);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn cutoff_plateaus_and_midpoint() {
        assert_eq!(cutoff_derivative(0, 0.3f64), 1.0);
        assert_eq!(cutoff_derivative(0, -1.0f64), 1.0);
        assert_eq!(cutoff_derivative(0, 2.0f64), 0.0);
        assert_eq!(cutoff_derivative(3, 0.5f64), 0.0);
        assert!((cutoff_derivative(0, 1.5f64) - 0.5).abs() < 1e-15);
        assert!((cutoff_derivative(0, -1.5f64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        for k in 0..4 {
            for &t in &[1.2f64, 1.5, 1.77, -1.3, -1.8] {
                let h = 1e-5;
                let fd = (cutoff_derivative(k, t + h) - cutoff_derivative(k, t - h)) / (2.0 * h);
                let d = cutoff_derivative(k + 1, t);
                assert!((fd - d).abs() <= 1e-5 * d.abs().max(1.0), "k={k} t={t}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn cutoff_is_even() {
        for k in 0..5 {
            let a = cutoff_derivative(k, 1.4f64);
            let b = cutoff_derivative(k, -1.4f64);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - sign * b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }
}
