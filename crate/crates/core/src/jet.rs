//! Truncated Taylor arithmetic in one variable.
//!
//! A [`Jet`] of order `n` stores `f(t0 + h) = sum_{i<=n} c_i h^i`. Used to
//! evaluate high derivatives of the cutoff primitive without expression
//! swell, and as an independent oracle for the bump recurrence in tests.

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity function expanded at `t0`.
    pub fn variable(t0: T, order: usize) -> Self {
        let mut j = Self::constant(t0, order);
        if order >= 1 {
            j.coeffs[1] = T::one();
        }
        j
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the value coefficient");
        Jet { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(T::zero(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    pub fn coeff(&self, i: usize) -> T {
        self.coeffs[i]
    }

    /// `f^{(k)}(t0)`.
    pub fn derivative(&self, k: usize) -> T {
        let mut fact = T::one();
        for i in 2..=k {
            fact = fact * T::lit(i as f64);
        }
        self.coeffs[k] * fact
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order();
        let mut out = vec![T::zero(); n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Jet { coeffs: out }
    }

    pub fn recip(&self) -> Self {
        let n = self.order();
        let f = &self.coeffs;
        let inv0 = T::one() / f[0];
        let mut g = vec![T::zero(); n + 1];
        g[0] = inv0;
        for k in 1..=n {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + f[j] * g[k - j];
            }
            g[k] = -s * inv0;
        }
        Jet { coeffs: g }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    pub fn exp(&self) -> Self {
        let n = self.order();
        let f = &self.coeffs;
        let mut g = vec![T::zero(); n + 1];
        g[0] = f[0].exp();
        for k in 1..=n {
            let mut s = T::zero();
            for j in 1..=k {
                s = s + T::lit(j as f64) * f[j] * g[k - j];
            }
            g[k] = s / T::lit(k as f64);
        }
        Jet { coeffs: g }
    }
}
