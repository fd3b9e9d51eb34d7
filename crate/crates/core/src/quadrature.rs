//! Gauss–Legendre rules on `[-1, 1]` and their tensor products.

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `q`-point rule, exact for polynomials of degree `2q - 1`.
    ///
    /// Nodes come from Newton iteration on `P_q` started at the Chebyshev
    /// approximation; the rule is symmetrised so that odd moments vanish
    /// to rounding.
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); q];
        let mut weights = vec![T::zero(); q];
        let qf = T::lit(q as f64);
        let pi = T::lit(std::f64::consts::PI);
        for i in 0..q.div_ceil(2) {
            let mut x = (pi * (T::lit(i as f64) + T::lit(0.75)) / (qf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != T::zero() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        if q % 2 == 1 {
            nodes[q / 2] = T::zero();
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Ascending nodes.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// Rule on `[a, b]`.
    pub fn integrate_on<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        half * self.integrate(|s| f(mid + half * s))
    }

    /// Tensor rule on `[-1, 1]^d` as `(point, weight)` pairs, last axis
    /// fastest.
    pub fn tensor(&self, d: usize) -> Vec<(Vec<T>, T)> {
        let q = self.len();
        let total = q.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let point: Vec<T> = idx.iter().map(|&i| self.nodes[i]).collect();
            let weight = idx.iter().fold(T::one(), |w, &i| w * self.weights[i]);
            out.push((point, weight));
            for axis in (0..d).rev() {
                idx[axis] += 1;
                if idx[axis] < q {
                    break;
                }
                idx[axis] = 0;
            }
        }
        out
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}
