//! Truncated Taylor series ("jets") in one variable.
//!
//! A jet of order `n` stores the coefficients `c_0..=c_n` of
//! `f(x0 + t) = sum_k c_k t^k`. Composition through the elementary
//! functions below gives exact derivatives up to order `n` without any
//! differencing, which is what the seminorm estimates and the chain rule
//! through `x + δF(x)` rely on.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The identity function expanded around `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = x0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        self.coeffs[k] * factorial(k)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn offset(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut g = vec![0.0; n + 1];
        g[0] = self.coeffs[0].exp();
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeffs[j] * g[k - j];
            }
            g[k] = acc / k as f64;
        }
        Self { coeffs: g }
    }

    /// `(sin f, cos f)` via the coupled recurrence `s' = c f'`, `c' = -s f'`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.order();
        let mut s = vec![0.0; n + 1];
        let mut c = vec![0.0; n + 1];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..=n {
            let mut acc_s = 0.0;
            let mut acc_c = 0.0;
            for j in 1..=k {
                let jf = j as f64 * self.coeffs[j];
                acc_s += jf * c[k - j];
                acc_c -= jf * s[k - j];
            }
            s[k] = acc_s / k as f64;
            c[k] = acc_c / k as f64;
        }
        (Self { coeffs: s }, Self { coeffs: c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    /// `f^p`; requires `f(x0) > 0`.
    pub fn powf(&self, p: f64) -> Self {
        let n = self.order();
        let f0 = self.coeffs[0];
        assert!(f0 > 0.0, "powf of a jet with non-positive value");
        let mut g = vec![0.0; n + 1];
        g[0] = f0.powf(p);
        for k in 1..=n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += ((p + 1.0) * j as f64 - k as f64) * self.coeffs[j] * g[k - j];
            }
            g[k] = acc / (k as f64 * f0);
        }
        Self { coeffs: g }
    }

    /// Compose an outer Taylor expansion (coefficients of `h(y0 + s)` with
    /// `y0 = self.value()`) with `self`.
    pub fn compose(&self, outer: &[f64]) -> Self {
        let n = self.order();
        let mut inner = self.clone();
        inner.coeffs[0] = 0.0;
        let mut result = vec![0.0; n + 1];
        let mut power = Jet::constant(1.0, n);
        for (k, &ok) in outer.iter().enumerate().take(n + 1) {
            if k > 0 {
                power = &power * &inner;
            }
            if ok != 0.0 {
                for (r, p) in result.iter_mut().zip(&power.coeffs) {
                    *r += ok * p;
                }
            }
        }
        Self { coeffs: result }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.order(), rhs.order());
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.order(), rhs.order());
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let mut out = vec![0.0; n + 1];
        for i in 0..=n {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..=(n - i) {
                out[i + j] += a * rhs.coeffs[j];
            }
        }
        Jet { coeffs: out }
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn exp_of_variable_has_unit_derivatives() {
        let j = Jet::variable(0.3, 6).exp();
        for k in 0..=6 {
            assert!((j.derivative(k) - 0.3f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn sin_cos_derivatives_cycle() {
        let x = 0.7;
        let s = Jet::variable(x, 5).sin();
        let expected = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin(), x.cos()];
        for (k, e) in expected.iter().enumerate() {
            assert!((s.derivative(k) - e).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn powf_matches_finite_difference() {
        let f = |x: f64| (1.0 + x * x).powf(0.25);
        let x = 1.0;
        let u = Jet::variable(x, 3);
        let j = (&(&u * &u)).offset(1.0).powf(0.25);
        assert!((j.value() - f(x)).abs() < 1e-14);
        assert!((j.derivative(1) - fd(f, x)).abs() < 1e-8);
        let df = |x: f64| 0.5 * x * (1.0 + x * x).powf(-0.75);
        assert!((j.derivative(2) - fd(df, x)).abs() < 1e-8);
    }

    #[test]
    fn compose_is_chain_rule() {
        // cos(sin(x)) at x = 0.4.
        let x = 0.4;
        let inner = Jet::variable(x, 4).sin();
        let direct = inner.cos();
        let y0 = inner.value();
        let outer: Vec<f64> = Jet::variable(y0, 4).cos().coeffs().to_vec();
        let composed = inner.compose(&outer);
        for k in 0..=4 {
            assert!((direct.derivative(k) - composed.derivative(k)).abs() < 1e-12);
        }
    }
}
