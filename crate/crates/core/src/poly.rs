//! Dense univariate polynomials with exact derivatives.

use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial stored by ascending powers: `coef[i]` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coef: Vec<f64>,
}

impl Poly {
    pub fn new(coef: Vec<f64>) -> Self {
        let mut p = Self { coef };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coef: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `intercept + slope * x`
    pub fn linear(intercept: f64, slope: f64) -> Self {
        Self::new(vec![intercept, slope])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn degree(&self) -> usize {
        self.coef.len().saturating_sub(1)
    }

    fn trim(&mut self) {
        while matches!(self.coef.last(), Some(c) if *c == 0.0) {
            self.coef.pop();
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coef.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coef
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, order: usize) -> Poly {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coef.iter().map(|c| c * s).collect())
    }

    pub fn powi(&self, n: usize) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| &acc * self)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coef.len().max(rhs.coef.len());
        Poly::new(
            (0..n)
                .map(|i| self.coef.get(i).unwrap_or(&0.0) + rhs.coef.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.coef.is_empty() || rhs.coef.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coef.len() + rhs.coef.len() - 1];
        for (i, a) in self.coef.iter().enumerate() {
            for (j, b) in rhs.coef.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}
