//! Random-coefficient AR(1) model `D(n+1) = e^{−αZ} D(n) + X` with unit exponential `X`, `Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{ChainModel, Interval, LatticeDistribution, ReferenceMeta};
use crate::poly::Poly;
use crate::{Error, Result};

const MAX_K: usize = 5;
const BLOCK: usize = 1 << 16;
/// Series terms are dropped once the multiplicative weight falls below this.
pub const WEIGHT_FLOOR: f64 = 1e-9;
/// Relative size of `p̲₂` below which `v̲₃` is not numerically resolved.
pub const UNRESOLVED: f64 = 1e-7;

/// AR(1) model in the scaling `W = √α (D − 1/α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1 {
    alpha: f64,
    delta: f64,
    /// `p_k` for k = 1..=5 so that `E(Δ^k | W = x) = δ^k p_k(x)`.
    p: Vec<Poly>,
    /// `derivs[k - 1][r]` is the r-th derivative of `p_k`, r = 0..=3.
    derivs: Vec<Vec<Poly>>,
}

/// Values of a polynomial and its first two derivatives at a point.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

impl Ar1 {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let delta = alpha.sqrt();
        let base = Poly::linear(1.0, delta);
        let p = (1..=MAX_K)
            .map(|k| {
                let mut sum = Poly::constant(1.0);
                let mut prod = 1.0;
                for i in 1..=k {
                    prod /= 1.0 + i as f64 * alpha;
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    sum = &sum + &base.powi(i).scale(sign * prod);
                }
                sum.scale(factorial(k))
            })
            .collect::<Vec<Poly>>();
        let derivs = p
            .iter()
            .map(|pk| (0..=3).map(|r| pk.nth_derivative(r)).collect())
            .collect();
        Ok(Self { alpha, delta, p, derivs })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The polynomial `p_k`.
    pub fn p(&self, k: usize) -> &Poly {
        &self.p[k - 1]
    }

    /// `E(Δ^k | W = x)` straight from the series form, without the polynomial expansion.
    pub fn moment_direct(&self, k: usize, x: f64) -> f64 {
        let d = x * self.delta + 1.0;
        let mut prod = 1.0;
        let mut sum = 1.0;
        for i in 1..=k {
            prod /= 1.0 + i as f64 * self.alpha;
            sum += (-d).powi(i as i32) * prod;
        }
        self.delta.powi(k as i32) * factorial(k) * sum
    }

    fn jet(&self, k: usize, x: f64) -> Jet {
        let d = &self.derivs[k - 1];
        Jet {
            v: d[0].eval(x),
            d1: d[1].eval(x),
            d2: d[2].eval(x),
        }
    }

    /// `p̲₂(x) = p₂/2 − p₁p₃/(3p₂) − (δ/6)(p₃′ − p₃p₂′/p₂)` with its derivative.
    fn p2_lower(&self, x: f64) -> (f64, f64) {
        let d = self.delta;
        let (p1, p2, p3) = (self.jet(1, x), self.jet(2, x), self.jet(3, x));
        let value = p2.v / 2.0 - p1.v * p3.v / (3.0 * p2.v) - d / 6.0 * (p3.d1 - p3.v * p2.d1 / p2.v);
        let slope = p2.d1 / 2.0 - (p1.d1 * p3.v + p1.v * p3.d1) / (3.0 * p2.v)
            + p1.v * p3.v * p2.d1 / (3.0 * p2.v * p2.v)
            - d / 6.0
                * (p3.d2 - (p3.d1 * p2.d1 + p3.v * p2.d2) / p2.v
                    + p3.v * p2.d1 * p2.d1 / (p2.v * p2.v));
        (value, slope)
    }

    /// `p̄₃(x) = (1/6)(p₃ − p₁p₄/(2p₂) − (δ/4)(p₄′ − p₄p₂′/p₂))` with its derivative.
    fn p3_upper(&self, x: f64) -> (f64, f64) {
        let d = self.delta;
        let (p1, p2, p3, p4) = (self.jet(1, x), self.jet(2, x), self.jet(3, x), self.jet(4, x));
        let value = (p3.v - p1.v * p4.v / (2.0 * p2.v) - d / 4.0 * (p4.d1 - p4.v * p2.d1 / p2.v)) / 6.0;
        let slope = (p3.d1 - (p1.d1 * p4.v + p1.v * p4.d1) / (2.0 * p2.v)
            + p1.v * p4.v * p2.d1 / (2.0 * p2.v * p2.v)
            - d / 4.0
                * (p4.d2 - (p4.d1 * p2.d1 + p4.v * p2.d2) / p2.v
                    + p4.v * p2.d1 * p2.d1 / (p2.v * p2.v)))
            / 6.0;
        (value, slope)
    }

    /// Untruncated third-order coefficient `v̲₃` in polynomial form.
    ///
    /// Towards the left edge `p̲₂` and `p̄₃` both vanish quadratically and `v̲₃ → 0`. Once
    /// `p̲₂/p₂` falls under [`UNRESOLVED`] the quotient is rounding noise, so the limit
    /// value 0 is returned instead.
    pub fn v3_lower(&self, x: f64) -> f64 {
        let d = self.delta;
        let p1 = self.p(1).eval(x);
        let p2 = self.p(2).eval(x);
        let (l2, l2d) = self.p2_lower(x);
        if x < 0.0 && l2.abs() < UNRESOLVED * p2.abs() {
            return 0.0;
        }
        let (u3, u3d) = self.p3_upper(x);
        d * d * (p2 / 2.0 - p1 * u3 / l2 - d * (u3d - u3 * l2d / l2))
    }

    /// `δ² p̲₂(x)`, the untruncated second-order coefficient in polynomial form.
    pub fn v2_lower(&self, x: f64) -> f64 {
        self.delta * self.delta * self.p2_lower(x).0
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl ChainModel for Ar1 {
    fn name(&self) -> &'static str {
        "ar1"
    }

    fn params(&self) -> String {
        format!("alpha={}", self.alpha)
    }

    fn support(&self) -> Interval {
        Interval::new(-1.0 / self.delta, f64::INFINITY)
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn center(&self) -> f64 {
        1.0 / self.alpha
    }

    fn max_moment(&self) -> usize {
        MAX_K
    }

    fn moment(&self, k: usize, x: f64) -> f64 {
        assert!((1..=MAX_K).contains(&k), "AR(1) jump moments exist for k = 1..{MAX_K} (got {k})");
        self.delta.powi(k as i32) * self.p(k).eval(x)
    }

    fn moment_derivative(&self, k: usize, x: f64, order: usize) -> Option<f64> {
        if !(1..=MAX_K).contains(&k) {
            return None;
        }
        let scale = self.delta.powi(k as i32);
        match self.derivs[k - 1].get(order) {
            Some(d) => Some(scale * d.eval(x)),
            None => Some(scale * self.p(k).nth_derivative(order).eval(x)),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// One draw of `D∞ = Σ_k X_k exp(−α Σ_{j<k} Z_j)`, truncated at the weight floor.
fn draw_stationary<R: Rng>(rng: &mut R, alpha: f64) -> f64 {
    let mut weight = 1.0_f64;
    let mut sum = 0.0;
    while weight >= WEIGHT_FLOOR {
        let x: f64 = rng.sample(Exp1);
        let z: f64 = rng.sample(Exp1);
        sum += x * weight;
        weight *= (-alpha * z).exp();
    }
    sum
}

/// Sorted Monte Carlo sample of `W = √α(D∞ − 1/α)`.
///
/// Draws are split into fixed blocks, each with its own ChaCha8 stream derived from
/// `seed`, so the result is identical for any thread count.
pub fn ar1_reference(model: &Ar1, n_samples: usize, seed: u64) -> Result<LatticeDistribution> {
    if n_samples < 10_000 {
        return Err(Error::InvalidParameter(format!("n_samples must be at least 1e4, got {n_samples}")));
    }
    let (alpha, delta) = (model.alpha, model.delta);
    let center = 1.0 / alpha;
    let blocks = n_samples.div_ceil(BLOCK);
    let mut values: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(n_samples - b * BLOCK);
            (0..len)
                .map(|_| delta * (draw_stationary(&mut rng, alpha) - center))
                .collect::<Vec<_>>()
        })
        .collect();
    values.par_sort_unstable_by(f64::total_cmp);
    let meta = ReferenceMeta {
        model: model.name().into(),
        params: model.params(),
        seed: Some(seed),
    };
    LatticeDistribution::from_samples(values, meta)
}
