//! The three Markov-chain models, their jump-moment extensions and reference laws.

mod ar1;
mod erlangc;
mod hospital;
mod lattice;

pub use ar1::{ar1_reference, Ar1};
pub use erlangc::{erlangc_reference, ErlangC};
pub use hospital::{hospital_reference, Hospital, DEFAULT_TAIL_EPS};
pub use lattice::{LatticeDistribution, Law, ReferenceMeta};

use serde::{Deserialize, Serialize};

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }
}

/// A centred and scaled one-dimensional Markov chain, described through the
/// extensions `m_k(x)` of its conditional jump moments `E(Δ^k | W = x)`.
///
/// `m_1` is the drift `b`, `m_2` is `a`, `m_3` is `c`, `m_4` is `d`.
pub trait ChainModel {
    /// Short model tag used in file headers (`erlangc`, `hospital`, `ar1`).
    fn name(&self) -> &'static str;

    /// Parameter echo, e.g. `lambda=9,mu=1,n=10`.
    fn params(&self) -> String;

    /// Smallest interval containing the state space of `W`.
    fn support(&self) -> Interval;

    /// Scaling `δ` in `W = δ(X − R)`.
    fn delta(&self) -> f64;

    /// Centering constant `R`.
    fn center(&self) -> f64;

    /// Highest `k` for which [`ChainModel::moment`] is defined.
    fn max_moment(&self) -> usize;

    /// Extension of `E(Δ^k | W = x)` to the real line. Panics if `k` is out of range.
    fn moment(&self, k: usize, x: f64) -> f64;

    /// Exact derivative of `moment(k, ·)` of the given order, or `None` to request a
    /// finite-difference fallback. At kinks the derivative from the left is returned.
    fn moment_derivative(&self, k: usize, x: f64, order: usize) -> Option<f64>;

    /// Interval on which the approximating diffusion lives. Defaults to the support.
    fn diffusion_domain(&self) -> Interval {
        self.support()
    }

    /// Points where some moment function is not differentiable.
    fn kinks(&self) -> Vec<f64>;

    fn drift(&self, x: f64) -> f64 {
        self.moment(1, x)
    }
}

/// Closed set of the built-in models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    ErlangC(ErlangC),
    Hospital(Hospital),
    Ar1(Ar1),
}

impl Model {
    fn inner(&self) -> &dyn ChainModel {
        match self {
            Model::ErlangC(m) => m,
            Model::Hospital(m) => m,
            Model::Ar1(m) => m,
        }
    }
}

impl From<ErlangC> for Model {
    fn from(m: ErlangC) -> Self {
        Model::ErlangC(m)
    }
}

impl From<Hospital> for Model {
    fn from(m: Hospital) -> Self {
        Model::Hospital(m)
    }
}

impl From<Ar1> for Model {
    fn from(m: Ar1) -> Self {
        Model::Ar1(m)
    }
}

impl ChainModel for Model {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn params(&self) -> String {
        self.inner().params()
    }
    fn support(&self) -> Interval {
        self.inner().support()
    }
    fn delta(&self) -> f64 {
        self.inner().delta()
    }
    fn center(&self) -> f64 {
        self.inner().center()
    }
    fn max_moment(&self) -> usize {
        self.inner().max_moment()
    }
    fn moment(&self, k: usize, x: f64) -> f64 {
        self.inner().moment(k, x)
    }
    fn moment_derivative(&self, k: usize, x: f64, order: usize) -> Option<f64> {
        self.inner().moment_derivative(k, x, order)
    }
    fn diffusion_domain(&self) -> Interval {
        self.inner().diffusion_domain()
    }
    fn kinks(&self) -> Vec<f64> {
        self.inner().kinks()
    }
}

/// Zero of the (nonincreasing) drift on the support, by bisection to `1e-12`.
pub fn fluid_equilibrium(model: &dyn ChainModel) -> crate::Result<f64> {
    let support = model.support();
    let mut lo = if support.lo.is_finite() { support.lo } else { -1.0 };
    let mut hi = if support.hi.is_finite() { support.hi } else { 1.0 };
    let mut expand = 0;
    while model.drift(lo) < 0.0 {
        if support.lo.is_finite() || expand > 200 {
            return Err(crate::Error::NoEquilibrium);
        }
        lo *= 2.0;
        expand += 1;
    }
    while model.drift(hi) > 0.0 {
        if support.hi.is_finite() || expand > 400 {
            return Err(crate::Error::NoEquilibrium);
        }
        hi *= 2.0;
        expand += 1;
    }
    if model.drift(lo) == 0.0 {
        return Ok(lo);
    }
    while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if model.drift(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
