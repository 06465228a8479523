//! Discrete-time hospital inpatient-flow model `X(n+1) = X(n) + A − D`.

use statrs::function::gamma::ln_gamma;

use super::{ChainModel, Interval, LatticeDistribution, ReferenceMeta};
use crate::poly::Poly;
use crate::{Error, Result};

/// Default stationary-tail budget for the truncated solve.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Hospital model with `N` servers, `Λ = √N − β`, `μ = δ = 1/√N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hospital {
    servers: u32,
    beta: f64,
    delta: f64,
    arrival_rate: f64,
    /// `E(A−D)^k` as polynomials in the number of busy servers `m`, for k = 1..5.
    raw_moments: Vec<Poly>,
}

impl Hospital {
    pub fn new(servers: u32, beta: f64) -> Result<Self> {
        if servers == 0 {
            return Err(Error::InvalidParameter("N must be a positive integer".into()));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let root = (servers as f64).sqrt();
        let arrival_rate = root - beta;
        if arrival_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "arrival rate sqrt(N) - beta = {arrival_rate} must be positive"
            )));
        }
        let delta = 1.0 / root;
        Ok(Self {
            servers,
            beta,
            delta,
            arrival_rate,
            raw_moments: raw_moment_polys(arrival_rate, delta),
        })
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }
    /// Per-period departure probability `μ = δ`.
    pub fn departure_prob(&self) -> f64 {
        self.delta
    }

    /// Busy servers at scaled state `x`: `(x/δ + N) ∧ N`.
    ///
    /// Below the left edge of the state space the linear expression is kept, so the
    /// drift continues as `δ(x⁻ − β)` on the whole line.
    fn busy(&self, x: f64) -> f64 {
        (x / self.delta + self.servers as f64).min(self.servers as f64)
    }

    /// `dm/dx`, using the left derivative at the kink `x = 0`.
    fn busy_slope(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0 / self.delta
        } else {
            0.0
        }
    }
}

/// Cumulants of `A − D` are `Λ + (−1)^j m κ_j(Bernoulli(μ))`; convert to raw moments.
fn raw_moment_polys(arrival_rate: f64, p: f64) -> Vec<Poly> {
    let q = 1.0 - p;
    let bern = [
        p,
        p * q,
        p * q * (q - p),
        p * q * (1.0 - 6.0 * p * q),
        p * q * (q - p) * (1.0 - 12.0 * p * q),
    ];
    let k: Vec<Poly> = bern
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
            Poly::linear(arrival_rate, sign * b)
        })
        .collect();
    let (k1, k2, k3, k4, k5) = (&k[0], &k[1], &k[2], &k[3], &k[4]);
    let m1 = k1.clone();
    let m2 = k2 + &k1.powi(2);
    let m3 = &(k3 + &(k2 * k1).scale(3.0)) + &k1.powi(3);
    let m4 = &(&(&(k4 + &(k3 * k1).scale(4.0)) + &k2.powi(2).scale(3.0))
        + &(k2 * &k1.powi(2)).scale(6.0))
        + &k1.powi(4);
    let m5 = [
        k5.clone(),
        (k4 * k1).scale(5.0),
        (k3 * k2).scale(10.0),
        (k3 * &k1.powi(2)).scale(10.0),
        (&k2.powi(2) * k1).scale(15.0),
        (k2 * &k1.powi(3)).scale(10.0),
        k1.powi(5),
    ]
    .iter()
    .fold(Poly::zero(), |acc, t| &acc + t);
    vec![m1, m2, m3, m4, m5]
}

impl ChainModel for Hospital {
    fn name(&self) -> &'static str {
        "hospital"
    }

    fn params(&self) -> String {
        format!("N={},beta={}", self.servers, self.beta)
    }

    fn support(&self) -> Interval {
        Interval::new(-(self.servers as f64).sqrt(), f64::INFINITY)
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn center(&self) -> f64 {
        self.servers as f64
    }

    fn max_moment(&self) -> usize {
        5
    }

    fn moment(&self, k: usize, x: f64) -> f64 {
        assert!((1..=5).contains(&k), "hospital jump moments exist for k = 1..5 (got {k})");
        self.delta.powi(k as i32) * self.raw_moments[k - 1].eval(self.busy(x))
    }

    fn moment_derivative(&self, k: usize, x: f64, order: usize) -> Option<f64> {
        if !(1..=5).contains(&k) {
            return None;
        }
        if order == 0 {
            return Some(self.moment(k, x));
        }
        let slope = self.busy_slope(x);
        if slope == 0.0 {
            return Some(0.0);
        }
        // m is linear in x on the interior piece, so d^r/dx^r = slope^r d^r/dm^r.
        let poly = self.raw_moments[k - 1].nth_derivative(order);
        Some(self.delta.powi(k as i32) * slope.powi(order as i32) * poly.eval(self.busy(x)))
    }

    fn diffusion_domain(&self) -> Interval {
        Interval::real_line()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }
}

fn poisson_pmf(rate: f64, upto: usize) -> Vec<f64> {
    (0..=upto)
        .map(|a| (a as f64 * rate.ln() - rate - ln_gamma(a as f64 + 1.0)).exp())
        .collect()
}

fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let lnp = p.ln();
    let lnq = (-p).ln_1p();
    let lnf = ln_gamma(trials as f64 + 1.0);
    (0..=trials)
        .map(|d| {
            let (d, n) = (d as f64, trials as f64);
            (lnf - ln_gamma(d + 1.0) - ln_gamma(n - d + 1.0) + d * lnp + (n - d) * lnq).exp()
        })
        .collect()
}

/// Geometric decay rate of the stationary tail above `N`: the positive root of
/// `Λ(e^θ − 1) + N ln(1 − μ + μe^{−θ}) = 0`.
fn tail_decay_rate(model: &Hospital) -> f64 {
    let (lam, mu, n) = (model.arrival_rate, model.delta, model.servers as f64);
    let f = |t: f64| lam * t.exp_m1() + n * (mu * (-t).exp_m1()).ln_1p();
    let (mut lo, mut hi) = (1e-12, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stationary law of the truncated DTMC on `{0, …, M}` by GTH state reduction,
/// mapped to the lattice `δ(k − N)`.
///
/// `M` starts from the geometric tail estimate and grows until the mass in the top
/// arrival-band of states is below `tail_eps`.
pub fn hospital_reference(model: &Hospital, tail_eps: f64) -> Result<LatticeDistribution> {
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::InvalidParameter(format!("tail_eps must be in (0, 1e-6], got {tail_eps}")));
    }
    let n = model.servers as usize;
    let lam = model.arrival_rate;
    // Arrival truncation: the Poisson tail past `a > Λ` is at most pmf(a)·(a+1)/(a+1−Λ).
    let mut upper = lam.ceil() as usize + 1;
    loop {
        let a = upper as f64;
        let log_pmf = a * lam.ln() - lam - ln_gamma(a + 1.0);
        if log_pmf + ((a + 1.0) / (a + 1.0 - lam)).ln() < (1e-17_f64).ln() {
            break;
        }
        upper += 1;
    }
    let arrivals = poisson_pmf(lam, upper);
    let theta = tail_decay_rate(model);
    let mut top = n + upper + ((tail_eps / 10.0).ln().abs() / theta).ceil() as usize;

    let mut last_mass = 0.0;
    for _attempt in 0..6 {
        let pi = gth_solve(model, &arrivals, top);
        let band = upper.min(top);
        let boundary_mass: f64 = pi[top + 1 - band..].iter().sum();
        last_mass = 1.0 - boundary_mass;
        if boundary_mass < tail_eps {
            let points = (0..=top).map(|k| model.delta * (k as f64 - n as f64)).collect();
            let meta = ReferenceMeta {
                model: model.name().into(),
                params: model.params(),
                seed: None,
            };
            return LatticeDistribution::from_atoms(points, pi, model.delta, meta);
        }
        top += top / 2;
    }
    Err(Error::TruncationTooSmall { mass: last_mass })
}

/// Grassmann–Taksar–Heyman elimination on the chain truncated at `top`.
///
/// Upward jumps are bounded by the arrival truncation, so when state `k` is
/// eliminated only rows `k − U..k` carry weight into it.
fn gth_solve(model: &Hospital, arrivals: &[f64], top: usize) -> Vec<f64> {
    let n = model.servers as usize;
    let size = top + 1;
    let up = arrivals.len() - 1;
    let mut p = vec![0.0_f64; size * size];
    let row_for = |busy: usize| -> Vec<f64> {
        // distribution of A − D + busy on 0..=busy+up
        let dep = binomial_pmf(busy, model.delta);
        let mut out = vec![0.0; busy + up + 1];
        for (d, pd) in dep.iter().enumerate() {
            for (a, pa) in arrivals.iter().enumerate() {
                out[busy + a - d] += pd * pa;
            }
        }
        out
    };
    let full = row_for(n);
    for k in 0..size {
        let busy = k.min(n);
        let owned;
        let jumps: &[f64] = if busy == n {
            &full
        } else {
            owned = row_for(busy);
            &owned
        };
        let row = &mut p[k * size..(k + 1) * size];
        for (offset, w) in jumps.iter().enumerate() {
            let j = k + offset - busy;
            if j < size {
                row[j] += w;
            }
        }
    }

    let mut scale = vec![1.0; size];
    for k in (1..size).rev() {
        let s: f64 = p[k * size..k * size + k].iter().sum();
        scale[k] = s;
        let first = k.saturating_sub(up);
        for i in first..k {
            let f = p[i * size + k] / s;
            p[i * size + k] = f;
            if f == 0.0 {
                continue;
            }
            let (head, tail) = p.split_at_mut(k * size);
            let src = &tail[..k];
            let dst = &mut head[i * size..i * size + k];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += f * s;
            }
        }
    }
    let mut pi = vec![0.0; size];
    pi[0] = 1.0;
    for k in 1..size {
        let first = k.saturating_sub(up);
        pi[k] = (first..k).map(|i| pi[i] * p[i * size + k]).sum();
        // Probabilities span hundreds of orders of magnitude for large N.
        if pi[k] > 1e200 {
            pi[..=k].iter_mut().for_each(|v| *v *= 1e-200);
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    pi
}
