//! M/M/n (Erlang-C) queue centred at the offered load and scaled by `1/√R`.

use super::{ChainModel, Interval, LatticeDistribution, ReferenceMeta};
use crate::{Error, Result};

/// Erlang-C parameters with the derived Halfin–Whitt quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ErlangC {
    lambda: f64,
    mu: f64,
    servers: u32,
    offered_load: f64,
    delta: f64,
    beta: f64,
}

impl ErlangC {
    pub fn new(lambda: f64, mu: f64, servers: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if servers == 0 {
            return Err(Error::InvalidParameter("n must be a positive integer".into()));
        }
        let offered_load = lambda / mu;
        let rho = offered_load / servers as f64;
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        let delta = 1.0 / offered_load.sqrt();
        Ok(Self {
            lambda,
            mu,
            servers,
            offered_load,
            delta,
            beta: delta * (servers as f64 - offered_load),
        })
    }

    /// Square-root staffing `n = R + β√R` with `μ = 1`; `R + β√R` must be an integer.
    pub fn halfin_whitt(offered_load: f64, beta: f64) -> Result<Self> {
        let n = offered_load + beta * offered_load.sqrt();
        let rounded = n.round();
        if (n - rounded).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "R + beta*sqrt(R) = {n} is not an integer server count"
            )));
        }
        Self::new(offered_load, 1.0, rounded as u32)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn servers(&self) -> u32 {
        self.servers
    }
    pub fn offered_load(&self) -> f64 {
        self.offered_load
    }
    pub fn utilization(&self) -> f64 {
        self.offered_load / self.servers as f64
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `b(x) = −(μx ∧ μβ)` on the whole real line.
    pub fn drift_ext(&self, x: f64) -> f64 {
        -(self.mu * x).min(self.mu * self.beta)
    }

    /// `a(x) = 2μ − δ b(−√R ∨ x)`, bounded below by `μ`.
    pub fn second_moment_ext(&self, x: f64) -> f64 {
        let left = -self.offered_load.sqrt();
        2.0 * self.mu - self.delta * self.drift_ext(x.max(left))
    }
}

impl ChainModel for ErlangC {
    fn name(&self) -> &'static str {
        "erlangc"
    }

    fn params(&self) -> String {
        format!("lambda={},mu={},n={}", self.lambda, self.mu, self.servers)
    }

    fn support(&self) -> Interval {
        // The diffusion lives on the whole line; the chain itself starts at -sqrt(R).
        Interval::real_line()
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn center(&self) -> f64 {
        self.offered_load
    }

    fn max_moment(&self) -> usize {
        2
    }

    fn moment(&self, k: usize, x: f64) -> f64 {
        match k {
            1 => self.drift_ext(x),
            2 => self.second_moment_ext(x),
            _ => panic!("Erlang-C jump moments are only extended for k = 1, 2 (got {k})"),
        }
    }

    fn moment_derivative(&self, k: usize, x: f64, order: usize) -> Option<f64> {
        let drift_slope = if x <= self.beta { -self.mu } else { 0.0 };
        let value = match (k, order) {
            (_, 0) => self.moment(k, x),
            (1, 1) => drift_slope,
            (2, 1) => {
                if x <= -self.offered_load.sqrt() {
                    0.0
                } else {
                    -self.delta * drift_slope
                }
            }
            (1 | 2, _) => 0.0,
            _ => return None,
        };
        Some(value)
    }

    fn kinks(&self) -> Vec<f64> {
        vec![-self.offered_load.sqrt(), self.beta]
    }
}

/// Exact stationary law of the M/M/n queue on the lattice `δ(k − R)`.
///
/// Birth–death recursion `π_{k+1} = π_k λ / (μ min(k+1, n))` in log space, stopped
/// once the remaining geometric tail is below `1e-14` of the accumulated mass. The
/// closed-form tail enters the normalising constant.
pub fn erlangc_reference(model: &ErlangC) -> Result<LatticeDistribution> {
    let rho = model.utilization();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let n = model.servers as usize;
    let log_lambda = model.lambda.ln();
    let mut log_pi = vec![0.0_f64];
    // Running maximum and mass relative to it, for the stopping rule only.
    let mut log_max = 0.0_f64;
    let mut rel_mass = 1.0_f64;
    let log_tail = loop {
        let k = log_pi.len() - 1;
        if k >= n {
            // Remaining tail is π_k ρ/(1−ρ).
            let tail = log_pi[k] + rho.ln() - (-rho).ln_1p();
            if tail - log_max - rel_mass.ln() < (1e-14_f64).ln() {
                break tail;
            }
        }
        let servers_busy = (k + 1).min(n) as f64;
        let next = log_pi[k] + log_lambda - (model.mu * servers_busy).ln();
        if next > log_max {
            rel_mass *= (log_max - next).exp();
            log_max = next;
        }
        rel_mass += (next - log_max).exp();
        log_pi.push(next);
    };
    // Normalise against the full mass, closed-form tail included, so the kept atoms
    // are exact.
    let weights: Vec<f64> = log_pi.iter().map(|l| (l - log_max).exp()).collect();
    let total = weights.iter().sum::<f64>() + (log_tail - log_max).exp();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let points: Vec<f64> = (0..probs.len())
        .map(|k| model.delta * (k as f64 - model.offered_load))
        .collect();
    let meta = ReferenceMeta {
        model: model.name().to_string(),
        params: model.params(),
        seed: None,
    };
    LatticeDistribution::from_atoms(points, probs, model.delta, meta)
}

#[cfg(test)]
mod tests {
    use super::super::Law;
    use super::*;

    fn example() -> ErlangC {
        ErlangC::new(9.0, 1.0, 10).unwrap()
    }

    #[test]
    fn drift_and_second_moment_values() {
        let m = example();
        assert_eq!(m.moment(1, 0.0), 0.0);
        assert_eq!(m.moment(2, 0.0), 2.0);
        let beta = m.beta();
        assert!((beta - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.moment(1, 2.0 * beta) + 1.0 / 3.0).abs() < 1e-15);
        // a(-sqrt R) = mu
        assert!((m.moment(2, -3.0) - 1.0).abs() < 1e-15);
        assert!((m.moment(2, -10.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unstable_and_bad_parameters() {
        assert!(matches!(ErlangC::new(10.0, 1.0, 10), Err(Error::Unstable { .. })));
        assert!(matches!(ErlangC::new(-1.0, 1.0, 10), Err(Error::InvalidParameter(_))));
        assert!(matches!(ErlangC::new(1.0, 1.0, 0), Err(Error::InvalidParameter(_))));
        assert!(ErlangC::halfin_whitt(25.0, 1.0).is_ok());
        assert!(ErlangC::halfin_whitt(20.0, 1.0).is_err());
    }

    #[test]
    fn mm1_is_geometric() {
        let m = ErlangC::new(0.5, 1.0, 1).unwrap();
        let w = erlangc_reference(&m).unwrap();
        let Law::Atoms { probs, .. } = w.law() else { panic!() };
        for (k, p) in probs.iter().take(30).enumerate() {
            assert!((p - 0.5 * 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn left_derivative_at_kinks() {
        let m = example();
        assert_eq!(m.moment_derivative(1, m.beta(), 1), Some(-1.0));
        assert_eq!(m.moment_derivative(1, m.beta() + 1e-9, 1), Some(0.0));
        assert_eq!(m.moment_derivative(2, -3.0, 1), Some(0.0));
        assert_eq!(m.moment_derivative(3, 0.0, 1), None);
    }
}
