//! Closed-form Poisson-equation solutions for the Erlang-C diffusions and the
//! empirical checks built on them (residuals, Stein factors, moderate deviations).
//!
//! For a diffusion with density `p = κ/v · exp(E)` the function `v p = κ e^E` turns
//! `b f′ + v f″ = g` into `(v p f′)′ = p g`. Integrating from the side where the
//! right-hand side is constant gives `f′` as a tail probability over `v p`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coefficients::{build_v0, build_v1, Variant};
use crate::density::StationaryDensity;
use crate::io::fmt_f64;
use crate::metrics::{relative_tail_error, ErrorReport, Side};
use crate::models::{erlangc_reference, ErlangC, Model};
use crate::{Error, Result};

/// Tail side paired with each variant: `v₀` uses the right-tail equation and `v₁`
/// the left-tail one.
pub fn natural_side(variant: Variant) -> Result<Side> {
    match variant {
        Variant::V0 => Ok(Side::Right),
        Variant::V1 => Ok(Side::Left),
        other => Err(Error::Unsupported(format!(
            "closed-form Poisson solutions exist only for v0 and v1, not {other}"
        ))),
    }
}

/// Erlang-C diffusion density for `v₀` or `v₁`.
pub fn erlangc_density(model: &ErlangC, variant: Variant, tol: f64) -> Result<StationaryDensity> {
    let m: Model = model.clone().into();
    let v = match variant {
        Variant::V0 => build_v0(&m)?,
        Variant::V1 => build_v1(&m)?,
        other => return Err(Error::Unsupported(format!("Erlang-C supports v0 and v1, not {other}"))),
    };
    StationaryDensity::for_model(model, &v, tol)
}

/// Solution of `b f′ + v f″ = h(x) − E h(Y)` with `h = 1(x ≥ z)` (right side) or of
/// `b f′ + v f″ = P(Y ≤ −z) − 1(x ≤ −z)` (left side).
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    density: StationaryDensity,
    side: Side,
    z: f64,
    /// `P(Y ≥ z)` for the right side, `P(Y ≤ −z)` for the left side.
    tail: f64,
}

impl PoissonSolution {
    pub fn new(density: StationaryDensity, side: Side, z: f64) -> Self {
        let tail = match side {
            Side::Right => density.ccdf(z),
            Side::Left => density.cdf(-z),
        };
        Self { density, side, z, tail }
    }

    /// Paired solution for an Erlang-C model and variant.
    pub fn erlangc(model: &ErlangC, variant: Variant, z: f64, tol: f64) -> Result<Self> {
        let density = erlangc_density(model, variant, tol)?;
        Ok(Self::new(density, natural_side(variant)?, z))
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Cached tail probability entering the formula.
    pub fn tail_probability(&self) -> f64 {
        self.tail
    }

    pub fn density(&self) -> &StationaryDensity {
        &self.density
    }

    /// Point where the two branches meet.
    pub fn switch(&self) -> f64 {
        match self.side {
            Side::Right => self.z,
            Side::Left => -self.z,
        }
    }

    /// Right-hand side `g(x)` of the Poisson equation.
    pub fn rhs(&self, x: f64) -> f64 {
        match self.side {
            Side::Right => f64::from(u8::from(x >= self.z)) - self.tail,
            Side::Left => self.tail - f64::from(u8::from(x <= -self.z)),
        }
    }

    /// `f′(x)`.
    ///
    /// On the effective support of the density this is the exact two-branch formula.
    /// Outside it the Mills ratio `P(Y ≤ x)/(v p)` is replaced by its leading-order
    /// asymptote `1/|b(x)|`.
    pub fn fprime(&self, x: f64) -> f64 {
        let y = &self.density;
        let s = self.switch();
        // Weight of the far branch: P(Y ≥ s) left of s and P(Y ≤ s) right of s.
        let (mass, left_branch) = if x <= s {
            (1.0 - self.tail_at_switch(), true)
        } else {
            (self.tail_at_switch(), false)
        };
        let ratio = if x < y.lower() || x > y.upper() {
            1.0 / y.drift(x).abs()
        } else {
            let tail = if left_branch { y.cdf(x) } else { y.ccdf(x) };
            let vp = y.coefficient().eval(x) * y.pdf(x);
            tail / vp
        };
        -mass * ratio
    }

    /// `P(Y ≤ s)` where `s` is the switch point.
    fn tail_at_switch(&self) -> f64 {
        match self.side {
            Side::Right => 1.0 - self.tail,
            Side::Left => self.tail,
        }
    }

    /// `f″(x)` from rearranging the Poisson equation.
    pub fn fsecond(&self, x: f64) -> f64 {
        let y = &self.density;
        (self.rhs(x) - y.drift(x) * self.fprime(x)) / y.coefficient().eval(x)
    }

    /// Analytic envelope for `μ|f′|` (index 0) and `μ|f″|` (index 1), with `μ = 1`
    /// after scaling by the service rate.
    pub fn envelopes(&self, x: f64, mu: f64) -> (f64, f64) {
        let y = &self.density;
        let b = y.drift(x);
        let capped = if b == 0.0 { 1.0 } else { (mu / b.abs()).min(1.0) };
        let growth = (-y.exponent(x)).exp();
        match self.side {
            Side::Left => {
                if x <= -self.z {
                    (capped, 1.0)
                } else if x < 0.0 {
                    (self.tail * growth, self.tail * (1.0 + x.abs()) * growth)
                } else {
                    (self.tail * capped, self.tail)
                }
            }
            Side::Right => {
                if x >= self.z {
                    (capped, 1.0)
                } else if x > 0.0 {
                    (self.tail * growth, self.tail * (1.0 + x.abs()) * growth)
                } else {
                    (self.tail * capped, self.tail)
                }
            }
        }
    }
}

/// One-shot `f_z′(x)` for an Erlang-C model; builds the density on every call.
pub fn poisson_fprime(model: &ErlangC, variant: Variant, z: f64, x: f64) -> Result<f64> {
    Ok(PoissonSolution::erlangc(model, variant, z, 1e-11)?.fprime(x))
}

/// Empirical Stein-factor constants over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinFactors {
    /// `sup μ|f′| / envelope`
    pub first: f64,
    /// `sup μ|f″| / envelope`
    pub second: f64,
    /// Smallest envelope value met on the grid.
    pub min_envelope: f64,
}

pub fn stein_factor_scan(model: &ErlangC, variant: Variant, z: f64, grid: &[f64], tol: f64) -> Result<SteinFactors> {
    let sol = PoissonSolution::erlangc(model, variant, z, tol)?;
    Ok(scan_solution(&sol, model.mu(), grid))
}

/// Stein factors of an already built solution; grid points outside the effective
/// support are skipped.
pub fn scan_solution(sol: &PoissonSolution, mu: f64, grid: &[f64]) -> SteinFactors {
    let y = sol.density();
    let mut out = SteinFactors { first: 0.0, second: 0.0, min_envelope: f64::INFINITY };
    for &x in grid.iter().filter(|x| **x >= y.lower() && **x <= y.upper()) {
        let (e1, e2) = sol.envelopes(x, mu);
        out.min_envelope = out.min_envelope.min(e1).min(e2);
        out.first = out.first.max(mu * sol.fprime(x).abs() / e1);
        out.second = out.second.max(mu * sol.fsecond(x).abs() / e2);
    }
    out
}

/// Envelope of the relative tail error for a variant and side at scale `R`.
pub fn md_envelope(variant: Variant, side: Side, r: f64, z: f64) -> Result<f64> {
    let s = r.sqrt();
    Ok(match (variant, side) {
        (Variant::V0, Side::Right) => (1.0 + z) / s,
        (Variant::V1, Side::Right) => (1.0 + z / s) / s,
        (Variant::V0, Side::Left) => (1.0 + z.powi(3)) / s,
        (Variant::V1, Side::Left) => (1.0 + z + z.powi(4) / s) / s,
        (other, _) => return Err(Error::Unsupported(format!("no tail envelope for {other}"))),
    })
}

/// Largest `z` scanned at scale `R`: `√R/2`, further capped by `R^γ` where `R^γ` is
/// the growth of the admissible range for the variant and side (`γ = 1/6` for the
/// `v₀` left tail, `1/4` for the `v₁` left tail).
pub fn md_z_max(variant: Variant, side: Side, r: f64) -> f64 {
    let half = 0.5 * r.sqrt();
    match (variant, side) {
        (Variant::V0, Side::Left) => half.min(r.powf(1.0 / 6.0)),
        (Variant::V1, Side::Left) => half.min(r.powf(0.25)),
        _ => half,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdPoint {
    pub r: f64,
    pub z: f64,
    pub raw: f64,
    pub envelope: f64,
    pub normalized: f64,
}

/// Normalised moderate-deviation curves across an `R` sweep at fixed `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdCurves {
    pub variant: Variant,
    pub side: Side,
    pub beta: f64,
    pub points: Vec<MdPoint>,
    /// `(R, max_z normalized)` per sweep value.
    pub maxima: Vec<(f64, f64)>,
}

impl MdCurves {
    /// Median of the per-`R` maxima.
    pub fn median(&self) -> f64 {
        let mut m: Vec<f64> = self.maxima.iter().map(|p| p.1).collect();
        m.sort_by(f64::total_cmp);
        let n = m.len();
        if n % 2 == 1 { m[n / 2] } else { 0.5 * (m[n / 2 - 1] + m[n / 2]) }
    }

    /// Largest factor by which a per-`R` maximum departs from the median.
    pub fn spread(&self) -> f64 {
        let med = self.median();
        self.maxima.iter().map(|p| (p.1 / med).max(med / p.1)).fold(1.0, f64::max)
    }

    /// Every per-`R` maximum lies within `factor` of the median.
    pub fn bounded(&self, factor: f64) -> bool {
        self.spread() <= factor
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, header: &str) -> std::io::Result<()> {
        for line in header.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "# variant={},side={},beta={}", self.variant, self.side.tag(), fmt_f64(self.beta))?;
        writeln!(out, "R,z,raw_error,envelope,normalized")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(p.r),
                fmt_f64(p.z),
                fmt_f64(p.raw),
                fmt_f64(p.envelope),
                fmt_f64(p.normalized)
            )?;
        }
        Ok(())
    }

    /// One report per sweep value carrying the normalised curve.
    pub fn reports(&self) -> Result<Vec<ErrorReport>> {
        let metric = format!("md_{}", self.side.tag());
        self.maxima
            .iter()
            .map(|&(r, max)| {
                let pts: Vec<&MdPoint> = self.points.iter().filter(|p| p.r == r).collect();
                let mut rep = ErrorReport::new("erlangc", &format!("R={r},beta={}", self.beta), self.variant.tag(), &metric, max, 0.0)?
                    .at(r, self.beta);
                rep.z_grid = pts.iter().map(|p| p.z).collect();
                rep.per_z = pts.iter().map(|p| p.normalized).collect();
                Ok(rep)
            })
            .collect()
    }
}

/// Relative tail errors on `z ∈ (0, md_z_max]` (`zcount` equispaced points) divided
/// by the envelope, for each `R` in the sweep.
pub fn moderate_deviation_curves(
    beta: f64,
    rs: &[f64],
    variant: Variant,
    side: Side,
    zcount: usize,
    tol: f64,
) -> Result<MdCurves> {
    if rs.is_empty() || zcount == 0 {
        return Err(Error::InvalidParameter("moderate-deviation sweep needs at least one R and one z".into()));
    }
    let mut points = Vec::new();
    let mut maxima = Vec::new();
    for &r in rs {
        let model = ErlangC::halfin_whitt(r, beta)?;
        let w = erlangc_reference(&model)?;
        let y = erlangc_density(&model, variant, tol)?;
        let z_max = md_z_max(variant, side, r);
        let zs: Vec<f64> = (1..=zcount).map(|i| z_max * i as f64 / zcount as f64).collect();
        let errs = relative_tail_error(&w, &y, &zs, side)?;
        let mut worst = 0.0_f64;
        for (z, raw) in zs.iter().zip(&errs.values) {
            let envelope = md_envelope(variant, side, r, *z)?;
            let normalized = raw / envelope;
            worst = worst.max(normalized);
            points.push(MdPoint { r, z: *z, raw: *raw, envelope, normalized });
        }
        maxima.push((r, worst));
    }
    Ok(MdCurves { variant, side, beta, points, maxima })
}
