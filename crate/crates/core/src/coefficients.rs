//! Diffusion coefficients `v(x)` of increasing order built from a model's jump moments.
//!
//! With `b = m₁`, `a = m₂`, `c = m₃`, `d = m₄`:
//!
//! * `v₀ = a(x₀)/2` at the fluid equilibrium `x₀`,
//! * `v₁ = a/2`,
//! * `v̲₂ = a/2 − bc/(3a) − (a/6)(c/a)′` and `v̄₂ = v̲₂ − c(c/a)″/18`,
//! * `v̲₃ = a/2 − b c̄/v̲₂ − v̲₂ (c̄/v̲₂)′` with `c̄ = c/6 − bd/(12a) − (a/24)(d/a)′`.
//!
//! Truncated variants are `max(v̲, η)`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::io::fmt_f64;
use crate::models::{fluid_equilibrium, ChainModel, Model};
use crate::{Error, Result};

/// Which diffusion coefficient to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    V0,
    V1,
    V2Lower,
    V2Upper,
    V3,
    Hybrid,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::V0,
        Variant::V1,
        Variant::V2Lower,
        Variant::V2Upper,
        Variant::V3,
        Variant::Hybrid,
    ];

    /// Command-line tag.
    pub fn tag(self) -> &'static str {
        match self {
            Variant::V0 => "v0",
            Variant::V1 => "v1",
            Variant::V2Lower => "v2",
            Variant::V2Upper => "v2u",
            Variant::V3 => "v3",
            Variant::Hybrid => "hybrid",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.tag() == tag)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Location of the hybrid switch point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Switch {
    /// Right-most crossing of `v̲₂` and `v̲₃`.
    Auto,
    At(f64),
}

/// What the hybrid uses to the right of the switch point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HybridTail {
    V2Lower,
    /// Use `v₁` instead, for models where `v̲₂` also turns negative.
    V1,
}

/// Recipe for a diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSpec {
    pub variant: Variant,
    /// Truncation floor; `None` selects `10⁻³ · v₁(x₀)`.
    pub eta: Option<f64>,
    pub switch: Switch,
    pub tail: HybridTail,
}

impl CoefficientSpec {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            eta: None,
            switch: Switch::Auto,
            tail: HybridTail::V2Lower,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_switch(mut self, switch: Switch) -> Self {
        self.switch = switch;
        self
    }

    pub fn with_tail(mut self, tail: HybridTail) -> Self {
        self.tail = tail;
        self
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A built diffusion coefficient `v(x) = max(raw(x), floor)`.
#[derive(Clone)]
pub struct CoefficientFn {
    variant: Variant,
    params: String,
    raw: RealFn,
    floor: f64,
    eta: Option<f64>,
    switch: Option<f64>,
    kinks: Vec<f64>,
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFn")
            .field("variant", &self.variant)
            .field("params", &self.params)
            .field("floor", &self.floor)
            .field("eta", &self.eta)
            .field("switch", &self.switch)
            .field("kinks", &self.kinks)
            .finish()
    }
}

impl CoefficientFn {
    /// Wrap an arbitrary positive function, mostly for tests and synthetic models.
    pub fn custom<F>(variant: Variant, raw: F, floor: f64, kinks: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            variant,
            params: String::new(),
            raw: Arc::new(raw),
            floor,
            eta: None,
            switch: None,
            kinks,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = (self.raw)(x);
        if r.is_nan() {
            r
        } else {
            r.max(self.floor)
        }
    }

    /// Value before the truncation floor is applied.
    pub fn untruncated(&self, x: f64) -> f64 {
        (self.raw)(x)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Parameter echo of the model the coefficient was built for.
    pub fn params(&self) -> &str {
        &self.params
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// Hybrid switch point `K`, if any (`+∞` means pure `v₃`).
    pub fn switch_point(&self) -> Option<f64> {
        self.switch
    }

    /// Points where `v` may fail to be differentiable.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Tabulate `x,v` on the given grid with a `#` header line.
    pub fn write_csv<W: Write>(&self, out: &mut W, xs: &[f64], header: &str) -> std::io::Result<()> {
        writeln!(out, "# variant={},{}{}", self.variant, self.params, self.header_extra())?;
        if !header.is_empty() {
            writeln!(out, "# {header}")?;
        }
        writeln!(out, "x,v")?;
        for &x in xs {
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(self.eval(x)))?;
        }
        Ok(())
    }

    /// `,eta=..,K=..` fragment for file headers.
    pub fn header_extra(&self) -> String {
        let mut s = String::new();
        if let Some(eta) = self.eta {
            s.push_str(&format!(",eta={}", fmt_f64(eta)));
        }
        if let Some(k) = self.switch {
            s.push_str(&format!(",K={}", fmt_f64(k)));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Second-order jets: value with first and second derivative.

/// Truncated Taylor data `(f, f′, f″)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }

    /// Derivative; the second derivative of the result is unknown.
    fn diff(self) -> Self {
        Self::new(self.d1, self.d2, f64::NAN)
    }

    fn scale(self, s: f64) -> Self {
        Self::new(s * self.v, s * self.d1, s * self.d2)
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }

    fn sub(self, o: Self) -> Self {
        self.add(o.scale(-1.0))
    }

    fn mul(self, o: Self) -> Self {
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        Self::new(r, -self.d1 * r * r, (2.0 * self.d1 * self.d1 * r - self.d2) * r * r)
    }

    fn div(self, o: Self) -> Result<Self> {
        if o.v == 0.0 {
            return Err(Error::DivisionByZero(o.v));
        }
        Ok(self.mul(o.recip()))
    }
}

/// Relative step for first-derivative central differences.
const FD_STEP: f64 = 1e-6;
/// Relative step for second differences; smaller steps lose too many digits.
const FD_STEP2: f64 = 1e-4;

/// `(m_k, m_k′, m_k″)` at `x`, analytic where the model provides it.
pub fn moment_jet(model: &dyn ChainModel, k: usize, x: f64) -> Jet {
    let v = model.moment(k, x);
    let d1 = model.moment_derivative(k, x, 1).unwrap_or_else(|| {
        let h = FD_STEP * (1.0 + x.abs());
        (model.moment(k, x + h) - model.moment(k, x - h)) / (2.0 * h)
    });
    let d2 = model.moment_derivative(k, x, 2).unwrap_or_else(|| {
        let h = FD_STEP2 * (1.0 + x.abs());
        (model.moment(k, x + h) - 2.0 * v + model.moment(k, x - h)) / (h * h)
    });
    Jet::new(v, d1, d2)
}

fn require_moments(model: &dyn ChainModel, k: usize, what: &str) -> Result<()> {
    if model.max_moment() < k {
        return Err(Error::Unsupported(format!(
            "{what} needs jump moments up to order {k}, but the {} model provides {}",
            model.name(),
            model.max_moment()
        )));
    }
    Ok(())
}

/// Jet of `v̲₂ = a/2 − bc/(3a) − (a/6)(c/a)′`. Only value and first derivative are exact.
fn v2_lower_jet(model: &dyn ChainModel, x: f64) -> Result<Jet> {
    let b = moment_jet(model, 1, x);
    let a = moment_jet(model, 2, x);
    let c = moment_jet(model, 3, x);
    let ca = c.div(a)?;
    Ok(a.scale(0.5)
        .sub(b.mul(c).div(a)?.scale(1.0 / 3.0))
        .sub(a.mul(ca.diff()).scale(1.0 / 6.0)))
}

/// Untruncated `v̲₂(x)` from the generic formula.
pub fn v2_lower_raw(model: &dyn ChainModel, x: f64) -> Result<f64> {
    v2_lower_jet(model, x).map(|j| j.v)
}

/// Untruncated `v̄₂(x) = v̲₂(x) − c(c/a)″/18`.
pub fn v2_upper_raw(model: &dyn ChainModel, x: f64) -> Result<f64> {
    let a = moment_jet(model, 2, x);
    let c = moment_jet(model, 3, x);
    let ca = c.div(a)?;
    Ok(v2_lower_raw(model, x)? - c.v * ca.d2 / 18.0)
}

/// `c̄ = c/6 − bd/(12a) − (a/24)(d/a)′`; value and first derivative are exact.
fn c_bar_jet(model: &dyn ChainModel, x: f64) -> Result<Jet> {
    let b = moment_jet(model, 1, x);
    let a = moment_jet(model, 2, x);
    let c = moment_jet(model, 3, x);
    let d = moment_jet(model, 4, x);
    let da = d.div(a)?;
    Ok(c.scale(1.0 / 6.0)
        .sub(b.mul(d).div(a)?.scale(1.0 / 12.0))
        .sub(a.mul(da.diff()).scale(1.0 / 24.0)))
}

/// Untruncated `v̲₃(x)` from the generic recursion.
pub fn v3_lower_generic(model: &dyn ChainModel, x: f64) -> Result<f64> {
    let b = model.moment(1, x);
    let a = model.moment(2, x);
    let v2 = v2_lower_jet(model, x)?;
    let cb = c_bar_jet(model, x)?;
    if v2.v == 0.0 {
        return Err(Error::DivisionByZero(x));
    }
    let ratio_d1 = (cb.d1 - cb.v * v2.d1 / v2.v) / v2.v;
    Ok(a / 2.0 - b * cb.v / v2.v - v2.v * ratio_d1)
}

// ---------------------------------------------------------------------------
// Builders.

/// Default truncation level `10⁻³ · v₁(x₀)`.
pub fn default_eta(model: &dyn ChainModel) -> Result<f64> {
    let x0 = fluid_equilibrium(model)?;
    Ok(1e-3 * 0.5 * model.moment(2, x0))
}

fn resolve_eta(model: &dyn ChainModel, eta: Option<f64>) -> Result<f64> {
    match eta {
        Some(e) if e > 0.0 && e.is_finite() => Ok(e),
        Some(e) => Err(Error::EtaNonPositive(e)),
        None => default_eta(model),
    }
}

fn base(model: &Model, variant: Variant, raw: RealFn, floor: f64) -> CoefficientFn {
    CoefficientFn {
        variant,
        params: format!("model={},{}", model.name(), model.params()),
        raw,
        floor,
        eta: None,
        switch: None,
        kinks: model.kinks(),
    }
}

/// Probe points spanning the support around `x₀`, used for sanity checks.
fn probe_grid(model: &dyn ChainModel, x0: f64, count: usize) -> Vec<f64> {
    let s = model.support();
    let lo = if s.lo.is_finite() { s.lo } else { x0 - 50.0 };
    let hi = if s.hi.is_finite() { s.hi } else { x0 + 50.0 };
    (0..count)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64)
        .collect()
}

/// Constant `v₀ = a(x₀)/2`.
pub fn build_v0(model: &Model) -> Result<CoefficientFn> {
    let x0 = fluid_equilibrium(model)?;
    let value = 0.5 * model.moment(2, x0);
    if value <= 0.0 {
        return Err(Error::NonPositive { x: x0, value });
    }
    let mut v = base(model, Variant::V0, Arc::new(move |_| value), 0.0);
    v.kinks.clear();
    Ok(v)
}

/// `v₁ = a/2`.
pub fn build_v1(model: &Model) -> Result<CoefficientFn> {
    let x0 = fluid_equilibrium(model)?;
    for x in probe_grid(model, x0, 10_000) {
        let value = 0.5 * model.moment(2, x);
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositive { x, value });
        }
    }
    let m = model.clone();
    Ok(base(model, Variant::V1, Arc::new(move |x| 0.5 * m.moment(2, x)), 0.0))
}

fn generic_raw(model: &Model, f: fn(&dyn ChainModel, f64) -> Result<f64>) -> RealFn {
    let m = model.clone();
    Arc::new(move |x| f(&m, x).unwrap_or(f64::NAN))
}

/// Truncated `v₂ = max(v̲₂, η)`.
pub fn build_v2_lower(model: &Model, eta: Option<f64>) -> Result<CoefficientFn> {
    require_moments(model, 3, "v2")?;
    let eta = resolve_eta(model, eta)?;
    let mut v = base(model, Variant::V2Lower, generic_raw(model, v2_lower_raw), eta);
    v.eta = Some(eta);
    Ok(v)
}

/// Truncated `max(v̄₂, η)`.
pub fn build_v2_upper(model: &Model, eta: Option<f64>) -> Result<CoefficientFn> {
    require_moments(model, 3, "v2 (upper)")?;
    let eta = resolve_eta(model, eta)?;
    let mut v = base(model, Variant::V2Upper, generic_raw(model, v2_upper_raw), eta);
    v.eta = Some(eta);
    Ok(v)
}

/// Untruncated hospital `v̲₃(x) = δ + ½(δ²1(x<0) − δb(x) − δ² − 2δ²β)`.
fn hospital_v3_raw(delta: f64, beta: f64, x: f64) -> f64 {
    let b = delta * ((-x).max(0.0) - beta);
    let ind = if x < 0.0 { 1.0 } else { 0.0 };
    delta + 0.5 * (delta * delta * ind - delta * b - delta * delta - 2.0 * delta * delta * beta)
}

/// Hospital `v₃`, floored at `δ/2`.
pub fn build_v3_hospital(model: &crate::models::Hospital) -> CoefficientFn {
    let (delta, beta) = (model.delta(), model.beta());
    let wrapped = Model::from(model.clone());
    let mut v = base(
        &wrapped,
        Variant::V3,
        Arc::new(move |x| hospital_v3_raw(delta, beta, x)),
        delta / 2.0,
    );
    // The floor binds left of β − √N.
    v.kinks.push(beta - (model.servers() as f64).sqrt());
    v.kinks.sort_by(f64::total_cmp);
    v
}

/// AR(1) `v₃ = max(v̲₃, η)` with `v̲₃` in polynomial form.
pub fn build_v3_ar1(model: &crate::models::Ar1, eta: Option<f64>) -> Result<CoefficientFn> {
    let eta = resolve_eta(model, eta)?;
    let m = model.clone();
    let wrapped = Model::from(model.clone());
    let mut v = base(&wrapped, Variant::V3, Arc::new(move |x| m.v3_lower(x)), eta);
    v.eta = Some(eta);
    Ok(v)
}

/// `v₃` for whichever model supports it.
pub fn build_v3(model: &Model, eta: Option<f64>) -> Result<CoefficientFn> {
    match model {
        Model::Hospital(h) => Ok(build_v3_hospital(h)),
        Model::Ar1(a) => build_v3_ar1(a, eta),
        Model::ErlangC(_) => Err(Error::Unsupported("v3 is not defined for the Erlang-C model".into())),
    }
}

/// Number of subintervals in the crossing scan.
const SCAN_CELLS: usize = 10_000;

/// Right-most root of `v3 − v2` on `[lo, x_max]`, by sign scan and bisection to `10⁻¹⁰`.
///
/// Returns `+∞` when the difference never changes sign. Both functions are used untruncated.
pub fn find_hybrid_k(v2: &CoefficientFn, v3: &CoefficientFn, lo: f64, x_max: f64) -> f64 {
    let diff = |x: f64| v3.untruncated(x) - v2.untruncated(x);
    let width = (x_max - lo) / SCAN_CELLS as f64;
    let mut right = x_max;
    let mut f_right = diff(right);
    for i in (0..SCAN_CELLS).rev() {
        let left = lo + width * i as f64;
        let f_left = diff(left);
        if f_left.is_finite() && f_right.is_finite() && (f_left == 0.0 || f_left.signum() != f_right.signum()) {
            if f_left == 0.0 && f_right == 0.0 {
                // Identical on this cell: not a crossing.
                right = left;
                f_right = f_left;
                continue;
            }
            return bisect(diff, left, right, f_left);
        }
        right = left;
        f_right = f_left;
    }
    f64::INFINITY
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    if f_lo == 0.0 {
        return lo;
    }
    let s_lo = f_lo.signum();
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `v̂₃ = v̲₃ 1(x ≤ K) + tail(x) 1(x > K)`, floored at `eta`.
pub fn build_hybrid(v3: &CoefficientFn, tail: &CoefficientFn, k: f64, eta: f64) -> Result<CoefficientFn> {
    if !(eta > 0.0) {
        return Err(Error::EtaNonPositive(eta));
    }
    let (r3, rt) = (v3.raw.clone(), tail.raw.clone());
    let raw: RealFn = Arc::new(move |x| if x <= k { r3(x) } else { rt(x) });
    let mut kinks: Vec<f64> = v3.kinks.iter().chain(&tail.kinks).copied().collect();
    if k.is_finite() {
        kinks.push(k);
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    Ok(CoefficientFn {
        variant: Variant::Hybrid,
        params: v3.params.clone(),
        raw,
        floor: eta,
        eta: Some(eta),
        switch: Some(k),
        kinks,
    })
}

/// Build any variant from a spec. Automatic hybrid switch points use the right end of
/// the `v₁` density's effective support as the scan limit.
pub fn build(model: &Model, spec: &CoefficientSpec, tol: f64) -> Result<CoefficientFn> {
    match spec.variant {
        Variant::V0 => build_v0(model),
        Variant::V1 => build_v1(model),
        Variant::V2Lower => build_v2_lower(model, spec.eta),
        Variant::V2Upper => build_v2_upper(model, spec.eta),
        Variant::V3 => build_v3(model, spec.eta),
        Variant::Hybrid => {
            let eta = resolve_eta(model, spec.eta)?;
            let v3 = build_v3(model, Some(eta))?;
            let tail = match spec.tail {
                HybridTail::V2Lower => build_v2_lower(model, Some(eta))?,
                HybridTail::V1 => build_v1(model)?,
            };
            let k = match spec.switch {
                Switch::At(k) => k,
                Switch::Auto => {
                    let v1 = build_v1(model)?;
                    let dens = crate::density::StationaryDensity::for_model(model, &v1, tol)?;
                    let lo = model.support().lo.max(dens.lower());
                    let v2 = build_v2_lower(model, Some(eta))?;
                    find_hybrid_k(&v2, &v3, lo, dens.upper())
                }
            };
            build_hybrid(&v3, &tail, k, eta)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Ar1, ErlangC, Hospital};

    #[test]
    fn v0_erlangc_is_mu() {
        let m: Model = ErlangC::new(9.0, 2.0, 10).unwrap().into();
        let v = build_v0(&m).unwrap();
        assert!((v.eval(3.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn v0_hospital_closed_form() {
        let m: Model = Hospital::new(16, 1.0).unwrap().into();
        let v = build_v0(&m).unwrap();
        assert!((v.eval(0.0) - 0.1640625).abs() < 1e-12);
    }

    #[test]
    fn v1_erlangc_left_edge() {
        let m: Model = ErlangC::new(9.0, 1.0, 10).unwrap().into();
        let v = build_v1(&m).unwrap();
        assert!((v.eval(-3.0) - 0.5).abs() < 1e-14);
        assert!((v.eval(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn erlangc_has_no_higher_orders() {
        let m: Model = ErlangC::new(9.0, 1.0, 10).unwrap().into();
        assert!(matches!(build_v2_upper(&m, None), Err(Error::Unsupported(_))));
        assert!(matches!(build_v2_lower(&m, None), Err(Error::Unsupported(_))));
        assert!(matches!(build_v3(&m, None), Err(Error::Unsupported(_))));
    }

    #[test]
    fn eta_must_be_positive() {
        let m: Model = Ar1::new(0.2).unwrap().into();
        assert_eq!(build_v2_lower(&m, Some(0.0)).unwrap_err(), Error::EtaNonPositive(0.0));
        assert!(build_v3(&m, Some(-1.0)).is_err());
    }

    #[test]
    fn hospital_v3_values() {
        let h = Hospital::new(64, 1.0).unwrap();
        let v = build_v3_hospital(&h);
        let d = 0.125;
        assert!((v.eval(0.0) - (d - d * d)).abs() < 1e-15);
        assert!((v.eval(-1e-12) - v.eval(0.0) - d * d / 2.0).abs() < 1e-12);
        assert_eq!(v.eval(-8.0), d / 2.0);
    }

    #[test]
    fn generic_v2_matches_polynomial_form() {
        for &alpha in &[0.04, 0.3, 0.8] {
            let a = Ar1::new(alpha).unwrap();
            for &x in &[-1.0, 0.0, 0.7, 3.0] {
                let g = v2_lower_raw(&a, x).unwrap();
                let p = a.v2_lower(x);
                assert!((g - p).abs() <= 1e-10 * p.abs().max(1e-300), "alpha={alpha} x={x}");
                let g3 = v3_lower_generic(&a, x).unwrap();
                let p3 = a.v3_lower(x);
                assert!((g3 - p3).abs() <= 1e-9 * p3.abs(), "alpha={alpha} x={x}: {g3} {p3}");
            }
        }
    }

    #[test]
    fn jets_obey_quotient_rule() {
        let f = Jet::new(2.0, 3.0, 5.0);
        let g = Jet::new(7.0, -1.0, 0.5);
        let q = f.div(g).unwrap();
        let h = 1e-4;
        let val = |t: f64| (2.0 + 3.0 * t + 2.5 * t * t) / (7.0 - t + 0.25 * t * t);
        assert!((q.v - val(0.0)).abs() < 1e-15);
        assert!((q.d1 - (val(h) - val(-h)) / (2.0 * h)).abs() < 1e-7);
        assert!((q.d2 - (val(h) - 2.0 * val(0.0) + val(-h)) / (h * h)).abs() < 1e-5);
        assert!(f.div(Jet::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn identical_functions_have_no_crossing() {
        let v = CoefficientFn::custom(Variant::V2Lower, |x| 1.0 + x * x, 0.0, vec![]);
        assert_eq!(find_hybrid_k(&v, &v, -3.0, 3.0), f64::INFINITY);
    }

    #[test]
    fn crossing_is_rightmost_root() {
        let v2 = CoefficientFn::custom(Variant::V2Lower, |_| 0.0, 0.0, vec![]);
        let v3 = CoefficientFn::custom(Variant::V3, |x| (x - 1.0) * (x - 2.5), 0.0, vec![]);
        let k = find_hybrid_k(&v2, &v3, -5.0, 10.0);
        assert!((k - 2.5).abs() < 1e-9);
    }

    #[test]
    fn variant_tags_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::from_tag(v.tag()), Some(v));
        }
    }
}
