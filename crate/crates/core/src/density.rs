//! Stationary density `p(x) = κ/v(x) · exp(∫₀ˣ b(y)/v(y) dy)` of the diffusion with drift `b`
//! and diffusion coefficient `v`.
//!
//! The exponent is represented by piecewise Chebyshev interpolants of `b/v` (first-kind
//! nodes, so endpoint jumps of `v` are never sampled from the wrong side) that are
//! integrated exactly. A second family of panels interpolates the unnormalised density
//! and carries prefix and suffix masses, which keeps both tails of the CDF accurate
//! in a relative sense.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use crate::coefficients::CoefficientFn;
use crate::io::fmt_f64;
use crate::models::{ChainModel, Interval};
use crate::quadrature;
use crate::{Error, Result};

/// Chebyshev interpolation order used on every panel.
const ORDER: usize = 32;
/// The effective support ends where the density falls below this fraction of its peak.
pub const TAIL_CUTOFF: f64 = 1e-16;
/// Density panels below this relative size are kept without refinement.
const NEGLIGIBLE: f64 = 1e-30;
/// Panels are not split below this relative width. Rounding noise in high-order
/// coefficients near their floor would otherwise drive endless refinement.
const MIN_WIDTH: f64 = 1e-9;
/// Coefficient plateaus below this relative level are treated as rounding noise.
const NOISE: f64 = 1e-6;
const MAX_REACH: f64 = 1e6;
const MAX_PANELS: usize = 200_000;

fn cos_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = ORDER;
        let mut t = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                t[k * n + j] = (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
            }
        }
        t
    })
}

/// Chebyshev series `Σ c_k T_k(t)` on `[l, r]`.
#[derive(Debug, Clone)]
struct Cheb {
    l: f64,
    r: f64,
    c: Vec<f64>,
}

impl Cheb {
    fn nodes(l: f64, r: f64) -> impl Iterator<Item = f64> {
        let n = ORDER;
        (0..n).map(move |j| {
            let t = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
            0.5 * (l + r) + 0.5 * (r - l) * t
        })
    }

    fn from_values(l: f64, r: f64, values: &[f64]) -> Self {
        let n = ORDER;
        let table = cos_table();
        let mut c: Vec<f64> = (0..n)
            .map(|k| {
                let row = &table[k * n..(k + 1) * n];
                2.0 / n as f64 * row.iter().zip(values).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        c[0] *= 0.5;
        Self { l, r, c }
    }

    /// Size of the highest few coefficients, a proxy for the interpolation error.
    fn tail(&self) -> f64 {
        self.c[ORDER - 4..].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when the upper coefficients have stopped decaying, i.e. the series is
    /// resolved down to rounding noise in the sampled values.
    fn plateaued(&self) -> bool {
        let mid = self.c[ORDER / 2 - 4..ORDER / 2 + 4].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.tail() >= 0.5 * mid
    }

    fn eval(&self, x: f64) -> f64 {
        let t = ((2.0 * x - self.l - self.r) / (self.r - self.l)).clamp(-1.0, 1.0);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in self.c[1..].iter().rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.c[0]
    }

    /// Antiderivative vanishing at `l`.
    fn antiderivative(&self) -> Self {
        let n = self.c.len();
        let half = 0.5 * (self.r - self.l);
        let coef = |k: usize| if k < n { self.c[k] } else { 0.0 };
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            let prev = if k == 1 { 2.0 * coef(0) } else { coef(k - 1) };
            *slot = half * (prev - coef(k + 1)) / (2.0 * k as f64);
        }
        out[0] = -out
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| if k % 2 == 0 { *c } else { -*c })
            .sum::<f64>();
        Self { l: self.l, r: self.r, c: out }
    }
}

type Fallible<'a> = &'a dyn Fn(f64) -> Result<f64>;

/// Interpolate `f` on `[l, r]`, bisecting until the trailing coefficients fall below
/// `tol · max(floor, max|f|)`. Panels are appended in ascending order.
fn fit_adaptive(f: Fallible, l: f64, r: f64, tol: f64, floor: f64, out: &mut Vec<Cheb>) -> Result<()> {
    let mut stack = vec![(l, r)];
    while let Some((a, b)) = stack.pop() {
        if out.len() > MAX_PANELS {
            return Err(Error::Divergent("panel budget exhausted while resolving the density".into()));
        }
        let values = Cheb::nodes(a, b).map(f).collect::<Result<Vec<f64>>>()?;
        let scale = values.iter().fold(floor, |m, v| m.max(v.abs()));
        let cheb = Cheb::from_values(a, b, &values);
        let small = b - a < MIN_WIDTH * (1.0 + a.abs().max(b.abs()));
        let noisy = cheb.tail() <= NOISE * scale && cheb.plateaued();
        if cheb.tail() <= tol * scale || noisy || small || scale < NEGLIGIBLE {
            out.push(cheb);
        } else {
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
        }
    }
    Ok(())
}

/// Exponent data on one panel: `E(x) = e_left + anti(x)`.
#[derive(Debug, Clone)]
struct ExpPanel {
    l: f64,
    r: f64,
    e_left: f64,
    anti: Cheb,
}

/// Unnormalised mass data on one panel: `∫_l^x h = anti(x)`, total `mass`.
#[derive(Debug, Clone)]
struct MassPanel {
    l: f64,
    r: f64,
    anti: Cheb,
    mass: f64,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Test functions `h` for expectations `E h(Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    One,
    Identity,
    /// `(x − s)⁺`
    PositivePart(f64),
    /// `log(x + s)`
    LogShift(f64),
    /// `1(x ≥ z)`
    IndicatorGe(f64),
    /// `1(x ≤ −z)`
    IndicatorLe(f64),
}

impl Functional {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Functional::One => 1.0,
            Functional::Identity => x,
            Functional::PositivePart(s) => (x - s).max(0.0),
            Functional::LogShift(s) => (x + s).ln(),
            Functional::IndicatorGe(z) => f64::from(u8::from(x >= z)),
            Functional::IndicatorLe(z) => f64::from(u8::from(x <= -z)),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match *self {
            Functional::PositivePart(s) => vec![s],
            _ => Vec::new(),
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            Functional::One => "one".into(),
            Functional::Identity => "mean".into(),
            Functional::PositivePart(s) => format!("pospart({s})"),
            Functional::LogShift(s) => format!("log({s})"),
            Functional::IndicatorGe(z) => format!("ge({z})"),
            Functional::IndicatorLe(z) => format!("le(-{z})"),
        }
    }
}

/// Normalised stationary density of a one-dimensional diffusion.
#[derive(Clone)]
pub struct StationaryDensity {
    b: RealFn,
    v: CoefficientFn,
    support: Interval,
    lower: f64,
    upper: f64,
    exp_panels: Vec<ExpPanel>,
    mass_panels: Vec<MassPanel>,
    /// Largest `E − ln v` seen on the build grid; densities are stored relative to it.
    log_peak: f64,
    total: f64,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    tol: f64,
}

impl std::fmt::Debug for StationaryDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StationaryDensity")
            .field("variant", &self.v.variant())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("log_kappa", &self.log_kappa())
            .field("panels", &self.mass_panels.len())
            .finish()
    }
}

struct Builder<'a> {
    b: &'a (dyn Fn(f64) -> f64 + Send + Sync),
    v: &'a CoefficientFn,
    tol: f64,
}

impl Builder<'_> {
    fn integrand(&self, x: f64) -> Result<f64> {
        let value = self.v.eval(x);
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveV { x, value });
        }
        Ok((self.b)(x) / value)
    }

    fn log_density(&self, e: f64, x: f64) -> f64 {
        e - self.v.eval(x).ln()
    }

    /// Panels covering `[l, r]` with the exponent continued from `e_start` at the
    /// marching origin. Returns the panels (ascending) and the exponent at the far end.
    fn panels(&self, l: f64, r: f64, e_start: f64, rightward: bool) -> Result<(Vec<ExpPanel>, f64)> {
        let mut chebs = Vec::new();
        let g = |x: f64| self.integrand(x);
        fit_adaptive(&g, l, r, self.tol * 1e-2, 1.0, &mut chebs)?;
        let antis: Vec<Cheb> = chebs.iter().map(Cheb::antiderivative).collect();
        let increments: Vec<f64> = antis.iter().map(|a| a.eval(a.r)).collect();
        let mut out = Vec::with_capacity(chebs.len());
        if rightward {
            let mut e = e_start;
            for (anti, inc) in antis.into_iter().zip(increments) {
                out.push(ExpPanel { l: anti.l, r: anti.r, e_left: e, anti });
                e += inc;
            }
            Ok((out, e))
        } else {
            let mut e = e_start;
            let mut rev = Vec::with_capacity(antis.len());
            for (anti, inc) in antis.into_iter().zip(increments).rev() {
                e -= inc;
                rev.push(ExpPanel { l: anti.l, r: anti.r, e_left: e, anti });
            }
            rev.reverse();
            out.extend(rev);
            Ok((out, e))
        }
    }

    /// March from `origin` towards `end` until the density is negligible and decaying.
    fn march(
        &self,
        origin: f64,
        end: f64,
        breaks: &[f64],
        rightward: bool,
        peak: &mut f64,
    ) -> Result<(Vec<ExpPanel>, f64)> {
        let dir = if rightward { 1.0 } else { -1.0 };
        let mut x = origin;
        let mut e = 0.0;
        let mut step: f64 = 0.25;
        let mut all: Vec<ExpPanel> = Vec::new();
        let cutoff = TAIL_CUTOFF.ln();
        loop {
            if x == end {
                break;
            }
            let mut next = x + dir * step;
            if (next - end) * dir > 0.0 {
                next = end;
            }
            if let Some(&k) = breaks
                .iter()
                .filter(|&&k| (k - x) * dir > 0.0 && (next - k) * dir > 0.0)
                .min_by(|a, b| ((*a - x) * dir).total_cmp(&((*b - x) * dir)))
            {
                next = k;
            }
            let (l, r) = if rightward { (x, next) } else { (next, x) };
            let (mut panels, e_end) = self.panels(l, r, e, rightward)?;
            // Track the peak at panel edges and midpoints.
            for p in &panels {
                for y in [p.l, 0.5 * (p.l + p.r), p.r] {
                    let e_here = p.e_left + p.anti.eval(y);
                    let inner = if y == p.l { y + (p.r - p.l) * 1e-12 } else { y };
                    let ld = self.log_density(e_here, inner);
                    if ld.is_finite() {
                        *peak = peak.max(ld);
                    }
                }
            }
            if rightward {
                all.append(&mut panels);
            } else {
                panels.append(&mut all);
                all = panels;
            }
            e = e_end;
            x = next;
            if all.len() > MAX_PANELS || (x - origin).abs() > MAX_REACH {
                return Err(Error::Divergent(format!(
                    "exp(E)/v does not decay towards {}",
                    if rightward { "+inf" } else { "-inf" }
                )));
            }
            let inside = x - dir * 1e-12 * (1.0 + x.abs());
            let ld = self.log_density(e, inside);
            let decaying = dir * self.integrand(inside)? < 0.0;
            if ld < *peak + cutoff && decaying {
                break;
            }
            step = (step * 1.5).min(4.0);
        }
        Ok((all, x))
    }
}

impl StationaryDensity {
    /// Build the density of the diffusion `(b, v)` on `support` with quadrature tolerance `tol`.
    pub fn build<B>(b: B, v: &CoefficientFn, support: Interval, tol: f64) -> Result<Self>
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build_arc(Arc::new(b), v, support, tol)
    }

    /// Density of the diffusion approximation of `model` with coefficient `v`.
    pub fn for_model<M>(model: &M, v: &CoefficientFn, tol: f64) -> Result<Self>
    where
        M: ChainModel + Clone + Send + Sync + 'static,
    {
        let m = model.clone();
        let mut breaks = model.kinks();
        breaks.extend_from_slice(v.kinks());
        Self::build_with_breaks(Arc::new(move |x| m.drift(x)), v, model.diffusion_domain(), tol, &breaks)
    }

    fn build_arc(b: RealFn, v: &CoefficientFn, support: Interval, tol: f64) -> Result<Self> {
        let breaks = v.kinks().to_vec();
        Self::build_with_breaks(b, v, support, tol, &breaks)
    }

    fn build_with_breaks(b: RealFn, v: &CoefficientFn, support: Interval, tol: f64, breaks: &[f64]) -> Result<Self> {
        if !(1e-12..=1e-6).contains(&tol) {
            return Err(Error::InvalidParameter(format!("tol must lie in [1e-12, 1e-6], got {tol}")));
        }
        if !(support.lo < support.hi) {
            return Err(Error::InvalidParameter("empty support".into()));
        }
        let origin = support.clamp(0.0);
        let builder = Builder { b: &*b, v, tol };
        let mut breaks: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|k| k.is_finite() && *k > support.lo && *k < support.hi)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut peak = f64::NEG_INFINITY;
        let (right, upper) = builder.march(origin, support.hi, &breaks, true, &mut peak)?;
        let (left, lower) = builder.march(origin, support.lo, &breaks, false, &mut peak)?;
        // The peak may have been found on the right before the left march raised it;
        // the cutoff only ever moves outward, so both ends stay valid.
        let mut exp_panels = left;
        exp_panels.extend(right);
        if !peak.is_finite() {
            return Err(Error::Divergent("density has no finite maximum".into()));
        }

        let mut mass_panels = Vec::new();
        for p in &exp_panels {
            let h = |x: f64| -> Result<f64> {
                let e = p.e_left + p.anti.eval(x);
                Ok((e - builder.v.eval(x).ln() - peak).exp())
            };
            let mut chebs = Vec::new();
            fit_adaptive(&h, p.l, p.r, tol * 1e-2, 0.0, &mut chebs)?;
            for c in chebs {
                let anti = c.antiderivative();
                let mass = anti.eval(anti.r).max(0.0);
                mass_panels.push(MassPanel { l: c.l, r: c.r, anti, mass });
            }
        }
        let total: f64 = mass_panels.iter().map(|p| p.mass).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Divergent(format!("normalising integral is {total}")));
        }
        let mut prefix = Vec::with_capacity(mass_panels.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for p in &mass_panels {
            acc += p.mass / total;
            prefix.push(acc);
        }
        let mut suffix = vec![0.0; mass_panels.len() + 1];
        let mut acc = 0.0;
        for (i, p) in mass_panels.iter().enumerate().rev() {
            acc += p.mass / total;
            suffix[i] = acc;
        }
        Ok(Self {
            b,
            v: v.clone(),
            support,
            lower,
            upper,
            exp_panels,
            mass_panels,
            log_peak: peak,
            total,
            prefix,
            suffix,
            tol,
        })
    }

    /// Left end of the effective support.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Right end of the effective support.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn coefficient(&self) -> &CoefficientFn {
        &self.v
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    /// `log κ` in `p(x) = κ/v(x) exp(E(x))`.
    pub fn log_kappa(&self) -> f64 {
        -self.log_peak - self.total.ln()
    }

    fn exp_panel(&self, x: f64) -> &ExpPanel {
        let i = self.exp_panels.partition_point(|p| p.r < x);
        &self.exp_panels[i.min(self.exp_panels.len() - 1)]
    }

    fn mass_index(&self, x: f64) -> usize {
        let i = self.mass_panels.partition_point(|p| p.r < x);
        i.min(self.mass_panels.len() - 1)
    }

    /// `E(x) = ∫₀ˣ b/v`; meaningful on the effective support.
    pub fn exponent(&self, x: f64) -> f64 {
        let p = self.exp_panel(x);
        p.e_left + p.anti.eval(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        (self.exponent(x) - self.v.eval(x).ln() - self.log_peak).exp() / self.total
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let i = self.mass_index(x);
        let p = &self.mass_panels[i];
        (self.prefix[i] + p.anti.eval(x) / self.total).clamp(0.0, 1.0)
    }

    pub fn ccdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 1.0;
        }
        if x >= self.upper {
            return 0.0;
        }
        let i = self.mass_index(x);
        let p = &self.mass_panels[i];
        (self.suffix[i + 1] + (p.mass - p.anti.eval(x)).max(0.0) / self.total).clamp(0.0, 1.0)
    }

    /// `E φ(Y)` by adaptive quadrature over the density panels, splitting at `kinks`.
    pub fn expect_fn<F: Fn(f64) -> f64>(&self, phi: F, kinks: &[f64]) -> f64 {
        let mut sum = 0.0;
        for p in &self.mass_panels {
            let share = p.mass / self.total;
            if share == 0.0 {
                continue;
            }
            let mut cuts = vec![p.l];
            cuts.extend(kinks.iter().copied().filter(|k| *k > p.l && *k < p.r));
            cuts.push(p.r);
            let abs_tol = self.tol * share * (1.0 + p.l.abs().max(p.r.abs()));
            for w in cuts.windows(2) {
                let (v, _) = quadrature::integrate(
                    |x| {
                        let d = self.pdf(x);
                        if d == 0.0 {
                            0.0
                        } else {
                            phi(x) * d
                        }
                    },
                    w[0],
                    w[1],
                    abs_tol,
                    self.tol,
                );
                sum += v;
            }
        }
        sum
    }

    /// `E h(Y)` for one of the standard test functions.
    pub fn moment(&self, h: Functional) -> Result<f64> {
        match h {
            Functional::One => return Ok(self.prefix[self.prefix.len() - 1]),
            Functional::IndicatorGe(z) => return Ok(self.ccdf(z)),
            Functional::IndicatorLe(z) => return Ok(self.cdf(-z)),
            Functional::LogShift(s) if self.lower < -s => {
                return Err(Error::NonIntegrable(format!(
                    "log(x + {s}) is undefined on part of the effective support"
                )))
            }
            _ => {}
        }
        for edge in [self.lower, self.upper] {
            let on_boundary = edge == self.support.lo || edge == self.support.hi;
            if !on_boundary {
                let weight = h.eval(edge).abs() * self.pdf(edge) * (1.0 + edge.abs());
                if weight > 1e-8 {
                    return Err(Error::NonIntegrable(format!(
                        "{} · density is {weight} at the truncation edge {edge}",
                        h.tag()
                    )));
                }
            }
        }
        Ok(self.expect_fn(|x| h.eval(x), &h.kinks()))
    }

    pub fn mean(&self) -> f64 {
        self.expect_fn(|x| x, &[])
    }

    /// Smallest `x` with `F(x) ≥ q`, by bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level must be in (0, 1), got {q}")));
        }
        let (mut lo, mut hi) = (self.lower, self.upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = self.cdf(mid);
            if (f - q).abs() < 1e-13 {
                return Ok(mid);
            }
            if f < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `count` equispaced points spanning the effective support.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        let count = count.max(2);
        (0..count)
            .map(|i| self.lower + (self.upper - self.lower) * i as f64 / (count - 1) as f64)
            .collect()
    }

    /// Tabulate `x,pdf,cdf` with a header recording the coefficient and normalisation.
    pub fn write_csv<W: Write>(&self, out: &mut W, xs: &[f64], extra: &str) -> std::io::Result<()> {
        writeln!(
            out,
            "# variant={},{}{},tol={},log_kappa={}{}",
            self.v.variant(),
            self.v.params(),
            self.v.header_extra(),
            fmt_f64(self.tol),
            fmt_f64(self.log_kappa()),
            extra
        )?;
        writeln!(out, "x,pdf,cdf")?;
        for &x in xs {
            writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(self.pdf(x)), fmt_f64(self.cdf(x)))?;
        }
        Ok(())
    }
}
