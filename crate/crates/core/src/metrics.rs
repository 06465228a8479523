//! Distances and error measures between a reference law `W` and an approximation `Y`,
//! plus log-log rate fitting across parameter sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::{Functional, StationaryDensity};
use crate::io::fmt_f64;
use crate::models::{LatticeDistribution, Law};
use crate::quadrature;
use crate::{Error, Result};

/// Which tail a relative tail error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `P(· ≥ z)`
    Right,
    /// `P(· ≤ −z)`
    Left,
}

impl Side {
    pub fn tag(self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }
}

/// Support points of `W` as a sorted slice.
fn support_points(w: &LatticeDistribution) -> &[f64] {
    match w.law() {
        Law::Atoms { points, .. } => points,
        Law::Samples { values } => values,
    }
}

/// Kolmogorov distance `sup_x |F_W(x) − F_Y(x)|`.
///
/// `F_Y` is continuous, so the supremum is attained at a support point of `W`, either
/// at the point itself or just to its left.
pub fn kolmogorov(w: &LatticeDistribution, y: &StationaryDensity) -> f64 {
    let mut worst = 0.0_f64;
    match w.law() {
        Law::Atoms { points, below, .. } => {
            let mut left = 0.0;
            for (x, f) in points.iter().zip(below) {
                let fy = y.cdf(*x);
                worst = worst.max((fy - f).abs()).max((fy - left).abs());
                left = *f;
            }
        }
        Law::Samples { values } => {
            let n = values.len() as f64;
            let mut i = 0;
            while i < values.len() {
                let x = values[i];
                let mut j = i;
                while j < values.len() && values[j] == x {
                    j += 1;
                }
                let fy = y.cdf(x);
                worst = worst.max((fy - i as f64 / n).abs()).max((fy - j as f64 / n).abs());
                i = j;
            }
        }
    }
    worst
}

/// `∫_a^b |F_Y(x) − c| dx` for a monotone `F_Y`, split at the crossing so that each
/// piece has a smooth integrand.
fn cell_distance(y: &StationaryDensity, a: f64, b: f64, c: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (lo, hi) = (y.lower(), y.upper());
    // Outside the effective support F_Y is exactly 0 or 1.
    let mut total = 0.0;
    let (a_in, b_in) = (a.max(lo), b.min(hi));
    if a < lo {
        total += (lo.min(b) - a) * c;
    }
    if b > hi {
        total += (b - hi.max(a)) * (1.0 - c);
    }
    if a_in >= b_in {
        return total;
    }
    let tol = y.tol();
    let piece = |l: f64, r: f64| {
        let (v, _) = quadrature::integrate(|x| (y.cdf(x) - c).abs(), l, r, tol * (r - l), tol);
        v
    };
    let (fa, fb) = (y.cdf(a_in) - c, y.cdf(b_in) - c);
    if fa < 0.0 && fb > 0.0 {
        let (mut l, mut r) = (a_in, b_in);
        for _ in 0..100 {
            let m = 0.5 * (l + r);
            if y.cdf(m) < c {
                l = m;
            } else {
                r = m;
            }
            if r - l <= 1e-15 * (1.0 + m.abs()) {
                break;
            }
        }
        let x0 = 0.5 * (l + r);
        total + piece(a_in, x0) + piece(x0, b_in)
    } else {
        total + piece(a_in, b_in)
    }
}

/// `∫ |F_Y(x) − c| dx` over a short cell with `F_Y` replaced by its chord.
fn chord_distance(fa: f64, fb: f64, width: f64, c: f64) -> f64 {
    let (ga, gb) = (fa - c, fb - c);
    if ga * gb >= 0.0 {
        0.5 * width * (ga.abs() + gb.abs())
    } else {
        0.5 * width * (ga * ga + gb * gb) / (gb - ga).abs()
    }
}

/// Wasserstein-1 distance `∫ |F_W(x) − F_Y(x)| dx`.
///
/// `F_W` is constant between support points. For lattice laws each cell is integrated
/// adaptively; for large samples the cells are short and `F_Y` is replaced by its chord
/// on each cell.
pub fn wasserstein1(w: &LatticeDistribution, y: &StationaryDensity) -> f64 {
    let points = support_points(w);
    let first = points[0];
    let last = points[points.len() - 1];
    let mut total = cell_distance(y, y.lower().min(first), first, 0.0);
    total += cell_distance(y, last, y.upper().max(last), 1.0);
    match w.law() {
        Law::Atoms { points, below, .. } => {
            for k in 0..points.len() - 1 {
                total += cell_distance(y, points[k], points[k + 1], below[k]);
            }
        }
        Law::Samples { values } => {
            let n = values.len() as f64;
            let mut f_prev = y.cdf(values[0]);
            for k in 0..values.len() - 1 {
                let (a, b) = (values[k], values[k + 1]);
                let f_next = y.cdf(b);
                total += chord_distance(f_prev, f_next, b - a, (k + 1) as f64 / n);
                f_prev = f_next;
            }
        }
    }
    total
}

/// Tail probability of `W` on the given side.
pub fn reference_tail(w: &LatticeDistribution, z: f64, side: Side) -> f64 {
    match side {
        Side::Right => w.tail_ge(z),
        Side::Left => w.tail_le(-z),
    }
}

/// Tail probability of `Y` on the given side.
pub fn approx_tail(y: &StationaryDensity, z: f64, side: Side) -> f64 {
    match side {
        Side::Right => y.ccdf(z),
        Side::Left => y.cdf(-z),
    }
}

/// Relative tail errors `|P(Y ≥ z)/P(W ≥ z) − 1|` (right) or with `≤ −z` (left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailErrors {
    pub side: Side,
    pub z: Vec<f64>,
    pub reference: Vec<f64>,
    pub approx: Vec<f64>,
    pub values: Vec<f64>,
    /// Monte Carlo standard errors (zero for exact references).
    pub stderr: Vec<f64>,
}

pub fn relative_tail_error(
    w: &LatticeDistribution,
    y: &StationaryDensity,
    z_list: &[f64],
    side: Side,
) -> Result<TailErrors> {
    let n = w.len() as f64;
    let mut out = TailErrors {
        side,
        z: Vec::with_capacity(z_list.len()),
        reference: Vec::new(),
        approx: Vec::new(),
        values: Vec::new(),
        stderr: Vec::new(),
    };
    for &z in z_list {
        let pw = reference_tail(w, z, side);
        if pw <= 0.0 {
            return Err(Error::ZeroDenominator(z));
        }
        let py = approx_tail(y, z, side);
        let ratio = py / pw;
        // Delta method on the empirical proportion.
        let se = if w.is_sample() { ratio * ((1.0 - pw) / (n * pw)).sqrt() } else { 0.0 };
        out.z.push(z);
        out.reference.push(pw);
        out.approx.push(py);
        out.values.push((ratio - 1.0).abs());
        out.stderr.push(se);
    }
    Ok(out)
}

/// Default z-grid: support points of `W` whose tail mass lies in `[1e-8, 0.5]`,
/// thinned to at most `max_points`, sorted increasingly in `z`.
pub fn default_z_grid(w: &LatticeDistribution, side: Side, max_points: usize) -> Vec<f64> {
    let mut zs: Vec<f64> = Vec::new();
    let candidates = support_points(w);
    let mut last = f64::NAN;
    for &x in candidates {
        if x == last {
            continue;
        }
        last = x;
        let z = match side {
            Side::Right => x,
            Side::Left => -x,
        };
        let p = reference_tail(w, z, side);
        if (1e-8..=0.5).contains(&p) {
            zs.push(z);
        }
    }
    zs.sort_by(f64::total_cmp);
    zs.dedup();
    if zs.len() > max_points && max_points >= 2 {
        let m = zs.len();
        zs = (0..max_points).map(|i| zs[i * (m - 1) / (max_points - 1)]).collect();
        zs.dedup();
    }
    zs
}

/// `|E h(W) − E h(Y)|` with the relative version when `|E h(W)| > 1e-8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationError {
    pub reference: f64,
    pub approx: f64,
    pub abs: f64,
    pub rel: Option<f64>,
    pub stderr: f64,
}

impl ExpectationError {
    /// Signed difference `E h(Y) − E h(W)`.
    pub fn signed(&self) -> f64 {
        self.approx - self.reference
    }
}

pub fn expectation_error(w: &LatticeDistribution, y: &StationaryDensity, h: Functional) -> Result<ExpectationError> {
    let reference = w.expect(|x| h.eval(x));
    if !reference.is_finite() {
        return Err(Error::NonIntegrable(format!("{} under the reference law", h.tag())));
    }
    let approx = y.moment(h)?;
    let abs = (approx - reference).abs();
    Ok(ExpectationError {
        reference,
        approx,
        abs,
        rel: (reference.abs() > 1e-8).then(|| abs / reference.abs()),
        stderr: w.expect_stderr(|x| h.eval(x)),
    })
}

/// Least-squares line through `(log scale, log error)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_fit(sweep: &[(f64, f64)]) -> Result<RateFit> {
    if sweep.len() < 4 {
        return Err(Error::InvalidParameter(format!("rate fit needs at least 4 points, got {}", sweep.len())));
    }
    for &(s, e) in sweep {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("sweep scale must be positive, got {s}")));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositiveError(e));
        }
    }
    let n = sweep.len() as f64;
    let xs: Vec<f64> = sweep.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = sweep.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs at least two distinct scales".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept: my - slope * mx, r2 })
}

/// One metric evaluation, with optional per-z detail or rate-fit results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub model: String,
    pub params: String,
    pub variant: String,
    pub metric: String,
    pub param1: f64,
    pub param2: f64,
    pub value: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_z: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<(f64, f64)>,
}

impl ErrorReport {
    pub fn new(model: &str, params: &str, variant: &str, metric: &str, value: f64, stderr: f64) -> Result<Self> {
        if !value.is_finite() || !stderr.is_finite() {
            return Err(Error::InvalidParameter(format!("{metric} for {variant} is not finite ({value})")));
        }
        Ok(Self {
            model: model.into(),
            params: params.into(),
            variant: variant.into(),
            metric: metric.into(),
            param1: f64::NAN,
            param2: f64::NAN,
            value,
            stderr,
            z_grid: Vec::new(),
            per_z: Vec::new(),
            fit: None,
            sweep: Vec::new(),
        })
    }

    pub fn at(mut self, param1: f64, param2: f64) -> Self {
        self.param1 = param1;
        self.param2 = param2;
        self
    }

    /// Attach a per-z curve; the reported value becomes its maximum.
    pub fn with_tail(mut self, tail: &TailErrors) -> Result<Self> {
        if tail.z.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidParameter("z-grid must be sorted".into()));
        }
        if tail.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tail errors must be finite".into()));
        }
        self.z_grid = tail.z.clone();
        self.per_z = tail.values.clone();
        Ok(self)
    }

    pub fn with_fit(mut self, fit: RateFit, sweep: Vec<(f64, f64)>) -> Self {
        self.fit = Some(fit);
        self.sweep = sweep;
        self
    }

    pub const CSV_HEADER: &'static str = "model,variant,metric,param1,param2,value,stderr";

    /// One CSV row; tail reports add one `<metric>@z` row per grid point with the
    /// point in `param2`.
    pub fn csv_rows(&self) -> Vec<String> {
        let row = |metric: &str, p2: f64, value: f64| {
            format!(
                "{},{},{},{},{},{},{}",
                self.model,
                self.variant,
                metric,
                fmt_f64(self.param1),
                fmt_f64(p2),
                fmt_f64(value),
                fmt_f64(self.stderr)
            )
        };
        let mut rows = vec![row(&self.metric, self.param2, self.value)];
        let at_z = format!("{}@z", self.metric);
        for (z, v) in self.z_grid.iter().zip(&self.per_z) {
            rows.push(row(&at_z, *z, *v));
        }
        rows
    }
}

/// Write reports as CSV after the given `#` header lines.
pub fn write_reports_csv<W: Write>(out: &mut W, header: &str, reports: &[ErrorReport]) -> std::io::Result<()> {
    for line in header.lines() {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", ErrorReport::CSV_HEADER)?;
    for r in reports {
        for row in r.csv_rows() {
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}

/// Write reports as pretty JSON.
pub fn write_reports_json<W: Write>(out: &mut W, reports: &[ErrorReport]) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, reports).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientFn, Variant};
    use crate::models::{Interval, ReferenceMeta};

    fn meta() -> ReferenceMeta {
        ReferenceMeta { model: "t".into(), params: String::new(), seed: None }
    }

    fn normal() -> StationaryDensity {
        let v = CoefficientFn::custom(Variant::V0, |_| 1.0, 0.0, vec![]);
        StationaryDensity::build(|x| -x, &v, Interval::real_line(), 1e-11).unwrap()
    }

    #[test]
    fn point_mass_against_normal() {
        let w = LatticeDistribution::from_atoms(vec![0.0], vec![1.0], 1.0, meta()).unwrap();
        let y = normal();
        assert!((kolmogorov(&w, &y) - 0.5).abs() < 1e-12);
        // E|Z| for a standard normal.
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((wasserstein1(&w, &y) - expected).abs() < 1e-9);
    }

    #[test]
    fn translated_point_mass() {
        let y = normal();
        let w = LatticeDistribution::from_atoms(vec![1.5], vec![1.0], 1.0, meta()).unwrap();
        // E|Z − 1.5| = 2φ(1.5) + 1.5(2Φ(1.5) − 1)
        let phi = (-1.125f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let expected = 2.0 * phi + 1.5 * (2.0 * y.cdf(1.5) - 1.0);
        assert!((wasserstein1(&w, &y) - expected).abs() < 1e-9);
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let sweep: Vec<(f64, f64)> = [25.0, 100.0, 400.0, 1600.0].iter().map(|&r: &f64| (r, 3.0 * r.powf(-0.5))).collect();
        let fit = rate_fit(&sweep).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(rate_fit(&sweep[..3]).is_err());
        let mut bad = sweep.clone();
        bad[1].1 = 0.0;
        assert_eq!(rate_fit(&bad).unwrap_err(), Error::NonPositiveError(0.0));
    }

    #[test]
    fn tail_error_rejects_empty_reference_tail() {
        let w = LatticeDistribution::from_atoms(vec![-1.0, 1.0], vec![0.5, 0.5], 2.0, meta()).unwrap();
        let y = normal();
        let t = relative_tail_error(&w, &y, &[0.5], Side::Right).unwrap();
        assert!((t.values[0] - (y.ccdf(0.5) / 0.5 - 1.0).abs()).abs() < 1e-15);
        assert_eq!(relative_tail_error(&w, &y, &[3.0], Side::Right).unwrap_err(), Error::ZeroDenominator(3.0));
        assert!(relative_tail_error(&w, &y, &[0.5], Side::Left).is_ok());
    }

    #[test]
    fn report_rows_and_json() {
        let tail = TailErrors {
            side: Side::Right,
            z: vec![0.0, 1.0],
            reference: vec![0.5, 0.1],
            approx: vec![0.5, 0.11],
            values: vec![0.0, 0.1],
            stderr: vec![0.0, 0.0],
        };
        let r = ErrorReport::new("erlangc", "n=10", "v1", "tail", 0.1, 0.0).unwrap().at(10.0, 0.9).with_tail(&tail).unwrap();
        let rows = r.csv_rows();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].starts_with("erlangc,v1,tail@z,"));
        let mut buf = Vec::new();
        write_reports_json(&mut buf, &[r.clone()]).unwrap();
        let back: Vec<ErrorReport> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back[0].per_z, r.per_z);
        assert!(ErrorReport::new("m", "", "v0", "x", f64::NAN, 0.0).is_err());
    }
}
