//! Reproducible experiment runs: model construction from a [`RunConfig`], the five
//! subcommands, and the CSV/JSON artifacts they write.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::coefficients::{self, CoefficientSpec, Variant};
use crate::density::{Functional, StationaryDensity};
use crate::io::fmt_f64;
use crate::metrics::{
    default_z_grid, expectation_error, kolmogorov, rate_fit, relative_tail_error, wasserstein1, write_reports_csv,
    write_reports_json, ErrorReport, Side, TailErrors,
};
use crate::models::{
    ar1_reference, erlangc_reference, hospital_reference, Ar1, ChainModel, ErlangC, Hospital, LatticeDistribution,
    Model, DEFAULT_TAIL_EPS,
};
use crate::stein::{moderate_deviation_curves, scan_solution, PoissonSolution};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Points in tabulated density and coefficient files.
const TABLE_POINTS: usize = 401;
/// Upper limit on default z-grid size.
const DEFAULT_Z_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Density,
    Reference,
    Compare,
    Sweep,
    Diag,
}

impl Command {
    pub fn tag(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Reference => "reference",
            Command::Compare => "compare",
            Command::Sweep => "sweep",
            Command::Diag => "diag",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ErlangC,
    Hospital,
    Ar1,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::ErlangC => "erlangc",
            ModelKind::Hospital => "hospital",
            ModelKind::Ar1 => "ar1",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [ModelKind::ErlangC, ModelKind::Hospital, ModelKind::Ar1].into_iter().find(|m| m.tag() == tag)
    }
}

/// Model parameters as given on the command line. Missing values take model defaults.
///
/// Erlang-C: `lambda`, `mu`, `n`, or `rho` (then `lambda = rho·n·mu`), or the offered
/// load `offered` with `beta` for square-root staffing. Hospital: `big_n`, `beta`.
/// AR(1): `alpha`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub n: Option<f64>,
    pub rho: Option<f64>,
    pub offered: Option<f64>,
    pub big_n: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
}

fn as_count(name: &str, x: f64) -> Result<u32> {
    let r = x.round();
    if !(r >= 1.0 && r <= u32::MAX as f64) {
        return Err(Error::InvalidParameter(format!("{name} must be a positive integer, got {x}")));
    }
    Ok(r as u32)
}

impl ModelParams {
    /// Set a named sweep axis.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "lambda" => &mut self.lambda,
            "mu" => &mut self.mu,
            "n" => &mut self.n,
            "rho" => &mut self.rho,
            "R" => &mut self.offered,
            "N" => &mut self.big_n,
            "beta" => &mut self.beta,
            "alpha" => &mut self.alpha,
            other => return Err(Error::InvalidParameter(format!("unknown sweep parameter `{other}`"))),
        };
        *slot = Some(value);
        Ok(())
    }

    pub fn build(&self, kind: ModelKind) -> Result<Model> {
        Ok(match kind {
            ModelKind::ErlangC => {
                if let Some(r) = self.offered {
                    ErlangC::halfin_whitt(r, self.beta.unwrap_or(1.0))?.into()
                } else {
                    let n = as_count("n", self.n.unwrap_or(10.0))?;
                    let mu = self.mu.unwrap_or(1.0);
                    let lambda = match (self.lambda, self.rho) {
                        (Some(l), _) => l,
                        (None, Some(rho)) => rho * n as f64 * mu,
                        (None, None) => 9.0,
                    };
                    ErlangC::new(lambda, mu, n)?.into()
                }
            }
            ModelKind::Hospital => {
                Hospital::new(as_count("N", self.big_n.unwrap_or(64.0))?, self.beta.unwrap_or(1.0))?.into()
            }
            ModelKind::Ar1 => Ar1::new(self.alpha.unwrap_or(0.16))?.into(),
        })
    }
}

/// One sweep axis with its values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Parsed `--sweep` value: `name=lo:hi:count` (equispaced) or `name=v1,v2,...`,
/// with up to two axes separated by `;`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("sweep `{text}`: {msg}"));
        let mut axes = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, range) = part.split_once('=').ok_or_else(|| bad(format!("`{part}` lacks `=`")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
            let values = if range.contains(':') {
                let f: Vec<&str> = range.split(':').collect();
                if f.len() != 3 {
                    return Err(bad("ranges have the form lo:hi:count".into()));
                }
                let (lo, hi) = (num(f[0])?, num(f[1])?);
                let count: usize = f[2].trim().parse().map_err(|_| bad(format!("`{}` is not a count", f[2])))?;
                match count {
                    0 => Vec::new(),
                    1 => vec![lo],
                    _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
                }
            } else {
                range.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<f64>>>()?
            };
            if values.is_empty() {
                return Err(bad(format!("axis `{name}` has no values")));
            }
            axes.push(Axis { name: name.trim().to_string(), values });
        }
        if axes.is_empty() {
            return Err(bad("no axes".into()));
        }
        if axes.len() > 2 {
            return Err(bad("at most two axes are supported".into()));
        }
        Ok(Self { axes })
    }

    /// Cartesian product, first axis outermost.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut cells = vec![Vec::new()];
        for axis in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(*v);
                        c
                    })
                })
                .collect();
        }
        cells
    }

    pub fn describe(&self) -> String {
        self.axes
            .iter()
            .map(|a| format!("{}={}", a.name, a.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// z-grid selection: explicit `[zmin, zmax]` with `zcount` points, or the default
/// grid from the reference tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZRule {
    pub zmin: Option<f64>,
    pub zmax: Option<f64>,
    pub zcount: usize,
}

impl Default for ZRule {
    fn default() -> Self {
        Self { zmin: None, zmax: None, zcount: DEFAULT_Z_POINTS }
    }
}

impl ZRule {
    fn grid(&self, w: &LatticeDistribution, side: Side) -> Result<Vec<f64>> {
        match (self.zmin, self.zmax) {
            (None, None) => Ok(default_z_grid(w, side, self.zcount.max(2))),
            (Some(lo), Some(hi)) if lo <= hi => Ok(match self.zcount {
                0 => Vec::new(),
                1 => vec![lo],
                c => (0..c).map(|i| lo + (hi - lo) * i as f64 / (c - 1) as f64).collect(),
            }),
            _ => Err(Error::InvalidParameter("--zmin and --zmax must be given together with zmin <= zmax".into())),
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    pub params: ModelParams,
    pub variants: Vec<Variant>,
    pub eta: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub z: ZRule,
    pub sweep: Option<SweepSpec>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command, model: ModelKind, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            model,
            params: ModelParams::default(),
            variants: Vec::new(),
            eta: None,
            tol: 1e-10,
            seed: 1,
            samples: 1_000_000,
            z: ZRule::default(),
            sweep: None,
            out: out.into(),
        }
    }

    /// Requested variants, or the model's natural set when none were given.
    pub fn variants(&self) -> Vec<Variant> {
        if !self.variants.is_empty() {
            return self.variants.clone();
        }
        match self.model {
            ModelKind::ErlangC => vec![Variant::V0, Variant::V1],
            ModelKind::Hospital => vec![Variant::V0, Variant::V1, Variant::V2Lower, Variant::V3],
            ModelKind::Ar1 => vec![Variant::V0, Variant::V1, Variant::V2Lower, Variant::V3, Variant::Hybrid],
        }
    }

    /// Header lines written at the top of every output file.
    pub fn provenance(&self, params: &str) -> String {
        let variants: Vec<&str> = self.variants().iter().map(|v| v.tag()).collect();
        let eta = self.eta.map_or_else(|| "default".to_string(), fmt_f64);
        let sweep = self.sweep.as_ref().map_or_else(|| "none".to_string(), SweepSpec::describe);
        format!(
            "hodiff {VERSION}\ncommand={} model={} params={} variants={} eta={} tol={} seed={} samples={} sweep={}",
            self.command.tag(),
            self.model.tag(),
            params,
            variants.join(","),
            eta,
            fmt_f64(self.tol),
            self.seed,
            self.samples,
            sweep
        )
    }

    fn spec(&self, variant: Variant) -> CoefficientSpec {
        let spec = CoefficientSpec::new(variant);
        match self.eta {
            Some(eta) => spec.with_eta(eta),
            None => spec,
        }
    }
}

/// Process exit code for an error: 1 for configuration problems, 2 for numerical
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::Unstable { .. } | Error::Unsupported(_) | Error::EtaNonPositive(_) => 1,
        _ => 2,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_header<W: Write>(out: &mut W, provenance: &str) -> Result<()> {
    for line in provenance.lines() {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Exact or simulated reference law for a model.
pub fn reference_for(model: &Model, samples: usize, seed: u64) -> Result<LatticeDistribution> {
    match model {
        Model::ErlangC(m) => erlangc_reference(m),
        Model::Hospital(m) => hospital_reference(m, DEFAULT_TAIL_EPS),
        Model::Ar1(m) => ar1_reference(m, samples, seed),
    }
}

/// Density of `Y` for one variant.
pub fn density_for(model: &Model, spec: &CoefficientSpec, tol: f64) -> Result<StationaryDensity> {
    let v = coefficients::build(model, spec, tol)?;
    StationaryDensity::for_model(model, &v, tol)
}

/// Test functions whose expectation errors are reported for a model.
pub fn functionals(model: &Model) -> Vec<(&'static str, Functional)> {
    match model {
        Model::Ar1(m) => vec![("mean", Functional::Identity), ("log", Functional::LogShift(1.0 / m.alpha().sqrt()))],
        _ => vec![("mean", Functional::Identity)],
    }
}

fn file_name(base: &str, variant: Variant, single: bool) -> String {
    if single { format!("{base}.csv") } else { format!("{base}_{}.csv", variant.tag()) }
}

/// Write `density.csv` (`x,pdf,cdf`) and `coefficient.csv` (`x,v`) per variant.
pub fn cmd_density(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = cfg.params.build(cfg.model)?;
    let head = cfg.provenance(&model.params());
    let variants = cfg.variants();
    let single = variants.len() == 1;
    let mut files = Vec::new();
    for variant in variants {
        let y = density_for(&model, &cfg.spec(variant), cfg.tol)?;
        let xs = y.grid(TABLE_POINTS);
        let name = file_name("density", variant, single);
        let mut out = create(&cfg.out, &name)?;
        write_header(&mut out, &head)?;
        y.write_csv(&mut out, &xs, "")?;
        out.flush()?;
        files.push(cfg.out.join(name));

        let name = file_name("coefficient", variant, single);
        let mut out = create(&cfg.out, &name)?;
        write_header(&mut out, &head)?;
        y.coefficient().write_csv(&mut out, &xs, "")?;
        out.flush()?;
        files.push(cfg.out.join(name));
    }
    Ok(files)
}

/// Write `reference.csv`: the lattice pmf or the sorted Monte Carlo sample.
pub fn cmd_reference(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = cfg.params.build(cfg.model)?;
    let w = reference_for(&model, cfg.samples, cfg.seed)?;
    let mut out = create(&cfg.out, "reference.csv")?;
    write_header(&mut out, &cfg.provenance(&model.params()))?;
    w.write_csv(&mut out, &format!(",mean={}", fmt_f64(w.mean())))?;
    out.flush()?;
    Ok(vec![cfg.out.join("reference.csv")])
}

/// Metrics of one variant against a reference.
pub fn compare_variant(
    model: &Model,
    w: &LatticeDistribution,
    y: &StationaryDensity,
    variant: Variant,
    z: &ZRule,
) -> Result<(Vec<ErrorReport>, Vec<TailErrors>)> {
    let (name, params, tag) = (model.name(), model.params(), variant.tag());
    let mut reports = Vec::new();
    for (label, h) in functionals(model) {
        let e = expectation_error(w, y, h)?;
        reports.push(ErrorReport::new(name, &params, tag, &format!("{label}_abs"), e.abs, e.stderr)?);
        if let Some(rel) = e.rel {
            reports.push(ErrorReport::new(name, &params, tag, &format!("{label}_rel"), rel, e.stderr / e.reference.abs())?);
        }
    }
    reports.push(ErrorReport::new(name, &params, tag, "kolmogorov", kolmogorov(w, y), 0.0)?);
    reports.push(ErrorReport::new(name, &params, tag, "wasserstein1", wasserstein1(w, y), 0.0)?);
    let mut tails = Vec::new();
    for side in [Side::Right, Side::Left] {
        let zs = z.grid(w, side)?;
        if zs.is_empty() {
            continue;
        }
        let t = relative_tail_error(w, y, &zs, side)?;
        let max = t.values.iter().copied().fold(0.0, f64::max);
        let metric = format!("tail_{}", side.tag());
        reports.push(ErrorReport::new(name, &params, tag, &metric, max, 0.0)?.with_tail(&t)?);
        tails.push(t);
    }
    Ok((reports, tails))
}

/// Write `metrics.csv`, `metrics.json` and `tails.csv` for each requested variant.
pub fn cmd_compare(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = cfg.params.build(cfg.model)?;
    let w = reference_for(&model, cfg.samples, cfg.seed)?;
    let head = cfg.provenance(&model.params());
    let mut reports = Vec::new();
    let mut tails = Vec::new();
    for variant in cfg.variants() {
        let y = density_for(&model, &cfg.spec(variant), cfg.tol)?;
        let (r, t) = compare_variant(&model, &w, &y, variant, &cfg.z)?;
        reports.extend(r);
        tails.extend(t.into_iter().map(|t| (variant, t)));
    }
    let mut out = create(&cfg.out, "metrics.csv")?;
    write_reports_csv(&mut out, &head, &reports)?;
    out.flush()?;
    let mut out = create(&cfg.out, "metrics.json")?;
    write_reports_json(&mut out, &reports)?;
    out.flush()?;
    let mut out = create(&cfg.out, "tails.csv")?;
    write_header(&mut out, &head)?;
    writeln!(out, "variant,side,z,reference,approx,rel_error,stderr")?;
    for (variant, t) in &tails {
        for i in 0..t.z.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                variant.tag(),
                t.side.tag(),
                fmt_f64(t.z[i]),
                fmt_f64(t.reference[i]),
                fmt_f64(t.approx[i]),
                fmt_f64(t.values[i]),
                fmt_f64(t.stderr[i])
            )?;
        }
    }
    out.flush()?;
    Ok(["metrics.csv", "metrics.json", "tails.csv"].iter().map(|n| cfg.out.join(n)).collect())
}

/// Expectation errors of every variant at one sweep cell.
fn sweep_cell(cfg: &RunConfig, axes: &[Axis], values: &[f64]) -> Result<Vec<ErrorReport>> {
    let mut params = cfg.params.clone();
    for (axis, v) in axes.iter().zip(values) {
        params.set(&axis.name, *v)?;
    }
    let model = params.build(cfg.model)?;
    let w = reference_for(&model, cfg.samples, cfg.seed)?;
    let p1 = values[0];
    let p2 = values.get(1).copied().unwrap_or(f64::NAN);
    let (name, echo) = (model.name(), model.params());
    let mut reports = Vec::new();
    for (label, h) in functionals(&model) {
        let e = w.expect(|x| h.eval(x));
        reports.push(ErrorReport::new(name, &echo, "reference", label, e, w.expect_stderr(|x| h.eval(x)))?.at(p1, p2));
    }
    for variant in cfg.variants() {
        let y = density_for(&model, &cfg.spec(variant), cfg.tol)?;
        for (label, h) in functionals(&model) {
            let e = expectation_error(&w, &y, h)?;
            reports.push(ErrorReport::new(name, &echo, variant.tag(), &format!("{label}_abs"), e.abs, e.stderr)?.at(p1, p2));
            if let Some(rel) = e.rel {
                let se = e.stderr / e.reference.abs();
                reports.push(ErrorReport::new(name, &echo, variant.tag(), &format!("{label}_rel"), rel, se)?.at(p1, p2));
            }
        }
    }
    Ok(reports)
}

/// Run the sweep grid in parallel and write `sweep.csv`, `sweep.json`, and for
/// one-dimensional sweeps of at least four points `rates.csv` with log-log slopes.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("sweep requires --sweep".into()))?;
    let cells = sweep.cells();
    let results: Vec<Result<Vec<ErrorReport>>> =
        cells.par_iter().map(|c| sweep_cell(cfg, &sweep.axes, c)).collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    let base = cfg.params.build(cfg.model).map(|m| m.params()).unwrap_or_default();
    let head = cfg.provenance(&base);
    let mut files = Vec::new();

    if sweep.axes.len() == 1 && cells.len() >= 4 {
        let mut fits = Vec::new();
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in reports.iter().filter(|r| r.metric.ends_with("_abs")) {
            let key = (r.variant.clone(), r.metric.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for (variant, metric) in keys {
            let pts: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.variant == variant && r.metric == metric)
                .map(|r| (r.param1, r.value))
                .collect();
            let fit = rate_fit(&pts)?;
            let model = cfg.model.tag();
            let rep = ErrorReport::new(model, &base, &variant, &format!("{metric}_slope"), fit.slope, 0.0)?;
            fits.push(rep.with_fit(fit, pts));
        }
        let mut out = create(&cfg.out, "rates.csv")?;
        write_header(&mut out, &head)?;
        writeln!(out, "variant,metric,slope,intercept,r2")?;
        for f in &fits {
            let fit = f.fit.expect("fit attached");
            writeln!(
                out,
                "{},{},{},{},{}",
                f.variant,
                f.metric.trim_end_matches("_slope"),
                fmt_f64(fit.slope),
                fmt_f64(fit.intercept),
                fmt_f64(fit.r2)
            )?;
        }
        out.flush()?;
        files.push(cfg.out.join("rates.csv"));
        reports.extend(fits);
    }

    let mut out = create(&cfg.out, "sweep.csv")?;
    write_reports_csv(&mut out, &head, &reports)?;
    out.flush()?;
    let mut out = create(&cfg.out, "sweep.json")?;
    write_reports_json(&mut out, &reports)?;
    out.flush()?;
    files.push(cfg.out.join("sweep.csv"));
    files.push(cfg.out.join("sweep.json"));
    Ok(files)
}

/// Moderate-deviation curves and Stein-factor scans for Erlang-C over an `R` sweep.
///
/// Writes `md_<variant>_<side>.csv`, `md_summary.csv` and `stein.csv`.
pub fn cmd_diag(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.model != ModelKind::ErlangC {
        return Err(Error::Unsupported("diag is only available for the erlangc model".into()));
    }
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("diag requires --sweep R=...".into()))?;
    let axis = match sweep.axes.as_slice() {
        [a] if a.name == "R" => a,
        _ => return Err(Error::InvalidParameter("diag sweeps exactly one axis named R".into())),
    };
    let beta = cfg.params.beta.unwrap_or(1.0);
    let head = cfg.provenance(&format!("beta={beta}"));
    let zcount = cfg.z.zcount.max(1);
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for variant in cfg.variants() {
        for side in [Side::Right, Side::Left] {
            let curves = moderate_deviation_curves(beta, &axis.values, variant, side, zcount, cfg.tol)?;
            let name = format!("md_{}_{}.csv", variant.tag(), side.tag());
            let mut out = create(&cfg.out, &name)?;
            curves.write_csv(&mut out, &head)?;
            out.flush()?;
            files.push(cfg.out.join(name));
            summary.push(curves);
        }
    }
    let mut out = create(&cfg.out, "md_summary.csv")?;
    write_header(&mut out, &head)?;
    writeln!(out, "variant,side,R,max_normalized,median,spread")?;
    for c in &summary {
        for (r, m) in &c.maxima {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.variant.tag(),
                c.side.tag(),
                fmt_f64(*r),
                fmt_f64(*m),
                fmt_f64(c.median()),
                fmt_f64(c.spread())
            )?;
        }
    }
    out.flush()?;
    files.push(cfg.out.join("md_summary.csv"));

    let z = cfg.z.zmin.unwrap_or(1.0);
    let mut out = create(&cfg.out, "stein.csv")?;
    write_header(&mut out, &head)?;
    writeln!(out, "variant,R,z,first,second")?;
    for variant in cfg.variants() {
        for &r in &axis.values {
            let model = ErlangC::halfin_whitt(r, beta)?;
            let sol = PoissonSolution::erlangc(&model, variant, z, cfg.tol)?;
            let grid = sol.density().grid(TABLE_POINTS);
            let s = scan_solution(&sol, model.mu(), &grid);
            writeln!(out, "{},{},{},{},{}", variant.tag(), fmt_f64(r), fmt_f64(z), fmt_f64(s.first), fmt_f64(s.second))?;
        }
    }
    out.flush()?;
    files.push(cfg.out.join("stein.csv"));
    Ok(files)
}

/// Dispatch on the configured subcommand.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if !(1e-12..=1e-6).contains(&cfg.tol) {
        return Err(Error::InvalidParameter(format!("--tol must lie in [1e-12, 1e-6], got {}", cfg.tol)));
    }
    match cfg.command {
        Command::Density => cmd_density(cfg),
        Command::Reference => cmd_reference(cfg),
        Command::Compare => cmd_compare(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Diag => cmd_diag(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parses_ranges_and_lists() {
        let s = SweepSpec::parse("n=5:100:20;rho=0.5:0.99:20").unwrap();
        assert_eq!(s.axes.len(), 2);
        assert_eq!(s.axes[0].values.len(), 20);
        assert_eq!(s.axes[0].values[19], 100.0);
        assert!((s.axes[1].values[19] - 0.99).abs() < 1e-15);
        assert_eq!(s.cells().len(), 400);
        let s = SweepSpec::parse("N=4,16,64,256").unwrap();
        assert_eq!(s.axes[0].values, vec![4.0, 16.0, 64.0, 256.0]);
        assert!(SweepSpec::parse("").is_err());
        assert!(SweepSpec::parse("R=").is_err());
        assert!(SweepSpec::parse("R=1:2").is_err());
        assert!(SweepSpec::parse("R=1:2:0").is_err());
    }

    #[test]
    fn params_resolve_per_model() {
        let mut p = ModelParams::default();
        p.set("n", 20.0).unwrap();
        p.set("rho", 0.5).unwrap();
        let Model::ErlangC(m) = p.build(ModelKind::ErlangC).unwrap() else { panic!() };
        assert_eq!(m.servers(), 20);
        assert!((m.lambda() - 10.0).abs() < 1e-12);
        let mut p = ModelParams::default();
        p.set("R", 100.0).unwrap();
        let Model::ErlangC(m) = p.build(ModelKind::ErlangC).unwrap() else { panic!() };
        assert_eq!(m.servers(), 110);
        assert!(p.set("gamma", 1.0).is_err());
    }

    #[test]
    fn exit_codes_split_usage_and_numeric_failures() {
        assert_eq!(exit_code(&Error::InvalidParameter(String::new())), 1);
        assert_eq!(exit_code(&Error::Unstable { rho: 1.2 }), 1);
        assert_eq!(exit_code(&Error::Divergent(String::new())), 2);
        assert_eq!(exit_code(&Error::ZeroDenominator(3.0)), 2);
    }
}
