use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use hodiff::coefficients::Variant;
use hodiff::experiments::{exit_code, run, Command, ModelKind, RunConfig, SweepSpec};
use hodiff::Error;

#[derive(Parser, Debug)]
#[command(name = "hodiff", version, about = "Higher-order diffusion approximations for Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Tabulate approximating densities and diffusion coefficients.
    Density(Opts),
    /// Tabulate the exact or simulated stationary law of the chain.
    Reference(Opts),
    /// Compare approximations against the reference law.
    Compare(Opts),
    /// Run `compare` over a parameter grid and fit convergence rates.
    Sweep(Opts),
    /// Moderate-deviation curves and Stein factors for Erlang-C.
    Diag(Opts),
}

#[derive(Args, Debug)]
struct Opts {
    /// erlangc, hospital or ar1.
    #[arg(long, default_value = "erlangc")]
    model: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Offered load for square-root staffing (Erlang-C).
    #[arg(long = "R")]
    offered: Option<f64>,
    /// Bed count (hospital).
    #[arg(long = "N")]
    big_n: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Approximation variant (v0, v1, v2, v2u, v3, hybrid); repeatable.
    #[arg(long = "variant")]
    variants: Vec<String>,
    /// Truncation floor for v2 and v3.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo sample count for simulated references.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long)]
    zmin: Option<f64>,
    #[arg(long)]
    zmax: Option<f64>,
    #[arg(long, default_value_t = 50)]
    zcount: usize,
    /// Grid such as `N=4,16,64` or `n=5:100:20;rho=0.5:0.99:20`.
    #[arg(long)]
    sweep: Option<String>,
    /// Output directory; defaults to `out/<unix-seconds>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(command: Command, o: Opts) -> Result<RunConfig, Error> {
    let model = ModelKind::from_tag(&o.model)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown model `{}`", o.model)))?;
    let out = o.out.unwrap_or_else(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        PathBuf::from("out").join(secs.to_string())
    });
    let mut cfg = RunConfig::new(command, model, out);
    let p = &mut cfg.params;
    p.lambda = o.lambda;
    p.mu = o.mu;
    p.n = o.n;
    p.rho = o.rho;
    p.offered = o.offered;
    p.big_n = o.big_n;
    p.beta = o.beta;
    p.alpha = o.alpha;
    cfg.variants = o
        .variants
        .iter()
        .map(|t| Variant::from_tag(t).ok_or_else(|| Error::InvalidParameter(format!("unknown variant `{t}`"))))
        .collect::<Result<_, _>>()?;
    cfg.eta = o.eta;
    cfg.tol = o.tol;
    cfg.seed = o.seed;
    cfg.samples = o.samples;
    cfg.z.zmin = o.zmin;
    cfg.z.zmax = o.zmax;
    cfg.z.zcount = o.zcount;
    cfg.sweep = o.sweep.as_deref().map(SweepSpec::parse).transpose()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, opts) = match cli.command {
        Sub::Density(o) => (Command::Density, o),
        Sub::Reference(o) => (Command::Reference, o),
        Sub::Compare(o) => (Command::Compare, o),
        Sub::Sweep(o) => (Command::Sweep, o),
        Sub::Diag(o) => (Command::Diag, o),
    };
    match config(command, opts).and_then(|cfg| run(&cfg)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
