use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::{debug, info};

use super::config::{
    load_config, ConfigError, DriftSpec, RunConfig, DEFAULT_DOMAIN_MARGIN, DEFAULT_RESOLUTION,
};
use super::csv::{format_value, write_csv, write_records, write_rows, CsvError};
use crate::bounds::{crossing_diff_bound, density_upper_bound};
use crate::drift::{linearize, DriftFunction, PiecewiseLinearDrift};
use crate::invert::{survival_curve, FirstPassageQuery, InvertError};
use crate::lapsolve::laplace_fpt;
use crate::mc::{estimate_crossing, estimate_crossing_antithetic, McConfig};
use crate::Complex64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fpt",
    version,
    about = "First-passage times of dX = μ(X)dt + dW to an upper barrier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Linearization resolution (cells per unit) for expression drifts.
    #[arg(long)]
    n: Option<usize>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the Laplace transform E[exp(−λτ)] at one λ.
    Laplace {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Imaginary part of λ.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda_im: f64,
    },
    /// CSV of t, survival (and density with --density) on the grid.
    Survival {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        density: bool,
    },
    /// CSV of t, density on the grid.
    Density {
        #[command(flatten)]
        common: Common,
    },
    /// CSV of t, density upper bound on the grid.
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// Linearization error budget of an expression drift at resolution n.
    Approx {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo crossing probability over the grid horizon, using the
    /// drift as given (expressions are not linearized).
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        antithetic: bool,
    },
}

#[derive(Debug)]
enum RunError {
    Usage(String),
    Numerical(String),
    Output(String),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Numerical(_) | RunError::Output(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            RunError::Usage(m) | RunError::Numerical(m) | RunError::Output(m) => m,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Usage(e.to_string())
    }
}

impl From<CsvError> for RunError {
    fn from(e: CsvError) -> Self {
        RunError::Output(e.to_string())
    }
}

impl From<InvertError> for RunError {
    fn from(e: InvertError) -> Self {
        match e {
            InvertError::InvalidConfig(_) | InvertError::InvalidTime(_) => {
                RunError::Usage(e.to_string())
            }
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numerical(e.to_string())
}

/// The drift both as a general function and in solver form.
struct ResolvedDrift {
    function: DriftFunction,
    piecewise: PiecewiseLinearDrift,
    domain: (f64, f64),
    resolution: usize,
}

fn resolve_drift(cfg: &RunConfig, n_override: Option<usize>) -> Result<ResolvedDrift, RunError> {
    if n_override == Some(0) {
        return Err(RunError::Usage("--n must be at least 1".into()));
    }
    match &cfg.drift {
        DriftSpec::Piecewise(pl) => {
            let (lo, hi) = pl.extremes().map_err(numerical)?;
            let m1 = cfg.bound.unwrap_or(lo.abs().max(hi.abs()));
            let m2 = cfg.lipschitz.unwrap_or(pl.max_abs_slope());
            let eval = pl.clone();
            let bps = pl.breakpoints();
            let domain = (
                bps.first().copied().unwrap_or(cfg.x0).min(cfg.x0) - DEFAULT_DOMAIN_MARGIN,
                bps.last().copied().unwrap_or(cfg.barrier).max(cfg.barrier) + DEFAULT_DOMAIN_MARGIN,
            );
            Ok(ResolvedDrift {
                function: DriftFunction::from_fn(move |x| eval.eval(x), m1, m2),
                piecewise: pl.clone(),
                domain,
                resolution: n_override.unwrap_or(DEFAULT_RESOLUTION),
            })
        }
        DriftSpec::Expression {
            expression,
            domain,
            resolution,
        } => {
            let expr = expression.clone();
            let function = DriftFunction::estimated(
                Arc::new(move |x| expr.eval(x)),
                domain.0,
                domain.1,
                cfg.bound,
                cfg.lipschitz,
            )
            .map_err(|e| RunError::Usage(format!("drift expression: {e}")))?;
            let resolution = n_override.unwrap_or(*resolution);
            let piecewise = linearize(&function, domain.0, domain.1, resolution)
                .map_err(|e| RunError::Usage(e.to_string()))?;
            debug!(
                "linearized `{}` on [{}, {}] at n = {}: {} breakpoints, M1 = {}, M2 = {}",
                expression.source,
                domain.0,
                domain.1,
                resolution,
                piecewise.breakpoints().len(),
                function.m1(),
                function.m2()
            );
            Ok(ResolvedDrift {
                function,
                piecewise,
                domain: *domain,
                resolution,
            })
        }
    }
}

fn open_sink<'a>(
    out: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, RunError> {
    match out {
        None => Ok(Box::new(stdout)),
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| RunError::Output(format!("cannot create {}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn query(cfg: &RunConfig, drift: &ResolvedDrift) -> Result<FirstPassageQuery, RunError> {
    Ok(FirstPassageQuery::new(
        drift.piecewise.clone(),
        cfg.x0,
        cfg.barrier,
    )?)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), RunError> {
    match cli.command {
        Command::Laplace {
            common,
            lambda,
            lambda_im,
        } => {
            if !(lambda > 0.0) || !lambda.is_finite() || !lambda_im.is_finite() {
                return Err(RunError::Usage(format!(
                    "--lambda must be positive (Re λ > 0 is required), got {lambda}"
                )));
            }
            let cfg = load_config(&common.config)?;
            let drift = resolve_drift(&cfg, common.n)?;
            let l = Complex64::new(lambda, lambda_im);
            let v = laplace_fpt(&drift.piecewise, cfg.x0, cfg.barrier, l).map_err(numerical)?;
            info!("laplace transform at λ = {l}: {v}");
            let mut sink = open_sink(&common.out, stdout)?;
            let text = if lambda_im == 0.0 {
                format_value(v.re)
            } else {
                format!("{},{}", format_value(v.re), format_value(v.im))
            };
            writeln!(sink, "{text}").map_err(CsvError::from)?;
            sink.flush().map_err(CsvError::from)?;
        }
        Command::Survival { common, density } => {
            let cfg = load_config(&common.config)?;
            let drift = resolve_drift(&cfg, common.n)?;
            let times = cfg.grid.times();
            info!("inverting on {} grid times", times.len());
            let curve = survival_curve(&query(&cfg, &drift)?, &times, &cfg.inversion, density)?;
            write_csv(&curve, &mut open_sink(&common.out, stdout)?)?;
        }
        Command::Density { common } => {
            let cfg = load_config(&common.config)?;
            let drift = resolve_drift(&cfg, common.n)?;
            let q = query(&cfg, &drift)?;
            let rows = cfg
                .grid
                .times()
                .into_iter()
                .map(|t| q.density(t, &cfg.inversion).map(|f| vec![t, f]))
                .collect::<Result<Vec<_>, _>>()?;
            write_rows(
                &mut open_sink(&common.out, stdout)?,
                &["t", "density"],
                rows,
            )?;
        }
        Command::Bound { common } => {
            let cfg = load_config(&common.config)?;
            let drift = resolve_drift(&cfg, common.n)?;
            let rows = cfg
                .grid
                .times()
                .into_iter()
                .map(|t| {
                    density_upper_bound(&drift.piecewise, cfg.x0, cfg.barrier, t)
                        .map(|b| vec![t, b])
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(numerical)?;
            write_rows(
                &mut open_sink(&common.out, stdout)?,
                &["t", "density_bound"],
                rows,
            )?;
        }
        Command::Approx { common } => {
            let cfg = load_config(&common.config)?;
            let drift = resolve_drift(&cfg, common.n)?;
            let n = drift.resolution;
            let (lo, hi) = drift.domain;
            let samples = 10_000;
            let measured = (0..=samples)
                .map(|i| lo + (hi - lo) * i as f64 / samples as f64)
                .map(|x| (drift.function.eval(x) - drift.piecewise.eval(x)).abs())
                .fold(0.0f64, f64::max);
            let (m1, m2) = (drift.function.m1(), drift.function.m2());
            let horizon = cfg.grid.horizon();
            // a linear drift is reproduced exactly
            let crossing = if m2 == 0.0 {
                0.0
            } else {
                crossing_diff_bound(m1, m2, cfg.x0, cfg.barrier, horizon, 1.0 / n as f64)
                    .map_err(numerical)?
                    .bound_value
            };
            let mut row = vec![n.to_string()];
            row.extend([m2 / n as f64, measured, m1, m2, horizon, crossing].map(format_value));
            write_records(
                &mut open_sink(&common.out, stdout)?,
                &[
                    "n",
                    "sup_error_bound",
                    "measured_sup_error",
                    "m1",
                    "m2",
                    "horizon",
                    "crossing_bound",
                ],
                [row],
            )?;
        }
        Command::Mc { common, antithetic } => {
            let cfg = load_config(&common.config)?;
            let settings = cfg.mc.ok_or(ConfigError::MissingField {
                section: "mc",
                key: "n_paths",
            })?;
            let drift = resolve_drift(&cfg, common.n)?;
            let mc_cfg = McConfig {
                n_paths: settings.n_paths,
                dt: settings.dt,
                seed: settings.seed,
                bridge_correction: settings.bridge_correction,
                horizon: cfg.grid.horizon(),
            };
            let f = drift.function.evaluator();
            let eval = |x: f64| f(x);
            let est = if antithetic {
                estimate_crossing_antithetic(&eval, cfg.x0, cfg.barrier, &mc_cfg)
            } else {
                estimate_crossing(&eval, cfg.x0, cfg.barrier, &mc_cfg)
            }
            .map_err(|e| RunError::Usage(e.to_string()))?;
            write_records(
                &mut open_sink(&common.out, stdout)?,
                &["p_hat", "std_err", "n_paths"],
                [vec![
                    format_value(est.p_hat),
                    format_value(est.std_err),
                    est.n_paths.to_string(),
                ]],
            )?;
        }
    }
    Ok(())
}

/// Parse `argv` (including the program name), run the subcommand and return
/// the process exit code. Diagnostics go to `stderr`.
pub fn run_command<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "fpt: {}", e.message());
            e.exit_code()
        }
    }
}
