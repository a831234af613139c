//! `tv2d`: total variation image denoising on the total discrete
//! derivative, plus the simulation and verification harnesses.
//!
//! Exit codes: 0 success, 1 numerical failure (nonconvergence or a
//! failing verification suite), 2 usage/config errors.

mod pgm;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pgm::{read_matrix, write_matrix, MatrixFormat, MatrixMeta};
use serde::Serialize;
use std::path::{Path, PathBuf};
use tv2d::experiments::{run_rate_simulation, SimConfig};
use tv2d::image::{anova_decompose, tv, tv1, tv2};
use tv2d::solvers::{denoise_with_options, InteractionOptions, TuningConfig};
use tv2d::suites::{run_suite, SUITES};
use tv2d::theory::{
    bound_report, build_tessellation, fast_lambda, main_effect_lambda, slow_rate_config,
    thm4_lambda, universal_lambda, ActiveSet,
};

const SIDECAR_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "tv2d",
    version,
    about = "Total variation image denoising with piecewise rectangular structure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a grayscale PGM (P2/P5) or CSV matrix.
    Denoise(DenoiseArgs),
    /// Run the mean-squared-error rate simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Print the certified bound report for a regular-grid active set.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LambdaRuleArg {
    Universal,
    Thm4,
    Fast,
    Slow,
    PaperSim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    P2,
    P5,
    Csv,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input image (PGM P2/P5 with maxval <= 65535, or CSV matrix).
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Output image path.
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// JSON sidecar path (default: output path + ".json").
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Interaction penalty; mutually exclusive with --lambda-rule.
    #[arg(long, conflicts_with = "lambda_rule")]
    lambda: Option<f64>,
    /// Named schedule for the interaction penalty.
    #[arg(long, value_enum)]
    lambda_rule: Option<LambdaRuleArg>,
    /// Row-effect penalty (default: the 1D universal choice).
    #[arg(long)]
    lambda1: Option<f64>,
    /// Column-effect penalty (default: the 1D universal choice).
    #[arg(long)]
    lambda2: Option<f64>,
    /// Noise standard deviation on the `[0,1]` pixel scale.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Active-set size for the thm4/fast rules.
    #[arg(long)]
    s: Option<usize>,
    /// Interaction-solver KKT tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Sweep cap for the interaction solver.
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Output format (default: same as input).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON simulation config.
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Directory for rate.csv and summary.json.
    #[arg(long, short = 'd')]
    out_dir: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name; see --list.
    #[arg(long, required_unless_present = "list")]
    suite: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override Monte-Carlo repetitions / sampling trials.
    #[arg(long)]
    reps: Option<usize>,
    /// List available suites.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n1: usize,
    #[arg(long)]
    n2: usize,
    /// Regular jump grid "AxB", e.g. 2x2.
    #[arg(long, default_value = "2x2")]
    grid: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Confidence x (default log(2n)).
    #[arg(long)]
    x: Option<f64>,
    /// Confidence t (default log(2n)).
    #[arg(long)]
    t: Option<f64>,
}

/// Errors that are the user's to fix (exit 2), as opposed to numerical
/// failures (exit 1).
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(err: impl Into<anyhow::Error>) -> Result<T> {
    Err(anyhow::Error::new(UsageError(err.into())))
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Denoise(args) => cmd_denoise(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Bounds(args) => cmd_bounds(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.chain().any(|c| c.is::<UsageError>()) {
                2
            } else {
                1
            };
            std::process::exit(code);
        }
    }
}

#[derive(Serialize)]
struct Sidecar {
    schema_version: u32,
    input: String,
    output: String,
    lambda: f64,
    lambda1: f64,
    lambda2: f64,
    sigma: f64,
    tol: f64,
    converged: bool,
    sweeps: usize,
    objective: f64,
    kkt_residual: f64,
    tv: f64,
    tv1: f64,
    tv2: f64,
    anova_norms: AnovaNorms,
}

#[derive(Serialize)]
struct AnovaNorms {
    global: f64,
    row_effects: f64,
    col_effects: f64,
    interactions: f64,
}

fn resolve_lambda(args: &DenoiseArgs, n1: usize, n2: usize) -> Result<f64> {
    let n = n1 * n2;
    if let Some(v) = args.lambda {
        if !(v.is_finite() && v > 0.0) {
            return usage(anyhow!("--lambda must be > 0, got {v}"));
        }
        return Ok(v);
    }
    let rule = args.lambda_rule.unwrap_or(LambdaRuleArg::Universal);
    let t = (2.0 * n as f64).ln();
    match rule {
        LambdaRuleArg::Universal => Ok(universal_lambda(args.sigma, n, t)),
        LambdaRuleArg::PaperSim => Ok(((2.0 * n as f64).ln() / (2.0 * n as f64)).sqrt()),
        LambdaRuleArg::Thm4 => {
            let s = match args.s {
                Some(s) if s > 0 => s,
                _ => return usage(anyhow!("--lambda-rule thm4 needs --s <jumps>")),
            };
            Ok(thm4_lambda(s, args.sigma, n))
        }
        LambdaRuleArg::Fast => {
            let s = match args.s {
                Some(s) if s > 0 => s,
                _ => return usage(anyhow!("--lambda-rule fast needs --s <jumps>")),
            };
            let side = (s as f64).sqrt().round() as usize;
            if side * side != s {
                return usage(anyhow!(
                    "--lambda-rule fast assumes a square jump grid; {s} is not a perfect square"
                ));
            }
            let active = ActiveSet::regular_grid(side, side, n1, n2)
                .and_then(|a| build_tessellation(&a, n1, n2));
            match active {
                Ok(tess) => Ok(fast_lambda(&tess, args.sigma, t)),
                Err(e) => usage(e),
            }
        }
        LambdaRuleArg::Slow => match slow_rate_config(args.sigma, n, None) {
            Ok(cfg) => Ok(cfg.lambda),
            Err(e) => usage(e),
        },
    }
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<i32> {
    let (y, meta) = match read_matrix(&args.input) {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let (n1, n2) = y.dims();
    if n1 < 2 || n2 < 2 {
        return usage(anyhow!("image must be at least 2x2, got {n1}x{n2}"));
    }
    if !(args.sigma.is_finite() && args.sigma > 0.0) {
        return usage(anyhow!("--sigma must be > 0"));
    }

    let lambda = resolve_lambda(args, n1, n2)?;
    let lambda1 = args
        .lambda1
        .unwrap_or_else(|| main_effect_lambda(n1, n2, args.sigma));
    let lambda2 = args
        .lambda2
        .unwrap_or_else(|| main_effect_lambda(n2, n1, args.sigma));
    let cfg = TuningConfig::new(lambda, lambda1, lambda2, args.sigma)
        .with_default_confidence(n1 * n2);
    if let Err(e) = cfg.validate() {
        return usage(e);
    }
    let opts = InteractionOptions {
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        trace_objective: false,
    };
    let result = denoise_with_options(&y, &cfg, &opts).context("denoise failed")?;
    let estimate = result.estimate_image();

    let out_meta = match args.format {
        None => meta,
        Some(FormatArg::Csv) => MatrixMeta {
            format: MatrixFormat::Csv,
            maxval: 1,
        },
        Some(FormatArg::P2) => MatrixMeta {
            format: MatrixFormat::PgmAscii,
            maxval: if meta.format == MatrixFormat::Csv { 255 } else { meta.maxval },
        },
        Some(FormatArg::P5) => MatrixMeta {
            format: MatrixFormat::PgmBinary,
            maxval: if meta.format == MatrixFormat::Csv { 255 } else { meta.maxval },
        },
    };
    write_matrix(&args.output, &estimate, out_meta)?;

    let parts = anova_decompose(&estimate);
    let (g, r, c, i) = parts.component_norms_sq();
    let sidecar = Sidecar {
        schema_version: SIDECAR_SCHEMA_VERSION,
        input: args.input.display().to_string(),
        output: args.output.display().to_string(),
        lambda,
        lambda1,
        lambda2,
        sigma: args.sigma,
        tol: args.tol,
        converged: result.converged,
        sweeps: result.iterations,
        objective: result.objective,
        kkt_residual: result.kkt_residual,
        tv: tv(&estimate)?,
        tv1: tv1(&estimate),
        tv2: tv2(&estimate),
        anova_norms: AnovaNorms {
            global: g.sqrt(),
            row_effects: r.sqrt(),
            col_effects: c.sqrt(),
            interactions: i.sqrt(),
        },
    };
    let sidecar_path = args
        .sidecar
        .clone()
        .unwrap_or_else(|| sidecar_default_path(&args.output));
    std::fs::write(&sidecar_path, serde_json::to_vec_pretty(&sidecar)?)
        .with_context(|| format!("writing sidecar {}", sidecar_path.display()))?;

    if !result.converged {
        eprintln!(
            "warning: interaction solver not converged (kkt residual {:.3e} after {} sweeps)",
            result.kkt_residual, result.iterations
        );
        return Ok(1);
    }
    println!(
        "denoised {} -> {} (objective {:.6e}, kkt {:.3e})",
        args.input.display(),
        args.output.display(),
        sidecar.objective,
        sidecar.kkt_residual
    );
    Ok(0)
}

fn sidecar_default_path(output: &Path) -> PathBuf {
    let mut os = output.as_os_str().to_owned();
    os.push(".json");
    PathBuf::from(os)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return usage(
                anyhow::Error::new(e).context(format!("reading {}", args.config.display())),
            )
        }
    };
    let mut cfg: SimConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            // serde_json reports the offending line/column and names the
            // missing or unexpected field.
            return usage(anyhow!(
                "config {}: {e}",
                args.config.display()
            ));
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Err(e) = cfg.validate() {
        return usage(e);
    }
    if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
        return usage(
            anyhow::Error::new(e).context(format!("creating {}", args.out_dir.display())),
        );
    }
    let result = run_rate_simulation(&cfg)?;

    let csv_path = args.out_dir.join("rate.csv");
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    std::fs::write(&csv_path, csv)?;

    let json_path = args.out_dir.join("summary.json");
    let mut json = Vec::new();
    result.write_summary_json(&mut json)?;
    std::fs::write(&json_path, json)?;

    println!(
        "slope {:.4} over sizes {:?} ({} rows -> {})",
        result.slope,
        result.slope_window,
        result.rows.len(),
        csv_path.display()
    );
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    if args.list {
        for s in SUITES {
            println!("{s}");
        }
        return Ok(0);
    }
    let name = args.suite.as_deref().expect("clap enforces presence");
    if !SUITES.contains(&name) {
        return usage(anyhow!(
            "unknown suite '{name}'; available: {}",
            SUITES.join(", ")
        ));
    }
    let report = run_suite(name, args.seed, args.reps)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.passed {
        Ok(0)
    } else {
        let first = report.first_failure().expect("failed suite has a failure");
        eprintln!("suite {name} failed at '{}': {}", first.label, first.detail);
        Ok(1)
    }
}

fn cmd_bounds(args: &BoundsArgs) -> Result<i32> {
    let (rows, cols) = match args.grid.split_once('x') {
        Some((a, b)) => match (a.parse::<usize>(), b.parse::<usize>()) {
            (Ok(a), Ok(b)) if a > 0 && b > 0 => (a, b),
            _ => return usage(anyhow!("bad --grid '{}', expected e.g. 2x2", args.grid)),
        },
        None => return usage(anyhow!("bad --grid '{}', expected e.g. 2x2", args.grid)),
    };
    let active = match ActiveSet::regular_grid(rows, cols, args.n1, args.n2) {
        Ok(a) => a,
        Err(e) => return usage(e),
    };
    let tess = match build_tessellation(&active, args.n1, args.n2) {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let n = args.n1 * args.n2;
    let default_conf = (2.0 * n as f64).ln();
    let report = bound_report(
        &tess,
        args.sigma,
        args.x.unwrap_or(default_conf),
        args.t.unwrap_or(default_conf),
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}
