//! `besselcalc`: transforms, multipliers, decompositions and norm-growth
//! sweeps for the Bessel operator on `((0,∞), x^r dx)`.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 on numerical failure.
//! Errors are printed to stderr as a `schema: 1` JSON envelope.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod failure;
mod run;
mod symbol;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bessel_calculus::experiments::{TestFamily, DEFAULT_ALPHAS};
use bessel_calculus::functions::FunctionSpec;
use bessel_calculus::grid::Scheme;
use bessel_calculus::measure::Interval;
use bessel_calculus::transform::PlanConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::{CommandKind, Format, PlanSpec, RunConfig};
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "besselcalc", version, about = "Functional calculus of the Bessel operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// weight exponent r of x^r dx
    #[arg(long, global = true, allow_negative_numbers = true)]
    r: Option<f64>,
    /// physical truncation radius
    #[arg(long = "R", visible_alias = "radius", global = true, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// spectral truncation
    #[arg(long = "Lambda", visible_alias = "bandwidth", global = true, allow_negative_numbers = true)]
    bandwidth: Option<f64>,
    /// quadrature nodes per side
    #[arg(long = "N", visible_alias = "nodes", global = true)]
    nodes: Option<usize>,
    /// geometric-cell, uniform-cell, or sine (r = 2 only)
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// output file, written atomically; stdout when absent
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// omit run times so that reports compare bit for bit
    #[arg(long, global = true)]
    no_timing: bool,
    /// worker threads for parallel sweeps
    #[arg(long, env = "BESSELCALC_THREADS", global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct InputArg {
    /// gaussian[:s], bump:c,w, indicator:a,b, spike:c[,w], or a node,re[,im] CSV file
    #[arg(long, default_value = "gaussian")]
    input: String,
}

#[derive(Args, Debug)]
struct TailArgs {
    /// center of the interval I
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    center: f64,
    /// radius of the interval I
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    interval_radius: f64,
    #[arg(long = "M")]
    m: Option<u32>,
    #[arg(long)]
    s0: Option<u32>,
    #[arg(long, default_value_t = symbol::DEFAULT_XI_MAX)]
    xi_max: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyKind {
    Standard,
    Smooth,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// forward transform of a function
    Transform(InputArg),
    /// inverse transform of a function sampled on the spectral grid
    Inverse(InputArg),
    /// m(√L) f for a symbol such as heat:0.5*imaginary-power:2
    Multiplier {
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        symbol: String,
        /// table range for mollifier factors
        #[arg(long)]
        xi_max: Option<f64>,
    },
    /// L^{iα} f
    ImaginaryPower {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// e^{-tL} f
    Heat {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// generalized translation τ^y f
    Translate {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
    },
    /// generalized convolution f ∗ g
    Convolve {
        #[command(flatten)]
        input: InputArg,
        /// second factor g
        #[arg(long)]
        kernel: String,
        /// allow grids above the convolution node limit
        #[arg(long)]
        allow_large: bool,
    },
    /// Calderón–Zygmund decomposition at one or more heights
    Cz {
        #[command(flatten)]
        input: InputArg,
        #[arg(long = "lambda", visible_alias = "lambdas", value_delimiter = ',', allow_negative_numbers = true, required = true)]
        lambdas: Vec<f64>,
    },
    /// the finite-propagation mollifier Φ
    Mollifier {
        #[arg(long, default_value_t = symbol::DEFAULT_XI_MAX)]
        xi_max: f64,
    },
    /// kernel tail mass of L^{iα}(Id - Φ(θ r_I √L))^M outside 4σI
    KernelTail {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[command(flatten)]
        tail: TailArgs,
    },
    /// sup over a test family of ‖L^{iα} f‖_p / ‖f‖_p
    NormGrowth {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "standard")]
        family: FamilyKind,
        /// length scale of the family
        #[arg(long, default_value_t = 1.0)]
        family_scale: f64,
        /// extra family members
        #[arg(long)]
        member: Vec<String>,
    },
    /// sup over heights of λ μ(|L^{iα} f| > λ) for a unit-mass f
    WeakType {
        #[arg(long, default_value = "spike:0")]
        input: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        /// heights; derived from the grid when absent
        #[arg(long = "lambdas", visible_alias = "lambda", value_delimiter = ',', allow_negative_numbers = true)]
        lambdas: Vec<f64>,
    },
    /// kernel tail mass T(α) over an α sweep
    TailScaling {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
        #[command(flatten)]
        tail: TailArgs,
    },
    /// the built-in example suite with a pass/fail matrix
    Selftest,
    /// re-runs the config embedded in a report (or a bare config file)
    Rerun {
        /// report or config JSON
        config: PathBuf,
    },
}

/// Grid defaults: sine plans for the r = 2 sweeps, the standard dense plan otherwise.
fn resolve_plan(kind: CommandKind, g: &Global) -> Result<Option<PlanSpec>, Failure> {
    if !kind.needs_plan() {
        return Ok(None);
    }
    let r = g.r.unwrap_or(1.0);
    let untouched = g.radius.is_none() && g.bandwidth.is_none() && g.nodes.is_none() && g.scheme.is_none();
    let sweep_default = match kind {
        CommandKind::NormGrowth | CommandKind::WeakType => Some((16384.0, (1 << 18) - 1)),
        CommandKind::TailScaling | CommandKind::KernelTail => Some((4.0, (1 << 17) - 1)),
        _ => None,
    };
    let scheme = match (&g.scheme, sweep_default) {
        (Some(s), _) => s.parse::<Scheme>().map_err(|e| Failure::field("scheme", e))?,
        (None, Some(_)) if r == 2.0 && untouched => Scheme::UniformNode,
        (None, _) => Scheme::GeometricCell,
    };
    let standard = PlanConfig::standard(r);
    if scheme == Scheme::UniformNode {
        let (radius, nodes) = match sweep_default {
            Some(d) if untouched => d,
            _ => (g.radius.unwrap_or(standard.radius), g.nodes.unwrap_or(standard.physical_nodes())),
        };
        let bandwidth = g
            .bandwidth
            .unwrap_or_else(|| PlanConfig::sine(radius, nodes).bandwidth);
        return Ok(Some(PlanSpec { r, radius, bandwidth, nodes, scheme }));
    }
    Ok(Some(PlanSpec {
        r,
        radius: g.radius.unwrap_or(standard.radius),
        bandwidth: g.bandwidth.unwrap_or(standard.bandwidth),
        nodes: g.nodes.unwrap_or(standard.physical_nodes()),
        scheme,
    }))
}

fn tail_fields(cfg: &mut RunConfig, t: &TailArgs) {
    let n = cfg.plan.map_or(2.0, |p| p.r + 1.0);
    let s0 = t.s0.unwrap_or_else(|| bessel_calculus::calculus::TailEstimateConfig::default_s0(n));
    cfg.s0 = Some(s0);
    cfg.m = Some(t.m.unwrap_or_else(|| bessel_calculus::calculus::TailEstimateConfig::default_m(n, s0)));
    cfg.interval = Some(Interval {
        center: t.center,
        radius: t.interval_radius,
    });
    cfg.xi_max = Some(t.xi_max);
}

fn resolve(command: Command, g: &Global) -> Result<RunConfig, Failure> {
    let kind = match &command {
        Command::Transform(_) => CommandKind::Transform,
        Command::Inverse(_) => CommandKind::Inverse,
        Command::Multiplier { .. } => CommandKind::Multiplier,
        Command::ImaginaryPower { .. } => CommandKind::ImaginaryPower,
        Command::Heat { .. } => CommandKind::Heat,
        Command::Translate { .. } => CommandKind::Translate,
        Command::Convolve { .. } => CommandKind::Convolve,
        Command::Cz { .. } => CommandKind::Cz,
        Command::Mollifier { .. } => CommandKind::Mollifier,
        Command::KernelTail { .. } => CommandKind::KernelTail,
        Command::NormGrowth { .. } => CommandKind::NormGrowth,
        Command::WeakType { .. } => CommandKind::WeakType,
        Command::TailScaling { .. } => CommandKind::TailScaling,
        Command::Selftest => CommandKind::Selftest,
        Command::Rerun { .. } => unreachable!("rerun is resolved from its file"),
    };
    let mut cfg = RunConfig {
        command: kind,
        plan: resolve_plan(kind, g)?,
        input: None,
        kernel: None,
        symbol: None,
        t: None,
        y: None,
        alpha: None,
        p: None,
        alphas: Vec::new(),
        lambdas: Vec::new(),
        interval: None,
        m: None,
        s0: None,
        xi_max: None,
        family: None,
        allow_large: false,
        seed: g.seed.unwrap_or(1),
        format: g.format.unwrap_or(Format::Json),
        timing: !g.no_timing,
    };
    match command {
        Command::Transform(i) | Command::Inverse(i) => cfg.input = Some(i.input),
        Command::Multiplier { input, symbol, xi_max } => {
            if symbol::uses_mollifier(&symbol) {
                cfg.xi_max = Some(xi_max.unwrap_or(symbol::DEFAULT_XI_MAX));
            } else if xi_max.is_some() {
                return Err(Failure::usage("xi_max", "the symbol has no mollifier factor"));
            }
            cfg.input = Some(input.input);
            cfg.symbol = Some(symbol);
        }
        Command::ImaginaryPower { input, alpha } => {
            cfg.input = Some(input.input);
            cfg.alpha = Some(alpha);
        }
        Command::Heat { input, t } => {
            cfg.input = Some(input.input);
            cfg.t = Some(t);
        }
        Command::Translate { input, y } => {
            cfg.input = Some(input.input);
            cfg.y = Some(y);
        }
        Command::Convolve { input, kernel, allow_large } => {
            cfg.input = Some(input.input);
            cfg.kernel = Some(kernel);
            cfg.allow_large = allow_large;
        }
        Command::Cz { input, lambdas } => {
            cfg.input = Some(input.input);
            cfg.lambdas = lambdas;
        }
        Command::Mollifier { xi_max } => cfg.xi_max = Some(xi_max),
        Command::KernelTail { alpha, tail } => {
            cfg.alpha = Some(alpha);
            tail_fields(&mut cfg, &tail);
        }
        Command::NormGrowth { p, alphas, family, family_scale, member } => {
            cfg.p = Some(p);
            cfg.alphas = alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            if !(family_scale > 0.0) || !family_scale.is_finite() {
                return Err(Failure::usage("family_scale", format!("must be positive and finite, got {family_scale}")));
            }
            let mut fam = match family {
                FamilyKind::Standard => TestFamily::standard(family_scale),
                FamilyKind::Smooth => TestFamily::smooth(family_scale),
            };
            for m in &member {
                fam.members.push(m.parse::<FunctionSpec>().map_err(|e| Failure::field("member", e))?);
            }
            cfg.family = Some(fam);
        }
        Command::WeakType { input, alphas, lambdas } => {
            cfg.input = Some(input);
            cfg.alphas = alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            cfg.lambdas = lambdas;
        }
        Command::TailScaling { alphas, tail } => {
            cfg.alphas = alphas.unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0]);
            tail_fields(&mut cfg, &tail);
        }
        Command::Selftest | Command::Rerun { .. } => {}
    }
    Ok(cfg)
}

/// Reads a config from a report (its `config` field) or a bare config file.
fn load_config(path: &Path, g: &Global) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::from(bessel_calculus::Error::from(e)))?;
    if let Some(embedded) = value.get_mut("config") {
        value = embedded.take();
    }
    let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Failure::usage("config", e.to_string()))?;
    if let Some(format) = g.format {
        cfg.format = format;
    }
    if g.no_timing {
        cfg.timing = false;
    }
    Ok(cfg)
}

fn check_output(path: &Path) -> Result<(), Failure> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Failure::usage("output", format!("directory {} does not exist", parent.display())))
    }
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Failure::io(parent, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    let g = cli.global;
    if let Some(threads) = g.threads {
        if threads == 0 {
            return Err(Failure::usage("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage("threads", e.to_string()))?;
    }
    let cfg = match cli.command {
        Command::Rerun { config } => load_config(&config, &g)?,
        other => resolve(other, &g)?,
    };
    cfg.validate()?;
    if let Some(path) = &g.output {
        check_output(path)?;
    }
    let started = Instant::now();
    let out = run::execute(&cfg)?;
    let bytes = match cfg.format {
        Format::Csv => out.csv.into_bytes(),
        Format::Json => {
            let mut doc = json!({
                "schema": 1,
                "command": cfg.command.name(),
                "config": cfg,
                "result": out.result,
            });
            if cfg.timing {
                doc["runtime_ms"] = json!(started.elapsed().as_secs_f64() * 1e3);
            }
            let mut text = serde_json::to_string_pretty(&doc).map_err(bessel_calculus::Error::from)?;
            text.push('\n');
            text.into_bytes()
        }
    };
    match &g.output {
        Some(path) => write_atomic(path, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::io(Path::new("<stdout>"), e))?,
    }
    if out.passed {
        Ok(())
    } else {
        Err(run::checks_failed(cfg.command))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { failure::EXIT_USAGE as u8 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.envelope());
            ExitCode::from(f.exit as u8)
        }
    }
}
