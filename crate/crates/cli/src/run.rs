use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use bessel_calculus::calculus::{self, build_mollifier, kernel_tail_mass, TailEstimateConfig};
use bessel_calculus::czd::decompose;
use bessel_calculus::experiments::{self, ExperimentReport, Provenance};
use bessel_calculus::functions::FunctionSpec;
use bessel_calculus::grid::{build_grid, integrate, lp_norm, Exponent, SampledFunction, Side, WeightedGrid};
use bessel_calculus::measure::BesselSpace;
use bessel_calculus::selftest;
use bessel_calculus::transform::TransformPlan;
use bessel_calculus::translation::{convolve, translate};
use serde_json::{json, Value};

use crate::config::{CommandKind, PlanSpec, RunConfig};
use crate::failure::{Failure, EXIT_NUMERIC};

/// Result of one command, in both output formats.
pub struct Output {
    pub result: Value,
    pub csv: String,
    /// false when the command ran but its checks failed
    pub passed: bool,
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn function_json(f: &SampledFunction) -> Value {
    json!({
        "side": f.side(),
        "nodes": f.grid().nodes(),
        "re": f.values().iter().map(|v| v.re).collect::<Vec<_>>(),
        "im": f.values().iter().map(|v| v.im).collect::<Vec<_>>(),
    })
}

fn function_csv(f: &SampledFunction, variable: &str) -> String {
    let mut out = format!("{variable},re,im\n");
    for (x, v) in f.grid().nodes().iter().zip(f.values()) {
        let _ = writeln!(out, "{},{},{}", num(*x), num(v.re), num(v.im));
    }
    out
}

fn function_output(f: &SampledFunction, variable: &str, mut result: Value) -> Output {
    result["function"] = function_json(f);
    Output {
        result,
        csv: function_csv(f, variable),
        passed: true,
    }
}

/// A built-in function sampled on `grid`, or a CSV file read onto it.
fn load(source: &str, grid: &Arc<WeightedGrid>, side: Side) -> Result<SampledFunction, Failure> {
    let path = Path::new(source);
    if path.is_file() {
        let file = File::open(path).map_err(|e| Failure::io(path, e))?;
        return Ok(SampledFunction::read_csv(Arc::clone(grid), side, file)?);
    }
    let spec: FunctionSpec = source.parse()?;
    let f = spec.sample(grid)?;
    Ok(match side {
        Side::Physical => f,
        Side::Spectral => SampledFunction::new(Arc::clone(grid), f.into_values(), Side::Spectral)?,
    })
}

fn plan_of(cfg: &RunConfig) -> Result<(PlanSpec, TransformPlan), Failure> {
    let spec = cfg.plan.ok_or_else(|| Failure::usage("plan", "required by this command"))?;
    Ok((spec, spec.plan_config()?.build()?))
}

fn physical_grid(cfg: &RunConfig) -> Result<Arc<WeightedGrid>, Failure> {
    let spec = cfg.plan.ok_or_else(|| Failure::usage("plan", "required by this command"))?;
    let pc = spec.plan_config()?;
    Ok(Arc::new(build_grid(pc.radius, pc.cells, pc.r, pc.physical_scheme)?))
}

fn input(cfg: &RunConfig) -> &str {
    cfg.input.as_deref().unwrap_or_default()
}

fn report_output(report: ExperimentReport, timing: bool) -> Result<Output, Failure> {
    let report = if timing { report } else { report.without_timing() };
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    Ok(Output {
        result: serde_json::to_value(&report).map_err(bessel_calculus::Error::from)?,
        csv: String::from_utf8(csv).expect("csv is UTF-8"),
        passed: true,
    })
}

/// Executes a validated config.
pub fn execute(cfg: &RunConfig) -> Result<Output, Failure> {
    match cfg.command {
        CommandKind::Transform => {
            let (_, plan) = plan_of(cfg)?;
            let f = load(input(cfg), plan.physical(), Side::Physical)?;
            let hat = plan.forward(&f)?;
            let result = json!({
                "provenance": Provenance::of(&plan),
                "normalization": plan.normalization(),
                "plancherel_defect": plan.plancherel_defect(&f)?,
                "spectral_tail": plan.spectral_tail(&f)?,
            });
            Ok(function_output(&hat, "lambda", result))
        }
        CommandKind::Inverse => {
            let (_, plan) = plan_of(cfg)?;
            let g = load(input(cfg), plan.spectral(), Side::Spectral)?;
            let f = plan.inverse(&g)?;
            let result = json!({
                "provenance": Provenance::of(&plan),
                "inversion_constant": plan.inversion_constant(),
            });
            Ok(function_output(&f, "x", result))
        }
        CommandKind::Multiplier => {
            let (_, plan) = plan_of(cfg)?;
            let m = cfg.multiplier()?;
            let f = load(input(cfg), plan.physical(), Side::Physical)?;
            let out = calculus::apply_multiplier(&plan, &m, &f)?;
            let result = json!({
                "provenance": Provenance::of(&plan),
                "symbol": m.label(),
                "note": m.note(),
                "bound": m.bound(),
            });
            Ok(function_output(&out, "x", result))
        }
        CommandKind::ImaginaryPower => {
            let (_, plan) = plan_of(cfg)?;
            let alpha = cfg.alpha.unwrap_or_default();
            let f = load(input(cfg), plan.physical(), Side::Physical)?;
            let out = calculus::imaginary_power(&plan, alpha, &f)?;
            let l2 = |g: &SampledFunction| lp_norm(g, Exponent::Finite(2.0));
            let result = json!({
                "provenance": Provenance::of(&plan),
                "alpha": alpha,
                "l2_ratio": l2(&out) / l2(&f),
                "phase_per_cell": calculus::phase_per_cell(&plan, alpha),
                "oscillation_wavelength": calculus::oscillation_wavelength(&plan, alpha),
            });
            Ok(function_output(&out, "x", result))
        }
        CommandKind::Heat => {
            let (_, plan) = plan_of(cfg)?;
            let t = cfg.t.unwrap_or_default();
            let f = load(input(cfg), plan.physical(), Side::Physical)?;
            let out = calculus::heat(&plan, t, &f)?;
            let result = json!({
                "provenance": Provenance::of(&plan),
                "t": t,
                "mass_before": integrate(&f).re,
                "mass_after": integrate(&out).re,
            });
            Ok(function_output(&out, "x", result))
        }
        CommandKind::Translate => {
            let grid = physical_grid(cfg)?;
            let space = BesselSpace::new(grid.r())?;
            let f = load(input(cfg), &grid, Side::Physical)?;
            let y = cfg.y.unwrap_or_default();
            let shifted = translate(space, &f, y)?;
            let result = json!({
                "y": y,
                "clipped_mass": shifted.clipped_mass,
                "truncated": shifted.truncated(),
            });
            Ok(function_output(&shifted.function, "x", result))
        }
        CommandKind::Convolve => {
            let grid = physical_grid(cfg)?;
            let space = BesselSpace::new(grid.r())?;
            let f = load(input(cfg), &grid, Side::Physical)?;
            let g = load(cfg.kernel.as_deref().unwrap_or_default(), &grid, Side::Physical)?;
            let out = convolve(space, &f, &g, cfg.allow_large)?;
            Ok(function_output(&out, "x", json!({})))
        }
        CommandKind::Cz => {
            let grid = physical_grid(cfg)?;
            let f = load(input(cfg), &grid, Side::Physical)?;
            let mut csv = String::from("height,center,radius,l1_ratio\n");
            let mut runs = Vec::new();
            for &height in &cfg.lambdas {
                let d = decompose(&f, height)?;
                let pieces: Vec<Value> = d
                    .pieces
                    .iter()
                    .map(|p| {
                        let i = p.interval();
                        let _ = writeln!(csv, "{},{},{},{}", num(height), num(i.center), num(i.radius), num(p.l1_ratio));
                        json!({"center": i.center, "radius": i.radius, "l1_ratio": p.l1_ratio})
                    })
                    .collect();
                runs.push(json!({
                    "height": height,
                    "pieces": pieces,
                    "constants": d.constants,
                    "resolution_warning": d.resolution_warning,
                    "reassembly_defect": d.reassembly_defect(),
                }));
            }
            Ok(Output {
                result: json!({ "decompositions": runs }),
                csv,
                passed: true,
            })
        }
        CommandKind::Mollifier => {
            let xi_max = cfg.xi_max.unwrap_or_default();
            let table = build_mollifier(xi_max)?;
            let mut csv = String::from("xi,phi\n");
            let samples: Vec<Value> = (0..=(4.0 * xi_max).floor() as usize)
                .map(|k| {
                    let xi = k as f64 / 4.0;
                    let v = table.eval(xi);
                    let _ = writeln!(csv, "{},{}", num(xi), num(v));
                    json!([xi, v])
                })
                .collect();
            Ok(Output {
                result: json!({ "summary": table.summary(), "samples": samples }),
                csv,
                passed: true,
            })
        }
        CommandKind::KernelTail => {
            let (spec, plan) = plan_of(cfg)?;
            let interval = cfg.interval.ok_or_else(|| Failure::usage("interval", "required by this command"))?;
            let tail_cfg = TailEstimateConfig::with(
                cfg.alpha.unwrap_or_default(),
                spec.r + 1.0,
                cfg.m.unwrap_or_default(),
                cfg.s0.unwrap_or_default(),
            )?;
            let table = Arc::new(build_mollifier(cfg.xi_max.unwrap_or_default())?);
            let tail = kernel_tail_mass(&plan, &tail_cfg, &interval, interval.center, table)?;
            let mut csv = String::from("ell,scale,mass\n");
            for c in &tail.contributions {
                let _ = writeln!(csv, "{},{},{}", c.ell, num(c.scale), num(c.mass));
            }
            let mut result = serde_json::to_value(&tail).map_err(bessel_calculus::Error::from)?;
            result["provenance"] = json!(Provenance::of(&plan));
            Ok(Output {
                result,
                csv,
                passed: true,
            })
        }
        CommandKind::NormGrowth => {
            let (_, plan) = plan_of(cfg)?;
            let family = cfg.family.as_ref().ok_or_else(|| Failure::usage("family", "required by this command"))?;
            let report = experiments::norm_growth(&plan, cfg.p.unwrap_or_default(), &cfg.alphas, family)?;
            report_output(report, cfg.timing)
        }
        CommandKind::WeakType => {
            let (_, plan) = plan_of(cfg)?;
            let f = load(input(cfg), plan.physical(), Side::Physical)?;
            let heights = if cfg.lambdas.is_empty() {
                experiments::weak_type_heights(&plan, &f)
            } else {
                cfg.lambdas.clone()
            };
            let report = experiments::weak_type_sweep(&plan, &cfg.alphas, &heights, &f)?;
            let mut out = report_output(report, cfg.timing)?;
            out.result["heights"] = json!(heights);
            Ok(out)
        }
        CommandKind::TailScaling => {
            let (spec, plan) = plan_of(cfg)?;
            let interval = cfg.interval.ok_or_else(|| Failure::usage("interval", "required by this command"))?;
            let template = TailEstimateConfig::with(
                cfg.alphas[0],
                spec.r + 1.0,
                cfg.m.unwrap_or_default(),
                cfg.s0.unwrap_or_default(),
            )?;
            let table = Arc::new(build_mollifier(cfg.xi_max.unwrap_or_default())?);
            let report = experiments::tail_scaling(&plan, &template, &interval, &cfg.alphas, table)?;
            report_output(report, cfg.timing)
        }
        CommandKind::Selftest => {
            let report = selftest::run(cfg.seed);
            let mut csv = String::from("name,value,tolerance,passed\n");
            for e in &report.entries {
                let _ = writeln!(csv, "{},{},{},{}", e.name, num(e.value), num(e.tolerance), e.passed);
            }
            eprint!("{}", report.matrix());
            Ok(Output {
                passed: report.all_passed(),
                result: serde_json::to_value(&report).map_err(bessel_calculus::Error::from)?,
                csv,
            })
        }
    }
}

/// Failure for a command whose own checks did not pass.
pub fn checks_failed(cmd: CommandKind) -> Failure {
    Failure {
        code: "checks_failed",
        field: None,
        message: format!("{} reported failing checks", cmd.name()),
        exit: EXIT_NUMERIC,
    }
}
