use std::path::Path;

use bessel_calculus::calculus::{Multiplier, TailEstimateConfig, MIN_XI_MAX};
use bessel_calculus::experiments::{check_alphas, TestFamily};
use bessel_calculus::functions::FunctionSpec;
use bessel_calculus::grid::{Scheme, GAUSS_ORDER};
use bessel_calculus::measure::{BesselSpace, Interval};
use bessel_calculus::transform::PlanConfig;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::symbol;

/// Largest node count of a plan that stores its kernel.
pub const DENSE_NODE_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Transform,
    Inverse,
    Multiplier,
    ImaginaryPower,
    Heat,
    Translate,
    Convolve,
    Cz,
    Mollifier,
    KernelTail,
    NormGrowth,
    WeakType,
    TailScaling,
    Selftest,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Transform => "transform",
            CommandKind::Inverse => "inverse",
            CommandKind::Multiplier => "multiplier",
            CommandKind::ImaginaryPower => "imaginary-power",
            CommandKind::Heat => "heat",
            CommandKind::Translate => "translate",
            CommandKind::Convolve => "convolve",
            CommandKind::Cz => "cz",
            CommandKind::Mollifier => "mollifier",
            CommandKind::KernelTail => "kernel-tail",
            CommandKind::NormGrowth => "norm-growth",
            CommandKind::WeakType => "weak-type",
            CommandKind::TailScaling => "tail-scaling",
            CommandKind::Selftest => "selftest",
        }
    }

    pub fn needs_plan(self) -> bool {
        !matches!(self, CommandKind::Mollifier | CommandKind::Selftest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Grid parameters after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub r: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "Lambda")]
    pub bandwidth: f64,
    #[serde(rename = "N")]
    pub nodes: usize,
    pub scheme: Scheme,
}

impl PlanSpec {
    pub fn plan_config(&self) -> Result<PlanConfig, Failure> {
        if self.scheme == Scheme::UniformNode {
            return Ok(PlanConfig::sine(self.radius, self.nodes));
        }
        let mut cfg = PlanConfig::with_nodes(self.r, self.radius, self.bandwidth, self.nodes).map_err(|e| Failure::field("N", e))?;
        cfg.physical_scheme = self.scheme;
        cfg.spectral_scheme = self.scheme;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        BesselSpace::new(self.r).map_err(|e| Failure::field("r", e))?;
        positive("R", self.radius)?;
        positive("Lambda", self.bandwidth)?;
        if self.nodes == 0 {
            return Err(Failure::usage("N", "node count must be positive"));
        }
        if self.scheme == Scheme::UniformNode {
            if self.r != 2.0 {
                return Err(Failure::usage("scheme", format!("the sine scheme needs r = 2, got r = {}", self.r)));
            }
            let want = PlanConfig::sine(self.radius, self.nodes).bandwidth;
            if (self.bandwidth - want).abs() > 1e-12 * want {
                return Err(Failure::usage(
                    "Lambda",
                    format!("the sine scheme fixes Λ = π(N+1)/R = {want}, got {}", self.bandwidth),
                ));
            }
        } else {
            if !self.nodes.is_multiple_of(GAUSS_ORDER) {
                return Err(Failure::usage("N", format!("node count {} is not a multiple of {GAUSS_ORDER}", self.nodes)));
            }
            if self.nodes > DENSE_NODE_LIMIT {
                return Err(Failure::usage(
                    "N",
                    format!("{} nodes exceed the dense limit of {DENSE_NODE_LIMIT}; at r = 2 use --scheme sine", self.nodes),
                ));
            }
        }
        Ok(())
    }
}

/// The fully resolved configuration of one run. Reports embed it; `rerun`
/// reads it back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub plan: Option<PlanSpec>,
    pub input: Option<String>,
    pub kernel: Option<String>,
    pub symbol: Option<String>,
    pub t: Option<f64>,
    pub y: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub interval: Option<Interval>,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub s0: Option<u32>,
    pub xi_max: Option<f64>,
    pub family: Option<TestFamily>,
    pub allow_large: bool,
    pub seed: u64,
    pub format: Format,
    pub timing: bool,
}

fn positive(field: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(field, format!("must be positive and finite, got {v}")))
    }
}

fn require<T: Copy>(field: &str, v: Option<T>) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::usage(field, "required by this command"))
}

/// A built-in function or the path of an existing `node,re[,im]` CSV file.
pub fn check_function(field: &str, s: &str) -> Result<(), Failure> {
    if Path::new(s).is_file() {
        return Ok(());
    }
    s.parse::<FunctionSpec>()
        .map(|_| ())
        .map_err(|e| Failure::field(field, e).with_hint("expected a built-in function or an existing CSV file"))
}

impl RunConfig {
    /// Checks every field the command reads; nothing is computed.
    pub fn validate(&self) -> Result<(), Failure> {
        use CommandKind::*;
        let cmd = self.command;
        match (&self.plan, cmd.needs_plan()) {
            (Some(plan), true) => plan.validate()?,
            (None, true) => return Err(Failure::usage("plan", "required by this command")),
            (Some(_), false) => return Err(Failure::usage("plan", "not used by this command")),
            (None, false) => {}
        }
        let n = self.plan.map(|p| p.r + 1.0);
        if matches!(cmd, Transform | Inverse | Multiplier | ImaginaryPower | Heat | Translate | Convolve | Cz | WeakType) {
            check_function("input", self.input.as_deref().ok_or_else(|| Failure::usage("input", "required by this command"))?)?;
        }
        match cmd {
            Multiplier => {
                let s = self.symbol.as_deref().ok_or_else(|| Failure::usage("symbol", "required by this command"))?;
                symbol::parse(s, self.xi_max.unwrap_or(symbol::DEFAULT_XI_MAX)).map_err(|e| Failure::field("symbol", e))?;
            }
            ImaginaryPower => finite("alpha", require("alpha", self.alpha)?)?,
            Heat => positive("t", require("t", self.t)?)?,
            Translate => positive("y", require("y", self.y)?)?,
            Convolve => check_function("kernel", self.kernel.as_deref().ok_or_else(|| Failure::usage("kernel", "required by this command"))?)?,
            Cz => {
                if self.lambdas.is_empty() {
                    return Err(Failure::usage("lambda", "at least one height is required"));
                }
            }
            NormGrowth => {
                let p = require("p", self.p)?;
                if !(p > 1.0) || !p.is_finite() {
                    return Err(Failure::usage("p", format!("must satisfy 1 < p < ∞, got {p}")));
                }
                let family = self.family.as_ref().ok_or_else(|| Failure::usage("family", "required by this command"))?;
                if family.members.is_empty() {
                    return Err(Failure::usage("family", "no members"));
                }
                for m in &family.members {
                    m.validate().map_err(|e| Failure::field("family", e))?;
                }
            }
            KernelTail => finite("alpha", require("alpha", self.alpha)?)?,
            _ => {}
        }
        if matches!(cmd, NormGrowth | WeakType | TailScaling) {
            check_alphas(&self.alphas, true).map_err(|e| Failure::field("alphas", e))?;
        } else if !self.alphas.is_empty() {
            return Err(Failure::usage("alphas", "not used by this command"));
        }
        if cmd != Cz && cmd != WeakType && !self.lambdas.is_empty() {
            return Err(Failure::usage("lambda", "not used by this command"));
        }
        for &l in &self.lambdas {
            positive("lambda", l)?;
        }
        if matches!(cmd, KernelTail | TailScaling) {
            let i = require("interval", self.interval)?;
            Interval::new(i.center, i.radius).map_err(|e| Failure::field("interval", e))?;
            let n = n.expect("plan checked above");
            let m = require("M", self.m)?;
            let s0 = require("s0", self.s0)?;
            TailEstimateConfig::with(self.alpha.unwrap_or(0.0), n, m, s0).map_err(|e| Failure::field("M", e))?;
        }
        if matches!(cmd, Mollifier | KernelTail | TailScaling) {
            let xi = require("xi_max", self.xi_max)?;
            if !(xi >= MIN_XI_MAX) || !xi.is_finite() {
                return Err(Failure::usage("xi_max", format!("must be at least {MIN_XI_MAX}, got {xi}")));
            }
        }
        Ok(())
    }

    /// The multiplier of the `multiplier` command.
    pub fn multiplier(&self) -> Result<Multiplier, Failure> {
        let s = self.symbol.as_deref().ok_or_else(|| Failure::usage("symbol", "required by this command"))?;
        symbol::parse(s, self.xi_max.unwrap_or(symbol::DEFAULT_XI_MAX)).map_err(|e| Failure::field("symbol", e))
    }
}

fn finite(field: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(field, format!("must be finite, got {v}")))
    }
}
