//! Built-in test functions: `gaussian[:s]`, `bump:c,w`, `indicator:a,b`,
//! `spike:c[,w]`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::grid::{integrate, SampledFunction, Side, WeightedGrid};

/// Cells spanned by a spike of default width.
pub const SPIKE_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionSpec {
    /// `e^{-(x/s)²/2}`
    Gaussian { scale: f64 },
    /// `e · exp(-1/(1-t²))`, `t = (x-c)/w`; peak 1 at `c`
    Bump { center: f64, width: f64 },
    /// `1_{[a,b)}`
    Indicator { lower: f64, upper: f64 },
    /// a bump normalized to `‖·‖₁ = 1`; width defaults to 4 cells at `c`
    Spike { center: f64, width: Option<f64> },
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn numbers(kind: &str, args: &str, count: std::ops::RangeInclusive<usize>) -> Result<Vec<f64>> {
    let values: Vec<f64> = args
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{kind}: '{s}' is not a number")))
        })
        .collect::<Result<_>>()?;
    if !count.contains(&values.len()) || values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{kind}: expected {count:?} finite parameters, got '{args}'")));
    }
    Ok(values)
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let spec = match kind {
            "gaussian" => {
                let v = numbers(kind, args, 0..=1)?;
                FunctionSpec::Gaussian {
                    scale: v.first().copied().unwrap_or(1.0),
                }
            }
            "bump" => {
                let v = numbers(kind, args, 2..=2)?;
                FunctionSpec::Bump { center: v[0], width: v[1] }
            }
            "indicator" => {
                let v = numbers(kind, args, 2..=2)?;
                FunctionSpec::Indicator { lower: v[0], upper: v[1] }
            }
            "spike" => {
                let v = numbers(kind, args, 1..=2)?;
                FunctionSpec::Spike {
                    center: v[0],
                    width: v.get(1).copied(),
                }
            }
            other => return Err(usage(format!("unknown function '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FunctionSpec::Gaussian { scale } => write!(f, "gaussian:{scale}"),
            FunctionSpec::Bump { center, width } => write!(f, "bump:{center},{width}"),
            FunctionSpec::Indicator { lower, upper } => write!(f, "indicator:{lower},{upper}"),
            FunctionSpec::Spike { center, width: None } => write!(f, "spike:{center}"),
            FunctionSpec::Spike { center, width: Some(w) } => write!(f, "spike:{center},{w}"),
        }
    }
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FunctionSpec::Gaussian { scale } => scale > 0.0,
            FunctionSpec::Bump { center, width } => center >= 0.0 && width > 0.0,
            FunctionSpec::Indicator { lower, upper } => lower >= 0.0 && upper > lower,
            FunctionSpec::Spike { center, width } => center >= 0.0 && width.is_none_or(|w| w > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(usage(format!("invalid parameters in '{self}'")))
        }
    }

    /// Samples the function on `grid` (physical side).
    pub fn sample(&self, grid: &Arc<WeightedGrid>) -> Result<SampledFunction> {
        let f = match *self {
            FunctionSpec::Gaussian { scale } => grid.sample_real(Side::Physical, |x| (-0.5 * (x / scale).powi(2)).exp()),
            FunctionSpec::Bump { center, width } => grid.sample_real(Side::Physical, |x| bump((x - center) / width)),
            FunctionSpec::Indicator { lower, upper } => {
                grid.sample_real(Side::Physical, |x| if x >= lower && x < upper { 1.0 } else { 0.0 })
            }
            FunctionSpec::Spike { center, width } => {
                let w = width.unwrap_or_else(|| SPIKE_CELLS * grid.cell_width_at(center));
                let raw = grid.sample_real(Side::Physical, |x| bump((x - center) / w));
                let mass = integrate(&raw).re;
                if !(mass > 0.0) {
                    return Err(usage(format!("'{self}' has no mass on the grid")));
                }
                raw.scaled(Complex64::new(1.0 / mass, 0.0))
            }
        };
        if f.max_abs() == 0.0 {
            return Err(usage(format!("'{self}' vanishes on the grid")));
        }
        Ok(f)
    }
}

/// A sum of 1 to 4 randomly placed bumps, spikes and indicators with
/// amplitudes in `[-2, 2]`, all inside `(0, R/2)`. With `smooth` only bumps
/// of width at least `R/50` are drawn.
pub fn random_mixture<G: rand::Rng>(grid: &Arc<WeightedGrid>, rng: &mut G, smooth: bool) -> Result<SampledFunction> {
    let half = 0.5 * grid.radius();
    let terms = rng.gen_range(1..=4);
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for _ in 0..terms {
        let center = rng.gen_range(0.0..0.8 * half);
        let kind = if smooth { 0 } else { rng.gen_range(0..3) };
        let spec = match kind {
            0 => FunctionSpec::Bump {
                center,
                width: rng.gen_range(0.02..0.2) * half,
            },
            1 => FunctionSpec::Spike { center, width: None },
            _ => FunctionSpec::Indicator {
                lower: center,
                upper: center + rng.gen_range(0.01..0.2) * half,
            },
        };
        let amp = rng.gen_range(-2.0..2.0);
        for (v, t) in values.iter_mut().zip(spec.sample(grid)?.values()) {
            *v += t * amp;
        }
    }
    SampledFunction::new(Arc::clone(grid), values, Side::Physical)
}
