//! Littlewood–Paley pieces of `L^{iα}(Id - Φ(θ r_I √L))^M` and the mass of
//! their kernels away from a dilated interval.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{kernel_column, kernel_column_spectral, MollifierTable, Multiplier};
use crate::error::{domain, usage, Result};
use crate::grid::SampledFunction;
use crate::measure::Interval;
use crate::transform::TransformPlan;

fn step_weight(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Smooth, `1` on `[1/2, 2]`, supported in `[1/4, 4]`; built in `log₂` coordinates.
pub fn eta(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let v = x.log2().abs() - 1.0;
    if v <= 0.0 {
        1.0
    } else if v >= 1.0 {
        0.0
    } else {
        let a = step_weight(1.0 - v);
        a / (a + step_weight(v))
    }
}

/// `ψ(x) = η(x) / Σ_k η(2^{-k} x)`, so that `Σ_ℓ ψ(2^{-ℓ} x) = 1` on `(0, ∞)`.
pub fn psi(x: f64) -> f64 {
    let top = eta(x);
    if top == 0.0 {
        return 0.0;
    }
    let u = x.log2();
    let lo = (u - 2.0).floor() as i32;
    let hi = (u + 2.0).ceil() as i32;
    let total: f64 = (lo..=hi).map(|k| eta(x * 2f64.powi(-k))).sum();
    top / total
}

/// Parameters `α, M, s₀` and the derived `θ = 1/(4M√(1+|α|))`, `σ = √(1+|α|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimateConfig {
    pub alpha: f64,
    pub m: u32,
    pub s0: u32,
    pub theta: f64,
    pub sigma: f64,
}

impl TailEstimateConfig {
    /// Defaults for homogeneous dimension `n`: `s₀` is the smallest even
    /// integer above `n/2 + 1` and `M` the smallest integer with `2M > s₀ - n/2 + 2`.
    pub fn new(alpha: f64, n: f64) -> Self {
        let s0 = Self::default_s0(n);
        let m = Self::default_m(n, s0);
        Self::derived(alpha, m, s0)
    }

    pub fn default_s0(n: f64) -> u32 {
        let mut s0 = 2;
        while f64::from(s0) <= 0.5 * n + 1.0 {
            s0 += 2;
        }
        s0
    }

    pub fn default_m(n: f64, s0: u32) -> u32 {
        let mut m = 1;
        while f64::from(2 * m) <= f64::from(s0) - 0.5 * n + 2.0 {
            m += 1;
        }
        m
    }

    /// Explicit `M` and `s₀`, validated against `2M > s₀ - n/2` and `s₀ ∈ 2ℕ`, `s₀ > n/2`.
    pub fn with(alpha: f64, n: f64, m: u32, s0: u32) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(usage(format!("α must be finite, got {alpha}")));
        }
        if m == 0 {
            return Err(usage("M must be a positive integer"));
        }
        if !s0.is_multiple_of(2) || f64::from(s0) <= 0.5 * n {
            return Err(usage(format!("s₀ must be an even integer above n/2 = {}, got {s0}", 0.5 * n)));
        }
        if f64::from(2 * m) <= f64::from(s0) - 0.5 * n {
            return Err(usage(format!("2M = {} must exceed s₀ - n/2 = {}", 2 * m, f64::from(s0) - 0.5 * n)));
        }
        Ok(Self::derived(alpha, m, s0))
    }

    fn derived(alpha: f64, m: u32, s0: u32) -> Self {
        let sigma = (1.0 + alpha.abs()).sqrt();
        Self {
            alpha,
            m,
            s0,
            theta: 1.0 / (4.0 * f64::from(m) * sigma),
            sigma,
        }
    }

    /// Same `M`, `s₀` for another `α`.
    pub fn for_alpha(&self, alpha: f64) -> Self {
        Self::derived(alpha, self.m, self.s0)
    }

    /// `σ/θ = 4M(1+|α|)`, relative defect.
    pub fn identity_defect(&self) -> f64 {
        let want = 4.0 * f64::from(self.m) * (1.0 + self.alpha.abs());
        (self.sigma / self.theta - want).abs() / want
    }

    /// `2^{-(s₀ - n/2)}`.
    pub fn reference_rate(&self, n: f64) -> f64 {
        2f64.powf(-(f64::from(self.s0) - 0.5 * n))
    }
}

/// `λ ↦ ψ(2^{-ℓ}λ) λ^{2iα} (1 - Φ(θ r_I λ))^M`.
pub fn dyadic_symbol(ell: i32, cfg: &TailEstimateConfig, r_i: f64, table: Arc<MollifierTable>) -> Multiplier {
    let scale = 2f64.powi(-ell);
    let (alpha, theta, m) = (cfg.alpha, cfg.theta, cfg.m as i32);
    Multiplier::new(
        format!("ψ(2^{} λ) λ^(2i·{alpha}) (1-Φ({} λ))^{m}", -ell, theta * r_i),
        format!("supported in [2^{}, 2^{}]", ell - 2, ell + 2),
        Some(table.sup_one_minus().powi(m)),
        move |l| {
            let p = psi(scale * l);
            if p == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let damp = (1.0 - table.eval(theta * r_i * l)).powi(m);
            Complex64::from_polar(p * damp, 2.0 * alpha * l.ln())
        },
    )
}

/// Tail mass of one Littlewood–Paley piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementContribution {
    pub ell: i32,
    /// `2^ℓ θ r_I`
    pub scale: f64,
    pub mass: f64,
}

/// Result of [`kernel_tail_mass`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMass {
    pub config: TailEstimateConfig,
    pub interval: Interval,
    pub y: f64,
    /// `∫_{X \ 4σI} |Σ_ℓ K_ℓ(x, y)| dμ(x)`
    pub mass: f64,
    /// radius of `4I* = 4σI`
    pub excluded_radius: f64,
    pub ell_min: i32,
    pub ell_max: i32,
    pub contributions: Vec<ElementContribution>,
    /// geometric mean of consecutive ratios over the decaying window, if any
    pub decay_rate: Option<f64>,
    /// `ℓ` values whose ratios entered `decay_rate`
    pub decay_window: Vec<i32>,
    /// `2^{-(s₀ - n/2)}`
    pub reference_rate: f64,
}

fn outside_mass(col: &SampledFunction, center: f64, radius: f64) -> f64 {
    let grid = col.grid();
    col.values()
        .iter()
        .zip(grid.nodes())
        .zip(grid.weights())
        .filter(|((_, &x), _)| (x - center).abs() >= radius)
        .map(|((v, _), w)| v.norm() * w)
        .sum()
}

/// `∫_{X \ 4I*} |K_{L^{iα}(Id - Φ(θ r_I √L))^M}(x, y)| dμ(x)` with `I* = σI`,
/// summed over `ℓ` with `4/R ≤ 2^ℓ ≤ Λ/4`.
///
/// Per-piece masses are reported; the decay window is the set of pieces with
/// `2^ℓ θ r_I > 1` when there are at least two, and otherwise the pieces after
/// the largest one, in both cases above `1e-12` of the largest piece.
pub fn kernel_tail_mass(
    plan: &TransformPlan,
    cfg: &TailEstimateConfig,
    interval: &Interval,
    y: f64,
    table: Arc<MollifierTable>,
) -> Result<TailMass> {
    if !interval.contains(y) {
        return Err(usage(format!(
            "y = {y} is not in the interval ({}, {})",
            interval.lower(),
            interval.upper()
        )));
    }
    let radius = plan.physical().radius();
    let bandwidth = plan.spectral().radius();
    let excluded = 4.0 * cfg.sigma * interval.radius;
    if interval.center + excluded >= radius {
        return Err(domain(format!(
            "4σI reaches {} beyond the grid radius {radius}",
            interval.center + excluded
        )));
    }
    let sr = cfg.sigma * interval.radius;
    let cell = plan.physical().cell_width_at(interval.center);
    if cell > 0.5 * sr {
        return Err(domain(format!("σ r_I = {sr} is not resolved by cells of width {cell}")));
    }
    let ell_min = (4.0 / radius).log2().ceil() as i32;
    // the top band ends at Λ/4, which keeps |K| sampled at several nodes per oscillation
    let ell_max = (bandwidth / 16.0).log2().floor() as i32;
    if ell_max < ell_min {
        return Err(domain("no dyadic piece fits between 4/R and Λ/16"));
    }
    let mut total: Option<SampledFunction> = None;
    let mut contributions = Vec::new();
    for ell in ell_min..=ell_max {
        let m = dyadic_symbol(ell, cfg, interval.radius, Arc::clone(&table));
        let col = if plan.is_fast() {
            kernel_column_spectral(plan, &m, y)?
        } else {
            kernel_column(plan, &m, y)?
        };
        contributions.push(ElementContribution {
            ell,
            scale: 2f64.powi(ell) * cfg.theta * interval.radius,
            mass: outside_mass(&col, interval.center, excluded),
        });
        total = Some(match total {
            None => col,
            Some(acc) => acc.add(&col)?,
        });
    }
    let total = total.expect("non-empty ℓ range");
    let mass = outside_mass(&total, interval.center, excluded);
    let (decay_rate, decay_window) = decay(&contributions);
    Ok(TailMass {
        config: *cfg,
        interval: *interval,
        y,
        mass,
        excluded_radius: excluded,
        ell_min,
        ell_max,
        contributions,
        decay_rate,
        decay_window,
        reference_rate: cfg.reference_rate(plan.space().n()),
    })
}

fn decay(contributions: &[ElementContribution]) -> (Option<f64>, Vec<i32>) {
    let peak = contributions.iter().map(|c| c.mass).fold(0.0, f64::max);
    if peak == 0.0 {
        return (None, Vec::new());
    }
    let floor = 1e-12 * peak;
    let large: Vec<&ElementContribution> = contributions.iter().filter(|c| c.scale > 1.0 && c.mass > floor).collect();
    let window: Vec<&ElementContribution> = if large.len() >= 2 {
        large
    } else {
        let top = contributions
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.mass.total_cmp(&b.1.mass))
            .map(|(k, _)| k)
            .unwrap_or(0);
        contributions[top..].iter().take_while(|c| c.mass > floor).collect()
    };
    if window.len() < 2 {
        return (None, window.iter().map(|c| c.ell).collect());
    }
    let first = window[0];
    let last = window[window.len() - 1];
    let steps = f64::from(last.ell - first.ell);
    let rate = (last.mass / first.mass).powf(1.0 / steps);
    (Some(rate), window.iter().map(|c| c.ell).collect())
}
