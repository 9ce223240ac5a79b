//! α-sweeps of `L^{iα}`: `L^p` norm-growth ratios over a test family, weak-(1,1)
//! distribution sweeps on a near-spike and the kernel-tail scaling.
//!
//! A finite family only bounds operator norms from below, so the reports are
//! read one-sidedly: fitted growth must stay under the theory exponent.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{kernel_tail_mass, MollifierTable, Multiplier, TailEstimateConfig};
use crate::error::{domain, usage, Result};
use crate::functions::FunctionSpec;
use crate::grid::{fmt_f64, lp_norm, Exponent, SampledFunction, Scheme, Side, WeightedGrid};
use crate::measure::Interval;
use crate::transform::TransformPlan;

/// `1, 2, 4, …, 64`.
pub const DEFAULT_ALPHAS: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
/// Heights per weak-type sweep.
pub const DEFAULT_HEIGHTS: usize = 32;
/// A spectral node is resolved when `λ^{2iα}` turns by less than this between neighbours.
pub const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_2;
/// Largest spectral energy fraction allowed on unresolved nodes.
pub const UNRESOLVED_ENERGY: f64 = 1e-6;

/// Probe functions for the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub members: Vec<FunctionSpec>,
}

impl TestFamily {
    /// Gaussians, bumps, indicators and near-spikes on the length scale `s`.
    pub fn standard(s: f64) -> Self {
        let mut members = Self::smooth(s).members;
        members.extend([
            FunctionSpec::Indicator { lower: 0.0, upper: s },
            FunctionSpec::Indicator { lower: s, upper: 3.0 * s },
            FunctionSpec::Spike { center: 0.0, width: None },
            FunctionSpec::Spike { center: 4.0 * s, width: None },
        ]);
        Self { members }
    }

    /// Gaussians `s ∈ {0.5, 1, 2}·s` and bumps at `c ∈ {0, 2, 8}·s`, `w ∈ {1, 4}·s`.
    pub fn smooth(s: f64) -> Self {
        let mut members: Vec<FunctionSpec> = [0.5, 1.0, 2.0]
            .iter()
            .map(|k| FunctionSpec::Gaussian { scale: k * s })
            .collect();
        for c in [0.0, 2.0, 8.0] {
            for w in [1.0, 4.0] {
                members.push(FunctionSpec::Bump { center: c * s, width: w * s });
            }
        }
        Self { members }
    }

    pub fn sample(&self, grid: &Arc<WeightedGrid>) -> Result<Vec<(String, SampledFunction)>> {
        if self.members.is_empty() {
            return Err(usage("test family is empty"));
        }
        self.members
            .iter()
            .map(|m| {
                let f = m.sample(grid)?;
                if f.values().iter().any(|v| !v.is_finite()) {
                    return Err(domain(format!("'{m}' is not finite on the grid")));
                }
                Ok((m.to_string(), f))
            })
            .collect()
    }
}

/// Where a report's numbers were computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub physical_nodes: usize,
    pub spectral_nodes: usize,
    pub radius: f64,
    pub bandwidth: f64,
    pub physical_scheme: Scheme,
    pub spectral_scheme: Scheme,
    /// sine transform by FFT rather than a stored kernel
    pub fast: bool,
}

impl Provenance {
    pub fn of(plan: &TransformPlan) -> Self {
        Self {
            physical_nodes: plan.physical().len(),
            spectral_nodes: plan.spectral().len(),
            radius: plan.physical().radius(),
            bandwidth: plan.spectral().radius(),
            physical_scheme: plan.physical().scheme(),
            spectral_scheme: plan.spectral().scheme(),
            fast: plan.is_fast(),
        }
    }
}

/// Per-α result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub value: f64,
    /// `value / (1+α)^{theory}`
    pub normalized: f64,
    /// family member attaining the value
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<String>,
    pub resolution_adequate: bool,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

/// `n|1/p - 1/2| + ε` against the sharp exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCheck {
    pub epsilons: Vec<f64>,
    pub exponents: Vec<f64>,
    pub strictly_larger: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub r: f64,
    pub n: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub alphas: Vec<f64>,
    pub rows: Vec<AlphaRow>,
    pub theory_exponent: f64,
    /// slope of `ln value` against `ln(1+α)` over `α > 0`
    pub fitted_slope: Option<f64>,
    /// max/min of the normalized values over `α > 0`
    pub stability: Option<f64>,
    /// value at `α = 0` when swept
    pub baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonCheck>,
    pub resolution_adequate: bool,
    pub provenance: Provenance,
    pub runtime_ms: f64,
}

/// `n |1/p - 1/2|`.
pub fn theory_exponent(n: f64, p: f64) -> f64 {
    n * (1.0 / p - 0.5).abs()
}

impl ExperimentReport {
    fn assemble(
        kind: &str,
        plan: &TransformPlan,
        p: Option<f64>,
        theory: f64,
        mut rows: Vec<AlphaRow>,
        started: Instant,
    ) -> Result<Self> {
        for row in &mut rows {
            row.normalized = row.value / (1.0 + row.alpha.abs()).powf(theory);
        }
        let positive: Vec<&AlphaRow> = rows.iter().filter(|r| r.alpha > 0.0).collect();
        let fitted_slope = if positive.len() >= 3 && positive.iter().all(|r| r.value > 0.0) {
            Some(fit_exponent(&positive.iter().map(|r| (r.alpha, r.value)).collect::<Vec<_>>())?)
        } else {
            None
        };
        let stability = if positive.is_empty() || positive.iter().any(|r| !(r.normalized > 0.0)) {
            None
        } else {
            let max = positive.iter().map(|r| r.normalized).fold(0.0, f64::max);
            let min = positive.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
            Some(max / min)
        };
        let comparison = p.filter(|&p| p != 2.0).map(|_| {
            let epsilons = vec![1e-3, 1e-2, 0.1, 0.5];
            let exponents: Vec<f64> = epsilons.iter().map(|e| theory + e).collect();
            ComparisonCheck {
                strictly_larger: exponents.iter().all(|&e| e > theory),
                epsilons,
                exponents,
            }
        });
        Ok(Self {
            kind: kind.to_string(),
            r: plan.space().r(),
            n: plan.space().n(),
            p,
            alphas: rows.iter().map(|r| r.alpha).collect(),
            baseline: rows.iter().find(|r| r.alpha == 0.0).map(|r| r.value),
            resolution_adequate: rows.iter().all(|r| r.resolution_adequate),
            rows,
            theory_exponent: theory,
            fitted_slope,
            stability,
            comparison,
            provenance: Provenance::of(plan),
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Recomputes the theory exponent from `(r, p)`; `n/2` without `p`.
    pub fn theory_matches(&self) -> bool {
        let n = self.r + 1.0;
        let want = match self.p {
            Some(p) => theory_exponent(n, p),
            None => 0.5 * n,
        };
        want == self.theory_exponent
    }

    /// Fitted slope at most `theory + tolerance`.
    pub fn within_envelope(&self, tolerance: f64) -> bool {
        self.fitted_slope.is_none_or(|s| s <= self.theory_exponent + tolerance)
    }

    /// The report with every timing zeroed, for bit-for-bit comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.runtime_ms = 0.0;
        for row in &mut out.rows {
            row.runtime_ms = 0.0;
        }
        out
    }

    /// `alpha,value,normalized,theory_exponent,fitted_slope,runtime_ms`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["alpha", "value", "normalized", "theory_exponent", "fitted_slope", "runtime_ms"])?;
        let slope = self.fitted_slope.map(fmt_f64).unwrap_or_default();
        for row in &self.rows {
            w.write_record([
                fmt_f64(row.alpha),
                fmt_f64(row.value),
                fmt_f64(row.normalized),
                fmt_f64(self.theory_exponent),
                slope.clone(),
                fmt_f64(row.runtime_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `ln value` against `ln(1+α)`.
pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(usage(format!("fit needs at least 3 pairs, got {}", pairs.len())));
    }
    let mut alphas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    alphas.sort_by(f64::total_cmp);
    if alphas.iter().any(|a| !(*a > 0.0)) || alphas.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("fit needs distinct positive α"));
    }
    if pairs.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(domain("fit needs positive finite values"));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln_1p()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Non-empty, finite, strictly increasing, and non-negative (positive unless `allow_zero`).
pub fn check_alphas(alphas: &[f64], allow_zero: bool) -> Result<()> {
    if alphas.is_empty() {
        return Err(usage("α list is empty"));
    }
    let floor_ok = |a: f64| if allow_zero { a >= 0.0 } else { a > 0.0 };
    if alphas.iter().any(|&a| !a.is_finite() || !floor_ok(a)) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage(format!("α list must be increasing and {}", if allow_zero { "non-negative" } else { "positive" })));
    }
    Ok(())
}

/// Fraction of `Σ v_j |g_j|²` on spectral nodes where `λ^{2iα}` turns by more
/// than [`MAX_PHASE_STEP`] towards the next node.
fn unresolved_energy(plan: &TransformPlan, alpha: f64, hat: &SampledFunction) -> f64 {
    let nodes = plan.spectral().nodes();
    let weights = plan.spectral().weights();
    let mut bad = 0.0;
    let mut total = 0.0;
    for j in 0..nodes.len() {
        let e = weights[j] * hat.values()[j].norm_sqr();
        total += e;
        let next = if j + 1 < nodes.len() { nodes[j + 1] } else { plan.spectral().radius() };
        if 2.0 * alpha * (next / nodes[j]).ln() > MAX_PHASE_STEP {
            bad += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        bad / total
    }
}

fn apply_to_hat(plan: &TransformPlan, symbol: &SampledFunction, hat: &SampledFunction) -> Result<SampledFunction> {
    let product: Vec<Complex64> = symbol.values().iter().zip(hat.values()).map(|(m, h)| m * h).collect();
    plan.inverse(&SampledFunction::new(Arc::clone(plan.spectral()), product, Side::Spectral)?)
}

/// `∫_{x > 0.9R} |g|^p / ∫ |g|^p`.
fn edge_fraction(g: &SampledFunction, p: f64) -> f64 {
    let cut = 0.9 * g.grid().radius();
    let (mut edge, mut total) = (0.0, 0.0);
    for ((v, &w), &x) in g.values().iter().zip(g.grid().weights()).zip(g.grid().nodes()) {
        let e = w * v.norm().powf(p);
        total += e;
        if x > cut {
            edge += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// `R(α) = max_f ‖L^{iα} f‖_p / ‖f‖_p` over the family.
pub fn norm_growth(plan: &TransformPlan, p: f64, alphas: &[f64], family: &TestFamily) -> Result<ExperimentReport> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(usage(format!("norm growth needs 1 < p < ∞, got {p}; the endpoint is the weak-type sweep")));
    }
    check_alphas(alphas, true)?;
    let started = Instant::now();
    let members = family.sample(plan.physical())?;
    let prepared: Vec<(String, f64, SampledFunction)> = members
        .into_iter()
        .map(|(name, f)| {
            let norm = lp_norm(&f, Exponent::Finite(p));
            Ok((name, norm, plan.forward(&f)?))
        })
        .collect::<Result<_>>()?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let t = Instant::now();
            let symbol = Multiplier::imaginary_power(alpha).sample(plan)?;
            let mut best = (f64::NEG_INFINITY, String::new());
            let mut unresolved: f64 = 0.0;
            let mut edge: f64 = 0.0;
            for (name, norm, hat) in &prepared {
                let g = apply_to_hat(plan, &symbol, hat)?;
                let ratio = lp_norm(&g, Exponent::Finite(p)) / norm;
                if ratio > best.0 {
                    best = (ratio, name.clone());
                }
                unresolved = unresolved.max(unresolved_energy(plan, alpha, hat));
                edge = edge.max(edge_fraction(&g, p));
            }
            Ok(AlphaRow {
                alpha,
                value: best.0,
                normalized: 0.0,
                best: Some(best.1),
                resolution_adequate: unresolved <= UNRESOLVED_ENERGY,
                runtime_ms: t.elapsed().as_secs_f64() * 1e3,
                detail: Some(serde_json::json!({
                    "unresolved_energy": unresolved,
                    "edge_fraction": edge,
                })),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let theory = theory_exponent(plan.space().n(), p);
    ExperimentReport::assemble("norm-growth", plan, Some(p), theory, rows, started)
}

/// `count` heights log-spaced over `[10⁻³, 10] · scale`.
pub fn default_heights(scale: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = ((1e-3 * scale).ln(), (10.0 * scale).ln());
    (0..count)
        .map(|k| (lo + (hi - lo) * k as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Heights for a weak-type sweep of `f` on `plan`: [`default_heights`] with
/// scale `‖f‖₁ / μ((0, R/16))`, the level of the far field `|x|^{-n}` tail
/// inside the domain.
pub fn weak_type_heights(plan: &TransformPlan, f: &SampledFunction) -> Vec<f64> {
    let reach = plan.space().measure_between(0.0, plan.physical().radius() / 16.0);
    default_heights(lp_norm(f, Exponent::Finite(1.0)) / reach, DEFAULT_HEIGHTS)
}

/// `W(α) = max_λ λ μ({|L^{iα} f| > λ})` for a unit-mass `f`.
pub fn weak_type_sweep(
    plan: &TransformPlan,
    alphas: &[f64],
    heights: &[f64],
    f: &SampledFunction,
) -> Result<ExperimentReport> {
    if heights.is_empty() {
        return Err(usage("height list is empty"));
    }
    if heights.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(usage("heights must be positive and finite"));
    }
    check_alphas(alphas, true)?;
    let mass = lp_norm(f, Exponent::Finite(1.0));
    if (mass - 1.0).abs() > 1e-6 {
        return Err(usage(format!("weak-type input must have ‖f‖₁ = 1, got {mass}")));
    }
    let started = Instant::now();
    let hat = plan.forward(f)?;
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let t = Instant::now();
            let symbol = Multiplier::imaginary_power(alpha).sample(plan)?;
            let g = apply_to_hat(plan, &symbol, &hat)?;
            // λ ↦ λ μ(|g| > λ) via one sort of |g|
            let mut pairs: Vec<(f64, f64)> = g
                .values()
                .iter()
                .zip(g.grid().weights())
                .map(|(v, &w)| (v.norm(), w))
                .collect();
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut envelope = Vec::with_capacity(heights.len());
            let mut sorted: Vec<f64> = heights.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let (mut k, mut acc) = (0, 0.0);
            for &h in &sorted {
                while k < pairs.len() && pairs[k].0 > h {
                    acc += pairs[k].1;
                    k += 1;
                }
                envelope.push((h, h * acc));
            }
            let (arg, best) = envelope
                .iter()
                .copied()
                .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let interior = arg != sorted[0] && arg != sorted[sorted.len() - 1];
            Ok(AlphaRow {
                alpha,
                value: best,
                normalized: 0.0,
                best: None,
                resolution_adequate: unresolved_energy(plan, alpha, &hat) <= UNRESOLVED_ENERGY,
                runtime_ms: t.elapsed().as_secs_f64() * 1e3,
                detail: Some(serde_json::json!({
                    "argmax_height": arg,
                    "interior_maximum": interior,
                    "edge_fraction": edge_fraction(&g, 1.0),
                })),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let theory = 0.5 * plan.space().n();
    ExperimentReport::assemble("weak-type", plan, None, theory, rows, started)
}

/// Kernel-tail mass `T(α)` with `θ, σ` regenerated per α from `template`.
pub fn tail_scaling(
    plan: &TransformPlan,
    template: &TailEstimateConfig,
    interval: &Interval,
    alphas: &[f64],
    table: Arc<MollifierTable>,
) -> Result<ExperimentReport> {
    check_alphas(alphas, true)?;
    let started = Instant::now();
    let n = plan.space().n();
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            let t = Instant::now();
            let cfg = template.for_alpha(alpha);
            let tail = kernel_tail_mass(plan, &cfg, interval, interval.center, Arc::clone(&table))?;
            let consistent = tail.decay_rate.map(|rate| rate <= 2.0 * tail.reference_rate);
            Ok(AlphaRow {
                alpha,
                value: tail.mass,
                normalized: 0.0,
                best: None,
                resolution_adequate: true,
                runtime_ms: t.elapsed().as_secs_f64() * 1e3,
                detail: Some(serde_json::json!({
                    "m": cfg.m,
                    "s0": cfg.s0,
                    "theta": cfg.theta,
                    "sigma": cfg.sigma,
                    "decay_rate": tail.decay_rate,
                    "decay_window": tail.decay_window,
                    "reference_rate": tail.reference_rate,
                    "decay_consistent": consistent,
                    "contributions": tail.contributions,
                })),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentReport::assemble("tail-scaling", plan, None, 0.5 * n, rows, started)
}
