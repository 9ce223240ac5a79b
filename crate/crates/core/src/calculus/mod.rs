//! Spectral functional calculus `m(√L) f = inverse(m · forward f)`.

mod mollifier;
mod tail;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::grid::{SampledFunction, Side};
use crate::measure::{ball_volume, Interval};
use crate::transform::TransformPlan;
use crate::translation::translate;

pub use mollifier::{build_mollifier, MollifierSummary, MollifierTable, MIN_XI_MAX};
pub use tail::{
    dyadic_symbol, eta, kernel_tail_mass, psi, ElementContribution, TailEstimateConfig, TailMass,
};

/// A symbol `λ ↦ m(λ)` on `(0, ∞)`.
pub type Symbol = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A spectral multiplier with a label for reports.
#[derive(Clone)]
pub struct Multiplier {
    symbol: Symbol,
    label: String,
    note: String,
    bound: Option<f64>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("label", &self.label)
            .field("note", &self.note)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Multiplier {
    pub fn new<F>(label: impl Into<String>, note: impl Into<String>, bound: Option<f64>, symbol: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            symbol: Arc::new(symbol),
            label: label.into(),
            note: note.into(),
            bound,
        }
    }

    pub fn identity() -> Self {
        Self::new("1", "constant", Some(1.0), |_| Complex64::new(1.0, 0.0))
    }

    /// `e^{-tλ²}`.
    pub fn heat(t: f64) -> Self {
        Self::new(format!("exp(-{t} λ²)"), "analytic", Some(1.0), move |l| {
            Complex64::new((-t * l * l).exp(), 0.0)
        })
    }

    /// `λ^{2iα}`, the symbol of `L^{iα}`.
    pub fn imaginary_power(alpha: f64) -> Self {
        Self::new(
            format!("λ^(2i·{alpha})"),
            "unimodular, oscillates without limit at 0",
            Some(1.0),
            move |l| Complex64::from_polar(1.0, 2.0 * alpha * l.ln()),
        )
    }

    /// `λ^k`.
    pub fn power(k: f64) -> Self {
        Self::new(format!("λ^{k}"), "unbounded", None, move |l| Complex64::new(l.powf(k), 0.0))
    }

    /// `Φ(tλ)`.
    pub fn mollifier(table: Arc<MollifierTable>, t: f64) -> Self {
        Self::new(format!("Φ({t} λ)"), "entire, even", Some(1.0), move |l| {
            Complex64::new(table.eval(t * l), 0.0)
        })
    }

    /// Pointwise product of two symbols.
    pub fn product(&self, other: &Multiplier) -> Self {
        let (a, b) = (Arc::clone(&self.symbol), Arc::clone(&other.symbol));
        Self {
            symbol: Arc::new(move |l| a(l) * b(l)),
            label: format!("({})·({})", self.label, other.label),
            note: format!("{}; {}", self.note, other.note),
            bound: self.bound.zip(other.bound).map(|(x, y)| x * y),
        }
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        (self.symbol)(lambda)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    /// The symbol on the plan's spectral nodes.
    pub fn sample(&self, plan: &TransformPlan) -> Result<SampledFunction> {
        let nodes = plan.spectral().nodes();
        let mut values = Vec::with_capacity(nodes.len());
        for &l in nodes {
            let v = self.eval(l);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Evaluation(format!("symbol {} is not finite at λ = {l}", self.label)));
            }
            values.push(v);
        }
        SampledFunction::new(Arc::clone(plan.spectral()), values, Side::Spectral)
    }
}

/// `m(√L) f`.
pub fn apply_multiplier(plan: &TransformPlan, m: &Multiplier, f: &SampledFunction) -> Result<SampledFunction> {
    let symbol = m.sample(plan)?;
    let hat = plan.forward(f)?;
    let product: Vec<Complex64> = hat.values().iter().zip(symbol.values()).map(|(a, b)| a * b).collect();
    plan.inverse(&SampledFunction::new(Arc::clone(plan.spectral()), product, Side::Spectral)?)
}

/// `e^{-tL} f`.
pub fn heat(plan: &TransformPlan, t: f64, f: &SampledFunction) -> Result<SampledFunction> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(usage(format!("heat time must be positive, got {t}")));
    }
    apply_multiplier(plan, &Multiplier::heat(t), f)
}

/// `L^{iα} f`.
pub fn imaginary_power(plan: &TransformPlan, alpha: f64, f: &SampledFunction) -> Result<SampledFunction> {
    if !alpha.is_finite() {
        return Err(usage(format!("α must be finite, got {alpha}")));
    }
    apply_multiplier(plan, &Multiplier::imaginary_power(alpha), f)
}

/// `2π / (2α |ln λ_min|)` at the smallest spectral node.
pub fn oscillation_wavelength(plan: &TransformPlan, alpha: f64) -> f64 {
    let lmin = plan.spectral().nodes()[0];
    2.0 * std::f64::consts::PI / (2.0 * alpha.abs() * lmin.ln().abs())
}

/// Largest phase change of `λ^{2iα}` across one spectral cell.
pub fn phase_per_cell(plan: &TransformPlan, alpha: f64) -> f64 {
    plan.spectral()
        .edges()
        .windows(2)
        .skip(1)
        .map(|e| 2.0 * alpha.abs() * (e[1] / e[0]).ln())
        .fold(0.0, f64::max)
}

fn check_column_point(plan: &TransformPlan, y: f64) -> Result<()> {
    if !(y > 0.0) || y > plan.physical().radius() {
        return Err(usage(format!(
            "kernel column point y = {y} is outside (0, {}]",
            plan.physical().radius()
        )));
    }
    Ok(())
}

/// `x ↦ K_{m(√L)}(x, y) = τ^y ǩ(x)` with `ǩ = inverse(m)`.
pub fn kernel_column(plan: &TransformPlan, m: &Multiplier, y: f64) -> Result<SampledFunction> {
    check_column_point(plan, y)?;
    let check = plan.inverse(&m.sample(plan)?)?;
    Ok(translate(plan.space(), &check, y)?.function)
}

/// `x ↦ a(r)^{-2} Σ_j v_j m(λ_j) φ_{λ_j}(x) φ_{λ_j}(y)`, the same column by
/// the eigenfunction expansion.
pub fn kernel_column_spectral(plan: &TransformPlan, m: &Multiplier, y: f64) -> Result<SampledFunction> {
    check_column_point(plan, y)?;
    let phi = crate::bessel::Eigenfunctions::new(plan.space());
    let sym = m.sample(plan)?;
    let g: Vec<Complex64> = sym
        .values()
        .iter()
        .zip(plan.spectral().nodes())
        .map(|(v, &l)| v * phi.value(l, y))
        .collect();
    plan.inverse(&SampledFunction::new(Arc::clone(plan.spectral()), g, Side::Spectral)?)
}

/// Fitted Gaussian upper bound `|p_t(x,y)| ≤ C μ(I_{√t}(x))^{-1} e^{-|x-y|²/(ct)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBoundFit {
    pub c: f64,
    pub times: Vec<f64>,
    /// smallest admissible `C` per time
    pub constants: Vec<f64>,
    /// `max C / min C`
    pub stability: f64,
}

/// Smallest `C` for one `t` and fixed `c`, over columns at `y = √t · s`, `s ∈ scales`.
///
/// Only points where the kernel exceeds `1e-10` of its peak enter the fit.
pub fn gaussian_bound_constant(plan: &TransformPlan, t: f64, c: f64, scales: &[f64]) -> Result<f64> {
    let space = plan.space();
    let m = Multiplier::heat(t);
    let mut worst: f64 = 0.0;
    for &s in scales {
        let y = t.sqrt() * s;
        let col = kernel_column(plan, &m, y)?;
        let peak = col.max_abs();
        for (v, &x) in col.values().iter().zip(plan.physical().nodes()) {
            if v.norm() < 1e-10 * peak {
                continue;
            }
            let vol = ball_volume(space, &Interval::new(x, t.sqrt())?)?;
            worst = worst.max(v.norm() * vol * ((x - y).powi(2) / (c * t)).exp());
        }
    }
    Ok(worst)
}

/// Tries each `c` in order and keeps the first whose constants are stable
/// within a factor 2 across `times`; the last candidate otherwise.
pub fn fit_gaussian_bound(plan: &TransformPlan, times: &[f64], candidates: &[f64]) -> Result<GaussianBoundFit> {
    if times.is_empty() || candidates.is_empty() {
        return Err(usage("Gaussian bound fit needs times and candidate c values"));
    }
    let scales = [0.5, 1.0, 2.0, 4.0];
    let mut fit = None;
    for &c in candidates {
        let constants = times
            .iter()
            .map(|&t| gaussian_bound_constant(plan, t, c, &scales))
            .collect::<Result<Vec<_>>>()?;
        let hi = constants.iter().cloned().fold(0.0, f64::max);
        let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
        let current = GaussianBoundFit {
            c,
            times: times.to_vec(),
            constants,
            stability: hi / lo,
        };
        let done = current.stability <= 2.0;
        fit = Some(current);
        if done {
            break;
        }
    }
    Ok(fit.expect("at least one candidate"))
}
