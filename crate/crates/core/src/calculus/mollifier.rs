//! The finite-propagation mollifier.
//!
//! `φ(t) = κ exp(-1/(1-t²))` on `(-1, 1)` with `∫φ = 2π`, and
//! `Φ(ξ) = (2π)^{-1} ∫ φ(t) cos(tξ) dt`, so that `Φ(0) = 1`.
//! `Φ` is tabulated on `[0, ξ_max]` with cubic Hermite interpolation and
//! evaluated by direct quadrature beyond.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::rules;

/// Table spacing; cubic Hermite error is below `h^4 max|Φ''''| / 384`.
const TABLE_STEP: f64 = 1.0 / 16.0;
/// Bound on the interpolation error checked at build time.
const INTERPOLATION_TOLERANCE: f64 = 1e-8;
/// Smallest admissible `ξ_max`.
pub const MIN_XI_MAX: f64 = 64.0;

fn bump(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Nodes and weights on `[0, 1]` for `(2/I₀) ∫_0^1 e^{-1/(1-t²)} g(t) dt`.
#[derive(Debug, Clone)]
struct HalfRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl HalfRule {
    /// Panels keep the phase `tξ` below 2 radians per panel up to `xi`.
    fn new(xi: f64) -> Self {
        let panels = ((xi / 2.0).ceil() as usize).max(64);
        let base = rules::legendre(8);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 8);
        let mut weights = Vec::with_capacity(panels * 8);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for &(t, w) in &base {
                let x = mid + 0.5 * h * t;
                nodes.push(x);
                weights.push(0.5 * h * w * bump(x));
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Self { nodes, weights }
    }

    /// `(Φ(ξ), Φ'(ξ))`.
    fn eval(&self, xi: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let (s, c) = (t * xi).sin_cos();
            v += w * c;
            d -= w * t * s;
        }
        (v, d)
    }

    fn moment(&self, k: i32) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(t, w)| w * t.powi(k)).sum()
    }
}

/// Tabulated `Φ` with its Taylor data at the origin.
#[derive(Debug, Clone)]
pub struct MollifierTable {
    xi_max: f64,
    values: Vec<f64>,
    derivatives: Vec<f64>,
    /// `κ`, the normalization of `φ`
    kappa: f64,
    /// `C` in `1 - Φ(ξ) = C ξ² + O(ξ⁴)`
    taylor: f64,
    /// `sup |1 - Φ|` over the table
    sup_one_minus: f64,
    interpolation_error: f64,
}

/// Summary of a table for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSummary {
    pub xi_max: f64,
    pub step: f64,
    pub kappa: f64,
    pub taylor_constant: f64,
    pub sup_one_minus: f64,
    pub interpolation_error: f64,
}

/// Tabulates `Φ` on `[0, ξ_max]`.
pub fn build_mollifier(xi_max: f64) -> Result<MollifierTable> {
    if !(xi_max >= MIN_XI_MAX) || !xi_max.is_finite() {
        return Err(usage(format!("mollifier table needs ξ_max >= {MIN_XI_MAX}, got {xi_max}")));
    }
    let rule = HalfRule::new(xi_max + 1.0);
    let count = (xi_max / TABLE_STEP).ceil() as usize + 1;
    let pairs: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|k| rule.eval(k as f64 * TABLE_STEP))
        .collect();
    let (values, derivatives): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    // ∫_{-1}^{1} e^{-1/(1-t²)} dt on a fine rule
    let raw = {
        let base = rules::legendre(8);
        let panels = 256;
        let h = 1.0 / panels as f64;
        2.0 * (0..panels)
            .flat_map(|p| {
                let mid = (p as f64 + 0.5) * h;
                base.iter().map(move |&(t, w)| 0.5 * h * w * bump(mid + 0.5 * h * t))
            })
            .sum::<f64>()
    };
    let mut table = MollifierTable {
        xi_max: (count - 1) as f64 * TABLE_STEP,
        sup_one_minus: values.iter().map(|v| (1.0 - v).abs()).fold(0.0, f64::max),
        values,
        derivatives,
        kappa: 2.0 * std::f64::consts::PI / raw,
        taylor: 0.5 * rule.moment(2),
        interpolation_error: 0.0,
    };
    // midpoints of a spread of intervals against direct quadrature
    let stride = (count / 512).max(1);
    let worst = (0..count - 1)
        .step_by(stride)
        .map(|k| {
            let xi = (k as f64 + 0.5) * TABLE_STEP;
            (table.eval(xi) - rule.eval(xi).0).abs()
        })
        .fold(0.0, f64::max);
    if worst > INTERPOLATION_TOLERANCE || (table.values[0] - 1.0).abs() > 1e-10 {
        return Err(Error::Construction(format!(
            "mollifier table interpolation error {worst:e} exceeds {INTERPOLATION_TOLERANCE:e}"
        )));
    }
    table.interpolation_error = worst;
    Ok(table)
}

impl MollifierTable {
    /// `Φ(ξ)`; even in `ξ`.
    pub fn eval(&self, xi: f64) -> f64 {
        let x = xi.abs();
        if x > self.xi_max {
            return HalfRule::new(x + 1.0).eval(x).0;
        }
        let pos = x / TABLE_STEP;
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        let s = pos - k as f64;
        let (p0, p1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.derivatives[k] * TABLE_STEP, self.derivatives[k + 1] * TABLE_STEP);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
    }

    /// The base bump `φ(t)`.
    pub fn bump(&self, t: f64) -> f64 {
        self.kappa * bump(t)
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    /// `C` with `1 - Φ(ξ) ≈ C ξ²` near 0.
    pub fn taylor_constant(&self) -> f64 {
        self.taylor
    }

    /// `sup |1 - Φ|` over `[0, ξ_max]`.
    pub fn sup_one_minus(&self) -> f64 {
        self.sup_one_minus
    }

    pub fn summary(&self) -> MollifierSummary {
        MollifierSummary {
            xi_max: self.xi_max,
            step: TABLE_STEP,
            kappa: self.kappa,
            taylor_constant: self.taylor,
            sup_one_minus: self.sup_one_minus,
            interpolation_error: self.interpolation_error,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_range() {
        assert!(build_mollifier(10.0).is_err());
    }

    #[test]
    fn unit_at_origin_and_even() {
        let t = build_mollifier(64.0).unwrap();
        assert!((t.eval(0.0) - 1.0).abs() < 1e-10);
        for xi in [0.3, 2.7, 11.0, 40.5] {
            assert_eq!(t.eval(xi), t.eval(-xi));
        }
    }

    #[test]
    fn bump_has_total_mass_two_pi() {
        let t = build_mollifier(64.0).unwrap();
        let rule = rules::legendre(8);
        let panels = 400;
        let h = 2.0 / panels as f64;
        let total: f64 = (0..panels)
            .flat_map(|p| {
                let mid = -1.0 + (p as f64 + 0.5) * h;
                rule.iter().map(move |&(s, w)| (mid + 0.5 * h * s, 0.5 * h * w))
            })
            .map(|(x, w)| w * t.bump(x))
            .sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn taylor_ratio_is_stable() {
        let t = build_mollifier(64.0).unwrap();
        let c = t.taylor_constant();
        assert!(c > 0.0);
        for xi in [1e-3, 2e-3, 5e-3, 1e-2] {
            let ratio = (1.0 - t.eval(xi)) / (xi * xi);
            assert!((ratio / c - 1.0).abs() < 0.01, "{xi}: {ratio} vs {c}");
        }
    }

    #[test]
    fn reference_values() {
        // mpmath.quad at 20 digits
        let t = build_mollifier(128.0).unwrap();
        let cases = [
            (8.0, -0.045_761_527_081_370_56),
            (16.0, -0.002_345_530_471_241_246),
            (64.0, -1.317_571_314_749_472e-5),
        ];
        for (xi, want) in cases {
            let got = t.eval(xi);
            assert!((got - want).abs() < 1e-11, "Φ({xi}) = {got}");
        }
        assert!((t.taylor_constant() - 0.079_056_818_131_899_12).abs() < 1e-12);
    }

    #[test]
    fn table_matches_direct_evaluation_beyond_range() {
        let t = build_mollifier(64.0).unwrap();
        let inside = t.eval(63.9);
        let direct = HalfRule::new(100.0).eval(63.9).0;
        assert!((inside - direct).abs() < 1e-10);
        assert!(t.eval(100.0).abs() < 1e-5);
    }
}
