//! Generalized translation `τ^y` and convolution on `((0,∞), x^r dx)`.
//!
//! `τ^y f(x)` averages `f` over the third sides `z` of triangles with sides
//! `x` and `y`:
//!
//! ```text
//! τ^y f(x) = c_θ(r) ∫_0^π f(√(x² + y² - 2xy cos θ)) sin^{r-1}θ dθ
//! ```
//!
//! with `c_θ(r) = Γ((r+1)/2) / (Γ(r/2) √π)`. The same average written in `z`
//! has density `c(r) Δ(x,y,z)^{r-2} / (xyz)^{r-1}` against `z^r dz`, where `Δ`
//! is the triangle area; that form is kept as an independent oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::gamma::gamma;
use crate::bessel::Constants;
use crate::error::{usage, Error, Result};
use crate::grid::{SampledFunction, Side, WeightedGrid};
use crate::measure::BesselSpace;
use crate::rules;

/// Nodes per quadrature panel.
const PANEL_ORDER: usize = 8;

/// Node count above which `convolve` needs an explicit override.
pub const CONVOLVE_NODE_LIMIT: usize = 1024;

/// Area of the triangle with sides `x`, `y`, `z`; 0 when no such triangle exists.
pub fn triangle_area(x: f64, y: f64, z: f64) -> f64 {
    let mut s = [x, y, z];
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    if !(c > 0.0) || c - (a - b) <= 0.0 {
        return 0.0;
    }
    0.25 * ((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))).sqrt()
}

/// `Γ((r+1)/2) / (Γ(r/2) √π)`, the normalization of `sin^{r-1}θ dθ` on `(0, π)`.
pub fn theta_constant(r: f64) -> f64 {
    gamma(0.5 * (r + 1.0)) / (gamma(0.5 * r) * PI.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parametrization {
    ZForm,
    ThetaForm,
}

/// Quadrature choice for `τ^y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationKernel {
    pub parametrization: Parametrization,
    /// panels per half local cell width
    pub refinement: usize,
}

impl Default for TranslationKernel {
    fn default() -> Self {
        Self {
            parametrization: Parametrization::ThetaForm,
            refinement: 1,
        }
    }
}

/// A translated function together with its truncation diagnostic.
#[derive(Debug, Clone)]
pub struct Translated {
    pub function: SampledFunction,
    /// largest `W_{x,y}`-mass that fell beyond the grid radius, over all nodes `x`
    pub clipped_mass: f64,
}

impl Translated {
    pub fn truncated(&self) -> bool {
        self.clipped_mass > 1e-12
    }
}

/// Cubic Lagrange interpolation on the four nearest nodes; zero beyond `R`.
#[derive(Debug, Clone, Copy)]
pub struct Interpolant<'a> {
    nodes: &'a [f64],
    values: &'a [Complex64],
    radius: f64,
}

impl<'a> Interpolant<'a> {
    pub fn new(f: &'a SampledFunction) -> Self {
        Self {
            nodes: f.grid().nodes(),
            values: f.values(),
            radius: f.grid().radius(),
        }
    }

    /// `None` beyond the grid radius.
    pub fn eval(&self, z: f64) -> Option<Complex64> {
        if z > self.radius {
            return None;
        }
        let n = self.nodes.len();
        let k = self.nodes.partition_point(|&t| t < z);
        let start = k.saturating_sub(2).min(n - 4);
        Some(lagrange4(&self.nodes[start..start + 4], &self.values[start..start + 4], z))
    }

    /// Largest leave-one-out defect `|f(x_i) - p_i(x_i)|`, where `p_i` is the
    /// cubic through the four nearest other nodes.
    pub fn error_estimate(&self) -> f64 {
        let n = self.nodes.len();
        let mut worst: f64 = 0.0;
        let mut xs = [0.0; 4];
        let mut vs = [Complex64::new(0.0, 0.0); 4];
        for i in 2..n.saturating_sub(2) {
            for (slot, j) in [i - 2, i - 1, i + 1, i + 2].into_iter().enumerate() {
                xs[slot] = self.nodes[j];
                vs[slot] = self.values[j];
            }
            worst = worst.max((lagrange4(&xs, &vs, self.nodes[i]) - self.values[i]).norm());
        }
        worst
    }
}

#[inline]
fn lagrange4(xs: &[f64], vs: &[Complex64], z: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        let mut l = 1.0;
        for j in 0..4 {
            if i != j {
                l *= (z - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += vs[i] * l;
    }
    acc
}

/// Reusable rules for one weight exponent.
#[derive(Debug, Clone)]
struct ThetaRule {
    r: f64,
    c_theta: f64,
    legendre: Vec<(f64, f64)>,
    /// Gauss–Jacobi for `θ^{r-1}` near an endpoint
    end: Vec<(f64, f64)>,
}

impl ThetaRule {
    fn new(r: f64) -> Self {
        Self {
            r,
            c_theta: theta_constant(r),
            legendre: rules::legendre(PANEL_ORDER),
            end: rules::jacobi(PANEL_ORDER, 0.0, r - 1.0),
        }
    }

    /// Panel edges in θ; each panel moves `z` by at most half the local cell width.
    fn panels(&self, grid: &WeightedGrid, x: f64, y: f64, refinement: usize) -> Vec<f64> {
        let speed = x.min(y);
        let mut edges = vec![0.0];
        let mut theta = 0.0;
        let cap = PI / 8.0;
        while theta < PI {
            let z = chord(x, y, theta).min(grid.radius());
            let step = (0.5 * grid.cell_width_at(z) / (speed * refinement as f64)).min(cap);
            theta = (theta + step).min(PI);
            edges.push(theta);
        }
        // a sliver at π would leave the Legendre panel before it next to the
        // endpoint singularity
        let n = edges.len();
        if n > 3 && edges[n - 1] - edges[n - 2] < 0.5 * (edges[n - 2] - edges[n - 3]) {
            edges.remove(n - 2);
        }
        edges
    }

    /// `(value, clipped mass)` of `c_θ ∫ g(z(θ)) sin^{r-1}θ dθ`.
    fn average<G>(&self, edges: &[f64], x: f64, y: f64, g: G) -> (Complex64, f64)
    where
        G: Fn(f64) -> Option<Complex64>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut clipped = 0.0;
        let last = edges.len() - 2;
        let mut add = |theta: f64, w: f64| match g(chord(x, y, theta)) {
            Some(v) => acc += v * w,
            None => clipped += w,
        };
        for (k, pair) in edges.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            if k == 0 {
                // θ = h(1+t)/2, θ^{r-1} dθ = (h/2)^r (1+t)^{r-1} dt
                let scale = half.powf(self.r);
                for &(t, w) in &self.end {
                    let theta = half * (1.0 + t);
                    add(theta, scale * w * sinc_power(theta, self.r - 1.0));
                }
            } else if k == last {
                let scale = half.powf(self.r);
                for &(t, w) in &self.end {
                    let s = half * (1.0 + t);
                    add(PI - s, scale * w * sinc_power(s, self.r - 1.0));
                }
            } else {
                let mid = 0.5 * (a + b);
                for &(t, w) in &self.legendre {
                    let theta = mid + half * t;
                    add(theta, half * w * theta.sin().powf(self.r - 1.0));
                }
            }
        }
        (acc * self.c_theta, clipped * self.c_theta)
    }
}

/// `(sin s / s)^p`, smooth near `s = 0`.
#[inline]
fn sinc_power(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        (s.sin() / s).powf(p)
    }
}

#[inline]
fn chord(x: f64, y: f64, theta: f64) -> f64 {
    // (x - y)² + 2xy(1 - cos θ), stable near θ = 0
    let s = (0.5 * theta).sin();
    ((x - y).powi(2) + 4.0 * x * y * s * s).sqrt()
}

fn check_physical(f: &SampledFunction) -> Result<()> {
    if f.side() != Side::Physical {
        return Err(Error::GridMismatch("translation acts on physical-side functions".into()));
    }
    Ok(())
}

fn check_shift(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(usage(format!("translation distance must be positive, got {y}")));
    }
    Ok(())
}

/// `τ^y f` at every node of `f`'s grid, with the default kernel.
pub fn translate(space: BesselSpace, f: &SampledFunction, y: f64) -> Result<Translated> {
    translate_with(space, TranslationKernel::default(), f, y)
}

/// `τ^y f` with an explicit parametrization.
pub fn translate_with(
    space: BesselSpace,
    kernel: TranslationKernel,
    f: &SampledFunction,
    y: f64,
) -> Result<Translated> {
    check_physical(f)?;
    check_shift(y)?;
    if (space.r() - f.grid().r()).abs() > 0.0 {
        return Err(usage(format!(
            "space has r = {} but the grid was built for r = {}",
            space.r(),
            f.grid().r()
        )));
    }
    if kernel.refinement == 0 {
        return Err(usage("translation refinement must be at least 1"));
    }
    let interp = Interpolant::new(f);
    let grid = f.grid();
    let results: Vec<(Complex64, f64)> = match kernel.parametrization {
        Parametrization::ThetaForm => {
            let rule = ThetaRule::new(space.r());
            grid.nodes()
                .par_iter()
                .map(|&x| {
                    let edges = rule.panels(grid, x, y, kernel.refinement);
                    rule.average(&edges, x, y, |z| interp.eval(z))
                })
                .collect()
        }
        Parametrization::ZForm => {
            let rule = ZRule::new(space.r());
            grid.nodes()
                .par_iter()
                .map(|&x| rule.average(grid, x, y, kernel.refinement, |z| interp.eval(z)))
                .collect()
        }
    };
    let clipped_mass = results.iter().map(|p| p.1).fold(0.0, f64::max);
    let values = results.into_iter().map(|p| p.0).collect();
    Ok(Translated {
        function: SampledFunction::new(Arc::clone(grid), values, Side::Physical)?,
        clipped_mass,
    })
}

/// `τ^y g(x)` for a closure `g` defined on all of `(0, ∞)`.
pub fn translate_point<G>(space: BesselSpace, grid: &WeightedGrid, g: G, x: f64, y: f64) -> Result<Complex64>
where
    G: Fn(f64) -> Complex64,
{
    check_shift(y)?;
    check_shift(x)?;
    let rule = ThetaRule::new(space.r());
    let edges = rule.panels(grid, x, y, 1);
    Ok(rule.average(&edges, x, y, |z| Some(g(z))).0)
}

/// `(f ∗ g)(x) = ∫ τ^x f(y) g(y) dμ(y)` at every node.
///
/// Refuses grids above [`CONVOLVE_NODE_LIMIT`] nodes unless `allow_large`.
pub fn convolve(space: BesselSpace, f: &SampledFunction, g: &SampledFunction, allow_large: bool) -> Result<SampledFunction> {
    check_physical(f)?;
    f.check_same_grid(g)?;
    let grid = f.grid();
    if grid.len() > CONVOLVE_NODE_LIMIT && !allow_large {
        return Err(usage(format!(
            "convolve on {} nodes exceeds the limit of {CONVOLVE_NODE_LIMIT}; pass the override to proceed",
            grid.len()
        )));
    }
    let interp = Interpolant::new(f);
    let rule = ThetaRule::new(space.r());
    let nodes = grid.nodes();
    let weights = grid.weights();
    let values: Vec<Complex64> = nodes
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for ((&y, &w), gy) in nodes.iter().zip(weights).zip(g.values()) {
                if gy.re == 0.0 && gy.im == 0.0 {
                    continue;
                }
                let edges = rule.panels(grid, x, y, 1);
                let (t, _) = rule.average(&edges, x, y, |z| interp.eval(z));
                acc += t * *gy * w;
            }
            acc
        })
        .collect();
    SampledFunction::new(Arc::clone(grid), values, Side::Physical)
}

/// The `z`-form of `τ^y`: composite Gauss rules on `(|x-y|, x+y)` with
/// Gauss–Jacobi panels absorbing the endpoint factors `(z-a)^β`, `(b-z)^β`,
/// `β = (r-2)/2`.
#[derive(Debug, Clone)]
struct ZRule {
    r: f64,
    constant: f64,
    legendre: Vec<(f64, f64)>,
    end: Vec<(f64, f64)>,
    /// weight `z^{r-1}` at `a = 0`
    origin: Vec<(f64, f64)>,
}

impl ZRule {
    fn new(r: f64) -> Self {
        let beta = 0.5 * (r - 2.0);
        Self {
            r,
            constant: Constants::new(r).c_r * 4f64.powf(2.0 - r),
            legendre: rules::legendre(PANEL_ORDER),
            end: rules::jacobi(PANEL_ORDER, 0.0, beta),
            origin: rules::jacobi(PANEL_ORDER, 0.0, r - 1.0),
        }
    }

    fn average<G>(&self, grid: &WeightedGrid, x: f64, y: f64, refinement: usize, g: G) -> (Complex64, f64)
    where
        G: Fn(f64) -> Option<Complex64>,
    {
        let a = (x - y).abs();
        let b = x + y;
        let beta = 0.5 * (self.r - 2.0);
        let scale = self.constant / (x * y).powf(self.r - 1.0);
        let width = 0.5 * grid.cell_width_at(a.min(grid.radius())) / refinement as f64;
        let panels = (((b - a) / width).ceil() as usize).max(16);
        // grade the two end panels geometrically so that the smooth factors
        // stay smooth on them
        let h = (b - a) / panels as f64;
        let mut edges: Vec<f64> = (0..=panels).map(|k| a + h * k as f64).collect();
        *edges.last_mut().unwrap() = b;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut clipped = 0.0;
        let mut add = |z: f64, w: f64| match g(z) {
            Some(v) => acc += v * w,
            None => clipped += w,
        };
        let last = edges.len() - 2;
        for (k, pair) in edges.windows(2).enumerate() {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            if k == 0 && a == 0.0 {
                // (z² (b² - z²))^β z = z^{r-1} (b² - z²)^β
                let s = half.powf(self.r);
                for &(t, w) in &self.origin {
                    let z = half * (1.0 + t);
                    add(z, s * w * (b * b - z * z).powf(beta));
                }
            } else if k == 0 {
                let s = half.powf(beta + 1.0);
                for &(t, w) in &self.end {
                    let z = a + half * (1.0 + t);
                    add(z, s * w * ((z + a) * (b - z) * (b + z)).powf(beta) * z);
                }
            } else if k == last {
                let s = half.powf(beta + 1.0);
                for &(t, w) in &self.end {
                    let z = b - half * (1.0 + t);
                    add(z, s * w * ((z - a) * (z + a) * (b + z)).powf(beta) * z);
                }
            } else {
                let mid = 0.5 * (lo + hi);
                for &(t, w) in &self.legendre {
                    let z = mid + half * t;
                    add(z, half * w * ((z * z - a * a) * (b * b - z * z)).powf(beta) * z);
                }
            }
        }
        (acc * scale, clipped * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, lp_norm, Exponent, Scheme};

    fn setup(r: f64, radius: f64, cells: usize) -> (BesselSpace, Arc<WeightedGrid>) {
        (
            BesselSpace::new(r).unwrap(),
            Arc::new(build_grid(radius, cells, r, Scheme::GeometricCell).unwrap()),
        )
    }

    #[test]
    fn area_examples() {
        assert!((triangle_area(3.0, 4.0, 5.0) - 6.0).abs() < 1e-14);
        assert_eq!(triangle_area(1.0, 2.0, 3.0), 0.0);
        assert_eq!(triangle_area(1.0, 2.0, 7.0), 0.0);
        assert!((triangle_area(2.0, 2.0, 2.0) - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn theta_constant_normalizes() {
        // r = 1: 1/π; r = 2: 1/2
        assert!((theta_constant(1.0) - 1.0 / PI).abs() < 1e-14);
        assert!((theta_constant(2.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constants_translate_to_one() {
        for r in [0.3, 1.0, 1.5, 2.0, 3.0] {
            let (space, grid) = setup(r, 16.0, 64);
            let one = grid.sample_real(Side::Physical, |_| 1.0);
            let t = translate(space, &one, 1.3).unwrap();
            for (v, &x) in t.function.values().iter().zip(grid.nodes()) {
                if x + 1.3 < 16.0 {
                    assert!((v.re - 1.0).abs() < 1e-8, "r={r} x={x} {v}");
                }
            }
            assert!(t.truncated());
        }
    }

    #[test]
    fn second_moment() {
        for r in [0.5, 1.0, 2.0, 3.5] {
            let (space, grid) = setup(r, 16.0, 64);
            let sq = grid.sample_real(Side::Physical, |z| z * z);
            let y = 2.5;
            let t = translate(space, &sq, y).unwrap();
            for (v, &x) in t.function.values().iter().zip(grid.nodes()) {
                if x + y < 15.0 {
                    assert!((v.re - (x * x + y * y)).abs() < 1e-6 * (x * x + y * y), "r={r} x={x}");
                }
            }
        }
    }

    #[test]
    fn small_shift_converges() {
        let (space, grid) = setup(2.0, 12.0, 64);
        let f = grid.sample_real(Side::Physical, |x| (-x * x).exp());
        let defect = |y: f64| {
            let t = translate(space, &f, y).unwrap().function;
            t.sub(&f).unwrap().max_abs()
        };
        let ratio = defect(0.1) / defect(0.01);
        assert!(ratio > 80.0 && ratio < 120.0, "{ratio}");
    }

    #[test]
    fn theta_and_z_forms_agree() {
        for r in [1.0, 2.0, 3.0] {
            let (space, grid) = setup(r, 12.0, 96);
            let f = grid.sample_real(Side::Physical, |x| (-0.5 * x * x).exp() * (1.0 + x));
            let y = 0.9;
            let theta = translate(space, &f, y).unwrap().function;
            let z = translate_with(
                space,
                TranslationKernel {
                    parametrization: Parametrization::ZForm,
                    refinement: 1,
                },
                &f,
                y,
            )
            .unwrap()
            .function;
            for ((a, b), &x) in theta.values().iter().zip(z.values()).zip(grid.nodes()) {
                if (x - y).abs() > 0.05 {
                    assert!((a - b).norm() < 1e-6, "r={r} x={x}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn contraction_in_l1_l2_linf() {
        let (space, grid) = setup(2.0, 16.0, 96);
        let f = grid.sample_real(Side::Physical, |x| (-(x - 2.0).powi(2) * 3.0).exp());
        let t = translate(space, &f, 1.7).unwrap().function;
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            assert!(lp_norm(&t, p) <= (1.0 + 1e-4) * lp_norm(&f, p));
        }
    }

    #[test]
    fn support_of_translates() {
        let (space, grid) = setup(1.0, 16.0, 96);
        // supported in (1, 2)
        let bump = |x: f64| {
            let u = 2.0 * (x - 1.5);
            if u.abs() < 1.0 {
                (-1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        };
        let f = grid.sample_real(Side::Physical, bump);
        let y = 3.0;
        let t = translate(space, &f, y).unwrap().function;
        let peak = f.max_abs();
        for (v, &x) in t.values().iter().zip(grid.nodes()) {
            // τ^y f(x) needs some z in (1,2) with |x - y| ≤ z ≤ x + y
            if (x - y).abs() > 2.0 + 0.05 || x + y < 1.0 - 0.05 {
                assert!(v.norm() < 1e-8 * peak, "x={x}");
            }
        }
    }

    #[test]
    fn convolution_is_symmetric_and_guarded() {
        let space = BesselSpace::new(1.0).unwrap();
        let grid = Arc::new(build_grid(10.0, 40, 1.0, Scheme::UniformCell).unwrap());
        let f = grid.sample_real(Side::Physical, |x| (-0.5 * x * x).exp());
        let g = grid.sample_real(Side::Physical, |x| (-(x - 1.0).powi(2)).exp());
        let fg = convolve(space, &f, &g, false).unwrap();
        let gf = convolve(space, &g, &f, false).unwrap();
        assert!(fg.sub(&gf).unwrap().max_abs() < 1e-6);
        let big = Arc::new(build_grid(10.0, 129, 1.0, Scheme::UniformCell).unwrap());
        let h = big.sample_real(Side::Physical, |x| (-x).exp());
        assert!(convolve(space, &h, &h, false).is_err());
    }

    #[test]
    fn gaussian_self_convolution() {
        // r = 1: e^{-x²/2} ∗ e^{-x²/2} = e^{-x²/4}/2
        let (space, grid) = setup(1.0, 10.0, 32);
        let f = grid.sample_real(Side::Physical, |x| (-0.5 * x * x).exp());
        let c = convolve(space, &f, &f, false).unwrap();
        for (v, &x) in c.values().iter().zip(grid.nodes()) {
            assert!((v.re - 0.5 * (-0.25 * x * x).exp()).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn interpolation_estimate_is_small_for_smooth_input() {
        let (_, grid) = setup(1.0, 8.0, 32);
        let f = grid.sample_real(Side::Physical, |x| x.sin());
        assert!(Interpolant::new(&f).error_estimate() < 1e-5);
    }
}
