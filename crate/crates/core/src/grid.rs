//! Discretization of `(0, R]` against `dμ = x^r dx`.
//!
//! A grid is a tiling of `(0, R]` into cells, each carrying an 8-point Gauss
//! rule with the weight `x^r` folded into the quadrature weights. The cell
//! touching the origin uses a Gauss–Jacobi rule for `x^r`, so the constant
//! function is integrated exactly for every `r > 0`. Spectral grids on
//! `(0, Λ]` use the same constructor: the spectral measure is also `λ^r dλ`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::measure::BesselSpace;
use crate::rules;

/// Gauss points per cell.
pub const GAUSS_ORDER: usize = 8;
/// Minimum number of cells in a grid.
pub const MIN_CELLS: usize = 8;
/// The geometric scheme refines its smallest cell below this fraction of `R`.
pub const SMALLEST_CELL_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    UniformCell,
    GeometricCell,
    /// `N` equispaced nodes `x_j = jR/(N+1)` with trapezoid weights, one per cell
    UniformNode,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-cell" => Ok(Scheme::UniformCell),
            "geometric" | "geometric-cell" => Ok(Scheme::GeometricCell),
            "uniform-node" | "sine" => Ok(Scheme::UniformNode),
            other => Err(usage(format!("unknown grid scheme '{other}'"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::UniformCell => "uniform-cell",
            Scheme::GeometricCell => "geometric-cell",
            Scheme::UniformNode => "uniform-node",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Physical,
    Spectral,
}

/// Quadrature nodes and `x^r`-weights on `(0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// cell boundaries `0 = e_0 < e_1 < … < e_N = R`
    edges: Vec<f64>,
    r: f64,
    radius: f64,
    scheme: Scheme,
}

fn legendre_rule() -> Vec<(f64, f64)> {
    rules::legendre(GAUSS_ORDER)
}

/// Gauss–Jacobi rule for `(1+t)^r` on `[-1, 1]`.
fn origin_rule(r: f64) -> Vec<(f64, f64)> {
    rules::jacobi(GAUSS_ORDER, 0.0, r)
}

fn uniform_edges(radius: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|k| radius * k as f64 / cells as f64)
        .collect()
}

/// A quarter of the cells grade geometrically toward 0; the rest are uniform.
/// The ratio is solved so that the smallest cell is half of the required bound.
fn geometric_edges(radius: f64, cells: usize) -> Vec<f64> {
    let graded = (cells / 4).max(1);
    let flat = cells - graded;
    let target = 0.5 * SMALLEST_CELL_FRACTION * radius;
    let width_for = |q: f64| {
        let tail: f64 = (1..=graded).map(|j| q.powi(-(j as i32))).sum();
        radius / (flat as f64 + tail)
    };
    let smallest = |q: f64| width_for(q) * q.powi(-(graded as i32));
    let (mut lo, mut hi) = (1.0 + 1e-12, 2.0);
    while smallest(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if smallest(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = hi;
    let u = width_for(q);
    let mut widths: Vec<f64> = (1..=graded).rev().map(|j| u * q.powi(-(j as i32))).collect();
    widths.extend(std::iter::repeat_n(u, flat));
    let mut edges = Vec::with_capacity(cells + 1);
    edges.push(0.0);
    let mut acc = 0.0;
    for w in &widths {
        acc += w;
        edges.push(acc);
    }
    // pin the last edge to R exactly
    *edges.last_mut().unwrap() = radius;
    edges
}

/// Builds `N` cells on `(0, R]` with 8 Gauss points each, or `N` equispaced
/// nodes under [`Scheme::UniformNode`].
pub fn build_grid(radius: f64, cells: usize, r: f64, scheme: Scheme) -> Result<WeightedGrid> {
    if cells < MIN_CELLS {
        return Err(usage(format!("grid needs at least {MIN_CELLS} cells, got {cells}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(usage(format!("grid radius must be positive, got {radius}")));
    }
    BesselSpace::new(r)?;
    let edges = match scheme {
        Scheme::UniformCell => uniform_edges(radius, cells),
        Scheme::GeometricCell => geometric_edges(radius, cells),
        Scheme::UniformNode => return Ok(uniform_node_grid(radius, cells, r)),
    };
    let legendre = legendre_rule();
    let jacobi = origin_rule(r);
    let mut nodes = Vec::with_capacity(cells * GAUSS_ORDER);
    let mut weights = Vec::with_capacity(cells * GAUSS_ORDER);
    for (k, pair) in edges.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        if k == 0 {
            // x = h(1+t)/2, x^r dx = (h/2)^{r+1} (1+t)^r dt
            let scale = half.powf(r + 1.0);
            for &(t, w) in &jacobi {
                nodes.push(mid + half * t);
                weights.push(scale * w);
            }
        } else {
            for &(t, w) in &legendre {
                let x = mid + half * t;
                nodes.push(x);
                weights.push(half * w * x.powf(r));
            }
        }
    }
    Ok(WeightedGrid {
        nodes,
        weights,
        edges,
        r,
        radius,
        scheme,
    })
}

/// Trapezoid rule on `x_j = jh`, `h = R/(N+1)`; exact for the sine series
/// underlying the `r = 2` transform.
fn uniform_node_grid(radius: f64, count: usize, r: f64) -> WeightedGrid {
    let h = radius / (count + 1) as f64;
    let nodes: Vec<f64> = (1..=count).map(|j| j as f64 * h).collect();
    let weights = nodes.iter().map(|x| h * x.powf(r)).collect();
    let mut edges: Vec<f64> = (1..count).map(|j| (j as f64 + 0.5) * h).collect();
    edges.insert(0, 0.0);
    edges.push(radius);
    WeightedGrid {
        nodes,
        weights,
        edges,
        r,
        radius,
        scheme: Scheme::UniformNode,
    }
}

impl WeightedGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn smallest_cell(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn largest_cell(&self) -> f64 {
        self.edges.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// Width of the cell containing `x` (clamped to the grid).
    pub fn cell_width_at(&self, x: f64) -> f64 {
        let k = self.edges.partition_point(|&e| e <= x).clamp(1, self.cells());
        self.edges[k] - self.edges[k - 1]
    }

    /// `μ((0, R])` in closed form.
    pub fn total_measure(&self) -> f64 {
        self.radius.powf(self.r + 1.0) / (self.r + 1.0)
    }

    /// Samples `f` at the nodes.
    pub fn sample<F>(self: &Arc<Self>, side: Side, f: F) -> SampledFunction
    where
        F: Fn(f64) -> Complex64,
    {
        let values = self.nodes.iter().map(|&x| f(x)).collect();
        SampledFunction {
            grid: Arc::clone(self),
            values,
            side,
        }
    }

    pub fn sample_real<F>(self: &Arc<Self>, side: Side, f: F) -> SampledFunction
    where
        F: Fn(f64) -> f64,
    {
        self.sample(side, |x| Complex64::new(f(x), 0.0))
    }

    /// Index range `[lo, hi)` of nodes lying in `[a, b)`.
    pub fn node_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = self.nodes.partition_point(|&x| x < a);
        let hi = self.nodes.partition_point(|&x| x < b);
        (lo, hi)
    }
}

/// Values on the nodes of a grid, on the physical or the spectral side.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<WeightedGrid>,
    values: Vec<Complex64>,
    side: Side,
}

impl SampledFunction {
    pub fn new(grid: Arc<WeightedGrid>, values: Vec<Complex64>, side: Side) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values, side })
    }

    pub fn zeros(grid: Arc<WeightedGrid>, side: Side) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values, side }
    }

    pub(crate) fn from_parts(grid: Arc<WeightedGrid>, values: Vec<Complex64>, side: Side) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, side }
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let values = self.values.iter().map(|v| v * c).collect();
        Self::from_parts(Arc::clone(&self.grid), values, self.side)
    }

    pub fn map<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let values = self
            .grid
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| f(x, v))
            .collect();
        Self::from_parts(Arc::clone(&self.grid), values, self.side)
    }

    /// `self - other` on a shared grid.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts(Arc::clone(&self.grid), values, self.side))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts(Arc::clone(&self.grid), values, self.side))
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("functions live on different grids".into()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Writes `node,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["node", "re", "im"])?;
        for (x, v) in self.grid.nodes.iter().zip(&self.values) {
            w.write_record(&[fmt_f64(*x), fmt_f64(v.re), fmt_f64(v.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `node,re[,im]` rows (with a header) and checks every node against
    /// `grid` to relative `1e-12`.
    pub fn read_csv<R: Read>(grid: Arc<WeightedGrid>, side: Side, input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut values = Vec::with_capacity(grid.len());
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() < 2 || record.len() > 3 {
                return Err(usage(format!("row {}: expected 2 or 3 columns, got {}", row + 1, record.len())));
            }
            let parse = |k: usize| -> Result<f64> {
                record[k]
                    .parse::<f64>()
                    .map_err(|e| usage(format!("row {}: column {}: {e}", row + 1, k + 1)))
            };
            let x = parse(0)?;
            let re = parse(1)?;
            let im = if record.len() == 3 { parse(2)? } else { 0.0 };
            let Some(&node) = grid.nodes.get(row) else {
                return Err(Error::GridMismatch(format!(
                    "more rows than the {} grid nodes",
                    grid.len()
                )));
            };
            if (x - node).abs() > 1e-12 * node.abs().max(1e-300) {
                return Err(Error::GridMismatch(format!(
                    "row {}: node {x} does not match grid node {node}",
                    row + 1
                )));
            }
            values.push(Complex64::new(re, im));
        }
        Self::new(grid, values, side)
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    // shortest round-trip representation
    format!("{v:?}")
}

/// Exponent of an `L^p` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(usage(format!("L^p exponent must satisfy p >= 1, got {p}")))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

/// `Σ w_i f(x_i)`.
pub fn integrate(f: &SampledFunction) -> Complex64 {
    f.grid
        .weights
        .iter()
        .zip(&f.values)
        .map(|(w, v)| v * *w)
        .sum()
}

/// `(∫|f|^p dμ)^{1/p}`, or `max |f(x_i)|` for `p = ∞`.
pub fn lp_norm(f: &SampledFunction, p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => f.max_abs(),
        Exponent::Finite(1.0) => f.grid.weights.iter().zip(&f.values).map(|(w, v)| w * v.norm()).sum(),
        Exponent::Finite(2.0) => f
            .grid
            .weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt(),
        Exponent::Finite(p) => f
            .grid
            .weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    }
}

/// Convenience wrapper taking a raw exponent.
pub fn lp_norm_p(f: &SampledFunction, p: f64) -> Result<f64> {
    Ok(lp_norm(f, Exponent::new(p)?))
}

/// `Σ w_i` over nodes where `|f(x_i)| > λ`.
pub fn distribution_mass(f: &SampledFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(usage(format!("distribution height must be positive, got {lambda}")));
    }
    Ok(f
        .grid
        .weights
        .iter()
        .zip(&f.values)
        .filter(|(_, v)| v.norm() > lambda)
        .map(|(w, _)| *w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(radius: f64, cells: usize, r: f64, scheme: Scheme) -> Arc<WeightedGrid> {
        Arc::new(build_grid(radius, cells, r, scheme).unwrap())
    }

    #[test]
    fn total_weight_examples() {
        let g = grid(10.0, 256, 1.0, Scheme::UniformCell);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 50.0).abs() < 1e-10 * 50.0);
        for scheme in [Scheme::UniformCell, Scheme::GeometricCell] {
            let g = grid(10.0, 256, 2.0, scheme);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1000.0 / 3.0).abs() < 1e-10 * 1000.0 / 3.0, "{scheme}: {s}");
        }
    }

    #[test]
    fn smallest_cell_contract() {
        let g = grid(1.0, 8, 1.0, Scheme::GeometricCell);
        assert_eq!(g.cells(), 8);
        assert!(g.smallest_cell() <= 1e-4);
        let g = grid(16.0, 256, 1.0, Scheme::GeometricCell);
        assert!(g.smallest_cell() <= 16.0 * 1e-4);
        assert!((g.edges().iter().last().unwrap() - 16.0).abs() < 1e-14);
    }

    #[test]
    fn invariants_of_nodes() {
        for scheme in [Scheme::UniformCell, Scheme::GeometricCell] {
            let g = grid(3.0, 40, 0.4, scheme);
            assert!(g.nodes().windows(2).all(|p| p[0] < p[1]));
            assert!(g.weights().iter().all(|&w| w > 0.0));
            assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() <= 3.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(1.0, 7, 1.0, Scheme::UniformCell).is_err());
        assert!(build_grid(0.0, 8, 1.0, Scheme::UniformCell).is_err());
        assert!(build_grid(1.0, 8, 0.0, Scheme::UniformCell).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = grid(10.0, 250, 1.0, Scheme::UniformCell);
        let zero = SampledFunction::zeros(Arc::clone(&g), Side::Physical);
        assert_eq!(integrate(&zero), Complex64::new(0.0, 0.0));
        let gauss = g.sample_real(Side::Physical, |x| (-0.5 * x * x).exp());
        assert!((integrate(&gauss).re - 1.0).abs() < 1e-8);
        // cell edges fall on 1.0, so the indicator is resolved exactly
        let ind = g.sample_real(Side::Physical, |x| if x < 1.0 { 1.0 } else { 0.0 });
        assert!((integrate(&ind).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refinement_converges() {
        let gauss = |g: &Arc<WeightedGrid>| integrate(&g.sample_real(Side::Physical, |x| (-0.5 * x * x).exp())).re;
        let a = gauss(&grid(10.0, 256, 1.0, Scheme::UniformCell));
        let b = gauss(&grid(10.0, 512, 1.0, Scheme::UniformCell));
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn norm_examples() {
        let g = grid(10.0, 250, 1.0, Scheme::UniformCell);
        let zero = SampledFunction::zeros(Arc::clone(&g), Side::Physical);
        for p in [1.0, 1.5, 2.0] {
            assert_eq!(lp_norm_p(&zero, p).unwrap(), 0.0);
        }
        assert_eq!(lp_norm(&zero, Exponent::Infinity), 0.0);
        let gauss = g.sample_real(Side::Physical, |x| (-0.5 * x * x).exp());
        assert!((lp_norm_p(&gauss, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
        let ind = g.sample_real(Side::Physical, |x| if x < 1.0 { 1.0 } else { 0.0 });
        assert!((lp_norm_p(&ind, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(lp_norm_p(&ind, 0.5).is_err());
    }

    #[test]
    fn distribution_examples() {
        let g = grid(10.0, 250, 1.0, Scheme::UniformCell);
        let ind = g.sample_real(Side::Physical, |x| if x < 1.0 { 1.0 } else { 0.0 });
        assert_eq!(distribution_mass(&ind, 2.0).unwrap(), 0.0);
        assert!((distribution_mass(&ind, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!(distribution_mass(&ind, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip_and_strict_nodes() {
        let g = grid(4.0, 8, 1.5, Scheme::GeometricCell);
        let f = g.sample(Side::Physical, |x| Complex64::new(x.sin(), x.cos()));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = SampledFunction::read_csv(Arc::clone(&g), Side::Physical, buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());

        let other = grid(4.0, 8, 1.5, Scheme::UniformCell);
        let err = SampledFunction::read_csv(other, Side::Physical, buf.as_slice()).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    proptest! {
        #[test]
        fn monomials_are_exact(k in 0usize..12, r in prop::sample::select(vec![1.0, 2.0, 3.0])) {
            let g = grid(2.0, 16, r, Scheme::UniformCell);
            let f = g.sample_real(Side::Physical, |x| x.powi(k as i32));
            let exact = 2f64.powf(k as f64 + r + 1.0) / (k as f64 + r + 1.0);
            prop_assert!(((integrate(&f).re - exact) / exact).abs() < 1e-12);
        }

        #[test]
        fn chebyshev_consistency(seed in 0u64..1000, lambda in 0.01f64..3.0) {
            let g = grid(5.0, 16, 1.3, Scheme::GeometricCell);
            let f = g.sample_real(Side::Physical, |x| ((seed as f64 + 1.0) * x).sin() * (-x).exp() * 3.0);
            let mass = distribution_mass(&f, lambda).unwrap();
            prop_assert!(lambda * mass <= lp_norm_p(&f, 1.0).unwrap() + 1e-12);
        }

        #[test]
        fn distribution_is_monotone(l1 in 0.01f64..2.0, dl in 0.0f64..2.0) {
            let g = grid(5.0, 16, 2.0, Scheme::UniformCell);
            let f = g.sample_real(Side::Physical, |x| 2.0 * (-(x - 1.0).powi(2)).exp());
            prop_assert!(distribution_mass(&f, l1).unwrap() >= distribution_mass(&f, l1 + dl).unwrap());
        }
    }
}
