//! Geometry of the half-line `X = (0, ∞)` with the power-weight measure
//! `dμ(x) = x^r dx`: intervals, volumes, doubling ratios and dyadic annuli.

use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};

/// The space `((0,∞), |·|, x^r dx)` with homogeneous dimension `n = r + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselSpace {
    r: f64,
}

impl BesselSpace {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(usage(format!("weight exponent r must be positive and finite, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Homogeneous dimension `n = r + 1`.
    pub fn n(&self) -> f64 {
        self.r + 1.0
    }

    /// Bessel order `ν = (r - 1)/2` of the eigenfunctions.
    pub fn nu(&self) -> f64 {
        0.5 * (self.r - 1.0)
    }

    /// `μ((a, b))` for `0 ≤ a ≤ b`.
    pub fn measure_between(&self, a: f64, b: f64) -> f64 {
        let n = self.n();
        (b.powf(n) - a.powf(n)) / n
    }
}

/// The open interval `I_a(x)` of center `x` and radius `a`, clipped to `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub center: f64,
    pub radius: f64,
}

impl Interval {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(center > 0.0) || !center.is_finite() {
            return Err(usage(format!("interval center must be positive, got {center}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(usage(format!("interval radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Same center, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            center: self.center,
            radius: self.radius * factor,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.center - self.radius).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.center + self.radius
    }

    pub fn contains(&self, x: f64) -> bool {
        x > 0.0 && (x - self.center).abs() < self.radius
    }
}

/// `μ(I)` in closed form.
pub fn ball_volume(space: BesselSpace, interval: &Interval) -> Result<f64> {
    if !interval.center.is_finite() || !interval.radius.is_finite() {
        return Err(domain("interval with non-finite center or radius"));
    }
    if interval.radius <= 0.0 {
        return Ok(0.0);
    }
    Ok(space.measure_between(interval.lower(), interval.upper()))
}

/// `max μ(2I)/μ(I)` over the sample intervals.
pub fn doubling_constant(space: BesselSpace, samples: &[Interval]) -> Result<f64> {
    if samples.is_empty() {
        return Err(usage("doubling_constant needs at least one interval"));
    }
    let mut worst: f64 = 0.0;
    for interval in samples {
        let v = ball_volume(space, interval)?;
        if v <= 0.0 {
            return Err(domain("interval of zero measure"));
        }
        worst = worst.max(ball_volume(space, &interval.scaled(2.0))? / v);
    }
    Ok(worst)
}

/// A region of the half-line: a union of at most two disjoint open intervals
/// `(lo, hi)`, stored in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub pieces: Vec<(f64, f64)>,
}

impl Region {
    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(lo, hi)| x > lo && x < hi)
    }

    pub fn measure(&self, space: BesselSpace) -> f64 {
        self.pieces
            .iter()
            .map(|&(lo, hi)| space.measure_between(lo, hi))
            .sum()
    }
}

/// `S_0(I) = I`, `S_j(I) = 2^j I \ 2^{j-1} I` for `j ≥ 1`, clipped to `(0, ∞)`.
///
/// The removed interval is half-open on the outside so that consecutive annuli
/// tile `2^J I ∩ (0,∞)` without gaps; boundary points of measure zero are
/// assigned to the outer annulus.
pub fn dyadic_annulus(interval: &Interval, j: u32) -> Region {
    let outer = interval.scaled(2f64.powi(j as i32));
    if j == 0 {
        return Region {
            pieces: vec![(outer.lower(), outer.upper())],
        };
    }
    let inner = interval.scaled(2f64.powi(j as i32 - 1));
    let mut pieces = Vec::with_capacity(2);
    if inner.lower() > outer.lower() {
        pieces.push((outer.lower(), inner.lower()));
    }
    pieces.push((inner.upper(), outer.upper()));
    Region { pieces }
}

/// Which annulus `S_j(I)` contains `x`, or `None` when `x` lies on a boundary.
pub fn annulus_index(interval: &Interval, x: f64) -> Option<u32> {
    if x <= 0.0 {
        return None;
    }
    let d = (x - interval.center).abs();
    if d < interval.radius {
        return Some(0);
    }
    let ratio = d / interval.radius;
    let j = ratio.log2().floor() as i64 + 1;
    let j = j.max(1) as u32;
    // guard against rounding on the boundaries
    (0..=j + 1).find(|&k| dyadic_annulus(interval, k).contains(x))
}
