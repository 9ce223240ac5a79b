//! The Fourier–Bessel transform realized on a pair of quadrature grids.
//!
//! ```text
//! f̂(λ_j) = Σ_i w_i f(x_i) φ_{λ_j}(x_i)
//! f(x_i) = a(r)^{-2} Σ_j v_j f̂(λ_j) φ_{λ_j}(x_i)
//! ```
//!
//! The inverse carries `a(r)^{-2}`, the constant that makes the pair consistent
//! with `‖f‖₂ = a(r)^{-1} ‖f̂‖₂`; at `r = 1` both readings coincide (`a(1) = 1`).
//! Every plan checks the constant numerically on a Gaussian pair at build time.
//!
//! At `r = 2`, `φ_λ(x) = sin(λx)/(λx)`. On equispaced grids with `λ_k = kπ/R`
//! both sums are type-I sine transforms and the plan evaluates them by FFT
//! instead of storing the kernel.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustdct::{Dst1, DctPlanner};
use serde::{Deserialize, Serialize};

use crate::bessel::{Constants, Eigenfunctions};
use crate::error::{usage, Error, Result};
use crate::grid::{build_grid, lp_norm, Exponent, SampledFunction, Scheme, Side, WeightedGrid, GAUSS_ORDER};
use crate::measure::BesselSpace;

/// Relative tolerance of the build-time normalization check.
const CALIBRATION_TOLERANCE: f64 = 1e-6;

/// Grid parameters of a transform plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub r: f64,
    /// physical truncation radius `R`
    pub radius: f64,
    /// spectral truncation `Λ`
    pub bandwidth: f64,
    /// physical cells (8 nodes each)
    pub cells: usize,
    /// spectral cells (8 nodes each)
    pub spectral_cells: usize,
    pub physical_scheme: Scheme,
    pub spectral_scheme: Scheme,
}

impl PlanConfig {
    /// `R = 16`, `Λ = 32`, 2048 nodes on each side.
    pub fn standard(r: f64) -> Self {
        Self {
            r,
            radius: 16.0,
            bandwidth: 32.0,
            cells: 256,
            spectral_cells: 256,
            physical_scheme: Scheme::GeometricCell,
            spectral_scheme: Scheme::GeometricCell,
        }
    }

    /// A plan with `nodes` quadrature nodes per side (a multiple of 8).
    pub fn with_nodes(r: f64, radius: f64, bandwidth: f64, nodes: usize) -> Result<Self> {
        if !nodes.is_multiple_of(GAUSS_ORDER) {
            return Err(usage(format!("node count {nodes} is not a multiple of {GAUSS_ORDER}")));
        }
        Ok(Self {
            r,
            radius,
            bandwidth,
            cells: nodes / GAUSS_ORDER,
            spectral_cells: nodes / GAUSS_ORDER,
            ..Self::standard(r)
        })
    }

    /// The `r = 2` sine plan: `nodes` equispaced nodes on `(0, R)` and
    /// `λ_k = kπ/R`, so `Λ = π(nodes+1)/R`.
    pub fn sine(radius: f64, nodes: usize) -> Self {
        Self {
            r: 2.0,
            radius,
            bandwidth: std::f64::consts::PI * (nodes + 1) as f64 / radius,
            cells: nodes,
            spectral_cells: nodes,
            physical_scheme: Scheme::UniformNode,
            spectral_scheme: Scheme::UniformNode,
        }
    }

    /// Quadrature nodes on the physical side.
    pub fn physical_nodes(&self) -> usize {
        match self.physical_scheme {
            Scheme::UniformNode => self.cells,
            _ => self.cells * GAUSS_ORDER,
        }
    }

    pub fn build(&self) -> Result<TransformPlan> {
        let physical = build_grid(self.radius, self.cells, self.r, self.physical_scheme)?;
        let spectral = build_grid(self.bandwidth, self.spectral_cells, self.r, self.spectral_scheme)?;
        TransformPlan::new(Arc::new(physical), Arc::new(spectral))
    }
}

/// Outcome of the build-time normalization check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationCheck {
    /// Gaussian scale used for the check
    pub scale: f64,
    /// `⟨f, inverse(forward f)⟩ / ⟨f, f⟩`, ideally 1
    pub round_trip_ratio: f64,
    /// maximum of `|f̂ - a(r) s^n e^{-s²λ²/2}|` relative to `a(r) s^n`
    pub forward_defect: f64,
    /// the inversion constant in use, `a(r)^{-2}`
    pub inversion_constant: f64,
}

#[derive(Clone)]
enum Backend {
    /// row-major, `spectral.len()` rows of `physical.len()` entries
    Dense(Vec<f64>),
    Sine(Arc<dyn Dst1<f64>>),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Dense(k) => write!(f, "Dense({} entries)", k.len()),
            Backend::Sine(d) => write!(f, "Sine({})", d.len()),
        }
    }
}

/// Whether the grid pair is the `r = 2` sine pair.
fn is_sine_pair(physical: &WeightedGrid, spectral: &WeightedGrid) -> bool {
    let n = physical.len();
    physical.r() == 2.0
        && physical.scheme() == Scheme::UniformNode
        && spectral.scheme() == Scheme::UniformNode
        && spectral.len() == n
        && ((physical.radius() * spectral.radius()) / (std::f64::consts::PI * (n + 1) as f64) - 1.0).abs() < 1e-12
}

/// Two grids sharing `r`, with the kernel `φ_{λ_j}(x_i)` cached or, for the
/// sine pair, applied by FFT.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    space: BesselSpace,
    constants: Constants,
    physical: Arc<WeightedGrid>,
    spectral: Arc<WeightedGrid>,
    backend: Backend,
    inversion_constant: f64,
    check: NormalizationCheck,
}

impl TransformPlan {
    pub fn new(physical: Arc<WeightedGrid>, spectral: Arc<WeightedGrid>) -> Result<Self> {
        if physical.r() != spectral.r() {
            return Err(usage(format!(
                "physical grid has r = {} but spectral grid has r = {}",
                physical.r(),
                spectral.r()
            )));
        }
        let space = BesselSpace::new(physical.r())?;
        let constants = Constants::new(space.r());
        let backend = if is_sine_pair(&physical, &spectral) {
            Backend::Sine(DctPlanner::new().plan_dst1(physical.len()))
        } else {
            let phi = Eigenfunctions::new(space);
            let cols = physical.len();
            let mut kernel = vec![0.0; spectral.len() * cols];
            kernel
                .par_chunks_mut(cols)
                .zip(spectral.nodes().par_iter())
                .for_each(|(row, &lambda)| {
                    for (k, &x) in row.iter_mut().zip(physical.nodes()) {
                        *k = phi.value(lambda, x);
                    }
                });
            Backend::Dense(kernel)
        };
        let mut plan = Self {
            space,
            constants,
            physical,
            spectral,
            backend,
            inversion_constant: constants.a_r.powi(-2),
            check: NormalizationCheck {
                scale: 0.0,
                round_trip_ratio: f64::NAN,
                forward_defect: f64::NAN,
                inversion_constant: f64::NAN,
            },
        };
        plan.check = plan.verify_normalization()?;
        Ok(plan)
    }

    pub fn space(&self) -> BesselSpace {
        self.space
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn physical(&self) -> &Arc<WeightedGrid> {
        &self.physical
    }

    pub fn spectral(&self) -> &Arc<WeightedGrid> {
        &self.spectral
    }

    pub fn inversion_constant(&self) -> f64 {
        self.inversion_constant
    }

    pub fn normalization(&self) -> NormalizationCheck {
        self.check
    }

    /// `φ_{λ_j}(x_i)`.
    pub fn kernel_entry(&self, j: usize, i: usize) -> f64 {
        match &self.backend {
            Backend::Dense(kernel) => kernel[j * self.physical.len() + i],
            Backend::Sine(_) => {
                let t = self.spectral.nodes()[j] * self.physical.nodes()[i];
                t.sin() / t
            }
        }
    }

    /// Whether the plan applies the kernel by FFT.
    pub fn is_fast(&self) -> bool {
        matches!(self.backend, Backend::Sine(_))
    }

    /// `Σ_j t_j sin(π (j+1)(k+1)/(N+1))` on real and imaginary parts.
    fn sine_sum(dst: &Arc<dyn Dst1<f64>>, t: &[Complex64]) -> Vec<Complex64> {
        let mut re: Vec<f64> = t.iter().map(|v| v.re).collect();
        let mut im: Vec<f64> = t.iter().map(|v| v.im).collect();
        dst.process_dst1(&mut re);
        dst.process_dst1(&mut im);
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    fn check_physical(&self, f: &SampledFunction) -> Result<()> {
        if f.side() != Side::Physical {
            return Err(Error::GridMismatch("expected a physical-side function".into()));
        }
        if !(Arc::ptr_eq(f.grid(), &self.physical) || **f.grid() == *self.physical) {
            return Err(Error::GridMismatch("function is not on the plan's physical grid".into()));
        }
        Ok(())
    }

    fn check_spectral(&self, g: &SampledFunction) -> Result<()> {
        if g.side() != Side::Spectral {
            return Err(Error::GridMismatch("expected a spectral-side function".into()));
        }
        if !(Arc::ptr_eq(g.grid(), &self.spectral) || **g.grid() == *self.spectral) {
            return Err(Error::GridMismatch("function is not on the plan's spectral grid".into()));
        }
        Ok(())
    }

    /// Physical samples of `f`.
    pub fn physical_function<F: Fn(f64) -> Complex64>(&self, f: F) -> SampledFunction {
        self.physical.sample(Side::Physical, f)
    }

    /// Spectral samples of `g`.
    pub fn spectral_function<F: Fn(f64) -> Complex64>(&self, g: F) -> SampledFunction {
        self.spectral.sample(Side::Spectral, g)
    }

    /// `f̂(λ_j) = Σ_i w_i f(x_i) φ_{λ_j}(x_i)`.
    pub fn forward(&self, f: &SampledFunction) -> Result<SampledFunction> {
        self.check_physical(f)?;
        let weighted: Vec<Complex64> = f
            .values()
            .iter()
            .zip(self.physical.weights())
            .map(|(v, w)| v * *w)
            .collect();
        let kernel = match &self.backend {
            Backend::Dense(kernel) => kernel,
            Backend::Sine(dst) => {
                // w_i φ(λx_i) = (w_i / (λ x_i)) sin(λ x_i)
                let t: Vec<Complex64> = weighted.iter().zip(self.physical.nodes()).map(|(u, &x)| u / x).collect();
                let values = Self::sine_sum(dst, &t)
                    .into_iter()
                    .zip(self.spectral.nodes())
                    .map(|(v, &l)| v / l)
                    .collect();
                return Ok(SampledFunction::from_parts(Arc::clone(&self.spectral), values, Side::Spectral));
            }
        };
        let cols = self.physical.len();
        let values: Vec<Complex64> = kernel
            .par_chunks(cols)
            .map(|row| {
                let (mut re, mut im) = (0.0, 0.0);
                for (k, u) in row.iter().zip(&weighted) {
                    re += k * u.re;
                    im += k * u.im;
                }
                Complex64::new(re, im)
            })
            .collect();
        Ok(SampledFunction::from_parts(Arc::clone(&self.spectral), values, Side::Spectral))
    }

    /// `f(x_i) = a(r)^{-2} Σ_j v_j g(λ_j) φ_{λ_j}(x_i)`.
    pub fn inverse(&self, g: &SampledFunction) -> Result<SampledFunction> {
        self.check_spectral(g)?;
        let c = self.inversion_constant;
        let weighted: Vec<Complex64> = g
            .values()
            .iter()
            .zip(self.spectral.weights())
            .map(|(v, w)| v * (*w * c))
            .collect();
        Ok(SampledFunction::from_parts(
            Arc::clone(&self.physical),
            self.transpose_apply(&weighted),
            Side::Physical,
        ))
    }

    /// `Kᵀ t`, split over column blocks.
    fn transpose_apply(&self, t: &[Complex64]) -> Vec<Complex64> {
        const BLOCK: usize = 256;
        let kernel = match &self.backend {
            Backend::Dense(kernel) => kernel,
            Backend::Sine(dst) => {
                let s: Vec<Complex64> = t.iter().zip(self.spectral.nodes()).map(|(v, &l)| v / l).collect();
                return Self::sine_sum(dst, &s)
                    .into_iter()
                    .zip(self.physical.nodes())
                    .map(|(v, &x)| v / x)
                    .collect();
            }
        };
        let cols = self.physical.len();
        let mut out = vec![Complex64::new(0.0, 0.0); cols];
        out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
            let start = b * BLOCK;
            let width = chunk.len();
            let mut re = vec![0.0; width];
            let mut im = vec![0.0; width];
            for (j, tj) in t.iter().enumerate() {
                if tj.re == 0.0 && tj.im == 0.0 {
                    continue;
                }
                let row = &kernel[j * cols + start..j * cols + start + width];
                for ((k, a), b) in row.iter().zip(re.iter_mut()).zip(im.iter_mut()) {
                    *a += k * tj.re;
                    *b += k * tj.im;
                }
            }
            for ((o, a), b) in chunk.iter_mut().zip(re).zip(im) {
                *o = Complex64::new(a, b);
            }
        });
        out
    }

    /// `| ‖f‖₂ - a(r)^{-1} ‖f̂‖₂ | / ‖f‖₂`.
    pub fn plancherel_defect(&self, f: &SampledFunction) -> Result<f64> {
        self.check_physical(f)?;
        let norm = lp_norm(f, Exponent::Finite(2.0));
        if norm == 0.0 {
            return Err(Error::UndefinedRatio("Plancherel defect of the zero function".into()));
        }
        let spectral = lp_norm(&self.forward(f)?, Exponent::Finite(2.0));
        Ok((norm - spectral / self.constants.a_r).abs() / norm)
    }

    /// Largest `|f̂|` on the outermost spectral cell relative to `max |f̂|`.
    pub fn spectral_tail(&self, f: &SampledFunction) -> Result<f64> {
        let hat = self.forward(f)?;
        let peak = hat.max_abs();
        if peak == 0.0 {
            return Ok(0.0);
        }
        let n = hat.len();
        let edge = hat.values()[n - GAUSS_ORDER..]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        Ok(edge / peak)
    }

    /// Round-trips `e^{-x²/(2s²)}` with `s` the geometric mean of the largest
    /// scale the physical grid holds (`R/8`) and the smallest the spectral
    /// grid resolves (`6/Λ`).
    fn verify_normalization(&self) -> Result<NormalizationCheck> {
        let radius = self.physical.radius();
        let bandwidth = self.spectral.radius();
        let scale = ((radius / 8.0) * (6.0 / bandwidth)).sqrt();
        let n = self.space.n();
        let f = self.physical_function(|x| Complex64::new((-0.5 * (x / scale).powi(2)).exp(), 0.0));
        let hat = self.forward(&f)?;
        let amp = self.constants.a_r * scale.powf(n);
        let forward_defect = hat
            .values()
            .iter()
            .zip(self.spectral.nodes())
            .map(|(v, &l)| (v.re - amp * (-0.5 * (scale * l).powi(2)).exp()).abs())
            .fold(0.0, f64::max)
            / amp;
        let back = self.inverse(&hat)?;
        let num: f64 = f
            .values()
            .iter()
            .zip(back.values())
            .zip(self.physical.weights())
            .map(|((a, b), w)| w * a.re * b.re)
            .sum();
        let den: f64 = f
            .values()
            .iter()
            .zip(self.physical.weights())
            .map(|(a, w)| w * a.re * a.re)
            .sum();
        let ratio = num / den;
        let check = NormalizationCheck {
            scale,
            round_trip_ratio: ratio,
            forward_defect,
            inversion_constant: self.inversion_constant,
        };
        let resolvable = radius * bandwidth >= 48.0;
        if resolvable && (ratio - 1.0).abs() > CALIBRATION_TOLERANCE {
            return Err(Error::Calibration(format!(
                "Gaussian round trip at scale {scale:.4} returned ratio {ratio:.9} (inversion constant {:.6e})",
                self.inversion_constant
            )));
        }
        Ok(check)
    }
}
