//! Bessel functions of the first kind and the eigenfunctions of the Bessel
//! operator `L = -d²/dx² - (r/x) d/dx`.
//!
//! `J_ν(z)` is evaluated in three regimes:
//!
//! * `z ≤ 12`: the ascending power series (cancellation stays below four digits);
//! * `12 < z < z_asym(ν)`: Steed's continued fractions (CF1 for `J'_ν/J_ν`, CF2
//!   for `p + iq`) normalized through the Wronskian;
//! * `z ≥ z_asym(ν)`: Hankel's asymptotic expansion, truncated at its smallest term.
//!
//! The normalized eigenfunction `φ_λ(x) = Γ(ν+1) (2/(λx))^ν J_ν(λx)` with
//! `ν = (r-1)/2` satisfies `L φ_λ = λ² φ_λ` and `φ_λ(0) = 1`.

pub mod gamma;

use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{usage, Error, Result};
use crate::measure::BesselSpace;

pub use gamma::{gamma, ln_gamma};

const SERIES_LIMIT: f64 = 12.0;
const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Closed {
    /// ν = -1/2: J = sqrt(2/(πz)) cos z
    MinusHalf,
    /// ν = 1/2: J = sqrt(2/(πz)) sin z
    Half,
    None,
}

/// Evaluator for `J_ν` at a fixed order, with the order-dependent constants cached.
#[derive(Debug, Clone)]
pub struct BesselEvaluator {
    nu: f64,
    gamma_nu1: f64,
    mu: f64,
    z_asym: f64,
    closed: Closed,
}

impl BesselEvaluator {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < -0.5 {
            return Err(Error::UnsupportedOrder(nu));
        }
        let closed = if nu == -0.5 {
            Closed::MinusHalf
        } else if nu == 0.5 {
            Closed::Half
        } else {
            Closed::None
        };
        Ok(Self {
            nu,
            gamma_nu1: gamma(nu + 1.0),
            mu: 4.0 * nu * nu,
            // the Hankel series reaches 1e-16 before diverging once z > ~ν²/2 + 25
            z_asym: 25.0 + 0.5 * nu * nu,
            closed,
        })
    }

    pub fn order(&self) -> f64 {
        self.nu
    }

    /// `J_ν(z)` for `z ≥ 0`. Returns `+∞` at `z = 0` for negative orders.
    pub fn j(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        if z == 0.0 {
            return if self.nu == 0.0 {
                1.0
            } else if self.nu > 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        match self.closed {
            Closed::Half => return (FRAC_2_PI / z).sqrt() * z.sin(),
            Closed::MinusHalf => return (FRAC_2_PI / z).sqrt() * z.cos(),
            Closed::None => {}
        }
        if z <= SERIES_LIMIT {
            (0.5 * z).powf(self.nu) / self.gamma_nu1 * self.reduced_series(z)
        } else if z < self.z_asym {
            steed(self.nu, z)
        } else {
            hankel_asymptotic(self.mu, self.nu, z)
        }
    }

    /// `Γ(ν+1) (2/z)^ν J_ν(z)`, continuous at `z = 0` with value 1.
    pub fn normalized(&self, z: f64) -> f64 {
        debug_assert!(z >= 0.0);
        if z == 0.0 {
            return 1.0;
        }
        match self.closed {
            Closed::Half => return z.sin() / z,
            Closed::MinusHalf => return z.cos(),
            Closed::None => {}
        }
        if z <= SERIES_LIMIT {
            self.reduced_series(z)
        } else {
            self.gamma_nu1 * (2.0 / z).powf(self.nu) * self.j(z)
        }
    }

    /// Σ_k (-z²/4)^k / (k! (ν+1)_k)
    fn reduced_series(&self, z: f64) -> f64 {
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * (self.nu + k));
            sum += term;
            if term.abs() <= EPS * sum.abs().max(1e-300) && k > 0.5 * z {
                break;
            }
            k += 1.0;
        }
        sum
    }
}

/// Hankel's expansion `J_ν(z) ~ sqrt(2/(πz)) (P cos χ - Q sin χ)`.
fn hankel_asymptotic(mu: f64, nu: f64, z: f64) -> f64 {
    let eight_z = 8.0 * z;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * eight_z);
        if next.abs() > prev || next == 0.0 {
            break;
        }
        prev = next.abs();
        term = next;
        // t1 → Q(+), t2 → P(-), t3 → Q(-), t4 → P(+), ...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = z - (0.5 * nu + 0.25) * PI;
    (FRAC_2_PI / z).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Steed's method for `x ≥ 2` (continued fractions CF1 and CF2).
fn steed(nu: f64, x: f64) -> f64 {
    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1: f_ν = J'_ν / J_ν by modified Lentz
    let mut isign = 1.0;
    let mut h = nu * xi;
    if h.abs() < FPMIN {
        h = FPMIN;
    }
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }

    // downward recurrence from ν to μ = ν - nl
    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let tmp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * tmp - rjl;
        rjl = tmp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    // CF2: p + iq by modified Lentz
    let mut a = 0.25 - xmu2;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    for i in 2..MAX_ITER {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        tmp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = tmp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    rjl1 * (rjmu / rjl)
}

/// `J_ν(z)` for `ν ≥ -1/2`, `z ≥ 0`.
pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(usage(format!("bessel_j requires finite z >= 0, got {z}")));
    }
    Ok(BesselEvaluator::new(nu)?.j(z))
}

/// The normalization constants `a(r)` and `c(r)` of the Fourier–Bessel
/// transform and of the translation measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// `a(r) = 2^{(r-1)/2} Γ((r+1)/2)`
    pub a_r: f64,
    /// `c(r) = 2^{r-2} Γ((r+1)/2) / (Γ(r/2) √π)`
    pub c_r: f64,
}

impl Constants {
    pub fn new(r: f64) -> Self {
        let g = gamma(0.5 * (r + 1.0));
        Self {
            a_r: 2f64.powf(0.5 * (r - 1.0)) * g,
            c_r: 2f64.powf(r - 2.0) * g / (gamma(0.5 * r) * PI.sqrt()),
        }
    }
}

/// The eigenfunctions `φ_λ` of the Bessel operator for one weight exponent.
#[derive(Debug, Clone)]
pub struct Eigenfunctions {
    space: BesselSpace,
    eval: BesselEvaluator,
}

impl Eigenfunctions {
    pub fn new(space: BesselSpace) -> Self {
        // r > 0 guarantees ν > -1/2
        let eval = BesselEvaluator::new(space.nu()).expect("order (r-1)/2 > -1/2");
        Self { space, eval }
    }

    pub fn space(&self) -> BesselSpace {
        self.space
    }

    /// `φ_λ(x)` without argument checks; used in the transform kernels.
    #[inline]
    pub fn value(&self, lambda: f64, x: f64) -> f64 {
        self.eval.normalized(lambda * x)
    }
}

/// `φ_λ(x) = a(r) (λx)^{-(r-1)/2} J_{(r-1)/2}(λx)`, with `φ_λ(0) = 1`.
pub fn phi_lambda(space: BesselSpace, lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(usage(format!("phi_lambda requires λ > 0, got {lambda}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(usage(format!("phi_lambda requires x >= 0, got {x}")));
    }
    Ok(Eigenfunctions::new(space).value(lambda, x))
}

/// `|L φ_λ - λ² φ_λ|(x)` with centered second-order differences of step `h`.
pub fn eigen_residual(space: BesselSpace, lambda: f64, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(usage(format!("step must be positive, got {h}")));
    }
    if x <= 2.0 * h {
        return Err(Error::StepTooLarge { x, h });
    }
    if !(lambda > 0.0) {
        return Err(usage(format!("eigen_residual requires λ > 0, got {lambda}")));
    }
    let phi = Eigenfunctions::new(space);
    let fm = phi.value(lambda, x - h);
    let f0 = phi.value(lambda, x);
    let fp = phi.value(lambda, x + h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    let d1 = (fp - fm) / (2.0 * h);
    Ok((-d2 - space.r() / x * d1 - lambda * lambda * f0).abs())
}
