//! Gauss rules on `[-1, 1]`, nodes sorted ascending.

use std::num::NonZeroUsize;

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

fn sorted(mut pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Gauss–Legendre with `order` points.
pub(crate) fn legendre(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
    sorted(rule.as_node_weight_pairs().to_vec())
}

/// Gauss–Jacobi for the weight `(1-t)^alpha (1+t)^beta`, both exponents `> -1`.
pub(crate) fn jacobi(order: usize, alpha: f64, beta: f64) -> Vec<(f64, f64)> {
    let rule = GaussJacobi::new(
        NonZeroUsize::new(order).expect("order > 0"),
        FiniteAboveNegOneF64::new(alpha).expect("alpha > -1"),
        FiniteAboveNegOneF64::new(beta).expect("beta > -1"),
    );
    sorted(rule.as_node_weight_pairs().to_vec())
}
