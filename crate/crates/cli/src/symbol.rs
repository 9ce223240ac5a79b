//! Multiplier vocabulary: `identity`, `heat:t`, `imaginary-power:α`,
//! `power:k`, `mollifier:t`, and products `a*b`.

use std::sync::Arc;

use bessel_calculus::calculus::{build_mollifier, Multiplier};
use bessel_calculus::error::{Error, Result};

pub const DEFAULT_XI_MAX: f64 = 256.0;

fn number(term: &str, arg: Option<&str>) -> Result<f64> {
    let arg = arg.ok_or_else(|| Error::Usage(format!("'{term}' needs a parameter")))?;
    let v: f64 = arg
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("'{term}': '{arg}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Usage(format!("'{term}': parameter must be finite")));
    }
    Ok(v)
}

fn factor(term: &str, xi_max: f64) -> Result<Multiplier> {
    let (kind, arg) = match term.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a)),
        None => (term.trim(), None),
    };
    match kind {
        "identity" | "1" => Ok(Multiplier::identity()),
        "heat" => {
            let t = number(term, arg)?;
            if t < 0.0 {
                return Err(Error::Usage(format!("'{term}': heat time must be non-negative")));
            }
            Ok(Multiplier::heat(t))
        }
        "imaginary-power" | "ipow" => Ok(Multiplier::imaginary_power(number(term, arg)?)),
        "power" => Ok(Multiplier::power(number(term, arg)?)),
        "mollifier" => {
            let t = number(term, arg)?;
            Ok(Multiplier::mollifier(Arc::new(build_mollifier(xi_max)?), t))
        }
        other => Err(Error::Usage(format!("unknown multiplier '{other}'"))),
    }
}

/// Parses a product of factors; `xi_max` sizes mollifier tables.
pub fn parse(s: &str, xi_max: f64) -> Result<Multiplier> {
    let mut terms = s.split('*');
    let first = factor(terms.next().unwrap_or(""), xi_max)?;
    terms.try_fold(first, |acc, t| Ok(acc.product(&factor(t, xi_max)?)))
}

/// True when the symbol needs a mollifier table.
pub fn uses_mollifier(s: &str) -> bool {
    s.split('*').any(|t| t.trim().starts_with("mollifier"))
}
