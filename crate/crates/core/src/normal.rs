//! Standard normal density and distribution function.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF, accurate in both tails.
pub fn std_cdf(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn std_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Density of `N(mean, var)` at `x`.
pub fn pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((std_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((std_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_cdf(-3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-17);
        assert!((std_cdf(-5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
        assert_eq!(std_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn pdf_matches_standard() {
        assert!((pdf(1.3, 0.0, 1.0) - std_pdf(1.3)).abs() < 1e-16);
        assert!((pdf(3.0, 3.0, 4.0) - 1.0 / (8.0 * PI).sqrt()).abs() < 1e-16);
    }
}
