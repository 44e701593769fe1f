//! Error-function family.
//!
//! `erf`/`erfc` come from `libm` (the musl implementation, accurate to about
//! one ulp over the whole real line). The inverse is only needed for Lévy
//! medians and is computed by Newton iteration on `erfc`.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `P(Z > x)` of the standard normal.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of `erfc` on (0, 2).
pub fn erfc_inv(y: f64) -> f64 {
    assert!(y > 0.0 && y < 2.0, "erfc_inv argument {y} outside (0, 2)");
    // Crude start from the logistic-like approximation, then Newton.
    let mut x = if y < 1.0 {
        (-(y / 2.0).ln()).sqrt() * 0.9
    } else {
        -(-((2.0 - y) / 2.0).ln()).sqrt() * 0.9
    };
    for _ in 0..60 {
        let f = erfc(x) - y;
        let df = -FRAC_2_SQRT_PI * (-x * x).exp();
        let step = f / df;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Values from high-precision tables.
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((erfc(0.396_775_415_668_094_8) - 0.574_712_207_854_928_5).abs() < 1e-15);
        assert!((erfc(3.0) - 2.209_049_699_858_544e-5).abs() / 2.209e-5 < 1e-12);
        assert_eq!(erfc(f64::INFINITY), 0.0);
        assert_eq!(erf(0.0), 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        for &y in &[1e-10, 0.01, 0.5, 1.0, 1.3, 1.999] {
            let x = erfc_inv(y);
            assert!((erfc(x) - y).abs() <= 1e-13 * y.max(1e-3), "y={y}");
        }
        assert!((erfc_inv(0.5) - 0.476_936_276_204_469_9).abs() < 1e-14);
    }
}
