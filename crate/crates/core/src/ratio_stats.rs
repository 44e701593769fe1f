//! Distribution of the ratio `η = X/Y` of two independent noncentral
//! Gaussians.
//!
//! Three analytic forms are provided: the exact density, the closed-form
//! "solid" approximation (density and CDF) parameterised by `(p, q, r)`, and
//! a plain Gaussian approximation. [`sample_ratio`] is the empirical oracle.
//!
//! The solid CDF is `½·(1 + erf(g(η))/erf(q))` with
//! `g(η) = p·(η/r − 1)/√(1 + (p²/q²)(η²/r²))`, and the density is its
//! derivative. `g` has a minimum of `−√(p² + q²)` at `η = −r·q²/p²`, so the
//! raw expression dips below zero in the far negative tail. Both functions
//! are therefore cut at [`SolidParams::support_floor`], the point where the
//! raw CDF first reaches zero; the truncated pair is a proper distribution
//! with the same values everywhere above the floor.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ArrivalMoments;
use crate::error::{Error, Result};
use crate::special::erf;

/// Means and standard deviations of the numerator `X` and denominator `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPair {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaussPair {
    pub fn new(mu_x: f64, mu_y: f64, sigma_x: f64, sigma_y: f64) -> Result<Self> {
        if !(sigma_x > 0.0 && sigma_y > 0.0) {
            return Err(Error::invalid(format!(
                "standard deviations must be positive, got {sigma_x} and {sigma_y}"
            )));
        }
        if !(mu_x.is_finite() && mu_y.is_finite() && sigma_x.is_finite() && sigma_y.is_finite()) {
            return Err(Error::invalid("Gaussian pair parameters must be finite"));
        }
        Ok(GaussPair {
            mu_x,
            mu_y,
            sigma_x,
            sigma_y,
        })
    }

    /// Pair for `numerator / denominator` arrival counts.
    pub fn from_moments(numerator: ArrivalMoments, denominator: ArrivalMoments) -> Result<Self> {
        GaussPair::new(numerator.mu, denominator.mu, numerator.var.sqrt(), denominator.var.sqrt())
    }

    /// `mu_y / sigma_y`; values below about 2 put noticeable mass near a
    /// zero denominator, where none of the approximations hold.
    pub fn denominator_snr(&self) -> f64 {
        self.mu_y / self.sigma_y
    }
}

/// The `(p, q, r)` triple of the solid approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidParams {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl SolidParams {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && r > 0.0) || !(p.is_finite() && q.is_finite() && r.is_finite()) {
            return Err(Error::invalid(format!("solid parameters must be positive, got p={p} q={q} r={r}")));
        }
        Ok(SolidParams { p, q, r })
    }

    /// `p = µx/(√2σx)`, `q = µy/(√2σy)`, `r = µx/µy`. Both means must be positive.
    pub fn from_pair(pair: &GaussPair) -> Result<Self> {
        SolidParams::new(
            pair.mu_x / (SQRT_2 * pair.sigma_x),
            pair.mu_y / (SQRT_2 * pair.sigma_y),
            pair.mu_x / pair.mu_y,
        )
    }

    /// Lower end of the support, `r·(1 − q²/p²)/2`; the raw CDF equals zero here.
    pub fn support_floor(&self) -> f64 {
        let k = self.q * self.q / (self.p * self.p);
        0.5 * self.r * (1.0 - k)
    }

    /// Rough spread of the distribution, `r·√(1/(2p²) + 1/(2q²))`.
    pub fn spread(&self) -> f64 {
        self.r * (0.5 / (self.p * self.p) + 0.5 / (self.q * self.q)).sqrt()
    }

    #[inline]
    fn g(&self, eta: f64) -> f64 {
        let u = eta / self.r;
        let k = self.p * self.p / (self.q * self.q);
        self.p * (u - 1.0) / (1.0 + k * u * u).sqrt()
    }
}

/// Exact density of `X/Y` for independent Gaussians (Hinkley's form).
pub fn exact_ratio_pdf(eta: f64, pair: &GaussPair) -> f64 {
    let GaussPair {
        mu_x,
        mu_y,
        sigma_x: sx,
        sigma_y: sy,
    } = *pair;
    let a2 = eta * eta / (sx * sx) + 1.0 / (sy * sy);
    let a = a2.sqrt();
    let b = mu_x / (sx * sx) * eta + mu_y / (sy * sy);
    let c = mu_x * mu_x / (sx * sx) + mu_y * mu_y / (sy * sy);
    // (b² − c·a²)/(2a²), written to avoid overflow in b² and c·a².
    let expo = 0.5 * (b * b / a2 - c);
    let d = expo.exp();
    let ratio = b / a;
    let central = b * d / (a2 * a * (2.0 * PI).sqrt() * sx * sy) * erf(ratio / SQRT_2);
    let tail = (-0.5 * c).exp() / (a2 * PI * sx * sy);
    (central + tail).max(0.0)
}

/// Solid-approximation density.
pub fn solid_ratio_pdf(eta: f64, sp: &SolidParams) -> f64 {
    if eta < sp.support_floor() {
        return 0.0;
    }
    let SolidParams { p, q, r } = *sp;
    let u = eta / r;
    let k = p * p / (q * q);
    let w = 1.0 + k * u * u;
    let num = 1.0 + k * u;
    let g = p * (u - 1.0) / w.sqrt();
    let v = p / (r * PI.sqrt() * erf(q)) * num / (w * w.sqrt()) * (-g * g).exp();
    v.max(0.0)
}

/// Solid-approximation CDF `P(η < eta0)`.
pub fn solid_ratio_cdf(eta0: f64, sp: &SolidParams) -> f64 {
    if eta0 == f64::INFINITY {
        return 1.0;
    }
    if eta0 < sp.support_floor() {
        return 0.0;
    }
    (0.5 * (1.0 + erf(sp.g(eta0)) / erf(sp.q))).clamp(0.0, 1.0)
}

/// Solid CDF written directly in the moments of numerator and denominator:
/// `g = (µy·η − µx)/√(2(σx² + σy²η²))`. Identical to [`solid_ratio_cdf`]
/// for positive means; used by the BER enumeration.
pub fn solid_ratio_cdf_moments(eta0: f64, num: ArrivalMoments, den: ArrivalMoments) -> f64 {
    if eta0 == f64::INFINITY {
        return 1.0;
    }
    if eta0 == f64::NEG_INFINITY {
        return 0.0;
    }
    if num.mu <= 0.0 || den.mu <= 0.0 || num.var <= 0.0 || den.var <= 0.0 {
        return degenerate_ratio_cdf(eta0, num, den);
    }
    let floor = 0.5 * (num.mu / den.mu) * (1.0 - (den.mu * den.mu * num.var) / (num.mu * num.mu * den.var));
    if eta0 < floor {
        return 0.0;
    }
    let g = (den.mu * eta0 - num.mu) / (2.0 * (num.var + den.var * eta0 * eta0)).sqrt();
    let q = den.mu / (2.0 * den.var).sqrt();
    (0.5 * (1.0 + erf(g) / erf(q))).clamp(0.0, 1.0)
}

// Zero-variance or zero-mean corner cases (e.g. a silent molecule type, or
// an ideal channel). Uses P(X − η·Y < 0) which the solid CDF reduces to when
// the denominator is almost surely positive.
fn degenerate_ratio_cdf(eta0: f64, num: ArrivalMoments, den: ArrivalMoments) -> f64 {
    let mean = num.mu - eta0 * den.mu;
    let var = num.var + eta0 * eta0 * den.var;
    if var <= 0.0 {
        return if mean < 0.0 { 1.0 } else { 0.0 };
    }
    crate::special::norm_cdf(-mean / var.sqrt())
}

/// Gaussian approximation `N(β, λ²)` with `β = µx/µy` and
/// `λ² = β²(σx²/µx² + σy²/µy²)`.
pub fn gaussian_ratio_pdf(eta: f64, pair: &GaussPair) -> f64 {
    let (beta, lambda2) = gaussian_ratio_params(pair);
    (-(eta - beta).powi(2) / (2.0 * lambda2)).exp() / (2.0 * PI * lambda2).sqrt()
}

/// `(β, λ²)` of the Gaussian approximation.
pub fn gaussian_ratio_params(pair: &GaussPair) -> (f64, f64) {
    let beta = pair.mu_x / pair.mu_y;
    let rx = pair.sigma_x / pair.mu_x;
    let ry = pair.sigma_y / pair.mu_y;
    (beta, beta * beta * (rx * rx + ry * ry))
}

/// Empirical draws of `X/Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub values: Vec<f64>,
    /// Pairs rejected because `|Y|` fell below the epsilon.
    pub redraws: u64,
}

/// Draws `n` ratios, redrawing any pair whose denominator has `|Y| < epsilon`.
pub fn sample_ratio<R: Rng + ?Sized>(pair: &GaussPair, n: usize, epsilon: f64, rng: &mut R) -> Result<RatioSample> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let mut values = Vec::with_capacity(n);
    let mut redraws = 0;
    while values.len() < n {
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let y = pair.mu_y + pair.sigma_y * zy;
        if y.abs() < epsilon {
            redraws += 1;
            continue;
        }
        values.push((pair.mu_x + pair.sigma_x * zx) / y);
    }
    Ok(RatioSample { values, redraws })
}

/// Two-sided Kolmogorov–Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
