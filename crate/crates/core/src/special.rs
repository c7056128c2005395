//! Thin wrappers over `statrs` special functions used throughout the crate.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub use statrs::function::beta::beta_reg;
pub use statrs::function::erf::erfc;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // one Halley step on the CDF
    let e = if x < 0.0 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_sf(x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// CDF of Student's t distribution with `n` degrees of freedom.
pub fn student_t_cdf(t: f64, n: f64) -> f64 {
    let x = n / (n + t * t);
    let tail = 0.5 * beta_reg(0.5 * n, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
