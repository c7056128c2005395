//! Closed forms for the Hermite coefficients of the excursion indicator of the
//! Student ratio `T_n = w_1 / sqrt((w_2^2 + ... + w_{n+1}^2) / n)`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::{beta_reg, erfc, gamma, ln_gamma};

/// `P(T_n > a) = 1/2 - 1/2 (1 - I_{n/(n+a^2)}(n/2, 1/2)) sgn(a)`.
pub fn student_mean_constant(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    if a == 0.0 {
        return 0.5;
    }
    let ib = beta_reg(0.5 * nf, 0.5, nf / (nf + a * a));
    0.5 - 0.5 * (1.0 - ib) * a.signum()
}

/// `C_v` for `v = (1, 0, ..., 0)`: `(2 pi)^{-1/2} (1 + a^2/n)^{-n/2}`.
/// Rank-one indices on the other coordinates have zero coefficient.
pub fn student_rank1_coeff(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    (1.0 + a * a / nf).powf(-0.5 * nf) / (2.0 * PI).sqrt()
}

/// `C_v` for `v = 2 e_j`, `j >= 2`, as the radial integral
/// `K int_0^inf (rho^2 - n) rho^{n-1} e^{-rho^2/2} sqrt(pi/2) erfc(a rho / sqrt(2n)) d rho`
/// with `K = 2 pi^{n/2} / (n (2 pi)^{(n+1)/2} Gamma(n/2))`.
pub fn student_rank2_coeff(n: usize, a: f64) -> Result<f64> {
    let nf = n as f64;
    let k = 2.0 * PI.powf(0.5 * nf) / (nf * (2.0 * PI).powf(0.5 * (nf + 1.0)) * gamma(0.5 * nf));
    let s = (2.0 * nf).sqrt();
    let half_pi = (0.5 * PI).sqrt();
    let f = |rho: f64| {
        if rho == 0.0 {
            return 0.0;
        }
        let log_rad = (nf - 1.0) * rho.ln() - 0.5 * rho * rho;
        (rho * rho - nf) * log_rad.exp() * half_pi * erfc(a * rho / s)
    };
    let upper = 40.0;
    let mode = (nf - 1.0).max(0.0).sqrt();
    let mut points = vec![0.0, nf.sqrt(), upper];
    if mode > 0.0 && mode < upper {
        points.push(mode);
    }
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();
    let opts = QuadOptions {
        abs_tol: 1e-8 / k,
        rel_tol: 0.0,
        max_subdivisions: 2000,
    };
    Ok(k * integrate_with_breaks(f, &points, &opts)?.value)
}

/// `dC_v / da = Gamma((n+1)/2) (1 - (n+1)/(n+a^2)) / (sqrt(n pi) Gamma(n/2) (1 + a^2/n)^{(n+1)/2})`.
pub fn student_rank2_deriv(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    let log_ratio = ln_gamma(0.5 * (nf + 1.0)) - ln_gamma(0.5 * nf);
    log_ratio.exp() * (1.0 - (nf + 1.0) / (nf + a * a))
        / ((nf * PI).sqrt() * (1.0 + a * a / nf).powf(0.5 * (nf + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::student_t_cdf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_constant() {
        assert_eq!(student_mean_constant(3, 0.0), 0.5);
        assert_abs_diff_eq!(student_mean_constant(2, 0.5), 1.0 / 3.0, epsilon = 1e-13);
        for n in 1..6 {
            for a in [-2.0, -0.3, 0.7, 4.0] {
                assert_abs_diff_eq!(
                    student_mean_constant(n, a),
                    1.0 - student_t_cdf(a, n as f64),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn rank_one() {
        assert_abs_diff_eq!(
            student_rank1_coeff(2, 0.0),
            0.398_942_280_401_432_7,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            student_rank1_coeff(2, 0.5),
            1.0 / ((2.0 * PI).sqrt() * 1.125),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(student_rank1_coeff(2, 0.5), 0.354_615, epsilon = 1e-6);
    }

    #[test]
    fn rank_two_values() {
        for n in 1..5 {
            assert_abs_diff_eq!(student_rank2_coeff(n, 0.0).unwrap(), 0.0, epsilon = 1e-9);
        }
        // independent high-precision evaluations of the radial integral
        assert_abs_diff_eq!(
            student_rank2_coeff(2, 0.5).unwrap(),
            -2.0 / 27.0,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            student_rank2_coeff(3, 0.5).unwrap(),
            -0.052_196_818_501_471_426,
            epsilon = 1e-8
        );
    }

    #[test]
    fn rank_two_derivative_matches_finite_difference() {
        let h = 1e-4;
        for (n, a) in [(2, 0.5), (1, 1.7), (3, -0.4)] {
            let fd = (student_rank2_coeff(n, a + h).unwrap()
                - student_rank2_coeff(n, a - h).unwrap())
                / (2.0 * h);
            assert_abs_diff_eq!(fd, student_rank2_deriv(n, a), epsilon = 1e-5);
        }
    }

    #[test]
    fn derivative_special_points() {
        for n in 1..6 {
            assert_abs_diff_eq!(student_rank2_deriv(n, 1.0), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(student_rank2_deriv(n, -1.0), 0.0, epsilon = 1e-15);
            assert!(student_rank2_deriv(n, 1e8).abs() < 1e-12);
        }
        assert_abs_diff_eq!(
            student_rank2_deriv(2, 0.0),
            -1.0 / (4.0 * 2f64.sqrt()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rank_two_monotonicity() {
        for n in 1..4 {
            let up: Vec<f64> = (0..=40)
                .map(|i| student_rank2_coeff(n, 1.0 + 0.1 * i as f64).unwrap())
                .collect();
            assert!(up.windows(2).all(|w| w[1] > w[0]), "n={n}");
            let down: Vec<f64> = (-19..=19)
                .map(|i| student_rank2_coeff(n, 0.05 * i as f64).unwrap())
                .collect();
            assert!(down.windows(2).all(|w| w[1] < w[0]), "n={n}");
            assert!(student_rank2_coeff(n, 0.5).unwrap() < 0.0);
        }
    }
}
