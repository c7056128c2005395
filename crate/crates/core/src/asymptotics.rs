//! Large-`r` predictions for `Var K_r` and the matching normalizing sequences.

use serde::{Deserialize, Serialize};

use crate::covmodels::{spectral_constant_c2, SlowlyVaryingSpec};
use crate::error::{Error, Result};
use crate::hermite::{reduction_sets, HermiteExpansion, ReductionSets};
use crate::window::WindowSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `Var K_r ~ C r^d`, Gaussian limit.
    ShortRangeClt,
    /// `Var K_r ~ C r^{2d - gamma_tilde}`, limit given by the reduced terms.
    LongRangeReduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPrediction {
    pub regime: Regime,
    pub d: usize,
    /// Growth exponent of `Var K_r` in `r`.
    pub exponent: f64,
    pub gamma_tilde: f64,
    /// Levels contributing to the leading term.
    pub levels: Vec<usize>,
    /// Powers `l/2` of `L_2(r)` in the normalizing sequence, one per level.
    pub slowvar_powers: Vec<f64>,
    /// `C` in `Var K_r ~ C r^exponent L_2^l(r)`, when available in closed form.
    pub constant: Option<f64>,
}

/// Variance growth of `K_r = int_{Delta(r)} G(eta(x)) dx` for a field whose
/// first `betas.len()` components are short-range.
pub fn predict_variance(
    e: &HermiteExpansion,
    betas: &[f64],
    alphas: &[f64],
    d: usize,
    window: &WindowSpec,
    l2: &SlowlyVaryingSpec,
) -> Result<ScalingPrediction> {
    let sets = reduction_sets(e, betas, alphas, d, l2)?;
    predict_from_sets(e, &sets, betas.len(), alphas, d, window)
}

pub fn predict_from_sets(
    e: &HermiteExpansion,
    sets: &ReductionSets,
    m: usize,
    alphas: &[f64],
    d: usize,
    window: &WindowSpec,
) -> Result<ScalingPrediction> {
    let df = d as f64;
    if !sets.long_range {
        return Ok(ScalingPrediction {
            regime: Regime::ShortRangeClt,
            d,
            exponent: df,
            gamma_tilde: sets.gamma_tilde,
            levels: Vec::new(),
            slowvar_powers: Vec::new(),
            constant: None,
        });
    }
    let constant = match sets.single_level() {
        Some((l, vs)) => long_range_constant(e, l, vs, m, alphas, window)?,
        None => None,
    };
    Ok(ScalingPrediction {
        regime: Regime::LongRangeReduced,
        d,
        exponent: 2.0 * df - sets.gamma_tilde,
        gamma_tilde: sets.gamma_tilde,
        levels: sets.l_plus.clone(),
        slowvar_powers: sets.l_plus.iter().map(|&l| l as f64 / 2.0).collect(),
        constant,
    })
}

/// `c1(l, alpha, Delta) |Delta|^2 sum C_v^2 / v!` when every minimizer lives on
/// long-range components sharing one exponent `alpha`.
fn long_range_constant(
    e: &HermiteExpansion,
    level: usize,
    vs: &[crate::hermite::MultiIndex],
    m: usize,
    alphas: &[f64],
    window: &WindowSpec,
) -> Result<Option<f64>> {
    let mut alpha = None;
    for v in vs {
        let k = v.as_slice();
        if k[..m].iter().any(|&x| x > 0) {
            return Ok(None);
        }
        for (j, &kj) in k[m..].iter().enumerate() {
            if kj == 0 {
                continue;
            }
            match alpha {
                None => alpha = Some(alphas[j]),
                Some(a) if a == alphas[j] => {}
                Some(_) => return Ok(None),
            }
        }
    }
    let Some(alpha) = alpha else { return Ok(None) };
    let unit = WindowSpec { r: 1.0, ..*window };
    let c1 = unit.c1_coefficient(level, alpha)?;
    let sum: f64 = vs.iter().map(|v| e.coeff(v).powi(2) / v.factorial()).sum();
    Ok(Some(c1 * unit.volume().powi(2) * sum))
}

/// `r^{d - gamma_tilde/2} sum_l L_2^{l/2}(r)` in the long-range regime,
/// `r^{d/2}` otherwise.
pub fn normalizer(prediction: &ScalingPrediction, r: f64, l2: &SlowlyVaryingSpec) -> f64 {
    let df = prediction.d as f64;
    match prediction.regime {
        Regime::ShortRangeClt => r.powf(0.5 * df),
        Regime::LongRangeReduced => {
            let lr = l2.eval(r);
            let s: f64 = prediction.slowvar_powers.iter().map(|&q| lr.powf(q)).sum();
            r.powf(df - 0.5 * prediction.gamma_tilde) * s
        }
    }
}

/// Multiplier `c2^{-kappa/2} r^{kappa alpha/2 - d} L_2^{-kappa/2}(r)` that maps
/// the rank-`kappa` term to its non-degenerate limit.
pub fn rank_normalization(
    kappa: usize,
    alpha: f64,
    d: usize,
    r: f64,
    l2: &SlowlyVaryingSpec,
) -> Result<f64> {
    let k = kappa as f64;
    if kappa == 0 || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "need kappa >= 1 and r > 0, got {kappa}, {r}"
        )));
    }
    let c2 = spectral_constant_c2(d, alpha)?;
    Ok(c2.powf(-0.5 * k) * r.powf(0.5 * k * alpha - d as f64) * l2.eval(r).powf(-0.5 * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{MultiIndex, Polynomial};
    use crate::stats::loglog_slope;
    use approx::assert_abs_diff_eq;

    fn idx(k: &[u32]) -> MultiIndex {
        MultiIndex::new(k.to_vec())
    }

    fn unit() -> WindowSpec {
        WindowSpec::square(1.0).unwrap()
    }

    fn example() -> HermiteExpansion {
        Polynomial::new(
            2,
            vec![(1.0, vec![1, 0]), (1.0, vec![0, 2]), (-1.0, vec![0, 0])],
        )
        .unwrap()
        .hermite_expansion()
    }

    #[test]
    fn two_component_example() {
        let one = SlowlyVaryingSpec::default();
        let p = predict_variance(&example(), &[2.5], &[0.2], 2, &unit(), &one).unwrap();
        assert_eq!(p.regime, Regime::LongRangeReduced);
        assert_abs_diff_eq!(p.exponent, 3.6, epsilon = 1e-12);
        assert_eq!(p.slowvar_powers, vec![1.0]);
        // C_(0,2) = 2, so the sum is 4/2
        let c1 = unit().c1_coefficient(2, 0.2).unwrap();
        assert_abs_diff_eq!(p.constant.unwrap(), c1 * 16.0 * 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalizer(&p, 80.0, &one), 80f64.powf(1.8), epsilon = 1e-9);
        assert_abs_diff_eq!(normalizer(&p, 80.0, &one), 2664.17, epsilon = 0.01);
    }

    #[test]
    fn short_range_exponent_is_d() {
        let e = HermiteExpansion::from_coefficients(2, [(idx(&[1, 0]), 1.0), (idx(&[0, 2]), 0.3)])
            .unwrap();
        let p = predict_variance(
            &e,
            &[3.0, 2.5],
            &[],
            2,
            &unit(),
            &SlowlyVaryingSpec::default(),
        )
        .unwrap();
        assert_eq!(p.regime, Regime::ShortRangeClt);
        assert_eq!(p.exponent, 2.0);
        assert!(p.constant.is_none());
        assert_abs_diff_eq!(normalizer(&p, 9.0, &SlowlyVaryingSpec::default()), 9.0);
    }

    #[test]
    fn student_level_two_reduction() {
        // rank-1 term on the short-range numerator, rank-2 terms on two
        // long-range denominator components with alpha = 0.4
        let e = HermiteExpansion::from_coefficients(
            3,
            [
                (idx(&[1, 0, 0]), 0.35),
                (idx(&[0, 2, 0]), -0.07),
                (idx(&[0, 0, 2]), -0.07),
            ],
        )
        .unwrap();
        let l = SlowlyVaryingSpec::LogPower { p: 0.5 };
        let p = predict_variance(&e, &[4.0], &[0.4, 0.4], 2, &unit(), &l).unwrap();
        assert_eq!(p.regime, Regime::LongRangeReduced);
        assert_abs_diff_eq!(p.exponent, 3.2, epsilon = 1e-12);
        let r: f64 = 50.0;
        assert_abs_diff_eq!(
            normalizer(&p, r, &l),
            r.powf(1.6) * l.eval(r),
            epsilon = 1e-9
        );
        assert!(p.constant.is_some());
    }

    #[test]
    fn rank_level_long_range_gives_alpha_kappa() {
        let e = HermiteExpansion::from_coefficients(2, [(idx(&[2, 0]), 1.0), (idx(&[0, 2]), 1.0)])
            .unwrap();
        let p = predict_variance(
            &e,
            &[2.5],
            &[0.3],
            2,
            &unit(),
            &SlowlyVaryingSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(p.gamma_tilde, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(p.exponent, 2.0 * 2.0 - 0.6, epsilon = 1e-12);
    }

    #[test]
    fn mixed_exponents_drop_the_constant() {
        // (0,1,1) is the only minimizer and mixes exponents 0.3 and 0.5
        let e = HermiteExpansion::from_coefficients(
            3,
            [(idx(&[1, 0, 0]), 1.0), (idx(&[0, 1, 1]), 1.0)],
        )
        .unwrap();
        let p = predict_variance(
            &e,
            &[2.5],
            &[0.3, 0.5],
            2,
            &unit(),
            &SlowlyVaryingSpec::default(),
        )
        .unwrap();
        assert_eq!(p.regime, Regime::LongRangeReduced);
        assert!(p.constant.is_none());
    }

    #[test]
    fn boundary_is_rejected() {
        let e = HermiteExpansion::from_coefficients(2, [(idx(&[0, 2]), 1.0)]).unwrap();
        let r = predict_variance(
            &e,
            &[2.5],
            &[1.0],
            2,
            &unit(),
            &SlowlyVaryingSpec::default(),
        );
        assert!(matches!(r, Err(Error::BoundaryCase { .. })));
    }

    #[test]
    fn rank_normalization_form() {
        let one = SlowlyVaryingSpec::default();
        let c2 = spectral_constant_c2(2, 0.4).unwrap();
        let got = rank_normalization(2, 0.4, 2, 10.0, &one).unwrap();
        assert_abs_diff_eq!(got, 10f64.powf(0.4 - 2.0) / c2, epsilon = 1e-14);
        assert!(rank_normalization(0, 0.4, 2, 10.0, &one).is_err());
    }

    #[test]
    fn predicted_exponent_is_recovered_by_regression() {
        let p = predict_variance(
            &example(),
            &[2.5],
            &[0.2],
            2,
            &unit(),
            &SlowlyVaryingSpec::default(),
        )
        .unwrap();
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|&r: &f64| (r, 3.3 * r.powf(p.exponent)))
            .collect();
        assert_abs_diff_eq!(
            loglog_slope(&pts).unwrap().slope,
            p.exponent,
            epsilon = 1e-6
        );
    }
}
