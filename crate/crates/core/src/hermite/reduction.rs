use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{HermiteExpansion, MultiIndex};
use crate::covmodels::SlowlyVaryingSpec;
use crate::error::{Error, Result};

/// Which Hermite terms dominate `K_r` for a vector field whose first
/// `betas.len()` components are short-range and the rest long-range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSets {
    /// Hermite rank of the functional.
    pub kappa: usize,
    /// Minimal weight over nonzero indices of order `kappa`.
    pub gamma: f64,
    /// Minimal weight `sum beta_i k_i + sum alpha_j k_j` over all nonzero indices.
    pub gamma_tilde: f64,
    /// Levels holding at least one minimizer.
    pub l_plus: Vec<usize>,
    /// Minimizing indices per level.
    pub n_star: BTreeMap<usize, Vec<MultiIndex>>,
    /// Asymptotic mixing weights of the levels in `l_plus`.
    pub a_l: BTreeMap<usize, f64>,
    /// `gamma_tilde < d`: the leading terms are long-range dependent.
    pub long_range: bool,
}

impl ReductionSets {
    /// Minimizers at the single level when `l_plus` has exactly one element.
    pub fn single_level(&self) -> Option<(usize, &[MultiIndex])> {
        match self.l_plus.as_slice() {
            [l] => Some((*l, self.n_star[l].as_slice())),
            _ => None,
        }
    }
}

pub fn reduction_sets(
    e: &HermiteExpansion,
    betas: &[f64],
    alphas: &[f64],
    d: usize,
    l2: &SlowlyVaryingSpec,
) -> Result<ReductionSets> {
    let p = betas.len() + alphas.len();
    if p != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: p,
        });
    }
    let df = d as f64;
    if let Some(b) = betas.iter().find(|&&b| !(b > df)) {
        return Err(Error::Domain(format!(
            "short-range exponent {b} must exceed d = {d}"
        )));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a < df)) {
        return Err(Error::Domain(format!(
            "long-range exponent {a} must lie in (0, {d})"
        )));
    }
    let exps: Vec<f64> = betas.iter().chain(alphas).cloned().collect();
    let weight =
        |v: &MultiIndex| -> f64 { v.0.iter().zip(&exps).map(|(&k, &x)| k as f64 * x).sum() };

    let terms: Vec<(&MultiIndex, f64)> = e.nonzero().map(|(v, _)| (v, weight(v))).collect();
    let kappa = e.rank()?;
    let gamma = terms
        .iter()
        .filter(|(v, _)| v.order() == kappa)
        .map(|(_, w)| *w)
        .fold(f64::INFINITY, f64::min);
    let gamma_tilde = terms.iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
    if (gamma_tilde - df).abs() <= 1e-12 * df {
        return Err(Error::BoundaryCase {
            product: gamma_tilde,
            d,
        });
    }
    let tie = 1e-12 * gamma_tilde.max(1.0);
    let mut n_star: BTreeMap<usize, Vec<MultiIndex>> = BTreeMap::new();
    for (v, w) in &terms {
        if (w - gamma_tilde).abs() <= tie {
            n_star.entry(v.order()).or_default().push((*v).clone());
        }
    }
    let l_plus: Vec<usize> = n_star.keys().cloned().collect();
    let a_l = level_weights(&l_plus, l2)?;
    Ok(ReductionSets {
        kappa,
        gamma,
        gamma_tilde,
        l_plus,
        n_star,
        a_l,
        long_range: gamma_tilde < df,
    })
}

/// `a_l = lim L^{l/2}(r) / sum_{i in L+} L^{i/2}(r)` as `r -> inf`.
fn level_weights(levels: &[usize], l2: &SlowlyVaryingSpec) -> Result<BTreeMap<usize, f64>> {
    l2.validate()?;
    let (lo, hi) = match (levels.first(), levels.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Ok(BTreeMap::new()),
    };
    let weights = match (l2.growth(), l2.finite_limit()) {
        (1, _) => levels
            .iter()
            .map(|&l| (l, f64::from(u8::from(l == hi))))
            .collect(),
        (-1, _) => levels
            .iter()
            .map(|&l| (l, f64::from(u8::from(l == lo))))
            .collect(),
        (_, Some(c)) => {
            let total: f64 = levels.iter().map(|&i| c.powf(i as f64 / 2.0)).sum();
            levels
                .iter()
                .map(|&l| (l, c.powf(l as f64 / 2.0) / total))
                .collect()
        }
        _ => {
            return Err(Error::InvalidModel(format!(
                "slowly varying factor {l2:?} has no usable limit"
            )))
        }
    };
    Ok(weights)
}
