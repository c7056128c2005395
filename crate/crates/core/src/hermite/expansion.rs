use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::quadrature::{expansion_sweep, QuadratureSettings};
use super::{Functional, MultiIndex};
use crate::error::{Error, Result};

/// Coefficients at or below this magnitude count as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub err: f64,
}

/// One entry of the JSON form of an expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub index: MultiIndex,
    pub coeff: f64,
    pub err: f64,
}

/// Truncated expansion `G = sum_v C_v e_v / v!` with
/// `C_v = E[G(W) e_v(W)]`, `W` standard normal on `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    dim: usize,
    truncation_order: usize,
    coeffs: BTreeMap<MultiIndex, Coefficient>,
    second_moment: Option<f64>,
    rank_tolerance: f64,
}

impl HermiteExpansion {
    pub(crate) fn exact(
        dim: usize,
        truncation_order: usize,
        coeffs: BTreeMap<MultiIndex, f64>,
    ) -> Self {
        let second_moment = Some(
            coeffs
                .iter()
                .map(|(v, c)| c * c / v.factorial())
                .sum::<f64>(),
        );
        Self {
            dim,
            truncation_order,
            coeffs: coeffs
                .into_iter()
                .map(|(v, value)| (v, Coefficient { value, err: 0.0 }))
                .collect(),
            second_moment,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }

    /// Builds an expansion from explicit coefficient values.
    pub fn from_coefficients(
        dim: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, c) in coeffs {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            map.insert(v, c);
        }
        let order = map.keys().map(MultiIndex::order).max().unwrap_or(1).max(1);
        let mut e = Self::exact(dim, order, map);
        e.second_moment = None;
        Ok(e)
    }

    /// Computes every coefficient with `|v| <= order` by quadrature.
    pub fn from_functional<G: Functional + ?Sized>(
        g: &G,
        order: usize,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        if order > super::MAX_DEGREE {
            return Err(Error::DegreeTooLarge(order));
        }
        let indices = MultiIndex::up_to(g.dim(), order);
        let sweep = expansion_sweep(g, &indices, settings)?;
        Ok(Self {
            dim: g.dim(),
            truncation_order: order,
            coeffs: indices.into_iter().zip(sweep.coeffs).collect(),
            second_moment: Some(sweep.second_moment),
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        })
    }

    pub fn with_rank_tolerance(mut self, tol: f64) -> Self {
        self.rank_tolerance = tol;
        self
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    /// `C_v`, zero when `v` is not stored.
    pub fn coeff(&self, v: &MultiIndex) -> f64 {
        self.coeffs.get(v).map_or(0.0, |c| c.value)
    }

    pub fn get(&self, v: &MultiIndex) -> Option<&Coefficient> {
        self.coeffs.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient)> {
        self.coeffs.iter()
    }

    /// Stored indices of positive order whose coefficient exceeds the rank
    /// tolerance.
    pub fn nonzero(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        let tol = self.rank_tolerance;
        self.coeffs
            .iter()
            .filter(move |(v, c)| v.order() > 0 && c.value.abs() > tol)
            .map(|(v, c)| (v, c.value))
    }

    /// Nonzero terms with `|v| = level`.
    pub fn terms_of_order(&self, level: usize) -> Vec<(MultiIndex, f64)> {
        self.nonzero()
            .filter(|(v, _)| v.order() == level)
            .map(|(v, c)| (v.clone(), c))
            .collect()
    }

    /// Minimal order of a coefficient above the rank tolerance.
    pub fn rank(&self) -> Result<usize> {
        self.nonzero()
            .map(|(v, _)| v.order())
            .min()
            .ok_or(Error::AllZero(self.truncation_order))
    }

    /// `sum_v C_v^2 / v!` over the stored coefficients.
    pub fn parseval_sum(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(v, c)| c.value * c.value / v.factorial())
            .sum()
    }

    /// `E[G^2]`, when known.
    pub fn second_moment(&self) -> Option<f64> {
        self.second_moment
    }

    /// `E[G^2] - sum_v C_v^2 / v!`: the mass beyond the truncation order.
    pub fn parseval_tail(&self) -> Option<f64> {
        self.second_moment.map(|m| m - self.parseval_sum())
    }

    /// Evaluates the truncated series at `w`.
    pub fn evaluate(&self, w: &[f64]) -> Result<f64> {
        self.coeffs.iter().try_fold(0.0, |acc, (v, c)| {
            Ok(acc + c.value / v.factorial() * super::e_v(v, w)?)
        })
    }

    pub fn records(&self) -> Vec<CoefficientRecord> {
        self.coeffs
            .iter()
            .map(|(v, c)| CoefficientRecord {
                index: v.clone(),
                coeff: c.value,
                err: c.err,
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.records())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let records: Vec<CoefficientRecord> = serde_json::from_str(s)?;
        let dim = records
            .first()
            .map(|r| r.index.dim())
            .ok_or(Error::EmptySample)?;
        let mut e =
            Self::from_coefficients(dim, records.iter().map(|r| (r.index.clone(), r.coeff)))?;
        for r in records {
            if let Some(c) = e.coeffs.get_mut(&r.index) {
                c.err = r.err;
            }
        }
        Ok(e)
    }
}
