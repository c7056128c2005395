//! Probabilists' Hermite polynomials and multivariate Hermite expansions.
//!
//! Conventions: `H_0 = 1`, `H_1(u) = u`, `H_{k+1}(u) = u H_k(u) - k H_{k-1}(u)`,
//! orthogonal under the standard normal density with `E H_j H_k = k! δ_jk`.

mod expansion;
mod functional;
mod quadrature;
mod reduction;
mod student;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expansion::{Coefficient, CoefficientRecord, HermiteExpansion, DEFAULT_RANK_TOLERANCE};
pub use functional::{Functional, Polynomial, StudentIndicator};
pub use quadrature::{coefficient_quadrature, coefficients_with, QuadratureSettings, QMC_POINTS};
pub use reduction::{reduction_sets, ReductionSets};
pub use student::{
    student_mean_constant, student_rank1_coeff, student_rank2_coeff, student_rank2_deriv,
};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 64;

/// `H_k(u)`.
pub fn hermite_poly(k: usize, u: f64) -> Result<f64> {
    if k > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(k));
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = u * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[k] = H_k(u)` for `k < out.len()`.
pub fn hermite_table(u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = u;
    }
    for k in 2..out.len() {
        out[k] = u * out[k - 1] - (k - 1) as f64 * out[k - 2];
    }
}

/// A multi-index `v = (k_1, ..., k_p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Self {
        MultiIndex(k)
    }

    pub fn zeros(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    /// `v` with a single nonzero entry `k` at position `j`.
    pub fn unit(p: usize, j: usize, k: u32) -> Self {
        let mut v = vec![0; p];
        v[j] = k;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|v| = sum k_j`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    /// `v! = prod k_j!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(f64::from).product::<f64>())
            .product()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// All indices of dimension `p` with `|v| = order` (the set `N_order`),
    /// in lexicographically decreasing order of the leading entries.
    pub fn of_order(p: usize, order: usize) -> Vec<MultiIndex> {
        fn rec(p: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == p {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=left).rev() {
                prefix.push(k);
                rec(p, left - k, prefix, out);
                prefix.pop();
            }
        }
        if p == 0 {
            return if order == 0 {
                vec![MultiIndex(vec![])]
            } else {
                vec![]
            };
        }
        let mut out = Vec::new();
        rec(p, order as u32, &mut Vec::with_capacity(p), &mut out);
        out
    }

    /// All indices with `|v| <= max_order`, grouped by increasing order.
    pub fn up_to(p: usize, max_order: usize) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|k| Self::of_order(p, k)).collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// `e_v(w) = prod_j H_{k_j}(w_j)`.
pub fn e_v(v: &MultiIndex, w: &[f64]) -> Result<f64> {
    if v.dim() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: w.len(),
        });
    }
    v.0.iter()
        .zip(w)
        .try_fold(1.0, |acc, (&k, &x)| Ok(acc * hermite_poly(k as usize, x)?))
}
