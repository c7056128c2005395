use serde::{Deserialize, Serialize};

use super::{HermiteExpansion, MultiIndex};
use crate::error::{Error, Result};

/// A real function `G` on `R^p` whose Hermite coefficients are wanted.
pub trait Functional: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, w: &[f64]) -> f64;

    /// Whether `G` is smooth enough for plain Gauss-Hermite quadrature.
    fn is_smooth(&self) -> bool {
        true
    }

    /// Pushes the locations of jumps of `w_1 -> G(w_1, rest)` into `out`.
    fn first_axis_breaks(&self, _rest: &[f64], _out: &mut Vec<f64>) {}
}

/// A real polynomial `sum_t c_t prod_j w_j^{e_tj}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain(
                "polynomial dimension must be positive".into(),
            ));
        }
        for (_, exps) in &terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            let deg: u32 = exps.iter().sum();
            if deg as usize > super::MAX_DEGREE {
                return Err(Error::DegreeTooLarge(deg as usize));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|(_, e)| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exact expansion: `x^k = sum_j k! / (2^j j! (k-2j)!) H_{k-2j}(x)`, and
    /// `C_v = v! b_v` for the coefficients `b_v` in the basis `e_v`.
    pub fn hermite_expansion(&self) -> HermiteExpansion {
        let mut b: std::collections::BTreeMap<MultiIndex, f64> = Default::default();
        for (c, exps) in &self.terms {
            let factors: Vec<Vec<(u32, f64)>> =
                exps.iter().map(|&k| monomial_to_hermite(k)).collect();
            let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(self.dim), *c)];
            for f in &factors {
                stack = stack
                    .into_iter()
                    .flat_map(|(idx, w)| {
                        f.iter().map(move |&(deg, coef)| {
                            let mut next = idx.clone();
                            next.push(deg);
                            (next, w * coef)
                        })
                    })
                    .collect();
            }
            for (idx, w) in stack {
                *b.entry(MultiIndex(idx)).or_insert(0.0) += w;
            }
        }
        let order = self.degree().max(1);
        let coeffs = b
            .into_iter()
            .map(|(v, bv)| {
                let c = bv * v.factorial();
                (v, c)
            })
            .collect();
        HermiteExpansion::exact(self.dim, order, coeffs)
    }
}

fn monomial_to_hermite(k: u32) -> Vec<(u32, f64)> {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    (0..=k / 2)
        .map(|j| {
            (
                k - 2 * j,
                fact(k) / (2f64.powi(j as i32) * fact(j) * fact(k - 2 * j)),
            )
        })
        .collect()
}

impl Functional for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, w: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                c * e
                    .iter()
                    .zip(w)
                    .map(|(&k, &x)| x.powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

/// Centered excursion indicator `chi(T_n > a) - P(T_n > a)` of the ratio
/// `T_n = w_1 / sqrt((w_2^2 + ... + w_{n+1}^2) / n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentIndicator {
    n: usize,
    a: f64,
    mean: f64,
}

impl StudentIndicator {
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain(
                "Student degrees of freedom must be positive".into(),
            ));
        }
        if !a.is_finite() {
            return Err(Error::Domain(format!("level must be finite, got {a}")));
        }
        Ok(Self {
            n,
            a,
            mean: super::student_mean_constant(n, a),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> f64 {
        self.a
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    fn threshold(&self, rest: &[f64]) -> f64 {
        let rho = rest.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.a * rho / (self.n as f64).sqrt()
    }
}

impl Functional for StudentIndicator {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn eval(&self, w: &[f64]) -> f64 {
        // T_n > a  <=>  w_1 > a rho / sqrt(n), also when rho = 0
        let hit = w[0] > self.threshold(&w[1..]);
        f64::from(u8::from(hit)) - self.mean
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn first_axis_breaks(&self, rest: &[f64], out: &mut Vec<f64>) {
        out.push(self.threshold(rest));
    }
}
