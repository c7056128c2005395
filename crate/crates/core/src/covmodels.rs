//! Isotropic correlation models and their dependence classification.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

/// Slowly varying factor `L(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SlowlyVaryingSpec {
    /// `L(r) = c`
    Constant { c: f64 },
    /// `L(r) = (log(e + r))^p`
    LogPower { p: f64 },
}

impl Default for SlowlyVaryingSpec {
    fn default() -> Self {
        SlowlyVaryingSpec::Constant { c: 1.0 }
    }
}

impl SlowlyVaryingSpec {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            SlowlyVaryingSpec::Constant { c } => c,
            SlowlyVaryingSpec::LogPower { p } => (std::f64::consts::E + r).ln().powf(p),
        }
    }

    /// Sign of `lim log L(r)` growth: +1 when `L -> inf`, -1 when `L -> 0`,
    /// 0 when `L` tends to a positive constant.
    pub fn growth(&self) -> i8 {
        match *self {
            SlowlyVaryingSpec::Constant { .. } => 0,
            SlowlyVaryingSpec::LogPower { p } if p > 0.0 => 1,
            SlowlyVaryingSpec::LogPower { p } if p < 0.0 => -1,
            SlowlyVaryingSpec::LogPower { .. } => 0,
        }
    }

    /// Value of `lim L(r)` when it is finite and positive.
    pub fn finite_limit(&self) -> Option<f64> {
        match *self {
            SlowlyVaryingSpec::Constant { c } => Some(c),
            SlowlyVaryingSpec::LogPower { p: 0.0 } => Some(1.0),
            SlowlyVaryingSpec::LogPower { .. } => None,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            SlowlyVaryingSpec::Constant { c } => SlowlyVaryingSpec::Constant { c: c * factor },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SlowlyVaryingSpec::Constant { c } if !(c > 0.0 && c.is_finite()) => Err(
                Error::InvalidModel(format!("slowly varying constant must be positive, got {c}")),
            ),
            SlowlyVaryingSpec::LogPower { p } if !p.is_finite() => {
                Err(Error::InvalidModel("log power must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `B(r) = (1 + r^2)^(-z/2)`
    Cauchy { z: f64 },
    /// `B(r) = s^(-exponent) L(s) / L(1)` with `s = sqrt(1 + r^2)`: Cauchy
    /// shaped at the origin, `r^(-exponent) L(r)` in the tail.
    PowerLawTail {
        exponent: f64,
        #[serde(default)]
        slowvar: SlowlyVaryingSpec,
    },
}

fn default_dimension() -> usize {
    2
}

/// A parametric isotropic correlation function on `R^d`, normalized to
/// `B(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default = "default_dimension")]
    pub d: usize,
}

impl fmt::Display for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Cauchy { z } => write!(f, "cauchy(z={z})"),
            ModelKind::PowerLawTail { exponent, slowvar } => {
                write!(f, "power_law(exponent={exponent}, L={slowvar:?})")
            }
        }
    }
}

impl CovarianceModel {
    pub fn cauchy(z: f64) -> Result<Self> {
        Self::new(ModelKind::Cauchy { z }, 2)
    }

    pub fn power_law(exponent: f64, slowvar: SlowlyVaryingSpec) -> Result<Self> {
        Self::new(ModelKind::PowerLawTail { exponent, slowvar }, 2)
    }

    pub fn new(kind: ModelKind, d: usize) -> Result<Self> {
        let model = Self { kind, d };
        model.validate()?;
        Ok(model)
    }

    /// Re-checks parameters, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        match self.kind {
            ModelKind::Cauchy { z } if !(z > 0.0 && z.is_finite()) => Err(Error::InvalidModel(
                format!("Cauchy z must be positive, got {z}"),
            )),
            ModelKind::PowerLawTail { exponent, slowvar } => {
                if !(exponent > 0.0 && exponent.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "tail exponent must be positive, got {exponent}"
                    )));
                }
                slowvar.validate()?;
                // s^-theta log(e+s)^p is nonincreasing on s >= 1 iff
                // p <= theta * min_s (e+s) log(e+s) / s, and that minimum
                // is about 3.15.
                if let SlowlyVaryingSpec::LogPower { p } = slowvar {
                    if p > 3.0 * exponent {
                        return Err(Error::InvalidModel(format!(
                            "log power {p} too large for exponent {exponent}: correlation would exceed 1"
                        )));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Exponent `theta` of the tail `B(r) ~ r^-theta L(r)`.
    pub fn tail_exponent(&self) -> f64 {
        match self.kind {
            ModelKind::Cauchy { z } => z,
            ModelKind::PowerLawTail { exponent, .. } => exponent,
        }
    }

    /// Slowly varying part of the tail (the Cauchy tail has `L = 1`).
    pub fn slowvar(&self) -> SlowlyVaryingSpec {
        match self.kind {
            ModelKind::Cauchy { .. } => SlowlyVaryingSpec::Constant { c: 1.0 },
            ModelKind::PowerLawTail { slowvar, .. } => match slowvar {
                SlowlyVaryingSpec::Constant { .. } => SlowlyVaryingSpec::Constant { c: 1.0 },
                other => other,
            },
        }
    }

    /// Correlation at lag `r >= 0`.
    pub fn evaluate(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "negative lag {r}");
        let s2 = 1.0 + r * r;
        match self.kind {
            ModelKind::Cauchy { z } => s2.powf(-0.5 * z),
            ModelKind::PowerLawTail { exponent, slowvar } => {
                let s = s2.sqrt();
                s.powf(-exponent) * slowvar.eval(s) / slowvar.eval(1.0)
            }
        }
    }

    /// Classifies `H_level(eta)` as short or long memory: long iff
    /// `theta * level < d`.
    pub fn classify(&self, hermite_level: usize) -> Result<DependenceClass> {
        if hermite_level == 0 {
            return Err(Error::Domain("Hermite level must be at least 1".into()));
        }
        let product = self.tail_exponent() * hermite_level as f64;
        let d = self.d as f64;
        if (product - d).abs() <= 1e-12 * d {
            return Err(Error::BoundaryCase { product, d: self.d });
        }
        Ok(DependenceClass {
            class: if product < d {
                Dependence::LongRange
            } else {
                Dependence::ShortRange
            },
            effective_exponent: product,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    ShortRange,
    LongRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceClass {
    pub class: Dependence,
    pub effective_exponent: f64,
}

/// `c2(d, alpha) = Gamma((d - alpha)/2) / (2^alpha pi^(d/2) Gamma(alpha/2))`,
/// the constant in the small-frequency asymptotics of the spectral density.
pub fn spectral_constant_c2(d: usize, alpha: f64) -> Result<f64> {
    let df = d as f64;
    if !(alpha > 0.0 && alpha < df) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} must lie in (0, {d})"
        )));
    }
    Ok(gamma(0.5 * (df - alpha)) / (2f64.powf(alpha) * PI.powf(0.5 * df) * gamma(0.5 * alpha)))
}
