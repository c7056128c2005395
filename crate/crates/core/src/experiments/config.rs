use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covmodels::{CovarianceModel, SlowlyVaryingSpec};
use crate::error::{Error, Result};
use crate::hermite::{
    Functional, HermiteExpansion, Polynomial, QuadratureSettings, StudentIndicator,
};
use crate::simulator::{split_by_memory, SimulationOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Reduction,
    StudentMinkowski,
    VarianceScan,
    Coefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialTerm {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

fn default_order() -> usize {
    2
}

/// The integrand `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionalSpec {
    Polynomial {
        dim: usize,
        terms: Vec<PolynomialTerm>,
    },
    /// Centered indicator of `T_n > a`; its Hermite coefficients up to
    /// `order` come from quadrature.
    Student {
        n: usize,
        a: f64,
        #[serde(default = "default_order")]
        order: usize,
    },
}

impl FunctionalSpec {
    pub fn dim(&self) -> usize {
        match self {
            FunctionalSpec::Polynomial { dim, .. } => *dim,
            FunctionalSpec::Student { n, .. } => n + 1,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Functional>> {
        Ok(match self {
            FunctionalSpec::Polynomial { .. } => Box::new(self.polynomial()?),
            FunctionalSpec::Student { n, a, .. } => Box::new(StudentIndicator::new(*n, *a)?),
        })
    }

    pub fn expansion(&self) -> Result<HermiteExpansion> {
        match self {
            FunctionalSpec::Polynomial { .. } => Ok(self.polynomial()?.hermite_expansion()),
            FunctionalSpec::Student { n, a, order } => HermiteExpansion::from_functional(
                &StudentIndicator::new(*n, *a)?,
                *order,
                &QuadratureSettings::default(),
            ),
        }
    }

    fn polynomial(&self) -> Result<Polynomial> {
        match self {
            FunctionalSpec::Polynomial { dim, terms } => Polynomial::new(
                *dim,
                terms.iter().map(|t| (t.coeff, t.powers.clone())).collect(),
            ),
            FunctionalSpec::Student { .. } => {
                Err(Error::Config("not a polynomial functional".into()))
            }
        }
    }
}

/// Component models of one dependence regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub label: String,
    pub components: Vec<CovarianceModel>,
}

fn default_nodes() -> usize {
    60
}

fn default_cross_check() -> usize {
    3
}

fn default_fd_step() -> f64 {
    1e-4
}

/// Grid of `(n, a)` cells for the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientGrid {
    pub n_values: Vec<usize>,
    pub a_values: Vec<f64>,
    /// Cells with `n` above this skip the tensor quadrature cross-check.
    #[serde(default = "default_cross_check")]
    pub cross_check_max_n: usize,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    /// Step of the central difference checked against the closed-form
    /// derivative.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

impl Default for CoefficientGrid {
    fn default() -> Self {
        Self {
            n_values: vec![1, 2, 3],
            a_values: vec![0.0, 0.5, 1.0, 2.0],
            cross_check_max_n: default_cross_check(),
            quadrature_nodes: default_nodes(),
            fd_step: default_fd_step(),
        }
    }
}

fn default_replications() -> usize {
    100
}

fn default_h() -> f64 {
    1.0
}

fn default_qq() -> usize {
    99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub r_values: Vec<f64>,
    /// Not echoed into reports, so runs into different directories compare
    /// byte for byte.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub functional: Option<FunctionalSpec>,
    #[serde(default)]
    pub components: Vec<CovarianceModel>,
    #[serde(default)]
    pub regimes: Vec<RegimeConfig>,
    #[serde(default)]
    pub simulation: SimulationOptions,
    #[serde(default)]
    pub coefficients: CoefficientGrid,
    /// Number of matched quantiles in each Q-Q table.
    #[serde(default = "default_qq")]
    pub qq_points: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// `sha256("blob <len>\0" + canonical JSON of the config)`, the object id
    /// a SHA-256 git repository would give the canonical config.
    pub fn input_hash(&self) -> Result<String> {
        let body = serde_json::to_vec(self)?;
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(&body);
        Ok(hex::encode(h.finalize()))
    }

    pub fn functional(&self) -> Result<&FunctionalSpec> {
        self.functional
            .as_ref()
            .ok_or_else(|| Error::Config("missing [functional] section".into()))
    }

    /// Regimes to simulate: the explicit list, or the top-level components as
    /// a single regime named `default`.
    pub fn regimes(&self) -> Vec<RegimeConfig> {
        if self.regimes.is_empty() {
            vec![RegimeConfig {
                label: "default".into(),
                components: self.components.clone(),
            }]
        } else {
            self.regimes.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.experiment == ExperimentKind::Coefficients {
            if self.coefficients.n_values.is_empty() || self.coefficients.a_values.is_empty() {
                return cfg("coefficient grid needs n_values and a_values".into());
            }
            if self.coefficients.n_values.contains(&0) {
                return cfg("n must be positive".into());
            }
            if !(self.coefficients.fd_step > 0.0) {
                return cfg("fd_step must be positive".into());
            }
            return Ok(());
        }
        if self.replications < 2 {
            return cfg(format!(
                "replications must be at least 2, got {}",
                self.replications
            ));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return cfg(format!("grid spacing must be positive, got {}", self.h));
        }
        if self.r_values.is_empty() {
            return cfg("r_values must not be empty".into());
        }
        if let Some(r) = self.r_values.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return cfg(format!("r values must be positive, got {r}"));
        }
        let mut sorted = self.r_values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return cfg("r values must be distinct".into());
        }
        if self.experiment == ExperimentKind::VarianceScan && sorted.len() < 3 {
            return cfg("a variance scan needs at least 3 r values".into());
        }
        if self.qq_points == 0 {
            return cfg("qq_points must be positive".into());
        }
        let f = self.functional()?;
        if self.experiment == ExperimentKind::StudentMinkowski
            && !matches!(f, FunctionalSpec::Student { .. })
        {
            return cfg("the Student experiment needs a student functional".into());
        }
        let regimes = self.regimes();
        let mut labels: Vec<&str> = regimes.iter().map(|r| r.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return cfg("regime labels must be distinct".into());
        }
        for regime in &regimes {
            if regime.components.len() != f.dim() {
                return cfg(format!(
                    "regime {:?} has {} components but the functional takes {}",
                    regime.label,
                    regime.components.len(),
                    f.dim()
                ));
            }
            for m in &regime.components {
                m.validate()?;
            }
            split_by_memory(&regime.components)?;
        }
        Ok(())
    }
}

/// Tail exponents split into short-range `betas` and long-range `alphas`,
/// and the slowly varying factor of the first long-range component.
pub fn split_exponents(
    models: &[CovarianceModel],
) -> Result<(Vec<f64>, Vec<f64>, SlowlyVaryingSpec)> {
    let (m, _) = split_by_memory(models)?;
    let betas = models[..m].iter().map(|c| c.tail_exponent()).collect();
    let alphas = models[m..].iter().map(|c| c.tail_exponent()).collect();
    let l2 = models.get(m).map(|c| c.slowvar()).unwrap_or_default();
    Ok((betas, alphas, l2))
}
