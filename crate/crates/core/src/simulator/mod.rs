//! Gaussian random fields on a square grid covering `Delta(r)`.
//!
//! Small grids are sampled exactly through a Cholesky factor of the full
//! covariance matrix; larger grids use circulant embedding on a padded torus.

mod cholesky;
mod circulant;
mod io;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covmodels::{CovarianceModel, Dependence};
use crate::error::{Error, Result};
use crate::window::WindowSpec;

pub use io::{read_fldg, write_csv, write_fldg, FLDG_HEADER_LEN, FLDG_MAGIC, FLDG_VERSION};

/// Grids with at most this many nodes use the Cholesky path by default.
pub const CHOLESKY_MAX_POINTS: usize = 4096;

/// Default ceiling on the relative clipped eigenvalue mass.
pub const DEFAULT_CLIP_CEILING: f64 = 1e-2;

/// Regular grid of `points_per_side^2` cell-centered nodes covering
/// `[-r, r]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r: f64,
    pub h: f64,
    pub points_per_side: usize,
    pub d: usize,
}

impl GridSpec {
    /// `points_per_side = ceil(2r / h)`.
    pub fn new(r: f64, h: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!(
                "window scale r must be positive, got {r}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!(
                "grid spacing h must be positive, got {h}"
            )));
        }
        let ratio = 2.0 * r / h;
        let pps = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0) as usize;
        Ok(Self {
            r,
            h,
            points_per_side: pps,
            d: 2,
        })
    }

    pub fn len(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate of node `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - 0.5 * self.points_per_side as f64) * self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec::square(self.r).expect("grid r is validated")
    }

    /// Euclidean distance between nodes `(i1, j1)` and `(i2, j2)`.
    pub fn distance(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let di = a.0.abs_diff(b.0) as f64;
        let dj = a.1.abs_diff(b.1) as f64;
        self.h * di.hypot(dj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMethod {
    ExactCholesky,
    CirculantEmbedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationOptions {
    pub method: MethodChoice,
    pub clip_ceiling: f64,
    /// Largest torus side, as a multiple of `points_per_side`, tried by the
    /// circulant path.
    pub max_padding: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            clip_ceiling: DEFAULT_CLIP_CEILING,
            max_padding: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDiagnostics {
    pub method: SimulationMethod,
    pub clip_error: f64,
    /// Side of the embedding torus; equals `points_per_side` for Cholesky.
    pub padded_size: usize,
}

/// One realization of a scalar field, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub model: CovarianceModel,
    pub seed: u64,
    pub stream: u64,
    pub diagnostics: EmbeddingDiagnostics,
}

impl FieldRealization {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.points_per_side + j]
    }

    pub fn method(&self) -> SimulationMethod {
        self.diagnostics.method
    }

    pub fn embedding_clip_error(&self) -> f64 {
        self.diagnostics.clip_error
    }
}

pub fn embedding_diagnostics(f: &FieldRealization) -> EmbeddingDiagnostics {
    f.diagnostics
}

#[derive(Clone)]
enum Backend {
    Cholesky(Arc<cholesky::CholeskyFactor>),
    Circulant(Arc<circulant::CirculantEmbedding>),
}

/// A prepared sampler for one model on one grid. Preparation (factorization
/// or eigenvalue computation) is done once; sampling is cheap and pure in
/// `(seed, stream)`.
pub struct FieldSampler {
    grid: GridSpec,
    model: CovarianceModel,
    backend: Backend,
}

impl FieldSampler {
    pub fn new(
        grid: GridSpec,
        model: CovarianceModel,
        options: &SimulationOptions,
    ) -> Result<Self> {
        model.validate()?;
        let use_cholesky = match options.method {
            MethodChoice::Auto => grid.len() <= CHOLESKY_MAX_POINTS,
            MethodChoice::Cholesky => true,
            MethodChoice::Circulant => false,
        };
        let backend = if use_cholesky {
            Backend::Cholesky(Arc::new(cholesky::CholeskyFactor::new(&grid, &model)?))
        } else {
            Backend::Circulant(Arc::new(circulant::CirculantEmbedding::new(
                &grid,
                &model,
                options.clip_ceiling,
                options.max_padding,
            )?))
        };
        Ok(Self {
            grid,
            model,
            backend,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn diagnostics(&self) -> EmbeddingDiagnostics {
        match &self.backend {
            Backend::Cholesky(_) => EmbeddingDiagnostics {
                method: SimulationMethod::ExactCholesky,
                clip_error: 0.0,
                padded_size: self.grid.points_per_side,
            },
            Backend::Circulant(c) => EmbeddingDiagnostics {
                method: SimulationMethod::CirculantEmbedding,
                clip_error: c.clip_error(),
                padded_size: c.torus_side(),
            },
        }
    }

    /// Values only, written into `out` (length `grid.len()`).
    pub fn sample_into(&self, seed: u64, stream: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.grid.len());
        match &self.backend {
            Backend::Cholesky(c) => c.sample_into(seed, stream, out),
            Backend::Circulant(c) => c.sample_into(seed, stream, out),
        }
    }

    pub fn sample(&self, seed: u64, stream: u64) -> FieldRealization {
        let mut values = vec![0.0; self.grid.len()];
        self.sample_into(seed, stream, &mut values);
        FieldRealization {
            grid: self.grid,
            values,
            model: self.model,
            seed,
            stream,
            diagnostics: self.diagnostics(),
        }
    }
}

/// One-shot sampling; prefer [`FieldSampler`] for repeated draws.
pub fn simulate_component(
    grid: GridSpec,
    model: CovarianceModel,
    seed: u64,
    stream: u64,
    options: &SimulationOptions,
) -> Result<FieldRealization> {
    Ok(FieldSampler::new(grid, model, options)?.sample(seed, stream))
}

/// Components of a vector field: short-range first, then long-range.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldRealization {
    pub components: Vec<FieldRealization>,
    pub m: usize,
    pub n: usize,
}

impl VectorFieldRealization {
    pub fn grid(&self) -> &GridSpec {
        &self.components[0].grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// The vector `eta(x)` at node `(i, j)`, written into `out`.
    pub fn node(&self, i: usize, j: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.at(i, j);
        }
    }
}

/// Counts the short-range prefix and checks that no short-range component
/// follows a long-range one.
pub fn split_by_memory(models: &[CovarianceModel]) -> Result<(usize, usize)> {
    let classes: Vec<Dependence> = models
        .iter()
        .map(|m| Ok(m.classify(1)?.class))
        .collect::<Result<_>>()?;
    let m = classes
        .iter()
        .take_while(|c| **c == Dependence::ShortRange)
        .count();
    if classes[m..].contains(&Dependence::ShortRange) {
        return Err(Error::InvalidModel(
            "short-range components must precede long-range components".into(),
        ));
    }
    Ok((m, models.len() - m))
}

/// Prepared samplers for every component of a vector field.
pub struct VectorSampler {
    samplers: Vec<FieldSampler>,
    m: usize,
    n: usize,
}

impl VectorSampler {
    pub fn new(
        grid: GridSpec,
        models: &[CovarianceModel],
        options: &SimulationOptions,
    ) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidModel(
                "a vector field needs at least one component".into(),
            ));
        }
        let (m, n) = split_by_memory(models)?;
        let mut samplers: Vec<FieldSampler> = Vec::with_capacity(models.len());
        for model in models {
            // identical models share the same preparation
            let reuse = samplers.iter().position(|s| s.model == *model);
            let sampler = match reuse {
                Some(k) => FieldSampler {
                    grid,
                    model: *model,
                    backend: samplers[k].backend.clone(),
                },
                None => FieldSampler::new(grid, *model, options)?,
            };
            samplers.push(sampler);
        }
        Ok(Self { samplers, m, n })
    }

    pub fn grid(&self) -> &GridSpec {
        self.samplers[0].grid()
    }

    pub fn components(&self) -> &[FieldSampler] {
        &self.samplers
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Component `j` uses stream `base_stream + j`.
    pub fn sample(&self, seed: u64, base_stream: u64) -> VectorFieldRealization {
        VectorFieldRealization {
            components: self
                .samplers
                .iter()
                .enumerate()
                .map(|(j, s)| s.sample(seed, base_stream + j as u64))
                .collect(),
            m: self.m,
            n: self.n,
        }
    }
}

pub fn simulate_vector(
    grid: GridSpec,
    models: &[CovarianceModel],
    seed: u64,
    base_stream: u64,
    options: &SimulationOptions,
) -> Result<VectorFieldRealization> {
    Ok(VectorSampler::new(grid, models, options)?.sample(seed, base_stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_layout() {
        let g = GridSpec::new(3.0, 1.0).unwrap();
        assert_eq!(g.points_per_side, 6);
        assert_abs_diff_eq!(g.coord(0), -2.5);
        assert_abs_diff_eq!(g.coord(5), 2.5);
        let odd = GridSpec::new(2.5, 1.0).unwrap();
        assert_eq!(odd.points_per_side, 5);
        let w = odd.window();
        assert!((0..5).all(|i| w.contains(&[odd.coord(i), odd.coord(i)])));
        let frac = GridSpec::new(1.3, 0.5).unwrap();
        assert!(frac.points_per_side as f64 * frac.h >= 2.0 * frac.r);
        assert_eq!(GridSpec::new(0.5, 1.0).unwrap().points_per_side, 1);
        assert!(GridSpec::new(1.0, 0.0).is_err());
        assert_abs_diff_eq!(g.distance((0, 0), (3, 4)), 5.0);
    }

    #[test]
    fn single_node_is_standard_normal() {
        let grid = GridSpec::new(0.5, 1.0).unwrap();
        let s = FieldSampler::new(
            grid,
            CovarianceModel::cauchy(0.4).unwrap(),
            &SimulationOptions::default(),
        )
        .unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|k| s.sample(11, k).values[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.98..=1.02).contains(&var), "{var}");
    }

    #[test]
    fn determinism_and_stream_separation() {
        let grid = GridSpec::new(4.0, 1.0).unwrap();
        let model = CovarianceModel::cauchy(1.0).unwrap();
        let opts = SimulationOptions::default();
        let a = simulate_component(grid, model, 5, 3, &opts).unwrap();
        let b = simulate_component(grid, model, 5, 3, &opts).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_component(grid, model, 5, 4, &opts).unwrap();
        assert_ne!(a.values, c.values);
        assert_eq!(a.method(), SimulationMethod::ExactCholesky);
        assert_eq!(embedding_diagnostics(&a).clip_error, 0.0);
    }

    #[test]
    fn vector_layout() {
        let grid = GridSpec::new(2.0, 1.0).unwrap();
        let models = [
            CovarianceModel::cauchy(4.0).unwrap(),
            CovarianceModel::cauchy(0.4).unwrap(),
            CovarianceModel::cauchy(0.4).unwrap(),
        ];
        let v = simulate_vector(grid, &models, 1, 0, &SimulationOptions::default()).unwrap();
        assert_eq!((v.m, v.n), (1, 2));
        assert_eq!(v.components[2].stream, 2);
        assert_ne!(v.components[1].values, v.components[2].values);
        assert!(simulate_vector(grid, &[], 1, 0, &SimulationOptions::default()).is_err());
        let bad = [models[1], models[0]];
        assert!(matches!(
            simulate_vector(grid, &bad, 1, 0, &SimulationOptions::default()),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn components_are_uncorrelated() {
        let grid = GridSpec::new(4.0, 1.0).unwrap();
        let models = [
            CovarianceModel::cauchy(4.0).unwrap(),
            CovarianceModel::cauchy(0.4).unwrap(),
        ];
        let sampler = VectorSampler::new(grid, &models, &SimulationOptions::default()).unwrap();
        let reps = 1000;
        let mut sum = 0.0;
        for k in 0..reps {
            let v = sampler.sample(2, k * 64);
            sum += v.components[0]
                .values
                .iter()
                .zip(&v.components[1].values)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        let npts = grid.len();
        let mean = sum / (reps as f64 * npts as f64);
        // Var of the grid average of eta_1 eta_2 is sum_{x,y} B_1 B_2 / N^2.
        let pps = grid.points_per_side;
        let mut s2 = 0.0;
        for a in 0..npts {
            for b in 0..npts {
                let dist = grid.distance((a / pps, a % pps), (b / pps, b % pps));
                s2 += models[0].evaluate(dist) * models[1].evaluate(dist);
            }
        }
        let sd = (s2 / (npts * npts) as f64 / reps as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd, "{mean} vs sd {sd}");
    }
}
