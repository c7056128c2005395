//! Replicated Monte Carlo experiments and their reports.
//!
//! Replication `rep` of block `b` (one regime at one `r`) draws its field
//! from stream `stream_id(b, rep)`, so results do not depend on the number of
//! threads or on scheduling order.

mod config;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    split_exponents, CoefficientGrid, ExperimentConfig, ExperimentKind, FunctionalSpec,
    PolynomialTerm, RegimeConfig,
};

use crate::asymptotics::{normalizer, predict_from_sets, ScalingPrediction};
use crate::covmodels::SlowlyVaryingSpec;
use crate::error::{Error, Result};
use crate::functionals::{centered_minkowski, Decomposer, FunctionalKind, FunctionalSample};
use crate::hermite::{
    coefficients_with, reduction_sets, student_mean_constant, student_rank1_coeff,
    student_rank2_coeff, student_rank2_deriv, CoefficientRecord, HermiteExpansion, MultiIndex,
    QuadratureSettings, ReductionSets, StudentIndicator,
};
use crate::rng::{stream_id, GENERATOR_NAME};
use crate::simulator::{write_csv, write_fldg, GridSpec, SimulationMethod, VectorSampler};
use crate::special::normal_cdf;
use crate::stats::{
    excess_kurtosis, ks_one_sample, ks_two_sample, loglog_slope, qq_points, skewness, write_xy_csv,
    SampleSet,
};
use crate::window::WindowSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Spatial dimension of every simulated field.
const D: usize = 2;

/// One functional value with full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub set: String,
    pub kind: FunctionalKind,
    pub r: f64,
    pub h: f64,
    pub seed: u64,
    pub stream: u64,
    pub value: f64,
}

impl SampleRow {
    fn new(set: &str, s: &FunctionalSample) -> Self {
        Self {
            set: set.to_string(),
            kind: s.kind,
            r: s.r,
            h: s.h,
            seed: s.seed,
            stream: s.stream,
            value: s.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl SetSummary {
    fn of(s: &SampleSet) -> Self {
        Self {
            label: s.label.clone(),
            n: s.len(),
            mean: s.mean(),
            variance: s.variance(),
            skewness: skewness(s).ok(),
            excess_kurtosis: excess_kurtosis(s).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub a: String,
    pub b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Shape of a standardized sample against the standard normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityCheck {
    pub label: String,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub label: String,
    /// `(r, sample variance)`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub predicted_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsEntry {
    pub set: String,
    pub r: f64,
    pub component: usize,
    pub model: String,
    pub method: SimulationMethod,
    pub clip_error: f64,
    pub padded_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub set: String,
    pub reduction: ReductionSets,
    pub prediction: ScalingPrediction,
    /// `(r, normalizing sequence at r)`.
    pub normalizers: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub n: usize,
    pub a: f64,
    pub mean_constant: f64,
    pub rank1: f64,
    pub rank2: f64,
    pub rank2_deriv: f64,
    pub rank2_deriv_fd: f64,
    pub rank1_quadrature: Option<f64>,
    pub rank1_quadrature_err: Option<f64>,
    pub rank2_quadrature: Option<f64>,
    pub rank2_quadrature_err: Option<f64>,
    pub quadrature_status: String,
}

/// Everything in `report.json`. Wall-clock times live in `timing.json` so
/// that reports of identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub input_hash: String,
    pub generator: String,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub expansion: Vec<CoefficientRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<PredictionEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<SetSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ks: Vec<KsEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub normality: Vec<NormalityCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticsEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<CoefficientRow>,
}

impl ExperimentReport {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            experiment: cfg.experiment,
            input_hash: cfg.input_hash()?,
            generator: GENERATOR_NAME.to_string(),
            config: cfg.clone(),
            expansion: Vec::new(),
            predictions: Vec::new(),
            sets: Vec::new(),
            ks: Vec::new(),
            normality: Vec::new(),
            fits: Vec::new(),
            diagnostics: Vec::new(),
            coefficients: Vec::new(),
        })
    }

    pub fn set(&self, label: &str) -> Option<&SetSummary> {
        self.sets.iter().find(|s| s.label == label)
    }

    pub fn ks_between(&self, a: &str, b: &str) -> Option<&KsEntry> {
        self.ks
            .iter()
            .find(|k| (k.a == a && k.b == b) || (k.a == b && k.b == a))
    }

    pub fn fit(&self, label: &str) -> Option<&FitEntry> {
        self.fits.iter().find(|f| f.label == label)
    }

    pub fn normality_of(&self, label: &str) -> Option<&NormalityCheck> {
        self.normality.iter().find(|n| n.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub phases: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: ExperimentReport,
    pub samples: Vec<SampleRow>,
    /// `(pair name, matched quantiles)`, written to `qq_<pair>.csv`.
    pub qq: Vec<(String, Vec<(f64, f64)>)>,
    pub timing: Timing,
}

impl ExperimentResult {
    /// Values of one set, in replication order.
    pub fn values(&self, set: &str, kind: FunctionalKind) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.set == set && s.kind == kind)
            .map(|s| s.value)
            .collect()
    }

    /// Writes `samples.csv`, `ks.csv`, `qq_*.csv`, `coefficients.csv`,
    /// `report.json` and `timing.json`, skipping empty tables.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if !self.samples.is_empty() {
            write_rows(&dir.join("samples.csv"), &self.samples)?;
        }
        if !self.report.ks.is_empty() {
            write_rows(&dir.join("ks.csv"), &self.report.ks)?;
        }
        if !self.report.coefficients.is_empty() {
            write_rows(&dir.join("coefficients.csv"), &self.report.coefficients)?;
        }
        for (name, pts) in &self.qq {
            write_xy_csv(&dir.join(format!("qq_{}.csv", file_safe(name))), pts)?;
        }
        write_json(&dir.join("report.json"), &self.report)?;
        write_json(&dir.join("timing.json"), &self.timing)
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `f` for every replication in parallel and returns the results in
/// replication order.
fn replicate<T: Send>(reps: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps as u64).into_par_iter().map(f).collect()
}

fn block_id(regime: usize, r_index: usize) -> u32 {
    ((regime as u32) << 16) | r_index as u32
}

/// Names a sample set, qualifying it by regime and `r` only when the
/// configuration has more than one of them.
struct Labeller {
    regimes: bool,
    radii: bool,
}

impl Labeller {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            regimes: cfg.regimes().len() > 1,
            radii: cfg.r_values.len() > 1,
        }
    }

    fn label(&self, regime: &str, name: &str, r: f64) -> String {
        let mut s = if self.regimes {
            format!("{regime}/{name}")
        } else {
            name.to_string()
        };
        if self.radii {
            s.push_str(&format!("@r={r}"));
        }
        s
    }
}

fn diagnostics(set: &str, r: f64, sampler: &VectorSampler) -> Vec<DiagnosticsEntry> {
    sampler
        .components()
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let d = s.diagnostics();
            DiagnosticsEntry {
                set: set.to_string(),
                r,
                component: j,
                model: s.model().to_string(),
                method: d.method,
                clip_error: d.clip_error,
                padded_size: d.padded_size,
            }
        })
        .collect()
}

fn predict(
    cfg: &ExperimentConfig,
    regime: &RegimeConfig,
    e: &HermiteExpansion,
) -> Result<(ReductionSets, PredictionEntry, SlowlyVaryingSpec)> {
    let (betas, alphas, l2) = split_exponents(&regime.components)?;
    let sets = reduction_sets(e, &betas, &alphas, D, &l2)?;
    let prediction =
        predict_from_sets(e, &sets, betas.len(), &alphas, D, &WindowSpec::square(1.0)?)?;
    let normalizers = cfg
        .r_values
        .iter()
        .map(|&r| (r, normalizer(&prediction, r, &l2)))
        .collect();
    let entry = PredictionEntry {
        set: regime.label.clone(),
        reduction: sets.clone(),
        prediction,
        normalizers,
    };
    Ok((sets, entry, l2))
}

/// Exponent predicted for the part of `K_r` carried by the indices `keep`.
fn partial_exponent(
    e: &HermiteExpansion,
    regime: &RegimeConfig,
    keep: impl Fn(&MultiIndex) -> bool,
) -> Option<f64> {
    let (betas, alphas, l2) = split_exponents(&regime.components).ok()?;
    let sub = HermiteExpansion::from_coefficients(
        e.dim(),
        e.nonzero()
            .filter(|(v, _)| keep(v))
            .map(|(v, c)| (v.clone(), c)),
    )
    .ok()?;
    let sets = reduction_sets(&sub, &betas, &alphas, D, &l2).ok()?;
    let p = predict_from_sets(
        &sub,
        &sets,
        betas.len(),
        &alphas,
        D,
        &WindowSpec::square(1.0).ok()?,
    )
    .ok()?;
    Some(p.exponent)
}

/// Decomposition samples of one regime at one `r`, grouped by kind.
struct Block {
    regime: String,
    r: f64,
    kinds: Vec<FunctionalKind>,
    values: Vec<Vec<f64>>,
}

struct DecompositionRun {
    report: ExperimentReport,
    samples: Vec<SampleRow>,
    blocks: Vec<Block>,
    phases: Vec<(String, f64)>,
    expansion: HermiteExpansion,
}

fn run_decompositions(cfg: &ExperimentConfig) -> Result<DecompositionRun> {
    cfg.validate()?;
    let spec = cfg.functional()?;
    let mut phases = Vec::new();
    let t = Instant::now();
    let g = spec.build()?;
    let e = spec.expansion()?;
    phases.push(("expansion".to_string(), t.elapsed().as_secs_f64()));
    let mut report = ExperimentReport::new(cfg)?;
    report.expansion = e.records();
    let mut samples = Vec::new();
    let mut blocks = Vec::new();
    for (ri, regime) in cfg.regimes().iter().enumerate() {
        let (sets, entry, _) = predict(cfg, regime, &e)?;
        report.predictions.push(entry);
        let dec = Decomposer::new(g.as_ref(), &e, &sets)?;
        for (k, &r) in cfg.r_values.iter().enumerate() {
            let t = Instant::now();
            let sampler = VectorSampler::new(
                GridSpec::new(r, cfg.h)?,
                &regime.components,
                &cfg.simulation,
            )?;
            report
                .diagnostics
                .extend(diagnostics(&regime.label, r, &sampler));
            let block = block_id(ri, k);
            let reps = replicate(cfg.replications, |rep| {
                dec.samples(&sampler.sample(cfg.seed, stream_id(block, rep)))
            })?;
            let kinds: Vec<FunctionalKind> = reps[0].iter().map(|s| s.kind).collect();
            let mut values = vec![Vec::with_capacity(reps.len()); kinds.len()];
            for rep in &reps {
                for (i, s) in rep.iter().enumerate() {
                    values[i].push(s.value);
                    samples.push(SampleRow::new(&regime.label, s));
                }
            }
            blocks.push(Block {
                regime: regime.label.clone(),
                r,
                kinds,
                values,
            });
            phases.push((format!("{}@r={r}", regime.label), t.elapsed().as_secs_f64()));
        }
    }
    Ok(DecompositionRun {
        report,
        samples,
        blocks,
        phases,
        expansion: e,
    })
}

/// Pairs compared by the reduction experiment; the first three also get Q-Q
/// tables.
const REDUCTION_PAIRS: [(FunctionalKind, FunctionalKind); 4] = [
    (FunctionalKind::Kr, FunctionalKind::Vr),
    (FunctionalKind::Kr, FunctionalKind::KrKappa),
    (FunctionalKind::Kr, FunctionalKind::KrStarSum),
    (FunctionalKind::Vr, FunctionalKind::KrKappa),
];

/// Simulates `K_r` and its decomposition, scales every kind by its sample
/// standard deviation and compares the laws pairwise.
pub fn run_reduction(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let run = run_decompositions(cfg)?;
    let mut report = run.report;
    let names = Labeller::new(cfg);
    let mut qq = Vec::new();
    for b in &run.blocks {
        let mut scaled = Vec::new();
        for (kind, vals) in b.kinds.iter().zip(&b.values) {
            let label = names.label(&b.regime, &kind.to_string(), b.r);
            let set = SampleSet::new(label.clone(), vals.clone())?;
            report.sets.push(SetSummary::of(&set));
            let sd = set.std_dev();
            if sd > 0.0 {
                scaled.push((
                    *kind,
                    SampleSet::new(label, vals.iter().map(|x| x / sd).collect())?,
                ));
            }
        }
        let find = |k: FunctionalKind| scaled.iter().find(|(kind, _)| *kind == k).map(|(_, s)| s);
        for (i, (ka, kb)) in REDUCTION_PAIRS.iter().enumerate() {
            let (Some(a), Some(b)) = (find(*ka), find(*kb)) else {
                continue;
            };
            report.ks.push(ks_entry(a, b));
            if i < 3 {
                qq.push((
                    format!("{}_vs_{}", a.label, b.label),
                    qq_points(a, b, cfg.qq_points),
                ));
            }
        }
    }
    Ok(ExperimentResult {
        report,
        samples: run.samples,
        qq,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            phases: run.phases,
        },
    })
}

fn ks_entry(a: &SampleSet, b: &SampleSet) -> KsEntry {
    let k = ks_two_sample(a, b);
    KsEntry {
        a: a.label.clone(),
        b: b.label.clone(),
        statistic: k.statistic,
        p_value: k.p_value,
        n1: k.n1,
        n2: k.n2,
    }
}

/// Sample variance of every decomposition kind across `r`, with log-log fits
/// against the predicted exponents.
pub fn run_variance_scan(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let run = run_decompositions(cfg)?;
    let mut report = run.report;
    let names = Labeller::new(cfg);
    let e = &run.expansion;
    for regime in cfg.regimes() {
        let ours: Vec<&Block> = run
            .blocks
            .iter()
            .filter(|b| b.regime == regime.label)
            .collect();
        let Some(first) = ours.first() else { continue };
        let entry = report
            .predictions
            .iter()
            .find(|p| p.set == regime.label)
            .ok_or_else(|| Error::Config(format!("no prediction for regime {}", regime.label)))?;
        let kappa = entry.reduction.kappa;
        let stars = entry.reduction.n_star.clone();
        for (i, kind) in first.kinds.iter().enumerate() {
            let mut points = Vec::new();
            for b in &ours {
                let set = SampleSet::new(
                    names.label(&b.regime, &kind.to_string(), b.r),
                    b.values[i].clone(),
                )?;
                report.sets.push(SetSummary::of(&set));
                points.push((b.r, set.variance()));
            }
            let predicted = match kind {
                FunctionalKind::Kr => partial_exponent(e, &regime, |_| true),
                FunctionalKind::KrKappa => partial_exponent(e, &regime, |v| v.order() == kappa),
                FunctionalKind::Vr => partial_exponent(e, &regime, |v| v.order() > kappa),
                FunctionalKind::KrStar(l) => {
                    partial_exponent(e, &regime, |v| stars.get(l).is_some_and(|s| s.contains(v)))
                }
                FunctionalKind::KrStarSum => {
                    partial_exponent(e, &regime, |v| stars.values().any(|s| s.contains(v)))
                }
                _ => None,
            };
            let Ok(fit) = loglog_slope(&points) else {
                continue;
            };
            let label = if names.regimes {
                format!("{}/{kind}", regime.label)
            } else {
                kind.to_string()
            };
            report.fits.push(FitEntry {
                label,
                points,
                slope: fit.slope,
                intercept: fit.intercept,
                stderr: fit.stderr,
                predicted_exponent: predicted,
            });
        }
    }
    Ok(ExperimentResult {
        report,
        samples: run.samples,
        qq: Vec::new(),
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            phases: run.phases,
        },
    })
}

/// Centered excursion area of the Student field in every configured regime,
/// with normality diagnostics and pairwise comparisons of the samples scaled
/// by their standard deviations (the functional is already centered by its
/// exact mean).
pub fn run_student_minkowski(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let FunctionalSpec::Student { n, a, .. } = *cfg.functional()? else {
        return Err(Error::Config(
            "the Student experiment needs a student functional".into(),
        ));
    };
    let mut phases = Vec::new();
    let mut report = ExperimentReport::new(cfg)?;
    let t = Instant::now();
    let e = cfg.functional()?.expansion()?;
    report.expansion = e.records();
    phases.push(("expansion".to_string(), t.elapsed().as_secs_f64()));
    let names = Labeller::new(cfg);
    let regimes = cfg.regimes();
    let mut samples = Vec::new();
    let mut scaled: Vec<SampleSet> = Vec::new();
    for (ri, regime) in regimes.iter().enumerate() {
        // regimes at the boundary have no prediction but can still be simulated
        if let Ok((_, entry, _)) = predict(cfg, regime, &e) {
            report.predictions.push(entry);
        }
        for (k, &r) in cfg.r_values.iter().enumerate() {
            let t = Instant::now();
            let sampler = VectorSampler::new(
                GridSpec::new(r, cfg.h)?,
                &regime.components,
                &cfg.simulation,
            )?;
            report
                .diagnostics
                .extend(diagnostics(&regime.label, r, &sampler));
            let block = block_id(ri, k);
            let reps = replicate(cfg.replications, |rep| {
                centered_minkowski(&sampler.sample(cfg.seed, stream_id(block, rep)), n, a)
            })?;
            samples.extend(reps.iter().map(|s| SampleRow::new(&regime.label, s)));
            let label = if names.radii {
                format!("{}@r={r}", regime.label)
            } else {
                regime.label.clone()
            };
            let set = SampleSet::new(label, reps.iter().map(|s| s.value).collect())?;
            report.sets.push(SetSummary::of(&set));
            let z = set.standardized()?;
            let ks = ks_one_sample(&z, normal_cdf);
            report.normality.push(NormalityCheck {
                label: z.label.clone(),
                skewness: skewness(&z)?,
                excess_kurtosis: excess_kurtosis(&z)?,
                ks_statistic: ks.statistic,
                ks_p_value: ks.p_value,
            });
            let sd = set.std_dev();
            scaled.push(SampleSet::new(
                set.label.clone(),
                set.values().iter().map(|x| x / sd).collect(),
            )?);
            phases.push((format!("{}@r={r}", regime.label), t.elapsed().as_secs_f64()));
        }
    }
    let mut qq = Vec::new();
    for i in 0..scaled.len() {
        for j in i + 1..scaled.len() {
            let (x, y) = (&scaled[i], &scaled[j]);
            report.ks.push(ks_entry(x, y));
            qq.push((
                format!("{}_vs_{}", x.label, y.label),
                qq_points(x, y, cfg.qq_points),
            ));
        }
    }
    Ok(ExperimentResult {
        report,
        samples,
        qq,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            phases,
        },
    })
}

/// Closed-form Student coefficients over the configured `(n, a)` grid,
/// cross-checked against tensor quadrature of the indicator.
pub fn run_coefficients(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let grid = &cfg.coefficients;
    let mut report = ExperimentReport::new(cfg)?;
    let settings = QuadratureSettings::with_nodes(grid.quadrature_nodes);
    for &n in &grid.n_values {
        for &a in &grid.a_values {
            let h = grid.fd_step;
            let fd = (student_rank2_coeff(n, a + h)? - student_rank2_coeff(n, a - h)?) / (2.0 * h);
            let mut row = CoefficientRow {
                n,
                a,
                mean_constant: student_mean_constant(n, a),
                rank1: student_rank1_coeff(n, a),
                rank2: student_rank2_coeff(n, a)?,
                rank2_deriv: student_rank2_deriv(n, a),
                rank2_deriv_fd: fd,
                rank1_quadrature: None,
                rank1_quadrature_err: None,
                rank2_quadrature: None,
                rank2_quadrature_err: None,
                quadrature_status: "skipped".into(),
            };
            if n <= grid.cross_check_max_n {
                let g = StudentIndicator::new(n, a)?;
                let idx = [MultiIndex::unit(n + 1, 0, 1), MultiIndex::unit(n + 1, 1, 2)];
                match coefficients_with(&g, &idx, &settings) {
                    Ok(c) => {
                        row.rank1_quadrature = Some(c[0].value);
                        row.rank1_quadrature_err = Some(c[0].err);
                        row.rank2_quadrature = Some(c[1].value);
                        row.rank2_quadrature_err = Some(c[1].err);
                        row.quadrature_status = "ok".into();
                    }
                    Err(err @ Error::QuadratureNotConverged { .. }) => {
                        row.quadrature_status = err.to_string()
                    }
                    Err(err) => return Err(err),
                }
            }
            report.coefficients.push(row);
        }
    }
    Ok(ExperimentResult {
        report,
        samples: Vec::new(),
        qq: Vec::new(),
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            phases: Vec::new(),
        },
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.experiment {
        ExperimentKind::Reduction => run_reduction(cfg),
        ExperimentKind::StudentMinkowski => run_student_minkowski(cfg),
        ExperimentKind::VarianceScan => run_variance_scan(cfg),
        ExperimentKind::Coefficients => run_coefficients(cfg),
    }
}

/// Writes one realization of every component of the first regime at the
/// first `r` as `field_<j>.fldg` and `field_<j>.csv`, plus the sampler
/// diagnostics.
pub fn run_simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<DiagnosticsEntry>> {
    let regime = cfg
        .regimes()
        .into_iter()
        .next()
        .filter(|r| !r.components.is_empty())
        .ok_or_else(|| Error::Config("no components to simulate".into()))?;
    let r = *cfg
        .r_values
        .first()
        .ok_or_else(|| Error::Config("r_values must not be empty".into()))?;
    let sampler = VectorSampler::new(
        GridSpec::new(r, cfg.h)?,
        &regime.components,
        &cfg.simulation,
    )?;
    let field = sampler.sample(cfg.seed, stream_id(0, 0));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (j, c) in field.components.iter().enumerate() {
        write_fldg(&dir.join(format!("field_{j}.fldg")), c)?;
        write_csv(&dir.join(format!("field_{j}.csv")), c)?;
    }
    let diag = diagnostics(&regime.label, r, &sampler);
    #[derive(Serialize)]
    struct SimulateReport<'a> {
        schema_version: u32,
        input_hash: String,
        generator: &'a str,
        config: &'a ExperimentConfig,
        stream: u64,
        diagnostics: &'a [DiagnosticsEntry],
    }
    write_json(
        &dir.join("report.json"),
        &SimulateReport {
            schema_version: SCHEMA_VERSION,
            input_hash: cfg.input_hash()?,
            generator: GENERATOR_NAME,
            config: cfg,
            stream: stream_id(0, 0),
            diagnostics: &diag,
        },
    )?;
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_reduction() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
experiment = "reduction"
seed = 11
replications = 40
r_values = [6.0]
qq_points = 9

[functional]
type = "polynomial"
dim = 2
terms = [
  { coeff = 1.0, powers = [1, 0] },
  { coeff = 1.0, powers = [0, 2] },
  { coeff = -1.0, powers = [0, 0] },
]

[[components]]
kind = "cauchy"
z = 2.5

[[components]]
kind = "cauchy"
z = 0.2
"#,
        )
        .unwrap()
    }

    #[test]
    fn reduction_outputs_and_provenance() {
        let cfg = small_reduction();
        let res = run_reduction(&cfg).unwrap();
        let kr = res.values("default", FunctionalKind::Kr);
        let kk = res.values("default", FunctionalKind::KrKappa);
        let vr = res.values("default", FunctionalKind::Vr);
        assert_eq!(kr.len(), 40);
        for i in 0..40 {
            assert!((kr[i] - kk[i] - vr[i]).abs() < 1e-9 * kr[i].abs().max(1.0));
        }
        assert_eq!(res.report.ks.len(), 4);
        assert_eq!(res.qq.len(), 3);
        assert_eq!(res.qq[0].1.len(), 9);
        assert_eq!(res.report.predictions[0].prediction.exponent, 3.6);

        // any row regenerates from its seed and stream alone
        let row = res
            .samples
            .iter()
            .find(|s| s.kind == FunctionalKind::Kr)
            .unwrap();
        let g = cfg.functional().unwrap().build().unwrap();
        let sampler = VectorSampler::new(
            GridSpec::new(row.r, row.h).unwrap(),
            &cfg.components,
            &cfg.simulation,
        )
        .unwrap();
        let again =
            crate::functionals::integrate_g(&sampler.sample(row.seed, row.stream), g.as_ref())
                .unwrap();
        assert_eq!(again.value, row.value);
    }

    #[test]
    fn outputs_are_deterministic_and_thread_independent() {
        let cfg = small_reduction();
        let dir = tempfile::tempdir().unwrap();
        let a = run(&cfg).unwrap();
        a.write(&dir.path().join("a")).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| run(&cfg)).unwrap();
        b.write(&dir.path().join("b")).unwrap();
        for f in ["samples.csv", "report.json", "ks.csv", "qq_K_r_vs_V_r.csv"] {
            let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(x, y, "{f}");
        }
        let head = std::fs::read_to_string(dir.path().join("a/samples.csv")).unwrap();
        assert!(head.starts_with("set,kind,r,h,seed,stream,value\n"));
    }

    #[test]
    fn variance_scan_reports_fits() {
        let mut cfg = small_reduction();
        cfg.experiment = ExperimentKind::VarianceScan;
        cfg.r_values = vec![3.0, 5.0, 8.0];
        cfg.replications = 30;
        let res = run(&cfg).unwrap();
        let fit = res.report.fit("V_r").unwrap();
        assert_eq!(fit.points.len(), 3);
        assert_eq!(fit.predicted_exponent, Some(3.6));
        assert_eq!(
            res.report.fit("K_r_kappa").unwrap().predicted_exponent,
            Some(2.0)
        );
        assert!(res.report.set("V_r@r=5").is_some());
    }

    #[test]
    fn student_regimes() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
experiment = "student_minkowski"
seed = 3
replications = 20
r_values = [5.0]

[functional]
type = "student"
n = 2
a = 0.5

[[regimes]]
label = "short"
components = [{ kind = "cauchy", z = 4.0 }, { kind = "cauchy", z = 4.0 }, { kind = "cauchy", z = 4.0 }]

[[regimes]]
label = "mixed"
components = [{ kind = "cauchy", z = 4.0 }, { kind = "cauchy", z = 0.4 }, { kind = "cauchy", z = 0.4 }]
"#,
        )
        .unwrap();
        let res = run(&cfg).unwrap();
        assert_eq!(res.report.normality.len(), 2);
        assert!(res.report.ks_between("short", "mixed").is_some());
        assert_eq!(
            res.values("mixed", FunctionalKind::CenteredMinkowski).len(),
            20
        );
        let mixed = res
            .report
            .predictions
            .iter()
            .find(|p| p.set == "mixed")
            .unwrap();
        assert!((mixed.prediction.exponent - 3.2).abs() < 1e-9);
        let short = res
            .report
            .predictions
            .iter()
            .find(|p| p.set == "short")
            .unwrap();
        assert_eq!(short.prediction.exponent, 2.0);
    }

    #[test]
    fn coefficient_table() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
experiment = "coefficients"
[coefficients]
n_values = [2]
a_values = [0.0, 0.5]
"#,
        )
        .unwrap();
        let res = run(&cfg).unwrap();
        let rows = &res.report.coefficients;
        assert_eq!(rows[0].mean_constant, 0.5);
        assert!(rows[0].rank2.abs() < 1e-9);
        assert!((rows[1].mean_constant - 1.0 / 3.0).abs() < 1e-12);
        assert!((rows[1].rank1 - 0.354_615).abs() < 1e-6);
        for r in rows {
            assert!((r.rank2_deriv - r.rank2_deriv_fd).abs() < 1e-5);
            assert_eq!(r.quadrature_status, "ok");
            assert!((r.rank1_quadrature.unwrap() - r.rank1).abs() < 1e-5);
            assert!((r.rank2_quadrature.unwrap() - r.rank2).abs() < 1e-5);
        }
    }

    #[test]
    fn single_replication_is_rejected() {
        let mut cfg = small_reduction();
        cfg.replications = 1;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn simulate_writes_fields() {
        let cfg = small_reduction();
        let dir = tempfile::tempdir().unwrap();
        let diag = run_simulate(&cfg, dir.path()).unwrap();
        assert_eq!(diag.len(), 2);
        let f = crate::simulator::read_fldg(&dir.path().join("field_1.fldg")).unwrap();
        assert_eq!(f.1.len(), 144);
        assert!(dir.path().join("field_0.csv").exists());
    }
}
