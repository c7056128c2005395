//! Empirical summaries: ECDF, two-sample Kolmogorov-Smirnov, moments, Q-Q
//! points and log-log regression.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labelled nonempty sample of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub label: String,
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(node) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue { node });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            label: label.into(),
            values,
            sorted,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (zero for a single value).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `(x - mean) / sd` with the sample standard deviation.
    pub fn standardized(&self) -> Result<SampleSet> {
        let sd = self.std_dev();
        if !(sd > 0.0) {
            return Err(Error::DegenerateVariance);
        }
        let m = self.mean();
        SampleSet::new(
            self.label.clone(),
            self.values.iter().map(|x| (x - m) / sd).collect(),
        )
    }

    /// Fraction of values `<= x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&y| y <= x) as f64 / self.len() as f64
    }

    /// ECDF at each distinct value.
    pub fn ecdf_table(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let n = self.len() as f64;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    /// Type-7 quantile: linear interpolation between order statistics at
    /// position `(n - 1) p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let s = &self.sorted;
        let pos = (s.len() - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(s.len() - 1);
        s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

pub fn ks_two_sample(a: &SampleSet, b: &SampleSet) -> KsResult {
    let (x, y) = (a.sorted(), b.sorted());
    let (n1, n2) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n1 && j < n2 {
        let t = x[i].min(y[j]);
        while i < n1 && x[i] <= t {
            i += 1;
        }
        while j < n2 && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(ne.sqrt() * d),
        n1,
        n2,
    }
}

/// One-sample test of `a` against a continuous CDF.
pub fn ks_one_sample(a: &SampleSet, cdf: impl Fn(f64) -> f64) -> KsResult {
    let n = a.len() as f64;
    let d = a
        .sorted()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n1: a.len(),
        n2: 0,
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form of the CDF, fast for small lambda
        let mut cdf = 0.0;
        for k in 1..=100 {
            let t = (-((2 * k - 1) as f64).powi(2) * PI * PI / (8.0 * lambda * lambda)).exp();
            cdf += t;
            if t < 1e-16 {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / lambda * cdf
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let t = 2.0 * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { t } else { -t };
            if t < 1e-12 {
                break;
            }
        }
        s
    };
    p.clamp(0.0, 1.0)
}

fn central_moments(a: &SampleSet) -> Result<(f64, f64, f64)> {
    if a.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let m = a.mean();
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in a.values() {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if !(m2 > 1e-300) {
        return Err(Error::DegenerateVariance);
    }
    Ok((m2, m3, m4))
}

/// `m3 / m2^{3/2}` with central sample moments.
pub fn skewness(a: &SampleSet) -> Result<f64> {
    let (m2, m3, _) = central_moments(a)?;
    Ok(m3 / m2.powf(1.5))
}

/// `m4 / m2^2 - 3`.
pub fn excess_kurtosis(a: &SampleSet) -> Result<f64> {
    let (m2, _, m4) = central_moments(a)?;
    Ok(m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least squares of `log v` on `log r`.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    if let Some(&(r, v)) = pairs
        .iter()
        .find(|(r, v)| !(*r > 0.0 && *v > 0.0 && r.is_finite() && v.is_finite()))
    {
        return Err(Error::Domain(format!(
            "log-log fit needs positive finite pairs, got ({r}, {v})"
        )));
    }
    let mut rs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    if rs.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: rs.len(),
        });
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if pairs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LogLogFit {
        slope,
        intercept,
        stderr,
    })
}

/// `k` matched type-7 quantiles at probabilities `i / (k + 1)`.
pub fn qq_points(a: &SampleSet, b: &SampleSet, k: usize) -> Vec<(f64, f64)> {
    (1..=k)
        .map(|i| {
            let p = i as f64 / (k + 1) as f64;
            (a.quantile(p), b.quantile(p))
        })
        .collect()
}

/// Columns `x, y`.
pub fn write_xy_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y"])?;
    for (x, y) in points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
