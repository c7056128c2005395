use super::GridSpec;
use crate::covmodels::CovarianceModel;
use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, stream_rng};

/// Lower-triangular factor of the grid covariance matrix, packed by rows.
pub(super) struct CholeskyFactor {
    n: usize,
    packed: Vec<f64>,
}

fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl CholeskyFactor {
    pub(super) fn new(grid: &GridSpec, model: &CovarianceModel) -> Result<Self> {
        let pps = grid.points_per_side;
        let n = grid.len();
        let lag: Vec<f64> = (0..pps * pps)
            .map(|k| model.evaluate(grid.h * ((k / pps) as f64).hypot((k % pps) as f64)))
            .collect();
        let cov = |a: usize, b: usize| {
            let di = (a / pps).abs_diff(b / pps);
            let dj = (a % pps).abs_diff(b % pps);
            lag[di * pps + dj]
        };
        let mut packed = vec![0.0; row_start(n)];
        for i in 0..n {
            let (done, rest) = packed.split_at_mut(row_start(i));
            let row_i = &mut rest[..=i];
            for j in 0..=i {
                let row_j = if j < i {
                    &done[row_start(j)..row_start(j) + j]
                } else {
                    &row_i[..0]
                };
                let dot: f64 = if j < i {
                    row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum()
                } else {
                    row_i[..i].iter().map(|a| a * a).sum()
                };
                let s = cov(i, j) - dot;
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    row_i[i] = s.sqrt();
                } else {
                    row_i[j] = s / done[row_start(j) + j];
                }
            }
        }
        Ok(Self { n, packed })
    }

    pub(super) fn sample_into(&self, seed: u64, stream: u64, out: &mut [f64]) {
        let mut z = vec![0.0; self.n];
        fill_standard_normal(&mut stream_rng(seed, stream), &mut z);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.packed[row_start(i)..row_start(i) + i + 1];
            *o = row.iter().zip(&z).map(|(a, b)| a * b).sum();
        }
    }

    #[cfg(test)]
    pub(super) fn entry(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[row_start(i) + j]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn factor_reproduces_covariance() {
        let grid = GridSpec::new(2.5, 1.0).unwrap();
        let model = CovarianceModel::cauchy(0.4).unwrap();
        let f = CholeskyFactor::new(&grid, &model).unwrap();
        let pps = grid.points_per_side;
        for a in 0..grid.len() {
            for b in 0..=a {
                let llt: f64 = (0..=b).map(|k| f.entry(a, k) * f.entry(b, k)).sum();
                let d = grid.distance((a / pps, a % pps), (b / pps, b % pps));
                assert_abs_diff_eq!(llt, model.evaluate(d), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        // correlations round to exactly one at this spacing
        let grid = GridSpec::new(2e-7, 1e-7).unwrap();
        let model = CovarianceModel::cauchy(0.001).unwrap();
        assert!(matches!(
            CholeskyFactor::new(&grid, &model),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }
}
