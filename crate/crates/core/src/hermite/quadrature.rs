//! Gaussian-weighted quadrature for Hermite coefficients.
//!
//! Smooth functionals use tensor Gauss-Hermite rules. Functionals with jumps
//! use composite Gauss-Legendre panels with the normal density folded into the
//! weights; along the first axis the panels are additionally split at the jump
//! locations reported by the functional. Dimensions above `tensor_max_dim`
//! fall back to randomized Halton points.

use rayon::prelude::*;

use super::{hermite_table, Coefficient, Functional, MultiIndex};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite_normal, gauss_legendre, panel_normal_on, Rule};
use crate::rng::stream_rng;
use crate::special::normal_quantile;

/// Default number of quasi-Monte Carlo points.
pub const QMC_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSettings {
    /// Budget of nodes per axis at the coarsest level. Gauss-Hermite uses a
    /// third of it; the panel rule spreads it over the panels, at least two
    /// per panel.
    pub nodes_per_dim: usize,
    /// Largest change between successive levels accepted as converged.
    pub tolerance: f64,
    /// Number of node doublings after the coarsest level.
    pub max_refinements: usize,
    /// Positive panel edges for non-smooth functionals, mirrored about the
    /// origin; the last edge is the truncation point.
    pub panel_edges: Vec<f64>,
    pub tensor_max_dim: usize,
    pub qmc_points: usize,
    pub qmc_shifts: usize,
    pub qmc_seed: u64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            nodes_per_dim: 60,
            tolerance: 1e-6,
            max_refinements: 2,
            panel_edges: vec![0.02, 0.08, 0.2, 0.45, 0.9, 1.6, 2.6, 4.0, 6.0, 9.0],
            tensor_max_dim: 4,
            qmc_points: QMC_POINTS,
            qmc_shifts: 16,
            qmc_seed: 0x5eed,
        }
    }
}

impl QuadratureSettings {
    pub fn with_nodes(nodes_per_dim: usize) -> Self {
        Self {
            nodes_per_dim,
            ..Self::default()
        }
    }

    fn hermite_nodes(&self, level: usize) -> usize {
        (self.nodes_per_dim / 3).max(4) << level
    }

    fn panel_nodes(&self, level: usize) -> usize {
        (self.nodes_per_dim / (2 * self.panel_edges.len())).max(2) << level
    }

    fn symmetric_edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.panel_edges.iter().rev().map(|x| -x).collect();
        e.push(0.0);
        e.extend_from_slice(&self.panel_edges);
        e
    }
}

pub(crate) struct Sweep {
    pub coeffs: Vec<Coefficient>,
    pub second_moment: f64,
}

/// `(C_v, err)` for a single index.
pub fn coefficient_quadrature<G: Functional + ?Sized>(
    g: &G,
    v: &MultiIndex,
    nodes_per_dim: usize,
) -> Result<(f64, f64)> {
    let c = coefficients_with(
        g,
        std::slice::from_ref(v),
        &QuadratureSettings::with_nodes(nodes_per_dim),
    )?;
    Ok((c[0].value, c[0].err))
}

/// `C_v` with error estimates for several indices in one sweep.
pub fn coefficients_with<G: Functional + ?Sized>(
    g: &G,
    indices: &[MultiIndex],
    settings: &QuadratureSettings,
) -> Result<Vec<Coefficient>> {
    Ok(expansion_sweep(g, indices, settings)?.coeffs)
}

pub(crate) fn expansion_sweep<G: Functional + ?Sized>(
    g: &G,
    indices: &[MultiIndex],
    settings: &QuadratureSettings,
) -> Result<Sweep> {
    let p = g.dim();
    if let Some(v) = indices.iter().find(|v| v.dim() != p) {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: v.dim(),
        });
    }
    if let Some(v) = indices
        .iter()
        .find(|v| v.0.iter().any(|&k| k as usize > super::MAX_DEGREE))
    {
        return Err(Error::DegreeTooLarge(v.order()));
    }
    if p > settings.tensor_max_dim {
        return qmc_sweep(g, indices, settings);
    }

    let smooth = g.is_smooth();
    let mut previous: Option<Vec<f64>> = None;
    let mut last_diff = f64::INFINITY;
    for level in 0..=settings.max_refinements {
        let current = if smooth {
            let rule = gauss_hermite_normal(settings.hermite_nodes(level));
            tensor_sweep(g, indices, &rule, None)?
        } else {
            let m = settings.panel_nodes(level);
            let edges = settings.symmetric_edges();
            let rule = panel_normal_on(&edges, m);
            let jumps = JumpAxis {
                reference: gauss_legendre(m, -1.0, 1.0),
                edges,
            };
            tensor_sweep(g, indices, &rule, Some(&jumps))?
        };
        if let Some(prev) = previous.as_ref() {
            let diffs: Vec<f64> = current
                .iter()
                .zip(prev)
                .map(|(a, b)| (a - b).abs())
                .collect();
            last_diff = diffs.iter().cloned().fold(0.0, f64::max);
            if last_diff <= settings.tolerance {
                return Ok(finish(&current, &diffs));
            }
        }
        previous = Some(current);
    }
    let prev = previous.expect("at least one level");
    let worst = prev[..indices.len()]
        .iter()
        .cloned()
        .fold(0.0, |acc: f64, x| if x.abs() > acc.abs() { x } else { acc });
    Err(Error::QuadratureNotConverged {
        estimate: worst,
        error: last_diff,
        tolerance: settings.tolerance,
    })
}

fn finish(values: &[f64], errs: &[f64]) -> Sweep {
    let n = values.len() - 1;
    Sweep {
        coeffs: values[..n]
            .iter()
            .zip(errs)
            .map(|(&value, &err)| Coefficient { value, err })
            .collect(),
        second_moment: values[n],
    }
}

struct JumpAxis {
    reference: Rule,
    edges: Vec<f64>,
}

const NORM: f64 = 2.506_628_274_631_000_7; // sqrt(2 pi)

/// Tensor-product accumulation of `E[G e_v]` for every index, plus `E[G^2]`
/// in the last slot.
fn tensor_sweep<G: Functional + ?Sized>(
    g: &G,
    indices: &[MultiIndex],
    rule: &Rule,
    jumps: Option<&JumpAxis>,
) -> Result<Vec<f64>> {
    let p = g.dim();
    let n = rule.len();
    let nidx = indices.len();
    let kmax: Vec<usize> = (0..p)
        .map(|j| indices.iter().map(|v| v.0[j] as usize).max().unwrap_or(0))
        .collect();
    let rest_kmax = kmax.iter().skip(1).cloned().max().unwrap_or(0);
    let tables: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| {
            let mut t = vec![0.0; rest_kmax + 1];
            hermite_table(x, &mut t);
            t
        })
        .collect();
    let outer = n.pow((p - 1) as u32);
    let block = 64usize;
    let nblocks = outer.div_ceil(block);

    let partials: Vec<Result<Vec<f64>>> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; nidx + 1];
            let mut digits = vec![0usize; p.saturating_sub(1)];
            let mut w = vec![0.0; p];
            let mut prod_rest = vec![0.0; nidx];
            let mut h0 = vec![0.0; kmax[0] + 1];
            let mut breaks = Vec::new();
            let mut axis0: Vec<(f64, f64)> = Vec::new();
            for o in b * block..((b + 1) * block).min(outer) {
                let mut rem = o;
                for d in digits.iter_mut() {
                    *d = rem % n;
                    rem /= n;
                }
                let mut wt = 1.0;
                for (j, &d) in digits.iter().enumerate() {
                    w[j + 1] = rule.nodes[d];
                    wt *= rule.weights[d];
                }
                for (slot, v) in prod_rest.iter_mut().zip(indices) {
                    *slot = digits
                        .iter()
                        .zip(&v.0[1..])
                        .map(|(&d, &k)| tables[d][k as usize])
                        .product();
                }
                axis0.clear();
                match jumps {
                    Some(ja) => {
                        breaks.clear();
                        breaks.extend_from_slice(&ja.edges);
                        g.first_axis_breaks(&w[1..], &mut breaks);
                        let (lo, hi) = (ja.edges[0], *ja.edges.last().unwrap());
                        breaks.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
                        breaks.sort_by(|a, c| a.total_cmp(c));
                        breaks.dedup();
                        for seg in breaks.windows(2) {
                            let (a, c) = (seg[0], seg[1]);
                            let (mid, half) = (0.5 * (a + c), 0.5 * (c - a));
                            if half <= 0.0 {
                                continue;
                            }
                            for (t, wr) in ja.reference.nodes.iter().zip(&ja.reference.weights) {
                                let x = mid + half * t;
                                axis0.push((x, half * wr * (-0.5 * x * x).exp() / NORM));
                            }
                        }
                    }
                    None => {
                        axis0.extend(rule.nodes.iter().cloned().zip(rule.weights.iter().cloned()))
                    }
                }
                for (i0, &(x0, w0)) in axis0.iter().enumerate() {
                    w[0] = x0;
                    let gv = g.eval(&w);
                    if !gv.is_finite() {
                        return Err(Error::NonFiniteValue {
                            node: o * axis0.len() + i0,
                        });
                    }
                    if gv == 0.0 {
                        continue;
                    }
                    let weight = wt * w0 * gv;
                    hermite_table(x0, &mut h0);
                    for ((a, v), pr) in acc.iter_mut().zip(indices).zip(&prod_rest) {
                        *a += weight * h0[v.0[0] as usize] * pr;
                    }
                    acc[nidx] += weight * gv;
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![0.0; nidx + 1];
    for part in partials {
        for (t, x) in total.iter_mut().zip(part?) {
            *t += x;
        }
    }
    Ok(total)
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

/// Randomized Halton estimate: the mean over independent Cranley-Patterson
/// shifts, with the standard error across shifts as the error.
fn qmc_sweep<G: Functional + ?Sized>(
    g: &G,
    indices: &[MultiIndex],
    settings: &QuadratureSettings,
) -> Result<Sweep> {
    use rand::Rng;

    let p = g.dim();
    if p > PRIMES.len() {
        return Err(Error::Domain(format!(
            "quasi-Monte Carlo supports at most {} dimensions",
            PRIMES.len()
        )));
    }
    let shifts = settings.qmc_shifts.max(2);
    let per_shift = (settings.qmc_points / shifts).max(1);
    let nidx = indices.len();
    let kmax = indices
        .iter()
        .flat_map(|v| v.0.iter())
        .cloned()
        .max()
        .unwrap_or(0) as usize;

    let estimates: Vec<Result<Vec<f64>>> = (0..shifts)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(settings.qmc_seed, s as u64);
            let shift: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let mut acc = vec![0.0; nidx + 1];
            let mut w = vec![0.0; p];
            let mut tables = vec![vec![0.0; kmax + 1]; p];
            for i in 0..per_shift {
                for j in 0..p {
                    let mut u = radical_inverse(i as u64 + 1, PRIMES[j]) + shift[j];
                    if u >= 1.0 {
                        u -= 1.0;
                    }
                    let u = u.clamp(1e-300, 1.0 - 1e-16);
                    w[j] = normal_quantile(u);
                    hermite_table(w[j], &mut tables[j]);
                }
                let gv = g.eval(&w);
                if !gv.is_finite() {
                    return Err(Error::NonFiniteValue { node: i });
                }
                for (a, v) in acc.iter_mut().zip(indices) {
                    *a += gv
                        * v.0
                            .iter()
                            .enumerate()
                            .map(|(j, &k)| tables[j][k as usize])
                            .product::<f64>();
                }
                acc[nidx] += gv * gv;
            }
            Ok(acc.into_iter().map(|x| x / per_shift as f64).collect())
        })
        .collect();
    let estimates: Vec<Vec<f64>> = estimates.into_iter().collect::<Result<_>>()?;
    let k = shifts as f64;
    let mean: Vec<f64> = (0..=nidx)
        .map(|i| estimates.iter().map(|e| e[i]).sum::<f64>() / k)
        .collect();
    let se: Vec<f64> = (0..=nidx)
        .map(|i| {
            let var = estimates
                .iter()
                .map(|e| (e[i] - mean[i]).powi(2))
                .sum::<f64>()
                / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    Ok(finish(&mean, &se))
}
