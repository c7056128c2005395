//! One-dimensional quadrature rules.
//!
//! Adaptive Gauss-Kronrod (7/15) for the window integrals and the radial
//! coefficient integrals, plus fixed Gauss-Legendre and Gauss-Hermite rules
//! used to build tensor products.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Like [`integrate`], but the interval `[points[0], points[last]]` is first
/// split at the given interior points (kinks, jumps, singularities).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    let (res, tol) = adapt(f, points, opts);
    if res.abs_error <= tol {
        Ok(res)
    } else {
        Err(Error::QuadratureNotConverged {
            estimate: res.value,
            error: res.abs_error,
            tolerance: tol,
        })
    }
}

/// Best-effort variant of [`integrate_with_breaks`]: returns the current
/// estimate even when the subdivision budget runs out.
pub fn integrate_estimate<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> QuadResult {
    adapt(f, points, opts).0
}

fn adapt<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: &QuadOptions) -> (QuadResult, f64) {
    assert!(points.len() >= 2, "need at least the two end points");
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(&f, w[0], w[1]);
            evaluations += 15;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    let totals = |heap: &BinaryHeap<Segment>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };
    let mut splits = 0;
    loop {
        let (value, error) = totals(&heap);
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol || splits >= opts.max_subdivisions {
            let res = QuadResult {
                value,
                abs_error: error,
                evaluations,
            };
            return (res, tol);
        }
        let worst = heap.pop().expect("non-empty segment list");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at floating point resolution: accept it as is.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            splits += 1;
            continue;
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            evaluations += 15;
            heap.push(Segment {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
        splits += 1;
    }
}

/// A fixed quadrature rule: `sum_i weights[i] * f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre rule with `n` nodes on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let (xm, xl) = (0.5 * (b + a), 0.5 * (b - a));
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = xm - xl * z;
        nodes[n - 1 - i] = xm + xl * z;
        weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule for the standard normal density: `sum w_i f(x_i)`
/// approximates `E f(Z)`, `Z ~ N(0, 1)`. Exact for polynomials of degree
/// below `2n`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    assert!(n > 0 && n <= 400, "Gauss-Hermite order out of range");
    // Orthonormal physicists' recurrence with Newton refinement, then the
    // change of variables x -> sqrt(2) x to the probabilists' weight.
    let pim4 = PI.powf(-0.25);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j + 1) as f64).sqrt() * p2
                    - (j as f64 / (j + 1) as f64).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    let scale = 2f64.sqrt();
    let norm = PI.sqrt();
    let mut rule = Rule {
        nodes: nodes.iter().rev().map(|x| x * scale).collect(),
        weights: weights.iter().rev().map(|w| w / norm).collect(),
    };
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.0;
    }
    rule
}

/// Composite Gauss-Legendre rule on `[-half_width, half_width]` with the
/// standard normal density folded into the weights. Panel edges always
/// include the origin, so integrands with kinks at zero stay accurate.
pub fn panel_normal(panels_per_side: usize, nodes_per_panel: usize, half_width: f64) -> Rule {
    let step = half_width / panels_per_side as f64;
    let edges: Vec<f64> = (0..=2 * panels_per_side)
        .map(|i| -half_width + i as f64 * step)
        .collect();
    panel_normal_on(&edges, nodes_per_panel)
}

/// Composite Gauss-Legendre rule over the panels `[edges[i], edges[i+1]]`
/// with the standard normal density folded into the weights.
pub fn panel_normal_on(edges: &[f64], nodes_per_panel: usize) -> Rule {
    let mut nodes = Vec::with_capacity(edges.len() * nodes_per_panel);
    let mut weights = Vec::with_capacity(nodes.capacity());
    let norm = (2.0 * PI).sqrt();
    for pair in edges.windows(2) {
        let gl = gauss_legendre(nodes_per_panel, pair[0], pair[1]);
        for (x, w) in gl.nodes.into_iter().zip(gl.weights) {
            nodes.push(x);
            weights.push(w * (-0.5 * x * x).exp() / norm);
        }
    }
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gk_polynomial_and_singular() {
        let r = integrate(|x| x * x, 0.0, 3.0, &QuadOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 9.0, epsilon = 1e-12);
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadOptions::abs(1e-9)).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn gk_jump_with_and_without_break() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let r = integrate(f, 0.0, 1.0, &QuadOptions::abs(1e-10)).unwrap();
        assert_abs_diff_eq!(r.value, 0.7, epsilon = 1e-9);
        let r = integrate_with_breaks(f, &[0.0, 0.3, 1.0], &QuadOptions::abs(1e-12)).unwrap();
        assert_abs_diff_eq!(r.value, 0.7, epsilon = 1e-14);
        assert_eq!(r.evaluations, 30);
    }

    #[test]
    fn gk_reports_non_convergence() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn legendre_exactness() {
        let rule = gauss_legendre(5, -1.0, 2.0);
        assert_abs_diff_eq!(
            rule.apply(|x| x.powi(9)),
            (2f64.powi(10) - 1.0) / 10.0,
            epsilon = 1e-11
        );
    }

    #[test]
    fn hermite_normal_moments() {
        for n in [1, 2, 7, 20, 64, 150] {
            let rule = gauss_hermite_normal(n);
            assert_abs_diff_eq!(rule.apply(|_| 1.0), 1.0, epsilon = 1e-12);
            if n >= 3 {
                assert_abs_diff_eq!(rule.apply(|x| x * x), 1.0, epsilon = 1e-11);
                assert_abs_diff_eq!(rule.apply(|x| x.powi(4)), 3.0, epsilon = 1e-10);
            }
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn panel_rule_handles_kink() {
        let rule = panel_normal(6, 8, 9.0);
        // E|Z| = sqrt(2/pi)
        assert_abs_diff_eq!(rule.apply(f64::abs), (2.0 / PI).sqrt(), epsilon = 1e-10);
    }
}
