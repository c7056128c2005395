//! Window functionals of simulated fields: `K_r`, its Hermite decomposition,
//! the Student transform and the first Minkowski functional.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{
    hermite_table, student_mean_constant, Functional, HermiteExpansion, MultiIndex, ReductionSets,
};
use crate::simulator::{FieldRealization, VectorFieldRealization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FunctionalKind {
    /// `K_r`
    Kr,
    /// `K_{r,kappa}`
    KrKappa,
    /// `V_r`
    Vr,
    /// `K*_{r,l}`
    KrStar(usize),
    /// Sum of `K*_{r,l}` over the reduction levels.
    KrStarSum,
    /// `M_r`
    Minkowski,
    /// `M_r - |Delta(r)| P(T_n > a)`
    CenteredMinkowski,
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalKind::Kr => write!(f, "K_r"),
            FunctionalKind::KrKappa => write!(f, "K_r_kappa"),
            FunctionalKind::Vr => write!(f, "V_r"),
            FunctionalKind::KrStar(l) => write!(f, "K_star_{l}"),
            FunctionalKind::KrStarSum => write!(f, "K_star"),
            FunctionalKind::Minkowski => write!(f, "M_r"),
            FunctionalKind::CenteredMinkowski => write!(f, "M_r_centered"),
        }
    }
}

impl FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "K_r" => FunctionalKind::Kr,
            "K_r_kappa" => FunctionalKind::KrKappa,
            "V_r" => FunctionalKind::Vr,
            "K_star" => FunctionalKind::KrStarSum,
            "M_r" => FunctionalKind::Minkowski,
            "M_r_centered" => FunctionalKind::CenteredMinkowski,
            other => match other.strip_prefix("K_star_").map(str::parse::<usize>) {
                Some(Ok(l)) => FunctionalKind::KrStar(l),
                _ => return Err(Error::Config(format!("unknown functional kind {other:?}"))),
            },
        })
    }
}

impl From<FunctionalKind> for String {
    fn from(k: FunctionalKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for FunctionalKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One evaluated functional with the provenance needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub kind: FunctionalKind,
    pub r: f64,
    pub h: f64,
    pub seed: u64,
    pub stream: u64,
    pub value: f64,
}

impl FunctionalSample {
    fn from_field(kind: FunctionalKind, field: &VectorFieldRealization, value: f64) -> Self {
        let first = &field.components[0];
        Self {
            kind,
            r: first.grid.r,
            h: first.grid.h,
            seed: first.seed,
            stream: first.stream,
            value,
        }
    }
}

fn check_dim(field: &VectorFieldRealization, p: usize) -> Result<()> {
    if field.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: field.dim(),
        });
    }
    Ok(())
}

/// `K_r` as the Riemann sum `h^2 sum_nodes G(eta(node))`.
pub fn integrate_g<G: Functional + ?Sized>(
    field: &VectorFieldRealization,
    g: &G,
) -> Result<FunctionalSample> {
    check_dim(field, g.dim())?;
    let grid = field.grid();
    let mut w = vec![0.0; field.dim()];
    let mut sum = 0.0;
    for node in 0..grid.len() {
        for (x, c) in w.iter_mut().zip(&field.components) {
            *x = c.values[node];
        }
        let y = g.eval(&w);
        if !y.is_finite() {
            return Err(Error::NonFiniteValue { node });
        }
        sum += y;
    }
    Ok(FunctionalSample::from_field(
        FunctionalKind::Kr,
        field,
        sum * grid.cell_area(),
    ))
}

/// `(C_v / v!) h^2 sum_nodes e_v(eta(node))`.
pub fn integrate_term(field: &VectorFieldRealization, v: &MultiIndex, c_v: f64) -> Result<f64> {
    check_dim(field, v.dim())?;
    let grid = field.grid();
    let kmax = v.0.iter().cloned().max().unwrap_or(0) as usize;
    let mut table = vec![0.0; kmax + 1];
    let mut sum = 0.0;
    for node in 0..grid.len() {
        let mut e = 1.0;
        for (c, &k) in field.components.iter().zip(&v.0) {
            if k > 0 {
                hermite_table(c.values[node], &mut table);
                e *= table[k as usize];
            }
        }
        sum += e;
    }
    Ok(c_v / v.factorial() * sum * grid.cell_area())
}

/// `K_r` together with the pieces of its Hermite decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub k_r: f64,
    pub k_r_kappa: f64,
    pub v_r: f64,
    pub k_star: BTreeMap<usize, f64>,
}

impl Decomposition {
    pub fn k_star_sum(&self) -> f64 {
        self.k_star.values().sum()
    }
}

/// Evaluates `K_r`, `K_{r,kappa}`, `V_r` and `K*_{r,l}` in one pass over the
/// grid. `V_r` is truncated at the expansion's truncation order.
pub struct Decomposer<'a, G: Functional + ?Sized> {
    g: &'a G,
    kappa: usize,
    terms: Vec<(MultiIndex, f64)>,
    star_levels: Vec<Option<usize>>,
    kmax: usize,
}

impl<'a, G: Functional + ?Sized> Decomposer<'a, G> {
    pub fn new(g: &'a G, expansion: &HermiteExpansion, reduction: &ReductionSets) -> Result<Self> {
        if expansion.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: expansion.dim(),
            });
        }
        let terms: Vec<(MultiIndex, f64)> = expansion
            .nonzero()
            .map(|(v, c)| (v.clone(), c / v.factorial()))
            .collect();
        let star_levels = terms
            .iter()
            .map(|(v, _)| {
                let l = v.order();
                reduction
                    .n_star
                    .get(&l)
                    .filter(|set| set.contains(v))
                    .map(|_| l)
            })
            .collect();
        let kmax = terms.iter().map(|(v, _)| v.order()).max().unwrap_or(0);
        Ok(Self {
            g,
            kappa: reduction.kappa,
            terms,
            star_levels,
            kmax,
        })
    }

    pub fn evaluate(&self, field: &VectorFieldRealization) -> Result<Decomposition> {
        check_dim(field, self.g.dim())?;
        let p = field.dim();
        let grid = field.grid();
        let mut w = vec![0.0; p];
        let mut tables = vec![vec![0.0; self.kmax + 1]; p];
        let mut sums = vec![0.0; self.terms.len()];
        let mut k_r = 0.0;
        for node in 0..grid.len() {
            for ((x, c), t) in w.iter_mut().zip(&field.components).zip(tables.iter_mut()) {
                *x = c.values[node];
                hermite_table(*x, t);
            }
            let y = self.g.eval(&w);
            if !y.is_finite() {
                return Err(Error::NonFiniteValue { node });
            }
            k_r += y;
            for (s, (v, _)) in sums.iter_mut().zip(&self.terms) {
                *s +=
                    v.0.iter()
                        .zip(&tables)
                        .map(|(&k, t)| t[k as usize])
                        .product::<f64>();
            }
        }
        let area = grid.cell_area();
        let mut out = Decomposition {
            k_r: k_r * area,
            k_r_kappa: 0.0,
            v_r: 0.0,
            k_star: BTreeMap::new(),
        };
        for ((s, (v, coef)), star) in sums.iter().zip(&self.terms).zip(&self.star_levels) {
            let term = coef * s * area;
            if v.order() == self.kappa {
                out.k_r_kappa += term;
            } else if v.order() > self.kappa {
                out.v_r += term;
            }
            if let Some(l) = star {
                *out.k_star.entry(*l).or_insert(0.0) += term;
            }
        }
        Ok(out)
    }

    /// The decomposition as labelled samples.
    pub fn samples(&self, field: &VectorFieldRealization) -> Result<Vec<FunctionalSample>> {
        let d = self.evaluate(field)?;
        let mut out = vec![
            FunctionalSample::from_field(FunctionalKind::Kr, field, d.k_r),
            FunctionalSample::from_field(FunctionalKind::KrKappa, field, d.k_r_kappa),
            FunctionalSample::from_field(FunctionalKind::Vr, field, d.v_r),
        ];
        for (&l, &x) in &d.k_star {
            out.push(FunctionalSample::from_field(
                FunctionalKind::KrStar(l),
                field,
                x,
            ));
        }
        out.push(FunctionalSample::from_field(
            FunctionalKind::KrStarSum,
            field,
            d.k_star_sum(),
        ));
        Ok(out)
    }
}

/// Nodewise `T_n = eta_1 / sqrt((eta_2^2 + ... + eta_{n+1}^2) / n)`.
pub fn student_transform(field: &VectorFieldRealization, n: usize) -> Result<FieldRealization> {
    check_dim(field, n + 1)?;
    let first = &field.components[0];
    let nf = n as f64;
    let mut values = Vec::with_capacity(first.values.len());
    for node in 0..first.values.len() {
        let ss: f64 = field.components[1..]
            .iter()
            .map(|c| c.values[node].powi(2))
            .sum();
        if ss == 0.0 {
            return Err(Error::DegenerateDenominator { node });
        }
        values.push(first.values[node] / (ss / nf).sqrt());
    }
    Ok(FieldRealization {
        values,
        ..first.clone()
    })
}

/// `h^2 #{nodes : value > a}`.
pub fn minkowski(field: &FieldRealization, a: f64) -> FunctionalSample {
    let count = field.values.iter().filter(|&&x| x > a).count();
    FunctionalSample {
        kind: FunctionalKind::Minkowski,
        r: field.grid.r,
        h: field.grid.h,
        seed: field.seed,
        stream: field.stream,
        value: count as f64 * field.grid.cell_area(),
    }
}

/// `M_r{T_n} - |Delta(r)| P(T_n > a)`.
pub fn centered_minkowski(
    field: &VectorFieldRealization,
    n: usize,
    a: f64,
) -> Result<FunctionalSample> {
    let t = student_transform(field, n)?;
    let m = minkowski(&t, a);
    let centering = t.grid.window().volume() * student_mean_constant(n, a);
    Ok(FunctionalSample {
        kind: FunctionalKind::CenteredMinkowski,
        value: m.value - centering,
        ..m
    })
}

/// Columns `kind, r, h, seed, stream, value`.
pub fn write_samples_csv(path: &Path, samples: &[FunctionalSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<FunctionalSample>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
