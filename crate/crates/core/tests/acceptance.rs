//! Acceptance criteria AC1-AC10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion names (e.g. `AC4`) as
//! arguments to run a subset.

use std::time::Instant;

use rayon::prelude::*;

use reduction_lab::covmodels::CovarianceModel;
use reduction_lab::experiments::{self, ExperimentConfig};
use reduction_lab::hermite::{
    coefficient_quadrature, hermite_table, student_mean_constant, student_rank1_coeff,
    student_rank2_coeff, student_rank2_deriv, MultiIndex, StudentIndicator,
};
use reduction_lab::quadrature::gauss_hermite_normal;
use reduction_lab::rng::{stream_id, stream_rng};
use reduction_lab::simulator::{
    FieldSampler, GridSpec, MethodChoice, SimulationOptions, VectorSampler,
};
use reduction_lab::special::{beta_reg, student_t_cdf};
use reduction_lab::stats::{ks_two_sample, SampleSet};
use reduction_lab::window::WindowSpec;

use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const EXAMPLE_POLY: &str = r#"
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
"#;

fn ac1() -> Outcome {
    let rule = gauss_hermite_normal(20);
    let mut worst: f64 = 0.0;
    let mut fact = [1.0f64; 9];
    for k in 1..9 {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut table = [0.0; 9];
    for j in 0..=8 {
        for k in 0..=8 {
            let ip: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&u, &w)| {
                    hermite_table(u, &mut table);
                    w * table[j] * table[k]
                })
                .sum();
            let expected = if j == k { fact[j] } else { 0.0 };
            worst = worst.max((ip - expected).abs());
        }
    }
    outcome(
        worst <= 1e-8,
        format!("max |<H_j,H_k> - j! delta_jk| = {worst:.2e} (tol 1e-8)"),
    )
}

fn ac2() -> Outcome {
    let model = CovarianceModel::cauchy(0.4).unwrap();
    let grid = GridSpec::new(32.0, 1.0).unwrap();
    let opts = SimulationOptions {
        method: MethodChoice::Cholesky,
        ..Default::default()
    };
    let sampler = FieldSampler::new(grid, model, &opts).unwrap();
    let pps = grid.points_per_side;
    let lags = [1usize, 2, 4, 8, 16];
    let reps = 2000;
    // per replication: mean of H2(eta(x)) H2(eta(x + lag e_1)) over all pairs
    let per_rep: Vec<[f64; 5]> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let f = sampler.sample(2002, stream_id(0, rep));
            let h2: Vec<f64> = f.values.iter().map(|x| x * x - 1.0).collect();
            let mut out = [0.0; 5];
            for (o, &k) in out.iter_mut().zip(&lags) {
                let mut s = 0.0;
                for i in 0..pps - k {
                    for j in 0..pps {
                        s += h2[i * pps + j] * h2[(i + k) * pps + j];
                    }
                }
                *o = s / ((pps - k) * pps) as f64;
            }
            out
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (l, &k) in lags.iter().enumerate() {
        let xs: Vec<f64> = per_rep.iter().map(|a| a[l]).collect();
        let s = SampleSet::new("c", xs).unwrap();
        let se = s.std_dev() / (reps as f64).sqrt();
        let target = 2.0 * model.evaluate(k as f64).powi(2);
        let z = (s.mean() - target) / se;
        pass &= z.abs() <= 4.0;
        parts.push(format!(
            "lag {k}: {:.4} vs {:.4} ({z:+.2} se)",
            s.mean(),
            target
        ));
    }
    outcome(pass, parts.join("; "))
}

fn ac3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let m = student_mean_constant(2, 0.5);
    let ib = 0.5 * beta_reg(1.0, 0.5, 2.0 / 2.25);
    let t = 1.0 - student_t_cdf(0.5, 2.0);
    let dm = (m - 1.0 / 3.0).abs().max((m - ib).abs()).max((m - t).abs());
    pass &= dm <= 1e-12;
    parts.push(format!("mean(2,0.5) off by {dm:.1e}"));
    let mut worst1: f64 = 0.0;
    for n in 1..=3 {
        for a in [0.5, 1.0, 2.0] {
            let g = StudentIndicator::new(n, a).unwrap();
            let (q, _) = coefficient_quadrature(&g, &MultiIndex::unit(n + 1, 0, 1), 60).unwrap();
            worst1 = worst1.max((q - student_rank1_coeff(n, a)).abs());
        }
    }
    pass &= worst1 <= 1e-4;
    parts.push(format!("rank-1 quadrature max err {worst1:.1e}"));
    let mut worst2: f64 = 0.0;
    let h = 1e-4;
    for n in 1..=4 {
        for a in [-2.0, -0.5, 0.0, 0.3, 0.5, 1.0, 1.5, 3.0] {
            let fd = (student_rank2_coeff(n, a + h).unwrap()
                - student_rank2_coeff(n, a - h).unwrap())
                / (2.0 * h);
            worst2 = worst2.max((fd - student_rank2_deriv(n, a)).abs());
        }
    }
    pass &= worst2 <= 1e-5;
    parts.push(format!(
        "rank-2 derivative vs central difference max err {worst2:.1e}"
    ));
    outcome(pass, parts.join("; "))
}

fn ac4() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(&format!(
        "experiment = \"reduction\"\nseed = 41\nreplications = 1000\nr_values = [80.0]\n{EXAMPLE_POLY}"
    ))
    .unwrap();
    let res = experiments::run(&cfg).unwrap();
    let kv = res.report.ks_between("K_r", "V_r").unwrap();
    let kk = res.report.ks_between("K_r", "K_r_kappa").unwrap();
    outcome(
        kv.p_value > 0.05 && kk.p_value < 0.01,
        format!(
            "KS(K_r, V_r) p = {:.4} (need > 0.05); KS(K_r, K_r1) p = {:.2e} (need < 0.01)",
            kv.p_value, kk.p_value
        ),
    )
}

/// Pooled sample skewness of `Y = eta_1 + eta_2^2 - 1` over every node of
/// every replication.
fn pooled_y_skewness(
    models: &[CovarianceModel],
    r: f64,
    h: f64,
    reps: u64,
    seed: u64,
) -> (f64, usize) {
    let sampler =
        VectorSampler::new(GridSpec::new(r, h).unwrap(), models, &Default::default()).unwrap();
    let sums: Vec<[f64; 4]> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let f = sampler.sample(seed, stream_id(0, rep));
            let mut s = [0.0; 4];
            for (a, b) in f.components[0].values.iter().zip(&f.components[1].values) {
                let y = a + b * b - 1.0;
                s[0] += 1.0;
                s[1] += y;
                s[2] += y * y;
                s[3] += y * y * y;
            }
            s
        })
        .collect();
    let t = sums.iter().fold([0.0; 4], |mut acc, s| {
        for i in 0..4 {
            acc[i] += s[i];
        }
        acc
    });
    let n = t[0];
    let m = t[1] / n;
    let m2 = t[2] / n - m * m;
    let m3 = t[3] / n - 3.0 * m * t[2] / n + 2.0 * m.powi(3);
    (m3 / m2.powf(1.5), n as usize)
}

fn ac5() -> Outcome {
    let analytic = 8.0 / 3f64.powf(1.5);
    // nodes four units apart under Cauchy(4) correlation are nearly independent
    let weak = [
        CovarianceModel::cauchy(4.0).unwrap(),
        CovarianceModel::cauchy(4.0).unwrap(),
    ];
    let (s_weak, n_weak) = pooled_y_skewness(&weak, 32.0, 4.0, 4000, 51);
    let mixed = [
        CovarianceModel::cauchy(2.5).unwrap(),
        CovarianceModel::cauchy(0.2).unwrap(),
    ];
    let (s_field, n_field) = pooled_y_skewness(&mixed, 80.0, 1.0, 1000, 52);
    outcome(
        (s_weak - analytic).abs() <= 0.05 && (s_field - 1.62).abs() <= 0.15,
        format!(
            "weakly dependent pool ({n_weak} values): {s_weak:.4} vs {analytic:.4} (tol 0.05); \
             beta=2.5/alpha=0.2 field at r=80 ({n_field} values): {s_field:.4} vs 1.62 (tol 0.15)"
        ),
    )
}

fn ac6() -> Outcome {
    let cfg = ExperimentConfig::from_toml_str(&format!(
        "experiment = \"variance_scan\"\nseed = 61\nreplications = 1000\nr_values = [10.0, 20.0, 40.0, 80.0]\n{EXAMPLE_POLY}"
    ))
    .unwrap();
    let res = experiments::run(&cfg).unwrap();
    let v = res.report.fit("V_r").unwrap();
    let k = res.report.fit("K_r_kappa").unwrap();
    outcome(
        (v.slope - 3.6).abs() <= 0.3 && (k.slope - 2.0).abs() <= 0.3,
        format!(
            "Var V_r slope {:.3} ± {:.3} (target 3.6 ± 0.3); Var K_r1 slope {:.3} ± {:.3} (target 2 ± 0.3)",
            v.slope, v.stderr, k.slope, k.stderr
        ),
    )
}

fn ac7() -> Outcome {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/student_regimes.toml"
    ))
    .unwrap();
    let mut cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    cfg.r_values = vec![100.0];
    cfg.replications = 300;
    let res = experiments::run(&cfg).unwrap();
    let short = res.report.normality_of("short").unwrap();
    let sl = res.report.ks_between("short", "long").unwrap();
    let sw = res.report.ks_between("short", "strong_weak").unwrap();
    let i = short.skewness.abs() <= 0.25 && short.excess_kurtosis.abs() <= 0.5;
    let ii = sl.p_value > 0.05;
    let iii = sw.p_value < 0.05;
    let sw_shape = res.report.normality_of("strong_weak").unwrap();
    outcome(
        i && ii && iii,
        format!(
            "(i) short skew {:+.3}, excess kurtosis {:+.3} [{}]; (ii) KS short/long p = {:.3} [{}]; \
             (iii) KS short/strong-weak p = {:.3} [{}] (strong-weak skew {:+.3})",
            short.skewness,
            short.excess_kurtosis,
            if i { "ok" } else { "fail" },
            sl.p_value,
            if ii { "ok" } else { "fail" },
            sw.p_value,
            if iii { "ok" } else { "fail" },
            sw_shape.skewness
        ),
    )
}

fn ac8() -> Outcome {
    let model = CovarianceModel::cauchy(0.4).unwrap();
    let grid = GridSpec::new(16.0, 1.0).unwrap();
    let reps = 1000;
    let integrals = |method: MethodChoice, seed: u64| -> (Vec<f64>, f64) {
        let opts = SimulationOptions {
            method,
            ..Default::default()
        };
        let s = FieldSampler::new(grid, model, &opts).unwrap();
        let clip = s.diagnostics().clip_error;
        let v = (0..reps as u64)
            .into_par_iter()
            .map(|rep| s.sample(seed, rep).values.iter().sum::<f64>() * grid.cell_area())
            .collect();
        (v, clip)
    };
    let (chol, _) = integrals(MethodChoice::Cholesky, 81);
    let (circ, clip) = integrals(MethodChoice::Circulant, 82);
    let ks = ks_two_sample(
        &SampleSet::new("chol", chol).unwrap(),
        &SampleSet::new("circ", circ).unwrap(),
    );
    outcome(
        ks.p_value > 0.05,
        format!(
            "KS p = {:.3}, D = {:.4} (embedding clip error {clip:.1e})",
            ks.p_value, ks.statistic
        ),
    )
}

fn ac9() -> Outcome {
    let w = WindowSpec::square(0.5).unwrap();
    let quad = w.c1_coefficient(1, 1.0).unwrap();
    let pairs = 10_000_000u64;
    let blocks = 100u64;
    let mc: f64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(9, b);
            let mut s = 0.0;
            for _ in 0..pairs / blocks {
                let dx: f64 = rng.random::<f64>() - rng.random::<f64>();
                let dy: f64 = rng.random::<f64>() - rng.random::<f64>();
                s += 1.0 / dx.hypot(dy);
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / pairs as f64;
    let rel = (quad - mc).abs() / mc;
    outcome(
        rel <= 0.01,
        format!("quadrature {quad:.6}, Monte Carlo {mc:.6}, relative gap {rel:.2e}"),
    )
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    let reduction = ExperimentConfig::from_toml_str(&format!(
        "experiment = \"reduction\"\nseed = 10\nreplications = 50\nr_values = [12.0, 20.0]\n{EXAMPLE_POLY}"
    ))
    .unwrap();
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/student_regimes.toml"
    ))
    .unwrap();
    let mut student = ExperimentConfig::from_toml_str(&text).unwrap();
    student.r_values = vec![10.0];
    student.replications = 30;
    for (name, cfg) in [("reduction", &reduction), ("student", &student)] {
        for run in ["a", "b"] {
            experiments::run(cfg)
                .unwrap()
                .write(&dir.path().join(name).join(run))
                .unwrap();
        }
        for file in ["samples.csv", "report.json"] {
            let a = std::fs::read(dir.path().join(name).join("a").join(file)).unwrap();
            let b = std::fs::read(dir.path().join(name).join("b").join(file)).unwrap();
            let same = a == b && !a.is_empty();
            pass &= same;
            parts.push(format!(
                "{name}/{file} {}",
                if same { "identical" } else { "DIFFERS" }
            ));
        }
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.starts_with("AC"))
        .collect();
    let criteria: [Criterion; 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|x| x == name) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{name} {verdict} ({:.1} s): {}",
            t.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
