use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reduction_lab::experiments::{self, ExperimentConfig, ExperimentKind, ExperimentResult};
use reduction_lab::{Error, Result};

#[derive(Parser)]
#[command(
    version,
    about = "Monte Carlo laboratory for functionals of vector Gaussian random fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one realization of every component and write it as FLDG and CSV.
    Simulate(Common),
    /// Compare `K_r` with its Hermite decomposition.
    Reduction(Common),
    /// Excursion area of the Student field across dependence regimes.
    Student(Common),
    /// Sample variances across `r` with log-log fits.
    VarianceScan(Common),
    /// Tabulate the closed-form Student coefficients.
    Coeffs(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output_dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated window half-widths.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
}

impl Common {
    fn load(&self, kind: Option<ExperimentKind>) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(kind) = kind {
            cfg.experiment = kind;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.replications = reps;
        }
        if let Some(r) = &self.r {
            cfg.r_values = r.clone();
        }
        if let Some(t) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

fn summarize(res: &ExperimentResult) {
    let rep = &res.report;
    for p in &rep.predictions {
        println!(
            "prediction [{}]: {:?}, Var ~ r^{:.4}, levels {:?}",
            p.set, p.prediction.regime, p.prediction.exponent, p.prediction.levels
        );
    }
    for s in &rep.sets {
        println!(
            "set {:<24} n={:<6} mean={:+.4e} var={:.4e} skew={}",
            s.label,
            s.n,
            s.mean,
            s.variance,
            s.skewness.map_or("-".into(), |x| format!("{x:+.3}"))
        );
    }
    for n in &rep.normality {
        println!(
            "normality {:<20} skew={:+.3} ex.kurt={:+.3} KS p={:.4}",
            n.label, n.skewness, n.excess_kurtosis, n.ks_p_value
        );
    }
    for k in &rep.ks {
        println!(
            "KS {} vs {}: D={:.4} p={:.4e}",
            k.a, k.b, k.statistic, k.p_value
        );
    }
    for f in &rep.fits {
        let pred = f
            .predicted_exponent
            .map_or("-".into(), |x| format!("{x:.3}"));
        println!(
            "fit {:<12} slope={:.3} ± {:.3} (predicted {pred})",
            f.label, f.slope, f.stderr
        );
    }
    for c in &rep.coefficients {
        println!(
            "n={} a={:<5} P={:.6} C1={:.6} C2={:+.6} dC2={:+.6} quad: {}",
            c.n, c.a, c.mean_constant, c.rank1, c.rank2, c.rank2_deriv, c.quadrature_status
        );
    }
    println!("elapsed {:.1} s", res.timing.total_seconds);
}

fn execute(cli: Cli) -> Result<()> {
    let (common, kind) = match &cli.command {
        Command::Simulate(c) => (c, None),
        Command::Reduction(c) => (c, Some(ExperimentKind::Reduction)),
        Command::Student(c) => (c, Some(ExperimentKind::StudentMinkowski)),
        Command::VarianceScan(c) => (c, Some(ExperimentKind::VarianceScan)),
        Command::Coeffs(c) => (c, Some(ExperimentKind::Coefficients)),
    };
    let (cfg, out) = common.load(kind)?;
    if kind.is_none() {
        for d in experiments::run_simulate(&cfg, &out)? {
            println!(
                "component {} {}: {:?}, clip error {:.2e}, torus side {}",
                d.component, d.model, d.method, d.clip_error, d.padded_size
            );
        }
    } else {
        let res = experiments::run(&cfg)?;
        res.write(&out)?;
        summarize(&res);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
