//! Command-line front end. Results go to standard output (or `--output`) as
//! JSON, diagnostics to standard error; exit code 0 on success, 2 on input
//! or precondition errors and 3 when a resource cap is exceeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::decompose::{canonical_quadratic, iterate_decomposition};
use crate::ensembles::MultilinearPoly;
use crate::error::{ChaosError, Result};
use crate::influence::{max_influence, multilinear_influences, rho_1, rho_q, strongest_influence, InfluenceConfig};
use crate::malliavin::{carre_du_champ, ou_generator};
use crate::montecarlo::{self, DiagnosticOptions, SampleSet, Source};
use crate::poly::ChaosPoly;

#[derive(Debug, Parser)]
#[command(name = "chaoscalc", version, about = "Exact Wiener-chaos calculus and normality diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for sampling; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Carré du champ Γ(F, G).
    Gamma { f: PathBuf, g: PathBuf },
    /// Ornstein–Uhlenbeck generator L F.
    #[command(name = "L")]
    L { f: PathBuf },
    /// Directional influence ρ_q(F).
    Rho {
        f: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        q: u32,
        /// Fresh variables added to the basis (default q − 1).
        #[arg(long)]
        extra_vars: Option<u32>,
    },
    /// Least q with ρ_q(F) ≥ threshold and its direction.
    Strongest {
        f: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long)]
        extra_vars: Option<u32>,
    },
    /// Iterated decomposition along directions of strongest influence.
    Decompose {
        f: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        max_steps: usize,
        #[arg(long)]
        extra_vars: Option<u32>,
    },
    /// Diagonal form of a polynomial of degree at most 2.
    Canonical2 { f: PathBuf },
    /// Normality report: kurtosis, Var Γ, ρ_q and W2 to a Gaussian.
    Diagnose {
        f: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long)]
        extra_vars: Option<u32>,
    },
    /// Draw samples of a chaos or multilinear polynomial.
    Sample {
        f: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Empirical W2 distance between two sample files.
    W2 { a: PathBuf, b: PathBuf },
    /// W2 between a multilinear polynomial and its Gaussian substitute.
    Invariance {
        p: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
    },
    /// Variable influences of a multilinear polynomial.
    Influences { p: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ChaosError::Io(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        ChaosError::Parse(m) => ChaosError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn read_chaos(path: &Path) -> Result<ChaosPoly> {
    with_path(path, ChaosPoly::from_json(&read(path)?))
}

fn read_multilinear(path: &Path) -> Result<MultilinearPoly> {
    with_path(path, MultilinearPoly::from_json(&read(path)?))
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ChaosError::Precondition(format!("--threshold must be positive, got {t}")))
    }
}

/// Runs one command and returns the text to emit.
pub fn execute(command: &Command) -> Result<String> {
    let config = InfluenceConfig::from_env();
    let json_line = |v: Value| format!("{v}\n");
    Ok(match command {
        Command::Gamma { f, g } => {
            let (f, g) = (read_chaos(f)?, read_chaos(g)?);
            json_line(carre_du_champ(&f, &g).to_json_value())
        }
        Command::L { f } => json_line(ou_generator(&read_chaos(f)?).to_json_value()),
        Command::Rho { f, q, extra_vars } => {
            let f = read_chaos(f)?;
            let result = if *q == 1 && extra_vars.unwrap_or(0) == 0 {
                rho_1(&f)
            } else {
                rho_q(&f, *q, extra_vars.unwrap_or(q - 1), &config)?
            };
            json_line(result.to_json_value())
        }
        Command::Strongest { f, threshold, extra_vars } => {
            check_threshold(*threshold)?;
            let f = read_chaos(f)?;
            json_line(strongest_influence(&f, *threshold, *extra_vars, &config)?.to_json_value())
        }
        Command::Decompose { f, threshold, max_steps, extra_vars } => {
            check_threshold(*threshold)?;
            let f = read_chaos(f)?;
            json_line(iterate_decomposition(&f, *threshold, *max_steps, *extra_vars, &config)?.to_json_value())
        }
        Command::Canonical2 { f } => json_line(canonical_quadratic(&read_chaos(f)?)?.to_json_value()),
        Command::Diagnose { f, sampling, extra_vars } => {
            let f = read_chaos(f)?;
            let options = DiagnosticOptions {
                samples: sampling.samples as usize,
                seed: sampling.seed,
                extra_vars: *extra_vars,
                workers: sampling.workers.map(|w| w as usize),
            };
            json_line(montecarlo::normality_report(&f, &options, &config)?.to_json_value())
        }
        Command::Sample { f, sampling } => {
            let text = read(f)?;
            let value: Value = with_path(
                f,
                serde_json::from_str(&text).map_err(|e| {
                    ChaosError::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
                }),
            )?;
            let n = sampling.samples as usize;
            let workers = sampling.workers.map(|w| w as usize);
            let set = if value.get("law").is_some() {
                let p = with_path(f, MultilinearPoly::from_json_value(&value))?;
                montecarlo::sample_stream(Source::Multilinear(&p), n, sampling.seed, montecarlo::PRIMARY_STREAM, workers)?
            } else {
                let p = with_path(f, ChaosPoly::from_json_value(&value))?;
                montecarlo::sample_stream(Source::Chaos(&p), n, sampling.seed, montecarlo::PRIMARY_STREAM, workers)?
            };
            set.to_text()
        }
        Command::W2 { a, b } => {
            let a = with_path(a, SampleSet::read_from(read(a)?.as_bytes()))?;
            let b = with_path(b, SampleSet::read_from(read(b)?.as_bytes()))?;
            json_line(json!({ "w2": montecarlo::w2_1d(&a, &b)?, "sizes": [a.len(), b.len()] }))
        }
        Command::Invariance { p, sampling } => {
            let p = read_multilinear(p)?;
            let gap = montecarlo::invariance_gap(
                &p,
                sampling.samples as usize,
                sampling.seed,
                sampling.workers.map(|w| w as usize),
            )?;
            json_line(json!({
                "gap": gap,
                "max_influence": max_influence(&p)?,
                "samples": sampling.samples,
                "seed": sampling.seed,
            }))
        }
        Command::Influences { p } => {
            let p = read_multilinear(p)?;
            let inf = multilinear_influences(&p)?;
            let max = inf.values().cloned().fold(0.0, f64::max);
            json_line(json!({ "influences": inf, "max": max }))
        }
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|text| match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| ChaosError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("chaoscalc: {e}");
            e.exit_code()
        }
    }
}
