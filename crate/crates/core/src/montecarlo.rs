//! Reproducible sampling, empirical Wasserstein-2 distances and the
//! normality and invariance diagnostics.
//!
//! Draws come from ChaCha20 (`generator=chacha20`). Samples are produced in
//! chunks of [`CHUNK_SIZE`]; chunk `k` of logical stream `s` under seed
//! `seed` uses `ChaCha20Rng::seed_from_u64(seed)` with
//! `set_stream((s << 32) | k)`, so the values depend only on
//! `(seed, stream, source)` and never on the number of worker threads.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::ensembles::{substitute_gaussian, MultilinearPoly, OrthonormalEnsemble};
use crate::error::{ChaosError, Result};
use crate::influence::{rho_1, rho_q, InfluenceConfig};
use crate::malliavin::carre_du_champ;
use crate::multi_index::VarId;
use crate::poly::ChaosPoly;
use crate::scalar::{self, format_rational, Rational};

pub const GENERATOR_ID: &str = "chacha20";
pub const CHUNK_SIZE: usize = 4096;
pub const PRIMARY_STREAM: u32 = 0;
/// Stream of the Gaussian reference sample in [`normality_report`].
pub const REFERENCE_STREAM: u32 = 1;
/// Stream of the Gaussian-substituted sample in [`invariance_gap`].
pub const SUBSTITUTE_STREAM: u32 = 2;

/// Generator for chunk `chunk` of logical stream `stream`.
pub fn chunk_rng(seed: u64, stream: u32, chunk: u32) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(stream) << 32) | u64::from(chunk));
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    pub stream: u32,
    pub generator_id: String,
    pub source_description: String,
}

impl SampleSet {
    pub fn from_values(values: Vec<f64>) -> Self {
        SampleSet {
            values,
            seed: 0,
            stream: 0,
            generator_id: "external".into(),
            source_description: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Empirical (biased) variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.values.len() as f64
    }

    /// Empirical raw moment `mean(x^k)`.
    pub fn raw_moment(&self, k: i32) -> f64 {
        self.values.iter().map(|x| x.powi(k)).sum::<f64>() / self.values.len() as f64
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={} stream={} generator={}", self.seed, self.stream, self.generator_id)?;
        if !self.source_description.is_empty() {
            writeln!(w, "# source={}", self.source_description)?;
        }
        for x in &self.values {
            writeln!(w, "{x:?}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut set = SampleSet::from_values(Vec::new());
        let mut saw_header = false;
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(comment) = t.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(src) = comment.strip_prefix("source=") {
                    set.source_description = src.to_string();
                } else if !saw_header && comment.starts_with("seed=") {
                    saw_header = true;
                    for field in comment.split_whitespace() {
                        let bad = || ChaosError::Parse(format!("line {}: bad header field {field:?}", n + 1));
                        match field.split_once('=') {
                            Some(("seed", v)) => set.seed = v.parse().map_err(|_| bad())?,
                            Some(("stream", v)) => set.stream = v.parse().map_err(|_| bad())?,
                            Some(("generator", v)) => set.generator_id = v.to_string(),
                            _ => return Err(bad()),
                        }
                    }
                }
                continue;
            }
            let x: f64 = t
                .parse()
                .map_err(|_| ChaosError::Parse(format!("line {}: not a number: {t:?}", n + 1)))?;
            set.values.push(x);
        }
        Ok(set)
    }
}

/// Anything that can be sampled from independent inputs.
pub enum Source<'a> {
    Chaos(&'a ChaosPoly),
    Multilinear(&'a MultilinearPoly),
}

struct CompiledChaos {
    max_degree: Vec<usize>,
    terms: Vec<(f64, Vec<(usize, usize)>)>,
}

impl CompiledChaos {
    fn new(f: &ChaosPoly) -> (Vec<VarId>, Self) {
        let vars: Vec<VarId> = f.vars().into_iter().collect();
        let pos = |v: VarId| vars.binary_search(&v).expect("variable of f");
        let mut max_degree = vec![0; vars.len()];
        let terms = f
            .iter()
            .map(|(idx, c)| {
                let factors: Vec<(usize, usize)> = idx
                    .entries()
                    .iter()
                    .map(|&(v, d)| {
                        let i = pos(v);
                        max_degree[i] = max_degree[i].max(d as usize);
                        (i, d as usize)
                    })
                    .collect();
                (scalar::to_f64(c), factors)
            })
            .collect();
        (vars, CompiledChaos { max_degree, terms })
    }

    fn eval(&self, z: &[f64], table: &mut Vec<Vec<f64>>) -> f64 {
        for (i, &x) in z.iter().enumerate() {
            let row = &mut table[i];
            row.clear();
            row.push(1.0);
            if self.max_degree[i] >= 1 {
                row.push(x);
            }
            for k in 1..self.max_degree[i] {
                let next = x * row[k] - k as f64 * row[k - 1];
                row.push(next);
            }
        }
        self.terms
            .iter()
            .map(|(c, fs)| c * fs.iter().map(|&(i, d)| table[i][d]).product::<f64>())
            .sum()
    }
}

struct CompiledMultilinear {
    ensemble: OrthonormalEnsemble,
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

fn chunk_ranges(n: usize) -> Vec<(u32, usize)> {
    (0..n.div_ceil(CHUNK_SIZE))
        .map(|k| (k as u32, CHUNK_SIZE.min(n - k * CHUNK_SIZE)))
        .collect()
}

fn run_chunks<F>(n: usize, workers: Option<usize>, job: F) -> Result<Vec<f64>>
where
    F: Fn(u32, usize) -> Vec<f64> + Sync,
{
    let go = || -> Vec<f64> {
        chunk_ranges(n)
            .into_par_iter()
            .map(|(k, len)| job(k, len))
            .collect::<Vec<_>>()
            .concat()
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| ChaosError::Precondition(format!("thread pool: {e}")))?;
            Ok(pool.install(go))
        }
        None => Ok(go()),
    }
}

/// `n` independent draws of the source on logical stream `stream`.
pub fn sample_stream(source: Source<'_>, n: usize, seed: u64, stream: u32, workers: Option<usize>) -> Result<SampleSet> {
    if n == 0 {
        return Err(ChaosError::Precondition("need at least one sample".into()));
    }
    let (values, description) = match source {
        Source::Chaos(f) => {
            let (vars, compiled) = CompiledChaos::new(f);
            let values = run_chunks(n, workers, |k, len| {
                let mut rng = chunk_rng(seed, stream, k);
                let mut z = vec![0.0; vars.len()];
                let mut table = vec![Vec::new(); vars.len()];
                (0..len)
                    .map(|_| {
                        for x in z.iter_mut() {
                            *x = rng.sample(StandardNormal);
                        }
                        compiled.eval(&z, &mut table)
                    })
                    .collect()
            })?;
            (values, format!("chaos:{}", f.to_json()))
        }
        Source::Multilinear(p) => {
            let vars: Vec<VarId> = p.vars().into_iter().collect();
            let pos = |v: VarId| vars.binary_search(&v).expect("variable of p");
            let compiled = CompiledMultilinear {
                ensemble: p.ensemble()?,
                terms: p
                    .terms()
                    .iter()
                    .map(|(j, c)| (scalar::to_f64(c), j.iter().map(|&(v, l)| (pos(v), l)).collect()))
                    .collect(),
            };
            let values = run_chunks(n, workers, |k, len| {
                let mut rng = chunk_rng(seed, stream, k);
                let mut x = vec![0.0; vars.len()];
                (0..len)
                    .map(|_| {
                        for xi in x.iter_mut() {
                            *xi = p.law.sample(&mut rng);
                        }
                        compiled
                            .terms
                            .iter()
                            .map(|(c, fs)| c * fs.iter().map(|&(i, l)| compiled.ensemble.eval(l, x[i])).product::<f64>())
                            .sum()
                    })
                    .collect()
            })?;
            (values, format!("multilinear:{}", p.to_json()))
        }
    };
    Ok(SampleSet {
        values,
        seed,
        stream,
        generator_id: GENERATOR_ID.into(),
        source_description: description,
    })
}

/// `n` draws on the primary stream.
pub fn sample(source: Source<'_>, n: usize, seed: u64) -> Result<SampleSet> {
    sample_stream(source, n, seed, PRIMARY_STREAM, None)
}

/// Order statistics of `sorted` resampled to `m` points by linear
/// interpolation of the empirical quantile function at `(i + ½)/m`.
fn resample_quantiles(sorted: &[f64], m: usize) -> Vec<f64> {
    let n = sorted.len();
    if n == m {
        return sorted.to_vec();
    }
    (0..m)
        .map(|i| {
            let t = ((i as f64 + 0.5) / m as f64 * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            let lo = t.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let w = t - lo as f64;
            sorted[lo] * (1.0 - w) + sorted[hi] * w
        })
        .collect()
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical `W_2` through the monotone (quantile) coupling.
pub fn w2_1d(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    w2_values(&a.values, &b.values)
}

pub fn w2_values(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(ChaosError::EmptySample);
    }
    let (mut sa, mut sb) = (sorted(a), sorted(b));
    match sa.len().cmp(&sb.len()) {
        std::cmp::Ordering::Less => sa = resample_quantiles(&sa, sb.len()),
        std::cmp::Ordering::Greater => sb = resample_quantiles(&sb, sa.len()),
        std::cmp::Ordering::Equal => {}
    }
    let s: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((s / sa.len() as f64).sqrt())
}

/// Exact `Var Γ(f, f)`.
pub fn var_gamma(f: &ChaosPoly) -> Rational {
    carre_du_champ(f, f).variance()
}

/// Exact `E[(f − Ef)⁴]/Var(f)² − 3`.
pub fn excess_kurtosis(f: &ChaosPoly) -> Result<Rational> {
    let centered = f.sub(&ChaosPoly::constant(f.expectation()));
    let var = centered.norm_sq();
    if num_traits::Zero::is_zero(&var) {
        return Err(ChaosError::ZeroVariance);
    }
    Ok(centered.moment(4) / (&var * &var) - scalar::int(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticOptions {
    pub samples: usize,
    pub seed: u64,
    /// Fresh variables for `ρ_q`, `q ≥ 2`; `None` means `q − 1`.
    pub extra_vars: Option<u32>,
    pub workers: Option<usize>,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions { samples: 100_000, seed: 42, extra_vars: None, workers: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub variance: Rational,
    pub excess_kurtosis: Rational,
    pub var_gamma: Rational,
    pub rho: BTreeMap<u32, f64>,
    pub w2_to_gaussian: f64,
    pub degree: u32,
    pub samples: usize,
    pub seed: u64,
    pub extra_vars: Option<u32>,
}

impl NormalityReport {
    pub fn to_json_value(&self) -> Value {
        json!({
            "variance": scalar::to_f64(&self.variance),
            "excess_kurtosis": scalar::to_f64(&self.excess_kurtosis),
            "var_gamma": scalar::to_f64(&self.var_gamma),
            "rho": self.rho,
            "w2_to_gaussian": self.w2_to_gaussian,
            "exact": {
                "variance": format_rational(&self.variance),
                "excess_kurtosis": format_rational(&self.excess_kurtosis),
                "var_gamma": format_rational(&self.var_gamma),
            },
            "inputs": {
                "degree": self.degree,
                "samples": self.samples,
                "seed": self.seed,
                "extra_vars": self.extra_vars,
                "generator": GENERATOR_ID,
            },
        })
    }
}

/// Exact variance, excess kurtosis and `Var Γ`, `ρ_q` for
/// `q ≤ max(1, ⌊deg/2⌋)`, and the empirical `W_2` distance to a Gaussian of
/// the same mean and variance.
pub fn normality_report(f: &ChaosPoly, options: &DiagnosticOptions, config: &InfluenceConfig) -> Result<NormalityReport> {
    let variance = f.variance();
    if num_traits::Zero::is_zero(&variance) {
        return Err(ChaosError::ZeroVariance);
    }
    let degree = f.degree().unwrap_or(0);
    let mut rho = BTreeMap::new();
    for q in 1..=(degree / 2).max(1) {
        let value = if q == 1 {
            rho_1(f).value
        } else {
            rho_q(f, q, options.extra_vars.unwrap_or(q - 1), config)?.value
        };
        rho.insert(q, value);
    }
    let samples = sample_stream(Source::Chaos(f), options.samples, options.seed, PRIMARY_STREAM, options.workers)?;
    let mean = scalar::to_f64(&f.expectation());
    let sd = scalar::to_f64(&variance).sqrt();
    let reference = ChaosPoly::constant(scalar::approx_rational(mean, 1e-17)).add(
        &ChaosPoly::gaussian(1).scale(&scalar::approx_rational(sd, 1e-17)),
    );
    let reference = sample_stream(Source::Chaos(&reference), options.samples, options.seed, REFERENCE_STREAM, options.workers)?;
    Ok(NormalityReport {
        excess_kurtosis: excess_kurtosis(f)?,
        var_gamma: var_gamma(f),
        variance,
        rho,
        w2_to_gaussian: w2_1d(&samples, &reference)?,
        degree,
        samples: options.samples,
        seed: options.seed,
        extra_vars: options.extra_vars,
    })
}

/// `W_2` between the law of `p(X)` under its attached law and of its
/// Gaussian substitute `p(G)`, each on `n` draws.
pub fn invariance_gap(p: &MultilinearPoly, n: usize, seed: u64, workers: Option<usize>) -> Result<f64> {
    let original = sample_stream(Source::Multilinear(p), n, seed, PRIMARY_STREAM, workers)?;
    let gaussian = substitute_gaussian(p)?;
    let substituted = sample_stream(Source::Chaos(&gaussian), n, seed, SUBSTITUTE_STREAM, workers)?;
    w2_1d(&original, &substituted)
}
