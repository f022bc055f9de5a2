//! Seeded experiment runner behind the `mvrsm` command line tool.
//!
//! An experiment is described by a TOML file:
//!
//! ```toml
//! benchmark = "rosenbrock10"        # ackley53 | rosenbrock10 | rosenbrock238
//! algorithms = ["mvrsm", "rs"]
//! budget = 124
//! init_samples = 24
//! seeds = [1, 2, 3, 4, 5, 6, 7]     # or: seeds = { from = 1, to = 7 }
//! output_dir = "results/rosenbrock10"
//! format = "csv"                    # csv | json
//!
//! [boxmin]                          # optional
//! max_iters = 20
//! ```
//!
//! Instead of `benchmark`, a custom problem may be given inline with an
//! `[objective]` table (`function = "ackley"` or `"rosenbrock"` with `scale`,
//! optional `noise` upper bound) and a `[[variables]]` array of
//! `{ kind, lower, upper }` records.
//!
//! Each `(algorithm, seed)` run writes `<algo>_seed<seed>.<format>`; runs that
//! fail write `<algo>_seed<seed>.partial.<format>` instead. `summary.csv` holds
//! per-iteration statistics of the best-so-far value across seeds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxmin::BoxMinConfig;
use crate::driver::{run_mvrsm, run_random_search, DriverError, InnerStart, OptimizerConfig};
use crate::objectives::{BaseFunction, Benchmark, NoiseLaw, NoisyObjective, BENCHMARK_NOISE};
use crate::rls::DEFAULT_LAMBDA;
use crate::space::{SearchSpace, VariableSpec};
use crate::trace::{RunTrace, TraceError};

pub const OUTPUT_DIR_ENV: &str = "MVRSM_OUTPUT_DIR";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trace lengths do not match: {0}")]
    LengthMismatch(String),
    #[error("trace file {path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mvrsm,
    #[serde(alias = "random", alias = "random_search")]
    Rs,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Mvrsm => "mvrsm",
            Algorithm::Rs => "rs",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Csv,
    Json,
}

impl TraceFormat {
    fn ext(&self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Json => "json",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SeedSpec {
    List(Vec<u64>),
    Range { from: u64, to: u64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomObjective {
    function: String,
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    noise: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    benchmark: Option<toml::Spanned<String>>,
    objective: Option<toml::Spanned<CustomObjective>>,
    variables: Option<toml::Spanned<Vec<VariableSpec>>>,
    algorithms: toml::Spanned<Vec<Algorithm>>,
    budget: toml::Spanned<usize>,
    #[serde(default)]
    init_samples: Option<toml::Spanned<usize>>,
    seeds: toml::Spanned<SeedSpec>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    format: TraceFormat,
    #[serde(default)]
    boxmin: BoxMinConfig,
    #[serde(default)]
    inner_start: InnerStart,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default = "yes")]
    parallel: bool,
}

fn yes() -> bool {
    true
}

/// The problem an experiment optimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub space: SearchSpace,
    pub base: BaseFunction,
    pub noise: NoiseLaw,
}

impl Problem {
    pub fn benchmark(b: Benchmark) -> Self {
        Self {
            name: b.name().to_string(),
            space: b.space(),
            base: b.base(),
            noise: BENCHMARK_NOISE,
        }
    }

    pub fn objective(&self, noise_seed: u64) -> NoisyObjective {
        NoisyObjective::new(self.base, self.space.clone(), self.noise, noise_seed)
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub algorithms: Vec<Algorithm>,
    pub optimizer: OptimizerConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub format: TraceFormat,
    pub parallel: bool,
}

fn line_of(src: &str, span: Range<usize>) -> usize {
    src[..span.start.min(src.len())].matches('\n').count() + 1
}

fn config_err(src: &str, span: Range<usize>, message: impl Into<String>) -> CliError {
    CliError::Config {
        line: Some(line_of(src, span)),
        message: message.into(),
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| CliError::Config {
            line: e.span().map(|s| line_of(src, s)),
            message: e.message().to_string(),
        })?;

        let problem = match (&raw.benchmark, &raw.objective, &raw.variables) {
            (Some(b), None, None) => {
                let bench: Benchmark = b
                    .get_ref()
                    .parse()
                    .map_err(|e: crate::objectives::ObjectiveError| config_err(src, b.span(), e.to_string()))?;
                Problem::benchmark(bench)
            }
            (None, Some(obj), Some(vars)) => {
                let space = SearchSpace::new(vars.get_ref().clone())
                    .map_err(|e| config_err(src, vars.span(), e.to_string()))?;
                let o = obj.get_ref();
                let base = match o.function.to_ascii_lowercase().as_str() {
                    "ackley" => BaseFunction::Ackley,
                    "rosenbrock" => {
                        if space.dim() < 2 {
                            return Err(config_err(src, vars.span(), "rosenbrock needs at least 2 variables"));
                        }
                        BaseFunction::Rosenbrock { scale: o.scale }
                    }
                    other => {
                        return Err(config_err(src, obj.span(), format!("unknown function `{other}`")))
                    }
                };
                let noise = match o.noise {
                    None => BENCHMARK_NOISE,
                    Some(0.0) => NoiseLaw::None,
                    Some(u) if u > 0.0 && u.is_finite() => NoiseLaw::Uniform { upper: u },
                    Some(u) => return Err(config_err(src, obj.span(), format!("invalid noise bound {u}"))),
                };
                Problem {
                    name: o.function.to_ascii_lowercase(),
                    space,
                    base,
                    noise,
                }
            }
            _ => {
                return Err(CliError::Config {
                    line: None,
                    message: "give either `benchmark` or both `[objective]` and `[[variables]]`".into(),
                })
            }
        };

        if raw.algorithms.get_ref().is_empty() {
            return Err(config_err(src, raw.algorithms.span(), "no algorithms listed"));
        }
        let mut algorithms = raw.algorithms.get_ref().clone();
        algorithms.dedup();

        let budget = *raw.budget.get_ref();
        let init_samples = raw.init_samples.as_ref().map_or(24, |s| *s.get_ref());
        if init_samples == 0 {
            let span = raw.init_samples.as_ref().map_or(raw.budget.span(), |s| s.span());
            return Err(config_err(src, span, "init_samples must be at least 1"));
        }
        if budget < init_samples {
            return Err(config_err(
                src,
                raw.budget.span(),
                format!("budget {budget} is smaller than init_samples {init_samples}"),
            ));
        }
        let lambda = raw.lambda.unwrap_or(DEFAULT_LAMBDA);
        let optimizer = OptimizerConfig {
            budget,
            init_samples,
            rng_seed: 0,
            boxmin: raw.boxmin,
            lambda,
            inner_start: raw.inner_start,
        };
        optimizer.validate().map_err(|e| CliError::Config {
            line: None,
            message: e.to_string(),
        })?;

        let seeds = match raw.seeds.get_ref() {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { from, to } => (*from..=*to).collect(),
        };
        if seeds.is_empty() {
            return Err(config_err(src, raw.seeds.span(), "seed list is empty"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(config_err(src, raw.seeds.span(), "duplicate seeds"));
        }

        Ok(Self {
            output_dir: raw
                .output_dir
                .unwrap_or_else(|| PathBuf::from(format!("results/{}", problem.name))),
            problem,
            algorithms,
            optimizer,
            seeds,
            format: raw.format,
            parallel: raw.parallel,
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        fs::read_to_string(path).map_err(io_err(path))?.parse()
    }
}

/// Objective noise is drawn from a stream independent of the optimizer's.
pub fn noise_seed(seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03
}

pub fn trace_file_name(algo: Algorithm, seed: u64, format: TraceFormat) -> String {
    format!("{}_seed{}.{}", algo, seed, format.ext())
}

/// Runs one `(algorithm, seed)` pair.
pub fn run_single(
    problem: &Problem,
    algo: Algorithm,
    optimizer: &OptimizerConfig,
    seed: u64,
) -> Result<RunTrace, DriverError> {
    let cfg = OptimizerConfig {
        rng_seed: seed,
        ..optimizer.clone()
    };
    let mut objective = problem.objective(noise_seed(seed));
    match algo {
        Algorithm::Mvrsm => run_mvrsm(&mut objective, &problem.space, &cfg),
        Algorithm::Rs => run_random_search(&mut objective, &problem.space, &cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub output_dir: PathBuf,
    pub trace_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn encode(trace: &RunTrace, format: TraceFormat) -> String {
    match format {
        TraceFormat::Csv => trace.to_csv(),
        TraceFormat::Json => trace.to_json(),
    }
}

/// Output directory precedence: explicit override, then the environment
/// variable, then the config file.
pub fn resolve_output_dir(cfg: &ExperimentConfig, override_dir: Option<&Path>) -> PathBuf {
    if let Some(d) = override_dir {
        return d.to_path_buf();
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg.output_dir.clone(),
    }
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    override_dir: Option<&Path>,
) -> Result<ExperimentReport, CliError> {
    let out = resolve_output_dir(cfg, override_dir);
    fs::create_dir_all(&out).map_err(io_err(&out))?;

    let jobs: Vec<(Algorithm, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let run = |&(algo, seed): &(Algorithm, u64)| -> Result<(Algorithm, u64, Result<RunTrace, (RunTrace, String)>), CliError> {
        let result = match run_single(&cfg.problem, algo, &cfg.optimizer, seed) {
            Ok(t) => Ok(t),
            Err(DriverError::ObjectiveFailure { source, partial }) => Err((*partial, source.to_string())),
            Err(e) => Err((RunTrace::new(), e.to_string())),
        };
        let path = match &result {
            Ok(_) => out.join(trace_file_name(algo, seed, cfg.format)),
            Err(_) => out.join(format!("{}_seed{}.partial.{}", algo, seed, cfg.format.ext())),
        };
        let trace = match &result {
            Ok(t) | Err((t, _)) => t,
        };
        write_atomic(&path, encode(trace, cfg.format).as_bytes())?;
        Ok((algo, seed, result))
    };
    let results: Vec<_> = if cfg.parallel {
        jobs.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_, _>>()?
    };

    let mut groups: BTreeMap<String, Vec<RunTrace>> = BTreeMap::new();
    let mut trace_files = Vec::new();
    let mut failures = Vec::new();
    for (algo, seed, res) in results {
        match res {
            Ok(t) => {
                trace_files.push(out.join(trace_file_name(algo, seed, cfg.format)));
                groups.entry(algo.name().to_string()).or_default().push(t);
            }
            Err((_, message)) => failures.push(RunFailure {
                algorithm: algo,
                seed,
                message,
            }),
        }
    }

    let summary = if groups.is_empty() {
        Vec::new()
    } else {
        summarize_traces(&groups)?
    };
    let summary_file = out.join(SUMMARY_FILE);
    write_atomic(&summary_file, summary_csv(&summary).as_bytes())?;
    Ok(ExperimentReport {
        output_dir: out,
        trace_files,
        summary_file,
        summary,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub iter: usize,
    pub algo: String,
    pub mean_best: f64,
    /// Sample standard deviation (n − 1); 0 for a single run.
    pub std_best: f64,
    pub min_best: f64,
    pub max_best: f64,
    pub mean_step_seconds: f64,
    pub runs: usize,
}

/// Per-iteration statistics of best-so-far across runs, per algorithm.
pub fn summarize_traces(groups: &BTreeMap<String, Vec<RunTrace>>) -> Result<Vec<SummaryRow>, CliError> {
    if groups.values().all(|g| g.is_empty()) {
        return Err(CliError::LengthMismatch("no traces".into()));
    }
    let mut rows = Vec::new();
    for (algo, traces) in groups {
        let Some(first) = traces.first() else {
            continue;
        };
        let len = first.len();
        if let Some(t) = traces.iter().find(|t| t.len() != len) {
            return Err(CliError::LengthMismatch(format!(
                "{algo}: traces of length {len} and {}",
                t.len()
            )));
        }
        let n = traces.len() as f64;
        for i in 0..len {
            let best: Vec<f64> = traces.iter().map(|t| t.records[i].best_y).collect();
            let mean = best.iter().sum::<f64>() / n;
            let std = if traces.len() > 1 {
                (best.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                iter: i + 1,
                algo: algo.clone(),
                mean_best: mean,
                std_best: std,
                min_best: best.iter().copied().fold(f64::INFINITY, f64::min),
                max_best: best.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_step_seconds: traces.iter().map(|t| t.records[i].step_seconds).sum::<f64>() / n,
                runs: traces.len(),
            });
        }
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "iter",
            "algo",
            "mean_best",
            "std_best",
            "min_best",
            "max_best",
            "mean_step_seconds",
            "runs",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Parses `<algo>_seed<N>.csv|json` into `(algo, seed)`; partial traces and
/// other files yield `None`.
pub fn parse_trace_name(name: &str) -> Option<(String, u64)> {
    let stem = name.strip_suffix(".csv").or_else(|| name.strip_suffix(".json"))?;
    let (algo, seed) = stem.rsplit_once("_seed")?;
    if algo.is_empty() {
        return None;
    }
    Some((algo.to_string(), seed.parse().ok()?))
}

/// Reads every trace file in `dir`, writes `summary.csv` there and returns
/// the rows.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let mut groups: BTreeMap<String, Vec<RunTrace>> = BTreeMap::new();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some((algo, _)) = parse_trace_name(name) else {
            continue;
        };
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let trace = if name.ends_with(".json") {
            RunTrace::from_json(&text)
        } else {
            RunTrace::read_csv(text.as_bytes())
        }
        .map_err(|source| CliError::Trace {
            path: path.clone(),
            source,
        })?;
        groups.entry(algo).or_default().push(trace);
    }
    let rows = summarize_traces(&groups)?;
    write_atomic(&dir.join(SUMMARY_FILE), summary_csv(&rows).as_bytes())?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MixedPoint;

    fn trace_of(best: &[f64]) -> RunTrace {
        let mut t = RunTrace::new();
        for &b in best {
            t.push(MixedPoint::new(vec![], vec![0.0]), b, 0.5);
        }
        t
    }

    #[test]
    fn summary_statistics() {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), vec![trace_of(&[1.0]), trace_of(&[3.0])]);
        let rows = summarize_traces(&g).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_best, 2.0);
        assert!((rows[0].std_best - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((rows[0].min_best, rows[0].max_best), (1.0, 3.0));
        assert_eq!(rows[0].mean_step_seconds, 0.5);
    }

    #[test]
    fn single_trace_summary() {
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), vec![trace_of(&[4.0, 2.0, 3.0])]);
        let rows = summarize_traces(&g).unwrap();
        assert_eq!(rows.iter().map(|r| r.mean_best).collect::<Vec<_>>(), vec![4.0, 2.0, 2.0]);
        assert!(rows.iter().all(|r| r.std_best == 0.0));
    }

    #[test]
    fn summary_errors() {
        assert!(matches!(
            summarize_traces(&BTreeMap::new()),
            Err(CliError::LengthMismatch(_))
        ));
        let mut g = BTreeMap::new();
        g.insert("a".to_string(), vec![trace_of(&[1.0]), trace_of(&[1.0, 2.0])]);
        assert!(matches!(summarize_traces(&g), Err(CliError::LengthMismatch(_))));
    }

    #[test]
    fn trace_names() {
        assert_eq!(parse_trace_name("mvrsm_seed12.csv"), Some(("mvrsm".into(), 12)));
        assert_eq!(parse_trace_name("rs_seed3.json"), Some(("rs".into(), 3)));
        assert_eq!(parse_trace_name("rs_seed3.partial.csv"), None);
        assert_eq!(parse_trace_name("summary.csv"), None);
    }

    #[test]
    fn config_parses() {
        let cfg: ExperimentConfig = r#"
benchmark = "rosenbrock10"
algorithms = ["mvrsm", "rs"]
budget = 124
init_samples = 24
seeds = { from = 1, to = 7 }
output_dir = "out"

[boxmin]
max_iters = 10
"#
        .parse()
        .unwrap();
        assert_eq!(cfg.seeds, (1..=7).collect::<Vec<_>>());
        assert_eq!(cfg.algorithms, vec![Algorithm::Mvrsm, Algorithm::Rs]);
        assert_eq!(cfg.optimizer.boxmin.max_iters, 10);
        assert_eq!(cfg.optimizer.boxmin.memory, 5);
        assert_eq!(cfg.problem.space.d_c(), 7);
    }

    #[test]
    fn config_errors_carry_lines() {
        let err = "benchmark = \"rosenbrock10\"\nalgorithms = [\"mvrsm\"]\nbudget = 10\ninit_samples = 24\nseeds = [1]\n"
            .parse::<ExperimentConfig>()
            .unwrap_err();
        match err {
            CliError::Config { line, message } => {
                assert_eq!(line, Some(3));
                assert!(message.contains("smaller"));
            }
            e => panic!("{e}"),
        }
        let err = "benchmark = \"sphere\"\nalgorithms = [\"mvrsm\"]\nbudget = 30\nseeds = [1]\n"
            .parse::<ExperimentConfig>()
            .unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(1), .. }));
        let err = "benchmark = \"ackley53\"\nalgorithms = [\"cmaes\"]\nbudget = 30\nseeds = [1]\n"
            .parse::<ExperimentConfig>()
            .unwrap_err();
        assert!(matches!(err, CliError::Config { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn custom_problem() {
        let cfg: ExperimentConfig = r#"
algorithms = ["rs"]
budget = 5
init_samples = 2
seeds = [1]

[objective]
function = "rosenbrock"
scale = 0.5
noise = 0.0

[[variables]]
kind = "integer"
lower = -2
upper = 2

[[variables]]
kind = "continuous"
lower = -1.5
upper = 1.5
"#
        .parse()
        .unwrap();
        assert_eq!(cfg.problem.base, BaseFunction::Rosenbrock { scale: 0.5 });
        assert_eq!(cfg.problem.noise, NoiseLaw::None);
        assert_eq!((cfg.problem.space.d_c(), cfg.problem.space.d_d()), (1, 1));
    }
}
