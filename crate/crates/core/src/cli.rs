//! Command-line entry point. Exit code 0 on success, 1 on computational
//! failure, 2 on configuration errors. Every file output is written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::construction::{make_bump, schedule, InflationParams};
use crate::error::{GibqError, Result};
use crate::flow::{linear_flow, duhamel_trajectory, InitialPair, DEFAULT_DEGREE};
use crate::harness::{sweep, write_atomic, write_sweep, SweepConfig, SCHEMA_VERSION};
use crate::ktree::{count_trees, verify_count_bound};
use crate::lattice::{SpectralField, SpectralFieldDoc};
use crate::norms::{norm, NormSpec};
use crate::oracle::{convolution_sandwich, rk4_solve, xi1_closed_form, Rk4Options};
use crate::series::{fixed_point, partial_sum};
use crate::verify::{embedding_matrix, run_suite, suite_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const VERSION_TEXT: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (report schema 1, field schema 1, trajectory schema 1)"
);

#[derive(Parser, Debug)]
#[command(name = "gibq", version = VERSION_TEXT, about = "Norm inflation laboratory for the generalized improved Boussinesq equation")]
pub struct Cli {
    /// Worker threads; GIBQ_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Progress messages on stderr.
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Warn)]
    pub log_level: LogLevel,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Quiet,
    Warn,
    Info,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tree count table with the measured counting constant, as CSV.
    Trees {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        max_gen: usize,
    },
    /// Scheduled parameters and the bump data, as JSON.
    Construct(ConstructArgs),
    /// Power series or fixed-point solve; emits the convergence ledger.
    Solve(SolveArgs),
    /// A single norm of a stored field, or the embedding matrix over a corpus.
    Norms(NormsArgs),
    /// Independent oracles.
    Oracle(OracleArgs),
    /// Inflation sweep writing runs.csv, manifest.json and reports.json.
    Inflate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate invariant suite.
    VerifyAll {
        #[arg(long)]
        quick: bool,
        /// Also write the CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub k: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Prescribe the frequency scale instead of scheduling it.
    #[arg(long = "big-n")]
    pub big_n: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub max_gen: usize,
    #[arg(long, value_enum, default_value_t = SolveMethod::Series)]
    pub method: SolveMethod,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Directory for ledger.csv and solution.json instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Series,
    FixedPoint,
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    /// Field document `{period, entries: [{xi, re, im}]}`.
    #[arg(long, requires = "spec")]
    pub field: Option<PathBuf>,
    /// `sobolev,s`, `fl,s,q`, `modulation,s,q`, `amalgam,s,q`, `ws2inf,s`.
    #[arg(long, allow_hyphen_values = true)]
    pub spec: Option<String>,
    #[arg(long, conflicts_with = "field")]
    pub check_embeddings: bool,
    #[arg(long, default_value_t = 100)]
    pub corpus: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.75)]
    pub s: f64,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub mode: OracleMode,
    /// Solve config for `rk4`, parameter config for `xi1`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Step as a fraction of the horizon.
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub side: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub a: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub b: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Rk4,
    Xi1,
    Sandwich,
}

/// Bump parameters inside a solve config.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub n: u64,
    pub s: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default, rename = "N")]
    pub big_n: Option<i64>,
}

impl BumpConfig {
    fn params(&self, k: usize) -> Result<InflationParams> {
        let sigma = self.sigma.unwrap_or(self.s);
        match self.big_n {
            Some(big) => InflationParams::with_frequency(self.n, k, self.s, sigma, self.delta, big),
            None => schedule(self.n, k, self.s, sigma, self.delta),
        }
    }
}

/// Initial data either given explicitly or as a bump; the horizon defaults to the bump's `T`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub k: usize,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_degree")]
    pub p: usize,
    #[serde(default)]
    pub u0: Option<SpectralFieldDoc>,
    #[serde(default)]
    pub u1: Option<SpectralFieldDoc>,
    #[serde(default)]
    pub bump: Option<BumpConfig>,
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

impl SolveConfig {
    /// Initial pair and horizon.
    pub fn resolve(&self) -> Result<(InitialPair, f64)> {
        let bad = |m: &str| GibqError::Config(format!("solve config: {m}"));
        match (&self.bump, &self.u0) {
            (Some(b), None) if self.u1.is_none() => {
                let params = b.params(self.k)?;
                let bump = make_bump(&params)?;
                Ok((bump.phi, self.horizon.unwrap_or(params.t)))
            }
            (None, Some(u0)) => {
                let u0 = u0.clone().into_field(None)?;
                let lattice = *u0.lattice();
                let u1 = match &self.u1 {
                    Some(d) => d.clone().into_field(Some(lattice))?,
                    None => SpectralField::zero(lattice),
                };
                let horizon = self.horizon.ok_or_else(|| bad("explicit data needs a horizon"))?;
                Ok((InitialPair::new(u0, u1)?, horizon))
            }
            _ => Err(bad("give either `bump` or `u0` (with optional `u1`)")),
        }
    }
}

fn read_config(path: &Path, what: &str, keys: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| GibqError::Config(format!("cannot read {what} {}: {e}; expected JSON with keys {keys}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| GibqError::Config(format!("{what}: {e}")))
}

const SOLVE_KEYS: &str = "{k, horizon?, p?, bump: {n, s, sigma?, delta?, N?} | u0, u1?}";
const SWEEP_KEYS: &str =
    "{k, s, sigma?, delta?, n_list | N_list, n?, families?, seed?, J?, p?, method?, base_amplitude?, base_decay?}";

fn load_solve(path: &Path) -> Result<SolveConfig> {
    parse_json(&read_config(path, "solve config", SOLVE_KEYS)?, "solve config")
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn info(level: LogLevel, msg: &str) {
    if level == LogLevel::Info {
        eprintln!("{msg}");
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

/// Executes a parsed command, writing primary output to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let level = cli.log_level;
    match &cli.command {
        Command::Trees { arity, max_gen } => {
            let table = count_trees(*arity, *max_gen)?;
            let bound = verify_count_bound(*arity, *max_gen)?;
            emit(out, &table.to_csv(Some(&bound)))
        }
        Command::Construct(a) => {
            let sigma = a.sigma.unwrap_or(a.s);
            let params = match a.big_n {
                Some(big) => InflationParams::with_frequency(a.n, a.k, a.s, sigma, a.delta, big)?,
                None => schedule(a.n, a.k, a.s, sigma, a.delta)?,
            };
            let bump = make_bump(&params)?;
            let doc = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "params": params,
                "bump": serde_json::from_str::<serde_json::Value>(&bump.to_json()?)?,
            });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            match &a.out {
                Some(path) => write_atomic(path, text.as_bytes()),
                None => emit(out, &text),
            }
        }
        Command::Solve(a) => {
            let cfg = load_solve(&a.config)?;
            let (pair, horizon) = cfg.resolve()?;
            info(level, &format!("solving to T={horizon} with degree {}", cfg.p));
            let (ledger, solution) = match a.method {
                SolveMethod::Series => {
                    let acc = partial_sum(&pair, cfg.k, a.max_gen, horizon, cfg.p)?;
                    (acc.ledger_csv(), acc.sum().to_json()?)
                }
                SolveMethod::FixedPoint => {
                    let fp = fixed_point(&pair, cfg.k, horizon, cfg.p, a.tol)?;
                    let mut csv = String::from("iteration,distance\n");
                    for (i, d) in fp.distances.iter().enumerate() {
                        csv.push_str(&format!("{},{}\n", i + 1, fmt_f(*d)));
                    }
                    (csv, fp.trajectory.to_json()?)
                }
            };
            match &a.out {
                Some(dir) => {
                    write_atomic(&dir.join("ledger.csv"), ledger.as_bytes())?;
                    write_atomic(&dir.join("solution.json"), (solution + "\n").as_bytes())
                }
                None => emit(out, &ledger),
            }
        }
        Command::Norms(a) => {
            if a.check_embeddings {
                let (emb, alg) = embedding_matrix(a.seed, a.corpus, a.s)?;
                let mut csv = String::from("field,check,lhs,rhs,margin,holds\n");
                for (i, r) in emb.iter().enumerate() {
                    for c in &r.checks {
                        csv.push_str(&format!("{i},{},{},{},{},{}\n", c.name, fmt_f(c.lhs), fmt_f(c.rhs), fmt_f(c.margin), c.holds));
                    }
                }
                for (i, r) in alg.iter().enumerate() {
                    for c in [&r.fl1, &r.modulation] {
                        csv.push_str(&format!("{i},{},{},{},{},{}\n", c.name, fmt_f(c.lhs), fmt_f(c.rhs), fmt_f(c.margin), c.holds));
                    }
                }
                return emit(out, &csv);
            }
            let (Some(path), Some(spec)) = (&a.field, &a.spec) else {
                return Err(GibqError::Config("norms needs --field and --spec, or --check-embeddings".into()));
            };
            let spec: NormSpec = spec.parse()?;
            let text = read_config(path, "field", "{period, entries: [{xi, re, im}]}")?;
            let field = SpectralField::from_json(&text).map_err(|e| GibqError::Config(format!("field document: {e}")))?;
            emit(out, &format!("{}\n", fmt_f(norm(&field, &spec)?)))
        }
        Command::Oracle(a) => match a.mode {
            OracleMode::Rk4 => {
                let path = a.config.as_ref().ok_or_else(|| GibqError::Config("rk4 needs --config".into()))?;
                let cfg = load_solve(path)?;
                let (pair, horizon) = cfg.resolve()?;
                let report = rk4_solve(&pair, cfg.k, horizon, cfg.p, &Rk4Options::new(horizon / a.steps as f64))?;
                let mut csv = String::from("t,sup_l1\n");
                for (t, v) in report.trajectory.nodes().iter().zip(report.trajectory.values()) {
                    csv.push_str(&format!("{},{}\n", fmt_f(*t), fmt_f(v.l1())));
                }
                emit(out, &csv)
            }
            OracleMode::Xi1 => {
                let path = a.config.as_ref().ok_or_else(|| GibqError::Config("xi1 needs --config".into()))?;
                let cfg = load_solve(path)?;
                let b = cfg
                    .bump
                    .as_ref()
                    .ok_or_else(|| GibqError::Config("xi1 needs a `bump` block".into()))?;
                let params = b.params(cfg.k)?;
                let bump = make_bump(&params)?;
                let horizon = cfg.horizon.unwrap_or(params.t);
                let closed = xi1_closed_form(&bump, cfg.k, horizon)?;
                let flow = linear_flow(&bump.phi, horizon, cfg.p)?;
                let quad = duhamel_trajectory(&vec![&flow; cfg.k])?;
                let quad = quad.final_value();
                let mut csv = String::from("xi,closed_re,closed_im,quadrature_re,quadrature_im\n");
                let mut support: Vec<i64> = closed.support().chain(quad.support()).collect();
                support.sort_unstable();
                support.dedup();
                for xi in support {
                    let (c, q) = (closed.get(xi), quad.get(xi));
                    csv.push_str(&format!("{xi},{},{},{},{}\n", fmt_f(c.re), fmt_f(c.im), fmt_f(q.re), fmt_f(q.im)));
                }
                emit(out, &csv)
            }
            OracleMode::Sandwich => {
                let r = convolution_sandwich(a.a, a.b, a.side)?;
                let mut csv = String::from("xi,count\n");
                for (xi, c) in &r.values {
                    csv.push_str(&format!("{xi},{c}\n"));
                }
                info(level, &format!("c_lower={} c_upper={}", r.c_lower, r.c_upper));
                emit(out, &csv)
            }
        },
        Command::Inflate { config, out: dir } => {
            let cfg = SweepConfig::from_json(&read_config(config, "sweep config", SWEEP_KEYS)?)?;
            info(level, &format!("sweeping {} points", cfg.points().len()));
            let result = sweep(&cfg)?;
            write_sweep(&result, dir)?;
            emit(out, &format!("wrote {} rows to {}\n", result.outcomes.len() * cfg.families.len(), dir.display()))
        }
        Command::VerifyAll { quick, out: file } => {
            let verdicts = run_suite(*quick)?;
            let csv = suite_csv(&verdicts);
            if let Some(path) = file {
                write_atomic(path, csv.as_bytes())?;
            }
            emit(out, &csv)?;
            if verdicts.iter().all(|v| v.passed) {
                Ok(())
            } else {
                let failed: Vec<&str> = verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
                Err(GibqError::Structural(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}

/// Thread count from `GIBQ_THREADS`, then the flag.
fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, String> {
    match std::env::var("GIBQ_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| format!("GIBQ_THREADS must be a positive integer, got '{v}'")),
        Err(_) => Ok(flag),
    }
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let mut buf: Vec<u8> = Vec::new();
    let mut run = || execute(&cli, &mut buf);
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return EXIT_FAILURE;
            }
        },
        None => run(),
    };
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return EXIT_FAILURE;
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if cli.log_level != LogLevel::Quiet || e.is_config() {
                eprintln!("error: {e}");
            }
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_FAILURE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = main_with_args(std::iter::once("gibq").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn version_mentions_schema() {
        assert!(VERSION_TEXT.contains(&format!("report schema {SCHEMA_VERSION}")));
    }

    #[test]
    fn trees_prints_catalan_table() {
        let (code, out) = run(&["trees", "--arity", "2", "--max-gen", "6"]);
        assert_eq!(code, 0);
        let counts: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(counts, ["1", "1", "2", "5", "14", "42", "132"]);
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let (code, _) = run(&["inflate", "--config", "/nonexistent/missing.json", "--out", "/tmp/x"]);
        assert_eq!(code, EXIT_CONFIG);
        let (code, _) = run(&["solve", "--config", "/nonexistent/missing.json"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(run(&["trees", "--arity"]).0, EXIT_CONFIG);
        assert_eq!(run(&["norms", "--check-embeddings", "--field", "f.json"]).0, EXIT_CONFIG);
    }

    #[test]
    fn computational_failure_exits_one() {
        // cubes overlap when N <= A
        let (code, _) = run(&["construct", "--n", "1", "--k", "2", "--s", "-0.75", "--big-n", "8"]);
        assert_eq!(code, EXIT_FAILURE);
    }

    #[test]
    fn sandwich_oracle_csv() {
        let (code, out) = run(&["oracle", "--mode", "sandwich", "--side", "2"]);
        assert_eq!(code, 0);
        assert_eq!(out, "xi,count\n-2,1\n-1,2\n0,3\n1,2\n2,1\n");
    }
}
