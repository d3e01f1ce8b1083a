//! Batch front end behind the `fermicorr` binary.
//!
//! Exit codes: 0 on success, 1 when a computation or verification fails, 2 for
//! configuration errors.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyReport, KSumPolicy};
use crate::error::Error;
use crate::lattice::{fermi_ball, k_vectors_within, lune_power_sum, LuneCache};
use crate::numeric::quadrature::QuadratureSpec;
use crate::potential::PotentialModel;
use crate::report::Status;
use crate::verify::{self, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const CACHE_ENV: &str = "FERMICORR_CACHE";

pub const DEFAULT_POTENTIAL: &str = "coulomb:g=1.0";
pub const DEFAULT_TAIL_TOL: f64 = 1e-4;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_FOCK_KF: f64 = 0.9;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::ResourceLimit(_) => CliError::Config(e.to_string()),
            Error::Numerical(_) | Error::Io(_) | Error::Json(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

fn is_broken_pipe(e: &CliError) -> bool {
    matches!(e, CliError::Failure(m) if m.contains("Broken pipe"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Fermi-state energy, correlation energies and error functional at one k_F.
    Energy,
    /// Energies over a list of k_F with the k_F log k_F fit.
    Scan,
    /// Run verification suites.
    Verify,
    /// Lune sizes and power sums.
    Lune,
}

impl Command {
    fn as_str(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Scan => "scan",
            Command::Verify => "verify",
            Command::Lune => "lune",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fermicorr", version, about = "Correlation energy bounds for a lattice Fermi gas")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Fermi momentum.
    #[arg(long = "kf", global = true)]
    kf: Option<f64>,
    /// Comma-separated k_F values; `a..b` expands to integer steps.
    #[arg(long = "kf-list", global = true)]
    kf_list: Option<String>,
    /// `coulomb:g=<g>`, `yukawa:g=<g>,mu=<mu>`, `table:<path>` or `none`.
    #[arg(long, global = true, default_value = DEFAULT_POTENTIAL)]
    potential: String,
    /// Sum every |k| ≤ kcut instead of adaptive shells.
    #[arg(long, global = true)]
    kcut: Option<f64>,
    /// Relative size of the last shell at which adaptive k sums stop.
    #[arg(long = "tail-tol", global = true, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
    /// Relative tolerance of the t quadrature.
    #[arg(long = "quad-tol", global = true, default_value_t = DEFAULT_QUAD_TOL)]
    quad_tol: f64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Suite for `verify`.
    #[arg(long, global = true, default_value = "all")]
    suite: String,
    /// Directory for cached lunes; FERMICORR_CACHE takes precedence.
    #[arg(long = "cache-dir", global = true)]
    cache_dir: Option<PathBuf>,
    /// Include per-k contributions (JSON energy output).
    #[arg(long = "per-k", global = true)]
    per_k: bool,
    /// Extra power-sum exponents for `lune`.
    #[arg(long, global = true, allow_hyphen_values = true, value_delimiter = ',')]
    beta: Vec<f64>,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub k_f: Option<f64>,
    pub k_f_list: Vec<f64>,
    pub potential: String,
    pub kcut: Option<f64>,
    pub tail_tol: f64,
    pub quad_tol: f64,
    pub threads: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub suite: String,
    pub cache_dir: Option<PathBuf>,
    pub per_k: bool,
    pub beta: Vec<f64>,
}

fn parse_kf_list(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |t: &str| CliError::Config(format!("bad --kf-list entry {t:?}"));
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = tok.split_once("..") {
            let a: i64 = a.trim().parse().map_err(|_| bad(tok))?;
            let b: i64 = b.trim().parse().map_err(|_| bad(tok))?;
            if b < a {
                return Err(bad(tok));
            }
            out.extend((a..=b).map(|x| x as f64));
        } else {
            out.push(tok.parse().map_err(|_| bad(tok))?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("--kf-list is empty".into()));
    }
    Ok(out)
}

fn check_positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    /// Parse a command line, program name included.
    pub fn parse_from<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let a = Args::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
        let cfg = RunConfig {
            command: a.command,
            k_f: a.kf,
            k_f_list: a.kf_list.as_deref().map(parse_kf_list).transpose()?.unwrap_or_default(),
            potential: a.potential,
            kcut: a.kcut,
            tail_tol: a.tail_tol,
            quad_tol: a.quad_tol,
            threads: a.threads,
            seed: a.seed,
            out: a.out,
            format: a.format,
            suite: a.suite,
            cache_dir: a.cache_dir,
            per_k: a.per_k,
            beta: a.beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(k) = self.k_f {
            check_positive("--kf", k)?;
        }
        for &k in &self.k_f_list {
            check_positive("--kf-list entry", k)?;
        }
        if let Some(k) = self.kcut {
            check_positive("--kcut", k)?;
        }
        check_positive("--tail-tol", self.tail_tol)?;
        QuadratureSpec::with_rel_tol(self.quad_tol)?;
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(CliError::Config("--beta values must be finite".into()));
        }
        match self.command {
            Command::Energy | Command::Lune if self.k_f.is_none() => {
                Err(CliError::Config(format!("{} needs --kf", self.command.as_str())))
            }
            Command::Scan if self.k_f.is_none() && self.k_f_list.is_empty() => {
                Err(CliError::Config("scan needs --kf-list".into()))
            }
            Command::Verify if !verify::is_suite(&self.suite) => Err(CliError::Config(format!(
                "unknown suite {:?} (expected one of {})",
                self.suite,
                verify::SUITES.join(", ")
            ))),
            _ => Ok(()),
        }
    }

    /// Canonical argument list: every option spelled out, in a fixed order.
    pub fn to_args(&self) -> Vec<String> {
        let mut v = vec!["fermicorr".to_string(), self.command.as_str().to_string()];
        let mut push = |k: &str, val: String| {
            v.push(format!("--{k}"));
            v.push(val);
        };
        if let Some(k) = self.k_f {
            push("kf", format!("{k:?}"));
        }
        if !self.k_f_list.is_empty() {
            push("kf-list", self.k_f_list.iter().map(|k| format!("{k:?}")).collect::<Vec<_>>().join(","));
        }
        push("potential", self.potential.clone());
        if let Some(k) = self.kcut {
            push("kcut", format!("{k:?}"));
        }
        push("tail-tol", format!("{:?}", self.tail_tol));
        push("quad-tol", format!("{:?}", self.quad_tol));
        if let Some(t) = self.threads {
            push("threads", t.to_string());
        }
        push("seed", self.seed.to_string());
        if let Some(p) = &self.out {
            push("out", p.display().to_string());
        }
        push("format", self.format.as_str().to_string());
        push("suite", self.suite.clone());
        if let Some(p) = &self.cache_dir {
            push("cache-dir", p.display().to_string());
        }
        if !self.beta.is_empty() {
            push("beta", self.beta.iter().map(|b| format!("{b:?}")).collect::<Vec<_>>().join(","));
        }
        if self.per_k {
            v.push("--per-k".to_string());
        }
        v
    }

    /// `to_args` joined by spaces.
    pub fn to_command_line(&self) -> String {
        self.to_args().join(" ")
    }

    pub fn model(&self) -> Result<PotentialModel, CliError> {
        PotentialModel::parse(&self.potential).map_err(|e| CliError::Config(format!("--potential: {e}")))
    }

    pub fn policy(&self) -> KSumPolicy {
        match self.kcut {
            Some(radius) => KSumPolicy::Exhaustive { radius },
            None => match KSumPolicy::default() {
                KSumPolicy::Adaptive { r_max, .. } => KSumPolicy::Adaptive { rel_tail_tol: self.tail_tol, r_max },
                other => other,
            },
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { rel_tol: self.quad_tol, ..QuadratureSpec::default() }
    }

    /// Cache directory, with `FERMICORR_CACHE` taking precedence over `--cache-dir`.
    pub fn resolved_cache_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => self.cache_dir.clone(),
        }
    }

    /// `k_F` values for `scan`, deduplicated in first-seen order, with the
    /// duplicates that were dropped.
    pub fn scan_values(&self) -> (Vec<f64>, Vec<f64>) {
        let mut all = self.k_f_list.clone();
        if all.is_empty() {
            all.extend(self.k_f);
        }
        let mut seen = Vec::new();
        let mut dropped = Vec::new();
        for k in all {
            if seen.iter().any(|s: &f64| s.to_bits() == k.to_bits()) {
                dropped.push(k);
            } else {
                seen.push(k);
            }
        }
        (seen, dropped)
    }
}

/// `normalize(s)`: parse and print back in canonical form.
pub fn normalize<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Ok(RunConfig::parse_from(args)?.to_command_line())
}

/// Parse, run, and report; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Args::try_parse_from(&args) {
        use clap::error::ErrorKind;
        let code = match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_CONFIG,
        };
        let _ = e.print();
        return code;
    }
    let cfg = match RunConfig::parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fermicorr: {e}");
            return e.exit_code();
        }
    };
    let mut stderr = std::io::stderr();
    let result = match &cfg.out {
        Some(path) => match std::fs::File::create(path) {
            Ok(f) => {
                let mut w = std::io::BufWriter::new(f);
                run(&cfg, &mut w, &mut stderr).and_then(|_| w.flush().map_err(CliError::from))
            }
            Err(e) => Err(CliError::Config(format!("cannot create {}: {e}", path.display()))),
        },
        None => {
            let mut w = std::io::BufWriter::new(std::io::stdout());
            run(&cfg, &mut w, &mut stderr).and_then(|_| w.flush().map_err(CliError::from))
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            eprintln!("fermicorr: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed configuration on a pool of `threads` workers.
pub fn run(cfg: &RunConfig, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.command {
        Command::Energy => cmd_energy(cfg, out),
        Command::Scan => cmd_scan(cfg, out, err),
        Command::Verify => cmd_verify(cfg, out, err),
        Command::Lune => cmd_lune(cfg, out, err),
    })
}

fn header(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> std::io::Result<()> {
    writeln!(out, "# seed={}", cfg.seed)?;
    writeln!(out, "# potential={}", cfg.potential)
}

fn energy_report(cfg: &RunConfig, model: &PotentialModel, k_f: f64) -> Result<EnergyReport, CliError> {
    Ok(energy::upper_bound(model, k_f, &cfg.policy(), &cfg.quadrature(), cfg.per_k)?)
}

pub fn cmd_energy(cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let model = cfg.model()?;
    let k_f = cfg.k_f.ok_or_else(|| CliError::Config("energy needs --kf".into()))?;
    let rep = energy_report(cfg, &model, k_f)?;
    match cfg.format {
        Format::Csv => {
            header(cfg, out)?;
            energy::write_csv(out, std::slice::from_ref(&rep))?;
        }
        Format::Json => {
            let mut v = rep.to_json_value();
            v["seed"] = serde_json::json!(cfg.seed);
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?)?;
        }
    }
    Ok(())
}

pub fn cmd_scan(cfg: &RunConfig, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let model = cfg.model()?;
    let (values, dropped) = cfg.scan_values();
    if !dropped.is_empty() {
        writeln!(err, "warning: duplicate k_F values ignored: {dropped:?}")?;
    }
    let reports = values.iter().map(|&k| energy_report(cfg, &model, k)).collect::<Result<Vec<_>, _>>()?;
    let fit = if reports.len() >= 3 { Some(energy::fit_scaling(&reports)?) } else { None };
    match cfg.format {
        Format::Csv => {
            header(cfg, out)?;
            energy::write_csv(out, &reports)?;
            if let Some(f) = fit {
                writeln!(out, "# fit e_corr_bos = a k_F log k_F + b k_F: a={} b={} residual={}", energy::fmt17(f.a), energy::fmt17(f.b), energy::fmt17(f.residual))?;
            }
        }
        Format::Json => {
            let v = serde_json::json!({
                "seed": cfg.seed,
                "rows": reports.iter().map(|r| r.to_json_value()).collect::<Vec<_>>(),
                "fit": fit,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?)?;
        }
    }
    Ok(())
}

pub fn verify_options(cfg: &RunConfig) -> Result<VerifyOptions, CliError> {
    let mut opts = VerifyOptions {
        seed: cfg.seed,
        fock_k_f: cfg.k_f.unwrap_or(DEFAULT_FOCK_KF),
        model: cfg.model()?,
        quad: cfg.quadrature(),
        ..VerifyOptions::default()
    };
    opts.fock.seed = cfg.seed;
    if !cfg.k_f_list.is_empty() {
        opts.lune_k_f = cfg.k_f_list.clone();
    }
    Ok(opts)
}

pub fn cmd_verify(cfg: &RunConfig, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let opts = verify_options(cfg)?;
    let rep = verify::run_suite(&cfg.suite, &opts)?;
    let count = |s: Status| rep.checks.iter().filter(|c| c.status == s).count();
    let (pass, fail, skip) = (count(Status::Pass), count(Status::Fail), count(Status::Skipped));
    match cfg.format {
        Format::Json => {
            let mut v = rep.to_json();
            v["seed"] = serde_json::json!(cfg.seed);
            v["summary"] = serde_json::json!({ "pass": pass, "fail": fail, "skipped": skip });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?)?;
        }
        Format::Csv => {
            header(cfg, out)?;
            writeln!(out, "status,name,residual,tolerance")?;
            for c in &rep.checks {
                let status = serde_json::to_value(c.status).map_err(Error::from)?;
                writeln!(out, "{},\"{}\",{:e},{:e}", status.as_str().unwrap_or("?"), c.name.replace('"', "'"), c.residual, c.tolerance)?;
            }
        }
    }
    writeln!(err, "{pass} passed, {fail} failed, {skip} skipped")?;
    for c in rep.failures() {
        writeln!(err, "FAIL {}: residual {:e} > {:e}", c.name, c.residual, c.tolerance)?;
    }
    if fail > 0 {
        return Err(CliError::Failure(format!("{fail} verification check(s) failed")));
    }
    Ok(())
}

/// Rows for every `k` with `|k| ≤ 4k_F`.
pub fn cmd_lune(cfg: &RunConfig, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let k_f = cfg.k_f.ok_or_else(|| CliError::Config("lune needs --kf".into()))?;
    let ball = fermi_ball(k_f)?;
    let cache = match cfg.resolved_cache_dir() {
        Some(d) => LuneCache::with_dir(d),
        None => LuneCache::new(),
    };
    let ks = k_vectors_within(4.0 * k_f);
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let l = cache.get(&ball, k)?;
        let sums: Vec<f64> = cfg.beta.iter().map(|&b| lune_power_sum(&l, b).value).collect();
        rows.push((k, l.len(), lune_power_sum(&l, 1.0).value, sums));
    }
    if let Some(path) = cache.persist(k_f)? {
        writeln!(err, "cached lunes in {}", path.display())?;
    }
    match cfg.format {
        Format::Csv => {
            header(cfg, out)?;
            write!(out, "kx,ky,kz,norm,lune_size,N,sum_lambda")?;
            for b in &cfg.beta {
                write!(out, ",sum_lambda_pow_{b:?}")?;
            }
            writeln!(out)?;
            for (k, size, s1, sums) in &rows {
                write!(out, "{},{},{},{},{},{},{}", k.x, k.y, k.z, energy::fmt17(k.norm()), size, ball.n(), energy::fmt17(*s1))?;
                for s in sums {
                    write!(out, ",{}", energy::fmt17(*s))?;
                }
                writeln!(out)?;
            }
        }
        Format::Json => {
            let v = serde_json::json!({
                "seed": cfg.seed,
                "k_F": k_f,
                "N": ball.n(),
                "rows": rows.iter().map(|(k, size, s1, sums)| serde_json::json!({
                    "k": k.as_array(),
                    "norm": k.norm(),
                    "lune_size": size,
                    "sum_lambda": s1,
                    "power_sums": cfg.beta.iter().zip(sums).map(|(b, s)| serde_json::json!({"beta": b, "value": s})).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?)?;
        }
    }
    Ok(())
}
