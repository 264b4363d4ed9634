//! Command-line front end.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 numerical failure, 4 a
//! verification check did not hold.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{correlator_set, CorrelatorSet};
use crate::ed::{ChainDiagonalization, FiniteChainSpec};
use crate::error::Error;
use crate::measures::{verified_report, CorrelationReport, OptimizerSettings};
use crate::params::{ModelParams, QuadratureConfig};
use crate::scan::{
    derivative_wrt_lambda, locate_critical_point, sweep, CriticalScan, LambdaRange, ScanSettings,
    SweepRow, SweepSpec, DEFAULT_DERIVATIVE_STEP,
};
use crate::state::build_state;
use crate::GCache;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

/// Slack for the `I = C + D` check applied to every emitted row.
pub const ADDITIVITY_TOL: f64 = 1e-10;

pub const CSV_HEADER: &str =
    "gamma,lambda,kT,n,sz,sxx,syy,szz,mutual_info,classical,discord,concurrence,eof";

#[derive(Parser, Debug)]
#[command(
    name = "xychain",
    version,
    about = "Pairwise correlations of the XY chain in a transverse field"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Correlators and measures at one parameter point.
    Point(PointArgs),
    /// Table over a (gamma, lambda, kT, n) grid.
    Sweep(SweepArgs),
    /// Peaks of d(discord)/d(lambda) and d(classical)/d(lambda).
    ScanQpt(ScanArgs),
    /// Closed-form versus optimized classical correlation on a grid.
    VerifyMeasurement(GridArgs),
    /// Exact diagonalization of finite rings against the infinite chain.
    EdConverge(EdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Absolute and relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// key=value file with default flag values; command-line flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct PointArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub kt: f64,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Also optimize the measurement and compare with the closed form.
    #[arg(long)]
    pub verify_measurement: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub gamma: Vec<f64>,
    /// Explicit lambda values (alternative to the range flags).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["lambda_min", "lambda_max", "lambda_steps"])]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_steps: Option<usize>,
    /// Explicit kT values (alternative to the range flags); 0 is exact.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["kt_min", "kt_max", "kt_steps"])]
    pub kt: Vec<f64>,
    #[arg(long)]
    pub kt_min: Option<f64>,
    #[arg(long)]
    pub kt_max: Option<f64>,
    #[arg(long)]
    pub kt_steps: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub n: Vec<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = DEFAULT_DERIVATIVE_STEP)]
    pub derivative_step: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub kt: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub lambda_max: f64,
    /// Coarse grid points across the window.
    #[arg(long, default_value_t = 41)]
    pub lambda_steps: usize,
    #[arg(long, default_value_t = DEFAULT_DERIVATIVE_STEP)]
    pub derivative_step: f64,
    /// Check the differentiator on lambda^2 instead of scanning.
    #[arg(long)]
    pub self_test: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EdArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub kt: f64,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Ring sizes.
    #[arg(long, value_delimiter = ',', default_value = "6,8,10,12")]
    pub sites: Vec<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// One emitted row; JSON output is an array of these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub gamma: f64,
    pub lambda: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
    pub n: usize,
    pub sz: f64,
    pub sxx: f64,
    pub syy: f64,
    pub szz: f64,
    pub mutual_info: f64,
    pub classical: f64,
    pub discord: f64,
    pub concurrence: f64,
    pub eof: f64,
}

impl Record {
    pub fn new(params: &ModelParams, cs: &CorrelatorSet, r: &CorrelationReport) -> Self {
        Record {
            gamma: params.gamma(),
            lambda: params.lambda(),
            kt: params.kt(),
            n: cs.n,
            sz: cs.sz,
            sxx: cs.sxx,
            syy: cs.syy,
            szz: cs.szz,
            mutual_info: r.mutual_information,
            classical: r.classical,
            discord: r.discord,
            concurrence: r.concurrence,
            eof: r.eof,
        }
    }

    fn csv_line(&self) -> String {
        let vals = [
            fmt_g(self.gamma),
            fmt_g(self.lambda),
            fmt_g(self.kt),
            self.n.to_string(),
            fmt_g(self.sz),
            fmt_g(self.sxx),
            fmt_g(self.syy),
            fmt_g(self.szz),
            fmt_g(self.mutual_info),
            fmt_g(self.classical),
            fmt_g(self.discord),
            fmt_g(self.concurrence),
            fmt_g(self.eof),
        ];
        vals.join(",")
    }
}

impl From<&SweepRow> for Record {
    fn from(row: &SweepRow) -> Self {
        Record::new(&row.params, &row.correlators, &row.report)
    }
}

/// `printf("%.12g")`-style formatting; negative zero prints as `0`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        let m = trim_fraction(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Output text plus any verification failure to report after writing it.
struct Outcome {
    text: String,
    mismatch: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            mismatch: None,
        }
    }
}

fn check_additivity(rec: &Record) -> CliResult<()> {
    let gap = (rec.mutual_info - rec.classical - rec.discord).abs();
    if gap > ADDITIVITY_TOL {
        return Err(Failure::Numerical(format!(
            "I != C + D by {gap:.3e} at gamma={}, lambda={}, kT={}, n={}",
            rec.gamma, rec.lambda, rec.kt, rec.n
        )));
    }
    Ok(())
}

/// Serializes records as CSV (with header) or a JSON array.
pub fn render_records(records: &[Record], format: Format) -> std::result::Result<String, String> {
    for rec in records {
        check_additivity(rec).map_err(|f| f.message().to_string())?;
    }
    Ok(match format {
        Format::Csv => {
            let mut s = String::with_capacity(records.len() * 160);
            s.push_str(CSV_HEADER);
            s.push('\n');
            for rec in records {
                s.push_str(&rec.csv_line());
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(records).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
    })
}

fn render(records: &[Record], format: Format) -> CliResult<String> {
    render_records(records, format).map_err(Failure::Numerical)
}

fn quad_config(common: &CommonArgs) -> CliResult<QuadratureConfig> {
    Ok(QuadratureConfig::with_tolerance(common.quad_tol)?)
}

fn range_values(
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
    name: &str,
) -> CliResult<LambdaRange> {
    match (min, max, steps) {
        (Some(lo), Some(hi), Some(k)) => Ok(LambdaRange::new(lo, hi, k)?),
        _ => Err(Failure::Usage(format!(
            "give --{name} or all of --{name}-min, --{name}-max, --{name}-steps"
        ))),
    }
}

fn lambda_range(g: &GridArgs) -> CliResult<LambdaRange> {
    match g.lambda.as_slice() {
        [] => range_values(g.lambda_min, g.lambda_max, g.lambda_steps, "lambda"),
        [l] => Ok(LambdaRange::new(*l, *l, 1)?),
        _ => Err(Failure::Usage(
            "sweep takes a single --lambda value or a lambda range".into(),
        )),
    }
}

fn lambda_values(g: &GridArgs) -> CliResult<Vec<f64>> {
    if g.lambda.is_empty() {
        Ok(lambda_range(g)?.values())
    } else {
        Ok(g.lambda.clone())
    }
}

fn kt_values(g: &GridArgs) -> CliResult<Vec<f64>> {
    if g.kt.is_empty() {
        Ok(range_values(g.kt_min, g.kt_max, g.kt_steps, "kt")?.values())
    } else {
        Ok(g.kt.clone())
    }
}

fn run_point(a: &PointArgs) -> CliResult<Outcome> {
    let quad = quad_config(&a.common)?;
    let params = ModelParams::new(a.gamma, a.lambda, a.kt)?;
    let cs = correlator_set(a.n, &params, &quad).map_err(|e| tag(&params, a.n, e))?;
    let state = build_state(cs).map_err(|e| tag(&params, a.n, e))?;
    let mut mismatch = None;
    let rep = if a.verify_measurement {
        let (rep, check) = verified_report(&state, &OptimizerSettings::default())?;
        eprintln!(
            "measurement check: closed={} optimized={} difference={:.3e} theta={} phi={} unique={}",
            fmt_g(check.closed),
            fmt_g(check.optimized.value),
            check.difference,
            fmt_g(check.optimized.angles.theta),
            fmt_g(check.optimized.angles.phi),
            check.optimized.unique
        );
        if !check.agrees {
            mismatch = Some(format!(
                "closed-form and optimized classical correlation differ by {:.3e}",
                check.difference
            ));
        }
        rep
    } else {
        crate::measures::report(&state)
    };
    let text = render(&[Record::new(&params, &cs, &rep)], a.common.format)?;
    Ok(Outcome { text, mismatch })
}

fn tag(params: &ModelParams, n: usize, e: Error) -> Error {
    Error::AtPoint {
        gamma: params.gamma(),
        lambda: params.lambda(),
        kt: params.kt(),
        n,
        source: Box::new(e),
    }
}

fn run_sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let g = &a.grid;
    let quad = quad_config(&g.common)?;
    let spec = SweepSpec::new(
        g.gamma.clone(),
        lambda_range(g)?,
        kt_values(g)?,
        g.n.clone(),
        a.derivative_step,
    )?;
    let table = sweep(&spec, &quad)?;
    let records: Vec<Record> = table.rows().iter().map(Record::from).collect();
    Ok(Outcome::ok(render(&records, g.common.format)?))
}

fn run_scan(a: &ScanArgs) -> CliResult<Outcome> {
    if a.self_test {
        return scan_self_test(a.derivative_step);
    }
    let quad = quad_config(&a.common)?;
    let settings = ScanSettings {
        grid_points: a.lambda_steps,
        ..ScanSettings::default()
    };
    let mut gammas = a.gamma.clone();
    let mut kts = a.kt.clone();
    let mut ns = a.n.clone();
    gammas.sort_by(|x, y| x.total_cmp(y));
    gammas.dedup();
    kts.sort_by(|x, y| x.total_cmp(y));
    kts.dedup();
    ns.sort_unstable();
    ns.dedup();
    let mut keys = Vec::new();
    for &g in &gammas {
        for &kt in &kts {
            for &n in &ns {
                keys.push((g, kt, n));
            }
        }
    }
    let window = (a.lambda_min, a.lambda_max);
    let scans = keys
        .iter()
        .map(|&(g, kt, n)| {
            locate_critical_point(g, kt, n, window, a.derivative_step, &quad, &settings)
        })
        .collect::<crate::Result<Vec<CriticalScan>>>()?;
    let text = match a.common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&scans)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => scan_csv(&scans),
    };
    Ok(Outcome::ok(text))
}

fn scan_csv(scans: &[CriticalScan]) -> String {
    let mut s =
        String::from("kind,gamma,kT,n,lambda,d_discord,d_classical,prominence,low_contrast\n");
    for sc in scans {
        let key = format!("{},{},{}", fmt_g(sc.gamma), fmt_g(sc.kt), sc.n);
        for p in &sc.series {
            let _ = writeln!(
                s,
                "series,{key},{},{},{},,",
                fmt_g(p.lambda),
                fmt_g(p.d_discord),
                fmt_g(p.d_classical)
            );
        }
        let d = &sc.discord;
        let c = &sc.classical;
        let _ = writeln!(
            s,
            "peak_discord,{key},{},{},,{},{}",
            fmt_g(d.lambda_star),
            fmt_g(d.peak),
            fmt_g(d.prominence),
            d.low_contrast
        );
        let _ = writeln!(
            s,
            "peak_classical,{key},{},,{},{},{}",
            fmt_g(c.lambda_star),
            fmt_g(c.peak),
            fmt_g(c.prominence),
            c.low_contrast
        );
    }
    s
}

fn scan_self_test(step: f64) -> CliResult<Outcome> {
    let mut s = String::from("lambda,derivative,exact,error\n");
    let mut worst: f64 = 0.0;
    for l in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let d = derivative_wrt_lambda(|x| Ok(x * x), l, 1, step)?;
        let err = (d - 2.0 * l).abs();
        worst = worst.max(err);
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_g(l),
            fmt_g(d),
            fmt_g(2.0 * l),
            fmt_g(err)
        );
    }
    let mismatch = (worst > 1e-8).then(|| format!("self-test error {worst:.3e} exceeds 1e-8"));
    Ok(Outcome { text: s, mismatch })
}

fn run_verify(g: &GridArgs) -> CliResult<Outcome> {
    let quad = quad_config(&g.common)?;
    let mut gammas = g.gamma.clone();
    let mut lambdas = lambda_values(g)?;
    let mut kts = kt_values(g)?;
    let mut ns = g.n.clone();
    for v in [&mut gammas, &mut lambdas, &mut kts] {
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
    }
    ns.sort_unstable();
    ns.dedup();
    let mut points = Vec::new();
    for &ga in &gammas {
        for &kt in &kts {
            for &n in &ns {
                for &l in &lambdas {
                    points.push((ModelParams::new(ga, l, kt)?, n));
                }
            }
        }
    }
    let cache = GCache::new();
    let settings = OptimizerSettings::default();
    let rows: Vec<crate::Result<String>> = points
        .par_iter()
        .map(|(p, n)| {
            let cs = crate::correlators::correlator_set_cached(*n, p, &quad, &cache)
                .map_err(|e| tag(p, *n, e))?;
            let state = build_state(cs).map_err(|e| tag(p, *n, e))?;
            let check = crate::measures::verify_measurement(&state, &settings)
                .map_err(|e| tag(p, *n, e))?;
            Ok(format!(
                "{},{},{},{},{},{},{:.3e},{},{},{},{}",
                fmt_g(p.gamma()),
                fmt_g(p.lambda()),
                fmt_g(p.kt()),
                n,
                fmt_g(check.closed),
                fmt_g(check.optimized.value),
                check.difference,
                fmt_g(check.optimized.angles.theta),
                fmt_g(check.optimized.angles.phi),
                check.optimized.unique,
                check.agrees
            ))
        })
        .collect();
    let mut text =
        String::from("gamma,lambda,kT,n,closed,optimized,difference,theta,phi,unique,agrees\n");
    let mut failures = 0;
    for r in rows {
        let line = r?;
        if line.ends_with(",false") {
            failures += 1;
        }
        text.push_str(&line);
        text.push('\n');
    }
    let mismatch = (failures > 0).then(|| format!("{failures} point(s) disagree beyond 1e-6"));
    Ok(Outcome { text, mismatch })
}

fn run_ed(a: &EdArgs) -> CliResult<Outcome> {
    let quad = quad_config(&a.common)?;
    let params = ModelParams::new(a.gamma, a.lambda, a.kt)?;
    let specs = a
        .sites
        .iter()
        .map(|&s| FiniteChainSpec::new(s, params))
        .collect::<crate::Result<Vec<_>>>()?;
    for sp in &specs {
        if a.n == 0 || a.n > sp.num_sites() / 2 {
            return Err(Failure::Usage(format!(
                "separation {} must be in [1, {}] for a ring of {}",
                a.n,
                sp.num_sites() / 2,
                sp.num_sites()
            )));
        }
    }
    let limit = correlator_set(a.n, &params, &quad).map_err(|e| tag(&params, a.n, e))?;
    let outcomes = specs
        .par_iter()
        .map(|sp| ChainDiagonalization::new(*sp)?.two_site_state(0, a.n))
        .collect::<Vec<_>>();
    let mut text = String::from(
        "sites,gamma,lambda,kT,n,sz,sxx,syy,szz,limit_sz,limit_sxx,limit_syy,limit_szz,gap,degenerate\n",
    );
    for (sp, out) in specs.iter().zip(outcomes) {
        let out = out?;
        let cs = out.state.correlators();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            sp.num_sites(),
            fmt_g(a.gamma),
            fmt_g(a.lambda),
            fmt_g(a.kt),
            a.n,
            fmt_g(cs.sz),
            fmt_g(cs.sxx),
            fmt_g(cs.syy),
            fmt_g(cs.szz),
            fmt_g(limit.sz),
            fmt_g(limit.sxx),
            fmt_g(limit.syy),
            fmt_g(limit.szz),
            fmt_g(cs.max_abs_diff(&limit)),
            out.degenerate_ground_state
        );
    }
    Ok(Outcome::ok(text))
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Point(a) => &a.common,
        Command::Sweep(a) => &a.grid.common,
        Command::ScanQpt(a) => &a.common,
        Command::VerifyMeasurement(a) => &a.common,
        Command::EdConverge(a) => &a.common,
    }
}

/// Reads `key = value` lines into flag tokens, skipping keys already given
/// on the command line.
fn config_tokens(path: &PathBuf, given: &[OsString]) -> CliResult<Vec<OsString>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::Usage(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(Failure::Usage(
                "config files cannot include other config files".into(),
            ));
        }
        let flag = format!("--{key}");
        let already = given.iter().any(|g| {
            let g = g.to_string_lossy();
            g == flag || g.starts_with(&format!("{flag}="))
        });
        if already {
            continue;
        }
        match value {
            "true" => out.push(flag.into()),
            "false" => {}
            v => {
                out.push(flag.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn parse(args: Vec<OsString>) -> std::result::Result<Cli, clap::Error> {
    let Some(path) = config_path(&args) else {
        return Cli::try_parse_from(args);
    };
    let extra = config_tokens(&path, &args).map_err(|f| {
        clap::Error::raw(
            clap::error::ErrorKind::InvalidValue,
            format!("{}\n", f.message()),
        )
    })?;
    // insert right after the subcommand, the first bare token
    let pos = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|i| i + 2)
        .unwrap_or(args.len());
    let mut merged = args[..pos].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[pos..]);
    Cli::try_parse_from(merged)
}

fn write_output(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Point(a) => run_point(a),
        Command::Sweep(a) => run_sweep(a),
        Command::ScanQpt(a) => run_scan(a),
        Command::VerifyMeasurement(a) => run_verify(a),
        Command::EdConverge(a) => run_ed(a),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let c = common(&cli.command);
    let threads = c.jobs.map(|j| j as usize).unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    let result = pool
        .install(|| dispatch(&cli))
        .and_then(|o| write_output(c.output.as_ref(), &o.text).map(|_| o.mismatch));
    match result {
        Ok(None) => EXIT_OK,
        Ok(Some(msg)) => {
            eprintln!("verification failed: {msg}");
            EXIT_MISMATCH
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}
