//! Command-line interface.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error, 3 strict-mode
//! threshold breach.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_integer::Integer;
use thiserror::Error;

use crate::arith::{is_prime, primes_up_to};
use crate::experiments::{
    census, density_table, emit_csv, format_float, prop22_check, write_aggregates_csv, write_csv,
    write_gnuplot, CountReport, ExperimentError, Prop21Harness, DEFAULT_THETA,
};
use crate::geodesics::{predicted_density, GeodesicError, TraceWeights, TraceWindow};
use crate::quadratic::{pell_decompositions, ClassCache, Discriminant};
use crate::zagier::{lambda_q_euler, ExpSumTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BREACH: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "geotrace",
    version,
    about = "Prime geodesics of the modular surface counted by trace in residue classes"
)]
pub struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub workers: u16,

    /// Class-record cache file (created or extended as needed).
    #[arg(long, global = true, env = "GEOTRACE_CACHE")]
    pub cache: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Psi(x), or Psi(x; p, a) against its predicted main term.
    Count(CountArgs),
    /// Density table over several x, with aggregates and error-exponent fits.
    VerifyTheorem(TheoremArgs),
    /// Coefficient sums over a progression against (X/p^n) mu(b)/b.
    #[command(alias = "prop21")]
    VerifyProp21(Prop21Args),
    /// Short-interval increment of Psi*, directly and via smoothed sums.
    #[command(alias = "prop22")]
    VerifyProp22(Prop22Args),
    /// Compare the exponential-sum and Euler-product coefficients.
    LambdaCheck(LambdaArgs),
    /// Precompute class records for every discriminant up to x.
    Classdata(ClassdataArgs),
    /// Count residues a mod p by the symbol of a^2 - 4.
    Census(CensusArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub p: Option<u64>,
    /// Residue mod p; all residues when omitted.
    #[arg(long, requires = "p")]
    pub a: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    #[arg(long)]
    pub p: u64,
    /// Ascending, comma separated.
    #[arg(long = "x-list", value_delimiter = ',', required = true)]
    pub x_list: Vec<f64>,
    #[arg(long, default_value = "density.csv")]
    pub output: PathBuf,
    /// Two-column log x, log |dev| data file.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
    /// Subconvex exponent recorded with the fit.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    /// Exit 3 when a threshold is breached.
    #[arg(long)]
    pub strict: bool,
    /// Largest acceptable relative deviation at the largest x.
    #[arg(long = "max-rel-dev", default_value_t = 0.10)]
    pub max_rel_dev: f64,
}

#[derive(Debug, Args)]
pub struct Prop21Args {
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub r: u64,
    /// A single q coprime to p.
    #[arg(long, conflicts_with = "q_max")]
    pub q: Option<u64>,
    /// Every q <= q-max coprime to p.
    #[arg(long = "q-max")]
    pub q_max: Option<u64>,
    #[arg(long = "X")]
    pub big_x: f64,
    /// Deviation bound C q^0.6 used by --strict.
    #[arg(long = "bound-const", default_value_t = 20.0)]
    pub bound_const: f64,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct Prop22Args {
    #[arg(long)]
    pub x: f64,
    /// Interval length; defaults to x.
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub r: u64,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    /// Smoothing scale; defaults to u x^(theta - 1/2).
    #[arg(long = "V")]
    pub v: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LambdaArgs {
    #[arg(long = "t-max", default_value_t = 200)]
    pub t_max: u64,
    #[arg(long = "q-max", default_value_t = 300)]
    pub q_max: u64,
}

#[derive(Debug, Args)]
pub struct ClassdataArgs {
    #[arg(long, required_unless_present = "t_max")]
    pub x: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long, conflicts_with = "p_max")]
    pub p: Option<u64>,
    /// Every prime 3 <= p <= p-max.
    #[arg(long = "p-max")]
    pub p_max: Option<u64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Breach(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) => EXIT_COMPUTE,
            CliError::Breach(_) => EXIT_BREACH,
        }
    }
}

impl From<GeodesicError> for CliError {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::BadX(_)
            | GeodesicError::NotOddPrime(_)
            | GeodesicError::NotPlusMinusTwo { .. }
            | GeodesicError::ZeroValuation
            | GeodesicError::ZagierRouteLimit { .. } => CliError::Usage(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::NotOddPrime(_) | ExperimentError::Precondition(_) => {
                CliError::Usage(e.to_string())
            }
            ExperimentError::Geodesic(g) => g.into(),
            other => CliError::Compute(other.to_string()),
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Compute(format!("output: {e}"))
}

type Out<'a> = &'a mut dyn Write;

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers as usize)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(err, "error: worker pool: {e}");
            return EXIT_COMPUTE;
        }
    };
    let (result, out_buf, err_buf) = pool.install(|| {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let r = dispatch(&cli, &mut o, &mut e);
        (r, o, e)
    });
    let _ = out.write_all(&out_buf).and_then(|_| out.flush());
    let _ = err.write_all(&err_buf);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: &Cli, out: Out, err: Out) -> Result<(), CliError> {
    let cache_path = cli.cache.as_deref();
    match &cli.command {
        Command::Count(a) => cmd_count(a, cache_path, out),
        Command::VerifyTheorem(a) => cmd_verify_theorem(a, cache_path, out, err),
        Command::VerifyProp21(a) => cmd_prop21(a, out),
        Command::VerifyProp22(a) => cmd_prop22(a, cache_path, out),
        Command::LambdaCheck(a) => cmd_lambda_check(a, out),
        Command::Classdata(a) => cmd_classdata(a, cache_path, out),
        Command::Census(a) => cmd_census(a, out),
    }
}

fn check_prime(p: u64) -> Result<(), CliError> {
    if p == 2 {
        return Err(CliError::Usage(
            "p = 2 not covered: modulus must be an odd prime (p >= 3)".into(),
        ));
    }
    if p < 3 || !is_prime(p) {
        return Err(CliError::Usage(format!("p = {p} is not a prime >= 3")));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<(), CliError> {
    if !(x.is_finite() && x >= 1.0) {
        return Err(CliError::Usage(format!(
            "x must be a finite number >= 1, got {x}"
        )));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<(), CliError> {
    if !(0.0..=0.5).contains(&theta) {
        return Err(CliError::Usage(format!(
            "theta must lie in [0, 1/2], got {theta}"
        )));
    }
    Ok(())
}

fn open_cache(path: Option<&Path>) -> Result<ClassCache, CliError> {
    match path {
        Some(p) => ClassCache::open(p).map_err(compute),
        None => Ok(ClassCache::in_memory()),
    }
}

fn class_weights(cache: &ClassCache, x: f64) -> Result<TraceWeights, CliError> {
    let window = TraceWindow::new(x)?;
    let weights = TraceWeights::class_route(window.t_max(), cache)?;
    cache.persist().map_err(compute)?;
    Ok(weights)
}

fn cmd_count(args: &CountArgs, cache_path: Option<&Path>, out: Out) -> Result<(), CliError> {
    check_x(args.x)?;
    if let Some(p) = args.p {
        check_prime(p)?;
    }
    let cache = open_cache(cache_path)?;
    let weights = class_weights(&cache, args.x)?;
    let window = TraceWindow::new(args.x)?;
    match args.p {
        None => {
            let psi = weights.psi(&window)?.to_f64();
            writeln!(out, "x,psi").map_err(io_error)?;
            writeln!(out, "{},{}", format_float(args.x), format_float(psi)).map_err(io_error)?;
        }
        Some(p) => {
            let residues: Vec<u64> = match args.a {
                Some(a) => vec![a % p],
                None => (0..p).collect(),
            };
            let mut rows = Vec::new();
            for a in residues {
                let pred = predicted_density::<crate::Rational>(p, a)?;
                let psi = weights.psi_ap(&window, p, a)?.to_f64();
                rows.push(CountReport::new(
                    args.x,
                    p,
                    pred.a,
                    pred.symbol,
                    psi,
                    num_traits::ToPrimitive::to_f64(&pred.density).unwrap_or(f64::NAN),
                ));
            }
            emit_csv(&rows, &mut *out).map_err(io_error)?;
        }
    }
    Ok(())
}

/// `density.csv` -> `density.aggregates.csv`.
pub fn aggregates_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "density".into());
    output.with_file_name(format!("{stem}.aggregates.csv"))
}

fn cmd_verify_theorem(
    args: &TheoremArgs,
    cache_path: Option<&Path>,
    out: Out,
    err: Out,
) -> Result<(), CliError> {
    check_prime(args.p)?;
    check_theta(args.theta)?;
    if args.x_list.len() < 2 {
        return Err(CliError::Usage("--x-list needs at least two values".into()));
    }
    for &x in &args.x_list {
        check_x(x)?;
    }
    let x_max = *args.x_list.last().expect("nonempty");
    let cache = open_cache(cache_path)?;
    let weights = class_weights(&cache, x_max)?;
    let table = density_table(&args.x_list, args.p, &weights)?;
    write_csv(&table.reports, &args.output)?;
    let agg_path = aggregates_path(&args.output);
    write_aggregates_csv(&table.aggregates, &agg_path)?;
    if let Some(g) = &args.gnuplot {
        write_gnuplot(&table.reports, g)?;
    }

    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io_error);
    w(
        out,
        format!("wrote {} and {}", args.output.display(), agg_path.display()),
    )?;
    let mut breaches = Vec::new();
    for r in table.reports.iter().filter(|r| r.x == x_max) {
        let fit = match r.fitted_exponent {
            Some(s) => format!("{s:.3}"),
            None => "-".into(),
        };
        w(
            out,
            format!(
                "p={} a={} symbol={:+} rel_dev={} fitted_exponent={fit}",
                r.p,
                r.a,
                r.symbol,
                format_float(r.rel_dev)
            ),
        )?;
        if r.rel_dev > args.max_rel_dev {
            breaches.push(format!("a={} rel_dev={}", r.a, format_float(r.rel_dev)));
        }
    }
    for g in table.aggregates.iter().filter(|g| g.x == x_max) {
        w(
            out,
            format!(
                "p={} symbol={:+} members={} rel_dev={}",
                g.p,
                g.symbol,
                g.members,
                format_float(g.rel_dev)
            ),
        )?;
        if g.members > 0 && g.rel_dev > args.max_rel_dev {
            breaches.push(format!(
                "symbol={:+} rel_dev={}",
                g.symbol,
                format_float(g.rel_dev)
            ));
        }
    }
    w(
        out,
        format!(
            "reference error exponent 3/4 + theta/2 = {:.4}",
            0.75 + args.theta / 2.0
        ),
    )?;
    if !breaches.is_empty() {
        let msg = format!(
            "relative deviation above {} at x = {}: {}",
            args.max_rel_dev,
            format_float(x_max),
            breaches.join(", ")
        );
        if args.strict {
            return Err(CliError::Breach(msg));
        }
        writeln!(err, "warning: {msg}").map_err(io_error)?;
    }
    Ok(())
}

fn cmd_prop21(args: &Prop21Args, out: Out) -> Result<(), CliError> {
    check_prime(args.p)?;
    let qs: Vec<u64> = match (args.q, args.q_max) {
        (Some(q), _) => vec![q],
        (None, Some(m)) => (1..=m).filter(|q| q.gcd(&args.p) == 1).collect(),
        (None, None) => return Err(CliError::Usage("give --q or --q-max".into())),
    };
    let harness = Prop21Harness::new(args.p, args.n, args.r, args.big_x)?;
    writeln!(out, "q,b,c,lhs,main,deviation,deviation_over_q06").map_err(io_error)?;
    let mut worst = 0.0f64;
    let mut breaches = Vec::new();
    for q in qs {
        let rep = harness.check(q)?;
        let scaled = rep.deviation.abs() / (q as f64).powf(0.6);
        worst = worst.max(scaled);
        if scaled > args.bound_const {
            breaches.push(q.to_string());
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rep.q,
            rep.b,
            rep.c,
            rep.lhs,
            format_float(rep.main),
            format_float(rep.deviation),
            format_float(scaled)
        )
        .map_err(io_error)?;
    }
    writeln!(
        out,
        "# empirical constant max |deviation|/q^0.6 = {}",
        format_float(worst)
    )
    .map_err(io_error)?;
    if args.strict && !breaches.is_empty() {
        return Err(CliError::Breach(format!(
            "|deviation| > {} q^0.6 for q in {}",
            args.bound_const,
            breaches.join(",")
        )));
    }
    Ok(())
}

fn cmd_prop22(args: &Prop22Args, cache_path: Option<&Path>, out: Out) -> Result<(), CliError> {
    check_prime(args.p)?;
    check_theta(args.theta)?;
    check_x(args.x)?;
    let u = args.u.unwrap_or(args.x);
    let cache = open_cache(cache_path)?;
    let weights = class_weights(&cache, args.x + u)?;
    let rep = prop22_check(
        args.x, u, args.p, args.n, args.r, args.theta, args.v, &weights,
    )?;
    writeln!(out, "x,u,p,n,r,V,target,direct,smoothed,traces").map_err(io_error)?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        format_float(rep.x),
        format_float(rep.u),
        rep.p,
        rep.n,
        rep.r,
        format_float(rep.v),
        format_float(rep.target),
        format_float(rep.direct),
        format_float(rep.smoothed),
        rep.traces
    )
    .map_err(io_error)?;
    Ok(())
}

fn cmd_lambda_check(args: &LambdaArgs, out: Out) -> Result<(), CliError> {
    if args.t_max < 3 || args.q_max < 1 {
        return Err(CliError::Usage("need --t-max >= 3 and --q-max >= 1".into()));
    }
    let table = ExpSumTable::new(args.q_max);
    let mut mismatches = Vec::new();
    for t in 3..=args.t_max {
        let delta = Discriminant::of_trace(t).map_err(compute)?;
        for q in 1..=args.q_max {
            let e = table.lambda(q, t).map_err(compute)?;
            let f = lambda_q_euler(q, &delta);
            if e != f {
                mismatches.push((t, q, e, f));
            }
        }
    }
    let pairs = (args.t_max - 2) * args.q_max;
    writeln!(
        out,
        "compared {pairs} (t, q) pairs, {} mismatches",
        mismatches.len()
    )
    .map_err(io_error)?;
    for (t, q, e, f) in mismatches.iter().take(20) {
        writeln!(out, "t={t} q={q} expsum={e} euler={f}").map_err(io_error)?;
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Compute(format!(
            "{} coefficient mismatches",
            mismatches.len()
        )))
    }
}

fn cmd_classdata(
    args: &ClassdataArgs,
    cache_path: Option<&Path>,
    out: Out,
) -> Result<(), CliError> {
    let Some(path) = cache_path else {
        return Err(CliError::Usage(
            "classdata needs --cache or GEOTRACE_CACHE".into(),
        ));
    };
    let t_max = match (args.t_max, args.x) {
        (Some(t), _) => t,
        (None, Some(x)) => {
            check_x(x)?;
            TraceWindow::new(x)?.t_max()
        }
        (None, None) => unreachable!("clap requires one of --x, --t-max"),
    };
    let cache = open_cache(Some(path))?;
    let before = cache.len();
    let mut ds = Vec::new();
    for t in 3..=t_max {
        ds.extend(
            pell_decompositions(t)
                .map_err(compute)?
                .into_iter()
                .map(|pd| pd.d),
        );
    }
    let fresh = cache.ensure(ds).map_err(compute)?;
    let written = cache.persist().map_err(compute)?;
    writeln!(
        out,
        "traces 3..={t_max}: {} records ({before} loaded, {fresh} computed, {written} written to {})",
        cache.len(),
        path.display()
    )
    .map_err(io_error)?;
    Ok(())
}

fn cmd_census(args: &CensusArgs, out: Out) -> Result<(), CliError> {
    let primes: Vec<u64> = match (args.p, args.p_max) {
        (Some(p), _) => {
            check_prime(p)?;
            vec![p]
        }
        (None, Some(m)) => primes_up_to(m).into_iter().filter(|&p| p >= 3).collect(),
        (None, None) => return Err(CliError::Usage("give --p or --p-max".into())),
    };
    writeln!(out, "p,count_plus,count_minus,count_zero,closed_form").map_err(io_error)?;
    let mut bad = 0;
    for p in primes {
        let c = census(p)?;
        let ok = (c.count_plus, c.count_minus, c.count_zero) == ((p - 3) / 2, (p - 1) / 2, 2);
        if !ok {
            bad += 1;
        }
        writeln!(
            out,
            "{},{},{},{},{}",
            p,
            c.count_plus,
            c.count_minus,
            c.count_zero,
            if ok { "match" } else { "MISMATCH" }
        )
        .map_err(io_error)?;
    }
    if bad > 0 {
        return Err(CliError::Compute(format!(
            "{bad} primes disagree with the closed forms"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("geotrace").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn rejects_p_two() {
        let (code, _, err) = run_capture(&["count", "--x", "1e6", "--p", "2", "--a", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("p = 2 not covered"), "{err}");
        let (code, _, _) = run_capture(&["count", "--x", "1e3", "--p", "9"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_capture(&["count"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["count", "--x", "abc"]).0, EXIT_USAGE);
        assert_eq!(
            run_capture(&["count", "--x", "1e3", "--workers", "0"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_capture(&["bogus"]).0, EXIT_USAGE);
        let (code, _, _) = run_capture(&[
            "verify-theorem",
            "--p",
            "5",
            "--x-list",
            "1e3,1e4",
            "--theta",
            "0.7",
        ]);
        assert_eq!(code, EXIT_USAGE);
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("verify-theorem"));
    }

    #[test]
    fn count_outputs() {
        let (code, out, _) = run_capture(&["count", "--x", "10"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, "x,psi\n1.00000000000e1,1.92484730024e0\n");
        let (code, out, _) = run_capture(&["count", "--x", "1e4", "--p", "5", "--a", "2"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("1.00000000000e4,5,2,0,"));
    }

    #[test]
    fn census_and_lambda_commands() {
        let (code, out, _) = run_capture(&["census", "--p-max", "50"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("\n7,2,3,2,match\n"));
        assert!(!out.contains("MISMATCH"));
        let (code, out, _) = run_capture(&["lambda-check", "--t-max", "30", "--q-max", "40"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.starts_with("compared 1120 (t, q) pairs, 0 mismatches"));
    }

    #[test]
    fn prop_commands() {
        let (code, out, _) =
            run_capture(&["prop21", "--p", "5", "--n", "1", "--q", "30", "--X", "1e4"]);
        assert_eq!(code, EXIT_USAGE, "{out}");
        let (code, out, _) = run_capture(&["prop21", "--p", "5", "--q", "6", "--X", "1e4"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.lines().nth(1).unwrap().starts_with("6,6,1,"));
        let (code, out, _) = run_capture(&["verify-prop22", "--x", "1e4", "--p", "3"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn theorem_strict_breach_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("d.csv");
        let cache = dir.path().join("records.csv");
        let args = |extra: &[&str]| {
            let mut v = vec![
                "verify-theorem",
                "--p",
                "5",
                "--x-list",
                "1e3,1e4",
                "--output",
                csv.to_str().unwrap(),
                "--cache",
                cache.to_str().unwrap(),
            ];
            v.extend_from_slice(extra);
            v.into_iter().map(String::from).collect::<Vec<_>>()
        };
        let a: Vec<String> = args(&["--strict", "--max-rel-dev", "1e-9"]);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let (code, _, err) = run_capture(&a);
        assert_eq!(code, EXIT_BREACH, "{err}");
        assert!(cache.exists());
        let first = std::fs::read(&csv).unwrap();
        let a: Vec<String> = args(&[]);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let (code, _, _) = run_capture(&a);
        assert_eq!(code, EXIT_OK);
        assert_eq!(std::fs::read(&csv).unwrap(), first);
        assert!(dir.path().join("d.aggregates.csv").exists());
    }

    #[test]
    fn aggregates_path_naming() {
        assert_eq!(
            aggregates_path(Path::new("out/t.csv")),
            PathBuf::from("out/t.aggregates.csv")
        );
        assert_eq!(
            aggregates_path(Path::new("t")),
            PathBuf::from("t.aggregates.csv")
        );
    }
}
