//! Empirical checks of the counting asymptotics and CSV/gnuplot emission.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arith::{is_prime, kronecker, mobius, squarefree_decompose};
use crate::geodesics::{
    aggregate_density, predicted_density, symbol_class_size, GeodesicError, TraceWeights,
    TraceWindow,
};
use crate::quadratic::{ClassCache, Discriminant, QuadraticError};
use crate::scalar::{CompensatedSum, ExactSum};
use crate::zagier::{lambda_local, lambda_v_p, LocalFactorSpec, ZagierError};

/// Default subconvex exponent.
pub const DEFAULT_THETA: f64 = 1.0 / 6.0;

pub const COUNT_HEADER: &str = "x,p,a,symbol,psi,predicted,abs_dev,rel_dev";
pub const AGGREGATE_HEADER: &str = "x,p,symbol,psi,predicted,abs_dev,rel_dev";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0} is not an odd prime (modulus must be a prime p >= 3)")]
    NotOddPrime(u64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("fit is undefined: {0}")]
    Degenerate(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Zagier(#[from] ZagierError),
    #[error(transparent)]
    Quadratic(#[from] QuadraticError),
}

fn check_odd_prime(p: u64) -> Result<(), ExperimentError> {
    if p < 3 || !is_prime(p) {
        return Err(ExperimentError::NotOddPrime(p));
    }
    Ok(())
}

fn ratio_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn relative(abs_dev: f64, predicted: f64) -> f64 {
    if predicted > 0.0 {
        abs_dev / predicted
    } else if abs_dev == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Residues a mod p counted by the symbol of a^2 - 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidueClassCensus {
    pub p: u64,
    pub count_plus: u64,
    pub count_minus: u64,
    pub count_zero: u64,
}

/// Enumerates a = 0..p-1.
pub fn census(p: u64) -> Result<ResidueClassCensus, ExperimentError> {
    check_odd_prime(p)?;
    let mut c = ResidueClassCensus {
        p,
        count_plus: 0,
        count_minus: 0,
        count_zero: 0,
    };
    for a in 0..p as i64 {
        match kronecker(a * a - 4, p as i64) {
            1 => c.count_plus += 1,
            -1 => c.count_minus += 1,
            _ => c.count_zero += 1,
        }
    }
    Ok(c)
}

/// One (x, p, a) cell of a density table.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub x: f64,
    pub p: u64,
    pub a: u64,
    pub symbol: i32,
    pub psi_value: f64,
    pub predicted: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub fitted_exponent: Option<f64>,
}

impl CountReport {
    pub fn new(x: f64, p: u64, a: u64, symbol: i32, psi_value: f64, density: f64) -> Self {
        let predicted = density * x;
        let abs_dev = (psi_value - predicted).abs();
        CountReport {
            x,
            p,
            a,
            symbol,
            psi_value,
            predicted,
            abs_dev,
            rel_dev: relative(abs_dev, predicted),
            fitted_exponent: None,
        }
    }

    /// psi - predicted.
    pub fn signed_dev(&self) -> f64 {
        self.psi_value - self.predicted
    }
}

/// All residues of one symbol class at one x.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub x: f64,
    pub p: u64,
    pub symbol: i32,
    pub members: u64,
    pub psi_value: f64,
    pub predicted: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    /// Ordered by (x, a).
    pub reports: Vec<CountReport>,
    /// Ordered by (x, symbol) with symbols +1, -1, 0.
    pub aggregates: Vec<AggregateReport>,
}

impl DensityTable {
    pub fn at(&self, x: f64) -> impl Iterator<Item = &CountReport> {
        self.reports.iter().filter(move |r| r.x == x)
    }

    pub fn aggregates_at(&self, x: f64) -> impl Iterator<Item = &AggregateReport> {
        self.aggregates.iter().filter(move |r| r.x == x)
    }
}

fn check_ascending(x_values: &[f64]) -> Result<(), ExperimentError> {
    if x_values.is_empty() {
        return Err(ExperimentError::Precondition("empty x list".into()));
    }
    if x_values
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(ExperimentError::Precondition(
            "x values must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Psi(x; p, a) against density(p, a) x for every x and residue a, plus the
/// three symbol-class aggregates per x. `weights` must cover the largest x.
pub fn density_table(
    x_values: &[f64],
    p: u64,
    weights: &TraceWeights,
) -> Result<DensityTable, ExperimentError> {
    check_odd_prime(p)?;
    check_ascending(x_values)?;
    let predictions: Vec<_> = (0..p)
        .map(|a| predicted_density::<BigRational>(p, a))
        .collect::<Result<_, _>>()?;
    let mut reports = Vec::with_capacity(x_values.len() * p as usize);
    let mut aggregates = Vec::with_capacity(3 * x_values.len());
    for &x in x_values {
        let window = TraceWindow::new(x)?;
        let mut class_sums = [ExactSum::ZERO; 3];
        for pred in &predictions {
            let value = weights.psi_ap(&window, p, pred.a)?;
            class_sums[symbol_slot(pred.symbol)] += value;
            reports.push(CountReport::new(
                x,
                p,
                pred.a,
                pred.symbol,
                value.to_f64(),
                ratio_to_f64(&pred.density),
            ));
        }
        for symbol in [1, -1, 0] {
            let psi_value = class_sums[symbol_slot(symbol)].to_f64();
            let predicted = ratio_to_f64(&aggregate_density::<BigRational>(p, symbol)?) * x;
            let abs_dev = (psi_value - predicted).abs();
            aggregates.push(AggregateReport {
                x,
                p,
                symbol,
                members: symbol_class_size(p, symbol),
                psi_value,
                predicted,
                abs_dev,
                rel_dev: relative(abs_dev, predicted),
            });
        }
    }
    for a in 0..p {
        let rows: Vec<CountReport> = reports.iter().filter(|r| r.a == a).cloned().collect();
        if let Ok(fit) = error_exponent_fit(&rows) {
            for r in reports.iter_mut().filter(|r| r.a == a) {
                r.fitted_exponent = Some(fit.slope);
            }
        }
    }
    Ok(DensityTable {
        reports,
        aggregates,
    })
}

fn symbol_slot(symbol: i32) -> usize {
    match symbol {
        1 => 0,
        -1 => 1,
        _ => 2,
    }
}

/// [`density_table`] with class-route weights built for the largest x.
pub fn density_table_from_cache(
    x_values: &[f64],
    p: u64,
    cache: &ClassCache,
) -> Result<DensityTable, ExperimentError> {
    check_ascending(x_values)?;
    let window = TraceWindow::new(*x_values.last().expect("nonempty"))?;
    let weights = TraceWeights::class_route(window.t_max(), cache)?;
    density_table(x_values, p, &weights)
}

/// Sum of lambda_q(t^2-4) over 3 <= t <= X, t = r mod p^n, against
/// (X/p^n) mu(b)/b with q = b c^2.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop21Report {
    pub p: u64,
    pub n: u32,
    pub r: u64,
    pub q: u64,
    pub big_x: f64,
    pub b: u64,
    pub c: u64,
    pub lhs: i64,
    pub main: f64,
    pub deviation: f64,
}

/// Discriminants of the traces in one progression, reused across q.
#[derive(Debug, Clone)]
pub struct Prop21Harness {
    p: u64,
    n: u32,
    r: u64,
    big_x: f64,
    discriminants: Vec<Discriminant>,
}

impl Prop21Harness {
    pub fn new(p: u64, n: u32, r: u64, big_x: f64) -> Result<Self, ExperimentError> {
        check_odd_prime(p)?;
        if n == 0 {
            return Err(ExperimentError::Precondition("n must be >= 1".into()));
        }
        if !(big_x.is_finite() && big_x >= 3.0) {
            return Err(ExperimentError::Precondition(format!(
                "X = {big_x} must be >= 3"
            )));
        }
        let modulus = p.pow(n);
        let r = r % modulus;
        let discriminants = (3..=big_x.floor() as u64)
            .filter(|t| t % modulus == r)
            .map(Discriminant::of_trace)
            .collect::<Result<_, _>>()?;
        Ok(Prop21Harness {
            p,
            n,
            r,
            big_x,
            discriminants,
        })
    }

    pub fn trace_count(&self) -> usize {
        self.discriminants.len()
    }

    pub fn check(&self, q: u64) -> Result<Prop21Report, ExperimentError> {
        if q == 0 || q.gcd(&self.p) != 1 {
            return Err(ExperimentError::Precondition(format!(
                "q = {q} must be positive and coprime to {}",
                self.p
            )));
        }
        let q_factors = crate::arith::factorize(q);
        let lhs: i64 = self
            .discriminants
            .iter()
            .map(|delta| {
                q_factors
                    .factors()
                    .iter()
                    .map(|&(l, m)| lambda_local(&LocalFactorSpec::of(delta, l), m))
                    .product::<i64>()
            })
            .sum();
        let (b, c) = squarefree_decompose(q);
        let main = self.big_x / self.p.pow(self.n) as f64 * mobius(b) as f64 / b as f64;
        Ok(Prop21Report {
            p: self.p,
            n: self.n,
            r: self.r,
            q,
            big_x: self.big_x,
            b,
            c,
            lhs,
            main,
            deviation: lhs as f64 - main,
        })
    }
}

pub fn prop21_check(
    p: u64,
    n: u32,
    r: u64,
    q: u64,
    big_x: f64,
) -> Result<Prop21Report, ExperimentError> {
    Prop21Harness::new(p, n, r, big_x)?.check(q)
}

/// Short-interval increment of Psi* computed directly and through the
/// smoothed sums Lambda_V^p.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop22Report {
    pub x: f64,
    pub u: f64,
    pub p: u64,
    pub n: u32,
    pub r: u64,
    pub theta: f64,
    pub v: f64,
    /// u / p^n.
    pub target: f64,
    pub direct: f64,
    pub smoothed: f64,
    pub traces: usize,
}

/// V = u x^(theta - 1/2).
pub fn smoothing_scale(x: f64, u: f64, theta: f64) -> f64 {
    u * x.powf(theta - 0.5)
}

/// Requires sqrt(x) <= u <= x; `v` overrides the default scale. The direct
/// route divides the weights by Euler factors, so `weights` must cover x + u.
#[allow(clippy::too_many_arguments)]
pub fn prop22_check(
    x: f64,
    u: f64,
    p: u64,
    n: u32,
    r: u64,
    theta: f64,
    v: Option<f64>,
    weights: &TraceWeights,
) -> Result<Prop22Report, ExperimentError> {
    check_odd_prime(p)?;
    if !(x >= 1.0 && u >= x.sqrt() && u <= x) {
        return Err(ExperimentError::Precondition(format!(
            "need sqrt(x) <= u <= x, got x = {x}, u = {u}"
        )));
    }
    if n == 0 {
        return Err(ExperimentError::Precondition("n must be >= 1".into()));
    }
    let v = v.unwrap_or_else(|| smoothing_scale(x, u, theta));
    let modulus = p.pow(n);
    let r = r % modulus;
    let lower = TraceWindow::new(x)?;
    let upper = TraceWindow::new(x + u)?;
    let direct =
        weights.psi_star(&upper, p, n, r)?.to_f64() - weights.psi_star(&lower, p, n, r)?.to_f64();
    let traces: Vec<u64> = (lower.t_max() + 1..=upper.t_max())
        .filter(|t| t % modulus == r)
        .collect();
    let mut smoothed = CompensatedSum::<f64>::new();
    for &t in &traces {
        let delta = Discriminant::of_trace(t)?;
        smoothed.add(2.0 * t as f64 * lambda_v_p(&delta, p, v)?);
    }
    Ok(Prop22Report {
        x,
        u,
        p,
        n,
        r,
        theta,
        v,
        target: u / modulus as f64,
        direct,
        smoothed: smoothed.value(),
        traces: traces.len(),
    })
}

/// Least-squares line log|dev| = slope log x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

/// Rows with zero deviation are skipped.
pub fn error_exponent_fit(reports: &[CountReport]) -> Result<ExponentFit, ExperimentError> {
    let Some(first) = reports.first() else {
        return Err(ExperimentError::Precondition("no reports".into()));
    };
    if reports.iter().any(|r| r.p != first.p || r.a != first.a) {
        return Err(ExperimentError::Precondition(
            "reports mix (p, a) cells".into(),
        ));
    }
    let mut xs: Vec<f64> = reports.iter().map(|r| r.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 || xs[xs.len() - 1] < 100.0 * xs[0] {
        return Err(ExperimentError::Precondition(
            "need at least 4 distinct x spanning 2 decades".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.abs_dev > 0.0)
        .map(|r| (r.x.ln(), r.abs_dev.ln()))
        .collect();
    let distinct = {
        let mut lx: Vec<f64> = pts.iter().map(|p| p.0).collect();
        lx.sort_by(f64::total_cmp);
        lx.dedup();
        lx.len()
    };
    if distinct < 2 {
        return Err(ExperimentError::Degenerate(
            "fewer than two nonzero deviations".into(),
        ));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

/// 12 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.11e}")
}

fn sorted_reports(reports: &[CountReport]) -> Vec<&CountReport> {
    let mut rows: Vec<&CountReport> = reports.iter().collect();
    rows.sort_by(|l, r| l.x.total_cmp(&r.x).then(l.p.cmp(&r.p)).then(l.a.cmp(&r.a)));
    rows
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Rows sorted by (x, p, a).
pub fn emit_csv<W: Write>(reports: &[CountReport], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(COUNT_HEADER.split(',')).map_err(csv_io)?;
    for r in sorted_reports(reports) {
        w.write_record([
            format_float(r.x),
            r.p.to_string(),
            r.a.to_string(),
            r.symbol.to_string(),
            format_float(r.psi_value),
            format_float(r.predicted),
            format_float(r.abs_dev),
            format_float(r.rel_dev),
        ])
        .map_err(csv_io)?;
    }
    w.flush()
}

pub fn emit_aggregates_csv<W: Write>(aggregates: &[AggregateReport], out: W) -> io::Result<()> {
    let mut rows: Vec<&AggregateReport> = aggregates.iter().collect();
    rows.sort_by(|l, r| {
        l.x.total_cmp(&r.x)
            .then(l.p.cmp(&r.p))
            .then(symbol_slot(l.symbol).cmp(&symbol_slot(r.symbol)))
    });
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(AGGREGATE_HEADER.split(','))
        .map_err(csv_io)?;
    for r in rows {
        w.write_record([
            format_float(r.x),
            r.p.to_string(),
            r.symbol.to_string(),
            format_float(r.psi_value),
            format_float(r.predicted),
            format_float(r.abs_dev),
            format_float(r.rel_dev),
        ])
        .map_err(csv_io)?;
    }
    w.flush()
}

/// Two columns "log x, log |dev|", one blank-line separated block per (p, a).
pub fn emit_gnuplot<W: Write>(reports: &[CountReport], mut out: W) -> io::Result<()> {
    let rows = sorted_reports(reports);
    let mut cells: Vec<(u64, u64)> = rows.iter().map(|r| (r.p, r.a)).collect();
    cells.sort_unstable();
    cells.dedup();
    for (i, &(p, a)) in cells.iter().enumerate() {
        if i > 0 {
            writeln!(out, "\n")?;
        }
        writeln!(out, "# p={p} a={a}")?;
        for r in rows
            .iter()
            .filter(|r| r.p == p && r.a == a && r.abs_dev > 0.0)
        {
            writeln!(
                out,
                "{} {}",
                format_float(r.x.ln()),
                format_float(r.abs_dev.ln())
            )?;
        }
    }
    out.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(reports: &[CountReport], path: &Path) -> Result<(), ExperimentError> {
    emit_csv(reports, create(path)?).map_err(io_at(path))
}

pub fn write_aggregates_csv(
    aggregates: &[AggregateReport],
    path: &Path,
) -> Result<(), ExperimentError> {
    emit_aggregates_csv(aggregates, create(path)?).map_err(io_at(path))
}

pub fn write_gnuplot(reports: &[CountReport], path: &Path) -> Result<(), ExperimentError> {
    emit_gnuplot(reports, create(path)?).map_err(io_at(path))
}

/// Reads what [`emit_csv`] writes; `fitted_exponent` is not stored.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<CountReport>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| ExperimentError::Csv {
            line,
            message: e.to_string(),
        })?;
        if i == 0 {
            if rec.iter().collect::<Vec<_>>().join(",") != COUNT_HEADER {
                return Err(ExperimentError::Csv {
                    line,
                    message: format!("expected header {COUNT_HEADER:?}"),
                });
            }
            continue;
        }
        if rec.len() != 8 {
            return Err(ExperimentError::Csv {
                line,
                message: format!("expected 8 fields, found {}", rec.len()),
            });
        }
        let bad = |field: &str| ExperimentError::Csv {
            line,
            message: format!("malformed field {field:?}"),
        };
        let f = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(&rec[k]));
        let u = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(&rec[k]));
        rows.push(CountReport {
            x: f(0)?,
            p: u(1)?,
            a: u(2)?,
            symbol: rec[3].parse::<i32>().map_err(|_| bad(&rec[3]))?,
            psi_value: f(4)?,
            predicted: f(5)?,
            abs_dev: f(6)?,
            rel_dev: f(7)?,
            fitted_exponent: None,
        });
    }
    Ok(rows)
}
