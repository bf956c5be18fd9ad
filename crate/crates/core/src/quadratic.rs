//! Real quadratic discriminants: decomposition into fundamental part and
//! conductor, fundamental solutions of t^2 - d u^2 = 4, regulators, class
//! numbers of primitive indefinite forms, and the persistent class-record
//! cache.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{factorize, isqrt, kronecker, small_primes, sqrt_mod_prime, Factorization};

/// Largest discriminant accepted by the reduced-form enumeration (the prime
/// table must cover sqrt(d/4)).
pub const MAX_CLASS_DISCRIMINANT: u64 = 4_000_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadraticError {
    #[error("{0} is not a positive discriminant (must be > 0 and congruent to 0 or 1 mod 4)")]
    NotDiscriminant(u64),
    #[error("{0} is a perfect square")]
    Square(u64),
    #[error("trace {0} is below 3")]
    TraceTooSmall(u64),
    #[error("discriminant {0} exceeds the supported range for class numbers")]
    TooLarge(u64),
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("class cache I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("class cache format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("class cache has a duplicate record for d = {d} at line {line}")]
    Duplicate { d: u64, line: usize },
}

/// A positive non-square discriminant `delta = D * l^2` with `D` fundamental.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discriminant {
    delta: u64,
    fundamental: u64,
    conductor: u64,
    conductor_factors: Factorization,
}

impl Discriminant {
    pub fn new(delta: u64) -> Result<Self, QuadraticError> {
        if delta == 0 || delta % 4 == 2 || delta % 4 == 3 {
            return Err(QuadraticError::NotDiscriminant(delta));
        }
        Self::from_factorization(&factorize(delta))
    }

    /// Decompose a discriminant whose factorization is already known.
    pub fn from_factorization(f: &Factorization) -> Result<Self, QuadraticError> {
        let delta = f.n();
        if delta % 4 == 2 || delta % 4 == 3 {
            return Err(QuadraticError::NotDiscriminant(delta));
        }
        let mut squarefree = 1u64;
        let mut half_powers = Vec::with_capacity(f.factors().len());
        for &(p, e) in f.factors() {
            if e % 2 == 1 {
                squarefree *= p;
            }
            half_powers.push((p, e / 2));
        }
        if squarefree == 1 {
            return Err(QuadraticError::Square(delta));
        }
        let (fundamental, conductor_factors) = if squarefree % 4 == 1 {
            (squarefree, Factorization::from_prime_powers(half_powers))
        } else {
            // delta = s * m^2 with s = 2, 3 mod 4 forces m even.
            for pe in half_powers.iter_mut() {
                if pe.0 == 2 {
                    debug_assert!(pe.1 >= 1);
                    pe.1 -= 1;
                }
            }
            (
                4 * squarefree,
                Factorization::from_prime_powers(half_powers),
            )
        };
        Ok(Discriminant {
            delta,
            fundamental,
            conductor: conductor_factors.n(),
            conductor_factors,
        })
    }

    /// The discriminant t^2 - 4 of a hyperbolic trace, factored as (t-2)(t+2).
    pub fn of_trace(t: u64) -> Result<Self, QuadraticError> {
        if t < 3 {
            return Err(QuadraticError::TraceTooSmall(t));
        }
        let f = factorize(t - 2).mul(&factorize(t + 2));
        Self::from_factorization(&f)
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn fundamental(&self) -> u64 {
        self.fundamental
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn conductor_factorization(&self) -> &Factorization {
        &self.conductor_factors
    }

    /// The primitive character chi_D.
    pub fn chi(&self, n: i64) -> i32 {
        kronecker(self.fundamental as i64, n)
    }

    /// The (possibly imprimitive) character chi_delta.
    pub fn chi_delta(&self, n: i64) -> i32 {
        kronecker(self.delta as i64, n)
    }

    /// `D * (l/u)^2` for a divisor u of the conductor.
    pub fn divided_by_square(&self, u: u64) -> Discriminant {
        assert!(
            u >= 1 && self.conductor.is_multiple_of(u),
            "{u} does not divide the conductor {}",
            self.conductor
        );
        let factors = self
            .conductor_factors
            .factors()
            .iter()
            .map(|&(p, e)| (p, e - crate::arith::valuation(p, u as i64)))
            .collect();
        let conductor_factors = Factorization::from_prime_powers(factors);
        let conductor = conductor_factors.n();
        Discriminant {
            delta: self.fundamental * conductor * conductor,
            fundamental: self.fundamental,
            conductor,
            conductor_factors,
        }
    }

    /// All (u, delta / u^2) with u | l, in increasing u.
    pub fn sub_discriminants(&self) -> Vec<(u64, Discriminant)> {
        self.conductor_factors
            .divisors()
            .into_iter()
            .map(|u| (u, self.divided_by_square(u)))
            .collect()
    }
}

pub fn decompose_discriminant(delta: u64) -> Result<Discriminant, QuadraticError> {
    Discriminant::new(delta)
}

fn check_discriminant(d: u64) -> Result<(), QuadraticError> {
    if d == 0 || d % 4 == 2 || d % 4 == 3 {
        return Err(QuadraticError::NotDiscriminant(d));
    }
    if crate::arith::is_square(d) {
        return Err(QuadraticError::Square(d));
    }
    Ok(())
}

/// Fundamental solution of t^2 - d u^2 = 4 with t, u > 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PellSolution {
    pub d: u64,
    pub t: BigUint,
    pub u: BigUint,
}

impl PellSolution {
    /// log((t + u sqrt d) / 2) from the exact solution.
    pub fn log_epsilon(&self) -> f64 {
        let shift = self.t.bits().saturating_sub(64);
        let top_t = (&self.t >> shift).to_f64().expect("fits");
        let top_u = (&self.u >> shift).to_f64().expect("fits");
        let ratio = top_u / top_t * (self.d as f64).sqrt();
        top_t.ln() + shift as f64 * std::f64::consts::LN_2 + (1.0 + ratio).ln()
            - std::f64::consts::LN_2
    }
}

/// One step of the continued fraction of (P + sqrt d)/Q.
#[inline]
fn cf_step(d: u64, isq: u64, p: u64, q: u64) -> (u64, u64, u64) {
    let a = (p + isq) / q;
    let p_next = a * q - p;
    let q_next = (d - p_next * p_next) / q;
    (a, p_next, q_next)
}

/// Fundamental solution of the Pell equation t^2 - d u^2 = 4, computed from
/// the continued fraction period of (d mod 2 + sqrt d)/2 with exact big
/// integer convergents.
pub fn pell_fundamental(d: u64) -> Result<PellSolution, QuadraticError> {
    check_discriminant(d)?;
    let isq = isqrt(d);
    let p0 = d & 1;
    let (mut p, mut q) = (p0, 2u64);
    let (mut a_prev, mut a_cur) = (BigUint::zero(), BigUint::from(1u32));
    let (mut b_prev, mut b_cur) = (BigUint::from(1u32), BigUint::zero());
    let mut len = 0u64;
    loop {
        let (a, p_next, q_next) = cf_step(d, isq, p, q);
        let a_next = &a_cur * a + &a_prev;
        let b_next = &b_cur * a + &b_prev;
        a_prev = std::mem::replace(&mut a_cur, a_next);
        b_prev = std::mem::replace(&mut b_cur, b_next);
        len += 1;
        p = p_next;
        q = q_next;
        if q == 2 {
            break;
        }
    }
    // (G, B) with G = 2A - P0 B solves G^2 - d B^2 = (-1)^len * 4.
    let g: BigInt = BigInt::from(a_cur) * 2u32 - BigInt::from(b_cur.clone()) * p0;
    let g = g.to_biguint().expect("convergent numerator is positive");
    let (t, u) = if len.is_multiple_of(2) {
        (g, b_cur)
    } else {
        let t2 = (&g * &g + &b_cur * &b_cur * d) / 2u32;
        let u2 = &g * &b_cur;
        (t2, u2)
    };
    Ok(PellSolution { d, t, u })
}

/// Regulator log eps_d, eps_d = (t_d + u_d sqrt d)/2, accumulated in floating
/// point over the continued fraction period without forming t_d, u_d.
pub fn regulator(d: u64) -> Result<f64, QuadraticError> {
    check_discriminant(d)?;
    let isq = isqrt(d);
    let sqrt_d = (d as f64).sqrt();
    let (mut p, mut q) = (d & 1, 2u64);
    let mut log_sum = 0.0f64;
    let mut product = 1.0f64;
    let mut len = 0u64;
    loop {
        let (_, p_next, q_next) = cf_step(d, isq, p, q);
        p = p_next;
        q = q_next;
        len += 1;
        product *= (p as f64 + sqrt_d) / q as f64;
        if product > 1e250 {
            log_sum += product.ln();
            product = 1.0;
        }
        if q == 2 {
            break;
        }
    }
    log_sum += product.ln();
    Ok(if len % 2 == 1 { 2.0 * log_sum } else { log_sum })
}

/// Indefinite binary quadratic form a x^2 + b x y + c y^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Form { a, b, c }
    }

    pub fn discriminant(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - 4 * a * c
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    /// |sqrt d - 2|a|| < b < sqrt d, tested in exact integer arithmetic.
    pub fn is_reduced(&self) -> bool {
        let d = self.discriminant();
        if d <= 0 || self.b <= 0 {
            return false;
        }
        let b = self.b as i128;
        let two_a = 2 * (self.a as i128).abs();
        b * b < d && (b + two_a) * (b + two_a) > d && (two_a <= b || (two_a - b) * (two_a - b) < d)
    }

    /// The reduction operator: (a, b, c) -> (c, b', (b'^2 - d)/(4c)) with
    /// b' = -b mod 2|c| and sqrt d - 2|c| < b' < sqrt d. Maps reduced forms
    /// to reduced forms; its orbits are the proper equivalence classes.
    pub fn rho(&self, d: u64, isq: u64) -> Form {
        let m = 2 * self.c.unsigned_abs();
        let b_next = isq as i64 - ((isq as i64 + self.b).rem_euclid(m as i64));
        let numer = b_next as i128 * b_next as i128 - d as i128;
        let denom = 4 * self.c as i128;
        debug_assert_eq!(numer % denom, 0);
        Form::new(self.c, b_next, (numer / denom) as i64)
    }

    /// (b + sqrt d) / (2|a|): the step factor whose product over a cycle is eps_d.
    pub fn step_factor(&self, sqrt_d: f64) -> f64 {
        (self.b as f64 + sqrt_d) / (2.0 * self.a.unsigned_abs() as f64)
    }
}

#[derive(Clone, Copy, Default)]
struct FactorSlots {
    len: u8,
    slots: [(u64, u8); 15],
}

impl FactorSlots {
    fn push(&mut self, p: u64, e: u32) {
        self.slots[self.len as usize] = (p, e as u8);
        self.len += 1;
    }

    fn as_slice(&self) -> &[(u64, u8)] {
        &self.slots[..self.len as usize]
    }
}

fn divisors_in_range(factors: &[(u64, u8)], lo: u64, hi: u64, out: &mut Vec<u64>) {
    fn rec(factors: &[(u64, u8)], acc: u64, lo: u64, hi: u64, out: &mut Vec<u64>) {
        match factors.split_first() {
            None => {
                if acc >= lo {
                    out.push(acc);
                }
            }
            Some((&(p, e), rest)) => {
                let mut v = acc;
                for i in 0..=e {
                    if i > 0 {
                        v *= p;
                    }
                    if v > hi {
                        break;
                    }
                    rec(rest, v, lo, hi, out);
                }
            }
        }
    }
    rec(factors, 1, lo, hi, out);
}

/// All primitive reduced forms of discriminant d, sorted.
///
/// For each admissible b the forms are the divisors a of (d - b^2)/4 inside
/// the reduction window; the numbers (d - b^2)/4 are factored together by
/// sieving with the square roots of d modulo each small prime.
pub fn reduced_forms(d: u64) -> Result<Vec<Form>, QuadraticError> {
    check_discriminant(d)?;
    if d > MAX_CLASS_DISCRIMINANT {
        return Err(QuadraticError::TooLarge(d));
    }
    let isq = isqrt(d);
    let parity = d & 1;
    let b0 = if parity == 1 { 1 } else { 2 };
    if b0 > isq {
        return Ok(Vec::new());
    }
    let count = ((isq - b0) / 2 + 1) as usize;
    let mut residual: Vec<u64> = (0..count as u64)
        .map(|i| {
            let b = b0 + 2 * i;
            (d - b * b) / 4
        })
        .collect();
    let mut slots = vec![FactorSlots::default(); count];
    for (r, s) in residual.iter_mut().zip(slots.iter_mut()) {
        let z = r.trailing_zeros();
        if z > 0 {
            s.push(2, z);
            *r >>= z;
        }
    }
    let prime_limit = isqrt((d - b0 * b0) / 4);
    for &p in small_primes().iter().skip(1) {
        if p > prime_limit {
            break;
        }
        let Some(root) = sqrt_mod_prime(d as i64, p) else {
            continue;
        };
        let roots = if root == 0 {
            [0, u64::MAX]
        } else {
            [root, p - root]
        };
        for r in roots.into_iter().filter(|&r| r != u64::MAX) {
            // b = r (mod p) and b = d (mod 2)
            let mut b = if r % 2 == parity { r } else { r + p };
            while b < b0 {
                b += 2 * p;
            }
            while b <= isq {
                let idx = ((b - b0) / 2) as usize;
                let mut e = 0;
                while residual[idx].is_multiple_of(p) {
                    residual[idx] /= p;
                    e += 1;
                }
                if e > 0 {
                    slots[idx].push(p, e);
                }
                b += 2 * p;
            }
        }
    }
    let mut forms = Vec::new();
    let mut divisors = Vec::new();
    for (idx, slot) in slots.iter_mut().enumerate() {
        if residual[idx] > 1 {
            slot.push(residual[idx], 1);
        }
        let b = b0 + 2 * idx as u64;
        let n = (d - b * b) / 4;
        let lo = (isq - b + 2) / 2;
        let hi = (isq + b) / 2;
        divisors.clear();
        divisors_in_range(slot.as_slice(), lo.max(1), hi, &mut divisors);
        for &a in &divisors {
            let c = n / a;
            let (a, b, c) = (a as i64, b as i64, c as i64);
            if a.gcd(&b).gcd(&c) != 1 {
                continue;
            }
            forms.push(Form::new(a, b, -c));
            forms.push(Form::new(-a, b, c));
        }
    }
    forms.sort_unstable();
    Ok(forms)
}

/// Reduced primitive forms of discriminant d partitioned into rho-cycles.
pub fn form_cycles(d: u64) -> Result<Vec<Vec<Form>>, QuadraticError> {
    let forms = reduced_forms(d)?;
    let isq = isqrt(d);
    let mut visited = vec![false; forms.len()];
    let mut cycles = Vec::new();
    for start in 0..forms.len() {
        if visited[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut idx = start;
        loop {
            visited[idx] = true;
            cycle.push(forms[idx]);
            let next = forms[idx].rho(d, isq);
            idx = forms
                .binary_search(&next)
                .expect("rho maps reduced forms to reduced forms");
            if idx == start {
                break;
            }
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Number of SL2(Z)-classes of primitive forms of discriminant d, counted as
/// the number of cycles of reduced forms.
pub fn class_number(d: u64) -> Result<u64, QuadraticError> {
    let forms = reduced_forms(d)?;
    let isq = isqrt(d);
    let mut visited = vec![false; forms.len()];
    let mut cycles = 0u64;
    for start in 0..forms.len() {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut idx = start;
        loop {
            visited[idx] = true;
            let next = forms[idx].rho(d, isq);
            idx = forms
                .binary_search(&next)
                .expect("rho maps reduced forms to reduced forms");
            if idx == start {
                break;
            }
        }
    }
    Ok(cycles)
}

/// A pair (d, u) with d u^2 = t^2 - 4 and d a discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PellDecomposition {
    pub d: u64,
    pub u: u64,
}

/// All (d, u) with d u^2 = t^2 - 4, d = D (l/u)^2 for u | l, increasing u.
pub fn pell_decompositions(t: u64) -> Result<Vec<PellDecomposition>, QuadraticError> {
    let delta = Discriminant::of_trace(t)?;
    Ok(delta
        .sub_discriminants()
        .into_iter()
        .map(|(u, disc)| PellDecomposition { d: disc.delta(), u })
        .collect())
}

/// Class number and regulator of one discriminant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRecord {
    pub d: u64,
    pub h: u64,
    pub regulator: f64,
}

impl ClassRecord {
    /// h(d) log eps_d.
    pub fn weight(&self) -> f64 {
        self.h as f64 * self.regulator
    }

    fn to_line(self) -> String {
        format!("{},{},{:.14e}", self.d, self.h, self.regulator)
    }

    fn parse_line(line: &str, line_no: usize) -> Result<ClassRecord, CacheError> {
        let format_err = |message: String| CacheError::Format {
            line: line_no,
            message,
        };
        let mut parts = line.split(',');
        let (Some(d), Some(h), Some(r), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(format_err(format!("expected 3 fields in {line:?}")));
        };
        let d: u64 = d
            .trim()
            .parse()
            .map_err(|e| format_err(format!("bad discriminant {d:?}: {e}")))?;
        let h: u64 = h
            .trim()
            .parse()
            .map_err(|e| format_err(format!("bad class number {h:?}: {e}")))?;
        let regulator: f64 = r
            .trim()
            .parse()
            .map_err(|e| format_err(format!("bad regulator {r:?}: {e}")))?;
        if h == 0 || !(regulator.is_finite() && regulator > 0.0) {
            return Err(format_err(format!(
                "non-positive h or regulator in {line:?}"
            )));
        }
        Ok(ClassRecord { d, h, regulator })
    }
}

/// Round a regulator to the 15 significant digits kept by the cache file.
fn normalize_regulator(r: f64) -> f64 {
    format!("{r:.14e}").parse().expect("formatted float parses")
}

pub fn compute_class_record(d: u64) -> Result<ClassRecord, QuadraticError> {
    let h = class_number(d)?;
    let regulator = normalize_regulator(regulator(d)?);
    Ok(ClassRecord { d, h, regulator })
}

#[derive(Debug, Clone, Copy)]
struct CacheEntry {
    record: ClassRecord,
    persisted: bool,
}

/// Memoized class records, optionally backed by an append-only text file of
/// `d,h,regulator` lines.
///
/// Reads are concurrent; inserts and file writes go through the write lock.
#[derive(Debug)]
pub struct ClassCache {
    path: Option<PathBuf>,
    records: RwLock<BTreeMap<u64, CacheEntry>>,
    computed: AtomicUsize,
}

impl Default for ClassCache {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl ClassCache {
    pub fn in_memory() -> Self {
        ClassCache {
            path: None,
            records: RwLock::new(BTreeMap::new()),
            computed: AtomicUsize::new(0),
        }
    }

    /// Open a file-backed cache. A missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let path = path.into();
        let mut records = BTreeMap::new();
        match File::open(&path) {
            Ok(file) => {
                for (record, _) in Self::parse(BufReader::new(file), &path)? {
                    records.insert(
                        record.d,
                        CacheEntry {
                            record,
                            persisted: true,
                        },
                    );
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => return Err(CacheError::Io { path, source }),
        }
        Ok(ClassCache {
            path: Some(path),
            records: RwLock::new(records),
            computed: AtomicUsize::new(0),
        })
    }

    fn parse(reader: impl BufRead, path: &Path) -> Result<Vec<(ClassRecord, usize)>, CacheError> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|source| CacheError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record = ClassRecord::parse_line(&line, line_no)?;
            if seen.insert(record.d, line_no).is_some() {
                return Err(CacheError::Duplicate {
                    d: record.d,
                    line: line_no,
                });
            }
            out.push((record, line_no));
        }
        Ok(out)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of records computed (not loaded) by this cache instance.
    pub fn computed_count(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn lookup(&self, d: u64) -> Option<ClassRecord> {
        self.records
            .read()
            .expect("cache lock")
            .get(&d)
            .map(|e| e.record)
    }

    /// Cached record for d, computing and memoizing it on a miss.
    pub fn get(&self, d: u64) -> Result<ClassRecord, QuadraticError> {
        if let Some(r) = self.lookup(d) {
            return Ok(r);
        }
        let record = compute_class_record(d)?;
        self.insert(record);
        Ok(record)
    }

    fn insert(&self, record: ClassRecord) {
        let mut guard = self.records.write().expect("cache lock");
        if let std::collections::btree_map::Entry::Vacant(e) = guard.entry(record.d) {
            e.insert(CacheEntry {
                record,
                persisted: false,
            });
            self.computed.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Make sure every discriminant in `ds` has a record, computing the
    /// missing ones in parallel on the current rayon pool. Returns the number
    /// of newly computed records.
    pub fn ensure(&self, ds: impl IntoIterator<Item = u64>) -> Result<usize, QuadraticError> {
        let missing: Vec<u64> = {
            let guard = self.records.read().expect("cache lock");
            let mut m: Vec<u64> = ds.into_iter().filter(|d| !guard.contains_key(d)).collect();
            m.sort_unstable();
            m.dedup();
            m
        };
        let fresh: Vec<ClassRecord> = missing
            .par_iter()
            .map(|&d| compute_class_record(d))
            .collect::<Result<_, _>>()?;
        let n = fresh.len();
        for r in fresh {
            self.insert(r);
        }
        Ok(n)
    }

    /// Append all records not yet on disk, in increasing d. Returns the
    /// number of lines written; a no-op for in-memory caches.
    pub fn persist(&self) -> Result<usize, CacheError> {
        let Some(path) = &self.path else {
            return Ok(0);
        };
        let mut guard = self.records.write().expect("cache lock");
        let pending: Vec<u64> = guard
            .iter()
            .filter(|(_, e)| !e.persisted)
            .map(|(&d, _)| d)
            .collect();
        if pending.is_empty() {
            return Ok(0);
        }
        let io_err = |source| CacheError::Io {
            path: path.clone(),
            source,
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        let mut w = BufWriter::new(file);
        for d in &pending {
            let entry = guard.get_mut(d).expect("pending key present");
            writeln!(w, "{}", entry.record.to_line()).map_err(io_err)?;
            entry.persisted = true;
        }
        w.flush().map_err(io_err)?;
        Ok(pending.len())
    }
}
