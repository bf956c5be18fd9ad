//! Integer and character primitives: factorization, Möbius function,
//! Kronecker symbol, valuations, squarefree decomposition, modular inverses
//! and Kloosterman sums.

use std::sync::OnceLock;

use num_integer::{Integer, Roots};
use thiserror::Error;

use crate::scalar::{CompensatedSum, RealScalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{x} has no inverse modulo {modulus}")]
    NotInvertible { x: i64, modulus: u64 },
    #[error("modulus must be positive")]
    ZeroModulus,
}

/// Prime factorization of a positive integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Build from prime powers; the pairs are sorted and merged.
    pub fn from_prime_powers(mut factors: Vec<(u64, u32)>) -> Self {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_unstable();
        let mut merged: Vec<(u64, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let n = merged.iter().fold(1u64, |acc, &(p, e)| acc * p.pow(e));
        Factorization { n, factors: merged }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    /// Product of two factorizations (the factorization of `self.n * other.n`).
    pub fn mul(&self, other: &Factorization) -> Factorization {
        let mut all = self.factors.clone();
        all.extend_from_slice(&other.factors);
        Factorization::from_prime_powers(all)
    }

    /// All positive divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

const TABLE_LIMIT: u64 = 1 << 20;

/// Primes below 2^20, built on first use.
pub fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(TABLE_LIMIT))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// Smallest-prime-factor table for fast repeated factorization of small n.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u64) -> Self {
        let limit = limit.max(1) as usize;
        let mut spf = vec![0u32; limit + 1];
        for i in 2..=limit {
            if spf[i] == 0 {
                let mut j = i;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        FactorSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Smallest prime factor of `n` (2 <= n <= limit).
    pub fn smallest_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        assert!(n >= 1 && n <= self.limit(), "{n} outside sieve range");
        let mut n = n;
        let mut factors = Vec::new();
        while n > 1 {
            let p = self.smallest_factor(n);
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        Factorization::from_prime_powers(factors)
    }
}

/// Complete factorization by trial division against the prime table.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut m = n;
    let mut factors = Vec::new();
    let mut trial = |p: u64, m: &mut u64| {
        if (*m).is_multiple_of(p) {
            let mut e = 0;
            while (*m).is_multiple_of(p) {
                *m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    };
    for &p in small_primes() {
        if p * p > m {
            break;
        }
        trial(p, &mut m);
    }
    // Beyond the table: wheel over 6k +- 1.
    let mut p = TABLE_LIMIT + 1 - (TABLE_LIMIT + 1) % 6 + 5;
    while m > 1 && p.saturating_mul(p) <= m {
        trial(p, &mut m);
        trial(p + 2, &mut m);
        p += 6;
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Factorization::from_prime_powers(factors)
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).factors() == [(n, 1)]
}

/// Möbius function.
pub fn mobius(n: u64) -> i32 {
    assert!(n >= 1, "mobius requires n >= 1");
    let f = factorize(n);
    if f.factors().iter().any(|&(_, e)| e > 1) {
        0
    } else if f.factors().len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Largest k with p^k | n. Sign-independent.
pub fn valuation(p: u64, n: i64) -> u32 {
    assert!(p >= 2, "valuation base must be >= 2");
    assert!(n != 0, "valuation of zero is undefined");
    let mut m = n.unsigned_abs();
    let mut k = 0;
    while m.is_multiple_of(p) {
        m /= p;
        k += 1;
    }
    k
}

/// Writes q = b * c^2 with b squarefree.
pub fn squarefree_decompose(q: u64) -> (u64, u64) {
    assert!(q >= 1, "squarefree_decompose requires q >= 1");
    let mut b = 1u64;
    let mut c = 1u64;
    for &(p, e) in factorize(q).factors() {
        c *= p.pow(e / 2);
        if e % 2 == 1 {
            b *= p;
        }
    }
    (b, c)
}

pub fn isqrt(n: u64) -> u64 {
    n.sqrt()
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Kronecker symbol (a/n), valid for all integers a and n.
pub fn kronecker(a: i64, n: i64) -> i32 {
    // (2/b) indexed by b mod 8.
    const TAB2: [i32; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    let mut a = a as i128;
    let mut b = n as i128;
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let v = b.trailing_zeros();
    b >>= v;
    let mut k = if v.is_multiple_of(2) {
        1
    } else {
        TAB2[a.rem_euclid(8) as usize]
    };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // b is odd and positive from here on.
    loop {
        if a == 0 {
            return if b > 1 { 0 } else { k };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= TAB2[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

/// Inverse of x modulo c, in [0, c).
pub fn mod_inverse(x: i64, c: u64) -> Result<u64, ArithError> {
    if c == 0 {
        return Err(ArithError::ZeroModulus);
    }
    if c == 1 {
        return Ok(0);
    }
    let m = c as i128;
    let r = (x as i128).rem_euclid(m);
    let egcd = r.extended_gcd(&m);
    if egcd.gcd != 1 {
        return Err(ArithError::NotInvertible { x, modulus: c });
    }
    Ok(egcd.x.rem_euclid(m) as u64)
}

/// Kloosterman sum S(m, n; c) = sum over units x mod c of e((m x + n x^-1) / c).
///
/// The sum is real; it is evaluated by direct summation of cosines.
pub fn kloosterman<T: RealScalar>(m: i64, n: i64, c: u64) -> T {
    assert!(c >= 1, "Kloosterman modulus must be positive");
    let cm = c as i128;
    let mm = (m as i128).rem_euclid(cm);
    let nm = (n as i128).rem_euclid(cm);
    let two_pi_over_c = T::TAU() / T::of(c as f64);
    let mut re = CompensatedSum::<T>::new();
    let mut im = CompensatedSum::<T>::new();
    for x in 0..c {
        if x.gcd(&c) != 1 {
            continue;
        }
        let inv = mod_inverse(x as i64, c).expect("unit has an inverse") as i128;
        let phase = (mm * x as i128 + nm * inv).rem_euclid(cm);
        let angle = two_pi_over_c * T::of(phase as f64);
        re.add(angle.cos());
        im.add(angle.sin());
    }
    debug_assert!(
        im.value().abs() <= T::epsilon() * T::of(64.0 * c as f64),
        "imaginary part of S({m},{n};{c}) did not cancel"
    );
    re.value()
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc = 1u128 % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// A square root of `a` modulo an odd prime `p` (Tonelli-Shanks), or `None`
/// when `a` is a non-residue. Returns `Some(0)` when p | a.
pub fn sqrt_mod_prime(a: i64, p: u64) -> Option<u64> {
    debug_assert!(p % 2 == 1);
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return Some(0);
    }
    if kronecker(a as i64, p as i64) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let z = (2..p)
        .find(|&z| kronecker(z as i64, p as i64) == -1)
        .expect("odd prime has a non-residue");
    let mul = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul(t2, t2);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul(b, b);
        t = mul(t, c);
        r = mul(r, b);
    }
    Some(r)
}

/// Number of divisors.
pub fn divisor_count(n: u64) -> u64 {
    factorize(n)
        .factors()
        .iter()
        .map(|&(_, e)| e as u64 + 1)
        .product()
}
