//! Zagier's L-series L(s, delta) = sum over d u^2 = delta of L(s, chi_d) u^(1-2s).
//!
//! The Dirichlet coefficients lambda_q(delta) are integers and are computed
//! two independent ways: from the local Euler factors, and from the
//! Kloosterman-sum formula for delta = t^2 - 4. Values at s = 1 come from
//! the finite log-sine formula for L(1, chi_D).

use thiserror::Error;

use crate::arith::{factorize, is_prime, kloosterman, FactorSieve};
use crate::quadratic::{Discriminant, QuadraticError};
use crate::scalar::{CompensatedSum, RealScalar};

/// Largest distance from an integer tolerated when rounding the
/// exponential-sum route.
pub const ROUNDING_TOLERANCE: f64 = 1e-5;

/// Smoothed sums are truncated where e^(-q/V) drops below this.
pub const SMOOTHING_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZagierError {
    #[error(transparent)]
    Quadratic(#[from] QuadraticError),
    #[error("{0} is not a fundamental discriminant greater than 1")]
    NotFundamental(u64),
    #[error("exponential-sum value {value} for lambda_{q}(t^2-4), t = {t}, is not within {ROUNDING_TOLERANCE} of an integer")]
    Rounding { q: u64, t: u64, value: f64 },
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("Euler factor at {p} has a vanishing denominator")]
    SingularFactor { p: u64 },
    #[error("smoothing scale must be at least 1, got {0}")]
    BadScale(f64),
    #[error("modulus {q} exceeds the table limit {limit}")]
    OutOfTable { q: u64, limit: u64 },
}

fn check_odd_prime(p: u64) -> Result<(), ZagierError> {
    if p < 3 || !is_prime(p) {
        return Err(ZagierError::NotOddPrime(p));
    }
    Ok(())
}

/// Local data of the Euler factor at one prime: v = v_p(l), chi = chi_D(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalFactorSpec {
    pub prime: u64,
    pub v: u32,
    pub chi: i32,
}

impl LocalFactorSpec {
    pub fn of(delta: &Discriminant, prime: u64) -> Self {
        LocalFactorSpec {
            prime,
            v: delta.conductor_factorization().exponent_of(prime),
            chi: delta.chi(prime as i64),
        }
    }
}

/// Coefficient of prime^(-m s) in
/// sum_{j<v} prime^(j(1-2s)) + prime^(v(1-2s)) / (1 - chi prime^(-s)).
pub fn lambda_local(spec: &LocalFactorSpec, m: u32) -> i64 {
    let p = spec.prime as i64;
    let mut value = 0i64;
    if m.is_multiple_of(2) && m / 2 < spec.v {
        value += p.pow(m / 2);
    }
    if m >= 2 * spec.v {
        let chi_power = if m == 2 * spec.v {
            1
        } else {
            (spec.chi as i64).pow(m - 2 * spec.v)
        };
        value += p.pow(spec.v) * chi_power;
    }
    value
}

/// lambda_q(delta) as the product of local coefficients over p^m || q.
pub fn lambda_q_euler(q: u64, delta: &Discriminant) -> i64 {
    assert!(q >= 1, "coefficient index must be positive");
    factorize(q)
        .factors()
        .iter()
        .map(|&(p, m)| lambda_local(&LocalFactorSpec::of(delta, p), m))
        .product()
}

/// Coefficient access for one fixed discriminant.
#[derive(Debug, Clone)]
pub struct ZagierSeries {
    delta: Discriminant,
}

impl ZagierSeries {
    pub fn new(delta: Discriminant) -> Self {
        ZagierSeries { delta }
    }

    pub fn delta(&self) -> &Discriminant {
        &self.delta
    }

    pub fn coefficient(&self, q: u64) -> i64 {
        lambda_q_euler(q, &self.delta)
    }

    /// lambda_0..=lambda_qmax (index 0 holds 0), built multiplicatively over a
    /// smallest-prime-factor sieve.
    pub fn coefficients(&self, qmax: u64) -> Vec<i64> {
        let mut lam = vec![0i64; qmax as usize + 1];
        if qmax == 0 {
            return lam;
        }
        lam[1] = 1;
        let sieve = FactorSieve::new(qmax);
        let mut last_prime = 0u64;
        let mut spec = LocalFactorSpec {
            prime: 0,
            v: 0,
            chi: 0,
        };
        for q in 2..=qmax {
            let p = sieve.smallest_factor(q);
            let mut rest = q;
            let mut m = 0;
            while rest % p == 0 {
                rest /= p;
                m += 1;
            }
            if p != last_prime {
                spec = LocalFactorSpec::of(&self.delta, p);
                last_prime = p;
            }
            lam[q as usize] = lam[rest as usize] * lambda_local(&spec, m);
        }
        lam
    }

    /// sum_{q <= qmax, (q, skip) = 1} lambda_q / q.
    pub fn partial_sum_at_one(&self, qmax: u64, skip_prime: Option<u64>) -> f64 {
        let lam = self.coefficients(qmax);
        (1..=qmax)
            .filter(|q| skip_prime.is_none_or(|p| q % p != 0))
            .map(|q| lam[q as usize] as f64 / q as f64)
            .collect::<CompensatedSum<f64>>()
            .value()
    }
}

/// Precomputed rows S(k^2, 1; c), k mod c, for the exponential-sum route.
#[derive(Debug, Clone)]
pub struct ExpSumTable {
    rows: Vec<Vec<f64>>,
}

impl ExpSumTable {
    pub fn new(max_modulus: u64) -> Self {
        let rows = (0..=max_modulus)
            .map(|c| {
                if c == 0 {
                    return Vec::new();
                }
                (0..c)
                    .map(|k| {
                        let k2 = ((k as u128 * k as u128) % c as u128) as i64;
                        kloosterman::<f64>(k2, 1, c)
                    })
                    .collect()
            })
            .collect();
        ExpSumTable { rows }
    }

    pub fn max_modulus(&self) -> u64 {
        (self.rows.len() - 1) as u64
    }

    /// lambda_q(t^2 - 4) = sum_{q1^2 q2 = q} q2^-1 sum_{k mod q2} e(k t / q2) S(k^2, 1; q2),
    /// rounded to the nearest integer.
    pub fn lambda(&self, q: u64, t: u64) -> Result<i64, ZagierError> {
        assert!(q >= 1 && t >= 3, "lambda requires q >= 1 and t >= 3");
        if q > self.max_modulus() {
            return Err(ZagierError::OutOfTable {
                q,
                limit: self.max_modulus(),
            });
        }
        let mut total = CompensatedSum::<f64>::new();
        let mut q1 = 1u64;
        while q1 * q1 <= q {
            if q.is_multiple_of(q1 * q1) {
                let q2 = q / (q1 * q1);
                let row = &self.rows[q2 as usize];
                let mut inner = CompensatedSum::<f64>::new();
                for (k, s) in row.iter().enumerate() {
                    // The imaginary parts cancel between k and -k.
                    let phase = ((k as u128 * t as u128) % q2 as u128) as f64;
                    inner.add((std::f64::consts::TAU * phase / q2 as f64).cos() * s);
                }
                total.add(inner.value() / q2 as f64);
            }
            q1 += 1;
        }
        let value = total.value();
        let rounded = value.round();
        if (value - rounded).abs() > ROUNDING_TOLERANCE {
            return Err(ZagierError::Rounding { q, t, value });
        }
        Ok(rounded as i64)
    }
}

/// lambda_q(t^2 - 4) by the exponential-sum formula (one-off; use
/// [`ExpSumTable`] for repeated evaluation).
pub fn lambda_q_expsum(q: u64, t: u64) -> Result<i64, ZagierError> {
    ExpSumTable::new(q).lambda(q, t)
}

/// L(1, chi_D) for a fundamental D > 1 by
/// L(1, chi_D) = -(1/sqrt D) sum_{0<a<D} chi_D(a) log sin(pi a / D).
pub fn l1_fundamental<T: RealScalar>(fundamental: u64) -> Result<T, ZagierError> {
    let disc = Discriminant::new(fundamental).map_err(|e| match e {
        QuadraticError::Square(_) | QuadraticError::NotDiscriminant(_) => {
            ZagierError::NotFundamental(fundamental)
        }
        other => other.into(),
    })?;
    if disc.conductor() != 1 {
        return Err(ZagierError::NotFundamental(fundamental));
    }
    let d = fundamental as i64;
    let big_d = T::of(fundamental as f64);
    let mut acc = CompensatedSum::<T>::new();
    // chi_D is even, so the sum folds onto 0 < a < D/2.
    for a in 1..=(d - 1) / 2 {
        let chi = crate::arith::kronecker(d, a);
        if chi != 0 {
            let angle = T::PI() * T::of(a as f64) / big_d;
            acc.add(T::of_int(chi as i64) * angle.sin().ln());
        }
    }
    Ok(-(T::of(2.0) * acc.value()) / big_d.sqrt())
}

/// prod_{p | l} (1 - chi_D(p)/p): ratio L(1, chi_delta) / L(1, chi_D).
fn imprimitive_ratio<T: RealScalar>(delta: &Discriminant) -> T {
    delta
        .conductor_factorization()
        .factors()
        .iter()
        .fold(T::one(), |acc, &(p, _)| {
            acc * (T::one() - T::of_int(delta.chi(p as i64) as i64) / T::of(p as f64))
        })
}

/// L(1, chi_delta) for the character induced from chi_D.
pub fn l1_chi_delta<T: RealScalar>(delta: &Discriminant) -> Result<T, ZagierError> {
    Ok(l1_fundamental::<T>(delta.fundamental())? * imprimitive_ratio::<T>(delta))
}

fn l1_zagier_from<T: RealScalar>(delta: &Discriminant, l1_d: T) -> T {
    delta
        .sub_discriminants()
        .iter()
        .map(|(u, sub)| l1_d * imprimitive_ratio::<T>(sub) / T::of(*u as f64))
        .fold(T::zero(), |a, b| a + b)
}

/// L(1, delta) = sum_{u | l} L(1, chi_{delta/u^2}) / u.
pub fn l1_zagier<T: RealScalar>(delta: &Discriminant) -> Result<T, ZagierError> {
    let l1_d = l1_fundamental::<T>(delta.fundamental())?;
    Ok(l1_zagier_from(delta, l1_d))
}

/// The local Euler factor of L(s, delta) at the prime p, at a real point s.
pub fn euler_factor_at_p<T: RealScalar>(
    delta: &Discriminant,
    p: u64,
    s: T,
) -> Result<T, ZagierError> {
    check_odd_prime(p)?;
    let spec = LocalFactorSpec::of(delta, p);
    let pf = T::of(p as f64);
    let x = pf.powf(T::one() - T::of(2.0) * s);
    let denom = T::one() - T::of_int(spec.chi as i64) * pf.powf(-s);
    if denom == T::zero() {
        return Err(ZagierError::SingularFactor { p });
    }
    let mut head = T::zero();
    let mut xm = T::one();
    for _ in 0..spec.v {
        head = head + xm;
        xm = xm * x;
    }
    Ok(head + xm / denom)
}

/// L^p(1, delta): L(1, delta) with the Euler factor at p removed.
pub fn lp1_zagier<T: RealScalar>(delta: &Discriminant, p: u64) -> Result<T, ZagierError> {
    let factor = euler_factor_at_p(delta, p, T::one())?;
    Ok(l1_zagier::<T>(delta)? / factor)
}

/// Number of terms kept by [`lambda_v_p`] for smoothing scale `v`.
pub fn smoothing_terms(v: f64) -> u64 {
    (v * (1.0 / SMOOTHING_CUTOFF).ln()).ceil() as u64
}

/// Lambda_V^p(delta) = sum_{(q,p)=1} lambda_q(delta)/q e^(-q/V), truncated once
/// e^(-q/V) < 1e-12 and summed in increasing q.
///
/// A diagnostic quantity: it is only used to check the smoothed main term.
pub fn lambda_v_p<T: RealScalar>(delta: &Discriminant, p: u64, v: T) -> Result<T, ZagierError> {
    check_odd_prime(p)?;
    let vf = v.to_f64().unwrap_or(f64::NAN);
    if vf.is_nan() || vf < 1.0 {
        return Err(ZagierError::BadScale(vf));
    }
    let qmax = smoothing_terms(vf);
    let lam = ZagierSeries::new(delta.clone()).coefficients(qmax);
    let mut acc = CompensatedSum::<T>::new();
    for q in 1..=qmax {
        if q % p == 0 || lam[q as usize] == 0 {
            continue;
        }
        let qf = T::of(q as f64);
        acc.add(T::of_int(lam[q as usize]) / qf * (-qf / v).exp());
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::kronecker;
    use crate::quadratic::{class_number, regulator};

    fn disc(delta: u64) -> Discriminant {
        Discriminant::new(delta).unwrap()
    }

    /// lambda_q(delta) straight from the definition: the coefficient of q^-s in
    /// sum_{u | l} L(s, chi_{delta/u^2}) u^(1-2s) is sum over u | l, u^2 | q of
    /// u * chi_{delta/u^2}(q/u^2).
    fn lambda_by_divisor_sum(q: u64, delta: &Discriminant) -> i64 {
        delta
            .sub_discriminants()
            .iter()
            .filter(|(u, _)| q.is_multiple_of(u * u))
            .map(|(u, sub)| *u as i64 * kronecker(sub.delta() as i64, (q / (u * u)) as i64) as i64)
            .sum()
    }

    /// h(D) log eps_D / sqrt D from the form-cycle and continued-fraction code.
    fn l1_by_class_number(d: u64) -> f64 {
        class_number(d).unwrap() as f64 * regulator(d).unwrap() / (d as f64).sqrt()
    }

    #[test]
    fn local_coefficients() {
        let spec = LocalFactorSpec {
            prime: 3,
            v: 1,
            chi: -1,
        };
        assert_eq!(lambda_local(&spec, 0), 1);
        assert_eq!(lambda_local(&spec, 1), 0);
        assert_eq!(lambda_local(&spec, 2), 3);
        assert_eq!(lambda_local(&spec, 3), -3);
        let unramified = LocalFactorSpec {
            prime: 7,
            v: 0,
            chi: 1,
        };
        assert_eq!(
            (0..5)
                .map(|m| lambda_local(&unramified, m))
                .collect::<Vec<_>>(),
            vec![1; 5]
        );
        let ramified = LocalFactorSpec {
            prime: 5,
            v: 0,
            chi: 0,
        };
        assert_eq!(lambda_local(&ramified, 0), 1);
        assert_eq!(lambda_local(&ramified, 1), 0);
    }

    #[test]
    fn euler_coefficient_examples() {
        assert_eq!(lambda_q_euler(1, &disc(45)), 1);
        assert_eq!(lambda_q_euler(3, &disc(45)), 0);
        assert_eq!(lambda_q_euler(9, &disc(45)), 3);
    }

    #[test]
    fn euler_coefficients_match_definition() {
        for t in 3..120u64 {
            let delta = Discriminant::of_trace(t).unwrap();
            let series = ZagierSeries::new(delta.clone());
            let bulk = series.coefficients(400);
            for q in 1..=400u64 {
                let expected = lambda_by_divisor_sum(q, &delta);
                assert_eq!(lambda_q_euler(q, &delta), expected, "t={t} q={q}");
                assert_eq!(bulk[q as usize], expected);
            }
        }
    }

    #[test]
    fn coefficients_are_multiplicative() {
        for t in (5..205u64).step_by(10) {
            let series = ZagierSeries::new(Discriminant::of_trace(t).unwrap());
            assert_eq!(series.coefficient(1), 1);
            for a in 1..=100u64 {
                for b in 1..=100u64 {
                    if num_integer::Integer::gcd(&a, &b) == 1 {
                        assert_eq!(
                            series.coefficient(a * b),
                            series.coefficient(a) * series.coefficient(b)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn expsum_examples() {
        assert_eq!(lambda_q_expsum(1, 3), Ok(1));
        assert_eq!(lambda_q_expsum(3, 7), Ok(0));
        assert_eq!(lambda_q_expsum(9, 7), Ok(3));
    }

    #[test]
    fn expsum_matches_euler_on_small_range() {
        let table = ExpSumTable::new(80);
        for t in 3..60u64 {
            let delta = Discriminant::of_trace(t).unwrap();
            for q in 1..=80u64 {
                assert_eq!(
                    table.lambda(q, t).unwrap(),
                    lambda_q_euler(q, &delta),
                    "t={t} q={q}"
                );
            }
        }
        assert!(matches!(
            table.lambda(81, 3),
            Err(ZagierError::OutOfTable { .. })
        ));
    }

    #[test]
    fn l1_fundamental_examples() {
        let l5: f64 = l1_fundamental(5).unwrap();
        let l8: f64 = l1_fundamental(8).unwrap();
        let l12: f64 = l1_fundamental(12).unwrap();
        assert!((l5 - 0.430409).abs() < 1e-6);
        assert!((l8 - 0.623225).abs() < 1e-6);
        assert!((l12 - 0.760346).abs() < 1e-6);
        assert!((l5 - ((3.0 + 5f64.sqrt()) / 2.0).ln() / 5f64.sqrt()).abs() < 1e-12);
        assert!((l8 - (3.0 + 2.0 * 2f64.sqrt()).ln() / 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            l1_fundamental::<f64>(45),
            Err(ZagierError::NotFundamental(45))
        );
        assert_eq!(
            l1_fundamental::<f64>(1),
            Err(ZagierError::NotFundamental(1))
        );
        assert_eq!(
            l1_fundamental::<f64>(7),
            Err(ZagierError::NotFundamental(7))
        );
    }

    #[test]
    fn l1_fundamental_matches_class_number_formula() {
        for d in 5..3000u64 {
            let Ok(disc) = Discriminant::new(d) else {
                continue;
            };
            if disc.conductor() != 1 {
                continue;
            }
            let l: f64 = l1_fundamental(d).unwrap();
            let oracle = l1_by_class_number(d);
            assert!((l - oracle).abs() < 1e-9 * oracle, "D={d}: {l} vs {oracle}");
        }
    }

    #[test]
    fn l1_single_precision_is_close() {
        let l: f32 = l1_fundamental(13).unwrap();
        let oracle = l1_by_class_number(13) as f32;
        assert!((l - oracle).abs() < 1e-5);
    }

    #[test]
    fn imprimitive_values() {
        let l5: f64 = l1_fundamental(5).unwrap();
        let l45: f64 = l1_chi_delta(&disc(45)).unwrap();
        assert!((l45 - 4.0 / 3.0 * l5).abs() < 1e-12);
        assert!((l45 - 0.573879).abs() < 1e-6);
        let l20: f64 = l1_chi_delta(&disc(20)).unwrap();
        assert!((l20 - 0.645614).abs() < 1e-6);
        let l5_direct: f64 = l1_chi_delta(&disc(5)).unwrap();
        assert_eq!(l5_direct, l5);
    }

    #[test]
    fn imprimitive_value_matches_character_sum() {
        // sum_{n <= N} chi_20(n)/n: partial sums of a periodic mean-zero
        // sequence, tail below 20/N.
        let n_max = 2_000_000i64;
        let direct: f64 = (1..=n_max)
            .map(|n| kronecker(20, n) as f64 / n as f64)
            .collect::<CompensatedSum<f64>>()
            .value();
        let l20: f64 = l1_chi_delta(&disc(20)).unwrap();
        assert!((direct - l20).abs() < 2e-5, "{direct} vs {l20}");
    }

    #[test]
    fn zagier_values() {
        let l5: f64 = l1_fundamental(5).unwrap();
        let z5: f64 = l1_zagier(&disc(5)).unwrap();
        assert_eq!(z5, l5);
        let z45: f64 = l1_zagier(&disc(45)).unwrap();
        let l45: f64 = l1_chi_delta(&disc(45)).unwrap();
        assert!((z45 - (l45 + l5 / 3.0)).abs() < 1e-14);
        let z12: f64 = l1_zagier(&disc(12)).unwrap();
        assert_eq!(z12, l1_fundamental::<f64>(12).unwrap());
    }

    #[test]
    fn truncated_coefficient_sums_approach_l1() {
        for t in [3u64, 7, 11, 18, 27] {
            let delta = Discriminant::of_trace(t).unwrap();
            let series = ZagierSeries::new(delta.clone());
            let target: f64 = l1_zagier(&delta).unwrap();
            let dev_small = (series.partial_sum_at_one(1_000, None) - target).abs();
            let dev_large = (series.partial_sum_at_one(100_000, None) - target).abs();
            assert!(dev_large < dev_small, "t={t}: {dev_small} -> {dev_large}");
            assert!(dev_large < 0.05 * target);
        }
    }

    #[test]
    fn euler_factor_cases() {
        // t = 3, delta = 5: chi_5(3) = -1, chi_5(11) = 1.
        let d5 = disc(5);
        let f: f64 = euler_factor_at_p(&d5, 3, 1.0).unwrap();
        assert!((f - 3.0 / 4.0).abs() < 1e-15);
        let f: f64 = euler_factor_at_p(&d5, 11, 1.0).unwrap();
        assert!((f - 11.0 / 10.0).abs() < 1e-15);
        // delta = 5 * 5^2 * ...: p | D with v_p(l) = n - 1.
        for (delta, p, n) in [
            (5u64, 5u64, 1i32),
            (125, 5, 2),
            (3125, 5, 3),
            (21 * 49, 7, 2),
        ] {
            let f: f64 = euler_factor_at_p(&disc(delta), p, 1.0).unwrap();
            let pf = p as f64;
            let expected = (1.0 - pf.powi(-n)) / (1.0 - 1.0 / pf);
            assert!((f - expected).abs() < 1e-14, "delta={delta}");
        }
        assert_eq!(
            euler_factor_at_p::<f64>(&d5, 2, 1.0),
            Err(ZagierError::NotOddPrime(2))
        );
        assert_eq!(
            euler_factor_at_p::<f64>(&d5, 9, 1.0),
            Err(ZagierError::NotOddPrime(9))
        );
    }

    #[test]
    fn euler_factor_matches_local_coefficients() {
        // sum_m lambda_local(m) p^(-m s) at s = 2 converges fast.
        for t in 3..80u64 {
            let delta = Discriminant::of_trace(t).unwrap();
            for p in [3u64, 5, 7] {
                let spec = LocalFactorSpec::of(&delta, p);
                let series: f64 = (0..60)
                    .map(|m| lambda_local(&spec, m) as f64 * (p as f64).powi(-2 * m as i32))
                    .sum();
                let f: f64 = euler_factor_at_p(&delta, p, 2.0).unwrap();
                assert!((f - series).abs() < 1e-12, "t={t} p={p}");
            }
        }
    }

    #[test]
    fn removed_factor_identity() {
        for t in 3..150u64 {
            let delta = Discriminant::of_trace(t).unwrap();
            let full: f64 = l1_zagier(&delta).unwrap();
            for p in [3u64, 5, 7, 11] {
                let reduced: f64 = lp1_zagier(&delta, p).unwrap();
                let factor: f64 = euler_factor_at_p(&delta, p, 1.0).unwrap();
                assert!((factor * reduced - full).abs() <= 4.0 * f64::EPSILON * full);
            }
        }
    }

    #[test]
    fn lp1_examples() {
        let l5: f64 = l1_zagier(&disc(5)).unwrap();
        let lp: f64 = lp1_zagier(&disc(5), 3).unwrap();
        assert!((lp - 4.0 / 3.0 * l5).abs() < 1e-14);
        let coprime_sum = ZagierSeries::new(disc(5)).partial_sum_at_one(200_000, Some(3));
        assert!((coprime_sum - lp).abs() < 1e-3, "{coprime_sum} vs {lp}");
        let l45: f64 = l1_zagier(&disc(45)).unwrap();
        let lp45: f64 = lp1_zagier(&disc(45), 5).unwrap();
        assert_eq!(lp45, l45);
        let series = ZagierSeries::new(disc(45));
        assert!((1..8).all(|k| series.coefficient(5u64.pow(k)) == 0));
    }

    #[test]
    fn smoothed_sum_converges() {
        let delta = disc(5);
        let target: f64 = lp1_zagier(&delta, 3).unwrap();
        let mut prev = f64::INFINITY;
        for v in [10.0, 100.0, 1000.0, 10000.0] {
            let s: f64 = lambda_v_p(&delta, 3, v).unwrap();
            let dev = (s - target).abs();
            assert!(dev < 3.0 / f64::sqrt(v), "V={v}: dev {dev}");
            assert!(dev < prev);
            prev = dev;
        }
    }

    #[test]
    fn smoothed_sum_is_reproducible() {
        let delta = disc(5);
        let a: f64 = lambda_v_p(&delta, 3, 1.0).unwrap();
        let b: f64 = lambda_v_p(&delta, 3, 1.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0);
        assert_eq!(
            lambda_v_p::<f64>(&delta, 3, 0.5),
            Err(ZagierError::BadScale(0.5))
        );
    }

    #[test]
    fn smoothed_sum_skips_multiples_of_p() {
        // All lambda_{3k} are dropped: compare against a manual sum.
        let delta = Discriminant::of_trace(11).unwrap();
        let v = 5.0f64;
        let lam = ZagierSeries::new(delta.clone()).coefficients(smoothing_terms(v));
        let manual: f64 = (1..lam.len() as u64)
            .filter(|q| q % 3 != 0)
            .map(|q| lam[q as usize] as f64 / q as f64 * (-(q as f64) / v).exp())
            .sum();
        let s: f64 = lambda_v_p(&delta, 3, v).unwrap();
        assert!((s - manual).abs() < 1e-12);
    }
}
