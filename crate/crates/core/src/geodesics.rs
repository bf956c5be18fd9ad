//! Prime geodesic counting functions for PSL2(Z) restricted by trace.
//!
//! Hyperbolic classes of trace t have norm ((t + sqrt(t^2-4))/2)^2 and total
//! weight 2 sum_{d u^2 = t^2-4} h(d) log eps_d. Each trace's weight is
//! quantized once into an [`ExactSum`], so every counting function is an
//! exact integer sum over a set of traces.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{is_prime, kronecker, valuation};
use crate::quadratic::{pell_decompositions, ClassCache, Discriminant, QuadraticError};
use crate::scalar::{ExactScalar, ExactSum, RealScalar};
use crate::zagier::{euler_factor_at_p, l1_zagier, ZagierError};

/// Largest x accepted by the L-series route.
pub const ZAGIER_ROUTE_MAX_X: f64 = 1e7;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error("x must be a finite real >= 1, got {0}")]
    BadX(f64),
    #[error("{0} is not an odd prime (modulus must be a prime p >= 3)")]
    NotOddPrime(u64),
    #[error("residue {a} is not congruent to 2 or -2 mod {p}")]
    NotPlusMinusTwo { p: u64, a: u64 },
    #[error("valuation index must be >= 1")]
    ZeroValuation,
    #[error("x = {x} exceeds the L-series route limit {ZAGIER_ROUTE_MAX_X}")]
    ZagierRouteLimit { x: f64 },
    #[error("weights cover traces up to {have}, window needs {need}")]
    WindowTooLarge { have: u64, need: u64 },
    #[error(transparent)]
    Quadratic(#[from] QuadraticError),
    #[error(transparent)]
    Zagier(#[from] ZagierError),
}

fn check_odd_prime(p: u64) -> Result<(), GeodesicError> {
    if p < 3 || !is_prime(p) {
        return Err(GeodesicError::NotOddPrime(p));
    }
    Ok(())
}

/// Traces 3 <= t <= X with X = sqrt(x) + 1/sqrt(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceWindow {
    x: f64,
    t_max: u64,
}

impl TraceWindow {
    /// t_max is the largest t with t^2 x <= (x + 1)^2, decided in exact
    /// rational arithmetic on the binary value of x.
    pub fn new(x: f64) -> Result<Self, GeodesicError> {
        if !(x.is_finite() && x >= 1.0) {
            return Err(GeodesicError::BadX(x));
        }
        let xr = BigRational::from_float(x).expect("finite");
        let one = BigRational::from_integer(BigInt::from(1));
        let rhs = (&xr + &one) * (&xr + &one);
        let fits = |t: u64| {
            let tr = BigRational::from_integer(BigInt::from(t));
            &tr * &tr * &xr <= rhs
        };
        let mut t = (x.sqrt() + 1.0 / x.sqrt()).floor() as u64;
        while t > 0 && !fits(t) {
            t -= 1;
        }
        while fits(t + 1) {
            t += 1;
        }
        Ok(TraceWindow { x, t_max: t })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// sqrt(x) + 1/sqrt(x) in floating point.
    pub fn big_x(&self) -> f64 {
        self.x.sqrt() + 1.0 / self.x.sqrt()
    }

    pub fn t_min(&self) -> u64 {
        3
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn contains(&self, t: u64) -> bool {
        (3..=self.t_max).contains(&t)
    }

    pub fn traces(&self) -> std::ops::RangeInclusive<u64> {
        3..=self.t_max
    }
}

/// N(P) = ((t + sqrt(t^2 - 4))/2)^2.
pub fn norm_of_trace<T: RealScalar>(t: u64) -> T {
    assert!(t >= 3, "hyperbolic traces start at 3");
    let tt = T::of(t as f64);
    let lambda = (tt + (tt * tt - T::of(4.0)).sqrt()) / T::of(2.0);
    lambda * lambda
}

/// How per-trace weights were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// 2 sum_{d u^2 = t^2-4} h(d) log eps_d.
    ClassNumber,
    /// 2 sqrt(t^2-4) L(1, t^2-4).
    Zagier,
}

/// Quantized weight of every trace up to `t_max`.
#[derive(Debug, Clone)]
pub struct TraceWeights {
    route: Route,
    weights: Vec<ExactSum>,
}

impl TraceWeights {
    /// Class-number route. Missing class records are computed (in parallel)
    /// and memoized in `cache`.
    pub fn class_route(t_max: u64, cache: &ClassCache) -> Result<Self, GeodesicError> {
        let decomps: Vec<Vec<_>> = (3..=t_max.max(2))
            .into_par_iter()
            .map(pell_decompositions)
            .collect::<Result<_, _>>()?;
        cache.ensure(decomps.iter().flatten().map(|pd| pd.d))?;
        let per_trace: Vec<ExactSum> = decomps
            .par_iter()
            .map(|ds| {
                let mut total = 0.0f64;
                for pd in ds {
                    total += cache.get(pd.d)?.weight();
                }
                Ok(ExactSum::quantize(2.0 * total))
            })
            .collect::<Result<_, QuadraticError>>()?;
        Ok(Self::assemble(Route::ClassNumber, per_trace))
    }

    /// L-series route; O(t^2) per trace.
    pub fn zagier_route(t_max: u64) -> Result<Self, GeodesicError> {
        let per_trace: Vec<ExactSum> = (3..=t_max.max(2))
            .into_par_iter()
            .map(|t| {
                let delta = Discriminant::of_trace(t)?;
                let l: f64 = l1_zagier(&delta)?;
                Ok(ExactSum::quantize(2.0 * ((t * t - 4) as f64).sqrt() * l))
            })
            .collect::<Result<_, GeodesicError>>()?;
        Ok(Self::assemble(Route::Zagier, per_trace))
    }

    fn assemble(route: Route, per_trace: Vec<ExactSum>) -> Self {
        let mut weights = vec![ExactSum::ZERO; 3];
        weights.extend(per_trace);
        TraceWeights { route, weights }
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn t_max(&self) -> u64 {
        (self.weights.len() - 1) as u64
    }

    /// Weight of trace t (zero below 3).
    pub fn weight(&self, t: u64) -> ExactSum {
        self.weights[t as usize]
    }

    fn check(&self, window: &TraceWindow) -> Result<(), GeodesicError> {
        if window.t_max() > self.t_max() {
            return Err(GeodesicError::WindowTooLarge {
                have: self.t_max(),
                need: window.t_max(),
            });
        }
        Ok(())
    }

    /// Sum of weights over traces in the window satisfying `keep`.
    pub fn sum_where(
        &self,
        window: &TraceWindow,
        keep: impl Fn(u64) -> bool,
    ) -> Result<ExactSum, GeodesicError> {
        self.check(window)?;
        Ok(window
            .traces()
            .filter(|&t| keep(t))
            .map(|t| self.weights[t as usize])
            .sum())
    }

    pub fn psi(&self, window: &TraceWindow) -> Result<ExactSum, GeodesicError> {
        self.sum_where(window, |_| true)
    }

    pub fn psi_ap(&self, window: &TraceWindow, p: u64, a: u64) -> Result<ExactSum, GeodesicError> {
        check_odd_prime(p)?;
        let a = a % p;
        self.sum_where(window, |t| t % p == a)
    }

    /// Traces with v_p(t - s) = k, where s in {2, -2} is the representative
    /// of a; these partition the traces t = a mod p.
    pub fn psi_piece(
        &self,
        window: &TraceWindow,
        p: u64,
        a: u64,
        k: u32,
    ) -> Result<ExactSum, GeodesicError> {
        let s = plus_minus_two(p, a)?;
        if k == 0 {
            return Err(GeodesicError::ZeroValuation);
        }
        self.sum_where(window, |t| valuation(p, t as i64 - s) == k)
    }

    /// 2 sum_{t = r mod p^n} sqrt(t^2-4) L^p(1, t^2-4): each trace weight
    /// divided by its Euler factor at p.
    pub fn psi_star(
        &self,
        window: &TraceWindow,
        p: u64,
        n: u32,
        r: u64,
    ) -> Result<ExactSum, GeodesicError> {
        check_odd_prime(p)?;
        self.check(window)?;
        let modulus = p.pow(n);
        let r = r % modulus;
        window
            .traces()
            .filter(|t| t % modulus == r)
            .map(|t| {
                let delta = Discriminant::of_trace(t)?;
                let factor: f64 = euler_factor_at_p(&delta, p, 1.0)?;
                Ok(ExactSum::quantize(
                    self.weights[t as usize].to_f64() / factor,
                ))
            })
            .sum::<Result<ExactSum, GeodesicError>>()
    }
}

/// The signed representative (2 or -2) of a residue a = +-2 mod p.
pub fn plus_minus_two(p: u64, a: u64) -> Result<i64, GeodesicError> {
    check_odd_prime(p)?;
    match a % p {
        r if r == 2 % p => Ok(2),
        r if r == p - 2 => Ok(-2),
        _ => Err(GeodesicError::NotPlusMinusTwo { p, a }),
    }
}

fn zagier_weights(window: &TraceWindow) -> Result<TraceWeights, GeodesicError> {
    if window.x() > ZAGIER_ROUTE_MAX_X {
        return Err(GeodesicError::ZagierRouteLimit { x: window.x() });
    }
    TraceWeights::zagier_route(window.t_max())
}

/// Psi(x) by the class-number route.
pub fn psi(x: f64, cache: &ClassCache) -> Result<f64, GeodesicError> {
    let window = TraceWindow::new(x)?;
    Ok(TraceWeights::class_route(window.t_max(), cache)?
        .psi(&window)?
        .to_f64())
}

/// Psi(x; p, a) by the class-number route.
pub fn psi_ap(x: f64, p: u64, a: u64, cache: &ClassCache) -> Result<f64, GeodesicError> {
    check_odd_prime(p)?;
    let window = TraceWindow::new(x)?;
    Ok(TraceWeights::class_route(window.t_max(), cache)?
        .psi_ap(&window, p, a)?
        .to_f64())
}

/// Psi(x; p, a) by the L-series route (x <= 1e7).
pub fn psi_ap_zagier(x: f64, p: u64, a: u64) -> Result<f64, GeodesicError> {
    check_odd_prime(p)?;
    let window = TraceWindow::new(x)?;
    Ok(zagier_weights(&window)?.psi_ap(&window, p, a)?.to_f64())
}

/// Psi*(x; p^n, r) by the L-series route (x <= 1e7).
pub fn psi_star(x: f64, p: u64, n: u32, r: u64) -> Result<f64, GeodesicError> {
    check_odd_prime(p)?;
    let window = TraceWindow::new(x)?;
    Ok(zagier_weights(&window)?
        .psi_star(&window, p, n, r)?
        .to_f64())
}

/// Psi(x; p, a; k) by the class-number route.
pub fn psi_piece(x: f64, p: u64, a: u64, k: u32, cache: &ClassCache) -> Result<f64, GeodesicError> {
    plus_minus_two(p, a)?;
    let window = TraceWindow::new(x)?;
    Ok(TraceWeights::class_route(window.t_max(), cache)?
        .psi_piece(&window, p, a, k)?
        .to_f64())
}

/// Predicted density of Psi(x; p, a)/x, keyed by the symbol of a^2 - 4 mod p.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPrediction<Q> {
    pub p: u64,
    pub a: u64,
    pub symbol: i32,
    pub density: Q,
}

/// Density of one symbol class: 1/(p-1), 1/(p+1) or p/(p^2-1).
pub fn symbol_density<Q: ExactScalar>(p: u64, symbol: i32) -> Q {
    let pq = Q::from_int(p as i64);
    match symbol {
        1 => Q::one() / (pq - Q::one()),
        -1 => Q::one() / (pq + Q::one()),
        _ => pq.clone() / (pq.clone() * pq - Q::one()),
    }
}

pub fn predicted_density<Q: ExactScalar>(
    p: u64,
    a: u64,
) -> Result<DensityPrediction<Q>, GeodesicError> {
    check_odd_prime(p)?;
    let a = a % p;
    let symbol = kronecker((a * a) as i64 - 4, p as i64);
    Ok(DensityPrediction {
        p,
        a,
        symbol,
        density: symbol_density(p, symbol),
    })
}

/// Number of residues a mod p with the given symbol of a^2 - 4.
pub fn symbol_class_size(p: u64, symbol: i32) -> u64 {
    match symbol {
        1 => (p - 3) / 2,
        -1 => (p - 1) / 2,
        _ => 2,
    }
}

/// Combined density of all residues with the given symbol:
/// (p-3)/(2(p-1)), (p-1)/(2(p+1)), 2p/(p^2-1).
pub fn aggregate_density<Q: ExactScalar>(p: u64, symbol: i32) -> Result<Q, GeodesicError> {
    check_odd_prime(p)?;
    Ok(Q::from_int(symbol_class_size(p, symbol) as i64) * symbol_density::<Q>(p, symbol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// k = 2n - 1.
    Odd,
    /// k = 2n.
    Even,
}

/// Coefficient of x in the k-th valuation piece of a = +-2:
/// p^(1-2n) - p^(1-3n) for k = 2n-1, p^(-2n) - p^(-3n)/(p+1) for k = 2n.
pub fn predicted_piece_coefficient<Q: ExactScalar>(
    p: u64,
    n: u32,
    parity: Parity,
) -> Result<Q, GeodesicError> {
    check_odd_prime(p)?;
    if n == 0 {
        return Err(GeodesicError::ZeroValuation);
    }
    let pq = Q::from_int(p as i64);
    let inv_pow = |e: u32| Q::one() / Q::pow_u32(&pq, e);
    Ok(match parity {
        Parity::Odd => inv_pow(2 * n - 1) - inv_pow(3 * n - 1),
        Parity::Even => inv_pow(2 * n) - inv_pow(3 * n) / (pq.clone() + Q::one()),
    })
}

/// Coefficient for valuation index k >= 1.
pub fn piece_coefficient_for_k<Q: ExactScalar>(p: u64, k: u32) -> Result<Q, GeodesicError> {
    if k == 0 {
        return Err(GeodesicError::ZeroValuation);
    }
    if k % 2 == 1 {
        predicted_piece_coefficient(p, k.div_ceil(2), Parity::Odd)
    } else {
        predicted_piece_coefficient(p, k / 2, Parity::Even)
    }
}
