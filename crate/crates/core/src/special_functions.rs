//! Exact combinatorics and the confluent hypergeometric series underpinning the
//! weighted inner products.
//!
//! Binomials and rising factorials are exact 64-bit integers with overflow reported
//! as an error; every larger combinatorial ratio in the library is formed as an
//! incremental floating-point product instead of a quotient of huge integers.

use crate::{Error, Result};

/// Binomial coefficient C(n,k) as an exact integer.
///
/// Out-of-range `k` yields 0 (the standing convention used by the basis formulas).
/// The largest value needed by the library is C(2p-2, 2i-2) at p = 25, well inside
/// the n <= 64 guarantee.
pub fn binomial(n: u64, k: i64) -> Result<u64> {
    if k < 0 || k as u64 > n {
        return Ok(0);
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc: u128 = 1;
    for j in 0..k {
        // Multiply before dividing keeps every intermediate integral:
        // acc * (n-j) is always divisible by j+1 here.
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::CombinatoricsOverflow { what: "binomial", n, k });
        }
    }
    Ok(acc as u64)
}

/// C(n,k) as f64 via the same incremental product, for indices beyond exact need.
pub fn binomial_f64(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return 0.0;
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = 1.0f64;
    for j in 0..k {
        acc *= (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Rising factorial i^(q) = i (i+1) ... (i+q-1), with i^(0) = 1.
pub fn rising_factorial(i: u64, q: u64) -> Result<u64> {
    let mut acc: u128 = 1;
    for j in 0..q {
        acc *= (i + j) as u128;
        if acc > u64::MAX as u128 {
            return Err(Error::CombinatoricsOverflow { what: "rising_factorial", n: i, k: q });
        }
    }
    Ok(acc as u64)
}

/// Default relative tolerance for [`kummer_1f1`].
pub const KUMMER_REL_TOL: f64 = 1e-15;

const KUMMER_MAX_TERMS: usize = 500;

/// Kummer's confluent hypergeometric function ₁F₁(a; b; z) for integer b > a > 0
/// and z >= 0 (the weighted-inner-product regime; z = c·h stays moderate).
///
/// Terms follow the ratio recurrence t_{n+1} = t_n (a+n) z / ((b+n)(n+1)); raw
/// factorials never appear. Summation stops once |term| <= rel_tol·|sum| holds for
/// three consecutive terms, so an accidentally tiny term cannot truncate the series.
pub fn kummer_1f1(a: u32, b: u32, z: f64, rel_tol: f64) -> Result<f64> {
    if a == 0 || b <= a {
        return Err(Error::InvalidInput(format!("kummer_1f1 needs b > a > 0, got a={a} b={b}")));
    }
    if z < 0.0 {
        return Err(Error::InvalidInput(format!("kummer_1f1 needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let mut sum = 1.0f64;
    let mut term = 1.0f64;
    let mut small_streak = 0u32;
    for n in 0..KUMMER_MAX_TERMS {
        let nf = n as f64;
        term *= (a as f64 + nf) * z / ((b as f64 + nf) * (nf + 1.0));
        sum += term;
        if term.abs() <= rel_tol * sum.abs() {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::SeriesNoConvergence { a, b, z, terms: KUMMER_MAX_TERMS })
}
