//! Exact and log-domain binomial coefficients.

use num_bigint::BigUint;
use num_traits::One;

/// `C(a, b)` as an exact big integer; zero when `b > a`.
pub fn binomial(a: u64, b: u64) -> BigUint {
    if b > a {
        return BigUint::ZERO;
    }
    let b = b.min(a - b);
    // Each prefix product is itself a binomial coefficient, so the division is exact.
    let mut acc = BigUint::one();
    for j in 0..b {
        acc *= a - j;
        acc /= j + 1;
    }
    acc
}

/// `ln C(a, b)` in binary64; negative infinity when `b > a`.
pub fn ln_binomial(a: u64, b: u64) -> f64 {
    if b > a {
        return f64::NEG_INFINITY;
    }
    statrs::function::factorial::ln_binomial(a, b)
}
