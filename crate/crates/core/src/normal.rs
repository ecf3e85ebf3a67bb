//! Standard normal distribution.
//!
//! `Φ(x) = erfc(-x/√2)/2`, with `erfc` from `libm` (the musl/FreeBSD rational
//! approximations, under one ulp). Using `erfc` rather than `1 + erf` keeps
//! full relative accuracy in the lower tail.

use libm::erfc;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}
