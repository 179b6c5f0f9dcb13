//! Float helpers routed through `libm` so results do not depend on the
//! platform's libc.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// `ln C(n, k)` for real `0 ≤ k ≤ n`, via the gamma function.
pub(crate) fn ln_binomial(n: f64, k: f64) -> f64 {
    if k <= 0.0 || k >= n {
        return 0.0;
    }
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// `⌊log_base(x)⌋` for integer `x ≥ 1`, corrected against exact powers.
pub(crate) fn floor_log(x: u64, base: f64) -> u32 {
    debug_assert!(x >= 1 && base > 1.0);
    let xf = x as f64;
    let mut k = floor(ln(xf) / ln(base)).max(0.0) as i64;
    while k > 0 && pow(base, k as f64) > xf {
        k -= 1;
    }
    while pow(base, (k + 1) as f64) <= xf {
        k += 1;
    }
    k as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_log_matches_powers() {
        assert_eq!(floor_log(1, 1.5), 0);
        assert_eq!(floor_log(2, 2.0), 1);
        assert_eq!(floor_log(8, 2.0), 3);
        assert_eq!(floor_log(7, 2.0), 2);
        assert_eq!(floor_log(9, 3.0), 2);
    }

    #[test]
    fn ln_binomial_small() {
        assert!((ln_binomial(5.0, 2.0) - ln(10.0)).abs() < 1e-12);
        assert_eq!(ln_binomial(5.0, 0.0), 0.0);
        assert_eq!(ln_binomial(5.0, 5.0), 0.0);
    }
}
