//! Float helpers for `no_std` builds.

/// Rounds half away from zero; for the nonnegative passenger volumes this is
/// round-half-up.
#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn pow4(x: f64) -> f64 {
    let sq = x * x;
    sq * sq
}

/// Rounds to three decimals, the precision distances are stored with.
#[inline]
pub(crate) fn round3(x: f64) -> f64 {
    round(x * 1000.0) / 1000.0
}
