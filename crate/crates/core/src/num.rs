//! Float helpers backed by `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// `|x|^q`, with the `q == 1` case kept exact.
#[inline]
pub(crate) fn abs_pow(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x.abs()
    } else {
        powf(x.abs(), q)
    }
}

/// `s^(1/q)`.
#[inline]
pub(crate) fn root(s: f64, q: f64) -> f64 {
    if q == 1.0 {
        s
    } else {
        powf(s, 1.0 / q)
    }
}
