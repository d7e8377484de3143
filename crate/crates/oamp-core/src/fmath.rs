//! Float math routed through libm so the crate builds without std.

#![allow(dead_code)]

#[inline(always)]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline(always)]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline(always)]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline(always)]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline(always)]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
