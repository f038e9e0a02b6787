//! Float math that works with or without `std`, in the style of kurbo's
//! `FloatFuncs`: under `std` the inherent `f64` methods are used, otherwise
//! the `libm` ports.

#[cfg(not(feature = "std"))]
pub(crate) trait FloatMath: Sized {
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, y: Self) -> Self;
}

#[cfg(not(feature = "std"))]
impl FloatMath for f64 {
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> f64 {
        libm::expm1(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn ln_1p(self) -> f64 {
        libm::log1p(self)
    }
    #[inline]
    fn sinh(self) -> f64 {
        libm::sinh(self)
    }
    #[inline]
    fn cosh(self) -> f64 {
        libm::cosh(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn powf(self, y: f64) -> f64 {
        libm::pow(self, y)
    }
}
