//! f64 math shims: std intrinsics when available, libm otherwise.

#![allow(dead_code)]

macro_rules! unary {
    ($($name:ident => $std:ident / $lm:ident;)*) => {$(
        #[cfg(feature = "std")]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            f64::$std(x)
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            libm::$lm(x)
        }
    )*};
}

unary! {
    sqrt => sqrt / sqrt;
    exp => exp / exp;
    expm1 => exp_m1 / expm1;
    ln => ln / log;
    ln1p => ln_1p / log1p;
    sin => sin / sin;
    cos => cos / cos;
    sinh => sinh / sinh;
    cosh => cosh / cosh;
    acosh => acosh / acosh;
    floor => floor / floor;
    ceil => ceil / ceil;
    round => round / round;
}

/// x^k for small nonnegative integer exponents.
#[inline(always)]
pub(crate) fn powu(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    f64::powf(x, y)
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// |x| without relying on std-only inherent methods.
#[inline(always)]
pub(crate) fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0x7fff_ffff_ffff_ffff)
}
