//! Overflow-safe reals stored as `mantissa * 2^exponent`.
//!
//! The outer-region prefactor grows like `e^{n gamma}` and leaves the binary64
//! range long before `n = 500`. Every quantity that carries that growth is
//! held as a [`ScaledReal`]: a signed mantissa with `1 <= |m| < 2` and an
//! unbounded (i64) binary exponent. The mantissa is renormalized after every
//! arithmetic step.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Exponent gap beyond which the smaller addend is dropped.
pub const ALIGN_CUTOFF_BITS: i64 = 120;

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledReal {
    mantissa: f64,
    exponent: i64,
}

/// Exact `2^e` for `e` in the normal binary64 range.
fn pow2_normal(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `x * 2^e` without intermediate overflow; saturates to inf / 0.
fn ldexp(x: f64, e: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mut x = x;
    let mut e = e;
    while e > 1023 {
        x *= pow2_normal(1023);
        e -= 1023;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1022 {
        x *= pow2_normal(-1022);
        e += 1022;
        if x == 0.0 {
            return x;
        }
    }
    x * pow2_normal(e)
}

/// Splits a finite nonzero `x` into `(m, e)` with `1 <= |m| < 2`.
fn split(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        let (m, e) = split(x * pow2_normal(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1023_u64 << 52));
    (m, raw - 1023)
}

impl ScaledReal {
    pub const ZERO: ScaledReal = ScaledReal {
        mantissa: 0.0,
        exponent: 0,
    };
    pub const ONE: ScaledReal = ScaledReal {
        mantissa: 1.0,
        exponent: 0,
    };

    /// Builds `m * 2^e` and renormalizes. Panics on a non-finite mantissa.
    pub fn new(mantissa: f64, exponent: i64) -> Self {
        assert!(
            mantissa.is_finite(),
            "ScaledReal mantissa must be finite, got {mantissa}"
        );
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = split(mantissa);
        ScaledReal {
            mantissa: m,
            exponent: exponent + e,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(x, 0)
    }

    /// `e^x` for any finite `x`, including arguments far outside binary64 range.
    pub fn exp(x: f64) -> Self {
        assert!(x.is_finite(), "ScaledReal::exp of non-finite {x}");
        let k = (x / std::f64::consts::LN_2).round();
        let r = (x - k * LN2_HI) - k * LN2_LO;
        Self::new(r.exp(), k as i64)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn abs(self) -> Self {
        ScaledReal {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn signum(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// Nearest binary64; saturates to `±inf` or `±0` outside the range.
    pub fn to_f64(self) -> f64 {
        ldexp(self.mantissa, self.exponent)
    }

    /// Whether [`to_f64`](Self::to_f64) is finite and not flushed to zero.
    pub fn fits_f64(&self) -> bool {
        self.is_zero() || (-1022..=1023).contains(&self.exponent)
    }

    /// Natural log of `|self|`. `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.abs().ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    pub fn log10_abs(&self) -> f64 {
        self.ln_abs() / std::f64::consts::LN_10
    }

    pub fn sqrt(self) -> Self {
        assert!(self.mantissa >= 0.0, "sqrt of negative ScaledReal");
        if self.is_zero() {
            return self;
        }
        let (m, e) = if self.exponent.rem_euclid(2) == 1 {
            (self.mantissa * 2.0, self.exponent - 1)
        } else {
            (self.mantissa, self.exponent)
        };
        Self::new(m.sqrt(), e / 2)
    }

    pub fn powi(self, k: u32) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    /// `self / other` collapsed to binary64; meant for ratios of comparable size.
    pub fn ratio(self, other: ScaledReal) -> f64 {
        (self / other).to_f64()
    }

    /// 17-significant-digit decimal, or a `~d.dde+N` log10 marker when the
    /// value does not fit binary64.
    pub fn decimal(&self) -> String {
        if self.fits_f64() {
            format!("{:.16e}", self.to_f64())
        } else {
            let l = self.log10_abs();
            let e10 = l.floor();
            let m10 = 10f64.powf(l - e10);
            let sign = if self.mantissa < 0.0 { "-" } else { "" };
            format!("~{sign}{m10:.2}e{e10:+}")
        }
    }
}

impl Default for ScaledReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for ScaledReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl fmt::Debug for ScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Display for ScaledReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16}*2^{}", self.mantissa, self.exponent)
    }
}

impl Neg for ScaledReal {
    type Output = ScaledReal;
    fn neg(self) -> ScaledReal {
        ScaledReal {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Mul for ScaledReal {
    type Output = ScaledReal;
    fn mul(self, rhs: ScaledReal) -> ScaledReal {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent)
    }
}

impl Div for ScaledReal {
    type Output = ScaledReal;
    fn div(self, rhs: ScaledReal) -> ScaledReal {
        assert!(!rhs.is_zero(), "ScaledReal division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl Add for ScaledReal {
    type Output = ScaledReal;
    fn add(self, rhs: ScaledReal) -> ScaledReal {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exponent - small.exponent;
        if gap > ALIGN_CUTOFF_BITS {
            return big;
        }
        Self::new(big.mantissa + ldexp(small.mantissa, -gap), big.exponent)
    }
}

impl Sub for ScaledReal {
    type Output = ScaledReal;
    fn sub(self, rhs: ScaledReal) -> ScaledReal {
        self + (-rhs)
    }
}

impl Mul<f64> for ScaledReal {
    type Output = ScaledReal;
    fn mul(self, rhs: f64) -> ScaledReal {
        self * ScaledReal::from_f64(rhs)
    }
}

impl Div<f64> for ScaledReal {
    type Output = ScaledReal;
    fn div(self, rhs: f64) -> ScaledReal {
        self / ScaledReal::from_f64(rhs)
    }
}

impl PartialOrd for ScaledReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = *self - *other;
        d.mantissa.partial_cmp(&0.0)
    }
}
