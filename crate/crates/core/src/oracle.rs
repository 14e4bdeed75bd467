//! Ground truth by the three-term recurrence, in two flavours:
//! overflow-safe binary64 ([`ScaledReal`]) and exact rationals.
//!
//! ```text
//! 2(k+1)(k+a+b+1)(2k+a+b) P_{k+1}
//!     = (2k+a+b+1)((2k+a+b+2)(2k+a+b) x + a^2 - b^2) P_k
//!       - 2(k+a)(k+b)(2k+a+b+2) P_{k-1}
//! ```
//!
//! seeded with `P_0 = 1`, `P_1 = (a+b+2)x/2 + (a-b)/2`. Evaluation is
//! forward only.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::{Parameters, RegionPoint};
use crate::scaled::ScaledReal;

/// Default degree cap for the rational oracle.
pub const DEFAULT_RATIONAL_CAP: usize = 300;

/// `P_n^(alpha,beta)(x)` by forward recurrence in [`ScaledReal`].
pub fn jacobi_recurrence_scaled(n: usize, params: Parameters, x: f64) -> ScaledReal {
    jacobi_recurrence_trace(n, params, x)
        .pop()
        .expect("trace holds P_0..=P_n")
}

/// `P_0, ..., P_nmax` at one abscissa from a single forward pass.
pub fn jacobi_recurrence_trace(nmax: usize, params: Parameters, x: f64) -> Vec<ScaledReal> {
    let Parameters { alpha: a, beta: b } = params;
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(ScaledReal::ONE);
    if nmax == 0 {
        return out;
    }
    out.push(ScaledReal::from_f64(
        (a + b + 2.0) * x / 2.0 + (a - b) / 2.0,
    ));
    for k in 1..nmax {
        let kf = k as f64;
        let c = 2.0 * kf + a + b;
        let den = 2.0 * (kf + 1.0) * (kf + a + b + 1.0) * c;
        let lin = (c + 1.0) * ((c + 2.0) * c * x + (a * a - b * b)) / den;
        let back = 2.0 * (kf + a) * (kf + b) * (c + 2.0) / den;
        let next = out[k] * lin - out[k - 1] * back;
        out.push(next);
    }
    out
}

/// Scaled oracle at the abscissa a region point represents.
pub fn oracle_value_at(point: RegionPoint, n: usize, params: Parameters) -> ScaledReal {
    jacobi_recurrence_scaled(n, params, point.x())
}

/// Exact rational recurrence with a degree cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RationalOracle {
    pub cap: usize,
}

impl Default for RationalOracle {
    fn default() -> Self {
        RationalOracle {
            cap: DEFAULT_RATIONAL_CAP,
        }
    }
}

impl RationalOracle {
    pub fn with_cap(cap: usize) -> Self {
        RationalOracle { cap }
    }

    pub fn eval(
        &self,
        n: usize,
        alpha: &BigRational,
        beta: &BigRational,
        x: &BigRational,
    ) -> Result<BigRational> {
        Ok(self
            .trace(n, alpha, beta, x)?
            .pop()
            .expect("trace holds P_0..=P_n"))
    }

    /// `P_0..=P_nmax` exactly, from one pass.
    pub fn trace(
        &self,
        nmax: usize,
        alpha: &BigRational,
        beta: &BigRational,
        x: &BigRational,
    ) -> Result<Vec<BigRational>> {
        if nmax > self.cap {
            return Err(Error::DegreeCap {
                n: nmax,
                cap: self.cap,
            });
        }
        let minus_one = -BigRational::one();
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if v <= &minus_one {
                return Err(Error::ExponentOutOfRange {
                    name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(recurrence_rational(nmax, alpha, beta, x))
    }
}

fn int(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn recurrence_rational(
    nmax: usize,
    a: &BigRational,
    b: &BigRational,
    x: &BigRational,
) -> Vec<BigRational> {
    let one = BigRational::one();
    let two = int(2);
    let mut out = vec![one.clone()];
    if nmax == 0 {
        return out;
    }
    out.push((a + b + &two) * x / &two + (a - b) / &two);
    let diff_sq = a * a - b * b;
    for k in 1..nmax {
        let kq = int(k);
        let c = &two * &kq + a + b;
        let den = &two * (&kq + &one) * (&kq + a + b + &one) * &c;
        let lin = (&c + &one) * ((&c + &two) * &c * x + &diff_sq);
        let back = &two * (&kq + a) * (&kq + b) * (&c + &two);
        let next = (lin * &out[k] - back * &out[k - 1]) / den;
        out.push(next);
    }
    out
}

/// Exact `P_n^(alpha,beta)(x)` with the default cap.
pub fn jacobi_recurrence_rational(
    n: usize,
    alpha: &BigRational,
    beta: &BigRational,
    x: &BigRational,
) -> Result<BigRational> {
    RationalOracle::default().eval(n, alpha, beta, x)
}

/// `P_n^(alpha,beta)(1) = C(n+alpha, n) = prod_{i=1..n} (alpha+i)/i`.
pub fn binomial_at_one(n: usize, alpha: &BigRational) -> BigRational {
    (1..=n).fold(BigRational::one(), |acc, i| acc * (alpha + int(i)) / int(i))
}

/// Exact binary64 value as a rational.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite binary64 input")
}

/// Rational to [`ScaledReal`], correctly rounded to ~1 ulp regardless of size.
pub fn rational_to_scaled(r: &BigRational) -> ScaledReal {
    if r.is_zero() {
        return ScaledReal::ZERO;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    // aim for a ~66-bit integer quotient
    let shift = 66 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << (shift as usize)) / den
    } else {
        num / (den << ((-shift) as usize))
    };
    let m = q.to_f64().expect("quotient fits binary64");
    let m = if r.numer().sign() == Sign::Minus {
        -m
    } else {
        m
    };
    ScaledReal::new(m, -shift)
}
