//! Expansion coefficients `A_j(t)` at `t = e^gamma` (outer) or
//! `t = e^{i gamma}` (oscillatory).
//!
//! Pipeline: local Taylor data of the amplitude (`a_k`) and of the phase
//! (`b_m`), a polynomial recursion for `Q_j(tau)`, then Gamma moments
//!
//! ```text
//! A_j = (-1)^j / sqrt(pi) * lambda^j * sum_m q_m lambda^m Gamma(j + m + 1/2),
//! lambda = (t^2 - 1) / t^2,  Q_{2j}(tau) = sum_m q_m tau^m.
//! ```
//!
//! Only half-integer Gamma values occur, so `Gamma(k + 1/2)/sqrt(pi)` is
//! formed exactly as `prod_{i<k} (i + 1/2)` and the `sqrt(pi)` cancels.

mod dd;
pub mod fit;
mod poly;

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use dd::{Dd, DdComplex};
pub use fit::coefficient_fit_oracle;
pub use poly::DensePolynomial;

use crate::error::{Error, Result};
use crate::params::{Parameters, RegionPoint};

/// Orders above this always use double-double arithmetic under [`Precision::Auto`].
pub const AUTO_DD_ORDER: usize = 6;
/// Cancellation ratio that switches [`Precision::Auto`] to double-double.
pub const AUTO_DD_CANCELLATION: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Precision {
    Binary64,
    DoubleDouble,
    /// Binary64 unless the order or the observed cancellation calls for more.
    Auto,
}

/// Scalar field the engine runs in.
trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;

    fn from_f64(x: f64) -> Self {
        Self::from_c64(Complex64::new(x, 0.0))
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn norm(self) -> f64 {
        self.to_c64().norm()
    }
}

impl Scalar for Complex64 {
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}

impl Scalar for DdComplex {
    fn from_c64(z: Complex64) -> Self {
        DdComplex::from_c64(z)
    }
    fn to_c64(self) -> Complex64 {
        DdComplex::to_c64(self)
    }
}

fn check_pole(t: Complex64) -> Result<()> {
    let bad = [
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    if !t.re.is_finite() || !t.im.is_finite() || bad.contains(&t) {
        Err(Error::Pole { re: t.re, im: t.im })
    } else {
        Ok(())
    }
}

fn rising<S: Scalar>(a: S, k: usize) -> S {
    (0..k).fold(S::one(), |acc, i| acc * (a + S::from_f64(i as f64)))
}

/// Pochhammer symbol `a (a+1) ... (a+k-1)`; the empty product is 1.
pub fn rising_factorial(a: Complex64, k: usize) -> Complex64 {
    rising(a, k)
}

/// `Gamma(k + 1/2) / sqrt(pi) = prod_{i<k} (i + 1/2)`.
fn half_gamma_ratio<S: Scalar>(k: usize) -> S {
    (0..k).fold(S::one(), |acc, i| acc * S::from_f64(i as f64 + 0.5))
}

/// Taylor data of the amplitude: `a_0..=a_kmax`, plus the largest term
/// magnitude seen in each sum (for the cancellation metric).
fn a_series<S: Scalar>(t: S, kmax: usize, params: Parameters) -> (Vec<S>, Vec<f64>) {
    let one = S::one();
    let u = t / (t - one);
    let v = t / (t + one);
    let w = S::from_f64(2.0) * t * t / (t * t - one);
    let (ma, mb) = (S::from_f64(-params.alpha), S::from_f64(-params.beta));
    // a_k = sum_{i=0..k} sum_{j=0..k-i} [(-a)_i/i! u^i] [(-b)_j/j! v^j] w^{k-i-j}
    let mut fa = Vec::with_capacity(kmax + 1);
    let mut fb = Vec::with_capacity(kmax + 1);
    let mut fw = Vec::with_capacity(kmax + 1);
    let (mut ca, mut cb, mut cw) = (one, one, one);
    for i in 0..=kmax {
        fa.push(ca);
        fb.push(cb);
        fw.push(cw);
        let next = S::from_f64(i as f64);
        ca = ca * (ma + next) / S::from_f64(i as f64 + 1.0) * u;
        cb = cb * (mb + next) / S::from_f64(i as f64 + 1.0) * v;
        cw = cw * w;
    }
    let mut a = Vec::with_capacity(kmax + 1);
    let mut peak = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let mut sum = S::zero();
        let mut big = 0.0_f64;
        for i in 0..=k {
            for j in 0..=(k - i) {
                let term = fa[i] * fb[j] * fw[k - i - j];
                big = big.max(term.norm());
                sum = sum + term;
            }
        }
        a.push(sum);
        peak.push(big);
    }
    (a, peak)
}

fn b_value<S: Scalar>(t: S, m: usize) -> S {
    let one = S::one();
    let two = S::from_f64(2.0);
    let mut tm = one;
    let (mut p2, mut pm, mut pp, mut d) = (one, one, one, one);
    let tt = t * t - one;
    for _ in 0..m {
        tm = tm * t;
        p2 = p2 * two;
        pm = pm * (t - one);
        pp = pp * (t + one);
        d = d * tt;
    }
    tm / S::from_f64(m as f64) * (p2 * tm - (pm + pp)) / d
}

/// `a_k(t)`: the double sum over `i = 0..=k` (outer) and `j = 0..=k-i` (inner)
/// of `2^{k-i-j} (-a)_i (-b)_j t^{2k-i-j} / (i! j! (t-1)^i (t+1)^j (t^2-1)^{k-i-j})`.
pub fn a_coeff(t: Complex64, k: usize, params: Parameters) -> Result<Complex64> {
    check_pole(t)?;
    Ok(a_series(t, k, params).0[k])
}

/// `b_m(t) = (t^m/m) (2^m t^m - ((t-1)^m + (t+1)^m)) / (t^2-1)^m`, `m >= 3`.
pub fn b_coeff(t: Complex64, m: usize) -> Result<Complex64> {
    assert!(m >= 3, "b_m is defined for m >= 3");
    check_pole(t)?;
    Ok(b_value(t, m))
}

struct RawStack<S> {
    a: Vec<S>,
    b: Vec<S>,
    q: Vec<Vec<S>>,
    /// max over coefficients of (largest contribution / |result|)
    cancellation: f64,
}

fn ratio(peak: f64, value: f64) -> f64 {
    if peak == 0.0 {
        1.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        peak / value
    }
}

fn raw_stack<S: Scalar>(t: S, params: Parameters, jmax: usize) -> RawStack<S> {
    let (a, a_peak) = a_series(t, jmax, params);
    let mut cancellation = a
        .iter()
        .zip(&a_peak)
        .map(|(v, p)| ratio(*p, v.norm()))
        .fold(1.0, f64::max);
    // b[k] holds b_{k+2}; index 0 unused
    let mut b = vec![S::zero(); jmax + 1];
    for (k, slot) in b.iter_mut().enumerate().skip(1) {
        *slot = b_value(t, k + 2);
    }
    let mut q: Vec<Vec<S>> = vec![vec![S::one()]];
    for j in 1..=jmax {
        let mut qj = vec![S::zero(); j + 1];
        qj[0] = a[j];
        let mut peak = vec![0.0_f64; j + 1];
        for k in 1..=j {
            for (d, c) in q[j - k].iter().enumerate() {
                let term = b[k] * *c / S::from_f64(d as f64 + 1.0);
                peak[d + 1] = peak[d + 1].max(term.norm());
                qj[d + 1] = qj[d + 1] - term;
            }
        }
        for (d, c) in qj.iter().enumerate().skip(1) {
            cancellation = cancellation.max(ratio(peak[d], c.norm()));
        }
        q.push(qj);
    }
    RawStack {
        a,
        b: b.split_off(1),
        q,
        cancellation,
    }
}

fn moments<S: Scalar>(t: S, q: &[Vec<S>], p: usize) -> (Vec<S>, f64) {
    let one = S::one();
    let lambda = (t * t - one) / (t * t);
    let mut out = Vec::with_capacity(p + 1);
    let mut cancellation = 1.0_f64;
    let mut lam_j = one;
    for j in 0..=p {
        let mut sum = S::zero();
        let mut peak = 0.0_f64;
        let mut lam_m = one;
        for (m, c) in q[2 * j].iter().enumerate() {
            let term = *c * lam_m * half_gamma_ratio::<S>(j + m);
            peak = peak.max(term.norm());
            sum = sum + term;
            lam_m = lam_m * lambda;
        }
        cancellation = cancellation.max(ratio(peak, sum.norm()));
        let sign = if j % 2 == 0 { one } else { -one };
        out.push(sign * lam_j * sum);
        lam_j = lam_j * lambda;
    }
    (out, cancellation)
}

/// `Q_0..=Q_J` from `Q_0 = 1`,
/// `Q_j(tau) = a_j - sum_{k=1..j} b_{k+2} int_0^tau Q_{j-k}(s) ds`.
pub fn q_stack(t: Complex64, params: Parameters, jmax: usize) -> Result<Vec<DensePolynomial>> {
    check_pole(t)?;
    Ok(raw_stack(t, params, jmax)
        .q
        .into_iter()
        .map(DensePolynomial::new)
        .collect())
}

/// Coefficients `A_0..=A_p` at one `t` together with the data that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub t: Complex64,
    pub params: Parameters,
    /// `lambda = (t^2 - 1) / t^2`
    pub lambda: Complex64,
    /// `a_0..=a_{2p}`
    pub a: Vec<Complex64>,
    /// `b_3..=b_{2p+2}`
    pub b: Vec<Complex64>,
    /// `Q_0..=Q_{2p}`
    pub q: Vec<DensePolynomial>,
    /// `A_0..=A_p`
    pub coeffs: Vec<Complex64>,
    /// Arithmetic the table was computed in (never `Auto`).
    pub precision: Precision,
    /// Largest ratio of an intermediate term to the sum it fed, binary64 pass.
    pub cancellation: f64,
}

impl CoefficientTable {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs[j]
    }
}

fn build<S: Scalar>(t: Complex64, params: Parameters, p: usize) -> (RawStack<S>, Vec<S>, f64) {
    let ts = S::from_c64(t);
    let stack = raw_stack(ts, params, 2 * p);
    let (coeffs, cancel) = moments(ts, &stack.q, p);
    (stack, coeffs, cancel)
}

fn to_table<S: Scalar>(
    t: Complex64,
    params: Parameters,
    stack: RawStack<S>,
    coeffs: Vec<S>,
    precision: Precision,
    cancellation: f64,
) -> CoefficientTable {
    let c = |v: Vec<S>| v.into_iter().map(S::to_c64).collect::<Vec<_>>();
    CoefficientTable {
        t,
        params,
        lambda: (t * t - 1.0) / (t * t),
        a: c(stack.a),
        b: c(stack.b),
        q: stack
            .q
            .into_iter()
            .map(|qj| DensePolynomial::new(c(qj)))
            .collect(),
        coeffs: c(coeffs),
        precision,
        cancellation,
    }
}

/// `A_0..=A_p` under an explicit [`Precision`].
pub fn expansion_coefficients_with(
    t: Complex64,
    params: Parameters,
    p: usize,
    precision: Precision,
) -> Result<CoefficientTable> {
    check_pole(t)?;
    let (stack, coeffs, cancel) = build::<Complex64>(t, params, p);
    let cancellation = stack.cancellation.max(cancel);
    let want_dd = match precision {
        Precision::Binary64 => false,
        Precision::DoubleDouble => true,
        Precision::Auto => p > AUTO_DD_ORDER || cancellation > AUTO_DD_CANCELLATION,
    };
    if want_dd {
        let (stack, coeffs, _) = build::<DdComplex>(t, params, p);
        Ok(to_table(
            t,
            params,
            stack,
            coeffs,
            Precision::DoubleDouble,
            cancellation,
        ))
    } else {
        Ok(to_table(
            t,
            params,
            stack,
            coeffs,
            Precision::Binary64,
            cancellation,
        ))
    }
}

/// `A_0..=A_p` with automatic precision selection.
pub fn expansion_coefficients(
    t: Complex64,
    params: Parameters,
    p: usize,
) -> Result<CoefficientTable> {
    expansion_coefficients_with(t, params, p, Precision::Auto)
}

/// The `t` a region point evaluates its coefficients at.
pub fn t_of(point: RegionPoint) -> Complex64 {
    match point {
        RegionPoint::Outer { gamma } => Complex64::new(gamma.exp(), 0.0),
        RegionPoint::Oscillatory { gamma } => Complex64::from_polar(1.0, gamma),
    }
}

/// Coefficient table for a region point.
pub fn coefficients_at(
    point: RegionPoint,
    params: Parameters,
    p: usize,
) -> Result<CoefficientTable> {
    expansion_coefficients(t_of(point), params, p)
}

type CacheKey = (u64, u64, u64, u64);

/// Thread-safe memo of coefficient tables keyed by `(t, alpha, beta)`.
///
/// A lookup asking for a higher order than stored recomputes and replaces the
/// entry; results never depend on lookup order because the computation is
/// deterministic.
#[derive(Debug, Default)]
pub struct CoefficientCache {
    tables: Mutex<HashMap<CacheKey, Arc<CoefficientTable>>>,
}

impl CoefficientCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(t: Complex64, params: Parameters) -> CacheKey {
        (
            t.re.to_bits(),
            t.im.to_bits(),
            params.alpha.to_bits(),
            params.beta.to_bits(),
        )
    }

    pub fn get(&self, t: Complex64, params: Parameters, p: usize) -> Result<Arc<CoefficientTable>> {
        let key = Self::key(t, params);
        if let Some(hit) = self.tables.lock().expect("cache lock").get(&key) {
            if hit.order() >= p {
                return Ok(Arc::clone(hit));
            }
        }
        let table = Arc::new(expansion_coefficients(t, params, p)?);
        let mut guard = self.tables.lock().expect("cache lock");
        let entry = guard.entry(key).or_insert_with(|| Arc::clone(&table));
        if entry.order() < p {
            *entry = Arc::clone(&table);
        }
        Ok(Arc::clone(entry))
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(a: f64, b: f64) -> Parameters {
        Parameters::new(a, b).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn rising_factorial_examples() {
        assert_eq!(rising_factorial(re(-7.3), 0), re(1.0));
        assert_eq!(rising_factorial(re(0.0), 2), re(0.0));
        assert_eq!(rising_factorial(re(0.5), 3), re(15.0 / 8.0));
    }

    #[test]
    fn a_coeff_low_orders_match_closed_forms() {
        let g: f64 = 0.9;
        let e = g.exp();
        let (al, be) = (-0.3, -0.7);
        let p = pr(al, be);
        let t = re(e);
        assert_eq!(a_coeff(t, 0, p).unwrap(), re(1.0));
        let e2 = e * e;
        // expanding the double sum, the (alpha - beta) term carries one factor of t
        let a1 = ((2.0 - al - be) * e2 - (al - be) * e) / (e2 - 1.0);
        assert!(close(a_coeff(t, 1, p).unwrap(), re(a1), 1e-14));
        let a2 = 4.0 * e2 * e2 / (e2 - 1.0).powi(2)
            - (2.0 * al * e2 * e / ((e - 1.0) * (e2 - 1.0))
                + 2.0 * be * e2 * e / ((e + 1.0) * (e2 - 1.0)))
            + (al * (al - 1.0) * e2 / (2.0 * (e - 1.0).powi(2))
                + be * (be - 1.0) * e2 / (2.0 * (e + 1.0).powi(2)))
            + al * be * e2 / (e2 - 1.0);
        assert!(close(a_coeff(t, 2, p).unwrap(), re(a2), 1e-14));
        // alpha = beta = 0: a_1 = 2 e^{2g} / (e^{2g} - 1)
        let a1_leg = a_coeff(t, 1, pr(0.0, 0.0)).unwrap();
        assert!(close(a1_leg, re(2.0 * e2 / (e2 - 1.0)), 1e-15));
    }

    #[test]
    fn b_coeff_examples() {
        let t = Complex64::from_polar(1.0, 0.8);
        let b3 = 2.0 * t.powi(4) / (t * t - 1.0).powi(2);
        assert!(close(b_coeff(t, 3).unwrap(), b3, 1e-14));
        // 16t^4 - (t-1)^4 - (t+1)^4 = 2(7t^2 + 1)(t^2 - 1)
        let b4 = t.powi(4) * (7.0 * t * t + 1.0) / (2.0 * (t * t - 1.0).powi(3));
        assert!(close(b_coeff(t, 4).unwrap(), b4, 1e-14));
        assert_eq!(b_coeff(re(2.0), 3).unwrap(), re(32.0 / 9.0));
    }

    #[test]
    fn poles_rejected() {
        for t in [re(1.0), re(-1.0), re(0.0)] {
            assert!(matches!(
                a_coeff(t, 2, pr(0.0, 0.0)),
                Err(Error::Pole { .. })
            ));
            assert!(b_coeff(t, 3).is_err());
            assert!(q_stack(t, pr(0.0, 0.0), 2).is_err());
            assert!(expansion_coefficients(t, pr(0.0, 0.0), 1).is_err());
        }
    }

    #[test]
    fn q_stack_low_orders() {
        let t = re(1.7);
        let p = pr(-0.2, -0.6);
        let q = q_stack(t, p, 2).unwrap();
        assert_eq!(q[0].coeffs(), &[re(1.0)]);
        let (a1, a2) = (a_coeff(t, 1, p).unwrap(), a_coeff(t, 2, p).unwrap());
        let (b3, b4) = (b_coeff(t, 3).unwrap(), b_coeff(t, 4).unwrap());
        assert!(close(q[1].coeffs()[0], a1, 1e-15));
        assert!(close(q[1].coeffs()[1], -b3, 1e-15));
        assert!(close(q[2].coeffs()[0], a2, 1e-15));
        assert!(close(q[2].coeffs()[1], -(a1 * b3 + b4), 1e-14));
        assert!(close(q[2].coeffs()[2], b3 * b3 / 2.0, 1e-14));
    }

    #[test]
    fn degrees_of_q_stack() {
        for t in [re(0.4f64.exp()), Complex64::from_polar(1.0, 1.1)] {
            let q = q_stack(t, pr(-0.25, -0.5), 12).unwrap();
            for (j, qj) in q.iter().enumerate() {
                assert_eq!(qj.degree(), Some(j));
            }
        }
    }

    #[test]
    fn a0_is_one_and_a1_matches_display() {
        for t in [re(1.3), Complex64::from_polar(1.0, 0.6)] {
            let p = pr(0.0, -0.5);
            let tab = expansion_coefficients(t, p, 3).unwrap();
            assert!((tab.coeff(0) - 1.0).norm() < 1e-15);
            let lam = tab.lambda;
            let (a1, a2) = (tab.a[1], tab.a[2]);
            let (b3, b4) = (tab.b[0], tab.b[1]);
            let display = -(15.0 * b3 * b3 / 16.0) * lam.powi(3)
                + (3.0 * (a1 * b3 + b4) / 4.0) * lam * lam
                - a2 / 2.0 * lam;
            assert!(close(tab.coeff(1), display, 1e-12));
        }
    }

    #[test]
    fn double_double_agrees_with_high_precision_reference() {
        // 40-digit reference (independent arbitrary-precision evaluation),
        // gamma = 0.25, alpha = 0, beta = -0.5
        let reference = [
            1.0,
            0.377_601_458_023_474_808_03,
            0.956_073_968_474_149_139_67,
            4.035_836_652_236_485_102_4,
            24.887_291_834_009_265_266,
            202.376_359_900_574_769_97,
            2_045.766_074_586_299_225_4,
            24_738.615_651_627_505_575,
            348_335.674_740_519_335_71,
        ];
        let t = re(0.25f64.exp());
        let p = pr(0.0, -0.5);
        let dd = expansion_coefficients_with(t, p, 8, Precision::DoubleDouble).unwrap();
        let f = expansion_coefficients_with(t, p, 8, Precision::Binary64).unwrap();
        assert_eq!(dd.precision, Precision::DoubleDouble);
        for (j, r) in reference.iter().enumerate() {
            let e_dd = (dd.coeff(j).re - r).abs() / r.abs();
            let e_f = (f.coeff(j).re - r).abs() / r.abs();
            assert!(e_dd < 1e-14, "dd j={j} rel err {e_dd:e}");
            if j <= 4 {
                assert!(e_f < 1e-7, "f64 j={j} rel err {e_f:e}");
            }
            assert!(dd.coeff(j).im == 0.0);
        }
    }

    #[test]
    fn auto_switches_on_order() {
        let t = re(2.0);
        let p = pr(0.0, 0.0);
        assert_eq!(
            expansion_coefficients(t, p, 2).unwrap().precision,
            Precision::Binary64
        );
        assert_eq!(
            expansion_coefficients(t, p, AUTO_DD_ORDER + 1)
                .unwrap()
                .precision,
            Precision::DoubleDouble
        );
    }

    #[test]
    fn oscillatory_reference_values() {
        // gamma = 0.7, alpha = 0, beta = -0.25
        let reference = [
            (1.0, 0.0),
            (-0.1875, -0.154_108_799_247_560_315_92),
            (-0.105_310_092_585_520_498_78, 0.086_686_199_576_752_677_702),
            (0.131_687_196_173_925_467_61, 0.174_741_015_857_740_869_29),
            (0.385_903_856_911_039_764_57, -0.264_902_469_858_437_356_4),
        ];
        let t = Complex64::from_polar(1.0, 0.7);
        let tab = expansion_coefficients(t, pr(0.0, -0.25), 4).unwrap();
        for (j, (r, i)) in reference.iter().enumerate() {
            let want = Complex64::new(*r, *i);
            assert!(close(tab.coeff(j), want, 1e-12), "j={j}: {}", tab.coeff(j));
        }
    }

    #[test]
    fn cache_returns_consistent_tables() {
        let cache = CoefficientCache::new();
        let t = re(1.5);
        let p = pr(-0.5, -0.5);
        let small = cache.get(t, p, 2).unwrap();
        let big = cache.get(t, p, 4).unwrap();
        for j in 0..3 {
            assert!((small.coeffs[j] - big.coeffs[j]).norm() < 1e-9);
        }
        let again = cache.get(t, p, 3).unwrap();
        assert!(Arc::ptr_eq(&again, &big));
        assert_eq!(cache.len(), 1);
    }
}
