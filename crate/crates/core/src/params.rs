//! Exponent pairs, region points, hypothesis checks, and the reduction of a
//! general `(alpha, beta, x)` to the canonical box `-1 < beta <= alpha <= 0`,
//! `x >= 0`.
//!
//! Reduction uses the reflection `P_n^(a,b)(-x) = (-1)^n P_n^(b,a)(x)` and the
//! two contiguous relations that lower one exponent by one at the cost of a
//! second degree:
//!
//! ```text
//! P_m^(a+1,b)(x) = 2/(2m+a+b+2) * ((m+a+1) P_m^(a,b)(x) - (m+1) P_{m+1}^(a,b)(x)) / (1-x)
//! P_m^(a,b+1)(x) = 2/(2m+a+b+2) * ((m+b+1) P_m^(a,b)(x) + (m+1) P_{m+1}^(a,b)(x)) / (1+x)
//! ```
//!
//! A chain of `d` shifts therefore needs canonical values at degrees
//! `n, n+1, ..., n+d`; [`Canonical::replay`] folds them back.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::scaled::ScaledReal;

/// Longest shift chain `evaluate_general` accepts.
pub const MAX_REDUCTION_DEPTH: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub alpha: f64,
    pub beta: f64,
}

impl Parameters {
    /// Checked constructor: both exponents finite and `> -1`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        finite("alpha", alpha)?;
        finite("beta", beta)?;
        if alpha <= -1.0 {
            return Err(Error::ExponentOutOfRange {
                name: "alpha",
                value: alpha,
            });
        }
        if beta <= -1.0 {
            return Err(Error::ExponentOutOfRange {
                name: "beta",
                value: beta,
            });
        }
        Ok(Parameters { alpha, beta })
    }

    pub fn swapped(self) -> Self {
        Parameters {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    /// Whether `-1 < beta <= alpha <= 0`.
    pub fn in_canonical_box(&self) -> bool {
        -1.0 < self.beta && self.beta <= self.alpha && self.alpha <= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Outer,
    #[serde(rename = "osc")]
    Oscillatory,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Outer => "outer",
            Region::Oscillatory => "osc",
        })
    }
}

impl FromStr for Region {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "outer" => Ok(Region::Outer),
            "osc" | "oscillatory" => Ok(Region::Oscillatory),
            other => Err(format!("unknown region `{other}` (expected outer|osc)")),
        }
    }
}

/// An abscissa written as `x = cosh(gamma)` (outer) or `x = cos(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegionPoint {
    Outer { gamma: f64 },
    Oscillatory { gamma: f64 },
}

impl RegionPoint {
    pub fn outer(gamma: f64) -> Result<Self> {
        finite("gamma", gamma)?;
        if gamma > 0.0 {
            Ok(RegionPoint::Outer { gamma })
        } else {
            Err(Error::GammaOutOfRange {
                gamma,
                region: "outer",
                range: "(0, inf)",
            })
        }
    }

    pub fn oscillatory(gamma: f64) -> Result<Self> {
        finite("gamma", gamma)?;
        if gamma > 0.0 && gamma <= FRAC_PI_2 {
            Ok(RegionPoint::Oscillatory { gamma })
        } else {
            Err(Error::GammaOutOfRange {
                gamma,
                region: "oscillatory",
                range: "(0, pi/2]",
            })
        }
    }

    pub fn new(region: Region, gamma: f64) -> Result<Self> {
        match region {
            Region::Outer => Self::outer(gamma),
            Region::Oscillatory => Self::oscillatory(gamma),
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            RegionPoint::Outer { gamma } | RegionPoint::Oscillatory { gamma } => gamma,
        }
    }

    pub fn region(&self) -> Region {
        match self {
            RegionPoint::Outer { .. } => Region::Outer,
            RegionPoint::Oscillatory { .. } => Region::Oscillatory,
        }
    }

    /// The represented abscissa, rounded to binary64.
    pub fn x(&self) -> f64 {
        match *self {
            RegionPoint::Outer { gamma } => gamma.cosh(),
            RegionPoint::Oscillatory { gamma } => gamma.cos(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReductionKind {
    Reflect,
    ShiftAlphaDown,
    ShiftBetaDown,
}

/// One recorded reduction. `alpha`/`beta` are the exponents *before* the step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub kind: ReductionKind,
    pub alpha: f64,
    pub beta: f64,
}

/// A single failed hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisFailure {
    NonFinite,
    AlphaNotAboveMinusOne,
    BetaNotAboveMinusOne,
    AlphaPositive,
    BetaAboveAlpha,
    GammaNotPositive,
    GammaAboveHalfPi,
}

impl HypothesisFailure {
    pub fn describe(&self) -> &'static str {
        match self {
            HypothesisFailure::NonFinite => "inputs must be finite",
            HypothesisFailure::AlphaNotAboveMinusOne => "alpha must exceed -1",
            HypothesisFailure::BetaNotAboveMinusOne => {
                "beta must exceed -1 (the constants carry (beta+1) denominators)"
            }
            HypothesisFailure::AlphaPositive => "alpha must be <= 0",
            HypothesisFailure::BetaAboveAlpha => "beta must be <= alpha",
            HypothesisFailure::GammaNotPositive => "gamma must be > 0",
            HypothesisFailure::GammaAboveHalfPi => "gamma must be <= pi/2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub region: Region,
    pub valid: bool,
    pub failures: Vec<HypothesisFailure>,
    /// Shift steps that bring both exponents into `(-1, 0]`.
    pub repair: Vec<ReductionKind>,
    /// Failures that survive the repair; empty iff the repair reaches the box.
    pub unrepaired: Vec<HypothesisFailure>,
}

impl ValidityReport {
    pub fn repairable(&self) -> bool {
        !self.valid && self.unrepaired.is_empty()
    }

    /// One-line summary of the failures, for error messages.
    pub fn reason(&self) -> String {
        self.failures
            .iter()
            .map(HypothesisFailure::describe)
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn into_result(self) -> Result<()> {
        if self.valid {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "{} region: {}",
                self.region,
                self.reason()
            )))
        }
    }
}

fn exponent_failures(alpha: f64, beta: f64) -> Vec<HypothesisFailure> {
    let mut out = Vec::new();
    if alpha <= -1.0 {
        out.push(HypothesisFailure::AlphaNotAboveMinusOne);
    }
    if beta <= -1.0 {
        out.push(HypothesisFailure::BetaNotAboveMinusOne);
    }
    if alpha > 0.0 {
        out.push(HypothesisFailure::AlphaPositive);
    }
    if beta > alpha {
        out.push(HypothesisFailure::BetaAboveAlpha);
    }
    out
}

fn shift_count(e: f64) -> usize {
    if e > 0.0 {
        e.ceil() as usize
    } else {
        0
    }
}

fn validate(region: Region, params: Parameters, gamma: f64) -> ValidityReport {
    let Parameters { alpha, beta } = params;
    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
        return ValidityReport {
            region,
            valid: false,
            failures: vec![HypothesisFailure::NonFinite],
            repair: Vec::new(),
            unrepaired: vec![HypothesisFailure::NonFinite],
        };
    }
    let mut gamma_failures = Vec::new();
    if gamma <= 0.0 {
        gamma_failures.push(HypothesisFailure::GammaNotPositive);
    }
    if region == Region::Oscillatory && gamma > FRAC_PI_2 {
        gamma_failures.push(HypothesisFailure::GammaAboveHalfPi);
    }
    let mut failures = exponent_failures(alpha, beta);
    failures.extend(&gamma_failures);

    let mut repair = Vec::new();
    let mut unrepaired = gamma_failures;
    if alpha > -1.0 && beta > -1.0 {
        let (ka, kb) = (shift_count(alpha), shift_count(beta));
        repair.extend(std::iter::repeat_n(ReductionKind::ShiftAlphaDown, ka));
        repair.extend(std::iter::repeat_n(ReductionKind::ShiftBetaDown, kb));
        let mut rest = exponent_failures(alpha - ka as f64, beta - kb as f64);
        rest.append(&mut unrepaired);
        unrepaired = rest;
    } else {
        unrepaired = failures.clone();
    }
    ValidityReport {
        region,
        valid: failures.is_empty(),
        failures,
        repair,
        unrepaired,
    }
}

/// Checks `-1 < beta <= alpha <= 0` and `gamma > 0`.
pub fn validate_outer(params: Parameters, gamma: f64) -> ValidityReport {
    validate(Region::Outer, params, gamma)
}

/// Checks `-1 < alpha <= 0`, `-1 < beta <= alpha` and `0 < gamma <= pi/2`.
///
/// `beta > -1` is required even where the oscillatory statement leaves it
/// implicit: its constant divides by `beta + 1` and evaluates `B(alpha+1, beta+1)`.
pub fn validate_oscillatory(params: Parameters, gamma: f64) -> ValidityReport {
    validate(Region::Oscillatory, params, gamma)
}

pub fn validate_point(params: Parameters, point: RegionPoint) -> ValidityReport {
    validate(point.region(), params, point.gamma())
}

/// Field operations needed to replay a reduction chain.
pub trait ReplayField:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
}

impl ReplayField for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl ReplayField for ScaledReal {
    fn from_i64(v: i64) -> Self {
        ScaledReal::from_f64(v as f64)
    }
}

impl ReplayField for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }
}

/// Result of [`canonicalize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    /// Exponents after every reduction.
    pub params: Parameters,
    pub point: RegionPoint,
    /// The abscissa after reflection (`>= 0`).
    pub x: f64,
    /// Steps in the order they were applied to the input.
    pub steps: Vec<ReductionStep>,
}

impl Canonical {
    pub fn reflected(&self) -> bool {
        self.steps.iter().any(|s| s.kind == ReductionKind::Reflect)
    }

    /// Number of shift steps; the replay needs `depth + 1` leaf degrees.
    pub fn depth(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.kind != ReductionKind::Reflect)
            .count()
    }

    /// Folds canonical values `leaves[k] = P_{n+k}^(canonical)(x)` for
    /// `k = 0..=depth` back into the value of the original polynomial.
    ///
    /// `x`, `alpha`, `beta` are the canonical abscissa and exponents expressed
    /// in the replay field, so exact rational replays stay exact.
    pub fn replay<T: ReplayField>(&self, n: usize, leaves: &[T], x: &T, alpha: &T, beta: &T) -> T {
        assert_eq!(
            leaves.len(),
            self.depth() + 1,
            "replay needs one leaf per degree n..=n+depth"
        );
        let one = T::from_i64(1);
        let two = T::from_i64(2);
        let mut level: Vec<T> = leaves.to_vec();
        let (mut a, mut b) = (alpha.clone(), beta.clone());
        for step in self.steps.iter().rev() {
            let (raise_alpha, denom) = match step.kind {
                ReductionKind::Reflect => continue,
                ReductionKind::ShiftAlphaDown => (true, one.clone() - x.clone()),
                ReductionKind::ShiftBetaDown => (false, one.clone() + x.clone()),
            };
            let next: Vec<T> = level
                .windows(2)
                .enumerate()
                .map(|(k, pair)| {
                    let m = T::from_i64((n + k) as i64);
                    let scale = two.clone()
                        / (two.clone() * m.clone() + a.clone() + b.clone() + two.clone());
                    let lower = if raise_alpha { &a } else { &b };
                    let c0 = m.clone() + lower.clone() + one.clone();
                    let c1 = m + one.clone();
                    let body = if raise_alpha {
                        c0 * pair[0].clone() - c1 * pair[1].clone()
                    } else {
                        c0 * pair[0].clone() + c1 * pair[1].clone()
                    };
                    scale * body / denom.clone()
                })
                .collect();
            level = next;
            if raise_alpha {
                a = a + one.clone();
            } else {
                b = b + one.clone();
            }
        }
        debug_assert_eq!(level.len(), 1);
        let value = level.pop().expect("non-empty replay level");
        if self.reflected() && n % 2 == 1 {
            -value
        } else {
            value
        }
    }

    /// Linear weights `w_k` with `P_n(original) = sum_k w_k * leaves[k]`.
    pub fn leaf_weights(&self, n: usize) -> Vec<f64> {
        let d = self.depth();
        (0..=d)
            .map(|k| {
                let unit: Vec<f64> = (0..=d).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
                self.replay(n, &unit, &self.x, &self.params.alpha, &self.params.beta)
            })
            .collect()
    }
}

/// Reduces `(params, x)` to `x >= 0` and exponents in `(-1, 0]`.
///
/// The result may still have `beta > alpha` (e.g. `alpha = 0.5, beta = 0`
/// lands on `(-0.5, 0)`); the contiguous relations cannot restore the
/// ordering, so callers check [`Parameters::in_canonical_box`].
pub fn canonicalize(params: Parameters, x: f64) -> Result<Canonical> {
    finite("x", x)?;
    let params = Parameters::new(params.alpha, params.beta)?;
    if x.abs() == 1.0 {
        return Err(Error::Endpoint(x));
    }
    let mut steps = Vec::new();
    let (mut p, mut x) = (params, x);
    if x < 0.0 {
        steps.push(ReductionStep {
            kind: ReductionKind::Reflect,
            alpha: p.alpha,
            beta: p.beta,
        });
        p = p.swapped();
        x = -x;
    }
    while p.alpha > 0.0 {
        steps.push(ReductionStep {
            kind: ReductionKind::ShiftAlphaDown,
            alpha: p.alpha,
            beta: p.beta,
        });
        p.alpha -= 1.0;
    }
    while p.beta > 0.0 {
        steps.push(ReductionStep {
            kind: ReductionKind::ShiftBetaDown,
            alpha: p.alpha,
            beta: p.beta,
        });
        p.beta -= 1.0;
    }
    let point = if x > 1.0 {
        RegionPoint::outer(x.acosh())?
    } else if x == 0.0 {
        RegionPoint::Oscillatory { gamma: FRAC_PI_2 }
    } else {
        RegionPoint::oscillatory(x.acos())?
    };
    Ok(Canonical {
        params: p,
        point,
        x,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pr(a: f64, b: f64) -> Parameters {
        Parameters::new(a, b).unwrap()
    }

    #[test]
    fn outer_validity_examples() {
        assert!(validate_outer(pr(0.0, 0.0), 1.0).valid);
        assert!(validate_outer(pr(-0.5, -0.5), 0.3).valid);

        let r = validate_outer(pr(0.5, 0.0), 1.0);
        assert!(!r.valid);
        assert_eq!(r.failures, vec![HypothesisFailure::AlphaPositive]);
        assert_eq!(r.repair, vec![ReductionKind::ShiftAlphaDown]);
        // (-0.5, 0) after the shift: ordering cannot be restored
        assert_eq!(r.unrepaired, vec![HypothesisFailure::BetaAboveAlpha]);

        let r = validate_outer(pr(1.7, 0.5), 2.0);
        assert_eq!(
            r.repair,
            vec![
                ReductionKind::ShiftAlphaDown,
                ReductionKind::ShiftAlphaDown,
                ReductionKind::ShiftBetaDown
            ]
        );
        assert!(r.repairable());

        let r = validate_outer(pr(0.0, 0.0), 0.0);
        assert_eq!(r.failures, vec![HypothesisFailure::GammaNotPositive]);
        assert!(!r.repairable());
    }

    #[test]
    fn oscillatory_validity_examples() {
        assert!(validate_oscillatory(pr(-0.5, -0.5), 1.0).valid);
        assert!(validate_oscillatory(pr(0.0, -0.25), FRAC_PI_2).valid);
        let r = validate_oscillatory(
            Parameters {
                alpha: -0.25,
                beta: -1.0,
            },
            1.0,
        );
        assert!(!r.valid);
        assert!(r
            .failures
            .contains(&HypothesisFailure::BetaNotAboveMinusOne));
        assert!(!r.repairable());
        let r = validate_oscillatory(pr(0.0, 0.0), 1.6);
        assert_eq!(r.failures, vec![HypothesisFailure::GammaAboveHalfPi]);
    }

    #[test]
    fn validate_is_pure() {
        let p = pr(0.3, -0.2);
        let a = validate_outer(p, 0.7);
        let b = validate_outer(p, 0.7);
        assert_eq!(a, b);
        assert_eq!(p, pr(0.3, -0.2));
    }

    #[test]
    fn canonicalize_examples() {
        let c = canonicalize(pr(0.0, 0.0), -2.0).unwrap();
        assert_eq!(c.steps.len(), 1);
        assert_eq!(c.steps[0].kind, ReductionKind::Reflect);
        assert_eq!(
            c.point,
            RegionPoint::Outer {
                gamma: 2f64.acosh()
            }
        );

        let c = canonicalize(pr(0.0, 0.0), 1.25).unwrap();
        assert!(c.steps.is_empty());
        assert_eq!(c.params, pr(0.0, 0.0));

        let c = canonicalize(pr(1.2, 0.0), 2.0).unwrap();
        assert_eq!(c.depth(), 2);
        assert!(c
            .steps
            .iter()
            .all(|s| s.kind == ReductionKind::ShiftAlphaDown));
        assert!((c.params.alpha - (-0.8)).abs() < 1e-15);

        let c = canonicalize(pr(0.0, 0.0), 0.0).unwrap();
        assert_eq!(c.point, RegionPoint::Oscillatory { gamma: PI / 2.0 });
        let c = canonicalize(pr(-0.3, -0.6), -0.4).unwrap();
        assert!(c.reflected());
        assert_eq!(c.params, pr(-0.6, -0.3));
        assert_eq!(c.point.region(), Region::Oscillatory);
    }

    #[test]
    fn canonicalize_errors() {
        assert_eq!(
            canonicalize(pr(0.0, 0.0), 1.0).unwrap_err(),
            Error::Endpoint(1.0)
        );
        assert_eq!(
            canonicalize(pr(0.0, 0.0), -1.0).unwrap_err(),
            Error::Endpoint(-1.0)
        );
        assert!(matches!(
            canonicalize(
                Parameters {
                    alpha: -1.0,
                    beta: 0.0
                },
                2.0
            ),
            Err(Error::ExponentOutOfRange { name: "alpha", .. })
        ));
        assert!(canonicalize(pr(0.0, 0.0), f64::NAN).is_err());
    }

    #[test]
    fn reflect_twice_is_identity() {
        let p = pr(0.25, -0.75);
        let x = -3.5;
        let once = canonicalize(p, x).unwrap();
        let twice = canonicalize(once.params.swapped(), -once.x).unwrap();
        assert_eq!(twice.params.swapped(), once.params);
        assert_eq!(twice.x, once.x);
        assert_eq!((p.swapped().swapped(), -(-x)), (p, x));
    }

    #[test]
    fn weights_of_unreduced_chain() {
        let c = canonicalize(pr(-0.1, -0.2), 3.0).unwrap();
        assert_eq!(c.leaf_weights(7), vec![1.0]);
        let c = canonicalize(pr(-0.1, -0.2), -3.0).unwrap();
        assert_eq!(c.leaf_weights(7), vec![-1.0]);
        assert_eq!(c.leaf_weights(8), vec![1.0]);
    }
}
