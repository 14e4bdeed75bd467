//! Truncated expansions with their certificates.
//!
//! Outer region:
//!
//! ```text
//! P_n(cosh g) = 2^{a+b} e^{g(n+a+b+1)} / ((e^g-1)^a (e^g+1)^b sqrt(n pi (e^{2g}-1)))
//!               * { sum_{j<p} A_j(e^g)/n^j + zeta_p },   |zeta_p| <= c^_p / n^p
//! ```
//!
//! Oscillatory region, with `theta = N g + kappa`:
//!
//! ```text
//! P_n(cos g) = 1 / (sin^{a+1/2}(g/2) cos^{b+1/2}(g/2) sqrt(n pi))
//!              * { sum_{j<p} Re(A_j(e^{ig}) e^{i theta})/n^j + eps_p },  |eps_p| <= c^_p / n^p
//! ```
//!
//! The braced sum is written `normalized_sum`; certificates bound the braced
//! remainder, so the absolute bound is `prefactor * certified_bound`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{c_hat_osc, c_hat_outer, osc_phase, BoundBundle};
use crate::coeffs::{coefficients_at, t_of, CoefficientTable};
use crate::error::{Error, Result};
use crate::params::{
    canonicalize, validate_point, Parameters, Region, RegionPoint, MAX_REDUCTION_DEPTH,
};
use crate::scaled::ScaledReal;

/// How the oscillatory sum combines the complex coefficients with the phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Convention {
    /// `cos(theta) sum Re(A_j)/n^j + sin(theta) sum Im(A_j)/n^j`.
    ThmDisplay,
    /// `sum Re(A_j e^{i theta})/n^j`. Matches the recurrence oracle.
    #[default]
    ConjugateDisplay,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::ThmDisplay => "thm",
            Convention::ConjugateDisplay => "conj",
        })
    }
}

impl FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "thm" => Ok(Convention::ThmDisplay),
            "conj" => Ok(Convention::ConjugateDisplay),
            other => Err(format!("unknown convention `{other}` (expected thm|conj)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flag {
    /// `n` below the threshold the derivation assumes.
    HypothesisTension,
    /// Exponents outside `-1 < beta <= alpha <= 0`; the value is produced by the
    /// same formulas but carries no certificate.
    OutsideHypothesis,
}

impl Flag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Flag::HypothesisTension => "hypothesis-tension",
            Flag::OutsideHypothesis => "outside-hypothesis",
        }
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub n: usize,
    pub params: Parameters,
    pub point: RegionPoint,
    pub p: usize,
    /// Approximation to `P_n`.
    pub value: ScaledReal,
    pub prefactor: ScaledReal,
    /// The braced sum; for a reduced evaluation, `value / prefactor` of the first leaf.
    pub normalized_sum: f64,
    pub bundle: BoundBundle,
    /// Certificate on `|P_n - value|`.
    pub absolute_bound: ScaledReal,
    pub convention: Convention,
    pub flags: Vec<Flag>,
    /// Canonical evaluations a reduced result was assembled from (empty otherwise).
    pub leaves: Vec<ExpansionResult>,
}

impl ExpansionResult {
    /// Whether the bound is a proved statement for these inputs.
    pub fn certified(&self) -> bool {
        !self.flags.contains(&Flag::OutsideHypothesis)
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    /// Flags joined by `|`, empty when none.
    pub fn flag_string(&self) -> String {
        self.flags
            .iter()
            .map(Flag::as_str)
            .collect::<Vec<_>>()
            .join("|")
    }
}

fn ln_expm1_pos(g: f64) -> f64 {
    // ln(e^g - 1) without overflow for large g
    if g > 1.0 {
        g + (-(-g).exp()).ln_1p()
    } else {
        g.exp_m1().ln()
    }
}

/// Outer prefactor, in [`ScaledReal`] so `e^{n gamma}` never overflows.
pub fn prefactor_outer(n: usize, gamma: f64, params: Parameters) -> ScaledReal {
    let Parameters { alpha, beta } = params;
    let nf = n as f64;
    let ln_em1 = ln_expm1_pos(gamma);
    let ln_ep1 = gamma + (-gamma).exp().ln_1p();
    let ln_e2m1 = ln_expm1_pos(2.0 * gamma);
    let rest = (alpha + beta) * std::f64::consts::LN_2 + gamma * (alpha + beta + 1.0)
        - alpha * ln_em1
        - beta * ln_ep1
        - 0.5 * ((nf * PI).ln() + ln_e2m1);
    ScaledReal::exp(gamma * nf) * ScaledReal::exp(rest)
}

/// Oscillatory prefactor.
pub fn prefactor_osc(n: usize, gamma: f64, params: Parameters) -> f64 {
    let half = gamma / 2.0;
    1.0 / (half.sin().powf(params.alpha + 0.5)
        * half.cos().powf(params.beta + 0.5)
        * (n as f64 * PI).sqrt())
}

fn check_order(n: usize, p: usize, table: &CoefficientTable) -> Result<()> {
    if p == 0 {
        return Err(Error::ZeroOrder);
    }
    if n == 0 {
        return Err(Error::Hypothesis("degree n must be at least 1".into()));
    }
    assert!(
        table.order() >= p,
        "coefficient table of order {} used for p = {p}",
        table.order()
    );
    Ok(())
}

fn outer_unchecked(
    n: usize,
    gamma: f64,
    params: Parameters,
    p: usize,
    table: &CoefficientTable,
) -> Result<ExpansionResult> {
    check_order(n, p, table)?;
    let nf = n as f64;
    let mut sum = 0.0;
    let mut scale = 1.0;
    for j in 0..p {
        sum += table.coeffs[j].re * scale;
        scale /= nf;
    }
    let prefactor = prefactor_outer(n, gamma, params);
    let bundle = c_hat_outer(p, n, gamma, params, table.coeffs[p].re)?;
    let mut flags = Vec::new();
    if bundle.below_threshold() {
        flags.push(Flag::HypothesisTension);
    }
    Ok(ExpansionResult {
        n,
        params,
        point: RegionPoint::Outer { gamma },
        p,
        value: prefactor * sum,
        prefactor,
        normalized_sum: sum,
        absolute_bound: prefactor * bundle.certified_bound,
        bundle,
        convention: Convention::default(),
        flags,
        leaves: Vec::new(),
    })
}

/// `sum_{j<p}` under the chosen convention, at phase `theta`.
pub fn osc_sum(
    coeffs: &[Complex64],
    n: usize,
    p: usize,
    theta: f64,
    convention: Convention,
) -> f64 {
    let nf = n as f64;
    let (c, s) = (theta.cos(), theta.sin());
    let mut scale = 1.0;
    let (mut re, mut im) = (0.0, 0.0);
    for a in &coeffs[..p] {
        re += a.re * scale;
        im += a.im * scale;
        scale /= nf;
    }
    match convention {
        Convention::ThmDisplay => c * re + s * im,
        Convention::ConjugateDisplay => c * re - s * im,
    }
}

fn osc_unchecked(
    n: usize,
    gamma: f64,
    params: Parameters,
    p: usize,
    convention: Convention,
    table: &CoefficientTable,
) -> Result<ExpansionResult> {
    check_order(n, p, table)?;
    let theta = osc_phase(n, gamma, params);
    let sum = osc_sum(&table.coeffs, n, p, theta, convention);
    let prefactor = ScaledReal::from_f64(prefactor_osc(n, gamma, params));
    let a_p = match convention {
        Convention::ConjugateDisplay => table.coeffs[p],
        Convention::ThmDisplay => table.coeffs[p].conj(),
    };
    let bundle = c_hat_osc(p, n, gamma, params, a_p)?;
    Ok(ExpansionResult {
        n,
        params,
        point: RegionPoint::Oscillatory { gamma },
        p,
        value: prefactor * sum,
        prefactor,
        normalized_sum: sum,
        absolute_bound: prefactor * bundle.certified_bound,
        bundle,
        convention,
        flags: Vec::new(),
        leaves: Vec::new(),
    })
}

fn table_matches(table: &CoefficientTable, point: RegionPoint, params: Parameters) -> bool {
    table.t == t_of(point) && table.params == params
}

/// Evaluates at a region point using a precomputed table of order `>= p`.
///
/// Hypotheses are checked; see [`evaluate_point_unchecked`] for the variant
/// used on canonical leaves outside the box.
pub fn evaluate_point_with(
    n: usize,
    point: RegionPoint,
    params: Parameters,
    p: usize,
    convention: Convention,
    table: &CoefficientTable,
) -> Result<ExpansionResult> {
    validate_point(params, point).into_result()?;
    evaluate_point_unchecked(n, point, params, p, convention, table)
}

/// Like [`evaluate_point_with`] but flags, rather than rejects, exponents
/// outside the canonical box.
pub fn evaluate_point_unchecked(
    n: usize,
    point: RegionPoint,
    params: Parameters,
    p: usize,
    convention: Convention,
    table: &CoefficientTable,
) -> Result<ExpansionResult> {
    let params = Parameters::new(params.alpha, params.beta)?;
    assert!(
        table_matches(table, point, params),
        "coefficient table does not belong to this point"
    );
    let mut out = match point {
        RegionPoint::Outer { gamma } => outer_unchecked(n, gamma, params, p, table)?,
        RegionPoint::Oscillatory { gamma } => {
            osc_unchecked(n, gamma, params, p, convention, table)?
        }
    };
    if !params.in_canonical_box() {
        out.flags.push(Flag::OutsideHypothesis);
    }
    Ok(out)
}

/// Outer expansion truncated after `p` terms, with certificate.
pub fn evaluate_outer(
    n: usize,
    gamma: f64,
    params: Parameters,
    p: usize,
) -> Result<ExpansionResult> {
    let point = RegionPoint::outer(gamma)?;
    validate_point(params, point).into_result()?;
    let table = coefficients_at(point, params, p)?;
    outer_unchecked(n, gamma, params, p, &table)
}

/// Oscillatory expansion truncated after `p` terms, with certificate.
pub fn evaluate_osc(
    n: usize,
    gamma: f64,
    params: Parameters,
    p: usize,
    convention: Convention,
) -> Result<ExpansionResult> {
    let point = RegionPoint::oscillatory(gamma)?;
    validate_point(params, point).into_result()?;
    let table = coefficients_at(point, params, p)?;
    osc_unchecked(n, gamma, params, p, convention, &table)
}

/// Dispatches on the region of `point`.
pub fn evaluate(
    n: usize,
    point: RegionPoint,
    params: Parameters,
    p: usize,
    convention: Convention,
) -> Result<ExpansionResult> {
    match point {
        RegionPoint::Outer { gamma } => evaluate_outer(n, gamma, params, p),
        RegionPoint::Oscillatory { gamma } => evaluate_osc(n, gamma, params, p, convention),
    }
}

/// `P_n^(alpha,beta)(x)` for any `alpha, beta > -1` and `|x| != 1`.
///
/// The input is reflected and shifted into `(-1, 0]^2`, `x >= 0`; each leaf
/// degree `n..=n+d` is expanded there and the contiguous relations fold the
/// leaves back. The certificate propagates by the triangle inequality:
/// `sum_k |w_k| * prefactor_k * bound_k` with `w_k` the chain's linear weights.
/// When the canonical exponents still have `beta > alpha` the result is
/// flagged [`Flag::OutsideHypothesis`].
pub fn evaluate_general(
    n: usize,
    params: Parameters,
    x: f64,
    p: usize,
    convention: Convention,
) -> Result<ExpansionResult> {
    let canon = canonicalize(params, x)?;
    let depth = canon.depth();
    if depth > MAX_REDUCTION_DEPTH {
        return Err(Error::ReductionTooDeep {
            depth,
            limit: MAX_REDUCTION_DEPTH,
        });
    }
    let table = coefficients_at(canon.point, canon.params, p)?;
    let leaves = (0..=depth)
        .map(|k| evaluate_point_unchecked(n + k, canon.point, canon.params, p, convention, &table))
        .collect::<Result<Vec<_>>>()?;
    if canon.steps.is_empty() {
        return Ok(leaves.into_iter().next().expect("one leaf"));
    }
    let values: Vec<ScaledReal> = leaves.iter().map(|l| l.value).collect();
    let x_s = ScaledReal::from_f64(canon.x);
    let value = canon.replay(
        n,
        &values,
        &x_s,
        &ScaledReal::from_f64(canon.params.alpha),
        &ScaledReal::from_f64(canon.params.beta),
    );
    let weights = canon.leaf_weights(n);
    let absolute_bound = leaves
        .iter()
        .zip(&weights)
        .fold(ScaledReal::ZERO, |acc, (leaf, w)| {
            acc + leaf.absolute_bound * w.abs()
        });
    let first = &leaves[0];
    let mut flags: Vec<Flag> = leaves
        .iter()
        .flat_map(|l| l.flags.iter().copied())
        .collect();
    flags.sort();
    flags.dedup();
    Ok(ExpansionResult {
        n,
        params,
        point: canon.point,
        p,
        value,
        prefactor: first.prefactor,
        normalized_sum: value.ratio(first.prefactor),
        bundle: first.bundle,
        absolute_bound,
        convention,
        flags,
        leaves,
    })
}

/// The `p` in `1..=p_max` minimizing the certified bound at degree `n`;
/// ties go to the smallest `p`.
pub fn optimal_truncation(
    n: usize,
    gamma: f64,
    params: Parameters,
    region: Region,
    p_max: usize,
) -> Result<(usize, f64)> {
    if p_max == 0 {
        return Err(Error::ZeroOrder);
    }
    let point = RegionPoint::new(region, gamma)?;
    validate_point(params, point).into_result()?;
    let table = coefficients_at(point, params, p_max)?;
    let mut best = (0, f64::INFINITY);
    for p in 1..=p_max {
        let bound = match point {
            RegionPoint::Outer { gamma } => {
                c_hat_outer(p, n, gamma, params, table.coeffs[p].re)?.certified_bound
            }
            RegionPoint::Oscillatory { gamma } => {
                c_hat_osc(p, n, gamma, params, table.coeffs[p])?.certified_bound
            }
        };
        if bound < best.1 {
            best = (p, bound);
        }
    }
    Ok(best)
}
