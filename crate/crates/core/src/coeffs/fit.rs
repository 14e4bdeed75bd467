//! Estimates `A_j` from recurrence values alone, as a cross-check on the
//! coefficient engine.
//!
//! Outer: `P_n / prefactor` is fitted by a polynomial in `1/n` over a
//! geometric ladder of degrees. Oscillatory: `P_n / prefactor` is fitted by
//! `sum_i n^{-i} (X_i cos theta_n - Y_i sin theta_n)` over consecutive degrees,
//! which identifies `A_i = X_i + i Y_i` in the `Re(A_i e^{i theta})` form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bounds::osc_phase;
use crate::error::{Error, Result};
use crate::expand::{prefactor_osc, prefactor_outer};
use crate::oracle::jacobi_recurrence_trace;
use crate::params::{validate_point, Parameters, RegionPoint};

/// Highest coefficient index the fit is trusted for.
pub const MAX_FIT_ORDER: usize = 4;
/// Extra series terms carried beyond `j` to absorb the tail.
const EXTRA_TERMS: usize = 6;
const N_MIN: usize = 32;
const OUTER_LADDER: usize = 28;
const OSC_SPAN: usize = 320;
/// Stability tolerance between fits with `K` and `K+1` terms.
const STABILITY: f64 = 1e-4;
/// Largest acceptable rms residual of the normalized samples.
const MAX_RMS: f64 = 1e-9;

struct Fit {
    coeffs: DVector<f64>,
    rms: f64,
}

fn least_squares(design: DMatrix<f64>, rhs: DVector<f64>) -> Option<Fit> {
    let svd = design.clone().svd(true, true);
    let coeffs = svd.solve(&rhs, 1e-14).ok()?;
    let resid = &design * &coeffs - &rhs;
    let rms = (resid.norm_squared() / rhs.len() as f64).sqrt();
    Some(Fit { coeffs, rms })
}

fn outer_samples(gamma: f64, params: Parameters) -> Vec<(usize, f64)> {
    let ratio = 16f64.powf(1.0 / (OUTER_LADDER - 1) as f64);
    let ladder: Vec<usize> = (0..OUTER_LADDER)
        .map(|k| (N_MIN as f64 * ratio.powi(k as i32)).round() as usize)
        .collect();
    let nmax = *ladder.last().expect("non-empty ladder");
    let trace = jacobi_recurrence_trace(nmax, params, gamma.cosh());
    ladder
        .into_iter()
        .map(|n| (n, trace[n].ratio(prefactor_outer(n, gamma, params))))
        .collect()
}

/// Scaled variable `u = N_MIN / n` keeps the Vandermonde columns in `(0, 1]`.
fn outer_fit(samples: &[(usize, f64)], terms: usize) -> Option<Fit> {
    let rows = samples.len();
    let design = DMatrix::from_fn(rows, terms, |r, c| {
        (N_MIN as f64 / samples[r].0 as f64).powi(c as i32)
    });
    let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.1));
    least_squares(design, rhs)
}

fn osc_samples(gamma: f64, params: Parameters) -> Vec<(usize, f64, f64)> {
    let nmax = N_MIN + OSC_SPAN;
    let trace = jacobi_recurrence_trace(nmax, params, gamma.cos());
    (N_MIN..=nmax)
        .map(|n| {
            let r = trace[n].to_f64() / prefactor_osc(n, gamma, params);
            (n, osc_phase(n, gamma, params), r)
        })
        .collect()
}

fn osc_fit(samples: &[(usize, f64, f64)], terms: usize) -> Option<Fit> {
    let rows = samples.len();
    let design = DMatrix::from_fn(rows, 2 * terms, |r, c| {
        let (n, theta, _) = samples[r];
        let u = (N_MIN as f64 / n as f64).powi((c / 2) as i32);
        if c % 2 == 0 {
            u * theta.cos()
        } else {
            -u * theta.sin()
        }
    });
    let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.2));
    least_squares(design, rhs)
}

fn unscale(v: f64, j: usize) -> f64 {
    v * (N_MIN as f64).powi(j as i32)
}

/// Fitted `A_j` at a region point, `j <= 4`.
///
/// Two fits with `j+6` and `j+7` series terms must agree to `1e-4` relative
/// and reproduce the samples to `1e-9` rms; otherwise the fit is reported as
/// ill-conditioned together with its residual.
pub fn coefficient_fit_oracle(
    point: RegionPoint,
    params: Parameters,
    j: usize,
) -> Result<Complex64> {
    validate_point(params, point).into_result()?;
    if j > MAX_FIT_ORDER {
        return Err(Error::IllConditionedFit {
            j,
            reason: format!("order above {MAX_FIT_ORDER} is not supported"),
            residual: f64::NAN,
        });
    }
    let terms = j + EXTRA_TERMS;
    let ill = |reason: &str, residual: f64| Error::IllConditionedFit {
        j,
        reason: reason.to_string(),
        residual,
    };
    let (estimate, other, rms) = match point {
        RegionPoint::Outer { gamma } => {
            let samples = outer_samples(gamma, params);
            let a = outer_fit(&samples, terms).ok_or_else(|| ill("solve failed", f64::NAN))?;
            let b = outer_fit(&samples, terms + 1).ok_or_else(|| ill("solve failed", a.rms))?;
            (
                Complex64::new(unscale(a.coeffs[j], j), 0.0),
                Complex64::new(unscale(b.coeffs[j], j), 0.0),
                a.rms,
            )
        }
        RegionPoint::Oscillatory { gamma } => {
            let samples = osc_samples(gamma, params);
            let a = osc_fit(&samples, terms).ok_or_else(|| ill("solve failed", f64::NAN))?;
            let b = osc_fit(&samples, terms + 1).ok_or_else(|| ill("solve failed", a.rms))?;
            let pick = |f: &Fit| {
                Complex64::new(unscale(f.coeffs[2 * j], j), unscale(f.coeffs[2 * j + 1], j))
            };
            (pick(&a), pick(&b), a.rms)
        }
    };
    if rms.is_nan() || rms > MAX_RMS {
        return Err(ill("samples not reproduced", rms));
    }
    if (estimate - other).norm() > STABILITY * estimate.norm().max(1.0) {
        return Err(ill("estimate unstable under one extra term", rms));
    }
    Ok(estimate)
}
