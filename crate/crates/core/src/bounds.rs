//! Explicit constants of the two error certificates.
//!
//! Outer region (`x = cosh gamma`):
//!
//! ```text
//! delta = 1/2 min{1, sqrt(2g), sqrt(log(4(cosh g + 1)) - g),
//!                 sqrt(log((cosh g + 2)^2 / (cosh g (cosh g - 1))))}
//! c_p   = (1 + (p(p-1) delta + 2p + 2)/4 * ((p+1)/(delta^2 e))^{p+1})
//!         * e^{2g} / (4^p delta^{2p+1}) * 10 (cosh g + 2)^5 / ((beta+1)(cosh g - 1))
//! c^_p  = |A_p| + c_{p+1} Gamma(p + 3/2) / n
//! ```
//!
//! Oscillatory region (`x = cos gamma`):
//!
//! ```text
//! c+_p = pi + 24 pi g^{2 alpha}
//!        + 128 sqrt(3 pi) (4e+1)^{alpha+1} / ((beta+1) g^{p+3})
//!        + 128 sqrt(3 pi) B(alpha+1, beta+1) / g^{p+3}
//!        + (9280 g^alpha + 1184 pi (pi - g) g^beta) / ((beta+1)^{3/2} g^{p+1})
//! c^_p = |Re(A_p e^{i(N g + kappa)})| + c+_{p+1} Gamma(p + 3/2) / n
//! N = (alpha + beta + 1)/2 + n,   kappa = -(alpha/2 + 1/4) pi
//! ```
//!
//! All evaluation is plain binary64: the bounds need a few correct digits,
//! and their magnitudes stay far inside the representable range.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{finite, Error, Result};
use crate::params::{Parameters, Region};

/// `Gamma(k + 1/2) = sqrt(pi) * prod_{i<k} (i + 1/2)`.
pub fn gamma_half(k: usize) -> f64 {
    (0..k).fold(PI.sqrt(), |acc, i| acc * (i as f64 + 0.5))
}

/// `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)` through log-Gamma.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    finite("a", a)?;
    finite("b", b)?;
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "Beta function needs positive arguments, got ({a}, {b})"
        )));
    }
    Ok((ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp())
}

/// The four candidates whose minimum (halved) is `delta`.
fn delta_terms(gamma: f64) -> [f64; 4] {
    let c = gamma.cosh();
    let r2 = 2.0 * gamma;
    let r3 = (4.0 * (c + 1.0)).ln() - gamma;
    let r4 = ((c + 2.0).powi(2) / (c * (c - 1.0))).ln();
    assert!(
        r2 > 0.0 && r3 > 0.0 && r4 > 0.0,
        "delta radicands must be positive (gamma = {gamma}: {r2}, {r3}, {r4})"
    );
    [1.0, r2.sqrt(), r3.sqrt(), r4.sqrt()]
}

/// `delta(gamma)`, always in `(0, 1/2]`.
pub fn delta_of(gamma: f64) -> Result<f64> {
    finite("gamma", gamma)?;
    if gamma <= 0.0 {
        return Err(Error::GammaOutOfRange {
            gamma,
            region: "outer",
            range: "(0, inf)",
        });
    }
    Ok(0.5 * delta_terms(gamma).into_iter().fold(f64::INFINITY, f64::min))
}

/// `10 (cosh g + 2)^5 / ((beta + 1)(cosh g - 1))`, shared by `c_p` and the
/// coefficient magnitude bound.
fn outer_envelope(gamma: f64, beta: f64) -> f64 {
    let c = gamma.cosh();
    10.0 * (c + 2.0).powi(5) / ((beta + 1.0) * (c - 1.0))
}

fn check_outer(p: usize, gamma: f64, params: Parameters) -> Result<f64> {
    if p == 0 {
        return Err(Error::ZeroOrder);
    }
    finite("beta", params.beta)?;
    if params.beta <= -1.0 {
        return Err(Error::ExponentOutOfRange {
            name: "beta",
            value: params.beta,
        });
    }
    delta_of(gamma)
}

/// `c_p` of the outer certificate.
pub fn c_p_outer(p: usize, gamma: f64, params: Parameters) -> Result<f64> {
    let delta = check_outer(p, gamma, params)?;
    let pf = p as f64;
    let growth = ((pf + 1.0) / (delta * delta * E)).powf(pf + 1.0);
    let lead = 1.0 + 0.25 * (pf * (pf - 1.0) * delta + 2.0 * pf + 2.0) * growth;
    let scale = (2.0 * gamma).exp() / (4f64.powi(p as i32) * delta.powi(2 * p as i32 + 1));
    Ok(lead * scale * outer_envelope(gamma, params.beta))
}

fn check_osc(p: usize, gamma: f64, params: Parameters) -> Result<()> {
    if p == 0 {
        return Err(Error::ZeroOrder);
    }
    finite("gamma", gamma)?;
    if !(gamma > 0.0 && gamma <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::GammaOutOfRange {
            gamma,
            region: "oscillatory",
            range: "(0, pi/2]",
        });
    }
    Parameters::new(params.alpha, params.beta).map(|_| ())
}

/// `c+_p` of the oscillatory certificate.
pub fn c_p_osc(p: usize, gamma: f64, params: Parameters) -> Result<f64> {
    check_osc(p, gamma, params)?;
    let Parameters { alpha, beta } = params;
    let k = 128.0 * (3.0 * PI).sqrt();
    let g3 = gamma.powi(p as i32 + 3);
    let g1 = gamma.powi(p as i32 + 1);
    let b1 = beta + 1.0;
    Ok(PI
        + 24.0 * PI * gamma.powf(2.0 * alpha)
        + k * (4.0 * E + 1.0).powf(alpha + 1.0) / (b1 * g3)
        + k * beta_fn(alpha + 1.0, beta + 1.0)? / g3
        + (9280.0 * gamma.powf(alpha) + 1184.0 * PI * (PI - gamma) * gamma.powf(beta))
            / (b1.powf(1.5) * g1))
}

/// Constants of one certificate at a fixed `(n, p, gamma, alpha, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundBundle {
    pub region: Region,
    /// Outer region only.
    pub delta: Option<f64>,
    pub p: usize,
    pub n: usize,
    /// `c_p` (outer) or `c+_p` (oscillatory).
    pub c_p: f64,
    /// `c_{p+1}` or `c+_{p+1}`.
    pub c_p_next: f64,
    /// `c^_p(n)`, n-dependent as displayed.
    pub c_hat_p: f64,
    /// `c^_p / n^p`.
    pub sharp_bound: f64,
    /// `c_p Gamma(p + 1/2) / n^p`.
    pub coarse_bound: f64,
    /// Smallest `n` meeting the derivation's side conditions.
    pub n_threshold: usize,
    /// Bound on the normalized remainder.
    pub certified_bound: f64,
}

impl BoundBundle {
    pub fn below_threshold(&self) -> bool {
        self.n < self.n_threshold
    }
}

fn npow(n: usize, p: usize) -> f64 {
    (n as f64).powi(p as i32)
}

/// Outer certificate at degree `n` for a computed `A_p(e^gamma)`.
///
/// The certified bound is the smaller of the sharp `c^_p/n^p` and the coarse
/// `c_p Gamma(p+1/2)/n^p`; both are proved bounds on the same remainder.
pub fn c_hat_outer(
    p: usize,
    n: usize,
    gamma: f64,
    params: Parameters,
    a_p: f64,
) -> Result<BoundBundle> {
    let delta = check_outer(p, gamma, params)?;
    if n == 0 {
        return Err(Error::Hypothesis("degree n must be at least 1".into()));
    }
    let c_p = c_p_outer(p, gamma, params)?;
    let c_p_next = c_p_outer(p + 1, gamma, params)?;
    let c_hat_p = a_p.abs() + c_p_next * gamma_half(p + 1) / n as f64;
    let sharp_bound = c_hat_p / npow(n, p);
    let coarse_bound = c_p * gamma_half(p) / npow(n, p);
    let n_threshold = p.max((1.0 / (2.0 * delta)).ceil() as usize);
    Ok(BoundBundle {
        region: Region::Outer,
        delta: Some(delta),
        p,
        n,
        c_p,
        c_p_next,
        c_hat_p,
        sharp_bound,
        coarse_bound,
        n_threshold,
        certified_bound: sharp_bound.min(coarse_bound),
    })
}

/// `N = (alpha + beta + 1)/2 + n`.
pub fn big_n(n: usize, params: Parameters) -> f64 {
    (params.alpha + params.beta + 1.0) / 2.0 + n as f64
}

/// `kappa = -(alpha/2 + 1/4) pi`.
pub fn kappa(params: Parameters) -> f64 {
    -(params.alpha / 2.0 + 0.25) * PI
}

/// Phase `N gamma + kappa` of the oscillatory expansion.
pub fn osc_phase(n: usize, gamma: f64, params: Parameters) -> f64 {
    big_n(n, params) * gamma + kappa(params)
}

/// Oscillatory certificate at degree `n` for a computed `A_p(e^{i gamma})`.
///
/// The derivation has no side condition on `n`, so `n_threshold` is 1.
pub fn c_hat_osc(
    p: usize,
    n: usize,
    gamma: f64,
    params: Parameters,
    a_p: Complex64,
) -> Result<BoundBundle> {
    check_osc(p, gamma, params)?;
    if n == 0 {
        return Err(Error::Hypothesis("degree n must be at least 1".into()));
    }
    let c_p = c_p_osc(p, gamma, params)?;
    let c_p_next = c_p_osc(p + 1, gamma, params)?;
    let rotated = a_p * Complex64::from_polar(1.0, osc_phase(n, gamma, params));
    let c_hat_p = rotated.re.abs() + c_p_next * gamma_half(p + 1) / n as f64;
    let sharp_bound = c_hat_p / npow(n, p);
    Ok(BoundBundle {
        region: Region::Oscillatory,
        delta: None,
        p,
        n,
        c_p,
        c_p_next,
        c_hat_p,
        sharp_bound,
        coarse_bound: c_p * gamma_half(p) / npow(n, p),
        n_threshold: 1,
        certified_bound: sharp_bound,
    })
}

/// Upper bound on `|A_j(e^gamma)|`:
/// `Gamma(j+1/2) sqrt(e^{2g}-1) / (4 pi^{3/2} e^g (e^g-1)^alpha (e^g+1)^beta)`
/// `* 10 (cosh g + 2)^5 / ((beta+1)(cosh g - 1)) / (2 delta)^{2j+1}`.
pub fn coeff_magnitude_bound_outer(j: usize, gamma: f64, params: Parameters) -> Result<f64> {
    let delta = check_outer(1, gamma, params)?;
    let e = gamma.exp();
    let head = gamma_half(j) * (e * e - 1.0).sqrt()
        / (4.0 * PI.powf(1.5) * e * (e - 1.0).powf(params.alpha) * (e + 1.0).powf(params.beta));
    Ok(head * outer_envelope(gamma, params.beta) / (2.0 * delta).powi(2 * j as i32 + 1))
}
